//! Plain-text dump of expression DAGs, and its parser.
//!
//! Each reachable node is written once, children before parents:
//!
//! ```text
//! ; holoweight-expr 1
//! (let %0 (coord 1))
//! (let %1 (power %0 2))
//! (root %1)
//! ```
//!
//! Labels are renumbered densely per dump, so the text depends only on the
//! structure of the expression and not on the pool it came from.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_complex::Complex64;

use super::pool::{ExprPool, FieldExpr, Node, Real, Scalar};

pub const HEADER: &str = "; holoweight-expr 1";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct SexprError {
    pub line: usize,
    pub message: String,
}

pub fn dump(pool: &ExprPool, root: FieldExpr) -> String {
    let order = pool.reachable(&[root]);
    let label: HashMap<FieldExpr, usize> = order.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let l = |e: &FieldExpr| format!("%{}", label[e]);
    let list = |xs: &[FieldExpr]| xs.iter().map(l).collect::<Vec<_>>().join(" ");
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    for (i, id) in order.iter().enumerate() {
        let body = match pool.node(*id) {
            Node::Const(c) => format!("(const {:?} {:?})", c.0.re, c.0.im),
            Node::Coord(j) => format!("(coord {j})"),
            Node::Sum(xs) => format!("(sum {})", list(xs)),
            Node::Product(xs) => format!("(product {})", list(xs)),
            Node::Scale(c, x) => format!("(scale {:?} {:?} {})", c.0.re, c.0.im, l(x)),
            Node::Power(x, n) => format!("(power {} {n})", l(x)),
            Node::Recip(x) => format!("(recip {})", l(x)),
            Node::Exp(x) => format!("(exp {})", l(x)),
            Node::Sqrt(x) => format!("(sqrt {})", l(x)),
            Node::SmoothStepE(x) => format!("(step-e {})", l(x)),
            Node::CollarQuotient { num, delta, inner } => {
                format!("(collar-quotient {} {} {:?})", l(num), l(delta), inner.0)
            }
        };
        let _ = writeln!(out, "(let %{i} {body})");
    }
    let _ = writeln!(out, "(root {})", l(&root));
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Sx {
    Atom(String),
    List(Vec<Sx>),
}

fn tokenize_line(line: &str) -> Vec<String> {
    let line = line.split(';').next().unwrap_or("");
    let mut toks = Vec::new();
    let mut cur = String::new();
    for ch in line.chars() {
        match ch {
            '(' | ')' => {
                if !cur.is_empty() {
                    toks.push(std::mem::take(&mut cur));
                }
                toks.push(ch.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    toks.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        toks.push(cur);
    }
    toks
}

fn read_list(toks: &[String], pos: &mut usize, depth: usize) -> Result<Sx, String> {
    if depth > 8 {
        return Err("nesting too deep".into());
    }
    match toks.get(*pos).map(String::as_str) {
        None => Err("unexpected end of line".into()),
        Some("(") => {
            *pos += 1;
            let mut items = Vec::new();
            loop {
                match toks.get(*pos).map(String::as_str) {
                    None => return Err("unclosed '('".into()),
                    Some(")") => {
                        *pos += 1;
                        return Ok(Sx::List(items));
                    }
                    _ => items.push(read_list(toks, pos, depth + 1)?),
                }
            }
        }
        Some(")") => Err("unexpected ')'".into()),
        Some(a) => {
            *pos += 1;
            Ok(Sx::Atom(a.to_string()))
        }
    }
}

struct Reader<'a> {
    pool: &'a mut ExprPool,
    labels: HashMap<String, FieldExpr>,
}

impl Reader<'_> {
    fn atom<'s>(&self, s: &'s Sx) -> Result<&'s str, String> {
        match s {
            Sx::Atom(a) => Ok(a),
            Sx::List(_) => Err("expected an atom".into()),
        }
    }

    fn num(&self, s: &Sx) -> Result<f64, String> {
        let a = self.atom(s)?;
        a.parse::<f64>().map_err(|_| format!("bad number '{a}'"))
    }

    fn uint(&self, s: &Sx) -> Result<u32, String> {
        let a = self.atom(s)?;
        a.parse::<u32>().map_err(|_| format!("bad integer '{a}'"))
    }

    fn label(&self, s: &Sx) -> Result<FieldExpr, String> {
        let a = self.atom(s)?;
        self.labels
            .get(a)
            .copied()
            .ok_or_else(|| format!("undefined label '{a}'"))
    }

    fn node(&mut self, s: &Sx) -> Result<FieldExpr, String> {
        let Sx::List(items) = s else {
            return Err("expected a node form".into());
        };
        let (head, rest) = items.split_first().ok_or("empty form")?;
        let head = self.atom(head)?;
        let arity = |n: usize| -> Result<(), String> {
            if rest.len() == n {
                Ok(())
            } else {
                Err(format!("'{head}' takes {n} arguments, got {}", rest.len()))
            }
        };
        let node = match head {
            "const" => {
                arity(2)?;
                Node::Const(Scalar::new(Complex64::new(
                    self.num(&rest[0])?,
                    self.num(&rest[1])?,
                )))
            }
            "coord" => {
                arity(1)?;
                let j = self.uint(&rest[0])?;
                if !(1..=u8::MAX as u32).contains(&j) {
                    return Err(format!("coordinate axis {j} out of range"));
                }
                Node::Coord(j as u8)
            }
            "sum" | "product" => {
                if rest.is_empty() {
                    return Err(format!("'{head}' needs at least one child"));
                }
                let xs = rest
                    .iter()
                    .map(|x| self.label(x))
                    .collect::<Result<Vec<_>, _>>()?
                    .into_boxed_slice();
                if head == "sum" {
                    Node::Sum(xs)
                } else {
                    Node::Product(xs)
                }
            }
            "scale" => {
                arity(3)?;
                let c = Complex64::new(self.num(&rest[0])?, self.num(&rest[1])?);
                Node::Scale(Scalar::new(c), self.label(&rest[2])?)
            }
            "power" => {
                arity(2)?;
                let n = self.uint(&rest[1])?;
                if n == 0 {
                    return Err("power exponent must be at least 1".into());
                }
                Node::Power(self.label(&rest[0])?, n)
            }
            "recip" | "exp" | "sqrt" | "step-e" => {
                arity(1)?;
                let x = self.label(&rest[0])?;
                match head {
                    "recip" => Node::Recip(x),
                    "exp" => Node::Exp(x),
                    "sqrt" => Node::Sqrt(x),
                    _ => Node::SmoothStepE(x),
                }
            }
            "collar-quotient" => {
                arity(3)?;
                Node::CollarQuotient {
                    num: self.label(&rest[0])?,
                    delta: self.label(&rest[1])?,
                    inner: Real(self.num(&rest[2])?),
                }
            }
            other => return Err(format!("unknown node kind '{other}'")),
        };
        Ok(self.pool.raw(node))
    }
}

/// Parses a dump into `pool`, interning nodes verbatim.
///
/// Parsing the dump of `e` back into the pool that produced it returns `e`.
pub fn parse(text: &str, pool: &mut ExprPool) -> Result<FieldExpr, SexprError> {
    let mut reader = Reader {
        pool,
        labels: HashMap::new(),
    };
    let mut root = None;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let err = |message: String| SexprError {
            line: lineno,
            message,
        };
        let toks = tokenize_line(line);
        if toks.is_empty() {
            continue;
        }
        let mut pos = 0;
        let form = read_list(&toks, &mut pos, 0).map_err(err)?;
        if pos != toks.len() {
            return Err(err("trailing tokens after form".into()));
        }
        let Sx::List(items) = form else {
            return Err(err("expected '(let ...)' or '(root ...)'".into()));
        };
        match items.first() {
            Some(Sx::Atom(h)) if h == "let" && items.len() == 3 => {
                let name = reader.atom(&items[1]).map_err(err)?.to_string();
                if !name.starts_with('%') {
                    return Err(err(format!("label '{name}' must start with '%'")));
                }
                if reader.labels.contains_key(&name) {
                    return Err(err(format!("label '{name}' defined twice")));
                }
                let id = reader.node(&items[2]).map_err(err)?;
                reader.labels.insert(name, id);
            }
            Some(Sx::Atom(h)) if h == "root" && items.len() == 2 => {
                if root.is_some() {
                    return Err(err("more than one root".into()));
                }
                root = Some(reader.label(&items[1]).map_err(err)?);
            }
            _ => return Err(err("expected '(let %label form)' or '(root %label)'".into())),
        }
    }
    root.ok_or(SexprError {
        line: text.lines().count(),
        message: "missing '(root ...)'".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_of_small_expression() {
        let mut p = ExprPool::new();
        let x = p.coord(1);
        let y = p.coord(2);
        let x2 = p.power(x, 2);
        let s = p.add(x2, y);
        let e = p.exp(s);
        let text = dump(&p, e);
        let expected = "\
; holoweight-expr 1
(let %0 (coord 1))
(let %1 (coord 2))
(let %2 (power %0 2))
(let %3 (sum %1 %2))
(let %4 (exp %3))
(root %4)
";
        assert_eq!(text, expected);
    }

    #[test]
    fn round_trip_into_same_pool_returns_same_handle() {
        let mut p = ExprPool::new();
        let x = p.coord(1);
        let one = p.one();
        let q = p.collar_quotient(one, x, 0.05);
        let c = p.scale(Complex64::new(0.0, -1.5), q);
        let text = dump(&p, c);
        assert_eq!(parse(&text, &mut p).unwrap(), c);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let mut p = ExprPool::new();
        let err = parse("(let %0 (coord 1))\n(let %1 (sum %0 %9))\n", &mut p).unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.message.contains("%9"));
        assert!(parse("(let %0 (coord 0))\n(root %0)", &mut p).is_err());
        assert!(parse("(let %0 (coord 1))", &mut p).is_err());
    }
}
