//! Linearized evaluation of expression DAGs.

use std::cell::RefCell;

use num_complex::Complex64;

use super::pool::{smooth_step_e, ExprPool, FieldExpr, Node};
use super::FieldError;

/// Relative slack on the collar guard: quotients are zero for
/// `δ < inner·(1 − GUARD_SLACK)`.
pub const GUARD_SLACK: f64 = 1e-9;

#[derive(Clone, Debug)]
enum Op {
    Const(Complex64),
    Coord(usize),
    /// `Σ coef_i · v_i` over `args[start..start+len]` and `coefs[start..]`.
    Lin {
        start: u32,
        len: u32,
        real: bool,
    },
    Product {
        start: u32,
        len: u32,
        real: bool,
    },
    Scale(Complex64, u32),
    Power(u32, i32),
    Recip(u32),
    Exp(u32),
    Sqrt(u32),
    SmoothStepE(u32),
    Quotient {
        num: u32,
        delta: u32,
        threshold: f64,
    },
}

/// A compiled, pool-independent program evaluating one or more roots.
///
/// Products use strong-zero semantics: a factor that is exactly zero makes
/// the product zero even when another factor is infinite. This is what lets
/// guarded singular factors (the `1/t²` in `e'(t)`, `1/√ρ` at the origin)
/// sit next to the exactly-vanishing factor that cancels them.
///
/// Nodes whose value is real by construction are evaluated in real
/// arithmetic; `Scale` nodes feeding only sums are folded into weighted sums.
#[derive(Clone, Debug)]
pub struct Tape {
    ops: Vec<Op>,
    args: Vec<u32>,
    coefs: Vec<Complex64>,
    roots: Vec<u32>,
    max_axis: usize,
}

thread_local! {
    static SCRATCH: RefCell<Vec<Complex64>> = const { RefCell::new(Vec::new()) };
}

fn real_valued(node: &Node, real: &[bool]) -> bool {
    let r = |e: &FieldExpr| real[e.index()];
    match node {
        Node::Const(c) => c.0.im == 0.0,
        Node::Coord(_) | Node::SmoothStepE(_) => true,
        Node::Sum(xs) | Node::Product(xs) => xs.iter().all(r),
        Node::Scale(c, x) => c.0.im == 0.0 && r(x),
        // √ and 1/x of reals stay real (NaN/inf surface as guard violations)
        Node::Power(x, _) | Node::Recip(x) | Node::Exp(x) | Node::Sqrt(x) => r(x),
        Node::CollarQuotient { num, delta, .. } => r(num) && r(delta),
    }
}

impl Tape {
    pub fn compile(pool: &ExprPool, roots: &[FieldExpr]) -> Self {
        let order = pool.reachable(roots);
        let mut real = vec![false; pool.len()];
        // A Scale node is materialized only if something other than a Sum uses it.
        let mut needed = vec![false; pool.len()];
        for r in roots {
            needed[r.index()] = true;
        }
        for id in &order {
            let node = pool.node(*id);
            real[id.index()] = real_valued(node, &real);
            if !matches!(node, Node::Sum(_)) {
                for c in node.children() {
                    needed[c.index()] = true;
                }
            }
        }
        let emitted: Vec<FieldExpr> = order
            .iter()
            .copied()
            .filter(|id| !matches!(pool.node(*id), Node::Scale(..)) || needed[id.index()])
            .collect();
        let mut slot = vec![u32::MAX; pool.len()];
        for (i, id) in emitted.iter().enumerate() {
            slot[id.index()] = i as u32;
        }
        let s = |e: &FieldExpr| slot[e.index()];
        let mut ops = Vec::with_capacity(emitted.len());
        let mut args = Vec::new();
        let mut coefs = Vec::new();
        let mut max_axis = 0usize;
        for id in &emitted {
            let is_real = real[id.index()];
            let op = match pool.node(*id) {
                Node::Const(c) => Op::Const(c.0),
                Node::Coord(j) => {
                    max_axis = max_axis.max(*j as usize);
                    Op::Coord(*j as usize - 1)
                }
                Node::Sum(xs) => {
                    let start = args.len() as u32;
                    for x in xs.iter() {
                        match pool.node(*x) {
                            Node::Scale(c, y) if !needed[x.index()] => {
                                args.push(s(y));
                                coefs.push(c.0);
                            }
                            _ => {
                                args.push(s(x));
                                coefs.push(Complex64::new(1.0, 0.0));
                            }
                        }
                    }
                    Op::Lin {
                        start,
                        len: xs.len() as u32,
                        real: is_real,
                    }
                }
                Node::Product(xs) => {
                    let start = args.len() as u32;
                    args.extend(xs.iter().map(s));
                    coefs.resize(args.len(), Complex64::new(1.0, 0.0));
                    Op::Product {
                        start,
                        len: xs.len() as u32,
                        real: is_real,
                    }
                }
                Node::Scale(c, x) => Op::Scale(c.0, s(x)),
                Node::Power(x, n) => Op::Power(s(x), *n as i32),
                Node::Recip(x) => Op::Recip(s(x)),
                Node::Exp(x) => Op::Exp(s(x)),
                Node::Sqrt(x) => Op::Sqrt(s(x)),
                Node::SmoothStepE(x) => Op::SmoothStepE(s(x)),
                Node::CollarQuotient { num, delta, inner } => Op::Quotient {
                    num: s(num),
                    delta: s(delta),
                    threshold: inner.0 * (1.0 - GUARD_SLACK),
                },
            };
            ops.push(op);
        }
        Tape {
            ops,
            args,
            coefs,
            roots: roots.iter().map(s).collect(),
            max_axis,
        }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn num_roots(&self) -> usize {
        self.roots.len()
    }

    /// Value of the first root at `point`.
    pub fn eval(&self, point: &[f64]) -> Result<Complex64, FieldError> {
        let mut out = [Complex64::new(0.0, 0.0)];
        self.eval_into(point, &mut out[..1.min(self.roots.len())])?;
        Ok(out[0])
    }

    /// Values of the first `out.len()` roots at `point`.
    pub fn eval_into(&self, point: &[f64], out: &mut [Complex64]) -> Result<(), FieldError> {
        if point.len() < self.max_axis {
            return Err(FieldError::Dimension {
                needed: self.max_axis,
                got: point.len(),
            });
        }
        SCRATCH.with(|cell| {
            let mut vals = cell.borrow_mut();
            vals.clear();
            vals.reserve(self.ops.len());
            for op in &self.ops {
                let v = self.step(op, point, &vals);
                vals.push(v);
            }
            for (o, &r) in out.iter_mut().zip(&self.roots) {
                let v = vals[r as usize];
                if !(v.re.is_finite() && v.im.is_finite()) {
                    let first_bad = self
                        .ops
                        .iter()
                        .zip(vals.iter())
                        .position(|(op, v)| {
                            !(v.re.is_finite() && v.im.is_finite())
                                && matches!(op, Op::Recip(_) | Op::Sqrt(_) | Op::Quotient { .. })
                        })
                        .unwrap_or(r as usize);
                    return Err(FieldError::DomainViolation {
                        op: first_bad,
                        point: point.to_vec(),
                    });
                }
                *o = v;
            }
            Ok(())
        })
    }

    #[inline]
    fn step(&self, op: &Op, point: &[f64], vals: &[Complex64]) -> Complex64 {
        let zero = Complex64::new(0.0, 0.0);
        let v = |i: &u32| vals[*i as usize];
        let re = |x: f64| Complex64::new(x, 0.0);
        match op {
            Op::Const(c) => *c,
            Op::Coord(j) => re(point[*j]),
            Op::Lin { start, len, real } => {
                let (a, b) = (*start as usize, (*start + *len) as usize);
                let xs = &self.args[a..b];
                let cs = &self.coefs[a..b];
                if *real {
                    re(xs
                        .iter()
                        .zip(cs)
                        .map(|(i, c)| c.re * vals[*i as usize].re)
                        .sum())
                } else {
                    xs.iter()
                        .zip(cs)
                        .fold(zero, |acc, (i, c)| acc + mul(*c, v(i)))
                }
            }
            Op::Product { start, len, real } => {
                let xs = &self.args[*start as usize..(*start + *len) as usize];
                if *real {
                    let mut acc = 1.0;
                    for i in xs {
                        let x = vals[*i as usize].re;
                        if x == 0.0 {
                            return zero;
                        }
                        acc *= x;
                    }
                    re(acc)
                } else {
                    let mut acc = Complex64::new(1.0, 0.0);
                    for i in xs {
                        let x = v(i);
                        if x.re == 0.0 && x.im == 0.0 {
                            return zero;
                        }
                        acc = mul(acc, x);
                    }
                    acc
                }
            }
            Op::Scale(c, x) => mul(*c, v(x)),
            Op::Power(x, n) => {
                let b = v(x);
                if b.im == 0.0 {
                    re(b.re.powi(*n))
                } else {
                    b.powi(*n)
                }
            }
            Op::Recip(x) => {
                let b = v(x);
                if b.im == 0.0 {
                    re(1.0 / b.re)
                } else {
                    b.inv()
                }
            }
            Op::Exp(x) => {
                let b = v(x);
                if b.im == 0.0 {
                    re(b.re.exp())
                } else {
                    b.exp()
                }
            }
            Op::Sqrt(x) => {
                let b = v(x);
                if b.im == 0.0 {
                    // NaN for negative arguments surfaces as a guard violation
                    re(b.re.sqrt())
                } else {
                    b.sqrt()
                }
            }
            Op::SmoothStepE(x) => re(smooth_step_e(v(x).re)),
            Op::Quotient {
                num,
                delta,
                threshold,
            } => {
                let d = v(delta);
                if d.re < *threshold {
                    zero
                } else {
                    let n = v(num);
                    if d.im == 0.0 {
                        Complex64::new(n.re / d.re, n.im / d.re)
                    } else {
                        n / d
                    }
                }
            }
        }
    }
}

/// Complex product that stays exact for real operands.
#[inline]
fn mul(a: Complex64, b: Complex64) -> Complex64 {
    if a.im == 0.0 {
        Complex64::new(a.re * b.re, a.re * b.im)
    } else if b.im == 0.0 {
        Complex64::new(a.re * b.re, a.im * b.re)
    } else {
        a * b
    }
}

impl ExprPool {
    /// Evaluates `e` at `point` (compiles a throwaway tape).
    pub fn eval(&self, e: FieldExpr, point: &[f64]) -> Result<Complex64, FieldError> {
        Tape::compile(self, &[e]).eval(point)
    }
}
