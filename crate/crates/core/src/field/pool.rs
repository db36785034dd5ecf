//! Hash-consed arena of expression nodes.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_complex::Complex64;

/// Handle to a node inside an [`ExprPool`].
///
/// Handles are only meaningful for the pool that issued them. Children always
/// carry smaller indices than their parents, so index order is a topological
/// order of the DAG.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldExpr(pub(crate) u32);

impl FieldExpr {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for FieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "%{}", self.0)
    }
}

/// Complex constant compared and hashed by bit pattern.
#[derive(Clone, Copy, Debug)]
pub struct Scalar(pub Complex64);

impl Scalar {
    pub fn new(c: Complex64) -> Self {
        // fold -0.0 into +0.0 so that equal values share one node
        let norm = |x: f64| if x == 0.0 { 0.0 } else { x };
        Scalar(Complex64::new(norm(c.re), norm(c.im)))
    }

    fn bits(&self) -> (u64, u64) {
        (self.0.re.to_bits(), self.0.im.to_bits())
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        self.bits() == other.bits()
    }
}

impl Eq for Scalar {}

impl std::hash::Hash for Scalar {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.bits().hash(state);
    }
}

/// Real parameter compared and hashed by bit pattern.
#[derive(Clone, Copy, Debug)]
pub struct Real(pub f64);

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits()
    }
}

impl Eq for Real {}

impl std::hash::Hash for Real {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state);
    }
}

/// One node of the expression IR.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Const(Scalar),
    /// Real coordinate `x_j`, 1-based.
    Coord(u8),
    Sum(Box<[FieldExpr]>),
    Product(Box<[FieldExpr]>),
    Scale(Scalar, FieldExpr),
    Power(FieldExpr, u32),
    Recip(FieldExpr),
    Exp(FieldExpr),
    Sqrt(FieldExpr),
    /// `e(t) = exp(-1/t)` for `t > 0`, else `0`.
    SmoothStepE(FieldExpr),
    /// `num / delta`, short-circuited to zero where `delta < inner`.
    ///
    /// Contract: `num` vanishes identically on `{delta < inner}`.
    CollarQuotient {
        num: FieldExpr,
        delta: FieldExpr,
        inner: Real,
    },
}

impl Node {
    /// Children in evaluation order.
    pub fn children(&self) -> Vec<FieldExpr> {
        match self {
            Node::Const(_) | Node::Coord(_) => Vec::new(),
            Node::Sum(xs) | Node::Product(xs) => xs.to_vec(),
            Node::Scale(_, x)
            | Node::Power(x, _)
            | Node::Recip(x)
            | Node::Exp(x)
            | Node::Sqrt(x)
            | Node::SmoothStepE(x) => vec![*x],
            Node::CollarQuotient { num, delta, .. } => vec![*num, *delta],
        }
    }
}

/// Arena with structural sharing: interning an existing node returns the
/// existing handle.
///
/// Construction needs `&mut self`, so building happens in a single phase;
/// compiled [`Tape`](super::Tape)s are independent of the pool and can be
/// evaluated from any number of threads afterwards.
#[derive(Default, Clone)]
pub struct ExprPool {
    nodes: Vec<Node>,
    index: HashMap<Node, FieldExpr>,
    pub(crate) partials: HashMap<(FieldExpr, u8), FieldExpr>,
}

impl fmt::Debug for ExprPool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExprPool")
            .field("nodes", &self.nodes.len())
            .finish()
    }
}

fn is_zero(c: Complex64) -> bool {
    c.re == 0.0 && c.im == 0.0
}

fn is_one(c: Complex64) -> bool {
    c.re == 1.0 && c.im == 0.0
}

impl ExprPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, e: FieldExpr) -> &Node {
        &self.nodes[e.index()]
    }

    pub(crate) fn contains(&self, e: FieldExpr) -> bool {
        e.index() < self.nodes.len()
    }

    /// Interns a node verbatim, without any rewriting.
    ///
    /// # Panics
    /// If a child handle does not belong to this pool.
    pub fn raw(&mut self, node: Node) -> FieldExpr {
        if let Some(&id) = self.index.get(&node) {
            return id;
        }
        for c in node.children() {
            assert!(self.contains(c), "child {c} is not part of this pool");
        }
        let id = FieldExpr(u32::try_from(self.nodes.len()).expect("expression pool overflow"));
        self.nodes.push(node.clone());
        self.index.insert(node, id);
        id
    }

    pub fn as_const(&self, e: FieldExpr) -> Option<Complex64> {
        match self.node(e) {
            Node::Const(c) => Some(c.0),
            _ => None,
        }
    }

    pub fn is_zero(&self, e: FieldExpr) -> bool {
        self.as_const(e).is_some_and(is_zero)
    }

    // ---- smart constructors -------------------------------------------------

    pub fn constant(&mut self, c: Complex64) -> FieldExpr {
        self.raw(Node::Const(Scalar::new(c)))
    }

    pub fn real(&mut self, x: f64) -> FieldExpr {
        self.constant(Complex64::new(x, 0.0))
    }

    pub fn zero(&mut self) -> FieldExpr {
        self.real(0.0)
    }

    pub fn one(&mut self) -> FieldExpr {
        self.real(1.0)
    }

    /// # Panics
    /// If `axis` is zero.
    pub fn coord(&mut self, axis: u8) -> FieldExpr {
        assert!(axis >= 1, "coordinates are 1-based");
        self.raw(Node::Coord(axis))
    }

    pub fn add(&mut self, a: FieldExpr, b: FieldExpr) -> FieldExpr {
        self.sum([a, b])
    }

    pub fn sub(&mut self, a: FieldExpr, b: FieldExpr) -> FieldExpr {
        let nb = self.neg(b);
        self.sum([a, nb])
    }

    pub fn neg(&mut self, a: FieldExpr) -> FieldExpr {
        self.scale(Complex64::new(-1.0, 0.0), a)
    }

    pub fn mul(&mut self, a: FieldExpr, b: FieldExpr) -> FieldExpr {
        self.product([a, b])
    }

    /// Sum with flattening, constant folding and merging of like terms.
    pub fn sum<I: IntoIterator<Item = FieldExpr>>(&mut self, terms: I) -> FieldExpr {
        let mut constant = Complex64::new(0.0, 0.0);
        let mut merged: BTreeMap<FieldExpr, Complex64> = BTreeMap::new();
        let mut stack: Vec<(Complex64, FieldExpr)> = terms
            .into_iter()
            .map(|t| (Complex64::new(1.0, 0.0), t))
            .collect();
        stack.reverse();
        while let Some((coef, t)) = stack.pop() {
            match self.node(t) {
                Node::Const(c) => constant += coef * c.0,
                Node::Scale(c, x) => stack.push((coef * c.0, *x)),
                Node::Sum(xs) => {
                    for &x in xs.iter().rev() {
                        stack.push((coef, x));
                    }
                }
                _ => *merged.entry(t).or_insert(Complex64::new(0.0, 0.0)) += coef,
            }
        }
        let mut children: Vec<FieldExpr> = Vec::with_capacity(merged.len() + 1);
        for (base, coef) in merged {
            if !is_zero(coef) {
                children.push(self.scale(coef, base));
            }
        }
        if !is_zero(constant) {
            children.push(self.constant(constant));
        }
        match children.len() {
            0 => self.zero(),
            1 => children[0],
            _ => {
                children.sort_unstable();
                self.raw(Node::Sum(children.into_boxed_slice()))
            }
        }
    }

    /// Product with flattening, constant extraction and power merging.
    pub fn product<I: IntoIterator<Item = FieldExpr>>(&mut self, factors: I) -> FieldExpr {
        let mut coef = Complex64::new(1.0, 0.0);
        let mut merged: BTreeMap<FieldExpr, u32> = BTreeMap::new();
        let mut stack: Vec<(FieldExpr, u32)> = factors.into_iter().map(|f| (f, 1)).collect();
        while let Some((f, n)) = stack.pop() {
            match self.node(f) {
                Node::Const(c) => coef *= c.0.powi(n as i32),
                Node::Scale(c, x) => {
                    coef *= c.0.powi(n as i32);
                    stack.push((*x, n));
                }
                Node::Product(xs) => {
                    for &x in xs.iter() {
                        stack.push((x, n));
                    }
                }
                Node::Power(x, m) => stack.push((*x, m * n)),
                _ => *merged.entry(f).or_insert(0) += n,
            }
        }
        if is_zero(coef) {
            return self.zero();
        }
        let mut children: Vec<FieldExpr> = Vec::with_capacity(merged.len());
        for (base, n) in merged {
            children.push(self.power(base, n));
        }
        let body = match children.len() {
            0 => return self.constant(coef),
            1 => children[0],
            _ => {
                children.sort_unstable();
                self.raw(Node::Product(children.into_boxed_slice()))
            }
        };
        self.scale(coef, body)
    }

    pub fn scale(&mut self, c: Complex64, x: FieldExpr) -> FieldExpr {
        if is_zero(c) {
            return self.zero();
        }
        if is_one(c) {
            return x;
        }
        match self.node(x).clone() {
            Node::Const(d) => self.constant(c * d.0),
            Node::Scale(d, y) => {
                let cd = c * d.0;
                self.scale(cd, y)
            }
            _ => self.raw(Node::Scale(Scalar::new(c), x)),
        }
    }

    pub fn power(&mut self, x: FieldExpr, n: u32) -> FieldExpr {
        match n {
            0 => return self.one(),
            1 => return x,
            _ => {}
        }
        match self.node(x).clone() {
            Node::Const(c) => self.constant(c.0.powi(n as i32)),
            Node::Power(y, m) => self.power(y, m * n),
            Node::Scale(c, y) => {
                let p = self.power(y, n);
                self.scale(c.0.powi(n as i32), p)
            }
            _ => self.raw(Node::Power(x, n)),
        }
    }

    pub fn recip(&mut self, x: FieldExpr) -> FieldExpr {
        match self.node(x).clone() {
            Node::Const(c) if !is_zero(c.0) => self.constant(c.0.inv()),
            Node::Scale(c, y) => {
                let r = self.recip(y);
                self.scale(c.0.inv(), r)
            }
            _ => self.raw(Node::Recip(x)),
        }
    }

    pub fn exp(&mut self, x: FieldExpr) -> FieldExpr {
        match self.as_const(x) {
            Some(c) => self.constant(c.exp()),
            None => self.raw(Node::Exp(x)),
        }
    }

    pub fn sqrt(&mut self, x: FieldExpr) -> FieldExpr {
        match self.as_const(x) {
            Some(c) if c.im == 0.0 && c.re >= 0.0 => self.real(c.re.sqrt()),
            _ => self.raw(Node::Sqrt(x)),
        }
    }

    pub fn smooth_step_e(&mut self, x: FieldExpr) -> FieldExpr {
        match self.as_const(x) {
            Some(c) if c.im == 0.0 => self.real(smooth_step_e(c.re)),
            _ => self.raw(Node::SmoothStepE(x)),
        }
    }

    /// `num / delta` with the collar guard at `inner`; see [`Node::CollarQuotient`].
    pub fn collar_quotient(&mut self, num: FieldExpr, delta: FieldExpr, inner: f64) -> FieldExpr {
        if self.is_zero(num) {
            return self.zero();
        }
        self.raw(Node::CollarQuotient {
            num,
            delta,
            inner: Real(inner),
        })
    }

    /// Rebuilds `e` bottom-up through the smart constructors.
    ///
    /// Only value-preserving rewrites are applied: flattening, constant
    /// folding, zero/one absorption and merging of like terms and powers.
    pub fn simplify(&mut self, e: FieldExpr) -> FieldExpr {
        let mut memo: HashMap<FieldExpr, FieldExpr> = HashMap::new();
        for id in self.reachable(&[e]) {
            let node = self.node(id).clone();
            let m = |x: &FieldExpr| memo[x];
            let out = match node {
                Node::Const(_) | Node::Coord(_) => id,
                Node::Sum(xs) => {
                    let xs: Vec<_> = xs.iter().map(m).collect();
                    self.sum(xs)
                }
                Node::Product(xs) => {
                    let xs: Vec<_> = xs.iter().map(m).collect();
                    self.product(xs)
                }
                Node::Scale(c, x) => self.scale(c.0, m(&x)),
                Node::Power(x, n) => self.power(m(&x), n),
                Node::Recip(x) => self.recip(m(&x)),
                Node::Exp(x) => self.exp(m(&x)),
                Node::Sqrt(x) => self.sqrt(m(&x)),
                Node::SmoothStepE(x) => self.smooth_step_e(m(&x)),
                Node::CollarQuotient { num, delta, inner } => {
                    self.collar_quotient(m(&num), m(&delta), inner.0)
                }
            };
            memo.insert(id, out);
        }
        memo[&e]
    }

    /// All nodes reachable from `roots`, in ascending (topological) order.
    pub fn reachable(&self, roots: &[FieldExpr]) -> Vec<FieldExpr> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack: Vec<FieldExpr> = roots.to_vec();
        while let Some(e) = stack.pop() {
            if std::mem::replace(&mut seen[e.index()], true) {
                continue;
            }
            stack.extend(self.node(e).children());
        }
        seen.iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(i, _)| FieldExpr(i as u32))
            .collect()
    }

    /// Number of distinct nodes reachable from `e` (the shared DAG size).
    pub fn shared_size(&self, e: FieldExpr) -> usize {
        self.reachable(&[e]).len()
    }

    /// Size of `e` written out as a tree with no sharing.
    ///
    /// Returned as `f64` because the unshared size grows exponentially.
    pub fn tree_size(&self, e: FieldExpr) -> f64 {
        let order = self.reachable(&[e]);
        let mut size: HashMap<FieldExpr, f64> = HashMap::with_capacity(order.len());
        for id in order {
            let s = 1.0
                + self
                    .node(id)
                    .children()
                    .iter()
                    .map(|c| size[c])
                    .sum::<f64>();
            size.insert(id, s);
        }
        size[&e]
    }

    /// Largest coordinate axis referenced by `e` (0 when none).
    pub fn max_axis(&self, e: FieldExpr) -> u8 {
        self.reachable(&[e])
            .into_iter()
            .filter_map(|id| match self.node(id) {
                Node::Coord(j) => Some(*j),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }
}

/// `exp(-1/t)` for `t > 0`, else `0`.
pub fn smooth_step_e(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}
