//! Structural differentiation and the vector fields N, T and the Laplacian.

use num_complex::Complex64;

use super::pool::{ExprPool, FieldExpr, Node};
use crate::geometry::DomainModel;

impl ExprPool {
    /// Structural derivative `∂e/∂x_axis` (axis is 1-based).
    ///
    /// Results are memoized per `(expr, axis)`, so repeated and nested
    /// derivatives of shared subexpressions stay shared.
    pub fn partial(&mut self, e: FieldExpr, axis: u8) -> FieldExpr {
        assert!(axis >= 1, "coordinates are 1-based");
        if let Some(&d) = self.partials.get(&(e, axis)) {
            return d;
        }
        // Children first, iteratively, so deep expressions do not recurse.
        let order = self.reachable(&[e]);
        for id in order {
            if self.partials.contains_key(&(id, axis)) {
                continue;
            }
            let d = self.partial_node(id, axis);
            self.partials.insert((id, axis), d);
        }
        self.partials[&(e, axis)]
    }

    fn partial_node(&mut self, id: FieldExpr, axis: u8) -> FieldExpr {
        let d = |pool: &ExprPool, x: FieldExpr| pool.partials[&(x, axis)];
        match self.node(id).clone() {
            Node::Const(_) => self.zero(),
            Node::Coord(j) => {
                if j == axis {
                    self.one()
                } else {
                    self.zero()
                }
            }
            Node::Sum(xs) => {
                let ds: Vec<_> = xs.iter().map(|&x| d(self, x)).collect();
                self.sum(ds)
            }
            Node::Product(xs) => {
                let mut terms = Vec::with_capacity(xs.len());
                for (i, &xi) in xs.iter().enumerate() {
                    let dxi = d(self, xi);
                    if self.is_zero(dxi) {
                        continue;
                    }
                    let mut factors: Vec<FieldExpr> = xs.to_vec();
                    factors[i] = dxi;
                    terms.push(self.product(factors));
                }
                self.sum(terms)
            }
            Node::Scale(c, x) => {
                let dx = d(self, x);
                self.scale(c.0, dx)
            }
            Node::Power(x, n) => {
                let dx = d(self, x);
                let p = self.power(x, n - 1);
                let t = self.mul(p, dx);
                self.scale(Complex64::new(n as f64, 0.0), t)
            }
            Node::Recip(x) => {
                let dx = d(self, x);
                let r2 = self.power(id, 2);
                let t = self.mul(r2, dx);
                self.neg(t)
            }
            Node::Exp(x) => {
                let dx = d(self, x);
                self.mul(id, dx)
            }
            Node::Sqrt(x) => {
                let dx = d(self, x);
                let r = self.recip(id);
                let t = self.mul(dx, r);
                self.scale(Complex64::new(0.5, 0.0), t)
            }
            Node::SmoothStepE(x) => {
                // e'(t) = e(t) / t^2
                let dx = d(self, x);
                let r = self.recip(x);
                let r2 = self.power(r, 2);
                self.product([id, r2, dx])
            }
            Node::CollarQuotient { num, delta, inner } => {
                // (f/δ)' = f'/δ - (f/δ)·δ'/δ; both numerators keep supp ⊆ supp f.
                let df = d(self, num);
                let ddelta = d(self, delta);
                let first = self.collar_quotient(df, delta, inner.0);
                let inner_num = self.mul(id, ddelta);
                let second = self.collar_quotient(inner_num, delta, inner.0);
                self.sub(first, second)
            }
        }
    }

    /// `Σ_j ∂²e/∂x_j²` over `dim` real coordinates.
    pub fn laplacian(&mut self, e: FieldExpr, dim: usize) -> FieldExpr {
        let terms: Vec<_> = (1..=dim as u8)
            .map(|j| {
                let dj = self.partial(e, j);
                self.partial(dj, j)
            })
            .collect();
        self.sum(terms)
    }
}

/// `N e = Σ_j (∂δ/∂x_j)(∂e/∂x_j)`, the gradient field of the domain's δ.
pub fn apply_n(pool: &mut ExprPool, e: FieldExpr, domain: &DomainModel) -> FieldExpr {
    let terms: Vec<_> = domain
        .gradient()
        .iter()
        .enumerate()
        .map(|(i, &gj)| {
            let de = pool.partial(e, i as u8 + 1);
            pool.mul(gj, de)
        })
        .collect();
    pool.sum(terms)
}

/// `T e = Σ_j δ_{x_{2j}} ∂e/∂x_{2j-1} − δ_{x_{2j-1}} ∂e/∂x_{2j}`.
///
/// T annihilates δ identically and is tangent to its level sets.
pub fn apply_t(pool: &mut ExprPool, e: FieldExpr, domain: &DomainModel) -> FieldExpr {
    let grad = domain.gradient().to_vec();
    let mut terms = Vec::with_capacity(grad.len());
    for j in 0..domain.complex_dim() {
        let (re, im) = (2 * j, 2 * j + 1);
        let d_re = pool.partial(e, re as u8 + 1);
        let d_im = pool.partial(e, im as u8 + 1);
        let a = pool.mul(grad[im], d_re);
        let b = pool.mul(grad[re], d_im);
        terms.push(pool.sub(a, b));
    }
    pool.sum(terms)
}

/// `Δe` over the domain's real coordinates.
pub fn apply_laplacian(pool: &mut ExprPool, e: FieldExpr, domain: &DomainModel) -> FieldExpr {
    pool.laplacian(e, domain.real_dim())
}
