//! Model domains with a globally smooth boundary-distance function.
//!
//! On the unit disc (ℂ) and unit ball (ℂ²) the distance to the boundary is
//! `1 − |x|`, which has a cusp at the origin. The domains here use
//! `δ = 1 − m(|x|)` with
//!
//! ```text
//! m(r) = χ(r)·r + (1 − χ(r))·(r² + 1/4)
//! ```
//!
//! where `χ` is a C^∞ step from 0 on `[0, 1/4]` to 1 on `[1/2, ∞)`. In the
//! collar `r ≥ 1/2`, δ is the exact distance; near the origin `r²` is written
//! as `Σ x_j²`, so no `|x|` cusp enters the expression.

use std::str::FromStr;

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::field::{ExprPool, FieldExpr};

pub const DEFAULT_COLLAR_INNER: f64 = 0.05;
pub const DEFAULT_COLLAR_OUTER: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error(
        "collar must satisfy 0 < inner < outer < {limit}, got inner = {inner}, outer = {outer}"
    )]
    Collar { inner: f64, outer: f64, limit: f64 },
    #[error("blend must satisfy 0 < start < end, got [{start}, {end}]")]
    Blend { start: f64, end: f64 },
    #[error("sample count must be at least 1")]
    EmptySample,
    #[error("unknown domain '{0}' (expected \"disc\" or \"ball\")")]
    UnknownDomain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Disc,
    Ball,
}

impl DomainKind {
    pub fn complex_dim(self) -> usize {
        match self {
            DomainKind::Disc => 1,
            DomainKind::Ball => 2,
        }
    }

    pub fn volume(self) -> f64 {
        match self {
            DomainKind::Disc => std::f64::consts::PI,
            DomainKind::Ball => std::f64::consts::PI.powi(2) / 2.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DomainKind::Disc => "disc",
            DomainKind::Ball => "ball",
        }
    }
}

impl FromStr for DomainKind {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "disc" => Ok(DomainKind::Disc),
            "ball" => Ok(DomainKind::Ball),
            other => Err(GeometryError::UnknownDomain(other.to_string())),
        }
    }
}

impl std::fmt::Display for DomainKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Radial interval `[start, end]` over which δ switches from the interior
/// surrogate to the exact distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blend {
    pub start: f64,
    pub end: f64,
}

impl Default for Blend {
    fn default() -> Self {
        Blend {
            start: 0.25,
            end: 0.5,
        }
    }
}

/// A model domain: δ and its derivative expressions, plus the collar.
///
/// Immutable after construction; handles point into the [`ExprPool`] that
/// built it.
#[derive(Debug, Clone)]
pub struct DomainModel {
    kind: DomainKind,
    delta: FieldExpr,
    gradient: Vec<FieldExpr>,
    laplacian: FieldExpr,
    pub collar_inner: f64,
    pub collar_outer: f64,
    pub blend: Blend,
}

/// The smooth step `s(t) = e(t) / (e(t) + e(1 − t))`, `e(t) = exp(−1/t)·[t > 0]`.
pub fn smooth_step(pool: &mut ExprPool, t: FieldExpr) -> FieldExpr {
    let one = pool.one();
    let e_t = pool.smooth_step_e(t);
    let one_minus_t = pool.sub(one, t);
    let e_1mt = pool.smooth_step_e(one_minus_t);
    let den = pool.add(e_t, e_1mt);
    let inv = pool.recip(den);
    pool.mul(e_t, inv)
}

/// Scalar twin of [`smooth_step`].
pub fn smooth_step_value(t: f64) -> f64 {
    let e = crate::field::smooth_step_e;
    let a = e(t);
    a / (a + e(1.0 - t))
}

impl DomainModel {
    pub fn disc(pool: &mut ExprPool, inner: f64, outer: f64) -> Result<Self, GeometryError> {
        Self::new(pool, DomainKind::Disc, inner, outer)
    }

    pub fn ball(pool: &mut ExprPool, inner: f64, outer: f64) -> Result<Self, GeometryError> {
        Self::new(pool, DomainKind::Ball, inner, outer)
    }

    /// Builds a domain with the standard blend on `[1/4, 1/2]`.
    ///
    /// Requires `0 < inner < outer < 1/2`, so the collar lies where δ is the
    /// exact distance.
    pub fn new(
        pool: &mut ExprPool,
        kind: DomainKind,
        inner: f64,
        outer: f64,
    ) -> Result<Self, GeometryError> {
        let blend = Blend::default();
        let limit = 1.0 - blend.end;
        if !(inner > 0.0 && inner < outer && outer < limit) {
            return Err(GeometryError::Collar {
                inner,
                outer,
                limit,
            });
        }
        Self::with_blend(pool, kind, inner, outer, blend)
    }

    /// Builds a domain with an arbitrary blend interval.
    ///
    /// The collar is not checked against the blend, so δ need not be the
    /// exact distance on the collar. Used to inject faults into self-tests.
    pub fn with_blend(
        pool: &mut ExprPool,
        kind: DomainKind,
        inner: f64,
        outer: f64,
        blend: Blend,
    ) -> Result<Self, GeometryError> {
        if !(inner > 0.0 && inner < outer && outer < 1.0) {
            return Err(GeometryError::Collar {
                inner,
                outer,
                limit: 1.0,
            });
        }
        if !(blend.start > 0.0 && blend.start < blend.end) {
            return Err(GeometryError::Blend {
                start: blend.start,
                end: blend.end,
            });
        }
        let dim = 2 * kind.complex_dim();
        let squares: Vec<_> = (1..=dim as u8)
            .map(|j| {
                let x = pool.coord(j);
                pool.power(x, 2)
            })
            .collect();
        let rho = pool.sum(squares);
        let r = pool.sqrt(rho);
        // χ(r) = s((r − start)/(end − start))
        let width = blend.end - blend.start;
        let shifted = {
            let c = pool.real(-blend.start);
            pool.add(r, c)
        };
        let t = pool.scale(Complex64::new(1.0 / width, 0.0), shifted);
        let chi = smooth_step(pool, t);
        let one = pool.one();
        let one_minus_chi = pool.sub(one, chi);
        let quarter = pool.real(0.25);
        let surrogate = pool.add(rho, quarter);
        let a = pool.mul(chi, r);
        let b = pool.mul(one_minus_chi, surrogate);
        let m = pool.add(a, b);
        let delta = pool.sub(one, m);
        let gradient: Vec<_> = (1..=dim as u8).map(|j| pool.partial(delta, j)).collect();
        let laplacian = pool.laplacian(delta, dim);
        Ok(DomainModel {
            kind,
            delta,
            gradient,
            laplacian,
            collar_inner: inner,
            collar_outer: outer,
            blend,
        })
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn complex_dim(&self) -> usize {
        self.kind.complex_dim()
    }

    pub fn real_dim(&self) -> usize {
        2 * self.kind.complex_dim()
    }

    pub fn delta(&self) -> FieldExpr {
        self.delta
    }

    /// `∂δ/∂x_j` for `j = 1..=2n`.
    pub fn gradient(&self) -> &[FieldExpr] {
        &self.gradient
    }

    pub fn laplacian_of_delta(&self) -> FieldExpr {
        self.laplacian
    }

    /// Radius below which δ departs from the exact distance.
    pub fn blend_radius(&self) -> f64 {
        self.blend.end
    }

    pub fn volume(&self) -> f64 {
        self.kind.volume()
    }

    /// Scalar δ for a point at Euclidean radius `r`.
    pub fn delta_at_radius(&self, r: f64) -> f64 {
        let chi = smooth_step_value((r - self.blend.start) / (self.blend.end - self.blend.start));
        1.0 - (chi * r + (1.0 - chi) * (r * r + 0.25))
    }

    /// Natural radial breakpoints for quadrature: blend edges and collar edges.
    pub fn radial_breaks(&self) -> Vec<f64> {
        let mut b = vec![
            self.blend.start,
            self.blend.end,
            1.0 - self.collar_outer,
            1.0 - self.collar_inner,
        ];
        b.retain(|&x| x > 0.0 && x < 1.0);
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// Deterministic points with `ε₁/2 ≤ δ ≤ ε₂`, uniform in δ and direction.
    pub fn sample_collar(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>, GeometryError> {
        if count == 0 {
            return Err(GeometryError::EmptySample);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lo = self.collar_inner / 2.0;
        let hi = self.collar_outer;
        let dim = self.real_dim();
        let points = (0..count)
            .map(|_| {
                let d = lo + (hi - lo) * rng.random::<f64>();
                let dir = random_direction(&mut rng, dim);
                dir.iter().map(|u| (1.0 - d) * u).collect()
            })
            .collect();
        Ok(points)
    }
}

fn random_direction(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        // Box–Muller pairs give an isotropic Gaussian vector
        let mut v = Vec::with_capacity(dim);
        while v.len() < dim {
            let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            let u2: f64 = rng.random();
            let rad = (-2.0 * u1.ln()).sqrt();
            let ang = std::f64::consts::TAU * u2;
            v.push(rad * ang.cos());
            v.push(rad * ang.sin());
        }
        v.truncate(dim);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// The cutoff ζ as a function of δ.
#[derive(Debug, Clone)]
pub struct CutoffProfile {
    pub inner: f64,
    pub outer: f64,
    pub zeta: FieldExpr,
}

impl CutoffProfile {
    /// `ζ = s((ε₂ − δ)/(ε₂ − ε₁))`: 1 where `δ ≤ ε₁`, 0 where `δ ≥ ε₂`.
    pub fn new(pool: &mut ExprPool, domain: &DomainModel) -> Self {
        let (inner, outer) = (domain.collar_inner, domain.collar_outer);
        let e2 = pool.real(outer);
        let diff = pool.sub(e2, domain.delta());
        let t = pool.scale(Complex64::new(1.0 / (outer - inner), 0.0), diff);
        let zeta = smooth_step(pool, t);
        CutoffProfile { inner, outer, zeta }
    }

    /// ζ as a scalar function of δ.
    pub fn value_at_delta(&self, delta: f64) -> f64 {
        smooth_step_value((self.outer - delta) / (self.outer - self.inner))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Tape;

    fn disc() -> (ExprPool, DomainModel) {
        let mut pool = ExprPool::new();
        let d = DomainModel::disc(&mut pool, DEFAULT_COLLAR_INNER, DEFAULT_COLLAR_OUTER).unwrap();
        (pool, d)
    }

    fn norm_grad(pool: &ExprPool, d: &DomainModel, p: &[f64]) -> f64 {
        let tape = Tape::compile(pool, d.gradient());
        let mut g = vec![Complex64::new(0.0, 0.0); d.real_dim()];
        tape.eval_into(p, &mut g).unwrap();
        g.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn disc_delta_in_collar_is_distance() {
        let (pool, d) = disc();
        let v = pool.eval(d.delta(), &[0.9, 0.0]).unwrap();
        assert!((v.re - 0.1).abs() < 1e-15);
    }

    #[test]
    fn disc_delta_at_origin_is_three_quarters() {
        let (pool, d) = disc();
        let v = pool.eval(d.delta(), &[0.0, 0.0]).unwrap();
        assert_eq!(v.re, 0.75);
    }

    #[test]
    fn unit_gradient_in_collar() {
        let (pool, d) = disc();
        let th = std::f64::consts::PI / 3.0;
        let n = norm_grad(&pool, &d, &[0.8 * th.cos(), 0.8 * th.sin()]);
        assert!((n - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ball_delta_and_volume() {
        let mut pool = ExprPool::new();
        let b = DomainModel::ball(&mut pool, 0.05, 0.15).unwrap();
        let v = pool.eval(b.delta(), &[0.9, 0.0, 0.0, 0.0]).unwrap();
        assert!((v.re - 0.1).abs() < 1e-15);
        assert_eq!(b.volume(), std::f64::consts::PI.powi(2) / 2.0);
        for p in b.sample_collar(10, 1).unwrap() {
            assert_eq!(p.len(), 4);
            assert!((norm_grad(&pool, &b, &p) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn collar_preconditions() {
        let mut pool = ExprPool::new();
        assert!(DomainModel::disc(&mut pool, 0.0, 0.1).is_err());
        assert!(DomainModel::disc(&mut pool, 0.2, 0.1).is_err());
        assert!(DomainModel::disc(&mut pool, 0.1, 0.6).is_err());
        assert!(DomainModel::disc(&mut pool, 0.1, 0.49).is_ok());
    }

    #[test]
    fn cutoff_values() {
        let (mut pool, d) = disc();
        let z = CutoffProfile::new(&mut pool, &d);
        let at = |pool: &ExprPool, delta: f64| pool.eval(z.zeta, &[1.0 - delta, 0.0]).unwrap().re;
        assert_eq!(at(&pool, 0.025), 1.0);
        assert_eq!(at(&pool, 0.3), 0.0);
        assert!((at(&pool, 0.1) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn sample_collar_contract() {
        let (pool, d) = disc();
        let pts = d.sample_collar(3, 7).unwrap();
        assert_eq!(pts.len(), 3);
        for p in &pts {
            let delta = pool.eval(d.delta(), p).unwrap().re;
            assert!((0.025 - 1e-15..=0.15 + 1e-15).contains(&delta));
        }
        assert_eq!(pts, d.sample_collar(3, 7).unwrap());
        assert!(matches!(
            d.sample_collar(0, 1),
            Err(GeometryError::EmptySample)
        ));
    }
}
