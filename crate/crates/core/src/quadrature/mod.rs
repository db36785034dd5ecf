//! Adaptive cubature over the unit disc and the unit ball of ℂ².
//!
//! The disc is integrated in polar coordinates `(r, θ)`. The ball uses
//! `z₁ = r cos α e^{iθ₁}`, `z₂ = r sin α e^{iθ₂}`: an adaptive rule in
//! `(r, α)` and a periodic trapezoid rule on the torus `(θ₁, θ₂)`.
//!
//! Integrands may be vector valued, so that several components that share
//! expensive subexpressions are integrated on one set of cells. Results are
//! reproducible bit for bit: the cell set depends only on the integrand and
//! the configuration, and all sums run in a fixed order whatever the number
//! of worker threads.

mod engine;

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::field::FieldError;
pub use engine::compensated_sum;
use engine::{CornerNode, Region, Settings};

/// A quadrature node as seen by an integrand.
#[derive(Clone, Copy, Debug)]
pub struct Sample<'a> {
    /// Real coordinates `(x₁, …, x_{2n})`.
    pub x: &'a [f64],
    /// Set for nodes of a graded corner cell on the disc.
    pub near: Option<Near>,
}

/// A singular hint `h` and the offset `z − h`, computed from the cell's
/// polar offsets without cancellation. Lets integrands resolve
/// `|z − h| ≪ 1e−16`, which plain coordinates cannot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Near {
    pub hint: Complex64,
    pub offset: Complex64,
}

impl<'a> Sample<'a> {
    pub fn at(x: &'a [f64]) -> Self {
        Sample { x, near: None }
    }

    /// The first complex coordinate `x₁ + i x₂`.
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.x[0], self.x[1])
    }

    /// `z − h`, exact when the node was generated near `h`.
    pub fn offset_from(&self, h: Complex64) -> Complex64 {
        match self.near {
            Some(n) if n.hint == h => n.offset,
            _ => self.z() - h,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuadratureError {
    #[error("invalid quadrature configuration: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum number of cell splits.
    pub max_subdivisions: usize,
    /// Boundary points of the disc where the integrand may be unbounded.
    /// Ignored on the ball.
    pub singular_points: Vec<Complex64>,
    /// Gauss–Legendre order per direction on regular cells.
    pub base_rule: usize,
    /// Radii in `(0, 1)` where the initial cells break.
    pub radial_breaks: Vec<f64>,
    pub angular_cells: usize,
    /// Exponent of the power grading on corner cells.
    pub grading: f64,
    /// Trapezoid points per torus angle on the ball.
    pub torus_points: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-13,
            max_subdivisions: 4000,
            singular_points: Vec::new(),
            base_rule: 10,
            radial_breaks: vec![0.5],
            angular_cells: 8,
            grading: 10.0,
            torus_points: 16,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<(), QuadratureError> {
        let bad = |m: &str| Err(QuadratureError::Config(m.to_string()));
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return bad("rel_tol must be positive");
        }
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return bad("abs_tol must be positive");
        }
        if !(1..=64).contains(&self.base_rule) {
            return bad("base_rule must be in 1..=64");
        }
        if self.angular_cells == 0 || self.torus_points == 0 {
            return bad("angular_cells and torus_points must be positive");
        }
        if !(self.grading >= 1.0 && self.grading <= 40.0) {
            return bad("grading must be in [1, 40]");
        }
        if self.radial_breaks.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
            return bad("radial breaks must lie in (0, 1)");
        }
        if self
            .singular_points
            .iter()
            .any(|z| !z.norm().is_finite() || z.norm() == 0.0)
        {
            return bad("singular points must be finite and nonzero");
        }
        Ok(())
    }

    fn settings(&self) -> Settings {
        Settings {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_subdivisions: self.max_subdivisions,
            order: self.base_rule,
            grading: self.grading,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub value: Complex64,
    pub error_estimate: f64,
    pub cells_used: usize,
    pub evaluations: usize,
    /// `false` when the tolerance was not met within `max_subdivisions`.
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorIntegral {
    pub values: Vec<Complex64>,
    pub error_estimates: Vec<f64>,
    pub cells_used: usize,
    pub evaluations: usize,
    pub converged: bool,
}

impl VectorIntegral {
    pub fn component(&self, l: usize) -> IntegralResult {
        IntegralResult {
            value: self.values[l],
            error_estimate: self.error_estimates[l],
            cells_used: self.cells_used,
            evaluations: self.evaluations,
            converged: self.converged,
        }
    }
}

impl From<engine::Outcome> for VectorIntegral {
    fn from(o: engine::Outcome) -> Self {
        VectorIntegral {
            values: o.values,
            error_estimates: o.errors,
            cells_used: o.cells,
            evaluations: o.evaluations,
            converged: o.converged,
        }
    }
}

fn radial_breaks(cfg: &QuadratureConfig, outer: f64) -> Vec<f64> {
    let mut breaks: Vec<f64> = cfg
        .radial_breaks
        .iter()
        .copied()
        .filter(|&r| r < outer * (1.0 - 1e-9))
        .collect();
    breaks.push(0.0);
    breaks.push(outer);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    breaks
}

fn disc_region(cfg: &QuadratureConfig, outer: f64) -> Region {
    let two_pi = 2.0 * PI;
    let hints: Vec<f64> = cfg
        .singular_points
        .iter()
        .map(|z| z.arg().rem_euclid(two_pi))
        .collect();
    let mut v: Vec<f64> = (0..=cfg.angular_cells)
        .map(|j| two_pi * j as f64 / cfg.angular_cells as f64)
        .collect();
    v.extend(hints.iter().copied());
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    // the last break must be exactly 2π
    if let Some(last) = v.last_mut() {
        *last = two_pi;
    }
    Region {
        u_breaks: radial_breaks(cfg, outer),
        v_breaks: v,
        corners: hints,
        v_period: Some(two_pi),
    }
}

/// `z − h` for a corner node at polar offsets `(−du, dv)` from `(outer, arg h)`.
fn corner_offset(h: Complex64, outer: f64, node: &CornerNode) -> Complex64 {
    let r_minus_1 = (outer - 1.0) - node.du;
    let r = outer - node.du;
    let (s, c) = node.dv.sin_cos();
    let half = (0.5 * node.dv).sin();
    h * Complex64::new(r_minus_1 * c - 2.0 * half * half, r * s)
}

/// Vector integral over the disc of radius `outer ≤ 1` centred at 0.
fn disc_vec<F>(
    width: usize,
    f: F,
    outer: f64,
    cfg: &QuadratureConfig,
) -> Result<VectorIntegral, QuadratureError>
where
    F: Fn(Sample<'_>, &mut [Complex64]) -> Result<(), FieldError> + Sync,
{
    cfg.validate()?;
    let two_pi = 2.0 * PI;
    let hints: Vec<(f64, Complex64)> = cfg
        .singular_points
        .iter()
        .map(|z| (z.arg().rem_euclid(two_pi), *z))
        .collect();
    let chart = |r: f64,
                 t: f64,
                 corner: Option<CornerNode>,
                 out: &mut [Complex64]|
     -> Result<(), FieldError> {
        let (s, c) = t.sin_cos();
        let x = [r * c, r * s];
        let near = corner.and_then(|node| {
            let vc = node.v_corner.rem_euclid(two_pi);
            hints
                .iter()
                .find(|(a, _)| {
                    let d = (a - vc).abs();
                    d < 1e-9 || (d - two_pi).abs() < 1e-9
                })
                .map(|&(_, h)| Near {
                    hint: h,
                    offset: corner_offset(h, outer, &node),
                })
        });
        f(Sample { x: &x, near }, out)?;
        for o in out.iter_mut() {
            *o *= r;
        }
        Ok(())
    };
    let region = disc_region(cfg, outer);
    Ok(engine::integrate(width, &chart, &region, &cfg.settings())?.into())
}

/// `∫_disc f dV` for a vector-valued `f` writing `width` components.
pub fn integrate_disc_vec<F>(
    width: usize,
    f: F,
    cfg: &QuadratureConfig,
) -> Result<VectorIntegral, QuadratureError>
where
    F: Fn(Sample<'_>, &mut [Complex64]) -> Result<(), FieldError> + Sync,
{
    disc_vec(width, f, 1.0, cfg)
}

fn scalar<F>(f: F) -> impl Fn(Sample<'_>, &mut [Complex64]) -> Result<(), FieldError> + Sync
where
    F: Fn(Sample<'_>) -> Result<Complex64, FieldError> + Sync,
{
    move |s, out| {
        out[0] = f(s)?;
        Ok(())
    }
}

/// `∫_disc f dV` in the coordinates `(x₁, x₂)`, `z = x₁ + i x₂`.
pub fn integrate_disc<F>(f: F, cfg: &QuadratureConfig) -> Result<IntegralResult, QuadratureError>
where
    F: Fn(Sample<'_>) -> Result<Complex64, FieldError> + Sync,
{
    Ok(integrate_disc_vec(1, scalar(f), cfg)?.component(0))
}

/// Integral over `{|z| < 1 − eps}`, which is `{δ > eps}` for the disc model
/// whenever `eps ≤ 1/2`. Corner grading moves onto the shrunken circle.
pub fn integrate_epsilon_shell_vec<F>(
    width: usize,
    f: F,
    eps: f64,
    cfg: &QuadratureConfig,
) -> Result<VectorIntegral, QuadratureError>
where
    F: Fn(Sample<'_>, &mut [Complex64]) -> Result<(), FieldError> + Sync,
{
    if !(0.0..=0.5).contains(&eps) {
        return Err(QuadratureError::Argument(format!(
            "eps = {eps} outside [0, 1/2]"
        )));
    }
    disc_vec(width, f, 1.0 - eps, cfg)
}

pub fn integrate_epsilon_shell<F>(
    f: F,
    eps: f64,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult, QuadratureError>
where
    F: Fn(Sample<'_>) -> Result<Complex64, FieldError> + Sync,
{
    Ok(integrate_epsilon_shell_vec(1, scalar(f), eps, cfg)?.component(0))
}

/// `∫_ball f dV` over the unit ball of ℂ² ≅ ℝ⁴, vector valued.
pub fn integrate_ball_vec<F>(
    width: usize,
    f: F,
    cfg: &QuadratureConfig,
) -> Result<VectorIntegral, QuadratureError>
where
    F: Fn(Sample<'_>, &mut [Complex64]) -> Result<(), FieldError> + Sync,
{
    cfg.validate()?;
    let n = cfg.torus_points;
    let h = 2.0 * PI / n as f64;
    let torus: Vec<(f64, f64)> = (0..n).map(|j| (h * j as f64).sin_cos()).collect();
    let chart =
        |r: f64, a: f64, _: Option<CornerNode>, out: &mut [Complex64]| -> Result<(), FieldError> {
            let (sa, ca) = a.sin_cos();
            let mut buf = vec![Complex64::new(0.0, 0.0); out.len()];
            out.fill(Complex64::new(0.0, 0.0));
            for &(s1, c1) in &torus {
                for &(s2, c2) in &torus {
                    let x = [r * ca * c1, r * ca * s1, r * sa * c2, r * sa * s2];
                    f(Sample::at(&x), &mut buf)?;
                    for (o, b) in out.iter_mut().zip(&buf) {
                        *o += b;
                    }
                }
            }
            let jac = r * r * r * ca * sa * h * h;
            for o in out.iter_mut() {
                *o *= jac;
            }
            Ok(())
        };
    let region = Region {
        u_breaks: radial_breaks(cfg, 1.0),
        v_breaks: vec![0.0, FRAC_PI_2],
        corners: Vec::new(),
        v_period: None,
    };
    Ok(engine::integrate(width, &chart, &region, &cfg.settings())?.into())
}

pub fn integrate_ball<F>(f: F, cfg: &QuadratureConfig) -> Result<IntegralResult, QuadratureError>
where
    F: Fn(Sample<'_>) -> Result<Complex64, FieldError> + Sync,
{
    Ok(integrate_ball_vec(1, scalar(f), cfg)?.component(0))
}

/// `∫_disc z^m · z̄^p · |z|^{2a} dV`, which is `2π/(2m + 2a + 2)` when
/// `m = p` and zero otherwise.
pub fn oracle_monomial_moment(m: u32, p: u32, a: f64) -> Result<Complex64, QuadratureError> {
    if a.is_nan() || a <= -1.0 || !a.is_finite() {
        return Err(QuadratureError::Argument(format!(
            "weight exponent {a} must exceed -1"
        )));
    }
    if m != p {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(Complex64::new(
        2.0 * PI / (2.0 * m as f64 + 2.0 * a + 2.0),
        0.0,
    ))
}
