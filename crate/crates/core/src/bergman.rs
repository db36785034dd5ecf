//! The Bergman projection of the unit disc in the monomial basis, Sobolev
//! norms of its output and a smoothing check for conjugate-holomorphic
//! inputs.
//!
//! `z^m` are orthogonal in `L²(disc)` with `‖z^m‖² = π/(m+1)`, so
//! `B f = Σ a_m z^m` with `a_m = (f, z^m)/‖z^m‖²`. Expansions are truncated
//! at a fixed mode.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{CatalogError, GKind};
use crate::field::FieldError;
use crate::geometry::{DomainKind, DomainModel};
use crate::quadrature::{
    integrate_disc, integrate_disc_vec, QuadratureConfig, QuadratureError, Sample,
};

pub const DEFAULT_MAX_MODE: usize = 32;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BergmanError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("Sobolev order {0} not supported (k2 <= 2)")]
    SobolevOrder(u32),
    #[error("multiplier '{0}' not supported; use one, pow:q or exp_x1")]
    Multiplier(String),
    #[error("the Bergman projection is implemented for the disc only")]
    Domain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiscBergmanBasis {
    max_mode: usize,
}

impl Default for DiscBergmanBasis {
    fn default() -> Self {
        DiscBergmanBasis {
            max_mode: DEFAULT_MAX_MODE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    /// `a_0 … a_M`
    pub coeffs: Vec<Complex64>,
    /// Quadrature error of each coefficient; zero for closed forms.
    pub error_estimates: Vec<f64>,
    /// `|a_M|·‖z^M‖`, a proxy for the truncated tail.
    pub tail_estimate: f64,
}

impl DiscBergmanBasis {
    pub fn new(max_mode: usize) -> Self {
        DiscBergmanBasis { max_mode }
    }

    pub fn max_mode(&self) -> usize {
        self.max_mode
    }

    /// `‖z^m‖² = π/(m+1)`
    pub fn norm_sq(&self, m: usize) -> f64 {
        PI / (m as f64 + 1.0)
    }

    fn projection(&self, coeffs: Vec<Complex64>, error_estimates: Vec<f64>) -> Projection {
        let m = self.max_mode;
        Projection {
            tail_estimate: coeffs[m].norm() * self.norm_sq(m).sqrt(),
            coeffs,
            error_estimates,
        }
    }

    /// `B f` by quadrature of `(f, z^m)` for all modes at once.
    pub fn project<F>(&self, f: F, cfg: &QuadratureConfig) -> Result<Projection, BergmanError>
    where
        F: Fn(Sample<'_>) -> Result<Complex64, FieldError> + Sync,
    {
        let width = self.max_mode + 1;
        let res = integrate_disc_vec(
            width,
            |s, out| {
                let v = f(s)?;
                let zc = s.z().conj();
                let mut p = v;
                for o in out.iter_mut() {
                    *o = p;
                    p *= zc;
                }
                Ok(())
            },
            cfg,
        )?;
        let coeffs = res
            .values
            .iter()
            .enumerate()
            .map(|(m, v)| v / self.norm_sq(m))
            .collect();
        let errors = res
            .error_estimates
            .iter()
            .enumerate()
            .map(|(m, e)| e / self.norm_sq(m))
            .collect();
        Ok(self.projection(coeffs, errors))
    }

    /// `B(z̄^j z^q)`: zero for `q < j`, else `(q−j+1)/(q+1)·z^{q−j}`.
    pub fn project_monomial(&self, j: u32, q: u32) -> Projection {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); self.max_mode + 1];
        if q >= j {
            let mode = (q - j) as usize;
            if mode <= self.max_mode {
                coeffs[mode] = Complex64::new((q - j + 1) as f64 / (q + 1) as f64, 0.0);
            }
        }
        let n = coeffs.len();
        self.projection(coeffs, vec![0.0; n])
    }
}

/// `Σ a_m z^m`
pub fn evaluate(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, a| acc * z + a)
}

/// `‖Σ a_m z^m‖_{k₂}` on the disc.
///
/// For holomorphic `f` every real derivative of order `j` has modulus
/// `|f^{(j)}|`, and there are `j + 1` of them.
pub fn sobolev_norm(coeffs: &[Complex64], k2: u32) -> Result<f64, BergmanError> {
    if k2 > 2 {
        return Err(BergmanError::SobolevOrder(k2));
    }
    let mut total = 0.0;
    for j in 0..=k2 as usize {
        let mut sum = 0.0;
        for (m, a) in coeffs.iter().enumerate().skip(j) {
            let falling: f64 = ((m - j + 1)..=m).map(|x| x as f64).product();
            sum += a.norm_sqr() * falling * falling * PI / (m - j + 1) as f64;
        }
        total += (j + 1) as f64 * sum;
    }
    Ok(total.sqrt())
}

/// `‖δ^k μ‖_{L²}`, which stands in for the negative Sobolev norm of `μ`.
pub fn weighted_negative_norm<F>(
    domain: &DomainModel,
    mu: F,
    k: u32,
    cfg: &QuadratureConfig,
) -> Result<f64, BergmanError>
where
    F: Fn(Sample<'_>) -> Result<Complex64, FieldError> + Sync,
{
    let cfg = QuadratureConfig {
        radial_breaks: domain.radial_breaks(),
        ..cfg.clone()
    };
    let res = integrate_disc(
        |s: Sample<'_>| {
            let r = s.x[0].hypot(s.x[1]);
            let w = domain.delta_at_radius(r).powi(k as i32);
            Ok(Complex64::new((w * mu(s)?).norm_sqr(), 0.0))
        },
        &cfg,
    )?;
    Ok(res.value.re.max(0.0).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingRow {
    pub j: u32,
    /// `‖B(μ_j g)‖_{k₂}`
    pub projected_norm: f64,
    /// `‖δ^k μ_j‖`
    pub weighted_norm: f64,
    pub ratio: f64,
    pub tail_estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingReport {
    pub schema_version: String,
    pub g: String,
    pub k: u32,
    pub k1: u32,
    pub k2: u32,
    pub rows: Vec<SmoothingRow>,
    /// Largest ratio for `j ∈ [0, 10]`.
    pub head_max: f64,
    /// Largest ratio for `j ∈ [10, j_max]`; `None` when `j_max < 10`.
    pub tail_max: Option<f64>,
    /// `tail_max ≤ 2·head_max`
    pub bounded: bool,
}

/// Ratios `‖B(μ_j g)‖_{k₂} / ‖δ^k μ_j‖` for `μ_j = z̄^j`, `j = 0…j_max`.
///
/// On the disc `B` is bounded on every `H^s`, so `k₁ = k₂` is reported.
pub fn smoothing_check(
    basis: &DiscBergmanBasis,
    domain: &DomainModel,
    g_id: &str,
    k: u32,
    k2: u32,
    j_max: u32,
    cfg: &QuadratureConfig,
) -> Result<SmoothingReport, BergmanError> {
    if domain.kind() != DomainKind::Disc {
        return Err(BergmanError::Domain);
    }
    if k2 > 2 {
        return Err(BergmanError::SobolevOrder(k2));
    }
    let g: GKind = g_id.parse()?;
    if matches!(g, GKind::ConjPow(_)) {
        return Err(BergmanError::Multiplier(g_id.to_string()));
    }
    let rows: Vec<SmoothingRow> = (0..=j_max)
        .into_par_iter()
        .map(|j| {
            let projection = match g {
                GKind::One => basis.project_monomial(j, 0),
                GKind::Pow(q) => basis.project_monomial(j, q),
                _ => basis.project(|s: Sample<'_>| Ok(s.z().conj().powu(j) * g.eval(s.x)), cfg)?,
            };
            let projected_norm = sobolev_norm(&projection.coeffs, k2)?;
            let weighted_norm =
                weighted_negative_norm(domain, |s: Sample<'_>| Ok(s.z().conj().powu(j)), k, cfg)?;
            Ok(SmoothingRow {
                j,
                projected_norm,
                weighted_norm,
                ratio: projected_norm / weighted_norm,
                tail_estimate: projection.tail_estimate,
            })
        })
        .collect::<Result<_, BergmanError>>()?;
    let max_over = |lo: u32, hi: u32| {
        rows.iter()
            .filter(|r| r.j >= lo && r.j <= hi)
            .map(|r| r.ratio)
            .fold(0.0, f64::max)
    };
    let head_max = max_over(0, 10);
    let tail_max = (j_max >= 10).then(|| max_over(10, j_max));
    Ok(SmoothingReport {
        schema_version: "1".into(),
        g: g.to_string(),
        k,
        k1: k2,
        k2,
        rows,
        head_max,
        tail_max,
        bounded: tail_max.is_none_or(|t| t <= 2.0 * head_max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ExprPool;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn sobolev_norm_examples() {
        let c = |v: &[f64]| {
            v.iter()
                .map(|&x| Complex64::new(x, 0.0))
                .collect::<Vec<_>>()
        };
        close(sobolev_norm(&c(&[1.0]), 0).unwrap(), PI.sqrt(), 1e-15);
        close(
            sobolev_norm(&c(&[0.0, 1.0]), 0).unwrap(),
            (PI / 2.0).sqrt(),
            1e-15,
        );
        close(
            sobolev_norm(&c(&[0.0, 1.0]), 1).unwrap(),
            (PI / 2.0 + 2.0 * PI).sqrt(),
            1e-14,
        );
        assert_eq!(
            sobolev_norm(&c(&[1.0]), 3),
            Err(BergmanError::SobolevOrder(3))
        );
    }

    #[test]
    fn monomial_projection() {
        let b = DiscBergmanBasis::default();
        let p = b.project_monomial(1, 2);
        close(p.coeffs[1].re, 2.0 / 3.0, 1e-15);
        assert!(b
            .project_monomial(3, 2)
            .coeffs
            .iter()
            .all(|c| c.norm() == 0.0));
        close(b.project_monomial(0, 0).coeffs[0].re, 1.0, 0.0);
    }

    #[test]
    fn quadrature_projection_examples() {
        let b = DiscBergmanBasis::new(8);
        let cfg = QuadratureConfig::default();
        let p = b.project(|s: Sample<'_>| Ok(s.z().conj()), &cfg).unwrap();
        assert!(p.coeffs.iter().all(|c| c.norm() < 1e-12));
        let p = b
            .project(|s: Sample<'_>| Ok(s.z().norm_sqr().into()), &cfg)
            .unwrap();
        close(p.coeffs[0].re, 0.5, 1e-12);
        assert!(p.coeffs[1..].iter().all(|c| c.norm() < 1e-12));
    }

    #[test]
    fn weighted_norm_trivial_cases() {
        let mut pool = ExprPool::new();
        let d = DomainModel::disc(&mut pool, 0.05, 0.15).unwrap();
        let cfg = QuadratureConfig::default();
        let one = weighted_negative_norm(&d, |_| Ok(Complex64::new(1.0, 0.0)), 0, &cfg).unwrap();
        close(one, PI.sqrt(), 1e-12);
        let zero = weighted_negative_norm(&d, |_| Ok(Complex64::new(0.0, 0.0)), 1, &cfg).unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn smoothing_example_rows() {
        let mut pool = ExprPool::new();
        let d = DomainModel::disc(&mut pool, 0.05, 0.15).unwrap();
        let cfg = QuadratureConfig::default();
        let r = smoothing_check(&DiscBergmanBasis::default(), &d, "pow:2", 1, 0, 3, &cfg).unwrap();
        close(
            r.rows[1].projected_norm,
            2.0 / 3.0 * (PI / 2.0).sqrt(),
            1e-14,
        );
        assert_eq!(r.rows[3].ratio, 0.0);
        assert!(r.bounded && r.tail_max.is_none());
        let r = smoothing_check(&DiscBergmanBasis::default(), &d, "one", 1, 1, 4, &cfg).unwrap();
        assert!(r.rows[1..].iter().all(|row| row.ratio == 0.0));
        assert!(smoothing_check(
            &DiscBergmanBasis::default(),
            &d,
            "conj_pow:1",
            1,
            0,
            2,
            &cfg
        )
        .is_err());
    }
}
