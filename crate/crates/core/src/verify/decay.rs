//! Boundary terms of the first-order construction on `{δ > ε}`.
//!
//! With `γ` the multiplier, `I₂(ε) = ∫ N(ζγ)·η` and `I₃(ε) = ∫ ζγ·Nη`. For
//! holomorphic `η`, `Nη = i·Tη`, and `I₃` splits as
//! `i∫T(ζγη) − i∫T(ζγ)·η`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{Harness, VerifyError};
use crate::catalog::GKind;
use crate::field::{apply_n, apply_t, Tape};
use crate::geometry::DomainKind;
use crate::quadrature::integrate_epsilon_shell_vec;
use crate::weights::loglog_slope;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayRow {
    pub eps: f64,
    pub i2: Complex64,
    pub i2_error: f64,
    /// `ε·|I₂(ε)|`
    pub eps_i2: f64,
    pub i3: Complex64,
    pub i3_error: f64,
    pub eps_i3: f64,
    /// `i∫T(ζγη)`
    pub i3_tangential: Complex64,
    /// `−i∫T(ζγ)·η`
    pub i3_remainder: Complex64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub eta: String,
    pub g: String,
    pub rows: Vec<DecayRow>,
    /// Log-log slope of `ε·|I₂|` against `ε`.
    pub i2_slope: f64,
    /// `ε·|I₂|` strictly decreases along the rows, which run toward ε → 0.
    pub i2_decreasing: bool,
    pub pass: bool,
}

const WIDTH: usize = 4;

impl Harness {
    /// Boundary terms for `η` and `γ = g` at each `ε`, ordered as given.
    /// `I₂` is expected to stay bounded, so `ε·|I₂|` should fall like `ε`.
    pub fn boundary_term_decay(
        &mut self,
        eta_id: &str,
        g_id: &str,
        eps: &[f64],
    ) -> Result<DecayReport, VerifyError> {
        if self.domain.kind() != DomainKind::Disc {
            return Err(VerifyError::Argument(
                "boundary terms are computed on the disc only".into(),
            ));
        }
        if eps.len() < 2 {
            return Err(VerifyError::Argument(
                "need at least two values of eps".into(),
            ));
        }
        let eta = self.eta(eta_id)?;
        let g: GKind = g_id.parse()?;

        let pool = &mut self.pool;
        let g_expr = g.to_expr(pool);
        let zg = pool.mul(self.cutoff.zeta, g_expr);
        let n_zg = apply_n(pool, zg, &self.domain);
        let t_zg = apply_t(pool, zg, &self.domain);
        let grad = self.domain.gradient();
        let tape = Tape::compile(pool, &[zg, n_zg, t_zg, grad[0], grad[1]]);

        let i = Complex64::new(0.0, 1.0);
        let integrand = |s: crate::quadrature::Sample<'_>, out: &mut [Complex64]| {
            let mut v = [Complex64::new(0.0, 0.0); 5];
            tape.eval_into(s.x, &mut v)?;
            let [zg, n_zg, t_zg, dx, dy] = v;
            let e = eta.eval(&s);
            let de = eta.deriv_at(&s).unwrap_or_default();
            let n_eta = de * (dx + i * dy);
            let t_eta = de * (dy - i * dx);
            out[0] = n_zg * e;
            out[1] = zg * n_eta;
            out[2] = i * (t_zg * e + zg * t_eta);
            out[3] = -i * t_zg * e;
            Ok(())
        };
        let tolerance = self.tolerances.singular;
        let cfg = self.quadrature_for(tolerance, eta.singularities.clone());
        let rows: Vec<DecayRow> = eps
            .par_iter()
            .map(|&e| {
                let r = integrate_epsilon_shell_vec(WIDTH, integrand, e, &cfg)?;
                Ok(DecayRow {
                    eps: e,
                    i2: r.values[0],
                    i2_error: r.error_estimates[0],
                    eps_i2: e * r.values[0].norm(),
                    i3: r.values[1],
                    i3_error: r.error_estimates[1],
                    eps_i3: e * r.values[1].norm(),
                    i3_tangential: r.values[2],
                    i3_remainder: r.values[3],
                    converged: r.converged,
                })
            })
            .collect::<Result<_, VerifyError>>()?;

        let xs: Vec<f64> = rows.iter().map(|r| r.eps).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.eps_i2).collect();
        let i2_slope = loglog_slope(&xs, &ys);
        let i2_decreasing = rows
            .windows(2)
            .all(|w| w[1].eps < w[0].eps && w[1].eps_i2 < w[0].eps_i2);
        let converged = rows.iter().all(|r| r.converged);
        Ok(DecayReport {
            eta: eta.id.clone(),
            g: g.to_string(),
            pass: i2_decreasing && i2_slope >= 0.5 && converged,
            rows,
            i2_slope,
            i2_decreasing,
        })
    }
}
