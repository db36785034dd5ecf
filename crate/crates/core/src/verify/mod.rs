//! Numerical checks of `∫ η g dV = ∫ δ^k ω_{k,g} η dV` and of the boundary
//! terms behind it.
//!
//! A [`Harness`] owns the expression pool, the domain and the cutoff, and
//! caches the weights it builds. Cells that share `(k, g, variant)` and a
//! tolerance class are integrated together: `δ^k ω` is evaluated once per
//! node and multiplied by every `η` of the batch.

mod decay;

use std::collections::HashMap;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{reference_integral, CatalogError, GKind, HoloTestFunction};
use crate::config::RunConfig;
use crate::field::{ExprPool, FieldExpr, Tape};
use crate::geometry::{CutoffProfile, DomainKind, DomainModel, GeometryError};
use crate::quadrature::{
    integrate_ball_vec, integrate_disc_vec, QuadratureConfig, QuadratureError, Sample,
    VectorIntegral,
};
use crate::report::{SuiteCell, SuiteReport, WeightSample};
use crate::weights::{inductive_weight, Variant, WeightError};

pub use decay::{DecayReport, DecayRow};

/// Floor in `rel_err = abs_err / max(|lhs|, REL_FLOOR)`.
pub const REL_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VerifyError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("eta '{0}' is not in L1 of the domain")]
    NotIntegrable(String),
    #[error("{0}")]
    Argument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub smooth: f64,
    pub singular: f64,
    pub ball: f64,
    /// Absolute tolerance for cells whose left side vanishes; defaults to
    /// the class tolerance times the volume.
    #[serde(default)]
    pub abs: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            smooth: 1e-8,
            singular: 1e-4,
            ball: 1e-3,
            abs: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LhsSource {
    ClosedForm,
    OracleQuadrature,
}

impl LhsSource {
    pub fn as_str(self) -> &'static str {
        match self {
            LhsSource::ClosedForm => "closed_form",
            LhsSource::OracleQuadrature => "oracle_quadrature",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub domain: DomainKind,
    pub k: u32,
    pub g: String,
    pub eta: String,
    pub variant: Variant,
    pub lhs: Complex64,
    pub lhs_source: LhsSource,
    /// Zero for closed forms.
    pub lhs_error_estimate: f64,
    pub rhs: Complex64,
    pub rhs_error_estimate: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub tolerance: f64,
    /// Both integrals met their quadrature tolerance.
    pub converged: bool,
    pub pass: bool,
    pub runtime_seconds: f64,
}

/// One cell of a suite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSpec {
    pub k: u32,
    pub g: GKind,
    pub eta: HoloTestFunction,
    pub variant: Variant,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantReport {
    pub corrected: IdentityReport,
    pub literal: IdentityReport,
    /// `|rhs_corrected − rhs_literal|`
    pub gap: f64,
    pub combined_error: f64,
    /// `gap > 10 × combined_error`
    pub significant: bool,
}

/// Quadrature tolerance as a fraction of the pass tolerance.
const QUAD_FRACTION: f64 = 1e-2;

struct Batch {
    k: u32,
    g: GKind,
    variant: Variant,
    tolerance: f64,
    /// Indices into the caller's cell list.
    members: Vec<usize>,
    etas: Vec<HoloTestFunction>,
    weight: Tape,
    quad: QuadratureConfig,
}

pub struct Harness {
    pool: ExprPool,
    domain: DomainModel,
    cutoff: CutoffProfile,
    quadrature: QuadratureConfig,
    /// Explicit quadrature tolerances `(rel, abs)`, overriding the
    /// per-class defaults.
    quad_override: Option<(f64, f64)>,
    tolerances: Tolerances,
    weights: HashMap<(u32, GKind, Variant), FieldExpr>,
}

impl Harness {
    pub fn new(
        kind: DomainKind,
        collar_inner: f64,
        collar_outer: f64,
    ) -> Result<Self, VerifyError> {
        let mut pool = ExprPool::new();
        let domain = DomainModel::new(&mut pool, kind, collar_inner, collar_outer)?;
        Ok(Self::from_parts(pool, domain))
    }

    pub fn from_parts(mut pool: ExprPool, domain: DomainModel) -> Self {
        let cutoff = CutoffProfile::new(&mut pool, &domain);
        let quadrature = QuadratureConfig {
            radial_breaks: domain.radial_breaks(),
            ..QuadratureConfig::default()
        };
        Harness {
            pool,
            domain,
            cutoff,
            quadrature,
            quad_override: None,
            tolerances: Tolerances::default(),
            weights: HashMap::new(),
        }
    }

    /// Base quadrature settings. Tolerances are taken from `cfg` only when
    /// `override_tolerances` is set; otherwise each class integrates to a
    /// hundredth of its pass tolerance.
    pub fn with_quadrature(mut self, cfg: QuadratureConfig, override_tolerances: bool) -> Self {
        self.quad_override = override_tolerances.then_some((cfg.rel_tol, cfg.abs_tol));
        self.quadrature = QuadratureConfig {
            radial_breaks: self.domain.radial_breaks(),
            ..cfg
        };
        self
    }

    pub fn with_tolerances(mut self, t: Tolerances) -> Self {
        self.tolerances = t;
        self
    }

    pub fn domain(&self) -> &DomainModel {
        &self.domain
    }

    pub fn pool(&self) -> &ExprPool {
        &self.pool
    }

    pub fn pool_mut(&mut self) -> &mut ExprPool {
        &mut self.pool
    }

    pub fn cutoff(&self) -> &CutoffProfile {
        &self.cutoff
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tolerances
    }

    pub fn eta(&self, id: &str) -> Result<HoloTestFunction, VerifyError> {
        Ok(HoloTestFunction::parse(id, self.domain.kind())?)
    }

    /// `δ^k · ω_{k,g}`, built once per `(k, g, variant)`.
    pub fn weighted(
        &mut self,
        k: u32,
        g: GKind,
        variant: Variant,
    ) -> Result<FieldExpr, VerifyError> {
        if let Some(&e) = self.weights.get(&(k, g, variant)) {
            return Ok(e);
        }
        let g_expr = g.to_expr(&mut self.pool);
        let w = inductive_weight(
            &mut self.pool,
            k,
            g_expr,
            &self.domain,
            &self.cutoff,
            variant,
        )?;
        let e = w.weighted(&mut self.pool, &self.domain);
        self.weights.insert((k, g, variant), e);
        Ok(e)
    }

    pub fn class_tolerance(&self, eta: &HoloTestFunction) -> f64 {
        if self.domain.kind() == DomainKind::Ball {
            self.tolerances.ball
        } else if eta.singularities.is_empty() {
            self.tolerances.smooth
        } else {
            self.tolerances.singular
        }
    }

    /// Quadrature settings for a pass tolerance and a set of hints.
    pub fn quadrature_for(&self, tolerance: f64, hints: Vec<Complex64>) -> QuadratureConfig {
        let abs_tol = self
            .tolerances
            .abs
            .unwrap_or(tolerance * self.domain.volume());
        let (rel, abs) = self
            .quad_override
            .unwrap_or((tolerance * QUAD_FRACTION, abs_tol * QUAD_FRACTION));
        QuadratureConfig {
            rel_tol: rel,
            abs_tol: abs,
            singular_points: hints,
            ..self.quadrature.clone()
        }
    }

    fn integrate_vec<F>(
        &self,
        width: usize,
        f: F,
        cfg: &QuadratureConfig,
    ) -> Result<VectorIntegral, VerifyError>
    where
        F: Fn(Sample<'_>, &mut [Complex64]) -> Result<(), crate::field::FieldError> + Sync,
    {
        Ok(match self.domain.kind() {
            DomainKind::Disc => integrate_disc_vec(width, f, cfg)?,
            DomainKind::Ball => integrate_ball_vec(width, f, cfg)?,
        })
    }

    /// `∫ η g dV` for each `η` by quadrature, ignoring closed forms.
    pub fn lhs_oracle(
        &self,
        g: GKind,
        etas: &[HoloTestFunction],
        tolerance: f64,
    ) -> Result<VectorIntegral, VerifyError> {
        let cfg = self.quadrature_for(tolerance, hints_of(etas));
        self.integrate_vec(
            etas.len(),
            |s, out| {
                let gv = g.eval(s.x);
                for (o, eta) in out.iter_mut().zip(etas) {
                    *o = gv * eta.eval(&s);
                }
                Ok(())
            },
            &cfg,
        )
    }

    fn plan(&mut self, cells: &[CellSpec]) -> Result<Vec<Batch>, VerifyError> {
        let mut batches: Vec<Batch> = Vec::new();
        let mut index: HashMap<(u32, GKind, Variant, u64), usize> = HashMap::new();
        for (i, cell) in cells.iter().enumerate() {
            if !cell.eta.l1 {
                return Err(VerifyError::NotIntegrable(cell.eta.id.clone()));
            }
            let tolerance = self.class_tolerance(&cell.eta);
            let key = (cell.k, cell.g, cell.variant, tolerance.to_bits());
            let b = match index.get(&key) {
                Some(&b) => b,
                None => {
                    let w = self.weighted(cell.k, cell.g, cell.variant)?;
                    batches.push(Batch {
                        k: cell.k,
                        g: cell.g,
                        variant: cell.variant,
                        tolerance,
                        members: Vec::new(),
                        etas: Vec::new(),
                        weight: Tape::compile(&self.pool, &[w]),
                        quad: QuadratureConfig::default(),
                    });
                    index.insert(key, batches.len() - 1);
                    batches.len() - 1
                }
            };
            batches[b].members.push(i);
            batches[b].etas.push(cell.eta.clone());
        }
        for b in &mut batches {
            b.quad = self.quadrature_for(b.tolerance, hints_of(&b.etas));
        }
        Ok(batches)
    }

    fn run_batch(&self, b: &Batch) -> Result<Vec<IdentityReport>, VerifyError> {
        let start = Instant::now();
        let kind = self.domain.kind();
        let rhs = self.integrate_vec(
            b.etas.len(),
            |s, out| {
                let w = b.weight.eval(s.x)?;
                for (o, eta) in out.iter_mut().zip(&b.etas) {
                    *o = w * eta.eval(&s);
                }
                Ok(())
            },
            &b.quad,
        )?;
        let closed: Vec<Option<Complex64>> = b
            .etas
            .iter()
            .map(|eta| reference_integral(eta, b.g, kind))
            .collect();
        let open: Vec<HoloTestFunction> = b
            .etas
            .iter()
            .zip(&closed)
            .filter(|(_, c)| c.is_none())
            .map(|(e, _)| e.clone())
            .collect();
        let oracle = if open.is_empty() {
            None
        } else {
            Some(self.lhs_oracle(b.g, &open, b.tolerance)?)
        };
        let per_cell = start.elapsed().as_secs_f64() / b.etas.len() as f64;
        let mut next_open = 0;
        let volume = self.domain.volume();
        let reports = b
            .etas
            .iter()
            .enumerate()
            .map(|(l, eta)| {
                let (lhs, source, lhs_err, lhs_ok) = match closed[l] {
                    Some(v) => (v, LhsSource::ClosedForm, 0.0, true),
                    None => {
                        let o = oracle.as_ref().expect("oracle computed");
                        let j = next_open;
                        next_open += 1;
                        (
                            o.values[j],
                            LhsSource::OracleQuadrature,
                            o.error_estimates[j],
                            o.converged,
                        )
                    }
                };
                let value = rhs.values[l];
                let abs_err = (value - lhs).norm();
                let rel_err = abs_err / lhs.norm().max(REL_FLOOR);
                let converged = rhs.converged && lhs_ok;
                let abs_tol = self.tolerances.abs.unwrap_or(b.tolerance * volume);
                let within = if lhs.norm() <= abs_tol {
                    abs_err <= abs_tol
                } else {
                    rel_err <= b.tolerance
                };
                IdentityReport {
                    domain: kind,
                    k: b.k,
                    g: b.g.to_string(),
                    eta: eta.id.clone(),
                    variant: b.variant,
                    lhs,
                    lhs_source: source,
                    lhs_error_estimate: lhs_err,
                    rhs: value,
                    rhs_error_estimate: rhs.error_estimates[l],
                    abs_err,
                    rel_err,
                    tolerance: b.tolerance,
                    converged,
                    pass: within && converged,
                    runtime_seconds: per_cell,
                }
            })
            .collect();
        Ok(reports)
    }

    /// Runs a list of cells, in parallel over batches; reports come back in
    /// the order of `cells`.
    pub fn run_cells(&mut self, cells: &[CellSpec]) -> Result<Vec<IdentityReport>, VerifyError> {
        let batches = self.plan(cells)?;
        let this = &*self;
        let results: Vec<Vec<IdentityReport>> = batches
            .par_iter()
            .map(|b| this.run_batch(b))
            .collect::<Result<_, _>>()?;
        let mut slots: Vec<Option<IdentityReport>> = vec![None; cells.len()];
        for (b, reports) in batches.iter().zip(results) {
            for (&i, r) in b.members.iter().zip(reports) {
                slots[i] = Some(r);
            }
        }
        Ok(slots
            .into_iter()
            .map(|r| r.expect("every cell planned"))
            .collect())
    }

    pub fn verify_identity(
        &mut self,
        k: u32,
        g_id: &str,
        eta_id: &str,
        variant: Variant,
    ) -> Result<IdentityReport, VerifyError> {
        let cell = CellSpec {
            k,
            g: g_id.parse()?,
            eta: self.eta(eta_id)?,
            variant,
        };
        Ok(self.run_cells(std::slice::from_ref(&cell))?.remove(0))
    }

    /// Runs both variants on one cell and compares their right-hand sides.
    pub fn variant_discrimination(
        &mut self,
        k: u32,
        g_id: &str,
        eta_id: &str,
    ) -> Result<VariantReport, VerifyError> {
        if k < 2 {
            return Err(VerifyError::Argument(format!(
                "variants coincide for k = {k}; need k >= 2"
            )));
        }
        let g: GKind = g_id.parse()?;
        let eta = self.eta(eta_id)?;
        let cells: Vec<CellSpec> = [Variant::Corrected, Variant::Literal]
            .into_iter()
            .map(|variant| CellSpec {
                k,
                g,
                eta: eta.clone(),
                variant,
            })
            .collect();
        let mut reports = self.run_cells(&cells)?;
        let literal = reports.pop().expect("two reports");
        let corrected = reports.pop().expect("two reports");
        let gap = (corrected.rhs - literal.rhs).norm();
        let combined_error = corrected.rhs_error_estimate + literal.rhs_error_estimate;
        Ok(VariantReport {
            significant: gap > 10.0 * combined_error,
            corrected,
            literal,
            gap,
            combined_error,
        })
    }

    /// Maximum of `|δ^k ω_{k,g} η|` over collar samples.
    pub fn collar_sup(
        &mut self,
        k: u32,
        g: GKind,
        variant: Variant,
        eta: &HoloTestFunction,
        samples: usize,
        seed: u64,
    ) -> Result<f64, VerifyError> {
        let w = self.weighted(k, g, variant)?;
        let tape = Tape::compile(&self.pool, &[w]);
        let points = self.domain.sample_collar(samples, seed)?;
        let mut sup: f64 = 0.0;
        for p in &points {
            let v = tape.eval(p).map_err(QuadratureError::from)? * eta.eval(&Sample::at(p));
            sup = sup.max(v.norm());
        }
        Ok(sup)
    }
}

impl Harness {
    /// `δ^k ω_{k,g}` on a polar grid of the `z₁` plane, `r ∈ [0, 1]`.
    pub fn weight_grid(
        &mut self,
        k: u32,
        g: GKind,
        variant: Variant,
        radii: usize,
        angles: usize,
    ) -> Result<Vec<WeightSample>, VerifyError> {
        if radii < 2 || angles == 0 {
            return Err(VerifyError::Argument(
                "grid needs >= 2 radii and >= 1 angle".into(),
            ));
        }
        let w = self.weighted(k, g, variant)?;
        let tape = Tape::compile(&self.pool, &[w]);
        let dim = self.domain.real_dim();
        let mut out = Vec::with_capacity(radii * angles);
        for i in 0..radii {
            let r = i as f64 / (radii - 1) as f64;
            for j in 0..angles {
                let theta = std::f64::consts::TAU * j as f64 / angles as f64;
                let mut x = vec![0.0; dim];
                x[0] = r * theta.cos();
                x[1] = r * theta.sin();
                let value = tape.eval(&x).map_err(QuadratureError::from)?;
                out.push(WeightSample { r, theta, value });
            }
        }
        Ok(out)
    }
}

/// Runs the configured matrix and collects the suite report.
pub fn run_suite(cfg: &RunConfig) -> Result<SuiteReport, VerifyError> {
    let mut harness = cfg.harness()?;
    let cells = cfg.cells();
    let reports = harness.run_cells(&cells)?;
    let mut out = Vec::with_capacity(cells.len());
    for (cell, identity) in cells.iter().zip(reports) {
        let collar_sup = harness.collar_sup(
            cell.k,
            cell.g,
            cell.variant,
            &cell.eta,
            cfg.collar_samples,
            cfg.seed,
        )?;
        out.push(SuiteCell {
            identity,
            collar_sup,
        });
    }
    Ok(SuiteReport::new(cfg.domain, cfg.seed, out))
}

fn hints_of(etas: &[HoloTestFunction]) -> Vec<Complex64> {
    let mut hints: Vec<Complex64> = Vec::new();
    for e in etas {
        for h in &e.singularities {
            if !hints.contains(h) {
                hints.push(*h);
            }
        }
    }
    hints
}
