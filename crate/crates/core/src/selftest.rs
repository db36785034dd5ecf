//! Fast invariant checks for a fresh build.

use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use crate::field::{apply_n, apply_t, ExprPool, FieldExpr, Tape};
use crate::geometry::{Blend, CutoffProfile, DomainKind, DomainModel};
use crate::quadrature::{integrate_disc, oracle_monomial_moment, QuadratureConfig, Sample};
use crate::verify::{Harness, VerifyError};
use crate::weights::Variant;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// Largest observed deviation.
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            threshold,
            pass: value.is_finite() && value <= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfTestReport {
    pub schema_version: String,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub runtime_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfTestOptions {
    pub blend: Blend,
    pub samples: usize,
    pub seed: u64,
}

impl Default for SelfTestOptions {
    fn default() -> Self {
        SelfTestOptions {
            blend: Blend::default(),
            samples: 1000,
            seed: 1,
        }
    }
}

/// Largest deviations of the geometric identities over collar samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometryInvariants {
    /// `max |N δ − 1|`
    pub n_delta: f64,
    /// `max |T δ|`
    pub t_delta: f64,
    /// `max |‖∇δ‖ − 1|`
    pub grad_norm: f64,
}

pub fn geometry_invariants(
    pool: &mut ExprPool,
    domain: &DomainModel,
    samples: usize,
    seed: u64,
) -> Result<GeometryInvariants, VerifyError> {
    let d = domain.delta();
    let n = apply_n(pool, d, domain);
    let t = apply_t(pool, d, domain);
    let mut roots = vec![n, t];
    roots.extend_from_slice(domain.gradient());
    let tape = Tape::compile(pool, &roots);
    let mut out = vec![Complex64::new(0.0, 0.0); roots.len()];
    let mut inv = GeometryInvariants {
        n_delta: 0.0,
        t_delta: 0.0,
        grad_norm: 0.0,
    };
    for p in domain.sample_collar(samples, seed)? {
        tape.eval_into(&p, &mut out)
            .map_err(crate::quadrature::QuadratureError::from)?;
        let grad = out[2..].iter().map(|g| g.norm_sqr()).sum::<f64>().sqrt();
        inv.n_delta = inv.n_delta.max((out[0] - 1.0).norm());
        inv.t_delta = inv.t_delta.max(out[1].norm());
        inv.grad_norm = inv.grad_norm.max((grad - 1.0).abs());
    }
    Ok(inv)
}

/// `z₁^m` and `exp(z₁)` as expressions.
pub fn holomorphic_expr(pool: &mut ExprPool, id: &str) -> Option<FieldExpr> {
    let x = pool.coord(1);
    let y = pool.coord(2);
    let iy = pool.scale(Complex64::new(0.0, 1.0), y);
    let z = pool.add(x, iy);
    if id == "exp" {
        return Some(pool.exp(z));
    }
    let m: u32 = id.strip_prefix("pow:")?.parse().ok()?;
    Some(if m == 0 { pool.one() } else { pool.power(z, m) })
}

/// `max |Nη − i·Tη|` over collar samples; zero for holomorphic `η`.
pub fn holomorphy_defect(
    pool: &mut ExprPool,
    domain: &DomainModel,
    eta: FieldExpr,
    samples: usize,
    seed: u64,
) -> Result<f64, VerifyError> {
    let n = apply_n(pool, eta, domain);
    let t = apply_t(pool, eta, domain);
    let it = pool.scale(Complex64::new(0.0, 1.0), t);
    let diff = pool.sub(n, it);
    let tape = Tape::compile(pool, &[diff]);
    let mut worst: f64 = 0.0;
    for p in domain.sample_collar(samples, seed)? {
        let v = tape
            .eval(&p)
            .map_err(crate::quadrature::QuadratureError::from)?;
        worst = worst.max(v.norm());
    }
    Ok(worst)
}

/// Central-difference check of structural first and second derivatives of
/// `δ·ζ` at a few points.
fn derivative_check(pool: &mut ExprPool, domain: &DomainModel) -> f64 {
    let cutoff = CutoffProfile::new(pool, domain);
    let e = pool.mul(domain.delta(), cutoff.zeta);
    let dx = pool.partial(e, 1);
    let dxy = pool.partial(dx, 2);
    let tape_e = Tape::compile(pool, &[e]);
    let tape_d = Tape::compile(pool, &[dx, dxy]);
    let f = |x: f64, y: f64| tape_e.eval(&[x, y]).map(|v| v.re).unwrap_or(f64::NAN);
    let dx_fd = |x: f64, y: f64, h: f64| (f(x + h, y) - f(x - h, y)) / (2.0 * h);
    let dxy_fd = |x: f64, y: f64, h: f64| {
        (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4.0 * h * h)
    };
    // one Richardson step removes the h² term
    let rich = |d: &dyn Fn(f64) -> f64, h: f64| (4.0 * d(h / 2.0) - d(h)) / 3.0;
    let h = 2e-4;
    let mut worst: f64 = 0.0;
    for &(x, y) in &[(0.3, 0.4), (0.55, 0.6), (-0.7, 0.5), (0.1, -0.88)] {
        let mut d = [Complex64::new(0.0, 0.0); 2];
        if tape_d.eval_into(&[x, y], &mut d).is_err() {
            return f64::NAN;
        }
        let fx = rich(&|h| dx_fd(x, y, h), h);
        let fxy = rich(&|h| dxy_fd(x, y, h), h);
        worst = worst
            .max((d[0].re - fx).abs() / fx.abs().max(1.0))
            .max((d[1].re - fxy).abs() / fxy.abs().max(1.0));
    }
    worst
}

fn run(opts: &SelfTestOptions) -> Result<Vec<Check>, VerifyError> {
    let mut checks = Vec::new();
    let mut pool = ExprPool::new();
    let domain = DomainModel::with_blend(&mut pool, DomainKind::Disc, 0.05, 0.15, opts.blend)?;

    let g = geometry_invariants(&mut pool, &domain, opts.samples, opts.seed)?;
    checks.push(Check::new("geometry: |N delta - 1|", g.n_delta, 1e-10));
    checks.push(Check::new("geometry: |T delta|", g.t_delta, 1e-12));
    checks.push(Check::new("geometry: |grad delta| - 1", g.grad_norm, 1e-10));
    for id in ["pow:3", "exp"] {
        let eta = holomorphic_expr(&mut pool, id).expect("known id");
        let defect = holomorphy_defect(&mut pool, &domain, eta, opts.samples, opts.seed)?;
        checks.push(Check::new(
            format!("field: |N eta - i T eta|, {id}"),
            defect,
            1e-8,
        ));
    }
    checks.push(Check::new(
        "field: derivatives vs central differences",
        derivative_check(&mut pool, &domain),
        1e-5,
    ));

    let cfg = QuadratureConfig::default();
    let mut worst: f64 = 0.0;
    for m in 0..4u32 {
        for p in 0..4u32 {
            let exact = oracle_monomial_moment(m, p, 0.0)?;
            let q = integrate_disc(
                |s: Sample<'_>| Ok(s.z().powu(m) * s.z().conj().powu(p)),
                &cfg,
            )?;
            worst = worst.max((q.value - exact).norm());
        }
    }
    checks.push(Check::new("quadrature: monomial moments", worst, 1e-10));

    let mut h = Harness::from_parts(pool, domain);
    let r = h.verify_identity(1, "one", "const", Variant::Corrected)?;
    checks.push(Check::new(
        "identity: k = 1, g = one, eta = const",
        r.rel_err,
        r.tolerance,
    ));
    Ok(checks)
}

/// Runs the checks. Setup failures are errors; failed checks are reported.
pub fn self_test(opts: &SelfTestOptions) -> Result<SelfTestReport, VerifyError> {
    let start = Instant::now();
    let checks = run(opts)?;
    Ok(SelfTestReport {
        schema_version: crate::report::SCHEMA_VERSION.into(),
        pass: checks.iter().all(|c| c.pass),
        checks,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_build_passes() {
        let r = self_test(&SelfTestOptions::default()).unwrap();
        for c in &r.checks {
            assert!(c.pass, "{c:?}");
        }
        assert!(r.pass);
    }

    #[test]
    fn perturbed_blend_fails_gradient_check() {
        let opts = SelfTestOptions {
            blend: Blend {
                start: 0.25,
                end: 0.9,
            },
            ..SelfTestOptions::default()
        };
        let r = self_test(&opts).unwrap();
        assert!(!r.pass);
        let grad = r.checks.iter().find(|c| c.name.contains("grad")).unwrap();
        assert!(!grad.pass, "{grad:?}");
    }
}
