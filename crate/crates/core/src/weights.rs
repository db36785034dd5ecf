//! Construction of the boundary-vanishing weight `ω_{k,g}`.
//!
//! For every holomorphic `η ∈ L¹(Ω)`,
//!
//! ```text
//! ∫ η·g dV = ∫ δ^k · ω_{k,g} · η dV.
//! ```
//!
//! The first-order weight for a multiplier `γ` is
//!
//! ```text
//! ω_1 = (1 − ζ)/δ · γ − N(ζγ) − (Δδ)·ζγ + i·T(ζγ),
//! ```
//!
//! and higher orders are obtained by feeding `ω_m/(m+1)` back in as `γ`
//! with `δ^{m+1}` in place of `δ`.

use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::field::{apply_n, apply_t, ExprPool, FieldExpr, Tape};
use crate::geometry::{CutoffProfile, DomainModel};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WeightError {
    #[error("weight order must be at least 1, got {0}")]
    Order(u32),
    #[error("unknown variant '{0}' (expected \"corrected\" or \"literal\")")]
    UnknownVariant(String),
    #[error("vanishing profile scales must lie in (0, {inner}), got {scale}")]
    Scale { scale: f64, inner: f64 },
    #[error(transparent)]
    Field(#[from] crate::field::FieldError),
}

/// Which induction step to use for orders `k ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Middle term `(Δδ)·ζ·ω_m`, consistent with the first-order derivation.
    Corrected,
    /// Middle term `(Δδ)·ω_m` without the cutoff.
    Literal,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Corrected => "corrected",
            Variant::Literal => "literal",
        }
    }
}

impl FromStr for Variant {
    type Err = WeightError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "corrected" => Ok(Variant::Corrected),
            "literal" => Ok(Variant::Literal),
            other => Err(WeightError::UnknownVariant(other.to_string())),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A built `ω_{k,g}` with its provenance.
#[derive(Debug, Clone)]
pub struct WeightProgram {
    pub k: u32,
    pub g: FieldExpr,
    pub variant: Variant,
    pub omega: FieldExpr,
    /// Shared node count of `ω_m` after each step `m = 1..=k`.
    pub node_counts: Vec<usize>,
}

impl WeightProgram {
    /// `δ^k · ω_{k,g}`, the full weight multiplying `η`.
    pub fn weighted(&self, pool: &mut ExprPool, domain: &DomainModel) -> FieldExpr {
        let dk = pool.power(domain.delta(), self.k);
        pool.mul(dk, self.omega)
    }
}

fn collar_factor(pool: &mut ExprPool, domain: &DomainModel, cutoff: &CutoffProfile) -> FieldExpr {
    let one = pool.one();
    let one_minus_zeta = pool.sub(one, cutoff.zeta);
    pool.collar_quotient(one_minus_zeta, domain.delta(), domain.collar_inner)
}

/// One step of the construction: `(1−ζ)/δ·γ − c·[N(ζγ) + (Δδ)·m·γ − i·T(ζγ)]`
/// with `m = ζ` (`with_cutoff`) or `m = 1`.
fn step(
    pool: &mut ExprPool,
    gamma: FieldExpr,
    c: f64,
    with_cutoff: bool,
    domain: &DomainModel,
    cutoff: &CutoffProfile,
) -> FieldExpr {
    let q = collar_factor(pool, domain, cutoff);
    let outer = pool.mul(q, gamma);
    let zg = pool.mul(cutoff.zeta, gamma);
    let n_term = apply_n(pool, zg, domain);
    let middle_arg = if with_cutoff { zg } else { gamma };
    let lap = pool.mul(domain.laplacian_of_delta(), middle_arg);
    let t_term = apply_t(pool, zg, domain);
    let it = pool.scale(Complex64::new(0.0, 1.0), t_term);
    let neg_it = pool.neg(it);
    let bracket = pool.sum([n_term, lap, neg_it]);
    let scaled = pool.scale(Complex64::new(-c, 0.0), bracket);
    let w = pool.add(outer, scaled);
    pool.simplify(w)
}

/// `ω_{1,γ}` for an arbitrary smooth multiplier `γ`.
pub fn base_weight(
    pool: &mut ExprPool,
    gamma: FieldExpr,
    domain: &DomainModel,
    cutoff: &CutoffProfile,
) -> FieldExpr {
    step(pool, gamma, 1.0, true, domain, cutoff)
}

/// `ω_{k,g}` by induction on `k`.
pub fn inductive_weight(
    pool: &mut ExprPool,
    k: u32,
    g: FieldExpr,
    domain: &DomainModel,
    cutoff: &CutoffProfile,
    variant: Variant,
) -> Result<WeightProgram, WeightError> {
    if k < 1 {
        return Err(WeightError::Order(k));
    }
    let mut omega = base_weight(pool, g, domain, cutoff);
    let mut node_counts = vec![pool.shared_size(omega)];
    for m in 1..k {
        let c = 1.0 / (m as f64 + 1.0);
        omega = step(
            pool,
            omega,
            c,
            variant == Variant::Corrected,
            domain,
            cutoff,
        );
        node_counts.push(pool.shared_size(omega));
    }
    Ok(WeightProgram {
        k,
        g,
        variant,
        omega,
        node_counts,
    })
}

/// Values of `N^j(δ^k ω)` at one distance from the boundary.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileRow {
    pub scale: f64,
    /// `max over rays |N^j(δ^k ω)|` for `j = 0..k`.
    pub magnitudes: Vec<f64>,
}

/// Decay of `δ^k ω_{k,g}` and its normal derivatives toward the boundary.
#[derive(Debug, Clone, Serialize)]
pub struct VanishingProfile {
    pub k: u32,
    pub rows: Vec<ProfileRow>,
    /// Least-squares log–log slope for each derivative order `j`; `None` when
    /// the values vanish to roundoff at every scale.
    pub slopes: Vec<Option<f64>>,
    /// `max |ω_{k,g}|` over the sampled rays and scales.
    pub sup_omega: f64,
}

/// Slope of the least-squares line through `(ln x, ln y)`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Directions of the boundary-normal rays used by [`vanishing_profile`].
pub fn normal_rays(domain: &DomainModel, count: usize) -> Vec<Vec<f64>> {
    let dim = domain.real_dim();
    (0..count)
        .map(|i| {
            let th = std::f64::consts::TAU * (i as f64 + 0.25) / count as f64;
            let mut v = vec![0.0; dim];
            if dim == 2 {
                v[0] = th.cos();
                v[1] = th.sin();
            } else {
                // spread over both complex factors of ℂ²
                let a = std::f64::consts::FRAC_PI_2 * (i as f64 + 0.5) / count as f64;
                v[0] = a.cos() * th.cos();
                v[1] = a.cos() * th.sin();
                v[2] = a.sin() * (2.0 * th).cos();
                v[3] = a.sin() * (2.0 * th).sin();
            }
            v
        })
        .collect()
}

/// Measures how `δ^k ω` and its first `k − 1` normal derivatives decay at
/// the given distances from the boundary along normal rays.
pub fn vanishing_profile(
    pool: &mut ExprPool,
    w: &WeightProgram,
    domain: &DomainModel,
    scales: &[f64],
) -> Result<VanishingProfile, WeightError> {
    for &s in scales {
        if !(s > 0.0 && s < domain.collar_inner) {
            return Err(WeightError::Scale {
                scale: s,
                inner: domain.collar_inner,
            });
        }
    }
    let mut exprs = vec![w.weighted(pool, domain)];
    for _ in 1..w.k {
        let last = *exprs.last().expect("non-empty");
        exprs.push(apply_n(pool, last, domain));
    }
    exprs.push(w.omega);
    let tape = Tape::compile(pool, &exprs);
    let rays = normal_rays(domain, 8);
    let kk = w.k as usize;
    let mut rows = Vec::with_capacity(scales.len());
    let mut sup_omega: f64 = 0.0;
    let mut vals = vec![Complex64::new(0.0, 0.0); exprs.len()];
    for &s in scales {
        let mut mags = vec![0.0f64; kk];
        for dir in &rays {
            let p: Vec<f64> = dir.iter().map(|u| (1.0 - s) * u).collect();
            tape.eval_into(&p, &mut vals)?;
            for j in 0..kk {
                mags[j] = mags[j].max(vals[j].norm());
            }
            sup_omega = sup_omega.max(vals[kk].norm());
        }
        rows.push(ProfileRow {
            scale: s,
            magnitudes: mags,
        });
    }
    let slopes = (0..kk)
        .map(|j| {
            let ys: Vec<f64> = rows.iter().map(|r| r.magnitudes[j]).collect();
            // below ~100 ulps of the collar-scale values the data is roundoff
            if ys.iter().all(|&y| y < 1e-13) {
                None
            } else {
                Some(loglog_slope(scales, &ys))
            }
        })
        .collect();
    Ok(VanishingProfile {
        k: w.k,
        rows,
        slopes,
        sup_omega,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DEFAULT_COLLAR_INNER, DEFAULT_COLLAR_OUTER};

    fn setup() -> (ExprPool, DomainModel, CutoffProfile) {
        let mut pool = ExprPool::new();
        let d = DomainModel::disc(&mut pool, DEFAULT_COLLAR_INNER, DEFAULT_COLLAR_OUTER).unwrap();
        let c = CutoffProfile::new(&mut pool, &d);
        (pool, d, c)
    }

    #[test]
    fn base_weight_at_origin_is_reciprocal_delta() {
        let (mut pool, d, c) = setup();
        let one = pool.one();
        let w = base_weight(&mut pool, one, &d, &c);
        let v = pool.eval(w, &[0.0, 0.0]).unwrap();
        assert!((v - Complex64::new(4.0 / 3.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn base_weight_of_zero_is_zero() {
        let (mut pool, d, c) = setup();
        let z = pool.zero();
        let w = base_weight(&mut pool, z, &d, &c);
        assert!(pool.is_zero(w));
    }

    #[test]
    fn base_weight_deep_in_collar_is_minus_laplacian() {
        let (mut pool, d, c) = setup();
        let one = pool.one();
        let w = base_weight(&mut pool, one, &d, &c);
        let v = pool.eval(w, &[0.97, 0.0]).unwrap();
        assert!((v.re - 1.0 / 0.97).abs() < 1e-13 && v.im.abs() < 1e-14);
    }

    #[test]
    fn order_one_ignores_variant() {
        let (mut pool, d, c) = setup();
        let one = pool.one();
        let a = inductive_weight(&mut pool, 1, one, &d, &c, Variant::Corrected).unwrap();
        let b = inductive_weight(&mut pool, 1, one, &d, &c, Variant::Literal).unwrap();
        assert_eq!(a.omega, b.omega);
        assert_eq!(a.omega, base_weight(&mut pool, one, &d, &c));
    }

    #[test]
    fn order_zero_is_rejected() {
        let (mut pool, d, c) = setup();
        let one = pool.one();
        assert_eq!(
            inductive_weight(&mut pool, 0, one, &d, &c, Variant::Corrected).unwrap_err(),
            WeightError::Order(0)
        );
    }

    #[test]
    fn order_two_at_cutoff_free_point() {
        // At r = 0.1 the cutoff and all its derivatives vanish and δ = 3/4 − r²
        // (χ = 0), so Δδ = −4. Corrected: ω₂ = ω₁/δ = 1/δ²;
        // literal adds −(1/2)(Δδ)ω₁ = −d/(2δ).
        let (mut pool, d, c) = setup();
        let one = pool.one();
        let p = [0.1, 0.0];
        let delta = 0.75 - 0.01;
        let lap = -4.0;
        let wc = inductive_weight(&mut pool, 2, one, &d, &c, Variant::Corrected).unwrap();
        let wl = inductive_weight(&mut pool, 2, one, &d, &c, Variant::Literal).unwrap();
        let vc = pool.eval(wc.omega, &p).unwrap();
        let vl = pool.eval(wl.omega, &p).unwrap();
        assert!((vc.re - 1.0 / (delta * delta)).abs() < 1e-12, "{vc}");
        let expected = 1.0 / (delta * delta) - lap / (2.0 * delta);
        assert!((vl.re - expected).abs() < 1e-12, "{vl} vs {expected}");
    }

    #[test]
    fn variants_agree_where_cutoff_is_one() {
        let (mut pool, d, c) = setup();
        let one = pool.one();
        let wc = inductive_weight(&mut pool, 2, one, &d, &c, Variant::Corrected).unwrap();
        let wl = inductive_weight(&mut pool, 2, one, &d, &c, Variant::Literal).unwrap();
        for p in [[0.97, 0.0], [0.0, -0.99], [0.6, 0.78]] {
            let a = pool.eval(wc.omega, &p).unwrap();
            let b = pool.eval(wl.omega, &p).unwrap();
            assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
        }
    }

    #[test]
    fn loglog_slope_of_power_law() {
        let xs = [1e-2, 1e-3, 1e-4];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x * x).collect();
        assert!((loglog_slope(&xs, &ys) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn profile_rejects_scales_outside_collar() {
        let (mut pool, d, c) = setup();
        let one = pool.one();
        let w = inductive_weight(&mut pool, 1, one, &d, &c, Variant::Corrected).unwrap();
        assert!(vanishing_profile(&mut pool, &w, &d, &[0.5]).is_err());
    }
}
