use std::f64::consts::PI;

use holoweight::bergman::{evaluate, weighted_negative_norm, DiscBergmanBasis};
use holoweight::field::ExprPool;
use holoweight::geometry::{DomainKind, DomainModel};
use holoweight::quadrature::{integrate_disc, QuadratureConfig, Sample};
use holoweight::Complex64;

fn cfg() -> QuadratureConfig {
    QuadratureConfig {
        rel_tol: 1e-12,
        abs_tol: 1e-14,
        ..QuadratureConfig::default()
    }
}

fn f(s: &Sample<'_>) -> Complex64 {
    s.z().conj() * s.z().powu(2) * s.x[0].exp()
}

#[test]
fn projection_is_idempotent() {
    let b = DiscBergmanBasis::new(24);
    let once = b.project(|s: Sample<'_>| Ok(f(&s)), &cfg()).unwrap();
    let twice = b
        .project(|s: Sample<'_>| Ok(evaluate(&once.coeffs, s.z())), &cfg())
        .unwrap();
    for (a, c) in once.coeffs.iter().zip(&twice.coeffs) {
        assert!((a - c).norm() < 1e-10, "{a} vs {c}");
    }
}

#[test]
fn projection_is_self_adjoint() {
    let b = DiscBergmanBasis::new(30);
    let g = |s: &Sample<'_>| s.z().conj().powu(2) * s.z() + Complex64::new(0.0, s.x[1]);
    let bf = b.project(|s: Sample<'_>| Ok(f(&s)), &cfg()).unwrap();
    let bg = b.project(|s: Sample<'_>| Ok(g(&s)), &cfg()).unwrap();
    let lhs = integrate_disc(
        |s: Sample<'_>| Ok(evaluate(&bf.coeffs, s.z()) * g(&s).conj()),
        &cfg(),
    )
    .unwrap()
    .value;
    let rhs = integrate_disc(
        |s: Sample<'_>| Ok(f(&s) * evaluate(&bg.coeffs, s.z()).conj()),
        &cfg(),
    )
    .unwrap()
    .value;
    assert!((lhs - rhs).norm() < 1e-9, "{lhs} vs {rhs}");
}

#[test]
fn projection_of_holomorphic_polynomial_is_itself() {
    let b = DiscBergmanBasis::new(8);
    let p = b
        .project(|s: Sample<'_>| Ok(s.z().powu(3) * 2.0 - s.z()), &cfg())
        .unwrap();
    let mut want = vec![Complex64::new(0.0, 0.0); 9];
    want[1] = Complex64::new(-1.0, 0.0);
    want[3] = Complex64::new(2.0, 0.0);
    for (a, w) in p.coeffs.iter().zip(&want) {
        assert!((a - w).norm() < 1e-12, "{:?}", p.coeffs);
    }
}

/// `∫_D |z|^{2j} (1−|z|)² dA = 2π·B(2j+2, 3)`. The smooth `δ` equals `1 − |z|`
/// only on the outer part of the disc, so agreement improves as the mass of
/// `|z|^{2j}` moves outward.
#[test]
fn weighted_norm_tends_to_beta_integral() {
    let mut pool = ExprPool::new();
    let domain = DomainModel::new(&mut pool, DomainKind::Disc, 0.05, 0.15).unwrap();
    let mut last = f64::INFINITY;
    for j in [5u32, 10, 20, 40] {
        let jf = j as f64;
        let beta = 2.0 * PI * 2.0 / ((2.0 * jf + 2.0) * (2.0 * jf + 3.0) * (2.0 * jf + 4.0));
        let got =
            weighted_negative_norm(&domain, |s: Sample<'_>| Ok(s.z().conj().powu(j)), 1, &cfg())
                .unwrap();
        let rel = (got * got - beta).abs() / beta;
        println!(
            "j={j}: quadrature {:.12e} beta {beta:.12e} rel {rel:.2e}",
            got * got
        );
        assert!(rel <= last.max(1e-12), "j={j}: {rel} after {last}");
        last = rel;
    }
    assert!(last < 1e-10, "{last}");
}
