use std::f64::consts::PI;

use holoweight::quadrature::{integrate_disc, QuadratureConfig, Sample};
use holoweight::Complex64;

/// `∫_disc |1 − z|^{-2a} dV = π Σ |c_m|²/(m+1)` with `c_m` the Taylor
/// coefficients of `(1 − z)^{-a}`; summed directly, with the tail from the
/// asymptotics `c_m ≈ K m^{a−1}(1 + a(a−1)/(2m))`.
fn bergman_series_reference(a: f64) -> f64 {
    let big_m = 2_000_000usize;
    let mut c = 1.0f64;
    let mut sum = 1.0f64;
    for m in 1..=big_m {
        c *= (a + m as f64 - 1.0) / m as f64;
        sum += c * c / (m as f64 + 1.0);
    }
    let mf = big_m as f64;
    let k = c * mf.powf(1.0 - a) / (1.0 + a * (a - 1.0) / (2.0 * mf));
    let b = a * (a - 1.0) - 1.0;
    let x = mf + 0.5;
    // valid for 2a - 2 - 1 = -3/2 only
    assert_eq!(a, 0.75);
    let tail = k * k * (2.0 * x.powf(-0.5) + 2.0 * b / 3.0 * x.powf(-1.5));
    PI * (sum + tail)
}

fn singular_cfg(rel_tol: f64) -> QuadratureConfig {
    QuadratureConfig {
        rel_tol,
        abs_tol: 1e-14,
        singular_points: vec![Complex64::new(1.0, 0.0)],
        max_subdivisions: 20_000,
        ..QuadratureConfig::default()
    }
}

fn one_minus_z_pow(s: Sample) -> Result<Complex64, holoweight::field::FieldError> {
    let w = s.offset_from(Complex64::new(1.0, 0.0));
    Ok(Complex64::new(w.norm().powf(-1.5), 0.0))
}

#[test]
fn singular_integrand_error_estimate_is_honest() {
    let reference = bergman_series_reference(0.75);
    let mut previous: Option<f64> = None;
    for rel_tol in [1e-5, 1e-7, 1e-9] {
        let res = integrate_disc(one_minus_z_pow, &singular_cfg(rel_tol)).unwrap();
        assert!(res.converged, "rel_tol {rel_tol}: {res:?}");
        let err = (res.value.re - reference).abs();
        assert!(
            err <= 10.0 * res.error_estimate.max(1e-13 * reference),
            "rel_tol {rel_tol}: true error {err:e}, estimate {:e}",
            res.error_estimate
        );
        if let Some(p) = previous {
            assert!(err <= p.max(1e-12));
        }
        previous = Some(err);
    }
}

#[test]
fn result_is_identical_across_thread_counts() {
    let cfg = singular_cfg(1e-8);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| integrate_disc(one_minus_z_pow, &cfg).unwrap())
    };
    let a = run(1);
    let b = run(4);
    let c = run(4);
    assert_eq!(a.value.re.to_bits(), b.value.re.to_bits());
    assert_eq!(a, b);
    assert_eq!(b, c);
}

#[test]
fn integration_is_linear() {
    let cfg = QuadratureConfig {
        singular_points: vec![Complex64::new(1.0, 0.0)],
        ..QuadratureConfig::default()
    };
    let f = |s: Sample| Ok(s.z().exp());
    let g = |s: Sample| Ok((-s.offset_from(Complex64::new(1.0, 0.0))).powf(-0.5));
    let (a, b) = (Complex64::new(2.0, -1.0), Complex64::new(0.5, 3.0));
    let ia = integrate_disc(f, &cfg).unwrap();
    let ib = integrate_disc(g, &cfg).unwrap();
    let iab = integrate_disc(|s: Sample| Ok(a * f(s)? + b * g(s)?), &cfg).unwrap();
    let combined = a.norm() * ia.error_estimate + b.norm() * ib.error_estimate + iab.error_estimate;
    let gap = (iab.value - (a * ia.value + b * ib.value)).norm();
    assert!(gap <= combined + 1e-13, "gap {gap:e} vs {combined:e}");
    // mean value property for both holomorphic pieces
    assert!((ia.value - PI).norm() < 1e-10);
    assert!((ib.value - PI).norm() < 1e-8);
}
