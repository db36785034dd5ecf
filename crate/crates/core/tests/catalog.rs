use std::f64::consts::PI;

use holoweight::catalog::{
    catalog, holomorphy_relation_check, reference_integral, GKind, HoloTestFunction,
};
use holoweight::field::ExprPool;
use holoweight::geometry::{DomainKind, DomainModel};
use holoweight::quadrature::{integrate_ball, integrate_disc, QuadratureConfig, Sample};
use holoweight::Complex64;

/// `a_m` from the Cauchy integral on `|z| = 1/2`; the trapezoid rule is
/// spectrally accurate for periodic analytic integrands.
fn cauchy_coeff(eta: &HoloTestFunction, m: u32) -> Complex64 {
    let n = 256;
    let r = 0.5;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let z = Complex64::from_polar(r, 2.0 * PI * j as f64 / n as f64);
        acc += eta.eval_z(z) / z.powu(m);
    }
    acc / n as f64
}

#[test]
fn taylor_coefficients_match_cauchy_integrals() {
    for eta in catalog(DomainKind::Disc) {
        for m in 0..8 {
            let a = eta.taylor_coeff(m).unwrap();
            let c = cauchy_coeff(&eta, m);
            assert!(
                (a - c).norm() <= 1e-12 * c.norm().max(1.0),
                "{eta} m={m}: {a} vs {c}"
            );
        }
    }
}

#[test]
fn derivatives_match_difference_quotients() {
    let h = 1e-5;
    for eta in catalog(DomainKind::Disc) {
        for z in [
            Complex64::new(0.3, 0.2),
            Complex64::new(-0.5, 0.6),
            Complex64::new(0.1, -0.8),
        ] {
            let d = eta.deriv(z).unwrap();
            let fd = (eta.eval_z(z + h) - eta.eval_z(z - h)) / (2.0 * h);
            assert!(
                (d - fd).norm() <= 1e-7 * d.norm().max(1.0),
                "{eta} at {z}: {d} vs {fd}"
            );
        }
    }
}

#[test]
fn cauchy_riemann_relation_holds_on_the_collar() {
    let mut pool = ExprPool::new();
    let domain = DomainModel::disc(&mut pool, 0.05, 0.15).unwrap();
    for eta in catalog(DomainKind::Disc) {
        let r = holomorphy_relation_check(&eta, &pool, &domain, 500, 11).unwrap();
        assert!(r.max_residual <= 1e-12, "{eta}: {r:?}");
        // difference quotients lose accuracy close to the pole of sing:a
        if eta.singularities.is_empty() {
            assert!(r.max_residual_fd <= 1e-6, "{eta}: {r:?}");
        } else {
            assert!(r.max_residual_fd.is_finite(), "{eta}: {r:?}");
        }
    }
}

#[test]
fn disc_reference_integrals_match_quadrature() {
    let gs = [
        GKind::One,
        GKind::ConjPow(1),
        GKind::ConjPow(2),
        GKind::Pow(2),
    ];
    for eta in catalog(DomainKind::Disc) {
        let cfg = QuadratureConfig {
            singular_points: eta.singularities.clone(),
            rel_tol: 1e-9,
            abs_tol: 1e-11,
            max_subdivisions: 20_000,
            ..QuadratureConfig::default()
        };
        let tol = if eta.singularities.is_empty() {
            1e-8
        } else {
            1e-5
        };
        for g in gs {
            let exact = reference_integral(&eta, g, DomainKind::Disc).unwrap();
            let q = integrate_disc(|s: Sample<'_>| Ok(eta.eval(&s) * g.eval(s.x)), &cfg).unwrap();
            assert!(
                (q.value - exact).norm() <= tol * exact.norm().max(1.0),
                "{eta} g={g}: {} vs {exact}",
                q.value
            );
        }
    }
}

#[test]
fn ball_reference_integrals_match_quadrature() {
    let cfg = QuadratureConfig {
        rel_tol: 1e-8,
        abs_tol: 1e-10,
        ..QuadratureConfig::default()
    };
    for eta in catalog(DomainKind::Ball) {
        for g in [GKind::One, GKind::ConjPow(1), GKind::ConjPow(2)] {
            let exact = reference_integral(&eta, g, DomainKind::Ball).unwrap();
            let q = integrate_ball(|s: Sample<'_>| Ok(eta.eval(&s) * g.eval(s.x)), &cfg).unwrap();
            assert!(
                (q.value - exact).norm() <= 1e-7 * exact.norm().max(1.0),
                "{eta} g={g}: {} vs {exact}",
                q.value
            );
        }
    }
    // ∫_B |z₁|² = π²/6
    let eta = HoloTestFunction::parse("mono:1,0", DomainKind::Ball).unwrap();
    let v = reference_integral(&eta, GKind::ConjPow(1), DomainKind::Ball).unwrap();
    assert!((v.re - PI * PI / 6.0).abs() < 1e-15);
}

#[test]
fn integrability_classes_follow_the_exponent() {
    for (a, l1, l2) in [
        (0.5, true, true),
        (1.0, true, false),
        (1.5, true, false),
        (1.9, true, false),
        (2.0, false, false),
    ] {
        let eta = HoloTestFunction::parse(&format!("sing:{a}"), DomainKind::Disc).unwrap();
        assert_eq!((eta.l1, eta.l2), (l1, l2), "sing:{a}");
    }
}

#[test]
fn ids_round_trip_and_unknown_ids_fail() {
    for id in ["one", "conj_pow:3", "pow:2", "exp_x1"] {
        assert_eq!(id.parse::<GKind>().unwrap().to_string(), id);
    }
    for bad in ["", "two", "conj_pow:", "conj_pow:-1", "pow:x", "one:1"] {
        assert!(bad.parse::<GKind>().is_err(), "{bad:?}");
    }
    for bad in ["", "pow", "pow:a", "sing:", "sing:x", "mono:1"] {
        assert!(
            HoloTestFunction::parse(bad, DomainKind::Disc).is_err(),
            "{bad:?}"
        );
    }
    assert!(HoloTestFunction::parse("mono:1,1", DomainKind::Disc).is_err());
    assert!(HoloTestFunction::parse("exp", DomainKind::Ball).is_err());
}
