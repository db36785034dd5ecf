use holoweight::config::parse_config;
use holoweight::geometry::DomainKind;
use holoweight::quadrature::QuadratureConfig;
use holoweight::report::{emit_reports, SuiteReport};
use holoweight::verify::{run_suite, Harness, IdentityReport, VerifyError};
use holoweight::weights::Variant;

fn disc() -> Harness {
    Harness::new(DomainKind::Disc, 0.05, 0.15).unwrap()
}

#[test]
fn right_sides_agree_across_orders() {
    let mut h = disc();
    for (g, eta) in [
        ("conj_pow:1", "pow:1"),
        ("one", "exp"),
        ("conj_pow:2", "rat2"),
    ] {
        let rhs: Vec<_> = (1..=3)
            .map(|k| {
                h.verify_identity(k, g, eta, Variant::Corrected)
                    .unwrap()
                    .rhs
            })
            .collect();
        for r in &rhs[1..] {
            assert!(
                (r - rhs[0]).norm() <= 1e-8 * rhs[0].norm().max(1.0),
                "{g} {eta}: {rhs:?}"
            );
        }
    }
}

#[test]
fn tightening_the_quadrature_keeps_errors_honest() {
    let mut last = f64::INFINITY;
    for tol in [1e-5, 5e-6, 2.5e-6, 1.25e-6] {
        let cfg = QuadratureConfig {
            rel_tol: tol,
            abs_tol: tol * 1e-3,
            ..QuadratureConfig::default()
        };
        let mut h = disc().with_quadrature(cfg, true);
        let r = h
            .verify_identity(2, "conj_pow:1", "sing:1.5", Variant::Corrected)
            .unwrap();
        assert!(r.converged);
        assert!(
            r.abs_err <= 10.0 * r.rhs_error_estimate + 1e-13,
            "tol {tol}: {r:?}"
        );
        assert!(
            r.rhs_error_estimate <= last * 1.5,
            "tol {tol}: estimate grew"
        );
        last = r.rhs_error_estimate;
    }
}

#[test]
fn identity_report_json_round_trip() {
    let mut h = disc();
    let r = h
        .verify_identity(1, "conj_pow:1", "pow:1", Variant::Corrected)
        .unwrap();
    let text = serde_json::to_string(&r).unwrap();
    let back: IdentityReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, r);
}

#[test]
fn bad_requests_are_errors() {
    let mut h = disc();
    assert!(matches!(
        h.verify_identity(1, "nope", "const", Variant::Corrected),
        Err(VerifyError::Catalog(_))
    ));
    assert!(matches!(
        h.verify_identity(1, "one", "sing:2.5", Variant::Corrected),
        Err(VerifyError::NotIntegrable(_))
    ));
    assert!(h
        .verify_identity(0, "one", "const", Variant::Corrected)
        .is_err());
    assert!(h.variant_discrimination(1, "one", "const").is_err());
}

#[test]
fn small_suite_from_toml_writes_reports() {
    let cfg = parse_config(
        r#"
        seed = 5
        [suite]
        k = [1, 2]
        g = ["one"]
        eta = ["const", "sing:1.5"]
        variant = ["corrected", "literal"]
        collar_samples = 50
        "#,
    )
    .unwrap();
    let report = run_suite(&cfg).unwrap();
    assert_eq!(report.cells.len(), 8);
    let order: Vec<_> = report
        .cells
        .iter()
        .map(|c| (c.identity.k, c.identity.eta.clone(), c.identity.variant))
        .collect();
    assert_eq!(order[0], (1, "const".into(), Variant::Corrected));
    assert_eq!(order[1], (1, "const".into(), Variant::Literal));
    assert_eq!(order[7], (2, "sing:1.5".into(), Variant::Literal));
    // k = 1 has no middle-term difference, so both variants pass there
    assert!(report.cells[..4].iter().all(|c| c.identity.pass));
    assert!(report.cells.iter().all(|c| c.collar_sup.is_finite()));

    let dir = tempfile::tempdir().unwrap();
    emit_reports(&report, dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("suite.json")).unwrap();
    let back: SuiteReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, report);
}

#[test]
fn empty_matrix_gives_empty_report() {
    let cfg = parse_config("[suite]\neta = []\n").unwrap();
    let report = run_suite(&cfg).unwrap();
    assert!(report.cells.is_empty());
    assert!(report.all_pass);
}
