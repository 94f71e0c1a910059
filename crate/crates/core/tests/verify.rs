use ncstokes::verify::{census, macro_report, run_suite, Check, SuiteConfig};
use ncstokes::{ElementKind, Pair};

/// Unknown counts on the Kuhn cube with traction only on the top face,
/// counted from mesh entities: `12 n^3 + 6 n^2` faces, `10 n^2` of them
/// constrained, `6 n^3` tetrahedra.
fn oracle(kind: ElementKind, n: usize) -> (usize, usize) {
    let free_faces = 12 * n.pow(3) + 6 * n.pow(2) - 10 * n.pow(2);
    let tets = 6 * n.pow(3);
    let (per_face, per_tet, pressure_local) = match kind {
        ElementKind::Nc2 => (3, 8, 10),
        ElementKind::Nc3 => (6, 11, 20),
        ElementKind::Nc2r => (3, 1, 4),
        ElementKind::Nc3r => (6, 1, 10),
    };
    (3 * (per_face * free_faces + per_tet * tets), pressure_local * tets)
}

#[test]
fn census_matches_entity_counts() {
    let (entries, report) = census(&[1, 2, 3]).unwrap();
    assert!(report.all_pass());
    assert_eq!(entries.len(), 12);
    for e in &entries {
        assert_eq!((e.velocity, e.pressure), oracle(e.pair.velocity, e.level), "{} n={}", e.pair.name(), e.level);
    }
    assert_eq!(oracle(ElementKind::Nc2, 1), (3 * (3 * 8 + 48), 60));
}

#[test]
fn stars_carry_exactly_the_constant_pressure() {
    let (results, report) = macro_report(&Pair::all_standard()).unwrap();
    assert!(report.all_pass(), "{}", report.to_csv());
    for r in results {
        assert_eq!(r.tets, 24);
        assert_eq!(r.nullity, 0);
        assert_eq!(r.nullity_unconstrained, 1);
    }
}

fn quick_config() -> SuiteConfig {
    SuiteConfig {
        checks: vec![Check::Certify, Check::Census, Check::Macro, Check::Patch],
        ..SuiteConfig::default()
    }
}

#[test]
fn report_is_independent_of_the_thread_count() {
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_suite(&quick_config()).unwrap().to_csv())
    };
    let a = run(1);
    assert_eq!(a, run(1));
    assert_eq!(a, run(3));
    assert!(a.starts_with("check,pair,level,metric,expected,computed,pass\n"));
}

#[test]
fn quick_checks_pass() {
    let report = run_suite(&quick_config()).unwrap();
    let failures: Vec<_> = report.failures().collect();
    assert!(failures.is_empty(), "{failures:?}");
    for check in ["certify", "census", "macro", "patch"] {
        assert!(report.rows.iter().any(|r| r.check == check));
    }
}

#[test]
fn invalid_configurations_are_rejected() {
    let bad_mu = SuiteConfig { mu: 0.0, ..SuiteConfig::default() };
    assert!(run_suite(&bad_mu).is_err());
    let bad_levels = SuiteConfig { levels: Some(vec![2, 1]), ..SuiteConfig::default() };
    assert!(run_suite(&bad_levels).is_err());
    assert!("bogus".parse::<Check>().is_err());
    assert_eq!("InfSup".parse::<Check>().unwrap(), Check::InfSup);
}
