use extremal_core::harness::{self, HarnessConfig, Status, SCENARIO_IDS};
use extremal_core::Error;

#[test]
fn every_scenario_passes() {
    // coarse 2D grid; the default grid is exercised by the acceptance target
    let cfg = HarnessConfig::from_text("n_theta = 32\nn_s = 64\n").unwrap();
    let report = harness::run_all(&cfg).unwrap();
    assert_eq!(report.scenarios.len(), SCENARIO_IDS.len());
    for s in &report.scenarios {
        let failed: Vec<_> = s.failed_checks().map(|c| &c.name).collect();
        assert_eq!(s.status, Status::Pass, "{}: {failed:?} {:?}", s.id, s.diagnostics);
        assert!(!s.checks.is_empty());
        assert!(s.checks.iter().all(|c| !c.citation.is_empty()), "{}", s.id);
        assert!(!s.table.columns.is_empty(), "{}", s.id);
        assert!(s.table.rows.iter().all(|r| r.len() == s.table.columns.len()));
    }
    assert!(report.all_passed());
    assert_eq!(report.run_id, format!("run-{}", &report.config_digest[..12]));
    let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(json["scenarios"].as_array().unwrap().len(), SCENARIO_IDS.len());
}

#[test]
fn reports_are_deterministic() {
    let cfg = HarnessConfig::default();
    let ids = ["green-symmetry-sweep", "gauss-bonnet-selftest"];
    let a = harness::run(&ids, &cfg).unwrap();
    let b = harness::run(&ids, &cfg).unwrap();
    assert_eq!(a.to_json(), b.to_json());
}

#[test]
fn grid_override_changes_rows_and_digest() {
    let mut cfg = HarnessConfig::default();
    cfg.set(harness::grid_key("annulus-instability").unwrap(), "0.2:1.4:0.1").unwrap();
    let r = harness::run(&["annulus-instability"], &cfg).unwrap();
    assert_eq!(r.scenarios[0].table.rows.len(), 13);
    assert_ne!(r.config_digest, HarnessConfig::default().digest());
}

#[test]
fn failures_and_bad_input() {
    let cfg = HarnessConfig::from_text("gauss_bonnet.tol = -1").unwrap();
    let r = harness::run(&["gauss-bonnet-selftest"], &cfg).unwrap();
    assert_eq!(r.scenarios[0].status, Status::Fail);
    assert!(!r.all_passed());

    assert!(matches!(harness::run(&["nope"], &HarnessConfig::default()), Err(Error::UnknownScenario(_))));
    assert!(matches!(HarnessConfig::from_text("bogus = 1"), Err(Error::Config(_))));
    // a lemma grid reaching pi/3 is rejected as a configuration error
    let cfg = HarnessConfig::from_text("lemma51.grid = 0.9:1.2:0.1").unwrap();
    assert!(matches!(harness::run(&["lemma51-threshold"], &cfg), Err(Error::Config(_))));
}
