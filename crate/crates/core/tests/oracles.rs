use std::time::Instant;

use romavg_core::verify::{run_oracles, VerifyScope};

#[test]
fn all_oracles_pass_quickly() {
    let start = Instant::now();
    let reports = run_oracles(VerifyScope::All).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    for r in &reports {
        println!("{r}");
    }
    assert!(reports.len() >= 10);
    assert!(reports.iter().all(|r| r.pass), "failing oracle");
    assert!(elapsed < 10.0, "oracles took {elapsed:.1}s");
}

#[test]
fn scope_selects_one_suite() {
    let reports = run_oracles(VerifyScope::Jacobian).unwrap();
    assert_eq!(reports.len(), 2);
    assert!(reports.iter().all(|r| r.name.contains("Jacobian")));
}
