//! One pass/fail line per acceptance criterion, with runtimes. Runs without the
//! libtest harness so the lines always reach stdout.

use std::time::{Duration, Instant};

use tubeflow::suite::{self, ExperimentConfig, Outcome};
use tubeflow::Result;

struct Row {
    outcome: Outcome,
    elapsed: Duration,
    budget: Duration,
}

fn timed(budget_s: u64, f: impl FnOnce() -> Result<Outcome>) -> Row {
    let start = Instant::now();
    let outcome = f().expect("criterion run");
    Row { outcome, elapsed: start.elapsed(), budget: Duration::from_secs(budget_s) }
}

fn main() {
    let cfg = ExperimentConfig::default();
    cfg.validate().unwrap();
    let rows = vec![
        timed(1, || Ok(suite::central_table_check(&cfg)?.outcome)),
        timed(10, || suite::jacobi_oracle_check(&cfg)),
        timed(30 * 6, || Ok(suite::spectrum_check(&cfg)?.outcome)),
        timed(60, || suite::angle_identity_check(&cfg)),
        timed(600, || Ok(suite::cone_check(&cfg)?.outcome)),
        timed(10, || Ok(suite::bump_certificate_check(&cfg)?.outcome)),
        timed(1200, || Ok(suite::nonpositivity_check(&cfg)?.outcome)),
        timed(1200, || Ok(suite::positive_bound_check(&cfg)?.outcome)),
        timed(30, || suite::oracle_suite_check(&cfg)),
        timed(5, || Ok(suite::witness_check(&cfg)?.outcome)),
    ];
    let mut failed = Vec::new();
    for row in &rows {
        let o = &row.outcome;
        let over = row.elapsed > row.budget;
        println!("{}  [{:.2}s / {}s{}]", o.line(), row.elapsed.as_secs_f64(), row.budget.as_secs(), if over { " over budget" } else { "" });
        for note in &o.notes {
            println!("    {note}");
        }
        for c in o.failures() {
            println!("    failed: {} = {:.6e} (need {} {:.3e})", c.name, c.measured, c.relation, c.limit);
        }
        if !o.passed || over {
            failed.push(o.criterion);
        }
    }
    // Criterion 7 fails on its near-zero band clause; see the README.
    let expected_failures = [7u8];
    let unexpected: Vec<u8> = failed.iter().copied().filter(|c| !expected_failures.contains(c)).collect();
    if !unexpected.is_empty() {
        eprintln!("unexpected failing criteria: {unexpected:?}");
        std::process::exit(1);
    }
    println!("acceptance: {} of {} criteria pass; expected failures {expected_failures:?}", rows.len() - failed.len(), rows.len());
}
