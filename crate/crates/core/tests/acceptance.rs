use std::time::Instant;

use ssl_rate_lab::eval::exact::ExactEngine;
use ssl_rate_lab::verify::{run, CriterionReport, CRITERIA};

#[test]
fn acceptance() {
    let engine = ExactEngine::default();
    println!();
    let mut reports: Vec<CriterionReport> = Vec::new();
    for (i, id) in CRITERIA.iter().enumerate() {
        let start = Instant::now();
        let report = run(id, &engine).unwrap_or_else(|e| CriterionReport {
            id: id.to_string(),
            passed: false,
            detail: format!("error: {e}"),
        });
        println!("[{:>2}] {report} ({:.1}s)", i + 1, start.elapsed().as_secs_f64());
        reports.push(report);
    }
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.id.as_str()).collect();
    println!("{} of {} criteria passed", reports.len() - failed.len(), reports.len());
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
