use laqcc::suite::{run_all, SuiteOptions};

#[test]
fn acceptance_criteria() {
    let results = run_all(&SuiteOptions::default());
    for r in &results {
        println!(
            "{} criterion {:>2} {:<22} {:>8} ms  {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.id,
            r.name,
            r.elapsed_ms,
            r.detail
        );
    }
    let failed: Vec<usize> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
