//! Acceptance gate: runs the twelve criteria in order, printing one
//! pass/fail line per criterion, and exits nonzero if any fail. Runs
//! without the default test harness so the criteria execute sequentially
//! (criterion 1 carries a wall-clock budget).

fn main() {
    let reports = qclub::verify::run_all();
    let failed: Vec<_> = reports.iter().filter(|r| !r.passed).collect();
    if failed.is_empty() {
        println!("acceptance: 12/12 criteria passed");
        std::process::exit(0);
    }
    println!(
        "acceptance: {}/12 criteria passed; failing: {}",
        reports.len() - failed.len(),
        failed.iter().map(|r| r.id.to_string()).collect::<Vec<_>>().join(", ")
    );
    std::process::exit(1);
}
