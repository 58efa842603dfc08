//! Runs every invariant with a fixed seed and prints the table.

fn main() {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let report = commutclass::selfcheck::run(seed, None).expect("no fault requested");
    print!("{}", report.table());
    if let Some(fail) = report.failure() {
        eprintln!("failed: {}", fail.name);
        std::process::exit(2);
    }
}
