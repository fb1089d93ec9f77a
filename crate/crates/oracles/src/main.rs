//! Prints the oracle cross-check table; exits 1 if any row fails.

fn main() {
    let rows = tweezer_clock_oracles::verify::all();
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
    for r in &rows {
        println!("{}  {:width$}  {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    println!("{} of {} checks passed", rows.len() - failed, rows.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
