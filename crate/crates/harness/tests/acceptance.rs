//! Full-scale acceptance run. Prints one line per criterion and exits
//! non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use wpd_harness::campaign::{run_campaign, Campaign, Mode, Report};

struct Criterion {
    id: u32,
    name: &'static str,
    campaigns: Vec<Campaign>,
}

fn campaign(mode: Mode, seed: u64, trials: u64) -> Campaign {
    Campaign::new(mode, seed, trials)
}

fn criteria() -> Vec<Criterion> {
    let mut quasi_low = campaign(Mode::Ot2pdQuasi, 4, 50);
    quasi_low.p_values = vec![1.0];
    quasi_low.eps_values = vec![0.1, 0.01];
    let mut quasi_high = campaign(Mode::Ot2pdQuasi, 4, 50);
    quasi_high.p_values = vec![2.0, 3.0];
    quasi_high.eps_values = vec![0.1];

    let mut grid = campaign(Mode::Pd2otQuasi, 6, 30);
    grid.p_values = vec![1.5, 2.0, 3.0];
    grid.eps_values = vec![0.05];
    grid.max_support = 50_000;

    let mut snow = campaign(Mode::Snowflake, 9, 20);
    snow.p_values = vec![2.0];
    snow.eps_values = vec![0.1];

    vec![
        Criterion { id: 1, name: "transport oracle, 200 pairs", campaigns: vec![campaign(Mode::OracleOt, 1, 200)] },
        Criterion { id: 2, name: "diagram oracle, 200 pairs", campaigns: vec![campaign(Mode::OraclePd, 2, 200)] },
        Criterion { id: 3, name: "isometric embedding, 50 families", campaigns: vec![campaign(Mode::Isometric, 3, 50)] },
        Criterion { id: 4, name: "measure quasi-isometry, 50 families", campaigns: vec![quasi_low, quasi_high] },
        Criterion { id: 5, name: "bi-Lipschitz sandwich, 100 families", campaigns: vec![campaign(Mode::Bilipschitz, 5, 100)] },
        Criterion { id: 6, name: "grid quasi-isometry, 30 families", campaigns: vec![grid] },
        Criterion { id: 7, name: "p = 1 grid rejection", campaigns: vec![campaign(Mode::P1Rejection, 7, 100)] },
        Criterion { id: 8, name: "metric axioms, 500 triples", campaigns: vec![campaign(Mode::MetricAxioms, 8, 500)] },
        Criterion { id: 9, name: "snowflake transfer, 20 spaces", campaigns: vec![snow] },
    ]
}

fn describe(reports: &[Report]) -> String {
    let (mut records, mut failed, mut skipped) = (0, 0, 0);
    let mut min_margin = f64::INFINITY;
    for r in reports {
        records += r.summary.records;
        failed += r.summary.failed;
        skipped += r.summary.skipped;
        if let Some(m) = r.summary.min_margin {
            min_margin = min_margin.min(m);
        }
    }
    let margin = if min_margin.is_finite() { format!("{min_margin:.3e}") } else { "-".into() };
    format!("{records} records, {failed} failed, {skipped} skipped, min margin {margin}")
}

fn main() -> ExitCode {
    let mut all_pass = true;
    let mut first_runs = Vec::new();
    let start = Instant::now();
    for c in criteria() {
        let t = Instant::now();
        let reports: Vec<Report> = c.campaigns.iter().map(run_campaign).collect();
        let pass = reports.iter().all(|r| r.pass);
        all_pass &= pass;
        println!(
            "[{}] {:>2}. {} ({}; {:.1} s)",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            describe(&reports),
            t.elapsed().as_secs_f64()
        );
        for r in reports.iter().filter(|r| !r.pass) {
            if let Some(w) = &r.summary.worst {
                println!("        worst: {}", serde_json::to_string(w).unwrap_or_default());
            }
        }
        first_runs.push((c.campaigns, reports));
    }

    // Re-run everything on a single thread; reports must match exactly.
    let t = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("thread pool");
    let mismatches: Vec<String> = pool.install(|| {
        first_runs
            .iter()
            .flat_map(|(cs, rs)| cs.iter().zip(rs))
            .filter(|(c, r)| run_campaign(c).deterministic_json() != r.deterministic_json())
            .map(|(c, _)| format!("{} seed {}", c.mode.name(), c.seed))
            .collect()
    });
    let pass = mismatches.is_empty();
    all_pass &= pass;
    println!(
        "[{}] 10. determinism, every campaign re-run ({}; {:.1} s)",
        if pass { "PASS" } else { "FAIL" },
        if pass { "identical reports".to_string() } else { format!("differs: {}", mismatches.join(", ")) },
        t.elapsed().as_secs_f64()
    );

    println!("acceptance: {} in {:.1} s", if all_pass { "all criteria pass" } else { "FAILED" }, start.elapsed().as_secs_f64());
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
