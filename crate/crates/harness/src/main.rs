use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};
use wpd_core::assignment::Backend;
use wpd_core::certify::{certify_pairwise, Sources, DEFAULT_TOLERANCE};
use wpd_core::diagrams::{wasserstein_pd_with, PersistenceDiagram};
use wpd_core::embeddings::{
    diagrams_to_measures_bilipschitz, diagrams_to_measures_quasi_with, measures_to_diagrams_isometric,
    measures_to_diagrams_quasi, EmbeddingResult, GridOptions,
};
use wpd_core::rational::DEFAULT_DENOMINATOR_CAP;
use wpd_core::transport::{wasserstein_with, DiscreteMeasure, TransportOptions};
use wpd_harness::bench::bench_assignment;
use wpd_harness::campaign::{run_campaign, Campaign, Mode, Report, Status};
use wpd_harness::gen::{gen_diagram, gen_measure, Bbox};

/// Exact Wasserstein distances between planar measures and persistence
/// diagrams, embeddings between the two spaces, and verification campaigns.
///
/// Exit status: 0 on success, 1 when a verification fails, 2 on usage or
/// input errors. The WPD_SEED environment variable overrides --seed.
#[derive(Parser)]
#[command(name = "wpd", version)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Space {
    /// Persistence diagrams: {"points": [[b, d], ...]}
    Pd,
    /// Measures: {"atoms": [[x, y], ...], "weights": ["p/q" | real, ...]}
    Ot,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Construction {
    /// Rational measures to diagrams, distances preserved exactly.
    Ot2pdIso,
    /// Measures to diagrams, additive error below --eps.
    Ot2pdQuasi,
    /// Diagrams to measures, d <= d' <= 2^{1/p} d.
    Pd2otBilip,
    /// Diagrams to measures, d <= d' <= d + eps (p > 1).
    Pd2otQuasi,
}

#[derive(Subcommand)]
enum Command {
    /// Exact W_p between two files.
    Dist {
        #[arg(value_enum)]
        space: Space,
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long, value_parser = parse_backend, default_value = "hungarian")]
        backend: Backend,
    },
    /// Embed a family and certify every pair. Each file holds one object or
    /// an array of them.
    Embed {
        #[arg(value_enum)]
        construction: Construction,
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        eps: Option<f64>,
        /// Cap on common denominators.
        #[arg(long, default_value_t = DEFAULT_DENOMINATOR_CAP)]
        cap: u64,
        /// Refuse grid supports larger than this.
        #[arg(long)]
        max_support: Option<usize>,
        /// Relative slack on exact claims.
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tol: f64,
    },
    /// Run a seeded verification campaign.
    Verify {
        #[arg(value_enum)]
        mode: Mode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        /// Exponents to test (comma separated); mode default if omitted.
        #[arg(long, value_delimiter = ',')]
        p: Vec<f64>,
        /// Additive errors (delta for the snowflake mode), comma separated.
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        family_size: Option<usize>,
        #[arg(long)]
        max_points: Option<usize>,
        #[arg(long)]
        max_support: Option<usize>,
        /// Coordinate range as LO,HI.
        #[arg(long, allow_hyphen_values = true)]
        bbox: Option<Bbox>,
    },
    /// Generate a random instance.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Benchmarks.
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Subcommand)]
enum GenCommand {
    Diagram {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        max_points: usize,
        #[arg(long, default_value = "0,1", allow_hyphen_values = true)]
        bbox: Bbox,
    },
    Measure {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        max_atoms: usize,
        #[arg(long, default_value_t = 12)]
        denominator: u64,
        #[arg(long, default_value = "0,1", allow_hyphen_values = true)]
        bbox: Bbox,
    },
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Compare assignment solvers on a pair of grid embedding images.
    Assignment {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        /// Largest support solved with the dense backends.
        #[arg(long, default_value_t = 1500)]
        dense_limit: usize,
    },
}

fn parse_backend(s: &str) -> std::result::Result<Backend, String> {
    Backend::ALL
        .into_iter()
        .find(|b| b.name() == s)
        .ok_or_else(|| format!("unknown backend {s:?}; expected one of hungarian, lapjv, sparse-dijkstra"))
}

fn seed_override(seed: u64) -> Result<u64> {
    match std::env::var("WPD_SEED") {
        Ok(s) => s.trim().parse().with_context(|| format!("WPD_SEED must be an unsigned integer, got {s:?}")),
        Err(_) => Ok(seed),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{} is not a valid input", path.display()))
}

/// Objects from every file, a file holding either one object or an array.
fn read_family<T: DeserializeOwned>(paths: &[PathBuf]) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for path in paths {
        match read_json::<Value>(path)? {
            Value::Array(items) => {
                for (k, item) in items.into_iter().enumerate() {
                    out.push(
                        serde_json::from_value(item)
                            .with_context(|| format!("{} item {k} is not a valid input", path.display()))?,
                    );
                }
            }
            v => out.push(serde_json::from_value(v).with_context(|| format!("{} is not a valid input", path.display()))?),
        }
    }
    Ok(out)
}

fn print_table(header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        println!("{}", padded.join("  ").trim_end());
    };
    line(header.to_vec());
    for row in rows {
        line(row.iter().map(String::as_str).collect());
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.6e}"))
}

/// Prints the output; `Ok(false)` means a verification failed.
fn run(cli: Cli) -> Result<bool> {
    let table = cli.format == Format::Table;
    match cli.command {
        Command::Dist { space, a, b, p, backend } => {
            let out = match space {
                Space::Pd => {
                    let (x, y): (PersistenceDiagram, PersistenceDiagram) = (read_json(&a)?, read_json(&b)?);
                    let r = wasserstein_pd_with(&x, &y, p, backend)?;
                    if table {
                        println!("distance  {}", r.distance);
                        let rows: Vec<Vec<String>> =
                            r.matching.matched.iter().map(|(i, j)| vec![i.to_string(), j.to_string()]).collect();
                        print_table(&["a", "b"], &rows);
                        return Ok(true);
                    }
                    json!({ "distance": r.distance, "matching": r.matching.matched })
                }
                Space::Ot => {
                    let (x, y): (DiscreteMeasure, DiscreteMeasure) = (read_json(&a)?, read_json(&b)?);
                    let opts = TransportOptions { backend, ..TransportOptions::default() };
                    let r = wasserstein_with(&x, &y, p, &opts)?;
                    if table {
                        println!("distance  {}", r.distance);
                        let rows: Vec<Vec<String>> = r
                            .coupling
                            .plan
                            .iter()
                            .map(|(i, j, m)| vec![i.to_string(), j.to_string(), m.to_string()])
                            .collect();
                        print_table(&["a", "b", "mass"], &rows);
                        return Ok(true);
                    }
                    json!({ "distance": r.distance, "coupling": r.coupling })
                }
            };
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(true)
        }
        Command::Embed { construction, files, p, eps, cap, max_support, tol } => {
            let need_eps = || eps.ok_or_else(|| anyhow!("this construction needs --eps"));
            let (result, measures, diagrams): (EmbeddingResult, Vec<DiscreteMeasure>, Vec<PersistenceDiagram>) =
                match construction {
                    Construction::Ot2pdIso | Construction::Ot2pdQuasi => {
                        let ms: Vec<DiscreteMeasure> = read_family(&files)?;
                        let r = if construction == Construction::Ot2pdIso {
                            measures_to_diagrams_isometric(&ms, p, cap)?
                        } else {
                            measures_to_diagrams_quasi(&ms, p, need_eps()?, cap)?
                        };
                        (r, ms, Vec::new())
                    }
                    Construction::Pd2otBilip | Construction::Pd2otQuasi => {
                        let ds: Vec<PersistenceDiagram> = read_family(&files)?;
                        let r = if construction == Construction::Pd2otBilip {
                            diagrams_to_measures_bilipschitz(&ds, p)?
                        } else {
                            let options = GridOptions { max_support, ..GridOptions::default() };
                            diagrams_to_measures_quasi_with(&ds, p, need_eps()?, options)?
                        };
                        (r, Vec::new(), ds)
                    }
                };
            let sources = if measures.is_empty() { Sources::Diagrams(&diagrams) } else { Sources::Measures(&measures) };
            let cert = certify_pairwise(&result, sources, tol)?;
            if table {
                let rows: Vec<Vec<String>> = cert
                    .certificates
                    .iter()
                    .map(|c| {
                        vec![
                            c.i.to_string(),
                            c.j.to_string(),
                            format!("{:.9}", c.source_dist),
                            format!("{:.9}", c.image_dist),
                            format!("{:.9}", c.lower),
                            format!("{:.9}", c.upper),
                            if c.pass { "pass" } else { "FAIL" }.into(),
                        ]
                    })
                    .collect();
                print_table(&["i", "j", "source", "image", "lower", "upper", "status"], &rows);
            } else {
                let mut v = serde_json::to_value(&result)?;
                v["certificates"] = serde_json::to_value(&cert.certificates)?;
                v["pass"] = json!(cert.pass);
                println!("{}", serde_json::to_string(&v)?);
            }
            Ok(cert.pass)
        }
        Command::Verify { mode, seed, trials, p, eps, tol, family_size, max_points, max_support, bbox } => {
            let mut c = Campaign::new(mode, seed_override(seed)?, trials);
            if !p.is_empty() {
                c.p_values = p;
            }
            if !eps.is_empty() {
                c.eps_values = eps;
            }
            if let Some(t) = tol {
                c.tolerance = t;
            }
            if let Some(k) = family_size {
                c.family_size = k;
            }
            if let Some(k) = max_points {
                c.max_points = k;
            }
            if let Some(k) = max_support {
                c.max_support = k;
            }
            if let Some(b) = bbox {
                c.bbox = b;
            }
            if c.p_values.iter().any(|p| !p.is_finite() || *p < 1.0 && mode != Mode::P1Rejection) {
                bail!("every --p value must be a finite real >= 1");
            }
            let report = run_campaign(&c);
            print_report(&report, table)?;
            Ok(report.pass)
        }
        Command::Gen(GenCommand::Diagram { seed, max_points, bbox }) => {
            let d = gen_diagram(seed_override(seed)?, max_points, bbox);
            println!("{}", serde_json::to_string(&d)?);
            Ok(true)
        }
        Command::Gen(GenCommand::Measure { seed, max_atoms, denominator, bbox }) => {
            let m = gen_measure(seed_override(seed)?, max_atoms, denominator, bbox)?;
            println!("{}", serde_json::to_string(&m)?);
            Ok(true)
        }
        Command::Bench(BenchCommand::Assignment { seed, p, eps, repeats, dense_limit }) => {
            let r = bench_assignment(seed_override(seed)?, p, eps, repeats, dense_limit)?;
            if table {
                println!("resolution  {}", r.resolution);
                let rows: Vec<Vec<String>> = r
                    .rows
                    .iter()
                    .map(|x| vec![x.solver.clone(), x.size.to_string(), format!("{:.12}", x.distance), format!("{:.3}", x.median_ms)])
                    .collect();
                print_table(&["solver", "size", "distance", "median_ms"], &rows);
            } else {
                println!("{}", serde_json::to_string_pretty(&r)?);
            }
            Ok(r.agree)
        }
    }
}

fn print_report(report: &Report, table: bool) -> Result<()> {
    if !table {
        println!("{}", serde_json::to_string(report)?);
        return Ok(());
    }
    let s = &report.summary;
    println!("mode        {}", report.campaign.mode.name());
    println!("seed        {}", report.campaign.seed);
    println!("records     {} ({} passed, {} failed, {} skipped)", s.records, s.passed, s.failed, s.skipped);
    println!("margins     min {}  mean {}  max {}", fmt_opt(s.min_margin), fmt_opt(s.mean_margin), fmt_opt(s.max_margin));
    println!("elapsed     {:.1} ms", report.timing.total_ms);
    println!("result      {}", if report.pass { "PASS" } else { "FAIL" });
    let rows: Vec<Vec<String>> = report
        .trials
        .iter()
        .filter(|r| r.status != Status::Pass)
        .map(|r| {
            vec![
                r.trial.to_string(),
                r.p.to_string(),
                r.eps.map_or("-".into(), |e| e.to_string()),
                format!("{:?}", r.status).to_lowercase(),
                fmt_opt(r.margin),
                r.detail.as_ref().map_or(String::new(), Value::to_string),
            ]
        })
        .collect();
    if !rows.is_empty() {
        print_table(&["trial", "p", "eps", "status", "margin", "detail"], &rows);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
