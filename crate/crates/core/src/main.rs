use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use meandist::distance::GraphMetric;
use meandist::error::{Error, Result};
use meandist::experiments::{records_to_csv, sweep, verify_graph, Ensemble};
use meandist::generators::{generate, Family, FamilySpec, Lengths};
use meandist::io::{graph_to_json, read_graph, to_report_json};
use meandist::mean::rho_exact;
use meandist::report::{analyze, AnalyzeOptions};
use meandist::surgery::{apply, Operation};

/// Mean distance, spectral gap and surgery on compact metric graphs.
#[derive(Parser, Debug)]
#[command(name = "meandist", version)]
struct Cli {
    /// Worker threads for the parallel kernels.
    #[arg(long, env = "MEANDIST_THREADS", global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a graph of a named family.
    Generate(GenerateArgs),
    /// Report ρ, diameter, μ₂ and every bound check for a graph.
    Analyze(AnalyzeArgs),
    /// Distance between two points given as `edgeId:offset`.
    Distance(DistanceArgs),
    /// Apply a JSON list of surgery operations.
    Surgery(SurgeryArgs),
    /// Check every inequality on one graph; exits 1 if any fails.
    Verify(VerifyArgs),
    /// Verify an ensemble of generated graphs; exits 1 if any record fails.
    Sweep(SweepArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FamilyName {
    Path,
    Star,
    Flower,
    Cycle,
    Firework,
    RandomTree,
    RandomGraph,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    family: FamilyName,
    /// Edge count for path/star/flower/cycle, spoke count for firework.
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Leaves per firework hub.
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Firework spoke length J.
    #[arg(long, default_value_t = 1.0)]
    spoke: f64,
    /// Firework leaf length j.
    #[arg(long, default_value_t = 0.1)]
    leaf: f64,
    /// Edge count of random families.
    #[arg(long, default_value_t = 1)]
    edges: usize,
    /// Extra edges of `random-graph`.
    #[arg(long, default_value_t = 0)]
    betti: usize,
    #[arg(long, default_value_t = 1.0)]
    total_length: f64,
    /// Explicit comma-separated edge lengths.
    #[arg(long, value_delimiter = ',', conflicts_with = "random_lengths")]
    lengths: Option<Vec<f64>>,
    /// Lengths uniform on the simplex instead of equilateral.
    #[arg(long)]
    random_lengths: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[arg(long)]
    input: PathBuf,
    /// Relative tolerance of the spectral solver.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Monte Carlo samples for the cross-check (0 disables it).
    #[arg(long, default_value_t = 100_000)]
    mc_samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Include wall-clock timings (makes the output non-reproducible).
    #[arg(long)]
    timings: bool,
}

#[derive(Args, Debug)]
struct DistanceArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    from: String,
    #[arg(long)]
    to: String,
}

#[derive(Args, Debug)]
struct SurgeryArgs {
    #[arg(long)]
    input: PathBuf,
    /// JSON array of operations.
    #[arg(long)]
    ops: PathBuf,
    /// Where to write the transformed graph.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// JSON ensemble `{"entries": [{"family": …, "count": …}, …]}`.
    #[arg(long)]
    ensemble: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// CSV dataset, one row per record.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// JSON sidecar with the full records.
    #[arg(long)]
    json: Option<PathBuf>,
}

const EXIT_FAILED: u8 = 1;
const EXIT_INPUT: u8 = 3;
const EXIT_SPECTRAL: u8 = 4;

fn error_kind(e: &Error) -> (&'static str, u8) {
    match e {
        Error::NoConvergence { .. } => ("no_convergence", EXIT_SPECTRAL),
        Error::Io(_) => ("io", EXIT_INPUT),
        Error::Json(_) => ("json", EXIT_INPUT),
        Error::InvalidGraph(_) => ("invalid_graph", EXIT_INPUT),
        Error::InvalidPoint(_) | Error::OffsetOutOfRange { .. } => ("invalid_point", EXIT_INPUT),
        Error::UnknownVertex(_) | Error::UnknownEdge(_) => ("unknown_id", EXIT_INPUT),
        Error::InvalidCut(_) | Error::InvalidSurgery(_) => ("invalid_surgery", EXIT_INPUT),
        Error::InvalidFamily(_) => ("invalid_family", EXIT_INPUT),
        _ => ("invalid_argument", EXIT_INPUT),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn report<T: Serialize>(value: &T) -> Result<String> {
    let mut s = to_report_json(value)?;
    s.push('\n');
    Ok(s)
}

fn family_spec(a: &GenerateArgs) -> FamilySpec {
    let family = match a.family {
        FamilyName::Path => Family::Path { m: a.m },
        FamilyName::Star => Family::Star { m: a.m },
        FamilyName::Flower => Family::Flower { m: a.m },
        FamilyName::Cycle => Family::Cycle { m: a.m },
        FamilyName::Firework => Family::Firework { m: a.m, n: a.n, spoke: a.spoke, leaf: a.leaf },
        FamilyName::RandomTree => Family::RandomTree { edges: a.edges },
        FamilyName::RandomGraph => Family::RandomGraph { edges: a.edges, betti: a.betti },
    };
    let lengths = match (&a.lengths, a.random_lengths) {
        (Some(l), _) => Lengths::Explicit { lengths: l.clone() },
        (None, true) => Lengths::Random { total: a.total_length },
        (None, false) => Lengths::Equilateral { total: a.total_length },
    };
    FamilySpec::new(family, lengths, a.seed)
}

/// Runs a subcommand; returns stdout and the exit code.
fn run(command: Command) -> Result<(String, u8)> {
    match command {
        Command::Generate(a) => {
            let g = generate(&family_spec(&a))?;
            let text = graph_to_json(&g) + "\n";
            match &a.output {
                Some(path) => {
                    fs::write(path, &text)?;
                    Ok((String::new(), 0))
                }
                None => Ok((text, 0)),
            }
        }
        Command::Analyze(a) => {
            let g = read_graph(&a.input)?;
            let opts = AnalyzeOptions {
                tol: a.tol,
                mc_samples: a.mc_samples,
                seed: a.seed,
                timings: a.timings,
            };
            let r = analyze(&g, &opts);
            let code = if r.spectral_error.is_some() { EXIT_SPECTRAL } else { 0 };
            Ok((report(&r)?, code))
        }
        Command::Distance(a) => {
            let g = read_graph(&a.input)?;
            let (x, y) = (g.parse_point(&a.from)?, g.parse_point(&a.to)?);
            let d = GraphMetric::new(&g).point_distance(x, y);
            Ok((report(&json!({ "from": a.from, "to": a.to, "distance": d }))?, 0))
        }
        Command::Surgery(a) => {
            let mut g = read_graph(&a.input)?;
            let ops: Vec<Operation> = read_json(&a.ops)?;
            let rho = |g: &meandist::MetricGraph| rho_exact(&GraphMetric::new(g), false).rho;
            let before = rho(&g);
            let mut steps = Vec::with_capacity(ops.len());
            for op in &ops {
                g = apply(&g, op)?;
                steps.push(json!({ "op": op, "rho": rho(&g), "total_length": g.total_length() }));
            }
            let after = rho(&g);
            if let Some(path) = &a.output {
                fs::write(path, graph_to_json(&g) + "\n")?;
            }
            let out = json!({
                "rho_before": before,
                "rho_after": after,
                "delta": after - before,
                "steps": steps,
                "graph": g.to_record(),
            });
            Ok((report(&out)?, 0))
        }
        Command::Verify(a) => {
            let g = read_graph(&a.input)?;
            let r = verify_graph(&g, &a.input.display().to_string(), a.tol)?;
            let code = if r.failed { EXIT_FAILED } else { 0 };
            Ok((report(&r)?, code))
        }
        Command::Sweep(a) => {
            let ensemble: Ensemble = read_json(&a.ensemble)?;
            let result = sweep(&ensemble, a.tol);
            if let Some(path) = &a.csv {
                fs::write(path, records_to_csv(&result.records)?)?;
            }
            if let Some(path) = &a.json {
                fs::write(path, report(&result)?)?;
            }
            let code = if result.summary.failed_records > 0 { EXIT_FAILED } else { 0 };
            Ok((report(&result.summary)?, code))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // only fails if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli.command) {
        Ok((out, code)) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(EXIT_INPUT);
            }
            ExitCode::from(code)
        }
        Err(e) => {
            let (kind, code) = error_kind(&e);
            let diag = json!({ "error": kind, "message": e.to_string() });
            eprintln!("{diag}");
            ExitCode::from(code)
        }
    }
}
