use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rsrc_fsl::codec::{fmt_rational, parse_rational, saturation_leak, strip_threshold, theorem2_bounds, Rational};
use rsrc_fsl::golden::run_example;
use rsrc_fsl::protocol::ProtocolError;
use rsrc_fsl::sim::{dump_transcript, load_scenario, transcript, FaultConfig, Simulation};
use rsrc_fsl::symbol::Tracked;

const EXIT_VIOLATION: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_CONFIG: u8 = 4;

#[derive(Parser)]
#[command(name = "fsl", version, about = "Ramp secure regenerating codes and federated submodel learning")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print minimum normalized costs over a leakage grid.
    Bounds(BoundsArgs),
    /// Reproduce a worked example and diff it against the expected numbers.
    Example {
        /// One of rsrc-ex1, rsrc-ex2, fsl-round.
        name: String,
    },
    /// Run one audited round from a scenario file.
    Run(RunArgs),
}

#[derive(Args)]
struct BoundsArgs {
    /// Reconstruction threshold D.
    #[arg(long, short = 'd')]
    dim: usize,
    /// Number of colluding databases.
    #[arg(long, short = 'l')]
    lambda: usize,
    /// Comma-separated leakage values such as `0,1/4,0.5`; defaults to
    /// multiples of 1/12 plus both breakpoints.
    #[arg(long, value_delimiter = ',')]
    leak: Vec<String>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Report path; overrides the scenario's `output`.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Overrides the field modulus.
    #[arg(long)]
    modulus: Option<u64>,
    /// Fault configuration as inline JSON, replacing the scenario's.
    #[arg(long)]
    faults: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Bounds(a) => bounds(&a),
        Cmd::Example { name } => example(&name),
        Cmd::Run(a) => run(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &ProtocolError) -> u8 {
    match e {
        ProtocolError::Config(_) | ProtocolError::Field(_) => EXIT_CONFIG,
        ProtocolError::Infeasible(_) | ProtocolError::TooManyFaults(_) | ProtocolError::Abort(_) => EXIT_INFEASIBLE,
        ProtocolError::Codec(_) => EXIT_CONFIG,
        _ => EXIT_VIOLATION,
    }
}

fn region(dim: usize, lambda: usize, leak: Rational) -> &'static str {
    if leak <= strip_threshold(dim, lambda) {
        "strip"
    } else if leak <= saturation_leak(dim, lambda) {
        "filling"
    } else {
        "saturated"
    }
}

fn cell(x: &Rational) -> String {
    format!("{} ({:.4})", fmt_rational(x), *x.numer() as f64 / *x.denom() as f64)
}

fn bounds(a: &BoundsArgs) -> Result<u8, ProtocolError> {
    if a.lambda == 0 || a.lambda >= a.dim {
        return Err(ProtocolError::Config(format!(
            "lambda must satisfy 1 <= lambda < D, got D={} lambda={}",
            a.dim, a.lambda
        )));
    }
    let mut grid: Vec<Rational> = if a.leak.is_empty() {
        let mut g: Vec<Rational> = (0..=12).map(|i| Rational::new(i, 12)).collect();
        g.push(strip_threshold(a.dim, a.lambda));
        g.push(saturation_leak(a.dim, a.lambda));
        g
    } else {
        a.leak
            .iter()
            .map(|s| parse_rational(s.trim()).ok_or_else(|| ProtocolError::Config(format!("leak: cannot parse {s:?}"))))
            .collect::<Result<_, _>>()?
    };
    grid.sort();
    grid.dedup();
    println!(
        "D = {}, lambda = {}, strip ends at {}, saturation at {}",
        a.dim,
        a.lambda,
        fmt_rational(&strip_threshold(a.dim, a.lambda)),
        fmt_rational(&saturation_leak(a.dim, a.lambda))
    );
    println!("{:<20} {:<20} {:<20} {:<20} region", "leak", "C1/B", "C2/B", "S/B");
    for leak in grid {
        let t = theorem2_bounds(a.dim, a.lambda, leak).map_err(|e| ProtocolError::Config(e.to_string()))?;
        println!(
            "{:<20} {:<20} {:<20} {:<20} {}",
            cell(&leak),
            cell(&t.c1),
            cell(&t.c2),
            cell(&t.s),
            region(a.dim, a.lambda, leak)
        );
    }
    Ok(0)
}

fn example(name: &str) -> Result<u8, ProtocolError> {
    let g = run_example(name)?;
    print!("{}", g.render());
    Ok(if g.passed() { 0 } else { EXIT_VIOLATION })
}

fn write_file(path: &Path, text: &str) -> Result<(), ProtocolError> {
    std::fs::write(path, text).map_err(|e| ProtocolError::Config(format!("cannot write {}: {e}", path.display())))
}

fn run(a: &RunArgs) -> Result<u8, ProtocolError> {
    let mut cfg = load_scenario(&a.scenario)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(q) = a.modulus {
        cfg.params.q = q;
    }
    if let Some(text) = &a.faults {
        let de = &mut serde_json::Deserializer::from_str(text);
        cfg.faults = serde_path_to_error::deserialize::<_, FaultConfig>(de)
            .map_err(|e| ProtocolError::Config(format!("--faults {}: {}", e.path(), e.inner())))?;
    }
    let base = a.scenario.parent().unwrap_or(Path::new("."));
    let params = cfg.params.to_params()?;
    params.setup()?;
    cfg.faults.validate(&params)?;
    let model = cfg.initial_model(&params)?;
    let inputs = cfg.round_inputs(&params, base)?;

    let mut sim = Simulation::<Tracked>::with_model(&params, &model, cfg.seed)?;
    let out = sim.run_round(&inputs, &cfg.faults)?;
    let rep = &out.report;

    println!("seed {}, union {:?}, committed {}", rep.seed, rep.union, rep.committed);
    for (name, v) in rep.verdicts.all() {
        println!("{name:<22} {:?}: {}", v.status, v.detail);
    }
    println!("transcript sha256 {}", rep.transcript.sha256);

    if let Some(path) = a.report.as_ref().or(cfg.output.as_ref()) {
        write_file(path, &rep.to_json())?;
        println!("report written to {}", path.display());
    }
    if let Some(path) = &cfg.transcript {
        write_file(path, &dump_transcript(&transcript(&out.log)))?;
        println!("transcript written to {}", path.display());
    }
    Ok(if rep.all_passed() { 0 } else { EXIT_VIOLATION })
}
