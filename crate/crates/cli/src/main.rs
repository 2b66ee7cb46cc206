//! `laqcc` command-line front end. Reports go to stdout as JSON, a short
//! summary goes to stderr.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use laqcc::clifford::{
    check_flattened, default_branch_mode, flatten_grid, flatten_ladder, seeded_product_state, CliffordCircuit,
};
use laqcc::error::LaqccError;
use laqcc::macros::Backend;
use laqcc::numbersys::{check_bijection, comb_to_fac, fac_decompose, fac_to_comb, CombIndex, Factoradic};
use laqcc::program::{
    defer_measurements, execute, explore, resources, to_postselected, BranchMode, ExploreOptions, Policy, Program,
};
use laqcc::stateprep::ProtocolSpec;
use laqcc::suite::{run_all, run_criterion, SuiteOptions};
use laqcc::verify::{explore_with_fallback, output_distribution, total_variation, verify, FIDELITY_TOL};

/// Reports that fail a check exit with this code.
const EXIT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Parser)]
#[command(name = "laqcc", version, about = "Build, run and verify local alternating quantum-classical programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prepare a state and verify it branch by branch.
    Prep(PrepArgs),
    /// Flatten a Clifford ladder or grid and check it against direct simulation.
    Flatten(FlattenArgs),
    /// Rewrite a program and check the rewrite.
    Transform(TransformArgs),
    /// Number-system conversions and checks.
    Numbers {
        #[command(subcommand)]
        command: NumbersCommand,
    },
    /// Run the acceptance suite.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Protocol {
    Ghz,
    W,
    Uniform,
    Dicke,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    SmallK,
    Factoradic,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Semantic,
    Gadget,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Semantic => Backend::Semantic,
            BackendArg::Gadget => Backend::Gadget,
        }
    }
}

/// `exhaustive` or `sample:N`.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Branches {
    Exhaustive,
    Sample(usize),
}

fn parse_branches(s: &str) -> Result<Branches, String> {
    if s == "exhaustive" {
        return Ok(Branches::Exhaustive);
    }
    match s.strip_prefix("sample:").map(str::parse::<usize>) {
        Some(Ok(n)) if n > 0 => Ok(Branches::Sample(n)),
        _ => Err(format!("expected `exhaustive` or `sample:N` with N >= 1, got `{s}`")),
    }
}

impl Branches {
    fn mode(self, seed: u64) -> BranchMode {
        match self {
            Branches::Exhaustive => BranchMode::Exhaustive,
            Branches::Sample(count) => BranchMode::Sample { count, seed },
        }
    }
}

#[derive(Args)]
struct SeedArg {
    /// Seed for sampled branches and random inputs.
    #[arg(long, env = "LAQCC_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PrepArgs {
    protocol: Protocol,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    q: Option<u64>,
    #[arg(long, value_enum, default_value = "factoradic")]
    method: Method,
    /// How fanouts are realized.
    #[arg(long, value_enum, default_value = "gadget")]
    backend: BackendArg,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long, value_parser = parse_branches, default_value = "exhaustive")]
    branches: Branches,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ShapeArg {
    Ladder,
    Grid,
}

#[derive(Args)]
struct FlattenArgs {
    shape: ShapeArg,
    /// Circuit JSON: {shape, n, depth, gates: [{name, qubits}]}.
    #[arg(long)]
    input: PathBuf,
    /// Branches sampled when the grid is too large to enumerate.
    #[arg(long, default_value_t = 64)]
    samples: usize,
    #[command(flatten)]
    seed: SeedArg,
    /// Include the flattened program in the report.
    #[arg(long)]
    emit_program: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransformKind {
    Defer,
    Postselect,
}

#[derive(Args)]
struct TransformArgs {
    kind: TransformKind,
    /// Program JSON.
    #[arg(long)]
    input: PathBuf,
    /// Seed of the transcript hardwired by `postselect`.
    #[command(flatten)]
    seed: SeedArg,
    /// Include the rewritten program in the report.
    #[arg(long)]
    emit_program: bool,
}

#[derive(Subcommand)]
enum NumbersCommand {
    /// Weight-k bitstring of a factoradic.
    Fac2comb {
        /// Digits, most significant first, comma separated.
        #[arg(long)]
        digits: String,
        #[arg(long)]
        k: usize,
    },
    /// Factoradic from a weight-k bitstring and the two smaller factoradics.
    Comb2fac {
        /// Bitstring, leftmost character is the highest position.
        #[arg(long)]
        bits: String,
        /// Digits of the (n-k)-factoradic.
        #[arg(long, default_value = "")]
        z: String,
        /// Digits of the k-factoradic.
        #[arg(long, default_value = "")]
        o: String,
    },
    /// Exhaustively check the split of all n-factoradics.
    CheckBijection {
        #[arg(long)]
        n: usize,
        /// Only this weight; all weights 0..=n otherwise.
        #[arg(long)]
        k: Option<usize>,
    },
}

#[derive(Args)]
struct VerifyArgs {
    /// Run every criterion.
    #[arg(long, required_unless_present = "criterion")]
    all: bool,
    /// Run only these criteria.
    #[arg(long, value_delimiter = ',', conflicts_with = "all")]
    criterion: Vec<usize>,
    #[arg(long, default_value_t = 8)]
    max_n: usize,
    #[arg(long, env = "LAQCC_SEED", default_value_t = 2024)]
    seed: u64,
}

/// A finished command: the JSON report and whether every check passed.
struct Outcome {
    report: Value,
    passed: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Prep(a) => prep(a),
        Command::Flatten(a) => flatten(a),
        Command::Transform(a) => transform(a),
        Command::Numbers { command } => numbers(command),
        Command::Verify(a) => run_verify(a),
    };
    match result {
        Ok(out) => {
            let text = serde_json::to_string_pretty(&out.report).expect("report serializes");
            // a closed pipe downstream is not an error of ours
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            if out.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAILED)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &LaqccError) -> u8 {
    match e {
        LaqccError::Infeasible(_) => EXIT_INFEASIBLE,
        LaqccError::Validation(_)
        | LaqccError::OutOfRange(_)
        | LaqccError::ShapeMismatch(_)
        | LaqccError::MalformedProgram(_)
        | LaqccError::DimensionMismatch(..)
        | LaqccError::Index { .. }
        | LaqccError::Json(_) => EXIT_USAGE,
        _ => EXIT_FAILED,
    }
}

fn need<T>(v: Option<T>, flag: &str, protocol: &str) -> Result<T, LaqccError> {
    v.ok_or_else(|| LaqccError::Validation(format!("`{protocol}` needs --{flag}")))
}

fn protocol_spec(a: &PrepArgs) -> Result<ProtocolSpec, LaqccError> {
    Ok(match a.protocol {
        Protocol::Ghz => ProtocolSpec::Ghz { n: need(a.n, "n", "ghz")? },
        Protocol::W => ProtocolSpec::WState { n: need(a.n, "n", "w")? },
        Protocol::Uniform => ProtocolSpec::UniformQ { q: need(a.q, "q", "uniform")? },
        Protocol::Dicke => {
            let n = need(a.n, "n", "dicke")?;
            let k = need(a.k, "k", "dicke")?;
            match a.method {
                Method::SmallK => ProtocolSpec::DickeSmallK { n, k },
                Method::Factoradic => ProtocolSpec::DickeFactoradic { n, k },
            }
        }
    })
}

fn prep(a: PrepArgs) -> Result<Outcome, LaqccError> {
    let spec = protocol_spec(&a)?;
    let prepared = spec.build(a.backend.into())?;
    let seed = a.seed.seed;
    let report = verify(&prepared, a.branches.mode(seed), seed)?;
    if report.downgraded {
        eprintln!("warning: more than 2^14 live branches, checked {} seeded samples instead", report.branches_checked);
    }
    eprintln!(
        "{} {}: fidelity {:.12}, rounds {}, width {}, {} branches{}",
        if report.passed { "PASS" } else { "FAIL" },
        report.protocol,
        report.fidelity,
        report.rounds,
        report.width,
        report.branches_checked,
        if report.exhaustive { " (exhaustive)" } else { "" },
    );
    Ok(Outcome { passed: report.passed, report: serde_json::to_value(&report)? })
}

fn read(path: &PathBuf) -> Result<String, LaqccError> {
    std::fs::read_to_string(path).map_err(|e| LaqccError::Validation(format!("cannot read {}: {e}", path.display())))
}

fn flatten(a: FlattenArgs) -> Result<Outcome, LaqccError> {
    let circuit = CliffordCircuit::from_json(&read(&a.input)?)?;
    let flat = match a.shape {
        ShapeArg::Ladder => flatten_ladder(&circuit)?,
        ShapeArg::Grid => flatten_grid(&circuit)?,
    };
    let seed = a.seed.seed;
    let input = seeded_product_state(circuit.n, seed)?;
    let mode = default_branch_mode(&circuit, a.samples, seed);
    let check = check_flattened(&circuit, &flat, &input, mode)?;
    let exhaustive = mode == BranchMode::Exhaustive;
    let passed = check.min_fidelity >= 1.0 - FIDELITY_TOL
        && (!exhaustive || (check.total_probability - 1.0).abs() < FIDELITY_TOL);
    eprintln!(
        "{} flattened {} on {} wires: {} qubits, fidelity {:.12} over {} branches",
        if passed { "PASS" } else { "FAIL" },
        serde_json::to_value(circuit.shape)?.as_str().unwrap_or("circuit"),
        circuit.n,
        flat.program.qubits,
        check.min_fidelity,
        check.branches,
    );
    let mut report = json!({
        "shape": circuit.shape,
        "n": circuit.n,
        "depth": circuit.depth,
        "qubits": flat.program.qubits,
        "inputs": flat.inputs,
        "outputs": flat.outputs,
        "resources": resources(&flat.program),
        "correction": flat.correction.to_rows(),
        "exhaustive": exhaustive,
        "check": check,
        "passed": passed,
        "seed": seed,
    });
    if a.emit_program {
        report["program"] = serde_json::to_value(&flat.program)?;
    }
    Ok(Outcome { report, passed })
}

/// Largest register whose outcome distribution is compared in full.
const MAX_COMPARED_QUBITS: usize = 20;

fn transform(a: TransformArgs) -> Result<Outcome, LaqccError> {
    let program = Program::from_json(&read(&a.input)?)?;
    program.validate()?;
    let seed = a.seed.seed;
    let system: Vec<usize> = (0..program.qubits).collect();
    match a.kind {
        TransformKind::Defer => {
            let d = defer_measurements(&program)?;
            let mut report = json!({
                "transform": "defer",
                "source_qubits": program.qubits,
                "qubits": d.program.qubits,
                "copies": d.copies,
                "resources": resources(&d.program),
            });
            // The marginal on the source qubits must not change.
            let (checked, passed) = if program.qubits <= MAX_COMPARED_QUBITS {
                let opts = ExploreOptions::default();
                let (before, down_a) = explore_with_fallback(&program, None, &opts, seed)?;
                let opts = ExploreOptions { collapse: d.copies.clone(), ..ExploreOptions::default() };
                let (after, down_b) = explore_with_fallback(&d.program, None, &opts, seed)?;
                if down_a || down_b {
                    eprintln!("warning: too many branches to compare distributions exactly, skipped");
                    (false, true)
                } else {
                    let tv = total_variation(
                        &output_distribution(&before, &system)?,
                        &output_distribution(&after, &d.system)?,
                    );
                    report["total_variation"] = json!(tv);
                    (true, tv <= FIDELITY_TOL)
                }
            } else {
                eprintln!("warning: more than {MAX_COMPARED_QUBITS} source qubits, distribution not compared");
                (false, true)
            };
            report["checked"] = json!(checked);
            report["passed"] = json!(passed);
            if a.emit_program {
                report["program"] = serde_json::to_value(&d.program)?;
            }
            eprintln!(
                "{} deferred {} measurements onto {} qubits",
                if passed { "PASS" } else { "FAIL" },
                d.copies.len(),
                d.program.qubits
            );
            Ok(Outcome { report, passed })
        }
        TransformKind::Postselect => {
            let run = execute(&program, &Policy::Seeded(seed))?;
            let ps = to_postselected(&program, &run.record)?;
            let mut forced: Vec<(usize, bool)> = ps.equal_flags.iter().map(|&f| (f, true)).collect();
            if forced.is_empty() {
                forced.push((ps.flag, true));
            }
            let opts = ExploreOptions { forced, keep: system.clone(), ..ExploreOptions::default() };
            let ex = explore(&ps.program, &opts)?;
            let mut fidelity: f64 = if ex.leaves.is_empty() { 0.0 } else { 1.0 };
            let mut flag_probability = 0.0;
            for leaf in &ex.leaves {
                fidelity = fidelity.min(leaf.state.reduced_fidelity(&system, &run.state)?);
                let d = leaf.state.outcome_distribution(&[ps.flag])?;
                flag_probability += leaf.probability * d.get(&1).copied().unwrap_or(0.0);
            }
            let want = run.record.probability();
            let gap = (flag_probability - want).abs();
            let passed = fidelity >= 1.0 - FIDELITY_TOL && gap < FIDELITY_TOL && gap <= 1e-6 * want;
            let mut report = json!({
                "transform": "postselect",
                "source_qubits": program.qubits,
                "qubits": ps.program.qubits,
                "flag": ps.flag,
                "transcript": run.record,
                "transcript_probability": want,
                "flag_probability": flag_probability,
                "fidelity": fidelity.min(1.0),
                "resources": resources(&ps.program),
                "passed": passed,
                "seed": seed,
            });
            if a.emit_program {
                report["program"] = serde_json::to_value(&ps.program)?;
            }
            eprintln!(
                "{} postselected on a transcript of probability {want:.6}: flag probability {flag_probability:.6}, fidelity {:.12}",
                if passed { "PASS" } else { "FAIL" },
                fidelity
            );
            Ok(Outcome { report, passed })
        }
    }
}

fn parse_digits(s: &str) -> Result<Factoradic, LaqccError> {
    let digits = s
        .split(',')
        .map(str::trim)
        .filter(|d| !d.is_empty())
        .map(|d| d.parse::<u32>().map_err(|e| LaqccError::Validation(format!("digit `{d}`: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    Factoradic::new(digits)
}

fn parse_bits(s: &str) -> Result<(u128, usize), LaqccError> {
    if s.is_empty() || s.len() > 128 {
        return Err(LaqccError::Validation(format!("bitstring of length {} outside 1..=128", s.len())));
    }
    let v = u128::from_str_radix(s, 2).map_err(|e| LaqccError::Validation(format!("bitstring `{s}`: {e}")))?;
    Ok((v, s.len()))
}

fn format_bits(v: u128, n: usize) -> String {
    (0..n).rev().map(|i| if (v >> i) & 1 == 1 { '1' } else { '0' }).collect()
}

fn numbers(c: NumbersCommand) -> Result<Outcome, LaqccError> {
    match c {
        NumbersCommand::Fac2comb { digits, k } => {
            let y = parse_digits(&digits)?;
            if k > y.len() {
                return Err(LaqccError::OutOfRange(format!("weight {k} exceeds length {}", y.len())));
            }
            let s = fac_to_comb(&y, k);
            let (_, z, o) = fac_decompose(&y, k)?;
            eprintln!("{y} -> {}", format_bits(s, y.len()));
            let report = json!({
                "digits": y.digits(),
                "k": k,
                "bits": format_bits(s, y.len()),
                "positions": CombIndex::from_bits(s).positions(),
                "z": z.digits(),
                "o": o.digits(),
            });
            Ok(Outcome { report, passed: true })
        }
        NumbersCommand::Comb2fac { bits, z, o } => {
            let (s, n) = parse_bits(&bits)?;
            let (z, o) = (parse_digits(&z)?, parse_digits(&o)?);
            let y = comb_to_fac(s, n, &z, &o)?;
            eprintln!("{bits} with {z} and {o} -> {y}");
            let report = json!({ "bits": bits, "z": z.digits(), "o": o.digits(), "digits": y.digits() });
            Ok(Outcome { report, passed: true })
        }
        NumbersCommand::CheckBijection { n, k } => {
            let ks: Vec<usize> = match k {
                Some(k) => vec![k],
                None => (0..=n).collect(),
            };
            let checks = ks.into_iter().map(|k| check_bijection(n, k)).collect::<Result<Vec<_>, _>>()?;
            let passed = checks.iter().all(|c| c.holds);
            for c in &checks {
                eprintln!(
                    "{} n={} k={}: {} factoradics onto {} strings",
                    if c.holds { "PASS" } else { "FAIL" },
                    c.n,
                    c.k,
                    c.factoradics,
                    c.image_size
                );
            }
            Ok(Outcome { report: json!({ "n": n, "checks": checks, "passed": passed }), passed })
        }
    }
}

fn run_verify(a: VerifyArgs) -> Result<Outcome, LaqccError> {
    let opts = SuiteOptions { max_n: a.max_n, seed: a.seed };
    let results = if a.all { run_all(&opts) } else { a.criterion.iter().map(|&id| run_criterion(id, &opts)).collect() };
    for r in &results {
        eprintln!(
            "{} criterion {:>2} {:<22} {:>8} ms  {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.id,
            r.name,
            r.elapsed_ms,
            r.detail
        );
    }
    let passed = results.iter().all(|r| r.passed);
    Ok(Outcome { report: json!({ "criteria": results, "passed": passed }), passed })
}
