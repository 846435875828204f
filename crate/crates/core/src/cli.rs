//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a verification failed, 2 usage or input error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dsl;
use crate::network::CircuitNetwork;
use crate::noise::{depolarizing_mixture, NoiseSpec, PauliCombination, PauliOp};
use crate::pipeline::{build_fig3, build_ghzps, herald_branches, run_full, run_full_with, RunReport};
use crate::qnd::{sample_outcome, Probe};
use crate::source::{dual_pass_emission, CaseWeights};
use crate::state::dump::{dump_terms, DumpTerm};
use crate::verify::{verify_entanglement, verify_states, verify_table1, Check};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "ghzsim", version, about = "Simulate a linear-optical three-photon GHZ source")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a network and report every branch and detector pattern.
    Run(RunArgs),
    /// Check every family row of the correction table.
    #[command(name = "verify-table1")]
    VerifyTable1(OutputArgs),
    /// Check branch conditionals and the receiver evolution.
    VerifyStates(OutputArgs),
    /// Check the polarization/spatial factorization of both branches.
    #[command(alias = "analyze-entanglement")]
    VerifyEntanglement(OutputArgs),
    /// Mean corrected fidelity under per-photon depolarizing noise.
    SweepNoise(SweepArgs),
    /// Parse and elaborate a network file, then print it canonically.
    Parse(ParseArgs),
    /// Print the heralded branch states as JSON.
    Dump(NetworkArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Builtin {
    Fig1,
    Fig3,
}

#[derive(Debug, Args)]
struct NetworkArgs {
    /// Builtin network (default fig3).
    #[arg(long, value_enum, conflicts_with = "network")]
    builtin: Option<Builtin>,
    /// Network description file (.onet).
    #[arg(long, value_name = "FILE")]
    network: Option<PathBuf>,
    /// Channel noise: `X@1,Z@3`, `p=0.1` or `none`.
    #[arg(long, value_name = "SPEC")]
    noise: Option<NoiseSpec>,
    /// Case weights `w1,w2,w3`.
    #[arg(long, value_name = "W1,W2,W3", value_parser = parse_weights)]
    weights: Option<CaseWeights>,
    /// Kerr phase per unit coupling, radians.
    #[arg(long, value_name = "R")]
    theta: Option<f64>,
    /// Probe amplitude.
    #[arg(long, value_name = "R")]
    alpha: Option<f64>,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    network: NetworkArgs,
    /// Seed for `--sample`.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Draw one outcome instead of reporting the distribution.
    #[arg(long)]
    sample: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    network: NetworkArgs,
    /// Depolarizing probabilities to evaluate.
    #[arg(long, value_delimiter = ',', default_value = "0,0.05,0.1,0.15,0.2,0.25,0.3")]
    probabilities: Vec<f64>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ParseArgs {
    file: PathBuf,
}

fn parse_weights(s: &str) -> Result<CaseWeights, String> {
    let w: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| format!("invalid weight '{x}'")))
        .collect::<Result<_, _>>()?;
    if w.len() != 3 {
        return Err("expected three weights".into());
    }
    CaseWeights::new(w[0], w[1], w[2]).map_err(|e| e.to_string())
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<crate::Error> for Failure {
    fn from(e: crate::Error) -> Self {
        Failure { code: EXIT_FAILED, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: EXIT_FAILED, message: e.to_string() }
    }
}

type CliResult<T = u8> = Result<T, Failure>;

fn load_network(args: &NetworkArgs) -> CliResult<(String, CircuitNetwork)> {
    let (label, mut net) = match (&args.network, args.builtin) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            let net = dsl::load(&text).map_err(|e| Failure::usage(format!("{}:{e}", path.display())))?;
            (path.display().to_string(), net)
        }
        (None, Some(Builtin::Fig1)) => ("fig1".to_string(), build_ghzps()),
        (None, _) => ("fig3".to_string(), build_fig3()),
    };
    if let Some(n) = &args.noise {
        net.params.noise = Some(n.clone());
    }
    if let Some(w) = args.weights {
        net.params.weights = w;
    }
    if let Some(t) = args.theta {
        if !t.is_finite() {
            return Err(Failure::usage("theta must be finite"));
        }
        net.params.probe.theta = t;
    }
    if let Some(a) = args.alpha {
        if !(a.is_finite() && a > 0.0) {
            return Err(Failure::usage("alpha must be positive"));
        }
        net.params.probe.alpha = a;
    }
    Ok((label, net))
}

fn noise_mixture(net: &CircuitNetwork) -> CliResult<Vec<(f64, PauliCombination)>> {
    Ok(match &net.params.noise {
        None => vec![(1.0, [PauliOp::I; 3])],
        Some(NoiseSpec::Errors(errs)) => vec![(1.0, NoiseSpec::combination(errs))],
        Some(NoiseSpec::Depolarizing(p)) => depolarizing_mixture(*p).map_err(|e| Failure::usage(e.to_string()))?,
    })
}

fn combo_label(c: &PauliCombination) -> String {
    c.iter().map(ToString::to_string).collect()
}

#[derive(Serialize)]
struct ProbabilitiesJson {
    branch: f64,
    coincidence: f64,
    herald: f64,
    pattern: f64,
    total: f64,
}

#[derive(Serialize)]
struct ReportJson {
    branch: Option<&'static str>,
    readout: Option<f64>,
    pattern: String,
    probabilities: ProbabilitiesJson,
    family: Option<String>,
    correction: Option<String>,
    fidelity: f64,
    state: Vec<DumpTerm>,
}

impl From<&RunReport> for ReportJson {
    fn from(r: &RunReport) -> Self {
        ReportJson {
            branch: r.branch.map(|b| b.as_str()),
            readout: r.readout,
            pattern: r.pattern.to_string(),
            probabilities: ProbabilitiesJson {
                branch: r.chain.branch,
                coincidence: r.chain.coincidence,
                herald: r.chain.herald,
                pattern: r.chain.pattern,
                total: r.chain.total(),
            },
            family: r.family.map(|f| f.label()),
            correction: r.correction.map(|c| combo_label(&c)),
            fidelity: r.fidelity,
            state: dump_terms(&r.state),
        }
    }
}

#[derive(Serialize)]
struct ParamsJson {
    theta: f64,
    alpha: f64,
    weights: [f64; 3],
}

fn params_json(net: &CircuitNetwork) -> ParamsJson {
    let w = net.params.weights;
    ParamsJson { theta: net.params.probe.theta, alpha: net.params.probe.alpha, weights: [w.upper_upper, w.lower_lower, w.mixed] }
}

#[derive(Serialize)]
struct RunJson {
    network: String,
    noise: String,
    params: ParamsJson,
    runs: Vec<CombinationJson>,
    success_probability: f64,
    mean_fidelity: f64,
}

#[derive(Serialize)]
struct CombinationJson {
    weight: f64,
    errors: String,
    reports: Vec<ReportJson>,
}

#[derive(Serialize)]
struct SampleJson {
    network: String,
    noise: String,
    params: ParamsJson,
    seed: u64,
    errors: String,
    report: Option<ReportJson>,
}

fn noise_label(net: &CircuitNetwork) -> String {
    net.params.noise.as_ref().map_or_else(|| "none".to_string(), ToString::to_string)
}

fn write_report_line(out: &mut dyn Write, r: &RunReport) -> std::io::Result<()> {
    writeln!(
        out,
        "branch={} pattern={} p={:.12} family={} correction={} fidelity={:.12}",
        r.branch.map_or("-", |b| b.as_str()),
        r.pattern,
        r.chain.total(),
        r.family.map_or_else(|| "-".to_string(), |f| f.label()),
        r.correction.map_or_else(|| "-".to_string(), |c| combo_label(&c)),
        r.fidelity
    )
}

/// Weighted success probability and mean fidelity over a mixture.
fn aggregate(runs: &[(f64, Vec<RunReport>)]) -> (f64, f64) {
    let mut success = 0.0;
    let mut weighted = 0.0;
    for (w, reports) in runs {
        for r in reports {
            success += w * r.chain.total();
            weighted += w * r.chain.total() * r.fidelity;
        }
    }
    (success, if success > 0.0 { weighted / success } else { 0.0 })
}

fn pick<R: Rng>(rng: &mut R, weights: impl Iterator<Item = f64>) -> usize {
    let w: Vec<f64> = weights.collect();
    let total: f64 = w.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, x) in w.iter().enumerate() {
        acc += x;
        if u < acc {
            return i;
        }
    }
    w.len().saturating_sub(1)
}

fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> CliResult {
    let (label, net) = load_network(&args.network)?;
    let mixture = noise_mixture(&net)?;
    if args.sample {
        let seed = args.seed.unwrap_or(0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, combo) = mixture[pick(&mut rng, mixture.iter().map(|m| m.0))];
        let probe: Probe = net.params.probe;
        let reports = run_full_with(&net, &combo, |t| sample_outcome(t, &probe, &mut rng).map(|o| vec![o]))?;
        let report = if reports.is_empty() {
            None
        } else {
            Some(&reports[pick(&mut rng, reports.iter().map(|r| r.chain.pattern))])
        };
        if args.json {
            let j = SampleJson {
                network: label,
                noise: noise_label(&net),
                params: params_json(&net),
                seed,
                errors: combo_label(&combo),
                report: report.map(ReportJson::from),
            };
            writeln!(out, "{}", serde_json::to_string_pretty(&j).expect("serializable"))?;
        } else {
            writeln!(out, "network={label} noise={} seed={seed} errors={}", noise_label(&net), combo_label(&combo))?;
            match report {
                Some(r) => {
                    write_report_line(out, r)?;
                    writeln!(out, "readout={:.12}", r.readout.unwrap_or(f64::NAN))?;
                }
                None => writeln!(out, "no coincidence")?,
            }
        }
        return Ok(EXIT_OK);
    }

    let runs: Vec<(f64, Vec<RunReport>)> = mixture
        .par_iter()
        .map(|(w, c)| run_full(&net, c).map(|r| (*w, r)))
        .collect::<crate::Result<_>>()?;
    let (success, mean) = aggregate(&runs);
    if args.json {
        let j = RunJson {
            network: label,
            noise: noise_label(&net),
            params: params_json(&net),
            runs: runs
                .iter()
                .zip(&mixture)
                .map(|((w, reports), (_, c))| CombinationJson {
                    weight: *w,
                    errors: combo_label(c),
                    reports: reports.iter().map(ReportJson::from).collect(),
                })
                .collect(),
            success_probability: success,
            mean_fidelity: mean,
        };
        writeln!(out, "{}", serde_json::to_string_pretty(&j).expect("serializable"))?;
    } else {
        writeln!(out, "network={label} noise={}", noise_label(&net))?;
        for ((w, reports), (_, c)) in runs.iter().zip(&mixture) {
            if mixture.len() > 1 {
                writeln!(out, "errors={} weight={w:.12}", combo_label(c))?;
            }
            for r in reports {
                write_report_line(out, r)?;
            }
        }
        writeln!(out, "success_probability={success:.12} mean_fidelity={mean:.12}")?;
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct ChecksJson<'a> {
    checks: &'a [Check],
    passed: usize,
    total: usize,
}

fn report_checks(checks: &[Check], json: bool, summary: String, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let passed = checks.iter().filter(|c| c.passed).count();
    if json {
        let j = ChecksJson { checks, passed, total: checks.len() };
        writeln!(out, "{}", serde_json::to_string_pretty(&j).expect("serializable"))?;
    } else {
        for c in checks {
            writeln!(out, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        writeln!(out, "{summary}")?;
    }
    match checks.iter().find(|c| !c.passed) {
        Some(c) => {
            writeln!(err, "first failure: {}", c.name)?;
            Ok(EXIT_FAILED)
        }
        None => Ok(EXIT_OK),
    }
}

fn cmd_verify_table1(args: &OutputArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let checks = verify_table1()?;
    let min_fidelity = checks
        .iter()
        .filter_map(|c| c.detail.rsplit("fidelity=").next()?.parse::<f64>().ok())
        .fold(f64::INFINITY, f64::min);
    let passed = checks.iter().filter(|c| c.passed).count();
    let summary = format!("{passed}/{} rows: corrected fidelity {min_fidelity:.12}", checks.len());
    report_checks(&checks, args.json, summary, out, err)
}

fn cmd_checks(checks: Vec<Check>, args: &OutputArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let passed = checks.iter().filter(|c| c.passed).count();
    let summary = format!("{passed}/{} checks passed", checks.len());
    report_checks(&checks, args.json, summary, out, err)
}

#[derive(Serialize)]
struct SweepRow {
    p: f64,
    success_probability: f64,
    mean_fidelity: f64,
}

fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> CliResult {
    if args.network.noise.is_some() {
        return Err(Failure::usage("sweep-noise sets its own noise; drop --noise"));
    }
    let (label, net) = load_network(&args.network)?;
    let mut jobs = Vec::new();
    for (i, &p) in args.probabilities.iter().enumerate() {
        let mixture = depolarizing_mixture(p).map_err(|e| Failure::usage(e.to_string()))?;
        jobs.extend(mixture.into_iter().map(|(w, c)| (i, w, c)));
    }
    let results: Vec<(usize, f64, Vec<RunReport>)> = jobs
        .par_iter()
        .map(|(i, w, c)| run_full(&net, c).map(|r| (*i, *w, r)))
        .collect::<crate::Result<_>>()?;
    let rows: Vec<SweepRow> = args
        .probabilities
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let runs: Vec<(f64, Vec<RunReport>)> =
                results.iter().filter(|r| r.0 == i).map(|r| (r.1, r.2.clone())).collect();
            let (success_probability, mean_fidelity) = aggregate(&runs);
            SweepRow { p, success_probability, mean_fidelity }
        })
        .collect();
    if args.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&rows).expect("serializable"))?;
    } else {
        writeln!(out, "network={label}")?;
        for r in &rows {
            writeln!(out, "p={} success_probability={:.12} mean_fidelity={:.12}", r.p, r.success_probability, r.mean_fidelity)?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_parse(args: &ParseArgs, out: &mut dyn Write) -> CliResult {
    let path = args.file.display();
    let text = std::fs::read_to_string(&args.file).map_err(|e| Failure::usage(format!("{path}: {e}")))?;
    let doc = dsl::parse(&text).map_err(|e| Failure::usage(format!("{path}:{e}")))?;
    dsl::elaborate(&doc).map_err(|e| Failure::usage(format!("{path}:{e}")))?;
    write!(out, "{doc}")?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct DumpJson {
    branch: Option<&'static str>,
    probabilities: ProbabilitiesJson,
    terms: Vec<DumpTerm>,
}

fn cmd_dump(args: &NetworkArgs, out: &mut dyn Write) -> CliResult {
    let (_, net) = load_network(args)?;
    let mixture = noise_mixture(&net)?;
    if mixture.len() != 1 {
        return Err(Failure::usage("dump needs fixed errors, not a depolarizing probability"));
    }
    let input = dual_pass_emission(&net.params.weights)?;
    let branches = herald_branches(&net, net.execute(&input, &mixture[0].1)?)?;
    let j: Vec<DumpJson> = branches
        .iter()
        .map(|h| DumpJson {
            branch: h.branch.map(|b| b.as_str()),
            probabilities: ProbabilitiesJson {
                branch: h.chain.branch,
                coincidence: h.chain.coincidence,
                herald: h.chain.herald,
                pattern: h.chain.pattern,
                total: h.chain.total(),
            },
            terms: dump_terms(&h.state),
        })
        .collect();
    writeln!(out, "{}", serde_json::to_string_pretty(&j).expect("serializable"))?;
    Ok(EXIT_OK)
}

/// Runs the CLI on `args` (including the program name); returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a, out),
        Command::VerifyTable1(a) => cmd_verify_table1(a, out, err),
        Command::VerifyStates(a) => verify_states().map_err(Failure::from).and_then(|c| cmd_checks(c, a, out, err)),
        Command::VerifyEntanglement(a) => {
            verify_entanglement().map_err(Failure::from).and_then(|c| cmd_checks(c, a, out, err))
        }
        Command::SweepNoise(a) => cmd_sweep(a, out),
        Command::Parse(a) => cmd_parse(a, out),
        Command::Dump(a) => cmd_dump(a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
