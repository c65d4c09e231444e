//! Command-line front end.

pub mod output;
pub mod svg;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::counterexample::{demonstrate, DemonstrationReport, RateFunction, TwoRateModel};
use crate::error::{Error, Result};
use crate::measure::{erlang_sweep, mixture_sweep, n_c_from_q, NonMarkovReport, SweepRow};
use crate::montecarlo::{compare, simulate_q, Comparison};
use crate::semimarkov::{critical_structure, q_time_domain, DEFAULT_TAIL_TOL};
use crate::waiting_time::{ensure_valid, mean, parse_wtd, WaitingTimeSpec};
use output::{to_csv, to_json};
use svg::{Plot, Series};

/// Version tag carried by every JSON document.
pub const SCHEMA: u32 = 1;

pub const EXIT_OK: i32 = 0;
/// I/O failures and failed statistical checks.
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "nmk",
    version,
    about = "Memory effects in classical two-site semi-Markov processes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// q(t), rates and the memory measure for one waiting-time distribution.
    Analyze(AnalyzeArgs),
    /// Memory measure of special Erlang distributions of order 1..n-max.
    ErlangSweep(ErlangArgs),
    /// Memory measure for self-convolved two-exponential mixtures.
    MixtureSweep(MixtureArgs),
    /// Negative rates with a monotonically decreasing distance.
    Counterexample(CounterexampleArgs),
    /// Compare q(t) with a Monte Carlo estimate.
    McCheck(McArgs),
}

#[derive(Debug, Args)]
#[group(id = "spec", required = true, multiple = false)]
pub struct SpecArgs {
    /// Waiting-time expression, e.g. "erlang(2,1)".
    #[arg(long, group = "spec")]
    pub wtd: Option<String>,
    /// JSON file holding a waiting-time tree.
    #[arg(long, group = "spec")]
    pub wtd_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long, default_value_t = DEFAULT_TAIL_TOL)]
    pub tail_tol: f64,
    #[arg(long, default_value_t = 2000)]
    pub grid_points: usize,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    #[arg(long)]
    pub out_json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ErlangArgs {
    #[arg(long)]
    pub n_max: u32,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = DEFAULT_TAIL_TOL)]
    pub tail_tol: f64,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    #[arg(long)]
    pub out_svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MixtureArgs {
    /// Comma-separated mixture weights of the slow component.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    pub mu: Vec<f64>,
    #[arg(long)]
    pub lambda1: f64,
    /// Rate ratio λ₂/λ₁.
    #[arg(long)]
    pub ratio: f64,
    #[arg(long, default_value_t = DEFAULT_TAIL_TOL)]
    pub tail_tol: f64,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    #[arg(long)]
    pub out_svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    /// `const:A`, `sin:AMP,OFFSET[,OMEGA]` or `table:T=V,...`.
    #[arg(long, default_value = "const:1")]
    pub gamma1: String,
    #[arg(long, default_value = "sin:1,0.5")]
    pub gamma2: String,
    #[arg(long)]
    pub t_end: f64,
    #[arg(long)]
    pub out_json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long)]
    pub n_traj: u64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub grid_points: usize,
    #[arg(long)]
    pub out_json: Option<PathBuf>,
}

/// Exit code for an error: 2 for bad input, 1 for I/O, 3 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        EXIT_VALIDATION
    } else if matches!(e, Error::Io(_)) {
        EXIT_FAILURE
    } else {
        EXIT_NUMERICAL
    }
}

/// Parse `args` (program name first), run, and report errors on stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let stdout = std::io::stdout();
    match run(&cli, &mut stdout.lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Execute a parsed command. Documents without an output path go to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Analyze(a) => analyze(a, out),
        Command::ErlangSweep(a) => erlang(a, out),
        Command::MixtureSweep(a) => mixture(a, out),
        Command::Counterexample(a) => counterexample(a, out),
        Command::McCheck(a) => mc_check(a, out),
    }
}

fn emit(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("--{name} must be positive, got {v}")))
    }
}

fn load_spec(s: &SpecArgs) -> Result<(WaitingTimeSpec, String)> {
    let spec = match (&s.wtd, &s.wtd_file) {
        (Some(text), _) => parse_wtd(text)?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::InvalidArgument(format!("{}: not a waiting-time tree: {e}", path.display())))?
        }
        (None, None) => return Err(Error::InvalidArgument("one of --wtd or --wtd-file is required".into())),
    };
    ensure_valid(&spec)?;
    let canonical = spec.to_string();
    Ok((spec, canonical))
}

#[derive(Serialize)]
struct AnalyzeDoc<'a> {
    schema: u32,
    command: &'static str,
    wtd: &'a str,
    tail_tol: f64,
    #[serde(flatten)]
    report: &'a NonMarkovReport,
    zeros: &'a [f64],
    extrema: &'a [f64],
    grid_step: f64,
}

fn analyze(a: &AnalyzeArgs, out: &mut dyn Write) -> Result<i32> {
    positive("tail-tol", a.tail_tol)?;
    if a.grid_points < 2 {
        return Err(Error::InvalidArgument(format!(
            "--grid-points must be at least 2, got {}",
            a.grid_points
        )));
    }
    let (spec, wtd) = load_spec(&a.spec)?;
    let qf = q_time_domain(&spec)?;
    let cs = critical_structure(&qf, a.tail_tol)?;
    let report = n_c_from_q(&qf, a.tail_tol)?;

    if let Some(path) = &a.out_csv {
        let t_end = if cs.horizon > 0.0 {
            cs.horizon
        } else {
            10.0 * mean(&spec)?
        };
        let n = a.grid_points - 1;
        let rows = (0..=n).map(|i| {
            let t = t_end * i as f64 / n as f64;
            let q = qf.q(t);
            let gamma = qf.gamma(t).value().unwrap_or(f64::NAN);
            vec![t, q, q.abs(), gamma, q.abs()]
        });
        write_file(path, &to_csv(&["t", "q", "abs_q", "gamma", "dk"], rows))?;
    }
    let doc = AnalyzeDoc {
        schema: SCHEMA,
        command: "analyze",
        wtd: &wtd,
        tail_tol: a.tail_tol,
        report: &report,
        zeros: &cs.zeros,
        extrema: &cs.extrema,
        grid_step: cs.grid_step,
    };
    emit(a.out_json.as_deref(), &to_json(&doc), out)?;
    Ok(EXIT_OK)
}

fn sweep_csv(rows: &[SweepRow]) -> String {
    to_csv(
        &["param", "n_c", "tail_bound", "horizon"],
        rows.iter().map(|r| vec![r.param, r.n_c, r.tail_bound, r.horizon]),
    )
}

fn erlang(a: &ErlangArgs, out: &mut dyn Write) -> Result<i32> {
    if a.n_max < 1 {
        return Err(Error::InvalidArgument("--n-max must be at least 1".into()));
    }
    positive("lambda", a.lambda)?;
    positive("tail-tol", a.tail_tol)?;
    let rows = erlang_sweep(a.n_max, a.lambda, a.tail_tol)?;
    emit(a.out_csv.as_deref(), &sweep_csv(&rows), out)?;
    if let Some(path) = &a.out_svg {
        let plot = Plot {
            title: "Memory measure of special Erlang waiting times".into(),
            x_label: "n".into(),
            y_label: "N_C".into(),
            caption: format!("N_C versus order n, λ = {}, tail tolerance {:e}", a.lambda, a.tail_tol),
            series: vec![Series {
                label: format!("λ = {}", a.lambda),
                points: rows.iter().map(|r| (r.param, r.n_c)).collect(),
                markers: true,
            }],
        };
        write_file(path, &plot.render())?;
    }
    Ok(EXIT_OK)
}

/// Samples per curve in the mixture plot.
const CURVE_POINTS: usize = 400;

fn mixture(a: &MixtureArgs, out: &mut dyn Write) -> Result<i32> {
    positive("lambda1", a.lambda1)?;
    positive("ratio", a.ratio)?;
    positive("tail-tol", a.tail_tol)?;
    if let Some(mu) = a.mu.iter().find(|m| !(0.0..=1.0).contains(*m)) {
        return Err(Error::InvalidArgument(format!(
            "--mu values must lie in [0, 1], got {mu}"
        )));
    }
    let rows = mixture_sweep(&a.mu, a.lambda1, a.ratio, a.tail_tol)?;
    emit(a.out_csv.as_deref(), &sweep_csv(&rows), out)?;
    if let Some(path) = &a.out_svg {
        let rate2 = a.lambda1 * a.ratio;
        let specs: Vec<WaitingTimeSpec> =
            a.mu.iter()
                .map(|&mu| {
                    let h = WaitingTimeSpec::mixture_pair(mu, a.lambda1, rate2);
                    WaitingTimeSpec::conv(vec![h.clone(), h])
                })
                .collect();
        let t_end = 5.0
            * specs
                .iter()
                .map(mean)
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
        let mut series = Vec::with_capacity(specs.len());
        for ((spec, mu), row) in specs.iter().zip(&a.mu).zip(&rows) {
            let qf = q_time_domain(spec)?;
            let points = (0..=CURVE_POINTS)
                .map(|i| {
                    let t = t_end * i as f64 / CURVE_POINTS as f64;
                    (t, qf.q(t).abs())
                })
                .collect();
            series.push(Series {
                label: format!("μ = {mu}, N_C = {:.4}", row.n_c),
                points,
                markers: false,
            });
        }
        let plot = Plot {
            title: "|q(t)| for convolved two-exponential mixtures".into(),
            x_label: "t".into(),
            y_label: "|q(t)|".into(),
            caption: format!("λ₁ = {}, λ₂/λ₁ = {}", a.lambda1, a.ratio),
            series,
        };
        write_file(path, &plot.render())?;
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct CounterexampleDoc<'a> {
    schema: u32,
    command: &'static str,
    gamma1: String,
    gamma2: String,
    #[serde(flatten)]
    report: &'a DemonstrationReport,
}

fn counterexample(a: &CounterexampleArgs, out: &mut dyn Write) -> Result<i32> {
    positive("t-end", a.t_end)?;
    let gamma1: RateFunction = a.gamma1.parse()?;
    let gamma2: RateFunction = a.gamma2.parse()?;
    let model = TwoRateModel::new(gamma1, gamma2);
    let report = demonstrate(&model, a.t_end)?;
    let doc = CounterexampleDoc {
        schema: SCHEMA,
        command: "counterexample",
        gamma1: model.gamma1.to_string(),
        gamma2: model.gamma2.to_string(),
        report: &report,
    };
    emit(a.out_json.as_deref(), &to_json(&doc), out)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct McDoc<'a> {
    schema: u32,
    command: &'static str,
    wtd: &'a str,
    n_traj: u64,
    seed: u64,
    grid_points: usize,
    t_end: f64,
    #[serde(flatten)]
    comparison: Comparison,
    passed: bool,
}

/// The Monte Carlo grid spans three mean waiting times.
const MC_SPAN_MEANS: f64 = 3.0;

fn mc_check(a: &McArgs, out: &mut dyn Write) -> Result<i32> {
    if a.n_traj < 1 {
        return Err(Error::InvalidArgument("--n-traj must be at least 1".into()));
    }
    if a.grid_points < 1 {
        return Err(Error::InvalidArgument("--grid-points must be at least 1".into()));
    }
    let (spec, wtd) = load_spec(&a.spec)?;
    let qf = q_time_domain(&spec)?;
    let t_end = MC_SPAN_MEANS * mean(&spec)?;
    let n = a.grid_points.saturating_sub(1).max(1);
    let grid: Vec<f64> = if a.grid_points == 1 {
        vec![0.0]
    } else {
        (0..=n).map(|i| t_end * i as f64 / n as f64).collect()
    };
    let emp = simulate_q(&spec, &grid, a.n_traj, a.seed)?;
    let comparison = compare(&emp, &qf);
    let passed = comparison.passed();
    let doc = McDoc {
        schema: SCHEMA,
        command: "mc-check",
        wtd: &wtd,
        n_traj: a.n_traj,
        seed: a.seed,
        grid_points: grid.len(),
        t_end,
        comparison,
        passed,
    };
    emit(a.out_json.as_deref(), &to_json(&doc), out)?;
    if !passed {
        eprintln!(
            "mc-check: deviation {:.3} standard errors at t = {} exceeds {}",
            comparison.max_deviation, comparison.t, comparison.threshold
        );
        return Ok(EXIT_FAILURE);
    }
    Ok(EXIT_OK)
}
