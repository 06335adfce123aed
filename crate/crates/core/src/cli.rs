//! `schedopt` command-line front end.
//!
//! Every subcommand prints one JSON document (default) or a CSV table with
//! a fixed column order to stdout. Exit codes: 0 success, 1 usage or input
//! error, 2 numerical failure. Failures also print
//! `{"error": {"kind": .., "message": ..}}` to stdout.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::format_ratio;
use crate::h2::{greedy_optimize, optimal_schedule, BetaTable};
use crate::hinf::{gamma_h_bracket, hinf_curve, optimal_gamma_at, BisectionOptions};
use crate::matops::{solve_dare, Matrix, SystemModel, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::model_file::ModelFile;
use crate::schedule::{Rational, Schedule};
use crate::simulate::monte_carlo_j2;
use crate::table::{triple_integrator, verify_table};

/// Environment variable capping the simulation thread count.
pub const THREADS_ENV: &str = "SCHEDOPT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "schedopt", version, about = "Optimal periodic sampling schedules with h2 / h-infinity certificates")]
struct Cli {
    /// JSON model file (A, B, Q, R and optional W).
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CurveKind {
    H2,
    Hinf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// LQ Riccati solution P, gain K, Z and tr(PW).
    Riccati,
    /// Interval costs beta(1..=pmax).
    Beta {
        #[arg(long)]
        pmax: usize,
    },
    /// Average cost of a schedule ("2,4" or "101000").
    J2 {
        #[arg(long)]
        schedule: Schedule,
    },
    /// Balanced optimal schedule for period h with m samples.
    Optimize {
        #[arg(long = "h")]
        h: usize,
        #[arg(long = "m")]
        m: usize,
        /// Also trace greedy balancing from this schedule (needs --model).
        #[arg(long)]
        greedy_from: Option<Schedule>,
    },
    /// Attenuation bound for period h or for a schedule.
    Gamma {
        #[arg(long = "h", conflicts_with = "schedule", required_unless_present = "schedule")]
        h: Option<usize>,
        #[arg(long)]
        schedule: Option<Schedule>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Optimal-performance tradeoff curve.
    Curve {
        #[arg(long, value_enum)]
        kind: CurveKind,
        #[arg(long)]
        hmax: usize,
        /// Add N+1 evenly spaced rational samples.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Monte Carlo estimate of the average cost.
    Simulate {
        #[arg(long)]
        schedule: Schedule,
        #[arg(long)]
        horizon: usize,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Recompute the reference table (beta, J2, gamma for h = 1..6).
    VerifyTable {
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
}

struct Output {
    json: Value,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    exit: i32,
}

impl Output {
    fn new(json: Value, header: Vec<&'static str>, rows: Vec<Vec<String>>) -> Self {
        Self { json, header, rows, exit: 0 }
    }
}

fn matrix_json(m: &Matrix) -> Value {
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    json!(rows)
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn ratio_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn intervals_field(s: &Schedule) -> String {
    s.intervals().iter().map(|t| t.to_string()).collect::<Vec<_>>().join(";")
}

fn load_model(path: &Option<PathBuf>) -> Result<(SystemModel, Option<String>)> {
    let path = path
        .as_ref()
        .ok_or_else(|| Error::InvalidArgs("this subcommand needs --model FILE".into()))?;
    let file = ModelFile::load(path)?;
    Ok((file.to_model()?, file.name))
}

/// Parses `argv` (including the program name), runs the subcommand and
/// writes results to `out`, diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let _ = write!(err, "{}", e.render());
            let obj = json!({"error": {"kind": "Usage", "message": e.kind().to_string()}});
            let _ = writeln!(out, "{obj}");
            return 1;
        }
    };
    let format = cli.format;
    match dispatch(cli) {
        Ok(output) => match write_output(&output, format, out) {
            Ok(()) => output.exit,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                1
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            let obj = json!({"error": {"kind": e.kind(), "message": e.to_string()}});
            let _ = writeln!(out, "{obj}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

fn write_output(output: &Output, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
    match format {
        Format::Json => {
            let text = serde_json::to_string_pretty(&output.json).map_err(std::io::Error::other)?;
            writeln!(out, "{text}")
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&output.header).map_err(std::io::Error::other)?;
            for row in &output.rows {
                w.write_record(row).map_err(std::io::Error::other)?;
            }
            let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
            out.write_all(&bytes)
        }
    }
}

fn dispatch(cli: Cli) -> Result<Output> {
    match cli.command {
        Command::Riccati => {
            let (model, name) = load_model(&cli.model)?;
            let ric = solve_dare(&model, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
            let json = json!({
                "model": name,
                "P": matrix_json(&ric.p),
                "K": matrix_json(&ric.k),
                "Z": matrix_json(&ric.z),
                "trPW": ric.tr_pw,
                "iterations": ric.iterations,
            });
            let mut rows = Vec::new();
            for (label, m) in [("P", &ric.p), ("K", &ric.k), ("Z", &ric.z)] {
                for i in 0..m.nrows() {
                    for j in 0..m.ncols() {
                        rows.push(vec![label.to_string(), i.to_string(), j.to_string(), num(m[(i, j)])]);
                    }
                }
            }
            rows.push(vec!["trPW".into(), String::new(), String::new(), num(ric.tr_pw)]);
            Ok(Output::new(json, vec!["quantity", "row", "col", "value"], rows))
        }
        Command::Beta { pmax } => {
            if pmax == 0 {
                return Err(Error::InvalidArgs("--pmax must be at least 1".into()));
            }
            let (model, _) = load_model(&cli.model)?;
            let ric = solve_dare(&model, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
            let values = BetaTable::new(&model, &ric).values(pmax)?;
            let rows = values.iter().enumerate().map(|(i, v)| vec![(i + 1).to_string(), num(*v)]).collect();
            Ok(Output::new(json!({"pmax": pmax, "beta": values}), vec!["p", "beta"], rows))
        }
        Command::J2 { schedule } => {
            let (model, _) = load_model(&cli.model)?;
            let ric = solve_dare(&model, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
            let j2 = BetaTable::new(&model, &ric).j2(&schedule)?;
            let avg = format_ratio(&schedule.average_interval());
            let json = json!({
                "schedule": schedule.intervals(),
                "period": schedule.period(),
                "samples": schedule.samples(),
                "average_interval": avg,
                "trPW": ric.tr_pw,
                "j2": j2,
            });
            let row = vec![
                intervals_field(&schedule),
                schedule.period().to_string(),
                schedule.samples().to_string(),
                avg,
                num(ric.tr_pw),
                num(j2),
            ];
            Ok(Output::new(
                json,
                vec!["schedule", "period", "samples", "average_interval", "trPW", "j2"],
                vec![row],
            ))
        }
        Command::Optimize { h, m, greedy_from } => {
            let best = optimal_schedule(h, m)?;
            let table = match &cli.model {
                Some(_) => {
                    let (model, _) = load_model(&cli.model)?;
                    let ric = solve_dare(&model, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
                    Some(BetaTable::new(&model, &ric))
                }
                None if greedy_from.is_some() => {
                    return Err(Error::InvalidArgs("--greedy-from needs --model FILE".into()))
                }
                None => None,
            };
            let best_j2 = table.as_ref().map(|t| t.j2(&best)).transpose()?;
            let mut json = json!({
                "h": h,
                "m": m,
                "intervals": best.intervals(),
                "sigma": best.to_bit_string(),
                "average_interval": format_ratio(&best.average_interval()),
            });
            if let Some(v) = best_j2 {
                json["j2"] = json!(v);
            }
            let mut rows = vec![vec![
                "optimal".to_string(),
                intervals_field(&best),
                best_j2.map(num).unwrap_or_default(),
            ]];
            if let (Some(start), Some(table)) = (greedy_from, &table) {
                if start.period() != h || start.samples() != m {
                    log::warn!("--greedy-from schedule has period {} and {} samples", start.period(), start.samples());
                }
                let trace = table.greedy_trace(&start)?;
                debug_assert_eq!(trace.last().map(|s| s.schedule.clone()), Some(greedy_optimize(&start)?));
                json["greedy"] = trace
                    .iter()
                    .enumerate()
                    .map(|(i, s)| json!({"step": i, "intervals": s.schedule.intervals(), "j2": s.j2}))
                    .collect();
                for (i, s) in trace.iter().enumerate() {
                    rows.push(vec![i.to_string(), intervals_field(&s.schedule), num(s.j2)]);
                }
            }
            Ok(Output::new(json, vec!["step", "intervals", "j2"], rows))
        }
        Command::Gamma { h, schedule, tol } => {
            let (model, _) = load_model(&cli.model)?;
            let opts = BisectionOptions::with_tol(tol);
            let max_interval = match (&schedule, h) {
                (Some(s), _) => s.max_interval(),
                (None, Some(h)) => h,
                (None, None) => return Err(Error::InvalidArgs("need --h or --schedule".into())),
            };
            let bracket = gamma_h_bracket(&model, max_interval, &opts)?;
            let mut json = json!({
                "max_interval": max_interval,
                "gamma": bracket.gamma,
                "lower": bracket.lower,
                "upper": bracket.upper,
                "tol": tol,
            });
            if let Some(s) = &schedule {
                json["schedule"] = json!(s.intervals());
            }
            let row = vec![max_interval.to_string(), num(bracket.gamma), num(bracket.lower), num(bracket.upper)];
            Ok(Output::new(json, vec!["max_interval", "gamma", "lower", "upper"], vec![row]))
        }
        Command::Curve { kind, hmax, grid, tol } => {
            if hmax == 0 {
                return Err(Error::InvalidArgs("--hmax must be at least 1".into()));
            }
            let (model, _) = load_model(&cli.model)?;
            match kind {
                CurveKind::H2 => curve_h2(&model, hmax, grid),
                CurveKind::Hinf => curve_hinf(&model, hmax, grid, &BisectionOptions::with_tol(tol)),
            }
        }
        Command::Simulate { schedule, horizon, trials, seed } => {
            let (model, _) = load_model(&cli.model)?;
            let ric = solve_dare(&model, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
            let report = with_thread_cap(|| monte_carlo_j2(&model, &ric, &schedule, horizon, trials, seed))?;
            let analytic = BetaTable::new(&model, &ric).j2(&schedule)?;
            let mut json = serde_json::to_value(&report).map_err(|e| Error::InvalidArgs(e.to_string()))?;
            json["analytic_j2"] = json!(analytic);
            let row = vec![
                intervals_field(&schedule),
                horizon.to_string(),
                trials.to_string(),
                seed.to_string(),
                num(report.empirical_mean),
                num(report.std_error),
                num(analytic),
            ];
            Ok(Output::new(
                json,
                vec!["schedule", "horizon", "trials", "seed", "empirical_mean", "std_error", "analytic_j2"],
                vec![row],
            ))
        }
        Command::VerifyTable { tol } => {
            let model = match &cli.model {
                Some(_) => load_model(&cli.model)?.0,
                None => triple_integrator(),
            };
            let report = verify_table(&model, &BisectionOptions::with_tol(tol))?;
            let rows = report
                .entries
                .iter()
                .map(|e| {
                    vec![
                        e.quantity.to_string(),
                        e.h.to_string(),
                        num(e.computed),
                        num(e.reference),
                        num(e.rel_dev),
                        e.pass.to_string(),
                    ]
                })
                .collect();
            let json = serde_json::to_value(&report).map_err(|e| Error::InvalidArgs(e.to_string()))?;
            let mut output = Output::new(json, vec!["quantity", "h", "computed", "reference", "rel_dev", "pass"], rows);
            if !report.all_pass {
                output.json["error"] = json!({"kind": "TableMismatch", "message": "some entries deviate by more than 1%"});
                output.exit = 2;
            }
            Ok(output)
        }
    }
}

fn with_thread_cap<T: Send>(f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let threads = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok());
    match threads {
        Some(n) if n > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidArgs(format!("{THREADS_ENV}: {e}")))?;
            pool.install(f)
        }
        _ => f(),
    }
}

fn curve_h2(model: &SystemModel, hmax: usize, grid: Option<usize>) -> Result<Output> {
    let ric = solve_dare(model, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let table = BetaTable::new(model, &ric);
    let breakpoints = table.h2_breakpoints(hmax)?;
    let mut json = json!({"kind": "h2", "hmax": hmax, "breakpoints": breakpoints});
    let mut rows: Vec<Vec<String>> = breakpoints
        .iter()
        .map(|p| vec!["breakpoint".into(), format_ratio(&p.rate), num(ratio_f64(p.rate)), num(p.value)])
        .collect();
    if let Some(n) = grid.filter(|&n| n > 0) {
        // rates (n + i (hmax - 1)) / (hmax n), i = 0..=n
        let rates: Vec<Rational> = (0..=n as u64)
            .map(|i| Rational::new(n as u64 + i * (hmax as u64 - 1), hmax as u64 * n as u64))
            .collect();
        let samples = table.h2_curve(hmax, &rates)?;
        for p in &samples {
            rows.push(vec!["grid".into(), format_ratio(&p.rate), num(ratio_f64(p.rate)), num(p.value)]);
        }
        json["grid"] = json!(samples);
    }
    Ok(Output::new(json, vec!["kind", "rate", "rate_value", "j2"], rows))
}

fn curve_hinf(model: &SystemModel, hmax: usize, grid: Option<usize>, opts: &BisectionOptions) -> Result<Output> {
    let steps = hinf_curve(model, hmax, opts)?;
    let mut json = json!({"kind": "hinf", "hmax": hmax, "steps": steps});
    let mut rows: Vec<Vec<String>> = steps
        .iter()
        .map(|s| {
            vec![
                "step".into(),
                format_ratio(&s.lower),
                format_ratio(&s.upper),
                s.lower_closed.to_string(),
                num(s.gamma),
            ]
        })
        .collect();
    if let Some(n) = grid.filter(|&n| n > 0) {
        // average intervals (n + i (hmax - 1)) / n, i = 0..=n
        let mut samples = Vec::new();
        for i in 0..=n as u64 {
            let a = Rational::new(n as u64 + i * (hmax as u64 - 1), n as u64);
            let gamma = optimal_gamma_at(&steps, a).expect("grid stays inside [1, hmax]");
            rows.push(vec!["grid".into(), format_ratio(&a), format_ratio(&a), "true".into(), num(gamma)]);
            samples.push(json!({"average_interval": format_ratio(&a), "gamma": gamma}));
        }
        json["grid"] = json!(samples);
    }
    Ok(Output::new(json, vec!["kind", "lower", "upper", "lower_closed", "gamma"], rows))
}
