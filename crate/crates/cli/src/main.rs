use std::fs;
use std::io::{self, Write};
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use palmlab::repro::{example71, EXAMPLE65_EXPECTED};
use palmlab::{
    parse_group, repro, round_floats, run_suite, CheckName, CliError, RunConfig, REPORT_SCHEMA,
};
use palmlab_core::algebra::Scalar;
use palmlab_core::massstat::single_window_example;
use palmlab_torus::{
    sample_configuration, stable_marriage_allocate, verify_shift_coupling,
    verify_window_coupling_mc, OriginSampling, Torus, TorusConfig,
};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "palmlab",
    version,
    about = "Exact Palm-calculus checks and torus experiments"
)]
struct Cli {
    /// Run configuration (JSON, schema palmlab-config-v1).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Also write the JSON report to this file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the seed of the configuration or the pinned default.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: PALMLAB_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checker suite listed in the configuration.
    Check,
    /// Reproduce a worked example or the torus coupling table.
    Repro {
        #[arg(value_parser = ["example65", "example71", "coupling"])]
        name: String,
    },
    /// Monte Carlo experiments on Z_n^d.
    Torus {
        #[command(subcommand)]
        mode: TorusMode,
    },
    /// Mass-stationarity checks.
    Massstat {
        #[command(subcommand)]
        mode: MassstatMode,
    },
    /// Palm measure, Campbell, Mecke and inversion checks on the configured space.
    Palm,
    /// Balancing, inverse kernel, exchange and Neveu checks for a seeded random kernel.
    Transport,
    /// Constructs a kernel balancing ξ against its sample intensity times Haar measure.
    Exists,
}

#[derive(Args)]
struct TorusArgs {
    #[arg(long, default_value_t = 16)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Exactly k uniformly placed points.
    #[arg(long, conflicts_with = "q")]
    k: Option<usize>,
    /// Independent site occupation probability.
    #[arg(long)]
    q: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    replicates: usize,
    /// Box radii of the neighbourhood-count statistic.
    #[arg(long, default_value_t = 3)]
    radii: usize,
}

#[derive(Subcommand)]
enum TorusMode {
    /// Allocate the sites of one sampled configuration.
    Allocate {
        #[command(flatten)]
        torus: TorusArgs,
        /// Write the allocation as CSV (site coordinates, point coordinates).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Shift coupling through the quota stable-marriage allocation.
    Coupling {
        #[command(flatten)]
        torus: TorusArgs,
        /// Start from a uniform site instead of the allocated point.
        #[arg(long)]
        control: bool,
    },
    /// Randomized-window identity for a box window.
    MassstatMc {
        #[command(flatten)]
        torus: TorusArgs,
        /// Side of the box window anchored at the origin.
        #[arg(long, default_value_t = 2)]
        window: usize,
        /// Use the stationary configuration instead of the Palm version.
        #[arg(long)]
        control: bool,
    },
}

#[derive(Subcommand)]
enum MassstatMode {
    /// Mass-stationarity and the preserving-kernel battery for the configured Q.
    Check,
    /// Single-window identity on fair Bernoulli marks on Z3.
    Example65,
    /// Irrational-marks counterexample.
    Example71 {
        #[arg(long, default_value = "z3")]
        group: String,
        #[arg(long, default_value = "1/2")]
        p: String,
    },
}

/// A JSON report and the exit code it implies.
struct Output {
    report: Value,
    code: i32,
    text: Option<String>,
}

fn config_error(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("this command needs --config".into()))?;
    let text =
        fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    let mut config = RunConfig::from_json(&text)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn suite(cli: &Cli, checks: Option<&[CheckName]>) -> Result<(Output, Option<PathBuf>), CliError> {
    let mut config = load_config(cli)?;
    if let Some(c) = checks {
        config.suite = c.to_vec();
    }
    let report = run_suite(&config)?;
    let value = serde_json::to_value(&report).expect("report serializes");
    Ok((
        Output {
            report: value,
            code: report.exit_code(),
            text: None,
        },
        config.output,
    ))
}

fn torus_config(args: &TorusArgs, seed: u64) -> Result<TorusConfig, CliError> {
    match (args.k, args.q) {
        (Some(k), None) => Ok(TorusConfig::exactly_k(
            args.n,
            args.d,
            k,
            seed,
            args.replicates,
        )),
        (None, Some(q)) => Ok(TorusConfig::bernoulli(
            args.n,
            args.d,
            q,
            seed,
            args.replicates,
        )),
        _ => Err(CliError::Config("give exactly one of --k and --q".into())),
    }
}

fn origin(control: bool) -> OriginSampling {
    if control {
        OriginSampling::Stationary
    } else {
        OriginSampling::Palm
    }
}

fn torus(mode: &TorusMode, seed: u64) -> Result<Output, CliError> {
    let (mut report, code) = match mode {
        TorusMode::Allocate { torus: args, csv } => {
            let config = torus_config(args, seed)?;
            let t = Torus::new(config.n, config.d).map_err(config_error)?;
            let points = sample_configuration(&config, 0).map_err(config_error)?;
            let map = stable_marriage_allocate(&t, &points).map_err(config_error)?;
            if let Some(path) = csv {
                let file = fs::File::create(path)
                    .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
                map.write_csv(&t, file).map_err(config_error)?;
            }
            let blocking = map.blocking_pair(&t);
            let ok = map.quota_exact() && blocking.is_none();
            let coords: Vec<&[usize]> = points.iter().map(|&x| t.coords(x)).collect();
            let report = json!({
                "schema": REPORT_SCHEMA, "mode": "allocate", "config": config,
                "points": coords, "quota": map.quota, "quota_exact": map.quota_exact(),
                "blocking_pair": blocking,
            });
            (report, if ok { 0 } else { 3 })
        }
        TorusMode::Coupling {
            torus: args,
            control,
        } => {
            let config = torus_config(args, seed)?;
            let r = verify_shift_coupling(&config, args.radii, origin(*control))
                .map_err(config_error)?;
            let ok = r.quota_violations == 0 && r.blocking_pairs == 0;
            let report = json!({
                "schema": REPORT_SCHEMA, "mode": "coupling", "config": config,
                "origin": origin(*control), "radii": args.radii, "report": r,
            });
            (report, if ok { 0 } else { 3 })
        }
        TorusMode::MassstatMc {
            torus: args,
            window,
            control,
        } => {
            let config = torus_config(args, seed)?;
            let t = Torus::new(config.n, config.d).map_err(config_error)?;
            let w = t.box_window(*window);
            let r = verify_window_coupling_mc(&config, &w, args.radii, origin(*control))
                .map_err(config_error)?;
            let report = json!({
                "schema": REPORT_SCHEMA, "mode": "massstat-mc", "config": config,
                "origin": origin(*control), "window_side": window, "radii": args.radii, "report": r,
            });
            (report, 0)
        }
    };
    round_floats(&mut report);
    Ok(Output {
        report,
        code,
        text: None,
    })
}

fn massstat(cli: &Cli, mode: &MassstatMode) -> Result<(Output, Option<PathBuf>), CliError> {
    match mode {
        MassstatMode::Check => suite(cli, Some(&[CheckName::Massstat, CheckName::Battery])),
        MassstatMode::Example65 => {
            let (lhs, rhs) =
                single_window_example().map_err(|e| CliError::Defect(e.to_string()))?;
            let ((a, b), (c, d)) = EXAMPLE65_EXPECTED;
            let ok = lhs == Scalar::ratio(a, b) && rhs == Scalar::ratio(c, d);
            let report = json!({ "schema": REPORT_SCHEMA, "lhs": lhs, "rhs": rhs });
            Ok((
                Output {
                    report,
                    code: if ok { 0 } else { 3 },
                    text: None,
                },
                None,
            ))
        }
        MassstatMode::Example71 { group, p } => {
            let g = parse_group(group)?;
            let p: Scalar = p.parse().map_err(config_error)?;
            let (r, ok) = example71(&g, &p)?;
            let report = json!({ "schema": REPORT_SCHEMA, "group": g, "p": p, "reproduced": ok, "report": r });
            Ok((
                Output {
                    report,
                    code: if ok { 0 } else { 3 },
                    text: None,
                },
                None,
            ))
        }
    }
}

fn run(cli: &Cli) -> Result<(Output, Option<PathBuf>), CliError> {
    match &cli.command {
        Command::Check => suite(cli, None),
        Command::Palm => suite(
            cli,
            Some(&[
                CheckName::Palm,
                CheckName::Campbell,
                CheckName::Mecke,
                CheckName::Inversion,
            ]),
        ),
        Command::Transport => suite(cli, Some(&[CheckName::Transport])),
        Command::Exists => suite(cli, Some(&[CheckName::Exists])),
        Command::Massstat { mode } => massstat(cli, mode),
        Command::Torus { mode } => Ok((torus(mode, cli.seed.unwrap_or(0))?, None)),
        Command::Repro { name } => {
            let r = repro(name.parse()?, cli.seed)?;
            let report = serde_json::to_value(&r).expect("report serializes");
            Ok((
                Output {
                    report,
                    code: r.exit_code(),
                    text: Some(r.table),
                },
                None,
            ))
        }
    }
}

fn threads(cli: &Cli) -> Result<Option<usize>, CliError> {
    if let Some(n) = cli.threads {
        return Ok(Some(n));
    }
    match std::env::var("PALMLAB_THREADS") {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| {
            CliError::Config(format!("PALMLAB_THREADS must be a thread count, got {v:?}"))
        }),
        Err(_) => Ok(None),
    }
}

fn write_report(path: &Path, report: &Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    fs::write(path, text + "\n").map_err(|e| config_error(format!("{}: {e}", path.display())))
}

fn main_inner(cli: &Cli) -> Result<i32, CliError> {
    if let Some(n) = threads(cli)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Defect(e.to_string()))?;
    }
    let (output, config_out) = run(cli)?;
    let text = match &output.text {
        Some(text) => text.clone(),
        None => serde_json::to_string_pretty(&output.report).expect("report serializes") + "\n",
    };
    // A closed pipe (e.g. `| head`) is not a failure of the run.
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => {
            return Err(CliError::Defect(e.to_string()))
        }
        _ => {}
    }
    if let Some(path) = cli.out.as_ref().or(config_out.as_ref()) {
        write_report(path, &output.report)?;
    }
    Ok(output.code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match panic::catch_unwind(AssertUnwindSafe(|| main_inner(&cli))) {
        Ok(Ok(code)) => code,
        Ok(Err(e)) => {
            eprintln!("palmlab: {e}");
            e.exit_code()
        }
        Err(_) => {
            eprintln!("palmlab: internal defect (panic)");
            4
        }
    };
    ExitCode::from(code as u8)
}
