use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use qreg_core::analysis::{self, e_curve_csv};
use qreg_core::io::{self, OtFile};
use qreg_core::oracle;
use qreg_core::ot::{self, figure3_csv, figure3_experiment, ot_eta_star, ot_slope_bound};
use qreg_core::polytope::DEFAULT_BUDGET;
use qreg_core::projection::certify;
use qreg_core::{solve_qlp, trace_path, OtInstance, Polytope, QlpInstance, Tolerances};

#[derive(Parser)]
#[command(
    name = "qreg",
    version,
    about = "Quadratically regularized LPs: projection, solution paths, thresholds"
)]
struct Cli {
    /// Multiply every default tolerance by this factor
    #[arg(long, global = true, default_value_t = 1.0)]
    tol: f64,

    /// Seed for random instances and sampled checks
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Cap on candidate bases during vertex enumeration (QREG_BUDGET takes precedence)
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    budget: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the regularized problem at one eta and print the result as JSON
    Project {
        instance: PathBuf,
        #[arg(long)]
        eta: f64,
    },
    /// Trace the solution path and print its breakpoints
    Path {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Trace the path and check the threshold and slope bounds
    Analyze {
        instance: PathBuf,
        /// Uniform E-curve samples on [0, 1.1 eta*]
        #[arg(long, default_value_t = analysis::DEFAULT_GRID)]
        grid: usize,
        /// Report JSON; the E-curve goes next to it with a .csv extension
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimal transport between uniform empirical measures
    Ot {
        #[command(subcommand)]
        command: OtCommand,
    },
    /// Compare the path tracer with brute-force oracles
    OracleCheck {
        /// Instance to check; seeded random instances when omitted
        instance: Option<PathBuf>,
        /// Random instances to generate
        #[arg(long, default_value_t = 20)]
        count: u64,
        /// Cold-start solves per instance
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
}

#[derive(Subcommand)]
enum OtCommand {
    /// Threshold eta* from the permutation formula and from the path
    Threshold { input: PathBuf },
    /// Half the variance of the cost entries
    SlopeBound { input: PathBuf },
    /// Last-segment slope L_N of the 1-D quadratic cost against (N-1)/N^6
    Experiment {
        #[arg(long, value_delimiter = ',', default_value = "2,4,8,16")]
        n_list: Vec<usize>,
        /// Larger N are reported as skipped
        #[arg(long, default_value_t = ot::HOMOTOPY_LIMIT)]
        max_n: usize,
        /// CSV destination; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// A failed certificate or bound check, as opposed to bad input.
#[derive(Debug)]
struct CheckFailed(String);

impl std::fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CheckFailed {}

struct Loaded {
    inst: QlpInstance,
    ot: Option<OtInstance>,
}

fn load(path: &Path, cli: &Cli, need_cost: bool) -> anyhow::Result<Loaded> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let tol = Tolerances::default().scaled(cli.tol);
    if value.get("dim").is_some() {
        let file = io::parse_instance(&text)?;
        let d = file.polytope.dim;
        let c = match file.c {
            Some(c) => c,
            None if need_cost => bail!("instance has no cost vector \"c\""),
            None => vec![0.0; d],
        };
        let poly = Polytope::with_options(file.polytope, cli.budget, tol)?;
        return Ok(Loaded {
            inst: QlpInstance::new(poly, c)?,
            ot: None,
        });
    }
    let ot_inst = load_ot_value(&text)?;
    Ok(Loaded {
        inst: ot_inst.qlp_with(tol),
        ot: Some(ot_inst),
    })
}

fn load_ot_value(text: &str) -> anyhow::Result<OtInstance> {
    let file: OtFile = io::parse_ot(text)?;
    Ok(OtInstance::from_file(file)?)
}

fn load_ot(path: &Path) -> anyhow::Result<OtInstance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    load_ot_value(&text)
}

fn print_json(value: &impl serde::Serialize) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

fn cmd_project(cli: &Cli, instance: &Path, eta: f64) -> anyhow::Result<()> {
    if eta.is_nan() || eta <= 0.0 {
        bail!("--eta must be positive");
    }
    let loaded = load(instance, cli, true)?;
    let inst = &loaded.inst;
    let res = solve_qlp(inst, eta)?;
    print_json(&res)?;
    let tol = inst.polytope.tol();
    let passed = match inst.polytope.vertices() {
        Some(vs) => certify(&inst.target(eta), &res, vs, tol.certificate).passed,
        None => res.residual <= tol.kkt * (1.0 + eta * qreg_core::linalg::norm(&inst.c)),
    };
    if !passed {
        return Err(CheckFailed(format!("certificate failed, residual {:e}", res.residual)).into());
    }
    Ok(())
}

fn cmd_path(cli: &Cli, instance: &Path, format: Format) -> anyhow::Result<()> {
    let loaded = load(instance, cli, true)?;
    let path = trace_path(&loaded.inst)?;
    match format {
        Format::Json => println!("{}", path.to_json()),
        Format::Csv => print!("{}", path.to_csv()),
    }
    Ok(())
}

fn cmd_analyze(cli: &Cli, instance: &Path, grid: usize, out: Option<&Path>) -> anyhow::Result<()> {
    let loaded = load(instance, cli, true)?;
    let path = trace_path(&loaded.inst)?;
    let report = match loaded.ot {
        Some(_) => ot::analyze(&loaded.inst, &path, grid)?,
        None => analysis::analyze(&loaded.inst, &path, grid)?,
    };
    if let Some(out) = out {
        fs::write(out, serde_json::to_string_pretty(&report)?)
            .with_context(|| format!("writing {}", out.display()))?;
        let csv = out.with_extension("csv");
        fs::write(&csv, e_curve_csv(&report.e_curve))
            .with_context(|| format!("writing {}", csv.display()))?;
    }
    let slope = report
        .slope
        .as_ref()
        .map_or_else(|| "none".to_string(), |s| io::fmt_sig(s.slope, 12));
    let ok = report.bounds_ok();
    print!(
        "eta_star={} slope={slope} bounds_ok={ok}",
        io::fmt_sig(report.eta_star_path, 12)
    );
    if report.all_vertices_optimal {
        print!(" flag=AllVerticesOptimal");
    }
    println!();
    if !ok {
        return Err(CheckFailed("a bound check failed".into()).into());
    }
    Ok(())
}

fn cmd_ot(cli: &Cli, command: &OtCommand) -> anyhow::Result<()> {
    match command {
        OtCommand::Threshold { input } => {
            let inst = load_ot(input)?;
            let traced =
                trace_path(&inst.qlp_with(Tolerances::default().scaled(cli.tol)))?.eta_star;
            let formula = ot_eta_star(&inst);
            let fmt = |v: f64| io::fmt_sig(v, 12);
            match formula {
                Ok(f) => {
                    let agree = (f - traced).abs() <= 1e-7 * (1.0 + traced);
                    println!(
                        "eta_star={} eta_star_path={} agree={agree}",
                        fmt(f),
                        fmt(traced)
                    );
                    if !agree {
                        return Err(CheckFailed("formula and path disagree".into()).into());
                    }
                }
                Err(qreg_core::Error::BudgetExceeded { .. }) => {
                    println!(
                        "eta_star=skipped eta_star_path={} agree=unknown",
                        fmt(traced)
                    );
                }
                Err(e) => return Err(e.into()),
            }
        }
        OtCommand::SlopeBound { input } => {
            println!("{}", io::fmt_sig(ot_slope_bound(&load_ot(input)?), 12));
        }
        OtCommand::Experiment { n_list, max_n, out } => {
            let rows = figure3_experiment(n_list, *max_n);
            let csv = figure3_csv(&rows);
            match out {
                Some(p) => fs::write(p, csv).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{csv}"),
            }
            if let Some(r) = rows.iter().find(|r| r.ratio.is_some_and(|q| q < 1.0)) {
                return Err(CheckFailed(format!("N={}: L_N exceeds the bound", r.n)).into());
            }
        }
    }
    Ok(())
}

fn cmd_oracle_check(
    cli: &Cli,
    instance: Option<&Path>,
    count: u64,
    samples: usize,
) -> anyhow::Result<()> {
    let mut failures = 0;
    let mut run = |label: String, inst: &QlpInstance| -> anyhow::Result<()> {
        let rep = oracle::oracle_check(inst, samples, cli.seed)?;
        println!(
            "{label}: eta_star_path={} eta_star_bruteforce={} path_discrepancy={:.3e} passed={}",
            io::fmt_sig(rep.eta_star_path, 12),
            rep.eta_star_bruteforce
                .map_or_else(|| "all-optimal".to_string(), |v| io::fmt_sig(v, 12)),
            rep.path_verify.max_discrepancy,
            rep.passed
        );
        if !rep.passed {
            failures += 1;
        }
        Ok(())
    };
    match instance {
        Some(p) => {
            let loaded = load(p, cli, true)?;
            run(p.display().to_string(), &loaded.inst)?;
        }
        None => {
            for k in 0..count {
                let seed = cli.seed.wrapping_add(k);
                run(format!("seed {seed}"), &oracle::random_instance(seed)?)?;
            }
        }
    }
    if failures > 0 {
        return Err(CheckFailed(format!("{failures} instance(s) failed")).into());
    }
    Ok(())
}

fn run(cli: &mut Cli) -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("QREG_BUDGET") {
        cli.budget = v
            .trim()
            .parse()
            .with_context(|| format!("QREG_BUDGET={v:?}"))?;
    }
    if cli.tol.is_nan() || cli.tol <= 0.0 {
        return Err(anyhow!("--tol must be positive"));
    }
    let cli = &*cli;
    match &cli.command {
        Command::Project { instance, eta } => cmd_project(cli, instance, *eta),
        Command::Path { instance, format } => cmd_path(cli, instance, *format),
        Command::Analyze {
            instance,
            grid,
            out,
        } => cmd_analyze(cli, instance, *grid, out.as_deref()),
        Command::Ot { command } => cmd_ot(cli, command),
        Command::OracleCheck {
            instance,
            count,
            samples,
        } => cmd_oracle_check(cli, instance.as_deref(), *count, *samples),
    }
}

fn main() -> ExitCode {
    let mut cli = Cli::parse();
    match run(&mut cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            if e.is::<CheckFailed>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
