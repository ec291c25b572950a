use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use detmec_core::results::{
    export, run, Command, Format, ResultSet, RunOptions, SimMode, SolverKind, SweepParam, SweepSpec,
};
use detmec_core::scenario::{generate_scenario, Profile, ScenarioFile};
use detmec_core::scheduler::SchedulePlan;
use detmec_core::Error;

#[derive(Parser)]
#[command(name = "detmec", version, about = "Deterministic MEC scheduling and simulation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a generated scenario file.
    Generate {
        #[arg(long, default_value = "paper-like")]
        profile: Profile,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve a scenario and write the plan as JSON.
    Schedule {
        scenario: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write the full result set (JSON) here.
        #[arg(long)]
        results: Option<PathBuf>,
    },
    /// Replay a plan and write per-hop traces.
    Simulate {
        scenario: PathBuf,
        plan: PathBuf,
        #[arg(long, default_value_t = 100)]
        hypercycles: u32,
        #[arg(long, default_value = "det")]
        mode: SimMode,
        /// Background utilization for best-effort mode; the scenario value when omitted.
        #[arg(long)]
        utilization: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Deterministic against best-effort forwarding on the same plan and seeds.
    ///
    /// Utilization is the background load per link: each wired link carries
    /// bursts that keep it busy for that fraction of the time. The
    /// measured_utilization column is the mean over all wired links of the
    /// time-averaged busy fraction, background and tasks together.
    Compare {
        scenario: PathBuf,
        /// Plan to replay; solved with --solver when omitted.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long, default_value_t = 100)]
        hypercycles: u32,
        #[arg(long, value_delimiter = ',', default_value = "0.2,0.4,0.6,0.8")]
        utilizations: Vec<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Objective of every solver against the hop bound or the demand count.
    Sweep {
        scenario: PathBuf,
        #[arg(long)]
        param: SweepParam,
        /// Inclusive, as a..b.
        #[arg(long)]
        range: String,
        #[arg(long, default_value_t = 1)]
        step: u32,
        #[arg(long, default_value_t = 60_000)]
        time_budget_ms: u64,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, default_value = "tabu")]
    solver: SolverKind,
    /// Maximum hops per path; the scenario's bound when omitted.
    #[arg(long = "H")]
    max_hops: Option<usize>,
    #[arg(long, default_value_t = 60_000)]
    time_budget_ms: u64,
}

#[derive(Args)]
struct OutArgs {
    /// Output path; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// csv or json; taken from the output extension when omitted.
    #[arg(long)]
    format: Option<Format>,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Invalid(vs) = &e {
                for v in vs {
                    eprintln!("  {v}");
                }
            }
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Invalid(_) | Error::InvalidConfig(_) | Error::Json(_) => 2,
        Error::InstanceTooLarge(_) => 3,
        _ => 1,
    }
}

fn options(solve: &SolveArgs) -> RunOptions {
    let mut o = RunOptions {
        solver: solve.solver,
        max_hops: solve.max_hops,
        ..RunOptions::default()
    };
    o.tabu.time_budget_ms = solve.time_budget_ms;
    o
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.cmd {
        Cmd::Generate { profile, seed, output } => {
            write_text(output.as_deref(), &generate_scenario(profile, seed).to_json()?)
        }
        Cmd::Schedule {
            scenario,
            solve,
            output,
            results,
        } => {
            let s = ScenarioFile::load(&scenario)?;
            let r = run(Command::Schedule, &s, &options(&solve))?;
            let plan = r.plan.as_ref().expect("schedule fills the plan");
            eprintln!(
                "{}: accepted {} of {} demands, total bound {} ns",
                plan.solver,
                plan.objective,
                plan.decisions.len(),
                plan.total_bound
            );
            write_text(output.as_deref(), &(serde_json::to_string_pretty(plan)? + "\n"))?;
            if let Some(path) = results {
                export(&r, Format::Json, &path)?;
            }
            Ok(())
        }
        Cmd::Simulate {
            scenario,
            plan,
            hypercycles,
            mode,
            utilization,
            out,
        } => {
            let mut s = ScenarioFile::load(&scenario)?;
            if let Some(u) = utilization {
                s.background.utilization = u;
            }
            let plan: SchedulePlan = serde_json::from_str(&std::fs::read_to_string(&plan)?)?;
            let o = RunOptions {
                hypercycles,
                mode,
                plan: Some(plan),
                ..RunOptions::default()
            };
            emit(&run(Command::Simulate, &s, &o)?, &out)
        }
        Cmd::Compare {
            scenario,
            plan,
            solve,
            hypercycles,
            utilizations,
            out,
        } => {
            let s = ScenarioFile::load(&scenario)?;
            let mut o = options(&solve);
            o.hypercycles = hypercycles;
            o.utilizations = utilizations;
            if let Some(p) = plan {
                o.plan = Some(serde_json::from_str(&std::fs::read_to_string(p)?)?);
            }
            emit(&run(Command::Compare, &s, &o)?, &out)
        }
        Cmd::Sweep {
            scenario,
            param,
            range,
            step,
            time_budget_ms,
            out,
        } => {
            let s = ScenarioFile::load(&scenario)?;
            let mut o = RunOptions {
                sweep: Some(SweepSpec::parse(param, &range, step)?),
                ..RunOptions::default()
            };
            o.tabu.time_budget_ms = time_budget_ms;
            emit(&run(Command::Sweep, &s, &o)?, &out)
        }
    }
}

fn emit(r: &ResultSet, out: &OutArgs) -> Result<(), Error> {
    let format = out
        .format
        .unwrap_or_else(|| out.output.as_deref().map_or(Format::Csv, Format::for_path));
    match &out.output {
        Some(path) => export(r, format, path),
        None => {
            let text = match format {
                Format::Csv => r.to_csv()?,
                Format::Json => r.to_json()?,
            };
            write_text(None, &text)
        }
    }
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
