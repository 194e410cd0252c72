//! `sipg`: headless entry points for the infrastructure planning
//! co-simulation.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or input error.
//! `SIPG_LOG` sets log verbosity (e.g. `SIPG_LOG=info`).

use std::fmt::Write as _;
use std::fs;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use log::{debug, info};

use sipg_core::federation::flowfile::{run_local, Boundary, FlowDocument};
use sipg_core::federation::tcp::{run_federate, serve, ServePolicy};
use sipg_core::federation::{Coordinator, FederateDriver};
use sipg_core::kernel::{run_mono, RunResult};
use sipg_core::scenario::{self, JointVisibility, Plan, Role, Scenario};
use sipg_core::session::{compute_process_metrics, export_archive, replay, SessionLog, Variant};

#[derive(Parser)]
#[command(name = "sipg", version, about = "Federated agriculture-water-energy planning co-simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Inputs {
    /// Scenario document; the built-in default scenario when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Plan document with elements added to the scenario.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Reserved: the model is deterministic and ignores the seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the whole horizon in one process and write flow and objective CSVs.
    RunMono {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Host a synchronous federation on a TCP port.
    ServeCoordinator {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, default_value_t = 7410)]
        port: u16,
        #[arg(long, default_value = "1A", value_parser = parse_variant)]
        variant: Variant,
        /// Executions to host before shutting down once all federates leave.
        #[arg(long, default_value_t = 1)]
        executions: u32,
        /// Where to write the final execution's CSVs.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Join a federation as one role and take part in its executions.
    RunFederate {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_parser = parse_role)]
        role: Role,
        #[arg(long, default_value = "127.0.0.1:7410")]
        address: String,
        /// Federate id; defaults to the role name.
        #[arg(long)]
        id: Option<String>,
        #[arg(long, default_value_t = 1)]
        executions: u32,
    },
    /// Run one role locally against imported flow files (asynchronous mode).
    RunLocal {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_parser = parse_role)]
        role: Role,
        /// Flow files exported by the other roles.
        #[arg(long = "import")]
        imports: Vec<PathBuf>,
        /// Where to write this role's flow file.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Check a scenario and list every finding.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Re-execute a session log, verify its snapshots and print metrics.
    Replay {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Write the session archive (scenario, log, objectives) here.
        #[arg(long)]
        archive: Option<PathBuf>,
    },
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    Variant::parse(s).ok_or_else(|| format!("unknown variant {s:?} (expected 1A, 1B or 2)"))
}

fn parse_role(s: &str) -> Result<Role, String> {
    Role::parse(s).ok_or_else(|| format!("unknown role {s:?} (expected agriculture, water or energy)"))
}

/// Failure classes mapped to exit codes.
enum Failure {
    Input(anyhow::Error),
    Runtime(anyhow::Error),
}

type Outcome = Result<(), Failure>;

fn input(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Input(e.into())
}

fn runtime(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(e.into())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display())).map_err(input)
}

fn load(inputs: &Inputs) -> Result<Scenario, Failure> {
    if let Some(seed) = inputs.seed {
        debug!("seed {seed} ignored: the model is deterministic");
    }
    let base = match &inputs.scenario {
        Some(p) => Scenario::from_json(&read(p)?)
            .with_context(|| format!("invalid scenario {}", p.display()))
            .map_err(input)?,
        None => Scenario::default_scenario(),
    };
    match &inputs.plan {
        Some(p) => {
            let plan = Plan::from_json(&read(p)?)
                .with_context(|| format!("invalid plan {}", p.display()))
                .map_err(input)?;
            base.with_plan(&plan)
                .with_context(|| format!("plan {} does not fit the scenario", p.display()))
                .map_err(input)
        }
        None => Ok(base),
    }
}

fn write(path: &Path, body: &str) -> Outcome {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display())).map_err(runtime)?;
    }
    fs::write(path, body).with_context(|| format!("cannot write {}", path.display())).map_err(runtime)
}

/// One row per year: budget bookkeeping and, from the planning start on,
/// every objective score.
fn objectives_csv(run: &RunResult) -> String {
    let mut out = String::from(
        "year,capitalExpenses,budgetViolation,currency,residual,\
         agricultureFood,agricultureFinancial,agriculturePolitical,\
         waterAquifer,waterFinancial,waterPolitical,\
         energyReservoir,energyFinancial,energyPolitical,\
         jointFinancial,joint\n",
    );
    for y in &run.years {
        let _ = write!(
            out,
            "{},{},{},{},{}",
            y.year, y.capital_expenses, y.budget_violation, y.currency, y.residual
        );
        match &y.report {
            Some(r) => {
                for s in [&r.agriculture, &r.water, &r.energy] {
                    let _ = write!(out, ",{},{},{}", s.security, s.financial, s.political);
                }
                let _ = writeln!(out, ",{},{}", r.joint_financial, r.joint);
            }
            None => out.push_str(",,,,,,,,,,,\n"),
        }
    }
    out
}

fn write_outputs(out_dir: &Path, run: &RunResult) -> Outcome {
    write(&out_dir.join("flows.csv"), &run.ledger.to_csv())?;
    write(&out_dir.join("objectives.csv"), &objectives_csv(run))
}

fn print_joint(scenario: &Scenario, run: &RunResult) {
    let end = scenario.horizon.end;
    match run.report(end) {
        Some(r) => println!("joint objective {end}: {:.3}", r.joint),
        None => println!("joint objective {end}: not scored (before planning start)"),
    }
    let violations = run.budget_violations();
    if !violations.is_empty() {
        println!("budget exceeded in {violations:?}");
    }
}

fn run_mono_cmd(inputs: &Inputs, out_dir: &Path) -> Outcome {
    let scenario = load(inputs)?;
    let run = run_mono(&scenario).map_err(runtime)?;
    write_outputs(out_dir, &run)?;
    print_joint(&scenario, &run);
    Ok(())
}

fn serve_cmd(inputs: &Inputs, port: u16, variant: Variant, executions: u32, out_dir: Option<&Path>) -> Outcome {
    let mut scenario = load(inputs)?;
    scenario.objectives.joint_visibility = match variant {
        Variant::V1A => JointVisibility::Quantitative,
        Variant::V1B => JointVisibility::Qualitative,
        Variant::V2 => {
            return Err(input(anyhow!(
                "variant 2 exchanges flow files; use run-local instead of a coordinator"
            )))
        }
    };
    let listener = TcpListener::bind(("127.0.0.1", port))
        .with_context(|| format!("cannot listen on port {port}"))
        .map_err(runtime)?;
    println!("coordinator listening on {}", listener.local_addr().map_err(runtime)?);
    let coordinator = serve(listener, Coordinator::new(scenario.clone()), ServePolicy { executions }).map_err(runtime)?;
    println!("{} execution(s) completed", coordinator.exchanges());
    if let Some(run) = coordinator.completed().last() {
        if let Some(dir) = out_dir {
            write_outputs(dir, run)?;
        }
        print_joint(&scenario, run);
    }
    Ok(())
}

fn federate_cmd(inputs: &Inputs, role: Role, address: &str, id: Option<&str>, executions: u32) -> Outcome {
    let scenario = load(inputs)?;
    let id = id.unwrap_or(role.as_str());
    let driver = FederateDriver::new(id, role, vec![scenario; executions.max(1) as usize]);
    let driver = run_federate(address, driver)
        .with_context(|| format!("{id} failed against {address}"))
        .map_err(runtime)?;
    for s in driver.summaries() {
        let scores = s.scores.map(|r| r.objective()).unwrap_or(f64::NAN);
        match s.joint {
            Some(j) => println!("{}: role objective {scores:.3}, joint {j:.3}", s.year),
            None => println!("{}: role objective {scores:.3}, joint {}", s.year, s.joint_level),
        }
    }
    Ok(())
}

fn local_cmd(inputs: &Inputs, role: Role, imports: &[PathBuf], export: Option<&Path>) -> Outcome {
    let scenario = load(inputs)?;
    let docs = imports
        .iter()
        .map(|p| {
            FlowDocument::parse(&read(p)?)
                .with_context(|| format!("invalid flow file {}", p.display()))
                .map_err(input)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let boundary = Boundary::import(&scenario, role, &docs).map_err(input)?;
    let ledger = run_local(&scenario, role, &boundary).map_err(runtime)?;
    let doc = FlowDocument::export(&scenario, role, &ledger);
    match export {
        Some(p) => {
            write(p, &doc.to_text())?;
            info!("exported {} rows to {}", doc.rows.len(), p.display());
        }
        None => print!("{}", doc.to_text()),
    }
    Ok(())
}

fn validate_cmd(path: &Path) -> Outcome {
    let text = read(path)?;
    let scenario = Scenario::parse_unchecked(&text)
        .with_context(|| format!("cannot parse {}", path.display()))
        .map_err(input)?;
    let findings = scenario::validate(&scenario);
    for f in &findings {
        println!("{}: {}", f.path, f.message);
    }
    if findings.is_empty() {
        println!("{}: clean", path.display());
        Ok(())
    } else {
        Err(input(anyhow!("{} finding(s) in {}", findings.len(), path.display())))
    }
}

fn replay_cmd(log_path: &Path, scenario: Option<&Path>, archive: Option<&Path>) -> Outcome {
    let log = SessionLog::from_ndjson(&read(log_path)?)
        .with_context(|| format!("invalid session log {}", log_path.display()))
        .map_err(input)?;
    let scenario = load(&Inputs {
        scenario: scenario.map(Path::to_path_buf),
        plan: None,
        seed: None,
    })?;
    let snapshots = replay(&log, &scenario).map_err(runtime)?;
    let m = compute_process_metrics(&log);
    println!("session {} (variant {})", log.header.session_id, log.header.variant.as_str());
    println!("executions reproduced: {}", snapshots.len());
    println!("data exchanges: {}", m.num_exchanges);
    for (role, n) in &m.simulations {
        println!("{} simulations: {n}", role.as_str());
    }
    println!("budget violation years: {:?}", m.budget_violation_years);
    if let Some(path) = archive {
        let bytes = export_archive(&log, &scenario).map_err(runtime)?;
        fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display())).map_err(runtime)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SIPG_LOG", "warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::RunMono { inputs, out_dir } => run_mono_cmd(inputs, out_dir),
        Command::ServeCoordinator {
            inputs,
            port,
            variant,
            executions,
            out_dir,
        } => serve_cmd(inputs, *port, *variant, *executions, out_dir.as_deref()),
        Command::RunFederate {
            inputs,
            role,
            address,
            id,
            executions,
        } => federate_cmd(inputs, *role, address, id.as_deref(), *executions),
        Command::RunLocal {
            inputs,
            role,
            imports,
            export,
        } => local_cmd(inputs, *role, imports, export.as_deref()),
        Command::Validate { scenario } => validate_cmd(scenario),
        Command::Replay { log, scenario, archive } => replay_cmd(log, scenario.as_deref(), archive.as_deref()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
