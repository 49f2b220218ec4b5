//! Scenario runner CLI.
//!
//! Exit codes: 0 success, 1 validation failure (including unparseable
//! configs), 2 runtime error, 3 privacy-violation abort.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use islandrun::config::{ConfigError, ScenarioConfig};
use islandrun::harness::{self, Agent, Policy, SimError, SimOutput};
use islandrun::waves::RoutingMode;

#[derive(Parser)]
#[command(name = "islandrun", version, about = "Privacy-aware multi-objective inference routing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for traces and reports.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the routing mode.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<RoutingMode>,
    /// Print the full metrics report instead of the one-line summary.
    #[arg(short, long)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario under a policy and write trace + report.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Routing policy.
        #[arg(long, default_value = "islandrun", value_parser = parse_policy)]
        policy: Policy,
    },
    /// Statically validate a scenario configuration.
    Validate {
        /// Scenario configuration file (TOML).
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the orchestrated policy with one agent disabled.
    Ablate {
        #[command(flatten)]
        common: CommonArgs,
        /// Agent to disable.
        #[arg(long, value_parser = parse_agent)]
        disable: Agent,
    },
    /// Run all five policies on the identical seeded workload.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn parse_mode(s: &str) -> Result<RoutingMode, String> {
    match s {
        "scalarized" => Ok(RoutingMode::Scalarized),
        "constraint" | "constraint_based" => Ok(RoutingMode::ConstraintBased),
        other => Err(format!("unknown mode {other:?} (scalarized|constraint)")),
    }
}

fn parse_policy(s: &str) -> Result<Policy, String> {
    s.parse()
}

fn parse_agent(s: &str) -> Result<Agent, String> {
    s.parse()
}

const EXIT_VALIDATION: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_PRIVACY_ABORT: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code),
    }
}

fn dispatch(cli: Cli) -> Result<(), u8> {
    match cli.command {
        Command::Validate { config } => validate(&config),
        Command::Run { common, policy } => {
            let config = load(&common)?;
            let output = run(&config, policy, None)?;
            emit(&common, &output, policy.label())
        }
        Command::Ablate { common, disable } => {
            let config = load(&common)?;
            let output = match harness::ablate(&config, disable) {
                Ok(output) => output,
                Err(err) => return Err(report_sim_error(err)),
            };
            let label = format!("islandrun ({} disabled)", disable.label());
            emit(&common, &output, &label)
        }
        Command::Compare { common } => {
            let config = load(&common)?;
            compare(&common, &config)
        }
    }
}

fn validate(path: &Path) -> Result<(), u8> {
    let config = match ScenarioConfig::from_path(path) {
        Ok(config) => config,
        Err(err) => {
            eprintln!("{err}");
            return Err(EXIT_VALIDATION);
        }
    };
    let report = config.validate();
    say(&report.to_string());
    if report.has_errors() {
        Err(EXIT_VALIDATION)
    } else {
        Ok(())
    }
}

fn load(common: &CommonArgs) -> Result<ScenarioConfig, u8> {
    let mut config = match ScenarioConfig::from_path(&common.config) {
        Ok(config) => config,
        Err(err) => {
            eprintln!("{err}");
            return Err(EXIT_VALIDATION);
        }
    };
    if let Some(seed) = common.seed {
        config.scenario.seed = seed;
    }
    if let Some(mode) = common.mode {
        config.scenario.routing_mode = mode;
    }
    Ok(config)
}

fn run(config: &ScenarioConfig, policy: Policy, disabled: Option<Agent>) -> Result<SimOutput, u8> {
    harness::run_scenario(config, policy, disabled).map_err(report_sim_error)
}

fn report_sim_error(err: SimError) -> u8 {
    eprintln!("{err}");
    match err {
        SimError::Config(ConfigError::Invalid(_))
        | SimError::Config(ConfigError::Parse(_))
        | SimError::Config(ConfigError::Io { .. }) => EXIT_VALIDATION,
        SimError::Workload(_) => EXIT_RUNTIME,
        SimError::PrivacyViolation { .. } => EXIT_PRIVACY_ABORT,
    }
}

/// Print without panicking when stdout is a closed pipe (e.g. `| head`).
fn say(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().write_all(text.as_bytes());
}

fn emit(common: &CommonArgs, output: &SimOutput, policy_label: &str) -> Result<(), u8> {
    let report = output.metrics.report(&output.scenario, policy_label);
    write_out(&common.out, "trace.tsv", &output.trace_text())?;
    write_out(&common.out, "report.txt", &report)?;
    if common.verbose {
        say(&report);
    } else {
        say(&format!(
            "{}: {} requests, {} routed, {} failsafe, {} rejected, {} violations, cost {:.4}\n",
            output.scenario,
            output.metrics.total_requests,
            output.metrics.routed,
            output.metrics.failsafe_local,
            output.metrics.rejections_fail_closed,
            output.metrics.privacy_violations,
            output.metrics.total_cost
        ));
    }
    say(&format!("trace: {}\n", common.out.join("trace.tsv").display()));
    Ok(())
}

fn compare(common: &CommonArgs, config: &ScenarioConfig) -> Result<(), u8> {
    let outputs = match harness::compare(config) {
        Ok(outputs) => outputs,
        Err(err) => return Err(report_sim_error(err)),
    };
    let mut table = String::new();
    table.push_str(&format!(
        "{:<16}{:>11}{:>11}{:>10}{:>11}{:>8}{:>8}\n",
        "policy", "violations", "rejections", "cost", "local-util", "p50us", "p99us"
    ));
    for output in &outputs {
        let m = &output.metrics;
        table.push_str(&format!(
            "{:<16}{:>11}{:>11}{:>10.4}{:>11.4}{:>8}{:>8}\n",
            output.policy.label(),
            m.privacy_violations,
            m.rejections_fail_closed,
            m.total_cost,
            m.local_utilization(),
            m.latency_percentile_us(50.0),
            m.latency_percentile_us(99.0),
        ));
    }
    say(&table);
    write_out(&common.out, "compare.txt", &table)?;
    for output in &outputs {
        let name = format!("trace-{}.tsv", output.policy.label());
        write_out(&common.out, &name, &output.trace_text())?;
    }
    Ok(())
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<(), u8> {
    if let Err(err) = std::fs::create_dir_all(dir) {
        eprintln!("cannot create {}: {err}", dir.display());
        return Err(EXIT_RUNTIME);
    }
    let path = dir.join(name);
    if let Err(err) = std::fs::write(&path, contents) {
        eprintln!("cannot write {}: {err}", path.display());
        return Err(EXIT_RUNTIME);
    }
    Ok(())
}
