//! `heatw`: scenario-driven front end for the generalized heat solver.
//!
//! Exit status: 0 when every reported check passes, 1 when some check fails,
//! 2 on configuration or usage errors.

use clap::{Args, Parser, Subcommand};
use heatw::scenario::{canned_scenario, Command, Scenario, ScenarioConfig};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "heatw", version, about = "Generalized heat flow on the torus: d/dx d/dW solver and verification harness")]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Output directory (default: ./out/<scenario>)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores). Results are worker-count independent.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Override the number of spatial cells
    #[arg(long)]
    n: Option<usize>,
    /// Override the frequency cutoff Ξ
    #[arg(long = "xi-max")]
    xi_max: Option<f64>,
    /// Override the oracle time step
    #[arg(long)]
    dt: Option<f64>,
    /// Override the time horizon
    #[arg(long)]
    tmax: Option<f64>,
    /// Suppress the summary on stdout
    #[arg(long, default_value_t = false)]
    quiet: bool,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Scenario configuration file (TOML)
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Solve with the frequency-domain pipeline and emit v.csv / rho.csv
    Solve(ConfigArgs),
    /// Solve with the time-stepping backend (and the flux table when a
    /// single plateau is present)
    Oracle(ConfigArgs),
    /// Run both backends, cross-validate, and check the weak identities
    Verify(ConfigArgs),
    /// Continuity-in-the-measure experiment over a sequence of measures
    Converge(ConfigArgs),
    /// The incompatible-data experiment at the merging plateaus
    Counterexample(ConfigArgs),
    /// Run a built-in scenario: lebesgue | robin | cantor | merge-atoms | incompatible
    Examples {
        name: String,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn apply_overrides(cfg: &mut ScenarioConfig, common: &CommonArgs) {
    if let Some(n) = common.n {
        cfg.grid.n = n;
    }
    if let Some(xi) = common.xi_max {
        cfg.grid.xi_max = xi;
    }
    if let Some(dt) = common.dt {
        cfg.grid.dt = dt;
    }
    if let Some(tmax) = common.tmax {
        cfg.grid.t_max = tmax;
    }
}

fn out_dir(common: &CommonArgs, cfg: &ScenarioConfig, fallback: &str) -> PathBuf {
    if let Some(dir) = &common.out {
        return dir.clone();
    }
    if let Some(dir) = &cfg.output.dir {
        return PathBuf::from(dir);
    }
    Path::new("out").join(fallback)
}

fn execute(
    cfg: ScenarioConfig,
    base_dir: &Path,
    cmd: Command,
    common: &CommonArgs,
    fallback_name: &str,
) -> ExitCode {
    let dir = out_dir(common, &cfg, fallback_name);
    let scenario = match Scenario::resolve(cfg, base_dir) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.workers)
        .build();
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = pool.install(|| scenario.run(cmd, &dir));
    match result {
        Ok(report) => {
            if !common.quiet {
                print!("{}", report.summary());
                println!("artifacts written to {}", dir.display());
            }
            if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run_with_config(args: &ConfigArgs, cmd: Command) -> ExitCode {
    let cfg = match ScenarioConfig::from_file(&args.config) {
        Ok(mut cfg) => {
            apply_overrides(&mut cfg, &args.common);
            cfg
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let base = args
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let name = cfg.id();
    execute(cfg, &base, cmd, &args.common, &name)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        CliCommand::Solve(args) => run_with_config(&args, Command::Solve),
        CliCommand::Oracle(args) => run_with_config(&args, Command::Oracle),
        CliCommand::Verify(args) => run_with_config(&args, Command::Verify),
        CliCommand::Converge(args) => run_with_config(&args, Command::Converge),
        CliCommand::Counterexample(args) => run_with_config(&args, Command::Counterexample),
        CliCommand::Examples { name, common } => match canned_scenario(&name) {
            Some((mut cfg, cmd)) => {
                apply_overrides(&mut cfg, &common);
                execute(cfg, Path::new("."), cmd, &common, &name)
            }
            None => {
                eprintln!(
                    "error: unknown example `{name}`; choose one of lebesgue, robin, cantor, merge-atoms, incompatible"
                );
                ExitCode::from(2)
            }
        },
    }
}
