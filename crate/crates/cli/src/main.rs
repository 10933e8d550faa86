use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use uplink_aoi_cli::config::{self, CONFIG_DIR_ENV};
use uplink_aoi_cli::error::CliError;
use uplink_aoi_cli::grid::{parse_list, parse_range};
use uplink_aoi_cli::output::{self, SWEEP_HEADER};
use uplink_aoi_cli::simulate::{self, SimOptions};
use uplink_aoi_cli::{sweep, tradeoff, validate};

/// Uplink age of information and rate of a wirelessly powered two-way link.
///
/// Exit codes: 0 success, 1 internal error, 2 configuration error,
/// 3 validation threshold exceeded.
#[derive(Debug, Parser)]
#[command(name = "uplink-aoi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form AoI and uplink rate over a downlink-rate grid.
    Analytic {
        #[command(flatten)]
        common: Common,
        /// Downlink rates as start:stop:step (inclusive).
        #[arg(long, default_value = "0:0.45:0.01")]
        p_grid: String,
    },
    /// Run the simulator and print flat key=value statistics.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
        /// Downlink rates, comma separated.
        #[arg(long, default_value = "0.1")]
        p_list: String,
        /// Write the per-block and per-event trace of replication 0 here
        /// (single p only).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Compare simulation with the closed forms and arbitrate between the
    /// two expanded AoI forms.
    Validate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value = "0.01,0.1,0.2,0.3")]
        p_list: String,
    },
    /// Weighted-sum optima and the achievable (p, q) boundary.
    Tradeoff {
        #[command(flatten)]
        common: Common,
        /// Weights as start:stop:step (inclusive).
        #[arg(long, default_value = "0:1:0.1")]
        w_grid: String,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Parameter file, or a preset name (ell10, ell30, ell90) looked up in
    /// the config directory first.
    #[arg(long)]
    config: Option<String>,
    /// Directory searched for named configs.
    #[arg(long, env = CONFIG_DIR_ENV)]
    config_dir: Option<PathBuf>,
    /// Emit JSON instead of CSV / text.
    #[arg(long)]
    json: bool,
    /// Output file (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimArgs {
    /// Blocks per replication.
    #[arg(long, default_value_t = 5_000_000)]
    blocks: u64,
    /// Leading blocks excluded from averages.
    #[arg(long, default_value_t = 100_000)]
    warmup: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Independent replications.
    #[arg(long, default_value_t = 3)]
    reps: u32,
    /// Let the slave transmit in downlink-busy blocks when it has the energy.
    #[arg(long)]
    uplink_in_busy: bool,
}

impl SimArgs {
    fn options(&self) -> SimOptions {
        SimOptions {
            n_blocks: self.blocks,
            warmup_blocks: self.warmup,
            seed: self.seed,
            replications: self.reps,
            uplink_in_busy_blocks: self.uplink_in_busy,
        }
    }
}

impl Common {
    fn params(&self) -> Result<uplink_aoi::SystemParams, CliError> {
        config::load(self.config.as_deref(), self.config_dir.as_deref())
    }

    fn sink(&self) -> Result<Box<dyn Write>, CliError> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| {
                CliError::Config(format!("{}: {e}", path.display()))
            })?)),
            None => Box::new(io::stdout().lock()),
        })
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analytic { common, p_grid } => {
            let params = common.params()?;
            let rows = sweep::analytic_rows(&params, &parse_range(&p_grid)?)?;
            let mut out = common.sink()?;
            if common.json {
                output::write_json(&rows, &mut out)?;
            } else {
                out.write_all(output::csv_string(&rows, SWEEP_HEADER)?.as_bytes())?;
            }
            out.flush()?;
        }
        Command::Simulate { common, sim, p_list, trace } => {
            let params = common.params()?;
            let ps = parse_list(&p_list)?;
            let opts = sim.options();
            let stats = match trace {
                Some(path) => {
                    let [p] = ps[..] else {
                        return Err(CliError::Config("--trace needs exactly one p".into()));
                    };
                    let (stats, tr) = simulate::simulate_traced(&params, p, &opts)?;
                    let file = File::create(&path)
                        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                    let mut w = BufWriter::new(file);
                    tr.write_to(&mut w)?;
                    w.flush()?;
                    vec![stats]
                }
                None => simulate::simulate_points(&params, &ps, &opts)?,
            };
            let mut out = common.sink()?;
            if common.json {
                output::write_json(&stats, &mut out)?;
            } else {
                out.write_all(simulate::stats_document(&stats).as_bytes())?;
            }
            out.flush()?;
        }
        Command::Validate { common, sim, p_list } => {
            let params = common.params()?;
            let report = validate::validate(&params, &parse_list(&p_list)?, &sim.options())?;
            let mut out = common.sink()?;
            if common.json {
                output::write_json(&report, &mut out)?;
            } else {
                out.write_all(output::validation_text(&report)?.as_bytes())?;
            }
            out.flush()?;
            validate::check_thresholds(&report)?;
        }
        Command::Tradeoff { common, w_grid } => {
            let params = common.params()?;
            let rows = tradeoff::tradeoff(&params, &parse_range(&w_grid)?)?;
            let mut out = common.sink()?;
            if common.json {
                output::write_json(&rows, &mut out)?;
            } else {
                out.write_all(output::csv_string(&rows, "kind,w,p,q,objective")?.as_bytes())?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("uplink-aoi: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
