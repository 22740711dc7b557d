use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sidelink_core::calibrate::{calibrate_with_progress, CalibrationOptions};
use sidelink_core::channel::{MeasurementTable, TableId, SAMPLES_PER_ROW};
use sidelink_core::control::{self, ServerConfig, Session};
use sidelink_core::link::{LinkType, McsTable};
use sidelink_core::report::write_sweep_csv;
use sidelink_core::sim::{parse_positions, sweep_distance, World, WorldConfig};
use sidelink_core::Result;

#[derive(Parser)]
#[command(name = "sidelink", version, about = "LTE sidelink relay simulator")]
struct Cli {
    /// Overrides the seed of any scenario.
    #[arg(long, global = true, env = "SIDELINK_SIM_SEED")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Measured tables, sidelink transmitter at 40 dB.
    Replay40db,
    /// Measured tables, sidelink transmitter at 30 dB.
    Replay30db,
    /// Log-distance model fitted to the tables.
    Analytic,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario JSON file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario used when no config file is given.
    #[arg(long, value_enum, default_value = "replay40db")]
    preset: Preset,
}

impl ScenarioArgs {
    fn load(&self, seed: Option<u64>) -> Result<WorldConfig> {
        let mut c = match &self.config {
            Some(path) => WorldConfig::load(path)?,
            None => match self.preset {
                Preset::Replay40db => WorldConfig::replay(40.0),
                Preset::Replay30db => WorldConfig::replay(30.0),
                Preset::Analytic => WorldConfig::analytic(),
            },
        };
        if let Some(seed) = seed {
            c.seed = seed;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample both links over a range of remote positions and write CSV.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// start:end:step in cm.
        #[arg(long, default_value = "0:280:20")]
        positions: String,
        /// Output file; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the CI convention and bounds of the measurement tables.
    VerifyTables {
        /// A CSV table to check instead of the embedded ones.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Fit MCS thresholds to the bit-true chain.
    Calibrate {
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value = "mcs_table.json")]
        out: PathBuf,
        /// Starting table; Shannon-gap estimates if omitted.
        #[arg(long)]
        from: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        max_steps: usize,
    },
    /// Run a scenario for a number of subframes and print the counters.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 1000)]
        subframes: u64,
    },
    /// Replay a session journal and print its telemetry as NDJSON.
    Replay {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        journal: PathBuf,
        #[arg(long)]
        subframes: u64,
    },
    /// Run the simulation behind the control service.
    Serve {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = control::DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
        /// Command journal (NDJSON, appended).
        #[arg(long)]
        journal: Option<PathBuf>,
        /// Wall-clock microseconds per subframe.
        #[arg(long, default_value_t = 1000)]
        subframe_us: u64,
    },
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn check_table(name: &str, table: &MeasurementTable) -> bool {
    let bad = table.ci_violations(SAMPLES_PER_ROW);
    for row in &bad {
        println!(
            "  row {} cm: ci95 {:.4} vs 1.96*std/sqrt({SAMPLES_PER_ROW}) = {:.4}",
            row.distance_cm,
            row.ci95_db,
            1.96 * row.std_db / (SAMPLES_PER_ROW as f64).sqrt()
        );
    }
    let verdict = if bad.is_empty() { "PASS" } else { "FAIL" };
    println!("{verdict} {name}: {}/{} rows consistent", table.rows().len() - bad.len(), table.rows().len());
    bad.is_empty()
}

fn verify_tables(path: Option<&Path>) -> Result<bool> {
    match path {
        Some(p) => {
            // Link and gain do not affect the checks.
            let table = MeasurementTable::load_csv(p, LinkType::Downlink, 0.0)?;
            Ok(check_table(&p.display().to_string(), &table))
        }
        None => {
            let mut ok = true;
            for id in TableId::ALL {
                let t = MeasurementTable::embedded(id);
                ok &= check_table(&format!("table {} ({} {} dB)", id.number(), id.link(), id.tx_gain_db()), &t);
            }
            Ok(ok)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Sweep { scenario, positions, out } => {
            let config = scenario.load(cli.seed)?;
            let rows = sweep_distance(&config, &parse_positions(&positions)?)?;
            let mut w = open_out(out.as_deref())?;
            write_sweep_csv(&rows, &mut w)?;
            w.flush()?;
            Ok(true)
        }
        Command::VerifyTables { table } => verify_tables(table.as_deref()),
        Command::Calibrate { trials, out, from, max_steps } => {
            let initial = match from {
                Some(p) => McsTable::load(p)?,
                None => McsTable::uncalibrated(),
            };
            let opts = CalibrationOptions { trials, seed: cli.seed.unwrap_or(1), max_steps, ..Default::default() };
            let report = calibrate_with_progress(&initial, &opts, |r| {
                eprintln!(
                    "mcs {:2} {:8}: {:7.2} dB after {:2} steps{}",
                    r.mcs,
                    r.link.to_string(),
                    r.threshold_db,
                    r.steps,
                    if r.converged { "" } else { " (not converged)" }
                );
            })?;
            std::fs::write(&out, report.table.to_json() + "\n")?;
            if !report.flagged.is_empty() {
                eprintln!("not converged: {:?}", report.flagged);
            }
            if !report.adjusted.is_empty() {
                eprintln!("raised to keep thresholds increasing: {:?}", report.adjusted);
            }
            println!("wrote {}", out.display());
            Ok(report.flagged.is_empty())
        }
        Command::Run { scenario, subframes } => {
            let mut world = World::new(scenario.load(cli.seed)?)?;
            for _ in 0..subframes {
                world.step()?;
            }
            println!("{}", serde_json::to_string_pretty(world.counters())?);
            Ok(true)
        }
        Command::Replay { scenario, journal, subframes } => {
            let records = control::replay(scenario.load(cli.seed)?, &control::load_journal(journal)?, subframes)?;
            let mut w = open_out(None)?;
            for r in records {
                writeln!(w, "{}", serde_json::to_string(&r)?)?;
            }
            w.flush()?;
            Ok(true)
        }
        Command::Serve { scenario, port, bind, journal, subframe_us } => {
            let session = Session::new(scenario.load(cli.seed)?)?;
            let config = ServerConfig {
                addr: SocketAddr::new(bind, port),
                subframe_period: Duration::from_micros(subframe_us.max(1)),
                journal,
                ..ServerConfig::default()
            };
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let handle = control::serve(session, config).await?;
                println!("listening on {}", handle.local_addr);
                io::stdout().flush()?;
                tokio::select! {
                    _ = tokio::signal::ctrl_c() => handle.shutdown().await,
                    _ = std::future::pending::<()>() => {}
                }
                Ok(true)
            })
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
