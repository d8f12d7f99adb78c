use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use gloran::config::{StoreConfig, Strategy};
use gloran::engine::Store;
use gloran::trace::{read_trace, write_trace};
use gloran_bench::cost_model::{CostModel, CostOp, CostParams};
use gloran_bench::report::{self, Report};
use gloran_bench::runner::run_trace;
use gloran_bench::workload::{generate, WorkloadSpec};

/// Range-delete benchmark harness.
#[derive(Parser)]
#[command(name = "bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a trace from a workload spec.
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay a trace on a fresh store and write a report.
    Run {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        strategy: Strategy,
        /// Store configuration; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Check every read against an in-memory oracle.
        #[arg(long)]
        verify: bool,
        /// Parent of the store directory; overrides GLORAN_DATA_DIR.
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
    /// Evaluate the cost model for a parameter file.
    Model {
        #[arg(long)]
        params: PathBuf,
    },
    /// Tabulate several reports side by side.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        reports: Vec<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn store_dir(explicit: Option<PathBuf>, strategy: Strategy) -> Result<PathBuf> {
    let root = explicit
        .or_else(|| std::env::var_os("GLORAN_DATA_DIR").map(PathBuf::from))
        .unwrap_or_else(|| std::env::temp_dir().join("gloran-data"));
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH)?.as_nanos();
    let dir = root.join(format!(
        "{}-{}-{stamp}",
        strategy.name().to_ascii_lowercase(),
        std::process::id()
    ));
    if dir.exists() {
        bail!("store directory {} already exists", dir.display());
    }
    Ok(dir)
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate { spec, out } => {
            let spec = WorkloadSpec::parse(&read(&spec)?)
                .with_context(|| format!("parsing {}", spec.display()))?;
            let ops = generate(&spec)?;
            let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            write_trace(&ops, BufWriter::new(file))?;
            println!("wrote {} operations to {}", ops.len(), out.display());
        }
        Command::Run {
            trace,
            strategy,
            config,
            out,
            verify,
            data_dir,
        } => {
            let cfg = match &config {
                Some(path) => StoreConfig::parse(&read(path)?)
                    .with_context(|| format!("parsing {}", path.display()))?,
                None => StoreConfig::default(),
            }
            .with_strategy(strategy);
            let file =
                File::open(&trace).with_context(|| format!("opening {}", trace.display()))?;
            let ops = read_trace(BufReader::new(file))
                .with_context(|| format!("parsing {}", trace.display()))?;
            let dir = store_dir(data_dir, strategy)?;
            let mut store = Store::create(&dir, cfg.clone())?;
            let metrics = run_trace(&mut store, &ops, verify)?;
            store.close()?;
            let rep = report::build(&metrics, &cfg, &trace.display().to_string());
            fs::write(&out, rep.to_text()).with_context(|| format!("writing {}", out.display()))?;
            print!("{}", report::run_table(&metrics));
            println!("store kept at {}", dir.display());
            if let Some(m) = metrics.mismatches.filter(|m| *m > 0) {
                bail!("{m} reads disagreed with the oracle");
            }
        }
        Command::Model { params } => {
            let p = CostParams::parse(&read(&params)?).map_err(anyhow::Error::msg)?;
            let model = CostModel::new(p);
            let mut header = vec!["strategy"];
            header.extend(CostOp::ALL.iter().map(|op| op.name()));
            let rows: Vec<Vec<String>> = Strategy::ALL
                .iter()
                .map(|&s| {
                    let mut row = vec![s.name().to_string()];
                    row.extend(
                        CostOp::ALL
                            .iter()
                            .map(|&op| format!("{:.4}", model.cost(s, op).total())),
                    );
                    row
                })
                .collect();
            print!("{}", report::table(&header, &rows));
            println!(
                "L = {:.3}  Q = {:.1}  L' = {}  index check = {:.3}",
                model.levels(),
                model.records(),
                model.index_levels(),
                model.index_check()
            );
        }
        Command::Compare { reports } => {
            let mut loaded = Vec::new();
            for path in &reports {
                let r = Report::parse(&read(path)?)
                    .with_context(|| format!("parsing {}", path.display()))?;
                let name = path.file_stem().map_or_else(
                    || path.display().to_string(),
                    |s| s.to_string_lossy().into(),
                );
                loaded.push((name, r));
            }
            print!("{}", report::compare(&loaded));
        }
    }
    Ok(())
}
