//! `seditor` command line: train, evaluate and plot.

mod plot;

use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;
use seditor_core::harness::{
    evaluate, read_metrics, Checkpoint, HarnessError, MetricsWriter, Trainer, TrainerConfig,
    UtilityMetric,
};

use plot::{Metric, Series};

#[derive(Parser)]
#[command(name = "seditor", version, about = "Constrained RL with a safety editor policy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent and write metrics, checkpoint and summary to `--out`.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `total_steps`.
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Resume from this checkpoint manifest.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Run the deterministic policy of a checkpoint for full episodes.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 10)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for eval.csv; per-episode rows go to stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Overlay metrics CSVs as SVG charts.
    Plot {
        #[arg(long = "csv", required = true)]
        csvs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Config supplying the violation target; defaults to the
        /// config.cfg beside the first CSV.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Failure with its exit code: 1 at runtime, 2 for usage or config problems.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        let code = match e {
            HarnessError::Config(_) | HarnessError::Schema(_) => 2,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: 1,
            message: format!("io: {e}"),
        }
    }
}

fn read_config(path: &Path) -> Result<TrainerConfig, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
    TrainerConfig::parse(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn save_checkpoint(t: &Trainer, out: &Path) -> Result<(), Failure> {
    t.checkpoint().save(&out.join("checkpoint.ckpt"))?;
    Ok(())
}

fn cmd_train(
    config: Option<PathBuf>,
    seed: Option<u64>,
    steps: Option<u64>,
    out: PathBuf,
    checkpoint: Option<PathBuf>,
) -> Result<(), Failure> {
    let mut trainer = match (&checkpoint, &config) {
        (Some(ck), _) => {
            if seed.is_some() {
                return Err(Failure::usage("--seed cannot change a resumed run"));
            }
            let ck = Checkpoint::load(ck)?;
            Trainer::from_checkpoint(&ck)?
        }
        (None, Some(path)) => {
            let mut cfg = read_config(path)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
            Trainer::new(cfg)?
        }
        (None, None) => return Err(Failure::usage("train needs --config or --checkpoint")),
    };
    if let Some(s) = steps {
        trainer.config.total_steps = s;
    }
    fs::create_dir_all(&out)?;
    fs::write(out.join("config.cfg"), trainer.config.to_text())?;

    let metrics_path = out.join("metrics.csv");
    let append = checkpoint.is_some() && fs::metadata(&metrics_path).map(|m| m.len() > 0).unwrap_or(false);
    let file = if append {
        OpenOptions::new().append(true).open(&metrics_path)?
    } else {
        File::create(&metrics_path)?
    };
    let mut writer = MetricsWriter::new(BufWriter::new(file), append);
    writer.write_header()?;
    writer.flush()?;

    info!(
        "training {} on {} for {} steps (seed {})",
        trainer.config.agent_kind.name(),
        trainer.config.env.name(),
        trainer.config.total_steps,
        trainer.config.seed
    );
    let every = trainer.config.checkpoint_interval;
    let result = trainer.run(|t, row| {
        writer.emit(row)?;
        info!(
            "steps {} violation {:.4} success {:.3} lambda {:.4}",
            row.env_steps, row.violation_rate, row.success_rate, row.lambda
        );
        if every > 0 && t.iteration % every == 0 {
            t.checkpoint().save(&out.join("checkpoint.ckpt"))?;
        }
        Ok(())
    });
    writer.flush()?;
    result?;
    save_checkpoint(&trainer, &out)?;
    let summary = trainer.summary();
    fs::write(out.join("summary.txt"), summary.to_text())?;
    print!("{}", summary.to_text());
    Ok(())
}

fn cmd_eval(checkpoint: PathBuf, episodes: usize, seed: u64, out: Option<PathBuf>) -> Result<(), Failure> {
    if episodes == 0 {
        return Err(Failure::usage("--episodes must be at least 1"));
    }
    let ck = Checkpoint::load(&checkpoint)?;
    let trainer = Trainer::from_checkpoint(&ck)?;
    let report = evaluate(&trainer.agent, &trainer.config.env, episodes, seed)?;
    match out {
        Some(dir) => {
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("eval.csv"), report.to_csv())?;
        }
        None => print!("{}", report.to_csv()),
    }
    println!("{}", report.summary_line());
    Ok(())
}

fn series_label(path: &Path) -> String {
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    match path.parent().and_then(|p| p.file_name()) {
        Some(dir) if name == "metrics.csv" => dir.to_string_lossy().into_owned(),
        _ => name,
    }
}

fn cmd_plot(csvs: Vec<PathBuf>, out: PathBuf, config: Option<PathBuf>) -> Result<(), Failure> {
    for p in &csvs {
        if !p.is_file() {
            return Err(Failure::usage(format!("no such CSV: {}", p.display())));
        }
    }
    let cfg_path = config.or_else(|| {
        let beside = csvs[0].with_file_name("config.cfg");
        beside.is_file().then_some(beside)
    });
    let cfg = cfg_path.as_deref().map(read_config).transpose()?;
    let target = cfg.as_ref().map(|c| c.c);

    let mut tables = Vec::with_capacity(csvs.len());
    for p in &csvs {
        let rows = read_metrics(BufReader::new(File::open(p)?)).map_err(|e| {
            let f = Failure::from(e);
            Failure {
                message: format!("{}: {}", p.display(), f.message),
                ..f
            }
        })?;
        tables.push((series_label(p), rows));
    }
    let series: Vec<Series<'_>> = tables
        .iter()
        .map(|(label, rows)| Series {
            label: label.clone(),
            rows,
        })
        .collect();
    fs::create_dir_all(&out)?;
    fs::write(out.join("return_violation.svg"), plot::render(Metric::Return, &series, target))?;
    fs::write(
        out.join("success_violation.svg"),
        plot::render(Metric::SuccessRate, &series, target),
    )?;
    if let Some(c) = &cfg {
        let primary = match c.utility_metric {
            UtilityMetric::Return => "return_violation.svg",
            UtilityMetric::Success => "success_violation.svg",
        };
        info!("utility metric is `{}`; see {primary}", c.utility_metric.name());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SEDITOR_LOG", "error")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train {
            config,
            seed,
            steps,
            out,
            checkpoint,
        } => cmd_train(config, seed, steps, out, checkpoint),
        Command::Eval {
            checkpoint,
            episodes,
            seed,
            out,
        } => cmd_eval(checkpoint, episodes, seed, out),
        Command::Plot { csvs, out, config } => cmd_plot(csvs, out, config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
