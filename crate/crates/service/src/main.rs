use std::error::Error;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use arcast::cashflow::{forecast, ForecastRequest};
use arcast::classifier::{predict_invoices, train_for_business, ClassifierConfig};
use arcast::eval::{self, EvalConfig, Scenario};
use arcast::ingest;
use arcast::synthgen::{self, GeneratorConfig, SyntheticDataset};
use arcast::types::Invoice;
use arcast_service::{ModelRecord, ServiceConfig};
use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

type CliResult = Result<(), Box<dyn Error>>;

#[derive(Parser)]
#[command(name = "arcast-cli", version, about = "Invoice delay prediction and cash-flow forecasting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service (configured through CF_* variables).
    Serve {
        #[arg(long)]
        bind: Option<SocketAddr>,
        #[arg(long)]
        model_dir: Option<PathBuf>,
    },
    /// Write a synthetic dataset directory.
    Generate {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        users: usize,
        #[arg(long, default_value_t = 365)]
        days: u32,
        /// No wage drift and no trending customers.
        #[arg(long)]
        stationary: bool,
        /// Full generator config as JSON; overrides the other options except --seed.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a delay model from an invoice CSV.
    Train {
        #[arg(long)]
        invoices: PathBuf,
        #[arg(long)]
        business_id: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "CF_GRACE_DAYS", default_value_t = arcast::types::DEFAULT_GRACE_DAYS)]
        grace_days: u32,
    },
    /// Predict delays for unpaid invoices with a trained model.
    PredictAr {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        invoices: PathBuf,
        #[arg(long, env = "CF_GRACE_DAYS", default_value_t = arcast::types::DEFAULT_GRACE_DAYS)]
        grace_days: u32,
    },
    /// Forecast cash flow from a JSON request.
    Forecast {
        #[arg(long)]
        request: PathBuf,
        /// Model record used when the request sets integrate_ar.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-validate and backtest a generated dataset.
    Evaluate {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "9/3,6/6,1/11")]
        scenario: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_invoices(path: &Path) -> Result<Vec<Invoice>, Box<dyn Error>> {
    let report = ingest::ingest_csv(fs::File::open(path)?)?;
    if let Some(e) = report.errors.first() {
        return Err(format!("{}: row {}: {} ({} rows rejected)", path.display(), e.row, e.message, report.errors.len()).into());
    }
    Ok(report.invoices)
}

fn read_record(path: &Path) -> Result<ModelRecord, Box<dyn Error>> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

fn write_json(path: Option<&Path>, value: &impl serde::Serialize) -> CliResult {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => fs::write(p, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn serve(bind: Option<SocketAddr>, model_dir: Option<PathBuf>) -> CliResult {
    let mut config = ServiceConfig::from_env()?;
    if let Some(b) = bind {
        config.bind = b;
    }
    if let Some(d) = model_dir {
        config.model_dir = d;
    }
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_new(&config.log_level).unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(config.bind).await?;
        tracing::info!(addr = %listener.local_addr()?, dir = %config.model_dir.display(), "listening");
        arcast_service::serve(listener, &config).await
    })?;
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Serve { bind, model_dir } => serve(bind, model_dir),
        Command::Generate {
            seed,
            users,
            days,
            stationary,
            config,
            out,
        } => {
            let mut cfg = match config {
                Some(p) => serde_json::from_slice(&fs::read(p)?)?,
                None => {
                    let base = if stationary {
                        GeneratorConfig::stationary()
                    } else {
                        GeneratorConfig::default()
                    };
                    GeneratorConfig {
                        n_users: users,
                        span_days: days,
                        ..base
                    }
                }
            };
            cfg.seed = seed;
            let ds = synthgen::generate(&cfg)?;
            ds.write_to(&out)?;
            write_json(None, &ds.manifest)
        }
        Command::Train {
            invoices,
            business_id,
            out,
            seed,
            grace_days,
        } => {
            let invoices = read_invoices(&invoices)?;
            let config = ClassifierConfig {
                grace_days,
                seed,
                ..Default::default()
            };
            let model = train_for_business(&invoices, &business_id, &config)?;
            let record = ModelRecord::new(&business_id, model, invoices);
            write_json(Some(&out), &record)?;
            write_json(None, &serde_json::json!({
                "model_id": record.model_id,
                "metadata": record.model.metadata,
            }))
        }
        Command::PredictAr {
            model,
            invoices,
            grace_days,
        } => {
            let record = read_record(&model)?;
            let targets = read_invoices(&invoices)?;
            let predictions = predict_invoices(&record.model, &record.history, &targets, grace_days);
            write_json(None, &serde_json::json!({
                "model_id": record.model_id,
                "predictions": predictions,
            }))
        }
        Command::Forecast { request, model, out } => {
            let req: ForecastRequest = serde_json::from_slice(&fs::read(request)?)?;
            let record = model.as_deref().map(read_record).transpose()?;
            let result = forecast(&req, record.as_ref().map(|r| &r.model))?;
            for w in &result.warnings {
                eprintln!("warning: {w}");
            }
            write_json(out.as_deref(), &result)
        }
        Command::Evaluate {
            dataset,
            scenario,
            seed,
            out,
        } => {
            let ds = SyntheticDataset::read_from(&dataset)?;
            let config = EvalConfig {
                seed,
                scenarios: Scenario::parse_list(&scenario)?,
                ..Default::default()
            };
            let report = eval::evaluate(&ds, &config)?;
            let cv = &report.cross_validation;
            match (&cv.full, &cv.base, cv.ablation_delta) {
                (Some(full), Some(base), Some(delta)) => eprintln!(
                    "cross-validation: balanced accuracy {:.3} (without moving averages {:.3}, delta {:+.3})",
                    full.mean, base.mean, delta
                ),
                _ => eprintln!("cross-validation: {}", cv.detail.as_deref().unwrap_or("insufficient")),
            }
            for s in &report.scenarios {
                eprintln!(
                    "{}: median MAPE ours {:.2}% naive {:.2}%",
                    s.scenario, s.our_method.median_mape, s.naive_mean.median_mape
                );
            }
            write_json(Some(&out), &report)
        }
    }
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
