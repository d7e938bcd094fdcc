use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use metricdp::embedding::pipeline::embed_database;
use metricdp::engine::NoiseKind;
use metricdp::harness::experiment::build_embedding;
use metricdp::harness::{
    compare, load_metric, load_points, read_file, read_values, run_experiment, write_file,
    Experiment, ExperimentConfig, HarnessError, Mechanism, Record, Report, Result,
};
use metricdp::io::format_points;
use metricdp::metric::{Database, MetricSpec, QuerySet};
use metricdp::release::OfflineRelease;

#[derive(Parser)]
#[command(
    name = "metricdp",
    version,
    about = "Private release of distance queries"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Shared {
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// JSON config with epsilon, delta, beta, k_max and friends.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also compute exact answers (reads the raw database; evaluation only).
    #[arg(long)]
    with_oracle: bool,
    /// Overrides the config's noise kind.
    #[arg(long, value_enum)]
    noise: Option<NoiseArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseArg {
    Off,
    Laplace,
    Gaussian,
}

impl From<NoiseArg> for NoiseKind {
    fn from(n: NoiseArg) -> Self {
        match n {
            NoiseArg::Off => NoiseKind::Off,
            NoiseArg::Laplace => NoiseKind::Laplace,
            NoiseArg::Gaussian => NoiseKind::Gaussian,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EmbedKind {
    Projection,
    Bourgain,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricKindArg {
    L1,
    L2,
}

#[derive(Args, Clone)]
struct MetricArgs {
    /// Distance-matrix file; points are then labels.
    #[arg(long)]
    metric: Option<PathBuf>,
    /// Metric for coordinate points when no matrix is given.
    #[arg(long, value_enum)]
    metric_kind: Option<MetricKindArg>,
    /// Skip the cubic-time triangle-inequality check on the matrix.
    #[arg(long)]
    no_triangle_check: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Answer a query stream with the interactive l1 mechanism.
    ReleaseL1 {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[command(flatten)]
        shared: Shared,
    },
    /// Publish an offline synopsis answering every l1 query.
    ReleaseOffline {
        #[arg(long)]
        db: PathBuf,
        #[command(flatten)]
        shared: Shared,
    },
    /// Answer queries from a published synopsis.
    Answer {
        #[arg(long)]
        synopsis: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        /// Database for --with-oracle evaluation.
        #[arg(long)]
        db: Option<PathBuf>,
        #[command(flatten)]
        shared: Shared,
    },
    /// Write the embedded proxy database and a JSON sidecar.
    Embed {
        #[arg(long, value_enum)]
        kind: EmbedKind,
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[command(flatten)]
        metric: MetricArgs,
        #[command(flatten)]
        shared: Shared,
    },
    /// Embed into l1 and release the queries on the proxy database.
    ReleaseMetric {
        #[arg(long, value_enum)]
        kind: EmbedKind,
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[command(flatten)]
        metric: MetricArgs,
        #[command(flatten)]
        shared: Shared,
    },
    /// Exact answers (no privacy).
    Oracle {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[command(flatten)]
        metric: MetricArgs,
        #[command(flatten)]
        shared: Shared,
    },
    /// Error statistics between two answer files; exit 4 above --bound.
    Compare {
        #[arg(long)]
        answers: PathBuf,
        #[arg(long)]
        oracle: PathBuf,
        #[arg(long)]
        bound: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(shared: &Shared, required: bool) -> Result<ExperimentConfig> {
    let base = match &shared.config {
        Some(path) => ExperimentConfig::from_json(&read_file(path)?)?,
        None if required => return Err(HarnessError::Config("--config is required".into())),
        None => ExperimentConfig::from_json(r#"{"epsilon": 1.0, "k_max": 1}"#)?,
    };
    Ok(base.with_overrides(shared.seed, shared.noise.map(Into::into)))
}

fn resolve_metric(args: &MetricArgs, db: &Database, default: MetricKindArg) -> Result<MetricSpec> {
    if let Some(path) = &args.metric {
        return load_metric(path, !args.no_triangle_check);
    }
    let dimension = db.dimension().ok_or_else(|| {
        HarnessError::Config("labelled points need a --metric matrix file".into())
    })?;
    Ok(match args.metric_kind.unwrap_or(default) {
        MetricKindArg::L1 => MetricSpec::l1(dimension),
        MetricKindArg::L2 => MetricSpec::l2(dimension),
    })
}

fn load_inputs(db: &Path, queries: &Path) -> Result<(Database, QuerySet)> {
    let db = Database::new(load_points(db)?)?;
    let queries = QuerySet::new(load_points(queries)?)?;
    Ok((db, queries))
}

fn emit(out: Option<&Path>, contents: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn embed_mechanism(kind: EmbedKind) -> Mechanism {
    match kind {
        EmbedKind::Projection => Mechanism::ProjectionPipeline,
        EmbedKind::Bourgain => Mechanism::BourgainPipeline,
    }
}

fn default_metric(kind: EmbedKind) -> MetricKindArg {
    match kind {
        EmbedKind::Projection => MetricKindArg::L2,
        EmbedKind::Bourgain => MetricKindArg::L1,
    }
}

/// Runs an experiment; records go to `--out` (JSON lines), the report to
/// stdout. Nothing is written unless the whole run succeeds.
fn experiment_command(exp: Experiment, out: Option<&Path>) -> Result<()> {
    let outcome = run_experiment(&exp)?;
    if let Some(path) = out {
        write_file(path, &outcome.report.records_jsonl())?;
    }
    println!("{}", outcome.report.to_json());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::ReleaseL1 {
            db,
            queries,
            shared,
        } => {
            let config = load_config(&shared, true)?;
            let (db, queries) = load_inputs(&db, &queries)?;
            let metric = resolve_metric(
                &MetricArgs {
                    metric: None,
                    metric_kind: None,
                    no_triangle_check: false,
                },
                &db,
                MetricKindArg::L1,
            )?;
            let exp = Experiment {
                mechanism: Mechanism::L1Interactive,
                db,
                queries,
                metric,
                config,
                with_oracle: shared.with_oracle,
            };
            experiment_command(exp, shared.out.as_deref())
        }
        Command::ReleaseOffline { db, shared } => {
            let config = load_config(&shared, true)?;
            let db = Database::new(load_points(&db)?)?;
            let release = metricdp::release::release_offline(&db, &config.settings()?)?;
            emit(shared.out.as_deref(), &(release.to_json() + "\n"))?;
            if shared.out.is_some() {
                let summary = json!({
                    "alpha": release.alpha,
                    "probes": release.provenance.probes,
                    "mistakes": release.provenance.mistakes,
                    "eps_spent": release.provenance.epsilon_spent,
                    "config_hash": config.hash(),
                    "seed": config.seed,
                    "version": env!("CARGO_PKG_VERSION"),
                });
                println!("{}", serde_json::to_string_pretty(&summary).expect("json"));
            }
            Ok(())
        }
        Command::Answer {
            synopsis,
            queries,
            db,
            shared,
        } => {
            let release = OfflineRelease::from_json(&read_file(&synopsis)?)?;
            let queries = QuerySet::new(load_points(&queries)?)?;
            let database = match (&db, shared.with_oracle) {
                (Some(path), true) => Some(Database::new(load_points(path)?)?),
                (None, true) => {
                    return Err(HarnessError::Config("--with-oracle needs --db".into()))
                }
                _ => None,
            };
            let metric = MetricSpec::l1(release.dimension());
            let mut records = Vec::with_capacity(queries.len());
            for (i, y) in queries.queries().iter().enumerate() {
                let coords = y.as_coords().ok_or_else(|| {
                    HarnessError::Config("synopsis queries must be coordinates".into())
                })?;
                let oracle = match &database {
                    Some(d) => Some(metricdp::metric::avg_distance_raw(d, y, &metric)?),
                    None => None,
                };
                records.push(Record::new(i, release.answer(coords)?).with_oracle(oracle));
            }
            let config_hash = hex_of(&read_file(&synopsis)?);
            let report = Report::new(
                records,
                0.0,
                release.alpha,
                None,
                metricdp::harness::report::Provenance {
                    mechanism: "l1_offline_answer".into(),
                    config_hash,
                    seed: release.provenance.seed,
                    version: env!("CARGO_PKG_VERSION").into(),
                    with_oracle: shared.with_oracle,
                },
            );
            if let Some(path) = &shared.out {
                write_file(path, &report.records_jsonl())?;
            }
            println!("{}", report.to_json());
            Ok(())
        }
        Command::Embed {
            kind,
            db,
            queries,
            metric,
            shared,
        } => {
            let config = load_config(&shared, false)?;
            let (db, queries) = load_inputs(&db, &queries)?;
            let spec = resolve_metric(&metric, &db, default_metric(kind))?;
            let (map, _) =
                build_embedding(embed_mechanism(kind), &queries, db.len(), &spec, &config)?;
            let proxy = embed_database(&map, &db)?;
            let out = shared
                .out
                .ok_or_else(|| HarnessError::Config("--out is required for embed".into()))?;
            let mut sidecar = map.provenance(config.seed);
            sidecar["config_hash"] = json!(config.hash());
            sidecar["version"] = json!(env!("CARGO_PKG_VERSION"));
            let sidecar_path = PathBuf::from(format!("{}.json", out.display()));
            let text = format_points(proxy.points());
            write_file(&out, &text)?;
            write_file(
                &sidecar_path,
                &(serde_json::to_string_pretty(&sidecar).expect("json") + "\n"),
            )?;
            Ok(())
        }
        Command::ReleaseMetric {
            kind,
            db,
            queries,
            metric,
            shared,
        } => {
            let config = load_config(&shared, true)?;
            let (db, queries) = load_inputs(&db, &queries)?;
            let spec = resolve_metric(&metric, &db, default_metric(kind))?;
            let exp = Experiment {
                mechanism: embed_mechanism(kind),
                db,
                queries,
                metric: spec,
                config,
                with_oracle: shared.with_oracle,
            };
            experiment_command(exp, shared.out.as_deref())
        }
        Command::Oracle {
            db,
            queries,
            metric,
            shared,
        } => {
            let config = load_config(&shared, false)?;
            let (db, queries) = load_inputs(&db, &queries)?;
            let spec = resolve_metric(&metric, &db, MetricKindArg::L1)?;
            let exp = Experiment {
                mechanism: Mechanism::Oracle,
                db,
                queries,
                metric: spec,
                config,
                with_oracle: false,
            };
            let outcome = run_experiment(&exp)?;
            emit(shared.out.as_deref(), &outcome.report.records_jsonl())
        }
        Command::Compare {
            answers,
            oracle,
            bound,
            out,
        } => {
            let a = read_values(&read_file(&answers)?)?;
            let o = read_values(&read_file(&oracle)?)?;
            let stats = compare(&a, &o)?;
            let text = serde_json::to_string_pretty(&stats).expect("json") + "\n";
            emit(out.as_deref(), &text)?;
            match bound {
                Some(b) if stats.max > b => Err(HarnessError::Threshold {
                    max: stats.max,
                    bound: b,
                }),
                _ => Ok(()),
            }
        }
    }
}

fn hex_of(text: &str) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = HarnessError::Config(e.kind().to_string());
            eprintln!(
                "{}",
                json!({ "error": { "kind": "usage", "message": e.to_string(), "exit_code": err.exit_code() } })
            );
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
