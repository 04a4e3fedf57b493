use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use abmcal::abm::{simulate, validate_params, SimConfig};
use abmcal::engine::{reference_series, CalibrationConfig, Calibrator, RunManifest};
use abmcal::harness::{run_experiment_suite, sanity_check, ExperimentSpec, Profile, DEFAULT_SUCCESS_LEVELS};
use abmcal::params::ParameterVector;
use abmcal::sampling::SamplerKind;
use abmcal::series::EpidemicSeries;
use abmcal::sobol::SobolGenerator;
use abmcal::surrogate::SurrogateKind;
use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "abmcal", version, about = "Calibrate an agent-based epidemic model")]
struct Cli {
    /// Master seed; overrides the seed in config files.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output files. Created if missing.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Base configuration that config files are layered on.
    #[arg(long, global = true, value_enum, default_value_t = ProfileArg::Desk)]
    profile: ProfileArg,
    /// Worker threads for batch evaluation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Desk,
    Paper,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Desk => Profile::Desk,
            ProfileArg::Paper => Profile::Paper,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplerArg {
    Random,
    Sobol,
}

#[derive(Clone, Copy, ValueEnum)]
enum SurrogateArg {
    None,
    Dt,
    Xgboost,
    Svm,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one parameter vector and write the infected series as CSV.
    Simulate {
        /// Seven comma-separated values; the reference values when omitted.
        #[arg(long, value_delimiter = ',')]
        params: Option<Vec<f64>>,
        #[arg(long)]
        population: Option<u32>,
        #[arg(long)]
        horizon: Option<u32>,
    },
    /// Calibrate against a reference series.
    Calibrate {
        /// JSON file with CalibrationConfig fields, layered on the profile.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Reference series CSV; simulated from --truth when omitted.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// True vector used to simulate the reference.
        #[arg(long, value_delimiter = ',')]
        truth: Option<Vec<f64>>,
    },
    /// Recover a known vector from its own simulated series.
    SanityCheck {
        #[arg(long, value_delimiter = ',')]
        truth: Option<Vec<f64>>,
        /// Number of leading parameters to calibrate.
        #[arg(long, default_value_t = 1)]
        n_params: usize,
        #[arg(long, value_enum, default_value_t = SamplerArg::Random)]
        sampler: SamplerArg,
        #[arg(long, value_enum, default_value_t = SurrogateArg::None)]
        surrogate: SurrogateArg,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run an experiment suite and write table2.csv and table3.csv.
    Suite {
        /// JSON file with ExperimentSpec fields.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print or write points of the Sobol sequence.
    SobolDump {
        #[arg(long)]
        dimension: usize,
        #[arg(long)]
        count: usize,
    },
}

enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<abmcal::Error> for Failure {
    fn from(e: abmcal::Error) -> Self {
        match e {
            abmcal::Error::ConfigInvalid(_)
            | abmcal::Error::WrongArity { .. }
            | abmcal::Error::OutOfRange(_)
            | abmcal::Error::InvalidSimConfig(_) => Failure::Config(e.into()),
            e => Failure::Runtime(e.into()),
        }
    }
}

fn config_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Config(e.into())
}

fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// Profile defaults overlaid with the config file, then the seed flag.
fn load_config(cli: &Cli, path: Option<&Path>) -> Result<CalibrationConfig, Failure> {
    let mut value = serde_json::to_value(Profile::from(cli.profile).config()).expect("config serializes");
    if let Some(path) = path {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(config_err)?;
        let overlay: Value = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", path.display()))
            .map_err(config_err)?;
        if !overlay.is_object() {
            return Err(config_err(anyhow!("{} must hold a JSON object", path.display())));
        }
        merge(&mut value, overlay);
    }
    let mut cfg: CalibrationConfig = serde_json::from_value(value).map_err(config_err)?;
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cli: &Cli) -> Result<Option<&Path>, Failure> {
    if let Some(dir) = &cli.out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(cli.out_dir.as_deref())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    let path = dir.join(name);
    Ok(BufWriter::new(
        File::create(&path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn truth_vector(raw: &Option<Vec<f64>>) -> Result<ParameterVector, Failure> {
    let v = raw.clone().map_or_else(ParameterVector::reference, ParameterVector);
    validate_params(&v)?;
    Ok(v)
}

fn print_json(v: &impl serde::Serialize) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v).context("writing stdout")?;
    writeln!(out).context("writing stdout")?;
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| config_err(anyhow!("--threads: {e}")))?;
    }
    match &cli.command {
        Command::Simulate {
            params,
            population,
            horizon,
        } => {
            let v = truth_vector(params)?;
            let profile = Profile::from(cli.profile).config();
            let sim = SimConfig {
                population_size: population.unwrap_or(profile.sim.population_size),
                horizon_steps: horizon.unwrap_or(profile.sim.horizon_steps),
                ..profile.sim
            };
            sim.validate()?;
            let series = simulate(&validate_params(&v)?, &sim, cli.seed.unwrap_or(0))?;
            match out_dir(cli)? {
                Some(dir) => series.write_csv(create(dir, "series.csv")?)?,
                None => series.write_csv(io::stdout().lock())?,
            }
        }
        Command::Calibrate {
            config,
            reference,
            truth,
        } => {
            let cfg = load_config(cli, config.as_deref())?;
            let reference = match reference {
                Some(path) => EpidemicSeries::read_csv(
                    File::open(path)
                        .with_context(|| format!("opening {}", path.display()))
                        .map_err(config_err)?,
                )
                .map_err(config_err)?,
                None => reference_series(&truth_vector(truth)?, &cfg)?,
            };
            let run = Calibrator::new(cfg.clone(), reference)?.run()?;
            match out_dir(cli)? {
                Some(dir) => {
                    let mut w = create(dir, "result.json")?;
                    w.write_all(run.result.to_json().as_bytes()).context("writing result")?;
                    w.flush().context("writing result")?;
                    run.db.write_jsonl(create(dir, "db.jsonl")?)?;
                    run.result.write_trace_csv(create(dir, "trace.csv")?)?;
                    let mut w = create(dir, "manifest.json")?;
                    serde_json::to_writer_pretty(&mut w, &RunManifest::new(cfg)).context("writing manifest")?;
                    w.flush().context("writing manifest")?;
                    if let Some(model) = &run.surrogate {
                        let mut w = create(dir, "surrogate.json")?;
                        w.write_all(model.to_json().as_bytes()).context("writing surrogate")?;
                        w.flush().context("writing surrogate")?;
                    }
                }
                None => print_json(&run.result)?,
            }
        }
        Command::SanityCheck {
            truth,
            n_params,
            sampler,
            surrogate,
            config,
        } => {
            let theta = truth_vector(truth)?;
            let surrogate_kind = match surrogate {
                SurrogateArg::None => SurrogateKind::None,
                SurrogateArg::Dt => SurrogateKind::DecisionTree,
                SurrogateArg::Xgboost => SurrogateKind::GradientBoosted,
                SurrogateArg::Svm => SurrogateKind::LinearSvm,
            };
            let sampler_kind = match (sampler, surrogate_kind) {
                (SamplerArg::Random, SurrogateKind::None) => SamplerKind::Random,
                (SamplerArg::Sobol, SurrogateKind::None) => SamplerKind::Sobol,
                (SamplerArg::Random, _) => SamplerKind::SurrogateRandom,
                (SamplerArg::Sobol, _) => SamplerKind::SurrogateSobol,
            };
            let mut cfg = load_config(cli, config.as_deref())?.with_method(sampler_kind, surrogate_kind);
            cfg.params_to_calibrate = (1..=*n_params).collect();
            cfg.validate()?;
            let (report, result) = sanity_check(&theta, &cfg, &DEFAULT_SUCCESS_LEVELS)?;
            if let Some(dir) = out_dir(cli)? {
                let mut w = create(dir, "sanity.json")?;
                serde_json::to_writer_pretty(&mut w, &report).context("writing report")?;
                w.flush().context("writing report")?;
                result.write_trace_csv(create(dir, "trace.csv")?)?;
            }
            print_json(&report)?;
        }
        Command::Suite { spec, config } => {
            let spec = match spec {
                Some(path) => ExperimentSpec::from_json(
                    &fs::read_to_string(path)
                        .with_context(|| format!("reading {}", path.display()))
                        .map_err(config_err)?,
                )?,
                None => ExperimentSpec::default(),
            };
            let base = load_config(cli, config.as_deref())?;
            let dir = out_dir(cli)?.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
            let report = run_experiment_suite(&spec, &base, Some(&dir))?;
            let mut w = create(&dir, "report.json")?;
            serde_json::to_writer_pretty(&mut w, &report).context("writing report")?;
            w.flush().context("writing report")?;
            eprintln!("wrote {} cells to {}", report.cells.len(), dir.display());
        }
        Command::SobolDump { dimension, count } => {
            let mut gen = SobolGenerator::new(*dimension).map_err(config_err)?;
            let sink: Box<dyn Write> = match out_dir(cli)? {
                Some(dir) => Box::new(create(dir, "sobol.csv")?),
                None => Box::new(io::stdout().lock()),
            };
            let mut w = csv::Writer::from_writer(sink);
            w.write_record((1..=*dimension).map(|d| format!("x{d}")))
                .context("writing csv")?;
            for _ in 0..*count {
                let p = gen.next_point()?;
                w.write_record(p.iter().map(|x| x.to_string())).context("writing csv")?;
            }
            w.flush().context("writing csv")?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
