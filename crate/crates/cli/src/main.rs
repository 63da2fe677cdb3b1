use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hebbnet::data::DEFAULT_VALIDATION_LEN;
use hebbnet::harness::{
    assisted_learning, export_csv, export_csv_path, run_experiment_with_network, sweep_ipd,
    ExperimentFile, PresetChoice, RunResult,
};
use hebbnet::{ActivationKind, DatasetSplits, ExperimentConfig, Network, Preset, Rule};

#[derive(Parser)]
#[command(
    name = "hebbnet",
    version,
    about = "Train and evaluate Hebbian feed-forward networks on MNIST"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one network and report train/test/validation accuracy.
    Train(TrainArgs),
    /// Run one experiment per IPD value and write a CSV.
    Sweep(SweepArgs),
    /// Score a saved network on one split.
    Eval(EvalArgs),
    /// Print layer and weight statistics of a saved or freshly built network.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Directory holding the four MNIST IDX files (raw or gzip).
    #[arg(long, env = "HEBBNET_DATA_DIR")]
    data_dir: PathBuf,
    /// Images held back from the end of the training file for validation.
    #[arg(long, default_value_t = DEFAULT_VALIDATION_LEN)]
    validation_size: usize,
}

#[derive(Args)]
struct ExperimentArgs {
    /// shallow, medium or deeper. Defaults to shallow unless the config file names one.
    #[arg(long, value_parser = parse_preset)]
    preset: Option<Preset>,
    /// TOML experiment file; flags given here take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training images per digit.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    ipd: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    epochs: Option<u64>,
    /// 0 takes the first images of each digit; other values draw a seeded sample.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    rule: Option<RuleArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Compressed,
    Extended,
    Plain,
}

impl From<RuleArg> for Rule {
    fn from(r: RuleArg) -> Rule {
        match r {
            RuleArg::Compressed => Rule::Compressed,
            RuleArg::Extended => Rule::Extended,
            RuleArg::Plain => Rule::PlainHebb,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    #[command(flatten)]
    data: DataArgs,
    /// Write the trained network to this file.
    #[arg(long)]
    save_model: Option<PathBuf>,
    /// Worker threads for evaluation.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: u64,
    /// Extra rounds that train on fresh examples of the worst-classified digits.
    #[arg(long, default_value_t = 0)]
    assisted_rounds: usize,
    /// Digits picked per assisted round.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..=10))]
    assisted_top_k: u64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated IPD values; duplicates give duplicate rows.
    #[arg(long, value_delimiter = ',', required = true, value_parser = clap::value_parser!(u64).range(1..))]
    ipd_list: Vec<u64>,
    /// CSV destination. Without it the CSV goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sweep entries run concurrently.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Split {
    Train,
    Test,
    Validation,
}

#[derive(Args)]
struct EvalArgs {
    /// Network dump written by `train --save-model`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    split: Split,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: u64,
}

#[derive(Args)]
struct InspectArgs {
    /// Network dump to inspect; without it the configured network is built untrained.
    #[arg(long, conflicts_with_all = ["preset", "config", "ipd", "epochs", "seed", "rule"])]
    model: Option<PathBuf>,
    #[command(flatten)]
    experiment: ExperimentArgs,
}

fn parse_preset(s: &str) -> std::result::Result<Preset, String> {
    s.parse().map_err(|e: hebbnet::Error| e.to_string())
}

impl ExperimentArgs {
    /// Preset defaults, then the config file, then flags.
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::new(Preset::Shallow);
        if let Some(path) = &self.config {
            ExperimentFile::load(path)?.apply_to(&mut cfg)?;
        }
        if let Some(p) = self.preset {
            cfg.preset = PresetChoice::Named(p);
        }
        if let Some(v) = self.ipd {
            cfg.ipd = v as usize;
        }
        if let Some(v) = self.epochs {
            cfg.epochs = v as usize;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(r) = self.rule {
            cfg.overrides.rule = Some(r.into());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl DataArgs {
    fn load(&self) -> Result<DatasetSplits> {
        let start = Instant::now();
        let data = hebbnet::load_mnist_dir(&self.data_dir, self.validation_size)
            .with_context(|| format!("loading MNIST from {}", self.data_dir.display()))?;
        eprintln!(
            "loaded {} train, {} test, {} validation images in {:.1} s",
            data.train.len(),
            data.test.len(),
            data.validation.len(),
            start.elapsed().as_secs_f64()
        );
        Ok(data)
    }
}

fn with_jobs<R: Send>(jobs: u64, f: impl FnOnce() -> Result<R> + Send) -> Result<R> {
    hebbnet::par::with_jobs(jobs as usize, f)?
}

fn print_result(r: &RunResult) {
    println!("preset: {}", r.preset);
    println!("ipd: {}", r.ipd);
    println!("epochs: {}", r.epochs);
    println!("seed: {}", r.seed);
    println!("examples_trained: {}", r.examples_trained);
    println!("train_accuracy: {:.4}", r.train_accuracy);
    println!("test_accuracy: {:.4}", r.test_accuracy);
    println!("validation_accuracy: {:.4}", r.validation_accuracy);
    println!("train_seconds: {:.3}", r.train_seconds);
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let cfg = args.experiment.resolve()?;
    let data = args.data.load()?;
    let started = Instant::now();
    let (mut net, result) = with_jobs(args.jobs, || Ok(run_experiment_with_network(&cfg, &data)?))?;
    print_result(&result);

    if args.assisted_rounds > 0 {
        let top_k = args.assisted_top_k as usize;
        let outcome = with_jobs(args.jobs, || {
            Ok(assisted_learning(
                net,
                &cfg,
                &data,
                args.assisted_rounds,
                top_k,
            )?)
        })?;
        for (k, round) in outcome.rounds.iter().enumerate() {
            let digits: Vec<String> = round.digits.iter().map(|d| d.to_string()).collect();
            println!(
                "assisted_round {}: digits [{}], +{} examples",
                k + 1,
                digits.join(","),
                round.examples_added
            );
        }
        net = outcome.network;
        let (test, validation) = with_jobs(args.jobs, || {
            Ok((net.evaluate(&data.test)?, net.evaluate(&data.validation)?))
        })?;
        println!("assisted_examples_trained: {}", net.examples_seen());
        println!("assisted_test_accuracy: {test:.4}");
        println!("assisted_validation_accuracy: {validation:.4}");
    }
    println!("wall_seconds: {:.3}", started.elapsed().as_secs_f64());

    if let Some(path) = &args.save_model {
        hebbnet::save_network(&net, path).with_context(|| format!("writing {}", path.display()))?;
        eprintln!("saved network to {}", path.display());
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let cfg = args.experiment.resolve()?;
    let ipds: Vec<usize> = args.ipd_list.iter().map(|&v| v as usize).collect();
    if let Some(out) = &args.out {
        // fail on an unwritable destination before spending time on training
        std::fs::File::create(out).with_context(|| format!("cannot write {}", out.display()))?;
    }
    let results = args
        .data
        .load()
        .and_then(|data| Ok(sweep_ipd(&cfg, &ipds, &data, args.jobs as usize)?));
    let results = match results {
        Ok(r) => r,
        Err(e) => {
            if let Some(out) = &args.out {
                let _ = std::fs::remove_file(out);
            }
            return Err(e);
        }
    };
    match &args.out {
        Some(out) => {
            export_csv_path(&results, out).with_context(|| format!("writing {}", out.display()))?;
            println!(
                "{:>6} {:>9} {:>9} {:>9} {:>10}",
                "ipd", "train", "test", "val", "seconds"
            );
            for r in &results {
                println!(
                    "{:>6} {:>9.4} {:>9.4} {:>9.4} {:>10.3}",
                    r.ipd,
                    r.train_accuracy,
                    r.test_accuracy,
                    r.validation_accuracy,
                    r.train_seconds
                );
            }
            eprintln!("wrote {} rows to {}", results.len(), out.display());
        }
        None => export_csv(&results, std::io::stdout().lock())?,
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let net = load_model(&args.model)?;
    let data = args.data.load()?;
    let (name, examples) = match args.split {
        Split::Train => ("train", &data.train),
        Split::Test => ("test", &data.test),
        Split::Validation => ("validation", &data.validation),
    };
    let accuracy = with_jobs(args.jobs, || Ok(net.evaluate(examples)?))?;
    println!("{name}_accuracy: {accuracy:.4}");
    Ok(())
}

fn load_model(path: &Path) -> Result<Network> {
    hebbnet::load_network(path).with_context(|| format!("reading network dump {}", path.display()))
}

fn describe(kind: Option<&ActivationKind>) -> String {
    match kind {
        None => "input".into(),
        Some(ActivationKind::Relu) => "relu".into(),
        Some(ActivationKind::RectifiedTanh { coefficient }) => format!("tanh_rec(c={coefficient})"),
    }
}

fn cmd_inspect(args: InspectArgs) -> Result<()> {
    let net = match &args.model {
        Some(path) => load_model(path)?,
        None => Network::new(args.experiment.resolve()?.network_config()?)?,
    };
    let config = net.config();
    let p = &config.plasticity;
    println!("examples_seen: {}", net.examples_seen());
    println!(
        "plasticity: rule={} eta_ltp={} eta_ltd={} eta_ltp2={} threshold={} creation={} creation_requires_threshold={} bounding={:?}",
        p.rule, p.eta_ltp, p.eta_ltd, p.eta_ltp2, p.threshold, p.creation_value, p.creation_requires_threshold, p.bounding
    );
    for (l, layer) in config.layers.iter().enumerate() {
        let activation = if l == 0 {
            None
        } else {
            Some(&layer.activation)
        };
        println!(
            "layer {l}: size={} bias={} activation={} trainable={}",
            layer.size,
            layer.bias,
            describe(activation),
            l > 0 && layer.trainable_incoming
        );
    }
    for (l, (w, conn)) in net.weights().iter().zip(&config.connections).enumerate() {
        let values = w.as_slice();
        let positive = values.iter().filter(|&&v| v > 0.0).count();
        let negative = values.iter().filter(|&&v| v < 0.0).count();
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        println!(
            "weights {l}->{}: {}x{} {conn:?} nonzero={} positive={positive} negative={negative} min={min:.4} max={max:.4} mean={mean:.6}",
            l + 1,
            w.rows(),
            w.cols(),
            w.nonzeros()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Inspect(a) => cmd_inspect(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
