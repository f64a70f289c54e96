mod config;

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chainnet::checkpoint::load_checkpoint;
use chainnet::dataset::{
    read_dataset, split_dataset, write_dataset_file, DatasetManifest, DatasetReader,
};
use chainnet::modem::Modem;
use chainnet::trainer::{evaluate, run_experiment_suite, train, EvalReport, SuiteKind};
use chainnet::{ChainNet, NetworkConfig};
use clap::{Parser, Subcommand};

use config::Config;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or configuration; exit code 1.
    Usage(String),
    /// Anything that failed while running; exit code 2.
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<chainnet::Error> for CliError {
    fn from(e: chainnet::Error) -> Self {
        use chainnet::Error as E;
        match e {
            E::Config { .. } | E::Usage(_) | E::Length(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

#[derive(Parser, Debug)]
#[command(name = "chainnet", version, about = "Chain-Net modulation classifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Configuration file, or `default` for the built-in configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<String>,

    /// Override one configuration value, e.g. `--set train.epochs=30`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Directory for datasets, checkpoints and reports.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,

    /// Seed for every random stage (dataset, initialization, split, shuffling).
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Only report warnings and errors.
    #[arg(long, short, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the dataset described by the configuration.
    Gen,
    /// Train a network on the generated dataset.
    Train,
    /// Evaluate a checkpoint on the test split.
    Eval {
        /// Defaults to `<out>/checkpoints/best.ckpt`.
        checkpoint: Option<PathBuf>,
    },
    /// Run an experiment suite: robustness, length-sweep or kernel-sweep.
    Suite { kind: String },
    /// Print the shape trace and parameter count of the configured network,
    /// a checkpoint, or a dataset file's manifest.
    Inspect { path: Option<PathBuf> },
    /// Print the effective configuration.
    Config,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    env_logger::Builder::new()
        .filter_level(if cli.quiet {
            log::LevelFilter::Warn
        } else {
            log::LevelFilter::Info
        })
        .parse_default_env()
        .format_target(false)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Usage(_) => 1,
                CliError::Runtime(_) => 2,
            })
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = Config::load(cli.config.as_deref())?;
    for o in &cli.overrides {
        cfg.apply_override(o)?;
    }
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    cfg.validate()?;
    let out = cli.out.as_path();
    match cli.command {
        Command::Gen => gen(&cfg, out),
        Command::Train => train_cmd(&cfg, out),
        Command::Eval { checkpoint } => {
            let path = checkpoint.unwrap_or_else(|| out.join("checkpoints").join("best.ckpt"));
            eval_cmd(&cfg, out, &path)
        }
        Command::Suite { kind } => suite_cmd(&cfg, out, kind.parse()?),
        Command::Inspect { path } => inspect(&cfg, path.as_deref()),
        Command::Config => {
            print!("{}", cfg.render());
            Ok(())
        }
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

fn file_crc(path: &Path) -> Result<u32, CliError> {
    let mut reader = BufReader::new(File::open(path).map_err(|e| io_error(path, e))?);
    let mut hasher = crc32fast::Hasher::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = reader.read(&mut buf).map_err(|e| io_error(path, e))?;
        if n == 0 {
            return Ok(hasher.finalize());
        }
        hasher.update(&buf[..n]);
    }
}

fn sidecar_path(dataset: &Path) -> PathBuf {
    dataset.with_extension("manifest")
}

fn sidecar_text(manifest: &DatasetManifest, crc: u32) -> String {
    format!(
        "{}file_size = {}\ncrc32 = {crc:08x}\n",
        manifest.to_kv(),
        manifest.file_size()
    )
}

/// True when `path` holds a complete dataset for `manifest` whose bytes still
/// match the checksum recorded next to it.
fn up_to_date(manifest: &DatasetManifest, path: &Path) -> bool {
    let Ok(reader) = DatasetReader::open(path) else {
        return false;
    };
    if reader.manifest() != manifest {
        return false;
    }
    let Ok(recorded) = std::fs::read_to_string(sidecar_path(path)) else {
        return false;
    };
    file_crc(path).is_ok_and(|crc| recorded == sidecar_text(manifest, crc))
}

fn gen(cfg: &Config, out: &Path) -> Result<(), CliError> {
    let path = cfg.dataset_file(out);
    let manifest = &cfg.dataset;
    if up_to_date(manifest, &path) {
        println!("{}: up to date", path.display());
        return Ok(());
    }
    if let Some(dir) = path.parent() {
        create_dir(dir)?;
    }
    log::info!(
        "generating {} records ({} bytes) into {}",
        manifest.record_count(),
        manifest.file_size(),
        path.display()
    );
    write_dataset_file(manifest, &Modem::default(), &path)?;
    let crc = file_crc(&path)?;
    write_file(&sidecar_path(&path), &sidecar_text(manifest, crc))?;
    println!(
        "{}: wrote {} records",
        path.display(),
        manifest.record_count()
    );
    Ok(())
}

fn dataset_manifest(path: &Path) -> Result<DatasetManifest, CliError> {
    if !path.exists() {
        let dir = path
            .parent()
            .map_or(".".into(), |p| p.display().to_string());
        return Err(CliError::Runtime(format!(
            "dataset {} not found; generate it with `chainnet gen --out {dir}`",
            path.display()
        )));
    }
    Ok(DatasetReader::open(path)?.manifest().clone())
}

fn accuracy_table(report: &EvalReport) -> String {
    let mut s = String::from("snr_db  accuracy  frames\n");
    for b in &report.buckets {
        let _ = writeln!(
            s,
            "{:>6}  {:>8.4}  {:>6}",
            chainnet::dataset::snr_db(b.snr_db),
            b.accuracy(),
            b.total()
        );
    }
    let _ = writeln!(
        s,
        "pooled  {:>8.4}  {:>6}",
        report.pooled_accuracy(),
        report.total()
    );
    let _ = writeln!(s, "mean    {:>8.4}", report.mean_snr_accuracy());
    s
}

fn write_report(report: &EvalReport, out: &Path, epoch: Option<usize>) -> Result<(), CliError> {
    write_file(&out.join("eval.csv"), &report.to_csv(epoch, "test"))?;
    for b in &report.buckets {
        if let Some(csv) = report.confusion_csv(b.snr_db) {
            write_file(&out.join(format!("confusion-snr{}.csv", b.snr_db)), &csv)?;
        }
    }
    Ok(())
}

fn train_cmd(cfg: &Config, out: &Path) -> Result<(), CliError> {
    let path = cfg.dataset_file(out);
    let manifest = dataset_manifest(&path)?;
    if cfg.network.signal_length != manifest.frame_len {
        return Err(CliError::Usage(format!(
            "network.signal_length is {} but {} holds frames of length {}",
            cfg.network.signal_length,
            path.display(),
            manifest.frame_len
        )));
    }
    let dataset = read_dataset(&path)?;
    let split = split_dataset(&dataset.manifest, &cfg.split)?;
    create_dir(out)?;
    let mut train_cfg = cfg.train.clone();
    train_cfg.checkpoint_dir = Some(out.join("checkpoints"));
    create_dir(&out.join("checkpoints"))?;
    log::info!(
        "training {} on {} frames ({} validation, {} test)",
        cfg.network,
        split.train.len(),
        split.val.len(),
        split.test.len()
    );
    let net = ChainNet::<f32>::new(cfg.network)?;
    let outcome = train(net, &dataset.records, &split, &train_cfg)?;
    write_file(&out.join("history.csv"), &outcome.history_csv())?;
    println!("best epoch {}", outcome.best_epoch);
    if !split.test.is_empty() {
        let report = evaluate(
            &outcome.network,
            &dataset.records,
            &split.test,
            cfg.train.eval_batch,
        )?;
        write_report(&report, out, Some(outcome.best_epoch))?;
        print!("{}", accuracy_table(&report));
    }
    Ok(())
}

fn eval_cmd(cfg: &Config, out: &Path, checkpoint: &Path) -> Result<(), CliError> {
    if !checkpoint.exists() {
        return Err(CliError::Runtime(format!(
            "checkpoint {} not found",
            checkpoint.display()
        )));
    }
    let net: ChainNet<f32> = load_checkpoint(checkpoint)?;
    let path = cfg.dataset_file(out);
    let manifest = dataset_manifest(&path)?;
    if net.config().signal_length > manifest.frame_len {
        return Err(CliError::Usage(format!(
            "{} expects signal length {} but {} holds frames of length {}",
            checkpoint.display(),
            net.config().signal_length,
            path.display(),
            manifest.frame_len
        )));
    }
    let dataset = read_dataset(&path)?;
    let split = split_dataset(&dataset.manifest, &cfg.split)?;
    let report = evaluate(&net, &dataset.records, &split.test, cfg.train.eval_batch)?;
    create_dir(out)?;
    write_report(&report, out, None)?;
    print!("{}", accuracy_table(&report));
    Ok(())
}

fn suite_cmd(cfg: &Config, out: &Path, kind: SuiteKind) -> Result<(), CliError> {
    let data_dir = cfg
        .dataset_path
        .as_deref()
        .and_then(Path::parent)
        .unwrap_or(out);
    let report = run_experiment_suite(kind, &cfg.suite(), data_dir, Some(out))?;
    print!("{}", report.to_csv());
    Ok(())
}

fn print_network(config: NetworkConfig, parameters: usize, trace: &chainnet::ShapeTrace) {
    println!("network     {config}");
    println!("parameters  {parameters}");
    print!("{trace}");
}

fn inspect(cfg: &Config, path: Option<&Path>) -> Result<(), CliError> {
    let Some(path) = path else {
        let net = ChainNet::<f32>::new(cfg.network)?;
        print_network(cfg.network, net.parameter_count(), &net.shape_trace()?);
        return Ok(());
    };
    let mut magic = [0u8; 4];
    File::open(path)
        .and_then(|mut f| f.read_exact(&mut magic))
        .map_err(|e| io_error(path, e))?;
    if &magic == b"CNDS" {
        let manifest = DatasetReader::open(path)?.manifest().clone();
        print!("{}", manifest.to_kv());
        println!("file_size = {}", manifest.file_size());
    } else {
        let net: ChainNet<f32> = load_checkpoint(path)?;
        print_network(*net.config(), net.parameter_count(), &net.shape_trace()?);
    }
    Ok(())
}
