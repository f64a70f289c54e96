use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chainnet_nn::Scalar;

use super::eval::snr_label;
use super::{evaluate, train, EvalReport, TrainConfig, TrainOutcome};
use crate::channel::Scenario;
use crate::dataset::{read_dataset, split_dataset, Dataset, DatasetManifest, SplitSpec};
use crate::error::{Error, Result};
use crate::model::{ChainNet, NetworkConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteKind {
    /// No fading, flat fading and EPA.
    Robustness,
    /// Signal length ℓ.
    LengthSweep,
    /// Kernel count K.
    KernelSweep,
}

impl SuiteKind {
    pub fn name(self) -> &'static str {
        match self {
            SuiteKind::Robustness => "robustness",
            SuiteKind::LengthSweep => "length-sweep",
            SuiteKind::KernelSweep => "kernel-sweep",
        }
    }

    fn column(self) -> &'static str {
        match self {
            SuiteKind::Robustness => "scenario",
            SuiteKind::LengthSweep => "signal_length",
            SuiteKind::KernelSweep => "kernel_count",
        }
    }
}

impl fmt::Display for SuiteKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SuiteKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "robustness" => Ok(SuiteKind::Robustness),
            "length-sweep" | "length" => Ok(SuiteKind::LengthSweep),
            "kernel-sweep" | "kernel" => Ok(SuiteKind::KernelSweep),
            other => Err(Error::Usage(format!(
                "unknown suite {other:?}; expected robustness, length-sweep or kernel-sweep"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub network: NetworkConfig,
    pub train: TrainConfig,
    pub split: SplitSpec,
    /// Scenario of the dataset used by the sweeps.
    pub scenario: Scenario,
    pub lengths: Vec<usize>,
    pub kernels: Vec<usize>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            network: NetworkConfig::default(),
            train: TrainConfig::default(),
            split: SplitSpec::default(),
            scenario: Scenario::Epa,
            lengths: vec![128, 256, 512, 1024],
            kernels: vec![16, 32, 64, 128],
        }
    }
}

/// Accuracy-versus-SNR curve per suite point.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub kind: SuiteKind,
    pub points: Vec<(String, EvalReport)>,
}

impl SuiteReport {
    pub fn point(&self, key: &str) -> Option<&EvalReport> {
        self.points.iter().find(|(k, _)| k == key).map(|(_, r)| r)
    }

    /// One row per point, one accuracy column per SNR.
    pub fn to_csv(&self) -> String {
        let mut snrs: Vec<i8> = self
            .points
            .iter()
            .flat_map(|(_, r)| r.buckets.iter().map(|b| b.snr_db))
            .collect();
        snrs.sort_unstable();
        snrs.dedup();
        let mut out = self.kind.column().to_string();
        for s in &snrs {
            out.push_str(&format!(",snr_{}", snr_label(*s)));
        }
        out.push('\n');
        for (key, report) in &self.points {
            out.push_str(key);
            for s in &snrs {
                out.push(',');
                if let Some(a) = report.accuracy_at(*s) {
                    out.push_str(&a.to_string());
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Conventional file name of the dataset for a channel scenario.
pub fn dataset_path(dir: &Path, scenario: Scenario) -> PathBuf {
    dir.join(format!("dataset-{scenario}.cnds"))
}

fn load(dir: &Path, scenario: Scenario) -> Result<Dataset> {
    let path = dataset_path(dir, scenario);
    if !path.exists() {
        return Err(Error::MissingDataset {
            hint: format!(
                "chainnet gen --set dataset.scenario={scenario} --out {}",
                dir.display()
            ),
            path,
        });
    }
    read_dataset(&path)
}

/// Trains one network on the dataset's training split and evaluates it on
/// the test split.
pub fn run_point<T: Scalar>(
    dataset: &Dataset,
    network: NetworkConfig,
    train_cfg: &TrainConfig,
    split_spec: &SplitSpec,
) -> Result<(TrainOutcome<T>, EvalReport)> {
    check_fit(&dataset.manifest, &network)?;
    let split = split_dataset(&dataset.manifest, split_spec)?;
    let net = ChainNet::<T>::new(network)?;
    let outcome = train(net, &dataset.records, &split, train_cfg)?;
    let report = evaluate(
        &outcome.network,
        &dataset.records,
        &split.test,
        train_cfg.eval_batch,
    )?;
    Ok((outcome, report))
}

fn check_fit(manifest: &DatasetManifest, network: &NetworkConfig) -> Result<()> {
    if network.signal_length > manifest.frame_len {
        return Err(Error::Length(format!(
            "network signal length {} exceeds dataset frame length {}",
            network.signal_length, manifest.frame_len
        )));
    }
    if manifest
        .schemes
        .iter()
        .any(|s| s.label() as usize >= network.class_count)
    {
        return Err(Error::config(
            "class_count",
            format!(
                "{} classes cannot hold every dataset label",
                network.class_count
            ),
        ));
    }
    Ok(())
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Runs every point of a suite, reading datasets from `data_dir`. When
/// `out_dir` is given, the suite CSV, per-point evaluation CSVs and training
/// histories are written there.
pub fn run_experiment_suite(
    kind: SuiteKind,
    cfg: &SuiteConfig,
    data_dir: &Path,
    out_dir: Option<&Path>,
) -> Result<SuiteReport> {
    let mut plan: Vec<(String, Scenario, NetworkConfig)> = Vec::new();
    match kind {
        SuiteKind::Robustness => {
            for s in Scenario::ALL {
                plan.push((s.name().to_string(), s, cfg.network));
            }
        }
        SuiteKind::LengthSweep => {
            for &l in &cfg.lengths {
                plan.push((
                    l.to_string(),
                    cfg.scenario,
                    NetworkConfig {
                        signal_length: l,
                        ..cfg.network
                    },
                ));
            }
        }
        SuiteKind::KernelSweep => {
            for &k in &cfg.kernels {
                plan.push((
                    k.to_string(),
                    cfg.scenario,
                    NetworkConfig {
                        kernel_count: k,
                        ..cfg.network
                    },
                ));
            }
        }
    }
    if plan.is_empty() {
        return Err(Error::Empty {
            what: format!("{kind} point list"),
        });
    }
    for (_, _, net) in &plan {
        net.validate()?;
    }
    let mut scenarios: Vec<Scenario> = plan.iter().map(|p| p.1).collect();
    scenarios.dedup();
    let datasets = scenarios
        .iter()
        .map(|&s| load(data_dir, s).map(|d| (s, d)))
        .collect::<Result<Vec<_>>>()?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    }

    let mut report = SuiteReport {
        kind,
        points: Vec::new(),
    };
    for (key, scenario, network) in plan {
        let dataset = &datasets
            .iter()
            .find(|(s, _)| *s == scenario)
            .expect("loaded above")
            .1;
        log::info!("{kind}: training point {key}");
        let (outcome, eval) = run_point::<f32>(dataset, network, &cfg.train, &cfg.split)?;
        if let Some(dir) = out_dir {
            let stem = format!("{kind}-{key}");
            write(
                &dir.join(format!("{stem}-eval.csv")),
                &eval.to_csv(Some(outcome.best_epoch), "test"),
            )?;
            write(
                &dir.join(format!("{stem}-history.csv")),
                &outcome.history_csv(),
            )?;
        }
        report.points.push((key, eval));
    }
    if let Some(dir) = out_dir {
        write(&dir.join(format!("{kind}.csv")), &report.to_csv())?;
    }
    Ok(report)
}
