//! Run configuration: `[section]` headers followed by `key = value` lines.
//! `#` starts a comment. Every key can also be overridden on the command line
//! as `section.key=value`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chainnet::channel::Scenario;
use chainnet::dataset::{full_snr_grid, DatasetManifest, SplitSpec, CLEAN_SNR};
use chainnet::modem::ModulationScheme;
use chainnet::trainer::{SuiteConfig, TrainConfig};
use chainnet::NetworkConfig;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub network: NetworkConfig,
    pub dataset: DatasetManifest,
    /// Explicit dataset file; defaults to `<out>/dataset-<scenario>.cnds`.
    pub dataset_path: Option<PathBuf>,
    pub train: TrainConfig,
    pub split: SplitSpec,
    pub lengths: Vec<usize>,
    pub kernels: Vec<usize>,
}

impl Default for Config {
    fn default() -> Self {
        let suite = SuiteConfig::default();
        Config {
            network: NetworkConfig::default(),
            dataset: DatasetManifest::desk_scale(),
            dataset_path: None,
            train: TrainConfig::default(),
            split: SplitSpec::default(),
            lengths: suite.lengths,
            kernels: suite.kernels,
        }
    }
}

fn bad(field: &str, message: impl Into<String>) -> CliError {
    CliError::Usage(format!("invalid `{field}`: {}", message.into()))
}

fn parse<V: std::str::FromStr>(field: &str, value: &str) -> Result<V, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| bad(field, format!("cannot parse `{}`", value.trim())))
}

fn parse_list<V: std::str::FromStr>(field: &str, value: &str) -> Result<Vec<V>, CliError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(field, s))
        .collect()
}

fn parse_bool(field: &str, value: &str) -> Result<bool, CliError> {
    match value.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(bad(field, format!("expected true or false, got `{other}`"))),
    }
}

impl Config {
    /// `default` (or nothing) gives the built-in configuration.
    pub fn load(path: Option<&str>) -> Result<Self, CliError> {
        let mut cfg = Config::default();
        match path {
            None | Some("default") => {}
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Runtime(format!("cannot read config {p}: {e}")))?;
                cfg.apply_text(&text, p)?;
            }
        }
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), CliError> {
        let mut section = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!(
                    "{origin}:{}: expected `key = value`, got `{line}`",
                    n + 1
                ))
            })?;
            if section.is_empty() {
                return Err(CliError::Usage(format!(
                    "{origin}:{}: `{}` is outside any [section]",
                    n + 1,
                    key.trim()
                )));
            }
            self.set(&format!("{section}.{}", key.trim()), value.trim())?;
        }
        Ok(())
    }

    /// Applies one `section.key=value` assignment.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), CliError> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| {
            CliError::Usage(format!(
                "override `{assignment}` is not of the form section.key=value"
            ))
        })?;
        self.set(key.trim(), value.trim())
    }

    pub fn set(&mut self, field: &str, value: &str) -> Result<(), CliError> {
        let (section, key) = field
            .split_once('.')
            .ok_or_else(|| bad(field, "expected section.key"))?;
        match section {
            "network" => self
                .network
                .set(key, value)
                .map_err(|e| bad(field, strip_field(e))),
            "dataset" => self.set_dataset(field, key, value),
            "train" => self.set_train(field, key, value),
            "split" => {
                let s = &mut self.split;
                match key {
                    "train" => s.train = parse(field, value)?,
                    "val" => s.val = parse(field, value)?,
                    "test" => s.test = parse(field, value)?,
                    "seed" => s.seed = parse(field, value)?,
                    _ => return Err(bad(field, "unknown key")),
                }
                Ok(())
            }
            "suite" => {
                match key {
                    "lengths" => self.lengths = parse_list(field, value)?,
                    "kernels" => self.kernels = parse_list(field, value)?,
                    _ => return Err(bad(field, "unknown key")),
                }
                Ok(())
            }
            _ => Err(bad(field, format!("unknown section `{section}`"))),
        }
    }

    fn set_dataset(&mut self, field: &str, key: &str, value: &str) -> Result<(), CliError> {
        let d = &mut self.dataset;
        match key {
            "frame_len" => d.frame_len = parse(field, value)?,
            "frames_per_cell" => d.frames_per_cell = parse(field, value)?,
            "seed" => d.seed = parse(field, value)?,
            "scenario" => {
                d.scenario = value
                    .parse::<Scenario>()
                    .map_err(|e| bad(field, strip_field(e)))?
            }
            "schemes" => {
                d.schemes = if value.trim() == "all" {
                    ModulationScheme::ALL.to_vec()
                } else {
                    value
                        .split(',')
                        .map(|s| {
                            s.parse::<ModulationScheme>()
                                .map_err(|e| bad(field, strip_field(e)))
                        })
                        .collect::<Result<_, _>>()?
                };
            }
            "snrs_db" => {
                d.snrs_db = match value.trim() {
                    "full" => full_snr_grid(),
                    v => v
                        .split(',')
                        .map(str::trim)
                        .map(|s| {
                            if s == "clean" {
                                Ok(CLEAN_SNR)
                            } else {
                                parse(field, s)
                            }
                        })
                        .collect::<Result<_, _>>()?,
                };
            }
            "path" => self.dataset_path = Some(PathBuf::from(value.trim())),
            _ => return Err(bad(field, "unknown key")),
        }
        Ok(())
    }

    fn set_train(&mut self, field: &str, key: &str, value: &str) -> Result<(), CliError> {
        let t = &mut self.train;
        match key {
            "epochs" => t.epochs = parse(field, value)?,
            "batch_size" => t.batch_size = parse(field, value)?,
            "learning_rate" => t.learning_rate = parse(field, value)?,
            "momentum" => t.momentum = parse(field, value)?,
            "seed" => t.seed = parse(field, value)?,
            "checkpoint_every" => t.checkpoint_every = parse(field, value)?,
            "step_decay" => t.step_decay = parse_bool(field, value)?,
            "chunk_size" => t.chunk_size = parse(field, value)?,
            "eval_batch" => t.eval_batch = parse(field, value)?,
            _ => return Err(bad(field, "unknown key")),
        }
        Ok(())
    }

    /// One seed for every random stage.
    pub fn set_seed(&mut self, seed: u64) {
        self.network.seed = seed;
        self.dataset.seed = seed;
        self.train.seed = seed;
        self.split.seed = seed;
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let named = |section: &str, e: chainnet::Error| match e {
            chainnet::Error::Config { field, message }
                if !field.contains('.') && field != section =>
            {
                bad(&format!("{section}.{field}"), message)
            }
            other => CliError::Usage(other.to_string()),
        };
        self.network.validate().map_err(|e| named("network", e))?;
        self.dataset.validate().map_err(|e| named("dataset", e))?;
        self.train.validate().map_err(|e| named("train", e))?;
        self.split.validate().map_err(|e| named("split", e))?;
        if self.lengths.is_empty() {
            return Err(bad("suite.lengths", "empty list"));
        }
        if self.kernels.is_empty() {
            return Err(bad("suite.kernels", "empty list"));
        }
        Ok(())
    }

    pub fn dataset_file(&self, out: &Path) -> PathBuf {
        self.dataset_path
            .clone()
            .unwrap_or_else(|| chainnet::trainer::dataset_path(out, self.dataset.scenario))
    }

    pub fn suite(&self) -> SuiteConfig {
        SuiteConfig {
            network: self.network,
            train: self.train.clone(),
            split: self.split,
            scenario: self.dataset.scenario,
            lengths: self.lengths.clone(),
            kernels: self.kernels.clone(),
        }
    }

    /// The configuration in the same format `load` reads.
    pub fn render(&self) -> String {
        let mut s = String::from("[network]\n");
        for line in self.network.to_kv().lines() {
            let (k, v) = line.split_once('=').expect("kv line");
            let _ = writeln!(s, "{k} = {v}");
        }
        let d = &self.dataset;
        let schemes: Vec<&str> = d.schemes.iter().map(|m| m.name()).collect();
        let snrs: Vec<String> = d
            .snrs_db
            .iter()
            .map(|&v| {
                if v == CLEAN_SNR {
                    "clean".into()
                } else {
                    v.to_string()
                }
            })
            .collect();
        let _ = write!(
            s,
            "\n[dataset]\nframe_len = {}\nschemes = {}\nsnrs_db = {}\nframes_per_cell = {}\nscenario = {}\nseed = {}\n",
            d.frame_len,
            schemes.join(","),
            snrs.join(","),
            d.frames_per_cell,
            d.scenario,
            d.seed
        );
        if let Some(p) = &self.dataset_path {
            let _ = writeln!(s, "path = {}", p.display());
        }
        let t = &self.train;
        let _ = write!(
            s,
            "\n[train]\nepochs = {}\nbatch_size = {}\nlearning_rate = {}\nmomentum = {}\nseed = {}\ncheckpoint_every = {}\nstep_decay = {}\nchunk_size = {}\neval_batch = {}\n",
            t.epochs, t.batch_size, t.learning_rate, t.momentum, t.seed, t.checkpoint_every, t.step_decay, t.chunk_size, t.eval_batch
        );
        let p = &self.split;
        let _ = write!(
            s,
            "\n[split]\ntrain = {}\nval = {}\ntest = {}\nseed = {}\n",
            p.train, p.val, p.test, p.seed
        );
        let join = |v: &[usize]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let _ = write!(
            s,
            "\n[suite]\nlengths = {}\nkernels = {}\n",
            join(&self.lengths),
            join(&self.kernels)
        );
        s
    }
}

/// The message of a library config error without its own field prefix.
fn strip_field(e: chainnet::Error) -> String {
    match e {
        chainnet::Error::Config { message, .. } => message,
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_round_trips() {
        let mut cfg = Config::default();
        cfg.apply_override("dataset.snrs_db=-4,clean").unwrap();
        cfg.apply_override("train.step_decay=yes").unwrap();
        cfg.apply_override("suite.kernels=8,16").unwrap();
        let mut back = Config::default();
        back.apply_text(&cfg.render(), "rendered").unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn errors_name_the_field() {
        let mut cfg = Config::default();
        let e = cfg
            .apply_override("train.epochs=many")
            .unwrap_err()
            .to_string();
        assert!(e.contains("train.epochs"), "{e}");
        let e = cfg
            .apply_override("network.kernel_count=x")
            .unwrap_err()
            .to_string();
        assert!(e.contains("network.kernel_count"), "{e}");
        let e = cfg
            .apply_override("nothing.here=1")
            .unwrap_err()
            .to_string();
        assert!(e.contains("nothing.here"), "{e}");
        let e = cfg
            .apply_text("[train]\nepochs 3\n", "f.ini")
            .unwrap_err()
            .to_string();
        assert!(e.contains("f.ini:2"), "{e}");
        cfg.apply_override("train.momentum=1.5").unwrap();
        let e = cfg.validate().unwrap_err().to_string();
        assert!(e.contains("train.momentum"), "{e}");
    }

    #[test]
    fn comments_and_presets() {
        let mut cfg = Config::default();
        cfg.apply_text(
            "# run\n[dataset]\nsnrs_db = full # grid\nschemes = all\n",
            "x",
        )
        .unwrap();
        assert_eq!(cfg.dataset.snrs_db.len(), 21);
        assert_eq!(cfg.dataset.schemes.len(), 14);
    }
}
