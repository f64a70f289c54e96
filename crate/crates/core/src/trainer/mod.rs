//! Minibatch SGD training and the evaluation protocol.

mod eval;
mod suite;

use std::path::{Path, PathBuf};

use chainnet_nn::ops::softmax_cross_entropy;
use chainnet_nn::{Graph, NnError, ParamSet, Scalar, Sgd};

pub use eval::{evaluate, EvalReport, SnrBucket};
pub use suite::{
    dataset_path, run_experiment_suite, run_point, SuiteConfig, SuiteKind, SuiteReport,
};

use crate::checkpoint::save_checkpoint;
use crate::dataset::{Batch, FrameRecord, Minibatches, Split};
use crate::error::{Error, Result};
use crate::model::{ChainNet, Mode};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
    /// Write a checkpoint every this many epochs; 0 disables periodic
    /// checkpoints.
    pub checkpoint_every: usize,
    pub checkpoint_dir: Option<PathBuf>,
    /// Multiply the learning rate by 0.1 from epoch 75 on.
    pub step_decay: bool,
    /// Frames pushed through the graph at once; gradients of all chunks of a
    /// minibatch are summed before the update.
    pub chunk_size: usize,
    /// Frames per forward pass during validation.
    pub eval_batch: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 256,
            learning_rate: 0.01,
            momentum: 0.9,
            seed: 0,
            checkpoint_every: 0,
            checkpoint_dir: None,
            step_decay: false,
            chunk_size: 32,
            eval_batch: 128,
        }
    }
}

pub const DECAY_EPOCH: usize = 75;

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("epochs", "must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config(
                "momentum",
                format!("{} outside [0, 1)", self.momentum),
            ));
        }
        if self.chunk_size == 0 {
            return Err(Error::config("chunk_size", "must be at least 1"));
        }
        if self.eval_batch == 0 {
            return Err(Error::config("eval_batch", "must be at least 1"));
        }
        Ok(())
    }

    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        if self.step_decay && epoch >= DECAY_EPOCH {
            self.learning_rate * 0.1
        } else {
            self.learning_rate
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub learning_rate: f64,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    /// Parameters of the epoch with the best validation accuracy (the last
    /// epoch when there is no validation set).
    pub network: ChainNet<T>,
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
}

impl<T> TrainOutcome<T> {
    /// `epoch,split,snr_db,accuracy,loss` rows for training and validation.
    pub fn history_csv(&self) -> String {
        let mut out = String::from("epoch,split,snr_db,accuracy,loss\n");
        for e in &self.history {
            out.push_str(&format!(
                "{},train,all,{},{}\n",
                e.epoch, e.train_accuracy, e.train_loss
            ));
            if let (Some(acc), Some(loss)) = (e.val_accuracy, e.val_loss) {
                out.push_str(&format!("{},val,all,{acc},{loss}\n", e.epoch));
            }
        }
        out
    }

    pub fn losses(&self) -> Vec<f64> {
        self.history.iter().map(|e| e.train_loss).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    /// Mean cross-entropy over the minibatch before the update.
    pub loss: f64,
    /// Correct argmax decisions before the update (dropout active).
    pub correct: usize,
}

fn argmax<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

fn diverged(reason: String) -> Error {
    Error::Divergence {
        epoch: 0,
        reason,
        last_good: None,
    }
}

/// Accumulates the minibatch gradient chunk by chunk into the parameter
/// gradients, without updating. Returns the summed loss and correct count.
pub fn accumulate_gradients<T: Scalar>(
    net: &mut ChainNet<T>,
    batch: &Batch<T>,
    step_seed: u64,
    chunk_size: usize,
) -> Result<(f64, usize)> {
    let n = batch.len();
    if n == 0 {
        return Err(Error::Empty {
            what: "minibatch".into(),
        });
    }
    net.params_mut().zero_grad();
    let mut loss_sum = 0.0;
    let mut correct = 0;
    let classes = net.config().class_count;
    for (c, start) in (0..n).step_by(chunk_size.max(1)).enumerate() {
        let count = chunk_size.min(n - start);
        let frames = batch.inputs.slice_batch(start, count);
        let targets = batch.targets.slice_batch(start, count);
        let mut graph = Graph::new();
        let mode = Mode::Train {
            dropout_seed: seed::derive(step_seed, &[c as u64]),
        };
        let nodes = net.forward(&mut graph, frames, mode)?;
        let (loss, probs, grad) = softmax_cross_entropy(graph.value(nodes.logits), &targets, n)?;
        let loss = loss.to_f64().unwrap_or(f64::NAN);
        if !loss.is_finite() {
            return Err(diverged(format!("non-finite loss {loss}")));
        }
        loss_sum += loss;
        for (row, &label) in probs
            .data()
            .chunks_exact(classes)
            .zip(&batch.labels[start..start + count])
        {
            correct += usize::from(argmax(row) == label as usize);
        }
        graph.backward(nodes.logits, &grad, net.params_mut())?;
    }
    Ok((loss_sum, correct))
}

/// One forward/backward pass over `batch` followed by one SGD update.
pub fn train_step<T: Scalar>(
    net: &mut ChainNet<T>,
    sgd: &mut Sgd<T>,
    batch: &Batch<T>,
    step_seed: u64,
    chunk_size: usize,
) -> Result<StepResult> {
    let (loss_sum, correct) = accumulate_gradients(net, batch, step_seed, chunk_size)?;
    sgd.step(net.params_mut()).map_err(|e| match e {
        NnError::Divergence { tag } => diverged(format!("non-finite gradient in `{tag}`")),
        other => other.into(),
    })?;
    Ok(StepResult {
        loss: loss_sum / batch.len() as f64,
        correct,
    })
}

/// Mean cross-entropy of `batch` in inference mode.
pub fn batch_loss<T: Scalar>(net: &ChainNet<T>, batch: &Batch<T>) -> Result<f64> {
    let probs = net.forward_classify(&batch.inputs)?;
    let classes = net.config().class_count;
    let total: f64 = probs
        .data()
        .chunks_exact(classes)
        .zip(&batch.labels)
        .map(|(row, &label)| -row[label as usize].to_f64().unwrap_or(0.0).max(1e-12).ln())
        .sum();
    Ok(total / batch.len() as f64)
}

fn checkpoint_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.ckpt"))
}

/// Trains on `split.train`, validating on `split.val` after every epoch.
pub fn train<T: Scalar>(
    mut net: ChainNet<T>,
    records: &[FrameRecord],
    split: &Split,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<T>> {
    cfg.validate()?;
    if split.train.is_empty() {
        return Err(Error::Empty {
            what: "training split".into(),
        });
    }
    let signal_len = net.config().signal_length;
    let classes = net.config().class_count;
    if let Some(first) = records.get(split.train[0]) {
        if first.len() < signal_len {
            return Err(Error::Length(format!(
                "network signal length {signal_len} exceeds dataset frame length {}",
                first.len()
            )));
        }
    }
    if let Some(dir) = &cfg.checkpoint_dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    }

    let mut sgd = Sgd::new(cfg.learning_rate, cfg.momentum)?;
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, ParamSet<T>)> = None;
    let mut last_good: Option<PathBuf> = None;
    let shuffle_seed = seed::derive(cfg.seed, &[1]);

    for epoch in 0..cfg.epochs {
        sgd.learning_rate = cfg.learning_rate_at(epoch);
        let batches = Minibatches::<T>::new(
            records,
            &split.train,
            cfg.batch_size,
            shuffle_seed,
            epoch as u64,
            signal_len,
            classes,
        )?;
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for (b, batch) in batches.enumerate() {
            let batch = batch?;
            let step_seed = seed::derive(cfg.seed, &[2, epoch as u64, b as u64]);
            let step =
                train_step(&mut net, &mut sgd, &batch, step_seed, cfg.chunk_size).map_err(|e| {
                    match e {
                        Error::Divergence { reason, .. } => Error::Divergence {
                            epoch,
                            reason,
                            last_good: last_good.clone(),
                        },
                        other => other,
                    }
                })?;
            loss_sum += step.loss * batch.len() as f64;
            correct += step.correct;
        }
        let n = split.train.len() as f64;
        let (val_loss, val_accuracy) = if split.val.is_empty() {
            (None, None)
        } else {
            let report = evaluate(&net, records, &split.val, cfg.eval_batch)?;
            (Some(report.loss), Some(report.pooled_accuracy()))
        };
        let stats = EpochStats {
            epoch,
            learning_rate: sgd.learning_rate,
            train_loss: loss_sum / n,
            train_accuracy: correct as f64 / n,
            val_loss,
            val_accuracy,
        };
        log::info!(
            "epoch {:>3}  loss {:.4}  train acc {:.4}{}",
            epoch,
            stats.train_loss,
            stats.train_accuracy,
            val_accuracy.map_or(String::new(), |a| format!("  val acc {a:.4}"))
        );
        history.push(stats);

        let score = val_accuracy.unwrap_or(f64::INFINITY);
        if best
            .as_ref()
            .is_none_or(|(s, _, _)| score > *s || val_accuracy.is_none())
        {
            best = Some((score, epoch, net.params().clone()));
        }
        if let Some(dir) = &cfg.checkpoint_dir {
            if cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0 {
                let path = checkpoint_path(dir, &format!("epoch{:04}", epoch + 1));
                save_checkpoint(&net, &path)?;
                last_good = Some(path);
            }
        }
    }

    let (_, best_epoch, params) = best.expect("at least one epoch ran");
    net.params_mut().load_from(&params)?;
    if let Some(dir) = &cfg.checkpoint_dir {
        save_checkpoint(&net, &checkpoint_path(dir, "best"))?;
    }
    Ok(TrainOutcome {
        network: net,
        history,
        best_epoch,
    })
}
