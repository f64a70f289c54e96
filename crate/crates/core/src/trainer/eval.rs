use chainnet_nn::Scalar;

use super::argmax;
use crate::dataset::{Batch, FrameRecord, CLEAN_SNR};
use crate::error::{Error, Result};
use crate::model::ChainNet;
use crate::modem::ModulationScheme;

/// Decisions for one SNR value.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrBucket {
    pub snr_db: i8,
    /// `confusion[true][predicted]`
    pub confusion: Vec<Vec<usize>>,
    pub loss_sum: f64,
}

impl SnrBucket {
    fn new(snr_db: i8, classes: usize) -> Self {
        SnrBucket {
            snr_db,
            confusion: vec![vec![0; classes]; classes],
            loss_sum: 0.0,
        }
    }

    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    pub fn correct(&self) -> usize {
        (0..self.confusion.len())
            .map(|i| self.confusion[i][i])
            .sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.correct() as f64 / self.total().max(1) as f64
    }

    pub fn loss(&self) -> f64 {
        self.loss_sum / self.total().max(1) as f64
    }

    /// Frames of each true class.
    pub fn class_counts(&self) -> Vec<usize> {
        self.confusion.iter().map(|row| row.iter().sum()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub classes: usize,
    /// Sorted by SNR.
    pub buckets: Vec<SnrBucket>,
    /// Mean cross-entropy over every evaluated frame.
    pub loss: f64,
}

impl EvalReport {
    pub fn bucket(&self, snr_db: i8) -> Option<&SnrBucket> {
        self.buckets.iter().find(|b| b.snr_db == snr_db)
    }

    pub fn accuracy_at(&self, snr_db: i8) -> Option<f64> {
        self.bucket(snr_db).map(SnrBucket::accuracy)
    }

    pub fn total(&self) -> usize {
        self.buckets.iter().map(SnrBucket::total).sum()
    }

    /// Correct decisions over all frames.
    pub fn pooled_accuracy(&self) -> f64 {
        let correct: usize = self.buckets.iter().map(SnrBucket::correct).sum();
        correct as f64 / self.total().max(1) as f64
    }

    /// Unweighted mean of the per-SNR accuracies.
    pub fn mean_snr_accuracy(&self) -> f64 {
        self.buckets.iter().map(SnrBucket::accuracy).sum::<f64>() / self.buckets.len().max(1) as f64
    }

    /// Confusion matrix summed over SNRs.
    pub fn confusion(&self) -> Vec<Vec<usize>> {
        let mut total = vec![vec![0; self.classes]; self.classes];
        for b in &self.buckets {
            for (t, row) in b.confusion.iter().enumerate() {
                for (p, v) in row.iter().enumerate() {
                    total[t][p] += v;
                }
            }
        }
        total
    }

    /// `epoch,split,snr_db,accuracy,loss` rows: one per SNR plus two
    /// overall rows (`all_pooled`, `all_mean`).
    pub fn to_csv(&self, epoch: Option<usize>, split: &str) -> String {
        let epoch = epoch.map_or(String::new(), |e| e.to_string());
        let mut out = String::from("epoch,split,snr_db,accuracy,loss\n");
        for b in &self.buckets {
            out.push_str(&format!(
                "{epoch},{split},{},{},{}\n",
                snr_label(b.snr_db),
                b.accuracy(),
                b.loss()
            ));
        }
        out.push_str(&format!(
            "{epoch},{split},all_pooled,{},{}\n",
            self.pooled_accuracy(),
            self.loss
        ));
        out.push_str(&format!(
            "{epoch},{split},all_mean,{},{}\n",
            self.mean_snr_accuracy(),
            self.loss
        ));
        out
    }

    /// Confusion matrix of one SNR as CSV with class names on both axes.
    pub fn confusion_csv(&self, snr_db: i8) -> Option<String> {
        let bucket = self.bucket(snr_db)?;
        let name = |i: usize| {
            if self.classes == ModulationScheme::COUNT {
                ModulationScheme::from_label(i as u8)
                    .map_or(i.to_string(), |m| m.name().to_string())
            } else {
                i.to_string()
            }
        };
        let mut out = String::from("true\\predicted");
        for p in 0..self.classes {
            out.push(',');
            out.push_str(&name(p));
        }
        out.push('\n');
        for (t, row) in bucket.confusion.iter().enumerate() {
            out.push_str(&name(t));
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        Some(out)
    }
}

pub(crate) fn snr_label(snr: i8) -> String {
    if snr == CLEAN_SNR {
        "clean".to_string()
    } else {
        snr.to_string()
    }
}

/// Argmax decisions of a frozen network over `indices`.
pub fn evaluate<T: Scalar>(
    net: &ChainNet<T>,
    records: &[FrameRecord],
    indices: &[usize],
    batch_size: usize,
) -> Result<EvalReport> {
    if indices.is_empty() {
        return Err(Error::Empty {
            what: "evaluation index set".into(),
        });
    }
    let classes = net.config().class_count;
    let signal_len = net.config().signal_length;
    let mut buckets: Vec<SnrBucket> = Vec::new();
    let mut loss_sum = 0.0;
    for chunk in indices.chunks(batch_size.max(1)) {
        let batch = Batch::<T>::assemble(records, chunk, signal_len, classes)?;
        let probs = net.forward_classify(&batch.inputs)?;
        for ((row, &label), &snr) in probs
            .data()
            .chunks_exact(classes)
            .zip(&batch.labels)
            .zip(&batch.snrs)
        {
            let loss = -row[label as usize].to_f64().unwrap_or(0.0).max(1e-12).ln();
            let pos = match buckets.binary_search_by_key(&snr, |b| b.snr_db) {
                Ok(p) => p,
                Err(p) => {
                    buckets.insert(p, SnrBucket::new(snr, classes));
                    p
                }
            };
            let bucket = &mut buckets[pos];
            bucket.confusion[label as usize][argmax(row)] += 1;
            bucket.loss_sum += loss;
            loss_sum += loss;
        }
    }
    Ok(EvalReport {
        classes,
        buckets,
        loss: loss_sum / indices.len() as f64,
    })
}
