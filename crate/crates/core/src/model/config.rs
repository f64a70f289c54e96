use std::fmt;

use crate::error::{Error, Result};

/// Width of the two hidden fully connected layers.
pub const HIDDEN_NODES: usize = 128;

/// Hyper-parameters that fully determine a Chain-Net instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkConfig {
    /// I/Q samples per frame.
    pub signal_length: usize,
    /// Kernels per convolutional layer.
    pub kernel_count: usize,
    pub class_count: usize,
    pub block_count: usize,
    pub dropout_ratio: f64,
    pub seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            signal_length: 1024,
            kernel_count: 64,
            class_count: 14,
            block_count: 6,
            dropout_ratio: 0.5,
            seed: 0,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.signal_length < 4 {
            return Err(Error::config(
                "signal_length",
                format!("{} is below the minimum of 4", self.signal_length),
            ));
        }
        if self.kernel_count == 0 {
            return Err(Error::config("kernel_count", "must be positive"));
        }
        if self.class_count == 0 {
            return Err(Error::config("class_count", "must be positive"));
        }
        if self.block_count == 0 {
            return Err(Error::config("block_count", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout_ratio) {
            return Err(Error::config(
                "dropout_ratio",
                format!("{} outside [0, 1)", self.dropout_ratio),
            ));
        }
        Ok(())
    }

    /// Closed-form scalar count over every weight and bias.
    pub fn count_parameters(&self) -> usize {
        let k = self.kernel_count;
        let stack = 5 * k + k;
        let horizontal = 3 * k * k + k;
        let vertical = 3 * k * k + k;
        let rescale = 2 * k * k + k;
        let blocks = self.block_count * (horizontal + vertical + rescale);
        let fc1 = 2 * k * HIDDEN_NODES + HIDDEN_NODES;
        let fc2 = HIDDEN_NODES * HIDDEN_NODES + HIDDEN_NODES;
        let fc3 = HIDDEN_NODES * self.class_count + self.class_count;
        stack + blocks + fc1 + fc2 + fc3
    }

    /// `key=value` lines, one per field.
    pub fn to_kv(&self) -> String {
        format!(
            "signal_length={}\nkernel_count={}\nclass_count={}\nblock_count={}\ndropout_ratio={}\nseed={}\n",
            self.signal_length, self.kernel_count, self.class_count, self.block_count, self.dropout_ratio, self.seed
        )
    }

    /// Applies one `key=value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<V: std::str::FromStr>(key: &str, value: &str) -> Result<V> {
            value
                .trim()
                .parse()
                .map_err(|_| Error::config(key, format!("cannot parse `{value}`")))
        }
        match key {
            "signal_length" => self.signal_length = parse(key, value)?,
            "kernel_count" => self.kernel_count = parse(key, value)?,
            "class_count" => self.class_count = parse(key, value)?,
            "block_count" => self.block_count = parse(key, value)?,
            "dropout_ratio" => self.dropout_ratio = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            _ => return Err(Error::config(key, "unknown network key")),
        }
        Ok(())
    }
}

impl fmt::Display for NetworkConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "l={} K={} C={} blocks={} dropout={}",
            self.signal_length,
            self.kernel_count,
            self.class_count,
            self.block_count,
            self.dropout_ratio
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_parameter_count() {
        assert_eq!(NetworkConfig::default().count_parameters(), 232_974);
    }

    #[test]
    fn class_count_only_touches_head() {
        let a = NetworkConfig::default();
        let b = NetworkConfig {
            class_count: 2,
            ..a
        };
        assert_eq!(a.count_parameters() - b.count_parameters(), 128 * 12 + 12);
    }

    #[test]
    fn monotone_in_kernels() {
        let count = |k| {
            NetworkConfig {
                kernel_count: k,
                ..Default::default()
            }
            .count_parameters()
        };
        assert!(count(16) < count(32) && count(32) < count(64) && count(64) < count(128));
    }

    #[test]
    fn validation() {
        let bad = NetworkConfig {
            signal_length: 3,
            ..Default::default()
        };
        assert!(bad
            .validate()
            .unwrap_err()
            .to_string()
            .contains("signal_length"));
        let bad = NetworkConfig {
            dropout_ratio: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(NetworkConfig::default().validate().is_ok());
    }

    #[test]
    fn kv_roundtrip() {
        let cfg = NetworkConfig {
            kernel_count: 16,
            seed: 99,
            dropout_ratio: 0.25,
            ..Default::default()
        };
        let mut back = NetworkConfig::default();
        for line in cfg.to_kv().lines() {
            let (k, v) = line.split_once('=').unwrap();
            back.set(k, v).unwrap();
        }
        assert_eq!(back, cfg);
    }
}
