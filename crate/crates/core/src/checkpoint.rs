//! Model checkpoints: a text header with the network configuration followed
//! by the binary weight blob.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use chainnet_nn::checkpoint::{read_weights, write_weights};
use chainnet_nn::{ParamSet, Scalar};

use crate::error::{Error, Result};
use crate::model::{ChainNet, NetworkConfig};

const HEADER: &str = "chainnet-checkpoint v1";
const SEPARATOR: &str = "---";

pub fn write_checkpoint<T: Scalar, W: Write>(net: &ChainNet<T>, out: &mut W) -> Result<()> {
    let io_err = |e| Error::io("writing checkpoint", e);
    writeln!(out, "{HEADER}").map_err(io_err)?;
    out.write_all(net.config().to_kv().as_bytes())
        .map_err(io_err)?;
    writeln!(out, "{SEPARATOR}").map_err(io_err)?;
    write_weights(net.params(), out)?;
    Ok(())
}

pub fn read_checkpoint<T: Scalar, R: Read>(input: R, name: &str) -> Result<ChainNet<T>> {
    let bad = |message: String| Error::Format {
        path: name.to_string(),
        message,
    };
    let mut input = BufReader::new(input);
    let mut line = String::new();
    let mut next_line = |line: &mut String| -> Result<()> {
        line.clear();
        let n = input
            .read_line(line)
            .map_err(|e| Error::io(format!("reading {name}"), e))?;
        if n == 0 {
            return Err(bad("unexpected end of checkpoint header".into()));
        }
        Ok(())
    };
    next_line(&mut line)?;
    if line.trim_end() != HEADER {
        return Err(bad(format!(
            "not a checkpoint (first line {:?})",
            line.trim_end()
        )));
    }
    let mut config = NetworkConfig::default();
    loop {
        next_line(&mut line)?;
        let entry = line.trim_end();
        if entry == SEPARATOR {
            break;
        }
        let (key, value) = entry
            .split_once('=')
            .ok_or_else(|| bad(format!("malformed header line {entry:?}")))?;
        config.set(key.trim(), value)?;
    }
    let mut net = ChainNet::<T>::new(config)?;
    let weights: ParamSet<T> = read_weights(&mut input)?;
    net.params_mut()
        .load_from(&weights)
        .map_err(|e| bad(format!("weights do not fit the configured network: {e}")))?;
    Ok(net)
}

pub fn save_checkpoint<T: Scalar>(net: &ChainNet<T>, path: &Path) -> Result<()> {
    let file =
        File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    let mut out = BufWriter::new(file);
    write_checkpoint(net, &mut out)?;
    out.flush()
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<ChainNet<T>> {
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    read_checkpoint(file, &path.display().to_string())
}
