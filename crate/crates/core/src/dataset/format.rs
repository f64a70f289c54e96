use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use super::{synthesize_record, DatasetManifest, FrameRecord};
use crate::channel::Scenario;
use crate::error::{Error, Result};
use crate::modem::{Modem, ModulationScheme};

pub const MAGIC: &[u8; 4] = b"CNDS";
pub const VERSION: u16 = 1;
/// Trailing record count.
pub const FOOTER_BYTES: usize = 8;

impl DatasetManifest {
    pub fn header_size(&self) -> usize {
        4 + 2 + 4 + 1 + self.schemes.len() + 1 + self.snrs_db.len() + 4 + 1 + 8 + 8
    }

    /// Size of a complete dataset file.
    pub fn file_size(&self) -> usize {
        self.header_size() + self.record_count() * self.record_size() + FOOTER_BYTES
    }

    fn write_header<W: Write>(&self, out: &mut W) -> io::Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&(self.frame_len as u32).to_le_bytes())?;
        out.write_all(&[self.schemes.len() as u8])?;
        for s in &self.schemes {
            out.write_all(&[s.label()])?;
        }
        out.write_all(&[self.snrs_db.len() as u8])?;
        for &s in &self.snrs_db {
            out.write_all(&s.to_le_bytes())?;
        }
        out.write_all(&(self.frames_per_cell as u32).to_le_bytes())?;
        out.write_all(&[self.scenario.code()])?;
        out.write_all(&self.seed.to_le_bytes())?;
        out.write_all(&(self.record_count() as u64).to_le_bytes())
    }

    fn read_header<R: Read>(input: &mut R, path: &str) -> Result<Self> {
        let bad = |message: String| Error::Format {
            path: path.to_string(),
            message,
        };
        let io_err = |e: io::Error| Error::io(format!("reading header of {path}"), e);
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic).map_err(io_err)?;
        if &magic != MAGIC {
            return Err(bad(format!("bad magic {magic:?}, not a dataset file")));
        }
        let version = u16::from_le_bytes(read_array(input).map_err(io_err)?);
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let frame_len = u32::from_le_bytes(read_array(input).map_err(io_err)?) as usize;
        let [n_schemes] = read_array(input).map_err(io_err)?;
        let mut schemes = Vec::with_capacity(n_schemes as usize);
        for _ in 0..n_schemes {
            let [label] = read_array(input).map_err(io_err)?;
            schemes.push(
                ModulationScheme::from_label(label)
                    .ok_or_else(|| bad(format!("unknown label {label}")))?,
            );
        }
        let [n_snrs] = read_array(input).map_err(io_err)?;
        let mut snrs_db = Vec::with_capacity(n_snrs as usize);
        for _ in 0..n_snrs {
            snrs_db.push(i8::from_le_bytes(read_array(input).map_err(io_err)?));
        }
        let frames_per_cell = u32::from_le_bytes(read_array(input).map_err(io_err)?) as usize;
        let [code] = read_array(input).map_err(io_err)?;
        let scenario = Scenario::from_code(code)
            .ok_or_else(|| bad(format!("unknown channel scenario {code}")))?;
        let seed = u64::from_le_bytes(read_array(input).map_err(io_err)?);
        let count = u64::from_le_bytes(read_array(input).map_err(io_err)?);
        let manifest = DatasetManifest {
            frame_len,
            schemes,
            snrs_db,
            frames_per_cell,
            scenario,
            seed,
        };
        manifest.validate().map_err(|e| bad(e.to_string()))?;
        if count != manifest.record_count() as u64 {
            return Err(bad(format!(
                "header announces {count} records, manifest implies {}",
                manifest.record_count()
            )));
        }
        Ok(manifest)
    }
}

fn read_array<R: Read, const N: usize>(input: &mut R) -> io::Result<[u8; N]> {
    let mut buf = [0u8; N];
    input.read_exact(&mut buf)?;
    Ok(buf)
}

fn write_record<W: Write>(record: &FrameRecord, out: &mut W) -> io::Result<()> {
    out.write_all(&[record.label])?;
    out.write_all(&record.snr_db.to_le_bytes())?;
    let mut bytes = Vec::with_capacity(record.iq.len() * 4);
    for v in &record.iq {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&bytes)
}

fn decode_record(bytes: &[u8]) -> FrameRecord {
    FrameRecord {
        label: bytes[0],
        snr_db: bytes[1] as i8,
        iq: bytes[2..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect(),
    }
}

/// Generates every record of `manifest` in cell order and writes the
/// complete file to `out`. The footer is written last, so an interrupted
/// write leaves a file that fails validation.
pub fn generate_dataset<W: Write>(manifest: &DatasetManifest, modem: &Modem, out: W) -> Result<()> {
    manifest.validate()?;
    let mut out = BufWriter::new(out);
    let io_err = |e| Error::io("writing dataset", e);
    manifest.write_header(&mut out).map_err(io_err)?;
    for (si, &scheme) in manifest.schemes.iter().enumerate() {
        for &snr in &manifest.snrs_db {
            for frame in 0..manifest.frames_per_cell {
                let record = synthesize_record(manifest, modem, scheme, snr, frame)?;
                write_record(&record, &mut out).map_err(io_err)?;
            }
        }
        log::debug!(
            "generated {} ({}/{})",
            scheme,
            si + 1,
            manifest.schemes.len()
        );
    }
    out.write_all(&(manifest.record_count() as u64).to_le_bytes())
        .map_err(io_err)?;
    out.flush().map_err(io_err)
}

/// Writes already synthesized records.
pub fn write_dataset<W: Write>(dataset: &Dataset, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    let io_err = |e| Error::io("writing dataset", e);
    dataset.manifest.write_header(&mut out).map_err(io_err)?;
    for record in &dataset.records {
        write_record(record, &mut out).map_err(io_err)?;
    }
    out.write_all(&(dataset.records.len() as u64).to_le_bytes())
        .map_err(io_err)?;
    out.flush().map_err(io_err)
}

/// Generates into `path` through a temporary sibling that is renamed on
/// success.
pub fn write_dataset_file(manifest: &DatasetManifest, modem: &Modem, path: &Path) -> Result<()> {
    let tmp = path.with_extension("partial");
    let file =
        File::create(&tmp).map_err(|e| Error::io(format!("creating {}", tmp.display()), e))?;
    generate_dataset(manifest, modem, file)?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(format!("renaming to {}", path.display()), e))
}

/// Random access to records of a dataset file.
pub struct DatasetReader<R> {
    manifest: DatasetManifest,
    inner: R,
    data_start: u64,
}

impl DatasetReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self> {
        let file =
            File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        let len = file
            .metadata()
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?
            .len();
        let mut reader = DatasetReader::new(BufReader::new(file), &path.display().to_string())?;
        let expected = reader.manifest.file_size() as u64;
        if len != expected {
            return Err(Error::Format {
                path: path.display().to_string(),
                message: format!("file has {len} bytes, a complete dataset has {expected}; truncated or partial write"),
            });
        }
        reader.check_footer(&path.display().to_string())?;
        Ok(reader)
    }
}

impl<R: Read + Seek> DatasetReader<R> {
    pub fn new(mut inner: R, name: &str) -> Result<Self> {
        let manifest = DatasetManifest::read_header(&mut inner, name)?;
        let data_start = manifest.header_size() as u64;
        Ok(DatasetReader {
            manifest,
            inner,
            data_start,
        })
    }

    pub fn manifest(&self) -> &DatasetManifest {
        &self.manifest
    }

    fn check_footer(&mut self, name: &str) -> Result<()> {
        let offset =
            self.data_start + (self.manifest.record_count() * self.manifest.record_size()) as u64;
        let io_err = |e| Error::io(format!("reading footer of {name}"), e);
        self.inner.seek(SeekFrom::Start(offset)).map_err(io_err)?;
        let count = u64::from_le_bytes(read_array(&mut self.inner).map_err(io_err)?);
        if count != self.manifest.record_count() as u64 {
            return Err(Error::Format {
                path: name.to_string(),
                message: format!(
                    "footer counts {count} records, expected {}",
                    self.manifest.record_count()
                ),
            });
        }
        Ok(())
    }

    pub fn record(&mut self, index: usize) -> Result<FrameRecord> {
        if index >= self.manifest.record_count() {
            return Err(Error::Length(format!(
                "record {index} out of range for {} records",
                self.manifest.record_count()
            )));
        }
        let size = self.manifest.record_size();
        let io_err = |e| Error::io(format!("reading record {index}"), e);
        self.inner
            .seek(SeekFrom::Start(self.data_start + (index * size) as u64))
            .map_err(io_err)?;
        let mut buf = vec![0u8; size];
        self.inner.read_exact(&mut buf).map_err(io_err)?;
        Ok(decode_record(&buf))
    }
}

/// A dataset held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub records: Vec<FrameRecord>,
}

impl Dataset {
    /// Synthesizes all records without touching the file system.
    pub fn generate(manifest: &DatasetManifest, modem: &Modem) -> Result<Self> {
        manifest.validate()?;
        let mut records = Vec::with_capacity(manifest.record_count());
        for &scheme in &manifest.schemes {
            for &snr in &manifest.snrs_db {
                for frame in 0..manifest.frames_per_cell {
                    records.push(synthesize_record(manifest, modem, scheme, snr, frame)?);
                }
            }
        }
        Ok(Dataset {
            manifest: manifest.clone(),
            records,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Keeps only the records whose positions appear in `indices`.
    pub fn subset(&self, indices: &[usize]) -> Vec<&FrameRecord> {
        indices.iter().map(|&i| &self.records[i]).collect()
    }
}

/// Loads and validates a complete dataset file.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    if !path.exists() {
        return Err(Error::MissingDataset {
            path: path.to_path_buf(),
            hint: format!(
                "chainnet gen --out {}",
                path.parent()
                    .map_or(".".into(), |p| p.display().to_string())
            ),
        });
    }
    let mut reader = DatasetReader::open(path)?;
    let manifest = reader.manifest.clone();
    let size = manifest.record_size();
    let name = path.display().to_string();
    reader
        .inner
        .seek(SeekFrom::Start(reader.data_start))
        .map_err(|e| Error::io(format!("reading {name}"), e))?;
    let mut records = Vec::with_capacity(manifest.record_count());
    let mut buf = vec![0u8; size];
    for i in 0..manifest.record_count() {
        reader
            .inner
            .read_exact(&mut buf)
            .map_err(|e| Error::io(format!("reading record {i} of {name}"), e))?;
        records.push(decode_record(&buf));
    }
    Ok(Dataset { manifest, records })
}
