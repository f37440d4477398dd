//! Binary tensor files, sample manifests, and run artifacts.
//!
//! A tensor file is the magic `DTEN`, a little-endian `u32` format version,
//! a `u32` order, one `u64` extent per mode, and the entries as little-endian
//! `f64` with the first index varying fastest.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightStrategy;
use crate::solver::{CoreSet, FactorSet, Objective, SolverConfig, Stationarity, StoppingReason};
use crate::tensor::{DenseTensor, Matrix, SampleSet};

pub const MAGIC: &[u8; 4] = b"DTEN";
pub const FORMAT_VERSION: u32 = 1;

/// Refuse headers describing more modes than this; guards against garbage input.
const MAX_FILE_ORDER: u32 = 16;

pub fn encode_tensor<W: Write>(t: &DenseTensor, mut out: W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(t.order() as u32).to_le_bytes())?;
    for &e in t.shape() {
        out.write_all(&(e as u64).to_le_bytes())?;
    }
    for &v in t.as_slice() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Parses a tensor file; `path` is only used in error messages.
pub fn decode_tensor<R: Read>(mut input: R, path: &Path) -> Result<DenseTensor> {
    let fail = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut read = |buf: &mut [u8], what: &str| -> Result<()> {
        input.read_exact(buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => fail(format!("truncated {what}")),
            _ => Error::Io(e),
        })
    };

    let mut magic = [0u8; 4];
    read(&mut magic, "header")?;
    if &magic != MAGIC {
        return Err(fail(format!("bad magic {magic:?}, expected \"DTEN\"")));
    }
    let mut word = [0u8; 4];
    read(&mut word, "header")?;
    let version = u32::from_le_bytes(word);
    if version != FORMAT_VERSION {
        return Err(fail(format!("unsupported format version {version}")));
    }
    read(&mut word, "header")?;
    let order = u32::from_le_bytes(word);
    if order == 0 || order > MAX_FILE_ORDER {
        return Err(fail(format!("unsupported order {order}")));
    }
    let mut shape = Vec::with_capacity(order as usize);
    let mut long = [0u8; 8];
    for _ in 0..order {
        read(&mut long, "header")?;
        let e = usize::try_from(u64::from_le_bytes(long))
            .map_err(|_| fail("extent does not fit in memory".into()))?;
        shape.push(e);
    }
    let len = shape
        .iter()
        .try_fold(1usize, |acc, &e| acc.checked_mul(e))
        .ok_or_else(|| fail("extents overflow".into()))?;
    let mut bytes = vec![
        0u8;
        len.checked_mul(8)
            .ok_or_else(|| fail("extents overflow".into()))?
    ];
    read(&mut bytes, "payload")?;
    let mut trailing = [0u8; 1];
    if input.read(&mut trailing)? != 0 {
        return Err(fail("trailing bytes after payload".into()));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    DenseTensor::new(shape, data)
}

pub fn write_tensor(path: &Path, t: &DenseTensor) -> Result<()> {
    encode_tensor(t, BufWriter::new(File::create(path)?))
}

pub fn read_tensor(path: &Path) -> Result<DenseTensor> {
    decode_tensor(BufReader::new(File::open(path)?), path)
}

/// Stores a matrix as an order-2 tensor (rows × cols, column-major).
pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    write_tensor(
        path,
        &DenseTensor::new(vec![m.rows(), m.cols()], m.as_slice().to_vec())?,
    )
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let t = read_tensor(path)?;
    if t.order() != 2 {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: format!("expected an order-2 tensor, found order {}", t.order()),
        });
    }
    let (rows, cols) = (t.shape()[0], t.shape()[1]);
    Matrix::from_col_major(rows, cols, t.into_vec())
}

/// Samples listed in a manifest, in row order.
#[derive(Debug, Clone)]
pub struct LoadedSamples {
    pub samples: SampleSet,
    pub paths: Vec<PathBuf>,
    /// Present when every row carries a label.
    pub labels: Option<Vec<String>>,
}

/// Reads a `path,label` manifest; relative paths resolve against the
/// manifest's directory. An optional `path,label` header row is skipped.
/// Rows are numbered from 1, excluding the header.
pub fn load_samples(manifest: &Path) -> Result<LoadedSamples> {
    let base = manifest.parent().unwrap_or(Path::new("")).to_path_buf();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(manifest)?;

    let mut entries: Vec<(PathBuf, Option<String>)> = Vec::new();
    let mut first = true;
    for record in rdr.records() {
        let record = record?;
        if first && record.get(0) == Some("path") {
            first = false;
            continue;
        }
        first = false;
        let row = entries.len() + 1;
        let path = record
            .get(0)
            .filter(|p| !p.is_empty())
            .ok_or_else(|| Error::Manifest {
                row,
                message: "missing path".into(),
            })?;
        if record.len() > 2 {
            return Err(Error::Manifest {
                row,
                message: format!("expected at most 2 fields, found {}", record.len()),
            });
        }
        let label = record.get(1).filter(|l| !l.is_empty()).map(str::to_string);
        entries.push((base.join(path), label));
    }
    if entries.is_empty() {
        return Err(Error::Manifest {
            row: 0,
            message: format!("{} lists no samples", manifest.display()),
        });
    }

    let mut tensors: Vec<DenseTensor> = Vec::with_capacity(entries.len());
    for (idx, (path, _)) in entries.iter().enumerate() {
        let row = idx + 1;
        let t = read_tensor(path).map_err(|e| Error::Manifest {
            row,
            message: e.to_string(),
        })?;
        if t.order() != 3 {
            return Err(Error::Manifest {
                row,
                message: format!("{} has order {}, expected 3", path.display(), t.order()),
            });
        }
        if let Some(first) = tensors.first() {
            if first.shape() != t.shape() {
                return Err(Error::Manifest {
                    row,
                    message: format!(
                        "{} has shape {:?}, expected {:?}",
                        path.display(),
                        t.shape(),
                        first.shape()
                    ),
                });
            }
        }
        tensors.push(t);
    }

    let labelled = entries.iter().filter(|e| e.1.is_some()).count();
    let labels = if labelled == entries.len() {
        Some(entries.iter().map(|e| e.1.clone().unwrap()).collect())
    } else if labelled == 0 {
        None
    } else {
        let row = entries.iter().position(|e| e.1.is_none()).unwrap() + 1;
        return Err(Error::Manifest {
            row,
            message: "label missing while other rows are labelled".into(),
        });
    };
    Ok(LoadedSamples {
        samples: SampleSet::new(tensors)?,
        paths: entries.into_iter().map(|e| e.0).collect(),
        labels,
    })
}

/// Writes a manifest whose paths are stored exactly as given.
pub fn write_manifest(path: &Path, rows: &[(String, Option<String>)]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["path", "label"])?;
    for (p, l) in rows {
        wtr.write_record([p.as_str(), l.as_deref().unwrap_or("")])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Stacks the cores along a fourth mode: `R_1 × R_2 × R_3 × M`.
pub fn stack_cores(cores: &CoreSet) -> Result<DenseTensor> {
    let s = cores.shape();
    let mut data = Vec::with_capacity(s.iter().product::<usize>() * cores.len());
    for g in cores.iter() {
        data.extend_from_slice(g.as_slice());
    }
    DenseTensor::new(vec![s[0], s[1], s[2], cores.len()], data)
}

pub fn unstack_cores(stacked: &DenseTensor) -> Result<CoreSet> {
    if stacked.order() != 4 {
        return Err(Error::InvalidShape(format!(
            "stacked cores must have order 4, found {}",
            stacked.order()
        )));
    }
    let s = stacked.shape();
    let chunk = s[0] * s[1] * s[2];
    CoreSet::new(
        stacked
            .as_slice()
            .chunks_exact(chunk.max(1))
            .take(s[3])
            .map(|c| DenseTensor::new(vec![s[0], s[1], s[2]], c.to_vec()))
            .collect::<Result<_>>()?,
    )
}

pub const FACTOR_FILES: [&str; 3] = ["u1.dten", "u2.dten", "u3.dten"];
pub const CORES_FILE: &str = "cores.dten";
pub const TRACE_FILE: &str = "trace.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const SUMMARY_FILE: &str = "summary.json";

pub fn write_factors(dir: &Path, factors: &FactorSet) -> Result<()> {
    for (name, u) in FACTOR_FILES.iter().zip(&factors.u) {
        write_matrix(&dir.join(name), u)?;
    }
    Ok(())
}

pub fn read_factors(dir: &Path) -> Result<FactorSet> {
    Ok(FactorSet::new([
        read_matrix(&dir.join(FACTOR_FILES[0]))?,
        read_matrix(&dir.join(FACTOR_FILES[1]))?,
        read_matrix(&dir.join(FACTOR_FILES[2]))?,
    ]))
}

/// Writes `iter,wall_ms`, one row per iteration.
pub fn write_timing_csv<W: Write>(out: W, wall_ms: &[f64]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["iter", "wall_ms"])?;
    for (i, ms) in wall_ms.iter().enumerate() {
        wtr.write_record([(i + 1).to_string(), format!("{ms:.3}")])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads per-iteration wall times from a timing or trace CSV; blank cells are skipped.
pub fn read_wall_ms(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let col = rdr
        .headers()?
        .iter()
        .position(|h| h == "wall_ms")
        .ok_or_else(|| Error::Format {
            path: path.to_path_buf(),
            message: "no wall_ms column".into(),
        })?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if let Some(cell) = rec.get(col).filter(|c| !c.is_empty()) {
            out.push(cell.parse().map_err(|_| Error::Format {
                path: path.to_path_buf(),
                message: format!("bad wall_ms value {cell:?}"),
            })?);
        }
    }
    Ok(out)
}

/// The fully resolved settings of a `decompose` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub manifest: PathBuf,
    pub solver: SolverConfig,
    pub k: usize,
    pub weights: WeightStrategy,
    pub sigma: [f64; 3],
    pub fixed_r3_to_n: bool,
    pub ranks: [usize; 3],
    /// Whether `ranks` came from the command line instead of energy selection.
    pub ranks_given: bool,
    pub threads: Option<usize>,
}

/// Machine-readable record of a finished run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: RunConfig,
    pub samples: usize,
    pub shape: [usize; 3],
    pub iterations: usize,
    pub stop: StoppingReason,
    pub initial_objective: Objective,
    pub final_objective: Objective,
    pub final_relative_change: f64,
    pub reconstruction_error: f64,
    pub sparsity: f64,
    pub orthonormality_error: f64,
    pub stationarity: Stationarity,
    pub stationarity_max: f64,
}

pub fn write_summary(path: &Path, summary: &RunSummary) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<RunSummary> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}
