//! k-nearest-neighbor weight graph over tensor samples.
//!
//! Two samples are connected when either is among the other's `k` nearest
//! neighbors in Frobenius distance. Ties are broken by lower sample index.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{DenseTensor, Matrix, SampleSet};

/// Heat-kernel bandwidth used when none is given.
pub const DEFAULT_HEAT_DELTA: f64 = 5000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightStrategy {
    Binary,
    HeatKernel { delta: f64 },
    Cosine,
}

impl fmt::Display for WeightStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightStrategy::Binary => write!(f, "binary"),
            WeightStrategy::HeatKernel { delta } => write!(f, "heat:{delta}"),
            WeightStrategy::Cosine => write!(f, "cosine"),
        }
    }
}

impl FromStr for WeightStrategy {
    type Err = Error;

    /// Parses `binary`, `cosine`, `heat` or `heat:DELTA`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(Self::Binary),
            "cosine" => Ok(Self::Cosine),
            "heat" => Ok(Self::HeatKernel {
                delta: DEFAULT_HEAT_DELTA,
            }),
            _ => {
                let delta = s
                    .strip_prefix("heat:")
                    .and_then(|d| d.parse::<f64>().ok())
                    .ok_or_else(|| {
                        Error::InvalidParameter(format!(
                            "unknown weight strategy `{s}` (expected binary, cosine or heat:DELTA)"
                        ))
                    })?;
                Ok(Self::HeatKernel { delta })
            }
        }
    }
}

/// Symmetric nonnegative weights with zero diagonal.
#[derive(Debug, Clone)]
pub struct WeightGraph {
    m: usize,
    k: usize,
    strategy: WeightStrategy,
    w: Matrix,
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl WeightGraph {
    /// Graph without edges; turns the manifold term off.
    pub fn empty(m: usize) -> Self {
        Self {
            m,
            k: 0,
            strategy: WeightStrategy::Binary,
            w: Matrix::zeros(m, m),
            neighbors: vec![Vec::new(); m],
        }
    }

    /// Wraps an explicit weight matrix after checking symmetry, sign and diagonal.
    pub fn from_weights(w: Matrix) -> Result<Self> {
        let m = w.rows();
        if w.cols() != m {
            return Err(Error::DimensionMismatch(format!(
                "weight matrix must be square, got {}x{}",
                w.rows(),
                w.cols()
            )));
        }
        for i in 0..m {
            if w.get(i, i) != 0.0 {
                return Err(Error::InvalidParameter(format!("w[{i},{i}] must be zero")));
            }
            for j in 0..m {
                let v = w.get(i, j);
                if !(v >= 0.0 && v.is_finite()) || v != w.get(j, i) {
                    return Err(Error::InvalidParameter(format!(
                        "weights must be finite, nonnegative and symmetric (w[{i},{j}] = {v})"
                    )));
                }
            }
        }
        let neighbors = adjacency(&w);
        Ok(Self {
            m,
            k: 0,
            strategy: WeightStrategy::Binary,
            w,
            neighbors,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn strategy(&self) -> WeightStrategy {
        self.strategy
    }

    pub fn weights(&self) -> &Matrix {
        &self.w
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.w.get(i, j)
    }

    /// Nonzero-weight neighbors of `i`, in ascending index order.
    #[inline]
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[i]
    }

    /// `s_i = sum_{j != i} w_ij` for every sample.
    pub fn row_sums(&self) -> Vec<f64> {
        self.neighbors
            .iter()
            .map(|row| row.iter().map(|&(_, w)| w).sum())
            .collect()
    }

    /// Edges `(i, j, w_ij)` with `i < j` and nonzero weight.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.neighbors.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .filter(move |&&(j, _)| j > i)
                .map(move |&(j, w)| (i, j, w))
        })
    }

    /// Writes the edge list as CSV with header `i,j,w`.
    pub fn write_edges_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["i", "j", "w"])?;
        for (i, j, w) in self.edges() {
            wtr.write_record([i.to_string(), j.to_string(), format!("{w:e}")])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn adjacency(w: &Matrix) -> Vec<Vec<(usize, f64)>> {
    let m = w.rows();
    (0..m)
        .map(|i| {
            (0..m)
                .filter(|&j| j != i && w.get(i, j) != 0.0)
                .map(|j| (j, w.get(i, j)))
                .collect()
        })
        .collect()
}

/// Squared Frobenius distances between every pair of tensors.
pub(crate) fn pairwise_sq_distances(items: &[DenseTensor]) -> Result<Matrix> {
    let m = items.len();
    let mut d = Matrix::zeros(m, m);
    for i in 0..m {
        for j in i + 1..m {
            let v = items[i].distance_sq(&items[j])?;
            d.set(i, j, v);
            d.set(j, i, v);
        }
    }
    Ok(d)
}

/// Indices of the `k` nearest neighbors of `i`, nearest first, ties by index.
pub(crate) fn knn_indices(dist: &Matrix, i: usize, k: usize) -> Vec<usize> {
    let mut others: Vec<usize> = (0..dist.rows()).filter(|&j| j != i).collect();
    others.sort_by(|&a, &b| dist.get(i, a).total_cmp(&dist.get(i, b)).then(a.cmp(&b)));
    others.truncate(k);
    others
}

/// Builds the symmetric k-NN weight graph over `samples`.
pub fn build_graph(samples: &SampleSet, k: usize, strategy: WeightStrategy) -> Result<WeightGraph> {
    let m = samples.len();
    if m < 2 {
        return Err(Error::InvalidParameter(
            "a neighbor graph needs at least two samples".into(),
        ));
    }
    if k == 0 || k >= m {
        return Err(Error::InvalidParameter(format!(
            "k must lie in 1..={}, got {k}",
            m - 1
        )));
    }
    if let WeightStrategy::HeatKernel { delta } = strategy {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "heat kernel delta must be positive, got {delta}"
            )));
        }
    }

    let dist = pairwise_sq_distances(samples.as_slice())?;
    let norms: Vec<f64> = samples.iter().map(DenseTensor::frobenius_norm).collect();
    if strategy == WeightStrategy::Cosine {
        if let Some(i) = norms.iter().position(|&n| n == 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sample {i} has zero norm; cosine weights are undefined"
            )));
        }
    }

    let mut connected = vec![false; m * m];
    for i in 0..m {
        for j in knn_indices(&dist, i, k) {
            connected[i * m + j] = true;
            connected[j * m + i] = true;
        }
    }

    let mut w = Matrix::zeros(m, m);
    for i in 0..m {
        for j in i + 1..m {
            if !connected[i * m + j] {
                continue;
            }
            let v = match strategy {
                WeightStrategy::Binary => 1.0,
                WeightStrategy::HeatKernel { delta } => (-dist.get(i, j) / delta).exp(),
                WeightStrategy::Cosine => {
                    let c = samples.get(i).inner(samples.get(j))? / (norms[i] * norms[j]);
                    c.clamp(0.0, 1.0)
                }
            };
            w.set(i, j, v);
            w.set(j, i, v);
        }
    }

    let neighbors = adjacency(&w);
    Ok(WeightGraph {
        m,
        k,
        strategy,
        w,
        neighbors,
    })
}
