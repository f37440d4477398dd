//! Truncation ranks from cumulative eigenvalue energy of the mode-n Gram matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::sym_eig;
use crate::tensor::{Matrix, SampleSet};

/// Eigenvalues below this fraction of the largest are treated as zero.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// Slack allowed when comparing a cumulative energy ratio with its threshold.
const RATIO_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankPolicy {
    pub sigmas: [f64; 3],
    /// Keep the full third mode (`R_3 = I_3`) regardless of `sigmas[2]`.
    pub fixed_r3_to_n: bool,
}

impl Default for RankPolicy {
    fn default() -> Self {
        Self {
            sigmas: [0.90, 0.90, 0.9985],
            fixed_r3_to_n: true,
        }
    }
}

impl RankPolicy {
    pub fn validate(&self) -> Result<()> {
        for &s in &self.sigmas {
            if !(s > 0.0 && s <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "energy thresholds must lie in (0, 1], got {s}"
                )));
            }
        }
        Ok(())
    }
}

/// Smallest `l` whose leading `l` eigenvalues hold at least `sigma` of the total.
///
/// `values` must be sorted descending.
pub fn rank_from_spectrum(values: &[f64], sigma: f64) -> Result<usize> {
    let lmax = values.first().copied().unwrap_or(0.0);
    if lmax.is_nan() || lmax <= 0.0 {
        return Err(Error::ZeroEnergy);
    }
    let floor = EIGEN_FLOOR * lmax;
    let clean: Vec<f64> = values
        .iter()
        .map(|&v| if v < floor { 0.0 } else { v })
        .collect();
    let total: f64 = clean.iter().sum();
    let mut acc = 0.0;
    for (l, &v) in clean.iter().enumerate() {
        acc += v;
        if acc / total >= sigma - RATIO_SLACK {
            return Ok(l + 1);
        }
    }
    Ok(clean.len())
}

/// `S_n = sum_i X_(n) X_(n)ᵀ` for mode `n`.
pub fn mode_gram(samples: &SampleSet, mode: usize) -> Result<Matrix> {
    let extent = samples.shape()[mode];
    let mut gram = Matrix::zeros(extent, extent);
    for x in samples {
        let unf = x.unfold(mode)?;
        let t = unf.transpose();
        gram.add_assign(&t.t_matmul(&t)?)?;
    }
    Ok(gram)
}

/// Eigenvalues of `S_n`, descending.
pub fn mode_spectrum(samples: &SampleSet, mode: usize) -> Result<Vec<f64>> {
    Ok(sym_eig(&mode_gram(samples, mode)?)?.values)
}

pub fn select_ranks(samples: &SampleSet, policy: &RankPolicy) -> Result<[usize; 3]> {
    policy.validate()?;
    let shape = samples.shape();
    let mut ranks = [0; 3];
    for mode in 0..3 {
        if mode == 2 && policy.fixed_r3_to_n {
            ranks[mode] = shape[2];
            continue;
        }
        let spectrum = mode_spectrum(samples, mode)?;
        ranks[mode] = rank_from_spectrum(&spectrum, policy.sigmas[mode])?.clamp(1, shape[mode]);
    }
    Ok(ranks)
}
