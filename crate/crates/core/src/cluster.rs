//! Distribution of the number of consecutive components, after a pivot
//! component κ, that exceed a high threshold together with it.
//!
//! Given that component κ exceeds, the run length L counts how many of
//! κ+1, κ+2, ... exceed consecutively as well. Its limiting survival
//! function is
//!   s_κ(k) = P(L >= k) = Σ_{∅ ≠ T ⊆ {κ..κ+k}} (-1)^{|T|+1} ‖Σ_{i in T} γ_i e_i‖_D
//! (the inclusion-exclusion form of E(min_{κ <= i <= κ+k} γ_i Z_i), using
//! γ_κ = 1), and pmf, cdf and mean all derive from it.

use serde::{Deserialize, Serialize};

use crate::dnorm::DNorm;
use crate::error::{Error, Result};
use crate::exceedance::TailRatios;
use crate::util::binomial;

/// Cancellation tolerance: survival and pmf values this far below zero are
/// treated as zero; anything lower is an internal error.
const NEG_TOL: f64 = 1e-9;

/// Limiting distribution of the run length L in {0, ..., d-1-κ}.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterLengthDistribution {
    kappa: usize,
    survival: Vec<f64>,
    pmf: Vec<f64>,
    cdf: Vec<f64>,
    mean: f64,
}

impl ClusterLengthDistribution {
    /// Pivot index (0-based).
    pub fn kappa(&self) -> usize {
        self.kappa
    }

    /// Largest possible run length, d - 1 - κ.
    pub fn max_length(&self) -> usize {
        self.pmf.len() - 1
    }

    /// P(L >= k).
    pub fn survival(&self, k: usize) -> f64 {
        self.survival[k]
    }

    /// P(L = k).
    pub fn pmf(&self, k: usize) -> f64 {
        self.pmf[k]
    }

    /// P(L <= k).
    pub fn cdf(&self, k: usize) -> f64 {
        self.cdf[k]
    }

    pub fn survivals(&self) -> &[f64] {
        &self.survival
    }

    pub fn pmfs(&self) -> &[f64] {
        &self.pmf
    }

    pub fn cdfs(&self) -> &[f64] {
        &self.cdf
    }

    /// E(L) = Σ_{k >= 1} s_κ(k).
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn to_report(&self) -> ClusterReport {
        ClusterReport {
            kappa: self.kappa + 1,
            survival: self.survival.clone(),
            pmf: self.pmf.clone(),
            cdf: self.cdf.clone(),
            mean: self.mean,
        }
    }
}

/// Wire form of the cluster-length distribution; `kappa` is 1-based.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterReport {
    pub kappa: usize,
    pub survival: Vec<f64>,
    pub pmf: Vec<f64>,
    pub cdf: Vec<f64>,
    pub mean: f64,
}

fn range_mask(kappa: usize, k: usize) -> u32 {
    ((1u32 << (k + 1)) - 1) << kappa
}

fn clamp_small_negative(v: f64, what: &str) -> Result<f64> {
    if v < 0.0 {
        if v >= -NEG_TOL {
            return Ok(0.0);
        }
        return Err(Error::Internal(format!(
            "{what} = {v} is materially negative"
        )));
    }
    Ok(v)
}

/// s_κ(k) = P(L >= k) in the limit, for 0 <= k <= d-1-κ. The pivot κ is the
/// one carried by the tail ratios.
pub fn survival(norm: &DNorm, tr: &TailRatios, k: usize) -> Result<f64> {
    if norm.dim() != tr.dim() {
        return Err(Error::DimensionMismatch {
            expected: norm.dim(),
            got: tr.dim(),
        });
    }
    let max = tr.dim() - 1 - tr.kappa();
    if k > max {
        return Err(Error::ClusterLengthOutOfRange { k, max });
    }
    let raw = norm.alternating_min_mask(tr.gamma(), range_mask(tr.kappa(), k));
    clamp_small_negative(raw, "cluster survival")
}

fn survivals(norm: &DNorm, tr: &TailRatios) -> Result<Vec<f64>> {
    (0..=tr.dim() - 1 - tr.kappa())
        .map(|k| survival(norm, tr, k))
        .collect()
}

/// The full limiting run-length distribution at the pivot carried by the
/// tail ratios. Cancellation noise in the pmf is clamped at 1e-9 and the
/// pmf renormalized; the cdf keeps the exact form 1 - s_κ(k+1).
pub fn cluster_pmf(norm: &DNorm, tr: &TailRatios) -> Result<ClusterLengthDistribution> {
    let s = survivals(norm, tr)?;
    let n = s.len() - 1;
    let mut pmf = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let raw = if k < n { s[k] - s[k + 1] } else { s[n] };
        pmf.push(clamp_small_negative(raw, "cluster pmf")?);
    }
    let total: f64 = pmf.iter().sum();
    if total > 0.0 {
        for p in pmf.iter_mut() {
            *p /= total;
        }
    }
    let cdf: Vec<f64> = (0..=n)
        .map(|k| {
            if k < n {
                (1.0 - s[k + 1]).clamp(0.0, 1.0)
            } else {
                1.0
            }
        })
        .collect();
    let mean = s[1..].iter().sum();
    Ok(ClusterLengthDistribution {
        kappa: tr.kappa(),
        survival: s,
        pmf,
        cdf,
        mean,
    })
}

/// E(L) = Σ_{k=1}^{d-1-κ} s_κ(k), without materializing the pmf.
pub fn mean_cluster_length(norm: &DNorm, tr: &TailRatios) -> Result<f64> {
    let s = survivals(norm, tr)?;
    Ok(s[1..].iter().sum())
}

/// Closed form for the mean run length when the norm is exchangeable in its
/// arguments and the tail ratios are all 1 (caller-asserted; not checkable
/// from finitely many evaluations). With n = d - 1 - κ:
///   E(L) = -1 + Σ_{j=1}^{n+1} (-1)^{j+1} C(n+2, j+1) ‖e_1 + ... + e_j‖_D.
pub fn exchangeable_mean(norm: &DNorm, kappa: usize) -> Result<f64> {
    let d = norm.dim();
    if kappa >= d {
        return Err(Error::KappaOutOfRange { kappa, d });
    }
    let n = d - 1 - kappa;
    let ones = vec![1.0; d];
    let mut acc = -1.0;
    for j in 1..=n + 1 {
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        let mask = (1u32 << j) - 1;
        acc += sign * binomial(n + 2, j + 1) * norm.eval_mask(&ones, mask);
    }
    clamp_small_negative(acc, "exchangeable mean run length")
}
