//! D-norms and their generators.
//!
//! A D-norm on R^d is a norm of the form ‖x‖ = E(max_i |x_i| Z_i) for some
//! nonnegative random vector Z with E(Z_i) = 1 (a generator). Every such norm
//! evaluates to 1 at the coordinate vectors and sits between the max-norm and
//! the sum-norm. This module provides the closed-form families (sum/max,
//! lambda, Marshall-Olkin), norms backed by finitely supported generators, the
//! componentwise-uniform generator Z_i = 2 U_i, and seeded Monte-Carlo
//! evaluation for generators without a closed form.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::{indices_of, mask_of};

/// Largest supported dimension. Subset enumerations are O(2^d), so the cap
/// keeps every analytic routine tractable; float cancellation in the
/// alternating sums also grows with d (identities hold to ~1e-9 for d <= 12).
pub const MAX_DIMENSION: usize = 24;

/// Smallest dimension for which a D-norm is meaningful here.
pub const MIN_DIMENSION: usize = 2;

/// Tolerance on generator unit means and atom probability sums.
pub const GENERATOR_MEAN_TOLERANCE: f64 = 1e-12;

/// Fixed seed for the coordinate shuffles of [`DiscreteGenerator::stratified_uniform`],
/// so the discretized generator is a deterministic object.
const STRATIFIED_SHUFFLE_SEED: u64 = 0x5a7e_11ed_cafe_f00d;

fn check_dimension(d: usize) -> Result<()> {
    if !(MIN_DIMENSION..=MAX_DIMENSION).contains(&d) {
        return Err(Error::DimensionOutOfRange {
            d,
            min: MIN_DIMENSION,
            max: MAX_DIMENSION,
        });
    }
    Ok(())
}

/// Validates a coordinate vector against dimension d and returns its
/// componentwise absolute value; D-norms only see |x|.
fn checked_abs(x: &[f64], d: usize) -> Result<Vec<f64>> {
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    for (i, &v) in x.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFiniteComponent { index: i, value: v });
        }
    }
    Ok(x.iter().map(|v| v.abs()).collect())
}

/// Validates an index set against dimension d and returns it as a bitmask.
fn subset_mask(subset: &[usize], d: usize) -> Result<u32> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    let mut mask = 0u32;
    for &i in subset {
        if i >= d {
            return Err(Error::IndexOutOfRange { index: i, d });
        }
        if mask >> i & 1 == 1 {
            return Err(Error::DuplicateIndex(i));
        }
        mask |= 1 << i;
    }
    Ok(mask)
}

/// A finitely supported generator: atoms (p_ω, z(ω)) with p_ω > 0 summing to
/// one, z(ω) nonnegative and bounded, and E(Z_i) = 1 in every component.
///
/// Generators of dimension 1 are allowed (they back univariate simulation
/// models); a [`DNorm`] built from one requires d >= 2.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteGenerator {
    d: usize,
    atoms: Vec<(f64, Vec<f64>)>,
}

impl DiscreteGenerator {
    pub fn new(atoms: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        let first = atoms.first().ok_or(Error::EmptyGenerator)?;
        let d = first.1.len();
        if d == 0 || d > MAX_DIMENSION {
            return Err(Error::DimensionOutOfRange {
                d,
                min: 1,
                max: MAX_DIMENSION,
            });
        }
        let mut p_sum = 0.0;
        for (a, (p, z)) in atoms.iter().enumerate() {
            if !p.is_finite() || *p <= 0.0 || *p > 1.0 {
                return Err(Error::AtomProbability { atom: a, p: *p });
            }
            p_sum += p;
            if z.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: z.len(),
                });
            }
            for (i, &v) in z.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::AtomComponent {
                        atom: a,
                        index: i,
                        value: v,
                    });
                }
            }
        }
        if (p_sum - 1.0).abs() > GENERATOR_MEAN_TOLERANCE {
            return Err(Error::AtomProbabilitySum(p_sum));
        }
        for i in 0..d {
            let mean: f64 = atoms.iter().map(|(p, z)| p * z[i]).sum();
            if (mean - 1.0).abs() > GENERATOR_MEAN_TOLERANCE {
                return Err(Error::GeneratorMean { index: i, mean });
            }
        }
        Ok(Self { d, atoms })
    }

    /// Three-point example generator on d = 3: each atom zeroes exactly one
    /// coordinate, so all three components are never positive together (the
    /// triple-exceedance mass vanishes) while every pair stays dependent.
    pub fn tripoint() -> Self {
        Self::new(vec![
            (1.0 / 6.0, vec![0.0, 1.5, 2.0]),
            (1.0 / 3.0, vec![1.2, 0.0, 2.0]),
            (1.0 / 2.0, vec![1.2, 1.5, 0.0]),
        ])
        .expect("tripoint atoms satisfy the generator constraints")
    }

    /// Discretizes the componentwise-uniform generator Z_i = 2 U_i to the
    /// given number of atoms: each coordinate takes the midpoints of equal
    /// strata of (0, 2), coupled across coordinates by seeded shuffles
    /// (Latin-hypercube style, fixed internal seed). Midpoints are dyadic
    /// rationals, so every component mean is exactly 1.
    pub fn stratified_uniform(d: usize, atoms: usize) -> Result<Self> {
        if d == 0 || d > MAX_DIMENSION {
            return Err(Error::DimensionOutOfRange {
                d,
                min: 1,
                max: MAX_DIMENSION,
            });
        }
        if atoms == 0 {
            return Err(Error::EmptyGenerator);
        }
        let midpoints: Vec<f64> = (0..atoms)
            .map(|j| 2.0 * (j as f64 + 0.5) / atoms as f64)
            .collect();
        let mut rng = ChaCha12Rng::seed_from_u64(STRATIFIED_SHUFFLE_SEED);
        let mut columns: Vec<Vec<usize>> = Vec::with_capacity(d);
        for i in 0..d {
            let mut perm: Vec<usize> = (0..atoms).collect();
            if i > 0 {
                // Fisher-Yates; the first coordinate keeps the identity order.
                for j in (1..atoms).rev() {
                    let k = rng.random_range(0..=j);
                    perm.swap(j, k);
                }
            }
            columns.push(perm);
        }
        let p = 1.0 / atoms as f64;
        let atoms_vec: Vec<(f64, Vec<f64>)> = (0..atoms)
            .map(|a| (p, (0..d).map(|i| midpoints[columns[i][a]]).collect()))
            .collect();
        Self::new(atoms_vec)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    /// Atoms as (probability, component values).
    pub fn atoms(&self) -> impl Iterator<Item = (f64, &[f64])> {
        self.atoms.iter().map(|(p, z)| (*p, z.as_slice()))
    }

    /// E(max_{i in K} w_i Z_i) by direct summation over the atoms.
    pub fn max_moment(&self, weights: &[f64], subset: &[usize]) -> Result<f64> {
        let w = checked_abs(weights, self.d)?;
        let mask = subset_mask(subset, self.d)?;
        Ok(self.moment_mask(&w, mask, Extremum::Max))
    }

    /// E(min_{i in K} w_i Z_i) by direct summation over the atoms.
    pub fn min_moment(&self, weights: &[f64], subset: &[usize]) -> Result<f64> {
        let w = checked_abs(weights, self.d)?;
        let mask = subset_mask(subset, self.d)?;
        Ok(self.moment_mask(&w, mask, Extremum::Min))
    }

    pub(crate) fn moment_mask(&self, w: &[f64], mask: u32, which: Extremum) -> f64 {
        self.atoms
            .iter()
            .map(|(p, z)| {
                let mut acc = match which {
                    Extremum::Max => f64::NEG_INFINITY,
                    Extremum::Min => f64::INFINITY,
                };
                for i in indices_of(mask) {
                    let v = w[i] * z[i];
                    acc = match which {
                        Extremum::Max => acc.max(v),
                        Extremum::Min => acc.min(v),
                    };
                }
                p * acc
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Extremum {
    Max,
    Min,
}

/// Sampler backing a Monte-Carlo evaluated norm.
#[derive(Debug, Clone, PartialEq)]
pub enum McSampler {
    /// Z_i = 2 U_i with independent standard uniforms.
    IidUniform,
    /// The built-in [`DiscreteGenerator::tripoint`] generator (d = 3).
    Tripoint,
    /// Draws atoms of an explicit finitely supported generator.
    Discrete(DiscreteGenerator),
}

/// Cached draw matrix of a Monte-Carlo norm. Draws are generated once at
/// construction from a single ChaCha12 stream and reused for every
/// evaluation, so repeated and combined evaluations see common random
/// numbers and inclusion-exclusion identities hold pointwise per draw.
/// Columns are rescaled to unit sample mean, which pins the norm of each
/// coordinate vector at 1 up to float summation error.
#[derive(Debug, Clone)]
struct McState {
    sampler: McSampler,
    n_samples: usize,
    seed: u64,
    /// Row-major n_samples x d.
    draws: Arc<Vec<f64>>,
}

impl McState {
    fn new(sampler: McSampler, d: usize, n_samples: usize, seed: u64) -> Result<Self> {
        if n_samples == 0 {
            return Err(Error::InvalidSampleCount(n_samples));
        }
        match &sampler {
            McSampler::IidUniform => {}
            McSampler::Tripoint => {
                if d != 3 {
                    return Err(Error::DimensionMismatch { expected: 3, got: d });
                }
            }
            McSampler::Discrete(g) => {
                if g.dim() != d {
                    return Err(Error::DimensionMismatch {
                        expected: g.dim(),
                        got: d,
                    });
                }
            }
        }
        let mut draws = vec![0.0f64; n_samples * d];
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        match &sampler {
            McSampler::IidUniform => {
                for v in draws.iter_mut() {
                    *v = 2.0 * rng.random::<f64>();
                }
            }
            McSampler::Tripoint | McSampler::Discrete(_) => {
                let gen = match &sampler {
                    McSampler::Tripoint => DiscreteGenerator::tripoint(),
                    McSampler::Discrete(g) => g.clone(),
                    McSampler::IidUniform => unreachable!(),
                };
                let mut cum = Vec::with_capacity(gen.atom_count());
                let mut acc = 0.0;
                for (p, _) in gen.atoms() {
                    acc += p;
                    cum.push(acc);
                }
                let atoms: Vec<&[f64]> = gen.atoms().map(|(_, z)| z).collect();
                for r in 0..n_samples {
                    let u = rng.random::<f64>();
                    let a = cum.partition_point(|&c| c <= u).min(atoms.len() - 1);
                    draws[r * d..(r + 1) * d].copy_from_slice(atoms[a]);
                }
            }
        }
        for i in 0..d {
            let mean = (0..n_samples).map(|r| draws[r * d + i]).sum::<f64>() / n_samples as f64;
            let usable = mean.is_finite() && mean > 0.0;
            if !usable {
                return Err(Error::Internal(format!(
                    "monte carlo draws for component {i} have nonpositive sample mean {mean}"
                )));
            }
            for r in 0..n_samples {
                draws[r * d + i] /= mean;
            }
        }
        Ok(Self {
            sampler,
            n_samples,
            seed,
            draws: Arc::new(draws),
        })
    }

    /// Mean and standard error of max_{i in mask} w_i Z_i over the cached draws.
    fn moment_mask_se(&self, d: usize, w: &[f64], mask: u32, which: Extremum) -> (f64, f64) {
        let idx = indices_of(mask);
        let n = self.n_samples;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for r in 0..n {
            let row = &self.draws[r * d..(r + 1) * d];
            let mut acc = match which {
                Extremum::Max => f64::NEG_INFINITY,
                Extremum::Min => f64::INFINITY,
            };
            for &i in &idx {
                let v = w[i] * row[i];
                acc = match which {
                    Extremum::Max => acc.max(v),
                    Extremum::Min => acc.min(v),
                };
            }
            sum += acc;
            sum_sq += acc * acc;
        }
        let mean = sum / n as f64;
        let var = (sum_sq / n as f64 - mean * mean).max(0.0);
        let se = if n > 1 {
            (var / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        (mean, se)
    }
}

#[derive(Debug, Clone)]
enum NormKind {
    /// (sum of x_i^lambda)^(1/lambda); lambda = 1 is the sum-norm.
    Lambda(f64),
    Max,
    /// theta * sum + (1 - theta) * max.
    MarshallOlkin(f64),
    Discrete(DiscreteGenerator),
    /// Exact piecewise integral of E(max 2 x_i U_i).
    IidUniform,
    MonteCarlo(McState),
}

/// A D-norm of fixed dimension, immutable after construction; evaluation is
/// pure and thread-safe.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "DNormJson", into = "DNormJson")]
pub struct DNorm {
    d: usize,
    kind: NormKind,
}

impl DNorm {
    /// Lambda-norm ‖x‖ = (Σ x_i^λ)^{1/λ}, λ >= 1. λ = 1 gives the sum-norm
    /// (independence), λ → ∞ the max-norm (complete dependence).
    pub fn lambda(d: usize, lambda: f64) -> Result<Self> {
        check_dimension(d)?;
        if !lambda.is_finite() || lambda < 1.0 {
            return Err(Error::InvalidLambda(lambda));
        }
        Ok(Self {
            d,
            kind: NormKind::Lambda(lambda),
        })
    }

    /// Sum-norm, the lambda-norm at λ = 1.
    pub fn sum_norm(d: usize) -> Result<Self> {
        Self::lambda(d, 1.0)
    }

    pub fn max_norm(d: usize) -> Result<Self> {
        check_dimension(d)?;
        Ok(Self {
            d,
            kind: NormKind::Max,
        })
    }

    /// Marshall-Olkin norm θ‖x‖_1 + (1-θ)‖x‖_∞, 0 <= θ <= 1.
    pub fn marshall_olkin(d: usize, theta: f64) -> Result<Self> {
        check_dimension(d)?;
        if !theta.is_finite() || !(0.0..=1.0).contains(&theta) {
            return Err(Error::InvalidTheta(theta));
        }
        Ok(Self {
            d,
            kind: NormKind::MarshallOlkin(theta),
        })
    }

    /// Norm generated by a finitely supported generator, evaluated exactly
    /// by summation over the atoms.
    pub fn from_generator(gen: DiscreteGenerator) -> Result<Self> {
        let d = gen.dim();
        check_dimension(d)?;
        Ok(Self {
            d,
            kind: NormKind::Discrete(gen),
        })
    }

    /// Norm of the componentwise-uniform generator Z_i = 2 U_i with
    /// independent U_i, evaluated by exact piecewise integration.
    pub fn iid_uniform(d: usize) -> Result<Self> {
        check_dimension(d)?;
        Ok(Self {
            d,
            kind: NormKind::IidUniform,
        })
    }

    /// Monte-Carlo evaluated norm: n_samples draws of the sampler are
    /// generated once (deterministically from the seed) and averaged at
    /// evaluation time.
    pub fn monte_carlo(sampler: McSampler, d: usize, n_samples: usize, seed: u64) -> Result<Self> {
        check_dimension(d)?;
        Ok(Self {
            d,
            kind: NormKind::MonteCarlo(McState::new(sampler, d, n_samples, seed)?),
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// The backing generator, when the norm carries an explicit one.
    pub fn discrete_generator(&self) -> Option<&DiscreteGenerator> {
        match &self.kind {
            NormKind::Discrete(g) => Some(g),
            _ => None,
        }
    }

    /// True when evaluation averages Monte-Carlo draws rather than an exact
    /// expression.
    pub fn is_monte_carlo(&self) -> bool {
        matches!(self.kind, NormKind::MonteCarlo(_))
    }

    /// ‖x‖_D. Accepts any finite vector of matching length; the norm only
    /// depends on componentwise absolute values.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let w = checked_abs(x, self.d)?;
        Ok(self.eval_mask(&w, full_mask(self.d)))
    }

    /// ‖x‖_D together with its Monte-Carlo standard error (0 for the exact
    /// variants).
    pub fn eval_se(&self, x: &[f64]) -> Result<(f64, f64)> {
        let w = checked_abs(x, self.d)?;
        match &self.kind {
            NormKind::MonteCarlo(mc) => {
                Ok(mc.moment_mask_se(self.d, &w, full_mask(self.d), Extremum::Max))
            }
            _ => Ok((self.eval_mask(&w, full_mask(self.d)), 0.0)),
        }
    }

    /// ‖Σ_{i in K} w_i e_i‖_D = E(max_{i in K} w_i Z_i).
    pub fn max_moment(&self, weights: &[f64], subset: &[usize]) -> Result<f64> {
        let w = checked_abs(weights, self.d)?;
        let mask = subset_mask(subset, self.d)?;
        Ok(self.eval_mask(&w, mask))
    }

    /// E(min_{i in K} w_i Z_i), recovered from the norm by
    /// inclusion-exclusion over the nonempty subsets of K. The value is
    /// determined by the norm alone, whichever generator represents it.
    pub fn min_moment(&self, weights: &[f64], subset: &[usize]) -> Result<f64> {
        let w = checked_abs(weights, self.d)?;
        let mask = subset_mask(subset, self.d)?;
        Ok(self.alternating_min_mask(&w, mask))
    }

    /// Norm of the vector restricted to the index set `mask`; entries outside
    /// the mask are treated as zero. `w` must be validated (nonnegative,
    /// finite, length d).
    pub(crate) fn eval_mask(&self, w: &[f64], mask: u32) -> f64 {
        debug_assert_eq!(w.len(), self.d);
        if mask == 0 {
            return 0.0;
        }
        match &self.kind {
            NormKind::Lambda(lambda) => lambda_mask(w, mask, *lambda),
            NormKind::Max => fold_mask(w, mask, f64::max),
            NormKind::MarshallOlkin(theta) => {
                let sum = fold_mask(w, mask, |a, b| a + b);
                let max = fold_mask(w, mask, f64::max);
                theta * sum + (1.0 - theta) * max
            }
            NormKind::Discrete(g) => g.moment_mask(w, mask, Extremum::Max),
            NormKind::IidUniform => {
                let mut b: Vec<f64> = indices_of(mask)
                    .into_iter()
                    .map(|i| 2.0 * w[i])
                    .filter(|v| *v > 0.0)
                    .collect();
                uniform_max_expectation(&mut b)
            }
            NormKind::MonteCarlo(mc) => mc.moment_mask_se(self.d, w, mask, Extremum::Max).0,
        }
    }

    /// Σ_{∅ ≠ T ⊆ mask} (-1)^{|T|+1} ‖w restricted to T‖, the
    /// inclusion-exclusion expression for E(min over the mask).
    pub(crate) fn alternating_min_mask(&self, w: &[f64], mask: u32) -> f64 {
        debug_assert_ne!(mask, 0);
        // For Monte-Carlo norms, take the pointwise minimum over the cached
        // draws directly: by the min-max identity this equals the alternating
        // sum exactly (common random numbers), without the 2^|K| loop.
        if let NormKind::MonteCarlo(mc) = &self.kind {
            return mc.moment_mask_se(self.d, w, mask, Extremum::Min).0;
        }
        let mut acc = 0.0;
        let mut t = mask;
        while t != 0 {
            let sign = if t.count_ones() % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * self.eval_mask(w, t);
            t = (t - 1) & mask;
        }
        acc
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub(crate) fn full_mask(d: usize) -> u32 {
    (1u32 << d) - 1
}

fn fold_mask(w: &[f64], mask: u32, f: impl Fn(f64, f64) -> f64) -> f64 {
    let mut acc = 0.0;
    for i in indices_of(mask) {
        acc = f(acc, w[i]);
    }
    acc
}

fn lambda_mask(w: &[f64], mask: u32, lambda: f64) -> f64 {
    let max = fold_mask(w, mask, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    if lambda == 1.0 {
        return fold_mask(w, mask, |a, b| a + b);
    }
    // Factor out the largest entry to keep powf well-conditioned for large
    // lambda.
    let mut sum = 0.0;
    for i in indices_of(mask) {
        if w[i] > 0.0 {
            sum += (w[i] / max).powf(lambda);
        }
    }
    max * sum.powf(1.0 / lambda)
}

/// E(max_i V_i) for independent V_i ~ U(0, b_i), b_i > 0; 0 for an empty
/// list. With r_i = b_i / b_max sorted ascending, the distribution function
/// of the max is piecewise polynomial and
///   E = b_max (1 - Σ_j (r_j^{e_j} - r_{j-1}^{e_j}) / (e_j Π_{i >= j} r_i)),
/// e_j = n - j + 1, integrating t^{n-j}/Π_{i>=j} r_i over [r_{j-1}, r_j].
fn uniform_max_expectation(b: &mut [f64]) -> f64 {
    let n = b.len();
    if n == 0 {
        return 0.0;
    }
    b.sort_unstable_by(|a, c| a.partial_cmp(c).expect("validated finite"));
    let b_max = b[n - 1];
    debug_assert!(b_max > 0.0);
    let r: Vec<f64> = b.iter().map(|v| v / b_max).collect();
    // suffix[j] = prod_{i >= j} r_i
    let mut suffix = vec![1.0; n + 1];
    for j in (0..n).rev() {
        suffix[j] = suffix[j + 1] * r[j];
    }
    let mut integral = 0.0;
    for j in 0..n {
        let e = (n - j + 1) as i32;
        let hi = r[j].powi(e);
        let lo = if j == 0 { 0.0 } else { r[j - 1].powi(e) };
        if suffix[j] > 0.0 && hi > lo {
            // When the suffix product underflows, the segment itself is
            // negligibly short (r_j^{n-j} < f64::MIN_POSITIVE), so skipping
            // it loses nothing.
            integral += (hi - lo) / (f64::from(e) * suffix[j]);
        }
    }
    b_max * (1.0 - integral)
}

// --- JSON wire form -------------------------------------------------------

#[derive(Serialize, Deserialize)]
pub(crate) struct AtomJson {
    pub(crate) p: f64,
    pub(crate) z: Vec<f64>,
}

#[derive(Serialize, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum McSamplerIdJson {
    IidUniform,
    Tripoint,
    Discrete,
}

/// Wire schema: {"family": ..., "d": ..., family-specific fields}.
#[derive(Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
enum DNormJson {
    Lambda {
        d: usize,
        lambda: f64,
    },
    Max {
        d: usize,
    },
    MarshallOlkin {
        d: usize,
        theta: f64,
    },
    DiscreteGenerator {
        d: usize,
        atoms: Vec<AtomJson>,
    },
    IidUniform {
        d: usize,
    },
    McGenerator {
        d: usize,
        sampler: McSamplerIdJson,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        atoms: Option<Vec<AtomJson>>,
        n_samples: usize,
        seed: u64,
    },
}

pub(crate) fn atoms_to_generator(atoms: Vec<AtomJson>) -> Result<DiscreteGenerator> {
    DiscreteGenerator::new(atoms.into_iter().map(|a| (a.p, a.z)).collect())
}

fn atoms_from_json(atoms: Vec<AtomJson>, d: usize) -> Result<DiscreteGenerator> {
    let gen = atoms_to_generator(atoms)?;
    if gen.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: gen.dim(),
        });
    }
    Ok(gen)
}

pub(crate) fn atoms_to_json(gen: &DiscreteGenerator) -> Vec<AtomJson> {
    gen.atoms()
        .map(|(p, z)| AtomJson { p, z: z.to_vec() })
        .collect()
}

impl TryFrom<DNormJson> for DNorm {
    type Error = Error;

    fn try_from(j: DNormJson) -> Result<Self> {
        match j {
            DNormJson::Lambda { d, lambda } => DNorm::lambda(d, lambda),
            DNormJson::Max { d } => DNorm::max_norm(d),
            DNormJson::MarshallOlkin { d, theta } => DNorm::marshall_olkin(d, theta),
            DNormJson::DiscreteGenerator { d, atoms } => {
                DNorm::from_generator(atoms_from_json(atoms, d)?)
            }
            DNormJson::IidUniform { d } => DNorm::iid_uniform(d),
            DNormJson::McGenerator {
                d,
                sampler,
                atoms,
                n_samples,
                seed,
            } => {
                let sampler = match (sampler, atoms) {
                    (McSamplerIdJson::IidUniform, _) => McSampler::IidUniform,
                    (McSamplerIdJson::Tripoint, _) => McSampler::Tripoint,
                    (McSamplerIdJson::Discrete, Some(atoms)) => {
                        McSampler::Discrete(atoms_from_json(atoms, d)?)
                    }
                    (McSamplerIdJson::Discrete, None) => return Err(Error::EmptyGenerator),
                };
                DNorm::monte_carlo(sampler, d, n_samples, seed)
            }
        }
    }
}

impl From<DNorm> for DNormJson {
    fn from(n: DNorm) -> Self {
        let d = n.d;
        match n.kind {
            NormKind::Lambda(lambda) => DNormJson::Lambda { d, lambda },
            NormKind::Max => DNormJson::Max { d },
            NormKind::MarshallOlkin(theta) => DNormJson::MarshallOlkin { d, theta },
            NormKind::Discrete(g) => DNormJson::DiscreteGenerator {
                d,
                atoms: atoms_to_json(&g),
            },
            NormKind::IidUniform => DNormJson::IidUniform { d },
            NormKind::MonteCarlo(mc) => {
                let (sampler, atoms) = match &mc.sampler {
                    McSampler::IidUniform => (McSamplerIdJson::IidUniform, None),
                    McSampler::Tripoint => (McSamplerIdJson::Tripoint, None),
                    McSampler::Discrete(g) => (McSamplerIdJson::Discrete, Some(atoms_to_json(g))),
                };
                DNormJson::McGenerator {
                    d,
                    sampler,
                    atoms,
                    n_samples: mc.n_samples,
                    seed: mc.seed,
                }
            }
        }
    }
}

/// Convenience: turn an index set into the 0/1 indicator weights it selects.
pub fn indicator(d: usize, subset: &[usize]) -> Result<Vec<f64>> {
    let mask = subset_mask(subset, d)?;
    Ok((0..d).map(|i| f64::from(mask >> i & 1)).collect())
}

#[allow(dead_code)]
pub(crate) fn mask_from_indices(indices: &[usize]) -> u32 {
    mask_of(indices)
}
