//! Asymptotic distribution of the number of simultaneously exceeding
//! components, conditional on at least one exceedance, for a d-variate
//! threshold model described by a D-norm and marginal tail ratios.
//!
//! With tail ratios γ (γ_κ = 1 at the pivot) the count N of components above
//! a high threshold satisfies P(N = k | N > 0) → p_k = a_k / a_0, where
//!   a_0 = ‖Σ_i γ_i e_i‖_D,
//!   a_k = Σ_{j=0}^{k} (-1)^{k-j+1} C(d-j, k-j) S_{d-j},
//! and S_r sums ‖Σ_{i in T} γ_i e_i‖_D over the index sets T of size r.

use serde::{Deserialize, Serialize};

use crate::dnorm::DNorm;
use crate::error::{Error, Result};
use crate::util::{binomial, first_combination_where, mask_of};

/// Mass below this threshold counts as vanished: FI(m) is undefined when the
/// conditional tail Σ_{k >= m} p_k is at most this, and the vanishing check
/// treats alternating sums up to this as zero.
pub const EPS_MASS: f64 = 1e-9;

/// Marginal tail ratios γ_i = lim (1-F_i(s)) / (1-F_κ(s)) with a pivot index
/// κ at which γ_κ = 1 exactly. Entries are finite and nonnegative; γ_i = 0
/// marks a component with negligible tail. Indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct TailRatios {
    gamma: Vec<f64>,
    kappa: usize,
}

impl TailRatios {
    pub fn new(gamma: Vec<f64>, kappa: usize) -> Result<Self> {
        let d = gamma.len();
        if !(crate::dnorm::MIN_DIMENSION..=crate::dnorm::MAX_DIMENSION).contains(&d) {
            return Err(Error::DimensionOutOfRange {
                d,
                min: crate::dnorm::MIN_DIMENSION,
                max: crate::dnorm::MAX_DIMENSION,
            });
        }
        if kappa >= d {
            return Err(Error::KappaOutOfRange { kappa, d });
        }
        for (i, &g) in gamma.iter().enumerate() {
            if !g.is_finite() || g < 0.0 {
                return Err(Error::InvalidTailRatio { index: i, value: g });
            }
        }
        if gamma[kappa] != 1.0 {
            return Err(Error::PivotNotOne {
                kappa,
                value: gamma[kappa],
            });
        }
        Ok(Self { gamma, kappa })
    }

    /// Equal tails, pivot at the first component.
    pub fn ones(d: usize) -> Result<Self> {
        Self::new(vec![1.0; d], 0)
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn sum(&self) -> f64 {
        self.gamma.iter().sum()
    }

    /// Indices with γ_i > 0.
    pub fn support(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.gamma[i] > 0.0).collect()
    }

    fn check_matches(&self, norm: &DNorm) -> Result<()> {
        if norm.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: norm.dim(),
                got: self.dim(),
            });
        }
        Ok(())
    }
}

/// The unnormalized count coefficients a_0, ..., a_d.
#[derive(Debug, Clone, PartialEq)]
pub struct CountCoefficients {
    a: Vec<f64>,
}

impl CountCoefficients {
    pub fn dim(&self) -> usize {
        self.a.len() - 1
    }

    pub fn a0(&self) -> f64 {
        self.a[0]
    }

    /// a_k for 0 <= k <= d.
    pub fn coefficient(&self, k: usize) -> f64 {
        self.a[k]
    }

    /// All coefficients, index k = 0..=d.
    pub fn values(&self) -> &[f64] {
        &self.a
    }

    /// The conditional distribution p_k = a_k / a_0, k = 1..=d.
    pub fn distribution(&self) -> AcdecDistribution {
        let a0 = self.a0();
        AcdecDistribution {
            p: self.a[1..].iter().map(|a| a / a0).collect(),
        }
    }
}

/// Asymptotic conditional distribution of the exceedance count:
/// p_k = P(N = k | N > 0) in the high-threshold limit, k = 1..=d.
#[derive(Debug, Clone, PartialEq)]
pub struct AcdecDistribution {
    p: Vec<f64>,
}

impl AcdecDistribution {
    pub fn dim(&self) -> usize {
        self.p.len()
    }

    /// P(N = k | N > 0) for a count k in 1..=d.
    pub fn prob(&self, k: usize) -> f64 {
        assert!((1..=self.dim()).contains(&k), "count k out of range");
        self.p[k - 1]
    }

    /// Probabilities for k = 1..=d.
    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    /// Mean count Σ k p_k; equals the fragility index.
    pub fn mean(&self) -> f64 {
        self.p
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p)
            .sum()
    }

    /// Conditional tail mass Σ_{k >= m} p_k.
    pub fn tail_mass(&self, m: usize) -> f64 {
        self.p[m - 1..].iter().sum()
    }
}

/// Count coefficients a_0..a_d from one pass over the 2^d index sets.
/// Tiny negative values from float cancellation (within EPS_MASS * a_0) are
/// clamped to zero; materially negative values are an internal error.
pub fn coefficients(norm: &DNorm, tr: &TailRatios) -> Result<CountCoefficients> {
    tr.check_matches(norm)?;
    let d = tr.dim();
    let g = tr.gamma();
    // s[r] = Σ_{|T| = r} ‖Σ_{i in T} γ_i e_i‖, grouped by subset size.
    let mut s = vec![0.0f64; d + 1];
    for mask in 1..(1u32 << d) {
        s[mask.count_ones() as usize] += norm.eval_mask(g, mask);
    }
    let mut a = vec![0.0f64; d + 1];
    a[0] = s[d];
    let usable = a[0].is_finite() && a[0] > 0.0;
    if !usable {
        return Err(Error::Internal(format!(
            "norm of the tail-ratio vector is {}, expected > 0",
            a[0]
        )));
    }
    for k in 1..=d {
        let mut acc = 0.0;
        for j in 0..=k {
            let r = d - j;
            if r == 0 {
                continue; // S_0 = 0
            }
            let sign = if (k - j) % 2 == 0 { -1.0 } else { 1.0 };
            acc += sign * binomial(d - j, k - j) * s[r];
        }
        if acc < 0.0 {
            if acc >= -EPS_MASS * a[0] {
                acc = 0.0;
            } else {
                return Err(Error::Internal(format!(
                    "count coefficient a_{k} = {acc} is materially negative"
                )));
            }
        }
        a[k] = acc;
    }
    Ok(CountCoefficients { a })
}

/// The asymptotic conditional distribution of the exceedance count.
pub fn acdec(norm: &DNorm, tr: &TailRatios) -> Result<AcdecDistribution> {
    Ok(coefficients(norm, tr)?.distribution())
}

/// Fragility index FI = Σ_i γ_i / ‖γ‖_D, the limiting mean of the exceedance
/// count given at least one exceedance. Lies in [1, d].
pub fn fragility_index(norm: &DNorm, tr: &TailRatios) -> Result<f64> {
    tr.check_matches(norm)?;
    let a0 = norm.eval_mask(tr.gamma(), crate::dnorm::full_mask(tr.dim()));
    let usable = a0.is_finite() && a0 > 0.0;
    if !usable {
        return Err(Error::Internal(format!(
            "norm of the tail-ratio vector is {a0}, expected > 0"
        )));
    }
    Ok(tr.sum() / a0)
}

/// FI(m) = E(N | N >= m) in the limit: Σ_{k >= m} k p_k / Σ_{k >= m} p_k.
/// Returns `None` (undefined) when the conditioning mass Σ_{k >= m} p_k is at
/// most [`EPS_MASS`]. FI(1) is the plain fragility index.
pub fn extended_fi(norm: &DNorm, tr: &TailRatios, m: usize) -> Result<Option<f64>> {
    let d = tr.dim();
    if !(1..=d).contains(&m) {
        return Err(Error::ThresholdCountOutOfRange { m, d });
    }
    let p = acdec(norm, tr)?;
    let mass = p.tail_mass(m);
    if mass <= EPS_MASS {
        return Ok(None);
    }
    let weighted: f64 = (m..=d).map(|k| k as f64 * p.prob(k)).sum();
    Ok(Some(weighted / mass))
}

/// Outcome of the vanishing-tail-mass check. When the mass does not vanish,
/// `witness` holds the first index set (0-based, lexicographic) whose joint
/// exceedance probability stays positive in the limit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VanishOutcome {
    pub vanishes: bool,
    pub witness: Option<Vec<usize>>,
}

/// Checks whether Σ_{k >= m} p_k = 0, i.e. whether m or more components can
/// exceed together in the limit. Equivalent characterization: for every index
/// set K of size m drawn from the components with γ_i > 0,
///   Σ_{∅ ≠ T ⊆ K} (-1)^{|T|+1} ‖Σ_{i in T} e_i‖_D = 0
/// (the alternating sums use plain coordinate vectors, not γ-weighted ones).
/// Only |K| = m needs checking: the expression is E(min_{i in K} Z_i), which
/// is monotone decreasing in K.
pub fn tail_mass_vanishes(norm: &DNorm, tr: &TailRatios, m: usize) -> Result<VanishOutcome> {
    tr.check_matches(norm)?;
    let d = tr.dim();
    if !(1..=d).contains(&m) {
        return Err(Error::ThresholdCountOutOfRange { m, d });
    }
    let support = tr.support();
    if m > support.len() {
        // Fewer than m components have non-negligible tails at all.
        return Ok(VanishOutcome {
            vanishes: true,
            witness: None,
        });
    }
    let ones = vec![1.0; d];
    let witness = first_combination_where(&support, m, |subset| {
        norm.alternating_min_mask(&ones, mask_of(subset)) > EPS_MASS
    });
    Ok(VanishOutcome {
        vanishes: witness.is_none(),
        witness,
    })
}

// --- report types ----------------------------------------------------------

/// FI(m) wire form; `value` is null when undefined.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FiMReport {
    pub m: usize,
    pub value: Option<f64>,
}

/// Vanishing check wire form; witness indices are 1-based on the wire.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VanishReport {
    pub m: usize,
    pub result: bool,
    pub witness: Option<Vec<usize>>,
}

impl VanishOutcome {
    pub fn into_report(self, m: usize) -> VanishReport {
        VanishReport {
            m,
            result: self.vanishes,
            witness: self
                .witness
                .map(|w| w.into_iter().map(|i| i + 1).collect()),
        }
    }
}

/// Fragility index wire form, optionally with FI(m).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FiReport {
    pub fi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fi_m: Option<FiMReport>,
}

impl FiReport {
    pub fn build(norm: &DNorm, tr: &TailRatios, m: Option<usize>) -> Result<Self> {
        let fi = fragility_index(norm, tr)?;
        let fi_m = match m {
            Some(m) => Some(FiMReport {
                m,
                value: extended_fi(norm, tr, m)?,
            }),
            None => None,
        };
        Ok(Self { fi, fi_m })
    }
}

/// Serializable summary: coefficients, conditional distribution, fragility
/// index, and optionally FI(m) and the vanishing check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExceedanceReport {
    /// a_0..a_d.
    pub a: Vec<f64>,
    /// p_1..p_d.
    pub p: Vec<f64>,
    pub fi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fi_m: Option<FiMReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vanishes: Option<VanishReport>,
}

impl ExceedanceReport {
    pub fn build(
        norm: &DNorm,
        tr: &TailRatios,
        fi_m: Option<usize>,
        vanish_m: Option<usize>,
    ) -> Result<Self> {
        let coeff = coefficients(norm, tr)?;
        let p = coeff.distribution();
        let fi = fragility_index(norm, tr)?;
        let fi_m = match fi_m {
            Some(m) => Some(FiMReport {
                m,
                value: extended_fi(norm, tr, m)?,
            }),
            None => None,
        };
        let vanishes = match vanish_m {
            Some(m) => Some(tail_mass_vanishes(norm, tr, m)?.into_report(m)),
            None => None,
        };
        Ok(Self {
            a: coeff.values().to_vec(),
            p: p.probs().to_vec(),
            fi,
            fi_m,
            vanishes,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dnorm::{DiscreteGenerator, DNorm};
    use proptest::prelude::*;

    const TOL: f64 = 1e-12;
    const LOOSE: f64 = 1e-9;

    fn assert_close(got: f64, want: f64, tol: f64) {
        assert!(
            (got - want).abs() <= tol,
            "got {got}, want {want} (tol {tol})"
        );
    }

    /// Brute-force oracle: a_k as a double sum over the exact-count sets S
    /// and inclusion-exclusion sets T ⊆ S,
    ///   a_k = Σ_{|S|=k} Σ_{T ⊆ S} (-1)^{|T|+1} ‖γ on T ∪ S^c‖,
    /// evaluated through the public `eval` only.
    fn oracle_coefficients(norm: &DNorm, tr: &TailRatios) -> Vec<f64> {
        let d = tr.dim();
        let g = tr.gamma();
        let full = (1u32 << d) - 1;
        let eval_on = |mask: u32| -> f64 {
            let x: Vec<f64> = (0..d)
                .map(|i| if mask >> i & 1 == 1 { g[i] } else { 0.0 })
                .collect();
            norm.eval(&x).unwrap()
        };
        let mut a = vec![0.0; d + 1];
        a[0] = eval_on(full);
        for s_mask in 1..=full {
            let k = s_mask.count_ones() as usize;
            let comp = full ^ s_mask;
            let mut t = s_mask;
            loop {
                let sign = if t.count_ones() % 2 == 1 { 1.0 } else { -1.0 };
                let m = t | comp;
                a[k] += if m == 0 { 0.0 } else { sign * eval_on(m) };
                if t == 0 {
                    break;
                }
                t = (t - 1) & s_mask;
            }
        }
        a
    }

    /// Second independent oracle for generator-backed norms: with
    /// v_i = γ_i z_i(ω) and v_(1) <= ... <= v_(d) the sorted values,
    /// Σ_{j >= k} a_j = E(v_(d-k+1)), so a_k is the expected gap between
    /// consecutive order statistics.
    fn order_statistic_coefficients(gen: &DiscreteGenerator, gamma: &[f64]) -> Vec<f64> {
        let d = gen.dim();
        let mut b = vec![0.0; d + 2]; // b[k] = E(k-th largest), b[d+1] = 0
        for (p, z) in gen.atoms() {
            let mut v: Vec<f64> = (0..d).map(|i| gamma[i] * z[i]).collect();
            v.sort_unstable_by(|a, c| a.partial_cmp(c).unwrap());
            for k in 1..=d {
                b[k] += p * v[d - k];
            }
        }
        let mut a = vec![0.0; d + 1];
        a[0] = b[1];
        for k in 1..=d {
            a[k] = b[k] - b[k + 1];
        }
        a
    }

    #[test]
    fn sum_norm_gives_single_exceedances() {
        let norm = DNorm::sum_norm(3).unwrap();
        let tr = TailRatios::new(vec![1.0, 0.5, 0.25], 0).unwrap();
        let c = coefficients(&norm, &tr).unwrap();
        assert_close(c.a0(), 1.75, TOL);
        assert_close(c.coefficient(1), 1.75, TOL);
        assert_close(c.coefficient(2), 0.0, TOL);
        assert_close(c.coefficient(3), 0.0, TOL);
        let p = c.distribution();
        assert_close(p.prob(1), 1.0, TOL);
        assert_close(fragility_index(&norm, &tr).unwrap(), 1.0, TOL);
    }

    #[test]
    fn l2_bivariate_frozen_values() {
        // Frozen from the brute-force oracle: a = (√2, 2√2-2, 2-√2).
        let norm = DNorm::lambda(2, 2.0).unwrap();
        let tr = TailRatios::ones(2).unwrap();
        let r2 = 2f64.sqrt();
        let c = coefficients(&norm, &tr).unwrap();
        assert_close(c.a0(), r2, TOL);
        assert_close(c.coefficient(1), 2.0 * r2 - 2.0, TOL);
        assert_close(c.coefficient(2), 2.0 - r2, TOL);
        let p = c.distribution();
        assert_close(p.prob(2), r2 - 1.0, TOL);
        assert_close(fragility_index(&norm, &tr).unwrap(), r2, TOL);
        // And the oracle agrees.
        let oracle = oracle_coefficients(&norm, &tr);
        for (k, want) in oracle.iter().enumerate() {
            assert_close(c.coefficient(k), *want, TOL);
        }
    }

    #[test]
    fn max_norm_concentrates_on_joint_exceedance() {
        let norm = DNorm::max_norm(2).unwrap();
        let tr = TailRatios::ones(2).unwrap();
        let p = acdec(&norm, &tr).unwrap();
        assert_close(p.prob(1), 0.0, TOL);
        assert_close(p.prob(2), 1.0, TOL);
        assert_close(fragility_index(&norm, &tr).unwrap(), 2.0, TOL);
    }

    #[test]
    fn tripoint_acdec_frozen_values() {
        // Frozen from both oracles: a = (7/4, 1/2, 5/4, 0), p = (2/7, 5/7, 0).
        let gen = DiscreteGenerator::tripoint();
        let norm = DNorm::from_generator(gen.clone()).unwrap();
        let tr = TailRatios::ones(3).unwrap();
        let c = coefficients(&norm, &tr).unwrap();
        assert_close(c.a0(), 1.75, TOL);
        assert_close(c.coefficient(1), 0.5, TOL);
        assert_close(c.coefficient(2), 1.25, TOL);
        assert_close(c.coefficient(3), 0.0, TOL);
        let p = c.distribution();
        assert_close(p.prob(1), 2.0 / 7.0, TOL);
        assert_close(p.prob(2), 5.0 / 7.0, TOL);
        assert_close(p.prob(3), 0.0, TOL);

        let os = order_statistic_coefficients(&gen, tr.gamma());
        for (k, want) in os.iter().enumerate() {
            assert_close(c.coefficient(k), *want, TOL);
        }
    }

    #[test]
    fn fragility_index_hand_values() {
        let norm = DNorm::max_norm(3).unwrap();
        let tr = TailRatios::new(vec![1.0, 0.5, 0.25], 0).unwrap();
        assert_close(fragility_index(&norm, &tr).unwrap(), 1.75, TOL);
    }

    #[test]
    fn extended_fi_values_and_undefined() {
        let l2 = DNorm::lambda(2, 2.0).unwrap();
        let tr2 = TailRatios::ones(2).unwrap();
        assert_close(extended_fi(&l2, &tr2, 2).unwrap().unwrap(), 2.0, TOL);
        // FI(1) is the plain index.
        assert_close(
            extended_fi(&l2, &tr2, 1).unwrap().unwrap(),
            fragility_index(&l2, &tr2).unwrap(),
            TOL,
        );

        let tri = DNorm::from_generator(DiscreteGenerator::tripoint()).unwrap();
        let tr3 = TailRatios::ones(3).unwrap();
        assert_eq!(extended_fi(&tri, &tr3, 3).unwrap(), None);
        assert_close(extended_fi(&tri, &tr3, 2).unwrap().unwrap(), 2.0, TOL);

        assert!(matches!(
            extended_fi(&l2, &tr2, 0),
            Err(Error::ThresholdCountOutOfRange { .. })
        ));
        assert!(matches!(
            extended_fi(&l2, &tr2, 3),
            Err(Error::ThresholdCountOutOfRange { .. })
        ));
    }

    #[test]
    fn vanishing_check_on_the_tripoint_norm() {
        let norm = DNorm::from_generator(DiscreteGenerator::tripoint()).unwrap();
        let tr = TailRatios::ones(3).unwrap();
        let v3 = tail_mass_vanishes(&norm, &tr, 3).unwrap();
        assert!(v3.vanishes);
        assert_eq!(v3.witness, None);
        let v2 = tail_mass_vanishes(&norm, &tr, 2).unwrap();
        assert!(!v2.vanishes);
        assert_eq!(v2.witness, Some(vec![0, 1]));
        // m = 1 never vanishes: single exceedances always carry mass.
        let v1 = tail_mass_vanishes(&norm, &tr, 1).unwrap();
        assert!(!v1.vanishes);
        assert_eq!(v1.witness, Some(vec![0]));
    }

    #[test]
    fn vanishing_check_skips_zero_tail_components() {
        // Third component has no tail: only {0, 1} can exceed jointly.
        let tr = TailRatios::new(vec![1.0, 1.0, 0.0], 0).unwrap();
        for (theta, want) in [(0.3, false), (1.0, true)] {
            let norm = DNorm::marshall_olkin(3, theta).unwrap();
            let v2 = tail_mass_vanishes(&norm, &tr, 2).unwrap();
            assert_eq!(v2.vanishes, want, "theta {theta}");
            if !want {
                assert_eq!(v2.witness, Some(vec![0, 1]));
            }
        }
        // m above the number of heavy components vanishes trivially.
        let norm = DNorm::max_norm(3).unwrap();
        let v3 = tail_mass_vanishes(&norm, &tr, 3).unwrap();
        assert!(v3.vanishes);
        assert_eq!(v3.witness, None);
    }

    #[test]
    fn tail_ratio_validation() {
        assert!(matches!(
            TailRatios::new(vec![1.0, 0.5], 2),
            Err(Error::KappaOutOfRange { .. })
        ));
        assert!(matches!(
            TailRatios::new(vec![0.9, 0.5], 0),
            Err(Error::PivotNotOne { .. })
        ));
        assert!(matches!(
            TailRatios::new(vec![1.0, -0.5], 0),
            Err(Error::InvalidTailRatio { .. })
        ));
        let norm = DNorm::max_norm(3).unwrap();
        let tr = TailRatios::ones(2).unwrap();
        assert!(matches!(
            coefficients(&norm, &tr),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn report_wire_shape() {
        let norm = DNorm::from_generator(DiscreteGenerator::tripoint()).unwrap();
        let tr = TailRatios::ones(3).unwrap();
        let report = ExceedanceReport::build(&norm, &tr, Some(3), Some(2)).unwrap();
        let v = serde_json::to_value(&report).unwrap();
        assert_eq!(v["a"].as_array().unwrap().len(), 4);
        assert_eq!(v["p"].as_array().unwrap().len(), 3);
        assert_eq!(v["fi_m"]["m"], 3);
        assert_eq!(v["fi_m"]["value"], serde_json::Value::Null);
        assert_eq!(v["vanishes"]["result"], false);
        // Witness components are 1-based on the wire.
        assert_eq!(v["vanishes"]["witness"][0], 1);
        assert_eq!(v["vanishes"]["witness"][1], 2);
    }

    fn gamma_strategy(d: usize) -> impl Strategy<Value = TailRatios> {
        (
            prop::collection::vec(
                prop_oneof![3 => 0.05..1.5f64, 1 => Just(0.0)],
                d,
            ),
            0..d,
        )
            .prop_map(move |(mut g, kappa)| {
                g[kappa] = 1.0;
                TailRatios::new(g, kappa).unwrap()
            })
    }

    fn norm_strategy(d: usize) -> impl Strategy<Value = DNorm> {
        prop_oneof![
            (1.0..6.0f64).prop_map(move |l| DNorm::lambda(d, l).unwrap()),
            Just(DNorm::max_norm(d).unwrap()),
            Just(DNorm::sum_norm(d).unwrap()),
            (0.0..=1.0f64).prop_map(move |t| DNorm::marshall_olkin(d, t).unwrap()),
            Just(DNorm::iid_uniform(d).unwrap()),
            crate::dnorm::tests::generator_strategy(d)
                .prop_map(|g| DNorm::from_generator(g).unwrap()),
        ]
    }

    fn case_strategy(max_d: usize) -> impl Strategy<Value = (DNorm, TailRatios)> {
        (2usize..=max_d).prop_flat_map(|d| (norm_strategy(d), gamma_strategy(d)))
    }

    proptest! {
        #[test]
        fn matches_brute_force_oracle((norm, tr) in case_strategy(6)) {
            let c = coefficients(&norm, &tr).unwrap();
            let oracle = oracle_coefficients(&norm, &tr);
            for (k, want) in oracle.iter().enumerate() {
                prop_assert!(
                    (c.coefficient(k) - want.max(0.0)).abs() <= LOOSE,
                    "k = {}: {} vs oracle {}", k, c.coefficient(k), want
                );
            }
        }

        #[test]
        fn generator_route_matches_order_statistics(
            (gen, tr) in (2usize..=7)
                .prop_flat_map(|d| (crate::dnorm::tests::generator_strategy(d), gamma_strategy(d)))
        ) {
            let norm = DNorm::from_generator(gen.clone()).unwrap();
            let c = coefficients(&norm, &tr).unwrap();
            let os = order_statistic_coefficients(&gen, tr.gamma());
            for (k, want) in os.iter().enumerate() {
                prop_assert!((c.coefficient(k) - want).abs() <= LOOSE);
            }
        }

        #[test]
        fn distribution_and_index_invariants((norm, tr) in case_strategy(10)) {
            let d = tr.dim();
            let c = coefficients(&norm, &tr).unwrap();
            // Partition identity.
            let sum: f64 = (1..=d).map(|k| c.coefficient(k)).sum();
            prop_assert!((sum - c.a0()).abs() <= LOOSE * c.a0());
            let p = c.distribution();
            let mass: f64 = p.probs().iter().sum();
            prop_assert!((mass - 1.0).abs() <= LOOSE);
            for k in 1..=d {
                prop_assert!(p.prob(k) >= 0.0);
            }
            // FI equals the mean count and lies in [1, d].
            let fi = fragility_index(&norm, &tr).unwrap();
            prop_assert!((fi - p.mean()).abs() <= LOOSE);
            prop_assert!((1.0 - LOOSE..=d as f64 + LOOSE).contains(&fi));
        }

        #[test]
        fn extended_fi_monotone_where_defined((norm, tr) in case_strategy(8)) {
            let mut last = 0.0;
            for m in 1..=tr.dim() {
                if let Some(v) = extended_fi(&norm, &tr, m).unwrap() {
                    prop_assert!(v >= last - LOOSE, "FI({m}) = {v} < {last}");
                    prop_assert!(v >= m as f64 - LOOSE);
                    last = v;
                }
            }
        }
    }
}
