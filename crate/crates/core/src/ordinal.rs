//! Ordinal-pattern statistics: pattern distributions, normalized permutation
//! entropy, Jensen–Shannon divergence to the uniform pattern distribution and
//! permutation statistical complexity.
//!
//! A length-`d` subwindow is mapped to the permutation that sorts it in
//! ascending order. Equal values keep their time order (stable sort), so the
//! earlier of two tied samples ranks lower. Permutations are stored by their
//! Lehmer rank in `[0, d!)`.

use crate::error::{Error, Result};

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 8;

pub fn factorial(n: usize) -> usize {
    (1..=n).product()
}

fn check_dim(d: usize) -> Result<()> {
    if (MIN_DIM..=MAX_DIM).contains(&d) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "embedding dimension {d} outside [{MIN_DIM}, {MAX_DIM}]"
        )))
    }
}

/// Bijection between permutations of `0..d` and dense indices in `[0, d!)`
/// using the Lehmer code (factorial number system). The identity permutation
/// has rank 0 and the reversal has rank `d! − 1`.
#[derive(Debug, Clone)]
pub struct PatternCodec {
    d: usize,
    // radix[i] = (d - 1 - i)!
    radix: [u32; MAX_DIM],
}

impl PatternCodec {
    pub fn new(d: usize) -> Result<Self> {
        check_dim(d)?;
        let mut radix = [0u32; MAX_DIM];
        for (i, r) in radix.iter_mut().enumerate().take(d) {
            *r = factorial(d - 1 - i) as u32;
        }
        Ok(Self { d, radix })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n_patterns(&self) -> usize {
        factorial(self.d)
    }

    /// Rank of `perm`. Panics if `perm.len() != d`; entries must form a
    /// permutation of `0..d`.
    pub fn encode(&self, perm: &[usize]) -> usize {
        assert_eq!(perm.len(), self.d, "permutation length");
        let mut rank = 0u32;
        for i in 0..self.d {
            let smaller_after = perm[i + 1..].iter().filter(|&&p| p < perm[i]).count() as u32;
            rank += smaller_after * self.radix[i];
        }
        rank as usize
    }

    pub fn decode(&self, rank: usize) -> Vec<usize> {
        assert!(rank < self.n_patterns(), "rank out of range");
        let mut rest = rank as u32;
        let mut pool: Vec<usize> = (0..self.d).collect();
        let mut perm = Vec::with_capacity(self.d);
        for i in 0..self.d {
            let digit = (rest / self.radix[i]) as usize;
            rest %= self.radix[i];
            perm.push(pool.remove(digit));
        }
        perm
    }

    /// Rank of the stable ascending argsort of `values` (length `d`).
    #[inline]
    fn rank_of(&self, values: &[f64]) -> usize {
        let mut idx = [0usize; MAX_DIM];
        let idx = &mut idx[..self.d];
        for (i, slot) in idx.iter_mut().enumerate() {
            *slot = i;
        }
        // Insertion sort is stable and fastest at these sizes.
        for i in 1..self.d {
            let cur = idx[i];
            let mut j = i;
            while j > 0 && values[idx[j - 1]] > values[cur] {
                idx[j] = idx[j - 1];
                j -= 1;
            }
            idx[j] = cur;
        }
        self.encode(idx)
    }
}

/// Probability distribution over the `d!` ordinal patterns of a window.
#[derive(Debug, Clone, PartialEq)]
pub struct OrdinalDistribution {
    d: usize,
    counts: Vec<u64>,
    total: u64,
    probabilities: Vec<f64>,
}

impl OrdinalDistribution {
    /// Build from raw pattern counts indexed by Lehmer rank.
    pub fn from_counts(d: usize, counts: Vec<u64>) -> Result<Self> {
        check_dim(d)?;
        if counts.len() != factorial(d) {
            return Err(Error::invalid(format!(
                "expected {} pattern counts for d={d}, got {}",
                factorial(d),
                counts.len()
            )));
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::invalid("pattern counts sum to zero"));
        }
        let probabilities = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(Self {
            d,
            counts,
            total,
            probabilities,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Number of subwindows, `n − d + 1`.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Uniform reference `{1/d!}`.
    pub fn uniform(d: usize) -> Result<Self> {
        check_dim(d)?;
        Self::from_counts(d, vec![1; factorial(d)])
    }

    /// All mass on the identity pattern.
    pub fn delta(d: usize) -> Result<Self> {
        check_dim(d)?;
        let mut counts = vec![0; factorial(d)];
        counts[0] = 1;
        Self::from_counts(d, counts)
    }
}

fn check_window(window: &[f64], d: usize) -> Result<()> {
    check_dim(d)?;
    if window.len() < d {
        return Err(Error::invalid(format!(
            "window of length {} shorter than embedding dimension {d}",
            window.len()
        )));
    }
    if let Some(i) = window.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite value at index {i}")));
    }
    Ok(())
}

/// Lehmer rank of every overlapping length-`d` subwindow of `series`.
pub fn pattern_sequence(series: &[f64], d: usize) -> Result<Vec<u32>> {
    check_window(series, d)?;
    let codec = PatternCodec::new(d)?;
    Ok(series
        .windows(d)
        .map(|w| codec.rank_of(w) as u32)
        .collect())
}

pub fn ordinal_distribution(window: &[f64], d: usize) -> Result<OrdinalDistribution> {
    check_window(window, d)?;
    let codec = PatternCodec::new(d)?;
    let mut counts = vec![0u64; codec.n_patterns()];
    for w in window.windows(d) {
        counts[codec.rank_of(w)] += 1;
    }
    OrdinalDistribution::from_counts(d, counts)
}

/// `−Σ p ln p` with `0 ln 0 = 0`.
pub fn shannon_entropy(probabilities: &[f64]) -> Result<f64> {
    if let Some(p) = probabilities.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::invalid(format!("invalid probability {p}")));
    }
    let sum: f64 = probabilities.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("probabilities sum to {sum}, not 1")));
    }
    Ok(entropy_unchecked(probabilities))
}

/// `−Σ p ln p` over positive entries with Neumaier-compensated summation.
fn entropy_unchecked(probabilities: &[f64]) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &p in probabilities.iter().filter(|&&p| p > 0.0) {
        let term = -p * p.ln();
        let t = sum + term;
        comp += if sum.abs() >= term.abs() { (sum - t) + term } else { (term - t) + sum };
        sum = t;
    }
    sum + comp
}

/// Shannon entropy normalized by `ln(d!)`, in `[0, 1]`.
pub fn permutation_entropy(dist: &OrdinalDistribution) -> f64 {
    let n = dist.probabilities.len() as f64;
    // clamp rounding past the bounds
    (entropy_unchecked(&dist.probabilities) / n.ln()).clamp(0.0, 1.0)
}

fn js_to_uniform(probabilities: &[f64]) -> f64 {
    let n = probabilities.len();
    let u = 1.0 / n as f64;
    let uniform = vec![u; n];
    let mixture: Vec<f64> = probabilities.iter().map(|p| 0.5 * (p + u)).collect();
    let d = entropy_unchecked(&mixture)
        - 0.5 * entropy_unchecked(probabilities)
        - 0.5 * entropy_unchecked(&uniform);
    d.clamp(0.0, std::f64::consts::LN_2)
}

/// Jensen–Shannon divergence `S((P+U)/2) − S(P)/2 − S(U)/2` between the
/// distribution and the uniform distribution over its `d!` patterns.
pub fn jensen_shannon_divergence(dist: &OrdinalDistribution) -> f64 {
    js_to_uniform(&dist.probabilities)
}

/// Divergence between a single-pattern distribution and the uniform one; the
/// largest value the divergence can take for `d!` patterns.
pub fn max_divergence(d: usize) -> Result<f64> {
    Ok(jensen_shannon_divergence(&OrdinalDistribution::delta(d)?))
}

/// `C = D(P, U) · H(P) / D*`.
pub fn statistical_complexity(dist: &OrdinalDistribution) -> f64 {
    let d_star = js_to_uniform(&OrdinalDistribution::delta(dist.d).expect("valid dim").probabilities);
    complexity_with(dist, d_star)
}

fn complexity_with(dist: &OrdinalDistribution, d_star: f64) -> f64 {
    let h = permutation_entropy(dist);
    (jensen_shannon_divergence(dist) * h / d_star).clamp(0.0, 1.0)
}

/// Entropy and complexity of one distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyComplexity {
    pub entropy: f64,
    pub complexity: f64,
}

/// Reusable evaluator for many windows with the same embedding dimension.
#[derive(Debug, Clone)]
pub struct OrdinalAnalyzer {
    codec: PatternCodec,
    d_star: f64,
}

impl OrdinalAnalyzer {
    pub fn new(d: usize) -> Result<Self> {
        Ok(Self {
            codec: PatternCodec::new(d)?,
            d_star: max_divergence(d)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.codec.d
    }

    pub fn codec(&self) -> &PatternCodec {
        &self.codec
    }

    pub fn measure(&self, dist: &OrdinalDistribution) -> EntropyComplexity {
        EntropyComplexity {
            entropy: permutation_entropy(dist),
            complexity: complexity_with(dist, self.d_star),
        }
    }

    pub fn measure_counts(&self, counts: &[u64]) -> Result<EntropyComplexity> {
        let dist = OrdinalDistribution::from_counts(self.codec.d, counts.to_vec())?;
        Ok(self.measure(&dist))
    }

    /// `(H, C)` of a raw window. Assumes the window is finite and at least `d`
    /// long; callers in this crate validate the whole series up front.
    pub fn measure_window(&self, window: &[f64], counts: &mut Vec<u64>) -> EntropyComplexity {
        counts.clear();
        counts.resize(self.codec.n_patterns(), 0);
        for w in window.windows(self.codec.d) {
            counts[self.codec.rank_of(w)] += 1;
        }
        self.measure_counts(counts).expect("nonempty window")
    }
}
