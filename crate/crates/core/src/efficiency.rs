//! Sliding-window entropy/complexity tracks, shuffle-surrogate bands and the
//! efficiency measures derived from them.
//!
//! Surrogates for window `i` draw from a ChaCha8 generator seeded with
//! `master_seed` (via `SeedableRng::seed_from_u64`) on stream `i`, so every
//! window's band depends only on `(master_seed, i)` and the window contents.
//! Windows can therefore be processed in any order or in parallel with
//! identical results.

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::config::{AnalysisConfig, BandMode};
use crate::error::{Error, Result};
use crate::ingest::ReturnSeries;
use crate::ordinal::{pattern_sequence, EntropyComplexity, OrdinalAnalyzer};

/// Surrogate confidence band of one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub h_lo: f64,
    pub h_hi: f64,
    pub c_lo: f64,
    pub c_hi: f64,
}

impl Band {
    pub fn contains(&self, point: EntropyComplexity) -> bool {
        (self.h_lo..=self.h_hi).contains(&point.entropy)
            && (self.c_lo..=self.c_hi).contains(&point.complexity)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityTrack {
    pub symbol: String,
    /// Index into the return series of each window's center, `start + w/2`.
    pub centers: Vec<usize>,
    /// Dates of the centers; empty when the returns carried no dates.
    pub center_dates: Vec<NaiveDate>,
    pub entropy: Vec<f64>,
    pub complexity: Vec<f64>,
    /// Empty until [`apply_bands`] has run.
    pub bands: Vec<Band>,
    pub inside: Vec<bool>,
}

impl ComplexityTrack {
    pub fn len(&self) -> usize {
        self.entropy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entropy.is_empty()
    }

    pub fn has_bands(&self) -> bool {
        self.bands.len() == self.len()
    }

    pub fn point(&self, i: usize) -> EntropyComplexity {
        EntropyComplexity {
            entropy: self.entropy[i],
            complexity: self.complexity[i],
        }
    }
}

/// Time-resolved efficiency `E_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencySeries {
    /// Index into the return series of each point's center.
    pub centers: Vec<usize>,
    pub center_dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

impl EfficiencySeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyProfile {
    pub symbol: String,
    pub efficiency: f64,
    pub series: EfficiencySeries,
}

/// `(H, C)` for each of the `n − w + 1` windows, without bands.
pub fn sliding_complexity(returns: &ReturnSeries, config: &AnalysisConfig) -> Result<ComplexityTrack> {
    config.validate()?;
    let w = config.window;
    let d = config.embedding_dim;
    let n = returns.values.len();
    if n < w {
        return Err(Error::insufficient(format!(
            "{}: {n} returns, window needs {w}",
            returns.symbol
        )));
    }
    let analyzer = OrdinalAnalyzer::new(d)?;
    let codes = pattern_sequence(&returns.values, d)?;
    let per_window = w - d + 1;
    let n_windows = n - w + 1;

    let mut counts = vec![0u64; analyzer.codec().n_patterns()];
    for &c in &codes[..per_window] {
        counts[c as usize] += 1;
    }
    let mut entropy = Vec::with_capacity(n_windows);
    let mut complexity = Vec::with_capacity(n_windows);
    for start in 0..n_windows {
        if start > 0 {
            counts[codes[start - 1] as usize] -= 1;
            counts[codes[start + per_window - 1] as usize] += 1;
        }
        let point = analyzer.measure_counts(&counts)?;
        entropy.push(point.entropy);
        complexity.push(point.complexity);
    }

    let centers: Vec<usize> = (0..n_windows).map(|s| s + w / 2).collect();
    let center_dates = if returns.dates.len() == n {
        centers.iter().map(|&c| returns.dates[c]).collect()
    } else {
        Vec::new()
    };
    Ok(ComplexityTrack {
        symbol: returns.symbol.clone(),
        centers,
        center_dates,
        entropy,
        complexity,
        bands: Vec::new(),
        inside: Vec::new(),
    })
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn interval(values: &mut [f64], config: &AnalysisConfig, z: f64) -> (f64, f64) {
    let (lo, hi) = match config.band_mode {
        BandMode::Gaussian => {
            let (mean, sd) = mean_sd(values);
            (mean - z * sd, mean + z * sd)
        }
        BandMode::Quantile => {
            values.sort_by(f64::total_cmp);
            let tail = (1.0 - config.confidence) / 2.0;
            (
                quantile_sorted(values, tail),
                quantile_sorted(values, 1.0 - tail),
            )
        }
    };
    (lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0))
}

fn normal_quantile(confidence: f64) -> f64 {
    Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(0.5 + confidence / 2.0)
}

struct BandBuilder<'a> {
    config: &'a AnalysisConfig,
    analyzer: OrdinalAnalyzer,
    z: f64,
}

impl<'a> BandBuilder<'a> {
    fn new(config: &'a AnalysisConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            analyzer: OrdinalAnalyzer::new(config.embedding_dim)?,
            z: normal_quantile(config.confidence),
        })
    }

    fn band(&self, window: &[f64], window_index: u64) -> Band {
        let m = self.config.surrogates;
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.master_seed);
        rng.set_stream(window_index);
        let mut shuffled = window.to_vec();
        let mut counts = Vec::new();
        let mut hs = Vec::with_capacity(m);
        let mut cs = Vec::with_capacity(m);
        for _ in 0..m {
            shuffled.shuffle(&mut rng);
            let p = self.analyzer.measure_window(&shuffled, &mut counts);
            hs.push(p.entropy);
            cs.push(p.complexity);
        }
        let (h_lo, h_hi) = interval(&mut hs, self.config, self.z);
        let (c_lo, c_hi) = interval(&mut cs, self.config, self.z);
        Band {
            h_lo,
            h_hi,
            c_lo,
            c_hi,
        }
    }
}

/// Confidence band of `(H, C)` under `m` independent uniform shuffles of the
/// window. Deterministic in `(config.master_seed, window_index)`.
pub fn surrogate_band(window: &[f64], config: &AnalysisConfig, window_index: u64) -> Result<Band> {
    if window.len() != config.window {
        return Err(Error::invalid(format!(
            "window length {} differs from configured {}",
            window.len(),
            config.window
        )));
    }
    if let Some(i) = window.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite value at index {i}")));
    }
    Ok(BandBuilder::new(config)?.band(window, window_index))
}

/// Attach a surrogate band and inside flag to every window of `track`.
pub fn apply_bands(
    mut track: ComplexityTrack,
    returns: &ReturnSeries,
    config: &AnalysisConfig,
) -> Result<ComplexityTrack> {
    let expected = (returns.values.len() + 1).saturating_sub(config.window);
    if track.symbol != returns.symbol || track.len() != expected {
        return Err(Error::invalid(format!(
            "track `{}` with {} windows does not belong to returns `{}` ({expected} windows)",
            track.symbol,
            track.len(),
            returns.symbol
        )));
    }
    if track.is_empty() {
        return Ok(track);
    }
    let builder = BandBuilder::new(config)?;
    let w = config.window;
    let bands: Vec<Band> = (0..track.len())
        .into_par_iter()
        .map(|s| builder.band(&returns.values[s..s + w], s as u64))
        .collect();
    track.inside = bands
        .iter()
        .enumerate()
        .map(|(i, b)| b.contains(track.point(i)))
        .collect();
    track.bands = bands;
    Ok(track)
}

/// Sliding track with bands in one call.
pub fn analyze_returns(returns: &ReturnSeries, config: &AnalysisConfig) -> Result<ComplexityTrack> {
    let track = sliding_complexity(returns, config)?;
    apply_bands(track, returns, config)
}

fn require_bands(track: &ComplexityTrack) -> Result<()> {
    if !track.has_bands() || track.inside.len() != track.len() {
        return Err(Error::invalid(format!(
            "track `{}` has no surrogate bands",
            track.symbol
        )));
    }
    Ok(())
}

/// Fraction of windows whose `(H, C)` lies inside the band.
pub fn overall_efficiency(track: &ComplexityTrack) -> Result<f64> {
    require_bands(track)?;
    if track.is_empty() {
        return Err(Error::insufficient(format!("track `{}` is empty", track.symbol)));
    }
    Ok(fraction_inside(&track.inside))
}

pub(crate) fn fraction_inside(inside: &[bool]) -> f64 {
    inside.iter().filter(|&&b| b).count() as f64 / inside.len() as f64
}

/// Moving fraction of inside flags over `efficiency_window` consecutive windows.
pub fn efficiency_series(track: &ComplexityTrack, efficiency_window: usize) -> Result<EfficiencySeries> {
    require_bands(track)?;
    efficiency_from_flags(
        &track.inside,
        &track.centers,
        &track.center_dates,
        efficiency_window,
    )
}

/// [`efficiency_series`] over bare flags; `centers` and `center_dates` may be
/// empty when unknown.
pub fn efficiency_from_flags(
    inside: &[bool],
    centers: &[usize],
    center_dates: &[NaiveDate],
    efficiency_window: usize,
) -> Result<EfficiencySeries> {
    if efficiency_window == 0 {
        return Err(Error::invalid("efficiency window must be positive"));
    }
    let n = inside.len();
    if n < efficiency_window {
        return Err(Error::insufficient(format!(
            "{n} windows, efficiency window needs {efficiency_window}"
        )));
    }
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0usize);
    for &b in inside {
        prefix.push(prefix.last().unwrap() + usize::from(b));
    }
    let len = n - efficiency_window + 1;
    let half = efficiency_window / 2;
    let values = (0..len)
        .map(|j| (prefix[j + efficiency_window] - prefix[j]) as f64 / efficiency_window as f64)
        .collect();
    let pick = |v: &[usize]| -> Vec<usize> {
        if v.len() == n {
            (0..len).map(|j| v[j + half]).collect()
        } else {
            Vec::new()
        }
    };
    let centers = pick(centers);
    let center_dates = if center_dates.len() == n {
        (0..len).map(|j| center_dates[j + half]).collect()
    } else {
        Vec::new()
    };
    Ok(EfficiencySeries {
        centers,
        center_dates,
        values,
    })
}

/// `E` and `E_t` of a banded track. `E_t` is empty when the track is shorter
/// than the efficiency window.
pub fn efficiency_profile(track: &ComplexityTrack, efficiency_window: usize) -> Result<EfficiencyProfile> {
    let efficiency = overall_efficiency(track)?;
    let series = if track.len() >= efficiency_window {
        efficiency_series(track, efficiency_window)?
    } else {
        EfficiencySeries {
            centers: Vec::new(),
            center_dates: Vec::new(),
            values: Vec::new(),
        }
    };
    Ok(EfficiencyProfile {
        symbol: track.symbol.clone(),
        efficiency,
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn small_config() -> AnalysisConfig {
        AnalysisConfig {
            embedding_dim: 3,
            window: 100,
            surrogates: 20,
            efficiency_window: 10,
            ..Default::default()
        }
    }

    fn undated(values: Vec<f64>) -> ReturnSeries {
        ReturnSeries {
            symbol: "X".into(),
            dates: Vec::new(),
            values,
        }
    }

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen::<f64>() - 0.5).collect()
    }

    fn banded(inside: Vec<bool>) -> ComplexityTrack {
        let n = inside.len();
        let band = Band {
            h_lo: 0.0,
            h_hi: 1.0,
            c_lo: 0.0,
            c_hi: 1.0,
        };
        ComplexityTrack {
            symbol: "T".into(),
            centers: (0..n).collect(),
            center_dates: Vec::new(),
            entropy: vec![0.5; n],
            complexity: vec![0.5; n],
            bands: vec![band; n],
            inside,
        }
    }

    #[test]
    fn single_window_at_boundary() {
        let cfg = AnalysisConfig::default();
        let track = sliding_complexity(&undated(noise(500, 1)), &cfg).unwrap();
        assert_eq!(track.len(), 1);
        assert_eq!(track.centers, vec![250]);
    }

    #[test]
    fn short_series_is_insufficient() {
        let cfg = small_config();
        let err = sliding_complexity(&undated(noise(99, 1)), &cfg).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn sliding_matches_direct_per_window() {
        let cfg = small_config();
        let x = noise(260, 5);
        let track = sliding_complexity(&undated(x.clone()), &cfg).unwrap();
        assert_eq!(track.len(), 161);
        let analyzer = OrdinalAnalyzer::new(3).unwrap();
        let mut counts = Vec::new();
        for s in [0, 1, 77, 160] {
            let p = analyzer.measure_window(&x[s..s + 100], &mut counts);
            assert_eq!(track.entropy[s], p.entropy);
            assert_eq!(track.complexity[s], p.complexity);
        }
    }

    #[test]
    fn monotone_returns_give_zero_track_and_sit_outside() {
        let cfg = small_config();
        let x: Vec<f64> = (0..150).map(|i| i as f64 * 1e-3).collect();
        let track = analyze_returns(&undated(x), &cfg).unwrap();
        assert!(track.entropy.iter().all(|&h| h == 0.0));
        assert!(track.complexity.iter().all(|&c| c == 0.0));
        assert!(track.inside.iter().all(|&b| !b));
        assert!(track.bands.iter().all(|b| b.h_lo > 0.5));
    }

    #[test]
    fn band_is_deterministic_per_seed_and_index() {
        let cfg = small_config();
        let x = noise(100, 9);
        let a = surrogate_band(&x, &cfg, 17).unwrap();
        let b = surrogate_band(&x, &cfg, 17).unwrap();
        assert_eq!(a, b);
        let c = surrogate_band(&x, &cfg, 18).unwrap();
        assert_ne!(a, c);
        let other_seed = AnalysisConfig {
            master_seed: 7,
            ..cfg.clone()
        };
        assert_ne!(a, surrogate_band(&x, &other_seed, 17).unwrap());
    }

    #[test]
    fn band_bounds_are_ordered_and_clamped() {
        for mode in [BandMode::Gaussian, BandMode::Quantile] {
            let cfg = AnalysisConfig {
                band_mode: mode,
                ..small_config()
            };
            let b = surrogate_band(&noise(100, 3), &cfg, 0).unwrap();
            assert!(0.0 <= b.h_lo && b.h_lo <= b.h_hi && b.h_hi <= 1.0, "{b:?}");
            assert!(0.0 <= b.c_lo && b.c_lo <= b.c_hi && b.c_hi <= 1.0, "{b:?}");
        }
    }

    #[test]
    fn band_rejects_wrong_length_and_too_few_surrogates() {
        let cfg = small_config();
        assert!(surrogate_band(&noise(99, 3), &cfg, 0).is_err());
        let cfg = AnalysisConfig {
            surrogates: 1,
            ..cfg
        };
        assert!(surrogate_band(&noise(100, 3), &cfg, 0).is_err());
    }

    #[test]
    fn quantile_interpolates() {
        let s = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&s, 0.0), 0.0);
        assert_eq!(quantile_sorted(&s, 0.5), 2.0);
        assert_eq!(quantile_sorted(&s, 0.875), 3.5);
    }

    #[test]
    fn gaussian_z_for_95_percent() {
        assert!((normal_quantile(0.95) - 1.96).abs() < 1e-3);
    }

    #[test]
    fn apply_bands_rejects_mismatch_and_passes_empty() {
        let cfg = small_config();
        let r = undated(noise(120, 2));
        let track = sliding_complexity(&r, &cfg).unwrap();
        let other = undated(noise(130, 2));
        assert!(apply_bands(track.clone(), &other, &cfg).is_err());

        let empty = ComplexityTrack {
            symbol: "X".into(),
            centers: vec![],
            center_dates: vec![],
            entropy: vec![],
            complexity: vec![],
            bands: vec![],
            inside: vec![],
        };
        let short = undated(noise(50, 2));
        assert_eq!(apply_bands(empty.clone(), &short, &cfg).unwrap(), empty);
    }

    #[test]
    fn overall_efficiency_examples() {
        assert_eq!(overall_efficiency(&banded(vec![true; 8])).unwrap(), 1.0);
        let half: Vec<bool> = (0..10).map(|i| i % 2 == 0).collect();
        assert_eq!(overall_efficiency(&banded(half)).unwrap(), 0.5);
        assert!(overall_efficiency(&banded(vec![])).is_err());
        let mut unbanded = banded(vec![true; 3]);
        unbanded.bands.clear();
        assert!(overall_efficiency(&unbanded).is_err());
    }

    #[test]
    fn efficiency_series_examples() {
        let et = efficiency_series(&banded(vec![true; 50]), 7).unwrap();
        assert_eq!(et.len(), 44);
        assert!(et.values.iter().all(|&v| v == 1.0));

        let mut flags = vec![true; 360];
        flags.extend(vec![false; 360]);
        let et = efficiency_series(&banded(flags), 360).unwrap();
        assert_eq!(et.len(), 361);
        for (j, v) in et.values.iter().enumerate() {
            assert!((v - (1.0 - j as f64 / 360.0)).abs() < 1e-12);
        }
        assert_eq!(et.centers[0], 180);

        assert!(efficiency_series(&banded(vec![true; 5]), 6).is_err());
    }

    #[test]
    fn single_point_series_equals_overall() {
        let flags: Vec<bool> = (0..37).map(|i| i % 3 != 0).collect();
        let t = banded(flags);
        let et = efficiency_series(&t, 37).unwrap();
        assert_eq!(et.values, vec![overall_efficiency(&t).unwrap()]);
    }

    #[test]
    fn shuffled_window_keeps_pattern_total() {
        let x = noise(100, 4);
        let mut y = x.clone();
        y.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
        let a = crate::ordinal::ordinal_distribution(&x, 4).unwrap();
        let b = crate::ordinal::ordinal_distribution(&y, 4).unwrap();
        assert_eq!(a.total(), b.total());
    }

    proptest! {
        #[test]
        fn efficiency_steps_are_lipschitz(
            flags in prop::collection::vec(any::<bool>(), 20..200),
            w in 1usize..20,
        ) {
            let et = efficiency_series(&banded(flags), w).unwrap();
            for pair in et.values.windows(2) {
                prop_assert!((pair[1] - pair[0]).abs() <= 1.0 / w as f64 + 1e-12);
            }
            prop_assert!(et.values.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
