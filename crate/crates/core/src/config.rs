use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ordinal::{factorial, MAX_DIM, MIN_DIM};

/// How the surrogate confidence band is derived from the shuffled realizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BandMode {
    /// `mean ± z·sd` with `z` the two-sided normal quantile of the confidence.
    #[default]
    Gaussian,
    /// Empirical `(1 − c)/2` and `(1 + c)/2` quantiles of the realizations.
    Quantile,
}

/// Local cost used by the DTW recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DtwCost {
    /// `(a − b)²` accumulated, square root of the total.
    #[default]
    Squared,
    /// `|a − b|` accumulated, no final transform.
    Abs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub embedding_dim: usize,
    pub window: usize,
    pub surrogates: usize,
    pub confidence: f64,
    pub efficiency_window: usize,
    /// Assets need strictly more returns than this.
    pub min_returns: usize,
    /// Assets need strictly more `(H_t, C_t)` windows than this to enter clustering.
    pub min_track: usize,
    pub master_seed: u64,
    pub band_mode: BandMode,
    pub dtw_cost: DtwCost,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            embedding_dim: 4,
            window: 500,
            surrogates: 30,
            confidence: 0.95,
            efficiency_window: 360,
            min_returns: 600,
            min_track: 460,
            master_seed: 42,
            band_mode: BandMode::Gaussian,
            dtw_cost: DtwCost::Squared,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        let d = self.embedding_dim;
        if !(MIN_DIM..=MAX_DIM).contains(&d) {
            return Err(Error::InvalidConfig(format!(
                "embedding dimension {d} outside [{MIN_DIM}, {MAX_DIM}]"
            )));
        }
        // d! must be much smaller than the window.
        if factorial(d) * 10 > self.window {
            return Err(Error::InvalidConfig(format!(
                "window {} too short for embedding dimension {d}: need at least {}",
                self.window,
                factorial(d) * 10
            )));
        }
        if self.surrogates < 2 {
            return Err(Error::InvalidConfig(
                "at least 2 surrogates are needed for a band".into(),
            ));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "confidence {} not in (0, 1)",
                self.confidence
            )));
        }
        if self.efficiency_window == 0 {
            return Err(Error::InvalidConfig("efficiency window must be positive".into()));
        }
        if self.min_returns == 0 {
            return Err(Error::InvalidConfig("min_returns must be positive".into()));
        }
        if self.min_track == 0 {
            return Err(Error::InvalidConfig("min_track must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = AnalysisConfig::default();
        assert_eq!(cfg.embedding_dim, 4);
        assert_eq!(cfg.window, 500);
        assert_eq!(cfg.surrogates, 30);
        assert_eq!(cfg.efficiency_window, 360);
        assert_eq!(cfg.min_returns, 600);
        assert_eq!(cfg.min_track, 460);
        cfg.validate().unwrap();
    }

    #[test]
    fn window_must_dominate_pattern_count() {
        let cfg = AnalysisConfig {
            embedding_dim: 5,
            window: 1199,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = AnalysisConfig {
            window: 1200,
            ..cfg
        };
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_fields() {
        let base = AnalysisConfig::default();
        for bad in [
            AnalysisConfig { embedding_dim: 1, ..base.clone() },
            AnalysisConfig { embedding_dim: 9, window: 10_000_000, ..base.clone() },
            AnalysisConfig { surrogates: 1, ..base.clone() },
            AnalysisConfig { confidence: 1.0, ..base.clone() },
            AnalysisConfig { efficiency_window: 0, ..base.clone() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }
}
