//! Informational efficiency of price series measured with ordinal-pattern
//! statistics.
//!
//! The pipeline turns daily closing prices into log returns, slides a window
//! over them to obtain permutation entropy `H_t` and statistical complexity
//! `C_t`, and compares each window with a band built from shuffled copies of
//! itself. The share of windows whose `(H_t, C_t)` sits inside the band is the
//! overall efficiency `E`; the same share over a moving window gives `E_t`.
//! Efficiency profiles are compared with dynamic time warping and grouped by
//! average-linkage clustering cut at the silhouette optimum.

pub mod cluster;
pub mod config;
pub mod efficiency;
pub mod error;
pub mod ingest;
pub mod io;
pub mod ordinal;
pub mod pipeline;
pub mod report;
pub mod similarity;

pub use config::{AnalysisConfig, BandMode, DtwCost};
pub use error::{Error, Result};
