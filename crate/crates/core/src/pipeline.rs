//! End-to-end run: ingest, efficiency, dynamics, similarity, clustering and
//! report, writing every stage's output under one directory.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::cluster::{average_linkage, optimal_cut, ClusterAssignment, Dendrogram};
use crate::config::AnalysisConfig;
use crate::efficiency::{analyze_returns, efficiency_series, overall_efficiency, ComplexityTrack, EfficiencyProfile};
use crate::error::{Error, Result};
use crate::ingest::{filter_by_length, load_dataset, log_returns, Diagnostic, PriceSeries};
use crate::io::{self, ClusterRow, SummaryRow};
use crate::report::{group_profiles, kde, pearson, GroupProfile, KdeCurve, Pearson};
use crate::similarity::{distance_matrix, DistanceMatrix};

pub const TRACKS_FILE: &str = "tracks.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const PROFILES_FILE: &str = "efficiency_series.csv";
pub const MATRIX_FILE: &str = "matrix.csv";
pub const DENDROGRAM_FILE: &str = "dendrogram.json";
pub const CLUSTERS_FILE: &str = "clusters.csv";
pub const KDE_FILE: &str = "kde.csv";
pub const GROUP_PROFILES_FILE: &str = "group_profiles.csv";
pub const REPORT_FILE: &str = "report.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";

#[derive(Debug, Clone, Default)]
pub struct ReportOptions {
    pub kde_bandwidth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssetSummary {
    pub symbol: String,
    #[serde(rename = "E")]
    pub efficiency: f64,
    pub n_windows: usize,
    pub mcap_mean: Option<f64>,
    pub group: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusteringSummary {
    pub threshold: f64,
    pub n_clusters: usize,
    pub mean_silhouette: f64,
    pub shares: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineReport {
    pub assets: Vec<AssetSummary>,
    pub kde: Option<KdeCurve>,
    pub pearson: Option<Pearson>,
    pub clustering: Option<ClusteringSummary>,
    pub group_profiles: Vec<GroupProfile>,
    /// Stages or statistics that could not be computed, with the reason.
    pub notes: Vec<String>,
}

/// Per-asset outcome of the efficiency stage.
#[derive(Debug, Clone)]
pub struct AssetAnalysis {
    pub track: ComplexityTrack,
    pub efficiency: f64,
    pub mcap_mean: Option<f64>,
}

/// Returns, banded track and `E` for every asset, in input order. Assets too
/// short for one window are reported in `skipped`.
pub fn analyze_assets(
    series: &[PriceSeries],
    config: &AnalysisConfig,
) -> Result<(Vec<AssetAnalysis>, Vec<Diagnostic>)> {
    let results: Vec<Result<Option<AssetAnalysis>>> = series
        .par_iter()
        .map(|s| {
            let returns = log_returns(s)?;
            if returns.len() < config.window {
                return Ok(None);
            }
            let track = analyze_returns(&returns, config)?;
            let efficiency = overall_efficiency(&track)?;
            Ok(Some(AssetAnalysis {
                track,
                efficiency,
                mcap_mean: s.market_cap_mean(),
            }))
        })
        .collect();
    let mut analyses = Vec::new();
    let mut skipped = Vec::new();
    for (s, r) in series.iter().zip(results) {
        match r? {
            Some(a) => analyses.push(a),
            None => skipped.push(Diagnostic {
                file: String::new(),
                line: None,
                symbol: Some(s.symbol.clone()),
                message: format!(
                    "asset skipped: {} returns, window needs {}",
                    s.n_returns(),
                    config.window
                ),
            }),
        }
    }
    Ok((analyses, skipped))
}

/// `E_t` for every track with strictly more than `min_track` windows.
pub fn dynamic_profiles(tracks: &[&ComplexityTrack], config: &AnalysisConfig) -> Result<Vec<EfficiencyProfile>> {
    tracks
        .iter()
        .filter(|t| t.len() > config.min_track && t.len() >= config.efficiency_window)
        .map(|t| {
            Ok(EfficiencyProfile {
                symbol: t.symbol.clone(),
                efficiency: overall_efficiency(t)?,
                series: efficiency_series(t, config.efficiency_window)?,
            })
        })
        .collect()
}

/// Dendrogram and silhouette-optimal assignment of labeled profiles.
pub fn cluster_profiles(
    profiles: &[(String, Vec<f64>)],
    config: &AnalysisConfig,
) -> Result<(DistanceMatrix, Dendrogram, ClusterAssignment)> {
    let matrix = distance_matrix(profiles, config.dtw_cost)?;
    let dendrogram = average_linkage(&matrix)?;
    let assignment = optimal_cut(&dendrogram, &matrix)?;
    Ok((matrix, dendrogram, assignment))
}

/// KDE, Pearson and group profiles from per-asset results. Statistics that
/// are undefined for the given data are left out with a note.
pub fn build_report(
    summary: &[SummaryRow],
    clusters: &[ClusterRow],
    profiles: &[(String, Vec<f64>)],
    options: &ReportOptions,
) -> Result<PipelineReport> {
    let mut notes = Vec::new();
    let efficiencies: Vec<f64> = summary.iter().map(|r| r.efficiency).collect();
    let kde = match kde(&efficiencies, options.kde_bandwidth) {
        Ok(k) => Some(k),
        Err(e @ Error::InsufficientData(_)) => {
            notes.push(format!("kde: {e}"));
            None
        }
        Err(e) => return Err(e),
    };

    let (ex, mx): (Vec<f64>, Vec<f64>) = summary
        .iter()
        .filter_map(|r| r.mcap_mean.map(|m| (r.efficiency, m)))
        .unzip();
    let pearson = match pearson(&ex, &mx) {
        Ok(p) => Some(p),
        Err(e) => {
            notes.push(format!("pearson: {e}"));
            None
        }
    };

    let group_of = |sym: &str| clusters.iter().find(|c| c.symbol == sym).map(|c| c.group);
    let assets = summary
        .iter()
        .map(|r| AssetSummary {
            symbol: r.symbol.clone(),
            efficiency: r.efficiency,
            n_windows: r.n_windows,
            mcap_mean: r.mcap_mean,
            group: group_of(&r.symbol),
        })
        .collect();

    let (clustering, group_profiles) = if clusters.is_empty() {
        notes.push("clustering: no cluster assignment".into());
        (None, Vec::new())
    } else {
        let mut labels = Vec::with_capacity(clusters.len());
        let mut curves = Vec::with_capacity(clusters.len());
        for c in clusters {
            let p = profiles
                .iter()
                .find(|(s, _)| s == &c.symbol)
                .ok_or_else(|| Error::invalid(format!("no efficiency profile for clustered asset `{}`", c.symbol)))?;
            labels.push(c.group);
            curves.push(p.1.clone());
        }
        let groups = group_profiles(&labels, &curves)?;
        let n = clusters.len() as f64;
        let mean_silhouette = clusters.iter().map(|c| c.s_i).sum::<f64>() / n;
        let summary = ClusteringSummary {
            threshold: clusters[0].threshold,
            n_clusters: groups.len(),
            mean_silhouette,
            shares: groups.iter().map(|g| g.share).collect(),
        };
        (Some(summary), groups)
    };

    Ok(PipelineReport {
        assets,
        kde,
        pearson,
        clustering,
        group_profiles,
        notes,
    })
}

/// Write the report files (`report.json`, and `kde.csv` / `group_profiles.csv`
/// when available).
pub fn write_report(out_dir: &Path, report: &PipelineReport) -> Result<()> {
    if let Some(k) = &report.kde {
        io::write_kde(&out_dir.join(KDE_FILE), k)?;
    }
    if !report.group_profiles.is_empty() {
        io::write_group_profiles(&out_dir.join(GROUP_PROFILES_FILE), &report.group_profiles)?;
    }
    io::write_json(&out_dir.join(REPORT_FILE), report)
}

pub fn write_diagnostics(path: &Path, diagnostics: &[Diagnostic]) -> Result<()> {
    io::write_output(path, |out| {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["file", "line", "symbol", "message"])?;
        for d in diagnostics {
            w.write_record([
                d.file.clone(),
                d.line.map(|l| l.to_string()).unwrap_or_default(),
                d.symbol.clone().unwrap_or_default(),
                d.message.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })
}

pub fn summary_rows(analyses: &[AssetAnalysis]) -> Vec<SummaryRow> {
    analyses
        .iter()
        .map(|a| SummaryRow {
            symbol: a.track.symbol.clone(),
            efficiency: a.efficiency,
            n_windows: a.track.len(),
            mcap_mean: a.mcap_mean,
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub report: PipelineReport,
    pub files: Vec<PathBuf>,
}

/// Run every stage on the dataset at `data` and write all outputs to `out_dir`.
pub fn run_pipeline(
    config: &AnalysisConfig,
    data: &Path,
    out_dir: &Path,
    options: &ReportOptions,
) -> Result<PipelineOutput> {
    config.validate().map_err(|e| e.in_stage("config"))?;
    std::fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();

    let dataset = load_dataset(data).map_err(|e| e.in_stage("ingest"))?;
    let mut diagnostics = dataset.diagnostics;
    let eligible = filter_by_length(dataset.series, config.min_returns);
    if eligible.is_empty() {
        write_diagnostics(&out_dir.join(DIAGNOSTICS_FILE), &diagnostics)?;
        return Err(Error::insufficient(format!(
            "no assets passed filter: none has more than {} returns",
            config.min_returns
        ))
        .in_stage("ingest"));
    }

    let (analyses, skipped) = analyze_assets(&eligible, config).map_err(|e| e.in_stage("efficiency"))?;
    diagnostics.extend(skipped);
    let path = out_dir.join(DIAGNOSTICS_FILE);
    write_diagnostics(&path, &diagnostics)?;
    files.push(path);
    if analyses.is_empty() {
        return Err(Error::insufficient("no asset has enough returns for one window").in_stage("efficiency"));
    }

    let tracks: Vec<ComplexityTrack> = analyses.iter().map(|a| a.track.clone()).collect();
    let summary = summary_rows(&analyses);
    for (name, result) in [
        (TRACKS_FILE, io::write_tracks(&out_dir.join(TRACKS_FILE), &tracks)),
        (SUMMARY_FILE, io::write_summary(&out_dir.join(SUMMARY_FILE), &summary)),
    ] {
        result.map_err(|e| e.in_stage("efficiency"))?;
        files.push(out_dir.join(name));
    }

    let track_refs: Vec<&ComplexityTrack> = tracks.iter().collect();
    let dynamics = dynamic_profiles(&track_refs, config).map_err(|e| e.in_stage("dynamics"))?;
    io::write_profiles(&out_dir.join(PROFILES_FILE), &dynamics).map_err(|e| e.in_stage("dynamics"))?;
    files.push(out_dir.join(PROFILES_FILE));
    let labeled: Vec<(String, Vec<f64>)> = dynamics
        .iter()
        .map(|p| (p.symbol.clone(), p.series.values.clone()))
        .collect();

    let mut cluster_rows = Vec::new();
    let mut notes = Vec::new();
    if labeled.len() >= 3 {
        let (matrix, dendrogram, assignment) =
            cluster_profiles(&labeled, config).map_err(|e| e.in_stage("cluster"))?;
        io::write_matrix(&out_dir.join(MATRIX_FILE), &matrix).map_err(|e| e.in_stage("similarity"))?;
        io::write_dendrogram(&out_dir.join(DENDROGRAM_FILE), &dendrogram.merges)
            .map_err(|e| e.in_stage("cluster"))?;
        cluster_rows = io::cluster_rows(matrix.labels(), &assignment);
        io::write_clusters(&out_dir.join(CLUSTERS_FILE), &cluster_rows).map_err(|e| e.in_stage("cluster"))?;
        files.extend([MATRIX_FILE, DENDROGRAM_FILE, CLUSTERS_FILE].map(|f| out_dir.join(f)));
    } else {
        notes.push(format!(
            "clustering skipped: {} assets have more than {} windows, need at least 3",
            labeled.len(),
            config.min_track
        ));
    }

    let mut report =
        build_report(&summary, &cluster_rows, &labeled, options).map_err(|e| e.in_stage("report"))?;
    notes.append(&mut report.notes);
    report.notes = notes;
    write_report(out_dir, &report).map_err(|e| e.in_stage("report"))?;
    if report.kde.is_some() {
        files.push(out_dir.join(KDE_FILE));
    }
    if !report.group_profiles.is_empty() {
        files.push(out_dir.join(GROUP_PROFILES_FILE));
    }
    files.push(out_dir.join(REPORT_FILE));
    Ok(PipelineOutput { report, files })
}
