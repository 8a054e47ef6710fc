use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use infoeff::efficiency::efficiency_profile;
use infoeff::ingest::{filter_by_length, load_dataset};
use infoeff::io;
use infoeff::ordinal::{
    jensen_shannon_divergence, ordinal_distribution, permutation_entropy, statistical_complexity, PatternCodec,
};
use infoeff::pipeline::{self, ReportOptions};
use infoeff::{AnalysisConfig, BandMode, DtwCost, Error, Result};

#[derive(Parser)]
#[command(name = "infoeff", version, about = "Informational efficiency of price series from ordinal patterns")]
struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BandArg {
    Gaussian,
    Quantile,
}

#[derive(Clone, Copy, ValueEnum)]
enum CostArg {
    Squared,
    Abs,
}

impl From<CostArg> for DtwCost {
    fn from(c: CostArg) -> Self {
        match c {
            CostArg::Squared => DtwCost::Squared,
            CostArg::Abs => DtwCost::Abs,
        }
    }
}

#[derive(Args, Clone)]
struct AnalysisArgs {
    #[arg(short = 'd', long = "embedding-dim", default_value_t = 4)]
    embedding_dim: usize,
    #[arg(short = 'w', long = "window", default_value_t = 500)]
    window: usize,
    #[arg(long, default_value_t = 30)]
    surrogates: usize,
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
    #[arg(long = "efficiency-window", default_value_t = 360)]
    efficiency_window: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long = "band-mode", value_enum, default_value = "gaussian")]
    band_mode: BandArg,
    /// Assets need strictly more returns than this.
    #[arg(long = "min-returns", default_value_t = 600)]
    min_returns: usize,
    /// Assets need strictly more windows than this to enter clustering.
    #[arg(long = "min-track", default_value_t = 460)]
    min_track: usize,
    #[arg(long = "dtw-cost", value_enum, default_value = "squared")]
    dtw_cost: CostArg,
}

impl AnalysisArgs {
    fn config(&self) -> AnalysisConfig {
        AnalysisConfig {
            embedding_dim: self.embedding_dim,
            window: self.window,
            surrogates: self.surrogates,
            confidence: self.confidence,
            efficiency_window: self.efficiency_window,
            min_returns: self.min_returns,
            min_track: self.min_track,
            master_seed: self.seed,
            band_mode: match self.band_mode {
                BandArg::Gaussian => BandMode::Gaussian,
                BandArg::Quantile => BandMode::Quantile,
            },
            dtw_cost: self.dtw_cost.into(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Entropy/complexity tracks, surrogate bands and overall efficiency E.
    Analyze {
        #[arg(long)]
        data: PathBuf,
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
        #[command(flatten)]
        analysis: AnalysisArgs,
    },
    /// Time-resolved efficiency E_t from a tracks file (or from raw data).
    Dynamics {
        #[arg(long, conflicts_with = "data", required_unless_present = "data")]
        tracks: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
        #[command(flatten)]
        analysis: AnalysisArgs,
    },
    /// Pairwise DTW distance matrix of E_t profiles.
    Similarity {
        #[arg(long)]
        profiles: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "dtw-cost", value_enum, default_value = "squared")]
        dtw_cost: CostArg,
    },
    /// Average-linkage clustering cut at the silhouette optimum.
    Cluster {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dendrogram: PathBuf,
    },
    /// KDE of E, Pearson of E vs market cap, group E_t profiles.
    Report {
        #[arg(long)]
        summary: PathBuf,
        #[arg(long)]
        profiles: Option<PathBuf>,
        #[arg(long, requires = "profiles")]
        clusters: Option<PathBuf>,
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
        #[arg(long = "kde-bandwidth")]
        kde_bandwidth: Option<f64>,
    },
    /// All stages end to end.
    Pipeline {
        #[arg(long)]
        data: PathBuf,
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[arg(long = "kde-bandwidth")]
        kde_bandwidth: Option<f64>,
    },
    /// Print H, C and the pattern distribution of one window.
    Ordinal {
        #[arg(long)]
        window: PathBuf,
        #[arg(short = 'd', long = "embedding-dim", default_value_t = 4)]
        embedding_dim: usize,
    },
}

fn analyze(data: &Path, out_dir: &Path, config: &AnalysisConfig) -> Result<()> {
    config.validate()?;
    let dataset = load_dataset(data)?;
    for d in &dataset.diagnostics {
        eprintln!("warning: {d}");
    }
    let eligible = filter_by_length(dataset.series, config.min_returns);
    if eligible.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no assets passed filter: none has more than {} returns",
            config.min_returns
        )));
    }
    let (analyses, skipped) = pipeline::analyze_assets(&eligible, config)?;
    for d in &skipped {
        eprintln!("warning: {d}");
    }
    let mut diagnostics = dataset.diagnostics;
    diagnostics.extend(skipped);
    pipeline::write_diagnostics(&out_dir.join(pipeline::DIAGNOSTICS_FILE), &diagnostics)?;
    let tracks: Vec<_> = analyses.iter().map(|a| a.track.clone()).collect();
    io::write_tracks(&out_dir.join(pipeline::TRACKS_FILE), &tracks)?;
    let summary = pipeline::summary_rows(&analyses);
    io::write_summary(&out_dir.join(pipeline::SUMMARY_FILE), &summary)?;
    for row in &summary {
        println!("{}\tE={}\twindows={}", row.symbol, io::fmt_sig(row.efficiency), row.n_windows);
    }
    Ok(())
}

fn dynamics(tracks: Option<&Path>, data: Option<&Path>, out_dir: &Path, config: &AnalysisConfig) -> Result<()> {
    config.validate()?;
    let tracks = match (tracks, data) {
        (Some(path), _) => io::read_tracks(path)?,
        (None, Some(data)) => {
            let dataset = load_dataset(data)?;
            let eligible = filter_by_length(dataset.series, config.min_returns);
            pipeline::analyze_assets(&eligible, config)?
                .0
                .into_iter()
                .map(|a| a.track)
                .collect()
        }
        (None, None) => return Err(Error::InvalidArgument("either --tracks or --data is required".into())),
    };
    let refs: Vec<_> = tracks.iter().collect();
    let profiles = pipeline::dynamic_profiles(&refs, config)?;
    if profiles.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no asset has more than {} windows",
            config.min_track
        )));
    }
    io::write_profiles(&out_dir.join(pipeline::PROFILES_FILE), &profiles)?;
    for t in &tracks {
        if let Ok(p) = efficiency_profile(t, config.efficiency_window) {
            eprintln!("{}\tE={}\tEt points={}", p.symbol, io::fmt_sig(p.efficiency), p.series.len());
        }
    }
    Ok(())
}

fn similarity(profiles: &Path, out: &Path, cost: DtwCost) -> Result<()> {
    let profiles = io::read_profiles(profiles)?;
    let matrix = infoeff::similarity::distance_matrix(&profiles, cost)?;
    io::write_matrix(out, &matrix)
}

fn cluster(matrix: &Path, out: &Path, dendrogram_out: &Path) -> Result<()> {
    use infoeff::cluster::{average_linkage, optimal_cut};
    let matrix = io::read_matrix(matrix)?;
    let dendrogram = average_linkage(&matrix)?;
    let assignment = optimal_cut(&dendrogram, &matrix)?;
    io::write_dendrogram(dendrogram_out, &dendrogram.merges)?;
    io::write_clusters(out, &io::cluster_rows(matrix.labels(), &assignment))?;
    println!(
        "threshold={} clusters={} mean_silhouette={}",
        io::fmt_sig(assignment.threshold),
        assignment.n_clusters,
        io::fmt_sig(assignment.silhouette.mean)
    );
    Ok(())
}

fn report(
    summary: &Path,
    profiles: Option<&Path>,
    clusters: Option<&Path>,
    out_dir: &Path,
    options: &ReportOptions,
) -> Result<()> {
    let summary = io::read_summary(summary)?;
    let profiles = profiles.map(io::read_profiles).transpose()?.unwrap_or_default();
    let clusters = clusters.map(io::read_clusters).transpose()?.unwrap_or_default();
    let report = pipeline::build_report(&summary, &clusters, &profiles, options)?;
    std::fs::create_dir_all(out_dir)?;
    pipeline::write_report(out_dir, &report)?;
    if let Some(p) = &report.pearson {
        println!("pearson r={} p={} n={}", io::fmt_sig(p.r), io::fmt_sig(p.p), p.n);
    }
    for note in &report.notes {
        eprintln!("note: {note}");
    }
    Ok(())
}

fn ordinal(window: &Path, d: usize) -> Result<()> {
    let values = io::read_numbers(window)?;
    let dist = ordinal_distribution(&values, d)?;
    println!("H={}", permutation_entropy(&dist));
    println!("C={}", statistical_complexity(&dist));
    println!("D={}", jensen_shannon_divergence(&dist));
    println!("pattern,count,probability");
    let codec = PatternCodec::new(d)?;
    for (rank, (&c, &p)) in dist.counts().iter().zip(dist.probabilities()).enumerate() {
        if c > 0 {
            let perm: Vec<String> = codec.decode(rank).iter().map(usize::to_string).collect();
            println!("{},{c},{p}", perm.join(""));
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze { data, out_dir, analysis } => {
            std::fs::create_dir_all(&out_dir)?;
            analyze(&data, &out_dir, &analysis.config())
        }
        Command::Dynamics {
            tracks,
            data,
            out_dir,
            analysis,
        } => {
            std::fs::create_dir_all(&out_dir)?;
            dynamics(tracks.as_deref(), data.as_deref(), &out_dir, &analysis.config())
        }
        Command::Similarity { profiles, out, dtw_cost } => similarity(&profiles, &out, dtw_cost.into()),
        Command::Cluster {
            matrix,
            out,
            dendrogram,
        } => cluster(&matrix, &out, &dendrogram),
        Command::Report {
            summary,
            profiles,
            clusters,
            out_dir,
            kde_bandwidth,
        } => report(
            &summary,
            profiles.as_deref(),
            clusters.as_deref(),
            &out_dir,
            &ReportOptions { kde_bandwidth },
        ),
        Command::Pipeline {
            data,
            out_dir,
            analysis,
            kde_bandwidth,
        } => {
            let out = pipeline::run_pipeline(&analysis.config(), &data, &out_dir, &ReportOptions { kde_bandwidth })?;
            for note in &out.report.notes {
                eprintln!("note: {note}");
            }
            for f in &out.files {
                println!("{}", f.display());
            }
            Ok(())
        }
        Command::Ordinal { window, embedding_dim } => ordinal(&window, embedding_dim),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
    {
        eprintln!("error: {e}");
        return ExitCode::from(4);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
