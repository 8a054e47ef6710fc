//! File formats read and written by the command-line tool.
//!
//! Every writer goes through [`write_output`], which writes `<name>.partial`
//! and renames it into place only after the content is complete.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::cluster::{ClusterAssignment, Merge};
use crate::efficiency::{Band, ComplexityTrack, EfficiencyProfile};
use crate::error::{Error, Result};
use crate::report::{GroupProfile, KdeCurve};
use crate::similarity::DistanceMatrix;

/// Format with 6 significant digits in the style of C's `%g`.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        trim_zeros(format!("{:.*}", (5 - exp) as usize, x))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn partial_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".partial");
    path.with_file_name(name)
}

/// Write through `<path>.partial`, renaming on success. On failure the
/// partial file is left behind.
pub fn write_output<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let tmp = partial_path(path);
    {
        let mut out = BufWriter::new(File::create(&tmp)?);
        fill(&mut out)?;
        out.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn csv_writer(out: &mut dyn Write) -> csv::Writer<&mut dyn Write> {
    csv::WriterBuilder::new().from_writer(out)
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    if !path.exists() {
        return Err(Error::MissingPath(path.to_path_buf()));
    }
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?)
}

fn check_header(rdr: &mut csv::Reader<File>, path: &Path, expected: &[&str]) -> Result<()> {
    let got: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if got != expected {
        return Err(Error::Header {
            file: path.display().to_string(),
            message: format!("expected `{}`, found `{}`", expected.join(","), got.join(",")),
        });
    }
    Ok(())
}

fn parse_f64(field: &str, what: &str, line: u64) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| Error::Format(format!("line {line}: bad {what} `{field}`")))
}

fn center_label(track_dates: &[NaiveDate], centers: &[usize], i: usize) -> String {
    match track_dates.get(i) {
        Some(d) => d.to_string(),
        None => centers.get(i).map_or_else(|| i.to_string(), usize::to_string),
    }
}

pub const TRACKS_HEADER: [&str; 9] = [
    "symbol", "center_date", "H", "C", "H_lo", "H_hi", "C_lo", "C_hi", "inside",
];

pub fn write_tracks(path: &Path, tracks: &[ComplexityTrack]) -> Result<()> {
    write_output(path, |out| {
        let mut w = csv_writer(out);
        w.write_record(TRACKS_HEADER)?;
        for t in tracks {
            for i in 0..t.len() {
                let b = t.bands.get(i);
                let opt = |f: fn(&Band) -> f64| b.map_or_else(String::new, |b| fmt_sig(f(b)));
                w.write_record([
                    t.symbol.clone(),
                    center_label(&t.center_dates, &t.centers, i),
                    fmt_sig(t.entropy[i]),
                    fmt_sig(t.complexity[i]),
                    opt(|b| b.h_lo),
                    opt(|b| b.h_hi),
                    opt(|b| b.c_lo),
                    opt(|b| b.c_hi),
                    t.inside.get(i).map_or("", |&x| if x { "1" } else { "0" }).to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    })
}

/// Read a tracks file back into banded tracks, one per symbol in file order.
/// Center labels that are ISO dates fill `center_dates`; integer labels fill
/// `centers`.
pub fn read_tracks(path: &Path) -> Result<Vec<ComplexityTrack>> {
    let mut rdr = csv_reader(path)?;
    check_header(&mut rdr, path, &TRACKS_HEADER)?;
    let mut tracks: Vec<ComplexityTrack> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let symbol = &rec[0];
        if tracks.last().is_none_or(|t| t.symbol != symbol) {
            if tracks.iter().any(|t| t.symbol == symbol) {
                return Err(Error::Format(format!("line {line}: rows of `{symbol}` are not contiguous")));
            }
            tracks.push(ComplexityTrack {
                symbol: symbol.to_string(),
                centers: Vec::new(),
                center_dates: Vec::new(),
                entropy: Vec::new(),
                complexity: Vec::new(),
                bands: Vec::new(),
                inside: Vec::new(),
            });
        }
        let t = tracks.last_mut().expect("pushed");
        if let Ok(d) = NaiveDate::parse_from_str(&rec[1], "%Y-%m-%d") {
            t.center_dates.push(d);
        } else if let Ok(c) = rec[1].parse::<usize>() {
            t.centers.push(c);
        } else {
            return Err(Error::Format(format!("line {line}: bad center `{}`", &rec[1])));
        }
        t.entropy.push(parse_f64(&rec[2], "H", line)?);
        t.complexity.push(parse_f64(&rec[3], "C", line)?);
        t.bands.push(Band {
            h_lo: parse_f64(&rec[4], "H_lo", line)?,
            h_hi: parse_f64(&rec[5], "H_hi", line)?,
            c_lo: parse_f64(&rec[6], "C_lo", line)?,
            c_hi: parse_f64(&rec[7], "C_hi", line)?,
        });
        t.inside.push(match &rec[8] {
            "1" | "true" => true,
            "0" | "false" => false,
            other => return Err(Error::Format(format!("line {line}: bad inside flag `{other}`"))),
        });
    }
    Ok(tracks)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub symbol: String,
    #[serde(rename = "E")]
    pub efficiency: f64,
    pub n_windows: usize,
    pub mcap_mean: Option<f64>,
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    write_output(path, |out| {
        let mut w = csv_writer(out);
        w.write_record(["symbol", "E", "n_windows", "mcap_mean"])?;
        for r in rows {
            w.write_record([
                r.symbol.clone(),
                fmt_sig(r.efficiency),
                r.n_windows.to_string(),
                r.mcap_mean.map(fmt_sig).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut rdr = csv_reader(path)?;
    check_header(&mut rdr, path, &["symbol", "E", "n_windows", "mcap_mean"])?;
    Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub const PROFILES_HEADER: [&str; 3] = ["symbol", "center_date", "Et"];

pub fn write_profiles(path: &Path, profiles: &[EfficiencyProfile]) -> Result<()> {
    write_output(path, |out| {
        let mut w = csv_writer(out);
        w.write_record(PROFILES_HEADER)?;
        for p in profiles {
            let s = &p.series;
            for (i, v) in s.values.iter().enumerate() {
                w.write_record([
                    p.symbol.clone(),
                    center_label(&s.center_dates, &s.centers, i),
                    fmt_sig(*v),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    })
}

/// Labeled `E_t` sequences in file order.
pub fn read_profiles(path: &Path) -> Result<Vec<(String, Vec<f64>)>> {
    let mut rdr = csv_reader(path)?;
    check_header(&mut rdr, path, &PROFILES_HEADER)?;
    let mut out: Vec<(String, Vec<f64>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let value = parse_f64(&rec[2], "Et", line)?;
        match out.last_mut() {
            Some((sym, values)) if sym == &rec[0] => values.push(value),
            _ => {
                if out.iter().any(|(s, _)| s == &rec[0]) {
                    return Err(Error::Format(format!(
                        "line {line}: rows of `{}` are not contiguous",
                        &rec[0]
                    )));
                }
                out.push((rec[0].to_string(), vec![value]));
            }
        }
    }
    Ok(out)
}

pub fn write_matrix(path: &Path, matrix: &DistanceMatrix) -> Result<()> {
    write_output(path, |out| {
        let mut w = csv_writer(out);
        let mut header = vec!["symbol".to_string()];
        header.extend(matrix.labels().iter().cloned());
        w.write_record(&header)?;
        for (i, label) in matrix.labels().iter().enumerate() {
            let mut row = vec![label.clone()];
            row.extend(matrix.row(i).iter().map(|&v| fmt_sig(v)));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    })
}

pub fn read_matrix(path: &Path) -> Result<DistanceMatrix> {
    let mut rdr = csv_reader(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("symbol") {
        return Err(Error::Header {
            file: path.display().to_string(),
            message: "first column must be `symbol`".into(),
        });
    }
    let labels: Vec<String> = header[1..].to_vec();
    let k = labels.len();
    let mut values = Vec::with_capacity(k * k);
    let mut n_rows = 0;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if n_rows >= k || rec.len() != k + 1 || rec[0] != labels[n_rows] {
            return Err(Error::Format(format!("line {line}: row does not match header")));
        }
        for f in rec.iter().skip(1) {
            values.push(parse_f64(f, "distance", line)?);
        }
        n_rows += 1;
    }
    if n_rows != k {
        return Err(Error::Format(format!("{n_rows} rows for {k} columns")));
    }
    DistanceMatrix::new(labels, values)
}

pub fn write_dendrogram(path: &Path, merges: &[Merge]) -> Result<()> {
    write_output(path, |out| {
        serde_json::to_writer_pretty(&mut *out, merges)?;
        out.write_all(b"\n")?;
        Ok(())
    })
}

pub fn read_dendrogram(path: &Path) -> Result<Vec<Merge>> {
    if !path.exists() {
        return Err(Error::MissingPath(path.to_path_buf()));
    }
    Ok(serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRow {
    pub symbol: String,
    pub group: usize,
    pub threshold: f64,
    pub s_i: f64,
}

pub fn cluster_rows(labels: &[String], assignment: &ClusterAssignment) -> Vec<ClusterRow> {
    labels
        .iter()
        .enumerate()
        .map(|(i, symbol)| ClusterRow {
            symbol: symbol.clone(),
            group: assignment.labels[i],
            threshold: assignment.threshold,
            s_i: assignment.silhouette.s[i],
        })
        .collect()
}

pub fn write_clusters(path: &Path, rows: &[ClusterRow]) -> Result<()> {
    write_output(path, |out| {
        let mut w = csv_writer(out);
        w.write_record(["symbol", "group", "threshold", "s_i"])?;
        for r in rows {
            w.write_record([
                r.symbol.clone(),
                r.group.to_string(),
                fmt_sig(r.threshold),
                fmt_sig(r.s_i),
            ])?;
        }
        w.flush()?;
        Ok(())
    })
}

pub fn read_clusters(path: &Path) -> Result<Vec<ClusterRow>> {
    let mut rdr = csv_reader(path)?;
    check_header(&mut rdr, path, &["symbol", "group", "threshold", "s_i"])?;
    Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn write_kde(path: &Path, curve: &KdeCurve) -> Result<()> {
    write_output(path, |out| {
        let mut w = csv_writer(out);
        w.write_record(["E", "density"])?;
        for (x, y) in curve.grid.iter().zip(&curve.density) {
            w.write_record([fmt_sig(*x), fmt_sig(*y)])?;
        }
        w.flush()?;
        Ok(())
    })
}

pub fn write_group_profiles(path: &Path, groups: &[GroupProfile]) -> Result<()> {
    write_output(path, |out| {
        let mut w = csv_writer(out);
        w.write_record([
            "group", "tercile", "n_members", "min_len", "max_len", "fallback", "steps_before_end", "Et",
        ])?;
        for g in groups {
            for c in &g.curves {
                let len = c.mean.len();
                for (i, v) in c.mean.iter().enumerate() {
                    w.write_record([
                        g.group.to_string(),
                        c.tercile.to_string(),
                        c.members.len().to_string(),
                        c.min_len.to_string(),
                        c.max_len.to_string(),
                        g.fallback.to_string(),
                        (len - 1 - i).to_string(),
                        fmt_sig(*v),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_output(path, |out| {
        serde_json::to_writer_pretty(&mut *out, value)?;
        out.write_all(b"\n")?;
        Ok(())
    })
}

/// Numbers from a CSV or plain list; a non-numeric first row is a header.
pub fn read_numbers(path: &Path) -> Result<Vec<f64>> {
    if !path.exists() {
        return Err(Error::MissingPath(path.to_path_buf()));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut values = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parsed: std::result::Result<Vec<f64>, _> =
            rec.iter().filter(|f| !f.is_empty()).map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => values.extend(v),
            Err(_) if row == 0 => continue,
            Err(_) => {
                return Err(Error::Format(format!("row {}: non-numeric value", row + 1)));
            }
        }
    }
    Ok(values)
}
