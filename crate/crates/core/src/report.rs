//! Summary statistics over many assets: density of `E`, its correlation with
//! market capitalization, and per-group mean `E_t` curves split by series age.

use serde::Serialize;
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

pub const KDE_GRID_POINTS: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KdeCurve {
    pub bandwidth: f64,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
}

fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Silverman's rule of thumb `1.06 σ̂ n^(−1/5)`. Zero spread falls back to
/// `1e−3·|mean| + 1e−6`.
pub fn silverman_bandwidth(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::insufficient("bandwidth needs at least 2 values"));
    }
    let (mean, sd) = mean_and_sd(values);
    Ok(if sd > 0.0 {
        1.06 * sd * (values.len() as f64).powf(-0.2)
    } else {
        1e-3 * mean.abs() + 1e-6
    })
}

/// Gaussian kernel density on 512 evenly spaced points over
/// `[min − 3h, max + 3h]`. `bandwidth` overrides Silverman's rule.
pub fn kde(values: &[f64], bandwidth: Option<f64>) -> Result<KdeCurve> {
    if values.len() < 2 {
        return Err(Error::insufficient(format!(
            "density estimate needs at least 2 values, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite value in density input"));
    }
    let h = match bandwidth {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => return Err(Error::invalid(format!("bandwidth {h} must be positive"))),
        None => silverman_bandwidth(values)?,
    };
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min) - 3.0 * h;
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
    let step = (hi - lo) / (KDE_GRID_POINTS - 1) as f64;
    let norm = 1.0 / (values.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let grid: Vec<f64> = (0..KDE_GRID_POINTS).map(|i| lo + step * i as f64).collect();
    let density = grid
        .iter()
        .map(|&x| {
            norm * values
                .iter()
                .map(|v| (-0.5 * ((x - v) / h).powi(2)).exp())
                .sum::<f64>()
        })
        .collect();
    Ok(KdeCurve {
        bandwidth: h,
        grid,
        density,
    })
}

/// Trapezoid-rule integral of a sampled curve.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pearson {
    pub r: f64,
    /// Two-tailed p-value of `t = r √((n − 2)/(1 − r²))` under Student's t
    /// with `n − 2` degrees of freedom.
    pub p: f64,
    pub n: usize,
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<Pearson> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::insufficient(format!("correlation needs at least 3 pairs, got {n}")));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::invalid("correlation undefined for zero variance"));
    }
    // sqrt(a * a) == a exactly, so y = ±x gives r = ±1 without rounding.
    let norm = match (sxx * syy).sqrt() {
        n if n.is_finite() && n > 0.0 => n,
        _ => sxx.sqrt() * syy.sqrt(),
    };
    let r = (sxy / norm).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p = if r.abs() == 1.0 {
        0.0
    } else {
        let t2 = r * r * df / (1.0 - r * r);
        // P(|T| > |t|) = I_{df/(df+t²)}(df/2, 1/2)
        beta_reg(df / 2.0, 0.5, df / (df + t2)).clamp(0.0, 1.0)
    };
    Ok(Pearson { r, p, n })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TercileCurve {
    pub tercile: usize,
    /// Indices into the profile list.
    pub members: Vec<usize>,
    pub min_len: usize,
    pub max_len: usize,
    /// Pointwise mean aligned at the last observation; index `len − 1` is the
    /// most recent point.
    pub mean: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupProfile {
    pub group: usize,
    pub n_members: usize,
    pub share: f64,
    /// True when the group had fewer than 3 members and holds one curve.
    pub fallback: bool,
    pub curves: Vec<TercileCurve>,
}

fn end_aligned_mean(profiles: &[&[f64]]) -> Vec<f64> {
    let len = profiles.iter().map(|p| p.len()).max().unwrap_or(0);
    (0..len)
        .map(|i| {
            let back = len - 1 - i;
            let (sum, n) = profiles
                .iter()
                .filter(|p| p.len() > back)
                .fold((0.0, 0usize), |(s, n), p| (s + p[p.len() - 1 - back], n + 1));
            sum / n as f64
        })
        .collect()
}

/// Split each group into three age buckets of about equal count by profile
/// length (equal lengths go to the younger bucket) and average each bucket.
pub fn group_profiles(labels: &[usize], profiles: &[Vec<f64>]) -> Result<Vec<GroupProfile>> {
    if labels.len() != profiles.len() {
        return Err(Error::invalid(format!(
            "{} labels for {} profiles",
            labels.len(),
            profiles.len()
        )));
    }
    if let Some(i) = profiles.iter().position(Vec::is_empty) {
        return Err(Error::invalid(format!("profile {i} is empty")));
    }
    let total = labels.len();
    let n_groups = labels.iter().max().map_or(0, |m| m + 1);
    let mut out = Vec::with_capacity(n_groups);
    for group in 0..n_groups {
        let mut members: Vec<usize> = (0..total).filter(|&i| labels[i] == group).collect();
        if members.is_empty() {
            continue;
        }
        members.sort_by_key(|&i| (profiles[i].len(), i));
        let n = members.len();
        let curve = |tercile: usize, ids: Vec<usize>| {
            let slices: Vec<&[f64]> = ids.iter().map(|&i| profiles[i].as_slice()).collect();
            TercileCurve {
                tercile,
                min_len: slices.iter().map(|s| s.len()).min().unwrap_or(0),
                max_len: slices.iter().map(|s| s.len()).max().unwrap_or(0),
                mean: end_aligned_mean(&slices),
                members: ids,
            }
        };
        let (fallback, curves) = if n < 3 {
            (true, vec![curve(0, members.clone())])
        } else {
            let mut bucket: Vec<usize> = (0..n).map(|rank| rank * 3 / n).collect();
            for r in 1..n {
                if profiles[members[r]].len() == profiles[members[r - 1]].len() {
                    bucket[r] = bucket[r - 1];
                }
            }
            let curves = (0..3)
                .filter_map(|t| {
                    let ids: Vec<usize> = (0..n).filter(|&r| bucket[r] == t).map(|r| members[r]).collect();
                    (!ids.is_empty()).then(|| curve(t, ids))
                })
                .collect();
            (false, curves)
        };
        out.push(GroupProfile {
            group,
            n_members: n,
            share: n as f64 / total as f64,
            fallback,
            curves,
        });
    }
    Ok(out)
}
