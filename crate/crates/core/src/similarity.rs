//! Dynamic time warping between efficiency profiles and the pairwise distance
//! matrix built from it.

use rayon::prelude::*;

use crate::config::DtwCost;
use crate::error::{Error, Result};

/// DTW distance with squared local cost and a square root on the total.
pub fn dtw_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    dtw_distance_with(a, b, DtwCost::Squared)
}

/// Unconstrained DTW with match, insertion and deletion steps. Both endpoints
/// are aligned. Working memory is two rows of length `min(len(a), len(b)) + 1`.
pub fn dtw_distance_with(a: &[f64], b: &[f64], cost: DtwCost) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("DTW of an empty series"));
    }
    // The recursion is symmetric in its arguments, so iterate over the longer
    // series and keep rows as long as the shorter one.
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let local = |x: f64, y: f64| match cost {
        DtwCost::Squared => (x - y) * (x - y),
        DtwCost::Abs => (x - y).abs(),
    };
    let m = short.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut curr = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for &x in long {
        curr[0] = f64::INFINITY;
        for j in 1..=m {
            let best = prev[j - 1].min(prev[j]).min(curr[j - 1]);
            curr[j] = local(x, short[j - 1]) + best;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    let total = prev[m];
    Ok(match cost {
        DtwCost::Squared => total.sqrt(),
        DtwCost::Abs => total,
    })
}

/// Symmetric matrix of pairwise distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    labels: Vec<String>,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Validate and wrap a row-major `k × k` matrix.
    pub fn new(labels: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let k = labels.len();
        if values.len() != k * k {
            return Err(Error::invalid(format!(
                "{k} labels need {} matrix entries, got {}",
                k * k,
                values.len()
            )));
        }
        for i in 0..k {
            if values[i * k + i] != 0.0 {
                return Err(Error::invalid(format!("nonzero diagonal at {i}")));
            }
            for j in 0..k {
                let v = values[i * k + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::invalid(format!("invalid distance {v} at ({i}, {j})")));
                }
                if v != values[j * k + i] {
                    return Err(Error::invalid(format!("matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { labels, values })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.labels.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let k = self.labels.len();
        &self.values[i * k..(i + 1) * k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Rows and columns reordered so that new index `i` is old `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let k = self.len();
        let mut seen = vec![false; k];
        if order.len() != k || order.iter().any(|&o| o >= k || std::mem::replace(&mut seen[o], true)) {
            return Err(Error::invalid("order is not a permutation"));
        }
        let labels = order.iter().map(|&o| self.labels[o].clone()).collect();
        let mut values = Vec::with_capacity(k * k);
        for &oi in order {
            for &oj in order {
                values.push(self.get(oi, oj));
            }
        }
        Ok(Self { labels, values })
    }
}

/// All pairwise DTW distances among labeled profiles.
pub fn distance_matrix(profiles: &[(String, Vec<f64>)], cost: DtwCost) -> Result<DistanceMatrix> {
    let k = profiles.len();
    if k < 2 {
        return Err(Error::insufficient(format!("need at least 2 profiles, got {k}")));
    }
    if let Some((label, _)) = profiles.iter().find(|(_, p)| p.is_empty()) {
        return Err(Error::invalid(format!("profile `{label}` is empty")));
    }
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|i| ((i + 1)..k).map(move |j| (i, j)))
        .collect();
    let distances: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| dtw_distance_with(&profiles[i].1, &profiles[j].1, cost))
        .collect::<Result<_>>()?;
    let mut values = vec![0.0; k * k];
    for (&(i, j), &d) in pairs.iter().zip(&distances) {
        values[i * k + j] = d;
        values[j * k + i] = d;
    }
    DistanceMatrix::new(profiles.iter().map(|(l, _)| l.clone()).collect(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_series_have_zero_distance() {
        let x = [0.3, 0.1, 0.9, 0.9, 0.4];
        assert_eq!(dtw_distance(&x, &x).unwrap(), 0.0);
        assert_eq!(dtw_distance_with(&x, &x, DtwCost::Abs).unwrap(), 0.0);
    }

    #[test]
    fn constant_offset_costs_one_per_step() {
        let d = dtw_distance(&[0.0; 3], &[1.0; 3]).unwrap();
        assert!((d - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(dtw_distance_with(&[0.0; 3], &[1.0; 3], DtwCost::Abs).unwrap(), 3.0);
    }

    #[test]
    fn repeated_value_warps_for_free() {
        assert_eq!(dtw_distance(&[1.0, 2.0], &[1.0, 2.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn single_element_against_series() {
        // Every element of b must align with the lone element of a.
        let d = dtw_distance_with(&[1.0], &[0.0, 1.0, 3.0], DtwCost::Abs).unwrap();
        assert_eq!(d, 3.0);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(dtw_distance(&[], &[1.0]).is_err());
        assert!(dtw_distance(&[1.0], &[]).is_err());
    }

    #[test]
    fn matrix_matches_pairwise_calls() {
        let profiles = vec![
            ("A".to_string(), vec![0.1, 0.5, 0.9]),
            ("B".to_string(), vec![0.2, 0.2, 0.8, 1.0]),
            ("C".to_string(), vec![1.0, 0.0]),
        ];
        let m = distance_matrix(&profiles, DtwCost::Squared).unwrap();
        for i in 0..3 {
            assert_eq!(m.get(i, i), 0.0);
            for j in 0..3 {
                let direct = dtw_distance(&profiles[i].1, &profiles[j].1).unwrap();
                assert_eq!(m.get(i, j), direct);
            }
        }
    }

    #[test]
    fn identical_profiles_give_zero_off_diagonal() {
        let p = vec![0.4, 0.6, 0.5];
        let m = distance_matrix(&[("A".into(), p.clone()), ("B".into(), p)], DtwCost::Squared).unwrap();
        assert_eq!(m.get(0, 1), 0.0);
    }

    #[test]
    fn matrix_errors() {
        assert!(distance_matrix(&[("A".into(), vec![1.0])], DtwCost::Squared).is_err());
        assert!(distance_matrix(&[("A".into(), vec![1.0]), ("B".into(), vec![])], DtwCost::Squared).is_err());
        assert!(DistanceMatrix::new(vec!["a".into(), "b".into()], vec![0.0, 1.0, 2.0, 0.0]).is_err());
        assert!(DistanceMatrix::new(vec!["a".into(), "b".into()], vec![0.0, -1.0, -1.0, 0.0]).is_err());
        assert!(DistanceMatrix::new(vec!["a".into(), "b".into()], vec![1.0, 1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn permuted_reorders_rows_and_columns() {
        let m = DistanceMatrix::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![0.0, 1.0, 2.0, 1.0, 0.0, 3.0, 2.0, 3.0, 0.0],
        )
        .unwrap();
        let p = m.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(p.labels(), ["c", "a", "b"]);
        assert_eq!(p.get(0, 1), 2.0);
        assert_eq!(p.get(1, 2), 1.0);
        assert!(m.permuted(&[0, 0, 1]).is_err());
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded_by_lockstep(
            pair in (1usize..40).prop_flat_map(|n| (
                prop::collection::vec(-2.0f64..2.0, n),
                prop::collection::vec(-2.0f64..2.0, n),
            ))
        ) {
            let (a, b) = pair;
            let ab = dtw_distance(&a, &b).unwrap();
            let ba = dtw_distance(&b, &a).unwrap();
            prop_assert_eq!(ab, ba);
            let lockstep = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            prop_assert!(ab <= lockstep + 1e-12);
            prop_assert!(ab >= 0.0);
        }
    }
}
