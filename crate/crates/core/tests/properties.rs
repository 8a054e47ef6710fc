mod common;

use std::collections::HashMap;

use infoeff::cluster::{average_linkage, cut, optimal_cut, silhouette};
use infoeff::efficiency::{analyze_returns, efficiency_series};
use infoeff::ingest::{filter_by_length, load_reader, log_returns};
use infoeff::report::{group_profiles, kde, pearson, trapezoid};
use infoeff::similarity::DistanceMatrix;
use infoeff::AnalysisConfig;
use proptest::prelude::*;

fn matrix_from(k: usize, upper: &[f64]) -> DistanceMatrix {
    let mut v = vec![0.0; k * k];
    let mut it = upper.iter();
    for i in 0..k {
        for j in (i + 1)..k {
            let d = *it.next().unwrap();
            v[i * k + j] = d;
            v[j * k + i] = d;
        }
    }
    DistanceMatrix::new((0..k).map(|i| format!("s{i}")).collect(), v).unwrap()
}

fn arb_matrix() -> impl Strategy<Value = DistanceMatrix> {
    (3usize..=10).prop_flat_map(|k| {
        prop::collection::vec(0.05f64..20.0, k * (k - 1) / 2).prop_map(move |u| matrix_from(k, &u))
    })
}

/// Partition as a set of sorted member lists, independent of label numbering.
fn partition(labels: &[usize]) -> Vec<Vec<usize>> {
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, &l) in labels.iter().enumerate() {
        groups.entry(l).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort();
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn log_returns_round_trip(steps in prop::collection::vec(-0.3f64..0.3, 1..400), p0 in 0.01f64..1e4) {
        let prices = common::prices_from_returns("RT", &steps, p0);
        let r = log_returns(&prices).unwrap();
        let mut acc = 0.0;
        for (i, v) in r.values.iter().enumerate() {
            acc += v;
            let rebuilt = acc.exp() * prices.close[0];
            let rel = (rebuilt - prices.close[i + 1]).abs() / prices.close[i + 1];
            prop_assert!(rel <= 1e-9, "step {i}: relative error {rel}");
        }
    }

    #[test]
    fn filter_is_idempotent(lens in prop::collection::vec(2usize..60, 0..8), k in 0usize..60) {
        let series: Vec<_> = lens
            .iter()
            .enumerate()
            .map(|(i, &n)| common::prices_from_returns(&format!("A{i}"), &vec![0.01; n - 1], 1.0))
            .collect();
        let once = filter_by_length(series, k);
        let twice = filter_by_length(once.clone(), k);
        prop_assert_eq!(&once, &twice);
        prop_assert!(once.iter().all(|s| s.n_returns() > k));
    }

    #[test]
    fn loading_is_deterministic(seed in 0u64..1000, n in 1usize..5) {
        let series: Vec<_> = (0..n)
            .map(|a| common::prices_from_returns(&format!("L{a}"), &common::gaussian(50, 0.05, seed + a as u64), 3.0))
            .collect();
        let text = common::dataset_csv(&series);
        let a = load_reader(text.as_bytes(), "a").unwrap();
        let b = load_reader(text.as_bytes(), "a").unwrap();
        prop_assert_eq!(a.series, b.series);
        prop_assert_eq!(a.diagnostics, b.diagnostics);
    }

    #[test]
    fn linkage_heights_are_monotone(m in arb_matrix()) {
        let dendro = average_linkage(&m).unwrap();
        for pair in dendro.merges.windows(2) {
            prop_assert!(pair[0].height <= pair[1].height);
        }
        let k = m.len();
        let identity = cut(&dendro, 0.0);
        prop_assert_eq!(partition(&identity).len(), k);
        let single = cut(&dendro, f64::INFINITY);
        prop_assert!(single.iter().all(|&l| l == single[0]));
    }

    #[test]
    fn silhouette_is_scale_equivariant(m in arb_matrix(), lambda in 0.01f64..100.0) {
        let k = m.len();
        let scaled = DistanceMatrix::new(
            m.labels().to_vec(),
            m.values().iter().map(|v| v * lambda).collect(),
        ).unwrap();
        let labels: Vec<usize> = (0..k).map(|i| i % 3).collect();
        let a = silhouette(&m, &labels).unwrap();
        let b = silhouette(&scaled, &labels).unwrap();
        for (x, y) in a.s.iter().zip(&b.s) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        let ca = optimal_cut(&average_linkage(&m).unwrap(), &m).unwrap();
        let cb = optimal_cut(&average_linkage(&scaled).unwrap(), &scaled).unwrap();
        prop_assert_eq!(partition(&ca.labels), partition(&cb.labels));
    }

    #[test]
    fn cluster_labels_follow_row_permutation(m in arb_matrix(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let k = m.len();
        let mut order: Vec<usize> = (0..k).collect();
        order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let permuted = m.permuted(&order).unwrap();
        let base = optimal_cut(&average_linkage(&m).unwrap(), &m).unwrap();
        let moved = optimal_cut(&average_linkage(&permuted).unwrap(), &permuted).unwrap();
        // Row i of the permuted matrix is row order[i] of the original.
        for i in 0..k {
            for j in 0..k {
                prop_assert_eq!(
                    moved.labels[i] == moved.labels[j],
                    base.labels[order[i]] == base.labels[order[j]]
                );
            }
        }
    }

    #[test]
    fn pearson_affine_invariance(
        x in prop::collection::vec(-100.0f64..100.0, 3..40),
        noise in prop::collection::vec(-1.0f64..1.0, 40),
        a in 0.1f64..10.0,
        b in -50.0f64..50.0,
    ) {
        let y: Vec<f64> = x.iter().zip(&noise).map(|(v, e)| 0.3 * v + 20.0 * e).collect();
        let base = pearson(&x, &y);
        prop_assume!(base.is_ok());
        let base = base.unwrap();
        // Near |r| = 1 the p-value is dominated by rounding in r.
        prop_assume!(1.0 - base.r.abs() > 1e-9);
        let xt: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let yt: Vec<f64> = y.iter().map(|v| a * v - b).collect();
        for moved in [pearson(&xt, &y).unwrap(), pearson(&x, &yt).unwrap()] {
            prop_assert!((moved.r - base.r).abs() <= 1e-12, "r {} vs {}", moved.r, base.r);
            prop_assert!((moved.p - base.p).abs() <= 1e-9, "p {} vs {}", moved.p, base.p);
        }
        let same = pearson(&x, &x).unwrap();
        prop_assert!((same.r - 1.0).abs() <= 1e-12 && same.p <= 1e-9);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let anti = pearson(&x, &neg).unwrap();
        prop_assert!((anti.r + 1.0).abs() <= 1e-12 && anti.p <= 1e-9);
    }

    #[test]
    fn kde_integrates_to_one(values in prop::collection::vec(0.0f64..1.0, 2..200)) {
        let curve = kde(&values, None).unwrap();
        let mass = trapezoid(&curve.grid, &curve.density);
        prop_assert!((0.997..=1.003).contains(&mass), "mass {mass}");
    }

    #[test]
    fn group_curves_never_outgrow_members(
        lens in prop::collection::vec(1usize..80, 1..20),
        groups in 1usize..4,
    ) {
        let profiles: Vec<Vec<f64>> = lens.iter().map(|&n| vec![0.5; n]).collect();
        let labels: Vec<usize> = (0..lens.len()).map(|i| i % groups).collect();
        for g in group_profiles(&labels, &profiles).unwrap() {
            for curve in &g.curves {
                let longest = curve.members.iter().map(|&m| profiles[m].len()).max().unwrap();
                prop_assert!(curve.mean.len() <= longest);
                prop_assert_eq!(curve.max_len, longest);
            }
        }
    }
}

#[test]
fn efficiency_window_choice_barely_matters_on_noise() {
    let cfg = AnalysisConfig::default();
    let returns = common::dated("NOISE", common::gaussian(2000, 0.02, 31));
    let track = analyze_returns(&returns, &cfg).unwrap();
    let series: Vec<HashMap<usize, f64>> = [30, 180, 360]
        .iter()
        .map(|&w| {
            let s = efficiency_series(&track, w).unwrap();
            s.centers.into_iter().zip(s.values).collect()
        })
        .collect();
    for i in 0..3 {
        for j in (i + 1)..3 {
            let shared: Vec<f64> = series[i]
                .iter()
                .filter_map(|(c, a)| series[j].get(c).map(|b| (a - b).abs()))
                .collect();
            assert!(!shared.is_empty());
            let mad = shared.iter().sum::<f64>() / shared.len() as f64;
            assert!(mad <= 0.15, "pair {i},{j}: mean |ΔEt| = {mad}");
        }
    }
}

#[test]
fn analysis_is_a_pure_function_of_inputs() {
    let cfg = AnalysisConfig { window: 240, ..AnalysisConfig::default() };
    let returns = common::dated("P", common::gaussian(700, 0.02, 3));
    let a = analyze_returns(&returns, &cfg).unwrap();
    let b = analyze_returns(&returns, &cfg).unwrap();
    assert_eq!(a, b);
    let other = AnalysisConfig { master_seed: 43, ..cfg };
    let c = analyze_returns(&returns, &other).unwrap();
    assert_eq!(a.entropy, c.entropy);
    assert_ne!(a.bands, c.bands);
}
