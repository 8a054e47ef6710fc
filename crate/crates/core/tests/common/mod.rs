#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use infoeff::ingest::{PriceSeries, ReturnSeries};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn gaussian(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

pub fn uniform(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen::<f64>()).collect()
}

/// Orbit of `x ← 4x(1 − x)`.
pub fn logistic(n: usize, x0: f64) -> Vec<f64> {
    let mut x = x0;
    (0..n)
        .map(|_| {
            x = 4.0 * x * (1.0 - x);
            x
        })
        .collect()
}

pub fn start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2013, 4, 28).unwrap()
}

pub fn dated(symbol: &str, values: Vec<f64>) -> ReturnSeries {
    let start = start_date();
    ReturnSeries {
        symbol: symbol.into(),
        dates: (1..=values.len())
            .map(|i| start + chrono::Days::new(i as u64))
            .collect(),
        values,
    }
}

pub fn prices_from_returns(symbol: &str, returns: &[f64], start_price: f64) -> PriceSeries {
    let start = start_date();
    let mut close = vec![start_price];
    for r in returns {
        close.push(close.last().unwrap() * r.exp());
    }
    PriceSeries {
        symbol: symbol.into(),
        name: format!("Asset {symbol}"),
        dates: (0..close.len())
            .map(|i| start + chrono::Days::new(i as u64))
            .collect(),
        market_cap: close.iter().enumerate().map(|(i, c)| (i % 5 != 0).then(|| c * 1e6)).collect(),
        close,
    }
}

pub fn dataset_csv(series: &[PriceSeries]) -> String {
    let mut out = String::from("symbol,name,date,close,market_cap\n");
    for s in series {
        for i in 0..s.len() {
            let mcap = s.market_cap[i].map(|m| format!("{m:.2}")).unwrap_or_default();
            writeln!(out, "{},{},{},{:.12},{}", s.symbol, s.name, s.dates[i], s.close[i], mcap).unwrap();
        }
    }
    out
}

/// `n` Gaussian-noise assets with `len` prices each.
pub fn write_noise_dataset(path: &Path, n: usize, len: usize, seed: u64) {
    let series: Vec<PriceSeries> = (0..n)
        .map(|a| {
            let r = gaussian(len - 1, 0.03, seed + a as u64);
            prices_from_returns(&format!("N{a:02}"), &r, 10.0 + a as f64)
        })
        .collect();
    std::fs::write(path, dataset_csv(&series)).unwrap();
}
