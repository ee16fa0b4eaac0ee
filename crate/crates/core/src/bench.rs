//! Synthetic benchmark: multi-channel sensor data, one extraction pass,
//! wall time and allocation high-watermark.
//!
//! Channel `c` holds `sin(2π·0.1·(c+1)·t) + η` with `η ~ N(0, 0.1)` drawn
//! from a ChaCha8 stream seeded by `seed`; channels are generated in order
//! from one stream. All channels share one index buffer.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::feature::{builtin, extract, expand_multiple, ExtractOptions, FeatureCollection, FeatureMatrix, FuncWrapper};
use crate::index::{Delta, Index};
use crate::memtrack;
use crate::params;
use crate::series::{Series, SeriesSet};
use crate::values::{ValueColumn, ValueTag};

const NOISE_SIGMA: f64 = 0.1;
const BASE_FREQ_HZ: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub runtime_s: f64,
    pub peak_extra_bytes: u64,
    pub data_bytes: u64,
    pub n_windows: usize,
    pub n_feature_columns: usize,
    pub n_workers: usize,
    pub seed: u64,
    /// Process resident-set high-watermark, when requested and available.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peak_rss_bytes: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct BenchParams {
    pub n_channels: usize,
    pub fs: f64,
    /// Seconds.
    pub duration: f64,
    pub window: Delta,
    pub stride: Delta,
    pub n_workers: usize,
    pub seed: u64,
    pub value_tag: ValueTag,
    /// Functions applied to every channel; [`default_features`] when unset.
    pub functions: Option<Vec<FuncWrapper>>,
    pub sample_rss: bool,
}

impl Default for BenchParams {
    fn default() -> Self {
        BenchParams {
            n_channels: 5,
            fs: 1000.0,
            duration: 3600.0,
            window: Delta::seconds(30),
            stride: Delta::seconds(10),
            n_workers: 1,
            seed: 0,
            value_tag: ValueTag::F32,
            functions: None,
            sample_rss: false,
        }
    }
}

pub struct BenchRun {
    pub report: BenchReport,
    pub matrix: FeatureMatrix,
}

fn bad(param: &str, reason: &str) -> Error {
    Error::BadParam {
        func: "gen_synthetic".to_string(),
        param: param.to_string(),
        reason: reason.to_string(),
    }
}

/// Channels `ch0`, `ch1`, ... sampled at `fs` Hz for `duration` seconds,
/// starting at the epoch, with sample `i` at `round(i·1e9/fs)` ns.
pub fn gen_synthetic(
    n_channels: usize,
    fs: f64,
    duration: f64,
    seed: u64,
    value_tag: ValueTag,
) -> Result<SeriesSet> {
    if n_channels == 0 {
        return Err(bad("n_channels", "must be at least 1"));
    }
    if !(fs.is_finite() && fs > 0.0) {
        return Err(bad("fs", "must be positive"));
    }
    if !(duration.is_finite() && duration > 0.0) {
        return Err(bad("duration", "must be positive"));
    }
    if !matches!(value_tag, ValueTag::F32 | ValueTag::F64) {
        return Err(bad("value_tag", "must be f32 or f64"));
    }
    let n = (fs * duration).round() as usize;
    if n < 2 {
        return Err(bad("duration", "yields fewer than 2 samples"));
    }
    let ns: Vec<i64> = (0..n).map(|i| (i as f64 * 1e9 / fs).round() as i64).collect();
    let index = Index::from(ns);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, NOISE_SIGMA).expect("constant sigma is valid");
    let mut set = SeriesSet::new();
    for c in 0..n_channels {
        let omega = 2.0 * std::f64::consts::PI * BASE_FREQ_HZ * (c + 1) as f64;
        let Index::TimeNs(ts) = &index else { unreachable!() };
        let values = ts.iter().map(|&t| (omega * t as f64 * 1e-9).sin() + rng.sample(noise));
        let column: ValueColumn = match value_tag {
            ValueTag::F32 => values.map(|x| x as f32).collect::<Vec<_>>().into(),
            _ => values.collect::<Vec<_>>().into(),
        };
        set.insert(Series::new(format!("ch{c}"), index.clone(), column)?)?;
    }
    Ok(set)
}

/// mean, std, min, max, median, sum, var, rms, abs_energy, skewness,
/// kurtosis, slope, count, zero_cross and the 0.25 and 0.75 quantiles.
pub fn default_features() -> Vec<FuncWrapper> {
    let plain = [
        "mean", "std", "min", "max", "median", "sum", "var", "rms", "abs_energy", "skewness",
        "kurtosis", "slope", "count", "zero_cross",
    ];
    let mut out: Vec<FuncWrapper> = plain
        .iter()
        .map(|n| builtin(n, params!()).expect("registered builtin"))
        .collect();
    for q in [0.25, 0.75] {
        out.push(builtin("quantile", params! { "q" => q }).expect("registered builtin"));
    }
    out
}

pub fn bench_collection(set: &SeriesSet, params: &BenchParams) -> Result<FeatureCollection> {
    let functions = params.functions.clone().unwrap_or_else(default_features);
    let series: Vec<Vec<&str>> = set.names().map(|n| vec![n]).collect();
    FeatureCollection::from_descriptors(expand_multiple(
        &functions,
        &series,
        &[params.window],
        &[params.stride],
    )?)
}

/// Generates the data, then times and memory-profiles extraction alone.
/// Needs [`memtrack::TrackingAllocator`] installed as the global allocator.
pub fn run_bench(params: &BenchParams) -> Result<BenchRun> {
    if !memtrack::is_installed() {
        return Err(Error::TrackingUnavailable);
    }
    let set = gen_synthetic(params.n_channels, params.fs, params.duration, params.seed, params.value_tag)?;
    let collection = bench_collection(&set, params)?;
    let options = ExtractOptions {
        approve_sparsity: true,
        n_workers: params.n_workers,
        ..ExtractOptions::default()
    };

    let baseline = memtrack::live_bytes();
    memtrack::reset_peak();
    let started = Instant::now();
    let extraction = extract(&set, &collection, &options)?;
    let runtime_s = started.elapsed().as_secs_f64();
    let peak = memtrack::peak_bytes();

    let matrix = extraction.matrix;
    let report = BenchReport {
        runtime_s,
        peak_extra_bytes: peak.saturating_sub(baseline) as u64,
        data_bytes: set.storage_bytes() as u64,
        n_windows: matrix.n_rows(),
        n_feature_columns: matrix.n_columns(),
        n_workers: params.n_workers,
        seed: params.seed,
        peak_rss_bytes: if params.sample_rss { peak_rss_bytes() } else { None },
    };
    Ok(BenchRun { report, matrix })
}

/// `VmHWM` from `/proc/self/status`; `None` off Linux.
pub fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::IndexSlice;
    use crate::values::ValueSlice;

    #[test]
    fn small_grid() {
        let set = gen_synthetic(2, 10.0, 1.0, 7, ValueTag::F32).unwrap();
        let ch0 = set.get("ch0").unwrap();
        assert_eq!(ch0.len(), 10);
        assert!(matches!(ch0.index().as_slice(), IndexSlice::TimeNs(t) if t[9] == 900_000_000));
        assert_eq!(set.storage_bytes(), 10 * 8 + 2 * 10 * 4);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = gen_synthetic(3, 100.0, 2.0, 1, ValueTag::F32).unwrap();
        let b = gen_synthetic(3, 100.0, 2.0, 1, ValueTag::F32).unwrap();
        let c = gen_synthetic(3, 100.0, 2.0, 2, ValueTag::F32).unwrap();
        assert!(a.bitwise_eq(&b));
        assert!(!a.bitwise_eq(&c));
    }

    #[test]
    fn noise_is_centred_on_the_sine() {
        let set = gen_synthetic(1, 1000.0, 20.0, 3, ValueTag::F64).unwrap();
        let s = set.get("ch0").unwrap();
        let (IndexSlice::TimeNs(t), ValueSlice::F64(v)) = (s.index().as_slice(), s.values().as_slice()) else {
            panic!("unexpected types");
        };
        let resid: Vec<f64> = t
            .iter()
            .zip(v)
            .map(|(&t, &x)| x - (2.0 * std::f64::consts::PI * 0.1 * t as f64 * 1e-9).sin())
            .collect();
        let n = resid.len() as f64;
        let mean = resid.iter().sum::<f64>() / n;
        let sd = (resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!(mean.abs() < 0.005, "{mean}");
        assert!((sd - 0.1).abs() < 0.005, "{sd}");
    }

    #[test]
    fn rejects_bad_params() {
        assert!(matches!(gen_synthetic(0, 1.0, 1.0, 0, ValueTag::F32), Err(Error::BadParam { .. })));
        assert!(matches!(gen_synthetic(1, -1.0, 1.0, 0, ValueTag::F32), Err(Error::BadParam { .. })));
        assert!(matches!(gen_synthetic(1, 1.0, 0.0, 0, ValueTag::F32), Err(Error::BadParam { .. })));
        assert!(matches!(gen_synthetic(1, 1.0, 1.0, 0, ValueTag::I64), Err(Error::BadParam { .. })));
    }

    #[test]
    fn sixty_seconds_gives_three_windows() {
        let params = BenchParams {
            n_channels: 2,
            fs: 100.0,
            duration: 60.0,
            ..BenchParams::default()
        };
        let run = run_bench(&params).unwrap();
        assert_eq!(run.report.n_windows, 3);
        assert_eq!(run.report.n_feature_columns, 2 * 16);
        let json = serde_json::to_value(&run.report).unwrap();
        let keys: Vec<&str> = json.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(
            keys,
            ["data_bytes", "n_feature_columns", "n_windows", "n_workers", "peak_extra_bytes", "runtime_s", "seed"]
        );
    }
}
