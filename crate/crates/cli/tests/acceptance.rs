//! Acceptance criteria, run in order with one status line each.
//!
//! Every check compares the engine against an oracle written here from the
//! definitions (window enumeration, linear scans, naive statistics), never
//! against another engine code path alone.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use tsweave::bench::{bench_collection, default_features, gen_synthetic, run_bench, BenchParams};
use tsweave::feature::{
    builtin, expand_multiple, format_output_name, make_robust_default, parse_output_name, Column,
};
use tsweave::io::{format_timestamp, load_csv, write_matrix, LoadOptions, PipelineConfigDoc};
use tsweave::memtrack::TrackingAllocator;
use tsweave::segment::segment_positions_bisect;
use tsweave::{
    chunk_series, chunk_set, extract, extract_chunk, params, segment_positions, ChunkSpec, Delta,
    Error, ExtractOptions, FeatureCollection, FeatureMatrix, IndexSlice, IndexValue,
    OutputPosition, Scalar, SegmentGrid, Series, SeriesSet, ValueColumn, ValueSlice, ValueTag,
};

#[global_allocator]
static ALLOC: TrackingAllocator = TrackingAllocator;

const S: i64 = 1_000_000_000;

enum Verdict {
    Pass(String),
    Fail(String),
    NotEvaluated(String),
}

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn run_criterion(n: usize, title: &str, budget_s: Option<f64>, f: impl FnOnce() -> Verdict) -> bool {
    let started = Instant::now();
    let verdict = f();
    let elapsed = started.elapsed().as_secs_f64();
    let verdict = match (verdict, budget_s) {
        (Verdict::Pass(d), Some(b)) if elapsed >= b => {
            Verdict::Fail(format!("{d}; took {elapsed:.2}s, budget {b}s"))
        }
        (v, _) => v,
    };
    let (tag, detail, ok) = match verdict {
        Verdict::Pass(d) => ("PASS", d, true),
        Verdict::Fail(d) => ("FAIL", d, false),
        Verdict::NotEvaluated(d) => ("NOT EVALUATED", d, true),
    };
    println!("criterion {n:>2} [{tag}] {title}: {detail} ({elapsed:.2}s)");
    ok
}

fn verdict(check: Check) -> Verdict {
    match check {
        Ok(d) => Verdict::Pass(d),
        Err(d) => Verdict::Fail(d),
    }
}

#[test]
fn acceptance() {
    let results = [
        run_criterion(1, "segmentation oracle suite", Some(10.0), || verdict(segmentation_oracle())),
        run_criterion(2, "feature oracle suite", Some(30.0), || verdict(feature_oracle())),
        run_criterion(3, "irregular/gap fixture", None, || verdict(irregular_fixture())),
        run_criterion(4, "parallel determinism", Some(20.0), || verdict(parallel_determinism())),
        run_criterion(5, "memory ratio", Some(60.0), || verdict(memory_ratio())),
        run_criterion(6, "speedup with 4 workers", None, speedup),
        run_criterion(7, "reduce equivalence", Some(10.0), || verdict(reduce_equivalence())),
        run_criterion(8, "chunking reconstruction", Some(10.0), || verdict(chunking())),
        run_criterion(9, "pipeline semantics via CLI", None, || verdict(pipeline_cli())),
        run_criterion(10, "naming grammar", None, || verdict(naming_grammar())),
    ];
    let failed: Vec<usize> = (1..=results.len()).filter(|&n| !results[n - 1]).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

// ---------------------------------------------------------------- oracles

/// Window starts `b + k·s` for every k whose window `[start, start + w)`
/// ends at or before `e`, by plain enumeration.
fn enumerate_starts_ns(b: i64, e: i64, w: i64, s: i64) -> Vec<i64> {
    let mut out = Vec::new();
    let mut k = 0i64;
    while b + k * s + w <= e {
        out.push(b + k * s);
        k += 1;
    }
    out
}

fn enumerate_starts_f64(b: f64, e: f64, w: f64, s: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = 0usize;
    while b + k as f64 * s + w <= e {
        out.push(b + k as f64 * s);
        k += 1;
    }
    out
}

/// Positions of `[a, b)` by counting, one linear scan per bound.
fn scan<T: PartialOrd + Copy>(idx: &[T], a: T, b: T) -> (usize, usize) {
    (idx.iter().filter(|&&x| x < a).count(), idx.iter().filter(|&&x| x < b).count())
}

fn close(a: f64, b: f64) -> bool {
    (a.is_nan() && b.is_nan()) || a == b || (a - b).abs() <= 1e-9 * a.abs().max(b.abs()) + 1e-12
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn central(xs: &[f64], p: i32) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(p)).sum::<f64>() / xs.len() as f64
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn naive_quantile(xs: &[f64], q: f64) -> f64 {
    let v = sorted(xs);
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (v[hi] - v[lo]) * (h - lo as f64)
}

/// Least-squares slope of `ys` against `ts` (seconds).
fn naive_slope(ts: &[f64], ys: &[f64]) -> f64 {
    let (mt, my) = (mean(ts), mean(ys));
    let sxy: f64 = ts.iter().zip(ys).map(|(t, y)| (t - mt) * (y - my)).sum();
    let sxx: f64 = ts.iter().map(|t| (t - mt) * (t - mt)).sum();
    sxy / sxx
}

/// Expected value of a built-in over one window; `None` for an empty
/// window of a function that fails there.
fn naive(name: &str, q: f64, ts: &[f64], xs: &[f64]) -> Option<f64> {
    let n = xs.len();
    let always = match name {
        "count" => Some(n as f64),
        "sum" => Some(xs.iter().sum()),
        "abs_energy" => Some(xs.iter().map(|x| x * x).sum()),
        "zero_cross" => Some((1..n.max(1)).filter(|&i| xs[i - 1] * xs[i] < 0.0).count() as f64),
        _ => None,
    };
    if always.is_some() {
        return always;
    }
    if n == 0 {
        return None;
    }
    Some(match name {
        "mean" => mean(xs),
        "var" => central(xs, 2),
        "std" => central(xs, 2).sqrt(),
        "rms" => (xs.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt(),
        "min" => sorted(xs)[0],
        "max" => sorted(xs)[n - 1],
        "median" => naive_quantile(xs, 0.5),
        "quantile" => naive_quantile(xs, q),
        "skewness" => central(xs, 3) / central(xs, 2).powf(1.5),
        "kurtosis" => central(xs, 4) / central(xs, 2).powi(2) - 3.0,
        "slope" => {
            let t0 = ts[0];
            let rel: Vec<f64> = ts.iter().map(|t| t - t0).collect();
            naive_slope(&rel, xs)
        }
        "first" => xs[0],
        "last" => xs[n - 1],
        other => panic!("no oracle for {other}"),
    })
}

const EXACT: [&str; 6] = ["count", "min", "max", "median", "first", "last"];

fn time_index(idx: &IndexSlice<'_>) -> Vec<i64> {
    match idx {
        IndexSlice::TimeNs(t) => t.to_vec(),
        IndexSlice::Numeric(_) => panic!("expected a time index"),
    }
}

fn f64_values(values: ValueSlice<'_>) -> Vec<f64> {
    (0..values.len()).map(|i| values.get_f64(i).unwrap()).collect()
}

fn cell(m: &FeatureMatrix, col: &str, row: usize) -> Scalar {
    m.column(col).unwrap_or_else(|| panic!("missing column {col}")).get(row)
}

/// Irregular sorted timestamps with repeated values and occasional gaps.
fn irregular_ns(rng: &mut ChaCha8Rng, n: usize) -> Vec<i64> {
    let mut t = rng.random_range(-1_000 * S..1_000 * S);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(t);
        t += match rng.random_range(0..100) {
            0..5 => 0,
            5..10 => rng.random_range(10 * S..100 * S),
            _ => rng.random_range(1..2 * S),
        };
    }
    out
}

fn irregular_f64(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut x = rng.random_range(-100.0..100.0);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(x);
        x += match rng.random_range(0..100) {
            0..5 => 0.0,
            5..10 => rng.random_range(10.0..100.0),
            _ => rng.random_range(0.0..2.0),
        };
    }
    out
}

// ------------------------------------------------------------- criterion 1

fn segmentation_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cases = 1200;
    let mut windows = 0usize;
    for case in 0..cases {
        let n = rng.random_range(1..300);
        let (series, grid, oracle): (Series, SegmentGrid, Vec<(usize, usize)>) = if case % 2 == 0 {
            let idx = irregular_ns(&mut rng, n);
            let (b, e) = (idx[0], idx[n - 1]);
            let w = rng.random_range(1..40 * S);
            let s = rng.random_range(1..20 * S);
            let grid = SegmentGrid::build(
                IndexValue::Time(b),
                IndexValue::Time(e),
                Delta::Time(w),
                Delta::Time(s),
                OutputPosition::End,
            )
            .map_err(|e| e.to_string())?;
            let oracle = enumerate_starts_ns(b, e, w, s)
                .into_iter()
                .map(|a| scan(&idx, a, a + w))
                .collect();
            (Series::new("x", idx, vec![0.0; n]).unwrap(), grid, oracle)
        } else {
            let idx = irregular_f64(&mut rng, n);
            let (b, e) = (idx[0], idx[n - 1]);
            let w = rng.random_range(0.01..40.0);
            let s = rng.random_range(0.01..20.0);
            let grid = SegmentGrid::build(
                IndexValue::Numeric(b),
                IndexValue::Numeric(e),
                Delta::Numeric(w),
                Delta::Numeric(s),
                OutputPosition::End,
            )
            .map_err(|e| e.to_string())?;
            let oracle = enumerate_starts_f64(b, e, w, s)
                .into_iter()
                .map(|a| scan(&idx, a, a + w))
                .collect();
            (Series::new("x", idx, vec![0.0; n]).unwrap(), grid, oracle)
        };
        ensure!(
            grid.n_segments() == oracle.len(),
            "case {case}: grid has {} segments, enumeration {}",
            grid.n_segments(),
            oracle.len()
        );
        let sweep = segment_positions(&series.view(), &grid).map_err(|e| e.to_string())?;
        let bisect = segment_positions_bisect(&series.view(), &grid).map_err(|e| e.to_string())?;
        ensure!(sweep == oracle, "case {case}: sweep differs from the linear scan");
        ensure!(bisect == oracle, "case {case}: bisection differs from the linear scan");
        windows += oracle.len();
    }
    Ok(format!("{cases} cases, {windows} windows match the linear-scan oracle"))
}

// ------------------------------------------------------------- criterion 2

fn feature_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let names = [
        "count", "sum", "mean", "std", "var", "min", "max", "median", "quantile", "rms",
        "abs_energy", "skewness", "kurtosis", "slope", "first", "last", "zero_cross",
    ];
    let cases = 220;
    let mut cells = 0usize;
    for case in 0..cases {
        let n = rng.random_range(2..400);
        let idx = irregular_ns(&mut rng, n);
        let raw: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random_bool(0.05) {
                    0.0
                } else {
                    rng.sample::<f64, _>(StandardNormal) * 3.0 + rng.random_range(-1.0..1.0)
                }
            })
            .collect();
        let f32_input = rng.random_bool(0.3);
        let values: ValueColumn = if f32_input {
            raw.iter().map(|&x| x as f32).collect::<Vec<_>>().into()
        } else {
            raw.clone().into()
        };
        let xs_all = f64_values(values.as_slice());
        let span = idx[n - 1] - idx[0];
        let w = rng.random_range(1..(span / 2).max(2 * S));
        let s = rng.random_range(1..(span / 4).max(S));
        let q: f64 = rng.random_range(0.0..=1.0);

        let funcs: Vec<_> = names
            .iter()
            .map(|&name| {
                let p = if name == "quantile" { params! { "q" => q } } else { params!() };
                let f = builtin(name, p).unwrap();
                match name {
                    "count" | "sum" | "abs_energy" | "zero_cross" => f,
                    _ => make_robust_default(&f).unwrap(),
                }
            })
            .collect();
        let set = SeriesSet::from_series([Series::new("x", idx.clone(), values).unwrap()]).unwrap();
        let coll = FeatureCollection::from_descriptors(
            expand_multiple(&funcs, &[vec!["x"]], &[Delta::Time(w)], &[Delta::Time(s)]).unwrap(),
        )
        .map_err(|e| e.to_string())?;
        let opts = ExtractOptions {
            approve_sparsity: true,
            n_workers: rng.random_range(1..=4),
            ..Default::default()
        };
        let m = extract(&set, &coll, &opts).map_err(|e| format!("case {case}: {e}"))?.matrix;

        let starts = enumerate_starts_ns(idx[0], idx[n - 1], w, s);
        ensure!(m.n_rows() == starts.len(), "case {case}: {} rows, expected {}", m.n_rows(), starts.len());
        let ends: Vec<i64> = starts.iter().map(|a| a + w).collect();
        ensure!(time_index(&m.index().as_slice()) == ends, "case {case}: output index is not the window ends");
        for (row, &a) in starts.iter().enumerate() {
            let (lo, hi) = scan(&idx, a, a + w);
            let xs = &xs_all[lo..hi];
            let ts: Vec<f64> = idx[lo..hi].iter().map(|&t| t as f64 / 1e9).collect();
            for (name, f) in names.iter().zip(&funcs) {
                let col = format_output_name(&["x"], &f.output_names()[0], Delta::Time(w), Delta::Time(s)).unwrap();
                let got = cell(&m, &col, row).as_f64().unwrap_or(f64::NAN);
                let want = naive(name, q, &ts, xs).unwrap_or(f64::NAN);
                let ok = if EXACT.contains(name) {
                    got.to_bits() == want.to_bits() || (got.is_nan() && want.is_nan())
                } else {
                    close(got, want)
                };
                ensure!(ok, "case {case} row {row} {name}: got {got}, oracle {want}");
                cells += 1;
            }
        }
    }
    Ok(format!(
        "{cases} extractions, {cells} cells match naive recomputation (exact for count/min/max/median/first/last, rel 1e-9 with a 1e-12 absolute floor otherwise)"
    ))
}

// ------------------------------------------------------------- criterion 3

struct Wearable {
    set: SeriesSet,
}

/// `TMP` at 4 Hz and `ACC_x` at 32 Hz over 600 s; `IBI` beats with
/// intervals cycling 0.60..1.05 s and no beats between 200 s and 290 s.
fn wearable() -> Wearable {
    let tmp_idx: Vec<i64> = (0..4 * 600).map(|i| i * S / 4).collect();
    let tmp: Vec<f64> = (0..tmp_idx.len()).map(|i| 31.0 + ((i % 40) as f64) / 16.0).collect();
    let acc_idx: Vec<i64> = (0..32 * 600).map(|i| i * S / 32).collect();
    let acc: Vec<f64> = (0..acc_idx.len()).map(|i| ((i * 13) % 127) as f64 - 63.0).collect();
    let mut ibi_idx = Vec::new();
    let mut ibi = Vec::new();
    let mut t = 400_000_000i64;
    let mut k = 0i64;
    while t < 600 * S {
        let interval = 600_000_000 + (k % 10) * 50_000_000;
        if !(200 * S..290 * S).contains(&t) {
            ibi_idx.push(t);
            ibi.push(interval as f64 / 1e9);
        }
        t += interval;
        k += 1;
    }
    let set = SeriesSet::from_series([
        Series::new("TMP", tmp_idx, tmp).unwrap(),
        Series::new("ACC_x", acc_idx, acc).unwrap(),
        Series::new("IBI", ibi_idx, ibi).unwrap(),
    ])
    .unwrap();
    Wearable { set }
}

fn irregular_fixture() -> Check {
    let Wearable { set } = wearable();
    let combos = [(30 * S, 10 * S), (60 * S, 20 * S)];
    let plain: Vec<_> = ["mean", "std", "count"].iter().map(|n| builtin(n, params!()).unwrap()).collect();
    let robust: Vec<_> = ["mean", "std"]
        .iter()
        .map(|n| make_robust_default(&builtin(n, params!()).unwrap()).unwrap())
        .collect();
    let mut descriptors = Vec::new();
    for &(w, s) in &combos {
        descriptors.extend(
            expand_multiple(&plain, &[vec!["TMP"], vec!["ACC_x"]], &[Delta::Time(w)], &[Delta::Time(s)]).unwrap(),
        );
        descriptors.extend(expand_multiple(&robust, &[vec!["IBI"]], &[Delta::Time(w)], &[Delta::Time(s)]).unwrap());
    }
    let coll = FeatureCollection::from_descriptors(descriptors).map_err(|e| e.to_string())?;
    let out = extract(&set, &coll, &ExtractOptions::default()).map_err(|e| e.to_string())?;
    let m = &out.matrix;

    let again = extract(&set, &coll, &ExtractOptions { n_workers: 3, ..Default::default() })
        .map_err(|e| e.to_string())?;
    ensure!(again.matrix.bitwise_eq(m), "repeat extraction differs");

    // Every group uses its own series' span.
    let mut all_ends = BTreeSet::new();
    let mut group_ends: BTreeMap<(String, i64, i64), Vec<i64>> = BTreeMap::new();
    for name in ["TMP", "ACC_x", "IBI"] {
        let series = set.get(name).unwrap();
        let idx = time_index(&series.index().as_slice());
        for &(w, s) in &combos {
            let ends: Vec<i64> = enumerate_starts_ns(idx[0], *idx.last().unwrap(), w, s)
                .iter()
                .map(|a| a + w)
                .collect();
            all_ends.extend(ends.iter().copied());
            group_ends.insert((name.to_string(), w, s), ends);
        }
    }
    let index = time_index(&m.index().as_slice());
    ensure!(index == all_ends.into_iter().collect::<Vec<_>>(), "output index is not the union of window ends");

    let mut empty_ibi = 0;
    let mut checked = 0;
    for ((name, w, s), ends) in &group_ends {
        let series = set.get(name).unwrap();
        let idx = time_index(&series.index().as_slice());
        let xs = f64_values(series.values().as_slice());
        let funcs: &[&str] = if name == "IBI" { &["mean", "std"] } else { &["mean", "std", "count"] };
        for func in funcs {
            let col = format_output_name(&[name.as_str()], func, Delta::Time(*w), Delta::Time(*s)).unwrap();
            for (row, t) in index.iter().enumerate() {
                let got = cell(m, &col, row).as_f64().unwrap_or(f64::NAN);
                let want = match ends.binary_search(t) {
                    Ok(_) => {
                        let (lo, hi) = scan(&idx, t - w, *t);
                        if hi == lo && name == "IBI" && *func == "mean" {
                            empty_ibi += 1;
                        }
                        naive(func, 0.0, &[], &xs[lo..hi]).unwrap_or(f64::NAN)
                    }
                    Err(_) => f64::NAN,
                };
                ensure!(close(got, want), "{col} at {}s: got {got}, expected {want}", t / S);
                checked += 1;
            }
        }
    }
    ensure!(empty_ibi > 0, "fixture has no empty IBI windows");
    let tmp_counts: BTreeSet<i64> = (0..m.n_rows())
        .filter_map(|r| match cell(m, "TMP__count__w=30s_s=10s", r) {
            Scalar::I64(c) => Some(c),
            _ => None,
        })
        .collect();
    ensure!(tmp_counts == BTreeSet::from([120]), "4 Hz windows of 30 s should hold 120 samples");
    ensure!(
        out.warnings.iter().any(|w| w.series == "IBI"),
        "irregular IBI windows raised no sparsity warning"
    );
    Ok(format!(
        "{} rows x {} columns, {checked} cells match, {empty_ibi} empty IBI windows filled with NaN",
        m.n_rows(),
        m.n_columns()
    ))
}

// ------------------------------------------------------------- criterion 4

fn parallel_determinism() -> Check {
    let set = gen_synthetic(5, 1000.0, 60.0, 4, ValueTag::F32).map_err(|e| e.to_string())?;
    let coll = bench_collection(&set, &BenchParams::default()).map_err(|e| e.to_string())?;
    let run = |n_workers| {
        extract(&set, &coll, &ExtractOptions { n_workers, approve_sparsity: true, ..Default::default() })
            .map(|x| x.matrix)
            .map_err(|e| e.to_string())
    };
    let one = run(1)?;
    ensure!(one.n_rows() == 3 && one.n_columns() == 80, "unexpected shape {}x{}", one.n_rows(), one.n_columns());
    for workers in [2, 8] {
        ensure!(run(workers)?.bitwise_eq(&one), "{workers} workers differ from 1 worker");
    }
    Ok("1, 2 and 8 workers give bitwise identical 3x80 matrices".to_string())
}

// ------------------------------------------------------------- criterion 5

fn memory_ratio() -> Check {
    let run = run_bench(&BenchParams::default()).map_err(|e| e.to_string())?;
    let r = &run.report;
    ensure!(r.n_windows == 357, "{} windows, grid gives 357", r.n_windows);
    ensure!(r.n_feature_columns == 5 * default_features().len(), "{} columns", r.n_feature_columns);
    let ratio = r.peak_extra_bytes as f64 / r.data_bytes as f64;
    ensure!(
        ratio < 0.10,
        "peak_extra_bytes {} is {:.2}% of data_bytes {}",
        r.peak_extra_bytes,
        ratio * 100.0,
        r.data_bytes
    );
    Ok(format!(
        "peak_extra_bytes {} / data_bytes {} = {:.3}% (< 10%), extract {:.2}s",
        r.peak_extra_bytes,
        r.data_bytes,
        ratio * 100.0,
        r.runtime_s
    ))
}

// ------------------------------------------------------------- criterion 6

fn speedup() -> Verdict {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let bench = |n_workers| run_bench(&BenchParams { n_workers, ..BenchParams::default() });
    let (one, four) = match (bench(1), bench(4)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return Verdict::Fail(e.to_string()),
    };
    if !one.matrix.bitwise_eq(&four.matrix) {
        return Verdict::Fail("4-worker output differs from 1-worker output".to_string());
    }
    let ratio = four.report.runtime_s / one.report.runtime_s;
    let detail = format!(
        "1 worker {:.2}s, 4 workers {:.2}s, ratio {ratio:.2} on {cores} core(s)",
        one.report.runtime_s, four.report.runtime_s
    );
    if cores < 4 {
        Verdict::NotEvaluated(format!("{detail}; needs a host with at least 4 cores"))
    } else if ratio <= 0.7 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}; bound is 0.70"))
    }
}

// ------------------------------------------------------------- criterion 7

fn reduce_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let a_idx: Vec<i64> = (0..3000).map(|i| i * S / 10).collect();
    let mut b_idx = Vec::new();
    let mut t = 5 * S;
    while t < 320 * S {
        b_idx.push(t);
        t += rng.random_range(S / 2..3 * S / 2);
    }
    let a_vals: Vec<f64> = (0..a_idx.len()).map(|_| rng.sample(StandardNormal)).collect();
    let b_vals: Vec<f64> = (0..b_idx.len()).map(|_| rng.sample(StandardNormal)).collect();
    let set = SeriesSet::from_series([
        Series::new("A", a_idx.clone(), a_vals).unwrap(),
        Series::new("B", b_idx.clone(), b_vals).unwrap(),
    ])
    .unwrap();
    let mut funcs: Vec<_> = ["mean", "std", "max", "count"]
        .iter()
        .map(|n| builtin(n, params!()).unwrap())
        .collect();
    funcs.push(builtin("quantile", params! { "q" => 0.75 }).unwrap());
    let mut descriptors = Vec::new();
    for (w, s) in [(30, 10), (20, 20)] {
        descriptors.extend(
            expand_multiple(&funcs, &[vec!["A"], vec!["B"]], &[Delta::seconds(w)], &[Delta::seconds(s)]).unwrap(),
        );
    }
    let coll = FeatureCollection::from_descriptors(descriptors).map_err(|e| e.to_string())?;
    ensure!(coll.len() == 20, "collection has {} descriptors", coll.len());
    let opts = ExtractOptions { approve_sparsity: true, ..Default::default() };
    let full = extract(&set, &coll, &opts).map_err(|e| e.to_string())?.matrix;
    let full_index = time_index(&full.index().as_slice());
    let columns = coll.output_columns().map_err(|e| e.to_string())?;
    let spans = BTreeMap::from([("A", (a_idx[0], *a_idx.last().unwrap())), ("B", (b_idx[0], *b_idx.last().unwrap()))]);

    let subsets = 50;
    for trial in 0..subsets {
        let k = rng.random_range(1..=columns.len());
        let mut pick: Vec<String> = columns.clone();
        for i in 0..k {
            let j = rng.random_range(i..pick.len());
            pick.swap(i, j);
        }
        pick.truncate(k);

        let reduced_coll = coll.reduce(&pick).map_err(|e| e.to_string())?;
        let reduced = extract(&set, &reduced_coll, &opts).map_err(|e| e.to_string())?.matrix;
        let got: BTreeSet<&str> = reduced.column_names().collect();
        ensure!(
            got == pick.iter().map(String::as_str).collect(),
            "trial {trial}: reduced columns differ from the request"
        );

        // Route 1: rows are the window ends of the selected groups, values
        // are the full matrix cells at the same index.
        let mut expected_rows = BTreeSet::new();
        for c in &pick {
            let p = parse_output_name(c).map_err(|e| e.to_string())?;
            let (Delta::Time(w), Delta::Time(s)) = (p.window, p.stride) else { unreachable!() };
            let (b, e) = spans[p.series[0].as_str()];
            expected_rows.extend(enumerate_starts_ns(b, e, w, s).into_iter().map(|a| a + w));
        }
        let rows = time_index(&reduced.index().as_slice());
        ensure!(
            rows == expected_rows.into_iter().collect::<Vec<_>>(),
            "trial {trial}: reduced index is not the selected groups' window ends"
        );
        for (r, t) in rows.iter().enumerate() {
            let fr = full_index.binary_search(t).map_err(|_| format!("trial {trial}: row {t} missing in full"))?;
            for c in &pick {
                ensure!(
                    cell(&reduced, c, r).bitwise_eq(&cell(&full, c, fr)),
                    "trial {trial}: {c} differs at {t}"
                );
            }
        }

        // Route 2: the matrix projection.
        let order: Vec<&str> = reduced.column_names().collect();
        let projected = full.project(&order).ok_or("projection failed")?;
        ensure!(projected.bitwise_eq(&reduced), "trial {trial}: projection differs");
    }
    Ok(format!("{subsets} random subsets of a 20-descriptor collection, checked by row oracle and projection"))
}

// ------------------------------------------------------------- criterion 8

fn chunking() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let periods = [10_000_000i64, 100_000_000, 250_000_000, S];
    let cases = 100;
    let mut n_chunks = 0;
    let mut n_windows = 0;
    for case in 0..cases {
        // Gapped, jittered series.
        let p = periods[rng.random_range(0..periods.len())];
        let n = rng.random_range(50..3000);
        let mut idx = Vec::with_capacity(n);
        let mut t = rng.random_range(0..1000) * S;
        for _ in 0..n {
            idx.push(t);
            t += if rng.random_bool(0.003) {
                p * rng.random_range(10..100)
            } else {
                p + rng.random_range(-p / 10..=p / 10)
            };
        }
        let values: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let series = Series::new("x", idx.clone(), values.clone()).unwrap();
        let gap_factor = rng.random_range(2.0..6.0);
        let max_chunk_dur = rng.random_bool(0.5).then(|| Delta::Time(p * rng.random_range(20..500)));
        let spec = ChunkSpec { gap_factor, max_chunk_dur, ..ChunkSpec::default() };
        let ranges = chunk_series(&series.view(), &spec).map_err(|e| e.to_string())?;

        let mut cat_idx = Vec::new();
        let mut cat_vals = Vec::new();
        let Delta::Time(period) = series.view().infer_period().map_err(|e| e.to_string())? else {
            unreachable!()
        };
        let threshold = gap_factor * period as f64;
        for r in &ranges {
            let slice = r.slice(&series.view()).map_err(|e| e.to_string())?;
            let si = time_index(&slice.index());
            ensure!(
                si.windows(2).all(|d| ((d[1] - d[0]) as f64) <= threshold),
                "case {case}: chunk holds a gap above {threshold} ns"
            );
            cat_idx.extend(si);
            cat_vals.extend(f64_values(slice.values()));
        }
        ensure!(cat_idx == idx, "case {case}: concatenated chunk index differs");
        ensure!(
            cat_vals.iter().zip(&values).all(|(a, b)| a.to_bits() == b.to_bits()) && cat_vals.len() == n,
            "case {case}: concatenated chunk values differ"
        );
        n_chunks += ranges.len();

        // Gapless fixture: chunked extraction equals whole extraction.
        let s = [5 * S, 10 * S][rng.random_range(0..2)];
        let w = s * rng.random_range(1..=4);
        let m = s * rng.random_range(w / s + 1..=w / s + 6);
        let len = (rng.random_range(200..600) * S) / p;
        let reg: Vec<i64> = (0..len).map(|i| i * p).collect();
        let reg_vals: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        let whole_set = SeriesSet::from_series([Series::new("x", reg, reg_vals).unwrap()]).unwrap();
        let funcs: Vec<_> = ["mean", "std", "min", "max", "count", "median", "slope", "first", "last"]
            .iter()
            .map(|f| builtin(f, params!()).unwrap())
            .collect();
        let coll = FeatureCollection::from_descriptors(
            expand_multiple(&funcs, &[vec!["x"]], &[Delta::Time(w)], &[Delta::Time(s)]).unwrap(),
        )
        .map_err(|e| e.to_string())?;
        let opts = ExtractOptions { approve_sparsity: true, ..Default::default() };
        let whole = extract(&whole_set, &coll, &opts).map_err(|e| e.to_string())?.matrix;
        let spec = ChunkSpec {
            max_chunk_dur: Some(Delta::Time(m)),
            sub_chunk_overlap: Some(Delta::Time(w - s)),
            ..ChunkSpec::default()
        };
        let groups = chunk_set(&whole_set, &spec).map_err(|e| e.to_string())?;
        let mut rows: Vec<(i64, Vec<Scalar>)> = Vec::new();
        for g in &groups {
            let part = extract_chunk(g, &coll, &opts).map_err(|e| e.to_string())?.matrix;
            let pi = time_index(&part.index().as_slice());
            for (r, t) in pi.into_iter().enumerate() {
                rows.push((t, part.columns().map(|(_, c)| c.get(r)).collect()));
            }
        }
        let wi = time_index(&whole.index().as_slice());
        ensure!(
            rows.iter().map(|r| r.0).collect::<Vec<_>>() == wi,
            "case {case}: chunked rows {} vs whole {} (w={w} s={s} M={m})",
            rows.len(),
            wi.len()
        );
        let whole_cols: Vec<&Column> = whole.columns().map(|(_, c)| c).collect();
        for (r, (_, cells)) in rows.iter().enumerate() {
            ensure!(
                cells.iter().zip(&whole_cols).all(|(a, c)| a.bitwise_eq(&c.get(r))),
                "case {case}: chunked row {r} differs from whole extraction"
            );
        }
        n_windows += wi.len();
    }
    Ok(format!(
        "{cases} gapped series reassembled from {n_chunks} chunks with no gap above threshold; {n_windows} windows from chunked extraction equal whole-series extraction"
    ))
}

// ------------------------------------------------------------- criterion 9

fn write_csv(path: &Path, header: &str, rows: impl Iterator<Item = String>) {
    let mut text = format!("{header}\n");
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    fs::write(path, text).unwrap();
}

fn pipeline_cli() -> Check {
    const T0: i64 = 1_600_000_000 * S;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let Wearable { set } = wearable();
    let ibi = set.get("IBI").unwrap();
    let tmp = set.get("TMP").unwrap();
    let ts = |t: i64| format_timestamp(T0 + t);

    write_csv(
        &d.join("acc.csv"),
        "timestamp,ACC_x,ACC_y,ACC_z",
        (0..32 * 600i64).map(|i| {
            let phase = i as f64 / 40.0;
            format!("{},{},{},{}", ts(i * S / 32), (phase.sin() * 40.0).round(), (phase.cos() * 30.0).round(), 64 - i % 5)
        }),
    );
    let tmp_idx = time_index(&tmp.index().as_slice());
    let tmp_vals = f64_values(tmp.values().as_slice());
    write_csv(
        &d.join("tmp.csv"),
        "timestamp,TMP",
        tmp_idx.iter().zip(&tmp_vals).map(|(t, v)| format!("{},{v:?}", ts(*t))),
    );
    let ibi_idx = time_index(&ibi.index().as_slice());
    let ibi_vals = f64_values(ibi.values().as_slice());
    write_csv(
        &d.join("ibi.csv"),
        "timestamp,IBI",
        ibi_idx.iter().zip(&ibi_vals).map(|(t, v)| format!("{},{v:?}", ts(*t))),
    );
    let pipeline_json = r#"{"steps": [
        {"function": "smv", "series": [["ACC_x", "ACC_y", "ACC_z"]]},
        {"function": "median_filter", "series": "ACC_SMV", "params": {"size": 5}},
        {"function": "clip", "series": "TMP", "params": {"min": 25.0, "max": 40.0}},
        {"function": "clip", "series": "IBI", "params": {"min": 0.3, "max": 2.0}}
    ]}"#;
    let features_json = r#"{
        "features": [
            {"series": ["ACC_SMV", "TMP"], "functions": [{"name": "mean"}, {"name": "std"}, {"name": "median"}],
             "windows": ["30s", "1m"], "strides": ["10s"]},
            {"series": "IBI", "functions": [{"name": "mean", "robust": {}}, {"name": "count"}],
             "windows": ["30s", "1m"], "strides": ["10s"]}
        ],
        "options": {"approve_sparsity": true}
    }"#;
    fs::write(d.join("pipeline.json"), pipeline_json).unwrap();
    fs::write(d.join("features.json"), features_json).unwrap();

    let cli = |args: &[&str]| -> Result<(), String> {
        let out = Command::new(env!("CARGO_BIN_EXE_tsweave"))
            .current_dir(d)
            .args(args)
            .output()
            .map_err(|e| e.to_string())?;
        match out.status.code() {
            Some(0) => Ok(()),
            code => Err(format!("{args:?} exited {code:?}: {}", String::from_utf8_lossy(&out.stderr))),
        }
    };
    cli(&["process", "--data", "acc.csv", "tmp.csv", "ibi.csv", "--pipeline", "pipeline.json", "--out-dir", "processed"])?;
    cli(&[
        "extract", "--data", "processed/ACC_SMV.csv", "processed/TMP.csv", "processed/IBI.csv", "--config",
        "features.json", "--out", "features.csv", "--workers", "2",
    ])?;

    // Library route over the same files.
    let mut raw = SeriesSet::new();
    for f in ["acc.csv", "tmp.csv", "ibi.csv"] {
        for s in load_csv(&d.join(f), &LoadOptions::default()).map_err(|e| e.to_string())? {
            raw.insert(s).map_err(|e| e.to_string())?;
        }
    }
    let before = raw.deep_copy();
    let pipeline = PipelineConfigDoc::from_json(pipeline_json)
        .and_then(|doc| doc.to_pipeline())
        .map_err(|e| e.to_string())?;
    let required = pipeline.required_inputs().map_err(|e| e.to_string())?;
    let raw_names: BTreeSet<String> = raw.names().map(str::to_string).collect();
    ensure!(required == raw_names, "required_inputs {required:?} != raw series {raw_names:?}");
    let processed = pipeline.run(&raw).map_err(|e| e.to_string())?;
    ensure!(raw.bitwise_eq(&before), "pipeline modified its input set");

    let coll = tsweave::io::FeatureConfigDoc::from_json(features_json)
        .and_then(|doc| doc.to_collection())
        .map_err(|e| e.to_string())?;
    let mut selected = SeriesSet::new();
    for name in ["ACC_SMV", "TMP", "IBI"] {
        selected.insert(processed.get(name).unwrap().clone()).map_err(|e| e.to_string())?;
    }
    let lib = extract(&selected, &coll, &ExtractOptions::default()).map_err(|e| e.to_string())?.matrix;
    write_matrix(&lib, &d.join("library.csv")).map_err(|e| e.to_string())?;
    let cli_bytes = fs::read(d.join("features.csv")).map_err(|e| e.to_string())?;
    ensure!(
        cli_bytes == fs::read(d.join("library.csv")).unwrap(),
        "CLI feature matrix differs from the library result"
    );
    let ibi_nan = lib
        .column("IBI__mean__w=30s_s=10s")
        .and_then(Column::as_f64)
        .map_or(0, |v| v.iter().filter(|x| x.is_nan()).count());
    ensure!(ibi_nan > 0, "no empty IBI windows in the chain output");
    Ok(format!(
        "process and extract exit 0; {} x {} matrix equals the library result byte for byte; required_inputs = {:?}; input unchanged",
        lib.n_rows(),
        lib.n_columns(),
        required
    ))
}

// ------------------------------------------------------------ criterion 10

fn ident() -> impl Strategy<Value = String> {
    "[A-Za-z0-9]([A-Za-z0-9_.-]{0,8}[A-Za-z0-9])?".prop_filter("reserved", |s| !s.contains("__"))
}

fn grid() -> impl Strategy<Value = (Delta, Delta)> {
    let time = || {
        prop_oneof![
            (1i64..10_000_000_000_000).prop_map(Delta::Time),
            (1i64..100_000).prop_map(|x| Delta::Time(x * S)),
            (1i64..10_000).prop_map(|x| Delta::Time(x * 1_000_000)),
        ]
    };
    let numeric = || {
        prop_oneof![
            (1e-9f64..1e9).prop_map(Delta::Numeric),
            (1u32..10_000).prop_map(|x| Delta::Numeric(x as f64)),
        ]
    };
    prop_oneof![(time(), time()), (numeric(), numeric())]
}

fn naming_grammar() -> Check {
    let mut runner = TestRunner::new(Config { cases: 10_000, failure_persistence: None, ..Config::default() });
    let strategy = (proptest::collection::vec(ident(), 1..4), ident(), grid());
    runner
        .run(&strategy, |(series, output, (w, s))| {
            let name = format_output_name(&series, &output, w, s).unwrap();
            let parsed = parse_output_name(&name).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert_eq!(&parsed.series, &series);
            prop_assert_eq!(&parsed.output, &output);
            prop_assert_eq!(parsed.window, w);
            prop_assert_eq!(parsed.stride, s);
            let again = format_output_name(&parsed.series, &parsed.output, parsed.window, parsed.stride).unwrap();
            prop_assert_eq!(again, name);
            Ok(())
        })
        .map_err(|e| format!("round trip: {e}"))?;

    let corpus = [
        "",
        "x",
        "x__mean",
        "x__mean__",
        "x__mean__w=30s",
        "x__mean__w=30s_s=",
        "x__mean__w=_s=10s",
        "x__mean__s=10s_w=30s",
        "x__mean__w=30s_s=10s__extra",
        "__mean__w=30s_s=10s",
        "x____w=30s_s=10s",
        "x__mean__w=60s_s=10s",
        "x__mean__w=30000ms_s=10s",
        "x__mean__w=0.5m_s=10s",
        "x__mean__w=30S_s=10s",
        "x__mean__w=30 s_s=10s",
        "x__mean__w=30s_s=10",
        "x__mean__w=30_s=10s",
        "x__mean__w=0s_s=10s",
        "x__mean__w=30s_s=0ns",
        "x__mean__w=-30s_s=10s",
        "x__mean__w=-1_s=1",
        "x__mean__w=0_s=1",
        "x__mean__w=NaN_s=1",
        "x__mean__w=inf_s=1",
        "x__mean__w=1.50_s=1",
        "x__mean__w=1e3_s=1",
        "x__mean__w=+1_s=1",
        "x__mean__w=01_s=1",
        "|x__mean__w=1_s=1",
        "x|__mean__w=1_s=1",
        "x||y__mean__w=1_s=1",
        "_x__mean__w=1_s=1",
        "x___mean__w=1_s=1",
        "x__mean_x__w=1_s=1_",
        "x__me|an__w=1_s=1",
        "x__mean__w=1_s=1_s=1",
        "x__mean__W=1_S=1",
        "x__mean__w=1s_s=1s ",
    ];
    for bad in corpus {
        match parse_output_name(bad) {
            Err(Error::MalformedName(_)) => {}
            other => return Err(format!("`{bad}` was not rejected: {other:?}")),
        }
    }
    Ok(format!("10000 generated names round-trip; {} malformed names rejected", corpus.len()))
}
