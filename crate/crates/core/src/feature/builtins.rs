//! Built-in window statistics.
//!
//! | name | output | notes |
//! |------|--------|-------|
//! | `count` | i64 | any value type |
//! | `sum`, `abs_energy` | f64 | `0` on an empty window |
//! | `mean`, `rms` | f64 | |
//! | `std`, `var` | f64 | population (divide by n) |
//! | `min`, `max` | f64 | NaN if any sample is NaN |
//! | `median`, `quantile` | f64 | linear interpolation between order statistics, `q` in `[0, 1]` |
//! | `skewness` | f64 | Fisher–Pearson g1 = m3 / m2^1.5 |
//! | `kurtosis` | f64 | excess g2 = m4 / m2² − 3 |
//! | `slope` | f64 | least squares against the index (seconds for time) |
//! | `first`, `last` | input type | categorical stays categorical |
//! | `zero_cross` | i64 | count of `x[i]·x[i+1] < 0` |
//!
//! Everything except `count`, `sum`, `abs_energy` and `zero_cross` fails on
//! an empty window; wrap with [`make_robust`](super::make_robust) to fill
//! instead.

use crate::error::{Error, Result};
use crate::params::{ParamReader, Params};
use crate::series::SeriesView;
use crate::values::{AsF64, Scalar, ValueSlice, ValueTag};

use super::wrapper::{FuncWrapper, InputMode, OutputType};

pub const BUILTIN_NAMES: [&str; 17] = [
    "count",
    "sum",
    "mean",
    "std",
    "var",
    "min",
    "max",
    "median",
    "quantile",
    "rms",
    "abs_energy",
    "skewness",
    "kurtosis",
    "slope",
    "first",
    "last",
    "zero_cross",
];

type Calc = Result<Vec<Scalar>, String>;

macro_rules! numeric {
    ($values:expr, |$xs:ident| $body:expr) => {
        match $values {
            ValueSlice::F64($xs) => $body,
            ValueSlice::F32($xs) => $body,
            ValueSlice::I64($xs) => $body,
            ValueSlice::Bool($xs) => $body,
            ValueSlice::Categorical { .. } => {
                return Err("categorical values are not numeric".to_string())
            }
        }
    };
}

fn single<'v, 'a>(inputs: &'v [SeriesView<'a>]) -> Result<&'v SeriesView<'a>, String> {
    match inputs {
        [one] => Ok(one),
        _ => Err(format!("expects one input series, got {}", inputs.len())),
    }
}

fn non_empty<'v, 'a>(inputs: &'v [SeriesView<'a>]) -> Result<&'v SeriesView<'a>, String> {
    let view = single(inputs)?;
    if view.is_empty() {
        return Err("empty window".to_string());
    }
    Ok(view)
}

fn sum<T: AsF64>(xs: &[T]) -> f64 {
    xs.iter().map(|x| x.as_f64()).sum()
}

fn sum_sq<T: AsF64>(xs: &[T]) -> f64 {
    xs.iter()
        .map(|x| {
            let v = x.as_f64();
            v * v
        })
        .sum()
}

/// Mean and the 2nd..4th central moments (population), two-pass.
fn moments<T: AsF64>(xs: &[T]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = sum(xs) / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in xs {
        let d = x.as_f64() - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (mean, m2 / n, m3 / n, m4 / n)
}

fn extremum<T: AsF64>(xs: &[T], want_max: bool) -> f64 {
    let mut best = xs[0].as_f64();
    for x in xs {
        let v = x.as_f64();
        if v.is_nan() {
            return f64::NAN;
        }
        if (want_max && v > best) || (!want_max && v < best) {
            best = v;
        }
    }
    best
}

/// Linear interpolation at rank `(n-1)·q`. Works on a scratch copy; the
/// window itself is never reordered.
fn quantile<T: AsF64>(xs: &[T], q: f64) -> f64 {
    let mut buf: Vec<f64> = xs.iter().map(|x| x.as_f64()).collect();
    if buf.iter().any(|v| v.is_nan()) {
        return f64::NAN;
    }
    let h = (buf.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    let (_, &mut below, rest) = buf.select_nth_unstable_by(lo, f64::total_cmp);
    if frac == 0.0 || rest.is_empty() {
        return below;
    }
    let above = rest.iter().copied().fold(f64::INFINITY, f64::min);
    below + (above - below) * frac
}

fn zero_cross<T: AsF64>(xs: &[T]) -> i64 {
    xs.windows(2)
        .filter(|w| w[0].as_f64() * w[1].as_f64() < 0.0)
        .count() as i64
}

fn slope<T: AsF64>(view: &SeriesView<'_>, ys: &[T]) -> f64 {
    let index = view.index();
    let n = ys.len();
    let t0 = index.seconds(0);
    let x = |i: usize| index.seconds(i) - t0;
    let mean_x = (0..n).map(x).sum::<f64>() / n as f64;
    let mean_y = sum(ys) / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = x(i) - mean_x;
        sxy += dx * (y.as_f64() - mean_y);
        sxx += dx * dx;
    }
    sxy / sxx
}

fn f64_out(x: f64) -> Calc {
    Ok(vec![Scalar::F64(x)])
}

fn float_builtin(
    name: &str,
    params: Params,
    calc: impl Fn(&[SeriesView<'_>], &Params) -> Calc + Send + Sync + 'static,
) -> Result<FuncWrapper> {
    Ok(FuncWrapper::new(name, calc)?.with_params(params).mark_builtin())
}

fn typed_builtin(
    name: &str,
    params: Params,
    output: OutputType,
    calc: impl Fn(&[SeriesView<'_>], &Params) -> Calc + Send + Sync + 'static,
) -> Result<FuncWrapper> {
    Ok(FuncWrapper::new(name, calc)?
        .with_output_types(vec![output])?
        .with_params(params)
        .mark_builtin())
}

/// Looks up a built-in by name and binds its parameters.
pub fn builtin(name: &str, params: Params) -> Result<FuncWrapper> {
    let reader = ParamReader::new(name, &params);
    if name == "quantile" {
        reader.allow_only(&["q"])?;
        let q = reader.require("q", reader.f64("q"))?;
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::BadParam {
                func: name.to_string(),
                param: "q".to_string(),
                reason: format!("{q} is outside [0, 1]"),
            });
        }
        let out = format!("quantile_{q}");
        return Ok(FuncWrapper::new("quantile", move |inputs: &[SeriesView<'_>], _: &Params| {
            let v = non_empty(inputs)?;
            f64_out(numeric!(v.values(), |xs| quantile(xs, q)))
        })?
        .with_outputs([out])?
        .with_params(params)
        .mark_builtin());
    }
    if !BUILTIN_NAMES.contains(&name) {
        return Err(Error::UnknownBuiltin(name.to_string()));
    }
    reader.allow_only(&[])?;
    let i64_out = OutputType::Fixed(ValueTag::I64);
    match name {
        "count" => typed_builtin(name, params, i64_out, |inputs, _| {
            Ok(vec![Scalar::I64(single(inputs)?.len() as i64)])
        }),
        "sum" => float_builtin(name, params, |inputs, _| {
            f64_out(numeric!(single(inputs)?.values(), |xs| sum(xs)))
        }),
        "abs_energy" => float_builtin(name, params, |inputs, _| {
            f64_out(numeric!(single(inputs)?.values(), |xs| sum_sq(xs)))
        }),
        "mean" => float_builtin(name, params, |inputs, _| {
            let v = non_empty(inputs)?;
            f64_out(numeric!(v.values(), |xs| sum(xs) / xs.len() as f64))
        }),
        "rms" => float_builtin(name, params, |inputs, _| {
            let v = non_empty(inputs)?;
            f64_out(numeric!(v.values(), |xs| (sum_sq(xs) / xs.len() as f64).sqrt()))
        }),
        "var" => float_builtin(name, params, |inputs, _| {
            let v = non_empty(inputs)?;
            f64_out(numeric!(v.values(), |xs| moments(xs).1))
        }),
        "std" => float_builtin(name, params, |inputs, _| {
            let v = non_empty(inputs)?;
            f64_out(numeric!(v.values(), |xs| moments(xs).1.sqrt()))
        }),
        "skewness" => float_builtin(name, params, |inputs, _| {
            let v = non_empty(inputs)?;
            f64_out(numeric!(v.values(), |xs| {
                let (_, m2, m3, _) = moments(xs);
                m3 / m2.powf(1.5)
            }))
        }),
        "kurtosis" => float_builtin(name, params, |inputs, _| {
            let v = non_empty(inputs)?;
            f64_out(numeric!(v.values(), |xs| {
                let (_, m2, _, m4) = moments(xs);
                m4 / (m2 * m2) - 3.0
            }))
        }),
        "min" => float_builtin(name, params, |inputs, _| {
            let v = non_empty(inputs)?;
            f64_out(numeric!(v.values(), |xs| extremum(xs, false)))
        }),
        "max" => float_builtin(name, params, |inputs, _| {
            let v = non_empty(inputs)?;
            f64_out(numeric!(v.values(), |xs| extremum(xs, true)))
        }),
        "median" => float_builtin(name, params, |inputs, _| {
            let v = non_empty(inputs)?;
            f64_out(numeric!(v.values(), |xs| quantile(xs, 0.5)))
        }),
        "slope" => Ok(float_builtin(name, params, |inputs, _| {
            let v = non_empty(inputs)?;
            f64_out(numeric!(v.values(), |ys| slope(v, ys)))
        })?
        .with_input_mode(InputMode::ValuesAndIndex)),
        "first" => typed_builtin(name, params, OutputType::Inherit, |inputs, _| {
            Ok(vec![non_empty(inputs)?.values().scalar(0)])
        }),
        "last" => typed_builtin(name, params, OutputType::Inherit, |inputs, _| {
            let v = non_empty(inputs)?;
            Ok(vec![v.values().scalar(v.len() - 1)])
        }),
        "zero_cross" => typed_builtin(name, params, i64_out, |inputs, _| {
            Ok(vec![Scalar::I64(numeric!(single(inputs)?.values(), |xs| zero_cross(xs)))])
        }),
        _ => unreachable!("name checked against BUILTIN_NAMES"),
    }
}
