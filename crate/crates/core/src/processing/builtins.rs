//! Built-in processing steps.
//!
//! | name | selector | params | output |
//! |------|----------|--------|--------|
//! | `clip` | single names | `min`, `max` (at least one) | replaces input |
//! | `scale` | single names | `factor` (1), `offset` (0) | `x·factor + offset`, replaces input |
//! | `resample_linear` | single names | `period` (delta) | linear interpolation onto `first + k·period`, replaces input |
//! | `median_filter` | single names | `size` (odd) | centred running median, windows truncated at the edges, replaces input |
//! | `smv` | tuples | `output` (optional) | `sqrt(Σ xᵢ²)` over series sharing one index |
//!
//! f32 inputs stay f32; other numeric inputs come out as f64.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::index::{Delta, Index, IndexSlice};
use crate::params::{ParamReader, Params};
use crate::series::{validate_name, SeriesView};
use crate::values::{ValueColumn, ValueSlice, ValueTag};

use super::{OutputDecl, ProcessorStep, Selector, StepOutput};

pub const BUILTIN_PROCESSORS: [&str; 5] = ["clip", "scale", "resample_linear", "median_filter", "smv"];

type StepResult = Result<Vec<StepOutput>, String>;

fn one<'v, 'a>(inputs: &'v [SeriesView<'a>]) -> Result<&'v SeriesView<'a>, String> {
    match inputs {
        [v] => Ok(v),
        _ => Err(format!("expects one input series, got {}", inputs.len())),
    }
}

fn numbers(values: ValueSlice<'_>) -> Result<Vec<f64>, String> {
    if values.tag() == ValueTag::Categorical {
        return Err("categorical values are not numeric".to_string());
    }
    Ok((0..values.len())
        .map(|i| values.get_f64(i).expect("numeric slice"))
        .collect())
}

/// Stores `xs` as f32 when `like` is f32, f64 otherwise.
fn column_like(like: ValueTag, xs: Vec<f64>) -> ValueColumn {
    if like == ValueTag::F32 {
        ValueColumn::from(xs.into_iter().map(|x| x as f32).collect::<Vec<_>>())
    } else {
        ValueColumn::from(xs)
    }
}

fn map_values(view: &SeriesView<'_>, f: impl Fn(f64) -> f64) -> StepResult {
    let xs: Vec<f64> = numbers(view.values())?.into_iter().map(f).collect();
    Ok(vec![StepOutput::unnamed(
        view.index().to_owned(),
        column_like(view.values().tag(), xs),
    )])
}

fn bad(func: &str, param: &str, reason: impl Into<String>) -> Error {
    Error::BadParam {
        func: func.to_string(),
        param: param.to_string(),
        reason: reason.into(),
    }
}

/// A built-in processing step bound to `selector` and `params`.
pub fn builtin_step(name: &str, selector: Vec<Selector>, params: Params) -> Result<ProcessorStep> {
    if !BUILTIN_PROCESSORS.contains(&name) {
        return Err(Error::UnknownBuiltin(name.to_string()));
    }
    let reader = ParamReader::new(name, &params);
    let joint = name == "smv";
    for entry in &selector {
        match (joint, entry) {
            (false, Selector::Joint(_)) => {
                return Err(bad(name, "series", "takes single series names, not tuples"))
            }
            (true, Selector::Single(_)) => {
                return Err(bad(name, "series", "takes tuples of series names"))
            }
            _ => {}
        }
    }
    let step = match name {
        "clip" => {
            reader.allow_only(&["min", "max"])?;
            let lo = reader.f64("min")?.unwrap_or(f64::NEG_INFINITY);
            let hi = reader.f64("max")?.unwrap_or(f64::INFINITY);
            if !params.contains_key("min") && !params.contains_key("max") {
                return Err(bad(name, "min", "set `min`, `max` or both"));
            }
            if lo > hi {
                return Err(bad(name, "min", "greater than `max`"));
            }
            ProcessorStep::new(name, move |inputs: &[SeriesView<'_>], _: &Params| {
                map_values(one(inputs)?, |x| if x.is_nan() { x } else { x.clamp(lo, hi) })
            }, selector)?
        }
        "scale" => {
            reader.allow_only(&["factor", "offset"])?;
            let factor = reader.f64("factor")?.unwrap_or(1.0);
            let offset = reader.f64("offset")?.unwrap_or(0.0);
            ProcessorStep::new(name, move |inputs: &[SeriesView<'_>], _: &Params| {
                map_values(one(inputs)?, |x| x * factor + offset)
            }, selector)?
        }
        "resample_linear" => {
            reader.allow_only(&["period"])?;
            let period = reader.require("period", reader.delta("period"))?;
            if !period.is_positive() {
                return Err(bad(name, "period", "must be positive"));
            }
            ProcessorStep::new(name, move |inputs: &[SeriesView<'_>], _: &Params| {
                resample_linear(one(inputs)?, period)
            }, selector)?
        }
        "median_filter" => {
            reader.allow_only(&["size"])?;
            let size = reader.require("size", reader.usize("size"))?;
            if size % 2 == 0 {
                return Err(bad(name, "size", "must be odd"));
            }
            ProcessorStep::new(name, move |inputs: &[SeriesView<'_>], _: &Params| {
                median_filter(one(inputs)?, size)
            }, selector)?
        }
        "smv" => {
            reader.allow_only(&["output"])?;
            let output = reader.str("output")?.map(str::to_string);
            if let Some(o) = &output {
                validate_name(o)?;
            }
            for entry in &selector {
                if entry.names().len() < 2 {
                    return Err(bad(name, "series", "needs at least two series per tuple"));
                }
                validate_name(&smv_name(output.as_deref(), entry.names()))?;
            }
            let decl_output = output.clone();
            ProcessorStep::new(name, move |inputs: &[SeriesView<'_>], _: &Params| {
                smv(inputs, output.as_deref())
            }, selector)?
            .with_outputs(OutputDecl::PerEntry(Arc::new(move |names: &[String]| {
                vec![smv_name(decl_output.as_deref(), names)]
            })))
        }
        _ => unreachable!("name checked against BUILTIN_PROCESSORS"),
    };
    let step = if joint { step } else { step.with_outputs(OutputDecl::SameAsInput) };
    Ok(step.with_params(params).mark_builtin())
}

/// `output` if given, else the inputs' common prefix followed by `SMV`
/// (`ACC_x`, `ACC_y`, `ACC_z` give `ACC_SMV`).
fn smv_name<S: AsRef<str>>(output: Option<&str>, names: &[S]) -> String {
    if let Some(o) = output {
        return o.to_string();
    }
    let first = names[0].as_ref();
    let mut len = first.len();
    for n in &names[1..] {
        len = first
            .char_indices()
            .zip(n.as_ref().chars())
            .take_while(|((_, a), b)| a == b)
            .last()
            .map_or(0, |((i, a), _)| i + a.len_utf8())
            .min(len);
    }
    format!("{}SMV", &first[..len])
}

fn smv(inputs: &[SeriesView<'_>], output: Option<&str>) -> StepResult {
    let first = inputs.first().ok_or("no inputs")?;
    let index = first.index();
    let mut acc = vec![0.0f64; first.len()];
    let mut all_f32 = true;
    for v in inputs {
        if !same_index(&index, &v.index()) {
            return Err(format!(
                "`{}` and `{}` do not share an index",
                first.name(),
                v.name()
            ));
        }
        all_f32 &= v.values().tag() == ValueTag::F32;
        for (a, x) in acc.iter_mut().zip(numbers(v.values())?) {
            *a += x * x;
        }
    }
    acc.iter_mut().for_each(|a| *a = a.sqrt());
    let names: Vec<&str> = inputs.iter().map(|v| v.name()).collect();
    let tag = if all_f32 { ValueTag::F32 } else { ValueTag::F64 };
    Ok(vec![StepOutput::named(
        smv_name(output, &names),
        index.to_owned(),
        column_like(tag, acc),
    )])
}

fn same_index(a: &IndexSlice<'_>, b: &IndexSlice<'_>) -> bool {
    match (a, b) {
        (IndexSlice::TimeNs(x), IndexSlice::TimeNs(y)) => x == y,
        (IndexSlice::Numeric(x), IndexSlice::Numeric(y)) => {
            x.len() == y.len() && x.iter().zip(y.iter()).all(|(p, q)| p.to_bits() == q.to_bits())
        }
        _ => false,
    }
}

fn resample_linear(view: &SeriesView<'_>, period: Delta) -> StepResult {
    let ys = numbers(view.values())?;
    let index = view.index();
    if index.kind() != period.kind() {
        return Err(format!("period {period} does not match the {} index", index.kind()));
    }
    let tag = view.values().tag();
    if ys.is_empty() {
        return Ok(vec![StepOutput::unnamed(index.to_owned(), column_like(tag, ys))]);
    }
    // Positions as f64 offsets from the first sample; the grid itself is
    // built in the index's own arithmetic.
    let (new_index, offsets): (Index, Vec<f64>) = match (index, period) {
        (IndexSlice::TimeNs(t), Delta::Time(p)) => {
            let n = ((t[t.len() - 1] - t[0]) / p) as usize + 1;
            let grid: Vec<i64> = (0..n).map(|k| t[0] + k as i64 * p).collect();
            let off = grid.iter().map(|g| (g - t[0]) as f64).collect();
            (Index::from(grid), off)
        }
        (IndexSlice::Numeric(x), Delta::Numeric(p)) => {
            let last = x[x.len() - 1];
            let mut grid = Vec::new();
            let mut k = 0usize;
            while x[0] + k as f64 * p <= last {
                grid.push(x[0] + k as f64 * p);
                k += 1;
            }
            let off = grid.iter().map(|g| g - x[0]).collect();
            (Index::from(grid), off)
        }
        _ => unreachable!("kinds checked"),
    };
    let pos = |i: usize| match index {
        IndexSlice::TimeNs(t) => (t[i] - t[0]) as f64,
        IndexSlice::Numeric(x) => x[i] - x[0],
    };
    let mut out = Vec::with_capacity(offsets.len());
    let mut j = 0;
    for &o in &offsets {
        while j + 1 < ys.len() && pos(j + 1) <= o {
            j += 1;
        }
        let y = if pos(j) == o || j + 1 == ys.len() {
            ys[j]
        } else {
            let (t0, t1) = (pos(j), pos(j + 1));
            ys[j] + (ys[j + 1] - ys[j]) * (o - t0) / (t1 - t0)
        };
        out.push(y);
    }
    Ok(vec![StepOutput::unnamed(new_index, column_like(tag, out))])
}

fn median_filter(view: &SeriesView<'_>, size: usize) -> StepResult {
    let xs = numbers(view.values())?;
    let half = size / 2;
    let mut scratch = Vec::with_capacity(size);
    let out = (0..xs.len())
        .map(|i| {
            scratch.clear();
            scratch.extend_from_slice(&xs[i.saturating_sub(half)..(i + half + 1).min(xs.len())]);
            scratch.sort_unstable_by(f64::total_cmp);
            let m = scratch.len() / 2;
            if scratch.len() % 2 == 1 {
                scratch[m]
            } else {
                (scratch[m - 1] + scratch[m]) / 2.0
            }
        })
        .collect();
    Ok(vec![StepOutput::unnamed(
        view.index().to_owned(),
        column_like(view.values().tag(), out),
    )])
}
