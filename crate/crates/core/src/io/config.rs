//! JSON documents describing feature collections and pipelines by
//! registered function name.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::feature::{builtin, make_robust, ExtractOptions, FeatureCollection, FeatureDescriptor, FuncWrapper};
use crate::index::Delta;
use crate::params::Params;
use crate::processing::{builtin_step, Pipeline, Selector};
use crate::segment::OutputPosition;
use crate::values::Scalar;

/// `"name"`, or a list whose items are names (each used on its own) or
/// tuples of names (passed together).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeriesSpec {
    One(String),
    Many(Vec<SeriesItem>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeriesItem {
    Name(String),
    Tuple(Vec<String>),
}

impl SeriesSpec {
    fn entries(&self) -> Vec<Vec<String>> {
        match self {
            SeriesSpec::One(n) => vec![vec![n.clone()]],
            SeriesSpec::Many(items) => items
                .iter()
                .map(|item| match item {
                    SeriesItem::Name(n) => vec![n.clone()],
                    SeriesItem::Tuple(ns) => ns.clone(),
                })
                .collect(),
        }
    }

    fn from_names(names: &[String]) -> SeriesSpec {
        match names {
            [one] => SeriesSpec::One(one.clone()),
            many => SeriesSpec::Many(vec![SeriesItem::Tuple(many.to_vec())]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustDoc {
    #[serde(default = "one")]
    pub min_samples: usize,
    /// `"nan"`, `"null"`, a number, a boolean or a category label.
    #[serde(default = "nan")]
    pub fill: Value,
}

fn one() -> usize {
    1
}

fn nan() -> Value {
    Value::String("nan".into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionDoc {
    pub name: String,
    #[serde(default, skip_serializing_if = "Params::is_empty")]
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robust: Option<RobustDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureEntryDoc {
    pub series: SeriesSpec,
    pub functions: Vec<FunctionDoc>,
    pub windows: Vec<String>,
    pub strides: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsDoc {
    #[serde(default)]
    pub approve_sparsity: bool,
    #[serde(default = "one")]
    pub n_workers: usize,
    #[serde(default)]
    pub output_position: OutputPosition,
}

impl Default for OptionsDoc {
    fn default() -> Self {
        OptionsDoc {
            approve_sparsity: false,
            n_workers: 1,
            output_position: OutputPosition::End,
        }
    }
}

impl OptionsDoc {
    pub fn to_options(&self) -> ExtractOptions {
        ExtractOptions {
            approve_sparsity: self.approve_sparsity,
            n_workers: self.n_workers,
            output_position: self.output_position,
            ..ExtractOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureConfigDoc {
    pub features: Vec<FeatureEntryDoc>,
    #[serde(default)]
    pub options: OptionsDoc,
}

fn fill_from_json(func: &str, v: &Value) -> Result<Scalar> {
    let bad = || Error::Config(format!("function `{func}`: unsupported robust fill {v}"));
    Ok(match v {
        Value::Null => Scalar::Null,
        Value::String(s) if s == "nan" => Scalar::F64(f64::NAN),
        Value::String(s) if s == "null" => Scalar::Null,
        Value::String(s) => Scalar::Categorical(s.clone()),
        Value::Bool(b) => Scalar::Bool(*b),
        Value::Number(n) => match n.as_i64() {
            Some(i) => Scalar::I64(i),
            None => Scalar::F64(n.as_f64().ok_or_else(bad)?),
        },
        _ => return Err(bad()),
    })
}

fn fill_to_json(fill: &Scalar) -> Option<Value> {
    Some(match fill {
        Scalar::Null => Value::String("null".into()),
        Scalar::F64(x) if x.is_nan() => nan(),
        Scalar::F64(x) => Value::from(*x),
        Scalar::I64(i) => Value::from(*i),
        Scalar::Bool(b) => Value::Bool(*b),
        Scalar::Categorical(s) if s != "nan" && s != "null" => Value::String(s.clone()),
        _ => return None,
    })
}

impl FunctionDoc {
    pub fn to_wrapper(&self) -> Result<FuncWrapper> {
        let f = builtin(&self.name, self.params.clone())?;
        match &self.robust {
            Some(r) => make_robust(&f, r.min_samples, fill_from_json(&self.name, &r.fill)?),
            None => Ok(f),
        }
    }

    /// Fails unless the document rebuilds exactly this function.
    pub fn from_wrapper(f: &FuncWrapper) -> Result<FunctionDoc> {
        let not_serializable = || Error::NotSerializable(f.base_name().to_string());
        if !f.is_builtin() {
            return Err(not_serializable());
        }
        let robust = match f.robust() {
            Some(r) => Some(RobustDoc {
                min_samples: r.min_samples,
                fill: fill_to_json(&r.fill).ok_or_else(not_serializable)?,
            }),
            None => None,
        };
        let doc = FunctionDoc {
            name: f.base_name().to_string(),
            params: f.params().clone(),
            robust,
        };
        match doc.to_wrapper() {
            Ok(rebuilt) if rebuilt.signature() == f.signature() => Ok(doc),
            _ => Err(not_serializable()),
        }
    }
}

fn parse_deltas(texts: &[String], axis: &'static str) -> Result<Vec<Delta>> {
    if texts.is_empty() {
        return Err(Error::EmptyAxis(axis));
    }
    texts.iter().map(|t| t.parse()).collect()
}

impl FeatureConfigDoc {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Expands every entry over series, windows, strides and functions,
    /// in that order.
    pub fn to_collection(&self) -> Result<FeatureCollection> {
        let mut coll = FeatureCollection::new();
        for entry in &self.features {
            let funcs = entry
                .functions
                .iter()
                .map(FunctionDoc::to_wrapper)
                .collect::<Result<Vec<_>>>()?;
            if funcs.is_empty() {
                return Err(Error::EmptyAxis("functions"));
            }
            let windows = parse_deltas(&entry.windows, "windows")?;
            let strides = parse_deltas(&entry.strides, "strides")?;
            let series = entry.series.entries();
            if series.is_empty() {
                return Err(Error::EmptyAxis("series"));
            }
            for names in &series {
                for &w in &windows {
                    for &s in &strides {
                        for f in &funcs {
                            coll.add(FeatureDescriptor::new(names, f.clone(), w, s)?)?;
                        }
                    }
                }
            }
        }
        Ok(coll)
    }

    /// One entry per (series, window, stride) group.
    pub fn from_collection(coll: &FeatureCollection, options: OptionsDoc) -> Result<Self> {
        let features = coll
            .groups()
            .map(|(key, funcs)| {
                Ok(FeatureEntryDoc {
                    series: SeriesSpec::from_names(&key.series),
                    functions: funcs.iter().map(FunctionDoc::from_wrapper).collect::<Result<_>>()?,
                    windows: vec![key.window.to_string()],
                    strides: vec![key.stride.to_string()],
                })
            })
            .collect::<Result<_>>()?;
        Ok(FeatureConfigDoc { features, options })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepDoc {
    pub function: String,
    pub series: SeriesSpec,
    #[serde(default, skip_serializing_if = "Params::is_empty")]
    pub params: Params,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfigDoc {
    pub steps: Vec<StepDoc>,
}

impl PipelineConfigDoc {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_pipeline(&self) -> Result<Pipeline> {
        let mut pipeline = Pipeline::new();
        for step in &self.steps {
            let selector = match &step.series {
                SeriesSpec::One(n) => vec![Selector::Single(n.clone())],
                SeriesSpec::Many(items) => items
                    .iter()
                    .map(|item| match item {
                        SeriesItem::Name(n) => Selector::Single(n.clone()),
                        SeriesItem::Tuple(ns) => Selector::Joint(ns.clone()),
                    })
                    .collect(),
            };
            pipeline.add_step(builtin_step(&step.function, selector, step.params.clone())?);
        }
        Ok(pipeline)
    }

    pub fn from_pipeline(pipeline: &Pipeline) -> Result<Self> {
        let steps = pipeline
            .steps()
            .iter()
            .map(|step| {
                if !step.is_builtin() {
                    return Err(Error::NotSerializable(step.name().to_string()));
                }
                let items = step
                    .selector()
                    .iter()
                    .map(|sel| match sel {
                        Selector::Single(n) => SeriesItem::Name(n.clone()),
                        Selector::Joint(ns) => SeriesItem::Tuple(ns.clone()),
                    })
                    .collect();
                Ok(StepDoc {
                    function: step.name().to_string(),
                    series: SeriesSpec::Many(items),
                    params: step.params().clone(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(PipelineConfigDoc { steps })
    }
}
