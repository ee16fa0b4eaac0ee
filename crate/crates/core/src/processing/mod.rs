//! Sequential processing pipelines over named series.
//!
//! Each step reads the set as it stood before the step, applies its
//! function per selector entry and writes the outputs back: an existing name
//! is replaced, a new name is added. The caller's set is never touched; the
//! result shares storage with it for every series left alone.

mod builtins;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::index::Index;
use crate::params::Params;
use crate::series::{Series, SeriesSet, SeriesView};
use crate::values::ValueColumn;

pub use builtins::{builtin_step, BUILTIN_PROCESSORS};

/// One series produced by a step. An unnamed output of a single-name entry
/// takes that entry's name.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub name: Option<String>,
    pub index: Index,
    pub values: ValueColumn,
}

impl StepOutput {
    pub fn named(name: impl Into<String>, index: Index, values: impl Into<ValueColumn>) -> Self {
        StepOutput {
            name: Some(name.into()),
            index,
            values: values.into(),
        }
    }

    pub fn unnamed(index: Index, values: impl Into<ValueColumn>) -> Self {
        StepOutput {
            name: None,
            index,
            values: values.into(),
        }
    }
}

/// A whole-series processing function.
pub trait ProcessFn: Send + Sync {
    fn call(&self, inputs: &[SeriesView<'_>], params: &Params) -> Result<Vec<StepOutput>, String>;
}

impl<F> ProcessFn for F
where
    F: Fn(&[SeriesView<'_>], &Params) -> Result<Vec<StepOutput>, String> + Send + Sync,
{
    fn call(&self, inputs: &[SeriesView<'_>], params: &Params) -> Result<Vec<StepOutput>, String> {
        self(inputs, params)
    }
}

/// One selector entry: a name processed on its own, or names passed
/// together in one call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selector {
    Single(String),
    Joint(Vec<String>),
}

impl Selector {
    pub fn names(&self) -> &[String] {
        match self {
            Selector::Single(n) => std::slice::from_ref(n),
            Selector::Joint(ns) => ns,
        }
    }
}

impl From<&str> for Selector {
    fn from(name: &str) -> Self {
        Selector::Single(name.to_string())
    }
}

impl<S: AsRef<str>> From<&[S]> for Selector {
    fn from(names: &[S]) -> Self {
        Selector::Joint(names.iter().map(|n| n.as_ref().to_string()).collect())
    }
}

impl<S: AsRef<str>, const N: usize> From<[S; N]> for Selector {
    fn from(names: [S; N]) -> Self {
        Selector::Joint(names.iter().map(|n| n.as_ref().to_string()).collect())
    }
}

pub type NameFn = Arc<dyn Fn(&[String]) -> Vec<String> + Send + Sync>;

/// Names a step writes for a given selector entry.
#[derive(Clone)]
pub enum OutputDecl {
    /// The entry's own names (in-place transforms).
    SameAsInput,
    /// The same fixed names whatever the entry.
    Named(Vec<String>),
    /// Computed from the entry's names.
    PerEntry(NameFn),
    /// Only known after running; blocks [`Pipeline::required_inputs`].
    Dynamic,
}

impl OutputDecl {
    fn resolve(&self, entry: &Selector) -> Option<Vec<String>> {
        match self {
            OutputDecl::SameAsInput => Some(entry.names().to_vec()),
            OutputDecl::Named(names) => Some(names.clone()),
            OutputDecl::PerEntry(f) => Some(f(entry.names())),
            OutputDecl::Dynamic => None,
        }
    }
}

impl fmt::Debug for OutputDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutputDecl::SameAsInput => f.write_str("SameAsInput"),
            OutputDecl::Named(n) => f.debug_tuple("Named").field(n).finish(),
            OutputDecl::PerEntry(_) => f.write_str("PerEntry(..)"),
            OutputDecl::Dynamic => f.write_str("Dynamic"),
        }
    }
}

#[derive(Clone)]
pub struct ProcessorStep {
    name: String,
    func: Arc<dyn ProcessFn>,
    selector: Vec<Selector>,
    params: Params,
    outputs: OutputDecl,
    builtin: bool,
}

impl fmt::Debug for ProcessorStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProcessorStep")
            .field("name", &self.name)
            .field("selector", &self.selector)
            .field("params", &self.params)
            .field("outputs", &self.outputs)
            .finish()
    }
}

impl ProcessorStep {
    /// A step with dynamic outputs; declare them with
    /// [`with_outputs`](Self::with_outputs) to enable static analysis.
    pub fn new(
        name: impl Into<String>,
        func: impl ProcessFn + 'static,
        selector: Vec<Selector>,
    ) -> Result<Self> {
        if selector.is_empty() {
            return Err(Error::EmptyAxis("series"));
        }
        if selector.iter().any(|s| s.names().is_empty()) {
            return Err(Error::EmptyAxis("series"));
        }
        Ok(ProcessorStep {
            name: name.into(),
            func: Arc::new(func),
            selector,
            params: Params::new(),
            outputs: OutputDecl::Dynamic,
            builtin: false,
        })
    }

    pub fn with_params(mut self, params: Params) -> Self {
        self.params = params;
        self
    }

    pub fn with_outputs(mut self, outputs: OutputDecl) -> Self {
        self.outputs = outputs;
        self
    }

    pub(crate) fn mark_builtin(mut self) -> Self {
        self.builtin = true;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn selector(&self) -> &[Selector] {
        &self.selector
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn outputs(&self) -> &OutputDecl {
        &self.outputs
    }

    pub fn is_builtin(&self) -> bool {
        self.builtin
    }
}

#[derive(Debug, Clone, Default)]
pub struct Pipeline {
    steps: Vec<ProcessorStep>,
}

impl Pipeline {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_step(&mut self, step: ProcessorStep) -> &mut Self {
        self.steps.push(step);
        self
    }

    pub fn steps(&self) -> &[ProcessorStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Runs every step in order and returns the resulting set.
    pub fn run(&self, input: &SeriesSet) -> Result<SeriesSet> {
        let mut current = input.clone();
        for (ordinal, step) in self.steps.iter().enumerate() {
            current = run_step(ordinal, step, &current)?;
        }
        Ok(current)
    }

    /// Series the pipeline reads that no earlier step declares as output.
    pub fn required_inputs(&self) -> Result<BTreeSet<String>> {
        let mut produced: BTreeSet<String> = BTreeSet::new();
        let mut required = BTreeSet::new();
        for (ordinal, step) in self.steps.iter().enumerate() {
            let mut outputs = Vec::new();
            for entry in &step.selector {
                for name in entry.names() {
                    if !produced.contains(name) {
                        required.insert(name.clone());
                    }
                }
                let declared = step
                    .outputs
                    .resolve(entry)
                    .ok_or(Error::DynamicStepUnresolvable { step: ordinal })?;
                outputs.extend(declared);
            }
            produced.extend(outputs);
        }
        Ok(required)
    }
}

fn run_step(ordinal: usize, step: &ProcessorStep, current: &SeriesSet) -> Result<SeriesSet> {
    let failure = |message: String| Error::StepFailure {
        step: ordinal,
        func: step.name.clone(),
        message,
    };
    let mut produced: Vec<Series> = Vec::new();
    for entry in &step.selector {
        let views: Vec<SeriesView<'_>> = entry
            .names()
            .iter()
            .map(|name| {
                current.get(name).map(Series::view).ok_or_else(|| Error::UnknownSeries {
                    name: name.clone(),
                    step: Some(ordinal),
                })
            })
            .collect::<Result<_>>()?;
        let outputs = step.func.call(&views, &step.params).map_err(failure)?;
        let single_name = match entry {
            Selector::Single(n) if outputs.len() == 1 => Some(n),
            _ => None,
        };
        let mut names = Vec::with_capacity(outputs.len());
        for out in outputs {
            let name = match (out.name, single_name) {
                (Some(n), _) => n,
                (None, Some(n)) => n.clone(),
                (None, None) => {
                    return Err(failure(
                        "outputs must be named unless one output comes from one input".to_string(),
                    ))
                }
            };
            if produced.iter().any(|s| s.name() == name) {
                return Err(Error::DuplicateOutput { step: ordinal, name });
            }
            produced.push(Series::new(name.clone(), out.index, out.values)?);
            names.push(name);
        }
        if let Some(declared) = step.outputs.resolve(entry) {
            let got: BTreeSet<&String> = names.iter().collect();
            let want: BTreeSet<&String> = declared.iter().collect();
            if got != want {
                return Err(failure(format!(
                    "produced {names:?} but declares {declared:?}"
                )));
            }
        }
    }
    let mut next = current.clone();
    for series in produced {
        next.upsert(series);
    }
    Ok(next)
}
