use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::params::Params;
use crate::series::{validate_name, SeriesView};
use crate::values::{Scalar, ValueTag};

/// A feature function: one call per window, one scalar per declared output.
///
/// Implementations must be deterministic; parallel extraction relies on it.
pub trait FeatureFn: Send + Sync {
    fn call(&self, inputs: &[SeriesView<'_>], params: &Params) -> Result<Vec<Scalar>, String>;
}

impl<F> FeatureFn for F
where
    F: Fn(&[SeriesView<'_>], &Params) -> Result<Vec<Scalar>, String> + Send + Sync,
{
    fn call(&self, inputs: &[SeriesView<'_>], params: &Params) -> Result<Vec<Scalar>, String> {
        self(inputs, params)
    }
}

/// What the function reads from its windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputMode {
    ValuesOnly,
    ValuesAndIndex,
}

/// Output column type: fixed, or inherited from the first input series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputType {
    Fixed(ValueTag),
    Inherit,
}

impl OutputType {
    pub fn resolve(self, input: ValueTag) -> ValueTag {
        match self {
            OutputType::Fixed(tag) => tag,
            OutputType::Inherit => input,
        }
    }
}

/// Short-window handling installed by [`make_robust`].
#[derive(Debug, Clone)]
pub struct Robust {
    pub min_samples: usize,
    pub fill: Scalar,
}

impl PartialEq for Robust {
    fn eq(&self, other: &Self) -> bool {
        self.min_samples == other.min_samples && self.fill.bitwise_eq(&other.fill)
    }
}

/// A feature function plus its naming, parameters and output typing.
#[derive(Clone)]
pub struct FuncWrapper {
    func: Arc<dyn FeatureFn>,
    base_name: String,
    output_names: Vec<String>,
    output_types: Vec<OutputType>,
    input_mode: InputMode,
    params: Params,
    robust: Option<Robust>,
    builtin: bool,
}

impl fmt::Debug for FuncWrapper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FuncWrapper")
            .field("base_name", &self.base_name)
            .field("output_names", &self.output_names)
            .field("output_types", &self.output_types)
            .field("input_mode", &self.input_mode)
            .field("params", &self.params)
            .field("robust", &self.robust)
            .finish()
    }
}

impl FuncWrapper {
    /// Single float output named after the function.
    pub fn new(base_name: impl Into<String>, func: impl FeatureFn + 'static) -> Result<Self> {
        let base_name = base_name.into();
        validate_name(&base_name)?;
        Ok(FuncWrapper {
            func: Arc::new(func),
            output_names: vec![base_name.clone()],
            base_name,
            output_types: vec![OutputType::Fixed(ValueTag::F64)],
            input_mode: InputMode::ValuesOnly,
            params: Params::new(),
            robust: None,
            builtin: false,
        })
    }

    /// Renames the outputs; every output becomes float-typed.
    pub fn with_outputs<S: Into<String>>(mut self, names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::InvalidDescriptor(format!(
                "function `{}` declares no outputs",
                self.base_name
            )));
        }
        for (i, n) in names.iter().enumerate() {
            validate_name(n)?;
            if names[..i].contains(n) {
                return Err(Error::InvalidDescriptor(format!("output `{n}` listed twice")));
            }
        }
        self.output_types = vec![OutputType::Fixed(ValueTag::F64); names.len()];
        self.output_names = names;
        Ok(self)
    }

    pub fn with_output_types(mut self, types: Vec<OutputType>) -> Result<Self> {
        if types.len() != self.output_names.len() {
            return Err(Error::InvalidDescriptor(format!(
                "function `{}`: {} output types for {} outputs",
                self.base_name,
                types.len(),
                self.output_names.len()
            )));
        }
        self.output_types = types;
        Ok(self)
    }

    pub fn with_input_mode(mut self, mode: InputMode) -> Self {
        self.input_mode = mode;
        self
    }

    pub fn with_params(mut self, params: Params) -> Self {
        self.params = params;
        self
    }

    pub(crate) fn mark_builtin(mut self) -> Self {
        self.builtin = true;
        self
    }

    pub fn base_name(&self) -> &str {
        &self.base_name
    }

    pub fn output_names(&self) -> &[String] {
        &self.output_names
    }

    pub fn output_types(&self) -> &[OutputType] {
        &self.output_types
    }

    pub fn input_mode(&self) -> InputMode {
        self.input_mode
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn robust(&self) -> Option<&Robust> {
        self.robust.as_ref()
    }

    /// Whether this wraps a registered built-in (and so can be written to a
    /// config file by name).
    pub fn is_builtin(&self) -> bool {
        self.builtin
    }

    /// Calls the function on one window per input series.
    pub fn call(&self, inputs: &[SeriesView<'_>]) -> Result<Vec<Scalar>, String> {
        if let Some(robust) = &self.robust {
            if inputs.iter().any(|v| v.len() < robust.min_samples) {
                return Ok(vec![robust.fill.clone(); self.output_names.len()]);
            }
        }
        let out = self.func.call(inputs, &self.params)?;
        if out.len() != self.output_names.len() {
            return Err(format!(
                "returned {} value(s), expected {}",
                out.len(),
                self.output_names.len()
            ));
        }
        Ok(out)
    }

    /// Output tags for the given first-input tag, checking that a robust fill
    /// value fits every resolved output.
    pub fn resolve_output_tags(&self, input: ValueTag) -> Result<Vec<ValueTag>> {
        let tags: Vec<ValueTag> = self.output_types.iter().map(|t| t.resolve(input)).collect();
        if let Some(robust) = &self.robust {
            for (name, tag) in self.output_names.iter().zip(&tags) {
                check_fill(&self.base_name, name, &robust.fill, *tag)?;
            }
        }
        Ok(tags)
    }

    /// Everything except the callable itself; equal signatures denote the
    /// same configured function.
    pub fn signature(&self) -> FuncSignature<'_> {
        FuncSignature {
            base_name: &self.base_name,
            output_names: &self.output_names,
            output_types: &self.output_types,
            params: &self.params,
            robust: self.robust.as_ref(),
            builtin: self.builtin,
        }
    }
}

#[derive(Debug, PartialEq)]
pub struct FuncSignature<'a> {
    base_name: &'a str,
    output_names: &'a [String],
    output_types: &'a [OutputType],
    params: &'a Params,
    robust: Option<&'a Robust>,
    builtin: bool,
}

fn check_fill(func: &str, output: &str, fill: &Scalar, tag: ValueTag) -> Result<()> {
    let ok = match fill {
        Scalar::Null => true,
        Scalar::F64(_) | Scalar::F32(_) => tag.is_float(),
        Scalar::I64(_) => matches!(tag, ValueTag::I64 | ValueTag::F64 | ValueTag::F32),
        Scalar::Bool(_) => tag == ValueTag::Bool,
        Scalar::Categorical(_) => tag == ValueTag::Categorical,
    };
    if ok {
        return Ok(());
    }
    if matches!(fill, Scalar::F64(_) | Scalar::F32(_)) {
        Err(Error::NonFloatOutput {
            func: func.to_string(),
            output: output.to_string(),
        })
    } else {
        Err(Error::BadParam {
            func: func.to_string(),
            param: "fill".to_string(),
            reason: format!("fill value does not fit {tag} output `{output}`"),
        })
    }
}

/// Returns `fill` for every output when any input window holds fewer than
/// `min_samples` samples; otherwise delegates. Fails when the fill cannot
/// be stored in an output (a NaN fill on an integer output, for example).
pub fn make_robust(func: &FuncWrapper, min_samples: usize, fill: Scalar) -> Result<FuncWrapper> {
    for (name, ty) in func.output_names.iter().zip(&func.output_types) {
        // Inherited types are checked once the input series is known.
        if let OutputType::Fixed(tag) = ty {
            check_fill(&func.base_name, name, &fill, *tag)?;
        }
    }
    let mut wrapped = func.clone();
    wrapped.robust = Some(Robust { min_samples, fill });
    Ok(wrapped)
}

/// [`make_robust`] with a NaN fill and a one-sample threshold.
pub fn make_robust_default(func: &FuncWrapper) -> Result<FuncWrapper> {
    make_robust(func, 1, Scalar::F64(f64::NAN))
}
