//! Keyword parameters bound to feature and processing functions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::Delta;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

impl From<f64> for ParamValue {
    fn from(x: f64) -> Self {
        ParamValue::Float(x)
    }
}

impl From<i64> for ParamValue {
    fn from(x: i64) -> Self {
        ParamValue::Int(x)
    }
}

impl From<bool> for ParamValue {
    fn from(x: bool) -> Self {
        ParamValue::Bool(x)
    }
}

impl From<&str> for ParamValue {
    fn from(x: &str) -> Self {
        ParamValue::Str(x.to_string())
    }
}

pub type Params = BTreeMap<String, ParamValue>;

/// Builds a [`Params`] map: `params! { "q" => 0.25 }`.
#[macro_export]
macro_rules! params {
    () => { $crate::params::Params::new() };
    ($($key:expr => $value:expr),+ $(,)?) => {{
        let mut p = $crate::params::Params::new();
        $( p.insert($key.to_string(), $crate::params::ParamValue::from($value)); )+
        p
    }};
}

/// Typed access to a parameter map with errors naming the function.
pub(crate) struct ParamReader<'a> {
    func: &'a str,
    params: &'a Params,
}

impl<'a> ParamReader<'a> {
    pub fn new(func: &'a str, params: &'a Params) -> Self {
        ParamReader { func, params }
    }

    fn bad(&self, param: &str, reason: impl Into<String>) -> Error {
        Error::BadParam {
            func: self.func.to_string(),
            param: param.to_string(),
            reason: reason.into(),
        }
    }

    pub fn allow_only(&self, keys: &[&str]) -> Result<()> {
        match self.params.keys().find(|k| !keys.contains(&k.as_str())) {
            Some(k) => Err(self.bad(k, "unexpected parameter")),
            None => Ok(()),
        }
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        match self.params.get(key) {
            None => Ok(None),
            Some(ParamValue::Float(x)) => Ok(Some(*x)),
            Some(ParamValue::Int(i)) => Ok(Some(*i as f64)),
            Some(_) => Err(self.bad(key, "expected a number")),
        }
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>> {
        match self.params.get(key) {
            None => Ok(None),
            Some(ParamValue::Int(i)) if *i >= 0 => Ok(Some(*i as usize)),
            Some(_) => Err(self.bad(key, "expected a non-negative integer")),
        }
    }

    pub fn str(&self, key: &str) -> Result<Option<&'a str>> {
        match self.params.get(key) {
            None => Ok(None),
            Some(ParamValue::Str(s)) => Ok(Some(s.as_str())),
            Some(_) => Err(self.bad(key, "expected a string")),
        }
    }

    pub fn delta(&self, key: &str) -> Result<Option<Delta>> {
        match self.params.get(key) {
            None => Ok(None),
            Some(ParamValue::Str(s)) => s.parse().map(Some).map_err(|_| self.bad(key, "bad delta")),
            Some(ParamValue::Float(x)) => Ok(Some(Delta::Numeric(*x))),
            Some(ParamValue::Int(i)) => Ok(Some(Delta::Numeric(*i as f64))),
            Some(_) => Err(self.bad(key, "expected a delta such as \"250ms\" or 0.5")),
        }
    }

    pub fn require<T>(&self, key: &str, value: Result<Option<T>>) -> Result<T> {
        value?.ok_or_else(|| self.bad(key, "missing"))
    }
}
