//! Feature column names: `<series joined by "|">__<output>__w=<W>_s=<S>`.

use crate::error::{Error, Result};
use crate::index::Delta;
use crate::series::validate_name;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedName {
    pub series: Vec<String>,
    pub output: String,
    pub window: Delta,
    pub stride: Delta,
}

pub fn format_output_name<S: AsRef<str>>(
    series: &[S],
    output: &str,
    window: Delta,
    stride: Delta,
) -> Result<String> {
    if series.is_empty() {
        return Err(Error::EmptyAxis("series"));
    }
    for s in series {
        validate_name(s.as_ref())?;
    }
    validate_name(output)?;
    let joined: Vec<&str> = series.iter().map(AsRef::as_ref).collect();
    Ok(format!("{}__{output}__w={window}_s={stride}", joined.join("|")))
}

/// Inverse of [`format_output_name`]. Only canonical spellings are
/// accepted: `w=30000ms` is rejected because it would be written `w=30s`.
pub fn parse_output_name(name: &str) -> Result<ParsedName> {
    let malformed = || Error::MalformedName(name.to_string());
    let parts: Vec<&str> = name.split("__").collect();
    let [series, output, grid] = parts[..] else {
        return Err(malformed());
    };
    let (w, s) = grid
        .strip_prefix("w=")
        .and_then(|g| g.split_once("_s="))
        .ok_or_else(malformed)?;
    let window: Delta = w.parse().map_err(|_| malformed())?;
    let stride: Delta = s.parse().map_err(|_| malformed())?;
    if window.kind() != stride.kind() || !window.is_positive() || !stride.is_positive() {
        return Err(malformed());
    }
    let series: Vec<String> = series.split('|').map(str::to_string).collect();
    let canonical = format_output_name(&series, output, window, stride).map_err(|_| malformed())?;
    if canonical != name {
        return Err(malformed());
    }
    Ok(ParsedName {
        series,
        output: output.to_string(),
        window,
        stride,
    })
}
