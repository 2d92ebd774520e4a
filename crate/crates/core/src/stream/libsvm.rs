//! LIBSVM sparse text format.
//!
//! One sample per line: `<label> <index>:<value> ...`, whitespace
//! separated, indices 1-based and strictly increasing. Positive labels map
//! to `+1`, zero and negative labels to `-1`. Blank lines are skipped.
//! Vectors are densified to the declared dimension, or to the largest index
//! seen in the file when no dimension is given.

use crate::error::{Error, Result};
use crate::hypothesis::{Label, Sample};

struct ParsedLine {
    label: Label,
    features: Vec<(usize, f64)>,
}

fn parse_line(line: &str, lineno: usize) -> Result<Option<ParsedLine>> {
    let err = |message: String| Error::Parse { line: lineno, message };
    let mut tokens = line.split_whitespace();
    let Some(label_tok) = tokens.next() else {
        return Ok(None);
    };
    let label: f64 = label_tok
        .parse()
        .map_err(|_| err(format!("invalid label {label_tok:?}")))?;
    if !label.is_finite() {
        return Err(err(format!("invalid label {label_tok:?}")));
    }
    let mut features = Vec::new();
    let mut last = 0usize;
    for tok in tokens {
        let (idx, val) = tok
            .split_once(':')
            .ok_or_else(|| err(format!("expected <index>:<value>, got {tok:?}")))?;
        let idx: usize = idx
            .parse()
            .map_err(|_| err(format!("invalid feature index {idx:?}")))?;
        if idx == 0 {
            return Err(err("feature indices are 1-based".into()));
        }
        if idx == last {
            return Err(err(format!("duplicate feature index {idx}")));
        }
        if idx < last {
            return Err(err(format!("feature index {idx} follows {last}; indices must increase")));
        }
        let val: f64 = val
            .parse()
            .map_err(|_| err(format!("non-numeric value {val:?} for feature {idx}")))?;
        if !val.is_finite() {
            return Err(err(format!("non-finite value for feature {idx}")));
        }
        features.push((idx, val));
        last = idx;
    }
    Ok(Some(ParsedLine {
        label: Label::from_value(label),
        features,
    }))
}

/// Parses LIBSVM text into dense samples. Errors name the 1-based line.
pub fn parse_libsvm(text: &str, dim: Option<usize>) -> Result<Vec<Sample>> {
    let mut parsed = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(p) = parse_line(line, i + 1)? {
            parsed.push((i + 1, p));
        }
    }
    let max_index = parsed
        .iter()
        .filter_map(|(_, p)| p.features.last().map(|f| f.0))
        .max()
        .unwrap_or(0);
    let dim = match dim {
        Some(0) => return Err(Error::invalid("dimension must be at least 1")),
        Some(d) => {
            if let Some((lineno, p)) = parsed.iter().find(|(_, p)| p.features.last().is_some_and(|f| f.0 > d)) {
                let idx = p.features.last().map(|f| f.0).unwrap_or_default();
                return Err(Error::Parse {
                    line: *lineno,
                    message: format!("feature index {idx} exceeds dimension {d}"),
                });
            }
            d
        }
        None if max_index == 0 && !parsed.is_empty() => {
            return Err(Error::invalid("cannot infer a dimension from a file without features"))
        }
        None => max_index,
    };
    Ok(parsed
        .into_iter()
        .map(|(_, p)| {
            let mut x = vec![0.0; dim];
            for (idx, v) in p.features {
                x[idx - 1] = v;
            }
            Sample::new(x, p.label)
        })
        .collect())
}
