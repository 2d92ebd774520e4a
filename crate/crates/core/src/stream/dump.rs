//! CSV dump and restore of a stream.
//!
//! Header `g,t,y,x1,...,x<dim>`, then one record per sample with 1-based
//! interval `g` and position `t`, label `1` or `-1`, and features written
//! with 17 significant digits so they parse back bit-exactly.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::hypothesis::{Label, Sample};
use crate::stream::IntervalBuffer;

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_stream_csv(intervals: &[IntervalBuffer]) -> String {
    let dim = intervals
        .iter()
        .find_map(|iv| iv.samples.first())
        .map_or(0, Sample::dim);
    let mut out = String::from("g,t,y");
    for j in 1..=dim {
        let _ = write!(out, ",x{j}");
    }
    out.push('\n');
    for iv in intervals {
        for (t, s) in iv.samples.iter().enumerate() {
            let y = match s.y {
                Label::Pos => "1",
                Label::Neg => "-1",
            };
            let _ = write!(out, "{},{},{}", iv.interval_index, t + 1, y);
            for v in &s.x {
                out.push(',');
                out.push_str(&fmt_f64(*v));
            }
            out.push('\n');
        }
    }
    out
}

pub fn read_stream_csv(text: &str) -> Result<Vec<IntervalBuffer>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 3 || cols[..3] != ["g", "t", "y"] {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected header {header:?}"),
        });
    }
    let dim = cols.len() - 3;
    let mut intervals: Vec<IntervalBuffer> = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let err = |message: String| Error::Parse { line: lineno, message };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 3 {
            return Err(err(format!("expected {} fields, got {}", dim + 3, fields.len())));
        }
        let g: usize = fields[0].parse().map_err(|_| err(format!("bad interval {:?}", fields[0])))?;
        let t: usize = fields[1].parse().map_err(|_| err(format!("bad position {:?}", fields[1])))?;
        let y = match fields[2] {
            "1" | "+1" => Label::Pos,
            "-1" => Label::Neg,
            other => return Err(err(format!("bad label {other:?}"))),
        };
        let x = fields[3..]
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| err(format!("bad value {f:?}"))))
            .collect::<Result<Vec<f64>>>()?;
        if intervals.last().map(|iv| iv.interval_index) != Some(g) {
            intervals.push(IntervalBuffer {
                interval_index: g,
                samples: Vec::new(),
            });
        }
        let iv = intervals.last_mut().expect("just pushed");
        if t != iv.samples.len() + 1 {
            return Err(err(format!("position {t} out of sequence in interval {g}")));
        }
        iv.samples.push(Sample::new(x, y));
    }
    Ok(intervals)
}
