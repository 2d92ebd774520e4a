//! Report files: `steps.csv`, `summary.json` and `bounds.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::bounds::{self, BoundInputs};
use crate::error::{Error, Result};
use crate::harness::experiment::{Aggregate, IntervalBounds, OfflineSummary, RunReport, StepRow};
use crate::harness::{ExperimentConfig, IntervalSummary};
use crate::stream::dump::fmt_f64;

const FIXED_COLUMNS: [&str; 7] = ["seed", "g", "t", "loss_co2", "loss_ogd", "regret_co2", "regret_ogd"];

/// Renders step rows with `alpha_width` weight columns; rows with fewer
/// experts leave the trailing cells empty.
pub fn write_steps_csv(rows: &[StepRow], alpha_width: usize) -> String {
    let mut out = FIXED_COLUMNS.join(",");
    for k in 1..=alpha_width {
        let _ = write!(out, ",alpha_{k}");
    }
    out.push('\n');
    for r in rows {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{}",
            r.seed,
            r.g,
            r.t,
            fmt_f64(r.loss_co2),
            fmt_f64(r.loss_ogd),
            fmt_f64(r.regret_co2),
            fmt_f64(r.regret_ogd)
        );
        for k in 0..alpha_width {
            out.push(',');
            if let Some(a) = r.alpha.get(k) {
                out.push_str(&fmt_f64(*a));
            }
        }
        out.push('\n');
    }
    out
}

fn parse_field<T: std::str::FromStr>(cell: &str, line: usize, name: &str) -> Result<T> {
    cell.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad {name} value {cell:?}"),
    })
}

pub fn read_steps_csv(text: &str) -> Result<Vec<StepRow>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < FIXED_COLUMNS.len() || cols[..FIXED_COLUMNS.len()] != FIXED_COLUMNS {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected header {header:?}"),
        });
    }
    let width = cols.len();
    let mut rows = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != width {
            return Err(Error::Parse {
                line: n,
                message: format!("expected {width} fields, found {}", cells.len()),
            });
        }
        let mut alpha = Vec::new();
        let mut ended = false;
        for cell in &cells[FIXED_COLUMNS.len()..] {
            if cell.is_empty() {
                ended = true;
            } else if ended {
                return Err(Error::Parse {
                    line: n,
                    message: "weight column after an empty one".into(),
                });
            } else {
                alpha.push(parse_field(cell, n, "alpha")?);
            }
        }
        rows.push(StepRow {
            seed: parse_field(cells[0], n, "seed")?,
            g: parse_field(cells[1], n, "g")?,
            t: parse_field(cells[2], n, "t")?,
            loss_co2: parse_field(cells[3], n, "loss_co2")?,
            loss_ogd: parse_field(cells[4], n, "loss_ogd")?,
            regret_co2: parse_field(cells[5], n, "regret_co2")?,
            regret_ogd: parse_field(cells[6], n, "regret_ogd")?,
            alpha,
        });
    }
    Ok(rows)
}

#[derive(Serialize)]
struct SeedSummary<'a> {
    seed: u64,
    intervals: &'a [IntervalSummary],
    offline: &'a [OfflineSummary],
}

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a ExperimentConfig,
    aggregate: &'a Aggregate,
    runs: Vec<SeedSummary<'a>>,
}

#[derive(Serialize)]
struct IntervalBoundsRow {
    g: usize,
    k: usize,
    t: usize,
    #[serde(flatten)]
    bounds: IntervalBounds,
    regret_co2: f64,
    regret_meta_weighted: f64,
    regret_oe: f64,
    regret_ke: f64,
    k_condition: f64,
}

fn summary_json(report: &RunReport) -> Result<String> {
    let summary = Summary {
        config: &report.config,
        aggregate: &report.aggregate,
        runs: report
            .runs
            .iter()
            .map(|r| SeedSummary {
                seed: r.seed,
                intervals: &r.intervals,
                offline: &r.offline,
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&summary)?)
}

fn bounds_json(report: &RunReport) -> Result<String> {
    let runs: Vec<Value> = report
        .runs
        .iter()
        .map(|r| {
            let intervals: Vec<IntervalBoundsRow> = r
                .intervals
                .iter()
                .map(|s| IntervalBoundsRow {
                    g: s.g,
                    k: s.k,
                    t: s.t,
                    bounds: s.bounds,
                    regret_co2: s.regret_co2,
                    regret_meta_weighted: s.regret_meta_weighted,
                    regret_oe: s.regret_oe,
                    regret_ke: s.regret_ke,
                    k_condition: s.k_condition,
                })
                .collect();
            json!({
                "seed": r.seed,
                "intervals": intervals,
                "excess_risk": r.excess_risk,
            })
        })
        .collect();
    Ok(serde_json::to_string_pretty(&json!({ "runs": runs }))?)
}

fn write_file(path: PathBuf, contents: &str) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes the three report files into `dir`, creating it if needed, and
/// returns their paths.
pub fn emit_reports(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    if report.runs.is_empty() {
        return Err(Error::invalid("report holds no runs"));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let rows: Vec<StepRow> = report.runs.iter().flat_map(|r| r.steps.iter().cloned()).collect();
    Ok(vec![
        write_file(dir.join("steps.csv"), &write_steps_csv(&rows, report.config.k_max))?,
        write_file(dir.join("summary.json"), &summary_json(report)?)?,
        write_file(dir.join("bounds.json"), &bounds_json(report)?)?,
    ])
}

/// Every calculator evaluated on `inputs`, each entry echoing the inputs it
/// used.
pub fn bounds_report(inputs: &BoundInputs) -> Result<Value> {
    let BoundInputs {
        t, k, d, r, beta, gamma, regret_ke, omega_star, weighted_loss, ..
    } = *inputs;
    let co2 = bounds::co2_regret_bounds(t, k, d, beta, regret_ke);
    let excess = bounds::excess_risk_terms(inputs)?;
    Ok(json!({
        "meta_regret_bound": { "value": bounds::meta_regret_bound(t, k), "inputs": { "t": t, "k": k } },
        "ogd_regret_bound": { "value": bounds::ogd_regret_bound(t, d, beta), "inputs": { "t": t, "d": d, "beta": beta } },
        "co2_regret_bounds": {
            "value": { "general": co2.general, "worst": co2.worst },
            "inputs": { "t": t, "k": k, "d": d, "beta": beta, "regret_ke": regret_ke },
        },
        "k_condition": {
            "value": bounds::k_condition(t, d, beta, regret_ke),
            "inputs": { "t": t, "d": d, "beta": beta, "regret_ke": regret_ke },
        },
        "gap_bound": {
            "value": bounds::gap_bound_thm2(omega_star, beta, gamma, weighted_loss)?,
            "inputs": { "omega_star": omega_star, "beta": beta, "gamma": gamma, "weighted_loss": weighted_loss },
        },
        "rademacher_bound": {
            "value": bounds::rademacher_bound(t, d, r, &inputs.eigenvalues)?,
            "inputs": { "t": t, "d": d, "r": r, "eigenvalues": inputs.eigenvalues },
        },
        "excess_risk_bound": {
            "value": excess.total(),
            "terms": excess,
            "inputs": inputs,
        },
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::run_experiment;
    use crate::stream::StreamSpec;
    use proptest::prelude::*;

    fn row(alpha: Vec<f64>) -> StepRow {
        StepRow {
            seed: 3,
            g: 2,
            t: 7,
            loss_co2: 0.1 + 0.2,
            loss_ogd: 1.0 / 3.0,
            regret_co2: -2.5e-17,
            regret_ogd: 12.75,
            alpha,
        }
    }

    #[test]
    fn csv_pads_missing_experts() {
        let rows = vec![row(vec![1.0]), row(vec![0.25, 0.75])];
        let text = write_steps_csv(&rows, 3);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "seed,g,t,loss_co2,loss_ogd,regret_co2,regret_ogd,alpha_1,alpha_2,alpha_3");
        assert!(lines[1].ends_with(",,"));
        assert_eq!(read_steps_csv(&text).unwrap(), rows);
    }

    #[test]
    fn csv_rejects_malformed() {
        assert!(read_steps_csv("").is_err());
        assert!(read_steps_csv("a,b\n").is_err());
        let good = write_steps_csv(&[row(vec![0.5, 0.5])], 2);
        let bad = good.replace("12.75", "x").replace("1.2750000000000000e1", "x");
        assert!(matches!(read_steps_csv(&bad), Err(Error::Parse { line: 2, .. })));
        let short = format!("{}1,2\n", good);
        assert!(matches!(read_steps_csv(&short), Err(Error::Parse { line: 3, .. })));
        let header = "seed,g,t,loss_co2,loss_ogd,regret_co2,regret_ogd,alpha_1,alpha_2,alpha_3\n";
        assert!(read_steps_csv(&format!("{header}1,1,1,0,0,0,0,0.5,,0.5\n")).is_err());
        assert_eq!(read_steps_csv(&format!("{header}1,1,1,0,0,0,0,0.5,0.5,\n")).unwrap()[0].alpha, vec![0.5, 0.5]);
    }

    #[test]
    fn empty_report_is_rejected() {
        let cfg = ExperimentConfig::synthetic(StreamSpec::synthetic(2, 10, 2, 0), vec![1]);
        let mut report = run_experiment(&cfg, None).unwrap();
        report.runs.clear();
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_reports(&report, dir.path()).is_err());
    }

    #[test]
    fn emitted_files_round_trip() {
        let mut cfg = ExperimentConfig::synthetic(StreamSpec::synthetic(3, 25, 2, 0), vec![4]);
        cfg.k_max = 3;
        let report = run_experiment(&cfg, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let paths = emit_reports(&report, dir.path()).unwrap();
        assert_eq!(paths.len(), 3);
        let rows = read_steps_csv(&fs::read_to_string(&paths[0]).unwrap()).unwrap();
        assert_eq!(rows.len(), 3 * 25);
        assert_eq!(rows, report.runs[0].steps);
        let summary: Value = serde_json::from_str(&fs::read_to_string(&paths[1]).unwrap()).unwrap();
        assert_eq!(summary["runs"][0]["intervals"].as_array().unwrap().len(), 3);
        let b: Value = serde_json::from_str(&fs::read_to_string(&paths[2]).unwrap()).unwrap();
        assert!(b["runs"][0]["excess_risk"]["total"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn bounds_report_lists_every_calculator() {
        let inputs = BoundInputs {
            t: 100,
            k: 2,
            b: 100,
            d: 1.0,
            r: 1.0,
            beta: 1.0,
            gamma: 1.0,
            delta: 0.05,
            regret_ke: 60.0,
            omega_star: 0.0,
            weighted_loss: 0.0,
            eigenvalues: vec![1.0, 0.0],
        };
        let v = bounds_report(&inputs).unwrap();
        assert!((v["co2_regret_bounds"]["value"]["worst"].as_f64().unwrap() - 68.32554).abs() < 1e-4);
        assert!((v["gap_bound"]["value"].as_f64().unwrap() - 5.65685).abs() < 1e-4);
        assert_eq!(v["k_condition"]["inputs"]["regret_ke"], 60.0);
        let bad = BoundInputs { delta: 1.5, ..inputs };
        assert!(bounds_report(&bad).is_err());
    }

    proptest! {
        #[test]
        fn csv_floats_are_lossless(
            vals in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::ZERO | prop::num::f64::SUBNORMAL, 6),
        ) {
            let r = StepRow {
                seed: 1,
                g: 1,
                t: 1,
                loss_co2: vals[0],
                loss_ogd: vals[1],
                regret_co2: vals[2],
                regret_ogd: vals[3],
                alpha: vec![vals[4], vals[5]],
            };
            let back = read_steps_csv(&write_steps_csv(std::slice::from_ref(&r), 2)).unwrap();
            prop_assert_eq!(back.len(), 1);
            prop_assert_eq!(back[0].loss_co2.to_bits(), r.loss_co2.to_bits());
            prop_assert_eq!(back[0].regret_co2.to_bits(), r.regret_co2.to_bits());
            prop_assert_eq!(back[0].alpha[1].to_bits(), r.alpha[1].to_bits());
        }
    }
}
