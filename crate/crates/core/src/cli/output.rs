//! CSV and JSON rendering. Reals use 17 significant digits so values
//! round-trip exactly; non-finite values become `NaN` (CSV) or `null` (JSON).

use std::fmt::Write;

use super::config::{ExperimentConfig, OutputFormat};
use super::Outcome;
use crate::experiments::SlopeFit;

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "NaN".into()
    }
}

fn json_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".into()
    }
}

fn json_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// A table plus scalar metadata, rendered either way.
struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
    meta: Vec<(&'static str, Cell)>,
}

#[derive(Clone)]
enum Cell {
    Real(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Real(v) => num(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> String {
        match self {
            Cell::Real(v) => json_num(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => json_str(s),
        }
    }
}

fn fit_meta(fit: Option<SlopeFit>) -> Vec<(&'static str, Cell)> {
    let (slope, stderr) = fit.map_or((f64::NAN, f64::NAN), |f| (f.slope, f.stderr));
    vec![("slope", Cell::Real(slope)), ("stderr", Cell::Real(stderr))]
}

fn table(cfg: &ExperimentConfig, outcome: &Outcome) -> Table {
    let seed = ("seed", Cell::Int(cfg.seed));
    match outcome {
        Outcome::Simulate(p) => {
            let rows = (0..p.times.len())
                .map(|k| {
                    vec![
                        Cell::Int(k as u64),
                        Cell::Real(p.times[k]),
                        Cell::Real(p.mean[k]),
                        Cell::Real(p.second_moment[k]),
                        Cell::Real(p.fourth_moment[k]),
                    ]
                })
                .collect();
            let diverged = p
                .diverged_at
                .map_or(Cell::Text("none".into()), |(step, _)| Cell::Int(step as u64));
            Table {
                columns: vec!["step", "time", "mean", "second_moment", "fourth_moment"],
                rows,
                meta: vec![
                    ("max_fourth_moment", Cell::Real(p.max_fourth_moment())),
                    ("diverged_step", diverged),
                    seed,
                ],
            }
        }
        Outcome::Convergence(r) => {
            let rows = r
                .rows
                .iter()
                .map(|row| {
                    vec![
                        Cell::Int(row.level as u64),
                        Cell::Int(row.steps as u64),
                        Cell::Real(row.rmse),
                        Cell::Int(row.repetitions as u64),
                    ]
                })
                .collect();
            let mut meta = fit_meta(r.fit);
            meta.push(seed);
            meta.push(("partial", Cell::Bool(r.partial)));
            Table {
                columns: vec!["level", "M", "rmse", "repetitions"],
                rows,
                meta,
            }
        }
        Outcome::Sweep(r) => {
            let rows = r
                .rows
                .iter()
                .map(|row| {
                    vec![
                        Cell::Int(row.level as u64),
                        Cell::Int(row.particles as u64),
                        Cell::Real(row.rmse),
                        Cell::Int(row.repetitions as u64),
                    ]
                })
                .collect();
            let mut meta = fit_meta(r.fit);
            meta.push(seed);
            meta.push(("partial", Cell::Bool(r.partial)));
            Table {
                columns: vec!["level", "N", "rmse", "repetitions"],
                rows,
                meta,
            }
        }
        Outcome::Validate(v) => Table {
            columns: vec![
                "exact_mean",
                "ensemble_mean",
                "coarse_mean",
                "abs_error",
                "standard_error",
                "bias_allowance",
                "pass",
            ],
            rows: vec![vec![
                Cell::Real(v.exact_mean),
                Cell::Real(v.ensemble_mean),
                Cell::Real(v.coarse_mean),
                Cell::Real(v.abs_error),
                Cell::Real(v.standard_error),
                Cell::Real(v.bias_allowance),
                Cell::Bool(v.pass),
            ]],
            meta: vec![seed],
        },
    }
}

/// Renders an outcome in the configured format.
pub fn render(cfg: &ExperimentConfig, outcome: &Outcome) -> String {
    let t = table(cfg, outcome);
    let echo = cfg.echo();
    let mut out = String::new();
    match cfg.format {
        OutputFormat::Csv => {
            out.push_str(&t.columns.join(","));
            out.push('\n');
            for row in &t.rows {
                let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            let meta: Vec<String> = t
                .meta
                .iter()
                .map(|(k, v)| format!("{k}={}", v.csv()))
                .chain(echo.iter().map(|(k, v)| format!("{k}={v}")))
                .collect();
            out.push('#');
            out.push_str(&meta.join(","));
            out.push('\n');
        }
        OutputFormat::Json => {
            let config: Vec<String> = echo
                .iter()
                .map(|(k, v)| format!("{}:{}", json_str(k), json_str(v)))
                .collect();
            let rows: Vec<String> = t
                .rows
                .iter()
                .map(|row| {
                    let fields: Vec<String> = t
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| format!("{}:{}", json_str(c), v.json()))
                        .collect();
                    format!("{{{}}}", fields.join(","))
                })
                .collect();
            let mut fields = vec![
                format!("\"config\":{{{}}}", config.join(",")),
                format!("\"rows\":[{}]", rows.join(",")),
            ];
            fields.extend(t.meta.iter().map(|(k, v)| format!("{}:{}", json_str(k), v.json())));
            let _ = writeln!(out, "{{{}}}", fields.join(","));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::parse_config;
    use crate::experiments::{ConvergenceResult, LadderRow};

    fn cfg(format: &str) -> ExperimentConfig {
        parse_config(["mvsde", "convergence", "--model", "ex1", "--format", format]).unwrap()
    }

    fn result(rows: Vec<LadderRow>) -> Outcome {
        Outcome::Convergence(ConvergenceResult {
            rows,
            fit: None,
            partial: false,
        })
    }

    #[test]
    fn empty_table_is_header_and_metadata() {
        let text = render(&cfg("csv"), &result(vec![]));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "level,M,rmse,repetitions");
        assert!(lines[1].starts_with("#slope=NaN,stderr=NaN,seed=1,"));
        assert!(lines[1].contains("model=ex1"));
    }

    #[test]
    fn json_round_trips_exactly() {
        let rows = vec![
            LadderRow {
                level: 4,
                steps: 16,
                rmse: 0.1 + 0.2,
                repetitions: 3,
                diverged: false,
            },
            LadderRow {
                level: 5,
                steps: 32,
                rmse: std::f64::consts::PI * 1e-7,
                repetitions: 3,
                diverged: false,
            },
        ];
        let text = render(&cfg("json"), &result(rows.clone()));
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for (k, row) in rows.iter().enumerate() {
            assert_eq!(v["rows"][k]["rmse"].as_f64().unwrap().to_bits(), row.rmse.to_bits());
            assert_eq!(v["rows"][k]["M"].as_u64().unwrap(), row.steps as u64);
        }
        assert!(v["slope"].is_null());
        assert_eq!(v["config"]["model"], "ex1");
    }

    #[test]
    fn csv_values_round_trip() {
        let x = 1.0 / 3.0;
        assert_eq!(num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        assert_eq!(num(f64::NAN), "NaN");
        assert_eq!(json_str("a\"b"), "\"a\\\"b\"");
    }
}
