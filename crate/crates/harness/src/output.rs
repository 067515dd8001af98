//! Run-level CSV and per-run trace CSV files.
//!
//! `runs.csv` columns: `solver,problem,T,seed,subopt,viol_1..viol_m,
//! bound_subopt,bound_viol,wall_ms`. Missing values (unknown optimum, failed
//! run, baselines without a bound) are empty fields.

use std::io::{Read, Write};

use stomo_core::RunTrace;

use crate::error::{Error, Result};
use crate::run::RunResult;

/// One parsed row of `runs.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub solver: String,
    pub problem: String,
    pub horizon: u64,
    pub seed: u64,
    pub subopt: Option<f64>,
    pub violations: Vec<Option<f64>>,
    pub bound_subopt: Option<f64>,
    pub bound_viol: Option<f64>,
    pub wall_ms: f64,
}

pub fn run_header(m: usize) -> Vec<String> {
    let mut h: Vec<String> =
        ["solver", "problem", "T", "seed", "subopt"].iter().map(|s| s.to_string()).collect();
    h.extend((1..=m).map(|i| format!("viol_{i}")));
    h.extend(["bound_subopt", "bound_viol", "wall_ms"].iter().map(|s| s.to_string()));
    h
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl RunRow {
    pub fn from_result(r: &RunResult, m: usize, record_wall_time: bool) -> Self {
        RunRow {
            solver: r.solver.clone(),
            problem: r.problem.clone(),
            horizon: r.horizon,
            seed: r.seed,
            subopt: r.subopt,
            violations: (0..m).map(|i| r.violations.get(i).copied()).collect(),
            bound_subopt: r.bound_subopt,
            bound_viol: r.bound_viol,
            wall_ms: if record_wall_time { r.wall_ms } else { 0.0 },
        }
    }

    fn record(&self) -> Vec<String> {
        let mut rec = vec![
            self.solver.clone(),
            self.problem.clone(),
            self.horizon.to_string(),
            self.seed.to_string(),
            fmt_opt(self.subopt),
        ];
        rec.extend(self.violations.iter().map(|v| fmt_opt(*v)));
        rec.push(fmt_opt(self.bound_subopt));
        rec.push(fmt_opt(self.bound_viol));
        rec.push(self.wall_ms.to_string());
        rec
    }
}

pub fn write_runs<W: Write>(writer: W, rows: &[RunRow], m: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(run_header(m))?;
    for row in rows {
        if row.violations.len() != m {
            return Err(Error::Config(format!(
                "row has {} violation columns, header has {m}",
                row.violations.len()
            )));
        }
        w.write_record(row.record())?;
    }
    w.flush().map_err(|e| Error::io("runs.csv", e))?;
    Ok(())
}

pub fn read_runs<R: Read>(reader: R) -> Result<Vec<RunRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers()?.clone();
    let m = header.len().checked_sub(8).ok_or_else(|| bad_header("too few columns"))?;
    let expected = run_header(m);
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(bad_header("unexpected column names"));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let num = |i: usize| -> Result<Option<f64>> {
            let s = &rec[i];
            if s.is_empty() {
                return Ok(None);
            }
            s.parse().map(Some).map_err(|e| data_err(line, format!("column {}: {e}", expected[i])))
        };
        let int = |i: usize| -> Result<u64> {
            rec[i].parse().map_err(|e| data_err(line, format!("column {}: {e}", expected[i])))
        };
        rows.push(RunRow {
            solver: rec[0].to_string(),
            problem: rec[1].to_string(),
            horizon: int(2)?,
            seed: int(3)?,
            subopt: num(4)?,
            violations: (0..m).map(|i| num(5 + i)).collect::<Result<_>>()?,
            bound_subopt: num(5 + m)?,
            bound_viol: num(6 + m)?,
            wall_ms: num(7 + m)?.ok_or_else(|| data_err(line, "wall_ms is empty".into()))?,
        });
    }
    Ok(rows)
}

fn bad_header(msg: &str) -> Error {
    data_err(1, format!("not a runs file: {msg}"))
}

fn data_err(line: usize, message: String) -> Error {
    Error::Data { path: "runs.csv".into(), line, message }
}

/// Writes the thinned iterate log: `t, w_1..w_d, lambda_1..lambda_m,
/// loss_0..loss_m`.
pub fn write_trace<W: Write>(writer: W, trace: &RunTrace) -> Result<()> {
    let d = trace.averaged.dim();
    let m = trace.thresholds.len();
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|i| format!("w_{i}")));
    header.extend((1..=trace.final_dual.len()).map(|i| format!("lambda_{i}")));
    header.extend((0..=m).map(|i| format!("loss_{i}")));
    w.write_record(&header)?;
    for r in &trace.iterate_log {
        let mut rec = vec![r.t.to_string()];
        rec.extend(r.w.iter().chain(&r.lambda).chain(&r.losses).map(|v| v.to_string()));
        w.write_record(rec)?;
    }
    w.flush().map_err(|e| Error::io("trace", e))?;
    Ok(())
}
