//! Evaluation and timing reports (JSON plus a flat `method,metric,value`
//! CSV), retrieval records as JSON lines, and the training log CSV.

use std::io::{BufRead, Write};
use std::path::Path;

use dsi3d_core::eval::{EvalReport, RetrievalRecord, TimingReport};
use dsi3d_core::gendec::EpochLog;

use super::{create, finish, open};
use crate::error::{Error, Result};

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_rows(path: &Path, rows: &[(String, String, String)]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "method,metric,value").map_err(io)?;
    for (m, k, v) in rows {
        writeln!(w, "{m},{k},{v}").map_err(io)?;
    }
    finish(path, w)
}

pub fn eval_rows(report: &EvalReport) -> Vec<(String, String, String)> {
    let c = &report.confusion;
    [
        ("queries", report.queries.to_string()),
        ("eligible_queries", report.eligible_queries.to_string()),
        ("hits_at_1", opt(report.hits_at_1)),
        ("hits_at_5", opt(report.hits_at_5)),
        ("f1_max", report.f1_max.to_string()),
        ("best_threshold", report.best_threshold.to_string()),
        ("tp", c.tp.to_string()),
        ("fp", c.fp.to_string()),
        ("tn", c.tn.to_string()),
        ("fn", c.fn_.to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (report.method.clone(), k.to_string(), v))
    .collect()
}

pub fn write_eval_csv(path: &Path, reports: &[EvalReport]) -> Result<()> {
    write_rows(path, &reports.iter().flat_map(eval_rows).collect::<Vec<_>>())
}

pub fn timing_rows(report: &TimingReport) -> Vec<(String, String, String)> {
    let mut rows = Vec::new();
    for m in &report.methods {
        let name = &m.method;
        for s in &m.sizes {
            let n = s.n_ref;
            rows.push((name.clone(), format!("mean_seconds@{n}"), s.mean_seconds.to_string()));
            rows.push((name.clone(), format!("std_seconds@{n}"), s.std_seconds.to_string()));
            rows.push((name.clone(), format!("median_seconds@{n}"), s.median_seconds.to_string()));
        }
        if let Some(f) = &m.linear {
            rows.push((name.clone(), "slope".into(), f.slope.to_string()));
            rows.push((name.clone(), "intercept".into(), f.intercept.to_string()));
            rows.push((name.clone(), "r_squared".into(), f.r_squared.to_string()));
        }
        if let Some(c) = m.constant {
            rows.push((name.clone(), "constant_seconds".into(), c.to_string()));
        }
    }
    for (name, n) in &report.crossovers {
        rows.push((name.clone(), "crossover_n".into(), opt(*n)));
    }
    rows
}

pub fn write_timing_csv(path: &Path, report: &TimingReport) -> Result<()> {
    write_rows(path, &timing_rows(report))
}

pub fn write_records(path: &Path, records: &[RetrievalRecord]) -> Result<()> {
    let mut w = create(path)?;
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|source| Error::Json {
            path: path.into(),
            source,
        })?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    finish(path, w)
}

pub fn read_records(path: &Path) -> Result<Vec<RetrievalRecord>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.into(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn write_train_log(path: &Path, log: &[EpochLog]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "epoch,train_loss,val_hits_at_1").map_err(io)?;
    for e in log {
        writeln!(w, "{},{},{}", e.epoch, e.train_loss, opt(e.val_hits_at_1)).map_err(io)?;
    }
    finish(path, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use dsi3d_core::eval::ScoreKind;

    #[test]
    fn records_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let recs = vec![
            RetrievalRecord {
                query_index: 3,
                candidates: vec![(1, -0.25), (7, -3.5)],
                score_kind: ScoreKind::LogProb,
            },
            RetrievalRecord {
                query_index: 9,
                candidates: vec![],
                score_kind: ScoreKind::LogProb,
            },
        ];
        write_records(&path, &recs).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 2);
        assert_eq!(read_records(&path).unwrap(), recs);
    }
}
