//! Trajectory files: JSON lines `{"t", "x", "diag"}` and CSV with a header
//! row `t,x0,..,x{n-1},<diagnostic keys>`.
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! reproduces every value exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::Trajectory;
use crate::form::PhasePoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Jsonl,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "jsonl" => Ok(Format::Jsonl),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format `{other}` (expected jsonl or csv)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("malformed trajectory file: {0}")]
    Malformed(String),
}

#[derive(Serialize, Deserialize)]
struct Record {
    t: f64,
    x: Vec<f64>,
    diag: BTreeMap<String, f64>,
}

pub fn write_jsonl<W: Write>(traj: &Trajectory, out: W) -> Result<(), ExportError> {
    let mut out = BufWriter::new(out);
    for ((t, x), d) in traj.times.iter().zip(&traj.states).zip(&traj.diagnostics) {
        let rec = Record {
            t: *t,
            x: x.coords().to_vec(),
            diag: d.clone(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_jsonl<R: Read>(input: R) -> Result<Trajectory, ExportError> {
    let mut traj = Trajectory::empty();
    for (lineno, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line)?;
        let x = PhasePoint::new(rec.x).map_err(|e| ExportError::Malformed(format!("line {}: {e}", lineno + 1)))?;
        traj.times.push(rec.t);
        traj.states.push(x);
        traj.diagnostics.push(rec.diag);
    }
    Ok(traj)
}

fn diagnostic_keys(traj: &Trajectory) -> Vec<String> {
    let keys: BTreeSet<&String> = traj.diagnostics.iter().flat_map(|d| d.keys()).collect();
    keys.into_iter().cloned().collect()
}

/// Missing diagnostics are written as empty fields.
pub fn write_csv<W: Write>(traj: &Trajectory, out: W) -> Result<(), ExportError> {
    let dim = traj.states.first().map_or(0, |s| s.dim());
    let keys = diagnostic_keys(traj);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((0..dim).map(|i| format!("x{i}")));
    header.extend(keys.iter().cloned());
    w.write_record(&header)?;
    for ((t, x), d) in traj.times.iter().zip(&traj.states).zip(&traj.diagnostics) {
        let mut row = vec![t.to_string()];
        row.extend(x.coords().iter().map(|v| v.to_string()));
        row.extend(keys.iter().map(|k| d.get(k).map_or(String::new(), |v| v.to_string())));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Trajectory, ExportError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("t") {
        return Err(ExportError::Malformed("first column must be `t`".into()));
    }
    let dim = header[1..].iter().take_while(|h| is_coordinate(h)).count();
    let keys = &header[1 + dim..];
    let mut traj = Trajectory::empty();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |s: &str| -> Result<f64, ExportError> {
            s.parse::<f64>()
                .map_err(|e| ExportError::Malformed(format!("row {}: `{s}`: {e}", row + 1)))
        };
        traj.times.push(parse(&rec[0])?);
        let x = (1..=dim).map(|i| parse(&rec[i])).collect::<Result<Vec<_>, _>>()?;
        traj.states
            .push(PhasePoint::new(x).map_err(|e| ExportError::Malformed(format!("row {}: {e}", row + 1)))?);
        let mut d = BTreeMap::new();
        for (k, field) in keys.iter().zip(rec.iter().skip(1 + dim)) {
            if !field.is_empty() {
                d.insert(k.clone(), parse(field)?);
            }
        }
        traj.diagnostics.push(d);
    }
    Ok(traj)
}

fn is_coordinate(h: &str) -> bool {
    h.strip_prefix('x').is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
}

pub fn write_trajectory(traj: &Trajectory, path: &Path, format: Format) -> Result<(), ExportError> {
    let file = File::create(path)?;
    match format {
        Format::Jsonl => write_jsonl(traj, file),
        Format::Csv => write_csv(traj, file),
    }
}

pub fn read_trajectory(path: &Path, format: Format) -> Result<Trajectory, ExportError> {
    let file = File::open(path)?;
    match format {
        Format::Jsonl => read_jsonl(file),
        Format::Csv => read_csv(file),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trajectory {
        let mut t = Trajectory::empty();
        for k in 0..4 {
            let s = k as f64;
            t.times.push(s * 0.1);
            t.states
                .push(PhasePoint::new(vec![1.0 / 3.0 + s, -2e-17 * s, std::f64::consts::PI, 6.02e23]).unwrap());
            let mut d = BTreeMap::from([("energy".to_string(), 0.5 + 1e-16 * s)]);
            if k > 0 {
                d.insert("drift".into(), 1.0 / 7.0 * s);
            }
            t.diagnostics.push(d);
        }
        t
    }

    #[test]
    fn jsonl_round_trip_exact() {
        let t = sample();
        let mut buf = Vec::new();
        write_jsonl(&t, &mut buf).unwrap();
        let back = read_jsonl(&buf[..]).unwrap();
        assert_eq!(back.times, t.times);
        assert_eq!(back.states, t.states);
        assert_eq!(back.diagnostics, t.diagnostics);
        let first = String::from_utf8(buf).unwrap();
        let line: serde_json::Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
        assert!(line.get("t").is_some() && line.get("x").is_some() && line.get("diag").is_some());
    }

    #[test]
    fn csv_round_trip_exact() {
        let t = sample();
        let mut buf = Vec::new();
        write_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), "t,x0,x1,x2,x3,drift,energy");
        let back = read_csv(&buf[..]).unwrap();
        assert_eq!(back.times, t.times);
        assert_eq!(back.states, t.states);
        assert_eq!(back.diagnostics, t.diagnostics);
    }

    #[test]
    fn malformed_inputs() {
        assert!(read_csv("q,x0\n1,2\n".as_bytes()).is_err());
        assert!(read_csv("t,x0\n1,abc\n".as_bytes()).is_err());
        assert!(read_jsonl("{\"t\":0}\n".as_bytes()).is_err());
    }
}
