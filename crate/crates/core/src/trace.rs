//! Trace files: diagnostics rows as CSV and step histories as JSON lines.

use std::io::{BufRead, Write};

use crate::crifba::{DiagnosticsRecord, StepRecord};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 6] = ["n", "vel2", "vn2", "res2", "energy", "ystar_norm"];

/// Serializes a `Vector` as a plain JSON array.
pub mod serde_vector {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::metric::Vector;

    pub fn serialize<S: Serializer>(v: &Vector, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vector, D::Error> {
        Ok(Vector::from_vec(Vec::<f64>::deserialize(d)?))
    }
}

fn cell(v: f64) -> String {
    // 17 significant digits round-trip every f64
    format!("{v:.16e}")
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(cell).unwrap_or_default()
}

pub fn write_csv<W: Write>(out: W, rows: &[DiagnosticsRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            cell(r.vel2),
            opt_cell(r.vn2),
            cell(r.res2),
            opt_cell(r.energy),
            opt_cell(r.ystar_norm),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn parse_opt(field: &str, line: usize, name: &str) -> Result<Option<f64>> {
    if field.trim().is_empty() {
        return Ok(None);
    }
    field
        .trim()
        .parse()
        .map(Some)
        .map_err(|_| Error::Format(format!("row {line}: bad {name} value `{field}`")))
}

fn parse_req(field: &str, line: usize, name: &str) -> Result<f64> {
    parse_opt(field, line, name)?.ok_or_else(|| Error::Format(format!("row {line}: empty {name}")))
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<DiagnosticsRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header != CSV_HEADER {
        return Err(Error::Format(format!(
            "expected header {}, found {}",
            CSV_HEADER.join(","),
            header.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != CSV_HEADER.len() {
            return Err(Error::Format(format!(
                "row {line}: expected 6 fields, found {}",
                rec.len()
            )));
        }
        let n = rec[0]
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("row {line}: bad n `{}`", &rec[0])))?;
        rows.push(DiagnosticsRecord {
            n,
            vel2: parse_req(&rec[1], line, "vel2")?,
            vn2: parse_opt(&rec[2], line, "vn2")?,
            res2: parse_req(&rec[3], line, "res2")?,
            energy: parse_opt(&rec[4], line, "energy")?,
            ystar_norm: parse_opt(&rec[5], line, "ystar_norm")?,
        });
    }
    Ok(rows)
}

pub fn write_history<W: Write>(mut out: W, history: &[StepRecord]) -> Result<()> {
    for rec in history {
        serde_json::to_writer(&mut out, rec)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_history<R: BufRead>(input: R) -> Result<Vec<StepRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("history line {}: {e}", i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::vector;

    #[test]
    fn csv_round_trip_is_exact() {
        let rows = vec![
            DiagnosticsRecord {
                n: 0,
                vel2: 0.1 + 0.2,
                vn2: None,
                res2: 1.0 / 3.0,
                energy: Some(std::f64::consts::PI),
                ystar_norm: None,
            },
            DiagnosticsRecord {
                n: 1,
                vel2: 5e-324,
                vn2: Some(1e300),
                res2: 0.0,
                energy: None,
                ystar_norm: Some(2.0f64.sqrt()),
            },
        ];
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("n,vel2,vn2,res2,energy,ystar_norm\n"));
        assert!(text.lines().nth(1).unwrap().contains(",,"));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn csv_rejects_bad_header_and_cells() {
        assert!(read_csv("a,b\n1,2\n".as_bytes()).is_err());
        let bad = "n,vel2,vn2,res2,energy,ystar_norm\n0,x,,1,,\n";
        assert!(matches!(read_csv(bad.as_bytes()), Err(Error::Format(_))));
    }

    #[test]
    fn history_round_trip() {
        let v = vector(&[1.0, -0.5]);
        let rec = StepRecord {
            n: 3,
            theta: 0.25,
            gamma: 0.5,
            x_prev: v.clone(),
            x: v.clone(),
            z_prev: v.clone(),
            v: v.clone(),
            z: v.clone(),
            g_x: v.clone(),
            g_z: v.clone(),
            x_next: v.clone(),
            b_z: v.clone(),
            b_zprev: v,
        };
        let mut buf = Vec::new();
        write_history(&mut buf, std::slice::from_ref(&rec)).unwrap();
        assert!(String::from_utf8_lossy(&buf).contains("\"x\":[1.0,-0.5]"));
        assert_eq!(read_history(buf.as_slice()).unwrap(), vec![rec]);
    }
}
