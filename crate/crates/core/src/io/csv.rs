//! Plain numeric CSV: '.' decimal separator, one row per line.
//!
//! A single line parses as a 1-D tensor, multiple lines as a 2-D tensor with
//! equal row lengths. Values are written with Rust's shortest round-trip
//! float formatting, so save/load is value-exact.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::quant::FloatTensor;

pub fn read_csv<R: BufRead>(reader: &mut R) -> Result<FloatTensor> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| {
                let tok = tok.trim();
                tok.parse::<f64>().map_err(|_| {
                    Error::Format(format!(
                        "line {}: cannot parse {tok:?} as a number",
                        line_no + 1
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Format("CSV file holds no values".into()));
    }
    if rows.len() == 1 {
        let row = rows.pop().expect("one row");
        return FloatTensor::from_vec(row);
    }
    let cols = rows[0].len();
    if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
        return Err(Error::Format(format!(
            "row {} has {} values, expected {cols}",
            bad + 1,
            rows[bad].len()
        )));
    }
    let n_rows = rows.len();
    let values = rows.into_iter().flatten().collect();
    FloatTensor::new(vec![n_rows, cols], values)
}

pub fn write_csv<W: Write>(writer: &mut W, t: &FloatTensor) -> Result<()> {
    let (rows, cols) = match t.shape().len() {
        1 => (1, t.len()),
        2 => (t.shape()[0], t.shape()[1]),
        n => {
            return Err(Error::Unsupported(format!(
                "CSV supports 1-D and 2-D tensors, got {n}-D"
            )))
        }
    };
    for r in 0..rows {
        let row: Vec<String> = t.values()[r * cols..(r + 1) * cols]
            .iter()
            .map(f64::to_string)
            .collect();
        writeln!(writer, "{}", row.join(","))?;
    }
    Ok(())
}
