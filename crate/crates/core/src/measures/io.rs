//! Measure CSV format: header `x1,...,xd,w`, one support point per row.

use std::path::Path;

use super::DiscreteMeasure;
use crate::error::{Error, Result};

/// Reads a measure from `x1,...,xd,w` CSV.
pub fn read_measure_csv<P: AsRef<Path>>(path: P) -> Result<DiscreteMeasure> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())?;
    let headers = rdr.headers()?.clone();
    let ncol = headers.len();
    if ncol < 2 {
        return Err(Error::Invalid(
            "measure CSV needs at least one coordinate column and a weight column".into(),
        ));
    }
    let dim = ncol - 1;
    for (k, h) in headers.iter().take(dim).enumerate() {
        let expected = format!("x{}", k + 1);
        if h != expected {
            return Err(Error::Invalid(format!(
                "unexpected column {k}: got {h:?}, expected {expected:?}"
            )));
        }
    }
    if headers.iter().nth(dim) != Some("w") {
        return Err(Error::Invalid("last CSV column must be `w`".into()));
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != ncol {
            return Err(Error::Invalid(format!(
                "row {row}: expected {ncol} fields, got {}",
                rec.len()
            )));
        }
        for field in rec.iter().take(dim) {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Invalid(format!("row {row}: bad coordinate {field:?}")))?;
            points.push(v);
        }
        let w: f64 = rec[dim]
            .parse()
            .map_err(|_| Error::Invalid(format!("row {row}: bad weight {:?}", &rec[dim])))?;
        weights.push(w);
    }
    DiscreteMeasure::from_flat(dim, points, weights)
}

/// Writes a measure as `x1,...,xd,w` CSV. Floats are rendered with Rust's
/// shortest round-trip formatting, so rereading reproduces the measure
/// bit-exactly and identical measures produce identical bytes.
pub fn write_measure_csv<P: AsRef<Path>>(path: P, m: &DiscreteMeasure) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path.as_ref())?;
    let mut header: Vec<String> = (1..=m.dim()).map(|k| format!("x{k}")).collect();
    header.push("w".into());
    wtr.write_record(&header)?;
    for (p, &w) in m.iter_points().zip(m.weights()) {
        let mut row: Vec<String> = p.iter().map(|x| format!("{x}")).collect();
        row.push(format!("{w}"));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}
