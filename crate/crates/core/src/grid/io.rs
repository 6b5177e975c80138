//! CSV exchange for grid functions: header `x[,y],value`, row-major, one
//! row per node, `#` comment lines allowed anywhere.

use std::io::{Read, Write};

use super::{Grid, GridFunction};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub coords: Vec<f64>,
    pub value: f64,
}

/// Writes `u` with optional leading `# ` comment lines.
pub fn write_csv<W: Write>(mut out: W, u: &GridFunction, comments: &[String]) -> Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    let g = u.grid();
    let mut w = csv::Writer::from_writer(out);
    if g.dim() == 1 {
        w.write_record(["x", "value"])?;
    } else {
        w.write_record(["x", "y", "value"])?;
    }
    for k in 0..g.len() {
        let c = g.coord(k);
        let mut rec: Vec<String> = c[..g.dim()].iter().map(|v| format!("{v:?}")).collect();
        rec.push(format!("{:?}", u.get(k)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv_rows<R: Read>(input: R) -> Result<Vec<CsvRow>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let dim = match headers.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["x", "value"] => 1,
        ["x", "y", "value"] => 2,
        _ => return Err(Error::Parse(format!("expected header x[,y],value, got {}", headers.join(",")))),
    };
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let nums: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let nums = nums.map_err(|e| Error::Parse(format!("row {}: {e}", line + 1)))?;
        if nums.len() != dim + 1 {
            return Err(Error::Parse(format!("row {}: expected {} columns", line + 1, dim + 1)));
        }
        rows.push(CsvRow {
            coords: nums[..dim].to_vec(),
            value: nums[dim],
        });
    }
    Ok(rows)
}

/// Matches rows to grid nodes by coordinates (to within `10⁻⁶ h`).
pub fn grid_function_from_rows(grid: Grid, rows: &[CsvRow]) -> Result<GridFunction> {
    let mut values = vec![f64::NAN; grid.len()];
    for (n, row) in rows.iter().enumerate() {
        if row.coords.len() != grid.dim() {
            return invalid(format!("row {n}: dimension mismatch"));
        }
        let mut ij = [0usize; 2];
        for a in 0..grid.dim() {
            let t = (row.coords[a] - grid.lo(a)) / grid.h(a);
            let r = t.round();
            if (t - r).abs() > 1e-6 || r < 0.0 || r as usize >= grid.shape()[a] {
                return invalid(format!("row {n}: coordinate {} is not a grid node", row.coords[a]));
            }
            ij[a] = r as usize;
        }
        values[grid.index(ij[0], ij[1])] = row.value;
    }
    if let Some(k) = values.iter().position(|v| v.is_nan()) {
        return invalid(format!("node {k} at {:?} missing from table", &grid.coord(k)[..grid.dim()]));
    }
    GridFunction::from_values(grid, values)
}
