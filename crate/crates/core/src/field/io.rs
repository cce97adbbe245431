//! CSV exchange formats for fields.
//!
//! * coefficients: `j,k,re_x,im_x,re_y,im_y`
//! * collocation samples: `t,s,x,y`
//!
//! Floats are written with 17 significant digits and parse back bit-exactly.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use rustfft::num_complex::Complex64;

use super::{Grid2D, GridValues, SpectralField};
use crate::error::{Error, Result};

pub const COEFF_HEADER: [&str; 6] = ["j", "k", "re_x", "im_x", "re_y", "im_y"];
pub const GRID_HEADER: [&str; 4] = ["t", "s", "x", "y"];

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(field: &str) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("not a number: {field:?}")))
}

fn parse_i64(field: &str) -> Result<i64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("not an integer: {field:?}")))
}

fn check_header(reader: &mut csv::Reader<impl Read>, want: &[&str]) -> Result<()> {
    let header = reader.headers()?;
    if header.iter().map(str::trim).ne(want.iter().copied()) {
        return Err(Error::Parse(format!(
            "expected header {:?}, found {:?}",
            want.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(())
}

pub fn write_coeffs(field: &SpectralField, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COEFF_HEADER)?;
    for (j, k, u) in field.modes() {
        w.write_record([
            j.to_string(),
            k.to_string(),
            fmt_f64(u[0].re),
            fmt_f64(u[0].im),
            fmt_f64(u[1].re),
            fmt_f64(u[1].im),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads coefficients. Without an explicit `grid` the truncation is inferred
/// from the largest `|j|`, `|k|` present. Missing sites are zero.
pub fn read_coeffs(input: impl Read, grid: Option<Grid2D>) -> Result<SpectralField> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, &COEFF_HEADER)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 6 {
            return Err(Error::Parse(format!("expected 6 columns, got {}", rec.len())));
        }
        let j = parse_i64(&rec[0])?;
        let k = parse_i64(&rec[1])?;
        let x = Complex64::new(parse_f64(&rec[2])?, parse_f64(&rec[3])?);
        let y = Complex64::new(parse_f64(&rec[4])?, parse_f64(&rec[5])?);
        rows.push((j, k, [x, y]));
    }
    let grid = match grid {
        Some(g) => g,
        None => {
            let jm = rows.iter().map(|r| r.0.unsigned_abs()).max().unwrap_or(0) as usize;
            let km = rows.iter().map(|r| r.1.unsigned_abs()).max().unwrap_or(0) as usize;
            Grid2D::for_truncation(jm, km)?
        }
    };
    let mut field = SpectralField::zeros(grid);
    for (j, k, u) in rows {
        if !grid.contains(j, k) {
            return Err(Error::Parse(format!("mode ({j},{k}) outside truncation")));
        }
        field.set_site(j, k, u);
    }
    Ok(field)
}

pub fn write_grid(values: &GridValues, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(GRID_HEADER)?;
    for m in 0..values.nt {
        for n in 0..values.ns {
            let [x, y] = values.get(m, n);
            w.write_record([
                fmt_f64(values.t(m)),
                fmt_f64(values.s(n)),
                fmt_f64(x),
                fmt_f64(y),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a full tensor-product sample set written by [`write_grid`].
pub fn read_grid(input: impl Read) -> Result<GridValues> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, &GRID_HEADER)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let vals: Vec<f64> = rec.iter().map(parse_f64).collect::<Result<_>>()?;
        if vals.len() != 4 {
            return Err(Error::Parse(format!("expected 4 columns, got {}", vals.len())));
        }
        rows.push(vals);
    }
    let ts: BTreeSet<u64> = rows.iter().map(|r| r[0].to_bits()).collect();
    let ss: BTreeSet<u64> = rows.iter().map(|r| r[1].to_bits()).collect();
    let (nt, ns) = (ts.len(), ss.len());
    if nt * ns != rows.len() {
        return Err(Error::Parse("samples do not form a tensor grid".into()));
    }
    let mut v = GridValues::zeros(nt, ns);
    for (i, row) in rows.iter().enumerate() {
        v.x[i] = row[2];
        v.y[i] = row[3];
    }
    Ok(v)
}
