//! CSV and OBJ serialization of grid fields. Floats carry 17 significant digits.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frame::FrameField;
use crate::grid::{Field, Grid};
use crate::linalg::{ComplexMat3, ComplexVec3};
use crate::surface::LiftField;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

fn write_table<W: Write, T>(
    out: W,
    header: &[String],
    field: &Field<T>,
    mut row: impl FnMut(&T) -> Option<Vec<f64>>,
) -> Result<()> {
    let mut w = writer(out);
    w.write_record(header)?;
    let g = *field.grid();
    for (i, j) in g.nodes() {
        if let Some(values) = row(field.at(i, j)) {
            let mut record = vec![fmt_f64(g.u(i)), fmt_f64(g.v(j))];
            record.extend(values.into_iter().map(fmt_f64));
            w.write_record(&record)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Parses a full-grid table into its grid and per-node value columns (after `u, v`).
fn read_table<R: Read>(input: R, header: &[String]) -> Result<(Grid, Vec<Vec<f64>>)> {
    let mut r = csv::ReaderBuilder::new().from_reader(input);
    let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(Error::Format(format!("expected header {}, found {}", header.join(","), found.join(","))));
    }
    let mut rows = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let values = record
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Format(format!("row {}: {e}: {s:?}", line + 2))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(values);
    }
    let mut us: Vec<f64> = Vec::new();
    let mut vs: Vec<f64> = Vec::new();
    for row in &rows {
        if !us.contains(&row[0]) {
            us.push(row[0]);
        }
        if !vs.contains(&row[1]) {
            vs.push(row[1]);
        }
    }
    let grid = Grid::from_nodes(&us, &vs)?;
    if rows.len() != grid.len() {
        return Err(Error::Format(format!("expected {} rows, found {}", grid.len(), rows.len())));
    }
    for ((i, j), row) in grid.nodes().zip(&rows) {
        if row[0] != us[i] || row[1] != vs[j] {
            return Err(Error::Format(format!("row for node ({i}, {j}) is out of order")));
        }
    }
    Ok((grid, rows.into_iter().map(|r| r[2..].to_vec()).collect()))
}

fn header(names: &[String]) -> Vec<String> {
    let mut h = vec!["u".to_string(), "v".to_string()];
    h.extend(names.iter().cloned());
    h
}

fn complex_names(prefix: &str, suffixes: &[String]) -> Vec<String> {
    suffixes.iter().flat_map(|s| [format!("re_{prefix}{s}"), format!("im_{prefix}{s}")]).collect()
}

fn vec_header() -> Vec<String> {
    header(&complex_names("f", &["1", "2", "3"].map(String::from)))
}

fn mat_header() -> Vec<String> {
    let idx: Vec<String> = (1..=3).flat_map(|r| (1..=3).map(move |c| format!("{r}{c}"))).collect();
    header(&complex_names("F", &idx))
}

fn complex_parts(zs: impl IntoIterator<Item = Complex64>) -> Vec<f64> {
    zs.into_iter().flat_map(|z| [z.re, z.im]).collect()
}

fn complexes(values: &[f64]) -> Vec<Complex64> {
    values.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect()
}

pub fn write_omega_csv<W: Write>(omega: &Field<f64>, out: W) -> Result<()> {
    write_table(out, &header(&["omega".to_string()]), omega, |w| Some(vec![*w]))
}

pub fn read_omega_csv<R: Read>(input: R) -> Result<Field<f64>> {
    let (grid, rows) = read_table(input, &header(&["omega".to_string()]))?;
    Field::from_vec(grid, rows.into_iter().map(|r| r[0]).collect())
}

/// Columns `u, v` then re/im of the nine entries in row-major order.
pub fn write_frame_csv<W: Write>(frame: &FrameField, out: W) -> Result<()> {
    write_table(out, &mat_header(), &frame.frames, |f| Some(complex_parts(f.transpose().iter().copied())))
}

pub fn read_frame_csv<R: Read>(input: R) -> Result<Field<ComplexMat3>> {
    let (grid, rows) = read_table(input, &mat_header())?;
    let data = rows.iter().map(|r| ComplexMat3::from_row_slice(&complexes(r))).collect();
    Field::from_vec(grid, data)
}

/// Columns `u,v,re_f1,im_f1,re_f2,im_f2,re_f3,im_f3`.
pub fn write_lift_csv<W: Write>(lift: &LiftField, out: W) -> Result<()> {
    write_table(out, &vec_header(), &lift.values, |f| Some(complex_parts(f.iter().copied())))
}

pub fn read_lift_csv<R: Read>(input: R, lambda: Complex64) -> Result<LiftField> {
    let (grid, rows) = read_table(input, &vec_header())?;
    let data = rows.iter().map(|r| ComplexVec3::from_column_slice(&complexes(r))).collect();
    Ok(LiftField { lambda, values: Field::from_vec(grid, data)? })
}

/// Affine chart `w1 = f1 / f3`, `w2 = f2 / f3`; nodes with `f3 = 0` are skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub values: Field<Option<(Complex64, Complex64)>>,
    pub skipped: Vec<(usize, usize)>,
}

pub fn chart(lift: &LiftField) -> Chart {
    let values = lift.values.map(|f| (f[2] != Complex64::new(0.0, 0.0)).then(|| (f[0] / f[2], f[1] / f[2])));
    let skipped = lift.grid().nodes().filter(|&(i, j)| values.at(i, j).is_none()).collect();
    Chart { values, skipped }
}

pub fn write_chart_csv<W: Write>(chart: &Chart, out: W) -> Result<()> {
    let h = header(&["re_w1", "im_w1", "re_w2", "im_w2"].map(String::from));
    write_table(out, &h, &chart.values, |w| w.map(|(a, b)| vec![a.re, a.im, b.re, b.im]))
}

/// Vertices `(Re w1, Im w1, Re w2)` and one quad per grid cell whose corners are all present.
pub fn write_obj<W: Write>(chart: &Chart, mut out: W) -> Result<()> {
    let g = *chart.values.grid();
    let mut index = Field::filled(g, 0usize);
    let mut next = 1;
    for (i, j) in g.nodes() {
        if let Some((a, b)) = chart.values.at(i, j) {
            writeln!(out, "v {} {} {}", fmt_f64(a.re), fmt_f64(a.im), fmt_f64(b.re))?;
            *index.at_mut(i, j) = next;
            next += 1;
        }
    }
    for i in 0..g.nu {
        for j in 0..g.nv {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)].map(|(a, b)| *index.at(a, b));
            if corners.iter().all(|&k| k > 0) {
                writeln!(out, "f {} {} {} {}", corners[0], corners[1], corners[2], corners[3])?;
            }
        }
    }
    Ok(())
}
