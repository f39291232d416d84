//! Plain-text output formats.
//!
//! CSV files start with `# key: value` metadata lines followed by a header
//! row and data rows. Numbers use Rust's shortest round-trip scientific
//! notation, so reading a file back reproduces every value bit for bit.
//! JSON documents carry the same metadata under a `metadata` key.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dispersive::{Channel, SweepRow};
use crate::gkp::{delta_to_db, FitReport, GkpParams};
use crate::oscillator::{GridDensityMatrix, PositionGrid, WignerGrid};
use crate::qudit::QuditState;
use crate::{Error, Result};

/// Ordered `key: value` pairs written as `#` lines.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Metadata(pub BTreeMap<String, String>);

impl Metadata {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.insert(key, value);
        self
    }

    pub fn insert(&mut self, key: impl Into<String>, value: impl ToString) {
        self.0.insert(key.into(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn write_to(&self, w: &mut impl Write) -> Result<()> {
        for (k, v) in &self.0 {
            for (i, line) in v.lines().enumerate() {
                if i == 0 {
                    writeln!(w, "# {k}: {line}")?;
                } else {
                    writeln!(w, "#   {line}")?;
                }
            }
        }
        Ok(())
    }
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn axis_line(axis: &[f64]) -> String {
    axis.iter().map(|x| num(*x)).collect::<Vec<_>>().join(",")
}

/// Splits a file into its metadata and the remaining CSV text, keeping the
/// line offset of the first data line.
fn split_header(r: impl Read) -> Result<(Metadata, String, usize)> {
    let mut meta = Metadata::new();
    let mut body = String::new();
    let mut offset = 0;
    let mut last_key: Option<String> = None;
    let mut in_body = false;
    for (i, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        if !in_body {
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(cont) = rest.strip_prefix("   ") {
                    if let Some(k) = &last_key {
                        let v = meta.0.entry(k.clone()).or_default();
                        v.push('\n');
                        v.push_str(cont);
                    }
                    continue;
                }
                let rest = rest.trim_start();
                let (k, v) = rest.split_once(':').ok_or_else(|| Error::Format {
                    line: i + 1,
                    message: format!("metadata line without `key: value`: {line}"),
                })?;
                meta.insert(k.trim(), v.trim());
                last_key = Some(k.trim().to_string());
                continue;
            }
            in_body = true;
            offset = i;
        }
        body.push_str(&line);
        body.push('\n');
    }
    Ok((meta, body, offset))
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Format {
        line,
        message: format!("not a number: `{s}`"),
    })
}

fn parse_axis(meta: &Metadata, key: &str) -> Result<Vec<f64>> {
    let raw = meta.get(key).ok_or_else(|| Error::Format {
        line: 1,
        message: format!("missing `# {key}:` header"),
    })?;
    raw.split(',').map(|s| parse_f64(s, 1)).collect()
}

/// Reads the data rows of a CSV body, returning each record with its
/// 1-based line number in the original file.
fn records(body: &str, offset: usize, expect_header: &[&str]) -> Result<Vec<(usize, Vec<String>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(body.as_bytes());
    let header = rdr.headers().map_err(|e| csv_error(e, offset))?.clone();
    if !expect_header.is_empty() {
        let got: Vec<&str> = header.iter().collect();
        if got != expect_header {
            return Err(Error::Format {
                line: offset + 1,
                message: format!("expected columns {expect_header:?}, found {got:?}"),
            });
        }
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(e, offset))?;
        let line = offset + rec.position().map_or(0, |p| p.line() as usize);
        out.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(out)
}

fn csv_error(e: csv::Error, offset: usize) -> Error {
    let line = offset + e.position().map_or(1, |p| p.line() as usize);
    Error::Format {
        line,
        message: e.to_string(),
    }
}

fn csv_writer(w: impl Write) -> csv::Writer<impl Write> {
    csv::WriterBuilder::new().from_writer(w)
}

fn write_csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Density matrix sampled every `stride` grid points. Columns are the real
/// and imaginary parts of `ρ(q_i, q_j)` for each `j`.
pub fn write_density_csv(
    mut w: impl Write,
    meta: &Metadata,
    rho: &GridDensityMatrix,
    stride: usize,
) -> Result<()> {
    let (axis, m) = rho.decimate(stride);
    let meta = meta.clone().with("q_axis", axis_line(&axis)).with("stride", stride.max(1));
    meta.write_to(&mut w)?;
    let mut wtr = csv_writer(&mut w);
    let header: Vec<String> = (0..axis.len())
        .flat_map(|j| [format!("re_{j}"), format!("im_{j}")])
        .collect();
    wtr.write_record(&header).map_err(write_csv_error)?;
    for row in m.rows() {
        let rec: Vec<String> = row.iter().flat_map(|z| [num(z.re), num(z.im)]).collect();
        wtr.write_record(&rec).map_err(write_csv_error)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a file from [`write_density_csv`] back as a density matrix on the
/// decimated grid.
pub fn read_density_csv(r: impl Read) -> Result<(Metadata, GridDensityMatrix)> {
    let (meta, body, offset) = split_header(r)?;
    let axis = parse_axis(&meta, "q_axis")?;
    let n = axis.len();
    let rows = records(&body, offset, &[])?;
    if rows.len() != n {
        return Err(Error::Format {
            line: offset + rows.len() + 1,
            message: format!("expected {n} rows, found {}", rows.len()),
        });
    }
    let mut m = Array2::zeros((n, n));
    for (i, (line, rec)) in rows.iter().enumerate() {
        if rec.len() != 2 * n {
            return Err(Error::Format {
                line: *line,
                message: format!("expected {} columns, found {}", 2 * n, rec.len()),
            });
        }
        for j in 0..n {
            m[[i, j]] = C64::new(parse_f64(&rec[2 * j], *line)?, parse_f64(&rec[2 * j + 1], *line)?);
        }
    }
    let grid = grid_from_axis(&axis)?;
    // Decimation keeps the kernel values; the coarser quadrature needs a
    // renormalized trace.
    let trace: f64 = m.diag().iter().map(|z| z.re).sum::<f64>() * grid.dq();
    if trace.is_nan() || (trace - 1.0).abs() >= 1e-3 {
        return Err(Error::Format {
            line: offset + 1,
            message: format!("density trace {trace} is not 1"),
        });
    }
    m.mapv_inplace(|z| z / trace);
    Ok((meta, GridDensityMatrix::new(grid, m)?))
}

fn grid_from_axis(axis: &[f64]) -> Result<PositionGrid> {
    if axis.len() < 2 {
        return Err(Error::Format {
            line: 1,
            message: "axis needs at least two points".into(),
        });
    }
    let dq = axis[1] - axis[0];
    let n = axis.len();
    PositionGrid::new(axis[0], axis[0] + dq * n as f64, n)
}

/// Wigner function with `# q_axis:` / `# p_axis:` headers; row `i` holds
/// `W(q_i, p_m)` for every `m`.
pub fn write_wigner_csv(mut w: impl Write, meta: &Metadata, wg: &WignerGrid) -> Result<()> {
    let meta = meta
        .clone()
        .with("q_axis", axis_line(&wg.q_axis))
        .with("p_axis", axis_line(&wg.p_axis));
    meta.write_to(&mut w)?;
    let mut wtr = csv_writer(&mut w);
    let header: Vec<String> = (0..wg.p_axis.len()).map(|m| format!("p_{m}")).collect();
    wtr.write_record(&header).map_err(write_csv_error)?;
    for row in wg.values.rows() {
        let rec: Vec<String> = row.iter().map(|x| num(*x)).collect();
        wtr.write_record(&rec).map_err(write_csv_error)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_wigner_csv(r: impl Read) -> Result<(Metadata, WignerGrid)> {
    let (meta, body, offset) = split_header(r)?;
    let q_axis = parse_axis(&meta, "q_axis")?;
    let p_axis = parse_axis(&meta, "p_axis")?;
    let rows = records(&body, offset, &[])?;
    if rows.len() != q_axis.len() {
        return Err(Error::Format {
            line: offset + rows.len() + 1,
            message: format!("expected {} rows, found {}", q_axis.len(), rows.len()),
        });
    }
    let mut values = Array2::zeros((q_axis.len(), p_axis.len()));
    for (i, (line, rec)) in rows.iter().enumerate() {
        if rec.len() != p_axis.len() {
            return Err(Error::Format {
                line: *line,
                message: format!("expected {} columns, found {}", p_axis.len(), rec.len()),
            });
        }
        for (m, s) in rec.iter().enumerate() {
            values[[i, m]] = parse_f64(s, *line)?;
        }
    }
    Ok((
        meta,
        WignerGrid {
            q_axis,
            p_axis,
            values,
        },
    ))
}

/// Fit report as written to `fit.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitDocument {
    pub delta: f64,
    pub kappa: f64,
    pub phi: f64,
    pub fidelity: f64,
    #[serde(rename = "delta_dB")]
    pub delta_db: f64,
    #[serde(default)]
    pub metadata: Metadata,
}

impl FitDocument {
    pub fn from_params(params: GkpParams, fidelity: f64, metadata: Metadata) -> Self {
        Self {
            delta: params.delta,
            kappa: params.kappa,
            phi: params.phi,
            fidelity,
            delta_db: delta_to_db(params.delta),
            metadata,
        }
    }

    pub fn from_report(report: &FitReport, metadata: Metadata) -> Self {
        Self::from_params(report.params, report.fidelity, metadata)
    }

    pub fn params(&self) -> Result<GkpParams> {
        GkpParams::new(self.delta, self.kappa, self.phi)
    }
}

pub fn write_json<T: Serialize>(mut w: impl Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    writeln!(w)?;
    Ok(())
}

pub fn read_fit_json(r: impl Read) -> Result<FitDocument> {
    serde_json::from_reader(r).map_err(|e| Error::Format {
        line: e.line(),
        message: e.to_string(),
    })
}

pub const SWEEP_COLUMNS: [&str; 3] = ["rate_ratio", "channel", "fidelity"];

pub fn write_sweep_csv(mut w: impl Write, meta: &Metadata, rows: &[SweepRow]) -> Result<()> {
    meta.write_to(&mut w)?;
    let mut wtr = csv_writer(&mut w);
    wtr.write_record(SWEEP_COLUMNS).map_err(write_csv_error)?;
    for r in rows {
        wtr.write_record([num(r.rate_ratio), r.channel.name().to_string(), num(r.fidelity)])
            .map_err(write_csv_error)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_sweep_csv(r: impl Read) -> Result<(Metadata, Vec<SweepRow>)> {
    let (meta, body, offset) = split_header(r)?;
    let rows = records(&body, offset, &SWEEP_COLUMNS)?
        .into_iter()
        .map(|(line, rec)| {
            if rec.len() != 3 {
                return Err(Error::Format {
                    line,
                    message: format!("expected 3 columns, found {}", rec.len()),
                });
            }
            Ok(SweepRow {
                rate_ratio: parse_f64(&rec[0], line)?,
                channel: rec[1].parse::<Channel>().map_err(|e| Error::Format {
                    line,
                    message: e.to_string(),
                })?,
                fidelity: parse_f64(&rec[2], line)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((meta, rows))
}

pub const AMPLITUDE_COLUMNS: [&str; 5] = ["index", "level", "re", "im", "abs"];

/// One row per qudit level.
pub fn write_amplitudes_csv(mut w: impl Write, meta: &Metadata, v: &QuditState) -> Result<()> {
    meta.write_to(&mut w)?;
    let mut wtr = csv_writer(&mut w);
    wtr.write_record(AMPLITUDE_COLUMNS).map_err(write_csv_error)?;
    let dims = v.dims();
    for (i, a) in v.amplitudes().iter().enumerate() {
        wtr.write_record([i.to_string(), num(dims.level(i)), num(a.re), num(a.im), num(a.norm())])
            .map_err(write_csv_error)?;
    }
    wtr.flush()?;
    Ok(())
}

pub const INTERPOLATION_COLUMNS: [&str; 4] = ["y", "re", "im", "abs"];

/// Samples `(y, v(y))`.
pub fn write_interpolation_csv(mut w: impl Write, meta: &Metadata, samples: &[(f64, C64)]) -> Result<()> {
    meta.write_to(&mut w)?;
    let mut wtr = csv_writer(&mut w);
    wtr.write_record(INTERPOLATION_COLUMNS).map_err(write_csv_error)?;
    for (y, v) in samples {
        wtr.write_record([num(*y), num(v.re), num(v.im), num(v.norm())])
            .map_err(write_csv_error)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Generic table; floats should already be formatted by [`format_number`].
pub fn write_table_csv(
    mut w: impl Write,
    meta: &Metadata,
    columns: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    meta.write_to(&mut w)?;
    let mut wtr = csv_writer(&mut w);
    wtr.write_record(columns).map_err(write_csv_error)?;
    for r in rows {
        wtr.write_record(r).map_err(write_csv_error)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Shortest round-trip scientific notation.
pub fn format_number(x: f64) -> String {
    num(x)
}

/// Metadata lines of a file written by this module.
pub fn read_metadata(r: impl Read) -> Result<Metadata> {
    split_header(r).map(|(m, _, _)| m)
}

/// Rows of a CSV file with the given columns, parsed as numbers.
pub fn read_numeric_csv(r: impl Read, columns: &[&str]) -> Result<(Metadata, Vec<Vec<f64>>)> {
    let (meta, body, offset) = split_header(r)?;
    let rows = records(&body, offset, columns)?
        .into_iter()
        .map(|(line, rec)| {
            if rec.len() != columns.len() {
                return Err(Error::Format {
                    line,
                    message: format!("expected {} columns, found {}", columns.len(), rec.len()),
                });
            }
            rec.iter().map(|s| parse_f64(s, line)).collect()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((meta, rows))
}
