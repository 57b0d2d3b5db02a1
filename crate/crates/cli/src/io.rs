//! CSV, JSON and binary-amplitude file handling.

use std::fmt::Write as _;
use std::path::Path;

use densitree::graph::PairAmplitudes;
use densitree::DataMatrix;

use crate::CliError;

/// Numeric CSV with a header row. Returns the header and the matrix.
pub fn read_numeric_csv(path: &Path) -> Result<(Vec<String>, DataMatrix), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::parse(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();
    let (_, header_line) = lines
        .next()
        .ok_or_else(|| CliError::parse(format!("{}: line 1: empty file", path.display())))?;
    let header: Vec<String> = header_line.split(',').map(|s| s.trim().to_string()).collect();
    let ncols = header.len();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != ncols {
            return Err(CliError::parse(format!(
                "{}: line {}: expected {ncols} fields, got {}",
                path.display(),
                lineno + 1,
                fields.len()
            )));
        }
        let mut row = Vec::with_capacity(ncols);
        for (col, f) in fields.iter().enumerate() {
            let v: f64 = f.trim().parse().map_err(|_| {
                CliError::parse(format!(
                    "{}: line {}: column {} is not numeric: {f:?}",
                    path.display(),
                    lineno + 1,
                    col + 1
                ))
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::parse(format!(
            "{}: line 2: no data rows",
            path.display()
        )));
    }
    let matrix = DataMatrix::from_rows(&rows).map_err(CliError::from_core)?;
    Ok((header, matrix))
}

/// Full-precision float for CSV cells: 17 significant digits, '.' decimal.
pub fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{v:.16e}")
}

pub struct CsvWriter {
    buf: String,
}

impl CsvWriter {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = String::new();
        let _ = writeln!(buf, "{}", header.join(","));
        Self { buf }
    }

    pub fn row(&mut self, fields: &[String]) {
        let _ = writeln!(self.buf, "{}", fields.join(","));
    }

    pub fn write(self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.buf)
            .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
    }
}

/// Labels CSV as written by the cluster command: `index,label` with NA for
/// unallocated points.
pub fn read_labels_csv(path: &Path) -> Result<Vec<Option<usize>>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::parse(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let label_field = match fields.len() {
            1 => fields[0],
            2 => fields[1],
            k => {
                return Err(CliError::parse(format!(
                    "{}: line {}: expected 1 or 2 fields, got {k}",
                    path.display(),
                    lineno + 1
                )))
            }
        };
        let t = label_field.trim();
        if t.eq_ignore_ascii_case("na") {
            out.push(None);
        } else {
            let v: usize = t.parse().map_err(|_| {
                CliError::parse(format!(
                    "{}: line {}: bad label {t:?}",
                    path.display(),
                    lineno + 1
                ))
            })?;
            out.push(Some(v));
        }
    }
    if out.is_empty() {
        return Err(CliError::parse(format!(
            "{}: no label rows",
            path.display()
        )));
    }
    Ok(out)
}

const AMPLITUDE_MAGIC: &[u8; 4] = b"DTAM";

/// Binary amplitude store: 16-byte header (magic, n, grid_pairs, kernel id)
/// followed by the upper-triangular f32 amplitudes in little-endian order.
pub fn write_amplitudes(
    path: &Path,
    amps: &PairAmplitudes,
    kernel_id: u32,
) -> Result<(), CliError> {
    let mut buf = Vec::with_capacity(16 + amps.values().len() * 4);
    buf.extend_from_slice(AMPLITUDE_MAGIC);
    buf.extend_from_slice(&(amps.n() as u32).to_le_bytes());
    buf.extend_from_slice(&(amps.grid_pairs as u32).to_le_bytes());
    buf.extend_from_slice(&kernel_id.to_le_bytes());
    for v in amps.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, buf)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

pub struct StoredAmplitudes {
    pub amps: PairAmplitudes,
    pub kernel_id: u32,
}

pub fn read_amplitudes(path: &Path) -> Result<StoredAmplitudes, CliError> {
    let buf = std::fs::read(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    if buf.len() < 16 || &buf[0..4] != AMPLITUDE_MAGIC {
        return Err(CliError::data(format!(
            "{}: not an amplitude file",
            path.display()
        )));
    }
    let n = u32::from_le_bytes(buf[4..8].try_into().unwrap()) as usize;
    let grid_pairs = u32::from_le_bytes(buf[8..12].try_into().unwrap()) as usize;
    let kernel_id = u32::from_le_bytes(buf[12..16].try_into().unwrap());
    let expected = n * (n - 1) / 2;
    if buf.len() != 16 + expected * 4 {
        return Err(CliError::data(format!(
            "{}: truncated amplitude file",
            path.display()
        )));
    }
    let mut values = Vec::with_capacity(expected);
    for k in 0..expected {
        let off = 16 + k * 4;
        values.push(f32::from_le_bytes(buf[off..off + 4].try_into().unwrap()));
    }
    let amps = PairAmplitudes::from_values(n, values, grid_pairs).map_err(CliError::from_core)?;
    Ok(StoredAmplitudes { amps, kernel_id })
}
