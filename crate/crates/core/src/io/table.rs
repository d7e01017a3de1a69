//! CSV interchange: metric curves and grids out, frame stacks in and out.

use std::path::Path;

use ndarray::{Array2, Array3};

use crate::error::{Error, Result};
use crate::io::atomic_write;
use crate::metrics::{SpectrumCurve, StructureGrid};
use crate::series::FrameSeries;

/// Sampling metadata that CSV files do not carry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metadata {
    pub delta_m: f64,
    pub fs_hz: f64,
    pub lambda_m: f64,
}

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    atomic_write(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(header)?;
        for row in rows {
            out.write_record(&row)?;
        }
        out.flush()
    })
}

/// `freq_hz,power`, one row per bin in ascending frequency.
pub fn export_curve(curve: &SpectrumCurve, path: impl AsRef<Path>) -> Result<()> {
    let rows = curve
        .freqs
        .iter()
        .zip(&curve.power)
        .map(|(f, p)| vec![f.to_string(), p.to_string()]);
    write_csv(path.as_ref(), &["freq_hz", "power"], rows)
}

/// `x_px,y_px,value,count`, ascending in `x` then `y`.
pub fn export_grid(grid: &StructureGrid, path: impl AsRef<Path>) -> Result<()> {
    let rows = grid
        .cells()
        .map(|(x, y, v, c)| vec![x.to_string(), y.to_string(), v.to_string(), c.to_string()]);
    write_csv(path.as_ref(), &["x_px", "y_px", "value", "count"], rows)
}

/// Long format `t,y,x,value`; masked pixels are omitted.
pub fn export_stack_csv(series: &FrameSeries, path: impl AsRef<Path>) -> Result<()> {
    let (nt, ny, nx) = series.frames().dim();
    let rows = (0..nt).flat_map(move |t| {
        (0..ny).flat_map(move |y| {
            (0..nx).filter(move |&x| series.is_valid(y, x)).map(move |x| {
                vec![t.to_string(), y.to_string(), x.to_string(), series.frames()[[t, y, x]].to_string()]
            })
        })
    });
    write_csv(path.as_ref(), &["t", "y", "x", "value"], rows)
}

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::Malformed {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => malformed(path, format!("{other:?}")),
    }
}

/// Read a long-format `t,y,x,value` table with a header row.
///
/// Dimensions are one past the largest index on each axis. A pixel absent
/// from every frame is masked; any other missing or repeated entry is an
/// error.
pub fn import_long_csv(path: impl AsRef<Path>, meta: Metadata) -> Result<FrameSeries> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut entries = Vec::new();
    for (line, record) in reader.deserialize::<(usize, usize, usize, f64)>().enumerate() {
        let rec = record.map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => csv_error(path, e),
            _ => malformed(path, format!("row {}: {e}", line + 2)),
        })?;
        entries.push(rec);
    }
    if entries.is_empty() {
        return Err(malformed(path, "no data rows"));
    }
    let nt = entries.iter().map(|e| e.0).max().unwrap_or(0) + 1;
    let ny = entries.iter().map(|e| e.1).max().unwrap_or(0) + 1;
    let nx = entries.iter().map(|e| e.2).max().unwrap_or(0) + 1;
    nt.checked_mul(ny)
        .and_then(|n| n.checked_mul(nx))
        .ok_or(Error::DimensionOverflow { ny: ny as u64, nx: nx as u64, nt: nt as u64 })?;

    let mut frames = Array3::<f64>::from_elem((nt, ny, nx), f64::NAN);
    let mut seen = Array3::<bool>::from_elem((nt, ny, nx), false);
    for &(t, y, x, v) in &entries {
        if std::mem::replace(&mut seen[[t, y, x]], true) {
            return Err(malformed(path, format!("duplicate entry t={t} y={y} x={x}")));
        }
        frames[[t, y, x]] = v;
    }
    let present = Array2::from_shape_fn((ny, nx), |(y, x)| seen[[0, y, x]]);
    for t in 0..nt {
        for y in 0..ny {
            for x in 0..nx {
                if seen[[t, y, x]] != present[[y, x]] {
                    return Err(malformed(
                        path,
                        format!("pixel y={y} x={x} is present in some frames but not in frame {t}"),
                    ));
                }
            }
        }
    }
    let mask = present.iter().any(|&p| !p).then_some(present);
    FrameSeries::new(frames, meta.delta_m, meta.fs_hz, meta.lambda_m, mask)
}

/// Read one frame per file; each file is a header-less matrix with one CSV
/// row per pixel row.
pub fn import_frame_files<P: AsRef<Path>>(paths: &[P], meta: Metadata) -> Result<FrameSeries> {
    let mut shape = None;
    let mut values = Vec::new();
    for p in paths {
        let path = p.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        let mut rows = 0;
        let mut cols = None;
        for record in reader.records() {
            let record = record.map_err(|e| csv_error(path, e))?;
            if *cols.get_or_insert(record.len()) != record.len() {
                return Err(malformed(path, format!("row {} has {} columns", rows + 1, record.len())));
            }
            for field in record.iter() {
                let v: f64 = field
                    .parse()
                    .map_err(|_| malformed(path, format!("row {}: not a number: {field:?}", rows + 1)))?;
                values.push(v);
            }
            rows += 1;
        }
        let dims = (rows, cols.unwrap_or(0));
        if *shape.get_or_insert(dims) != dims {
            return Err(Error::Shape(format!(
                "{} is {}x{}, earlier frames are {:?}",
                path.display(),
                dims.0,
                dims.1,
                shape
            )));
        }
    }
    let (ny, nx) = shape.ok_or_else(|| crate::error::invalid("no frame files given"))?;
    let frames = Array3::from_shape_vec((paths.len(), ny, nx), values).map_err(|e| Error::Shape(e.to_string()))?;
    FrameSeries::new(frames, meta.delta_m, meta.fs_hz, meta.lambda_m, None)
}
