//! Quasi-homogeneous anisotropic structure function.
//!
//! Each valid pixel's time series is centered and scaled to unit temporal
//! variance (population convention). For a separation `d = (x, y)` the
//! structure function is the mean, over all valid pixel pairs separated by
//! `d`, of the time-averaged squared difference of the scaled series. Since
//! every scaled series has unit mean square, that equals
//! `2 - 2 * mean(z1 * z2)`, which is how it is computed here: the pair sums
//! come from one zero-padded autocorrelation FFT per frame.

use ndarray::{Array2, Axis};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::fourier::Fft2;
use crate::parallel::chunked;
use crate::series::FrameSeries;

const FRAME_CHUNK: usize = 64;

/// Structure-function values on the half-plane `y >= 0` of separations.
///
/// Separations run over `x in -(nx-1)..=(nx-1)` and `y in 0..=(ny-1)`; the
/// other half follows from `D(x, y) = D(-x, -y)`. Cells without any valid
/// pixel pair hold value 0 and count 0.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureGrid {
    /// `values[[y, x + nx - 1]]`.
    pub values: Array2<f64>,
    /// Number of contributing pixel pairs per cell.
    pub counts: Array2<u64>,
}

impl StructureGrid {
    /// Largest |x| separation stored.
    pub fn x_extent(&self) -> usize {
        self.values.ncols() / 2
    }

    pub fn y_extent(&self) -> usize {
        self.values.nrows().saturating_sub(1)
    }

    /// Value at separation `(x, y)` anywhere in the plane, or `None` when
    /// out of range.
    pub fn get(&self, x: isize, y: isize) -> Option<f64> {
        let (x, y) = if y < 0 { (-x, -y) } else { (x, y) };
        let off = self.x_extent() as isize;
        if x.abs() > off || y > self.y_extent() as isize || self.values.is_empty() {
            return None;
        }
        Some(self.values[[y as usize, (x + off) as usize]])
    }

    pub fn count(&self, x: isize, y: isize) -> u64 {
        let (x, y) = if y < 0 { (-x, -y) } else { (x, y) };
        let off = self.x_extent() as isize;
        if x.abs() > off || y > self.y_extent() as isize || self.counts.is_empty() {
            return 0;
        }
        self.counts[[y as usize, (x + off) as usize]]
    }

    /// Cells in ascending `(x, y)` order: `(x, y, value, count)`.
    pub fn cells(&self) -> impl Iterator<Item = (isize, isize, f64, u64)> + '_ {
        let off = self.x_extent() as isize;
        let ny = self.values.nrows();
        (0..self.values.ncols()).flat_map(move |col| {
            (0..ny).map(move |row| {
                (
                    col as isize - off,
                    row as isize,
                    self.values[[row, col]],
                    self.counts[[row, col]],
                )
            })
        })
    }

    /// Bilinear interpolation at a real-valued separation.
    pub fn interpolate(&self, x: f64, y: f64) -> Option<f64> {
        let (x, y) = if y < 0.0 { (-x, -y) } else { (x, y) };
        let (x0, y0) = (x.floor() as isize, y.floor() as isize);
        let (fx, fy) = (x - x0 as f64, y - y0 as f64);
        let v00 = self.get(x0, y0)?;
        let v10 = self.get(x0 + 1, y0)?;
        let v01 = self.get(x0, y0 + 1)?;
        let v11 = self.get(x0 + 1, y0 + 1)?;
        Some(
            v00 * (1.0 - fx) * (1.0 - fy)
                + v10 * fx * (1.0 - fy)
                + v01 * (1.0 - fx) * fy
                + v11 * fx * fy,
        )
    }

    /// Cell-wise mean of grids with identical shape and counts.
    pub fn average(grids: &[StructureGrid]) -> Result<StructureGrid> {
        let first = grids.first().ok_or_else(|| invalid("no structure grids to average"))?;
        let mut values = Array2::<f64>::zeros(first.values.dim());
        for g in grids {
            if g.values.dim() != first.values.dim() || g.counts != first.counts {
                return Err(Error::Shape("structure grids differ in shape or pair counts".into()));
            }
            values += &g.values;
        }
        values /= grids.len() as f64;
        Ok(StructureGrid {
            values,
            counts: first.counts.clone(),
        })
    }
}

/// Anisotropic structure function of the standard-deviation-normalized
/// phase. Needs `nt >= 2` and a non-zero temporal deviation at every valid
/// pixel.
pub fn anisotropic_structure(series: &FrameSeries) -> Result<StructureGrid> {
    let (nt, ny, nx) = series.frames().dim();
    if nt < 2 {
        return Err(invalid("structure function needs at least two frames"));
    }
    let valid = Array2::from_shape_fn((ny, nx), |(y, x)| series.is_valid(y, x));

    let frames = series.frames();
    let mean = frames.mean_axis(Axis(0)).expect("nt >= 1");
    let mut var = Array2::<f64>::zeros((ny, nx));
    for frame in frames.outer_iter() {
        ndarray::Zip::from(&mut var)
            .and(&frame)
            .and(&mean)
            .for_each(|v, &f, &m| *v += (f - m) * (f - m));
    }
    let mut inv_sigma = Array2::<f64>::zeros((ny, nx));
    for ((y, x), v) in var.indexed_iter() {
        if !valid[[y, x]] {
            continue;
        }
        let sigma = (v / nt as f64).sqrt();
        if !(sigma > 0.0) {
            return Err(Error::ZeroSigma { y, x });
        }
        inv_sigma[[y, x]] = 1.0 / sigma;
    }

    let (py, px) = (2 * ny, 2 * nx);
    let fft = Fft2::new(py, px);
    let partials = chunked(nt, FRAME_CHUNK, |range| {
        let mut acc = Array2::<f64>::zeros((py, px));
        let mut buf = Array2::<Complex64>::zeros((py, px));
        for t in range {
            buf.fill(Complex64::new(0.0, 0.0));
            for ((y, x), &v) in frames.index_axis(Axis(0), t).indexed_iter() {
                if valid[[y, x]] {
                    buf[[y, x]] = Complex64::new((v - mean[[y, x]]) * inv_sigma[[y, x]], 0.0);
                }
            }
            fft.forward(&mut buf);
            acc.zip_mut_with(&buf, |a, b| *a += b.norm_sqr());
        }
        acc
    });
    let mut power = Array2::<Complex64>::zeros((py, px));
    for part in &partials {
        power.zip_mut_with(part, |p, &a| p.re += a);
    }
    fft.inverse(&mut power);

    let counts = pair_counts(&valid);
    let off = nx as isize - 1;
    let values = Array2::from_shape_fn((ny, 2 * nx - 1), |(y, col)| {
        let x = col as isize - off;
        let count = counts[[y, col]];
        if count == 0 || (x == 0 && y == 0) {
            return 0.0;
        }
        let wrap_x = x.rem_euclid(px as isize) as usize;
        let corr = power[[y, wrap_x]].re / (nt as f64 * count as f64);
        (2.0 - 2.0 * corr).clamp(0.0, 4.0)
    });
    Ok(StructureGrid { values, counts })
}

/// Valid pixel pairs `(p, p + d)` for every half-plane separation `d`.
fn pair_counts(valid: &Array2<bool>) -> Array2<u64> {
    let (ny, nx) = valid.dim();
    let off = nx as isize - 1;
    Array2::from_shape_fn((ny, 2 * nx - 1), |(dy, col)| {
        let dx = col as isize - off;
        let mut count = 0;
        for y in 0..ny - dy {
            for x in 0..nx {
                let x2 = x as isize + dx;
                if (0..nx as isize).contains(&x2) && valid[[y, x]] && valid[[y + dy, x2 as usize]] {
                    count += 1;
                }
            }
        }
        count
    })
}
