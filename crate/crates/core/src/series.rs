//! Frame stacks and the shared per-frame operations: square inscription,
//! tilt/tip/piston removal, and streamwise slopes.

use std::f64::consts::PI;
use std::ops::Range;

use ndarray::{s, Array2, Array3, ArrayView2, ArrayViewMut2, Axis};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};

/// A time-ordered stack of real phase frames, indexed `(t, y, x)`, in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSeries {
    frames: Array3<f64>,
    delta_m: f64,
    fs_hz: f64,
    lambda_m: f64,
    mask: Option<Array2<bool>>,
}

impl FrameSeries {
    /// Validates shape, sampling metadata, mask shape, and finiteness of
    /// every valid pixel.
    pub fn new(
        frames: Array3<f64>,
        delta_m: f64,
        fs_hz: f64,
        lambda_m: f64,
        mask: Option<Array2<bool>>,
    ) -> Result<Self> {
        let (nt, ny, nx) = frames.dim();
        if nt < 1 {
            return Err(invalid("frame series needs at least one frame"));
        }
        if ny < 2 || nx < 2 {
            return Err(invalid(format!("frames must be at least 2x2, got {ny}x{nx}")));
        }
        for (name, v) in [("delta_m", delta_m), ("fs_hz", fs_hz), ("lambda_m", lambda_m)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if let Some(m) = &mask {
            if m.dim() != (ny, nx) {
                return Err(invalid(format!(
                    "mask shape {:?} differs from frame shape ({ny}, {nx})",
                    m.dim()
                )));
            }
        }
        let finite = match &mask {
            None => frames.iter().all(|v| v.is_finite()),
            Some(m) => frames
                .outer_iter()
                .all(|f| f.iter().zip(m.iter()).all(|(v, &ok)| !ok || v.is_finite())),
        };
        if !finite {
            return Err(invalid("non-finite value at a valid pixel"));
        }
        let frames = frames.as_standard_layout().into_owned();
        Ok(Self {
            frames,
            delta_m,
            fs_hz,
            lambda_m,
            mask,
        })
    }

    pub fn frames(&self) -> &Array3<f64> {
        &self.frames
    }

    pub fn frame(&self, t: usize) -> ArrayView2<'_, f64> {
        self.frames.index_axis(Axis(0), t)
    }

    pub fn into_frames(self) -> Array3<f64> {
        self.frames
    }

    pub fn nt(&self) -> usize {
        self.frames.dim().0
    }

    pub fn ny(&self) -> usize {
        self.frames.dim().1
    }

    pub fn nx(&self) -> usize {
        self.frames.dim().2
    }

    pub fn delta_m(&self) -> f64 {
        self.delta_m
    }

    pub fn fs_hz(&self) -> f64 {
        self.fs_hz
    }

    pub fn lambda_m(&self) -> f64 {
        self.lambda_m
    }

    pub fn mask(&self) -> Option<&Array2<bool>> {
        self.mask.as_ref()
    }

    pub fn is_square(&self) -> bool {
        self.ny() == self.nx()
    }

    /// Whether pixel `(y, x)` is valid; always true without a mask.
    pub fn is_valid(&self, y: usize, x: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[[y, x]])
    }

    pub fn valid_count(&self) -> usize {
        match &self.mask {
            None => self.ny() * self.nx(),
            Some(m) => m.iter().filter(|&&v| v).count(),
        }
    }

    /// Same metadata, new frames. Used by operations that preserve sampling.
    pub(crate) fn with_frames(&self, frames: Array3<f64>, mask: Option<Array2<bool>>) -> Self {
        Self {
            frames,
            delta_m: self.delta_m,
            fs_hz: self.fs_hz,
            lambda_m: self.lambda_m,
            mask,
        }
    }

    /// Frames `range` of the series.
    pub fn slice_time(&self, range: Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.nt() {
            return Err(invalid(format!(
                "time range {range:?} is empty or exceeds {} frames",
                self.nt()
            )));
        }
        let frames = self.frames.slice(s![range, .., ..]).to_owned();
        Ok(self.with_frames(frames, self.mask.clone()))
    }

    /// Split by leading time fraction: the first `floor(fraction * nt)` frames
    /// and the remainder.
    pub fn split_fraction(&self, fraction: f64) -> Result<(Self, Self)> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(invalid(format!("split fraction must lie in (0, 1), got {fraction}")));
        }
        let cut = (fraction * self.nt() as f64).floor() as usize;
        if cut == 0 || cut == self.nt() {
            return Err(invalid(format!(
                "split {fraction} of {} frames leaves an empty part",
                self.nt()
            )));
        }
        Ok((self.slice_time(0..cut)?, self.slice_time(cut..self.nt())?))
    }

    /// Spatial crop of `ny x nx` pixels starting at `(y0, x0)`.
    pub fn crop(&self, y0: usize, x0: usize, ny: usize, nx: usize) -> Result<Self> {
        if ny < 2 || nx < 2 || y0 + ny > self.ny() || x0 + nx > self.nx() {
            return Err(invalid(format!(
                "crop {ny}x{nx} at ({y0}, {x0}) does not fit in {}x{}",
                self.ny(),
                self.nx()
            )));
        }
        let frames = self
            .frames
            .slice(s![.., y0..y0 + ny, x0..x0 + nx])
            .to_owned();
        let mask = self
            .mask
            .as_ref()
            .map(|m| m.slice(s![y0..y0 + ny, x0..x0 + nx]).to_owned());
        Ok(self.with_frames(frames, mask))
    }

    /// Replace the validity mask.
    pub fn with_mask(self, mask: Option<Array2<bool>>) -> Result<Self> {
        Self::new(self.frames, self.delta_m, self.fs_hz, self.lambda_m, mask)
    }

    /// Time series of pixel `(y, x)`.
    pub fn pixel_series(&self, y: usize, x: usize) -> Vec<f64> {
        self.frames.slice(s![.., y, x]).to_vec()
    }

    pub(crate) fn require_full_square(&self, what: &str) -> Result<usize> {
        if !self.is_square() {
            return Err(Error::Shape(format!(
                "{what} needs a square series, got {}x{} (inscribe a square first)",
                self.ny(),
                self.nx()
            )));
        }
        if self.mask.as_ref().is_some_and(|m| m.iter().any(|v| !v)) {
            return Err(Error::Shape(format!("{what} needs a mask-free series")));
        }
        Ok(self.ny())
    }
}

/// Largest square that fits the aperture, cropped from the top-left corner.
pub fn inscribe_square(series: &FrameSeries) -> FrameSeries {
    let k = series.ny().min(series.nx());
    if series.ny() == k && series.nx() == k {
        return series.clone();
    }
    series.crop(0, 0, k, k).expect("square fits inside its own aperture")
}

/// Least-squares plane over the valid pixels of one aperture.
///
/// Coordinates are pixel indices centered at the valid-pixel centroid, which
/// decouples piston from the two tilts.
struct PlaneFit {
    pixels: Vec<(usize, usize, f64, f64)>,
    inv: [[f64; 2]; 2],
}

impl PlaneFit {
    fn new(ny: usize, nx: usize, mask: Option<&Array2<bool>>) -> Option<Self> {
        let mut pixels = Vec::with_capacity(ny * nx);
        for y in 0..ny {
            for x in 0..nx {
                if mask.is_none_or(|m| m[[y, x]]) {
                    pixels.push((y, x, x as f64, y as f64));
                }
            }
        }
        let count = pixels.len() as f64;
        if pixels.len() < 3 {
            return None;
        }
        let cx = pixels.iter().map(|p| p.2).sum::<f64>() / count;
        let cy = pixels.iter().map(|p| p.3).sum::<f64>() / count;
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for p in &mut pixels {
            p.2 -= cx;
            p.3 -= cy;
            sxx += p.2 * p.2;
            sxy += p.2 * p.3;
            syy += p.3 * p.3;
        }
        let det = sxx * syy - sxy * sxy;
        // collinear pixels cannot pin down both tilts
        if det <= 1e-12 * (sxx * syy).max(1.0) {
            return None;
        }
        Some(Self {
            pixels,
            inv: [[syy / det, -sxy / det], [-sxy / det, sxx / det]],
        })
    }

    fn remove(&self, mut frame: ArrayViewMut2<'_, f64>) {
        let count = self.pixels.len() as f64;
        let (mut s, mut sx, mut sy) = (0.0, 0.0, 0.0);
        for &(y, x, xc, yc) in &self.pixels {
            let v = frame[[y, x]];
            s += v;
            sx += v * xc;
            sy += v * yc;
        }
        let piston = s / count;
        let tilt_x = self.inv[0][0] * sx + self.inv[0][1] * sy;
        let tilt_y = self.inv[1][0] * sx + self.inv[1][1] * sy;
        for &(y, x, xc, yc) in &self.pixels {
            frame[[y, x]] -= piston + tilt_x * xc + tilt_y * yc;
        }
    }
}

/// Subtract the best-fit plane `a + b*x + c*y` from every frame.
///
/// Invalid pixels are left untouched.
pub fn remove_ttp(series: &FrameSeries) -> Result<FrameSeries> {
    let fit = PlaneFit::new(series.ny(), series.nx(), series.mask()).ok_or(Error::DegenerateFit {
        frame: 0,
        valid: series.valid_count(),
    })?;
    let mut frames = series.frames().clone();
    frames
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .for_each(|frame| fit.remove(frame));
    Ok(series.with_frames(frames, series.mask().cloned()))
}

/// Remove the plane from a single full (unmasked) screen in place.
pub(crate) fn remove_plane_in_place(frame: ArrayViewMut2<'_, f64>) -> Result<()> {
    let (ny, nx) = frame.dim();
    let fit = PlaneFit::new(ny, nx, None).ok_or(Error::DegenerateFit {
        frame: 0,
        valid: ny * nx,
    })?;
    fit.remove(frame);
    Ok(())
}

/// Streamwise deflection angle from a central difference along `x`.
///
/// `theta_x = (lambda / 2 pi) * (phi[x+1] - phi[x-1]) / (2 delta)`. The two
/// boundary columns are dropped, so the output is `nx - 2` wide. An output
/// pixel is valid when both neighbours are valid.
pub fn slope_x(series: &FrameSeries) -> Result<FrameSeries> {
    let nx = series.nx();
    // nx == 3 would leave a single column, which is not a valid series
    if nx < 4 {
        return Err(Error::Shape(format!("slope_x needs nx >= 4, got {nx}")));
    }
    let scale = series.lambda_m() / (2.0 * PI) / (2.0 * series.delta_m());
    let f = series.frames();
    let out = (&f.slice(s![.., .., 2..]) - &f.slice(s![.., .., ..nx - 2])) * scale;
    let mask = series.mask().map(|m| {
        Array2::from_shape_fn((series.ny(), nx - 2), |(y, x)| m[[y, x]] && m[[y, x + 2]])
    });
    Ok(series.with_frames(out, mask))
}
