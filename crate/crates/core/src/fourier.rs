//! DFT frequency layout, complex mode fields, and a small 2-D FFT wrapper.
//!
//! Frequencies are in cycles per sample and follow the standard DFT order:
//! index 0 is DC, indices `1..=(n-1)/2` are positive, the rest negative. For
//! even `n` the Nyquist index `n/2` is stored as `-1/2`.
//!
//! The forward transform is unnormalized; [`Fft2::inverse`] carries the
//! `1/(ny*nx)` factor so that `inverse(forward(x)) == x`.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Result};

/// DFT-ordered frequency bins of a square `n x n` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    n: usize,
    freqs: Vec<f64>,
}

/// Build the frequency grid for side length `n`.
pub fn freq_bins(n: usize) -> Result<FrequencyGrid> {
    if n < 2 {
        return Err(invalid(format!("frequency grid needs n >= 2, got {n}")));
    }
    Ok(FrequencyGrid {
        n,
        freqs: axis_freqs(n),
    })
}

/// One axis of DFT frequencies, cycles per sample.
pub(crate) fn axis_freqs(n: usize) -> Vec<f64> {
    let nf = n as f64;
    (0..n)
        .map(|k| {
            // k >= n/2 (including Nyquist for even n) maps to negative
            if 2 * k < n {
                k as f64 / nf
            } else {
                (k as f64 - nf) / nf
            }
        })
        .collect()
}

impl FrequencyGrid {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Frequencies along one axis, in DFT order.
    pub fn axis(&self) -> &[f64] {
        &self.freqs
    }

    /// The `(f_x, f_y)` pair for column `kx` and row `ky`.
    pub fn bin(&self, kx: usize, ky: usize) -> (f64, f64) {
        (self.freqs[kx], self.freqs[ky])
    }

    /// All `n^2` bins, row-major over `(ky, kx)`.
    pub fn bins(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.freqs
            .iter()
            .flat_map(move |&fy| self.freqs.iter().map(move |&fx| (fx, fy)))
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Spatial Fourier modes of one screen at one time-step.
///
/// Indexed `[ky, kx]` on the [`FrequencyGrid`] layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeField {
    modes: Array2<Complex64>,
}

impl ModeField {
    pub fn new(modes: Array2<Complex64>) -> Result<Self> {
        let (ny, nx) = modes.dim();
        if ny != nx || ny < 2 {
            return Err(invalid(format!("mode field must be square n x n with n >= 2, got {ny}x{nx}")));
        }
        if modes.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(invalid("mode field has non-finite entries"));
        }
        Ok(Self { modes })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(Array2::zeros((n, n)))
    }

    /// Forward DFT of a real square screen.
    pub fn from_screen(screen: &Array2<f64>) -> Result<Self> {
        let (ny, nx) = screen.dim();
        if ny != nx {
            return Err(invalid(format!("screen must be square, got {ny}x{nx}")));
        }
        let mut buf = screen.mapv(|v| Complex64::new(v, 0.0));
        Fft2::new(ny, nx).forward(&mut buf);
        Self::new(buf)
    }

    pub fn n(&self) -> usize {
        self.modes.nrows()
    }

    pub fn modes(&self) -> &Array2<Complex64> {
        &self.modes
    }

    pub fn into_inner(self) -> Array2<Complex64> {
        self.modes
    }

    pub(crate) fn from_raw(modes: Array2<Complex64>) -> Self {
        Self { modes }
    }
}

/// Planned forward and inverse 2-D FFTs of a fixed `ny x nx` shape.
///
/// Plans are shared (`Arc`) so a single `Fft2` can be used from several
/// threads; each call allocates its own scratch.
#[derive(Clone)]
pub struct Fft2 {
    ny: usize,
    nx: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("ny", &self.ny).field("nx", &self.nx).finish()
    }
}

impl Fft2 {
    pub fn new(ny: usize, nx: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            ny,
            nx,
            row_fwd: planner.plan_fft_forward(nx),
            row_inv: planner.plan_fft_inverse(nx),
            col_fwd: planner.plan_fft_forward(ny),
            col_inv: planner.plan_fft_inverse(ny),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.ny, self.nx)
    }

    /// Unnormalized forward transform, in place.
    pub fn forward(&self, data: &mut Array2<Complex64>) {
        self.run(data, &self.row_fwd, &self.col_fwd);
    }

    /// Unnormalized inverse transform, in place (no `1/(ny*nx)` factor).
    pub fn inverse_unnormalized(&self, data: &mut Array2<Complex64>) {
        self.run(data, &self.row_inv, &self.col_inv);
    }

    /// Inverse transform with the `1/(ny*nx)` factor, in place.
    pub fn inverse(&self, data: &mut Array2<Complex64>) {
        self.inverse_unnormalized(data);
        let scale = 1.0 / (self.ny * self.nx) as f64;
        data.mapv_inplace(|c| c * scale);
    }

    fn run(&self, data: &mut Array2<Complex64>, rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.dim(), (self.ny, self.nx), "Fft2 shape mismatch");
        if !data.is_standard_layout() {
            *data = data.as_standard_layout().into_owned();
        }
        let slice = data.as_slice_mut().expect("standard layout");
        let scratch_len = rows
            .get_inplace_scratch_len()
            .max(cols.get_inplace_scratch_len());
        let mut scratch = vec![Complex64::new(0.0, 0.0); scratch_len];
        rows.process_with_scratch(slice, &mut scratch);

        let mut transposed = vec![Complex64::new(0.0, 0.0); self.ny * self.nx];
        transpose(slice, &mut transposed, self.ny, self.nx);
        cols.process_with_scratch(&mut transposed, &mut scratch);
        transpose(&transposed, slice, self.nx, self.ny);
    }
}

/// `src` is `rows x cols` row-major; `dst` becomes `cols x rows`.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
}
