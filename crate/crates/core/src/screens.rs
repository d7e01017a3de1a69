//! Von Kármán phase screens evolved with the boiling-flow recursion.
//!
//! Each step translates the previous Fourier modes by the flow velocity and
//! mixes in a fresh, spectrally shaped screen:
//!
//! ```text
//! modes[n] = alpha * exp(-j 2 pi (vx fx + vy fy)) * modes[n-1]
//!          + sqrt(1 - alpha^2) * P * w[n]
//! ```
//!
//! where `P` is [`scaling_field`] and `w[n]` is complex white noise with
//! independent standard-normal real and imaginary parts.
//!
//! # Random streams
//!
//! All randomness comes from ChaCha8 seeded with the run seed. Time-step `n`
//! draws from stream `n` of that generator, so any step can be reproduced
//! without replaying earlier ones. Within a step the noise is drawn in
//! row-major bin order, real part first.

use std::f64::consts::PI;

use ndarray::{s, Array2, Array3, Axis};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fourier::{axis_freqs, Fft2, ModeField};
use crate::series::{remove_plane_in_place, FrameSeries};

/// The five boiling-flow parameters plus the pixel spacing they refer to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoilingParams {
    /// Outer scale, meters.
    pub l0_m: f64,
    /// Fried coherence length, meters.
    pub r0_m: f64,
    /// Flow velocity along x, pixels per time-step.
    pub vx_px: f64,
    /// Flow velocity along y, pixels per time-step.
    pub vy_px: f64,
    /// Boiling coefficient in `(0, 1]`; 1 is pure frozen flow.
    pub alpha: f64,
    /// Pixel spacing, meters.
    pub delta_m: f64,
}

impl BoilingParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [("l0_m", self.l0_m), ("r0_m", self.r0_m), ("delta_m", self.delta_m)];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(invalid(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if !(self.vx_px.is_finite() && self.vy_px.is_finite()) {
            return Err(invalid("flow velocity must be finite"));
        }
        Ok(())
    }
}

/// Output size, length, and seed of a generated series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenSpec {
    /// Side of the square output screens, pixels.
    pub n_out: usize,
    pub n_steps: usize,
    pub seed: u64,
    /// Copied into the output series.
    pub lambda_m: f64,
    /// Copied into the output series.
    pub fs_hz: f64,
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_out < 2 {
            return Err(invalid(format!("n_out must be >= 2, got {}", self.n_out)));
        }
        if self.n_steps < 1 {
            return Err(invalid("n_steps must be >= 1"));
        }
        Ok(())
    }
}

/// Von Kármán spatial PSD at `(fx, fy)` in inverse meters, rad^2 m^2.
pub fn von_karman_psd(fx: f64, fy: f64, params: &BoilingParams) -> f64 {
    let k2 = fx * fx + fy * fy + params.l0_m.powi(-2);
    0.023 * params.r0_m.powf(-5.0 / 3.0) * k2.powf(-11.0 / 6.0)
}

/// Per-bin standard deviation of the modes, `sqrt(S(f/delta)) / (n delta)`,
/// on the DFT layout `[ky, kx]`.
pub fn scaling_field(params: &BoilingParams, n: usize) -> Result<Array2<f64>> {
    if n < 2 {
        return Err(invalid(format!("scaling field needs n >= 2, got {n}")));
    }
    let delta = params.delta_m;
    let f = axis_freqs(n);
    let pre = 1.0 / (n as f64 * delta);
    Ok(Array2::from_shape_fn((n, n), |(ky, kx)| {
        pre * von_karman_psd(f[kx] / delta, f[ky] / delta, params).sqrt()
    }))
}

/// Complex white noise, real and imaginary parts i.i.d. `N(0, 1)`.
pub fn white_noise<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Array2<Complex64> {
    let mut w = Array2::zeros((n, n));
    for v in w.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *v = Complex64::new(re, im);
    }
    w
}

/// A fresh Kolmogorov screen in the Fourier domain, `P * w`.
pub fn initial_modes<R: Rng + ?Sized>(params: &BoilingParams, n: usize, rng: &mut R) -> Result<ModeField> {
    params.validate()?;
    let p = scaling_field(params, n)?;
    Ok(ModeField::from_raw(shaped_noise(&p, rng)))
}

fn shaped_noise<R: Rng + ?Sized>(p: &Array2<f64>, rng: &mut R) -> Array2<Complex64> {
    let mut w = white_noise(p.nrows(), rng);
    w.zip_mut_with(p, |w, &p| *w *= p);
    w
}

/// Per-axis factors whose outer product is `exp(-j 2 pi (vx fx + vy fy))`.
fn shift_phases(n: usize, vx: f64, vy: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let f = axis_freqs(n);
    let ramp = |v: f64| -> Vec<Complex64> {
        f.iter()
            .map(|&fk| Complex64::from_polar(1.0, -2.0 * PI * v * fk))
            .collect()
    };
    (ramp(vx), ramp(vy))
}

fn apply_shift(modes: &mut Array2<Complex64>, ex: &[Complex64], ey: &[Complex64]) {
    for (ky, mut row) in modes.axis_iter_mut(Axis(0)).enumerate() {
        for (kx, v) in row.iter_mut().enumerate() {
            *v *= ex[kx] * ey[ky];
        }
    }
}

/// Translate the screen by `(vx, vy)` pixels via a linear phase ramp.
pub fn frozen_shift(modes: &ModeField, vx_px: f64, vy_px: f64) -> ModeField {
    let (ex, ey) = shift_phases(modes.n(), vx_px, vy_px);
    let mut out = modes.modes().clone();
    apply_shift(&mut out, &ex, &ey);
    ModeField::from_raw(out)
}

/// One boiling-flow step. With `alpha == 1` no noise is drawn and the result
/// is exactly [`frozen_shift`].
pub fn boiling_step<R: Rng + ?Sized>(
    modes: &ModeField,
    params: &BoilingParams,
    rng: &mut R,
) -> Result<ModeField> {
    params.validate()?;
    let p = scaling_field(params, modes.n())?;
    let (ex, ey) = shift_phases(modes.n(), params.vx_px, params.vy_px);
    let mut out = modes.modes().clone();
    step_in_place(&mut out, params.alpha, &p, &ex, &ey, rng);
    Ok(ModeField::from_raw(out))
}

fn step_in_place<R: Rng + ?Sized>(
    modes: &mut Array2<Complex64>,
    alpha: f64,
    p: &Array2<f64>,
    ex: &[Complex64],
    ey: &[Complex64],
    rng: &mut R,
) {
    apply_shift(modes, ex, ey);
    if alpha == 1.0 {
        return;
    }
    let fresh = (1.0 - alpha * alpha).sqrt();
    for (m, &p) in modes.iter_mut().zip(p.iter()) {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *m = *m * alpha + Complex64::new(re, im) * (fresh * p);
    }
}

/// Real part of the normalized inverse DFT (`1/n^2` factor).
pub fn realize_screen(modes: &ModeField) -> Array2<f64> {
    let n = modes.n();
    let mut buf = modes.modes().clone();
    Fft2::new(n, n).inverse(&mut buf);
    buf.mapv(|c| c.re)
}

/// Real part of the unnormalized inverse DFT: `n^2 * realize_screen(modes)`.
///
/// This is the screen [`generate_series`] emits. With modes drawn as
/// `P * w`, its Welch spatial PSD (as computed by
/// [`spatial_psd`](crate::estimation::spatial_psd)) has expectation equal to
/// [`von_karman_psd`], so estimating parameters from generated data recovers
/// the generating `r0`.
pub fn synthesize_screen(modes: &ModeField) -> Array2<f64> {
    let n = modes.n();
    let mut buf = modes.modes().clone();
    Fft2::new(n, n).inverse_unnormalized(&mut buf);
    buf.mapv(|c| c.re)
}

/// The random generator for time-step `step` of a run seeded with `seed`.
pub fn step_rng(seed: u64, step: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(step);
    rng
}

/// Recursion state of one boiling-flow run on an `n x n` mode grid.
#[derive(Debug, Clone)]
pub struct BoilingFlow {
    params: BoilingParams,
    seed: u64,
    step: u64,
    scale: Array2<f64>,
    ex: Vec<Complex64>,
    ey: Vec<Complex64>,
    modes: Array2<Complex64>,
    fft: Fft2,
}

impl BoilingFlow {
    /// Draws the initial screen from stream 0.
    pub fn new(params: BoilingParams, n: usize, seed: u64) -> Result<Self> {
        params.validate()?;
        let scale = scaling_field(&params, n)?;
        let (ex, ey) = shift_phases(n, params.vx_px, params.vy_px);
        let modes = shaped_noise(&scale, &mut step_rng(seed, 0));
        Ok(Self {
            params,
            seed,
            step: 0,
            scale,
            ex,
            ey,
            modes,
            fft: Fft2::new(n, n),
        })
    }

    /// Index of the current modes; 0 right after construction.
    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn modes(&self) -> ModeField {
        ModeField::from_raw(self.modes.clone())
    }

    /// Advance one time-step.
    pub fn advance(&mut self) {
        self.step += 1;
        let mut rng = step_rng(self.seed, self.step);
        step_in_place(&mut self.modes, self.params.alpha, &self.scale, &self.ex, &self.ey, &mut rng);
    }

    /// Current screen as [`synthesize_screen`] would produce it.
    pub fn screen(&self) -> Array2<f64> {
        let mut buf = self.modes.clone();
        self.fft.inverse_unnormalized(&mut buf);
        buf.mapv(|c| c.re)
    }
}

/// Generate a time-series of `n_out x n_out` screens.
///
/// The recursion runs on a grid of side `2 * n_out`; each step's screen is
/// cropped to its top-left quadrant and then has tilt, tip, and piston
/// removed. The output series carries `params.delta_m` and the metadata of
/// `spec`.
pub fn generate_series(params: &BoilingParams, spec: &GenSpec) -> Result<FrameSeries> {
    spec.validate()?;
    let n = spec.n_out;
    let mut flow = BoilingFlow::new(*params, 2 * n, spec.seed)?;
    let mut frames = Array3::zeros((spec.n_steps, n, n));
    for (t, mut frame) in frames.axis_iter_mut(Axis(0)).enumerate() {
        if t > 0 {
            flow.advance();
        }
        let screen = flow.screen();
        frame.assign(&screen.slice(s![..n, ..n]));
        remove_plane_in_place(frame)?;
    }
    FrameSeries::new(frames, params.delta_m, spec.fs_hz, spec.lambda_m, None)
}
