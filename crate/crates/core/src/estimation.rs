//! Recover `(L0, r0, vx, vy, alpha)` from a measured frame stack.
//!
//! The pipeline runs on the largest square inscribed in the aperture:
//!
//! 1. `L0` is the larger aperture side times the pixel spacing.
//! 2. `r0` inverts the Von Kármán law bin by bin against a Hamming-windowed
//!    spatial PSD and averages the result.
//! 3. The flow velocity is the peak of the lagged spatial cross-correlation,
//!    refined with a three-point parabola on each axis.
//! 4. `alpha` is the closed-form least-squares fit of each frame's modes to
//!    the shifted modes of the previous frame.

use std::fmt;

use ndarray::{Array2, Axis};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::fourier::{axis_freqs, Fft2};
use crate::metrics::welch::hamming;
use crate::parallel::chunked;
use crate::screens::BoilingParams;
use crate::series::{inscribe_square, remove_ttp, FrameSeries};

const FRAME_CHUNK: usize = 64;

/// Lag used by the velocity estimator unless overridden.
pub const DEFAULT_LAG: usize = 10;

/// Averaged spatial PSD on the DFT layout `[ky, kx]`, in rad^2 m^2.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumGrid {
    pub values: Array2<f64>,
    pub delta_m: f64,
}

impl SpectrumGrid {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }
}

/// Lagged cross-correlation indexed by pixel shift.
///
/// Shifts run over `-(K-1)..=(K-1)` on both axes. Each cell is normalized by
/// the number of frame pairs and by the number of in-bounds pixel pairs at
/// that shift.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationGrid {
    /// `values[[j + K - 1, i + K - 1]]` holds the shift `(i, j)` = `(x, y)`.
    pub values: Array2<f64>,
    pub k: usize,
    pub lag: usize,
}

impl CorrelationGrid {
    /// Value at x-shift `i` and y-shift `j`.
    pub fn get(&self, i: isize, j: isize) -> f64 {
        let off = self.k as isize - 1;
        self.values[[(j + off) as usize, (i + off) as usize]]
    }

    pub fn max_shift(&self) -> usize {
        self.k - 1
    }
}

/// `L0 = max(ny, nx) * delta` on the full rectangular aperture.
pub fn estimate_l0(series: &FrameSeries) -> f64 {
    series.ny().max(series.nx()) as f64 * series.delta_m()
}

/// Welch-style spatial PSD of a square, mask-free series.
///
/// Per frame: remove the spatial mean, apply a separable Hamming window,
/// take `|FFT|^2 / sum(H^2)`, and scale by `delta^2` to get per-m^2 units.
/// The result is the average over frames.
pub fn spatial_psd(series: &FrameSeries) -> Result<SpectrumGrid> {
    let k = series.require_full_square("spatial_psd")?;
    let h = hamming(k);
    let window = Array2::from_shape_fn((k, k), |(y, x)| h[y] * h[x]);
    let window_power: f64 = window.iter().map(|w| w * w).sum();
    let fft = Fft2::new(k, k);

    let partials = chunked(series.nt(), FRAME_CHUNK, |range| {
        let mut acc = Array2::<f64>::zeros((k, k));
        let mut buf = Array2::<Complex64>::zeros((k, k));
        for t in range {
            let frame = series.frame(t);
            let mean = frame.mean().expect("non-empty frame");
            buf.zip_mut_with(&frame, |b, &v| *b = Complex64::new(v - mean, 0.0));
            buf.zip_mut_with(&window, |b, &w| *b *= w);
            fft.forward(&mut buf);
            acc.zip_mut_with(&buf, |a, b| *a += b.norm_sqr());
        }
        acc
    });
    let mut total = Array2::<f64>::zeros((k, k));
    for p in &partials {
        total += p;
    }
    let delta = series.delta_m();
    let scale = delta * delta / (window_power * series.nt() as f64);
    total.mapv_inplace(|v| v * scale);
    Ok(SpectrumGrid {
        values: total,
        delta_m: delta,
    })
}

/// Axis indices kept in the `r0` average: every index whose `|f|` is not
/// among the three largest distinct magnitudes on that axis.
pub fn r0_axis_mask(n: usize) -> Vec<bool> {
    let f = axis_freqs(n);
    let mut mags: Vec<f64> = f.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    mags.dedup();
    let dropped = &mags[..mags.len().min(3)];
    f.iter().map(|v| !dropped.contains(&v.abs())).collect()
}

/// Average of the per-bin `r0` inversion of the Von Kármán law.
///
/// Excludes DC and every bin whose x or y frequency is among the three
/// largest magnitudes on its axis. Fails if an included bin is not positive.
pub fn estimate_r0(psd: &SpectrumGrid, l0_m: f64) -> Result<f64> {
    let n = psd.n();
    if !(l0_m.is_finite() && l0_m > 0.0) {
        return Err(invalid(format!("L0 must be positive, got {l0_m}")));
    }
    let f = axis_freqs(n);
    let keep = r0_axis_mask(n);
    let delta = psd.delta_m;
    let (mut sum, mut count) = (0.0, 0usize);
    for ((ky, kx), &s) in psd.values.indexed_iter() {
        if (ky, kx) == (0, 0) || !keep[kx] || !keep[ky] {
            continue;
        }
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::NonPositivePsd { ky, kx, value: s });
        }
        let (fx, fy) = (f[kx] / delta, f[ky] / delta);
        let model = 0.023 * (fx * fx + fy * fy + l0_m.powi(-2)).powf(-11.0 / 6.0);
        sum += (model / s).powf(0.6);
        count += 1;
    }
    if count == 0 {
        return Err(Error::Degenerate(format!(
            "no frequency bins left for the r0 average on a {n}x{n} grid"
        )));
    }
    Ok(sum / count as f64)
}

/// Lagged spatial cross-correlation of a square, mask-free series.
///
/// `R(i, j) = 1/(nt - L) * sum_n mean_{(r,s)} phi_n(r, s) * phi_{n-L}(r - i, s - j)`
/// with the inner mean over in-bounds pixel pairs only. Computed through a
/// zero-padded FFT so that no pair wraps around.
pub fn cross_correlation(series: &FrameSeries, lag: usize) -> Result<CorrelationGrid> {
    let k = series.require_full_square("cross_correlation")?;
    if lag < 1 || lag >= series.nt() {
        return Err(invalid(format!(
            "lag must satisfy 1 <= L < nt = {}, got {lag}",
            series.nt()
        )));
    }
    let p = 2 * k;
    let fft = Fft2::new(p, p);
    let pairs = series.nt() - lag;

    let load = |t: usize, buf: &mut Array2<Complex64>| {
        buf.fill(Complex64::new(0.0, 0.0));
        for ((y, x), &v) in series.frame(t).indexed_iter() {
            buf[[y, x]] = Complex64::new(v, 0.0);
        }
        fft.forward(buf);
    };
    let partials = chunked(pairs, FRAME_CHUNK, |range| {
        let mut acc = Array2::<Complex64>::zeros((p, p));
        let mut cur = Array2::<Complex64>::zeros((p, p));
        let mut prev = Array2::<Complex64>::zeros((p, p));
        for n in range.start + lag..range.end + lag {
            load(n, &mut cur);
            load(n - lag, &mut prev);
            ndarray::Zip::from(&mut acc)
                .and(&cur)
                .and(&prev)
                .for_each(|a, c, q| *a += c * q.conj());
        }
        acc
    });
    let mut total = Array2::<Complex64>::zeros((p, p));
    for part in &partials {
        total += part;
    }
    fft.inverse(&mut total);

    let side = 2 * k - 1;
    let off = k as isize - 1;
    let values = Array2::from_shape_fn((side, side), |(row, col)| {
        let j = row as isize - off;
        let i = col as isize - off;
        let wrap = |s: isize| s.rem_euclid(p as isize) as usize;
        let pixel_pairs = (k - i.unsigned_abs()) * (k - j.unsigned_abs());
        total[[wrap(j), wrap(i)]].re / (pairs as f64 * pixel_pairs as f64)
    });
    Ok(CorrelationGrid { values, k, lag })
}

/// Something the estimators could not resolve cleanly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimateWarning {
    /// The correlation peak sits on the edge of the search window along
    /// `axis` ('x' or 'y'); that component is the integer peak.
    PeakOnBoundary { axis: char },
    /// The three samples around the peak along `axis` are not concave; that
    /// component is the integer peak.
    NonConcavePeak { axis: char },
    /// The least-squares `alpha` fell outside `(0, 1]` and was clamped.
    AlphaClamped { raw: f64 },
}

impl fmt::Display for EstimateWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PeakOnBoundary { axis } => {
                write!(f, "correlation peak on the search boundary along {axis}; no sub-pixel refinement")
            }
            Self::NonConcavePeak { axis } => {
                write!(f, "non-concave correlation peak along {axis}; no sub-pixel refinement")
            }
            Self::AlphaClamped { raw } => write!(f, "least-squares alpha {raw} clamped into (0, 1]"),
        }
    }
}

/// Flow velocity recovered from a [`CorrelationGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityEstimate {
    pub vx_px: f64,
    pub vy_px: f64,
    /// Integer argmax `(i, j)` of the correlation.
    pub peak: (isize, isize),
    /// Refined sub-pixel shift `(i*, j*)`.
    pub refined: (f64, f64),
    pub warnings: Vec<EstimateWarning>,
}

/// Vertex offset of the parabola through `(-1, left)`, `(0, centre)`,
/// `(1, right)`, or `None` if the samples are not strictly concave or the
/// vertex leaves `[-1, 1]`.
pub fn parabola_vertex(left: f64, centre: f64, right: f64) -> Option<f64> {
    let curvature = left - 2.0 * centre + right;
    if !(curvature < 0.0) {
        return None;
    }
    let offset = (left - right) / (2.0 * curvature);
    (offset.abs() <= 1.0).then_some(offset)
}

/// Velocity from the correlation peak within `|i|, |j| <= K/2`.
pub fn estimate_velocity(corr: &CorrelationGrid) -> VelocityEstimate {
    estimate_velocity_within(corr, corr.k / 2)
}

/// Velocity from the correlation peak within `|i|, |j| <= max_shift`.
pub fn estimate_velocity_within(corr: &CorrelationGrid, max_shift: usize) -> VelocityEstimate {
    let limit = max_shift.clamp(1, corr.max_shift()) as isize;
    let mut peak = (0isize, 0isize);
    let mut best = f64::NEG_INFINITY;
    for j in -limit..=limit {
        for i in -limit..=limit {
            let v = corr.get(i, j);
            if v > best {
                best = v;
                peak = (i, j);
            }
        }
    }
    let mut warnings = Vec::new();
    let mut refine = |axis: char, at: isize, sample: &dyn Fn(isize) -> f64| -> f64 {
        if at.abs() == limit {
            warnings.push(EstimateWarning::PeakOnBoundary { axis });
            return at as f64;
        }
        match parabola_vertex(sample(at - 1), sample(at), sample(at + 1)) {
            Some(off) => at as f64 + off,
            None => {
                warnings.push(EstimateWarning::NonConcavePeak { axis });
                at as f64
            }
        }
    };
    let (pi, pj) = peak;
    let ri = refine('x', pi, &|i| corr.get(i, pj));
    let rj = refine('y', pj, &|j| corr.get(pi, j));
    let lag = corr.lag as f64;
    VelocityEstimate {
        vx_px: ri / lag,
        vy_px: rj / lag,
        peak,
        refined: (ri, rj),
        warnings,
    }
}

/// Least-squares boiling coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaEstimate {
    /// The value clamped into `(0, 1]`.
    pub alpha: f64,
    /// The unconstrained minimizer.
    pub raw: f64,
}

impl AlphaEstimate {
    pub fn clamped(&self) -> bool {
        self.alpha != self.raw
    }
}

/// Closed-form least-squares `alpha` over all bins and consecutive frame pairs:
///
/// `Re(sum conj(shift(F[n-1])) * F[n]) / sum |F[n-1]|^2`
///
/// where `shift` multiplies by `exp(-j 2 pi (vx fx + vy fy))`.
pub fn estimate_alpha(series: &FrameSeries, vx_px: f64, vy_px: f64) -> Result<AlphaEstimate> {
    let k = series.require_full_square("estimate_alpha")?;
    if series.nt() < 2 {
        return Err(invalid("estimate_alpha needs at least two frames"));
    }
    let f = axis_freqs(k);
    let ramp = |v: f64| -> Vec<Complex64> {
        f.iter()
            .map(|&fk| Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * v * fk))
            .collect()
    };
    let (ex, ey) = (ramp(vx_px), ramp(vy_px));
    let fft = Fft2::new(k, k);
    let load = |t: usize, buf: &mut Array2<Complex64>| {
        buf.zip_mut_with(&series.frame(t), |b, &v| *b = Complex64::new(v, 0.0));
        fft.forward(buf);
    };

    // pairs (t-1, t) for t in 1..nt
    let partials = chunked(series.nt() - 1, FRAME_CHUNK, |range| {
        let mut prev = Array2::<Complex64>::zeros((k, k));
        let mut cur = Array2::<Complex64>::zeros((k, k));
        load(range.start, &mut prev);
        let (mut num, mut den) = (0.0, 0.0);
        for t in range.start + 1..range.end + 1 {
            load(t, &mut cur);
            for (ky, (prow, crow)) in prev.axis_iter(Axis(0)).zip(cur.axis_iter(Axis(0))).enumerate() {
                for (kx, (p, c)) in prow.iter().zip(crow.iter()).enumerate() {
                    let shifted = ex[kx] * ey[ky] * p;
                    num += (shifted.conj() * c).re;
                    den += p.norm_sqr();
                }
            }
            std::mem::swap(&mut prev, &mut cur);
        }
        (num, den)
    });
    let (num, den) = partials
        .iter()
        .fold((0.0, 0.0), |(n, d), &(pn, pd)| (n + pn, d + pd));
    if !(den > 0.0) {
        return Err(Error::Degenerate("alpha regression has a zero denominator (all-zero frames)".into()));
    }
    let raw = num / den;
    Ok(AlphaEstimate {
        alpha: raw.clamp(f64::EPSILON, 1.0),
        raw,
    })
}

/// Knobs of [`estimate_params`].
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateOptions {
    /// Cross-correlation lag in time-steps.
    pub lag: usize,
    /// Velocity search half-width in pixels; `None` means `K/2`.
    pub max_shift: Option<usize>,
    /// Remove tilt, tip, and piston before estimating.
    pub remove_ttp: bool,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            lag: DEFAULT_LAG,
            max_shift: None,
            remove_ttp: false,
        }
    }
}

/// Everything [`estimate_params`] found, including intermediate results.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamEstimate {
    pub params: BoilingParams,
    /// Side of the inscribed square the estimators ran on.
    pub k: usize,
    pub velocity: VelocityEstimate,
    pub alpha: AlphaEstimate,
    pub warnings: Vec<EstimateWarning>,
}

/// Full estimation pipeline.
pub fn estimate_params(series: &FrameSeries, opts: &EstimateOptions) -> Result<ParamEstimate> {
    let detrended;
    let series = if opts.remove_ttp {
        detrended = remove_ttp(series)?;
        &detrended
    } else {
        series
    };
    let l0 = estimate_l0(series);
    let square = inscribe_square(series);
    let k = square.ny();

    let psd = spatial_psd(&square)?;
    let r0 = estimate_r0(&psd, l0)?;

    let corr = cross_correlation(&square, opts.lag)?;
    let velocity = estimate_velocity_within(&corr, opts.max_shift.unwrap_or(k / 2));
    let alpha = estimate_alpha(&square, velocity.vx_px, velocity.vy_px)?;

    let mut warnings = velocity.warnings.clone();
    if alpha.clamped() {
        warnings.push(EstimateWarning::AlphaClamped { raw: alpha.raw });
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(ParamEstimate {
        params: BoilingParams {
            l0_m: l0,
            r0_m: r0,
            vx_px: velocity.vx_px,
            vy_px: velocity.vy_px,
            alpha: alpha.alpha,
            delta_m: series.delta_m(),
        },
        k,
        velocity,
        alpha,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::screens::{frozen_shift, realize_screen, step_rng, von_karman_psd, white_noise};
    use crate::fourier::ModeField;
    use ndarray::Array3;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn series(frames: Array3<f64>, delta: f64) -> FrameSeries {
        FrameSeries::new(frames, delta, 1e5, 532e-9, None).unwrap()
    }

    #[test]
    fn l0_from_larger_side() {
        let s = series(Array3::zeros((1, 25, 34)), 2.24e-3);
        assert!((estimate_l0(&s) - 0.07616).abs() < 1e-12);
        let s = series(Array3::zeros((1, 21, 22)), 2.24e-3);
        assert!((estimate_l0(&s) - 0.04928).abs() < 1e-12);
        let s = series(Array3::zeros((1, 16, 16)), 0.5);
        assert_eq!(estimate_l0(&s), 8.0);
    }

    #[test]
    fn psd_of_constant_frames_is_zero() {
        let s = series(Array3::from_elem((3, 8, 8), 4.2), 1e-3);
        let psd = spatial_psd(&s).unwrap();
        assert!(psd.values.iter().all(|&v| v < 1e-25));
    }

    #[test]
    fn psd_rejects_rectangular_or_masked() {
        let s = series(Array3::zeros((1, 4, 5)), 1.0);
        assert!(matches!(spatial_psd(&s), Err(Error::Shape(_))));
        let mut m = Array2::from_elem((4, 4), true);
        m[[0, 0]] = false;
        let s = FrameSeries::new(Array3::zeros((1, 4, 4)), 1.0, 1.0, 1.0, Some(m)).unwrap();
        assert!(matches!(spatial_psd(&s), Err(Error::Shape(_))));
    }

    #[test]
    fn white_noise_psd_is_flat() {
        // For i.i.d. N(0, s^2) pixels, E|FFT(H x)|^2 = s^2 sum(H^2) at
        // non-DC bins (up to the small mean-removal correction), so the
        // scaled PSD level is s^2 delta^2.
        let (k, nt, sigma, delta) = (64, 200, 1.5, 2e-3);
        let mut rng = step_rng(17, 0);
        let frames = Array3::from_shape_fn((nt, k, k), |_| sigma * rng.sample::<f64, _>(StandardNormal));
        let psd = spatial_psd(&series(frames, delta)).unwrap();
        let level = sigma * sigma * delta * delta;
        let non_dc: Vec<f64> = psd.values.iter().skip(1).copied().collect();
        let mean = non_dc.iter().sum::<f64>() / non_dc.len() as f64;
        assert!((mean / level - 1.0).abs() < 0.1, "ratio {}", mean / level);
    }

    #[test]
    fn psd_localizes_a_tone() {
        let k = 32;
        let frames = Array3::from_shape_fn((1, k, k), |(_, _, x)| {
            (2.0 * std::f64::consts::PI * 4.0 * x as f64 / k as f64).cos()
        });
        let psd = spatial_psd(&series(frames, 1.0)).unwrap();
        let (mut best, mut at) = (0.0, (0, 0));
        for (idx, &v) in psd.values.indexed_iter() {
            if v > best {
                best = v;
                at = idx;
            }
        }
        assert!(at == (0, 4) || at == (0, k - 4), "{at:?}");
        assert!((psd.values[[0, 4]] - psd.values[[0, k - 4]]).abs() < 1e-9 * best);
    }

    fn params(r0: f64, l0: f64, delta: f64) -> BoilingParams {
        BoilingParams { l0_m: l0, r0_m: r0, vx_px: 0.0, vy_px: 0.0, alpha: 1.0, delta_m: delta }
    }

    fn analytic_grid(n: usize, p: &BoilingParams, scale: f64) -> SpectrumGrid {
        let f = axis_freqs(n);
        SpectrumGrid {
            values: Array2::from_shape_fn((n, n), |(ky, kx)| {
                scale * von_karman_psd(f[kx] / p.delta_m, f[ky] / p.delta_m, p)
            }),
            delta_m: p.delta_m,
        }
    }

    #[test]
    fn r0_inverts_the_model_exactly() {
        let p = params(0.20049, 0.07616, 2.24e-3);
        for n in [8, 25, 32] {
            let r0 = estimate_r0(&analytic_grid(n, &p, 1.0), p.l0_m).unwrap();
            assert!((r0 / p.r0_m - 1.0).abs() < 1e-10, "n={n}: {r0}");
        }
    }

    #[test]
    fn r0_scales_with_psd_power() {
        let p = params(0.13077, 0.04928, 2.24e-3);
        let c: f64 = 7.5;
        let r0 = estimate_r0(&analytic_grid(21, &p, c), p.l0_m).unwrap();
        assert!((r0 / (p.r0_m * c.powf(-0.6)) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn r0_exclusions() {
        // n=8: |f| in {0, 1/8, 1/4, 3/8, 1/2}; drop 1/2, 3/8, 1/4
        assert_eq!(r0_axis_mask(8), vec![true, true, false, false, false, false, false, true]);
        // n=5: |f| in {0, .2, .4}; dropping three leaves nothing
        assert!(r0_axis_mask(5).iter().all(|k| !k));
    }

    #[test]
    fn r0_names_nonpositive_bin() {
        let p = params(0.2, 0.07, 2e-3);
        let mut g = analytic_grid(16, &p, 1.0);
        g.values[[1, 2]] = 0.0;
        assert!(matches!(
            estimate_r0(&g, p.l0_m),
            Err(Error::NonPositivePsd { ky: 1, kx: 2, .. })
        ));
        // excluded bins may be anything
        let mut g = analytic_grid(16, &p, 1.0);
        g.values[[0, 0]] = 0.0;
        g.values[[8, 3]] = -1.0;
        assert!(estimate_r0(&g, p.l0_m).is_ok());
    }

    /// Direct evaluation of the lagged correlation with per-shift pair counts.
    fn brute_correlation(s: &FrameSeries, lag: usize) -> Array2<f64> {
        let k = s.ny() as isize;
        let side = (2 * k - 1) as usize;
        let f = s.frames();
        Array2::from_shape_fn((side, side), |(row, col)| {
            let j = row as isize - (k - 1);
            let i = col as isize - (k - 1);
            let mut total = 0.0;
            for n in lag..s.nt() {
                for y in 0..k {
                    for x in 0..k {
                        let (yy, xx) = (y - j, x - i);
                        if (0..k).contains(&yy) && (0..k).contains(&xx) {
                            total += f[[n, y as usize, x as usize]] * f[[n - lag, yy as usize, xx as usize]];
                        }
                    }
                }
            }
            let pairs = ((k - i.abs()) * (k - j.abs())) as f64;
            total / ((s.nt() - lag) as f64 * pairs)
        })
    }

    #[test]
    fn correlation_matches_brute_force() {
        let mut rng = step_rng(3, 0);
        let s = series(Array3::from_shape_fn((20, 7, 7), |_| rng.random_range(-1.0..1.0)), 1.0);
        for lag in [1, 3, 19] {
            let fast = cross_correlation(&s, lag).unwrap();
            let slow = brute_correlation(&s, lag);
            for (a, b) in fast.values.iter().zip(slow.iter()) {
                assert!((a - b).abs() < 1e-12, "lag {lag}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn correlation_rejects_bad_lag() {
        let s = series(Array3::zeros((5, 4, 4)), 1.0);
        assert!(cross_correlation(&s, 5).is_err());
        assert!(cross_correlation(&s, 0).is_err());
    }

    #[test]
    fn identical_frames_peak_at_zero() {
        let mut rng = step_rng(4, 0);
        let frame = Array2::from_shape_fn((9, 9), |_| rng.random_range(-1.0..1.0));
        let frames = Array3::from_shape_fn((12, 9, 9), |(_, y, x)| frame[[y, x]]);
        let corr = cross_correlation(&series(frames, 1.0), 4).unwrap();
        let v = estimate_velocity(&corr);
        assert_eq!(v.peak, (0, 0));
    }

    fn smooth_screen(n: usize, seed: u64) -> ModeField {
        // low-pass white noise so the correlation peak is broad
        let mut w = white_noise(n, &mut step_rng(seed, 0));
        let f = axis_freqs(n);
        for ((ky, kx), v) in w.indexed_iter_mut() {
            *v *= (-(f[kx] * f[kx] + f[ky] * f[ky]) * 60.0).exp();
        }
        ModeField::new(w).unwrap()
    }

    fn translated_series(n: usize, nt: usize, vx: f64, vy: f64, seed: u64) -> FrameSeries {
        let base = smooth_screen(n, seed);
        let mut frames = Array3::zeros((nt, n, n));
        for t in 0..nt {
            let screen = realize_screen(&frozen_shift(&base, vx * t as f64, vy * t as f64));
            frames.index_axis_mut(Axis(0), t).assign(&screen);
        }
        series(frames, 1.0)
    }

    #[test]
    fn circular_translation_peaks_at_lag_times_velocity() {
        let s = translated_series(48, 30, 2.0, 0.0, 5);
        let corr = cross_correlation(&s, 10).unwrap();
        let v = estimate_velocity(&corr);
        assert_eq!(v.peak, (20, 0));
    }

    #[test]
    fn subpixel_translation_peaks_at_nearest_integer() {
        let s = translated_series(16, 50, 0.33, -0.12, 6);
        let corr = cross_correlation(&s, 10).unwrap();
        let slow = brute_correlation(&s, 10);
        for (a, b) in corr.values.iter().zip(slow.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
        let v = estimate_velocity(&corr);
        assert_eq!(v.peak, (3, -1));
    }

    #[test]
    fn symmetric_parabola_vertex() {
        assert_eq!(parabola_vertex(0.7, 1.0, 0.7), Some(0.0));
    }

    #[test]
    fn asymmetric_parabola_vertex() {
        // Oracle: the quadratic a x^2 + b x + c through x = -1, 0, 1, then
        // -b / 2a, cross-checked by maximizing it on a dense grid.
        let ys: [f64; 3] = [0.8, 1.0, 0.9];
        let c = ys[1];
        let a = (ys[0] + ys[2]) / 2.0 - c;
        let b = (ys[2] - ys[0]) / 2.0;
        let vertex = -b / (2.0 * a);
        assert!((vertex - 1.0 / 6.0).abs() < 1e-15);
        let got = parabola_vertex(0.8, 1.0, 0.9).unwrap();
        assert!((got - 1.0 / 6.0).abs() < 1e-15);
        // dense-grid oracle: maximize the interpolating polynomial
        let best = (0..=20_000)
            .map(|i| -1.0 + i as f64 * 1e-4)
            .max_by(|p, q| (a * p * p + b * p).partial_cmp(&(a * q * q + b * q)).unwrap())
            .unwrap();
        assert!((got - best).abs() < 1e-4);
    }

    #[test]
    fn flat_or_convex_triples_are_rejected() {
        assert_eq!(parabola_vertex(1.0, 1.0, 1.0), None);
        assert_eq!(parabola_vertex(1.0, 0.5, 1.0), None);
    }

    #[test]
    fn boundary_peak_warns() {
        let k = 5;
        let mut values = Array2::zeros((2 * k - 1, 2 * k - 1));
        values[[4, 8]] = 1.0; // shift (4, 0)
        let corr = CorrelationGrid { values, k, lag: 2 };
        let v = estimate_velocity_within(&corr, 4);
        assert_eq!(v.peak, (4, 0));
        assert_eq!(v.vx_px, 2.0);
        assert!(v.warnings.contains(&EstimateWarning::PeakOnBoundary { axis: 'x' }));
    }

    #[test]
    fn exact_shift_gives_unit_alpha() {
        let s = translated_series(16, 12, 0.4, -0.3, 8);
        let a = estimate_alpha(&s, 0.4, -0.3).unwrap();
        assert!((a.raw - 1.0).abs() < 1e-10, "{}", a.raw);
        assert!(!a.clamped());
    }

    #[test]
    fn alpha_is_scale_invariant() {
        let mut rng = step_rng(12, 0);
        let frames = Array3::from_shape_fn((30, 8, 8), |_| rng.random_range(-1.0..1.0));
        let smooth = translated_series(8, 30, 0.5, 0.0, 2);
        let mixed = series(&frames * 0.3 + smooth.frames(), 1.0);
        let a = estimate_alpha(&mixed, 0.5, 0.0).unwrap();
        let b = estimate_alpha(&series(mixed.frames() * 123.0, 1.0), 0.5, 0.0).unwrap();
        assert!((a.raw - b.raw).abs() < 1e-12);
    }

    #[test]
    fn independent_frames_give_small_alpha() {
        let mut rng = step_rng(13, 0);
        let frames = Array3::from_shape_fn((2000, 32, 32), |_| rng.sample::<f64, _>(StandardNormal));
        let a = estimate_alpha(&series(frames, 1.0), 0.7, 0.1).unwrap();
        assert!(a.raw.abs() < 0.05, "{}", a.raw);
    }

    #[test]
    fn zero_series_is_degenerate() {
        let s = series(Array3::zeros((20, 8, 8)), 1.0);
        assert!(matches!(estimate_alpha(&s, 0.0, 0.0), Err(Error::Degenerate(_))));
        let err = estimate_params(&s, &EstimateOptions::default()).unwrap_err();
        assert_eq!(err.class(), crate::error::ErrorClass::Numeric);
    }
}
