//! Welch temporal PSDs of single signals and of whole apertures.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Result};
use crate::parallel::chunked;
use crate::series::FrameSeries;

/// Symmetric Hamming window, `0.54 - 0.46 cos(2 pi i / (m - 1))`.
pub fn hamming(m: usize) -> Vec<f64> {
    if m == 1 {
        return vec![1.0];
    }
    let denom = (m - 1) as f64;
    (0..m)
        .map(|i| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / denom).cos())
        .collect()
}

/// One-sided temporal PSD.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumCurve {
    /// Bin frequencies in Hz, `k * fs / block_len` for `k = 0..=block_len/2`.
    pub freqs: Vec<f64>,
    /// Power per Hz at each bin.
    pub power: Vec<f64>,
    pub block_len: usize,
    pub fs_hz: f64,
}

impl SpectrumCurve {
    pub fn len(&self) -> usize {
        self.power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }

    /// Bin spacing in Hz.
    pub fn bin_width(&self) -> f64 {
        self.fs_hz / self.block_len as f64
    }
}

/// Window, plan, and normalization shared by every signal of one estimate.
pub(crate) struct WelchPlan {
    block_len: usize,
    window: Vec<f64>,
    window_power: f64,
    fft: Arc<dyn Fft<f64>>,
}

impl WelchPlan {
    pub(crate) fn new(block_len: usize) -> Result<Self> {
        if block_len < 4 {
            return Err(invalid(format!("block length must be >= 4, got {block_len}")));
        }
        let window = hamming(block_len);
        let window_power = window.iter().map(|w| w * w).sum();
        Ok(Self {
            block_len,
            window,
            window_power,
            fft: FftPlanner::new().plan_fft_forward(block_len),
        })
    }

    pub(crate) fn one_sided_len(&self) -> usize {
        self.block_len / 2 + 1
    }

    /// Consecutive blocks share `block_len / 2` samples.
    fn hop(&self) -> usize {
        self.block_len - self.block_len / 2
    }

    /// Block-averaged two-sided periodogram, power per sample.
    ///
    /// The mean is removed over the whole signal, not per block. Samples
    /// past the last full block are ignored.
    pub(crate) fn two_sided(&self, signal: &[f64]) -> Result<Vec<f64>> {
        let nb = self.block_len;
        if signal.len() < nb {
            return Err(invalid(format!(
                "signal of {} samples is shorter than one block of {nb}",
                signal.len()
            )));
        }
        let mean = signal.iter().sum::<f64>() / signal.len() as f64;
        let mut acc = vec![0.0; nb];
        let mut buf = vec![Complex64::new(0.0, 0.0); nb];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        let mut blocks = 0usize;
        let mut start = 0;
        while start + nb <= signal.len() {
            for ((b, &x), &w) in buf.iter_mut().zip(&signal[start..start + nb]).zip(&self.window) {
                *b = Complex64::new((x - mean) * w, 0.0);
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += b.norm_sqr();
            }
            blocks += 1;
            start += self.hop();
        }
        let scale = 1.0 / (self.window_power * blocks as f64);
        acc.iter_mut().for_each(|a| *a *= scale);
        Ok(acc)
    }

    /// One-sided density in power per Hz: bins `0..=nb/2`, interior bins
    /// doubled, DC and (even `nb`) Nyquist not.
    pub(crate) fn one_sided(&self, signal: &[f64], fs_hz: f64) -> Result<Vec<f64>> {
        let two = self.two_sided(signal)?;
        let nb = self.block_len;
        Ok((0..self.one_sided_len())
            .map(|k| {
                let doubled = k != 0 && !(nb % 2 == 0 && k == nb / 2);
                let p = two[k] / fs_hz;
                if doubled {
                    2.0 * p
                } else {
                    p
                }
            })
            .collect())
    }

    pub(crate) fn curve(&self, power: Vec<f64>, fs_hz: f64) -> SpectrumCurve {
        let nb = self.block_len;
        SpectrumCurve {
            freqs: (0..power.len()).map(|k| k as f64 * fs_hz / nb as f64).collect(),
            power,
            block_len: nb,
            fs_hz,
        }
    }
}

/// Welch TPSD of one signal: 50% overlapping Hamming-windowed blocks of
/// `block_len` samples, scaled to power per Hz and folded to one side.
pub fn welch_tpsd(signal: &[f64], fs_hz: f64, block_len: usize) -> Result<SpectrumCurve> {
    if !(fs_hz.is_finite() && fs_hz > 0.0) {
        return Err(invalid(format!("sampling frequency must be positive, got {fs_hz}")));
    }
    let plan = WelchPlan::new(block_len)?;
    let power = plan.one_sided(signal, fs_hz)?;
    Ok(plan.curve(power, fs_hz))
}

const PIXEL_CHUNK: usize = 16;

/// Aperture-average of the per-pixel Welch TPSD, valid pixels weighted
/// equally.
pub fn field_tpsd(series: &FrameSeries, block_len: usize) -> Result<SpectrumCurve> {
    let plan = WelchPlan::new(block_len)?;
    if series.nt() < block_len {
        return Err(invalid(format!(
            "series of {} frames is shorter than one block of {block_len}",
            series.nt()
        )));
    }
    let pixels: Vec<(usize, usize)> = (0..series.ny())
        .flat_map(|y| (0..series.nx()).map(move |x| (y, x)))
        .filter(|&(y, x)| series.is_valid(y, x))
        .collect();
    if pixels.is_empty() {
        return Err(invalid("aperture has no valid pixels"));
    }
    let fs = series.fs_hz();
    let partials = chunked(pixels.len(), PIXEL_CHUNK, |range| -> Result<Vec<f64>> {
        let mut acc = vec![0.0; plan.one_sided_len()];
        for &(y, x) in &pixels[range] {
            let curve = plan.one_sided(&series.pixel_series(y, x), fs)?;
            acc.iter_mut().zip(&curve).for_each(|(a, c)| *a += c);
        }
        Ok(acc)
    });
    let mut total = vec![0.0; plan.one_sided_len()];
    for part in partials {
        total.iter_mut().zip(&part?).for_each(|(t, p)| *t += p);
    }
    let n = pixels.len() as f64;
    total.iter_mut().for_each(|t| *t /= n);
    Ok(plan.curve(total, fs))
}

/// Welch block lengths for the phase and slope TPSDs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockLengths {
    pub phase: usize,
    pub slope: usize,
}

/// Named block-length presets matching the two reference wind-tunnel data
/// sets (100 kHz and 130 kHz sampling).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    F06,
    F12,
}

impl Preset {
    pub fn block_lengths(self) -> BlockLengths {
        match self {
            Preset::F06 => BlockLengths { phase: 596, slope: 298 },
            Preset::F12 => BlockLengths { phase: 994, slope: 496 },
        }
    }
}
