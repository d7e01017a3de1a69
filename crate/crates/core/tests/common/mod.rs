//! Reference implementations shared by the integration tests. Everything
//! here is written as directly as possible (nested loops, naive DFTs) and
//! shares no code with the library beyond its data types.

#![allow(dead_code)]

use std::f64::consts::PI;

use ndarray::{Array2, Array3};
use phscrn::screens::{generate_series, BoilingParams, GenSpec};
use phscrn::FrameSeries;

pub const DELTA_M: f64 = 2.24e-3;
pub const FS_HZ: f64 = 1e5;
pub const LAMBDA_M: f64 = 532e-9;

/// Parameters in the range of the F06 wind-tunnel estimates.
pub fn f06_like() -> BoilingParams {
    BoilingParams {
        l0_m: 0.07616,
        r0_m: 0.20049,
        vx_px: 1.11919,
        vy_px: -0.01313,
        alpha: 0.91126,
        delta_m: DELTA_M,
    }
}

pub fn generate(params: &BoilingParams, n_out: usize, n_steps: usize, seed: u64) -> FrameSeries {
    let spec = GenSpec { n_out, n_steps, seed, lambda_m: LAMBDA_M, fs_hz: FS_HZ };
    generate_series(params, &spec).expect("valid generation inputs")
}

/// `max |a - b| / max |b|`.
pub fn normwise_rel<'a>(a: impl IntoIterator<Item = &'a f64>, b: impl IntoIterator<Item = &'a f64>) -> f64 {
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for (x, y) in a.into_iter().zip(b) {
        num = num.max((x - y).abs());
        den = den.max(y.abs());
    }
    num / den
}

/// Lagged correlation by nested loops, indexed `[j + k - 1, i + k - 1]`
/// where `i` is the x shift: mean over in-bounds pixels of
/// `phi_n(y + j, x + i) * phi_{n-lag}(y, x)`, then mean over `n`.
pub fn brute_correlation(frames: &Array3<f64>, lag: usize) -> Array2<f64> {
    let (nt, k, _) = frames.dim();
    let k = k as isize;
    let mut out = Array2::zeros((2 * k as usize - 1, 2 * k as usize - 1));
    for j in -(k - 1)..k {
        for i in -(k - 1)..k {
            let mut total = 0.0;
            for n in lag..nt {
                let mut s = 0.0;
                for y in 0..k {
                    for x in 0..k {
                        let (yy, xx) = (y + j, x + i);
                        if (0..k).contains(&yy) && (0..k).contains(&xx) {
                            s += frames[[n, yy as usize, xx as usize]] * frames[[n - lag, y as usize, x as usize]];
                        }
                    }
                }
                total += s / ((k - i.abs()) * (k - j.abs())) as f64;
            }
            out[[(j + k - 1) as usize, (i + k - 1) as usize]] = total / (nt - lag) as f64;
        }
    }
    out
}

/// One-sided Welch PSD with a naive DFT per block.
pub fn brute_welch(signal: &[f64], fs: f64, nb: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..nb)
        .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (nb - 1) as f64).cos())
        .collect();
    let u: f64 = w.iter().map(|v| v * v).sum();
    let mean = signal.iter().sum::<f64>() / signal.len() as f64;
    let hop = nb - nb / 2;
    let mut acc = vec![0.0; nb / 2 + 1];
    let mut blocks = 0;
    let mut start = 0;
    while start + nb <= signal.len() {
        for (k, a) in acc.iter_mut().enumerate() {
            let (mut re, mut im) = (0.0, 0.0);
            for t in 0..nb {
                let v = (signal[start + t] - mean) * w[t];
                let ang = -2.0 * PI * (k * t) as f64 / nb as f64;
                re += v * ang.cos();
                im += v * ang.sin();
            }
            *a += re * re + im * im;
        }
        blocks += 1;
        start += hop;
    }
    acc.iter()
        .enumerate()
        .map(|(k, a)| {
            let edge = k == 0 || (nb % 2 == 0 && k == nb / 2);
            let p = a / (u * blocks as f64 * fs);
            if edge {
                p
            } else {
                2.0 * p
            }
        })
        .collect()
}

/// Structure function of the sigma-normalized series by direct pair sums,
/// on the half-plane grid `[y, x + nx - 1]`, with pair counts.
pub fn brute_structure(frames: &Array3<f64>, mask: Option<&Array2<bool>>) -> (Array2<f64>, Array2<u64>) {
    let (nt, ny, nx) = frames.dim();
    let valid = |y: usize, x: usize| mask.is_none_or(|m| m[[y, x]]);
    let mut z = Array3::<f64>::zeros((nt, ny, nx));
    for y in 0..ny {
        for x in 0..nx {
            if !valid(y, x) {
                continue;
            }
            let mean = (0..nt).map(|t| frames[[t, y, x]]).sum::<f64>() / nt as f64;
            let var = (0..nt).map(|t| (frames[[t, y, x]] - mean).powi(2)).sum::<f64>() / nt as f64;
            for t in 0..nt {
                z[[t, y, x]] = (frames[[t, y, x]] - mean) / var.sqrt();
            }
        }
    }
    let mut d = Array2::zeros((ny, 2 * nx - 1));
    let mut c = Array2::<u64>::zeros((ny, 2 * nx - 1));
    for dy in 0..ny as isize {
        for dx in -(nx as isize - 1)..nx as isize {
            let (mut sum, mut count) = (0.0, 0u64);
            for y in 0..ny as isize {
                for x in 0..nx as isize {
                    let (y2, x2) = (y + dy, x + dx);
                    if y2 >= ny as isize || x2 < 0 || x2 >= nx as isize {
                        continue;
                    }
                    let (a, b) = ((y as usize, x as usize), (y2 as usize, x2 as usize));
                    if !valid(a.0, a.1) || !valid(b.0, b.1) {
                        continue;
                    }
                    sum += (0..nt).map(|t| (z[[t, b.0, b.1]] - z[[t, a.0, a.1]]).powi(2)).sum::<f64>() / nt as f64;
                    count += 1;
                }
            }
            let cell = [dy as usize, (dx + nx as isize - 1) as usize];
            d[cell] = if count > 0 { sum / count as f64 } else { 0.0 };
            c[cell] = count;
        }
    }
    (d, c)
}

/// Frame-averaged raw periodogram `|DFT(phi - mean)|^2 * delta^2 / k^2`,
/// computed with separable naive DFTs, indexed `[ky, kx]`.
pub fn raw_periodogram(series: &FrameSeries) -> Array2<f64> {
    let k = series.ny();
    let tw: Vec<(f64, f64)> = (0..k)
        .map(|m| {
            let a = -2.0 * PI * m as f64 / k as f64;
            (a.cos(), a.sin())
        })
        .collect();
    let mut acc = Array2::<f64>::zeros((k, k));
    for t in 0..series.nt() {
        let f = series.frame(t);
        let mean = f.sum() / (k * k) as f64;
        // rows
        let mut rows = vec![(0.0, 0.0); k * k];
        for y in 0..k {
            for kx in 0..k {
                let (mut re, mut im) = (0.0, 0.0);
                for x in 0..k {
                    let (c, s) = tw[kx * x % k];
                    let v = f[[y, x]] - mean;
                    re += v * c;
                    im += v * s;
                }
                rows[y * k + kx] = (re, im);
            }
        }
        for ky in 0..k {
            for kx in 0..k {
                let (mut re, mut im) = (0.0, 0.0);
                for y in 0..k {
                    let (c, s) = tw[ky * y % k];
                    let (a, b) = rows[y * k + kx];
                    re += a * c - b * s;
                    im += a * s + b * c;
                }
                acc[[ky, kx]] += re * re + im * im;
            }
        }
    }
    let d = series.delta_m();
    acc.mapv(|v| v * d * d / ((k * k) as f64 * series.nt() as f64))
}

/// Signed DFT frequency of index `m` on an axis of `n` bins, cycles per
/// sample, with the Nyquist bin negative.
pub fn dft_freq(m: usize, n: usize) -> f64 {
    if 2 * m < n {
        m as f64 / n as f64
    } else {
        m as f64 / n as f64 - 1.0
    }
}
