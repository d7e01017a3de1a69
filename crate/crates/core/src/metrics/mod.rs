//! Fidelity metrics comparing synthetic screens with measured data: Welch
//! temporal PSDs of the phase and its streamwise slope, the anisotropic
//! structure function, and their stable-range-normalized RMSE.

pub mod nrmse;
pub mod structure;
pub mod welch;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::{slope_x, FrameSeries};

pub use nrmse::{nrmse_stable, percentile, PERCENTILE_RULE};
pub use structure::{anisotropic_structure, StructureGrid};
pub use welch::{field_tpsd, hamming, welch_tpsd, BlockLengths, Preset, SpectrumCurve};

/// Metric names, in report order.
pub const METRIC_NAMES: [&str; 3] = [
    "NRMSE(S_theta_x, S_hat_theta_x)",
    "NRMSE(S_phi, S_hat_phi)",
    "NRMSE(D^1/2_phi/sigma, D_hat^1/2_phi/sigma)",
];

/// The three error scalars.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorMetrics {
    /// Slope (deflection-angle) TPSD error.
    pub slope_tpsd: f64,
    /// Phase TPSD error.
    pub phase_tpsd: f64,
    /// Error between square roots of the structure functions.
    pub structure: f64,
}

impl ErrorMetrics {
    /// `(name, value)` rows in report order.
    pub fn rows(&self) -> [(&'static str, f64); 3] {
        [
            (METRIC_NAMES[0], self.slope_tpsd),
            (METRIC_NAMES[1], self.phase_tpsd),
            (METRIC_NAMES[2], self.structure),
        ]
    }
}

/// Curves and grid of one dataset (ensembles are averaged).
#[derive(Debug, Clone, PartialEq)]
pub struct Statistics {
    pub slope_tpsd: SpectrumCurve,
    pub phase_tpsd: SpectrumCurve,
    pub structure: StructureGrid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub metrics: ErrorMetrics,
    pub measured: Statistics,
    pub synthetic: Statistics,
    pub block_lengths: BlockLengths,
    pub ensemble_size: usize,
}

/// Statistics of one series.
pub fn statistics(series: &FrameSeries, blocks: BlockLengths) -> Result<Statistics> {
    Ok(Statistics {
        slope_tpsd: field_tpsd(&slope_x(series)?, blocks.slope)?,
        phase_tpsd: field_tpsd(series, blocks.phase)?,
        structure: anisotropic_structure(series)?,
    })
}

fn check_compatible(measured: &FrameSeries, synthetic: &FrameSeries) -> Result<()> {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs());
    for (name, a, b) in [
        ("pixel spacing", measured.delta_m(), synthetic.delta_m()),
        ("sampling frequency", measured.fs_hz(), synthetic.fs_hz()),
        ("wavelength", measured.lambda_m(), synthetic.lambda_m()),
    ] {
        if !close(a, b) {
            return Err(Error::Metadata(format!("{name} differs: measured {a}, synthetic {b}")));
        }
    }
    if synthetic.ny() < measured.ny() || synthetic.nx() < measured.nx() {
        return Err(Error::Metadata(format!(
            "synthetic screens {}x{} are smaller than the measured aperture {}x{}",
            synthetic.ny(),
            synthetic.nx(),
            measured.ny(),
            measured.nx()
        )));
    }
    Ok(())
}

/// Restrict a synthetic series to the measured aperture: top-left crop and
/// the measured mask.
pub fn conform_to(measured: &FrameSeries, synthetic: &FrameSeries) -> Result<FrameSeries> {
    check_compatible(measured, synthetic)?;
    let cropped = synthetic.crop(0, 0, measured.ny(), measured.nx())?;
    cropped.with_mask(measured.mask().cloned())
}

/// Score a synthetic ensemble against measured data.
///
/// Every ensemble member is cropped to the measured aperture; its curves and
/// grid are averaged across the ensemble before scoring.
pub fn evaluate_pair(
    measured: &FrameSeries,
    synthetic: &[FrameSeries],
    blocks: BlockLengths,
) -> Result<EvaluationReport> {
    evaluate_ensemble(measured, synthetic.iter().map(|s| Ok(s.clone())), blocks)
}

/// [`evaluate_pair`] over members produced one at a time, so that only one
/// synthetic series needs to be in memory.
pub fn evaluate_ensemble<I>(measured: &FrameSeries, synthetic: I, blocks: BlockLengths) -> Result<EvaluationReport>
where
    I: IntoIterator<Item = Result<FrameSeries>>,
{
    let measured_stats = statistics(measured, blocks)?;
    let mut sum: Option<Statistics> = None;
    let mut members = 0usize;
    for member in synthetic {
        let stats = statistics(&conform_to(measured, &member?)?, blocks)?;
        members += 1;
        match sum.as_mut() {
            None => sum = Some(stats),
            Some(acc) => {
                add_curve(&mut acc.slope_tpsd, &stats.slope_tpsd);
                add_curve(&mut acc.phase_tpsd, &stats.phase_tpsd);
                if acc.structure.counts != stats.structure.counts {
                    return Err(Error::Shape("structure grids differ in pair counts".into()));
                }
                acc.structure.values += &stats.structure.values;
            }
        }
    }
    let mut synthetic_stats = sum.ok_or_else(|| Error::Invalid("empty synthetic ensemble".into()))?;
    let n = members as f64;
    synthetic_stats.slope_tpsd.power.iter_mut().for_each(|p| *p /= n);
    synthetic_stats.phase_tpsd.power.iter_mut().for_each(|p| *p /= n);
    synthetic_stats.structure.values /= n;

    let metrics = score(&measured_stats, &synthetic_stats)?;
    Ok(EvaluationReport {
        metrics,
        measured: measured_stats,
        synthetic: synthetic_stats,
        block_lengths: blocks,
        ensemble_size: members,
    })
}

fn add_curve(acc: &mut SpectrumCurve, other: &SpectrumCurve) {
    acc.power.iter_mut().zip(&other.power).for_each(|(a, b)| *a += b);
}

/// The three NRMSE scalars between two sets of statistics.
pub fn score(measured: &Statistics, synthetic: &Statistics) -> Result<ErrorMetrics> {
    let sqrt_cells = |g: &StructureGrid, other: &StructureGrid| -> Vec<f64> {
        g.cells()
            .zip(other.cells())
            .filter(|(a, b)| a.3 > 0 && b.3 > 0)
            .map(|(a, _)| a.2.sqrt())
            .collect()
    };
    let d_meas = sqrt_cells(&measured.structure, &synthetic.structure);
    let d_syn = sqrt_cells(&synthetic.structure, &measured.structure);
    Ok(ErrorMetrics {
        slope_tpsd: nrmse_stable(&measured.slope_tpsd.power, &synthetic.slope_tpsd.power)?,
        phase_tpsd: nrmse_stable(&measured.phase_tpsd.power, &synthetic.phase_tpsd.power)?,
        structure: nrmse_stable(&d_meas, &d_syn)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::screens::{generate_series, BoilingParams, GenSpec};

    fn params() -> BoilingParams {
        BoilingParams { l0_m: 0.036, r0_m: 0.1, vx_px: 0.6, vy_px: 0.1, alpha: 0.9, delta_m: 2.24e-3 }
    }

    fn gen(n: usize, steps: usize, seed: u64) -> FrameSeries {
        let spec = GenSpec { n_out: n, n_steps: steps, seed, lambda_m: 532e-9, fs_hz: 1e5 };
        generate_series(&params(), &spec).unwrap()
    }

    const BLOCKS: BlockLengths = BlockLengths { phase: 64, slope: 32 };

    #[test]
    fn self_comparison_is_exactly_zero() {
        let s = gen(10, 300, 1);
        let r = evaluate_pair(&s, std::slice::from_ref(&s), BLOCKS).unwrap();
        assert_eq!(r.metrics, ErrorMetrics { slope_tpsd: 0.0, phase_tpsd: 0.0, structure: 0.0 });
        assert_eq!(r.metrics.rows().map(|r| r.0), METRIC_NAMES);
    }

    #[test]
    fn metadata_mismatch_is_rejected() {
        let s = gen(8, 100, 1);
        let other = FrameSeries::new(s.frames().clone(), s.delta_m(), 2e5, s.lambda_m(), None).unwrap();
        assert!(matches!(evaluate_pair(&s, &[other], BLOCKS), Err(Error::Metadata(_))));
        let small = gen(6, 100, 2);
        assert!(matches!(evaluate_pair(&s, &[small], BLOCKS), Err(Error::Metadata(_))));
    }

    #[test]
    fn synthetic_is_cropped_to_measured_aperture() {
        let big = gen(12, 200, 3);
        let measured = big.crop(0, 0, 7, 10).unwrap();
        let r = evaluate_pair(&measured, &[big], BLOCKS).unwrap();
        assert_eq!(r.metrics.phase_tpsd, 0.0);
        assert_eq!(r.synthetic.structure.values.dim(), (7, 19));
    }
}
