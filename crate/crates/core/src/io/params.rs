use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::atomic_write;
use crate::screens::BoilingParams;

/// Where a parameter set came from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    /// Input stack the parameters were estimated from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    /// Cross-correlation lag.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lag: Option<usize>,
    pub tool_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Sampling frequency of the input, carried so generated stacks match it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fs_hz: Option<f64>,
    /// Wavelength of the input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// TOML parameter file.
///
/// ```toml
/// L0_m = 0.0362
/// r0_m = 0.1
/// vx_px = 0.61
/// vy_px = 0.02
/// alpha = 0.93
/// delta_m = 0.00224
///
/// [provenance]
/// tool_version = "0.1.0"
/// lag = 10
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsFile {
    #[serde(rename = "L0_m")]
    pub l0_m: f64,
    pub r0_m: f64,
    pub vx_px: f64,
    pub vy_px: f64,
    pub alpha: f64,
    pub delta_m: f64,
    #[serde(default)]
    pub provenance: Provenance,
}

impl ParamsFile {
    pub fn new(params: BoilingParams, provenance: Provenance) -> Self {
        Self {
            l0_m: params.l0_m,
            r0_m: params.r0_m,
            vx_px: params.vx_px,
            vy_px: params.vy_px,
            alpha: params.alpha,
            delta_m: params.delta_m,
            provenance,
        }
    }

    pub fn params(&self) -> BoilingParams {
        BoilingParams {
            l0_m: self.l0_m,
            r0_m: self.r0_m,
            vx_px: self.vx_px,
            vy_px: self.vy_px,
            alpha: self.alpha,
            delta_m: self.delta_m,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("params serialize to TOML")
    }

    pub fn from_toml(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = self.to_toml();
        atomic_write(path.as_ref(), |w| w.write_all(text.as_bytes()))
    }

    /// Parse a file. Parameter values are not validated here; see
    /// [`BoilingParams::validate`].
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Malformed {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> ParamsFile {
        ParamsFile::new(
            BoilingParams { l0_m: 0.07616, r0_m: 0.20049, vx_px: 0.1 + 0.2, vy_px: -1e-17, alpha: 0.99, delta_m: 2.24e-3 },
            Provenance {
                input: Some("runs/f06.phs".into()),
                lag: Some(10),
                tool_version: "0.1.0".into(),
                seed: None,
                fs_hz: Some(1e5),
                lambda_m: None,
                warnings: vec!["alpha clamped".into()],
            },
        )
    }

    #[test]
    fn keys_are_named_as_documented() {
        let text = sample().to_toml();
        for key in ["L0_m =", "r0_m =", "vx_px =", "vy_px =", "alpha =", "delta_m =", "[provenance]", "lag = 10"] {
            assert!(text.contains(key), "{key} missing from\n{text}");
        }
        assert!(!text.contains("seed"));
    }

    #[test]
    fn round_trip() {
        let p = sample();
        assert_eq!(ParamsFile::from_toml(&p.to_toml()).unwrap(), p);
    }

    #[test]
    fn file_round_trip_and_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.toml");
        sample().write(&path).unwrap();
        assert_eq!(ParamsFile::read(&path).unwrap(), sample());
        std::fs::write(&path, "alpha = ").unwrap();
        assert!(matches!(ParamsFile::read(&path), Err(Error::Malformed { .. })));
    }

    #[test]
    fn out_of_range_alpha_parses_but_fails_validation() {
        let mut p = sample();
        p.alpha = 1.5;
        let back = ParamsFile::from_toml(&p.to_toml()).unwrap();
        assert!(back.params().validate().is_err());
    }

    proptest! {
        #[test]
        fn finite_values_round_trip_exactly(v in prop::array::uniform6(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO)) {
            let p = ParamsFile::new(
                BoilingParams { l0_m: v[0], r0_m: v[1], vx_px: v[2], vy_px: v[3], alpha: v[4], delta_m: v[5] },
                Provenance { tool_version: "x".into(), seed: Some(u64::MAX >> 1), ..Default::default() },
            );
            let back = ParamsFile::from_toml(&p.to_toml()).unwrap();
            for (a, b) in [(p.l0_m, back.l0_m), (p.r0_m, back.r0_m), (p.vx_px, back.vx_px), (p.vy_px, back.vy_px), (p.alpha, back.alpha), (p.delta_m, back.delta_m)] {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
