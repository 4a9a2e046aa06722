//! Composite rate-distortion objective.
//!
//! `total = bpp + λ1·MSE + λ2·(1 − MS-SSIM) + λ3·ΔE00`, with MSE and
//! MS-SSIM measured on sRGB samples in [0,1] and ΔE00 via CIELAB.

use serde::{Deserialize, Serialize};

use crate::imageio::{ColorSpace, PlanarImage};
use crate::metrics::{self, MsSsimConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagrangianConfig {
    pub label: String,
    pub lambda_mse: f64,
    pub lambda_msssim: f64,
    pub lambda_ciede: f64,
}

impl LagrangianConfig {
    pub fn new(label: impl Into<String>, lambda_mse: f64, lambda_msssim: f64, lambda_ciede: f64) -> Result<Self> {
        let cfg = Self {
            label: label.into(),
            lambda_mse,
            lambda_msssim,
            lambda_ciede,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let ls = [self.lambda_mse, self.lambda_msssim, self.lambda_ciede];
        if ls.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::InvalidConfig(format!(
                "lagrangian multipliers must be finite and non-negative: {ls:?}"
            )));
        }
        if ls.iter().all(|l| *l == 0.0) {
            return Err(Error::InvalidConfig("at least one multiplier must be positive".into()));
        }
        Ok(())
    }

    /// Same config with every multiplier scaled by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            label: self.label.clone(),
            lambda_mse: self.lambda_mse * k,
            lambda_msssim: self.lambda_msssim * k,
            lambda_ciede: self.lambda_ciede * k,
        }
    }
}

/// The four training operating points, lowest rate first.
pub fn lagrangian_presets() -> Vec<LagrangianConfig> {
    const MSE: [f64; 4] = [0.001, 0.005, 0.01, 0.02];
    const MSSSIM: [f64; 4] = [0.01, 0.12, 2.4, 4.8];
    const CIEDE: [f64; 4] = [0.024, 0.12, 0.24, 0.48];
    (0..4)
        .map(|i| LagrangianConfig {
            label: format!("q{}", i + 1),
            lambda_mse: MSE[i],
            lambda_msssim: MSSSIM[i],
            lambda_ciede: CIEDE[i],
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub rate_bpp: f64,
    pub mse: f64,
    pub msssim: f64,
    pub ciede2000: f64,
    pub mse_term: f64,
    pub msssim_term: f64,
    pub ciede_term: f64,
    pub total: f64,
}

impl LossBreakdown {
    /// Assembles the loss from raw metric values.
    pub fn from_parts(rate_bpp: f64, mse: f64, msssim: f64, ciede2000: f64, cfg: &LagrangianConfig) -> Self {
        let mse_term = cfg.lambda_mse * mse;
        let msssim_term = cfg.lambda_msssim * (1.0 - msssim);
        let ciede_term = cfg.lambda_ciede * ciede2000;
        Self {
            rate_bpp,
            mse,
            msssim,
            ciede2000,
            mse_term,
            msssim_term,
            ciede_term,
            total: rate_bpp + mse_term + msssim_term + ciede_term,
        }
    }

    pub fn distortion(&self) -> f64 {
        self.mse_term + self.msssim_term + self.ciede_term
    }
}

/// Evaluates the objective for a reconstruction that cost `total_bits`.
pub fn evaluate_loss(
    x: &PlanarImage,
    xhat: &PlanarImage,
    total_bits: f64,
    cfg: &LagrangianConfig,
) -> Result<LossBreakdown> {
    cfg.validate()?;
    if !(total_bits >= 0.0) {
        return Err(Error::InvalidConfig(format!("bit count must be >= 0, got {total_bits}")));
    }
    x.check_same_dims(xhat)?;
    x.expect_space(ColorSpace::Srgb)?;
    xhat.expect_space(ColorSpace::Srgb)?;
    let mse = metrics::mse(x, xhat)?;
    let msssim = metrics::ms_ssim(x, xhat, &MsSsimConfig::default())?;
    let de = metrics::ciede2000(x, xhat)?;
    let rate_bpp = total_bits / x.len() as f64;
    Ok(LossBreakdown::from_parts(rate_bpp, mse, msssim, de, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    #[test]
    fn presets_match_training_table() {
        let p = lagrangian_presets();
        assert_eq!(p.len(), 4);
        assert_eq!(p[0].label, "q1");
        assert_eq!((p[0].lambda_mse, p[0].lambda_msssim, p[0].lambda_ciede), (0.001, 0.01, 0.024));
        assert_eq!((p[1].lambda_mse, p[1].lambda_msssim, p[1].lambda_ciede), (0.005, 0.12, 0.12));
        assert_eq!((p[2].lambda_mse, p[2].lambda_msssim, p[2].lambda_ciede), (0.01, 2.4, 0.24));
        assert_eq!((p[3].lambda_mse, p[3].lambda_msssim, p[3].lambda_ciede), (0.02, 4.8, 0.48));
    }

    #[test]
    fn perfect_reconstruction() {
        let x = synth::natural_image(1, 32, 32);
        let cfg = &lagrangian_presets()[1];
        let free = evaluate_loss(&x, &x, 0.0, cfg).unwrap();
        assert!(free.total.abs() < 1e-9, "{}", free.total);
        let one_bpp = evaluate_loss(&x, &x, (32 * 32) as f64, cfg).unwrap();
        assert!((one_bpp.total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn composes_metric_outputs() {
        let x = synth::natural_image(2, 48, 48);
        let y = synth::add_noise(&x, 0.05, 3);
        let cfg = &lagrangian_presets()[1];
        let bits = 4321.0;
        let l = evaluate_loss(&x, &y, bits, cfg).unwrap();
        let m = metrics::mse(&x, &y).unwrap();
        let s = metrics::ms_ssim(&x, &y, &MsSsimConfig::default()).unwrap();
        let d = metrics::ciede2000(&x, &y).unwrap();
        let want = 0.005 * m + 0.12 * (1.0 - s) + 0.12 * d + bits / (48.0 * 48.0);
        assert!((l.total - want).abs() < 1e-12);
        let rebuilt = l.rate_bpp + cfg.lambda_mse * l.mse + cfg.lambda_msssim * (1.0 - l.msssim) + cfg.lambda_ciede * l.ciede2000;
        assert!((rebuilt - l.total).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(LagrangianConfig::new("z", 0.0, 0.0, 0.0).is_err());
        assert!(LagrangianConfig::new("n", -1.0, 1.0, 0.0).is_err());
        assert!(LagrangianConfig::new("ok", 0.0, 0.0, 1.0).is_ok());
        let x = synth::natural_image(1, 16, 16);
        let y = synth::natural_image(1, 16, 17);
        assert!(evaluate_loss(&x, &y, 1.0, &lagrangian_presets()[0]).is_err());
        assert!(evaluate_loss(&x, &x, -1.0, &lagrangian_presets()[0]).is_err());
    }
}
