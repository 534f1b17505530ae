//! Gaussian-process predictive distribution under the Bayesian ridge model
//! `cov(yᵢ, yⱼ) = (σ²/a)·𝒦(xᵢ, xⱼ) + σ²·1{i=j}`.

use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::error::{Error, Result};
use crate::ridge::{leverage_terms, FitState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPrediction {
    pub mean: f64,
    pub variance: f64,
    /// Noise standard deviation σ.
    pub sigma: f64,
}

impl GaussianPrediction {
    pub fn cdf(&self, y: f64) -> f64 {
        gaussian_cdf(self, y)
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// `N(k'My, (σ²/a)κ + σ² − (σ²/a)k'Mk)`.
pub fn bayes_predict(fit: &FitState, test: &[f64], sigma: f64) -> Result<GaussianPrediction> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::input(format!("sigma must be positive, got {sigma}")));
    }
    let t = leverage_terms(fit, test)?;
    let s2 = sigma * sigma;
    let a = fit.ridge();
    let variance = s2 / a * t.kappa + s2 - s2 / a * t.k_m_k;
    Ok(GaussianPrediction {
        mean: t.bayes_mean,
        variance,
        sigma,
    })
}

/// `Φ((y − mean)/sd)`, via `erfc` so both tails keep full relative accuracy.
pub fn gaussian_cdf(pred: &GaussianPrediction, y: f64) -> f64 {
    let z = (y - pred.mean) / pred.variance.sqrt();
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}
