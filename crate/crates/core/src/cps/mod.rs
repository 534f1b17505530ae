//! Conformal predictive systems built on kernel ridge regression.
//!
//! All three machines use the conformity measure
//! `(yₙ₊₁ − ŷ̄ₙ₊₁) / (1 − h̄ₙ₊₁)^p`, where `ŷ̄` and `h̄` come from the hat
//! matrix of all `n + 1` observations:
//!
//! | variant       | p   |
//! |---------------|-----|
//! | ordinary      | 0   |
//! | studentized   | 1/2 |
//! | deleted       | 1   |
//!
//! (`p = 1` gives the leave-one-out residual.) The equation
//! `αᵢʸ = αₙ₊₁ʸ` is linear in the candidate label, `Aᵢ = Bᵢ·y`, so each
//! training observation contributes one critical value `Cᵢ = Aᵢ / Bᵢ`. Only
//! the studentized machine is guaranteed to have `Bᵢ > 0`; the other two fail
//! with [`Error::NonMonotone`] when a high-leverage object breaks
//! monotonicity.

mod distribution;
pub mod oracle;

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use distribution::ConformalDistribution;

use crate::error::{Error, Result};
use crate::ridge::{leverage_terms, leverage_terms_batch, FitState, LeverageTerms};

/// `Bᵢ` at or below this is treated as non-positive for the ordinary and
/// deleted machines.
pub const MONOTONICITY_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Studentized,
    Ordinary,
    Deleted,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Studentized, Variant::Ordinary, Variant::Deleted];

    /// Exponent applied to `1 − h̄` in the conformity measure.
    pub fn exponent(self) -> f64 {
        match self {
            Variant::Studentized => 0.5,
            Variant::Ordinary => 0.0,
            Variant::Deleted => 1.0,
        }
    }

    /// `x^p` evaluated without `powf`.
    pub(crate) fn scale(self, one_minus_h: f64) -> f64 {
        match self {
            Variant::Studentized => one_minus_h.sqrt(),
            Variant::Ordinary => 1.0,
            Variant::Deleted => one_minus_h,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Studentized => "studentized",
            Variant::Ordinary => "ordinary",
            Variant::Deleted => "deleted",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "studentized" => Ok(Variant::Studentized),
            "ordinary" => Ok(Variant::Ordinary),
            "deleted" => Ok(Variant::Deleted),
            other => Err(Error::input(format!(
                "unknown variant '{other}' (expected studentized, ordinary or deleted)"
            ))),
        }
    }
}

/// Coefficients of `Aᵢ = Bᵢ·y` for every training observation, from the
/// training-only quantities:
///
/// ```text
/// Aᵢ = ad·ŷₙ₊₁ / (ad)^p + (yᵢ − ŷᵢ + ad·ŷₙ₊₁·mᵢ) / (1 − h̄ᵢ)^p
/// Bᵢ = (ad)^(1−p) + ad·mᵢ / (1 − h̄ᵢ)^p
/// ```
pub fn ab_terms(fit: &FitState, terms: &LeverageTerms, variant: Variant) -> (DVector<f64>, DVector<f64>) {
    let n = fit.n();
    let ad = terms.ad;
    let y_test = terms.bayes_mean;
    let test_scale = variant.scale(ad);
    let a0 = ad * y_test / test_scale;
    let b0 = ad / test_scale;

    let mut a = DVector::zeros(n);
    let mut b = DVector::zeros(n);
    let labels = fit.labels();
    let preds = fit.train_predictions();
    for i in 0..n {
        let s = variant.scale(terms.one_minus_h[i]);
        let mi = terms.m[i];
        a[i] = a0 + (labels[i] - preds[i] + ad * y_test * mi) / s;
        b[i] = b0 + ad * mi / s;
    }
    (a, b)
}

/// Studentized `(A, B)`; every `Bᵢ` is positive for a PSD kernel and `a > 0`.
pub fn lemma2_terms(fit: &FitState, test: &[f64]) -> Result<(DVector<f64>, DVector<f64>)> {
    let terms = leverage_terms(fit, test)?;
    Ok(ab_terms(fit, &terms, Variant::Studentized))
}

/// Conformal predictive distribution for the label of `test`. O(n²) for
/// `m = Mk`, then O(n log n) to sort.
pub fn krrpm_predict(fit: &FitState, test: &[f64], variant: Variant) -> Result<ConformalDistribution> {
    let terms = leverage_terms(fit, test)?;
    distribution_from_terms(fit, &terms, variant)
}

/// [`krrpm_predict`] for many test objects sharing one fit; cheaper per
/// object than repeated single calls once `n` is in the thousands.
pub fn krrpm_predict_batch(fit: &FitState, tests: &[&[f64]], variant: Variant) -> Result<Vec<ConformalDistribution>> {
    leverage_terms_batch(fit, tests)?
        .iter()
        .map(|terms| distribution_from_terms(fit, terms, variant))
        .collect()
}

fn distribution_from_terms(fit: &FitState, terms: &LeverageTerms, variant: Variant) -> Result<ConformalDistribution> {
    let (a, b) = ab_terms(fit, terms, variant);

    let guard = match variant {
        Variant::Studentized => 0.0,
        Variant::Ordinary | Variant::Deleted => MONOTONICITY_GUARD,
    };
    if let Some((index, &bi)) = b.iter().enumerate().find(|(_, &bi)| bi.is_nan() || bi <= guard) {
        return Err(match variant {
            Variant::Studentized => Error::numeric(format!(
                "studentized B[{index}] = {bi:e} is not positive; the kernel is not PSD"
            )),
            _ => Error::NonMonotone { index, b: bi },
        });
    }

    let c = a.iter().zip(b.iter()).map(|(ai, bi)| ai / bi).collect();
    ConformalDistribution::from_critical_values(c, variant)
}

/// `Q(y, τ)` of a predicted distribution.
pub fn eval_distribution(dist: &ConformalDistribution, y: f64, tau: f64) -> f64 {
    dist.eval(y, tau)
}

pub fn quantile(dist: &ConformalDistribution, level: f64, tau: f64) -> Result<f64> {
    dist.quantile(level, tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{KernelSpec, Objects};
    use nalgebra::DMatrix;

    fn indices(n: usize) -> Objects {
        Objects::from_flat(1, (0..n).map(|i| i as f64).collect()).unwrap()
    }

    #[test]
    fn zero_kernel_gives_label_distribution() {
        let labels = vec![3.0, -1.0, 0.5, 2.0];
        let spec = KernelSpec::precomputed(DMatrix::zeros(5, 5)).unwrap();
        let fit = FitState::fit(indices(4), labels.clone(), spec, 1.0).unwrap();
        for variant in Variant::ALL {
            let d = krrpm_predict(&fit, &[4.0], variant).unwrap();
            assert_eq!(d.critical_values(), &[-1.0, 0.5, 2.0, 3.0]);
        }
        let (_, b) = lemma2_terms(&fit, &[4.0]).unwrap();
        assert_eq!(b.as_slice(), &[1.0; 4]);
    }

    #[test]
    fn batch_prediction_matches_single() {
        let rows: Vec<[f64; 2]> = (0..90).map(|i| [(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()]).collect();
        let labels: Vec<f64> = (0..80).map(|i| (i as f64 * 0.5).sin()).collect();
        let fit = FitState::fit(Objects::from_rows(&rows[..80]).unwrap(), labels, KernelSpec::laplacian(1.0).unwrap(), 0.5)
            .unwrap();
        let tests: Vec<&[f64]> = rows[80..].iter().map(|r| r.as_slice()).collect();
        for variant in Variant::ALL {
            let batch = krrpm_predict_batch(&fit, &tests, variant).unwrap();
            for (t, d) in tests.iter().zip(&batch) {
                let single = krrpm_predict(&fit, t, variant).unwrap();
                for (u, v) in single.critical_values().iter().zip(d.critical_values()) {
                    assert!((u - v).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn single_uncorrelated_observation() {
        let spec = KernelSpec::precomputed(DMatrix::identity(2, 2)).unwrap();
        let fit = FitState::fit(indices(1), vec![5.0], spec, 1.0).unwrap();
        let (a, b) = lemma2_terms(&fit, &[1.0]).unwrap();
        let r = 0.5f64.sqrt();
        assert!((a[0] - 2.5 / r).abs() < 1e-12);
        assert!((b[0] - r).abs() < 1e-12);
        let d = krrpm_predict(&fit, &[1.0], Variant::Studentized).unwrap();
        assert!((d.critical_values()[0] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn ordinary_matches_closed_form() {
        // Cᵢ = ŷₙ₊₁ + (yᵢ − ŷᵢ) / (ad·(1 + mᵢ))
        let objects = Objects::from_rows(&[[0.1], [0.4], [0.45], [0.9]]).unwrap();
        let labels = vec![0.3, -0.2, 0.1, 0.8];
        let fit = FitState::fit(objects, labels, KernelSpec::laplacian(1.0).unwrap(), 0.5).unwrap();
        let t = leverage_terms(&fit, &[0.6]).unwrap();
        let mut expected: Vec<f64> = (0..4)
            .map(|i| {
                t.bayes_mean
                    + (fit.labels()[i] - fit.train_predictions()[i]) / (t.ad * (1.0 + t.m[i]))
            })
            .collect();
        expected.sort_by(f64::total_cmp);
        let d = krrpm_predict(&fit, &[0.6], Variant::Ordinary).unwrap();
        for (c, e) in d.critical_values().iter().zip(&expected) {
            assert!((c - e).abs() < 1e-12);
        }
    }

    #[test]
    fn ordinary_fails_on_high_leverage_test_object() {
        // The test object lies far outside the training span, so m₂ = −10 and
        // the ordinary Bᵢ = ad·(1 + mᵢ) turns negative.
        let objects = Objects::from_rows(&[[1.0, 0.0], [1.0, 0.1]]).unwrap();
        let fit = FitState::fit(objects, vec![1.0, 2.0], KernelSpec::Linear, 1e-6).unwrap();
        let test = [1.0, -1.0];
        match krrpm_predict(&fit, &test, Variant::Ordinary) {
            Err(Error::NonMonotone { index, b }) => {
                assert_eq!(index, 1);
                assert!(b < 0.0);
            }
            other => panic!("expected a monotonicity failure, got {other:?}"),
        }
        let (_, b) = lemma2_terms(&fit, &test).unwrap();
        assert!(b.iter().all(|&bi| bi > 0.0));
        assert!(krrpm_predict(&fit, &test, Variant::Studentized).is_ok());
    }

    #[test]
    fn variant_names() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("bogus".parse::<Variant>().is_err());
        assert_eq!(Variant::Studentized.exponent(), 0.5);
        assert_eq!(Variant::Ordinary.exponent(), 0.0);
        assert_eq!(Variant::Deleted.exponent(), 1.0);
    }
}
