//! Brute-force conformal transducer.
//!
//! Recomputes every conformity score from scratch for each candidate label:
//! the ordinary and studentized scores from the full `(n+1)×(n+1)` hat
//! matrix, the deleted scores by refitting kernel ridge regression with each
//! observation left out. O(n³) (deleted: O(n⁴)) per query, so only meant for
//! checking the fast path on small problems.

use nalgebra::{DMatrix, DVector};

use super::Variant;
use crate::error::{Error, Result};
use crate::kernels::{eval_kernel, kernel_matrix, KernelSpec, Objects};
use crate::ridge::hat_matrix_full;

/// `α₁ʸ, …, αₙ₊₁ʸ` for one candidate label `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformityScores {
    pub alphas: Vec<f64>,
}

impl ConformityScores {
    /// `(#{i : αᵢ < αₙ₊₁}, #{i : αᵢ = αₙ₊₁})` over all `n + 1` scores, so the
    /// second count is at least one.
    pub fn counts(&self) -> (usize, usize) {
        let last = *self.alphas.last().expect("scores are never empty");
        let less = self.alphas.iter().filter(|&&a| a < last).count();
        let equal = self.alphas.iter().filter(|&&a| a == last).count();
        (less, equal)
    }
}

/// A training sequence plus the kernel and ridge parameter, queried one
/// `(test, y, τ)` at a time.
#[derive(Debug, Clone)]
pub struct SlowOracle<'a> {
    pub training: &'a Objects,
    pub labels: &'a [f64],
    pub kernel: &'a KernelSpec,
    pub a: f64,
}

impl<'a> SlowOracle<'a> {
    pub fn new(training: &'a Objects, labels: &'a [f64], kernel: &'a KernelSpec, a: f64) -> Result<Self> {
        if training.len() != labels.len() {
            return Err(Error::input(format!(
                "{} objects but {} labels",
                training.len(),
                labels.len()
            )));
        }
        if a.is_nan() || a <= 0.0 {
            return Err(Error::input(format!("ridge parameter a must be positive, got {a}")));
        }
        Ok(Self { training, labels, kernel, a })
    }

    pub fn scores(&self, test: &[f64], y: f64, variant: Variant) -> Result<ConformityScores> {
        let all = self.training.with_appended(test)?;
        let mut labels = self.labels.to_vec();
        labels.push(y);

        let alphas = match variant {
            Variant::Ordinary | Variant::Studentized => {
                let hbar = hat_matrix_full(&all, self.kernel, self.a)?;
                let fitted = &hbar * DVector::from_column_slice(&labels);
                (0..labels.len())
                    .map(|i| (labels[i] - fitted[i]) / variant.scale(1.0 - hbar[(i, i)]))
                    .collect()
            }
            Variant::Deleted => (0..labels.len())
                .map(|i| Ok(labels[i] - self.leave_one_out(&all, &labels, i)?))
                .collect::<Result<Vec<_>>>()?,
        };
        Ok(ConformityScores { alphas })
    }

    /// Integer counts behind `Q(y, τ) = (less + τ·equal) / (n + 1)`.
    pub fn counts(&self, test: &[f64], y: f64, variant: Variant) -> Result<(usize, usize)> {
        Ok(self.scores(test, y, variant)?.counts())
    }

    pub fn q(&self, test: &[f64], y: f64, tau: f64, variant: Variant) -> Result<f64> {
        let (less, equal) = self.counts(test, y, variant)?;
        Ok((less as f64 + tau * equal as f64) / (self.labels.len() + 1) as f64)
    }

    /// Kernel ridge prediction for object `i` trained on all the others.
    fn leave_one_out(&self, all: &Objects, labels: &[f64], i: usize) -> Result<f64> {
        let Some(rest) = all.without(i) else {
            return Err(Error::input("leave-one-out needs at least two observations"));
        };
        let rest_labels: Vec<f64> = labels
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, y)| *y)
            .collect();
        let k = kernel_matrix(self.kernel, &rest)?;
        let n = k.nrows();
        let system = k + DMatrix::<f64>::identity(n, n) * self.a;
        let weights = system
            .lu()
            .solve(&DVector::from_vec(rest_labels))
            .ok_or_else(|| Error::numeric("K + aI is singular"))?;
        let xi = all.row(i);
        rest.iter()
            .zip(weights.iter())
            .map(|(xj, w)| Ok(w * eval_kernel(self.kernel, xj, xi)?))
            .sum()
    }
}

/// `Q(y, τ)` by brute force.
pub fn slow_oracle_q(oracle: &SlowOracle<'_>, test: &[f64], y: f64, tau: f64, variant: Variant) -> Result<f64> {
    oracle.q(test, y, tau, variant)
}

/// `(A, B)` read directly off a full hat matrix whose last row and column
/// belong to the test object:
///
/// ```text
/// Aᵢ = Σⱼ h̄ₙ₊₁,ⱼ yⱼ / (1 − h̄ₙ₊₁)^p + (yᵢ − Σⱼ h̄ᵢⱼ yⱼ) / (1 − h̄ᵢ)^p
/// Bᵢ = (1 − h̄ₙ₊₁)^(1−p) + h̄ᵢ,ₙ₊₁ / (1 − h̄ᵢ)^p
/// ```
pub fn ab_from_hat(hbar: &DMatrix<f64>, labels: &[f64], variant: Variant) -> (Vec<f64>, Vec<f64>) {
    let n = labels.len();
    assert_eq!(hbar.shape(), (n + 1, n + 1), "hat matrix must be (n+1)x(n+1)");
    let one_minus_test = 1.0 - hbar[(n, n)];
    let test_scale = variant.scale(one_minus_test);
    let test_fit: f64 = (0..n).map(|j| hbar[(n, j)] * labels[j]).sum();

    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for i in 0..n {
        let s = variant.scale(1.0 - hbar[(i, i)]);
        let fit_i: f64 = (0..n).map(|j| hbar[(i, j)] * labels[j]).sum();
        a.push(test_fit / test_scale + (labels[i] - fit_i) / s);
        b.push(one_minus_test / test_scale + hbar[(i, n)] / s);
    }
    (a, b)
}
