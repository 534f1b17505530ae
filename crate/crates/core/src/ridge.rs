//! Regularised kernel linear algebra.
//!
//! [`FitState::fit`] does the O(n³) work once: it factors `K + aI = LL'`,
//! keeps `L`, the explicit inverse `M`, the training predictions `ŷ = HY` and
//! the diagonal of the training hat matrix `H = MK`. Everything a test object
//! needs is then derived from `m = Mk` (see [`leverage_terms`]), which gives
//! the bordered hat matrix
//!
//! ```text
//!        ┌ H − ad·m·m'    ad·m        ┐
//!   H̄ =  │                            │ ,   d = 1 / (κ + a − k'm)
//!        └ ad·m'          dκ − d·k'm  ┘
//! ```
//!
//! without refactoring.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernels::{kernel_matrix, kernel_vector, KernelSpec, Objects};

/// Leverages at or above `1 - LEVERAGE_GUARD` are reported as numerical failures.
pub const LEVERAGE_GUARD: f64 = 1e-12;
/// Smallest acceptable value of `κ + a − k'Mk`.
pub const DENOMINATOR_GUARD: f64 = 1e-12;

/// Cached training-time quantities. Immutable once built.
#[derive(Debug, Clone)]
pub struct FitState {
    objects: Objects,
    labels: DVector<f64>,
    a: f64,
    kernel: KernelSpec,
    inv: DMatrix<f64>,
    /// Lower Cholesky factor of `K + aI`.
    factor: DMatrix<f64>,
    train_predictions: DVector<f64>,
    train_leverage: DVector<f64>,
}

impl FitState {
    pub fn fit(objects: Objects, labels: Vec<f64>, kernel: KernelSpec, a: f64) -> Result<Self> {
        if labels.len() != objects.len() {
            return Err(Error::input(format!(
                "{} objects but {} labels",
                objects.len(),
                labels.len()
            )));
        }
        check_ridge(a)?;
        if let Some(i) = labels.iter().position(|y| !y.is_finite()) {
            return Err(Error::input(format!("label {i} is not finite")));
        }
        let n = objects.len();
        let k = kernel_matrix(&kernel, &objects)?;
        let (factor, inv) = regularized_inverse(&k, a)?;

        let labels = DVector::from_vec(labels);
        let train_predictions = &inv * (&k * &labels);

        let mut train_leverage = DVector::zeros(n);
        for i in 0..n {
            // diag(MK); both symmetric, so row i of M against column i of K.
            let h = inv.column(i).dot(&k.column(i));
            if h >= 1.0 - LEVERAGE_GUARD {
                return Err(Error::numeric(format!(
                    "training leverage h[{i}] = {h} is not below 1; the kernel matrix is not PSD or is badly scaled"
                )));
            }
            if h < -LEVERAGE_GUARD {
                return Err(Error::numeric(format!(
                    "training leverage h[{i}] = {h} is negative; the kernel matrix is not PSD"
                )));
            }
            // rounding noise around an exact zero
            train_leverage[i] = h.max(0.0);
        }

        Ok(Self {
            objects,
            labels,
            a,
            kernel,
            inv,
            factor,
            train_predictions,
            train_leverage,
        })
    }

    pub fn n(&self) -> usize {
        self.objects.len()
    }

    pub fn objects(&self) -> &Objects {
        &self.objects
    }

    pub fn labels(&self) -> &DVector<f64> {
        &self.labels
    }

    pub fn ridge(&self) -> f64 {
        self.a
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// `(K + aI)⁻¹`
    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inv
    }

    /// `ŷ = HY`
    pub fn train_predictions(&self) -> &DVector<f64> {
        &self.train_predictions
    }

    /// Diagonal of `H`.
    pub fn train_leverage(&self) -> &DVector<f64> {
        &self.train_leverage
    }
}

fn check_ridge(a: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::input(format!("ridge parameter a must be positive, got {a}")));
    }
    Ok(())
}

fn regularized_inverse(k: &DMatrix<f64>, a: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = k.nrows();
    let shifted = k + DMatrix::<f64>::identity(n, n) * a;
    let chol = Cholesky::new(shifted).ok_or_else(|| {
        Error::numeric(format!(
            "K + aI (n = {n}, a = {a}) has no Cholesky factorization; the kernel matrix is not PSD"
        ))
    })?;
    let inv = chol.inverse();
    Ok((chol.unpack(), (&inv + inv.transpose()) * 0.5))
}

/// Per-test quantities, all obtained from `m = Mk` in O(n) extra work.
///
/// `m` and `k'm` come from two triangular solves against `L` rather than the
/// product with `M`: same O(n²) cost, but `κ − k'm` cancels badly when the
/// test object is nearly in the span of the training objects, and the
/// explicit inverse carries too much error for that difference.
#[derive(Debug, Clone, PartialEq)]
pub struct LeverageTerms {
    /// `m = (K + aI)⁻¹ k`
    pub m: DVector<f64>,
    pub kappa: f64,
    /// `k'(K + aI)⁻¹ k`
    pub k_m_k: f64,
    /// `1 / (κ + a − k'm)`
    pub d: f64,
    /// `a·d`, in (0, 1]. Equals `1 − h̄ₙ₊₁`.
    pub ad: f64,
    /// `1 − h̄ₙ₊₁`
    pub one_minus_h_test: f64,
    /// `1 − h̄ᵢ = 1 − hᵢ + ad·mᵢ²` for the training objects.
    pub one_minus_h: DVector<f64>,
    /// Kernel ridge prediction `k'MY` (the Bayesian predictive mean).
    pub bayes_mean: f64,
}

impl LeverageTerms {
    /// Off-diagonal entry `h̄ᵢ,ₙ₊₁ = ad·mᵢ`.
    pub fn h_cross(&self, i: usize) -> f64 {
        self.ad * self.m[i]
    }
}

pub fn leverage_terms(fit: &FitState, test: &[f64]) -> Result<LeverageTerms> {
    let (k, kappa) = kernel_vector(&fit.kernel, &fit.objects, test)?;
    let z = fit
        .factor
        .solve_lower_triangular(&k)
        .ok_or_else(|| Error::numeric("singular Cholesky factor"))?;
    let k_m_k = z.norm_squared();
    let m = fit
        .factor
        .tr_solve_lower_triangular(&z)
        .ok_or_else(|| Error::numeric("singular Cholesky factor"))?;
    finish_terms(fit, m, kappa, k_m_k)
}

/// [`leverage_terms`] for many test objects at once. The triangular solves
/// run blockwise over all right-hand sides, so `L` is streamed once per
/// batch instead of twice per object; the results are identical in exact
/// arithmetic and agree to rounding otherwise.
pub fn leverage_terms_batch(fit: &FitState, tests: &[&[f64]]) -> Result<Vec<LeverageTerms>> {
    let n = fit.n();
    let mut rhs = DMatrix::zeros(n, tests.len());
    let mut kappas = Vec::with_capacity(tests.len());
    for (j, test) in tests.iter().enumerate() {
        let (k, kappa) = kernel_vector(&fit.kernel, &fit.objects, test)?;
        rhs.set_column(j, &k);
        kappas.push(kappa);
    }
    let z = forward_substitution(&fit.factor, rhs)?;
    let k_m_k: Vec<f64> = z.column_iter().map(|c| c.norm_squared()).collect();
    let m = backward_substitution(&fit.factor, z)?;
    m.column_iter()
        .zip(kappas)
        .zip(k_m_k)
        .map(|((m, kappa), kmk)| finish_terms(fit, m.into_owned(), kappa, kmk))
        .collect()
}

const BLOCK: usize = 64;

/// Solves `LX = B` by blocks of rows; the off-diagonal updates are
/// matrix products.
fn forward_substitution(l: &DMatrix<f64>, mut x: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = l.nrows();
    let mut start = 0;
    while start < n {
        let size = BLOCK.min(n - start);
        if start > 0 {
            let update = l.view((start, 0), (size, start)) * x.rows(0, start);
            let mut rows = x.rows_mut(start, size);
            rows -= update;
        }
        let solved = l
            .view((start, start), (size, size))
            .solve_lower_triangular_mut(&mut x.rows_mut(start, size));
        if !solved {
            return Err(Error::numeric("singular Cholesky factor"));
        }
        start += size;
    }
    Ok(x)
}

/// Solves `L'X = B`, last block first.
fn backward_substitution(l: &DMatrix<f64>, mut x: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = l.nrows();
    let mut end = n;
    while end > 0 {
        let size = BLOCK.min(end);
        let start = end - size;
        if end < n {
            let below = l.view((end, start), (n - end, size)).transpose();
            let update = below * x.rows(end, n - end);
            let mut rows = x.rows_mut(start, size);
            rows -= update;
        }
        let solved = l
            .view((start, start), (size, size))
            .tr_solve_lower_triangular_mut(&mut x.rows_mut(start, size));
        if !solved {
            return Err(Error::numeric("singular Cholesky factor"));
        }
        end = start;
    }
    Ok(x)
}

fn finish_terms(fit: &FitState, m: DVector<f64>, kappa: f64, k_m_k: f64) -> Result<LeverageTerms> {
    let scale = kappa.abs().max(k_m_k.abs()).max(1.0);
    let mut schur = kappa - k_m_k;
    if schur < 0.0 {
        // κ − k'Mk ≥ 0 for a PSD kernel; tolerate only cancellation noise.
        if schur < -1e-10 * scale {
            return Err(Error::numeric(format!(
                "κ − k'(K+aI)⁻¹k = {schur:e} is negative; the kernel is not PSD"
            )));
        }
        schur = 0.0;
    }
    let denom = fit.a + schur;
    if denom <= DENOMINATOR_GUARD {
        return Err(Error::numeric(format!(
            "κ + a − k'(K+aI)⁻¹k = {denom:e} is not positive"
        )));
    }
    let d = 1.0 / denom;
    let ad = fit.a / denom;

    let one_minus_h = DVector::from_iterator(
        fit.n(),
        fit.train_leverage
            .iter()
            .zip(m.iter())
            .map(|(h, mi)| 1.0 - h + ad * mi * mi),
    );
    let bayes_mean = m.dot(&fit.labels);

    Ok(LeverageTerms {
        m,
        kappa,
        k_m_k,
        d,
        ad,
        one_minus_h_test: ad,
        one_minus_h,
        bayes_mean,
    })
}

/// `H̄ = (K̄ + aI)⁻¹ K̄` by direct factorization of the full kernel matrix.
/// O(n³); used as an oracle.
pub fn hat_matrix_full(objects: &Objects, kernel: &KernelSpec, a: f64) -> Result<DMatrix<f64>> {
    check_ridge(a)?;
    let k = kernel_matrix(kernel, objects)?;
    let n = k.nrows();
    let chol = Cholesky::new(&k + DMatrix::<f64>::identity(n, n) * a)
        .ok_or_else(|| Error::numeric("K̄ + aI has no Cholesky factorization"))?;
    Ok(chol.solve(&k))
}

/// Assembles the bordered hat matrix from training-only quantities and `m = Mk`.
pub fn partitioned_hat(fit: &FitState, test: &[f64]) -> Result<DMatrix<f64>> {
    let t = leverage_terms(fit, test)?;
    let n = fit.n();
    let mut hbar = DMatrix::zeros(n + 1, n + 1);
    // H = I − aM
    for j in 0..n {
        for i in 0..n {
            let h = if i == j { 1.0 } else { 0.0 } - fit.a * fit.inv[(i, j)];
            hbar[(i, j)] = h - t.ad * t.m[i] * t.m[j];
        }
        hbar[(n, j)] = t.ad * t.m[j];
        hbar[(j, n)] = t.ad * t.m[j];
    }
    hbar[(n, n)] = t.d * t.kappa - t.d * t.k_m_k;
    Ok(hbar)
}
