//! Kernel functions and the matrices built from them.
//!
//! Objects are finite real vectors of a common dimension, stored row-major in
//! [`Objects`]. A [`KernelSpec::Precomputed`] kernel reads its objects as
//! one-dimensional row indices into a fixed Gram matrix, which lets callers
//! inject arbitrary PSD matrices.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-10;

/// A non-empty sequence of objects sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Objects {
    dim: usize,
    data: Vec<f64>,
}

impl Objects {
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::input("object list is empty"))?;
        let dim = first.as_ref().len();
        let mut data = Vec::with_capacity(dim * rows.len());
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::input(format!(
                    "object {i} has dimension {} but object 0 has dimension {dim}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(dim, data)
    }

    /// Builds from row-major storage; `data.len()` must be a positive multiple of `dim`.
    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input("objects must have dimension >= 1"));
        }
        if data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(Error::input(format!(
                "{} values do not form a non-empty list of {dim}-dimensional objects",
                data.len()
            )));
        }
        check_finite(&data)?;
        Ok(Self { dim, data })
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    /// A copy with `x` appended as the last object.
    pub fn with_appended(&self, x: &[f64]) -> Result<Self> {
        self.check_object(x)?;
        let mut data = Vec::with_capacity(self.data.len() + self.dim);
        data.extend_from_slice(&self.data);
        data.extend_from_slice(x);
        Ok(Self { dim: self.dim, data })
    }

    /// A copy with object `i` removed; `None` if that would leave nothing.
    pub fn without(&self, i: usize) -> Option<Self> {
        if self.len() <= 1 {
            return None;
        }
        let data = self
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .flat_map(|(_, row)| row.iter().copied())
            .collect();
        Some(Self { dim: self.dim, data })
    }

    pub(crate) fn check_object(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::input(format!(
                "object has dimension {} but expected {}",
                x.len(),
                self.dim
            )));
        }
        check_finite(x)
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::input(format!("non-finite coordinate at position {i}"))),
        None => Ok(()),
    }
}

/// Which kernel to use.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    /// `x · x'`
    Linear,
    /// `exp(-‖x - x'‖ / scale)` with the Euclidean norm.
    Laplacian { scale: f64 },
    /// `cos(x₁ - x'₁) + cos(x₂ - x'₂)`, the inner product of the features
    /// `(cos x₁, cos x₂, sin x₁, sin x₂)`. Two-dimensional objects only.
    Trig2d,
    /// A fixed Gram matrix; objects are one-dimensional row indices into it.
    Precomputed(Arc<DMatrix<f64>>),
}

impl KernelSpec {
    pub fn laplacian(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::input(format!("laplacian scale must be positive, got {scale}")));
        }
        Ok(KernelSpec::Laplacian { scale })
    }

    /// Wraps a Gram matrix, checking it is square, finite and symmetric
    /// to within 1e-10. Positive semidefiniteness is checked separately by
    /// [`validate_psd`].
    pub fn precomputed(gram: DMatrix<f64>) -> Result<Self> {
        if !gram.is_square() {
            return Err(Error::input(format!(
                "precomputed kernel is {}x{}, not square",
                gram.nrows(),
                gram.ncols()
            )));
        }
        if gram.nrows() == 0 {
            return Err(Error::input("precomputed kernel is empty"));
        }
        check_finite(gram.as_slice())?;
        let n = gram.nrows();
        for i in 0..n {
            for j in i + 1..n {
                if (gram[(i, j)] - gram[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(Error::input(format!(
                        "precomputed kernel is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(KernelSpec::Precomputed(Arc::new(gram)))
    }

    /// Parses a kernel name as used on the command line. `scale` only applies
    /// to the Laplacian kernel and defaults to 1.
    pub fn from_name(name: &str, scale: Option<f64>) -> Result<Self> {
        match name {
            "linear" => Ok(KernelSpec::Linear),
            "laplacian" => KernelSpec::laplacian(scale.unwrap_or(1.0)),
            "trig2d" | "trig" => Ok(KernelSpec::Trig2d),
            "precomputed" => Err(Error::input(
                "the precomputed kernel needs a Gram matrix, not just a name",
            )),
            other => Err(Error::input(format!(
                "unknown kernel '{other}' (expected linear, laplacian, trig2d or precomputed)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Linear => "linear",
            KernelSpec::Laplacian { .. } => "laplacian",
            KernelSpec::Trig2d => "trig2d",
            KernelSpec::Precomputed(_) => "precomputed",
        }
    }

    /// Evaluates the kernel. Precondition checks are done by the public
    /// wrappers; this only validates what depends on the variant.
    fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            KernelSpec::Linear => Ok(x.iter().zip(y).map(|(a, b)| a * b).sum()),
            KernelSpec::Laplacian { scale } => {
                let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                Ok((-sq.sqrt() / scale).exp())
            }
            KernelSpec::Trig2d => {
                if x.len() != 2 {
                    return Err(Error::input(format!(
                        "trig2d kernel needs 2-dimensional objects, got {}",
                        x.len()
                    )));
                }
                // cos is even; taking |.| makes the result bitwise symmetric.
                Ok((x[0] - y[0]).abs().cos() + (x[1] - y[1]).abs().cos())
            }
            KernelSpec::Precomputed(gram) => {
                let i = gram_index(gram, x)?;
                let j = gram_index(gram, y)?;
                Ok(gram[(i, j)])
            }
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Laplacian { scale } => write!(f, "laplacian(scale={scale})"),
            KernelSpec::Precomputed(g) => write!(f, "precomputed({}x{})", g.nrows(), g.ncols()),
            other => f.write_str(other.name()),
        }
    }
}

fn gram_index(gram: &DMatrix<f64>, x: &[f64]) -> Result<usize> {
    let v = match x {
        [v] => *v,
        _ => {
            return Err(Error::input(format!(
                "precomputed kernel objects are single indices, got dimension {}",
                x.len()
            )))
        }
    };
    if v < 0.0 || v.fract() != 0.0 || v >= gram.nrows() as f64 {
        return Err(Error::input(format!(
            "{v} is not a row index of the {}x{} precomputed kernel",
            gram.nrows(),
            gram.ncols()
        )));
    }
    Ok(v as usize)
}

pub fn eval_kernel(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::input(format!(
            "dimension mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::input("objects must have dimension >= 1"));
    }
    check_finite(x)?;
    check_finite(y)?;
    spec.eval_unchecked(x, y)
}

/// Gram matrix `K[i][j] = 𝒦(xᵢ, xⱼ)`. The upper triangle is computed and
/// mirrored, so the result is exactly symmetric.
pub fn kernel_matrix(spec: &KernelSpec, objects: &Objects) -> Result<DMatrix<f64>> {
    let n = objects.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        let xi = objects.row(i);
        for j in i..n {
            let v = spec.eval_unchecked(xi, objects.row(j))?;
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// Returns `k` with `kᵢ = 𝒦(xᵢ, test)` and `κ = 𝒦(test, test)`.
pub fn kernel_vector(spec: &KernelSpec, objects: &Objects, test: &[f64]) -> Result<(DVector<f64>, f64)> {
    objects.check_object(test)?;
    let k = objects
        .iter()
        .map(|xi| spec.eval_unchecked(xi, test))
        .collect::<Result<Vec<_>>>()?;
    let kappa = spec.eval_unchecked(test, test)?;
    Ok((DVector::from_vec(k), kappa))
}

/// True iff `matrix + jitter·I` has a Cholesky factorization.
pub fn validate_psd(matrix: &DMatrix<f64>, jitter: f64) -> Result<bool> {
    if !matrix.is_square() {
        return Err(Error::input(format!(
            "matrix is {}x{}, not square",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    if jitter.is_nan() || jitter < 0.0 {
        return Err(Error::input(format!("jitter must be non-negative, got {jitter}")));
    }
    let n = matrix.nrows();
    let shifted = matrix + DMatrix::<f64>::identity(n, n) * jitter;
    Ok(Cholesky::new(shifted).is_some())
}
