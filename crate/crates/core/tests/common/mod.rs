#![allow(dead_code)]

use krrpm::kernels::{KernelSpec, Objects};
use nalgebra::DMatrix;
use rand::Rng;

/// A training set plus one test object.
pub struct Instance {
    pub objects: Objects,
    pub labels: Vec<f64>,
    pub test: Vec<f64>,
    pub kernel: KernelSpec,
    pub a: f64,
}

impl Instance {
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn all_objects(&self) -> Objects {
        self.objects.with_appended(&self.test).unwrap()
    }
}

pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.random_range(lo.log10()..=hi.log10()))
}

/// Random PSD Gram matrix `XX'` of size `size`; rank 0 gives the zero kernel.
pub fn random_gram(rng: &mut impl Rng, size: usize, rank: usize) -> DMatrix<f64> {
    let scale = log_uniform(rng, 0.1, 10.0);
    let x = DMatrix::from_fn(size, rank, |_, _| scale * rng.random_range(-1.0..1.0));
    let g = &x * x.transpose();
    (&g + g.transpose()) * 0.5
}

/// Precomputed PSD kernel over `n + 1` index objects: zero, rank-deficient or
/// full rank with equal probability.
pub fn precomputed_instance(rng: &mut impl Rng, n: usize, a: f64) -> Instance {
    let rank = match rng.random_range(0..3) {
        0 => 0,
        1 => rng.random_range(1..=n.max(1)),
        _ => n + 1,
    };
    let gram = random_gram(rng, n + 1, rank);
    Instance {
        objects: Objects::from_flat(1, (0..n).map(|i| i as f64).collect()).unwrap(),
        labels: (0..n).map(|_| rng.random_range(-3.0..3.0)).collect(),
        test: vec![n as f64],
        kernel: KernelSpec::precomputed(gram).unwrap(),
        a,
    }
}

/// Two-dimensional objects with a built-in kernel; the test object may sit
/// outside the training cloud.
pub fn object_instance(rng: &mut impl Rng, n: usize, a: f64) -> Instance {
    let rows: Vec<[f64; 2]> = (0..n)
        .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
        .collect();
    let kernel = match rng.random_range(0..3) {
        0 => KernelSpec::Linear,
        1 => KernelSpec::laplacian(log_uniform(rng, 0.2, 5.0)).unwrap(),
        _ => KernelSpec::Trig2d,
    };
    Instance {
        objects: Objects::from_rows(&rows).unwrap(),
        labels: (0..n).map(|_| rng.random_range(-3.0..3.0)).collect(),
        test: vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)],
        kernel,
        a,
    }
}

pub fn mixed_instance(rng: &mut impl Rng, n: usize, a: f64) -> Instance {
    if rng.random_bool(0.5) {
        precomputed_instance(rng, n, a)
    } else {
        object_instance(rng, n, a)
    }
}
