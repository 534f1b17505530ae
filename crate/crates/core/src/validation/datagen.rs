//! Seeded synthetic data.
//!
//! Every stream is a ChaCha8 generator (a counter-based cipher RNG, 8 rounds)
//! keyed by `seed` via `seed_from_u64` and, for Monte Carlo trials, switched
//! to stream number `trial` with `set_stream`. The same `(seed, trial)` always
//! yields the same data on every platform.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::Objects;

/// RNG for dataset `seed`, stream `stream`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    /// `y = w₁cos x₁ + w₂cos x₂ + w₃sin x₁ + w₄sin x₂ + ξ` with
    /// `w ~ N(0, I₄)` drawn once, `x ~ U[−1, 1]²`, `ξ ~ N(0, 1)`.
    Trig,
    /// `x ~ U[0, 1]`, `y | x ~ U[−x, x]`.
    Triangle,
}

impl Generator {
    pub fn name(self) -> &'static str {
        match self {
            Generator::Trig => "trig",
            Generator::Triangle => "triangle",
        }
    }

    pub fn generate(self, n: usize, rng: &mut impl Rng) -> Result<SyntheticDataset> {
        match self {
            Generator::Trig => trig_from(n, rng),
            Generator::Triangle => triangle_from(n, rng),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trig" => Ok(Generator::Trig),
            "triangle" => Ok(Generator::Triangle),
            other => Err(Error::input(format!(
                "unknown generator '{other}' (expected trig or triangle)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub generator: Generator,
    pub objects: Objects,
    pub labels: Vec<f64>,
    /// Latent weights `w` of the trig model; empty for other generators.
    pub weights: Vec<f64>,
}

impl SyntheticDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Splits off the last observation as a test point.
    pub fn split_last(&self) -> Option<(Objects, Vec<f64>, Vec<f64>, f64)> {
        let n = self.len();
        let training = self.objects.without(n - 1)?;
        Some((
            training,
            self.labels[..n - 1].to_vec(),
            self.objects.row(n - 1).to_vec(),
            self.labels[n - 1],
        ))
    }
}

/// The four trig features `(cos x₁, cos x₂, sin x₁, sin x₂)`.
pub fn trig_features(x: &[f64]) -> [f64; 4] {
    [x[0].cos(), x[1].cos(), x[0].sin(), x[1].sin()]
}

pub fn gen_trig(n: usize, seed: u64) -> Result<SyntheticDataset> {
    trig_from(n, &mut stream_rng(seed, 0))
}

pub fn gen_triangle(n: usize, seed: u64) -> Result<SyntheticDataset> {
    triangle_from(n, &mut stream_rng(seed, 0))
}

fn check_len(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::input("a dataset needs at least one observation"));
    }
    Ok(())
}

fn trig_from(n: usize, rng: &mut impl Rng) -> Result<SyntheticDataset> {
    check_len(n)?;
    let weights: Vec<f64> = (0..4).map(|_| StandardNormal.sample(rng)).collect();
    let coord = Uniform::new_inclusive(-1.0, 1.0).expect("valid range");
    let mut data = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let x = [coord.sample(rng), coord.sample(rng)];
        let noise: f64 = StandardNormal.sample(rng);
        let signal: f64 = trig_features(&x).iter().zip(&weights).map(|(f, w)| f * w).sum();
        data.extend_from_slice(&x);
        labels.push(signal + noise);
    }
    Ok(SyntheticDataset {
        generator: Generator::Trig,
        objects: Objects::from_flat(2, data)?,
        labels,
        weights,
    })
}

fn triangle_from(n: usize, rng: &mut impl Rng) -> Result<SyntheticDataset> {
    check_len(n)?;
    let unit = Uniform::new_inclusive(0.0, 1.0).expect("valid range");
    let mut xs = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let x: f64 = unit.sample(rng);
        let u: f64 = unit.sample(rng);
        xs.push(x);
        labels.push(x * (2.0 * u - 1.0));
    }
    Ok(SyntheticDataset {
        generator: Generator::Triangle,
        objects: Objects::from_flat(1, xs)?,
        labels,
        weights: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_var(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn trig_single() {
        let d = gen_trig(1, 4).unwrap();
        let x = d.objects.row(0);
        assert!(x.iter().all(|c| (-1.0..=1.0).contains(c)));
        assert!(d.labels[0].is_finite());
        assert_eq!(d.weights.len(), 4);
    }

    #[test]
    fn deterministic() {
        assert_eq!(gen_trig(50, 9).unwrap(), gen_trig(50, 9).unwrap());
        assert_eq!(gen_triangle(50, 9).unwrap(), gen_triangle(50, 9).unwrap());
        assert_ne!(gen_trig(50, 9).unwrap(), gen_trig(50, 10).unwrap());
        let a: f64 = stream_rng(1, 0).random();
        let b: f64 = stream_rng(1, 1).random();
        assert_ne!(a, b);
        assert!(gen_trig(0, 1).is_err());
    }

    #[test]
    fn triangle_support() {
        let d = gen_triangle(2000, 3).unwrap();
        for (x, y) in d.objects.iter().zip(&d.labels) {
            assert!((0.0..=1.0).contains(&x[0]));
            assert!(y.abs() <= x[0]);
        }
    }

    #[test]
    fn triangle_second_moment() {
        // E[y²] = E[x²]/3 = 1/9
        let d = gen_triangle(100_000, 17).unwrap();
        let m2 = d.labels.iter().map(|y| y * y).sum::<f64>() / d.len() as f64;
        assert!((m2 - 1.0 / 9.0).abs() < 0.1 / 9.0, "E[y^2] = {m2}");
    }

    #[test]
    fn trig_label_variance() {
        // Var(y | w) = Var(w·φ(x)) + 1; estimate the first term with fresh x draws.
        let d = gen_trig(100_000, 23).unwrap();
        let (_, var_labels) = mean_var(&d.labels);

        let mut rng = stream_rng(12345, 7);
        let coord = Uniform::new_inclusive(-1.0, 1.0).unwrap();
        let signal: Vec<f64> = (0..100_000)
            .map(|_| {
                let x = [coord.sample(&mut rng), coord.sample(&mut rng)];
                trig_features(&x).iter().zip(&d.weights).map(|(f, w)| f * w).sum()
            })
            .collect();
        let (_, var_signal) = mean_var(&signal);
        let expected = var_signal + 1.0;
        assert!((var_labels - expected).abs() < 0.1 * expected, "{var_labels} vs {expected}");
    }

    #[test]
    fn split_last() {
        let d = gen_triangle(5, 1).unwrap();
        let (train, labels, test, y) = d.split_last().unwrap();
        assert_eq!(train.len(), 4);
        assert_eq!(labels, d.labels[..4]);
        assert_eq!(test, d.objects.row(4));
        assert_eq!(y, d.labels[4]);
        assert!(gen_triangle(1, 1).unwrap().split_last().is_none());
    }
}
