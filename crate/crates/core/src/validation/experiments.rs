//! Experiment runners: the trig-model comparison against the Bayesian
//! predictive distribution, and the triangle-data runs that show how little
//! the predictive distribution depends on the test object.

use std::fmt::Write as _;

use serde::Serialize;

use super::datagen::{gen_triangle, gen_trig};
use crate::cps::{krrpm_predict, ConformalDistribution, Variant};
use crate::error::{Error, Result};
use crate::gpr::{bayes_predict, GaussianPrediction};
use crate::kernels::KernelSpec;
use crate::ridge::FitState;

/// Default number of grid points in emitted curves.
pub const CURVE_POINTS: usize = 512;
/// Default grid margin beyond the extreme critical values, in IQRs.
pub const SPAN_IQR: f64 = 3.0;

/// A tabulated distribution function. For a conformal distribution `q0` and
/// `q1` are `Q(y, 0)` and `Q(y, 1)`; for a continuous CDF both columns hold
/// the CDF.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    pub name: String,
    pub y: Vec<f64>,
    pub q0: Vec<f64>,
    pub q1: Vec<f64>,
}

impl Curve {
    pub fn from_distribution(name: impl Into<String>, dist: &ConformalDistribution, grid: &[f64]) -> Self {
        Self {
            name: name.into(),
            y: grid.to_vec(),
            q0: grid.iter().map(|&y| dist.eval(y, 0.0)).collect(),
            q1: grid.iter().map(|&y| dist.eval(y, 1.0)).collect(),
        }
    }

    pub fn from_cdf(name: impl Into<String>, cdf: impl Fn(f64) -> f64, grid: &[f64]) -> Self {
        let values: Vec<f64> = grid.iter().map(|&y| cdf(y)).collect();
        Self {
            name: name.into(),
            y: grid.to_vec(),
            q0: values.clone(),
            q1: values,
        }
    }

    /// `y,Q0,Q1` with LF line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("y,Q0,Q1\n");
        for ((y, q0), q1) in self.y.iter().zip(&self.q0).zip(&self.q1) {
            writeln!(out, "{y},{q0},{q1}").expect("writing to a String");
        }
        out
    }
}

/// Evenly spaced grid covering every distribution's critical values plus
/// `span_iqr` interquartile ranges on each side.
pub fn curve_grid(dists: &[&ConformalDistribution], span_iqr: f64, points: usize) -> Vec<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for d in dists {
        let c = d.critical_values();
        let n = c.len();
        let mut iqr = c[(3 * (n - 1)) / 4] - c[(n - 1) / 4];
        if iqr <= 0.0 {
            iqr = 1.0;
        }
        lo = lo.min(c[0] - span_iqr * iqr);
        hi = hi.max(c[n - 1] + span_iqr * iqr);
    }
    linspace(lo, hi, points)
}

pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// `sup over y, τ of |Q(y, τ) − F(y)|` for a continuous CDF `F`, computed
/// exactly from the step structure of `Q`.
pub fn sup_distance_to_cdf(dist: &ConformalDistribution, cdf: impl Fn(f64) -> f64) -> f64 {
    let denom = (dist.n() + 1) as f64;
    let c = dist.critical_values();
    let groups = dist.tie_groups();
    let mut sup: f64 = 0.0;
    // Interval g runs from group g−1 to group g, with count `below` under it.
    let mut below = 0usize;
    let mut left_f = 0.0;
    for g in 0..=groups.len() {
        let right_f = if g < groups.len() { cdf(c[groups[g].start]) } else { 1.0 };
        sup = sup
            .max(right_f - below as f64 / denom)
            .max((below + 1) as f64 / denom - left_f);
        if g < groups.len() {
            below = groups[g].end;
            left_f = right_f;
        }
    }
    sup
}

/// `sup over y, τ of |Q₁(y, τ) − Q₂(y, τ)|`, exact.
pub fn sup_distance_between(d1: &ConformalDistribution, d2: &ConformalDistribution) -> f64 {
    let mut points: Vec<f64> = d1
        .critical_values()
        .iter()
        .chain(d2.critical_values())
        .copied()
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mut probes = vec![f64::NEG_INFINITY, f64::INFINITY];
    probes.extend_from_slice(&points);
    probes.extend(points.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    probes
        .iter()
        .flat_map(|&y| [0.0, 1.0].map(|tau| (d1.eval(y, tau) - d2.eval(y, tau)).abs()))
        .fold(0.0, f64::max)
}

/// Trig-model comparison at one test object.
#[derive(Debug, Clone, Serialize)]
pub struct Figure1 {
    pub n: usize,
    pub seed: u64,
    pub test: Vec<f64>,
    pub weights: Vec<f64>,
    pub bayes: GaussianPrediction,
    pub cpd_true: ConformalDistribution,
    pub cpd_laplacian: ConformalDistribution,
    pub cpd_linear: ConformalDistribution,
    pub sup_true: f64,
    pub sup_laplacian: f64,
    pub sup_linear: f64,
}

impl Figure1 {
    /// Bayesian CDF and the three conformal curves on a common grid.
    pub fn curves(&self, points: usize) -> Vec<Curve> {
        let sd = self.bayes.std_dev();
        let cpds = [&self.cpd_true, &self.cpd_laplacian, &self.cpd_linear];
        let span = curve_grid(&cpds, 0.0, 2);
        let lo = span[0].min(self.bayes.mean - 5.0 * sd);
        let hi = span[1].max(self.bayes.mean + 5.0 * sd);
        let grid = linspace(lo, hi, points);
        vec![
            Curve::from_cdf("bayes", |y| self.bayes.cdf(y), &grid),
            Curve::from_distribution("cpd_true", &self.cpd_true, &grid),
            Curve::from_distribution("cpd_laplacian", &self.cpd_laplacian, &grid),
            Curve::from_distribution("cpd_linear", &self.cpd_linear, &grid),
        ]
    }
}

/// `n` trig-model observations, test object (1, 1), `a = σ = 1`; studentized
/// machines with the true, Laplacian and linear kernels against the Bayesian
/// predictive distribution under the true kernel.
pub fn run_figure1(n: usize, seed: u64) -> Result<Figure1> {
    let data = gen_trig(n, seed)?;
    let test = vec![1.0, 1.0];
    let a = 1.0;

    let fit_with = |kernel: KernelSpec| FitState::fit(data.objects.clone(), data.labels.clone(), kernel, a);
    let fit_true = fit_with(KernelSpec::Trig2d)?;
    let fit_laplacian = fit_with(KernelSpec::laplacian(1.0)?)?;
    let fit_linear = fit_with(KernelSpec::Linear)?;

    let bayes = bayes_predict(&fit_true, &test, 1.0)?;
    let cpd_true = krrpm_predict(&fit_true, &test, Variant::Studentized)?;
    let cpd_laplacian = krrpm_predict(&fit_laplacian, &test, Variant::Studentized)?;
    let cpd_linear = krrpm_predict(&fit_linear, &test, Variant::Studentized)?;

    let cdf = |y| bayes.cdf(y);
    Ok(Figure1 {
        n,
        seed,
        weights: data.weights.clone(),
        sup_true: sup_distance_to_cdf(&cpd_true, cdf),
        sup_laplacian: sup_distance_to_cdf(&cpd_laplacian, cdf),
        sup_linear: sup_distance_to_cdf(&cpd_linear, cdf),
        test,
        bayes,
        cpd_true,
        cpd_laplacian,
        cpd_linear,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Panel {
    pub x_star: f64,
    pub variant: Variant,
    pub distribution: ConformalDistribution,
}

/// Triangle-data predictions at `x* = 0` and `x* = 1`.
#[derive(Debug, Clone, Serialize)]
pub struct Figure23 {
    pub n: usize,
    pub seed: u64,
    pub kernel: String,
    pub a: f64,
    pub panels: Vec<Panel>,
    /// Studentized vs ordinary at `x* = 0` and `x* = 1`.
    pub sup_studentized_vs_ordinary: [f64; 2],
    /// Studentized at `x* = 0` vs at `x* = 1`.
    pub sup_x0_vs_x1: f64,
}

impl Figure23 {
    pub fn panel(&self, x_star: f64, variant: Variant) -> Option<&Panel> {
        self.panels
            .iter()
            .find(|p| p.x_star == x_star && p.variant == variant)
    }

    pub fn curves(&self, points: usize) -> Vec<Curve> {
        let dists: Vec<&ConformalDistribution> = self.panels.iter().map(|p| &p.distribution).collect();
        let grid = curve_grid(&dists, 0.25, points);
        self.panels
            .iter()
            .map(|p| Curve::from_distribution(format!("{}_x{}", p.variant, p.x_star), &p.distribution, &grid))
            .collect()
    }
}

/// Laplacian kernel (scale 1) with `a = 1`, studentized and ordinary machines.
pub fn run_figure23(n: usize, seed: u64) -> Result<Figure23> {
    if n == 0 {
        return Err(Error::input("n must be at least 1"));
    }
    let data = gen_triangle(n, seed)?;
    let kernel = KernelSpec::laplacian(1.0)?;
    let a = 1.0;
    let fit = FitState::fit(data.objects.clone(), data.labels.clone(), kernel.clone(), a)?;

    let mut panels = Vec::with_capacity(4);
    for x_star in [0.0, 1.0] {
        for variant in [Variant::Studentized, Variant::Ordinary] {
            panels.push(Panel {
                x_star,
                variant,
                distribution: krrpm_predict(&fit, &[x_star], variant)?,
            });
        }
    }
    let dist = |i: usize| &panels[i].distribution;
    let sup_studentized_vs_ordinary = [
        sup_distance_between(dist(0), dist(1)),
        sup_distance_between(dist(2), dist(3)),
    ];
    let sup_x0_vs_x1 = sup_distance_between(dist(0), dist(2));

    Ok(Figure23 {
        n,
        seed,
        kernel: kernel.to_string(),
        a,
        panels,
        sup_studentized_vs_ordinary,
        sup_x0_vs_x1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpr::gaussian_cdf;

    fn dist(c: &[f64]) -> ConformalDistribution {
        ConformalDistribution::from_critical_values(c.to_vec(), Variant::Studentized).unwrap()
    }

    /// Brute force over a fine grid; a lower bound on the exact sup.
    fn sup_on_grid(d: &ConformalDistribution, cdf: impl Fn(f64) -> f64) -> f64 {
        linspace(-8.0, 8.0, 200_001)
            .into_iter()
            .flat_map(|y| [0.0, 1.0].map(|t| (d.eval(y, t) - cdf(y)).abs()))
            .fold(0.0, f64::max)
    }

    #[test]
    fn sup_to_cdf_matches_grid() {
        let p = GaussianPrediction { mean: 0.2, variance: 1.3, sigma: 1.0 };
        let d = dist(&[-1.5, -0.3, 0.1, 0.1, 0.9, 2.2]);
        let exact = sup_distance_to_cdf(&d, |y| gaussian_cdf(&p, y));
        let grid = sup_on_grid(&d, |y| gaussian_cdf(&p, y));
        assert!(exact >= grid - 1e-12);
        assert!(exact - grid < 1e-4, "{exact} vs {grid}");
    }

    #[test]
    fn sup_between_examples() {
        let d = dist(&[1.0, 2.0, 3.0]);
        assert_eq!(sup_distance_between(&d, &d), 0.0);
        let shifted = dist(&[1.5, 2.5, 3.5]);
        assert_eq!(sup_distance_between(&d, &shifted), 0.25);
        let far = dist(&[10.0, 11.0, 12.0]);
        assert_eq!(sup_distance_between(&d, &far), 0.75);
    }

    #[test]
    fn csv_format() {
        let d = dist(&[0.0]);
        let c = Curve::from_distribution("x", &d, &[-1.0, 0.0, 1.0]);
        assert_eq!(c.to_csv(), "y,Q0,Q1\n-1,0,0.5\n0,0,1\n1,0.5,1\n");
    }

    #[test]
    fn small_figure_runs() {
        let f = run_figure1(60, 1).unwrap();
        for curve in f.curves(64) {
            assert!(curve.q0.windows(2).all(|w| w[0] <= w[1]));
            assert!(curve.q0[0] < 0.05 && *curve.q1.last().unwrap() > 0.95, "{}", curve.name);
        }
        let g = run_figure23(10, 0).unwrap();
        assert_eq!(g.panels.len(), 4);
        for curve in g.curves(128) {
            assert!(curve.q0.iter().zip(&curve.q1).all(|(a, b)| b >= a));
        }
    }
}
