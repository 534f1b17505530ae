//! Monte Carlo and exact checks that the predictive distribution is
//! calibrated in probability: `Q(z₁, …, zₙ, zₙ₊₁, τ) ~ U[0, 1]` when the
//! observations are IID and `τ ~ U[0, 1]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::datagen::{stream_rng, Generator};
use crate::cps::{krrpm_predict, Variant};
use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, Objects};
use crate::ridge::FitState;

pub const MIN_TRIALS: usize = 100;

/// Asymptotic 5% critical value of the one-sample KS statistic, `1.358/√M`.
pub fn ks_critical_5pct(trials: usize) -> f64 {
    1.358 / (trials as f64).sqrt()
}

#[derive(Debug, Clone)]
pub struct CalibrationConfig {
    pub generator: Generator,
    /// Training set size; each trial draws `n + 1` observations.
    pub n: usize,
    pub kernel: KernelSpec,
    pub a: f64,
    pub variant: Variant,
    pub trials: usize,
    pub seed: u64,
    pub bins: usize,
}

impl CalibrationConfig {
    pub fn new(generator: Generator, n: usize, kernel: KernelSpec, a: f64, variant: Variant, trials: usize, seed: u64) -> Self {
        Self {
            generator,
            n,
            kernel,
            a,
            variant,
            trials,
            seed,
            bins: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub generator: Generator,
    pub n: usize,
    pub kernel: String,
    pub a: f64,
    pub variant: Variant,
    pub trials: usize,
    pub seed: u64,
    pub pit_values: Vec<f64>,
    /// `sup |F̂(u) − u|` over the PIT sample.
    pub ks_statistic: f64,
    pub ks_critical_5pct: f64,
    /// Equal-width bin counts of the PIT values over [0, 1].
    pub histogram: Vec<usize>,
}

impl CalibrationReport {
    pub fn passes(&self, threshold: f64) -> bool {
        self.ks_statistic < threshold
    }
}

/// Exact one-sample Kolmogorov–Smirnov distance to U[0, 1]:
/// `max over i of max(i/M − u₍ᵢ₎, u₍ᵢ₎ − (i−1)/M)`.
pub fn ks_statistic(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let u = u.clamp(0.0, 1.0);
            ((i + 1) as f64 / m - u).max(u - i as f64 / m)
        })
        .fold(0.0, f64::max)
}

pub fn histogram(values: &[f64], bins: usize) -> Vec<usize> {
    let mut counts = vec![0; bins];
    for &v in values {
        let b = ((v * bins as f64) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
}

/// Runs `trials` independent prediction problems and records the PIT value of
/// the true label in each. Trial `t` uses RNG stream `t` of `seed`.
pub fn calibration_suite(config: &CalibrationConfig) -> Result<CalibrationReport> {
    if config.trials < MIN_TRIALS {
        return Err(Error::input(format!(
            "calibration needs at least {MIN_TRIALS} trials, got {}",
            config.trials
        )));
    }
    if config.n == 0 {
        return Err(Error::input("training size n must be at least 1"));
    }
    if config.bins == 0 {
        return Err(Error::input("histogram needs at least one bin"));
    }

    let pit_values = (0..config.trials)
        .map(|t| run_trial(config, t as u64).map_err(|e| with_trial(e, t)))
        .collect::<Result<Vec<_>>>()?;

    Ok(CalibrationReport {
        generator: config.generator,
        n: config.n,
        kernel: config.kernel.to_string(),
        a: config.a,
        variant: config.variant,
        trials: config.trials,
        seed: config.seed,
        ks_statistic: ks_statistic(&pit_values),
        ks_critical_5pct: ks_critical_5pct(config.trials),
        histogram: histogram(&pit_values, config.bins),
        pit_values,
    })
}

fn run_trial(config: &CalibrationConfig, trial: u64) -> Result<f64> {
    let mut rng = stream_rng(config.seed, trial);
    let data = config.generator.generate(config.n + 1, &mut rng)?;
    let tau: f64 = rng.random();
    let (objects, labels, test, y) = data.split_last().expect("n + 1 >= 2 observations");
    let fit = FitState::fit(objects, labels, config.kernel.clone(), config.a)?;
    let dist = krrpm_predict(&fit, &test, config.variant)?;
    Ok(dist.eval(y, tau))
}

fn with_trial(e: Error, trial: usize) -> Error {
    match e {
        Error::Input(m) => Error::Input(format!("trial {trial}: {m}")),
        Error::Numeric(m) => Error::Numeric(format!("trial {trial}: {m}")),
        nm @ Error::NonMonotone { .. } => Error::Numeric(format!("trial {trial}: {nm}")),
    }
}

/// A finitely supported distribution of observations.
#[derive(Debug, Clone)]
pub struct DiscreteDistribution {
    /// `(object, label, probability)`
    pub atoms: Vec<(Vec<f64>, f64, f64)>,
}

/// `P(PIT ≤ u)` computed exactly by enumerating every `(n + 1)`-tuple of
/// atoms and integrating `τ` out analytically. Under exact calibration this
/// equals `u`.
pub fn exact_pit_cdf(
    dist: &DiscreteDistribution,
    n: usize,
    kernel: &KernelSpec,
    a: f64,
    variant: Variant,
    u: f64,
) -> Result<f64> {
    let k = dist.atoms.len();
    if k == 0 || n == 0 {
        return Err(Error::input("need at least one atom and n >= 1"));
    }
    let outcomes = k
        .checked_pow(n as u32 + 1)
        .filter(|&c| c <= 1_000_000)
        .ok_or_else(|| Error::input("too many outcomes to enumerate"))?;

    let mut total = 0.0;
    let mut idx = vec![0usize; n + 1];
    for code in 0..outcomes {
        let mut c = code;
        for slot in idx.iter_mut() {
            *slot = c % k;
            c /= k;
        }
        let prob: f64 = idx.iter().map(|&i| dist.atoms[i].2).product();
        let rows: Vec<&[f64]> = idx[..n].iter().map(|&i| dist.atoms[i].0.as_slice()).collect();
        let labels: Vec<f64> = idx[..n].iter().map(|&i| dist.atoms[i].1).collect();
        let (test, y) = (&dist.atoms[idx[n]].0, dist.atoms[idx[n]].1);

        let fit = FitState::fit(Objects::from_rows(&rows)?, labels, kernel.clone(), a)?;
        let (less, equal) = krrpm_predict(&fit, test, variant)?.counts(y);
        // Q = (less + τ·(equal + 1)) / (n + 1) ≤ u  ⇔  τ ≤ ((n + 1)u − less) / (equal + 1)
        let p_tau = (((n + 1) as f64 * u - less as f64) / (equal + 1) as f64).clamp(0.0, 1.0);
        total += prob * p_tau;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_of_point_mass() {
        assert!((ks_statistic(&vec![0.5; 1000]) - 0.5).abs() < 1e-12);
        assert!(ks_statistic(&vec![0.5; 1000]) >= 0.45);
    }

    #[test]
    fn ks_of_perfect_grid() {
        let m = 200;
        let v: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
        assert!((ks_statistic(&v) - 0.5 / m as f64).abs() < 1e-12);
    }

    #[test]
    fn histogram_bins() {
        assert_eq!(histogram(&[0.0, 0.05, 0.5, 0.99, 1.0], 10), vec![2, 0, 0, 0, 0, 1, 0, 0, 0, 2]);
    }

    #[test]
    fn rejects_few_trials() {
        let cfg = CalibrationConfig::new(Generator::Trig, 5, KernelSpec::Linear, 1.0, Variant::Studentized, 99, 0);
        assert!(matches!(calibration_suite(&cfg), Err(Error::Input(_))));
    }

    #[test]
    fn single_observation_edge_case() {
        let cfg = CalibrationConfig::new(
            Generator::Triangle,
            1,
            KernelSpec::laplacian(1.0).unwrap(),
            1.0,
            Variant::Studentized,
            100,
            4,
        );
        let report = calibration_suite(&cfg).unwrap();
        assert_eq!(report.pit_values.len(), 100);
        for &p in &report.pit_values {
            assert!((0.0..=1.0).contains(&p));
            // (less + τ·(equal + 1)) / 2 with less, equal ∈ {0, 1}
            let twice = 2.0 * p;
            assert!(twice <= 2.0);
        }
        assert_eq!(report.histogram.iter().sum::<usize>(), 100);
    }

    #[test]
    fn deterministic_reports() {
        let cfg = CalibrationConfig::new(Generator::Trig, 8, KernelSpec::Linear, 1.0, Variant::Studentized, 150, 42);
        let r1 = serde_json::to_string(&calibration_suite(&cfg).unwrap()).unwrap();
        let r2 = serde_json::to_string(&calibration_suite(&cfg).unwrap()).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn exact_enumeration_small() {
        let dist = DiscreteDistribution {
            atoms: vec![(vec![0.0], -1.0, 0.2), (vec![0.5], 0.3, 0.3), (vec![1.0], 2.0, 0.5)],
        };
        let kernel = KernelSpec::laplacian(1.0).unwrap();
        for variant in Variant::ALL {
            for u in [0.1, 1.0 / 3.0, 0.5, 2.0 / 3.0, 1.0] {
                let p = exact_pit_cdf(&dist, 2, &kernel, 1.0, variant, u).unwrap();
                assert!((p - u).abs() < 1e-9, "{variant}: P(PIT <= {u}) = {p}");
            }
        }
    }
}
