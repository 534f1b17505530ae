use std::ops::Range;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::Variant;
use crate::error::{Error, Result};

/// Significant digits kept when deciding whether two critical values tie.
const TIE_DIGITS: i32 = 12;

/// Step-function predictive distribution defined by sorted critical values
/// `C₍₁₎ ≤ … ≤ C₍ₙ₎`:
///
/// ```text
/// Q(y, τ) = (i + τ) / (n + 1)                   y ∈ (C₍ᵢ₎, C₍ᵢ₊₁₎)
/// Q(y, τ) = (i' − 1 + τ(i'' − i' + 2)) / (n + 1)   y = C₍ᵢ₎
/// ```
///
/// with `C₍₀₎ = −∞`, `C₍ₙ₊₁₎ = +∞` and `i'..=i''` the tie group containing `i`.
///
/// Ties are decided on a grid of spacing `10^(e − 11)`, where `10^e` is the
/// order of magnitude of the largest `|Cᵢ|`, i.e. twelve significant digits
/// at the scale of the distribution. Candidate labels are snapped to the same
/// grid, so `Q` stays monotone in `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalDistribution {
    variant: Variant,
    c_sorted: Vec<f64>,
    quantum: f64,
    keys: Vec<f64>,
    tie_groups: Vec<Range<usize>>,
}

impl ConformalDistribution {
    /// Sorts (stably) and groups the critical values.
    pub fn from_critical_values(mut c: Vec<f64>, variant: Variant) -> Result<Self> {
        if c.is_empty() {
            return Err(Error::input("a conformal distribution needs at least one critical value"));
        }
        if let Some(i) = c.iter().position(|v| !v.is_finite()) {
            return Err(Error::numeric(format!("critical value {i} is not finite ({})", c[i])));
        }
        c.sort_by(|a, b| a.total_cmp(b));

        let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let quantum = if scale > 0.0 {
            10f64.powi(scale.log10().floor() as i32 - (TIE_DIGITS - 1))
        } else {
            f64::MIN_POSITIVE
        };
        let keys: Vec<f64> = c.iter().map(|&v| snap(v, quantum)).collect();

        let mut tie_groups = Vec::new();
        let mut start = 0;
        for i in 1..=keys.len() {
            if i == keys.len() || keys[i] != keys[start] {
                tie_groups.push(start..i);
                start = i;
            }
        }

        Ok(Self {
            variant,
            c_sorted: c,
            quantum,
            keys,
            tie_groups,
        })
    }

    pub fn n(&self) -> usize {
        self.c_sorted.len()
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// `C₍₁₎ ≤ … ≤ C₍ₙ₎`
    pub fn critical_values(&self) -> &[f64] {
        &self.c_sorted
    }

    /// Zero-based index ranges of equal critical values, in increasing order.
    pub fn tie_groups(&self) -> &[Range<usize>] {
        &self.tie_groups
    }

    /// `(#{Cᵢ < y}, #{Cᵢ = y})` under the tie rule. `Q(y, τ)` is
    /// `(less + τ·(equal + 1)) / (n + 1)`.
    pub fn counts(&self, y: f64) -> (usize, usize) {
        assert!(!y.is_nan(), "candidate label is NaN");
        let key = snap(y, self.quantum);
        let less = self.keys.partition_point(|&k| k < key);
        let not_greater = self.keys.partition_point(|&k| k <= key);
        (less, not_greater - less)
    }

    /// `Q(y, τ)`; `τ` must lie in [0, 1].
    pub fn eval(&self, y: f64, tau: f64) -> f64 {
        assert!((0.0..=1.0).contains(&tau), "tau = {tau} is outside [0, 1]");
        let (less, equal) = self.counts(y);
        (less as f64 + tau * (equal + 1) as f64) / (self.n() + 1) as f64
    }

    /// Smallest `y` with `Q(y, τ) ≥ level`, or the infimum of that set when it
    /// is an open interval starting at some `C₍ᵢ₎`. Returns `−∞` when the level
    /// is already reached below `C₍₁₎` and `+∞` when it is never reached.
    pub fn quantile(&self, level: f64, tau: f64) -> Result<f64> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::input(format!("quantile level must be in (0, 1), got {level}")));
        }
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::input(format!("tau = {tau} is outside [0, 1]")));
        }
        let denom = (self.n() + 1) as f64;
        if tau / denom >= level {
            return Ok(f64::NEG_INFINITY);
        }
        for group in &self.tie_groups {
            // Q just above the group; the value at the point itself is no larger.
            if (group.end as f64 + tau) / denom >= level {
                return Ok(self.c_sorted[group.start]);
            }
        }
        Ok(f64::INFINITY)
    }
}

fn snap(v: f64, quantum: f64) -> f64 {
    (v / quantum).round()
}

#[derive(Serialize, Deserialize)]
struct Wire {
    n: usize,
    #[serde(rename = "C")]
    c: Vec<f64>,
    variant: Variant,
}

impl Serialize for ConformalDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        Wire {
            n: self.n(),
            c: self.c_sorted.clone(),
            variant: self.variant,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ConformalDistribution {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let wire = Wire::deserialize(deserializer)?;
        if wire.n != wire.c.len() {
            return Err(D::Error::custom(format!(
                "n = {} but {} critical values",
                wire.n,
                wire.c.len()
            )));
        }
        if wire.c.windows(2).any(|w| w[0] > w[1]) {
            return Err(D::Error::custom("critical values are not sorted"));
        }
        ConformalDistribution::from_critical_values(wire.c, wire.variant).map_err(D::Error::custom)
    }
}
