use serde::{Deserialize, Serialize};

use super::{hyp_exact, BadSetProfile};
use crate::error::{Error, Result};
use crate::space::SimilaritySpace;

/// Lower bound on `δ₀` when the space has zero hyperbolicity:
/// `f64::EPSILON^(1/8)`.
pub const DELTA0_FLOOR: f64 = 0.011_048_543_456_039_806;

/// Thresholds `t_1 < ... < t_N` near the multiples of `κ`, each avoiding the
/// bad set of thresholds with large triple-defect mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdLadder {
    pub epsilon: f64,
    pub m: usize,
    pub kappa: f64,
    pub hyp: f64,
    pub delta0: f64,
    /// How `delta0` was obtained: `"hyp"`, `"floor"` or `"override"`.
    pub delta0_source: String,
    pub n: usize,
    pub thresholds: Vec<f64>,
    /// `P⊗3(R_{t_i})` for each threshold.
    pub masses: Vec<f64>,
    pub profile: BadSetProfile,
}

pub fn kappa(epsilon: f64, m: usize) -> f64 {
    epsilon.powf(1.0 / 24.0).max((m as f64).powf(-0.5))
}

/// Largest `N` with `N κ < 1`.
pub fn ladder_length(kappa: f64) -> usize {
    let mut n = (1.0 / kappa).floor() as usize;
    while n > 0 && n as f64 * kappa >= 1.0 {
        n -= 1;
    }
    while (n + 1) as f64 * kappa < 1.0 {
        n += 1;
    }
    n
}

pub(crate) fn check_epsilon_m(epsilon: f64, m: usize) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    if m < 2 {
        return Err(Error::InvalidParameter(format!("m must be at least 2, got {m}")));
    }
    Ok(())
}

/// Builds the ladder for a space with bound 1. `δ₀ = Hyp^(1/8)` (floored at
/// [`DELTA0_FLOOR`]) unless `delta0_override` is given.
pub fn threshold_ladder(
    space: &SimilaritySpace,
    epsilon: f64,
    m: usize,
    delta0_override: Option<f64>,
) -> Result<ThresholdLadder> {
    if space.bound != 1.0 {
        return Err(Error::NotUnitBound(space.bound));
    }
    check_epsilon_m(epsilon, m)?;
    let kappa = kappa(epsilon, m);
    let hyp = hyp_exact(space);
    let (delta0, delta0_source) = match delta0_override {
        Some(d) if !(d > 0.0 && d.is_finite()) => {
            return Err(Error::InvalidParameter(format!("delta0 must be positive, got {d}")));
        }
        Some(d) => (d, "override"),
        None => {
            let d = hyp.powf(0.125);
            if d < DELTA0_FLOOR {
                (DELTA0_FLOOR, "floor")
            } else {
                (d, "hyp")
            }
        }
    };
    if delta0 >= kappa / 2.0 {
        return Err(Error::Delta0TooLarge {
            delta0,
            half_kappa: kappa / 2.0,
        });
    }
    let n = ladder_length(kappa);
    let profile = BadSetProfile::compute(space);
    let budget = delta0.powi(4);
    let below_one = 1.0f64.next_down();

    let mut thresholds = Vec::with_capacity(n);
    let mut masses = Vec::with_capacity(n);
    for i in 1..=n {
        let center = i as f64 * kappa;
        let lo = center - delta0;
        let hi = (center + delta0).min(below_one);
        // the smallest point of every piece meeting [lo, hi]
        let mut best_t = lo;
        let mut best = profile.eval(lo);
        let start = profile.breakpoints.partition_point(|&v| v < lo);
        for &v in &profile.breakpoints[start..] {
            let t = v.next_up();
            if t > hi {
                break;
            }
            let mass = profile.eval(t);
            if mass < best {
                best = mass;
                best_t = t;
            }
        }
        if !(best < budget) {
            return Err(Error::NoGoodThreshold { index: i, best });
        }
        thresholds.push(best_t);
        masses.push(best);
    }

    Ok(ThresholdLadder {
        epsilon,
        m,
        kappa,
        hyp,
        delta0,
        delta0_source: delta0_source.to_string(),
        n,
        thresholds,
        masses,
        profile,
    })
}
