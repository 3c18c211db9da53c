use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Denominators tried when looking for an exact representation.
const EXACT_SEARCH_CAP: u64 = 4096;
/// Agreement required to call a denominator exact.
const EXACT_TOLERANCE: f64 = 1e-12;

/// Integer multiplicities `K(x)` with `K(x) / N ≈ P(x)` and `Σ K = N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rationalized {
    pub k: Vec<u64>,
    pub n: u64,
    /// `max_x |K(x)/N - P(x)|`.
    pub max_error: f64,
    /// Whether a denominator reproducing every weight (to `1e-12`) was found.
    pub exact: bool,
}

fn try_denominator(weights: &[f64], d: u64) -> Option<Vec<u64>> {
    let df = d as f64;
    let mut k = Vec::with_capacity(weights.len());
    let mut sum = 0u64;
    for &p in weights {
        let v = (p * df).round();
        if (v / df - p).abs() > EXACT_TOLERANCE || (p > 0.0 && v == 0.0) {
            return None;
        }
        sum += v as u64;
        k.push(v as u64);
    }
    (sum == d).then_some(k)
}

/// Largest-remainder apportionment of `d` units, with at least one unit for
/// every positive weight.
fn apportion(weights: &[f64], d: u64) -> Vec<u64> {
    let df = d as f64;
    let mut k: Vec<u64> = weights.iter().map(|&p| (p * df).floor() as u64).collect();
    let assigned: u64 = k.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    let frac = |i: usize| weights[i] * df - k[i] as f64;
    order.sort_by(|&a, &b| frac(b).total_cmp(&frac(a)).then(a.cmp(&b)));
    let mut remaining = d.saturating_sub(assigned);
    for &i in order.iter().cycle().take(weights.len() * 2) {
        if remaining == 0 {
            break;
        }
        if weights[i] > 0.0 {
            k[i] += 1;
            remaining -= 1;
        }
    }
    for i in 0..k.len() {
        if weights[i] > 0.0 && k[i] == 0 {
            let donor = (0..k.len()).max_by(|&a, &b| k[a].cmp(&k[b]).then(b.cmp(&a))).unwrap();
            k[donor] -= 1;
            k[i] = 1;
        }
    }
    k
}

/// Finds multiplicities for `weights` (a probability vector). Small exact
/// denominators are preferred; otherwise `N = max(ceil(1/ν), n)` with
/// largest-remainder rounding.
pub fn rationalize_weights(weights: &[f64], nu: f64, max_blowup: u64) -> Result<Rationalized> {
    if !(nu >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be nonnegative, got {nu}"
        )));
    }
    let n = weights.len();
    let finish = |k: Vec<u64>, d: u64, exact: bool| {
        let max_error = k
            .iter()
            .zip(weights)
            .map(|(&ki, &p)| (ki as f64 / d as f64 - p).abs())
            .fold(0.0, f64::max);
        Rationalized {
            k,
            n: d,
            max_error,
            exact,
        }
    };
    for d in 1..=EXACT_SEARCH_CAP.min(max_blowup) {
        if let Some(k) = try_denominator(weights, d) {
            return Ok(finish(k, d, true));
        }
    }
    let needed = (1.0 / nu).ceil().max(n as f64).max(1.0);
    if !(needed <= max_blowup as f64) || needed > (1u64 << 53) as f64 {
        return Err(Error::BlowupTooLarge {
            needed,
            cap: max_blowup,
        });
    }
    let d = needed as u64;
    let out = finish(apportion(weights, d), d, false);
    let allowed = nu + n as f64 * (1.0 + nu) * nu;
    if out.max_error > allowed {
        return Err(Error::BlowupTooLarge {
            needed: d as f64,
            cap: max_blowup,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_examples() {
        let r = rationalize_weights(&[0.5, 0.25, 0.25], 0.0, 1 << 40).unwrap();
        assert_eq!((r.k, r.n), (vec![2, 1, 1], 4));
        let third = 1.0 / 3.0;
        let r = rationalize_weights(&[third; 3], 0.0, 1 << 40).unwrap();
        assert_eq!((r.k, r.n), (vec![1, 1, 1], 3));
        let r = rationalize_weights(&[0.7, 0.3], 0.01, 1 << 40).unwrap();
        assert_eq!((r.k, r.n), (vec![7, 3], 10));
    }

    #[test]
    fn irrational_weights_use_tolerance() {
        let a = 1.0 / std::f64::consts::PI;
        let w = [a, 1.0 - a];
        let r = rationalize_weights(&w, 1e-6, 1 << 40).unwrap();
        assert!(!r.exact);
        assert_eq!(r.k.iter().sum::<u64>(), r.n);
        assert!(r.max_error <= 1e-6);
        assert!(matches!(
            rationalize_weights(&w, 0.0, 1 << 40),
            Err(Error::BlowupTooLarge { .. })
        ));
        assert!(matches!(
            rationalize_weights(&w, 1e-9, 1000),
            Err(Error::BlowupTooLarge { .. })
        ));
    }

    #[test]
    fn zero_weights_get_no_copies() {
        let r = rationalize_weights(&[0.5, 0.0, 0.5], 0.0, 1 << 40).unwrap();
        assert_eq!(r.k, vec![1, 0, 1]);
    }
}
