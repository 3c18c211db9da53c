//! Exact summation of binary floating-point values.
//!
//! [`ExactSum`] is a fixed-point superaccumulator spanning the whole `f64`
//! exponent range, so additions never round and the running total is
//! independent of the order of the terms. [`ExactSum::value`] rounds the
//! exact total to the nearest `f64` (ties to even) once.
//!
//! Products of several factors are added exactly by expanding them with
//! FMA-based error-free transformations (exact as long as no partial product
//! underflows, i.e. stays above roughly `1e-290` in magnitude).

const LIMB_BITS: u32 = 32;
const LIMB_MASK: i64 = (1i64 << LIMB_BITS) - 1;
// 2098 bits of f64 range plus headroom for ~2^70 terms.
const NLIMBS: usize = 68;
const RENORMALIZE_EVERY: u32 = 1 << 30;

#[derive(Clone)]
pub struct ExactSum {
    limbs: [i64; NLIMBS],
    pending: u32,
}

impl Default for ExactSum {
    fn default() -> Self {
        Self::new()
    }
}

impl std::fmt::Debug for ExactSum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_tuple("ExactSum").field(&self.value()).finish()
    }
}

/// `a * b` as an unevaluated sum `hi + lo` (exact barring underflow).
#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let hi = a * b;
    let lo = a.mul_add(b, -hi);
    (hi, lo)
}

impl ExactSum {
    pub fn new() -> Self {
        Self {
            limbs: [0; NLIMBS],
            pending: 0,
        }
    }

    /// Adds one finite value exactly. Non-finite values panic.
    #[inline]
    pub fn add(&mut self, x: f64) {
        if x == 0.0 {
            return;
        }
        assert!(x.is_finite(), "ExactSum::add on non-finite value {x}");
        let bits = x.to_bits();
        let negative = bits >> 63 == 1;
        let exp = ((bits >> 52) & 0x7ff) as usize;
        let frac = bits & ((1u64 << 52) - 1);
        // x = mant * 2^(pos - 1074)
        let (mant, pos) = if exp == 0 {
            (frac, 0usize)
        } else {
            (frac | (1u64 << 52), exp - 1)
        };
        let limb = pos / LIMB_BITS as usize;
        let shifted = (mant as u128) << (pos % LIMB_BITS as usize);
        let c0 = (shifted as i64) & LIMB_MASK;
        let c1 = ((shifted >> 32) as i64) & LIMB_MASK;
        let c2 = (shifted >> 64) as i64;
        if negative {
            self.limbs[limb] -= c0;
            self.limbs[limb + 1] -= c1;
            self.limbs[limb + 2] -= c2;
        } else {
            self.limbs[limb] += c0;
            self.limbs[limb + 1] += c1;
            self.limbs[limb + 2] += c2;
        }
        self.pending += 1;
        if self.pending >= RENORMALIZE_EVERY {
            self.normalize();
        }
    }

    /// Adds the exact product of all `factors`.
    pub fn add_product(&mut self, factors: &[f64]) {
        let mut terms = [0.0f64; 16];
        let mut len = 0;
        let Some((&first, rest)) = factors.split_first() else {
            return;
        };
        assert!(rest.len() <= 4, "at most five factors supported");
        terms[0] = first;
        len += 1;
        for &f in rest {
            let mut next = [0.0f64; 16];
            let mut next_len = 0;
            for &t in &terms[..len] {
                let (hi, lo) = two_prod(t, f);
                if hi != 0.0 {
                    next[next_len] = hi;
                    next_len += 1;
                }
                if lo != 0.0 {
                    next[next_len] = lo;
                    next_len += 1;
                }
            }
            terms = next;
            len = next_len;
            if len == 0 {
                return;
            }
        }
        for &t in &terms[..len] {
            self.add(t);
        }
    }

    pub fn merge(&mut self, other: &ExactSum) {
        let mut other = other.clone();
        other.normalize();
        self.normalize();
        for (a, b) in self.limbs.iter_mut().zip(other.limbs.iter()) {
            *a += *b;
        }
        self.pending = 2;
        self.normalize();
    }

    fn normalize(&mut self) {
        for k in 0..NLIMBS - 1 {
            let carry = self.limbs[k] >> LIMB_BITS;
            self.limbs[k] -= carry << LIMB_BITS;
            self.limbs[k + 1] += carry;
        }
        self.pending = 0;
    }

    /// The exact total rounded to the nearest `f64`.
    pub fn value(&self) -> f64 {
        let mut acc = self.clone();
        acc.normalize();
        let mut sign = 1.0;
        if acc.limbs[NLIMBS - 1] < 0 {
            for l in acc.limbs.iter_mut() {
                *l = -*l;
            }
            acc.normalize();
            sign = -1.0;
        }
        let limbs = &acc.limbs;
        let Some(top) = (0..NLIMBS).rev().find(|&k| limbs[k] != 0) else {
            return 0.0;
        };
        let top_bit = top * LIMB_BITS as usize + (63 - (limbs[top] as u64).leading_zeros() as usize);
        let bit = |p: usize| -> u64 { ((limbs[p / 32] as u64) >> (p % 32)) & 1 };

        if top_bit <= 52 {
            // below 2^53 * 2^-1074: exactly representable
            let mut int = 0u64;
            for p in (0..=top_bit).rev() {
                int = (int << 1) | bit(p);
            }
            return sign * (int as f64) * f64::from_bits(1);
        }

        let mut mant = 0u64;
        for p in (top_bit - 52..=top_bit).rev() {
            mant = (mant << 1) | bit(p);
        }
        let round_pos = top_bit - 53;
        let round = bit(round_pos) == 1;
        let sticky = (0..round_pos).any(|p| bit(p) == 1);
        let mut top_bit = top_bit;
        if round && (sticky || mant & 1 == 1) {
            mant += 1;
            if mant == 1u64 << 53 {
                mant >>= 1;
                top_bit += 1;
            }
        }
        let biased = top_bit as u64 - 51;
        if biased >= 2047 {
            return sign * f64::INFINITY;
        }
        sign * f64::from_bits((biased << 52) | (mant & ((1u64 << 52) - 1)))
    }
}

impl Extend<f64> for ExactSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

impl FromIterator<f64> for ExactSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = ExactSum::new();
        acc.extend(iter);
        acc
    }
}

/// Correctly rounded sum of a sequence.
pub fn exact_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<ExactSum>().value()
}
