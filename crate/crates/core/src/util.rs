//! Small numeric and combinatorial helpers shared across modules.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Index of a word in the lexicographic enumeration of `base^len` words.
/// Position 0 is the most significant digit; the rightmost symbol varies
/// fastest as the index increments.
pub fn word_to_index(word: &[usize], base: usize) -> usize {
    word.iter().fold(0, |acc, &s| acc * base + s)
}

/// Inverse of [`word_to_index`].
pub fn index_to_word(mut index: usize, base: usize, len: usize) -> Vec<usize> {
    let mut word = vec![0; len];
    for slot in word.iter_mut().rev() {
        *slot = index % base;
        index /= base;
    }
    word
}

/// base^exp with overflow treated as an error by the caller.
pub fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

/// x * log2(x) with the 0 log 0 = 0 convention.
pub fn xlog2x(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// Binary entropy in bits.
pub fn h2(p: f64) -> f64 {
    -xlog2x(p) - xlog2x(1.0 - p)
}

/// Entropy of a pmf in bits.
pub fn entropy_bits(p: &[f64]) -> f64 {
    -p.iter().map(|&x| xlog2x(x)).sum::<f64>()
}

/// KL divergence D(p || q) in bits. Requires p << q; a p-atom outside the
/// support of q yields +inf.
pub fn kl_bits(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return f64::INFINITY;
            }
            acc += pi * (pi / qi).log2();
        }
    }
    acc
}

/// log2(sum 2^v) over a slice, stable against overflow.
pub fn log2_sum_exp2(vals: &[f64]) -> f64 {
    let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + vals.iter().map(|&v| (v - m).exp2()).sum::<f64>().log2()
}

/// 95% Wilson score interval for `successes` out of `trials`.
pub fn wilson_ci95(successes: u64, trials: u64) -> (f64, f64) {
    assert!(trials > 0, "wilson_ci95 needs at least one trial");
    let z = 1.959963984540054_f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // at the boundary counts the exact interval endpoint is 0 or 1; the
    // formula only gets there up to rounding
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

pub fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Best rational p/q approximation of `x` with q <= max_den, via continued
/// fractions. Returns None when even the best convergent misses `tol`.
pub fn rationalize(x: f64, max_den: u64, tol: f64) -> Option<(i64, u64)> {
    if !x.is_finite() {
        return None;
    }
    // convergents h_k / k_k of the continued fraction of x
    let (mut h0, mut h1): (i128, i128) = (1, x.floor() as i128);
    let (mut k0, mut k1): (i128, i128) = (0, 1);
    let mut frac = x - x.floor();
    for _ in 0..64 {
        let approx = h1 as f64 / k1 as f64;
        if (approx - x).abs() <= tol {
            return Some((h1 as i64, k1 as u64));
        }
        if frac == 0.0 {
            break;
        }
        let inv = 1.0 / frac;
        let a = inv.floor();
        frac = inv - a;
        let a = a as i128;
        let h2 = a * h1 + h0;
        let k2 = a * k1 + k0;
        if k2 > max_den as i128 || h2.abs() > i64::MAX as i128 {
            break;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
    }
    let approx = h1 as f64 / k1 as f64;
    if (approx - x).abs() <= tol {
        Some((h1 as i64, k1 as u64))
    } else {
        None
    }
}

/// n! / (k_1! k_2! ... k_m!) as a big integer. Requires sum(k) == n.
pub fn multinomial_big(n: usize, parts: &[usize]) -> BigInt {
    debug_assert_eq!(parts.iter().sum::<usize>(), n);
    let mut acc = BigInt::one();
    let mut rem = n;
    for &k in parts {
        // multiply C(rem, k) in, factor by factor
        for i in 0..k {
            acc *= BigInt::from(rem - i);
        }
        for i in 1..=k {
            acc /= BigInt::from(i);
        }
        rem -= k;
    }
    acc
}

/// Exact-as-possible f64 value of num/den for big integers (den > 0).
/// The quotient is computed with ~64 significant bits and rescaled, so the
/// result is correct to within a couple of ulps even when both arguments
/// are thousands of bits wide.
pub fn big_ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    assert!(den.is_positive(), "denominator must be positive");
    if num.is_zero() {
        return 0.0;
    }
    let neg = num.is_negative();
    let num = num.abs();
    let shift = num.bits() as i64 - den.bits() as i64;
    // scale numerator by 2^s so the integer quotient carries ~64 bits
    let s = 64 - shift;
    let q = if s >= 0 {
        (num << s as u64) / den
    } else {
        num / (den.clone() << (-s) as u64)
    };
    let qf = q.to_f64().unwrap_or(f64::INFINITY);
    // multiply by 2^-s in two steps so subnormal results survive
    let half = s / 2;
    let val = qf * (-(half) as f64).exp2() * (-(s - half) as f64).exp2();
    if neg {
        -val
    } else {
        val
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_index_roundtrip() {
        for idx in 0..27 {
            let w = index_to_word(idx, 3, 3);
            assert_eq!(word_to_index(&w, 3), idx);
        }
        // rightmost symbol varies fastest
        assert_eq!(index_to_word(1, 3, 3), vec![0, 0, 1]);
        assert_eq!(index_to_word(3, 3, 3), vec![0, 1, 0]);
    }

    #[test]
    fn entropy_values() {
        assert!((h2(0.5) - 1.0).abs() < 1e-15);
        assert!((h2(0.1) - 0.4689955935892812).abs() < 1e-12);
        assert_eq!(h2(0.0), 0.0);
    }

    #[test]
    fn rationalize_simple() {
        assert_eq!(rationalize(0.5, 100, 1e-12), Some((1, 2)));
        assert_eq!(rationalize(2.0 / 3.0, 100, 1e-9), Some((2, 3)));
        let (p, q) = rationalize(std::f64::consts::PI, 1_000_000, 1e-9).unwrap();
        assert!((p as f64 / q as f64 - std::f64::consts::PI).abs() <= 1e-9);
        assert!(rationalize(std::f64::consts::PI, 10, 1e-9).is_none());
    }

    #[test]
    fn multinomial_matches_binomial() {
        assert_eq!(multinomial_big(5, &[2, 3]), BigInt::from(10));
        assert_eq!(multinomial_big(6, &[2, 2, 2]), BigInt::from(90));
    }

    #[test]
    fn big_ratio_precision() {
        let num = multinomial_big(400, &[200, 200]);
        let den = &num * BigInt::from(2);
        let v = big_ratio_to_f64(&num, &den);
        assert!((v - 0.5).abs() < 1e-15);
        let tiny = big_ratio_to_f64(&BigInt::one(), &(BigInt::one() << 100u32));
        assert!((tiny - (2f64).powi(-100)).abs() < 1e-45);
    }

    #[test]
    fn wilson_interval_sane() {
        let (lo, hi) = wilson_ci95(50, 100);
        assert!(lo < 0.5 && 0.5 < hi);
        assert!(hi - lo < 0.25);
        let (lo, _) = wilson_ci95(0, 100);
        assert_eq!(lo, 0.0);
    }
}
