//! Small numerical helpers: `libm` wrappers, deterministic summation and the
//! Hurwitz zeta function used for power-law branch tails.

/// Natural logarithm.
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

/// Exponential.
#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

/// `x` raised to the real power `y`.
#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

/// Sine.
#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

/// Cosine.
#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

/// Absolute value.
#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// Floor.
#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

/// Ceiling.
#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

/// Square root.
#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

/// Sum with a fixed pairwise reduction tree.
///
/// The tree depends only on the slice length, so the result is reproducible
/// no matter how the terms were produced.
pub fn pairwise_sum(terms: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if terms.len() <= LEAF {
        let mut acc = 0.0;
        for &t in terms {
            acc += t;
        }
        return acc;
    }
    let mid = terms.len() / 2;
    pairwise_sum(&terms[..mid]) + pairwise_sum(&terms[mid..])
}

/// Largest absolute entry (0 for an empty slice).
pub fn sup_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, &v| m.max(abs(v)))
}

/// `B_{2j} / (2j)!` for `j = 1..=10`.
const BERNOULLI_OVER_FACTORIAL: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
    43867.0 / 5109094217170944000.0,
    -174611.0 / 802857662698291200000.0,
];

/// Hurwitz zeta function `ζ(s, q) = Σ_{k ≥ 0} (q + k)^{−s}` for `s > 1`, `q > 0`.
///
/// Evaluated by Euler–Maclaurin summation after shifting `q` past
/// `max(10, s)`, which keeps every correction term below `(2π)^{−2j}` of the
/// leading one. Relative accuracy is close to machine precision.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    debug_assert!(s > 1.0 && q > 0.0);
    let target = if s > 10.0 { s } else { 10.0 };
    let shift = if q < target {
        ceil(target - q) as usize
    } else {
        0
    };
    let mut head = 0.0;
    for k in 0..shift {
        head += powf(q + k as f64, -s);
    }
    let w = q + shift as f64;
    let w_pow = powf(w, -s);
    let mut tail = w * w_pow / (s - 1.0) + 0.5 * w_pow;
    // Correction terms c_j · s(s+1)…(s+2j−2) · w^{−s−2j+1}.
    let mut rising = s;
    let mut power = w_pow / w;
    let inv_w2 = 1.0 / (w * w);
    for (j, c) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        let term = c * rising * power;
        tail += term;
        if abs(term) <= 1e-17 * abs(tail) {
            break;
        }
        let a = s + (2 * j + 1) as f64;
        rising *= a * (a + 1.0);
        power *= inv_w2;
    }
    head + tail
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct partial sum plus an integral bound on the remainder.
    fn brute_zeta(s: f64, q: f64) -> f64 {
        let n = 200_000;
        let mut acc = 0.0;
        for k in (0..n).rev() {
            acc += powf(q + k as f64, -s);
        }
        let w = q + n as f64;
        // Σ_{k ≥ n} (q+k)^{-s} ≈ ∫_{w}^{∞} + half endpoint + first correction.
        acc + powf(w, 1.0 - s) / (s - 1.0) + 0.5 * powf(w, -s) + s * powf(w, -s - 1.0) / 12.0
    }

    #[test]
    fn basel_value() {
        let pi = core::f64::consts::PI;
        assert!((hurwitz_zeta(2.0, 1.0) - pi * pi / 6.0).abs() < 1e-15);
        // ζ(2, 3/2) = π²/2 − 4
        assert!((hurwitz_zeta(2.0, 1.5) - (pi * pi / 2.0 - 4.0)).abs() < 1e-14);
        // ζ(4, 1) = π⁴/90
        assert!((hurwitz_zeta(4.0, 1.0) - pi.powi(4) / 90.0).abs() < 1e-15);
    }

    #[test]
    fn matches_partial_sums() {
        for &(s, q) in &[
            (1.3, 0.2),
            (2.0, 257.5),
            (2.7, 3.0),
            (3.0, 1e-3),
            (6.5, 41.0),
        ] {
            let fast = hurwitz_zeta(s, q);
            let slow = brute_zeta(s, q);
            assert!(
                ((fast - slow) / slow).abs() < 1e-11,
                "s={s} q={q}: {fast} vs {slow}"
            );
        }
    }

    #[test]
    fn large_exponent_is_dominated_by_first_term() {
        let s = 80.0;
        let q = 2.0;
        let lead = powf(q, -s);
        let z = hurwitz_zeta(s, q);
        assert!(z >= lead && z < lead * (1.0 + 2.0 * powf(1.5, -s)));
    }

    #[test]
    fn pairwise_sum_is_exact_on_small_integers() {
        let v: alloc::vec::Vec<f64> = (1..=1000).map(|k| k as f64).collect();
        assert_eq!(pairwise_sum(&v), 500500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }
}
