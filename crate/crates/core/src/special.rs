//! Complex log-gamma, digamma and the trigonometric helpers needed by the
//! reflection formula. Everything here works in log space so that
//! `sin(pi s / 2)` and `Gamma(1 - s)` never overflow at large heights.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Even-index Bernoulli numbers `B_2, B_4, ..., B_26`.
pub(crate) const BERNOULLI_EVEN: [f64; 13] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
];

const STIRLING_SHIFT: f64 = 15.0;
const STIRLING_TERMS: usize = 8;

/// `ln Gamma(z)` modulo `2 pi i`.
///
/// For `z` in the upper half plane with positive real part the imaginary
/// part is the continuous branch, which `rs_theta` relies on for small `t`.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    let mut z = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while z.re < STIRLING_SHIFT {
        shift += z.ln();
        z += 1.0;
    }
    let ln_z = z.ln();
    let mut acc = (z - 0.5) * ln_z - z + 0.5 * (2.0 * PI).ln();
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut pow = inv;
    for (k, b) in BERNOULLI_EVEN.iter().take(STIRLING_TERMS).enumerate() {
        let two_k = 2.0 * (k as f64 + 1.0);
        acc += pow * (*b / (two_k * (two_k - 1.0)));
        pow *= inv2;
    }
    acc - shift
}

/// Digamma `psi(z) = Gamma'(z) / Gamma(z)`.
pub fn digamma(z: Complex64) -> Complex64 {
    let mut z = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while z.re < STIRLING_SHIFT {
        shift += z.inv();
        z += 1.0;
    }
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut acc = z.ln() - 0.5 * inv;
    let mut pow = inv2;
    for (k, b) in BERNOULLI_EVEN.iter().take(STIRLING_TERMS).enumerate() {
        let two_k = 2.0 * (k as f64 + 1.0);
        acc -= pow * (*b / two_k);
        pow *= inv2;
    }
    acc - shift
}

const DIRECT_TRIG_LIMIT: f64 = 20.0;

/// `ln sin(z)` modulo `2 pi i`, stable for large `|Im z|`.
pub fn ln_sin(z: Complex64) -> Complex64 {
    let i = Complex64::i();
    if z.im.abs() < DIRECT_TRIG_LIMIT {
        z.sin().ln()
    } else if z.im > 0.0 {
        let q = (2.0 * i * z).exp();
        -i * z - 2f64.ln() + i * (PI / 2.0) + (1.0 - q).ln()
    } else {
        let q = (-2.0 * i * z).exp();
        i * z - 2f64.ln() - i * (PI / 2.0) + (1.0 - q).ln()
    }
}

/// `cot(z)`, stable for large `|Im z|`.
pub fn cot(z: Complex64) -> Complex64 {
    let i = Complex64::i();
    if z.im.abs() < DIRECT_TRIG_LIMIT {
        z.cos() / z.sin()
    } else if z.im > 0.0 {
        let q = (2.0 * i * z).exp();
        -i * (1.0 + q) / (1.0 - q)
    } else {
        let q = (-2.0 * i * z).exp();
        i * (1.0 + q) / (1.0 - q)
    }
}

/// `ln chi(s)` where `zeta(s) = chi(s) zeta(1 - s)`.
pub fn ln_chi(s: Complex64) -> Complex64 {
    s * 2f64.ln() + (s - 1.0) * PI.ln() + ln_sin(s * (PI / 2.0)) + ln_gamma(1.0 - s)
}

/// Logarithmic derivative `chi'(s) / chi(s)`.
pub fn chi_log_deriv(s: Complex64) -> Complex64 {
    2f64.ln() + PI.ln() + (PI / 2.0) * cot(s * (PI / 2.0)) - digamma(1.0 - s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gamma_at_integers() {
        assert!((ln_gamma(c(1.0, 0.0))).norm() < 1e-14);
        assert!((ln_gamma(c(5.0, 0.0)) - c(24f64.ln(), 0.0)).norm() < 1e-13);
        let half = ln_gamma(c(0.5, 0.0)).exp();
        assert!((half.re - PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn gamma_complex_reference() {
        // mpmath: loggamma(0.7 - 12j)
        let v = ln_gamma(c(0.7, -12.0));
        assert!((v.re + 17.433_684_724_710_883).abs() < 1e-11, "{v}");
        let dphase = (v.im + 18.134_845_138_606_467).rem_euclid(2.0 * PI);
        assert!(dphase.min(2.0 * PI - dphase) < 1e-11, "{v}");
    }

    #[test]
    fn digamma_matches_difference_of_log_gamma() {
        let z = c(2.3, 40.0);
        let h = 1e-5;
        let fd = (ln_gamma(z + h) - ln_gamma(z - h)) / (2.0 * h);
        assert!((digamma(z) - fd).norm() < 1e-8);
        // psi(1) = -Euler gamma
        assert!((digamma(c(1.0, 0.0)).re + 0.577_215_664_901_532_9).abs() < 1e-14);
    }

    #[test]
    fn ln_sin_branches_agree() {
        for z in [c(0.3, 19.9), c(-1.2, -19.9), c(2.0, 5.0)] {
            let direct = z.sin().ln();
            let v = ln_sin(z);
            assert!((v.exp() - direct.exp()).norm() / direct.exp().norm() < 1e-12);
        }
        // far out the direct route overflows but the stable one does not
        let v = ln_sin(c(0.25, 3000.0));
        assert!(v.re.is_finite() && (v.re - (3000.0 - 2f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn cot_branches_agree() {
        let z = c(0.4, 20.5);
        let small = c(0.4, 19.5);
        assert!((cot(small) - small.cos() / small.sin()).norm() < 1e-12);
        assert!((cot(z) - c(0.0, -1.0)).norm() < 1e-12);
    }
}
