//! Evaluation of the Riemann zeta function and its derivative.
//!
//! The analytic continuation is Euler-Maclaurin summation with a cutoff
//! `N = ceil(beta (|t| + 10))` and a fixed number of Bernoulli corrections.
//! Left of `sigma = 0` the value is obtained from the reflection formula
//! instead: there the summands grow like `n^{-sigma}` and the rounding of
//! `t ln n` would cost relative accuracy at large heights.

use crate::special::{chi_log_deriv, ln_chi, BERNOULLI_EVEN};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZetaError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("s = {0} is within {POLE_EXCLUSION:e} of the pole at s = 1")]
    Pole(ComplexPoint),
    #[error("cannot reach the target accuracy at s = {s}: bound {bound:e}")]
    Precision { s: ComplexPoint, bound: f64 },
    #[error("|zeta(s)| = {modulus:e} at s = {s} is below the phase floor")]
    NearZero { s: ComplexPoint, modulus: f64 },
}

pub type Result<T> = std::result::Result<T, ZetaError>;

/// Inputs closer than this to `s = 1` are rejected.
pub const POLE_EXCLUSION: f64 = 1e-8;
/// The phase is refused when `|zeta(s)|` is at or below this floor.
pub const ZERO_FLOOR: f64 = 1e-12;
/// Accuracy contract: `abs_error_bound <= TARGET_ACCURACY * max(1, |zeta|)`.
pub const TARGET_ACCURACY: f64 = 1e-10;

/// Left of this abscissa the reflection formula is used.
const REFLECTION_SIGMA: f64 = 0.0;

/// A point `s = sigma + i t` of the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexPoint {
    pub sigma: f64,
    pub t: f64,
}

impl ComplexPoint {
    pub const fn new(sigma: f64, t: f64) -> Self {
        Self { sigma, t }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.sigma, self.t)
    }

    pub fn conj(self) -> Self {
        Self::new(self.sigma, -self.t)
    }

    pub fn distance(self, other: Self) -> f64 {
        (self.sigma - other.sigma).hypot(self.t - other.t)
    }
}

impl From<Complex64> for ComplexPoint {
    fn from(z: Complex64) -> Self {
        Self::new(z.re, z.im)
    }
}

impl std::fmt::Display for ComplexPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.sigma, self.t)
    }
}

/// A value with an absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult {
    pub value: Complex64,
    pub abs_error_bound: f64,
}

/// Principal argument of `zeta(s)`, in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseValue {
    pub theta: f64,
}

/// Euler-Maclaurin parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaConfig {
    /// Cutoff multiplier: `N = ceil(beta (|t| + 10))`.
    pub beta: f64,
    /// Number of Bernoulli correction terms, at most 12.
    pub bernoulli_terms: usize,
}

impl Default for ZetaConfig {
    fn default() -> Self {
        Self {
            beta: 1.2,
            bernoulli_terms: 12,
        }
    }
}

impl ZetaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(ZetaError::Domain(format!("beta must be positive, got {}", self.beta)));
        }
        if self.bernoulli_terms == 0 || self.bernoulli_terms >= BERNOULLI_EVEN.len() {
            return Err(ZetaError::Domain(format!(
                "bernoulli_terms must be in 1..={}, got {}",
                BERNOULLI_EVEN.len() - 1,
                self.bernoulli_terms
            )));
        }
        Ok(())
    }

    pub fn cutoff(&self, t: f64) -> usize {
        (self.beta * (t.abs() + 10.0)).ceil() as usize
    }
}

const LN_TABLE_LEN: usize = 8192;

fn ln_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| (0..LN_TABLE_LEN).map(|n| (n.max(1) as f64).ln()).collect())
}

#[inline]
fn ln_n(n: usize) -> f64 {
    if n < LN_TABLE_LEN {
        ln_table()[n]
    } else {
        (n as f64).ln()
    }
}

/// Neumaier-compensated complex accumulator.
#[derive(Default, Clone, Copy)]
struct Compensated {
    re: f64,
    im: f64,
    c_re: f64,
    c_im: f64,
}

impl Compensated {
    #[inline]
    fn add(&mut self, z: Complex64) {
        Self::add_part(&mut self.re, &mut self.c_re, z.re);
        Self::add_part(&mut self.im, &mut self.c_im, z.im);
    }

    #[inline]
    fn add_part(sum: &mut f64, comp: &mut f64, x: f64) {
        let t = *sum + x;
        if sum.abs() >= x.abs() {
            *comp += (*sum - t) + x;
        } else {
            *comp += (x - t) + *sum;
        }
        *sum = t;
    }

    fn value(&self) -> Complex64 {
        Complex64::new(self.re + self.c_re, self.im + self.c_im)
    }
}

/// `zeta(s)` and `zeta'(s)` with their error bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaPair {
    pub value: EvalResult,
    pub deriv: EvalResult,
}

/// Evaluator carrying its Euler-Maclaurin parameters.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Zeta {
    config: ZetaConfig,
}

impl Zeta {
    pub fn new(config: ZetaConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn config(&self) -> &ZetaConfig {
        &self.config
    }

    pub fn eval(&self, s: ComplexPoint) -> Result<EvalResult> {
        self.eval_pair(s).map(|p| p.value)
    }

    pub fn eval_deriv(&self, s: ComplexPoint) -> Result<EvalResult> {
        self.eval_pair(s).map(|p| p.deriv)
    }

    /// `zeta(s)` and `zeta'(s)` from a single pass over the summands.
    pub fn eval_pair(&self, s: ComplexPoint) -> Result<ZetaPair> {
        check_finite(s)?;
        if (s.to_complex() - 1.0).norm() < POLE_EXCLUSION {
            return Err(ZetaError::Pole(s));
        }
        let pair = if s.sigma < REFLECTION_SIGMA {
            self.reflected(s)?
        } else {
            self.euler_maclaurin(s)
        };
        // the contract covers the value; the derivative bound is reported as is
        let r = pair.value;
        if !(r.abs_error_bound <= TARGET_ACCURACY * r.value.norm().max(1.0)) {
            return Err(ZetaError::Precision {
                s,
                bound: r.abs_error_bound,
            });
        }
        Ok(pair)
    }

    fn euler_maclaurin(&self, s: ComplexPoint) -> ZetaPair {
        let z = s.to_complex();
        let big_n = self.config.cutoff(s.t).max(2);
        let s_abs = z.norm();

        let mut sum = Compensated::default();
        let mut dsum = Compensated::default();
        let mut abs_sum = 0.0;
        let mut dabs_sum = 0.0;
        let mut phase_err2 = 0.0;
        let mut dphase_err2 = 0.0;
        for n in 1..big_n {
            let ln = ln_n(n);
            let w = (-s.sigma * ln).exp();
            let (sin, cos) = (s.t * ln).sin_cos();
            let term = Complex64::new(w * cos, -w * sin);
            sum.add(term);
            dsum.add(-ln * term);
            abs_sum += w;
            dabs_sum += w * ln;
            let e = w * (1.0 + s_abs * ln);
            phase_err2 += e * e;
            dphase_err2 += e * e * ln * ln;
        }

        let ln_big_n = ln_n(big_n);
        let n_pow = (-z * ln_big_n).exp(); // N^{-s}
        let big_n_f = big_n as f64;
        let zm1 = z - 1.0;
        let integral = n_pow * big_n_f / zm1;
        let mut tail = integral + 0.5 * n_pow;
        let mut dtail = -ln_big_n * integral - integral / zm1 - 0.5 * ln_big_n * n_pow;
        let mut tail_abs = integral.norm() + 0.5 * n_pow.norm();

        // rising product s (s+1) ... (s+2k-2) and its derivative
        let mut rising = z;
        let mut drising = Complex64::new(1.0, 0.0);
        let mut n_scale = n_pow / big_n_f; // N^{-s-1}
        let mut factorial = 2.0;
        let k_max = self.config.bernoulli_terms;
        for (k, b) in BERNOULLI_EVEN.iter().take(k_max).enumerate() {
            let coef = b / factorial;
            let term = coef * rising * n_scale;
            tail += term;
            dtail += coef * (drising - ln_big_n * rising) * n_scale;
            tail_abs += term.norm();
            // advance to k+1
            let a = z + (2 * k + 1) as f64;
            let bb = z + (2 * k + 2) as f64;
            drising = drising * a + rising;
            rising *= a;
            drising = drising * bb + rising;
            rising *= bb;
            n_scale /= big_n_f * big_n_f;
            let next = 2.0 * (k as f64 + 1.0);
            factorial *= (next + 1.0) * (next + 2.0);
        }
        // first omitted term, scaled by the standard remainder factor
        let coef = BERNOULLI_EVEN[k_max] / factorial;
        let omitted = (coef * rising * n_scale).norm();
        let d_omitted = (coef * (drising - ln_big_n * rising) * n_scale).norm();
        let order = (2 * k_max + 1) as f64;
        let factor = (z + order).norm() / (s.sigma + order).max(1e-3);
        let truncation = factor * omitted;
        let d_truncation = factor * (d_omitted + omitted * ln_big_n);

        let eps = f64::EPSILON;
        let value = sum.value() + tail;
        let deriv = dsum.value() + dtail;
        let round = eps * (4.0 * abs_sum + 4.0 * phase_err2.sqrt() + 8.0 * tail_abs * (1.0 + s_abs));
        let d_round = eps
            * (4.0 * dabs_sum
                + 4.0 * dphase_err2.sqrt()
                + 8.0 * (tail_abs + dtail.norm()) * (1.0 + s_abs + ln_big_n));
        ZetaPair {
            value: EvalResult {
                value,
                abs_error_bound: truncation + round,
            },
            deriv: EvalResult {
                value: deriv,
                abs_error_bound: d_truncation + d_round,
            },
        }
    }

    /// `zeta(s) = chi(s) zeta(1 - s)` with `Re(1 - s) > 4`.
    fn reflected(&self, s: ComplexPoint) -> Result<ZetaPair> {
        let z = s.to_complex();
        let mirror = self.euler_maclaurin(ComplexPoint::from(1.0 - z));
        let chi = ln_chi(z).exp();
        let log_deriv = chi_log_deriv(z);
        let value = chi * mirror.value.value;
        let deriv = chi * (log_deriv * mirror.value.value - mirror.deriv.value);
        // ln chi is a sum of terms of size |s| ln 2pi, |pi s / 2| and
        // |ln Gamma(1 - s)|; each is rounded once or twice
        let w = (1.0 - z).norm();
        let log_terms = z.norm() * ((2.0 * PI).ln() + PI / 2.0) + w * (1.0 + w.ln().max(0.0));
        let chi_rel = 4.0 * f64::EPSILON * (1.0 + log_terms);
        let chi_abs = chi.norm();
        Ok(ZetaPair {
            value: EvalResult {
                value,
                abs_error_bound: chi_abs * mirror.value.abs_error_bound + chi_rel * value.norm(),
            },
            deriv: EvalResult {
                value: deriv,
                abs_error_bound: chi_abs
                    * (log_deriv.norm() * mirror.value.abs_error_bound
                        + mirror.deriv.abs_error_bound
                        + 8.0 * f64::EPSILON * log_deriv.norm() * mirror.value.value.norm())
                    + chi_rel * deriv.norm(),
            },
        })
    }

    pub fn phase(&self, s: ComplexPoint) -> Result<PhaseValue> {
        let v = self.eval(s)?.value;
        let modulus = v.norm();
        if modulus <= ZERO_FLOOR {
            return Err(ZetaError::NearZero { s, modulus });
        }
        let mut theta = v.im.atan2(v.re);
        if theta == -PI {
            theta = PI;
        }
        Ok(PhaseValue { theta })
    }

    /// `Z(t) = exp(i theta_RS(t)) zeta(1/2 + i t)`, real for real `t`.
    pub fn hardy_z(&self, t: f64) -> Result<f64> {
        let theta = rs_theta(t)?;
        let v = self.eval(ComplexPoint::new(0.5, t))?.value;
        let (sin, cos) = theta.sin_cos();
        Ok(cos * v.re - sin * v.im)
    }

    /// Relative residual `|zeta(s) - chi(s) zeta(1-s)| / |zeta(s)|`,
    /// with both zeta values taken from Euler-Maclaurin directly.
    pub fn functional_eq_residual(&self, s: ComplexPoint) -> Result<f64> {
        check_finite(s)?;
        let mirror = ComplexPoint::new(1.0 - s.sigma, -s.t);
        for p in [s, mirror] {
            if !(-3.0..=40.0).contains(&p.sigma) || p.t.abs() > 5000.0 {
                return Err(ZetaError::Domain(format!(
                    "{p} is outside the supported region for the reflection check"
                )));
            }
        }
        let z = s.to_complex();
        let integer = z.im == 0.0 && z.re.fract() == 0.0;
        if integer && (z.re >= 1.0 || (z.re as i64) % 2 == 0) {
            return Err(ZetaError::Domain(format!(
                "{s} is a pole of Gamma(1 - s) or a zero of sin(pi s / 2)"
            )));
        }
        let direct = self.euler_maclaurin_checked(s)?;
        let other = self.euler_maclaurin_checked(mirror)?;
        let reflected = ln_chi(z).exp() * other;
        Ok((direct - reflected).norm() / direct.norm())
    }

    fn euler_maclaurin_checked(&self, s: ComplexPoint) -> Result<Complex64> {
        if (s.to_complex() - 1.0).norm() < POLE_EXCLUSION {
            return Err(ZetaError::Pole(s));
        }
        Ok(self.euler_maclaurin(s).value.value)
    }
}

fn check_finite(s: ComplexPoint) -> Result<()> {
    if s.sigma.is_finite() && s.t.is_finite() {
        Ok(())
    } else {
        Err(ZetaError::Domain(format!("non-finite point {s}")))
    }
}

/// Partial Dirichlet sum of `n^{-s}` for `n = 1..terms`, with the tail
/// bound `terms^{1-sigma} / (sigma - 1)`.
pub fn eval_dirichlet(s: ComplexPoint, terms: usize) -> Result<EvalResult> {
    check_finite(s)?;
    if s.sigma <= 1.0 {
        return Err(ZetaError::Domain(format!(
            "Dirichlet series needs sigma > 1, got {}",
            s.sigma
        )));
    }
    if terms == 0 {
        return Err(ZetaError::Domain("at least one term is required".into()));
    }
    let mut sum = Compensated::default();
    for n in 1..=terms {
        let ln = ln_n(n);
        let w = (-s.sigma * ln).exp();
        let (sin, cos) = (s.t * ln).sin_cos();
        sum.add(Complex64::new(w * cos, -w * sin));
    }
    let tail = (terms as f64).powf(1.0 - s.sigma) / (s.sigma - 1.0);
    Ok(EvalResult {
        value: sum.value(),
        abs_error_bound: tail,
    })
}

pub fn eval_zeta(s: ComplexPoint) -> Result<EvalResult> {
    Zeta::default().eval(s)
}

pub fn eval_zeta_deriv(s: ComplexPoint) -> Result<EvalResult> {
    Zeta::default().eval_deriv(s)
}

pub fn phase(s: ComplexPoint) -> Result<PhaseValue> {
    Zeta::default().phase(s)
}

pub fn hardy_z(t: f64) -> Result<f64> {
    Zeta::default().hardy_z(t)
}

pub fn functional_eq_residual(s: ComplexPoint) -> Result<f64> {
    Zeta::default().functional_eq_residual(s)
}

/// Riemann-Siegel theta. Asymptotic series with four corrections for
/// `t >= 10`, exact log-gamma below.
pub fn rs_theta(t: f64) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(ZetaError::Domain(format!("rs_theta needs t > 0, got {t}")));
    }
    if t < 10.0 {
        let lg = crate::special::ln_gamma(Complex64::new(0.25, 0.5 * t));
        return Ok(lg.im - 0.5 * t * PI.ln());
    }
    let inv = 1.0 / t;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 48.0
            + inv2 * (7.0 / 5760.0 + inv2 * (31.0 / 80640.0 + inv2 * (127.0 / 430080.0))));
    Ok(0.5 * t * (t / (2.0 * PI)).ln() - 0.5 * t - PI / 8.0 + series)
}

/// `Im(2^{-s}) = -2^{-sigma} sin(t ln 2)`, the leading large-sigma
/// behaviour of `Im zeta(s)`.
pub fn asymptotic_im(s: ComplexPoint) -> f64 {
    -(-s.sigma * LN_2).exp() * (s.t * LN_2).sin()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AsymptoteKind {
    /// Strip boundary, `t = 2 m pi / ln 2`.
    Boundary,
    /// Primary-zero contour, `t = (2m + 1) pi / ln 2`.
    Primary,
}

pub fn strip_asymptote(m: i64, kind: AsymptoteKind) -> Result<f64> {
    if m < 1 {
        return Err(ZetaError::Domain(format!("strip number must be >= 1, got {m}")));
    }
    let k = match kind {
        AsymptoteKind::Boundary => 2 * m,
        AsymptoteKind::Primary => 2 * m + 1,
    };
    Ok(k as f64 * PI / LN_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(sigma: f64, t: f64) -> ComplexPoint {
        ComplexPoint::new(sigma, t)
    }

    /// Dirichlet partial sums at s = 2 until the tail bound drops below 1e-6,
    /// then the midpoint tail estimate (its own error is O(terms^-3)).
    fn basel_oracle() -> f64 {
        let mut terms = 1usize;
        loop {
            let r = eval_dirichlet(p(2.0, 0.0), terms).unwrap();
            if r.abs_error_bound < 1e-6 {
                // tail of sum 1/n^2 beyond `terms` is in (1/(terms+1), 1/terms)
                return r.value.re + 1.0 / (terms as f64 + 0.5);
            }
            terms *= 2;
        }
    }

    #[test]
    fn dirichlet_basel_within_bound() {
        let exact = PI * PI / 6.0;
        let r = eval_dirichlet(p(2.0, 0.0), 1000).unwrap();
        assert!((r.value.re - exact).abs() <= r.abs_error_bound);
        assert!((basel_oracle() - exact).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_far_right_is_one() {
        let r = eval_dirichlet(p(40.0, 7.0), 3).unwrap();
        assert!((r.value - 1.0).norm() < 2f64.powi(-40) * 2.0);
    }

    #[test]
    fn dirichlet_conjugate() {
        let a = eval_dirichlet(p(2.0, -5.0), 500).unwrap().value;
        let b = eval_dirichlet(p(2.0, 5.0), 500).unwrap().value;
        assert_eq!(a, b.conj());
    }

    #[test]
    fn dirichlet_rejects_left_of_one() {
        assert!(matches!(eval_dirichlet(p(1.0, 3.0), 10), Err(ZetaError::Domain(_))));
        assert!(matches!(eval_dirichlet(p(2.0, 3.0), 0), Err(ZetaError::Domain(_))));
    }

    #[test]
    fn zeta_reference_values() {
        let z0 = eval_zeta(p(0.0, 0.0)).unwrap();
        assert!((z0.value - (-0.5)).norm() < 1e-13);
        let z2 = eval_zeta(p(2.0, 0.0)).unwrap();
        assert!((z2.value.re - basel_oracle()).abs() < 1e-10);
        assert!(z2.abs_error_bound <= 1e-10);
        let zm1 = eval_zeta(p(-1.0, 0.0)).unwrap();
        assert!((zm1.value.re + 1.0 / 12.0).abs() < 1e-13);
        assert!(eval_zeta(p(0.5, 14.134725)).unwrap().value.norm() < 1e-6);
    }

    #[test]
    fn zeta_matches_reference_grid() {
        // mpmath zeta at 30 digits
        let cases = [
            (p(0.3, 12.0), Complex64::new(1.044_091_007_987_676, -0.857_520_978_258_396_7)),
            (p(2.0, 3.0), Complex64::new(0.798_021_985_146_275_7, -0.113_744_308_052_938_5)),
            (p(0.5, 1500.0), Complex64::new(0.326_349_078_247_349_5, -0.406_098_187_091_922_7)),
            (p(-3.0, 1000.0), Complex64::new(-38_862_706.937_622_99, 31_300_393.750_768_08)),
            (p(-10.0, 100.0), Complex64::new(3_649_486_937_786.477_5, 2_163_874_832_975.09)),
        ];
        for (s, want) in cases {
            let got = eval_zeta(s).unwrap();
            let err = (got.value - want).norm();
            assert!(err <= 1e-10 * want.norm().max(1.0), "{s}: {} vs {want}", got.value);
            assert!(err <= got.abs_error_bound.max(1e-14 * want.norm()), "{s}: bound {}", got.abs_error_bound);
        }
    }

    #[test]
    fn zeta_pole_rejected() {
        assert!(matches!(eval_zeta(p(1.0, 0.0)), Err(ZetaError::Pole(_))));
        assert!(matches!(eval_zeta(p(1.0 + 1e-9, 0.0)), Err(ZetaError::Pole(_))));
        assert!(eval_zeta(p(1.0 + 1e-6, 0.0)).is_ok());
    }

    #[test]
    fn deriv_far_right_is_two_term() {
        for t in [0.0, 3.0, 100.0] {
            let s = p(30.0, t);
            let d = eval_zeta_deriv(s).unwrap().value;
            let two = -LN_2 * (-s.to_complex() * LN_2).exp();
            assert!((d - two).norm() < 3f64.powi(-30) * 10.0);
        }
    }

    #[test]
    fn deriv_finite_difference_at_two_plus_3i() {
        let s = p(2.0, 3.0);
        let h = 1e-5;
        let fd = (eval_zeta(p(2.0 + h, 3.0)).unwrap().value - eval_zeta(p(2.0 - h, 3.0)).unwrap().value)
            / (2.0 * h);
        assert!((eval_zeta_deriv(s).unwrap().value - fd).norm() < 1e-6);
    }

    #[test]
    fn deriv_reference_values() {
        // mpmath zeta(s, derivative=1)
        let cases = [
            (p(0.5, 5000.0), Complex64::new(1.244_402_459_477_283_8, 3.843_476_299_089_093_5)),
            (p(-2.0, 300.0), Complex64::new(20_260.637_758_634_05, -61_727.676_730_813_51)),
        ];
        for (s, want) in cases {
            let got = eval_zeta_deriv(s).unwrap();
            let err = (got.value - want).norm();
            assert!(err <= 1e-10 * want.norm(), "{s}: {}", got.value);
            assert!(err <= got.abs_error_bound, "{s}: bound {}", got.abs_error_bound);
        }
        let v = eval_zeta(p(0.5, 5000.0)).unwrap().value;
        assert!((v - Complex64::new(0.406_842_713_635_432_56, -0.693_764_159_198_085_1)).norm() < 1e-11);
    }

    #[test]
    fn deriv_conjugate_symmetry() {
        for s in [p(0.5, 20.0), p(-2.0, 300.0), p(-6.0, 50.0)] {
            let a = eval_zeta_deriv(s).unwrap().value;
            let b = eval_zeta_deriv(s.conj()).unwrap().value;
            assert!((a - b.conj()).norm() <= 1e-12 * a.norm());
        }
    }

    #[test]
    fn reflected_deriv_matches_finite_difference() {
        let s = p(-5.0, 40.0);
        let h = 1e-6;
        let fd = (eval_zeta(p(-5.0, 40.0 + h)).unwrap().value
            - eval_zeta(p(-5.0, 40.0 - h)).unwrap().value)
            / Complex64::new(0.0, 2.0 * h);
        let d = eval_zeta_deriv(s).unwrap().value;
        assert!((d - fd).norm() < 1e-7 * d.norm(), "{d} vs {fd}");
    }

    #[test]
    fn phase_examples() {
        assert!(phase(p(40.0, 0.1)).unwrap().theta.abs() < 1e-11);
        assert_eq!(phase(p(2.0, 0.0)).unwrap().theta, 0.0);
        // bottom of strip 1 on the critical line (1-D root of Im zeta)
        assert!(phase(p(0.5, 9.666_908_056_130_192)).unwrap().theta.abs() < 1e-12);
        assert!(matches!(
            phase(p(0.5, 14.134_725_141_734_694)),
            Err(ZetaError::NearZero { .. })
        ));
    }

    #[test]
    fn phase_is_principal() {
        // zeta(0) = -1/2 lies on the negative axis
        assert_eq!(phase(p(0.0, 0.0)).unwrap().theta, PI);
    }

    #[test]
    fn rs_theta_and_hardy_z() {
        assert!(hardy_z(14.134725).unwrap().abs() < 1e-6);
        let z20 = hardy_z(20.0).unwrap();
        assert!((z20.abs() - eval_zeta(p(0.5, 20.0)).unwrap().value.norm()).abs() < 1e-9);
        assert!(hardy_z(14.0).unwrap().signum() != hardy_z(15.0).unwrap().signum());
        assert!(matches!(rs_theta(0.0), Err(ZetaError::Domain(_))));
        assert!(matches!(hardy_z(-1.0), Err(ZetaError::Domain(_))));
        // asymptotic and exact branches meet at t = 10
        let below = rs_theta(10.0 - 1e-12).unwrap();
        let above = rs_theta(10.0).unwrap();
        assert!((below - above).abs() < 1e-10);
    }

    #[test]
    fn hardy_z_is_real_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let t: f64 = rng.gen_range(10.0..2000.0);
            let v = eval_zeta(p(0.5, t)).unwrap().value;
            let rotated = Complex64::from_polar(1.0, rs_theta(t).unwrap()) * v;
            assert!(rotated.im.abs() < 1e-9, "t = {t}: {rotated}");
        }
    }

    #[test]
    fn functional_equation_examples() {
        assert!(functional_eq_residual(p(0.3, 12.0)).unwrap() < 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let t = rng.gen_range(10.0..1000.0);
            assert!(functional_eq_residual(p(0.5, t)).unwrap() < 1e-8);
        }
        // zeta(-1) through chi(-1) zeta(2)
        let chi = ln_chi(Complex64::new(-1.0, 0.0)).exp();
        let via_reflection = chi * eval_zeta(p(2.0, 0.0)).unwrap().value;
        assert!((via_reflection - (-1.0 / 12.0)).norm() < 1e-14);
        assert!(functional_eq_residual(p(-1.0, 0.0)).unwrap() < 1e-12);
        assert!(matches!(functional_eq_residual(p(-8.0, 10.0)), Err(ZetaError::Domain(_))));
    }

    #[test]
    fn asymptotic_im_examples() {
        assert!(asymptotic_im(p(10.0, 2.0 * PI / LN_2)).abs() < 1e-15);
        let s = p(10.0, 9.06);
        let im = eval_zeta(s).unwrap().value.im;
        assert!((im - asymptotic_im(s)).abs() < 3f64.powi(-10) * 3.0);
    }

    #[test]
    fn strip_asymptote_examples() {
        let b1 = strip_asymptote(1, AsymptoteKind::Boundary).unwrap();
        assert!((b1 - 9.06472).abs() < 5e-6);
        let p1 = strip_asymptote(1, AsymptoteKind::Primary).unwrap();
        assert!((p1 - 1.5 * b1).abs() < 1e-12);
        assert!((p1 - 13.59708).abs() < 1e-5);
        let b200 = strip_asymptote(200, AsymptoteKind::Boundary).unwrap();
        assert!((b200 - 200.0 * b1).abs() < 1e-9);
        assert!(strip_asymptote(0, AsymptoteKind::Boundary).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(Zeta::new(ZetaConfig { beta: 0.0, bernoulli_terms: 12 }).is_err());
        assert!(Zeta::new(ZetaConfig { beta: 1.2, bernoulli_terms: 13 }).is_err());
        assert!(Zeta::new(ZetaConfig::default()).is_ok());
    }

    #[test]
    fn supported_region_corners_meet_accuracy() {
        for s in [p(-10.0, 0.5), p(-10.0, 5000.0), p(40.0, 5000.0), p(0.5, 5000.0), p(-3.0, 5000.0), p(-2.9, 5000.0)] {
            let r = eval_zeta(s).unwrap();
            assert!(r.abs_error_bound <= TARGET_ACCURACY * r.value.norm().max(1.0), "{s}");
        }
    }
}
