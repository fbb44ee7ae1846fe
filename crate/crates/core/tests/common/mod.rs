#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zeta_strips::zeros::find_critical_zeros;
use zeta_strips::zeta::{eval_zeta, eval_zeta_deriv, functional_eq_residual, hardy_z};
use zeta_strips::ComplexPoint;

pub const GRID_POINTS: usize = 100;

/// Seeded uniform sample of the rectangle.
pub fn random_grid(seed: u64, sigma: (f64, f64), t: (f64, f64)) -> Vec<ComplexPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..GRID_POINTS)
        .map(|_| ComplexPoint::new(rng.gen_range(sigma.0..=sigma.1), rng.gen_range(t.0..=t.1)))
        .collect()
}

/// Largest value of `f` over the grid, with where it occurred.
pub fn worst(points: &[ComplexPoint], f: impl Fn(ComplexPoint) -> f64) -> (f64, ComplexPoint) {
    points
        .iter()
        .map(|&p| (f(p), p))
        .fold((0.0, points[0]), |a, b| if b.0 > a.0 || b.0.is_nan() { b } else { a })
}

pub fn conjugate_error(s: ComplexPoint) -> f64 {
    let a = eval_zeta(s).unwrap().value;
    let b = eval_zeta(s.conj()).unwrap().value;
    (a - b.conj()).norm() / a.norm().max(1.0)
}

pub fn functional_error(s: ComplexPoint) -> f64 {
    functional_eq_residual(s).unwrap()
}

/// Absolute difference between `zeta'` and a central difference in `t`.
/// The difference quotient carries roughly `1e-13 |zeta| / h` of rounding
/// noise, so an absolute tolerance only makes sense where `|zeta|` is
/// moderate, as it is in the critical strip.
pub fn derivative_error(s: ComplexPoint) -> f64 {
    let h = 1e-5;
    let up = eval_zeta(ComplexPoint::new(s.sigma, s.t + h)).unwrap().value;
    let down = eval_zeta(ComplexPoint::new(s.sigma, s.t - h)).unwrap().value;
    let fd = (up - down) / (2.0 * h) / num_complex::Complex64::i();
    (fd - eval_zeta_deriv(s).unwrap().value).norm()
}

pub fn hardy_error(t: f64) -> f64 {
    (hardy_z(t).unwrap().abs() - eval_zeta(ComplexPoint::new(0.5, t)).unwrap().value.norm()).abs()
}

pub struct NumericsOutcome {
    pub name: &'static str,
    pub worst: f64,
    pub tolerance: f64,
    pub at: ComplexPoint,
}

impl NumericsOutcome {
    pub fn pass(&self) -> bool {
        self.worst < self.tolerance
    }
}

pub fn numerics_suite() -> Vec<NumericsOutcome> {
    let outcome = |name, tolerance, (worst, at)| NumericsOutcome {
        name,
        worst,
        tolerance,
        at,
    };
    let line = random_grid(4, (0.5, 0.5), (10.0, 2000.0));
    vec![
        outcome(
            "conjugate symmetry",
            1e-12,
            worst(&random_grid(1, (-3.0, 10.0), (1.0, 2000.0)), conjugate_error),
        ),
        outcome(
            "functional equation",
            1e-8,
            worst(&random_grid(2, (0.0, 1.0), (10.0, 2000.0)), functional_error),
        ),
        outcome(
            "derivative vs finite difference",
            1e-5,
            worst(&random_grid(3, (0.0, 1.0), (10.0, 2000.0)), derivative_error),
        ),
        outcome("|Z(t)| = |zeta(1/2 + it)|", 1e-9, worst(&line, |s| hardy_error(s.t))),
    ]
}

pub const FIRST_ZEROS: [f64; 3] = [14.134725, 21.022040, 25.010858];

pub fn first_zeros() -> Vec<f64> {
    find_critical_zeros(10.0, 26.0).unwrap().iter().map(|z| z.t).collect()
}
