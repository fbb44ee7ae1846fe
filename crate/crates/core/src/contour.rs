//! Predictor-corrector continuation of the curves `Im zeta(s) = 0`.
//!
//! With `zeta' = u' + i v'` the gradient of `Im zeta` in `(sigma, t)` is
//! `(v', u')`, so the curve tangent is `(u', -v')`. Moving along that
//! tangent increases `Re zeta` at rate `|zeta'|`, which makes `Re zeta`
//! strictly monotone along every curve away from critical points of zeta.
//! Traces are oriented by that monotonicity:
//!
//! * boundary contours come in from `sigma = +inf` with `Re zeta > 1` and
//!   `Re zeta` grows as they head left,
//! * primary-candidate contours come in with `Re zeta < 1` and `Re zeta`
//!   falls until it reaches 0 at a zero,
//! * the `theta = 0` branch leaving a zero has `Re zeta` rising from 0.

use crate::zeros::CriticalZero;
use crate::zeta::{AsymptoteKind, ComplexPoint, Zeta, ZetaError, ZetaPair};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error(transparent)]
    Zeta(#[from] ZetaError),
    #[error("seed k = {k}: {reason}")]
    Seed { k: u32, reason: String },
    #[error("corrector failed {failures} consecutive times near {at}")]
    Stall { at: ComplexPoint, failures: u32 },
    #[error("trace does not reach sigma = {sigma}")]
    NoCrossing { sigma: f64 },
    #[error("no theta = 0 branch leaves the zero at t = {t}")]
    Branch { t: f64 },
    #[error("branch out of the zero at t = {t} ended without escaping: {terminus}")]
    Unclassified { t: f64, terminus: String },
    #[error("invalid trace configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, TraceError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceKind {
    Boundary,
    PrimaryCandidate,
}

impl From<TraceKind> for AsymptoteKind {
    fn from(kind: TraceKind) -> Self {
        match kind {
            TraceKind::Boundary => AsymptoteKind::Boundary,
            TraceKind::PrimaryCandidate => AsymptoteKind::Primary,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Terminus {
    LeftBoundary { sigma_left: f64 },
    RightBoundary { sigma_right: f64 },
    Zero { t: f64, ordinal: u64 },
    Aborted { reason: String },
}

/// A start point at `sigma_right` near `t = k pi / ln 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    pub k: u32,
    pub kind: TraceKind,
    pub start: ComplexPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourTrace {
    /// Asymptote index: the trace enters from `t = k pi / ln 2`.
    pub k: u32,
    pub kind: TraceKind,
    pub start: ComplexPoint,
    pub points: Vec<ComplexPoint>,
    pub terminus: Terminus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroContourClass {
    RightInfinity,
    LeftInfinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    pub sigma_right: f64,
    pub sigma_left: f64,
    pub step_min: f64,
    pub step_max: f64,
    /// Below this `|zeta|` the step is capped at `near_zero_step`.
    pub near_zero_modulus: f64,
    pub near_zero_step: f64,
    /// Relative tolerance on `|Im zeta| / max(1, |zeta|)`.
    pub corrector_tol: f64,
    pub corrector_max_iter: u32,
    pub capture_modulus: f64,
    pub capture_distance: f64,
    pub max_steps: usize,
    pub stall_limit: u32,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            sigma_right: 8.0,
            sigma_left: -3.0,
            step_min: 1e-3,
            step_max: 0.25,
            near_zero_modulus: 0.1,
            near_zero_step: 0.05,
            corrector_tol: 1e-10,
            corrector_max_iter: 8,
            capture_modulus: 1e-4,
            capture_distance: 0.05,
            max_steps: 50_000,
            stall_limit: 5,
        }
    }
}

impl TraceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_left < 0.5 && 0.5 < self.sigma_right) {
            return Err(TraceError::Config(format!(
                "need sigma_left < 1/2 < sigma_right, got {} and {}",
                self.sigma_left, self.sigma_right
            )));
        }
        if !(0.0 < self.step_min && self.step_min <= self.step_max) {
            return Err(TraceError::Config("need 0 < step_min <= step_max".into()));
        }
        Ok(())
    }
}

/// Cap on the corrector displacement, relative to the step.
const MAX_CORRECTION: f64 = 0.5;
/// Minimum cosine between consecutive tangents.
const MIN_TURN_COS: f64 = 0.9;
/// Largest `|zeta(sigma_right + it) - 1|` accepted for a seed.
const SEED_MAX_DEVIATION: f64 = 0.3;

#[derive(Debug, Clone, Copy, Default)]
pub struct Tracer {
    zeta: Zeta,
    config: TraceConfig,
}

enum Stop {
    Left,
    LeftOrRight,
}

impl Tracer {
    pub fn new(zeta: Zeta, config: TraceConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { zeta, config })
    }

    pub fn config(&self) -> &TraceConfig {
        &self.config
    }

    /// Seeds for `k = 2 ..= 2 m_max + 2`: even `k` are strip boundaries,
    /// odd `k` primary candidates. Strip `m` lies between `k = 2m` and
    /// `k = 2m + 2`.
    pub fn seed_starts(&self, m_max: u32) -> Result<Vec<Seed>> {
        self.seed_range(1, m_max)
    }

    /// Seeds bounding strips `m_lo ..= m_hi`: `k = 2 m_lo ..= 2 m_hi + 2`.
    pub fn seed_range(&self, m_lo: u32, m_hi: u32) -> Result<Vec<Seed>> {
        if m_lo == 0 || m_hi < m_lo {
            return Err(TraceError::Config(format!(
                "strip range must satisfy 1 <= m_lo <= m_hi, got {m_lo}..={m_hi}"
            )));
        }
        let sigma = self.config.sigma_right;
        // sum_{n >= 2} n^-sigma bounds |zeta - 1| on the whole vertical line
        let tail = self.zeta.eval(ComplexPoint::new(sigma, 0.0))?.value.re - 1.0;
        if !(tail < SEED_MAX_DEVIATION) {
            return Err(TraceError::Seed {
                k: 2,
                reason: format!(
                    "sigma_right = {sigma} is too small: zeta(sigma_right) - 1 = {tail:.3} >= {SEED_MAX_DEVIATION}"
                ),
            });
        }
        (2 * m_lo..=2 * m_hi + 2)
            .into_par_iter()
            .map(|k| self.seed(k, sigma))
            .collect()
    }

    fn seed(&self, k: u32, sigma: f64) -> Result<Seed> {
        let kind = if k.is_multiple_of(2) {
            TraceKind::Boundary
        } else {
            TraceKind::PrimaryCandidate
        };
        let asymptote = k as f64 * PI / LN_2;
        let half_gap = 0.5 * PI / LN_2;
        let mut t = asymptote;
        for _ in 0..50 {
            let pair = self.zeta.eval_pair(ComplexPoint::new(sigma, t))?;
            let residual = pair.value.value.im;
            if residual.abs() < 1e-13 {
                break;
            }
            let slope = pair.deriv.value.re;
            t -= residual / slope;
            if !t.is_finite() || (t - asymptote).abs() > half_gap {
                return Err(TraceError::Seed {
                    k,
                    reason: format!("Newton polish left the asymptote window at t = {t}"),
                });
            }
        }
        let start = ComplexPoint::new(sigma, t);
        let value = self.zeta.eval(start)?.value;
        if value.im.abs() >= 1e-12 {
            return Err(TraceError::Seed {
                k,
                reason: format!("Newton polish did not converge, Im zeta = {:e}", value.im),
            });
        }
        let wrong_side = match kind {
            TraceKind::Boundary => value.re <= 1.0,
            TraceKind::PrimaryCandidate => value.re >= 1.0,
        };
        if (value - 1.0).norm() >= SEED_MAX_DEVIATION || wrong_side {
            return Err(TraceError::Seed {
                k,
                reason: format!("zeta = {value} at the seed does not match a {kind:?} contour"),
            });
        }
        Ok(Seed { k, kind, start })
    }

    /// Follows a seed leftward until it leaves through `sigma_left` or
    /// runs into a critical zero.
    pub fn trace_im_zero(&self, seed: &Seed, zeros: &[CriticalZero]) -> Result<ContourTrace> {
        let orientation = match seed.kind {
            TraceKind::Boundary => 1.0,
            TraceKind::PrimaryCandidate => -1.0,
        };
        let capture = matches!(seed.kind, TraceKind::PrimaryCandidate).then_some(zeros);
        let (points, terminus) = self.follow(seed.start, orientation, Stop::Left, capture)?;
        Ok(ContourTrace {
            k: seed.k,
            kind: seed.kind,
            start: seed.start,
            points,
            terminus,
        })
    }

    pub fn trace_all(&self, seeds: &[Seed], zeros: &[CriticalZero]) -> Result<Vec<ContourTrace>> {
        seeds.par_iter().map(|s| self.trace_im_zero(s, zeros)).collect()
    }

    /// Launches the `theta = 0` branch out of a zero and reports which
    /// side of the plane it escapes to.
    pub fn classify_zero_contour(&self, zero: &CriticalZero) -> Result<ZeroContourClass> {
        let (_, terminus) = self.zero_branch(zero)?;
        match terminus {
            Terminus::RightBoundary { .. } => Ok(ZeroContourClass::RightInfinity),
            Terminus::LeftBoundary { .. } => Ok(ZeroContourClass::LeftInfinity),
            other => Err(TraceError::Unclassified {
                t: zero.t,
                terminus: format!("{other:?}"),
            }),
        }
    }

    /// The `theta = 0` branch out of a zero, as a polyline.
    pub fn zero_branch(&self, zero: &CriticalZero) -> Result<(Vec<ComplexPoint>, Terminus)> {
        const LAUNCH_RADIUS: f64 = 1e-3;
        let rho = Complex64::new(0.5, zero.t);
        let slope = self.zeta.eval_deriv(ComplexPoint::from(rho))?.value;
        if slope.norm() == 0.0 {
            return Err(TraceError::Branch { t: zero.t });
        }
        // zeta(rho + r d) ~ r |zeta'| > 0 for d = conj(zeta') / |zeta'|
        let direction = slope.conj() / slope.norm();
        let launch = ComplexPoint::from(rho + LAUNCH_RADIUS * direction);
        let Some((start, pair)) = self.correct(launch, 4.0 * LAUNCH_RADIUS)? else {
            return Err(TraceError::Branch { t: zero.t });
        };
        if pair.value.value.re <= 0.0 {
            return Err(TraceError::Branch { t: zero.t });
        }
        self.follow(start, 1.0, Stop::LeftOrRight, None)
    }

    fn stop_at(&self, p: ComplexPoint, stop: &Stop) -> Option<Terminus> {
        if p.sigma < self.config.sigma_left {
            return Some(Terminus::LeftBoundary {
                sigma_left: self.config.sigma_left,
            });
        }
        if p.sigma > self.config.sigma_right {
            return Some(match stop {
                Stop::LeftOrRight => Terminus::RightBoundary {
                    sigma_right: self.config.sigma_right,
                },
                Stop::Left => Terminus::Aborted {
                    reason: format!("turned back past sigma_right at {p}"),
                },
            });
        }
        None
    }

    /// Newton on `Im zeta` along its gradient. Returns `None` when it
    /// fails to converge or wanders further than `max_move`.
    fn correct(&self, p: ComplexPoint, max_move: f64) -> Result<Option<(ComplexPoint, ZetaPair)>> {
        let mut q = p;
        for _ in 0..=self.config.corrector_max_iter {
            let pair = self.zeta.eval_pair(q)?;
            let f = pair.value.value;
            let fp = pair.deriv.value;
            if f.im.abs() <= self.config.corrector_tol * f.norm().max(1.0) {
                return Ok(Some((q, pair)));
            }
            let g2 = fp.norm_sqr();
            if g2 == 0.0 || !g2.is_finite() {
                return Ok(None);
            }
            // gradient of Im zeta is (Im zeta', Re zeta')
            q = ComplexPoint::new(q.sigma - f.im * fp.im / g2, q.t - f.im * fp.re / g2);
            if q.distance(p) > max_move {
                return Ok(None);
            }
        }
        Ok(None)
    }

    fn follow(
        &self,
        start: ComplexPoint,
        orientation: f64,
        stop: Stop,
        capture: Option<&[CriticalZero]>,
    ) -> Result<(Vec<ComplexPoint>, Terminus)> {
        let cfg = &self.config;
        let mut points = vec![start];
        let mut here = start;
        let mut pair = self.zeta.eval_pair(here)?;
        let mut h = cfg.step_max.min(0.1);
        let mut failures = 0u32;

        for _ in 0..cfg.max_steps {
            let f = pair.value.value;
            let fp = pair.deriv.value;
            let speed = fp.norm();
            if speed == 0.0 {
                return Ok((points, aborted(format!("zeta' vanishes at {here}"))));
            }
            let tangent = (orientation * fp.re / speed, -orientation * fp.im / speed);
            if f.norm() < cfg.near_zero_modulus {
                h = h.min(cfg.near_zero_step);
            }
            if let Some(zeros) = capture {
                if let Some(end) = self.try_capture(here, f, fp, tangent, h, zeros)? {
                    points.push(end.0);
                    return Ok((points, end.1));
                }
            }

            let predicted = ComplexPoint::new(here.sigma + h * tangent.0, here.t + h * tangent.1);
            let corrected = self.correct(predicted, MAX_CORRECTION * h)?;
            let accepted = match corrected {
                None => {
                    failures += 1;
                    if failures >= cfg.stall_limit {
                        return Err(TraceError::Stall { at: here, failures });
                    }
                    None
                }
                Some((q, next)) => {
                    failures = 0;
                    let gp = next.deriv.value;
                    let turn = orientation * (gp.re * tangent.0 - gp.im * tangent.1) / gp.norm();
                    let re = next.value.value.re;
                    // Re zeta only reaches 0 at a zero; stepping past one is a miss
                    let monotone = orientation * (re - f.re) > 0.0 && re > 0.0;
                    (turn >= MIN_TURN_COS && monotone).then_some((q, next))
                }
            };
            match accepted {
                Some((q, next)) => {
                    points.push(q);
                    here = q;
                    pair = next;
                    if let Some(end) = self.stop_at(here, &stop) {
                        return Ok((points, end));
                    }
                    h = (h * 1.5).min(cfg.step_max);
                }
                None => {
                    h *= 0.5;
                    if h < cfg.step_min {
                        return Ok((points, aborted(format!("step underflow near {here}"))));
                    }
                }
            }
        }
        Ok((points, aborted(format!("step budget exhausted near {here}"))))
    }

    /// If the Newton estimate of a zero lies within the next step, polish
    /// it and snap to the nearest listed critical zero.
    fn try_capture(
        &self,
        here: ComplexPoint,
        f: Complex64,
        fp: Complex64,
        tangent: (f64, f64),
        h: f64,
        zeros: &[CriticalZero],
    ) -> Result<Option<(ComplexPoint, Terminus)>> {
        let cfg = &self.config;
        let estimate = here.to_complex() - f / fp;
        let offset = estimate - here.to_complex();
        let dist = offset.norm();
        let along = offset.re * tangent.0 + offset.im * tangent.1;
        if dist > h || along < 0.5 * dist {
            return Ok(None);
        }
        let mut rho = estimate;
        let mut modulus = f64::INFINITY;
        for _ in 0..30 {
            let p = self.zeta.eval_pair(ComplexPoint::from(rho))?;
            modulus = p.value.value.norm();
            if modulus < 1e-13 || p.deriv.value.norm() == 0.0 {
                break;
            }
            let delta = p.value.value / p.deriv.value;
            rho -= delta;
            if delta.norm() < 1e-15 {
                break;
            }
        }
        if modulus >= cfg.capture_modulus || (rho - estimate).norm() > h {
            return Ok(None);
        }
        let end = ComplexPoint::from(rho);
        let nearest = zeros
            .iter()
            .map(|z| (z, end.distance(ComplexPoint::new(0.5, z.t))))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let terminus = match nearest {
            Some((z, d)) if d < cfg.capture_distance => Terminus::Zero {
                t: z.t,
                ordinal: z.ordinal,
            },
            _ => aborted(format!("reached a zero at {end} that is not in the zero list")),
        };
        Ok(Some((end, terminus)))
    }

    /// Height where the trace crosses `Re s = sigma`, polished by Newton on
    /// `Im zeta(sigma + it)`. The first crossing from the trace start wins.
    pub fn crossing_at_sigma(&self, trace: &ContourTrace, sigma: f64) -> Result<f64> {
        let segment = trace
            .points
            .windows(2)
            .find(|w| (w[0].sigma - sigma) * (w[1].sigma - sigma) <= 0.0 && w[0].sigma != w[1].sigma)
            .or_else(|| trace.points.windows(2).find(|w| w[0].sigma == sigma));
        let Some(w) = segment else {
            return Err(TraceError::NoCrossing { sigma });
        };
        let (a, b) = (w[0], w[1]);
        let mut t = if a.sigma == b.sigma {
            a.t
        } else {
            a.t + (sigma - a.sigma) / (b.sigma - a.sigma) * (b.t - a.t)
        };
        let guess = t;
        let window = a.distance(b).max(1e-6) * 2.0;
        for _ in 0..30 {
            let pair = self.zeta.eval_pair(ComplexPoint::new(sigma, t))?;
            let v = pair.value.value.im;
            if v.abs() <= 1e-13 * pair.value.value.norm().max(1.0) {
                break;
            }
            let step = v / pair.deriv.value.re;
            t -= step;
            if !t.is_finite() || (t - guess).abs() > window {
                return Err(TraceError::NoCrossing { sigma });
            }
            if step.abs() < 1e-15 * t.abs() {
                break;
            }
        }
        Ok(t)
    }
}

fn aborted(reason: String) -> Terminus {
    Terminus::Aborted { reason }
}
