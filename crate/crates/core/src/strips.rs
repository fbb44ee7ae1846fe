//! Assembly of traced boundaries and critical zeros into strips.

use crate::contour::{ContourTrace, Terminus, TraceError, TraceKind, Tracer, ZeroContourClass};
use crate::zeros::CriticalZero;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StripError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("no {kind:?} trace with k = {k}")]
    MissingTrace { k: u32, kind: TraceKind },
    #[error("strip {m}: zero {ordinal} at t = {t} is within 1e-6 of a boundary crossing")]
    Partition { m: u32, ordinal: u64, t: f64 },
    #[error("strip {m}: primary trace ends at {terminus}, not at a zero inside the strip")]
    MissingPrimary { m: u32, terminus: String },
    #[error("strip {m}: bottom {bottom} is not below top {top}")]
    Inverted { m: u32, bottom: f64, top: f64 },
}

pub type Result<T> = std::result::Result<T, StripError>;

const BOUNDARY_CLEARANCE: f64 = 1e-6;

/// Strip `m`, bounded by the contours entering at `k = 2m` and `k = 2m + 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strip {
    pub m: u32,
    pub bottom_t: f64,
    pub top_t: f64,
    /// Ordinals of the critical zeros inside the strip, bottom first.
    pub zeros: Vec<u64>,
    /// 1-based position of the primary zero, counted from the bottom.
    pub primary_index: usize,
    pub measurement_sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimaryScore {
    pub value: f64,
}

/// Bottom and top rounded half-up to integers, as read off by eye.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundedStrip {
    pub m: u32,
    pub bottom: i64,
    pub top: i64,
    pub width: i64,
}

impl Strip {
    pub fn n_zeros(&self) -> usize {
        self.zeros.len()
    }

    pub fn primary_ordinal(&self) -> u64 {
        self.zeros[self.primary_index - 1]
    }
}

pub fn strip_width(strip: &Strip) -> f64 {
    strip.top_t - strip.bottom_t
}

pub fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

pub fn rounded_strip(strip: &Strip) -> RoundedStrip {
    let bottom = round_half_up(strip.bottom_t);
    let top = round_half_up(strip.top_t);
    RoundedStrip {
        m: strip.m,
        bottom,
        top,
        width: top - bottom,
    }
}

pub fn primary_score(strip: &Strip) -> PrimaryScore {
    PrimaryScore {
        value: (strip.primary_index as f64 - 0.5) / strip.n_zeros() as f64,
    }
}

/// Builds strips `1..=m_max` from the traces.
///
/// Zero membership is decided by the crossings of the critical line, where
/// the zeros live; `bottom_t` and `top_t` are the crossings at
/// `measurement_sigma`. At the default `measurement_sigma = 1/2` the two
/// coincide.
pub fn build_strips(
    tracer: &Tracer,
    traces: &[ContourTrace],
    zeros: &[CriticalZero],
    m_max: u32,
    measurement_sigma: f64,
) -> Result<Vec<Strip>> {
    let by_k: BTreeMap<u32, &ContourTrace> = traces.iter().map(|t| (t.k, t)).collect();
    let lookup = |k: u32, kind: TraceKind| -> Result<&ContourTrace> {
        by_k.get(&k)
            .copied()
            .filter(|t| t.kind == kind)
            .ok_or(StripError::MissingTrace { k, kind })
    };

    let mut critical = Vec::with_capacity(m_max as usize + 1);
    let mut measured = Vec::with_capacity(m_max as usize + 1);
    for m in 1..=m_max + 1 {
        let trace = lookup(2 * m, TraceKind::Boundary)?;
        let on_line = tracer.crossing_at_sigma(trace, 0.5)?;
        critical.push(on_line);
        measured.push(if measurement_sigma == 0.5 {
            on_line
        } else {
            tracer.crossing_at_sigma(trace, measurement_sigma)?
        });
    }

    let mut strips = Vec::with_capacity(m_max as usize);
    for m in 1..=m_max {
        let i = (m - 1) as usize;
        let (lo, hi) = (critical[i], critical[i + 1]);
        let (bottom_t, top_t) = (measured[i], measured[i + 1]);
        if !(lo < hi && bottom_t < top_t) {
            return Err(StripError::Inverted {
                m,
                bottom: bottom_t,
                top: top_t,
            });
        }
        for z in zeros {
            if (z.t - lo).abs() < BOUNDARY_CLEARANCE || (z.t - hi).abs() < BOUNDARY_CLEARANCE {
                return Err(StripError::Partition {
                    m,
                    ordinal: z.ordinal,
                    t: z.t,
                });
            }
        }
        let inside: Vec<u64> = zeros
            .iter()
            .filter(|z| lo < z.t && z.t < hi)
            .map(|z| z.ordinal)
            .collect();

        let primary = lookup(2 * m + 1, TraceKind::PrimaryCandidate)?;
        let primary_index = match &primary.terminus {
            Terminus::Zero { ordinal, .. } => inside.iter().position(|o| o == ordinal).map(|p| p + 1),
            _ => None,
        }
        .ok_or_else(|| StripError::MissingPrimary {
            m,
            terminus: format!("{:?}", primary.terminus),
        })?;

        strips.push(Strip {
            m,
            bottom_t,
            top_t,
            zeros: inside,
            primary_index,
            measurement_sigma,
        });
    }
    Ok(strips)
}

/// Cross-check of the trace-based primary zeros against the
/// classification of every zero's `theta = 0` branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimaryAgreement {
    pub strips: usize,
    /// Strips with exactly one right-escaping zero.
    pub single_right: usize,
    /// Strips where that zero is the trace-based primary.
    pub agreeing: usize,
    pub disagreeing_strips: Vec<u32>,
}

impl PrimaryAgreement {
    pub fn all_agree(&self) -> bool {
        self.agreeing == self.strips && self.single_right == self.strips
    }
}

pub fn primary_agreement(
    strips: &[Strip],
    classes: &BTreeMap<u64, ZeroContourClass>,
) -> PrimaryAgreement {
    let mut single_right = 0;
    let mut agreeing = 0;
    let mut disagreeing_strips = Vec::new();
    for strip in strips {
        let right: Vec<u64> = strip
            .zeros
            .iter()
            .copied()
            .filter(|o| classes.get(o) == Some(&ZeroContourClass::RightInfinity))
            .collect();
        if right.len() == 1 {
            single_right += 1;
        }
        if right == [strip.primary_ordinal()] {
            agreeing += 1;
        } else {
            disagreeing_strips.push(strip.m);
        }
    }
    PrimaryAgreement {
        strips: strips.len(),
        single_right,
        agreeing,
        disagreeing_strips,
    }
}
