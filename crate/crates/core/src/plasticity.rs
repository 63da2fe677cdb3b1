//! Local weight-update rules and the weight-bounding step.
//!
//! Every rule sees only the presynaptic activation `x`, the postsynaptic
//! activation `y` and the current weight `w`. Activations come from rectified
//! units, so "x = 0" below means an exact floating-point zero.

use serde::{Deserialize, Serialize};

use crate::activations::tanh_rec_unchecked;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// Three-case rule: create, potentiate above threshold, depress below.
    Compressed,
    /// Sign-aware eight-case rule with separate depression rates.
    Extended,
    /// `Δw = η·x·y` with `η = eta_ltp`.
    PlainHebb,
}

impl std::str::FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "compressed" => Ok(Rule::Compressed),
            "extended" => Ok(Rule::Extended),
            "plain" | "plain_hebb" | "plainhebb" => Ok(Rule::PlainHebb),
            other => Err(Error::invalid(format!(
                "unknown rule `{other}` (expected compressed, extended or plain)"
            ))),
        }
    }
}

impl std::fmt::Display for Rule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Rule::Compressed => "compressed",
            Rule::Extended => "extended",
            Rule::PlainHebb => "plain",
        })
    }
}

/// What happens to a weight update that leaves `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Bounding {
    /// Replace with `±reset_magnitude`.
    HardReset { reset_magnitude: f64 },
    /// Replace with `±tanh_rec(|w|, c_weights)`.
    Squash { c_weights: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlasticityParams {
    pub eta_ltp: f64,
    pub eta_ltd: f64,
    pub eta_ltp2: f64,
    pub threshold: f64,
    pub creation_value: f64,
    /// Compressed rule only: a zero weight is created only when `x·y >= threshold`.
    pub creation_requires_threshold: bool,
    pub rule: Rule,
    pub bounding: Bounding,
}

impl Default for PlasticityParams {
    fn default() -> Self {
        PlasticityParams {
            eta_ltp: 0.001,
            eta_ltd: 0.0001,
            eta_ltp2: 0.0001,
            threshold: 0.25,
            creation_value: 0.50,
            creation_requires_threshold: true,
            rule: Rule::Compressed,
            bounding: Bounding::HardReset {
                reset_magnitude: 0.90,
            },
        }
    }
}

impl PlasticityParams {
    pub fn validate(&self) -> Result<()> {
        for (name, rate) in [
            ("eta_ltp", self.eta_ltp),
            ("eta_ltd", self.eta_ltd),
            ("eta_ltp2", self.eta_ltp2),
        ] {
            if !(rate.is_finite() && rate > 0.0) {
                return Err(Error::config(format!("{name} must be > 0, got {rate}")));
            }
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::config(format!(
                "threshold must lie in [0, 1], got {}",
                self.threshold
            )));
        }
        if !(self.creation_value > 0.0 && self.creation_value <= 1.0) {
            return Err(Error::config(format!(
                "creation_value must lie in (0, 1], got {}",
                self.creation_value
            )));
        }
        match self.bounding {
            Bounding::HardReset { reset_magnitude } => {
                if !(reset_magnitude > 0.0 && reset_magnitude < 1.0) {
                    return Err(Error::config(format!(
                        "reset_magnitude must lie in (0, 1), got {reset_magnitude}"
                    )));
                }
            }
            Bounding::Squash { c_weights } => {
                if !(c_weights.is_finite() && c_weights > 0.0) {
                    return Err(Error::config(format!(
                        "c_weights must be > 0, got {c_weights}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Weight change under the configured rule. Inputs must already be in range.
    #[inline]
    pub(crate) fn delta(&self, x: f64, y: f64, w: f64) -> f64 {
        match self.rule {
            Rule::Compressed => compressed(x, y, w, self),
            Rule::Extended => extended(x, y, w, self),
            Rule::PlainHebb => self.eta_ltp * x * y,
        }
    }

    /// One full update step: rule followed by bounding.
    #[inline]
    pub(crate) fn step(&self, x: f64, y: f64, w: f64) -> f64 {
        bound(w, self.delta(x, y, w), &self.bounding)
    }
}

#[inline]
fn compressed(x: f64, y: f64, w: f64, p: &PlasticityParams) -> f64 {
    let xy = x * y;
    if w == 0.0 {
        if xy >= p.threshold || !p.creation_requires_threshold {
            p.creation_value
        } else {
            0.0
        }
    } else if xy >= p.threshold {
        p.eta_ltp * xy
    } else {
        -p.eta_ltp * xy
    }
}

#[inline]
fn extended(x: f64, y: f64, w: f64, p: &PlasticityParams) -> f64 {
    if w == 0.0 {
        return if x * y >= p.threshold {
            p.creation_value
        } else {
            0.0
        };
    }
    let potentiating = w > 0.0;
    let magnitude = match (x > 0.0, y > 0.0) {
        (true, true) => p.eta_ltp * x * y,
        (true, false) => -p.eta_ltd * x,
        (false, true) => p.eta_ltp2 * y,
        (false, false) => return 0.0,
    };
    if potentiating {
        magnitude
    } else {
        -magnitude
    }
}

#[inline]
fn bound(w_old: f64, delta: f64, bounding: &Bounding) -> f64 {
    let raw = w_old + delta;
    // sign flips are not allowed: excitatory stays excitatory
    if (w_old > 0.0 && raw < 0.0) || (w_old < 0.0 && raw > 0.0) {
        return 0.0;
    }
    if raw > 1.0 {
        match *bounding {
            Bounding::HardReset { reset_magnitude } => reset_magnitude,
            Bounding::Squash { c_weights } => tanh_rec_unchecked(raw, c_weights),
        }
    } else if raw < -1.0 {
        match *bounding {
            Bounding::HardReset { reset_magnitude } => -reset_magnitude,
            Bounding::Squash { c_weights } => -tanh_rec_unchecked(-raw, c_weights),
        }
    } else {
        raw
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "{name} must lie in [0, 1], got {v}"
        )))
    }
}

fn check_weight(w: f64) -> Result<()> {
    if (-1.0..=1.0).contains(&w) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "weight must lie in [-1, 1], got {w}"
        )))
    }
}

fn check_triple(x: f64, y: f64, w: f64) -> Result<()> {
    check_unit("x", x)?;
    check_unit("y", y)?;
    check_weight(w)
}

pub fn delta_w_compressed(x: f64, y: f64, w: f64, p: &PlasticityParams) -> Result<f64> {
    check_triple(x, y, w)?;
    Ok(compressed(x, y, w, p))
}

pub fn delta_w_extended(x: f64, y: f64, w: f64, p: &PlasticityParams) -> Result<f64> {
    check_triple(x, y, w)?;
    Ok(extended(x, y, w, p))
}

pub fn delta_w_plain(x: f64, y: f64, eta: f64) -> Result<f64> {
    check_unit("x", x)?;
    check_unit("y", y)?;
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::invalid(format!("eta must be > 0, got {eta}")));
    }
    Ok(eta * x * y)
}

/// Applies `delta` to `w_old`, zeroing sign crossings and bounding the result
/// to `[-1, 1]` according to `p.bounding`.
pub fn bound_weight(w_old: f64, delta: f64, p: &PlasticityParams) -> f64 {
    bound(w_old, delta, &p.bounding)
}
