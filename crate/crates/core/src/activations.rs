//! Rectifying nonlinearities applied by every non-input layer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nonlinearity applied by a layer to its preactivation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActivationKind {
    /// `tanh(c·x)` for `x > 0`, zero otherwise. Output lies in `[0, 1)`.
    RectifiedTanh { coefficient: f64 },
    /// `x` for `x > 0`, zero otherwise.
    Relu,
}

impl ActivationKind {
    pub fn rectified_tanh(coefficient: f64) -> Result<Self> {
        let kind = ActivationKind::RectifiedTanh { coefficient };
        kind.validate()?;
        Ok(kind)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ActivationKind::RectifiedTanh { coefficient } => check_coefficient(coefficient),
            ActivationKind::Relu => Ok(()),
        }
    }

    /// Hot-path evaluation; the kind must already be validated and `z` finite.
    #[inline]
    pub(crate) fn eval(&self, z: f64) -> f64 {
        match *self {
            ActivationKind::RectifiedTanh { coefficient } => tanh_rec_unchecked(z, coefficient),
            ActivationKind::Relu => relu_unchecked(z),
        }
    }
}

#[inline]
pub(crate) fn tanh_rec_unchecked(x: f64, c: f64) -> f64 {
    if x > 0.0 {
        // tanh saturates to 1.0 instead of overflowing for large c·x
        (c * x).tanh()
    } else {
        0.0
    }
}

#[inline]
pub(crate) fn relu_unchecked(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

fn check_coefficient(c: f64) -> Result<()> {
    if c.is_finite() && c > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "activation coefficient must be finite and > 0, got {c}"
        )))
    }
}

fn check_finite(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "activation input must be finite, got {x}"
        )))
    }
}

/// Rectified hyperbolic tangent with slope coefficient `c`.
pub fn tanh_rec(x: f64, c: f64) -> Result<f64> {
    check_finite(x)?;
    check_coefficient(c)?;
    Ok(tanh_rec_unchecked(x, c))
}

/// Rectified linear unit.
pub fn relu(x: f64) -> Result<f64> {
    check_finite(x)?;
    Ok(relu_unchecked(x))
}

pub fn apply_activation(kind: ActivationKind, preactivation: f64) -> Result<f64> {
    match kind {
        ActivationKind::RectifiedTanh { coefficient } => tanh_rec(preactivation, coefficient),
        ActivationKind::Relu => relu(preactivation),
    }
}
