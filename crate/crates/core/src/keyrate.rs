//! Secret-key rate, digital-signature feasibility and the twin-field rate.

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::physics::entropy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateInputs {
    pub s_a: f64,
    pub s_b: f64,
    pub p_sa: f64,
    pub p_sb: f64,
    pub y11: f64,
    pub e11: f64,
    pub q_ss: f64,
    pub e_ss: f64,
    pub f: f64,
}

impl RateInputs {
    pub fn validate(&self) -> Result<()> {
        if !(self.s_a > 0.0 && self.s_b > 0.0) {
            return Err(Error::invalid("s", "signal intensities must be positive"));
        }
        for (name, v) in [
            ("p_sa", self.p_sa),
            ("p_sb", self.p_sb),
            ("y11", self.y11),
            ("e11", self.e11),
            ("q_ss", self.q_ss),
            ("e_ss", self.e_ss),
        ] {
            check_range(name, v, 0.0, 1.0)?;
        }
        if !(self.f >= 1.0) {
            return Err(Error::invalid("f", "error-correction efficiency must be at least 1"));
        }
        Ok(())
    }

    /// Bracketed rate before the clamp; may be negative.
    pub fn unclamped(&self) -> f64 {
        let single = self.s_a * self.s_b * (-self.s_a - self.s_b).exp() * self.y11;
        let pa = 1.0 - entropy(self.e11.min(0.5));
        let ec = self.f * self.q_ss * entropy(self.e_ss.min(0.5));
        self.p_sa * self.p_sb * (single * pa - ec)
    }
}

/// Key bits per sent pulse pair.
pub fn secret_key_rate(inputs: &RateInputs) -> Result<f64> {
    inputs.validate()?;
    Ok(inputs.unclamped().max(0.0))
}

pub fn rate_per_second(rate: f64, clock: f64) -> Result<f64> {
    if !(rate >= 0.0) {
        return Err(Error::invalid("rate", "must be non-negative"));
    }
    if !(clock > 0.0) {
        return Err(Error::invalid("clock", "must be positive"));
    }
    Ok(rate * clock)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QdsInputs {
    pub q_z00: f64,
    pub q_z11: f64,
    pub e_x11: f64,
    pub e_z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QdsVerdict {
    pub feasible: bool,
    pub margin: f64,
}

/// Sign and value of `Q00 + Q11 (1 − h(e_X11)) − h(E_Z)`.
pub fn qds_feasible(inputs: &QdsInputs) -> Result<QdsVerdict> {
    let QdsInputs {
        q_z00,
        q_z11,
        e_x11,
        e_z,
    } = *inputs;
    for (name, v) in [("q_z00", q_z00), ("q_z11", q_z11), ("e_x11", e_x11), ("e_z", e_z)] {
        check_range(name, v, 0.0, 1.0)?;
    }
    let margin = q_z00 + q_z11 * (1.0 - entropy(e_x11)) - entropy(e_z);
    Ok(QdsVerdict {
        feasible: margin > 0.0,
        margin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TfQkdInputs {
    /// Number of phase slices.
    pub m: f64,
    /// Phase post-selection factor.
    pub d: f64,
    pub q1: f64,
    pub e1: f64,
    pub q_mu: f64,
    pub e_mu: f64,
    pub f: f64,
}

pub fn tf_qkd_rate(inputs: &TfQkdInputs) -> Result<f64> {
    let TfQkdInputs {
        m,
        d,
        q1,
        e1,
        q_mu,
        e_mu,
        f,
    } = *inputs;
    if !(m >= 1.0) {
        return Err(Error::invalid("m", "need at least one phase slice"));
    }
    if !(d > 0.0 && d <= m) {
        return Err(Error::invalid("d", "must lie in (0, m]"));
    }
    for (name, v) in [("q1", q1), ("e1", e1), ("q_mu", q_mu), ("e_mu", e_mu)] {
        check_range(name, v, 0.0, 1.0)?;
    }
    if !(f >= 1.0) {
        return Err(Error::invalid("f", "error-correction efficiency must be at least 1"));
    }
    let r = d / m * (q1 * (1.0 - entropy(e1)) - f * q_mu * entropy(e_mu));
    Ok(r.max(0.0))
}
