//! Channel, detector and relay model.
//!
//! Each party sends a phase-randomized weak coherent pulse in one of two time
//! bins (Z basis) or in a superposition of both (X basis). The relay
//! interferes the pulses on a 50/50 beam splitter and announces a ψ⁻ event
//! when exactly one early and one late click occur on opposite outputs.
//! Detectors are threshold detectors with dark-count probability `Y0` per
//! gate; channel loss and detector efficiency fold into one transmittance
//! per arm.

mod engine;
mod interference;

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};

pub use engine::ObservableModel;
pub use interference::{
    detector_intensities, visibility_single_photon, visibility_two_photon, InterferenceConfig,
};

/// How Z-basis bit errors arise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZErrorModel {
    /// Finite extinction between time bins: each Z pulse leaks a fraction
    /// `e_d^Z / 2` of its intensity coherently into the wrong bin. Errors then
    /// grow with the flux imbalance between the two arms.
    #[default]
    Leakage,
    /// Correct coincidences flip with probability `e_d^Z`, independently of
    /// the arriving fluxes.
    OutcomeFlip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemModel {
    /// Dark-count probability per detector per gate.
    pub dark_count_rate: f64,
    pub detector_efficiency: f64,
    pub misalignment_z: f64,
    pub misalignment_x: f64,
    /// dB/km.
    pub fiber_loss_coeff: f64,
    pub error_correction_eff: f64,
    pub security_param: f64,
    pub pulse_count: f64,
    /// km.
    pub length_a: f64,
    /// km.
    pub length_b: f64,
    /// Pulses per second.
    pub clock_rate: f64,
    #[serde(default)]
    pub z_error: ZErrorModel,
}

impl SystemModel {
    /// The experimental system: 46% detectors, 0.19 dB/km fiber, 75 MHz clock.
    pub fn experimental(length_a: f64, length_b: f64) -> Self {
        SystemModel {
            dark_count_rate: 6.40e-8,
            detector_efficiency: 0.46,
            misalignment_z: 0.005,
            misalignment_x: 0.04,
            fiber_loss_coeff: 0.19,
            error_correction_eff: 1.16,
            security_param: 1e-10,
            pulse_count: 1e12,
            length_a,
            length_b,
            clock_rate: 75e6,
            z_error: ZErrorModel::default(),
        }
    }

    pub fn with_lengths(&self, length_a: f64, length_b: f64) -> Self {
        SystemModel {
            length_a,
            length_b,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_range("dark_count_rate", self.dark_count_rate, 0.0, 1.0)?;
        if self.dark_count_rate >= 1.0 {
            return Err(Error::invalid("dark_count_rate", "must be below 1"));
        }
        check_range("detector_efficiency", self.detector_efficiency, 0.0, 1.0)?;
        if self.detector_efficiency <= 0.0 {
            return Err(Error::invalid("detector_efficiency", "must be positive"));
        }
        check_range("misalignment_z", self.misalignment_z, 0.0, 0.5)?;
        check_range("misalignment_x", self.misalignment_x, 0.0, 0.5)?;
        if !(self.fiber_loss_coeff > 0.0 && self.fiber_loss_coeff.is_finite()) {
            return Err(Error::invalid("fiber_loss_coeff", "must be positive"));
        }
        if !(self.error_correction_eff >= 1.0 && self.error_correction_eff.is_finite()) {
            return Err(Error::invalid("error_correction_eff", "must be at least 1"));
        }
        if !(self.security_param > 0.0 && self.security_param < 1.0) {
            return Err(Error::invalid("security_param", "must lie in (0, 1)"));
        }
        if !(self.pulse_count >= 1.0 && self.pulse_count.is_finite()) {
            return Err(Error::invalid("pulse_count", "must be at least 1"));
        }
        for (name, len) in [("length_a", self.length_a), ("length_b", self.length_b)] {
            if !(len >= 0.0 && len.is_finite()) {
                return Err(Error::invalid(name, "must be a non-negative length"));
            }
        }
        if !(self.clock_rate > 0.0 && self.clock_rate.is_finite()) {
            return Err(Error::invalid("clock_rate", "must be positive"));
        }
        Ok(())
    }

    /// Overall transmittance of each arm, detector efficiency included.
    pub fn arm_efficiencies(&self) -> (f64, f64) {
        let t = |len: f64| 10f64.powf(-self.fiber_loss_coeff * len / 10.0);
        (
            t(self.length_a) * self.detector_efficiency,
            t(self.length_b) * self.detector_efficiency,
        )
    }

    /// Coherent intensity fraction that a Z pulse leaks into the other bin.
    pub(crate) fn z_leakage(&self) -> f64 {
        match self.z_error {
            ZErrorModel::Leakage => self.misalignment_z / 2.0,
            ZErrorModel::OutcomeFlip => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityPairObservables {
    pub gain: f64,
    pub qber: f64,
}

impl IntensityPairObservables {
    pub(crate) fn from_gains(gain: f64, error_gain: f64) -> Self {
        let qber = if gain > 0.0 {
            (error_gain / gain).clamp(0.0, 1.0)
        } else {
            0.0
        };
        IntensityPairObservables {
            gain: gain.clamp(0.0, 1.0),
            qber,
        }
    }

    pub fn error_gain(&self) -> f64 {
        self.gain * self.qber
    }
}

/// Exact single-photon-pair quantities of the X basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinglePhotonTruth {
    pub yield_11: f64,
    pub phase_error: f64,
}

pub fn transmittance(loss_coeff: f64, length: f64) -> Result<f64> {
    if !(loss_coeff > 0.0 && loss_coeff.is_finite()) {
        return Err(Error::invalid("loss_coeff", "must be positive"));
    }
    if !(length >= 0.0 && length.is_finite()) {
        return Err(Error::invalid("length", format!("{length} km is not a valid length")));
    }
    Ok(10f64.powf(-loss_coeff * length / 10.0))
}

pub fn binary_entropy(p: f64) -> Result<f64> {
    check_range("p", p, 0.0, 1.0)?;
    Ok(entropy(p))
}

pub(crate) fn entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Modified Bessel function of the first kind, order zero.
pub fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > sum * 1e-17 && k < 2000.0 {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

fn check_intensity(name: &'static str, x: f64) -> Result<()> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::invalid(name, format!("{x} is not a mean photon number")));
    }
    Ok(())
}

/// Gain and QBER of a Z-basis pulse pair with mean photon numbers `s_a`, `s_b`.
pub fn z_basis_observables(
    model: &SystemModel,
    s_a: f64,
    s_b: f64,
) -> Result<IntensityPairObservables> {
    model.validate()?;
    check_intensity("s_a", s_a)?;
    check_intensity("s_b", s_b)?;
    Ok(ObservableModel::new(model).z(s_a, s_b))
}

/// Gain and QBER of an X-basis pulse pair; either intensity may be vacuum.
pub fn x_basis_observables(
    model: &SystemModel,
    a: f64,
    b: f64,
) -> Result<IntensityPairObservables> {
    model.validate()?;
    check_intensity("a", a)?;
    check_intensity("b", b)?;
    Ok(ObservableModel::new(model).x(a, b))
}

pub fn single_photon_truth(model: &SystemModel) -> Result<SinglePhotonTruth> {
    model.validate()?;
    Ok(ObservableModel::new(model).single_photon())
}
