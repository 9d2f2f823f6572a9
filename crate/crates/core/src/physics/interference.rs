//! Interference of two phase-locked coherent fields at the relay, and the
//! visibilities that follow from an intensity imbalance `k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferenceConfig {
    /// Square root of the arriving mean photon number, `sqrt(μ η η_d)`.
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub phase: f64,
}

pub fn detector_intensities(cfg: &InterferenceConfig) -> Result<(f64, f64)> {
    let InterferenceConfig {
        gamma_a,
        gamma_b,
        phase,
    } = *cfg;
    if !(gamma_a >= 0.0 && gamma_b >= 0.0) {
        return Err(Error::invalid("gamma", "amplitudes must be non-negative"));
    }
    let total = gamma_a * gamma_a + gamma_b * gamma_b;
    let cross = 2.0 * gamma_a * gamma_b * phase.cos();
    let d_c = (total - cross) / 2.0;
    Ok((d_c, total - d_c))
}

fn check_ratio(k: f64) -> Result<()> {
    if !(k > 0.0) {
        return Err(Error::invalid("k", format!("intensity ratio {k} must be positive")));
    }
    Ok(())
}

/// First-order visibility `2/(k + 1/k)`.
pub fn visibility_single_photon(k: f64) -> Result<f64> {
    check_ratio(k)?;
    if k.is_infinite() {
        return Ok(0.0);
    }
    Ok(2.0 / (k + 1.0 / k))
}

/// Two-photon (HOM) visibility of coherent pulses, `2/(2 + k² + 1/k²)`.
pub fn visibility_two_photon(k: f64) -> Result<f64> {
    check_ratio(k)?;
    if k.is_infinite() {
        return Ok(0.0);
    }
    Ok(2.0 / (2.0 + k * k + 1.0 / (k * k)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn cfg(gamma_a: f64, gamma_b: f64, phase: f64) -> InterferenceConfig {
        InterferenceConfig {
            gamma_a,
            gamma_b,
            phase,
        }
    }

    #[test]
    fn intensities_examples() {
        assert_eq!(detector_intensities(&cfg(1.0, 1.0, 0.0)).unwrap(), (0.0, 2.0));
        let (c, d) = detector_intensities(&cfg(1.0, 1.0, FRAC_PI_2)).unwrap();
        assert_relative_eq!(c, 1.0, epsilon = 1e-15);
        assert_relative_eq!(d, 1.0, epsilon = 1e-15);
        let (c, d) = detector_intensities(&cfg(1.0, 0.5, 0.0)).unwrap();
        assert_relative_eq!(c, 0.125);
        assert_relative_eq!(d, 1.125);
        assert!(detector_intensities(&cfg(-1.0, 0.5, 0.0)).is_err());
    }

    #[test]
    fn visibility_examples() {
        assert_eq!(visibility_single_photon(1.0).unwrap(), 1.0);
        assert_eq!(visibility_two_photon(1.0).unwrap(), 0.5);
        let k = 10f64.powf(-0.5);
        assert_relative_eq!(visibility_single_photon(k).unwrap(), 0.574960, max_relative = 1e-5);
        assert_relative_eq!(visibility_two_photon(k).unwrap(), 2.0 / 12.1, max_relative = 1e-9);
        assert_relative_eq!(visibility_two_photon(0.31623).unwrap(), 0.16529, max_relative = 1e-4);
        assert_eq!(visibility_single_photon(f64::INFINITY).unwrap(), 0.0);
        assert!(visibility_two_photon(1e-200).unwrap() < 1e-300);
        assert!(visibility_single_photon(0.0).is_err());
        assert!(visibility_two_photon(-2.0).is_err());
    }
}
