use std::path::Path;

use mdiqkd::decoy::FiniteKeyConfig;
use mdiqkd::optimizer::Strategy;
use mdiqkd::physics::{SystemModel, ZErrorModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{config, Result};

pub const DEFAULT: &str = include_str!("../default.toml");

/// Flat run configuration. Every key is optional in a user file; missing
/// keys take the bundled defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub y0: f64,
    pub eta_d: f64,
    pub e_d_z: f64,
    pub e_d_x: f64,
    pub alpha: f64,
    pub f: f64,
    pub epsilon: f64,
    pub n: f64,
    pub clock_rate: f64,
    #[serde(default)]
    pub z_error: ZErrorModel,
    pub l_a_start: f64,
    pub l_a_stop: f64,
    pub l_a_step: f64,
    pub l_b_start: f64,
    pub l_b_stop: f64,
    pub l_b_step: f64,
    pub strategies: Vec<Strategy>,
    pub finite_key: bool,
    pub seed: u64,
    pub workers: usize,
}

impl RunConfig {
    /// Bundled defaults overlaid with the keys of `path`, if given.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut table: toml::Table = DEFAULT.parse().map_err(config)?;
        if let Some(p) = path {
            let text = std::fs::read_to_string(p).map_err(|e| config(format!("{}: {e}", p.display())))?;
            let user: toml::Table = text.parse().map_err(|e| config(format!("{}: {e}", p.display())))?;
            table.extend(user);
        }
        let cfg: RunConfig = table.try_into().map_err(config)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(config("at least one strategy is required"));
        }
        for (name, step) in [("l_a_step", self.l_a_step), ("l_b_step", self.l_b_step)] {
            if !(step > 0.0 && step.is_finite()) {
                return Err(config(format!("{name} must be positive")));
            }
        }
        for (name, lo, hi) in [
            ("l_a", self.l_a_start, self.l_a_stop),
            ("l_b", self.l_b_start, self.l_b_stop),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(config(format!("{name} range is empty")));
            }
        }
        self.model(self.l_a_start, self.l_b_start).validate().map_err(config)?;
        self.finite_key_config().validate().map_err(config)
    }

    pub fn model(&self, length_a: f64, length_b: f64) -> SystemModel {
        SystemModel {
            dark_count_rate: self.y0,
            detector_efficiency: self.eta_d,
            misalignment_z: self.e_d_z,
            misalignment_x: self.e_d_x,
            fiber_loss_coeff: self.alpha,
            error_correction_eff: self.f,
            security_param: self.epsilon,
            pulse_count: self.n,
            length_a,
            length_b,
            clock_rate: self.clock_rate,
            z_error: self.z_error,
        }
    }

    pub fn finite_key_config(&self) -> FiniteKeyConfig {
        if self.finite_key {
            FiniteKeyConfig::finite(self.epsilon)
        } else {
            FiniteKeyConfig::asymptotic()
        }
    }

    pub fn lengths_a(&self) -> Vec<f64> {
        range(self.l_a_start, self.l_a_stop, self.l_a_step)
    }

    pub fn lengths_b(&self) -> Vec<f64> {
        range(self.l_b_start, self.l_b_stop, self.l_b_step)
    }

    /// All `(L_A, L_B)` pairs, sorted.
    pub fn grid(&self) -> Vec<(f64, f64)> {
        let bs = self.lengths_b();
        self.lengths_a()
            .into_iter()
            .flat_map(|a| bs.iter().map(move |&b| (a, b)))
            .collect()
    }

    /// Hex SHA-256 of the canonical serialization of the effective config.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

/// `start, start + step, ...` up to `stop`, tolerating rounding at the end.
fn range(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + step * i as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_reproduce_system_table() {
        let cfg = RunConfig::load(None).unwrap();
        assert_eq!(cfg.model(10.0, 60.0), SystemModel::experimental(10.0, 60.0));
        assert_eq!(cfg.grid(), vec![(10.0, 60.0)]);
        assert_eq!(cfg.strategies, Strategy::ALL.to_vec());
    }

    #[test]
    fn ranges_include_stop() {
        assert_eq!(range(40.0, 90.0, 10.0), vec![40.0, 50.0, 60.0, 70.0, 80.0, 90.0]);
        assert_eq!(range(0.0, 0.3, 0.1).len(), 4);
        assert_eq!(range(5.0, 5.0, 1.0), vec![5.0]);
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::load(None).unwrap();
        let b = RunConfig { seed: 2, ..a.clone() };
        assert_eq!(a.hash(), a.clone().hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
