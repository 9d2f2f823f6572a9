//! Parameter optimization in polar coordinates.
//!
//! Intensity pairs `(x_A, x_B)` are searched as a radius and an angle, so a
//! coordinate step can move along the asymmetry direction without touching
//! the overall brightness. The two decoys share one angle, which keeps
//! `μ_A/ν_A = μ_B/ν_B` exact throughout the search.

mod params;
mod search;
mod strategy;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::decoy::{
    estimate_raw, DecoyBounds, FiniteKeyConfig, ObservedStatistics, PairLabel, PairRecord,
    RawBounds,
};
use crate::error::Result;
use crate::keyrate::{rate_per_second, secret_key_rate, RateInputs};
use crate::physics::{entropy, IntensityPairObservables, ObservableModel, SystemModel};

pub use params::{from_polar, to_polar, ParameterVector, PolarVector, SourceSettings, RATIO_LOCK_TOL};
pub use search::{CoordinateDescent, SearchOutcome};
pub use strategy::{coordinate_descent, fiber_padding, scan, Optimizer, ScanPoint, Strategy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub params: ParameterVector,
    pub rate_per_pulse: f64,
    pub rate_per_second: f64,
    pub bounds: DecoyBounds,
    /// Z-basis signal pair.
    pub observables: IntensityPairObservables,
    pub iterations: usize,
    pub wall_time: Duration,
}

/// Physics, decoy analysis and key rate for one model, reused across many
/// parameter vectors.
#[derive(Debug, Clone)]
pub struct Evaluator {
    model: SystemModel,
    observables: ObservableModel,
    fk: FiniteKeyConfig,
}

struct Assessment {
    raw: RawBounds,
    signal: IntensityPairObservables,
}

impl Evaluator {
    pub fn new(model: &SystemModel, fk: &FiniteKeyConfig) -> Result<Self> {
        model.validate()?;
        fk.validate()?;
        Ok(Evaluator {
            model: model.clone(),
            observables: ObservableModel::new(model),
            fk: *fk,
        })
    }

    pub fn model(&self) -> &SystemModel {
        &self.model
    }

    /// Expected counts of all ten pairs over `N` pulses.
    pub fn statistics(&self, p: &ParameterVector) -> Result<ObservedStatistics> {
        p.check_basic()?;
        Ok(self.statistics_unchecked(p))
    }

    fn statistics_unchecked(&self, p: &ParameterVector) -> ObservedStatistics {
        let (pa, pb) = (p.alice.probabilities(), p.bob.probabilities());
        let records = PairLabel::ALL.map(|label| {
            let (ia, ib) = label.intensities();
            let (a, b) = (p.alice.intensity(ia), p.bob.intensity(ib));
            let (q, eq) = if label == PairLabel::Ss {
                self.observables.z_gains(a, b)
            } else {
                self.observables.x_gains(a, b)
            };
            let trials = self.model.pulse_count * pa.of(ia) * pb.of(ib);
            let total = (q * trials).min(trials);
            (
                label,
                PairRecord {
                    total,
                    errors: (eq * trials).min(total),
                    trials,
                },
            )
        });
        ObservedStatistics::new(records).expect("model counts are consistent")
    }

    fn assess(&self, p: &ParameterVector) -> Result<Assessment> {
        let stats = self.statistics_unchecked(p);
        let raw = estimate_raw(&p.decoys(), &stats, &self.fk)?;
        let ss = stats.get(PairLabel::Ss);
        let signal = IntensityPairObservables::from_gains(ss.gain(), ss.error_gain());
        Ok(Assessment { raw, signal })
    }

    fn rate_inputs(&self, p: &ParameterVector, bounds: &DecoyBounds, signal: &IntensityPairObservables) -> RateInputs {
        RateInputs {
            s_a: p.alice.s,
            s_b: p.bob.s,
            p_sa: p.alice.p_s,
            p_sb: p.bob.p_s,
            y11: bounds.y11_lower,
            e11: bounds.e11_upper,
            q_ss: signal.gain,
            e_ss: signal.qber,
            f: self.model.error_correction_eff,
        }
    }

    /// Search objective. Equals the key rate wherever it is positive.
    ///
    /// Elsewhere it is a continuous negative surrogate that keeps a slope on
    /// the zero-rate plateau: the privacy term continues linearly past
    /// `e11 = 1/2` and into negative `y11`, and the send-probability prefactor
    /// is dropped so the search is not drawn towards `p_s -> 0`. Parameters
    /// violating `s > μ > ν` score `-inf`.
    pub fn objective(&self, p: &ParameterVector) -> f64 {
        if !p.is_ordered() || p.check_basic().is_err() {
            return f64::NEG_INFINITY;
        }
        let Ok(a) = self.assess(p) else {
            return f64::NEG_INFINITY;
        };
        let (sa, sb) = (p.alice.s, p.bob.s);
        let (y, x) = (a.raw.y11.min(1.0), a.raw.error_yield.max(0.0));
        let private = if y <= 0.0 {
            y - x
        } else if x <= 0.5 * y {
            y * (1.0 - entropy(x / y))
        } else {
            0.5 * y - x
        };
        let ec = self.model.error_correction_eff * a.signal.gain * entropy(a.signal.qber.min(0.5));
        let bracket = sa * sb * (-sa - sb).exp() * private - ec;
        if bracket > 0.0 {
            p.alice.p_s * p.bob.p_s * bracket
        } else {
            bracket
        }
    }

    pub fn evaluate(&self, p: &ParameterVector) -> Result<OptimizationResult> {
        p.check_basic()?;
        let a = self.assess(p)?;
        let bounds = a.raw.clamp();
        let rate = secret_key_rate(&self.rate_inputs(p, &bounds, &a.signal))?;
        Ok(OptimizationResult {
            params: *p,
            rate_per_pulse: rate,
            rate_per_second: rate_per_second(rate, self.model.clock_rate)?,
            bounds,
            observables: a.signal,
            iterations: 0,
            wall_time: Duration::ZERO,
        })
    }
}

/// Runs physics, decoy bounds and key rate for one parameter vector.
pub fn evaluate(
    model: &SystemModel,
    p: &ParameterVector,
    fk: &FiniteKeyConfig,
) -> Result<OptimizationResult> {
    Evaluator::new(model, fk)?.evaluate(p)
}
