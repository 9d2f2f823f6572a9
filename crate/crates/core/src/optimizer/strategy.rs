use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::params::{polar_unchecked, PolarVector};
use super::search::CoordinateDescent;
use super::{Evaluator, OptimizationResult, ParameterVector};
use crate::decoy::{FiniteKeyConfig, SideProbabilities};
use crate::error::{Error, Result};
use crate::physics::SystemModel;
use crate::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Independent intensities and probabilities for each party.
    SevenIntensity,
    /// One intensity set shared by both parties.
    FourIntensity,
    /// Shared intensities after padding the shorter arm to equal loss.
    FourIntensityPlusFiber,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [
        Strategy::SevenIntensity,
        Strategy::FourIntensity,
        Strategy::FourIntensityPlusFiber,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::SevenIntensity => "seven_intensity",
            Strategy::FourIntensity => "four_intensity",
            Strategy::FourIntensityPlusFiber => "four_intensity_plus_fiber",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_lowercase().replace(['-', ' '], "_").replace('+', "_plus_");
        match norm.as_str() {
            "seven_intensity" | "7_int" | "7_intensity" => Ok(Strategy::SevenIntensity),
            "four_intensity" | "4_int" | "4_intensity" => Ok(Strategy::FourIntensity),
            "four_intensity_plus_fiber" | "4_int_plus_fiber" | "4_intensity_plus_fiber" => {
                Ok(Strategy::FourIntensityPlusFiber)
            }
            _ => Err(Error::invalid("strategy", format!("unknown strategy `{s}`"))),
        }
    }
}

/// Lengthens the lower-loss arm until both arms have equal loss.
pub fn fiber_padding(model: &SystemModel) -> SystemModel {
    let l = model.length_a.max(model.length_b);
    model.with_lengths(l, l)
}

const THETA_MIN: f64 = 0.01;
const THETA_MAX: f64 = FRAC_PI_2 - 0.01;
const R_MIN: f64 = 1e-4;
const R_MAX: f64 = SQRT_2;
const R_NU_MIN: f64 = 1e-5;
const P_MIN: f64 = 1e-4;

/// Search coordinates of one strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Space {
    /// `[r_s, θ_s, r_μ, r_ν, θ_μν, p_sA, p_μA, p_νA, p_sB, p_μB, p_νB]`.
    Seven,
    /// `[r_s, r_μ, r_ν, p_s, p_μ, p_ν]` with both angles at π/4.
    Four,
}

impl Space {
    fn to_polar(self, x: &[f64]) -> PolarVector {
        let side = |i: usize| SideProbabilities {
            signal: x[i],
            mu: x[i + 1],
            nu: x[i + 2],
        };
        match self {
            Space::Seven => PolarVector {
                r_s: x[0],
                theta_s: x[1],
                r_mu: x[2],
                r_nu: x[3],
                theta_mn: x[4],
                alice: side(5),
                bob: side(8),
            },
            Space::Four => PolarVector {
                r_s: x[0],
                theta_s: FRAC_PI_4,
                r_mu: x[1],
                r_nu: x[2],
                theta_mn: FRAC_PI_4,
                alice: side(3),
                bob: side(3),
            },
        }
    }

    fn params(self, x: &[f64]) -> ParameterVector {
        polar_unchecked(&self.to_polar(x))
    }

    fn coords(self, q: &PolarVector) -> Vec<f64> {
        let p = |s: &SideProbabilities| [s.signal, s.mu, s.nu];
        match self {
            Space::Seven => {
                let mut x = vec![q.r_s, q.theta_s, q.r_mu, q.r_nu, q.theta_mn];
                x.extend(p(&q.alice));
                x.extend(p(&q.bob));
                x
            }
            Space::Four => {
                let mut x = vec![q.r_s, q.r_mu, q.r_nu];
                x.extend(p(&q.alice));
                x
            }
        }
    }

    fn bounds(self, x: &[f64], i: usize) -> (f64, f64) {
        let (first_p, r_mu, r_nu) = match self {
            Space::Seven => (5, 2, 3),
            Space::Four => (3, 1, 2),
        };
        if i >= first_p {
            let base = first_p + 3 * ((i - first_p) / 3);
            let others: f64 = (base..base + 3).filter(|&j| j != i).map(|j| x[j]).sum();
            return (P_MIN, 1.0 - P_MIN - others);
        }
        match (self, i) {
            (Space::Seven, 1 | 4) => (THETA_MIN, THETA_MAX),
            (_, j) if j == r_nu => (R_NU_MIN, x[r_mu] * (1.0 - 1e-9)),
            _ => (R_MIN, R_MAX),
        }
    }
}

fn symmetric_start(theta: f64) -> PolarVector {
    let p = SideProbabilities {
        signal: 0.5,
        mu: 0.1,
        nu: 0.2,
    };
    PolarVector {
        r_s: 0.5,
        theta_s: theta,
        r_mu: 0.2,
        r_nu: 0.04,
        theta_mn: theta,
        alice: p,
        bob: p,
    }
}

/// Signal barely above the decoy, for long unbalanced links where the
/// ordering constraint binds on the near side.
fn dim_signal_start(theta: f64) -> PolarVector {
    PolarVector {
        r_s: 0.63,
        r_mu: 0.6,
        r_nu: 0.12,
        ..symmetric_start(theta)
    }
}

fn random_probabilities(rng: &mut ChaCha8Rng) -> SideProbabilities {
    let w: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.05..1.0));
    let sum: f64 = w.iter().sum();
    SideProbabilities {
        signal: w[0] / sum,
        mu: w[1] / sum,
        nu: w[2] / sum,
    }
}

fn random_start(seed: u64, stream: u64, symmetric: bool) -> PolarVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let r_s = rng.random_range(0.05..1.2);
    let r_mu = rng.random_range(0.02..r_s);
    let r_nu = r_mu * rng.random_range(0.05..0.5);
    let (theta_s, theta_mn) = if symmetric {
        (FRAC_PI_4, FRAC_PI_4)
    } else {
        (rng.random_range(0.05..1.5), rng.random_range(0.05..1.5))
    };
    let alice = random_probabilities(&mut rng);
    let bob = if symmetric {
        alice
    } else {
        random_probabilities(&mut rng)
    };
    PolarVector {
        r_s,
        theta_s,
        r_mu,
        r_nu,
        theta_mn,
        alice,
        bob,
    }
}

/// Options of a strategy optimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimizer {
    pub search: CoordinateDescent,
    /// Seeded random starts in addition to the deterministic ones.
    pub restarts: usize,
    /// How the independent starts are spread.
    pub execution: Execution,
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer {
            search: CoordinateDescent::default(),
            restarts: 3,
            execution: Execution::default(),
        }
    }
}

struct Best {
    params: ParameterVector,
    sweeps: usize,
}

impl Optimizer {
    pub fn run(
        &self,
        model: &SystemModel,
        strategy: Strategy,
        fk: &FiniteKeyConfig,
        seed: u64,
    ) -> Result<OptimizationResult> {
        Ok(self.run_all(model, &[strategy], fk, seed)?.remove(0))
    }

    /// Optimizes each requested strategy. The seven-intensity search is
    /// warm-started from both baselines, which are computed once and shared.
    pub fn run_all(
        &self,
        model: &SystemModel,
        strategies: &[Strategy],
        fk: &FiniteKeyConfig,
        seed: u64,
    ) -> Result<Vec<OptimizationResult>> {
        if strategies.is_empty() {
            return Err(Error::invalid("strategies", "at least one strategy is required"));
        }
        model.validate()?;
        fk.validate()?;
        let wants = |s: Strategy| strategies.contains(&s) || strategies.contains(&Strategy::SevenIntensity);
        let started = Instant::now();
        let four = wants(Strategy::FourIntensity)
            .then(|| self.four(model, fk, seed))
            .transpose()?;
        let four_time = started.elapsed();
        let padded = fiber_padding(model);
        let fiber = wants(Strategy::FourIntensityPlusFiber)
            .then(|| self.four(&padded, fk, seed))
            .transpose()?;
        let fiber_time = started.elapsed() - four_time;
        // The seven-intensity time includes the baselines it starts from.
        let seven = if strategies.contains(&Strategy::SevenIntensity) {
            let mut warm = Vec::new();
            if let Some(b) = &four {
                warm.push(b.params);
            }
            if let Some(b) = &fiber {
                warm.push(fiber_equivalent(model, &b.params));
            }
            Some((self.seven(model, fk, seed, &warm)?, started.elapsed()))
        } else {
            None
        };

        strategies
            .iter()
            .map(|s| {
                let (best, m, time) = match s {
                    Strategy::SevenIntensity => {
                        let (b, t) = seven.as_ref().expect("seven requested");
                        (b, model, *t)
                    }
                    Strategy::FourIntensity => (four.as_ref().expect("four computed"), model, four_time),
                    Strategy::FourIntensityPlusFiber => {
                        (fiber.as_ref().expect("fiber computed"), &padded, fiber_time)
                    }
                };
                let mut r = Evaluator::new(m, fk)?.evaluate(&best.params)?;
                r.iterations = best.sweeps;
                r.wall_time = time;
                Ok(r)
            })
            .collect()
    }

    fn four(&self, model: &SystemModel, fk: &FiniteKeyConfig, seed: u64) -> Result<Best> {
        let mut starts = vec![symmetric_start(FRAC_PI_4)];
        starts.extend((0..self.restarts).map(|k| random_start(seed, k as u64 + 1, true)));
        let x0 = starts.iter().map(|q| Space::Four.coords(q)).collect();
        self.best_of(model, fk, Space::Four, x0)
    }

    fn seven(
        &self,
        model: &SystemModel,
        fk: &FiniteKeyConfig,
        seed: u64,
        warm: &[ParameterVector],
    ) -> Result<Best> {
        let (eta_a, eta_b) = model.arm_efficiencies();
        let balanced = (eta_b / eta_a).atan().clamp(THETA_MIN, THETA_MAX);
        let mut starts = vec![symmetric_start(FRAC_PI_4), symmetric_start(balanced), dim_signal_start(balanced)];
        for p in warm {
            // Warm starts may sit outside the angle box; pull them in.
            let mut q = super::to_polar(p)?;
            q.theta_s = q.theta_s.clamp(THETA_MIN, THETA_MAX);
            q.theta_mn = q.theta_mn.clamp(THETA_MIN, THETA_MAX);
            starts.push(q);
        }
        starts.extend((0..self.restarts).map(|k| random_start(seed, k as u64 + 1, false)));
        let x0 = starts.iter().map(|q| Space::Seven.coords(q)).collect();
        self.best_of(model, fk, Space::Seven, x0)
    }

    fn best_of(
        &self,
        model: &SystemModel,
        fk: &FiniteKeyConfig,
        space: Space,
        starts: Vec<Vec<f64>>,
    ) -> Result<Best> {
        let ev = Evaluator::new(model, fk)?;
        let search = self.search;
        let runs = self.execution.map(starts, |x0| {
            search.maximize(x0, |x, i| space.bounds(x, i), |x| ev.objective(&space.params(x)))
        });
        let mut best = runs
            .into_iter()
            .reduce(|a, b| if b.value > a.value { b } else { a })
            .expect("at least one start");
        if !best.value.is_finite() {
            best.x = space.coords(&symmetric_start(FRAC_PI_4));
        }
        Ok(Best {
            params: space.params(&best.x),
            sweeps: best.sweeps,
        })
    }
}

/// Source settings that reproduce, on the unpadded channel, the arriving
/// intensities of a fiber-padded run.
fn fiber_equivalent(model: &SystemModel, p: &ParameterVector) -> ParameterVector {
    let (eta_a, eta_b) = model.arm_efficiencies();
    let (ka, kb) = (eta_b.min(eta_a) / eta_a, eta_a.min(eta_b) / eta_b);
    let mut out = *p;
    for (side, k) in [(&mut out.alice, ka), (&mut out.bob, kb)] {
        side.s *= k;
        side.mu *= k;
        side.nu *= k;
    }
    out
}

/// Optimizes one strategy with the default options.
pub fn coordinate_descent(
    model: &SystemModel,
    strategy: Strategy,
    fk: &FiniteKeyConfig,
    seed: u64,
) -> Result<OptimizationResult> {
    Optimizer::default().run(model, strategy, fk, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub length_a: f64,
    pub length_b: f64,
    pub strategy: Strategy,
    pub result: OptimizationResult,
}

/// Optimizes every strategy at every `(L_A, L_B)`; rows come back in input
/// order regardless of how the points were scheduled.
pub fn scan(
    model: &SystemModel,
    lengths: &[(f64, f64)],
    strategies: &[Strategy],
    fk: &FiniteKeyConfig,
    seed: u64,
    optimizer: &Optimizer,
) -> Result<Vec<ScanPoint>> {
    let runs = optimizer.execution.map(lengths.to_vec(), |(la, lb)| {
        let m = model.with_lengths(la, lb);
        optimizer.run_all(&m, strategies, fk, seed).map(|rs| {
            rs.into_iter()
                .zip(strategies)
                .map(|(result, &strategy)| ScanPoint {
                    length_a: la,
                    length_b: lb,
                    strategy,
                    result,
                })
                .collect::<Vec<_>>()
        })
    });
    let mut out = Vec::with_capacity(lengths.len() * strategies.len());
    for r in runs {
        out.extend(r?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_names_roundtrip() {
        for s in Strategy::ALL {
            assert_eq!(s.as_str().parse::<Strategy>().unwrap(), s);
        }
        assert_eq!("4-int+fiber".parse::<Strategy>().unwrap(), Strategy::FourIntensityPlusFiber);
        assert_eq!("7-int".parse::<Strategy>().unwrap(), Strategy::SevenIntensity);
        assert!("five".parse::<Strategy>().is_err());
    }

    #[test]
    fn padding_examples() {
        let m = fiber_padding(&SystemModel::experimental(10.0, 62.0));
        assert_eq!((m.length_a, m.length_b), (62.0, 62.0));
        let m = fiber_padding(&SystemModel::experimental(0.0, 100.0));
        assert_eq!(m.length_a, 100.0);
        let m = fiber_padding(&SystemModel::experimental(30.0, 30.0));
        assert_eq!((m.length_a, m.length_b), (30.0, 30.0));
        let m = fiber_padding(&SystemModel::experimental(70.0, 20.0));
        assert_eq!((m.length_a, m.length_b), (70.0, 70.0));
    }

    #[test]
    fn coordinate_counts() {
        assert_eq!(Space::Seven.coords(&symmetric_start(0.3)).len(), 11);
        assert_eq!(Space::Four.coords(&symmetric_start(FRAC_PI_4)).len(), 6);
    }

    #[test]
    fn probability_bounds_follow_simplex() {
        let x = Space::Seven.coords(&symmetric_start(0.3));
        let (lo, hi) = Space::Seven.bounds(&x, 6);
        assert_eq!(lo, P_MIN);
        assert!((hi - (1.0 - P_MIN - 0.7)).abs() < 1e-12);
        let (_, hi) = Space::Seven.bounds(&x, 3);
        assert!(hi < x[2]);
    }

    #[test]
    fn fiber_equivalent_matches_arrival() {
        let m = SystemModel::experimental(10.0, 62.0);
        let p = Space::Four.params(&Space::Four.coords(&symmetric_start(FRAC_PI_4)));
        let q = fiber_equivalent(&m, &p);
        let (ea, eb) = m.arm_efficiencies();
        assert!((q.alice.s * ea - p.alice.s * eb).abs() < 1e-15);
        assert_eq!(q.bob.s, p.bob.s);
        assert!(q.ratio_lock_gap() < 1e-12);
    }

    #[test]
    fn empty_strategy_list_rejected() {
        let m = SystemModel::experimental(10.0, 60.0);
        let r = Optimizer::default().run_all(&m, &[], &FiniteKeyConfig::asymptotic(), 1);
        assert!(r.is_err());
    }
}
