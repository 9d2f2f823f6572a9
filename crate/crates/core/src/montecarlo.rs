//! Photon-level Monte Carlo of the relay, independent of the closed forms.
//!
//! Coherent pulses: photon numbers are drawn from Poisson at the source,
//! thinned photon by photon through the channel and detector, and the
//! arriving photons are routed to the four outputs with the probabilities set
//! by the interference at a uniformly random relative phase. Threshold
//! detectors add Bernoulli dark counts.
//!
//! Single photons: the two-photon output amplitudes of the beam splitter are
//! evaluated directly.
//!
//! Trials are split into fixed-size chunks, each with its own ChaCha stream,
//! so the answer does not depend on how chunks are scheduled.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::{SystemModel, ZErrorModel};
use crate::Execution;

const CHUNK: u64 = 1 << 16;

/// ψ⁻ click patterns over `[C_e, C_l, D_e, D_l]`.
const PSI_MINUS: [u8; 2] = [0b1001, 0b0110];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub trials: u64,
    pub gain: f64,
    pub error_gain: f64,
}

impl Estimate {
    fn from_counts(trials: u64, hits: u64, errors: u64) -> Self {
        Estimate {
            trials,
            gain: hits as f64 / trials as f64,
            error_gain: errors as f64 / trials as f64,
        }
    }

    /// Binomial standard error of the gain.
    pub fn gain_sigma(&self) -> f64 {
        (self.gain * (1.0 - self.gain) / self.trials as f64).sqrt()
    }

    pub fn error_sigma(&self) -> f64 {
        (self.error_gain * (1.0 - self.error_gain) / self.trials as f64).sqrt()
    }

    pub fn qber(&self) -> f64 {
        if self.gain > 0.0 {
            self.error_gain / self.gain
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarlo {
    pub trials: u64,
    pub seed: u64,
    pub execution: Execution,
}

/// Per-trial constants of one simulated configuration.
struct Setup {
    y0: f64,
    eta_a: f64,
    eta_b: f64,
    flip: f64,
    encodings: [[f64; 2]; 2],
}

impl Setup {
    fn new(model: &SystemModel, basis: Basis) -> Self {
        let (eta_a, eta_b) = model.arm_efficiencies();
        let (flip, encodings) = match basis {
            Basis::X => (
                model.misalignment_x,
                [[FRAC_1_SQRT_2, FRAC_1_SQRT_2], [FRAC_1_SQRT_2, -FRAC_1_SQRT_2]],
            ),
            Basis::Z => {
                let (flip, l) = match model.z_error {
                    ZErrorModel::Leakage => (0.0, model.misalignment_z / 2.0),
                    ZErrorModel::OutcomeFlip => (model.misalignment_z, 0.0),
                };
                let (hi, lo) = ((1.0 - l).sqrt(), l.sqrt());
                (flip, [[hi, lo], [lo, hi]])
            }
        };
        Setup {
            y0: model.dark_count_rate,
            eta_a,
            eta_b,
            flip,
            encodings,
        }
    }

    fn dark_clicks(&self, rng: &mut ChaCha8Rng) -> u8 {
        (0..4).fold(0, |acc, m| acc | (u8::from(rng.random::<f64>() < self.y0) << m))
    }

    /// Announced ψ⁻? and whether the sifted bit is wrong.
    fn outcome(&self, rng: &mut ChaCha8Rng, clicks: u8, same_bits: bool) -> (bool, bool) {
        if !PSI_MINUS.contains(&clicks) {
            return (false, false);
        }
        let flipped = rng.random::<f64>() < self.flip;
        (true, same_bits != flipped)
    }
}

fn thin(rng: &mut ChaCha8Rng, n: u64, eta: f64) -> u64 {
    (0..n).filter(|_| rng.random::<f64>() < eta).count() as u64
}

fn draw(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as u64
}

impl MonteCarlo {
    pub fn new(trials: u64, seed: u64) -> Self {
        MonteCarlo {
            trials,
            seed,
            execution: Execution::default(),
        }
    }

    fn check(&self, model: &SystemModel) -> Result<()> {
        model.validate()?;
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be positive"));
        }
        Ok(())
    }

    fn run_chunks<F>(&self, f: F) -> (u64, u64)
    where
        F: Fn(&mut ChaCha8Rng, u64) -> (u64, u64) + Sync + Send,
    {
        let chunks: Vec<u64> = (0..self.trials.div_ceil(CHUNK)).collect();
        let seed = self.seed;
        let total = self.trials;
        let parts = self.execution.map(chunks, |k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            let n = CHUNK.min(total - k * CHUNK);
            f(&mut rng, n)
        });
        parts
            .into_iter()
            .fold((0, 0), |(a, b), (c, d)| (a + c, b + d))
    }

    /// Gain and error gain of a coherent pulse pair with mean photon numbers
    /// `a`, `b` in `basis`.
    pub fn pulse_pair(&self, model: &SystemModel, basis: Basis, a: f64, b: f64) -> Result<Estimate> {
        self.check(model)?;
        if !(a >= 0.0 && b >= 0.0) {
            return Err(Error::invalid("intensity", "must be non-negative"));
        }
        let setup = Setup::new(model, basis);
        let (hits, errors) = self.run_chunks(|rng, n| {
            let (mut hits, mut errors) = (0, 0);
            for _ in 0..n {
                let (x, y) = (rng.random_range(0..2usize), rng.random_range(0..2usize));
                let (na, nb) = (draw(rng, a), draw(rng, b));
                let arrived = thin(rng, na, setup.eta_a) + thin(rng, nb, setup.eta_b);
                let mut clicks = setup.dark_clicks(rng);
                if arrived > 0 {
                    let weights = mode_weights(&setup, a, b, x, y, rng.random::<f64>() * TAU);
                    for _ in 0..arrived {
                        clicks |= 1 << pick(rng, &weights);
                    }
                }
                let (ok, wrong) = setup.outcome(rng, clicks, x == y);
                hits += u64::from(ok);
                errors += u64::from(wrong);
            }
            (hits, errors)
        });
        Ok(Estimate::from_counts(self.trials, hits, errors))
    }

    /// Yield and error yield of exactly one photon from each party (X basis).
    pub fn single_photons(&self, model: &SystemModel) -> Result<Estimate> {
        self.check(model)?;
        let setup = Setup::new(model, Basis::X);
        let (hits, errors) = self.run_chunks(|rng, n| {
            let (mut hits, mut errors) = (0, 0);
            for _ in 0..n {
                let (x, y) = (rng.random_range(0..2usize), rng.random_range(0..2usize));
                let (u, v) = single_photon_modes(&setup, x, y);
                let alice = rng.random::<f64>() < setup.eta_a;
                let bob = rng.random::<f64>() < setup.eta_b;
                let mut clicks = setup.dark_clicks(rng);
                match (alice, bob) {
                    (true, true) => {
                        let (i, j) = pick_pair(rng, &u, &v);
                        clicks |= (1 << i) | (1 << j);
                    }
                    (true, false) => clicks |= 1 << pick(rng, &u.map(|c| c * c)),
                    (false, true) => clicks |= 1 << pick(rng, &v.map(|c| c * c)),
                    (false, false) => {}
                }
                let (ok, wrong) = setup.outcome(rng, clicks, x == y);
                hits += u64::from(ok);
                errors += u64::from(wrong);
            }
            (hits, errors)
        });
        Ok(Estimate::from_counts(self.trials, hits, errors))
    }
}

/// Output intensities (up to normalization) for relative phase `phi`.
fn mode_weights(s: &Setup, a: f64, b: f64, x: usize, y: usize, phi: f64) -> [f64; 4] {
    let (ra, rb) = ((s.eta_a * a).sqrt(), (s.eta_b * b).sqrt());
    let (sin, cos) = phi.sin_cos();
    let mut w = [0.0; 4];
    for t in 0..2 {
        let fa = ra * s.encodings[x][t];
        let (br, bi) = (rb * s.encodings[y][t] * cos, rb * s.encodings[y][t] * sin);
        // C = (a - b)/√2, D = (a + b)/√2.
        w[t] = ((fa - br).powi(2) + bi * bi) / 2.0;
        w[2 + t] = ((fa + br).powi(2) + bi * bi) / 2.0;
    }
    w
}

/// Single-photon amplitudes of Alice and Bob on `[C_e, C_l, D_e, D_l]`.
fn single_photon_modes(s: &Setup, x: usize, y: usize) -> ([f64; 4], [f64; 4]) {
    let (ue, ul) = (s.encodings[x][0], s.encodings[x][1]);
    let (ve, vl) = (s.encodings[y][0], s.encodings[y][1]);
    let h = FRAC_1_SQRT_2;
    ([ue * h, ul * h, ue * h, ul * h], [-ve * h, -vl * h, ve * h, vl * h])
}

/// Output modes of two photons entering in amplitudes `u` and `v`.
fn pick_pair(rng: &mut ChaCha8Rng, u: &[f64; 4], v: &[f64; 4]) -> (usize, usize) {
    let mut probs = [0.0; 10];
    let mut pairs = [(0, 0); 10];
    let mut k = 0;
    for i in 0..4 {
        for j in i..4 {
            probs[k] = if i == j {
                2.0 * (u[i] * v[i]).powi(2)
            } else {
                (u[i] * v[j] + u[j] * v[i]).powi(2)
            };
            pairs[k] = (i, j);
            k += 1;
        }
    }
    pairs[pick(rng, &probs)]
}

fn pick<const N: usize>(rng: &mut ChaCha8Rng, weights: &[f64; N]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut r = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if r < *w {
            return i;
        }
        r -= w;
    }
    // Rounding at the top end; fall back to the last non-empty weight.
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(N - 1)
}
