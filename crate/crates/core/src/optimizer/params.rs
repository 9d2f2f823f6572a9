use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::decoy::{DecoySettings, Intensity, SideProbabilities};
use crate::error::{Error, Result};

/// Intensities and send probabilities of one party.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSettings {
    pub s: f64,
    pub mu: f64,
    pub nu: f64,
    pub p_s: f64,
    pub p_mu: f64,
    pub p_nu: f64,
}

impl SourceSettings {
    pub fn probabilities(&self) -> SideProbabilities {
        SideProbabilities {
            signal: self.p_s,
            mu: self.p_mu,
            nu: self.p_nu,
        }
    }

    pub fn intensity(&self, i: Intensity) -> f64 {
        match i {
            Intensity::Signal => self.s,
            Intensity::Mu => self.mu,
            Intensity::Nu => self.nu,
            Intensity::Vacuum => 0.0,
        }
    }

    fn check(&self, who: &'static str) -> Result<()> {
        let finite = [self.s, self.mu, self.nu, self.p_s, self.p_mu, self.p_nu]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid(who, "non-finite parameter"));
        }
        if !(self.s > 0.0 && self.mu > self.nu && self.nu > 0.0) {
            return Err(Error::invalid(who, "need s > 0 and mu > nu > 0"));
        }
        self.probabilities().validate()
    }
}

/// The twelve source parameters of both parties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    pub alice: SourceSettings,
    pub bob: SourceSettings,
}

impl ParameterVector {
    /// Full invariant, including `s > mu` on both sides.
    pub fn validate(&self) -> Result<()> {
        self.check_basic()?;
        if !self.is_ordered() {
            return Err(Error::invalid("params", "need s > mu on both sides"));
        }
        Ok(())
    }

    /// Everything but the signal-above-decoy ordering, which measured
    /// parameter sets do not always respect.
    pub fn check_basic(&self) -> Result<()> {
        self.alice.check("alice")?;
        self.bob.check("bob")
    }

    pub fn is_ordered(&self) -> bool {
        self.alice.s > self.alice.mu && self.bob.s > self.bob.mu
    }

    pub fn decoys(&self) -> DecoySettings {
        DecoySettings::new(self.alice.mu, self.alice.nu, self.bob.mu, self.bob.nu)
    }

    /// `|ν_A/μ_A − ν_B/μ_B|`.
    pub fn ratio_lock_gap(&self) -> f64 {
        (self.alice.nu / self.alice.mu - self.bob.nu / self.bob.mu).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarVector {
    pub r_s: f64,
    pub theta_s: f64,
    pub r_mu: f64,
    pub r_nu: f64,
    /// Shared by both decoys, which is what locks `μ_A/ν_A = μ_B/ν_B`.
    pub theta_mn: f64,
    pub alice: SideProbabilities,
    pub bob: SideProbabilities,
}

pub const RATIO_LOCK_TOL: f64 = 1e-9;

/// Angle convention: `s_A = r sin θ`, `s_B = r cos θ`, so `θ = arctan(s_A/s_B)`.
pub fn to_polar(p: &ParameterVector) -> Result<PolarVector> {
    p.check_basic()?;
    let (ra, rb) = (p.alice.nu / p.alice.mu, p.bob.nu / p.bob.mu);
    if (ra - rb).abs() > RATIO_LOCK_TOL {
        return Err(Error::RatioLock { alice: ra, bob: rb });
    }
    Ok(PolarVector {
        r_s: p.alice.s.hypot(p.bob.s),
        theta_s: p.alice.s.atan2(p.bob.s),
        r_mu: p.alice.mu.hypot(p.bob.mu),
        r_nu: p.alice.nu.hypot(p.bob.nu),
        theta_mn: p.alice.mu.atan2(p.bob.mu),
        alice: p.alice.probabilities(),
        bob: p.bob.probabilities(),
    })
}

pub fn from_polar(q: &PolarVector) -> Result<ParameterVector> {
    for (name, r) in [("r_s", q.r_s), ("r_mu", q.r_mu), ("r_nu", q.r_nu)] {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::invalid(name, "radius must be positive"));
        }
    }
    for (name, t) in [("theta_s", q.theta_s), ("theta_mn", q.theta_mn)] {
        if !(t > 0.0 && t < FRAC_PI_2) {
            return Err(Error::invalid(name, "angle must lie in (0, pi/2)"));
        }
    }
    Ok(polar_unchecked(q))
}

pub(crate) fn polar_unchecked(q: &PolarVector) -> ParameterVector {
    let (ss, cs) = q.theta_s.sin_cos();
    let (sd, cd) = q.theta_mn.sin_cos();
    let side = |s: f64, d: f64, p: &SideProbabilities| SourceSettings {
        s: q.r_s * s,
        mu: q.r_mu * d,
        nu: q.r_nu * d,
        p_s: p.signal,
        p_mu: p.mu,
        p_nu: p.nu,
    };
    ParameterVector {
        alice: side(ss, sd, &q.alice),
        bob: side(cs, cd, &q.bob),
    }
}
