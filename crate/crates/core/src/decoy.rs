//! Decoy-state bounds on the single-photon-pair yield and phase error.
//!
//! Each party draws one of four intensities per pulse: the Z-basis signal `s`
//! and the X-basis decoys `μ > ν > ω = 0`. Only the nine X-basis pairs enter
//! the bounds; the signal pair is carried along for the key-rate step.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Intensity {
    Signal,
    Mu,
    Nu,
    Vacuum,
}

/// Intensity pair `(Alice, Bob)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairLabel {
    Ss,
    MuMu,
    NuNu,
    MuNu,
    NuMu,
    MuO,
    OMu,
    NuO,
    ONu,
    OO,
}

impl PairLabel {
    pub const ALL: [PairLabel; 10] = [
        PairLabel::Ss,
        PairLabel::MuMu,
        PairLabel::NuNu,
        PairLabel::MuNu,
        PairLabel::NuMu,
        PairLabel::MuO,
        PairLabel::OMu,
        PairLabel::NuO,
        PairLabel::ONu,
        PairLabel::OO,
    ];

    pub fn intensities(self) -> (Intensity, Intensity) {
        use Intensity::*;
        match self {
            PairLabel::Ss => (Signal, Signal),
            PairLabel::MuMu => (Mu, Mu),
            PairLabel::NuNu => (Nu, Nu),
            PairLabel::MuNu => (Mu, Nu),
            PairLabel::NuMu => (Nu, Mu),
            PairLabel::MuO => (Mu, Vacuum),
            PairLabel::OMu => (Vacuum, Mu),
            PairLabel::NuO => (Nu, Vacuum),
            PairLabel::ONu => (Vacuum, Nu),
            PairLabel::OO => (Vacuum, Vacuum),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PairLabel::Ss => "ss",
            PairLabel::MuMu => "mumu",
            PairLabel::NuNu => "nunu",
            PairLabel::MuNu => "munu",
            PairLabel::NuMu => "numu",
            PairLabel::MuO => "muo",
            PairLabel::OMu => "omu",
            PairLabel::NuO => "nuo",
            PairLabel::ONu => "onu",
            PairLabel::OO => "oo",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for PairLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PairLabel {
    type Err = Error;

    /// Accepts the ASCII names (`munu`, `oo`) as well as Greek letters, with
    /// `o`, `w`, `ω` and `omega` all meaning vacuum.
    fn from_str(s: &str) -> Result<Self> {
        let mut rest = s.trim().to_lowercase();
        let mut parts = Vec::with_capacity(2);
        while !rest.is_empty() && parts.len() < 2 {
            let (tok, len) = [
                ("omega", Intensity::Vacuum),
                ("mu", Intensity::Mu),
                ("nu", Intensity::Nu),
                ("μ", Intensity::Mu),
                ("ν", Intensity::Nu),
                ("ω", Intensity::Vacuum),
                ("o", Intensity::Vacuum),
                ("w", Intensity::Vacuum),
                ("s", Intensity::Signal),
            ]
            .iter()
            .find(|(p, _)| rest.starts_with(p))
            .map(|(p, i)| (*i, p.len()))
            .ok_or_else(|| Error::CountTable(format!("unknown pair label `{s}`")))?;
            parts.push(tok);
            rest.drain(..len);
        }
        if parts.len() != 2 || !rest.is_empty() {
            return Err(Error::CountTable(format!("unknown pair label `{s}`")));
        }
        PairLabel::ALL
            .into_iter()
            .find(|l| l.intensities() == (parts[0], parts[1]))
            .ok_or_else(|| Error::CountTable(format!("pair `{s}` is not part of the protocol")))
    }
}

/// Counts of one intensity pair. Stored as `f64` so expected (non-integral)
/// counts from the model share the type with measured ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub total: f64,
    pub errors: f64,
    pub trials: f64,
}

impl PairRecord {
    pub fn validate(&self, label: PairLabel) -> Result<()> {
        let ok = self.errors >= 0.0 && self.errors <= self.total && self.total <= self.trials;
        if !ok || !self.trials.is_finite() {
            return Err(Error::CountTable(format!(
                "pair {label}: need 0 <= errors <= total <= trials, got {} / {} / {}",
                self.errors, self.total, self.trials
            )));
        }
        Ok(())
    }

    pub fn gain(&self) -> f64 {
        if self.trials > 0.0 {
            self.total / self.trials
        } else {
            0.0
        }
    }

    pub fn error_gain(&self) -> f64 {
        if self.trials > 0.0 {
            self.errors / self.trials
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedStatistics {
    records: [PairRecord; 10],
}

impl ObservedStatistics {
    pub fn new(records: [(PairLabel, PairRecord); 10]) -> Result<Self> {
        let mut out = [None; 10];
        for (label, rec) in records {
            rec.validate(label)?;
            out[label.index()] = Some(rec);
        }
        let mut done = [PairRecord {
            total: 0.0,
            errors: 0.0,
            trials: 0.0,
        }; 10];
        for label in PairLabel::ALL {
            done[label.index()] =
                out[label.index()].ok_or_else(|| Error::MissingPair(label.to_string()))?;
        }
        Ok(ObservedStatistics { records: done })
    }

    pub fn get(&self, label: PairLabel) -> &PairRecord {
        &self.records[label.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (PairLabel, &PairRecord)> {
        PairLabel::ALL.into_iter().map(move |l| (l, self.get(l)))
    }
}

/// Send probabilities of one party; the vacuum takes the remainder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideProbabilities {
    pub signal: f64,
    pub mu: f64,
    pub nu: f64,
}

impl SideProbabilities {
    pub fn vacuum(&self) -> f64 {
        1.0 - self.signal - self.mu - self.nu
    }

    pub fn of(&self, i: Intensity) -> f64 {
        match i {
            Intensity::Signal => self.signal,
            Intensity::Mu => self.mu,
            Intensity::Nu => self.nu,
            Intensity::Vacuum => self.vacuum(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_s", self.signal), ("p_mu", self.mu), ("p_nu", self.nu)] {
            check_range(name, p, 0.0, 1.0)?;
        }
        if self.vacuum() < -1e-12 {
            return Err(Error::invalid("probabilities", "signal + decoy probabilities exceed 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoySettings {
    pub mu_a: f64,
    pub nu_a: f64,
    pub mu_b: f64,
    pub nu_b: f64,
    pub omega: f64,
}

impl DecoySettings {
    pub fn new(mu_a: f64, nu_a: f64, mu_b: f64, nu_b: f64) -> Self {
        DecoySettings {
            mu_a,
            nu_a,
            mu_b,
            nu_b,
            omega: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.omega != 0.0 {
            return Err(Error::invalid("omega", "the third decoy is the vacuum"));
        }
        if !(self.mu_a > self.nu_a && self.nu_a > 0.0) {
            return Err(Error::invalid("decoys", "Alice needs mu > nu > 0"));
        }
        if !(self.mu_b > self.nu_b && self.nu_b > 0.0) {
            return Err(Error::invalid("decoys", "Bob needs mu > nu > 0"));
        }
        Ok(())
    }

    fn intensity(&self, i: Intensity, alice: bool) -> f64 {
        match (i, alice) {
            (Intensity::Mu, true) => self.mu_a,
            (Intensity::Mu, false) => self.mu_b,
            (Intensity::Nu, true) => self.nu_a,
            (Intensity::Nu, false) => self.nu_b,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyMode {
    Asymptotic,
    #[default]
    Finite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConcentrationBound {
    /// Multiplicative Chernoff inversion; tight for rare events.
    #[default]
    Chernoff,
    /// Additive Hoeffding deviation `sqrt(ln(2/ε)/(2n))`.
    Hoeffding,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteKeyConfig {
    pub total_failure_prob: f64,
    pub mode: KeyMode,
    pub bound: ConcentrationBound,
}

impl FiniteKeyConfig {
    /// Ten pairs, gain and error gain each.
    pub const CONSTRAINTS: f64 = 20.0;

    pub fn asymptotic() -> Self {
        FiniteKeyConfig {
            total_failure_prob: 1e-10,
            mode: KeyMode::Asymptotic,
            bound: ConcentrationBound::default(),
        }
    }

    pub fn finite(total_failure_prob: f64) -> Self {
        FiniteKeyConfig {
            total_failure_prob,
            mode: KeyMode::Finite,
            bound: ConcentrationBound::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.total_failure_prob > 0.0 && self.total_failure_prob < 1.0) {
            return Err(Error::invalid("total_failure_prob", "must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Failure probability granted to each widened observable.
    pub fn per_constraint(&self) -> f64 {
        self.total_failure_prob / Self::CONSTRAINTS
    }

    /// Confidence interval on the rate `count / trials` under this mode.
    pub fn interval(&self, count: f64, trials: f64) -> Result<(f64, f64)> {
        match self.mode {
            KeyMode::Asymptotic => {
                check_counts(count, trials)?;
                let p = count / trials;
                Ok((p, p))
            }
            KeyMode::Finite => fluctuation_interval(count, trials, self.per_constraint(), self.bound),
        }
    }
}

fn check_counts(count: f64, trials: f64) -> Result<()> {
    if !(trials > 0.0 && trials.is_finite()) {
        return Err(Error::invalid("trials", "must be positive"));
    }
    if !(count >= 0.0 && count <= trials) {
        return Err(Error::invalid("count", format!("{count} outside [0, {trials}]")));
    }
    Ok(())
}

/// Two-sided interval on a Bernoulli rate from `count` successes in `trials`,
/// failing with probability at most `failure_prob`. Clamped to `[0, 1]`.
pub fn fluctuation_interval(
    count: f64,
    trials: f64,
    failure_prob: f64,
    bound: ConcentrationBound,
) -> Result<(f64, f64)> {
    check_counts(count, trials)?;
    if !(failure_prob > 0.0 && failure_prob < 1.0) {
        return Err(Error::invalid("failure_prob", "must lie in (0, 1)"));
    }
    let beta = (2.0 / failure_prob).ln();
    let (lo, hi) = match bound {
        ConcentrationBound::Hoeffding => {
            let p = count / trials;
            let d = (beta / (2.0 * trials)).sqrt();
            (p - d, p + d)
        }
        ConcentrationBound::Chernoff => {
            let x = count;
            let lo = x - (beta / 2.0 + (2.0 * beta * x + beta * beta / 4.0).sqrt());
            let hi = x + beta + (2.0 * beta * x + beta * beta).sqrt();
            (lo / trials, hi / trials)
        }
    };
    Ok((lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0)))
}

/// Why the bounds were replaced by their conservative limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundDiagnostic {
    /// The yield combination is not positive; no single-photon pairs certified.
    NoSinglePhotonYield,
    /// The error combination exceeds the certified single-photon counts.
    PhaseErrorAboveOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoyBounds {
    pub y11_lower: f64,
    pub e11_upper: f64,
    pub diagnostic: Option<BoundDiagnostic>,
}

/// Unclamped bound values. `e11` is `None` when `y11 <= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawBounds {
    pub y11: f64,
    /// Upper bound on `e11 * Y11`.
    pub error_yield: f64,
    pub e11: Option<f64>,
}

impl RawBounds {
    pub fn clamp(self) -> DecoyBounds {
        match self.e11 {
            None => DecoyBounds {
                y11_lower: 0.0,
                e11_upper: 1.0,
                diagnostic: Some(BoundDiagnostic::NoSinglePhotonYield),
            },
            Some(e) if e > 1.0 => DecoyBounds {
                y11_lower: self.y11.min(1.0),
                e11_upper: 1.0,
                diagnostic: Some(BoundDiagnostic::PhaseErrorAboveOne),
            },
            Some(e) => DecoyBounds {
                y11_lower: self.y11.min(1.0),
                e11_upper: e.max(0.0),
                diagnostic: None,
            },
        }
    }
}

pub fn estimate_bounds(
    settings: &DecoySettings,
    stats: &ObservedStatistics,
    fk: &FiniteKeyConfig,
) -> Result<DecoyBounds> {
    Ok(estimate_raw(settings, stats, fk)?.clamp())
}

/// Vacuum-subtracted two-decoy bounds.
///
/// With `S_x = Q̃_xx − Q̃_xω − Q̃_ωx + Q̃_ωω` and `Q̃ = e^{a+b} Q`, the
/// combination `S_ν − S_μ/(t_A t_B t_min)` (`t = μ/ν`) drops every term with
/// three photons and keeps `Y11` with weight `ν_A ν_B (1 − 1/t_min)`.
pub fn estimate_raw(
    settings: &DecoySettings,
    stats: &ObservedStatistics,
    fk: &FiniteKeyConfig,
) -> Result<RawBounds> {
    settings.validate()?;
    fk.validate()?;
    let mut gain = [(0.0, 0.0); 10];
    let mut err = [(0.0, 0.0); 10];
    for (label, rec) in stats.iter().skip(1) {
        rec.validate(label)?;
        let (ia, ib) = label.intensities();
        let w = (settings.intensity(ia, true) + settings.intensity(ib, false)).exp();
        let (lo, hi) = fk.interval(rec.total, rec.trials)?;
        gain[label.index()] = (lo * w, hi * w);
        let (lo, hi) = fk.interval(rec.errors, rec.trials)?;
        err[label.index()] = (lo * w, hi * w);
    }
    use PairLabel::*;
    let lo = |t: &[(f64, f64); 10], l: PairLabel| t[l.index()].0;
    let hi = |t: &[(f64, f64); 10], l: PairLabel| t[l.index()].1;

    let s_nu = lo(&gain, NuNu) - hi(&gain, NuO) - hi(&gain, ONu) + lo(&gain, OO);
    let s_mu = hi(&gain, MuMu) - lo(&gain, MuO) - lo(&gain, OMu) + hi(&gain, OO);
    let t_a = settings.mu_a / settings.nu_a;
    let t_b = settings.mu_b / settings.nu_b;
    let t_min = t_a.min(t_b);
    let nn = settings.nu_a * settings.nu_b;
    let y11 = (s_nu - s_mu / (t_a * t_b * t_min)) / (nn * (1.0 - 1.0 / t_min));

    let e_nu = hi(&err, NuNu) - lo(&err, NuO) - lo(&err, ONu) + hi(&err, OO);
    let error_yield = e_nu / nn;
    let e11 = (y11 > 0.0).then(|| error_yield / y11);
    Ok(RawBounds {
        y11,
        error_yield,
        e11,
    })
}

/// One measured row of a count table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub label: PairLabel,
    pub total: u64,
    pub errors: u64,
}

/// Attaches trial numbers `N p_α p_β` to measured counts.
pub fn ingest_count_table(
    records: &[CountRecord],
    pulse_count: f64,
    alice: &SideProbabilities,
    bob: &SideProbabilities,
) -> Result<ObservedStatistics> {
    if records.is_empty() {
        return Err(Error::CountTable("table is empty".into()));
    }
    if !(pulse_count >= 1.0) {
        return Err(Error::invalid("pulse_count", "must be at least 1"));
    }
    alice.validate()?;
    bob.validate()?;
    let mut seen: [Option<CountRecord>; 10] = [None; 10];
    for r in records {
        if seen[r.label.index()].replace(*r).is_some() {
            return Err(Error::CountTable(format!("pair {} listed twice", r.label)));
        }
        if r.errors > r.total {
            return Err(Error::CountTable(format!(
                "pair {}: {} errors exceed {} total counts",
                r.label, r.errors, r.total
            )));
        }
    }
    let mut out = Vec::with_capacity(10);
    for label in PairLabel::ALL {
        let r = seen[label.index()].ok_or_else(|| Error::MissingPair(label.to_string()))?;
        let (ia, ib) = label.intensities();
        let trials = (pulse_count * alice.of(ia) * bob.of(ib)).round();
        out.push((
            label,
            PairRecord {
                total: r.total as f64,
                errors: r.errors as f64,
                trials,
            },
        ));
    }
    let records: [(PairLabel, PairRecord); 10] = out.try_into().expect("ten pairs");
    ObservedStatistics::new(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn labels_parse_in_all_spellings() {
        for l in PairLabel::ALL {
            assert_eq!(l.as_str().parse::<PairLabel>().unwrap(), l);
        }
        assert_eq!("μν".parse::<PairLabel>().unwrap(), PairLabel::MuNu);
        assert_eq!("ωμ".parse::<PairLabel>().unwrap(), PairLabel::OMu);
        assert_eq!("omegaomega".parse::<PairLabel>().unwrap(), PairLabel::OO);
        assert_eq!(" NuO ".parse::<PairLabel>().unwrap(), PairLabel::NuO);
        assert!("sm".parse::<PairLabel>().is_err());
        assert!("mu".parse::<PairLabel>().is_err());
        assert!("xyz".parse::<PairLabel>().is_err());
        assert!("mumumu".parse::<PairLabel>().is_err());
    }

    #[test]
    fn asymptotic_passthrough() {
        let fk = FiniteKeyConfig::asymptotic();
        assert_eq!(fk.interval(0.0, 1e6).unwrap(), (0.0, 0.0));
        assert_eq!(fk.interval(5.0, 10.0).unwrap(), (0.5, 0.5));
        assert!(fk.interval(1.0, 0.0).is_err());
    }

    #[test]
    fn hoeffding_width() {
        let (lo, hi) = fluctuation_interval(1e6, 1e12, 1e-10, ConcentrationBound::Hoeffding).unwrap();
        let expected = 2.0 * ((2.0f64 / 1e-10).ln() / 2e12).sqrt();
        // The low side clamps at zero, so compare the upper half-width.
        assert_relative_eq!(2.0 * (hi - 1e-6), expected, max_relative = 1e-12);
        assert_relative_eq!(expected, 6.9e-6, max_relative = 0.01);
        assert_eq!(lo, 0.0);
    }

    #[test]
    fn chernoff_contains_point_estimate() {
        for &(x, n) in &[(0.0, 1e6), (18.0, 1e9), (105015.0, 9.3e8), (5e11, 1e12)] {
            let (lo, hi) = fluctuation_interval(x, n, 5e-12, ConcentrationBound::Chernoff).unwrap();
            assert!(lo <= x / n && x / n <= hi);
            assert!(hi <= 1.0);
        }
    }

    #[test]
    fn vacuum_probability_is_remainder() {
        let p = SideProbabilities {
            signal: 0.599,
            mu: 0.030,
            nu: 0.254,
        };
        assert_relative_eq!(p.vacuum(), 0.117, max_relative = 1e-12);
        assert!(SideProbabilities { signal: 0.9, mu: 0.1, nu: 0.1 }.validate().is_err());
    }

    fn zero_record(label: PairLabel, total: u64) -> CountRecord {
        CountRecord {
            label,
            total,
            errors: 0,
        }
    }

    #[test]
    fn ingest_rejects_bad_tables() {
        let p = SideProbabilities {
            signal: 0.5,
            mu: 0.1,
            nu: 0.2,
        };
        assert!(ingest_count_table(&[], 1e12, &p, &p).is_err());
        let partial: Vec<_> = PairLabel::ALL[..9].iter().map(|&l| zero_record(l, 5)).collect();
        assert!(matches!(
            ingest_count_table(&partial, 1e12, &p, &p),
            Err(Error::MissingPair(_))
        ));
        let mut bad: Vec<_> = PairLabel::ALL.iter().map(|&l| zero_record(l, 5)).collect();
        bad[3].errors = 6;
        assert!(ingest_count_table(&bad, 1e12, &p, &p).is_err());
    }

    #[test]
    fn error_free_data_gives_zero_phase_error() {
        // Single-photon-like statistics: Q(a,b) = e^{-a-b} a b Y with no vacuum noise.
        let s = DecoySettings::new(0.4, 0.1, 0.4, 0.1);
        let n = 1e12;
        let p = SideProbabilities {
            signal: 0.5,
            mu: 0.1,
            nu: 0.2,
        };
        let rec: Vec<_> = PairLabel::ALL
            .iter()
            .map(|&l| {
                let (ia, ib) = l.intensities();
                let (a, b) = (s.intensity(ia, true), s.intensity(ib, false));
                let trials = n * p.of(ia) * p.of(ib);
                let q = (-(a + b)).exp() * a * b * 1e-2;
                (
                    l,
                    PairRecord {
                        total: q * trials,
                        errors: 0.0,
                        trials,
                    },
                )
            })
            .collect();
        let stats = ObservedStatistics::new(rec.try_into().unwrap()).unwrap();
        let b = estimate_bounds(&s, &stats, &FiniteKeyConfig::asymptotic()).unwrap();
        assert_eq!(b.e11_upper, 0.0);
        assert_eq!(b.diagnostic, None);
        assert_relative_eq!(b.y11_lower, 1e-2, max_relative = 1e-9);
    }

    #[test]
    fn infeasible_data_degrades_with_flag() {
        let s = DecoySettings::new(0.4, 0.1, 0.4, 0.1);
        let rec: Vec<_> = PairLabel::ALL
            .iter()
            .map(|&l| {
                (
                    l,
                    PairRecord {
                        total: 10.0,
                        errors: 5.0,
                        trials: 1e9,
                    },
                )
            })
            .collect();
        let stats = ObservedStatistics::new(rec.try_into().unwrap()).unwrap();
        let b = estimate_bounds(&s, &stats, &FiniteKeyConfig::finite(1e-10)).unwrap();
        assert_eq!(b.y11_lower, 0.0);
        assert_eq!(b.e11_upper, 1.0);
        assert_eq!(b.diagnostic, Some(BoundDiagnostic::NoSinglePhotonYield));
    }

    #[test]
    fn settings_ordering() {
        assert!(DecoySettings::new(0.1, 0.2, 0.3, 0.1).validate().is_err());
        assert!(DecoySettings::new(0.3, 0.0, 0.3, 0.1).validate().is_err());
        DecoySettings::new(0.056, 0.011, 0.465, 0.089).validate().unwrap();
    }
}
