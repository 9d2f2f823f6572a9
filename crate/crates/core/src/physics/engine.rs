//! Closed-form ψ⁻ statistics of two phase-randomized coherent pulses.
//!
//! The four relay outputs C_e, C_l, D_e, D_l carry intensities of the form
//! `u + v cos φ`, where `φ` is the uniformly random relative phase. A click
//! pattern probability is a sum of kernels `exp(-αA - βB) I0(γ√(AB))` in the
//! arriving intensities `A`, `B`, which keeps the single-photon coefficient
//! available by direct expansion.

use super::{IntensityPairObservables, SinglePhotonTruth, SystemModel, ZErrorModel};
#[cfg(test)]
use super::bessel_i0;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Kernel {
    alpha: f64,
    beta: f64,
    gamma: f64,
}

impl Kernel {
    fn exponent(&self, a: f64, b: f64) -> f64 {
        self.alpha * a + self.beta * b
    }

    #[cfg(test)]
    fn eval(&self, a: f64, b: f64) -> f64 {
        (-self.exponent(a, b)).exp() * bessel_i0(self.gamma * (a * b).sqrt())
    }

    /// Coefficient of `ab` in `exp(a + b) * eval(eta_a a, eta_b b)`.
    fn single_pair(&self, eta_a: f64, eta_b: f64) -> f64 {
        (1.0 - self.alpha * eta_a) * (1.0 - self.beta * eta_b)
            + self.gamma * self.gamma * eta_a * eta_b / 4.0
    }

    fn join(self, other: Kernel) -> Kernel {
        Kernel {
            alpha: self.alpha + other.alpha,
            beta: self.beta + other.beta,
            gamma: self.gamma + other.gamma,
        }
    }
}

const SILENT: Kernel = Kernel {
    alpha: 0.0,
    beta: 0.0,
    gamma: 0.0,
};

/// `I0(x) - 1`.
fn i0_tail(x: f64) -> f64 {
    let q = x * x / 4.0;
    q + i0_tail2(x)
}

/// `I0(x) - 1 - x²/4`.
fn i0_tail2(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = q;
    let mut sum = 0.0;
    let mut k = 2.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term <= sum * 1e-17 || k > 2000.0 {
            return sum;
        }
        k += 1.0;
    }
}

/// One ψ⁻ click pattern: detectors `c` and `d` fire, the other two stay dark.
#[derive(Debug, Clone, Copy)]
struct Pattern {
    silent: Kernel,
    c: Kernel,
    d: Kernel,
}

impl Pattern {
    /// Probability of the pattern, grouped by powers of the dark-count rate.
    ///
    /// The photon-only group is a second difference of kernels that are all
    /// close to one; it is expanded so the constant and linear parts cancel
    /// analytically and only products of small quantities remain.
    fn eval(&self, y0: f64, a: f64, b: f64) -> f64 {
        let g = 1.0 - y0;
        let w = (a * b).sqrt();
        let (gs, gc, gd) = (self.silent.gamma, self.c.gamma, self.d.gamma);
        let (g_c, g_d, g_a) = (gs + gc, gs + gd, gs + gc + gd);
        let es = (-self.silent.exponent(a, b)).exp();
        let fc = (-self.c.exponent(a, b)).exp_m1();
        let fd = (-self.d.exponent(a, b)).exp_m1();
        let t = |gamma: f64| i0_tail(gamma * w);
        let (ts, tc, td, ta) = (t(gs), t(g_c), t(g_d), t(g_a));
        let (jc, jd, ja) = (1.0 + tc, 1.0 + td, 1.0 + ta);

        let ks = es * (1.0 + ts);
        // K_s - K_{s+c} and K_s - K_{s+d}.
        let drop_c = es * ((ts - tc) - fc * jc);
        let drop_d = es * ((ts - td) - fd * jd);
        let t2 = |gamma: f64| i0_tail2(gamma * w);
        let jj = w * w * gc * gd / 2.0 + (t2(gs) - t2(g_c)) - (t2(g_d) - t2(g_a));
        let second = es * (jj - fc * (tc - ta) - fd * (td - ta) + fc * fd * ja);
        g * g * (y0 * y0 * ks + y0 * g * (drop_c + drop_d) + g * g * second)
    }

    /// Same grouping for the single-pair coefficient. The photon-photon
    /// group is a second difference of a bilinear form and is taken
    /// symbolically.
    fn single_pair(&self, y0: f64, eta_a: f64, eta_b: f64) -> f64 {
        let g = 1.0 - y0;
        let cs = self.silent.single_pair(eta_a, eta_b);
        let cc = self.silent.join(self.c).single_pair(eta_a, eta_b);
        let cd = self.silent.join(self.d).single_pair(eta_a, eta_b);
        let (c, d) = (self.c, self.d);
        let second = eta_a * eta_b * (c.alpha * d.beta + d.alpha * c.beta + c.gamma * d.gamma / 2.0);
        g * g * (y0 * y0 * cs + y0 * g * ((cs - cc) + (cs - cd)) + g * g * second)
    }
}

/// Normalized time-bin amplitudes (early, late) of one party's pulse.
type Encoding = [f64; 2];

/// The two ψ⁻ patterns for one pair of encodings.
fn psi_minus(x: Encoding, y: Encoding) -> [Pattern; 2] {
    // Modes C_e, C_l, D_e, D_l with C = (a - b)/√2, D = (a + b)/√2.
    let mode = |out: usize, bin: usize| {
        let sign = if out == 0 { -1.0 } else { 1.0 };
        Kernel {
            alpha: x[bin] * x[bin] / 2.0,
            beta: y[bin] * y[bin] / 2.0,
            gamma: sign * x[bin] * y[bin],
        }
    };
    let modes = [mode(0, 0), mode(0, 1), mode(1, 0), mode(1, 1)];
    let pattern = |c: usize, d: usize| {
        let silent = (0..4)
            .filter(|&m| m != c && m != d)
            .fold(SILENT, |acc, m| acc.join(modes[m]));
        Pattern {
            silent,
            c: modes[c],
            d: modes[d],
        }
    };
    [pattern(0, 3), pattern(1, 2)]
}

#[derive(Debug, Clone)]
struct Basis {
    /// Patterns from encodings whose ψ⁻ outcome is the expected one.
    correct: Vec<Pattern>,
    wrong: Vec<Pattern>,
}

impl Basis {
    // ψ⁻ anti-correlates the bits in both bases, so equal bits are errors.
    fn new(bits: [Encoding; 2]) -> Self {
        let mut correct = Vec::new();
        let mut wrong = Vec::new();
        for (i, x) in bits.iter().enumerate() {
            for (j, y) in bits.iter().enumerate() {
                let target = if i == j { &mut wrong } else { &mut correct };
                target.extend(psi_minus(*x, *y));
            }
        }
        Basis { correct, wrong }
    }

    /// (correct, raw error) gains averaged over the four bit combinations.
    fn gains(&self, y0: f64, a: f64, b: f64) -> (f64, f64) {
        let sum = |ps: &[Pattern]| ps.iter().map(|p| p.eval(y0, a, b)).sum::<f64>() / 4.0;
        (sum(&self.correct).max(0.0), sum(&self.wrong).max(0.0))
    }

    fn single_pair(&self, y0: f64, eta_a: f64, eta_b: f64) -> (f64, f64) {
        let sum = |ps: &[Pattern]| {
            ps.iter()
                .map(|p| p.single_pair(y0, eta_a, eta_b))
                .sum::<f64>()
                / 4.0
        };
        (sum(&self.correct).max(0.0), sum(&self.wrong).max(0.0))
    }
}

/// Observable evaluator for one system model.
///
/// Construction precomputes the kernel tables; evaluation is then a few dozen
/// exponentials per intensity pair.
#[derive(Debug, Clone)]
pub struct ObservableModel {
    y0: f64,
    eta_a: f64,
    eta_b: f64,
    e_z: f64,
    e_x: f64,
    z_error: ZErrorModel,
    z: Basis,
    x: Basis,
}

impl ObservableModel {
    pub fn new(model: &SystemModel) -> Self {
        let (eta_a, eta_b) = model.arm_efficiencies();
        let l = model.z_leakage();
        let (hi, lo) = ((1.0 - l).sqrt(), l.sqrt());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        ObservableModel {
            y0: model.dark_count_rate,
            eta_a,
            eta_b,
            e_z: model.misalignment_z,
            e_x: model.misalignment_x,
            z_error: model.z_error,
            z: Basis::new([[hi, lo], [lo, hi]]),
            x: Basis::new([[h, h], [h, -h]]),
        }
    }

    pub fn arm_efficiencies(&self) -> (f64, f64) {
        (self.eta_a, self.eta_b)
    }

    /// Z-basis (gain, error gain) for sent mean photon numbers.
    pub fn z_gains(&self, s_a: f64, s_b: f64) -> (f64, f64) {
        let (correct, wrong) = self.z.gains(self.y0, self.eta_a * s_a, self.eta_b * s_b);
        (correct + wrong, self.z_error_gain(correct, wrong))
    }

    /// X-basis (gain, error gain) for sent mean photon numbers.
    pub fn x_gains(&self, a: f64, b: f64) -> (f64, f64) {
        let (correct, wrong) = self.x.gains(self.y0, self.eta_a * a, self.eta_b * b);
        let q = correct + wrong;
        (q, self.e_x * q + (1.0 - 2.0 * self.e_x) * wrong)
    }

    pub fn z(&self, s_a: f64, s_b: f64) -> IntensityPairObservables {
        let (q, eq) = self.z_gains(s_a, s_b);
        IntensityPairObservables::from_gains(q, eq)
    }

    pub fn x(&self, a: f64, b: f64) -> IntensityPairObservables {
        let (q, eq) = self.x_gains(a, b);
        IntensityPairObservables::from_gains(q, eq)
    }

    pub fn single_photon(&self) -> SinglePhotonTruth {
        let (correct, wrong) = self.x.single_pair(self.y0, self.eta_a, self.eta_b);
        let y = correct + wrong;
        let ey = self.e_x * y + (1.0 - 2.0 * self.e_x) * wrong;
        SinglePhotonTruth {
            yield_11: y.clamp(0.0, 1.0),
            phase_error: if y > 0.0 { (ey / y).clamp(0.0, 1.0) } else { 0.0 },
        }
    }

    fn z_error_gain(&self, correct: f64, wrong: f64) -> f64 {
        match self.z_error {
            ZErrorModel::Leakage => wrong,
            ZErrorModel::OutcomeFlip => self.e_z * correct + (1.0 - self.e_z) * wrong,
        }
    }
}
