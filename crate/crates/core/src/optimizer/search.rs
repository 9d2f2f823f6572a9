//! Coordinate-wise maximization over a box whose bounds may depend on the
//! other coordinates.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateDescent {
    /// Points of the coarse scan preceding each golden-section refinement.
    pub grid_points: usize,
    /// Relative bracket width at which a line search stops.
    pub line_tol: f64,
    /// Relative objective improvement below which sweeps stop.
    pub sweep_tol: f64,
    pub max_sweeps: usize,
}

impl Default for CoordinateDescent {
    fn default() -> Self {
        CoordinateDescent {
            grid_points: 16,
            line_tol: 1e-4,
            sweep_tol: 1e-4,
            max_sweeps: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub sweeps: usize,
    pub evaluations: usize,
}

impl CoordinateDescent {
    /// Maximizes `f` starting from `x`. `bounds(x, i)` gives the admissible
    /// interval of coordinate `i` with the others held at `x`.
    pub fn maximize<F, B>(&self, mut x: Vec<f64>, bounds: B, f: F) -> SearchOutcome
    where
        F: Fn(&[f64]) -> f64,
        B: Fn(&[f64], usize) -> (f64, f64),
    {
        let mut evaluations = 1;
        let mut value = f(&x);
        let mut sweeps = 0;
        while sweeps < self.max_sweeps {
            sweeps += 1;
            let before = value;
            for i in 0..x.len() {
                let (lo, hi) = bounds(&x, i);
                if !(hi > lo) {
                    continue;
                }
                let (xi, vi, n) = self.line_search(&mut x, i, lo, hi, &f);
                evaluations += n;
                if vi > value {
                    value = vi;
                    x[i] = xi;
                }
            }
            if before.is_finite() && value - before <= self.sweep_tol * before.abs() {
                break;
            }
            if value == before {
                break;
            }
        }
        SearchOutcome {
            x,
            value,
            sweeps,
            evaluations,
        }
    }

    /// Returns the best point found on coordinate `i`, its value and the
    /// number of evaluations. Leaves `x[i]` unchanged.
    fn line_search<F>(&self, x: &mut [f64], i: usize, lo: f64, hi: f64, f: &F) -> (f64, f64, usize)
    where
        F: Fn(&[f64]) -> f64,
    {
        let orig = x[i];
        let mut evals = 0;
        let mut at = |x: &mut [f64], t: f64| {
            evals += 1;
            x[i] = t;
            f(x)
        };
        let n = self.grid_points.max(2);
        let step = (hi - lo) / (n - 1) as f64;
        let grid: Vec<f64> = (0..n).map(|k| lo + step * k as f64).collect();
        let vals: Vec<f64> = grid.iter().map(|&t| at(x, t)).collect();
        let k = vals
            .iter()
            .enumerate()
            .fold(0, |best, (j, v)| if *v > vals[best] { j } else { best });
        let (mut best_t, mut best_v) = (grid[k], vals[k]);

        if best_v.is_finite() {
            let (mut a, mut b) = (grid[k.saturating_sub(1)], grid[(k + 1).min(n - 1)]);
            let mut c = b - INV_PHI * (b - a);
            let mut d = a + INV_PHI * (b - a);
            let mut fc = at(x, c);
            let mut fd = at(x, d);
            while (b - a) > self.line_tol * c.abs().max(f64::MIN_POSITIVE) {
                if fc >= fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - INV_PHI * (b - a);
                    fc = at(x, c);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + INV_PHI * (b - a);
                    fd = at(x, d);
                }
            }
            for (t, v) in [(c, fc), (d, fd)] {
                if v > best_v {
                    best_t = t;
                    best_v = v;
                }
            }
        }
        x[i] = orig;
        (best_t, best_v, evals)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn finds_separable_maximum() {
        let cd = CoordinateDescent::default();
        let out = cd.maximize(
            vec![0.1, 0.9],
            |_, _| (0.0, 1.0),
            |x| -(x[0] - 0.3).powi(2) - 2.0 * (x[1] - 0.7).powi(2),
        );
        assert_relative_eq!(out.x[0], 0.3, max_relative = 1e-3);
        assert_relative_eq!(out.x[1], 0.7, max_relative = 1e-3);
        assert!(out.sweeps <= 3);
    }

    #[test]
    fn respects_dependent_bounds() {
        // Maximize x + y on the simplex x + y <= 1 with x, y >= 0.
        let cd = CoordinateDescent::default();
        let f = |x: &[f64]| if x[0] + x[1] <= 1.0 { x[0] * x[1] } else { f64::NEG_INFINITY };
        let out = cd.maximize(vec![0.2, 0.2], |x, i| (0.0, 1.0 - x[1 - i]), f);
        assert!(out.x[0] + out.x[1] <= 1.0 + 1e-12);
        assert!(out.value >= 0.16 - 1e-6);
    }

    #[test]
    fn leaves_infeasible_start() {
        let cd = CoordinateDescent::default();
        let out = cd.maximize(
            vec![0.0],
            |_, _| (-1.0, 1.0),
            |x| if x[0] > 0.5 { -(x[0] - 0.8).powi(2) } else { f64::NEG_INFINITY },
        );
        assert_relative_eq!(out.x[0], 0.8, max_relative = 1e-3);
    }

    #[test]
    fn never_worsens() {
        let cd = CoordinateDescent::default();
        let f = |x: &[f64]| (10.0 * x[0]).sin() * (7.0 * x[1]).cos();
        let x0 = vec![0.4, 0.2];
        let v0 = f(&x0);
        let out = cd.maximize(x0, |_, _| (0.0, 1.0), f);
        assert!(out.value >= v0);
        assert_eq!(out.value, f(&out.x));
    }
}
