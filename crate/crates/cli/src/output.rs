use std::io::Write;

use mdiqkd::optimizer::{OptimizationResult, Strategy};

pub const COLUMNS: [&str; 24] = [
    "L_A_km",
    "L_B_km",
    "strategy",
    "s_a",
    "mu_a",
    "nu_a",
    "p_sa",
    "p_mua",
    "p_nua",
    "s_b",
    "mu_b",
    "nu_b",
    "p_sb",
    "p_mub",
    "p_nub",
    "y11_lower",
    "e11_upper",
    "q_ss",
    "e_ss",
    "rate_per_pulse",
    "rate_per_second",
    "iterations",
    "wall_time_ms",
    "config_hash",
];

/// Zero is written as `0`, everything else in fixed-width scientific form.
pub fn number(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x:.6e}")
    }
}

pub struct Row<'a> {
    pub length_a: f64,
    pub length_b: f64,
    pub strategy: Strategy,
    pub result: &'a OptimizationResult,
}

impl Row<'_> {
    fn fields(&self, timing: bool, hash: &str) -> Vec<String> {
        let r = self.result;
        let (a, b) = (&r.params.alice, &r.params.bob);
        let mut out = vec![self.length_a.to_string(), self.length_b.to_string(), self.strategy.to_string()];
        out.extend(
            [
                a.s,
                a.mu,
                a.nu,
                a.p_s,
                a.p_mu,
                a.p_nu,
                b.s,
                b.mu,
                b.nu,
                b.p_s,
                b.p_mu,
                b.p_nu,
                r.bounds.y11_lower,
                r.bounds.e11_upper,
                r.observables.gain,
                r.observables.qber,
                r.rate_per_pulse,
                r.rate_per_second,
            ]
            .map(number),
        );
        out.push(r.iterations.to_string());
        let ms = if timing { r.wall_time.as_secs_f64() * 1e3 } else { 0.0 };
        out.push(number(ms));
        out.push(hash.to_string());
        out
    }
}

/// Rows sorted by lengths, then by strategy.
pub fn write_results<W: Write>(out: W, rows: &mut [Row<'_>], timing: bool, hash: &str) -> csv::Result<()> {
    rows.sort_by(|x, y| {
        x.length_a
            .total_cmp(&y.length_a)
            .then(x.length_b.total_cmp(&y.length_b))
            .then(x.strategy.cmp(&y.strategy))
    });
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for row in rows.iter() {
        w.write_record(row.fields(timing, hash))?;
    }
    w.flush()?;
    Ok(())
}

/// Human-readable parameter block for one point.
pub fn parameter_block(length_a: f64, length_b: f64, rows: &[Row<'_>]) -> String {
    let mut s = format!("L_A = {length_a} km, L_B = {length_b} km\n{:<16}", "");
    for r in rows {
        s += &format!("{:>28}", r.strategy.as_str());
    }
    s.push('\n');
    let rows_of: [(&str, fn(&OptimizationResult) -> f64); 19] = [
        ("s_A", |r| r.params.alice.s),
        ("s_B", |r| r.params.bob.s),
        ("mu_A", |r| r.params.alice.mu),
        ("mu_B", |r| r.params.bob.mu),
        ("nu_A", |r| r.params.alice.nu),
        ("nu_B", |r| r.params.bob.nu),
        ("p_sA", |r| r.params.alice.p_s),
        ("p_sB", |r| r.params.bob.p_s),
        ("p_muA", |r| r.params.alice.p_mu),
        ("p_muB", |r| r.params.bob.p_mu),
        ("p_nuA", |r| r.params.alice.p_nu),
        ("p_nuB", |r| r.params.bob.p_nu),
        ("y11", |r| r.bounds.y11_lower),
        ("e11", |r| r.bounds.e11_upper),
        ("Q_ss", |r| r.observables.gain),
        ("E_ss", |r| r.observables.qber),
        ("R (bit/pulse)", |r| r.rate_per_pulse),
        ("R (bit/s)", |r| r.rate_per_second),
        ("sweeps", |r| r.iterations as f64),
    ];
    for (name, get) in rows_of {
        s += &format!("{name:<16}");
        for r in rows {
            s += &format!("{:>28}", format!("{:.4e}", get(r.result)));
        }
        s.push('\n');
    }
    s
}
