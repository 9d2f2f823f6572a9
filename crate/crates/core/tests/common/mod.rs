#![allow(dead_code)]

use mdiqkd::decoy::{CountRecord, PairLabel};
use mdiqkd::optimizer::{ParameterVector, SourceSettings};
use std::path::PathBuf;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn data_lines(name: &str) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(fixture(name)).expect("fixture present");
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|c| c.trim().to_string()).collect())
        .collect()
}

/// One column of the published optimum table.
#[derive(Debug, Clone)]
pub struct Column {
    pub l_a: f64,
    pub l_b: f64,
    pub strategy: String,
    pub params: ParameterVector,
    pub y11: f64,
    pub e11: f64,
    pub q_ss: f64,
    pub e_ss: f64,
    pub rate: f64,
}

impl Column {
    pub fn counts_file(&self) -> String {
        format!("counts/la{}_lb{}_{}.csv", self.l_a, self.l_b, self.strategy)
    }
}

pub fn reference_columns() -> Vec<Column> {
    data_lines("reference_columns.csv")
        .into_iter()
        .map(|c| {
            let v: Vec<f64> = c.iter().map(|x| x.parse().unwrap_or(f64::NAN)).collect();
            let side = |k: usize| SourceSettings {
                s: v[k],
                mu: v[k + 1],
                nu: v[k + 2],
                p_s: v[k + 3],
                p_mu: v[k + 4],
                p_nu: v[k + 5],
            };
            Column {
                l_a: v[0],
                l_b: v[1],
                strategy: c[2].clone(),
                params: ParameterVector { alice: side(3), bob: side(9) },
                y11: v[15],
                e11: v[16],
                q_ss: v[17],
                e_ss: v[18],
                rate: v[19],
            }
        })
        .collect()
}

pub fn column(l_a: f64, l_b: f64, strategy: &str) -> Column {
    reference_columns()
        .into_iter()
        .find(|c| c.l_a == l_a && c.l_b == l_b && c.strategy == strategy)
        .expect("column listed")
}

pub fn counts(name: &str) -> Vec<CountRecord> {
    data_lines(name)
        .into_iter()
        .map(|c| CountRecord {
            label: c[0].parse::<PairLabel>().expect("label"),
            total: c[1].parse().expect("total"),
            errors: c[2].parse().expect("errors"),
        })
        .collect()
}

/// Intensities with the decoy ratios locked, reference-point magnitudes.
pub fn locked(mu_a: f64, mu_b: f64) -> ParameterVector {
    let ratio = 0.2;
    ParameterVector {
        alice: SourceSettings { s: 0.169, mu: mu_a, nu: mu_a * ratio, p_s: 0.599, p_mu: 0.030, p_nu: 0.254 },
        bob: SourceSettings { s: 0.614, mu: mu_b, nu: mu_b * ratio, p_s: 0.600, p_mu: 0.031, p_nu: 0.248 },
    }
}
