//! Count tables and parameter files.

use std::path::Path;

use mdiqkd::decoy::{CountRecord, PairLabel};
use mdiqkd::optimizer::{ParameterVector, SourceSettings};
use serde::Deserialize;

use crate::error::{data, Result};

#[derive(Debug, Deserialize)]
struct Row {
    label: String,
    total_count: u64,
    error_count: u64,
}

/// Reads `label,total_count,error_count` rows; `#` starts a comment line.
pub fn read_count_table(path: &Path) -> Result<Vec<CountRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| data(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for row in reader.deserialize::<Row>() {
        let row = row.map_err(|e| data(format!("{}: {e}", path.display())))?;
        let label: PairLabel = row.label.parse().map_err(data)?;
        out.push(CountRecord {
            label,
            total: row.total_count,
            errors: row.error_count,
        });
    }
    Ok(out)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsFile {
    s_a: f64,
    mu_a: f64,
    nu_a: f64,
    p_sa: f64,
    p_mua: f64,
    p_nua: f64,
    s_b: f64,
    mu_b: f64,
    nu_b: f64,
    p_sb: f64,
    p_mub: f64,
    p_nub: f64,
}

/// Twelve source parameters from a flat TOML file.
pub fn read_params(path: &Path) -> Result<ParameterVector> {
    let text = std::fs::read_to_string(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
    let p: ParamsFile = toml::from_str(&text).map_err(|e| data(format!("{}: {e}", path.display())))?;
    let params = ParameterVector {
        alice: SourceSettings {
            s: p.s_a,
            mu: p.mu_a,
            nu: p.nu_a,
            p_s: p.p_sa,
            p_mu: p.p_mua,
            p_nu: p.p_nua,
        },
        bob: SourceSettings {
            s: p.s_b,
            mu: p.mu_b,
            nu: p.nu_b,
            p_s: p.p_sb,
            p_mu: p.p_mub,
            p_nu: p.p_nub,
        },
    };
    // Measured settings need not keep the signal above the decoy.
    params.check_basic().map_err(data)?;
    Ok(params)
}
