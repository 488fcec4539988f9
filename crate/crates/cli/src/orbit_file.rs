//! Versioned orbit input files (`orbit_v1`).
//!
//! JSON document with fields `n`, `T`, `h`, `A` (row-major n×n), `grid`
//! (sample times in [0,1]), and per-grid-point `P`, `Q`, `R` (row-major
//! n×n), `Lq`, `xprime` (length n), plus an optional `tprime_h`. All
//! numbers are decimal with full round-trip precision.

use anyhow::{bail, Context, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::path::Path;
use symindex_core::orbit::OrbitData;

pub const ORBIT_FORMAT: &str = "orbit_v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitV1 {
    pub format: String,
    pub n: usize,
    #[serde(rename = "T")]
    pub t_period: f64,
    pub h: f64,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    pub grid: Vec<f64>,
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    pub r: Vec<Vec<f64>>,
    #[serde(rename = "Lq")]
    pub lq: Vec<Vec<f64>>,
    pub xprime: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tprime_h: Option<f64>,
}

impl OrbitV1 {
    pub fn from_orbit(orbit: &OrbitData) -> OrbitV1 {
        let n = orbit.n;
        let row_major = |m: &DMatrix<f64>| -> Vec<f64> {
            (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| m[(i, j)]).collect()
        };
        OrbitV1 {
            format: ORBIT_FORMAT.into(),
            n,
            t_period: orbit.period,
            h: orbit.energy,
            a: row_major(&orbit.frame_twist),
            grid: orbit.grid.clone(),
            p: orbit.p.iter().map(row_major).collect(),
            q: orbit.q.iter().map(row_major).collect(),
            r: orbit.r.iter().map(row_major).collect(),
            lq: orbit.l_q.iter().map(|v| v.as_slice().to_vec()).collect(),
            xprime: orbit.xprime.iter().map(|v| v.as_slice().to_vec()).collect(),
            tprime_h: orbit.tprime_h,
        }
    }

    pub fn into_orbit(self) -> Result<OrbitData> {
        if self.format != ORBIT_FORMAT {
            bail!("unsupported orbit format {:?}, expected {ORBIT_FORMAT:?}", self.format);
        }
        let n = self.n;
        let k = self.grid.len();
        let mats = |rows: &[Vec<f64>], name: &str| -> Result<Vec<DMatrix<f64>>> {
            if rows.len() != k {
                bail!("{name} has {} samples, grid has {k}", rows.len());
            }
            rows.iter()
                .map(|r| {
                    if r.len() != n * n {
                        bail!("{name} sample has {} entries, expected {}", r.len(), n * n);
                    }
                    Ok(DMatrix::from_row_slice(n, n, r))
                })
                .collect()
        };
        let vecs = |rows: &[Vec<f64>], name: &str| -> Result<Vec<DVector<f64>>> {
            if rows.len() != k {
                bail!("{name} has {} samples, grid has {k}", rows.len());
            }
            rows.iter()
                .map(|r| {
                    if r.len() != n {
                        bail!("{name} sample has {} entries, expected {n}", r.len());
                    }
                    Ok(DVector::from_column_slice(r))
                })
                .collect()
        };
        if self.a.len() != n * n {
            bail!("A has {} entries, expected {}", self.a.len(), n * n);
        }
        let orbit = OrbitData {
            n,
            period: self.t_period,
            energy: self.h,
            grid: self.grid,
            p: mats(&self.p, "P")?,
            q: mats(&self.q, "Q")?,
            r: mats(&self.r, "R")?,
            l_q: vecs(&self.lq, "Lq")?,
            xprime: vecs(&self.xprime, "xprime")?,
            frame_twist: DMatrix::from_row_slice(n, n, &self.a),
            tprime_h: self.tprime_h,
        };
        orbit.validate().map_err(|e| anyhow::anyhow!("invalid orbit data: {e}"))?;
        Ok(orbit)
    }
}

pub fn load(path: &Path) -> Result<OrbitData> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading orbit file {}", path.display()))?;
    let doc: OrbitV1 = serde_json::from_str(&text)
        .with_context(|| format!("parsing orbit file {}", path.display()))?;
    doc.into_orbit()
}

pub fn save(orbit: &OrbitData, path: &Path) -> Result<()> {
    let doc = OrbitV1::from_orbit(orbit);
    let text = serde_json::to_string_pretty(&doc)?;
    std::fs::write(path, text)
        .with_context(|| format!("writing orbit file {}", path.display()))?;
    Ok(())
}
