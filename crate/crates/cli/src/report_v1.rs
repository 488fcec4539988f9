//! Versioned report payload (`report_v1`) and its emitters.
//!
//! The JSON is the canonical schema with a stable key order; CSV flattens
//! the integers and verdicts one row per orbit; the text form is a
//! human-readable summary carrying the four-term parity ledger. Plot
//! payloads (κ(t), Floquet multipliers, eigenvalue trajectories along the
//! s-sweep) are emitted as sibling CSV files.

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use symindex_core::orbit::NullClass;
use symindex_core::report::IndexReport;
use symindex_core::stability::{CriterionOutcome, StabilityClass};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportV1 {
    pub format: String,
    pub scenario: String,
    pub integers: IntegersV1,
    pub reals: RealsV1,
    pub verdicts: VerdictsV1,
    pub ledger: Option<LedgerV1>,
    pub provenance: ProvenanceV1,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegersV1 {
    pub n: usize,
    pub ispec_free: i64,
    pub ispec_fixed: i64,
    pub igeo: i64,
    pub iclm_gamma2: Option<i64>,
    pub dim_ker_a_minus_i: usize,
    pub leg_0: i64,
    pub leg_s0: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RealsV1 {
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub tprime_h: f64,
    pub gamma1_slope: Option<f64>,
    pub symplecticity_residual: f64,
    pub integration_error: f64,
    pub split_residual: Option<f64>,
    pub s0: f64,
    pub s0_gap: f64,
    pub s0_analytic_bound: f64,
    pub gram_condition: f64,
    pub orientation: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiplierV1 {
    pub re: f64,
    pub im: f64,
    pub algebraic: usize,
    pub geometric: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerdictsV1 {
    pub null_class: String,
    pub split_available: bool,
    pub stability: Option<String>,
    pub multipliers: Vec<MultiplierV1>,
    pub criterion: String,
    pub gamma2_parity: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LedgerV1 {
    pub term_twist: i64,
    pub term_difference: i64,
    pub term_gamma1: i64,
    pub term_gamma2: i64,
    pub total: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProvenanceV1 {
    pub steps: usize,
    pub galerkin_level: usize,
    pub quad_panels: usize,
    pub zero_rel: f64,
    pub split_tol: f64,
    pub stability_tol: f64,
    pub version: String,
}

pub fn null_class_str(c: NullClass) -> &'static str {
    match c {
        NullClass::LPositive => "L-positive",
        NullClass::LNegative => "L-negative",
        NullClass::NotNonNull => "not-non-null",
    }
}

pub fn stability_str(c: StabilityClass) -> &'static str {
    match c {
        StabilityClass::LinearlyStable => "linearly-stable",
        StabilityClass::SpectrallyStableNotLinearly => "spectrally-stable-not-linearly",
        StabilityClass::Unstable => "unstable",
    }
}

pub fn outcome_str(c: CriterionOutcome) -> &'static str {
    match c {
        CriterionOutcome::CertifiedUnstable => "certified-unstable",
        CriterionOutcome::Inconclusive => "inconclusive",
    }
}

impl ReportV1 {
    pub fn from_report(r: &IndexReport) -> ReportV1 {
        ReportV1 {
            format: r.version.to_string(),
            scenario: r.scenario.clone(),
            integers: IntegersV1 {
                n: r.n,
                ispec_free: r.ispec_free,
                ispec_fixed: r.ispec_fixed,
                igeo: r.igeo,
                iclm_gamma2: r.split.as_ref().map(|s| s.iclm_gamma2),
                dim_ker_a_minus_i: r.dim_ker_a_minus_i,
                leg_0: r.leg_0,
                leg_s0: r.leg_s0,
            },
            reals: RealsV1 {
                kappa_min: r.kappa_min,
                kappa_max: r.kappa_max,
                tprime_h: r.tprime_h,
                gamma1_slope: r.split.as_ref().map(|s| s.gamma1_slope),
                symplecticity_residual: r.symplecticity_residual,
                integration_error: r.integration_error,
                split_residual: r.split.as_ref().map(|s| s.split_residual),
                s0: r.s0,
                s0_gap: r.s0_gap,
                s0_analytic_bound: r.s0_analytic_bound,
                gram_condition: r.gram_condition,
                orientation: r.orientation,
            },
            verdicts: VerdictsV1 {
                null_class: null_class_str(r.null_class).into(),
                split_available: r.split.is_some(),
                stability: r.split.as_ref().map(|s| stability_str(s.stability.class).into()),
                multipliers: r
                    .split
                    .iter()
                    .flat_map(|s| s.stability.multipliers.iter())
                    .map(|m| MultiplierV1 {
                        re: m.re,
                        im: m.im,
                        algebraic: m.algebraic,
                        geometric: m.geometric,
                    })
                    .collect(),
                criterion: outcome_str(r.criterion).into(),
                gamma2_parity: r.split.as_ref().map(|s| outcome_str(s.gamma2_parity).into()),
            },
            ledger: r.split.as_ref().map(|s| LedgerV1 {
                term_twist: s.ledger.term_twist,
                term_difference: s.ledger.term_difference,
                term_gamma1: s.ledger.term_gamma1,
                term_gamma2: s.ledger.term_gamma2,
                total: s.ledger.total,
            }),
            provenance: ProvenanceV1 {
                steps: r.steps,
                galerkin_level: r.galerkin_level,
                quad_panels: r.quad_panels,
                zero_rel: r.zero_rel,
                split_tol: r.split_tol,
                stability_tol: r.stability_tol,
                version: r.version.to_string(),
            },
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

const CSV_HEADER: &str = "scenario,n,ispec_free,ispec_fixed,igeo,iclm_gamma2,dim_ker_a_minus_i,\
leg_0,leg_s0,kappa_min,kappa_max,tprime_h,gamma1_slope,symplecticity_residual,split_residual,\
s0,null_class,stability,criterion,gamma2_parity";

fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn to_csv(reports: &[ReportV1]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        let opt_i = |v: Option<i64>| v.map(|x| x.to_string()).unwrap_or_default();
        let opt_f = |v: Option<f64>| v.map(num).unwrap_or_default();
        let opt_s = |v: &Option<String>| v.clone().unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.scenario,
            r.integers.n,
            r.integers.ispec_free,
            r.integers.ispec_fixed,
            r.integers.igeo,
            opt_i(r.integers.iclm_gamma2),
            r.integers.dim_ker_a_minus_i,
            r.integers.leg_0,
            r.integers.leg_s0,
            num(r.reals.kappa_min),
            num(r.reals.kappa_max),
            num(r.reals.tprime_h),
            opt_f(r.reals.gamma1_slope),
            num(r.reals.symplecticity_residual),
            opt_f(r.reals.split_residual),
            num(r.reals.s0),
            r.verdicts.null_class,
            opt_s(&r.verdicts.stability),
            r.verdicts.criterion,
            opt_s(&r.verdicts.gamma2_parity),
        );
    }
    out
}

pub fn to_text(r: &ReportV1) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scenario: {}  (n = {})", r.scenario, r.integers.n);
    let gamma2 = r
        .integers
        .iclm_gamma2
        .map(|v| v.to_string())
        .unwrap_or_else(|| "unavailable".into());
    let _ = writeln!(
        s,
        "indices:  ispec_free = {}  ispec_fixed = {}  igeo = {}  iclm_gamma2 = {}  dim ker(A-I) = {}",
        r.integers.ispec_free,
        r.integers.ispec_fixed,
        r.integers.igeo,
        gamma2,
        r.integers.dim_ker_a_minus_i
    );
    let _ = writeln!(
        s,
        "legs:     leg_0 = {}  leg_s0 = {}  (difference = {})",
        r.integers.leg_0,
        r.integers.leg_s0,
        r.integers.ispec_free - r.integers.ispec_fixed
    );
    let slope = r
        .reals
        .gamma1_slope
        .map(num)
        .unwrap_or_else(|| "unavailable".into());
    let _ = writeln!(
        s,
        "orbit:    kappa in [{}, {}]  T'(h) = {}  slope from monodromy = {}",
        num(r.reals.kappa_min),
        num(r.reals.kappa_max),
        num(r.reals.tprime_h),
        slope
    );
    let _ = writeln!(
        s,
        "numerics: sympl residual = {:.3e}  integration error = {:.3e}  split residual = {}  s0 = {}  gram cond = {:.3e}",
        r.reals.symplecticity_residual,
        r.reals.integration_error,
        r.reals
            .split_residual
            .map(|v| format!("{v:.3e}"))
            .unwrap_or_else(|| "unavailable".into()),
        r.reals.s0,
        r.reals.gram_condition
    );
    match &r.ledger {
        Some(l) => {
            let _ = writeln!(
                s,
                "parity ledger: n + ispec_free = {} = (n - dim ker(A-I)) {} + (difference) {} + (gamma1) {} + (gamma2) {}",
                l.total, l.term_twist, l.term_difference, l.term_gamma1, l.term_gamma2
            );
        }
        None => {
            let _ = writeln!(s, "parity ledger: unavailable (splitting failed)");
        }
    }
    let _ = writeln!(
        s,
        "verdicts: {}  |  reduced map {}  |  criterion: {}  |  gamma2 parity: {}",
        r.verdicts.null_class,
        r.verdicts.stability.clone().unwrap_or_else(|| "unavailable".into()),
        r.verdicts.criterion,
        r.verdicts.gamma2_parity.clone().unwrap_or_else(|| "unavailable".into())
    );
    for m in &r.verdicts.multipliers {
        let _ = writeln!(
            s,
            "  multiplier {:+.6} {:+.6}i  algebraic {}  geometric {}",
            m.re, m.im, m.algebraic, m.geometric
        );
    }
    s
}

/// Writes the plot-ready curves next to `out`: κ(t), the Floquet
/// multipliers, and the eigenvalue trajectories along the s-sweep.
pub fn write_curves(report: &IndexReport, out: &Path) -> Result<Vec<PathBuf>> {
    let stem = out.with_extension("");
    let stem = stem.to_string_lossy().to_string();
    let mut written = Vec::new();

    let kappa_path = PathBuf::from(format!("{stem}.kappa.csv"));
    let mut kappa = String::from("t,kappa\n");
    for (t, k) in &report.kappa_curve {
        let _ = writeln!(kappa, "{},{}", num(*t), num(*k));
    }
    std::fs::write(&kappa_path, kappa).with_context(|| format!("writing {kappa_path:?}"))?;
    written.push(kappa_path);

    let mult_path = PathBuf::from(format!("{stem}.multipliers.csv"));
    let mut mult = String::from("re,im,algebraic,geometric\n");
    if let Some(split) = &report.split {
        for m in &split.stability.multipliers {
            let _ =
                writeln!(mult, "{},{},{},{}", num(m.re), num(m.im), m.algebraic, m.geometric);
        }
    }
    std::fs::write(&mult_path, mult).with_context(|| format!("writing {mult_path:?}"))?;
    written.push(mult_path);

    let sweep_path = PathBuf::from(format!("{stem}.ssweep.csv"));
    let mut sweep = String::from("s,eigenvalue_index,eigenvalue\n");
    for (s, eigs) in &report.s_sweep {
        for (k, e) in eigs.iter().enumerate() {
            let _ = writeln!(sweep, "{},{},{}", num(*s), k, num(*e));
        }
    }
    std::fs::write(&sweep_path, sweep).with_context(|| format!("writing {sweep_path:?}"))?;
    written.push(sweep_path);

    Ok(written)
}
