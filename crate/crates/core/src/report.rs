//! End-to-end pipeline: orbit data in, audited index report out.

use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use nalgebra::{ComplexField as _, RealField as _};

use crate::error::{Error, Result};
use crate::index_form::{
    build_basis, check_relation_geo_spec, choose_s0, difference_decomposition,
    IndexFormAssembler,
};
use crate::maslov::ClmOptions;
use crate::orbit::{
    estimate_tprime, euler_lagrange_residual, fundamental_solution, geometrical_index,
    kappa_classify, LagrangianCallbacks, NullClass, OrbitData, OrbitFamily,
};
use crate::spectral_flow::SfOptions;
use crate::stability::{
    clm_parity_instability, instability_criterion, parity_audit, splitting_reduce, AuditInputs,
    CriterionOutcome, ParityLedger, SplitOptions, StabilityClass, StabilityVerdict,
};

/// Schema/version tag of the report payload.
pub const REPORT_VERSION: &str = "report_v1";

/// Pipeline tunables; the provenance block of the report echoes them.
#[derive(Debug, Clone)]
pub struct PipelineOptions {
    /// Integration steps for the fundamental solution.
    pub steps: usize,
    /// Galerkin truncation level `N`.
    pub galerkin_level: usize,
    /// Relative zero band of all spectral decisions.
    pub zero_rel: f64,
    pub clm: ClmOptions,
    pub sf: SfOptions,
    pub split: SplitOptions,
    /// Unit-circle tolerance of the stability classification.
    pub stability_tol: f64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            steps: 2000,
            galerkin_level: 32,
            zero_rel: 1e-9,
            clm: ClmOptions::default(),
            sf: SfOptions::default(),
            split: SplitOptions::default(),
            stability_tol: 1e-5,
        }
    }
}

/// Outputs that exist only when the Poincaré splitting succeeded.
#[derive(Debug, Clone)]
pub struct SplitReport {
    pub iclm_gamma2: i64,
    pub gamma1_slope: f64,
    pub split_residual: f64,
    pub stability: StabilityVerdict,
    pub gamma2_parity: CriterionOutcome,
    pub ledger: ParityLedger,
}

/// Everything computed for one orbit, with the parity ledger verified
/// whenever the splitting is available.
#[derive(Debug, Clone)]
pub struct IndexReport {
    pub scenario: String,
    // Integers.
    pub n: usize,
    pub ispec_free: i64,
    pub ispec_fixed: i64,
    pub igeo: i64,
    pub dim_ker_a_minus_i: usize,
    pub leg_0: i64,
    pub leg_s0: i64,
    // Reals.
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub tprime_h: f64,
    pub symplecticity_residual: f64,
    pub integration_error: f64,
    pub s0: f64,
    pub s0_gap: f64,
    pub s0_analytic_bound: f64,
    pub gram_condition: f64,
    pub orientation: f64,
    // Verdicts.
    pub null_class: NullClass,
    pub criterion: CriterionOutcome,
    /// Splitting-dependent outputs; `None` when the conjugated path does
    /// not block-diagonalize (the indices above are still valid).
    pub split: Option<SplitReport>,
    // Provenance.
    pub steps: usize,
    pub galerkin_level: usize,
    pub quad_panels: usize,
    pub zero_rel: f64,
    pub split_tol: f64,
    pub stability_tol: f64,
    pub version: &'static str,
    // Plot payloads.
    pub kappa_curve: Vec<(f64, f64)>,
    pub s_sweep: Vec<(f64, Vec<f64>)>,
}

/// Runs the whole index pipeline on one orbit.
///
/// Callbacks, when present, gate the data on the Euler–Lagrange residual;
/// a family, when present, cross-checks the stored `T'(h)`.
pub fn compute_report(
    scenario_name: &str,
    orbit: &OrbitData,
    callbacks: Option<&LagrangianCallbacks>,
    family: Option<&OrbitFamily>,
    opts: &PipelineOptions,
) -> Result<IndexReport> {
    orbit.validate().map_err(|e| e.in_stage("validate"))?;

    if callbacks.is_some() {
        let (eq, en) =
            euler_lagrange_residual(orbit, callbacks).map_err(|e| e.in_stage("euler-lagrange"))?;
        if eq > 1e-4 || en > 1e-4 {
            return Err(Error::InvalidOrbitData {
                detail: alloc::format!(
                    "Euler-Lagrange residuals too large (equation {eq:.3e}, energy {en:.3e})"
                ),
            }
            .in_stage("euler-lagrange"));
        }
    }

    let (kappa, null_class) = kappa_classify(orbit);
    if null_class == NullClass::NotNonNull {
        return Err(Error::NotNonNull.in_stage("kappa"));
    }
    let tprime = orbit.tprime_h.ok_or(Error::MissingTprime.in_stage("cylinder"))?;
    if let Some(fam) = family {
        let est = estimate_tprime(fam, orbit.energy, (fam.dh_max * 0.1).max(1e-6))
            .map_err(|e| e.in_stage("cylinder"))?;
        let scale = tprime.abs().max(1.0);
        if (est - tprime).abs() > 1e-4 * scale {
            return Err(Error::InvalidOrbitData {
                detail: alloc::format!(
                    "stored T'(h) = {tprime} disagrees with the family estimate {est}"
                ),
            }
            .in_stage("cylinder"));
        }
    }

    let psi =
        fundamental_solution(orbit, opts.steps).map_err(|e| e.in_stage("integration"))?;
    // Crossing detection cannot resolve structure below the integrator's
    // accuracy: widen the intersection band to the error estimate so a
    // multiple crossing smeared by integration error stays one crossing.
    let mut clm = opts.clm.clone();
    clm.kernel_tol = clm.kernel_tol.max(50.0 * psi.error_estimate.unwrap_or(0.0));
    let mut split_opts = opts.split.clone();
    split_opts.clm = clm.clone();
    let (igeo, _monodromy) =
        geometrical_index(orbit, &psi, &clm).map_err(|e| e.in_stage("geometrical-index"))?;

    let basis = build_basis(orbit, opts.galerkin_level).map_err(|e| e.in_stage("galerkin"))?;
    let assembler =
        IndexFormAssembler::new(orbit, &basis).map_err(|e| e.in_stage("galerkin"))?;
    let threshold =
        choose_s0(orbit, &assembler, opts.zero_rel).map_err(|e| e.in_stage("threshold"))?;
    let decomposition = difference_decomposition(orbit, &assembler, threshold.s0, &opts.sf)
        .map_err(|e| e.in_stage("spectral-index"))?;

    let (relation_ok, lhs, rhs, dim_ker) =
        check_relation_geo_spec(orbit, igeo, decomposition.ispec_fixed);
    if !relation_ok {
        return Err(Error::LedgerMismatch {
            detail: alloc::format!("ι_geo = {lhs} but ι_spec^T + dim ker(A - I) = {rhs}"),
        }
        .in_stage("relation-geo-spec"));
    }

    let criterion =
        instability_criterion(null_class, orbit.orientation(), decomposition.ispec_free, orbit.n)
            .map_err(|e| e.in_stage("criterion"))?;

    // The splitting can legitimately fail (the cylinder plane need not be
    // invariant along the path in an arbitrary trivialization): report
    // the unreduced indices with the splitting marked unavailable.
    let split = match splitting_reduce(orbit, &psi, &opts.split) {
        Ok(split) => {
            let slope_scale = tprime.abs().max(1.0);
            if (split.gamma1_slope - tprime).abs() > 1e-3 * slope_scale {
                return Err(Error::LedgerMismatch {
                    detail: alloc::format!(
                        "monodromy slope {} disagrees with T'(h) = {tprime}",
                        split.gamma1_slope
                    ),
                }
                .in_stage("splitting"));
            }
            let stability =
                crate::stability::stability_classify(split.px_path.end(), opts.stability_tol);
            let (gamma2_parity, iclm_gamma2) = clm_parity_instability(&split.px_path, &opts.clm)
                .map_err(|e| e.in_stage("gamma2"))?;

            // The theorem's content, spot-checked: a certificate must
            // never point at a linearly stable reduced map.
            for (name, outcome) in
                [("criterion", criterion), ("gamma2-parity", gamma2_parity)]
            {
                if outcome == CriterionOutcome::CertifiedUnstable
                    && stability.class == StabilityClass::LinearlyStable
                {
                    return Err(Error::LedgerMismatch {
                        detail: alloc::format!(
                            "{name} certified instability but the reduced map is linearly stable"
                        ),
                    }
                    .in_stage("soundness"));
                }
            }

            let audit = AuditInputs {
                n: orbit.n,
                det_a: orbit.orientation(),
                kappa_sign: decomposition.kappa_sign,
                tprime,
                ispec_free: decomposition.ispec_free,
                ispec_fixed: decomposition.ispec_fixed,
                igeo,
                iclm_gamma2,
                dim_ker_a_minus_i: dim_ker,
                conjugated_igeo: split.conjugated_igeo,
            };
            let ledger = parity_audit(&audit).map_err(|e| e.in_stage("parity-audit"))?;
            Some(SplitReport {
                iclm_gamma2,
                gamma1_slope: split.gamma1_slope,
                split_residual: split.off_block_residual,
                stability,
                gamma2_parity,
                ledger,
            })
        }
        Err(Error::SplitResidualTooLarge { .. }) | Err(Error::NoCylinderBlock { .. }) => None,
        Err(e) => return Err(e.in_stage("splitting")),
    };

    // Plot payloads: κ(t) on the orbit grid, eigenvalues along the
    // s-sweep on a compact grid.
    let kappa_curve: Vec<(f64, f64)> =
        orbit.grid.iter().cloned().zip(kappa.iter().cloned()).collect();
    let mut s_sweep = Vec::new();
    let sweep_points = 33usize;
    for i in 0..sweep_points {
        let s = threshold.s0 * i as f64 / (sweep_points - 1) as f64;
        let eigs = crate::linalg::sym_eigenvalues(&assembler.free_matrix(s));
        s_sweep.push((s, eigs.iter().cloned().collect()));
    }

    Ok(IndexReport {
        scenario: String::from(scenario_name),
        n: orbit.n,
        ispec_free: decomposition.ispec_free,
        ispec_fixed: decomposition.ispec_fixed,
        igeo,
        dim_ker_a_minus_i: dim_ker,
        leg_0: decomposition.leg_0,
        leg_s0: decomposition.leg_s0,
        kappa_min: assembler.kappa_min,
        kappa_max: assembler.kappa_max,
        tprime_h: tprime,
        symplecticity_residual: psi.symplecticity_residual,
        integration_error: psi.error_estimate.unwrap_or(0.0),
        s0: threshold.s0,
        s0_gap: threshold.gap,
        s0_analytic_bound: threshold.analytic_bound,
        gram_condition: basis.gram_condition,
        orientation: orbit.orientation(),
        null_class,
        criterion,
        split,
        steps: opts.steps,
        galerkin_level: opts.galerkin_level,
        quad_panels: assembler.quad_panels,
        zero_rel: opts.zero_rel,
        split_tol: opts.split.split_tol,
        stability_tol: opts.stability_tol,
        version: REPORT_VERSION,
        kappa_curve,
        s_sweep,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn run(scenario: presets::PresetScenario, opts: &PipelineOptions) -> IndexReport {
        compute_report(
            &scenario.name,
            &scenario.orbit,
            scenario.callbacks.as_ref(),
            scenario.family.as_ref(),
            opts,
        )
        .unwrap_or_else(|e| panic!("{}: {e}", scenario.name))
    }

    #[test]
    fn flat_torus_report() {
        let mut opts = PipelineOptions::default();
        opts.steps = 512;
        opts.galerkin_level = 16;
        let r = run(presets::flat_torus(0.5), &opts);
        assert_eq!(r.ispec_free, 0);
        assert_eq!(r.ispec_fixed, 0);
        assert_eq!(r.igeo, 2);
        let split = r.split.as_ref().expect("splitting available");
        assert_eq!(split.iclm_gamma2, 1);
        assert_eq!(r.dim_ker_a_minus_i, 2);
        assert_eq!(r.criterion, CriterionOutcome::CertifiedUnstable);
        assert_eq!(split.stability.class, StabilityClass::SpectrallyStableNotLinearly);
        assert_eq!(r.null_class, NullClass::LPositive);
    }

    #[test]
    fn kepler_report() {
        let mut opts = PipelineOptions::default();
        opts.steps = 8192;
        opts.galerkin_level = 16;
        let r = run(presets::kepler_circular(-0.5), &opts);
        assert_eq!(r.ispec_free, 1);
        assert_eq!(r.ispec_fixed, 0);
        assert_eq!(r.igeo, 2);
        let split = r.split.as_ref().expect("splitting available");
        assert_eq!(split.iclm_gamma2, 2);
        assert_eq!(r.criterion, CriterionOutcome::Inconclusive);
        assert_eq!(split.stability.class, StabilityClass::LinearlyStable);
        assert_eq!((r.n as i64 + r.ispec_free).rem_euclid(2), 1, "odd parity");
    }

    #[test]
    fn harmonic_report() {
        let mut opts = PipelineOptions::default();
        opts.steps = 4096;
        opts.galerkin_level = 16;
        let r = run(presets::harmonic_loop(1.0), &opts);
        assert_eq!(r.ispec_fixed, 2);
        assert_eq!(r.ispec_free, 3);
        assert_eq!(r.igeo, 4);
        let split = r.split.as_ref().expect("splitting available");
        assert_eq!(split.iclm_gamma2, 4);
        assert!(r.tprime_h.abs() < 1e-12);
        assert!(split.gamma1_slope.abs() < 1e-6);
        assert_eq!(r.criterion, CriterionOutcome::Inconclusive);
    }

    #[test]
    fn synthetic_reports() {
        let mut opts = PipelineOptions::default();
        opts.steps = 512;
        opts.galerkin_level = 16;
        let r = run(
            presets::negative_p_synthetic(presets::SyntheticVariant::Drift, -0.5),
            &opts,
        );
        assert_eq!(r.null_class, NullClass::LNegative);
        assert_eq!((r.leg_0, r.leg_s0), (1, -1));
        assert_eq!(r.ispec_free - r.ispec_fixed, 0);

        let mut opts = PipelineOptions::default();
        opts.steps = 8192;
        opts.galerkin_level = 16;
        let r = run(
            presets::negative_p_synthetic(presets::SyntheticVariant::Well, 0.5),
            &opts,
        );
        assert_eq!(r.null_class, NullClass::LNegative);
        assert_eq!((r.leg_0, r.leg_s0), (0, -1));
        assert_eq!(r.ispec_free - r.ispec_fixed, -1);
    }

    #[test]
    fn missing_tprime_is_reported() {
        let mut scenario = presets::flat_torus(0.5);
        scenario.orbit.tprime_h = None;
        let err = compute_report(
            "no-tprime",
            &scenario.orbit,
            None,
            None,
            &PipelineOptions::default(),
        )
        .unwrap_err();
        let text = alloc::format!("{err}");
        assert!(text.contains("T'(h)"), "{text}");
    }
}
