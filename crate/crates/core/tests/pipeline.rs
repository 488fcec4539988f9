//! End-to-end checks that cut across modules: the geo/spec relation with
//! a nontrivial frame twist, Morse-index agreement for convex data, and
//! the positive-side probe on the stable reduced maps.

use nalgebra::{DMatrix, DVector};
use symindex_core::index_form::{
    build_basis, check_relation_geo_spec, choose_s0, spectral_indices, IndexFormAssembler,
};
use symindex_core::linalg;
use symindex_core::maslov::{stable_component_probe, ClmOptions};
use symindex_core::orbit::{fundamental_solution, geometrical_index, OrbitData};
use symindex_core::presets;
use symindex_core::report::{compute_report, PipelineOptions};
use symindex_core::spectral_flow::SfOptions;
use symindex_core::stability::{
    clm_parity_instability, splitting_reduce, CriterionOutcome, SplitOptions, StabilityClass,
};
use symindex_core::symplectic::{validate_symplectic, SpComponent, SymplecticStructure};

/// The flat geodesic of `flat_torus`, trivialized in a frame that turns
/// by π/2 over the period: A = Rot(π/2) with trivial kernel of A − I,
/// constant P, Q, R and a rotating velocity column.
fn rotated_frame_torus(h: f64) -> OrbitData {
    let phi = core::f64::consts::FRAC_PI_2;
    let t_per = 1.0 / (2.0 * h).sqrt();
    let k = 257;
    let grid: Vec<f64> = (0..k).map(|i| i as f64 / (k - 1) as f64).collect();
    let j2 = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
    let q = &j2 * (phi / t_per);
    let r = DMatrix::<f64>::identity(2, 2) * (phi / t_per) * (phi / t_per);
    let xprime: Vec<DVector<f64>> = grid
        .iter()
        .map(|&t| DVector::from_column_slice(&[(phi * t).cos(), -(phi * t).sin()]))
        .collect();
    let a = DMatrix::from_row_slice(2, 2, &[phi.cos(), -phi.sin(), phi.sin(), phi.cos()]);
    OrbitData {
        n: 2,
        period: t_per,
        energy: h,
        grid,
        p: vec![DMatrix::identity(2, 2); k],
        q: vec![q; k],
        r: vec![r; k],
        l_q: vec![DVector::zeros(2); k],
        xprime,
        frame_twist: a,
        tprime_h: Some(-(2.0 * h).powf(-1.5)),
    }
}

#[test]
fn relation_geo_spec_with_nontrivial_twist() {
    let orbit = rotated_frame_torus(0.5);
    orbit.validate().unwrap();
    let psi = fundamental_solution(&orbit, 2048).unwrap();
    let (igeo, _) = geometrical_index(&orbit, &psi, &ClmOptions::default()).unwrap();
    let basis = build_basis(&orbit, 24).unwrap();
    assert!(basis.twist_residual(&orbit.frame_twist) < 1e-12);
    let asm = IndexFormAssembler::new(&orbit, &basis).unwrap();
    let th = choose_s0(&orbit, &asm, 1e-9).unwrap();
    let (_, ispec_fixed) = spectral_indices(&asm, th.s0, &SfOptions::default()).unwrap();
    let (ok, lhs, rhs, dim_ker) = check_relation_geo_spec(&orbit, igeo, ispec_fixed);
    assert_eq!(dim_ker, 0, "Rot(π/2) has A - I invertible");
    assert!(ok, "igeo = {lhs} vs ispec_fixed + dim ker = {rhs}");
}

#[test]
fn rotated_frame_full_pipeline() {
    let orbit = rotated_frame_torus(0.5);
    let mut opts = PipelineOptions::default();
    opts.steps = 2048;
    opts.galerkin_level = 24;
    let report = compute_report("rotated_frame_torus", &orbit, None, None, &opts)
        .expect("pipeline on the twisted frame");
    // det A = 1: orientation preserving; the constant-conjugator
    // splitting cannot follow the rotating flow direction here, so the
    // report must degrade gracefully with the indices intact.
    assert_eq!(report.orientation, 1.0);
    assert_eq!(report.dim_ker_a_minus_i, 0);
    assert_eq!(report.igeo, report.ispec_fixed);
    assert!(report.split.is_none(), "splitting should be unavailable in this frame");
}

#[test]
fn convex_spectral_index_equals_morse_count() {
    // With P > 0 the spectral indices equal the Morse indices of the
    // forms at s = 0, exactly as eigenvalue counts.
    for scenario in [
        presets::flat_torus(0.5),
        presets::kepler_circular(-0.5),
        presets::harmonic_loop(1.0),
    ] {
        let basis = build_basis(&scenario.orbit, 20).unwrap();
        let asm = IndexFormAssembler::new(&scenario.orbit, &basis).unwrap();
        let th = choose_s0(&scenario.orbit, &asm, 1e-9).unwrap();
        let (free, fixed) = spectral_indices(&asm, th.s0, &SfOptions::default()).unwrap();
        let m_free = linalg::morse_counts_rel(&asm.free_matrix(0.0), 1e-9).0 as i64;
        let m_fixed = linalg::morse_counts_rel(&asm.fixed_matrix(0.0), 1e-9).0 as i64;
        assert_eq!(free, m_free, "{}", scenario.name);
        assert_eq!(fixed, m_fixed, "{}", scenario.name);
    }
}

#[test]
fn full_rotation_transverse_block_is_inconclusive() {
    // A transverse block winding once: index 2, even, no certificate.
    let path = symindex_core::paths::SymplecticPath::from_fn(0.0, 1.0, 65, |t| {
        SymplecticStructure::standard(1).rotation(2.0 * core::f64::consts::PI * t)
    })
    .unwrap();
    let (outcome, idx) = clm_parity_instability(&path, &ClmOptions::default()).unwrap();
    assert_eq!(idx, 2);
    assert_eq!(outcome, CriterionOutcome::Inconclusive);
}

#[test]
fn linearly_stable_reduced_maps_probe_positive() {
    // Every linearly stable reduced Poincaré map must probe into Sp⁺ on
    // both rotation sides.
    for scenario in [presets::harmonic_loop(1.0), presets::kepler_circular(-0.5)] {
        let psi = fundamental_solution(&scenario.orbit, 8192).unwrap();
        let split =
            splitting_reduce(&scenario.orbit, &psi, &SplitOptions::default()).unwrap();
        let verdict = symindex_core::stability::stability_classify(split.px_path.end(), 1e-5);
        assert_eq!(verdict.class, StabilityClass::LinearlyStable, "{}", scenario.name);
        let px1 = validate_symplectic(split.px_path.end().clone(), 1e-5).unwrap();
        let mut delta = 1e-2;
        let mut found = None;
        for _ in 0..10 {
            match stable_component_probe(&px1, delta, 1e-4) {
                Ok((p, q)) if p != SpComponent::Zero && q != SpComponent::Zero => {
                    found = Some((p, q));
                    break;
                }
                _ => delta *= 0.5,
            }
        }
        assert_eq!(
            found,
            Some((SpComponent::Plus, SpComponent::Plus)),
            "{}",
            scenario.name
        );
    }
}
