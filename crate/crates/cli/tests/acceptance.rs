//! Acceptance suite as an integration test target: one test per
//! criterion, each printing its pass/fail line.
//!
//! Criterion 10 pins the published values of the two κ < 0 branches of
//! the index-difference table. Those published integers are inconsistent
//! with the finite-rank lemma that criteria 3-5 verify against eigenvalue
//! tracking (they differ by the even offset 2·[κ<0], leaving every parity
//! conclusion unchanged), so that test records the discrepancy as a
//! failure rather than weakening either side. See the repository README
//! for the computed branch values.

use symindex_cli::acceptance as acc;

fn run(make: fn() -> acc::CriterionResult) {
    let result = make();
    println!("{}", result.line());
    assert!(result.passed, "{}", result.details);
}

#[test]
fn criterion_01_normative_shear_index() {
    run(acc::criterion_01);
}

#[test]
fn criterion_02_block_morse_vs_dense() {
    run(acc::criterion_02);
}

#[test]
fn criterion_03_grow_family_vs_tracking() {
    run(acc::criterion_03);
}

#[test]
fn criterion_04_shrink_family_vs_tracking() {
    run(acc::criterion_04);
}

#[test]
fn criterion_05_morse_difference_oracle() {
    run(acc::criterion_05);
}

#[test]
fn criterion_06_clm_axioms() {
    run(acc::criterion_06);
}

#[test]
fn criterion_07_symplecticity() {
    run(acc::criterion_07);
}

#[test]
fn criterion_08_flat_torus_pipeline() {
    run(acc::criterion_08);
}

#[test]
fn criterion_09_kepler_pipeline() {
    run(acc::criterion_09);
}

#[test]
fn criterion_10_synthetic_negative_branches() {
    run(acc::criterion_10);
}

#[test]
fn criterion_11_galerkin_stabilization() {
    run(acc::criterion_11);
}

#[test]
fn criterion_12_stable_component_probe() {
    run(acc::criterion_12);
}
