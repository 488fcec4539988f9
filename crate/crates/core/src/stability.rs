//! Poincaré-map splitting, linear-stability classification, and the
//! parity instability criteria.
//!
//! The monodromy `A_d ψ(1)` of an orbit with an orbit cylinder carries a
//! distinguished 2-plane spanned by the flow direction `z₀` and a
//! cylinder partner `w` with `ω(w, z₀) = 1`, on which it acts as
//! `[[1, 0], [-T'(h), 1]]`. Conjugating the whole path by the symplectic
//! basis `{w, complement_q…, z₀, complement_p…}` splits off the reduced
//! transverse path `P_x(t)` whenever the plane is invariant along the
//! path (exact for the built-in scenarios, which are supplied in
//! co-moving trivializations with constant coefficients).

use alloc::vec::Vec;
use nalgebra::{Complex, DMatrix, DVector};

#[allow(unused_imports)]
use nalgebra::{ComplexField as _, RealField as _};

use crate::error::{Error, Result};
use crate::linalg;
use crate::maslov::{clm_graph_index, ClmOptions};
use crate::orbit::{a_d, NullClass, OrbitData};
use crate::paths::SymplecticPath;
use crate::symplectic::{validate_symplectic, SymplecticMatrix};

/// Outcome of a parity-based instability certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriterionOutcome {
    /// The parity test certifies linear instability.
    CertifiedUnstable,
    /// The parity test gives no information.
    Inconclusive,
}

/// Stability class of the reduced Poincaré map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityClass {
    LinearlyStable,
    SpectrallyStableNotLinearly,
    Unstable,
}

/// One Floquet multiplier cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Multiplier {
    pub re: f64,
    pub im: f64,
    pub algebraic: usize,
    pub geometric: usize,
}

/// Verdict together with the multiplier table.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityVerdict {
    pub class: StabilityClass,
    pub multipliers: Vec<Multiplier>,
}

/// Result of the Poincaré splitting.
#[derive(Debug, Clone)]
pub struct SplitMonodromy {
    /// The `-tT'(h)` block parameter read off the monodromy:
    /// `slope = -ω(w, (M - I)w) = T'(h)`.
    pub gamma1_slope: f64,
    /// Reduced transverse path of dimension `2(n-1)`.
    pub px_path: SymplecticPath,
    /// The symplectic conjugator (columns `w, c…, z₀, d…`).
    pub conjugator: SymplecticMatrix,
    /// Max relative coupling between the cylinder block and the rest
    /// along the conjugated path.
    pub off_block_residual: f64,
    /// Max deviation of the cylinder block from `[[1,0],[-t·slope,1]]`.
    pub gamma1_form_deviation: f64,
    /// CLM index of the conjugated full path (equals the geometrical
    /// index by symplectic invariance; re-checked by the parity audit).
    pub conjugated_igeo: i64,
}

/// Splitting tunables.
#[derive(Debug, Clone)]
pub struct SplitOptions {
    /// Relative off-block residual admitted for a valid splitting.
    pub split_tol: f64,
    /// Relative kernel tolerance for the eigenvalue-1 space.
    pub kernel_rel: f64,
    pub clm: ClmOptions,
}

impl Default for SplitOptions {
    fn default() -> Self {
        SplitOptions { split_tol: 1e-6, kernel_rel: 1e-7, clm: ClmOptions::default() }
    }
}

/// Trivialized flow direction `z₀ = (y₀, u₀)` with `u₀ = x'(0)/T` and
/// `y₀ = (1/T) P(0) u₀' + Q(0) u₀`: the physical-time tangent of the
/// Hamiltonian orbit, whose normalization fixes the `γ₁` slope.
fn flow_direction(orbit: &OrbitData) -> DVector<f64> {
    let field = orbit.coefficients();
    let n = orbit.n;
    let t_per = orbit.period;
    let u0 = field.xprime(0.0) / t_per;
    let du0 = field.xprime_deriv(0.0) / t_per;
    let y0 = field.p(0.0) * du0 / t_per + field.q(0.0) * &u0;
    let mut z = DVector::zeros(2 * n);
    z.rows_mut(0, n).copy_from(&y0);
    z.rows_mut(n, n).copy_from(&u0);
    z
}

/// Splits `A_d ψ(t)` into the cylinder block and the reduced transverse
/// path `P_x(t)`.
pub fn splitting_reduce(
    orbit: &OrbitData,
    psi: &SymplecticPath,
    opts: &SplitOptions,
) -> Result<SplitMonodromy> {
    let n = orbit.n;
    let two_n = 2 * n;
    if orbit.tprime_h.is_none() {
        return Err(Error::MissingTprime);
    }
    // Rank decisions cannot resolve structure below the integrator's own
    // error; widen the kernel tolerances accordingly so that a too-coarse
    // grid fails through the residual gate, not through rank artifacts.
    let integ_err = psi.error_estimate.unwrap_or(0.0);
    let kernel_rel = opts.kernel_rel.max(30.0 * integ_err);
    let full_path = psi.left_multiplied(&a_d(orbit));
    let m = full_path.end().clone();
    let j = crate::symplectic::std_j(n);

    // Generalized eigenvalue-1 space of the monodromy.
    let shifted = &m - DMatrix::<f64>::identity(two_n, two_n);
    let mut power = DMatrix::<f64>::identity(two_n, two_n);
    for _ in 0..two_n {
        power = &power * &shifted;
    }
    let gen_tol = kernel_rel * linalg::inf_norm(&shifted).max(1.0).powi(two_n as i32);
    let gen_space = linalg::nullspace_abs(&power, gen_tol);
    if gen_space.ncols() < 2 {
        return Err(Error::NoCylinderBlock { found_dim: gen_space.ncols() });
    }

    let z0 = flow_direction(orbit);
    let res_z0 = (&shifted * &z0).norm() / z0.norm().max(1e-300);
    if res_z0 > 1e-4 * linalg::inf_norm(&m).max(1.0) {
        return Err(Error::NoCylinderBlock { found_dim: gen_space.ncols() });
    }

    // Candidate space for the cylinder partner. The monodromy condition
    // `(M - I)v ∈ span{z₀}` is not enough when the transverse block has
    // trivial monodromy (Kepler: every epicyclic direction is fixed), so
    // intersect with the same condition for the flow generator at t = 0
    // and for the twist `A_d`: the plane must be invariant along the
    // whole path, not just at its endpoint.
    let z0_hat = &z0 / z0.norm();
    let field = orbit.coefficients();
    let gen0 = &j * field.b(0.0)?;
    let gen_z0 = &gen0 * &z0;
    let mut span_cols = DMatrix::zeros(two_n, 2);
    span_cols.set_column(0, &z0);
    span_cols.set_column(1, &gen_z0);
    let flow_span = linalg::column_space(&span_cols, 1e-9);
    let perp_flow = DMatrix::<f64>::identity(two_n, two_n) - &flow_span * flow_span.transpose();
    let perp_z0 = DMatrix::<f64>::identity(two_n, two_n) - &z0_hat * z0_hat.transpose();
    let cond = |mat: &DMatrix<f64>, perp: &DMatrix<f64>| -> DMatrix<f64> {
        let pm = perp * mat;
        linalg::nullspace_abs(&pm, kernel_rel.max(1e-7) * linalg::inf_norm(mat).max(1.0))
    };
    let ad_mat = a_d(orbit);
    let k_monodromy = cond(&shifted, &perp_z0);
    let k_generator = cond(&gen0, &perp_flow);
    let k_twist = cond(&(&ad_mat - DMatrix::<f64>::identity(two_n, two_n)), &perp_z0);
    let space_tol = kernel_rel.max(1e-8);
    let mut w_space = linalg::intersection_basis(&k_monodromy, &k_generator, space_tol);
    w_space = linalg::intersection_basis(&w_space, &k_twist, space_tol);
    if w_space.ncols() < 2 {
        return Err(Error::NoCylinderBlock { found_dim: w_space.ncols() });
    }

    // Cylinder partner: Riesz vector of ω(z₀, ·) on the candidate space,
    // normalized to ω(w, z₀) = 1.
    let jz0 = &j * &z0;
    let mut w_raw = DVector::zeros(two_n);
    for i in 0..w_space.ncols() {
        let g = w_space.column(i).into_owned();
        w_raw += &g * jz0.dot(&g);
    }
    let pairing = (&j * &w_raw).dot(&z0);
    if pairing.abs() < 1e-10 {
        return Err(Error::NoCylinderBlock { found_dim: w_space.ncols() });
    }
    let mut w = w_raw / pairing;
    // Euclidean tidy-up along z₀ (preserves ω(w, z₀) = 1).
    w -= &z0 * (w.dot(&z0) / z0.norm_squared());

    let gamma1_slope = -(&j * &w).dot(&(&shifted * &w));

    // Symplectic complement of span{w, z₀} and a standard basis on it.
    let mut rows = DMatrix::zeros(2, two_n);
    rows.row_mut(0).copy_from(&(&j * &w).transpose());
    rows.row_mut(1).copy_from(&jz0.transpose());
    let compl = linalg::nullspace(&rows, 1e-10);
    if compl.ncols() != two_n - 2 {
        return Err(Error::NoCylinderBlock { found_dim: gen_space.ncols() });
    }
    let structure = crate::symplectic::SymplecticStructure::standard(n);
    let (cs, ds) = if n > 1 {
        crate::symplectic::symplectic_basis(&structure, &compl)?
    } else {
        (Vec::new(), Vec::new())
    };

    // Conjugator columns: (w, c…, z₀, d…) is a standard symplectic basis.
    let mut c_mat = DMatrix::zeros(two_n, two_n);
    c_mat.set_column(0, &w);
    for (k, c) in cs.iter().enumerate() {
        c_mat.set_column(1 + k, c);
    }
    c_mat.set_column(n, &z0);
    for (k, d) in ds.iter().enumerate() {
        c_mat.set_column(n + 1 + k, d);
    }
    let sympl_res = crate::symplectic::symplectic_residual(&c_mat);
    if sympl_res > 1e-6 {
        return Err(Error::NotSymplectic { residual: sympl_res });
    }
    let conjugator = validate_symplectic(c_mat.clone(), 1e-6)?;

    let conj_path = full_path.conjugated(&c_mat)?;

    // Off-block residual and γ₁ deviation over the samples.
    let block_idx = [0usize, n];
    let compl_idx: Vec<usize> = (1..n).chain(n + 1..two_n).collect();
    let mut off = 0.0f64;
    let mut gamma_dev = 0.0f64;
    for (k, sample) in conj_path.samples().iter().enumerate() {
        let t = conj_path.times()[k];
        let scale = linalg::inf_norm(sample).max(1.0);
        for &i in &block_idx {
            for &jj in &compl_idx {
                off = off.max(sample[(i, jj)].abs() / scale);
                off = off.max(sample[(jj, i)].abs() / scale);
            }
        }
        let g11 = sample[(0, 0)];
        let g12 = sample[(0, n)];
        let g21 = sample[(n, 0)];
        let g22 = sample[(n, n)];
        gamma_dev = gamma_dev
            .max((g11 - 1.0).abs())
            .max(g12.abs())
            .max((g21 + t * gamma1_slope).abs())
            .max((g22 - 1.0).abs());
    }
    if off > opts.split_tol {
        return Err(Error::SplitResidualTooLarge { residual: off });
    }

    let px_path = if n > 1 {
        conj_path.extract_block(&compl_idx, 1e-5)?
    } else {
        // Empty transverse block.
        SymplecticPath::from_samples(
            alloc::vec![0.0, 1.0],
            alloc::vec![DMatrix::zeros(0, 0), DMatrix::zeros(0, 0)],
            1.0,
        )?
    };

    let conjugated_igeo = clm_graph_index(&conj_path, &opts.clm)?;

    Ok(SplitMonodromy {
        gamma1_slope,
        px_path,
        conjugator,
        off_block_residual: off,
        gamma1_form_deviation: gamma_dev,
        conjugated_igeo,
    })
}

/// Floquet multipliers with multiplicities, and the stability class.
pub fn stability_classify(px1: &DMatrix<f64>, tol: f64) -> StabilityVerdict {
    let d = px1.nrows();
    if d == 0 {
        return StabilityVerdict { class: StabilityClass::LinearlyStable, multipliers: Vec::new() };
    }
    let eigs = px1.clone().complex_eigenvalues();
    let cluster_tol = 1e-7;
    let mut remaining: Vec<Complex<f64>> = eigs.iter().cloned().collect();
    let mut multipliers = Vec::new();
    let mut spectrally_stable = true;
    let mut semisimple = true;
    while let Some(seed) = remaining.first().cloned() {
        let mut algebraic = 0usize;
        remaining.retain(|e| {
            if crate::linalg::cabs(e - seed) < cluster_tol {
                algebraic += 1;
                false
            } else {
                true
            }
        });
        let geometric = if seed.im.abs() < cluster_tol {
            let sh = px1 - DMatrix::<f64>::identity(d, d) * seed.re;
            d - linalg::rank(&sh, 1e-9)
        } else {
            let a = seed.re;
            let b = seed.im;
            let mut big = DMatrix::zeros(2 * d, 2 * d);
            let ma = px1 - DMatrix::<f64>::identity(d, d) * a;
            big.view_mut((0, 0), (d, d)).copy_from(&ma);
            big.view_mut((d, d), (d, d)).copy_from(&ma);
            big.view_mut((0, d), (d, d))
                .copy_from(&(DMatrix::<f64>::identity(d, d) * b));
            big.view_mut((d, 0), (d, d))
                .copy_from(&(DMatrix::<f64>::identity(d, d) * (-b)));
            (2 * d - linalg::rank(&big, 1e-9)) / 2
        };
        if (crate::linalg::cabs(seed) - 1.0).abs() > tol {
            spectrally_stable = false;
        }
        if geometric < algebraic {
            semisimple = false;
        }
        multipliers.push(Multiplier { re: seed.re, im: seed.im, algebraic, geometric });
    }
    multipliers.sort_by(|a, b| {
        (b.re * b.re + b.im * b.im)
            .partial_cmp(&(a.re * a.re + a.im * a.im))
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    let class = if !spectrally_stable {
        StabilityClass::Unstable
    } else if semisimple {
        StabilityClass::LinearlyStable
    } else {
        StabilityClass::SpectrallyStableNotLinearly
    };
    StabilityVerdict { class, multipliers }
}

/// CLM parity certificate on the reduced transverse path:
/// odd `ι_CLM(Δ, Gr(γ₂))` certifies linear instability.
pub fn clm_parity_instability(
    px_path: &SymplecticPath,
    opts: &ClmOptions,
) -> Result<(CriterionOutcome, i64)> {
    if px_path.half_dim() == 0 {
        return Ok((CriterionOutcome::Inconclusive, 0));
    }
    let index = clm_graph_index(px_path, opts)?;
    let outcome = if index.rem_euclid(2) == 1 {
        CriterionOutcome::CertifiedUnstable
    } else {
        CriterionOutcome::Inconclusive
    };
    Ok((outcome, index))
}

/// The four-branch parity criterion on `(null class, orientation,
/// ι_spec(x,T) + n)`.
pub fn instability_criterion(
    null_class: NullClass,
    orientation: f64,
    ispec_free: i64,
    n: usize,
) -> Result<CriterionOutcome> {
    let parity_even = (ispec_free + n as i64).rem_euclid(2) == 0;
    let preserving = orientation > 0.0;
    let certified = match null_class {
        NullClass::NotNonNull => return Err(Error::NotNonNull),
        NullClass::LPositive => {
            (preserving && parity_even) || (!preserving && !parity_even)
        }
        NullClass::LNegative => {
            (preserving && !parity_even) || (!preserving && parity_even)
        }
    };
    Ok(if certified {
        CriterionOutcome::CertifiedUnstable
    } else {
        CriterionOutcome::Inconclusive
    })
}

/// The four-term parity ledger of `n + ι_spec(x, T)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParityLedger {
    /// `n − dim ker(A − I)` (even for orientation-preserving orbits).
    pub term_twist: i64,
    /// `ι_spec(x,T) − ι_spec^T(x)`.
    pub term_difference: i64,
    /// `ι_geo − ι_CLM(γ₂)`, the cylinder-block index (`1` iff `T' < 0`).
    pub term_gamma1: i64,
    /// `ι_CLM(γ₂)`.
    pub term_gamma2: i64,
    /// `n + ι_spec(x,T)`, the audited total.
    pub total: i64,
}

/// Inputs the audit needs from the pipeline.
#[derive(Debug, Clone, Copy)]
pub struct AuditInputs {
    pub n: usize,
    pub det_a: f64,
    pub kappa_sign: i8,
    pub tprime: f64,
    pub ispec_free: i64,
    pub ispec_fixed: i64,
    pub igeo: i64,
    pub iclm_gamma2: i64,
    pub dim_ker_a_minus_i: usize,
    pub conjugated_igeo: i64,
}

/// Recomputes `n + ι_spec` through the four-term decomposition and checks
/// every parity the instability proof uses. A mismatch means one of the
/// upstream indices is numerically wrong.
pub fn parity_audit(x: &AuditInputs) -> Result<ParityLedger> {
    let mismatch = |detail: alloc::string::String| Err(Error::LedgerMismatch { detail });

    if x.conjugated_igeo != x.igeo {
        return mismatch(alloc::format!(
            "conjugation invariance: ι_geo {} vs conjugated {}",
            x.igeo,
            x.conjugated_igeo
        ));
    }
    let term_twist = x.n as i64 - x.dim_ker_a_minus_i as i64;
    let term_difference = x.ispec_free - x.ispec_fixed;
    let term_gamma1 = x.igeo - x.iclm_gamma2;
    let total = term_twist + term_difference + term_gamma1 + x.iclm_gamma2;
    if total != x.n as i64 + x.ispec_free {
        return mismatch(alloc::format!(
            "sum identity: {} + {} + {} + {} != n + ι_spec = {}",
            term_twist,
            term_difference,
            term_gamma1,
            x.iclm_gamma2,
            x.n as i64 + x.ispec_free
        ));
    }
    if x.det_a > 0.0 && term_twist.rem_euclid(2) != 0 {
        return mismatch(alloc::format!(
            "orientation-preserving twist term {term_twist} must be even"
        ));
    }
    let expected_gamma1 = if x.tprime < 0.0 { 1 } else { 0 };
    if term_gamma1 != expected_gamma1 {
        return mismatch(alloc::format!(
            "cylinder-block index {term_gamma1} should be {expected_gamma1} for T' = {}",
            x.tprime
        ));
    }
    let mid_parity = (term_difference + term_gamma1).rem_euclid(2);
    let expected_parity = if x.kappa_sign > 0 { 1 } else { 0 };
    if mid_parity != expected_parity {
        return mismatch(alloc::format!(
            "difference + cylinder terms have parity {mid_parity}, expected {expected_parity} \
             for κ sign {}",
            x.kappa_sign
        ));
    }
    Ok(ParityLedger {
        term_twist,
        term_difference,
        term_gamma1,
        term_gamma2: x.iclm_gamma2,
        total,
    })
}
