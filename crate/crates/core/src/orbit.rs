//! Trivialized orbit data and the linearized Hamiltonian flow.
//!
//! Orbits arrive as sampled coefficient data `(P, Q, R, L_q, x', A, T, h)`
//! of the second variation along a periodic solution, already expressed
//! in an orthonormal trivializing frame over `t ∈ [0, 1]` with boundary
//! twist `u(0) = A u(1)`. The linearized dynamics is the first-order
//! system `z' = J B(t) z` with
//!
//! ```text
//! B(t) = [[ T P⁻¹      , -T P⁻¹ Q            ],
//!         [ -T Qᵀ P⁻¹  , T Qᵀ P⁻¹ Q - T R    ]],
//! ```
//!
//! integrated by the implicit midpoint rule, which is exactly symplectic
//! for linear systems.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

#[allow(unused_imports)]
use nalgebra::{ComplexField as _, RealField as _};

use crate::error::{Error, Result};
use crate::linalg::{self, CubicSpline};
use crate::maslov::{clm_graph_index, ClmOptions};
use crate::paths::SymplecticPath;
use crate::symplectic::{std_j, validate_symplectic, SymmetricMatrix, SymplecticMatrix};

/// Sign classification of `κ(t) = ⟨P(t)x'(t), x'(t)⟩` along the orbit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NullClass {
    /// `κ > 0` throughout: Legendre convexity along the orbit direction.
    LPositive,
    /// `κ < 0` throughout.
    LNegative,
    /// `κ` changes sign or touches zero; the index forms are ill-posed.
    NotNonNull,
}

/// Trivialized coefficient data of one periodic orbit.
#[derive(Debug, Clone)]
pub struct OrbitData {
    /// Configuration dimension `n`.
    pub n: usize,
    /// Period `T` (time units of the original, unscaled flow).
    pub period: f64,
    /// Energy level `h`.
    pub energy: f64,
    /// Sample times in `[0, 1]`, strictly increasing, first 0, last 1.
    pub grid: Vec<f64>,
    /// Fiber Hessian `∂_vv L` per sample (n×n, symmetric, invertible).
    pub p: Vec<DMatrix<f64>>,
    /// Mixed Hessian `∂_qv L` per sample (n×n).
    pub q: Vec<DMatrix<f64>>,
    /// Base Hessian `∂_qq L` per sample (n×n, symmetric).
    pub r: Vec<DMatrix<f64>>,
    /// `∂_q L` components per sample.
    pub l_q: Vec<DVector<f64>>,
    /// Components of `x'(t)` (derivative in scaled time) per sample.
    pub xprime: Vec<DVector<f64>>,
    /// Orthogonal boundary twist `A ∈ O(n)`.
    pub frame_twist: DMatrix<f64>,
    /// Period slope `T'(h)` of the orbit cylinder, when known.
    pub tprime_h: Option<f64>,
}

/// Default tolerances of the structural invariants.
pub const BC_TOL: f64 = 1e-10;
pub const ORTHO_TOL: f64 = 1e-10;
pub const P_INVERTIBLE_REL: f64 = 1e-9;

impl OrbitData {
    /// Checks the structural invariants: shapes of all samples, strictly
    /// increasing grid covering `[0, 1]`, `P(t)` invertible, `A`
    /// orthogonal, and the twisted boundary compatibility
    /// `P(0) = A P(1) Aᵀ`, `Q(0) = A Q(1)`, `R(0) = A R(1) Aᵀ`.
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        let k = self.grid.len();
        let fail = |detail: String| Err(Error::InvalidOrbitData { detail });
        if k < 2 || self.grid[0] != 0.0 || *self.grid.last().unwrap() != 1.0 {
            return fail("grid must start at 0 and end at 1".to_string());
        }
        if !self.grid.windows(2).all(|w| w[0] < w[1]) {
            return fail("grid is not strictly increasing".to_string());
        }
        if self.p.len() != k
            || self.q.len() != k
            || self.r.len() != k
            || self.l_q.len() != k
            || self.xprime.len() != k
        {
            return fail("coefficient sample counts disagree with the grid".to_string());
        }
        for i in 0..k {
            for (name, m) in [("P", &self.p[i]), ("Q", &self.q[i]), ("R", &self.r[i])] {
                if m.nrows() != n || m.ncols() != n {
                    return fail(alloc::format!("{name}[{i}] is not {n}x{n}"));
                }
            }
            if self.l_q[i].len() != n || self.xprime[i].len() != n {
                return fail(alloc::format!("vector sample {i} has wrong length"));
            }
            let smin = linalg::smin(&self.p[i]);
            let scale = linalg::inf_norm(&self.p[i]).max(1.0);
            if smin <= P_INVERTIBLE_REL * scale {
                return Err(Error::SingularP { t: self.grid[i] });
            }
        }
        let a = &self.frame_twist;
        if a.nrows() != n || a.ncols() != n {
            return fail(alloc::format!("A is not {n}x{n}"));
        }
        let ortho =
            linalg::inf_norm(&(a.transpose() * a - DMatrix::<f64>::identity(n, n)));
        if ortho > ORTHO_TOL {
            return fail(alloc::format!("A is not orthogonal (residual {ortho:.3e})"));
        }
        // Coefficient matrices transform by the two-sided congruence under
        // the frame twist (the frame enters both slots of each pairing).
        let last = k - 1;
        let bc = [
            linalg::inf_norm(&(&self.p[0] - a * &self.p[last] * a.transpose())),
            linalg::inf_norm(&(&self.q[0] - a * &self.q[last] * a.transpose())),
            linalg::inf_norm(&(&self.r[0] - a * &self.r[last] * a.transpose())),
        ];
        let scale = linalg::inf_norm(&self.p[0])
            .max(linalg::inf_norm(&self.q[0]))
            .max(linalg::inf_norm(&self.r[0]))
            .max(1.0);
        let worst = bc.iter().fold(0.0f64, |m, &x| m.max(x));
        if worst > BC_TOL * scale.max(1.0) * 10.0 {
            return fail(alloc::format!(
                "boundary compatibility violated (residual {worst:.3e})"
            ));
        }
        Ok(())
    }

    /// `det A`, the orientation sign of the orbit.
    pub fn orientation(&self) -> f64 {
        linalg::det(&self.frame_twist).signum()
    }

    /// `κ(t) = ⟨P(t) x'(t), x'(t)⟩` at the samples.
    pub fn kappa_samples(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| (&self.p[i] * &self.xprime[i]).dot(&self.xprime[i]))
            .collect()
    }

    /// Spline-interpolated coefficient field.
    pub fn coefficients(&self) -> CoefficientField {
        CoefficientField::new(self)
    }

    /// The same orbit for the negated Lagrangian `-L`: coefficients flip
    /// sign, the energy flips, and the period slope flips.
    pub fn negated(&self) -> OrbitData {
        OrbitData {
            n: self.n,
            period: self.period,
            energy: -self.energy,
            grid: self.grid.clone(),
            p: self.p.iter().map(|m| -m).collect(),
            q: self.q.iter().map(|m| -m).collect(),
            r: self.r.iter().map(|m| -m).collect(),
            l_q: self.l_q.iter().map(|v| -v).collect(),
            xprime: self.xprime.clone(),
            frame_twist: self.frame_twist.clone(),
            tprime_h: self.tprime_h.map(|t| -t),
        }
    }
}

/// Matrix-valued spline over the orbit grid.
struct MatSpline {
    rows: usize,
    cols: usize,
    entries: Vec<CubicSpline>,
}

impl MatSpline {
    fn new(grid: &[f64], samples: &[DMatrix<f64>]) -> MatSpline {
        let (rows, cols) = samples[0].shape();
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let ys: Vec<f64> = samples.iter().map(|m| m[(i, j)]).collect();
                entries.push(CubicSpline::new(grid, &ys));
            }
        }
        MatSpline { rows, cols, entries }
    }

    fn eval(&self, t: f64) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.entries[i * self.cols + j].eval(t))
    }

    fn deriv(&self, t: f64) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.entries[i * self.cols + j].deriv(t))
    }
}

/// Spline views of all orbit coefficients, built once per orbit.
pub struct CoefficientField {
    n: usize,
    period: f64,
    p: MatSpline,
    q: MatSpline,
    r: MatSpline,
    l_q: MatSpline,
    xprime: MatSpline,
}

impl CoefficientField {
    fn new(orbit: &OrbitData) -> CoefficientField {
        let as_cols = |vs: &[DVector<f64>]| -> Vec<DMatrix<f64>> {
            vs.iter().map(|v| DMatrix::from_column_slice(v.len(), 1, v.as_slice())).collect()
        };
        CoefficientField {
            n: orbit.n,
            period: orbit.period,
            p: MatSpline::new(&orbit.grid, &orbit.p),
            q: MatSpline::new(&orbit.grid, &orbit.q),
            r: MatSpline::new(&orbit.grid, &orbit.r),
            l_q: MatSpline::new(&orbit.grid, &as_cols(&orbit.l_q)),
            xprime: MatSpline::new(&orbit.grid, &as_cols(&orbit.xprime)),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self, t: f64) -> DMatrix<f64> {
        let m = self.p.eval(t);
        0.5 * (&m + m.transpose())
    }

    pub fn q(&self, t: f64) -> DMatrix<f64> {
        self.q.eval(t)
    }

    pub fn r(&self, t: f64) -> DMatrix<f64> {
        let m = self.r.eval(t);
        0.5 * (&m + m.transpose())
    }

    pub fn l_q(&self, t: f64) -> DVector<f64> {
        DVector::from_column_slice(self.l_q.eval(t).as_slice())
    }

    pub fn xprime(&self, t: f64) -> DVector<f64> {
        DVector::from_column_slice(self.xprime.eval(t).as_slice())
    }

    pub fn xprime_deriv(&self, t: f64) -> DVector<f64> {
        DVector::from_column_slice(self.xprime.deriv(t).as_slice())
    }

    pub fn kappa(&self, t: f64) -> f64 {
        let xp = self.xprime(t);
        (self.p(t) * &xp).dot(&xp)
    }

    /// Coefficient `B(t)` of the linear Hamiltonian system `z' = J B z`.
    pub fn b(&self, t: f64) -> Result<DMatrix<f64>> {
        let n = self.n;
        let tt = self.period;
        let p = self.p(t);
        let smin = linalg::smin(&p);
        if smin <= P_INVERTIBLE_REL * linalg::inf_norm(&p).max(1.0) {
            return Err(Error::SingularP { t });
        }
        let q = self.q(t);
        let r = self.r(t);
        let p_inv = p.clone().try_inverse().ok_or(Error::SingularP { t })?;
        let p_inv = 0.5 * (&p_inv + p_inv.transpose());
        let mut b = DMatrix::zeros(2 * n, 2 * n);
        b.view_mut((0, 0), (n, n)).copy_from(&(&p_inv * tt));
        b.view_mut((0, n), (n, n)).copy_from(&(-(&p_inv * &q) * tt));
        b.view_mut((n, 0), (n, n)).copy_from(&(-(q.transpose() * &p_inv) * tt));
        b.view_mut((n, n), (n, n))
            .copy_from(&((q.transpose() * &p_inv * &q - &r) * tt));
        Ok(0.5 * (&b + b.transpose()))
    }
}

/// `B(t)` for a single instant (builds the spline field; use
/// [`OrbitData::coefficients`] once when evaluating many instants).
pub fn hamiltonian_coefficient(orbit: &OrbitData, t: f64) -> Result<SymmetricMatrix> {
    let b = orbit.coefficients().b(t)?;
    Ok(SymmetricMatrix::from_symmetric_unchecked(b))
}

/// Scenario-supplied evaluators along the orbit, for the Euler–Lagrange
/// residual checks. All values are frame coordinates at scaled time `t`.
#[derive(Clone)]
pub struct LagrangianCallbacks {
    /// `L(x(t), x'(t)/T)`.
    pub lagrangian: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// `∂_v L` components.
    pub dv_l: Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>,
    /// Frame coordinates of the covariant derivative `D/dt (∂_v L)`.
    pub ddt_dv_l: Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>,
}

/// Max-norm residuals of the Euler–Lagrange equation
/// `D/dt(∂_v L) − T ∂_q L = 0` and of the energy constraint
/// `L + h − ⟨∂_v L, x'/T⟩ = 0` over the grid.
pub fn euler_lagrange_residual(
    orbit: &OrbitData,
    callbacks: Option<&LagrangianCallbacks>,
) -> Result<(f64, f64)> {
    let cb = callbacks.ok_or(Error::MissingCallbacks)?;
    let mut eq = 0.0f64;
    let mut en = 0.0f64;
    for (i, &t) in orbit.grid.iter().enumerate() {
        let lhs = (cb.ddt_dv_l)(t);
        let rhs = &orbit.l_q[i] * orbit.period;
        eq = eq.max((lhs - rhs).amax());
        let value = (cb.lagrangian)(t) + orbit.energy
            - (cb.dv_l)(t).dot(&orbit.xprime[i]) / orbit.period;
        en = en.max(value.abs());
    }
    Ok((eq, en))
}

/// κ samples and the non-null classification, with the zero band
/// `null_tol = 1e-9 · max|κ|`.
pub fn kappa_classify(orbit: &OrbitData) -> (Vec<f64>, NullClass) {
    let kappa = orbit.kappa_samples();
    let scale = kappa.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let tol = 1e-9 * scale;
    let min = kappa.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = kappa.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let class = if min > tol {
        NullClass::LPositive
    } else if max < -tol {
        NullClass::LNegative
    } else {
        NullClass::NotNonNull
    };
    (kappa, class)
}

/// Implicit-midpoint (Cayley) step: `ψ ← (I − h/2·JB)⁻¹(I + h/2·JB)ψ`.
fn midpoint_step(
    j: &DMatrix<f64>,
    b_mid: &DMatrix<f64>,
    h: f64,
    psi: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let d = j.nrows();
    let jb = j * b_mid;
    let lhs = DMatrix::<f64>::identity(d, d) - &jb * (0.5 * h);
    let rhs = (DMatrix::<f64>::identity(d, d) + &jb * (0.5 * h)) * psi;
    linalg::solve(&lhs, &rhs).ok_or(Error::InvalidOrbitData {
        detail: "midpoint solve failed".to_string(),
    })
}

fn integrate(
    field: &CoefficientField,
    steps: usize,
    store: bool,
) -> Result<(Vec<f64>, Vec<DMatrix<f64>>, DMatrix<f64>)> {
    let n = field.n();
    let j = std_j(n);
    let h = 1.0 / steps as f64;
    let mut psi = DMatrix::<f64>::identity(2 * n, 2 * n);
    let mut times = Vec::with_capacity(if store { steps + 1 } else { 0 });
    let mut samples = Vec::with_capacity(if store { steps + 1 } else { 0 });
    if store {
        times.push(0.0);
        samples.push(psi.clone());
    }
    for k in 0..steps {
        let tm = (k as f64 + 0.5) * h;
        let b_mid = field.b(tm)?;
        psi = midpoint_step(&j, &b_mid, h, &psi)?;
        if store {
            times.push((k + 1) as f64 * h);
            samples.push(psi.clone());
        }
    }
    Ok((times, samples, psi))
}

/// Fundamental solution `ψ` of `ψ' = J B(t) ψ`, `ψ(0) = I`, by the
/// implicit midpoint rule with `steps` uniform steps.
///
/// The returned path carries the maximal symplecticity residual over the
/// stored samples and a step-halving Richardson error estimate; its
/// evaluator re-integrates from the nearest stored sample so that
/// off-grid evaluations are symplectic too.
pub fn fundamental_solution(orbit: &OrbitData, steps: usize) -> Result<SymplecticPath> {
    if steps < 16 {
        return Err(Error::InvalidOrbitData {
            detail: alloc::format!("integration needs at least 16 steps, got {steps}"),
        });
    }
    orbit.validate()?;
    let field = Arc::new(orbit.coefficients());
    let (times, samples, end_full) = integrate(&field, steps, true)?;
    let (_, _, end_half) = integrate(&field, steps / 2, false)?;
    let error_estimate = linalg::inf_norm(&(&end_full - &end_half)) / 3.0;

    let mut path = SymplecticPath::from_samples(times.clone(), samples.clone(), 1e-8)?;
    path.error_estimate = Some(error_estimate);

    let n = orbit.n;
    let h = 1.0 / steps as f64;
    let eval_field = field.clone();
    let eval_samples = samples;
    path = path.with_evaluator(Arc::new(move |t: f64| {
        let t = t.clamp(0.0, 1.0);
        let k = ((t / h).floor() as usize).min(eval_samples.len() - 1);
        let t0 = k as f64 * h;
        let mut psi = eval_samples[k].clone();
        let dt = t - t0;
        if dt > 1e-15 {
            // A single midpoint sub-step stays symplectic and keeps the
            // local order of the integrator.
            let b_mid = match eval_field.b(t0 + 0.5 * dt) {
                Ok(b) => b,
                Err(_) => return psi,
            };
            if let Ok(next) = midpoint_step(&std_j(n), &b_mid, dt, &psi) {
                psi = next;
            }
        }
        psi
    }));
    Ok(path)
}

/// Geometrical index `ι_CLM(Δ, Gr(A_d ψ(t)))` and the monodromy
/// `A_d ψ(1)`.
pub fn geometrical_index(
    orbit: &OrbitData,
    psi: &SymplecticPath,
    opts: &ClmOptions,
) -> Result<(i64, SymplecticMatrix)> {
    let ad = a_d(orbit);
    let path = psi.left_multiplied(&ad);
    let igeo = clm_graph_index(&path, opts)?;
    let monodromy = validate_symplectic(path.end().clone(), 1e-6)?;
    Ok((igeo, monodromy))
}

/// `A_d = diag(A, A)`.
pub fn a_d(orbit: &OrbitData) -> DMatrix<f64> {
    let n = orbit.n;
    let mut ad = DMatrix::zeros(2 * n, 2 * n);
    ad.view_mut((0, 0), (n, n)).copy_from(&orbit.frame_twist);
    ad.view_mut((n, n), (n, n)).copy_from(&orbit.frame_twist);
    ad
}

/// Analytic one-parameter family `h ↦ T(h)` around a reference energy.
#[derive(Clone)]
pub struct OrbitFamily {
    pub t_of_h: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Largest admissible half-width for finite differences around `h`.
    pub dh_max: f64,
}

/// Richardson-extrapolated central-difference estimate of `T'(h₀)`.
pub fn estimate_tprime(family: &OrbitFamily, h0: f64, dh: f64) -> Result<f64> {
    if !(dh > 0.0) || dh > family.dh_max {
        return Err(Error::FamilyUnavailable);
    }
    let f = &family.t_of_h;
    let d = |step: f64| (f(h0 + step) - f(h0 - step)) / (2.0 * step);
    let d1 = d(dh);
    let d2 = d(0.5 * dh);
    Ok((4.0 * d2 - d1) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use core::f64::consts::PI;

    #[test]
    fn hamiltonian_coefficient_free_particle() {
        let orbit = presets::flat_torus(0.5).orbit;
        let b = hamiltonian_coefficient(&orbit, 0.3).unwrap();
        // P = I, Q = 0, R = 0, T = 1: B = [[T·I, 0], [0, 0]].
        let mut expect = DMatrix::zeros(4, 4);
        expect[(0, 0)] = orbit.period;
        expect[(1, 1)] = orbit.period;
        assert!(linalg::inf_norm(&(b.matrix() - expect)) < 1e-12);
    }

    #[test]
    fn hamiltonian_coefficient_harmonic_scalar() {
        // n=1, P=1, Q=0, R=-1, T=2π → B = diag(2π, 2π).
        let t_per = 2.0 * PI;
        let grid = vec![0.0, 0.5, 1.0];
        let orbit = OrbitData {
            n: 1,
            period: t_per,
            energy: 0.0,
            grid: grid.clone(),
            p: vec![DMatrix::identity(1, 1); 3],
            q: vec![DMatrix::zeros(1, 1); 3],
            r: vec![-DMatrix::identity(1, 1); 3],
            l_q: vec![DVector::zeros(1); 3],
            xprime: vec![DVector::from_element(1, 1.0); 3],
            frame_twist: DMatrix::identity(1, 1),
            tprime_h: None,
        };
        let b = hamiltonian_coefficient(&orbit, 0.25).unwrap();
        let expect = DMatrix::from_diagonal(&nalgebra::dvector![t_per, t_per]);
        assert!(linalg::inf_norm(&(b.matrix() - expect)) < 1e-12);
    }

    #[test]
    fn b_matches_legendre_hessian_for_random_data() {
        // B must equal the Hessian of H(y, u) = (T/2)⟨(y - Qu), P⁻¹(y - Qu)⟩
        // − (T/2)⟨Ru, u⟩, the Legendre transform of the quadratic density.
        let n = 2;
        let p = DMatrix::from_row_slice(n, n, &[1.3, 0.2, 0.2, 0.9]);
        let q = DMatrix::from_row_slice(n, n, &[0.4, -0.7, 0.1, 0.3]);
        let r = DMatrix::from_row_slice(n, n, &[0.5, -0.1, -0.1, -0.8]);
        let t_per = 1.7;
        let grid = vec![0.0, 1.0];
        let orbit = OrbitData {
            n,
            period: t_per,
            energy: 0.0,
            grid,
            p: vec![p.clone(); 2],
            q: vec![q.clone(); 2],
            r: vec![r.clone(); 2],
            l_q: vec![DVector::zeros(n); 2],
            xprime: vec![DVector::from_column_slice(&[1.0, 0.0]); 2],
            frame_twist: DMatrix::identity(n, n),
            tprime_h: None,
        };
        let b = hamiltonian_coefficient(&orbit, 0.5).unwrap();
        assert!(
            linalg::inf_norm(&(b.matrix() - b.matrix().transpose())) < 1e-12,
            "B must be symmetric"
        );
        let p_inv = p.clone().try_inverse().unwrap();
        let ham = |z: &DVector<f64>| -> f64 {
            let y = z.rows(0, n).into_owned();
            let u = z.rows(n, n).into_owned();
            let w = &y - &q * &u;
            0.5 * t_per * (&p_inv * &w).dot(&w) - 0.5 * t_per * (&r * &u).dot(&u)
        };
        // Finite-difference Hessian.
        let h = 1e-4;
        let mut hess = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..2 * n {
            for j in 0..2 * n {
                let mut zpp = DVector::zeros(2 * n);
                zpp[i] += h;
                zpp[j] += h;
                let mut zpm = DVector::zeros(2 * n);
                zpm[i] += h;
                zpm[j] -= h;
                let mut zmp = DVector::zeros(2 * n);
                zmp[i] -= h;
                zmp[j] += h;
                let mut zmm = DVector::zeros(2 * n);
                zmm[i] -= h;
                zmm[j] -= h;
                hess[(i, j)] =
                    (ham(&zpp) - ham(&zpm) - ham(&zmp) + ham(&zmm)) / (4.0 * h * h);
            }
        }
        assert!(linalg::inf_norm(&(b.matrix() - hess)) < 1e-6);
    }

    #[test]
    fn fundamental_solution_closed_forms() {
        // Free particle: ψ(t) = [[I, 0], [tT·I, I]].
        let scenario = presets::flat_torus(0.5);
        let psi = fundamental_solution(&scenario.orbit, 256).unwrap();
        let t_per = scenario.orbit.period;
        let end = psi.end();
        let mut expect = DMatrix::identity(4, 4);
        expect[(2, 0)] = t_per;
        expect[(3, 1)] = t_per;
        assert!(linalg::inf_norm(&(end - expect)) < 1e-10);
        assert!(psi.symplecticity_residual < 1e-12);

        // Harmonic scalar system: B = diag(T, T) constant, ψ(t) = e^{tT·J}.
        let t_per = 2.0 * PI;
        let orbit = OrbitData {
            n: 1,
            period: t_per,
            energy: 0.0,
            grid: vec![0.0, 0.5, 1.0],
            p: vec![DMatrix::identity(1, 1); 3],
            q: vec![DMatrix::zeros(1, 1); 3],
            r: vec![-DMatrix::identity(1, 1); 3],
            l_q: vec![DVector::zeros(1); 3],
            xprime: vec![DVector::from_element(1, 1.0); 3],
            frame_twist: DMatrix::identity(1, 1),
            tprime_h: None,
        };
        let psi = fundamental_solution(&orbit, 4096).unwrap();
        let expect = crate::symplectic::SymplecticStructure::standard(1).rotation(0.5 * t_per);
        assert!(linalg::inf_norm(&(psi.eval(0.5) - expect)) < 1e-5);
        assert!(psi.symplecticity_residual < 1e-12);
    }

    #[test]
    fn zero_generator_keeps_identity() {
        // The integrator step with B ≡ 0 leaves ψ at the identity.
        let j = crate::symplectic::std_j(2);
        let zero = DMatrix::<f64>::zeros(4, 4);
        let mut psi = DMatrix::<f64>::identity(4, 4);
        for _ in 0..64 {
            psi = midpoint_step(&j, &zero, 1.0 / 64.0, &psi).unwrap();
        }
        assert!(linalg::inf_norm(&(psi - DMatrix::<f64>::identity(4, 4))) == 0.0);
    }

    #[test]
    fn geometrical_index_off_cycle_constant_generator() {
        // n = 1 with twist A = -1: the whole path A_dψ(t) stays off the
        // singular cycle (det(A_dψ(t) - I) = 4 + t·stuff > 0) and no
        // crossing happens, so the index vanishes.
        let k = 9;
        let grid: Vec<f64> = (0..k).map(|i| i as f64 / (k - 1) as f64).collect();
        let orbit = OrbitData {
            n: 1,
            period: 1.3,
            energy: 0.0,
            grid,
            p: vec![DMatrix::identity(1, 1); k],
            q: vec![DMatrix::zeros(1, 1); k],
            r: vec![DMatrix::zeros(1, 1); k],
            l_q: vec![DVector::zeros(1); k],
            xprime: vec![DVector::zeros(1); k],
            frame_twist: -DMatrix::<f64>::identity(1, 1),
            tprime_h: None,
        };
        let psi = fundamental_solution(&orbit, 128).unwrap();
        let (igeo, monodromy) =
            geometrical_index(&orbit, &psi, &ClmOptions::default()).unwrap();
        assert_eq!(igeo, 0);
        let det = linalg::det(
            &(monodromy.matrix() - DMatrix::<f64>::identity(2, 2)),
        );
        assert!(det > 0.0, "monodromy must sit off the singular cycle, det {det}");
    }

    #[test]
    fn kappa_classification_cases() {
        let pos = presets::flat_torus(0.5).orbit;
        assert_eq!(kappa_classify(&pos).1, NullClass::LPositive);
        assert_eq!(kappa_classify(&pos.negated()).1, NullClass::LNegative);

        // P = diag(1, -1), x' = (cos 2πt, sin 2πt): κ = cos 4πt changes sign.
        let k = 65;
        let grid: Vec<f64> = (0..k).map(|i| i as f64 / (k - 1) as f64).collect();
        let orbit = OrbitData {
            n: 2,
            period: 1.0,
            energy: 0.0,
            grid: grid.clone(),
            p: vec![DMatrix::from_diagonal(&nalgebra::dvector![1.0, -1.0]); k],
            q: vec![DMatrix::zeros(2, 2); k],
            r: vec![DMatrix::zeros(2, 2); k],
            l_q: vec![DVector::zeros(2); k],
            xprime: grid
                .iter()
                .map(|&t| {
                    DVector::from_column_slice(&[(2.0 * PI * t).cos(), (2.0 * PI * t).sin()])
                })
                .collect(),
            frame_twist: DMatrix::identity(2, 2),
            tprime_h: None,
        };
        let (kappa, class) = kappa_classify(&orbit);
        assert_eq!(class, NullClass::NotNonNull);
        assert!((kappa[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn estimate_tprime_on_presets() {
        // Kepler: T(h) = 2π(−2h)^{-3/2}, T'(h) = 6π(−2h)^{-5/2}.
        let kepler = presets::kepler_circular(-0.5);
        let family = kepler.family.unwrap();
        let est = estimate_tprime(&family, -0.5, 1e-3).unwrap();
        let exact = 6.0 * PI;
        assert!(
            ((est - exact) / exact).abs() < 1e-6,
            "estimate {est} vs exact {exact}"
        );
        // Flat torus: T'(h) < 0.
        let torus = presets::flat_torus(0.5);
        let family = torus.family.unwrap();
        let est = estimate_tprime(&family, 0.5, 1e-3).unwrap();
        assert!(est < 0.0);
        // Harmonic loop is isochronous.
        let harm = presets::harmonic_loop(1.0);
        let family = harm.family.unwrap();
        let est = estimate_tprime(&family, 1.0, 1e-3).unwrap();
        assert!(est.abs() < 1e-10);
    }

    #[test]
    fn el_residuals_on_presets() {
        for scenario in [
            presets::flat_torus(0.5),
            presets::circle_free_particle(0.5),
            presets::harmonic_loop(1.0),
            presets::kepler_circular(-0.5),
        ] {
            let (eq, en) =
                euler_lagrange_residual(&scenario.orbit, scenario.callbacks.as_ref()).unwrap();
            assert!(eq < 1e-10, "{}: eq residual {eq}", scenario.name);
            assert!(en < 1e-10, "{}: energy residual {en}", scenario.name);
        }
    }

    #[test]
    fn perturbed_kepler_is_flagged() {
        let mut scenario = presets::kepler_circular(-0.5);
        // Breaking the radius by 1% must blow up the equation residual.
        for v in scenario.orbit.l_q.iter_mut() {
            *v *= 1.01;
        }
        let (eq, _) =
            euler_lagrange_residual(&scenario.orbit, scenario.callbacks.as_ref()).unwrap();
        assert!(eq > 1e-3, "eq residual {eq}");
    }

    #[test]
    fn monodromy_has_eigenvalue_one() {
        for scenario in [
            presets::flat_torus(0.5),
            presets::kepler_circular(-0.5),
            presets::harmonic_loop(1.0),
        ] {
            let psi = fundamental_solution(&scenario.orbit, 512).unwrap();
            let (_, monodromy) =
                geometrical_index(&scenario.orbit, &psi, &ClmOptions::default()).unwrap();
            let m = monodromy.matrix();
            let ker = linalg::nullspace_abs(
                &(m - DMatrix::<f64>::identity(m.nrows(), m.ncols())),
                1e-6 * linalg::inf_norm(m).max(1.0),
            );
            assert!(ker.ncols() >= 1, "{}", scenario.name);
        }
    }

    #[test]
    fn geometrical_index_presets() {
        let opts = ClmOptions::default();
        // Free particle on the circle: igeo = 1.
        let circle = presets::circle_free_particle(0.5);
        let psi = fundamental_solution(&circle.orbit, 512).unwrap();
        let (igeo, _) = geometrical_index(&circle.orbit, &psi, &opts).unwrap();
        assert_eq!(igeo, 1);
        // Flat torus: igeo = 2.
        let torus = presets::flat_torus(0.5);
        let psi = fundamental_solution(&torus.orbit, 512).unwrap();
        let (igeo, _) = geometrical_index(&torus.orbit, &psi, &opts).unwrap();
        assert_eq!(igeo, 2);
    }

    #[test]
    fn index_stable_under_refinement() {
        let opts = ClmOptions::default();
        let torus = presets::flat_torus(0.5);
        let mut values = Vec::new();
        for steps in [512usize, 1024, 2048] {
            let psi = fundamental_solution(&torus.orbit, steps).unwrap();
            let (igeo, _) = geometrical_index(&torus.orbit, &psi, &opts).unwrap();
            values.push(igeo);
        }
        assert!(values.windows(2).all(|w| w[0] == w[1]), "{values:?}");
    }
}
