//! Symplectic linear-algebra substrate.
//!
//! Two symplectic structures appear in the index computations: the standard
//! one `(ℝ²ⁿ, ω)` with `ω(u,v) = ⟨Ju, v⟩`, `J = [[0, -I], [I, 0]]`, and the
//! product `(ℝ²ⁿ × ℝ²ⁿ, -ω × ω)` where graphs of symplectic maps become
//! Lagrangian subspaces. Both are carried explicitly so that rotations
//! `e^{θJ}` and isotropy tests always use the right form.

use alloc::format;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

#[allow(unused_imports)]
use nalgebra::{ComplexField as _, RealField as _};

use crate::error::{Error, Result};
use crate::linalg;

/// Ambient symplectic space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymplecticStructure {
    /// `(ℝ²ⁿ, ω)`, ambient dimension `2n`.
    Standard { half_dim: usize },
    /// `(ℝ²ⁿ × ℝ²ⁿ, -ω × ω)`, ambient dimension `4n`. Lagrangian
    /// subspaces have rank `2n`.
    Product { half_dim: usize },
}

impl SymplecticStructure {
    pub fn standard(n: usize) -> Self {
        SymplecticStructure::Standard { half_dim: n }
    }

    pub fn product(n: usize) -> Self {
        SymplecticStructure::Product { half_dim: n }
    }

    /// Ambient dimension of the space.
    pub fn dim(&self) -> usize {
        match *self {
            SymplecticStructure::Standard { half_dim } => 2 * half_dim,
            SymplecticStructure::Product { half_dim } => 4 * half_dim,
        }
    }

    /// Rank of a Lagrangian frame (half the ambient dimension).
    pub fn lagrangian_rank(&self) -> usize {
        self.dim() / 2
    }

    /// Matrix of the symplectic form: `ω(u,v) = ⟨J u, v⟩`.
    pub fn j_matrix(&self) -> DMatrix<f64> {
        match *self {
            SymplecticStructure::Standard { half_dim } => std_j(half_dim),
            SymplecticStructure::Product { half_dim } => {
                let j = std_j(half_dim);
                let mut out = DMatrix::zeros(4 * half_dim, 4 * half_dim);
                out.view_mut((0, 0), (2 * half_dim, 2 * half_dim)).copy_from(&(-&j));
                out.view_mut((2 * half_dim, 2 * half_dim), (2 * half_dim, 2 * half_dim))
                    .copy_from(&j);
                out
            }
        }
    }

    /// `ω(u, v)`.
    pub fn omega(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        (self.j_matrix() * u).dot(v)
    }

    /// Closed-form `e^{θJ}` for this structure's `J`.
    pub fn rotation(&self, theta: f64) -> DMatrix<f64> {
        match *self {
            SymplecticStructure::Standard { half_dim } => std_rotation(half_dim, theta),
            SymplecticStructure::Product { half_dim } => {
                // J̄ = diag(-J, J), so e^{θJ̄} = diag(e^{-θJ}, e^{θJ}).
                let m = std_rotation(half_dim, -theta);
                let p = std_rotation(half_dim, theta);
                let d = 2 * half_dim;
                let mut out = DMatrix::zeros(2 * d, 2 * d);
                out.view_mut((0, 0), (d, d)).copy_from(&m);
                out.view_mut((d, d), (d, d)).copy_from(&p);
                out
            }
        }
    }
}

/// Standard `J = [[0, -I], [I, 0]]` of size `2n`.
pub fn std_j(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = -1.0;
        j[(n + i, i)] = 1.0;
    }
    j
}

fn std_rotation(n: usize, theta: f64) -> DMatrix<f64> {
    // e^{θJ} = cos θ · I + sin θ · J in closed form.
    let (s, c) = theta.sin_cos();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(i, i)] = c;
        m[(n + i, n + i)] = c;
        m[(i, n + i)] = -s;
        m[(n + i, i)] = s;
    }
    m
}

/// Real symmetric matrix; symmetrized `(S + Sᵀ)/2` on construction.
///
/// Quadratic forms only see the symmetric part, so inputs are symmetrized,
/// but asymmetry beyond `1e-8` (relative) is rejected as a data error.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    mat: DMatrix<f64>,
}

impl SymmetricMatrix {
    pub const ASYMMETRY_TOL: f64 = 1e-8;

    pub fn new(m: DMatrix<f64>) -> Result<SymmetricMatrix> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                detail: format!("{}x{} matrix is not square", m.nrows(), m.ncols()),
            });
        }
        let asym = linalg::inf_norm(&(&m - m.transpose()));
        let scale = linalg::inf_norm(&m).max(1.0);
        if asym > Self::ASYMMETRY_TOL * scale {
            return Err(Error::AsymmetricInput { residual: asym });
        }
        Ok(SymmetricMatrix { mat: 0.5 * (&m + m.transpose()) })
    }

    /// Construction that trusts the caller (used for matrices that are
    /// symmetric by construction).
    pub fn from_symmetric_unchecked(m: DMatrix<f64>) -> SymmetricMatrix {
        SymmetricMatrix { mat: 0.5 * (&m + m.transpose()) }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.mat
    }
}

/// Component classification of `Sp(2n, ℝ)*` by the sign of `det(M - I)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpComponent {
    /// `det(M - I) > det_tol`.
    Plus,
    /// `|det(M - I)| ≤ det_tol`.
    Zero,
    /// `det(M - I) < -det_tol`.
    Minus,
}

/// Validated element of `Sp(2n, ℝ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    half_dim: usize,
    mat: DMatrix<f64>,
}

impl SymplecticMatrix {
    pub const DEFAULT_TOL: f64 = 1e-10;

    pub fn half_dim(&self) -> usize {
        self.half_dim
    }

    pub fn dim(&self) -> usize {
        2 * self.half_dim
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.mat
    }

    pub fn identity(n: usize) -> SymplecticMatrix {
        SymplecticMatrix { half_dim: n, mat: DMatrix::identity(2 * n, 2 * n) }
    }
}

/// Residual `‖MᵀJM − J‖∞` of a square even-dimensional matrix.
pub fn symplectic_residual(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows() / 2;
    let j = std_j(n);
    linalg::inf_norm(&(m.transpose() * &j * m - &j))
}

/// Admits `m` into `Sp(2n, ℝ)` iff `‖MᵀJM − J‖∞ ≤ tol`.
pub fn validate_symplectic(m: DMatrix<f64>, tol: f64) -> Result<SymplecticMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            detail: format!("{}x{} matrix is not square", m.nrows(), m.ncols()),
        });
    }
    if !m.nrows().is_multiple_of(2) {
        return Err(Error::OddDimension { dim: m.nrows() });
    }
    let residual = symplectic_residual(&m);
    if residual > tol {
        return Err(Error::NotSymplectic { residual });
    }
    Ok(SymplecticMatrix { half_dim: m.nrows() / 2, mat: m })
}

/// Inertia `(n_plus, n_zero, n_minus)` of a symmetric matrix, counting
/// eigenvalues with `|λ| ≤ zero_tol` as zero. The Morse index is
/// `n_minus`, the co-index `n_plus` and the signature their difference.
pub fn signature(s: &SymmetricMatrix, zero_tol: f64) -> (usize, usize, usize) {
    let (neg, zero, pos) = linalg::morse_counts(s.matrix(), zero_tol);
    (pos, zero, neg)
}

/// Classifies `M` by the sign of `det(M - I)` with a dead band `det_tol`
/// scaled by `max(1, ‖M‖∞)^{2n}`.
pub fn sp_component(m: &SymplecticMatrix, det_tol: f64) -> SpComponent {
    let d = linalg::det(&(m.matrix() - DMatrix::<f64>::identity(m.dim(), m.dim())));
    let scale = linalg::inf_norm(m.matrix()).max(1.0).powi(m.dim() as i32);
    let band = det_tol * scale;
    if d > band {
        SpComponent::Plus
    } else if d < -band {
        SpComponent::Minus
    } else {
        SpComponent::Zero
    }
}

/// Lagrangian subspace handed around as an orthonormal frame.
#[derive(Debug, Clone)]
pub struct LagrangianSubspace {
    structure: SymplecticStructure,
    /// Orthonormalized frame, `dim × lagrangian_rank`.
    frame: DMatrix<f64>,
}

impl LagrangianSubspace {
    pub const ISO_TOL: f64 = 1e-9;
    pub const RANK_TOL: f64 = 1e-9;

    /// Validates isotropy and rank of `frame` and stores an orthonormal
    /// basis of its span.
    pub fn new(structure: SymplecticStructure, frame: DMatrix<f64>) -> Result<LagrangianSubspace> {
        let k = structure.lagrangian_rank();
        if frame.nrows() != structure.dim() || frame.ncols() != k {
            return Err(Error::DimensionMismatch {
                detail: format!(
                    "frame is {}x{}, expected {}x{}",
                    frame.nrows(),
                    frame.ncols(),
                    structure.dim(),
                    k
                ),
            });
        }
        let rank = linalg::rank(&frame, Self::RANK_TOL);
        if rank != k {
            return Err(Error::RankDeficientFrame { rank, expected: k });
        }
        let ortho = linalg::column_space(&frame, Self::RANK_TOL);
        let iso = linalg::inf_norm(&(ortho.transpose() * structure.j_matrix() * &ortho));
        if iso > Self::ISO_TOL {
            return Err(Error::NotIsotropic { residual: iso });
        }
        Ok(LagrangianSubspace { structure, frame: ortho })
    }

    pub fn structure(&self) -> SymplecticStructure {
        self.structure
    }

    /// Orthonormal frame of the subspace.
    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    pub fn rank(&self) -> usize {
        self.frame.ncols()
    }

    /// Horizontal axis `span{e_1, …, e_n}` of the standard space.
    pub fn horizontal(n: usize) -> LagrangianSubspace {
        let mut f = DMatrix::zeros(2 * n, n);
        for i in 0..n {
            f[(i, i)] = 1.0;
        }
        LagrangianSubspace { structure: SymplecticStructure::standard(n), frame: f }
    }

    /// Diagonal `Δ = Gr(I)` of the product space over `ℝ²ⁿ`.
    pub fn diagonal(n: usize) -> LagrangianSubspace {
        let d = 2 * n;
        let mut f = DMatrix::zeros(2 * d, d);
        let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
        for i in 0..d {
            f[(i, i)] = inv_sqrt2;
            f[(d + i, i)] = inv_sqrt2;
        }
        LagrangianSubspace { structure: SymplecticStructure::product(n), frame: f }
    }

    /// Dimension of the intersection with another Lagrangian subspace.
    pub fn intersection_dim(&self, other: &LagrangianSubspace, rel_tol: f64) -> usize {
        linalg::intersection_dim(&self.frame, &other.frame, rel_tol)
    }
}

/// Graph `Gr(M) = {(x, Mx)}` as a Lagrangian subspace of the product
/// space `(ℝ²ⁿ × ℝ²ⁿ, -ω × ω)`.
pub fn graph_lagrangian(m: &SymplecticMatrix) -> LagrangianSubspace {
    graph_frame_lagrangian(m.matrix())
}

/// Same as [`graph_lagrangian`] for a raw matrix already known symplectic.
pub(crate) fn graph_frame_lagrangian(m: &DMatrix<f64>) -> LagrangianSubspace {
    let d = m.nrows();
    let mut f = DMatrix::zeros(2 * d, d);
    f.view_mut((0, 0), (d, d)).copy_from(&DMatrix::identity(d, d));
    f.view_mut((d, 0), (d, d)).copy_from(m);
    let ortho = linalg::column_space(&f, 1e-13);
    LagrangianSubspace { structure: SymplecticStructure::product(d / 2), frame: ortho }
}

/// Left-multiplication by `e^{θJ}` of the ambient structure.
pub trait Rotate {
    fn rotate(&self, theta: f64) -> Self;
}

impl Rotate for SymplecticMatrix {
    fn rotate(&self, theta: f64) -> SymplecticMatrix {
        let rot = SymplecticStructure::standard(self.half_dim).rotation(theta);
        SymplecticMatrix { half_dim: self.half_dim, mat: rot * &self.mat }
    }
}

impl Rotate for LagrangianSubspace {
    fn rotate(&self, theta: f64) -> LagrangianSubspace {
        let rot = self.structure.rotation(theta);
        LagrangianSubspace { structure: self.structure, frame: rot * &self.frame }
    }
}

/// Symplectic Gram–Schmidt: orthonormal-ish symplectic basis
/// `(c_1..c_k, d_1..d_k)` with `ω(c_i, d_j) = δ_ij` of the span of the
/// given columns (which must be a symplectic subspace of even dimension).
pub fn symplectic_basis(
    structure: &SymplecticStructure,
    span: &DMatrix<f64>,
) -> Result<(Vec<DVector<f64>>, Vec<DVector<f64>>)> {
    let j = structure.j_matrix();
    let mut pool: Vec<DVector<f64>> =
        (0..span.ncols()).map(|i| span.column(i).into_owned()).collect();
    let k = span.ncols() / 2;
    let mut cs: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut ds: Vec<DVector<f64>> = Vec::with_capacity(k);
    for _ in 0..k {
        // Pick the largest remaining vector as c, then the best partner.
        pool.retain(|v| v.norm() > 1e-12);
        let ci = pool
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
            .map(|(i, _)| i)
            .ok_or(Error::DimensionMismatch { detail: "span is not symplectic".to_string() })?;
        let c = pool.remove(ci).normalize();
        let jc = &j * &c;
        let di = pool
            .iter()
            .enumerate()
            .max_by(|a, b| {
                (jc.dot(a.1).abs() / a.1.norm())
                    .partial_cmp(&(jc.dot(b.1).abs() / b.1.norm()))
                    .unwrap()
            })
            .map(|(i, _)| i)
            .ok_or(Error::DimensionMismatch { detail: "span is not symplectic".to_string() })?;
        let mut d = pool.remove(di);
        let pairing = jc.dot(&d);
        if pairing.abs() < 1e-12 {
            return Err(Error::DimensionMismatch { detail: "span is not symplectic".to_string() });
        }
        d /= pairing;
        // Reduce the remaining pool modulo the symplectic plane {c, d}.
        let jd = &j * &d;
        for v in pool.iter_mut() {
            let a = jc.dot(&*v); // ω(c, v)
            let b = jd.dot(&*v); // ω(d, v)
            // v ← v - a·d·ω(c,d)^{-1}-correction; with ω(c,d)=1:
            // component along d is ω(c,v), along c is -ω(d,v).
            *v -= &d * a;
            *v += &c * b;
        }
        cs.push(c);
        ds.push(d);
    }
    Ok((cs, ds))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shear(t: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[1.0, 0.0, t, 1.0])
    }

    #[test]
    fn accepts_identity_and_shear() {
        assert!(validate_symplectic(DMatrix::identity(4, 4), 1e-10).is_ok());
        assert!(validate_symplectic(shear(1.0), 1e-12).is_ok());
    }

    #[test]
    fn rejects_diag_2_1_with_unit_residual() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        match validate_symplectic(m, 1e-10) {
            Err(Error::NotSymplectic { residual }) => assert!((residual - 1.0).abs() < 1e-12),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn rejects_odd_dimension() {
        let m = DMatrix::identity(3, 3);
        assert!(matches!(validate_symplectic(m, 1e-10), Err(Error::OddDimension { dim: 3 })));
    }

    #[test]
    fn signature_examples() {
        let s = SymmetricMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]))
            .unwrap();
        assert_eq!(signature(&s, 1e-12), (1, 0, 1));
        let z = SymmetricMatrix::new(DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(signature(&z, 1e-12), (0, 3, 0));
        let off = SymmetricMatrix::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]))
            .unwrap();
        assert_eq!(signature(&off, 1e-12), (1, 0, 1));
    }

    #[test]
    fn sp_component_examples() {
        let id = SymplecticMatrix::identity(1);
        assert_eq!(sp_component(&id, 1e-10), SpComponent::Zero);
        let minus_i = validate_symplectic(-DMatrix::identity(2, 2), 1e-12).unwrap();
        assert_eq!(sp_component(&minus_i, 1e-10), SpComponent::Plus);
        let hyper =
            validate_symplectic(DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]), 1e-12)
                .unwrap();
        assert_eq!(sp_component(&hyper, 1e-10), SpComponent::Minus);
    }

    #[test]
    fn graph_of_identity_is_diagonal() {
        let g = graph_lagrangian(&SymplecticMatrix::identity(2));
        let delta = LagrangianSubspace::diagonal(2);
        assert_eq!(g.intersection_dim(&delta, 1e-10), 4);
    }

    #[test]
    fn graph_of_j_matches_hand_span() {
        let j = validate_symplectic(std_j(1), 1e-12).unwrap();
        let g = graph_lagrangian(&j);
        // span{(1,0,0,1), (0,1,-1,0)}
        let hand = LagrangianSubspace::new(
            SymplecticStructure::product(1),
            DMatrix::from_column_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 1.0, -1.0, 0.0]),
        )
        .unwrap();
        assert_eq!(g.intersection_dim(&hand, 1e-10), 2);
    }

    #[test]
    fn graph_isotropy_random_symplectic() {
        // Products of rotations and shears are symplectic; their graphs
        // must be isotropic in the product form.
        let m = std_rotation(2, 0.7) * embed_shear(2, 1.3) * std_rotation(2, -0.2);
        let sm = validate_symplectic(m, 1e-9).unwrap();
        let g = graph_lagrangian(&sm);
        let jbar = g.structure().j_matrix();
        let res = linalg::inf_norm(&(g.frame().transpose() * jbar * g.frame()));
        assert!(res <= 1e-12, "isotropy residual {res}");
    }

    fn embed_shear(n: usize, t: f64) -> DMatrix<f64> {
        let mut m = DMatrix::identity(2 * n, 2 * n);
        for i in 0..n {
            m[(n + i, i)] = t;
        }
        m
    }

    #[test]
    fn rotation_examples() {
        let id = SymplecticMatrix::identity(1);
        let r = id.rotate(core::f64::consts::PI);
        assert!(linalg::inf_norm(&(r.matrix() + DMatrix::identity(2, 2))) < 1e-12);
        let m = validate_symplectic(shear(0.8), 1e-12).unwrap();
        let back = m.rotate(0.37).rotate(-0.37);
        assert!(linalg::inf_norm(&(back.matrix() - m.matrix())) < 1e-12);
    }

    #[test]
    fn symplectic_det_close_to_one() {
        let m = std_rotation(2, 1.1) * embed_shear(2, -0.4);
        let sm = validate_symplectic(m, 1e-9).unwrap();
        assert!((linalg::det(sm.matrix()) - 1.0).abs() <= 10.0 * 1e-9);
    }

    #[test]
    fn symplectic_basis_of_full_space() {
        let s = SymplecticStructure::standard(2);
        let (cs, ds) = symplectic_basis(&s, &DMatrix::identity(4, 4)).unwrap();
        let j = s.j_matrix();
        for i in 0..2 {
            for k in 0..2 {
                let pair = (&j * &cs[i]).dot(&ds[k]);
                let expect = if i == k { 1.0 } else { 0.0 };
                assert!((pair - expect).abs() < 1e-10);
                assert!((&j * &cs[i]).dot(&cs[k]).abs() < 1e-10);
                assert!((&j * &ds[i]).dot(&ds[k]).abs() < 1e-10);
            }
        }
    }
}
