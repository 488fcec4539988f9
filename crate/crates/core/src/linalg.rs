//! Dense linear-algebra helpers used throughout the crate.
//!
//! Everything here is a thin layer over nalgebra decompositions with the
//! rank and kernel conventions fixed once: singular values are compared
//! against `rel_tol * sigma_max`, eigenvalues against `tol * spectral
//! radius`, so callers never reimplement thresholds.

use alloc::{vec, vec::Vec};
use nalgebra::{DMatrix, DVector};

#[allow(unused_imports)]
use nalgebra::{ComplexField as _, RealField as _};

/// Largest absolute entry.
pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()))
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending.
pub fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let sym = 0.5 * (m + m.transpose());
    let se = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].partial_cmp(&se.eigenvalues[j]).unwrap());
    let vals = DVector::from_fn(n, |i, _| se.eigenvalues[order[i]]);
    let mut vecs = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &se.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    sym_eigen(m).0
}

/// Inertia of a symmetric matrix: `(n_minus, n_zero, n_plus)` with
/// eigenvalues in `[-zero_tol, zero_tol]` counted as zero.
pub fn morse_counts(m: &DMatrix<f64>, zero_tol: f64) -> (usize, usize, usize) {
    let vals = sym_eigenvalues(m);
    let mut neg = 0;
    let mut zero = 0;
    let mut pos = 0;
    for &v in vals.iter() {
        if v < -zero_tol {
            neg += 1;
        } else if v > zero_tol {
            pos += 1;
        } else {
            zero += 1;
        }
    }
    (neg, zero, pos)
}

/// Inertia with the zero band scaled by the spectral radius,
/// `zero_tol = rel_tol * max(1, ρ(m))`.
pub fn morse_counts_rel(m: &DMatrix<f64>, rel_tol: f64) -> (usize, usize, usize) {
    let vals = sym_eigenvalues(m);
    let scale = vals.iter().fold(1.0f64, |a, &v| a.max(v.abs()));
    morse_counts(m, rel_tol * scale)
}

/// Morse index `m⁻` at the default relative zero band.
pub fn morse_index(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    morse_counts_rel(m, rel_tol).0
}

/// Determinant through LU.
pub fn det(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    m.clone().lu().determinant()
}

fn svd_of(m: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    // Pad with zero rows when wide so the thin SVD still carries a full V.
    let (r, c) = m.shape();
    let work = if r < c {
        let mut p = DMatrix::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = work.svd(true, true);
    (svd.u.unwrap(), svd.singular_values, svd.v_t.unwrap())
}

/// Rank with singular values below `rel_tol * sigma_max` treated as zero.
pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let (_, sv, _) = svd_of(m);
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Orthonormal basis of the null space with an absolute singular-value
/// threshold; the right choice when the whole matrix may be near zero and
/// the caller knows the scale of its inputs.
pub fn nullspace_abs(m: &DMatrix<f64>, abs_tol: f64) -> DMatrix<f64> {
    let c = m.ncols();
    if c == 0 {
        return DMatrix::zeros(m.nrows().max(1), 0);
    }
    if m.nrows() == 0 {
        return DMatrix::identity(c, c);
    }
    let (_, sv, v_t) = svd_of(m);
    let mut cols: Vec<usize> = Vec::new();
    for i in 0..c {
        let s = if i < sv.len() { sv[i] } else { 0.0 };
        if s <= abs_tol {
            cols.push(i);
        }
    }
    let mut out = DMatrix::zeros(c, cols.len());
    for (k, &i) in cols.iter().enumerate() {
        out.set_column(k, &v_t.row(i).transpose());
    }
    out
}

/// Orthonormal basis of the null space (columns).
pub fn nullspace(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let c = m.ncols();
    if c == 0 {
        return DMatrix::zeros(m.nrows().max(1), 0);
    }
    if m.nrows() == 0 {
        return DMatrix::identity(c, c);
    }
    let (_, sv, v_t) = svd_of(m);
    let smax = sv.max().max(f64::MIN_POSITIVE);
    let mut cols: Vec<usize> = Vec::new();
    for i in 0..c {
        let s = if i < sv.len() { sv[i] } else { 0.0 };
        if s <= rel_tol * smax {
            cols.push(i);
        }
    }
    let mut out = DMatrix::zeros(c, cols.len());
    for (k, &i) in cols.iter().enumerate() {
        out.set_column(k, &v_t.row(i).transpose());
    }
    out
}

/// Orthonormal basis of the column span (rank-revealing).
pub fn column_space(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let (u, sv, _) = svd_of(m);
    let smax = sv.max().max(f64::MIN_POSITIVE);
    let r = sv.iter().filter(|&&s| s > rel_tol * smax).count();
    u.view((0, 0), (m.nrows(), r)).into_owned()
}

/// Smallest singular value.
pub fn smin(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let k = m.nrows().min(m.ncols());
    let mut out = f64::INFINITY;
    for i in 0..k.min(sv.len()) {
        out = out.min(sv[i]);
    }
    if m.ncols() > m.nrows() {
        0.0
    } else {
        out
    }
}

/// Dimension of the intersection of two column spans given orthonormal
/// frames `a` (d×p) and `b` (d×q): `p + q − rank([a b])`.
pub fn intersection_dim(a: &DMatrix<f64>, b: &DMatrix<f64>, rel_tol: f64) -> usize {
    let (p, q) = (a.ncols(), b.ncols());
    if p == 0 || q == 0 {
        return 0;
    }
    let mut stacked = DMatrix::zeros(a.nrows(), p + q);
    stacked.view_mut((0, 0), (a.nrows(), p)).copy_from(a);
    stacked.view_mut((0, p), (b.nrows(), q)).copy_from(b);
    p + q - rank(&stacked, rel_tol)
}

/// Orthonormal basis of `span(a) ∩ span(b)` for orthonormal frames.
///
/// Solves `a x = b y` through the null space of `[a | -b]`.
pub fn intersection_basis(a: &DMatrix<f64>, b: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (p, q) = (a.ncols(), b.ncols());
    if p == 0 || q == 0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    let mut m = DMatrix::zeros(a.nrows(), p + q);
    m.view_mut((0, 0), (a.nrows(), p)).copy_from(a);
    m.view_mut((0, p), (b.nrows(), q)).copy_from(&(-b));
    let ns = nullspace(&m, rel_tol);
    if ns.ncols() == 0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    let xs = ns.view((0, 0), (p, ns.ncols())).into_owned();
    column_space(&(a * xs), rel_tol)
}

/// `basisᵀ S basis`, the restriction of a symmetric form to a subspace.
pub fn restrict_sym(s: &DMatrix<f64>, basis: &DMatrix<f64>) -> DMatrix<f64> {
    let r = basis.transpose() * s * basis;
    0.5 * (&r + r.transpose())
}

/// Solves `m x = rhs` by LU; `None` when the factorization fails.
pub fn solve(m: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    m.clone().lu().solve(rhs)
}

/// Solves `m x = rhs` for a single right-hand side.
pub fn solve_vec(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    m.clone().lu().solve(rhs)
}

/// Natural cubic spline through `(x_i, y_i)` with strictly increasing knots.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m2: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: &[f64], y: &[f64]) -> CubicSpline {
        assert_eq!(x.len(), y.len());
        assert!(x.len() >= 2, "spline needs at least two samples");
        let n = x.len();
        // Tridiagonal solve for natural boundary conditions.
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        b[0] = 1.0;
        b[n - 1] = 1.0;
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            a[i] = h0 / 6.0;
            b[i] = (h0 + h1) / 3.0;
            c[i] = h1 / 6.0;
            d[i] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
        }
        // Thomas algorithm.
        let mut cp = vec![0.0; n];
        let mut dp = vec![0.0; n];
        cp[0] = c[0] / b[0];
        dp[0] = d[0] / b[0];
        for i in 1..n {
            let m = b[i] - a[i] * cp[i - 1];
            cp[i] = c[i] / m;
            dp[i] = (d[i] - a[i] * dp[i - 1]) / m;
        }
        let mut m2 = vec![0.0; n];
        m2[n - 1] = dp[n - 1];
        for i in (0..n - 1).rev() {
            m2[i] = dp[i] - cp[i] * m2[i + 1];
        }
        CubicSpline { x: x.to_vec(), y: y.to_vec(), m2 }
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.x.len();
        if t <= self.x[0] {
            return 0;
        }
        if t >= self.x[n - 1] {
            return n - 2;
        }
        match self.x.partition_point(|&xi| xi <= t) {
            0 => 0,
            k => (k - 1).min(n - 2),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let u = (self.x[i + 1] - t) / h;
        let v = (t - self.x[i]) / h;
        u * self.y[i]
            + v * self.y[i + 1]
            + ((u * u * u - u) * self.m2[i] + (v * v * v - v) * self.m2[i + 1]) * h * h / 6.0
    }

    pub fn deriv(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let u = (self.x[i + 1] - t) / h;
        let v = (t - self.x[i]) / h;
        (self.y[i + 1] - self.y[i]) / h
            + ((3.0 * v * v - 1.0) * self.m2[i + 1] - (3.0 * u * u - 1.0) * self.m2[i]) * h / 6.0
    }
}

/// Richardson-extrapolated central difference of a scalar-matrix path.
pub fn central_derivative<F>(f: F, t: f64, h: f64) -> DMatrix<f64>
where
    F: Fn(f64) -> DMatrix<f64>,
{
    let d1 = (f(t + h) - f(t - h)) / (2.0 * h);
    let d2 = (f(t + 0.5 * h) - f(t - 0.5 * h)) / h;
    (4.0 * d2 - d1) / 3.0
}

/// `|z|` for complex scalars, usable without `std` (num-complex gates
/// its own `norm` behind `std`).
pub fn cabs(z: nalgebra::Complex<f64>) -> f64 {
    z.re.hypot(z.im)
}
