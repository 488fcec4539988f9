//! Intersection indices of Lagrangian and symplectic paths.
//!
//! The CLM index of a path `ℓ(t)` relative to a fixed Lagrangian `W` is
//! computed from crossing forms,
//!
//! ```text
//! ι(W, ℓ) = m⁺(Γ(a)) + Σ_{a<t<b} sgn Γ(t) − m⁻(Γ(b)),
//! ```
//!
//! where at a crossing the form `Γ = Q|_{ℓ(t)∩W}` comes from `Q(v) =
//! d/dt ω(v, w(t))` with `v + w(t) ∈ ℓ(t)` and `w(t)` in a transversal
//! complement. Paths whose crossings are not isolated or not regular are
//! counted after the rotation `e^{-εJ}ℓ(t)`, which is the definition of
//! the index; the two routes agree on regular paths.
//!
//! The Maslov-type index ι₁ of a symplectic path counts intersections of
//! `e^{-εJ}ψ(t)` with the singular cycle `{det(M - I) = 0}`, signed by
//! the co-orientation determined by `θ ↦ M e^{θJ}`.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

#[allow(unused_imports)]
use nalgebra::{ComplexField as _, RealField as _};

use crate::error::{Error, Result};
use crate::linalg;
use crate::paths::{LagrangianPath, SymplecticPath};
use crate::symplectic::{
    sp_component, LagrangianSubspace, SpComponent, SymmetricMatrix, SymplecticMatrix,
};

/// Tunables for crossing detection and regularization.
#[derive(Debug, Clone)]
pub struct ClmOptions {
    /// Initial uniform scan resolution.
    pub scan_points: usize,
    /// Bisection tolerance in `t` for crossing locations.
    pub t_tol: f64,
    /// Crossings closer than this are merged into one.
    pub merge_tol: f64,
    /// Singular values below this count towards an intersection.
    pub kernel_tol: f64,
    /// A crossing form with `min|λ| ≤ rel · max|λ|` is degenerate.
    pub form_degenerate_rel: f64,
    /// Finite-difference step for crossing forms, relative to `b - a`.
    pub fd_step_rel: f64,
    /// Cap for the regularization angle ε.
    pub eps_cap: f64,
    /// Floor below which ε search gives up.
    pub eps_floor: f64,
    /// Budget of path evaluations for one crossing scan.
    pub max_evals: usize,
}

impl Default for ClmOptions {
    fn default() -> Self {
        ClmOptions {
            scan_points: 768,
            t_tol: 1e-10,
            merge_tol: 1e-9,
            // Above the noise floor of integrator-backed paths, so that
            // a multiple crossing smeared by integration error is still
            // seen as one crossing with its full kernel.
            kernel_tol: 2e-6,
            form_degenerate_rel: 1e-6,
            fd_step_rel: 1e-5,
            eps_cap: 1e-3,
            eps_floor: 1e-12,
            max_evals: 60_000,
        }
    }
}

/// One crossing of a Lagrangian path with the reference Lagrangian.
#[derive(Debug, Clone)]
pub struct CrossingRecord {
    pub t: f64,
    pub kernel_dim: usize,
    pub crossing_form: SymmetricMatrix,
    pub regular: bool,
}

/// Smallest singular values of the stacked orthonormal frames; the number
/// below `kernel_tol` is the intersection dimension.
fn stacked_svals(frame_a: &DMatrix<f64>, frame_b: &DMatrix<f64>) -> DVector<f64> {
    let (p, q) = (frame_a.ncols(), frame_b.ncols());
    let mut m = DMatrix::zeros(frame_a.nrows(), p + q);
    m.view_mut((0, 0), (frame_a.nrows(), p)).copy_from(frame_a);
    m.view_mut((0, p), (frame_b.nrows(), q)).copy_from(frame_b);
    m.svd(false, false).singular_values
}

fn intersection_smin(path: &LagrangianPath, w: &DMatrix<f64>, t: f64) -> f64 {
    let sv = stacked_svals(&path.frame(t), w);
    sv[sv.len() - 1]
}

fn intersection_dim_at(path: &LagrangianPath, w: &DMatrix<f64>, t: f64, tol: f64) -> usize {
    let sv = stacked_svals(&path.frame(t), w);
    sv.iter().filter(|&&s| s < tol).count()
}

enum ScanOutcome {
    Isolated(Vec<f64>),
    NonIsolated,
}

/// Continuous signed crossing detector: the determinant of the stacked
/// square matrix `[F_raw(t) | G]` with column-normalized raw frames.
/// Zero exactly at intersections, and continuous in `t` because the raw
/// frames come straight from the path evaluator (no SVD gauge).
fn stacked_det(path: &LagrangianPath, w: &DMatrix<f64>, t: f64) -> f64 {
    let raw = path.raw_frame(t);
    let k = raw.ncols();
    let mut m = DMatrix::zeros(raw.nrows(), 2 * k);
    for j in 0..k {
        let c = raw.column(j);
        let norm = c.norm().max(1e-300);
        for i in 0..raw.nrows() {
            m[(i, j)] = raw[(i, j)] / norm;
        }
    }
    m.view_mut((0, k), (w.nrows(), k)).copy_from(w);
    linalg::det(&m)
}

/// Locates parameter values where the path meets the reference: sign
/// changes of the stacked determinant are bisected, even-order touch
/// points are caught as refined local minima of its modulus and kept
/// only when the singular values confirm an intersection.
fn locate_crossings(
    path: &LagrangianPath,
    w: &DMatrix<f64>,
    opts: &ClmOptions,
    include_endpoints: bool,
) -> ScanOutcome {
    let (a, b) = (path.start_time(), path.end_time());
    let span = b - a;
    let make_grid = |extra: &[f64]| -> Vec<f64> {
        let mut grid: Vec<f64> = path
            .times()
            .iter()
            .cloned()
            .step_by((path.times().len() / opts.scan_points).max(1))
            .collect();
        for i in 0..opts.scan_points {
            grid.push(a + span * i as f64 / (opts.scan_points - 1) as f64);
        }
        // Rotation regularization pushes endpoint kernels a distance
        // O(ε) into the interval, so crossings bunch near the ends at
        // scales the uniform grid cannot see; log-spaced points cover
        // every scale, and local log grids around first-pass findings
        // resolve bunched siblings.
        let log_lo = (opts.t_tol * 10.0 / span).max(1e-12).ln();
        let log_hi = 0.06f64.ln();
        for i in 0..48 {
            let f = (log_lo + (log_hi - log_lo) * i as f64 / 47.0).exp();
            grid.push(a + span * f);
            grid.push(b - span * f);
        }
        for &r in extra {
            let d = (r - a).min(b - r).max(opts.t_tol * 100.0);
            for i in 0..32 {
                let f = d * (4.0f64).powf(-4.0 + 5.0 * i as f64 / 31.0);
                grid.push((r + f).clamp(a, b));
                grid.push((r - f).clamp(a, b));
            }
        }
        grid.sort_by(|x, y| x.partial_cmp(y).unwrap());
        grid.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
        grid
    };
    // Iterate local refinement to a fixpoint (capped).
    let mut found = match scan_lagrangian_crossings(path, w, opts, include_endpoints, &make_grid(&[]))
    {
        ScanOutcome::NonIsolated => return ScanOutcome::NonIsolated,
        ScanOutcome::Isolated(ts) => ts,
    };
    for _ in 0..3 {
        let next = match scan_lagrangian_crossings(path, w, opts, include_endpoints, &make_grid(&found))
        {
            ScanOutcome::NonIsolated => return ScanOutcome::NonIsolated,
            ScanOutcome::Isolated(ts) => ts,
        };
        let stable = next.len() == found.len()
            && next.iter().zip(found.iter()).all(|(x, y)| (x - y).abs() < 1e-7 * span);
        found = next;
        if stable {
            break;
        }
    }
    ScanOutcome::Isolated(found)
}

fn scan_lagrangian_crossings(
    path: &LagrangianPath,
    w: &DMatrix<f64>,
    opts: &ClmOptions,
    include_endpoints: bool,
    grid: &[f64],
) -> ScanOutcome {
    let (a, b) = (path.start_time(), path.end_time());
    let grid = grid.to_vec();

    let vals: Vec<f64> = grid.iter().map(|&t| stacked_det(path, w, t)).collect();
    let mut evals = vals.len();
    let scale = vals.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if scale < 1e-12 {
        // The path dwells inside the singular cycle.
        return ScanOutcome::NonIsolated;
    }

    let mut found: Vec<f64> = Vec::new();
    let n = grid.len();

    // Sign changes.
    for i in 0..n - 1 {
        if vals[i] == 0.0 {
            found.push(grid[i]);
            continue;
        }
        if vals[i] * vals[i + 1] < 0.0 {
            let (mut lo, mut hi) = (grid[i], grid[i + 1]);
            let mut flo = vals[i];
            while hi - lo > opts.t_tol {
                evals += 1;
                if evals > opts.max_evals {
                    return ScanOutcome::NonIsolated;
                }
                let mid = 0.5 * (lo + hi);
                let fm = stacked_det(path, w, mid);
                if flo * fm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            found.push(0.5 * (lo + hi));
        }
    }
    if vals[n - 1] == 0.0 {
        found.push(grid[n - 1]);
    }

    // Even-order touch points: refine strict local minima of |det|.
    for i in 0..n {
        let left_ok = i == 0 || vals[i].abs() <= vals[i - 1].abs();
        let right_ok = i == n - 1 || vals[i].abs() <= vals[i + 1].abs();
        let no_sign_change = vals[i.saturating_sub(1)] * vals[(i + 1).min(n - 1)] > 0.0;
        if !(left_ok && right_ok && no_sign_change && vals[i].abs() < 0.2 * scale) {
            continue;
        }
        let (mut lo, mut hi) = (grid[i.saturating_sub(1)], grid[(i + 1).min(n - 1)]);
        let phi = 0.5 * (3.0 - 5.0f64.sqrt());
        let mut x1 = lo + phi * (hi - lo);
        let mut x2 = hi - phi * (hi - lo);
        let mut f1 = stacked_det(path, w, x1).abs();
        let mut f2 = stacked_det(path, w, x2).abs();
        while hi - lo > opts.t_tol {
            evals += 1;
            if evals > opts.max_evals {
                return ScanOutcome::NonIsolated;
            }
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = lo + phi * (hi - lo);
                f1 = stacked_det(path, w, x1).abs();
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = hi - phi * (hi - lo);
                f2 = stacked_det(path, w, x2).abs();
            }
        }
        let t = 0.5 * (lo + hi);
        if intersection_dim_at(path, w, t, opts.kernel_tol) > 0 {
            found.push(t);
        }
    }

    found.sort_by(|x, y| x.partial_cmp(y).unwrap());
    // Merge clusters adaptively: a multiple crossing can be split into
    // nearby simple zeros (by integration error, say); points are merged
    // while the intersection stays inside the kernel band between them,
    // and the cluster representative is its most singular member.
    let smin_at = |t: f64| intersection_smin(path, w, t.clamp(a, b));
    let reach_right = |t: f64| -> f64 {
        let cap = 1e-3 * (b - a);
        let mut width = (4.0 * opts.t_tol).max(opts.merge_tol);
        while width < cap && smin_at(t + width) < opts.kernel_tol {
            width *= 2.0;
        }
        t + width
    };
    let mut merged: Vec<f64> = Vec::new();
    let mut i = 0usize;
    while i < found.len() {
        let mut j = i;
        let mut reach = reach_right(found[j]);
        while j + 1 < found.len()
            && (found[j + 1] <= reach
                || found[j + 1] - found[j] <= opts.merge_tol.max(4.0 * opts.t_tol))
        {
            j += 1;
            reach = reach.max(reach_right(found[j]));
        }
        let rep = found[i..=j]
            .iter()
            .cloned()
            .min_by(|&x, &y| smin_at(x).partial_cmp(&smin_at(y)).unwrap())
            .unwrap();
        merged.push(rep);
        i = j + 1;
    }
    // Snap crossings near the ends onto the endpoints.
    let snap = ((b - a) * 1e-7).max(8.0 * opts.t_tol);
    for t in merged.iter_mut() {
        if (*t - a).abs() < snap {
            *t = a;
        }
        if (*t - b).abs() < snap {
            *t = b;
        }
    }
    merged.dedup_by(|x, y| (*x - *y).abs() <= opts.merge_tol.max(4.0 * opts.t_tol));
    // Endpoint kernels found by the robust singular-value test.
    if intersection_dim_at(path, w, a, opts.kernel_tol) > 0 && merged.first() != Some(&a) {
        merged.insert(0, a);
    }
    if intersection_dim_at(path, w, b, opts.kernel_tol) > 0 && merged.last() != Some(&b) {
        merged.push(b);
    }
    if !include_endpoints {
        merged.retain(|&t| t != a && t != b);
    }
    // Plateau probe: an isolated crossing leaves the kernel band within
    // a few percent of the interval on at least one side; a path that
    // dwells inside the singular cycle does not.
    let clears = |t: f64, dir: f64| -> bool {
        let cap = 0.05 * (b - a);
        let mut wdt = (1e3 * opts.t_tol).min(cap);
        while wdt <= cap {
            let cand = t + dir * wdt;
            if cand <= a || cand >= b {
                return true; // endpoint region, handled by endpoint terms
            }
            if intersection_smin(path, w, cand) > opts.kernel_tol {
                return true;
            }
            wdt *= 2.0;
        }
        false
    };
    for &t in &merged {
        if !(clears(t, 1.0) || clears(t, -1.0)) {
            return ScanOutcome::NonIsolated;
        }
    }
    if merged.len() > 48 {
        return ScanOutcome::NonIsolated;
    }
    ScanOutcome::Isolated(merged)
}

/// Crossing form at `t0` on the kernel `ℓ(t0) ∩ span(w)`.
///
/// The transversal complement is `J·ℓ(t0)`; `v = F(t)α − W'β` is solved
/// for each kernel vector and the derivative of `ω(v, w(t))` is taken by
/// Richardson-extrapolated differences (one-sided at the interval ends).
fn crossing_form(
    path: &LagrangianPath,
    w_frame: &DMatrix<f64>,
    t0: f64,
    opts: &ClmOptions,
) -> Result<CrossingRecord> {
    let j = path.structure().j_matrix();
    let f0 = path.frame(t0);
    let kernel = linalg::intersection_basis(&f0, w_frame, opts.kernel_tol);
    let m = kernel.ncols();
    if m == 0 {
        return Err(Error::IrregularCrossing { t: t0 });
    }
    let compl = &j * &f0; // J·ℓ(t0), transversal to ℓ(t0)
    let jk = &j * &kernel;

    let (a, b) = (path.start_time(), path.end_time());
    let h0 = (b - a) * opts.fd_step_rel;

    // b(t)_{ij} = ω(v_i, w_j(t)) with w_j(t) ∈ J·ℓ(t0) s.t. v_j + w_j(t) ∈ ℓ(t).
    let pairing_at = |t: f64| -> Result<DMatrix<f64>> {
        let ft = path.frame(t);
        let k = ft.ncols();
        let mut sys = DMatrix::zeros(ft.nrows(), 2 * k);
        sys.view_mut((0, 0), (ft.nrows(), k)).copy_from(&ft);
        sys.view_mut((0, k), (ft.nrows(), k)).copy_from(&(-&compl));
        let sol = linalg::solve(&sys, &kernel)
            .ok_or(Error::IrregularCrossing { t: t0 })?;
        let beta = sol.view((k, 0), (k, m)).into_owned();
        let wt = &compl * beta;
        Ok(jk.transpose() * wt)
    };

    let deriv = |h: f64| -> Result<DMatrix<f64>> {
        if t0 - h >= a && t0 + h <= b {
            let d1 = (pairing_at(t0 + h)? - pairing_at(t0 - h)?) / (2.0 * h);
            let d2 = (pairing_at(t0 + 0.5 * h)? - pairing_at(t0 - 0.5 * h)?) / h;
            Ok((4.0 * d2 - d1) / 3.0)
        } else {
            let s = if t0 + h <= b { h } else { -h };
            let b0 = pairing_at(t0)?;
            let d1 = (pairing_at(t0 + s)? - &b0) / s;
            let d2 = (pairing_at(t0 + 0.5 * s)? - &b0) / (0.5 * s);
            Ok(2.0 * d2 - d1)
        }
    };

    let g = deriv(h0)?;
    let gamma = SymmetricMatrix::from_symmetric_unchecked(g);
    let vals = linalg::sym_eigenvalues(gamma.matrix());
    let vmax = vals.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
    let vmin = vals.iter().fold(f64::INFINITY, |acc, &v| acc.min(v.abs()));
    let regular = vmax > 0.0 && vmin > opts.form_degenerate_rel * vmax;
    Ok(CrossingRecord { t: t0, kernel_dim: m, crossing_form: gamma, regular })
}

fn count_from_crossings(
    path: &LagrangianPath,
    w_frame: &DMatrix<f64>,
    crossings: &[f64],
    opts: &ClmOptions,
) -> Result<i64> {
    let (a, b) = (path.start_time(), path.end_time());
    let mut total = 0i64;
    for &t in crossings {
        let rec = crossing_form(path, w_frame, t, opts)?;
        if !rec.regular {
            return Err(Error::IrregularCrossing { t });
        }
        let (neg, _, pos) = linalg::morse_counts_rel(
            rec.crossing_form.matrix(),
            opts.form_degenerate_rel,
        );
        if t == a {
            total += pos as i64;
        } else if t == b {
            total -= neg as i64;
        } else {
            total += pos as i64 - neg as i64;
        }
    }
    Ok(total)
}

/// All crossings of `path` with `w`, with their forms (diagnostic surface).
pub fn clm_crossings(
    path: &LagrangianPath,
    w: &LagrangianSubspace,
    opts: &ClmOptions,
) -> Result<Vec<CrossingRecord>> {
    let wf = w.frame().clone();
    match locate_crossings(path, &wf, opts, true) {
        ScanOutcome::NonIsolated => Err(Error::IrregularCrossing { t: path.start_time() }),
        ScanOutcome::Isolated(ts) => {
            ts.iter().map(|&t| crossing_form(path, &wf, t, opts)).collect()
        }
    }
}

/// CLM intersection index of a Lagrangian path relative to `W`.
pub fn clm_index(
    path: &LagrangianPath,
    w: &LagrangianSubspace,
    opts: &ClmOptions,
) -> Result<i64> {
    if path.structure() != w.structure() {
        return Err(Error::DimensionMismatch {
            detail: "path and reference live in different symplectic spaces".to_string(),
        });
    }
    let wf = w.frame().clone();

    // Direct route: isolated, regular crossings evaluated literally.
    if let ScanOutcome::Isolated(ts) = locate_crossings(path, &wf, opts, true) {
        if let Ok(v) = count_from_crossings(path, &wf, &ts, opts) {
            return Ok(v);
        }
    }

    // Definition route: count the rotated path e^{-εJ}ℓ(t), shrinking ε
    // until two consecutive admissible values agree.
    let mut eps = opts.eps_cap;
    let mut prev: Option<(f64, i64)> = None;
    let mut attempts = 0usize;
    while eps > opts.eps_floor && attempts < 48 {
        attempts += 1;
        let rotated = path.rotated(-eps);
        let transversal = |p: &LagrangianPath| {
            intersection_dim_at(p, &wf, p.start_time(), opts.kernel_tol) == 0
                && intersection_dim_at(p, &wf, p.end_time(), opts.kernel_tol) == 0
        };
        if !transversal(&rotated) {
            eps *= 0.5;
            prev = None;
            continue;
        }
        let counted = match locate_crossings(&rotated, &wf, opts, false) {
            ScanOutcome::NonIsolated => None,
            ScanOutcome::Isolated(ts) => count_from_crossings(&rotated, &wf, &ts, opts).ok(),
        };
        match counted {
            None => {
                eps *= 0.5;
                prev = None;
            }
            Some(v) => {
                if let Some((peps, pv)) = prev {
                    if pv == v && peps != eps {
                        return Ok(v);
                    }
                }
                prev = Some((eps, v));
                eps *= 0.5;
            }
        }
    }
    if eps <= opts.eps_floor {
        return Err(Error::EpsExhausted);
    }
    Err(Error::IrregularCrossing { t: path.start_time() })
}

/// CLM index of the graph path `t ↦ Gr(ψ(t))` relative to the diagonal
/// `Δ` in the product space.
pub fn clm_graph_index(psi: &SymplecticPath, opts: &ClmOptions) -> Result<i64> {
    let graph = LagrangianPath::graph_of(psi);
    let delta = LagrangianSubspace::diagonal(psi.half_dim());
    clm_index(&graph, &delta, opts)
}

/// Options for the Maslov-type index ι₁.
#[derive(Debug, Clone)]
pub struct Iota1Options {
    pub scan_points: usize,
    pub t_tol: f64,
    pub eps_floor: f64,
    pub kernel_tol: f64,
    pub max_evals: usize,
}

impl Default for Iota1Options {
    fn default() -> Self {
        Iota1Options {
            scan_points: 1024,
            t_tol: 1e-11,
            eps_floor: 1e-12,
            kernel_tol: 1e-7,
            max_evals: 60_000,
        }
    }
}

fn det_minus_id(m: &DMatrix<f64>) -> f64 {
    linalg::det(&(m - DMatrix::<f64>::identity(m.nrows(), m.ncols())))
}

/// Roots of `f(t) = det(N(t) - I)` including touch points without sign
/// change (even-multiplicity crossings).
fn locate_det_roots(path: &SymplecticPath, opts: &Iota1Options) -> Result<Vec<f64>> {
    let (a, b) = (path.start_time(), path.end_time());
    let span = b - a;
    let base_grid = |extra: &[f64]| -> Vec<f64> {
        let mut grid: Vec<f64> = (0..opts.scan_points)
            .map(|i| a + span * i as f64 / (opts.scan_points - 1) as f64)
            .collect();
        // Log-spaced points near the ends: the rotated path's crossings
        // bunch there at scale ε.
        let log_lo = (opts.t_tol * 10.0 / span).max(1e-12).ln();
        let log_hi = 0.06f64.ln();
        for i in 0..48 {
            let f = (log_lo + (log_hi - log_lo) * i as f64 / 47.0).exp();
            grid.push(a + span * f);
            grid.push(b - span * f);
        }
        // Local log grids around previously found roots, to resolve
        // siblings bunched at the same scale.
        for &r in extra {
            let d = (r - a).min(b - r).max(opts.t_tol * 100.0);
            for i in 0..32 {
                let f = d * (4.0f64).powf(-4.0 + 5.0 * i as f64 / 31.0);
                grid.push((r + f).clamp(a, b));
                grid.push((r - f).clamp(a, b));
            }
        }
        grid.sort_by(|x, y| x.partial_cmp(y).unwrap());
        grid.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
        grid
    };
    // Iterate local refinement to a fixpoint: every found root gets a
    // log-local neighborhood in the next pass, until no new roots appear.
    let mut roots = scan_det_roots(path, &base_grid(&[]), opts)?;
    for _ in 0..3 {
        let next = scan_det_roots(path, &base_grid(&roots), opts)?;
        let stable = next.len() == roots.len()
            && next.iter().zip(roots.iter()).all(|(x, y)| (x - y).abs() < 1e-7 * span);
        roots = next;
        if stable {
            break;
        }
    }
    Ok(roots)
}

fn scan_det_roots(
    path: &SymplecticPath,
    grid: &[f64],
    opts: &Iota1Options,
) -> Result<Vec<f64>> {
    let (a, b) = (path.start_time(), path.end_time());
    let n = grid.len();
    let vals: Vec<f64> = grid.iter().map(|&t| det_minus_id(&path.eval(t))).collect();
    let scale = vals.iter().fold(0.0f64, |acc, &v| acc.max(v.abs())).max(1e-300);

    let mut roots: Vec<f64> = Vec::new();
    let mut evals = 0usize;

    // Sign changes: bisection.
    for i in 0..n - 1 {
        if vals[i] == 0.0 {
            roots.push(grid[i]);
            continue;
        }
        if vals[i] * vals[i + 1] < 0.0 {
            let (mut lo, mut hi) = (grid[i], grid[i + 1]);
            let mut flo = vals[i];
            while hi - lo > opts.t_tol {
                let mid = 0.5 * (lo + hi);
                let fm = det_minus_id(&path.eval(mid));
                evals += 1;
                if evals > opts.max_evals {
                    return Err(Error::IrregularCrossing { t: mid });
                }
                if flo * fm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
    }
    if vals[n - 1] == 0.0 {
        roots.push(grid[n - 1]);
    }

    // Dips of |f| without sign change: golden-section refinement, kept
    // only if the kernel test confirms an actual intersection. Boundary
    // intervals count too (the crossing of the rotated path can sit just
    // inside the interval).
    for i in 0..n {
        let left_ok = i == 0 || vals[i].abs() <= vals[i - 1].abs();
        let right_ok = i == n - 1 || vals[i].abs() <= vals[i + 1].abs();
        let no_sign_change = vals[i.saturating_sub(1)] * vals[(i + 1).min(n - 1)] > 0.0;
        if vals[i].abs() < 1e-3 * scale && left_ok && right_ok && no_sign_change {
            let (mut lo, mut hi) = (grid[i.saturating_sub(1)], grid[(i + 1).min(n - 1)]);
            let phi = 0.5 * (3.0 - 5.0f64.sqrt());
            let mut x1 = lo + phi * (hi - lo);
            let mut x2 = hi - phi * (hi - lo);
            let mut f1 = det_minus_id(&path.eval(x1)).abs();
            let mut f2 = det_minus_id(&path.eval(x2)).abs();
            while hi - lo > opts.t_tol {
                evals += 1;
                if evals > opts.max_evals {
                    return Err(Error::IrregularCrossing { t: lo });
                }
                if f1 < f2 {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = lo + phi * (hi - lo);
                    f1 = det_minus_id(&path.eval(x1)).abs();
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = hi - phi * (hi - lo);
                    f2 = det_minus_id(&path.eval(x2)).abs();
                }
            }
            let t = 0.5 * (lo + hi);
            let nt = path.eval(t);
            let m = &nt - DMatrix::<f64>::identity(path.dim(), path.dim());
            let ker =
                linalg::nullspace_abs(&m, opts.kernel_tol * linalg::inf_norm(&nt).max(1.0));
            if ker.ncols() > 0 {
                roots.push(t);
            }
        }
    }

    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots.dedup_by(|x, y| (*x - *y).abs() < 1e-8 * (b - a).max(1.0));
    Ok(roots)
}

/// Singular values of `N(t) - I`, ascending, together with the gap-cut
/// kernel band: near-zero values separated from the rest by the largest
/// ratio jump (a multiple crossing split by noise or by the rotation is
/// then treated as one crossing with its full kernel).
fn kernel_band_at(path: &SymplecticPath, t: f64, floor: f64) -> (f64, usize) {
    let nt = path.eval(t);
    let d = nt.nrows();
    let shifted = &nt - DMatrix::<f64>::identity(d, d);
    let mut sv: Vec<f64> = shifted.svd(false, false).singular_values.iter().cloned().collect();
    sv.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let smax = sv[d - 1].max(1e-300);
    let mut cut = 0usize;
    let mut best_ratio = 0.0f64;
    for k in 0..d - 1 {
        if sv[k] > 0.05 * smax {
            break;
        }
        // Ratios are floor-adjusted: the value at the located root itself
        // is machine zero, which must not masquerade as the group gap.
        let ratio = sv[k + 1].max(floor) / sv[k].max(floor);
        if ratio >= best_ratio {
            best_ratio = ratio;
            cut = k + 1;
        }
    }
    if cut == 0 || best_ratio < 30.0 {
        // No convincing kernel group; fall back to the floor band.
        let dim = sv.iter().filter(|&&s| s <= floor).count();
        return (floor, dim);
    }
    let band = (sv[cut - 1].max(floor) * sv[cut]).sqrt().max(floor);
    (band, cut)
}

fn iota1_count(path: &SymplecticPath, opts: &Iota1Options) -> Result<i64> {
    let (a, b) = (path.start_time(), path.end_time());
    let span = b - a;
    let roots = locate_det_roots(path, opts)?;
    let j2n = crate::symplectic::std_j(path.half_dim());
    let scale = linalg::inf_norm(path.start()).max(1.0);
    let floor = opts.kernel_tol * scale;

    // Merge root clusters: two roots belong to one crossing when the
    // matrix stays inside the kernel band between them.
    let smin_at = |t: f64| -> f64 {
        let nt = path.eval(t.clamp(a, b));
        let d = nt.nrows();
        linalg::smin(&(&nt - DMatrix::<f64>::identity(d, d)))
    };
    let mut reps: Vec<f64> = Vec::new();
    let mut i = 0usize;
    while i < roots.len() {
        let mut j = i;
        loop {
            if j + 1 >= roots.len() {
                break;
            }
            let (band_j, _) = kernel_band_at(path, roots[j], floor);
            let (band_next, _) = kernel_band_at(path, roots[j + 1], floor);
            let band = band_j.max(band_next);
            let gap_ok = (1..4).all(|k| {
                let t = roots[j] + (roots[j + 1] - roots[j]) * k as f64 / 4.0;
                smin_at(t) < band
            });
            if gap_ok || roots[j + 1] - roots[j] < 1e-8 * span {
                j += 1;
            } else {
                break;
            }
        }
        let rep = roots[i..=j]
            .iter()
            .cloned()
            .min_by(|&x, &y| smin_at(x).partial_cmp(&smin_at(y)).unwrap())
            .unwrap();
        reps.push(rep);
        i = j + 1;
    }

    let mut total = 0i64;
    for &t in &reps {
        if (t - a).abs() < 1e-8 * span || (b - t).abs() < 1e-8 * span {
            // Admissibility guarantees endpoints off the cycle.
            return Err(Error::IrregularCrossing { t });
        }
        let nt = path.eval(t);
        let (band, dim) = kernel_band_at(path, t, floor);
        if dim == 0 {
            return Err(Error::IrregularCrossing { t });
        }
        let kernel = linalg::nullspace_abs(
            &(&nt - DMatrix::<f64>::identity(nt.nrows(), nt.ncols())),
            band,
        );
        // Signed count against the co-orientation: the rotation direction
        // θ ↦ N e^{θJ} pairs positively on the kernel (ω(v, NJv) = |Jv|²
        // for v ∈ ker(N - I)), so the crossing contributes the signature
        // of Γ[v] = ω(v, N'(t)v) restricted to the kernel.
        let h = 1e-6 * span;
        let nd = linalg::central_derivative(|s| path.eval(s), t, h);
        let gamma = (&j2n * &kernel).transpose() * (&nd * &kernel);
        let gamma = 0.5 * (&gamma + gamma.transpose());
        let (neg, zero, pos) = linalg::morse_counts_rel(&gamma, 1e-6);
        if zero > 0 {
            return Err(Error::IrregularCrossing { t });
        }
        total += pos as i64 - neg as i64;
    }
    Ok(total)
}

/// Maslov-type index ι₁ of a symplectic path.
///
/// ε is auto-shrunk from `eps` until both rotated endpoints leave the
/// singular cycle; the count must agree for two consecutive ε values.
pub fn iota1_index(psi: &SymplecticPath, eps: f64, opts: &Iota1Options) -> Result<i64> {

    let mut eps = if eps > 0.0 { eps } else { 1e-3 };
    let mut prev: Option<i64> = None;
    for _ in 0..48 {
        if eps < opts.eps_floor {
            return Err(Error::EpsExhausted);
        }
        let rot = crate::symplectic::SymplecticStructure::standard(psi.half_dim())
            .rotation(-eps);
        let rotated = psi.left_multiplied(&rot);
        // Admissibility: both rotated endpoints resolvably off the
        // singular cycle. The determinant dead band is the wrong gauge
        // here: det(e^{-εJ} - I) scales like ε^{2n}, while the smallest
        // singular value of N - I scales like ε.
        let ok_end = |m: &DMatrix<f64>| {
            let d = m.nrows();
            let shifted = m - DMatrix::<f64>::identity(d, d);
            linalg::smin(&shifted) > 1e-8 * linalg::inf_norm(m).max(1.0)
        };
        if !ok_end(rotated.start()) || !ok_end(rotated.end()) {
            eps *= 0.5;
            prev = None;
            continue;
        }
        match iota1_count(&rotated, opts) {
            Ok(v) => {
                if let Some(pv) = prev {
                    if pv == v {
                        return Ok(v);
                    }
                }
                prev = Some(v);
                eps *= 0.5;
            }
            Err(_) => {
                eps *= 0.5;
                prev = None;
            }
        }
    }
    Err(Error::EpsExhausted)
}

/// Zhu's closed formula for the CLM index of a lower block-triangular
/// symplectic path relative to `W_I(V)`:
///
/// ```text
/// m⁺(M₁₁ᵀM₂₁|_{S})(b) − m⁺(M₁₁ᵀM₂₁|_{S})(a) + dim S(a) − dim S(b),
/// S(t) = {x : (x, M₁₁(t)x) ∈ V^I}.
/// ```
pub fn zhu_block_index(
    path: &SymplecticPath,
    v: &LagrangianSubspace,
    opts: &ClmOptions,
) -> Result<i64> {
    let n = path.half_dim();
    // Block-triangularity: vanishing upper-right block along the path.
    let mut residual = 0.0f64;
    let mut scale = 0.0f64;
    for m in path.samples() {
        let ur = m.view((0, n), (n, n));
        residual = residual.max(ur.iter().fold(0.0f64, |a, &x| a.max(x.abs())));
        scale = scale.max(linalg::inf_norm(m));
    }
    if residual > 1e-9 * scale.max(1.0) {
        return Err(Error::NotBlockTriangular { residual });
    }

    // V^I = {z : ω(z, v) = 0 ∀ v ∈ V}; for Lagrangian V this is V itself.
    let j = crate::symplectic::std_j(n);
    let vi = linalg::nullspace(&(v.frame().transpose() * &j), 1e-10);

    let term = |m: &DMatrix<f64>| -> (i64, usize) {
        let m11 = m.view((0, 0), (n, n)).into_owned();
        let m21 = m.view((n, 0), (n, n)).into_owned();
        // S = null of (I - P_{V^I}) [I; M11]; the projected matrix can be
        // entirely tiny, so the threshold is absolute at input scale.
        let proj = DMatrix::<f64>::identity(2 * n, 2 * n) - &vi * vi.transpose();
        let mut stacked = DMatrix::zeros(2 * n, n);
        stacked.view_mut((0, 0), (n, n)).copy_from(&DMatrix::identity(n, n));
        stacked.view_mut((n, 0), (n, n)).copy_from(&m11);
        let scale = linalg::inf_norm(&stacked).max(1.0);
        let s_basis = linalg::nullspace_abs(&(proj * stacked), opts.kernel_tol * scale);
        let g = m11.transpose() * m21;
        let g = 0.5 * (&g + g.transpose());
        let restricted = linalg::restrict_sym(&g, &s_basis);
        let (_, _, pos) = linalg::morse_counts_rel(&restricted, 1e-9);
        (pos as i64, s_basis.ncols())
    };

    let (pos_a, dim_a) = term(path.start());
    let (pos_b, dim_b) = term(path.end());
    Ok(pos_b - pos_a + dim_a as i64 - dim_b as i64)
}

/// Components of `e^{+δJ}M` and `e^{-δJ}M` for a linearly stable `M`.
///
/// For linearly stable matrices and δ small enough both land in
/// `Sp(2n, ℝ)⁺`.
pub fn stable_component_probe(
    m: &SymplecticMatrix,
    delta: f64,
    spec_tol: f64,
) -> Result<(SpComponent, SpComponent)> {
    if !is_linearly_stable(m.matrix(), spec_tol) {
        return Err(Error::NotLinearlyStable);
    }
    use crate::symplectic::Rotate;
    let plus = sp_component(&m.rotate(delta), 1e-12);
    let minus = sp_component(&m.rotate(-delta), 1e-12);
    Ok((plus, minus))
}

/// Spectrum on the unit circle within `tol` and semisimple (geometric
/// multiplicities equal algebraic on every eigenvalue cluster).
pub fn is_linearly_stable(m: &DMatrix<f64>, tol: f64) -> bool {
    let d = m.nrows();
    if d == 0 {
        return true;
    }
    let eigs = m.clone().complex_eigenvalues();
    for e in eigs.iter() {
        if (crate::linalg::cabs(*e) - 1.0).abs() > tol {
            return false;
        }
    }
    // Cluster eigenvalues and compare multiplicities.
    let mut remaining: Vec<nalgebra::Complex<f64>> = eigs.iter().cloned().collect();
    let cluster_tol = 1e-7;
    while let Some(seed) = remaining.first().cloned() {
        let mut count = 0usize;
        remaining.retain(|e| {
            if crate::linalg::cabs(e - seed) < cluster_tol {
                count += 1;
                false
            } else {
                true
            }
        });
        let geometric = if seed.im.abs() < cluster_tol {
            let shifted = m - DMatrix::<f64>::identity(d, d) * seed.re;
            d - linalg::rank(&shifted, 1e-9)
        } else {
            // Realification: ker over C of (M - λI) has twice the real
            // dimension in [[M-aI, bI], [-bI, M-aI]].
            let a = seed.re;
            let b = seed.im;
            let mut big = DMatrix::zeros(2 * d, 2 * d);
            let ma = m - DMatrix::<f64>::identity(d, d) * a;
            big.view_mut((0, 0), (d, d)).copy_from(&ma);
            big.view_mut((d, d), (d, d)).copy_from(&ma);
            big.view_mut((0, d), (d, d)).copy_from(&(DMatrix::<f64>::identity(d, d) * b));
            big.view_mut((d, 0), (d, d)).copy_from(&(DMatrix::<f64>::identity(d, d) * (-b)));
            (2 * d - linalg::rank(&big, 1e-9)) / 2
        };
        if geometric < count {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::{validate_symplectic, SymplecticStructure};
    use core::f64::consts::PI;

    fn shear_path(t0: f64) -> SymplecticPath {
        SymplecticPath::from_fn(0.0, 1.0, 65, move |t| {
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, t * t0, 1.0])
        })
        .unwrap()
    }

    #[test]
    fn special_maslov_index_vector() {
        let opts = ClmOptions::default();
        assert_eq!(clm_graph_index(&shear_path(1.0), &opts).unwrap(), 1);
        assert_eq!(clm_graph_index(&shear_path(0.0), &opts).unwrap(), 0);
        assert_eq!(clm_graph_index(&shear_path(-1.0), &opts).unwrap(), 0);
    }

    #[test]
    fn constant_transversal_path_has_zero_index() {
        let w = LagrangianSubspace::horizontal(1);
        let path = LagrangianPath::from_fn(
            SymplecticStructure::standard(1),
            vec![0.0, 1.0],
            |_t| DMatrix::from_column_slice(2, 1, &[0.0, 1.0]),
        )
        .unwrap();
        assert_eq!(clm_index(&path, &w, &ClmOptions::default()).unwrap(), 0);
    }

    #[test]
    fn rotating_line_half_turn() {
        // ℓ(t) = e^{πtJ}·W over [0,1]: crossings at both endpoints,
        // positive rotation ⇒ index 1.
        let w = LagrangianSubspace::horizontal(1);
        let path = LagrangianPath::from_fn(
            SymplecticStructure::standard(1),
            (0..33).map(|i| i as f64 / 32.0).collect(),
            |t| {
                SymplecticStructure::standard(1).rotation(PI * t)
                    * DMatrix::from_column_slice(2, 1, &[1.0, 0.0])
            },
        )
        .unwrap();
        assert_eq!(clm_index(&path, &w, &ClmOptions::default()).unwrap(), 1);
    }

    #[test]
    fn full_rotation_graph_counts_two() {
        let psi = SymplecticPath::from_fn(0.0, 1.0, 65, |t| {
            SymplecticStructure::standard(1).rotation(2.0 * PI * t)
        })
        .unwrap();
        assert_eq!(clm_graph_index(&psi, &ClmOptions::default()).unwrap(), 2);
    }

    #[test]
    fn iota1_examples() {
        let opts = Iota1Options::default();
        // Constant path in Sp⁺.
        let c = SymplecticPath::from_fn(0.0, 1.0, 5, |_| {
            -DMatrix::<f64>::identity(2, 2)
        })
        .unwrap();
        assert_eq!(iota1_index(&c, 1e-3, &opts).unwrap(), 0);
        // Full rotation: 2, matching the graph count.
        let psi = SymplecticPath::from_fn(0.0, 1.0, 65, |t| {
            SymplecticStructure::standard(1).rotation(2.0 * PI * t)
        })
        .unwrap();
        assert_eq!(iota1_index(&psi, 1e-3, &opts).unwrap(), 2);
        // Hyperbolic stretch: endpoints land in different components, odd.
        let hyp = SymplecticPath::from_fn(0.0, 1.0, 65, |t| {
            DMatrix::from_row_slice(2, 2, &[t.exp(), 0.0, 0.0, (-t).exp()])
        })
        .unwrap();
        let v = iota1_index(&hyp, 1e-3, &opts).unwrap();
        assert_eq!(v.rem_euclid(2), 1, "expected odd, got {v}");
    }

    #[test]
    fn zhu_special_vector() {
        let opts = ClmOptions::default();
        let mut vf = DMatrix::zeros(2, 1);
        vf[(0, 0)] = 1.0 / 2.0f64.sqrt();
        vf[(1, 0)] = 1.0 / 2.0f64.sqrt();
        let v = LagrangianSubspace::new(SymplecticStructure::standard(1), vf).unwrap();
        assert_eq!(zhu_block_index(&shear_path(1.0), &v, &opts).unwrap(), 1);
        assert_eq!(zhu_block_index(&shear_path(0.0), &v, &opts).unwrap(), 0);
        assert_eq!(zhu_block_index(&shear_path(-1.0), &v, &opts).unwrap(), 0);
    }

    #[test]
    fn zhu_trivial_block() {
        // M21 ≡ 0, M11 ≡ I: everything cancels.
        let opts = ClmOptions::default();
        let path = SymplecticPath::from_fn(0.0, 1.0, 9, |_t| DMatrix::identity(4, 4)).unwrap();
        let v = LagrangianSubspace::diagonal(1);
        // Diagonal of R^2x2 embedded in standard R^4 coordinates:
        let mut vf = DMatrix::zeros(4, 2);
        vf[(0, 0)] = 1.0;
        vf[(2, 0)] = 1.0;
        vf[(1, 1)] = 1.0;
        vf[(3, 1)] = 1.0;
        let v2 = LagrangianSubspace::new(SymplecticStructure::standard(2), vf).unwrap();
        let _ = v;
        assert_eq!(zhu_block_index(&path, &v2, &opts).unwrap(), 0);
    }

    #[test]
    fn probe_examples() {
        let m = SymplecticMatrix::identity(1);
        let (p, q) = stable_component_probe(&m, 0.1, 1e-8).unwrap();
        assert_eq!((p, q), (SpComponent::Plus, SpComponent::Plus));

        let rot = validate_symplectic(
            SymplecticStructure::standard(1).rotation(PI / 2.0),
            1e-12,
        )
        .unwrap();
        let (p, q) = stable_component_probe(&rot, 0.1, 1e-8).unwrap();
        assert_eq!((p, q), (SpComponent::Plus, SpComponent::Plus));

        let shear =
            validate_symplectic(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]), 1e-12)
                .unwrap();
        assert!(matches!(
            stable_component_probe(&shear, 0.1, 1e-8),
            Err(Error::NotLinearlyStable)
        ));
    }
}
