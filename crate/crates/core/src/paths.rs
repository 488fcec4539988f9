//! Sampled paths of symplectic matrices and Lagrangian frames with a
//! refinement callback, so crossing locators can evaluate anywhere.

use alloc::sync::Arc;
use alloc::vec::Vec;
use nalgebra::DMatrix;

#[allow(unused_imports)]
use nalgebra::{ComplexField as _, RealField as _};

use crate::error::{Error, Result};
use crate::linalg;
use crate::symplectic::{
    graph_frame_lagrangian, symplectic_residual, LagrangianSubspace, SymplecticStructure,
};

type MatFn = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;

/// Time-sampled path of symplectic matrices on `[a, b]`.
///
/// `evaluator`, when present, produces the matrix at arbitrary `t`;
/// otherwise entries are interpolated linearly between samples (good
/// enough for crossing localization, not for new samples).
#[derive(Clone)]
pub struct SymplecticPath {
    half_dim: usize,
    times: Vec<f64>,
    samples: Vec<DMatrix<f64>>,
    evaluator: Option<MatFn>,
    /// Max `‖ψᵀJψ − J‖∞` over the stored samples.
    pub symplecticity_residual: f64,
    /// Step-halving Richardson estimate when produced by an integrator.
    pub error_estimate: Option<f64>,
}

impl core::fmt::Debug for SymplecticPath {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("SymplecticPath")
            .field("half_dim", &self.half_dim)
            .field("samples", &self.samples.len())
            .field("interval", &(self.start_time(), self.end_time()))
            .finish()
    }
}

impl SymplecticPath {
    /// Builds a path from samples; times must be strictly increasing and
    /// every sample symplectic within `integ_tol`.
    pub fn from_samples(
        times: Vec<f64>,
        samples: Vec<DMatrix<f64>>,
        integ_tol: f64,
    ) -> Result<SymplecticPath> {
        if times.len() != samples.len() || times.len() < 2 {
            return Err(Error::DimensionMismatch {
                detail: alloc::format!("{} times vs {} samples", times.len(), samples.len()),
            });
        }
        if !times.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidOrbitData {
                detail: "sample times are not strictly increasing".to_string(),
            });
        }
        let dim = samples[0].nrows();
        if !dim.is_multiple_of(2) {
            return Err(Error::OddDimension { dim });
        }
        let mut residual = 0.0f64;
        for s in &samples {
            residual = residual.max(symplectic_residual(s));
        }
        if residual > integ_tol {
            return Err(Error::NotSymplectic { residual });
        }
        Ok(SymplecticPath {
            half_dim: dim / 2,
            times,
            samples,
            evaluator: None,
            symplecticity_residual: residual,
            error_estimate: None,
        })
    }

    /// Path given by a closure, sampled on a uniform grid of `n` points.
    pub fn from_fn<F>(a: f64, b: f64, n: usize, f: F) -> Result<SymplecticPath>
    where
        F: Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
    {
        let n = n.max(2);
        let times: Vec<f64> =
            (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
        let samples: Vec<DMatrix<f64>> = times.iter().map(|&t| f(t)).collect();
        let mut path = SymplecticPath::from_samples(times, samples, 1e-7)?;
        path.evaluator = Some(Arc::new(f));
        Ok(path)
    }

    pub(crate) fn with_evaluator(mut self, f: MatFn) -> SymplecticPath {
        self.evaluator = Some(f);
        self
    }

    pub fn half_dim(&self) -> usize {
        self.half_dim
    }

    pub fn dim(&self) -> usize {
        2 * self.half_dim
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn samples(&self) -> &[DMatrix<f64>] {
        &self.samples
    }

    pub fn start(&self) -> &DMatrix<f64> {
        &self.samples[0]
    }

    pub fn end(&self) -> &DMatrix<f64> {
        self.samples.last().unwrap()
    }

    /// Matrix at arbitrary `t` (clamped to the interval).
    pub fn eval(&self, t: f64) -> DMatrix<f64> {
        let t = t.clamp(self.start_time(), self.end_time());
        if let Some(f) = &self.evaluator {
            return f(t);
        }
        let k = segment_index(&self.times, t);
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
        &self.samples[k] * (1.0 - w) + &self.samples[k + 1] * w
    }

    /// New path `t ↦ g · ψ(t)`.
    pub fn left_multiplied(&self, g: &DMatrix<f64>) -> SymplecticPath {
        let g = g.clone();
        let samples = self.samples.iter().map(|m| &g * m).collect();
        let mut out = SymplecticPath {
            half_dim: self.half_dim,
            times: self.times.clone(),
            samples,
            evaluator: None,
            symplecticity_residual: self.symplecticity_residual,
            error_estimate: self.error_estimate,
        };
        if let Some(f) = &self.evaluator {
            let f = f.clone();
            out.evaluator = Some(Arc::new(move |t| &g * f(t)));
        } else {
            let times = self.times.clone();
            let samples = self.samples.clone();
            out.evaluator = Some(Arc::new(move |t| {
                let k = segment_index(&times, t);
                let (t0, t1) = (times[k], times[k + 1]);
                let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
                &g * (&samples[k] * (1.0 - w) + &samples[k + 1] * w)
            }));
        }
        out
    }

    /// New path `t ↦ C⁻¹ ψ(t) C` for a fixed invertible `C`.
    pub fn conjugated(&self, c: &DMatrix<f64>) -> Result<SymplecticPath> {
        let c_inv = c.clone().try_inverse().ok_or(Error::DimensionMismatch {
            detail: "conjugator is singular".to_string(),
        })?;
        let c = c.clone();
        let samples: Vec<DMatrix<f64>> =
            self.samples.iter().map(|m| &c_inv * m * &c).collect();
        let mut out = SymplecticPath {
            half_dim: self.half_dim,
            times: self.times.clone(),
            samples,
            evaluator: None,
            symplecticity_residual: self.symplecticity_residual,
            error_estimate: self.error_estimate,
        };
        let base = self.clone();
        out.evaluator = Some(Arc::new(move |t| &c_inv * base.eval(t) * &c));
        Ok(out)
    }

    /// Sub-path on coordinate subset `idx`, assumed invariant so that the
    /// extracted blocks are symplectic for the induced standard structure.
    pub fn extract_block(&self, idx: &[usize], integ_tol: f64) -> Result<SymplecticPath> {
        let k = idx.len();
        let take = |m: &DMatrix<f64>| -> DMatrix<f64> {
            DMatrix::from_fn(k, k, |i, j| m[(idx[i], idx[j])])
        };
        let samples: Vec<DMatrix<f64>> = self.samples.iter().map(take).collect();
        let mut out = SymplecticPath::from_samples(self.times.clone(), samples, integ_tol)?;
        let base = self.clone();
        let idx: Vec<usize> = idx.to_vec();
        out.evaluator = Some(Arc::new(move |t| {
            let m = base.eval(t);
            DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
        }));
        Ok(out)
    }
}

fn segment_index(times: &[f64], t: f64) -> usize {
    let n = times.len();
    if t <= times[0] {
        return 0;
    }
    if t >= times[n - 1] {
        return n - 2;
    }
    match times.partition_point(|&x| x <= t) {
        0 => 0,
        k => (k - 1).min(n - 2),
    }
}

/// Parameter-sampled path of Lagrangian subspaces with a refinement
/// callback producing (not necessarily orthonormal) frames.
#[derive(Clone)]
pub struct LagrangianPath {
    structure: SymplecticStructure,
    times: Vec<f64>,
    evaluator: MatFn,
}

impl core::fmt::Debug for LagrangianPath {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("LagrangianPath")
            .field("structure", &self.structure)
            .field("interval", &(self.start_time(), self.end_time()))
            .finish()
    }
}

impl LagrangianPath {
    /// Path from a frame-valued closure. Sample times fix the interval
    /// and give the crossing scanner its initial grid.
    pub fn from_fn<F>(
        structure: SymplecticStructure,
        times: Vec<f64>,
        f: F,
    ) -> Result<LagrangianPath>
    where
        F: Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
    {
        if times.len() < 2 || !times.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidOrbitData {
                detail: "need at least two increasing sample times".to_string(),
            });
        }
        // Validate the endpoints eagerly.
        for &t in [times[0], *times.last().unwrap()].iter() {
            LagrangianSubspace::new(structure, f(t))?;
        }
        Ok(LagrangianPath { structure, times, evaluator: Arc::new(f) })
    }

    /// The path of graphs `t ↦ Gr(ψ(t))` in the product space.
    pub fn graph_of(psi: &SymplecticPath) -> LagrangianPath {
        let base = psi.clone();
        let d = psi.dim();
        LagrangianPath {
            structure: SymplecticStructure::product(psi.half_dim()),
            times: psi.times().to_vec(),
            evaluator: Arc::new(move |t| {
                let m = base.eval(t);
                let mut f = DMatrix::zeros(2 * d, d);
                f.view_mut((0, 0), (d, d)).copy_from(&DMatrix::identity(d, d));
                f.view_mut((d, 0), (d, d)).copy_from(&m);
                f
            }),
        }
    }

    pub fn structure(&self) -> SymplecticStructure {
        self.structure
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Orthonormal frame at `t`.
    pub fn frame(&self, t: f64) -> DMatrix<f64> {
        let t = t.clamp(self.start_time(), self.end_time());
        linalg::column_space(&(self.evaluator)(t), 1e-12)
    }

    /// Raw evaluator output at `t` (continuous in `t`, unlike the
    /// orthonormalized frame whose gauge can jump).
    pub fn raw_frame(&self, t: f64) -> DMatrix<f64> {
        let t = t.clamp(self.start_time(), self.end_time());
        (self.evaluator)(t)
    }

    /// Subspace at `t` with full validation.
    pub fn subspace(&self, t: f64) -> Result<LagrangianSubspace> {
        LagrangianSubspace::new(self.structure, (self.evaluator)(t))
    }

    /// Path rotated by `e^{θJ}` of the ambient structure.
    pub fn rotated(&self, theta: f64) -> LagrangianPath {
        let rot = self.structure.rotation(theta);
        let f = self.evaluator.clone();
        LagrangianPath {
            structure: self.structure,
            times: self.times.clone(),
            evaluator: Arc::new(move |t| &rot * f(t)),
        }
    }

    /// Path with parameter mapped through a monotone `phi: [c,d] → [a,b]`.
    pub fn reparametrized<G>(&self, new_times: Vec<f64>, phi: G) -> LagrangianPath
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let f = self.evaluator.clone();
        LagrangianPath {
            structure: self.structure,
            times: new_times,
            evaluator: Arc::new(move |t| f(phi(t))),
        }
    }

    /// Restriction to `[c, d] ⊆ [a, b]`.
    pub fn restricted(&self, c: f64, d: f64) -> LagrangianPath {
        let mut times: Vec<f64> = self.times.iter().cloned().filter(|&t| t > c && t < d).collect();
        times.insert(0, c);
        times.push(d);
        LagrangianPath {
            structure: self.structure,
            times,
            evaluator: self.evaluator.clone(),
        }
    }

    /// Pointwise symplectic transformation `t ↦ Φ(t)·ℓ(t)`.
    pub fn transformed<G>(&self, phi: G) -> LagrangianPath
    where
        G: Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
    {
        let f = self.evaluator.clone();
        LagrangianPath {
            structure: self.structure,
            times: self.times.clone(),
            evaluator: Arc::new(move |t| phi(t) * f(t)),
        }
    }
}

/// Graph of a constant matrix, convenience used in tests and the
/// block-triangular formula.
pub fn constant_graph(m: &DMatrix<f64>) -> LagrangianSubspace {
    graph_frame_lagrangian(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::std_j;

    #[test]
    fn path_eval_matches_closure() {
        let p = SymplecticPath::from_fn(0.0, 1.0, 33, |t| {
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, t, 1.0])
        })
        .unwrap();
        let m = p.eval(0.37);
        assert!((m[(1, 0)] - 0.37).abs() < 1e-15);
        assert_eq!(p.half_dim(), 1);
    }

    #[test]
    fn conjugation_by_j() {
        let p = SymplecticPath::from_fn(0.0, 1.0, 9, |t| {
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 2.0 * t, 1.0])
        })
        .unwrap();
        let q = p.conjugated(&std_j(1)).unwrap();
        // J^{-1} [[1,0],[s,1]] J = [[1,-s],[0,1]] (upper shear).
        let m = q.eval(0.5);
        assert!((m[(0, 1)] + 1.0).abs() < 1e-14, "{m}");
    }

    #[test]
    fn graph_path_frames() {
        let p = SymplecticPath::from_fn(0.0, 1.0, 5, |t| {
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, t, 1.0])
        })
        .unwrap();
        let g = LagrangianPath::graph_of(&p);
        let sub = g.subspace(1.0).unwrap();
        assert_eq!(sub.rank(), 2);
    }
}
