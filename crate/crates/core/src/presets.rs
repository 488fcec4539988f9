//! Built-in orbit scenarios with closed-form coefficient data.
//!
//! All presets are supplied in a co-moving orthonormal trivialization in
//! which the coefficient matrices are constant in `t` (for the circular
//! orbits this is the frame rotating with the orbit; the frame loop is
//! neutral for every index computed here, and the constant coefficients
//! make the linearized flow autonomous). Each scenario carries the orbit
//! data, the Lagrangian callbacks for the Euler–Lagrange residual checks,
//! and the energy family `h ↦ T(h)`.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

#[allow(unused_imports)]
use nalgebra::{ComplexField as _, RealField as _};

use crate::orbit::{LagrangianCallbacks, OrbitData, OrbitFamily};

/// A ready-to-run orbit scenario.
pub struct PresetScenario {
    pub name: String,
    pub orbit: OrbitData,
    pub callbacks: Option<LagrangianCallbacks>,
    pub family: Option<OrbitFamily>,
}

/// Variants of the synthetic `P < 0` preset: the two signs of `T'(h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticVariant {
    /// Negated free particle on the torus: `κ < 0`, `T'(h) > 0`.
    Drift,
    /// Negated Kepler circular orbit: `κ < 0`, `T'(h) < 0`.
    Well,
}

const PRESET_GRID: usize = 33;

fn uniform_grid() -> Vec<f64> {
    (0..PRESET_GRID).map(|i| i as f64 / (PRESET_GRID - 1) as f64).collect()
}

fn constant<Tm: Clone>(value: Tm) -> Vec<Tm> {
    vec![value; PRESET_GRID]
}

fn j2() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])
}

/// Free particle on a flat torus, orbit along a closed geodesic of unit
/// length, `n = 2`. Valid for `h > 0`; `T(h) = (2h)^{-1/2}`.
pub fn flat_torus(h: f64) -> PresetScenario {
    assert!(h > 0.0, "flat torus preset needs h > 0");
    let t_per = 1.0 / (2.0 * h).sqrt();
    let orbit = OrbitData {
        n: 2,
        period: t_per,
        energy: h,
        grid: uniform_grid(),
        p: constant(DMatrix::identity(2, 2)),
        q: constant(DMatrix::zeros(2, 2)),
        r: constant(DMatrix::zeros(2, 2)),
        l_q: constant(DVector::zeros(2)),
        xprime: constant(DVector::from_column_slice(&[1.0, 0.0])),
        frame_twist: DMatrix::identity(2, 2),
        tprime_h: Some(-(2.0 * h).powf(-1.5)),
    };
    let speed = 1.0 / t_per;
    let callbacks = LagrangianCallbacks {
        lagrangian: Arc::new(move |_t| 0.5 * speed * speed),
        dv_l: Arc::new(move |_t| DVector::from_column_slice(&[speed, 0.0])),
        ddt_dv_l: Arc::new(|_t| DVector::zeros(2)),
    };
    let family = OrbitFamily {
        t_of_h: Arc::new(|hh: f64| (2.0 * hh).powf(-0.5)),
        dh_max: 0.5 * h,
    };
    PresetScenario {
        name: String::from("flat_torus"),
        orbit,
        callbacks: Some(callbacks),
        family: Some(family),
    }
}

/// Free particle on the circle (`n = 1`), unit length, `h > 0`.
pub fn circle_free_particle(h: f64) -> PresetScenario {
    assert!(h > 0.0, "circle preset needs h > 0");
    let t_per = 1.0 / (2.0 * h).sqrt();
    let orbit = OrbitData {
        n: 1,
        period: t_per,
        energy: h,
        grid: uniform_grid(),
        p: constant(DMatrix::identity(1, 1)),
        q: constant(DMatrix::zeros(1, 1)),
        r: constant(DMatrix::zeros(1, 1)),
        l_q: constant(DVector::zeros(1)),
        xprime: constant(DVector::from_element(1, 1.0)),
        frame_twist: DMatrix::identity(1, 1),
        tprime_h: Some(-(2.0 * h).powf(-1.5)),
    };
    let speed = 1.0 / t_per;
    let callbacks = LagrangianCallbacks {
        lagrangian: Arc::new(move |_t| 0.5 * speed * speed),
        dv_l: Arc::new(move |_t| DVector::from_element(1, speed)),
        ddt_dv_l: Arc::new(|_t| DVector::zeros(1)),
    };
    let family = OrbitFamily {
        t_of_h: Arc::new(|hh: f64| (2.0 * hh).powf(-0.5)),
        dh_max: 0.5 * h,
    };
    PresetScenario {
        name: String::from("circle_free_particle"),
        orbit,
        callbacks: Some(callbacks),
        family: Some(family),
    }
}

/// Planar harmonic oscillator `L = |v|²/2 − |q|²/2` on its circular orbit
/// of energy `h > 0` (radius `√h`), in the co-rotating frame. Isochronous:
/// `T(h) = 2π`.
pub fn harmonic_loop(h: f64) -> PresetScenario {
    assert!(h > 0.0, "harmonic loop preset needs h > 0");
    let r = h.sqrt();
    let t_per = 2.0 * core::f64::consts::PI;
    let orbit = OrbitData {
        n: 2,
        period: t_per,
        energy: h,
        grid: uniform_grid(),
        // Co-rotating corrections: Q = PΩ/T with Ω = 2πJ₂, and
        // R = ∂qqL + ΩᵀΩ/T² = -I + I = 0.
        p: constant(DMatrix::identity(2, 2)),
        q: constant(j2()),
        r: constant(DMatrix::zeros(2, 2)),
        l_q: constant(DVector::from_column_slice(&[-r, 0.0])),
        xprime: constant(DVector::from_column_slice(&[0.0, t_per * r])),
        frame_twist: DMatrix::identity(2, 2),
        tprime_h: Some(0.0),
    };
    let callbacks = LagrangianCallbacks {
        lagrangian: Arc::new(|_t| 0.0),
        dv_l: Arc::new(move |_t| DVector::from_column_slice(&[0.0, r])),
        ddt_dv_l: Arc::new(move |_t| {
            DVector::from_column_slice(&[-2.0 * core::f64::consts::PI * r, 0.0])
        }),
    };
    let family = OrbitFamily {
        t_of_h: Arc::new(|_hh: f64| 2.0 * core::f64::consts::PI),
        dh_max: 0.5 * h,
    };
    PresetScenario {
        name: String::from("harmonic_loop"),
        orbit,
        callbacks: Some(callbacks),
        family: Some(family),
    }
}

/// Kepler problem `L = |v|²/2 + 1/|q|` on the circular orbit of energy
/// `h < 0` (radius `-1/(2h)`), in the co-rotating frame.
/// `T(h) = 2π(-2h)^{-3/2}`.
pub fn kepler_circular(h: f64) -> PresetScenario {
    assert!(h < 0.0, "Kepler circular orbits need h < 0");
    let r = -1.0 / (2.0 * h);
    let t_per = 2.0 * core::f64::consts::PI * r.powf(1.5);
    let omega_over_t = r.powf(-1.5); // 2π/T
    let speed = r.powf(-0.5);
    let mut r_mat = DMatrix::zeros(2, 2);
    r_mat[(0, 0)] = 3.0 / (r * r * r);
    let orbit = OrbitData {
        n: 2,
        period: t_per,
        energy: h,
        grid: uniform_grid(),
        p: constant(DMatrix::identity(2, 2)),
        q: constant(j2() * omega_over_t),
        r: constant(r_mat),
        l_q: constant(DVector::from_column_slice(&[-1.0 / (r * r), 0.0])),
        xprime: constant(DVector::from_column_slice(&[
            0.0,
            2.0 * core::f64::consts::PI * r,
        ])),
        frame_twist: DMatrix::identity(2, 2),
        tprime_h: Some(6.0 * core::f64::consts::PI * (-2.0 * h).powf(-2.5)),
    };
    let callbacks = LagrangianCallbacks {
        lagrangian: Arc::new(move |_t| 1.5 / r),
        dv_l: Arc::new(move |_t| DVector::from_column_slice(&[0.0, speed])),
        ddt_dv_l: Arc::new(move |_t| {
            DVector::from_column_slice(&[-2.0 * core::f64::consts::PI * speed, 0.0])
        }),
    };
    let family = OrbitFamily {
        t_of_h: Arc::new(|hh: f64| {
            2.0 * core::f64::consts::PI * (-2.0 * hh).powf(-1.5)
        }),
        dh_max: 0.25 * h.abs(),
    };
    PresetScenario {
        name: String::from("kepler_circular"),
        orbit,
        callbacks: Some(callbacks),
        family: Some(family),
    }
}

/// Synthetic fiberwise-concave scenarios (`P = -I`-type), obtained by
/// negating a convex preset: the orbits are unchanged, `κ` flips sign,
/// the energy flips, and `T'(h)` flips. The two variants reach the two
/// `κ < 0` branches of the index-difference table.
pub fn negative_p_synthetic(variant: SyntheticVariant, h: f64) -> PresetScenario {
    let (base, name) = match variant {
        SyntheticVariant::Drift => {
            assert!(h < 0.0, "drift variant needs h < 0 (negated torus energy)");
            (flat_torus(-h), "negative_P_synthetic:drift")
        }
        SyntheticVariant::Well => {
            assert!(h > 0.0, "well variant needs h > 0 (negated Kepler energy)");
            (kepler_circular(-h), "negative_P_synthetic:well")
        }
    };
    let orbit = base.orbit.negated();
    let callbacks = base.callbacks.map(|cb| {
        let l = cb.lagrangian.clone();
        let dv = cb.dv_l.clone();
        let ddt = cb.ddt_dv_l.clone();
        LagrangianCallbacks {
            lagrangian: Arc::new(move |t| -l(t)),
            dv_l: Arc::new(move |t| -dv(t)),
            ddt_dv_l: Arc::new(move |t| -ddt(t)),
        }
    });
    let family = base.family.map(|f| {
        let t_of_h = f.t_of_h.clone();
        OrbitFamily { t_of_h: Arc::new(move |hh: f64| t_of_h(-hh)), dh_max: f.dh_max }
    });
    PresetScenario { name: String::from(name), orbit, callbacks, family }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit::kappa_classify;
    use crate::orbit::NullClass;

    #[test]
    fn presets_validate() {
        for s in [
            flat_torus(0.5),
            circle_free_particle(0.5),
            harmonic_loop(1.0),
            kepler_circular(-0.5),
            negative_p_synthetic(SyntheticVariant::Drift, -0.5),
            negative_p_synthetic(SyntheticVariant::Well, 0.5),
        ] {
            s.orbit.validate().unwrap_or_else(|e| panic!("{}: {e}", s.name));
        }
    }

    #[test]
    fn synthetic_variants_have_expected_signs() {
        let drift = negative_p_synthetic(SyntheticVariant::Drift, -0.5);
        assert_eq!(kappa_classify(&drift.orbit).1, NullClass::LNegative);
        assert!(drift.orbit.tprime_h.unwrap() > 0.0);
        let well = negative_p_synthetic(SyntheticVariant::Well, 0.5);
        assert_eq!(kappa_classify(&well.orbit).1, NullClass::LNegative);
        assert!(well.orbit.tprime_h.unwrap() < 0.0);
    }

    #[test]
    fn negated_family_slope_matches_data() {
        let drift = negative_p_synthetic(SyntheticVariant::Drift, -0.5);
        let fam = drift.family.as_ref().unwrap();
        let est = crate::orbit::estimate_tprime(fam, drift.orbit.energy, 1e-3).unwrap();
        let stored = drift.orbit.tprime_h.unwrap();
        assert!(((est - stored) / stored).abs() < 1e-6, "{est} vs {stored}");
    }
}
