//! Property-based invariants of the linear-algebra substrate.

use nalgebra::DMatrix;
use proptest::prelude::*;
use symindex_core::linalg;
use symindex_core::symplectic::*;

fn sym_from(values: &[f64], n: usize) -> SymmetricMatrix {
    let m = DMatrix::from_fn(n, n, |i, j| values[i * n + j]);
    SymmetricMatrix::from_symmetric_unchecked(m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Signatures are invariant under permutation congruence.
    #[test]
    fn signature_permutation_invariant(
        values in proptest::collection::vec(-5.0f64..5.0, 16),
        seed in 0u64..1000,
    ) {
        let n = 4;
        let s = sym_from(&values, n);
        let base = signature(&s, 1e-9);
        // A deterministic permutation from the seed.
        let mut perm: Vec<usize> = (0..n).collect();
        let mut state = seed;
        for i in (1..n).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let j = (state >> 33) as usize % (i + 1);
            perm.swap(i, j);
        }
        let mut p = DMatrix::zeros(n, n);
        for (i, &pi) in perm.iter().enumerate() {
            p[(pi, i)] = 1.0;
        }
        let conj = SymmetricMatrix::from_symmetric_unchecked(
            p.transpose() * s.matrix() * &p,
        );
        prop_assert_eq!(signature(&conj, 1e-9), base);
    }

    /// Rotations compose and invert exactly.
    #[test]
    fn rotate_round_trip(theta in -3.0f64..3.0, shear in -2.0f64..2.0) {
        let m = validate_symplectic(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, shear, 1.0]),
            1e-12,
        ).unwrap();
        let back = m.rotate(theta).rotate(-theta);
        prop_assert!(linalg::inf_norm(&(back.matrix() - m.matrix())) < 1e-12);
    }

    /// Admitted symplectic matrices have determinant one.
    #[test]
    fn symplectic_determinant(theta in -3.0f64..3.0, a in -1.5f64..1.5, b in -1.5f64..1.5) {
        let n = 2;
        let mut shear = DMatrix::identity(2 * n, 2 * n);
        shear[(n, 0)] = a;
        shear[(n + 1, 1)] = b;
        let m = SymplecticStructure::standard(n).rotation(theta) * shear;
        let sm = validate_symplectic(m, 1e-9).unwrap();
        prop_assert!((linalg::det(sm.matrix()) - 1.0).abs() <= 1e-8);
    }

    /// Graphs of symplectic maps are isotropic in the product form.
    #[test]
    fn graph_isotropy(theta in -3.0f64..3.0, a in -1.5f64..1.5) {
        let n = 1;
        let mut shear = DMatrix::identity(2, 2);
        shear[(1, 0)] = a;
        let m = SymplecticStructure::standard(n).rotation(theta) * shear;
        let sm = validate_symplectic(m, 1e-9).unwrap();
        let g = graph_lagrangian(&sm);
        let jbar = g.structure().j_matrix();
        let res = linalg::inf_norm(&(g.frame().transpose() * jbar * g.frame()));
        prop_assert!(res <= 1e-12);
    }
}
