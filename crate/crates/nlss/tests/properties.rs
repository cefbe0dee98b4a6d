//! Property-based invariants of the spectral core and the nonlinearity.

use nlss::field::{lp_project, ComplexField2D, FieldIndexing, FieldVec, LpKind};
use nlss::grid::Grid2D;
use nlss::nonlin::apply_nonlinearity;
use num_complex::Complex64;
use proptest::prelude::*;

fn field_from_seeds(grid_n: usize, coeffs: &[(usize, usize, f64, f64)]) -> ComplexField2D {
    let grid = Grid2D::new(8.0, grid_n).unwrap();
    let n = grid.n;
    let mut spec = vec![Complex64::new(0.0, 0.0); n * n];
    for &(i, j, re, im) in coeffs {
        spec[(i % n) * n + (j % n)] = Complex64::new(re, im);
    }
    ComplexField2D::from_spectrum(grid, spec)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Forward then inverse transform is the identity, and the rectangle-rule
    /// norm agrees with the spectral sum.
    #[test]
    fn transform_round_trip_and_parseval(
        coeffs in proptest::collection::vec(
            (0usize..32, 0usize..32, -1.0f64..1.0, -1.0f64..1.0), 1..12)
    ) {
        let f = field_from_seeds(32, &coeffs);
        let back = ComplexField2D::from_spectrum(f.grid.clone(), f.to_spectrum());
        let scale = f.linf_norm().max(1e-6);
        for (a, b) in f.samples.iter().zip(back.samples.iter()) {
            prop_assert!((a - b).norm() < 1e-12 * scale);
        }
        let phys = f.l2_norm_sq();
        let spec = f.l2_norm_sq_spectral();
        prop_assert!((phys - spec).abs() <= 1e-12 * phys.max(1e-12));
    }

    /// P_{<=N} + P_{>=N} reconstructs the field for any exponent, including
    /// the negative ones where the low projector vanishes.
    #[test]
    fn lp_complement_partition(
        coeffs in proptest::collection::vec(
            (0usize..32, 0usize..32, -1.0f64..1.0, -1.0f64..1.0), 1..10),
        exponent in -3i32..6
    ) {
        let f = field_from_seeds(32, &coeffs);
        let lo = lp_project(&f, exponent, LpKind::Leq);
        let hi = lp_project(&f, exponent, LpKind::Geq);
        let scale = f.linf_norm().max(1e-6);
        for ((a, b), orig) in lo.samples.iter().zip(hi.samples.iter()).zip(f.samples.iter()) {
            prop_assert!((orig - (a + b)).norm() < 1e-12 * scale);
        }
    }

    /// Common-phase gauge covariance of the cubic coupling: rotating every
    /// component by one phase rotates F the same way.
    #[test]
    fn nonlinearity_gauge_covariance(
        coeffs in proptest::collection::vec(
            (0usize..16, 0usize..16, -1.0f64..1.0, -1.0f64..1.0), 1..8),
        phase in 0.0f64..std::f64::consts::TAU
    ) {
        let a = field_from_seeds(16, &coeffs);
        let transposed: Vec<_> = coeffs.iter().map(|&(i, j, re, im)| (j, i, im, re)).collect();
        let b = field_from_seeds(16, &transposed);
        let u = FieldVec::from_components(
            FieldIndexing::Finite { n_comp: 2 },
            vec![a, b],
        ).unwrap();
        let rot = Complex64::from_polar(1.0, phase);
        let v = u.scaled(rot);
        let fu = apply_nonlinearity(&u, false);
        let fv = apply_nonlinearity(&v, false);
        let scale = fu.components.iter().map(|c| c.linf_norm()).fold(1e-9, f64::max);
        for (x, y) in fu.components.iter().zip(fv.components.iter()) {
            for (p, q) in x.samples.iter().zip(y.samples.iter()) {
                prop_assert!((p * rot - q).norm() < 1e-12 * scale);
            }
        }
    }
}
