mod common;

use common::*;
use gdfpca::*;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn unit(g: usize) -> Grid {
    Grid::uniform(0.0, 1.0, g).unwrap()
}

/// Brute-force quadrature of every pairwise product.
fn max_gram_deviation(basis: &BasisSystem) -> f64 {
    let phi = basis.values();
    let w = basis.grid().weights();
    let mut worst = 0.0f64;
    for i in 0..basis.m() {
        for j in 0..basis.m() {
            let ip: f64 = (0..w.len()).map(|g| w[g] * phi[(i, g)] * phi[(j, g)]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((ip - target).abs());
        }
    }
    worst
}

#[test]
fn fourier_fifteen_on_fine_grid_is_orthonormal() {
    let basis = make_basis(BasisKind::Fourier, 15, &unit(501)).unwrap();
    assert!(max_gram_deviation(&basis) < 1e-6);
}

#[test]
fn bases_are_orthonormal_on_assorted_grids() {
    let grids = [
        unit(101),
        Grid::uniform(-2.0, 3.0, 64).unwrap(),
        Grid::new((0..80).map(|i| (i as f64 / 79.0).powi(2)).collect()).unwrap(),
    ];
    for grid in &grids {
        for kind in [BasisKind::Fourier, BasisKind::Bspline { order: 4 }, BasisKind::Bspline { order: 2 }] {
            for m in [5, 9, 21] {
                let basis = make_basis(kind, m, grid).unwrap();
                assert!(max_gram_deviation(&basis) < 1e-6, "{kind:?} m={m}");
            }
        }
    }
}

#[test]
fn fourier_values_follow_convention() {
    let grid = unit(101);
    let basis = make_basis(BasisKind::Fourier, 5, &grid).unwrap();
    let s2 = 2f64.sqrt();
    for (g, &u) in grid.points().iter().enumerate() {
        let tau = std::f64::consts::TAU;
        let expected = [1.0, s2 * (tau * u).sin(), s2 * (tau * u).cos(), s2 * (2.0 * tau * u).sin(), s2 * (2.0 * tau * u).cos()];
        for (j, e) in expected.iter().enumerate() {
            assert!((basis.values()[(j, g)] - e).abs() < 1e-12);
        }
    }
}

#[test]
fn round_trip_recovers_scores() {
    let grid = unit(101);
    let mut r = rng(21);
    for kind in [BasisKind::Fourier, BasisKind::Bspline { order: 4 }] {
        let basis = make_basis(kind, 7, &grid).unwrap();
        let chi = ScoreMatrix::new(gaussian(12, 7, &mut r)).unwrap();
        let back = project_scores(&synthesize_curves(&chi, &basis).unwrap(), &basis).unwrap();
        assert!((back.entries() - chi.entries()).amax() < 1e-8);
    }
}

#[test]
fn parseval_on_in_span_curves() {
    let grid = unit(101);
    let basis = make_basis(BasisKind::Fourier, 9, &grid).unwrap();
    let mut r = rng(22);
    let chi = ScoreMatrix::new(gaussian(10, 9, &mut r)).unwrap();
    let curves = synthesize_curves(&chi, &basis).unwrap();
    for t in 0..10 {
        let row = curves.values().row(t);
        let quad = grid.inner(row.iter(), row.iter());
        let sum: f64 = chi.entries().row(t).iter().map(|x| x * x).sum();
        assert!((quad - sum).abs() < 1e-8);
    }
}

#[test]
fn functional_and_score_mse_agree_in_span() {
    let grid = unit(101);
    let basis = make_basis(BasisKind::Bspline { order: 4 }, 8, &grid).unwrap();
    let mut r = rng(23);
    let a = ScoreMatrix::new(gaussian(15, 8, &mut r)).unwrap();
    let b = ScoreMatrix::new(gaussian(15, 8, &mut r)).unwrap();
    let fa = synthesize_curves(&a, &basis).unwrap();
    let fb = synthesize_curves(&b, &basis).unwrap();
    let score_mse = (a.entries() - b.entries()).norm_squared() / 15.0;
    assert!((functional_mse(&fa, &fb).unwrap() - score_mse).abs() < 1e-8);
}

#[test]
fn projection_respects_raw_fourier_curves() {
    let grid = unit(101);
    let mut r = rng(24);
    let coefs = gaussian(6, 5, &mut r);
    let series = fourier_curves(&coefs, &grid);
    let scores = project_scores(&series, &make_basis(BasisKind::Fourier, 5, &grid).unwrap()).unwrap();
    assert!((scores.entries() - coefs).amax() < 1e-10);
}

#[test]
fn invalid_requests_are_rejected() {
    let grid = unit(11);
    assert!(matches!(make_basis(BasisKind::Fourier, 4, &grid), Err(Error::InvalidBasis(_))));
    assert!(matches!(make_basis(BasisKind::Fourier, 13, &grid), Err(Error::InvalidBasis(_))));
    assert!(matches!(make_basis(BasisKind::Bspline { order: 4 }, 3, &grid), Err(Error::InvalidBasis(_))));
    assert!(Grid::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
    let other = make_basis(BasisKind::Fourier, 3, &unit(12)).unwrap();
    let series = FunctionalSeries::new(DMatrix::zeros(3, 11), grid).unwrap();
    assert!(matches!(project_scores(&series, &other), Err(Error::GridMismatch)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn projection_is_linear(seed in 0u64..10_000, a in -4.0f64..4.0) {
        let grid = unit(41);
        let basis = make_basis(BasisKind::Fourier, 5, &grid).unwrap();
        let mut r = rng(seed);
        let x = gaussian(3, 41, &mut r);
        let y = gaussian(3, 41, &mut r);
        let px = project_scores(&FunctionalSeries::new(x.clone(), grid.clone()).unwrap(), &basis).unwrap();
        let py = project_scores(&FunctionalSeries::new(y.clone(), grid.clone()).unwrap(), &basis).unwrap();
        let pz = project_scores(&FunctionalSeries::new(&x * a + &y, grid.clone()).unwrap(), &basis).unwrap();
        prop_assert!((pz.entries() - (px.entries() * a + py.entries())).amax() < 1e-10);
    }

    #[test]
    fn grid_weights_integrate_length(a in -5.0f64..5.0, len in 0.1f64..10.0, g in 2usize..200) {
        let grid = Grid::uniform(a, a + len, g).unwrap();
        prop_assert!((grid.weights().iter().sum::<f64>() - len).abs() < 1e-10);
        prop_assert!(grid.weights().iter().all(|&w| w > 0.0));
    }
}
