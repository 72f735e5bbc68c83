mod common;

use common::median;
use gdfpca::simgen::*;
use gdfpca::*;
use nalgebra::DMatrix;

fn sample_var(x: &[f64]) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (x.len() - 1) as f64
}

fn lag1_autocorrelation(x: &[f64]) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let num: f64 = x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    let den: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    num / den
}

#[test]
fn far1_first_coefficient_is_positively_autocorrelated() {
    let mut positive = 0;
    for r in 0..20 {
        let coefs = far1_coefficients(15, 0.9, 300, 200, &mut Seed::new(5).stream(r)).unwrap();
        if lag1_autocorrelation(coefs.column(0).as_slice()) > 0.0 {
            positive += 1;
        }
    }
    assert!(positive >= 18, "{positive}");
}

#[test]
fn far1_burn_in_gives_stable_variance() {
    for kappa in [0.3, 0.9] {
        for r in 0..20 {
            let coefs = far1_coefficients(15, kappa, 400, 200, &mut Seed::new(6).stream(r)).unwrap();
            let col: Vec<f64> = coefs.column(0).iter().copied().collect();
            let ratio = sample_var(&col[..100]) / sample_var(&col[300..]);
            assert!((0.5..=2.0).contains(&ratio), "kappa {kappa} seed {r}: {ratio}");
        }
    }
}

#[test]
fn far1_without_transition_is_white() {
    let coefs = far1_coefficients(5, 0.0, 2000, 0, &mut Seed::new(7).stream(0)).unwrap();
    for j in 0..5 {
        let col: Vec<f64> = coefs.column(j).iter().copied().collect();
        assert!((sample_var(&col) - 1.0).abs() < 0.1);
        assert!(lag1_autocorrelation(&col).abs() < 0.1);
    }
}

#[test]
fn far1_curves_match_coefficients() {
    let grid = Grid::default_unit();
    let series = gen_far1(7, 0.3, 50, 20, &grid, &mut Seed::new(8).stream(3)).unwrap();
    let coefs = far1_coefficients(7, 0.3, 50, 20, &mut Seed::new(8).stream(3)).unwrap();
    let scores = project_scores(&series, &make_basis(BasisKind::Fourier, 7, &grid).unwrap()).unwrap();
    assert!((scores.entries() - coefs).amax() < 1e-10);
}

#[test]
fn vari_differences_stay_bounded_while_levels_grow() {
    let grid = Grid::default_unit();
    let basis = make_basis(BasisKind::Fourier, 21, &grid).unwrap();
    let mut diff_var = [Vec::new(), Vec::new()];
    let mut level_var = [Vec::new(), Vec::new()];
    for (i, t_len) in [100usize, 200].into_iter().enumerate() {
        for r in 0..20 {
            let series = gen_vari11(50, t_len, 21, &grid, &mut Seed::new(9).stream(r)).unwrap();
            let chi = project_scores(&series, &basis).unwrap().into_inner();
            let col: Vec<f64> = chi.column(0).iter().copied().collect();
            let diffs: Vec<f64> = col.windows(2).map(|w| w[1] - w[0]).collect();
            diff_var[i].push(sample_var(&diffs));
            level_var[i].push(sample_var(&col));
        }
    }
    let growth = median(&level_var[1]) / median(&level_var[0]);
    let diff_change = median(&diff_var[1]) / median(&diff_var[0]);
    assert!(growth > 1.3, "{growth}");
    assert!((0.5..2.0).contains(&diff_change), "{diff_change}");
}

#[test]
fn vari_transition_has_bounded_spectrum() {
    for r in 0..10 {
        let panel = vari11_panel(20, 30, &mut Seed::new(10).stream(r)).unwrap();
        let eig = panel.transition.clone().symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|&l| (-1e-12..=0.9 + 1e-12).contains(&l)));
    }
}

#[test]
fn dfm_signal_and_noise_are_comparable() {
    for r in 0..20 {
        let panel = dfm_panel(30, 300, 6, 2, &mut Seed::new(11).stream(r)).unwrap();
        let common_var = panel.common.iter().map(|v| v * v).sum::<f64>() / panel.common.len() as f64;
        let noise: DMatrix<f64> = &panel.observed - &panel.common;
        let noise_var = noise.iter().map(|v| v * v).sum::<f64>() / noise.len() as f64;
        let ratio = common_var / noise_var;
        assert!(ratio.is_finite() && ratio > 0.0);
        assert!((noise_var - 1.0).abs() < 0.1);
        let sv = panel.transition.clone().svd(false, false).singular_values;
        assert!(sv.max() <= 1.0 + 1e-12);
        assert!(panel.common.rank(1e-8) <= 6);
    }
}

#[test]
fn generators_are_deterministic() {
    let grid = Grid::default_unit();
    let a = gen_dfm(20, 50, 4, 2, &grid, 11, &mut Seed::new(12).stream(1)).unwrap();
    let b = gen_dfm(20, 50, 4, 2, &grid, 11, &mut Seed::new(12).stream(1)).unwrap();
    assert_eq!(a, b);
    let c = gen_vari11(20, 50, 11, &grid, &mut Seed::new(12).stream(1)).unwrap();
    let d = gen_vari11(20, 50, 11, &grid, &mut Seed::new(12).stream(1)).unwrap();
    assert_eq!(c, d);
}

#[test]
fn invalid_parameters_are_rejected() {
    let grid = Grid::default_unit();
    let mut rng = Seed::new(1).stream(0);
    assert!(gen_far1(4, 0.3, 10, 0, &grid, &mut rng).is_err());
    assert!(gen_far1(5, 2.0, 10, 0, &grid, &mut rng).is_err());
    assert!(gen_vari11(10, 20, 21, &grid, &mut rng).is_err());
    assert!(gen_dfm(4, 20, 6, 2, &grid, 3, &mut rng).is_err());
    assert!(gen_dfm(10, 20, 2, 3, &grid, 5, &mut rng).is_err());
}
