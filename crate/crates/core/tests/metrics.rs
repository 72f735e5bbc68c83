mod common;

use common::*;
use gdfpca::metrics::*;
use gdfpca::simgen::Seed;
use gdfpca::*;
use rand_chacha::ChaCha8Rng;

/// Rank-one noise-free curves built on the default grid.
struct RankOne;

impl Dgp for RankOne {
    fn generate(&self, grid: &Grid, rng: &mut ChaCha8Rng) -> Result<FunctionalSeries> {
        let basis = make_basis(BasisKind::Fourier, 5, grid)?;
        let scores = one_factor_scores(80, 5, 0, rng);
        synthesize_curves(&ScoreMatrix::new(scores)?, &basis)
    }

    fn default_truncation(&self) -> usize {
        5
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({"dgp": "rank_one"})
    }
}

fn settings(lags: usize) -> StudySettings {
    StudySettings { fit: FitConfig::with_lags(lags), ..StudySettings::default() }
}

#[test]
fn rank_one_data_is_fully_explained_by_both_methods() {
    let study = run_replications(&RankOne, &settings(0), &[Method::Gdfpca, Method::Fpca], &[1], 1, Seed::new(1)).unwrap();
    for method in [Method::Gdfpca, Method::Fpca] {
        let s = study.summary(method, 1).unwrap();
        assert!((s.explained_variance.median - 1.0).abs() < 1e-6);
    }
}

#[test]
fn studies_are_reproducible() {
    let dgp = DgpConfig::Vari11 { m: 30, t: 40, n_basis: 11 };
    let a = run_replications(&dgp, &settings(1), &[Method::Gdfpca, Method::Fpca], &[1, 2], 4, Seed::new(3)).unwrap();
    let b = run_replications(&dgp, &settings(1), &[Method::Fpca, Method::Gdfpca], &[2, 1], 4, Seed::new(3)).unwrap();
    assert_eq!(a.summaries, b.summaries);
}

#[test]
fn stored_values_recompute_exactly() {
    let dgp = DgpConfig::Far1 { d: 7, kappa: 0.3, n: 60, burn_in: 50 };
    let s = settings(1);
    let study = run_replications(&dgp, &s, &[Method::Gdfpca, Method::Fpca], &[2], 2, Seed::new(4)).unwrap();
    let series = dgp.generate(&s.grid, &mut Seed::new(4).stream(1)).unwrap();
    let basis = make_basis(BasisKind::Fourier, 7, &s.grid).unwrap();
    let model = fit_fgdpca(&series, &basis, 2, &s.fit).unwrap();
    let rec = reconstruct_functional(&model, 2).unwrap();
    let record = study.records.iter().find(|r| r.replication == 1 && r.method == Method::Gdfpca).unwrap();
    assert!((record.mse - functional_mse(&series, &rec).unwrap()).abs() < 1e-12);
    assert!((record.explained_variance - explained_variance(&series, &rec).unwrap()).abs() < 1e-12);
}

#[test]
fn summaries_ignore_record_order() {
    let dgp = DgpConfig::Far1 { d: 5, kappa: 0.3, n: 40, burn_in: 20 };
    let study = run_replications(&dgp, &settings(1), &[Method::Fpca, Method::Gdfpca], &[1, 2], 5, Seed::new(5)).unwrap();
    let mut shuffled = study.records.clone();
    shuffled.reverse();
    shuffled.rotate_left(3);
    assert_eq!(summarize(&shuffled), study.summaries);
    for s in &study.summaries {
        assert_eq!(s.count, 5);
        assert!(s.mse.q1 <= s.mse.median && s.mse.median <= s.mse.q3);
    }
}

#[test]
fn noise_free_selection_picks_one_component() {
    assert_eq!(select_p(&RankOne, &settings(0), 0.8, Seed::new(6)).unwrap(), 1);
}

#[test]
fn unreachable_threshold_reports_best_value() {
    let dgp = DgpConfig::Far1 { d: 5, kappa: 0.3, n: 60, burn_in: 20 };
    let s = StudySettings { truncation: Some(3), ..settings(0) };
    match select_p(&dgp, &s, 0.999999, Seed::new(7)) {
        Err(Error::ThresholdUnreachable { best, .. }) => assert!(best < 0.999999 && best > 0.0),
        other => panic!("{other:?}"),
    }
}

#[test]
#[ignore = "slow: 20 seeds x 10 replications of FAR(1) selection"]
fn far1_selection_stays_within_seven_components() {
    let dgp = DgpConfig::Far1 { d: 15, kappa: 0.3, n: 300, burn_in: 200 };
    let s = settings(12);
    let hits = (0..20).filter(|&seed| select_p(&dgp, &s, 0.8, Seed::new(seed)).is_ok_and(|p| p <= 7)).count();
    assert!(hits >= 15, "{hits} of 20");
}
