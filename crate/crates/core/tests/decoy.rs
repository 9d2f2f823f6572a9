mod common;

use approx::assert_relative_eq;
use common::{column, counts, locked};
use mdiqkd::decoy::{
    estimate_bounds, fluctuation_interval, ingest_count_table, ConcentrationBound, CountRecord, FiniteKeyConfig,
};
use mdiqkd::optimizer::{Evaluator, ParameterVector};
use mdiqkd::physics::{single_photon_truth, SystemModel};
use proptest::prelude::*;

fn bounds(model: &SystemModel, p: &ParameterVector, fk: &FiniteKeyConfig) -> mdiqkd::decoy::DecoyBounds {
    let stats = Evaluator::new(model, fk).unwrap().statistics(p).unwrap();
    estimate_bounds(&p.decoys(), &stats, fk).unwrap()
}

fn grid() -> impl Iterator<Item = (f64, f64)> {
    (0..5).flat_map(|i| (0..5).map(move |j| (6.25 * i as f64, 25.0 + 18.75 * j as f64)))
}

#[test]
fn asymptotic_bounds_sandwich_the_truth() {
    let sets = [locked(0.056, 0.465), locked(0.2, 0.2), locked(0.02, 0.6), locked(0.3, 0.05)];
    for (la, lb) in grid() {
        let m = SystemModel::experimental(la, lb);
        let truth = single_photon_truth(&m).unwrap();
        for p in &sets {
            let b = bounds(&m, p, &FiniteKeyConfig::asymptotic());
            assert!(b.y11_lower <= truth.yield_11, "({la},{lb}) {b:?} vs {truth:?}");
            assert!(b.e11_upper >= truth.phase_error, "({la},{lb}) {b:?} vs {truth:?}");
        }
    }
}

#[test]
fn bounds_tight_for_weak_decoys() {
    let m = SystemModel::experimental(10.0, 62.0);
    let truth = single_photon_truth(&m).unwrap();
    let b = bounds(&m, &locked(0.004, 0.03), &FiniteKeyConfig::asymptotic());
    assert_relative_eq!(b.y11_lower, truth.yield_11, max_relative = 0.05);
    assert_relative_eq!(b.e11_upper, truth.phase_error, max_relative = 0.1);
}

#[test]
fn finite_bounds_are_looser_and_improve_with_n() {
    let p = locked(0.056, 0.465);
    for (la, lb) in grid() {
        let base = SystemModel::experimental(la, lb);
        let asym = bounds(&base, &p, &FiniteKeyConfig::asymptotic());
        let mut last: Option<mdiqkd::decoy::DecoyBounds> = None;
        for n in [1e10, 1e11, 1e12] {
            let m = SystemModel { pulse_count: n, ..base.clone() };
            let fin = bounds(&m, &p, &FiniteKeyConfig::finite(1e-10));
            assert!(fin.y11_lower <= asym.y11_lower && fin.e11_upper >= asym.e11_upper);
            if let Some(prev) = last {
                assert!(fin.y11_lower >= prev.y11_lower, "({la},{lb}) N={n}");
                assert!(fin.e11_upper <= prev.e11_upper, "({la},{lb}) N={n}");
            }
            last = Some(fin);
        }
    }
}

proptest! {
    #[test]
    fn hoeffding_width_scales_as_inverse_root(rate in 0.05f64..0.5, n in 1e6f64..1e12, scale in 2.0f64..100.0) {
        let w = |trials: f64| {
            let (lo, hi) = fluctuation_interval(rate * trials, trials, 1e-10, ConcentrationBound::Hoeffding).unwrap();
            hi - lo
        };
        let (w1, w2) = (w(n), w(n * scale));
        prop_assert!(((w1 / w2) / scale.sqrt() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn intervals_contain_the_rate(count_frac in 0.0f64..=1.0, trials in 1.0f64..1e13, eps in 1e-12f64..0.5) {
        let count = (count_frac * trials).floor();
        for bound in [ConcentrationBound::Chernoff, ConcentrationBound::Hoeffding] {
            let (lo, hi) = fluctuation_interval(count, trials, eps, bound).unwrap();
            let p = count / trials;
            prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
        }
    }
}

#[test]
fn hoeffding_example_width() {
    // The lower end clamps at 0, so read the width off the upper deviation.
    let (lo, hi) = fluctuation_interval(1e6, 1e12, 1e-10, ConcentrationBound::Hoeffding).unwrap();
    assert_eq!(lo, 0.0);
    let width = 2.0 * (hi - 1e-6);
    assert_relative_eq!(width, 2.0 * ((2e10f64).ln() / 2e12).sqrt(), max_relative = 1e-9);
    assert_relative_eq!(width, 6.9e-6, max_relative = 0.01);
}

fn analyse(l_a: f64, l_b: f64, fk: &FiniteKeyConfig, records: &[CountRecord]) -> mdiqkd::decoy::DecoyBounds {
    let col = column(l_a, l_b, "seven_intensity");
    let p = col.params;
    let stats = ingest_count_table(records, 1e12, &p.alice.probabilities(), &p.bob.probabilities()).unwrap();
    estimate_bounds(&p.decoys(), &stats, fk).unwrap()
}

#[test]
fn measured_counts_reproduce_phase_error() {
    let col = column(10.0, 62.0, "seven_intensity");
    let b = analyse(10.0, 62.0, &FiniteKeyConfig::finite(1e-10), &counts(&col.counts_file()));
    assert!((b.e11_upper - 0.14).abs() <= 0.03, "e11 = {:.4}", b.e11_upper);
    assert!(b.y11_lower > 0.0 && b.y11_lower <= 1.0);
}

#[test]
fn error_free_counts_give_zero_phase_error() {
    let col = column(10.0, 62.0, "seven_intensity");
    let zeroed: Vec<CountRecord> = counts(&col.counts_file())
        .into_iter()
        .map(|r| CountRecord { errors: 0, ..r })
        .collect();
    let b = analyse(10.0, 62.0, &FiniteKeyConfig::asymptotic(), &zeroed);
    assert_eq!(b.e11_upper, 0.0);
    assert!(b.y11_lower > 0.0);
}

#[test]
fn ingest_uses_vacuum_remainder() {
    let col = column(10.0, 62.0, "seven_intensity");
    let p = col.params;
    let stats = ingest_count_table(
        &counts(&col.counts_file()),
        1e12,
        &p.alice.probabilities(),
        &p.bob.probabilities(),
    )
    .unwrap();
    let mumu = stats.get(mdiqkd::decoy::PairLabel::MuMu);
    assert_eq!((mumu.total, mumu.errors), (105015.0, 29279.0));
    assert_eq!(mumu.trials, (1e12f64 * 0.030 * 0.031).round());
    let oo = stats.get(mdiqkd::decoy::PairLabel::OO);
    assert_eq!(oo.total, 18.0);
    assert_eq!(oo.trials, (1e12 * p.alice.probabilities().vacuum() * p.bob.probabilities().vacuum()).round());
    assert!(ingest_count_table(&[], 1e12, &p.alice.probabilities(), &p.bob.probabilities()).is_err());
}
