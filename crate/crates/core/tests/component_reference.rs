mod common;

use common::*;
use opswap::metrics::component_metrics;
use opswap::mulmodels::{MultiplierModel, Operand, PpMask, Signedness};
use opswap::tuner::{heatmap, oracle_report, tune_component, SwapMode, SwapPolicy};
use opswap::{Objective, PairSource};

#[test]
fn small_widths_match_reference_for_every_family() {
    let mut r = rng(11);
    for m in [2u32, 3, 4, 5] {
        for signed in [false, true] {
            let mut models = vec![(
                MultiplierModel::exact(m, if signed { Signedness::Signed } else { Signedness::Unsigned }).unwrap(),
                RefModel { m, signed, kind: RefKind::Exact },
            )];
            for k in 1..m {
                models.push(truncation(m, signed, true, k));
                models.push(truncation(m, signed, false, k));
            }
            let d = dpp(m, signed, random_drops(&mut r, m));
            models.push(table_from(&d.0, m, signed));
            models.push(d);
            for (lib, reference) in &models {
                compare_tuning(lib, reference).unwrap_or_else(|e| panic!("{lib}: {e}"));
            }
        }
    }
}

#[test]
fn width_eight_matches_reference() {
    let mut r = rng(12);
    let mut models = vec![truncation(8, false, false, 3), truncation(8, true, true, 2)];
    for signed in [false, true] {
        let d = dpp(8, signed, random_drops(&mut r, 8));
        models.push(table_from(&d.0, 8, signed));
        models.push(d);
    }
    for (lib, reference) in &models {
        compare_tuning(lib, reference).unwrap_or_else(|e| panic!("{lib}: {e}"));
    }
}

#[test]
fn stimulation_count_is_4m_plus_1_times_pairs() {
    for m in [4u32, 8] {
        let (lib, _) = truncation(m, false, false, 2);
        let counter = CountingModel::new(lib);
        tune_component(&counter, Objective::Mae).unwrap();
        assert_eq!(counter.count(), (4 * m as u64 + 1) << (2 * m));
    }
}

#[test]
fn heatmaps_symmetric_for_commutative_and_oracle() {
    let sym = MultiplierModel::drop_partial_products(Signedness::Signed, PpMask::diagonal(8, 7)).unwrap();
    let grid = heatmap(&sym, SwapMode::NoSwap).unwrap();
    assert!(grid.is_symmetric());
    assert!(grid.max() > 0);
    for (lib, _) in random_noncommutative(8, 3, 5) {
        let plain = heatmap(&lib, SwapMode::NoSwap).unwrap();
        assert!(!plain.is_symmetric());
        let oracle = heatmap(&lib, SwapMode::Oracle).unwrap();
        assert_eq!(oracle, oracle.transpose());
        // a grid cell equals the absolute error of the chosen orientation
        let report = oracle_report(&lib, &PairSource::Exhaustive).unwrap();
        let total: u128 = (0..256).flat_map(|a| (0..256).map(move |b| (a, b))).map(|(a, b)| oracle.get(a, b) as u128).sum();
        assert_eq!(total, report.sum_abs_err);
    }
}

#[test]
fn policy_heatmap_cells_are_swapped_errors() {
    let (lib, reference) = truncation(6, false, false, 3);
    let p = SwapPolicy::new(Operand::B, 5, 0).unwrap();
    let grid = heatmap(&lib, SwapMode::Policy(p)).unwrap();
    for a in 0..64u32 {
        for b in 0..64u32 {
            let (x, y) = ref_apply(Some((false, 5, 0)), a, b);
            let err = (reference.eval(x, y) - reference.val(a) * reference.val(b)).unsigned_abs();
            assert_eq!(grid.get(a as usize, b as usize), err);
        }
    }
}

#[test]
fn ordering_chain_on_random_models() {
    for (lib, _) in random_noncommutative(8, 8, 21) {
        let tuned = tune_component(&lib, Objective::Mae).unwrap();
        let best = tuned.table.iter().map(|r| r.report.unwrap().sum_abs_err).min().unwrap();
        let noswap = tuned.table[0].report.unwrap().sum_abs_err;
        let oracle = oracle_report(&lib, &PairSource::Exhaustive).unwrap().sum_abs_err;
        assert!(oracle <= best && best <= noswap, "{lib}: {oracle} {best} {noswap}");
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let (lib, _) = dpp(8, true, random_drops(&mut rng(3), 8));
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| tune_component(&lib, Objective::Are).unwrap())
    };
    let one = run(1);
    for threads in [2, 3, 8] {
        assert_eq!(run(threads), one);
    }
}

#[test]
fn two_bit_truncation_matches_golden_csv() {
    let lib = MultiplierModel::truncate(2, Signedness::Unsigned, Operand::B, 1).unwrap();
    let r = tune_component(&lib, Objective::Mae).unwrap();
    let golden = include_str!("golden/trunc_b1_2u_mae.csv");
    assert_eq!(r.to_csv(), golden);
}

#[test]
fn wide_slice_smoke() {
    // one policy over a 2^24-pair slice of the 16-bit space
    let lib = MultiplierModel::truncate(16, Signedness::Signed, Operand::B, 6).unwrap();
    let slice = PairSource::Range { start: 0x1234_5678_u64 << 8 & 0xffff_ffff, len: 1 << 24 };
    let p = SwapPolicy::new(Operand::B, 6, 0).unwrap();
    let noswap = component_metrics(&lib, None, &slice).unwrap();
    let swapped = component_metrics(&lib, Some(p), &slice).unwrap();
    assert_eq!(noswap.n, 1 << 24);
    assert_eq!(swapped.n, 1 << 24);
    assert!(noswap.sum_abs_err > 0);
}
