// SPDX-License-Identifier: Apache-2.0

use nscache_core::cells::{access_time, load_cell, onoff_decades, retention_time, CellKind, StoredLevelPair};
use nscache_core::m3d::{assemble_m3d_mat, fold_array, fold_grid, MAX_FOLDS};
use nscache_core::mat::{build_mat, MatDesign};
use nscache_core::tech::load_tech;
use proptest::prelude::*;

#[test]
fn dg_gain_cell_anchors() {
    let t = load_tech("7nm").unwrap();
    let c = load_cell("gc2t_dg_7nm", &t).unwrap();
    assert_eq!(c.kind, CellKind::Gc2tDg);
    assert_eq!((c.v_boost, c.v_hold), (1.2, -0.75));
    let w = access_time(&c, c.levels, &t).unwrap();
    let r = retention_time(&c, c.levels, &t).unwrap();
    assert!((w / 122e-12 - 1.0).abs() <= 0.10, "write {w:e}");
    assert!((r / 315e-3 - 1.0).abs() <= 0.15, "retention {r:e}");
    assert_eq!(c.access_time_s, Some(w));
}

#[test]
fn cell_areas_are_inputs() {
    let t7 = load_tech("7nm").unwrap();
    let t3 = load_tech("3nm").unwrap();
    for (name, t, a) in [("gc2t_dg_7nm", &t7, 0.02052), ("gc2t_caa_3nm", &t3, 0.013), ("sram_7nm", &t7, 0.0276)] {
        assert_eq!(load_cell(name, t).unwrap().area_um2, a, "{name}");
    }
}

#[test]
fn onoff_arithmetic() {
    assert!((onoff_decades(1.95f64, 65.0).unwrap() - 30.0).abs() < 1e-12);
}

#[test]
fn retention_grows_with_level_gap() {
    let t = load_tech("7nm").unwrap();
    let c = load_cell("gc2t_dg_7nm", &t).unwrap();
    let narrow = StoredLevelPair::new(c.levels.v1, (c.levels.v1 + c.levels.v2) / 2.0).unwrap();
    assert!(retention_time(&c, narrow, &t).unwrap() < retention_time(&c, c.levels, &t).unwrap());
    let sram = load_cell("sram_7nm", &t).unwrap();
    assert!(access_time(&sram, c.levels, &t).is_err());
}

#[test]
fn default_mat_folds_shrink() {
    let t = load_tech("7nm").unwrap();
    let d = MatDesign::new(load_cell("gc2t_dg_7nm", &t).unwrap(), 256, 256);
    let fp: Vec<f64> = (0..=MAX_FOLDS).map(|f| assemble_m3d_mat(&d, &t, f).unwrap().footprint_um2()).collect();
    assert!(fp[2] <= fp[1] && fp[1] <= fp[0], "{fp:?}");
    assert!(assemble_m3d_mat(&d, &t, 3).is_err());
    let planar = build_mat(&d, &t).unwrap();
    assert!(planar.footprint_um2() > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn grid_conserves_cells(rows in 1usize..2048, cols in 1usize..2048, w in 0.05f64..0.3, h in 0.05f64..0.3, folds in 0usize..=2) {
        let g = fold_grid(rows, cols, w, h, folds).unwrap();
        prop_assert_eq!(g.tiers, 1 << folds);
        prop_assert_eq!(g.wl_fold * g.bl_fold, g.tiers);
        // Each tier holds its share, padded by at most one line per halving.
        prop_assert!(g.rows * g.bl_fold >= rows && g.rows * g.bl_fold < rows + g.bl_fold);
        prop_assert!(g.cols * g.wl_fold >= cols && g.cols * g.wl_fold < cols + g.wl_fold);
    }

    #[test]
    fn array_area_per_tier(w in 1.0f64..500.0, h in 1.0f64..500.0, folds in 0usize..=2) {
        let s = fold_array(w, h, folds).unwrap();
        let per_tier = s.tier_array.0 * s.tier_array.1;
        prop_assert!((per_tier * s.n_memory_tiers as f64 - w * h).abs() <= 1e-9 * w * h);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn folding_never_grows_footprint(lr in 5u32..=10, lc in 5u32..=10) {
        let t = load_tech("7nm").unwrap();
        let d = MatDesign::new(load_cell("gc2t_dg_7nm", &t).unwrap(), 1 << lr, 1 << lc);
        let fp: Vec<f64> = (0..=MAX_FOLDS).map(|f| assemble_m3d_mat(&d, &t, f).unwrap().footprint_um2()).collect();
        prop_assert!(fp[1] <= fp[0] * (1.0 + 1e-9) && fp[2] <= fp[1] * (1.0 + 1e-9), "{:?}", fp);
    }
}
