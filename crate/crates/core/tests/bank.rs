// SPDX-License-Identifier: Apache-2.0

use nscache_core::bank::{build_bank, compose_cache, gdl_widths, route_htree, AccessMode, BankKind, BankOrg};
use nscache_core::cells::load_cell;
use nscache_core::m3d::assemble_m3d_mat;
use nscache_core::mat::{build_mat, MatDesign};
use nscache_core::tech::load_tech;
use proptest::prelude::*;

/// The routing table as printed: per row the address width and the second
/// printed value, both as text.
const TABLE: &[(&str, &str, &str, &str)] = &[
    ("normal", "data", "log2(N/A)", "log2(A)"),
    ("normal", "tag", "log2(N/A)", "Wt"),
    ("normal", "tau", "log2(N/A)", "Wt+2"),
    ("sequential", "data", "log2(N)", "0"),
    ("sequential", "tag", "log2(N/A)", "Wt"),
    ("sequential", "tau", "log2(N)", "Wt+2"),
    ("fast", "data", "log2(N)", "0"),
    ("fast", "tag", "log2(N/A)", "Wt"),
    ("fast", "tau", "log2(N/A)", "Wd*A+A"),
];

fn eval(expr: &str, n: u64, a: u64, wd: u64, wt: u64) -> u64 {
    let l = |x: f64| x.log2().round() as u64;
    match expr {
        "log2(N/A)" => l(n as f64 / a as f64),
        "log2(N)" => l(n as f64),
        "log2(A)" => l(a as f64),
        "0" => 0,
        "Wt" => wt,
        "Wt+2" => wt + 2,
        "Wd*A+A" => wd * a + a,
        other => panic!("no rule for {other}"),
    }
}

/// Data rows put the second value on the broadcast wires and carry the
/// block on the distributed wires; tag and TAU rows route it distributed.
fn oracle(mode: &str, kind: &str, n: u64, a: u64, wd: u64, wt: u64) -> (u64, u64, u64) {
    let &(_, _, addr, second) = TABLE.iter().find(|r| r.0 == mode && r.1 == kind).expect("row");
    let (x, y) = (eval(addr, n, a, wd, wt), eval(second, n, a, wd, wt));
    if kind == "data" {
        (x, y, wd)
    } else {
        (x, 0, y)
    }
}

fn org(mode: AccessMode, kind: BankKind, n: u64, a: usize, wd: usize, wt: usize) -> BankOrg {
    let mut o = BankOrg::data(1 << 16, 64, 1, (1, 1), (1, 1), mode).unwrap();
    o.kind = kind;
    o.n_block = n;
    o.associativity = a;
    o.w_block_data = wd;
    o.w_block_tag = wt;
    o
}

#[test]
fn gdl_examples() {
    let w = gdl_widths(&org(AccessMode::Normal, BankKind::Data, 1024, 16, 512, 32)).unwrap();
    assert_eq!((w.n_aw, w.n_bw, w.n_dw), (6, 4, 512));
    let w = gdl_widths(&org(AccessMode::Sequential, BankKind::Data, 1024, 16, 512, 32)).unwrap();
    assert_eq!((w.n_aw, w.n_bw, w.n_dw), (10, 0, 512));
    let w = gdl_widths(&org(AccessMode::Fast, BankKind::TauHm, 1024, 16, 512, 32)).unwrap();
    assert_eq!(w.n_dw, 8208);
    assert!(gdl_widths(&org(AccessMode::Normal, BankKind::Data, 1000, 16, 512, 32)).is_err());
    assert!(gdl_widths(&org(AccessMode::Normal, BankKind::Data, 1024, 12, 512, 32)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn gdl_matches_table(
        lg_n in 4u32..30,
        lg_a in 0u32..6,
        lg_wd in 3u32..11,
        wt in 8usize..64,
        mode in 0usize..3,
        kind in 0usize..4,
    ) {
        prop_assume!(lg_a <= lg_n);
        let modes = [(AccessMode::Normal, "normal"), (AccessMode::Sequential, "sequential"), (AccessMode::Fast, "fast")];
        let kinds = [(BankKind::Data, "data"), (BankKind::Tag, "tag"), (BankKind::TauHm, "tau"), (BankKind::TauHt, "tau")];
        let (n, a, wd) = (1u64 << lg_n, 1usize << lg_a, 1usize << lg_wd);
        let o = org(modes[mode].0, kinds[kind].0, n, a, wd, wt);
        let w = gdl_widths(&o).unwrap();
        prop_assert_eq!((w.n_aw, w.n_bw, w.n_dw), oracle(modes[mode].1, kinds[kind].1, n, a as u64, wd as u64, wt as u64));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mode_ordering(lg_grid in 0u32..4, cell in prop::sample::select(vec!["sram_7nm", "edram_7nm", "sttmram_7nm"])) {
        let t = load_tech("7nm").unwrap();
        let d = MatDesign::new(load_cell(cell, &t).unwrap(), 256, 256);
        let m = build_mat(&d, &t).unwrap();
        let g = 1usize << lg_grid;
        let bits = 256 * 256 * 4 * (g * g) as u64;
        let build = |mode| {
            let mut o = BankOrg::data(bits / 8, 64, 8, (g, g), (2, 2), mode).unwrap();
            o.fit_active_mats(m.output_bits).unwrap();
            let data = build_bank(&o, &d, &m, &t).unwrap();
            prop_assert!(data.area_mm2 * 1e6 >= o.n_mats() as f64 * m.footprint_um2());
            prop_assert!((data.component_leakage_w() - data.leakage_w).abs() <= 1e-9 * data.leakage_w);
            let mut to = o.tag_bank();
            let tb = to.bits_per_mat();
            // Wide enough for the set's tags from the subarray's mats.
            let need = to.access_width().div_ceil(to.mats_per_subarray()).next_power_of_two();
            let cols = need.max(1 << tb.trailing_zeros().div_ceil(2));
            let td = MatDesign::new(load_cell("sram_7nm", &t).unwrap(), tb as usize / cols, cols);
            let tm = build_mat(&td, &t).unwrap();
            to.fit_active_mats(tm.output_bits).unwrap();
            let tag = build_bank(&to, &td, &tm, &t).unwrap();
            Ok(compose_cache(&data, &tag).unwrap())
        };
        let (s, n, f) = (build(AccessMode::Sequential)?, build(AccessMode::Normal)?, build(AccessMode::Fast)?);
        prop_assert!(s.t_hit_s >= n.t_hit_s && n.t_hit_s >= f.t_hit_s);
        prop_assert!(s.e_hit_j <= n.e_hit_j);
        prop_assert!(s.e_miss_j < n.e_miss_j);
    }
}

#[test]
fn smaller_mats_shorten_htree() {
    let t = load_tech("7nm").unwrap();
    let d = MatDesign::new(load_cell("gc2t_dg_7nm", &t).unwrap(), 256, 256);
    let o = BankOrg::data(64 << 20, 64, 16, (8, 8), (4, 8), AccessMode::Normal).unwrap();
    let trees: Vec<_> = (0..=2)
        .map(|f| {
            let m = assemble_m3d_mat(&d, &t, f).unwrap();
            route_htree(&o, m.width_um * 8.0, m.height_um * 4.0, 512, &t).unwrap()
        })
        .collect();
    let legs: Vec<f64> = trees.iter().map(|h| h.legs_um.iter().sum()).collect();
    assert!(legs[1] < legs[0] && legs[2] < legs[1], "{legs:?}");
    assert!(trees[2].delay_s < trees[0].delay_s);
}
