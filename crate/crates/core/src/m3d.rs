// SPDX-License-Identifier: Apache-2.0

//! Stacked mats: the cell array moves into BEOL tiers above its periphery.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mat::{mat_core, LineMods, MatDesign, MatPPA};
use crate::tech::{LayerUse, MivParams, TechNode};

/// Stacking beyond two folds (four memory tiers) is not considered.
pub const MAX_FOLDS: usize = 2;
/// Passes of the periphery/extension fixed point.
const SETTLE_PASSES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TierStack {
    pub n_memory_tiers: usize,
    /// Footprint of the stack, `(w, h)` in um.
    pub footprint: (f64, f64),
    /// Array dims on one tier.
    pub tier_array: (f64, f64),
    pub xwl_extension_um: f64,
    pub xbl_extension_um: f64,
    pub miv_count: usize,
    pub miv_max_height_um: f64,
}

impl TierStack {
    fn flat(w: f64, h: f64) -> Self {
        TierStack {
            n_memory_tiers: 1,
            footprint: (w, h),
            tier_array: (w, h),
            xwl_extension_um: 0.0,
            xbl_extension_um: 0.0,
            miv_count: 0,
            miv_max_height_um: 0.0,
        }
    }
}

fn check_folds(n_folds: usize) -> Result<()> {
    if n_folds > MAX_FOLDS {
        return Err(Error::design(format!("at most {MAX_FOLDS} folds (4 tiers), got {n_folds}")));
    }
    Ok(())
}

/// Folds an array of `w` x `h` um, halving the larger side each time.
pub fn fold_array(array_w: f64, array_h: f64, n_folds: usize) -> Result<TierStack> {
    check_folds(n_folds)?;
    if !(array_w > 0.0 && array_h > 0.0) {
        return Err(Error::non_positive("array dimension", array_w.min(array_h)));
    }
    let (mut w, mut h) = (array_w, array_h);
    for _ in 0..n_folds {
        if w > h {
            w /= 2.0;
        } else {
            h /= 2.0;
        }
    }
    let tiers = 1 << n_folds;
    Ok(TierStack { n_memory_tiers: tiers, footprint: (w, h), tier_array: (w, h), ..TierStack::flat(w, h) })
}

/// A folded cell grid. Odd counts on a folded axis are padded by one line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FoldedGrid {
    pub rows: usize,
    pub cols: usize,
    pub tiers: usize,
    /// Pieces each wordline is split into.
    pub wl_fold: usize,
    pub bl_fold: usize,
}

pub fn fold_grid(rows: usize, cols: usize, cell_w: f64, cell_h: f64, n_folds: usize) -> Result<FoldedGrid> {
    check_folds(n_folds)?;
    let mut g = FoldedGrid { rows, cols, tiers: 1, wl_fold: 1, bl_fold: 1 };
    for _ in 0..n_folds {
        if g.cols as f64 * cell_w > g.rows as f64 * cell_h {
            g.cols = g.cols.div_ceil(2);
            g.wl_fold *= 2;
        } else {
            g.rows = g.rows.div_ceil(2);
            g.bl_fold *= 2;
        }
        g.tiers *= 2;
    }
    Ok(g)
}

/// FEOL frame of `area` um^2 with aspect `w / h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeolFrame {
    pub w: f64,
    pub h: f64,
    /// Wire needed along x and y to reach an array of the given dims.
    pub extension: (f64, f64),
}

pub fn reshape_feol(periph_area_um2: f64, target_aspect: f64, array: (f64, f64)) -> Result<FeolFrame> {
    if !(periph_area_um2 > 0.0) {
        return Err(Error::non_positive("periphery area", periph_area_um2));
    }
    if !(target_aspect > 0.0) {
        return Err(Error::non_positive("aspect ratio", target_aspect));
    }
    let w = (periph_area_um2 * target_aspect).sqrt();
    let h = periph_area_um2 / w;
    Ok(FeolFrame { w, h, extension: ((w - array.0).abs(), (h - array.1).abs()) })
}

/// Per-signal resistance and capacitance of an MIV reaching the top of the
/// stack, and the area of `signals` such vias.
pub fn miv_parasitics(stack: &TierStack, miv: &MivParams, signals: usize) -> (f64, f64, f64) {
    if signals == 0 {
        return (0.0, 0.0, 0.0);
    }
    let height = stack.miv_max_height_um;
    let levels = (height / miv.tier_height_um).max(1.0);
    let pitch_um = miv.pitch_nm * 1e-3;
    (miv.r_per_via * levels, miv.c_per_um_height * height, signals as f64 * pitch_um * pitch_um)
}

/// Lines that need a via per row and per column.
fn line_counts(design: &MatDesign) -> (usize, usize) {
    if design.cell.kind.is_gain_cell() {
        (2, 2)
    } else {
        (1, 1)
    }
}

/// Stacks a BEOL mat over its periphery with `n_folds` folds.
pub fn assemble_m3d_mat(design: &MatDesign, tech: &TechNode, n_folds: usize) -> Result<MatPPA> {
    assemble_m3d_mat_with(design, tech, n_folds, 0.0).map(|(m, _)| m)
}

/// As [`assemble_m3d_mat`], with `extra_feol_um2` of other logic sharing the
/// FEOL frame. Returns the stack geometry too.
pub fn assemble_m3d_mat_with(
    design: &MatDesign,
    tech: &TechNode,
    n_folds: usize,
    extra_feol_um2: f64,
) -> Result<(MatPPA, TierStack)> {
    if !design.cell.is_beol {
        return Err(Error::design(format!("{} cells are not BEOL and cannot be stacked", design.cell.kind.name())));
    }
    if !(extra_feol_um2 >= 0.0) {
        return Err(Error::invalid("extra FEOL area must be >= 0"));
    }
    design.validate()?;
    let cell = &design.cell;
    let rows = design.physical_rows();
    let cols = design.physical_cols();
    let grid = fold_grid(rows, cols, cell.width_um(), cell.height_um(), n_folds)?;
    let tier = (grid.cols as f64 * cell.width_um(), grid.rows as f64 * cell.height_um());
    let (wl_per_row, bl_per_col) = line_counts(design);
    let signals = rows * wl_per_row + cols * bl_per_col;
    let mut stack = TierStack {
        n_memory_tiers: grid.tiers,
        footprint: tier,
        tier_array: tier,
        xwl_extension_um: 0.0,
        xbl_extension_um: 0.0,
        miv_count: signals,
        miv_max_height_um: (grid.tiers * cell.tiers_per_cell as usize) as f64 * tech.miv.tier_height_um,
    };
    let (r_miv, c_miv, miv_area) = miv_parasitics(&stack, &tech.miv, signals);
    let local = tech.layer(LayerUse::Local);

    let mut mods = LineMods {
        wl_fold: grid.wl_fold as f64,
        bl_fold: grid.bl_fold as f64,
        wl_extra: (r_miv, c_miv),
        bl_extra: (r_miv, c_miv),
    };
    let mut core = mat_core(design, tech, &mods)?;
    let mut frame = reshape_feol(core.row_area + core.col_area + miv_area + extra_feol_um2, tier.0 / tier.1, tier)?;
    for _ in 1..SETTLE_PASSES {
        let (xw, xb) = frame.extension;
        mods.wl_extra = (r_miv + local.r_per_um * xw, c_miv + local.c_per_um * xw);
        mods.bl_extra = (r_miv + local.r_per_um * xb, c_miv + local.c_per_um * xb);
        core = mat_core(design, tech, &mods)?;
        frame = reshape_feol(core.row_area + core.col_area + miv_area + extra_feol_um2, tier.0 / tier.1, tier)?;
    }
    stack.xwl_extension_um = frame.extension.0;
    stack.xbl_extension_um = frame.extension.1;
    let w = frame.w.max(tier.0);
    let h = frame.h.max(tier.1);
    stack.footprint = (w, h);
    let beol = tier.0 * tier.1 * grid.tiers as f64;
    let feol = frame.w * frame.h;
    let folded = (core.finish(w, h, grid.tiers, feol, beol), stack);
    // A periphery-bound mat gains nothing from another fold: the FEOL
    // frame grows with the MIVs. Stop at the shallower stack then.
    if n_folds > 0 {
        let shallow = assemble_m3d_mat_with(design, tech, n_folds - 1, extra_feol_um2)?;
        if shallow.0.footprint_um2() < folded.0.footprint_um2() {
            return Ok(shallow);
        }
    }
    Ok(folded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cells::load_cell;
    use crate::mat::build_mat;
    use crate::tech::load_tech;

    #[test]
    fn fold_largest_side() {
        let s = fold_array(100.0, 400.0, 2).unwrap();
        assert_eq!(s.footprint, (100.0, 100.0));
        assert_eq!(s.n_memory_tiers, 4);
        let s = fold_array(30.0, 20.0, 0).unwrap();
        assert_eq!((s.footprint, s.n_memory_tiers), ((30.0, 20.0), 1));
        assert!(fold_array(100.0, 400.0, 3).is_err());
    }

    #[test]
    fn reshape_examples() {
        let f = reshape_feol(10_000.0, 4.0, (200.0, 50.0)).unwrap();
        assert!((f.w - 200.0).abs() < 1e-9 && (f.h - 50.0).abs() < 1e-9);
        assert!(f.extension.0 < 1e-9 && f.extension.1 < 1e-9);
        let f = reshape_feol(10_000.0, 1.0, (120.0, 80.0)).unwrap();
        assert!((f.w - 100.0).abs() < 1e-9);
        assert!((f.extension.0 - 20.0).abs() < 1e-9);
    }

    #[test]
    fn miv_unit_and_height_rule() {
        let t = load_tech("7nm").unwrap();
        let m = t.miv;
        let one = TierStack { miv_max_height_um: m.tier_height_um, ..TierStack::flat(1.0, 1.0) };
        let (r, c, a) = miv_parasitics(&one, &m, 1);
        assert!((r - m.r_per_via).abs() < 1e-12);
        assert!((c - m.c_per_um_height * m.tier_height_um).abs() < 1e-30);
        assert!((a - (m.pitch_nm * 1e-3).powi(2)).abs() < 1e-15);
        let four = TierStack { miv_max_height_um: 4.0 * m.tier_height_um, ..one };
        assert!((miv_parasitics(&four, &m, 1).1 - 4.0 * m.tier_height_um * m.c_per_um_height).abs() < 1e-30);
        assert_eq!(miv_parasitics(&four, &m, 0), (0.0, 0.0, 0.0));
    }

    #[test]
    fn folding_shrinks_gain_cell_mat() {
        let t = load_tech("7nm").unwrap();
        let d = MatDesign::new(load_cell("gc2t_dg_7nm", &t).unwrap(), 256, 256);
        let flat = build_mat(&d, &t).unwrap();
        let fps: Vec<_> = (0..=2).map(|k| assemble_m3d_mat(&d, &t, k).unwrap()).collect();
        assert!(fps[0].footprint_um2() <= flat.footprint_um2());
        assert!(fps[1].footprint_um2() <= fps[0].footprint_um2());
        assert!(fps[2].footprint_um2() <= fps[1].footprint_um2());
        assert_eq!(fps[2].tiers, 4);
    }

    #[test]
    fn rejects_front_end_cells() {
        let t = load_tech("7nm").unwrap();
        let d = MatDesign::new(load_cell("sram_7nm", &t).unwrap(), 256, 256);
        assert!(assemble_m3d_mat(&d, &t, 1).is_err());
    }
}
