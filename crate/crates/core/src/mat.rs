// SPDX-License-Identifier: Apache-2.0

//! One mat: a cell array with its decoders, drivers, sense amplifiers and
//! column circuits.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::cells::{CellKind, CellModel, CompactModel};
use crate::circuits::{peripheral_ppa, stage_delay, PeripheralKind, PeripheralPPA, PeripheralParams, UnitInverter};
use crate::error::{Error, Result};
use crate::num::{is_pow2, log2_exact};
use crate::tech::{LayerUse, TechNode};

pub const MIN_MAT_DIM: usize = 32;
pub const MAX_MAT_DIM: usize = 1024;

/// Settling factor for charge sharing, about 90% of the final level.
const SHARE_SETTLE: f64 = 2.3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatDesign {
    pub cell: CellModel,
    /// Data rows.
    pub n_rows: usize,
    /// Data columns, before ECC.
    pub n_cols: usize,
    /// Output mux after the sense amplifiers.
    pub bl_mux: usize,
    /// Columns sharing one sense amplifier.
    pub sa_mux: usize,
    pub wl_segments: usize,
    pub folded_bitline: bool,
    /// Reference rows per folded partition.
    pub reference_rows: usize,
    /// Check bits per data bit; each mat stores its own.
    pub ecc_ratio: f64,
}

impl MatDesign {
    /// Defaults for a cell: no muxing, one segment, folded bitlines with
    /// one reference row for charge cells.
    pub fn new(cell: CellModel, n_rows: usize, n_cols: usize) -> Self {
        let charge = cell.kind.is_charge_cell();
        Self {
            cell,
            n_rows,
            n_cols,
            bl_mux: 1,
            sa_mux: 1,
            wl_segments: 1,
            folded_bitline: charge,
            reference_rows: usize::from(charge),
            ecc_ratio: 0.0,
        }
    }

    pub fn with_mux(mut self, bl_mux: usize, sa_mux: usize) -> Self {
        self.bl_mux = bl_mux;
        self.sa_mux = sa_mux;
        self
    }

    pub fn with_ecc(mut self, ratio: f64) -> Self {
        self.ecc_ratio = ratio;
        self
    }

    pub fn physical_cols(&self) -> usize {
        self.n_cols + (self.n_cols as f64 * self.ecc_ratio - 1e-9).ceil().max(0.0) as usize
    }

    pub fn physical_rows(&self) -> usize {
        let partitions = if self.folded_bitline { 2 } else { 0 };
        self.n_rows + partitions * self.reference_rows
    }

    pub fn data_bits(&self) -> u64 {
        self.n_rows as u64 * self.n_cols as u64
    }

    /// Data bits delivered per access.
    pub fn output_bits(&self) -> usize {
        self.n_cols / (self.bl_mux * self.sa_mux)
    }

    pub fn physical_output_bits(&self) -> usize {
        self.physical_cols().div_ceil(self.bl_mux * self.sa_mux)
    }

    pub fn validate(&self) -> Result<()> {
        for (what, n) in [("rows", self.n_rows), ("columns", self.n_cols)] {
            if !is_pow2(n) || !(MIN_MAT_DIM..=MAX_MAT_DIM).contains(&n) {
                return Err(Error::design(format!(
                    "mat {what} must be a power of two in {MIN_MAT_DIM}..={MAX_MAT_DIM}, got {n}"
                )));
            }
        }
        for (what, n) in [("bitline mux", self.bl_mux), ("sense-amp mux", self.sa_mux), ("wordline segments", self.wl_segments)] {
            if !is_pow2(n) {
                return Err(Error::design(format!("{what} must be a power of two >= 1, got {n}")));
            }
        }
        if self.bl_mux * self.sa_mux > self.n_cols {
            return Err(Error::design("mux degree exceeds column count"));
        }
        if self.wl_segments > self.n_cols / MIN_MAT_DIM {
            return Err(Error::design("wordline segments shorter than the minimum mat width"));
        }
        if self.cell.kind.is_gain_cell() && self.sa_mux != 1 {
            return Err(Error::design("gain-cell mats use one sense amplifier per column (sa_mux = 1)"));
        }
        if self.folded_bitline && self.cell.kind.is_charge_cell() && self.reference_rows == 0 {
            return Err(Error::design("folded bitlines need at least one reference row"));
        }
        if !(0.0..=1.0).contains(&self.ecc_ratio) {
            return Err(Error::design(format!("ECC ratio must be in [0, 1], got {}", self.ecc_ratio)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefreshInfo {
    pub needs: bool,
    pub t_retention_s: f64,
    pub n_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatPPA {
    pub area_feol_um2: f64,
    pub area_beol_um2: f64,
    /// Footprint of one tier.
    pub width_um: f64,
    pub height_um: f64,
    pub tiers: usize,
    pub t_read_s: f64,
    pub t_write_s: f64,
    pub e_read_j: f64,
    pub e_write_j: f64,
    pub e_refresh_row_j: f64,
    pub leakage_w: f64,
    pub cell_leakage_w: f64,
    pub output_bits: usize,
    pub refresh: RefreshInfo,
    /// Peripheral blocks by name.
    pub periphery: BTreeMap<String, PeripheralPPA>,
    pub read_path: Vec<(String, f64)>,
    pub write_path: Vec<(String, f64)>,
    pub energy: BTreeMap<String, f64>,
}

impl MatPPA {
    pub fn footprint_um2(&self) -> f64 {
        self.width_um * self.height_um
    }

    pub fn periphery_leakage_w(&self) -> f64 {
        self.periphery.values().map(|p| p.leakage_w).sum()
    }

    pub fn periphery_area_um2(&self) -> f64 {
        self.periphery.values().map(|p| p.area_um2).sum()
    }
}

/// Builds a planar mat: the array with row circuits on one side and column
/// circuits below.
pub fn build_mat(design: &MatDesign, tech: &TechNode) -> Result<MatPPA> {
    let core = mat_core(design, tech, &LineMods::NONE)?;
    let w = core.array_w + core.row_area / core.array_h;
    let h = core.array_h + core.col_area / core.array_w;
    let array = core.array_w * core.array_h;
    let (feol, beol) = if design.cell.is_beol { (w * h - array, array) } else { (w * h, 0.0) };
    Ok(core.finish(w, h, 1, feol, beol))
}

/// Row interval and row count of a refreshing mat: rows are refreshed one
/// after another so the whole mat is covered once per derated retention.
pub fn refresh_params(mat: &MatPPA, derate: f64) -> Result<(f64, usize)> {
    if !mat.refresh.needs {
        return Err(Error::invalid("mat does not need refresh"));
    }
    if !(derate > 0.0 && derate <= 1.0) {
        return Err(Error::invalid(format!("refresh derating must be in (0, 1], got {derate}")));
    }
    Ok((derate * mat.refresh.t_retention_s / mat.refresh.n_rows as f64, mat.refresh.n_rows))
}

/// Changes to the lines made by stacking: fold factors along each axis and
/// extra series RC at the driven end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LineMods {
    pub wl_fold: f64,
    pub bl_fold: f64,
    pub wl_extra: (f64, f64),
    pub bl_extra: (f64, f64),
}

impl LineMods {
    pub const NONE: LineMods = LineMods { wl_fold: 1.0, bl_fold: 1.0, wl_extra: (0.0, 0.0), bl_extra: (0.0, 0.0) };
}

/// Electrical result before placement.
#[derive(Debug, Clone)]
pub(crate) struct MatCore {
    pub array_w: f64,
    pub array_h: f64,
    pub row_area: f64,
    pub col_area: f64,
    t_read: f64,
    t_write: f64,
    e_read: f64,
    e_write: f64,
    e_refresh_row: f64,
    cell_leakage: f64,
    output_bits: usize,
    refresh: RefreshInfo,
    periphery: BTreeMap<String, PeripheralPPA>,
    read_path: Vec<(String, f64)>,
    write_path: Vec<(String, f64)>,
    energy: BTreeMap<String, f64>,
}

impl MatCore {
    pub fn finish(self, width_um: f64, height_um: f64, tiers: usize, area_feol_um2: f64, area_beol_um2: f64) -> MatPPA {
        let periph_leak: f64 = self.periphery.values().map(|p| p.leakage_w).sum();
        MatPPA {
            area_feol_um2,
            area_beol_um2,
            width_um,
            height_um,
            tiers,
            t_read_s: self.t_read,
            t_write_s: self.t_write,
            e_read_j: self.e_read,
            e_write_j: self.e_write,
            e_refresh_row_j: self.e_refresh_row,
            leakage_w: periph_leak + self.cell_leakage,
            cell_leakage_w: self.cell_leakage,
            output_bits: self.output_bits,
            refresh: self.refresh,
            periphery: self.periphery,
            read_path: self.read_path,
            write_path: self.write_path,
            energy: self.energy,
        }
    }
}

/// Per-cell loading of the lines. Gain cells have separate read and write
/// lines; other cells share one wordline and one bitline.
struct CellLoads {
    wl_read: f64,
    wl_write: f64,
    bl_read: f64,
    bl_write: f64,
}

fn cell_loads(cell: &CellModel, tech: &TechNode) -> CellLoads {
    let w = cell.write_device;
    let r = cell.read_device;
    let dw = tech.device(w.role);
    let dr = tech.device(r.role);
    match cell.kind {
        CellKind::Sram6t => {
            let wl = 2.0 * dw.c_gate_per_um * w.width_um;
            let bl = dw.c_gd_per_um * w.width_um;
            CellLoads { wl_read: wl, wl_write: wl, bl_read: bl, bl_write: bl }
        }
        CellKind::Edram1t1c | CellKind::SttMram => {
            let wl = dw.c_gate_per_um * w.width_um;
            let bl = dw.c_gd_per_um * w.width_um;
            CellLoads { wl_read: wl, wl_write: wl, bl_read: bl, bl_write: bl }
        }
        CellKind::Gc2tDg | CellKind::Gc2tCaa => CellLoads {
            wl_read: dr.c_gs_per_um * r.width_um,
            wl_write: (dw.c_gate_per_um + dw.c_gs_per_um) * w.width_um,
            bl_read: dr.c_gd_per_um * r.width_um,
            bl_write: dw.c_gd_per_um * w.width_um,
        },
    }
}

/// One line: total capacitance the driver sees and its distributed delay.
#[derive(Debug, Clone, Copy)]
struct Line {
    c_total: f64,
    delay: f64,
}

fn line(r_wire: f64, c_wire: f64, c_cells: f64, fold: f64, extra: (f64, f64)) -> Line {
    // Folded halves sit on different tiers and are driven in parallel.
    let c_piece = (c_wire + c_cells) / fold;
    let r_piece = r_wire / fold;
    let (r_x, c_x) = extra;
    Line { c_total: c_wire + c_cells + c_x * fold, delay: r_x * (c_piece + 0.5 * c_x) + 0.5 * r_piece * c_piece }
}

pub(crate) fn mat_core(d: &MatDesign, tech: &TechNode, mods: &LineMods) -> Result<MatCore> {
    d.validate()?;
    let cell = &d.cell;
    let kind = cell.kind;
    let u = UnitInverter::new(tech);
    let model = CompactModel::for_tech(tech);
    let vdd = tech.vdd;
    let vs = tech.sense_voltage;
    let local = tech.layer(LayerUse::Local);
    let inter = tech.layer(LayerUse::Intermediate);

    let rows = d.physical_rows();
    let cols = d.physical_cols();
    let array_w = cols as f64 * cell.width_um();
    let array_h = rows as f64 * cell.height_um();
    let out_bits = d.physical_output_bits();
    let n_sa = cols / d.sa_mux;
    let loads = cell_loads(cell, tech);
    let seg = d.wl_segments as f64;
    let row_bits = log2_exact(rows.next_power_of_two()).unwrap_or(0).max(1) as usize;

    let seg_len = array_w / seg;
    let wl = |c_cell: f64| {
        line(local.r_per_um * seg_len, local.c_per_um * seg_len, c_cell * cols as f64 / seg, mods.wl_fold, mods.wl_extra)
    };
    let bl = |c_cell: f64| {
        line(local.r_per_um * array_h, local.c_per_um * array_h, c_cell * rows as f64, mods.bl_fold, mods.bl_extra)
    };
    let wl_r = wl(loads.wl_read);
    let wl_w = wl(loads.wl_write);
    let bl_r = bl(loads.bl_read);
    let bl_w = bl(loads.bl_write);

    let mut periph: BTreeMap<String, PeripheralPPA> = BTreeMap::new();
    let mut row_area = 0.0;
    let mut col_area = 0.0;
    let mut add = |name: &str, ppa: PeripheralPPA, row_side: bool| -> PeripheralPPA {
        if row_side {
            row_area += ppa.area_um2;
        } else {
            col_area += ppa.area_um2;
        }
        periph.insert(name.to_string(), ppa);
        ppa
    };
    let per_row = |c: f64| PeripheralParams::single(1, c).replicated(rows * d.wl_segments, d.wl_segments);

    // Boosted wordlines swing between the hold and boost rails.
    let boosted = kind.is_charge_cell();
    let wl_swing = if boosted { cell.v_boost - cell.v_hold } else { vdd };

    // Row path. Segmented wordlines add a global line on an upper layer that
    // the decoder drives, with a local driver per segment.
    let global_wl = |c_seg_in: f64| -> f64 {
        if d.wl_segments > 1 {
            inter.c_per_um * array_w + seg * c_seg_in
        } else {
            c_seg_in
        }
    };
    let mut t_read_row;
    let mut t_write_row;
    let mut read_path = Vec::new();
    let mut write_path = Vec::new();
    match kind {
        CellKind::Gc2tDg | CellKind::Gc2tCaa => {
            // One decoder selects the row for both the read driver and the
            // write level shifter.
            let tri = add("rwl_driver", peripheral_ppa(PeripheralKind::TristateWlDriver, &per_row(wl_r.c_total), tech)?, true);
            let ls_in = tech.level_shifter_width_factor * u.c_in;
            let ls = add(
                "wwl_level_shifter",
                peripheral_ppa(PeripheralKind::LevelShifter, &per_row(wl_w.c_total).with_swing(wl_swing), tech)?,
                true,
            );
            let dec = add("decoder", peripheral_ppa(PeripheralKind::RowDecoder, &PeripheralParams::single(row_bits, global_wl(u.c_in + ls_in)), tech)?, true);
            read_path.push(("decoder".into(), dec.delay_s));
            read_path.push(("wl_driver".into(), tri.delay_s));
            write_path.push(("decoder".into(), dec.delay_s));
            write_path.push(("level_shifter".into(), ls.delay_s));
            t_read_row = dec.delay_s + tri.delay_s;
            t_write_row = dec.delay_s + ls.delay_s;
        }
        CellKind::Edram1t1c => {
            let ls_in = tech.level_shifter_width_factor * u.c_in;
            let ls = add(
                "wl_level_shifter",
                peripheral_ppa(PeripheralKind::LevelShifter, &per_row(wl_r.c_total).with_swing(wl_swing), tech)?,
                true,
            );
            let dec = add("decoder", peripheral_ppa(PeripheralKind::RowDecoder, &PeripheralParams::single(row_bits, global_wl(ls_in)), tech)?, true);
            for path in [&mut read_path, &mut write_path] {
                path.push(("decoder".into(), dec.delay_s));
                path.push(("level_shifter".into(), ls.delay_s));
            }
            t_read_row = dec.delay_s + ls.delay_s;
            t_write_row = t_read_row;
        }
        CellKind::Sram6t | CellKind::SttMram => {
            let (dec_load, seg_drv) = if d.wl_segments > 1 {
                let p = per_row(wl_r.c_total);
                let drv = peripheral_ppa(PeripheralKind::RowDecoder, &PeripheralParams { inputs: 1, ..p }, tech)?;
                (global_wl(u.c_in), Some(drv))
            } else {
                (wl_r.c_total, None)
            };
            let dec = add("decoder", peripheral_ppa(PeripheralKind::RowDecoder, &PeripheralParams::single(row_bits, dec_load), tech)?, true);
            let mut t = dec.delay_s;
            for path in [&mut read_path, &mut write_path] {
                path.push(("decoder".into(), dec.delay_s));
            }
            if let Some(s) = seg_drv {
                // A one-bit decoder is a buffered pair; half of it per segment.
                let s = PeripheralPPA { area_um2: s.area_um2 / 2.0, leakage_w: s.leakage_w / 2.0, dynamic_energy_j: s.dynamic_energy_j, ..s };
                add("segment_driver", s, true);
                t += s.delay_s;
                for path in [&mut read_path, &mut write_path] {
                    path.push(("segment_driver".into(), s.delay_s));
                }
            }
            t_read_row = t;
            t_write_row = t;
        }
    }
    read_path.push(("wordline".into(), wl_r.delay));
    write_path.push(("wordline".into(), wl_w.delay));
    t_read_row += wl_r.delay;
    t_write_row += wl_w.delay;

    // Bitline development.
    let bl_rc_read = bl_r.delay;
    let t_develop = match kind {
        CellKind::Sram6t => {
            let dev = tech.device(cell.read_device.role);
            // Access and pull-down in series.
            let i = 0.5 * model.current(dev, cell.read_device.width_um, cell.read_voltage, vdd);
            bl_r.c_total * vs / i
        }
        CellKind::Edram1t1c => {
            let c_sn = cell.c_sn.as_ref().map(|c| c.nominal()).unwrap_or(0.0);
            let signal = (cell.levels.v1 - 0.5 * vdd) * c_sn / (c_sn + bl_r.c_total);
            if signal < vs {
                return Err(Error::SenseMargin(format!(
                    "charge-sharing signal {:.1} mV below sense threshold {:.1} mV with {rows} rows",
                    signal * 1e3,
                    vs * 1e3
                )));
            }
            let dev = tech.device(cell.write_device.role);
            let i = model.current(dev, cell.write_device.width_um, cell.v_boost - 0.5 * vdd, 0.5 * vdd);
            let r = 0.5 * vdd / i;
            SHARE_SETTLE * r * c_sn * bl_r.c_total / (c_sn + bl_r.c_total)
        }
        CellKind::SttMram => {
            let (_, r_off) = cell.r_on_r_off.unwrap_or((1.0, 1.0));
            let dev = tech.device(cell.read_device.role);
            let r_acc = dev.r_on_per_um / cell.read_device.width_um;
            let i = cell.read_voltage / (r_off + r_acc);
            bl_r.c_total * vs / i
        }
        CellKind::Gc2tDg | CellKind::Gc2tCaa => {
            let dev = tech.device(cell.read_device.role);
            let w = cell.read_device.width_um;
            let i_read = model.current(dev, w, cell.levels.v1, vdd);
            // Unselected cells hold their source at vdd; once the bitline has
            // dropped by the sense swing they conduct backwards.
            let i_unsel = model.current(dev, w, cell.levels.v1 - vdd + vs, vs);
            let budget = cell.sense_leakage_budget;
            if (rows - 1) as f64 * i_unsel >= budget * i_read {
                return Err(Error::SenseMargin(format!(
                    "{} unselected rows leak {:.3e} A against {:.3e} A read current (budget {budget})",
                    rows - 1,
                    (rows - 1) as f64 * i_unsel,
                    i_read
                )));
            }
            bl_r.c_total * vs / i_read
        }
    };
    read_path.push(("bitline".into(), t_develop + bl_rc_read));

    // Column circuits.
    let sa_kind = if kind == CellKind::SttMram { PeripheralKind::SenseAmpCurrent } else { PeripheralKind::SenseAmpVoltage };
    let c_sa_in = 2.0 * u.c_in;
    let sa = add("sense_amp", peripheral_ppa(sa_kind, &PeripheralParams::single(1, c_sa_in).replicated(n_sa, n_sa), tech)?, false);
    let sa_mux = add(
        "sa_mux",
        peripheral_ppa(PeripheralKind::Mux, &PeripheralParams::single(d.sa_mux, c_sa_in).replicated(n_sa, n_sa), tech)?,
        false,
    );
    let out_mux = add(
        "output_mux",
        peripheral_ppa(PeripheralKind::Mux, &PeripheralParams::single(d.bl_mux, 4.0 * u.c_in).replicated(out_bits, out_bits), tech)?,
        false,
    );
    // Gain cells drive the write bitline separately.
    let (pre_count, wd_count) = if kind.is_gain_cell() { (cols, cols) } else { (cols, 0) };
    let pre = add(
        "precharge_write_driver",
        peripheral_ppa(PeripheralKind::PrechargerWriteDriver, &PeripheralParams::single(1, bl_r.c_total).replicated(pre_count, pre_count), tech)?,
        false,
    );
    let wbl_drv = if wd_count > 0 {
        Some(add(
            "wbl_driver",
            peripheral_ppa(PeripheralKind::PrechargerWriteDriver, &PeripheralParams::single(1, bl_w.c_total).replicated(wd_count, out_bits), tech)?,
            false,
        ))
    } else {
        None
    };
    read_path.push(("sa_mux".into(), sa_mux.delay_s));
    read_path.push(("sense_amp".into(), sa.delay_s));
    read_path.push(("output_mux".into(), out_mux.delay_s));
    let t_read = t_read_row + t_develop + bl_rc_read + sa_mux.delay_s + sa.delay_s + out_mux.delay_s;

    // Write.
    let wd = wbl_drv.unwrap_or(pre);
    let t_bl_write = wd.delay_s + bl_w.delay;
    let t_cell = match kind {
        CellKind::Sram6t => {
            let dev = tech.device(cell.write_device.role);
            stage_delay(dev.r_on_per_um / cell.write_device.width_um, 2.0 * dev.c_gate_per_um * cell.write_device.width_um, u.slew_s)
        }
        CellKind::SttMram => cell.write_pulse_s.unwrap_or(0.0),
        _ => cell.access_time_s.unwrap_or(0.0),
    };
    write_path.push(("bitline_driver".into(), t_bl_write));
    write_path.push(("cell".into(), t_cell));
    let t_write = t_write_row.max(t_bl_write) + t_cell;

    // Energy.
    let mut energy = BTreeMap::new();
    let v2 = vdd * vdd;
    let row_dyn = |names: &[&str], periph: &BTreeMap<String, PeripheralPPA>| -> f64 {
        names.iter().filter_map(|n| periph.get(*n)).map(|p| p.dynamic_energy_j).sum()
    };
    let (read_rows, write_rows): (&[&str], &[&str]) = match kind {
        CellKind::Gc2tDg | CellKind::Gc2tCaa => (&["decoder", "rwl_driver"], &["decoder", "wwl_level_shifter"]),
        CellKind::Edram1t1c => (&["decoder", "wl_level_shifter"], &["decoder", "wl_level_shifter"]),
        _ => (&["decoder", "segment_driver"], &["decoder", "segment_driver"]),
    };
    let wl_energy = |c: f64| if boosted { c * (cell.v_boost * cell.v_boost + cell.v_hold * cell.v_hold) } else { c * v2 };
    let refs = if d.folded_bitline { d.reference_rows as f64 } else { 0.0 };
    let e_rwl = if kind.is_gain_cell() { wl_r.c_total * seg * v2 } else { wl_energy(wl_r.c_total * seg) };
    let e_ref = refs * e_rwl;
    let e_bl_read = match kind {
        CellKind::Sram6t | CellKind::Gc2tDg | CellKind::Gc2tCaa => cols as f64 * bl_r.c_total * vdd * vs,
        CellKind::Edram1t1c => cols as f64 * bl_r.c_total * 0.5 * v2,
        CellKind::SttMram => cols as f64 * bl_r.c_total * cell.read_voltage * cell.read_voltage,
    };
    let e_col_read = sa.dynamic_energy_j + sa_mux.dynamic_energy_j + out_mux.dynamic_energy_j;
    // Precharge devices toggle on every read; the write-driver half does not.
    let e_pre_read = 0.5 * pre.dynamic_energy_j;
    let e_read_base = row_dyn(read_rows, &periph) + e_rwl + e_ref + e_bl_read + e_col_read + e_pre_read;

    let bits = out_bits as f64;
    let e_cell_bit = match kind {
        CellKind::SttMram => {
            let (r_on, r_off) = cell.r_on_r_off.unwrap_or((1.0, 1.0));
            let dev = tech.device(cell.write_device.role);
            let r_acc = dev.r_on_per_um / cell.write_device.width_um;
            let i_w = vdd / (0.5 * (r_on + r_off) + r_acc);
            vdd * i_w * cell.write_pulse_s.unwrap_or(0.0)
        }
        _ => cell.c_sn.as_ref().map(|c| c.nominal() * cell.levels.v1 * vdd).unwrap_or(0.0),
    };
    let e_wwl = wl_energy(wl_w.c_total * seg);
    let wd_one = wd.dynamic_energy_j / if wbl_drv.is_some() { bits.max(1.0) } else { cols as f64 };
    let write_energy = |n: f64| -> f64 {
        let rest = cols as f64 - n;
        let e_bl = n * bl_w.c_total * v2
            + match kind {
                CellKind::Sram6t => rest * bl_w.c_total * vdd * vs,
                CellKind::Edram1t1c => rest * bl_w.c_total * 0.5 * v2,
                _ => 0.0,
            };
        row_dyn(write_rows, &periph) + e_wwl + e_bl + n * (e_cell_bit + wd_one)
    };
    let e_write = write_energy(bits);
    let e_write_row = write_energy(cols as f64);
    let e_read = if cell.destructive_read { e_read_base + e_write_row } else { e_read_base };
    let e_refresh_row = if cell.needs_refresh { e_read_base + e_write_row } else { 0.0 };
    if boosted {
        energy.insert("wl_boost".into(), wl_w.c_total * seg * cell.v_boost * cell.v_boost);
        energy.insert("wl_hold".into(), wl_w.c_total * seg * cell.v_hold * cell.v_hold);
    }
    energy.insert("read_wordline".into(), e_rwl + e_ref);
    energy.insert("read_bitline".into(), e_bl_read);
    energy.insert("read_columns".into(), e_col_read);
    energy.insert("write_cells".into(), bits * e_cell_bit);
    if cell.destructive_read {
        energy.insert("restore".into(), e_write_row);
    }

    // Standby leakage of the array.
    let per_cell = match kind {
        CellKind::Sram6t => {
            let n = &tech.logic_n;
            let p = &tech.logic_p;
            let w = cell.write_device.width_um;
            vdd * (2.0 * n.i_off_per_um * w + p.i_off_per_um * w * tech.pn_ratio)
        }
        CellKind::Edram1t1c => {
            let dev = tech.device(cell.write_device.role);
            0.5 * vdd * model.current(dev, cell.write_device.width_um, cell.v_hold, 0.5 * vdd)
        }
        CellKind::SttMram => 0.0,
        CellKind::Gc2tDg | CellKind::Gc2tCaa => {
            let dev = tech.device(cell.read_device.role);
            vdd * model.current(dev, cell.read_device.width_um, cell.levels.v1 - vdd, vdd)
        }
    };
    let cell_leakage = per_cell * (rows * cols) as f64;

    let refresh = RefreshInfo {
        needs: cell.needs_refresh,
        t_retention_s: cell.retention_s.map(|r| r * cell.retention_derating).unwrap_or(f64::INFINITY),
        n_rows: d.n_rows,
    };
    Ok(MatCore {
        array_w,
        array_h,
        row_area,
        col_area,
        t_read,
        t_write,
        e_read,
        e_write,
        e_refresh_row,
        cell_leakage,
        output_bits: d.output_bits(),
        refresh,
        periphery: periph,
        read_path,
        write_path,
        energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cells::load_cell;
    use crate::tech::load_tech;

    fn mat(cell: &str, node: &str, r: usize, c: usize) -> (MatDesign, TechNode) {
        let t = load_tech(node).unwrap();
        let cell = load_cell(cell, &t).unwrap();
        (MatDesign::new(cell, r, c), t)
    }

    #[test]
    fn rejects_degenerate() {
        let (mut d, t) = mat("sram_7nm", "7nm", 32, 32);
        d.n_rows = 1;
        d.n_cols = 1;
        assert!(matches!(build_mat(&d, &t), Err(Error::InvalidDesign(_))));
        let (mut d, t) = mat("gc2t_dg_7nm", "7nm", 128, 128);
        d.sa_mux = 2;
        assert!(build_mat(&d, &t).is_err());
    }

    #[test]
    fn sram_cell_leakage_fraction() {
        let (d, t) = mat("sram_7nm", "7nm", 256, 256);
        let m = build_mat(&d, &t).unwrap();
        let f = m.cell_leakage_w / m.leakage_w;
        assert!((0.80..=0.92).contains(&f), "fraction {f}");
    }

    #[test]
    fn refresh_interval() {
        let (d, t) = mat("gc2t_dg_7nm", "7nm", 128, 128);
        let mut m = build_mat(&d, &t).unwrap();
        m.refresh.t_retention_s = 0.315;
        let (iv, n) = refresh_params(&m, 1.0).unwrap();
        assert_eq!(n, 128);
        assert!((iv - 2.4609375e-3).abs() < 1e-12);
        let (half, _) = refresh_params(&m, 0.5).unwrap();
        assert!((half - iv / 2.0).abs() < 1e-15);
        let (d, t) = mat("sram_7nm", "7nm", 128, 128);
        assert!(refresh_params(&build_mat(&d, &t).unwrap(), 1.0).is_err());
    }

    #[test]
    fn area_covers_cells() {
        for cell in ["sram_7nm", "edram_7nm", "sttmram_7nm", "gc2t_dg_7nm"] {
            let (d, t) = mat(cell, "7nm", 256, 512);
            let m = build_mat(&d, &t).unwrap();
            assert!(m.area_feol_um2 + m.area_beol_um2 >= d.cell.area_um2 * d.data_bits() as f64);
            assert_eq!(m.area_beol_um2 > 0.0, d.cell.is_beol, "{cell}");
        }
    }

    #[test]
    fn edram_read_restores() {
        let (d, t) = mat("edram_7nm", "7nm", 128, 256);
        let m = build_mat(&d, &t).unwrap();
        assert!(m.energy.contains_key("restore"));
        let (d, t) = mat("gc2t_dg_7nm", "7nm", 128, 256);
        let m = build_mat(&d, &t).unwrap();
        assert!(!m.energy.contains_key("restore"));
    }
}
