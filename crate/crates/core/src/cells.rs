// SPDX-License-Identifier: Apache-2.0

//! Memory bit-cells, the compact transistor model, and charge-integral
//! access and retention times.

use std::path::Path;

use serde::Serialize;

use crate::config::ConfigDocument;
use crate::error::{ensure_positive, Error, Result};
use crate::num::{integrate, QuadratureError, Scalar};
use crate::tech::{data_dir, DeviceParams, DeviceRole, TechNode};

pub const QUAD_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CellKind {
    #[serde(rename = "SRAM6T")]
    Sram6t,
    #[serde(rename = "EDRAM1T1C")]
    Edram1t1c,
    #[serde(rename = "STTMRAM")]
    SttMram,
    #[serde(rename = "GC2T_DG")]
    Gc2tDg,
    #[serde(rename = "GC2T_CAA")]
    Gc2tCaa,
}

impl CellKind {
    pub fn is_gain_cell(self) -> bool {
        matches!(self, CellKind::Gc2tDg | CellKind::Gc2tCaa)
    }

    pub fn is_charge_cell(self) -> bool {
        self.is_gain_cell() || self == CellKind::Edram1t1c
    }

    pub fn name(self) -> &'static str {
        match self {
            CellKind::Sram6t => "SRAM6T",
            CellKind::Edram1t1c => "EDRAM1T1C",
            CellKind::SttMram => "STTMRAM",
            CellKind::Gc2tDg => "GC2T_DG",
            CellKind::Gc2tCaa => "GC2T_CAA",
        }
    }
}

impl std::str::FromStr for CellKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "SRAM6T" | "SRAM" => Ok(Self::Sram6t),
            "EDRAM1T1C" | "EDRAM" => Ok(Self::Edram1t1c),
            "STTMRAM" | "STT_MRAM" | "MRAM" => Ok(Self::SttMram),
            "GC2T_DG" => Ok(Self::Gc2tDg),
            "GC2T_CAA" => Ok(Self::Gc2tCaa),
            _ => Err(format!("unknown cell type `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StoredLevelPair {
    pub v1: f64,
    pub v2: f64,
}

impl StoredLevelPair {
    pub fn new(v1: f64, v2: f64) -> Result<Self> {
        if !(v1 > v2 && v2 >= 0.0) {
            return Err(Error::invalid(format!("stored levels need v1 > v2 >= 0, got {v1}, {v2}")));
        }
        Ok(Self { v1, v2 })
    }
}

/// Storage-node capacitance, constant or piecewise linear in node voltage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SnCapacitance {
    Constant(f64),
    Table(Vec<(f64, f64)>),
}

impl SnCapacitance {
    pub fn at(&self, v: f64) -> f64 {
        match self {
            SnCapacitance::Constant(c) => *c,
            SnCapacitance::Table(pts) => {
                let first = pts[0];
                let last = pts[pts.len() - 1];
                if v <= first.0 {
                    return first.1;
                }
                if v >= last.0 {
                    return last.1;
                }
                let i = pts.partition_point(|p| p.0 <= v);
                let (a, b) = (pts[i - 1], pts[i]);
                a.1 + (b.1 - a.1) * (v - a.0) / (b.0 - a.0)
            }
        }
    }

    /// Nominal value used for line loading.
    pub fn nominal(&self) -> f64 {
        match self {
            SnCapacitance::Constant(c) => *c,
            SnCapacitance::Table(pts) => pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64,
        }
    }

    fn parse_table(s: &str) -> std::result::Result<Self, String> {
        let mut pts = Vec::new();
        for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            let (v, c) = item.split_once(':').ok_or_else(|| format!("expected `volts:farads`, got `{item}`"))?;
            let v: f64 = v.trim().parse().map_err(|_| format!("bad voltage `{v}`"))?;
            let c: f64 = c.trim().parse().map_err(|_| format!("bad capacitance `{c}`"))?;
            if !(c > 0.0) {
                return Err(format!("capacitance must be positive, got {c}"));
            }
            pts.push((v, c));
        }
        if pts.is_empty() {
            return Err("empty capacitance table".into());
        }
        if pts.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err("table voltages must be strictly increasing".into());
        }
        Ok(SnCapacitance::Table(pts))
    }
}

/// A transistor instance inside a cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellDevice {
    pub role: DeviceRole,
    pub width_um: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellModel {
    pub kind: CellKind,
    pub area_um2: f64,
    /// Width over height.
    pub aspect_ratio: f64,
    pub is_beol: bool,
    pub tiers_per_cell: u32,
    pub needs_refresh: bool,
    pub destructive_read: bool,
    pub v_boost: f64,
    pub v_hold: f64,
    pub c_sn: Option<SnCapacitance>,
    pub write_pulse_s: Option<f64>,
    pub r_on_r_off: Option<(f64, f64)>,
    /// `None` for static or non-volatile storage.
    pub retention_s: Option<f64>,
    pub retention_derating: f64,
    /// Write access time from the charge integral, for charge cells.
    pub access_time_s: Option<f64>,
    pub write_device: CellDevice,
    pub read_device: CellDevice,
    pub read_voltage: f64,
    pub levels: StoredLevelPair,
    /// Allowed ratio of unselected-row bitline leakage to read current.
    pub sense_leakage_budget: f64,
}

impl CellModel {
    pub fn width_um(&self) -> f64 {
        (self.area_um2 * self.aspect_ratio).sqrt()
    }

    pub fn height_um(&self) -> f64 {
        (self.area_um2 / self.aspect_ratio).sqrt()
    }

    fn validate(&self, vdd: f64) -> Result<()> {
        ensure_positive("cell area", self.area_um2)?;
        ensure_positive("cell aspect ratio", self.aspect_ratio)?;
        if self.kind.is_charge_cell() {
            if self.v_boost < vdd {
                return Err(Error::design(format!("v_boost {} below vdd {vdd}", self.v_boost)));
            }
            if self.v_hold > 0.0 {
                return Err(Error::design(format!("v_hold must be <= 0, got {}", self.v_hold)));
            }
        }
        if self.needs_refresh && !self.retention_s.is_some_and(|r| r.is_finite() && r > 0.0) {
            return Err(Error::design("refreshing cell needs a finite positive retention"));
        }
        if self.destructive_read && self.kind != CellKind::Edram1t1c {
            return Err(Error::design("only 1T1C cells have destructive reads"));
        }
        Ok(())
    }
}

/// Piecewise compact current model: exponential below threshold, a
/// saturating power law above it, times a drain-voltage factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompactModel {
    pub vdd: f64,
    pub v_knee: f64,
    pub alpha: f64,
}

impl CompactModel {
    pub fn for_tech(tech: &TechNode) -> Self {
        Self { vdd: tech.vdd, v_knee: tech.v_knee, alpha: 1.3 }
    }

    /// Gate-controlled current per um at unlimited drain bias.
    pub fn channel_per_um(&self, d: &DeviceParams, v_gs: f64) -> f64 {
        let ss = d.ss_mv_per_dec * 1e-3;
        if v_gs <= d.vth {
            return d.i_off_per_um * 10f64.powf(v_gs / ss);
        }
        let i_th = d.i_off_per_um * 10f64.powf(d.vth / ss);
        let span = (0.5 * (self.vdd - d.vth)).max(0.05);
        let x = (v_gs - d.vth) / span;
        let top = d.i_on_per_um.max(i_th);
        i_th + (top - i_th) * (1.0 - (-x.powf(self.alpha)).exp())
    }

    /// Current of a device of `width_um` at the given gate and drain bias.
    pub fn current(&self, d: &DeviceParams, width_um: f64, v_gs: f64, v_ds: f64) -> f64 {
        let drain = 1.0 - (-v_ds.max(0.0) / self.v_knee).exp();
        self.channel_per_um(d, v_gs) * width_um * drain
    }
}

/// Compact current of `d` (width 1 um) at `v_gs` while the storage node sits
/// at `v_sn` and the far terminal is driven to vdd.
pub fn compact_current(model: &CompactModel, d: &DeviceParams, v_gs: f64, v_sn: f64) -> f64 {
    model.current(d, 1.0, v_gs, model.vdd - v_sn)
}

/// Orders of magnitude of current swing for a gate swing at a given
/// subthreshold slope.
pub fn onoff_decades<T: Scalar>(delta_vg: T, ss_mv_per_dec: T) -> Result<T> {
    if !(ss_mv_per_dec > T::zero()) {
        return Err(Error::non_positive("subthreshold swing", ss_mv_per_dec.as_f64()));
    }
    Ok(delta_vg / (ss_mv_per_dec * T::lit(1e-3)))
}

/// Time to move a node between two voltages given node capacitance and
/// current as functions of node voltage.
pub fn charge_time<C, I>(c: C, i: I, v_from: f64, v_to: f64) -> Result<f64>
where
    C: Fn(f64) -> f64,
    I: Fn(f64) -> f64,
{
    let integrand = |v: f64| {
        let cur = i(v);
        if cur > 0.0 {
            c(v) / cur
        } else {
            f64::INFINITY
        }
    };
    let (lo, hi) = if v_from <= v_to { (v_from, v_to) } else { (v_to, v_from) };
    integrate(integrand, lo, hi, QUAD_REL_TOL).map_err(|e| match e {
        QuadratureError::NonFinite { at } => {
            Error::NonConvergent(format!("current vanishes at node voltage {at:.4} V"))
        }
        QuadratureError::NoConvergence => Error::NonConvergent("quadrature did not converge".into()),
    })
}

fn require_charge_cell(cell: &CellModel) -> Result<&SnCapacitance> {
    if !cell.kind.is_charge_cell() {
        return Err(Error::invalid(format!("{} is not a charge-storage cell", cell.kind.name())));
    }
    cell.c_sn.as_ref().ok_or_else(|| Error::invalid("charge cell without storage capacitance"))
}

/// Write access: charge the storage node from 0 to `v1` through the write
/// device with its gate boosted.
pub fn access_time(cell: &CellModel, levels: StoredLevelPair, tech: &TechNode) -> Result<f64> {
    let c = require_charge_cell(cell)?;
    let model = CompactModel::for_tech(tech);
    let d = tech.device(cell.write_device.role);
    let w = cell.write_device.width_um;
    charge_time(|v| c.at(v), |v| model.current(d, w, cell.v_boost - v, tech.vdd - v), 0.0, levels.v1)
}

/// Retention: leak the storage node from `v1` down to `v2` through the write
/// device held at `v_hold`.
pub fn retention_time(cell: &CellModel, levels: StoredLevelPair, tech: &TechNode) -> Result<f64> {
    let c = require_charge_cell(cell)?;
    let model = CompactModel::for_tech(tech);
    let d = tech.device(cell.write_device.role);
    let w = cell.write_device.width_um;
    charge_time(|v| c.at(v), |v| model.current(d, w, cell.v_hold, v), levels.v2, levels.v1)
}

pub const BUILTIN_CELLS: &[(&str, &str)] = &[
    ("sram_7nm", include_str!("../data/cells/sram_7nm.cfg")),
    ("sram_3nm", include_str!("../data/cells/sram_3nm.cfg")),
    ("edram_7nm", include_str!("../data/cells/edram_7nm.cfg")),
    ("sttmram_7nm", include_str!("../data/cells/sttmram_7nm.cfg")),
    ("gc2t_dg_7nm", include_str!("../data/cells/gc2t_dg_7nm.cfg")),
    ("gc2t_caa_3nm", include_str!("../data/cells/gc2t_caa_3nm.cfg")),
];

/// Loads a cell by catalog name (see [`BUILTIN_CELLS`]) or file path.
pub fn load_cell(source: &str, tech: &TechNode) -> Result<CellModel> {
    let doc = if let Some((name, text)) = BUILTIN_CELLS.iter().find(|(n, _)| n.eq_ignore_ascii_case(source)) {
        match data_dir() {
            Some(dir) => ConfigDocument::load(&dir.join("cells").join(format!("{name}.cfg")))?,
            None => ConfigDocument::parse(text, None)?,
        }
    } else {
        let path = Path::new(source);
        if !path.exists() {
            return Err(Error::invalid(format!("unknown cell `{source}`")));
        }
        ConfigDocument::load(path)?
    };
    cell_from_document(&doc, tech)
}

fn device_key(doc: &ConfigDocument, key: &str, default: DeviceRole) -> Result<DeviceRole> {
    match doc.get_text(key) {
        None => Ok(default),
        Some(s) => s.parse().map_err(|m: String| doc.invalid(key, m)),
    }
}

/// Builds a cell from its definition file, deriving storage capacitance,
/// write access time and retention for charge cells.
pub fn cell_from_document(doc: &ConfigDocument, tech: &TechNode) -> Result<CellModel> {
    let ctx = "cell file";
    let kind: CellKind =
        doc.require_text("MemoryCellType", ctx)?.parse().map_err(|m: String| doc.invalid("MemoryCellType", m))?;
    let area_um2 = doc.require_positive("CellArea", ctx)?;
    let aspect_ratio = doc.get_f64("CellAspectRatio")?.unwrap_or(1.0);
    let is_beol = doc.get_bool("IsBEOL")?.unwrap_or(kind.is_gain_cell());
    let tiers_per_cell = doc.get_usize("TiersPerCell")?.unwrap_or(if kind.is_gain_cell() { 2 } else { 1 }).max(1) as u32;

    let (default_write, default_read) = match kind {
        CellKind::Sram6t => (DeviceRole::LogicN, DeviceRole::LogicN),
        CellKind::Edram1t1c | CellKind::SttMram => (DeviceRole::AccessLp, DeviceRole::AccessLp),
        CellKind::Gc2tDg | CellKind::Gc2tCaa => (DeviceRole::AosWrite, DeviceRole::AosRead),
    };
    let write_device = CellDevice {
        role: device_key(doc, "WriteDevice", default_write)?,
        width_um: doc.get_f64("WriteDeviceWidth")?.unwrap_or(tech.min_width_um),
    };
    let read_device = CellDevice {
        role: device_key(doc, "ReadDevice", default_read)?,
        width_um: doc.get_f64("ReadDeviceWidth")?.unwrap_or(write_device.width_um),
    };
    ensure_positive("WriteDeviceWidth", write_device.width_um)?;
    ensure_positive("ReadDeviceWidth", read_device.width_um)?;

    let charge = kind.is_charge_cell();
    let v_boost = doc.get_f64("VBoost")?.unwrap_or(tech.vdd);
    let v_hold = doc.get_f64("VHold")?.unwrap_or(0.0);
    let read_voltage = doc.get_f64("ReadVoltage")?.unwrap_or(tech.vdd);

    let write_frac = doc.get_f64("WriteLevelFraction")?.unwrap_or(0.9);
    let sense_frac = doc.get_f64("SenseMarginFraction")?.unwrap_or(0.7);
    if !(write_frac > 0.0 && write_frac <= 1.0) {
        return Err(doc.invalid("WriteLevelFraction", "must be in (0, 1]"));
    }
    if !(sense_frac >= 0.0 && sense_frac < 1.0) {
        return Err(doc.invalid("SenseMarginFraction", "must be in [0, 1)"));
    }
    let v1 = write_frac * tech.vdd;
    let levels = StoredLevelPair::new(v1, sense_frac * v1)?;

    let c_sn = if !charge {
        None
    } else if let Some(table) = doc.get_text("SNCapacitanceTable") {
        Some(SnCapacitance::parse_table(table).map_err(|m| doc.invalid("SNCapacitanceTable", m))?)
    } else if let Some(c) = doc.get_f64("SNCapacitance")? {
        Some(SnCapacitance::Constant(ensure_positive("SNCapacitance", c)?))
    } else if kind.is_gain_cell() {
        let d = tech.device(read_device.role);
        let w = read_device.width_um;
        Some(SnCapacitance::Constant(w * (d.c_gate_per_um + d.c_gs_per_um + d.c_gd_per_um)))
    } else {
        return Err(Error::MissingKey { key: "SNCapacitance".into(), context: Some(ctx.into()) });
    };

    let write_pulse_s = doc.get_f64("WritePulse")?;
    let r_on_r_off = match (doc.get_f64("ResistanceOn")?, doc.get_f64("ResistanceOff")?) {
        (Some(a), Some(b)) => {
            ensure_positive("ResistanceOn", a)?;
            if b <= a {
                return Err(doc.invalid("ResistanceOff", "must exceed ResistanceOn"));
            }
            Some((a, b))
        }
        (None, None) => None,
        _ => return Err(doc.invalid("ResistanceOn", "ResistanceOn and ResistanceOff go together")),
    };
    if kind == CellKind::SttMram && (write_pulse_s.is_none() || r_on_r_off.is_none()) {
        return Err(Error::MissingKey { key: "WritePulse/ResistanceOn/ResistanceOff".into(), context: Some(ctx.into()) });
    }

    let mut cell = CellModel {
        kind,
        area_um2,
        aspect_ratio,
        is_beol,
        tiers_per_cell,
        needs_refresh: charge,
        destructive_read: kind == CellKind::Edram1t1c,
        v_boost,
        v_hold,
        c_sn,
        write_pulse_s,
        r_on_r_off,
        retention_s: None,
        retention_derating: doc.get_f64("RetentionDerating")?.unwrap_or(1.0),
        access_time_s: None,
        write_device,
        read_device,
        read_voltage,
        levels,
        sense_leakage_budget: doc.get_f64("SenseLeakageBudget")?.unwrap_or(0.1),
    };
    if !(cell.retention_derating > 0.0 && cell.retention_derating <= 1.0) {
        return Err(doc.invalid("RetentionDerating", "must be in (0, 1]"));
    }
    if charge {
        cell.access_time_s = Some(access_time(&cell, levels, tech)?);
        cell.retention_s = Some(match doc.get_f64("Retention")? {
            Some(r) => ensure_positive("Retention", r)?,
            None => retention_time(&cell, levels, tech)?,
        });
    } else if let Some(r) = doc.get_f64("Retention")? {
        cell.retention_s = Some(ensure_positive("Retention", r)?);
    }
    cell.validate(tech.vdd)?;
    Ok(cell)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_charge_closed_forms() {
        let t = charge_time(|_| 1e-15, |_| 1e-6, 0.0, 0.7).unwrap();
        assert!((t - 0.7e-9).abs() / 0.7e-9 < 1e-9);
        // 1 fF over 0.3 V at 1 aA.
        let t = charge_time(|_| 1e-15, |_| 1e-18, 0.4, 0.7).unwrap();
        assert!((t - 300.0).abs() / 300.0 < 1e-9);
    }

    #[test]
    fn zero_current_is_an_error() {
        let r = charge_time(|_| 1e-15, |v| 0.5 - v, 0.0, 0.7);
        assert!(matches!(r, Err(Error::NonConvergent(_))));
    }

    #[test]
    fn onoff_arithmetic() {
        assert!((onoff_decades(1.95f64, 65.0).unwrap() - 30.0).abs() < 1e-12);
        assert_eq!(onoff_decades(0.0, 65.0).unwrap(), 0.0);
        assert!((onoff_decades(0.6f32, 60.0).unwrap() - 10.0).abs() < 1e-5);
        assert!(onoff_decades(1.0, 0.0).is_err());
    }

    #[test]
    fn sn_table_interpolates() {
        let t = SnCapacitance::parse_table("0:1e-15, 1:3e-15").unwrap();
        assert!((t.at(0.5) - 2e-15).abs() < 1e-27);
        assert_eq!(t.at(-1.0), 1e-15);
        assert_eq!(t.at(2.0), 3e-15);
        assert!(SnCapacitance::parse_table("1:1e-15, 0:1e-15").is_err());
    }
}
