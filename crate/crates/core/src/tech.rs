// SPDX-License-Identifier: Apache-2.0

//! Technology nodes: transistor roles, metal stack, MIVs and the standard
//! cell constants the circuit models build on.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ConfigDocument;
use crate::error::{ensure_positive, Error, Result};
use crate::num::Scalar;

const BOLTZMANN_EV: f64 = 8.617_333e-5;
const KELVIN: f64 = 273.15;

pub const BUILTIN_7NM: &str = include_str!("../data/tech/7nm.cfg");
pub const BUILTIN_3NM: &str = include_str!("../data/tech/3nm.cfg");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DeviceClass {
    FinFET,
    Nanosheet,
    #[serde(rename = "BEOL_AOS_DG")]
    BeolAosDg,
    #[serde(rename = "BEOL_AOS_CAA")]
    BeolAosCaa,
}

impl std::str::FromStr for DeviceClass {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "finfet" => Ok(Self::FinFET),
            "nanosheet" => Ok(Self::Nanosheet),
            "beol_aos_dg" | "dg" => Ok(Self::BeolAosDg),
            "beol_aos_caa" | "caa" => Ok(Self::BeolAosCaa),
            _ => Err(format!("unknown device class `{s}`")),
        }
    }
}

/// Transistor roles a node provides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum DeviceRole {
    LogicN,
    LogicP,
    AosWrite,
    AosRead,
    /// Low-leakage FEOL access device for 1T1C and 1T1MTJ cells.
    AccessLp,
}

impl DeviceRole {
    pub const ALL: [DeviceRole; 5] =
        [DeviceRole::LogicN, DeviceRole::LogicP, DeviceRole::AosWrite, DeviceRole::AosRead, DeviceRole::AccessLp];

    pub fn key_prefix(self) -> &'static str {
        match self {
            DeviceRole::LogicN => "LogicN",
            DeviceRole::LogicP => "LogicP",
            DeviceRole::AosWrite => "AOSWrite",
            DeviceRole::AosRead => "AOSRead",
            DeviceRole::AccessLp => "AccessLP",
        }
    }
}

impl std::str::FromStr for DeviceRole {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        DeviceRole::ALL
            .into_iter()
            .find(|r| r.key_prefix().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown device role `{s}`"))
    }
}

/// Per-micron device parameters. Currents are at the operating temperature
/// once a node is loaded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviceParams {
    /// A/um at vdd.
    pub i_on_per_um: f64,
    /// A/um, extrapolated to v_gs = 0.
    pub i_off_per_um: f64,
    pub ss_mv_per_dec: f64,
    pub vth: f64,
    /// F/um.
    pub c_gate_per_um: f64,
    pub c_gs_per_um: f64,
    pub c_gd_per_um: f64,
    /// ohm*um.
    pub r_on_per_um: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviceCaps {
    pub c_gate: f64,
    pub c_gs: f64,
    pub c_gd: f64,
}

impl DeviceCaps {
    pub fn total(&self) -> f64 {
        self.c_gate + self.c_gs + self.c_gd
    }
}

impl DeviceParams {
    fn validate(&self, role: DeviceRole) -> Result<()> {
        let name = role.key_prefix();
        ensure_positive(&format!("{name} IoffPerUm"), self.i_off_per_um)?;
        ensure_positive(&format!("{name} SubthresholdSwing"), self.ss_mv_per_dec)?;
        ensure_positive(&format!("{name} RonPerUm"), self.r_on_per_um)?;
        if self.i_on_per_um <= self.i_off_per_um {
            return Err(Error::design(format!("{name}: IonPerUm must exceed IoffPerUm")));
        }
        for (what, c) in [("GateCapPerUm", self.c_gate_per_um), ("ParasiticCgsPerUm", self.c_gs_per_um), ("ParasiticCgdPerUm", self.c_gd_per_um)] {
            if !(c >= 0.0) {
                return Err(Error::design(format!("{name}: {what} must be >= 0")));
            }
        }
        Ok(())
    }

    /// Applies an Arrhenius leakage multiplier and a kT-proportional swing
    /// between the reference and operating temperatures.
    pub fn at_temperature(&self, t_c: f64, t_ref_c: f64, ea_ev: f64) -> Self {
        let (t, t_ref) = (t_c + KELVIN, t_ref_c + KELVIN);
        let mult = (ea_ev / BOLTZMANN_EV * (1.0 / t_ref - 1.0 / t)).exp();
        Self { i_off_per_um: self.i_off_per_um * mult, ss_mv_per_dec: self.ss_mv_per_dec * t / t_ref, ..*self }
    }
}

/// Capacitances of a device of the given width.
pub fn device_caps(d: &DeviceParams, width_um: f64) -> Result<DeviceCaps> {
    ensure_positive("device width", width_um)?;
    Ok(DeviceCaps {
        c_gate: d.c_gate_per_um * width_um,
        c_gs: d.c_gs_per_um * width_um,
        c_gd: d.c_gd_per_um * width_um,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WireLayer<T = f64> {
    pub name: String,
    /// ohm/um.
    pub r_per_um: T,
    /// F/um.
    pub c_per_um: T,
    pub pitch_nm: T,
}

impl<T: Scalar> WireLayer<T> {
    pub fn new(name: impl Into<String>, r_per_um: T, c_per_um: T, pitch_nm: T) -> Result<Self> {
        for (what, v) in [("wire r_per_um", r_per_um), ("wire c_per_um", c_per_um), ("wire pitch", pitch_nm)] {
            ensure_positive(what, v.as_f64())?;
        }
        Ok(Self { name: name.into(), r_per_um, c_per_um, pitch_nm })
    }
}

/// Resistance and capacitance of `length_um` of wire on `layer`.
pub fn wire_rc<T: Scalar>(layer: &WireLayer<T>, length_um: T) -> Result<(T, T)> {
    if length_um < T::zero() || !length_um.is_finite() {
        return Err(Error::invalid(format!("wire length must be >= 0, got {length_um}")));
    }
    Ok((layer.r_per_um * length_um, layer.c_per_um * length_um))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MivParams {
    pub r_per_via: f64,
    pub c_per_um_height: f64,
    pub diameter_nm: f64,
    pub pitch_nm: f64,
    pub tier_height_um: f64,
}

/// Which metal layer a class of wire uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LayerUse {
    Local,
    Intermediate,
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TechNode {
    pub node_nm: u32,
    pub device_class: DeviceClass,
    pub aos_class: DeviceClass,
    pub vdd: f64,
    pub logic_n: DeviceParams,
    pub logic_p: DeviceParams,
    pub aos_write: DeviceParams,
    pub aos_read: DeviceParams,
    pub access_lp: DeviceParams,
    pub fin_or_sheet_pitch_nm: f64,
    pub gate_pitch_nm: f64,
    pub metal_pitch_nm: f64,
    pub std_cell_height_tracks: u32,
    /// Ordered local, intermediate, global.
    pub metal_layers: Vec<WireLayer>,
    pub htree_layer: usize,
    pub min_width_um: f64,
    pub pn_ratio: f64,
    pub input_slew_s: f64,
    pub v_knee: f64,
    pub temperature_c: f64,
    pub ref_temperature_c: f64,
    pub leakage_ea_ev: f64,
    pub sense_voltage: f64,
    pub sa_delay_s: f64,
    pub miv: MivParams,
    pub level_shifter_width_factor: f64,
    pub current_sa_factor: f64,
}

impl TechNode {
    pub fn device(&self, role: DeviceRole) -> &DeviceParams {
        match role {
            DeviceRole::LogicN => &self.logic_n,
            DeviceRole::LogicP => &self.logic_p,
            DeviceRole::AosWrite => &self.aos_write,
            DeviceRole::AosRead => &self.aos_read,
            DeviceRole::AccessLp => &self.access_lp,
        }
    }

    pub fn layer(&self, which: LayerUse) -> &WireLayer {
        let n = self.metal_layers.len();
        match which {
            LayerUse::Local => &self.metal_layers[0],
            LayerUse::Intermediate => &self.metal_layers[n.min(2) - 1],
            LayerUse::Global => &self.metal_layers[n - 1],
        }
    }

    pub fn htree(&self) -> &WireLayer {
        &self.metal_layers[self.htree_layer]
    }

    /// Standard-cell row height in um.
    pub fn cell_height_um(&self) -> f64 {
        self.std_cell_height_tracks as f64 * self.metal_pitch_nm * 1e-3
    }

    /// Builds a node from a parsed document. Device values in the document
    /// are at the reference temperature.
    pub fn from_document(doc: &ConfigDocument) -> Result<Self> {
        let ctx = "technology file";
        let node_nm = doc.require_usize("ProcessNode", ctx)?;
        if node_nm == 0 {
            return Err(doc.invalid("ProcessNode", "must be > 0"));
        }
        let parse_class = |key: &str| -> Result<DeviceClass> {
            doc.require_text(key, ctx)?.parse().map_err(|m: String| doc.invalid(key, m))
        };
        let device_class = parse_class("DeviceClass")?;
        let aos_class = parse_class("AOSDeviceClass")?;
        let temperature_c = doc.get_f64("Temperature")?.unwrap_or(85.0);
        let ref_temperature_c = doc.get_f64("ReferenceTemperature")?.unwrap_or(25.0);
        let leakage_ea_ev = doc.get_f64("LeakageActivationEnergy")?.unwrap_or(0.3);

        let device = |role: DeviceRole| -> Result<DeviceParams> {
            let p = role.key_prefix();
            let k = |param: &str| format!("{p}_{param}");
            let d = DeviceParams {
                i_on_per_um: doc.require_positive(&k("IonPerUm"), ctx)?,
                i_off_per_um: doc.require_positive(&k("IoffPerUm"), ctx)?,
                ss_mv_per_dec: doc.require_positive(&k("SubthresholdSwing"), ctx)?,
                vth: doc.require_f64(&k("Vth"), ctx)?,
                c_gate_per_um: doc.require_non_negative(&k("GateCapPerUm"), ctx)?,
                c_gs_per_um: doc.require_non_negative(&k("ParasiticCgsPerUm"), ctx)?,
                c_gd_per_um: doc.require_non_negative(&k("ParasiticCgdPerUm"), ctx)?,
                r_on_per_um: doc.require_positive(&k("RonPerUm"), ctx)?,
            };
            d.validate(role)?;
            Ok(d.at_temperature(temperature_c, ref_temperature_c, leakage_ea_ev))
        };

        let layer_names: Vec<String> =
            doc.require_text("MetalLayers", ctx)?.split_whitespace().map(str::to_string).collect();
        if layer_names.is_empty() {
            return Err(doc.invalid("MetalLayers", "at least one metal layer is required"));
        }
        let metal_layers = layer_names
            .iter()
            .map(|name| {
                WireLayer::new(
                    name.clone(),
                    doc.require_positive(&format!("WireResistancePerUm_{name}"), ctx)?,
                    doc.require_positive(&format!("WireCapacitancePerUm_{name}"), ctx)?,
                    doc.require_positive(&format!("WirePitch_{name}"), ctx)?,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let htree_layer = match doc.get_text("HtreeLayer") {
            None => metal_layers.len().min(2) - 1,
            Some(name) => layer_names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| doc.invalid("HtreeLayer", format!("`{name}` is not in MetalLayers")))?,
        };

        let tech = TechNode {
            node_nm: node_nm as u32,
            device_class,
            aos_class,
            vdd: doc.require_positive("Vdd", ctx)?,
            logic_n: device(DeviceRole::LogicN)?,
            logic_p: device(DeviceRole::LogicP)?,
            aos_write: device(DeviceRole::AosWrite)?,
            aos_read: device(DeviceRole::AosRead)?,
            access_lp: device(DeviceRole::AccessLp)?,
            fin_or_sheet_pitch_nm: doc.require_positive("FinPitch", ctx)?,
            gate_pitch_nm: doc.require_positive("GatePitch", ctx)?,
            metal_pitch_nm: doc.require_positive("MetalPitch", ctx)?,
            std_cell_height_tracks: doc.require_usize("StdCellHeightTracks", ctx)?.max(1) as u32,
            metal_layers,
            htree_layer,
            min_width_um: doc.require_positive("MinTransistorWidth", ctx)?,
            pn_ratio: doc.require_positive("PnRatio", ctx)?,
            input_slew_s: doc.require_non_negative("InputSlew", ctx)?,
            v_knee: doc.require_positive("DrainKneeVoltage", ctx)?,
            temperature_c,
            ref_temperature_c,
            leakage_ea_ev,
            sense_voltage: doc.require_positive("SenseVoltage", ctx)?,
            sa_delay_s: doc.require_positive("SenseAmpDelay", ctx)?,
            miv: MivParams {
                r_per_via: doc.require_positive("MIVResistance", ctx)?,
                c_per_um_height: doc.require_positive("MIVCapacitancePerUm", ctx)?,
                diameter_nm: doc.require_positive("MIVDiameter", ctx)?,
                pitch_nm: doc.require_positive("MIVPitch", ctx)?,
                tier_height_um: doc.require_positive("TierHeight", ctx)?,
            },
            level_shifter_width_factor: doc.get_f64("LevelShifterWidthFactor")?.unwrap_or(2.0),
            current_sa_factor: doc.get_f64("CurrentSenseAmpFactor")?.unwrap_or(4.0),
        };
        ensure_positive("LevelShifterWidthFactor", tech.level_shifter_width_factor)?;
        if tech.current_sa_factor < 1.0 {
            return Err(doc.invalid("CurrentSenseAmpFactor", "must be >= 1"));
        }
        Ok(tech)
    }
}

/// Directory holding user-editable data files, if overridden.
pub fn data_dir() -> Option<PathBuf> {
    std::env::var_os("NSCACHE_DATA_DIR").map(PathBuf::from)
}

fn builtin_node_text(id: &str) -> Option<(&'static str, &'static str)> {
    match id.trim().to_ascii_lowercase().as_str() {
        "7nm" | "7" => Some(("7nm.cfg", BUILTIN_7NM)),
        "3nm" | "3" => Some(("3nm.cfg", BUILTIN_3NM)),
        _ => None,
    }
}

/// Loads a node by catalog identifier (`7nm`, `3nm`) or from a file path.
pub fn load_tech(source: &str) -> Result<TechNode> {
    load_tech_with(source, None)
}

/// Like [`load_tech`] with an optional operating-temperature override.
pub fn load_tech_with(source: &str, temperature_c: Option<f64>) -> Result<TechNode> {
    let mut doc = if let Some((file, text)) = builtin_node_text(source) {
        match data_dir() {
            Some(dir) => ConfigDocument::load(&dir.join("tech").join(file))?,
            None => ConfigDocument::parse(text, None)?,
        }
    } else {
        let path = Path::new(source);
        if !path.exists() {
            return Err(Error::UnknownNode(source.to_string()));
        }
        ConfigDocument::load(path)?
    };
    if let Some(t) = temperature_c {
        doc.set("Temperature", Some("C"), &t.to_string())?;
    }
    TechNode::from_document(&doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_nodes_load() {
        let t7 = load_tech("7nm").unwrap();
        assert_eq!(t7.vdd, 0.7);
        assert_eq!(t7.device_class, DeviceClass::FinFET);
        let t3 = load_tech("3nm").unwrap();
        assert_eq!(t3.device_class, DeviceClass::Nanosheet);
        assert!(matches!(load_tech("5Å"), Err(Error::UnknownNode(_))));
    }

    #[test]
    fn wire_rc_matches_ring_bus_values() {
        let l = WireLayer::new("M7", 0.05f64, 0.2e-15, 80.0).unwrap();
        let (r, c) = wire_rc(&l, 1000.0).unwrap();
        assert!((r - 50.0).abs() < 1e-9);
        assert!((c - 200e-15).abs() < 1e-24);
        assert_eq!(wire_rc(&l, 0.0).unwrap(), (0.0, 0.0));
        assert!(wire_rc(&l, -1.0).is_err());
    }

    #[test]
    fn temperature_raises_leakage_and_swing() {
        let d = DeviceParams {
            i_on_per_um: 1e-3,
            i_off_per_um: 1e-10,
            ss_mv_per_dec: 60.0,
            vth: 0.3,
            c_gate_per_um: 1e-15,
            c_gs_per_um: 0.0,
            c_gd_per_um: 0.0,
            r_on_per_um: 1000.0,
        };
        let hot = d.at_temperature(85.0, 25.0, 0.3);
        assert!(hot.i_off_per_um / d.i_off_per_um > 6.0);
        assert!(hot.ss_mv_per_dec > 60.0);
        let same = d.at_temperature(25.0, 25.0, 0.3);
        assert!((same.ss_mv_per_dec - 60.0).abs() < 1e-9);
        assert_eq!(same.i_off_per_um, d.i_off_per_um);
    }
}
