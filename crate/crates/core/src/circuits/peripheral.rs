// SPDX-License-Identifier: Apache-2.0

use serde::Serialize;

use super::chain::{drive_chain_styled, ChainStyle};
use super::{stage_delay, BufferChain, PeripheralPPA, UnitInverter};
use crate::error::{Error, Result};
use crate::tech::TechNode;

/// Driver chains inside level shifters never exceed this many inverters.
pub const LEVEL_SHIFTER_MAX_STAGES: usize = 10;
const PREDECODE_BITS: usize = 2;
const SA_DEVICES: usize = 12;
const ROW_STAGE_EFFORT: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PeripheralKind {
    RowDecoder,
    TristateWlDriver,
    LevelShifter,
    SenseAmpVoltage,
    SenseAmpCurrent,
    PrechargerWriteDriver,
    Comparator,
    OnehotEncoder,
    Mux,
}

impl PeripheralKind {
    pub const ALL: [PeripheralKind; 9] = [
        PeripheralKind::RowDecoder,
        PeripheralKind::TristateWlDriver,
        PeripheralKind::LevelShifter,
        PeripheralKind::SenseAmpVoltage,
        PeripheralKind::SenseAmpCurrent,
        PeripheralKind::PrechargerWriteDriver,
        PeripheralKind::Comparator,
        PeripheralKind::OnehotEncoder,
        PeripheralKind::Mux,
    ];
}

/// Sizing inputs for one peripheral block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeripheralParams {
    /// Address bits for decoders, compared bits for comparators, ways for
    /// encoders, degree for muxes. Unused elsewhere.
    pub inputs: usize,
    /// Capacitance each output drives, F.
    pub c_load: f64,
    pub count: usize,
    /// Instances switching per operation.
    pub active: usize,
    /// Output swing of a level shifter, V. Ignored by other kinds.
    pub swing_v: f64,
}

impl PeripheralParams {
    pub fn single(inputs: usize, c_load: f64) -> Self {
        Self { inputs, c_load, count: 1, active: 1, swing_v: 0.0 }
    }

    pub fn replicated(mut self, count: usize, active: usize) -> Self {
        self.count = count;
        self.active = active;
        self
    }

    pub fn with_swing(mut self, swing_v: f64) -> Self {
        self.swing_v = swing_v;
        self
    }
}

/// Logical-effort NAND of `inputs` inputs, `m` times the unit drive.
#[derive(Debug, Clone, Copy)]
struct Nand {
    inputs: usize,
    m: f64,
}

impl Nand {
    fn effort(&self) -> f64 {
        (self.inputs as f64 + 2.0) / 3.0
    }

    fn c_in(&self, u: &UnitInverter) -> f64 {
        self.m * self.effort() * u.c_in
    }

    fn ppa(&self, u: &UnitInverter, c_out: f64) -> PeripheralPPA {
        let k = self.inputs as f64;
        let c_self = self.m * k * u.c_par;
        PeripheralPPA {
            area_um2: u.footprint(self.m, self.inputs),
            delay_s: stage_delay(u.r / self.m, c_self + c_out, u.slew_s),
            dynamic_energy_j: (self.c_in(u) + c_self) * u.vdd * u.vdd,
            leakage_w: self.m * u.leakage_w * (1.0 + k) / 2.0,
        }
    }
}

fn check(kind: PeripheralKind, p: &PeripheralParams) -> Result<()> {
    if !(p.c_load >= 0.0) || !p.c_load.is_finite() {
        return Err(Error::invalid(format!("{kind:?}: load must be finite and >= 0")));
    }
    if p.active > p.count {
        return Err(Error::invalid(format!("{kind:?}: {} active of {} instances", p.active, p.count)));
    }
    let needs_inputs = matches!(
        kind,
        PeripheralKind::RowDecoder | PeripheralKind::Comparator | PeripheralKind::OnehotEncoder | PeripheralKind::Mux
    );
    if needs_inputs && p.inputs == 0 {
        return Err(Error::invalid(format!("{kind:?} needs at least one input")));
    }
    if kind == PeripheralKind::RowDecoder && p.inputs > 20 {
        return Err(Error::invalid("row decoder limited to 20 address bits"));
    }
    if kind == PeripheralKind::LevelShifter && !(p.swing_v > 0.0) {
        return Err(Error::invalid("level shifter needs a positive output swing"));
    }
    Ok(())
}

/// The tapered output chain a block uses, if any. Row decoders and write
/// drivers end in a fixed-effort stage instead.
pub fn peripheral_chain(kind: PeripheralKind, p: &PeripheralParams, tech: &TechNode) -> Result<Option<BufferChain>> {
    check(kind, p)?;
    let u = UnitInverter::new(tech);
    let chain = match kind {
        PeripheralKind::TristateWlDriver
        | PeripheralKind::Comparator
        | PeripheralKind::OnehotEncoder => Some(drive_chain_styled(&u, p.c_load, None, ChainStyle::PLAIN)?.0),
        PeripheralKind::LevelShifter => {
            let style = ChainStyle { swing_scale: p.swing_v / tech.vdd, ..ChainStyle::PLAIN };
            Some(drive_chain_styled(&u, p.c_load, Some(LEVEL_SHIFTER_MAX_STAGES), style)?.0)
        }
        PeripheralKind::RowDecoder
        | PeripheralKind::PrechargerWriteDriver
        | PeripheralKind::SenseAmpVoltage
        | PeripheralKind::SenseAmpCurrent
        | PeripheralKind::Mux => None,
    };
    Ok(chain)
}

/// PPA of `p.count` instances of a block, `p.active` of which switch per
/// operation.
pub fn peripheral_ppa(kind: PeripheralKind, p: &PeripheralParams, tech: &TechNode) -> Result<PeripheralPPA> {
    check(kind, p)?;
    let u = UnitInverter::new(tech);
    let one = match kind {
        PeripheralKind::RowDecoder => decoder(&u, p.inputs, p.c_load)?,
        PeripheralKind::TristateWlDriver => {
            let style = ChainStyle { last_r_factor: 2.0, last_area_factor: 2.0, ..ChainStyle::PLAIN };
            drive_chain_styled(&u, p.c_load, None, style)?.1
        }
        PeripheralKind::LevelShifter => level_shifter(&u, tech, p)?,
        PeripheralKind::SenseAmpVoltage => sense_amp(&u, tech, p.c_load),
        PeripheralKind::SenseAmpCurrent => {
            let v = sense_amp(&u, tech, p.c_load);
            let f = tech.current_sa_factor;
            PeripheralPPA {
                area_um2: v.area_um2 * f,
                delay_s: v.delay_s,
                dynamic_energy_j: v.dynamic_energy_j * f,
                leakage_w: v.leakage_w * f,
            }
        }
        PeripheralKind::PrechargerWriteDriver => {
            // Enable-gated write driver plus a precharge device half its size.
            let (gate, inv) = row_stages(&u, 2, p.c_load);
            let drv = gate.ppa(&u, inv.c_in(&u)).then(inv.ppa(&u, p.c_load));
            let m = (inv.m / 2.0).max(1.0);
            PeripheralPPA {
                area_um2: drv.area_um2 + u.footprint(m, 1),
                delay_s: drv.delay_s,
                dynamic_energy_j: drv.dynamic_energy_j + m * u.c_in * u.vdd * u.vdd,
                leakage_w: drv.leakage_w + 0.5 * m * u.leakage_w,
            }
        }
        PeripheralKind::Comparator => comparator(&u, p.inputs, p.c_load)?,
        PeripheralKind::OnehotEncoder => {
            let gate = Nand { inputs: 2, m: 1.0 };
            let (chain, drv) = drive_chain_styled(&u, p.c_load, None, ChainStyle::PLAIN)?;
            let first = gate.ppa(&u, chain.c_in);
            first.then(drv).replicated(p.inputs, p.inputs)
        }
        PeripheralKind::Mux => mux(&u, p.inputs, p.c_load),
    };
    Ok(one.replicated(p.count, p.active))
}

/// Predecode in groups of two bits, then per row a NAND and a final
/// inverter sized for a fixed stage effort.
fn decoder(u: &UnitInverter, bits: usize, c_load: f64) -> Result<PeripheralPPA> {
    let groups = if bits == 1 { 1 } else { bits.div_ceil(PREDECODE_BITS) };
    let (gate, inv) = row_stages(u, groups, c_load);
    let row = gate.ppa(u, inv.c_in(u)).then(inv.ppa(u, c_load));
    if bits == 1 {
        // True and complement outputs.
        return Ok(row.replicated(2, 1));
    }
    let rows = 1usize << bits;
    let mut pre = PeripheralPPA::ZERO;
    let mut pre_delay: f64 = 0.0;
    for g in 0..groups {
        let b = PREDECODE_BITS.min(bits - g * PREDECODE_BITS);
        let outs = 1usize << b;
        let c_out = (rows / outs) as f64 * gate.c_in(u);
        let nand = Nand { inputs: b, m: 1.0 };
        let buf = buffer(u, c_out)?;
        let out = nand.ppa(u, u.c_in).then(buf).replicated(outs, 1);
        pre_delay = pre_delay.max(out.delay_s);
        pre = pre.then(out);
    }
    pre.delay_s = pre_delay;
    Ok(pre.then(row.replicated(rows, 1)))
}

/// A tapered chain into a final inverter sized for the fixed stage effort.
fn buffer(u: &UnitInverter, c_load: f64) -> Result<PeripheralPPA> {
    let last = Nand { inputs: 1, m: (c_load / (ROW_STAGE_EFFORT * u.c_in)).max(1.0) };
    let (_, pre) = drive_chain_styled(u, last.c_in(u), None, ChainStyle::PLAIN)?;
    Ok(pre.then(last.ppa(u, c_load)))
}

fn row_stages(u: &UnitInverter, inputs: usize, c_load: f64) -> (Nand, Nand) {
    let inv = Nand { inputs: 1, m: (c_load / (ROW_STAGE_EFFORT * u.c_in)).max(1.0) };
    let mut gate = Nand { inputs, m: 1.0 };
    gate.m = (inv.m / (ROW_STAGE_EFFORT * gate.effort())).max(1.0);
    (gate, inv)
}

/// Cross-coupled pair followed by a capped chain at the output swing.
fn level_shifter(u: &UnitInverter, tech: &TechNode, p: &PeripheralParams) -> Result<PeripheralPPA> {
    let f = tech.level_shifter_width_factor;
    let scale = p.swing_v / tech.vdd;
    let style = ChainStyle { swing_scale: scale, ..ChainStyle::PLAIN };
    let (chain, out) = drive_chain_styled(u, p.c_load, Some(LEVEL_SHIFTER_MAX_STAGES), style)?;
    let c_pair = 4.0 * f * (u.c_in + u.c_par) / 2.0;
    let pair = PeripheralPPA {
        area_um2: 2.0 * u.footprint(f, 2),
        // The pull-down fights the cross-coupled load.
        delay_s: stage_delay(2.0 * u.r / f, f * u.c_par + chain.c_in, u.slew_s),
        dynamic_energy_j: c_pair * p.swing_v * p.swing_v,
        leakage_w: 2.0 * f * u.leakage_w * scale,
    };
    Ok(pair.then(out))
}

fn sense_amp(u: &UnitInverter, tech: &TechNode, c_load: f64) -> PeripheralPPA {
    let devices = SA_DEVICES as f64;
    PeripheralPPA {
        area_um2: u.footprint(2.0, SA_DEVICES / 2),
        delay_s: tech.sa_delay_s,
        dynamic_energy_j: (devices * u.c_in / 2.0 + c_load) * u.vdd * u.vdd,
        leakage_w: devices / 2.0 * u.leakage_w,
    }
}

/// Per-bit XOR, then a NAND/NOR tree of fan-in four.
fn comparator(u: &UnitInverter, bits: usize, c_load: f64) -> Result<PeripheralPPA> {
    let xor = Nand { inputs: 2, m: 1.0 };
    let xor_one = xor.ppa(u, u.c_in).then(xor.ppa(u, u.c_in));
    let bit_stage = PeripheralPPA { delay_s: xor_one.delay_s, ..xor_one.replicated(bits, bits) };
    let mut tree = PeripheralPPA::ZERO;
    let mut width = bits;
    while width > 1 {
        let gates = width.div_ceil(4);
        let g = Nand { inputs: 4.min(width), m: 1.0 };
        let lvl = g.ppa(u, g.c_in(u));
        tree = tree.then(lvl.replicated(gates, gates));
        width = gates;
    }
    let (_, drv) = drive_chain_styled(u, c_load, None, ChainStyle::PLAIN)?;
    Ok(bit_stage.then(tree).then(drv))
}

/// Pass-gate mux; degree one is a plain wire.
fn mux(u: &UnitInverter, degree: usize, c_load: f64) -> PeripheralPPA {
    if degree <= 1 {
        return PeripheralPPA::ZERO;
    }
    let d = degree as f64;
    let c = d * u.c_par + c_load;
    PeripheralPPA {
        area_um2: d * u.footprint(1.0, 2),
        delay_s: stage_delay(u.r, c, u.slew_s),
        dynamic_energy_j: (c + u.c_in) * u.vdd * u.vdd,
        leakage_w: d * u.leakage_w,
    }
}
