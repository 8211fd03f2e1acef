// SPDX-License-Identifier: Apache-2.0

//! Circuit primitives: buffer chains, RC ladders, repeated wires and the
//! peripheral block catalog.

mod chain;
mod elmore;
mod peripheral;
mod wire;

use serde::Serialize;

use crate::tech::TechNode;

pub use chain::{chain_delay_model, chain_metrics, drive_chain, optimal_stage_count, size_chain, BufferChain};
pub use elmore::{elmore_delay, RcLadder};
pub use peripheral::{peripheral_chain, peripheral_ppa, PeripheralKind, PeripheralParams, LEVEL_SHIFTER_MAX_STAGES};
pub use wire::{repeated_wire, repeated_wire_with, RepeatedWire};

/// Area, delay, energy and leakage of a block.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PeripheralPPA {
    pub area_um2: f64,
    pub delay_s: f64,
    /// Per activation.
    pub dynamic_energy_j: f64,
    pub leakage_w: f64,
}

impl PeripheralPPA {
    pub const ZERO: PeripheralPPA = PeripheralPPA { area_um2: 0.0, delay_s: 0.0, dynamic_energy_j: 0.0, leakage_w: 0.0 };

    /// Two blocks on one path: delays add.
    pub fn then(self, next: PeripheralPPA) -> PeripheralPPA {
        PeripheralPPA {
            area_um2: self.area_um2 + next.area_um2,
            delay_s: self.delay_s + next.delay_s,
            dynamic_energy_j: self.dynamic_energy_j + next.dynamic_energy_j,
            leakage_w: self.leakage_w + next.leakage_w,
        }
    }

    /// `count` instances of which `active` switch per operation.
    pub fn replicated(self, count: usize, active: usize) -> PeripheralPPA {
        PeripheralPPA {
            area_um2: self.area_um2 * count as f64,
            delay_s: self.delay_s,
            dynamic_energy_j: self.dynamic_energy_j * active as f64,
            leakage_w: self.leakage_w * count as f64,
        }
    }

    pub fn is_valid(&self) -> bool {
        [self.area_um2, self.delay_s, self.dynamic_energy_j, self.leakage_w].iter().all(|x| x.is_finite() && *x >= 0.0)
    }
}

/// Minimum-size inverter of a node, the unit all sizes are relative to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitInverter {
    pub r: f64,
    pub c_in: f64,
    pub c_par: f64,
    pub leakage_w: f64,
    pub vdd: f64,
    pub slew_s: f64,
    cell_h_um: f64,
    gate_pitch_um: f64,
    fins_per_finger: f64,
}

impl UnitInverter {
    pub fn new(tech: &TechNode) -> Self {
        let w = tech.min_width_um;
        let n = &tech.logic_n;
        let p = &tech.logic_p;
        let wp = w * tech.pn_ratio;
        let cell_h_um = tech.cell_height_um();
        let fin_um = tech.fin_or_sheet_pitch_nm * 1e-3;
        Self {
            r: n.r_on_per_um / w,
            c_in: n.c_gate_per_um * w + p.c_gate_per_um * wp,
            c_par: (n.c_gs_per_um + n.c_gd_per_um) * w + (p.c_gs_per_um + p.c_gd_per_um) * wp,
            leakage_w: 0.5 * tech.vdd * (n.i_off_per_um * w + p.i_off_per_um * wp),
            vdd: tech.vdd,
            slew_s: tech.input_slew_s,
            cell_h_um,
            gate_pitch_um: tech.gate_pitch_nm * 1e-3,
            fins_per_finger: ((0.5 * cell_h_um / fin_um).floor() - 1.0).max(1.0),
        }
    }

    pub fn gamma(&self) -> f64 {
        self.c_par / self.c_in
    }

    /// Layout footprint of a gate `size` times the unit with `inputs` inputs.
    pub fn footprint(&self, size: f64, inputs: usize) -> f64 {
        let fingers = (size.max(1.0) / self.fins_per_finger).ceil();
        self.cell_h_um * self.gate_pitch_um * (fingers * inputs.max(1) as f64 + 1.0)
    }
}

/// Single-pass step delay of a stage with resistance `r` driving `c`, with the
/// node's fixed input slew.
pub fn stage_delay(r: f64, c: f64, slew_s: f64) -> f64 {
    let tf = r * c;
    if tf <= 0.0 {
        return 0.0;
    }
    let ln2 = std::f64::consts::LN_2;
    tf * (ln2 * ln2 + 0.5 * slew_s / tf).sqrt()
}
