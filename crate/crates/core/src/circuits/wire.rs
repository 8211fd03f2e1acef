// SPDX-License-Identifier: Apache-2.0

use serde::Serialize;

use super::{PeripheralPPA, UnitInverter};
use crate::error::{Error, Result};
use crate::tech::{TechNode, WireLayer};

const LN2: f64 = std::f64::consts::LN_2;
/// Distributed-line coefficient for the 50% point.
const DISTRIBUTED: f64 = 0.38;
const MAX_SEGMENTS: usize = 1 << 16;

/// A wire broken into equal segments, each driven by an inverter of
/// `repeater_size` units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RepeatedWire {
    pub ppa: PeripheralPPA,
    /// Driven segments; the first driver counts as a repeater.
    pub segments: usize,
    pub repeater_size: f64,
}

/// Repeated wire with the segment count chosen for minimum delay.
pub fn repeated_wire(layer: &WireLayer, length_um: f64, tech: &TechNode) -> Result<RepeatedWire> {
    repeated_wire_with(layer, length_um, tech, None)
}

/// Repeated wire with an optional fixed segment count. `Some(1)` or
/// `Some(0)` leaves the line driven from one end only.
pub fn repeated_wire_with(
    layer: &WireLayer,
    length_um: f64,
    tech: &TechNode,
    forced_segments: Option<usize>,
) -> Result<RepeatedWire> {
    if !(length_um >= 0.0) || !length_um.is_finite() {
        return Err(Error::invalid(format!("wire length must be >= 0, got {length_um}")));
    }
    if length_um == 0.0 {
        return Ok(RepeatedWire { ppa: PeripheralPPA::ZERO, segments: 0, repeater_size: 0.0 });
    }
    let u = UnitInverter::new(tech);
    let (r, c) = (layer.r_per_um, layer.c_per_um);
    let k = (u.r * c / (r * u.c_in)).sqrt().max(1.0);
    let delay = |n: usize| {
        let l = length_um / n as f64;
        let seg = LN2 * (u.r / k) * (k * u.c_par + c * l + k * u.c_in) + r * l * (DISTRIBUTED * c * l + LN2 * k * u.c_in);
        seg * n as f64
    };
    let n = match forced_segments {
        Some(n) => n.max(1),
        None => {
            // Delay is convex in n.
            let mut n = 1;
            while n < MAX_SEGMENTS && delay(n + 1) < delay(n) {
                n += 1;
            }
            n
        }
    };
    let nf = n as f64;
    let v = tech.vdd;
    let ppa = PeripheralPPA {
        area_um2: nf * u.footprint(k, 1),
        delay_s: delay(n),
        dynamic_energy_j: (nf * k * (u.c_in + u.c_par) + c * length_um) * v * v,
        leakage_w: nf * k * u.leakage_w,
    };
    Ok(RepeatedWire { ppa, segments: n, repeater_size: k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tech::{load_tech, LayerUse};

    #[test]
    fn zero_length() {
        let t = load_tech("7nm").unwrap();
        let w = repeated_wire(t.layer(LayerUse::Global), 0.0, &t).unwrap();
        assert_eq!(w.ppa, PeripheralPPA::ZERO);
        assert!(repeated_wire(t.layer(LayerUse::Global), -1.0, &t).is_err());
    }

    #[test]
    fn sub_quadratic_growth() {
        let t = load_tech("7nm").unwrap();
        let layer = t.layer(LayerUse::Intermediate);
        let a = repeated_wire(layer, 1000.0, &t).unwrap();
        let b = repeated_wire(layer, 2000.0, &t).unwrap();
        assert!(a.segments >= 2);
        assert!(b.ppa.delay_s < 4.0 * a.ppa.delay_s);
    }

    #[test]
    fn repeaters_help_on_long_global_wire() {
        let t = load_tech("7nm").unwrap();
        let layer = t.layer(LayerUse::Global);
        let rep = repeated_wire(layer, 2000.0, &t).unwrap();
        let bare = repeated_wire_with(layer, 2000.0, &t, Some(0)).unwrap();
        assert!(rep.segments > 1);
        assert!(bare.ppa.delay_s > rep.ppa.delay_s);
    }
}
