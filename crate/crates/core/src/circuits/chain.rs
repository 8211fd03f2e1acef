// SPDX-License-Identifier: Apache-2.0

use serde::Serialize;

use super::{stage_delay, PeripheralPPA, UnitInverter};
use crate::error::{Error, Result};
use crate::num::{bisect, Scalar};
use crate::tech::TechNode;

/// A tapered inverter chain. `sizes` are input capacitances in multiples of
/// `c_in`, so `sizes[0]` is always one. The progression runs from the first
/// inverter to the load: every entry but the last is a driving inverter, and
/// the last equals `c_load / c_in`. A single entry is one inverter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BufferChain<T = f64> {
    pub n_stages: usize,
    pub sizes: Vec<T>,
    pub c_in: T,
    pub c_load: T,
    pub gamma: T,
}

impl<T: Scalar> BufferChain<T> {
    pub fn with_gamma(mut self, gamma: T) -> Self {
        self.gamma = gamma;
        self
    }

    /// Number of driving inverters.
    pub fn drivers(&self) -> usize {
        self.sizes.len().saturating_sub(1).max(1)
    }

    /// Product of consecutive stage ratios.
    pub fn ratio_product(&self) -> T {
        self.sizes.windows(2).map(|w| w[1] / w[0]).fold(T::one(), |acc, r| acc * r)
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self { sizes: self.sizes.iter().map(|&s| s * factor).collect(), ..self.clone() }
    }
}

/// Delay of an `n`-stage chain with total effort `f`, in units of the
/// intrinsic stage delay.
pub fn chain_delay_model<T: Scalar>(n: usize, f: T, gamma: T) -> T {
    let n_t = T::lit(n as f64);
    n_t * (gamma + f.powf(T::one() / n_t))
}

/// Stage count minimizing [`chain_delay_model`]. Solves for the stationary
/// point, then keeps whichever neighbouring integer is faster.
pub fn optimal_stage_count<T: Scalar>(f: T, gamma: T) -> Result<usize> {
    if !(f >= T::one()) || !f.is_finite() {
        return Err(Error::invalid(format!("effective fanout must be >= 1, got {f}")));
    }
    if gamma < T::zero() {
        return Err(Error::invalid(format!("gamma must be >= 0, got {gamma}")));
    }
    let ln_f = f.ln();
    if ln_f <= T::zero() {
        return Ok(1);
    }
    let root = if gamma == T::zero() {
        ln_f
    } else {
        // d/dN of N (gamma + f^(1/N)) is gamma + f^(1/N) (1 - ln f / N), negative
        // for small N and tending to gamma > 0.
        let slope = |n: T| gamma + (ln_f / n).exp() * (T::one() - ln_f / n);
        let mut hi = ln_f.max(T::one());
        while slope(hi) < T::zero() {
            hi = hi * T::lit(2.0);
        }
        let lo = ln_f / T::lit(64.0);
        bisect(slope, lo, hi, 200).unwrap_or(ln_f)
    };
    let below = root.floor().to_usize().unwrap_or(1).max(1);
    let above = root.ceil().to_usize().unwrap_or(1).max(1);
    let best = if chain_delay_model(above, f, gamma) < chain_delay_model(below, f, gamma) { above } else { below };
    Ok(best)
}

/// Geometric sizing from `c_in` up to `c_load` over `n` stages. Loads
/// smaller than the input get a single unit stage.
pub fn size_chain<T: Scalar>(c_in: T, c_load: T, n: usize) -> Result<BufferChain<T>> {
    if n == 0 {
        return Err(Error::invalid("a chain needs at least one stage"));
    }
    if !(c_in > T::zero()) {
        return Err(Error::non_positive("chain input capacitance", c_in.as_f64()));
    }
    if c_load < T::zero() {
        return Err(Error::invalid("chain load must be >= 0"));
    }
    if c_load < c_in || n == 1 {
        return Ok(BufferChain { n_stages: 1, sizes: vec![T::one()], c_in, c_load, gamma: T::zero() });
    }
    let f = c_load / c_in;
    let last = T::lit((n - 1) as f64);
    let sizes = (0..n)
        .map(|k| if k + 1 == n { f } else { f.powf(T::lit(k as f64) / last) })
        .collect();
    Ok(BufferChain { n_stages: n, sizes, c_in, c_load, gamma: T::zero() })
}

/// Delay, energy, leakage and area of a sized chain.
pub fn chain_metrics<T: Scalar>(chain: &BufferChain<T>, tech: &TechNode) -> PeripheralPPA {
    chain_metrics_styled(chain, &UnitInverter::new(tech), ChainStyle::PLAIN)
}

/// Variations on a plain inverter chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ChainStyle {
    /// Supply relative to the node Vdd.
    pub swing_scale: f64,
    /// Output resistance multiplier of the final stage (stacked devices).
    pub last_r_factor: f64,
    pub last_area_factor: f64,
}

impl ChainStyle {
    pub const PLAIN: ChainStyle = ChainStyle { swing_scale: 1.0, last_r_factor: 1.0, last_area_factor: 1.0 };
}

pub(crate) fn chain_metrics_styled<T: Scalar>(chain: &BufferChain<T>, unit: &UnitInverter, style: ChainStyle) -> PeripheralPPA {
    let c_in = chain.c_in.as_f64();
    let c_load = chain.c_load.as_f64();
    let v = unit.vdd * style.swing_scale;
    let mut out = PeripheralPPA::ZERO;
    let n = chain.sizes.len();
    for (k, s) in chain.sizes.iter().take(chain.drivers()).enumerate() {
        let last = k + 1 >= n.saturating_sub(1);
        let c_stage = s.as_f64() * c_in;
        let m = c_stage / unit.c_in;
        let c_next = if last { c_load } else { chain.sizes[k + 1].as_f64() * c_in };
        let c_self = m * unit.c_par;
        let r = if last { unit.r / m * style.last_r_factor } else { unit.r / m };
        out.delay_s += stage_delay(r, c_self + c_next, unit.slew_s);
        out.dynamic_energy_j += (c_stage + c_self) * v * v;
        out.leakage_w += m * unit.leakage_w * style.swing_scale;
        let area = unit.footprint(m, 1);
        out.area_um2 += if last { area * style.last_area_factor } else { area };
    }
    out
}

/// Sizes and evaluates a chain from a unit inverter to `c_load`, with an
/// optional stage cap.
pub fn drive_chain(tech: &TechNode, c_load: f64, max_stages: Option<usize>) -> Result<(BufferChain, PeripheralPPA)> {
    let unit = UnitInverter::new(tech);
    drive_chain_styled(&unit, c_load, max_stages, ChainStyle::PLAIN)
}

pub(crate) fn drive_chain_styled(
    unit: &UnitInverter,
    c_load: f64,
    max_stages: Option<usize>,
    style: ChainStyle,
) -> Result<(BufferChain, PeripheralPPA)> {
    let f = (c_load / unit.c_in).max(1.0);
    let mut n = optimal_stage_count(f, unit.gamma())?;
    if let Some(cap) = max_stages {
        n = n.min(cap.max(1));
    }
    // n inverters plus the load entry.
    let chain = size_chain(unit.c_in, c_load.max(0.0), n + 1)?.with_gamma(unit.gamma());
    let ppa = chain_metrics_styled(&chain, unit, style);
    Ok((chain, ppa))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tech::load_tech;

    #[test]
    fn eq4_stage_counts() {
        for k in 1..=4 {
            let f = (k as f64).exp();
            assert_eq!(optimal_stage_count(f, 0.0).unwrap(), k);
        }
        assert_eq!(optimal_stage_count(1.0f64, 0.0).unwrap(), 1);
        assert!(optimal_stage_count(0.5f64, 0.0).is_err());
    }

    #[test]
    fn gamma_root_is_best_neighbour() {
        let n = optimal_stage_count(100.0f64, 1.0).unwrap();
        let best = (1..=12).min_by(|&a, &b| {
            chain_delay_model(a, 100.0f64, 1.0).partial_cmp(&chain_delay_model(b, 100.0, 1.0)).unwrap()
        });
        assert_eq!(Some(n), best);
    }

    #[test]
    fn geometric_sizes() {
        let c = size_chain(1.0f64, 16.0, 5).unwrap();
        for (got, want) in c.sizes.iter().zip([1.0, 2.0, 4.0, 8.0, 16.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        let c = size_chain(1.0f64, 27.0, 4).unwrap();
        for (got, want) in c.sizes.iter().zip([1.0, 3.0, 9.0, 27.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert_eq!(size_chain(1.0f64, 16.0, 1).unwrap().sizes, vec![1.0]);
        assert_eq!(size_chain(2.0f64, 1.0, 4).unwrap().sizes, vec![1.0]);
    }

    #[test]
    fn tapered_beats_single_jump() {
        let tech = load_tech("7nm").unwrap();
        let c0 = UnitInverter::new(&tech).c_in;
        let a = size_chain(c0, 16.0 * c0, 5).unwrap();
        let b = BufferChain { n_stages: 2, sizes: vec![1.0, 16.0], c_in: c0, c_load: 16.0 * c0, gamma: 0.0 };
        assert!(chain_metrics(&a, &tech).delay_s < chain_metrics(&b, &tech).delay_s);
    }

    #[test]
    fn leakage_linear_in_size() {
        let tech = load_tech("7nm").unwrap();
        let c0 = UnitInverter::new(&tech).c_in;
        let a = size_chain(c0, 64.0 * c0, 4).unwrap();
        let l1 = chain_metrics(&a, &tech).leakage_w;
        let l2 = chain_metrics(&a.scaled(2.0), &tech).leakage_w;
        assert!((l2 / l1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unloaded_stage_has_intrinsic_delay() {
        let tech = load_tech("7nm").unwrap();
        let c0 = UnitInverter::new(&tech).c_in;
        let c = size_chain(c0, 0.0, 3).unwrap();
        assert!(chain_metrics(&c, &tech).delay_s > 0.0);
    }
}
