// SPDX-License-Identifier: Apache-2.0

//! Seeded synthetic traces.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::llcsim::{Op, TraceEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    UniformRandom,
    Strided,
    Zipf,
    ReadWriteMix,
}

text_enum!(TraceKind,
    "uniform_random" => TraceKind::UniformRandom,
    "strided" => TraceKind::Strided,
    "zipf" => TraceKind::Zipf,
    "read_write_mix" => TraceKind::ReadWriteMix
);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub events: usize,
    /// Bytes touched; addresses fall in `[base, base + footprint)`.
    pub footprint_bytes: u64,
    pub line_bytes: u64,
    pub stride_bytes: u64,
    pub zipf_exponent: f64,
    /// Fraction of writes. Strided, uniform and zipf traces use it too.
    pub write_fraction: f64,
    pub base: u64,
    /// Ticks between consecutive events.
    pub tick_gap: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            events: 1000,
            footprint_bytes: 1 << 24,
            line_bytes: 64,
            stride_bytes: 64,
            zipf_exponent: 1.0,
            write_fraction: 0.0,
            base: 0,
            tick_gap: 4,
        }
    }
}

impl GenParams {
    fn validate(&self, kind: TraceKind) -> Result<()> {
        if self.line_bytes == 0 || self.footprint_bytes < self.line_bytes {
            return Err(Error::invalid("footprint must hold at least one line"));
        }
        if !(0.0..=1.0).contains(&self.write_fraction) {
            return Err(Error::invalid(format!("write fraction {} is outside [0, 1]", self.write_fraction)));
        }
        if kind == TraceKind::Strided && self.stride_bytes == 0 {
            return Err(Error::invalid("stride must be > 0"));
        }
        if kind == TraceKind::Zipf && !(self.zipf_exponent >= 0.0) {
            return Err(Error::invalid("zipf exponent must be >= 0"));
        }
        Ok(())
    }
}

/// Odd multiplier that scatters zipf ranks across the footprint.
const SCATTER: u64 = 0x9E37_79B9_7F4A_7C15;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn generate(kind: TraceKind, p: &GenParams, seed: u64) -> Result<Vec<TraceEvent>> {
    p.validate(kind)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lines = p.footprint_bytes / p.line_bytes;
    let zipf = match kind {
        TraceKind::Zipf => Some(Zipf::new(lines as f64, p.zipf_exponent).map_err(|e| Error::invalid(format!("zipf: {e}")))?),
        _ => None,
    };
    // A multiplier coprime with the line count keeps the rank map a bijection.
    let mut mult = SCATTER % lines.max(1);
    while lines > 1 && gcd(mult, lines) != 1 {
        mult += 1;
    }
    let mut out = Vec::with_capacity(p.events);
    for i in 0..p.events as u64 {
        let offset = match kind {
            TraceKind::Strided => i.wrapping_mul(p.stride_bytes) % p.footprint_bytes,
            TraceKind::UniformRandom | TraceKind::ReadWriteMix => rng.random_range(0..lines) * p.line_bytes,
            TraceKind::Zipf => {
                let rank = zipf.as_ref().map_or(1.0, |z| z.sample(&mut rng)) as u64 - 1;
                ((rank as u128 * mult as u128) % lines as u128) as u64 * p.line_bytes
            }
        };
        let op = if p.write_fraction > 0.0 && rng.random::<f64>() < p.write_fraction { Op::Write } else { Op::Read };
        out.push(TraceEvent { tick: i * p.tick_gap, op, address: p.base + offset });
    }
    Ok(out)
}
