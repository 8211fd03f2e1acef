// SPDX-License-Identifier: Apache-2.0

use serde::Serialize;

use crate::error::{Error, Result};
use crate::num::Scalar;

/// An RC line as a chain of pi-segments behind a driver resistance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RcLadder<T = f64> {
    /// `(r, c)` per segment, from the driver outwards.
    pub segments: Vec<(T, T)>,
    pub driver_r: T,
    pub load_c: T,
}

impl<T: Scalar> RcLadder<T> {
    pub fn new(segments: Vec<(T, T)>, driver_r: T, load_c: T) -> Result<Self> {
        let bad = |x: T| !(x >= T::zero()) || !x.is_finite();
        if bad(driver_r) || bad(load_c) || segments.iter().any(|&(r, c)| bad(r) || bad(c)) {
            return Err(Error::invalid("ladder resistances and capacitances must be finite and >= 0"));
        }
        Ok(Self { segments, driver_r, load_c })
    }

    /// A uniform line of total `r`, `c` cut into `n` segments.
    pub fn uniform(r: T, c: T, n: usize, driver_r: T, load_c: T) -> Result<Self> {
        let n = n.max(1);
        let k = T::lit(n as f64);
        Self::new(vec![(r / k, c / k); n], driver_r, load_c)
    }

    pub fn total_c(&self) -> T {
        self.segments.iter().fold(self.load_c, |acc, &(_, c)| acc + c)
    }

    pub fn total_r(&self) -> T {
        self.segments.iter().fold(self.driver_r, |acc, &(r, _)| acc + r)
    }
}

/// First moment of the far-end step response. Each segment's capacitance is
/// split evenly across its two ends.
pub fn elmore_delay<T: Scalar>(ladder: &RcLadder<T>) -> T {
    let half = T::lit(0.5);
    let mut downstream = ladder.load_c;
    let mut sum = T::zero();
    for &(r, c) in ladder.segments.iter().rev() {
        sum = sum + r * (c * half + downstream);
        downstream = downstream + c;
    }
    sum + ladder.driver_r * downstream
}
