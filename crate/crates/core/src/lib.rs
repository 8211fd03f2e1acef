// SPDX-License-Identifier: Apache-2.0

/// `FromStr` and `Display` for a plain enum from its snake_case names.
macro_rules! text_enum {
    ($t:ident, $($name:literal => $v:path),+) => {
        impl ::std::str::FromStr for $t {
            type Err = $crate::Error;
            fn from_str(s: &str) -> $crate::Result<Self> {
                match s.to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
                    $($name => Ok($v),)+
                    _ => Err($crate::Error::invalid(format!(concat!("unknown ", stringify!($t), " `{}`"), s))),
                }
            }
        }

        impl ::std::fmt::Display for $t {
            fn fmt(&self, f: &mut ::std::fmt::Formatter<'_>) -> ::std::fmt::Result {
                let name = match self { $($v => $name,)+ };
                f.write_str(name)
            }
        }
    };
}

pub mod bank;
pub mod cells;
pub mod circuits;
pub mod config;
pub mod m3d;
pub mod mat;
pub mod error;
pub mod num;
pub mod llcsim;
pub mod optimizer;
pub mod report;
pub mod tech;
pub mod tracegen;

pub use error::{Error, Result};

/// Scalar-specific names for the generic circuit types.
pub type BufferChainF64 = circuits::BufferChain<f64>;
pub type BufferChainF32 = circuits::BufferChain<f32>;
pub type RcLadderF64 = circuits::RcLadder<f64>;
pub type RcLadderF32 = circuits::RcLadder<f32>;
pub type WireLayerF64 = tech::WireLayer<f64>;
pub type WireLayerF32 = tech::WireLayer<f32>;
