//! Polar-code decoding workbench.
//!
//! Successive-cancellation (SC) and CRC-aided list (SCL) decoders, bit-flipping
//! list decoding driven either by the DSCF metric or by a learned correlation
//! matrix, a from-scratch trainer for that matrix, and a Monte Carlo FER
//! harness with operation counting.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod code;
pub mod crc;
pub mod error;
pub mod flip;
pub mod harness;
pub mod matrix_file;
pub mod ops;
pub mod sc;
pub mod scl;
pub mod train;

pub use code::PolarCode;
pub use crc::CrcSpec;
pub use error::{Error, Result};
pub use flip::{CorrelationMatrix, FlipMetric, FlipPlan};
pub use sc::{sc_decode, ScDecoder};
pub use scl::{scl_decode, DecodePath, DecodingConstraints, SclDecoder, SclOutput};
