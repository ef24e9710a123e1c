//! XOR-only erasure codes with easy and parallel repair.
//!
//! The crate builds binary simplex codes, the weight-two LDGM code `[I | G~]`,
//! the `(2k+1, k)` chain code, unit-memory simplex convolutional codes and
//! the block codes derived from them, then repairs erased nodes with
//! replication or two-node XORs wherever the pattern is correctable.

pub mod codes;
pub mod error;
pub mod gf2;
pub mod metrics;
pub mod repair;
pub mod storage;

pub use codes::{CodeId, ConvCode, Family, LinearCode};
pub use error::{Error, Result};
pub use gf2::{BitMatrix, BitVector};
pub use repair::{ErasurePattern, RepairEngine, RepairGroup, RepairPlan, RepairStep};
