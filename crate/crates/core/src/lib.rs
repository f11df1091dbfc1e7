//! Resource estimators and desk-scale emulators for two EUV photolithography
//! quantum algorithms: single-frequency absorption estimation and
//! first-quantized photoemission spectroscopy.
//!
//! Estimators (`absorption`, `fq_cost`) reproduce closed-form gate and qubit
//! counts. Emulators (`spectro`, `photoemission`, `arith`, `cdf`) check the
//! underlying constructions numerically on instances small enough for dense
//! linear algebra or brute force.
//!
//! Internal units are atomic units throughout (Hartree, Bohr, a.u. of time).

pub mod absorption;
pub mod arith;
pub mod cdf;
pub mod error;
pub mod fq_cost;
pub mod linalg;
pub mod photoemission;
pub mod report;
pub mod spectro;
pub mod units;

pub use error::{Error, ErrorKind, Result};
pub use report::{CostReport, GateCount};
