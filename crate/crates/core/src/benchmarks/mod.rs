//! Decoupled comparison policies. SAA itself is the pooled solver at
//! `alpha = 0`; this module adds the KS-robust newsvendor.

mod ks;

pub use ks::{ks_select_rho, ks_solve, ks_worst_case, KsConfig};
