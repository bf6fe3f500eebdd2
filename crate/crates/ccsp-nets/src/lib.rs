//! Petri net semantics for CCSP.

pub mod canon;
pub mod ccsp;
pub mod multiset;
pub mod densem;
pub mod net;
pub mod netfmt;
pub mod opsem;
pub mod process;
pub mod sos;
