//! Ramp secure regenerating codes and a secure federated submodel learning
//! protocol built on them, with a deterministic single-process simulator.

pub mod codec;
pub mod field;
pub mod symbol;
pub mod protocol;
pub mod sim;
pub mod golden;
