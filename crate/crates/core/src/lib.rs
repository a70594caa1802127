//! Desk-scale simulator for composable verification of multipartite entangled
//! states.
//!
//! The crate is organised in four layers:
//!
//! * [`qstate`] — dense n-qubit linear algebra: pure states, density
//!   matrices, local gates, computational-basis sampling and trace distance.
//! * [`acframework`] — a deterministic message-passing kernel for
//!   resource/converter/distinguisher experiments, plus a one-time-pad demo
//!   pair that exercises the whole kernel.
//! * [`mevprotocol`] — the machines of the verification protocol itself:
//!   parties, source, oracles, channels, the ideal verified-delivery
//!   resource, filters and simulators, and multi-round wrappers.
//! * [`analysis`] — exact brute-force oracles (rejection probabilities,
//!   round-transcript distributions) and the statistical helpers used to
//!   compare Monte-Carlo runs against them.

pub mod acframework;
pub mod analysis;
pub mod mevprotocol;
pub mod qstate;
