//! Simulator and analysis library for a BB84-based quantum key growing protocol.
//!
//! The library has four layers:
//!
//! * [`security_math`] — pure closed-form security bounds and budget formulas:
//!   binary Shannon information, collision-probability bounds per reconciliation
//!   scenario, the privacy-amplification fraction `tau1`, Hoeffding confidence
//!   estimates, authentication cost, and the asymptotic gain threshold.
//! * [`attack_model`] — operator-level model of individual eavesdropping
//!   attacks as families of real Kraus vectors, detector POMs (active and
//!   passive), Monte Carlo sampling of single-signal outcomes, the optimal
//!   strategies that saturate the closed-form bounds, and a brute-force
//!   maximizer used as an independent oracle against those bounds.
//! * [`postprocessing`] — the classical side: generalized sifting, interactive
//!   (cascade) and block-code reconciliation with encrypted-parity accounting,
//!   privacy amplification by random-subset parities, and Wegman–Carter
//!   authentication, all paid for from a [`postprocessing::SecretBitLedger`].
//! * [`session`] — the nine-step protocol orchestration over a simulated
//!   quantum channel and a tamperable classical channel, plus Monte Carlo
//!   campaigns and tamper experiments.
//!
//! Keys produced here are simulation artifacts, not production key material.

pub mod attack_model;
pub mod gf2poly;
pub mod postprocessing;
pub mod security_math;
pub mod session;

pub use security_math::{Disturbance, ErrorRate, ReconciliationScenario, SecurityBudget};
