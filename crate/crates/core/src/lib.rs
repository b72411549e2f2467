//! Simulation toolkit for coded random access with multi-pilot preambles,
//! massive-MIMO receivers and successive interference cancellation.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: protocol configuration, payloads and the payload-seeded
//!   choice of slots and pilots.
//! * [`codec`]: BCH(511, 421) with CRC-16 and Gray QPSK.
//! * [`phy`]: pilot book, preamble construction, slot synthesis and the
//!   matched-filter / MRC estimators.
//! * [`receiver`]: inner and outer SIC over a frame.
//! * [`oracle`]: the same schedules on an abstract slot/pilot grid.
//! * [`analysis`]: closed-form loss benchmarks.
//! * [`sim`]: Monte Carlo sweeps and CSV output.
//! * [`verify`]: quick self-checks.

pub mod analysis;
pub mod codec;
pub mod error;
pub mod model;
pub mod oracle;
pub mod phy;
pub mod receiver;
pub mod seed;
pub mod sim;
pub mod verify;

pub use error::{ConfigViolation, Error, Result};
pub use model::{derive_choices, DegreeDistribution, Payload, ProtocolConfig, ReceiverMode, UserTransmission};
pub use sim::{run_sweep, run_trial, Engine, PlrEstimate, RunOptions, StopRule, SweepSpec, SweepVariable};
