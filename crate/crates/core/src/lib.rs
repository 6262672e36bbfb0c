//! Software model of a visible-light PPM modem with an adaptive comparator
//! receiver.
//!
//! The signal chain is
//! [`ppm::encode_bits`] → [`channel::synthesize_waveform`] →
//! [`channel::propagate`] → [`receiver::comparator`] →
//! [`receiver::slot_decide`] → [`ppm::decode_slots`], with the comparator
//! threshold driven by one of the controllers in [`threshold`]. The
//! [`harness`] module wires the chain into distance sweeps and transient
//! runs and writes their CSV reports.

pub mod channel;
pub mod error;
pub mod harness;
pub mod ppm;
pub mod receiver;
pub mod selftest;
pub mod threshold;

pub use error::{Error, Result};
