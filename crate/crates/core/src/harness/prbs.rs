//! Maximal-length Fibonacci LFSR sources.

use crate::error::{Error, Result};

/// Supported generator polynomials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrbsOrder {
    /// x^7 + x^6 + 1
    Prbs7,
    /// x^9 + x^5 + 1
    Prbs9,
    /// x^15 + x^14 + 1
    Prbs15,
}

impl PrbsOrder {
    pub fn from_degree(degree: u32) -> Result<Self> {
        match degree {
            7 => Ok(Self::Prbs7),
            9 => Ok(Self::Prbs9),
            15 => Ok(Self::Prbs15),
            d => Err(Error::InvalidConfig(format!(
                "PRBS degree must be 7, 9 or 15, got {d}"
            ))),
        }
    }

    pub fn degree(&self) -> u32 {
        match self {
            Self::Prbs7 => 7,
            Self::Prbs9 => 9,
            Self::Prbs15 => 15,
        }
    }

    /// Exponent of the middle polynomial term.
    fn tap(&self) -> u32 {
        match self {
            Self::Prbs7 => 6,
            Self::Prbs9 => 5,
            Self::Prbs15 => 14,
        }
    }

    pub fn period(&self) -> usize {
        (1usize << self.degree()) - 1
    }
}

/// Infinite PRBS bit stream. Each step feeds back the XOR of the two tapped
/// register stages, shifts it in, and emits it.
#[derive(Debug, Clone)]
pub struct Prbs {
    state: u32,
    mask: u32,
    high: u32,
    tap: u32,
}

impl Prbs {
    pub fn new(order: PrbsOrder, seed: u32) -> Result<Self> {
        let mask = (1u32 << order.degree()) - 1;
        let state = seed & mask;
        if state == 0 {
            return Err(Error::InvalidInput(
                "PRBS seed must be non-zero in the register's low bits".into(),
            ));
        }
        Ok(Self {
            state,
            mask,
            high: order.degree() - 1,
            tap: order.tap() - 1,
        })
    }
}

impl Iterator for Prbs {
    type Item = bool;

    fn next(&mut self) -> Option<bool> {
        let bit = ((self.state >> self.high) ^ (self.state >> self.tap)) & 1;
        self.state = ((self.state << 1) | bit) & self.mask;
        Some(bit == 1)
    }
}

/// `nbits` bits of the PRBS of the given degree starting from `seed`.
pub fn prbs_generate(degree: u32, seed: u32, nbits: usize) -> Result<Vec<bool>> {
    let order = PrbsOrder::from_degree(degree)?;
    Ok(Prbs::new(order, seed)?.take(nbits).collect())
}
