//! Pulse position modulation and its inverted variant.
//!
//! A symbol of `log2(order)` bits selects which of `order` slots carries the
//! pulse. The bit group is read most-significant bit first, so `[1, 0]` in
//! 4-PPM lights slot 2. Inverted PPM emits the slot-wise complement: one dark
//! slot per symbol, `order - 1` lit ones.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Slot count and polarity of a PPM variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModulationScheme {
    order: usize,
    inverted: bool,
}

impl ModulationScheme {
    pub const PPM2: Self = Self {
        order: 2,
        inverted: false,
    };
    pub const PPM4: Self = Self {
        order: 4,
        inverted: false,
    };
    pub const IPPM4: Self = Self {
        order: 4,
        inverted: true,
    };

    /// Builds a scheme, accepting only orders 2 and 4.
    ///
    /// 2-IPPM is the same signal as 2-PPM, so it is normalized to the
    /// non-inverted form.
    pub fn new(order: usize, inverted: bool) -> Result<Self> {
        match order {
            2 => Ok(Self::PPM2),
            4 => Ok(Self { order, inverted }),
            _ => Err(Error::InvalidConfig(format!(
                "PPM order must be 2 or 4, got {order}"
            ))),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn inverted(&self) -> bool {
        self.inverted
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.order.trailing_zeros() as usize
    }

    /// Number of lit slots in every symbol.
    pub fn high_slots_per_symbol(&self) -> usize {
        if self.inverted {
            self.order - 1
        } else {
            1
        }
    }

    /// Fraction of lit slots, exact.
    pub fn expected_high_ratio(&self) -> HighRatio {
        HighRatio {
            high: self.high_slots_per_symbol(),
            slots: self.order,
        }
    }

    pub fn all() -> [Self; 3] {
        [Self::PPM2, Self::PPM4, Self::IPPM4]
    }
}

impl fmt::Display for ModulationScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let suffix = if self.inverted { "ippm" } else { "ppm" };
        write!(f, "{}{}", self.order, suffix)
    }
}

impl FromStr for ModulationScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "2ppm" | "2ippm" => Ok(Self::PPM2),
            "4ppm" => Ok(Self::PPM4),
            "4ippm" => Ok(Self::IPPM4),
            other => Err(Error::InvalidConfig(format!(
                "unknown modulation '{other}' (expected 2ppm, 4ppm or 4ippm)"
            ))),
        }
    }
}

/// Exact high-slot fraction `high / slots` of a scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HighRatio {
    pub high: usize,
    pub slots: usize,
}

impl HighRatio {
    pub fn as_f64(&self) -> f64 {
        self.high as f64 / self.slots as f64
    }
}

/// Slot values (`true` = lit) together with the scheme that produced them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotSequence {
    slots: Vec<bool>,
    scheme: ModulationScheme,
}

impl SlotSequence {
    /// Wraps raw slot decisions. The length must cover whole symbols; the
    /// one-pulse-per-symbol structure is not enforced since received
    /// sequences routinely violate it.
    pub fn new(slots: Vec<bool>, scheme: ModulationScheme) -> Result<Self> {
        if !slots.len().is_multiple_of(scheme.order()) {
            return Err(Error::InvalidInput(format!(
                "{} slots is not a multiple of the symbol length {}",
                slots.len(),
                scheme.order()
            )));
        }
        Ok(Self { slots, scheme })
    }

    pub fn slots(&self) -> &[bool] {
        &self.slots
    }

    pub fn scheme(&self) -> ModulationScheme {
        self.scheme
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn symbol_count(&self) -> usize {
        self.slots.len() / self.scheme.order()
    }

    pub fn high_count(&self) -> usize {
        self.slots.iter().filter(|&&s| s).count()
    }

    /// True when every symbol carries exactly the scheme's pulse pattern.
    pub fn is_well_formed(&self) -> bool {
        let want = self.scheme.high_slots_per_symbol();
        self.slots
            .chunks(self.scheme.order())
            .all(|g| g.iter().filter(|&&s| s).count() == want)
    }

    pub fn into_slots(self) -> Vec<bool> {
        self.slots
    }
}

/// Decode bookkeeping for symbols that did not carry exactly one pulse.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SymbolAnomalies {
    pub zero_high_count: usize,
    pub multi_high_count: usize,
    pub total_symbols: usize,
}

impl SymbolAnomalies {
    pub fn total(&self) -> usize {
        self.zero_high_count + self.multi_high_count
    }

    pub fn merge(&mut self, other: &SymbolAnomalies) {
        self.zero_high_count += other.zero_high_count;
        self.multi_high_count += other.multi_high_count;
        self.total_symbols += other.total_symbols;
    }
}

/// Maps bits onto PPM slots.
pub fn encode_bits(bits: &[bool], scheme: ModulationScheme) -> Result<SlotSequence> {
    let bps = scheme.bits_per_symbol();
    if !bits.len().is_multiple_of(bps) {
        return Err(Error::InvalidInput(format!(
            "{} bits is not a multiple of {bps} bits per symbol",
            bits.len()
        )));
    }
    let order = scheme.order();
    let mut slots = Vec::with_capacity(bits.len() / bps * order);
    for group in bits.chunks(bps) {
        let position = group
            .iter()
            .fold(0usize, |acc, &b| (acc << 1) | usize::from(b));
        slots.extend((0..order).map(|i| (i == position) != scheme.inverted()));
    }
    Ok(SlotSequence { slots, scheme })
}

/// Recovers bits from slots, counting malformed symbols.
///
/// A symbol with no pulse decodes as symbol 0; one with several pulses
/// decodes as the lowest pulsed index.
pub fn decode_slots(seq: &SlotSequence) -> (Vec<bool>, SymbolAnomalies) {
    let scheme = seq.scheme;
    let bps = scheme.bits_per_symbol();
    let mut bits = Vec::with_capacity(seq.symbol_count() * bps);
    let mut anomalies = SymbolAnomalies {
        total_symbols: seq.symbol_count(),
        ..Default::default()
    };
    for group in seq.slots.chunks(scheme.order()) {
        let mut first = None;
        let mut pulses = 0usize;
        for (i, &slot) in group.iter().enumerate() {
            if slot != scheme.inverted() {
                pulses += 1;
                first.get_or_insert(i);
            }
        }
        match pulses {
            0 => anomalies.zero_high_count += 1,
            1 => {}
            _ => anomalies.multi_high_count += 1,
        }
        let symbol = first.unwrap_or(0);
        bits.extend((0..bps).rev().map(|k| (symbol >> k) & 1 == 1));
    }
    (bits, anomalies)
}

#[cfg(test)]
mod tests {
    use super::*;

    const H: bool = true;
    const L: bool = false;

    #[test]
    fn encode_examples() {
        let enc = |bits: &[u8], s| {
            let bits: Vec<bool> = bits.iter().map(|&b| b == 1).collect();
            encode_bits(&bits, s).unwrap().into_slots()
        };
        assert_eq!(enc(&[0], ModulationScheme::PPM2), vec![H, L]);
        assert_eq!(enc(&[1, 0], ModulationScheme::PPM4), vec![L, L, H, L]);
        assert_eq!(enc(&[1, 0], ModulationScheme::IPPM4), vec![H, H, L, H]);
        assert_eq!(
            enc(&[0, 1, 1, 0], ModulationScheme::PPM2),
            vec![H, L, L, H, L, H, H, L]
        );
    }

    #[test]
    fn encode_rejects_partial_symbol() {
        let err = encode_bits(&[true, false, true], ModulationScheme::PPM4).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn decode_examples() {
        let seq = |s: Vec<bool>| SlotSequence::new(s, ModulationScheme::PPM4).unwrap();

        let (bits, a) = decode_slots(&seq(vec![L, L, H, L]));
        assert_eq!(bits, vec![true, false]);
        assert_eq!(a.total(), 0);

        let (bits, a) = decode_slots(&seq(vec![L, L, L, L]));
        assert_eq!(bits, vec![false, false]);
        assert_eq!((a.zero_high_count, a.multi_high_count), (1, 0));

        let (bits, a) = decode_slots(&seq(vec![H, L, H, L]));
        assert_eq!(bits, vec![false, false]);
        assert_eq!((a.zero_high_count, a.multi_high_count), (0, 1));
    }

    #[test]
    fn inverted_decode_complements_first() {
        let s = SlotSequence::new(vec![H, H, L, H], ModulationScheme::IPPM4).unwrap();
        let (bits, a) = decode_slots(&s);
        assert_eq!(bits, vec![true, false]);
        assert_eq!(a.total(), 0);
        // All lit means no dark slot at all.
        let s = SlotSequence::new(vec![H; 4], ModulationScheme::IPPM4).unwrap();
        assert_eq!(decode_slots(&s).1.zero_high_count, 1);
    }

    #[test]
    fn slot_sequence_rejects_partial_symbol() {
        assert!(SlotSequence::new(vec![H, L, L], ModulationScheme::PPM4).is_err());
        assert!(SlotSequence::new(vec![H, L, L], ModulationScheme::PPM2).is_err());
    }

    #[test]
    fn high_ratio_values() {
        assert_eq!(ModulationScheme::PPM2.expected_high_ratio().as_f64(), 0.5);
        assert_eq!(ModulationScheme::PPM4.expected_high_ratio().as_f64(), 0.25);
        assert_eq!(ModulationScheme::IPPM4.expected_high_ratio().as_f64(), 0.75);
    }

    #[test]
    fn scheme_validation_and_normalization() {
        assert_eq!(
            ModulationScheme::new(2, true).unwrap(),
            ModulationScheme::PPM2
        );
        assert!(ModulationScheme::new(8, false).is_err());
        assert!(ModulationScheme::new(3, false).is_err());
        assert!("8ppm".parse::<ModulationScheme>().is_err());
        for s in ModulationScheme::all() {
            assert_eq!(s.to_string().parse::<ModulationScheme>().unwrap(), s);
        }
    }
}
