use crate::error::{Error, Result};

/// Number of positions where the two streams differ.
pub fn bit_errors(tx_bits: &[bool], rx_bits: &[bool]) -> Result<usize> {
    if tx_bits.len() != rx_bits.len() {
        return Err(Error::InvalidInput(format!(
            "bit streams differ in length: {} vs {}",
            tx_bits.len(),
            rx_bits.len()
        )));
    }
    Ok(tx_bits.iter().zip(rx_bits).filter(|(a, b)| a != b).count())
}

/// Hamming distance over length.
pub fn measure_ber(tx_bits: &[bool], rx_bits: &[bool]) -> Result<f64> {
    if tx_bits.is_empty() {
        return Err(Error::InvalidInput(
            "cannot measure BER of an empty stream".into(),
        ));
    }
    Ok(bit_errors(tx_bits, rx_bits)? as f64 / tx_bits.len() as f64)
}

/// Correctly received bits per second of receive time.
pub fn measure_throughput(correct_bits: usize, elapsed: f64) -> Result<f64> {
    if elapsed.is_nan() || elapsed <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "elapsed time must be positive, got {elapsed}"
        )));
    }
    Ok(correct_bits as f64 / elapsed)
}
