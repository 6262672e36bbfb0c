//! Comparator front end: slicing, per-slot decisions, level measurement and
//! optional ADC quantization.

use crate::error::{Error, Result};

/// Window statistics used by the level-averaging controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelEstimate {
    pub v_average: f64,
    pub v_low_est: f64,
    pub window_samples: usize,
}

/// Converter resolution and full scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdcConfig {
    pub bits: u32,
    pub v_ref: f64,
}

impl AdcConfig {
    /// Accepts the resolutions of practical converter ICs, 4 to 16 bits.
    pub fn new(bits: u32, v_ref: f64) -> Result<Self> {
        if !(4..=16).contains(&bits) {
            return Err(Error::InvalidConfig(format!(
                "ADC resolution must be 4..=16 bits, got {bits}"
            )));
        }
        if !(v_ref > 0.0 && v_ref.is_finite()) {
            return Err(Error::InvalidConfig(
                "ADC reference must be positive".into(),
            ));
        }
        Ok(Self { bits, v_ref })
    }

    fn lsb(&self) -> f64 {
        self.v_ref / ((1u64 << self.bits) - 1) as f64
    }
}

/// `true` where the sample strictly exceeds the threshold.
pub fn comparator(samples: &[f64], threshold: f64) -> Vec<bool> {
    samples.iter().map(|&v| v > threshold).collect()
}

/// Majority vote over each slot's samples; ties go low.
pub fn slot_decide(binary: &[bool], samples_per_slot: usize) -> Result<Vec<bool>> {
    if samples_per_slot == 0 {
        return Err(Error::InvalidInput("samples_per_slot must be >= 1".into()));
    }
    if !binary.len().is_multiple_of(samples_per_slot) {
        return Err(Error::InvalidInput(format!(
            "{} samples is not a multiple of {samples_per_slot} samples per slot",
            binary.len()
        )));
    }
    Ok(binary
        .chunks(samples_per_slot)
        .map(|slot| 2 * slot.iter().filter(|&&b| b).count() > samples_per_slot)
        .collect())
}

/// Mean and low-level estimate of a window.
///
/// The low level is the 10th percentile (nearest rank), capped at the mean.
pub fn measure_window(samples: &[f64]) -> Result<LevelEstimate> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("empty measurement window".into()));
    }
    let n = samples.len();
    let v_average = samples.iter().sum::<f64>() / n as f64;
    let rank = (n as f64 * 0.1).ceil().max(1.0) as usize - 1;
    let mut scratch = samples.to_vec();
    let (_, p10, _) = scratch.select_nth_unstable_by(rank, f64::total_cmp);
    Ok(LevelEstimate {
        v_average,
        v_low_est: p10.min(v_average),
        window_samples: n,
    })
}

/// Clamps to `[0, v_ref]` and rounds half-up to the nearest of `2^bits`
/// levels. `None` passes samples through.
pub fn quantize(samples: &[f64], adc: Option<&AdcConfig>) -> Vec<f64> {
    match adc {
        None => samples.to_vec(),
        Some(adc) => {
            let lsb = adc.lsb();
            samples
                .iter()
                .map(|&v| {
                    let code = (v.clamp(0.0, adc.v_ref) / lsb + 0.5).floor();
                    (code * lsb).min(adc.v_ref)
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparator_examples() {
        assert_eq!(comparator(&[3.0], 2.5), vec![true]);
        assert_eq!(comparator(&[2.5], 2.5), vec![false]);
        assert_eq!(comparator(&[0.0], 0.1), vec![false]);
    }

    #[test]
    fn slot_decide_examples() {
        assert_eq!(slot_decide(&[true, true, false], 3).unwrap(), vec![true]);
        assert_eq!(slot_decide(&[true, false], 2).unwrap(), vec![false]);
        assert_eq!(
            slot_decide(&[false, false, false, true, true, true], 3).unwrap(),
            vec![false, true]
        );
        assert!(slot_decide(&[true, false, true], 2).is_err());
        assert!(slot_decide(&[true], 0).is_err());
    }

    #[test]
    fn measure_window_examples() {
        // Ideal 2-PPM window with V_A = 5, V_B = 0.
        let w: Vec<f64> = (0..40)
            .map(|i| if (i / 5) % 2 == 0 { 5.0 } else { 0.0 })
            .collect();
        let est = measure_window(&w).unwrap();
        assert_eq!(est.v_average, 2.5);
        assert_eq!(est.v_low_est, 0.0);

        // Ideal 4-PPM window with V_A = 4: weighted mean (4*1 + 0*3) / 4.
        let w: Vec<f64> = (0..80)
            .map(|i| if (i / 5) % 4 == 2 { 4.0 } else { 0.0 })
            .collect();
        assert_eq!(measure_window(&w).unwrap().v_average, 1.0);

        let est = measure_window(&[0.7; 13]).unwrap();
        assert!((est.v_average - 0.7).abs() < 1e-15);
        assert!(est.v_low_est <= est.v_average);
        assert!((est.v_low_est - 0.7).abs() < 1e-15);
        assert_eq!(est.window_samples, 13);

        assert!(measure_window(&[]).is_err());
    }

    #[test]
    fn low_estimate_never_exceeds_mean() {
        let mut w = vec![0.0; 95];
        w.extend([-100.0; 5]);
        let est = measure_window(&w).unwrap();
        assert!(est.v_low_est <= est.v_average);
    }

    #[test]
    fn quantize_examples() {
        let one_bit = AdcConfig {
            bits: 1,
            v_ref: 1.0,
        };
        assert_eq!(quantize(&[0.5], Some(&one_bit)), vec![1.0]);
        assert_eq!(quantize(&[0.49], Some(&one_bit)), vec![0.0]);
        let adc = AdcConfig::new(10, 3.3).unwrap();
        assert_eq!(quantize(&[-0.2], Some(&adc)), vec![0.0]);
        assert_eq!(quantize(&[7.0], Some(&adc))[0], 3.3);
        assert_eq!(quantize(&[0.123, -4.0], None), vec![0.123, -4.0]);
    }

    #[test]
    fn adc_config_bounds() {
        assert!(AdcConfig::new(3, 1.0).is_err());
        assert!(AdcConfig::new(17, 1.0).is_err());
        assert!(AdcConfig::new(12, 0.0).is_err());
        assert!(AdcConfig::new(12, 5.0).is_ok());
    }
}
