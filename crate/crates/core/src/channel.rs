//! Transmit waveform synthesis and the optical channel.
//!
//! The received sample for transmitted level `v` is
//! `gain * v + ambient + n`, with `gain = (d_ref / d)^exponent` and `n`
//! zero-mean Gaussian with standard deviation `sigma0 + sigma1 * gain * v`.
//! An optional single-pole low-pass filter acts on the scaled signal before
//! ambient light and noise are added.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::ppm::SlotSequence;

/// Transmitter levels and slot timing, referred to the receiver at the
/// reference distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TxConfig {
    pub v_high: f64,
    pub v_low: f64,
    /// Slots per second.
    pub slot_rate: f64,
    pub samples_per_slot: usize,
}

impl Default for TxConfig {
    fn default() -> Self {
        Self {
            v_high: 5.0,
            v_low: 0.0,
            slot_rate: 8_000.0,
            samples_per_slot: 5,
        }
    }
}

impl TxConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_high.is_finite() && self.v_low.is_finite()) || self.v_high <= self.v_low {
            return Err(Error::InvalidConfig(format!(
                "v_high ({}) must exceed v_low ({})",
                self.v_high, self.v_low
            )));
        }
        if !(self.slot_rate > 0.0 && self.slot_rate.is_finite()) {
            return Err(Error::InvalidConfig("slot_rate must be positive".into()));
        }
        if self.samples_per_slot == 0 {
            return Err(Error::InvalidConfig("samples_per_slot must be >= 1".into()));
        }
        Ok(())
    }

    pub fn sample_rate(&self) -> f64 {
        self.slot_rate * self.samples_per_slot as f64
    }
}

/// Link geometry and impairments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    /// Transmitter-receiver distance in cm.
    pub distance: f64,
    /// Distance in cm at which `TxConfig` levels are received unscaled.
    pub reference_distance: f64,
    pub attenuation_exponent: f64,
    /// Constant background level in volts.
    pub ambient: f64,
    /// Signal-independent noise standard deviation in volts.
    pub noise_sigma0: f64,
    /// Noise standard deviation per volt of received signal.
    pub noise_sigma1: f64,
    /// Low-pass cutoff in Hz, `None` to bypass.
    pub lpf_cutoff: Option<f64>,
    pub rng_seed: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            distance: 10.0,
            reference_distance: 10.0,
            attenuation_exponent: 2.0,
            ambient: 0.0,
            noise_sigma0: 0.0,
            noise_sigma1: 0.0,
            lpf_cutoff: None,
            rng_seed: 1,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        check_distance(self.distance)?;
        check_distance(self.reference_distance)?;
        if !self.attenuation_exponent.is_finite() || self.attenuation_exponent < 0.0 {
            return Err(Error::InvalidConfig(
                "attenuation exponent must be finite and non-negative".into(),
            ));
        }
        if !self.ambient.is_finite() {
            return Err(Error::InvalidConfig("ambient level must be finite".into()));
        }
        if !(self.noise_sigma0 >= 0.0 && self.noise_sigma0.is_finite())
            || !(self.noise_sigma1 >= 0.0 && self.noise_sigma1.is_finite())
        {
            return Err(Error::InvalidConfig(
                "noise standard deviations must be finite and non-negative".into(),
            ));
        }
        if let Some(fc) = self.lpf_cutoff {
            if !(fc > 0.0 && fc.is_finite()) {
                return Err(Error::InvalidConfig(
                    "low-pass cutoff must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    /// Path gain at `distance` under this configuration's law.
    pub fn gain_at(&self, distance: f64) -> Result<f64> {
        check_distance(distance)?;
        check_distance(self.reference_distance)?;
        Ok((self.reference_distance / distance).powf(self.attenuation_exponent))
    }
}

fn check_distance(d: f64) -> Result<()> {
    if d > 0.0 && d.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "distance must be positive, got {d}"
        )))
    }
}

/// Uniformly sampled voltage trace.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogWaveform {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    pub slot_duration: f64,
}

impl AnalogWaveform {
    pub fn samples_per_slot(&self) -> usize {
        (self.sample_rate * self.slot_duration).round() as usize
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }
}

/// Expands each slot into `samples_per_slot` samples at the high or low level.
pub fn synthesize_waveform(slots: &SlotSequence, tx: &TxConfig) -> Result<AnalogWaveform> {
    tx.validate()?;
    Ok(AnalogWaveform {
        samples: synthesize_samples(slots.slots(), tx),
        sample_rate: tx.sample_rate(),
        slot_duration: 1.0 / tx.slot_rate,
    })
}

pub(crate) fn synthesize_samples(slots: &[bool], tx: &TxConfig) -> Vec<f64> {
    let spp = tx.samples_per_slot;
    let mut out = Vec::with_capacity(slots.len() * spp);
    for &s in slots {
        let v = if s { tx.v_high } else { tx.v_low };
        out.extend(std::iter::repeat_n(v, spp));
    }
    out
}

/// `(reference_distance / distance)^exponent`.
pub fn attenuation_gain(cfg: &ChannelConfig) -> Result<f64> {
    cfg.gain_at(cfg.distance)
}

/// Passes a waveform through the channel described by `cfg`.
pub fn propagate(w: &AnalogWaveform, cfg: &ChannelConfig) -> Result<AnalogWaveform> {
    let gain = attenuation_gain(cfg)?;
    let mut channel = OpticalChannel::new(cfg, w.sample_rate)?;
    Ok(AnalogWaveform {
        samples: channel.apply(&w.samples, gain),
        sample_rate: w.sample_rate,
        slot_duration: w.slot_duration,
    })
}

/// Streaming form of [`propagate`]. Filter state and the noise stream carry
/// over between calls, so a long transmission can be pushed through in
/// windows, each with its own gain.
#[derive(Debug, Clone)]
pub struct OpticalChannel {
    ambient: f64,
    sigma0: f64,
    sigma1: f64,
    /// Smoothing coefficient of the one-pole filter, if enabled.
    lpf_alpha: Option<f64>,
    lpf_state: f64,
    rng: ChaCha8Rng,
}

impl OpticalChannel {
    pub fn new(cfg: &ChannelConfig, sample_rate: f64) -> Result<Self> {
        cfg.validate()?;
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::InvalidConfig("sample rate must be positive".into()));
        }
        let lpf_alpha = cfg
            .lpf_cutoff
            .map(|fc| 1.0 - (-2.0 * std::f64::consts::PI * fc / sample_rate).exp());
        Ok(Self {
            ambient: cfg.ambient,
            sigma0: cfg.noise_sigma0,
            sigma1: cfg.noise_sigma1,
            lpf_alpha,
            lpf_state: 0.0,
            rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed),
        })
    }

    pub fn apply(&mut self, input: &[f64], gain: f64) -> Vec<f64> {
        input.iter().map(|&v| self.step(gain * v)).collect()
    }

    fn step(&mut self, scaled: f64) -> f64 {
        let signal = match self.lpf_alpha {
            Some(a) => {
                self.lpf_state += a * (scaled - self.lpf_state);
                self.lpf_state
            }
            None => scaled,
        };
        let sigma = self.sigma0 + self.sigma1 * signal.abs();
        // Always draw so the noise stream is aligned across configurations.
        let z: f64 = StandardNormal.sample(&mut self.rng);
        signal + self.ambient + sigma * z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppm::{encode_bits, ModulationScheme};

    fn wave(samples: Vec<f64>) -> AnalogWaveform {
        AnalogWaveform {
            samples,
            sample_rate: 40_000.0,
            slot_duration: 1.0 / 8_000.0,
        }
    }

    #[test]
    fn synthesize_examples() {
        let tx = |spp, v_high| TxConfig {
            v_high,
            v_low: 0.0,
            slot_rate: 8_000.0,
            samples_per_slot: spp,
        };
        let s = SlotSequence::new(vec![true, false], ModulationScheme::PPM2).unwrap();
        let w = synthesize_waveform(&s, &tx(2, 5.0)).unwrap();
        assert_eq!(w.samples, vec![5.0, 5.0, 0.0, 0.0]);
        assert_eq!(w.sample_rate, 16_000.0);

        assert_eq!(synthesize_samples(&[false], &tx(3, 5.0)), vec![0.0; 3]);

        let s = encode_bits(&[true, false], ModulationScheme::IPPM4).unwrap();
        let w = synthesize_waveform(&s, &tx(1, 1.0)).unwrap();
        assert_eq!(w.samples, vec![1.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn gain_examples() {
        let cfg = |d| ChannelConfig {
            distance: d,
            reference_distance: 10.0,
            ..Default::default()
        };
        assert_eq!(attenuation_gain(&cfg(10.0)).unwrap(), 1.0);
        assert_eq!(attenuation_gain(&cfg(20.0)).unwrap(), 0.25);
        assert!((attenuation_gain(&cfg(100.0)).unwrap() - 0.01).abs() < 1e-15);
        assert!(attenuation_gain(&cfg(0.0)).is_err());
        assert!(attenuation_gain(&cfg(-3.0)).is_err());
    }

    #[test]
    fn gain_strictly_decreasing() {
        let cfg = ChannelConfig::default();
        let mut prev = f64::INFINITY;
        for i in 1..200 {
            let g = cfg.gain_at(i as f64 * 0.5).unwrap();
            assert!(g < prev);
            prev = g;
        }
    }

    #[test]
    fn noiseless_propagation_is_pure_scaling() {
        let cfg = ChannelConfig {
            distance: 20.0,
            ..Default::default()
        };
        let input = wave(vec![5.0, 0.0, 1.25, 3.0]);
        let out = propagate(&input, &cfg).unwrap();
        assert_eq!(out.samples, vec![1.25, 0.0, 0.3125, 0.75]);
        assert_eq!(out.sample_rate, input.sample_rate);
    }

    #[test]
    fn ambient_offsets_dark_input() {
        let cfg = ChannelConfig {
            ambient: 0.3,
            ..Default::default()
        };
        let out = propagate(&wave(vec![0.0; 16]), &cfg).unwrap();
        assert!(out.samples.iter().all(|&v| v == 0.3));
    }

    #[test]
    fn noise_std_matches_sigma0() {
        let cfg = ChannelConfig {
            noise_sigma0: 0.1,
            rng_seed: 7,
            ..Default::default()
        };
        let n = 100_000;
        let out = propagate(&wave(vec![0.0; n]), &cfg).unwrap();
        // Sampling oracle: plain two-pass sample statistics.
        let mean = out.samples.iter().sum::<f64>() / n as f64;
        let var = out.samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let std = var.sqrt();
        assert!((std - 0.1).abs() < 0.005, "std {std}");
        assert!(mean.abs() < 0.002, "mean {mean}");
    }

    #[test]
    fn signal_dependent_noise_scales_with_level() {
        let cfg = ChannelConfig {
            noise_sigma1: 0.1,
            rng_seed: 3,
            ..Default::default()
        };
        let n = 50_000;
        let out = propagate(&wave(vec![2.0; n]), &cfg).unwrap();
        let mean = out.samples.iter().sum::<f64>() / n as f64;
        let std = (out.samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!((std - 0.2).abs() < 0.01, "std {std}");
        // Dark samples carry no sigma1 noise.
        let out = propagate(&wave(vec![0.0; 100]), &cfg).unwrap();
        assert!(out.samples.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn deterministic_for_seed() {
        let cfg = ChannelConfig {
            noise_sigma0: 0.05,
            noise_sigma1: 0.02,
            lpf_cutoff: Some(3_000.0),
            rng_seed: 99,
            ..Default::default()
        };
        let input = wave((0..500).map(|i| (i % 7) as f64).collect());
        let a = propagate(&input, &cfg).unwrap();
        let b = propagate(&input, &cfg).unwrap();
        assert_eq!(a, b);
        let c = propagate(
            &input,
            &ChannelConfig {
                rng_seed: 100,
                ..cfg
            },
        )
        .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn lpf_settles_to_dc_level() {
        let fc = 1_000.0;
        let fs = 40_000.0;
        let cfg = ChannelConfig {
            lpf_cutoff: Some(fc),
            ..Default::default()
        };
        let tau = 1.0 / (2.0 * std::f64::consts::PI * fc);
        let n = (10.0 * tau * fs).ceil() as usize;
        let input = AnalogWaveform {
            samples: vec![3.0; n],
            sample_rate: fs,
            slot_duration: 1.0 / 8_000.0,
        };
        let out = propagate(&input, &cfg).unwrap();
        let last = *out.samples.last().unwrap();
        assert!((last - 3.0).abs() <= 0.03, "settled at {last}");
        // Edges are softened: the first sample is well below the step.
        assert!(out.samples[0] < 1.0);
    }

    #[test]
    fn streaming_matches_one_shot() {
        let cfg = ChannelConfig {
            noise_sigma0: 0.01,
            lpf_cutoff: Some(5_000.0),
            rng_seed: 11,
            ..Default::default()
        };
        let input: Vec<f64> = (0..300)
            .map(|i| if i % 10 < 5 { 1.0 } else { 0.0 })
            .collect();
        let one = propagate(&wave(input.clone()), &cfg).unwrap().samples;
        let mut ch = OpticalChannel::new(&cfg, 40_000.0).unwrap();
        let mut streamed = ch.apply(&input[..120], 1.0);
        streamed.extend(ch.apply(&input[120..], 1.0));
        assert_eq!(one, streamed);
    }

    #[test]
    fn config_validation() {
        assert!(ChannelConfig {
            noise_sigma0: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(ChannelConfig {
            lpf_cutoff: Some(0.0),
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(TxConfig {
            v_high: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(TxConfig {
            samples_per_slot: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
