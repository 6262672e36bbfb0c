//! Quick invariant checks runnable from a shipped binary.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{propagate, synthesize_waveform, ChannelConfig, TxConfig};
use crate::harness::{run_point, run_sweep, ExperimentConfig};
use crate::ppm::{decode_slots, encode_bits, ModulationScheme};
use crate::receiver::{comparator, measure_window, quantize, slot_decide, AdcConfig};
use crate::threshold::{init_threshold, ThresholdConfig, ThresholdMethod};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
}

const TRIALS: usize = 200;

fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> Vec<bool> {
    (0..n).map(|_| rng.next_u32() & 1 == 1).collect()
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn round_trip(rng: &mut ChaCha8Rng) -> bool {
    (0..TRIALS).all(|_| {
        ModulationScheme::all().into_iter().all(|s| {
            let n = (rng.next_u32() % 64) as usize * s.bits_per_symbol();
            let bits = random_bits(rng, n);
            let Ok(slots) = encode_bits(&bits, s) else {
                return false;
            };
            let (back, a) = decode_slots(&slots);
            back == bits && a.total() == 0
        })
    })
}

fn complement_and_ratio(rng: &mut ChaCha8Rng) -> bool {
    (0..TRIALS).all(|_| {
        let n = 2 * (1 + (rng.next_u32() % 64) as usize);
        let bits = random_bits(rng, n);
        let (Ok(ppm), Ok(ippm)) = (
            encode_bits(&bits, ModulationScheme::PPM4),
            encode_bits(&bits, ModulationScheme::IPPM4),
        ) else {
            return false;
        };
        let dual = ppm.slots().iter().zip(ippm.slots()).all(|(a, b)| a != b);
        let ratio = [&ppm, &ippm].iter().all(|s| {
            let r = s.scheme().expected_high_ratio();
            s.high_count() * r.slots == s.len() * r.high
        });
        dual && ratio
    })
}

fn comparator_affine(rng: &mut ChaCha8Rng) -> bool {
    // Dyadic values keep the affine map exact in floating point.
    let dyadic = |rng: &mut ChaCha8Rng| (rng.next_u32() % 4096) as f64 / 256.0 - 8.0;
    (0..TRIALS).all(|_| {
        let v: Vec<f64> = (0..16).map(|_| dyadic(rng)).collect();
        let theta = dyadic(rng);
        let alpha = f64::powi(2.0, (rng.next_u32() % 8) as i32 - 4);
        let beta = dyadic(rng);
        let moved: Vec<f64> = v.iter().map(|x| alpha * x + beta).collect();
        comparator(&moved, alpha * theta + beta) == comparator(&v, theta)
    })
}

fn noiseless_chain(rng: &mut ChaCha8Rng) -> bool {
    (0..TRIALS / 4).all(|_| {
        let s = ModulationScheme::all()[(rng.next_u32() % 3) as usize];
        let bits = random_bits(rng, 64 * s.bits_per_symbol());
        let tx = TxConfig::default();
        let ch = ChannelConfig {
            distance: 1.0 + 99.0 * unit(rng),
            ambient: unit(rng),
            ..ChannelConfig::default()
        };
        let Ok(slots) = encode_bits(&bits, s) else {
            return false;
        };
        let Ok(w) = synthesize_waveform(&slots, &tx).and_then(|w| propagate(&w, &ch)) else {
            return false;
        };
        let Ok(gain) = ch.gain_at(ch.distance) else {
            return false;
        };
        let theta = ch.ambient + gain * tx.v_high * (0.05 + 0.9 * unit(rng));
        slot_decide(&comparator(&w.samples, theta), tx.samples_per_slot)
            .map(|d| d == slots.slots())
            .unwrap_or(false)
    })
}

fn threshold_bounds(rng: &mut ChaCha8Rng) -> bool {
    (0..TRIALS).all(|_| {
        let s = ModulationScheme::all()[(rng.next_u32() % 3) as usize];
        let cfg = ThresholdConfig::with_bounds(s, unit(rng), 1.0 + 4.0 * unit(rng));
        let (Ok(mut sc), Ok(mut la)) = (
            init_threshold(ThresholdMethod::SlotCount, &cfg),
            init_threshold(ThresholdMethod::LevelAverage, &cfg),
        ) else {
            return false;
        };
        let (lo, hi) = sc.bounds();
        (0..50).all(|_| {
            let w = 1 + (rng.next_u32() % 16) as usize;
            let observed = (rng.next_u32() % (4 * w as u32 + 1)) as usize;
            let avg = 10.0 * unit(rng) - 2.0;
            let low = avg - 3.0 * unit(rng);
            let est = crate::receiver::LevelEstimate {
                v_average: avg,
                v_low_est: low,
                window_samples: 1,
            };
            match (sc.update_slot_count(observed, w), la.update_level(&est)) {
                (Ok(a), Ok(b)) => {
                    sc = a;
                    la = b;
                    [a, b]
                        .iter()
                        .all(|st| (lo..=hi).contains(&st.current_threshold()))
                }
                _ => false,
            }
        })
    })
}

fn window_mean(rng: &mut ChaCha8Rng) -> bool {
    (0..TRIALS).all(|_| {
        let v: Vec<f64> = (0..1 + rng.next_u32() % 500)
            .map(|_| 10.0 * unit(rng) - 5.0)
            .collect();
        let Ok(est) = measure_window(&v) else {
            return false;
        };
        let brute = v.iter().sum::<f64>() / v.len() as f64;
        (est.v_average - brute).abs() <= 1e-12 * brute.abs().max(1.0)
            && est.v_low_est <= est.v_average
    })
}

fn quantize_idempotent(rng: &mut ChaCha8Rng) -> bool {
    (0..TRIALS).all(|_| {
        let Ok(adc) = AdcConfig::new(4 + rng.next_u32() % 13, 0.5 + 5.0 * unit(rng)) else {
            return false;
        };
        let v: Vec<f64> = (0..32).map(|_| 8.0 * unit(rng) - 1.0).collect();
        let once = quantize(&v, Some(&adc));
        quantize(&once, Some(&adc)) == once
    })
}

fn determinism() -> bool {
    let mut cfg = ExperimentConfig {
        bit_count: 2_048,
        distances: vec![10.0, 40.0, 80.0],
        ..ExperimentConfig::default()
    };
    cfg.channel.noise_sigma0 = 0.05;
    cfg.channel.noise_sigma1 = 0.05;
    let a = run_sweep(&cfg);
    let b = run_sweep(&cfg);
    a.is_ok() && a == b
}

fn noiseless_level_average() -> bool {
    let mut cfg = ExperimentConfig {
        bit_count: 4_096,
        ..ExperimentConfig::default()
    };
    cfg.channel.noise_sigma0 = 0.0;
    ModulationScheme::all().into_iter().all(|s| {
        let c = ExperimentConfig {
            scheme: s,
            ..cfg.clone()
        };
        c.distances
            .iter()
            .all(|&d| run_point(&c, d).map(|p| p.ber == 0.0).unwrap_or(false))
    })
}

/// Runs every check with a fixed seed.
pub fn run_all() -> Vec<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut out = Vec::new();
    let mut check = |name, passed| out.push(CheckOutcome { name, passed });
    check("ppm round trip", round_trip(&mut rng));
    check(
        "ippm complement duality and high-slot ratio",
        complement_and_ratio(&mut rng),
    );
    check("comparator affine invariance", comparator_affine(&mut rng));
    check("noiseless chain recovers slots", noiseless_chain(&mut rng));
    check("threshold stays within bounds", threshold_bounds(&mut rng));
    check("window mean exactness", window_mean(&mut rng));
    check("quantizer idempotence", quantize_idempotent(&mut rng));
    check("sweep determinism", determinism());
    check(
        "noiseless level averaging is error free",
        noiseless_level_average(),
    );
    out
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for c in super::run_all() {
            assert!(c.passed, "{} failed", c.name);
        }
    }
}
