//! End-to-end Monte-Carlo runs.
//!
//! Bits from a PRBS source are processed one adaptation window at a time:
//! encode, synthesize, propagate, optionally quantize, slice at the current
//! threshold, decide slots, decode. The slot-count controller updates after
//! each window and the new threshold applies to the next one. The
//! level-averaging controller measures the window while it arrives and slices
//! that same window with the resulting threshold.

mod csv;
mod metrics;
mod prbs;

pub use self::csv::{write_sweep_csv, write_transient_csv, SWEEP_HEADER, TRANSIENT_HEADER};
pub use metrics::{bit_errors, measure_ber, measure_throughput};
pub use prbs::{prbs_generate, Prbs, PrbsOrder};

use crate::channel::{synthesize_samples, ChannelConfig, OpticalChannel, TxConfig};
use crate::error::{Error, Result};
use crate::ppm::{decode_slots, encode_bits, ModulationScheme, SlotSequence, SymbolAnomalies};
use crate::receiver::{comparator, measure_window, quantize, slot_decide, AdcConfig};
use crate::threshold::{init_threshold, ThresholdConfig, ThresholdMethod};

/// Everything that determines an experiment's output.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scheme: ModulationScheme,
    pub method: ThresholdMethod,
    /// Bits sent per point.
    pub bit_count: usize,
    /// Information rate in bits per second. Overrides `tx.slot_rate`.
    pub bit_rate: f64,
    /// Sweep grid in cm.
    pub distances: Vec<f64>,
    /// Channel template; `distance` and `rng_seed` are set per point.
    pub channel: ChannelConfig,
    pub tx: TxConfig,
    /// Controller parameters; `scheme` is taken from this config.
    pub threshold: ThresholdConfig,
    pub adc: Option<AdcConfig>,
    pub prbs_order: PrbsOrder,
    pub prbs_seed: u32,
    pub base_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let scheme = ModulationScheme::PPM2;
        let tx = TxConfig {
            v_high: 20.0,
            ..TxConfig::default()
        };
        Self {
            scheme,
            method: ThresholdMethod::LevelAverage,
            bit_count: 100_000,
            bit_rate: 4_000.0,
            distances: (1..=9).map(|i| 10.0 * i as f64).collect(),
            channel: ChannelConfig {
                noise_sigma0: 0.005,
                ..ChannelConfig::default()
            },
            threshold: ThresholdConfig::with_bounds(scheme, 0.0, tx.v_high),
            tx,
            adc: None,
            prbs_order: PrbsOrder::Prbs9,
            prbs_seed: 0x1ff,
            base_seed: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bps = self.scheme.bits_per_symbol();
        if self.bit_count == 0 || !self.bit_count.is_multiple_of(bps) {
            return Err(Error::InvalidConfig(format!(
                "bit count {} must be a positive multiple of {bps}",
                self.bit_count
            )));
        }
        if !(self.bit_rate > 0.0 && self.bit_rate.is_finite()) {
            return Err(Error::InvalidConfig("bit rate must be positive".into()));
        }
        if self.distances.is_empty() {
            return Err(Error::InvalidConfig("distance grid is empty".into()));
        }
        if let Some(d) = self
            .distances
            .iter()
            .find(|d| !(**d > 0.0 && d.is_finite()))
        {
            return Err(Error::InvalidConfig(format!(
                "distance {d} is not positive"
            )));
        }
        self.tx_for_run().validate()?;
        self.channel.validate()?;
        self.threshold_config().validate(self.method)?;
        Prbs::new(self.prbs_order, self.prbs_seed)?;
        Ok(())
    }

    /// Transmitter with slot rate derived from the bit rate.
    pub fn tx_for_run(&self) -> TxConfig {
        let symbols_per_second = self.bit_rate / self.scheme.bits_per_symbol() as f64;
        TxConfig {
            slot_rate: symbols_per_second * self.scheme.order() as f64,
            ..self.tx
        }
    }

    pub fn threshold_config(&self) -> ThresholdConfig {
        ThresholdConfig {
            scheme: self.scheme,
            ..self.threshold
        }
    }

    /// Simulated air time of one point.
    pub fn air_time(&self) -> f64 {
        self.bit_count as f64 / self.bit_rate
    }

    /// Noise-free midpoint between received high and low levels at
    /// `distance`, i.e. a threshold hand-tuned at that distance.
    pub fn calibrated_threshold(&self, distance: f64) -> Result<f64> {
        let gain = self.channel.gain_at(distance)?;
        Ok(gain * 0.5 * (self.tx.v_high + self.tx.v_low) + self.channel.ambient)
    }
}

/// Outcome of one distance.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub distance: f64,
    pub method: ThresholdMethod,
    pub scheme: ModulationScheme,
    pub ber: f64,
    pub throughput: f64,
    pub zero_high: usize,
    pub multi_high: usize,
    pub bit_errors: usize,
    pub bit_count: usize,
    /// Threshold in force during each window.
    pub theta_trace: Vec<f64>,
    /// Threshold after the last update.
    pub theta_final: f64,
}

/// Piecewise-constant distance over time.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSchedule {
    breakpoints: Vec<(f64, f64)>,
}

impl DistanceSchedule {
    /// `(time_s, distance_cm)` pairs; times strictly increasing from 0.
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        match breakpoints.first() {
            None => return Err(Error::InvalidInput("schedule has no breakpoints".into())),
            Some(&(t, _)) if t != 0.0 => {
                return Err(Error::InvalidInput("schedule must start at time 0".into()))
            }
            _ => {}
        }
        if breakpoints
            .windows(2)
            .any(|w| w[1].0.is_nan() || w[1].0 <= w[0].0)
        {
            return Err(Error::InvalidInput(
                "schedule times must be strictly increasing".into(),
            ));
        }
        if let Some(&(_, d)) = breakpoints
            .iter()
            .find(|(t, d)| !(*d > 0.0 && d.is_finite() && t.is_finite()))
        {
            return Err(Error::InvalidInput(format!("distance {d} is not positive")));
        }
        Ok(Self { breakpoints })
    }

    pub fn constant(distance: f64) -> Result<Self> {
        Self::new(vec![(0.0, distance)])
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    pub fn distance_at(&self, time: f64) -> f64 {
        let idx = self.breakpoints.partition_point(|&(t, _)| t <= time);
        self.breakpoints[idx.saturating_sub(1)].1
    }
}

/// Per-window view of a transient run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransientRow {
    /// Window start.
    pub time_s: f64,
    /// Distance at window start.
    pub distance_cm: f64,
    pub window_ber: f64,
    /// Threshold in force during the window.
    pub theta_v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransientResult {
    pub rows: Vec<TransientRow>,
    pub correct_bits: usize,
    pub total_bits: usize,
    pub elapsed: f64,
}

impl TransientResult {
    pub fn throughput(&self) -> f64 {
        self.correct_bits as f64 / self.elapsed
    }
}

#[derive(Debug, Clone, Copy)]
struct WindowRecord {
    start_time: f64,
    distance: f64,
    bits: usize,
    errors: usize,
    anomalies: SymbolAnomalies,
    theta: f64,
}

struct Run {
    windows: Vec<WindowRecord>,
    theta_final: f64,
}

fn simulate(cfg: &ExperimentConfig, schedule: &DistanceSchedule, seed: u64) -> Result<Run> {
    cfg.validate()?;
    let scheme = cfg.scheme;
    let bps = scheme.bits_per_symbol();
    let tx = cfg.tx_for_run();
    let fs = tx.sample_rate();
    let spp = tx.samples_per_slot;
    let thr_cfg = cfg.threshold_config();

    let channel_cfg = ChannelConfig {
        distance: schedule.distance_at(0.0),
        rng_seed: seed,
        ..cfg.channel
    };
    let mut channel = OpticalChannel::new(&channel_cfg, fs)?;
    let mut source = Prbs::new(cfg.prbs_order, cfg.prbs_seed)?;
    let mut state = init_threshold(cfg.method, &thr_cfg)?;

    let window_bits = thr_cfg.window_symbols * bps;
    let mut windows = Vec::with_capacity(cfg.bit_count.div_ceil(window_bits));
    let mut sample_index = 0usize;
    let mut remaining = cfg.bit_count;

    while remaining > 0 {
        let nbits = window_bits.min(remaining);
        let bits: Vec<bool> = source.by_ref().take(nbits).collect();
        let slots = encode_bits(&bits, scheme)?;
        let tx_samples = synthesize_samples(slots.slots(), &tx);
        let start_time = sample_index as f64 / fs;

        let mut rx = Vec::with_capacity(tx_samples.len());
        for (range, distance) in segments(schedule, sample_index, tx_samples.len(), fs) {
            let gain = channel_cfg.gain_at(distance)?;
            rx.extend(channel.apply(&tx_samples[range], gain));
        }
        let rx = quantize(&rx, cfg.adc.as_ref());

        if state.method() == ThresholdMethod::LevelAverage {
            state = state.update_level(&measure_window(&rx)?)?;
        }
        let theta = state.current_threshold();
        let decided = slot_decide(&comparator(&rx, theta), spp)?;
        let observed_high = decided.iter().filter(|&&s| s).count();
        let (rx_bits, anomalies) = decode_slots(&SlotSequence::new(decided, scheme)?);
        let errors = bit_errors(&bits, &rx_bits)?;
        if state.method() == ThresholdMethod::SlotCount {
            state = state.update_slot_count(observed_high, nbits / bps)?;
        }

        windows.push(WindowRecord {
            start_time,
            distance: schedule.distance_at(start_time),
            bits: nbits,
            errors,
            anomalies,
            theta,
        });
        sample_index += tx_samples.len();
        remaining -= nbits;
    }

    Ok(Run {
        windows,
        theta_final: state.current_threshold(),
    })
}

/// Splits `len` samples starting at absolute index `start` wherever the
/// schedule changes distance.
fn segments(
    schedule: &DistanceSchedule,
    start: usize,
    len: usize,
    fs: f64,
) -> Vec<(std::ops::Range<usize>, f64)> {
    let end = start + len;
    let mut cuts: Vec<usize> = schedule
        .breakpoints()
        .iter()
        .map(|&(t, _)| (t * fs).ceil() as usize)
        .filter(|&i| i > start && i < end)
        .collect();
    cuts.dedup();
    let mut out = Vec::with_capacity(cuts.len() + 1);
    let mut lo = start;
    for hi in cuts.into_iter().chain(std::iter::once(end)) {
        out.push((lo - start..hi - start, schedule.distance_at(lo as f64 / fs)));
        lo = hi;
    }
    out
}

/// Runs one distance using `cfg.base_seed` for the channel noise.
pub fn run_point(cfg: &ExperimentConfig, distance: f64) -> Result<PointResult> {
    run_point_seeded(cfg, distance, cfg.base_seed)
}

fn run_point_seeded(cfg: &ExperimentConfig, distance: f64, seed: u64) -> Result<PointResult> {
    let schedule = DistanceSchedule::constant(distance)?;
    let run = simulate(cfg, &schedule, seed)?;
    let mut anomalies = SymbolAnomalies::default();
    let mut errors = 0;
    for w in &run.windows {
        anomalies.merge(&w.anomalies);
        errors += w.errors;
    }
    let bits = cfg.bit_count;
    Ok(PointResult {
        distance,
        method: cfg.method,
        scheme: cfg.scheme,
        ber: errors as f64 / bits as f64,
        throughput: measure_throughput(bits - errors, cfg.air_time())?,
        zero_high: anomalies.zero_high_count,
        multi_high: anomalies.multi_high_count,
        bit_errors: errors,
        bit_count: bits,
        theta_trace: run.windows.iter().map(|w| w.theta).collect(),
        theta_final: run.theta_final,
    })
}

/// Runs every grid distance. Point `i` draws noise from seed
/// `base_seed + i`, independent of the threshold method, so methods compared
/// on the same grid see the same noise.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<PointResult>> {
    cfg.validate()?;
    let point =
        |(i, &d): (usize, &f64)| run_point_seeded(cfg, d, cfg.base_seed.wrapping_add(i as u64));
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        cfg.distances.par_iter().enumerate().map(point).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        cfg.distances.iter().enumerate().map(point).collect()
    }
}

/// Runs `cfg.bit_count` bits while the distance follows `schedule`.
pub fn run_transient(
    cfg: &ExperimentConfig,
    schedule: &DistanceSchedule,
) -> Result<TransientResult> {
    let run = simulate(cfg, schedule, cfg.base_seed)?;
    let errors: usize = run.windows.iter().map(|w| w.errors).sum();
    let rows = run
        .windows
        .iter()
        .map(|w| TransientRow {
            time_s: w.start_time,
            distance_cm: w.distance,
            window_ber: w.errors as f64 / w.bits as f64,
            theta_v: w.theta,
        })
        .collect();
    Ok(TransientResult {
        rows,
        correct_bits: cfg.bit_count - errors,
        total_bits: cfg.bit_count,
        elapsed: cfg.air_time(),
    })
}
