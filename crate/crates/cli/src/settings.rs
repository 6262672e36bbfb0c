//! Run settings assembled from defaults, an optional `key=value` file, and
//! command-line flags, in increasing order of precedence.

use std::path::PathBuf;

use vlc_core::channel::{ChannelConfig, TxConfig};
use vlc_core::harness::{DistanceSchedule, ExperimentConfig};
use vlc_core::ppm::ModulationScheme;
use vlc_core::receiver::AdcConfig;
use vlc_core::threshold::{ThresholdConfig, ThresholdMethod};

/// Where the fixed method's threshold comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FixedThreshold {
    /// Midpoint of the received levels at the nearest distance.
    Near,
    /// Midpoint at the farthest distance.
    Far,
    Volts(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub modulation: ModulationScheme,
    pub methods: Vec<ThresholdMethod>,
    pub fixed_threshold: FixedThreshold,
    pub distances: Vec<f64>,
    pub bits: usize,
    pub rate: f64,
    pub spp: usize,
    pub sigma0: f64,
    pub sigma1: f64,
    pub ambient: f64,
    pub tx_amplitude: f64,
    pub tx_low: f64,
    pub ref_dist: f64,
    pub atten_exp: f64,
    pub lpf: Option<f64>,
    pub adc_bits: Option<u32>,
    pub step: Option<f64>,
    pub window: usize,
    pub margin: f64,
    pub seed: u64,
    pub schedule: Vec<(f64, f64)>,
    pub out: Option<PathBuf>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            modulation: ModulationScheme::PPM2,
            methods: vec![ThresholdMethod::LevelAverage],
            fixed_threshold: FixedThreshold::Near,
            distances: (1..=9).map(|i| 10.0 * i as f64).collect(),
            bits: 100_000,
            rate: 4_000.0,
            spp: 5,
            sigma0: 0.005,
            sigma1: 0.0,
            ambient: 0.0,
            tx_amplitude: 20.0,
            tx_low: 0.0,
            ref_dist: 10.0,
            atten_exp: 2.0,
            lpf: None,
            adc_bits: None,
            step: None,
            window: ThresholdConfig::DEFAULT_WINDOW,
            margin: ThresholdConfig::DEFAULT_MARGIN,
            seed: 1,
            schedule: vec![(0.0, 10.0), (1.0, 40.0)],
            out: None,
        }
    }
}

/// Every settable key, in help order. Flag `--<key>` and file line
/// `<key>=<value>` are equivalent.
pub const KEYS: &[&str] = &[
    "modulation",
    "method",
    "fixed-threshold",
    "dist",
    "bits",
    "rate",
    "spp",
    "sigma0",
    "sigma1",
    "ambient",
    "tx-amplitude",
    "tx-low",
    "ref-dist",
    "atten-exp",
    "lpf",
    "adc-bits",
    "step",
    "window",
    "margin",
    "seed",
    "schedule",
    "out",
];

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .trim()
        .parse()
        .map_err(|_| format!("invalid value '{value}' for {key}"))
}

fn non_negative(key: &str, value: &str) -> Result<f64, String> {
    let v: f64 = num(key, value)?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!(
            "{key} must be a non-negative number, got '{value}'"
        ))
    }
}

fn positive(key: &str, value: &str) -> Result<f64, String> {
    let v: f64 = num(key, value)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{key} must be a positive number, got '{value}'"))
    }
}

fn positive_int(key: &str, value: &str) -> Result<usize, String> {
    match num::<usize>(key, value)? {
        0 => Err(format!("{key} must be at least 1")),
        n => Ok(n),
    }
}

/// Parses `start:end:step` (cm), inclusive of `end` up to rounding.
pub fn parse_range(value: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = value.split(':').collect();
    let err = || format!("invalid distance range '{value}', expected start:end:step");
    match parts.as_slice() {
        [single] => Ok(vec![positive("dist", single)?]),
        [a, b, c] => {
            let start = positive("dist", a).map_err(|_| err())?;
            let end = positive("dist", b).map_err(|_| err())?;
            let step = positive("dist", c).map_err(|_| err())?;
            if end < start {
                return Err(err());
            }
            let n = ((end - start) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| start + step * i as f64).collect())
        }
        _ => Err(err()),
    }
}

/// Parses `t0:d0,t1:d1,...` (seconds:cm).
pub fn parse_schedule(value: &str) -> Result<Vec<(f64, f64)>, String> {
    let points = value
        .split(',')
        .map(|pair| {
            let (t, d) = pair.split_once(':').ok_or_else(|| {
                format!("invalid schedule entry '{pair}', expected time:distance")
            })?;
            Ok((non_negative("schedule", t)?, positive("schedule", d)?))
        })
        .collect::<Result<Vec<_>, String>>()?;
    DistanceSchedule::new(points.clone()).map_err(|e| e.to_string())?;
    Ok(points)
}

impl Settings {
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        match key {
            "modulation" => {
                self.modulation = v.parse().map_err(|e: vlc_core::Error| e.to_string())?
            }
            "method" => {
                self.methods = v
                    .split(',')
                    .map(|m| m.parse::<ThresholdMethod>().map_err(|e| e.to_string()))
                    .collect::<Result<_, _>>()?;
            }
            "fixed-threshold" => {
                self.fixed_threshold = match v {
                    "near" => FixedThreshold::Near,
                    "far" => FixedThreshold::Far,
                    _ => FixedThreshold::Volts(num(key, v)?),
                }
            }
            "dist" => self.distances = parse_range(v)?,
            "bits" => self.bits = positive_int(key, v)?,
            "rate" => self.rate = positive(key, v)?,
            "spp" => self.spp = positive_int(key, v)?,
            "sigma0" => self.sigma0 = non_negative(key, v)?,
            "sigma1" => self.sigma1 = non_negative(key, v)?,
            "ambient" => self.ambient = num(key, v)?,
            "tx-amplitude" => self.tx_amplitude = num(key, v)?,
            "tx-low" => self.tx_low = num(key, v)?,
            "ref-dist" => self.ref_dist = positive(key, v)?,
            "atten-exp" => self.atten_exp = non_negative(key, v)?,
            "lpf" => {
                self.lpf = if v == "off" {
                    None
                } else {
                    Some(positive(key, v)?)
                }
            }
            "adc-bits" => {
                self.adc_bits = if v == "off" {
                    None
                } else {
                    let bits: u32 = num(key, v)?;
                    AdcConfig::new(bits, 1.0).map_err(|e| e.to_string())?;
                    Some(bits)
                }
            }
            "step" => self.step = Some(positive(key, v)?),
            "window" => self.window = positive_int(key, v)?,
            "margin" => self.margin = non_negative(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "schedule" => self.schedule = parse_schedule(v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            _ => return Err(format!("unknown setting '{key}'")),
        }
        Ok(())
    }

    /// Applies every `key=value` line of a settings file. Blank lines and
    /// `#` comments are skipped.
    pub fn apply_file(&mut self, text: &str) -> Result<(), String> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value", n + 1))?;
            self.apply(key.trim(), value)
                .map_err(|e| format!("line {}: {e}", n + 1))?;
        }
        Ok(())
    }

    /// Distances the run visits, for calibration and level scaling.
    fn span(&self, transient: bool) -> (f64, f64) {
        let ds: Vec<f64> = if transient {
            self.schedule.iter().map(|&(_, d)| d).collect()
        } else {
            self.distances.clone()
        };
        let lo = ds.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ds.iter().copied().fold(0.0, f64::max);
        (lo, hi)
    }

    /// Builds the harness configuration for one threshold method.
    pub fn experiment(
        &self,
        method: ThresholdMethod,
        transient: bool,
    ) -> Result<ExperimentConfig, String> {
        let channel = ChannelConfig {
            reference_distance: self.ref_dist,
            attenuation_exponent: self.atten_exp,
            ambient: self.ambient,
            noise_sigma0: self.sigma0,
            noise_sigma1: self.sigma1,
            lpf_cutoff: self.lpf,
            ..ChannelConfig::default()
        };
        let tx = TxConfig {
            v_high: self.tx_amplitude,
            v_low: self.tx_low,
            samples_per_slot: self.spp,
            ..TxConfig::default()
        };
        let (nearest, farthest) = self.span(transient);
        let strongest = channel.gain_at(nearest).map_err(|e| e.to_string())? * tx.v_high
            + self.ambient.max(0.0);
        let mut threshold = ThresholdConfig::with_bounds(self.modulation, 0.0, strongest);
        threshold.window_symbols = self.window;
        threshold.margin = self.margin;
        if let Some(step) = self.step {
            threshold.step = step;
        }
        let mut cfg = ExperimentConfig {
            scheme: self.modulation,
            method,
            bit_count: self.bits,
            bit_rate: self.rate,
            distances: self.distances.clone(),
            channel,
            tx,
            threshold,
            adc: None,
            base_seed: self.seed,
            ..ExperimentConfig::default()
        };
        if let Some(bits) = self.adc_bits {
            let adc = AdcConfig::new(bits, 1.25 * strongest).map_err(|e| e.to_string())?;
            cfg.adc = Some(adc);
        }
        cfg.threshold.fixed_theta = match self.fixed_threshold {
            FixedThreshold::Near => cfg.calibrated_threshold(nearest),
            FixedThreshold::Far => cfg.calibrated_threshold(farthest),
            FixedThreshold::Volts(v) => Ok(v),
        }
        .map_err(|e| e.to_string())?;
        if method == ThresholdMethod::Fixed {
            let t = cfg.threshold.fixed_theta;
            cfg.threshold.theta_min = cfg.threshold.theta_min.min(t);
            cfg.threshold.theta_max = cfg.threshold.theta_max.max(t);
        }
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_syntax() {
        assert_eq!(parse_range("10:90:10").unwrap().len(), 9);
        assert_eq!(parse_range("1:2:0.5").unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(parse_range("25").unwrap(), vec![25.0]);
        assert!(parse_range("10:5:1").is_err());
        assert!(parse_range("10:20").is_err());
        assert!(parse_range("0:20:5").is_err());
        assert!(parse_range("a:b:c").is_err());
    }

    #[test]
    fn schedule_syntax() {
        assert_eq!(
            parse_schedule("0:10,1.5:40").unwrap(),
            vec![(0.0, 10.0), (1.5, 40.0)]
        );
        assert!(parse_schedule("1:10").is_err());
        assert!(parse_schedule("0:10,0:20").is_err());
        assert!(parse_schedule("0-10").is_err());
    }

    #[test]
    fn file_then_flags() {
        let mut s = Settings::default();
        s.apply_file("# comment\nbits = 2000\n\nmethod=fixed,slot-count  # trailing\n")
            .unwrap();
        assert_eq!(s.bits, 2000);
        assert_eq!(
            s.methods,
            vec![ThresholdMethod::Fixed, ThresholdMethod::SlotCount]
        );
        s.apply("bits", "4000").unwrap();
        assert_eq!(s.bits, 4000);
        assert!(s.apply_file("nonsense").is_err());
        assert!(s.apply_file("colour=red").is_err());
    }

    #[test]
    fn every_key_is_accepted() {
        let samples = [
            ("modulation", "4ippm"),
            ("method", "level-avg"),
            ("fixed-threshold", "far"),
            ("dist", "5:50:5"),
            ("bits", "100"),
            ("rate", "2000"),
            ("spp", "3"),
            ("sigma0", "0.01"),
            ("sigma1", "0.1"),
            ("ambient", "0.2"),
            ("tx-amplitude", "5"),
            ("tx-low", "0.1"),
            ("ref-dist", "1"),
            ("atten-exp", "2"),
            ("lpf", "off"),
            ("adc-bits", "12"),
            ("step", "0.01"),
            ("window", "32"),
            ("margin", "0.05"),
            ("seed", "7"),
            ("schedule", "0:10,2:30"),
            ("out", "x.csv"),
        ];
        assert_eq!(samples.len(), KEYS.len());
        let mut s = Settings::default();
        for (k, v) in samples {
            assert!(KEYS.contains(&k));
            s.apply(k, v).unwrap();
        }
    }

    #[test]
    fn invalid_values() {
        let mut s = Settings::default();
        assert!(s.apply("modulation", "8ppm").is_err());
        assert!(s.apply("method", "magic").is_err());
        assert!(s.apply("bits", "0").is_err());
        assert!(s.apply("sigma0", "-1").is_err());
        assert!(s.apply("adc-bits", "2").is_err());
        assert!(s.apply("lpf", "0").is_err());
    }

    #[test]
    fn default_experiment_is_valid() {
        let s = Settings::default();
        for m in ThresholdMethod::all() {
            let cfg = s.experiment(m, false).unwrap();
            assert_eq!(cfg.threshold.theta_max, 20.0);
            assert!((cfg.threshold.step - 0.2).abs() < 1e-12);
        }
        let cfg = s.experiment(ThresholdMethod::Fixed, false).unwrap();
        assert_eq!(cfg.threshold.fixed_theta, 10.0);
    }
}
