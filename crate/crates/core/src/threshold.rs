//! Comparator threshold controllers.
//!
//! * `Fixed` holds a calibrated value.
//! * `SlotCount` compares the number of lit slots decided in a window with
//!   the count the modulation guarantees, and nudges the threshold one step
//!   up when too many slots were lit, one step down when too few.
//! * `LevelAverage` inverts the known lit-slot ratio `r` to recover the high
//!   level from the window mean, `V_A = (mean - (1 - r) V_B) / r`, and sets
//!   the threshold halfway between `V_A` and `V_B`. For a 1:1 ratio this is
//!   the window mean itself.
//!
//! Both adaptive policies keep the threshold within `[theta_min, theta_max]`.
//! Level averaging additionally keeps it at least `margin` above the
//! estimated low level so it cannot collapse onto the noise floor.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ppm::ModulationScheme;
use crate::receiver::LevelEstimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThresholdMethod {
    Fixed,
    SlotCount,
    LevelAverage,
}

impl ThresholdMethod {
    pub fn all() -> [Self; 3] {
        [Self::Fixed, Self::SlotCount, Self::LevelAverage]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Fixed => "fixed",
            Self::SlotCount => "slot-count",
            Self::LevelAverage => "level-avg",
        }
    }
}

impl fmt::Display for ThresholdMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ThresholdMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fixed" => Ok(Self::Fixed),
            "slot-count" => Ok(Self::SlotCount),
            "level-avg" => Ok(Self::LevelAverage),
            other => Err(Error::InvalidConfig(format!(
                "unknown threshold method '{other}' (expected fixed, slot-count or level-avg)"
            ))),
        }
    }
}

/// Controller parameters shared by all methods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdConfig {
    pub scheme: ModulationScheme,
    /// Threshold used by the fixed method.
    pub fixed_theta: f64,
    /// Slot-count increment.
    pub step: f64,
    /// Symbols per adaptation window.
    pub window_symbols: usize,
    pub theta_min: f64,
    pub theta_max: f64,
    pub margin: f64,
}

impl ThresholdConfig {
    pub const DEFAULT_WINDOW: usize = 64;
    pub const DEFAULT_MARGIN: f64 = 0.1;

    /// Defaults for the given bounds: step is 1% of the range, fixed
    /// threshold at the midpoint.
    pub fn with_bounds(scheme: ModulationScheme, theta_min: f64, theta_max: f64) -> Self {
        Self {
            scheme,
            fixed_theta: 0.5 * (theta_min + theta_max),
            step: 0.01 * (theta_max - theta_min),
            window_symbols: Self::DEFAULT_WINDOW,
            theta_min,
            theta_max,
            margin: Self::DEFAULT_MARGIN,
        }
    }

    pub fn validate(&self, method: ThresholdMethod) -> Result<()> {
        let finite = [self.theta_min, self.theta_max, self.step, self.margin]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.theta_min > self.theta_max {
            return Err(Error::InvalidConfig(format!(
                "threshold bounds [{}, {}] are inconsistent",
                self.theta_min, self.theta_max
            )));
        }
        if self.window_symbols == 0 {
            return Err(Error::InvalidConfig(
                "adaptation window must be >= 1 symbol".into(),
            ));
        }
        if self.margin < 0.0 {
            return Err(Error::InvalidConfig("margin must be non-negative".into()));
        }
        match method {
            ThresholdMethod::SlotCount if self.step <= 0.0 => Err(Error::InvalidConfig(
                "slot-count step must be positive".into(),
            )),
            ThresholdMethod::Fixed
                if !(self.theta_min..=self.theta_max).contains(&self.fixed_theta) =>
            {
                Err(Error::InvalidConfig(format!(
                    "fixed threshold {} outside bounds [{}, {}]",
                    self.fixed_theta, self.theta_min, self.theta_max
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Current threshold plus the parameters of the policy that moves it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdState {
    method: ThresholdMethod,
    theta: f64,
    step: f64,
    window_symbols: usize,
    theta_min: f64,
    theta_max: f64,
    margin: f64,
    scheme: ModulationScheme,
}

/// Starts a controller. Adaptive methods begin at the middle of the bounds.
pub fn init_threshold(method: ThresholdMethod, cfg: &ThresholdConfig) -> Result<ThresholdState> {
    cfg.validate(method)?;
    let theta = match method {
        ThresholdMethod::Fixed => cfg.fixed_theta,
        _ => 0.5 * (cfg.theta_min + cfg.theta_max),
    };
    Ok(ThresholdState {
        method,
        theta,
        step: cfg.step,
        window_symbols: cfg.window_symbols,
        theta_min: cfg.theta_min,
        theta_max: cfg.theta_max,
        margin: cfg.margin,
        scheme: cfg.scheme,
    })
}

impl ThresholdState {
    pub fn method(&self) -> ThresholdMethod {
        self.method
    }

    pub fn current_threshold(&self) -> f64 {
        self.theta
    }

    pub fn window_symbols(&self) -> usize {
        self.window_symbols
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.theta_min, self.theta_max)
    }

    pub fn scheme(&self) -> ModulationScheme {
        self.scheme
    }

    fn expect(&self, method: ThresholdMethod) -> Result<()> {
        if self.method == method {
            Ok(())
        } else {
            Err(Error::StateMisuse(format!(
                "{method} update applied to a {} controller",
                self.method
            )))
        }
    }

    /// Slot-count feedback after a window of `window_symbols` symbols in which
    /// `observed_high_slots` slots were decided lit.
    pub fn update_slot_count(
        &self,
        observed_high_slots: usize,
        window_symbols: usize,
    ) -> Result<Self> {
        self.expect(ThresholdMethod::SlotCount)?;
        if window_symbols == 0 {
            return Err(Error::InvalidInput(
                "window must hold at least one symbol".into(),
            ));
        }
        let expected = window_symbols * self.scheme.high_slots_per_symbol();
        let theta = match observed_high_slots.cmp(&expected) {
            std::cmp::Ordering::Greater => (self.theta + self.step).min(self.theta_max),
            std::cmp::Ordering::Less => (self.theta - self.step).max(self.theta_min),
            std::cmp::Ordering::Equal => self.theta,
        };
        Ok(Self { theta, ..*self })
    }

    /// Level-averaging update from one window's statistics.
    pub fn update_level(&self, est: &LevelEstimate) -> Result<Self> {
        self.expect(ThresholdMethod::LevelAverage)?;
        let r = self.scheme.expected_high_ratio().as_f64();
        let v_low = est.v_low_est;
        let v_high = (est.v_average - (1.0 - r) * v_low) / r;
        let target = 0.5 * (v_high + v_low);
        let floor = self.theta_min.max(v_low + self.margin);
        // Bounds take precedence when the margin floor lies above the ceiling.
        let theta = if floor >= self.theta_max {
            self.theta_max
        } else {
            target.clamp(floor, self.theta_max)
        };
        Ok(Self { theta, ..*self })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(scheme: ModulationScheme) -> ThresholdConfig {
        ThresholdConfig::with_bounds(scheme, 0.0, 5.0)
    }

    fn est(v_average: f64, v_low_est: f64) -> LevelEstimate {
        LevelEstimate {
            v_average,
            v_low_est,
            window_samples: 320,
        }
    }

    #[test]
    fn init_examples() {
        let mut c = cfg(ModulationScheme::PPM2);
        c.fixed_theta = 2.5;
        let s = init_threshold(ThresholdMethod::Fixed, &c).unwrap();
        assert_eq!(s.current_threshold(), 2.5);
        let s = init_threshold(ThresholdMethod::SlotCount, &c).unwrap();
        assert_eq!(s.current_threshold(), 2.5);
        let s = init_threshold(ThresholdMethod::LevelAverage, &c).unwrap();
        assert_eq!(s.current_threshold(), 2.5);
    }

    #[test]
    fn init_rejects_bad_config() {
        let mut c = cfg(ModulationScheme::PPM2);
        c.theta_min = 6.0;
        assert!(init_threshold(ThresholdMethod::LevelAverage, &c).is_err());
        let mut c = cfg(ModulationScheme::PPM2);
        c.step = 0.0;
        assert!(init_threshold(ThresholdMethod::SlotCount, &c).is_err());
        assert!(init_threshold(ThresholdMethod::LevelAverage, &c).is_ok());
        let mut c = cfg(ModulationScheme::PPM2);
        c.window_symbols = 0;
        assert!(init_threshold(ThresholdMethod::Fixed, &c).is_err());
        let mut c = cfg(ModulationScheme::PPM2);
        c.fixed_theta = 7.0;
        assert!(init_threshold(ThresholdMethod::Fixed, &c).is_err());
    }

    #[test]
    fn slot_count_examples() {
        let mut c = cfg(ModulationScheme::PPM2);
        c.step = 0.05;
        let s = init_threshold(ThresholdMethod::SlotCount, &c).unwrap();
        assert_eq!(s.update_slot_count(8, 8).unwrap().current_threshold(), 2.5);
        assert!((s.update_slot_count(12, 8).unwrap().current_threshold() - 2.55).abs() < 1e-12);
        assert!((s.update_slot_count(0, 8).unwrap().current_threshold() - 2.45).abs() < 1e-12);
    }

    #[test]
    fn slot_count_uses_scheme_ratio() {
        // 4-IPPM lights three of four slots.
        let s = init_threshold(ThresholdMethod::SlotCount, &cfg(ModulationScheme::IPPM4)).unwrap();
        assert_eq!(s.update_slot_count(24, 8).unwrap().current_threshold(), 2.5);
        assert!(s.update_slot_count(20, 8).unwrap().current_threshold() < 2.5);
        let s = init_threshold(ThresholdMethod::SlotCount, &cfg(ModulationScheme::PPM4)).unwrap();
        assert_eq!(s.update_slot_count(8, 8).unwrap().current_threshold(), 2.5);
    }

    #[test]
    fn slot_count_clamps() {
        let mut c = cfg(ModulationScheme::PPM2);
        c.step = 1.0;
        let mut s = init_threshold(ThresholdMethod::SlotCount, &c).unwrap();
        for _ in 0..10 {
            s = s.update_slot_count(100, 8).unwrap();
        }
        assert_eq!(s.current_threshold(), 5.0);
        for _ in 0..10 {
            s = s.update_slot_count(0, 8).unwrap();
        }
        assert_eq!(s.current_threshold(), 0.0);
    }

    #[test]
    fn level_examples() {
        let s =
            init_threshold(ThresholdMethod::LevelAverage, &cfg(ModulationScheme::PPM2)).unwrap();
        assert_eq!(
            s.update_level(&est(2.5, 0.0)).unwrap().current_threshold(),
            2.5
        );

        let s =
            init_threshold(ThresholdMethod::LevelAverage, &cfg(ModulationScheme::PPM4)).unwrap();
        assert_eq!(
            s.update_level(&est(1.0, 0.0)).unwrap().current_threshold(),
            2.0
        );

        let s =
            init_threshold(ThresholdMethod::LevelAverage, &cfg(ModulationScheme::PPM2)).unwrap();
        let t = s.update_level(&est(0.0, 0.0)).unwrap().current_threshold();
        assert!((t - 0.1).abs() < 1e-15);
    }

    #[test]
    fn level_inverted_ratio() {
        // 4-IPPM, V_A = 4, V_B = 0: mean 3, threshold 2.
        let s =
            init_threshold(ThresholdMethod::LevelAverage, &cfg(ModulationScheme::IPPM4)).unwrap();
        let t = s.update_level(&est(3.0, 0.0)).unwrap().current_threshold();
        assert!((t - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ceiling_wins_over_margin_floor() {
        let mut c = cfg(ModulationScheme::PPM2);
        c.theta_max = 1.0;
        let s = init_threshold(ThresholdMethod::LevelAverage, &c).unwrap();
        // Low estimate far above the ceiling: stay inside bounds anyway.
        let t = s.update_level(&est(3.0, 2.0)).unwrap().current_threshold();
        assert_eq!(t, 1.0);
    }

    #[test]
    fn wrong_method_is_misuse() {
        let s = init_threshold(ThresholdMethod::Fixed, &cfg(ModulationScheme::PPM2)).unwrap();
        assert!(matches!(
            s.update_slot_count(1, 1),
            Err(Error::StateMisuse(_))
        ));
        assert!(matches!(
            s.update_level(&est(1.0, 0.0)),
            Err(Error::StateMisuse(_))
        ));
        let s = init_threshold(ThresholdMethod::SlotCount, &cfg(ModulationScheme::PPM2)).unwrap();
        assert!(matches!(
            s.update_level(&est(1.0, 0.0)),
            Err(Error::StateMisuse(_))
        ));
        assert!(s.update_slot_count(1, 0).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in ThresholdMethod::all() {
            assert_eq!(m.name().parse::<ThresholdMethod>().unwrap(), m);
        }
        assert!("auto".parse::<ThresholdMethod>().is_err());
    }
}
