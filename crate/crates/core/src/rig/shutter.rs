use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JitterMode {
    /// Pulses = repetition rate × opening time, opening time uniform in range.
    TimeDerived,
    /// Nominal packet scaled by U(0, 1], the same spread as η ∈ (0, η_max].
    Relative,
    /// Exactly the nominal packet every time.
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShutterModel {
    pub opening_time_ms: (f64, f64),
    pub repetition_rate_hz: f64,
    pub nominal_packet_pulses: u32,
    pub jitter_mode: JitterMode,
}

impl Default for ShutterModel {
    fn default() -> Self {
        ShutterModel {
            opening_time_ms: (15.0, 25.0),
            repetition_rate_hz: 1000.0,
            nominal_packet_pulses: 50,
            jitter_mode: JitterMode::Relative,
        }
    }
}

impl ShutterModel {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.opening_time_ms;
        if !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() {
            return Err(Error::config(format!("shutter opening range must satisfy 0 < min <= max, got {lo}..{hi} ms")));
        }
        if !(self.repetition_rate_hz > 0.0) || !self.repetition_rate_hz.is_finite() {
            return Err(Error::config(format!("repetition rate must be > 0, got {}", self.repetition_rate_hz)));
        }
        if self.nominal_packet_pulses == 0 {
            return Err(Error::config("nominal packet must contain at least one pulse"));
        }
        Ok(())
    }
}

/// Pulses let through by one shutter opening; never zero.
pub fn shutter_event<R: Rng + ?Sized>(rng: &mut R, model: &ShutterModel) -> u32 {
    let count = match model.jitter_mode {
        JitterMode::Off => f64::from(model.nominal_packet_pulses),
        JitterMode::TimeDerived => {
            let (lo, hi) = model.opening_time_ms;
            let t_ms = if hi > lo { rng.random_range(lo..=hi) } else { lo };
            model.repetition_rate_hz * t_ms / 1000.0
        }
        JitterMode::Relative => f64::from(model.nominal_packet_pulses) * (1.0 - rng.random::<f64>()),
    };
    (count.round() as u32).max(1)
}
