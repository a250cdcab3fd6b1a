//! Background-referenced weight extraction.
//!
//! A site's weight is the fractional darkening of its ROI against the cached
//! background image of the same ROI: w = (I_B − I_W) / I_B. The weighted
//! input fed to the output sum is I_B − I_W for an active input and
//! I_B − I_B = 0 for an inactive one, so the network works on raw count scale.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::N_INPUTS;

fn check_background(background: f64, what: &str) -> Result<()> {
    if !(background > 0.0) {
        return Err(Error::DegenerateBackground(format!("{what} background sum is {background}")));
    }
    Ok(())
}

/// Unclamped darkening fraction.
pub fn raw_weight(background: f64, written: f64) -> Result<f64> {
    check_background(background, "weight")?;
    Ok((background - written) / background)
}

/// Darkening fraction clamped to [0, 1].
pub fn extract_weight(background: f64, written: f64) -> Result<f64> {
    Ok(raw_weight(background, written)?.clamp(0.0, 1.0))
}

/// Count-scale contribution of one input: B − W when the input is on,
/// B − B when it is off.
pub fn gated_contribution(input_bit: u8, background: f64, written: f64) -> Result<f64> {
    check_background(background, "weight")?;
    match input_bit {
        // B − B
        0 => Ok(0.0),
        1 => Ok(background - written),
        other => Err(Error::usage(format!("input bit must be 0 or 1, got {other}"))),
    }
}

pub fn extract_threshold(background: f64, written: f64) -> Result<f64> {
    check_background(background, "threshold")?;
    Ok(background - written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightState {
    pub background_sums: [f64; N_INPUTS],
    pub written_sums: [f64; N_INPUTS],
    pub weights: [f64; N_INPUTS],
    pub threshold_background: f64,
    pub threshold_written: f64,
    /// Count-scale threshold, including any raises applied during training.
    pub threshold: f64,
    /// Weights pulled back into [0, 1] at the most recent extraction.
    pub clamp_events: usize,
}

impl WeightState {
    pub fn from_sums(
        background_sums: [f64; N_INPUTS],
        written_sums: [f64; N_INPUTS],
        threshold_background: f64,
        threshold_written: f64,
    ) -> Result<Self> {
        let mut weights = [0.0; N_INPUTS];
        let mut clamp_events = 0;
        for i in 0..N_INPUTS {
            let raw = raw_weight(background_sums[i], written_sums[i])?;
            if !(0.0..=1.0).contains(&raw) {
                clamp_events += 1;
            }
            weights[i] = raw.clamp(0.0, 1.0);
        }
        Ok(WeightState {
            background_sums,
            written_sums,
            weights,
            threshold_background,
            threshold_written,
            threshold: extract_threshold(threshold_background, threshold_written)?,
            clamp_events,
        })
    }

    /// Weights on the count scale used for output sums, I_B · w.
    pub fn count_weights(&self) -> [f64; N_INPUTS] {
        std::array::from_fn(|i| self.background_sums[i] * self.weights[i])
    }

    pub fn mean_background(&self) -> f64 {
        self.background_sums.iter().sum::<f64>() / N_INPUTS as f64
    }
}
