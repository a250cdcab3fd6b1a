//! Phenomenological magnetization response of one sample site to
//! accumulated helicity-dependent pulse exposure.
//!
//! A site keeps a clamped exposure odometer. Write packets add pulses, erase
//! packets remove them, and the written fraction `m` is a fixed curve of the
//! odometer: zero through the dead zone, a monotone rise, then saturation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InhomogeneityParams {
    pub dead_zone_pulses: u32,
    pub saturation_pulses: u32,
    /// Local probe illumination relative to nominal.
    pub background_gain: f64,
}

impl InhomogeneityParams {
    pub const NOMINAL: InhomogeneityParams =
        InhomogeneityParams { dead_zone_pulses: 250, saturation_pulses: 600, background_gain: 1.0 };

    pub fn validate(&self) -> Result<()> {
        if self.dead_zone_pulses >= self.saturation_pulses {
            return Err(Error::config(format!(
                "dead zone ({}) must be below saturation ({}) pulses",
                self.dead_zone_pulses, self.saturation_pulses
            )));
        }
        if !(self.background_gain > 0.0) || !self.background_gain.is_finite() {
            return Err(Error::config(format!("background gain must be positive, got {}", self.background_gain)));
        }
        Ok(())
    }
}

impl Default for InhomogeneityParams {
    fn default() -> Self {
        Self::NOMINAL
    }
}

/// Shape of the rise between dead zone and saturation, on normalized
/// progress t ∈ [0, 1]. Every shape maps 0 → 0 and 1 → 1 exactly.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CurveShape {
    /// Cubic Hermite 3t² − 2t³.
    #[default]
    Smoothstep,
    /// Logistic in t, rescaled so the endpoints are hit exactly.
    Logistic { steepness: f64 },
    /// Straight ramp.
    Linear,
}

impl CurveShape {
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match *self {
            CurveShape::Smoothstep => t * t * (3.0 - 2.0 * t),
            CurveShape::Linear => t,
            CurveShape::Logistic { steepness } => {
                let s = |x: f64| 1.0 / (1.0 + (-steepness * (x - 0.5)).exp());
                let (lo, hi) = (s(0.0), s(1.0));
                ((s(t) - lo) / (hi - lo)).clamp(0.0, 1.0)
            }
        }
    }
}

/// Written fraction after `effective_pulses` of net write exposure.
pub fn response_curve(effective_pulses: i64, params: &InhomogeneityParams, shape: CurveShape) -> f64 {
    let dead = i64::from(params.dead_zone_pulses);
    let sat = i64::from(params.saturation_pulses);
    if effective_pulses <= dead {
        return 0.0;
    }
    if effective_pulses >= sat {
        return 1.0;
    }
    shape.eval((effective_pulses - dead) as f64 / (sat - dead) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Helicity {
    Write,
    Erase,
}

impl Helicity {
    pub fn reversed(self) -> Self {
        match self {
            Helicity::Write => Helicity::Erase,
            Helicity::Erase => Helicity::Write,
        }
    }
}

/// Physical circular polarization. Which one writes is a convention switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Circular {
    Right,
    Left,
}

impl Circular {
    pub fn helicity(self, write_with: Circular) -> Helicity {
        if self == write_with {
            Helicity::Write
        } else {
            Helicity::Erase
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SaturationState {
    Background,
    Written,
}

/// Curve family plus the odometer ceiling shared by every site of a rig.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynapseModel {
    pub curve: CurveShape,
    /// Exposure is capped at `saturation_pulses + margin`; `None` uses a
    /// margin equal to `saturation_pulses`.
    pub ceiling_margin: Option<u32>,
}

impl Default for SynapseModel {
    fn default() -> Self {
        SynapseModel { curve: CurveShape::Smoothstep, ceiling_margin: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynapseSite {
    accumulated_signed_pulses: i64,
    pub params: InhomogeneityParams,
    pub model: SynapseModel,
}

impl SynapseSite {
    /// A site in background saturation (m = 0).
    pub fn new(params: InhomogeneityParams, model: SynapseModel) -> Self {
        SynapseSite { accumulated_signed_pulses: 0, params, model }
    }

    pub fn accumulated_pulses(&self) -> i64 {
        self.accumulated_signed_pulses
    }

    pub fn ceiling(&self) -> i64 {
        let sat = i64::from(self.params.saturation_pulses);
        sat + i64::from(self.model.ceiling_margin.unwrap_or(self.params.saturation_pulses))
    }

    pub fn written_fraction(&self) -> f64 {
        response_curve(self.accumulated_signed_pulses, &self.params, self.model.curve)
    }

    pub fn apply_packet(&self, helicity: Helicity, pulse_count: u32) -> SynapseSite {
        let delta = i64::from(pulse_count);
        let next = match helicity {
            Helicity::Write => self.accumulated_signed_pulses + delta,
            Helicity::Erase => self.accumulated_signed_pulses - delta,
        };
        SynapseSite { accumulated_signed_pulses: next.clamp(0, self.ceiling()), ..*self }
    }

    pub fn saturate(&self, direction: SaturationState) -> SynapseSite {
        let exposure = match direction {
            SaturationState::Background => 0,
            SaturationState::Written => i64::from(self.params.saturation_pulses),
        };
        SynapseSite { accumulated_signed_pulses: exposure, ..*self }
    }
}

/// Draws per-site parameters with uniform relative jitter of ±`spread`
/// around `nominal`. Deterministic for a given seed.
pub fn sample_sites(
    seed: u64,
    n_sites: usize,
    spread: f64,
    nominal: &InhomogeneityParams,
) -> Result<Vec<InhomogeneityParams>> {
    if n_sites == 0 {
        return Err(Error::usage("at least one site is required"));
    }
    if !(spread >= 0.0) || !spread.is_finite() {
        return Err(Error::config(format!("site spread must be a non-negative number, got {spread}")));
    }
    nominal.validate()?;
    let worst_dead = (f64::from(nominal.dead_zone_pulses) * (1.0 + spread)).round();
    let worst_sat = (f64::from(nominal.saturation_pulses) * (1.0 - spread)).round();
    if spread >= 1.0 || worst_dead >= worst_sat {
        return Err(Error::config(format!("site spread {spread} is too large: dead zone could reach saturation")));
    }
    let mut rng = rng::stream(seed, Stream::SiteParams);
    let mut jitter = |v: f64| {
        if spread == 0.0 {
            v
        } else {
            v * (1.0 + rng.random_range(-spread..=spread))
        }
    };
    Ok((0..n_sites)
        .map(|_| InhomogeneityParams {
            dead_zone_pulses: jitter(f64::from(nominal.dead_zone_pulses)).round() as u32,
            saturation_pulses: jitter(f64::from(nominal.saturation_pulses)).round() as u32,
            background_gain: jitter(nominal.background_gain),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const NOM: InhomogeneityParams = InhomogeneityParams::NOMINAL;

    fn site() -> SynapseSite {
        SynapseSite::new(NOM, SynapseModel::default())
    }

    #[test]
    fn curve_anchors() {
        assert_eq!(response_curve(0, &NOM, CurveShape::Smoothstep), 0.0);
        assert_eq!(response_curve(-40, &NOM, CurveShape::Smoothstep), 0.0);
        assert!(response_curve(250, &NOM, CurveShape::Smoothstep) <= 0.02);
        assert!(response_curve(600, &NOM, CurveShape::Smoothstep) >= 0.98);
        assert_eq!(response_curve(5000, &NOM, CurveShape::Smoothstep), 1.0);
        // midpoint of the cubic Hermite
        assert!((response_curve(425, &NOM, CurveShape::Smoothstep) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn logistic_hits_endpoints() {
        let shape = CurveShape::Logistic { steepness: 10.0 };
        assert_eq!(shape.eval(0.0), 0.0);
        assert!((shape.eval(1.0) - 1.0).abs() < 1e-12);
        assert!((shape.eval(0.5) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn packet_examples() {
        let s = site().apply_packet(Helicity::Write, 50);
        assert_eq!(s.accumulated_pulses(), 50);
        assert_eq!(s.written_fraction(), 0.0);

        let mut s = site().saturate(SaturationState::Written);
        assert_eq!(s.written_fraction(), 1.0);
        for _ in 0..12 {
            s = s.apply_packet(Helicity::Erase, 50);
        }
        assert_eq!(s.written_fraction(), 0.0);

        let once = site().apply_packet(Helicity::Write, 600).written_fraction();
        let cycled = site()
            .apply_packet(Helicity::Write, 600)
            .apply_packet(Helicity::Erase, 600)
            .apply_packet(Helicity::Write, 600)
            .written_fraction();
        assert!((once - cycled).abs() <= 0.02);
    }

    #[test]
    fn saturate_examples() {
        let s = site().apply_packet(Helicity::Write, 400);
        assert_eq!(s.saturate(SaturationState::Background).written_fraction(), 0.0);
        assert_eq!(s.saturate(SaturationState::Written).written_fraction(), 1.0);
        let z = s.saturate(SaturationState::Background).apply_packet(Helicity::Write, 0);
        assert_eq!(z.written_fraction(), 0.0);
    }

    #[test]
    fn exposure_is_clamped() {
        let s = site().apply_packet(Helicity::Write, 10_000);
        assert_eq!(s.accumulated_pulses(), 1200);
        let s = s.apply_packet(Helicity::Erase, 50_000);
        assert_eq!(s.accumulated_pulses(), 0);
    }

    #[test]
    fn sample_sites_contract() {
        let flat = sample_sites(3, 9, 0.0, &NOM).unwrap();
        assert!(flat.iter().all(|p| *p == NOM));
        assert_eq!(sample_sites(11, 9, 0.1, &NOM).unwrap(), sample_sites(11, 9, 0.1, &NOM).unwrap());
        let jittered = sample_sites(11, 9, 0.1, &NOM).unwrap();
        assert!(jittered.iter().all(|p| (225..=275).contains(&p.dead_zone_pulses)));
        assert!(jittered.iter().all(|p| (540..=660).contains(&p.saturation_pulses)));
        assert!(jittered.iter().all(|p| (0.9..=1.1).contains(&p.background_gain)));
        assert!(matches!(sample_sites(1, 9, 0.5, &NOM), Err(Error::Config { .. })));
        assert!(matches!(sample_sites(1, 0, 0.1, &NOM), Err(Error::Usage(_))));
    }

    fn arb_params() -> impl Strategy<Value = InhomogeneityParams> {
        (0u32..1000, 1u32..2000, 0.1f64..3.0).prop_map(|(dead, width, gain)| InhomogeneityParams {
            dead_zone_pulses: dead,
            saturation_pulses: dead + width,
            background_gain: gain,
        })
    }

    fn arb_shape() -> impl Strategy<Value = CurveShape> {
        prop_oneof![
            Just(CurveShape::Smoothstep),
            Just(CurveShape::Linear),
            (0.5f64..30.0).prop_map(|k| CurveShape::Logistic { steepness: k }),
        ]
    }

    proptest! {
        #[test]
        fn curve_is_monotone(params in arb_params(), shape in arb_shape(), a in -500i64..5000, step in 0i64..500) {
            let lo = response_curve(a, &params, shape);
            let hi = response_curve(a + step, &params, shape);
            prop_assert!(lo <= hi);
            prop_assert!((0.0..=1.0).contains(&lo));
        }

        #[test]
        fn write_then_erase_restores(params in arb_params(), start in 0u32..3000, k in 0u32..2000) {
            let k = k.min(params.saturation_pulses);
            let s0 = SynapseSite::new(params, SynapseModel::default()).apply_packet(Helicity::Write, start);
            let s1 = s0.apply_packet(Helicity::Write, k).apply_packet(Helicity::Erase, k);
            prop_assert_eq!(s0.written_fraction(), s1.written_fraction());
        }

        #[test]
        fn m_stays_in_unit_interval(ops in prop::collection::vec((any::<bool>(), 0u32..800), 0..60)) {
            let mut s = site();
            for (write, n) in ops {
                s = s.apply_packet(if write { Helicity::Write } else { Helicity::Erase }, n);
                let m = s.written_fraction();
                prop_assert!((0.0..=1.0).contains(&m));
            }
        }
    }
}
