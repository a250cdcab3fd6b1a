use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpotProfile {
    FlatTop,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpotGeometry {
    pub center_um: (f64, f64),
    pub diameter_um: f64,
    pub profile: SpotProfile,
}

impl SpotGeometry {
    pub fn flat_top(center_um: (f64, f64), diameter_um: f64) -> Self {
        SpotGeometry { center_um, diameter_um, profile: SpotProfile::FlatTop }
    }

    pub fn radius_um(&self) -> f64 {
        self.diameter_um / 2.0
    }
}

/// Transverse fluence profile of the write beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BeamProfile {
    Gaussian,
    /// Super-Gaussian exp(−2 (r/w)^(2·order)); order 1 is Gaussian.
    FlatTop {
        order: u32,
    },
}

impl BeamProfile {
    fn order(&self) -> u32 {
        match *self {
            BeamProfile::Gaussian => 1,
            BeamProfile::FlatTop { order } => order.max(1),
        }
    }

    fn spot_profile(&self) -> SpotProfile {
        match self {
            BeamProfile::Gaussian => SpotProfile::Gaussian,
            BeamProfile::FlatTop { .. } => SpotProfile::FlatTop,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WriteBeam {
    pub average_power_w: f64,
    pub repetition_rate_hz: f64,
    /// 1/e² diameter of the beam.
    pub waist_diameter_um: f64,
    pub profile: BeamProfile,
    pub threshold_fluence_j_cm2: f64,
}

impl WriteBeam {
    pub fn pulse_energy_j(&self) -> f64 {
        self.average_power_w / self.repetition_rate_hz
    }

    /// On-axis fluence in J/cm².
    pub fn peak_fluence_j_cm2(&self) -> f64 {
        let n = f64::from(self.profile.order());
        let w_cm = self.waist_diameter_um / 2.0 * 1e-4;
        // ∫ exp(−2 (r/w)^(2n)) dA = π w² Γ(1 + 1/n) 2^(−1/n)
        let area = std::f64::consts::PI * w_cm * w_cm * gamma(1.0 + 1.0 / n) * 2f64.powf(-1.0 / n);
        self.pulse_energy_j() / area
    }
}

/// Diameter of the region where the pulse fluence reaches the switching
/// threshold; zero when the peak stays below it.
pub fn write_spot_geometry(beam: &WriteBeam) -> SpotGeometry {
    let profile = beam.profile.spot_profile();
    let peak = beam.peak_fluence_j_cm2();
    if !(beam.average_power_w > 0.0) || !(peak > beam.threshold_fluence_j_cm2) {
        return SpotGeometry { center_um: (0.0, 0.0), diameter_um: 0.0, profile };
    }
    let n = f64::from(beam.profile.order());
    let w = beam.waist_diameter_um / 2.0;
    let radius = w * ((peak / beam.threshold_fluence_j_cm2).ln() / 2.0).powf(1.0 / (2.0 * n));
    SpotGeometry { center_um: (0.0, 0.0), diameter_um: 2.0 * radius, profile }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beam(power: f64, profile: BeamProfile) -> WriteBeam {
        WriteBeam {
            average_power_w: power,
            repetition_rate_hz: 1000.0,
            waist_diameter_um: 100.0,
            profile,
            threshold_fluence_j_cm2: 0.01,
        }
    }

    #[test]
    fn zero_power_gives_no_spot() {
        assert_eq!(write_spot_geometry(&beam(0.0, BeamProfile::Gaussian)).diameter_um, 0.0);
        assert_eq!(write_spot_geometry(&beam(0.0, BeamProfile::FlatTop { order: 8 })).diameter_um, 0.0);
    }

    #[test]
    fn gaussian_matches_closed_form() {
        let b = beam(5.15e-3, BeamProfile::Gaussian);
        let e = b.pulse_energy_j();
        let w_cm = 50e-4;
        let f0 = 2.0 * e / (std::f64::consts::PI * w_cm * w_cm);
        assert!((b.peak_fluence_j_cm2() - f0).abs() / f0 < 1e-12);
        let d = write_spot_geometry(&b).diameter_um;
        let expected = 100.0 * ((f0 / 0.01).ln() / 2.0).sqrt();
        assert!((d - expected).abs() < 1e-9);
    }

    #[test]
    fn gaussian_at_threshold_has_vanishing_spot() {
        let mut b = beam(1e-3, BeamProfile::Gaussian);
        b.threshold_fluence_j_cm2 = b.peak_fluence_j_cm2();
        assert_eq!(write_spot_geometry(&b).diameter_um, 0.0);
        b.threshold_fluence_j_cm2 *= 1.0 - 1e-9;
        assert!(write_spot_geometry(&b).diameter_um < 1.0);
    }

    #[test]
    fn flat_top_grows_with_power() {
        let profile = BeamProfile::FlatTop { order: 8 };
        let d1 = write_spot_geometry(&beam(2e-3, profile)).diameter_um;
        let d2 = write_spot_geometry(&beam(5e-3, profile)).diameter_um;
        assert!(d1 > 0.0 && d1 < d2);
        // steep edges: the written disk stays close to the waist
        assert!((d2 - 100.0).abs() < 25.0);
    }
}
