//! Per-pulse synapse energy and the run energy ledger.

use serde::{Deserialize, Serialize};

use crate::optics::{SpotGeometry, WriteBeam};
use crate::trainer::TrainingTrace;

pub const READ_ENERGY_PER_SYNAPSE_J: f64 = 0.4e-9;

/// Pulse energy apportioned to the written spot by area fraction,
/// (P / f) · (d_spot / d_waist)².
pub fn energy_per_pulse(beam: &WriteBeam, spot: &SpotGeometry) -> f64 {
    if spot.diameter_um <= 0.0 {
        return 0.0;
    }
    let fraction = (spot.diameter_um / beam.waist_diameter_um).powi(2);
    beam.pulse_energy_j() * fraction
}

/// Average write power that places the per-pulse energies of two spot
/// diameters symmetrically (in log space) inside `[lo_j, hi_j]`.
pub fn calibrate_write_power(
    band_j: (f64, f64),
    spot_diameters_um: (f64, f64),
    waist_diameter_um: f64,
    repetition_rate_hz: f64,
) -> f64 {
    let target = (band_j.0 * band_j.1).sqrt();
    let fraction = (spot_diameters_um.0 * spot_diameters_um.1) / (waist_diameter_um * waist_diameter_um);
    target * repetition_rate_hz / fraction
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerConfig {
    pub per_pulse_energy_j: f64,
    pub read_energy_per_synapse_j: f64,
    /// Reads done before training (background capture and initial readout).
    pub init_reads: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnergyKind {
    Write,
    Read,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    /// Learning step, `None` for initialization.
    pub step: Option<usize>,
    pub kind: EnergyKind,
    pub site: Option<usize>,
    pub pulses: u64,
    pub events: usize,
    pub energy_j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub records: Vec<EnergyRecord>,
    pub total_pulses: u64,
    pub read_events: usize,
    pub write_energy_j: f64,
    pub read_energy_j: f64,
    pub read_energy_per_event_j: f64,
    pub steps: usize,
}

fn order_free_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.into_iter().sum()
}

impl EnergyLedger {
    /// Totals over `records`. Every read event costs `read_energy_per_event_j`,
    /// so the read total is computed as events × cost rather than summed.
    pub fn from_records(records: Vec<EnergyRecord>, read_energy_per_event_j: f64, steps: usize) -> Self {
        let of = |k: EnergyKind| records.iter().filter(move |r| r.kind == k);
        let read_events: usize = of(EnergyKind::Read).map(|r| r.events).sum();
        EnergyLedger {
            total_pulses: of(EnergyKind::Write).map(|r| r.pulses).sum(),
            read_events,
            write_energy_j: order_free_sum(of(EnergyKind::Write).map(|r| r.energy_j)),
            read_energy_j: read_events as f64 * read_energy_per_event_j,
            read_energy_per_event_j,
            steps,
            records,
        }
    }

    pub fn total_energy_j(&self) -> f64 {
        self.write_energy_j + self.read_energy_j
    }

    pub fn summary_line(&self) -> String {
        format!(
            "pulses={} write={:.3} nJ read={:.3} nJ ({} reads) steps={}",
            self.total_pulses,
            self.write_energy_j * 1e9,
            self.read_energy_j * 1e9,
            self.read_events,
            self.steps
        )
    }
}

/// Write energy from every delivered learning pulse, read energy from every
/// ROI snapshot batch.
pub fn account_run(trace: &TrainingTrace, config: &LedgerConfig) -> EnergyLedger {
    let mut records = Vec::new();
    if config.init_reads > 0 {
        records.push(EnergyRecord {
            step: None,
            kind: EnergyKind::Read,
            site: None,
            pulses: 0,
            events: config.init_reads,
            energy_j: config.init_reads as f64 * config.read_energy_per_synapse_j,
        });
    }
    for s in &trace.steps {
        for sp in &s.site_pulses {
            records.push(EnergyRecord {
                step: Some(s.step),
                kind: EnergyKind::Write,
                site: Some(sp.site),
                pulses: u64::from(sp.pulses),
                events: 1,
                energy_j: f64::from(sp.pulses) * config.per_pulse_energy_j,
            });
        }
        if s.reads > 0 {
            records.push(EnergyRecord {
                step: Some(s.step),
                kind: EnergyKind::Read,
                site: None,
                pulses: 0,
                events: s.reads,
                energy_j: s.reads as f64 * config.read_energy_per_synapse_j,
            });
        }
    }
    EnergyLedger::from_records(records, config.read_energy_per_synapse_j, trace.steps.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::BeamProfile;
    use crate::pattern::ClassLabel;
    use crate::trainer::{Action, Side, SitePulses, StepRecord, TraceSummary};

    fn beam(power: f64) -> WriteBeam {
        WriteBeam {
            average_power_w: power,
            repetition_rate_hz: 1000.0,
            waist_diameter_um: 100.0,
            profile: BeamProfile::FlatTop { order: 8 },
            threshold_fluence_j_cm2: 0.01,
        }
    }

    #[test]
    fn energy_examples() {
        let b = beam(5.15e-3);
        assert_eq!(energy_per_pulse(&b, &SpotGeometry::flat_top((0.0, 0.0), 0.0)), 0.0);
        let full = energy_per_pulse(&b, &SpotGeometry::flat_top((0.0, 0.0), 100.0));
        assert!((full - 5.15e-6).abs() < 1e-18);
    }

    #[test]
    fn calibration_brackets_band() {
        let p = calibrate_write_power((33e-12, 96e-12), (20.0, 34.0), 100.0, 1000.0);
        let b = beam(p);
        let e1 = energy_per_pulse(&b, &SpotGeometry::flat_top((0.0, 0.0), 20.0));
        let e2 = energy_per_pulse(&b, &SpotGeometry::flat_top((0.0, 0.0), 34.0));
        assert!(e1 >= 33e-12 && e2 <= 96e-12, "{e1} {e2}");
        assert!(((e1 * e2).sqrt() - (33e-12f64 * 96e-12).sqrt()).abs() < 1e-20);
    }

    fn step(n: usize, pulses: &[u32], reads: usize) -> StepRecord {
        StepRecord {
            step: n,
            epoch: 1,
            pattern_id: "z0".into(),
            class_label: ClassLabel::Z,
            output: 0.0,
            threshold: 0.0,
            desired: Side::Below,
            action: if pulses.is_empty() { Action::Accept } else { Action::LowerWeights },
            eta: None,
            site_pulses: pulses.iter().enumerate().map(|(i, &p)| SitePulses { site: i, pulses: p }).collect(),
            reads,
            weights: [0.0; 9],
        }
    }

    fn trace(steps: Vec<StepRecord>) -> TrainingTrace {
        TrainingTrace {
            initial_weights: [0.0; 9],
            initial_threshold: 0.0,
            summary: TraceSummary {
                total_steps: steps.len(),
                epochs: 1,
                updates: 0,
                threshold_raises: 0,
                converged: true,
                final_weights: [0.0; 9],
                final_threshold: 0.0,
            },
            raises: vec![],
            steps,
        }
    }

    #[test]
    fn ledger_examples() {
        let cfg = LedgerConfig {
            per_pulse_energy_j: 50e-12,
            read_energy_per_synapse_j: READ_ENERGY_PER_SYNAPSE_J,
            init_reads: 0,
        };
        let quiet = account_run(&trace(vec![step(1, &[], 0), step(2, &[], 0)]), &cfg);
        assert_eq!(quiet.write_energy_j, 0.0);
        let one = account_run(&trace(vec![step(1, &[100], 1)]), &cfg);
        assert!((one.write_energy_j - 5e-9).abs() < 1e-21);
        assert_eq!(one.read_energy_j, 0.4e-9);
        assert_eq!(one.total_pulses, 100);
    }

    #[test]
    fn totals_do_not_depend_on_record_order() {
        let cfg = LedgerConfig { per_pulse_energy_j: 47.7e-12, read_energy_per_synapse_j: 0.4e-9, init_reads: 20 };
        let t =
            trace(vec![step(1, &[37, 41, 12], 3), step(2, &[], 0), step(3, &[99, 3], 2), step(4, &[58, 7, 66, 1], 4)]);
        let ledger = account_run(&t, &cfg);
        let mut shuffled = ledger.records.clone();
        shuffled.reverse();
        shuffled.swap(0, 3);
        let again = EnergyLedger::from_records(shuffled, 0.4e-9, ledger.steps);
        assert_eq!(again.write_energy_j, ledger.write_energy_j);
        assert_eq!(again.read_energy_j, ledger.read_energy_j);
        assert_eq!(ledger.read_events, 29);
        assert!(ledger.records.iter().all(|r| r.energy_j >= 0.0));
        assert!(ledger.summary_line().starts_with("pulses=324 "));
    }
}
