//! Plot-ready exports. Every writer is a pure function of its inputs, so a
//! (config, seed) pair always produces byte-identical files.
//!
//! CSV schemas carry a version string listed in the run manifest; bump it
//! whenever columns change.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::optics::Frame;
use crate::pattern::{ClassLabel, Dataset, N_INPUTS};
use crate::trainer::{evaluate, TrainingTrace};
use crate::weights::WeightState;

pub const LEARNING_CURVE_SCHEMA: &str = "learning_curve/v1";
pub const BARS_SCHEMA: &str = "bars/v1";
pub const SWEEP_SCHEMA: &str = "sweep/v1";
pub const DATASET_SCHEMA: &str = "dataset/v1";

pub const LEARNING_CURVE_HEADER: &[&str] = &[
    "step",
    "epoch",
    "pattern_id",
    "class",
    "output",
    "threshold",
    "output_norm",
    "threshold_norm",
    "desired",
    "action",
    "eta",
    "pulses",
    "reads",
];

pub const BARS_HEADER: &[&str] =
    &["index", "pattern_id", "class", "variant", "role", "output", "threshold", "output_norm", "desired", "correct"];

pub const SWEEP_HEADER: &[&str] = &[
    "seed",
    "backend",
    "converged",
    "steps",
    "epochs",
    "updates",
    "threshold_raises",
    "test_correct",
    "test_total",
    "test_accuracy",
    "final_threshold",
    "min_weight",
    "pulses",
    "read_events",
];

/// Writes through a sibling temp file and renames, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name =
        path.file_name().ok_or_else(|| Error::usage(format!("not a file path: {}", path.display())))?.to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

fn csv_bytes<F>(header: &[&str], fill: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    fill(&mut w)?;
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per learning step. `scale` divides outputs and thresholds into
/// the `_norm` columns: 1 for the abstract backend, mean background sum for
/// the rig, so both modes plot on the same axis.
pub fn learning_curve_csv(trace: &TrainingTrace, scale: f64) -> Result<Vec<u8>> {
    csv_bytes(LEARNING_CURVE_HEADER, |w| {
        for s in &trace.steps {
            let pulses: u32 = s.site_pulses.iter().map(|p| p.pulses).sum();
            w.write_record([
                s.step.to_string(),
                s.epoch.to_string(),
                s.pattern_id.clone(),
                s.class_label.to_string(),
                s.output.to_string(),
                s.threshold.to_string(),
                (s.output / scale).to_string(),
                (s.threshold / scale).to_string(),
                s.desired.as_str().to_string(),
                s.action.as_str().to_string(),
                opt(s.eta),
                pulses.to_string(),
                s.reads.to_string(),
            ])?;
        }
        Ok(())
    })
}

/// Output of each of the 27 patterns (training blocks, tests at positions
/// 9, 18, 27) against fixed weights and threshold.
pub fn bars_csv(
    dataset: &Dataset,
    weights: &[f64; N_INPUTS],
    threshold: f64,
    target: ClassLabel,
    scale: f64,
) -> Result<Vec<u8>> {
    let order = dataset.bar_order();
    let evals = evaluate(weights, threshold, &order, target);
    csv_bytes(BARS_HEADER, |w| {
        for (i, (p, e)) in order.iter().zip(&evals).enumerate() {
            w.write_record([
                (i + 1).to_string(),
                e.pattern_id.clone(),
                p.class_label.to_string(),
                p.variant_index.to_string(),
                p.role.to_string(),
                e.output.to_string(),
                threshold.to_string(),
                (e.output / scale).to_string(),
                e.desired.as_str().to_string(),
                e.correct.to_string(),
            ])?;
        }
        Ok(())
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub backend: String,
    pub converged: bool,
    pub steps: usize,
    pub epochs: usize,
    pub updates: usize,
    pub threshold_raises: usize,
    pub test_correct: usize,
    pub test_total: usize,
    pub final_threshold: f64,
    pub min_weight: f64,
    pub pulses: u64,
    pub read_events: usize,
}

impl SeedSummary {
    pub fn test_accuracy(&self) -> f64 {
        if self.test_total == 0 {
            0.0
        } else {
            self.test_correct as f64 / self.test_total as f64
        }
    }
}

pub fn sweep_csv(rows: &[SeedSummary]) -> Result<Vec<u8>> {
    csv_bytes(SWEEP_HEADER, |w| {
        for r in rows {
            w.write_record([
                r.seed.to_string(),
                r.backend.clone(),
                r.converged.to_string(),
                r.steps.to_string(),
                r.epochs.to_string(),
                r.updates.to_string(),
                r.threshold_raises.to_string(),
                r.test_correct.to_string(),
                r.test_total.to_string(),
                r.test_accuracy().to_string(),
                r.final_threshold.to_string(),
                r.min_weight.to_string(),
                r.pulses.to_string(),
                r.read_events.to_string(),
            ])?;
        }
        Ok(())
    })
}

pub fn dataset_csv(dataset: &Dataset) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    dataset.write_csv(&mut out)?;
    Ok(out)
}

#[derive(Serialize)]
struct StateLine<'a> {
    step: usize,
    #[serde(flatten)]
    state: &'a WeightState,
}

/// One JSON object per line; step 0 is the post-initialization state.
pub fn weight_states_jsonl(states: &[(usize, WeightState)]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for (step, state) in states {
        serde_json::to_writer(&mut out, &StateLine { step: *step, state })?;
        out.push(b'\n');
    }
    Ok(out)
}

/// PGM bytes plus a JSON sidecar with the exposure metadata.
pub fn frame_files(frame: &Frame, label: &str) -> Result<(Vec<u8>, Vec<u8>)> {
    let mut pgm = Vec::new();
    frame.write_pgm(&mut pgm)?;
    #[derive(Serialize)]
    struct Sidecar<'a> {
        label: &'a str,
        #[serde(flatten)]
        meta: &'a crate::optics::FrameMeta,
    }
    let json = to_json(&Sidecar { label, meta: &frame.meta })?;
    Ok((pgm, json))
}
