//! Mode orchestration: builds the dataset, drives the trainer on the chosen
//! backend and writes the artifacts for each mode.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Backend, Mode, RunConfig, Verbosity};
use crate::error::Result;
use crate::export::{self, SeedSummary};
use crate::optics::{Frame, SpotGeometry};
use crate::pattern::{build_dataset, Dataset};
use crate::rig::{account_run, energy_per_pulse, EnergyLedger, LedgerConfig, Rig};
use crate::trainer::{evaluate_test, train, train_observed, TrainingTrace, VectorBackend};
use crate::weights::WeightState;

/// Camera field center used for full-field frame dumps: midway across the
/// weight grid and the threshold site.
pub const FIELD_CENTER_UM: (f64, f64) = (24.0, 0.0);

#[derive(Debug, Clone)]
pub struct SimulateOutcome {
    pub dataset: Dataset,
    pub trace: TrainingTrace,
}

pub fn simulate(cfg: &RunConfig) -> Result<SimulateOutcome> {
    simulate_on(cfg, build_dataset(&cfg.bitmaps))
}

pub fn simulate_on(cfg: &RunConfig, dataset: Dataset) -> Result<SimulateOutcome> {
    let tc = cfg.trainer_config();
    let mut backend = VectorBackend::new(&tc);
    let trace = train(&dataset, &tc, &mut backend)?;
    Ok(SimulateOutcome { dataset, trace })
}

#[derive(Debug, Clone)]
pub struct EmulateOutcome {
    pub dataset: Dataset,
    pub trace: TrainingTrace,
    pub initial_state: WeightState,
    /// (step, state) after every learning step, kept when requested.
    pub states: Vec<(usize, WeightState)>,
    /// (label, frame) full-field dumps, kept when requested.
    pub frames: Vec<(String, Frame)>,
    pub ledger: EnergyLedger,
    pub read_events: usize,
    pub init_pulses: u64,
    /// Mean weight-site background sum, the count-to-unit normalization.
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EmulateOptions {
    pub keep_states: bool,
    pub keep_frames: bool,
}

pub fn per_pulse_energy(cfg: &RunConfig) -> f64 {
    let beam = cfg.energy.beam(cfg.rig.shutter.repetition_rate_hz);
    energy_per_pulse(&beam, &cfg.rig.spot(0))
}

pub fn emulate(cfg: &RunConfig, opts: EmulateOptions) -> Result<EmulateOutcome> {
    emulate_on(cfg, build_dataset(&cfg.bitmaps), opts)
}

/// Renders from a clone so frame dumps never touch the run's noise stream.
fn field_frame(rig: &Rig) -> Frame {
    rig.clone().render_field(FIELD_CENTER_UM)
}

pub fn emulate_on(cfg: &RunConfig, dataset: Dataset, opts: EmulateOptions) -> Result<EmulateOutcome> {
    let tc = cfg.trainer_config();
    let mut rig = Rig::new(cfg.rig, cfg.seed)?;
    let mut frames = Vec::new();
    if opts.keep_frames {
        frames.push(("background".to_string(), field_frame(&rig)));
    }
    let initial_state = rig.initialize_network()?;
    let init_reads = rig.read_events();
    let init_pulses: u64 = rig
        .log()
        .iter()
        .map(|e| match e {
            crate::rig::RigEvent::Pump { pulses, .. } => u64::from(*pulses),
            _ => 0,
        })
        .sum();
    if opts.keep_frames {
        frames.push(("initial".to_string(), field_frame(&rig)));
    }
    let n_train = dataset.training.len();
    let mut states = Vec::new();
    let trace = train_observed(&dataset, &tc, &mut rig, |rec, r: &Rig| {
        if opts.keep_states {
            states.push((rec.step, r.weight_state()?));
        }
        if opts.keep_frames && rec.step % n_train == 0 {
            frames.push((format!("epoch_{:03}", rec.epoch), field_frame(r)));
        }
        Ok(())
    })?;
    if opts.keep_frames {
        frames.push(("final".to_string(), field_frame(&rig)));
    }
    let ledger = account_run(
        &trace,
        &LedgerConfig {
            per_pulse_energy_j: per_pulse_energy(cfg),
            read_energy_per_synapse_j: cfg.energy.read_energy_nj * 1e-9,
            init_reads,
        },
    );
    Ok(EmulateOutcome {
        dataset,
        scale: initial_state.mean_background(),
        trace,
        initial_state,
        states,
        frames,
        ledger,
        read_events: rig.read_events(),
        init_pulses,
    })
}

fn summarize(seed: u64, backend: Backend, dataset: &Dataset, trace: &TrainingTrace, cfg: &RunConfig) -> SeedSummary {
    let s = &trace.summary;
    let evals = evaluate_test(&s.final_weights, s.final_threshold, dataset, cfg.trainer.target_class);
    SeedSummary {
        seed,
        backend: match backend {
            Backend::Simulate => "simulate".into(),
            Backend::Emulate => "emulate".into(),
        },
        converged: s.converged,
        steps: s.total_steps,
        epochs: s.epochs,
        updates: s.updates,
        threshold_raises: s.threshold_raises,
        test_correct: evals.iter().filter(|e| e.correct).count(),
        test_total: evals.len(),
        final_threshold: s.final_threshold,
        min_weight: s.final_weights.iter().copied().fold(f64::INFINITY, f64::min),
        pulses: trace.steps.iter().flat_map(|r| &r.site_pulses).map(|p| u64::from(p.pulses)).sum(),
        read_events: trace.steps.iter().map(|r| r.reads).sum(),
    }
}

/// Trains one seed on the given backend and summarizes it.
pub fn run_seed(cfg: &RunConfig, seed: u64, backend: Backend) -> Result<SeedSummary> {
    let cfg = RunConfig { seed, ..cfg.clone() };
    match backend {
        Backend::Simulate => {
            let out = simulate(&cfg)?;
            Ok(summarize(seed, backend, &out.dataset, &out.trace, &cfg))
        }
        Backend::Emulate => {
            let out = emulate(&cfg, EmulateOptions::default())?;
            Ok(summarize(seed, backend, &out.dataset, &out.trace, &cfg))
        }
    }
}

/// Seeds `cfg.seed .. cfg.seed + sweep.seeds`, in seed order. Each run owns
/// its random streams, so parallel and serial sweeps agree exactly.
pub fn sweep(cfg: &RunConfig) -> Result<Vec<SeedSummary>> {
    let seeds: Vec<u64> = (0..cfg.sweep.seeds as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
    let backend = cfg.sweep.backend;
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        seeds.par_iter().map(|&s| run_seed(cfg, s, backend)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        seeds.iter().map(|&s| run_seed(cfg, s, backend)).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReferenceSpot {
    pub diameter_um: f64,
    pub energy_per_pulse_j: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub write_power_w: f64,
    pub repetition_rate_hz: f64,
    pub waist_diameter_um: f64,
    pub reference_spots: Vec<ReferenceSpot>,
    pub rig_spot_diameter_um: f64,
    pub rig_energy_per_pulse_j: f64,
    pub read_energy_per_synapse_j: f64,
    pub init_pulses: u64,
    pub converged: bool,
    pub ledger: EnergyLedger,
}

pub fn energy_report(cfg: &RunConfig) -> Result<EnergyReport> {
    let rep = cfg.rig.shutter.repetition_rate_hz;
    let beam = cfg.energy.beam(rep);
    let (d1, d2) = cfg.energy.reference_spots_um;
    let reference_spots = [d1, d2]
        .iter()
        .map(|&d| ReferenceSpot {
            diameter_um: d,
            energy_per_pulse_j: energy_per_pulse(&beam, &SpotGeometry::flat_top((0.0, 0.0), d)),
        })
        .collect();
    let out = emulate(cfg, EmulateOptions::default())?;
    Ok(EnergyReport {
        write_power_w: beam.average_power_w,
        repetition_rate_hz: rep,
        waist_diameter_um: beam.waist_diameter_um,
        reference_spots,
        rig_spot_diameter_um: cfg.rig.spot_diameter_um,
        rig_energy_per_pulse_j: per_pulse_energy(cfg),
        read_energy_per_synapse_j: cfg.energy.read_energy_nj * 1e-9,
        init_pulses: out.init_pulses,
        converged: out.trace.summary.converged,
        ledger: out.ledger,
    })
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    /// One human-readable line for the terminal.
    pub summary: String,
}

struct Out<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Out<'_> {
    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        export::write_atomic(&path, bytes)?;
        self.files.push(path);
        Ok(())
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    mode: &'a str,
    seed: u64,
    crate_version: &'a str,
    schemas: Vec<&'a str>,
    files: Vec<String>,
}

fn trace_outputs(out: &mut Out, cfg: &RunConfig, dataset: &Dataset, trace: &TrainingTrace, scale: f64) -> Result<()> {
    let target = cfg.trainer.target_class;
    out.put("trace.json", &export::to_json(trace)?)?;
    out.put("learning_curve.csv", &export::learning_curve_csv(trace, scale)?)?;
    out.put(
        "bars_initial.csv",
        &export::bars_csv(dataset, &trace.initial_weights, trace.initial_threshold, target, scale)?,
    )?;
    out.put(
        "bars_final.csv",
        &export::bars_csv(dataset, &trace.summary.final_weights, trace.summary.final_threshold, target, scale)?,
    )?;
    Ok(())
}

/// Runs `cfg.mode` and writes its artifacts plus `config.txt` (the resolved
/// configuration) and `manifest.json` into `cfg.output_dir`.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let mut out = Out { dir: &cfg.output_dir, files: Vec::new() };
    out.put("config.txt", cfg.to_text().as_bytes())?;
    let mut schemas = Vec::new();
    let summary = match cfg.mode {
        Mode::Dataset => {
            let ds = build_dataset(&cfg.bitmaps);
            out.put("dataset.csv", &export::dataset_csv(&ds)?)?;
            schemas.push(export::DATASET_SCHEMA);
            format!("dataset: {} training, {} test patterns", ds.training.len(), ds.testing.len())
        }
        Mode::Simulate => {
            let sim = simulate(cfg)?;
            trace_outputs(&mut out, cfg, &sim.dataset, &sim.trace, 1.0)?;
            let s = summarize(cfg.seed, Backend::Simulate, &sim.dataset, &sim.trace, cfg);
            out.put("summary.json", &export::to_json(&s)?)?;
            schemas.extend([export::LEARNING_CURVE_SCHEMA, export::BARS_SCHEMA]);
            format!(
                "simulate seed={} converged={} steps={} raises={} test={}/{}",
                s.seed, s.converged, s.steps, s.threshold_raises, s.test_correct, s.test_total
            )
        }
        Mode::Emulate => {
            let opts = EmulateOptions { keep_states: cfg.verbosity >= Verbosity::High, keep_frames: cfg.frames };
            let emu = emulate(cfg, opts)?;
            trace_outputs(&mut out, cfg, &emu.dataset, &emu.trace, emu.scale)?;
            let s = summarize(cfg.seed, Backend::Emulate, &emu.dataset, &emu.trace, cfg);
            out.put("summary.json", &export::to_json(&s)?)?;
            out.put("ledger.json", &export::to_json(&emu.ledger)?)?;
            let mut states = vec![(0, emu.initial_state.clone())];
            states.extend(emu.states.iter().cloned());
            if opts.keep_states {
                out.put("weight_states.jsonl", &export::weight_states_jsonl(&states)?)?;
            } else {
                out.put("weight_states.jsonl", &export::weight_states_jsonl(&states[..1])?)?;
            }
            for (label, frame) in &emu.frames {
                let (pgm, json) = export::frame_files(frame, label)?;
                out.put(&format!("frames/{label}.pgm"), &pgm)?;
                out.put(&format!("frames/{label}.json"), &json)?;
            }
            schemas.extend([export::LEARNING_CURVE_SCHEMA, export::BARS_SCHEMA]);
            format!(
                "emulate seed={} converged={} steps={} raises={} test={}/{} {}",
                s.seed,
                s.converged,
                s.steps,
                s.threshold_raises,
                s.test_correct,
                s.test_total,
                emu.ledger.summary_line()
            )
        }
        Mode::Energy => {
            let report = energy_report(cfg)?;
            out.put("ledger.json", &export::to_json(&report)?)?;
            let refs: Vec<String> = report
                .reference_spots
                .iter()
                .map(|r| format!("{} um: {:.1} pJ", r.diameter_um, r.energy_per_pulse_j * 1e12))
                .collect();
            format!("energy {} | {}", refs.join(", "), report.ledger.summary_line())
        }
        Mode::Sweep => {
            let rows = sweep(cfg)?;
            out.put("sweep.csv", &export::sweep_csv(&rows)?)?;
            schemas.push(export::SWEEP_SCHEMA);
            let converged: Vec<&SeedSummary> = rows.iter().filter(|r| r.converged).collect();
            let mut steps: Vec<usize> = converged.iter().map(|r| r.steps).collect();
            steps.sort_unstable();
            let median = if steps.is_empty() { 0 } else { steps[steps.len() / 2] };
            format!("sweep seeds={} converged={} median_steps={}", rows.len(), converged.len(), median)
        }
    };
    let files: Vec<String> = out
        .files
        .iter()
        .map(|p| p.strip_prefix(&cfg.output_dir).unwrap_or(p).to_string_lossy().replace('\\', "/"))
        .collect();
    let manifest =
        Manifest { mode: cfg.mode.as_str(), seed: cfg.seed, crate_version: env!("CARGO_PKG_VERSION"), schemas, files };
    out.put("manifest.json", &export::to_json(&manifest)?)?;
    Ok(RunReport { files: out.files, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simulate_run_writes_expected_files() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig { seed: 7, output_dir: dir.path().to_path_buf(), ..Default::default() };
        let report = run(&cfg).unwrap();
        let names: Vec<String> =
            report.files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
        for want in
            ["config.txt", "trace.json", "learning_curve.csv", "bars_initial.csv", "bars_final.csv", "manifest.json"]
        {
            assert!(names.iter().any(|n| n == want), "missing {want}");
        }
        let echoed = std::fs::read_to_string(dir.path().join("config.txt")).unwrap();
        let reparsed = RunConfig::parse(&echoed, None).unwrap();
        assert_eq!(RunConfig { output_dir: cfg.output_dir.clone(), ..reparsed }, cfg);
    }

    #[test]
    fn sweep_matches_individual_runs() {
        let cfg = RunConfig {
            seed: 11,
            sweep: crate::config::SweepConfig { seeds: 4, backend: Backend::Simulate },
            ..Default::default()
        };
        let rows = sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r, &run_seed(&cfg, 11 + i as u64, Backend::Simulate).unwrap());
        }
    }

    #[test]
    fn emulate_keeps_a_state_per_step() {
        let cfg = RunConfig { seed: 2, ..Default::default() };
        let out = emulate(&cfg, EmulateOptions { keep_states: true, keep_frames: true }).unwrap();
        assert_eq!(out.states.len(), out.trace.steps.len());
        assert_eq!(out.frames.first().unwrap().0, "background");
        assert_eq!(out.frames.last().unwrap().0, "final");
        let plain = emulate(&cfg, EmulateOptions::default()).unwrap();
        assert_eq!(plain.trace, out.trace);
    }
}
