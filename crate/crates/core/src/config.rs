//! Run configuration: flat `section.key = value` text.
//!
//! Blank lines and `#` comments are ignored. Unknown keys and malformed or
//! out-of-range values are rejected with the offending line number. The
//! resolved configuration (every key, defaults included) is echoed into each
//! output directory so a run can be reproduced from that file alone.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{BeamProfile, WriteBeam};
use crate::pattern::{Bitmap, Bitmaps, ClassLabel};
use crate::rig::{JitterMode, RigConfig, READ_ENERGY_PER_SYNAPSE_J};
use crate::synapse::{Circular, CurveShape};
use crate::trainer::{EtaMode, TrainerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Simulate,
    Emulate,
    Dataset,
    Energy,
    Sweep,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Emulate => "emulate",
            Mode::Dataset => "dataset",
            Mode::Energy => "energy",
            Mode::Sweep => "sweep",
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simulate" => Ok(Mode::Simulate),
            "emulate" => Ok(Mode::Emulate),
            "dataset" => Ok(Mode::Dataset),
            "energy" => Ok(Mode::Energy),
            "sweep" => Ok(Mode::Sweep),
            other => Err(Error::config(format!("unknown mode '{other}'"))),
        }
    }
}

/// Which weight store the trainer drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Simulate,
    Emulate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verbosity {
    Low,
    High,
}

/// Write-beam and read-cost parameters for energy accounting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyConfig {
    /// Calibrated average write power. Fitted once with
    /// `rig::calibrate_write_power` against the reference spots below.
    pub write_power_uw: f64,
    pub waist_diameter_um: f64,
    /// The two reference spot diameters used for the calibration check.
    pub reference_spots_um: (f64, f64),
    pub read_energy_nj: f64,
    pub threshold_fluence_j_cm2: f64,
    pub flat_top_order: u32,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        EnergyConfig {
            write_power_uw: 0.8277,
            waist_diameter_um: 100.0,
            reference_spots_um: (20.0, 34.0),
            read_energy_nj: READ_ENERGY_PER_SYNAPSE_J * 1e9,
            threshold_fluence_j_cm2: 0.01,
            flat_top_order: 8,
        }
    }
}

impl EnergyConfig {
    pub fn beam(&self, repetition_rate_hz: f64) -> WriteBeam {
        WriteBeam {
            average_power_w: self.write_power_uw * 1e-6,
            repetition_rate_hz,
            waist_diameter_um: self.waist_diameter_um,
            profile: BeamProfile::FlatTop { order: self.flat_top_order },
            threshold_fluence_j_cm2: self.threshold_fluence_j_cm2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub seeds: usize,
    pub backend: Backend,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { seeds: 50, backend: Backend::Simulate }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    pub trainer: TrainerConfig,
    pub rig: RigConfig,
    pub energy: EnergyConfig,
    pub bitmaps: Bitmaps,
    pub sweep: SweepConfig,
    pub output_dir: PathBuf,
    pub verbosity: Verbosity,
    /// Dump PGM frames in emulate mode.
    pub frames: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Simulate,
            seed: 0,
            trainer: TrainerConfig::default(),
            rig: RigConfig::default(),
            energy: EnergyConfig::default(),
            bitmaps: Bitmaps::default(),
            sweep: SweepConfig::default(),
            output_dir: PathBuf::from("out"),
            verbosity: Verbosity::Low,
            frames: false,
        }
    }
}

fn num<T: FromStr>(value: &str, line: usize, key: &str) -> Result<T> {
    value.parse::<T>().map_err(|_| Error::config_at(line, format!("{key}: cannot parse '{value}'")))
}

fn pair(value: &str, line: usize, key: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(Error::config_at(line, format!("{key}: expected two comma-separated numbers, got '{value}'")));
    }
    Ok((num(parts[0], line, key)?, num(parts[1], line, key)?))
}

fn flag(value: &str, line: usize, key: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::config_at(line, format!("{key}: expected true or false, got '{value}'"))),
    }
}

fn choice<T: Copy>(value: &str, line: usize, key: &str, options: &[(&str, T)]) -> Result<T> {
    options.iter().find(|(name, _)| *name == value).map(|(_, v)| *v).ok_or_else(|| {
        let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
        Error::config_at(line, format!("{key}: '{value}' is not one of {}", names.join(", ")))
    })
}

fn inline_bitmap(value: &str, line: usize, key: &str) -> Result<Bitmap> {
    let rows: Vec<Vec<u8>> = value
        .split('/')
        .map(|r| {
            r.trim()
                .chars()
                .map(|c| match c {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    _ => Err(Error::config_at(line, format!("{key}: '{c}' is not 0 or 1"))),
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Bitmap::from_rows(&rows).map_err(|e| match e {
        Error::Config { message, .. } => Error::config_at(line, format!("{key}: {message}")),
        other => other,
    })
}

fn bitmap_inline_text(b: &Bitmap) -> String {
    b.rows()
        .iter()
        .map(|r| r.iter().map(|x| if *x == 1 { '1' } else { '0' }).collect::<String>())
        .collect::<Vec<_>>()
        .join("/")
}

fn name<T: PartialEq>(options: &[(&str, T)], v: T) -> String {
    options.iter().find(|(_, x)| *x == v).map(|(n, _)| n.to_string()).unwrap_or_default()
}

const CURVES: &[(&str, u8)] = &[("smoothstep", 0), ("logistic", 1), ("linear", 2)];
const ETA_MODES: &[(&str, EtaMode)] = &[("uniform", EtaMode::Uniform), ("fixed", EtaMode::Fixed)];
const CIRCULAR: &[(&str, Circular)] = &[("right", Circular::Right), ("left", Circular::Left)];
const JITTER: &[(&str, JitterMode)] =
    &[("relative", JitterMode::Relative), ("time", JitterMode::TimeDerived), ("off", JitterMode::Off)];
const BACKENDS: &[(&str, Backend)] = &[("simulate", Backend::Simulate), ("emulate", Backend::Emulate)];
const VERBOSITY: &[(&str, Verbosity)] = &[("low", Verbosity::Low), ("high", Verbosity::High)];

impl RunConfig {
    /// Parses config text on top of the defaults. `base_dir` resolves
    /// relative `dataset.bitmap_file` paths.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut logistic_steepness = 10.0;
        let mut curve_kind: Option<(u8, usize)> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::config_at(line, format!("expected 'key = value', got '{content}'")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "synapse.curve" => curve_kind = Some((choice(value, line, key, CURVES)?, line)),
                "synapse.logistic_steepness" => logistic_steepness = num(value, line, key)?,
                "dataset.bitmap_file" => {
                    let path = match base_dir {
                        Some(dir) => dir.join(value),
                        None => PathBuf::from(value),
                    };
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| Error::config_at(line, format!("{key}: cannot read {}: {e}", path.display())))?;
                    cfg.bitmaps = Bitmaps::parse(&text)
                        .map_err(|e| Error::config_at(line, format!("{key}: {}: {e}", path.display())))?;
                }
                _ => cfg.set(key, value, line)?,
            }
        }
        if let Some((kind, line)) = curve_kind {
            cfg.rig.synapse.curve = match kind {
                0 => CurveShape::Smoothstep,
                1 => {
                    if !(logistic_steepness > 0.0) {
                        return Err(Error::config_at(line, "synapse.logistic_steepness must be > 0"));
                    }
                    CurveShape::Logistic { steepness: logistic_steepness }
                }
                _ => CurveShape::Linear,
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Io(std::io::Error::new(e.kind(), format!("cannot read config {}: {e}", path.display())))
        })?;
        Self::parse(&text, path.parent())
    }

    fn set(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        let t = &mut self.trainer;
        let r = &mut self.rig;
        let e = &mut self.energy;
        match key {
            "mode" => {
                self.mode = value.parse().map_err(|_| Error::config_at(line, format!("unknown mode '{value}'")))?
            }
            "seed" => self.seed = num(value, line, key)?,
            "output.dir" => self.output_dir = PathBuf::from(value),
            "output.verbosity" => self.verbosity = choice(value, line, key, VERBOSITY)?,
            "output.frames" => self.frames = flag(value, line, key)?,

            "trainer.initial_weight" => t.initial_weight = num(value, line, key)?,
            "trainer.initial_threshold" => t.initial_threshold = num(value, line, key)?,
            "trainer.eta_max" => t.eta_max = num(value, line, key)?,
            "trainer.eta_mode" => t.eta_mode = choice(value, line, key, ETA_MODES)?,
            "trainer.max_epochs" => t.max_epochs = num(value, line, key)?,
            "trainer.target_class" => {
                t.target_class = value
                    .parse::<ClassLabel>()
                    .map_err(|_| Error::config_at(line, format!("{key}: '{value}' is not one of z, v, n")))?
            }
            "trainer.threshold_raise" => t.threshold_raise = num(value, line, key)?,
            "trainer.reset_on_raise" => t.reset_on_raise = flag(value, line, key)?,

            "synapse.dead_zone_pulses" => r.nominal_site.dead_zone_pulses = num(value, line, key)?,
            "synapse.saturation_pulses" => r.nominal_site.saturation_pulses = num(value, line, key)?,
            "synapse.background_gain" => r.nominal_site.background_gain = num(value, line, key)?,
            "synapse.site_spread" => r.site_spread = num(value, line, key)?,
            "synapse.ceiling_margin" => {
                r.synapse.ceiling_margin = if value == "auto" { None } else { Some(num(value, line, key)?) }
            }
            "synapse.write_with" => r.write_with = choice(value, line, key, CIRCULAR)?,

            "optics.gamma" => r.optics.gamma = num(value, line, key)?,
            "optics.delta" => r.optics.delta = num(value, line, key)?,
            "optics.probe_intensity" => r.optics.probe_intensity = num(value, line, key)?,
            "optics.wavelength_nm" => r.optics.probe_wavelength_nm = num(value, line, key)?,

            "camera.width_px" => r.camera.width_px = num(value, line, key)?,
            "camera.height_px" => r.camera.height_px = num(value, line, key)?,
            "camera.pixel_pitch_um" => r.camera.pixel_pitch_um = num(value, line, key)?,
            "camera.exposure_time_s" => r.camera.exposure_time_s = num(value, line, key)?,
            "camera.pixel_area_um2" => r.camera.pixel_area_um2 = num(value, line, key)?,
            "camera.gain" => r.camera.gain = num(value, line, key)?,
            "camera.dark_offset" => r.camera.dark_offset = num(value, line, key)?,
            "camera.read_noise_sigma" => r.camera.read_noise_sigma = num(value, line, key)?,
            "camera.bit_depth" => r.camera.bit_depth = num(value, line, key)?,

            "shutter.mode" => r.shutter.jitter_mode = choice(value, line, key, JITTER)?,
            "shutter.opening_ms" => r.shutter.opening_time_ms = pair(value, line, key)?,
            "shutter.repetition_rate_hz" => r.shutter.repetition_rate_hz = num(value, line, key)?,
            "shutter.packet_pulses" => r.shutter.nominal_packet_pulses = num(value, line, key)?,

            "rig.init_packets" => r.init_packets = num(value, line, key)?,
            "rig.threshold_packet_factor" => r.threshold_packet_factor = num(value, line, key)?,
            "rig.learning_packets" => r.learning_packets = num(value, line, key)?,
            "rig.frames_per_read" => r.frames_per_read = num(value, line, key)?,
            "rig.reread_threshold" => r.reread_threshold = flag(value, line, key)?,
            "rig.site_pitch_um" => r.site_pitch_um = num(value, line, key)?,
            "rig.spot_diameter_um" => r.spot_diameter_um = num(value, line, key)?,
            "rig.roi_um" => (r.roi_width_um, r.roi_height_um) = pair(value, line, key)?,

            "energy.write_power_uw" => e.write_power_uw = num(value, line, key)?,
            "energy.waist_diameter_um" => e.waist_diameter_um = num(value, line, key)?,
            "energy.reference_spots_um" => e.reference_spots_um = pair(value, line, key)?,
            "energy.read_energy_nj" => e.read_energy_nj = num(value, line, key)?,
            "energy.threshold_fluence_j_cm2" => e.threshold_fluence_j_cm2 = num(value, line, key)?,
            "energy.flat_top_order" => e.flat_top_order = num(value, line, key)?,

            "dataset.z" => self.bitmaps.z = inline_bitmap(value, line, key)?,
            "dataset.v" => self.bitmaps.v = inline_bitmap(value, line, key)?,
            "dataset.n" => self.bitmaps.n = inline_bitmap(value, line, key)?,

            "sweep.seeds" => self.sweep.seeds = num(value, line, key)?,
            "sweep.backend" => self.sweep.backend = choice(value, line, key, BACKENDS)?,

            _ => return Err(Error::config_at(line, format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.trainer.validate()?;
        self.rig.validate()?;
        let e = &self.energy;
        for (name, v) in [
            ("energy.write_power_uw", e.write_power_uw),
            ("energy.read_energy_nj", e.read_energy_nj),
            ("energy.threshold_fluence_j_cm2", e.threshold_fluence_j_cm2),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::config(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(e.waist_diameter_um > 0.0) {
            return Err(Error::config("energy.waist_diameter_um must be > 0"));
        }
        if !(e.reference_spots_um.0 > 0.0 && e.reference_spots_um.1 > 0.0) {
            return Err(Error::config("energy.reference_spots_um must be positive"));
        }
        if e.flat_top_order == 0 {
            return Err(Error::config("energy.flat_top_order must be >= 1"));
        }
        if self.sweep.seeds == 0 {
            return Err(Error::config("sweep.seeds must be >= 1"));
        }
        Ok(())
    }

    /// Trainer settings with the run seed applied.
    pub fn trainer_config(&self) -> TrainerConfig {
        TrainerConfig { rng_seed: self.seed, ..self.trainer }
    }

    /// Every key with its resolved value, in a fixed order. The output
    /// directory is left out so identical runs echo identical text; parsing
    /// this yields the same configuration apart from `output_dir`.
    pub fn to_text(&self) -> String {
        let t = &self.trainer;
        let r = &self.rig;
        let e = &self.energy;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("mode", self.mode.as_str().into());
        kv("seed", self.seed.to_string());
        kv("output.verbosity", name(VERBOSITY, self.verbosity));
        kv("output.frames", self.frames.to_string());
        kv("trainer.initial_weight", format!("{:?}", t.initial_weight));
        kv("trainer.initial_threshold", format!("{:?}", t.initial_threshold));
        kv("trainer.eta_max", format!("{:?}", t.eta_max));
        kv("trainer.eta_mode", name(ETA_MODES, t.eta_mode));
        kv("trainer.max_epochs", t.max_epochs.to_string());
        kv("trainer.target_class", t.target_class.to_string());
        kv("trainer.threshold_raise", format!("{:?}", t.threshold_raise));
        kv("trainer.reset_on_raise", t.reset_on_raise.to_string());
        let (curve, steep) = match r.synapse.curve {
            CurveShape::Smoothstep => ("smoothstep", None),
            CurveShape::Logistic { steepness } => ("logistic", Some(steepness)),
            CurveShape::Linear => ("linear", None),
        };
        kv("synapse.curve", curve.into());
        if let Some(k) = steep {
            kv("synapse.logistic_steepness", format!("{k:?}"));
        }
        kv("synapse.dead_zone_pulses", r.nominal_site.dead_zone_pulses.to_string());
        kv("synapse.saturation_pulses", r.nominal_site.saturation_pulses.to_string());
        kv("synapse.background_gain", format!("{:?}", r.nominal_site.background_gain));
        kv("synapse.site_spread", format!("{:?}", r.site_spread));
        kv("synapse.ceiling_margin", r.synapse.ceiling_margin.map_or("auto".into(), |m| m.to_string()));
        kv("synapse.write_with", name(CIRCULAR, r.write_with));
        kv("optics.gamma", format!("{:?}", r.optics.gamma));
        kv("optics.delta", format!("{:?}", r.optics.delta));
        kv("optics.probe_intensity", format!("{:?}", r.optics.probe_intensity));
        kv("optics.wavelength_nm", format!("{:?}", r.optics.probe_wavelength_nm));
        kv("camera.width_px", r.camera.width_px.to_string());
        kv("camera.height_px", r.camera.height_px.to_string());
        kv("camera.pixel_pitch_um", format!("{:?}", r.camera.pixel_pitch_um));
        kv("camera.exposure_time_s", format!("{:?}", r.camera.exposure_time_s));
        kv("camera.pixel_area_um2", format!("{:?}", r.camera.pixel_area_um2));
        kv("camera.gain", format!("{:?}", r.camera.gain));
        kv("camera.dark_offset", format!("{:?}", r.camera.dark_offset));
        kv("camera.read_noise_sigma", format!("{:?}", r.camera.read_noise_sigma));
        kv("camera.bit_depth", r.camera.bit_depth.to_string());
        kv("shutter.mode", name(JITTER, r.shutter.jitter_mode));
        kv("shutter.opening_ms", format!("{:?}, {:?}", r.shutter.opening_time_ms.0, r.shutter.opening_time_ms.1));
        kv("shutter.repetition_rate_hz", format!("{:?}", r.shutter.repetition_rate_hz));
        kv("shutter.packet_pulses", r.shutter.nominal_packet_pulses.to_string());
        kv("rig.init_packets", r.init_packets.to_string());
        kv("rig.threshold_packet_factor", r.threshold_packet_factor.to_string());
        kv("rig.learning_packets", r.learning_packets.to_string());
        kv("rig.frames_per_read", r.frames_per_read.to_string());
        kv("rig.reread_threshold", r.reread_threshold.to_string());
        kv("rig.site_pitch_um", format!("{:?}", r.site_pitch_um));
        kv("rig.spot_diameter_um", format!("{:?}", r.spot_diameter_um));
        kv("rig.roi_um", format!("{:?}, {:?}", r.roi_width_um, r.roi_height_um));
        kv("energy.write_power_uw", format!("{:?}", e.write_power_uw));
        kv("energy.waist_diameter_um", format!("{:?}", e.waist_diameter_um));
        kv("energy.reference_spots_um", format!("{:?}, {:?}", e.reference_spots_um.0, e.reference_spots_um.1));
        kv("energy.read_energy_nj", format!("{:?}", e.read_energy_nj));
        kv("energy.threshold_fluence_j_cm2", format!("{:?}", e.threshold_fluence_j_cm2));
        kv("energy.flat_top_order", e.flat_top_order.to_string());
        kv("dataset.z", bitmap_inline_text(&self.bitmaps.z));
        kv("dataset.v", bitmap_inline_text(&self.bitmaps.v));
        kv("dataset.n", bitmap_inline_text(&self.bitmaps.n));
        kv("sweep.seeds", self.sweep.seeds.to_string());
        kv("sweep.backend", name(BACKENDS, self.sweep.backend));
        out
    }
}
