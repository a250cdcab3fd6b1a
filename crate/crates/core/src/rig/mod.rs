//! Emulated optical bench: nine weight sites and one threshold site written
//! by shutter-gated pump packets and read back through the camera.
//!
//! The rig is a single actor. Every write or read goes through `&mut self`,
//! and every sequencing step (stage move, probe mirror, pump packet,
//! snapshot) is appended to an event log.

mod energy;
mod shutter;

pub use energy::{
    account_run, calibrate_write_power, energy_per_pulse, EnergyKind, EnergyLedger, EnergyRecord, LedgerConfig,
    READ_ENERGY_PER_SYNAPSE_J,
};
pub use shutter::{shutter_event, JitterMode, ShutterModel};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{
    average_frames, expose_frame, integrate_roi, CameraConfig, Frame, FrameWindow, OpticalConstants, Roi, SiteView,
    SpotGeometry,
};
use crate::pattern::{Pattern, N_INPUTS};
use crate::rng::{self, SimRng, Stream};
use crate::synapse::{sample_sites, Circular, Helicity, InhomogeneityParams, SynapseModel, SynapseSite};
use crate::trainer::{Direction, SitePulses, UpdateRecord, WeightBackend};
use crate::weights::{raw_weight, WeightState};

/// Index of the threshold site; weight sites are 0..9.
pub const THRESHOLD_SITE: usize = N_INPUTS;
pub const N_SITES: usize = N_INPUTS + 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigConfig {
    pub nominal_site: InhomogeneityParams,
    pub site_spread: f64,
    pub synapse: SynapseModel,
    /// Circular polarization that drives m upward.
    pub write_with: Circular,
    pub optics: OpticalConstants,
    pub camera: CameraConfig,
    pub shutter: ShutterModel,
    /// Packets per weight site at initialization.
    pub init_packets: u32,
    /// The threshold site gets this many times `init_packets`.
    pub threshold_packet_factor: u32,
    /// Packets per active site per learning update.
    pub learning_packets: u32,
    pub frames_per_read: usize,
    /// Re-read the threshold site after every update instead of only at init.
    pub reread_threshold: bool,
    pub site_pitch_um: f64,
    pub spot_diameter_um: f64,
    pub roi_width_um: f64,
    pub roi_height_um: f64,
}

impl Default for RigConfig {
    fn default() -> Self {
        RigConfig {
            nominal_site: InhomogeneityParams::NOMINAL,
            site_spread: 0.1,
            synapse: SynapseModel::default(),
            write_with: Circular::Right,
            optics: OpticalConstants::default(),
            camera: CameraConfig::default(),
            shutter: ShutterModel::default(),
            init_packets: 50,
            threshold_packet_factor: 5,
            learning_packets: 2,
            frames_per_read: 10,
            reread_threshold: false,
            site_pitch_um: 48.0,
            spot_diameter_um: 24.0,
            roi_width_um: 16.5,
            roi_height_um: 15.5,
        }
    }
}

impl RigConfig {
    pub fn validate(&self) -> Result<()> {
        self.nominal_site.validate()?;
        self.optics.validate()?;
        self.camera.validate()?;
        self.shutter.validate()?;
        if self.frames_per_read == 0 {
            return Err(Error::config("rig.frames_per_read must be >= 1"));
        }
        if self.learning_packets == 0 {
            return Err(Error::config("rig.learning_packets must be >= 1"));
        }
        for (name, v) in [
            ("site_pitch_um", self.site_pitch_um),
            ("spot_diameter_um", self.spot_diameter_um),
            ("roi_width_um", self.roi_width_um),
            ("roi_height_um", self.roi_height_um),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(format!("rig.{name} must be positive, got {v}")));
            }
        }
        if self.spot_diameter_um >= self.site_pitch_um {
            return Err(Error::config("rig.spot_diameter_um must be smaller than rig.site_pitch_um"));
        }
        Ok(())
    }

    /// Sample-plane center of a site: weights on a 3×3 grid around the
    /// origin (row-major, matching input order), threshold to the right.
    pub fn site_center_um(&self, site: usize) -> (f64, f64) {
        if site == THRESHOLD_SITE {
            return (2.0 * self.site_pitch_um, 0.0);
        }
        let (r, c) = (site / 3, site % 3);
        ((c as f64 - 1.0) * self.site_pitch_um, (r as f64 - 1.0) * self.site_pitch_um)
    }

    pub fn spot(&self, site: usize) -> SpotGeometry {
        SpotGeometry::flat_top(self.site_center_um(site), self.spot_diameter_um)
    }
}

/// One snapshot batch: averaged frames over a site ROI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoiReading {
    pub site: usize,
    /// Integrated counts including the dark level.
    pub raw_sum: u64,
    /// Integrated counts with the dark level of every pixel removed.
    pub net_sum: f64,
    pub pixels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum RigEvent {
    MoveStage { site: usize },
    InsertProbeMirror,
    RetractProbeMirror,
    Pump { site: usize, helicity: Helicity, polarization: Circular, pulses: u32 },
    Snapshot { site: usize, frames: usize, raw_sum: u64, net_sum: f64 },
}

#[derive(Debug, Clone)]
pub struct Rig {
    config: RigConfig,
    sites: [SynapseSite; N_SITES],
    backgrounds: Option<[f64; N_SITES]>,
    written: [f64; N_SITES],
    threshold_factor: f64,
    shutter_rng: SimRng,
    noise_rng: SimRng,
    read_events: usize,
    log: Vec<RigEvent>,
}

impl Rig {
    pub fn new(config: RigConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let params = sample_sites(seed, N_SITES, config.site_spread, &config.nominal_site)?;
        let sites = std::array::from_fn(|i| SynapseSite::new(params[i], config.synapse));
        Ok(Rig {
            config,
            sites,
            backgrounds: None,
            written: [0.0; N_SITES],
            threshold_factor: 1.0,
            shutter_rng: rng::stream(seed, Stream::Shutter),
            noise_rng: rng::stream(seed, Stream::CameraNoise),
            read_events: 0,
            log: Vec::new(),
        })
    }

    pub fn config(&self) -> &RigConfig {
        &self.config
    }

    pub fn sites(&self) -> &[SynapseSite; N_SITES] {
        &self.sites
    }

    pub fn site_params(&self) -> Vec<InhomogeneityParams> {
        self.sites.iter().map(|s| s.params).collect()
    }

    pub fn read_events(&self) -> usize {
        self.read_events
    }

    pub fn log(&self) -> &[RigEvent] {
        &self.log
    }

    pub fn take_log(&mut self) -> Vec<RigEvent> {
        std::mem::take(&mut self.log)
    }

    fn check_site(site: usize) -> Result<()> {
        if site >= N_SITES {
            return Err(Error::usage(format!("site {site} does not exist (rig has {N_SITES} sites)")));
        }
        Ok(())
    }

    fn scene(&self) -> Vec<SiteView> {
        (0..N_SITES).map(|i| SiteView::new(&self.sites[i], self.config.spot(i))).collect()
    }

    /// Readout window for a site: the camera is cropped to the ROI.
    fn readout_window(&self, site: usize) -> FrameWindow {
        let pitch = self.config.camera.pixel_pitch_um;
        let w = (self.config.roi_width_um / pitch).round().max(1.0) as usize;
        let h = (self.config.roi_height_um / pitch).round().max(1.0) as usize;
        FrameWindow::centered(self.config.site_center_um(site), w, h, pitch)
    }

    /// Renders the full camera field centered on `center_um` with the
    /// current magnetization state. Noise is applied if configured.
    pub fn render_field(&mut self, center_um: (f64, f64)) -> Frame {
        let window = self.config.camera.full_window(center_um);
        let scene = self.scene();
        expose_frame(&scene, &self.config.optics, &self.config.camera, &window, Some(&mut self.noise_rng))
    }

    fn snapshot(&mut self, site: usize) -> Result<RoiReading> {
        Self::check_site(site)?;
        self.log.push(RigEvent::MoveStage { site });
        self.log.push(RigEvent::InsertProbeMirror);
        let window = self.readout_window(site);
        let roi = Roi::centered_um(
            &window,
            self.config.site_center_um(site),
            self.config.roi_width_um,
            self.config.roi_height_um,
        )?;
        let scene = self.scene();
        let frames: Vec<Frame> = (0..self.config.frames_per_read)
            .map(|_| expose_frame(&scene, &self.config.optics, &self.config.camera, &window, Some(&mut self.noise_rng)))
            .collect();
        let avg = average_frames(&frames)?;
        let raw_sum = integrate_roi(&avg, &roi)?;
        let pixels = roi.pixel_count();
        let net_sum = raw_sum as f64 - self.config.camera.dark_offset.round() * pixels as f64;
        self.read_events += 1;
        self.log.push(RigEvent::Snapshot { site, frames: frames.len(), raw_sum, net_sum });
        self.log.push(RigEvent::RetractProbeMirror);
        Ok(RoiReading { site, raw_sum, net_sum, pixels })
    }

    /// Captures and caches the background sum of every site. Only done on
    /// explicit request; reads never refresh backgrounds implicitly.
    pub fn capture_backgrounds(&mut self) -> Result<[f64; N_SITES]> {
        let mut out = [0.0; N_SITES];
        for (site, slot) in out.iter_mut().enumerate() {
            *slot = self.snapshot(site)?.net_sum;
        }
        self.backgrounds = Some(out);
        Ok(out)
    }

    pub fn backgrounds(&self) -> Option<&[f64; N_SITES]> {
        self.backgrounds.as_ref()
    }

    /// Reads the listed sites and stores their written sums.
    pub fn read_sites(&mut self, sites: &[usize]) -> Result<Vec<RoiReading>> {
        if self.backgrounds.is_none() {
            return Err(Error::usage("backgrounds must be captured before reading sites"));
        }
        let mut out = Vec::with_capacity(sites.len());
        for &site in sites {
            let r = self.snapshot(site)?;
            self.written[site] = r.net_sum;
            out.push(r);
        }
        Ok(out)
    }

    /// One shutter-gated packet on one site.
    pub fn pump(&mut self, site: usize, helicity: Helicity) -> Result<u32> {
        Self::check_site(site)?;
        let pulses = shutter_event(&mut self.shutter_rng, &self.config.shutter);
        self.sites[site] = self.sites[site].apply_packet(helicity, pulses);
        let polarization = match helicity {
            Helicity::Write => self.config.write_with,
            Helicity::Erase => opposite(self.config.write_with),
        };
        self.log.push(RigEvent::Pump { site, helicity, polarization, pulses });
        Ok(pulses)
    }

    fn write_packets(&mut self, site: usize, helicity: Helicity, packets: u32) -> Result<u32> {
        self.log.push(RigEvent::MoveStage { site });
        let mut total = 0;
        for _ in 0..packets {
            total += self.pump(site, helicity)?;
        }
        Ok(total)
    }

    /// Captures backgrounds on fresh sites, writes the initial pre-weights
    /// and threshold, and reads everything back.
    pub fn initialize_network(&mut self) -> Result<WeightState> {
        if self.sites.iter().any(|s| s.accumulated_pulses() != 0) || self.backgrounds.is_some() {
            return Err(Error::usage("network initialization needs fresh, unwritten sites"));
        }
        self.capture_backgrounds()?;
        for site in 0..N_INPUTS {
            self.write_packets(site, Helicity::Write, self.config.init_packets)?;
        }
        let threshold_packets = self.config.init_packets * self.config.threshold_packet_factor;
        self.write_packets(THRESHOLD_SITE, Helicity::Write, threshold_packets)?;
        let all: Vec<usize> = (0..N_SITES).collect();
        self.read_sites(&all)?;
        self.weight_state()
    }

    /// Delivers `learning_packets` packets to each listed site. Raising the
    /// output writes (darkens), lowering erases.
    pub fn apply_learning_update(&mut self, sites: &[usize], direction: Direction) -> Result<Vec<SitePulses>> {
        let helicity = match direction {
            Direction::RaiseOutput => Helicity::Write,
            Direction::LowerOutput => Helicity::Erase,
        };
        let mut out = Vec::with_capacity(sites.len());
        for &site in sites {
            if site >= N_INPUTS {
                return Err(Error::usage(format!("learning updates address weight sites only, got {site}")));
            }
            let pulses = self.write_packets(site, helicity, self.config.learning_packets)?;
            out.push(SitePulses { site, pulses });
        }
        Ok(out)
    }

    pub fn weight_state(&self) -> Result<WeightState> {
        let bg = self.backgrounds.ok_or_else(|| Error::usage("backgrounds not captured"))?;
        let mut state = WeightState::from_sums(
            std::array::from_fn(|i| bg[i]),
            std::array::from_fn(|i| self.written[i]),
            bg[THRESHOLD_SITE],
            self.written[THRESHOLD_SITE],
        )?;
        state.threshold *= self.threshold_factor;
        Ok(state)
    }

    /// Count-scale weighted input of each site for an active input bit.
    fn count_weights(&self) -> [f64; N_INPUTS] {
        let bg = self.backgrounds.unwrap_or([0.0; N_SITES]);
        std::array::from_fn(|i| {
            let (b, w) = (bg[i], self.written[i]);
            match raw_weight(b, w) {
                Ok(raw) if (0.0..=1.0).contains(&raw) => b - w,
                Ok(raw) => b * raw.clamp(0.0, 1.0),
                Err(_) => 0.0,
            }
        })
    }
}

fn opposite(c: Circular) -> Circular {
    match c {
        Circular::Right => Circular::Left,
        Circular::Left => Circular::Right,
    }
}

impl WeightBackend for Rig {
    fn weights(&self) -> [f64; N_INPUTS] {
        self.count_weights()
    }

    fn threshold(&self) -> f64 {
        match self.backgrounds {
            Some(bg) => (bg[THRESHOLD_SITE] - self.written[THRESHOLD_SITE]) * self.threshold_factor,
            None => 0.0,
        }
    }

    fn update(&mut self, pattern: &Pattern, direction: Direction) -> Result<UpdateRecord> {
        let active = pattern.active_inputs();
        let site_pulses = self.apply_learning_update(&active, direction)?;
        let mut to_read = active;
        if self.config.reread_threshold {
            to_read.push(THRESHOLD_SITE);
        }
        let reads = self.read_sites(&to_read)?.len();
        Ok(UpdateRecord { eta: None, site_pulses, reads })
    }

    fn raise_threshold(&mut self, factor: f64) -> Result<()> {
        self.threshold_factor *= factor;
        Ok(())
    }

    /// Erases every weight site back to background and rewrites the initial
    /// pre-weights.
    fn reset_weights(&mut self) -> Result<()> {
        for site in 0..N_INPUTS {
            let erase = self.sites[site].accumulated_pulses().max(0) as u32;
            self.sites[site] = self.sites[site].apply_packet(Helicity::Erase, erase);
            self.write_packets(site, Helicity::Write, self.config.init_packets)?;
        }
        let all: Vec<usize> = (0..N_INPUTS).collect();
        self.read_sites(&all)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synapse::{response_curve, CurveShape};

    fn quiet() -> RigConfig {
        RigConfig {
            site_spread: 0.0,
            shutter: ShutterModel { jitter_mode: JitterMode::Off, ..ShutterModel::default() },
            ..RigConfig::default()
        }
    }

    #[test]
    fn init_saturates_weight_sites() {
        let mut rig = Rig::new(quiet(), 1).unwrap();
        let state = rig.initialize_network().unwrap();
        assert!(rig.sites().iter().all(|s| s.written_fraction() == 1.0));
        assert!(state.weights.iter().all(|&w| (w - 1.0).abs() < 1e-12));
        assert_eq!(rig.read_events(), 2 * N_SITES);
        assert!(rig.initialize_network().is_err());
    }

    #[test]
    fn zero_init_packets_leave_weights_at_zero() {
        let mut rig = Rig::new(RigConfig { init_packets: 0, ..quiet() }, 1).unwrap();
        let state = rig.initialize_network().unwrap();
        assert!(state.weights.iter().all(|&w| w == 0.0));
        assert_eq!(state.threshold, 0.0);
    }

    #[test]
    fn update_moves_only_listed_sites_along_curve() {
        let cfg = RigConfig { init_packets: 8, threshold_packet_factor: 1, ..quiet() };
        let mut rig = Rig::new(cfg, 1).unwrap();
        rig.initialize_network().unwrap();
        let before = *rig.sites();
        assert!(rig.apply_learning_update(&[], Direction::RaiseOutput).unwrap().is_empty());
        assert_eq!(*rig.sites(), before);
        let pulses = rig.apply_learning_update(&[4], Direction::RaiseOutput).unwrap();
        assert_eq!(pulses, vec![SitePulses { site: 4, pulses: 100 }]);
        let n = before[4].accumulated_pulses();
        let p = &before[4].params;
        let expected =
            response_curve(n + 100, p, CurveShape::Smoothstep) - response_curve(n, p, CurveShape::Smoothstep);
        let got = rig.sites()[4].written_fraction() - before[4].written_fraction();
        assert!((got - expected).abs() < 1e-15);
        for i in (0..N_SITES).filter(|&i| i != 4) {
            assert_eq!(rig.sites()[i], before[i]);
        }
        rig.apply_learning_update(&[4], Direction::LowerOutput).unwrap();
        assert_eq!(rig.sites()[4].written_fraction(), before[4].written_fraction());
        assert!(rig.apply_learning_update(&[THRESHOLD_SITE], Direction::RaiseOutput).is_err());
    }

    #[test]
    fn reads_are_pure_and_dark_anchored() {
        let mut rig = Rig::new(quiet(), 1).unwrap();
        let bg = rig.capture_backgrounds().unwrap();
        let r = rig.read_sites(&[0, 3]).unwrap();
        assert_eq!(r[0].net_sum, bg[0]);
        assert_eq!(r[1].net_sum, bg[3]);
        let again = rig.read_sites(&[0, 3]).unwrap();
        assert_eq!(r, again);
        // saturate site 2 fully: ROI reads the dark level only
        for _ in 0..20 {
            rig.pump(2, Helicity::Write).unwrap();
        }
        let dark = rig.read_sites(&[2]).unwrap()[0];
        assert_eq!(dark.raw_sum, 600 * dark.pixels as u64);
        assert_eq!(dark.net_sum, 0.0);
    }

    #[test]
    fn reading_needs_backgrounds() {
        let mut rig = Rig::new(quiet(), 1).unwrap();
        assert!(matches!(rig.read_sites(&[0]), Err(Error::Usage(_))));
    }

    #[test]
    fn roi_outside_window_is_usage_error() {
        let mut rig = Rig::new(quiet(), 1).unwrap();
        rig.capture_backgrounds().unwrap();
        assert!(matches!(rig.read_sites(&[N_SITES]), Err(Error::Usage(_))));
    }

    #[test]
    fn event_log_stays_on_known_sites() {
        let mut rig = Rig::new(RigConfig::default(), 5).unwrap();
        rig.initialize_network().unwrap();
        rig.apply_learning_update(&[0, 2, 8], Direction::LowerOutput).unwrap();
        rig.read_sites(&[0, 2, 8]).unwrap();
        for e in rig.log() {
            match e {
                RigEvent::MoveStage { site } | RigEvent::Pump { site, .. } | RigEvent::Snapshot { site, .. } => {
                    assert!(*site < N_SITES)
                }
                _ => {}
            }
        }
    }
}
