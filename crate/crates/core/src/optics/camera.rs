//! Linear camera model, frame averaging, ROI integration and PGM export.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::beam::{SpotGeometry, SpotProfile};
use super::{analyzer_intensity, OpticalConstants};
use crate::error::{Error, Result};
use crate::synapse::SynapseSite;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraConfig {
    /// Full sensor window in pixels.
    pub width_px: usize,
    pub height_px: usize,
    /// Sample-plane size of one pixel at the configured magnification.
    pub pixel_pitch_um: f64,
    pub exposure_time_s: f64,
    /// Pixel area A entering the exposure density.
    pub pixel_area_um2: f64,
    /// Digital counts per unit of I·t/A.
    pub gain: f64,
    pub dark_offset: f64,
    /// Gaussian read noise in counts; 0 disables noise.
    pub read_noise_sigma: f64,
    pub bit_depth: u32,
}

impl Default for CameraConfig {
    /// 166 × 128 µm field on a 1 µm grid; unwritten background sits near
    /// 40 000 counts over a 600-count dark level.
    fn default() -> Self {
        CameraConfig {
            width_px: 166,
            height_px: 128,
            pixel_pitch_um: 1.0,
            exposure_time_s: 0.01,
            pixel_area_um2: 1.0,
            gain: 3.2e9,
            dark_offset: 600.0,
            read_noise_sigma: 0.0,
            bit_depth: 16,
        }
    }
}

impl CameraConfig {
    pub fn full_scale(&self) -> f64 {
        ((1u64 << self.bit_depth) - 1) as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=32).contains(&self.bit_depth) {
            return Err(Error::config(format!("camera bit depth must be 1..=32, got {}", self.bit_depth)));
        }
        if self.width_px == 0 || self.height_px == 0 {
            return Err(Error::config("camera window must be at least 1×1 pixels"));
        }
        for (name, v) in [("pixel_pitch_um", self.pixel_pitch_um), ("pixel_area_um2", self.pixel_area_um2)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(format!("camera.{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("exposure_time_s", self.exposure_time_s),
            ("gain", self.gain),
            ("dark_offset", self.dark_offset),
            ("read_noise_sigma", self.read_noise_sigma),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::config(format!("camera.{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Noise-free digital value for analyzer intensity `intensity`.
    pub fn digital_value(&self, intensity: f64) -> f64 {
        self.gain * intensity * self.exposure_time_s / self.pixel_area_um2 + self.dark_offset
    }

    /// Window covering the whole sensor centered on `center_um`.
    pub fn full_window(&self, center_um: (f64, f64)) -> FrameWindow {
        FrameWindow::centered(center_um, self.width_px, self.height_px, self.pixel_pitch_um)
    }
}

/// Placement of a pixel grid in sample-plane coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameWindow {
    /// Corner of pixel (0, 0), µm.
    pub origin_um: (f64, f64),
    pub width_px: usize,
    pub height_px: usize,
    pub pixel_pitch_um: f64,
}

impl FrameWindow {
    pub fn centered(center_um: (f64, f64), width_px: usize, height_px: usize, pixel_pitch_um: f64) -> Self {
        FrameWindow {
            origin_um: (
                center_um.0 - width_px as f64 * pixel_pitch_um / 2.0,
                center_um.1 - height_px as f64 * pixel_pitch_um / 2.0,
            ),
            width_px,
            height_px,
            pixel_pitch_um,
        }
    }

    pub fn pixel_center_um(&self, x: usize, y: usize) -> (f64, f64) {
        (
            self.origin_um.0 + (x as f64 + 0.5) * self.pixel_pitch_um,
            self.origin_um.1 + (y as f64 + 0.5) * self.pixel_pitch_um,
        )
    }
}

/// What the camera needs to know about one site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteView {
    pub written_fraction: f64,
    pub background_gain: f64,
    pub spot: SpotGeometry,
}

impl SiteView {
    pub fn new(site: &SynapseSite, spot: SpotGeometry) -> Self {
        SiteView { written_fraction: site.written_fraction(), background_gain: site.params.background_gain, spot }
    }

    /// Local written fraction at distance `r` from the spot center, if the
    /// point is inside the written region.
    fn local_m(&self, r: f64) -> Option<f64> {
        let radius = self.spot.radius_um();
        if r > radius || radius <= 0.0 {
            return None;
        }
        Some(match self.spot.profile {
            SpotProfile::FlatTop => self.written_fraction,
            // 1/e² radius equal to the written radius
            SpotProfile::Gaussian => self.written_fraction * (-2.0 * (r / radius).powi(2)).exp(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMeta {
    pub width: usize,
    pub height: usize,
    pub origin_um: (f64, f64),
    pub pixel_pitch_um: f64,
    pub exposure_time_s: f64,
    pub pixel_area_um2: f64,
    pub bit_depth: u32,
    pub dark_offset: f64,
    /// Pixels that hit 0 or full scale before rounding.
    pub clipped_pixels: usize,
    pub frames_averaged: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub meta: FrameMeta,
    /// Row-major counts.
    pub counts: Vec<u32>,
}

impl Frame {
    pub fn width(&self) -> usize {
        self.meta.width
    }

    pub fn height(&self) -> usize {
        self.meta.height
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.counts[y * self.meta.width + x]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }

    /// Uniform frame, mostly for tests and synthetic inputs.
    pub fn filled(width: usize, height: usize, value: u32, bit_depth: u32) -> Frame {
        Frame {
            meta: FrameMeta {
                width,
                height,
                origin_um: (0.0, 0.0),
                pixel_pitch_um: 1.0,
                exposure_time_s: 0.0,
                pixel_area_um2: 1.0,
                bit_depth,
                dark_offset: 0.0,
                clipped_pixels: 0,
                frames_averaged: 1,
            },
            counts: vec![value; width * height],
        }
    }

    /// Binary 16-bit PGM (P5, big-endian samples).
    pub fn write_pgm<W: Write>(&self, mut w: W) -> Result<()> {
        if self.meta.bit_depth > 16 {
            return Err(Error::usage(format!("PGM export supports up to 16 bits, frame has {}", self.meta.bit_depth)));
        }
        let maxval = (1u32 << self.meta.bit_depth) - 1;
        write!(w, "P5\n{} {}\n{}\n", self.meta.width, self.meta.height, maxval.max(256))?;
        let mut buf = Vec::with_capacity(self.counts.len() * 2);
        for &c in &self.counts {
            buf.extend_from_slice(&(c as u16).to_be_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }
}

/// Renders one exposure. Pixels inside a spot see that site's written
/// fraction, everything else sees the background state (m = 0). Probe
/// illumination at a pixel is scaled by the background gain of the nearest
/// site. Noise is drawn only when `read_noise_sigma > 0` and an rng is given.
pub fn expose_frame<R: Rng + ?Sized>(
    sites: &[SiteView],
    constants: &OpticalConstants,
    camera: &CameraConfig,
    window: &FrameWindow,
    mut rng: Option<&mut R>,
) -> Frame {
    let full = camera.full_scale();
    let noise = (camera.read_noise_sigma > 0.0)
        .then(|| Normal::new(0.0, camera.read_noise_sigma).expect("sigma validated finite"));
    let mut counts = Vec::with_capacity(window.width_px * window.height_px);
    let mut clipped = 0usize;
    for y in 0..window.height_px {
        for x in 0..window.width_px {
            let p = window.pixel_center_um(x, y);
            let mut nearest = f64::INFINITY;
            let mut gain = 1.0;
            let mut m = 0.0;
            let mut inside = false;
            for s in sites {
                let r = ((p.0 - s.spot.center_um.0).powi(2) + (p.1 - s.spot.center_um.1).powi(2)).sqrt();
                if r < nearest {
                    nearest = r;
                    gain = s.background_gain;
                }
                if !inside {
                    if let Some(local) = s.local_m(r) {
                        m = local;
                        inside = true;
                    }
                }
            }
            let illum = OpticalConstants { probe_intensity: constants.probe_intensity * gain, ..*constants };
            let mut z = camera.digital_value(analyzer_intensity(m, &illum));
            if let (Some(dist), Some(r)) = (noise.as_ref(), rng.as_deref_mut()) {
                z += dist.sample(r);
            }
            if z < 0.0 || z > full {
                clipped += 1;
            }
            counts.push(z.clamp(0.0, full).round() as u32);
        }
    }
    Frame {
        meta: FrameMeta {
            width: window.width_px,
            height: window.height_px,
            origin_um: window.origin_um,
            pixel_pitch_um: window.pixel_pitch_um,
            exposure_time_s: camera.exposure_time_s,
            pixel_area_um2: camera.pixel_area_um2,
            bit_depth: camera.bit_depth,
            dark_offset: camera.dark_offset,
            clipped_pixels: clipped,
            frames_averaged: 1,
        },
        counts,
    }
}

/// Per-pixel mean of equally shaped frames, accumulated in f64 and rounded once.
pub fn average_frames(frames: &[Frame]) -> Result<Frame> {
    let first = frames.first().ok_or_else(|| Error::usage("cannot average an empty frame list"))?;
    for f in &frames[1..] {
        if f.meta.width != first.meta.width || f.meta.height != first.meta.height {
            return Err(Error::usage(format!(
                "frame size mismatch: {}×{} vs {}×{}",
                f.meta.width, f.meta.height, first.meta.width, first.meta.height
            )));
        }
        if f.meta.exposure_time_s != first.meta.exposure_time_s {
            return Err(Error::usage("frames with different exposure times cannot be averaged"));
        }
    }
    let mut acc = vec![0.0f64; first.counts.len()];
    for f in frames {
        for (a, &c) in acc.iter_mut().zip(&f.counts) {
            *a += f64::from(c);
        }
    }
    let n = frames.len() as f64;
    let counts = acc.into_iter().map(|a| (a / n).round() as u32).collect();
    let mut meta = first.meta.clone();
    meta.clipped_pixels = frames.iter().map(|f| f.meta.clipped_pixels).max().unwrap_or(0);
    meta.frames_averaged = frames.iter().map(|f| f.meta.frames_averaged).sum();
    Ok(Frame { meta, counts })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roi {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Roi {
    pub fn whole(frame: &Frame) -> Roi {
        Roi { x: 0, y: 0, width: frame.width(), height: frame.height() }
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// ROI of `width_um × height_um` centered on `center_um`, snapped to the
    /// pixel grid of `window`.
    pub fn centered_um(window: &FrameWindow, center_um: (f64, f64), width_um: f64, height_um: f64) -> Result<Roi> {
        let w = (width_um / window.pixel_pitch_um).round().max(1.0) as usize;
        let h = (height_um / window.pixel_pitch_um).round().max(1.0) as usize;
        let cx = (center_um.0 - window.origin_um.0) / window.pixel_pitch_um;
        let cy = (center_um.1 - window.origin_um.1) / window.pixel_pitch_um;
        let x0 = (cx - w as f64 / 2.0).round();
        let y0 = (cy - h as f64 / 2.0).round();
        if x0 < 0.0 || y0 < 0.0 || x0 as usize + w > window.width_px || y0 as usize + h > window.height_px {
            return Err(Error::usage(format!(
                "ROI {width_um}×{height_um} µm at {center_um:?} falls outside the frame window"
            )));
        }
        Ok(Roi { x: x0 as usize, y: y0 as usize, width: w, height: h })
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.width > 0 && self.height > 0 && self.x + self.width <= width && self.y + self.height <= height
    }
}

/// Exact sum of the counts inside `roi`.
pub fn integrate_roi(frame: &Frame, roi: &Roi) -> Result<u64> {
    if !roi.fits(frame.width(), frame.height()) {
        return Err(Error::usage(format!("ROI {roi:?} is outside the {}×{} frame", frame.width(), frame.height())));
    }
    let w = frame.width();
    Ok((roi.y..roi.y + roi.height)
        .map(|y| frame.counts[y * w + roi.x..y * w + roi.x + roi.width].iter().map(|&c| u64::from(c)).sum::<u64>())
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SimRng;
    use rand::SeedableRng;

    fn quiet() -> CameraConfig {
        CameraConfig::default()
    }

    fn spot_at(center: (f64, f64), m: f64) -> SiteView {
        SiteView { written_fraction: m, background_gain: 1.0, spot: SpotGeometry::flat_top(center, 24.0) }
    }

    fn no_rng() -> Option<&'static mut SimRng> {
        None
    }

    #[test]
    fn written_spot_reads_dark_level() {
        let cam = quiet();
        let k = OpticalConstants::default();
        let win = FrameWindow::centered((0.0, 0.0), 20, 20, 1.0);
        let f = expose_frame(&[spot_at((0.0, 0.0), 1.0)], &k, &cam, &win, no_rng());
        let roi = Roi { x: 4, y: 4, width: 12, height: 12 };
        assert_eq!(integrate_roi(&f, &roi).unwrap(), 600 * 144);
    }

    #[test]
    fn zero_exposure_reads_dark_offset() {
        let cam = CameraConfig { exposure_time_s: 0.0, ..quiet() };
        let f = expose_frame(&[], &OpticalConstants::default(), &cam, &cam.full_window((0.0, 0.0)), no_rng());
        assert!(f.counts.iter().all(|&c| c == 600));
    }

    #[test]
    fn written_and_unwritten_differ_by_signal() {
        let cam = quiet();
        let k = OpticalConstants::default();
        let win = FrameWindow::centered((0.0, 0.0), 10, 10, 1.0);
        let dark = expose_frame(&[spot_at((0.0, 0.0), 1.0)], &k, &cam, &win, no_rng());
        let bright = expose_frame(&[spot_at((0.0, 0.0), 0.0)], &k, &cam, &win, no_rng());
        let expected = cam.gain * k.probe_intensity * k.c() * cam.exposure_time_s / cam.pixel_area_um2;
        let diff = f64::from(bright.get(5, 5)) - f64::from(dark.get(5, 5));
        assert!((diff - expected).abs() <= 1.0, "diff {diff} expected {expected}");
    }

    #[test]
    fn exposure_is_linear_until_clipping() {
        let k = OpticalConstants::default();
        let win = FrameWindow::centered((0.0, 0.0), 8, 8, 1.0);
        let sites = [spot_at((0.0, 0.0), 0.3)];
        let at = |t: f64| {
            let cam = CameraConfig { exposure_time_s: t, dark_offset: 0.0, bit_depth: 32, ..quiet() };
            expose_frame(&sites, &k, &cam, &win, no_rng()).get(4, 4) as f64
        };
        assert!((at(0.02) - 2.0 * at(0.01)).abs() <= 1.0);
        let cam = CameraConfig { exposure_time_s: 1.0, ..quiet() };
        let f = expose_frame(&sites, &k, &cam, &win, no_rng());
        assert!(f.meta.clipped_pixels > 0);
        assert!(f.counts.iter().all(|&c| c == 65535));
    }

    #[test]
    fn raising_m_never_brightens() {
        let k = OpticalConstants::default();
        let cam = quiet();
        let win = cam.full_window((0.0, 0.0));
        let a = expose_frame(&[spot_at((0.0, 0.0), 0.2), spot_at((48.0, 0.0), 0.6)], &k, &cam, &win, no_rng());
        let b = expose_frame(&[spot_at((0.0, 0.0), 0.7), spot_at((48.0, 0.0), 0.6)], &k, &cam, &win, no_rng());
        assert!(a.counts.iter().zip(&b.counts).all(|(x, y)| y <= x));
    }

    #[test]
    fn averaging() {
        let one = Frame::filled(3, 2, 100, 16);
        assert_eq!(average_frames(std::slice::from_ref(&one)).unwrap().counts, one.counts);
        let two = Frame::filled(3, 2, 200, 16);
        assert!(average_frames(&[one.clone(), two]).unwrap().counts.iter().all(|&c| c == 150));
        assert!(matches!(average_frames(&[one, Frame::filled(2, 2, 1, 16)]), Err(Error::Usage(_))));
        assert!(average_frames(&[]).is_err());
    }

    #[test]
    fn averaging_reduces_noise() {
        let cam = CameraConfig { read_noise_sigma: 50.0, gain: 0.0, dark_offset: 1000.0, ..quiet() };
        let win = FrameWindow::centered((0.0, 0.0), 128, 100, 1.0);
        let mut rng = SimRng::seed_from_u64(5);
        let frames: Vec<Frame> =
            (0..10).map(|_| expose_frame(&[], &OpticalConstants::default(), &cam, &win, Some(&mut rng))).collect();
        let avg = average_frames(&frames).unwrap();
        let n = avg.counts.len() as f64;
        let mean = avg.counts.iter().map(|&c| f64::from(c)).sum::<f64>() / n;
        let var = avg.counts.iter().map(|&c| (f64::from(c) - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let target = 50.0 / 10f64.sqrt();
        assert!((var.sqrt() - target).abs() / target < 0.2, "std {} target {target}", var.sqrt());
    }

    #[test]
    fn roi_sums() {
        let f = Frame::filled(10, 8, 7, 16);
        assert_eq!(integrate_roi(&f, &Roi { x: 2, y: 1, width: 4, height: 3 }).unwrap(), 7 * 12);
        assert_eq!(integrate_roi(&f, &Roi::whole(&f)).unwrap(), f.total());
        let mut ramp = Frame::filled(10, 8, 0, 16);
        for (i, c) in ramp.counts.iter_mut().enumerate() {
            *c = i as u32;
        }
        assert_eq!(integrate_roi(&ramp, &Roi { x: 3, y: 2, width: 1, height: 1 }).unwrap(), 23);
        // rows 0..8 of width 10: sum 0..80 = 79·80/2
        assert_eq!(integrate_roi(&ramp, &Roi::whole(&ramp)).unwrap(), 79 * 80 / 2);
        // a 4×2 block starting at (1, 5): Σ over y∈{5,6}, x∈1..5 of 10y + x
        let expect: u64 = (5..7).flat_map(|y| (1..5).map(move |x| 10 * y + x)).sum();
        assert_eq!(integrate_roi(&ramp, &Roi { x: 1, y: 5, width: 4, height: 2 }).unwrap(), expect);
        assert!(integrate_roi(&f, &Roi { x: 8, y: 0, width: 3, height: 1 }).is_err());
    }

    #[test]
    fn roi_from_microns() {
        let win = FrameWindow::centered((0.0, 0.0), 40, 40, 1.0);
        let roi = Roi::centered_um(&win, (0.0, 0.0), 16.5, 15.5).unwrap();
        assert_eq!((roi.width, roi.height), (17, 16));
        assert!(roi.fits(40, 40));
        assert!(Roi::centered_um(&win, (19.0, 0.0), 16.5, 15.5).is_err());
    }

    #[test]
    fn pgm_header() {
        let f = Frame::filled(2, 1, 258, 16);
        let mut buf = Vec::new();
        f.write_pgm(&mut buf).unwrap();
        assert_eq!(&buf[..15], b"P5\n2 1\n65535\n\x01\x02");
        assert_eq!(buf.len(), 13 + 4);
        assert!(Frame::filled(1, 1, 0, 24).write_pgm(Vec::new()).is_err());
    }
}
