use magneto_perceptron::rig::{JitterMode, Rig, RigConfig, RigEvent, N_SITES, THRESHOLD_SITE};
use magneto_perceptron::synapse::{CurveShape, InhomogeneityParams};
use magneto_perceptron::trainer::WeightBackend;

fn linear_rig() -> RigConfig {
    let mut r = RigConfig::default();
    r.synapse.curve = CurveShape::Linear;
    r.nominal_site = InhomogeneityParams { dead_zone_pulses: 0, saturation_pulses: 4096, background_gain: 1.0 };
    r.site_spread = 0.0;
    r.shutter.jitter_mode = JitterMode::Off;
    r.init_packets = 8;
    r
}

#[test]
fn threshold_is_five_times_a_weight_in_the_linear_region() {
    let mut rig = Rig::new(linear_rig(), 1).unwrap();
    let state = rig.initialize_network().unwrap();
    let w = rig.weights();
    // 8 packets × 50 pulses on each weight, 5× that on the threshold
    let expected_ratio = (5.0 * 8.0 * 50.0) / (8.0 * 50.0);
    for wi in w {
        // per-pixel count rounding at the default gain
        assert!((rig.threshold() / wi - expected_ratio).abs() < 1e-3, "{} / {wi}", rig.threshold());
    }
    assert!((state.weights[0] - 400.0 / 4096.0).abs() < 1e-4);
}

#[test]
fn nominal_saturating_init_equalizes_weight_and_threshold() {
    let mut rig = Rig::new(RigConfig { site_spread: 0.0, ..RigConfig::default() }, 1).unwrap();
    let state = rig.initialize_network().unwrap();
    assert!(state.weights.iter().all(|&w| w > 0.99));
    assert!((state.threshold / state.count_weights()[0] - 1.0).abs() < 1e-3);
}

#[test]
fn every_read_is_logged_as_one_snapshot() {
    let mut rig = Rig::new(RigConfig::default(), 4).unwrap();
    rig.initialize_network().unwrap();
    let snapshots = rig.log().iter().filter(|e| matches!(e, RigEvent::Snapshot { .. })).count();
    assert_eq!(snapshots, rig.read_events());
    assert_eq!(rig.read_events(), 2 * N_SITES);
    let pumped: u32 = rig
        .log()
        .iter()
        .filter_map(|e| match e {
            RigEvent::Pump { site, pulses, .. } if *site == THRESHOLD_SITE => Some(*pulses),
            _ => None,
        })
        .count() as u32;
    assert_eq!(pumped, 250);
}
