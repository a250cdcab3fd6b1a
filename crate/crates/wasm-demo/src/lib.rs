//! Browser bindings. Each export takes plain numbers and returns JSON text
//! or a typed array, so the page needs no glue beyond wasm-bindgen's.

use magneto_perceptron::config::RunConfig;
use magneto_perceptron::rig::{Rig, RigConfig};
use magneto_perceptron::run::{self, EmulateOptions, FIELD_CENTER_UM};
use magneto_perceptron::synapse::{response_curve, CurveShape, InhomogeneityParams};
use magneto_perceptron::trainer::evaluate;
use serde::Serialize;
use wasm_bindgen::prelude::*;

pub fn curve_shape(name: &str, steepness: f64) -> Result<CurveShape, String> {
    match name {
        "smoothstep" => Ok(CurveShape::Smoothstep),
        "linear" => Ok(CurveShape::Linear),
        "logistic" if steepness > 0.0 => Ok(CurveShape::Logistic { steepness }),
        "logistic" => Err("logistic steepness must be > 0".into()),
        other => Err(format!("unknown curve '{other}'")),
    }
}

/// Written fraction at 0, 1, ..., `max_pulses` pulses.
pub fn curve_points(
    dead_zone: u32,
    saturation: u32,
    shape: &str,
    steepness: f64,
    max_pulses: u32,
) -> Result<Vec<f64>, String> {
    let params =
        InhomogeneityParams { dead_zone_pulses: dead_zone, saturation_pulses: saturation, background_gain: 1.0 };
    params.validate().map_err(|e| e.to_string())?;
    let shape = curve_shape(shape, steepness)?;
    Ok((0..=max_pulses).map(|p| response_curve(i64::from(p), &params, shape)).collect())
}

#[derive(Serialize)]
struct Step {
    output: f64,
    threshold: f64,
    action: &'static str,
    class: String,
}

#[derive(Serialize)]
struct Bar {
    id: String,
    class: String,
    test: bool,
    initial: f64,
    last: f64,
}

#[derive(Serialize)]
struct TrainView {
    converged: bool,
    steps: Vec<Step>,
    raises: usize,
    initial_threshold: f64,
    final_threshold: f64,
    bars: Vec<Bar>,
    test_correct: usize,
}

/// Trains one seed and returns normalized learning-curve points and the
/// before/after bar data as JSON.
pub fn train_view(seed: u64, eta_max: f64, emulate: bool) -> Result<String, String> {
    let mut cfg = RunConfig { seed, ..RunConfig::default() };
    cfg.trainer.eta_max = eta_max;
    cfg.validate().map_err(|e| e.to_string())?;
    let (dataset, trace, scale) = if emulate {
        let o = run::emulate(&cfg, EmulateOptions::default()).map_err(|e| e.to_string())?;
        (o.dataset, o.trace, o.scale)
    } else {
        let o = run::simulate(&cfg).map_err(|e| e.to_string())?;
        (o.dataset, o.trace, 1.0)
    };
    let target = cfg.trainer.target_class;
    let order = dataset.bar_order();
    let s = &trace.summary;
    let before = evaluate(&trace.initial_weights, trace.initial_threshold, &order, target);
    let after = evaluate(&s.final_weights, s.final_threshold, &order, target);
    let view = TrainView {
        converged: s.converged,
        steps: trace
            .steps
            .iter()
            .map(|st| Step {
                output: st.output / scale,
                threshold: st.threshold / scale,
                action: st.action.as_str(),
                class: st.class_label.to_string(),
            })
            .collect(),
        raises: s.threshold_raises,
        initial_threshold: trace.initial_threshold / scale,
        final_threshold: s.final_threshold / scale,
        bars: order
            .iter()
            .zip(before.iter().zip(&after))
            .map(|(p, (b, a))| Bar {
                id: p.id(),
                class: p.class_label.to_string(),
                test: p.role == magneto_perceptron::pattern::Role::Test,
                initial: b.output / scale,
                last: a.output / scale,
            })
            .collect(),
        test_correct: after
            .iter()
            .zip(&order)
            .filter(|(e, p)| e.correct && p.role == magneto_perceptron::pattern::Role::Test)
            .count(),
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

/// Full camera field after initialization and `erase_packets` erase packets
/// on site 0, as row-major counts (width and height first).
pub fn field_counts(seed: u64, erase_packets: u32) -> Result<Vec<u32>, String> {
    let mut rig = Rig::new(RigConfig::default(), seed).map_err(|e| e.to_string())?;
    rig.initialize_network().map_err(|e| e.to_string())?;
    for _ in 0..erase_packets {
        rig.pump(0, magneto_perceptron::synapse::Helicity::Erase).map_err(|e| e.to_string())?;
    }
    let frame = rig.render_field(FIELD_CENTER_UM);
    let mut out = vec![frame.width() as u32, frame.height() as u32];
    out.extend_from_slice(&frame.counts);
    Ok(out)
}

#[wasm_bindgen(js_name = responseCurve)]
pub fn response_curve_js(
    dead_zone: u32,
    saturation: u32,
    shape: &str,
    steepness: f64,
    max_pulses: u32,
) -> Result<Vec<f64>, JsError> {
    curve_points(dead_zone, saturation, shape, steepness, max_pulses).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = trainRun)]
pub fn train_run_js(seed: u32, eta_max: f64, emulate: bool) -> Result<String, JsError> {
    train_view(u64::from(seed), eta_max, emulate).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = fieldFrame)]
pub fn field_frame_js(seed: u32, erase_packets: u32) -> Result<Vec<u32>, JsError> {
    field_counts(u64::from(seed), erase_packets).map_err(|e| JsError::new(&e))
}
