//! Single-output perceptron training with stochastic learning rates.
//!
//! Patterns are presented in dataset order. A misclassified pattern gets
//! exactly one update (every active input moves by the same signed step) and
//! training moves on. Epochs repeat until a pass with no update; if that
//! solution has a negative weight the threshold is raised and training
//! continues from the current weights.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::{ClassLabel, Dataset, Pattern, Role, N_INPUTS};
use crate::rng::{self, SimRng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EtaMode {
    /// η ~ U(0, eta_max].
    Uniform,
    /// η = eta_max every update.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig {
    pub initial_weight: f64,
    pub initial_threshold: f64,
    pub eta_max: f64,
    pub eta_mode: EtaMode,
    pub max_epochs: usize,
    pub target_class: ClassLabel,
    /// Relative threshold raise ρ in b ← b·(1 + ρ).
    pub threshold_raise: f64,
    /// Reset weights to `initial_weight` after a raise instead of keeping them.
    pub reset_on_raise: bool,
    pub rng_seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            initial_weight: 0.5,
            initial_threshold: 2.5,
            eta_max: 0.014,
            eta_mode: EtaMode::Uniform,
            max_epochs: 1000,
            target_class: ClassLabel::V,
            threshold_raise: 0.05,
            reset_on_raise: false,
            rng_seed: 0,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta_max > 0.0) || !self.eta_max.is_finite() {
            return Err(Error::config(format!("trainer.eta_max must be > 0, got {}", self.eta_max)));
        }
        if !(self.initial_threshold > 0.0) || !self.initial_threshold.is_finite() {
            return Err(Error::config(format!(
                "trainer.initial_threshold must be > 0, got {}",
                self.initial_threshold
            )));
        }
        if self.max_epochs == 0 {
            return Err(Error::config("trainer.max_epochs must be >= 1"));
        }
        if !(self.threshold_raise > 0.0) || !self.threshold_raise.is_finite() {
            return Err(Error::config(format!("trainer.threshold_raise must be > 0, got {}", self.threshold_raise)));
        }
        if !self.initial_weight.is_finite() {
            return Err(Error::config("trainer.initial_weight must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    RaiseOutput,
    LowerOutput,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::RaiseOutput => 1.0,
            Direction::LowerOutput => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    RaiseOutput,
    LowerOutput,
}

impl Decision {
    pub fn direction(self) -> Option<Direction> {
        match self {
            Decision::Accept => None,
            Decision::RaiseOutput => Some(Direction::RaiseOutput),
            Decision::LowerOutput => Some(Direction::LowerOutput),
        }
    }

    pub fn action(self) -> Action {
        match self {
            Decision::Accept => Action::Accept,
            Decision::RaiseOutput => Action::RaiseWeights,
            Decision::LowerOutput => Action::LowerWeights,
        }
    }
}

/// What a learning step did to the weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Accept,
    RaiseWeights,
    LowerWeights,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Accept => "accept",
            Action::RaiseWeights => "raise",
            Action::LowerWeights => "lower",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Above,
    Below,
}

impl Side {
    pub fn desired(class: ClassLabel, target: ClassLabel) -> Side {
        if class == target {
            Side::Above
        } else {
            Side::Below
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Above => "above",
            Side::Below => "below",
        }
    }
}

/// Weighted sum Σ w_i x_i.
pub fn pattern_output(weights: &[f64], inputs: &[u8]) -> Result<f64> {
    if weights.len() != inputs.len() {
        return Err(Error::usage(format!(
            "weight vector has {} entries but the pattern has {} inputs",
            weights.len(),
            inputs.len()
        )));
    }
    Ok(weights.iter().zip(inputs).map(|(w, &x)| w * f64::from(x)).sum())
}

/// Strict comparison against the threshold; O == b is never accepted.
pub fn classify(output: f64, threshold: f64, class: ClassLabel, target: ClassLabel) -> Decision {
    match Side::desired(class, target) {
        Side::Above if output > threshold => Decision::Accept,
        Side::Above => Decision::RaiseOutput,
        Side::Below if output < threshold => Decision::Accept,
        Side::Below => Decision::LowerOutput,
    }
}

pub fn update_weights(weights: &[f64; N_INPUTS], pattern: &Pattern, direction: Direction, eta: f64) -> [f64; N_INPUTS] {
    let s = direction.sign();
    std::array::from_fn(|i| weights[i] + s * eta * f64::from(pattern.inputs[i]))
}

pub fn sample_eta<R: Rng + ?Sized>(rng: &mut R, eta_max: f64) -> f64 {
    // 1 − U[0, 1) lies in (0, 1]
    eta_max * (1.0 - rng.random::<f64>())
}

/// Per-site pulse count delivered during one update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SitePulses {
    pub site: usize,
    pub pulses: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateRecord {
    /// Learning rate, for the abstract backend.
    pub eta: Option<f64>,
    /// Pulses delivered per site, for the emulated rig.
    pub site_pulses: Vec<SitePulses>,
    /// ROI read events triggered by the update.
    pub reads: usize,
}

/// Where the weights live: a plain vector or the emulated hardware.
pub trait WeightBackend {
    fn weights(&self) -> [f64; N_INPUTS];
    fn threshold(&self) -> f64;
    fn update(&mut self, pattern: &Pattern, direction: Direction) -> Result<UpdateRecord>;
    fn raise_threshold(&mut self, factor: f64) -> Result<()>;
    fn reset_weights(&mut self) -> Result<()>;
}

/// Abstract weight vector with sampled learning rates.
#[derive(Debug, Clone)]
pub struct VectorBackend {
    weights: [f64; N_INPUTS],
    threshold: f64,
    initial_weight: f64,
    eta_max: f64,
    eta_mode: EtaMode,
    rng: SimRng,
}

impl VectorBackend {
    pub fn new(config: &TrainerConfig) -> Self {
        VectorBackend {
            weights: [config.initial_weight; N_INPUTS],
            threshold: config.initial_threshold,
            initial_weight: config.initial_weight,
            eta_max: config.eta_max,
            eta_mode: config.eta_mode,
            rng: rng::stream(config.rng_seed, Stream::LearningRate),
        }
    }

    pub fn with_weights(mut self, weights: [f64; N_INPUTS]) -> Self {
        self.weights = weights;
        self
    }
}

impl WeightBackend for VectorBackend {
    fn weights(&self) -> [f64; N_INPUTS] {
        self.weights
    }

    fn threshold(&self) -> f64 {
        self.threshold
    }

    fn update(&mut self, pattern: &Pattern, direction: Direction) -> Result<UpdateRecord> {
        let eta = match self.eta_mode {
            EtaMode::Uniform => sample_eta(&mut self.rng, self.eta_max),
            EtaMode::Fixed => self.eta_max,
        };
        self.weights = update_weights(&self.weights, pattern, direction, eta);
        Ok(UpdateRecord { eta: Some(eta), site_pulses: Vec::new(), reads: pattern.ones() })
    }

    fn raise_threshold(&mut self, factor: f64) -> Result<()> {
        self.threshold *= factor;
        Ok(())
    }

    fn reset_weights(&mut self) -> Result<()> {
        self.weights = [self.initial_weight; N_INPUTS];
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub epoch: usize,
    pub pattern_id: String,
    pub class_label: ClassLabel,
    pub output: f64,
    pub threshold: f64,
    pub desired: Side,
    pub action: Action,
    pub eta: Option<f64>,
    pub site_pulses: Vec<SitePulses>,
    pub reads: usize,
    /// Weights after this step.
    pub weights: [f64; N_INPUTS],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRaise {
    /// Last step of the clean pass that triggered the raise.
    pub after_step: usize,
    pub from: f64,
    pub to: f64,
    pub min_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub total_steps: usize,
    pub epochs: usize,
    pub updates: usize,
    pub threshold_raises: usize,
    pub converged: bool,
    pub final_weights: [f64; N_INPUTS],
    pub final_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub initial_weights: [f64; N_INPUTS],
    pub initial_threshold: f64,
    pub steps: Vec<StepRecord>,
    pub raises: Vec<ThresholdRaise>,
    pub summary: TraceSummary,
}

pub fn train<B: WeightBackend>(dataset: &Dataset, config: &TrainerConfig, backend: &mut B) -> Result<TrainingTrace> {
    train_observed(dataset, config, backend, |_, _| Ok(()))
}

/// [`train`] with a callback after every learning step, used to snapshot
/// backend state (e.g. rig weight states) alongside the trace.
pub fn train_observed<B, F>(
    dataset: &Dataset,
    config: &TrainerConfig,
    backend: &mut B,
    mut on_step: F,
) -> Result<TrainingTrace>
where
    B: WeightBackend,
    F: FnMut(&StepRecord, &B) -> Result<()>,
{
    config.validate()?;
    if dataset.training.is_empty() {
        return Err(Error::usage("training set is empty"));
    }
    let initial_weights = backend.weights();
    let initial_threshold = backend.threshold();
    let mut steps = Vec::new();
    let mut raises = Vec::new();
    let mut updates = 0usize;
    let mut epochs = 0usize;
    let mut converged = false;

    while epochs < config.max_epochs {
        epochs += 1;
        let mut clean = true;
        for pattern in &dataset.training {
            let weights = backend.weights();
            let threshold = backend.threshold();
            let output = pattern_output(&weights, &pattern.inputs)?;
            let decision = classify(output, threshold, pattern.class_label, config.target_class);
            let record = match decision.direction() {
                None => UpdateRecord::default(),
                Some(dir) => {
                    clean = false;
                    updates += 1;
                    backend.update(pattern, dir)?
                }
            };
            let rec = StepRecord {
                step: steps.len() + 1,
                epoch: epochs,
                pattern_id: pattern.id(),
                class_label: pattern.class_label,
                output,
                threshold,
                desired: Side::desired(pattern.class_label, config.target_class),
                action: decision.action(),
                eta: record.eta,
                site_pulses: record.site_pulses,
                reads: record.reads,
                weights: backend.weights(),
            };
            on_step(&rec, backend)?;
            steps.push(rec);
        }
        if clean {
            let weights = backend.weights();
            let min_weight = weights.iter().copied().fold(f64::INFINITY, f64::min);
            if min_weight >= 0.0 {
                converged = true;
                break;
            }
            let from = backend.threshold();
            backend.raise_threshold(1.0 + config.threshold_raise)?;
            if config.reset_on_raise {
                backend.reset_weights()?;
            }
            raises.push(ThresholdRaise { after_step: steps.len(), from, to: backend.threshold(), min_weight });
        }
    }

    let summary = TraceSummary {
        total_steps: steps.len(),
        epochs,
        updates,
        threshold_raises: raises.len(),
        converged,
        final_weights: backend.weights(),
        final_threshold: backend.threshold(),
    };
    Ok(TrainingTrace { initial_weights, initial_threshold, steps, raises, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub pattern_id: String,
    pub class_label: ClassLabel,
    pub role: Role,
    pub output: f64,
    pub desired: Side,
    pub correct: bool,
}

/// Read-only pass over `patterns` with fixed weights and threshold.
pub fn evaluate(
    weights: &[f64; N_INPUTS],
    threshold: f64,
    patterns: &[Pattern],
    target: ClassLabel,
) -> Vec<Evaluation> {
    patterns
        .iter()
        .map(|p| {
            let output = pattern_output(weights, &p.inputs).expect("fixed-size vectors");
            Evaluation {
                pattern_id: p.id(),
                class_label: p.class_label,
                role: p.role,
                output,
                desired: Side::desired(p.class_label, target),
                correct: classify(output, threshold, p.class_label, target) == Decision::Accept,
            }
        })
        .collect()
}

pub fn evaluate_test(
    weights: &[f64; N_INPUTS],
    threshold: f64,
    dataset: &Dataset,
    target: ClassLabel,
) -> Vec<Evaluation> {
    evaluate(weights, threshold, &dataset.testing, target)
}
