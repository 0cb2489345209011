//! Adam minimization of the loss over circuit parameters.

use std::collections::VecDeque;
use std::time::Instant;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::LossSpec;
use crate::rng;
use crate::sim::{evaluate, loss_and_gradient_parameter_shift, Circuit, ParamVector, ShotBudget};

/// When to halt training, judged on the running best loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StopRule {
    /// Stop once the best loss improved by less than `threshold` over the last `window` epochs.
    Window { window: usize, threshold: f64 },
    /// Stop after `steps` consecutive epochs without a new best loss.
    Patience { steps: usize },
}

impl StopRule {
    pub const DEFAULT_WINDOW: usize = 50;
    pub const DEFAULT_THRESHOLD: f64 = 0.01;
    pub const RELAXED_STEPS: usize = 150;

    pub fn relaxed() -> Self {
        StopRule::Patience {
            steps: Self::RELAXED_STEPS,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            StopRule::Window { window, threshold } => {
                if window == 0 || !(threshold >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "stop window must be ≥ 1 and threshold ≥ 0, got {window} and {threshold}"
                    )));
                }
            }
            StopRule::Patience { steps } => {
                if steps == 0 {
                    return Err(Error::InvalidArgument("patience must be ≥ 1".into()));
                }
            }
        }
        Ok(())
    }

    pub fn tracker(self) -> StopTracker {
        StopTracker {
            rule: self,
            history: VecDeque::new(),
            best: f64::INFINITY,
            stale: 0,
        }
    }
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule::Window {
            window: Self::DEFAULT_WINDOW,
            threshold: Self::DEFAULT_THRESHOLD,
        }
    }
}

/// Streaming evaluation of a [`StopRule`].
#[derive(Debug, Clone)]
pub struct StopTracker {
    rule: StopRule,
    history: VecDeque<f64>,
    best: f64,
    stale: usize,
}

impl StopTracker {
    /// Feed one epoch's loss; returns `true` when training should stop.
    pub fn observe(&mut self, loss: f64) -> bool {
        if loss < self.best {
            self.best = loss;
            self.stale = 0;
        } else {
            self.stale += 1;
        }
        match self.rule {
            StopRule::Window { window, threshold } => {
                self.history.push_back(self.best);
                if self.history.len() > window + 1 {
                    self.history.pop_front();
                }
                self.history.len() == window + 1 && self.history[0] - self.best < threshold
            }
            StopRule::Patience { steps } => self.stale >= steps,
        }
    }

    pub fn best(&self) -> f64 {
        self.best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub stop: StopRule,
    pub max_epochs: usize,
    pub seed: u64,
    /// Shots per measurement family; 0 uses exact expectations and adjoint gradients.
    pub shots: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            stop: StopRule::default(),
            max_epochs: 10_000,
            seed: 0,
            shots: 0,
        }
    }
}

impl TrainConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let moment = |b: f64| (0.0..1.0).contains(&b);
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning rate must be > 0, got {}", self.learning_rate)));
        }
        if !moment(self.beta1) || !moment(self.beta2) {
            return Err(Error::InvalidArgument(format!(
                "Adam moments must lie in [0, 1), got {} and {}",
                self.beta1, self.beta2
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidArgument("max_epochs must be ≥ 1".into()));
        }
        self.stop.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    /// Loss evaluated at the start of every epoch.
    pub losses: Vec<f64>,
    pub epochs: usize,
    pub best_loss: f64,
    pub best_epoch: usize,
    pub final_params: Vec<f64>,
    pub wall_time_secs: f64,
}

impl TrainTrace {
    /// Running minimum of the per-epoch losses.
    pub fn best_so_far(&self) -> Vec<f64> {
        self.losses
            .iter()
            .scan(f64::INFINITY, |best, &l| {
                *best = best.min(l);
                Some(*best)
            })
            .collect()
    }
}

/// I.i.d. uniform parameters on `[0, 2π)`.
pub fn init_params(p: usize, seed: u64) -> Result<ParamVector> {
    if p == 0 {
        return Err(Error::InvalidArgument("parameter count must be ≥ 1".into()));
    }
    let mut r = rng::seeded(seed);
    ParamVector::new((0..p).map(|_| r.random_range(0.0..std::f64::consts::TAU)).collect())
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(p: usize) -> Self {
        Adam {
            m: vec![0.0; p],
            v: vec![0.0; p],
            t: 0,
        }
    }

    fn step(&mut self, theta: &mut [f64], grad: &[f64], cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for i in 0..theta.len() {
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * grad[i];
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            theta[i] -= cfg.learning_rate * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + cfg.epsilon);
        }
    }
}

/// Train from [`init_params`] and return the best parameters seen.
pub fn train(c: &Circuit, spec: &LossSpec<'_>, cfg: &TrainConfig) -> Result<(ParamVector, TrainTrace)> {
    cfg.validate()?;
    let start = Instant::now();
    let mut theta = init_params(c.num_params(), cfg.seed)?;
    let mut best = theta.clone();
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = 0;
    let mut losses = Vec::new();
    let mut adam = Adam::new(c.num_params());
    let mut stop = cfg.stop.tracker();

    for epoch in 0..cfg.max_epochs {
        let (loss, grad) = if cfg.shots == 0 {
            let ev = evaluate(c, &theta, spec)?;
            (ev.value, ev.gradient)
        } else {
            let budget = ShotBudget::Shots {
                shots: cfg.shots,
                seed: rng::derive_seed(cfg.seed, &[epoch as u64]),
            };
            loss_and_gradient_parameter_shift(c, &theta, spec, budget)?
        };
        if !loss.is_finite() {
            return Err(Error::NonFinite { quantity: "loss", epoch });
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite { quantity: "gradient", epoch });
        }
        losses.push(loss);
        if loss < best_loss {
            best_loss = loss;
            best_epoch = epoch;
            best = theta.clone();
        }
        if stop.observe(loss) {
            break;
        }
        adam.step(theta.as_mut_slice(), &grad, cfg);
    }

    let trace = TrainTrace {
        epochs: losses.len(),
        losses,
        best_loss,
        best_epoch,
        final_params: best.as_slice().to_vec(),
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    Ok((best, trace))
}
