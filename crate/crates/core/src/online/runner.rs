//! The online incremental loop.
//!
//! Per task: a zero-shot evaluation, then repeated blocks of one arrival
//! event, `interval` meta-update steps and one evaluation, until the
//! evaluation clears the threshold or the step cap is reached. Every
//! evaluation, including the one that triggers advancement, adds its loss to
//! the regret.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::buffer::TaskBuffer;
use super::ledger::{LedgerHeader, RegretLedger, TaskRecord, COMPARATOR_NOT_COMPUTED};
use crate::error::{Error, Result};
use crate::meta::{
    LearningRatePolicy, MetaLearner, MetaOptimizerConfig, MetaStepReport, ScaledLearningRate,
    ShotDistribution, TaskSample,
};
use crate::model::{accuracy, empirical_risk, Batch, Loss, Mlp, ParamVector};
use crate::seed::rng_for;
use crate::tasks::{DataArrivalSchedule, IncrementalDataset, TaskStream};

const INIT_STREAM: u64 = 1;
const META_STREAM: u64 = 2;
const EVAL_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Supervised training on all data so far, evaluated without adaptation.
    Toe,
    /// Fixed inner rate.
    Ftml,
    /// A learned rate per shot count.
    FtmlVl,
    /// The learned shot-scaled rate.
    FtmlVs,
    /// A learned rate per parameter.
    MetaSgd,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Toe,
        Method::Ftml,
        Method::FtmlVl,
        Method::FtmlVs,
        Method::MetaSgd,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Toe => "toe",
            Method::Ftml => "ftml",
            Method::FtmlVl => "ftml-vl",
            Method::FtmlVs => "ftml-vs",
            Method::MetaSgd => "meta-sgd",
        }
    }

    /// Initial inner-rate policy. TOE adapts at rate zero, which makes its
    /// evaluation the plain zero-shot loss.
    pub fn policy(
        self,
        alpha: f64,
        eta: f64,
        max_shots: usize,
        param_count: usize,
    ) -> LearningRatePolicy {
        match self {
            Method::Toe => LearningRatePolicy::Fixed { alpha: 0.0 },
            Method::Ftml => LearningRatePolicy::Fixed { alpha },
            Method::FtmlVl => LearningRatePolicy::PerShot {
                rates: vec![alpha; max_shots + 1],
            },
            Method::FtmlVs => LearningRatePolicy::Scaled(ScaledLearningRate::new(alpha, eta)),
            Method::MetaSgd => LearningRatePolicy::PerParameter {
                rates: vec![alpha; param_count],
            },
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown method `{s}` (expected toe, ftml, ftml-vl, ftml-vs or meta-sgd)"
                ))
            })
    }
}

/// Proficiency threshold. Ledgers always hold loss-like values; for an
/// accuracy threshold that is one minus accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    content = "value",
    rename_all = "kebab-case",
    deny_unknown_fields
)]
pub enum Threshold {
    /// Advance once the loss is at most this value.
    Loss(f64),
    /// Advance once accuracy is at least this value.
    Accuracy(f64),
}

/// How many of the task's points an evaluation adapts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EvalShotRule {
    /// `min(s, M)`.
    Capped,
    /// `min(s / divisor, M)`.
    Fraction { divisor: usize },
}

impl EvalShotRule {
    pub fn shots(self, available: usize, max_shots: usize) -> usize {
        match self {
            EvalShotRule::Capped => available.min(max_shots),
            EvalShotRule::Fraction { divisor } => (available / divisor.max(1)).min(max_shots),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OnlineConfig {
    pub threshold: Threshold,
    /// Meta-update steps after which a task ends regardless of the threshold.
    pub max_steps_per_task: usize,
    pub schedule: DataArrivalSchedule,
    pub meta: MetaOptimizerConfig,
    pub eval_shot_rule: EvalShotRule,
    /// Size of each task's fixed test split.
    pub test_size: usize,
    /// Initial inner rate (and `beta`).
    pub init_alpha: f64,
    /// Initial `eta` for the scaled rate.
    pub init_eta: f64,
    /// Points per supervised step for TOE.
    pub toe_batch: usize,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        Self {
            threshold: Threshold::Loss(0.4),
            max_steps_per_task: 100,
            schedule: DataArrivalSchedule {
                batch_size: 2,
                interval: 5,
            },
            meta: MetaOptimizerConfig::default(),
            eval_shot_rule: EvalShotRule::Capped,
            test_size: 100,
            init_alpha: 0.1,
            init_eta: 1.0,
            toe_batch: 32,
        }
    }
}

impl OnlineConfig {
    pub fn validate(&self) -> Result<()> {
        self.meta.validate()?;
        self.schedule
            .validate()
            .map_err(|e| Error::Config(format!("schedule: {e}")))?;
        let fail = |field: &str, why: &str| Err(Error::Config(format!("{field}: {why}")));
        if self.max_steps_per_task == 0 {
            return fail("max_steps_per_task", "must be at least 1");
        }
        if self.test_size == 0 {
            return fail("test_size", "must be at least 1");
        }
        if !(self.init_alpha.is_finite() && self.init_alpha > 0.0) {
            return fail("init_alpha", "must be positive");
        }
        if !(self.init_eta.is_finite() && self.init_eta > 0.0) {
            return fail("init_eta", "must be positive");
        }
        if self.toe_batch == 0 {
            return fail("toe_batch", "must be at least 1");
        }
        if let EvalShotRule::Fraction { divisor: 0 } = self.eval_shot_rule {
            return fail("eval_shot_rule.divisor", "must be at least 1");
        }
        match self.threshold {
            Threshold::Loss(c) if c.is_nan() => fail("threshold", "must not be NaN"),
            Threshold::Accuracy(c) if c.is_nan() => fail("threshold", "must not be NaN"),
            _ => Ok(()),
        }
    }
}

/// One draw of a meta-batch: the task index and, if it had data, its
/// support/validation split.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaDraw {
    pub task: usize,
    pub sample: Option<TaskSample>,
}

/// Draws `task_batch` tasks uniformly with replacement from the buffer, a
/// support size `K` for each and disjoint support/validation sets.
pub fn draw_meta_batch<R: Rng + ?Sized>(
    buffer: &TaskBuffer,
    config: &MetaOptimizerConfig,
    rng: &mut R,
) -> Vec<MetaDraw> {
    let t = buffer.n_tasks();
    if t == 0 {
        return Vec::new();
    }
    (0..config.task_batch)
        .map(|_| {
            let task = rng.random_range(0..t);
            let pool = buffer.pool(task).expect("index below n_tasks");
            let k_max = config.max_shots.min(pool.n());
            let k = match config.shot_distribution {
                ShotDistribution::Uniform => rng.random_range(0..=k_max),
                ShotDistribution::Constant { k } => k.min(k_max),
            };
            let sample = TaskSample::from_pool(pool, k, config.val_cap, rng);
            MetaDraw { task, sample }
        })
        .collect()
}

/// `meta_steps_per_arrival` meta-updates, each on a fresh meta-batch. Draws
/// from tasks without data contribute nothing; if none has data no update
/// happens and the report carries zero gradients.
pub fn vs_meta_update<R: Rng + ?Sized>(
    learner: &mut MetaLearner,
    buffer: &TaskBuffer,
    rng: &mut R,
) -> Result<Vec<MetaStepReport>> {
    let n = learner.config().meta_steps_per_arrival;
    let mut reports = Vec::with_capacity(n);
    for _ in 0..n {
        let samples: Vec<TaskSample> = draw_meta_batch(buffer, learner.config(), rng)
            .into_iter()
            .filter_map(|d| d.sample)
            .collect();
        reports.push(learner.meta_step(&samples)?);
    }
    Ok(reports)
}

/// What a TOE step trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeReport {
    pub risk: f64,
    /// Task of each row of the minibatch.
    pub tasks: Vec<usize>,
}

/// One supervised Adam step on a minibatch drawn without replacement from
/// the union of all buffered data. `None` when the buffer holds no points.
pub fn toe_update<R: Rng + ?Sized>(
    learner: &mut MetaLearner,
    buffer: &TaskBuffer,
    batch_size: usize,
    rng: &mut R,
) -> Result<Option<ToeReport>> {
    let total = buffer.total_points();
    if total == 0 {
        return Ok(None);
    }
    let picked = index::sample(rng, total, total.min(batch_size)).into_vec();
    let mut batch: Option<Batch> = None;
    let mut tasks = Vec::with_capacity(picked.len());
    for g in picked {
        let (task, row) = buffer.locate(g).expect("index below total");
        let one = buffer.pool(task).expect("located task").select(&[row]);
        match &mut batch {
            None => batch = Some(one),
            Some(b) => b.extend(&one)?,
        }
        tasks.push(task);
    }
    let risk = learner.supervised_step(&batch.expect("at least one point"))?;
    Ok(Some(ToeReport { risk, tasks }))
}

/// Result of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    /// Loss, or one minus accuracy.
    pub loss: f64,
    pub adapt_shots: usize,
    pub advanced: bool,
}

/// Adapts on `rule(s)` of the task's points (a random subset when fewer
/// than `s`), scores the test split and applies the threshold. Equality
/// with the threshold counts as passing.
pub fn evaluate_and_maybe_advance<R: Rng + ?Sized>(
    learner: &MetaLearner,
    dataset: &IncrementalDataset,
    config: &OnlineConfig,
    task_index: usize,
    rng: &mut R,
) -> Result<Evaluation> {
    let s = dataset.shot_count();
    let k = config.eval_shot_rule.shots(s, learner.config().max_shots);
    let train = if k == s {
        dataset.arrived().clone()
    } else {
        dataset
            .arrived()
            .select(&index::sample(rng, s, k).into_vec())
    };
    let locate = |e: Error| Error::NumericalFailure {
        what: "evaluation loss",
        task: task_index,
        shots: s,
        source: Box::new(e),
    };
    let adapted = learner.adapt(&train).map_err(locate)?;
    let test = dataset.test_split();
    let (loss, advanced) = match config.threshold {
        Threshold::Loss(c) => {
            let l =
                empirical_risk(learner.mlp(), &adapted, test, learner.loss()).map_err(locate)?;
            (l, l <= c)
        }
        Threshold::Accuracy(c) => {
            let acc = accuracy(learner.mlp(), &adapted, test)?;
            (1.0 - acc, acc >= c)
        }
    };
    if !loss.is_finite() {
        return Err(Error::NumericalFailure {
            what: "evaluation loss",
            task: task_index,
            shots: s,
            source: Box::new(Error::format("evaluation", format!("loss {loss}"))),
        });
    }
    Ok(Evaluation {
        loss,
        adapt_shots: k,
        advanced,
    })
}

/// Ledger and final learner of one run.
#[derive(Debug, Clone)]
pub struct OnlineOutcome {
    pub ledger: RegretLedger,
    pub learner: MetaLearner,
}

/// Fresh learner for `method` with parameters drawn from `seed`.
pub fn initial_learner(
    config: &OnlineConfig,
    mlp: &Mlp,
    loss: Loss,
    method: Method,
    seed: u64,
) -> Result<MetaLearner> {
    let theta = ParamVector::glorot(&mlp.sizes, &mut rng_for(&[seed, INIT_STREAM]));
    let policy = method.policy(
        config.init_alpha,
        config.init_eta,
        config.meta.max_shots,
        theta.len(),
    );
    MetaLearner::new(mlp.clone(), loss, theta, policy, config.meta.clone())
}

/// Runs the whole stream.
pub fn run_online(
    config: &OnlineConfig,
    mlp: &Mlp,
    loss: Loss,
    method: Method,
    stream: &TaskStream,
    seed: u64,
) -> Result<OnlineOutcome> {
    config.validate()?;
    if stream.is_empty() {
        return Err(Error::Config("task stream is empty".into()));
    }
    let mut learner = initial_learner(config, mlp, loss, method, seed)?;
    let mut meta_rng: ChaCha8Rng = rng_for(&[seed, META_STREAM]);
    let mut eval_rng: ChaCha8Rng = rng_for(&[seed, EVAL_STREAM]);
    let mut ledger = RegretLedger::new(LedgerHeader {
        method: method.as_str().to_string(),
        seed,
        config_hash: String::new(),
        stream: format!("{:016x}", stream.fingerprint()),
        n_tasks: stream.len(),
        comparator: COMPARATOR_NOT_COMPUTED.to_string(),
        comparator_value: None,
    });
    let mut buffer = TaskBuffer::new();
    let schedule = config.schedule;
    for (t, task) in stream.tasks().iter().enumerate() {
        buffer.begin(IncrementalDataset::new(*task, config.test_size))?;
        let mut steps = 0;
        let mut evaluate = |learner: &MetaLearner, buffer: &TaskBuffer, steps: usize| {
            let dataset = buffer.current().expect("task in progress");
            let e = evaluate_and_maybe_advance(learner, dataset, config, t, &mut eval_rng)?;
            ledger.record_eval(t, steps, dataset.shot_count(), e.adapt_shots, e.loss);
            Ok::<_, Error>(e.advanced)
        };
        let mut advanced = evaluate(&learner, &buffer, steps)?;
        while !advanced && steps < config.max_steps_per_task {
            buffer
                .current_mut()
                .expect("task in progress")
                .arrival_step(&schedule);
            let block = schedule.interval.min(config.max_steps_per_task - steps);
            let shots = buffer.current().expect("task in progress").shot_count();
            let locate = |e: Error| {
                if e.is_numerical() && !matches!(e, Error::NumericalFailure { .. }) {
                    Error::NumericalFailure {
                        what: "meta-update",
                        task: t,
                        shots,
                        source: Box::new(e),
                    }
                } else {
                    e
                }
            };
            for _ in 0..block {
                match method {
                    Method::Toe => {
                        toe_update(&mut learner, &buffer, config.toe_batch, &mut meta_rng)
                            .map_err(locate)?;
                    }
                    _ => {
                        vs_meta_update(&mut learner, &buffer, &mut meta_rng).map_err(locate)?;
                    }
                }
                steps += 1;
            }
            advanced = evaluate(&learner, &buffer, steps)?;
        }
        let shots = buffer.current().expect("task in progress").shot_count();
        buffer.freeze()?;
        ledger.finish_task(TaskRecord {
            task: t,
            shots,
            steps,
            advanced,
        })?;
    }
    Ok(OnlineOutcome { ledger, learner })
}

/// Hindsight comparator: meta-trains a fresh learner offline for
/// `meta_steps` updates on the final datasets of every task, then replays
/// each recorded evaluation (same task, same shot count, first points of
/// the task) and sums the losses. Method and seed come from the ledger
/// header; the learner starts from that method's initial policy, learned
/// jointly during the offline training.
pub fn hindsight_comparator(
    config: &OnlineConfig,
    mlp: &Mlp,
    loss: Loss,
    stream: &TaskStream,
    ledger: &RegretLedger,
    meta_steps: usize,
) -> Result<f64> {
    let method: Method = ledger.header.method.parse()?;
    let seed = ledger.header.seed;
    let mut learner = initial_learner(config, mlp, loss, method, seed)?;
    let mut buffer = TaskBuffer::new();
    for record in ledger.tasks() {
        let task = stream.tasks().get(record.task).ok_or_else(|| {
            Error::format("ledger", format!("task {} not in stream", record.task))
        })?;
        let mut d = IncrementalDataset::new(*task, config.test_size);
        d.receive(record.shots);
        buffer.begin(d)?;
        buffer.freeze()?;
    }
    let mut rng = rng_for(&[seed, META_STREAM, 0x41AD]);
    for _ in 0..meta_steps {
        match method {
            Method::Toe => {
                toe_update(&mut learner, &buffer, config.toe_batch, &mut rng)?;
            }
            _ => {
                vs_meta_update(&mut learner, &buffer, &mut rng)?;
            }
        }
    }
    let mut total = 0.0;
    for e in ledger.evaluations() {
        let task = stream.tasks()[e.task];
        let mut d = IncrementalDataset::new(task, config.test_size);
        d.receive(e.adapt_shots);
        let adapted = learner.adapt(d.arrived())?;
        total += match config.threshold {
            Threshold::Loss(_) => empirical_risk(learner.mlp(), &adapted, d.test_split(), loss)?,
            Threshold::Accuracy(_) => 1.0 - accuracy(learner.mlp(), &adapted, d.test_split())?,
        };
    }
    Ok(total)
}
