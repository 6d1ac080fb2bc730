//! Reduce-on-plateau learning-rate schedule with linear warmup.
//!
//! An evaluation improves when `metric >= best + epsilon` (absolute metric
//! points, inclusive). Otherwise the patience counter, measured in
//! evaluations, ticks down. When it runs out the rate drops by the reduction
//! factor, training reverts to the best checkpoint, and both epsilon and the
//! next patience budget are halved (integer floor, 38 -> 19 -> 9). The run
//! finishes at the last allowed reduction.
//!
//! Flat metric, default config (0-based evaluation index):
//!
//! ```text
//! eval  0      first metric, becomes best
//! eval 38      reduce, lr 2e-3, patience 19, epsilon 2.5
//! eval 57      reduce, lr 2e-4, patience 9,  epsilon 1.25
//! eval 66      reduce, lr 2e-5, finished
//! ```

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::Real;

#[derive(Debug, thiserror::Error)]
pub enum ScheduleError {
    #[error("invalid schedule config: {0}")]
    Invalid(String),
    #[error("trace line {line}: {message}")]
    Trace { line: u64, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct ScheduleConfig<T> {
    pub initial_lr: T,
    pub warmup_iters: u64,
    /// Evaluations without improvement before the first reduction.
    pub initial_patience: u32,
    /// Metric points.
    pub initial_epsilon: T,
    pub reduction_factor: T,
    pub max_reductions: u32,
    pub max_iters: u64,
}

impl<T: Real> Default for ScheduleConfig<T> {
    fn default() -> Self {
        Self {
            initial_lr: T::lit(0.02),
            warmup_iters: 1000,
            initial_patience: 38,
            initial_epsilon: T::lit(5.0),
            reduction_factor: T::lit(10.0),
            max_reductions: 3,
            max_iters: 1_000_000,
        }
    }
}

impl<T: Real> ScheduleConfig<T> {
    pub fn validate(&self) -> Result<(), ScheduleError> {
        let bad = |m: &str| Err(ScheduleError::Invalid(m.to_owned()));
        if !(self.initial_lr > T::zero() && self.initial_lr.is_finite()) {
            return bad("initial_lr must be > 0");
        }
        if !(self.initial_epsilon > T::zero() && self.initial_epsilon.is_finite()) {
            return bad("initial_epsilon must be > 0");
        }
        if !(self.reduction_factor > T::one() && self.reduction_factor.is_finite()) {
            return bad("reduction_factor must be > 1");
        }
        if self.initial_patience == 0 || self.max_reductions == 0 || self.max_iters == 0 {
            return bad("initial_patience, max_reductions and max_iters must be >= 1");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScheduleState<T> {
    /// Post-warmup rate.
    pub current_lr: T,
    pub reductions_done: u32,
    /// Budget the counter was last reset to.
    pub patience_budget: u32,
    pub patience_remaining: u32,
    pub current_epsilon: T,
    pub best_metric: Option<T>,
    /// Evaluation index holding the best metric.
    pub best_checkpoint_index: Option<u64>,
    /// Evaluations seen so far.
    pub eval_index: u64,
    pub finished: bool,
}

impl<T: Real> ScheduleState<T> {
    pub fn new(config: &ScheduleConfig<T>) -> Self {
        Self {
            current_lr: config.initial_lr,
            reductions_done: 0,
            patience_budget: config.initial_patience,
            patience_remaining: config.initial_patience,
            current_epsilon: config.initial_epsilon,
            best_metric: None,
            best_checkpoint_index: None,
            eval_index: 0,
            finished: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    Continue,
    /// Lower the rate and reload the checkpoint of this evaluation.
    ReduceAndRevert { checkpoint: u64 },
    /// Stop; the final model is the checkpoint of this evaluation.
    Finished { checkpoint: u64 },
}

/// Rate for a training iteration: a linear ramp to the initial rate during
/// warmup, then the current plateau rate.
pub fn lr_at_iteration<T: Real>(config: &ScheduleConfig<T>, state: &ScheduleState<T>, iter: u64) -> T {
    if iter < config.warmup_iters {
        config.initial_lr * T::lit((iter + 1) as f64) / T::lit(config.warmup_iters as f64)
    } else {
        state.current_lr
    }
}

/// Advances the schedule by one evaluation.
pub fn on_evaluation<T: Real>(config: &ScheduleConfig<T>, state: &ScheduleState<T>, metric: T) -> (ScheduleState<T>, Action) {
    let mut s = *state;
    if s.finished {
        return (s, Action::Finished { checkpoint: s.best_checkpoint_index.unwrap_or(0) });
    }
    let index = s.eval_index;
    s.eval_index += 1;
    let improved = match s.best_metric {
        None => !metric.is_nan(),
        Some(best) => metric >= best + s.current_epsilon,
    };
    if improved {
        s.best_metric = Some(metric);
        s.best_checkpoint_index = Some(index);
        s.patience_remaining = s.patience_budget;
        return (s, Action::Continue);
    }
    s.patience_remaining = s.patience_remaining.saturating_sub(1);
    if s.patience_remaining > 0 {
        return (s, Action::Continue);
    }
    s.current_lr = s.current_lr / config.reduction_factor;
    s.reductions_done += 1;
    s.patience_budget = (s.patience_budget / 2).max(1);
    s.patience_remaining = s.patience_budget;
    s.current_epsilon = s.current_epsilon * T::lit(0.5);
    let checkpoint = s.best_checkpoint_index.unwrap_or(0);
    if s.reductions_done >= config.max_reductions {
        s.finished = true;
        (s, Action::Finished { checkpoint })
    } else {
        (s, Action::ReduceAndRevert { checkpoint })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceAction {
    Warmup,
    Continue,
    ReduceAndRevert,
    Finished,
}

/// One row of a simulated run: a warmup iteration or an evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceRow<T> {
    pub iter: u64,
    pub eval_index: Option<u64>,
    pub metric: Option<T>,
    /// Rate in effect after the row.
    pub lr: T,
    pub action: TraceAction,
    pub checkpoint: Option<u64>,
    pub best_metric: Option<T>,
    pub epsilon: T,
    pub patience_remaining: u32,
    pub reductions_done: u32,
}

/// Replays a metric sequence. Emits one row per warmup iteration, then one
/// per evaluation; evaluation `k` happens at iteration `(k + 1) * eval_interval`.
/// Stops at the first `Finished`, or when the iteration reaches `max_iters`.
pub fn simulate_trace<T: Real>(config: &ScheduleConfig<T>, metrics: &[T], eval_interval: u64) -> Vec<TraceRow<T>> {
    let mut state = ScheduleState::new(config);
    let mut rows = Vec::with_capacity(config.warmup_iters as usize + metrics.len());
    for iter in 0..config.warmup_iters.min(config.max_iters) {
        rows.push(TraceRow {
            iter,
            eval_index: None,
            metric: None,
            lr: lr_at_iteration(config, &state, iter),
            action: TraceAction::Warmup,
            checkpoint: None,
            best_metric: None,
            epsilon: state.current_epsilon,
            patience_remaining: state.patience_remaining,
            reductions_done: 0,
        });
    }
    for (k, &m) in metrics.iter().enumerate() {
        let iter = (k as u64 + 1) * eval_interval.max(1);
        let (next, mut action) = on_evaluation(config, &state, m);
        state = next;
        if iter >= config.max_iters && !state.finished {
            state.finished = true;
            action = Action::Finished { checkpoint: state.best_checkpoint_index.unwrap_or(0) };
        }
        let (kind, checkpoint) = match action {
            Action::Continue => (TraceAction::Continue, None),
            Action::ReduceAndRevert { checkpoint } => (TraceAction::ReduceAndRevert, Some(checkpoint)),
            Action::Finished { checkpoint } => (TraceAction::Finished, Some(checkpoint)),
        };
        rows.push(TraceRow {
            iter,
            eval_index: Some(k as u64),
            metric: Some(m),
            lr: lr_at_iteration(config, &state, iter),
            action: kind,
            checkpoint,
            best_metric: state.best_metric,
            epsilon: state.current_epsilon,
            patience_remaining: state.patience_remaining,
            reductions_done: state.reductions_done,
        });
        if state.finished {
            break;
        }
    }
    rows
}

/// Reads metrics from a CSV with a header row. Uses the `metric` column when
/// present, else the first column. Blank lines are skipped.
pub fn read_metric_trace<R: Read>(reader: R) -> Result<Vec<f64>, ScheduleError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let column = r
        .headers()
        .map_err(|e| ScheduleError::Trace { line: 1, message: e.to_string() })?
        .iter()
        .position(|h| h == "metric")
        .unwrap_or(0);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| ScheduleError::Trace {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = rec.get(column).ok_or_else(|| ScheduleError::Trace { line, message: "missing metric column".into() })?;
        let v: f64 = field
            .parse()
            .map_err(|_| ScheduleError::Trace { line, message: format!("`{field}` is not a number") })?;
        out.push(v);
    }
    Ok(out)
}

/// Writes the log with columns
/// `iter,eval_index,metric,lr,action,checkpoint,best_metric,epsilon,patience_remaining,reductions_done`.
pub fn write_trace<W: Write>(writer: W, rows: &[TraceRow<f64>]) -> Result<(), ScheduleError> {
    let mut w = csv::Writer::from_writer(writer);
    let opt = |v: Option<String>| v.unwrap_or_default();
    let to_io = |e: csv::Error| ScheduleError::Io(std::io::Error::other(e));
    w.write_record([
        "iter",
        "eval_index",
        "metric",
        "lr",
        "action",
        "checkpoint",
        "best_metric",
        "epsilon",
        "patience_remaining",
        "reductions_done",
    ])
    .map_err(to_io)?;
    for r in rows {
        let action = match r.action {
            TraceAction::Warmup => "warmup",
            TraceAction::Continue => "continue",
            TraceAction::ReduceAndRevert => "reduce_and_revert",
            TraceAction::Finished => "finished",
        };
        w.write_record([
            r.iter.to_string(),
            opt(r.eval_index.map(|v| v.to_string())),
            opt(r.metric.map(|v| v.to_string())),
            r.lr.to_string(),
            action.to_owned(),
            opt(r.checkpoint.map(|v| v.to_string())),
            opt(r.best_metric.map(|v| v.to_string())),
            r.epsilon.to_string(),
            r.patience_remaining.to_string(),
            r.reductions_done.to_string(),
        ])
        .map_err(to_io)?;
    }
    w.flush()?;
    Ok(())
}
