//! Regret accounting and its line-delimited JSON export.
//!
//! An export is one header line, one line per evaluation, one line per
//! finished task and a closing summary line. Field order is fixed and floats
//! are written with round-trip precision, so exports can be diffed and
//! re-read exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const COMPARATOR_NOT_COMPUTED: &str = "not computed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerHeader {
    pub method: String,
    pub seed: u64,
    pub config_hash: String,
    /// Hex fingerprint of the task stream.
    pub stream: String,
    pub n_tasks: usize,
    /// `"not computed"` or `"hindsight"`.
    pub comparator: String,
    pub comparator_value: Option<f64>,
}

/// One evaluation on a task's test split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub task: usize,
    /// Meta-update steps taken on this task before the evaluation.
    pub step: usize,
    /// Points received for this task so far.
    pub shots: usize,
    /// Points actually used to adapt.
    pub adapt_shots: usize,
    /// Loss, or one minus accuracy.
    pub loss: f64,
    pub cumulative: f64,
}

/// How a task ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task: usize,
    /// `S_t`: points received when the task ended.
    pub shots: usize,
    pub steps: usize,
    /// False when the step cap ended the task.
    pub advanced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerSummary {
    pub tasks: usize,
    pub advanced: usize,
    pub evaluations: usize,
    pub total_shots: usize,
    pub final_cumulative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "kebab-case")]
enum Line {
    Header(LedgerHeader),
    Eval(EvalRecord),
    Task(TaskRecord),
    Summary(LedgerSummary),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretLedger {
    pub header: LedgerHeader,
    evaluations: Vec<EvalRecord>,
    tasks: Vec<TaskRecord>,
    cumulative: f64,
}

impl RegretLedger {
    pub fn new(header: LedgerHeader) -> Self {
        Self {
            header,
            evaluations: Vec::new(),
            tasks: Vec::new(),
            cumulative: 0.0,
        }
    }

    pub fn evaluations(&self) -> &[EvalRecord] {
        &self.evaluations
    }

    pub fn tasks(&self) -> &[TaskRecord] {
        &self.tasks
    }

    /// Sum of every recorded evaluation loss.
    pub fn cumulative(&self) -> f64 {
        self.cumulative
    }

    pub fn record_eval(
        &mut self,
        task: usize,
        step: usize,
        shots: usize,
        adapt_shots: usize,
        loss: f64,
    ) -> &EvalRecord {
        self.cumulative += loss;
        self.evaluations.push(EvalRecord {
            task,
            step,
            shots,
            adapt_shots,
            loss,
            cumulative: self.cumulative,
        });
        self.evaluations.last().expect("just pushed")
    }

    /// Records `S_t`. Each task may finish once.
    pub fn finish_task(&mut self, record: TaskRecord) -> Result<()> {
        if self.tasks.iter().any(|t| t.task == record.task) {
            return Err(Error::format(
                "ledger",
                format!("task {} finished twice", record.task),
            ));
        }
        self.tasks.push(record);
        Ok(())
    }

    pub fn summary(&self) -> LedgerSummary {
        LedgerSummary {
            tasks: self.tasks.len(),
            advanced: self.tasks.iter().filter(|t| t.advanced).count(),
            evaluations: self.evaluations.len(),
            total_shots: self.tasks.iter().map(|t| t.shots).sum(),
            final_cumulative: self.cumulative,
        }
    }

    /// Re-sums the evaluation losses in order.
    pub fn replay_cumulative(&self) -> f64 {
        self.evaluations.iter().fold(0.0, |acc, e| acc + e.loss)
    }

    /// Checks that every running total and the final total follow from the
    /// recorded losses.
    pub fn verify(&self) -> Result<()> {
        let mut running = 0.0;
        for (i, e) in self.evaluations.iter().enumerate() {
            running += e.loss;
            if running.to_bits() != e.cumulative.to_bits() {
                return Err(Error::format(
                    "ledger",
                    format!(
                        "evaluation {i}: cumulative {} but losses sum to {running}",
                        e.cumulative
                    ),
                ));
            }
        }
        if running.to_bits() != self.cumulative.to_bits() {
            return Err(Error::format(
                "ledger",
                format!(
                    "final cumulative {} but losses sum to {running}",
                    self.cumulative
                ),
            ));
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut lines = vec![Line::Header(self.header.clone())];
        lines.extend(self.evaluations.iter().copied().map(Line::Eval));
        lines.extend(self.tasks.iter().copied().map(Line::Task));
        lines.push(Line::Summary(self.summary()));
        let mut out = String::new();
        for line in lines {
            out.push_str(&serde_json::to_string(&line).expect("ledger lines serialize"));
            out.push('\n');
        }
        out
    }

    /// Parses an export and checks its internal consistency.
    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut header = None;
        let mut evaluations = Vec::new();
        let mut tasks = Vec::new();
        let mut summary = None;
        for (n, raw) in text.lines().enumerate() {
            if raw.trim().is_empty() {
                continue;
            }
            let line: Line = serde_json::from_str(raw)
                .map_err(|e| Error::format("ledger", format!("line {}: {e}", n + 1)))?;
            match line {
                Line::Header(h) if header.is_none() => header = Some(h),
                Line::Header(_) => return Err(Error::format("ledger", "duplicate header")),
                Line::Eval(e) => evaluations.push(e),
                Line::Task(t) => tasks.push(t),
                Line::Summary(s) => summary = Some(s),
            }
        }
        let header = header.ok_or_else(|| Error::format("ledger", "missing header"))?;
        let cumulative = evaluations.last().map_or(0.0, |e| e.cumulative);
        let ledger = Self {
            header,
            evaluations,
            tasks,
            cumulative,
        };
        ledger.verify()?;
        match summary {
            Some(s) if s == ledger.summary() => Ok(ledger),
            Some(_) => Err(Error::format("ledger", "summary disagrees with records")),
            None => Err(Error::format("ledger", "missing summary")),
        }
    }
}
