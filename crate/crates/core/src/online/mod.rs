//! The online incremental meta-learning loop, its baselines and regret
//! accounting.

mod buffer;
mod ledger;
mod runner;

pub use buffer::{FrozenTask, TaskBuffer};
pub use ledger::{
    EvalRecord, LedgerHeader, LedgerSummary, RegretLedger, TaskRecord, COMPARATOR_NOT_COMPUTED,
};
pub use runner::{
    draw_meta_batch, evaluate_and_maybe_advance, hindsight_comparator, initial_learner, run_online,
    toe_update, vs_meta_update, EvalShotRule, Evaluation, MetaDraw, Method, OnlineConfig,
    OnlineOutcome, Threshold, ToeReport,
};
