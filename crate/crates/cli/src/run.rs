//! The experiment modes. Every output file is written atomically; results
//! depend only on the configuration, never on thread scheduling.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use varshot_core::meta::MetaLearner;
use varshot_core::model::{accuracy, empirical_risk, ParamVector};
use varshot_core::online::{
    hindsight_comparator, initial_learner, run_online, toe_update, vs_meta_update, Method,
    RegretLedger, TaskBuffer, Threshold,
};
use varshot_core::seed::{derive_seed, rng_for};
use varshot_core::tasks::{sample_task, IncrementalDataset, TaskStream};
use varshot_core::verify::{
    scaling_rule_report, variance_law_check, LinearRegression, ModelFamily, Sampling,
};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::write_atomic;
use crate::summary::{curves_csv, summarize};

const OFFLINE_STREAM: u64 = 0x0FF1;
const HELD_OUT_STREAM: u64 = 0xE7A1;

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

/// Runs `f` on every (method, seed) cell, in parallel unless the
/// configuration asks for sequential execution. Results keep cell order.
fn for_each_cell<T: Send>(
    config: &ExperimentConfig,
    f: impl Fn(Method, u64) -> Result<T, CliError> + Sync,
) -> Result<Vec<T>, CliError> {
    let cells: Vec<(Method, u64)> = config
        .methods
        .iter()
        .flat_map(|&m| config.seeds.iter().map(move |&s| (m, s)))
        .collect();
    if config.deterministic {
        cells.into_iter().map(|(m, s)| f(m, s)).collect()
    } else {
        cells.into_par_iter().map(|(m, s)| f(m, s)).collect()
    }
}

fn task_stream(config: &ExperimentConfig) -> Result<TaskStream, CliError> {
    Ok(TaskStream::generate(
        &config.tasks.distribution,
        config.tasks.n_tasks,
        config.tasks.stream_seed,
    )?)
}

/// Online runs for every method and seed. Returns the written paths.
pub fn online(config: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    let out = &config.out;
    create_dir(out)?;
    let stream = task_stream(config)?;
    let mlp = config.mlp()?;
    let loss = config.loss();
    let hash = config.hash();
    let mut written = vec![out.join("config.toml"), out.join("stream.jsonl")];
    write_atomic(&written[0], config.to_toml().as_bytes())?;
    write_atomic(&written[1], stream.to_text().as_bytes())?;

    let ledgers = for_each_cell(config, |method, seed| {
        let mut ledger = run_online(&config.online, &mlp, loss, method, &stream, seed)?.ledger;
        ledger.header.config_hash = hash.clone();
        if config.comparator.enabled {
            let value = hindsight_comparator(
                &config.online,
                &mlp,
                loss,
                &stream,
                &ledger,
                config.comparator.meta_steps,
            )?;
            ledger.header.comparator = "hindsight".into();
            ledger.header.comparator_value = Some(value);
        }
        let path = out.join(format!("ledger_{method}_seed{seed}.jsonl"));
        write_atomic(&path, ledger.to_jsonl().as_bytes())?;
        Ok((path, ledger))
    })?;
    let (paths, ledgers): (Vec<PathBuf>, Vec<RegretLedger>) = ledgers.into_iter().unzip();
    written.extend(paths);
    written.extend(write_summary(out, &ledgers)?);
    Ok(written)
}

/// Writes `summary.txt` and `curves.csv` for `ledgers` into `out`.
pub fn write_summary(out: &Path, ledgers: &[RegretLedger]) -> Result<Vec<PathBuf>, CliError> {
    create_dir(out)?;
    let summary = out.join("summary.txt");
    let curves = out.join("curves.csv");
    write_atomic(&summary, summarize(ledgers)?.as_bytes())?;
    write_atomic(&curves, &curves_csv(ledgers)?)?;
    Ok(vec![summary, curves])
}

/// Evaluation loss in ledger units: the loss itself, or one minus accuracy
/// under an accuracy threshold.
fn evaluation_loss(
    learner: &MetaLearner,
    config: &ExperimentConfig,
    data: &IncrementalDataset,
) -> Result<f64, CliError> {
    let adapted = learner.adapt(data.arrived())?;
    Ok(match config.online.threshold {
        Threshold::Loss(_) => {
            empirical_risk(learner.mlp(), &adapted, data.test_split(), learner.loss())?
        }
        Threshold::Accuracy(_) => 1.0 - accuracy(learner.mlp(), &adapted, data.test_split())?,
    })
}

/// Standard offline meta-training on a fixed task set, then held-out
/// evaluation at each configured shot count. Writes a checkpoint and a
/// per-shot loss table for every cell.
pub fn offline(config: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    let out = &config.out;
    create_dir(out)?;
    let o = &config.offline;
    let dist = &config.tasks.distribution;
    let train = TaskStream::generate(dist, o.n_tasks, config.tasks.stream_seed)?;
    let held_out_seed = derive_seed(&[config.tasks.stream_seed, HELD_OUT_STREAM]);
    let held_out = TaskStream::generate(dist, o.eval_tasks, held_out_seed)?;
    let mut buffer = TaskBuffer::new();
    for task in train.tasks() {
        let mut d = IncrementalDataset::new(*task, config.online.test_size);
        d.receive(o.points_per_task);
        buffer.begin(d)?;
        buffer.freeze()?;
    }
    let mlp = config.mlp()?;
    let loss = config.loss();
    let config_path = out.join("config.toml");
    write_atomic(&config_path, config.to_toml().as_bytes())?;

    let cells = for_each_cell(config, |method, seed| {
        let mut learner = initial_learner(&config.online, &mlp, loss, method, seed)?;
        let mut rng = rng_for(&[seed, OFFLINE_STREAM]);
        for _ in 0..o.meta_steps {
            match method {
                Method::Toe => {
                    toe_update(&mut learner, &buffer, config.online.toe_batch, &mut rng)?;
                }
                _ => {
                    vs_meta_update(&mut learner, &buffer, &mut rng)?;
                }
            }
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(["shots", "mean_loss", "std_loss", "n_tasks"])
            .map_err(csv_err)?;
        for &k in &o.eval_shots {
            let losses = held_out
                .tasks()
                .iter()
                .map(|task| {
                    let mut d = IncrementalDataset::new(*task, config.online.test_size);
                    d.receive(k);
                    evaluation_loss(&learner, config, &d)
                })
                .collect::<Result<Vec<f64>, CliError>>()?;
            let s = crate::summary::Stats::of(&losses);
            w.write_record([
                k.to_string(),
                s.mean.to_string(),
                s.std.to_string(),
                s.n.to_string(),
            ])
            .map_err(csv_err)?;
        }
        let table = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        let table_path = out.join(format!("offline_{method}_seed{seed}.csv"));
        let ckpt_path = out.join(format!("checkpoint_{method}_seed{seed}.bin"));
        write_atomic(&table_path, &table)?;
        write_atomic(&ckpt_path, &learner.to_checkpoint().to_bytes())?;
        Ok([table_path, ckpt_path])
    })?;
    let mut written = vec![config_path];
    written.extend(cells.into_iter().flatten());
    Ok(written)
}

/// Scaling-rule oracle on the linear family and the gradient-variance law on
/// the configured network and task family.
pub fn verify(config: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    let out = &config.out;
    create_dir(out)?;
    let v = &config.verify;
    let family = LinearRegression::new(v.mean.clone(), v.tau, v.noise)?;
    let report = scaling_rule_report(
        &family,
        &v.theta,
        v.beta_star,
        &v.s,
        v.grid_points,
        v.n_mc,
        v.seed,
    )?;
    let report_path = out.join("verify_report.csv");
    write_atomic(&report_path, report.to_table().as_bytes())?;

    let mlp = config.mlp_with_hidden(&v.variance_hidden)?;
    let theta = ParamVector::glorot(&mlp.sizes, &mut rng_for(&[v.seed, 1])).to_flat();
    let task = sample_task(&config.tasks.distribution, &mut rng_for(&[v.seed, 2]))?;
    let model_family = ModelFamily {
        mlp,
        loss: config.loss(),
        dist: config.tasks.distribution.clone(),
    };
    let rows = variance_law_check(
        &model_family,
        &task,
        &theta,
        &v.variance_s,
        v.variance_reps,
        Sampling::Iid,
        &mut rng_for(&[v.seed, 3]),
    )?;
    let mut table = String::from("s,variance,ratio\n");
    for r in &rows {
        table.push_str(&format!("{},{},{}\n", r.s, r.variance, r.ratio));
    }
    let variance_path = out.join("variance_law.csv");
    write_atomic(&variance_path, table.as_bytes())?;
    Ok(vec![report_path, variance_path])
}

/// Summarizes existing ledger files into `out`.
pub fn summarize_files(out: &Path, paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    if paths.is_empty() {
        return Err(CliError::Config(
            "summarize needs at least one ledger file".into(),
        ));
    }
    let ledgers = paths
        .iter()
        .map(|p| crate::summary::read_ledger(p))
        .collect::<Result<Vec<_>, _>>()?;
    write_summary(out, &ledgers)
}
