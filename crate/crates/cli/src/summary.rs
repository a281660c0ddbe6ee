//! Aggregation of regret ledgers across seeds.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use varshot_core::online::RegretLedger;

use crate::error::CliError;

/// Mean, sample standard deviation (n - 1 denominator, 0 for one value) and
/// median.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Stats {
        assert!(!values.is_empty(), "statistics of no values");
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        Stats {
            n,
            mean,
            std,
            median,
        }
    }
}

pub fn read_ledger(path: &Path) -> Result<RegretLedger, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    RegretLedger::from_jsonl(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Rejects ledgers that do not come from one experiment, naming the first
/// field that differs.
pub fn check_compatible(ledgers: &[RegretLedger]) -> Result<(), CliError> {
    let Some(first) = ledgers.first() else {
        return Err(CliError::Config("no ledgers to summarize".into()));
    };
    for (i, l) in ledgers.iter().enumerate().skip(1) {
        let (a, b) = (&first.header, &l.header);
        let field = if a.config_hash != b.config_hash {
            Some(("config_hash", a.config_hash.clone(), b.config_hash.clone()))
        } else if a.stream != b.stream {
            Some(("stream", a.stream.clone(), b.stream.clone()))
        } else if a.n_tasks != b.n_tasks {
            Some(("n_tasks", a.n_tasks.to_string(), b.n_tasks.to_string()))
        } else {
            None
        };
        if let Some((name, x, y)) = field {
            return Err(CliError::Config(format!(
                "ledger {i} differs from ledger 0 in {name}: `{y}` vs `{x}`"
            )));
        }
    }
    Ok(())
}

/// Per-method regret statistics and mean `S_t` per task, as text.
pub fn summarize(ledgers: &[RegretLedger]) -> Result<String, CliError> {
    check_compatible(ledgers)?;
    let mut by_method: BTreeMap<&str, Vec<&RegretLedger>> = BTreeMap::new();
    for l in ledgers {
        by_method
            .entry(l.header.method.as_str())
            .or_default()
            .push(l);
    }
    let h = &ledgers[0].header;
    let mut out = String::new();
    writeln!(
        out,
        "config_hash {}\nstream {}\nn_tasks {}",
        h.config_hash, h.stream, h.n_tasks
    )
    .expect("writing to a string");
    for (method, runs) in &by_method {
        let regret: Vec<f64> = runs.iter().map(|l| l.cumulative()).collect();
        let shots: Vec<f64> = runs
            .iter()
            .map(|l| l.summary().total_shots as f64)
            .collect();
        let advanced: Vec<f64> = runs.iter().map(|l| l.summary().advanced as f64).collect();
        let (r, s, a) = (Stats::of(&regret), Stats::of(&shots), Stats::of(&advanced));
        let mut seeds: Vec<u64> = runs.iter().map(|l| l.header.seed).collect();
        seeds.sort_unstable();
        writeln!(out, "\n[{method}] seeds {seeds:?}").expect("writing to a string");
        writeln!(
            out,
            "regret mean {:.6} std {:.6} median {:.6}",
            r.mean, r.std, r.median
        )
        .expect("writing to a string");
        writeln!(
            out,
            "total shots mean {:.2} std {:.2} median {:.2}",
            s.mean, s.std, s.median
        )
        .expect("writing to a string");
        let excess: Option<Vec<f64>> = runs
            .iter()
            .map(|l| l.header.comparator_value.map(|c| l.cumulative() - c))
            .collect();
        if let Some(excess) = excess {
            let e = Stats::of(&excess);
            writeln!(
                out,
                "regret over hindsight mean {:.6} std {:.6} median {:.6}",
                e.mean, e.std, e.median
            )
            .expect("writing to a string");
        }
        writeln!(out, "tasks cleared mean {:.2} of {}", a.mean, h.n_tasks)
            .expect("writing to a string");
        let series: Vec<String> = (0..h.n_tasks)
            .map(|t| {
                let per_seed: Vec<f64> = runs
                    .iter()
                    .filter_map(|l| l.tasks().iter().find(|r| r.task == t))
                    .map(|r| r.shots as f64)
                    .collect();
                if per_seed.is_empty() {
                    "-".to_string()
                } else {
                    format!("{:.1}", Stats::of(&per_seed).mean)
                }
            })
            .collect();
        writeln!(out, "S_t mean {}", series.join(" ")).expect("writing to a string");
    }
    Ok(out)
}

/// One row per evaluation of every ledger.
pub fn curves_csv(ledgers: &[RegretLedger]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record([
        "method",
        "seed",
        "task_index",
        "step",
        "shots",
        "loss",
        "cumulative_regret",
    ])
    .map_err(csv_err)?;
    for l in ledgers {
        for e in l.evaluations() {
            w.write_record([
                l.header.method.clone(),
                l.header.seed.to_string(),
                e.task.to_string(),
                e.step.to_string(),
                e.shots.to_string(),
                e.loss.to_string(),
                e.cumulative.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use varshot_core::online::{LedgerHeader, TaskRecord, COMPARATOR_NOT_COMPUTED};

    fn ledger(method: &str, seed: u64, losses: &[f64]) -> RegretLedger {
        let mut l = RegretLedger::new(LedgerHeader {
            method: method.into(),
            seed,
            config_hash: "abc".into(),
            stream: "00ff".into(),
            n_tasks: 1,
            comparator: COMPARATOR_NOT_COMPUTED.into(),
            comparator_value: None,
        });
        for (i, &loss) in losses.iter().enumerate() {
            l.record_eval(0, i, 2 * i, 2 * i, loss);
        }
        l.finish_task(TaskRecord {
            task: 0,
            shots: 2 * (losses.len() - 1),
            steps: losses.len() - 1,
            advanced: true,
        })
        .unwrap();
        l
    }

    #[test]
    fn single_value_has_zero_spread() {
        let s = Stats::of(&[4.5]);
        assert_eq!((s.mean, s.std, s.median), (4.5, 0.0, 4.5));
    }

    #[test]
    fn sample_statistics_use_n_minus_one() {
        let s = Stats::of(&[30.0, 10.0, 20.0]);
        assert_eq!((s.mean, s.std, s.median), (20.0, 10.0, 20.0));
        assert_eq!(Stats::of(&[1.0, 2.0, 3.0, 10.0]).median, 2.5);
    }

    #[test]
    fn mismatched_ledgers_name_the_field() {
        let a = ledger("ftml", 0, &[1.0]);
        let mut b = ledger("ftml", 1, &[1.0]);
        b.header.stream = "1234".into();
        let err = check_compatible(&[a.clone(), b]).unwrap_err();
        assert!(err.to_string().contains("stream"), "{err}");
        let mut c = ledger("ftml", 1, &[1.0]);
        c.header.config_hash = "def".into();
        assert!(check_compatible(&[a, c])
            .unwrap_err()
            .to_string()
            .contains("config_hash"));
        assert!(check_compatible(&[]).is_err());
    }

    #[test]
    fn summary_groups_by_method() {
        let ls = [
            ledger("ftml", 0, &[1.0, 0.5]),
            ledger("ftml", 1, &[2.0, 1.0]),
            ledger("toe", 0, &[3.0]),
        ];
        let text = summarize(&ls).unwrap();
        assert!(text.contains("[ftml] seeds [0, 1]"), "{text}");
        assert!(text.contains("regret mean 2.250000"), "{text}");
        assert!(text.contains("[toe] seeds [0]"), "{text}");
        let csv = String::from_utf8(curves_csv(&ls).unwrap()).unwrap();
        assert_eq!(csv.lines().count(), 1 + 5);
        assert!(csv.starts_with("method,seed,task_index,step,shots,loss,cumulative_regret\n"));
    }
}
