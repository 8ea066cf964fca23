//! Parameter sweeps over the cross product of config overrides.

use std::cmp::Ordering;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::Mutex;

use crate::config::SweepConfig;
use crate::error::{HarnessError, Result};
use crate::output::{fmt_f64, write_text};
use crate::run;

/// Environment variable capping the number of sweep worker threads.
pub const THREADS_ENV: &str = "PIEZOWAVE_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axes: Vec<toml::Value>,
    pub classification: Option<String>,
    pub outcome: Option<String>,
    pub t_detect: Option<f64>,
    pub tmax_bound: Option<f64>,
    pub omega: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis_names: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn all_failed(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(SweepRow::failed)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = self.axis_names.iter().map(String::as_str).collect();
        header.extend([
            "classification",
            "outcome",
            "t_detect",
            "tmax_bound",
            "omega",
            "error",
        ]);
        w.write_record(&header).expect("in-memory CSV write");
        let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
        for r in &self.rows {
            let mut cells: Vec<String> = r.axes.iter().map(value_cell).collect();
            cells.push(r.classification.clone().unwrap_or_default());
            cells.push(r.outcome.clone().unwrap_or_default());
            cells.push(opt(r.t_detect));
            cells.push(opt(r.tmax_bound));
            cells.push(opt(r.omega));
            cells.push(r.error.clone().unwrap_or_default());
            w.write_record(&cells).expect("in-memory CSV write");
        }
        String::from_utf8(w.into_inner().expect("in-memory CSV flush"))
            .expect("CSV output is UTF-8")
    }
}

fn value_cell(v: &toml::Value) -> String {
    match v {
        toml::Value::Float(x) => fmt_f64(*x),
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn numeric(v: &toml::Value) -> Option<f64> {
    match v {
        toml::Value::Float(x) => Some(*x),
        toml::Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn compare_axes(a: &[toml::Value], b: &[toml::Value]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let ord = match (numeric(x), numeric(y)) {
            (Some(p), Some(q)) => p.total_cmp(&q),
            _ => value_cell(x).cmp(&value_cell(y)),
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    Ordering::Equal
}

/// Worker count: `max_parallel`, capped by the environment and the run count.
pub fn worker_count(max_parallel: usize, runs: usize) -> usize {
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    max_parallel.min(cap.unwrap_or(usize::MAX)).min(runs).max(1)
}

fn run_one(cfg: &SweepConfig, index: usize, axes: &[toml::Value]) -> SweepRow {
    let mut row = SweepRow {
        axes: axes.to_vec(),
        classification: None,
        outcome: None,
        t_detect: None,
        tmax_bound: None,
        omega: None,
        error: None,
    };
    let result = cfg.instantiate(axes).and_then(|rc| {
        let out = run::execute(&rc)?;
        if cfg.write_runs {
            run::persist(&out, &cfg.output_dir.join(format!("run-{index:04}")))?;
        }
        Ok(out.summary)
    });
    match result {
        Ok(s) => {
            row.classification = Some(s.classification.label().to_string());
            row.outcome = Some(s.outcome.to_string());
            row.t_detect = s.t_detect;
            row.tmax_bound = s.tmax_bound;
            row.omega = s.omega();
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Executes every run of the sweep; rows come back sorted by axis values.
pub fn execute(cfg: &SweepConfig) -> Result<SweepResult> {
    let combos = cfg.combinations()?;
    let workers = worker_count(cfg.max_parallel, combos.len());
    let next = AtomicUsize::new(0);
    let done = Mutex::new(Vec::with_capacity(combos.len()));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, AtomicOrdering::Relaxed);
                if i >= combos.len() {
                    break;
                }
                let row = run_one(cfg, i, &combos[i]);
                done.lock()
                    .expect("no worker panics while holding the lock")
                    .push((i, row));
            });
        }
    });
    let mut rows = done.into_inner().expect("workers have finished");
    rows.sort_by(|(i, a), (j, b)| compare_axes(&a.axes, &b.axes).then(i.cmp(j)));
    Ok(SweepResult {
        axis_names: cfg.axes.keys().cloned().collect(),
        rows: rows.into_iter().map(|(_, r)| r).collect(),
    })
}

/// `sweep`: runs and writes `sweep.csv` into the sweep output directory.
pub fn sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    let result = execute(cfg)?;
    let dir: &Path = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    write_text(&dir.join("sweep.csv"), &result.to_csv())?;
    Ok(result)
}
