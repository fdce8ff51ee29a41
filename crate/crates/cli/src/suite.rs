use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{mpsc, Mutex};

use serde::Deserialize;
use serde_json::json;

use crate::commands::{self, Command, Params};
use crate::error::{json_error, CliError};
use crate::rows::{self, ResultRow};

/// Soundness slack for the upper ≥ diag ≥ lower cross-check.
pub const SOUNDNESS_TOL: f64 = 1e-7;

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    List(Vec<u64>),
    Range { start: u64, end: u64 },
}

impl Seeds {
    pub fn expand(&self) -> Vec<u64> {
        match self {
            Seeds::List(v) => v.clone(),
            Seeds::Range { start, end } => (*start..*end).collect(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Job {
    pub command: String,
    #[serde(default)]
    pub params: serde_json::Value,
    pub seeds: Seeds,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub jobs: Vec<Job>,
    pub output_dir: PathBuf,
    #[serde(default = "one")]
    pub parallelism: usize,
}

fn one() -> usize {
    1
}

impl SuiteConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let cfg: SuiteConfig = serde_json::from_str(&text).map_err(|e| json_error(&path.display().to_string(), e))?;
        for (i, j) in cfg.jobs.iter().enumerate() {
            if Command::parse(&j.command).is_none() {
                return Err(CliError::Validation(format!("jobs[{i}].command: unknown command {:?}", j.command)));
            }
            if j.seeds.expand().is_empty() {
                return Err(CliError::Validation(format!("jobs[{i}].seeds: empty")));
            }
        }
        if cfg.parallelism == 0 {
            return Err(CliError::Validation("parallelism must be ≥ 1".into()));
        }
        Ok(cfg)
    }

    pub fn needs_calibration(&self) -> bool {
        self.jobs.iter().filter_map(|j| Command::parse(&j.command)).any(|c| c.certifies())
    }
}

fn run_job(job: &Job, seed: u64) -> Vec<ResultRow> {
    let cmd = Command::parse(&job.command).expect("validated at load");
    let params = if job.params.is_null() { Ok(Params::default()) } else { serde_json::from_value::<Params>(job.params.clone()) };
    let result = match params {
        Ok(mut p) => {
            p.seed = Some(seed);
            commands::run(cmd, &p)
        }
        Err(e) => Err(CliError::Validation(format!("params of {:?}: {e}", job.command))),
    };
    result.unwrap_or_else(|e| vec![ResultRow::error("", &job.command, seed, &e)])
}

/// Runs every (job, seed) pair; rows come back in (job, seed) order.
pub fn run_suite(cfg: &SuiteConfig) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| CliError::Output(format!("{}: {e}", cfg.output_dir.display())))?;
    let work: Vec<(usize, usize, u64)> = cfg
        .jobs
        .iter()
        .enumerate()
        .flat_map(|(i, j)| j.seeds.expand().into_iter().enumerate().map(move |(k, s)| (i, k, s)))
        .collect();
    let queue = Mutex::new(work.into_iter());
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|scope| {
        for _ in 0..cfg.parallelism {
            let tx = tx.clone();
            let queue = &queue;
            scope.spawn(move || loop {
                let next = queue.lock().expect("queue lock").next();
                let Some((i, k, seed)) = next else { break };
                let rows = run_job(&cfg.jobs[i], seed);
                if tx.send(((i, k), rows)).is_err() {
                    break;
                }
            });
        }
    });
    drop(tx);
    let mut done: BTreeMap<(usize, usize), Vec<ResultRow>> = rx.into_iter().collect();
    let all: Vec<ResultRow> = std::mem::take(&mut done).into_values().flatten().collect();
    let path = cfg.output_dir.join("results.csv");
    rows::write_rows(&all, Some(&path))?;
    Ok(path)
}

fn stats(v: &mut [f64]) -> serde_json::Value {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    let median = if k % 2 == 1 { v[k / 2] } else { 0.5 * (v[k / 2 - 1] + v[k / 2]) };
    json!({ "mean": v.iter().sum::<f64>() / k as f64, "median": median, "min": v[0], "max": v[k - 1] })
}

/// Per (method, n) statistics plus the upper ≥ diag ≥ lower cross-check.
pub fn summarize(rows: &[ResultRow]) -> serde_json::Value {
    let mut groups: BTreeMap<(String, u64), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    let mut diag: BTreeMap<&str, f64> = BTreeMap::new();
    let mut errors = 0usize;
    for r in rows {
        let Some(v) = r.value.filter(|_| r.status == "ok") else {
            errors += 1;
            continue;
        };
        let n = r.extra_json().get("n").and_then(|x| x.as_u64()).unwrap_or(0);
        let g = groups.entry((r.method.clone(), n)).or_default();
        g.0.push(v);
        if n > 0 {
            g.1.push(v / (n as f64).sqrt());
        }
        if r.method == "diag" {
            diag.insert(&r.instance_id, v);
        }
    }
    let mut violations = Vec::new();
    let mut checked = 0usize;
    for r in rows.iter().filter(|r| r.status == "ok") {
        let (Some(&opt), Some(v)) = (diag.get(r.instance_id.as_str()), r.value) else { continue };
        let bad = match r.side.as_str() {
            "upper" => v < opt - SOUNDNESS_TOL,
            "lower" => v > opt + SOUNDNESS_TOL,
            _ => continue,
        };
        checked += 1;
        if bad {
            violations.push(json!({ "instance_id": r.instance_id, "method": r.method, "side": r.side, "value": v, "diag": opt, "seed": r.seed }));
        }
    }
    let table: Vec<serde_json::Value> = groups
        .into_iter()
        .map(|((method, n), (mut v, mut s))| {
            json!({
                "method": method,
                "n": n,
                "count": v.len(),
                "value": stats(&mut v),
                "value_over_sqrt_n": if s.is_empty() { serde_json::Value::Null } else { stats(&mut s) },
            })
        })
        .collect();
    json!({
        "rows": rows.len(),
        "errors": errors,
        "groups": table,
        "soundness": { "checked": checked, "violations": violations.len(), "details": violations },
    })
}
