use std::path::PathBuf;
use std::time::Instant;

use majsos::algebra::{AnticommGraph, GraphJson};
use majsos::certify::{self, CertificateReport};
use majsos::gaussian::{self, LowRankTerm};
use majsos::kneser::{self, SimpleGraph};
use majsos::repr;
use majsos::syk::{self, SykInstance};
use majsos::variational;
use serde::Deserialize;
use serde_json::json;

use crate::error::{json_error, CliError};
use crate::rows::{content_id, ResultRow};

/// Flags shared by every subcommand; each command reads the ones it needs.
#[derive(clap::Args, Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Input file (instance, graph, low-rank terms or CSV, depending on the command).
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    /// First-color count; selects the 2-colored model when sampling.
    #[arg(long)]
    pub n1: Option<usize>,
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// θ grid as lo:hi:count.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Independent set for localopt, e.g. 1,3.
    #[arg(long)]
    pub set: Option<String>,
    /// Non-edge distances for scheme graphs, e.g. 0,2,4.
    #[arg(long)]
    pub distances: Option<String>,
    /// Named graph: cycle:N, complete:N, empty:N, matching:R, petersen.
    #[arg(long)]
    pub graph: Option<String>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Diag,
    Certify,
    Lower,
    Theta,
    Alpha,
    Psi,
    LocalOpt,
    GaussSdp,
    GaussRound,
    GaussWitness,
    GaussLowrank,
    VarSweep,
    VarWitness,
    VarTrotter,
}

impl Command {
    pub fn parse(s: &str) -> Option<Command> {
        let words: Vec<&str> = s.split_whitespace().collect();
        Some(match words.as_slice() {
            ["diag"] => Command::Diag,
            ["certify"] => Command::Certify,
            ["lower"] => Command::Lower,
            ["theta"] => Command::Theta,
            ["alpha"] => Command::Alpha,
            ["psi"] => Command::Psi,
            ["localopt"] => Command::LocalOpt,
            ["gaussian", "sdp"] => Command::GaussSdp,
            ["gaussian", "round"] => Command::GaussRound,
            ["gaussian", "witness"] => Command::GaussWitness,
            ["gaussian", "lowrank"] => Command::GaussLowrank,
            ["variational", "sweep"] => Command::VarSweep,
            ["variational", "witness"] => Command::VarWitness,
            ["variational", "trotter"] => Command::VarTrotter,
            _ => return None,
        })
    }

    /// Commands that emit bounds and so need the calibration gate.
    pub fn certifies(&self) -> bool {
        matches!(self, Command::Certify | Command::Lower)
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn need<T: Copy>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| bad(format!("missing --{flag}")))
}

fn read_text(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))
}

pub fn load_instance(path: &PathBuf) -> Result<SykInstance, CliError> {
    let text = read_text(path)?;
    let j: syk::InstanceJson = serde_json::from_str(&text).map_err(|e| json_error(&path.display().to_string(), e))?;
    Ok(SykInstance::from_json(&j)?)
}

/// The instance named by --in, or a fresh sample from --n/--q/--n1/--seed.
pub fn instance_from(p: &Params) -> Result<SykInstance, CliError> {
    if let Some(path) = &p.input {
        return load_instance(path);
    }
    let n = need(p.n, "n")?;
    let seed = p.seed.unwrap_or(0);
    Ok(match p.n1 {
        Some(n1) => syk::sample_2col(n1, n, seed)?,
        None => syk::sample_syk(n, p.q.unwrap_or(4), seed)?,
    })
}

fn list(s: &str, what: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse().map_err(|_| bad(format!("{what}: cannot parse {t:?}"))))
        .collect()
}

pub fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let err = || bad(format!("grid {s:?} is not lo:hi:count"));
    if parts.len() != 3 {
        return Err(err());
    }
    let lo: f64 = parts[0].parse().map_err(|_| err())?;
    let hi: f64 = parts[1].parse().map_err(|_| err())?;
    let count: usize = parts[2].parse().map_err(|_| err())?;
    if count == 0 || !lo.is_finite() || !hi.is_finite() {
        return Err(err());
    }
    Ok(variational::linear_grid(lo, hi, count))
}

fn grid_from(p: &Params) -> Result<Vec<f64>, CliError> {
    p.grid.as_deref().map(parse_grid).unwrap_or_else(|| Ok(variational::default_grid()))
}

fn named_graph(s: &str) -> Result<AnticommGraph, CliError> {
    let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
    let k = || arg.parse::<usize>().map_err(|_| bad(format!("graph {s:?}: bad size")));
    Ok(match kind {
        "cycle" => AnticommGraph::cycle(k()?),
        "complete" => AnticommGraph::complete(k()?),
        "empty" => AnticommGraph::empty(k()?),
        "matching" => AnticommGraph::matching(k()?),
        "petersen" => {
            let p = SimpleGraph::petersen();
            let edges: Vec<(usize, usize)> =
                (0..10).flat_map(|u| (u + 1..10).map(move |v| (u, v))).filter(|&(u, v)| p.has_edge(u, v)).map(|(u, v)| (u + 1, v + 1)).collect();
            AnticommGraph::new(10, &edges)?
        }
        _ => return Err(bad(format!("unknown graph {s:?}"))),
    })
}

/// Graph from --in (JSON) or --graph, with its content id.
fn graph_from(p: &Params) -> Result<(AnticommGraph, String), CliError> {
    let g = if let Some(path) = &p.input {
        let j: GraphJson = serde_json::from_str(&read_text(path)?).map_err(|e| json_error(&path.display().to_string(), e))?;
        AnticommGraph::from_json(&j)?
    } else if let Some(s) = &p.graph {
        named_graph(s)?
    } else {
        return Err(bad("need --in graph.json or --graph"));
    };
    let id = content_id(&serde_json::to_string(&g.to_json()).expect("graph serializes"));
    Ok((g, id))
}

fn distances_from(p: &Params, q: usize) -> Result<Vec<usize>, CliError> {
    match &p.distances {
        Some(s) => list(s, "distances"),
        None => Ok(kneser::even_distances(q)),
    }
}

fn scheme_id(n: usize, q: usize, d: &[usize]) -> String {
    content_id(&json!({ "scheme": "johnson", "n": n, "q": q, "nonedge_distances": d }).to_string())
}

fn ms(t: Instant) -> u64 {
    t.elapsed().as_millis() as u64
}

fn report_row(id: &str, r: &CertificateReport, n: usize, ms: u64, seed: u64) -> ResultRow {
    // fooling bounds the SOS value from below, not Opt
    let side = if r.method == "fooling" { "sos_lower" } else { r.side.as_str() };
    let extra = json!({ "n": n, "evidence": r.evidence, "sos_degree": r.sos_degree, "instance_specific": r.instance_specific });
    ResultRow::ok(id, &r.method, side, r.bound, extra, ms, seed)
}

pub const CERTIFY_METHODS: [&str; 4] = ["schatten4", "tau", "frag42", "chernoff"];
pub const LOWER_METHODS: [&str; 4] = ["fooling", "gaussian-round", "syk-witness", "variational"];

fn methods<'a>(p: &'a Params, all: &[&'a str]) -> Result<Vec<&'a str>, CliError> {
    match p.method.as_deref() {
        None | Some("all") => Ok(all.to_vec()),
        Some(m) if all.contains(&m) => Ok(vec![m]),
        Some(m) => Err(bad(format!("unknown method {m:?}; expected one of {all:?} or all"))),
    }
}

/// Run one command; rows are returned, never written here.
pub fn run(cmd: Command, p: &Params) -> Result<Vec<ResultRow>, CliError> {
    match cmd {
        Command::Theta | Command::Alpha | Command::Psi | Command::LocalOpt => return run_graph(cmd, p),
        Command::GaussLowrank => return run_lowrank(p),
        _ => {}
    }
    let inst = instance_from(p)?;
    let id = content_id(&inst.to_json_string());
    let seed = p.seed.unwrap_or(inst.seed);
    let n = inst.n;
    let mut rows = Vec::new();
    match cmd {
        Command::Diag => {
            let t = Instant::now();
            let rep = repr::canonical_representation(&inst.graph())?;
            let op = repr::represent(&inst.h, &rep)?;
            let e = repr::eig_extremes(&op, repr::EigMode::Max)?;
            let extra = json!({ "n": n, "q": inst.q, "dim": rep.dim(), "residual": e.residual });
            rows.push(ResultRow::ok(&id, "diag", "exact", e.value(), extra, ms(t), seed));
        }
        Command::Certify => {
            for m in methods(p, &CERTIFY_METHODS)? {
                let t = Instant::now();
                let r = match m {
                    "schatten4" => certify::schatten4_certificate(&inst.h),
                    "tau" => certify::tau_triangular_certificate(&inst.h),
                    "frag42" => certify::fragment42_certificate(&inst.h),
                    _ => certify::chernoff_moment_bound(n, inst.q),
                };
                rows.push(match r {
                    Ok(r) => report_row(&id, &r, n, ms(t), seed),
                    Err(e) => ResultRow::error(&id, m, seed, &e.into()),
                });
            }
        }
        Command::Lower => {
            for m in methods(p, &LOWER_METHODS)? {
                let t = Instant::now();
                let r: Result<ResultRow, CliError> = match m {
                    "fooling" => certify::fooling_pseudostate(&inst.h, inst.q.max(4))
                        .map(|r| report_row(&id, &r, n, ms(t), seed))
                        .map_err(Into::into),
                    "gaussian-round" => gauss_round(&inst, p, seed).map(|(v, extra)| ResultRow::ok(&id, "gaussian_round", "lower", v, extra, ms(t), seed)),
                    "syk-witness" => gaussian::syk_gaussian_witness(&inst.h)
                        .map(|w| ResultRow::ok(&id, "syk_witness", "lower", w.value, json!({ "n": n, "c": w.c, "g1_opnorm": w.g1_opnorm }), ms(t), seed))
                        .map_err(Into::into),
                    _ => var_witness(&inst, p).map(|(v, extra)| ResultRow::ok(&id, "variational", "lower", v, extra, ms(t), seed)),
                };
                rows.push(r.unwrap_or_else(|e| ResultRow::error(&id, m, seed, &e)));
            }
        }
        Command::GaussSdp => {
            let t = Instant::now();
            let sol = gaussian::solve_sdp_gauss(&inst.h, None, p.max_iter.unwrap_or(gaussian::SDP_DEFAULT_MAX_ITER))?;
            let extra = json!({ "n": n, "iterations": sol.iterations, "status": sol.status, "residuals": sol.residuals });
            rows.push(ResultRow::ok(&id, "sdp_gauss", "relaxation", sol.objective, extra, ms(t), seed));
        }
        Command::GaussRound => {
            let t = Instant::now();
            let (v, extra) = gauss_round(&inst, p, seed)?;
            rows.push(ResultRow::ok(&id, "gaussian_round", "lower", v, extra, ms(t), seed));
        }
        Command::GaussWitness => {
            let t = Instant::now();
            let w = gaussian::syk_gaussian_witness(&inst.h)?;
            let extra = json!({ "n": n, "c": w.c, "g1_opnorm": w.g1_opnorm, "covariance": w.cov.to_rows() });
            rows.push(ResultRow::ok(&id, "syk_witness", "lower", w.value, extra, ms(t), seed));
        }
        Command::VarSweep => {
            let t = Instant::now();
            let setup = variational::prepare_reference(&inst)?;
            let sw = variational::theta_sweep(&setup, &inst.h, &grid_from(p)?)?;
            let extra = json!({ "n": n, "n1": setup.n1, "best_theta": sw.best_theta, "first_order": setup.first_order, "curve": sw.curve });
            rows.push(ResultRow::ok(&id, "variational_sweep", "lower", sw.best_value, extra, ms(t), seed));
        }
        Command::VarWitness => {
            let t = Instant::now();
            let (v, extra) = var_witness(&inst, p)?;
            rows.push(ResultRow::ok(&id, "variational", "lower", v, extra, ms(t), seed));
        }
        Command::VarTrotter => {
            let t = Instant::now();
            let setup = variational::prepare_reference(&inst)?;
            let theta = p.theta.unwrap_or(0.5);
            let steps = p.steps.unwrap_or(200);
            let ts = variational::trotter_state(&setup, theta, steps)?;
            let hm = repr::represent(&setup.h, &setup.rep)?;
            let v = majsos::linalg::ntrace_prod(&ts.state.mat, &hm.mat).re;
            let exact = variational::conjugated_value(&setup, &inst.h, theta)?;
            let extra = json!({ "n": n, "theta": theta, "steps": steps, "exact": exact, "value_error": (v - exact).abs(), "relative_error": ts.relative_error });
            rows.push(ResultRow::ok(&id, "trotter", "lower", v, extra, ms(t), seed));
        }
        _ => unreachable!("handled above"),
    }
    Ok(rows)
}

fn gauss_round(inst: &SykInstance, p: &Params, seed: u64) -> Result<(f64, serde_json::Value), CliError> {
    let sol = gaussian::solve_sdp_gauss(&inst.h, None, p.max_iter.unwrap_or(gaussian::SDP_DEFAULT_MAX_ITER))?;
    let r = gaussian::round_to_gaussian(&sol, &inst.h, None, p.trials.unwrap_or(20), seed)?;
    Ok((r.value, json!({ "n": inst.n, "sdp_objective": sol.objective, "sigma_scale": r.sigma_scale, "covariance": r.cov.to_rows() })))
}

fn var_witness(inst: &SykInstance, p: &Params) -> Result<(f64, serde_json::Value), CliError> {
    let w = variational::witness_pipeline(inst, &grid_from(p)?)?;
    let v = w.value;
    let mut extra = serde_json::to_value(&w).expect("report serializes");
    extra["n"] = json!(inst.n);
    Ok((v, extra))
}

fn run_lowrank(p: &Params) -> Result<Vec<ResultRow>, CliError> {
    let path = p.input.as_ref().ok_or_else(|| bad("gaussian lowrank needs --in terms.json"))?;
    let text = read_text(path)?;
    let terms: Vec<LowRankTerm> = serde_json::from_str(&text).map_err(|e| json_error(&path.display().to_string(), e))?;
    let mats = terms.iter().map(|t| Ok((t.lambda, t.matrix()?))).collect::<Result<Vec<_>, CliError>>()?;
    let t = Instant::now();
    let r = gaussian::lowrank_optimize(&mats)?;
    let n = mats.first().map(|m| m.1.nrows()).unwrap_or(0);
    let extra = json!({ "n": n, "iterations": r.iterations, "objective_trace": r.objective_trace });
    let id = content_id(&serde_json::to_string(&terms).expect("terms serialize"));
    Ok(vec![ResultRow::ok(&id, "lowrank", "lower", r.value, extra, ms(t), p.seed.unwrap_or(0))])
}

fn run_graph(cmd: Command, p: &Params) -> Result<Vec<ResultRow>, CliError> {
    let seed = p.seed.unwrap_or(0);
    let t = Instant::now();
    let row = match cmd {
        Command::Theta => {
            if p.input.is_some() || p.graph.is_some() {
                let (g, id) = graph_from(p)?;
                let v = kneser::theta_transitive(&SimpleGraph::from_anticomm(&g))?;
                ResultRow::ok(&id, "theta_transitive", "upper", v, json!({ "n": g.n() }), ms(t), seed)
            } else {
                let (n, q) = (need(p.n, "n")?, need(p.q, "q")?);
                let d = distances_from(p, q)?;
                let c = kneser::delsarte_theta(n, q, &d)?;
                let extra = serde_json::to_value(&c).expect("certificate serializes");
                ResultRow::ok(&scheme_id(n, q, &d), "delsarte_theta", "upper", c.theta_value, extra, ms(t), seed)
            }
        }
        Command::Alpha => {
            let (g, id, n) = if p.input.is_some() || p.graph.is_some() {
                let (g, id) = graph_from(p)?;
                let n = g.n();
                (SimpleGraph::from_anticomm(&g), id, n)
            } else {
                let (n, q) = (need(p.n, "n")?, need(p.q, "q")?);
                let d = distances_from(p, q)?;
                (kneser::build_kg_graph(n, q, &d)?.graph, scheme_id(n, q, &d), n)
            };
            let set = kneser::max_independent_set(&g)?;
            let extra = json!({ "n": n, "vertices": g.n(), "witness": set });
            ResultRow::ok(&id, "alpha", "exact", set.len() as f64, extra, ms(t), seed)
        }
        Command::Psi => {
            let (g, id) = graph_from(p)?;
            let s = kneser::psi_local_search(&g, p.trials.unwrap_or(200), seed)?;
            let extra = json!({ "n": g.n(), "alpha": s.alpha, "independent_set_value": s.independent_set_value, "best_a": s.best_a });
            ResultRow::ok(&id, "psi", "lower", s.best_value, extra, ms(t), seed)
        }
        Command::LocalOpt => {
            let (g, id) = graph_from(p)?;
            let set = list(p.set.as_deref().ok_or_else(|| bad("localopt needs --set"))?, "set")?;
            let r = kneser::local_opt_check(&g, &set)?;
            let mut extra = serde_json::to_value(&r).expect("report serializes");
            extra["n"] = json!(g.n());
            ResultRow::ok(&id, "localopt", "check", r.value, extra, ms(t), seed)
        }
        _ => unreachable!("graph commands only"),
    };
    Ok(vec![row])
}
