//! One runner per experiment. Each returns rows in a deterministic order
//! plus derived scalars for the sidecar.

use rayon::prelude::*;
use serde_json::{json, Map, Value};
use wgs_core::measures::{
    block_entropy, default_step, ggm, mutual_information_at, AveragedValue, TimeSeries, MeasureId,
};
use wgs_core::transition::{
    alpha_star_from_fit, averaged_mi_profile, fit_mi_scaling, ggm_approx_error, locate_jump, saturation_report,
    scaling_law_fit, DerivativeKind, MiFitConfig, NSat, SaturationConfig, TransitionReport,
};
use wgs_core::rdm::default_l_max;
use wgs_core::{u_l_bound, AlphaGrid, ChainSpec, PhaseModel, WgsError};

use crate::config::{Experiment, SweepConfig};
use crate::table::{Cell, ResultTable};
use crate::validate;

/// How far a run got.
#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Complete,
    /// A size cap stopped the sweep; the rows before it are kept.
    Incomplete(String),
    /// Every row was produced but a check failed.
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: ResultTable,
    pub derived: Map<String, Value>,
    /// Descriptions of time averages whose half-step certificate failed.
    pub unconverged: Vec<String>,
    pub status: Status,
}

impl Outcome {
    fn new(table: ResultTable) -> Self {
        Self {
            table,
            derived: Map::new(),
            unconverged: Vec::new(),
            status: Status::Complete,
        }
    }

    fn note(&mut self, what: String, v: &AveragedValue) {
        if !v.converged {
            self.unconverged.push(format!("{what}: half-step deviation {:e}", v.half_step_deviation()));
        }
    }
}

type Rows = Vec<Vec<Cell>>;

/// Evaluates independent units in parallel and keeps the rows of the
/// leading units that succeeded. A resource error ends the sweep there;
/// any other error aborts the run.
fn gather<U, F>(units: &[U], f: F) -> Result<(Vec<Rows>, Option<String>), WgsError>
where
    U: Sync,
    F: Fn(&U) -> Result<Rows, WgsError> + Sync + Send,
{
    let results: Vec<Result<Rows, WgsError>> = units.par_iter().map(f).collect();
    let mut done = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(rows) => done.push(rows),
            Err(e @ WgsError::Resource { .. }) => return Ok((done, Some(e.to_string()))),
            Err(e) => return Err(e),
        }
    }
    Ok((done, None))
}

fn finish(mut out: Outcome, chunks: Vec<Rows>, stopped: Option<String>) -> Outcome {
    for row in chunks.into_iter().flatten() {
        out.table.push(row);
    }
    out.table.sort();
    if let Some(why) = stopped {
        out.status = Status::Incomplete(why);
    }
    out
}

fn alphas(cfg: &SweepConfig) -> Vec<f64> {
    cfg.alpha.expect("resolved").points()
}

fn grid(cfg: &SweepConfig) -> AlphaGrid {
    cfg.alpha.expect("resolved")
}

fn quad_step(cfg: &SweepConfig, d: usize) -> f64 {
    cfg.step.unwrap_or_else(|| default_step(d))
}

fn chain(cfg: &SweepConfig, d: usize, alpha: f64) -> Result<ChainSpec, WgsError> {
    ChainSpec::new(cfg.n, d, alpha)
}

pub fn run(cfg: &SweepConfig) -> Result<Outcome, WgsError> {
    match cfg.experiment {
        Experiment::Entropy => entropy(cfg),
        Experiment::MiTime => mi_time(cfg),
        Experiment::MiAverage => mi_average(cfg),
        Experiment::GgmTime => ggm_time(cfg),
        Experiment::AlphaStarFit => alpha_star_fit(cfg),
        Experiment::AlphaStarJump => alpha_star_jump(cfg),
        Experiment::Saturation => saturation(cfg, false),
        Experiment::NSat => saturation(cfg, true),
        Experiment::ApproxError => approx_error(cfg),
        Experiment::Validate => validate::run(cfg),
    }
}

fn entropy(cfg: &SweepConfig) -> Result<Outcome, WgsError> {
    let t = cfg.t.expect("resolved");
    let mut cols = vec!["alpha".to_string(), "L".to_string(), "S_L".to_string()];
    cols.extend(cfg.sub_lens.iter().map(|l| format!("U_L_sub{l}")));
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let out = Outcome::new(ResultTable::new(&col_refs, 2));
    let units: Vec<(f64, usize)> = alphas(cfg)
        .into_iter()
        .flat_map(|a| (1..=cfg.block_max).map(move |l| (a, l)))
        .collect();
    let (chunks, stopped) = gather(&units, |&(alpha, len)| {
        let m = PhaseModel::new(chain(cfg, cfg.d, alpha)?, t)?;
        let mut row: Vec<Cell> = vec![alpha.into(), len.into(), block_entropy(&m, len)?.into()];
        for &sub in &cfg.sub_lens {
            let widest = if len == sub { sub } else { 2 * sub };
            let fits = len % sub == 0 && widest <= default_l_max(cfg.d);
            row.push(if fits { u_l_bound(&m, len, sub)?.into() } else { Cell::Empty });
        }
        Ok(vec![row])
    })?;
    Ok(finish(out, chunks, stopped))
}

fn mi_time(cfg: &SweepConfig) -> Result<Outcome, WgsError> {
    let times = cfg.times.expect("resolved").points();
    let out = Outcome::new(ResultTable::new(&["alpha", "r", "t", "I"], 3));
    let units: Vec<(f64, usize)> = alphas(cfg)
        .into_iter()
        .flat_map(|a| (cfg.r_min..=cfg.r_max).map(move |r| (a, r)))
        .collect();
    let (chunks, stopped) = gather(&units, |&(alpha, r)| {
        let c = chain(cfg, cfg.d, alpha)?;
        let left = cfg.anchor.left_site(cfg.n, r);
        times
            .iter()
            .map(|&t| {
                let i = mutual_information_at(&PhaseModel::new(c, t)?, left, r)?;
                Ok(vec![alpha.into(), r.into(), t.into(), i.into()])
            })
            .collect()
    })?;
    Ok(finish(out, chunks, stopped))
}

fn mi_config(cfg: &SweepConfig) -> MiFitConfig {
    MiFitConfig {
        t0: cfg.t0.expect("resolved"),
        step: cfg.step,
        r_min: cfg.r_min,
        r_max: cfg.r_max,
        anchor: cfg.anchor,
        theta: cfg.theta,
        refine_to: cfg.refine_to,
    }
}

fn mi_average(cfg: &SweepConfig) -> Result<Outcome, WgsError> {
    let mcfg = mi_config(cfg);
    let mut out = Outcome::new(ResultTable::new(&["alpha", "r", "I_avg", "I_avg_half_step", "converged"], 2));
    let mut fits = Vec::new();
    for alpha in alphas(cfg) {
        let profile = averaged_mi_profile(&chain(cfg, cfg.d, alpha)?, &mcfg)?;
        for (r, v) in &profile {
            out.note(format!("alpha {alpha} r {r}"), v);
            out.table.push(vec![alpha.into(), (*r).into(), v.value.into(), v.half_step_value.into(), v.converged.into()]);
        }
        let points: Vec<(usize, f64)> = profile.iter().map(|(r, v)| (*r, v.value)).collect();
        fits.push(match fit_mi_scaling(&points, cfg.r_min, cfg.r_max) {
            Ok(f) => json!({"alpha": alpha, "fit": f}),
            Err(e) => json!({"alpha": alpha, "fit": null, "reason": e.to_string()}),
        });
    }
    out.table.sort();
    out.derived.insert("fits".into(), Value::Array(fits));
    Ok(out)
}

fn ggm_time(cfg: &SweepConfig) -> Result<Outcome, WgsError> {
    let times = cfg.times.expect("resolved").points();
    let mut out = Outcome::new(ResultTable::new(&["alpha", "t", "G"], 2));
    let units = alphas(cfg);
    let (chunks, stopped) = gather(&units, |&alpha| {
        let c = chain(cfg, cfg.d, alpha)?;
        times
            .iter()
            .map(|&t| Ok(vec![alpha.into(), t.into(), ggm(&PhaseModel::new(c, t)?)?.into()]))
            .collect()
    })?;
    let peaks: Vec<Value> = chunks
        .iter()
        .zip(&units)
        .map(|(rows, &alpha)| {
            let ts: Vec<f64> = rows.iter().map(|r| float(&r[1])).collect();
            let gs: Vec<f64> = rows.iter().map(|r| float(&r[2])).collect();
            let peak = TimeSeries::new(ts, gs, MeasureId::Ggm).ok().and_then(|s| s.argmax());
            json!({"alpha": alpha, "t_max": peak.map(|p| p.0), "g_max": peak.map(|p| p.1)})
        })
        .collect();
    out.derived.insert("maxima".into(), Value::Array(peaks));
    Ok(finish(out, chunks, stopped))
}

fn float(c: &Cell) -> f64 {
    match c {
        Cell::Float(x) => *x,
        Cell::Int(i) => *i as f64,
        _ => f64::NAN,
    }
}

fn report_json(r: &Result<TransitionReport, WgsError>) -> Result<Value, WgsError> {
    match r {
        Ok(rep) => Ok(json!({
            "alpha_star": rep.alpha_star,
            "method": rep.method,
            "jump_magnitude": rep.jump_magnitude,
            "grid_resolution": rep.grid_resolution,
        })),
        Err(WgsError::NoTransition(why)) => Ok(json!({"alpha_star": null, "reason": why})),
        Err(e) => Err(e.clone()),
    }
}

fn scaling(points: &[(usize, f64)]) -> Value {
    if points.len() < 4 {
        return Value::Null;
    }
    match scaling_law_fit(points) {
        Ok(f) => json!(f),
        Err(e) => json!({"reason": e.to_string()}),
    }
}

fn alpha_star_fit(cfg: &SweepConfig) -> Result<Outcome, WgsError> {
    let mcfg = mi_config(cfg);
    let mut out = Outcome::new(ResultTable::new(&["d", "alpha", "A_tilde"], 2));
    let mut per_d = Vec::new();
    let mut points = Vec::new();
    for d in cfg.dims() {
        let r = alpha_star_from_fit(&chain(cfg, d, 1.0)?, &grid(cfg), &mcfg);
        if let Ok(rep) = &r {
            for &(a, v) in &rep.curve {
                out.table.push(vec![d.into(), a.into(), v.into()]);
            }
            points.push((d, rep.alpha_star));
        }
        let mut j = report_json(&r)?;
        j["d"] = json!(d);
        per_d.push(j);
    }
    out.table.sort();
    out.derived.insert("transitions".into(), Value::Array(per_d));
    out.derived.insert("scaling_law".into(), scaling(&points));
    Ok(out)
}

fn alpha_star_jump(cfg: &SweepConfig) -> Result<Outcome, WgsError> {
    let mut out = Outcome::new(ResultTable::new(&["d", "kind", "alpha", "derivative"], 3));
    let mut per_d = Vec::new();
    let mut points = Vec::new();
    for d in cfg.dims() {
        let c = chain(cfg, d, 1.0)?;
        let mut entry = json!({"d": d});
        for (kind, h, name) in [
            (DerivativeKind::AlphaDerivative, cfg.h_alpha, "alpha_derivative"),
            (DerivativeKind::TimeDerivative, cfg.h_time, "time_derivative"),
        ] {
            let r = locate_jump(kind, &c, &grid(cfg), cfg.fine_step, cfg.half_width, h);
            if let Ok(rep) = &r {
                for &(a, v) in &rep.curve {
                    out.table.push(vec![d.into(), name.into(), a.into(), v.into()]);
                }
                if kind == DerivativeKind::AlphaDerivative {
                    points.push((d, rep.alpha_star));
                }
            }
            entry[name] = report_json(&r)?;
        }
        per_d.push(entry);
    }
    out.table.sort();
    out.derived.insert("transitions".into(), Value::Array(per_d));
    out.derived.insert("scaling_law".into(), scaling(&points));
    Ok(out)
}

fn saturation(cfg: &SweepConfig, n_sat_table: bool) -> Result<Outcome, WgsError> {
    let table = if n_sat_table {
        ResultTable::new(&["d", "alpha", "epsilon", "saturated", "N_sat", "N_sat_bare"], 3)
    } else {
        ResultTable::new(&["d", "alpha", "G_avg", "G_avg_half_step", "converged"], 2)
    };
    let mut out = Outcome::new(table);
    let mut per_d = Vec::new();
    for d in cfg.dims() {
        let scfg = SaturationConfig {
            t0: cfg.t0.expect("resolved"),
            step: cfg.step,
            n_sites: cfg.n,
            epsilons: cfg.epsilons.clone(),
            window: cfg.window,
            n_min: cfg.n_min,
            n_cap: cfg.n_cap,
        };
        let rep = saturation_report(d, &grid(cfg), &scfg)?;
        for (a, v) in rep.alphas.iter().zip(&rep.g_avg) {
            out.note(format!("d {d} alpha {a}"), v);
            if !n_sat_table {
                out.table.push(vec![d.into(), (*a).into(), v.value.into(), v.half_step_value.into(), v.converged.into()]);
            }
        }
        if n_sat_table {
            for e in &rep.n_sat_table {
                out.table.push(vec![
                    d.into(),
                    e.alpha.into(),
                    e.epsilon.into(),
                    matches!(e.n_sat, NSat::Saturated(_)).into(),
                    e.n_sat.value().into(),
                    e.n_sat_literal.value().into(),
                ]);
            }
        }
        per_d.push(json!({
            "d": d,
            "plateau_value": rep.plateau_value,
            "alpha_plateau": rep.alpha_plateau,
            "alpha_sat_estimate": rep.alpha_sat_estimate,
        }));
    }
    out.table.sort();
    out.derived.insert("saturation".into(), Value::Array(per_d));
    Ok(out)
}

fn approx_error(cfg: &SweepConfig) -> Result<Outcome, WgsError> {
    let t0 = cfg.t0.expect("resolved");
    let mut out = Outcome::new(ResultTable::new(&["d", "alpha", "N", "E", "E_half_step", "converged"], 3));
    let mut stopped = None;
    'outer: for d in cfg.dims() {
        for alpha in alphas(cfg) {
            for n in cfg.sizes.0..=cfg.sizes.1 {
                let c = ChainSpec::new(n, d, alpha)?;
                let e = match ggm_approx_error(&c, &[n], t0, quad_step(cfg, d)) {
                    Ok(mut v) => v.remove(0).1,
                    Err(e @ WgsError::Resource { .. }) => {
                        stopped = Some(e.to_string());
                        break 'outer;
                    }
                    Err(e) => return Err(e),
                };
                out.note(format!("d {d} alpha {alpha} N {n}"), &e);
                out.table.push(vec![
                    d.into(),
                    alpha.into(),
                    n.into(),
                    e.value.into(),
                    e.half_step_value.into(),
                    e.converged.into(),
                ]);
            }
        }
    }
    Ok(finish(out, Vec::new(), stopped))
}
