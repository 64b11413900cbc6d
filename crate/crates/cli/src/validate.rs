//! Seeded cross-checks of the closed-form reductions against the exact state.

use std::f64::consts::PI;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;
use wgs_core::exact::build_state_on;
use wgs_core::measures::mutual_information_pair;
use wgs_core::{
    build_rdm, build_state, entropy, exact_ggm, ggm_all_cuts, measure_reduce, partial_trace, spectrum, u_l_bound,
    block_entropy, ChainSpec, PhaseModel, SubsystemSpec, WgsError,
};

use crate::config::SweepConfig;
use crate::experiments::{Outcome, Status};
use crate::table::ResultTable;

pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Check {
    Rdm,
    MutualInformation,
    Ggm,
    Reduction,
    Subadditivity,
}

impl Check {
    fn name(self) -> &'static str {
        match self {
            Check::Rdm => "rdm",
            Check::MutualInformation => "mutual_information",
            Check::Ggm => "ggm",
            Check::Reduction => "reduction",
            Check::Subadditivity => "subadditivity",
        }
    }
}

#[derive(Debug, Clone)]
struct Case {
    check: Check,
    index: usize,
    n: usize,
    d: usize,
    alpha: f64,
    t: f64,
    sites: Vec<usize>,
    outcome: usize,
}

fn max_sites(d: usize) -> usize {
    match d {
        2 => 8,
        3 => 6,
        _ => 5,
    }
}

fn draw(rng: &mut ChaCha8Rng, check: Check, index: usize) -> Case {
    let d = rng.random_range(2..=4);
    let n = rng.random_range(2..=max_sites(d));
    let alpha = rng.random_range(0.0..5.0);
    let t = rng.random_range(0.0..2.0 * PI);
    let k = match check {
        Check::Rdm => rng.random_range(1..=n.min(4)),
        Check::MutualInformation => 2,
        _ => 1,
    };
    let mut sites: Vec<usize> = sample(rng, n, k).into_iter().map(|i| i + 1).collect();
    sites.sort_unstable();
    let outcome = rng.random_range(0..d);
    Case { check, index, n, d, alpha, t, sites, outcome }
}

/// Absolute deviation of one case from its oracle.
fn evaluate(c: &Case) -> Result<f64, WgsError> {
    let model = PhaseModel::new(ChainSpec::new(c.n, c.d, c.alpha)?, c.t)?;
    match c.check {
        Check::Rdm => {
            let sub = SubsystemSpec::new(*model.chain(), c.sites.clone())?;
            let exact = partial_trace(&build_state(&model)?, &c.sites)?;
            Ok(build_rdm(&model, &sub)?.max_abs_diff(&exact))
        }
        Check::MutualInformation => {
            let state = build_state(&model)?;
            let s = |sites: &[usize]| -> Result<f64, WgsError> { Ok(entropy(&spectrum(&partial_trace(&state, sites)?)?)) };
            let (i, j) = (c.sites[0], c.sites[1]);
            let exact = s(&[i])? + s(&[j])? - s(&[i, j])?;
            Ok((mutual_information_pair(&model, i, j)? - exact).abs())
        }
        Check::Ggm => Ok((ggm_all_cuts(&model)? - exact_ggm(&build_state(&model)?)?).abs()),
        Check::Reduction => {
            let k = c.sites[0];
            let r = measure_reduce(&build_state(&model)?, k, c.outcome)?;
            let rest: Vec<usize> = (1..=c.n).filter(|&s| s != k).collect();
            let expected = build_state_on(&model, &rest, usize::MAX)?;
            let p_err = (r.probability - 1.0 / c.d as f64).abs();
            let got = r.undo_local_phases();
            let entry_err = got
                .amplitudes()
                .iter()
                .zip(expected.amplitudes())
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            Ok(entry_err.max(p_err))
        }
        Check::Subadditivity => {
            let len = c.n - 1;
            let sub = if len % 2 == 0 { 2 } else { 1 };
            Ok((block_entropy(&model, len)? - u_l_bound(&model, len, sub)?).max(0.0))
        }
    }
}

pub fn run(cfg: &SweepConfig) -> Result<Outcome, WgsError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let minor = (cfg.cases / 4).max(1);
    let mut cases = Vec::new();
    for (check, count) in [
        (Check::Rdm, cfg.cases),
        (Check::MutualInformation, minor),
        (Check::Ggm, minor),
        (Check::Reduction, minor),
        (Check::Subadditivity, minor),
    ] {
        for i in 0..count {
            cases.push(draw(&mut rng, check, i));
        }
    }
    let errors: Vec<Result<f64, WgsError>> = cases.par_iter().map(evaluate).collect();

    let mut table = ResultTable::new(
        &["check", "case", "N", "d", "alpha", "t", "sites", "deviation", "pass"],
        2,
    );
    let mut failures = 0usize;
    let mut worst = 0.0f64;
    for (c, e) in cases.iter().zip(errors) {
        let e = e?;
        let pass = e <= TOLERANCE;
        failures += usize::from(!pass);
        worst = worst.max(e);
        let sites = c.sites.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ");
        table.push(vec![
            c.check.name().into(),
            c.index.into(),
            c.n.into(),
            c.d.into(),
            c.alpha.into(),
            c.t.into(),
            sites.as_str().into(),
            e.into(),
            pass.into(),
        ]);
    }
    table.sort();
    let mut out = Outcome {
        table,
        derived: Default::default(),
        unconverged: Vec::new(),
        status: Status::Complete,
    };
    out.derived.insert(
        "validation".into(),
        json!({"cases": cases.len(), "failures": failures, "max_deviation": worst, "tolerance": TOLERANCE}),
    );
    if failures > 0 {
        out.status = Status::Failed(format!("{failures} of {} oracle checks exceeded {TOLERANCE:e}", cases.len()));
    }
    Ok(out)
}
