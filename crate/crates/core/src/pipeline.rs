//! End-to-end solver: normalization, hierarchy, selection, reconstruction,
//! rounding, and pull-back to the input instance.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::assign::flow::FlowNetwork;
use crate::assign::{finalize_matching, reconstruct, FinalizeReport, LevelRecord};
use crate::error::{Error, Result};
use crate::hierarchy::certify;
use crate::instance::{size_classes, validate, Hypergraph};
use crate::matching::{verify, MatchEntry, RelaxedMatching};
use crate::params::{log_n, PipelineParams};
use crate::preprocess::{
    duplicate_to_regular, normalize, regularize_degree, solve_matching_lp, Processed, Regularization,
};
use crate::rational::Alpha;
use crate::rng;
use crate::select::{check_selection_bound, moser_tardos};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceSummary {
    pub m: usize,
    pub n: usize,
    pub configs: usize,
}

impl InstanceSummary {
    fn of(h: &Hypergraph) -> Self {
        InstanceSummary { m: h.m(), n: h.n(), configs: h.configs.len() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HierarchySummary {
    pub certified: bool,
    pub attempts: usize,
    pub level_sizes: Vec<usize>,
    pub size_violations: usize,
    pub overlap_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionSummary {
    pub converged: bool,
    pub rounds: usize,
    pub max_rounds: usize,
    pub events: usize,
    pub violated: usize,
    pub chosen: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSummary {
    pub constant: u64,
    pub passed: bool,
    pub checked: usize,
    pub worst_ratio: f64,
    pub violators: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttemptReport {
    pub attempt: usize,
    pub seed: u64,
    pub hierarchy: HierarchySummary,
    pub selection: SelectionSummary,
    pub selection_bound: BoundSummary,
    pub chosen_bound: BoundSummary,
    pub levels: Vec<LevelRecord>,
    pub sandwich_holds: bool,
    pub max_load: u64,
    pub finalize: Option<FinalizeReport>,
    /// `ok`, or the error that ended the attempt.
    pub outcome: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub seed: u64,
    pub input: InstanceSummary,
    pub processed: InstanceSummary,
    pub regularization: Regularization,
    pub ell: usize,
    pub d: usize,
    pub class_counts: BTreeMap<usize, usize>,
    pub gamma: u64,
    /// `max(eps_min, (1 - 1/ln n)^(2d))`, the worst lift retention factor.
    pub lift_factor: f64,
    pub eps_min_binds: bool,
    pub attempts: Vec<AttemptReport>,
    pub fallback_used: bool,
    pub achieved_alpha: Alpha,
    pub verified: bool,
}

/// Solves `h` and returns a verified matching with its report.
pub fn solve(h: &Hypergraph, params: &PipelineParams, seed: u64) -> Result<(RelaxedMatching, SolveReport)> {
    run(h, params, seed, false)
}

/// Like [`solve`], but always routes through the LP and duplication, even
/// for instances that are already regular.
pub fn approx_solve(h: &Hypergraph, params: &PipelineParams, seed: u64) -> Result<(RelaxedMatching, SolveReport)> {
    run(h, params, seed, true)
}

fn prepare(h: &Hypergraph, params: &PipelineParams, seed: u64, force_lp: bool) -> Result<Processed> {
    if !force_lp {
        return normalize(h, params, seed);
    }
    validate(h)?;
    let x = solve_matching_lp(h).map_err(|_| Error::NoPerfectMatching)?;
    let base = duplicate_to_regular(h, &x, params.blowup_cap)?;
    let next = regularize_degree(&base.hypergraph, params, rng::derive(seed, "preprocess"))?;
    Ok(base.then(next))
}

fn bound_summary(r: &crate::select::BoundReport) -> BoundSummary {
    BoundSummary {
        constant: r.constant,
        passed: r.passed(),
        checked: r.checked,
        worst_ratio: r.worst_ratio,
        violators: r.violators.len(),
    }
}

fn run(h: &Hypergraph, params: &PipelineParams, seed: u64, force_lp: bool) -> Result<(RelaxedMatching, SolveReport)> {
    params.check()?;
    let processed = prepare(h, params, seed, force_lp)?;
    let hp = &processed.hypergraph;
    let ell = processed.ell;
    let idx = size_classes(hp, ell);
    let gamma = params.resolve_gamma(idx.d, ell);
    let ln_n = log_n(hp.n());
    let raw_factor = (1.0 - 1.0 / ln_n).powi(2 * idx.d as i32);
    let max_rounds = params.max_rounds.unwrap_or(10 * hp.m());

    let mut attempts = Vec::new();
    let mut found = None;
    for a in 0..params.solve_attempts.max(1) {
        let s = rng::derive_indexed(seed, "solve/attempt", a as u64);
        let cert = certify(
            hp,
            &idx,
            rng::derive(s, "hierarchy"),
            params.hierarchy_retries,
            &params.slack,
            params.constants.c_overlap,
        );
        let hier = &cert.hierarchy;
        let (sel, sel_rep) = moser_tardos(hp, &idx, hier, &params.constants, rng::derive(s, "select"), max_rounds);
        let all = check_selection_bound(hp, &idx, hier, &sel, params.constants.c_selection, false);
        let chosen = check_selection_bound(hp, &idx, hier, &sel, params.constants.c_claim, true);
        let mut report = AttemptReport {
            attempt: a,
            seed: s,
            hierarchy: HierarchySummary {
                certified: cert.certified,
                attempts: cert.attempts,
                level_sizes: hier.level_sizes(),
                size_violations: cert.size_report.violators.len(),
                overlap_violations: cert.overlap_report.violators.len(),
            },
            selection: SelectionSummary {
                converged: sel_rep.converged,
                rounds: sel_rep.rounds,
                max_rounds: sel_rep.max_rounds,
                events: sel_rep.events,
                violated: sel_rep.violated.len(),
                chosen: sel.chosen.clone(),
            },
            selection_bound: bound_summary(&all),
            chosen_bound: bound_summary(&chosen),
            levels: Vec::new(),
            sandwich_holds: true,
            max_load: 0,
            finalize: None,
            outcome: "ok".into(),
        };
        let rec = match reconstruct(hp, &idx, hier, &sel, gamma, rng::derive(s, "assign")) {
            Ok(rec) => rec,
            Err(e @ Error::LiftCollapsed { .. }) => {
                report.outcome = e.to_string();
                attempts.push(report);
                continue;
            }
            Err(e) => return Err(e),
        };
        report.sandwich_holds = rec.sandwich_holds();
        report.max_load = rec.assignment.max_load();
        report.levels = rec.levels.clone();
        match finalize_matching(hp, &sel, &rec.assignment, gamma, params.constants.c_final) {
            Ok((sol, fin)) => {
                report.finalize = Some(fin);
                attempts.push(report);
                found = Some(sol);
                break;
            }
            Err(e @ Error::FinalizeInfeasible { .. }) => {
                report.outcome = e.to_string();
                attempts.push(report);
            }
            Err(e) => return Err(e),
        }
    }

    let fallback_used = found.is_none();
    let sol = match found {
        Some(sol) => processed.pull_back(h, &sol),
        None => hall_matching(h)?,
    };
    let check = verify(h, &sol, sol.achieved_alpha);
    if !check.accepted {
        return Err(Error::MalformedSolution(format!("pipeline output rejected: {:?}", check.violations)));
    }
    let report = SolveReport {
        seed,
        input: InstanceSummary::of(h),
        processed: InstanceSummary::of(hp),
        regularization: processed.regularization.clone(),
        ell,
        d: idx.d,
        class_counts: idx.class_counts(),
        gamma,
        lift_factor: raw_factor.max(params.eps_min),
        eps_min_binds: raw_factor < params.eps_min,
        attempts,
        fallback_used,
        achieved_alpha: sol.achieved_alpha,
        verified: check.accepted,
    };
    Ok((sol, report))
}

/// One resource per player through a bipartite matching on the union of each
/// player's configurations; the configuration containing the matched
/// resource is chosen.
pub fn hall_matching(h: &Hypergraph) -> Result<RelaxedMatching> {
    let configs_of = h.configs_of();
    let adjacency: Vec<Vec<usize>> = configs_of
        .iter()
        .map(|own| {
            let mut rs: Vec<usize> = own.iter().flat_map(|&c| h.configs[c].resources.iter().copied()).collect();
            rs.sort_unstable();
            rs.dedup();
            rs
        })
        .collect();
    let net = FlowNetwork::new((0..h.m()).collect(), adjacency, vec![1; h.m()], 1);
    let res = net.max_flow();
    if res.value != net.demand() {
        return Err(Error::NoPerfectMatching);
    }
    let entries = res
        .routed
        .iter()
        .enumerate()
        .map(|(v, kept)| {
            let r = kept[0];
            let config = *configs_of[v].iter().find(|&&c| h.configs[c].contains(r)).expect("r comes from a config of v");
            MatchEntry { player: v, config, kept: vec![r] }
        })
        .collect();
    Ok(RelaxedMatching::new(h, entries))
}
