//! Rounding a load-capped assignment to disjoint kept sets.

use serde::Serialize;

use super::flow::FlowNetwork;
use super::GoodAssignment;
use crate::error::{Error, Result};
use crate::instance::Hypergraph;
use crate::matching::{MatchEntry, RelaxedMatching};
use crate::rational::Alpha;
use crate::select::Selection;

/// Smallest `alpha` such that every family member `i` can keep
/// `ceil(sizes[i] / alpha)` of its `adjacency[i]`, pairwise disjoint. Only
/// the ratios `size / t` need testing, since the demands change nowhere
/// else. Returns the optimum with its kept sets, or the configurations of a
/// deficient subfamily when even one resource each is impossible.
pub fn min_alpha_on(
    family: &[usize],
    sizes: &[usize],
    adjacency: &[Vec<usize>],
) -> std::result::Result<(Alpha, Vec<Vec<usize>>), Vec<usize>> {
    let feasible = |alpha: Alpha| {
        let demand: Vec<u64> = sizes.iter().map(|&s| alpha.demand(s) as u64).collect();
        let net = FlowNetwork::new(family.to_vec(), adjacency.to_vec(), demand, 1);
        let res = net.max_flow();
        if res.value == net.demand() {
            Ok(res.routed)
        } else {
            Err(res.cut_configs.iter().map(|&p| family[p]).collect::<Vec<_>>())
        }
    };
    let mut grid: Vec<Alpha> = sizes
        .iter()
        .zip(adjacency)
        .flat_map(|(&s, adj)| (1..=s.min(adj.len()).max(1)).map(move |t| Alpha::ratio(s, t)))
        .collect();
    grid.sort();
    grid.dedup();
    let Some(&top) = grid.last() else {
        return Ok((Alpha::one(), Vec::new()));
    };
    let mut best = {
        let routed = feasible(top)?;
        (top, routed)
    };
    let (mut lo, mut hi) = (0usize, grid.len() - 1);
    // invariant: grid[hi] is feasible
    while lo < hi {
        let mid = (lo + hi) / 2;
        match feasible(grid[mid]) {
            Ok(routed) => {
                best = (grid[mid], routed);
                hi = mid;
            }
            Err(_) => lo = mid + 1,
        }
    }
    if best.0 != grid[hi] {
        best = (grid[hi], feasible(grid[hi]).expect("feasible by search"));
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinalizeReport {
    /// Whether the demands `floor(|C| / (c_final gamma))` were all positive
    /// and met simultaneously.
    pub nominal_demands_met: bool,
    /// Smallest nominal demand over the chosen configurations.
    pub min_nominal_demand: u64,
    pub achieved_alpha: Alpha,
}

/// Turns the reconstructed assignment into disjoint kept sets: each chosen
/// `C` may only keep resources it holds, and each resource goes to one
/// configuration.
///
/// Whether the nominal demands `floor(|C| / (c_final gamma))` can all be met
/// is reported; the kept sets come from the best feasible demands over the
/// `alpha` grid, which also covers small instances where the nominal demand
/// rounds to zero.
pub fn finalize_matching(
    h: &Hypergraph,
    sel: &Selection,
    assignment: &GoodAssignment,
    gamma: u64,
    c_final: u64,
) -> Result<(RelaxedMatching, FinalizeReport)> {
    let family = sel.chosen.clone();
    let sizes: Vec<usize> = family.iter().map(|&c| h.configs[c].size()).collect();
    let adjacency: Vec<Vec<usize>> = family.iter().map(|&c| assignment.held(c).to_vec()).collect();

    let nominal: Vec<u64> = sizes.iter().map(|&s| s as u64 / (c_final * gamma)).collect();
    let min_nominal_demand = nominal.iter().copied().min().unwrap_or(0);
    let nominal_demands_met = min_nominal_demand > 0 && {
        let net = FlowNetwork::new(family.clone(), adjacency.clone(), nominal, 1);
        net.max_flow().value == net.demand()
    };

    // nominal demands are at least one each when met, so they are never
    // better than the grid optimum
    let (_, kept) = min_alpha_on(&family, &sizes, &adjacency)
        .map_err(|deficient| Error::FinalizeInfeasible { deficient })?;
    let entries = family
        .iter()
        .enumerate()
        .zip(kept)
        .map(|((player, &config), kept)| MatchEntry { player, config, kept })
        .collect();
    let sol = RelaxedMatching::new(h, entries);
    let report = FinalizeReport { nominal_demands_met, min_nominal_demand, achieved_alpha: sol.achieved_alpha };
    Ok((sol, report))
}
