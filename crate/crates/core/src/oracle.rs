//! Exact optimum on small instances, by flow feasibility per selection and
//! exhaustive enumeration of selections.

use rayon::prelude::*;
use serde::Serialize;

use crate::assign::min_alpha_on;
use crate::error::{Error, Result};
use crate::instance::Hypergraph;
use crate::matching::{MatchEntry, RelaxedMatching};
use crate::rational::Alpha;

pub const DEFAULT_MAX_SELECTIONS: u128 = 1_000_000;

/// Optimal matching with the configuration of every player fixed by
/// `chosen`, or `None` when some configuration cannot keep even one
/// resource (the optimum is then unbounded).
pub fn optimal_for_selection(h: &Hypergraph, chosen: &[usize]) -> Option<RelaxedMatching> {
    let sizes: Vec<usize> = chosen.iter().map(|&c| h.configs[c].size()).collect();
    let adjacency: Vec<Vec<usize>> = chosen.iter().map(|&c| h.configs[c].resources.clone()).collect();
    let (_, kept) = min_alpha_on(chosen, &sizes, &adjacency).ok()?;
    let entries = chosen
        .iter()
        .enumerate()
        .zip(kept)
        .map(|((player, &config), kept)| MatchEntry { player, config, kept })
        .collect();
    Some(RelaxedMatching::new(h, entries))
}

pub fn min_alpha_for_selection(h: &Hypergraph, chosen: &[usize]) -> Alpha {
    optimal_for_selection(h, chosen).map_or(Alpha::Unbounded, |s| s.achieved_alpha)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub alpha: Alpha,
    pub selections: u128,
    /// An optimal selection and matching, absent when every selection is
    /// unbounded.
    pub chosen: Option<Vec<usize>>,
    pub solution: Option<RelaxedMatching>,
}

pub fn selection_count(h: &Hypergraph) -> u128 {
    h.configs_of().iter().fold(1u128, |acc, own| acc.saturating_mul(own.len() as u128))
}

/// Minimum of [`min_alpha_for_selection`] over all selections. Ties go to
/// the lexicographically first selection, so the result is deterministic
/// regardless of thread count.
pub fn brute_force_min_alpha(h: &Hypergraph, max_selections: u128) -> Result<OracleResult> {
    let configs_of = h.configs_of();
    let total = selection_count(h);
    if total > max_selections {
        return Err(Error::TooLarge { selections: total, limit: max_selections });
    }
    if total == 0 {
        // some player has no configuration at all
        return Ok(OracleResult { alpha: Alpha::Unbounded, selections: 0, chosen: None, solution: None });
    }
    let decode = |mut code: u128| -> Vec<usize> {
        let mut chosen = vec![0; configs_of.len()];
        for p in (0..configs_of.len()).rev() {
            let base = configs_of[p].len() as u128;
            chosen[p] = configs_of[p][(code % base) as usize];
            code /= base;
        }
        chosen
    };
    let best = (0..total as u64)
        .into_par_iter()
        .map(|code| (min_alpha_for_selection(h, &decode(code as u128)), code))
        .min()
        .expect("at least one selection");
    let (alpha, code) = best;
    let (chosen, solution) = if alpha.is_finite() {
        let chosen = decode(code as u128);
        let solution = optimal_for_selection(h, &chosen);
        (Some(chosen), solution)
    } else {
        (None, None)
    };
    Ok(OracleResult { alpha, selections: total, chosen, solution })
}
