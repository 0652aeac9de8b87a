//! Instance generators: the small-edge counter-example family and random
//! regular hypergraphs.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Configuration, Hypergraph};
use crate::matching::{MatchEntry, RelaxedMatching};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Counterexample { k: usize },
    RandomRegular { m: usize, ell: usize, size_min: usize, size_max: usize, seed: u64 },
    UniformRegular { m: usize, ell: usize, size: usize, seed: u64 },
}

pub fn generate(spec: &GeneratorSpec) -> Result<Hypergraph> {
    match *spec {
        GeneratorSpec::Counterexample { k } => gen_counterexample(k),
        GeneratorSpec::RandomRegular { m, ell, size_min, size_max, seed } => {
            gen_random_regular(m, ell, size_min..=size_max, seed)
        }
        GeneratorSpec::UniformRegular { m, ell, size, seed } => gen_uniform_regular(m, ell, size, seed),
    }
}

/// Regular instance with no `alpha`-relaxed perfect matching below `alpha = k`.
///
/// A top player owns one configuration per group, made of that group's `k`
/// private resources. Each of the `k` groups has `k` players; a group player
/// owns `k-1` parallel copies of `{private}` plus `{shared}`, where `shared`
/// is the group's common resource. Every vertex has degree `k`.
pub fn gen_counterexample(k: usize) -> Result<Hypergraph> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("counter-example needs k >= 2, got {k}")));
    }
    let mut players = vec!["top".to_string()];
    let mut resources = Vec::new();
    for g in 0..k {
        for i in 0..k {
            players.push(format!("g{g}p{i}"));
            resources.push(format!("g{g}r{i}"));
        }
        resources.push(format!("g{g}s"));
    }
    let player = |g: usize, i: usize| 1 + g * k + i;
    let private = |g: usize, i: usize| g * (k + 1) + i;
    let shared = |g: usize| g * (k + 1) + k;

    let mut configs = Vec::new();
    for g in 0..k {
        configs.push(Configuration::new(0, (0..k).map(|i| private(g, i)).collect()));
    }
    for g in 0..k {
        for i in 0..k {
            for _ in 0..k - 1 {
                configs.push(Configuration::new(player(g, i), vec![private(g, i)]));
            }
            configs.push(Configuration::new(player(g, i), vec![shared(g)]));
        }
    }
    Hypergraph::new(players, resources, configs)
}

/// The `alpha = k` solution of the counter-example: the top player keeps one
/// private resource of group 0, whose owner moves to the shared resource.
pub fn counterexample_witness(h: &Hypergraph, k: usize) -> RelaxedMatching {
    let player = |g: usize, i: usize| 1 + g * k + i;
    let private = |g: usize, i: usize| g * (k + 1) + i;
    let configs_of = h.configs_of();
    let mut entries = vec![MatchEntry { player: 0, config: configs_of[0][0], kept: vec![private(0, 0)] }];
    for g in 0..k {
        for i in 0..k {
            let p = player(g, i);
            // the last configuration of each group player is the shared one
            let cfg = if g == 0 && i == 0 { *configs_of[p].last().unwrap() } else { configs_of[p][0] };
            entries.push(MatchEntry { player: p, config: cfg, kept: h.configs[cfg].resources.clone() });
        }
    }
    RelaxedMatching::new(h, entries)
}

/// Random instance where each player has exactly `ell` configurations with
/// sizes drawn uniformly from `sizes`, and no resource exceeds degree `ell`.
///
/// The resource count is the smallest that can host all incidences,
/// `max(ceil(sum |C| / ell), max |C|)`. Configurations are filled largest
/// first, each taking the resources with the most remaining capacity, ties
/// broken by a fresh random key. This greedy realizes any feasible degree
/// sequence, so no rejection loop is needed.
pub fn gen_random_regular(
    m: usize,
    ell: usize,
    sizes: std::ops::RangeInclusive<usize>,
    seed: u64,
) -> Result<Hypergraph> {
    let (lo, hi) = (*sizes.start(), *sizes.end());
    if m == 0 || ell == 0 {
        return Err(Error::InvalidParameter("need m >= 1 and ell >= 1".into()));
    }
    if lo == 0 || lo > hi {
        return Err(Error::InvalidParameter(format!("invalid size range {lo}..{hi}")));
    }
    let mut rng = rng::stream(seed, "instances/random_regular");

    // (player, size) per configuration slot
    let mut slots: Vec<(usize, usize)> = (0..m)
        .flat_map(|p| std::iter::repeat_n(p, ell))
        .map(|p| (p, rng.gen_range(lo..=hi)))
        .collect();
    let total: usize = slots.iter().map(|s| s.1).sum();
    let max_size = slots.iter().map(|s| s.1).max().unwrap_or(1);
    let n = total.div_ceil(ell).max(max_size);

    slots.shuffle(&mut rng);
    slots.sort_by_key(|s| std::cmp::Reverse(s.1));

    let mut residual = vec![ell; n];
    let mut order: Vec<usize> = (0..n).collect();
    let mut keys = vec![0u64; n];
    let mut configs = Vec::with_capacity(slots.len());
    for &(player, size) in &slots {
        for key in keys.iter_mut() {
            *key = rng.gen();
        }
        order.sort_by(|&a, &b| residual[b].cmp(&residual[a]).then(keys[a].cmp(&keys[b])));
        let chosen: Vec<usize> = order[..size].to_vec();
        if chosen.iter().any(|&r| residual[r] == 0) {
            return Err(Error::GenerationFailed(format!(
                "cannot place a configuration of size {size} under degree cap {ell}"
            )));
        }
        for &r in &chosen {
            residual[r] -= 1;
        }
        configs.push(Configuration::new(player, chosen));
    }
    // present configurations grouped by player, in draw order
    configs.sort_by_key(|c| c.player);
    Hypergraph::with_counts(m, n, configs)
}

pub fn gen_uniform_regular(m: usize, ell: usize, size: usize, seed: u64) -> Result<Hypergraph> {
    gen_random_regular(m, ell, size..=size, seed)
}
