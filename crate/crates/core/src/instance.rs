//! Bipartite hypergraph instances.
//!
//! Players and resources are addressed by dense indices; string ids are kept
//! only for I/O. Configurations form a multiset: two configurations with the
//! same content are still distinct entries, identified by position.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One hyperedge: exactly one player plus a nonempty set of resources.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    pub player: usize,
    /// Sorted, distinct resource indices.
    pub resources: Vec<usize>,
}

impl Configuration {
    pub fn new(player: usize, mut resources: Vec<usize>) -> Self {
        resources.sort_unstable();
        resources.dedup();
        Configuration { player, resources }
    }

    /// Number of resources; the player vertex is not counted.
    pub fn size(&self) -> usize {
        self.resources.len()
    }

    pub fn contains(&self, r: usize) -> bool {
        self.resources.binary_search(&r).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypergraph {
    pub players: Vec<String>,
    pub resources: Vec<String>,
    pub configs: Vec<Configuration>,
}

impl Hypergraph {
    /// Builds and checks an instance.
    pub fn new(players: Vec<String>, resources: Vec<String>, configs: Vec<Configuration>) -> Result<Self> {
        let h = Hypergraph { players, resources, configs };
        check_structure(&h)?;
        Ok(h)
    }

    /// Convenience constructor with ids `p0..` and `r0..`.
    pub fn with_counts(m: usize, n: usize, configs: Vec<Configuration>) -> Result<Self> {
        Hypergraph::new(
            (0..m).map(|i| format!("p{i}")).collect(),
            (0..n).map(|j| format!("r{j}")).collect(),
            configs,
        )
    }

    pub fn m(&self) -> usize {
        self.players.len()
    }

    pub fn n(&self) -> usize {
        self.resources.len()
    }

    /// Configuration indices per player, in index order.
    pub fn configs_of(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.m()];
        for (c, cfg) in self.configs.iter().enumerate() {
            out[cfg.player].push(c);
        }
        out
    }

    /// Configuration indices per resource.
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n()];
        for (c, cfg) in self.configs.iter().enumerate() {
            for &r in &cfg.resources {
                out[r].push(c);
            }
        }
        out
    }

    pub fn max_config_size(&self) -> usize {
        self.configs.iter().map(Configuration::size).max().unwrap_or(0)
    }

    /// Returns a copy with players and resources renamed by the given
    /// permutations (`perm[old] = new`).
    pub fn relabel(&self, player_perm: &[usize], resource_perm: &[usize]) -> Hypergraph {
        let mut players = vec![String::new(); self.m()];
        for (old, &new) in player_perm.iter().enumerate() {
            players[new] = self.players[old].clone();
        }
        let mut resources = vec![String::new(); self.n()];
        for (old, &new) in resource_perm.iter().enumerate() {
            resources[new] = self.resources[old].clone();
        }
        let configs = self
            .configs
            .iter()
            .map(|c| {
                Configuration::new(
                    player_perm[c.player],
                    c.resources.iter().map(|&r| resource_perm[r]).collect(),
                )
            })
            .collect();
        Hypergraph { players, resources, configs }
    }
}

fn check_structure(h: &Hypergraph) -> Result<()> {
    if h.players.is_empty() {
        return Err(Error::MalformedInstance("no players".into()));
    }
    if h.resources.is_empty() {
        return Err(Error::MalformedInstance("no resources".into()));
    }
    let mut seen = HashSet::new();
    for id in h.players.iter().chain(h.resources.iter()) {
        if !seen.insert(id.as_str()) {
            return Err(Error::MalformedInstance(format!("duplicate vertex id {id:?}")));
        }
    }
    for (c, cfg) in h.configs.iter().enumerate() {
        if cfg.player >= h.m() {
            return Err(Error::MalformedInstance(format!("configuration {c} references unknown player")));
        }
        if cfg.resources.is_empty() {
            return Err(Error::MalformedInstance(format!("configuration {c} has no resources")));
        }
        if cfg.resources.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::MalformedInstance(format!(
                "configuration {c} resources not sorted and distinct"
            )));
        }
        if cfg.resources.last().is_some_and(|&r| r >= h.n()) {
            return Err(Error::MalformedInstance(format!("configuration {c} references unknown resource")));
        }
    }
    Ok(())
}

/// Degree counts and the regularity flag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DegreeProfile {
    pub player_degree: Vec<usize>,
    pub resource_degree: Vec<usize>,
    /// The common player degree, when all players agree.
    pub ell: Option<usize>,
    pub is_regular: bool,
}

impl DegreeProfile {
    pub fn max_resource_degree(&self) -> usize {
        self.resource_degree.iter().copied().max().unwrap_or(0)
    }
}

/// Checks the instance invariants and computes its degree profile.
///
/// The instance is regular when every player has the same degree `ell` and
/// no resource appears in more than `ell` configurations.
pub fn validate(h: &Hypergraph) -> Result<DegreeProfile> {
    check_structure(h)?;
    let mut player_degree = vec![0usize; h.m()];
    let mut resource_degree = vec![0usize; h.n()];
    for cfg in &h.configs {
        player_degree[cfg.player] += 1;
        for &r in &cfg.resources {
            resource_degree[r] += 1;
        }
    }
    let first = player_degree[0];
    let ell = player_degree.iter().all(|&d| d == first).then_some(first);
    let is_regular = match ell {
        Some(l) => l >= 1 && resource_degree.iter().all(|&d| d <= l),
        None => false,
    };
    Ok(DegreeProfile { player_degree, resource_degree, ell, is_regular })
}

/// Assignment of configurations to geometric size classes.
///
/// Class 0 holds sizes in `[1, ell^4)`; class `k >= 1` holds
/// `[ell^(k+3), ell^(k+4))`. `d` is the smallest index with no configuration
/// of class `>= d`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeClassIndex {
    pub ell: usize,
    pub class_of: Vec<usize>,
    pub d: usize,
}

impl SizeClassIndex {
    /// Configurations of class exactly `k`.
    pub fn members(&self, k: usize) -> Vec<usize> {
        self.class_of
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == k)
            .map(|(i, _)| i)
            .collect()
    }

    /// Configurations of class `>= k`.
    pub fn at_least(&self, k: usize) -> Vec<usize> {
        self.class_of
            .iter()
            .enumerate()
            .filter(|(_, &c)| c >= k)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn class_counts(&self) -> BTreeMap<usize, usize> {
        let mut out = BTreeMap::new();
        for &k in &self.class_of {
            *out.entry(k).or_insert(0) += 1;
        }
        out
    }
}

/// Class of a configuration with `size` resources.
///
/// With `ell < 2` every interval degenerates; all sizes go to class 0.
pub fn size_class(size: usize, ell: usize) -> usize {
    if ell < 2 {
        return 0;
    }
    let ell = ell as u128;
    let size = size as u128;
    let mut upper = ell.saturating_pow(4);
    let mut k = 0;
    while size >= upper {
        k += 1;
        upper = upper.saturating_mul(ell);
    }
    k
}

pub fn size_classes(h: &Hypergraph, ell: usize) -> SizeClassIndex {
    let class_of: Vec<usize> = h.configs.iter().map(|c| size_class(c.size(), ell)).collect();
    let d = class_of.iter().map(|&k| k + 1).max().unwrap_or(0);
    SizeClassIndex { ell, class_of, d }
}
