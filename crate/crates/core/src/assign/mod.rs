//! Good assignments of resources to configurations via flow networks, the
//! per-level lifting step, the reconstruction induction and the final
//! integral matching.

pub mod finalize;
pub mod flow;
pub mod reconstruct;

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hierarchy::ResourceHierarchy;
use crate::instance::Hypergraph;
use crate::params::log_n;
use flow::FlowNetwork;

pub use finalize::{finalize_matching, min_alpha_on, FinalizeReport};
pub use reconstruct::{reconstruct, LevelRecord, Reconstruction};

/// Resources held per configuration, with a common load cap.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GoodAssignment {
    pub holdings: BTreeMap<usize, Vec<usize>>,
    pub gamma: u64,
}

impl GoodAssignment {
    pub fn empty(gamma: u64) -> Self {
        GoodAssignment { holdings: BTreeMap::new(), gamma }
    }

    pub fn held(&self, c: usize) -> &[usize] {
        self.holdings.get(&c).map_or(&[], Vec::as_slice)
    }

    /// Number of configurations holding each resource (absent means zero).
    pub fn loads(&self) -> BTreeMap<usize, u64> {
        let mut loads = BTreeMap::new();
        for held in self.holdings.values() {
            for &r in held {
                *loads.entry(r).or_insert(0) += 1;
            }
        }
        loads
    }

    pub fn max_load(&self) -> u64 {
        self.loads().values().copied().max().unwrap_or(0)
    }

    /// Holdings are sorted subsets of their configuration restricted to
    /// `level`, and no load exceeds `gamma`.
    pub fn is_valid(&self, h: &Hypergraph, hier: &ResourceHierarchy, level: usize) -> bool {
        self.holdings.iter().all(|(&c, held)| {
            held.windows(2).all(|w| w[0] < w[1])
                && held.iter().all(|&r| h.configs[c].contains(r) && hier.contains(level, r))
        }) && self.max_load() <= self.gamma
    }
}

/// A subfamily whose flow value falls short of its demand.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Deficiency {
    pub witness: Vec<usize>,
    pub flow: u64,
    pub demand: u64,
}

/// Looks for an assignment giving every `C` in `family` at least
/// `floor((1 - epsilon) alpha(C))` resources of `C ∩ R'` with load at most
/// `gamma`. `R'` is given by `allowed`. On failure the configurations on the
/// source side of a minimum cut form a deficient subfamily.
pub fn good_assignment(
    h: &Hypergraph,
    family: &[usize],
    allowed: &dyn Fn(usize) -> bool,
    alpha: &[u64],
    gamma: u64,
    epsilon: &BigRational,
) -> std::result::Result<GoodAssignment, Deficiency> {
    let keep = BigRational::one() - epsilon;
    let reduced: Vec<u64> = alpha
        .iter()
        .map(|&a| (&keep * BigRational::from_integer(a.into())).floor().to_integer().to_u64().unwrap_or(0))
        .collect();
    let adjacency = family
        .iter()
        .map(|&c| h.configs[c].resources.iter().copied().filter(|&r| allowed(r)).collect())
        .collect();
    let net = FlowNetwork::new(family.to_vec(), adjacency, reduced, gamma);
    let res = net.max_flow();
    if res.value == net.demand() {
        let holdings = family.iter().copied().zip(res.routed).collect();
        return Ok(GoodAssignment { holdings, gamma });
    }
    let witness: Vec<usize> = res.cut_configs.iter().map(|&p| family[p]).collect();
    let sub = net.restrict(&res.cut_configs);
    Err(Deficiency { witness, flow: sub.max_flow().value, demand: sub.demand() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiftRecord {
    pub level: usize,
    /// `floor(ell / (1 + 0.5/ln n))`.
    pub target_multiplier: u64,
    pub achieved_multiplier: u64,
    pub attempts: usize,
}

/// Moves an assignment on `R_{k+1}` to `R_k`, multiplying every holding
/// size by the largest multiplier that remains feasible.
///
/// The target is `floor(ell / (1 + 0.5/ln n))`; on failure the multiplier
/// decays geometrically by `max(1/2, 1 - 1/ln n)` down to 1, which is always
/// feasible because `R_{k+1} ⊆ R_k`.
pub fn lift_assignment(
    h: &Hypergraph,
    prev: &GoodAssignment,
    hier: &ResourceHierarchy,
    level: usize,
) -> Result<(GoodAssignment, LiftRecord)> {
    let ell = hier.ell.max(1) as u64;
    let ln_n = log_n(h.n());
    let target = ((ell as f64) / (1.0 + 0.5 / ln_n)).floor().max(1.0) as u64;
    if ell == 1 || prev.holdings.is_empty() {
        let rec = LiftRecord { level, target_multiplier: target, achieved_multiplier: 1, attempts: 0 };
        return Ok((prev.clone(), rec));
    }
    let decay = (1.0 - 1.0 / ln_n).max(0.5);
    let mut multipliers = vec![target];
    let mut t = 1;
    loop {
        let next = ((target as f64) * decay.powi(t)).floor() as u64;
        let next = next.min(multipliers.last().unwrap() - 1).max(1);
        if *multipliers.last().unwrap() == 1 {
            break;
        }
        multipliers.push(next);
        t += 1;
    }
    let family: Vec<usize> = prev.holdings.keys().copied().collect();
    let allowed = |r: usize| hier.contains(level, r);
    for (attempt, &mult) in multipliers.iter().enumerate() {
        let alpha: Vec<u64> = family.iter().map(|c| mult * prev.held(*c).len() as u64).collect();
        if let Ok(next) = good_assignment(h, &family, &allowed, &alpha, prev.gamma, &BigRational::zero()) {
            let rec = LiftRecord { level, target_multiplier: target, achieved_multiplier: mult, attempts: attempt + 1 };
            return Ok((next, rec));
        }
    }
    Err(Error::LiftCollapsed { level })
}
