//! Configuration selection: one uniformly random configuration per player,
//! repaired by Moser–Tardos resampling of the overlap bad events.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::hierarchy::ResourceHierarchy;
use crate::instance::{Hypergraph, SizeClassIndex};
use crate::params::Constants;
use crate::rational::{format_rational, int, ln_rational, serde_big};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    /// `chosen[i]` is the configuration index `K_i` of player `i`.
    pub chosen: Vec<usize>,
    /// Chosen configurations grouped by size class.
    pub class_partition: BTreeMap<usize, Vec<usize>>,
}

impl Selection {
    pub fn new(chosen: Vec<usize>, idx: &SizeClassIndex) -> Self {
        let mut class_partition: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &c in &chosen {
            class_partition.entry(idx.class_of[c]).or_default().push(c);
        }
        for v in class_partition.values_mut() {
            v.sort_unstable();
        }
        Selection { chosen, class_partition }
    }

    /// Configurations of class `k` among the chosen ones, `K^(k)`.
    pub fn class(&self, k: usize) -> &[usize] {
        self.class_partition.get(&k).map_or(&[], Vec::as_slice)
    }

    pub fn is_consistent(&self, h: &Hypergraph, idx: &SizeClassIndex) -> bool {
        self.chosen.len() == h.m()
            && self.chosen.iter().enumerate().all(|(i, &c)| c < h.configs.len() && h.configs[c].player == i)
            && *self == Selection::new(self.chosen.clone(), idx)
    }
}

/// Independent uniform choice per player.
pub fn initial_selection(h: &Hypergraph, idx: &SizeClassIndex, seed: u64) -> Selection {
    let mut rng = rng::stream(seed, "select/initial");
    let chosen = h.configs_of().iter().map(|own| own[rng.gen_range(0..own.len())]).collect();
    Selection::new(chosen, idx)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BadEvent {
    pub config: usize,
    /// Class `k` of the target configuration.
    pub class: usize,
    /// Level `h <= k`.
    pub level: usize,
    /// `|C ∩ R_h|`.
    pub size_on_level: usize,
    /// `X_C^(h)`.
    pub observed: u64,
    #[serde(with = "serde_big")]
    pub expectation: BigRational,
    #[serde(with = "serde_big")]
    pub threshold: BigRational,
    /// `exp(-|C ∩ R_h| / ell^9 - 18 ln ell)`, diagnostic only.
    pub lll_weight: f64,
    pub violated: bool,
}

impl BadEvent {
    fn score(&self) -> f64 {
        let t = self.threshold.to_f64().unwrap_or(f64::INFINITY);
        if t > 0.0 {
            self.observed as f64 / t
        } else {
            self.observed as f64
        }
    }
}

/// Per-target overlap sums against one selection.
struct Overlaps {
    /// `Σ_{C' ∈ class h} |C' ∩ C ∩ R_h|`.
    all: Vec<u64>,
    /// `Σ_{K ∈ K^(h)} |K ∩ C ∩ R_h|`.
    chosen: Vec<u64>,
    /// Expectation numerators keyed by owner degree.
    by_degree: Vec<BTreeMap<usize, u64>>,
}

/// Shared read-only context for evaluating events on one instance.
pub struct EventContext<'a> {
    h: &'a Hypergraph,
    idx: &'a SizeClassIndex,
    hier: &'a ResourceHierarchy,
    incidence: Vec<Vec<usize>>,
    degree: Vec<usize>,
    ln_ell: BigRational,
    c_lo: u64,
    c_hi: u64,
}

impl<'a> EventContext<'a> {
    pub fn new(h: &'a Hypergraph, idx: &'a SizeClassIndex, hier: &'a ResourceHierarchy, constants: &Constants) -> Self {
        let degree = h.configs_of().iter().map(Vec::len).collect();
        EventContext {
            h,
            idx,
            hier,
            incidence: h.incidence(),
            degree,
            ln_ell: ln_rational(idx.ell.max(1) as f64),
            c_lo: constants.c_alpha_lo,
            c_hi: constants.c_alpha_hi,
        }
    }

    fn overlaps(&self, c: usize, chosen_mask: &[bool]) -> Overlaps {
        let levels = self.idx.class_of[c] + 1;
        let mut o = Overlaps { all: vec![0; levels], chosen: vec![0; levels], by_degree: vec![BTreeMap::new(); levels] };
        for &r in &self.h.configs[c].resources {
            for &other in &self.incidence[r] {
                let k = self.idx.class_of[other];
                if k < levels && self.hier.depth[r] >= k {
                    o.all[k] += 1;
                    *o.by_degree[k].entry(self.degree[self.h.configs[other].player]).or_default() += 1;
                    if chosen_mask[other] {
                        o.chosen[k] += 1;
                    }
                }
            }
        }
        o
    }

    fn mask(&self, sel: &Selection) -> Vec<bool> {
        let mut mask = vec![false; self.h.configs.len()];
        for &c in &sel.chosen {
            mask[c] = true;
        }
        mask
    }

    /// All events `B_C^(h)` for `C` of class `k` and `h <= k`, ordered by
    /// `(k, config, h)`.
    pub fn evaluate(&self, sel: &Selection) -> Vec<BadEvent> {
        let mask = self.mask(sel);
        let ell = self.idx.ell.max(1);
        let mut order: Vec<usize> = (0..self.h.configs.len()).collect();
        order.sort_by_key(|&c| (self.idx.class_of[c], c));
        let mut events = Vec::new();
        for c in order {
            let k = self.idx.class_of[c];
            let o = self.overlaps(c, &mask);
            for level in 0..=k {
                let s = self.hier.count_in(&self.h.configs[c].resources, level);
                let expectation: BigRational = o.by_degree[level]
                    .iter()
                    .map(|(&deg, &cnt)| BigRational::new(BigInt::from(cnt), BigInt::from(deg)))
                    .fold(BigRational::zero(), |a, b| a + b);
                let slack = if level + 5 >= k {
                    int(self.c_lo) * int(s) * &self.ln_ell
                } else {
                    int(self.c_hi) * int(s) * &self.ln_ell / int(ell)
                };
                let threshold = &expectation + slack;
                let observed = o.chosen[level];
                let obs = int(observed);
                // with ell = 1 or an empty intersection the slack vanishes;
                // meeting the expectation exactly is not a deviation
                let violated = obs >= threshold && obs > expectation;
                let lll_weight = (-(s as f64) / (ell as f64).powi(9) - 18.0 * (ell as f64).ln()).exp();
                events.push(BadEvent {
                    config: c,
                    class: k,
                    level,
                    size_on_level: s,
                    observed,
                    expectation,
                    threshold,
                    lll_weight,
                    violated,
                });
            }
        }
        events
    }

    /// Players owning a class-`level` configuration that meets `C ∩ R_level`.
    pub fn dependency_set(&self, c: usize, level: usize) -> BTreeSet<usize> {
        let mut players = BTreeSet::new();
        for &r in &self.h.configs[c].resources {
            if self.hier.depth[r] < level {
                continue;
            }
            for &other in &self.incidence[r] {
                if self.idx.class_of[other] == level {
                    players.insert(self.h.configs[other].player);
                }
            }
        }
        players
    }
}

pub fn evaluate_bad_events(
    h: &Hypergraph,
    idx: &SizeClassIndex,
    hier: &ResourceHierarchy,
    sel: &Selection,
    constants: &Constants,
) -> Vec<BadEvent> {
    EventContext::new(h, idx, hier, constants).evaluate(sel)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resample {
    pub config: usize,
    pub level: usize,
    pub players: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionReport {
    pub converged: bool,
    /// Resampling steps performed.
    pub rounds: usize,
    pub max_rounds: usize,
    pub events: usize,
    /// Violated events of the returned selection.
    pub violated: Vec<BadEvent>,
    pub resamples: Vec<Resample>,
}

fn violation_score(events: &[BadEvent]) -> f64 {
    events.iter().filter(|e| e.violated).map(BadEvent::score).sum()
}

/// Moser–Tardos from the seed's initial selection.
pub fn moser_tardos(
    h: &Hypergraph,
    idx: &SizeClassIndex,
    hier: &ResourceHierarchy,
    constants: &Constants,
    seed: u64,
    max_rounds: usize,
) -> (Selection, SelectionReport) {
    let start = initial_selection(h, idx, seed);
    moser_tardos_from(h, idx, hier, constants, start, seed, max_rounds)
}

/// Repeatedly resamples the smallest violated event in `(k, config, h)`
/// order. Each player of its dependency set redraws uniformly over all of
/// its configurations. Returns the best selection seen when `max_rounds`
/// runs out.
pub fn moser_tardos_from(
    h: &Hypergraph,
    idx: &SizeClassIndex,
    hier: &ResourceHierarchy,
    constants: &Constants,
    start: Selection,
    seed: u64,
    max_rounds: usize,
) -> (Selection, SelectionReport) {
    let ctx = EventContext::new(h, idx, hier, constants);
    let configs_of = h.configs_of();
    let mut rng = rng::stream(seed, "select/resample");
    let mut current = start;
    let mut resamples = Vec::new();
    let mut best: Option<(f64, Selection, Vec<BadEvent>)> = None;
    let mut rounds = 0;
    loop {
        let events = ctx.evaluate(&current);
        let Some(target) = events.iter().find(|e| e.violated) else {
            let report = SelectionReport {
                converged: true,
                rounds,
                max_rounds,
                events: events.len(),
                violated: Vec::new(),
                resamples,
            };
            return (current, report);
        };
        let score = violation_score(&events);
        if best.as_ref().is_none_or(|(b, _, _)| score < *b) {
            best = Some((score, current.clone(), events.clone()));
        }
        if rounds == max_rounds {
            break;
        }
        let deps = ctx.dependency_set(target.config, target.level);
        let mut chosen = current.chosen.clone();
        for &p in &deps {
            let own = &configs_of[p];
            chosen[p] = own[rng.gen_range(0..own.len())];
        }
        debug_assert!((0..h.m()).all(|p| deps.contains(&p) || chosen[p] == current.chosen[p]));
        resamples.push(Resample { config: target.config, level: target.level, players: deps.into_iter().collect() });
        current = Selection::new(chosen, idx);
        rounds += 1;
    }
    let (_, sel, events) = best.expect("at least one evaluation");
    let report = SelectionReport {
        converged: false,
        rounds,
        max_rounds,
        events: events.len(),
        violated: events.into_iter().filter(|e| e.violated).collect(),
        resamples,
    };
    (sel, report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundViolation {
    pub config: usize,
    pub class: usize,
    pub from_level: usize,
    pub lhs: String,
    pub rhs: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub constant: u64,
    pub chosen_only: bool,
    pub checked: usize,
    /// Largest `lhs / rhs` over all checked inequalities.
    pub worst_ratio: f64,
    pub violators: Vec<BoundViolation>,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.violators.is_empty()
    }
}

/// Evaluates, for every `C` of class `k` and every `j <= k`,
/// `Σ_{j<=h<=k} ell^h Σ_{K ∈ K^(h)} |K ∩ C ∩ R_h|` against
/// `(1/ell) Σ_{j<=h<=k} ell^h Σ_{C' ∈ class h} |C' ∩ C ∩ R_h| + constant (d+ell)/ell ln(ell) |C|`.
///
/// With `chosen_only`, `C` ranges over the chosen configurations and the
/// first term of the right-hand side is dropped.
pub fn check_selection_bound(
    h: &Hypergraph,
    idx: &SizeClassIndex,
    hier: &ResourceHierarchy,
    sel: &Selection,
    constant: u64,
    chosen_only: bool,
) -> BoundReport {
    let ctx = EventContext::new(h, idx, hier, &Constants::default());
    let mask = ctx.mask(sel);
    let ell = idx.ell.max(1);
    let additive_unit = int(constant) * int(idx.d + ell) / int(ell) * &ctx.ln_ell;
    let mut checked = 0;
    let mut worst_ratio = 0f64;
    let mut violators = Vec::new();
    for c in 0..h.configs.len() {
        if chosen_only && !mask[c] {
            continue;
        }
        let k = idx.class_of[c];
        let o = ctx.overlaps(c, &mask);
        let additive = &additive_unit * int(h.configs[c].size());
        let mut lhs = BigInt::zero();
        let mut all = BigInt::zero();
        for j in (0..=k).rev() {
            let scale = num_traits::pow(BigInt::from(ell), j);
            lhs += &scale * o.chosen[j];
            all += &scale * o.all[j];
            let rhs = if chosen_only {
                additive.clone()
            } else {
                BigRational::new(all.clone(), BigInt::from(ell)) + &additive
            };
            let left = BigRational::from_integer(lhs.clone());
            checked += 1;
            let ratio = if rhs.is_zero() {
                if left.is_zero() { 0.0 } else { f64::INFINITY }
            } else {
                (&left / &rhs).to_f64().unwrap_or(f64::INFINITY)
            };
            worst_ratio = worst_ratio.max(ratio);
            if left > rhs {
                violators.push(BoundViolation {
                    config: c,
                    class: k,
                    from_level: j,
                    lhs: lhs.to_string(),
                    rhs: format_rational(&rhs),
                });
            }
        }
    }
    BoundReport { constant, chosen_only, checked, worst_ratio, violators }
}

/// For each event, the number of other events whose dependency sets share a
/// player with it. Quadratic; meant for small fixtures.
pub fn dependency_counts(
    h: &Hypergraph,
    idx: &SizeClassIndex,
    hier: &ResourceHierarchy,
    events: &[BadEvent],
) -> Vec<usize> {
    let ctx = EventContext::new(h, idx, hier, &Constants::default());
    let sets: Vec<BTreeSet<usize>> = events.iter().map(|e| ctx.dependency_set(e.config, e.level)).collect();
    (0..sets.len())
        .map(|a| (0..sets.len()).filter(|&b| b != a && !sets[a].is_disjoint(&sets[b])).count())
        .collect()
}
