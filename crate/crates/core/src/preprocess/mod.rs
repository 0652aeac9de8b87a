//! Normalization of arbitrary instances to the regular regime the pipeline
//! expects: fractional matching LP plus duplication, and degree
//! normalization by duplication or by sampling followed by halving.

mod lp;

pub use lp::feasible_vertex;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::assign::flow::FlowNetwork;
use crate::error::{Error, Result};
use crate::instance::{validate, Configuration, Hypergraph};
use crate::matching::{MatchEntry, RelaxedMatching};
use crate::params::PipelineParams;
use crate::rational::{int, serde_big_vec};
use crate::rng;

/// One value per configuration: players covered exactly once, resources at
/// most once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionalMatching {
    #[serde(with = "serde_big_vec")]
    pub x: Vec<BigRational>,
}

impl FractionalMatching {
    /// Checks the LP constraints exactly.
    pub fn is_feasible(&self, h: &Hypergraph) -> bool {
        if self.x.len() != h.configs.len() || self.x.iter().any(|v| v < &BigRational::zero()) {
            return false;
        }
        let mut player = vec![BigRational::zero(); h.m()];
        let mut resource = vec![BigRational::zero(); h.n()];
        for (c, cfg) in h.configs.iter().enumerate() {
            player[cfg.player] += &self.x[c];
            for &r in &cfg.resources {
                resource[r] += &self.x[c];
            }
        }
        player.iter().all(|v| v.is_one()) && resource.iter().all(|v| v <= &BigRational::one())
    }

    /// Least common multiple of the denominators.
    pub fn common_denominator(&self) -> BigInt {
        self.x.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
    }
}

/// Solves the perfect-matching LP over `h` and returns a vertex, or
/// [`Error::Infeasible`].
pub fn solve_matching_lp(h: &Hypergraph) -> Result<FractionalMatching> {
    let k = h.configs.len();
    let n = h.n();
    // columns: one per configuration, then one slack per resource
    let mut a = Vec::with_capacity(h.m() + n);
    let mut b = Vec::with_capacity(h.m() + n);
    for p in 0..h.m() {
        let mut row = vec![BigRational::zero(); k + n];
        for (c, cfg) in h.configs.iter().enumerate() {
            if cfg.player == p {
                row[c] = int(1);
            }
        }
        a.push(row);
        b.push(int(1));
    }
    for r in 0..n {
        let mut row = vec![BigRational::zero(); k + n];
        for (c, cfg) in h.configs.iter().enumerate() {
            if cfg.contains(r) {
                row[c] = int(1);
            }
        }
        row[k + r] = int(1);
        a.push(row);
        b.push(int(1));
    }
    let sol = feasible_vertex(&a, &b).ok_or(Error::Infeasible)?;
    Ok(FractionalMatching { x: sol[..k].to_vec() })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Regularization {
    Unchanged,
    Duplicated { factor: usize },
    SampledTrimmed { sampled_max_degree: usize },
    LpDuplicated { t: String },
    /// Several of the above, in order.
    Steps { steps: Vec<Regularization> },
}

impl Regularization {
    fn then(self, next: Regularization) -> Regularization {
        use Regularization::*;
        match (self, next) {
            (Unchanged, r) | (r, Unchanged) => r,
            (Steps { mut steps }, Steps { steps: more }) => {
                steps.extend(more);
                Steps { steps }
            }
            (Steps { mut steps }, r) => {
                steps.push(r);
                Steps { steps }
            }
            (r, Steps { mut steps }) => {
                steps.insert(0, r);
                Steps { steps }
            }
            (a, b) => Steps { steps: vec![a, b] },
        }
    }
}

/// A transformed instance with a map back to the configurations it came from.
#[derive(Debug, Clone)]
pub struct Processed {
    pub hypergraph: Hypergraph,
    /// `origin[c]` is the source configuration of output configuration `c`.
    pub origin: Vec<usize>,
    pub ell: usize,
    pub regularization: Regularization,
}

impl Processed {
    pub fn identity(h: &Hypergraph, ell: usize) -> Self {
        Processed {
            hypergraph: h.clone(),
            origin: (0..h.configs.len()).collect(),
            ell,
            regularization: Regularization::Unchanged,
        }
    }

    /// Maps a matching of the processed instance to one of `original`. Kept
    /// sets are unchanged; every output configuration is a copy or a subset
    /// of its source.
    pub fn pull_back(&self, original: &Hypergraph, sol: &RelaxedMatching) -> RelaxedMatching {
        let entries = sol
            .entries
            .iter()
            .map(|e| MatchEntry { player: e.player, config: self.origin[e.config], kept: e.kept.clone() })
            .collect();
        RelaxedMatching::new(original, entries)
    }

    /// Composes two transformations: `self` applied first, `next` on its output.
    pub fn then(self, next: Processed) -> Processed {
        let origin = next.origin.iter().map(|&c| self.origin[c]).collect();
        let regularization = self.regularization.then(next.regularization);
        Processed { origin, regularization, hypergraph: next.hypergraph, ell: next.ell }
    }
}

/// Replaces each configuration by `x_C * T` copies, `T` the common
/// denominator of `x`.
pub fn duplicate_to_regular(h: &Hypergraph, x: &FractionalMatching, cap: u128) -> Result<Processed> {
    let t = x.common_denominator();
    let size = t.to_u128().unwrap_or(u128::MAX).saturating_mul(h.configs.len() as u128);
    if size > cap {
        return Err(Error::BlowupExceeded { size, cap });
    }
    let t_big = BigRational::from_integer(t.clone());
    let mut configs = Vec::new();
    let mut origin = Vec::new();
    for (c, cfg) in h.configs.iter().enumerate() {
        let copies = (&x.x[c] * &t_big).to_integer().to_usize().expect("bounded by cap");
        for _ in 0..copies {
            configs.push(cfg.clone());
            origin.push(c);
        }
    }
    let hypergraph = Hypergraph::new(h.players.clone(), h.resources.clone(), configs)?;
    let ell = t.to_usize().expect("bounded by cap");
    Ok(Processed { hypergraph, origin, ell, regularization: Regularization::LpDuplicated { t: t.to_string() } })
}

/// Brings a regular instance to degree `ell_target`.
///
/// Below target, every configuration is duplicated `ceil(target / ell)`
/// times. Above target, each player keeps `target` configurations sampled
/// uniformly without replacement, and each kept configuration is halved to
/// `floor(|C|/2)` resources by an integral flow with resource capacity
/// `target`.
pub fn regularize_degree(h: &Hypergraph, params: &PipelineParams, seed: u64) -> Result<Processed> {
    let profile = validate(h)?;
    let Some(ell0) = profile.ell.filter(|_| profile.is_regular) else {
        return Err(Error::InvalidParameter("degree normalization needs a regular instance".into()));
    };
    let target = params.resolve_ell(h.n(), ell0);
    if target == 0 {
        return Err(Error::InvalidParameter("ell must be positive".into()));
    }
    if target == ell0 {
        return Ok(Processed::identity(h, ell0));
    }
    if target > ell0 {
        let factor = target.div_ceil(ell0);
        let size = factor as u128 * h.configs.len() as u128;
        if size > params.blowup_cap {
            return Err(Error::BlowupExceeded { size, cap: params.blowup_cap });
        }
        let mut configs = Vec::with_capacity(size as usize);
        let mut origin = Vec::with_capacity(size as usize);
        for (c, cfg) in h.configs.iter().enumerate() {
            for _ in 0..factor {
                configs.push(cfg.clone());
                origin.push(c);
            }
        }
        let hypergraph = Hypergraph::new(h.players.clone(), h.resources.clone(), configs)?;
        return Ok(Processed {
            hypergraph,
            origin,
            ell: ell0 * factor,
            regularization: Regularization::Duplicated { factor },
        });
    }

    let mut rng = rng::stream(seed, "preprocess/sample");
    let mut sampled = Vec::with_capacity(h.m() * target);
    for own in h.configs_of() {
        let mut pick: Vec<usize> = index::sample(&mut rng, own.len(), target).into_iter().collect();
        pick.sort_unstable();
        sampled.extend(pick.into_iter().map(|i| own[i]));
    }
    if let Some(&c) = sampled.iter().find(|&&c| h.configs[c].size() < 2) {
        return Err(Error::EdgeTooSmall { config: c, size: h.configs[c].size() });
    }
    let mut degree = vec![0usize; h.n()];
    for &c in &sampled {
        for &r in &h.configs[c].resources {
            degree[r] += 1;
        }
    }
    let sampled_max_degree = degree.iter().copied().max().unwrap_or(0);

    let net = FlowNetwork::new(
        sampled.clone(),
        sampled.iter().map(|&c| h.configs[c].resources.clone()).collect(),
        sampled.iter().map(|&c| (h.configs[c].size() / 2) as u64).collect(),
        target as u64,
    );
    let flow = net.max_flow();
    if flow.value < net.demand() {
        return Err(Error::DegreeOverflow { realized: sampled_max_degree, target });
    }
    let configs = sampled
        .iter()
        .zip(flow.routed)
        .map(|(&c, kept)| Configuration::new(h.configs[c].player, kept))
        .collect();
    let hypergraph = Hypergraph::new(h.players.clone(), h.resources.clone(), configs)?;
    Ok(Processed {
        hypergraph,
        origin: sampled,
        ell: target,
        regularization: Regularization::SampledTrimmed { sampled_max_degree },
    })
}

/// Full normalization used by the solver: LP duplication for irregular
/// instances, then degree normalization.
pub fn normalize(h: &Hypergraph, params: &PipelineParams, seed: u64) -> Result<Processed> {
    let profile = validate(h)?;
    let base = if profile.is_regular {
        Processed::identity(h, profile.ell.unwrap_or(1))
    } else {
        let x = solve_matching_lp(h).map_err(|_| Error::NoPerfectMatching)?;
        duplicate_to_regular(h, &x, params.blowup_cap)?
    };
    let next = regularize_degree(&base.hypergraph, params, rng::derive(seed, "preprocess"))?;
    Ok(base.then(next))
}
