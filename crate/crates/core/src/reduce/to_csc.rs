//! Santa Claus to relaxed matching, in four stages:
//!
//! 1. scale by the guess, round values down to powers of two and drop the
//!    ones at most `1/(2n)`;
//! 2. split the fractional values of each player into `L = log*(2n)` size
//!    ranges, one auxiliary player per range;
//! 3. bundle resources of equal value so that every player sees at most
//!    three value sizes `{0, v, 1}`;
//! 4. emit the hypergraph.
//!
//! Every instance in the chain has target 1 per player. Auxiliary players
//! are appended after the players of the previous stage and auxiliary
//! resources after its resources, so pulling an allocation back only needs
//! each auxiliary player's parent.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{Allocation, SantaFile, SantaInstance};
use crate::error::{Error, Result};
use crate::instance::{Configuration, Hypergraph};
use crate::io::InstanceFile;
use crate::matching::RelaxedMatching;
use crate::rational::{format_rational, int, parse_rational, ratio, Alpha};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    /// Factor lost when pulling a solution back through this stage.
    pub loss: String,
    pub players_before: usize,
    pub resources_before: usize,
    pub players_after: usize,
    pub resources_after: usize,
    /// Parent of each appended player, by index into the previous stage.
    pub parent: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SantaToCscTrace {
    pub original: SantaFile,
    pub opt_guess: String,
    /// `(log)^k (2n)` for `k = 0..=L`, base 2.
    pub chain: Vec<f64>,
    pub log_star: usize,
    /// Smallest power of two `>= log_star`.
    pub scale: u64,
    pub stages: Vec<StageRecord>,
    pub hypergraph: InstanceFile,
}

impl SantaToCscTrace {
    /// Product of the per-stage losses; a `c`-relaxed matching pulls back to
    /// an allocation worth at least `opt / (composed_loss * c^2)`.
    pub fn composed_loss(&self) -> BigRational {
        self.stages
            .iter()
            .map(|s| parse_rational(&s.loss).expect("stored rational"))
            .fold(BigRational::one(), |a, b| a * b)
    }

    pub fn guarantee(&self, alpha: Alpha) -> BigRational {
        let opt = parse_rational(&self.opt_guess).expect("stored rational");
        match alpha {
            Alpha::Finite(c) => {
                let c = ratio(*c.numer() as i64, *c.denom() as i64);
                opt / (self.composed_loss() * &c * &c)
            }
            Alpha::Unbounded => BigRational::zero(),
        }
    }
}

/// `(log)^k x` for `k = 0, 1, ...` until the value is at most 1.
pub fn log_star_chain(x: f64) -> Vec<f64> {
    let mut chain = vec![x];
    while *chain.last().unwrap() > 1.0 {
        let next = chain.last().unwrap().log2();
        chain.push(next);
    }
    chain
}

/// Smallest `e >= 0` with `2^-e <= q`, for `0 < q <= 1`, provided
/// `2^e < bound`.
fn pow2_floor_exponent(q: &BigRational, bound: u64) -> Option<u32> {
    let mut e = 0u32;
    let mut scaled = q.clone();
    while scaled < BigRational::one() {
        e += 1;
        if (1u128 << e.min(127)) >= bound as u128 {
            return None;
        }
        scaled *= int(2);
    }
    Some(e)
}

fn pow2(e: u32) -> BigRational {
    BigRational::from_integer(BigInt::one() << e as usize)
}

fn stage1(s: &SantaInstance, opt: &BigRational) -> Result<(SantaInstance, StageRecord)> {
    let bound = 2 * s.n() as u64;
    let four = int(4);
    let mut values = Vec::with_capacity(s.m());
    for (p, row) in s.values.iter().enumerate() {
        let mut out = BTreeMap::new();
        for (&r, v) in row {
            let scaled = &four * v / opt;
            if scaled >= BigRational::one() {
                out.insert(r, BigRational::one());
            } else if let Some(e) = pow2_floor_exponent(&scaled, bound) {
                out.insert(r, pow2(e).recip());
            }
        }
        if out.is_empty() {
            return Err(Error::BadGuess(format!("player {} values nothing above the cutoff", s.players[p])));
        }
        values.push(out);
    }
    let inst = SantaInstance::new(s.players.clone(), s.resources.clone(), values)?;
    let rec = record("round", "4", s, &inst, Vec::new());
    Ok((inst, rec))
}

fn record(name: &str, loss: &str, before: &SantaInstance, after: &SantaInstance, parent: Vec<usize>) -> StageRecord {
    StageRecord {
        name: name.into(),
        loss: loss.into(),
        players_before: before.m(),
        resources_before: before.n(),
        players_after: after.m(),
        resources_after: after.n(),
        parent,
    }
}

/// Index `k` with `1/a_k < 2^-e <= 1/a_{k+1}`.
fn bucket(chain: &[f64], e: u32) -> usize {
    let v = 2f64.powi(e as i32);
    (0..chain.len() - 1).find(|&k| chain[k + 1] <= v).expect("chain ends at or below 1")
}

fn exponent_of(v: &BigRational) -> u32 {
    // v = 2^-e
    v.denom().bits() as u32 - 1
}

fn stage2(s: &SantaInstance, chain: &[f64], scale: u64) -> Result<(SantaInstance, StageRecord)> {
    let levels = chain.len() - 1;
    let one = BigRational::one();
    let mut players = s.players.clone();
    let mut resources = s.resources.clone();
    let mut values: Vec<BTreeMap<usize, BigRational>> = Vec::new();
    let mut extra_values = Vec::new();
    let mut parent = Vec::new();
    for (i, row) in s.values.iter().enumerate() {
        let mut own: BTreeMap<usize, BigRational> = row.iter().filter(|(_, v)| **v == one).map(|(&r, v)| (r, v.clone())).collect();
        if own.len() < row.len() {
            for k in 0..levels {
                let shared = resources.len();
                resources.push(format!("{}/s{k}", s.players[i]));
                players.push(format!("{}/q{k}", s.players[i]));
                parent.push(i);
                own.insert(shared, one.clone());
                let mut q: BTreeMap<usize, BigRational> = BTreeMap::new();
                q.insert(shared, one.clone());
                for (&r, v) in row {
                    if *v < one && bucket(chain, exponent_of(v)) == k {
                        let scaled = v * int(scale);
                        q.insert(r, if scaled > one { one.clone() } else { scaled });
                    }
                }
                extra_values.push(q);
            }
        }
        values.push(own);
    }
    values.extend(extra_values);
    let inst = SantaInstance::new(players, resources, values)?;
    let rec = record("split", &scale.to_string(), s, &inst, parent);
    Ok((inst, rec))
}

fn stage3(s: &SantaInstance) -> Result<(SantaInstance, StageRecord)> {
    let one = BigRational::one();
    let mut players = s.players.clone();
    let mut resources = s.resources.clone();
    let mut values = Vec::with_capacity(s.m());
    let mut extra_values = Vec::new();
    let mut parent = Vec::new();
    for (x, row) in s.values.iter().enumerate() {
        let mut classes: BTreeMap<BigRational, Vec<usize>> = BTreeMap::new();
        for (&r, v) in row {
            if *v < one {
                classes.entry(v.clone()).or_default().push(r);
            }
        }
        if classes.is_empty() {
            values.push(row.clone());
            continue;
        }
        // sigma = 2^-t, the largest power of two <= 1 / (2 |D|); N = 1 / (2 sigma)
        let t = usize::BITS - (2 * classes.len() - 1).leading_zeros();
        let sigma = pow2(t).recip();
        let share = pow2(t - 1).recip();
        let mut own: BTreeMap<usize, BigRational> = row.iter().filter(|(_, v)| **v == one).map(|(&r, v)| (r, v.clone())).collect();
        for (wi, (w, members)) in classes.iter().enumerate() {
            let per = if *w >= sigma { one.clone() } else { w / &sigma };
            for b in 0..members.len() {
                let z = resources.len();
                resources.push(format!("{}/z{wi}.{b}", s.players[x]));
                players.push(format!("{}/y{wi}.{b}", s.players[x]));
                parent.push(x);
                own.insert(z, share.clone());
                let mut y: BTreeMap<usize, BigRational> = members.iter().map(|&r| (r, per.clone())).collect();
                y.insert(z, one.clone());
                extra_values.push(y);
            }
        }
        values.push(own);
    }
    values.extend(extra_values);
    let inst = SantaInstance::new(players, resources, values)?;
    let rec = record("bundle", "2", s, &inst, parent);
    Ok((inst, rec))
}

/// Hypergraph of a three-size instance: each player `x` gets `{x, r}` per
/// value-1 resource `r`; when `x` also values resources at `v_x = 1/N`, it
/// gets `N` new players `P_t` and resources `R_t`, the edge
/// `{x, R_1..R_N}`, the pairs `{P_t, R_t}` and `{P_t, r}` for every `r`
/// worth `v_x`.
pub fn stage4(s: &SantaInstance) -> Result<(Hypergraph, StageRecord)> {
    let one = BigRational::one();
    let mut players = s.players.clone();
    let mut resources = s.resources.clone();
    let mut configs = Vec::new();
    let mut parent = Vec::new();
    for (x, row) in s.values.iter().enumerate() {
        let mut frac: Option<&BigRational> = None;
        let mut small = Vec::new();
        for (&r, v) in row {
            if *v >= one {
                configs.push(Configuration::new(x, vec![r]));
                continue;
            }
            match frac {
                Some(f) if f != v => {
                    return Err(Error::InvalidParameter(format!("player {} has more than three value sizes", s.players[x])));
                }
                _ => frac = Some(v),
            }
            small.push(r);
        }
        let Some(v) = frac else { continue };
        let inv = v.recip();
        if !inv.is_integer() {
            return Err(Error::InvalidParameter(format!("1/{} is not an integer", format_rational(v))));
        }
        let count: usize = inv.to_integer().try_into().map_err(|_| Error::InvalidParameter("value too small".into()))?;
        let first_r = resources.len();
        for t in 0..count {
            let np = players.len();
            players.push(format!("{}/P{t}", s.players[x]));
            resources.push(format!("{}/R{t}", s.players[x]));
            parent.push(x);
            configs.push(Configuration::new(np, vec![first_r + t]));
            for &r in &small {
                configs.push(Configuration::new(np, vec![r]));
            }
        }
        configs.push(Configuration::new(x, (first_r..first_r + count).collect()));
    }
    configs.sort_by_key(|c| c.player);
    let h = Hypergraph::new(players.clone(), resources.clone(), configs)?;
    let rec = StageRecord {
        name: "hypergraph".into(),
        loss: "1".into(),
        players_before: s.m(),
        resources_before: s.n(),
        players_after: players.len(),
        resources_after: resources.len(),
        parent,
    };
    Ok((h, rec))
}

fn pull(owner: &[Option<usize>], rec: &StageRecord) -> Result<Vec<Option<usize>>> {
    if owner.len() != rec.resources_after {
        return Err(Error::PullbackFailed(format!("stage {} expects {} resources", rec.name, rec.resources_after)));
    }
    owner[..rec.resources_before]
        .iter()
        .map(|o| match *o {
            None => Ok(None),
            Some(p) if p < rec.players_before => Ok(Some(p)),
            Some(p) => rec
                .parent
                .get(p - rec.players_before)
                .map(|&q| Some(q))
                .ok_or_else(|| Error::PullbackFailed(format!("unknown player {p} in stage {}", rec.name))),
        })
        .collect()
}

/// Every resource kept by `x` or one of its new players goes to `x`.
pub fn stage4_pullback(h: &Hypergraph, rec: &StageRecord, sol: &RelaxedMatching) -> Result<Allocation> {
    let mut owner = vec![None; h.n()];
    for e in &sol.entries {
        for &r in &e.kept {
            owner[r] = Some(e.player);
        }
    }
    Ok(Allocation { owner: pull(&owner, rec)? })
}

/// Runs all four stages for the guess `opt_guess`.
pub fn santa_to_csc(s: &SantaInstance, opt_guess: &BigRational) -> Result<(Hypergraph, SantaToCscTrace)> {
    if !opt_guess.is_positive() {
        return Err(Error::InvalidParameter("the guess must be positive".into()));
    }
    let chain = log_star_chain(2.0 * s.n() as f64);
    let log_star = chain.len() - 1;
    let scale = (log_star.max(1) as u64).next_power_of_two();
    let (i1, r1) = stage1(s, opt_guess)?;
    let (i2, r2) = stage2(&i1, &chain, scale)?;
    let (i3, r3) = stage3(&i2)?;
    let (h, r4) = stage4(&i3)?;
    let trace = SantaToCscTrace {
        original: SantaFile::from_instance(s),
        opt_guess: format_rational(opt_guess),
        chain,
        log_star,
        scale,
        stages: vec![r1, r2, r3, r4],
        hypergraph: InstanceFile::from_hypergraph(&h),
    };
    Ok((h, trace))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CscPullback {
    #[serde(skip)]
    pub allocation: Allocation,
    pub alpha: Alpha,
    pub min_value: String,
    pub loss_factors: Vec<String>,
    pub composed_loss: String,
    /// `opt_guess / (composed_loss * alpha^2)`.
    pub guarantee: String,
    pub meets_guarantee: bool,
}

/// Maps a relaxed matching of the emitted hypergraph back to an allocation
/// of the original Santa instance.
pub fn csc_pullback(trace: &SantaToCscTrace, sol: &RelaxedMatching) -> Result<CscPullback> {
    let original = trace.original.to_instance()?;
    let h = trace.hypergraph.to_hypergraph()?;
    if sol.entries.len() != h.m() {
        return Err(Error::PullbackFailed("solution does not cover the hypergraph".into()));
    }
    let mut owner = stage4_pullback(&h, &trace.stages[3], sol)?.owner;
    for rec in trace.stages[..3].iter().rev() {
        owner = pull(&owner, rec)?;
    }
    let allocation = Allocation { owner };
    let min_value = original.min_value(&allocation);
    let guarantee = trace.guarantee(sol.achieved_alpha);
    Ok(CscPullback {
        alpha: sol.achieved_alpha,
        min_value: format_rational(&min_value),
        loss_factors: trace.stages.iter().map(|s| s.loss.clone()).collect(),
        composed_loss: format_rational(&trace.composed_loss()),
        guarantee: format_rational(&guarantee),
        meets_guarantee: min_value >= guarantee,
        allocation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::read_instance;
    use crate::oracle::brute_force_min_alpha;
    use crate::rational::ratio;

    fn inst(players: usize, resources: usize, vals: &[(usize, usize, BigRational)]) -> SantaInstance {
        let mut values = vec![BTreeMap::new(); players];
        for (p, r, v) in vals {
            values[*p].insert(*r, v.clone());
        }
        SantaInstance::new(
            (0..players).map(|i| format!("i{i}")).collect(),
            (0..resources).map(|j| format!("j{j}")).collect(),
            values,
        )
        .unwrap()
    }

    #[test]
    fn chain_for_sixteen() {
        assert_eq!(log_star_chain(16.0), vec![16.0, 4.0, 2.0, 1.0]);
        let chain = log_star_chain(16.0);
        // 1/16 < v <= 1/4 is bucket 0, v = 1/2 is bucket 1
        assert_eq!(bucket(&chain, 3), 0);
        assert_eq!(bucket(&chain, 2), 0);
        assert_eq!(bucket(&chain, 1), 1);
    }

    #[test]
    fn rounding_to_powers_of_two() {
        let s = inst(1, 8, &[(0, 0, ratio(3, 40)), (0, 1, ratio(1, 100))]);
        // 4 * 3/40 = 0.3 -> 1/4; 4/100 = 0.04 <= 1/16 is dropped
        let (i1, _) = stage1(&s, &ratio(1, 1)).unwrap();
        assert_eq!(i1.values[0].len(), 1);
        assert_eq!(i1.values[0][&0], ratio(1, 4));
        let s = inst(1, 8, &[(0, 1, ratio(1, 100))]);
        assert!(matches!(stage1(&s, &ratio(1, 1)), Err(Error::BadGuess(_))));
    }

    #[test]
    fn zero_one_values_are_identity() {
        let s = inst(2, 3, &[(0, 0, ratio(1, 1)), (0, 1, ratio(1, 1)), (1, 2, ratio(1, 1))]);
        let (h, trace) = santa_to_csc(&s, &ratio(1, 1)).unwrap();
        assert_eq!(h.m(), 2);
        assert_eq!(h.n(), 3);
        assert!(h.configs.iter().all(|c| c.size() == 1));
        assert_eq!(h.configs.len(), 3);
        let sol = brute_force_min_alpha(&h, 100).unwrap().solution.unwrap();
        let back = csc_pullback(&trace, &sol).unwrap();
        assert_eq!(back.min_value, "1");
        assert!(back.meets_guarantee);
    }

    #[test]
    fn stage4_routes_bundle_resources() {
        // x values r0 at 1/2 and r1 at 1/2; the big edge has two new vertices
        let s = inst(1, 2, &[(0, 0, ratio(1, 2)), (0, 1, ratio(1, 2))]);
        let (h, rec) = stage4(&s).unwrap();
        assert_eq!((h.m(), h.n()), (3, 4));
        let sol = brute_force_min_alpha(&h, 1000).unwrap();
        assert_eq!(sol.alpha, Alpha::one());
        let alloc = stage4_pullback(&h, &rec, sol.solution.as_ref().unwrap()).unwrap();
        assert_eq!(alloc.owner, vec![Some(0), Some(0)]);
        assert_eq!(s.min_value(&alloc), ratio(1, 1));
    }

    #[test]
    fn stage4_rejects_four_sizes() {
        let s = inst(1, 2, &[(0, 0, ratio(1, 2)), (0, 1, ratio(1, 4))]);
        assert!(stage4(&s).is_err());
        let s = inst(1, 1, &[(0, 0, ratio(2, 3))]);
        assert!(stage4(&s).is_err());
    }

    #[test]
    fn losses_compose() {
        let s = inst(
            2,
            4,
            &[(0, 0, ratio(1, 2)), (0, 1, ratio(1, 2)), (1, 2, ratio(1, 4)), (1, 3, ratio(3, 4))],
        );
        let (h, trace) = santa_to_csc(&s, &ratio(1, 2)).unwrap();
        // 2n = 8: chain 8, 3, log2 3, 0.66 -> L = 3, scale 4
        assert_eq!(trace.log_star, 3);
        assert_eq!(trace.scale, 4);
        let losses: Vec<&str> = trace.stages.iter().map(|s| s.loss.as_str()).collect();
        assert_eq!(losses, vec!["4", "4", "2", "1"]);
        assert_eq!(trace.composed_loss(), int(32));
        assert_eq!(trace.guarantee(Alpha::integer(2)), ratio(1, 256));
        let text = serde_json::to_string(&trace).unwrap();
        let again: SantaToCscTrace = serde_json::from_str(&text).unwrap();
        assert_eq!(again, trace);
        assert_eq!(read_instance(&serde_json::to_string(&trace.hypergraph).unwrap()).unwrap(), h);
    }
}
