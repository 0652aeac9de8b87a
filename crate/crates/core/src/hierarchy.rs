//! Nested resource subsampling `R = R_0 ⊇ R_1 ⊇ … ⊇ R_d`, where each
//! resource of `R_{k-1}` survives into `R_k` independently with probability
//! `1/ell`, plus exact checks of the concentration properties the
//! reconstruction relies on.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Hypergraph, SizeClassIndex};
use crate::params::Slack;
use crate::rational::{format_rational, int};
use crate::rng;

/// Since the levels are nested, a hierarchy is stored as the deepest level
/// each resource reaches.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceHierarchy {
    pub ell: usize,
    pub d: usize,
    pub seed: u64,
    /// `depth[r] = max { k : r ∈ R_k }`.
    pub depth: Vec<usize>,
}

impl ResourceHierarchy {
    /// The trivial hierarchy where every level equals `R`.
    pub fn full(n: usize, ell: usize, d: usize) -> Self {
        ResourceHierarchy { ell, d, seed: 0, depth: vec![d; n] }
    }

    pub fn contains(&self, level: usize, r: usize) -> bool {
        self.depth[r] >= level
    }

    pub fn level(&self, k: usize) -> Vec<usize> {
        (0..self.depth.len()).filter(|&r| self.depth[r] >= k).collect()
    }

    pub fn levels(&self) -> Vec<Vec<usize>> {
        (0..=self.d).map(|k| self.level(k)).collect()
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.d + 1];
        for &dep in &self.depth {
            for s in sizes.iter_mut().take(dep.min(self.d) + 1) {
                *s += 1;
            }
        }
        sizes
    }

    /// `|C ∩ R_k|`.
    pub fn count_in(&self, resources: &[usize], k: usize) -> usize {
        resources.iter().filter(|&&r| self.depth[r] >= k).count()
    }

    /// Rebuilds a hierarchy from explicit level sets, checking nestedness.
    pub fn from_levels(n: usize, ell: usize, levels: &[Vec<usize>]) -> Result<Self> {
        if levels.is_empty() || levels[0].len() != n {
            return Err(Error::InvalidParameter("level 0 must contain every resource".into()));
        }
        let d = levels.len() - 1;
        let mut depth = vec![0usize; n];
        for (k, level) in levels.iter().enumerate().skip(1) {
            for &r in level {
                if r >= n || depth[r] != k - 1 {
                    return Err(Error::InvalidParameter(format!("level {k} is not nested in level {}", k - 1)));
                }
                depth[r] = k;
            }
        }
        Ok(ResourceHierarchy { ell, d, seed: 0, depth })
    }
}

/// Draws `R_1..R_d` level by level.
pub fn sample_hierarchy(h: &Hypergraph, idx: &SizeClassIndex, seed: u64) -> ResourceHierarchy {
    let ell = idx.ell.max(1);
    let mut rng = rng::from_seed(seed);
    let mut depth = vec![0usize; h.n()];
    for k in 1..=idx.d {
        for dep in depth.iter_mut() {
            if *dep == k - 1 && rng.gen_range(0..ell) == 0 {
                *dep = k;
            }
        }
    }
    ResourceHierarchy { ell: idx.ell, d: idx.d, seed, depth }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SizeViolation {
    pub config: usize,
    pub level: usize,
    pub observed: usize,
    /// Lower and upper bounds on `|C ∩ R_k|`, as exact rationals.
    pub lower: String,
    pub upper: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OverlapViolation {
    pub config: usize,
    pub level: usize,
    /// `sum_{C' in class k} |C' ∩ C ∩ R_k|`.
    pub lhs: u64,
    /// `coeff / ell^k * (|C| + sum_{C' in class k} |C' ∩ C|)`.
    pub rhs: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckReport<V> {
    pub checked: usize,
    pub violators: Vec<V>,
}

impl<V> CheckReport<V> {
    pub fn passed(&self) -> bool {
        self.violators.is_empty()
    }
}

/// Two-sided size concentration: for every `k` and `C` of class `>= k`,
/// `lo * ell^-k |C| <= |R_k ∩ C| <= hi * ell^-k |C|`.
pub fn check_size_bounds(
    h: &Hypergraph,
    idx: &SizeClassIndex,
    hier: &ResourceHierarchy,
    slack: &Slack,
) -> CheckReport<SizeViolation> {
    let mut checked = 0;
    let mut violators = Vec::new();
    for (c, cfg) in h.configs.iter().enumerate() {
        let size = int(cfg.size());
        for k in 0..=idx.class_of[c] {
            checked += 1;
            let observed = hier.count_in(&cfg.resources, k);
            let scale = BigRational::from_integer(num_traits::pow(BigInt::from(idx.ell.max(1)), k));
            let lower = &slack.lo * &size / &scale;
            let upper = &slack.hi * &size / &scale;
            let obs = int(observed);
            if obs < lower || obs > upper {
                violators.push(SizeViolation {
                    config: c,
                    level: k,
                    observed,
                    lower: format_rational(&lower),
                    upper: format_rational(&upper),
                });
            }
        }
    }
    CheckReport { checked, violators }
}

/// Per-configuration overlap sums by class: `(lhs[k], base[k])` where
/// `lhs[k] = Σ_{C' ∈ class k} |C' ∩ C ∩ R_k|` and `base[k] = Σ_{C' ∈ class k} |C' ∩ C|`.
pub fn overlap_sums(
    cfg_resources: &[usize],
    idx: &SizeClassIndex,
    hier: &ResourceHierarchy,
    incidence: &[Vec<usize>],
) -> (Vec<u64>, Vec<u64>) {
    let classes = idx.d.max(1);
    let mut lhs = vec![0u64; classes];
    let mut base = vec![0u64; classes];
    for &r in cfg_resources {
        for &other in &incidence[r] {
            let k = idx.class_of[other];
            base[k] += 1;
            if hier.depth[r] >= k {
                lhs[k] += 1;
            }
        }
    }
    (lhs, base)
}

/// Overlap concentration: for every `k` and `C` of class `>= k`,
/// `Σ_{C' ∈ class k} |C' ∩ C ∩ R_k| <= coeff/ell^k (|C| + Σ_{C' ∈ class k} |C' ∩ C|)`.
pub fn check_overlap_bounds(
    h: &Hypergraph,
    idx: &SizeClassIndex,
    hier: &ResourceHierarchy,
    coeff: u64,
) -> CheckReport<OverlapViolation> {
    let incidence = h.incidence();
    let mut checked = 0;
    let mut violators = Vec::new();
    for (c, cfg) in h.configs.iter().enumerate() {
        let (lhs, base) = overlap_sums(&cfg.resources, idx, hier, &incidence);
        for k in 0..=idx.class_of[c] {
            checked += 1;
            let scale = num_traits::pow(BigInt::from(idx.ell.max(1)), k);
            let left = BigInt::from(lhs[k]) * &scale;
            let right = BigInt::from(coeff) * BigInt::from(cfg.size() as u64 + base[k]);
            if left > right {
                violators.push(OverlapViolation {
                    config: c,
                    level: k,
                    lhs: lhs[k],
                    rhs: format_rational(&BigRational::new(right, scale)),
                });
            }
        }
    }
    CheckReport { checked, violators }
}

#[derive(Debug, Clone, Serialize)]
pub struct Certification {
    pub hierarchy: ResourceHierarchy,
    pub certified: bool,
    pub attempts: usize,
    pub slack: Slack,
    pub size_report: CheckReport<SizeViolation>,
    pub overlap_report: CheckReport<OverlapViolation>,
}

/// Resamples until both checks pass, for at most `retries` attempts. When
/// none passes, returns the attempt with the fewest violations and
/// `certified = false`.
pub fn certify(
    h: &Hypergraph,
    idx: &SizeClassIndex,
    seed: u64,
    retries: usize,
    slack: &Slack,
    overlap_coeff: u64,
) -> Certification {
    let mut best: Option<Certification> = None;
    let attempts = retries.max(1);
    for attempt in 0..attempts {
        let s = rng::derive_indexed(seed, "hierarchy/attempt", attempt as u64);
        let hierarchy = sample_hierarchy(h, idx, s);
        let size_report = check_size_bounds(h, idx, &hierarchy, slack);
        let overlap_report = check_overlap_bounds(h, idx, &hierarchy, overlap_coeff);
        let certified = size_report.passed() && overlap_report.passed();
        let cand = Certification {
            hierarchy,
            certified,
            attempts: attempt + 1,
            slack: slack.clone(),
            size_report,
            overlap_report,
        };
        if certified {
            return cand;
        }
        let score = |c: &Certification| c.size_report.violators.len() + c.overlap_report.violators.len();
        if best.as_ref().is_none_or(|b| score(&cand) < score(b)) {
            best = Some(cand);
        }
    }
    let mut best = best.expect("at least one attempt");
    best.attempts = attempts;
    best
}

/// Like [`certify`], but a failed certification is an error.
pub fn sample_certified(
    h: &Hypergraph,
    idx: &SizeClassIndex,
    seed: u64,
    retries: usize,
    slack: &Slack,
    overlap_coeff: u64,
) -> Result<Certification> {
    let cert = certify(h, idx, seed, retries, slack, overlap_coeff);
    if cert.certified {
        Ok(cert)
    } else {
        Err(Error::CertificationFailed { attempts: cert.attempts })
    }
}
