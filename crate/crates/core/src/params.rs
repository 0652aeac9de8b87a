//! Pipeline constants and tuning knobs.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, serde_big};

/// Numeric constants of the analysis. Every downstream threshold scales from
/// these, so a desk-scale run can shrink them without touching code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// Target degree multiplier: `ell = c_ell * ln^3 n`.
    pub c_ell: f64,
    /// Additive deviation coefficient for bad events with `k-5 <= h <= k`.
    pub c_alpha_lo: u64,
    /// Additive deviation coefficient (times `1/ell`) for `h <= k-6`.
    pub c_alpha_hi: u64,
    /// Load cap multiplier: `gamma = c_gamma * (d+ell)/ell * ln ell`.
    pub c_gamma: u64,
    /// Additive constant of the selection bound on all configurations.
    pub c_selection: u64,
    /// Additive constant of the selection bound on chosen configurations.
    pub c_claim: u64,
    /// Final demand divisor: each chosen `C` keeps `floor(|C| / (c_final * gamma))`.
    pub c_final: u64,
    /// Coefficient of the overlap concentration check.
    pub c_overlap: u64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            c_ell: 300_000.0,
            c_alpha_lo: 63,
            c_alpha_hi: 135,
            c_gamma: 100_000,
            c_selection: 1000,
            c_claim: 2000,
            c_final: 100,
            c_overlap: 10,
        }
    }
}

/// Two-sided multiplicative slack for the size concentration check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    #[serde(with = "serde_big")]
    pub lo: BigRational,
    #[serde(with = "serde_big")]
    pub hi: BigRational,
}

impl Slack {
    pub fn paper() -> Self {
        Slack { lo: rational::ratio(1, 2), hi: rational::ratio(3, 2) }
    }

    pub fn desk() -> Self {
        Slack { lo: rational::ratio(1, 4), hi: rational::int(4) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    /// Degree to normalize to; `None` keeps the instance's own degree.
    pub ell_target: Option<usize>,
    pub paper_profile: bool,
    pub constants: Constants,
    pub slack: Slack,
    /// Hierarchy samples tried before proceeding uncertified.
    pub hierarchy_retries: usize,
    /// Resampling rounds; `None` means `10 * m`.
    pub max_rounds: Option<usize>,
    /// Overrides the computed load cap.
    pub gamma: Option<u64>,
    /// Cap on `T * |configs|` for duplication.
    pub blowup_cap: u128,
    /// Floor for the per-level lift guarantee factor.
    pub eps_min: f64,
    /// Whole-pipeline restarts (fresh hierarchy and selection) before the
    /// matching fallback is used.
    pub solve_attempts: usize,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            ell_target: None,
            paper_profile: false,
            constants: Constants::default(),
            slack: Slack::desk(),
            hierarchy_retries: 50,
            max_rounds: None,
            gamma: None,
            blowup_cap: 2_000_000,
            eps_min: 0.05,
            solve_attempts: 8,
        }
    }
}

impl PipelineParams {
    pub fn desk(ell: Option<usize>) -> Self {
        PipelineParams { ell_target: ell, ..Default::default() }
    }

    /// Paper constants and slack; the degree target becomes
    /// `ceil(c_ell * ln^3 n)` for the instance at hand.
    pub fn paper() -> Self {
        PipelineParams { paper_profile: true, slack: Slack::paper(), ..Default::default() }
    }

    pub fn check(&self) -> Result<()> {
        let c = &self.constants;
        let ints = [c.c_alpha_lo, c.c_alpha_hi, c.c_gamma, c.c_selection, c.c_claim, c.c_final, c.c_overlap];
        if c.c_ell.is_nan() || c.c_ell <= 0.0 || ints.contains(&0) {
            return Err(Error::InvalidParameter("all constants must be positive".into()));
        }
        if self.ell_target == Some(0) {
            return Err(Error::InvalidParameter("ell must be positive".into()));
        }
        if self.gamma == Some(0) {
            return Err(Error::InvalidParameter("gamma must be positive".into()));
        }
        Ok(())
    }

    /// Degree target for an instance with `n` resources.
    pub fn resolve_ell(&self, n: usize, own: usize) -> usize {
        match (self.paper_profile, self.ell_target) {
            (_, Some(l)) => l,
            (true, None) => paper_ell(n, self.constants.c_ell),
            (false, None) => own,
        }
    }

    /// Load cap `max(1, ceil(c_gamma * (d+ell)/ell * ln ell))`, unless overridden.
    pub fn resolve_gamma(&self, d: usize, ell: usize) -> u64 {
        if let Some(g) = self.gamma {
            return g;
        }
        let ell_f = ell.max(1) as f64;
        let g = self.constants.c_gamma as f64 * (d as f64 + ell_f) / ell_f * ell_f.ln();
        (g.ceil() as u64).max(1)
    }
}

pub fn paper_ell(n: usize, c_ell: f64) -> usize {
    let ln = (n.max(2) as f64).ln();
    (c_ell * ln * ln * ln).ceil() as usize
}

/// `ln n`, floored at 1 so formulas dividing by it stay meaningful on tiny
/// instances.
pub fn log_n(n: usize) -> f64 {
    (n.max(1) as f64).ln().max(1.0)
}
