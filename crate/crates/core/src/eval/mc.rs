//! Monte Carlo estimates of expected excess risk, used as an independent
//! cross-check of the exact engine and for sizes beyond its node cap.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{LabError, Result};
use crate::learners::{DecisionStatistic, Learner, SampleStats};
use crate::problem::{excess_risk_table, FiniteLabeledDistribution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    /// Hoeffding half-width at 99% confidence.
    pub half_width: f64,
    pub reps: u64,
}

/// Seed for work item `index` of a run with master seed `master`, independent
/// of how items are scheduled.
pub fn item_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}

/// Two-sided Hoeffding half-width for the mean of `reps` draws in `[0, range]`.
pub fn hoeffding_half_width(range: f64, reps: u64) -> f64 {
    range * (200f64.ln() / (2.0 * reps as f64)).sqrt()
}

pub fn mc_expected_excess_risk(
    learner: &dyn Learner,
    dist: &FiniteLabeledDistribution,
    ell: u64,
    u: u64,
    n_reps: u64,
    seed: u64,
) -> Result<McEstimate> {
    if n_reps == 0 {
        return Err(LabError::Precondition("at least one repetition is required".into()));
    }
    if dist.domain_size() != 2 {
        return Err(LabError::DomainSize(dist.domain_size()));
    }
    let excess = excess_risk_table(dist, &learner.class());
    let max_excess = excess.iter().copied().fold(0.0, f64::max);
    let tail = match learner.statistic() {
        DecisionStatistic::PositionalBlocks { tail } | DecisionStatistic::IgnoresTail { tail } => tail,
        _ => 0,
    };
    if ell < tail {
        return Err(LabError::SampleSize(format!("{ell} labeled draws, wrapper needs at least {tail}")));
    }
    let c = dist.cells();
    let cumulative = [c[0][0], c[0][0] + c[0][1], c[0][0] + c[0][1] + c[1][0]];
    let unlabeled = if learner.uses_unlabeled() && u > 0 {
        Some(Binomial::new(u, dist.marginal(0).clamp(0.0, 1.0)).map_err(|e| LabError::Domain(e.to_string()))?)
    } else {
        None
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..n_reps {
        let mut head = SampleStats::default();
        let mut tail_cells = [[0u64; 2]; 2];
        for pos in 0..ell {
            let r: f64 = rng.gen();
            let cell = cumulative.iter().position(|&t| r < t).unwrap_or(3);
            let (x, y) = (cell / 2, cell % 2);
            if pos >= ell - tail {
                tail_cells[x][y] += 1;
            } else {
                head.labeled[x][y] += 1;
            }
        }
        if let Some(bin) = &unlabeled {
            let u1 = bin.sample(&mut rng);
            head.unlabeled = [u1, u - u1];
        }
        total += excess[learner.decide_blocks(&head, &tail_cells)?];
    }
    Ok(McEstimate {
        estimate: total / n_reps as f64,
        half_width: hoeffding_half_width(max_excess, n_reps),
        reps: n_reps,
    })
}
