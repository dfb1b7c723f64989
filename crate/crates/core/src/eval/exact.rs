//! Exact expected excess risk on the two-point domain.
//!
//! The expectation is a finite sum over sufficient statistics. Which sum is
//! taken depends on the [`DecisionStatistic`] the learner declares:
//!
//! * labeled-only learners sum over the multinomial of the four labeled cells;
//! * margin-sign learners (the majority vote) reduce to the law of the
//!   unlabeled margin `D = U1 - U2` and the labeled x1 count, which keeps
//!   budgets of millions of unlabeled draws tractable;
//! * positional wrappers sum over a head block and a tail block of labeled
//!   cells.

use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::learners::{DecisionStatistic, Learner, SampleStats};
use crate::numeric::{
    binomial_lower_tail, binomial_pmf, binomial_pmf_range, binomial_upper_tail, composition_count,
    for_each_composition, multinomial_pmf, window_len, BinomialWindow, CompensatedSum,
};
use crate::problem::{excess_risk_table, FiniteLabeledDistribution};

pub const DEFAULT_NODE_CAP: u64 = 1_000_000_000;

/// Result of one exact evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub risk: f64,
    /// Probability mass visited; one up to truncation and rounding.
    pub total_weight: f64,
    /// Number of summands.
    pub terms: u128,
}

#[derive(Debug, Clone, Copy)]
pub struct ExactEngine {
    pub node_cap: u64,
}

impl Default for ExactEngine {
    fn default() -> Self {
        Self { node_cap: DEFAULT_NODE_CAP }
    }
}

/// `[p(x1,0), p(x1,1), p(x2,0), p(x2,1)]`.
fn cell_vector(dist: &FiniteLabeledDistribution) -> [f64; 4] {
    let c = dist.cells();
    [c[0][0], c[0][1], c[1][0], c[1][1]]
}

fn cells_from(counts: &[u64]) -> [[u64; 2]; 2] {
    [[counts[0], counts[1]], [counts[2], counts[3]]]
}

impl ExactEngine {
    pub fn new(node_cap: u64) -> Self {
        Self { node_cap }
    }

    fn check_budget(&self, needed: u128) -> Result<()> {
        if needed > u128::from(self.node_cap) {
            return Err(LabError::EnumerationBudget { needed, cap: self.node_cap });
        }
        Ok(())
    }

    pub fn expected_excess_risk(
        &self,
        learner: &dyn Learner,
        dist: &FiniteLabeledDistribution,
        ell: u64,
        u: u64,
    ) -> Result<f64> {
        Ok(self.evaluate(learner, dist, ell, u)?.risk)
    }

    pub fn evaluate(
        &self,
        learner: &dyn Learner,
        dist: &FiniteLabeledDistribution,
        ell: u64,
        u: u64,
    ) -> Result<Evaluation> {
        if dist.domain_size() != 2 {
            return Err(LabError::DomainSize(dist.domain_size()));
        }
        let class = learner.class();
        if class.get(0).len() != 2 {
            return Err(LabError::DomainSize(class.get(0).len()));
        }
        let excess = excess_risk_table(dist, &class);
        match learner.statistic() {
            DecisionStatistic::Constant => {
                let h = learner.decide(&SampleStats::default())?;
                Ok(Evaluation { risk: excess[h], total_weight: 1.0, terms: 1 })
            }
            DecisionStatistic::LabeledCells => self.labeled_cells(learner, dist, &excess, ell),
            DecisionStatistic::Full => self.full(learner, dist, &excess, ell, u),
            DecisionStatistic::MarginSign { positive, negative } => {
                let law = MarginLaw::direct(u, dist.marginal(0), ell);
                let terms = composition_count(ell, 2) * composition_count(ell, 2);
                self.check_budget(terms)?;
                let (risk, total_weight) = margin_sign_risk(learner, positive, negative, dist, &excess, ell, &law)?;
                Ok(Evaluation { risk, total_weight, terms })
            }
            DecisionStatistic::PositionalBlocks { tail } => self.positional(learner, dist, &excess, ell, u, tail),
            DecisionStatistic::IgnoresTail { tail } => {
                if ell < tail {
                    return Err(LabError::SampleSize(format!("{ell} labeled draws, wrapper drops {tail}")));
                }
                let inner = learner.delegate().ok_or_else(|| {
                    LabError::Precondition(format!("{} declares a dropped tail but no delegate", learner.name()))
                })?;
                self.evaluate(inner.as_ref(), dist, ell - tail, u)
            }
        }
    }

    fn labeled_cells(
        &self,
        learner: &dyn Learner,
        dist: &FiniteLabeledDistribution,
        excess: &[f64],
        ell: u64,
    ) -> Result<Evaluation> {
        let terms = composition_count(ell, 4);
        self.check_budget(terms)?;
        let probs = cell_vector(dist);
        let mut risk = CompensatedSum::new();
        let mut weight = CompensatedSum::new();
        let mut failure = None;
        for_each_composition(ell, 4, |counts| {
            let w = multinomial_pmf(counts, &probs);
            weight.add(w);
            if w == 0.0 || failure.is_some() {
                return;
            }
            match learner.decide(&SampleStats::new(cells_from(counts), [0, 0])) {
                Ok(h) => risk.add(w * excess[h]),
                Err(e) => failure = Some(e),
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(Evaluation { risk: risk.value(), total_weight: weight.value(), terms })
    }

    fn full(
        &self,
        learner: &dyn Learner,
        dist: &FiniteLabeledDistribution,
        excess: &[f64],
        ell: u64,
        u: u64,
    ) -> Result<Evaluation> {
        let p1 = dist.marginal(0);
        let terms = composition_count(ell, 4) * u128::from(window_len(u, p1));
        self.check_budget(terms)?;
        let probs = cell_vector(dist);
        let unlabeled = BinomialWindow::new(u, p1);
        let mut risk = CompensatedSum::new();
        let mut weight = CompensatedSum::new();
        let mut failure = None;
        for_each_composition(ell, 4, |counts| {
            let w_lab = multinomial_pmf(counts, &probs);
            for (u1, w_u) in unlabeled.iter() {
                let w = w_lab * w_u;
                weight.add(w);
                if w == 0.0 || failure.is_some() {
                    continue;
                }
                match learner.decide(&SampleStats::new(cells_from(counts), [u1, u - u1])) {
                    Ok(h) => risk.add(w * excess[h]),
                    Err(e) => failure = Some(e),
                }
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(Evaluation { risk: risk.value(), total_weight: weight.value(), terms })
    }

    fn positional(
        &self,
        learner: &dyn Learner,
        dist: &FiniteLabeledDistribution,
        excess: &[f64],
        ell: u64,
        u: u64,
        tail: u64,
    ) -> Result<Evaluation> {
        if ell < tail {
            return Err(LabError::SampleSize(format!("{ell} labeled draws, wrapper needs at least {tail}")));
        }
        let p1 = dist.marginal(0);
        let u_eff = if learner.uses_unlabeled() { u } else { 0 };
        let terms = composition_count(ell - tail, 4) * composition_count(tail, 4) * u128::from(window_len(u_eff, p1));
        self.check_budget(terms)?;
        let probs = cell_vector(dist);
        let unlabeled = BinomialWindow::new(u_eff, p1);
        let mut tails = Vec::new();
        for_each_composition(tail, 4, |c| tails.push((cells_from(c), multinomial_pmf(c, &probs))));
        let mut risk = CompensatedSum::new();
        let mut weight = CompensatedSum::new();
        let mut failure = None;
        for_each_composition(ell - tail, 4, |counts| {
            let w_head = multinomial_pmf(counts, &probs);
            for (u1, w_u) in unlabeled.iter() {
                let head = SampleStats::new(cells_from(counts), [u1, u_eff - u1]);
                for (t, w_tail) in &tails {
                    let w = w_head * w_u * w_tail;
                    weight.add(w);
                    if w == 0.0 || failure.is_some() {
                        continue;
                    }
                    match learner.decide_blocks(&head, t) {
                        Ok(h) => risk.add(w * excess[h]),
                        Err(e) => failure = Some(e),
                    }
                }
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(Evaluation { risk: risk.value(), total_weight: weight.value(), terms })
    }
}

/// Exact risk under the default node cap.
pub fn exact_expected_excess_risk(
    learner: &dyn Learner,
    dist: &FiniteLabeledDistribution,
    ell: u64,
    u: u64,
) -> Result<f64> {
    ExactEngine::default().expected_excess_risk(learner, dist, ell, u)
}

/// Law of the unlabeled margin `D = U1 - U2` on `[-k_max, k_max]`, with the
/// mass beyond either end folded into the tail probabilities.
#[derive(Debug, Clone)]
pub struct MarginLaw {
    pub k_max: i64,
    /// `gt[k + k_max] = P(D > k)`.
    pub gt: Vec<f64>,
    /// `eq[k + k_max] = P(D = k)`.
    pub eq: Vec<f64>,
    /// `lt[k + k_max] = P(D < k)`.
    pub lt: Vec<f64>,
}

/// Point masses and extreme tails of `2 Bin(n, p) - n` on `[-k_max, k_max]`.
fn signed_binomial_parts(n: u64, p: f64, k_max: i64) -> (Vec<f64>, f64, f64) {
    let width = (2 * k_max + 1) as usize;
    let mut eq = vec![0.0; width];
    let ni = n as i64;
    // D = 2m - n lies in [-k_max, k_max] iff m in [m_lo, m_hi]
    let m_lo = (ni - k_max + 1).div_euclid(2).max(0);
    let m_hi = (ni + k_max).div_euclid(2).min(ni);
    if m_lo <= m_hi {
        let pmf = binomial_pmf_range(n, p, m_lo as u64, m_hi as u64);
        for (off, w) in pmf.into_iter().enumerate() {
            let k = 2 * (m_lo + off as i64) - ni;
            eq[(k + k_max) as usize] = w;
        }
    }
    // P(D > k_max) = P(m >= floor((n + k_max) / 2) + 1)
    let above = (ni + k_max).div_euclid(2) + 1;
    let gt_top = if above <= 0 { 1.0 } else { binomial_upper_tail(n, p, above as u64) };
    // P(D < -k_max) = P(m <= ceil((n - k_max) / 2) - 1)
    let below = (ni - k_max + 1).div_euclid(2) - 1;
    let lt_bottom = if below < 0 { 0.0 } else { binomial_lower_tail(n, p, below as u64) };
    (eq, gt_top, lt_bottom)
}

impl MarginLaw {
    fn from_parts(k_max: i64, eq: Vec<f64>, gt_top: f64, lt_bottom: f64) -> Self {
        let width = eq.len();
        let mut gt = vec![0.0; width];
        let mut lt = vec![0.0; width];
        gt[width - 1] = gt_top;
        for i in (0..width - 1).rev() {
            gt[i] = gt[i + 1] + eq[i + 1];
        }
        lt[0] = lt_bottom;
        for i in 1..width {
            lt[i] = lt[i - 1] + eq[i - 1];
        }
        Self { k_max, gt, eq, lt }
    }

    /// `u` unlabeled draws, each on x1 with probability `p1`.
    pub fn direct(u: u64, p1: f64, k_max: u64) -> Self {
        let k_max = k_max as i64;
        let (eq, gt, lt) = signed_binomial_parts(u, p1, k_max);
        Self::from_parts(k_max, eq, gt, lt)
    }

    /// `u` unlabeled draws of which a `Bin(u, 1/2)` subset lands in this
    /// component; those are on x1 with probability `p1`.
    pub fn thinned(u: u64, p1: f64, k_max: u64) -> Self {
        const CHUNK: usize = 256;
        let k = k_max as i64;
        let width = (2 * k + 1) as usize;
        let split = BinomialWindow::new(u, 0.5);
        let items: Vec<(u64, f64)> = split.iter().collect();
        let partials: Vec<(Vec<CompensatedSum>, CompensatedSum, CompensatedSum)> = items
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut eq = vec![CompensatedSum::new(); width];
                let (mut gt, mut lt) = (CompensatedSum::new(), CompensatedSum::new());
                for &(j, w) in chunk {
                    let (e, g, l) = signed_binomial_parts(j, p1, k);
                    for (slot, v) in eq.iter_mut().zip(e) {
                        slot.add(w * v);
                    }
                    gt.add(w * g);
                    lt.add(w * l);
                }
                (eq, gt, lt)
            })
            .collect();
        let mut eq = vec![CompensatedSum::new(); width];
        let (mut gt, mut lt) = (CompensatedSum::new(), CompensatedSum::new());
        for (e, g, l) in partials {
            for (slot, v) in eq.iter_mut().zip(e) {
                slot.add(v.value());
            }
            gt.add(g.value());
            lt.add(l.value());
        }
        Self::from_parts(k, eq.iter().map(CompensatedSum::value).collect(), gt.value(), lt.value())
    }

    fn index(&self, k: i64) -> usize {
        debug_assert!(k.abs() <= self.k_max);
        (k + self.k_max) as usize
    }

    pub fn greater(&self, k: i64) -> f64 {
        self.gt[self.index(k)]
    }

    pub fn equal(&self, k: i64) -> f64 {
        self.eq[self.index(k)]
    }

    pub fn less(&self, k: i64) -> f64 {
        self.lt[self.index(k)]
    }
}

/// Expected excess of a margin-sign learner on `ell` labeled draws whose
/// unlabeled margin follows `law`. Returns `(risk, total weight)`.
pub(crate) fn margin_sign_risk(
    learner: &dyn Learner,
    positive: usize,
    negative: usize,
    dist: &FiniteLabeledDistribution,
    excess: &[f64],
    ell: u64,
    law: &MarginLaw,
) -> Result<(f64, f64)> {
    if (ell as i64) > law.k_max {
        return Err(LabError::Precondition(format!("margin law covers |k| <= {}, need {ell}", law.k_max)));
    }
    let p1 = dist.marginal(0);
    let eta1 = dist.eta(0).unwrap_or(0.5);
    let eta2 = dist.eta(1).unwrap_or(0.5);
    let mut risk = CompensatedSum::new();
    let mut weight = CompensatedSum::new();
    for a in 0..=ell {
        let w_a = binomial_pmf(ell, a, p1);
        if w_a == 0.0 {
            continue;
        }
        // the learner outputs `positive` iff D > ell - 2a
        let k = ell as i64 - 2 * a as i64;
        let (gt, eq, lt) = (law.greater(k), law.equal(k), law.less(k));
        weight.add(w_a * (gt + eq + lt));
        risk.add(w_a * gt * excess[positive]);
        risk.add(w_a * lt * excess[negative]);
        if eq > 0.0 {
            risk.add(w_a * eq * tie_excess(learner, excess, ell, a, eta1, eta2)?);
        }
    }
    Ok((risk.value(), weight.value()))
}

/// Expected excess at a zero margin given `a` of `ell` labeled draws on x1.
fn tie_excess(learner: &dyn Learner, excess: &[f64], ell: u64, a: u64, eta1: f64, eta2: f64) -> Result<f64> {
    let b = ell - a;
    let unlabeled = [(ell as i64 - 2 * a as i64).max(0) as u64, (2 * a as i64 - ell as i64).max(0) as u64];
    let w1 = binomial_pmf_range(a, eta1, 0, a);
    let w2 = binomial_pmf_range(b, eta2, 0, b);
    let mut acc = CompensatedSum::new();
    for (k1, &v1) in w1.iter().enumerate() {
        if v1 == 0.0 {
            continue;
        }
        for (k2, &v2) in w2.iter().enumerate() {
            if v2 == 0.0 {
                continue;
            }
            let (k1, k2) = (k1 as u64, k2 as u64);
            let stats = SampleStats::new([[a - k1, k1], [b - k2, k2]], unlabeled);
            acc.add(v1 * v2 * excess[learner.decide(&stats)?]);
        }
    }
    Ok(acc.value())
}
