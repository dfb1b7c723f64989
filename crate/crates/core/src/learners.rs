//! Decision rules on the two-point domain.
//!
//! Learners consume [`SampleStats`], the per-cell counts of an i.i.d. sample,
//! and return an index into their hypothesis class. Wrappers that depend on
//! sample positions (label forgetting, sample discarding) additionally
//! implement [`Learner::decide_sequence`].

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::problem::{FiniteLabeledDistribution, HypothesisClass, H01, H10};

/// One draw of a sample on the two-point domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observation {
    Labeled { x: usize, y: u8 },
    Unlabeled { x: usize },
}

impl Observation {
    pub fn x(&self) -> usize {
        match *self {
            Observation::Labeled { x, .. } | Observation::Unlabeled { x } => x,
        }
    }
}

/// Sufficient statistics of a two-point sample of size `(ell, u)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SampleStats {
    /// `labeled[x][y]` = number of labeled draws `(x, y)`.
    pub labeled: [[u64; 2]; 2],
    /// `unlabeled[x]` = number of unlabeled draws of `x`.
    pub unlabeled: [u64; 2],
}

impl SampleStats {
    pub fn new(labeled: [[u64; 2]; 2], unlabeled: [u64; 2]) -> Self {
        Self { labeled, unlabeled }
    }

    pub fn from_observations(sample: &[Observation]) -> Result<Self> {
        let mut stats = Self::default();
        for obs in sample {
            match *obs {
                Observation::Labeled { x, y } => {
                    if x > 1 {
                        return Err(LabError::DomainSize(x + 1));
                    }
                    if y > 1 {
                        return Err(LabError::Domain(format!("label {y}")));
                    }
                    stats.labeled[x][usize::from(y)] += 1;
                }
                Observation::Unlabeled { x } => {
                    if x > 1 {
                        return Err(LabError::DomainSize(x + 1));
                    }
                    stats.unlabeled[x] += 1;
                }
            }
        }
        Ok(stats)
    }

    pub fn ell(&self) -> u64 {
        self.labeled.iter().flatten().sum()
    }

    pub fn u(&self) -> u64 {
        self.unlabeled.iter().sum()
    }

    pub fn check_size(&self, ell: u64, u: u64) -> Result<()> {
        if self.ell() != ell || self.u() != u {
            return Err(LabError::SampleSize(format!(
                "stats hold ({}, {}) draws, declared ({ell}, {u})",
                self.ell(),
                self.u()
            )));
        }
        Ok(())
    }

    /// Total number of draws (labeled or not) landing on `x`.
    pub fn x_count(&self, x: usize) -> u64 {
        self.labeled[x][0] + self.labeled[x][1] + self.unlabeled[x]
    }

    /// `count(x1) - count(x2)` over the whole sample.
    pub fn margin(&self) -> i64 {
        self.x_count(0) as i64 - self.x_count(1) as i64
    }

    /// Labeled draws misclassified by the hypothesis with labels `h`.
    pub fn empirical_errors(&self, h: &[u8]) -> u64 {
        (0..2).map(|x| self.labeled[x][usize::from(1 - h[x])]).sum()
    }

    pub fn without_unlabeled(&self) -> Self {
        Self { labeled: self.labeled, unlabeled: [0, 0] }
    }
}

/// The statistic a learner's decision depends on; the exact engine uses it
/// to pick the cheapest faithful enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecisionStatistic {
    /// Independent of the sample.
    Constant,
    /// Labeled cell counts only.
    LabeledCells,
    /// `positive` if the x1-x2 margin is positive, `negative` if negative;
    /// at a zero margin the decision may depend on the labeled cells only.
    MarginSign { positive: usize, negative: usize },
    /// Labeled cells and unlabeled counts.
    Full,
    /// Depends on which labeled draws are the last `tail` ones; see
    /// [`Learner::decide_blocks`].
    PositionalBlocks { tail: u64 },
    /// Runs [`Learner::delegate`] on the sample minus its last `tail`
    /// labeled draws.
    IgnoresTail { tail: u64 },
}

pub trait Learner: Send + Sync + fmt::Debug {
    /// Stable identifier, as accepted by [`LearnerSpec::from_str`].
    fn name(&self) -> String;

    /// Index of the chosen hypothesis in [`Learner::class`].
    fn decide(&self, stats: &SampleStats) -> Result<usize>;

    /// Decision on an ordered sample; defaults to the sufficient statistics.
    fn decide_sequence(&self, sample: &[Observation]) -> Result<usize> {
        self.decide(&SampleStats::from_observations(sample)?)
    }

    /// Decision when the labeled draws split into a leading block `head`
    /// (which also carries the unlabeled counts) and a trailing block `tail`.
    fn decide_blocks(&self, head: &SampleStats, tail: &[[u64; 2]; 2]) -> Result<usize> {
        let mut stats = *head;
        for (row, add) in stats.labeled.iter_mut().zip(tail) {
            row[0] += add[0];
            row[1] += add[1];
        }
        self.decide(&stats)
    }

    /// The wrapped learner, for wrappers that only drop data.
    fn delegate(&self) -> Option<SharedLearner> {
        None
    }

    fn uses_unlabeled(&self) -> bool;

    fn uses_marginal(&self) -> bool {
        false
    }

    fn statistic(&self) -> DecisionStatistic;

    fn class(&self) -> HypothesisClass {
        HypothesisClass::two_point()
    }
}

pub type SharedLearner = Arc<dyn Learner>;

/// Labeled ERM on `{h01, h10}` with ties resolved towards `h10`.
fn labeled_vote(stats: &SampleStats) -> usize {
    let class = HypothesisClass::two_point();
    let e01 = stats.empirical_errors(class.get(H01).labels());
    let e10 = stats.empirical_errors(class.get(H10).labels());
    if e01 < e10 {
        H01
    } else {
        H10
    }
}

/// Ignores labels except at ties and labels with 1 the point seen more often.
#[derive(Debug, Clone, Copy, Default)]
pub struct MajorityCount;

impl Learner for MajorityCount {
    fn name(&self) -> String {
        "majority".into()
    }

    fn decide(&self, stats: &SampleStats) -> Result<usize> {
        Ok(match stats.margin() {
            m if m > 0 => H10,
            m if m < 0 => H01,
            _ => labeled_vote(stats),
        })
    }

    fn uses_unlabeled(&self) -> bool {
        true
    }

    fn statistic(&self) -> DecisionStatistic {
        DecisionStatistic::MarginSign { positive: H10, negative: H01 }
    }
}

pub fn majority_count_learner() -> SharedLearner {
    Arc::new(MajorityCount)
}

/// Empirical risk minimisation on labeled draws, lowest index on ties.
#[derive(Debug, Clone)]
pub struct Erm {
    class: HypothesisClass,
}

impl Learner for Erm {
    fn name(&self) -> String {
        "erm".into()
    }

    fn decide(&self, stats: &SampleStats) -> Result<usize> {
        let mut best = (u64::MAX, 0);
        for (i, h) in self.class.hypotheses().iter().enumerate() {
            let e = stats.empirical_errors(h.labels());
            if e < best.0 {
                best = (e, i);
            }
        }
        Ok(best.1)
    }

    fn uses_unlabeled(&self) -> bool {
        false
    }

    fn statistic(&self) -> DecisionStatistic {
        DecisionStatistic::LabeledCells
    }

    fn class(&self) -> HypothesisClass {
        self.class.clone()
    }
}

pub fn erm_learner(class: HypothesisClass) -> Result<SharedLearner> {
    if class.get(0).len() != 2 {
        return Err(LabError::DomainSize(class.get(0).len()));
    }
    Ok(Arc::new(Erm { class }))
}

/// Knows the true marginal and outputs `h10` iff `P(x1) >= 1/2`.
#[derive(Debug, Clone, Copy)]
pub struct PluginMarginal {
    pub mass_x1: f64,
}

impl Learner for PluginMarginal {
    fn name(&self) -> String {
        "plugin-marginal".into()
    }

    fn decide(&self, _stats: &SampleStats) -> Result<usize> {
        Ok(if self.mass_x1 >= 0.5 { H10 } else { H01 })
    }

    fn uses_unlabeled(&self) -> bool {
        false
    }

    fn uses_marginal(&self) -> bool {
        true
    }

    fn statistic(&self) -> DecisionStatistic {
        DecisionStatistic::Constant
    }
}

pub fn marginal_informed_learner(marginal: &[f64]) -> Result<SharedLearner> {
    if marginal.len() != 2 {
        return Err(LabError::DomainSize(marginal.len()));
    }
    Ok(Arc::new(PluginMarginal { mass_x1: marginal[0] }))
}

/// Always outputs the same hypothesis.
#[derive(Debug, Clone, Copy)]
pub struct ConstantLearner {
    pub index: usize,
}

impl Learner for ConstantLearner {
    fn name(&self) -> String {
        format!("constant:{}", self.index)
    }

    fn decide(&self, _stats: &SampleStats) -> Result<usize> {
        Ok(self.index)
    }

    fn uses_unlabeled(&self) -> bool {
        false
    }

    fn statistic(&self) -> DecisionStatistic {
        DecisionStatistic::Constant
    }
}

fn split_labeled(sample: &[Observation], tail: u64) -> Result<(Vec<Observation>, Vec<Observation>)> {
    let labeled = sample.iter().filter(|o| matches!(o, Observation::Labeled { .. })).count() as u64;
    if labeled < tail {
        return Err(LabError::SampleSize(format!("{labeled} labeled draws, wrapper needs at least {tail}")));
    }
    let keep = labeled - tail;
    let mut seen = 0u64;
    let (mut head, mut rest) = (Vec::new(), Vec::new());
    for obs in sample {
        match obs {
            Observation::Labeled { .. } => {
                if seen < keep {
                    head.push(*obs);
                } else {
                    rest.push(*obs);
                }
                seen += 1;
            }
            Observation::Unlabeled { .. } => head.push(*obs),
        }
    }
    Ok((head, rest))
}

/// Supervised learner on `ell + u_budget` labeled draws that forgets the
/// labels of the last `u_budget` of them and runs a semi-supervised learner.
#[derive(Debug, Clone)]
pub struct ForgetLabels {
    inner: SharedLearner,
    u_budget: u64,
    /// Set when `inner` drops `k` labeled draws: the reduction then ignores
    /// `k` draws in the middle, which by exchangeability has the same risk
    /// as the reduction of the undropped learner on `k` fewer draws.
    dropped: Option<(u64, SharedLearner)>,
}

impl Learner for ForgetLabels {
    fn name(&self) -> String {
        format!("reduced:{}:{}", self.inner.name(), self.u_budget)
    }

    fn decide(&self, _stats: &SampleStats) -> Result<usize> {
        Err(LabError::Precondition(format!("{} depends on sample order; use decide_sequence", self.name())))
    }

    fn decide_sequence(&self, sample: &[Observation]) -> Result<usize> {
        if let Some(obs) = sample.iter().find(|o| o.x() > 1) {
            return Err(LabError::DomainSize(obs.x() + 1));
        }
        let (head, tail) = split_labeled(sample, self.u_budget)?;
        let seq: Vec<Observation> = head
            .into_iter()
            .filter(|o| matches!(o, Observation::Labeled { .. }))
            .chain(tail.iter().map(|o| Observation::Unlabeled { x: o.x() }))
            .collect();
        self.inner.decide_sequence(&seq)
    }

    fn decide_blocks(&self, head: &SampleStats, tail: &[[u64; 2]; 2]) -> Result<usize> {
        if self.dropped.is_some() {
            return Err(LabError::Precondition(format!("{} has no block form; use decide_sequence", self.name())));
        }
        let tail_total: u64 = tail.iter().flatten().sum();
        if tail_total != self.u_budget {
            return Err(LabError::SampleSize(format!("tail block holds {tail_total} draws, expected {}", self.u_budget)));
        }
        let stats = SampleStats::new(head.labeled, [tail[0][0] + tail[0][1], tail[1][0] + tail[1][1]]);
        self.inner.decide(&stats)
    }

    fn uses_unlabeled(&self) -> bool {
        false
    }

    fn statistic(&self) -> DecisionStatistic {
        match &self.dropped {
            Some((k, _)) => DecisionStatistic::IgnoresTail { tail: *k },
            None => DecisionStatistic::PositionalBlocks { tail: self.u_budget },
        }
    }

    fn delegate(&self) -> Option<SharedLearner> {
        self.dropped.as_ref().map(|(_, l)| l.clone())
    }

    fn class(&self) -> HypothesisClass {
        self.inner.class()
    }
}

/// Turns a semi-supervised learner for `(ell, u_budget)` into a supervised
/// learner for `ell + u_budget` labeled draws.
pub fn forget_labels_reduction(ssl: SharedLearner, u_budget: u64) -> SharedLearner {
    if u_budget == 0 {
        return ssl;
    }
    let dropped = match (ssl.statistic(), ssl.delegate()) {
        (DecisionStatistic::IgnoresTail { tail }, Some(kept)) => Some((tail, forget_labels_reduction(kept, u_budget))),
        _ => None,
    };
    Arc::new(ForgetLabels { inner: ssl, u_budget, dropped })
}

/// Drops the last `k` labeled draws before running the inner learner.
#[derive(Debug, Clone)]
pub struct DiscardLabeled {
    inner: SharedLearner,
    k: u64,
}

impl Learner for DiscardLabeled {
    fn name(&self) -> String {
        format!("discard:{}:{}", self.inner.name(), self.k)
    }

    fn decide(&self, _stats: &SampleStats) -> Result<usize> {
        Err(LabError::Precondition(format!("{} depends on sample order; use decide_sequence", self.name())))
    }

    fn decide_sequence(&self, sample: &[Observation]) -> Result<usize> {
        let (head, _) = split_labeled(sample, self.k)?;
        self.inner.decide_sequence(&head)
    }

    fn decide_blocks(&self, head: &SampleStats, tail: &[[u64; 2]; 2]) -> Result<usize> {
        let tail_total: u64 = tail.iter().flatten().sum();
        if tail_total != self.k {
            return Err(LabError::SampleSize(format!("tail block holds {tail_total} draws, expected {}", self.k)));
        }
        self.inner.decide(head)
    }

    fn delegate(&self) -> Option<SharedLearner> {
        Some(self.inner.clone())
    }

    fn uses_unlabeled(&self) -> bool {
        self.inner.uses_unlabeled()
    }

    fn statistic(&self) -> DecisionStatistic {
        DecisionStatistic::IgnoresTail { tail: self.k }
    }

    fn class(&self) -> HypothesisClass {
        self.inner.class()
    }
}

pub fn discard_labeled(inner: SharedLearner, k: u64) -> SharedLearner {
    if k == 0 {
        return inner;
    }
    Arc::new(DiscardLabeled { inner, k })
}

/// A learner by name; `plugin-marginal` is instantiated per distribution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LearnerSpec {
    Majority,
    Erm,
    PluginMarginal,
    Constant(usize),
    Reduced(Box<LearnerSpec>, u64),
    Discard(Box<LearnerSpec>, u64),
}

impl LearnerSpec {
    pub fn build(&self, dist: &FiniteLabeledDistribution) -> Result<SharedLearner> {
        Ok(match self {
            LearnerSpec::Majority => majority_count_learner(),
            LearnerSpec::Erm => erm_learner(HypothesisClass::two_point())?,
            LearnerSpec::PluginMarginal => marginal_informed_learner(&dist.marginals())?,
            LearnerSpec::Constant(i) => {
                if *i > 1 {
                    return Err(LabError::UnknownLearner(self.to_string()));
                }
                Arc::new(ConstantLearner { index: *i })
            }
            LearnerSpec::Reduced(inner, u) => forget_labels_reduction(inner.build(dist)?, *u),
            LearnerSpec::Discard(inner, k) => discard_labeled(inner.build(dist)?, *k),
        })
    }

    pub fn uses_unlabeled(&self) -> bool {
        match self {
            LearnerSpec::Majority => true,
            LearnerSpec::Erm | LearnerSpec::PluginMarginal | LearnerSpec::Constant(_) | LearnerSpec::Reduced(..) => false,
            LearnerSpec::Discard(inner, _) => inner.uses_unlabeled(),
        }
    }

    /// Labeled draws the learner expects beyond the nominal `ell`.
    pub fn extra_labeled(&self) -> u64 {
        match self {
            LearnerSpec::Reduced(inner, u) => u + inner.extra_labeled(),
            LearnerSpec::Discard(inner, k) => k + inner.extra_labeled(),
            _ => 0,
        }
    }
}

impl fmt::Display for LearnerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LearnerSpec::Majority => f.write_str("majority"),
            LearnerSpec::Erm => f.write_str("erm"),
            LearnerSpec::PluginMarginal => f.write_str("plugin-marginal"),
            LearnerSpec::Constant(i) => write!(f, "constant:{i}"),
            LearnerSpec::Reduced(inner, u) => write!(f, "reduced:{inner}:{u}"),
            LearnerSpec::Discard(inner, k) => write!(f, "discard:{inner}:{k}"),
        }
    }
}

impl FromStr for LearnerSpec {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let wrapped = |rest: &str| -> Result<(Box<LearnerSpec>, u64)> {
            let (inner, n) = rest.rsplit_once(':').ok_or_else(|| LabError::UnknownLearner(s.to_string()))?;
            let n = n.parse::<u64>().map_err(|_| LabError::UnknownLearner(s.to_string()))?;
            Ok((Box::new(inner.parse()?), n))
        };
        match s {
            "majority" => Ok(LearnerSpec::Majority),
            "erm" => Ok(LearnerSpec::Erm),
            "plugin-marginal" => Ok(LearnerSpec::PluginMarginal),
            _ => {
                if let Some(rest) = s.strip_prefix("reduced:") {
                    let (inner, u) = wrapped(rest)?;
                    Ok(LearnerSpec::Reduced(inner, u))
                } else if let Some(rest) = s.strip_prefix("discard:") {
                    let (inner, k) = wrapped(rest)?;
                    Ok(LearnerSpec::Discard(inner, k))
                } else if let Some(rest) = s.strip_prefix("constant:") {
                    let i = rest.parse::<usize>().map_err(|_| LabError::UnknownLearner(s.to_string()))?;
                    if i > 1 {
                        return Err(LabError::UnknownLearner(s.to_string()));
                    }
                    Ok(LearnerSpec::Constant(i))
                } else {
                    Err(LabError::UnknownLearner(s.to_string()))
                }
            }
        }
    }
}
