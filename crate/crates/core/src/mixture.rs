//! Half-half mixtures of two problems on disjoint domains.
//!
//! Component A is a two-coin problem evaluated by the exact engine;
//! component B is either another finite problem or learning a threshold on
//! `[0, 1]` under the uniform marginal, whose ERM risk has a closed form.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::eval::budget::UnlabeledBudget;
use crate::eval::exact::{margin_sign_risk, ExactEngine, MarginLaw};
use crate::eval::minimax::{adversarial_pairs, bayes_test_minimax_lower_bound, sup_over_family_pruned, SupResult};
use crate::eval::rates::{fit_rate, RateSeries};
use crate::learners::{DecisionStatistic, LearnerSpec, Observation, SharedLearner};
use crate::numeric::{binomial_pmf, BinomialWindow, CompensatedSum};
use crate::problem::{
    excess_risk_table, materialize_family, FamilyKind, FiniteLabeledDistribution, GridSpec, Hypothesis,
    HypothesisClass, TwoPointParams,
};

/// Thresholds sampled when searching for the worst threshold problem.
pub const THRESHOLD_GRID: [f64; 4] = [0.0, 0.25, 0.5, 0.75];

/// Uniform marginal on `[0, 1]` with labels `1{x >= t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdProblem {
    pub t: f64,
}

impl ThresholdProblem {
    pub fn new(t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(LabError::Domain(format!("threshold {t} not in [0, 1]")));
        }
        Ok(Self { t })
    }

    /// Excess risk of predicting `1{x >= s}`; Bayes risk is zero.
    pub fn excess(&self, s: f64) -> f64 {
        (s - self.t).abs()
    }

    pub fn label(&self, x: f64) -> u8 {
        u8::from(x >= self.t)
    }
}

/// Threshold at the smallest point labeled 1, or `1.0` (all zeros) if there is none.
pub fn threshold_erm(labeled: &[(f64, u8)]) -> f64 {
    labeled.iter().filter(|p| p.1 == 1).map(|p| p.0).fold(1.0, f64::min)
}

/// `E[excess]` of [`threshold_erm`] on `ell` draws: `(1 - t^(ell+1)) / (ell + 1)`.
pub fn threshold_erm_exact_risk(t: f64, ell: u64) -> Result<f64> {
    ThresholdProblem::new(t)?;
    let n = ell as f64 + 1.0;
    Ok((1.0 - t.powf(n)) / n)
}

/// One side of a mixture, fixed to a single distribution and learner.
#[derive(Debug, Clone)]
pub enum Component {
    Finite { dist: FiniteLabeledDistribution, learner: SharedLearner },
    Threshold(ThresholdProblem),
}

impl Component {
    /// Exact risk with `i` labeled and `j` unlabeled draws.
    pub fn risk(&self, engine: &ExactEngine, i: u64, j: u64) -> Result<f64> {
        match self {
            Component::Finite { dist, learner } => engine.expected_excess_risk(learner.as_ref(), dist, i, j),
            Component::Threshold(p) => threshold_erm_exact_risk(p.t, i),
        }
    }

    /// `E_j r(i, j)` with `j ~ Bin(u, 1/2)`, for every `i` in `0..=ell`.
    pub fn thinned_risks(&self, engine: &ExactEngine, ell: u64, u: u64) -> Result<Vec<f64>> {
        let Component::Finite { dist, learner } = self else {
            return (0..=ell).map(|i| self.risk(engine, i, 0)).collect();
        };
        if dist.domain_size() != 2 {
            return Err(LabError::DomainSize(dist.domain_size()));
        }
        if !learner.uses_unlabeled() {
            return (0..=ell).map(|i| self.risk(engine, i, 0)).collect();
        }
        if let DecisionStatistic::MarginSign { positive, negative } = learner.statistic() {
            let excess = excess_risk_table(dist, &learner.class());
            let law = MarginLaw::thinned(u, dist.marginal(0), ell);
            return (0..=ell)
                .map(|i| Ok(margin_sign_risk(learner.as_ref(), positive, negative, dist, &excess, i, &law)?.0))
                .collect();
        }
        let split = BinomialWindow::new(u, 0.5);
        (0..=ell)
            .map(|i| {
                let mut acc = CompensatedSum::new();
                for (j, w) in split.iter() {
                    acc.add(w * self.risk(engine, i, j)?);
                }
                Ok(acc.value())
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct MixtureProblem {
    pub a: Component,
    pub b: Component,
}

/// Exact mixture risk, `sum_i Bin(ell, 1/2)(i) (E r_A(i, .) + E r_B(ell - i, .)) / 2`.
pub fn mixture_exact_risk(engine: &ExactEngine, mix: &MixtureProblem, ell: u64, u: u64) -> Result<f64> {
    let ra = mix.a.thinned_risks(engine, ell, u)?;
    let rb = mix.b.thinned_risks(engine, ell, u)?;
    Ok(split_average(&ra, &rb, ell))
}

fn split_average(ra: &[f64], rb: &[f64], ell: u64) -> f64 {
    let mut acc = CompensatedSum::new();
    for i in 0..=ell {
        acc.add(binomial_pmf(ell, i, 0.5) * 0.5 * (ra[i as usize] + rb[(ell - i) as usize]));
    }
    acc.value()
}

/// The same quantity as an explicit double sum over both splits.
pub fn mixture_exact_risk_generic(engine: &ExactEngine, mix: &MixtureProblem, ell: u64, u: u64) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    for i in 0..=ell {
        let wi = binomial_pmf(ell, i, 0.5);
        for j in 0..=u {
            let w = wi * binomial_pmf(u, j, 0.5);
            acc.add(w * 0.5 * (mix.a.risk(engine, i, j)? + mix.b.risk(engine, ell - i, u - j)?));
        }
    }
    Ok(acc.value())
}

/// A point of the combined domain, tagged by component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MixedObservation {
    A(Observation),
    B(Observation),
    /// A draw of the threshold component; `y` is absent when unlabeled.
    BContinuous { x: f64, y: Option<u8> },
}

#[derive(Debug, Clone)]
pub enum ComponentRule {
    Finite(SharedLearner),
    ThresholdErm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComponentOutput {
    Index(usize),
    Threshold(f64),
}

/// Predictions of the two component learners, used on their own domains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stitched {
    pub a: ComponentOutput,
    pub b: ComponentOutput,
}

/// Routes each draw to its component's learner and stitches the outputs.
#[derive(Debug, Clone)]
pub struct MixtureLearner {
    pub a: ComponentRule,
    pub b: ComponentRule,
}

pub fn mixture_learner(a: ComponentRule, b: ComponentRule) -> MixtureLearner {
    MixtureLearner { a, b }
}

impl MixtureLearner {
    pub fn decide(&self, sample: &[MixedObservation]) -> Result<Stitched> {
        let (mut a, mut b, mut cont) = (Vec::new(), Vec::new(), Vec::new());
        for obs in sample {
            match *obs {
                MixedObservation::A(o) => a.push(o),
                MixedObservation::B(o) => b.push(o),
                MixedObservation::BContinuous { x, y: Some(y) } => cont.push((x, y)),
                MixedObservation::BContinuous { y: None, .. } => {}
            }
        }
        let run = |rule: &ComponentRule, finite: &[Observation]| -> Result<ComponentOutput> {
            match rule {
                ComponentRule::Finite(l) => Ok(ComponentOutput::Index(l.decide_sequence(finite)?)),
                ComponentRule::ThresholdErm => Ok(ComponentOutput::Threshold(threshold_erm(&cont))),
            }
        };
        Ok(Stitched { a: run(&self.a, &a)?, b: run(&self.b, &b)? })
    }
}

/// `P = P_A / 2 + P_B / 2` on the concatenated domain.
pub fn combine(pa: &FiniteLabeledDistribution, pb: &FiniteLabeledDistribution) -> FiniteLabeledDistribution {
    let cells = pa.cells().iter().chain(pb.cells()).map(|c| [c[0] / 2.0, c[1] / 2.0]).collect();
    FiniteLabeledDistribution::new(cells).expect("halves of valid tables form a valid table")
}

/// All concatenations `(h_a, h_b)`, indexed `a * |H_B| + b`.
pub fn product_class(ha: &HypothesisClass, hb: &HypothesisClass) -> HypothesisClass {
    let mut hyps = Vec::new();
    for a in ha.hypotheses() {
        for b in hb.hypotheses() {
            let labels = a.labels().iter().chain(b.labels()).copied().collect();
            hyps.push(Hypothesis::new(labels).expect("binary labels"));
        }
    }
    HypothesisClass::new(hyps).expect("nonempty")
}

/// Upper bound `2 alpha ((1 + exp(-2 beta^2)) / 2)^(ell + u)` on the majority
/// vote's component risk when each draw lands in the component with probability 1/2.
pub fn thinned_majority_bound(p: &TwoPointParams, ell: u64, u: u64) -> f64 {
    let per_draw = (1.0 + (-2.0 * p.beta * p.beta).exp()) / 2.0;
    2.0 * p.alpha * ((ell + u) as f64 * per_draw.ln()).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureSup {
    pub risk: f64,
    /// `sup E r_A / 2` and `sup E r_B / 2`.
    pub a_part: f64,
    pub b_part: f64,
    pub a_worst: String,
    pub t_worst: f64,
    pub evaluated: usize,
    pub pruned: usize,
}

/// Worst case of the mixture of a two-coin family (learner `a_learner`) and
/// the threshold problem (ERM) over `THRESHOLD_GRID`. The risk separates
/// into the two components, so each is maximised on its own.
pub fn mixture_sup(
    engine: &ExactEngine,
    a_family: &FamilyKind,
    grid: &GridSpec,
    a_learner: &LearnerSpec,
    ell: u64,
    u: u64,
) -> Result<MixtureSup> {
    let members = materialize_family(a_family, &grid.clone().injecting(ell, u))?;
    let a_risk = |m: &crate::problem::FamilyMember| -> Result<f64> {
        let comp = Component::Finite { dist: m.dist.clone(), learner: a_learner.build(&m.dist)? };
        let ra = comp.thinned_risks(engine, ell, u)?;
        let zero = vec![0.0; ra.len()];
        Ok(2.0 * split_average(&ra, &zero, ell))
    };
    let sup: SupResult = if *a_learner == LearnerSpec::Majority && a_family.is_two_point() {
        sup_over_family_pruned(&members, |m| thinned_majority_bound(m.two_point().expect("two-coin"), ell, u), a_risk)?
    } else {
        sup_over_family_pruned(&members, |_| f64::INFINITY, a_risk)?
    };
    let mut b_best = (f64::NEG_INFINITY, 0.0);
    for &t in &THRESHOLD_GRID {
        let rb = Component::Threshold(ThresholdProblem::new(t)?).thinned_risks(engine, ell, u)?;
        let zero = vec![0.0; rb.len()];
        let v = 2.0 * split_average(&zero, &rb, ell);
        if v > b_best.0 {
            b_best = (v, t);
        }
    }
    let (a_part, b_part) = (0.5 * sup.worst_risk, 0.5 * b_best.0);
    Ok(MixtureSup {
        risk: a_part + b_part,
        a_part,
        b_part,
        a_worst: sup.worst.to_string(),
        t_worst: b_best.1,
        evaluated: sup.evaluated,
        pruned: sup.pruned,
    })
}

/// Lower bound on the mixture's minimax risk from component A alone: with
/// `i ~ Bin(ell, 1/2)` labeled and `j ~ Bin(u, 1/2)` unlabeled draws in A,
/// any algorithm pays at least half the A-side Bayes-test bound.
pub fn mixture_lower_bound(engine: &ExactEngine, a_family: &FamilyKind, ell: u64, u: u64) -> Result<(f64, Option<TwoPointParams>)> {
    let class = HypothesisClass::two_point();
    let split_u = BinomialWindow::new(u, 0.5);
    let mut best: (f64, Option<TwoPointParams>) = (0.0, None);
    for (p, m) in adversarial_pairs(a_family, ell, u) {
        let (d0, d1) = (p.to_distribution(), m.to_distribution());
        let mut acc = CompensatedSum::new();
        for i in 0..=ell {
            let wi = binomial_pmf(ell, i, 0.5);
            for (j, wj) in split_u.iter() {
                acc.add(wi * wj * 0.5 * bayes_test_minimax_lower_bound(engine, &d0, &d1, &class, i, j)?);
            }
        }
        if acc.value() > best.0 {
            best = (acc.value(), Some(p));
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetInsensitivity {
    pub fits: Vec<(String, RateSeries)>,
    /// Budgets left out because they are not superlinear.
    pub excluded: Vec<String>,
    pub max_slope_gap: f64,
    pub within_tolerance: bool,
}

/// Fits the worst-case SSL mixture slope for each budget and compares them.
pub fn budget_insensitivity_check(
    engine: &ExactEngine,
    a_family: &FamilyKind,
    grid: &GridSpec,
    ell_grid: &[u64],
    budgets: &[UnlabeledBudget],
    tolerance: f64,
) -> Result<BudgetInsensitivity> {
    let mut fits = Vec::new();
    let mut excluded = Vec::new();
    for b in budgets {
        if !b.is_superlinear() {
            excluded.push(b.to_string());
            continue;
        }
        let pts = ell_grid
            .iter()
            .map(|&ell| Ok((ell, mixture_sup(engine, a_family, grid, &LearnerSpec::Majority, ell, b.eval(ell))?.risk)))
            .collect::<Result<Vec<_>>>()?;
        fits.push((b.to_string(), fit_rate(&pts)?));
    }
    if fits.len() < 2 {
        return Err(LabError::Precondition("need at least two superlinear budgets".into()));
    }
    let slopes: Vec<f64> = fits.iter().map(|f| f.1.slope).collect();
    let max = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = slopes.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(BudgetInsensitivity { fits, excluded, max_slope_gap: max - min, within_tolerance: max - min <= tolerance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{erm_learner, majority_count_learner};
    use crate::problem::{excess_risk, two_point_distribution, Sign};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    #[test]
    fn threshold_closed_form() {
        assert_relative_eq!(threshold_erm_exact_risk(0.0, 9).unwrap(), 0.1);
        assert_eq!(threshold_erm_exact_risk(1.0, 9).unwrap(), 0.0);
        for ell in [1u64, 5, 40] {
            let worst = (0..=100)
                .map(|k| threshold_erm_exact_risk(k as f64 / 100.0, ell).unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            assert_relative_eq!(worst, 1.0 / (ell as f64 + 1.0));
        }
    }

    #[test]
    fn threshold_closed_form_matches_simulation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(t, ell) in &[(0.0, 5usize), (0.5, 3)] {
            let p = ThresholdProblem::new(t).unwrap();
            let reps = 1_000_000;
            let (mut sum, mut sq) = (0.0, 0.0);
            let mut sample = Vec::with_capacity(ell);
            for _ in 0..reps {
                sample.clear();
                for _ in 0..ell {
                    let x: f64 = rng.gen();
                    sample.push((x, p.label(x)));
                }
                let e = p.excess(threshold_erm(&sample));
                sum += e;
                sq += e * e;
            }
            let mean = sum / reps as f64;
            let sd = ((sq / reps as f64 - mean * mean) / reps as f64).sqrt();
            let exact = threshold_erm_exact_risk(t, ell as u64).unwrap();
            assert!((mean - exact).abs() <= 3.0 * sd, "t={t}: {mean} vs {exact} (sd {sd})");
        }
    }

    fn two_point_mix(learner_b: SharedLearner) -> MixtureProblem {
        let pa = two_point_distribution(0.2, 0.1, Sign::Plus).unwrap();
        let pb = two_point_distribution(0.3, 0.25, Sign::Minus).unwrap();
        MixtureProblem {
            a: Component::Finite { dist: pa, learner: majority_count_learner() },
            b: Component::Finite { dist: pb, learner: learner_b },
        }
    }

    #[test]
    fn fast_path_matches_double_sum() {
        let e = ExactEngine::default();
        let mix = two_point_mix(erm_learner(HypothesisClass::two_point()).unwrap());
        for (ell, u) in [(0, 0), (1, 0), (3, 2), (6, 9)] {
            let fast = mixture_exact_risk(&e, &mix, ell, u).unwrap();
            let slow = mixture_exact_risk_generic(&e, &mix, ell, u).unwrap();
            assert_relative_eq!(fast, slow, max_relative = 1e-12, epsilon = 1e-16);
        }
        let thr = MixtureProblem { a: mix.a.clone(), b: Component::Threshold(ThresholdProblem::new(0.0).unwrap()) };
        assert_relative_eq!(
            mixture_exact_risk(&e, &thr, 5, 7).unwrap(),
            mixture_exact_risk_generic(&e, &thr, 5, 7).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn bayes_constant_b_halves_thinned_a() {
        let e = ExactEngine::default();
        let bayes_b = Arc::new(crate::learners::ConstantLearner { index: 0 });
        let mix = two_point_mix(bayes_b);
        let (ell, u) = (7, 5);
        let ra = mix.a.thinned_risks(&e, ell, u).unwrap();
        let expected: f64 = (0..=ell).map(|i| binomial_pmf(ell, i, 0.5) * ra[i as usize]).sum::<f64>() / 2.0;
        assert_relative_eq!(mixture_exact_risk(&e, &mix, ell, u).unwrap(), expected, max_relative = 1e-12);
    }

    #[test]
    fn routing_with_empty_b_sample() {
        let learner = mixture_learner(ComponentRule::Finite(majority_count_learner()), ComponentRule::ThresholdErm);
        let sample = [
            MixedObservation::A(Observation::Unlabeled { x: 0 }),
            MixedObservation::A(Observation::Labeled { x: 0, y: 1 }),
        ];
        let out = learner.decide(&sample).unwrap();
        assert_eq!(out.a, ComponentOutput::Index(1));
        assert_eq!(out.b, ComponentOutput::Threshold(1.0));
    }

    proptest! {
        #[test]
        fn excess_decomposes(a1 in 0.01..0.49f64, b1 in 0.01..0.49f64, a2 in 0.01..0.49f64, b2 in 0.01..0.49f64,
                             s1 in any::<bool>(), s2 in any::<bool>()) {
            let sign = |s: bool| if s { Sign::Plus } else { Sign::Minus };
            let pa = two_point_distribution(a1, b1, sign(s1)).unwrap();
            let pb = two_point_distribution(a2, b2, sign(s2)).unwrap();
            let h = HypothesisClass::two_point();
            let mix = combine(&pa, &pb);
            let prod = product_class(&h, &h);
            for ia in 0..2 {
                for ib in 0..2 {
                    let whole = excess_risk(&mix, prod.get(ia * 2 + ib), &prod);
                    let parts = 0.5 * excess_risk(&pa, h.get(ia), &h) + 0.5 * excess_risk(&pb, h.get(ib), &h);
                    prop_assert!((whole - parts).abs() <= 1e-15);
                }
            }
        }
    }
}
