//! Worst case over families, Bayes-test lower bounds on distribution pairs,
//! and best-in-menu minimax values.

use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::eval::exact::ExactEngine;
use crate::learners::LearnerSpec;
use crate::numeric::{composition_count, for_each_composition, multinomial_pmf, window_bounds, BinomialWindow, CompensatedSum};
use crate::problem::{
    adversarial_alpha, adversarial_beta, excess_risk_table, pi_ell_beta_floor, FamilyKind, FamilyMember,
    FiniteLabeledDistribution, HypothesisClass, MemberParams, Sign, TwoPointParams,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SupResult {
    pub worst_risk: f64,
    pub worst: MemberParams,
    /// Members whose risk was computed exactly.
    pub evaluated: usize,
    /// Members skipped because an upper bound ruled them out.
    pub pruned: usize,
}

fn argmax(risks: &[f64]) -> usize {
    let mut best = 0;
    for (i, &r) in risks.iter().enumerate() {
        if r > risks[best] {
            best = i;
        }
    }
    best
}

/// Largest exact risk of `learner` over `members`.
pub fn sup_over_family(
    engine: &ExactEngine,
    learner: &LearnerSpec,
    members: &[FamilyMember],
    ell: u64,
    u: u64,
) -> Result<SupResult> {
    if members.is_empty() {
        return Err(LabError::EmptyGrid("no family members to maximise over".into()));
    }
    let risks = members
        .par_iter()
        .map(|m| engine.expected_excess_risk(learner.build(&m.dist)?.as_ref(), &m.dist, ell, u))
        .collect::<Result<Vec<f64>>>()?;
    let i = argmax(&risks);
    Ok(SupResult { worst_risk: risks[i], worst: members[i].params.clone(), evaluated: members.len(), pruned: 0 })
}

/// Like [`sup_over_family`], but visits members in decreasing order of
/// `bound` (an upper bound on each member's risk) and stops once no
/// remaining bound can beat the best risk found.
pub fn sup_over_family_pruned(
    members: &[FamilyMember],
    bound: impl Fn(&FamilyMember) -> f64,
    mut risk: impl FnMut(&FamilyMember) -> Result<f64>,
) -> Result<SupResult> {
    if members.is_empty() {
        return Err(LabError::EmptyGrid("no family members to maximise over".into()));
    }
    let mut order: Vec<(usize, f64)> = members.iter().enumerate().map(|(i, m)| (i, bound(m))).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut best: Option<(usize, f64)> = None;
    let mut evaluated = 0;
    for &(i, b) in &order {
        if let Some((_, r)) = best {
            if b < r {
                break;
            }
        }
        let r = risk(&members[i])?;
        evaluated += 1;
        best = match best {
            Some((j, s)) if s > r || (s == r && j < i) => Some((j, s)),
            _ => Some((i, r)),
        };
    }
    let (i, r) = best.expect("nonempty");
    Ok(SupResult { worst_risk: r, worst: members[i].params.clone(), evaluated, pruned: members.len() - evaluated })
}

/// Hoeffding bound `2 alpha exp(-2 beta^2 n)` on the majority vote's risk
/// with `n` draws in total.
pub fn majority_hoeffding_bound(p: &TwoPointParams, n: u64) -> f64 {
    2.0 * p.alpha * (-2.0 * p.beta * p.beta * n as f64).exp()
}

/// Whether the table factors into an x-coin and an independent
/// label-consistency coin, i.e. `eta(x1) + eta(x2) = 1`.
fn coin_factors(d: &FiniteLabeledDistribution) -> Option<(f64, f64)> {
    if d.domain_size() != 2 {
        return None;
    }
    let (e1, e2) = (d.eta(0)?, d.eta(1)?);
    ((e1 + e2 - 1.0).abs() <= 1e-12).then_some((d.marginal(0), e1))
}

/// Error of the uniform-prior Bayes test between `p0` and `p1` given an
/// `(ell, u)` sample.
pub fn bayes_test_error(
    engine: &ExactEngine,
    p0: &FiniteLabeledDistribution,
    p1: &FiniteLabeledDistribution,
    ell: u64,
    u: u64,
) -> Result<f64> {
    if p0.domain_size() != p1.domain_size() {
        return Err(LabError::Domain("distributions live on different domains".into()));
    }
    match (coin_factors(p0), coin_factors(p1)) {
        (Some(a), Some(b)) => coin_pair_error(a, b, ell, u),
        _ => generic_test_error(engine, p0, p1, ell, u),
    }
}

/// Two-coin pairs: `(x1 count over all draws, consistent labels)` is sufficient.
fn coin_pair_error((q0, c0): (f64, f64), (q1, c1): (f64, f64), ell: u64, u: u64) -> Result<f64> {
    let n = ell.saturating_add(u);
    let (lo0, hi0) = window_bounds(n, q0);
    let (lo1, hi1) = window_bounds(n, q1);
    let (lo, hi) = (lo0.max(lo1), hi0.min(hi1));
    if lo > hi {
        return Ok(0.0);
    }
    let x0 = BinomialWindow::covering(n, q0, lo, hi);
    let x1 = BinomialWindow::covering(n, q1, lo, hi);
    let y0 = BinomialWindow::covering(ell, c0, 0, ell);
    let y1 = BinomialWindow::covering(ell, c1, 0, ell);
    let mut acc = CompensatedSum::new();
    for k in lo..=hi {
        let (a, b) = (x0.get(k), x1.get(k));
        for c in 0..=ell {
            acc.add((a * y0.get(c)).min(b * y1.get(c)));
        }
    }
    Ok(0.5 * acc.value())
}

fn generic_test_error(
    engine: &ExactEngine,
    p0: &FiniteLabeledDistribution,
    p1: &FiniteLabeledDistribution,
    ell: u64,
    u: u64,
) -> Result<f64> {
    let d = p0.domain_size();
    let terms = composition_count(ell, 2 * d as u32) * composition_count(u, d as u32);
    if terms > u128::from(engine.node_cap) {
        return Err(LabError::EnumerationBudget { needed: terms, cap: engine.node_cap });
    }
    let flat = |p: &FiniteLabeledDistribution| p.cells().iter().flat_map(|c| [c[0], c[1]]).collect::<Vec<_>>();
    let (c0, c1) = (flat(p0), flat(p1));
    let (m0, m1) = (p0.marginals(), p1.marginals());
    let mut unlabeled = Vec::new();
    for_each_composition(u, d, |c| unlabeled.push((multinomial_pmf(c, &m0), multinomial_pmf(c, &m1))));
    let mut acc = CompensatedSum::new();
    for_each_composition(ell, 2 * d, |c| {
        let (a, b) = (multinomial_pmf(c, &c0), multinomial_pmf(c, &c1));
        for &(ua, ub) in &unlabeled {
            acc.add((a * ua).min(b * ub));
        }
    });
    Ok(0.5 * acc.value())
}

/// Excess risk of the worst class member under `d`.
fn wrong_excess(d: &FiniteLabeledDistribution, class: &HypothesisClass) -> f64 {
    excess_risk_table(d, class).into_iter().fold(0.0, f64::max)
}

/// `(Bayes test error) x (excess of the wrong hypothesis)`, a lower bound on
/// the minimax expected excess risk over `{p0, p1}` for any algorithm.
pub fn bayes_test_minimax_lower_bound(
    engine: &ExactEngine,
    p0: &FiniteLabeledDistribution,
    p1: &FiniteLabeledDistribution,
    class: &HypothesisClass,
    ell: u64,
    u: u64,
) -> Result<f64> {
    let err = bayes_test_error(engine, p0, p1, ell, u)?;
    Ok(err * wrong_excess(p0, class).min(wrong_excess(p1, class)))
}

/// Multiples of the Le Cam point tried when searching for the strongest pair.
pub const LADDER: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

/// In-family sign-flipped pairs around the Le Cam point `(1/(8 sqrt ell), 1/(8 sqrt(ell + u)))`,
/// plus the family's boundary values.
pub fn adversarial_pairs(kind: &FamilyKind, ell: u64, u: u64) -> Vec<(TwoPointParams, TwoPointParams)> {
    let (Some(a_star), Some(b_star)) = (adversarial_alpha(ell.max(1)), adversarial_beta(ell.max(1), u)) else {
        return Vec::new();
    };
    let alphas: Vec<f64> = LADDER.iter().map(|k| k * a_star).collect();
    let mut betas: Vec<f64> = LADDER.iter().map(|k| k * b_star).collect();
    let mut candidates = Vec::new();
    match kind {
        FamilyKind::Pi1 => {
            for v in alphas.iter().chain(&betas) {
                candidates.push((*v, *v));
            }
        }
        FamilyKind::PiEll(l) => {
            let floor = pi_ell_beta_floor(*l);
            betas.extend([floor, 1.25 * floor, 1.5 * floor]);
        }
        FamilyKind::PiC(c) => betas.extend([*c, 1.25 * c, 1.5 * c]),
        _ => {}
    }
    if !matches!(kind, FamilyKind::Pi1) {
        for &a in &alphas {
            for &b in &betas {
                candidates.push((a, b));
            }
        }
    }
    let mut out = Vec::new();
    for (a, b) in candidates {
        let (Ok(plus), Ok(minus)) = (TwoPointParams::new(a, b, Sign::Plus), TwoPointParams::new(a, b, Sign::Minus))
        else {
            continue;
        };
        if kind.admits(&plus) && kind.admits(&minus) && !out.contains(&(plus, minus)) {
            out.push((plus, minus));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairBound {
    pub value: f64,
    /// The `+` member of the attaining pair; `None` when no pair lies in the family.
    pub attained_at: Option<TwoPointParams>,
    pub pairs_tried: usize,
}

/// Strongest Bayes-test lower bound over [`adversarial_pairs`].
pub fn family_lower_bound(engine: &ExactEngine, kind: &FamilyKind, ell: u64, u: u64) -> Result<PairBound> {
    let pairs = adversarial_pairs(kind, ell, u);
    let class = HypothesisClass::two_point();
    let values = pairs
        .par_iter()
        .map(|(p, m)| bayes_test_minimax_lower_bound(engine, &p.to_distribution(), &m.to_distribution(), &class, ell, u))
        .collect::<Result<Vec<f64>>>()?;
    if values.is_empty() {
        return Ok(PairBound { value: 0.0, attained_at: None, pairs_tried: 0 });
    }
    let i = argmax(&values);
    Ok(PairBound { value: values[i], attained_at: Some(pairs[i].0), pairs_tried: pairs.len() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MenuResult {
    pub risk: f64,
    pub learner: LearnerSpec,
    pub worst: MemberParams,
}

/// Smallest worst-case risk among `menu`; with `with_discards`, every learner
/// may also drop up to `ell` of its labeled draws.
pub fn menu_minimax(
    engine: &ExactEngine,
    menu: &[LearnerSpec],
    members: &[FamilyMember],
    ell: u64,
    u: u64,
    with_discards: bool,
) -> Result<MenuResult> {
    let mut candidates = Vec::new();
    for spec in menu {
        candidates.push(spec.clone());
        if with_discards {
            for k in 1..=ell {
                candidates.push(LearnerSpec::Discard(Box::new(spec.clone()), k));
            }
        }
    }
    if candidates.is_empty() {
        return Err(LabError::Precondition("empty learner menu".into()));
    }
    let mut best: Option<MenuResult> = None;
    for spec in candidates {
        let sup = sup_over_family(engine, &spec, members, ell, u)?;
        if best.as_ref().is_none_or(|b| sup.worst_risk < b.risk) {
            best = Some(MenuResult { risk: sup.worst_risk, learner: spec, worst: sup.worst });
        }
    }
    Ok(best.expect("nonempty menu"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{materialize_family, two_point_distribution, GridSpec};
    use approx::assert_relative_eq;

    #[test]
    fn identical_sources_give_half() {
        let e = ExactEngine::default();
        let d = two_point_distribution(0.2, 0.1, Sign::Plus).unwrap();
        assert_relative_eq!(bayes_test_error(&e, &d, &d, 7, 3).unwrap(), 0.5, epsilon = 1e-12);
        let class = HypothesisClass::two_point();
        assert_relative_eq!(bayes_test_minimax_lower_bound(&e, &d, &d, &class, 7, 3).unwrap(), 0.2, epsilon = 1e-12);
        let m = two_point_distribution(0.2, 0.1, Sign::Minus).unwrap();
        assert_relative_eq!(bayes_test_error(&e, &d, &m, 0, 0).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn coin_path_matches_generic_enumeration() {
        let e = ExactEngine::default();
        for &(a, b) in &[(0.1, 0.2), (0.3, 0.05), (0.02, 0.4)] {
            let p = two_point_distribution(a, b, Sign::Plus).unwrap();
            let m = two_point_distribution(a, b, Sign::Minus).unwrap();
            for (ell, u) in [(1, 0), (3, 2), (6, 5)] {
                let fast = bayes_test_error(&e, &p, &m, ell, u).unwrap();
                let slow = generic_test_error(&e, &p, &m, ell, u).unwrap();
                assert_relative_eq!(fast, slow, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn singleton_family_sup_is_the_member_risk() {
        let e = ExactEngine::default();
        let d = two_point_distribution(0.1, 0.1, Sign::Plus).unwrap();
        let member = materialize_family(&FamilyKind::Explicit(vec![d.clone()]), &GridSpec::default()).unwrap();
        let sup = sup_over_family(&e, &LearnerSpec::Majority, &member, 6, 4).unwrap();
        let direct = e.expected_excess_risk(LearnerSpec::Majority.build(&d).unwrap().as_ref(), &d, 6, 4).unwrap();
        assert_eq!(sup.worst_risk, direct);
    }

    #[test]
    fn pruned_sup_agrees_with_full_sup() {
        let e = ExactEngine::default();
        let grid = GridSpec::with_points(10).injecting(16, 256);
        let members = materialize_family(&FamilyKind::Pi1, &grid).unwrap();
        let full = sup_over_family(&e, &LearnerSpec::Majority, &members, 16, 256).unwrap();
        let pruned = sup_over_family_pruned(
            &members,
            |m| majority_hoeffding_bound(m.two_point().unwrap(), 16 + 256),
            |m| e.expected_excess_risk(LearnerSpec::Majority.build(&m.dist)?.as_ref(), &m.dist, 16, 256),
        )
        .unwrap();
        assert_eq!(full.worst_risk, pruned.worst_risk);
        assert_eq!(full.worst, pruned.worst);
        assert!(pruned.pruned > 0);
    }

    #[test]
    fn pairs_stay_inside_their_family() {
        for kind in [FamilyKind::Pi0, FamilyKind::Pi1, FamilyKind::PiEll(16), FamilyKind::PiC(0.1)] {
            let pairs = adversarial_pairs(&kind, 16, 256);
            assert!(!pairs.is_empty(), "{kind}");
            for (p, m) in pairs {
                assert!(kind.admits(&p) && kind.admits(&m));
            }
        }
        assert!(adversarial_pairs(&FamilyKind::PiEll(4), 4, 16).is_empty());
    }

    #[test]
    fn discards_make_the_menu_monotone() {
        let e = ExactEngine::default();
        let members = materialize_family(&FamilyKind::Pi0, &GridSpec::with_points(5).injecting(4, 0)).unwrap();
        let menu = [LearnerSpec::Erm, LearnerSpec::Majority];
        let mut prev = f64::INFINITY;
        for ell in 0..8 {
            let r = menu_minimax(&e, &menu, &members, ell, 0, true).unwrap();
            assert!(r.risk <= prev + 1e-15, "ell = {ell}");
            prev = r.risk;
        }
    }
}
