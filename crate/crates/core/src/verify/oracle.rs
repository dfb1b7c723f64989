//! Brute-force references that enumerate raw ordered samples. Exponential in
//! the sample size; meant for `ell, u <= 4` or so.

use crate::error::{LabError, Result};
use crate::learners::{Learner, Observation};
use crate::mixture::{combine, product_class};
use crate::problem::{excess_risk_table, FiniteLabeledDistribution, HypothesisClass};

/// Largest number of ordered samples the oracles will enumerate.
pub const SEQUENCE_CAP: u64 = 1 << 26;

/// One position of an ordered sample and its probabilities under `p` and `q`.
#[derive(Debug, Clone, Copy)]
struct Outcome {
    obs: Observation,
    p: f64,
    q: f64,
}

fn outcomes(p: &FiniteLabeledDistribution, q: &FiniteLabeledDistribution, labeled: bool) -> Vec<Outcome> {
    let mut out = Vec::new();
    for x in 0..p.domain_size() {
        if labeled {
            for y in 0..2u8 {
                out.push(Outcome { obs: Observation::Labeled { x, y }, p: p.cell(x, y), q: q.cell(x, y) });
            }
        } else {
            out.push(Outcome { obs: Observation::Unlabeled { x }, p: p.marginal(x), q: q.marginal(x) });
        }
    }
    out
}

/// Calls `visit(sequence, p_prob, q_prob)` for every ordered sample of
/// `ell` labeled then `u` unlabeled draws.
fn for_each_sequence(
    p: &FiniteLabeledDistribution,
    q: &FiniteLabeledDistribution,
    ell: u64,
    u: u64,
    mut visit: impl FnMut(&[Observation], f64, f64) -> Result<()>,
) -> Result<()> {
    let lab = outcomes(p, q, true);
    let unl = outcomes(p, q, false);
    let slots: Vec<&[Outcome]> =
        (0..ell).map(|_| lab.as_slice()).chain((0..u).map(|_| unl.as_slice())).collect();
    let needed = slots.iter().fold(1u128, |acc, s| acc.saturating_mul(s.len() as u128));
    if needed > SEQUENCE_CAP as u128 {
        return Err(LabError::EnumerationBudget { needed, cap: SEQUENCE_CAP });
    }
    let mut idx = vec![0usize; slots.len()];
    let mut seq: Vec<Observation> = slots.iter().map(|s| s[0].obs).collect();
    loop {
        let (mut pp, mut qq) = (1.0, 1.0);
        for (k, s) in slots.iter().enumerate() {
            let o = s[idx[k]];
            seq[k] = o.obs;
            pp *= o.p;
            qq *= o.q;
        }
        visit(&seq, pp, qq)?;
        let mut k = slots.len();
        loop {
            if k == 0 {
                return Ok(());
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < slots[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// `sum p ln(p / q)` over all ordered `(ell, u)` samples.
pub fn kl_bruteforce(p: &FiniteLabeledDistribution, q: &FiniteLabeledDistribution, ell: u64, u: u64) -> Result<f64> {
    let mut acc = 0.0;
    for_each_sequence(p, q, ell, u, |_, pp, qq| {
        if pp > 0.0 {
            if qq == 0.0 {
                return Err(LabError::Domain("p is not absolutely continuous w.r.t. q".into()));
            }
            acc += pp * (pp / qq).ln();
        }
        Ok(())
    })?;
    Ok(acc)
}

/// Total variation between the two sample laws.
pub fn tv_bruteforce(p: &FiniteLabeledDistribution, q: &FiniteLabeledDistribution, ell: u64, u: u64) -> Result<f64> {
    let mut acc = 0.0;
    for_each_sequence(p, q, ell, u, |_, pp, qq| {
        acc += (pp - qq).abs();
        Ok(())
    })?;
    Ok(acc / 2.0)
}

/// Expected excess risk of `learner` by running it on every ordered sample.
pub fn expected_risk_bruteforce(learner: &dyn Learner, dist: &FiniteLabeledDistribution, ell: u64, u: u64) -> Result<f64> {
    let excess = excess_risk_table(dist, &learner.class());
    let mut acc = 0.0;
    for_each_sequence(dist, dist, ell, u, |seq, pp, _| {
        acc += pp * excess[learner.decide_sequence(seq)?];
        Ok(())
    })?;
    Ok(acc)
}

/// Mixture risk of two finite components on the concatenated domain: every
/// ordered sample of `P_A / 2 + P_B / 2` is split by component, each part is
/// handed to its learner, and the stitched hypothesis is scored against the
/// product class.
pub fn mixture_risk_bruteforce(
    pa: &FiniteLabeledDistribution,
    la: &dyn Learner,
    pb: &FiniteLabeledDistribution,
    lb: &dyn Learner,
    ell: u64,
    u: u64,
) -> Result<f64> {
    let p = combine(pa, pb);
    let (ha, hb): (HypothesisClass, HypothesisClass) = (la.class(), lb.class());
    let class = product_class(&ha, &hb);
    let excess = excess_risk_table(&p, &class);
    let split_at = pa.domain_size();
    let mut acc = 0.0;
    for_each_sequence(&p, &p, ell, u, |seq, pp, _| {
        if pp == 0.0 {
            return Ok(());
        }
        let (mut sa, mut sb) = (Vec::new(), Vec::new());
        for &o in seq {
            match o {
                Observation::Labeled { x, y } if x < split_at => sa.push(Observation::Labeled { x, y }),
                Observation::Labeled { x, y } => sb.push(Observation::Labeled { x: x - split_at, y }),
                Observation::Unlabeled { x } if x < split_at => sa.push(Observation::Unlabeled { x }),
                Observation::Unlabeled { x } => sb.push(Observation::Unlabeled { x: x - split_at }),
            }
        }
        let h = la.decide_sequence(&sa)? * hb.len() + lb.decide_sequence(&sb)?;
        acc += pp * excess[h];
        Ok(())
    })?;
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::exact::ExactEngine;
    use crate::eval::minimax::bayes_test_error;
    use crate::learners::{erm_learner, forget_labels_reduction, majority_count_learner};
    use crate::problem::{two_point_distribution, Sign};
    use approx::assert_relative_eq;

    #[test]
    fn exact_engine_agrees_with_raw_sequences() {
        let e = ExactEngine::default();
        let d = FiniteLabeledDistribution::new(vec![[0.1, 0.35], [0.3, 0.25]]).unwrap();
        let learners = [
            majority_count_learner(),
            erm_learner(HypothesisClass::two_point()).unwrap(),
            forget_labels_reduction(majority_count_learner(), 2),
        ];
        for l in &learners {
            for (ell, u) in [(2, 0), (3, 2), (4, 3)] {
                let brute = expected_risk_bruteforce(l.as_ref(), &d, ell, u).unwrap();
                let exact = e.expected_excess_risk(l.as_ref(), &d, ell, u).unwrap();
                assert_relative_eq!(brute, exact, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn bayes_error_is_half_of_one_minus_tv() {
        let e = ExactEngine::default();
        let p = two_point_distribution(0.15, 0.2, Sign::Plus).unwrap();
        let m = two_point_distribution(0.15, 0.2, Sign::Minus).unwrap();
        for (ell, u) in [(1, 0), (2, 3), (4, 4)] {
            let tv = tv_bruteforce(&p, &m, ell, u).unwrap();
            assert_relative_eq!(bayes_test_error(&e, &p, &m, ell, u).unwrap(), (1.0 - tv) / 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn kl_of_identical_laws_is_zero() {
        let p = two_point_distribution(0.3, 0.1, Sign::Minus).unwrap();
        assert_eq!(kl_bruteforce(&p, &p, 2, 2).unwrap(), 0.0);
    }
}
