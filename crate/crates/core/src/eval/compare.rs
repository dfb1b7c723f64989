//! Semi-supervised versus supervised comparisons.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::eval::budget::UnlabeledBudget;
use crate::eval::exact::ExactEngine;
use crate::eval::minimax::{family_lower_bound, sup_over_family};
use crate::eval::rates::{fit_rate, RateSeries};
use crate::learners::LearnerSpec;
use crate::problem::{materialize_family, FamilyKind, GridSpec};

/// Denominators below this are reported as degenerate instead of divided by.
pub const DEGENERATE_DENOMINATOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioPoint {
    pub ell: u64,
    pub u: u64,
    /// Worst-case exact risk of the semi-supervised learner.
    pub ssl_risk: f64,
    /// Strongest supervised Bayes-test lower bound at `(ell, 0)`.
    pub sl_lower: f64,
    pub ratio: Option<f64>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioSeries {
    pub points: Vec<RatioPoint>,
    /// Fit of the nondegenerate ratios, when at least three are available.
    pub fit: Option<RateSeries>,
}

/// Per `ell`: worst-case SSL risk over the family divided by the supervised
/// lower bound. A ratio tending to zero brackets "unlabeled data helps".
pub fn ssl_vs_sl_ratio(
    engine: &ExactEngine,
    family: &FamilyKind,
    grid: &GridSpec,
    ssl_learner: &LearnerSpec,
    budget: UnlabeledBudget,
    ell_grid: &[u64],
) -> Result<RatioSeries> {
    if ell_grid.is_empty() || ell_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LabError::Precondition("ell grid must be nonempty and strictly increasing".into()));
    }
    let mut points = Vec::with_capacity(ell_grid.len());
    for &ell in ell_grid {
        let u = budget.eval(ell);
        let members = materialize_family(family, &grid.clone().injecting(ell, u))?;
        let ssl = sup_over_family(engine, ssl_learner, &members, ell, u)?;
        let sl = family_lower_bound(engine, family, ell, 0)?;
        let degenerate = sl.value < DEGENERATE_DENOMINATOR;
        points.push(RatioPoint {
            ell,
            u,
            ssl_risk: ssl.worst_risk,
            sl_lower: sl.value,
            ratio: (!degenerate).then(|| ssl.worst_risk / sl.value),
            degenerate,
        });
    }
    let usable: Vec<(u64, f64)> = points.iter().filter_map(|p| p.ratio.map(|r| (p.ell, r))).collect();
    let fit = fit_rate(&usable).ok();
    Ok(RatioSeries { points, fit })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetVerdict {
    pub rate_exponent: f64,
    pub budget: String,
    /// `(ell, ((ell + u) / ell)^(-rate_exponent))` on a geometric grid.
    pub ratios: Vec<(u64, f64)>,
    /// True when the ratio keeps shrinking, which needs `u / ell -> infinity`.
    pub helping_possible: bool,
}

/// Evaluates how much a supervised rate `ell^(-a)` could improve if every
/// unlabeled draw were as good as a labeled one.
pub fn superlinear_budget_check(rate_exponent: f64, budget: UnlabeledBudget) -> Result<BudgetVerdict> {
    if rate_exponent.is_nan() || rate_exponent <= 0.0 {
        return Err(LabError::Domain(format!("rate exponent {rate_exponent} must be positive")));
    }
    // The analytic check ignores the computational cap of exponential budgets.
    let grow = |ell: u64| -> f64 {
        match budget {
            UnlabeledBudget::Exponential { .. } => (ell as f64).exp2(),
            b => b.eval(ell) as f64,
        }
    };
    let ratios: Vec<(u64, f64)> = (1..=20)
        .map(|k| {
            let ell = 1u64 << k;
            let l = ell as f64;
            (ell, ((l + grow(ell)) / l).powf(-rate_exponent))
        })
        .collect();
    let first = ratios[0].1;
    let mid = ratios[ratios.len() / 2].1;
    let last = ratios[ratios.len() - 1].1;
    Ok(BudgetVerdict {
        rate_exponent,
        budget: budget.to_string(),
        helping_possible: last <= 0.5 * mid && last < first,
        ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn budget_verdicts() {
        let sq = superlinear_budget_check(0.5, UnlabeledBudget::Square).unwrap();
        assert!(sq.helping_possible);
        let (l, r) = sq.ratios[10];
        assert_relative_eq!(r, (1.0 + l as f64).powf(-0.5), max_relative = 1e-12);
        let lin = superlinear_budget_check(0.5, UnlabeledBudget::Linear(3)).unwrap();
        assert!(!lin.helping_possible);
        assert_relative_eq!(lin.ratios.last().unwrap().1, 0.5, max_relative = 1e-12);
        let zero = superlinear_budget_check(0.5, UnlabeledBudget::Zero).unwrap();
        assert!(zero.ratios.iter().all(|p| p.1 == 1.0));
        assert!(!zero.helping_possible);
        assert!(superlinear_budget_check(0.5, UnlabeledBudget::Exponential { cap: 16 }).unwrap().helping_possible);
        assert!(superlinear_budget_check(0.0, UnlabeledBudget::Square).is_err());
    }

    #[test]
    fn helping_on_pi1_and_not_on_pi0() {
        let e = ExactEngine::default();
        let grid = GridSpec::with_points(8);
        let ells = [4, 8, 16, 32];
        let pi1 = ssl_vs_sl_ratio(&e, &FamilyKind::Pi1, &grid, &LearnerSpec::Majority, UnlabeledBudget::Square, &ells)
            .unwrap();
        let r: Vec<f64> = pi1.points.iter().map(|p| p.ratio.unwrap()).collect();
        assert!(r.windows(2).all(|w| w[1] < w[0]), "{r:?}");
        let pi0 = ssl_vs_sl_ratio(&e, &FamilyKind::Pi0, &grid, &LearnerSpec::Majority, UnlabeledBudget::Square, &ells)
            .unwrap();
        assert!(pi0.points.iter().all(|p| p.ratio.unwrap() > 1.0));
    }
}
