//! The acceptance criteria as runnable checks, shared by the test suite and
//! the `verify` subcommand.

pub mod oracle;

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{hoeffding_majority_upper, kl_rich, kl_two_point, mixture_upper, pi_ell_ssl_upper};
use crate::error::{LabError, Result};
use crate::eval::budget::{UnlabeledBudget, DEFAULT_EXP_CAP};
use crate::eval::exact::ExactEngine;
use crate::eval::mc::{item_seed, mc_expected_excess_risk};
use crate::eval::minimax::{
    bayes_test_error, family_lower_bound, majority_hoeffding_bound, sup_over_family_pruned, SupResult,
};
use crate::eval::rates::fit_rate;
use crate::learners::{forget_labels_reduction, majority_count_learner, LearnerSpec};
use crate::mixture::{
    budget_insensitivity_check, mixture_lower_bound, mixture_sup, threshold_erm_exact_risk, THRESHOLD_GRID,
};
use crate::problem::{
    adversarial_alpha, adversarial_beta, hoeffding_maximiser, materialize_family, FamilyKind, FiniteLabeledDistribution,
    GridSpec, RichFamilyParams, Sign, TwoPointParams,
};

/// Criterion identifiers in run order.
pub const CRITERIA: [&str; 10] = [
    "reduction",
    "lecam",
    "hoeffding",
    "rate-pi1",
    "no-help-pi0",
    "pi-ell",
    "kl-oracle",
    "mixture-rates",
    "mixture-sandwich",
    "mc",
];

/// Labeled sizes used for slope fits.
pub const ELL_GRID: [u64; 5] = [4, 8, 16, 32, 64];
pub const MIXTURE_ELL_GRID: [u64; 4] = [8, 16, 32, 64];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: String,
    pub passed: bool,
    pub detail: String,
}

impl CriterionReport {
    fn new(id: &str, passed: bool, detail: String) -> Self {
        Self { id: id.to_string(), passed, detail }
    }
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {}: {}", self.id, self.detail)
    }
}

/// Runs one criterion by id.
pub fn run(id: &str, engine: &ExactEngine) -> Result<CriterionReport> {
    match id {
        "reduction" => reduction_identity(engine),
        "lecam" => le_cam_floor(engine),
        "hoeffding" => hoeffding_sandwich(engine, hoeffding_majority_upper),
        "rate-pi1" => rate_change_pi1(engine),
        "no-help-pi0" => no_help_pi0(engine),
        "pi-ell" => pi_ell_separation(engine),
        "kl-oracle" => kl_oracle(),
        "mixture-rates" => mixture_rates(engine),
        "mixture-sandwich" => mixture_sandwich(engine),
        "mc" => monte_carlo_consistency(engine),
        other => Err(LabError::Parse(format!("unknown criterion {other:?}; expected one of {}", CRITERIA.join(", ")))),
    }
}

/// Runs the given criteria; an error inside a criterion becomes a FAIL.
pub fn run_selected(ids: &[&str], engine: &ExactEngine) -> Vec<CriterionReport> {
    ids.iter()
        .map(|id| run(id, engine).unwrap_or_else(|e| CriterionReport::new(id, false, format!("error: {e}"))))
        .collect()
}

fn random_distribution(rng: &mut ChaCha8Rng, two_coin: bool) -> Result<FiniteLabeledDistribution> {
    if two_coin {
        let sign = if rng.gen::<bool>() { Sign::Plus } else { Sign::Minus };
        return Ok(TwoPointParams::new(rng.gen_range(0.01..0.49), rng.gen_range(0.01..0.49), sign)?.to_distribution());
    }
    let w: Vec<f64> = (0..4).map(|_| 0.02 + rng.gen::<f64>()).collect();
    let s: f64 = w.iter().sum();
    FiniteLabeledDistribution::new(vec![[w[0] / s, w[1] / s], [w[2] / s, w[3] / s]])
}

fn sl_target(ell: u64) -> f64 {
    1.0 / (16.0 * (ell as f64).sqrt())
}

/// Majority risk at `(ell, u)` equals the label-forgetting reduction's at `(ell + u, 0)`.
pub fn reduction_identity(engine: &ExactEngine) -> Result<CriterionReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0001);
    let maj = majority_count_learner();
    let mut worst = 0.0f64;
    let mut cases = 0;
    for k in 0..20 {
        let d = random_distribution(&mut rng, k % 2 == 0)?;
        for ell in [2u64, 4, 8] {
            for u in [0u64, 2, 8] {
                let ssl = engine.expected_excess_risk(maj.as_ref(), &d, ell, u)?;
                let reduced = forget_labels_reduction(maj.clone(), u);
                let sl = engine.expected_excess_risk(reduced.as_ref(), &d, ell + u, 0)?;
                worst = worst.max((ssl - sl).abs());
                cases += 1;
            }
        }
    }
    Ok(CriterionReport::new(
        "reduction",
        worst <= 1e-12,
        format!("{cases} cases, max |ssl - reduced| = {worst:.2e} (tol 1e-12)"),
    ))
}

fn adversarial_pair(ell: u64, u: u64) -> Result<(TwoPointParams, TwoPointParams)> {
    let a = adversarial_alpha(ell).ok_or_else(|| LabError::SampleSize("ell must be positive".into()))?;
    let b = adversarial_beta(ell, u).ok_or_else(|| LabError::SampleSize("empty sample".into()))?;
    let p = TwoPointParams::new(a, b, Sign::Plus)?;
    Ok((p, p.flipped()))
}

/// `(Bayes test error, implied excess-risk bound)` at the Le Cam pair.
fn le_cam_point(engine: &ExactEngine, ell: u64, u: u64) -> Result<(f64, f64)> {
    let (p, m) = adversarial_pair(ell, u)?;
    let err = bayes_test_error(engine, &p.to_distribution(), &m.to_distribution(), ell, u)?;
    Ok((err, err * p.wrong_excess()))
}

pub fn le_cam_floor(engine: &ExactEngine) -> Result<CriterionReport> {
    let cases: Vec<(u64, u64)> = (4..=64u64).flat_map(|l| [(l, 0), (l, l), (l, l * l)]).collect();
    let results = cases
        .par_iter()
        .map(|&(ell, u)| Ok((le_cam_point(engine, ell, u)?, ell)))
        .collect::<Result<Vec<_>>>()?;
    let min_err = results.iter().map(|r| r.0 .0).fold(f64::INFINITY, f64::min);
    let min_ratio = results.iter().map(|r| r.0 .1 / sl_target(r.1)).fold(f64::INFINITY, f64::min);
    Ok(CriterionReport::new(
        "lecam",
        min_err >= 0.25 && min_ratio >= 1.0 - 1e-9,
        format!(
            "{} (ell, u) points, min test error {min_err:.4} (need >= 0.25), min bound x 16 sqrt(ell) = {min_ratio:.4}",
            cases.len()
        ),
    ))
}

/// Majority risk against `bound(alpha, beta, ell, u)` over the `alpha = beta`
/// grid, plus the closed-form value of the bound's maximum. The bound is a
/// parameter so a corrupted constant can be shown to fail.
pub fn hoeffding_sandwich(
    engine: &ExactEngine,
    bound: impl Fn(f64, f64, u64, u64) -> f64 + Sync,
) -> Result<CriterionReport> {
    let maj = majority_count_learner();
    let mut checked = 0usize;
    let mut violations = 0usize;
    let mut worst_ratio = 0.0f64;
    let mut worst_closed_form = 0.0f64;
    for ell in 4..=64u64 {
        for budget in [UnlabeledBudget::Zero, UnlabeledBudget::Square] {
            let u = budget.eval(ell);
            let members = materialize_family(&FamilyKind::Pi1, &GridSpec::default().injecting(ell, u))?;
            let rows = members
                .par_iter()
                .map(|m| {
                    let p = m.two_point().expect("two-coin member");
                    let r = engine.expected_excess_risk(maj.as_ref(), &m.dist, ell, u)?;
                    Ok((r, bound(p.alpha, p.beta, ell, u)))
                })
                .collect::<Result<Vec<_>>>()?;
            for (r, b) in rows {
                checked += 1;
                if r > b * (1.0 + 1e-12) + f64::MIN_POSITIVE {
                    violations += 1;
                }
                if b > 0.0 {
                    worst_ratio = worst_ratio.max(r / b);
                }
            }
            let n = ell + u;
            let a = hoeffding_maximiser(n).expect("n > 0");
            let closed = (-0.5f64).exp() / (n as f64).sqrt();
            worst_closed_form = worst_closed_form.max((bound(a, a, ell, u) - closed).abs() / closed);
        }
    }
    Ok(CriterionReport::new(
        "hoeffding",
        violations == 0 && worst_closed_form <= 1e-12,
        format!(
            "{checked} grid points, {violations} above the bound, max risk/bound = {worst_ratio:.4}; \
             closed-form sup rel. error {worst_closed_form:.2e} (tol 1e-12)"
        ),
    ))
}

/// Worst-case majority risk over `kind` on the default grid with the
/// adversarial points injected, pruned by the Hoeffding bound.
pub fn majority_sup(engine: &ExactEngine, kind: &FamilyKind, ell: u64, u: u64) -> Result<SupResult> {
    let members = materialize_family(kind, &GridSpec::default().injecting(ell, u))?;
    let maj = majority_count_learner();
    sup_over_family_pruned(
        &members,
        |m| m.two_point().map_or(f64::INFINITY, |p| majority_hoeffding_bound(p, ell + u)),
        |m| engine.expected_excess_risk(maj.as_ref(), &m.dist, ell, u),
    )
}

fn slopes_line(points: &[(u64, f64)]) -> String {
    points.iter().map(|(l, r)| format!("{l}:{r:.3e}")).collect::<Vec<_>>().join(" ")
}

pub fn rate_change_pi1(engine: &ExactEngine) -> Result<CriterionReport> {
    let mut ssl = Vec::new();
    let mut sl = Vec::new();
    for &ell in &ELL_GRID {
        ssl.push((ell, majority_sup(engine, &FamilyKind::Pi1, ell, ell * ell)?.worst_risk));
        sl.push((ell, family_lower_bound(engine, &FamilyKind::Pi1, ell, 0)?.value));
    }
    let (fs, fl) = (fit_rate(&ssl)?, fit_rate(&sl)?);
    Ok(CriterionReport::new(
        "rate-pi1",
        (fs.slope + 1.0).abs() <= 0.1 && (fl.slope + 0.5).abs() <= 0.05,
        format!(
            "ssl slope {:.4} (target -1 +- 0.1) [{}]; sl bound slope {:.4} (target -0.5 +- 0.05) [{}]",
            fs.slope,
            slopes_line(&ssl),
            fl.slope,
            slopes_line(&sl)
        ),
    ))
}

pub fn no_help_pi0(engine: &ExactEngine) -> Result<CriterionReport> {
    let budgets = [
        UnlabeledBudget::Zero,
        UnlabeledBudget::Linear(1),
        UnlabeledBudget::Square,
        UnlabeledBudget::Quartic,
        UnlabeledBudget::Exponential { cap: DEFAULT_EXP_CAP },
    ];
    let mut lines = Vec::new();
    let mut passed = true;
    for b in budgets {
        let mut min_ratio = f64::INFINITY;
        for &ell in &ELL_GRID {
            let (_, bound) = le_cam_point(engine, ell, b.eval(ell))?;
            min_ratio = min_ratio.min(bound / sl_target(ell));
        }
        passed &= min_ratio >= 1.0 - 1e-9;
        lines.push(format!("{b}: min bound x 16 sqrt(ell) = {min_ratio:.4}"));
    }
    Ok(CriterionReport::new("no-help-pi0", passed, lines.join("; ")))
}

pub fn pi_ell_separation(engine: &ExactEngine) -> Result<CriterionReport> {
    let mut ssl_ok = true;
    let mut sl_ok = true;
    let mut empty_ssl = Vec::new();
    let mut empty_sl = Vec::new();
    let mut worst_ssl = 0.0f64;
    let mut sl_range = (f64::INFINITY, f64::NEG_INFINITY);
    for ell in 4..=24u64 {
        let u = ell * ell;
        match majority_sup(engine, &FamilyKind::PiEll(ell), ell, u) {
            Ok(sup) => {
                let ratio = sup.worst_risk / pi_ell_ssl_upper(ell);
                worst_ssl = worst_ssl.max(ratio);
                ssl_ok &= ratio <= 1.0 + 1e-9;
            }
            Err(LabError::EmptyGrid(_)) => empty_ssl.push(ell),
            Err(e) => return Err(e),
        }
        let lb = family_lower_bound(engine, &FamilyKind::PiEll(ell), ell, 0)?;
        if lb.attained_at.is_none() {
            empty_sl.push(ell);
            sl_ok = false;
            continue;
        }
        let ratio = lb.value / sl_target(ell);
        sl_range = (sl_range.0.min(ratio), sl_range.1.max(ratio));
        sl_ok &= ratio >= 1.0 - 1e-9;
    }
    Ok(CriterionReport::new(
        "pi-ell",
        ssl_ok && sl_ok,
        format!(
            "ssl: max risk / exp(-2 ell) = {worst_ssl:.3e} (empty family at ell = {empty_ssl:?}); \
             sl: bound x 16 sqrt(ell) in [{:.4}, {:.4}] (need >= 1), no in-family pair at ell = {empty_sl:?}",
            sl_range.0, sl_range.1
        ),
    ))
}

pub fn kl_oracle() -> Result<CriterionReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0007);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (alpha, beta) = (rng.gen_range(0.005..0.45), rng.gen_range(0.005..0.45));
        let (ell, u) = (rng.gen_range(0..=4u64), rng.gen_range(0..=4u64));
        let p = TwoPointParams::new(alpha, beta, Sign::Plus)?;
        let closed = kl_two_point(alpha, beta, ell, u)?;
        let brute = oracle::kl_bruteforce(&p.to_distribution(), &p.flipped().to_distribution(), ell, u)?;
        worst = worst.max((closed - brute).abs() / closed.abs().max(1.0));

        let c: f64 = rng.gen_range(0.05..1.0);
        let mut c_prime = rng.gen_range(0.0..c);
        if c_prime == c / 2.0 {
            c_prime = c / 4.0;
        }
        let rich = RichFamilyParams::new(c, c_prime, alpha)?;
        let (rp, rm) = rich.pair();
        let closed = kl_rich(c, alpha, ell)?.value;
        let brute = oracle::kl_bruteforce(&rp, &rm, ell, 0)?;
        worst = worst.max((closed - brute).abs() / closed.abs().max(1.0));
    }
    Ok(CriterionReport::new(
        "kl-oracle",
        worst <= 1e-10,
        format!("50 draws x 2 families, max scaled |closed - brute| = {worst:.2e} (tol 1e-10)"),
    ))
}

pub fn mixture_rates(engine: &ExactEngine) -> Result<CriterionReport> {
    let grid = GridSpec::default();
    let mut sl = Vec::new();
    let mut erm = Vec::new();
    for &ell in &MIXTURE_ELL_GRID {
        sl.push((ell, mixture_lower_bound(engine, &FamilyKind::Pi1, ell, 0)?.0));
        erm.push((ell, mixture_sup(engine, &FamilyKind::Pi1, &grid, &LearnerSpec::Erm, ell, 0)?.risk));
    }
    let f_sl = fit_rate(&sl)?;
    let f_erm = fit_rate(&erm)?;
    let check = budget_insensitivity_check(
        engine,
        &FamilyKind::Pi1,
        &grid,
        &MIXTURE_ELL_GRID,
        &[UnlabeledBudget::Square, UnlabeledBudget::Quartic],
        0.15,
    )?;
    let square = &check.fits[0].1;
    let quartic = &check.fits[1].1;
    Ok(CriterionReport::new(
        "mixture-rates",
        (f_sl.slope + 0.5).abs() <= 0.1 && (square.slope + 1.0).abs() <= 0.15 && check.within_tolerance,
        format!(
            "sl lower-bound slope {:.4} (target -0.5 +- 0.1) [{}]; erm sup slope {:.4}; \
             ssl square slope {:.4} (target -1 +- 0.15) [{}]; quartic slope {:.4}, gap {:.4} (tol 0.15)",
            f_sl.slope,
            slopes_line(&sl),
            f_erm.slope,
            square.slope,
            slopes_line(&square.points),
            quartic.slope,
            check.max_slope_gap
        ),
    ))
}

fn threshold_sup(ell: u64) -> Result<f64> {
    THRESHOLD_GRID.iter().try_fold(0.0f64, |m, &t| Ok(m.max(threshold_erm_exact_risk(t, ell)?)))
}

pub fn mixture_sandwich(engine: &ExactEngine) -> Result<CriterionReport> {
    let grid = GridSpec::default();
    let budgets = [UnlabeledBudget::Linear(1), UnlabeledBudget::Square, UnlabeledBudget::Quartic];
    let mut checked = 0;
    let mut failures = Vec::new();
    let mut min_lower_gap = f64::INFINITY;
    let mut min_upper_gap = f64::INFINITY;
    for b in budgets {
        for &ell in &ELL_GRID {
            let u = b.eval(ell);
            let exact = mixture_sup(engine, &FamilyKind::Pi1, &grid, &LearnerSpec::Majority, ell, u)?.risk;
            let mut ra = BTreeMap::new();
            let mut rb = BTreeMap::new();
            for n in [ell, ell / 4] {
                ra.insert(n, majority_sup(engine, &FamilyKind::Pi1, n, b.eval(n))?.worst_risk);
                rb.insert(n, threshold_sup(n)?);
            }
            let lower = ra[&ell].max(rb[&ell]) / 2.0;
            let upper = mixture_upper(|n| ra[&n], |n| rb[&n], ell, u)?;
            checked += 1;
            min_lower_gap = min_lower_gap.min(exact / lower);
            min_upper_gap = min_upper_gap.min(upper / exact);
            if exact < lower * (1.0 - 1e-12) || exact > upper {
                failures.push(format!("{b}@{ell}"));
            }
        }
    }
    Ok(CriterionReport::new(
        "mixture-sandwich",
        failures.is_empty(),
        format!(
            "{checked} points, min exact/lower = {min_lower_gap:.4}, min upper/exact = {min_upper_gap:.4}, \
             outside: {failures:?}"
        ),
    ))
}

pub const MC_TRIALS: u64 = 1000;
pub const MC_REPS: u64 = 4000;

pub fn monte_carlo_consistency(engine: &ExactEngine) -> Result<CriterionReport> {
    let outcomes = (0..MC_TRIALS)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(item_seed(0x000a, i));
            let two_coin = rng.gen::<bool>();
            let d = random_distribution(&mut rng, two_coin)?;
            let ell = rng.gen_range(0..=10u64);
            let u = rng.gen_range(0..=12u64);
            let spec = match rng.gen_range(0..6) {
                0 => LearnerSpec::Majority,
                1 => LearnerSpec::Erm,
                2 => LearnerSpec::PluginMarginal,
                3 => LearnerSpec::Constant(rng.gen_range(0..2)),
                4 => LearnerSpec::Reduced(Box::new(LearnerSpec::Majority), rng.gen_range(0..=ell)),
                _ => LearnerSpec::Discard(Box::new(LearnerSpec::Majority), rng.gen_range(0..=ell)),
            };
            let learner = spec.build(&d)?;
            let exact = engine.expected_excess_risk(learner.as_ref(), &d, ell, u)?;
            let mc = mc_expected_excess_risk(learner.as_ref(), &d, ell, u, MC_REPS, item_seed(0x0a0a, i))?;
            Ok((mc.estimate - exact).abs() <= mc.half_width)
        })
        .collect::<Result<Vec<bool>>>()?;
    let inside = outcomes.iter().filter(|&&b| b).count();
    let frac = inside as f64 / MC_TRIALS as f64;
    Ok(CriterionReport::new(
        "mc",
        frac >= 0.99,
        format!("{inside}/{MC_TRIALS} estimates within their half-width ({MC_REPS} reps each, need >= 99%)"),
    ))
}
