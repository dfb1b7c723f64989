use ssl_rate_lab::bounds::{pi_c_report, rich_reports, two_point_reports, BoundReport};
use ssl_rate_lab::error::LabError;
use ssl_rate_lab::eval::compare::{ssl_vs_sl_ratio, superlinear_budget_check};
use ssl_rate_lab::eval::exact::ExactEngine;
use ssl_rate_lab::eval::mc::{item_seed, mc_expected_excess_risk};
use ssl_rate_lab::eval::minimax::{
    family_lower_bound, majority_hoeffding_bound, menu_minimax, sup_over_family, sup_over_family_pruned, SupResult,
};
use ssl_rate_lab::eval::rates::fit_rate;
use ssl_rate_lab::learners::LearnerSpec;
use ssl_rate_lab::mixture::{mixture_lower_bound, mixture_sup};
use ssl_rate_lab::problem::{materialize_family, FamilyKind, FamilyMember, MemberParams};
use ssl_rate_lab::verify::{run_selected, CriterionReport, CRITERIA};

use crate::config::{RunConfig, Validated};
use crate::error::CliError;
use crate::output::{num, opt_num, Table};

/// Members of `kind` at `(ell, u)`, or `None` when the grid leaves the family empty.
fn members_at(v: &Validated, kind: &FamilyKind, ell: u64, u: u64) -> Result<Option<Vec<FamilyMember>>, CliError> {
    match materialize_family(kind, &v.grid.clone().injecting(ell, u)) {
        Ok(m) => Ok(Some(m)),
        Err(LabError::EmptyGrid(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn worst_case(
    engine: &ExactEngine,
    spec: &LearnerSpec,
    kind: &FamilyKind,
    members: &[FamilyMember],
    ell: u64,
    u: u64,
) -> Result<SupResult, CliError> {
    if *spec == LearnerSpec::Majority && kind.is_two_point() {
        let learner = spec.build(&members[0].dist)?;
        return Ok(sup_over_family_pruned(
            members,
            |m| m.two_point().map_or(f64::INFINITY, |p| majority_hoeffding_bound(p, ell + u)),
            |m| engine.expected_excess_risk(learner.as_ref(), &m.dist, ell, u),
        )?);
    }
    Ok(sup_over_family(engine, spec, members, ell, u)?)
}

/// Slope of the points seen so far, blank until three are usable.
fn running_slope(points: &[(u64, f64)]) -> String {
    fit_rate(points).map(|f| num(f.slope)).unwrap_or_default()
}

fn member_of<'a>(members: &'a [FamilyMember], worst: &MemberParams) -> &'a FamilyMember {
    members.iter().find(|m| &m.params == worst).expect("worst member comes from the list")
}

pub fn sweep(cfg: &RunConfig, v: &Validated, engine: &ExactEngine, hash: &str) -> Result<Table, CliError> {
    v.family.require_two_point()?;
    let mut table = Table::new(&[
        "learner",
        "family",
        "budget",
        "ell",
        "u",
        "worst_risk",
        "worst_member",
        "evaluated",
        "pruned",
        "lower_bound",
        "sl_lower_bound",
        "risk_slope",
        "lower_slope",
        "mc_estimate",
        "mc_half_width",
    ]);
    let mut row_index = 0u64;
    for spec in &v.learners {
        let mut risks = Vec::new();
        let mut lowers = Vec::new();
        for &ell in &cfg.ell_grid {
            let u = v.budget.eval(ell);
            let kind = v.family.at(ell);
            let lower = family_lower_bound(engine, &kind, ell, u)?.value;
            let sl_lower = family_lower_bound(engine, &kind, ell, 0)?.value;
            lowers.push((ell, lower));
            let mut row = vec![spec.to_string(), kind.to_string(), v.budget.to_string(), ell.to_string(), u.to_string()];
            match members_at(v, &kind, ell, u)? {
                Some(members) => {
                    let sup = worst_case(engine, spec, &kind, &members, ell, u)?;
                    risks.push((ell, sup.worst_risk));
                    row.extend([
                        num(sup.worst_risk),
                        sup.worst.to_string(),
                        sup.evaluated.to_string(),
                        sup.pruned.to_string(),
                    ]);
                    row.extend([num(lower), num(sl_lower), running_slope(&risks), running_slope(&lowers)]);
                    if cfg.mc_reps > 0 {
                        let m = member_of(&members, &sup.worst);
                        let learner = spec.build(&m.dist)?;
                        let est = mc_expected_excess_risk(
                            learner.as_ref(),
                            &m.dist,
                            ell,
                            u,
                            cfg.mc_reps,
                            item_seed(cfg.seed, row_index),
                        )?;
                        row.extend([num(est.estimate), num(est.half_width)]);
                    } else {
                        row.extend([String::new(), String::new()]);
                    }
                }
                None => {
                    row.extend(["".into(), "empty family".into(), "0".into(), "0".into()]);
                    row.extend([num(lower), num(sl_lower), running_slope(&risks), running_slope(&lowers)]);
                    row.extend([String::new(), String::new()]);
                }
            }
            table.push(hash, row);
            row_index += 1;
        }
    }
    Ok(table)
}

pub fn minimax(cfg: &RunConfig, v: &Validated, engine: &ExactEngine, hash: &str) -> Result<Table, CliError> {
    v.family.require_two_point()?;
    let mut table =
        Table::new(&["family", "budget", "ell", "u", "best_learner", "minimax_risk", "worst_member", "lower_bound", "risk_slope"]);
    let mut risks = Vec::new();
    for &ell in &cfg.ell_grid {
        let u = v.budget.eval(ell);
        let kind = v.family.at(ell);
        let lower = family_lower_bound(engine, &kind, ell, u)?.value;
        let mut row = vec![kind.to_string(), v.budget.to_string(), ell.to_string(), u.to_string()];
        match members_at(v, &kind, ell, u)? {
            Some(members) => {
                let best = menu_minimax(engine, &v.learners, &members, ell, u, cfg.with_discards)?;
                risks.push((ell, best.risk));
                row.extend([best.learner.to_string(), num(best.risk), best.worst.to_string()]);
            }
            None => row.extend(["".into(), "".into(), "empty family".into()]),
        }
        row.extend([num(lower), running_slope(&risks)]);
        table.push(hash, row);
    }
    Ok(table)
}

pub fn mixture(cfg: &RunConfig, v: &Validated, engine: &ExactEngine, hash: &str) -> Result<Table, CliError> {
    v.family.require_two_point()?;
    let spec = &v.learners[0];
    let mut table = Table::new(&[
        "learner",
        "family",
        "budget",
        "ell",
        "u",
        "risk",
        "a_part",
        "b_part",
        "a_worst",
        "t_worst",
        "lower_bound",
        "sl_lower_bound",
        "risk_slope",
        "sl_lower_slope",
    ]);
    let mut risks = Vec::new();
    let mut sl = Vec::new();
    for &ell in &cfg.ell_grid {
        let u = v.budget.eval(ell);
        let kind = v.family.at(ell);
        let sup = match mixture_sup(engine, &kind, &v.grid, spec, ell, u) {
            Ok(s) => Some(s),
            Err(LabError::EmptyGrid(_)) => None,
            Err(e) => return Err(e.into()),
        };
        let lower = mixture_lower_bound(engine, &kind, ell, u)?.0;
        let sl_lower = mixture_lower_bound(engine, &kind, ell, 0)?.0;
        sl.push((ell, sl_lower));
        let mut row = vec![spec.to_string(), kind.to_string(), v.budget.to_string(), ell.to_string(), u.to_string()];
        match sup {
            Some(s) => {
                risks.push((ell, s.risk));
                row.extend([num(s.risk), num(s.a_part), num(s.b_part), s.a_worst, num(s.t_worst)]);
            }
            None => row.extend(["".into(), "".into(), "".into(), "empty family".into(), "".into()]),
        }
        row.extend([num(lower), num(sl_lower), running_slope(&risks), running_slope(&sl)]);
        table.push(hash, row);
    }
    Ok(table)
}

pub fn compare(cfg: &RunConfig, v: &Validated, engine: &ExactEngine, hash: &str) -> Result<Table, CliError> {
    v.family.require_two_point()?;
    let spec = &v.learners[0];
    let verdict = superlinear_budget_check(0.5, v.budget)?;
    let mut table = Table::new(&[
        "learner",
        "family",
        "budget",
        "ell",
        "u",
        "ssl_risk",
        "sl_lower",
        "ratio",
        "degenerate",
        "ratio_slope",
        "helping_possible",
    ]);
    let mut ratios = Vec::new();
    for &ell in &cfg.ell_grid {
        let kind = v.family.at(ell);
        let series = match ssl_vs_sl_ratio(engine, &kind, &v.grid, spec, v.budget, &[ell]) {
            Ok(s) => s,
            Err(LabError::EmptyGrid(_)) => continue,
            Err(e) => return Err(e.into()),
        };
        let p = &series.points[0];
        if let Some(r) = p.ratio {
            ratios.push((ell, r));
        }
        table.push(
            hash,
            vec![
                spec.to_string(),
                kind.to_string(),
                v.budget.to_string(),
                ell.to_string(),
                p.u.to_string(),
                num(p.ssl_risk),
                num(p.sl_lower),
                opt_num(p.ratio),
                p.degenerate.to_string(),
                running_slope(&ratios),
                verdict.helping_possible.to_string(),
            ],
        );
    }
    Ok(table)
}

pub struct BoundsParams {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub u: u64,
    pub c: Option<f64>,
    pub c_prime: Option<f64>,
}

pub fn bounds(ells: &[u64], p: &BoundsParams, hash: &str) -> Result<Table, CliError> {
    let mut table = Table::new(&["name", "side", "value", "inputs"]);
    for &ell in ells {
        let reports: Vec<BoundReport> = match (p.alpha, p.beta, p.c, p.c_prime) {
            (Some(a), Some(b), None, None) => two_point_reports(a, b, ell, p.u)?,
            (None, None, Some(c), Some(cp)) => rich_reports(c, cp, ell)?,
            (None, None, Some(c), None) => vec![pi_c_report(c, ell)?],
            _ => {
                return Err(CliError::Validation(
                    "give --alpha and --beta (two-coin), --c (beta >= c family) or --c with --c-prime (rich)".into(),
                ))
            }
        };
        for r in reports {
            let inputs = r.inputs.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";");
            table.push(hash, vec![r.name, r.side.to_string(), num(r.value), inputs]);
        }
    }
    Ok(table)
}

/// Criterion ids, 1-based positions, or the legacy name `theorem1`.
pub fn resolve_criteria(only: &[String]) -> Result<Vec<&'static str>, CliError> {
    if only.is_empty() {
        return Ok(CRITERIA.to_vec());
    }
    only.iter()
        .map(|s| {
            let s = s.trim();
            if s == "theorem1" {
                return Ok(CRITERIA[0]);
            }
            if let Ok(i) = s.parse::<usize>() {
                if (1..=CRITERIA.len()).contains(&i) {
                    return Ok(CRITERIA[i - 1]);
                }
            }
            CRITERIA.iter().copied().find(|c| *c == s).ok_or_else(|| {
                CliError::Validation(format!("unknown criterion '{s}'; expected one of {}", CRITERIA.join(", ")))
            })
        })
        .collect()
}

pub fn verify(ids: &[&str], engine: &ExactEngine) -> Vec<CriterionReport> {
    let mut out = Vec::new();
    for id in ids {
        let report = run_selected(&[id], engine).remove(0);
        println!("{report}");
        out.push(report);
    }
    out
}
