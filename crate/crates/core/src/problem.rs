//! Finite-domain labeled distributions, hypothesis classes, the admissible
//! families built from the two-coin construction, and pointwise risks.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{LabError, Result};

/// Tolerance on the total mass of a cell table.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Index of `h01` (x1 -> 0, x2 -> 1) in [`HypothesisClass::two_point`].
pub const H01: usize = 0;
/// Index of `h10` (x1 -> 1, x2 -> 0) in [`HypothesisClass::two_point`].
pub const H10: usize = 1;

/// A joint distribution over `{0..domain_size} x {0, 1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteLabeledDistribution {
    cells: Vec<[f64; 2]>,
}

impl FiniteLabeledDistribution {
    /// `cells[x][y] = P(X = x, Y = y)`.
    pub fn new(cells: Vec<[f64; 2]>) -> Result<Self> {
        if cells.is_empty() {
            return Err(LabError::InvalidDistribution("empty domain".into()));
        }
        let mut total = 0.0;
        for (x, cell) in cells.iter().enumerate() {
            for (y, &p) in cell.iter().enumerate() {
                if !p.is_finite() || p < 0.0 {
                    return Err(LabError::InvalidDistribution(format!("p({x},{y}) = {p}")));
                }
                total += p;
            }
        }
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(LabError::InvalidDistribution(format!("cells sum to {total}")));
        }
        Ok(Self { cells })
    }

    /// Builds a distribution from a marginal and a labeling function.
    pub fn from_marginal_and_eta(marginal: &[f64], eta: &[f64]) -> Result<Self> {
        if marginal.len() != eta.len() {
            return Err(LabError::InvalidDistribution("marginal/eta length mismatch".into()));
        }
        if let Some(e) = eta.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(LabError::InvalidDistribution(format!("eta value {e} outside [0, 1]")));
        }
        let cells = marginal.iter().zip(eta).map(|(&m, &e)| [m * (1.0 - e), m * e]).collect();
        Self::new(cells)
    }

    pub fn domain_size(&self) -> usize {
        self.cells.len()
    }

    pub fn cell(&self, x: usize, y: u8) -> f64 {
        self.cells[x][usize::from(y)]
    }

    pub fn cells(&self) -> &[[f64; 2]] {
        &self.cells
    }

    pub fn marginal(&self, x: usize) -> f64 {
        self.cells[x][0] + self.cells[x][1]
    }

    pub fn marginals(&self) -> Vec<f64> {
        (0..self.domain_size()).map(|x| self.marginal(x)).collect()
    }

    /// `P(Y = 1 | X = x)`, undefined on null points.
    pub fn eta(&self, x: usize) -> Option<f64> {
        let m = self.marginal(x);
        (m > 0.0).then(|| self.cells[x][1] / m)
    }
}

/// A deterministic labeling of a finite domain.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Hypothesis {
    labels: Vec<u8>,
}

impl Hypothesis {
    pub fn new(labels: Vec<u8>) -> Result<Self> {
        if labels.iter().any(|&l| l > 1) {
            return Err(LabError::Domain("hypothesis labels must be 0 or 1".into()));
        }
        Ok(Self { labels })
    }

    pub fn label(&self, x: usize) -> u8 {
        self.labels[x]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "h")?;
        for l in &self.labels {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisClass {
    hypotheses: Vec<Hypothesis>,
}

impl HypothesisClass {
    pub fn new(hypotheses: Vec<Hypothesis>) -> Result<Self> {
        if hypotheses.is_empty() {
            return Err(LabError::Precondition("hypothesis class is empty".into()));
        }
        let n = hypotheses[0].len();
        if hypotheses.iter().any(|h| h.len() != n) {
            return Err(LabError::Precondition("hypotheses over different domains".into()));
        }
        Ok(Self { hypotheses })
    }

    /// `{h01, h10}` on the two-point domain, in that index order.
    pub fn two_point() -> Self {
        Self {
            hypotheses: vec![
                Hypothesis { labels: vec![0, 1] },
                Hypothesis { labels: vec![1, 0] },
            ],
        }
    }

    pub fn hypotheses(&self) -> &[Hypothesis] {
        &self.hypotheses
    }

    pub fn get(&self, index: usize) -> &Hypothesis {
        &self.hypotheses[index]
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn position(&self, h: &Hypothesis) -> Option<usize> {
        self.hypotheses.iter().position(|g| g == h)
    }
}

/// `R_P(h) = P(h(X) != Y)`.
pub fn risk(dist: &FiniteLabeledDistribution, h: &Hypothesis) -> f64 {
    debug_assert_eq!(dist.domain_size(), h.len());
    (0..dist.domain_size()).map(|x| dist.cell(x, 1 - h.label(x))).sum()
}

/// `x -> 1{eta(x) >= 1/2}`; null points get label 0.
pub fn bayes_classifier(dist: &FiniteLabeledDistribution) -> Hypothesis {
    let labels = (0..dist.domain_size())
        .map(|x| match dist.eta(x) {
            Some(e) if e >= 0.5 => 1,
            _ => 0,
        })
        .collect();
    Hypothesis { labels }
}

pub fn class_min_risk(dist: &FiniteLabeledDistribution, class: &HypothesisClass) -> f64 {
    class.hypotheses().iter().map(|h| risk(dist, h)).fold(f64::INFINITY, f64::min)
}

/// `(R_P(h) - min_{h' in class} R_P(h'))_+`.
pub fn excess_risk(dist: &FiniteLabeledDistribution, h: &Hypothesis, class: &HypothesisClass) -> f64 {
    (risk(dist, h) - class_min_risk(dist, class)).max(0.0)
}

/// Excess risk of every member of `class`, by index.
pub fn excess_risk_table(dist: &FiniteLabeledDistribution, class: &HypothesisClass) -> Vec<f64> {
    let risks: Vec<f64> = class.hypotheses().iter().map(|h| risk(dist, h)).collect();
    let best = risks.iter().copied().fold(f64::INFINITY, f64::min);
    risks.into_iter().map(|r| (r - best).max(0.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// Cell table of the two-coin distribution `P_{alpha beta sign}` without the
/// open-interval checks of [`TwoPointParams`]; `alpha, beta` may touch 0.
pub fn two_point_distribution(alpha: f64, beta: f64, sign: Sign) -> Result<FiniteLabeledDistribution> {
    if !(0.0..=0.5).contains(&alpha) || !(0.0..=0.5).contains(&beta) {
        return Err(LabError::Domain(format!("alpha={alpha}, beta={beta} outside [0, 1/2]")));
    }
    let (hi_x, lo_x) = (0.5 + beta, 0.5 - beta);
    let (hi_y, lo_y) = (0.5 + alpha, 0.5 - alpha);
    let cells = match sign {
        Sign::Plus => vec![[hi_x * lo_y, hi_x * hi_y], [lo_x * hi_y, lo_x * lo_y]],
        Sign::Minus => vec![[lo_x * hi_y, lo_x * lo_y], [hi_x * lo_y, hi_x * hi_y]],
    };
    FiniteLabeledDistribution::new(cells)
}

/// `(alpha, beta, sign)` with `alpha, beta` in the open interval `(0, 1/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPointParams {
    pub alpha: f64,
    pub beta: f64,
    pub sign: Sign,
}

impl TwoPointParams {
    pub fn new(alpha: f64, beta: f64, sign: Sign) -> Result<Self> {
        let open = |v: f64| v > 0.0 && v < 0.5;
        if !open(alpha) {
            return Err(LabError::Domain(format!("alpha = {alpha} not in (0, 1/2)")));
        }
        if !open(beta) {
            return Err(LabError::Domain(format!("beta = {beta} not in (0, 1/2)")));
        }
        Ok(Self { alpha, beta, sign })
    }

    pub fn to_distribution(&self) -> FiniteLabeledDistribution {
        two_point_distribution(self.alpha, self.beta, self.sign)
            .expect("validated parameters always give a valid table")
    }

    /// Index of the Bayes hypothesis in [`HypothesisClass::two_point`].
    pub fn bayes_index(&self) -> usize {
        match self.sign {
            Sign::Plus => H10,
            Sign::Minus => H01,
        }
    }

    /// Excess risk of the non-optimal hypothesis, `2 alpha`.
    pub fn wrong_excess(&self) -> f64 {
        2.0 * self.alpha
    }

    pub fn flipped(&self) -> Self {
        Self { sign: self.sign.flip(), ..*self }
    }
}

/// Le Cam adversarial label margin `1 / (8 sqrt(ell))`.
pub fn adversarial_alpha(ell: u64) -> Option<f64> {
    (ell > 0).then(|| 1.0 / (8.0 * (ell as f64).sqrt()))
}

/// Le Cam adversarial marginal bias `1 / (8 sqrt(ell + u))`.
pub fn adversarial_beta(ell: u64, u: u64) -> Option<f64> {
    let n = ell.saturating_add(u);
    (n > 0).then(|| 1.0 / (8.0 * (n as f64).sqrt()))
}

/// Maximiser of the Hoeffding bound `2 a exp(-2 a^2 n)`, `1 / (2 sqrt(n))`.
pub fn hoeffding_maximiser(n: u64) -> Option<f64> {
    (n > 0).then(|| 1.0 / (2.0 * (n as f64).sqrt()))
}

/// Smallest admissible `beta` of the family indexed by `ell`, `1 / sqrt(ell)`.
pub fn pi_ell_beta_floor(ell: u64) -> f64 {
    1.0 / (ell as f64).sqrt()
}

/// Parameters of the minimal rich-family instance: a three-point domain
/// `{in C labeled 1 by h, in C labeled 0 by h, outside C}` with masses
/// `(c', c - c', 1 - c)`, labeled `1/2 +- alpha` on `C` and `0` outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RichFamilyParams {
    pub c: f64,
    pub c_prime: f64,
    pub alpha: f64,
    /// The shared marginal with the label-free labeling `eta = 1/2` on `C`.
    pub base_distribution: FiniteLabeledDistribution,
}

impl RichFamilyParams {
    pub fn new(c: f64, c_prime: f64, alpha: f64) -> Result<Self> {
        if !(c > 0.0 && c <= 1.0) {
            return Err(LabError::Domain(format!("c = {c} not in (0, 1]")));
        }
        if !(0.0..=c).contains(&c_prime) {
            return Err(LabError::Domain(format!("c' = {c_prime} not in [0, c]")));
        }
        if c_prime == c / 2.0 {
            return Err(LabError::Degenerate("c' = c/2 gives no asymmetry on the disagreement set".into()));
        }
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(LabError::Domain(format!("alpha = {alpha} not in (0, 1/2)")));
        }
        let base_distribution =
            FiniteLabeledDistribution::from_marginal_and_eta(&Self::marginal_of(c, c_prime), &[0.5, 0.5, 0.0])?;
        Ok(Self { c, c_prime, alpha, base_distribution })
    }

    fn marginal_of(c: f64, c_prime: f64) -> [f64; 3] {
        [c_prime, c - c_prime, 1.0 - c]
    }

    pub fn marginal(&self) -> [f64; 3] {
        Self::marginal_of(self.c, self.c_prime)
    }

    /// `{h, h'}`: `h` labels the `c'` part of `C` with 1, `h'` the other part.
    pub fn class(&self) -> HypothesisClass {
        HypothesisClass::new(vec![
            Hypothesis { labels: vec![1, 0, 0] },
            Hypothesis { labels: vec![0, 1, 0] },
        ])
        .expect("static class")
    }

    /// `P_alpha` (`sign = Plus`) or `P_{-alpha}`.
    pub fn distribution(&self, sign: Sign) -> FiniteLabeledDistribution {
        let e = match sign {
            Sign::Plus => 0.5 + self.alpha,
            Sign::Minus => 0.5 - self.alpha,
        };
        FiniteLabeledDistribution::from_marginal_and_eta(&self.marginal(), &[e, e, 0.0])
            .expect("validated parameters always give a valid table")
    }

    pub fn pair(&self) -> (FiniteLabeledDistribution, FiniteLabeledDistribution) {
        (self.distribution(Sign::Plus), self.distribution(Sign::Minus))
    }

    /// `2 alpha (c' - c/2)`, the excess floor of any hypothesis that labels
    /// the disagreement set against the majority.
    pub fn excess_floor(&self) -> f64 {
        2.0 * self.alpha * (self.c_prime - self.c / 2.0).abs()
    }

    /// The proof's choice `alpha = 1 / sqrt(32 ell c)`.
    pub fn proof_alpha(c: f64, ell: u64) -> f64 {
        1.0 / (32.0 * ell as f64 * c).sqrt()
    }
}

/// The admissible sets of the two-coin construction, plus rich and explicit families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FamilyKind {
    /// All `(alpha, beta)`.
    Pi0,
    /// `alpha = beta`.
    Pi1,
    /// `beta >= 1 / sqrt(ell)`.
    PiEll(u64),
    /// `beta >= c`.
    PiC(f64),
    /// `P_alpha, P_{-alpha}` of a rich family over the three-point domain.
    Rich { c: f64, c_prime: f64 },
    Explicit(Vec<FiniteLabeledDistribution>),
}

impl FamilyKind {
    /// Whether a two-coin parameter triple belongs to the family.
    pub fn admits(&self, p: &TwoPointParams) -> bool {
        match self {
            FamilyKind::Pi0 => true,
            FamilyKind::Pi1 => p.alpha == p.beta,
            FamilyKind::PiEll(ell) => *ell > 0 && p.beta >= pi_ell_beta_floor(*ell),
            FamilyKind::PiC(c) => p.beta >= *c,
            FamilyKind::Rich { .. } | FamilyKind::Explicit(_) => false,
        }
    }

    pub fn is_two_point(&self) -> bool {
        matches!(self, FamilyKind::Pi0 | FamilyKind::Pi1 | FamilyKind::PiEll(_) | FamilyKind::PiC(_))
    }

    pub fn class(&self) -> HypothesisClass {
        match self {
            FamilyKind::Rich { .. } => HypothesisClass::new(vec![
                Hypothesis { labels: vec![1, 0, 0] },
                Hypothesis { labels: vec![0, 1, 0] },
            ])
            .expect("static class"),
            FamilyKind::Explicit(list) if list.first().map(|d| d.domain_size()) != Some(2) => {
                let n = list.first().map(|d| d.domain_size()).unwrap_or(0);
                let hyps = (0..1u32 << n)
                    .map(|bits| Hypothesis { labels: (0..n).map(|x| ((bits >> x) & 1) as u8).collect() })
                    .collect();
                HypothesisClass { hypotheses: hyps }
            }
            _ => HypothesisClass::two_point(),
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyKind::Pi0 => write!(f, "pi0"),
            FamilyKind::Pi1 => write!(f, "pi1"),
            FamilyKind::PiEll(l) => write!(f, "piell:{l}"),
            FamilyKind::PiC(c) => write!(f, "pic:{c}"),
            FamilyKind::Rich { c, c_prime } => write!(f, "rich:{c}:{c_prime}"),
            FamilyKind::Explicit(list) => write!(f, "explicit:{}", list.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Spacing {
    Linear,
    Log,
}

/// Per-axis grid for materializing a family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points: usize,
    pub spacing: Spacing,
    pub lo: f64,
    pub hi: f64,
    /// `(ell, u)` at which the adversarial Le Cam and Hoeffding points are injected.
    pub inject: Option<(u64, u64)>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { points: 24, spacing: Spacing::Log, lo: 1e-3, hi: 0.49, inject: None }
    }
}

impl GridSpec {
    pub fn with_points(points: usize) -> Self {
        Self { points, ..Self::default() }
    }

    pub fn injecting(mut self, ell: u64, u: u64) -> Self {
        self.inject = Some((ell, u));
        self
    }

    pub fn axis(&self) -> Vec<f64> {
        let n = self.points;
        match n {
            0 => Vec::new(),
            1 => vec![self.lo],
            _ => (0..n)
                .map(|i| {
                    let t = i as f64 / (n - 1) as f64;
                    match self.spacing {
                        Spacing::Linear => self.lo + t * (self.hi - self.lo),
                        Spacing::Log => (self.lo.ln() + t * (self.hi.ln() - self.lo.ln())).exp(),
                    }
                })
                .collect(),
        }
    }
}

/// How a member was generated, for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MemberParams {
    TwoPoint(TwoPointParams),
    Rich { alpha: f64, sign: Sign },
    Explicit(usize),
}

impl fmt::Display for MemberParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MemberParams::TwoPoint(p) => write!(f, "alpha={};beta={};sign={}", p.alpha, p.beta, p.sign),
            MemberParams::Rich { alpha, sign } => write!(f, "alpha={alpha};sign={sign}"),
            MemberParams::Explicit(i) => write!(f, "member={i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyMember {
    pub params: MemberParams,
    pub dist: FiniteLabeledDistribution,
}

impl FamilyMember {
    pub fn two_point(&self) -> Option<&TwoPointParams> {
        match &self.params {
            MemberParams::TwoPoint(p) => Some(p),
            _ => None,
        }
    }
}

/// A family together with the grid it was realized on.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibleFamily {
    pub kind: FamilyKind,
    pub members: Vec<FamilyMember>,
}

impl AdmissibleFamily {
    pub fn materialize(kind: FamilyKind, grid: &GridSpec) -> Result<Self> {
        let members = materialize_family(&kind, grid)?;
        Ok(Self { kind, members })
    }

    pub fn class(&self) -> HypothesisClass {
        self.kind.class()
    }
}

fn sorted_unique(mut values: Vec<f64>) -> Vec<f64> {
    values.retain(|v| v.is_finite());
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    values.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs());
    values
}

/// Realizes a family as a finite list of member distributions.
pub fn materialize_family(kind: &FamilyKind, grid: &GridSpec) -> Result<Vec<FamilyMember>> {
    let open = |v: &f64| *v > 0.0 && *v < 0.5;
    let base = grid.axis();
    let inject = grid.inject;
    let a_star = inject.and_then(|(l, _)| adversarial_alpha(l));
    let b_star = inject.and_then(|(l, u)| adversarial_beta(l, u));
    let h_star = inject.and_then(|(l, u)| hoeffding_maximiser(l.saturating_add(u)));

    let mut members = Vec::new();
    let mut push_two_point = |alpha: f64, beta: f64| {
        for sign in [Sign::Plus, Sign::Minus] {
            if let Ok(p) = TwoPointParams::new(alpha, beta, sign) {
                if kind.admits(&p) {
                    members.push(FamilyMember { params: MemberParams::TwoPoint(p), dist: p.to_distribution() });
                }
            }
        }
    };

    match kind {
        FamilyKind::Pi0 | FamilyKind::PiEll(_) | FamilyKind::PiC(_) => {
            let mut alphas = base.clone();
            alphas.extend(a_star);
            let mut betas = base.clone();
            betas.extend(b_star);
            match kind {
                FamilyKind::PiEll(l) if *l > 0 => betas.push(pi_ell_beta_floor(*l)),
                FamilyKind::PiC(c) => betas.push(*c),
                _ => {}
            }
            let alphas: Vec<f64> = sorted_unique(alphas).into_iter().filter(open).collect();
            let betas: Vec<f64> = sorted_unique(betas).into_iter().filter(open).collect();
            for &a in &alphas {
                for &b in &betas {
                    push_two_point(a, b);
                }
            }
        }
        FamilyKind::Pi1 => {
            let mut alphas = base.clone();
            alphas.extend(a_star);
            alphas.extend(b_star);
            alphas.extend(h_star);
            for a in sorted_unique(alphas).into_iter().filter(open) {
                push_two_point(a, a);
            }
        }
        FamilyKind::Rich { c, c_prime } => {
            let mut alphas = base.clone();
            if let Some((l, _)) = inject {
                if l > 0 {
                    alphas.push(RichFamilyParams::proof_alpha(*c, l));
                }
            }
            for a in sorted_unique(alphas).into_iter().filter(open) {
                let rich = RichFamilyParams::new(*c, *c_prime, a)?;
                for sign in [Sign::Plus, Sign::Minus] {
                    members.push(FamilyMember { params: MemberParams::Rich { alpha: a, sign }, dist: rich.distribution(sign) });
                }
            }
        }
        FamilyKind::Explicit(list) => {
            members.extend(
                list.iter().enumerate().map(|(i, d)| FamilyMember { params: MemberParams::Explicit(i), dist: d.clone() }),
            );
        }
    }

    if members.is_empty() {
        return Err(LabError::EmptyGrid(format!("no grid point satisfies the constraints of {kind}")));
    }
    Ok(members)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn appendix_tables_match() {
        let p = TwoPointParams::new(0.1, 0.2, Sign::Plus).unwrap().to_distribution();
        assert_abs_diff_eq!(p.cell(0, 1), 0.7 * 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(p.cell(0, 0), 0.7 * 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(p.cell(1, 0), 0.3 * 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(p.cell(1, 1), 0.3 * 0.4, epsilon = 1e-15);
        let m = TwoPointParams::new(0.1, 0.2, Sign::Minus).unwrap().to_distribution();
        assert_abs_diff_eq!(m.cell(0, 0), 0.3 * 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(m.cell(1, 1), 0.7 * 0.6, epsilon = 1e-15);
    }

    #[test]
    fn risk_examples() {
        let class = HypothesisClass::two_point();
        let p = TwoPointParams::new(0.1, 0.2, Sign::Plus).unwrap().to_distribution();
        // 0.7*0.4 + 0.3*0.4
        assert_abs_diff_eq!(risk(&p, class.get(H10)), 0.4, epsilon = 1e-15);
        let flat = two_point_distribution(0.0, 0.3, Sign::Plus).unwrap();
        for h in class.hypotheses() {
            assert_abs_diff_eq!(risk(&flat, h), 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn bayes_classifier_examples() {
        let class = HypothesisClass::two_point();
        let plus = TwoPointParams::new(0.1, 0.2, Sign::Plus).unwrap().to_distribution();
        let minus = TwoPointParams::new(0.1, 0.2, Sign::Minus).unwrap().to_distribution();
        assert_eq!(&bayes_classifier(&plus), class.get(H10));
        assert_eq!(&bayes_classifier(&minus), class.get(H01));
        // eta = 1/2 everywhere: the tie rule labels 1
        let flat = two_point_distribution(0.0, 0.2, Sign::Plus).unwrap();
        assert_eq!(bayes_classifier(&flat).labels(), &[1, 1]);
        // null points get 0
        let null = FiniteLabeledDistribution::new(vec![[0.2, 0.8], [0.0, 0.0]]).unwrap();
        assert_eq!(bayes_classifier(&null).labels(), &[1, 0]);
    }

    #[test]
    fn two_point_wrong_hypothesis_excess_is_two_alpha() {
        let class = HypothesisClass::two_point();
        let p = TwoPointParams::new(0.13, 0.31, Sign::Minus).unwrap();
        let ex = excess_risk_table(&p.to_distribution(), &class);
        assert_eq!(ex[p.bayes_index()], 0.0);
        assert_abs_diff_eq!(ex[1 - p.bayes_index()], 0.26, epsilon = 1e-12);
    }

    #[test]
    fn rich_family_wrong_hypothesis_exceeds_floor() {
        let rich = RichFamilyParams::new(0.6, 0.45, 0.1).unwrap();
        let class = rich.class();
        let (pa, pm) = rich.pair();
        // under P_alpha the h' labeling is wrong on the heavier part of C
        assert!(excess_risk(&pa, class.get(1), &class) >= rich.excess_floor() - 1e-15);
        assert!(excess_risk(&pm, class.get(0), &class) >= rich.excess_floor() - 1e-15);
        assert_eq!(excess_risk(&pa, class.get(0), &class), 0.0);
    }

    #[test]
    fn rich_family_rejects_symmetric_split() {
        assert!(matches!(RichFamilyParams::new(0.5, 0.25, 0.1), Err(LabError::Degenerate(_))));
    }

    #[test]
    fn distribution_validation() {
        assert!(FiniteLabeledDistribution::new(vec![[0.5, 0.6]]).is_err());
        assert!(FiniteLabeledDistribution::new(vec![[-0.1, 1.1]]).is_err());
        assert!(FiniteLabeledDistribution::new(vec![]).is_err());
        assert!(TwoPointParams::new(0.0, 0.1, Sign::Plus).is_err());
        assert!(TwoPointParams::new(0.1, 0.5, Sign::Plus).is_err());
    }

    #[test]
    fn materialize_counts_and_constraints() {
        let pi1 = materialize_family(&FamilyKind::Pi1, &GridSpec::with_points(3)).unwrap();
        assert_eq!(pi1.len(), 6);

        let grid = GridSpec { points: 2, spacing: Spacing::Linear, lo: 0.1, hi: 0.3, inject: None };
        let piell = materialize_family(&FamilyKind::PiEll(16), &grid).unwrap();
        assert!(piell.iter().all(|m| m.two_point().unwrap().beta >= 0.25));
        assert!(!piell.iter().any(|m| m.two_point().unwrap().beta == 0.1));

        let grid = GridSpec { points: 3, spacing: Spacing::Linear, lo: 0.05, hi: 0.25, inject: None };
        let pic = materialize_family(&FamilyKind::PiC(0.1), &grid).unwrap();
        assert!(pic.iter().all(|m| m.two_point().unwrap().beta >= 0.1));
        assert!(!pic.iter().any(|m| m.two_point().unwrap().beta == 0.05));
    }

    #[test]
    fn materialize_injects_adversarial_points() {
        let members = materialize_family(&FamilyKind::Pi0, &GridSpec::default().injecting(16, 48)).unwrap();
        let hit = members.iter().filter_map(|m| m.two_point()).any(|p| {
            (p.alpha - 1.0 / 32.0).abs() < 1e-15 && (p.beta - 1.0 / 64.0).abs() < 1e-15
        });
        assert!(hit);
    }

    #[test]
    fn empty_family_is_an_error() {
        // beta >= 1/2 is impossible
        assert!(matches!(
            materialize_family(&FamilyKind::PiEll(4), &GridSpec::default()),
            Err(LabError::EmptyGrid(_))
        ));
    }

    fn recovered(d: &FiniteLabeledDistribution) -> (f64, f64) {
        // beta = |P(x1) - 1/2|, alpha = |eta(x1) - 1/2|
        ((d.eta(0).unwrap() - 0.5).abs(), (d.marginal(0) - 0.5).abs())
    }

    proptest! {
        #[test]
        fn wrong_minus_bayes_is_two_alpha(alpha in 1e-4f64..0.4999, beta in 1e-4f64..0.4999, plus in any::<bool>()) {
            let sign = if plus { Sign::Plus } else { Sign::Minus };
            let p = TwoPointParams::new(alpha, beta, sign).unwrap();
            let d = p.to_distribution();
            let class = HypothesisClass::two_point();
            let diff = risk(&d, class.get(1 - p.bayes_index())) - risk(&d, class.get(p.bayes_index()));
            prop_assert!((diff - 2.0 * alpha).abs() <= 1e-12);
            prop_assert_eq!(&bayes_classifier(&d), class.get(p.bayes_index()));
        }

        #[test]
        fn rich_pair_shares_marginal(c in 0.01f64..1.0, frac in 0.0f64..1.0, alpha in 1e-4f64..0.4999) {
            let c_prime = c * frac;
            prop_assume!(c_prime != c / 2.0);
            let rich = RichFamilyParams::new(c, c_prime, alpha).unwrap();
            let (a, b) = rich.pair();
            for x in 0..3 {
                prop_assert!((a.marginal(x) - b.marginal(x)).abs() <= 1e-15);
            }
        }

        #[test]
        fn excess_is_nonnegative_and_zero_at_bayes(cells in proptest::collection::vec(0.0f64..1.0, 4)) {
            let total: f64 = cells.iter().sum();
            prop_assume!(total > 1e-6);
            let d = FiniteLabeledDistribution::new(vec![
                [cells[0] / total, cells[1] / total],
                [cells[2] / total, cells[3] / total],
            ]);
            prop_assume!(d.is_ok());
            let d = d.unwrap();
            let class = FamilyKind::Explicit(vec![d.clone()]).class();
            for h in class.hypotheses() {
                prop_assert!(excess_risk(&d, h, &class) >= 0.0);
            }
            let bayes = bayes_classifier(&d);
            if class.position(&bayes).is_some() {
                prop_assert!(excess_risk(&d, &bayes, &class) <= 1e-15);
            }
        }

        #[test]
        fn materialized_members_satisfy_constraints(ell in 5u64..200, u in 0u64..5000, points in 1usize..12, which in 0usize..4) {
            let kind = match which {
                0 => FamilyKind::Pi0,
                1 => FamilyKind::Pi1,
                2 => FamilyKind::PiEll(ell),
                _ => FamilyKind::PiC(0.07),
            };
            let grid = GridSpec::with_points(points).injecting(ell, u);
            let members = materialize_family(&kind, &grid).unwrap();
            for m in &members {
                let (alpha, beta) = recovered(&m.dist);
                prop_assert!(alpha > 0.0 && alpha < 0.5 && beta > 0.0 && beta < 0.5);
                match &kind {
                    FamilyKind::Pi1 => prop_assert!((alpha - beta).abs() < 1e-12),
                    FamilyKind::PiEll(l) => prop_assert!(beta >= 1.0 / (*l as f64).sqrt() - 1e-12),
                    FamilyKind::PiC(c) => prop_assert!(beta >= c - 1e-12),
                    _ => {}
                }
            }
        }
    }
}
