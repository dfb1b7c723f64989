//! Closed-form divergence, testing and risk bounds for the two-coin,
//! rich and mixture constructions. All logarithms are natural.

use std::fmt;

use serde::Serialize;

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Upper,
    Lower,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Upper => "upper",
            Side::Lower => "lower",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub value: f64,
    pub side: Side,
    pub inputs: Vec<(String, f64)>,
}

impl BoundReport {
    fn new(name: &str, value: f64, side: Side, inputs: &[(&str, f64)]) -> Self {
        Self {
            name: name.to_string(),
            value,
            side,
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }
}

fn check_margin(name: &str, v: f64) -> Result<()> {
    if !(0.0..0.5).contains(&v) {
        return Err(LabError::Domain(format!("{name} = {v} not in [0, 1/2)")));
    }
    Ok(())
}

/// `KL(Ber(1/2 + a) || Ber(1/2 - a)) = 2a ln((1 + 2a) / (1 - 2a))`.
fn coin_kl(a: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    2.0 * a * ((2.0 * a).ln_1p() - (-2.0 * a).ln_1p())
}

/// KL divergence between the `+` and `-` two-coin distributions on an
/// `(ell, u)` sample.
pub fn kl_two_point(alpha: f64, beta: f64, ell: u64, u: u64) -> Result<f64> {
    check_margin("alpha", alpha)?;
    check_margin("beta", beta)?;
    Ok(ell as f64 * coin_kl(alpha) + (ell + u) as f64 * coin_kl(beta))
}

/// `16 ell alpha^2 + 16 (ell + u) beta^2`, valid above [`kl_two_point`] for `alpha, beta < 1/4`.
pub fn kl_two_point_relaxation(alpha: f64, beta: f64, ell: u64, u: u64) -> f64 {
    16.0 * ell as f64 * alpha * alpha + 16.0 * (ell + u) as f64 * beta * beta
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RichKl {
    pub value: f64,
    /// `16 c ell alpha^2`, an upper bound on `value` for `alpha < 1/4`.
    pub relaxation: f64,
}

/// KL divergence between `P_alpha^ell` and `P_{-alpha}^ell` of a rich family
/// whose disagreement set has mass `c`.
pub fn kl_rich(c: f64, alpha: f64, ell: u64) -> Result<RichKl> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(LabError::Domain(format!("c = {c} not in (0, 1]")));
    }
    check_margin("alpha", alpha)?;
    let l = ell as f64;
    Ok(RichKl { value: c * l * coin_kl(alpha), relaxation: 16.0 * c * l * alpha * alpha })
}

/// Pinsker: `TV <= sqrt(KL / 2)`, capped at one.
pub fn pinsker_tv_bound(kl: f64) -> f64 {
    (kl.max(0.0) / 2.0).sqrt().min(1.0)
}

/// Smallest achievable error of a test whose sources are at most `tv` apart.
pub fn le_cam_error_floor(tv: f64) -> f64 {
    (1.0 - tv.clamp(0.0, 1.0)) / 2.0
}

/// `(1 - sqrt(8 ell alpha^2 + 8 (ell + u) beta^2)) / 2`, floored at zero.
pub fn le_cam_two_point_floor(alpha: f64, beta: f64, ell: u64, u: u64) -> f64 {
    le_cam_error_floor(pinsker_tv_bound(kl_two_point_relaxation(alpha, beta, ell, u)))
}

/// `2 alpha exp(-2 beta^2 (ell + u))`, the majority vote's risk bound.
pub fn hoeffding_majority_upper(alpha: f64, beta: f64, ell: u64, u: u64) -> f64 {
    2.0 * alpha * (-2.0 * beta * beta * (ell + u) as f64).exp()
}

/// `exp(-2 ell)`, the bound on the majority vote over `beta >= 1/sqrt(ell)`
/// with `u = ell^2`.
pub fn pi_ell_ssl_upper(ell: u64) -> f64 {
    (-2.0 * ell as f64).exp()
}

/// `(c / 2) exp(-32 ell c^2)`, the supervised floor on the family `beta >= c`.
pub fn pi_c_sl_floor(c: f64, ell: u64) -> Result<f64> {
    if !(c > 0.0 && c < 0.25) {
        return Err(LabError::Domain(format!("c = {c} not in (0, 1/4)")));
    }
    Ok(c / 2.0 * (-32.0 * ell as f64 * c * c).exp())
}

/// `|2c' - c| / (16 sqrt(2c)) / sqrt(ell)`, attained with `alpha = 1 / sqrt(32 ell c)`.
/// When `c' < c/2` the roles of the two hypotheses swap.
pub fn rich_family_floor(c: f64, c_prime: f64, ell: u64) -> Result<f64> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(LabError::Domain(format!("c = {c} not in (0, 1]")));
    }
    if !(0.0..=c).contains(&c_prime) {
        return Err(LabError::Domain(format!("c' = {c_prime} not in [0, c]")));
    }
    if c_prime == c / 2.0 {
        return Err(LabError::Degenerate("c' = c/2".into()));
    }
    if ell == 0 {
        return Err(LabError::SampleSize("ell must be positive".into()));
    }
    Ok((2.0 * c_prime - c).abs() / (16.0 * (2.0 * c).sqrt()) / (ell as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixtureBounds {
    pub lower: f64,
    pub upper: f64,
}

/// `max(r_a(ell), r_b(ell)) / 2`.
pub fn mixture_lower(r_a: impl Fn(u64) -> f64, r_b: impl Fn(u64) -> f64, ell: u64) -> f64 {
    r_a(ell).max(r_b(ell)) / 2.0
}

/// `r_a(ell/4)/2 + r_b(ell/4)/2 + 2 exp(-ell/8) + 2 exp(-u/8)`; needs `u >= ell`.
pub fn mixture_upper(r_a: impl Fn(u64) -> f64, r_b: impl Fn(u64) -> f64, ell: u64, u: u64) -> Result<f64> {
    if u < ell {
        return Err(LabError::Precondition(format!("u = {u} < ell = {ell}")));
    }
    let q = ell / 4;
    Ok(0.5 * r_a(q) + 0.5 * r_b(q) + 2.0 * (-(ell as f64) / 8.0).exp() + 2.0 * (-(u as f64) / 8.0).exp())
}

pub fn mixture_bounds(
    r_a: impl Fn(u64) -> f64,
    r_b: impl Fn(u64) -> f64,
    ell: u64,
    u: u64,
) -> Result<MixtureBounds> {
    let upper = mixture_upper(&r_a, &r_b, ell, u)?;
    Ok(MixtureBounds { lower: mixture_lower(r_a, r_b, ell), upper })
}

/// Every two-coin bound at one parameter point.
pub fn two_point_reports(alpha: f64, beta: f64, ell: u64, u: u64) -> Result<Vec<BoundReport>> {
    let kl = kl_two_point(alpha, beta, ell, u)?;
    let tv = pinsker_tv_bound(kl);
    let inputs = [("alpha", alpha), ("beta", beta), ("ell", ell as f64), ("u", u as f64)];
    Ok(vec![
        BoundReport::new("kl_two_point", kl, Side::Upper, &inputs),
        BoundReport::new("kl_relaxation", kl_two_point_relaxation(alpha, beta, ell, u), Side::Upper, &inputs),
        BoundReport::new("pinsker_tv", tv, Side::Upper, &inputs),
        BoundReport::new("le_cam_error", le_cam_error_floor(tv), Side::Lower, &inputs),
        BoundReport::new("le_cam_excess", 2.0 * alpha * le_cam_error_floor(tv), Side::Lower, &inputs),
        BoundReport::new("hoeffding_majority", hoeffding_majority_upper(alpha, beta, ell, u), Side::Upper, &inputs),
    ])
}

pub fn pi_c_report(c: f64, ell: u64) -> Result<BoundReport> {
    Ok(BoundReport::new("pi_c_sl_floor", pi_c_sl_floor(c, ell)?, Side::Lower, &[("c", c), ("ell", ell as f64)]))
}

pub fn rich_reports(c: f64, c_prime: f64, ell: u64) -> Result<Vec<BoundReport>> {
    let alpha = 1.0 / (32.0 * ell as f64 * c).sqrt();
    let inputs = [("c", c), ("c_prime", c_prime), ("ell", ell as f64), ("alpha", alpha)];
    let kl = kl_rich(c, alpha.min(0.499_999), ell)?;
    Ok(vec![
        BoundReport::new("kl_rich", kl.value, Side::Upper, &inputs),
        BoundReport::new("kl_rich_relaxation", kl.relaxation, Side::Upper, &inputs),
        BoundReport::new("rich_family_floor", rich_family_floor(c, c_prime, ell)?, Side::Lower, &inputs),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn kl_examples() {
        assert_relative_eq!(kl_two_point(0.1, 0.1, 1, 0).unwrap(), 0.4 * 1.5f64.ln(), max_relative = 1e-14);
        assert_relative_eq!(kl_two_point(0.1, 0.1, 1, 0).unwrap(), 0.162_186, epsilon = 1e-6);
        assert_eq!(kl_two_point(0.0, 0.0, 10, 10).unwrap(), 0.0);
        assert!(kl_two_point(0.5, 0.1, 1, 0).is_err());
        assert_eq!(kl_rich(0.3, 0.0, 9).unwrap().value, 0.0);
    }

    #[test]
    fn rich_kl_with_full_mass_is_the_label_term() {
        let r = kl_rich(1.0, 0.2, 7).unwrap();
        assert_relative_eq!(r.value, kl_two_point(0.2, 0.0, 7, 0).unwrap(), max_relative = 1e-15);
        let ell = 11;
        let c = 0.4;
        let a = 1.0 / (32.0 * ell as f64 * c).sqrt();
        assert_relative_eq!(kl_rich(c, a, ell).unwrap().relaxation, 0.5, max_relative = 1e-14);
    }

    #[test]
    fn tv_and_floor_examples() {
        assert_eq!(pinsker_tv_bound(0.0), 0.0);
        assert_relative_eq!(pinsker_tv_bound(0.5), 0.5);
        assert_eq!(le_cam_error_floor(0.0), 0.5);
        for ell in [1u64, 4, 64, 1000] {
            for u in [0, ell, ell * ell] {
                let a = 1.0 / (8.0 * (ell as f64).sqrt());
                let b = 1.0 / (8.0 * ((ell + u) as f64).sqrt());
                assert!(le_cam_two_point_floor(a, b, ell, u) >= 0.25 - 1e-15);
            }
        }
    }

    #[test]
    fn hoeffding_maximum() {
        for n in [1u64, 10, 4160] {
            let a = 1.0 / (2.0 * (n as f64).sqrt());
            let peak = (-0.5f64).exp() / (n as f64).sqrt();
            assert_relative_eq!(hoeffding_majority_upper(a, a, n, 0), peak, max_relative = 1e-12);
        }
    }

    #[test]
    fn floors() {
        assert_relative_eq!(pi_c_sl_floor(0.1, 10).unwrap(), 0.05 * (-3.2f64).exp(), max_relative = 1e-14);
        assert!(pi_c_sl_floor(0.25, 10).is_err());
        assert_relative_eq!(rich_family_floor(1.0, 1.0, 9).unwrap(), 1.0 / (16.0 * 2f64.sqrt()) / 3.0, max_relative = 1e-14);
        assert!(matches!(rich_family_floor(0.5, 0.25, 9), Err(LabError::Degenerate(_))));
        assert_relative_eq!(rich_family_floor(0.5, 0.1, 4).unwrap(), rich_family_floor(0.5, 0.4, 4).unwrap(), max_relative = 1e-14);
    }

    #[test]
    fn mixture_bound_shapes() {
        let r = |l: u64| 1.0 / (l as f64 + 1.0);
        let b = mixture_bounds(r, r, 16, 256).unwrap();
        assert_relative_eq!(b.lower, r(16) / 2.0);
        assert!(b.upper > b.lower);
        assert!(matches!(mixture_upper(r, r, 16, 8), Err(LabError::Precondition(_))));
    }

    proptest! {
        #[test]
        fn relaxation_dominates(a in 0.0..0.25f64, b in 0.0..0.25f64, ell in 0u64..100, u in 0u64..100) {
            prop_assert!(kl_two_point(a, b, ell, u).unwrap() <= kl_two_point_relaxation(a, b, ell, u) * (1.0 + 1e-12));
        }

        #[test]
        fn le_cam_floor_is_monotone(k1 in 0.0..10.0f64, k2 in 0.0..10.0f64) {
            let (lo, hi) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
            prop_assert!(le_cam_error_floor(pinsker_tv_bound(hi)) <= le_cam_error_floor(pinsker_tv_bound(lo)));
        }
    }
}
