//! Numerical kernels shared by the exact engines: compensated summation,
//! binomial probabilities accurate for very large `n`, truncated binomial
//! windows and multinomial enumeration.

use statrs::function::factorial::ln_factorial;

/// Binomial sums over more than this many trials are truncated to
/// `mean ± TRUNCATION_SIGMAS · sd`.
pub const TRUNCATION_SIGMAS: f64 = 12.0;

/// Below this many trials binomial windows always cover the full support.
pub const FULL_SUPPORT_MAX: u64 = 512;

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Error of Stirling's approximation, `ln n! - ((n + 1/2) ln n - n + ln sqrt(2 pi))`.
fn stirling_error(n: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n == 0 {
        return 0.0;
    }
    let x = n as f64;
    if n <= 15 {
        return ln_factorial(n) - (x + 0.5) * x.ln() + x - LN_SQRT_2PI;
    }
    let nn = x * x;
    if n > 500 {
        (S0 - S1 / nn) / x
    } else if n > 80 {
        (S0 - (S1 - S2 / nn) / nn) / x
    } else if n > 35 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / x
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / x
    }
}

/// Deviance term `x ln(x / np) + np - x`, computed without cancellation.
fn deviance(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        let mut j = 1.0;
        loop {
            ej *= v;
            let s1 = s + ej / (2.0 * j + 1.0);
            if s1 == s {
                return s1;
            }
            s = s1;
            j += 1.0;
        }
    }
    x * (x / np).ln() + np - x
}

/// `P(Bin(n, p) = k)` via the saddle-point expansion; relative accuracy is
/// near machine precision even for `n` in the tens of millions.
pub fn binomial_pmf(n: u64, k: u64, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    let q = 1.0 - p;
    if p <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if q <= 0.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    let nf = n as f64;
    if k == 0 {
        if n == 0 {
            return 1.0;
        }
        let lc = if p < 0.1 { -deviance(nf, nf * q) - nf * p } else { nf * q.ln() };
        return lc.exp();
    }
    if k == n {
        let lc = if q < 0.1 { -deviance(nf, nf * p) - nf * q } else { nf * p.ln() };
        return lc.exp();
    }
    let kf = k as f64;
    let lc = stirling_error(n)
        - stirling_error(k)
        - stirling_error(n - k)
        - deviance(kf, nf * p)
        - deviance(nf - kf, nf * q);
    let lf = std::f64::consts::TAU.ln() + kf.ln() + (-kf / nf).ln_1p();
    (lc - 0.5 * lf).exp()
}

/// Binomial pmf over the contiguous range `lo..=hi`, anchored at the value
/// closest to the mode and extended by the ratio recurrence.
pub fn binomial_pmf_range(n: u64, p: f64, lo: u64, hi: u64) -> Vec<f64> {
    let hi = hi.min(n);
    if lo > hi {
        return Vec::new();
    }
    let len = (hi - lo + 1) as usize;
    let mut out = vec![0.0; len];
    let q = 1.0 - p;
    if p <= 0.0 || q <= 0.0 {
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = binomial_pmf(n, lo + i as u64, p);
        }
        return out;
    }
    let mode = (((n as f64) + 1.0) * p).floor() as u64;
    let anchor = mode.clamp(lo, hi);
    let a = (anchor - lo) as usize;
    out[a] = binomial_pmf(n, anchor, p);
    let odds = p / q;
    for i in a + 1..len {
        let k = lo + i as u64 - 1;
        out[i] = out[i - 1] * ((n - k) as f64) / ((k + 1) as f64) * odds;
    }
    for i in (0..a).rev() {
        let k = lo + i as u64 + 1;
        out[i] = out[i + 1] * (k as f64) / ((n - k + 1) as f64) / odds;
    }
    out
}

/// A binomial pmf restricted to a contiguous window of its support.
#[derive(Debug, Clone)]
pub struct BinomialWindow {
    pub n: u64,
    pub lo: u64,
    pub pmf: Vec<f64>,
}

impl BinomialWindow {
    /// Full support for small `n`, `mean ± 12 sd` otherwise.
    pub fn new(n: u64, p: f64) -> Self {
        let (lo, hi) = window_bounds(n, p);
        Self { n, lo, pmf: binomial_pmf_range(n, p, lo, hi) }
    }

    /// Window that additionally covers `extra_lo..=extra_hi`.
    pub fn covering(n: u64, p: f64, extra_lo: u64, extra_hi: u64) -> Self {
        let (lo, hi) = window_bounds(n, p);
        let lo = lo.min(extra_lo);
        let hi = hi.max(extra_hi).min(n);
        Self { n, lo, pmf: binomial_pmf_range(n, p, lo, hi) }
    }

    pub fn hi(&self) -> u64 {
        self.lo + self.pmf.len() as u64 - 1
    }

    pub fn len(&self) -> usize {
        self.pmf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pmf.is_empty()
    }

    pub fn get(&self, k: u64) -> f64 {
        if k < self.lo {
            return 0.0;
        }
        self.pmf.get((k - self.lo) as usize).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.pmf.iter().enumerate().map(move |(i, &w)| (self.lo + i as u64, w))
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.pmf.iter().copied())
    }
}

/// Window `[lo, hi]` holding all but a negligible part of `Bin(n, p)`.
pub fn window_bounds(n: u64, p: f64) -> (u64, u64) {
    if n <= FULL_SUPPORT_MAX {
        return (0, n);
    }
    let nf = n as f64;
    let mean = nf * p;
    let sd = (nf * p * (1.0 - p)).sqrt();
    let reach = TRUNCATION_SIGMAS * sd + 2.0;
    let lo = (mean - reach).floor().max(0.0) as u64;
    let hi = ((mean + reach).ceil().min(nf)) as u64;
    (lo, hi)
}

/// Number of terms a binomial window for `n` trials would hold.
pub fn window_len(n: u64, p: f64) -> u64 {
    let (lo, hi) = window_bounds(n, p);
    hi - lo + 1
}

/// `P(Bin(n, p) <= m)`. The smaller tail is summed term by term from its
/// inner end, so values far below one keep full relative precision.
pub fn binomial_lower_tail(n: u64, p: f64, m: u64) -> f64 {
    if m >= n || p <= 0.0 {
        return 1.0;
    }
    if p >= 1.0 {
        return 0.0;
    }
    if (m as f64) < n as f64 * p {
        let odds = p / (1.0 - p);
        let mut term = binomial_pmf(n, m, p);
        let mut acc = CompensatedSum::new();
        acc.add(term);
        let mut k = m;
        while k > 0 && term > 0.0 {
            term *= k as f64 / ((n - k + 1) as f64) / odds;
            k -= 1;
            acc.add(term);
            if term < acc.value() * 1e-18 {
                break;
            }
        }
        acc.value()
    } else {
        1.0 - binomial_upper_tail(n, p, m + 1)
    }
}

/// `P(Bin(n, p) >= m)`, with the same precision contract as
/// [`binomial_lower_tail`].
pub fn binomial_upper_tail(n: u64, p: f64, m: u64) -> f64 {
    if m == 0 || p >= 1.0 {
        return if m <= n { 1.0 } else { 0.0 };
    }
    if m > n || p <= 0.0 {
        return 0.0;
    }
    if (m as f64) > n as f64 * p {
        let odds = p / (1.0 - p);
        let mut term = binomial_pmf(n, m, p);
        let mut acc = CompensatedSum::new();
        acc.add(term);
        let mut k = m;
        while k < n && term > 0.0 {
            term *= ((n - k) as f64) / ((k + 1) as f64) * odds;
            k += 1;
            acc.add(term);
            if term < acc.value() * 1e-18 {
                break;
            }
        }
        acc.value()
    } else {
        1.0 - binomial_lower_tail(n, p, m - 1)
    }
}

/// Number of ways to write `total` as an ordered sum of `parts` nonnegative integers.
pub fn composition_count(total: u64, parts: u32) -> u128 {
    if parts == 0 {
        return u128::from(total == 0);
    }
    // C(total + parts - 1, parts - 1)
    let k = u128::from(parts - 1);
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc * (u128::from(total) + i) / i;
    }
    acc
}

/// Calls `visit` with every composition of `total` into `parts` cells.
pub fn for_each_composition(total: u64, parts: usize, mut visit: impl FnMut(&[u64])) {
    let mut counts = vec![0u64; parts];
    if parts == 0 {
        if total == 0 {
            visit(&counts);
        }
        return;
    }
    fill(&mut counts, 0, total, &mut visit);

    fn fill(counts: &mut [u64], idx: usize, remaining: u64, visit: &mut impl FnMut(&[u64])) {
        if idx + 1 == counts.len() {
            counts[idx] = remaining;
            visit(counts);
            return;
        }
        for c in 0..=remaining {
            counts[idx] = c;
            fill(counts, idx + 1, remaining - c, visit);
        }
    }
}

/// Multinomial probability of `counts` under cell probabilities `probs`,
/// evaluated in log space.
pub fn multinomial_pmf(counts: &[u64], probs: &[f64]) -> f64 {
    debug_assert_eq!(counts.len(), probs.len());
    let total: u64 = counts.iter().sum();
    let mut log_w = ln_factorial(total);
    for (&c, &p) in counts.iter().zip(probs) {
        if c == 0 {
            continue;
        }
        if p <= 0.0 {
            return 0.0;
        }
        log_w += c as f64 * p.ln() - ln_factorial(c);
    }
    log_w.exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use statrs::distribution::{Binomial, Discrete};

    #[test]
    fn tails_match_direct_sums() {
        for &(n, p) in &[(0u64, 0.3), (1, 0.5), (20, 0.3), (100, 0.9), (700, 0.01), (3000, 0.5)] {
            let pmf = binomial_pmf_range(n, p, 0, n);
            for m in (0..=n).step_by(((n / 25).max(1)) as usize) {
                let below: f64 = compensated_sum(pmf[..=m as usize].iter().copied());
                let above: f64 = compensated_sum(pmf[m as usize..].iter().copied());
                assert_relative_eq!(binomial_lower_tail(n, p, m), below, max_relative = 1e-11, epsilon = 1e-15);
                assert_relative_eq!(binomial_upper_tail(n, p, m), above, max_relative = 1e-11, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn far_tails_keep_relative_precision() {
        // P(Bin(100, 0.9) <= 50) against an explicit sum of tiny terms.
        let direct: f64 = (0..=50).map(|k| binomial_pmf(100, k, 0.9)).sum();
        assert_relative_eq!(binomial_lower_tail(100, 0.9, 50), direct, max_relative = 1e-12);
        assert!(direct < 1e-20 && direct > 0.0);
        assert_eq!(binomial_upper_tail(5, 0.5, 6), 0.0);
        assert_eq!(binomial_upper_tail(5, 0.5, 0), 1.0);
    }

    #[test]
    fn pmf_matches_statrs_for_moderate_n() {
        for &(n, p) in &[(10u64, 0.3), (57, 0.61), (200, 0.02), (1000, 0.5)] {
            let reference = Binomial::new(p, n).unwrap();
            for k in 0..=n {
                let want = reference.pmf(k);
                let got = binomial_pmf(n, k, p);
                if want > 1e-250 {
                    assert_relative_eq!(got, want, max_relative = 1e-11);
                }
            }
        }
    }

    #[test]
    fn pmf_windows_sum_to_one() {
        for &(n, p) in &[(0u64, 0.4), (7, 0.5), (4160, 0.5078), (16_777_216, 0.5001), (3_000_000, 0.9)] {
            let w = BinomialWindow::new(n, p);
            assert!((w.total() - 1.0).abs() < 1e-12, "n={n} p={p} total={}", w.total());
        }
    }

    #[test]
    fn recurrence_agrees_with_direct_evaluation() {
        let n = 2_000_000;
        let p = 0.5 + 1e-3;
        let (lo, hi) = window_bounds(n, p);
        let range = binomial_pmf_range(n, p, lo, hi);
        for k in [lo, lo + 17, (lo + hi) / 2, hi - 3] {
            let direct = binomial_pmf(n, k, p);
            assert_relative_eq!(range[(k - lo) as usize], direct, max_relative = 1e-10);
        }
    }

    #[test]
    fn degenerate_probabilities() {
        assert_eq!(binomial_pmf(5, 0, 0.0), 1.0);
        assert_eq!(binomial_pmf(5, 1, 0.0), 0.0);
        assert_eq!(binomial_pmf(5, 5, 1.0), 1.0);
        assert_eq!(binomial_pmf(3, 4, 0.5), 0.0);
    }

    #[test]
    fn compositions_are_counted_and_visited() {
        let mut seen = 0u128;
        for_each_composition(6, 4, |c| {
            assert_eq!(c.iter().sum::<u64>(), 6);
            seen += 1;
        });
        assert_eq!(seen, composition_count(6, 4));
        assert_eq!(composition_count(64, 4), 47_905);
    }

    #[test]
    fn multinomial_weights_sum_to_one() {
        let probs = [0.1, 0.2, 0.3, 0.4];
        let mut acc = CompensatedSum::new();
        for_each_composition(9, 4, |c| acc.add(multinomial_pmf(c, &probs)));
        assert!((acc.value() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut acc = CompensatedSum::new();
        acc.add(1.0);
        for _ in 0..1000 {
            acc.add(1e-17);
        }
        acc.add(-1.0);
        assert_relative_eq!(acc.value(), 1e-14, max_relative = 1e-9);
    }
}
