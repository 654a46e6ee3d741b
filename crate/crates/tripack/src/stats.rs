//! Chi-square goodness-of-fit machinery for the verification paths.
//!
//! Quantiles are computed in-repo from the regularized lower incomplete gamma
//! function (series + continued fraction, Lanczos ln-gamma, bisection for the
//! inverse) so the pass thresholds are pinned by this crate's tests rather
//! than by an external library's version. Unit tests freeze values
//! cross-checked against an independent implementation.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    /// Classical validity rule: every cell must carry expected count >= 5.
    #[error("undersampled cell: expected count {expected} below the validity floor of 5")]
    UndersampledCell { expected: f64 },
    #[error("chi-square test needs at least 2 cells, got {0}")]
    TooFewCells(usize),
    #[error("empty sample")]
    EmptySample,
    #[error("quantile must lie strictly between 0 and 1, got {0}")]
    BadQuantile(f64),
}

// ======================================================================
// Gamma-function numerics
// ======================================================================

/// ln Γ(x) for x > 0, Lanczos approximation (g = 7, 9 coefficients).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // Reflection keeps precision for the tiny-argument corner.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + G + 0.5;
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized lower incomplete gamma P(a, x) for a > 0, x >= 0.
pub fn reg_lower_gamma(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        // Series: P(a,x) = x^a e^-x / Γ(a) * Σ_k x^k / (a(a+1)...(a+k))
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut k = 1.0;
        while term.abs() > sum.abs() * 1e-17 {
            term *= x / (a + k);
            sum += term;
            k += 1.0;
            if k > 10_000.0 {
                break;
            }
        }
        sum * (a * x.ln() - x - ln_gamma(a)).exp()
    } else {
        // Continued fraction (modified Lentz) for Q(a,x); P = 1 - Q.
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        let q = (a * x.ln() - x - ln_gamma(a)).exp() * h;
        1.0 - q
    }
}

/// CDF of the chi-square distribution with `dof` degrees of freedom.
pub fn chi_square_cdf(x: f64, dof: usize) -> f64 {
    debug_assert!(dof >= 1);
    if x <= 0.0 {
        return 0.0;
    }
    reg_lower_gamma(dof as f64 / 2.0, x / 2.0)
}

/// Quantile (inverse CDF) of the chi-square distribution, by bisection.
pub fn chi_square_quantile(q: f64, dof: usize) -> Result<f64, StatsError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(StatsError::BadQuantile(q));
    }
    let k = dof as f64;
    let mut hi = k + 10.0 * (2.0 * k).sqrt() + 50.0;
    while chi_square_cdf(hi, dof) < q {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi_square_cdf(mid, dof) < q {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * (1.0 + hi) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

// ======================================================================
// Tests on counts
// ======================================================================

/// Result of one chi-square check.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquareOutcome {
    pub statistic: f64,
    pub dof: usize,
    /// Quantile level the threshold was computed at.
    pub quantile: f64,
    /// Critical value: the `quantile` point of chi-square with `dof`.
    pub threshold: f64,
    /// True iff `statistic < threshold`.
    pub pass: bool,
}

/// One-sample uniformity test: `observed[i]` counts against a flat
/// `expected` count per cell. `dof = cells - 1`.
///
/// # Errors
/// Rejects fewer than 2 cells and any expected count below 5.
pub fn chi_square_uniformity(
    observed: &[u64],
    expected: f64,
    quantile: f64,
) -> Result<ChiSquareOutcome, StatsError> {
    if observed.len() < 2 {
        return Err(StatsError::TooFewCells(observed.len()));
    }
    if expected < 5.0 {
        return Err(StatsError::UndersampledCell { expected });
    }
    let statistic = observed
        .iter()
        .map(|&o| {
            let d = o as f64 - expected;
            d * d / expected
        })
        .sum();
    let dof = observed.len() - 1;
    let threshold = chi_square_quantile(quantile, dof)?;
    Ok(ChiSquareOutcome {
        statistic,
        dof,
        quantile,
        threshold,
        pass: statistic < threshold,
    })
}

/// Two-sample chi-square test of homogeneity on integer-valued outcomes.
///
/// Bins are the union of observed values; adjacent bins are pooled greedily
/// (ascending, remainder merged into the last bin) until every pooled bin
/// carries a combined count of at least `min_pooled`, which keeps the
/// per-sample expected counts at or above the classical validity floor when
/// `min_pooled >= 10` and the samples have comparable sizes. With a single
/// pooled bin the statistic is 0 and the test passes trivially.
pub fn two_sample_chi_square(
    sample_a: &[u64],
    sample_b: &[u64],
    quantile: f64,
    min_pooled: u64,
) -> Result<ChiSquareOutcome, StatsError> {
    if sample_a.is_empty() || sample_b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut values: Vec<u64> = sample_a.iter().chain(sample_b).copied().collect();
    values.sort_unstable();
    values.dedup();

    let index_of = |v: u64| values.binary_search(&v).expect("value came from the union");
    let mut counts_a = vec![0u64; values.len()];
    let mut counts_b = vec![0u64; values.len()];
    for &v in sample_a {
        counts_a[index_of(v)] += 1;
    }
    for &v in sample_b {
        counts_b[index_of(v)] += 1;
    }

    // Pool ascending until each bin's combined count reaches the floor.
    let mut pooled: Vec<(u64, u64)> = Vec::new();
    let (mut acc_a, mut acc_b) = (0u64, 0u64);
    for i in 0..values.len() {
        acc_a += counts_a[i];
        acc_b += counts_b[i];
        if acc_a + acc_b >= min_pooled {
            pooled.push((acc_a, acc_b));
            acc_a = 0;
            acc_b = 0;
        }
    }
    if acc_a + acc_b > 0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += acc_a;
                last.1 += acc_b;
            }
            None => pooled.push((acc_a, acc_b)),
        }
    }

    let n_a = sample_a.len() as f64;
    let n_b = sample_b.len() as f64;
    let total = n_a + n_b;
    let mut statistic = 0.0;
    for &(a, b) in &pooled {
        let row = (a + b) as f64;
        let ea = row * n_a / total;
        let eb = row * n_b / total;
        let da = a as f64 - ea;
        let db = b as f64 - eb;
        statistic += da * da / ea + db * db / eb;
    }

    if pooled.len() < 2 {
        // Both samples concentrated on one pooled bin: nothing to distinguish.
        return Ok(ChiSquareOutcome {
            statistic: 0.0,
            dof: 0,
            quantile,
            threshold: 0.0,
            pass: true,
        });
    }
    let dof = pooled.len() - 1;
    let threshold = chi_square_quantile(quantile, dof)?;
    Ok(ChiSquareOutcome {
        statistic,
        dof,
        quantile,
        threshold,
        pass: statistic < threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
    }

    // Frozen against scipy.special.gammainc.
    #[test]
    fn incomplete_gamma_matches_reference() {
        let cases = [
            (0.5, 0.25, 0.5204998778130466),
            (1.5, 2.0, 0.7385358700508888),
            (59.5, 60.0, 0.5429388871562533),
            (59.5, 90.0, 0.9997397843006512),
            (2.0, 0.1, 0.004678840160444474),
            (100.0, 80.0, 0.0171083130351331),
        ];
        for (a, x, want) in cases {
            assert!(
                close(reg_lower_gamma(a, x), want, 1e-12),
                "P({a},{x}) = {} want {want}",
                reg_lower_gamma(a, x)
            );
        }
    }

    // Frozen against scipy.stats.chi2.{cdf,ppf}.
    #[test]
    fn chi_square_cdf_matches_reference() {
        let cases = [
            (10.083333333333334, 3, 0.9821291071063745),
            (118.0, 119, 0.49132702926066707),
            (0.5, 1, 0.5204998778130466),
            (200.0, 119, 0.9999951730009019),
        ];
        for (x, k, want) in cases {
            assert!(close(chi_square_cdf(x, k), want, 1e-12));
        }
    }

    #[test]
    fn chi_square_quantile_matches_reference() {
        let cases = [
            (0.999, 119, 172.41768160217916),
            (0.99, 119, 157.79954116016174),
            (0.99, 1, 6.6348966010212145),
            (0.999, 1, 10.827566170662733),
            (0.99, 3, 11.344866730144373),
            (0.5, 7, 6.345811195521515),
            (0.975, 40, 59.34170714317118),
            (0.001, 5, 0.2102126026292192),
            (0.9995, 200, 272.4226080404334),
            (0.99, 11, 24.724970311318277),
        ];
        for (q, k, want) in cases {
            let got = chi_square_quantile(q, k).unwrap();
            assert!(close(got, want, 1e-9), "ppf({q},{k}) = {got} want {want}");
        }
    }

    #[test]
    fn quantile_roundtrips_through_cdf() {
        for &dof in &[1usize, 2, 7, 119, 300] {
            for &q in &[0.01, 0.5, 0.9, 0.99, 0.999] {
                let x = chi_square_quantile(q, dof).unwrap();
                assert!(close(chi_square_cdf(x, dof), q, 1e-9));
            }
        }
    }

    #[test]
    fn exact_uniform_counts_pass() {
        let out = chi_square_uniformity(&[100; 12], 100.0, 0.999).unwrap();
        assert_eq!(out.statistic, 0.0);
        assert_eq!(out.dof, 11);
        assert!(out.pass);
    }

    // All mass in one of two cells: statistic is exactly 2N, which clears the
    // 0.99 critical value (6.63) from N = 5 up. At 0.999 the critical value is
    // 10.83, so the smallest failing N is 6.
    #[test]
    fn concentrated_mass_fails() {
        for n in [5u64, 10, 50] {
            let out = chi_square_uniformity(&[2 * n, 0], n as f64, 0.99).unwrap();
            assert_eq!(out.statistic, (2 * n) as f64);
            assert!(!out.pass, "N = {n} should fail at 0.99");
        }
        assert!(chi_square_uniformity(&[10, 0], 5.0, 0.999).unwrap().pass);
        assert!(!chi_square_uniformity(&[12, 0], 6.0, 0.999).unwrap().pass);
    }

    #[test]
    fn undersampled_cells_are_rejected() {
        assert_eq!(
            chi_square_uniformity(&[3, 2], 2.5, 0.99),
            Err(StatsError::UndersampledCell { expected: 2.5 })
        );
        assert_eq!(
            chi_square_uniformity(&[10], 10.0, 0.99),
            Err(StatsError::TooFewCells(1))
        );
    }

    #[test]
    fn identical_samples_pass_two_sample_test() {
        let a: Vec<u64> = (0..1000).map(|i| i % 7).collect();
        let out = two_sample_chi_square(&a, &a.clone(), 0.99, 10).unwrap();
        assert_eq!(out.statistic, 0.0);
        assert!(out.pass);
    }

    #[test]
    fn disjoint_samples_fail_two_sample_test() {
        let a = vec![0u64; 500];
        let b = vec![9u64; 500];
        let out = two_sample_chi_square(&a, &b, 0.99, 10).unwrap();
        assert!(!out.pass);
        assert_eq!(out.dof, 1);
    }

    #[test]
    fn single_support_value_passes_trivially() {
        let a = vec![4u64; 100];
        let b = vec![4u64; 100];
        let out = two_sample_chi_square(&a, &b, 0.99, 10).unwrap();
        assert_eq!(out.dof, 0);
        assert!(out.pass);
    }

    #[test]
    fn pooling_respects_floor() {
        // Values 0..40 each appearing once per sample: every bin must pool up
        // to at least 10 combined.
        let a: Vec<u64> = (0..40).collect();
        let b: Vec<u64> = (0..40).collect();
        let out = two_sample_chi_square(&a, &b, 0.99, 10).unwrap();
        assert!(out.dof + 1 <= 8, "80 observations / floor 10 caps bins at 8");
        assert!(out.pass);
    }
}
