//! Classical two-sided tests used by the descriptive tables.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor, Normal, StudentsT};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
}

/// Two-sided normal tail of a z statistic.
pub fn normal_two_sided(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    let n = Normal::standard();
    (2.0 * n.sf(z.abs())).min(1.0)
}

fn chi2_sf(x: f64, df: f64) -> f64 {
    ChiSquared::new(df).map(|d| d.sf(x)).unwrap_or(f64::NAN)
}

fn t_two_sided(t: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df)
        .map(|d| (2.0 * d.sf(t.abs())).min(1.0))
        .unwrap_or(f64::NAN)
}

pub fn expected_counts(table: &[Vec<u64>]) -> Vec<Vec<f64>> {
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let ncol = table.first().map_or(0, Vec::len);
    let cols: Vec<f64> = (0..ncol)
        .map(|j| table.iter().map(|r| r[j]).sum::<u64>() as f64)
        .collect();
    let total: f64 = rows.iter().sum();
    rows.iter()
        .map(|r| cols.iter().map(|c| r * c / total).collect())
        .collect()
}

/// Pearson chi-square test of independence. With `yates`, the continuity
/// correction `|O - E| - min(0.5, |O - E|)` is applied (2×2 tables only).
pub fn chi_square(table: &[Vec<u64>], yates: bool) -> Result<TestOutcome> {
    let nrow = table.len();
    let ncol = table.first().map_or(0, Vec::len);
    if nrow < 2 || ncol < 2 {
        return Err(Error::Undefined("chi-square needs at least a 2×2 table".into()));
    }
    if yates && (nrow != 2 || ncol != 2) {
        return Err(Error::Unsupported("continuity correction applies to 2×2 tables only".into()));
    }
    let expected = expected_counts(table);
    let mut stat = 0.0;
    for (obs_row, exp_row) in table.iter().zip(&expected) {
        for (&o, &e) in obs_row.iter().zip(exp_row) {
            if e == 0.0 {
                return Err(Error::Undefined("empty row or column in contingency table".into()));
            }
            let mut d = (o as f64 - e).abs();
            if yates {
                d -= d.min(0.5);
            }
            stat += d * d / e;
        }
    }
    let df = ((nrow - 1) * (ncol - 1)) as f64;
    Ok(TestOutcome {
        statistic: stat,
        df,
        p_value: chi2_sf(stat, df),
    })
}

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Fisher's exact test on a 2×2 table, two-sided: the sum of hypergeometric
/// probabilities of all tables with the observed margins that are no more
/// likely than the observed one (relative tolerance 1e-7).
pub fn fisher_exact(table: [[u64; 2]; 2]) -> TestOutcome {
    let [[a, b], [c, d]] = table;
    let r1 = a + b;
    let r2 = c + d;
    let c1 = a + c;
    let n = r1 + r2;
    let lo = c1.saturating_sub(r2);
    let hi = c1.min(r1);
    let denom = ln_choose(n, c1);
    let logp = |x: u64| ln_choose(r1, x) + ln_choose(r2, c1 - x) - denom;
    let observed = logp(a);
    let threshold = observed + 1e-7f64.ln_1p();
    let p: f64 = (lo..=hi)
        .map(logp)
        .filter(|&lp| lp <= threshold)
        .map(f64::exp)
        .sum();
    let odds_ratio = if b * c == 0 {
        f64::INFINITY
    } else {
        (a * d) as f64 / (b * c) as f64
    };
    TestOutcome {
        statistic: odds_ratio,
        df: f64::NAN,
        p_value: p.min(1.0),
    }
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = if x.len() > 1 {
        x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

fn degenerate_t(diff: f64) -> TestOutcome {
    TestOutcome {
        statistic: if diff == 0.0 { 0.0 } else { diff.signum() * f64::INFINITY },
        df: f64::NAN,
        p_value: if diff == 0.0 { 1.0 } else { 0.0 },
    }
}

/// Unequal-variance (Welch) two-sample t-test.
pub fn welch_t_test(x: &[f64], y: &[f64]) -> Result<TestOutcome> {
    if x.len() < 2 || y.len() < 2 {
        return Err(Error::Undefined("t-test needs at least two observations per group".into()));
    }
    let (mx, vx) = mean_var(x);
    let (my, vy) = mean_var(y);
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let se2 = vx / nx + vy / ny;
    if se2 == 0.0 {
        return Ok(degenerate_t(mx - my));
    }
    let t = (mx - my) / se2.sqrt();
    let df = se2 * se2 / ((vx / nx).powi(2) / (nx - 1.0) + (vy / ny).powi(2) / (ny - 1.0));
    Ok(TestOutcome {
        statistic: t,
        df,
        p_value: t_two_sided(t, df),
    })
}

/// Equal-variance (Student) two-sample t-test.
pub fn pooled_t_test(x: &[f64], y: &[f64]) -> Result<TestOutcome> {
    if x.is_empty() || y.is_empty() || x.len() + y.len() < 3 {
        return Err(Error::Undefined("t-test needs two non-empty groups and three observations".into()));
    }
    let (mx, vx) = mean_var(x);
    let (my, vy) = mean_var(y);
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let df = nx + ny - 2.0;
    let sp2 = ((nx - 1.0) * vx + (ny - 1.0) * vy) / df;
    let se2 = sp2 * (1.0 / nx + 1.0 / ny);
    if se2 == 0.0 {
        return Ok(degenerate_t(mx - my));
    }
    let t = (mx - my) / se2.sqrt();
    Ok(TestOutcome {
        statistic: t,
        df,
        p_value: t_two_sided(t, df),
    })
}

/// One-way ANOVA F-test. `df` is the numerator degrees of freedom; the
/// denominator is `N - k`.
pub fn one_way_anova(groups: &[&[f64]]) -> Result<(TestOutcome, f64)> {
    let k = groups.len();
    let n: usize = groups.iter().map(|g| g.len()).sum();
    if k < 2 || groups.iter().any(|g| g.is_empty()) || n <= k {
        return Err(Error::Undefined("ANOVA needs at least two non-empty groups and N > k".into()));
    }
    let grand = groups.iter().flat_map(|g| g.iter()).sum::<f64>() / n as f64;
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    for g in groups {
        let (m, _) = mean_var(g);
        ssb += g.len() as f64 * (m - grand).powi(2);
        ssw += g.iter().map(|v| (v - m).powi(2)).sum::<f64>();
    }
    let df1 = (k - 1) as f64;
    let df2 = (n - k) as f64;
    if ssw == 0.0 {
        let p = if ssb == 0.0 { 1.0 } else { 0.0 };
        let f = if ssb == 0.0 { 0.0 } else { f64::INFINITY };
        return Ok((TestOutcome { statistic: f, df: df1, p_value: p }, df2));
    }
    let f = (ssb / df1) / (ssw / df2);
    let p = FisherSnedecor::new(df1, df2)
        .map(|d| d.sf(f))
        .unwrap_or(f64::NAN);
    Ok((TestOutcome { statistic: f, df: df1, p_value: p }, df2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fisher_perfect_split() {
        let r = fisher_exact([[5, 0], [0, 5]]);
        assert_relative_eq!(r.p_value, 2.0 / 252.0, max_relative = 1e-12);
    }

    #[test]
    fn balanced_table_is_independent() {
        let t = vec![vec![10, 10], vec![10, 10]];
        assert!(chi_square(&t, true).unwrap().p_value >= 0.99);
        assert_relative_eq!(chi_square(&t, false).unwrap().p_value, 1.0);
        assert_relative_eq!(fisher_exact([[10, 10], [10, 10]]).p_value, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn chi_square_known_value() {
        // [[12, 5], [7, 9]]: expected row1 = (17*19/33, 17*14/33), statistic computed by hand.
        let t = vec![vec![12, 5], vec![7, 9]];
        let e = expected_counts(&t);
        let manual: f64 = [[12.0, 5.0], [7.0, 9.0]]
            .iter()
            .zip(&e)
            .flat_map(|(o, e)| o.iter().zip(e).map(|(o, e)| (o - e) * (o - e) / e))
            .sum();
        let r = chi_square(&t, false).unwrap();
        assert_relative_eq!(r.statistic, manual, max_relative = 1e-12);
        assert_eq!(r.df, 1.0);
    }

    #[test]
    fn yates_only_on_two_by_two() {
        let t = vec![vec![1, 2, 3], vec![3, 2, 1]];
        assert!(matches!(chi_square(&t, true), Err(Error::Unsupported(_))));
    }

    #[test]
    fn identical_groups_give_p_one() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let r = welch_t_test(&x, &x).unwrap();
        assert_relative_eq!(r.p_value, 1.0);
        assert_eq!(r.statistic, 0.0);
    }

    #[test]
    fn welch_reference_value() {
        // R: t.test(c(1,2,3,4,5), c(2,4,6,8,10)) -> t = -1.8974, df = 5.8824, p = 0.1077
        let r = welch_t_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 4.0, 6.0, 8.0, 10.0]).unwrap();
        assert_relative_eq!(r.statistic, -1.8973665961, max_relative = 1e-8);
        assert_relative_eq!(r.df, 5.882352941, max_relative = 1e-8);
        assert!((r.p_value - 0.1077).abs() < 5e-4);
    }
}
