//! Binomial logistic regression by iteratively reweighted least squares.
//!
//! One core serves three callers: individual-level fits (one trial per row),
//! the dyadic ERGM (dyads aggregated into covariate patterns, many trials per
//! row) and the category relative-risk tables.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{inverse_spd, rank_guard, solve_spd, weighted_normal_equations};
use crate::stats::normal_two_sided;

pub const MAX_ITERATIONS: usize = 50;
/// Relative deviance change `|Δdev| / (|dev| + 0.1)` that ends the iteration.
pub const DEVIANCE_TOL: f64 = 1e-10;
const MAX_HALVINGS: usize = 30;
/// Linear predictors beyond this magnitude mean fitted probabilities are 0 or 1
/// to machine precision.
const SEPARATION_ETA: f64 = 30.0;
pub const Z_95: f64 = 1.959963984540054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub wald_p_values: Vec<f64>,
    /// Wald intervals on the log-odds scale.
    pub ci95: Vec<[f64; 2]>,
    pub deviance: f64,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Deviance after each accepted iteration.
    pub deviance_trace: Vec<f64>,
    #[serde(skip)]
    pub covariance: DMatrix<f64>,
}

impl LogisticFit {
    pub fn coefficient(&self, term: &str) -> Option<f64> {
        self.terms.iter().position(|t| t == term).map(|i| self.coefficients[i])
    }

    pub fn linear_predictor(&self, row: &[f64]) -> f64 {
        row.iter().zip(&self.coefficients).map(|(x, b)| x * b).sum()
    }
}

pub fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Binomial log-likelihood without the combinatorial constant, and the deviance.
fn loglik_and_deviance(y: &[f64], m: &[f64], eta: &[f64]) -> (f64, f64) {
    let mut ll = 0.0;
    let mut saturated = 0.0;
    for ((&yi, &mi), &e) in y.iter().zip(m).zip(eta) {
        // log p = -softplus(-η), log(1-p) = -softplus(η)
        ll -= yi * softplus(-e) + (mi - yi) * softplus(e);
        if yi > 0.0 {
            saturated += yi * (yi / mi).ln();
        }
        if mi - yi > 0.0 {
            saturated += (mi - yi) * ((mi - yi) / mi).ln();
        }
    }
    (ll, 2.0 * (saturated - ll))
}

fn is_indicator(col: &[f64]) -> bool {
    col.iter().all(|&v| v == 0.0 || v == 1.0)
}

/// Terms whose 0/1 indicator splits off a level with all-failure or all-success
/// responses; the maximum likelihood estimate does not exist in that case.
fn indicator_separation(y: &[f64], m: &[f64], x: &DMatrix<f64>, names: &[String]) -> Vec<String> {
    let has_intercept = (0..x.ncols()).any(|j| x.column(j).iter().all(|&v| v == 1.0));
    let mut out = Vec::new();
    for j in 0..x.ncols() {
        let col: Vec<f64> = x.column(j).iter().copied().collect();
        if col.iter().all(|&v| v == 1.0) || !is_indicator(&col) {
            continue;
        }
        for level in [1.0, 0.0] {
            if level == 0.0 && !has_intercept {
                continue;
            }
            let (mut succ, mut trials) = (0.0, 0.0);
            for i in 0..col.len() {
                if col[i] == level {
                    succ += y[i];
                    trials += m[i];
                }
            }
            if trials > 0.0 && (succ == 0.0 || succ == trials) {
                out.push(names[j].clone());
                break;
            }
        }
    }
    out
}

/// Logistic regression of a 0/1 response.
pub fn fit_logistic(y: &[f64], x: &DMatrix<f64>, names: &[String]) -> Result<LogisticFit> {
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Type("logistic response must be 0 or 1".into()));
    }
    let trials = vec![1.0; y.len()];
    fit_binomial(y, &trials, x, names)
}

/// Grouped binomial logistic regression: row `i` has `successes[i]` out of `trials[i]`.
pub fn fit_binomial(successes: &[f64], trials: &[f64], x: &DMatrix<f64>, names: &[String]) -> Result<LogisticFit> {
    let n = x.nrows();
    let p = x.ncols();
    assert_eq!(successes.len(), n, "response length must match design rows");
    assert_eq!(trials.len(), n, "trial counts must match design rows");
    assert_eq!(names.len(), p, "one name per design column");
    for (&s, &m) in successes.iter().zip(trials) {
        if !(m > 0.0) || s < 0.0 || s > m {
            return Err(Error::Input(format!("invalid binomial row: {s} successes of {m} trials")));
        }
    }
    rank_guard(x, names)?;
    let total_s: f64 = successes.iter().sum();
    let total_m: f64 = trials.iter().sum();
    if total_s == 0.0 || total_s == total_m {
        return Err(Error::Separation {
            terms: vec![format!("{} (response is constant)", names.first().map_or("intercept", |s| s.as_str()))],
        });
    }
    let separated = indicator_separation(successes, trials, x, names);
    if !separated.is_empty() {
        return Err(Error::Separation { terms: separated });
    }

    // Start from the glm.fit initial means (y + 0.5) / (m + 1).
    let mut mu: Vec<f64> = successes
        .iter()
        .zip(trials)
        .map(|(&s, &m)| (s + 0.5) / (m + 1.0))
        .collect();
    let mut eta: Vec<f64> = mu.iter().map(|&u| (u / (1.0 - u)).ln()).collect();
    let mut beta: Option<DVector<f64>> = None;
    let mut dev_old = f64::INFINITY;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=MAX_ITERATIONS {
        iterations = iter;
        let w: Vec<f64> = mu.iter().zip(trials).map(|(&u, &m)| m * u * (1.0 - u)).collect();
        let z: Vec<f64> = (0..n)
            .map(|i| eta[i] + (successes[i] - trials[i] * mu[i]) / w[i])
            .collect();
        let (xtwx, xtwz) = weighted_normal_equations(x, &w, &z);
        let mut candidate = solve_spd(&xtwx, &xtwz)
            .ok_or_else(|| Error::Numeric("weighted normal equations are singular".into()))?;
        let mut new_eta: Vec<f64> = (x * &candidate).iter().copied().collect();
        let (_, mut dev) = loglik_and_deviance(successes, trials, &new_eta);
        if let Some(prev) = &beta {
            let mut halvings = 0;
            while !dev.is_finite() || dev > dev_old {
                if halvings == MAX_HALVINGS {
                    return Err(Error::NonConvergence("step-halving failed to reduce the deviance".into()));
                }
                candidate = (&candidate + prev) * 0.5;
                new_eta = (x * &candidate).iter().copied().collect();
                dev = loglik_and_deviance(successes, trials, &new_eta).1;
                halvings += 1;
            }
        }
        eta = new_eta;
        mu = eta.iter().map(|&e| sigmoid(e)).collect();
        beta = Some(candidate);
        trace.push(dev);
        if (dev - dev_old).abs() / (dev.abs() + 0.1) < DEVIANCE_TOL {
            converged = true;
            break;
        }
        dev_old = dev;
    }
    let beta = beta.expect("at least one iteration");

    if eta.iter().any(|e| e.abs() > SEPARATION_ETA) {
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| beta[b].abs().total_cmp(&beta[a].abs()));
        return Err(Error::Separation {
            terms: vec![names[order[0]].clone()],
        });
    }

    let w: Vec<f64> = mu.iter().zip(trials).map(|(&u, &m)| m * u * (1.0 - u)).collect();
    let (info, _) = weighted_normal_equations(x, &w, &vec![0.0; n]);
    let covariance = inverse_spd(&info)
        .ok_or_else(|| Error::Numeric("information matrix is singular at the estimate".into()))?;
    let (ll, deviance) = loglik_and_deviance(successes, trials, &eta);
    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let std_errors: Vec<f64> = (0..p).map(|j| covariance[(j, j)].sqrt()).collect();
    Ok(LogisticFit {
        terms: names.to_vec(),
        wald_p_values: coefficients
            .iter()
            .zip(&std_errors)
            .map(|(b, s)| normal_two_sided(b / s))
            .collect(),
        ci95: coefficients
            .iter()
            .zip(&std_errors)
            .map(|(b, s)| [b - Z_95 * s, b + Z_95 * s])
            .collect(),
        coefficients,
        std_errors,
        deviance,
        log_likelihood: ll,
        iterations,
        converged,
        deviance_trace: trace,
        covariance,
    })
}

/// Score vector `Xᵀ(y − m·p̂)` at a fit; zero at the maximum.
pub fn score(fit: &LogisticFit, successes: &[f64], trials: &[f64], x: &DMatrix<f64>) -> Vec<f64> {
    let beta = DVector::from_column_slice(&fit.coefficients);
    let eta = x * beta;
    (0..x.ncols())
        .map(|j| {
            (0..x.nrows())
                .map(|i| x[(i, j)] * (successes[i] - trials[i] * sigmoid(eta[i])))
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|j| format!("x{j}")).collect()
    }

    #[test]
    fn intercept_only_is_logit_of_prevalence() {
        let y: Vec<f64> = (0..100).map(|i| if i < 30 { 1.0 } else { 0.0 }).collect();
        let x = DMatrix::from_element(100, 1, 1.0);
        let fit = fit_logistic(&y, &x, &names(1)).unwrap();
        assert_abs_diff_eq!(fit.coefficients[0], (0.3f64 / 0.7).ln(), epsilon = 1e-10);
        assert_abs_diff_eq!(fit.coefficients[0], -0.8472978603872037, epsilon = 1e-10);
        assert!(fit.converged);
    }

    #[test]
    fn all_zero_response_is_separation() {
        let y = vec![0.0; 10];
        let x = DMatrix::from_element(10, 1, 1.0);
        assert!(matches!(fit_logistic(&y, &x, &names(1)), Err(Error::Separation { .. })));
    }

    #[test]
    fn separating_indicator_is_named() {
        let y = [1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0];
        let mut x = DMatrix::from_element(8, 2, 1.0);
        for (i, v) in [1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0].iter().enumerate() {
            x[(i, 1)] = *v;
        }
        match fit_logistic(&y, &x, &["(intercept)".into(), "group".into()]) {
            Err(Error::Separation { terms }) => assert_eq!(terms, vec!["group".to_string()]),
            other => panic!("expected separation, got {other:?}"),
        }
    }

    #[test]
    fn continuous_separation_detected_after_fit() {
        let y = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let mut x = DMatrix::from_element(6, 2, 1.0);
        for i in 0..6 {
            x[(i, 1)] = i as f64;
        }
        assert!(matches!(fit_logistic(&y, &x, &names(2)), Err(Error::Separation { .. })));
    }

    #[test]
    fn duplicate_column_is_rank_deficient() {
        let y = [0.0, 1.0, 0.0, 1.0, 1.0];
        let mut x = DMatrix::from_element(5, 3, 1.0);
        for i in 0..5 {
            x[(i, 1)] = i as f64;
            x[(i, 2)] = i as f64;
        }
        match fit_logistic(&y, &x, &names(3)) {
            Err(Error::RankDeficient { terms }) => assert_eq!(terms, vec!["x2".to_string()]),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn grouped_equals_ungrouped() {
        // 3/10 successes at x=0 and 6/10 at x=1.
        let mut y = Vec::new();
        let mut rows = Vec::new();
        for (x, k) in [(0.0, 3), (1.0, 6)] {
            for i in 0..10 {
                y.push(if i < k { 1.0 } else { 0.0 });
                rows.extend([1.0, x]);
            }
        }
        let xi = DMatrix::from_row_slice(20, 2, &rows);
        let a = fit_logistic(&y, &xi, &names(2)).unwrap();
        let xg = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        let b = fit_binomial(&[3.0, 6.0], &[10.0, 10.0], &xg, &names(2)).unwrap();
        for j in 0..2 {
            assert_abs_diff_eq!(a.coefficients[j], b.coefficients[j], epsilon = 1e-10);
            assert_abs_diff_eq!(a.std_errors[j], b.std_errors[j], epsilon = 1e-10);
        }
        // saturated two-group model: closed form
        assert_abs_diff_eq!(b.coefficients[0], (3.0f64 / 7.0).ln(), epsilon = 1e-10);
        assert_abs_diff_eq!(b.coefficients[1], (6.0f64 / 4.0).ln() - (3.0f64 / 7.0).ln(), epsilon = 1e-10);
    }
}
