//! Carrier status against friends' carrier status, and per-category relative
//! risks of exposure.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{positive_friend_counts, Attribute, Cohort, ContactNetwork, Trait};
use crate::logistic::{fit_logistic, sigmoid, LogisticFit, Z_95};
use crate::permutation::SimsSummary;
use crate::stats::normal_two_sided;

pub const SLOPE_TERM: &str = "positive_friends";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalEffect {
    pub estimate: f64,
    pub std_error: f64,
    pub ci95: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub k: usize,
    pub p_hat: f64,
    pub n_positive: usize,
    pub n_negative: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriendExposureResult {
    pub layer: String,
    pub n: usize,
    pub fit: LogisticFit,
    /// Mean over participants of `p̂(k+1) − p̂(k)` at their observed `k`.
    pub average_marginal_effect: MarginalEffect,
    /// `p̂(k̄+1) − p̂(k̄)` at the mean count.
    pub effect_at_mean: MarginalEffect,
    pub curve: Vec<CurvePoint>,
    pub k_positive: Option<SimsSummary>,
    pub k_negative: Option<SimsSummary>,
}

/// Discrete-difference effect averaged over `ks`, with a delta-method SE.
fn discrete_effect(fit: &LogisticFit, ks: &[f64]) -> MarginalEffect {
    let (a, b) = (fit.coefficients[0], fit.coefficients[1]);
    let mut est = 0.0;
    let mut grad = [0.0; 2];
    for &k in ks {
        let p0 = sigmoid(a + b * k);
        let p1 = sigmoid(a + b * (k + 1.0));
        est += p1 - p0;
        let (d0, d1) = (p0 * (1.0 - p0), p1 * (1.0 - p1));
        grad[0] += d1 - d0;
        grad[1] += d1 * (k + 1.0) - d0 * k;
    }
    let m = ks.len() as f64;
    est /= m;
    let g = DVector::from_vec(vec![grad[0] / m, grad[1] / m]);
    let var = (g.transpose() * &fit.covariance * &g)[(0, 0)];
    let se = var.max(0.0).sqrt();
    MarginalEffect {
        estimate: est,
        std_error: se,
        ci95: [est - Z_95 * se, est + Z_95 * se],
    }
}

/// Univariable logistic regression of the trait on the number of
/// trait-positive neighbours.
pub fn carrier_vs_positive_friends(network: &ContactNetwork, positive: &[bool]) -> Result<FriendExposureResult> {
    let n = network.node_count();
    if positive.len() != n {
        return Err(Error::Input("trait must be defined on every node".into()));
    }
    let k = positive_friend_counts(network, positive);
    if k.iter().all(|&v| v == k[0]) {
        return Err(Error::Undefined("positive-friend count is constant".into()));
    }
    let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { k[i] as f64 });
    let y: Vec<f64> = positive.iter().map(|&p| p as u8 as f64).collect();
    let fit = fit_logistic(&y, &x, &["(intercept)".into(), SLOPE_TERM.into()])?;
    let ks: Vec<f64> = k.iter().map(|&v| v as f64).collect();
    let ame = discrete_effect(&fit, &ks);
    let k_mean = ks.iter().sum::<f64>() / n as f64;
    let at_mean = discrete_effect(&fit, &[k_mean]);
    let kmax = *k.iter().max().unwrap();
    let curve = (0..=kmax)
        .map(|kk| CurvePoint {
            k: kk,
            p_hat: sigmoid(fit.coefficients[0] + fit.coefficients[1] * kk as f64),
            n_positive: (0..n).filter(|&i| k[i] == kk && positive[i]).count(),
            n_negative: (0..n).filter(|&i| k[i] == kk && !positive[i]).count(),
        })
        .collect();
    let split = |want: bool| {
        let v: Vec<f64> = (0..n).filter(|&i| positive[i] == want).map(|i| ks[i]).collect();
        (!v.is_empty()).then(|| SimsSummary::from_values(&v))
    };
    Ok(FriendExposureResult {
        layer: network.layer().as_str().to_string(),
        n,
        average_marginal_effect: ame,
        effect_at_mean: at_mean,
        curve,
        k_positive: split(true),
        k_negative: split(false),
        fit,
    })
}

/// What counts as exposure when comparing categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExposureDefinition {
    /// At least one trait-positive friend.
    #[default]
    AnyPositiveFriend,
    /// Trait-positive friend count above the cohort median.
    AboveMedianPositiveFriends,
}

impl ExposureDefinition {
    pub fn as_str(self) -> &'static str {
        match self {
            ExposureDefinition::AnyPositiveFriend => "any_positive_friend",
            ExposureDefinition::AboveMedianPositiveFriends => "above_median_positive_friends",
        }
    }

    pub fn indicators(self, counts: &[usize]) -> Vec<bool> {
        match self {
            ExposureDefinition::AnyPositiveFriend => counts.iter().map(|&c| c >= 1).collect(),
            ExposureDefinition::AboveMedianPositiveFriends => {
                let mut s: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
                s.sort_by(f64::total_cmp);
                let med = crate::permutation::quantile_sorted(&s, 0.5);
                counts.iter().map(|&c| c as f64 > med).collect()
            }
        }
    }
}

impl std::str::FromStr for ExposureDefinition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "any_positive_friend" | "any" => Ok(ExposureDefinition::AnyPositiveFriend),
            "above_median_positive_friends" | "above_median" => Ok(ExposureDefinition::AboveMedianPositiveFriends),
            other => Err(Error::Config(format!("unknown exposure definition `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeRiskRow {
    pub category: String,
    pub n: usize,
    pub n_exposed: usize,
    pub proportion_exposed: f64,
    pub is_reference: bool,
    pub relative_risk: f64,
    pub ci95: Option<[f64; 2]>,
    /// Two-sided z test of log RR = 0 with the delta-method SE, consistent with `ci95`.
    pub p_value: Option<f64>,
    /// Wald p-value of the category coefficient on the log-odds scale.
    pub logit_p_value: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeRiskTable {
    pub layer: String,
    pub attribute: String,
    pub trait_name: String,
    pub exposure_definition: ExposureDefinition,
    pub reference: String,
    pub n: usize,
    pub rows: Vec<RelativeRiskRow>,
    pub warnings: Vec<String>,
}

/// Exposure risk per category relative to `reference`, from a univariable
/// logistic regression on category dummies.
pub fn category_relative_risk(
    cohort: &Cohort,
    network: &ContactNetwork,
    attribute: Attribute,
    trait_: Trait,
    exposure: ExposureDefinition,
    reference: Option<&str>,
) -> Result<RelativeRiskTable> {
    if network.node_count() != cohort.len() {
        return Err(Error::Input("network and cohort sizes differ".into()));
    }
    let column = cohort.column(attribute)?;
    let positive = cohort.positives(trait_);
    let counts = positive_friend_counts(network, &positive);
    let exposed = exposure.indicators(&counts);
    let mut warnings = Vec::new();
    if let Some(declared) = attribute.declared_levels() {
        for d in declared {
            if column.level_index(d).is_none() {
                warnings.push(format!("category {d} is empty and was excluded"));
            }
        }
    }
    let reference = reference
        .or_else(|| attribute.default_reference())
        .filter(|r| column.level_index(r).is_some())
        .or_else(|| column.levels.first().map(String::as_str))
        .ok_or_else(|| Error::Undefined(format!("{attribute} has no observed levels")))?
        .to_string();
    let ref_code = column.level_index(&reference).unwrap();

    let stats: Vec<(usize, usize)> = (0..column.levels.len() as u32)
        .map(|c| {
            let members: Vec<usize> = (0..cohort.len()).filter(|&i| column.codes[i] == Some(c)).collect();
            (members.len(), members.iter().filter(|&&i| exposed[i]).count())
        })
        .collect();

    // Categories whose exposure is all-or-nothing have no finite log-odds;
    // they are reported without an interval and left out of the fit.
    let separated: Vec<bool> = stats.iter().map(|&(n, e)| e == 0 || e == n).collect();
    if separated[ref_code as usize] {
        return Err(Error::Separation {
            terms: vec![format!("{attribute}={reference} (reference)")],
        });
    }
    let fitted: Vec<u32> = (0..column.levels.len() as u32)
        .filter(|&c| c != ref_code && !separated[c as usize])
        .collect();
    let rows_idx: Vec<usize> = (0..cohort.len())
        .filter(|&i| matches!(column.codes[i], Some(c) if c == ref_code || fitted.contains(&c)))
        .collect();
    let mut names = vec!["(intercept)".to_string()];
    names.extend(fitted.iter().map(|&c| format!("{attribute}={}", column.levels[c as usize])));
    let x = DMatrix::from_fn(rows_idx.len(), 1 + fitted.len(), |r, j| {
        if j == 0 {
            1.0
        } else {
            (column.codes[rows_idx[r]] == Some(fitted[j - 1])) as u8 as f64
        }
    });
    let y: Vec<f64> = rows_idx.iter().map(|&i| exposed[i] as u8 as f64).collect();
    let fit = fit_logistic(&y, &x, &names)?;
    let a = fit.coefficients[0];
    let p_ref = sigmoid(a);

    let mut rows = Vec::new();
    for (c, level) in column.levels.iter().enumerate() {
        let (n, e) = stats[c];
        let mut row = RelativeRiskRow {
            category: level.clone(),
            n,
            n_exposed: e,
            proportion_exposed: e as f64 / n as f64,
            is_reference: c as u32 == ref_code,
            relative_risk: 1.0,
            ci95: None,
            p_value: None,
            logit_p_value: None,
            note: None,
        };
        if row.is_reference {
            rows.push(row);
            continue;
        }
        if separated[c] {
            row.relative_risk = row.proportion_exposed / p_ref;
            row.note = Some("exposure is all-or-none in this category; no interval".into());
            warnings.push(format!("category {level} is separated; interval omitted"));
            rows.push(row);
            continue;
        }
        let j = 1 + fitted.iter().position(|&f| f == c as u32).unwrap();
        let b = fit.coefficients[j];
        let p_c = sigmoid(a + b);
        let log_rr = p_c.ln() - p_ref.ln();
        // gradient of log RR in (intercept, coefficient)
        let g0 = p_ref - p_c;
        let g1 = 1.0 - p_c;
        let cov = &fit.covariance;
        let var = g0 * g0 * cov[(0, 0)] + 2.0 * g0 * g1 * cov[(0, j)] + g1 * g1 * cov[(j, j)];
        let se = var.sqrt();
        row.relative_risk = log_rr.exp();
        row.ci95 = Some([(log_rr - Z_95 * se).exp(), (log_rr + Z_95 * se).exp()]);
        row.p_value = Some(normal_two_sided(log_rr / se));
        row.logit_p_value = Some(fit.wald_p_values[j]);
        rows.push(row);
    }
    Ok(RelativeRiskTable {
        layer: network.layer().as_str().to_string(),
        attribute: attribute.as_str().to_string(),
        trait_name: trait_.as_str().to_string(),
        exposure_definition: exposure,
        reference,
        n: stats.iter().map(|s| s.0).sum(),
        rows,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Carriage, Layer, Participant, Sex};

    #[test]
    fn effects_positive_and_bounded_by_quarter_slope() {
        let net = ContactNetwork::from_edges(8, Layer::Overall, [(0, 1), (0, 2), (1, 2), (3, 4), (5, 6), (2, 5), (6, 7)]).unwrap();
        let pos = [true, true, false, false, true, false, true, false];
        let r = carrier_vs_positive_friends(&net, &pos).unwrap();
        let b = r.fit.coefficients[1];
        let ame = r.average_marginal_effect.estimate;
        assert_eq!(ame.signum(), b.signum());
        assert!(ame.abs() <= b.abs() / 4.0);
        for w in r.curve.windows(2) {
            assert_eq!((w[1].p_hat - w[0].p_hat).signum(), b.signum());
        }
    }

    #[test]
    fn constant_count_rejected() {
        let net = ContactNetwork::empty(4, Layer::Overall);
        assert!(carrier_vs_positive_friends(&net, &[true, false, true, false]).is_err());
    }

    #[test]
    fn reference_rr_is_one_and_rr_is_ratio_of_proportions() {
        // 6 females, 6 males; 0-1-2-...-11 path plus a few chords
        let mut ps = Vec::new();
        for i in 0..12 {
            let c = if i % 3 == 0 { Carriage::Positive } else { Carriage::Negative };
            let mut p = Participant::new(format!("p{i}"), c, c);
            p.sex = Some(if i < 6 { Sex::Female } else { Sex::Male });
            ps.push(p);
        }
        let cohort = Cohort::new(ps).unwrap();
        let edges = [(0, 1), (1, 2), (3, 4), (4, 5), (6, 7), (7, 8), (9, 10), (10, 11), (2, 3), (8, 2)];
        let net = ContactNetwork::from_edges(12, Layer::Overall, edges).unwrap();
        let t = category_relative_risk(&cohort, &net, Attribute::Sex, Trait::Direct, ExposureDefinition::AnyPositiveFriend, None).unwrap();
        let f = &t.rows[0];
        let m = &t.rows[1];
        assert!(f.is_reference && f.relative_risk == 1.0);
        assert!((m.relative_risk - m.proportion_exposed / f.proportion_exposed).abs() < 1e-8);
    }
}
