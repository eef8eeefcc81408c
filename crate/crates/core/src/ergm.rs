//! Dyad-independent exponential random graph model with `edges` and
//! `match(attribute)` terms.
//!
//! With only dyad-independent terms the likelihood factorizes over unordered
//! pairs, so the MLE is a logistic regression on dyads. Dyads sharing a match
//! pattern are collapsed into one binomial row before fitting; the estimates
//! are identical to the per-dyad fit.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{homophily_fraction, AttributeColumn, ContactNetwork};
use crate::logistic::{fit_binomial, score};

/// Per-dyad design: response and one match indicator per attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadDesign {
    pub attributes: Vec<String>,
    pub pairs: Vec<(u32, u32)>,
    pub response: Vec<u8>,
    /// `matches[k][d]` is `None` when either endpoint of dyad `d` lacks attribute `k`.
    pub matches: Vec<Vec<Option<bool>>>,
}

impl DyadDesign {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Design matrix `[1, match_1, …]` and responses over dyads with every
    /// attribute observed.
    pub fn complete_cases(&self) -> (DMatrix<f64>, Vec<f64>) {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&d| self.matches.iter().all(|m| m[d].is_some()))
            .collect();
        let p = 1 + self.matches.len();
        let x = DMatrix::from_fn(keep.len(), p, |r, c| {
            if c == 0 {
                1.0
            } else {
                self.matches[c - 1][keep[r]].map_or(0.0, |b| b as u8 as f64)
            }
        });
        let y = keep.iter().map(|&d| self.response[d] as f64).collect();
        (x, y)
    }
}

fn check_columns(network: &ContactNetwork, columns: &[AttributeColumn]) -> Result<()> {
    for c in columns {
        if c.len() != network.node_count() {
            return Err(Error::Input(format!(
                "{} has {} values for {} nodes",
                c.attribute,
                c.len(),
                network.node_count()
            )));
        }
    }
    Ok(())
}

fn matched(column: &AttributeColumn, i: usize, j: usize) -> Option<bool> {
    match (column.codes[i], column.codes[j]) {
        (Some(a), Some(b)) => Some(a == b),
        _ => None,
    }
}

/// One row per unordered pair `i < j`, in lexicographic order.
pub fn enumerate_dyads(network: &ContactNetwork, columns: &[AttributeColumn]) -> Result<DyadDesign> {
    check_columns(network, columns)?;
    let n = network.node_count();
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    let mut response = Vec::with_capacity(pairs.capacity());
    let mut matches = vec![Vec::with_capacity(pairs.capacity()); columns.len()];
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((i as u32, j as u32));
            response.push(network.has_edge(i, j) as u8);
            for (k, c) in columns.iter().enumerate() {
                matches[k].push(matched(c, i, j));
            }
        }
    }
    Ok(DyadDesign {
        attributes: columns.iter().map(|c| c.attribute.as_str().to_string()).collect(),
        pairs,
        response,
        matches,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgmTerm {
    pub name: String,
    /// Percentage of observed edges joining equal values; absent for `edges`.
    pub homophily_pct: Option<f64>,
    pub estimate: f64,
    pub std_error: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicErgmFit {
    pub layer: String,
    pub terms: Vec<ErgmTerm>,
    pub n_nodes: usize,
    pub n_dyads: u64,
    pub n_edges: u64,
    pub log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Euclidean norm of the score at the estimate.
    pub gradient_norm: f64,
}

impl DyadicErgmFit {
    pub fn term(&self, name: &str) -> Option<&ErgmTerm> {
        self.terms.iter().find(|t| t.name == name)
    }
}

pub fn match_term_name(attribute: &str) -> String {
    format!("match({attribute})")
}

/// Counts of (edges, dyads) per match pattern over complete dyads.
fn pattern_counts(network: &ContactNetwork, columns: &[AttributeColumn]) -> BTreeMap<u32, (u64, u64)> {
    let n = network.node_count();
    (0..n)
        .into_par_iter()
        .fold(BTreeMap::new, |mut acc: BTreeMap<u32, (u64, u64)>, i| {
            'pair: for j in i + 1..n {
                let mut key = 0u32;
                for (k, c) in columns.iter().enumerate() {
                    match matched(c, i, j) {
                        Some(true) => key |= 1 << k,
                        Some(false) => {}
                        None => continue 'pair,
                    }
                }
                let e = acc.entry(key).or_default();
                e.0 += network.has_edge(i, j) as u64;
                e.1 += 1;
            }
            acc
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (k, (e, d)) in b {
                let slot = a.entry(k).or_default();
                slot.0 += e;
                slot.1 += d;
            }
            a
        })
}

/// Joint fit of `edges + Σ match(attribute)` over complete dyads.
pub fn fit_dyadic_ergm(network: &ContactNetwork, columns: &[AttributeColumn]) -> Result<DyadicErgmFit> {
    check_columns(network, columns)?;
    if network.node_count() < 2 {
        return Err(Error::Input("at least two nodes are required".into()));
    }
    if columns.len() > 31 {
        return Err(Error::Unsupported("more than 31 match terms".into()));
    }
    let counts = pattern_counts(network, columns);
    let p = 1 + columns.len();
    let rows: Vec<(&u32, &(u64, u64))> = counts.iter().collect();
    let x = DMatrix::from_fn(rows.len(), p, |r, c| {
        if c == 0 {
            1.0
        } else {
            ((rows[r].0 >> (c - 1)) & 1) as f64
        }
    });
    let successes: Vec<f64> = rows.iter().map(|r| r.1 .0 as f64).collect();
    let trials: Vec<f64> = rows.iter().map(|r| r.1 .1 as f64).collect();
    let n_dyads = trials.iter().sum::<f64>() as u64;
    let n_edges = successes.iter().sum::<f64>() as u64;
    if n_dyads == 0 {
        return Err(Error::Undefined("no dyad has every attribute observed".into()));
    }
    let mut names = vec!["edges".to_string()];
    names.extend(columns.iter().map(|c| match_term_name(c.attribute.as_str())));
    let fit = fit_binomial(&successes, &trials, &x, &names)?;
    let g = score(&fit, &successes, &trials, &x);
    let mut terms = Vec::with_capacity(p);
    for j in 0..p {
        terms.push(ErgmTerm {
            name: names[j].clone(),
            homophily_pct: if j == 0 {
                None
            } else {
                homophily_fraction(network, &columns[j - 1]).ok()
            },
            estimate: fit.coefficients[j],
            std_error: fit.std_errors[j],
            p_value: fit.wald_p_values[j],
        });
    }
    Ok(DyadicErgmFit {
        layer: network.layer().as_str().to_string(),
        terms,
        n_nodes: network.node_count(),
        n_dyads,
        n_edges,
        log_likelihood: fit.log_likelihood,
        converged: fit.converged,
        iterations: fit.iterations,
        gradient_norm: g.iter().map(|v| v * v).sum::<f64>().sqrt(),
    })
}

/// One `edges + match(attribute)` model per attribute.
pub fn fit_dyadic_ergm_separate(network: &ContactNetwork, columns: &[AttributeColumn]) -> Result<Vec<DyadicErgmFit>> {
    columns
        .iter()
        .map(|c| fit_dyadic_ergm(network, std::slice::from_ref(c)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Attribute, Layer};
    use crate::logistic::fit_logistic;

    fn col(codes: Vec<Option<u32>>) -> AttributeColumn {
        AttributeColumn {
            attribute: Attribute::Sex,
            levels: vec!["female".into(), "male".into()],
            codes,
        }
    }

    #[test]
    fn three_nodes_one_edge() {
        let net = ContactNetwork::from_edges(3, Layer::Overall, [(0, 1)]).unwrap();
        let d = enumerate_dyads(&net, &[col(vec![Some(0), Some(0), Some(1)])]).unwrap();
        assert_eq!(d.response, vec![1, 0, 0]);
        assert_eq!(d.matches[0], vec![Some(true), Some(false), Some(false)]);
    }

    #[test]
    fn grouped_fit_matches_dyad_fit() {
        let net = ContactNetwork::from_edges(8, Layer::Overall, [(0, 1), (0, 2), (1, 2), (3, 4), (2, 5), (6, 7), (1, 6)]).unwrap();
        let c = col(vec![Some(0), Some(0), Some(0), Some(1), Some(1), None, Some(1), Some(0)]);
        let fit = fit_dyadic_ergm(&net, std::slice::from_ref(&c)).unwrap();
        let d = enumerate_dyads(&net, std::slice::from_ref(&c)).unwrap();
        let (x, y) = d.complete_cases();
        let direct = fit_logistic(&y, &x, &["edges".into(), "match(sex)".into()]).unwrap();
        assert_eq!(fit.n_dyads as usize, y.len());
        for j in 0..2 {
            assert!((fit.terms[j].estimate - direct.coefficients[j]).abs() < 1e-8);
            assert!((fit.terms[j].std_error - direct.std_errors[j]).abs() < 1e-8);
        }
        assert!(fit.gradient_norm < 1e-6);
    }
}
