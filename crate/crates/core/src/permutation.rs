//! Attribute-randomization tests on a fixed topology.
//!
//! Replicate `r` of a test seeded with `seed` draws from
//! `rng::stream(seed, Domain::Permutation, r)`, so results do not depend on
//! how replicates are scheduled across threads.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::stats::count_same;
use crate::graph::{AttributeColumn, ContactNetwork};
use crate::rng::{stream, Domain};
use crate::stats::normal_two_sided;

pub const DEFAULT_N_SIMS: usize = 1000;
/// Largest number of labelled nodes accepted by [`exact_permutation_pvalue`].
pub const EXACT_MAX_NODES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullMode {
    /// Permute observed labels across labelled nodes; category counts are kept.
    #[default]
    MarginalShuffle,
    /// Draw each label independently from the empirical category distribution.
    ProbabilityDraw,
}

impl std::str::FromStr for NullMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "marginal_shuffle" | "shuffle" => Ok(NullMode::MarginalShuffle),
            "probability_draw" | "draw" => Ok(NullMode::ProbabilityDraw),
            other => Err(Error::Config(format!("unknown null mode `{other}`"))),
        }
    }
}

impl NullMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NullMode::MarginalShuffle => "marginal_shuffle",
            NullMode::ProbabilityDraw => "probability_draw",
        }
    }
}

/// Five-number summary plus mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimsSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    pub sd: f64,
}

/// Linear-interpolation quantile of sorted data (Hyndman and Fan type 7).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl SimsSummary {
    pub fn from_values(values: &[f64]) -> SimsSummary {
        assert!(!values.is_empty(), "summary of an empty sample");
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        SimsSummary {
            min: sorted[0],
            q1: quantile_sorted(&sorted, 0.25),
            median: quantile_sorted(&sorted, 0.5),
            q3: quantile_sorted(&sorted, 0.75),
            max: sorted[sorted.len() - 1],
            mean,
            sd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationTestResult {
    pub layer: String,
    pub attribute: String,
    /// Level both endpoints must share, when the count is restricted.
    pub restrict: Option<String>,
    pub observed: u64,
    pub n_sims: usize,
    pub sims_summary: SimsSummary,
    pub z: f64,
    /// Two-sided normal-theory p-value of `observed` against the replicates.
    pub p_value: f64,
    /// Replicates with a count at least `observed`.
    pub n_at_least_observed: usize,
    /// `(1 + n_at_least_observed) / (n_sims + 1)`
    pub p_empirical: f64,
    pub seed: u64,
    pub mode: NullMode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermutationOptions {
    pub n_sims: usize,
    pub seed: u64,
    pub mode: NullMode,
}

impl Default for PermutationOptions {
    fn default() -> Self {
        PermutationOptions {
            n_sims: DEFAULT_N_SIMS,
            seed: 0,
            mode: NullMode::MarginalShuffle,
        }
    }
}

/// Relabel the non-missing entries of `codes`; missing entries stay missing.
pub fn randomize_attributes<R: Rng + ?Sized>(codes: &[Option<u32>], mode: NullMode, rng: &mut R) -> Vec<Option<u32>> {
    let mut labels: Vec<u32> = codes.iter().flatten().copied().collect();
    match mode {
        NullMode::MarginalShuffle => labels.shuffle(rng),
        NullMode::ProbabilityDraw => {
            let pool = labels.clone();
            for l in labels.iter_mut() {
                *l = pool[rng.random_range(0..pool.len())];
            }
        }
    }
    let mut next = labels.into_iter();
    codes
        .iter()
        .map(|c| c.map(|_| next.next().expect("one label per observed node")))
        .collect()
}

/// Same-attribute edge counts of `n_sims` relabelled replicates, in replicate order.
pub fn replicate_counts(
    network: &ContactNetwork,
    codes: &[Option<u32>],
    restrict: Option<u32>,
    opts: &PermutationOptions,
) -> Vec<u64> {
    (0..opts.n_sims as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(opts.seed, Domain::Permutation, r);
            let relabelled = randomize_attributes(codes, opts.mode, &mut rng);
            count_same(network, &relabelled, restrict) as u64
        })
        .collect()
}

/// Normal-theory two-sided p-value of `observed` against replicate mean and sd.
fn z_against(observed: f64, summary: &SimsSummary) -> Result<(f64, f64)> {
    if summary.sd == 0.0 {
        if observed == summary.mean {
            return Ok((0.0, 1.0));
        }
        return Err(Error::DegenerateNull(format!(
            "every replicate equals {} but the observed value is {observed}",
            summary.mean
        )));
    }
    let z = (observed - summary.mean) / summary.sd;
    Ok((z, normal_two_sided(z)))
}

/// Observed same-attribute edge count against randomized relabelings.
pub fn homophily_permutation_test(
    network: &ContactNetwork,
    column: &AttributeColumn,
    restrict: Option<&str>,
    opts: &PermutationOptions,
) -> Result<PermutationTestResult> {
    if column.len() != network.node_count() {
        return Err(Error::Input(format!(
            "attribute has {} values for {} nodes",
            column.len(),
            network.node_count()
        )));
    }
    if opts.n_sims < 2 {
        return Err(Error::Config("at least two replicates are required".into()));
    }
    let restrict_code = match restrict {
        Some(level) => Some(column.level_index(level).ok_or_else(|| {
            Error::Config(format!("`{level}` is not an observed level of {}", column.attribute))
        })?),
        None => None,
    };
    let eligible = crate::graph::eligible_edge_count(network, column);
    if eligible == 0 {
        return Err(Error::Undefined(format!(
            "no edge has both endpoints observed on {}",
            column.attribute
        )));
    }
    let observed = count_same(network, &column.codes, restrict_code) as u64;
    let sims = replicate_counts(network, &column.codes, restrict_code, opts);
    let values: Vec<f64> = sims.iter().map(|&v| v as f64).collect();
    let summary = SimsSummary::from_values(&values);
    let (z, p_value) = z_against(observed as f64, &summary)?;
    let n_at_least_observed = sims.iter().filter(|&&v| v >= observed).count();
    Ok(PermutationTestResult {
        layer: network.layer().as_str().to_string(),
        attribute: column.attribute.as_str().to_string(),
        restrict: restrict.map(String::from),
        observed,
        n_sims: opts.n_sims,
        sims_summary: summary,
        z,
        p_value,
        n_at_least_observed,
        p_empirical: (1 + n_at_least_observed) as f64 / (opts.n_sims + 1) as f64,
        seed: opts.seed,
        mode: opts.mode,
    })
}

/// Result of the category-conditional transmission test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryTransmissionResult {
    pub layer: String,
    pub trait_name: String,
    pub attribute: String,
    pub category: String,
    pub n_in_category: usize,
    pub n_positive_in_category: usize,
    pub within_category_edges: usize,
    /// Trait-positive pairs joined by an edge with both endpoints in the category.
    pub observed: u64,
    pub n_sims: usize,
    /// Trait shuffled over the whole network.
    pub null_network: SimsSummary,
    /// Trait shuffled only among category members.
    pub null_category: SimsSummary,
    /// Two-sample z comparing the two null means.
    pub z: f64,
    pub p_value: f64,
    pub p_value_one_sided: f64,
    /// Observed statistic against each null on its own, two-sided normal theory.
    pub p_null_network: f64,
    pub p_null_category: f64,
    /// Add-one upper tails against each null.
    pub p_empirical_network: f64,
    pub p_empirical_category: f64,
    pub seed: u64,
    pub mode: NullMode,
}

/// Both nulls use stream `(seed, r)` for replicate `r`, so when the category
/// covers every node the two null distributions coincide.
pub fn category_transmission_test(
    network: &ContactNetwork,
    trait_column: &AttributeColumn,
    positive_level: &str,
    in_category: &[bool],
    category_name: (&str, &str),
    opts: &PermutationOptions,
) -> Result<CategoryTransmissionResult> {
    let n = network.node_count();
    if trait_column.len() != n || in_category.len() != n {
        return Err(Error::Input("trait and category vectors must cover every node".into()));
    }
    if opts.n_sims < 2 {
        return Err(Error::Config("at least two replicates are required".into()));
    }
    let n_in_category = in_category.iter().filter(|&&b| b).count();
    if n_in_category == 0 {
        return Err(Error::Input(format!("category {}={} is empty", category_name.0, category_name.1)));
    }
    let pos = trait_column.level_index(positive_level);
    let within_category_edges = network
        .edges()
        .iter()
        .filter(|&&(a, b)| in_category[a as usize] && in_category[b as usize])
        .count();
    if within_category_edges == 0 {
        return Err(Error::Undefined(format!(
            "no edge joins two members of {}={}",
            category_name.0, category_name.1
        )));
    }
    let statistic = |codes: &[Option<u32>]| -> u64 {
        let Some(p) = pos else { return 0 };
        network
            .edges()
            .iter()
            .filter(|&&(a, b)| {
                let (a, b) = (a as usize, b as usize);
                in_category[a] && in_category[b] && codes[a] == Some(p) && codes[b] == Some(p)
            })
            .count() as u64
    };
    let observed = statistic(&trait_column.codes);
    let n_positive_in_category = (0..n)
        .filter(|&i| in_category[i] && pos.is_some() && trait_column.codes[i] == pos)
        .count();
    let member_codes: Vec<Option<u32>> = (0..n)
        .filter(|&i| in_category[i])
        .map(|i| trait_column.codes[i])
        .collect();

    let pairs: Vec<(u64, u64)> = (0..opts.n_sims as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(opts.seed, Domain::Permutation, r);
            let whole = randomize_attributes(&trait_column.codes, opts.mode, &mut rng);
            let mut rng = stream(opts.seed, Domain::Permutation, r);
            let shuffled_members = randomize_attributes(&member_codes, opts.mode, &mut rng);
            let mut within = trait_column.codes.clone();
            let mut it = shuffled_members.into_iter();
            for (i, c) in within.iter_mut().enumerate() {
                if in_category[i] {
                    *c = it.next().expect("one code per member");
                }
            }
            (statistic(&whole), statistic(&within))
        })
        .collect();
    let a: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
    let b: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
    let sa = SimsSummary::from_values(&a);
    let sb = SimsSummary::from_values(&b);
    let ns = opts.n_sims as f64;
    let se = ((sa.sd * sa.sd + sb.sd * sb.sd) / ns).sqrt();
    let (z, p_value) = if se == 0.0 {
        if sa.mean == sb.mean {
            (0.0, 1.0)
        } else {
            return Err(Error::DegenerateNull("both null distributions are constant and differ".into()));
        }
    } else {
        let z = (sb.mean - sa.mean) / se;
        (z, normal_two_sided(z))
    };
    // upper tail: the category-only null exceeds the whole-network null
    let p_value_one_sided = if z > 0.0 { p_value / 2.0 } else { 1.0 - p_value / 2.0 };
    let obs = observed as f64;
    let p_or_one = |s: &SimsSummary| z_against(obs, s).map(|(_, p)| p).unwrap_or(0.0);
    let tail = |v: &[(u64, u64)], pick: fn(&(u64, u64)) -> u64| {
        (1 + v.iter().filter(|p| pick(p) >= observed).count()) as f64 / (ns + 1.0)
    };
    Ok(CategoryTransmissionResult {
        layer: network.layer().as_str().to_string(),
        trait_name: trait_column.attribute.as_str().to_string(),
        attribute: category_name.0.to_string(),
        category: category_name.1.to_string(),
        n_in_category,
        n_positive_in_category,
        within_category_edges,
        observed,
        n_sims: opts.n_sims,
        null_network: sa,
        null_category: sb,
        z,
        p_value,
        p_value_one_sided,
        p_null_network: p_or_one(&sa),
        p_null_category: p_or_one(&sb),
        p_empirical_network: tail(&pairs, |p| p.0),
        p_empirical_category: tail(&pairs, |p| p.1),
        seed: opts.seed,
        mode: opts.mode,
    })
}

/// Exact distribution of the same-attribute count over all distinct arrangements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactPermutationResult {
    pub observed: u64,
    pub n_arrangements: u64,
    /// `P(T ≤ observed)`
    pub p_lower: f64,
    /// `P(T ≥ observed)`
    pub p_upper: f64,
    /// `min(1, 2·min(p_lower, p_upper))`
    pub p_value: f64,
}

/// Lexicographic successor of a multiset permutation; false after the last one.
fn next_permutation(v: &mut [u32]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

pub fn exact_permutation_pvalue(network: &ContactNetwork, column: &AttributeColumn) -> Result<ExactPermutationResult> {
    if column.len() != network.node_count() {
        return Err(Error::Input("attribute length does not match the network".into()));
    }
    let slots: Vec<usize> = (0..column.len()).filter(|&i| column.codes[i].is_some()).collect();
    if slots.len() > EXACT_MAX_NODES {
        return Err(Error::Size(format!(
            "exact enumeration supports at most {EXACT_MAX_NODES} labelled nodes, got {}",
            slots.len()
        )));
    }
    let observed = count_same(network, &column.codes, None) as u64;
    let mut labels: Vec<u32> = slots.iter().map(|&i| column.codes[i].unwrap()).collect();
    labels.sort_unstable();
    let mut codes = column.codes.clone();
    let (mut total, mut le, mut ge) = (0u64, 0u64, 0u64);
    loop {
        for (k, &i) in slots.iter().enumerate() {
            codes[i] = Some(labels[k]);
        }
        let t = count_same(network, &codes, None) as u64;
        total += 1;
        if t <= observed {
            le += 1;
        }
        if t >= observed {
            ge += 1;
        }
        if !next_permutation(&mut labels) {
            break;
        }
    }
    let p_lower = le as f64 / total as f64;
    let p_upper = ge as f64 / total as f64;
    Ok(ExactPermutationResult {
        observed,
        n_arrangements: total,
        p_lower,
        p_upper,
        p_value: (2.0 * p_lower.min(p_upper)).min(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Attribute, Layer};

    fn column(codes: Vec<Option<u32>>, levels: usize) -> AttributeColumn {
        AttributeColumn {
            attribute: Attribute::CarriageDirect,
            levels: (0..levels).map(|l| format!("l{l}")).collect(),
            codes,
        }
    }

    #[test]
    fn shuffle_keeps_counts_and_missing() {
        let codes = vec![Some(0), None, Some(1), Some(1), None, Some(2), Some(0)];
        let mut rng = stream(9, Domain::Permutation, 0);
        let out = randomize_attributes(&codes, NullMode::MarginalShuffle, &mut rng);
        for (a, b) in codes.iter().zip(&out) {
            assert_eq!(a.is_none(), b.is_none());
        }
        let count = |v: &[Option<u32>], l| v.iter().filter(|c| **c == Some(l)).count();
        for l in 0..3 {
            assert_eq!(count(&codes, l), count(&out, l));
        }
    }

    #[test]
    fn single_category_is_fixed() {
        let codes = vec![Some(0); 6];
        for mode in [NullMode::MarginalShuffle, NullMode::ProbabilityDraw] {
            let mut rng = stream(1, Domain::Permutation, 3);
            assert_eq!(randomize_attributes(&codes, mode, &mut rng), codes);
        }
    }

    #[test]
    fn type7_quantiles() {
        let s = SimsSummary::from_values(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!((s.q1, s.median, s.q3), (1.75, 2.5, 3.25));
        assert!((s.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn next_permutation_counts_multiset() {
        let mut v = vec![0, 0, 1, 1];
        let mut n = 1;
        while next_permutation(&mut v) {
            n += 1;
        }
        assert_eq!(n, 6);
    }

    #[test]
    fn exact_k2_and_path() {
        let k2 = ContactNetwork::from_edges(2, Layer::Overall, [(0, 1)]).unwrap();
        let r = exact_permutation_pvalue(&k2, &column(vec![Some(0), Some(1)], 2)).unwrap();
        assert_eq!((r.observed, r.n_arrangements, r.p_value), (0, 2, 1.0));

        let path = ContactNetwork::from_edges(3, Layer::Overall, [(0, 1), (1, 2)]).unwrap();
        let r = exact_permutation_pvalue(&path, &column(vec![Some(0), Some(0), Some(1)], 2)).unwrap();
        assert_eq!((r.observed, r.n_arrangements), (1, 3));
        assert!((r.p_upper - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn exact_star() {
        // center +, leaves {+,-,-}; whatever the center holds, exactly one leaf matches it
        let star = ContactNetwork::from_edges(4, Layer::Overall, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let r = exact_permutation_pvalue(&star, &column(vec![Some(0), Some(0), Some(1), Some(1)], 2)).unwrap();
        assert_eq!((r.observed, r.n_arrangements), (1, 6));
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn too_many_nodes_for_exact() {
        let net = ContactNetwork::empty(13, Layer::Overall);
        let col = column((0..13).map(|i| Some(i % 2)).collect(), 2);
        assert!(matches!(exact_permutation_pvalue(&net, &col), Err(Error::Size(_))));
    }

    #[test]
    fn constant_null_matching_observed_gives_one() {
        let net = ContactNetwork::from_edges(3, Layer::Overall, [(0, 1)]).unwrap();
        let col = column(vec![Some(0), Some(0), Some(0)], 1);
        let r = homophily_permutation_test(&net, &col, None, &PermutationOptions { n_sims: 20, seed: 1, mode: NullMode::MarginalShuffle }).unwrap();
        assert_eq!(r.p_value, 1.0);
    }
}
