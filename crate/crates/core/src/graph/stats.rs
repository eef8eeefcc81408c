//! Structural statistics on a [`ContactNetwork`].

use std::collections::HashSet;

use super::network::{ContactNetwork, Layer, Nomination};
use super::participant::AttributeColumn;
use crate::error::{Error, Result};

/// Number of distinct nominators naming each node, counting only nominations
/// that belong to `layer`.
pub fn popularity_all(n_nodes: usize, nominations: &[Nomination], layer: Layer) -> Vec<u32> {
    let pairs: HashSet<(usize, usize)> = nominations
        .iter()
        .filter(|n| n.contexts.includes(layer))
        .map(|n| (n.from, n.to))
        .collect();
    let mut pop = vec![0u32; n_nodes];
    for (_, to) in pairs {
        pop[to] += 1;
    }
    pop
}

pub fn popularity(n_nodes: usize, nominations: &[Nomination], layer: Layer, node: usize) -> Result<u32> {
    if node >= n_nodes {
        return Err(Error::UnknownId(format!("node index {node}")));
    }
    Ok(popularity_all(n_nodes, nominations, layer)[node])
}

fn check_column(network: &ContactNetwork, column: &AttributeColumn) {
    assert_eq!(
        column.len(),
        network.node_count(),
        "attribute column must cover every node"
    );
}

/// Edges whose two endpoints share a non-missing value, and edges with both
/// endpoints non-missing.
fn matching_edges(network: &ContactNetwork, codes: &[Option<u32>]) -> (usize, usize) {
    let mut same = 0;
    let mut eligible = 0;
    for &(a, b) in network.edges() {
        if let (Some(x), Some(y)) = (codes[a as usize], codes[b as usize]) {
            eligible += 1;
            if x == y {
                same += 1;
            }
        }
    }
    (same, eligible)
}

/// Number of edges whose endpoints both have a non-missing value.
pub fn eligible_edge_count(network: &ContactNetwork, column: &AttributeColumn) -> usize {
    check_column(network, column);
    matching_edges(network, &column.codes).1
}

/// Percentage of eligible edges (both endpoints non-missing) joining equal values.
pub fn homophily_fraction(network: &ContactNetwork, column: &AttributeColumn) -> Result<f64> {
    check_column(network, column);
    let (same, eligible) = matching_edges(network, &column.codes);
    if eligible == 0 {
        return Err(Error::Undefined(format!(
            "no edge has both endpoints observed on {}",
            column.attribute
        )));
    }
    Ok(100.0 * same as f64 / eligible as f64)
}

/// Edges joining equal non-missing values; with `restrict`, both endpoints
/// must carry that level.
pub fn same_attribute_edge_count(
    network: &ContactNetwork,
    column: &AttributeColumn,
    restrict: Option<u32>,
) -> usize {
    check_column(network, column);
    count_same(network, &column.codes, restrict)
}

pub(crate) fn count_same(network: &ContactNetwork, codes: &[Option<u32>], restrict: Option<u32>) -> usize {
    network
        .edges()
        .iter()
        .filter(|&&(a, b)| match (codes[a as usize], codes[b as usize]) {
            (Some(x), Some(y)) => x == y && restrict.is_none_or(|r| r == x),
            _ => false,
        })
        .count()
}

/// Neighbors of `node` flagged positive.
pub fn positive_friend_count(network: &ContactNetwork, positive: &[bool], node: usize) -> Result<usize> {
    if node >= network.node_count() {
        return Err(Error::UnknownId(format!("node index {node}")));
    }
    Ok(network
        .neighbors(node)
        .iter()
        .filter(|&&j| positive[j as usize])
        .count())
}

pub fn positive_friend_counts(network: &ContactNetwork, positive: &[bool]) -> Vec<usize> {
    (0..network.node_count())
        .map(|i| {
            network
                .neighbors(i)
                .iter()
                .filter(|&&j| positive[j as usize])
                .count()
        })
        .collect()
}

/// Newman's categorical assortativity coefficient over eligible edges.
pub fn attribute_assortativity(network: &ContactNetwork, column: &AttributeColumn) -> Result<f64> {
    check_column(network, column);
    let k = column.levels.len();
    let mut mix = vec![0.0f64; k * k];
    let mut total = 0.0;
    for &(a, b) in network.edges() {
        if let (Some(x), Some(y)) = (column.codes[a as usize], column.codes[b as usize]) {
            let (x, y) = (x as usize, y as usize);
            mix[x * k + y] += 1.0;
            mix[y * k + x] += 1.0;
            total += 2.0;
        }
    }
    if total == 0.0 {
        return Err(Error::Undefined("no eligible edges for assortativity".into()));
    }
    let trace: f64 = (0..k).map(|i| mix[i * k + i] / total).sum();
    let sum_ab: f64 = (0..k)
        .map(|i| {
            let row: f64 = (0..k).map(|j| mix[i * k + j]).sum::<f64>() / total;
            row * row
        })
        .sum();
    if (1.0 - sum_ab).abs() < 1e-15 {
        return Err(Error::Undefined("single observed category; assortativity undefined".into()));
    }
    Ok((trace - sum_ab) / (1.0 - sum_ab))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::network::Contexts;
    use crate::graph::participant::Attribute;
    use proptest::prelude::*;

    fn column(labels: &[Option<&str>]) -> AttributeColumn {
        let owned: Vec<Option<String>> = labels.iter().map(|l| l.map(String::from)).collect();
        AttributeColumn::from_labels(Attribute::School, &owned, None)
    }

    fn graph(n: usize, edges: &[(usize, usize)]) -> ContactNetwork {
        ContactNetwork::from_edges(n, Layer::Overall, edges.iter().copied()).unwrap()
    }

    #[test]
    fn popularity_counts_distinct_nominators() {
        let noms = [
            Nomination { from: 1, to: 0, contexts: Contexts::NONE },
            Nomination { from: 2, to: 0, contexts: Contexts::NONE },
            Nomination { from: 2, to: 0, contexts: Contexts::NONE },
        ];
        let pop = popularity_all(3, &noms, Layer::Overall);
        assert_eq!(pop, vec![2, 0, 0]);
        assert!(popularity(3, &noms, Layer::Overall, 5).is_err());
    }

    #[test]
    fn triangle_full_homophily() {
        let g = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        let c = column(&[Some("x"), Some("x"), Some("x")]);
        assert_eq!(homophily_fraction(&g, &c).unwrap(), 100.0);
    }

    #[test]
    fn path_with_alternating_values_has_no_matches() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        let c = column(&[Some("x"), Some("y"), Some("x")]);
        assert_eq!(same_attribute_edge_count(&g, &c, None), 0);
    }

    #[test]
    fn missing_endpoints_excluded_from_denominator() {
        let g = graph(4, &[(0, 1), (1, 2), (2, 3)]);
        let c = column(&[Some("x"), Some("x"), None, Some("x")]);
        assert_eq!(homophily_fraction(&g, &c).unwrap(), 100.0);
        let none = column(&[None, None, None, None]);
        assert!(matches!(homophily_fraction(&g, &none), Err(Error::Undefined(_))));
    }

    #[test]
    fn star_positive_friends() {
        let g = graph(4, &[(0, 1), (0, 2), (0, 3)]);
        let pos = [false, true, true, true];
        assert_eq!(positive_friend_count(&g, &pos, 0).unwrap(), 3);
        let iso = graph(2, &[]);
        assert_eq!(positive_friend_count(&iso, &[true, true], 0).unwrap(), 0);
    }

    #[test]
    fn assortativity_of_two_pure_components_is_one() {
        let g = graph(4, &[(0, 1), (2, 3)]);
        let c = column(&[Some("a"), Some("a"), Some("b"), Some("b")]);
        assert!((attribute_assortativity(&g, &c).unwrap() - 1.0).abs() < 1e-12);
    }

    fn arb_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>, Vec<Option<u8>>)> {
        (3usize..12).prop_flat_map(|n| {
            (
                Just(n),
                proptest::collection::vec((0..n, 0..n), 0..30),
                proptest::collection::vec(proptest::option::weighted(0.85, 0u8..3), n),
            )
        })
    }

    proptest! {
        #[test]
        fn degree_sum_is_twice_edges((n, raw, _) in arb_graph()) {
            let edges: Vec<_> = raw.into_iter().filter(|(a, b)| a != b).collect();
            let g = graph(n, &edges);
            let total: usize = (0..n).map(|i| g.degree(i)).sum();
            prop_assert_eq!(total, 2 * g.edge_count());
        }

        #[test]
        fn per_category_counts_sum_to_total((n, raw, labels) in arb_graph()) {
            let edges: Vec<_> = raw.into_iter().filter(|(a, b)| a != b).collect();
            let g = graph(n, &edges);
            let names: Vec<Option<String>> = labels.iter().map(|l| l.map(|v| format!("c{v}"))).collect();
            let c = AttributeColumn::from_labels(Attribute::School, &names, None);
            let total = same_attribute_edge_count(&g, &c, None);
            let by_level: usize = (0..c.levels.len() as u32)
                .map(|l| same_attribute_edge_count(&g, &c, Some(l)))
                .sum();
            prop_assert_eq!(total, by_level);
        }

        #[test]
        fn homophily_invariant_under_relabeling((n, raw, labels) in arb_graph(), shift in 1u8..3) {
            let edges: Vec<_> = raw.into_iter().filter(|(a, b)| a != b).collect();
            let g = graph(n, &edges);
            let names: Vec<Option<String>> = labels.iter().map(|l| l.map(|v| format!("c{v}"))).collect();
            let renamed: Vec<Option<String>> = labels.iter().map(|l| l.map(|v| format!("z{}", (v + shift) % 3))).collect();
            let a = homophily_fraction(&g, &AttributeColumn::from_labels(Attribute::School, &names, None));
            let b = homophily_fraction(&g, &AttributeColumn::from_labels(Attribute::School, &renamed, None));
            match (a, b) {
                (Ok(x), Ok(y)) => prop_assert!((x - y).abs() < 1e-12),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "relabeling changed definedness"),
            }
        }
    }
}
