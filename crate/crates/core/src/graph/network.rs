use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::participant::normalize_token;
use crate::error::{Error, Result};

/// Contact context of a nomination, or the union of all of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Overall,
    Physical,
    School,
    Sports,
    Home,
    Other,
}

impl Layer {
    pub const ALL: [Layer; 6] = [
        Layer::Overall,
        Layer::Physical,
        Layer::School,
        Layer::Sports,
        Layer::Home,
        Layer::Other,
    ];

    pub const CONTEXTS: [Layer; 5] = [
        Layer::Physical,
        Layer::School,
        Layer::Sports,
        Layer::Home,
        Layer::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Layer::Overall => "overall",
            Layer::Physical => "physical",
            Layer::School => "school",
            Layer::Sports => "sports",
            Layer::Home => "home",
            Layer::Other => "other",
        }
    }

    fn bit(self) -> u8 {
        match self {
            Layer::Overall => 0,
            Layer::Physical => 1,
            Layer::School => 1 << 1,
            Layer::Sports => 1 << 2,
            Layer::Home => 1 << 3,
            Layer::Other => 1 << 4,
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Layer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match normalize_token(s).as_str() {
            "overall" => Ok(Layer::Overall),
            "physical" => Ok(Layer::Physical),
            "school" => Ok(Layer::School),
            "sports" | "sport" => Ok(Layer::Sports),
            "home" => Ok(Layer::Home),
            "other" | "others" => Ok(Layer::Other),
            other => Err(Error::Config(format!("unknown layer `{other}`"))),
        }
    }
}

/// Set of contact contexts attached to one nomination.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Contexts(u8);

impl Contexts {
    pub const NONE: Contexts = Contexts(0);

    pub fn from_layers(layers: &[Layer]) -> Self {
        Contexts(layers.iter().fold(0, |acc, l| acc | l.bit()))
    }

    pub fn insert(&mut self, layer: Layer) {
        self.0 |= layer.bit();
    }

    pub fn union(self, other: Contexts) -> Contexts {
        Contexts(self.0 | other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Every nomination belongs to the overall layer, flagged or not.
    pub fn includes(self, layer: Layer) -> bool {
        layer == Layer::Overall || self.0 & layer.bit() != 0
    }

    pub fn layers(self) -> Vec<Layer> {
        Layer::CONTEXTS
            .into_iter()
            .filter(|l| self.0 & l.bit() != 0)
            .collect()
    }
}

impl Serialize for Contexts {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.layers().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Contexts {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let layers = Vec::<Layer>::deserialize(d)?;
        Ok(Contexts::from_layers(&layers))
    }
}

/// A directed "most contact last week" naming between two cohort members,
/// stored by node index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Nomination {
    pub from: usize,
    pub to: usize,
    pub contexts: Contexts,
}

/// Undirected simple graph over the whole cohort node set for one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactNetwork {
    layer: Layer,
    edges: Vec<(u32, u32)>,
    adjacency: Vec<Vec<u32>>,
}

impl ContactNetwork {
    /// Build from an undirected edge list; self-loops are rejected, duplicates
    /// and orientation are collapsed.
    pub fn from_edges(n_nodes: usize, layer: Layer, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n_nodes || b >= n_nodes {
                return Err(Error::Input(format!("edge ({a}, {b}) outside node range {n_nodes}")));
            }
            if a == b {
                return Err(Error::Input(format!("self-loop on node {a}")));
            }
            set.insert((a.min(b) as u32, a.max(b) as u32));
        }
        let edges: Vec<(u32, u32)> = set.into_iter().collect();
        let mut adjacency = vec![Vec::new(); n_nodes];
        for &(a, b) in &edges {
            adjacency[a as usize].push(b);
            adjacency[b as usize].push(a);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        Ok(ContactNetwork {
            layer,
            edges,
            adjacency,
        })
    }

    pub fn empty(n_nodes: usize, layer: Layer) -> Self {
        ContactNetwork {
            layer,
            edges: Vec::new(),
            adjacency: vec![Vec::new(); n_nodes],
        }
    }

    pub fn layer(&self) -> Layer {
        self.layer
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(low, high)` index pairs in lexicographic order.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn neighbors(&self, node: usize) -> &[u32] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency
            .get(a)
            .is_some_and(|n| n.binary_search(&(b as u32)).is_ok())
    }

    /// Same node set, keeping only edges whose endpoints are both kept.
    pub fn restrict(&self, keep: &[bool]) -> ContactNetwork {
        assert_eq!(keep.len(), self.node_count(), "mask length must match node count");
        let edges = self
            .edges
            .iter()
            .filter(|(a, b)| keep[*a as usize] && keep[*b as usize])
            .map(|&(a, b)| (a as usize, b as usize));
        ContactNetwork::from_edges(self.node_count(), self.layer, edges)
            .expect("subset of a valid edge set")
    }

    /// Subgraph induced by `nodes` (ascending), relabelled `0..nodes.len()`.
    pub fn induced(&self, nodes: &[usize]) -> ContactNetwork {
        let mut index = vec![usize::MAX; self.node_count()];
        for (k, &v) in nodes.iter().enumerate() {
            index[v] = k;
        }
        let edges = self
            .edges
            .iter()
            .map(|&(a, b)| (index[a as usize], index[b as usize]))
            .filter(|&(a, b)| a != usize::MAX && b != usize::MAX);
        ContactNetwork::from_edges(nodes.len(), self.layer, edges).expect("subset of a valid edge set")
    }

    /// Relabel nodes: node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> ContactNetwork {
        let edges = self
            .edges
            .iter()
            .map(|&(a, b)| (perm[a as usize], perm[b as usize]));
        ContactNetwork::from_edges(self.node_count(), self.layer, edges)
            .expect("permutation of a valid edge set")
    }
}

/// Collapse nominations into the undirected simple graph of one layer. A
/// nomination in either direction creates the edge; reciprocal and repeated
/// nominations collapse into it.
pub fn build_network(n_nodes: usize, nominations: &[Nomination], layer: Layer) -> Result<ContactNetwork> {
    let edges = nominations
        .iter()
        .filter(|n| n.contexts.includes(layer))
        .map(|n| (n.from, n.to));
    ContactNetwork::from_edges(n_nodes, layer, edges)
}

/// Parse a layer token and build it.
pub fn build_network_named(n_nodes: usize, nominations: &[Nomination], layer: &str) -> Result<ContactNetwork> {
    build_network(n_nodes, nominations, layer.parse()?)
}
