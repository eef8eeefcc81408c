//! Participants, layered contact networks and their structural statistics.

pub mod network;
pub mod participant;
pub mod stats;

pub use network::{build_network, build_network_named, ContactNetwork, Contexts, Layer, Nomination};
pub use participant::{
    Alcohol, Attribute, AttributeColumn, BmiCategory, Carriage, Cohort, Contraceptive, IsoWeek,
    Participant, PhysicalActivity, Sex, StudyProgram, Trait, UseFrequency,
};
pub use stats::{
    attribute_assortativity, eligible_edge_count, homophily_fraction, popularity, popularity_all,
    positive_friend_count, positive_friend_counts, same_attribute_edge_count,
};

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_noms() -> impl Strategy<Value = Vec<Nomination>> {
        proptest::collection::vec((0usize..8, 0usize..8, 0u8..32), 0..25).prop_map(|v| {
            v.into_iter()
                .filter(|(a, b, _)| a != b)
                .map(|(from, to, bits)| {
                    let layers: Vec<Layer> = Layer::CONTEXTS
                        .into_iter()
                        .enumerate()
                        .filter(|(i, _)| bits & (1 << i) != 0)
                        .map(|(_, l)| l)
                        .collect();
                    Nomination { from, to, contexts: Contexts::from_layers(&layers) }
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn reversing_nominations_preserves_every_layer(noms in arb_noms()) {
            let reversed: Vec<Nomination> = noms.iter().map(|n| Nomination { from: n.to, to: n.from, contexts: n.contexts }).collect();
            for layer in Layer::ALL {
                prop_assert_eq!(build_network(8, &noms, layer).unwrap(), build_network(8, &reversed, layer).unwrap());
            }
        }

        #[test]
        fn layers_are_subsets_of_overall(noms in arb_noms()) {
            let overall = build_network(8, &noms, Layer::Overall).unwrap();
            for layer in Layer::CONTEXTS {
                let g = build_network(8, &noms, layer).unwrap();
                for &(a, b) in g.edges() {
                    prop_assert!(overall.has_edge(a as usize, b as usize));
                }
            }
        }

        #[test]
        fn adding_a_nomination_never_removes_edges(noms in arb_noms(), from in 0usize..8, to in 0usize..8, bits in 0u8..32) {
            prop_assume!(from != to);
            let layers: Vec<Layer> = Layer::CONTEXTS.into_iter().enumerate().filter(|(i, _)| bits & (1 << i) != 0).map(|(_, l)| l).collect();
            let mut more = noms.clone();
            more.push(Nomination { from, to, contexts: Contexts::from_layers(&layers) });
            for layer in Layer::ALL {
                let before = build_network(8, &noms, layer).unwrap().edge_count();
                let after = build_network(8, &more, layer).unwrap().edge_count();
                prop_assert!(after >= before);
            }
        }
    }
}
