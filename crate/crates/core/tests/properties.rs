use proptest::prelude::*;

use lexiforge::feature::{FeatureTree, Node, ValueSet};
use lexiforge::objdict::{ObjectDictionary, ObjectEntry};

fn values() -> impl Strategy<Value = ValueSet> {
    prop::sample::subsequence(vec!["1", "2", "3", "x"], 1..=4).prop_map(|v| ValueSet::of(&v))
}

fn tree() -> impl Strategy<Value = FeatureTree> {
    let leaf = values().prop_map(Node::Leaf);
    let node = leaf.prop_recursive(3, 24, 3, |inner| {
        prop::collection::btree_map("[a-c]", inner, 1..3).prop_map(|m| {
            let mut t = FeatureTree::new();
            for (k, n) in m {
                t.insert(&[k], n).unwrap();
            }
            Node::Tree(t)
        })
    });
    prop::collection::btree_map("[a-d]", node, 0..4).prop_map(|m| {
        let mut t = FeatureTree::new();
        for (k, n) in m {
            t.insert(&[k], n).unwrap();
        }
        t
    })
}

proptest! {
    #[test]
    fn unification_is_commutative_and_idempotent(a in tree(), b in tree()) {
        let ab = a.unify(&b).map(|t| t.canonical_form());
        let ba = b.unify(&a).map(|t| t.canonical_form());
        prop_assert_eq!(ab, ba);
        prop_assert_eq!(a.unify(&a), Some(a.clone()));
    }

    #[test]
    fn dictionary_text_round_trips(
        entries in prop::collection::vec(("[a-zñ' ]{1,5}", tree()), 0..12)
    ) {
        let entries = entries.into_iter().map(|(s, t)| ObjectEntry::new(s, t)).collect();
        let (dict, _) = ObjectDictionary::build(entries);
        let text = dict.to_text();
        let back = ObjectDictionary::load(&text).unwrap();
        prop_assert_eq!(back.len(), dict.len());
        prop_assert_eq!(back.to_text(), text);
    }
}
