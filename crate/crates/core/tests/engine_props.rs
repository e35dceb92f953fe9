use std::collections::BTreeSet;

use apprentice_core::domains::Catalog;
use apprentice_core::production::naive::run_naive;
use apprentice_core::production::{binding_signature, EngineError, Fact, RuleEngine, RuleSet};
use apprentice_core::value::Value;
use proptest::prelude::*;

const SEEDS_PER_TYPE: u64 = 200;

fn type_ids(c: &Catalog) -> Vec<String> {
    c.problem_types().map(|t| t.id.clone()).collect()
}

#[test]
fn rete_matches_naive_firing_for_firing() {
    let c = Catalog::builtin();
    for ty in type_ids(&c) {
        let rules = &c.rule_set(&ty).unwrap().rules;
        for seed in 0..SEEDS_PER_TYPE {
            let inst = c.generate(&ty, seed).unwrap();
            let rete = RuleEngine::solve(rules, c.registry(), inst.facts.iter().cloned()).unwrap();
            let naive = run_naive(rules, c.registry(), &inst.facts).unwrap();
            assert_eq!(rete.derived_facts(), naive.derived_facts(), "{ty} seed {seed}");
            assert_eq!(rete, naive, "{ty} seed {seed}");
        }
    }
}

#[test]
fn traces_are_deterministic() {
    let c = Catalog::builtin();
    for ty in type_ids(&c) {
        for seed in [0, 7, u64::MAX] {
            let a = c.instantiate(&ty, seed).unwrap();
            let b = c.instantiate(&ty, seed).unwrap();
            assert_eq!(
                serde_json::to_string(&a.trace).unwrap(),
                serde_json::to_string(&b.trace).unwrap()
            );
        }
    }
}

#[test]
fn no_rule_binding_pair_fires_twice() {
    let c = Catalog::builtin();
    for ty in type_ids(&c) {
        for seed in 0..SEEDS_PER_TYPE {
            let p = c.instantiate(&ty, seed).unwrap();
            let mut seen = BTreeSet::new();
            for f in &p.trace.firings {
                assert!(seen.insert((f.rule_id.clone(), binding_signature(&f.bindings))));
            }
        }
    }
}

#[test]
fn every_step_has_an_expected_value() {
    let c = Catalog::builtin();
    for pt in c.problem_types() {
        for seed in 0..SEEDS_PER_TYPE {
            let p = c.instantiate(&pt.id, seed).unwrap();
            for step in &pt.steps {
                assert!(!p.expected(&step.slot).unwrap().is_empty(), "{} {seed} {}", pt.id, step.slot);
            }
        }
    }
}

#[test]
fn derived_facts_never_overwrite_inputs() {
    let c = Catalog::builtin();
    for ty in type_ids(&c) {
        let p = c.instantiate(&ty, 3).unwrap();
        let inputs: BTreeSet<&str> = p.instance.facts.iter().map(|f| f.slot.as_str()).collect();
        assert!(p.trace.firings.iter().all(|f| !inputs.contains(f.derived.slot.as_str())));
    }
}

#[test]
fn empty_rule_set_gives_empty_trace() {
    let c = Catalog::builtin();
    let inst = c.generate("exponent-product", 1).unwrap();
    let trace = RuleEngine::solve(&[], c.registry(), inst.facts.iter().cloned()).unwrap();
    assert!(trace.is_empty());
}

#[test]
fn unmatched_conditions_give_empty_trace() {
    let c = Catalog::builtin();
    let rules = &c.rule_set("exponent-product").unwrap().rules;
    let trace = RuleEngine::solve(rules, c.registry(), [Fact::new("unrelated", Value::int(1))]).unwrap();
    assert!(trace.is_empty());
}

#[test]
fn assert_fails_on_duplicate_slot() {
    let c = Catalog::builtin();
    let mut e = RuleEngine::new(&[], c.registry());
    e.assert_fact(Fact::new("problem.base", Value::int(2))).unwrap();
    assert_eq!(e.working_memory().len(), 1);
    assert_eq!(
        e.assert_fact(Fact::new("problem.base", Value::int(3))),
        Err(EngineError::DuplicateSlot("problem.base".into()))
    );
}

/// The agenda after each assertion equals what a full re-scan finds.
#[test]
fn agenda_tracks_naive_matches() {
    let c = Catalog::builtin();
    let rules = &c.rule_set("rational-equation").unwrap().rules;
    let inst = c.generate("rational-equation", 5).unwrap();
    let mut e = RuleEngine::new(rules, c.registry());
    for (i, f) in inst.facts.iter().enumerate() {
        e.assert_fact(f.clone()).unwrap();
        let prefix = &inst.facts[..=i];
        // Firing order is the agenda order, so the first naive firing is the
        // minimal agenda entry whenever anything matches.
        let naive = run_naive(rules, c.registry(), prefix).unwrap();
        match naive.firings.first() {
            Some(first) => assert_eq!(
                e.agenda().first().map(|(id, _)| id.as_str()),
                Some(first.rule_id.as_str())
            ),
            None => assert!(e.agenda().is_empty()),
        }
    }
}

fn arb_facts() -> impl Strategy<Value = Vec<Fact>> {
    let slots = ["problem.var", "problem.exp1", "problem.exp2", "problem.b", "problem.c"];
    prop::collection::btree_map(prop::sample::select(slots.to_vec()), -12i64..=12, 0..=5).prop_map(|m| {
        m.into_iter()
            .map(|(slot, n)| {
                let v = if slot == "problem.var" {
                    Value::Expr(apprentice_core::expr::Expr::var('x'))
                } else {
                    Value::int(n)
                };
                Fact::new(slot, v)
            })
            .collect()
    })
}

proptest! {
    /// Arbitrary partial fact sets, including ones no generator produces.
    #[test]
    fn rete_matches_naive_on_arbitrary_facts(facts in arb_facts(), set in 0usize..6) {
        let c = Catalog::builtin();
        let ids = type_ids(&c);
        let rs: &RuleSet = c.rule_set(&ids[set]).unwrap();
        let rete = RuleEngine::solve(&rs.rules, c.registry(), facts.iter().cloned());
        let naive = run_naive(&rs.rules, c.registry(), &facts);
        prop_assert_eq!(rete, naive);
    }
}
