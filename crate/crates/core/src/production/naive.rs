//! Reference interpreter: re-matches every rule against all of working memory
//! on every cycle. Slow, but simple enough to trust, and it must agree with
//! [`RuleEngine`](super::RuleEngine) firing for firing.

use std::collections::BTreeSet;

use super::{
    apply_action, bind, binding_signature, ActionRegistry, Bindings, EngineError, Fact, Firing,
    ProductionRule, Trace, CYCLE_LIMIT,
};

fn matches(rule: &ProductionRule, memory: &BTreeSet<Fact>) -> Vec<Bindings> {
    let mut tokens = vec![Bindings::new()];
    for cond in &rule.conditions {
        let mut next = Vec::new();
        for t in &tokens {
            for f in memory.iter().filter(|f| f.slot == cond.slot) {
                if let Some(b) = bind(t, &cond.bind, &f.value) {
                    next.push(b);
                }
            }
        }
        tokens = next;
    }
    tokens
}

pub fn run_naive(
    rules: &[ProductionRule],
    registry: &ActionRegistry,
    facts: &[Fact],
) -> Result<Trace, EngineError> {
    let mut memory = BTreeSet::new();
    let mut slots = BTreeSet::new();
    for f in facts {
        if !slots.insert(f.slot.clone()) {
            return Err(EngineError::DuplicateSlot(f.slot.clone()));
        }
        memory.insert(f.clone());
    }
    let mut fired: BTreeSet<(String, String)> = BTreeSet::new();
    let mut trace = Trace::default();
    let mut count = 0;
    loop {
        let mut best: Option<(String, String, &ProductionRule, Bindings)> = None;
        for rule in rules {
            for b in matches(rule, &memory) {
                let key = (rule.id.clone(), binding_signature(&b));
                if fired.contains(&key) {
                    continue;
                }
                if best.as_ref().is_none_or(|(id, sig, _, _)| (&key.0, &key.1) < (id, sig)) {
                    best = Some((key.0, key.1, rule, b));
                }
            }
        }
        let Some((id, sig, rule, bindings)) = best else {
            return Ok(trace);
        };
        fired.insert((id.clone(), sig));
        count += 1;
        if count > CYCLE_LIMIT {
            return Err(EngineError::CycleLimit(CYCLE_LIMIT));
        }
        if let Some(value) = apply_action(rule, registry, &bindings) {
            let fact = Fact::new(rule.action.target.clone(), value);
            if memory.insert(fact.clone()) {
                trace.firings.push(Firing {
                    rule_id: id,
                    kc_id: rule.kc_id.clone(),
                    bindings,
                    derived: fact,
                });
            }
        }
    }
}
