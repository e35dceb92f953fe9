use std::collections::{BTreeMap, BTreeSet};

use super::{
    apply_action, bind, binding_signature, ActionRegistry, Bindings, EngineError, Fact, Firing,
    ProductionRule, Trace,
};
use crate::value::Value;

/// Upper bound on rule firings in one run to fixpoint.
pub const CYCLE_LIMIT: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Activation {
    rule_id: String,
    signature: String,
    rule: usize,
    bindings: Bindings,
}

/// Incremental matcher. Alpha memories index facts by slot; each rule keeps a
/// chain of beta memories where level `i` holds the consistent bindings of its
/// first `i + 1` conditions. Complete matches wait on an agenda ordered by
/// `(rule id, binding signature)`, and each such pair fires at most once.
#[derive(Debug, Clone)]
pub struct RuleEngine {
    rules: Vec<ProductionRule>,
    registry: ActionRegistry,
    memory: BTreeSet<Fact>,
    asserted: BTreeSet<String>,
    alpha: BTreeMap<String, Vec<Value>>,
    beta: Vec<Vec<BTreeSet<Bindings>>>,
    agenda: BTreeSet<Activation>,
    fired: BTreeSet<(String, String)>,
    firings: usize,
    trace: Trace,
}

impl RuleEngine {
    pub fn new(rules: &[ProductionRule], registry: &ActionRegistry) -> Self {
        let mut rules = rules.to_vec();
        rules.sort_by(|a, b| a.id.cmp(&b.id));
        let beta = rules
            .iter()
            .map(|r| vec![BTreeSet::new(); r.conditions.len()])
            .collect();
        RuleEngine {
            rules,
            registry: registry.clone(),
            memory: BTreeSet::new(),
            asserted: BTreeSet::new(),
            alpha: BTreeMap::new(),
            beta,
            agenda: BTreeSet::new(),
            fired: BTreeSet::new(),
            firings: 0,
            trace: Trace::default(),
        }
    }

    /// Build an engine, assert `facts` and run it to fixpoint.
    pub fn solve(
        rules: &[ProductionRule],
        registry: &ActionRegistry,
        facts: impl IntoIterator<Item = Fact>,
    ) -> Result<Trace, EngineError> {
        let mut engine = RuleEngine::new(rules, registry);
        for f in facts {
            engine.assert_fact(f)?;
        }
        engine.run_to_fixpoint()
    }

    /// Add an initial fact. Asserted slots are single-valued.
    pub fn assert_fact(&mut self, fact: Fact) -> Result<(), EngineError> {
        if !self.asserted.insert(fact.slot.clone()) {
            return Err(EngineError::DuplicateSlot(fact.slot));
        }
        self.add(fact);
        Ok(())
    }

    /// Pending `(rule id, binding signature)` pairs in firing order.
    pub fn agenda(&self) -> Vec<(String, String)> {
        self.agenda
            .iter()
            .map(|a| (a.rule_id.clone(), a.signature.clone()))
            .collect()
    }

    pub fn working_memory(&self) -> &BTreeSet<Fact> {
        &self.memory
    }

    pub fn run_to_fixpoint(&mut self) -> Result<Trace, EngineError> {
        while let Some(act) = self.agenda.pop_first() {
            if !self.fired.insert((act.rule_id.clone(), act.signature.clone())) {
                continue;
            }
            self.firings += 1;
            if self.firings > CYCLE_LIMIT {
                return Err(EngineError::CycleLimit(CYCLE_LIMIT));
            }
            let rule = &self.rules[act.rule];
            let Some(value) = apply_action(rule, &self.registry, &act.bindings) else {
                continue;
            };
            let fact = Fact::new(rule.action.target.clone(), value);
            if self.memory.contains(&fact) {
                continue;
            }
            self.trace.firings.push(Firing {
                rule_id: act.rule_id,
                kc_id: rule.kc_id.clone(),
                bindings: act.bindings,
                derived: fact.clone(),
            });
            self.add(fact);
        }
        Ok(self.trace.clone())
    }

    fn add(&mut self, fact: Fact) {
        if !self.memory.insert(fact.clone()) {
            return;
        }
        self.alpha
            .entry(fact.slot.clone())
            .or_default()
            .push(fact.value.clone());
        for r in 0..self.rules.len() {
            for i in 0..self.rules[r].conditions.len() {
                if self.rules[r].conditions[i].slot != fact.slot {
                    continue;
                }
                let left: Vec<Bindings> = if i == 0 {
                    vec![Bindings::new()]
                } else {
                    self.beta[r][i - 1].iter().cloned().collect()
                };
                let var = self.rules[r].conditions[i].bind.clone();
                for token in left {
                    if let Some(next) = bind(&token, &var, &fact.value) {
                        self.extend(r, i, next);
                    }
                }
            }
        }
    }

    /// Store `token` at level `i` of rule `r` and join it against the alpha
    /// memories of the remaining conditions.
    fn extend(&mut self, r: usize, i: usize, token: Bindings) {
        if !self.beta[r][i].insert(token.clone()) {
            return;
        }
        let conditions = &self.rules[r].conditions;
        if i + 1 == conditions.len() {
            let signature = binding_signature(&token);
            let rule_id = self.rules[r].id.clone();
            if !self.fired.contains(&(rule_id.clone(), signature.clone())) {
                self.agenda.insert(Activation {
                    rule_id,
                    signature,
                    rule: r,
                    bindings: token,
                });
            }
            return;
        }
        let next = &conditions[i + 1];
        let values = self.alpha.get(&next.slot).cloned().unwrap_or_default();
        let var = next.bind.clone();
        for v in values {
            if let Some(t) = bind(&token, &var, &v) {
                self.extend(r, i + 1, t);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::production::{ActionSpec, Condition};

    fn rule(id: &str, conds: &[(&str, &str)], action: &str, args: &[&str], target: &str) -> ProductionRule {
        ProductionRule {
            id: id.into(),
            kc_id: format!("kc-{id}"),
            conditions: conds
                .iter()
                .map(|(s, b)| Condition { slot: s.to_string(), bind: b.to_string() })
                .collect(),
            action: ActionSpec {
                name: action.into(),
                args: args.iter().map(|s| s.to_string()).collect(),
                target: target.into(),
            },
            hints: ["a".into(), "b".into(), "c".into()],
        }
    }

    #[test]
    fn chains_to_fixpoint_in_rule_order() {
        let rules = vec![
            rule("b-double", &[("sum", "s")], "add", &["s", "s"], "double"),
            rule("a-sum", &[("p", "x"), ("q", "y")], "add", &["x", "y"], "sum"),
        ];
        let reg = ActionRegistry::builtin();
        let trace = RuleEngine::solve(
            &rules,
            &reg,
            [Fact::new("p", Value::int(3)), Fact::new("q", Value::int(4))],
        )
        .unwrap();
        let ids: Vec<&str> = trace.firings.iter().map(|f| f.rule_id.as_str()).collect();
        assert_eq!(ids, ["a-sum", "b-double"]);
        assert_eq!(trace.expected_values("double").unwrap()[0].value, &Value::int(14));
    }

    #[test]
    fn duplicate_assert_is_rejected() {
        let mut e = RuleEngine::new(&[], &ActionRegistry::builtin());
        e.assert_fact(Fact::new("p", Value::int(1))).unwrap();
        assert_eq!(
            e.assert_fact(Fact::new("p", Value::int(2))),
            Err(EngineError::DuplicateSlot("p".into()))
        );
    }

    #[test]
    fn join_requires_shared_variable_to_agree() {
        let rules = vec![rule("same", &[("p", "x"), ("q", "x")], "identity", &["x"], "out")];
        let reg = ActionRegistry::builtin();
        let t = RuleEngine::solve(&rules, &reg, [Fact::new("p", Value::int(1)), Fact::new("q", Value::int(2))]).unwrap();
        assert!(t.is_empty());
        let t = RuleEngine::solve(&rules, &reg, [Fact::new("p", Value::int(2)), Fact::new("q", Value::int(2))]).unwrap();
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn runaway_rule_hits_the_limit() {
        let rules = vec![
            rule("grow", &[("n", "x"), ("one", "o")], "add", &["x", "o"], "n"),
        ];
        let reg = ActionRegistry::builtin();
        let mut e = RuleEngine::new(&rules, &reg);
        e.assert_fact(Fact::new("n", Value::int(0))).unwrap();
        e.assert_fact(Fact::new("one", Value::int(1))).unwrap();
        assert_eq!(e.run_to_fixpoint(), Err(EngineError::CycleLimit(CYCLE_LIMIT)));
    }

    #[test]
    fn unknown_slot_is_reported() {
        let t = Trace::default();
        assert_eq!(t.expected_values("x").unwrap_err(), EngineError::UnknownSlot("x".into()));
    }
}
