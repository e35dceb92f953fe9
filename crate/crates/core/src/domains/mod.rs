//! The tutors: problem types, their scaffold steps, randomized generators and
//! the rule sets that solve them.
//!
//! Everything a problem type needs is data. A catalog directory holds
//! `tutors.json`, one `types/<id>.json` per problem type and the rule files
//! those types point at; [`Catalog::builtin`] embeds the shipped catalog.

mod generators;
mod hints;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::{DateTime, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use generators::{generator_names, ParamSpec, Params};
pub use hints::{Hint, HintLevel};

use crate::expr::Format;
use crate::production::{
    ActionRegistry, CheckResult, EngineError, ExpectedValue, Fact, RuleEngine, RuleSet,
    RuleSetError, Trace,
};
use crate::value::{InputMode, Value};

const EMBEDDED: &[(&str, &str)] = &[
    ("tutors.json", include_str!("../../data/tutors.json")),
    ("types/exponent-product.json", include_str!("../../data/types/exponent-product.json")),
    ("types/exponent-quotient.json", include_str!("../../data/types/exponent-quotient.json")),
    ("types/exponent-power.json", include_str!("../../data/types/exponent-power.json")),
    ("types/radical-simplify.json", include_str!("../../data/types/radical-simplify.json")),
    ("types/factor-quadratic.json", include_str!("../../data/types/factor-quadratic.json")),
    ("types/rational-equation.json", include_str!("../../data/types/rational-equation.json")),
    ("rules/exponent-product.json", include_str!("../../data/rules/exponent-product.json")),
    ("rules/exponent-quotient.json", include_str!("../../data/rules/exponent-quotient.json")),
    ("rules/exponent-power.json", include_str!("../../data/rules/exponent-power.json")),
    ("rules/radical-simplify.json", include_str!("../../data/rules/radical-simplify.json")),
    ("rules/factor-quadratic.json", include_str!("../../data/rules/factor-quadratic.json")),
    ("rules/rational-equation.json", include_str!("../../data/rules/rational-equation.json")),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tutor {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub problem_types: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepSchema {
    pub slot: String,
    pub prompt: String,
    pub input_mode: InputMode,
    pub kc_id: String,
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemType {
    pub id: String,
    pub tutor_id: String,
    pub name: String,
    #[serde(default)]
    pub instructions: String,
    /// Key into the generator registry.
    pub generator: String,
    #[serde(default)]
    pub params: Params,
    /// Rule file path, relative to the catalog root.
    pub rule_set: String,
    pub steps: Vec<StepSchema>,
}

impl ProblemType {
    pub fn step(&self, slot: &str) -> Option<&StepSchema> {
        self.steps.iter().find(|s| s.slot == slot)
    }

    pub fn kc_ids(&self) -> BTreeSet<String> {
        self.steps.iter().map(|s| s.kc_id.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub id: String,
    pub problem_type_id: String,
    pub tutor_id: String,
    pub seed: u64,
    pub statement: Value,
    pub statement_text: String,
    pub statement_latex: String,
    pub facts: Vec<Fact>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<DateTime<Utc>>,
}

/// A generated instance together with its expert trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolvedProblem {
    pub instance: ProblemInstance,
    pub trace: Trace,
}

impl SolvedProblem {
    pub fn expected(&self, slot: &str) -> Result<Vec<ExpectedValue<'_>>, EngineError> {
        self.trace.expected_values(slot)
    }

    pub fn check(&self, slot: &str, input: &Value) -> Result<CheckResult, EngineError> {
        self.trace.check_input(slot, input)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemTypeListing {
    pub id: String,
    pub name: String,
    pub instructions: String,
    pub steps: Vec<StepSchema>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TutorListing {
    pub id: String,
    pub name: String,
    pub description: String,
    pub problem_types: Vec<ProblemTypeListing>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: invalid json: {message}")]
    Json { path: String, message: String },
    #[error("{path}: {source}")]
    Rules { path: String, source: RuleSetError },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("unknown tutor `{0}`")]
    UnknownTutor(String),
    #[error("unknown problem type `{0}`")]
    UnknownType(String),
    #[error("unknown problem instance `{0}`")]
    UnknownInstance(String),
    #[error("problem type `{ty}` has no step `{slot}`")]
    UnknownStep { ty: String, slot: String },
    #[error("generator failed: {0}")]
    Generator(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("hint level must be 1, 2 or 3, got {0}")]
    InvalidLevel(u8),
    #[error("step `{0}` is already correct")]
    StepAlreadyCorrect(String),
}

#[derive(Deserialize)]
struct TutorsFile {
    tutors: Vec<Tutor>,
}

/// Immutable set of tutors, problem types and rule sets.
#[derive(Debug, Clone)]
pub struct Catalog {
    tutors: Vec<Tutor>,
    types: BTreeMap<String, ProblemType>,
    rules: BTreeMap<String, RuleSet>,
    registry: ActionRegistry,
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &str, text: &str) -> Result<T, CatalogError> {
    serde_json::from_str(text).map_err(|e| CatalogError::Json {
        path: path.to_string(),
        message: e.to_string(),
    })
}

impl Catalog {
    /// The shipped four-tutor catalog.
    pub fn builtin() -> Catalog {
        Catalog::load(|path| {
            EMBEDDED
                .iter()
                .find(|(p, _)| *p == path)
                .map(|(_, text)| text.to_string())
                .ok_or_else(|| CatalogError::Io {
                    path: path.to_string(),
                    message: "not in the embedded catalog".into(),
                })
        })
        .expect("embedded catalog is valid")
    }

    /// Load a catalog directory laid out like `data/`.
    pub fn from_dir(root: &Path) -> Result<Catalog, CatalogError> {
        Catalog::load(|path| {
            let full = root.join(path);
            std::fs::read_to_string(&full).map_err(|e| CatalogError::Io {
                path: full.display().to_string(),
                message: e.to_string(),
            })
        })
    }

    fn load(read: impl Fn(&str) -> Result<String, CatalogError>) -> Result<Catalog, CatalogError> {
        let registry = ActionRegistry::builtin();
        let tutors: TutorsFile = parse_json("tutors.json", &read("tutors.json")?)?;
        let mut types = BTreeMap::new();
        let mut rules = BTreeMap::new();
        for tutor in &tutors.tutors {
            for ty in &tutor.problem_types {
                let path = format!("types/{ty}.json");
                let pt: ProblemType = parse_json(&path, &read(&path)?)?;
                let rs_text = read(&pt.rule_set)?;
                let rs = RuleSet::from_json(&rs_text).map_err(|source| CatalogError::Rules {
                    path: pt.rule_set.clone(),
                    source,
                })?;
                rs.validate(&registry).map_err(|source| CatalogError::Rules {
                    path: pt.rule_set.clone(),
                    source,
                })?;
                rules.insert(pt.id.clone(), rs);
                types.insert(pt.id.clone(), pt);
            }
        }
        let catalog = Catalog {
            tutors: tutors.tutors,
            types,
            rules,
            registry,
        };
        catalog.validate()?;
        Ok(catalog)
    }

    fn validate(&self) -> Result<(), CatalogError> {
        let bad = |m: String| Err(CatalogError::Invalid(m));
        let mut tutor_ids = BTreeSet::new();
        for t in &self.tutors {
            if !tutor_ids.insert(&t.id) {
                return bad(format!("duplicate tutor `{}`", t.id));
            }
            if t.problem_types.is_empty() {
                return bad(format!("tutor `{}` has no problem types", t.id));
            }
        }
        for pt in self.types.values() {
            let owner = self.tutors.iter().find(|t| t.problem_types.contains(&pt.id));
            if owner.map(|t| &t.id) != Some(&pt.tutor_id) {
                return bad(format!("problem type `{}` is not listed under tutor `{}`", pt.id, pt.tutor_id));
            }
            if pt.steps.is_empty() {
                return bad(format!("problem type `{}` has no steps", pt.id));
            }
            if !generator_names().any(|g| g == pt.generator) {
                return bad(format!("problem type `{}`: unknown generator `{}`", pt.id, pt.generator));
            }
            let rs = &self.rules[&pt.id];
            let mut slots = BTreeSet::new();
            for (i, step) in pt.steps.iter().enumerate() {
                if step.order != i {
                    return bad(format!("problem type `{}`: step orders must run 0, 1, 2, ...", pt.id));
                }
                if !slots.insert(&step.slot) {
                    return bad(format!("problem type `{}`: duplicate step slot `{}`", pt.id, step.slot));
                }
                let kc_targets_slot = rs
                    .rules
                    .iter()
                    .any(|r| r.kc_id == step.kc_id && r.action.target == step.slot);
                if !kc_targets_slot {
                    return bad(format!(
                        "problem type `{}`: no rule with kc `{}` derives step `{}`",
                        pt.id, step.kc_id, step.slot
                    ));
                }
            }
            for r in &rs.rules {
                hints::check_templates(r).map_err(|m| CatalogError::Invalid(format!("rule `{}`: {m}", r.id)))?;
            }
        }
        Ok(())
    }

    pub fn tutors(&self) -> &[Tutor] {
        &self.tutors
    }

    pub fn tutor(&self, id: &str) -> Result<&Tutor, DomainError> {
        self.tutors
            .iter()
            .find(|t| t.id == id)
            .ok_or_else(|| DomainError::UnknownTutor(id.to_string()))
    }

    pub fn problem_type(&self, id: &str) -> Result<&ProblemType, DomainError> {
        self.types
            .get(id)
            .ok_or_else(|| DomainError::UnknownType(id.to_string()))
    }

    pub fn problem_types(&self) -> impl Iterator<Item = &ProblemType> {
        self.types.values()
    }

    /// Problem types of a tutor, in listing order.
    pub fn tutor_types(&self, tutor_id: &str) -> Result<Vec<&ProblemType>, DomainError> {
        let t = self.tutor(tutor_id)?;
        Ok(t.problem_types.iter().map(|id| &self.types[id]).collect())
    }

    pub fn rule_set(&self, type_id: &str) -> Result<&RuleSet, DomainError> {
        self.rules
            .get(type_id)
            .ok_or_else(|| DomainError::UnknownType(type_id.to_string()))
    }

    pub fn registry(&self) -> &ActionRegistry {
        &self.registry
    }

    /// Every knowledge component any step of any problem type exercises.
    pub fn kc_ids(&self) -> BTreeSet<String> {
        self.types.values().flat_map(|t| t.kc_ids()).collect()
    }

    /// Problem types whose steps exercise `kc`.
    pub fn types_touching(&self, kc: &str) -> Vec<String> {
        self.types
            .values()
            .filter(|t| t.steps.iter().any(|s| s.kc_id == kc))
            .map(|t| t.id.clone())
            .collect()
    }

    pub fn list_catalog(&self) -> Vec<TutorListing> {
        self.tutors
            .iter()
            .map(|t| TutorListing {
                id: t.id.clone(),
                name: t.name.clone(),
                description: t.description.clone(),
                problem_types: t
                    .problem_types
                    .iter()
                    .map(|id| {
                        let pt = &self.types[id];
                        ProblemTypeListing {
                            id: pt.id.clone(),
                            name: pt.name.clone(),
                            instructions: pt.instructions.clone(),
                            steps: pt.steps.clone(),
                        }
                    })
                    .collect(),
            })
            .collect()
    }

    /// Deterministic in `(type_id, seed)`. `created_at` is left unset.
    pub fn generate(&self, type_id: &str, seed: u64) -> Result<ProblemInstance, DomainError> {
        let pt = self.problem_type(type_id)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = generators::run(&pt.generator, &pt.params, &mut rng)?;
        Ok(ProblemInstance {
            id: format!("{type_id}-{seed:016x}"),
            problem_type_id: pt.id.clone(),
            tutor_id: pt.tutor_id.clone(),
            seed,
            statement_text: g.statement.render(Format::Plain),
            statement_latex: g.statement.render(Format::Latex),
            statement: g.statement,
            facts: g.facts,
            created_at: None,
        })
    }

    /// Rebuild an instance from its id, which encodes type and seed.
    pub fn regenerate(&self, instance_id: &str) -> Result<ProblemInstance, DomainError> {
        let unknown = || DomainError::UnknownInstance(instance_id.to_string());
        let (ty, seed) = instance_id.rsplit_once('-').ok_or_else(unknown)?;
        if seed.len() != 16 {
            return Err(unknown());
        }
        let seed = u64::from_str_radix(seed, 16).map_err(|_| unknown())?;
        let instance = self.generate(ty, seed).map_err(|_| unknown())?;
        if instance.id != instance_id {
            return Err(unknown());
        }
        Ok(instance)
    }

    /// Run the type's rule set over the instance's facts.
    pub fn solve(&self, instance: &ProblemInstance) -> Result<Trace, DomainError> {
        let rs = self.rule_set(&instance.problem_type_id)?;
        Ok(RuleEngine::solve(&rs.rules, &self.registry, instance.facts.iter().cloned())?)
    }

    pub fn instantiate(&self, type_id: &str, seed: u64) -> Result<SolvedProblem, DomainError> {
        let instance = self.generate(type_id, seed)?;
        let trace = self.solve(&instance)?;
        Ok(SolvedProblem { instance, trace })
    }

    /// Hint for one step. `step_correct` reports whether the student already
    /// solved the step.
    pub fn hint(
        &self,
        problem: &SolvedProblem,
        slot: &str,
        level: u8,
        step_correct: bool,
    ) -> Result<Hint, DomainError> {
        let level = HintLevel::try_from(level)?;
        let pt = self.problem_type(&problem.instance.problem_type_id)?;
        if pt.step(slot).is_none() {
            return Err(DomainError::UnknownStep {
                ty: pt.id.clone(),
                slot: slot.to_string(),
            });
        }
        if step_correct {
            return Err(DomainError::StepAlreadyCorrect(slot.to_string()));
        }
        let preferred = problem.trace.preferred(slot)?;
        let rule = self
            .rule_set(&pt.id)?
            .rule(preferred.rule_id)
            .expect("trace rules come from this rule set");
        Ok(hints::render(rule, &preferred, slot, level))
    }
}
