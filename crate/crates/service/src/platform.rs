//! The tutoring platform without HTTP: sessions, consent, problem delivery,
//! step checking, hints, completion and mastery.
//!
//! Every mutation follows one path: build a [`TransactionRecord`], append it
//! to storage, then fold it into memory with [`Platform::apply`]. Start-up
//! replays the stored log through the same `apply`, so a restart, or a crash
//! between the append and the in-memory update, converges to the same state.

use std::collections::BTreeMap;
use std::io;
use std::sync::Arc;

use apprentice_core::analytics::{self, FunnelReport, TermWindow};
use apprentice_core::domains::{Catalog, DomainError, SolvedProblem, TutorListing};
use apprentice_core::expr::ParseError;
use apprentice_core::knowledge::{KnowledgeError, MasteryConfig, MasteryEntry, MasteryStore};
use apprentice_core::selector::{next_problem, Mode, SelectError, Selection, SelectionRequest};
use apprentice_core::transactions::{Action, Outcome, TransactionRecord};
use apprentice_core::value::{InputMode, Value};
use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use chrono::{DateTime, Duration, Utc};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::clock::Clock;
use crate::storage::{Snapshot, Storage};

/// Highest hint tier; further requests repeat it.
pub const MAX_HINT_LEVEL: u8 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    /// Public id written to the log. The bearer token itself is never stored.
    pub session_id: String,
    /// Hex SHA-256 of the bearer token.
    pub token_hash: String,
    pub student_id: String,
    pub consent: bool,
    pub created_at: DateTime<Utc>,
    pub expires_at: DateTime<Utc>,
}

/// Returned once, at session creation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionGrant {
    pub token: String,
    pub session_id: String,
    pub student_id: String,
    pub consent: bool,
    pub expires_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    Untouched,
    Incorrect,
    Correct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepView {
    pub slot: String,
    pub prompt: String,
    pub input_mode: InputMode,
    pub kc_id: String,
    pub order: usize,
    pub status: StepStatus,
    /// Correct steps are locked against further attempts.
    pub locked: bool,
    /// Last hint tier shown in this session, 0 when none.
    pub hint_level: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemView {
    pub id: String,
    pub tutor_id: String,
    pub problem_type_id: String,
    pub name: String,
    pub instructions: String,
    pub statement: String,
    pub statement_latex: String,
    pub created_at: Option<DateTime<Utc>>,
    pub steps: Vec<StepView>,
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewProblem {
    pub problem: ProblemView,
    pub selection: Selection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptResult {
    pub correct: bool,
    pub locked: bool,
    /// Component credited: the matching rule's on success, the step's otherwise.
    pub kc_id: String,
    pub p_mastery_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HintView {
    pub level: u8,
    pub text: String,
    pub highlight_slot: String,
    pub bottom_out_value: Option<String>,
    pub bottom_out_latex: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoneResult {
    pub complete: bool,
}

#[derive(Debug, Error)]
pub enum PlatformError {
    #[error("missing, unknown or expired session token")]
    Unauthorized,
    #[error("this session has not consented; tutors are unavailable")]
    NoConsent,
    #[error("{0} not found")]
    NotFound(String),
    #[error("step `{0}` is already correct and locked")]
    Locked(String),
    #[error("cannot parse input: {0}")]
    Parse(ParseError),
    #[error("{0}")]
    BadRequest(String),
    #[error("storage unavailable: {0}")]
    Storage(#[from] io::Error),
    #[error("transaction log record {index} cannot be replayed: {message}")]
    Corrupt { index: usize, message: String },
}

impl From<SelectError> for PlatformError {
    fn from(e: SelectError) -> Self {
        match e {
            SelectError::Domain(d) => d.into(),
            e @ (SelectError::MissingType | SelectError::WrongTutor { .. }) => PlatformError::BadRequest(e.to_string()),
        }
    }
}

impl From<DomainError> for PlatformError {
    fn from(e: DomainError) -> Self {
        match e {
            DomainError::UnknownTutor(_)
            | DomainError::UnknownType(_)
            | DomainError::UnknownInstance(_)
            | DomainError::UnknownStep { .. } => PlatformError::NotFound(e.to_string()),
            DomainError::StepAlreadyCorrect(slot) => PlatformError::Locked(slot),
            other => PlatformError::BadRequest(other.to_string()),
        }
    }
}

#[derive(Debug, Clone)]
struct ProblemState {
    solved: SolvedProblem,
    student_id: String,
    status: BTreeMap<String, StepStatus>,
    /// Keyed by (session id, slot).
    hint_levels: BTreeMap<(String, String), u8>,
    complete: bool,
}

fn hash_token(token: &str) -> String {
    Sha256::digest(token.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

pub struct Platform {
    catalog: Arc<Catalog>,
    clock: Box<dyn Clock>,
    rng: Box<dyn RngCore + Send>,
    storage: Box<dyn Storage>,
    session_ttl: Duration,
    sessions: BTreeMap<String, Session>,
    problems: BTreeMap<String, ProblemState>,
    mastery: MasteryStore,
}

pub struct PlatformOptions {
    pub catalog: Arc<Catalog>,
    pub mastery: MasteryConfig,
    pub session_ttl: Duration,
    pub clock: Box<dyn Clock>,
    pub rng: Box<dyn RngCore + Send>,
}

impl Platform {
    /// Load sessions and replay the stored log.
    pub fn open(options: PlatformOptions, storage: Box<dyn Storage>) -> Result<Platform, PlatformError> {
        let snapshot = storage.load()?;
        let records = storage.read_log()?;
        let mut p = Platform {
            mastery: MasteryStore::for_catalog(&options.catalog, options.mastery),
            catalog: options.catalog,
            clock: options.clock,
            rng: options.rng,
            storage,
            session_ttl: options.session_ttl,
            sessions: snapshot.sessions.into_iter().map(|s| (s.token_hash.clone(), s)).collect(),
            problems: BTreeMap::new(),
        };
        for (index, r) in records.iter().enumerate() {
            p.apply(r).map_err(|e| PlatformError::Corrupt {
                index,
                message: e.to_string(),
            })?;
        }
        log::info!("replayed {} transactions, {} sessions", records.len(), p.sessions.len());
        Ok(p)
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn mastery_store(&self) -> &MasteryStore {
        &self.mastery
    }

    pub fn read_log(&self) -> io::Result<Vec<TransactionRecord>> {
        self.storage.read_log()
    }

    /// Fold one logged record into memory. Shared by live requests and replay.
    pub fn apply(&mut self, r: &TransactionRecord) -> Result<(), PlatformError> {
        self.mastery.observe(r).map_err(|e| match e {
            KnowledgeError::UnknownKc(kc) => PlatformError::NotFound(format!("knowledge component `{kc}`")),
            other => PlatformError::BadRequest(other.to_string()),
        })?;
        let Some(id) = r.problem_instance_id.as_deref() else { return Ok(()) };
        if r.action == Action::Access {
            if !self.problems.contains_key(id) {
                let mut instance = self.catalog.regenerate(id)?;
                instance.created_at = Some(r.timestamp);
                let trace = self.catalog.solve(&instance)?;
                let pt = self.catalog.problem_type(&instance.problem_type_id)?;
                let status = pt.steps.iter().map(|s| (s.slot.clone(), StepStatus::Untouched)).collect();
                self.problems.insert(
                    id.to_string(),
                    ProblemState {
                        solved: SolvedProblem { instance, trace },
                        student_id: r.student_id.clone(),
                        status,
                        hint_levels: BTreeMap::new(),
                        complete: false,
                    },
                );
            }
            return Ok(());
        }
        let problem = self
            .problems
            .get_mut(id)
            .ok_or_else(|| PlatformError::NotFound(format!("problem `{id}`")))?;
        match (r.action, r.step_slot.as_deref()) {
            (Action::Attempt, Some(slot)) => {
                let s = problem.status.entry(slot.to_string()).or_insert(StepStatus::Untouched);
                if r.outcome == Outcome::Correct {
                    *s = StepStatus::Correct;
                } else if *s != StepStatus::Correct {
                    *s = StepStatus::Incorrect;
                }
            }
            (Action::Hint, Some(slot)) => {
                let level = r.hint_level.unwrap_or(1).min(MAX_HINT_LEVEL);
                let e = problem.hint_levels.entry((r.session_id.clone(), slot.to_string())).or_default();
                *e = (*e).max(level);
            }
            (Action::Done, _) if r.outcome == Outcome::Correct => problem.complete = true,
            _ => {}
        }
        Ok(())
    }

    fn commit(&mut self, record: TransactionRecord) -> Result<(), PlatformError> {
        self.storage.append(&record)?;
        self.apply(&record)
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot {
            sessions: self.sessions.values().cloned().collect(),
            mastery: serde_json::from_str(&self.mastery.to_json()).expect("store is JSON"),
        }
    }

    /// Persist sessions and the derived mastery copy.
    pub fn save(&mut self) -> Result<(), PlatformError> {
        let now = self.clock.now();
        self.sessions.retain(|_, s| s.expires_at > now);
        let snapshot = self.snapshot();
        self.storage.save(&snapshot)?;
        Ok(())
    }

    fn random_id(&mut self) -> String {
        let mut bytes = [0u8; 16];
        self.rng.fill_bytes(&mut bytes);
        URL_SAFE_NO_PAD.encode(bytes)
    }

    pub fn create_session(&mut self, student_id: &str, consent: bool) -> Result<SessionGrant, PlatformError> {
        let student_id = student_id.trim();
        if student_id.is_empty() {
            return Err(PlatformError::BadRequest("student_id must not be empty".into()));
        }
        let now = self.clock.now();
        let token = self.random_id();
        let session = Session {
            session_id: self.random_id(),
            token_hash: hash_token(&token),
            student_id: student_id.to_string(),
            consent,
            created_at: now,
            expires_at: now + self.session_ttl,
        };
        self.commit(TransactionRecord::new(now, student_id, &session.session_id, Action::Access, Outcome::NotApplicable))?;
        let grant = SessionGrant {
            token,
            session_id: session.session_id.clone(),
            student_id: session.student_id.clone(),
            consent,
            expires_at: session.expires_at,
        };
        let key = session.token_hash.clone();
        self.sessions.insert(key.clone(), session);
        if let Err(e) = self.save() {
            self.sessions.remove(&key);
            return Err(e);
        }
        Ok(grant)
    }

    /// The session behind `token`, checked for expiry and consent.
    fn authorize(&self, token: &str, now: DateTime<Utc>) -> Result<Session, PlatformError> {
        let s = self.sessions.get(&hash_token(token)).ok_or(PlatformError::Unauthorized)?;
        if s.expires_at <= now {
            return Err(PlatformError::Unauthorized);
        }
        if !s.consent {
            return Err(PlatformError::NoConsent);
        }
        Ok(s.clone())
    }

    pub fn list_catalog(&self, token: &str) -> Result<Vec<TutorListing>, PlatformError> {
        self.authorize(token, self.clock.now())?;
        Ok(self.catalog.list_catalog())
    }

    fn owned(&self, session: &Session, id: &str) -> Result<&ProblemState, PlatformError> {
        self.problems
            .get(id)
            .filter(|p| p.student_id == session.student_id)
            .ok_or_else(|| PlatformError::NotFound(format!("problem `{id}`")))
    }

    fn view(&self, p: &ProblemState, session: &Session) -> ProblemView {
        let inst = &p.solved.instance;
        let pt = self.catalog.problem_type(&inst.problem_type_id).expect("registered type");
        ProblemView {
            id: inst.id.clone(),
            tutor_id: inst.tutor_id.clone(),
            problem_type_id: inst.problem_type_id.clone(),
            name: pt.name.clone(),
            instructions: pt.instructions.clone(),
            statement: inst.statement_text.clone(),
            statement_latex: inst.statement_latex.clone(),
            created_at: inst.created_at,
            steps: pt
                .steps
                .iter()
                .map(|s| {
                    let status = p.status.get(&s.slot).copied().unwrap_or(StepStatus::Untouched);
                    StepView {
                        slot: s.slot.clone(),
                        prompt: s.prompt.clone(),
                        input_mode: s.input_mode,
                        kc_id: s.kc_id.clone(),
                        order: s.order,
                        status,
                        locked: status == StepStatus::Correct,
                        hint_level: p
                            .hint_levels
                            .get(&(session.session_id.clone(), s.slot.clone()))
                            .copied()
                            .unwrap_or(0),
                    }
                })
                .collect(),
            complete: p.complete,
        }
    }

    pub fn new_problem(
        &mut self,
        token: &str,
        tutor_id: &str,
        mode: Mode,
        problem_type: Option<String>,
    ) -> Result<NewProblem, PlatformError> {
        let now = self.clock.now();
        let session = self.authorize(token, now)?;
        let request = SelectionRequest {
            student_id: session.student_id.clone(),
            tutor_id: tutor_id.to_string(),
            mode,
            problem_type,
            seed: 0,
        };
        let (selection, solved) = next_problem(&request, &self.mastery, &self.catalog)?;
        let inst = &solved.instance;
        self.commit(TransactionRecord {
            tutor_id: Some(inst.tutor_id.clone()),
            problem_type_id: Some(inst.problem_type_id.clone()),
            problem_instance_id: Some(inst.id.clone()),
            ..TransactionRecord::new(now, &session.student_id, &session.session_id, Action::Access, Outcome::NotApplicable)
        })?;
        let problem = self.view(self.owned(&session, &inst.id)?, &session);
        Ok(NewProblem { problem, selection })
    }

    pub fn problem(&self, token: &str, id: &str) -> Result<ProblemView, PlatformError> {
        let session = self.authorize(token, self.clock.now())?;
        Ok(self.view(self.owned(&session, id)?, &session))
    }

    /// The problem, its type's step schema, and a record template for it.
    fn step_context(
        &self,
        session: &Session,
        id: &str,
        slot: &str,
        now: DateTime<Utc>,
    ) -> Result<(ProblemState, apprentice_core::domains::StepSchema, TransactionRecord), PlatformError> {
        let p = self.owned(session, id)?;
        let inst = &p.solved.instance;
        let pt = self.catalog.problem_type(&inst.problem_type_id)?;
        let step = pt
            .step(slot)
            .ok_or_else(|| PlatformError::NotFound(format!("step `{slot}` of problem `{id}`")))?
            .clone();
        if p.status.get(slot) == Some(&StepStatus::Correct) {
            return Err(PlatformError::Locked(slot.to_string()));
        }
        let record = TransactionRecord {
            tutor_id: Some(inst.tutor_id.clone()),
            problem_type_id: Some(inst.problem_type_id.clone()),
            problem_instance_id: Some(inst.id.clone()),
            step_slot: Some(slot.to_string()),
            kc_id: Some(step.kc_id.clone()),
            ..TransactionRecord::new(now, &session.student_id, &session.session_id, Action::Attempt, Outcome::Incorrect)
        };
        Ok((p.clone(), step, record))
    }

    pub fn attempt(&mut self, token: &str, id: &str, slot: &str, input: &str) -> Result<AttemptResult, PlatformError> {
        let now = self.clock.now();
        let session = self.authorize(token, now)?;
        let (p, step, template) = self.step_context(&session, id, slot, now)?;
        let value = Value::parse(step.input_mode, input).map_err(PlatformError::Parse)?;
        let check = p.solved.check(slot, &value).map_err(|e| PlatformError::BadRequest(e.to_string()))?;
        let kc_id = check.matched_kc.unwrap_or(step.kc_id);
        self.commit(TransactionRecord {
            kc_id: Some(kc_id.clone()),
            input: Some(input.to_string()),
            outcome: Outcome::from_bool(check.correct),
            ..template
        })?;
        Ok(AttemptResult {
            correct: check.correct,
            locked: check.correct,
            p_mastery_after: self.mastery.mastery(&session.student_id, &kc_id),
            kc_id,
        })
    }

    /// Next tier for this (session, problem, step), capped at the bottom-out.
    pub fn hint(&mut self, token: &str, id: &str, slot: &str) -> Result<HintView, PlatformError> {
        let now = self.clock.now();
        let session = self.authorize(token, now)?;
        let (p, _, template) = self.step_context(&session, id, slot, now)?;
        let shown = p.hint_levels.get(&(session.session_id.clone(), slot.to_string())).copied().unwrap_or(0);
        let level = (shown + 1).min(MAX_HINT_LEVEL);
        let hint = self.catalog.hint(&p.solved, slot, level, false)?;
        self.commit(TransactionRecord {
            action: Action::Hint,
            outcome: Outcome::NotApplicable,
            hint_level: Some(level),
            ..template
        })?;
        Ok(HintView {
            level,
            text: hint.text,
            highlight_slot: hint.highlight_slot,
            bottom_out_latex: hint.bottom_out_value.as_ref().map(|v| v.render(apprentice_core::expr::Format::Latex)),
            bottom_out_value: hint.bottom_out_value.map(|v| v.to_plain()),
        })
    }

    /// Complete iff every step is correct. Once complete, repeated calls
    /// answer the same and log nothing.
    pub fn done(&mut self, token: &str, id: &str) -> Result<DoneResult, PlatformError> {
        let now = self.clock.now();
        let session = self.authorize(token, now)?;
        let p = self.owned(&session, id)?;
        if p.complete {
            return Ok(DoneResult { complete: true });
        }
        let complete = p.status.values().all(|s| *s == StepStatus::Correct);
        let inst = &p.solved.instance;
        let record = TransactionRecord {
            tutor_id: Some(inst.tutor_id.clone()),
            problem_type_id: Some(inst.problem_type_id.clone()),
            problem_instance_id: Some(inst.id.clone()),
            ..TransactionRecord::new(now, &session.student_id, &session.session_id, Action::Done, Outcome::from_bool(complete))
        };
        self.commit(record)?;
        Ok(DoneResult { complete })
    }

    pub fn mastery_report(&self, token: &str) -> Result<(String, Vec<MasteryEntry>), PlatformError> {
        let session = self.authorize(token, self.clock.now())?;
        let report = self.mastery.mastery_report(&session.student_id, &self.catalog);
        Ok((session.student_id, report))
    }

    /// Funnel over the stored log. Caller checks admin credentials.
    pub fn funnel(&self, window: &TermWindow) -> Result<FunnelReport, PlatformError> {
        let records = self.storage.read_log()?;
        Ok(analytics::funnel(&records, window, &self.catalog))
    }
}
