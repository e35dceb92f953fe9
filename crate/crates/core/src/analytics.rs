//! Adoption funnels and per-term usage tables computed from the log.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::domains::Catalog;
use crate::transactions::{Action, Outcome, TransactionRecord};

/// A percentage held in exact hundredths, rounded half-up from the ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Percent(u64);

impl Percent {
    /// `100 * num / den` rounded half-up to two decimals; zero when `den` is 0.
    pub fn of(num: u64, den: u64) -> Percent {
        if den == 0 {
            return Percent(0);
        }
        let (n, d) = (num as u128, den as u128);
        Percent(((20_000 * n + d) / (2 * d)) as u64)
    }

    pub fn hundredths(self) -> u64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

impl Serialize for Percent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for Percent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Ok(Percent((v * 100.0).round() as u64))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermWindow {
    pub cycle: u32,
    pub term: String,
    /// Inclusive.
    pub start: NaiveDate,
    /// Inclusive.
    pub end: NaiveDate,
    pub roster: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes_deployed: Option<u32>,
}

impl TermWindow {
    pub fn contains(&self, r: &TransactionRecord) -> bool {
        let d = r.timestamp.date_naive();
        self.start <= d && d <= self.end
    }
}

/// Students by number of problems finished: 0, 1, 2, 3, 4, 5 or more.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram(pub [u64; 6]);

impl Histogram {
    fn add(&mut self, finished: usize) {
        self.0[finished.min(5)] += 1;
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunnelReport {
    pub students_with_access: u64,
    pub students_with_interaction: u64,
    pub percent_used: Percent,
    pub students_finished_one: u64,
    /// Share of interacting students.
    pub percent_users_finished_one: Percent,
    pub students_finished_five: u64,
    /// Share of students who finished at least one problem.
    pub percent_finishers_finished_five: Percent,
    pub histogram: Histogram,
}

impl FunnelReport {
    /// Report from aggregate counts alone; the histogram stays empty.
    pub fn from_counts(access: u64, interaction: u64, finished_one: u64, finished_five: u64) -> Self {
        FunnelReport {
            students_with_access: access,
            students_with_interaction: interaction,
            percent_used: Percent::of(interaction, access),
            students_finished_one: finished_one,
            percent_users_finished_one: Percent::of(finished_one, interaction),
            students_finished_five: finished_five,
            percent_finishers_finished_five: Percent::of(finished_five, finished_one),
            histogram: Histogram::default(),
        }
    }

    pub fn is_monotone(&self) -> bool {
        self.students_with_access >= self.students_with_interaction
            && self.students_with_interaction >= self.students_finished_one
            && self.students_finished_one >= self.students_finished_five
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetentionSummary {
    pub users: u64,
    pub finished_one: u64,
    pub percent_users_finished_one: Percent,
    pub finished_five: u64,
    pub percent_finishers_finished_five: Percent,
}

impl RetentionSummary {
    pub fn from_counts(users: u64, finished_one: u64, finished_five: u64) -> Self {
        RetentionSummary {
            users,
            finished_one,
            percent_users_finished_one: Percent::of(finished_one, users),
            finished_five,
            percent_finishers_finished_five: Percent::of(finished_five, finished_one),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalyticsError {
    #[error("window for cycle {0} must start before it ends")]
    EmptyWindow(u32),
    #[error("windows for cycles {0} and {1} overlap")]
    Overlap(u32, u32),
}

/// Finished problems per interacting student. A problem is finished when a
/// `done` record follows correct attempts on every step of its type.
fn finished_per_student<'a>(
    records: impl IntoIterator<Item = &'a TransactionRecord>,
    catalog: &Catalog,
) -> BTreeMap<&'a str, usize> {
    let mut students: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut correct: BTreeMap<(&str, &str), BTreeSet<&str>> = BTreeMap::new();
    for r in records {
        let finished = students.entry(&r.student_id).or_default();
        let Some(inst) = r.problem_instance_id.as_deref() else { continue };
        let key = (r.student_id.as_str(), inst);
        match r.action {
            Action::Attempt if r.outcome == Outcome::Correct => {
                if let Some(slot) = r.step_slot.as_deref() {
                    correct.entry(key).or_default().insert(slot);
                }
            }
            Action::Done => {
                let Some(pt) = r.problem_type_id.as_deref().and_then(|t| catalog.problem_type(t).ok()) else {
                    continue;
                };
                let solved = correct.get(&key);
                if pt.steps.iter().all(|s| solved.is_some_and(|c| c.contains(s.slot.as_str()))) {
                    finished.insert(inst);
                }
            }
            _ => {}
        }
    }
    students.into_iter().map(|(s, f)| (s, f.len())).collect()
}

/// Funnel for one window. `roster` (students with access) is not derivable
/// from the log and comes from the window.
pub fn funnel(records: &[TransactionRecord], window: &TermWindow, catalog: &Catalog) -> FunnelReport {
    let finished = finished_per_student(records.iter().filter(|r| window.contains(r)), catalog);
    let mut histogram = Histogram::default();
    for n in finished.values() {
        histogram.add(*n);
    }
    let one = finished.values().filter(|n| **n >= 1).count() as u64;
    let five = finished.values().filter(|n| **n >= 5).count() as u64;
    FunnelReport {
        histogram,
        ..FunnelReport::from_counts(window.roster, finished.len() as u64, one, five)
    }
}

/// Finishing rates over the whole log.
pub fn retention_summary(records: &[TransactionRecord], catalog: &Catalog) -> RetentionSummary {
    let finished = finished_per_student(records, catalog);
    RetentionSummary::from_counts(
        finished.len() as u64,
        finished.values().filter(|n| **n >= 1).count() as u64,
        finished.values().filter(|n| **n >= 5).count() as u64,
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermRow {
    pub window: TermWindow,
    pub report: FunnelReport,
}

pub fn check_windows(windows: &[TermWindow]) -> Result<(), AnalyticsError> {
    for w in windows {
        if w.start >= w.end {
            return Err(AnalyticsError::EmptyWindow(w.cycle));
        }
    }
    for (i, a) in windows.iter().enumerate() {
        for b in &windows[i + 1..] {
            if a.start <= b.end && b.start <= a.end {
                return Err(AnalyticsError::Overlap(a.cycle, b.cycle));
            }
        }
    }
    Ok(())
}

/// One funnel per cycle, in window order.
pub fn term_table(
    records: &[TransactionRecord],
    windows: &[TermWindow],
    catalog: &Catalog,
) -> Result<Vec<TermRow>, AnalyticsError> {
    check_windows(windows)?;
    Ok(windows
        .iter()
        .map(|w| TermRow {
            window: w.clone(),
            report: funnel(records, w, catalog),
        })
        .collect())
}

/// Aligned plain-text rendering of a term table.
pub fn render_table(rows: &[TermRow]) -> String {
    let header = [
        "cycle", "term", "start", "end", "classes", "access", "interaction", "% used",
        "finished>=1", "% users", "finished>=5", "% finishers",
    ];
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let w = &r.window;
            let f = &r.report;
            vec![
                w.cycle.to_string(),
                w.term.clone(),
                w.start.to_string(),
                w.end.to_string(),
                w.classes_deployed.map_or("-".into(), |c| c.to_string()),
                f.students_with_access.to_string(),
                f.students_with_interaction.to_string(),
                format!("{}%", f.percent_used),
                f.students_finished_one.to_string(),
                format!("{}%", f.percent_users_finished_one),
                f.students_finished_five.to_string(),
                format!("{}%", f.percent_finishers_finished_five),
            ]
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|i| body.iter().map(|r| r[i].len()).chain([header[i].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: Vec<String>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    let mut out = line(header.iter().map(|s| s.to_string()).collect());
    out.push('\n');
    for r in body {
        out.push_str(&line(r));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    #[test]
    fn half_up_rounding() {
        assert_eq!(Percent::of(47, 76).to_string(), "61.84");
        assert_eq!(Percent::of(8, 47).to_string(), "17.02");
        assert_eq!(Percent::of(520, 3510).to_string(), "14.81");
        assert_eq!(Percent::of(1, 8).to_string(), "12.50");
        assert_eq!(Percent::of(1, 800).to_string(), "0.13");
        assert_eq!(Percent::of(1, 0).to_string(), "0.00");
        assert_eq!(Percent::of(3, 3).to_string(), "100.00");
    }

    fn window(cycle: u32, start: (i32, u32, u32), end: (i32, u32, u32)) -> TermWindow {
        TermWindow {
            cycle,
            term: format!("T{cycle}"),
            start: NaiveDate::from_ymd_opt(start.0, start.1, start.2).unwrap(),
            end: NaiveDate::from_ymd_opt(end.0, end.1, end.2).unwrap(),
            roster: 10,
            classes_deployed: None,
        }
    }

    #[test]
    fn overlapping_windows_are_rejected() {
        let a = window(1, (2022, 1, 3), (2022, 5, 6));
        let b = window(2, (2022, 5, 6), (2022, 8, 1));
        assert_eq!(check_windows(&[a.clone(), b]), Err(AnalyticsError::Overlap(1, 2)));
        let b = window(2, (2022, 5, 7), (2022, 8, 1));
        assert!(check_windows(&[a, b]).is_ok());
        let c = window(3, (2022, 5, 7), (2022, 5, 7));
        assert_eq!(check_windows(&[c]), Err(AnalyticsError::EmptyWindow(3)));
    }

    #[test]
    fn completion_needs_every_step_and_done() {
        let c = Catalog::builtin();
        let t = |s| Utc.with_ymd_and_hms(2022, 2, 1, 0, 0, s).unwrap();
        let base = |s, action, outcome| TransactionRecord {
            tutor_id: Some("exponents".into()),
            problem_type_id: Some("exponent-product".into()),
            problem_instance_id: Some("p".into()),
            ..TransactionRecord::new(t(s), "a", "x", action, outcome)
        };
        let step = |s, slot: &str| TransactionRecord {
            step_slot: Some(slot.into()),
            kc_id: Some("k".into()),
            input: Some("1".into()),
            ..base(s, Action::Attempt, Outcome::Correct)
        };
        let w = window(1, (2022, 1, 3), (2022, 5, 6));
        let partial = vec![step(1, "exponent_sum"), base(2, Action::Done, Outcome::Incorrect)];
        let r = funnel(&partial, &w, &c);
        assert_eq!((r.students_with_interaction, r.students_finished_one), (1, 0));
        assert_eq!(r.histogram.0, [1, 0, 0, 0, 0, 0]);

        let full = vec![step(1, "exponent_sum"), step(2, "answer"), base(3, Action::Done, Outcome::Correct)];
        let r = funnel(&full, &w, &c);
        assert_eq!(r.students_finished_one, 1);
        assert_eq!(r.percent_users_finished_one.to_string(), "100.00");

        let outside = window(2, (2023, 1, 1), (2023, 2, 1));
        assert_eq!(funnel(&full, &outside, &c).students_with_interaction, 0);
    }
}
