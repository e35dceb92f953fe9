use serde::{Deserialize, Serialize};

use super::DomainError;
use crate::production::{ExpectedValue, ProductionRule};
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum HintLevel {
    /// Highlight the step and encourage; reveals nothing.
    Pointer = 1,
    /// Explain the strategy with the problem's numbers filled in.
    Strategy = 2,
    /// Reveal the step's value.
    BottomOut = 3,
}

impl TryFrom<u8> for HintLevel {
    type Error = DomainError;

    fn try_from(n: u8) -> Result<Self, DomainError> {
        match n {
            1 => Ok(HintLevel::Pointer),
            2 => Ok(HintLevel::Strategy),
            3 => Ok(HintLevel::BottomOut),
            _ => Err(DomainError::InvalidLevel(n)),
        }
    }
}

impl From<HintLevel> for u8 {
    fn from(l: HintLevel) -> u8 {
        l as u8
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hint {
    pub level: HintLevel,
    pub text: String,
    pub highlight_slot: String,
    pub bottom_out_value: Option<Value>,
}

fn placeholders(template: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        let Some(close) = rest[open..].find('}') else { break };
        out.push(&rest[open + 1..open + close]);
        rest = &rest[open + close + 1..];
    }
    out
}

/// Level 1 carries no placeholders, level 2 never names the derived value and
/// level 3 always does; every other placeholder is a condition variable.
pub(super) fn check_templates(rule: &ProductionRule) -> Result<(), String> {
    let [pointer, strategy, bottom] = &rule.hints;
    if !placeholders(pointer).is_empty() {
        return Err("level-1 hint must not contain placeholders".into());
    }
    if placeholders(strategy).contains(&"value") {
        return Err("level-2 hint must not reveal {value}".into());
    }
    if !placeholders(bottom).contains(&"value") {
        return Err("level-3 hint must reveal {value}".into());
    }
    for p in placeholders(strategy).into_iter().chain(placeholders(bottom)) {
        if p != "value" && !rule.conditions.iter().any(|c| c.bind == p) {
            return Err(format!("placeholder {{{p}}} is not a bound variable"));
        }
    }
    Ok(())
}

pub(super) fn render(
    rule: &ProductionRule,
    expected: &ExpectedValue<'_>,
    slot: &str,
    level: HintLevel,
) -> Hint {
    let template = &rule.hints[level as usize - 1];
    let mut text = template.clone();
    if level != HintLevel::Pointer {
        for (name, value) in expected.bindings {
            text = text.replace(&format!("{{{name}}}"), &value.to_plain());
        }
    }
    if level == HintLevel::BottomOut {
        text = text.replace("{value}", &expected.value.to_plain());
    }
    Hint {
        level,
        text,
        highlight_slot: slot.to_string(),
        bottom_out_value: (level == HintLevel::BottomOut).then(|| expected.value.clone()),
    }
}
