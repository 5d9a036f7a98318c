//! Prompt templates for evidence selection and citation judging, and
//! parsing of judge verdicts.

use serde::{Deserialize, Serialize};

/// Evidence-selector template with `{excerpt_md}` and `{query}` slots.
pub const EVIDENCE_SELECTOR_TEMPLATE: &str = include_str!("prompts/evidence_selector.txt");

/// Judge instructions. They carry no slots; the question and citation are
/// appended after them.
pub const JUDGE_TEMPLATE: &str = include_str!("prompts/judge.txt");

const JUDGE_FORMAT: &str = "Respond with a JSON object with the fields \
helps_answer_question (true or false), helpful_citation_part, answered_question_part \
and reasoning.\n";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("query is empty")]
    EmptyQuery,
}

/// Fills `{name}` slots in one left-to-right pass; substituted text is
/// never scanned again, so braces in values pass through literally.
pub fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'scan: while let Some(i) = rest.find('{') {
        out.push_str(&rest[..i]);
        let tail = &rest[i..];
        for (name, value) in values {
            let slot_len = name.len() + 2;
            if tail.len() >= slot_len
                && tail[1..].starts_with(name)
                && tail.as_bytes()[slot_len - 1] == b'}'
            {
                out.push_str(value);
                rest = &tail[slot_len..];
                continue 'scan;
            }
        }
        out.push('{');
        rest = &tail[1..];
    }
    out.push_str(rest);
    out
}

pub fn evidence_selector_prompt(excerpt_md: &str, query: &str) -> Result<String, PromptError> {
    if query.trim().is_empty() {
        return Err(PromptError::EmptyQuery);
    }
    Ok(fill(
        EVIDENCE_SELECTOR_TEMPLATE,
        &[("excerpt_md", excerpt_md), ("query", query)],
    ))
}

pub fn judge_prompt(question: &str, citation: &str) -> String {
    format!("{JUDGE_TEMPLATE}\nQUESTION:\n{question}\n\nCITATION:\n{citation}\n\n{JUDGE_FORMAT}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Helpful,
    NotHelpful,
}

#[derive(Deserialize)]
struct JudgeJson {
    helps_answer_question: serde_json::Value,
}

/// Reads a judge reply: a JSON object with `helps_answer_question`, or a
/// reply that starts with YES or NO. Anything else is unparseable.
pub fn parse_verdict(raw: &str) -> Option<Verdict> {
    if let Some(v) = first_json_object(raw).and_then(|o| serde_json::from_str::<JudgeJson>(o).ok()) {
        return match v.helps_answer_question {
            serde_json::Value::Bool(b) => Some(if b { Verdict::Helpful } else { Verdict::NotHelpful }),
            serde_json::Value::String(s) => yes_no(&s),
            _ => None,
        };
    }
    yes_no(raw)
}

fn yes_no(s: &str) -> Option<Verdict> {
    let word: String = s
        .trim_start_matches(|c: char| !c.is_alphanumeric())
        .chars()
        .take_while(|c| c.is_alphanumeric())
        .collect();
    match word.to_ascii_lowercase().as_str() {
        "yes" | "true" => Some(Verdict::Helpful),
        "no" | "false" => Some(Verdict::NotHelpful),
        _ => None,
    }
}

/// The first balanced `{...}` span that parses as JSON.
fn first_json_object(s: &str) -> Option<&str> {
    for (start, _) in s.match_indices('{') {
        let mut de = serde_json::Deserializer::from_str(&s[start..]).into_iter::<serde_json::Value>();
        if let Some(Ok(serde_json::Value::Object(_))) = de.next() {
            return Some(&s[start..start + de.byte_offset()]);
        }
    }
    None
}

/// `"H/T (0.xxx)"`, or `"0/0 (n/a)"` when nothing was judged.
pub fn format_ratio(helpful: usize, total: usize) -> String {
    if total == 0 {
        return "0/0 (n/a)".to_string();
    }
    format!("{helpful}/{total} ({:.3})", helpful as f64 / total as f64)
}
