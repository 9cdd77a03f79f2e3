//! Linkage token generation.
//!
//! A token is the plain concatenation of its parts, so it is only as good
//! as its weakest element: if any element a rule refers to is not valid the
//! token is null.

mod rules;
mod soundex;

use std::io::Write;

pub use rules::{Element, RuleError, RuleTable, TokenId, TokenPart, TokenRule};
pub use soundex::soundex;

use crate::normalizer::CleanRecord;

fn element_value(rec: &CleanRecord, e: Element) -> Option<&str> {
    match e {
        Element::Ssn => rec.ssn.value(),
        Element::FirstName => rec.first_name.value(),
        Element::MiddleName => rec.middle_name.value(),
        Element::LastName => rec.last_name.value(),
        Element::BirthDate => rec.birth_date.value(),
    }
}

fn push_part(out: &mut String, part: TokenPart, value: &str) -> Option<()> {
    match part {
        TokenPart::Full(_) => out.push_str(value),
        TokenPart::SsnLast4 => out.push_str(value.get(5..9)?),
        TokenPart::Prefix(_, n) => out.extend(value.chars().take(n)),
        TokenPart::Initial(_) => out.push(value.chars().next()?),
        TokenPart::Year(_) => out.push_str(value.get(0..4)?),
        TokenPart::Soundex(_) => out.push_str(&soundex(value)?),
    }
    Some(())
}

/// Token for one rule, or `None` unless every referenced element is valid.
pub fn generate_token(rule: &TokenRule, rec: &CleanRecord) -> Option<String> {
    let mut out = String::with_capacity(32);
    for &part in &rule.parts {
        let value = element_value(rec, part.element())?;
        push_part(&mut out, part, value)?;
    }
    Some(out)
}

/// All tokens for one record, aligned with the rule table order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSet {
    pub record_id: String,
    pub tokens: Vec<Option<String>>,
}

impl TokenSet {
    pub fn get(&self, rules: &RuleTable, id: TokenId) -> Option<&str> {
        self.tokens.get(rules.position(id)?)?.as_deref()
    }
}

pub fn generate_all(rec: &CleanRecord, rules: &RuleTable) -> TokenSet {
    TokenSet {
        record_id: rec.record_id.clone(),
        tokens: rules.rules().iter().map(|r| generate_token(r, rec)).collect(),
    }
}

/// Write `record_id,token_id,token_value` rows for non-null tokens.
pub fn write_token_dump<W: Write>(sets: &[TokenSet], rules: &RuleTable, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["record_id", "token_id", "token_value"])?;
    for set in sets {
        for (rule, tok) in rules.rules().iter().zip(&set.tokens) {
            if let Some(t) = tok {
                w.write_record([set.record_id.as_str(), &rule.id.to_string(), t])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
