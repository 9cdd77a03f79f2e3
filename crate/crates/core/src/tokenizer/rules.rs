//! Token rules as data.
//!
//! A rule is an ordered list of parts. Parts are written as a field name
//! with an optional modifier: `ssn`, `ssn[last4]`, `first_name[3]`,
//! `middle_name[initial]`, `birth_date[year]`, `last_name[soundex]`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RuleError {
    #[error("cannot parse token part `{0}`")]
    Part(String),
    #[error("rule {0} has no parts")]
    Empty(TokenId),
    #[error("rule id {0} defined twice")]
    DuplicateId(TokenId),
    #[error("rule id 0 is reserved")]
    ZeroId,
    #[error("cannot parse rule table: {0}")]
    Table(String),
}

/// Rule identifier. The built-in table uses 1 to 20.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(pub u16);

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Standardized element a token can draw on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Element {
    Ssn,
    FirstName,
    MiddleName,
    LastName,
    BirthDate,
}

impl Element {
    pub fn as_str(self) -> &'static str {
        match self {
            Element::Ssn => "ssn",
            Element::FirstName => "first_name",
            Element::MiddleName => "middle_name",
            Element::LastName => "last_name",
            Element::BirthDate => "birth_date",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "ssn" => Element::Ssn,
            "first_name" => Element::FirstName,
            "middle_name" => Element::MiddleName,
            "last_name" => Element::LastName,
            "birth_date" => Element::BirthDate,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenPart {
    Full(Element),
    /// Digits 6 to 9 of the SSN.
    SsnLast4,
    /// First `n` characters, or the whole value when shorter.
    Prefix(Element, usize),
    Initial(Element),
    /// `YYYY` of a `YYYYMMDD` date.
    Year(Element),
    Soundex(Element),
}

impl TokenPart {
    pub fn element(self) -> Element {
        match self {
            TokenPart::SsnLast4 => Element::Ssn,
            TokenPart::Full(e)
            | TokenPart::Prefix(e, _)
            | TokenPart::Initial(e)
            | TokenPart::Year(e)
            | TokenPart::Soundex(e) => e,
        }
    }

    /// Human label such as "ssn (last 4) + birth_date".
    pub fn describe(self) -> String {
        match self {
            TokenPart::Full(e) => e.as_str().to_string(),
            TokenPart::SsnLast4 => "ssn (last 4)".to_string(),
            TokenPart::Prefix(e, n) => format!("1st {n} characters of {}", e.as_str()),
            TokenPart::Initial(e) => format!("1st initial of {}", e.as_str()),
            TokenPart::Year(e) => format!("YYYY of {}", e.as_str()),
            TokenPart::Soundex(e) => format!("{} (soundex)", e.as_str()),
        }
    }
}

impl fmt::Display for TokenPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenPart::Full(e) => write!(f, "{}", e.as_str()),
            TokenPart::SsnLast4 => write!(f, "ssn[last4]"),
            TokenPart::Prefix(e, n) => write!(f, "{}[{n}]", e.as_str()),
            TokenPart::Initial(e) => write!(f, "{}[initial]", e.as_str()),
            TokenPart::Year(e) => write!(f, "{}[year]", e.as_str()),
            TokenPart::Soundex(e) => write!(f, "{}[soundex]", e.as_str()),
        }
    }
}

impl FromStr for TokenPart {
    type Err = RuleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || RuleError::Part(s.to_string());
        let s = s.trim();
        let (name, modifier) = match s.split_once('[') {
            Some((name, rest)) => (name.trim(), Some(rest.strip_suffix(']').ok_or_else(err)?.trim())),
            None => (s, None),
        };
        let element = Element::parse(name).ok_or_else(err)?;
        Ok(match modifier {
            None => TokenPart::Full(element),
            Some("last4") if element == Element::Ssn => TokenPart::SsnLast4,
            Some("initial") => TokenPart::Initial(element),
            Some("year") if element == Element::BirthDate => TokenPart::Year(element),
            Some("soundex") if !matches!(element, Element::Ssn | Element::BirthDate) => TokenPart::Soundex(element),
            Some(n) => match n.parse::<usize>() {
                Ok(n) if n > 0 => TokenPart::Prefix(element, n),
                _ => return Err(err()),
            },
        })
    }
}

impl Serialize for TokenPart {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TokenPart {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenRule {
    pub id: TokenId,
    pub parts: Vec<TokenPart>,
}

impl TokenRule {
    pub fn new(id: u16, parts: &[&str]) -> Result<Self, RuleError> {
        let parts = parts.iter().map(|p| p.parse()).collect::<Result<Vec<_>, _>>()?;
        let rule = TokenRule { id: TokenId(id), parts };
        if rule.parts.is_empty() {
            return Err(RuleError::Empty(rule.id));
        }
        Ok(rule)
    }

    pub fn elements(&self) -> BTreeSet<Element> {
        self.parts.iter().map(|p| p.element()).collect()
    }

    pub fn describe(&self) -> String {
        self.parts.iter().map(|p| p.describe()).collect::<Vec<_>>().join(" + ")
    }
}

const BUILTIN: [(u16, &[&str]); 20] = [
    (1, &["ssn", "last_name", "middle_name", "first_name", "birth_date"]),
    (2, &["ssn", "last_name", "first_name", "birth_date"]),
    (3, &["ssn", "birth_date"]),
    (4, &["ssn", "birth_date[year]", "first_name", "last_name"]),
    (5, &["ssn", "last_name", "middle_name", "first_name"]),
    (6, &["ssn"]),
    (7, &["ssn[last4]", "last_name", "middle_name", "first_name", "birth_date"]),
    (8, &["ssn[last4]", "birth_date"]),
    (9, &["last_name", "middle_name", "first_name", "birth_date"]),
    (10, &["last_name", "middle_name", "first_name", "birth_date[year]"]),
    (11, &["last_name", "first_name", "birth_date"]),
    (12, &["last_name", "middle_name[initial]", "first_name"]),
    (13, &["last_name", "first_name[3]", "birth_date"]),
    (14, &["last_name", "first_name[initial]", "birth_date"]),
    (15, &["last_name[soundex]", "middle_name[soundex]", "first_name[soundex]", "birth_date"]),
    (16, &["last_name[soundex]", "middle_name[soundex]", "first_name[soundex]", "birth_date[year]"]),
    (17, &["last_name[soundex]", "first_name[soundex]", "birth_date"]),
    (18, &["last_name"]),
    (19, &["first_name"]),
    (20, &["birth_date"]),
];

/// Ordered, id-unique set of rules.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RuleTable {
    rules: Vec<TokenRule>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleFile {
    #[serde(default = "default_true")]
    include_builtin: bool,
    #[serde(default, rename = "rule")]
    rules: Vec<TokenRule>,
}

fn default_true() -> bool {
    true
}

impl Default for RuleTable {
    fn default() -> Self {
        Self::builtin()
    }
}

impl RuleTable {
    /// The twenty standard rules.
    pub fn builtin() -> Self {
        let rules = BUILTIN
            .iter()
            .map(|(id, parts)| TokenRule::new(*id, parts).expect("built-in rule parses"))
            .collect();
        RuleTable { rules }
    }

    pub fn new(rules: Vec<TokenRule>) -> Result<Self, RuleError> {
        let mut seen = BTreeSet::new();
        for r in &rules {
            if r.id.0 == 0 {
                return Err(RuleError::ZeroId);
            }
            if r.parts.is_empty() {
                return Err(RuleError::Empty(r.id));
            }
            if !seen.insert(r.id) {
                return Err(RuleError::DuplicateId(r.id));
            }
        }
        Ok(RuleTable { rules })
    }

    /// Parse a TOML rule file:
    ///
    /// ```toml
    /// include_builtin = true
    /// [[rule]]
    /// id = 21
    /// parts = ["last_name[soundex]", "birth_date[year]"]
    /// ```
    pub fn from_toml(text: &str) -> Result<Self, RuleError> {
        let file: RuleFile = toml::from_str(text).map_err(|e| RuleError::Table(e.to_string()))?;
        let mut rules = if file.include_builtin { Self::builtin().rules } else { Vec::new() };
        rules.extend(file.rules);
        Self::new(rules)
    }

    pub fn rules(&self) -> &[TokenRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn position(&self, id: TokenId) -> Option<usize> {
        self.rules.iter().position(|r| r.id == id)
    }

    pub fn get(&self, id: TokenId) -> Option<&TokenRule> {
        self.rules.iter().find(|r| r.id == id)
    }

    pub fn ids(&self) -> impl Iterator<Item = TokenId> + '_ {
        self.rules.iter().map(|r| r.id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn part_syntax_round_trips() {
        for s in ["ssn", "ssn[last4]", "first_name[3]", "middle_name[initial]", "birth_date[year]", "last_name[soundex]"] {
            let p: TokenPart = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        for bad in ["ssn[soundex]", "dob", "first_name[0]", "first_name[last4]", "last_name[year]", "ssn[3"] {
            assert!(bad.parse::<TokenPart>().is_err(), "{bad}");
        }
    }

    #[test]
    fn builtin_descriptions() {
        let t = RuleTable::builtin();
        assert_eq!(t.len(), 20);
        let d = |id| t.get(TokenId(id)).unwrap().describe();
        assert_eq!(d(3), "ssn + birth_date");
        assert_eq!(d(7), "ssn (last 4) + last_name + middle_name + first_name + birth_date");
        assert_eq!(d(4), "ssn + YYYY of birth_date + first_name + last_name");
        assert_eq!(d(13), "last_name + 1st 3 characters of first_name + birth_date");
        assert_eq!(d(17), "last_name (soundex) + first_name (soundex) + birth_date");
    }

    #[test]
    fn table_file_extends_builtin() {
        let t = RuleTable::from_toml("[[rule]]\nid = 21\nparts = [\"last_name[soundex]\", \"birth_date[year]\"]\n").unwrap();
        assert_eq!(t.len(), 21);
        assert_eq!(t.position(TokenId(21)), Some(20));
        let dup = RuleTable::from_toml("[[rule]]\nid = 3\nparts = [\"ssn\"]\n");
        assert_eq!(dup, Err(RuleError::DuplicateId(TokenId(3))));
        let only = RuleTable::from_toml("include_builtin = false\n[[rule]]\nid = 1\nparts = [\"ssn\"]\n").unwrap();
        assert_eq!(only.len(), 1);
    }
}
