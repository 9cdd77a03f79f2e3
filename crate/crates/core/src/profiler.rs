//! Completeness, distinctiveness and invalidity of fields and tokens.
//!
//! Field completeness is measured on the raw value: a present value that
//! fails validation is both complete and invalid. Distinct counts the number
//! of different values, not the number of values seen once.
//!
//! Accumulators merge, so shards of a dataset can be profiled separately.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashSet};
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{RawRecord, Role};
use crate::normalizer::{normalize_digits, validate_ssn, CleanRecord, FieldStatus, SsnInvalid, ValidityConfig};
use crate::tokenizer::{generate_token, RuleTable, TokenId, TokenSet};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProfileError {
    #[error("`{0}` is not a profileable field")]
    UnknownField(String),
    #[error("token id {0} is not in the rule table")]
    UnknownToken(TokenId),
}

/// Fields reported in the field profile, in report order.
pub const PROFILE_FIELDS: [Role; 6] =
    [Role::Ssn, Role::LastName, Role::FirstName, Role::MiddleName, Role::DeathDate, Role::BirthDate];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistinctMode {
    #[default]
    Exact,
    /// HyperLogLog estimate, about 0.8% standard error.
    Approximate,
}

const HLL_BITS: u32 = 14;

#[derive(Debug, Clone)]
enum DistinctSet {
    Exact(HashSet<Box<str>>),
    Approximate(Vec<u8>),
}

/// Distinct-value counter with an exact and an approximate backing.
#[derive(Debug, Clone)]
pub struct DistinctCounter(DistinctSet);

impl DistinctCounter {
    pub fn new(mode: DistinctMode) -> Self {
        DistinctCounter(match mode {
            DistinctMode::Exact => DistinctSet::Exact(HashSet::new()),
            DistinctMode::Approximate => DistinctSet::Approximate(vec![0; 1 << HLL_BITS]),
        })
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.0, DistinctSet::Exact(_))
    }

    pub fn insert(&mut self, value: &str) {
        match &mut self.0 {
            DistinctSet::Exact(set) => {
                if !set.contains(value) {
                    set.insert(value.into());
                }
            }
            DistinctSet::Approximate(regs) => {
                let mut h = DefaultHasher::new();
                value.hash(&mut h);
                let x = h.finish();
                let idx = (x >> (64 - HLL_BITS)) as usize;
                let rank = ((x << HLL_BITS) | (1 << (HLL_BITS - 1))).leading_zeros() as u8 + 1;
                regs[idx] = regs[idx].max(rank);
            }
        }
    }

    pub fn merge(&mut self, other: DistinctCounter) {
        match (&mut self.0, other.0) {
            (DistinctSet::Exact(a), DistinctSet::Exact(b)) => a.extend(b),
            (DistinctSet::Approximate(a), DistinctSet::Approximate(b)) => {
                for (x, y) in a.iter_mut().zip(b) {
                    *x = (*x).max(y);
                }
            }
            (DistinctSet::Approximate(a), DistinctSet::Exact(b)) => {
                let mut tmp = DistinctCounter(DistinctSet::Approximate(std::mem::take(a)));
                for v in b {
                    tmp.insert(&v);
                }
                *self = tmp;
            }
            (DistinctSet::Exact(a), DistinctSet::Approximate(b)) => {
                let mut tmp = DistinctCounter(DistinctSet::Approximate(b));
                for v in a.drain() {
                    tmp.insert(&v);
                }
                *self = tmp;
            }
        }
    }

    pub fn count(&self) -> u64 {
        match &self.0 {
            DistinctSet::Exact(set) => set.len() as u64,
            DistinctSet::Approximate(regs) => {
                let m = regs.len() as f64;
                let sum: f64 = regs.iter().map(|&r| 2f64.powi(-i32::from(r))).sum();
                let alpha = 0.7213 / (1.0 + 1.079 / m);
                let estimate = alpha * m * m / sum;
                let zeros = regs.iter().filter(|&&r| r == 0).count();
                if estimate <= 2.5 * m && zeros > 0 {
                    (m * (m / zeros as f64).ln()).round() as u64
                } else {
                    estimate.round() as u64
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldProfile {
    pub field: Role,
    pub complete: u64,
    pub distinct: u64,
    pub invalid: u64,
    pub total_records: u64,
    pub distinct_exact: bool,
}

/// Mergeable partial field profile.
#[derive(Debug, Clone)]
pub struct FieldAccumulator {
    field: Role,
    complete: u64,
    invalid: u64,
    total: u64,
    distinct: DistinctCounter,
}

impl FieldAccumulator {
    pub fn new(field: Role, mode: DistinctMode) -> Result<Self, ProfileError> {
        if !PROFILE_FIELDS.contains(&field) {
            return Err(ProfileError::UnknownField(field.to_string()));
        }
        Ok(FieldAccumulator { field, complete: 0, invalid: 0, total: 0, distinct: DistinctCounter::new(mode) })
    }

    pub fn add(&mut self, raw: &RawRecord, clean: &CleanRecord) {
        self.total += 1;
        let Some(value) = raw.get(self.field).filter(|v| !v.trim().is_empty()) else {
            return;
        };
        self.complete += 1;
        self.distinct.insert(value);
        if clean.field(self.field).map(|c| c.status()) == Some(FieldStatus::Invalid) {
            self.invalid += 1;
        }
    }

    pub fn merge(&mut self, other: FieldAccumulator) {
        debug_assert_eq!(self.field, other.field);
        self.complete += other.complete;
        self.invalid += other.invalid;
        self.total += other.total;
        self.distinct.merge(other.distinct);
    }

    pub fn finish(&self) -> FieldProfile {
        FieldProfile {
            field: self.field,
            complete: self.complete,
            distinct: self.distinct.count(),
            invalid: self.invalid,
            total_records: self.total,
            distinct_exact: self.distinct.is_exact(),
        }
    }
}

/// Profile one field over paired raw and cleaned records.
pub fn profile_field(raw: &[RawRecord], clean: &[CleanRecord], field: Role) -> Result<FieldProfile, ProfileError> {
    let mut acc = FieldAccumulator::new(field, DistinctMode::Exact)?;
    for (r, c) in raw.iter().zip(clean) {
        acc.add(r, c);
    }
    Ok(acc.finish())
}

/// Profile a field given by name, e.g. from a config file.
pub fn profile_field_named(raw: &[RawRecord], clean: &[CleanRecord], field: &str) -> Result<FieldProfile, ProfileError> {
    let role: Role = field.parse().map_err(|_| ProfileError::UnknownField(field.to_string()))?;
    profile_field(raw, clean, role)
}

pub fn profile_fields(raw: &[RawRecord], clean: &[CleanRecord]) -> Vec<FieldProfile> {
    PROFILE_FIELDS
        .iter()
        .map(|&f| profile_field(raw, clean, f).expect("profile field"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenProfile {
    pub token_id: TokenId,
    pub complete: u64,
    pub complete_pct: f64,
    pub distinct: u64,
    pub distinct_pct: f64,
    pub total_records: u64,
    pub distinct_exact: bool,
}

fn ratio(n: u64, d: u64) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

fn token_profile(token_id: TokenId, complete: u64, distinct: &DistinctCounter, total: u64) -> TokenProfile {
    let d = distinct.count();
    TokenProfile {
        token_id,
        complete,
        complete_pct: ratio(complete, total),
        distinct: d,
        distinct_pct: ratio(d, total),
        total_records: total,
        distinct_exact: distinct.is_exact(),
    }
}

/// Profile one token over generated token sets.
pub fn profile_token(
    sets: &[TokenSet],
    rules: &RuleTable,
    token_id: TokenId,
    total_records: u64,
) -> Result<TokenProfile, ProfileError> {
    let pos = rules.position(token_id).ok_or(ProfileError::UnknownToken(token_id))?;
    let mut complete = 0;
    let mut distinct = DistinctCounter::new(DistinctMode::Exact);
    for tok in sets.iter().filter_map(|s| s.tokens[pos].as_deref()) {
        complete += 1;
        distinct.insert(tok);
    }
    Ok(token_profile(token_id, complete, &distinct, total_records))
}

/// Profile every rule straight from cleaned records, one rule at a time so
/// that only one token column is alive at once.
pub fn profile_tokens(clean: &[CleanRecord], rules: &RuleTable, mode: DistinctMode) -> Vec<TokenProfile> {
    rules
        .rules()
        .iter()
        .map(|rule| {
            let mut complete = 0;
            let mut distinct = DistinctCounter::new(mode);
            for tok in clean.iter().filter_map(|c| generate_token(rule, c)) {
                complete += 1;
                distinct.insert(&tok);
            }
            token_profile(rule.id, complete, &distinct, clean.len() as u64)
        })
        .collect()
}

/// Bucket label for an invalid SSN: the literal value for well-known
/// placeholder values, otherwise the structural rule it breaks.
pub fn invalid_ssn_pattern(digits: &str, reason: SsnInvalid, cfg: &ValidityConfig) -> String {
    let b = digits.as_bytes();
    let placeholder = b.len() == 9
        && (b.iter().all(|&d| d == b[0]) || cfg.ssn_denylist.contains(digits));
    if placeholder {
        return format!("{}-{}-{}", &digits[0..3], &digits[3..5], &digits[5..9]);
    }
    match reason {
        SsnInvalid::Length => "wrong-length",
        SsnInvalid::Area000 => "000-xx-xxxx",
        SsnInvalid::Area666 => "666-xx-xxxx",
        SsnInvalid::Area9xx => "9xx-xx-xxxx",
        SsnInvalid::Group00 => "xxx-00-xxxx",
        SsnInvalid::Serial0000 => "xxx-xx-0000",
        SsnInvalid::RepeatedDigit | SsnInvalid::Denylist => unreachable!("placeholders handled above"),
    }
    .to_string()
}

/// Counts of invalid SSNs per pattern, sorted by descending count.
pub fn invalid_ssn_breakdown(raw: &[RawRecord], cfg: &ValidityConfig) -> Vec<(String, u64)> {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for r in raw {
        if r.ssn.as_deref().map_or(true, |s| s.trim().is_empty()) {
            continue;
        }
        let label = match normalize_digits(r.ssn.as_deref()) {
            None => "no-digits".to_string(),
            Some(d) => match validate_ssn(&d, cfg) {
                Ok(_) => continue,
                Err(reason) => invalid_ssn_pattern(&d, reason, cfg),
            },
        };
        *counts.entry(label).or_default() += 1;
    }
    let mut out: Vec<_> = counts.into_iter().collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalizer::{clean_record, DateOrder};
    use crate::tokenizer::generate_all;

    fn table2() -> (Vec<RawRecord>, Vec<CleanRecord>) {
        let rows = [
            ("Jhon", None),
            ("Arthur", Some("05/07/1950")),
            ("Anna", Some("05/07/1950")),
            ("%^3", Some("08/08/1997")),
            ("Jhon", Some("02/03/1990")),
        ];
        let raw: Vec<RawRecord> = rows
            .iter()
            .enumerate()
            .map(|(i, (f, d))| RawRecord {
                record_id: i.to_string(),
                first_name: Some(f.to_string()),
                birth_date: d.map(str::to_string),
                ..Default::default()
            })
            .collect();
        let cfg = ValidityConfig::default();
        let clean = raw.iter().map(|r| clean_record(r, &cfg, DateOrder::Mdy)).collect();
        (raw, clean)
    }

    #[test]
    fn reproduces_illustration() {
        let (raw, clean) = table2();
        let f = profile_field(&raw, &clean, Role::FirstName).unwrap();
        assert_eq!((f.complete, f.distinct, f.invalid), (5, 4, 1));
        let d = profile_field(&raw, &clean, Role::BirthDate).unwrap();
        assert_eq!((d.complete, d.distinct, d.invalid), (4, 3, 0));
    }

    #[test]
    fn empty_and_unknown() {
        let p = profile_field(&[], &[], Role::Ssn).unwrap();
        assert_eq!((p.complete, p.distinct, p.invalid, p.total_records), (0, 0, 0, 0));
        assert_eq!(
            profile_field_named(&[], &[], "record_id"),
            Err(ProfileError::UnknownField("record_id".into()))
        );
        assert!(profile_field_named(&[], &[], "shoe_size").is_err());
    }

    #[test]
    fn token_last_name_counts() {
        let cfg = ValidityConfig::default();
        let rules = RuleTable::builtin();
        let raw: Vec<RawRecord> = ["Doe", "DOE", "Roe"]
            .iter()
            .enumerate()
            .map(|(i, l)| RawRecord { record_id: i.to_string(), last_name: Some(l.to_string()), ..Default::default() })
            .collect();
        let clean: Vec<_> = raw.iter().map(|r| clean_record(r, &cfg, DateOrder::Ymd)).collect();
        let sets: Vec<_> = clean.iter().map(|c| generate_all(c, &rules)).collect();
        let p = profile_token(&sets, &rules, TokenId(18), 3).unwrap();
        assert_eq!((p.complete, p.distinct), (3, 2));
        assert_eq!(profile_tokens(&clean, &rules, DistinctMode::Exact)[17], p);
        assert!(profile_token(&sets, &rules, TokenId(99), 3).is_err());
    }

    #[test]
    fn accumulators_merge() {
        let (raw, clean) = table2();
        let mut a = FieldAccumulator::new(Role::FirstName, DistinctMode::Exact).unwrap();
        let mut b = FieldAccumulator::new(Role::FirstName, DistinctMode::Exact).unwrap();
        for (i, (r, c)) in raw.iter().zip(&clean).enumerate() {
            if i % 2 == 0 { a.add(r, c) } else { b.add(r, c) }
        }
        a.merge(b);
        assert_eq!(a.finish(), profile_field(&raw, &clean, Role::FirstName).unwrap());
    }

    #[test]
    fn approximate_is_close() {
        let mut c = DistinctCounter::new(DistinctMode::Approximate);
        for i in 0..50_000 {
            c.insert(&format!("v{i}"));
            c.insert(&format!("v{i}"));
        }
        let est = c.count() as f64;
        assert!((est - 50_000.0).abs() / 50_000.0 < 0.05, "{est}");
        assert!(!c.is_exact());
    }

    #[test]
    fn ssn_breakdown_labels() {
        let cfg = ValidityConfig::default();
        let raw: Vec<RawRecord> = ["999-99-9999", "999999999", "000-00-0000", "912-34-5678", "123-00-4567", "123-45-6789", "856-12-3456", ""]
            .iter()
            .map(|s| RawRecord { ssn: Some(s.to_string()), ..Default::default() })
            .collect();
        let b = invalid_ssn_breakdown(&raw, &cfg);
        assert_eq!(
            b,
            vec![
                ("999-99-9999".to_string(), 2),
                ("000-00-0000".to_string(), 1),
                ("123-45-6789".to_string(), 1),
                ("9xx-xx-xxxx".to_string(), 1),
                ("xxx-00-xxxx".to_string(), 1),
            ]
        );
    }
}
