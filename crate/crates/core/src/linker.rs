//! One-to-one deterministic linkage.
//!
//! Every rule gets a value-to-rows index per dataset. A token value links two
//! records only if it occurs exactly once on both sides. Rules are scored on
//! the patients whose death date is already known (the validation subset),
//! sorted by how often the linked external death date agrees, and then used in
//! that priority order to attach external death dates to every patient.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normalizer::CleanRecord;
use crate::tokenizer::{generate_token, RuleTable, TokenId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinkError {
    #[error("index is for token {found}, expected token {expected}")]
    IndexMismatch { expected: TokenId, found: TokenId },
    #[error("token id {0} is not in the rule table")]
    UnknownToken(TokenId),
    #[error("no one-to-one matches for token {0}; it cannot be categorized")]
    UndefinedRate(TokenId),
    #[error("invalid thresholds: {0}")]
    Thresholds(String),
}

/// Tokens and death dates of one dataset, stored column-wise per rule.
#[derive(Debug, Clone)]
pub struct LinkDataset {
    pub label: String,
    pub record_ids: Vec<String>,
    pub death_dates: Vec<Option<String>>,
    rules: RuleTable,
    columns: Vec<Vec<Option<Box<str>>>>,
}

impl LinkDataset {
    pub fn from_clean(label: impl Into<String>, clean: &[CleanRecord], rules: &RuleTable) -> Self {
        let columns = rules
            .rules()
            .par_iter()
            .map(|rule| clean.iter().map(|c| generate_token(rule, c).map(String::into_boxed_str)).collect())
            .collect();
        LinkDataset {
            label: label.into(),
            record_ids: clean.iter().map(|c| c.record_id.clone()).collect(),
            death_dates: clean.iter().map(|c| c.death_date.value().map(str::to_string)).collect(),
            rules: rules.clone(),
            columns,
        }
    }

    pub fn len(&self) -> usize {
        self.record_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.record_ids.is_empty()
    }

    pub fn rules(&self) -> &RuleTable {
        &self.rules
    }

    pub fn token(&self, id: TokenId, row: usize) -> Option<&str> {
        self.columns.get(self.rules.position(id)?)?.get(row)?.as_deref()
    }

    fn column(&self, id: TokenId) -> Result<&[Option<Box<str>>], LinkError> {
        let pos = self.rules.position(id).ok_or(LinkError::UnknownToken(id))?;
        Ok(&self.columns[pos])
    }

    /// Rows with a valid death date.
    pub fn validation_rows(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.death_dates[i].is_some()).collect()
    }
}

/// Token value to dataset rows, for one rule.
#[derive(Debug, Clone)]
pub struct TokenIndex {
    pub token_id: TokenId,
    pub built_from: String,
    entries: HashMap<Box<str>, Vec<u32>>,
}

impl TokenIndex {
    pub fn rows(&self, value: &str) -> &[u32] {
        self.entries.get(value).map_or(&[], Vec::as_slice)
    }

    pub fn count(&self, value: &str) -> usize {
        self.rows(value).len()
    }

    /// The single row bearing `value`, if exactly one does.
    pub fn unique_row(&self, value: &str) -> Option<usize> {
        match self.rows(value) {
            [row] => Some(*row as usize),
            _ => None,
        }
    }

    /// Number of distinct token values.
    pub fn cardinality(&self) -> usize {
        self.entries.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[u32])> {
        self.entries.iter().map(|(k, v)| (k.as_ref(), v.as_slice()))
    }
}

pub fn build_index(ds: &LinkDataset, token_id: TokenId) -> Result<TokenIndex, LinkError> {
    build_index_over(ds, token_id, 0..ds.len())
}

/// Index only the given rows of `ds`.
pub fn build_index_over(
    ds: &LinkDataset,
    token_id: TokenId,
    rows: impl IntoIterator<Item = usize>,
) -> Result<TokenIndex, LinkError> {
    let column = ds.column(token_id)?;
    let mut entries: HashMap<Box<str>, Vec<u32>> = HashMap::new();
    for row in rows {
        if let Some(v) = &column[row] {
            let row = u32::try_from(row).expect("dataset exceeds u32 rows");
            match entries.get_mut(v.as_ref()) {
                Some(list) => list.push(row),
                None => {
                    entries.insert(v.clone(), vec![row]);
                }
            }
        }
    }
    Ok(TokenIndex { token_id, built_from: ds.label.clone(), entries })
}

/// Indexes for every rule of a dataset, keyed by token id.
pub fn build_indexes(ds: &LinkDataset) -> BTreeMap<TokenId, TokenIndex> {
    let ids: Vec<TokenId> = ds.rules.ids().collect();
    ids.par_iter()
        .map(|&id| (id, build_index(ds, id).expect("rule from own table")))
        .collect()
}

/// How an external match is judged unique during validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidationMode {
    /// Exactly one external record bears the token value.
    #[default]
    SingleRecord,
    /// The external records bearing the value report one distinct death date.
    UniqueDod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationOptions {
    pub mode: ValidationMode,
    /// Death dates this many days apart still count as a match.
    pub dod_tolerance_days: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationStats {
    pub token_id: TokenId,
    pub one_to_one_count: u64,
    pub dod_match: u64,
    pub dod_nonmatch: u64,
}

impl ValidationStats {
    pub fn new(token_id: TokenId, dod_match: u64, dod_nonmatch: u64) -> Self {
        ValidationStats { token_id, one_to_one_count: dod_match + dod_nonmatch, dod_match, dod_nonmatch }
    }

    pub fn match_rate(&self) -> Option<f64> {
        (self.one_to_one_count > 0).then(|| self.dod_match as f64 / self.one_to_one_count as f64)
    }
}

fn dates_agree(a: &str, b: &str, tolerance_days: u32) -> bool {
    if a == b {
        return true;
    }
    if tolerance_days == 0 {
        return false;
    }
    let parse = |s: &str| NaiveDate::parse_from_str(s, "%Y%m%d").ok();
    match (parse(a), parse(b)) {
        (Some(x), Some(y)) => (x - y).num_days().unsigned_abs() <= u64::from(tolerance_days),
        _ => false,
    }
}

/// Score one rule on the validation subset.
///
/// A validation patient counts when its token is non-null, unique within the
/// validation subset, and matched uniquely on the external side (see
/// [`ValidationMode`]). It is a death-date match when the dates agree; an
/// external record without a death date is a non-match.
pub fn validate_token(
    token_id: TokenId,
    patients: &LinkDataset,
    external: &LinkDataset,
    external_index: &TokenIndex,
    opts: &ValidationOptions,
) -> Result<ValidationStats, LinkError> {
    if external_index.token_id != token_id {
        return Err(LinkError::IndexMismatch { expected: token_id, found: external_index.token_id });
    }
    let subset = patients.validation_rows();
    let subset_index = build_index_over(patients, token_id, subset.iter().copied())?;
    let column = patients.column(token_id)?;
    let (mut hit, mut miss) = (0, 0);
    for &row in &subset {
        let Some(value) = column[row].as_deref() else { continue };
        if subset_index.count(value) != 1 {
            continue;
        }
        let external_dod: Option<&str> = match opts.mode {
            ValidationMode::SingleRecord => match external_index.unique_row(value) {
                Some(ext) => external.death_dates[ext].as_deref(),
                None => continue,
            },
            ValidationMode::UniqueDod => {
                let mut dates = external_index.rows(value).iter().filter_map(|&r| external.death_dates[r as usize].as_deref());
                let Some(first) = dates.next() else { continue };
                if dates.any(|d| d != first) {
                    continue;
                }
                Some(first)
            }
        };
        let patient_dod = patients.death_dates[row].as_deref().expect("validation row has a death date");
        if external_dod.is_some_and(|d| dates_agree(patient_dod, d, opts.dod_tolerance_days)) {
            hit += 1;
        } else {
            miss += 1;
        }
    }
    Ok(ValidationStats::new(token_id, hit, miss))
}

/// Score every rule of the patient dataset.
pub fn validate_all(
    patients: &LinkDataset,
    external: &LinkDataset,
    external_indexes: &BTreeMap<TokenId, TokenIndex>,
    opts: &ValidationOptions,
) -> Result<Vec<ValidationStats>, LinkError> {
    let ids: Vec<TokenId> = patients.rules.ids().collect();
    ids.par_iter()
        .map(|&id| {
            let idx = external_indexes.get(&id).ok_or(LinkError::UnknownToken(id))?;
            validate_token(id, patients, external, idx, opts)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "1")]
    Category1,
    #[serde(rename = "2")]
    Category2,
    #[serde(rename = "3")]
    Category3,
}

impl Category {
    pub fn number(self) -> u8 {
        match self {
            Category::Category1 => 1,
            Category::Category2 => 2,
            Category::Category3 => 3,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Category::Category1),
            2 => Some(Category::Category2),
            3 => Some(Category::Category3),
            _ => None,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.number().fmt(f)
    }
}

/// Category 1 above `category1_above`, category 3 below `category3_below`,
/// category 2 in between, both bounds inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CategoryThresholds {
    pub category1_above: f64,
    pub category3_below: f64,
}

impl Default for CategoryThresholds {
    fn default() -> Self {
        CategoryThresholds { category1_above: 0.80, category3_below: 0.50 }
    }
}

impl CategoryThresholds {
    pub fn validate(&self) -> Result<(), LinkError> {
        let ok = (0.0..=1.0).contains(&self.category3_below)
            && (0.0..=1.0).contains(&self.category1_above)
            && self.category3_below <= self.category1_above;
        if ok {
            Ok(())
        } else {
            Err(LinkError::Thresholds(format!(
                "need 0 <= category3_below ({}) <= category1_above ({}) <= 1",
                self.category3_below, self.category1_above
            )))
        }
    }

    pub fn category_for(&self, rate: f64) -> Category {
        if rate > self.category1_above {
            Category::Category1
        } else if rate < self.category3_below {
            Category::Category3
        } else {
            Category::Category2
        }
    }
}

pub fn categorize(stats: &ValidationStats, thresholds: &CategoryThresholds) -> Result<Category, LinkError> {
    let rate = stats.match_rate().ok_or(LinkError::UndefinedRate(stats.token_id))?;
    Ok(thresholds.category_for(rate))
}

/// Token ids by descending match rate; ties go to the larger one-to-one
/// count, then the smaller id. Tokens without a rate are left out.
pub fn rank_tokens(stats: &[ValidationStats]) -> Vec<TokenId> {
    let mut ranked: Vec<&ValidationStats> = stats.iter().filter(|s| s.one_to_one_count > 0).collect();
    ranked.sort_by(|a, b| {
        // a.match / a.n vs b.match / b.n without rounding.
        let lhs = u128::from(b.dod_match) * u128::from(a.one_to_one_count);
        let rhs = u128::from(a.dod_match) * u128::from(b.one_to_one_count);
        lhs.cmp(&rhs)
            .then_with(|| b.one_to_one_count.cmp(&a.one_to_one_count))
            .then_with(|| a.token_id.cmp(&b.token_id))
    });
    ranked.into_iter().map(|s| s.token_id).collect()
}

/// Ranked, categorized tokens from validation statistics.
pub fn priority_list(stats: &[ValidationStats], thresholds: &CategoryThresholds) -> Vec<(TokenId, Category)> {
    let by_id: HashMap<TokenId, &ValidationStats> = stats.iter().map(|s| (s.token_id, s)).collect();
    rank_tokens(stats)
        .into_iter()
        .map(|id| (id, categorize(by_id[&id], thresholds).expect("ranked tokens have a rate")))
        .collect()
}

/// One output row per patient.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkedRow {
    pub record_id: String,
    pub dod_patient: Option<String>,
    pub dod_external: Option<String>,
    pub category: Option<Category>,
    pub token_id: Option<TokenId>,
    pub external_record_id: Option<String>,
}

/// Attach external death data to every patient.
///
/// Tokens are tried in `priority` order; the first whose value occurs once in
/// the patient dataset and once in the external dataset decides the link.
pub fn link_deaths(
    patients: &LinkDataset,
    external: &LinkDataset,
    priority: &[(TokenId, Category)],
) -> Result<Vec<LinkedRow>, LinkError> {
    let indexes: Vec<(TokenId, Category, TokenIndex, TokenIndex)> = priority
        .par_iter()
        .map(|&(id, cat)| Ok((id, cat, build_index(patients, id)?, build_index(external, id)?)))
        .collect::<Result<_, LinkError>>()?;
    link_with_indexes(patients, external, &indexes)
}

fn link_with_indexes(
    patients: &LinkDataset,
    external: &LinkDataset,
    indexes: &[(TokenId, Category, TokenIndex, TokenIndex)],
) -> Result<Vec<LinkedRow>, LinkError> {
    Ok((0..patients.len())
        .into_par_iter()
        .map(|row| {
            let mut out = LinkedRow {
                record_id: patients.record_ids[row].clone(),
                dod_patient: patients.death_dates[row].clone(),
                dod_external: None,
                category: None,
                token_id: None,
                external_record_id: None,
            };
            for (id, cat, p_idx, e_idx) in indexes {
                let Some(value) = patients.token(*id, row) else { continue };
                if p_idx.count(value) != 1 {
                    continue;
                }
                if let Some(ext) = e_idx.unique_row(value) {
                    out.dod_external = external.death_dates[ext].clone();
                    out.category = Some(*cat);
                    out.token_id = Some(*id);
                    out.external_record_id = Some(external.record_ids[ext].clone());
                    break;
                }
            }
            out
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::RawRecord;
    use crate::normalizer::{clean_record, DateOrder, ValidityConfig};

    fn ds(label: &str, rows: &[(&str, &str, &str, &str, Option<&str>)]) -> LinkDataset {
        let cfg = ValidityConfig::default().with_max_year(2022);
        let clean: Vec<_> = rows
            .iter()
            .map(|(id, first, last, ssn, dod)| {
                let raw = RawRecord {
                    record_id: id.to_string(),
                    first_name: Some(first.to_string()),
                    last_name: Some(last.to_string()),
                    birth_date: Some("19500507".into()),
                    ssn: Some(ssn.to_string()),
                    death_date: dod.map(str::to_string),
                    ..Default::default()
                };
                clean_record(&raw, &cfg, DateOrder::Ymd)
            })
            .collect();
        LinkDataset::from_clean(label, &clean, &RuleTable::builtin())
    }

    #[test]
    fn index_multimap() {
        let d = ds("p", &[("a", "JOHN", "DOE", "", None), ("b", "JANE", "DOE", "", None), ("c", "X", "ROE", "", None)]);
        let idx = build_index(&d, TokenId(18)).unwrap();
        assert_eq!(idx.rows("DOE"), &[0, 1]);
        assert_eq!(idx.unique_row("ROE"), Some(2));
        assert_eq!(idx.cardinality(), 2);
        let ssn = build_index(&d, TokenId(6)).unwrap();
        assert_eq!(ssn.cardinality(), 0);
    }

    #[test]
    fn validation_counts() {
        let p = ds(
            "p",
            &[
                ("p1", "A", "X", "123456781", Some("20000101")),
                ("p2", "B", "X", "223456781", Some("20000101")),
                ("p3", "C", "X", "323456781", Some("20000101")),
                ("p4", "C", "X", "323456781", Some("20000101")),
                ("p5", "D", "X", "423456781", None),
            ],
        );
        let e = ds(
            "e",
            &[
                ("e1", "A", "X", "123456781", Some("20000101")),
                ("e2", "B", "X", "223456781", Some("20000102")),
                ("e3", "C", "X", "323456781", Some("20000101")),
                ("e4", "D", "X", "423456781", Some("20000101")),
            ],
        );
        let idx = build_index(&e, TokenId(6)).unwrap();
        let s = validate_token(TokenId(6), &p, &e, &idx, &ValidationOptions::default()).unwrap();
        assert_eq!(s, ValidationStats::new(TokenId(6), 1, 1));
        let loose = ValidationOptions { dod_tolerance_days: 1, ..Default::default() };
        let s = validate_token(TokenId(6), &p, &e, &idx, &loose).unwrap();
        assert_eq!(s, ValidationStats::new(TokenId(6), 2, 0));
        let wrong = build_index(&e, TokenId(3)).unwrap();
        assert!(matches!(
            validate_token(TokenId(6), &p, &e, &wrong, &ValidationOptions::default()),
            Err(LinkError::IndexMismatch { .. })
        ));
    }

    #[test]
    fn unique_dod_mode() {
        let p = ds("p", &[("p1", "A", "X", "123456781", Some("20000101"))]);
        let e = ds(
            "e",
            &[
                ("e1", "A", "X", "123456781", Some("20000101")),
                ("e2", "A", "X", "123456781", Some("20000101")),
            ],
        );
        let idx = build_index(&e, TokenId(6)).unwrap();
        let single = validate_token(TokenId(6), &p, &e, &idx, &ValidationOptions::default()).unwrap();
        assert_eq!(single.one_to_one_count, 0);
        let opts = ValidationOptions { mode: ValidationMode::UniqueDod, ..Default::default() };
        let unique = validate_token(TokenId(6), &p, &e, &idx, &opts).unwrap();
        assert_eq!(unique, ValidationStats::new(TokenId(6), 1, 0));
    }

    #[test]
    fn empty_subset() {
        let p = ds("p", &[("p1", "A", "X", "123456781", None)]);
        let e = ds("e", &[]);
        let idx = build_index(&e, TokenId(3)).unwrap();
        let s = validate_token(TokenId(3), &p, &e, &idx, &ValidationOptions::default()).unwrap();
        assert_eq!(s, ValidationStats::new(TokenId(3), 0, 0));
        assert_eq!(s.match_rate(), None);
        assert!(categorize(&s, &CategoryThresholds::default()).is_err());
    }

    #[test]
    fn category_boundaries() {
        let t = CategoryThresholds::default();
        let cat = |m, n| categorize(&ValidationStats::new(TokenId(1), m, n - m), &t).unwrap();
        assert_eq!(cat(81, 100), Category::Category1);
        assert_eq!(cat(80, 100), Category::Category2);
        assert_eq!(cat(50, 100), Category::Category2);
        assert_eq!(cat(49, 100), Category::Category3);
        assert!(CategoryThresholds { category1_above: 0.4, category3_below: 0.5 }.validate().is_err());
    }

    #[test]
    fn ranking_ties() {
        let s = [
            ValidationStats::new(TokenId(5), 1, 1),
            ValidationStats::new(TokenId(2), 2, 2),
            ValidationStats::new(TokenId(3), 2, 2),
            ValidationStats::new(TokenId(9), 0, 0),
            ValidationStats::new(TokenId(1), 3, 0),
        ];
        assert_eq!(rank_tokens(&s), vec![TokenId(1), TokenId(2), TokenId(3), TokenId(5)]);
        assert_eq!(rank_tokens(&s[..1]), vec![TokenId(5)]);
    }

    #[test]
    fn twins_do_not_link() {
        let p = ds("p", &[("p1", "A", "X", "123456781", None), ("p2", "A", "X", "123456781", None)]);
        let e = ds("e", &[("e1", "A", "X", "123456781", Some("20000101"))]);
        let prio: Vec<_> = RuleTable::builtin().ids().map(|id| (id, Category::Category1)).collect();
        let rows = link_deaths(&p, &e, &prio).unwrap();
        assert!(rows.iter().all(|r| r.dod_external.is_none() && r.token_id.is_none()));
        assert_eq!(rows.len(), 2);
    }
}
