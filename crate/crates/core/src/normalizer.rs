//! Cleaning and validation of identity fields.
//!
//! Both datasets go through [`clean_record`]; there is no per-source path.
//! Errors in the data are detected, never repaired: a transposed date stays
//! transposed and is only rejected if it is out of range.

use std::collections::BTreeSet;
use std::fmt;

use chrono::Datelike;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::ingest::RawRecord;

pub const FIRST_NAME_MAX: usize = 15;
pub const MIDDLE_NAME_MAX: usize = 15;
pub const LAST_NAME_MAX: usize = 20;

/// Year bound used when reproducing the original 2022 analysis.
pub const STRICT_MAX_YEAR: u16 = 2022;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NameKind {
    First,
    Middle,
    Last,
}

impl NameKind {
    pub fn max_len(self) -> usize {
        match self {
            NameKind::First => FIRST_NAME_MAX,
            NameKind::Middle => MIDDLE_NAME_MAX,
            NameKind::Last => LAST_NAME_MAX,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiacriticMode {
    /// `é` becomes `E`.
    #[default]
    Fold,
    /// `é` is dropped.
    Delete,
}

/// Order of the components of a date written with separators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DateOrder {
    #[default]
    Ymd,
    Mdy,
    Dmy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidityConfig {
    pub min_year: u16,
    pub max_year: u16,
    /// Extra SSNs rejected on top of the structural rules.
    pub ssn_denylist: BTreeSet<String>,
    pub reject_repeated_digit_ssn: bool,
    pub check_month_day: bool,
    pub diacritics: DiacriticMode,
}

pub const DEFAULT_SSN_DENYLIST: [&str; 4] = ["123456789", "012345678", "001010001", "090909090"];

impl Default for ValidityConfig {
    fn default() -> Self {
        let year = chrono::Local::now().year();
        ValidityConfig {
            min_year: 1850,
            max_year: u16::try_from(year).unwrap_or(u16::MAX),
            ssn_denylist: DEFAULT_SSN_DENYLIST.iter().map(|s| s.to_string()).collect(),
            reject_repeated_digit_ssn: true,
            check_month_day: true,
            diacritics: DiacriticMode::Fold,
        }
    }
}

impl ValidityConfig {
    /// Year bound 2022 and no month/day checks.
    pub fn strict_paper() -> Self {
        ValidityConfig { max_year: STRICT_MAX_YEAR, check_month_day: false, ..Default::default() }
    }

    pub fn with_max_year(mut self, max_year: u16) -> Self {
        self.max_year = max_year;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.min_year >= self.max_year {
            return Err(format!("min_year {} must be below max_year {}", self.min_year, self.max_year));
        }
        if let Some(bad) = self.ssn_denylist.iter().find(|s| s.len() != 9 || !s.bytes().all(|b| b.is_ascii_digit())) {
            return Err(format!("denylisted ssn `{bad}` is not 9 digits"));
        }
        Ok(())
    }
}

/// Keep only ASCII digits. `None` when nothing survives.
pub fn normalize_digits(raw: Option<&str>) -> Option<String> {
    let digits: String = raw?.chars().filter(|c| c.is_ascii_digit()).collect();
    (!digits.is_empty()).then_some(digits)
}

/// Letters only, uppercased, truncated to the bound for `kind`.
pub fn normalize_name(raw: Option<&str>, kind: NameKind) -> Option<String> {
    normalize_name_with(raw, kind, DiacriticMode::Fold)
}

pub fn normalize_name_with(raw: Option<&str>, kind: NameKind, mode: DiacriticMode) -> Option<String> {
    let raw = raw?;
    let mut out = String::with_capacity(raw.len());
    for c in raw.chars() {
        if c.is_ascii_alphabetic() {
            out.push(c.to_ascii_uppercase());
        } else if !c.is_ascii() && mode == DiacriticMode::Fold {
            fold_char(c, &mut out);
        }
        if out.len() >= kind.max_len() {
            break;
        }
    }
    out.truncate(kind.max_len());
    (!out.is_empty()).then_some(out)
}

fn fold_char(c: char, out: &mut String) {
    // Letters without a canonical decomposition.
    let special = match c {
        'ß' => Some("SS"),
        'æ' | 'Æ' => Some("AE"),
        'œ' | 'Œ' => Some("OE"),
        'ø' | 'Ø' => Some("O"),
        'ł' | 'Ł' => Some("L"),
        'đ' | 'Đ' | 'ð' | 'Ð' => Some("D"),
        'þ' | 'Þ' => Some("TH"),
        'ı' => Some("I"),
        _ => None,
    };
    if let Some(s) = special {
        out.push_str(s);
        return;
    }
    for d in std::iter::once(c).nfd() {
        if d.is_ascii_alphabetic() {
            out.push(d.to_ascii_uppercase());
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SsnInvalid {
    Length,
    Area000,
    Area666,
    Area9xx,
    Group00,
    Serial0000,
    RepeatedDigit,
    Denylist,
}

impl fmt::Display for SsnInvalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SsnInvalid::Length => "length",
            SsnInvalid::Area000 => "area-000",
            SsnInvalid::Area666 => "area-666",
            SsnInvalid::Area9xx => "area-9xx",
            SsnInvalid::Group00 => "group-00",
            SsnInvalid::Serial0000 => "serial-0000",
            SsnInvalid::RepeatedDigit => "repeated-digit",
            SsnInvalid::Denylist => "denylist",
        })
    }
}

/// Structural SSN check. The error names the first rule that fails.
pub fn validate_ssn(digits: &str, cfg: &ValidityConfig) -> Result<String, SsnInvalid> {
    let b = digits.as_bytes();
    if b.len() != 9 || !b.iter().all(u8::is_ascii_digit) {
        return Err(SsnInvalid::Length);
    }
    let area = &digits[0..3];
    if area == "000" {
        return Err(SsnInvalid::Area000);
    }
    if area == "666" {
        return Err(SsnInvalid::Area666);
    }
    if b[0] == b'9' {
        return Err(SsnInvalid::Area9xx);
    }
    if &digits[3..5] == "00" {
        return Err(SsnInvalid::Group00);
    }
    if &digits[5..9] == "0000" {
        return Err(SsnInvalid::Serial0000);
    }
    if cfg.reject_repeated_digit_ssn && b.iter().all(|&d| d == b[0]) {
        return Err(SsnInvalid::RepeatedDigit);
    }
    if cfg.ssn_denylist.contains(digits) {
        return Err(SsnInvalid::Denylist);
    }
    Ok(digits.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DateInvalid {
    Length,
    YearBelowMin,
    YearAboveMax,
    MonthOutOfRange,
    DayOutOfRange,
}

impl fmt::Display for DateInvalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DateInvalid::Length => "length",
            DateInvalid::YearBelowMin => "year-below-min",
            DateInvalid::YearAboveMax => "year-above-max",
            DateInvalid::MonthOutOfRange => "month-out-of-range",
            DateInvalid::DayOutOfRange => "day-out-of-range",
        })
    }
}

pub fn days_in_month(year: u32, month: u32) -> u32 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if (year % 4 == 0 && year % 100 != 0) || year % 400 == 0 => 29,
        2 => 28,
        _ => 0,
    }
}

/// Check an 8-digit `YYYYMMDD` string.
pub fn validate_date(digits: &str, cfg: &ValidityConfig) -> Result<String, DateInvalid> {
    if digits.len() != 8 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(DateInvalid::Length);
    }
    let num = |r: std::ops::Range<usize>| digits[r].parse::<u32>().expect("ascii digits");
    let (year, month, day) = (num(0..4), num(4..6), num(6..8));
    if year < u32::from(cfg.min_year) {
        return Err(DateInvalid::YearBelowMin);
    }
    if year > u32::from(cfg.max_year) {
        return Err(DateInvalid::YearAboveMax);
    }
    if cfg.check_month_day {
        if !(1..=12).contains(&month) {
            return Err(DateInvalid::MonthOutOfRange);
        }
        if day < 1 || day > days_in_month(year, month) {
            return Err(DateInvalid::DayOutOfRange);
        }
    }
    Ok(digits.to_string())
}

/// Bring a raw date into `YYYYMMDD` digit form.
///
/// Dates with exactly three numeric groups (`12/3/2007`, `2008-1-5`) are
/// reordered per `order` and zero-padded. Anything else is reduced with
/// [`normalize_digits`]; an 8-digit run in `Mdy`/`Dmy` order is reordered.
pub fn normalize_date(raw: Option<&str>, order: DateOrder) -> Option<String> {
    let raw = raw?;
    let groups: Vec<&str> = raw.split(|c: char| !c.is_ascii_digit()).filter(|g| !g.is_empty()).collect();
    if groups.len() == 3 {
        let (y, m, d) = match order {
            DateOrder::Ymd => (groups[0], groups[1], groups[2]),
            DateOrder::Mdy => (groups[2], groups[0], groups[1]),
            DateOrder::Dmy => (groups[2], groups[1], groups[0]),
        };
        if y.len() == 4 && (1..=2).contains(&m.len()) && (1..=2).contains(&d.len()) {
            return Some(format!("{y}{m:0>2}{d:0>2}"));
        }
    }
    let digits = normalize_digits(Some(raw))?;
    if digits.len() == 8 {
        let reordered = match order {
            DateOrder::Ymd => digits,
            DateOrder::Mdy => format!("{}{}{}", &digits[4..8], &digits[0..2], &digits[2..4]),
            DateOrder::Dmy => format!("{}{}{}", &digits[4..8], &digits[2..4], &digits[0..2]),
        };
        return Some(reordered);
    }
    Some(digits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldStatus {
    Valid,
    Missing,
    Invalid,
}

/// A cleaned field. Only `Valid` carries a value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Cleaned {
    Valid(String),
    Missing,
    Invalid,
}

impl Cleaned {
    pub fn value(&self) -> Option<&str> {
        match self {
            Cleaned::Valid(v) => Some(v),
            _ => None,
        }
    }

    pub fn status(&self) -> FieldStatus {
        match self {
            Cleaned::Valid(_) => FieldStatus::Valid,
            Cleaned::Missing => FieldStatus::Missing,
            Cleaned::Invalid => FieldStatus::Invalid,
        }
    }

    pub fn is_valid(&self) -> bool {
        matches!(self, Cleaned::Valid(_))
    }
}

/// Identity fields of one record after cleaning.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CleanRecord {
    pub record_id: String,
    pub first_name: Cleaned,
    pub middle_name: Cleaned,
    pub last_name: Cleaned,
    pub birth_date: Cleaned,
    pub death_date: Cleaned,
    pub ssn: Cleaned,
}

impl CleanRecord {
    /// Feed cleaned values back in as raw strings.
    pub fn to_raw(&self) -> RawRecord {
        let v = |c: &Cleaned| c.value().map(str::to_string);
        RawRecord {
            record_id: self.record_id.clone(),
            first_name: v(&self.first_name),
            middle_name: v(&self.middle_name),
            last_name: v(&self.last_name),
            birth_date: v(&self.birth_date),
            death_date: v(&self.death_date),
            ssn: v(&self.ssn),
        }
    }

    pub fn field(&self, role: crate::ingest::Role) -> Option<&Cleaned> {
        use crate::ingest::Role;
        Some(match role {
            Role::RecordId => return None,
            Role::FirstName => &self.first_name,
            Role::MiddleName => &self.middle_name,
            Role::LastName => &self.last_name,
            Role::BirthDate => &self.birth_date,
            Role::DeathDate => &self.death_date,
            Role::Ssn => &self.ssn,
        })
    }
}

fn is_blank(raw: Option<&str>) -> bool {
    raw.map_or(true, |s| s.trim().is_empty())
}

fn clean_with<F>(raw: Option<&str>, f: F) -> Cleaned
where
    F: FnOnce(&str) -> Option<String>,
{
    match raw {
        _ if is_blank(raw) => Cleaned::Missing,
        Some(s) => f(s).map_or(Cleaned::Invalid, Cleaned::Valid),
        None => Cleaned::Missing,
    }
}

pub fn clean_name(raw: Option<&str>, kind: NameKind, cfg: &ValidityConfig) -> Cleaned {
    clean_with(raw, |s| normalize_name_with(Some(s), kind, cfg.diacritics))
}

pub fn clean_date(raw: Option<&str>, order: DateOrder, cfg: &ValidityConfig) -> Cleaned {
    clean_with(raw, |s| normalize_date(Some(s), order).and_then(|d| validate_date(&d, cfg).ok()))
}

pub fn clean_ssn(raw: Option<&str>, cfg: &ValidityConfig) -> Cleaned {
    clean_with(raw, |s| normalize_digits(Some(s)).and_then(|d| validate_ssn(&d, cfg).ok()))
}

/// Clean every field of `raw` independently. Whitespace-only or absent raw
/// values are `Missing`; values that clean to nothing or fail validation are
/// `Invalid`.
pub fn clean_record(raw: &RawRecord, cfg: &ValidityConfig, order: DateOrder) -> CleanRecord {
    CleanRecord {
        record_id: raw.record_id.clone(),
        first_name: clean_name(raw.first_name.as_deref(), NameKind::First, cfg),
        middle_name: clean_name(raw.middle_name.as_deref(), NameKind::Middle, cfg),
        last_name: clean_name(raw.last_name.as_deref(), NameKind::Last, cfg),
        birth_date: clean_date(raw.birth_date.as_deref(), order, cfg),
        death_date: clean_date(raw.death_date.as_deref(), order, cfg),
        ssn: clean_ssn(raw.ssn.as_deref(), cfg),
    }
}
