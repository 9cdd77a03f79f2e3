//! Seeded synthetic dataset pairs with a known truth map.
//!
//! Each person is drawn once and then written to the patient file, the
//! external file, or both. Errors are injected into the raw strings of each
//! copy independently, so the cleaning path sees them exactly as it would see
//! keying mistakes in real extracts.

mod names;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Write;

use chrono::{Datelike, Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use names::{GIVEN_NAMES, SURNAMES};

use crate::ingest::RawRecord;
use crate::linker::LinkedRow;
use crate::normalizer::{validate_ssn, ValidityConfig};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    Config(String),
    #[error("unknown {kind} id `{id}`")]
    UnknownId { kind: &'static str, id: String },
}

/// One probability per identity field.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldRates {
    pub ssn: f64,
    pub first_name: f64,
    pub middle_name: f64,
    pub last_name: f64,
    pub birth_date: f64,
}

impl FieldRates {
    pub fn uniform(p: f64) -> Self {
        FieldRates { ssn: p, first_name: p, middle_name: p, last_name: p, birth_date: p }
    }

    fn all(&self) -> [f64; 5] {
        [self.ssn, self.first_name, self.middle_name, self.last_name, self.birth_date]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErrorRates {
    /// Field left empty.
    pub null: FieldRates,
    /// One character replaced by another of the same class.
    pub typo: FieldRates,
    /// Two adjacent characters swapped.
    pub transposition: FieldRates,
    /// SSN replaced by a placeholder such as 999-99-9999.
    pub invalid_ssn: f64,
    /// Birth date month and day exchanged.
    pub date_swap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_persons: usize,
    /// Share of persons written to both files. The rest is split evenly.
    pub overlap_fraction: f64,
    pub seed: u64,
    pub error_rates: ErrorRates,
    /// Share of external records that carry a death date.
    pub dod_coverage: f64,
    /// Share of patient records that carry a death date.
    pub patient_dod_fraction: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_persons: 1000,
            overlap_fraction: 0.5,
            seed: 0,
            error_rates: ErrorRates::default(),
            dod_coverage: 1.0,
            patient_dod_fraction: 0.5,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_persons == 0 {
            return Err(SynthError::Config("n_persons must be at least 1".into()));
        }
        let e = &self.error_rates;
        let mut fractions = vec![
            ("overlap_fraction", self.overlap_fraction),
            ("dod_coverage", self.dod_coverage),
            ("patient_dod_fraction", self.patient_dod_fraction),
            ("invalid_ssn", e.invalid_ssn),
            ("date_swap", e.date_swap),
        ];
        for (name, rates) in [("null", e.null), ("typo", e.typo), ("transposition", e.transposition)] {
            fractions.extend(rates.all().into_iter().map(|p| (name, p)));
        }
        match fractions.into_iter().find(|(_, p)| !(0.0..=1.0).contains(p)) {
            Some((name, p)) => Err(SynthError::Config(format!("{name} = {p} is outside [0, 1]"))),
            None => Ok(()),
        }
    }
}

/// Patient record id to external record id for persons present in both files.
pub type TruthMap = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Population {
    pub patients: Vec<RawRecord>,
    pub external: Vec<RawRecord>,
    pub truth: TruthMap,
}

#[derive(Debug, Clone)]
struct Person {
    first: &'static str,
    middle: &'static str,
    last: &'static str,
    birth: NaiveDate,
    death: NaiveDate,
    ssn: String,
}

const SSN_PLACEHOLDERS: [&str; 5] = ["999999999", "888888888", "000000000", "123456789", "111111111"];

fn draw_ssn(rng: &mut ChaCha8Rng, used: &mut HashSet<String>, cfg: &ValidityConfig) -> String {
    loop {
        let area = rng.gen_range(1..=899u32);
        let s = format!("{area:03}{:02}{:04}", rng.gen_range(1..=99u32), rng.gen_range(1..=9999u32));
        if validate_ssn(&s, cfg).is_ok() && used.insert(s.clone()) {
            return s;
        }
    }
}

fn draw_person(rng: &mut ChaCha8Rng, used: &mut HashSet<String>, cfg: &ValidityConfig) -> Person {
    let start = NaiveDate::from_ymd_opt(1910, 1, 1).expect("date");
    let birth_end = NaiveDate::from_ymd_opt(2005, 12, 31).expect("date");
    let death_end = NaiveDate::from_ymd_opt(2021, 12, 31).expect("date");
    let birth = start + Duration::days(rng.gen_range(0..=(birth_end - start).num_days()));
    let death = birth + Duration::days(rng.gen_range(1..=(death_end - birth).num_days()));
    Person {
        first: GIVEN_NAMES.choose(rng).expect("names"),
        middle: GIVEN_NAMES.choose(rng).expect("names"),
        last: SURNAMES.choose(rng).expect("names"),
        birth,
        death,
        ssn: draw_ssn(rng, used, cfg),
    }
}

#[derive(Clone, Copy)]
enum Side {
    Patient,
    External,
}

#[derive(Clone, Copy, PartialEq)]
enum CharClass {
    Letter,
    Digit,
}

fn typo(s: &str, class: CharClass, rng: &mut ChaCha8Rng) -> String {
    let mut chars: Vec<char> = s.chars().collect();
    let eligible: Vec<usize> = (0..chars.len()).filter(|&i| in_class(chars[i], class)).collect();
    if let Some(&i) = eligible.choose(rng) {
        let pool: &[u8] = match class {
            CharClass::Letter => b"ABCDEFGHIJKLMNOPQRSTUVWXYZ",
            CharClass::Digit => b"0123456789",
        };
        let old = chars[i].to_ascii_uppercase();
        let replacement = loop {
            let c = *pool.choose(rng).expect("pool") as char;
            if c != old {
                break c;
            }
        };
        chars[i] = if chars[i].is_lowercase() { replacement.to_ascii_lowercase() } else { replacement };
    }
    chars.into_iter().collect()
}

fn transpose(s: &str, class: CharClass, rng: &mut ChaCha8Rng) -> String {
    let mut chars: Vec<char> = s.chars().collect();
    let eligible: Vec<usize> = (0..chars.len()).filter(|&i| in_class(chars[i], class)).collect();
    if eligible.len() >= 2 {
        let k = rng.gen_range(0..eligible.len() - 1);
        chars.swap(eligible[k], eligible[k + 1]);
    }
    chars.into_iter().collect()
}

fn in_class(c: char, class: CharClass) -> bool {
    match class {
        CharClass::Letter => c.is_alphabetic(),
        CharClass::Digit => c.is_ascii_digit(),
    }
}

struct Injector<'a> {
    rates: &'a ErrorRates,
    rng: &'a mut ChaCha8Rng,
}

impl Injector<'_> {
    fn roll(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    fn field(&mut self, value: String, class: CharClass, null: f64, typo_p: f64, transpose_p: f64) -> Option<String> {
        let is_null = self.roll(null);
        let do_typo = self.roll(typo_p);
        let do_transpose = self.roll(transpose_p);
        if is_null {
            return None;
        }
        let mut v = value;
        if do_typo {
            v = typo(&v, class, self.rng);
        }
        if do_transpose {
            v = transpose(&v, class, self.rng);
        }
        Some(v)
    }
}

fn format_date(d: NaiveDate, swap: bool, side: Side) -> String {
    let (m, day) = if swap { (d.day(), d.month()) } else { (d.month(), d.day()) };
    match side {
        Side::Patient => format!("{:04}-{m:02}-{day:02}", d.year()),
        Side::External => format!("{:04}{m:02}{day:02}", d.year()),
    }
}

fn render(person: &Person, side: Side, id: String, carries_dod: bool, inj: &mut Injector<'_>) -> RawRecord {
    let r = *inj.rates;
    let name = |s: &str| match side {
        Side::Patient => s.to_string(),
        Side::External => s.to_uppercase(),
    };
    let ssn_raw = if inj.roll(r.invalid_ssn) {
        SSN_PLACEHOLDERS.choose(inj.rng).expect("placeholders").to_string()
    } else {
        person.ssn.clone()
    };
    let ssn_raw = match side {
        Side::Patient => format!("{}-{}-{}", &ssn_raw[0..3], &ssn_raw[3..5], &ssn_raw[5..9]),
        Side::External => ssn_raw,
    };
    let swap = inj.roll(r.date_swap);
    RawRecord {
        record_id: id,
        ssn: inj.field(ssn_raw, CharClass::Digit, r.null.ssn, r.typo.ssn, r.transposition.ssn),
        first_name: inj.field(name(person.first), CharClass::Letter, r.null.first_name, r.typo.first_name, r.transposition.first_name),
        middle_name: inj.field(
            name(person.middle),
            CharClass::Letter,
            r.null.middle_name,
            r.typo.middle_name,
            r.transposition.middle_name,
        ),
        last_name: inj.field(name(person.last), CharClass::Letter, r.null.last_name, r.typo.last_name, r.transposition.last_name),
        birth_date: inj.field(
            format_date(person.birth, swap, side),
            CharClass::Digit,
            r.null.birth_date,
            r.typo.birth_date,
            r.transposition.birth_date,
        ),
        death_date: carries_dod.then(|| format_date(person.death, false, side)),
    }
}

/// Generate a patient file, an external file and their truth map.
/// The same config always yields the same output.
pub fn generate_population(cfg: &SynthConfig) -> Result<Population, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let validity = ValidityConfig::default();
    let mut used = HashSet::new();
    let persons: Vec<Person> = (0..cfg.n_persons).map(|_| draw_person(&mut rng, &mut used, &validity)).collect();

    let n_overlap = ((cfg.n_persons as f64) * cfg.overlap_fraction).round() as usize;
    let n_patient_only = (cfg.n_persons - n_overlap) / 2;
    let mut patient_people: Vec<usize> = (0..n_overlap + n_patient_only).collect();
    let mut external_people: Vec<usize> = (0..n_overlap).chain(n_overlap + n_patient_only..cfg.n_persons).collect();
    patient_people.shuffle(&mut rng);
    external_people.shuffle(&mut rng);

    let mut inj = Injector { rates: &cfg.error_rates, rng: &mut rng };
    let mut patient_id_of = BTreeMap::new();
    let mut patients = Vec::with_capacity(patient_people.len());
    for (i, &p) in patient_people.iter().enumerate() {
        let id = format!("P{:07}", i + 1);
        patient_id_of.insert(p, id.clone());
        let dod = inj.roll(cfg.patient_dod_fraction);
        patients.push(render(&persons[p], Side::Patient, id, dod, &mut inj));
    }
    let mut truth = TruthMap::new();
    let mut external = Vec::with_capacity(external_people.len());
    for (i, &p) in external_people.iter().enumerate() {
        let id = format!("E{:07}", i + 1);
        if let Some(pid) = patient_id_of.get(&p) {
            truth.insert(pid.clone(), id.clone());
        }
        let dod = inj.roll(cfg.dod_coverage);
        external.push(render(&persons[p], Side::External, id, dod, &mut inj));
    }
    Ok(Population { patients, external, truth })
}

pub fn write_truth<W: Write>(truth: &TruthMap, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["patient_id", "external_id"])?;
    for (p, e) in truth {
        w.write_record([p, e])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_truth<R: std::io::Read>(input: R) -> csv::Result<TruthMap> {
    let mut r = csv::Reader::from_reader(input);
    let mut truth = TruthMap::new();
    for row in r.records() {
        let row = row?;
        truth.insert(row[0].to_string(), row[1].to_string());
    }
    Ok(truth)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Score {
    pub true_positive: u64,
    pub false_positive: u64,
    pub false_negative: u64,
}

impl Score {
    pub fn precision(&self) -> Option<f64> {
        let d = self.true_positive + self.false_positive;
        (d > 0).then(|| self.true_positive as f64 / d as f64)
    }

    pub fn recall(&self) -> Option<f64> {
        let d = self.true_positive + self.false_negative;
        (d > 0).then(|| self.true_positive as f64 / d as f64)
    }
}

/// Compare emitted links with the truth map. `rows` must cover every patient.
pub fn score_against_truth(
    rows: &[LinkedRow],
    truth: &TruthMap,
    external_ids: &BTreeSet<String>,
) -> Result<Score, SynthError> {
    let unknown = |kind, id: &str| SynthError::UnknownId { kind, id: id.to_string() };
    let patient_ids: HashSet<&str> = rows.iter().map(|r| r.record_id.as_str()).collect();
    for (p, e) in truth {
        if !patient_ids.contains(p.as_str()) {
            return Err(unknown("patient", p));
        }
        if !external_ids.contains(e) {
            return Err(unknown("external", e));
        }
    }
    let mut score = Score::default();
    for row in rows {
        match (&row.external_record_id, truth.get(&row.record_id)) {
            (Some(ext), _) if !external_ids.contains(ext) => return Err(unknown("external", ext)),
            (Some(ext), Some(t)) if ext == t => score.true_positive += 1,
            (Some(_), _) => score.false_positive += 1,
            (None, Some(_)) => score.false_negative += 1,
            (None, None) => {}
        }
    }
    Ok(score)
}
