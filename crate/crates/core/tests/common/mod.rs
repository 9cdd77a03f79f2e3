//! Shared helpers and brute-force reference implementations.
#![allow(dead_code)]

use tokenlink::ingest::RawRecord;
use tokenlink::linker::{Category, LinkDataset, LinkedRow, ValidationStats};
use tokenlink::normalizer::{clean_record, CleanRecord, DateOrder, ValidityConfig};
use tokenlink::synth::{ErrorRates, FieldRates, SynthConfig};
use tokenlink::tokenizer::{RuleTable, TokenId};

pub fn clean_all(raw: &[RawRecord], cfg: &ValidityConfig, order: DateOrder) -> Vec<CleanRecord> {
    raw.iter().map(|r| clean_record(r, cfg, order)).collect()
}

pub fn datasets(pop: &tokenlink::synth::Population, rules: &RuleTable) -> (LinkDataset, LinkDataset) {
    let cfg = ValidityConfig::default();
    (
        LinkDataset::from_clean("patients", &clean_all(&pop.patients, &cfg, DateOrder::Ymd), rules),
        LinkDataset::from_clean("external", &clean_all(&pop.external, &cfg, DateOrder::Ymd), rules),
    )
}

/// Validation counts by scanning every patient against every external row.
pub fn oracle_validate(id: TokenId, p: &LinkDataset, e: &LinkDataset, unique_dod: bool) -> ValidationStats {
    let (mut hit, mut miss) = (0, 0);
    for i in 0..p.len() {
        let Some(pdod) = p.death_dates[i].as_deref() else { continue };
        let Some(v) = p.token(id, i) else { continue };
        let twins = (0..p.len()).filter(|&j| p.death_dates[j].is_some() && p.token(id, j) == Some(v)).count();
        if twins != 1 {
            continue;
        }
        let ext: Vec<usize> = (0..e.len()).filter(|&k| e.token(id, k) == Some(v)).collect();
        let edod = if unique_dod {
            let dates: Vec<&str> = ext.iter().filter_map(|&k| e.death_dates[k].as_deref()).collect();
            if dates.is_empty() || dates.iter().any(|d| *d != dates[0]) {
                continue;
            }
            Some(dates[0])
        } else {
            if ext.len() != 1 {
                continue;
            }
            e.death_dates[ext[0]].as_deref()
        };
        if edod == Some(pdod) {
            hit += 1;
        } else {
            miss += 1;
        }
    }
    ValidationStats { token_id: id, one_to_one_count: hit + miss, dod_match: hit, dod_nonmatch: miss }
}

/// Linked rows by scanning every patient against every external row.
pub fn oracle_link(p: &LinkDataset, e: &LinkDataset, priority: &[(TokenId, Category)]) -> Vec<LinkedRow> {
    (0..p.len())
        .map(|i| {
            let mut row = LinkedRow {
                record_id: p.record_ids[i].clone(),
                dod_patient: p.death_dates[i].clone(),
                dod_external: None,
                category: None,
                token_id: None,
                external_record_id: None,
            };
            for &(id, cat) in priority {
                let Some(v) = p.token(id, i) else { continue };
                if (0..p.len()).filter(|&j| p.token(id, j) == Some(v)).count() != 1 {
                    continue;
                }
                let ext: Vec<usize> = (0..e.len()).filter(|&k| e.token(id, k) == Some(v)).collect();
                if let [k] = ext[..] {
                    row.dod_external = e.death_dates[k].clone();
                    row.category = Some(cat);
                    row.token_id = Some(id);
                    row.external_record_id = Some(e.record_ids[k].clone());
                    break;
                }
            }
            row
        })
        .collect()
}

/// A spread of error profiles, cycled by seed.
pub fn varied_config(seed: u64, n_persons: usize) -> SynthConfig {
    let k = seed % 5;
    let p = 0.02 * (k as f64 + 1.0);
    let error_rates = ErrorRates {
        null: FieldRates { middle_name: 0.3 + 0.1 * k as f64, ssn: p, ..FieldRates::uniform(p / 2.0) },
        typo: FieldRates::uniform(p),
        transposition: FieldRates::uniform(p / 2.0),
        invalid_ssn: p,
        date_swap: p,
    };
    SynthConfig {
        n_persons,
        overlap_fraction: [0.3, 0.5, 0.7, 0.9, 1.0][k as usize],
        seed,
        error_rates,
        dod_coverage: 0.9,
        patient_dod_fraction: 0.5,
    }
}
