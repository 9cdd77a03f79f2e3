// Generate a synthetic pair with known truth, link it and score the result.
//
// ```bash
// cargo run --release --example synth_round_trip -- 20000 7
// ```

use std::collections::BTreeSet;

use tokenlink::linker::{build_indexes, link_deaths, priority_list, validate_all, CategoryThresholds, LinkDataset};
use tokenlink::normalizer::{clean_record, DateOrder, ValidityConfig};
use tokenlink::synth::{generate_population, score_against_truth, FieldRates, SynthConfig};
use tokenlink::tokenizer::RuleTable;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let n_persons = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5000);
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(42);

    let mut cfg = SynthConfig { n_persons, seed, overlap_fraction: 0.5, ..Default::default() };
    cfg.error_rates.typo = FieldRates::uniform(0.05);
    cfg.error_rates.null.middle_name = 0.5;
    cfg.error_rates.invalid_ssn = 0.02;
    let pop = generate_population(&cfg)?;

    let rules = RuleTable::builtin();
    let validity = ValidityConfig::default();
    let clean = |rs: &[tokenlink::RawRecord]| -> Vec<_> {
        rs.iter().map(|r| clean_record(r, &validity, DateOrder::Ymd)).collect()
    };
    let patients = LinkDataset::from_clean("patients", &clean(&pop.patients), &rules);
    let external = LinkDataset::from_clean("external", &clean(&pop.external), &rules);

    let stats = validate_all(&patients, &external, &build_indexes(&external), &Default::default())?;
    let priority = priority_list(&stats, &CategoryThresholds::default());
    let rows = link_deaths(&patients, &external, &priority)?;

    let ids: BTreeSet<String> = external.record_ids.iter().cloned().collect();
    let score = score_against_truth(&rows, &pop.truth, &ids)?;
    println!(
        "{} patients, {} external, {} true pairs",
        pop.patients.len(),
        pop.external.len(),
        pop.truth.len()
    );
    println!("priority: {:?}", priority.iter().map(|(t, c)| format!("{t}/{}", c.number())).collect::<Vec<_>>());
    println!(
        "TP {} FP {} FN {}  precision {:.4} recall {:.4}",
        score.true_positive,
        score.false_positive,
        score.false_negative,
        score.precision().unwrap_or(0.0),
        score.recall().unwrap_or(0.0)
    );
    Ok(())
}
