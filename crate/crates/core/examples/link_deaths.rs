// Link a patient list to a death master file and print one row per patient.
//
// The rules are tried in reference priority order. Patient 1001 has a
// look-alike in the external file that shares the last four SSN digits, so
// the partial-SSN rule is ambiguous and the full-SSN rule links instead.
//
// ```bash
// cargo run --example link_deaths
// ```

use tokenlink::ingest::{parse_source, SourceLayout};
use tokenlink::linker::{build_indexes, link_deaths, priority_list, validate_all, CategoryThresholds, LinkDataset, ValidationStats};
use tokenlink::normalizer::{clean_record, DateOrder, ValidityConfig};
use tokenlink::report::linked_csv;
use tokenlink::tokenizer::{RuleTable, TokenId};

const PATIENTS: &str = include_str!("../fixtures/linked_patients.csv");
const EXTERNAL: &str = include_str!("../fixtures/linked_external.csv");
const REFERENCE: &str = include_str!("../fixtures/reference_validation.csv");

fn load(text: &str, order: DateOrder, label: &str, rules: &RuleTable) -> anyhow::Result<LinkDataset> {
    let mut layout = SourceLayout::standard_delimited();
    layout.date_order = order;
    let parsed = parse_source(&layout, text.as_bytes())?;
    let cfg = ValidityConfig::default();
    let clean: Vec<_> = parsed.records.iter().map(|r| clean_record(r, &cfg, order)).collect();
    Ok(LinkDataset::from_clean(label, &clean, rules))
}

fn main() -> anyhow::Result<()> {
    let rules = RuleTable::builtin();
    let patients = load(PATIENTS, DateOrder::Mdy, "patients", &rules)?;
    let external = load(EXTERNAL, DateOrder::Ymd, "external", &rules)?;

    let mut reference = Vec::new();
    for row in csv::Reader::from_reader(REFERENCE.as_bytes()).records() {
        let row = row?;
        reference.push(ValidationStats::new(TokenId(row[0].parse()?), row[2].parse()?, row[3].parse()?));
    }
    let priority = priority_list(&reference, &CategoryThresholds::default());

    let rows = link_deaths(&patients, &external, &priority)?;
    print!("{}", String::from_utf8(linked_csv(&rows)?)?);

    // The same files scored on their own (tiny) validation subset.
    let local = validate_all(&patients, &external, &build_indexes(&external), &Default::default())?;
    let hits: Vec<_> = local.iter().filter(|s| s.one_to_one_count > 0).collect();
    println!("\nrules with a 1-to-1 match on the local validation subset: {}", hits.len());
    for s in hits {
        println!("  token {:>2}: match {} non-match {}", s.token_id, s.dod_match, s.dod_nonmatch);
    }
    Ok(())
}
