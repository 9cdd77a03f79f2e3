// Completeness, distinctiveness and invalid counts for a small patient list.
//
// ```bash
// cargo run --example field_profile
// ```

use tokenlink::ingest::{parse_source, SourceLayout};
use tokenlink::normalizer::{clean_record, DateOrder, ValidityConfig};
use tokenlink::profiler::{profile_tokens, DistinctMode, profile_fields};
use tokenlink::report::{field_profile_table, token_profile_table};
use tokenlink::tokenizer::RuleTable;

const PATIENTS: &str = include_str!("../fixtures/table2_patients.csv");

fn main() -> anyhow::Result<()> {
    let mut layout = SourceLayout::standard_delimited();
    layout.columns.retain(|role, _| {
        matches!(role, tokenlink::Role::RecordId | tokenlink::Role::FirstName | tokenlink::Role::BirthDate)
    });
    layout.date_order = DateOrder::Mdy;
    let parsed = parse_source(&layout, PATIENTS.as_bytes())?;
    let cfg = ValidityConfig::strict_paper();
    let clean: Vec<_> = parsed.records.iter().map(|r| clean_record(r, &cfg, layout.date_order)).collect();

    print!("{}", field_profile_table("patients", &profile_fields(&parsed.records, &clean)));
    println!();
    let rules = RuleTable::builtin();
    let tokens = profile_tokens(&clean, &rules, DistinctMode::Exact);
    print!("{}", token_profile_table("patient tokens", &tokens, &rules, 4));
    Ok(())
}
