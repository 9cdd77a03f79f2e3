// Rank rules and assign confidence categories from validation counts.
//
// The counts below are per-rule reference figures from a 40,024-patient
// validation subset; no record data is needed to rank them.
//
// ```bash
// cargo run --example validation_categories
// ```

use tokenlink::linker::{priority_list, CategoryThresholds, ValidationStats};
use tokenlink::report::{validation_lines, validation_table};
use tokenlink::tokenizer::{RuleTable, TokenId};

const REFERENCE: &str = include_str!("../fixtures/reference_validation.csv");

fn main() -> anyhow::Result<()> {
    let mut stats = Vec::new();
    for row in csv::Reader::from_reader(REFERENCE.as_bytes()).records() {
        let row = row?;
        stats.push(ValidationStats::new(TokenId(row[0].parse()?), row[2].parse()?, row[3].parse()?));
    }
    let ranked = priority_list(&stats, &CategoryThresholds::default());
    let lines = validation_lines(&stats, &ranked, &RuleTable::builtin());
    print!("{}", validation_table("reference validation counts", &lines));

    let stricter = CategoryThresholds { category1_above: 0.84, category3_below: 0.60 };
    let regrouped = priority_list(&stats, &stricter);
    println!("\nwith thresholds 84% / 60%:");
    for cat in 1..=3u8 {
        let ids: Vec<String> =
            regrouped.iter().filter(|(_, c)| c.number() == cat).map(|(id, _)| id.to_string()).collect();
        println!("  category {cat}: {}", ids.join(", "));
    }
    Ok(())
}
