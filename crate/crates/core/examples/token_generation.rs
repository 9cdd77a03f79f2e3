// Build all twenty linkage tokens for one record, then a custom rule table.
//
// ```bash
// cargo run --example token_generation
// ```

use tokenlink::ingest::RawRecord;
use tokenlink::normalizer::{clean_record, DateOrder, ValidityConfig};
use tokenlink::tokenizer::{generate_all, RuleTable};

fn main() -> anyhow::Result<()> {
    let raw = RawRecord {
        record_id: "P1".into(),
        first_name: Some("John".into()),
        last_name: Some("Doe".into()),
        birth_date: Some("2008/12/25".into()),
        ssn: Some("123-35-4789".into()),
        ..Default::default()
    };
    let clean = clean_record(&raw, &ValidityConfig::default(), DateOrder::Ymd);
    let rules = RuleTable::builtin();
    let tokens = generate_all(&clean, &rules);
    // No middle name: every rule that uses it stays null.
    for (rule, value) in rules.rules().iter().zip(&tokens.tokens) {
        println!("{:>2}  {:<90} {}", rule.id, rule.describe(), value.as_deref().unwrap_or("null"));
    }

    let custom = RuleTable::from_toml(
        r#"
include_builtin = false

[[rule]]
id = 101
parts = ["last_name[soundex]", "first_name[initial]", "birth_date[year]"]
"#,
    )?;
    let t = generate_all(&clean, &custom);
    println!("\ncustom 101 = {:?}", t.tokens[0]);
    Ok(())
}
