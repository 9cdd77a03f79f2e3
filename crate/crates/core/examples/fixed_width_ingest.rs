// Read a fixed-width Latin-1 death master extract and clean it.
//
// ```bash
// cargo run --example fixed_width_ingest
// ```

use tokenlink::ingest::{parse_source, SourceLayout};
use tokenlink::normalizer::{clean_record, ValidityConfig};

const LAYOUT: &str = r#"
format = "fixed_width"
has_header = false
encoding = "latin1"

[columns]
ssn = { start = 0, length = 9 }
last_name = { start = 9, length = 20 }
first_name = { start = 29, length = 15 }
middle_name = { start = 44, length = 15 }
death_date = { start = 59, length = 8 }
birth_date = { start = 67, length = 8 }
"#;

fn line(ssn: &str, last: &str, first: &str, middle: &str, dod: &str, dob: &str) -> Vec<u8> {
    let text = format!("{ssn:<9}{last:<20}{first:<15}{middle:<15}{dod:<8}{dob:<8}\n");
    // Latin-1: one byte per character.
    text.chars().map(|c| c as u32 as u8).collect()
}

fn main() -> anyhow::Result<()> {
    let layout = SourceLayout::from_toml(LAYOUT)?;
    let mut data = Vec::new();
    data.extend(line("123354789", "MÜLLER", "JOSÉ", "", "20071207", "19400203"));
    data.extend(line("234567890", "DOE", "JANE", "Q", "19930717", "19210314"));
    data.extend(b"short line\n");

    let parsed = parse_source(&layout, &data[..])?;
    let cfg = ValidityConfig::default();
    for rec in &parsed.records {
        let c = clean_record(rec, &cfg, layout.date_order);
        println!(
            "row {}: {:?} {:?} ssn={:?} dod={:?}",
            rec.record_id,
            c.first_name.value(),
            c.last_name.value(),
            c.ssn.value(),
            c.death_date.value()
        );
    }
    for e in &parsed.errors {
        println!("rejected: {e}");
    }
    println!("{:?}", parsed.report());
    Ok(())
}
