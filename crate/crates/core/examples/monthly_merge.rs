// Fold a monthly death-master update into the existing file.
//
// ```bash
// cargo run --example monthly_merge
// ```

use tokenlink::ingest::{merge_monthly_update, parse_source, write_records, SourceLayout};

const EXISTING: &str = "\
record_id,first_name,middle_name,last_name,birth_date,death_date,ssn
1,MARY,,SHAW,19300101,19990101,123456780
2,PAUL,,ROSS,19400202,20010303,234567801
";

const UPDATE: &str = "\
record_id,first_name,middle_name,last_name,birth_date,death_date,ssn
3,PAUL,A,ROSS,19400202,20010304,234567801
4,JUNE,,KIM,19500505,20200606,345678012
5,NOBODY,,NOSSN,19600606,20200707,
";

fn main() -> anyhow::Result<()> {
    let layout = SourceLayout::standard_delimited();
    let existing = parse_source(&layout, EXISTING.as_bytes())?.records;
    let update = parse_source(&layout, UPDATE.as_bytes())?.records;

    let once = merge_monthly_update(existing, update.clone());
    let twice = merge_monthly_update(once.records.clone(), update);
    assert_eq!(once.records, twice.records, "reapplying an update changes nothing");

    let mut out = Vec::new();
    write_records(&layout, &once.records, &mut out)?;
    print!("{}", String::from_utf8(out)?);
    println!("rejected without ssn: {}", once.rejected.len());
    Ok(())
}
