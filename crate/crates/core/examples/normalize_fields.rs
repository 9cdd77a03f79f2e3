// Clean raw identity fields the way both sides of a linkage are cleaned.
//
// ```bash
// cargo run --example normalize_fields
// ```

use tokenlink::ingest::RawRecord;
use tokenlink::normalizer::{
    clean_record, normalize_date, normalize_digits, normalize_name, validate_date, validate_ssn, DateOrder, NameKind,
    ValidityConfig,
};

fn main() -> anyhow::Result<()> {
    println!("ssn 123-35-4789    -> {:?}", normalize_digits(Some("123-35-4789")));
    println!("date 2008/12/25    -> {:?}", normalize_date(Some("2008/12/25"), DateOrder::Ymd));
    println!("date 12/3/2007 mdy -> {:?}", normalize_date(Some("12/3/2007"), DateOrder::Mdy));
    println!("name O'Brien-Núñez -> {:?}", normalize_name(Some("O'Brien-Núñez"), NameKind::Last));
    println!(
        "long first name   -> {:?}",
        normalize_name(Some("Maximilianalexander"), NameKind::First)
    );

    let strict = ValidityConfig::strict_paper();
    for ssn in ["123354789", "999999999", "666123456", "123004789", "123450000", "123456789"] {
        match validate_ssn(ssn, &strict) {
            Ok(_) => println!("{ssn}: valid"),
            Err(why) => println!("{ssn}: invalid ({why})"),
        }
    }
    for date in ["18491231", "18500101", "20221231", "20230101"] {
        println!("{date}: {:?}", validate_date(date, &strict));
    }

    let raw = RawRecord {
        record_id: "1002".into(),
        first_name: Some("maría".into()),
        middle_name: Some("   ".into()),
        last_name: Some("%^3".into()),
        birth_date: Some("3/2/1940".into()),
        death_date: Some("12/3/2007".into()),
        ssn: Some("234-56-7890".into()),
    };
    let clean = clean_record(&raw, &ValidityConfig::default(), DateOrder::Mdy);
    println!("\n{clean:#?}");
    Ok(())
}
