use tokenlink::tokenizer::soundex;

const FIXTURE: &str = include_str!("../fixtures/soundex_names.csv");

#[test]
fn hand_coded_names() {
    let mut n = 0;
    for line in FIXTURE.lines().skip(1) {
        let (name, code) = line.split_once(',').unwrap();
        assert_eq!(soundex(&name.to_uppercase()).as_deref(), Some(code), "{name}");
        n += 1;
    }
    assert!(n >= 50);
}

#[test]
fn no_code_without_letters() {
    assert_eq!(soundex(""), None);
    assert_eq!(soundex("123"), None);
}
