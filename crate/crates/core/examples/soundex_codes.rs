// American Soundex codes as used by the phonetic token rules.
//
// ```bash
// cargo run --example soundex_codes -- Tymczak Pfister
// ```

use tokenlink::tokenizer::soundex;

fn main() -> anyhow::Result<()> {
    let mut names: Vec<String> = std::env::args().skip(1).collect();
    if names.is_empty() {
        names = ["ROBERT", "RUPERT", "ASHCRAFT", "TYMCZAK", "PFISTER", "HONEYMAN", "LEE", "A"]
            .map(String::from)
            .to_vec();
    }
    for name in &names {
        let upper = name.to_uppercase();
        match soundex(&upper) {
            Some(code) => println!("{upper:<12} {code}"),
            None => println!("{upper:<12} (no code)"),
        }
    }
    Ok(())
}
