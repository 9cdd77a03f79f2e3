//! American Soundex.
//!
//! The first letter is kept. Following letters map to digits; a digit equal
//! to the previous one is dropped unless a vowel (A, E, I, O, U, Y) sits
//! between them. H and W are skipped without separating. The code is padded
//! or cut to one letter plus three digits.

fn code(c: u8) -> Option<u8> {
    match c {
        b'B' | b'F' | b'P' | b'V' => Some(b'1'),
        b'C' | b'G' | b'J' | b'K' | b'Q' | b'S' | b'X' | b'Z' => Some(b'2'),
        b'D' | b'T' => Some(b'3'),
        b'L' => Some(b'4'),
        b'M' | b'N' => Some(b'5'),
        b'R' => Some(b'6'),
        _ => None,
    }
}

/// Soundex code of an uppercase `A-Z` name. `None` for empty or
/// non-conforming input.
pub fn soundex(name: &str) -> Option<String> {
    let bytes = name.as_bytes();
    let (&first, rest) = bytes.split_first()?;
    if !bytes.iter().all(u8::is_ascii_uppercase) {
        return None;
    }
    let mut out = Vec::with_capacity(4);
    out.push(first);
    let mut last = code(first);
    for &c in rest {
        if out.len() == 4 {
            break;
        }
        match c {
            b'H' | b'W' => {}
            _ => match code(c) {
                Some(d) => {
                    if last != Some(d) {
                        out.push(d);
                    }
                    last = Some(d);
                }
                None => last = None,
            },
        }
    }
    out.resize(4, b'0');
    Some(String::from_utf8(out).expect("ascii"))
}

#[cfg(test)]
mod tests {
    use super::soundex;

    #[test]
    fn collisions_and_padding() {
        assert_eq!(soundex("ROBERT").as_deref(), Some("R163"));
        assert_eq!(soundex("RUPERT").as_deref(), Some("R163"));
        assert_eq!(soundex("A").as_deref(), Some("A000"));
        assert_eq!(soundex("ASHCRAFT").as_deref(), Some("A261"));
        assert_eq!(soundex("PFISTER").as_deref(), Some("P236"));
        assert_eq!(soundex("HONEYMAN").as_deref(), Some("H555"));
    }

    #[test]
    fn rejects_non_conforming() {
        assert_eq!(soundex(""), None);
        assert_eq!(soundex("robert"), None);
        assert_eq!(soundex("O'HARA"), None);
    }
}
