//! Plain-text tables and delimited outputs for the run reports.

use std::fmt::Write as _;

use crate::linker::{Category, LinkedRow, ValidationStats};
use crate::profiler::{FieldProfile, TokenProfile};
use crate::tokenizer::RuleTable;

/// `1234567` as `1,234,567`.
pub fn thousands(n: u64) -> String {
    let s = n.to_string();
    let mut out = String::with_capacity(s.len() + s.len() / 3);
    for (i, c) in s.chars().enumerate() {
        if i > 0 && (s.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    out
}

/// A fraction as a percentage with `sig` significant figures.
pub fn format_pct(fraction: f64, sig: usize) -> String {
    let pct = fraction * 100.0;
    if pct == 0.0 || !pct.is_finite() {
        return "0%".to_string();
    }
    let magnitude = pct.abs().log10().floor() as i64;
    let decimals = (sig as i64 - 1 - magnitude).max(0) as usize;
    let rounded = format!("{pct:.decimals$}");
    // Rounding can carry into a new digit (99.995 -> 100.00).
    let carried: f64 = rounded.parse().unwrap_or(pct);
    if carried.abs().log10().floor() as i64 > magnitude && decimals > 0 {
        return format!("{pct:.prec$}%", prec = decimals - 1);
    }
    format!("{rounded}%")
}

/// Render rows as an aligned text table. The first row is the header.
pub fn text_table(rows: &[Vec<String>]) -> String {
    let Some(header) = rows.first() else { return String::new() };
    let mut widths = vec![0; header.len()];
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(j, (cell, w))| {
                if j == 0 || cell.parse::<f64>().is_err() && !cell.ends_with('%') && !cell.contains(',') {
                    format!("{cell:<w$}")
                } else {
                    format!("{cell:>w$}")
                }
            })
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            let _ = writeln!(out, "{}", rule.join("  "));
        }
    }
    out
}

pub fn field_profile_table(title: &str, profiles: &[FieldProfile]) -> String {
    let mut rows = vec![vec!["Field name".into(), "Complete".into(), "Distinct".into(), "Invalid".into()]];
    for p in profiles {
        let distinct = if p.distinct_exact { thousands(p.distinct) } else { format!("~{}", thousands(p.distinct)) };
        rows.push(vec![p.field.to_string(), thousands(p.complete), distinct, thousands(p.invalid)]);
    }
    let total = profiles.first().map_or(0, |p| p.total_records);
    format!("{title} ({} records)\n\n{}", thousands(total), text_table(&rows))
}

pub fn token_profile_table(title: &str, profiles: &[TokenProfile], rules: &RuleTable, sig: usize) -> String {
    let mut rows = vec![vec![
        "id".into(),
        "Token".into(),
        "Complete".into(),
        "% of total".into(),
        "Distinct".into(),
        "% of total".into(),
    ]];
    for p in profiles {
        let label = rules.get(p.token_id).map(|r| r.describe()).unwrap_or_default();
        let distinct = if p.distinct_exact { thousands(p.distinct) } else { format!("~{}", thousands(p.distinct)) };
        rows.push(vec![
            p.token_id.to_string(),
            label,
            thousands(p.complete),
            format_pct(p.complete_pct, sig),
            distinct,
            format_pct(p.distinct_pct, sig),
        ]);
    }
    let total = profiles.first().map_or(0, |p| p.total_records);
    format!("{title} ({} records)\n\n{}", thousands(total), text_table(&rows))
}

pub fn invalid_ssn_table(title: &str, breakdown: &[(String, u64)]) -> String {
    let mut rows = vec![vec!["Invalid-ssn".into(), "Count".into()]];
    rows.extend(breakdown.iter().map(|(p, c)| vec![p.clone(), thousands(*c)]));
    format!("{title}\n\n{}", text_table(&rows))
}

/// One validation-report line per token, ranked tokens first.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ValidationLine {
    pub token_id: crate::tokenizer::TokenId,
    pub rule: String,
    pub one_to_one: u64,
    pub dod_match: u64,
    pub dod_nonmatch: u64,
    pub match_rate: Option<f64>,
    pub category: Option<Category>,
}

pub fn validation_lines(
    stats: &[ValidationStats],
    ranked: &[(crate::tokenizer::TokenId, Category)],
    rules: &RuleTable,
) -> Vec<ValidationLine> {
    let line = |s: &ValidationStats, category| ValidationLine {
        token_id: s.token_id,
        rule: rules.get(s.token_id).map(|r| r.describe()).unwrap_or_default(),
        one_to_one: s.one_to_one_count,
        dod_match: s.dod_match,
        dod_nonmatch: s.dod_nonmatch,
        match_rate: s.match_rate(),
        category,
    };
    let mut out = Vec::with_capacity(stats.len());
    for (id, cat) in ranked {
        if let Some(s) = stats.iter().find(|s| s.token_id == *id) {
            out.push(line(s, Some(*cat)));
        }
    }
    for s in stats {
        if !ranked.iter().any(|(id, _)| *id == s.token_id) {
            out.push(line(s, None));
        }
    }
    out
}

pub fn validation_table(title: &str, lines: &[ValidationLine]) -> String {
    let mut rows = vec![vec![
        "id".into(),
        "Token".into(),
        "1-to-1 token match".into(),
        "DoD match".into(),
        "DoD non-match".into(),
        "DoD match rate".into(),
        "Category".into(),
    ]];
    for l in lines {
        rows.push(vec![
            l.token_id.to_string(),
            l.rule.clone(),
            thousands(l.one_to_one),
            thousands(l.dod_match),
            thousands(l.dod_nonmatch),
            l.match_rate.map_or("-".into(), |r| format!("{:.1}%", r * 100.0)),
            l.category.map_or("-".into(), |c| c.to_string()),
        ]);
    }
    format!("{title}\n\n{}", text_table(&rows))
}

pub fn validation_csv(lines: &[ValidationLine]) -> csv::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["token_id", "rule", "one_to_one", "dod_match", "dod_nonmatch", "match_rate", "category"])?;
    for l in lines {
        w.write_record([
            l.token_id.to_string(),
            l.rule.clone(),
            l.one_to_one.to_string(),
            l.dod_match.to_string(),
            l.dod_nonmatch.to_string(),
            l.match_rate.map_or(String::new(), |r| format!("{r:.6}")),
            l.category.map_or(String::new(), |c| c.to_string()),
        ])?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

pub const LINKED_HEADER: [&str; 6] =
    ["record_id", "dod_patient", "dod_external", "category", "token_id", "external_record_id"];

pub fn linked_csv(rows: &[LinkedRow]) -> csv::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(LINKED_HEADER)?;
    for r in rows {
        w.write_record([
            r.record_id.as_str(),
            r.dod_patient.as_deref().unwrap_or(""),
            r.dod_external.as_deref().unwrap_or(""),
            &r.category.map_or(String::new(), |c| c.to_string()),
            &r.token_id.map_or(String::new(), |t| t.to_string()),
            r.external_record_id.as_deref().unwrap_or(""),
        ])?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

/// Parse a linked-output file back into rows.
pub fn read_linked<R: std::io::Read>(input: R) -> Result<Vec<LinkedRow>, String> {
    let mut r = csv::Reader::from_reader(input);
    let opt = |s: &str| (!s.is_empty()).then(|| s.to_string());
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(|e| e.to_string())?;
        if row.len() != LINKED_HEADER.len() {
            return Err(format!("expected {} columns, found {}", LINKED_HEADER.len(), row.len()));
        }
        let category = match &row[3] {
            "" => None,
            s => Some(
                s.parse::<u8>().ok().and_then(Category::from_number).ok_or_else(|| format!("bad category `{s}`"))?,
            ),
        };
        let token_id = match &row[4] {
            "" => None,
            s => Some(crate::tokenizer::TokenId(s.parse().map_err(|_| format!("bad token id `{s}`"))?)),
        };
        out.push(LinkedRow {
            record_id: row[0].to_string(),
            dod_patient: opt(&row[1]),
            dod_external: opt(&row[2]),
            category,
            token_id,
            external_record_id: opt(&row[5]),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formats() {
        assert_eq!(thousands(0), "0");
        assert_eq!(thousands(999), "999");
        assert_eq!(thousands(102_889_867), "102,889,867");
        assert_eq!(format_pct(0.466, 4), "46.60%");
        assert_eq!(format_pct(1.0, 4), "100.0%");
        assert_eq!(format_pct(0.999998, 4), "100.0%");
        assert_eq!(format_pct(0.001, 4), "0.1000%");
        assert_eq!(format_pct(0.0, 4), "0%");
        assert_eq!(format_pct(0.9999, 2), "100%");
    }

    #[test]
    fn linked_round_trip() {
        let rows = vec![
            LinkedRow {
                record_id: "1002".into(),
                dod_patient: Some("20071203".into()),
                dod_external: Some("20071207".into()),
                category: Some(Category::Category2),
                token_id: Some(crate::tokenizer::TokenId(6)),
                external_record_id: Some("E9".into()),
            },
            LinkedRow {
                record_id: "1004".into(),
                dod_patient: None,
                dod_external: None,
                category: None,
                token_id: None,
                external_record_id: None,
            },
        ];
        let bytes = linked_csv(&rows).unwrap();
        assert!(String::from_utf8_lossy(&bytes).starts_with("record_id,dod_patient,dod_external,category,token_id"));
        assert_eq!(read_linked(&bytes[..]).unwrap(), rows);
    }
}
