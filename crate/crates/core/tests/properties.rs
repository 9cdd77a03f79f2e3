use std::collections::{BTreeSet, HashMap};

use proptest::prelude::*;

use tokenlink::ingest::{merge_monthly_update, parse_source, write_records, RawRecord, SourceLayout};
use tokenlink::linker::{priority_list, rank_tokens, Category, CategoryThresholds, ValidationStats};
use tokenlink::normalizer::{
    clean_record, normalize_digits, normalize_name, CleanRecord, Cleaned, DateOrder, NameKind, ValidityConfig,
};
use tokenlink::profiler::{profile_field, profile_tokens, DistinctMode};
use tokenlink::tokenizer::{generate_all, generate_token, Element, RuleTable, TokenId};
use tokenlink::Role;

fn opt_field() -> impl Strategy<Value = Option<String>> {
    prop::option::of("[A-Za-z0-9 ,\"'-]{0,12}")
}

fn raw_record() -> impl Strategy<Value = RawRecord> {
    ("[A-Z0-9]{1,6}", opt_field(), opt_field(), opt_field(), opt_field(), opt_field(), opt_field()).prop_map(
        |(id, first, middle, last, dob, dod, ssn)| RawRecord {
            record_id: id,
            first_name: first,
            middle_name: middle,
            last_name: last,
            birth_date: dob,
            death_date: dod,
            ssn,
        },
    )
}

fn dmf_record() -> impl Strategy<Value = RawRecord> {
    ("[0-9]{1,4}", "[A-Z]{1,6}", prop::option::of("[0-9]{3}-?[0-9]{2}")).prop_map(|(id, last, ssn)| RawRecord {
        record_id: id,
        last_name: Some(last),
        ssn,
        ..Default::default()
    })
}

proptest! {
    #[test]
    fn merge_is_idempotent_and_right_biased(
        existing in prop::collection::vec(dmf_record(), 0..20),
        update in prop::collection::vec(dmf_record(), 0..20),
    ) {
        let once = merge_monthly_update(existing, update.clone());
        let twice = merge_monthly_update(once.records.clone(), update.clone());
        prop_assert_eq!(&once.records, &twice.records);

        let mut last_update: HashMap<String, &RawRecord> = HashMap::new();
        for r in &update {
            if let Some(k) = normalize_digits(r.ssn.as_deref()) {
                last_update.insert(k, r);
            }
        }
        let keys: Vec<String> = once.records.iter().map(|r| normalize_digits(r.ssn.as_deref()).unwrap()).collect();
        prop_assert_eq!(keys.iter().collect::<BTreeSet<_>>().len(), keys.len());
        for (k, r) in keys.iter().zip(&once.records) {
            if let Some(u) = last_update.get(k) {
                prop_assert_eq!(*u, r);
            }
        }
    }

    #[test]
    fn name_normalization_invariants(s in "\\PC{0,40}") {
        for kind in [NameKind::First, NameKind::Middle, NameKind::Last] {
            if let Some(n) = normalize_name(Some(&s), kind) {
                prop_assert!(!n.is_empty() && n.len() <= kind.max_len());
                prop_assert!(n.bytes().all(|b| b.is_ascii_uppercase()));
                prop_assert_eq!(normalize_name(Some(&n), kind), Some(n.clone()));
            }
        }
        if let Some(d) = normalize_digits(Some(&s)) {
            prop_assert!(d.bytes().all(|b| b.is_ascii_digit()));
            prop_assert_eq!(normalize_digits(Some(&d)), Some(d.clone()));
        }
    }

    #[test]
    fn clean_record_is_idempotent(raw in raw_record()) {
        let cfg = ValidityConfig::default();
        let once = clean_record(&raw, &cfg, DateOrder::Ymd);
        let again = clean_record(&once.to_raw(), &cfg, DateOrder::Ymd);
        let valid = |c: &CleanRecord| [
            c.first_name.clone(), c.middle_name.clone(), c.last_name.clone(),
            c.birth_date.clone(), c.death_date.clone(), c.ssn.clone(),
        ].into_iter().map(|x| match x { Cleaned::Valid(v) => Some(v), _ => None }).collect::<Vec<_>>();
        prop_assert_eq!(valid(&once), valid(&again));
    }

    #[test]
    fn delimited_round_trip(records in prop::collection::vec(raw_record(), 0..15)) {
        let mut seen = BTreeSet::new();
        let records: Vec<RawRecord> = records
            .into_iter()
            .filter(|r| seen.insert(r.record_id.clone()))
            .map(|mut r| {
                for f in [&mut r.first_name, &mut r.middle_name, &mut r.last_name, &mut r.birth_date, &mut r.death_date, &mut r.ssn] {
                    if f.as_deref() == Some("") {
                        *f = None;
                    }
                }
                r
            })
            .collect();
        let layout = SourceLayout::standard_delimited();
        let mut buf = Vec::new();
        write_records(&layout, &records, &mut buf).unwrap();
        let parsed = parse_source(&layout, &buf[..]).unwrap();
        prop_assert!(parsed.errors.is_empty());
        prop_assert_eq!(parsed.records, records);
    }

    #[test]
    fn profile_is_permutation_invariant(
        records in prop::collection::vec(raw_record(), 0..30),
        seed in any::<u64>(),
    ) {
        use rand::{seq::SliceRandom, SeedableRng};
        let cfg = ValidityConfig::default();
        let clean: Vec<_> = records.iter().map(|r| clean_record(r, &cfg, DateOrder::Ymd)).collect();
        let mut order: Vec<usize> = (0..records.len()).collect();
        order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let raw2: Vec<_> = order.iter().map(|&i| records[i].clone()).collect();
        let clean2: Vec<_> = order.iter().map(|&i| clean[i].clone()).collect();
        let rules = RuleTable::builtin();
        prop_assert_eq!(
            profile_tokens(&clean, &rules, DistinctMode::Exact),
            profile_tokens(&clean2, &rules, DistinctMode::Exact)
        );
        for role in [Role::FirstName, Role::LastName, Role::Ssn, Role::BirthDate] {
            let p = profile_field(&records, &clean, role).unwrap();
            prop_assert_eq!(&p, &profile_field(&raw2, &clean2, role).unwrap());
            let mut present: Vec<&str> =
                records.iter().filter_map(|r| r.get(role)).filter(|v| !v.trim().is_empty()).collect();
            prop_assert_eq!(p.complete, present.len() as u64);
            present.sort_unstable();
            present.dedup();
            prop_assert_eq!(p.distinct, present.len() as u64);
        }
    }

    #[test]
    fn token_nullity_is_monotone(mask_a in 0u8..32, mask_b in 0u8..32) {
        let full = full_record();
        let lo = mask_a & mask_b;
        let rules = RuleTable::builtin();
        let a = generate_all(&masked(&full, lo), &rules);
        let b = generate_all(&masked(&full, mask_b), &rules);
        for (x, y) in a.tokens.iter().zip(&b.tokens) {
            prop_assert!(x.is_none() || y.is_some());
            if let (Some(x), Some(y)) = (x, y) {
                prop_assert_eq!(x, y);
            }
        }
    }

    #[test]
    fn categories_partition_rates(
        counts in prop::collection::vec((0u64..5000, 0u64..5000), 1..20),
        c1 in 0.5f64..1.0,
    ) {
        let thresholds = CategoryThresholds { category1_above: c1, category3_below: c1 / 2.0 };
        let stats: Vec<ValidationStats> = counts
            .iter()
            .enumerate()
            .map(|(i, &(m, n))| ValidationStats::new(TokenId(i as u16 + 1), m, n))
            .collect();
        let ranked = priority_list(&stats, &thresholds);
        prop_assert_eq!(ranked.len(), stats.iter().filter(|s| s.one_to_one_count > 0).count());
        let rate = |id: TokenId| stats.iter().find(|s| s.token_id == id).unwrap().match_rate().unwrap();
        for w in ranked.windows(2) {
            prop_assert!(rate(w[0].0) >= rate(w[1].0));
            prop_assert!(w[0].1 <= w[1].1);
        }
        for (id, cat) in &ranked {
            let r = rate(*id);
            let expect = if r > c1 { Category::Category1 } else if r < c1 / 2.0 { Category::Category3 } else { Category::Category2 };
            prop_assert_eq!(*cat, expect);
        }
        prop_assert_eq!(rank_tokens(&stats), ranked.iter().map(|p| p.0).collect::<Vec<_>>());
    }
}

fn full_record() -> CleanRecord {
    let raw = RawRecord {
        record_id: "1".into(),
        first_name: Some("Jane".into()),
        middle_name: Some("Q".into()),
        last_name: Some("Public".into()),
        birth_date: Some("19700101".into()),
        death_date: None,
        ssn: Some("123354789".into()),
    };
    clean_record(&raw, &ValidityConfig::default(), DateOrder::Ymd)
}

/// Bit i set keeps element i valid; cleared bits make it invalid or missing.
pub fn masked(full: &CleanRecord, mask: u8) -> CleanRecord {
    let mut r = full.clone();
    let slots = [&mut r.ssn, &mut r.first_name, &mut r.middle_name, &mut r.last_name, &mut r.birth_date];
    for (i, slot) in slots.into_iter().enumerate() {
        if mask & (1 << i) == 0 {
            *slot = if i % 2 == 0 { Cleaned::Invalid } else { Cleaned::Missing };
        }
    }
    r
}

#[test]
fn token_parts_reference_their_elements() {
    let rules = RuleTable::builtin();
    let full = full_record();
    for rule in rules.rules() {
        assert!(generate_token(rule, &full).is_some(), "rule {}", rule.id);
        for (bit, e) in [Element::Ssn, Element::FirstName, Element::MiddleName, Element::LastName, Element::BirthDate]
            .into_iter()
            .enumerate()
        {
            let t = generate_token(rule, &masked(&full, !(1u8 << bit) & 31));
            assert_eq!(t.is_none(), rule.elements().contains(&e), "rule {} element {:?}", rule.id, e);
        }
    }
}
