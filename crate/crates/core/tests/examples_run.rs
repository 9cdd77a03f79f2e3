//! Every example in `examples/` runs to completion.

macro_rules! example {
    ($name:ident) => {
        mod $name {
            #![allow(dead_code)]
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", stringify!($name), ".rs"));

            #[test]
            fn runs() {
                main().unwrap();
            }
        }
    };
}

example!(normalize_fields);
example!(soundex_codes);
example!(token_generation);
example!(field_profile);
example!(validation_categories);
example!(link_deaths);
example!(monthly_merge);
example!(fixed_width_ingest);
