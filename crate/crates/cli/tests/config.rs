use std::path::Path;

use formheat_cli::config::{parse_str, RunConfig, KEYS};
use proptest::prelude::*;

fn key() -> impl Strategy<Value = String> {
    proptest::collection::vec("[a-z_][a-z0-9_]{0,6}", 1..4).prop_map(|parts| parts.join("."))
}

fn value() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9_.;, -]{0,12}[a-zA-Z0-9_.;,-]"
        .prop_map(|s| s.trim().to_string())
        .prop_filter("nonempty", |s| !s.is_empty())
}

proptest! {
    #[test]
    fn parser_never_panics(text in "\\PC{0,200}") {
        let _ = parse_str(&text);
        if let Ok(raw) = parse_str(&text) {
            let _ = RunConfig::from_raw(raw, Path::new("."));
        }
    }

    #[test]
    fn entries_round_trip(pairs in proptest::collection::btree_map(key(), value(), 0..8), comment in any::<bool>()) {
        let mut text = String::new();
        for (k, v) in &pairs {
            if comment {
                text.push_str("# note\n\n");
            }
            text.push_str(&format!("  {k} =\t{v}  {}\n", if comment { "# trailing" } else { "" }));
        }
        let raw = parse_str(&text).unwrap();
        prop_assert_eq!(raw.echo(), pairs.clone());
        for (i, e) in raw.entries.iter().enumerate() {
            prop_assert_eq!(e.line, if comment { 3 * i + 3 } else { i + 1 });
        }
    }

    #[test]
    fn every_listed_key_is_accepted(idx in 0..KEYS.len()) {
        // the key must survive the unknown-key check; value errors are fine
        let key = KEYS[idx];
        prop_assume!(key != "pipeline");
        let raw = parse_str(&format!("pipeline = exponents\n{key} = 1\n")).unwrap();
        if let Err(e) = RunConfig::from_raw(raw, Path::new(".")) {
            prop_assert_ne!(e.message.as_str(), "unknown key");
        }
    }
}
