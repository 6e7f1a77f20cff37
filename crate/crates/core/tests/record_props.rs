use proptest::prelude::*;
use tsgen_core::record::{parse_record, serialize_record, Origin, Span, TsRecord};
use tsgen_core::span::{mask_span, splice};
use tsgen_core::{build_model_input, tokenize, MASK, SEP};

fn token() -> impl Strategy<Value = String> {
    prop_oneof!["[a-zA-Z0-9]{1,8}", "[\\p{Han}]{1,3}", "[.,!?;:]", "[äöüßéèçñ]{1,4}",]
}

fn tokens(max: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(token(), 1..max)
}

fn record() -> impl Strategy<Value = TsRecord> {
    (tokens(20), tokens(20), any::<prop::sample::Index>(), any::<prop::sample::Index>(), 0..3usize, tokens(6)).prop_map(
        |(src, tgt, a, b, origin, qe_suggestion)| {
            let (x, y) = (a.index(tgt.len()), b.index(tgt.len()));
            let (start, end) = (x.min(y), x.max(y));
            let (masked, cut) = mask_span(&tgt, start, end).unwrap();
            let origin = Origin::ALL[origin];
            let suggestion = if origin == Origin::Qe { qe_suggestion } else { cut };
            TsRecord::new(src, masked, suggestion, Span::new(start, end), origin).unwrap()
        },
    )
}

proptest! {
    #[test]
    fn serialization_round_trips(r in record()) {
        let line = serialize_record(&r).unwrap();
        prop_assert!(!line.contains('\n'));
        prop_assert_eq!(line.split('\t').count(), 6);
        prop_assert_eq!(parse_record(&line).unwrap(), r);
    }

    #[test]
    fn splice_inverts_masking(tgt in tokens(30), a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>()) {
        let (x, y) = (a.index(tgt.len()), b.index(tgt.len()));
        let (masked, suggestion) = mask_span(&tgt, x.min(y), x.max(y)).unwrap();
        prop_assert_eq!(masked.iter().filter(|t| *t == MASK).count(), 1);
        prop_assert_eq!(suggestion.len(), x.max(y) - x.min(y) + 1);
        prop_assert_eq!(splice(&masked, &suggestion), tgt);
    }

    #[test]
    fn model_input_has_one_separator(r in record()) {
        let (input, output) = build_model_input(&r);
        prop_assert_eq!(input.iter().filter(|t| **t == SEP).count(), 1);
        prop_assert_eq!(input.len(), r.src.len() + 1 + r.masked.len());
        prop_assert_eq!(output, r.suggestion.iter().map(String::as_str).collect::<Vec<_>>());
    }

    #[test]
    fn tokenize_is_deterministic_and_idempotent(text in "\\PC{0,60}") {
        let once = tokenize(&text);
        prop_assert_eq!(&once, &tokenize(&text));
        prop_assert!(once.iter().all(|t| !t.is_empty() && !t.chars().any(char::is_whitespace)));
        prop_assert_eq!(tokenize(&once.join(" ")), once);
    }
}
