mod common;

use efasynth::model::validate;
use efasynth::parser::{parse, unparse};
use proptest::prelude::*;

proptest! {
    #[test]
    fn random_models_round_trip(seed in any::<u64>()) {
        let spec = common::random_model(seed);
        let text = unparse(&spec);
        let again = parse(&text, "again").unwrap();
        prop_assert_eq!(&again, &spec);
        prop_assert_eq!(unparse(&again), text);
    }
}

#[test]
fn shipped_models_round_trip() {
    for name in common::shipped_models() {
        let spec = common::load_model(&name);
        assert!(validate(&spec).is_empty(), "{name}");
        let text = unparse(&spec);
        assert_eq!(parse(&text, &name).unwrap(), spec, "{name}");
    }
}

#[test]
fn errors_point_at_the_offending_token() {
    let err = parse("controllable a;\nplant p {\n  location l:\n    edge a when x < goto l;\n}\n", "bad.efa").unwrap_err();
    assert_eq!(err.span.file, "bad.efa");
    assert_eq!(err.span.line, 4);
    let err = parse("controllable a, a;\n", "dup.efa").unwrap_err();
    assert_eq!(err.span.line, 1);
}
