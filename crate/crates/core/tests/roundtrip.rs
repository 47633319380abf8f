use paradigm::bundled;
use paradigm::dsl::{parse_model, serialize_model, SourceModel};
use paradigm::testing::arb_model;
use paradigm::StdModel;
use proptest::prelude::*;

fn reparse(m: &StdModel) -> StdModel {
    let text = serialize_model(m);
    match parse_model(&SourceModel::new("rt", text.as_str())) {
        Ok(p) => p.model,
        Err(e) => panic!("{e:?}\n{text}"),
    }
}

#[test]
fn bundled_models_round_trip() {
    for b in bundled::EXAMPLES.iter().chain(bundled::FIXTURES) {
        let parsed = bundled::parse_valid(b.name, b.source).unwrap().model;
        assert_eq!(reparse(&parsed), parsed, "{}", b.name);
        let loaded = b.load().unwrap();
        assert_eq!(reparse(&loaded.model), *loaded.model, "{} loaded", b.name);
        let text = serialize_model(&parsed);
        assert_eq!(serialize_model(&reparse(&parsed)), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn generated_models_round_trip(m in arb_model()) {
        prop_assert_eq!(reparse(&m), m);
    }
}
