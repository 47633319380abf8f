use std::collections::BTreeSet;
use std::sync::Arc;

use paradigm::bundled::{self, parse_valid};
use paradigm::evolution::{weave_mcpal, McPalSkeleton};
use paradigm::explorer::{project, Explorer};
use paradigm::testing::arb_valid_model;
use paradigm::{Configuration, StdModel};
use proptest::prelude::*;

fn census(model: &StdModel, start: &Configuration, host: &BTreeSet<String>, version: u64) -> BTreeSet<Configuration> {
    let m = Arc::new(model.clone());
    Explorer::default()
        .build(&m, start)
        .states()
        .filter(|(_, c)| c.model_version == version)
        .map(|(_, c)| project(c, host))
        .collect()
}

fn host_census(host: &StdModel) -> (BTreeSet<String>, BTreeSet<Configuration>) {
    let names: BTreeSet<String> = host.components.keys().cloned().collect();
    let plain = census(host, &host.initial_configuration(), &names, host.version);
    (names, plain)
}

#[test]
fn weaving_leaves_bundled_hosts_alone() {
    for b in bundled::EXAMPLES.iter().chain(bundled::FIXTURES) {
        let parsed = parse_valid(b.name, b.source).unwrap();
        let (names, plain) = host_census(&parsed.model);
        let woven = weave_mcpal(&parsed.model, &McPalSkeleton::default()).unwrap();
        let with = census(&woven, &woven.initial_configuration(), &names, woven.version);
        assert_eq!(plain, with, "{}", b.name);
    }
}

#[test]
fn loaded_fragment_is_inert_before_kick_off() {
    for b in [&bundled::SHOP_MIGRATION, &bundled::SHOP_FAULTY] {
        let parsed = parse_valid(b.name, b.source).unwrap();
        let (names, plain) = host_census(&parsed.model);
        let l = b.load().unwrap();
        let before = census(&l.model, &l.config, &names, l.model.version);
        assert_eq!(plain, before, "{}", b.name);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn weaving_leaves_random_hosts_alone(m in arb_valid_model()) {
        let (names, plain) = host_census(&m);
        let woven = weave_mcpal(&m, &McPalSkeleton::default()).unwrap();
        prop_assert_eq!(plain, census(&woven, &woven.initial_configuration(), &names, woven.version));
    }
}
