use paradigm::bundled;
use paradigm::engine::{Engine, Trace};
use paradigm::explorer::{explore_with, Checks, Explorer};

fn report(threads: usize, name: &str) -> String {
    let b = bundled::find(name).unwrap();
    let l = b.load().unwrap();
    let checks = Checks { termination: l.target_version, progress: Some(32) };
    explore_with(&Explorer::default().with_threads(threads), &l.model, &l.config, &l.properties, &checks).to_json()
}

#[test]
fn parallel_reports_match_sequential() {
    for name in ["shop-migration", "shop-faulty", "cs-broken"] {
        let one = report(1, name);
        assert_eq!(one, report(4, name), "{name}");
        assert_eq!(one, report(0, name), "{name}");
        assert_eq!(one, report(1, name), "{name}");
    }
}

#[test]
fn exported_traces_replay() {
    for name in ["shop-migration", "shop-faulty", "cs-broken"] {
        let l = bundled::find(name).unwrap().load().unwrap();
        let checks = Checks { termination: l.target_version, progress: Some(32) };
        let r = explore_with(&Explorer::default(), &l.model, &l.config, &l.properties, &checks);
        let mut traces: Vec<Vec<serde_json::Value>> = r.violations.iter().map(|v| v.trace.clone()).collect();
        traces.extend(r.properties.iter().filter_map(|p| p.witness.clone()));
        traces.extend(r.termination.iter().filter_map(|t| t.trace.clone()));
        traces.extend(r.progress.iter().filter_map(|p| p.trace.clone()));
        assert!(!traces.is_empty());
        for lines in traces.into_iter().filter(|t| !t.is_empty()) {
            let text: String = lines.iter().map(|l| format!("{l}\n")).collect();
            let trace = Trace::from_jsonl(&text).unwrap();
            let run = Engine::default().replay(&l.model, &trace).unwrap();
            assert_eq!(run.trace.to_jsonl(), text, "{name}");
        }
    }
}
