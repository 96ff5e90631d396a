use std::collections::BTreeMap;
use std::path::PathBuf;

use bugscope_core::astdiff::NodeHistogram;
use bugscope_core::svparse::{histogram_of, SourceFile};

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/golden")
}

#[test]
fn golden_snippets_match_hand_counts() {
    let dir = golden_dir();
    let expected: BTreeMap<String, NodeHistogram> =
        serde_json::from_str(&std::fs::read_to_string(dir.join("expected.json")).unwrap()).unwrap();
    assert!(expected.len() >= 20);
    let mut failures = Vec::new();
    for (name, want) in &expected {
        let src = std::fs::read_to_string(dir.join(name)).unwrap();
        let file = SourceFile::new(name.as_str(), src, "golden").unwrap();
        let got = histogram_of(&file).unwrap_or_else(|e| panic!("{name}: {e}"));
        if &got != want {
            failures.push(format!("{name}: got {got:?}, want {want:?}"));
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn every_snippet_has_an_expectation() {
    let dir = golden_dir();
    let expected: BTreeMap<String, serde_json::Value> =
        serde_json::from_str(&std::fs::read_to_string(dir.join("expected.json")).unwrap()).unwrap();
    for entry in std::fs::read_dir(&dir).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        if name.ends_with(".sv") {
            assert!(expected.contains_key(&name), "{name} lacks an expectation");
        }
    }
}
