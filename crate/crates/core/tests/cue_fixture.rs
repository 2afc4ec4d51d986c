use std::collections::BTreeMap;

use hiermail::corpus::{load_corpus, CorpusFormat, HeuristicRecognizer};
use hiermail::cues::{detect_cues, CueCategory, CueLexicons};

type Labels = BTreeMap<String, BTreeMap<String, Vec<String>>>;

#[test]
fn hand_labelled_emails_match_detector() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/cues");
    let corpus = load_corpus(format!("{dir}/emails.jsonl").as_ref(), CorpusFormat::Jsonl).unwrap();
    let expected: Labels =
        serde_json::from_str(&std::fs::read_to_string(format!("{dir}/expected.json")).unwrap())
            .unwrap();
    let lex = CueLexicons::default();
    let clean = corpus.preprocess(&HeuristicRecognizer::default());
    let mut mismatches = Vec::new();
    for email in &clean.emails {
        let report = detect_cues(&email.clean_body, &lex);
        let want = &expected[&email.id];
        for cat in CueCategory::ALL {
            let got: Vec<String> = report.tokens(cat).into_iter().map(String::from).collect();
            if got != want[cat.as_str()] {
                mismatches.push(format!(
                    "{} {}: got {:?}, want {:?}\n  clean: {}",
                    email.id, cat, got, want[cat.as_str()], email.clean_body
                ));
            }
        }
    }
    assert!(mismatches.is_empty(), "{}", mismatches.join("\n"));
}
