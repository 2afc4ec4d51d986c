use proptest::collection::vec;
use proptest::prelude::*;

use hiermail::corpus::{preprocess_email, split_corpus, Corpus, Email, HeuristicRecognizer};
use hiermail::cues::{detect_cues, CueCategory, CueLexicons};
use hiermail::docvec::{cosine_similarity, DocVector};
use hiermail::metrics::{coherence, trigram_overlap, BigramModel, Trigram};
use hiermail::tags;
use hiermail::wordlm::apply_temperature;

/// Fragments that exercise the different preprocessing rules.
fn fragment() -> impl Strategy<Value = String> {
    prop_oneof![
        "[A-Za-z]{1,9}",
        "[A-Z][a-z]{2,8}",
        "[0-9]{1,4}",
        Just("John".to_string()),
        Just("PayPal".to_string()),
        Just("<SOT>".to_string()),
        Just("<EOT>".to_string()),
        Just("ent".to_string()),
        Just("link".to_string()),
        Just("jane.doe@example.com".to_string()),
        Just("https://example.com/a?b=1.".to_string()),
        Just("www.bank.com,".to_string()),
        Just("<b>bold</b>".to_string()),
        Just("<br/>".to_string()),
        Just("&amp;".to_string()),
        Just("Café".to_string()),
        Just("don't".to_string()),
        Just("e-mail".to_string()),
        "[.,!?;:'\"()\\-]{1,3}",
        Just("\n".to_string()),
        Just("\t".to_string()),
    ]
}

fn fuzz_text() -> impl Strategy<Value = String> {
    vec((fragment(), prop_oneof![Just(" "), Just(""), Just("\n")]), 0..25)
        .prop_map(|parts| parts.into_iter().map(|(f, s)| f + s).collect())
}

fn word() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["a", "b", "c", "d", ".", "?"]).prop_map(String::from)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn preprocessing_is_idempotent(raw in fuzz_text()) {
        let rec = HeuristicRecognizer::default();
        let once = preprocess_email(&raw, &rec);
        prop_assert_eq!(preprocess_email(&once, &rec), once.clone());
        prop_assert!(once.starts_with(tags::SOT) && once.ends_with(tags::EOT));
        prop_assert!(once.is_ascii());
    }

    #[test]
    fn arbitrary_unicode_is_idempotent(raw in "\\PC{0,60}") {
        let rec = HeuristicRecognizer::default();
        let once = preprocess_email(&raw, &rec);
        prop_assert_eq!(preprocess_email(&once, &rec), once);
    }
}

proptest! {
    #[test]
    fn temperature_keeps_argmax_and_orders_entropy(
        logits in vec(-10.0f64..10.0, 2..30),
        t1 in 0.05f64..1.0,
        dt in 0.01f64..1.0,
    ) {
        let cold = apply_temperature(&logits, t1).unwrap();
        let warm = apply_temperature(&logits, t1 + dt).unwrap();
        prop_assert!((cold.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let top = (0..logits.len()).fold(0, |b, i| if logits[i] > logits[b] { i } else { b });
        prop_assert_eq!(cold.argmax(), top);
        prop_assert_eq!(warm.argmax(), top);
        prop_assert!(warm.entropy() >= cold.entropy() - 1e-12);
    }

    #[test]
    fn cosine_is_bounded_symmetric_and_scale_free(
        a in vec(-5.0f64..5.0, 4),
        b in vec(-5.0f64..5.0, 4),
        k in 0.1f64..10.0,
    ) {
        prop_assume!(a.iter().any(|x| x.abs() > 1e-6) && b.iter().any(|x| x.abs() > 1e-6));
        let (va, vb) = (DocVector(a.clone()), DocVector(b));
        let ab = cosine_similarity(&va, &vb).unwrap();
        prop_assert!((-1.0..=1.0).contains(&ab));
        prop_assert_eq!(ab, cosine_similarity(&vb, &va).unwrap());
        let scaled = DocVector(a.iter().map(|x| x * k).collect());
        prop_assert!((cosine_similarity(&scaled, &vb).unwrap() - ab).abs() < 1e-12);
        prop_assert!((cosine_similarity(&va, &va).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cues_grow_with_text_and_point_at_their_tokens(
        head in vec(prop::sample::select(CUE_WORDS.to_vec()), 0..20),
        tail in vec(prop::sample::select(CUE_WORDS.to_vec()), 0..20),
    ) {
        let lex = CueLexicons::default();
        let short = format!("<SOT> {} <EOT>", head.join(" "));
        let long = format!("<SOT> {} {} <EOT>", head.join(" "), tail.join(" "));
        let (rs, rl) = (detect_cues(&short, &lex), detect_cues(&long, &lex));
        let words: Vec<&str> = long.split_whitespace().filter(|t| !tags::is_marker(t)).collect();
        for c in CueCategory::ALL {
            prop_assert!(rl.count(c) >= rs.count(c));
            for m in &rl.matches[&c] {
                prop_assert_eq!(words[m.position], m.token.as_str());
            }
        }
    }

    #[test]
    fn bigram_conditionals_sum_to_one(
        seqs in vec(vec(word(), 2..8), 1..5),
        alpha in 0.1f64..3.0,
    ) {
        let bm = BigramModel::from_sequences(&seqs, alpha).unwrap();
        for c in bm.vocabulary() {
            let fwd: f64 = bm.vocabulary().iter().map(|w| bm.forward(c, w)).sum();
            let bwd: f64 = bm.vocabulary().iter().map(|w| bm.backward(c, w)).sum();
            prop_assert!((fwd - 1.0).abs() < 1e-9, "forward sum {}", fwd);
            prop_assert!((bwd - 1.0).abs() < 1e-9, "backward sum {}", bwd);
        }
    }

    #[test]
    fn overlap_ignores_list_order_and_duplicates(
        tokens in vec(word(), 3..20),
        common in vec(vec(word(), 3), 1..10),
        seed in any::<u64>(),
    ) {
        let common: Vec<Trigram> = common.into_iter().map(|t| [t[0].clone(), t[1].clone(), t[2].clone()]).collect();
        let base = trigram_overlap(&tokens, &common).unwrap();
        let mut shuffled = common.clone();
        shuffled.extend(common.iter().cloned());
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(&mut shuffled[..], &mut rng);
        prop_assert_eq!(trigram_overlap(&tokens, &shuffled).unwrap(), base);
        prop_assert!((0.0..=100.0).contains(&base));
    }

    #[test]
    fn split_partitions_the_corpus(n in 1usize..60, fraction in 0.01f64..0.99, seed in any::<u64>()) {
        let emails = (0..n).map(|i| Email::from_clean(format!("e{i}"), "", "<SOT> x . <EOT>")).collect();
        let corpus = Corpus::new(emails, "p").unwrap();
        let (train, valid) = split_corpus(&corpus, fraction, seed).unwrap();
        prop_assert_eq!(train.len() + valid.len(), n);
        prop_assert_eq!(valid.len(), (fraction * n as f64).round() as usize);
        let mut ids: Vec<&str> = train.emails.iter().chain(&valid.emails).map(|e| e.id.as_str()).collect();
        ids.sort();
        ids.dedup();
        prop_assert_eq!(ids.len(), n);
        let again = split_corpus(&corpus, fraction, seed).unwrap();
        prop_assert_eq!(again.1.emails, valid.emails);
    }

    #[test]
    fn metrics_are_pure(seqs in vec(vec(word(), 2..8), 1..4), tokens in vec(word(), 3..15)) {
        let bm = BigramModel::from_sequences(&seqs, 1.0).unwrap();
        let a = coherence(&tokens, &bm).unwrap();
        let b = coherence(&tokens, &bm.clone()).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
        prop_assert!(a <= 0.0);
        let common: Vec<Trigram> = seqs.iter().filter(|s| s.len() >= 3).map(|s| [s[0].clone(), s[1].clone(), s[2].clone()]).collect();
        prop_assert_eq!(
            trigram_overlap(&tokens, &common).unwrap().to_bits(),
            trigram_overlap(&tokens, &common).unwrap().to_bits()
        );
    }
}

const CUE_WORDS: [&str; 14] = [
    "click", "paypal", "paypl", "today", "link", "ent", "hola", "the", "account", ".", "update",
    "amazn", "immediately", "don't",
];
