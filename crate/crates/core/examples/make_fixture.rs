//! Writes the synthetic 500-email corpus used by the integration tests:
//!
//! ```text
//! cargo run -p hiermail --example make_fixture -- crates/core/tests/fixtures/synthetic_500.jsonl
//! ```
//!
//! Each email follows one of a handful of business topics. A topic is a
//! sequence of sentence slots, each with a few phrasings and slot fillers,
//! so the corpus has strong sentence-to-sentence structure. Between slots,
//! off-topic sentences of random dictionary words are mixed in, the way real
//! mail carries one-off remarks that a language model cannot predict.

use std::fs;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

const NAMES: &[&str] = &["John", "Sara", "Mike", "Lisa", "David", "Karen", "Mark", "Susan"];
const DAYS: &[&str] = &["monday", "tuesday", "wednesday", "thursday", "friday"];
const TIMES: &[&str] = &["9 am", "10 am", "noon", "2 pm", "3 pm", "4 pm"];
const ROOMS: &[&str] = &["the large conference room", "room 12", "the third floor office"];
const DOCS: &[&str] = &["the draft contract", "the gas report", "the budget sheet", "the credit memo"];
const DEALS: &[&str] = &["the pipeline deal", "the power contract", "the storage agreement"];

/// Slot phrasings for one topic; `{n}` `{d}` `{t}` `{r}` `{doc}` `{deal}` are
/// filled at random.
const TOPICS: &[&[&[&str]]] = &[
    // meeting
    &[
        &["I hope you had a good weekend.", "I hope your week is going well."],
        &["We need to meet on {d} to discuss {deal}.", "Can we meet on {d} to talk about {deal}?"],
        &["The meeting will be at {t} in {r}.", "Let us plan for {t} in {r}."],
        &["Please bring a copy of {doc}.", "Please review {doc} before the meeting."],
        &["{n} will join us by phone.", "I have also invited {n} to the meeting."],
        &["Let me know if the time does not work for you.", "Let me know if you have any questions."],
    ],
    // document review
    &[
        &["Attached is {doc} for your review.", "I have attached {doc} for your review."],
        &["Please send me your comments by {d}.", "Please get back to me with comments by {d}."],
        &["{n} has already signed off on the changes.", "{n} made a few changes to the second section."],
        &["We still need to confirm the numbers for {deal}.", "The numbers for {deal} are still open."],
        &["Thanks for your help with this.", "Thank you for taking a look at this."],
    ],
    // trading update
    &[
        &["Here is the update on {deal}.", "I wanted to give you a quick update on {deal}."],
        &["The price moved up again this morning.", "The price dropped a little this morning."],
        &["We expect to close the deal by {d}.", "We should have a final answer by {d}."],
        &["{n} is working on the credit side.", "{n} will handle the credit approval."],
        &["I will send {doc} once it is ready.", "I will forward {doc} when I get it."],
        &["Call me if you have any questions.", "Let me know if you need anything else."],
    ],
    // travel
    &[
        &["I will be out of the office on {d}.", "I am traveling to the houston office on {d}."],
        &["{n} will cover for me while I am away.", "Please contact {n} while I am out."],
        &["I will check my email in the evening.", "I will have limited access to email."],
        &["We can review {doc} when I get back.", "Let us go over {doc} when I return."],
        &["Thanks for your patience.", "Have a great week."],
    ],
    // scheduling a call
    &[
        &["Are you free for a quick call on {d}?", "Do you have time for a short call on {d}?"],
        &["I would like to go over {deal} with you.", "We need to go over {deal} before the end of the month."],
        &["Would {t} work for you?", "How does {t} look on your calendar?"],
        &["{n} will send out the dial in number.", "I will send you the dial in number."],
        &["Talk to you soon.", "Thanks and talk to you then."],
    ],
];

fn fill(template: &str, rng: &mut impl Rng) -> String {
    let mut s = template.to_string();
    for (key, pool) in [
        ("{n}", NAMES),
        ("{d}", DAYS),
        ("{t}", TIMES),
        ("{r}", ROOMS),
        ("{doc}", DOCS),
        ("{deal}", DEALS),
    ] {
        while s.contains(key) {
            s = s.replacen(key, pool.choose(rng).unwrap(), 1);
        }
    }
    s
}

const WORDS: &str = include_str!("../data/english_words.txt");

/// Probability of an off-topic sentence before each slot.
const NOISE_RATE: f64 = 0.35;

fn noise_sentence(pool: &[&str], rng: &mut impl Rng) -> String {
    let n = rng.gen_range(5..=10);
    let words: Vec<&str> = (0..n).map(|_| *pool.choose(rng).unwrap()).collect();
    let mut s = words.join(" ");
    s[..1].make_ascii_uppercase();
    s + "."
}

fn main() {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "crates/core/tests/fixtures/synthetic_500.jsonl".into());
    // mid-frequency words: common enough to look like text, rare enough not
    // to collide with the templates
    let pool: Vec<&str> = WORDS.lines().skip(1500).take(3000).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2018);
    let mut lines = String::new();
    for i in 0..500 {
        let topic = TOPICS[rng.gen_range(0..TOPICS.len())];
        let mut body = format!("Hi {},\n\n", NAMES.choose(&mut rng).unwrap());
        for (k, slot) in topic.iter().enumerate() {
            // the first four slots always appear so every email has a seed window
            if k >= 4 && rng.gen_bool(0.3) {
                continue;
            }
            if k > 0 && rng.gen_bool(NOISE_RATE) {
                body.push_str(&noise_sentence(&pool, &mut rng));
                body.push(' ');
            }
            body.push_str(&fill(slot.choose(&mut rng).unwrap(), &mut rng));
            body.push(' ');
        }
        if rng.gen_bool(0.1) {
            body.push_str("The file is also at http://intranet.example.com/docs. ");
        }
        body.push_str(&format!("\n\nRegards,\n{}", NAMES.choose(&mut rng).unwrap()));
        lines.push_str(&json!({ "id": format!("syn-{i:03}"), "body": body }).to_string());
        lines.push('\n');
    }
    fs::write(&out, lines).expect("write fixture");
    eprintln!("wrote 500 emails to {out}");
}
