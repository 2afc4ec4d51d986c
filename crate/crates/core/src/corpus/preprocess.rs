use std::sync::LazyLock;

use regex::{Captures, Regex};

use super::entities::EntityRecognizer;
use crate::tags;

static HTML_COMMENT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)<!--.*?-->").unwrap());
static HTML_BLOCK: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?is)<script\b.*?</script\s*>|<style\b.*?</style\s*>").unwrap()
});
/// Tags that start a new line when rendered.
static HTML_BREAK: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)</?(?:br|p|div|li|ul|ol|tr|td|th|table|h[1-6]|hr|body|html|blockquote)\b[^<>]*>").unwrap()
});
static HTML_TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<[A-Za-z/!?][^<>]*>").unwrap());
static HTML_ENTITY: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"&(?:[A-Za-z]+|#[0-9]+|#[xX][0-9A-Fa-f]+);").unwrap());
static EMAIL_ADDR: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"[A-Za-z0-9._%+\-]+@[A-Za-z0-9\-]+(?:\.[A-Za-z0-9\-]+)*\.[A-Za-z]{2,}").unwrap()
});
static URL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"(?i)\b(?:(?:https?|ftp)://|www\.)[^\s<>"]+"#).unwrap()
});

const URL_TRAILING: &[char] = &['.', ',', '!', '?', ';', ':', ')', ']', '}', '\''];

/// Cleans and tags one email body.
///
/// Rules run in a fixed order: HTML removal, non-ASCII sanitization, email
/// addresses to `emailID`, URLs to `link`, recognized entities to `ent`,
/// lowercasing, special-character removal, whitespace collapse, and finally
/// the `<SOT>`/`<EOT>` wrap. Sentence punctuation (`. , ? !`) becomes its own
/// token. The function is total and idempotent.
///
/// ```
/// use hiermail::corpus::{preprocess_email, HeuristicRecognizer};
///
/// let rec = HeuristicRecognizer::with_names(["john"]);
/// assert_eq!(
///     preprocess_email("Hello John, visit https://x.co now!", &rec),
///     "<SOT> hello ent , visit link now ! <EOT>"
/// );
/// ```
pub fn preprocess_email(raw: &str, recognizer: &dyn EntityRecognizer) -> String {
    let text = raw.replace(tags::SOT, " ").replace(tags::EOT, " ");
    let text = strip_html(&text);
    let text = sanitize_ascii(&text);
    let text = EMAIL_ADDR.replace_all(&text, " emailID ");
    let text = URL.replace_all(&text, |caps: &Captures| {
        let m = &caps[0];
        let kept = m.trim_end_matches(URL_TRAILING);
        format!(" link {}", &m[kept.len()..])
    });
    let text = replace_entities(&text, recognizer);

    let mut out = String::with_capacity(text.len() + 12);
    out.push_str(tags::SOT);
    for token in text.split_whitespace() {
        if token == tags::EMAIL {
            out.push(' ');
            out.push_str(token);
            continue;
        }
        for piece in normalize_token(token).split_whitespace() {
            let piece = piece.trim_matches(|c| c == '\'' || c == '-');
            if !piece.is_empty() {
                out.push(' ');
                out.push_str(piece);
            }
        }
    }
    out.push(' ');
    out.push_str(tags::EOT);
    out
}

fn strip_html(text: &str) -> String {
    let text = HTML_COMMENT.replace_all(text, " ");
    let text = HTML_BLOCK.replace_all(&text, " ");
    let text = HTML_BREAK.replace_all(&text, "\n");
    let text = HTML_TAG.replace_all(&text, " ");
    HTML_ENTITY.replace_all(&text, " ").into_owned()
}

fn sanitize_ascii(text: &str) -> String {
    text.chars()
        .filter_map(|c| match c {
            '\n' => Some('\n'),
            c if c.is_whitespace() || c.is_ascii_control() => Some(' '),
            c if c.is_ascii() => Some(c),
            _ => None,
        })
        .collect()
}

fn replace_entities(text: &str, recognizer: &dyn EntityRecognizer) -> String {
    let spans = recognizer.entity_spans(text);
    if spans.is_empty() {
        return text.to_string();
    }
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    for span in spans {
        if span.start < cursor || span.end > text.len() {
            continue;
        }
        out.push_str(&text[cursor..span.start]);
        out.push_str(" ent ");
        cursor = span.end;
    }
    out.push_str(&text[cursor..]);
    out
}

/// Lowercases, isolates sentence punctuation, and blanks every other
/// character outside `[a-z0-9'-]`.
fn normalize_token(token: &str) -> String {
    let mut out = String::with_capacity(token.len() + 4);
    for c in token.chars() {
        let c = c.to_ascii_lowercase();
        match c {
            'a'..='z' | '0'..='9' | '\'' | '-' => out.push(c),
            '.' | ',' | '?' | '!' => {
                out.push(' ');
                out.push(c);
                out.push(' ');
            }
            _ => out.push(' '),
        }
    }
    out
}
