//! Reserved tokens shared by the preprocessing pipeline, the vocabularies
//! and the generators.

pub const SOT: &str = "<SOT>";
pub const EOT: &str = "<EOT>";
pub const ENT: &str = "ent";
pub const EMAIL: &str = "emailID";
pub const LINK: &str = "link";
pub const UNK: &str = "<UNK>";

/// Every reserved token, in vocabulary order.
pub const SPECIALS: [&str; 6] = [SOT, EOT, ENT, EMAIL, LINK, UNK];

pub fn is_marker(token: &str) -> bool {
    token == SOT || token == EOT
}

pub fn is_tag(token: &str) -> bool {
    SPECIALS.contains(&token)
}

pub fn is_sentence_terminator(token: &str) -> bool {
    matches!(token, "." | "!" | "?")
}
