use std::fs;
use std::path::Path;

use walkdir::WalkDir;

use super::{Corpus, Email};
use crate::error::{Error, Result};

/// Reads an Enron-style maildir tree. Each regular file is one message; the
/// body is everything after the first blank line. When `folders` is given,
/// only messages under a directory with one of those names are kept (for
/// example `inbox`, `sent`, `_sent_mail`).
///
/// Messages that are not valid UTF-8 are decoded lossily.
pub fn load_maildir(root: &Path, folders: Option<&[&str]>) -> Result<Corpus> {
    if !root.exists() {
        return Err(Error::MissingPath(root.to_path_buf()));
    }
    let mut emails = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::io(root, e.into()))?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(root).unwrap_or(entry.path());
        if let Some(wanted) = folders {
            let in_folder = rel
                .parent()
                .map(|p| {
                    p.components().any(|c| {
                        let name = c.as_os_str().to_string_lossy().to_ascii_lowercase();
                        wanted.iter().any(|w| name == *w)
                    })
                })
                .unwrap_or(false);
            if !in_folder {
                continue;
            }
        }
        let bytes = fs::read(entry.path()).map_err(|e| Error::io(entry.path(), e))?;
        let text = String::from_utf8_lossy(&bytes);
        emails.push(Email::new(rel.to_string_lossy(), message_body(&text)));
    }
    Corpus::new(emails, root.display().to_string())
}

fn message_body(message: &str) -> String {
    let normalized = message.replace("\r\n", "\n");
    match normalized.find("\n\n") {
        Some(i) => normalized[i + 2..].to_string(),
        None => String::new(),
    }
}
