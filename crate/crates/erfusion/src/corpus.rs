//! Annotated corpus parsing and the shared tokenizer.
//!
//! The corpus format is JSON Lines: one document per line, each document a
//! list of sentences carrying pre-linked entity mention spans. Mention offsets
//! are in Unicode scalar values, not bytes, so the format is encoding-stable.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Opaque entity identifier (e.g. a Wikipedia or Freebase key).
///
/// Must be non-empty and contain no whitespace, `|` (reserved as the tuple-id
/// separator) or newline.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct EntityId(String);

impl EntityId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::Param("entity id must be non-empty".into()));
        }
        if id.chars().any(|c| c.is_whitespace() || c == '|') {
            return Err(Error::Param(format!(
                "entity id {id:?} contains whitespace or '|'"
            )));
        }
        Ok(EntityId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for EntityId {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        EntityId::new(s)
    }
}

impl From<EntityId> for String {
    fn from(id: EntityId) -> String {
        id.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An entity mention span inside a sentence. Offsets are 0-based character
/// (Unicode scalar) positions, `start` inclusive, `end` exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub entity: EntityId,
    pub start: usize,
    pub end: usize,
    pub surface: String,
}

/// A sentence with its mentions sorted by start offset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub mentions: Vec<Mention>,
}

/// A raw document: pre-split sentences with pre-linked mentions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedDocument {
    pub doc_id: String,
    pub sentences: Vec<Sentence>,
}

/// Substring by character offsets.
pub(crate) fn char_slice(text: &str, start: usize, end: usize) -> String {
    text.chars()
        .skip(start)
        .take(end.saturating_sub(start))
        .collect()
}

fn validate_sentence(doc_id: &str, idx: usize, sentence: &Sentence) -> Result<()> {
    let len = sentence.text.chars().count();
    let mut prev_end = 0usize;
    let mut prev_start: Option<usize> = None;
    for m in &sentence.mentions {
        if m.start >= m.end || m.end > len {
            return Err(Error::document(
                doc_id,
                idx,
                format!(
                    "mention span [{}, {}) out of range for sentence of length {len}",
                    m.start, m.end
                ),
            ));
        }
        if let Some(ps) = prev_start {
            if m.start < ps {
                return Err(Error::document(doc_id, idx, "mentions not sorted by start"));
            }
            if m.start < prev_end {
                return Err(Error::document(
                    doc_id,
                    idx,
                    format!("overlapping mentions at offset {}", m.start),
                ));
            }
        }
        let actual = char_slice(&sentence.text, m.start, m.end);
        if actual != m.surface {
            return Err(Error::document(
                doc_id,
                idx,
                format!(
                    "mention surface {:?} does not match text span {:?}",
                    m.surface, actual
                ),
            ));
        }
        prev_start = Some(m.start);
        prev_end = m.end;
    }
    Ok(())
}

pub fn validate_document(doc: &AnnotatedDocument) -> Result<()> {
    if doc.doc_id.is_empty() {
        return Err(Error::document("", 0, "doc_id must be non-empty"));
    }
    for (idx, sentence) in doc.sentences.iter().enumerate() {
        validate_sentence(&doc.doc_id, idx, sentence)?;
    }
    Ok(())
}

/// Streaming reader over a JSON Lines corpus file.
///
/// Yields documents in file order. Every yielded document has been validated
/// against all type invariants; duplicate doc_ids are rejected.
pub struct CorpusReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    seen: HashSet<String>,
}

impl<R: BufRead> CorpusReader<R> {
    pub fn new(reader: R) -> Self {
        CorpusReader {
            lines: reader.lines(),
            line_no: 0,
            seen: HashSet::new(),
        }
    }
}

impl<R: BufRead> Iterator for CorpusReader<R> {
    type Item = Result<AnnotatedDocument>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            let doc: AnnotatedDocument = match serde_json::from_str(&line) {
                Ok(d) => d,
                Err(e) => return Some(Err(Error::parse(self.line_no, e.to_string()))),
            };
            if let Err(e) = validate_document(&doc) {
                return Some(Err(e));
            }
            if !self.seen.insert(doc.doc_id.clone()) {
                return Some(Err(Error::parse(
                    self.line_no,
                    format!("duplicate doc_id {:?}", doc.doc_id),
                )));
            }
            return Some(Ok(doc));
        }
    }
}

/// Parse a whole corpus stream into memory.
pub fn parse_corpus<R: BufRead>(reader: R) -> Result<Vec<AnnotatedDocument>> {
    CorpusReader::new(reader).collect()
}

/// Serialize documents in the same JSON Lines format `parse_corpus` reads.
pub fn write_corpus<W: Write>(docs: &[AnnotatedDocument], mut writer: W) -> Result<()> {
    for doc in docs {
        serde_json::to_writer(&mut writer, doc).map_err(|e| Error::parse(0, e.to_string()))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Deterministic tokenizer shared by indexing and querying.
///
/// Lowercases, splits on maximal runs of non-alphanumeric characters, drops
/// empties and configured stopwords. No stemming.
#[derive(Debug, Clone, Default)]
pub struct Tokenizer {
    stopwords: HashSet<String>,
}

impl Tokenizer {
    pub fn new() -> Self {
        Tokenizer::default()
    }

    pub fn with_stopwords(stopwords: impl IntoIterator<Item = String>) -> Self {
        Tokenizer {
            stopwords: stopwords.into_iter().map(|w| w.to_lowercase()).collect(),
        }
    }

    /// One stopword per line; blank lines ignored.
    pub fn from_stopword_file<R: BufRead>(reader: R) -> Result<Self> {
        let mut stopwords = HashSet::new();
        for line in reader.lines() {
            let line = line?;
            let w = line.trim();
            if !w.is_empty() {
                stopwords.insert(w.to_lowercase());
            }
        }
        Ok(Tokenizer { stopwords })
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(|t| t.to_lowercase())
            .filter(|t| !self.stopwords.contains(t))
            .collect()
    }
}
