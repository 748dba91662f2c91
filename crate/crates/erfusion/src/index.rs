//! Meta-document indexes.
//!
//! Extractions are pre-aggregated into one meta-document per entity (entity
//! index) or per entity pair (relationship index): term pseudo-frequencies
//! summed over contributing raw documents under binary document association
//! weights. Collection statistics and a postings map are derived from the
//! meta-documents, so stats are always exactly recountable.
//!
//! On-disk layout (all files UTF-8, LF, canonically ordered, bit-exact across
//! rebuilds):
//!   meta.json      version, kind, scalar stats
//!   metadocs.jsonl one record per meta-document, sorted by key
//!   dict.tsv       term, collection frequency, document frequency

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::EntityId;
use crate::error::{Error, Result};
use crate::extract::{EntityExtraction, RelationshipExtraction};

pub const INDEX_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexKind {
    Entity,
    Relationship,
}

/// How entity pairs are keyed in the relationship index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairCanon {
    /// Key is the pair sorted lexicographically by entity id.
    Unordered,
    /// Key keeps first-appearance order.
    Ordered,
}

/// Meta-document key: an entity id, or two entity ids joined by "|".
pub fn pair_key(a: &EntityId, b: &EntityId, canon: PairCanon) -> String {
    match canon {
        PairCanon::Unordered if b.as_str() < a.as_str() => format!("{b}|{a}"),
        _ => format!("{a}|{b}"),
    }
}

/// Split a pair key back into its two entity ids.
pub fn split_pair(key: &str) -> Option<(EntityId, EntityId)> {
    let (a, b) = key.split_once('|')?;
    Some((EntityId::new(a).ok()?, EntityId::new(b).ok()?))
}

/// Aggregated context of one entity or entity pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaDocument {
    pub key: String,
    /// term -> pseudo-frequency; zero-count terms are never stored
    pub tf: BTreeMap<String, u64>,
    pub length: u64,
    pub doc_ids: BTreeSet<String>,
}

/// Corpus-level statistics over one index's meta-documents.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectionStats {
    pub total_terms: u64,
    pub coll_tf: BTreeMap<String, u64>,
    pub num_meta_docs: u64,
    pub doc_freq: BTreeMap<String, u64>,
    pub avg_len: f64,
}

impl CollectionStats {
    pub fn coll_tf(&self, term: &str) -> u64 {
        self.coll_tf.get(term).copied().unwrap_or(0)
    }

    pub fn doc_freq(&self, term: &str) -> u64 {
        self.doc_freq.get(term).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Index {
    pub kind: IndexKind,
    pub meta_docs: BTreeMap<String, MetaDocument>,
    pub stats: CollectionStats,
    pub postings: BTreeMap<String, Vec<String>>,
}

fn compute_stats(meta_docs: &BTreeMap<String, MetaDocument>) -> CollectionStats {
    let mut coll_tf: BTreeMap<String, u64> = BTreeMap::new();
    let mut doc_freq: BTreeMap<String, u64> = BTreeMap::new();
    let mut total_terms = 0u64;
    for doc in meta_docs.values() {
        for (term, &count) in &doc.tf {
            *coll_tf.entry(term.clone()).or_insert(0) += count;
            *doc_freq.entry(term.clone()).or_insert(0) += 1;
            total_terms += count;
        }
    }
    let num_meta_docs = meta_docs.len() as u64;
    let avg_len = if num_meta_docs > 0 {
        total_terms as f64 / num_meta_docs as f64
    } else {
        0.0
    };
    CollectionStats {
        total_terms,
        coll_tf,
        num_meta_docs,
        doc_freq,
        avg_len,
    }
}

fn compute_postings(meta_docs: &BTreeMap<String, MetaDocument>) -> BTreeMap<String, Vec<String>> {
    let mut postings: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for doc in meta_docs.values() {
        for term in doc.tf.keys() {
            postings
                .entry(term.clone())
                .or_default()
                .push(doc.key.clone());
        }
    }
    // meta_docs iteration is key-sorted, so each postings list is sorted
    postings
}

fn finalize(kind: IndexKind, meta_docs: BTreeMap<String, MetaDocument>) -> Index {
    let stats = compute_stats(&meta_docs);
    let postings = compute_postings(&meta_docs);
    Index {
        kind,
        meta_docs,
        stats,
        postings,
    }
}

fn accumulate(
    meta_docs: &mut BTreeMap<String, MetaDocument>,
    key: String,
    doc_id: &str,
    terms: &[String],
) {
    let doc = meta_docs
        .entry(key.clone())
        .or_insert_with(|| MetaDocument {
            key,
            tf: BTreeMap::new(),
            length: 0,
            doc_ids: BTreeSet::new(),
        });
    doc.doc_ids.insert(doc_id.to_string());
    for term in terms {
        *doc.tf.entry(term.clone()).or_insert(0) += 1;
        doc.length += 1;
    }
}

/// Build the entity index: pseudo-frequency of a term for an entity is its
/// count over all of that entity's sentence contexts, summed across raw
/// documents that mention the entity (binary document weights).
pub fn build_entity_index(extractions: impl IntoIterator<Item = EntityExtraction>) -> Index {
    let mut meta_docs = BTreeMap::new();
    for e in extractions {
        accumulate(
            &mut meta_docs,
            e.entity.as_str().to_string(),
            &e.doc_id,
            &e.terms,
        );
    }
    finalize(IndexKind::Entity, meta_docs)
}

/// Build the relationship index, keyed by canonicalized entity pair. A pair
/// with only empty context windows still gets a (length 0) meta-document.
pub fn build_relationship_index(
    extractions: impl IntoIterator<Item = RelationshipExtraction>,
    canon: PairCanon,
) -> Index {
    let mut meta_docs = BTreeMap::new();
    for e in extractions {
        let key = pair_key(&e.pair.0, &e.pair.1, canon);
        accumulate(&mut meta_docs, key, &e.doc_id, &e.terms);
    }
    finalize(IndexKind::Relationship, meta_docs)
}

impl Index {
    /// (collection frequency, document frequency, meta-doc keys) for a term.
    /// Unknown terms report zeros and an empty posting list.
    pub fn lookup(&self, term: &str) -> (u64, u64, &[String]) {
        (
            self.stats.coll_tf(term),
            self.stats.doc_freq(term),
            self.postings.get(term).map(Vec::as_slice).unwrap_or(&[]),
        )
    }

    pub fn meta(&self, key: &str) -> Option<&MetaDocument> {
        self.meta_docs.get(key)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct MetaFile {
    version: u32,
    kind: IndexKind,
    num_meta_docs: u64,
    total_terms: u64,
    avg_len: f64,
}

/// Write an index directory. Records are canonically ordered so two builds of
/// the same corpus produce byte-identical files.
pub fn save_index(index: &Index, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;

    let meta = MetaFile {
        version: INDEX_FORMAT_VERSION,
        kind: index.kind,
        num_meta_docs: index.stats.num_meta_docs,
        total_terms: index.stats.total_terms,
        avg_len: index.stats.avg_len,
    };
    let mut w = BufWriter::new(fs::File::create(dir.join("meta.json"))?);
    serde_json::to_writer(&mut w, &meta).map_err(|e| Error::index("meta.json", e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;

    let mut w = BufWriter::new(fs::File::create(dir.join("metadocs.jsonl"))?);
    for doc in index.meta_docs.values() {
        serde_json::to_writer(&mut w, doc)
            .map_err(|e| Error::index("metadocs.jsonl", e.to_string()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;

    let mut w = BufWriter::new(fs::File::create(dir.join("dict.tsv"))?);
    for (term, &ctf) in &index.stats.coll_tf {
        writeln!(w, "{term}\t{ctf}\t{}", index.stats.doc_freq(term))?;
    }
    w.flush()?;

    Ok(())
}

fn open_index_file(dir: &Path, name: &str) -> Result<fs::File> {
    fs::File::open(dir.join(name)).map_err(|_| Error::index(name, "missing meta file"))
}

/// Load an index directory. Stats and postings are recomputed from the
/// meta-document records and cross-checked against meta.json and dict.tsv.
pub fn load_index(dir: &Path) -> Result<Index> {
    let meta: MetaFile =
        serde_json::from_reader(BufReader::new(open_index_file(dir, "meta.json")?))
            .map_err(|e| Error::index("meta.json", e.to_string()))?;
    if meta.version != INDEX_FORMAT_VERSION {
        return Err(Error::Version {
            found: meta.version,
            expected: INDEX_FORMAT_VERSION,
        });
    }

    let mut meta_docs = BTreeMap::new();
    let reader = BufReader::new(open_index_file(dir, "metadocs.jsonl")?);
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: MetaDocument = serde_json::from_str(&line)
            .map_err(|e| Error::index("metadocs.jsonl", format!("record {}: {e}", line_no + 1)))?;
        let length: u64 = doc.tf.values().sum();
        if length != doc.length {
            return Err(Error::index(
                "metadocs.jsonl",
                format!(
                    "record {}: length {} does not match tf sum {length}",
                    line_no + 1,
                    doc.length
                ),
            ));
        }
        if meta_docs.insert(doc.key.clone(), doc).is_some() {
            return Err(Error::index(
                "metadocs.jsonl",
                format!("record {}: duplicate key", line_no + 1),
            ));
        }
    }

    let index = finalize(meta.kind, meta_docs);
    if index.stats.num_meta_docs != meta.num_meta_docs
        || index.stats.total_terms != meta.total_terms
    {
        return Err(Error::index(
            "meta.json",
            format!(
                "stats mismatch: file says {} meta-docs / {} terms, records give {} / {}",
                meta.num_meta_docs,
                meta.total_terms,
                index.stats.num_meta_docs,
                index.stats.total_terms
            ),
        ));
    }

    let reader = BufReader::new(open_index_file(dir, "dict.tsv")?);
    let mut dict_terms = 0usize;
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let bad = || {
            Error::index(
                "dict.tsv",
                format!("record {}: malformed line", line_no + 1),
            )
        };
        let term = parts.next().ok_or_else(bad)?;
        let ctf: u64 = parts.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let df: u64 = parts.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        if index.stats.coll_tf(term) != ctf || index.stats.doc_freq(term) != df {
            return Err(Error::index(
                "dict.tsv",
                format!(
                    "record {}: term {term:?} disagrees with meta-document records",
                    line_no + 1
                ),
            ));
        }
        dict_terms += 1;
    }
    if dict_terms != index.stats.coll_tf.len() {
        return Err(Error::index(
            "dict.tsv",
            format!(
                "{dict_terms} terms listed, records give {}",
                index.stats.coll_tf.len()
            ),
        ));
    }

    Ok(index)
}
