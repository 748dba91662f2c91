#![allow(dead_code)]

//! Shared test machinery: a synthetic corpus generator and a brute-force
//! oracle that re-derives meta-document frequencies, collection statistics,
//! retrieval scores and tuple fusion from first principles, independently of
//! the library's index and search path.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use erfusion::corpus::{AnnotatedDocument, EntityId, Mention, Sentence, Tokenizer};

pub const VOCAB: &[&str] = &[
    "red", "blue", "green", "star", "moon", "sun", "rock", "tree", "fish", "bird", "wind", "rain",
    "snow", "fire", "sand",
];

/// Random corpus: up to `max_docs` documents, sentences mixing vocabulary
/// words and entity mentions whose surface is the entity id itself.
pub fn gen_corpus<R: Rng>(
    rng: &mut R,
    max_docs: usize,
    max_entities: usize,
) -> Vec<AnnotatedDocument> {
    let num_docs = rng.gen_range(3..=max_docs);
    let num_entities = rng.gen_range(2..=max_entities);
    gen_corpus_exact(rng, num_docs, num_entities)
}

pub fn gen_corpus_exact<R: Rng>(
    rng: &mut R,
    num_docs: usize,
    num_entities: usize,
) -> Vec<AnnotatedDocument> {
    let mut docs = Vec::new();
    for d in 0..num_docs {
        let num_sentences = rng.gen_range(1..=4);
        let mut sentences = Vec::new();
        for _ in 0..num_sentences {
            let num_words = rng.gen_range(1..=8);
            let num_mentions = rng.gen_range(0..=3.min(num_entities));
            let mut tokens: Vec<(String, Option<String>)> = Vec::new();
            for _ in 0..num_words {
                tokens.push((VOCAB[rng.gen_range(0..VOCAB.len())].to_string(), None));
            }
            for _ in 0..num_mentions {
                // same entity may appear more than once; that's allowed
                let e = rng.gen_range(0..num_entities);
                let slot = rng.gen_range(0..tokens.len());
                tokens.insert(slot, (format!("e{e}"), Some(format!("e{e}"))));
            }
            let mut text = String::new();
            let mut mentions = Vec::new();
            let mut offset = 0usize;
            for (i, (word, entity)) in tokens.iter().enumerate() {
                if i > 0 {
                    text.push(' ');
                    offset += 1;
                }
                let start = offset;
                text.push_str(word);
                offset += word.chars().count();
                if let Some(id) = entity {
                    mentions.push(Mention {
                        entity: EntityId::new(id.clone()).unwrap(),
                        start,
                        end: offset,
                        surface: word.clone(),
                    });
                }
            }
            mentions.sort_by_key(|m| m.start);
            sentences.push(Sentence { text, mentions });
        }
        docs.push(AnnotatedDocument {
            doc_id: format!("d{d}"),
            sentences,
        });
    }
    docs
}

/// Random E-R query terms drawn from the corpus vocabulary.
pub fn gen_query_terms<R: Rng>(rng: &mut R, arity: usize) -> (Vec<Vec<String>>, Vec<Vec<String>>) {
    let pick = |rng: &mut R| -> Vec<String> {
        let n = rng.gen_range(1..=2);
        (0..n)
            .map(|_| VOCAB[rng.gen_range(0..VOCAB.len())].to_string())
            .collect()
    };
    let entities = (0..arity).map(|_| pick(rng)).collect();
    let rels = (0..arity - 1).map(|_| pick(rng)).collect();
    (entities, rels)
}

/// Naive meta-document collection: key -> (term frequencies, length), plus
/// collection statistics recounted from scratch.
#[derive(Debug, Clone)]
pub struct OracleIndex {
    pub metas: BTreeMap<String, BTreeMap<String, u64>>,
    pub lengths: BTreeMap<String, u64>,
    pub coll_tf: BTreeMap<String, u64>,
    pub doc_freq: BTreeMap<String, u64>,
    pub num_meta_docs: u64,
    pub total_terms: u64,
    pub avg_len: f64,
}

fn finish(metas: BTreeMap<String, BTreeMap<String, u64>>) -> OracleIndex {
    let mut coll_tf: BTreeMap<String, u64> = BTreeMap::new();
    let mut doc_freq: BTreeMap<String, u64> = BTreeMap::new();
    let mut lengths: BTreeMap<String, u64> = BTreeMap::new();
    let mut total_terms = 0u64;
    for (key, tf) in &metas {
        let mut len = 0u64;
        for (t, &c) in tf {
            *coll_tf.entry(t.clone()).or_insert(0) += c;
            *doc_freq.entry(t.clone()).or_insert(0) += 1;
            len += c;
        }
        lengths.insert(key.clone(), len);
        total_terms += len;
    }
    let num_meta_docs = metas.len() as u64;
    let avg_len = if num_meta_docs > 0 {
        total_terms as f64 / num_meta_docs as f64
    } else {
        0.0
    };
    OracleIndex {
        metas,
        lengths,
        coll_tf,
        doc_freq,
        num_meta_docs,
        total_terms,
        avg_len,
    }
}

fn distinct_entities(sentence: &Sentence) -> Vec<(EntityId, usize, usize)> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for m in &sentence.mentions {
        if seen.insert(m.entity.clone()) {
            out.push((m.entity.clone(), m.start, m.end));
        }
    }
    out
}

/// Literal evaluation of the entity pseudo-frequency sum: for each entity and
/// raw document, count terms over that entity's sentence contexts, then sum
/// across documents with binary association weights.
pub fn oracle_entity_index(docs: &[AnnotatedDocument], tok: &Tokenizer) -> OracleIndex {
    let mut entities = BTreeSet::new();
    for doc in docs {
        for s in &doc.sentences {
            for m in &s.mentions {
                entities.insert(m.entity.clone());
            }
        }
    }
    let mut metas: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    for entity in &entities {
        let mut tf: BTreeMap<String, u64> = BTreeMap::new();
        for doc in docs {
            // f(t, E, D_j): term counts in this doc's contexts of the entity
            let mut per_doc: BTreeMap<String, u64> = BTreeMap::new();
            let mut mentioned = false;
            for s in &doc.sentences {
                if s.mentions.iter().any(|m| &m.entity == entity) {
                    mentioned = true;
                    for t in tok.tokenize(&s.text) {
                        *per_doc.entry(t).or_insert(0) += 1;
                    }
                }
            }
            let weight = if mentioned { 1 } else { 0 };
            for (t, c) in per_doc {
                *tf.entry(t).or_insert(0) += c * weight;
            }
        }
        metas.insert(entity.as_str().to_string(), tf);
    }
    finish(metas)
}

fn canon_pair(a: &str, b: &str) -> String {
    if b < a {
        format!("{b}|{a}")
    } else {
        format!("{a}|{b}")
    }
}

/// Literal evaluation of the relationship pseudo-frequency sum under
/// unordered pair keys and separating-string contexts.
pub fn oracle_rel_index(docs: &[AnnotatedDocument], tok: &Tokenizer) -> OracleIndex {
    let mut metas: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    for doc in docs {
        for s in &doc.sentences {
            let firsts = distinct_entities(s);
            for i in 0..firsts.len() {
                for j in (i + 1)..firsts.len() {
                    let key = canon_pair(firsts[i].0.as_str(), firsts[j].0.as_str());
                    let window: String = s
                        .text
                        .chars()
                        .skip(firsts[i].2)
                        .take(firsts[j].1.saturating_sub(firsts[i].2))
                        .collect();
                    let tf = metas.entry(key).or_default();
                    for t in tok.tokenize(&window) {
                        *tf.entry(t).or_insert(0) += 1;
                    }
                }
            }
        }
    }
    finish(metas)
}

pub fn oracle_lm(index: &OracleIndex, key: &str, terms: &[String], mu: f64) -> f64 {
    let tf = &index.metas[key];
    let len = index.lengths[key] as f64;
    let total = index.total_terms as f64;
    let mut score = 0.0;
    for t in terms {
        let ctf = index.coll_tf.get(t).copied().unwrap_or(0) as f64;
        if ctf == 0.0 {
            continue;
        }
        let f = tf.get(t).copied().unwrap_or(0) as f64;
        score += ((f + mu * ctf / total) / (len + mu)).ln();
    }
    score
}

pub fn oracle_bm25(
    index: &OracleIndex,
    key: &str,
    terms: &[String],
    k1: f64,
    b: f64,
    clamp: bool,
) -> f64 {
    let tf = &index.metas[key];
    let len = index.lengths[key] as f64;
    let n = index.num_meta_docs as f64;
    let mut score = 0.0;
    for t in terms {
        let df = index.doc_freq.get(t).copied().unwrap_or(0) as f64;
        if df == 0.0 {
            continue;
        }
        let f = tf.get(t).copied().unwrap_or(0) as f64;
        let norm = if index.avg_len > 0.0 {
            1.0 - b + b * len / index.avg_len
        } else {
            1.0 - b
        };
        let mut idf = ((n - df + 0.5) / (df + 0.5)).ln();
        if clamp {
            idf = idf.max(0.0);
        }
        score += f * (k1 + 1.0) / (f + k1 * norm) * idf;
    }
    score
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleModel {
    Lm,
    Bm25,
}

/// Exhaustive tuple ranking: enumerate ALL ordered entity tuples of the query
/// arity, keep those whose adjacent pairs match at least one relationship
/// query term, and score them by summing relationship scores plus the entity
/// scores of tuple members matching their entity sub-query. Orientations
/// collapse onto the lexicographically smaller tuple id, keeping the higher
/// score. `shifted` subtracts each sub-query's minimum matching score first.
pub fn oracle_answer(
    entity_index: &OracleIndex,
    rel_index: &OracleIndex,
    entity_queries: &[Vec<String>],
    rel_queries: &[Vec<String>],
    model: OracleModel,
    shifted: bool,
) -> Vec<(String, f64)> {
    let arity = entity_queries.len();
    let matches =
        |tf: &BTreeMap<String, u64>, terms: &[String]| terms.iter().any(|t| tf.contains_key(t));

    let score_of = |index: &OracleIndex, key: &str, terms: &[String]| -> f64 {
        match model {
            OracleModel::Lm => oracle_lm(index, key, terms, index.avg_len),
            OracleModel::Bm25 => oracle_bm25(index, key, terms, 1.2, 0.75, true),
        }
    };

    // per sub-query: matching keys and their (possibly shifted) scores
    let sub_scores = |index: &OracleIndex, terms: &[String]| -> BTreeMap<String, f64> {
        let mut raw: BTreeMap<String, f64> = index
            .metas
            .iter()
            .filter(|(_, tf)| matches(tf, terms))
            .map(|(key, _)| (key.clone(), score_of(index, key, terms)))
            .collect();
        if shifted {
            let min = raw.values().copied().fold(f64::INFINITY, f64::min);
            for v in raw.values_mut() {
                *v -= min;
            }
        }
        raw
    };

    let entity_scores: Vec<BTreeMap<String, f64>> = entity_queries
        .iter()
        .map(|q| sub_scores(entity_index, q))
        .collect();
    let rel_scores: Vec<BTreeMap<String, f64>> = rel_queries
        .iter()
        .map(|q| sub_scores(rel_index, q))
        .collect();

    let universe: Vec<String> = entity_index.metas.keys().cloned().collect();
    let mut tuples: Vec<Vec<String>> = universe.iter().map(|e| vec![e.clone()]).collect();
    for _ in 1..arity {
        let mut next = Vec::new();
        for t in &tuples {
            for e in &universe {
                let mut t2 = t.clone();
                t2.push(e.clone());
                next.push(t2);
            }
        }
        tuples = next;
    }

    let mut best: BTreeMap<String, f64> = BTreeMap::new();
    'tuple: for tuple in tuples {
        let mut score = 0.0;
        for i in 0..arity - 1 {
            let key = canon_pair(&tuple[i], &tuple[i + 1]);
            match rel_scores[i].get(&key) {
                Some(&s) => score += s,
                None => continue 'tuple,
            }
        }
        for (i, entity) in tuple.iter().enumerate() {
            if let Some(&s) = entity_scores[i].get(entity) {
                score += s;
            }
        }
        let reversed: Vec<String> = tuple.iter().rev().cloned().collect();
        let canonical = if reversed < tuple { reversed } else { tuple };
        let id = canonical.join("|");
        let entry = best.entry(id).or_insert(f64::NEG_INFINITY);
        if score > *entry {
            *entry = score;
        }
    }

    let mut ranked: Vec<(String, f64)> = best.into_iter().collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    ranked
}
