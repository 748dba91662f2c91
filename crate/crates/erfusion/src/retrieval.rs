//! Sub-query scoring against meta-documents.
//!
//! Two models: Dirichlet-smoothed query likelihood and BM25, both using
//! natural logarithms. Query terms use bag semantics: a duplicated query term
//! contributes once per occurrence.

use crate::error::{Error, Result};
use crate::index::{CollectionStats, Index, IndexKind, MetaDocument};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Entity,
    Relationship,
}

impl Target {
    pub fn matches(self, kind: IndexKind) -> bool {
        matches!(
            (self, kind),
            (Target::Entity, IndexKind::Entity) | (Target::Relationship, IndexKind::Relationship)
        )
    }
}

/// A tokenized entity or relationship sub-query. Terms are non-empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubQuery {
    pub terms: Vec<String>,
    pub target: Target,
}

impl SubQuery {
    pub fn new(terms: Vec<String>, target: Target) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Param("sub-query tokenizes to no terms".into()));
        }
        Ok(SubQuery { terms, target })
    }
}

/// Dirichlet prior: a fixed value, or the index's average meta-document
/// length resolved at query time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mu {
    Auto,
    Value(f64),
}

impl Mu {
    pub fn resolve(self, stats: &CollectionStats) -> Result<f64> {
        let mu = match self {
            Mu::Auto => stats.avg_len,
            Mu::Value(v) => v,
        };
        if mu <= 0.0 || !mu.is_finite() {
            return Err(Error::Param(format!("mu must be positive, got {mu}")));
        }
        Ok(mu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Lm,
    Bm25,
}

/// Negative BM25 IDF handling: clamp at zero (default) or keep the raw value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdfFloor {
    ClampZero,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub model: Model,
    pub mu_entity: Mu,
    pub mu_rel: Mu,
    pub k1: f64,
    pub b: f64,
    pub idf_floor: IdfFloor,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            model: Model::Lm,
            mu_entity: Mu::Auto,
            mu_rel: Mu::Auto,
            k1: 1.2,
            b: 0.75,
            idf_floor: IdfFloor::ClampZero,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if self.k1 < 0.0 || !self.k1.is_finite() {
            return Err(Error::Param(format!("k1 must be >= 0, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::Param(format!("b must be in [0, 1], got {}", self.b)));
        }
        if let Mu::Value(v) = self.mu_entity {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::Param(format!("mu-e must be positive, got {v}")));
            }
        }
        if let Mu::Value(v) = self.mu_rel {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::Param(format!("mu-r must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn mu_for(&self, target: Target) -> Mu {
        match target {
            Target::Entity => self.mu_entity,
            Target::Relationship => self.mu_rel,
        }
    }
}

/// Dirichlet-smoothed query likelihood: sum over query terms of
/// ln((tf + mu * ctf / |C|) / (|D| + mu)). Terms unseen in the whole
/// collection would give ln(0) and are skipped instead.
pub fn score_lm(
    meta: &MetaDocument,
    q: &SubQuery,
    stats: &CollectionStats,
    mu: f64,
) -> Result<f64> {
    if mu <= 0.0 || !mu.is_finite() {
        return Err(Error::Param(format!("mu must be positive, got {mu}")));
    }
    if stats.total_terms == 0 {
        return Err(Error::Param("empty collection: no terms indexed".into()));
    }
    let total = stats.total_terms as f64;
    let len = meta.length as f64;
    let mut score = 0.0;
    for term in &q.terms {
        let ctf = stats.coll_tf(term);
        if ctf == 0 {
            continue;
        }
        let tf = meta.tf.get(term).copied().unwrap_or(0) as f64;
        score += ((tf + mu * ctf as f64 / total) / (len + mu)).ln();
    }
    Ok(score)
}

/// BM25 IDF: ln((N - n + 0.5) / (n + 0.5)), optionally clamped at 0.
pub fn bm25_idf(num_meta_docs: u64, doc_freq: u64, floor: IdfFloor) -> f64 {
    let n = num_meta_docs as f64;
    let df = doc_freq as f64;
    let idf = ((n - df + 0.5) / (df + 0.5)).ln();
    match floor {
        IdfFloor::ClampZero => idf.max(0.0),
        IdfFloor::Raw => idf,
    }
}

/// Okapi BM25 over meta-documents. Terms absent from every meta-document
/// contribute 0.
pub fn score_bm25(
    meta: &MetaDocument,
    q: &SubQuery,
    stats: &CollectionStats,
    k1: f64,
    b: f64,
    idf_floor: IdfFloor,
) -> Result<f64> {
    if k1 < 0.0 || !k1.is_finite() {
        return Err(Error::Param(format!("k1 must be >= 0, got {k1}")));
    }
    if !(0.0..=1.0).contains(&b) {
        return Err(Error::Param(format!("b must be in [0, 1], got {b}")));
    }
    if stats.num_meta_docs == 0 {
        return Err(Error::Param("empty collection: no meta-documents".into()));
    }
    // avg_len is 0 only when every meta-document is empty; then the length
    // ratio is taken as 0 and the normalizer reduces to 1 - b
    let norm = if stats.avg_len > 0.0 {
        1.0 - b + b * meta.length as f64 / stats.avg_len
    } else {
        1.0 - b
    };
    let mut score = 0.0;
    for term in &q.terms {
        let df = stats.doc_freq(term);
        if df == 0 {
            continue;
        }
        let tf = meta.tf.get(term).copied().unwrap_or(0) as f64;
        let tf_part = tf * (k1 + 1.0) / (tf + k1 * norm);
        score += tf_part * bm25_idf(stats.num_meta_docs, df, idf_floor);
    }
    Ok(score)
}

/// A scored meta-document key.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub key: String,
    pub score: f64,
}

fn score_one(index: &Index, key: &str, q: &SubQuery, params: &ModelParams) -> Result<f64> {
    let meta = index.meta(key).expect("posting key must exist");
    match params.model {
        Model::Lm => {
            let mu = params.mu_for(q.target).resolve(&index.stats)?;
            score_lm(meta, q, &index.stats, mu)
        }
        Model::Bm25 => score_bm25(meta, q, &index.stats, params.k1, params.b, params.idf_floor),
    }
}

/// Score every meta-document containing at least one query term and return
/// the top `k` by score, ties broken by ascending key.
pub fn candidate_search(
    index: &Index,
    q: &SubQuery,
    params: &ModelParams,
    k: usize,
) -> Result<Vec<Candidate>> {
    if !q.target.matches(index.kind) {
        return Err(Error::Param(
            "sub-query target does not match index kind".into(),
        ));
    }
    params.validate()?;

    let mut keys: Vec<&String> = Vec::new();
    for term in &q.terms {
        keys.extend(index.postings.get(term).into_iter().flatten());
    }
    keys.sort_unstable();
    keys.dedup();

    let mut candidates = Vec::with_capacity(keys.len());
    for key in keys {
        let score = score_one(index, key, q, params)?;
        candidates.push(Candidate {
            key: key.clone(),
            score,
        });
    }
    candidates.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .expect("scores are finite")
            .then_with(|| a.key.cmp(&b.key))
    });
    candidates.truncate(k);
    Ok(candidates)
}
