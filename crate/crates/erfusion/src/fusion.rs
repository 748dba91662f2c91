//! E-R query decomposition, two-stage retrieval and tuple score fusion.
//!
//! An E-R query is a chain of n entity sub-queries and n-1 relationship
//! sub-queries. Stage 1 retrieves top-K candidates per sub-query; stage 2
//! enumerates entity tuples by joining adjacent relationship candidates and
//! scores each tuple as the sum of its relationship scores plus the entity
//! scores of those tuple members that are themselves entity candidates.
//!
//! LM scores are negative log-probabilities, so summing them raw makes a
//! matching entity LOWER the tuple score. The default `shifted` mode
//! subtracts each candidate list's minimum score before summing, which keeps
//! within-list ranking and makes every contribution non-negative.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::Deserialize;

use crate::corpus::{EntityId, Tokenizer};
use crate::error::{Error, Result};
use crate::index::{split_pair, Index, PairCanon};
use crate::retrieval::{candidate_search, Candidate, ModelParams, SubQuery, Target};

/// A validated E-R query: n entity sub-queries chained by n-1 relationship
/// sub-queries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ERQuery {
    pub query_id: String,
    pub entity_queries: Vec<SubQuery>,
    pub rel_queries: Vec<SubQuery>,
}

impl ERQuery {
    pub fn arity(&self) -> usize {
        self.entity_queries.len()
    }
}

/// An entity tuple with its fused relevance score.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredTuple {
    pub entities: Vec<EntityId>,
    pub score: f64,
    pub tuple_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionMode {
    /// Candidate scores are min-shifted per sub-query list before summing.
    Shifted,
    /// Raw candidate scores are summed, as the fusion equation is written.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionParams {
    /// Stage-1 candidate cutoff per sub-query.
    pub k: usize,
    /// Output size.
    pub top_m: usize,
    pub mode: FusionMode,
    pub pair_match: PairCanon,
}

impl Default for FusionParams {
    fn default() -> Self {
        FusionParams {
            k: 20_000,
            top_m: 100,
            mode: FusionMode::Shifted,
            pair_match: PairCanon::Unordered,
        }
    }
}

impl FusionParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Param("candidate cutoff K must be >= 1".into()));
        }
        if self.top_m == 0 {
            return Err(Error::Param("top_m must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct QueryRecord {
    query_id: String,
    entities: Vec<String>,
    relationships: Vec<String>,
}

/// Parse the JSON Lines query file, tokenizing all sub-query strings with the
/// shared tokenizer.
pub fn parse_queries<R: BufRead>(reader: R, tokenizer: &Tokenizer) -> Result<Vec<ERQuery>> {
    let mut queries = Vec::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: QueryRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(line_no + 1, e.to_string()))?;
        if record.entities.len() < 2 || record.relationships.len() + 1 != record.entities.len() {
            return Err(Error::parse(
                line_no + 1,
                format!(
                    "query {:?}: {} entity sub-queries require {} relationship sub-queries, got {}",
                    record.query_id,
                    record.entities.len(),
                    record.entities.len().saturating_sub(1),
                    record.relationships.len()
                ),
            ));
        }
        let tokenize_all = |texts: &[String], target: Target| -> Result<Vec<SubQuery>> {
            texts
                .iter()
                .map(|text| {
                    SubQuery::new(tokenizer.tokenize(text), target).map_err(|_| {
                        Error::parse(
                            line_no + 1,
                            format!(
                                "query {:?}: sub-query {text:?} tokenizes to no terms",
                                record.query_id
                            ),
                        )
                    })
                })
                .collect()
        };
        queries.push(ERQuery {
            entity_queries: tokenize_all(&record.entities, Target::Entity)?,
            rel_queries: tokenize_all(&record.relationships, Target::Relationship)?,
            query_id: record.query_id,
        });
    }
    Ok(queries)
}

/// Candidate scores as a key -> effective-score map, min-shifted when asked.
fn score_map(candidates: &[Candidate], mode: FusionMode) -> HashMap<&str, f64> {
    let shift = match mode {
        FusionMode::Raw => 0.0,
        FusionMode::Shifted => candidates
            .iter()
            .map(|c| c.score)
            .fold(f64::INFINITY, f64::min),
    };
    candidates
        .iter()
        .map(|c| (c.key.as_str(), c.score - shift))
        .collect()
}

fn canonical_entities(entities: &[EntityId], pair_match: PairCanon) -> Vec<EntityId> {
    match pair_match {
        PairCanon::Ordered => entities.to_vec(),
        PairCanon::Unordered => {
            let forward: Vec<&str> = entities.iter().map(EntityId::as_str).collect();
            let backward: Vec<&str> = forward.iter().rev().copied().collect();
            if backward < forward {
                entities.iter().rev().cloned().collect()
            } else {
                entities.to_vec()
            }
        }
    }
}

fn tuple_id(entities: &[EntityId]) -> String {
    entities
        .iter()
        .map(EntityId::as_str)
        .collect::<Vec<_>>()
        .join("|")
}

/// Join per-sub-query candidate lists into ranked entity tuples.
///
/// A tuple is admissible iff each adjacent pair, canonicalized per
/// `pair_match`, is a stage-1 relationship candidate. Under unordered
/// matching both orientations of a chain describe the same tuple; the
/// orientation with the higher score wins and the tuple id is the
/// lexicographically smaller direction.
pub fn fuse(
    entity_candidates: &[Vec<Candidate>],
    rel_candidates: &[Vec<Candidate>],
    params: &FusionParams,
) -> Result<Vec<ScoredTuple>> {
    params.validate()?;
    let n = entity_candidates.len();
    if n < 2 || rel_candidates.len() + 1 != n {
        return Err(Error::Param(format!(
            "{n} entity candidate lists require {} relationship lists, got {}",
            n.saturating_sub(1),
            rel_candidates.len()
        )));
    }

    let entity_scores: Vec<HashMap<&str, f64>> = entity_candidates
        .iter()
        .map(|c| score_map(c, params.mode))
        .collect();
    let rel_scores: Vec<HashMap<&str, f64>> = rel_candidates
        .iter()
        .map(|c| score_map(c, params.mode))
        .collect();

    // adjacency per relationship position: entity -> (next entity, pair key)
    let adjacency: Vec<HashMap<EntityId, Vec<(EntityId, &str)>>> = rel_candidates
        .iter()
        .map(|candidates| {
            let mut adj: HashMap<EntityId, Vec<(EntityId, &str)>> = HashMap::new();
            for c in candidates {
                let Some((a, b)) = split_pair(&c.key) else {
                    continue;
                };
                adj.entry(a.clone())
                    .or_default()
                    .push((b.clone(), c.key.as_str()));
                if params.pair_match == PairCanon::Unordered {
                    adj.entry(b).or_default().push((a, c.key.as_str()));
                }
            }
            adj
        })
        .collect();

    // chain join: partial tuples carrying their accumulated relationship score
    let mut partials: Vec<(Vec<EntityId>, f64)> = Vec::new();
    for c in &rel_candidates[0] {
        let Some((a, b)) = split_pair(&c.key) else {
            continue;
        };
        let score = rel_scores[0][c.key.as_str()];
        partials.push((vec![a.clone(), b.clone()], score));
        if params.pair_match == PairCanon::Unordered && a != b {
            partials.push((vec![b, a], score));
        }
    }
    for (pos, adj) in adjacency.iter().enumerate().skip(1) {
        let mut extended = Vec::new();
        for (entities, score) in &partials {
            let last = entities.last().expect("partials are non-empty");
            if let Some(nexts) = adj.get(last) {
                for (next, key) in nexts {
                    let mut chain = entities.clone();
                    chain.push(next.clone());
                    extended.push((chain, score + rel_scores[pos][*key]));
                }
            }
        }
        partials = extended;
    }

    let mut best: HashMap<String, ScoredTuple> = HashMap::new();
    for (entities, rel_score) in partials {
        let mut score = rel_score;
        for (i, entity) in entities.iter().enumerate() {
            if let Some(&s) = entity_scores[i].get(entity.as_str()) {
                score += s;
            }
        }
        let canonical = canonical_entities(&entities, params.pair_match);
        let id = tuple_id(&canonical);
        let candidate = ScoredTuple {
            entities,
            score,
            tuple_id: id.clone(),
        };
        match best.entry(id) {
            std::collections::hash_map::Entry::Vacant(v) => {
                v.insert(candidate);
            }
            std::collections::hash_map::Entry::Occupied(mut o) => {
                let current = o.get_mut();
                if candidate.score > current.score
                    || (candidate.score == current.score && candidate.entities < current.entities)
                {
                    *current = candidate;
                }
            }
        }
    }

    let mut results: Vec<ScoredTuple> = best.into_values().collect();
    results.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .expect("scores are finite")
            .then_with(|| a.tuple_id.cmp(&b.tuple_id))
    });
    results.truncate(params.top_m);
    Ok(results)
}

/// Two-stage retrieval for one E-R query: top-K candidate search per
/// sub-query, then fusion.
pub fn answer_query(
    query: &ERQuery,
    entity_index: &Index,
    rel_index: &Index,
    model: &ModelParams,
    params: &FusionParams,
) -> Result<Vec<ScoredTuple>> {
    params.validate()?;
    let entity_candidates: Vec<Vec<Candidate>> = query
        .entity_queries
        .iter()
        .map(|q| candidate_search(entity_index, q, model, params.k))
        .collect::<Result<_>>()?;
    let rel_candidates: Vec<Vec<Candidate>> = query
        .rel_queries
        .iter()
        .map(|q| candidate_search(rel_index, q, model, params.k))
        .collect::<Result<_>>()?;
    fuse(&entity_candidates, &rel_candidates, params)
}

/// Emit TREC run lines: `query_id Q0 tuple_id rank score tag`.
pub fn write_run<W: Write>(
    results: &[(String, Vec<ScoredTuple>)],
    tag: &str,
    mut writer: W,
) -> Result<()> {
    for (query_id, tuples) in results {
        for (rank, tuple) in tuples.iter().enumerate() {
            writeln!(
                writer,
                "{query_id} Q0 {} {} {:.6} {tag}",
                tuple.tuple_id,
                rank + 1,
                tuple.score
            )?;
        }
    }
    Ok(())
}

/// Canonical tuple id for unordered matching: the lexicographically smaller
/// of the id and its reversal.
pub fn normalize_tuple_id(id: &str, pair_match: PairCanon) -> String {
    match pair_match {
        PairCanon::Ordered => id.to_string(),
        PairCanon::Unordered => {
            let forward: Vec<&str> = id.split('|').collect();
            let backward: Vec<&str> = forward.iter().rev().copied().collect();
            if backward < forward {
                backward.join("|")
            } else {
                id.to_string()
            }
        }
    }
}
