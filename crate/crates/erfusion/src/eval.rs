//! TREC-style evaluation: qrels and run loading, AP@cutoff, P@10, NDCG@10
//! and reciprocal rank, per query and averaged.

use std::collections::BTreeMap;
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::fusion::normalize_tuple_id;
use crate::index::PairCanon;

/// query_id -> tuple_id -> relevance grade.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    pub rels: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn relevance(&self, query_id: &str, tuple_id: &str) -> u32 {
        self.rels
            .get(query_id)
            .and_then(|m| m.get(tuple_id))
            .copied()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub tuple_id: String,
    pub rank: u32,
    pub score: f64,
}

/// query_id -> entries sorted by rank.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Run {
    pub entries: BTreeMap<String, Vec<RunEntry>>,
}

/// Parse "query_id 0 tuple_id relevance" lines. Tuple ids are canonicalized
/// under unordered pair matching, so e2|e1 and e1|e2 judge the same tuple.
pub fn load_qrels<R: BufRead>(reader: R, pair_match: PairCanon) -> Result<Qrels> {
    let mut qrels = Qrels::default();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                line_no + 1,
                "expected: query_id 0 tuple_id relevance",
            ));
        }
        let relevance: u32 = fields[3]
            .parse()
            .map_err(|_| Error::parse(line_no + 1, format!("bad relevance {:?}", fields[3])))?;
        let tuple_id = normalize_tuple_id(fields[2], pair_match);
        let prior = qrels
            .rels
            .entry(fields[0].to_string())
            .or_default()
            .insert(tuple_id.clone(), relevance);
        if prior.is_some() {
            return Err(Error::parse(
                line_no + 1,
                format!("duplicate judgment for ({}, {tuple_id})", fields[0]),
            ));
        }
    }
    Ok(qrels)
}

/// Parse TREC run lines. Ranks must be contiguous from 1 per query and scores
/// non-increasing with rank.
pub fn load_run<R: BufRead>(reader: R, pair_match: PairCanon) -> Result<Run> {
    let mut run = Run::default();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::parse(
                line_no + 1,
                "expected: query_id Q0 tuple_id rank score tag",
            ));
        }
        let rank: u32 = fields[3]
            .parse()
            .map_err(|_| Error::parse(line_no + 1, format!("bad rank {:?}", fields[3])))?;
        let score: f64 = fields[4]
            .parse()
            .map_err(|_| Error::parse(line_no + 1, format!("bad score {:?}", fields[4])))?;
        run.entries
            .entry(fields[0].to_string())
            .or_default()
            .push(RunEntry {
                tuple_id: normalize_tuple_id(fields[2], pair_match),
                rank,
                score,
            });
    }
    for (query_id, entries) in &run.entries {
        for (i, entry) in entries.iter().enumerate() {
            if entry.rank != i as u32 + 1 {
                return Err(Error::Eval(format!(
                    "query {query_id}: ranks not contiguous (expected {}, got {})",
                    i + 1,
                    entry.rank
                )));
            }
            if i > 0 && entry.score > entries[i - 1].score {
                return Err(Error::Eval(format!(
                    "query {query_id}: score increases at rank {}",
                    entry.rank
                )));
            }
        }
    }
    Ok(run)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryMetrics {
    pub query_id: String,
    pub ap: f64,
    pub p10: f64,
    pub ndcg10: f64,
    pub rr: f64,
}

fn dcg(gains: impl Iterator<Item = u32>) -> f64 {
    gains
        .enumerate()
        .map(|(i, g)| g as f64 / ((i + 2) as f64).log2())
        .sum()
}

fn query_metrics(
    query_id: &str,
    ranked: &[RunEntry],
    judged: &BTreeMap<String, u32>,
    cutoff: usize,
) -> QueryMetrics {
    let total_relevant = judged.values().filter(|&&r| r > 0).count();

    let mut ap_sum = 0.0;
    let mut relevant_seen = 0usize;
    let mut rr = 0.0;
    let mut p10_hits = 0usize;
    for (i, entry) in ranked.iter().enumerate() {
        let rel = judged.get(&entry.tuple_id).copied().unwrap_or(0);
        if rel > 0 {
            if rr == 0.0 {
                rr = 1.0 / (i + 1) as f64;
            }
            if i < cutoff {
                relevant_seen += 1;
                ap_sum += relevant_seen as f64 / (i + 1) as f64;
            }
            if i < 10 {
                p10_hits += 1;
            }
        }
    }
    let ap = if total_relevant > 0 {
        ap_sum / total_relevant as f64
    } else {
        0.0
    };

    let gains = ranked
        .iter()
        .take(10)
        .map(|e| judged.get(&e.tuple_id).copied().unwrap_or(0));
    let mut ideal: Vec<u32> = judged.values().copied().collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg(ideal.into_iter().take(10));
    let ndcg10 = if idcg > 0.0 { dcg(gains) / idcg } else { 0.0 };

    QueryMetrics {
        query_id: query_id.to_string(),
        ap,
        p10: p10_hits as f64 / 10.0,
        ndcg10,
        rr,
    }
}

/// Per-query metrics for every query in the qrels (queries missing from the
/// run score 0 everywhere) plus the arithmetic mean row.
pub fn metrics(
    run: &Run,
    qrels: &Qrels,
    cutoff: usize,
) -> Result<(Vec<QueryMetrics>, QueryMetrics)> {
    let unknown: Vec<&String> = run
        .entries
        .keys()
        .filter(|q| !qrels.rels.contains_key(*q))
        .collect();
    if !unknown.is_empty() {
        return Err(Error::Eval(format!(
            "run references queries absent from qrels: {}",
            unknown
                .iter()
                .map(|s| s.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        )));
    }

    static EMPTY: Vec<RunEntry> = Vec::new();
    let per_query: Vec<QueryMetrics> = qrels
        .rels
        .iter()
        .map(|(query_id, judged)| {
            let ranked = run.entries.get(query_id).unwrap_or(&EMPTY);
            query_metrics(query_id, ranked, judged, cutoff)
        })
        .collect();

    let n = per_query.len().max(1) as f64;
    let mean = QueryMetrics {
        query_id: "all".into(),
        ap: per_query.iter().map(|m| m.ap).sum::<f64>() / n,
        p10: per_query.iter().map(|m| m.p10).sum::<f64>() / n,
        ndcg10: per_query.iter().map(|m| m.ndcg10).sum::<f64>() / n,
        rr: per_query.iter().map(|m| m.rr).sum::<f64>() / n,
    };
    Ok((per_query, mean))
}

/// TSV table: one row per query plus the final "all" row, 4 decimal places.
pub fn format_table(per_query: &[QueryMetrics], mean: &QueryMetrics) -> String {
    let mut out = String::from("query_id\tMAP\tP@10\tNDCG@10\tMRR\n");
    for m in per_query.iter().chain(std::iter::once(mean)) {
        out.push_str(&format!(
            "{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\n",
            m.query_id, m.ap, m.p10, m.ndcg10, m.rr
        ));
    }
    out
}
