//! Sentence-level entity and entity-pair context extraction.
//!
//! Every sentence mentioning an entity is an entity context; every pair of
//! distinct entities co-mentioned in a sentence is a relationship context,
//! with terms drawn either from the separating string between the two
//! mentions or from the full sentence.

use std::collections::BTreeMap;

use crate::corpus::{char_slice, AnnotatedDocument, EntityId, Tokenizer};

/// How relationship context terms are collected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContextMode {
    /// Text strictly between the two entities' first mentions.
    SeparatingString,
    /// The full sentence.
    Sentence,
}

/// One sentence's worth of context for one entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityExtraction {
    pub entity: EntityId,
    pub doc_id: String,
    pub terms: Vec<String>,
}

/// One sentence's worth of context for one entity pair, ordered by first
/// appearance in the sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationshipExtraction {
    pub pair: (EntityId, EntityId),
    pub doc_id: String,
    pub terms: Vec<String>,
}

/// Distinct entities of a sentence with their first-mention spans, in
/// first-appearance order.
fn first_mentions(sentence: &crate::corpus::Sentence) -> Vec<(EntityId, usize, usize)> {
    let mut first: BTreeMap<&EntityId, (usize, usize)> = BTreeMap::new();
    for m in &sentence.mentions {
        first.entry(&m.entity).or_insert((m.start, m.end));
    }
    let mut out: Vec<(EntityId, usize, usize)> = first
        .into_iter()
        .map(|(e, (s, t))| (e.clone(), s, t))
        .collect();
    out.sort_by_key(|&(_, start, _)| start);
    out
}

/// One extraction per (sentence, distinct entity mentioned in it); terms are
/// the tokenized full sentence.
pub fn extract_entity_contexts(
    doc: &AnnotatedDocument,
    tokenizer: &Tokenizer,
) -> Vec<EntityExtraction> {
    let mut out = Vec::new();
    for sentence in &doc.sentences {
        if sentence.mentions.is_empty() {
            continue;
        }
        let terms = tokenizer.tokenize(&sentence.text);
        for (entity, _, _) in first_mentions(sentence) {
            out.push(EntityExtraction {
                entity,
                doc_id: doc.doc_id.clone(),
                terms: terms.clone(),
            });
        }
    }
    out
}

/// One extraction per unordered pair of distinct entities co-mentioned in a
/// sentence. The pair is ordered by first mention offset. In separating-string
/// mode an empty window yields an empty term list, which is kept: the pair's
/// existence still counts as evidence.
pub fn extract_relationship_contexts(
    doc: &AnnotatedDocument,
    mode: ContextMode,
    tokenizer: &Tokenizer,
) -> Vec<RelationshipExtraction> {
    let mut out = Vec::new();
    for sentence in &doc.sentences {
        let entities = first_mentions(sentence);
        if entities.len() < 2 {
            continue;
        }
        let sentence_terms = match mode {
            ContextMode::Sentence => Some(tokenizer.tokenize(&sentence.text)),
            ContextMode::SeparatingString => None,
        };
        for i in 0..entities.len() {
            for j in (i + 1)..entities.len() {
                // entities is sorted by first-mention start, so i precedes j
                let (ref first, _, first_end) = entities[i];
                let (ref second, second_start, _) = entities[j];
                let terms = match mode {
                    ContextMode::Sentence => sentence_terms.clone().unwrap(),
                    ContextMode::SeparatingString => {
                        let window = char_slice(&sentence.text, first_end, second_start);
                        tokenizer.tokenize(&window)
                    }
                };
                out.push(RelationshipExtraction {
                    pair: (first.clone(), second.clone()),
                    doc_id: doc.doc_id.clone(),
                    terms,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Mention, Sentence};
    use proptest::prelude::*;

    fn mention(entity: &str, start: usize, end: usize, surface: &str) -> Mention {
        Mention {
            entity: EntityId::new(entity).unwrap(),
            start,
            end,
            surface: surface.into(),
        }
    }

    fn intel_doc() -> AnnotatedDocument {
        AnnotatedDocument {
            doc_id: "d1".into(),
            sentences: vec![Sentence {
                text: "Intel was founded by Gordon Moore".into(),
                mentions: vec![
                    mention("intel", 0, 5, "Intel"),
                    mention("gordon_moore", 21, 33, "Gordon Moore"),
                ],
            }],
        }
    }

    #[test]
    fn entity_contexts_full_sentence() {
        let tok = Tokenizer::new();
        let extractions = extract_entity_contexts(&intel_doc(), &tok);
        assert_eq!(extractions.len(), 2);
        for e in &extractions {
            assert_eq!(
                e.terms,
                vec!["intel", "was", "founded", "by", "gordon", "moore"]
            );
        }
        assert_eq!(extractions[0].entity.as_str(), "intel");
        assert_eq!(extractions[1].entity.as_str(), "gordon_moore");
    }

    #[test]
    fn sentence_without_mentions_yields_nothing() {
        let doc = AnnotatedDocument {
            doc_id: "d1".into(),
            sentences: vec![Sentence {
                text: "no entities here".into(),
                mentions: vec![],
            }],
        };
        let tok = Tokenizer::new();
        assert!(extract_entity_contexts(&doc, &tok).is_empty());
        assert!(
            extract_relationship_contexts(&doc, ContextMode::SeparatingString, &tok).is_empty()
        );
    }

    #[test]
    fn repeated_entity_yields_one_extraction_per_sentence() {
        let doc = AnnotatedDocument {
            doc_id: "d1".into(),
            sentences: vec![Sentence {
                text: "Intel and Intel again".into(),
                mentions: vec![
                    mention("intel", 0, 5, "Intel"),
                    mention("intel", 10, 15, "Intel"),
                ],
            }],
        };
        let tok = Tokenizer::new();
        let extractions = extract_entity_contexts(&doc, &tok);
        assert_eq!(extractions.len(), 1);
    }

    #[test]
    fn separating_string_window() {
        let tok = Tokenizer::new();
        let extractions =
            extract_relationship_contexts(&intel_doc(), ContextMode::SeparatingString, &tok);
        assert_eq!(extractions.len(), 1);
        assert_eq!(extractions[0].pair.0.as_str(), "intel");
        assert_eq!(extractions[0].pair.1.as_str(), "gordon_moore");
        assert_eq!(extractions[0].terms, vec!["was", "founded", "by"]);
    }

    #[test]
    fn three_entities_yield_three_pairs() {
        let doc = AnnotatedDocument {
            doc_id: "d1".into(),
            sentences: vec![Sentence {
                text: "A met B and C".into(),
                mentions: vec![
                    mention("a", 0, 1, "A"),
                    mention("b", 6, 7, "B"),
                    mention("c", 12, 13, "C"),
                ],
            }],
        };
        let tok = Tokenizer::new();
        let extractions = extract_relationship_contexts(&doc, ContextMode::SeparatingString, &tok);
        assert_eq!(extractions.len(), 3);
        let pairs: Vec<(&str, &str)> = extractions
            .iter()
            .map(|e| (e.pair.0.as_str(), e.pair.1.as_str()))
            .collect();
        assert_eq!(pairs, vec![("a", "b"), ("a", "c"), ("b", "c")]);
    }

    #[test]
    fn adjacent_mentions_keep_empty_extraction() {
        let doc = AnnotatedDocument {
            doc_id: "d1".into(),
            sentences: vec![Sentence {
                text: "A B".into(),
                mentions: vec![mention("a", 0, 1, "A"), mention("b", 2, 3, "B")],
            }],
        };
        let tok = Tokenizer::new();
        let extractions = extract_relationship_contexts(&doc, ContextMode::SeparatingString, &tok);
        assert_eq!(extractions.len(), 1);
        assert!(extractions[0].terms.is_empty());
    }

    #[test]
    fn first_mention_defines_window() {
        // a at [0,1) and [10,11); b at [4,5): window is between a's FIRST
        // mention and b's first mention
        let doc = AnnotatedDocument {
            doc_id: "d1".into(),
            sentences: vec![Sentence {
                text: "A is B not A".into(),
                mentions: vec![
                    mention("a", 0, 1, "A"),
                    mention("b", 5, 6, "B"),
                    mention("a", 11, 12, "A"),
                ],
            }],
        };
        let tok = Tokenizer::new();
        let extractions = extract_relationship_contexts(&doc, ContextMode::SeparatingString, &tok);
        assert_eq!(extractions.len(), 1);
        assert_eq!(extractions[0].terms, vec!["is"]);
    }

    proptest! {
        #[test]
        fn pair_count_is_k_choose_2(k in 0usize..6) {
            // k single-letter entities at positions 0, 2, 4, ...
            let text: String = (0..k).map(|i| if i == 0 { "a".to_string() } else { format!(" {}", (b'a' + i as u8) as char) }).collect();
            let mentions: Vec<Mention> = (0..k)
                .map(|i| {
                    let c = (b'a' + i as u8) as char;
                    mention(&format!("e{c}"), i * 2, i * 2 + 1, &c.to_string())
                })
                .collect();
            let doc = AnnotatedDocument {
                doc_id: "d1".into(),
                sentences: vec![Sentence { text, mentions }],
            };
            let tok = Tokenizer::new();
            let rels = extract_relationship_contexts(&doc, ContextMode::SeparatingString, &tok);
            prop_assert_eq!(rels.len(), k * k.saturating_sub(1) / 2);
            // every pair member also has an entity extraction in the same doc
            let ents = extract_entity_contexts(&doc, &tok);
            for r in &rels {
                prop_assert!(ents.iter().any(|e| e.entity == r.pair.0));
                prop_assert!(ents.iter().any(|e| e.entity == r.pair.1));
            }
        }
    }
}
