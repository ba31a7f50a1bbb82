//! Shared test fixtures: synthetic corpora with topical structure, planted
//! rare tokens, and sentence queries with known source passages.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spar_core::corpus::{split_sentences, Corpus, Passage, Query, QuerySet};
use spar_core::evaluation::Judgments;
use spar_core::imitation::{generate_imitation_data, ImitationData};
use spar_core::sparse::{build_inverted_index, Bm25Params, Bm25Retriever, TokenizerConfig};

/// Shape of a synthetic corpus.
#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub docs: usize,
    pub passages_per_doc: usize,
    pub sentences_per_passage: usize,
    pub tokens_per_sentence: usize,
    pub topics: usize,
    pub words_per_topic: usize,
    pub common_words: usize,
    pub rare_per_passage: usize,
    pub seed: u64,
}

impl SynthSpec {
    /// 200 passages in 40 titled documents.
    pub fn small(seed: u64) -> Self {
        SynthSpec {
            docs: 40,
            passages_per_doc: 5,
            sentences_per_passage: 5,
            tokens_per_sentence: 8,
            topics: 10,
            words_per_topic: 25,
            common_words: 40,
            rare_per_passage: 2,
            seed,
        }
    }

    /// 1000 passages in 200 titled documents.
    pub fn medium(seed: u64) -> Self {
        SynthSpec {
            docs: 200,
            passages_per_doc: 5,
            sentences_per_passage: 6,
            tokens_per_sentence: 8,
            topics: 25,
            words_per_topic: 30,
            common_words: 50,
            rare_per_passage: 2,
            seed,
        }
    }

    /// 2000 passages in 400 titled documents, ten sentences each (so the
    /// full sentence pool is about 20k queries).
    pub fn large(seed: u64) -> Self {
        SynthSpec {
            docs: 400,
            passages_per_doc: 5,
            sentences_per_passage: 10,
            tokens_per_sentence: 8,
            topics: 40,
            words_per_topic: 30,
            common_words: 50,
            rare_per_passage: 2,
            seed,
        }
    }

    pub fn passage_count(&self) -> usize {
        self.docs * self.passages_per_doc
    }
}

/// Builds a topical corpus. Every sentence mixes common and topic words and
/// carries one of its passage's planted rare tokens, so sentence queries
/// have a sharply identifiable source passage under lexical matching.
pub fn synth_corpus(spec: &SynthSpec) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let common: Vec<String> = (0..spec.common_words)
        .map(|i| format!("word{i:03}"))
        .collect();
    let topical: Vec<Vec<String>> = (0..spec.topics)
        .map(|t| {
            (0..spec.words_per_topic)
                .map(|w| format!("topic{t:02}term{w:02}"))
                .collect()
        })
        .collect();
    let mut passages = Vec::with_capacity(spec.passage_count());
    for doc in 0..spec.docs {
        let topic = &topical[doc % spec.topics];
        let title = format!("Document {doc:04}");
        for pi in 0..spec.passages_per_doc {
            let pid = format!("d{doc:04}p{pi}");
            let rare: Vec<String> = (0..spec.rare_per_passage)
                .map(|r| format!("ent{doc:04}q{pi}z{r}"))
                .collect();
            let mut sentences = Vec::with_capacity(spec.sentences_per_passage);
            for si in 0..spec.sentences_per_passage {
                let mut words: Vec<String> = (0..spec.tokens_per_sentence)
                    .map(|_| {
                        if rng.random::<f64>() < 0.35 {
                            common[rng.random_range(0..common.len())].clone()
                        } else {
                            topic[rng.random_range(0..topic.len())].clone()
                        }
                    })
                    .collect();
                let slot = rng.random_range(0..=words.len());
                words.insert(slot, rare[si % rare.len()].clone());
                sentences.push(format!("{}.", words.join(" ")));
            }
            passages.push(Passage {
                id: pid,
                title: Some(title.clone()),
                text: sentences.join(" "),
            });
        }
    }
    Corpus::from_passages(passages).expect("synthetic corpus is valid")
}

/// All sentences of the corpus as queries, ids recording the source passage.
pub fn all_sentence_queries(corpus: &Corpus) -> QuerySet {
    let mut queries = Vec::new();
    for passage in corpus.iter() {
        for (si, sentence) in split_sentences(passage).into_iter().enumerate() {
            queries.push(Query {
                id: format!("{}#s{si}", passage.id),
                text: sentence,
                answers: None,
            });
        }
    }
    QuerySet::from_queries(queries).expect("sentence ids are unique")
}

/// Splits a query set into (rest, held_out) with `n_heldout` queries drawn
/// uniformly, deterministic given the seed.
pub fn split_heldout(queries: &QuerySet, n_heldout: usize, seed: u64) -> (QuerySet, QuerySet) {
    let mut order: Vec<usize> = (0..queries.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let held: BTreeSet<usize> = order.into_iter().take(n_heldout).collect();
    let mut train = Vec::new();
    let mut heldout = Vec::new();
    for (i, q) in queries.iter().enumerate() {
        if held.contains(&i) {
            heldout.push(q.clone());
        } else {
            train.push(q.clone());
        }
    }
    (
        QuerySet::from_queries(train).unwrap(),
        QuerySet::from_queries(heldout).unwrap(),
    )
}

/// `n` sentence queries with qrels marking each query's source passage, plus
/// the planted rare token as an answer string.
pub fn queries_with_judgments(corpus: &Corpus, n: usize, seed: u64) -> (QuerySet, Judgments) {
    let pool = all_sentence_queries(corpus);
    let (_, picked) = split_heldout(&pool, n, seed);
    let mut queries = Vec::new();
    let mut qrels: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (qi, q) in picked.iter().enumerate() {
        let source = q.id.rsplit_once("#s").expect("sentence id").0.to_string();
        let answer = q
            .text
            .split_whitespace()
            .find(|w| w.starts_with("ent"))
            .map(|w| w.trim_end_matches('.').to_string());
        let qid = format!("q{qi:03}");
        queries.push(Query {
            id: qid.clone(),
            text: q.text.clone(),
            answers: answer.map(|a| vec![a]),
        });
        qrels.insert(qid, [source].into_iter().collect());
    }
    (
        QuerySet::from_queries(queries).unwrap(),
        Judgments::from_qrels(qrels),
    )
}

/// Demo-style query mix: `n_easy` verbatim sentences plus `n_hard` sentences
/// with the planted rare token stripped and a few other-topic distractor
/// tokens appended. Hard queries keep their source passage as the judged
/// positive (and its rare token as the answer string) but are only solvable
/// through topical overlap, which leaves order-sensitive scorers room to
/// degrade under token shuffling.
pub fn demo_queries(
    corpus: &Corpus,
    n_easy: usize,
    n_hard: usize,
    seed: u64,
) -> (QuerySet, Judgments) {
    let pool = all_sentence_queries(corpus);
    let (_, picked) = split_heldout(&pool, n_easy + n_hard, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd1f7);
    let sentences: Vec<&Query> = picked.iter().collect();
    let mut queries = Vec::new();
    let mut qrels: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (qi, q) in sentences.iter().enumerate() {
        let source = q.id.rsplit_once("#s").expect("sentence id").0.to_string();
        let answer = q
            .text
            .split_whitespace()
            .find(|w| w.starts_with("ent"))
            .map(|w| w.trim_end_matches('.').to_string());
        let topic_of = |text: &str| -> Option<String> {
            text.split_whitespace()
                .find(|w| w.starts_with("topic"))
                .map(|w| w[..7].to_string())
        };
        let text = if qi < n_easy {
            q.text.clone()
        } else {
            // Keep only the sentence's topical tokens, then append a block
            // of tokens from one other topic. The source topic leads in the
            // original order; a shuffle can hand the lead to the distractor
            // topic, which order-sensitive scorers reward.
            let own_topic = topic_of(&q.text);
            let mut tokens: Vec<String> = q
                .text
                .split_whitespace()
                .filter(|w| w.starts_with("topic"))
                .map(|w| w.trim_end_matches('.').to_string())
                .collect();
            let mut other_topic: Option<String> = None;
            let mut distractors: Vec<String> = Vec::new();
            for _ in 0..400 {
                if distractors.len() >= 6 {
                    break;
                }
                let cand = &sentences[rng.random_range(0..sentences.len())];
                let topic = topic_of(&cand.text);
                if topic.is_none() || topic == own_topic {
                    continue;
                }
                match &other_topic {
                    None => other_topic = topic.clone(),
                    Some(chosen) if topic.as_deref() != Some(chosen) => continue,
                    Some(_) => {}
                }
                let room = 6 - distractors.len();
                distractors.extend(
                    cand.text
                        .split_whitespace()
                        .filter(|w| w.starts_with("topic"))
                        .take(room)
                        .map(|w| w.trim_end_matches('.').to_string()),
                );
            }
            tokens.extend(distractors);
            tokens.join(" ")
        };
        let qid = format!("q{qi:03}");
        queries.push(Query {
            id: qid.clone(),
            text,
            answers: answer.map(|a| vec![a]),
        });
        qrels.insert(qid, [source].into_iter().collect());
    }
    (
        QuerySet::from_queries(queries).unwrap(),
        Judgments::from_qrels(qrels),
    )
}

/// Labels queries with a BM25 teacher over the corpus.
pub fn bm25_imitation_data(
    corpus: &Corpus,
    queries: &QuerySet,
    tokenizer: &TokenizerConfig,
    k: usize,
    n_p: usize,
    n_n: usize,
) -> ImitationData {
    let index = build_inverted_index(corpus, tokenizer).expect("non-empty corpus");
    let teacher = Bm25Retriever {
        index: &index,
        params: Bm25Params::default(),
    };
    generate_imitation_data(&teacher, queries, k, n_p, n_n).expect("valid label parameters")
}
