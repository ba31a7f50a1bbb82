//! Passage and query ingestion, sentence splitting, and training-query
//! sampling.
//!
//! Corpora and query sets are stored as UTF-8 JSON lines, one object per
//! line. Passages carry `id`, optional `title`, and `text`; queries carry
//! `id`, `text`, and an optional `answers` list used by answer-containment
//! evaluation.

use std::cmp::min;
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::stable_hash;

/// One retrievable text unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub text: String,
}

/// A search query, optionally with known answer strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answers: Option<Vec<String>>,
}

/// An ordered passage collection with unique, non-empty ids.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    passages: Vec<Passage>,
    by_id: HashMap<String, usize>,
}

impl Corpus {
    /// Builds a corpus, enforcing unique ids and non-empty text.
    pub fn from_passages(passages: Vec<Passage>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(passages.len());
        for (i, p) in passages.iter().enumerate() {
            validate_passage(p)?;
            if by_id.insert(p.id.clone(), i).is_some() {
                return Err(Error::DuplicateId {
                    kind: "passage",
                    id: p.id.clone(),
                });
            }
        }
        Ok(Corpus { passages, by_id })
    }

    pub fn passages(&self) -> &[Passage] {
        &self.passages
    }

    pub fn get(&self, id: &str) -> Option<&Passage> {
        self.by_id.get(id).map(|&i| &self.passages[i])
    }

    pub fn len(&self) -> usize {
        self.passages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passages.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Passage> {
        self.passages.iter()
    }
}

fn validate_passage(p: &Passage) -> Result<()> {
    if p.id.is_empty() {
        return Err(Error::invalid("passage id must be non-empty"));
    }
    if p.text.trim().is_empty() {
        return Err(Error::invalid(format!("passage {:?} has empty text", p.id)));
    }
    Ok(())
}

/// An ordered query collection with unique ids.
#[derive(Debug, Clone, Default)]
pub struct QuerySet {
    queries: Vec<Query>,
}

impl QuerySet {
    pub fn from_queries(queries: Vec<Query>) -> Result<Self> {
        let mut seen = HashMap::with_capacity(queries.len());
        for (i, q) in queries.iter().enumerate() {
            if q.id.is_empty() {
                return Err(Error::invalid("query id must be non-empty"));
            }
            if seen.insert(q.id.clone(), i).is_some() {
                return Err(Error::DuplicateId {
                    kind: "query",
                    id: q.id.clone(),
                });
            }
        }
        Ok(QuerySet { queries })
    }

    pub fn queries(&self) -> &[Query] {
        &self.queries
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Query> {
        self.queries.iter()
    }
}

/// Loads a corpus from a JSON-lines file, preserving input order.
///
/// Malformed lines are reported with their 1-based line number; duplicate
/// ids are reported with the offending id.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let passages: Vec<Passage> = read_jsonl(path)?;
    Corpus::from_passages(passages)
}

/// Writes a corpus as JSON lines. `load_corpus(write_corpus(c)) == c`.
pub fn write_corpus(path: impl AsRef<Path>, corpus: &Corpus) -> Result<()> {
    write_jsonl(path.as_ref(), corpus.passages())
}

/// Loads a query set from a JSON-lines file.
pub fn load_queries(path: impl AsRef<Path>) -> Result<QuerySet> {
    let path = path.as_ref();
    let queries: Vec<Query> = read_jsonl(path)?;
    QuerySet::from_queries(queries)
}

/// Writes a query set as JSON lines.
pub fn write_queries(path: impl AsRef<Path>, queries: &QuerySet) -> Result<()> {
    write_jsonl(path.as_ref(), queries.queries())
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(&display, e))?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(&display, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| Error::format(&display, lineno + 1, e.to_string()))?;
        records.push(record);
    }
    Ok(records)
}

fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let display = path.display().to_string();
    let file = File::create(path).map_err(|e| Error::io(&display, e))?;
    let mut writer = BufWriter::new(file);
    for record in records {
        let line =
            serde_json::to_string(record).map_err(|e| Error::format(&display, 0, e.to_string()))?;
        writeln!(writer, "{line}").map_err(|e| Error::io(&display, e))?;
    }
    writer.flush().map_err(|e| Error::io(&display, e))
}

/// Splits passage text into sentences at `.`, `!`, or `?` followed by
/// whitespace, keeping the terminator with the left sentence. Text with no
/// terminator yields one sentence. Sentences are trimmed and non-empty.
pub fn split_sentences(passage: &Passage) -> Vec<String> {
    split_sentence_text(&passage.text)
}

fn split_sentence_text(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut start = 0usize;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            if let Some(&(_, next)) = chars.peek() {
                if next.is_whitespace() {
                    let end = i + c.len_utf8();
                    push_trimmed(&mut sentences, &text[start..end]);
                    start = end;
                }
            }
        }
    }
    push_trimmed(&mut sentences, &text[start..]);
    sentences
}

fn push_trimmed(out: &mut Vec<String>, piece: &str) {
    let piece = piece.trim();
    if !piece.is_empty() {
        out.push(piece.to_string());
    }
}

/// Controls training-query sampling.
///
/// Passages sharing a title form a document; a passage at position `i`
/// within its document contributes each non-guaranteed sentence with
/// probability `exp(-i / decay_tau)`, so early passages of a document are
/// favored. Every passage contributes at least `min_per_passage` sentences
/// (capped by its sentence count).
#[derive(Debug, Clone)]
pub struct SamplingConfig {
    pub decay_tau: f64,
    pub min_per_passage: usize,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            decay_tau: 1.0,
            min_per_passage: 1,
            seed: 0,
        }
    }
}

// Salts separating the RNG stream that picks guaranteed sentences from the
// stream that draws inclusion variables. Keeping the streams independent
// makes the sampled-set nesting across decay_tau values exact.
const GUARANTEE_SALT: u64 = 0x5a3c_9d1e;
const INCLUSION_SALT: u64 = 0xbe44_77aa;

/// Samples sentence queries from a corpus.
///
/// Deterministic given the seed; each emitted query id is
/// `"<passage_id>#s<sentence_index>"`, recording its source passage.
pub fn sample_training_queries(corpus: &Corpus, cfg: &SamplingConfig) -> Result<QuerySet> {
    if corpus.is_empty() {
        return Err(Error::EmptyInput("corpus"));
    }
    if cfg.decay_tau.is_nan() || cfg.decay_tau <= 0.0 {
        return Err(Error::invalid(format!(
            "decay_tau must be positive, got {}",
            cfg.decay_tau
        )));
    }

    // Position of each passage within its document (grouped by title);
    // untitled passages are singleton documents at position 0.
    let mut doc_counts: HashMap<&str, usize> = HashMap::new();
    let mut queries = Vec::new();
    for passage in corpus.iter() {
        let position = match passage.title.as_deref() {
            Some(title) => {
                let count = doc_counts.entry(title).or_insert(0);
                let pos = *count;
                *count += 1;
                pos
            }
            None => 0,
        };
        let sentences = split_sentences(passage);
        if sentences.is_empty() {
            continue;
        }
        let keep = min(cfg.min_per_passage, sentences.len());
        let p_include = (-(position as f64) / cfg.decay_tau).exp();

        let mut guard_rng =
            ChaCha8Rng::seed_from_u64(cfg.seed ^ stable_hash(GUARANTEE_SALT, &passage.id));
        let guaranteed = rand::seq::index::sample(&mut guard_rng, sentences.len(), keep).into_vec();

        let mut draw_rng =
            ChaCha8Rng::seed_from_u64(cfg.seed ^ stable_hash(INCLUSION_SALT, &passage.id));
        for (idx, sentence) in sentences.iter().enumerate() {
            // Draw for every sentence so the draw sequence is identical
            // across decay_tau values, giving nested inclusion sets.
            let u: f64 = draw_rng.random();
            let include = guaranteed.contains(&idx) || u < p_include;
            if include {
                queries.push(Query {
                    id: format!("{}#s{}", passage.id, idx),
                    text: sentence.clone(),
                    answers: None,
                });
            }
        }
    }
    QuerySet::from_queries(queries)
}

/// Recovers the source passage id recorded in a sampled query id.
pub fn source_passage_id(query_id: &str) -> Option<&str> {
    query_id.rsplit_once("#s").map(|(pid, _)| pid)
}

/// Returns the query with its whitespace tokens uniformly permuted.
/// Deterministic given the seed; id and answers are unchanged.
pub fn shuffle_query_tokens(query: &Query, seed: u64) -> Query {
    let mut tokens: Vec<&str> = query.text.split_whitespace().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    tokens.shuffle(&mut rng);
    Query {
        id: query.id.clone(),
        text: tokens.join(" "),
        answers: query.answers.clone(),
    }
}
