//! Teacher-labeled training data for the dense student.
//!
//! Any [`Retriever`] can act as the teacher: per query its top-K list
//! supplies the top `n_p` passages as positives and the bottom `n_n` as hard
//! negatives. Validation pairs keep only the teacher's rank-1 passage as
//! positive and the deepest retrieved passage as the hard negative.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Query, QuerySet};
use crate::error::{Error, Result};
use crate::sparse::Retriever;

/// A query with teacher-rank-ordered positives and bottom-of-list negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct ImitationExample {
    pub query: Query,
    /// Passage ids in teacher rank order, best first.
    pub positives: Vec<String>,
    /// Passage ids from the bottom of the teacher's list; never overlaps
    /// `positives`.
    pub negatives: Vec<String>,
}

/// Imitation examples plus the number of queries dropped because the teacher
/// returned fewer than `n_p` results.
#[derive(Debug, Clone)]
pub struct ImitationData {
    pub examples: Vec<ImitationExample>,
    pub dropped: usize,
}

/// One validation triple: the teacher's best passage and a bottom-ranked
/// hard negative for the same query.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogatePair {
    pub query: Query,
    pub positive: String,
    pub negative: String,
}

/// Validation pairs for surrogate-MRR evaluation.
#[derive(Debug, Clone, Default)]
pub struct SurrogatePairs {
    pairs: Vec<SurrogatePair>,
}

impl SurrogatePairs {
    /// Builds the collection, rejecting pairs whose positive equals their
    /// negative.
    pub fn from_pairs(pairs: Vec<SurrogatePair>) -> Result<Self> {
        for pair in &pairs {
            if pair.positive == pair.negative {
                return Err(Error::invalid(format!(
                    "surrogate pair for query {:?} has positive == negative {:?}",
                    pair.query.id, pair.positive
                )));
            }
        }
        Ok(SurrogatePairs { pairs })
    }

    pub fn pairs(&self) -> &[SurrogatePair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Labels a query set with a teacher retriever.
///
/// Per query the teacher retrieves its top `k`; positives are ranks
/// `1..=n_p` and negatives the bottom `n_n` of the returned list (taken from
/// the actual bottom when the list is shorter than `k`, never overlapping
/// the positives). Queries with fewer than `n_p` results are dropped and
/// counted.
pub fn generate_imitation_data(
    teacher: &dyn Retriever,
    queries: &QuerySet,
    k: usize,
    n_p: usize,
    n_n: usize,
) -> Result<ImitationData> {
    if n_p == 0 {
        return Err(Error::invalid("n_p must be at least 1"));
    }
    if n_p + n_n > k {
        return Err(Error::invalid(format!(
            "n_p + n_n = {} exceeds retrieval depth k = {k}",
            n_p + n_n
        )));
    }
    let mut examples = Vec::new();
    let mut dropped = 0usize;
    for query in queries.iter() {
        let list = teacher.retrieve(query, k);
        if list.len() < n_p {
            dropped += 1;
            continue;
        }
        let ids: Vec<&str> = list.ids().collect();
        let positives: Vec<String> = ids[..n_p].iter().map(|s| s.to_string()).collect();
        let neg_start = ids.len().saturating_sub(n_n).max(n_p);
        let negatives: Vec<String> = ids[neg_start..].iter().map(|s| s.to_string()).collect();
        examples.push(ImitationExample {
            query: query.clone(),
            positives,
            negatives,
        });
    }
    Ok(ImitationData { examples, dropped })
}

/// Builds validation pairs: positive = teacher rank 1, hard negative = the
/// deepest available rank (>= 2). Queries with fewer than two results are
/// dropped; the drop count is returned alongside the pairs.
pub fn generate_validation_pairs(
    teacher: &dyn Retriever,
    dev_queries: &QuerySet,
    k: usize,
) -> Result<(SurrogatePairs, usize)> {
    if k < 2 {
        return Err(Error::invalid("validation retrieval depth k must be >= 2"));
    }
    let mut pairs = Vec::new();
    let mut dropped = 0usize;
    for query in dev_queries.iter() {
        let list = teacher.retrieve(query, k);
        if list.len() < 2 {
            dropped += 1;
            continue;
        }
        let entries = list.entries();
        pairs.push(SurrogatePair {
            query: query.clone(),
            positive: entries[0].0.clone(),
            negative: entries[entries.len() - 1].0.clone(),
        });
    }
    Ok((SurrogatePairs::from_pairs(pairs)?, dropped))
}

/// The deduplicated set of passage ids referenced by the validation pairs —
/// at most 2N ids for N pairs, exactly 2N when all are distinct.
pub fn build_surrogate_index(pairs: &SurrogatePairs) -> Result<BTreeSet<String>> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("surrogate pairs"));
    }
    let mut ids = BTreeSet::new();
    for pair in pairs.pairs() {
        ids.insert(pair.positive.clone());
        ids.insert(pair.negative.clone());
    }
    Ok(ids)
}

#[derive(Serialize, Deserialize)]
struct ImitationRecord {
    query_id: String,
    query_text: String,
    positives: Vec<String>,
    negatives: Vec<String>,
}

/// Writes imitation examples as JSON lines
/// (`query_id`, `query_text`, `positives`, `negatives`), losslessly.
pub fn write_imitation_file(path: impl AsRef<Path>, examples: &[ImitationExample]) -> Result<()> {
    let display = path.as_ref().display().to_string();
    let file = File::create(path.as_ref()).map_err(|e| Error::io(&display, e))?;
    let mut writer = BufWriter::new(file);
    for ex in examples {
        let record = ImitationRecord {
            query_id: ex.query.id.clone(),
            query_text: ex.query.text.clone(),
            positives: ex.positives.clone(),
            negatives: ex.negatives.clone(),
        };
        let line = serde_json::to_string(&record)
            .map_err(|e| Error::format(&display, 0, e.to_string()))?;
        writeln!(writer, "{line}").map_err(|e| Error::io(&display, e))?;
    }
    writer.flush().map_err(|e| Error::io(&display, e))
}

/// Reads an imitation dataset written by [`write_imitation_file`].
pub fn read_imitation_file(path: impl AsRef<Path>) -> Result<Vec<ImitationExample>> {
    let display = path.as_ref().display().to_string();
    let file = File::open(path.as_ref()).map_err(|e| Error::io(&display, e))?;
    let reader = BufReader::new(file);
    let mut examples = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(&display, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ImitationRecord = serde_json::from_str(&line)
            .map_err(|e| Error::format(&display, lineno + 1, e.to_string()))?;
        examples.push(ImitationExample {
            query: Query {
                id: record.query_id,
                text: record.query_text,
                answers: None,
            },
            positives: record.positives,
            negatives: record.negatives,
        });
    }
    Ok(examples)
}

#[derive(Serialize, Deserialize)]
struct PairRecord {
    query_id: String,
    query_text: String,
    positive: String,
    negative: String,
}

/// Writes validation pairs as JSON lines.
pub fn write_validation_file(path: impl AsRef<Path>, pairs: &SurrogatePairs) -> Result<()> {
    let display = path.as_ref().display().to_string();
    let file = File::create(path.as_ref()).map_err(|e| Error::io(&display, e))?;
    let mut writer = BufWriter::new(file);
    for pair in pairs.pairs() {
        let record = PairRecord {
            query_id: pair.query.id.clone(),
            query_text: pair.query.text.clone(),
            positive: pair.positive.clone(),
            negative: pair.negative.clone(),
        };
        let line = serde_json::to_string(&record)
            .map_err(|e| Error::format(&display, 0, e.to_string()))?;
        writeln!(writer, "{line}").map_err(|e| Error::io(&display, e))?;
    }
    writer.flush().map_err(|e| Error::io(&display, e))
}

/// Reads validation pairs written by [`write_validation_file`].
pub fn read_validation_file(path: impl AsRef<Path>) -> Result<SurrogatePairs> {
    let display = path.as_ref().display().to_string();
    let file = File::open(path.as_ref()).map_err(|e| Error::io(&display, e))?;
    let reader = BufReader::new(file);
    let mut pairs = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(&display, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PairRecord = serde_json::from_str(&line)
            .map_err(|e| Error::format(&display, lineno + 1, e.to_string()))?;
        pairs.push(SurrogatePair {
            query: Query {
                id: record.query_id,
                text: record.query_text,
                answers: None,
            },
            positive: record.positive,
            negative: record.negative,
        });
    }
    SurrogatePairs::from_pairs(pairs)
}
