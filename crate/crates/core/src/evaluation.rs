//! Retrieval metrics and analyses: Acc@k, MRR@k, Recall@k, surrogate MRR on
//! a mini-index, rank-biased overlap, and the token-shuffle stress test.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::hash::Hash;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::corpus::{shuffle_query_tokens, Corpus, Query, QuerySet};
use crate::encoder::{encode_passage, encode_query, EncoderParams};
use crate::error::{Error, Result};
use crate::fusion::{
    fuse_passage_vector, fuse_query_vector, retrieve_dense, DenseIndex, FusionConfig, FusionMode,
};
use crate::imitation::{build_surrogate_index, SurrogatePairs};
use crate::sparse::{tokenize, RankedList, Retriever, TokenizerConfig};
use crate::util::stable_hash;

/// Relevance judgments: query id -> set of positive passage ids.
///
/// Built either from a qrels file or from per-query answer strings resolved
/// against a corpus by normalized substring containment.
#[derive(Debug, Clone, Default)]
pub struct Judgments {
    positives: BTreeMap<String, BTreeSet<String>>,
}

impl Judgments {
    pub fn from_qrels(positives: BTreeMap<String, BTreeSet<String>>) -> Self {
        Judgments { positives }
    }

    /// Answer mode: a passage is positive for a query when its text contains
    /// any of the query's answer strings (case-insensitive, whitespace
    /// normalized). Queries without answers are left unjudged.
    pub fn from_answers(queries: &QuerySet, corpus: &Corpus) -> Self {
        let normalized: Vec<(&str, String)> = corpus
            .iter()
            .map(|p| (p.id.as_str(), normalize_for_match(&p.text)))
            .collect();
        let mut positives = BTreeMap::new();
        for query in queries.iter() {
            let Some(answers) = &query.answers else {
                continue;
            };
            if answers.is_empty() {
                continue;
            }
            let needles: Vec<String> = answers.iter().map(|a| normalize_for_match(a)).collect();
            let hits: BTreeSet<String> = normalized
                .iter()
                .filter(|(_, text)| needles.iter().any(|n| !n.is_empty() && text.contains(n)))
                .map(|(id, _)| id.to_string())
                .collect();
            positives.insert(query.id.clone(), hits);
        }
        Judgments { positives }
    }

    pub fn positives(&self, query_id: &str) -> Option<&BTreeSet<String>> {
        self.positives.get(query_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &BTreeSet<String>)> {
        self.positives.iter()
    }

    pub fn len(&self) -> usize {
        self.positives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positives.is_empty()
    }
}

/// Lowercases and collapses whitespace runs to single spaces.
pub fn normalize_for_match(s: &str) -> String {
    s.to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Reads a qrels file: `<query_id> 0 <passage_id> <relevance>` per line;
/// relevance > 0 marks a positive.
pub fn read_qrels(path: impl AsRef<Path>) -> Result<Judgments> {
    let display = path.as_ref().display().to_string();
    let file = File::open(path.as_ref()).map_err(|e| Error::io(&display, e))?;
    let reader = BufReader::new(file);
    let mut positives: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(&display, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::format(
                &display,
                lineno + 1,
                format!("expected 4 fields, got {}", fields.len()),
            ));
        }
        let relevance: i64 = fields[3].parse().map_err(|_| {
            Error::format(
                &display,
                lineno + 1,
                format!("bad relevance {:?}", fields[3]),
            )
        })?;
        let entry = positives.entry(fields[0].to_string()).or_default();
        if relevance > 0 {
            entry.insert(fields[2].to_string());
        }
    }
    Ok(Judgments { positives })
}

/// Writes judgments in qrels format with relevance 1.
pub fn write_qrels(path: impl AsRef<Path>, judgments: &Judgments) -> Result<()> {
    let display = path.as_ref().display().to_string();
    let file = File::create(path.as_ref()).map_err(|e| Error::io(&display, e))?;
    let mut w = BufWriter::new(file);
    for (qid, ids) in judgments.iter() {
        for id in ids {
            writeln!(w, "{qid} 0 {id} 1").map_err(|e| Error::io(&display, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(&display, e))
}

/// An evaluated run: query id -> ranked list.
pub type Run = BTreeMap<String, RankedList>;

/// Keys ranked lists by their query id.
pub fn run_from_lists(lists: Vec<RankedList>) -> Run {
    lists
        .into_iter()
        .map(|l| (l.query_id().to_string(), l))
        .collect()
}

fn check_metric_inputs(judgments: &Judgments, k: usize) -> Result<()> {
    if judgments.is_empty() {
        return Err(Error::EmptyInput("judgments"));
    }
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    Ok(())
}

/// Fraction of judged queries with at least one positive in the top k.
/// Queries absent from the run count as misses.
pub fn accuracy_at_k(run: &Run, judgments: &Judgments, k: usize) -> Result<f64> {
    check_metric_inputs(judgments, k)?;
    let mut hits = 0usize;
    for (qid, positives) in judgments.iter() {
        if let Some(list) = run.get(qid) {
            if list
                .entries()
                .iter()
                .take(k)
                .any(|(id, _)| positives.contains(id))
            {
                hits += 1;
            }
        }
    }
    Ok(hits as f64 / judgments.len() as f64)
}

/// Mean over judged queries of 1/rank of the first positive within the top
/// k, zero when none is found.
pub fn mrr_at_k(run: &Run, judgments: &Judgments, k: usize) -> Result<f64> {
    check_metric_inputs(judgments, k)?;
    let mut sum = 0.0f64;
    for (qid, positives) in judgments.iter() {
        if let Some(list) = run.get(qid) {
            if let Some(pos) = list
                .entries()
                .iter()
                .take(k)
                .position(|(id, _)| positives.contains(id))
            {
                sum += 1.0 / (pos + 1) as f64;
            }
        }
    }
    Ok(sum / judgments.len() as f64)
}

/// Mean over judged queries of the fraction of positives found in the top k.
pub fn recall_at_k(run: &Run, judgments: &Judgments, k: usize) -> Result<f64> {
    check_metric_inputs(judgments, k)?;
    let mut sum = 0.0f64;
    for (qid, positives) in judgments.iter() {
        if positives.is_empty() {
            continue;
        }
        if let Some(list) = run.get(qid) {
            let found = list
                .entries()
                .iter()
                .take(k)
                .filter(|(id, _)| positives.contains(id))
                .count();
            sum += found as f64 / positives.len() as f64;
        }
    }
    Ok(sum / judgments.len() as f64)
}

/// MRR on the mini-index spanned by the validation pairs (at most 2N
/// passages for N pairs), ranking every mini-index passage per query with
/// each query's own teacher-rank-1 passage as the sole positive.
pub fn surrogate_mrr(
    encoder: &EncoderParams,
    pairs: &SurrogatePairs,
    corpus: &Corpus,
    tokenizer: &TokenizerConfig,
) -> Result<f64> {
    surrogate_mrr_impl(
        pairs,
        corpus,
        tokenizer,
        |tokens| encode_query(encoder, tokens),
        |tokens| encode_passage(encoder, tokens),
    )
}

/// Surrogate MRR of the concat-fused scorer `base + mu * lex`; used to
/// validate joint training.
pub(crate) fn surrogate_mrr_fused(
    base: &EncoderParams,
    lexical: &EncoderParams,
    mu: f64,
    pairs: &SurrogatePairs,
    corpus: &Corpus,
    tokenizer: &TokenizerConfig,
) -> Result<f64> {
    let cfg = FusionConfig {
        mode: FusionMode::Concat,
        mu,
    };
    surrogate_mrr_impl(
        pairs,
        corpus,
        tokenizer,
        |tokens| {
            fuse_query_vector(
                &encode_query(base, tokens),
                &encode_query(lexical, tokens),
                &cfg,
            )
            .expect("concat fusion cannot fail")
        },
        |tokens| {
            fuse_passage_vector(
                &encode_passage(base, tokens),
                &encode_passage(lexical, tokens),
                &cfg,
            )
            .expect("concat fusion cannot fail")
        },
    )
}

fn surrogate_mrr_impl(
    pairs: &SurrogatePairs,
    corpus: &Corpus,
    tokenizer: &TokenizerConfig,
    embed_query: impl Fn(&[String]) -> Vec<f64>,
    embed_passage: impl Fn(&[String]) -> Vec<f64>,
) -> Result<f64> {
    let ids = build_surrogate_index(pairs)?;
    let mut rows = Vec::with_capacity(ids.len());
    for id in &ids {
        let passage = corpus
            .get(id)
            .ok_or_else(|| Error::UnknownPassage { id: id.clone() })?;
        rows.push(embed_passage(&crate::sparse::passage_tokens(
            passage, tokenizer,
        )));
    }
    let index = DenseIndex::from_rows(ids.into_iter().collect(), rows)?;
    let depth = index.len();
    let mut sum = 0.0f64;
    for pair in pairs.pairs() {
        let tokens = tokenize(&pair.query.text, tokenizer);
        let qvec = embed_query(&tokens);
        let list = retrieve_dense(&index, &pair.query.id, &qvec, depth)?;
        if let Some(rank) = list.rank_of(&pair.positive) {
            sum += 1.0 / rank as f64;
        }
    }
    Ok(sum / pairs.len() as f64)
}

/// Extrapolated rank-biased overlap between two rankings.
///
/// With agreement `A_d = |prefix_d(a) & prefix_d(b)| / d` and evaluation
/// depth `D = min(|a|, |b|)`, returns
/// `(1-p) * sum_{d=1..D} p^(d-1) * A_d + p^D * A_D`.
/// Lists must not contain internal duplicates; `p` must lie in (0, 1).
pub fn rbo<T: Eq + Hash>(a: &[T], b: &[T], p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!(
            "rbo persistence must lie in (0, 1), got {p}"
        )));
    }
    if has_duplicates(a) || has_duplicates(b) {
        return Err(Error::invalid("rbo lists must not contain duplicates"));
    }
    let depth = a.len().min(b.len());
    if depth == 0 {
        // Two empty rankings agree vacuously; otherwise no overlap is visible.
        return Ok(if a.is_empty() && b.is_empty() {
            1.0
        } else {
            0.0
        });
    }
    let mut seen_a: HashSet<&T> = HashSet::with_capacity(depth);
    let mut seen_b: HashSet<&T> = HashSet::with_capacity(depth);
    let mut overlap = 0usize;
    let mut agreements = Vec::with_capacity(depth);
    for d in 1..=depth {
        let x = &a[d - 1];
        let y = &b[d - 1];
        if x == y {
            overlap += 1;
        } else {
            if seen_b.contains(x) {
                overlap += 1;
            }
            if seen_a.contains(y) {
                overlap += 1;
            }
        }
        seen_a.insert(x);
        seen_b.insert(y);
        agreements.push(overlap as f64 / d as f64);
    }
    // Telescoped form of (1-p) * sum p^(d-1) A_d + p^D A_D: since the
    // weights sum to one, this equals A_D + sum (1-p) p^(d-1) (A_d - A_D),
    // which evaluates the constant-agreement cases without rounding drift.
    let final_agreement = agreements[depth - 1];
    let mut value = final_agreement;
    let mut weight = 1.0 - p; // (1-p) p^(d-1)
    for a_d in &agreements[..depth - 1] {
        value += weight * (a_d - final_agreement);
        weight *= p;
    }
    Ok(value)
}

fn has_duplicates<T: Eq + Hash>(list: &[T]) -> bool {
    let set: HashSet<&T> = list.iter().collect();
    set.len() != list.len()
}

/// One stress-test measurement: Acc@k before and after token shuffling.
#[derive(Debug, Clone)]
pub struct StressRow {
    pub retriever: String,
    pub k: usize,
    pub original: f64,
    pub shuffled: f64,
    pub delta: f64,
}

/// Stress-test results, one row per (retriever, k).
#[derive(Debug, Clone)]
pub struct StressReport {
    pub rows: Vec<StressRow>,
}

impl StressReport {
    /// Machine-readable key-value lines.
    pub fn kv_lines(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            out.push_str(&format!(
                "retriever={}, k={}, original={:.6}, shuffled={:.6}, delta={:.6}\n",
                row.retriever, row.k, row.original, row.shuffled, row.delta
            ));
        }
        out
    }
}

impl fmt::Display for StressReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name_width = self
            .rows
            .iter()
            .map(|r| r.retriever.len())
            .max()
            .unwrap_or(9)
            .max("retriever".len());
        writeln!(
            f,
            "{:<name_width$}  {:>5}  {:>9}  {:>9}  {:>9}",
            "retriever", "k", "original", "shuffled", "delta"
        )?;
        for row in &self.rows {
            writeln!(
                f,
                "{:<name_width$}  {:>5}  {:>9.4}  {:>9.4}  {:>9.4}",
                row.retriever, row.k, row.original, row.shuffled, row.delta
            )?;
        }
        Ok(())
    }
}

const QUERY_SHUFFLE_SALT: u64 = 0x7e57_5a1f;

/// Measures Acc@k sensitivity to token order: every retriever is evaluated
/// on the original queries and on one shared token-shuffled copy per query
/// (seeded), reporting the accuracy drop.
pub fn shuffle_stress_test(
    retrievers: &[(&str, &dyn Retriever)],
    queries: &QuerySet,
    judgments: &Judgments,
    k_values: &[usize],
    seed: u64,
) -> Result<StressReport> {
    if k_values.is_empty() {
        return Err(Error::EmptyInput("k values"));
    }
    let shuffled: Vec<Query> = queries
        .iter()
        .map(|q| shuffle_query_tokens(q, seed ^ stable_hash(QUERY_SHUFFLE_SALT, &q.id)))
        .collect();
    let max_k = *k_values.iter().max().expect("non-empty k values");
    let mut rows = Vec::new();
    for (name, retriever) in retrievers {
        let run_original = run_from_lists(
            queries
                .iter()
                .map(|q| retriever.retrieve(q, max_k))
                .collect(),
        );
        let run_shuffled = run_from_lists(
            shuffled
                .iter()
                .map(|q| retriever.retrieve(q, max_k))
                .collect(),
        );
        for &k in k_values {
            let original = accuracy_at_k(&truncate_run(&run_original, k), judgments, k)?;
            let shuffled_acc = accuracy_at_k(&truncate_run(&run_shuffled, k), judgments, k)?;
            rows.push(StressRow {
                retriever: name.to_string(),
                k,
                original,
                shuffled: shuffled_acc,
                delta: original - shuffled_acc,
            });
        }
    }
    Ok(StressReport { rows })
}

fn truncate_run(run: &Run, k: usize) -> Run {
    run.iter()
        .map(|(qid, list)| (qid.clone(), list.top(k)))
        .collect()
}

/// An order-sensitive retriever for stress-test calibration: term matches
/// are weighted by the query position of the term (`1/(position+1)`), so
/// shuffling a query's tokens changes its scores.
pub struct PositionSensitiveRetriever {
    postings: HashMap<String, Vec<(String, u32)>>,
    tokenizer: TokenizerConfig,
}

impl PositionSensitiveRetriever {
    pub fn new(corpus: &Corpus, tokenizer: &TokenizerConfig) -> Self {
        let mut postings: HashMap<String, Vec<(String, u32)>> = HashMap::new();
        for passage in corpus.iter() {
            let mut counts: BTreeMap<String, u32> = BTreeMap::new();
            for token in crate::sparse::passage_tokens(passage, tokenizer) {
                *counts.entry(token).or_insert(0) += 1;
            }
            for (term, tf) in counts {
                postings
                    .entry(term)
                    .or_default()
                    .push((passage.id.clone(), tf));
            }
        }
        PositionSensitiveRetriever {
            postings,
            tokenizer: tokenizer.clone(),
        }
    }
}

impl Retriever for PositionSensitiveRetriever {
    fn retrieve(&self, query: &Query, k: usize) -> RankedList {
        let tokens = tokenize(&query.text, &self.tokenizer);
        let mut scores: HashMap<&str, f64> = HashMap::new();
        for (position, token) in tokens.iter().enumerate() {
            if let Some(list) = self.postings.get(token) {
                let weight = 1.0 / (position + 1) as f64;
                for (id, tf) in list {
                    *scores.entry(id.as_str()).or_insert(0.0) += weight * f64::from(*tf);
                }
            }
        }
        let entries = scores
            .into_iter()
            .map(|(id, s)| (id.to_string(), s))
            .collect();
        RankedList::from_scores(&query.id, entries, k)
    }
}

/// One metric measurement in an evaluation report.
#[derive(Debug, Clone)]
pub struct EvalRow {
    pub metric: String,
    pub k: usize,
    pub value: f64,
}

/// A metric table, printable as aligned text or machine-readable key-value
/// lines (`metric=..., k=..., value=...`).
#[derive(Debug, Clone, Default)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
}

impl EvalReport {
    pub fn kv_lines(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            out.push_str(&format!(
                "metric={}, k={}, value={:.6}\n",
                row.metric, row.k, row.value
            ));
        }
        out
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<8}  {:>5}  {:>9}", "metric", "k", "value")?;
        for row in &self.rows {
            writeln!(f, "{:<8}  {:>5}  {:>9.4}", row.metric, row.k, row.value)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Passage;
    use crate::imitation::SurrogatePair;

    fn list(qid: &str, ids: &[&str]) -> RankedList {
        let entries = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.to_string(), (ids.len() - i) as f64))
            .collect();
        RankedList::from_scores(qid, entries, ids.len())
    }

    fn qrels(entries: &[(&str, &[&str])]) -> Judgments {
        Judgments::from_qrels(
            entries
                .iter()
                .map(|(qid, ids)| (qid.to_string(), ids.iter().map(|s| s.to_string()).collect()))
                .collect(),
        )
    }

    #[test]
    fn accuracy_counts_hits_in_top_k() {
        let run = run_from_lists(vec![list("q1", &["a", "b"]), list("q2", &["c", "d"])]);
        let judgments = qrels(&[("q1", &["a"]), ("q2", &["zzz"])]);
        assert_eq!(accuracy_at_k(&run, &judgments, 20).unwrap(), 0.5);
        let all_hit = qrels(&[("q1", &["a"]), ("q2", &["c"])]);
        assert_eq!(accuracy_at_k(&run, &all_hit, 1).unwrap(), 1.0);
    }

    #[test]
    fn queries_missing_from_run_are_misses() {
        let run = run_from_lists(vec![list("q1", &["a"])]);
        let judgments = qrels(&[("q1", &["a"]), ("q9", &["a"])]);
        assert_eq!(accuracy_at_k(&run, &judgments, 5).unwrap(), 0.5);
    }

    #[test]
    fn empty_judgments_error() {
        let run = run_from_lists(vec![list("q1", &["a"])]);
        let judgments = Judgments::default();
        assert!(accuracy_at_k(&run, &judgments, 5).is_err());
        assert!(mrr_at_k(&run, &judgments, 5).is_err());
        assert!(recall_at_k(&run, &judgments, 5).is_err());
    }

    #[test]
    fn mrr_uses_first_positive_rank() {
        let run = run_from_lists(vec![list("q", &["x", "y", "z", "pos", "w"])]);
        let judgments = qrels(&[("q", &["pos"])]);
        assert_eq!(mrr_at_k(&run, &judgments, 10).unwrap(), 0.25);
        assert_eq!(mrr_at_k(&run, &judgments, 3).unwrap(), 0.0);
        let top = run_from_lists(vec![list("q", &["pos"])]);
        assert_eq!(mrr_at_k(&top, &judgments, 10).unwrap(), 1.0);
    }

    #[test]
    fn recall_counts_found_fraction() {
        let run = run_from_lists(vec![list("q", &["a", "b", "c"])]);
        assert_eq!(
            recall_at_k(&run, &qrels(&[("q", &["a", "b"])]), 10).unwrap(),
            1.0
        );
        assert_eq!(
            recall_at_k(&run, &qrels(&[("q", &["a", "zz"])]), 10).unwrap(),
            0.5
        );
        assert_eq!(
            recall_at_k(&run, &qrels(&[("q", &["zz", "yy"])]), 10).unwrap(),
            0.0
        );
    }

    #[test]
    fn answer_mode_matches_normalized_substrings() {
        let corpus = Corpus::from_passages(vec![
            Passage {
                id: "p1".into(),
                title: None,
                text: "He was born in 1971.".into(),
            },
            Passage {
                id: "p2".into(),
                title: None,
                text: "Something else".into(),
            },
        ])
        .unwrap();
        let queries = QuerySet::from_queries(vec![Query {
            id: "q".into(),
            text: "when was he born".into(),
            answers: Some(vec!["1971".into()]),
        }])
        .unwrap();
        let judgments = Judgments::from_answers(&queries, &corpus);
        assert_eq!(
            judgments.positives("q").unwrap(),
            &["p1".to_string()].into_iter().collect::<BTreeSet<_>>()
        );
        let run = run_from_lists(vec![list("q", &["p1"])]);
        assert_eq!(accuracy_at_k(&run, &judgments, 20).unwrap(), 1.0);
    }

    #[test]
    fn rbo_identical_lists_are_one() {
        let a = ["x", "y", "z"];
        assert_eq!(rbo(&a, &a, 0.9).unwrap(), 1.0);
        assert_eq!(rbo(&a, &a, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn rbo_disjoint_lists_are_zero() {
        let a = ["x", "y"];
        let b = ["u", "v"];
        assert_eq!(rbo(&a, &b, 0.9).unwrap(), 0.0);
    }

    #[test]
    fn rbo_swapped_pair_closed_form() {
        // A_1 = 0, A_2 = 1: (1-p) * p * 1 + p^2 = 0.09 + 0.81 = 0.90.
        let value = rbo(&["x", "y"], &["y", "x"], 0.9).unwrap();
        assert!((value - 0.90).abs() < 1e-12, "{value}");
    }

    #[test]
    fn rbo_rejects_duplicates_and_bad_p() {
        assert!(rbo(&["x", "x"], &["y", "z"], 0.9).is_err());
        assert!(rbo(&["x"], &["y"], 1.0).is_err());
        assert!(rbo(&["x"], &["y"], 0.0).is_err());
    }

    #[test]
    fn rbo_is_symmetric() {
        let a = ["a", "b", "c", "d"];
        let b = ["c", "a", "x", "y"];
        assert_eq!(rbo(&a, &b, 0.9).unwrap(), rbo(&b, &a, 0.9).unwrap());
    }

    #[test]
    fn surrogate_mrr_trivial_cases() {
        // Vocabulary: one query token, two passage tokens. The query tower
        // maps "qa" to [1, 0]; passages "pa" -> [-1, 0], "pb" -> [1, 0].
        let vocab: Vec<String> = vec!["pa".into(), "pb".into(), "qa".into()];
        let d = 2;
        let mut query_table = vec![0.0; vocab.len() * d];
        let mut passage_table = vec![0.0; vocab.len() * d];
        query_table[2 * d] = 1.0; // row of "qa"
        passage_table[0] = -1.0; // row of "pa"
        passage_table[d] = 1.0; // row of "pb"
        let params = EncoderParams::from_parts(vocab, d, query_table, passage_table).unwrap();
        let corpus = Corpus::from_passages(vec![
            Passage {
                id: "A".into(),
                title: None,
                text: "pa".into(),
            },
            Passage {
                id: "B".into(),
                title: None,
                text: "pb".into(),
            },
        ])
        .unwrap();
        let pair = |pos: &str, neg: &str| SurrogatePair {
            query: Query {
                id: "q".into(),
                text: "qa".into(),
                answers: None,
            },
            positive: pos.into(),
            negative: neg.into(),
        };
        let tokenizer = TokenizerConfig::default();
        // Positive is "B" (score +1) vs negative "A" (score -1): rank 1.
        let win = SurrogatePairs::from_pairs(vec![pair("B", "A")]).unwrap();
        assert_eq!(
            surrogate_mrr(&params, &win, &corpus, &tokenizer).unwrap(),
            1.0
        );
        // Positive is "A": ranked 2 of 2.
        let lose = SurrogatePairs::from_pairs(vec![pair("A", "B")]).unwrap();
        assert_eq!(
            surrogate_mrr(&params, &lose, &corpus, &tokenizer).unwrap(),
            0.5
        );
    }

    #[test]
    fn stress_test_detects_order_sensitivity_only_for_order_sensitive_scorers() {
        use crate::sparse::{build_inverted_index, Bm25Params, Bm25Retriever};
        // Two passages; the query mentions "alpha" before "beta". The
        // position-weighted mock prefers the passage matching the earlier
        // token, so shuffling can flip its ranking; BM25 cannot change.
        let corpus = Corpus::from_passages(vec![
            Passage {
                id: "A".into(),
                title: None,
                text: "alpha alpha alpha".into(),
            },
            Passage {
                id: "B".into(),
                title: None,
                text: "beta beta beta".into(),
            },
        ])
        .unwrap();
        let tokenizer = TokenizerConfig::default();
        let index = build_inverted_index(&corpus, &tokenizer).unwrap();
        let bm25 = Bm25Retriever {
            index: &index,
            params: Bm25Params::default(),
        };
        let mock = PositionSensitiveRetriever::new(&corpus, &tokenizer);
        let queries = QuerySet::from_queries(
            (0..8)
                .map(|i| Query {
                    id: format!("q{i}"),
                    text: "alpha beta beta".into(),
                    answers: None,
                })
                .collect(),
        )
        .unwrap();
        let judgments = Judgments::from_qrels(
            (0..8)
                .map(|i| {
                    (
                        format!("q{i}"),
                        ["A".to_string()].into_iter().collect::<BTreeSet<_>>(),
                    )
                })
                .collect(),
        );
        let report = shuffle_stress_test(
            &[("bm25", &bm25), ("mock", &mock)],
            &queries,
            &judgments,
            &[1],
            99,
        )
        .unwrap();
        let bm25_row = report.rows.iter().find(|r| r.retriever == "bm25").unwrap();
        assert_eq!(bm25_row.delta, 0.0);
        let mock_row = report.rows.iter().find(|r| r.retriever == "mock").unwrap();
        assert_ne!(mock_row.delta, 0.0);
    }

    #[test]
    fn report_formats_are_stable() {
        let report = EvalReport {
            rows: vec![EvalRow {
                metric: "acc".into(),
                k: 20,
                value: 0.85,
            }],
        };
        assert!(report
            .kv_lines()
            .contains("metric=acc, k=20, value=0.850000"));
        assert!(report.to_string().contains("acc"));
    }

    #[test]
    fn qrels_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("qrels.txt");
        let judgments = qrels(&[("q1", &["p1", "p2"]), ("q2", &["p3"])]);
        write_qrels(&path, &judgments).unwrap();
        let back = read_qrels(&path).unwrap();
        assert_eq!(back.positives("q1"), judgments.positives("q1"));
        assert_eq!(back.positives("q2"), judgments.positives("q2"));

        std::fs::write(&path, "q1 0 p1\n").unwrap();
        assert!(read_qrels(&path).unwrap_err().is_data_error());
    }
}
