//! Desk-scale hybrid retrieval toolkit.
//!
//! The crate builds a complete sparse-to-dense pipeline around a toy
//! bag-of-embeddings bi-encoder:
//!
//! - [`corpus`]: passage/query ingestion, sentence splitting, and
//!   training-query sampling.
//! - [`sparse`]: tokenization, inverted index, and BM25 retrieval (the
//!   teacher model and the sparse half of hybrid baselines).
//! - [`imitation`]: turning a teacher retriever's rankings into contrastive
//!   training and validation data for a dense student.
//! - [`encoder`]: the trainable bi-encoder (two embedding tables with mean
//!   pooling) and its SGD contrastive trainer.
//! - [`fusion`]: exact flat dense indexes, weighted vector concatenation and
//!   summation of two dense models, weight tuning, and hybrid reranking.
//! - [`evaluation`]: Acc@k, MRR@k, Recall@k, surrogate MRR, rank-biased
//!   overlap, and the token-shuffle stress test.

pub mod corpus;
pub mod encoder;
pub mod error;
pub mod evaluation;
pub mod fusion;
pub mod imitation;
pub mod sparse;

mod util;

pub use error::{Error, Result};
pub use sparse::{RankedList, Retriever};
