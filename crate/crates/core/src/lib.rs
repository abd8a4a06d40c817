//! Hierarchy embeddings in the Lorentz (hyperboloid) model of hyperbolic space.
//!
//! Concepts are placed on the hyperboloid so that distance tracks
//! relatedness and distance from the origin tracks specificity. Training uses
//! Riemannian SGD with a softmax ranking loss over pairwise similarity scores;
//! evaluation measures how well the learned geometry recovers a known
//! taxonomy.
//!
//! ```
//! use lorentz_embed::data::{closure_dataset, TaxonomyDag};
//! use lorentz_embed::exec::Execution;
//! use lorentz_embed::objective::{train, TrainConfig};
//!
//! let dag = TaxonomyDag::from_edges(&[("cat", "animal"), ("dog", "animal")]).unwrap();
//! let ds = closure_dataset(&dag, Execution::Sequential);
//! let mut cfg = TrainConfig::default();
//! cfg.dim = 2;
//! cfg.optimizer.epochs = 5;
//! let trained = train(&ds, &cfg).unwrap();
//! assert_eq!(trained.table.len(), 3);
//! ```

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod exec;
pub mod fsio;
pub mod geometry;
pub mod objective;
pub mod optimizer;

pub use error::{Error, Result};
