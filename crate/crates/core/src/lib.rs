//! Relaxed perfect matchings in bipartite hypergraphs.

pub mod assign;
pub mod error;
pub mod hierarchy;
pub mod instance;
pub mod instances;
pub mod io;
pub mod matching;
pub mod params;
pub mod pipeline;
pub mod preprocess;
pub mod rational;
pub mod reduce;
pub mod oracle;
pub mod rng;
pub mod select;

pub use error::{Error, Result};
pub use instance::{validate, Configuration, DegreeProfile, Hypergraph, SizeClassIndex};
pub use matching::{verify, MatchEntry, RelaxedMatching, VerifyReport};
pub use params::PipelineParams;
pub use rational::Alpha;
