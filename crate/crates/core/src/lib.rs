//! Truth-data construction and evaluation for author name disambiguation.
//!
//! Bibliographic records are linked to external authority registries and
//! grant tables to label author name instances, self-citations yield
//! positive same-author pairs, and predicted clusterings are scored with
//! B-cubed metrics and pair accuracy. Scoring and profiling are generic over
//! [`scalar::Scalar`]; the aliases below fix the common instantiations.

pub mod baseline;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod linkage;
pub mod metrics;
pub mod normalize;
pub mod profile;
pub mod scalar;
pub mod synth;

pub use error::{Error, Result};

/// Exact rational used where scores must compare without rounding.
pub type Rational = num_rational::Ratio<i64>;

pub type B3Scores = metrics::B3Scores<f64>;
pub type B3ScoresF32 = metrics::B3Scores<f32>;
pub type ExactB3Scores = metrics::B3Scores<Rational>;
pub type PairAccuracy = metrics::PairAccuracy<f64>;
pub type ExactPairAccuracy = metrics::PairAccuracy<Rational>;
pub type StratifiedScores = metrics::StratifiedScores<f64>;
pub type CcdfPoint = profile::CcdfPoint<f64>;
pub type ExactCcdfPoint = profile::CcdfPoint<Rational>;
pub type Distribution = std::collections::BTreeMap<String, f64>;
pub type ExactDistribution = std::collections::BTreeMap<String, Rational>;
