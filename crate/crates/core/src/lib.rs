//! Joint optimisation of metaverse AR service decomposition, edge caching of
//! background models and AROs, and data-rate selection under user mobility.
//!
//! The crate is organised bottom-up:
//!
//! * [`instance`]: problem input, random generator, JSON documents.
//! * [`channel`]: Rayleigh/SINR/Shannon link math.
//! * [`evaluator`]: metrics and feasibility straight from the nonlinear
//!   definitions; the reference every other route is checked against.
//! * [`ilp`]: the linearised 0-1 program, LP-format export, point codec.
//! * [`solver`]: enumeration oracle, branch-and-bound, local search.
//! * [`baselines`]: RandS, CFS and UTIL placement schemes.
//! * [`bench`]: sweep harness and result files.
//!
//! Metric code is generic over [`Scalar`]; the aliases below fix it to `f64`
//! (the default everywhere) or `f32`.

pub mod baselines;
pub mod bench;
pub mod channel;
pub mod constraint;
pub mod evaluator;
pub mod ilp;
pub mod instance;
pub mod scalar;
pub mod solver;

pub use scalar::Scalar;

pub type Metrics = evaluator::MetricBreakdown<f64>;
pub type Metrics32 = evaluator::MetricBreakdown<f32>;
pub type Evaluator<'a> = evaluator::Evaluator<'a, f64>;
pub type Evaluator32<'a> = evaluator::Evaluator<'a, f32>;
