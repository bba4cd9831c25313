//! Neuro-symbolic constraint solving.
//!
//! Opaque program logic is learned as small feed-forward networks from sampled
//! executions ([`nnet`]); those networks are conjoined with symbolic constraints
//! ([`lang`]) and solved by combining an interval/case-splitting decision
//! procedure ([`symsolv`]) with gradient search over loss encodings
//! ([`loss`], [`neusolv`]) under the component-wise strategy in [`mixed`].
//! [`harness`] provides built-in target programs and the benchmark runner.

pub mod harness;
pub mod lang;
pub mod loss;
pub mod mixed;
pub mod neusolv;
pub mod nnet;
pub mod symsolv;
pub mod value;

pub use lang::{parse, print, ConstraintFile};
pub use mixed::{solve, SolveConfig, SolveResult, Verdict};
pub use nnet::{Dataset, MlpModel};
pub use value::{Assignment, Value};
