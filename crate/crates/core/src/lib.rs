//! Metric embeddings of clustered road-style graphs into low-treewidth host
//! graphs, plus exact dynamic programs and approximation pipelines that run
//! on those hosts.
//!
//! The crate is organized bottom-up:
//!
//! - [`graph`]: weighted graphs, exact shortest paths with deterministic
//!   tie-breaking, metric balls.
//! - [`scale`]: canonical rescaling so that all constructions can work on a
//!   fixed geometric ladder of radii.
//! - [`cover`]: shortest-path hub covers, one per ladder scale.
//! - [`towns`]: the laminar cluster ("town") decomposition induced by the
//!   hub covers, and per-town core hub sets.
//! - [`net`]: greedy metric nets with forced members.
//! - [`augment`]: depot guard pendants that force depots into trivial towns.
//! - [`embed`]: the three host-graph constructions (bounded diameter,
//!   single depot, multi depot) together with their tree decompositions.
//! - [`tree_decomp`] / [`nice`]: decomposition containers, validation, and
//!   the nice-form rewrite used by the solvers.
//! - [`solver`]: exact capacitated-routing and center-placement dynamic
//!   programs over nice tree decompositions.
//! - [`pipelines`]: end-to-end approximation pipelines (embed, solve
//!   exactly on the host, lift back).
//! - [`oracle`]: independent brute-force referees and audits. The oracle
//!   module recomputes all distances itself and shares no solver code.
//! - [`instance`] / [`generate`]: problem-instance files and the seeded
//!   instance generators used by the test corpus and the CLI.

pub mod augment;
pub mod cmp;
pub mod cover;
pub mod embed;
pub mod generate;
pub mod graph;
pub mod instance;
pub mod net;
pub mod nice;
pub mod oracle;
pub mod pipelines;
pub mod scale;
pub mod solver;
pub mod towns;
pub mod tree_decomp;
pub mod vrp;

pub use graph::{MetricGraph, Role};
pub use scale::ScaleParams;
