//! Monte Carlo laboratory for Poisson continuum percolation.
//!
//! A homogeneous Poisson process of intensity `lambda` is sampled on the cube
//! `[-n/2, n/2]^m`; points closer than `r` are joined, and the size `N` of the
//! largest cluster is tracked across replications. Alongside `N`, each point
//! gets a localized score computed only from the points in a cube of
//! half-edge `(theta ln n)^(1/(m-1))` around it, whose sum `N'` is a
//! short-range proxy for `N`. The harness estimates the law of large numbers,
//! variance growth, and Kolmogorov distance to normality of both statistics.
//!
//! Modules:
//! - [`pointproc`]: boxes, point sets, seeded streams, Poisson sampling.
//! - [`clusters`]: grid-bucketed union-find clustering.
//! - [`localscore`]: windows, localized scores, coupling diagnostics.
//! - [`stats`]: normal CDF, Kolmogorov distance, summaries, rate fits.
//! - [`harness`]: configs, deterministic parallel runs, CSV/JSON output.
//! - `oracle` (feature `oracle`): quadratic reference implementations.

pub mod clusters;
pub mod error;
pub mod harness;
pub mod localscore;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod pointproc;
pub mod stats;

pub use clusters::{
    cluster_of, find_clusters, top_clusters, write_labeling_csv, ClusterLabeling, ComponentId,
    GridIndex, TopClusters,
};
pub use error::{Error, Result};
pub use harness::{
    calibrate_theta, run_experiment, run_ladder, ExperimentConfig, Parallelism, ReplicationRecord,
    ThetaRule,
};
pub use localscore::{
    classify_e3, local_score, localized_total, make_window, CouplingEvent, CouplingReport,
    LocalScorer, ScorePair, Window,
};
pub use pointproc::{derive_stream, sample_poisson, Aabb, PointSet, RngStream};
pub use stats::{kolmogorov_distance, normal_cdf, rate_fit, summarize, RateFit, SummarySet};
