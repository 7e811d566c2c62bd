//! Kinematic Theory Transform: decomposition of 2D spatiotemporal
//! trajectories into temporally overlapping strokes, each a link curve
//! (circular arc or clothoid) traversed under a bell-shaped velocity
//! kernel, plus the forward synthesis and quality metrics that close the
//! loop.
//!
//! The crate is organized bottom-up:
//!
//! - [`special`] / [`quad`]: error function, incomplete gamma/beta,
//!   Fresnel integrals, and the quadrature routines behind them.
//! - [`trajectory`]: input representation, resampling, speed profiles.
//! - [`kernels`]: the six velocity kernels and their moment relations.
//! - [`links`]: arcs and clothoids with G1 Hermite fitting.
//! - [`segmentation`]: salient points, angle estimation, stroke seeds.
//! - [`reconstruct`]: forward synthesis from an action plan.
//! - [`extract`]: the full inverse pipeline (seed + coordinate descent).
//! - [`metrics`]: SNR measures and the Jarque-Bera / Mann-Whitney tests.
//! - [`io`] / [`synth`]: file formats and seeded synthetic ground truth.

pub mod error;
pub mod extract;
pub mod geom;
pub mod io;
pub mod kernels;
pub mod links;
pub mod metrics;
pub mod optim;
pub mod quad;
pub mod reconstruct;
pub mod segmentation;
pub mod special;
pub mod synth;
pub mod trajectory;

pub use error::KttError;
pub use extract::{compare_configs, evaluate_plan, extract, ExtractionResult, ExtractorConfig};
pub use geom::Point;
pub use io::{plan_to_document, read_plan, write_plan, PlanDocument};
pub use kernels::{
    integrate_lobe, moments_to_params, numeric_moments, params_to_moments, KernelKind,
    KernelParams, KernelShape, Moments,
};
pub use links::{fit_g1, fresnel, make_arc, ClothoidSegment, LinkKind, LinkSpec};
pub use metrics::{jarque_bera, mann_whitney_u, ReconstructionReport, TestResult};
pub use special::normal_cdf;
pub use synth::{generate_synthetic, SynthSpec};
pub use reconstruct::{
    reconstruct_speed, reconstruct_trajectory, ActionPlan, AngleMode, Stroke,
};
pub use trajectory::{resample_uniform, speed_profile, Sample, SpeedProfile, Trajectory};
