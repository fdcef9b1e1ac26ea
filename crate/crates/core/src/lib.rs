//! Channel models and resource allocation for indoor optical wireless
//! links assisted by wall-mounted mirror arrays.
//!
//! The crate is organized bottom-up:
//!
//! * [`geometry`]: vectors, rotations, field-of-view tests, specular
//!   reflection on finite mirrors;
//! * [`scene`]: room layout, device configs, surface discretization,
//!   deterministic randomized placement;
//! * [`channel`]: line-of-sight, first/second-order diffuse, and mirror
//!   path gains, impulse responses, and the per-scenario gain tensor;
//! * [`link`]: received gain composition, SNR, and spectral efficiency;
//! * [`allocation`]: blockage sampling and the two-stage assignment of
//!   access points and mirrors to users under a log-rate utility.
//!
//! All numerics are generic over the [`float::Real`] scalar; the `f64`
//! aliases below are the usual entry point.

pub mod allocation;
pub mod channel;
pub mod float;
pub mod geometry;
pub mod link;
pub mod scene;

pub use float::Real;

/// `f64` vector, the default precision throughout.
pub type Vec3f = geometry::Vec3<f64>;
/// `f64` mirror pose.
pub type MirrorPosef = geometry::MirrorPose<f64>;
/// `f64` detector branch orientation.
pub type BranchOrientationf = geometry::BranchOrientation<f64>;
/// `f64` scenario configuration.
pub type ScenarioConfigf = scene::ScenarioConfig<f64>;
/// `f64` gain tensor.
pub type GainTensorf = channel::GainTensor<f64>;
/// `f64` compiled scene.
pub type CompiledScenef = channel::CompiledScene<f64>;
/// `f64` resource map.
pub type Assignmentf = allocation::Assignment<f64>;
/// `f64` assignment evaluation.
pub type UtilityReportf = allocation::UtilityReport<f64>;
