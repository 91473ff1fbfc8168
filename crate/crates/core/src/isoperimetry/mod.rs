//! Isoperimetric profile of a conformal metric: candidate regions, the cap
//! sweep upper bound, constant-curvature refinement, and the comparison with
//! the model sphere.

mod flow;
mod functional;
mod region;
mod sweep;

pub use flow::{curve_flow_refine, refine_with, FlowOptions, FlowOutcome};
pub use functional::{
    check_levy_gromov, check_levy_gromov_with, lg_functional, model_profile, profile, LgEntry, LgReport,
    HYPOTHESIS_TOL, MARGIN_TOL,
};
pub use region::{cap_measures, left_fraction, measure, region_measures, Region, RegionKind, CAP_VERTICES};
pub use sweep::{
    cap_centers, cap_sweep, cap_sweep_with, solve_cap, ProfileCurve, ProfileSample, SolvedCap, SweepFailure,
    APERTURE_TOL, CENTER_STRIDE,
};
