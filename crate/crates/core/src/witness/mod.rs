//! The growth-rate witness family: finitely many lacunary series of zonal
//! polynomials whose moduli jointly dominate `1 / mu(|z|)`.
//!
//! * [`params`]: selection of `A`, `p`, `M` and the radius/degree schedules.
//! * [`family`]: the separated point systems per level and the series built
//!   on their color classes.
//! * [`certify`]: certified lower bounds and the sampled growth check.

pub mod certify;
pub mod family;
pub mod params;

pub use certify::{
    certified_lower_bound, direct_abs, series_lower_bound, verify_growth, BallPoint, CertifiedBound, GrowthReport,
    ShellRow,
};
pub use family::{build_witness_family, BuildOptions, FamilyKind, Level, LevelContent, WitnessFamily};
pub use params::{
    delta_schedule, estimate_m, q_degree, select_a, select_p, tau_power, Constants, Mode, PConstraints, TailPolicy,
    WitnessParams,
};
