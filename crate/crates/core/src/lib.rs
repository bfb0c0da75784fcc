//! Numerical toolkit for developable surfaces built from one-dimensional
//! curvature data: isometric chart construction, the linearized isometry
//! equation `sym grad w = B`, higher-order matching of infinitesimal
//! isometries, and the limiting bending energy of thin shells evaluated
//! through an explicit recovery construction.

pub mod calculus;
pub mod config;
pub mod error;
pub mod gammalimit;
pub mod geometry;
pub mod io;
pub mod isometry;
pub mod matching;
pub mod profile;
pub mod symgrad;

pub use calculus::{Grid2D, SymFormField};
pub use config::SurfaceConfig;
pub use error::{Error, Result};
pub use gammalimit::{GammaSweepResult, MaterialModel, ShellSweep};
pub use geometry::{
    bending_energy, build_chart, check_admissibility, integrate_darboux, AdmissibilityReport,
    BendingEnergy, CurveSpec, DarbouxFrame, SurfaceChart,
};
pub use isometry::IsometryAB;
pub use matching::MatchedFamily;
pub use profile::Profile;
pub use symgrad::Displacement;
