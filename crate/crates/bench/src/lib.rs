//! Shared fixtures for the pipeline benchmarks.

use devsurf::calculus::Grid2D;
use devsurf::geometry::{build_chart, integrate_darboux, CurveSpec, SurfaceChart};
use devsurf::profile::Profile;

/// Variable-curvature strip used by all benchmarks.
pub fn bench_chart(nt: usize, ns: usize) -> SurfaceChart {
    let spec = CurveSpec::new(
        2.0 * std::f64::consts::PI,
        Profile::Sin {
            amp: 0.3,
            omega: 1.0,
            phase: 0.0,
        },
        Profile::Sum(vec![
            Profile::Const(1.0),
            Profile::Cos {
                amp: 0.2,
                omega: 1.0,
                phase: 0.0,
            },
        ]),
        Profile::Const(0.5),
        Profile::Const(0.5),
        None,
    )
    .unwrap();
    let grid = Grid2D::new(spec.t_max, nt, ns).unwrap();
    let frame = integrate_darboux(&spec, nt).unwrap();
    build_chart(&spec, &frame, grid).unwrap()
}

/// Half-turn cylinder where the first-harmonic profile is not rigid.
pub fn half_cylinder(nt: usize, ns: usize) -> SurfaceChart {
    let spec = CurveSpec::new(
        2.0 * std::f64::consts::PI,
        Profile::Const(0.0),
        Profile::Const(0.5),
        Profile::Const(0.5),
        Profile::Const(0.5),
        Some(0.05),
    )
    .unwrap();
    let grid = Grid2D::new(spec.t_max, nt, ns).unwrap();
    let frame = integrate_darboux(&spec, nt).unwrap();
    build_chart(&spec, &frame, grid).unwrap()
}
