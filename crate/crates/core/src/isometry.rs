//! First-order infinitesimal isometries through their `(a, b)` profiles.
//!
//! On a developable chart the normal component of any `W^{2,2}` displacement
//! with vanishing symmetrized gradient is affine along the rulings,
//! `V.n = a(t) + s b(t)`, and conversely every such pair with finite Sobolev
//! integrals `J1`, `J2` lifts to an isometry. This module builds the lift,
//! extracts `(a, b)` back by per-ruling least squares, evaluates the two
//! integrals and smooths profiles for the density construction.

use crate::calculus::{self, SymFormField};
use crate::error::Result;
use crate::geometry::SurfaceChart;
use crate::profile::Profile;
use crate::symgrad::{self, Displacement, RecoverOptions};
use serde::Serialize;

/// Sampled `(a, b)` profiles on the chart's t-grid, with optional closed
/// forms kept for reconstruction elsewhere; the Sobolev integrands always
/// difference the samples.
#[derive(Debug, Clone)]
pub struct IsometryAB {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl IsometryAB {
    pub fn from_profiles(chart: &SurfaceChart, a: Profile, b: Profile) -> Self {
        IsometryAB {
            a: chart.grid.t_nodes.iter().map(|&t| a.eval(t)).collect(),
            b: chart.grid.t_nodes.iter().map(|&t| b.eval(t)).collect(),
        }
    }

    pub fn from_samples(a: Vec<f64>, b: Vec<f64>) -> Self {
        IsometryAB { a, b }
    }

    /// First and second centered-difference derivatives of both profiles on
    /// the t-grid. (The curvature derivative `kappa'` is the one quantity
    /// taken from the evaluator when closed-form; profile derivatives are
    /// always differenced.)
    pub fn derivatives(&self, chart: &SurfaceChart) -> ProfileDerivatives {
        let ht = chart.grid.ht();
        ProfileDerivatives {
            da: calculus::d1_1d(&self.a, ht),
            d2a: calculus::d2_1d(&self.a, ht),
            db: calculus::d1_1d(&self.b, ht),
            d2b: calculus::d2_1d(&self.b, ht),
        }
    }
}

pub struct ProfileDerivatives {
    pub da: Vec<f64>,
    pub d2a: Vec<f64>,
    pub db: Vec<f64>,
    pub d2b: Vec<f64>,
}

/// Result of assembling a first-order isometry from `(a, b)`.
pub struct BuiltIsometry {
    pub displacement: Displacement,
    /// `||sym grad V||_inf` of the assembled field, reassembled from samples.
    pub residual: f64,
}

/// Lift `(a, b)` to a displacement: the normal part is `a + s b` and the
/// tangential part solves `sym grad V' = (a + s b) [a_ij]`.
pub fn build_v_from_ab(chart: &SurfaceChart, ab: &IsometryAB) -> Result<BuiltIsometry> {
    let n = chart.grid.len();
    let mut v3 = vec![0.0; n];
    for it in 0..chart.grid.nt {
        for is in 0..chart.grid.ns {
            let k = chart.grid.idx(it, is);
            v3[k] = ab.a[it] + chart.s[k] * ab.b[it];
        }
    }
    let e = SymFormField::from_fn(n, |k| {
        (
            v3[k] * chart.a.b11[k],
            v3[k] * chart.a.b12[k],
            v3[k] * chart.a.b22[k],
        )
    });
    let (w_prime, grads, _omega) = symgrad::recover_tangential(chart, &e, &RecoverOptions::default())?;
    let displacement = Displacement {
        w_prime,
        w3: v3,
        grad_w_prime: Some(grads),
        grad_w3: None,
    };
    let residual = displacement.sym_grad_reassembled(chart).norm_inf();
    Ok(BuiltIsometry {
        displacement,
        residual,
    })
}

/// Per-ruling least-squares fit of the normal component by `a(t) + s b(t)`.
/// The maximum fit residual diagnoses membership: it vanishes exactly when
/// the normal part has the affine-in-s structure.
pub fn extract_ab(chart: &SurfaceChart, v3: &[f64]) -> (IsometryAB, f64) {
    let grid = &chart.grid;
    let mut a = vec![0.0; grid.nt];
    let mut b = vec![0.0; grid.nt];
    let mut residual = 0.0f64;
    for it in 0..grid.nt {
        let (mut ss, mut sss, mut sy, mut ssy) = (0.0, 0.0, 0.0, 0.0);
        let count = grid.ns as f64;
        for is in 0..grid.ns {
            let k = grid.idx(it, is);
            let s = chart.s[k];
            ss += s;
            sss += s * s;
            sy += v3[k];
            ssy += s * v3[k];
        }
        let det = count * sss - ss * ss;
        let bt = (count * ssy - ss * sy) / det;
        let at = (sy - bt * ss) / count;
        a[it] = at;
        b[it] = bt;
        for is in 0..grid.ns {
            let k = grid.idx(it, is);
            residual = residual.max((v3[k] - at - bt * chart.s[k]).abs());
        }
    }
    (IsometryAB::from_samples(a, b), residual)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SobolevIntegrals {
    pub j1: f64,
    pub j2: f64,
}

/// The two weighted Sobolev integrals of `(a, b)`:
/// `J1 = int (b' + kappa (a' + s b')/(1 - s kappa))^2 / (1 - s kappa)` and
/// `J2 = int (a'' + s b'' - kappa (1 - s kappa) b
///            + s kappa' (a' + s b')/(1 - s kappa))^2 / (1 - s kappa)^3`.
pub fn sobolev_j(chart: &SurfaceChart, ab: &IsometryAB) -> SobolevIntegrals {
    let d = ab.derivatives(chart);
    let grid = &chart.grid;
    let n = grid.len();
    let mut f1 = vec![0.0; n];
    let mut f2 = vec![0.0; n];
    for it in 0..grid.nt {
        let kap = chart.kappa_t[it];
        let dkap = chart.dkappa_t[it];
        for is in 0..grid.ns {
            let k = grid.idx(it, is);
            let s = chart.s[k];
            let oms = chart.one_minus_skappa[k];
            let slope = d.da[it] + s * d.db[it];
            let g1 = d.db[it] + kap * slope / oms;
            f1[k] = g1 * g1;
            let g2 = d.d2a[it] + s * d.d2b[it] - kap * oms * ab.b[it] + s * dkap * slope / oms;
            f2[k] = g2 * g2;
        }
    }
    SobolevIntegrals {
        j1: calculus::integrate_m(chart, &f1, calculus::MWeight::InvJacobian),
        j2: calculus::integrate_m(chart, &f2, calculus::MWeight::InvJacobianCubed),
    }
}

/// Mollify both profiles; the constructive step of the smooth-density
/// approximation. Closed forms are dropped since the output is sampled.
pub fn smooth_ab(chart: &SurfaceChart, ab: &IsometryAB, width: f64) -> Result<IsometryAB> {
    let t_max = chart.spec.t_max;
    Ok(IsometryAB::from_samples(
        calculus::mollify(&ab.a, t_max, width)?,
        calculus::mollify(&ab.b, t_max, width)?,
    ))
}

/// Numerical membership tolerance for the isometry space, `10 h^2` in the
/// mean grid spacing.
pub fn membership_tolerance(chart: &SurfaceChart) -> f64 {
    let h = chart.mean_spacing();
    10.0 * h * h
}
