//! Matching a first-order isometry to arbitrary order.
//!
//! Starting from `w_1 = V`, each level solves
//! `sym grad w_i = -1/2 sum_{p=1}^{i-1} sym((grad w_p)^T grad w_{i-p})`,
//! cancelling the measured metric change of `id + sum eps^j w_j` order by
//! order. Because the right-hand sides are built from the same assembled
//! gradient fields that the defect evaluation uses, the cancellation holds at
//! the discrete level to rounding, and the measured defect is a clean
//! `O(eps^{N+1})` regardless of grid resolution.

use crate::calculus::SymFormField;
use crate::error::{Error, Result};
use crate::geometry::SurfaceChart;
use crate::isometry;
use crate::symgrad::{self, AmbientJet, Displacement, RecoverOptions};
use nalgebra::{Matrix2, Matrix3x2};
use rayon::prelude::*;
use serde::Serialize;

/// One correction level: the chart-coordinate displacement and its assembled
/// ambient jet.
pub struct Correction {
    pub displacement: Displacement,
    pub jet: AmbientJet,
}

/// Corrections `w_1 = V, w_2, ..., w_N` with an evaluator for
/// `u_eps = id + sum eps^j w_j`.
pub struct MatchedFamily {
    pub order: usize,
    pub corrections: Vec<Correction>,
}

impl MatchedFamily {
    /// Gradient of the composed deformation at every node,
    /// `grad u + sum eps^j G_j`.
    pub fn gradient_field(&self, chart: &SurfaceChart, eps: f64) -> Vec<Matrix3x2<f64>> {
        let n = chart.grid.len();
        let mut out = chart.grad_u.clone();
        let mut scale = 1.0;
        for c in &self.corrections {
            scale *= eps;
            for k in 0..n {
                out[k] += scale * c.jet.grad[k];
            }
        }
        out
    }

    /// Values of `u_eps` at every node.
    pub fn values(&self, chart: &SurfaceChart, eps: f64) -> Vec<nalgebra::Vector3<f64>> {
        let n = chart.grid.len();
        let mut out = chart.u.clone();
        let mut scale = 1.0;
        for c in &self.corrections {
            scale *= eps;
            for k in 0..n {
                out[k] += scale * c.jet.values[k];
            }
        }
        out
    }
}

/// `B = sym((grad p)^T grad q)` in chart coordinates together with the
/// reduced source from the second-derivative cancellation formula.
pub fn quadratic_source(
    chart: &SurfaceChart,
    p: &AmbientJet,
    q: &AmbientJet,
) -> (SymFormField, Vec<f64>) {
    symgrad::gradient_pair_source(chart, p, q)
}

/// Iteratively append corrections so the family is an N-th order isometry.
pub fn match_to_order(
    chart: &SurfaceChart,
    v: Displacement,
    order: usize,
) -> Result<MatchedFamily> {
    let tolerance = isometry::membership_tolerance(chart);
    let residual = v.sym_grad_reassembled(chart).norm_inf();
    if residual > tolerance {
        return Err(Error::NotAnIsometry {
            residual,
            tolerance,
        });
    }
    if order < 1 {
        return Err(Error::Config("matching order must be at least 1".into()));
    }
    let jet = v.ambient_jet(chart);
    let mut family = MatchedFamily {
        order,
        corrections: vec![Correction {
            displacement: v,
            jet,
        }],
    };
    let n = chart.grid.len();
    for level in 2..=order {
        let mut b = SymFormField::zeros(n);
        let mut theta = vec![0.0; n];
        for p in 1..level {
            let (bpq, tpq) = quadratic_source(
                chart,
                &family.corrections[p - 1].jet,
                &family.corrections[level - p - 1].jet,
            );
            b.axpy(-0.5, &bpq);
            for k in 0..n {
                theta[k] -= 0.5 * tpq[k];
            }
        }
        let (displacement, _report) =
            symgrad::solve_symgrad_with(chart, &b, Some(&theta), &RecoverOptions::default())?;
        let jet = displacement.ambient_jet(chart);
        family.corrections.push(Correction { displacement, jet });
    }
    Ok(family)
}

/// Max-norm metric defect `||(grad u_eps)^T grad u_eps - Id||` over nodes.
pub fn metric_defect(chart: &SurfaceChart, family: &MatchedFamily, eps: f64) -> f64 {
    metric_defect_of_gradients(&family.gradient_field(chart, eps))
}

/// Defect of an explicitly assembled gradient field; exposed so test maps
/// can be injected directly.
pub fn metric_defect_of_gradients(grads: &[Matrix3x2<f64>]) -> f64 {
    grads
        .iter()
        .map(|g| {
            let m = g.transpose() * g - Matrix2::identity();
            m.abs().max()
        })
        .fold(0.0, f64::max)
}

/// Defects over an epsilon sweep, evaluated concurrently.
pub fn defect_sweep(chart: &SurfaceChart, family: &MatchedFamily, eps: &[f64]) -> Vec<(f64, f64)> {
    eps.par_iter()
        .map(|&e| (e, metric_defect(chart, family, e)))
        .collect()
}

/// Least-squares slope of `log(defect)` against `log(eps)`.
#[derive(Debug, Clone, Serialize)]
pub struct OrderEstimate {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute log-residual of the fit.
    pub fit_residual: f64,
    pub points_used: usize,
    /// Sweep points dropped for sitting below the numerical floor.
    pub excluded: Vec<f64>,
}

pub const DEFECT_FLOOR: f64 = 1e-13;

pub fn estimate_order(points: &[(f64, f64)]) -> Result<OrderEstimate> {
    let mut excluded = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(eps, defect) in points {
        if defect < DEFECT_FLOOR {
            excluded.push(eps);
        } else {
            xs.push(eps.ln());
            ys.push(defect.ln());
        }
    }
    if xs.len() < 2 {
        let min = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        return Err(Error::BelowFloor(min));
    }
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let fit_residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - slope * x - intercept).abs())
        .fold(0.0, f64::max);
    Ok(OrderEstimate {
        slope,
        intercept,
        fit_residual,
        points_used: xs.len(),
        excluded,
    })
}
