//! The linearized isometry equation `sym grad w = B` on a developable chart.
//!
//! Splitting `w = w_tan + (w.n) n` and pulling back to chart coordinates, the
//! equation reads `[B_ij] = sym grad w' - w3 [a_ij]`. Its solvable part is a
//! second-order ODE in the ruling coordinate for the normal component `w3`,
//! after which the tangential part `w'` is recovered by classical path
//! integration of `grad w' = E + omega P`, `E = [B_ij] + w3 [a_ij]`.
//!
//! Displacements produced here carry their gradient fields as constructed
//! during the solve (`E + omega P` for `w'`), not as re-differenced samples.
//! The reassembled residual reported alongside uses an independent
//! differencing pass, so it measures the solver's actual consistency order.

use crate::calculus::{self, SymFormField};
use crate::error::{Error, Result};
use crate::geometry::SurfaceChart;
use nalgebra::{Matrix2, Matrix3x2, Vector2, Vector3};
use serde::Serialize;

/// Displacement field split as tangential chart components plus normal scalar.
#[derive(Debug, Clone)]
pub struct Displacement {
    /// Tangential component in chart coordinates, `w'_j = w_tan . d_j u`.
    pub w_prime: Vec<Vector2<f64>>,
    /// Normal component `w3 = w . n`.
    pub w3: Vec<f64>,
    /// Constructed gradient `[(j,i)] = d_i w'_j`, when produced by the solver.
    pub grad_w_prime: Option<Vec<Matrix2<f64>>>,
    /// Constructed gradient of `w3`.
    pub grad_w3: Option<Vec<Vector2<f64>>>,
}

impl Displacement {
    pub fn zeros(n: usize) -> Self {
        Displacement {
            w_prime: vec![Vector2::zeros(); n],
            w3: vec![0.0; n],
            grad_w_prime: None,
            grad_w3: None,
        }
    }

    /// Sample an ambient field, keeping only the values.
    pub fn from_ambient(chart: &SurfaceChart, values: &[Vector3<f64>]) -> Self {
        let n = chart.grid.len();
        let mut w_prime = vec![Vector2::zeros(); n];
        let mut w3 = vec![0.0; n];
        for k in 0..n {
            let g = chart.grad_u[k];
            w_prime[k] = Vector2::new(values[k].dot(&g.column(0)), values[k].dot(&g.column(1)));
            w3[k] = values[k].dot(&chart.normal[k]);
        }
        Displacement {
            w_prime,
            w3,
            grad_w_prime: None,
            grad_w3: None,
        }
    }

    /// Sample an ambient field together with its exact Jacobian. The cached
    /// chart gradients are chosen so that the ambient jet reassembles the
    /// given Jacobian to rounding.
    pub fn from_ambient_with_jacobian(
        chart: &SurfaceChart,
        values: &[Vector3<f64>],
        jacobians: &[Matrix3x2<f64>],
    ) -> Self {
        let mut disp = Displacement::from_ambient(chart, values);
        let n = chart.grid.len();
        let mut gp = vec![Matrix2::zeros(); n];
        let mut g3 = vec![Vector2::zeros(); n];
        for k in 0..n {
            let gu = chart.grad_u[k];
            let a = chart.a.at(k);
            let jw = jacobians[k];
            for i in 0..2 {
                let col = jw.column(i);
                for comp in 0..2 {
                    gp[k][(comp, i)] =
                        col.dot(&gu.column(comp)) + disp.w3[k] * a[(i, comp)];
                }
                g3[k][i] = col.dot(&chart.normal[k])
                    - a[(i, 0)] * disp.w_prime[k].x
                    - a[(i, 1)] * disp.w_prime[k].y;
            }
        }
        disp.grad_w_prime = Some(gp);
        disp.grad_w3 = Some(g3);
        disp
    }

    /// Cached or re-differenced gradient of `w'`.
    pub fn grad_w_prime(&self, chart: &SurfaceChart) -> Vec<Matrix2<f64>> {
        if let Some(g) = &self.grad_w_prime {
            return g.clone();
        }
        let c1: Vec<f64> = self.w_prime.iter().map(|v| v.x).collect();
        let c2: Vec<f64> = self.w_prime.iter().map(|v| v.y).collect();
        let g1 = calculus::grad_x(chart, &c1);
        let g2 = calculus::grad_x(chart, &c2);
        (0..self.w_prime.len())
            .map(|k| Matrix2::new(g1[k].x, g1[k].y, g2[k].x, g2[k].y))
            .collect()
    }

    pub fn grad_w3(&self, chart: &SurfaceChart) -> Vec<Vector2<f64>> {
        if let Some(g) = &self.grad_w3 {
            return g.clone();
        }
        calculus::grad_x(chart, &self.w3)
    }

    /// `sym grad w` as a form on the surface, reassembled from the samples by
    /// an independent differencing pass: `sym D(w') - w3 [a_ij]`.
    pub fn sym_grad_reassembled(&self, chart: &SurfaceChart) -> SymFormField {
        let c1: Vec<f64> = self.w_prime.iter().map(|v| v.x).collect();
        let c2: Vec<f64> = self.w_prime.iter().map(|v| v.y).collect();
        let g1 = calculus::grad_x(chart, &c1);
        let g2 = calculus::grad_x(chart, &c2);
        SymFormField::from_fn(chart.grid.len(), |k| {
            (
                g1[k].x - self.w3[k] * chart.a.b11[k],
                0.5 * (g1[k].y + g2[k].x) - self.w3[k] * chart.a.b12[k],
                g2[k].y - self.w3[k] * chart.a.b22[k],
            )
        })
    }

    /// Ambient 3-vector values `w = (grad u) w' + w3 n`.
    pub fn ambient_values(&self, chart: &SurfaceChart) -> Vec<Vector3<f64>> {
        (0..self.w_prime.len())
            .map(|k| chart.grad_u[k] * self.w_prime[k] + self.w3[k] * chart.normal[k])
            .collect()
    }

    /// Full first- and second-derivative data of the ambient field, assembled
    /// from the chart-coordinate data and the closed-form frame.
    pub fn ambient_jet(&self, chart: &SurfaceChart) -> AmbientJet {
        let n = chart.grid.len();
        let gp = self.grad_w_prime(chart);
        let g3 = self.grad_w3(chart);

        // Tangential and normal coefficient fields of the ambient gradient.
        let mut c = vec![Matrix2::zeros(); n]; // c[(comp, i)] = d_i w'_comp - w3 a_{i comp}
        let mut nrow = vec![Vector2::zeros(); n]; // nrow[i] = d_i w3 + sum_k a_{ik} w'_k
        for k in 0..n {
            let a = chart.a.at(k);
            for i in 0..2 {
                for comp in 0..2 {
                    c[k][(comp, i)] = gp[k][(comp, i)] - self.w3[k] * a[(i, comp)];
                }
                nrow[k][i] =
                    g3[k][i] + a[(i, 0)] * self.w_prime[k].x + a[(i, 1)] * self.w_prime[k].y;
            }
        }

        let values = self.ambient_values(chart);
        let grad: Vec<Matrix3x2<f64>> = (0..n)
            .map(|k| {
                let gu = chart.grad_u[k];
                let mut g = gu * c[k];
                for i in 0..2 {
                    g.set_column(i, &(g.column(i) + nrow[k][i] * chart.normal[k]));
                }
                g
            })
            .collect();

        // Second derivatives: differentiate the coefficient fields once more
        // and add the frame curvature terms.
        let field = |f: &dyn Fn(usize) -> f64| -> Vec<f64> { (0..n).map(f).collect() };
        let dc00 = calculus::grad_x(chart, &field(&|k| c[k][(0, 0)]));
        let dc01 = calculus::grad_x(chart, &field(&|k| c[k][(0, 1)]));
        let dc10 = calculus::grad_x(chart, &field(&|k| c[k][(1, 0)]));
        let dc11 = calculus::grad_x(chart, &field(&|k| c[k][(1, 1)]));
        let dn0 = calculus::grad_x(chart, &field(&|k| nrow[k].x));
        let dn1 = calculus::grad_x(chart, &field(&|k| nrow[k].y));

        let mut hess11 = vec![Vector3::zeros(); n];
        let mut hess12 = vec![Vector3::zeros(); n];
        let mut hess22 = vec![Vector3::zeros(); n];
        for k in 0..n {
            let gu = chart.grad_u[k];
            let nv = chart.normal[k];
            let a = chart.a.at(k);
            let dcol = |i: usize, j: usize| -> Vector3<f64> {
                // d_j of ambient gradient column i.
                let dc_ji = [
                    match i {
                        0 => dc00[k][j],
                        _ => dc01[k][j],
                    },
                    match i {
                        0 => dc10[k][j],
                        _ => dc11[k][j],
                    },
                ];
                let dn_ji = match i {
                    0 => dn0[k][j],
                    _ => dn1[k][j],
                };
                let mut out = Vector3::zeros();
                for comp in 0..2 {
                    out += gu.column(comp) * (dc_ji[comp] - nrow[k][i] * a[(j, comp)]);
                }
                out + nv * (a[(j, 0)] * c[k][(0, i)] + a[(j, 1)] * c[k][(1, i)] + dn_ji)
            };
            hess11[k] = dcol(0, 0);
            hess22[k] = dcol(1, 1);
            hess12[k] = 0.5 * (dcol(0, 1) + dcol(1, 0));
        }

        AmbientJet {
            values,
            grad,
            hess11,
            hess12,
            hess22,
        }
    }

    pub fn axpy(&mut self, alpha: f64, other: &Displacement) {
        for k in 0..self.w_prime.len() {
            self.w_prime[k] += alpha * other.w_prime[k];
            self.w3[k] += alpha * other.w3[k];
        }
        self.grad_w_prime = match (self.grad_w_prime.take(), &other.grad_w_prime) {
            (Some(mut a), Some(b)) => {
                for k in 0..a.len() {
                    a[k] += alpha * b[k];
                }
                Some(a)
            }
            _ => None,
        };
        self.grad_w3 = match (self.grad_w3.take(), &other.grad_w3) {
            (Some(mut a), Some(b)) => {
                for k in 0..a.len() {
                    a[k] += alpha * b[k];
                }
                Some(a)
            }
            _ => None,
        };
    }

    pub fn norm_inf(&self) -> f64 {
        let mut m = 0.0f64;
        for k in 0..self.w_prime.len() {
            m = m.max(self.w_prime[k].amax()).max(self.w3[k].abs());
        }
        m
    }
}

/// Values, first and second x-derivatives of an ambient 3-vector field.
pub struct AmbientJet {
    pub values: Vec<Vector3<f64>>,
    pub grad: Vec<Matrix3x2<f64>>,
    pub hess11: Vec<Vector3<f64>>,
    pub hess12: Vec<Vector3<f64>>,
    pub hess22: Vec<Vector3<f64>>,
}

impl AmbientJet {
    /// The chart itself as the zeroth-order deformation: values `u`, gradient
    /// `grad u`, second derivatives `a_ij n`.
    pub fn identity(chart: &SurfaceChart) -> Self {
        let n = chart.grid.len();
        AmbientJet {
            values: chart.u.clone(),
            grad: chart.grad_u.clone(),
            hess11: (0..n).map(|k| chart.a.b11[k] * chart.normal[k]).collect(),
            hess12: (0..n).map(|k| chart.a.b12[k] * chart.normal[k]).collect(),
            hess22: (0..n).map(|k| chart.a.b22[k] * chart.normal[k]).collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Pullbacks

/// Pull back an ambient symmetric bilinear form given as a 3x3 matrix field:
/// `B_ij = (d_i u)^T M (d_j u)`.
pub fn pullback_matrix_form(
    chart: &SurfaceChart,
    m: &[nalgebra::Matrix3<f64>],
) -> SymFormField {
    SymFormField::from_fn(chart.grid.len(), |k| {
        let g = chart.grad_u[k];
        let c0 = g.column(0);
        let c1 = g.column(1);
        let m0 = m[k] * c0;
        let m1 = m[k] * c1;
        (
            c0.dot(&m0),
            0.5 * (c0.dot(&m1) + c1.dot(&m0)),
            c1.dot(&m1),
        )
    })
}

/// Pull back `B = sym((grad phi)^T (grad psi))` together with the reduced
/// source `theta`, using the cancellation formula that needs only second
/// derivatives of the two fields:
/// `theta = -(h11 phi . h22 psi + h22 phi . h11 psi - 2 h12 phi . h12 psi)`.
pub fn gradient_pair_source(
    chart: &SurfaceChart,
    phi: &AmbientJet,
    psi: &AmbientJet,
) -> (SymFormField, Vec<f64>) {
    let n = chart.grid.len();
    let b = SymFormField::from_fn(n, |k| {
        let gp = phi.grad[k];
        let gq = psi.grad[k];
        (
            gp.column(0).dot(&gq.column(0)),
            0.5 * (gp.column(0).dot(&gq.column(1)) + gp.column(1).dot(&gq.column(0))),
            gp.column(1).dot(&gq.column(1)),
        )
    });
    let theta: Vec<f64> = (0..n)
        .map(|k| {
            -(phi.hess11[k].dot(&psi.hess22[k]) + phi.hess22[k].dot(&psi.hess11[k])
                - 2.0 * phi.hess12[k].dot(&psi.hess12[k]))
        })
        .collect();
    (b, theta)
}

// ---------------------------------------------------------------------------
// The three solver stages

/// Integrate `dss (w3 o Phi) = -(1 - s kappa)/kappa_n theta` twice along each
/// ruling, with value and s-derivative zero on the line `s = 0` (which lies
/// inside the strip because both half-widths are positive).
pub fn solve_w3(chart: &SurfaceChart, theta: &[f64]) -> Result<Vec<f64>> {
    let min_abs = chart
        .kappa_n_t
        .iter()
        .fold(f64::INFINITY, |m, &v| m.min(v.abs()));
    if min_abs < 1e-10 {
        return Err(Error::MeanCurvatureVanishes { min_abs });
    }
    let grid = &chart.grid;
    let mut w3 = vec![0.0; grid.len()];
    let mut rhs = vec![0.0; grid.ns];
    for it in 0..grid.nt {
        let hs = chart.width_t[it] * grid.hsigma();
        for is in 0..grid.ns {
            let k = grid.idx(it, is);
            rhs[is] = -chart.one_minus_skappa[k] / chart.kappa_n_t[it] * theta[k];
        }
        let g = calculus::cumint(&rhs, hs);
        let w = calculus::cumint(&g, hs);
        // Offset of s = 0 from the line start at s = -s^-.
        let x0 = chart.s_minus_t[it];
        let w0 = calculus::interp4(&w, hs, x0);
        let g0 = calculus::interp4(&g, hs, x0);
        for is in 0..grid.ns {
            let k = grid.idx(it, is);
            w3[k] = w[is] - w0 - g0 * chart.s[k];
        }
    }
    Ok(w3)
}

/// Which grid direction carries the spine of the integration tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathOrder {
    /// Spine along t at the center sigma-row, branches along sigma.
    TSpine,
    /// Spine along sigma at the center t-column, branches along t.
    SigmaSpine,
}

/// Options for [`recover_tangential`].
pub struct RecoverOptions {
    /// Compatibility threshold scale. The discrete `curl^T curl` of a
    /// compatible field is `O(h^2)`, not zero, so the threshold
    /// `scale * ||E||_inf` is relaxed by `(h / 0.0025)^2` on grids coarser
    /// than the reference spacing.
    pub compat_scale: f64,
    pub path_order: PathOrder,
}

impl Default for RecoverOptions {
    fn default() -> Self {
        RecoverOptions {
            compat_scale: 1e-4,
            path_order: PathOrder::TSpine,
        }
    }
}

/// Potential field from its x-gradient sampled on the grid, by cumulative
/// line integration along grid lines from the grid center.
fn integrate_potential(
    chart: &SurfaceChart,
    grad: &[Vector2<f64>],
    order: PathOrder,
) -> Vec<f64> {
    let grid = &chart.grid;
    let (nt, ns) = (grid.nt, grid.ns);
    let ic_t = nt / 2;
    let ic_s = ns / 2;
    let mut out = vec![0.0; grid.len()];
    match order {
        PathOrder::TSpine => {
            // Integrand along t at fixed sigma: grad . x_t.
            let mut line = vec![0.0; nt];
            for it in 0..nt {
                let k = grid.idx(it, ic_s);
                line[it] = grad[k].dot(&chart.jac_num[k].column(1));
            }
            let spine = calculus::cumint(&line, grid.ht());
            let mut col = vec![0.0; ns];
            for it in 0..nt {
                for is in 0..ns {
                    let k = grid.idx(it, is);
                    col[is] = grad[k].dot(&chart.jac_num[k].column(0));
                }
                let branch = calculus::cumint(&col, grid.hsigma());
                let base = spine[it] - spine[ic_t] - branch[ic_s];
                for is in 0..ns {
                    out[grid.idx(it, is)] = base + branch[is];
                }
            }
        }
        PathOrder::SigmaSpine => {
            let mut line = vec![0.0; ns];
            for is in 0..ns {
                let k = grid.idx(ic_t, is);
                line[is] = grad[k].dot(&chart.jac_num[k].column(0));
            }
            let spine = calculus::cumint(&line, grid.hsigma());
            let mut row = vec![0.0; nt];
            for is in 0..ns {
                for it in 0..nt {
                    let k = grid.idx(it, is);
                    row[it] = grad[k].dot(&chart.jac_num[k].column(1));
                }
                let branch = calculus::cumint(&row, grid.ht());
                let base = spine[is] - spine[ic_s] - branch[ic_t];
                for it in 0..nt {
                    out[grid.idx(it, is)] = base + branch[it];
                }
            }
        }
    }
    out
}

/// Recover `w'` with `sym grad w' = E` by two-stage path integration: the
/// rotation scalar `omega` from its explicit gradient, then `w'` from
/// `grad w' = E + omega P`. The gauge removes the mean rotation and the mean.
pub fn recover_tangential(
    chart: &SurfaceChart,
    e: &SymFormField,
    opts: &RecoverOptions,
) -> Result<(Vec<Vector2<f64>>, Vec<Matrix2<f64>>, Vec<f64>)> {
    let n = chart.grid.len();
    let theta_e = calculus::curl_t_curl(chart, e);
    let residual = theta_e.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let h = chart.mean_spacing();
    let threshold = opts.compat_scale * e.norm_inf() * (1.0f64).max((h / 0.0025).powi(2));
    if residual > threshold {
        return Err(Error::IncompatibleRhs {
            residual,
            threshold,
        });
    }

    // grad omega = (d1 E12 - d2 E11, d1 E22 - d2 E12)
    let g11 = calculus::grad_x(chart, &e.b11);
    let g12 = calculus::grad_x(chart, &e.b12);
    let g22 = calculus::grad_x(chart, &e.b22);
    let grad_omega: Vec<Vector2<f64>> = (0..n)
        .map(|k| Vector2::new(g12[k].x - g11[k].y, g22[k].x - g12[k].y))
        .collect();
    let mut omega = integrate_potential(chart, &grad_omega, opts.path_order);

    let grad_w1: Vec<Vector2<f64>> = (0..n)
        .map(|k| Vector2::new(e.b11[k], e.b12[k] - omega[k]))
        .collect();
    let grad_w2: Vec<Vector2<f64>> = (0..n)
        .map(|k| Vector2::new(e.b12[k] + omega[k], e.b22[k]))
        .collect();
    let w1 = integrate_potential(chart, &grad_w1, opts.path_order);
    let w2 = integrate_potential(chart, &grad_w2, opts.path_order);

    let mut w_prime: Vec<Vector2<f64>> = (0..n).map(|k| Vector2::new(w1[k], w2[k])).collect();
    let mut grads: Vec<Matrix2<f64>> = (0..n)
        .map(|k| {
            Matrix2::new(
                e.b11[k],
                e.b12[k] - omega[k],
                e.b12[k] + omega[k],
                e.b22[k],
            )
        })
        .collect();

    apply_gauge(chart, &mut w_prime, &mut grads, &mut omega);
    Ok((w_prime, grads, omega))
}

/// Remove the affine-rotation-plus-mean gauge: after this, the area-weighted
/// mean of the skew part of the (cached) gradient and the mean of `w'` both
/// vanish to rounding.
pub fn apply_gauge(
    chart: &SurfaceChart,
    w_prime: &mut [Vector2<f64>],
    grads: &mut [Matrix2<f64>],
    omega: &mut [f64],
) {
    let n = chart.grid.len();
    let mut omega_mean = 0.0;
    for it in 0..chart.grid.nt {
        for is in 0..chart.grid.ns {
            let k = chart.grid.idx(it, is);
            omega_mean += chart.weight_x(it, is) * omega[k];
        }
    }
    omega_mean /= chart.area_x;
    for k in 0..n {
        let p = chart.phi[k];
        w_prime[k] -= omega_mean * Vector2::new(-p.y, p.x);
        grads[k][(0, 1)] += omega_mean;
        grads[k][(1, 0)] -= omega_mean;
        omega[k] -= omega_mean;
    }
    let mut mean = Vector2::zeros();
    for it in 0..chart.grid.nt {
        for is in 0..chart.grid.ns {
            let k = chart.grid.idx(it, is);
            mean += chart.weight_x(it, is) * w_prime[k];
        }
    }
    mean /= chart.area_x;
    for v in w_prime.iter_mut() {
        *v -= mean;
    }
}

/// Residual summary of a solve.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolveReport {
    /// `||sym grad w - B||_inf` with the left side reassembled from samples.
    pub residual_inf: f64,
    pub b_norm_inf: f64,
    pub theta_norm_inf: f64,
    /// Observed `||w||_inf / ||B||_inf` (no constant is asserted).
    pub magnitude_ratio: f64,
}

/// Full pipeline: reduced source, normal ODE, tangential recovery.
pub fn solve_symgrad(chart: &SurfaceChart, b: &SymFormField) -> Result<(Displacement, SolveReport)> {
    solve_symgrad_with(chart, b, None, &RecoverOptions::default())
}

/// Variant accepting a precomputed reduced source (from the bilinear
/// cancellation formula) instead of differencing `B` twice.
pub fn solve_symgrad_with(
    chart: &SurfaceChart,
    b: &SymFormField,
    theta: Option<&[f64]>,
    opts: &RecoverOptions,
) -> Result<(Displacement, SolveReport)> {
    let n = chart.grid.len();
    let theta: Vec<f64> = match theta {
        Some(t) => t.to_vec(),
        None => calculus::curl_t_curl(chart, b),
    };
    let w3 = solve_w3(chart, &theta)?;
    let mut e = b.clone();
    for k in 0..n {
        e.b11[k] += w3[k] * chart.a.b11[k];
        e.b12[k] += w3[k] * chart.a.b12[k];
        e.b22[k] += w3[k] * chart.a.b22[k];
    }
    let (w_prime, grads, _omega) = recover_tangential(chart, &e, opts)?;
    let disp = Displacement {
        w_prime,
        w3,
        grad_w_prime: Some(grads),
        grad_w3: None,
    };

    let sym = disp.sym_grad_reassembled(chart);
    let mut residual_inf = 0.0f64;
    for k in 0..n {
        residual_inf = residual_inf
            .max((sym.b11[k] - b.b11[k]).abs())
            .max((sym.b12[k] - b.b12[k]).abs())
            .max((sym.b22[k] - b.b22[k]).abs());
    }
    let theta_norm_inf = theta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let b_norm_inf = b.norm_inf();
    let report = SolveReport {
        residual_inf,
        b_norm_inf,
        theta_norm_inf,
        magnitude_ratio: if b_norm_inf > 0.0 {
            disp.norm_inf() / b_norm_inf
        } else {
            0.0
        },
    };
    Ok((disp, report))
}

/// A manufactured right-hand side with known solution, usable on any chart:
/// a cubic-plus-gentle-trig tangential field and a ruling-quadratic normal
/// field (so the initial conditions at `s = 0` hold identically).
pub struct ManufacturedCase {
    pub b: SymFormField,
    pub w3_expected: Vec<f64>,
    /// Gauge-normalized expected tangential component.
    pub w_prime_expected: Vec<Vector2<f64>>,
}

pub fn manufactured_case(chart: &SurfaceChart) -> ManufacturedCase {
    let n = chart.grid.len();
    let delta = 0.01;
    let wp = |x: Vector2<f64>| {
        Vector2::new(
            0.3 * x.x * x.y + 0.1 * x.y.powi(3) - 0.05 * x.x * x.x
                + 0.2 * x.x
                + delta * x.x.sin() * x.y.cos(),
            -0.2 * x.x * x.y * x.y + 0.15 * x.y * x.y + 0.1 * x.y + delta * x.x.cos() * x.y.sin(),
        )
    };
    let jac = |x: Vector2<f64>| {
        Matrix2::new(
            0.3 * x.y - 0.1 * x.x + 0.2 + delta * x.x.cos() * x.y.cos(),
            0.3 * x.x + 0.3 * x.y * x.y - delta * x.x.sin() * x.y.sin(),
            -0.2 * x.y * x.y - delta * x.x.sin() * x.y.sin(),
            -0.4 * x.x * x.y + 0.3 * x.y + 0.1 + delta * x.x.cos() * x.y.cos(),
        )
    };

    let mut w3 = vec![0.0; n];
    for it in 0..chart.grid.nt {
        let t = chart.grid.t_nodes[it];
        for is in 0..chart.grid.ns {
            let k = chart.grid.idx(it, is);
            w3[k] = chart.s[k] * chart.s[k] * (0.4 + 0.05 * t);
        }
    }
    let b = SymFormField::from_fn(n, |k| {
        let j = jac(chart.phi[k]);
        (
            j[(0, 0)] - w3[k] * chart.a.b11[k],
            0.5 * (j[(0, 1)] + j[(1, 0)]) - w3[k] * chart.a.b12[k],
            j[(1, 1)] - w3[k] * chart.a.b22[k],
        )
    });

    let mut w_prime: Vec<Vector2<f64>> = (0..n).map(|k| wp(chart.phi[k])).collect();
    let mut grads: Vec<Matrix2<f64>> = (0..n).map(|k| jac(chart.phi[k])).collect();
    let mut omega: Vec<f64> = grads
        .iter()
        .map(|g| 0.5 * (g[(1, 0)] - g[(0, 1)]))
        .collect();
    apply_gauge(chart, &mut w_prime, &mut grads, &mut omega);

    ManufacturedCase {
        b,
        w3_expected: w3,
        w_prime_expected: w_prime,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::Grid2D;
    use crate::geometry::{build_chart, integrate_darboux, CurveSpec};
    use crate::profile::Profile;
    use nalgebra::Matrix3;

    fn cylinder_chart(nt: usize, ns: usize) -> SurfaceChart {
        let spec = CurveSpec::new(
            2.0 * std::f64::consts::PI,
            Profile::Const(0.0),
            Profile::Const(1.0),
            Profile::Const(0.5),
            Profile::Const(0.5),
            Some(0.05),
        )
        .unwrap();
        let grid = Grid2D::new(spec.t_max, nt, ns).unwrap();
        let frame = integrate_darboux(&spec, nt).unwrap();
        build_chart(&spec, &frame, grid).unwrap()
    }

    #[test]
    fn w3_zero_source() {
        let chart = cylinder_chart(32, 16);
        let theta = vec![0.0; chart.grid.len()];
        let w3 = solve_w3(&chart, &theta).unwrap();
        assert!(w3.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn w3_constant_source_on_cylinder() {
        // theta = c0 with kappa = 0, kappa_n = 1/R gives w3 = -c0 R s^2 / 2.
        let chart = cylinder_chart(32, 24);
        let c0 = 0.7;
        let theta = vec![c0; chart.grid.len()];
        let w3 = solve_w3(&chart, &theta).unwrap();
        for k in 0..chart.grid.len() {
            let s = chart.s[k];
            assert!(
                (w3[k] - (-c0 * s * s / 2.0)).abs() < 1e-12,
                "node {k}: {} vs {}",
                w3[k],
                -c0 * s * s / 2.0
            );
        }
    }

    #[test]
    fn vanishing_mean_curvature_is_rejected() {
        // A flat chart has kappa_n = 0; the ruling ODE is not solvable there.
        let spec = CurveSpec::new(
            1.0,
            Profile::Const(0.0),
            Profile::Const(0.0),
            Profile::Const(0.5),
            Profile::Const(0.5),
            Some(0.1),
        )
        .unwrap();
        let grid = Grid2D::new(spec.t_max, 16, 16).unwrap();
        let frame = integrate_darboux(&spec, 16).unwrap();
        let chart = build_chart(&spec, &frame, grid).unwrap();
        let theta = vec![1.0; chart.grid.len()];
        assert!(matches!(
            solve_w3(&chart, &theta),
            Err(Error::MeanCurvatureVanishes { .. })
        ));
    }

    #[test]
    fn recover_zero_field() {
        let chart = cylinder_chart(24, 16);
        let e = SymFormField::zeros(chart.grid.len());
        let (w, _, _) = recover_tangential(&chart, &e, &RecoverOptions::default()).unwrap();
        assert!(w.iter().all(|v| v.amax() < 1e-14));
    }

    #[test]
    fn recover_manufactured_cubic() {
        // On the cylinder the chart coordinates are x = (t, s), so a cubic
        // polynomial field is resolved exactly by the corrected-trapezoid
        // line integration.
        let chart = cylinder_chart(48, 24);
        let n = chart.grid.len();
        let p = |x: Vector2<f64>| 0.3 * x.x * x.x * x.y - 0.2 * x.y * x.y + 0.5 * x.x;
        let q = |x: Vector2<f64>| 0.1 * x.y * x.y * x.y + 0.4 * x.x * x.y - 0.7 * x.y;
        let dp = |x: Vector2<f64>| Vector2::new(0.6 * x.x * x.y + 0.5, 0.3 * x.x * x.x - 0.4 * x.y);
        let dq = |x: Vector2<f64>| Vector2::new(0.4 * x.y, 0.3 * x.y * x.y + 0.4 * x.x - 0.7);

        let e = SymFormField::from_fn(n, |k| {
            let x = chart.phi[k];
            (dp(x).x, 0.5 * (dp(x).y + dq(x).x), dq(x).y)
        });
        let (w, _, _) = recover_tangential(&chart, &e, &RecoverOptions::default()).unwrap();

        let mut expect: Vec<Vector2<f64>> =
            (0..n).map(|k| Vector2::new(p(chart.phi[k]), q(chart.phi[k]))).collect();
        let mut dummy_g = vec![Matrix2::zeros(); n];
        let mut omega: Vec<f64> = (0..n)
            .map(|k| {
                let x = chart.phi[k];
                0.5 * (dq(x).x - dp(x).y)
            })
            .collect();
        apply_gauge(&chart, &mut expect, &mut dummy_g, &mut omega);

        for k in 0..n {
            assert!(
                (w[k] - expect[k]).amax() < 1e-8,
                "node {k}: {:?} vs {:?}",
                w[k],
                expect[k]
            );
        }
    }

    #[test]
    fn solve_zero_rhs() {
        let chart = cylinder_chart(24, 16);
        let b = SymFormField::zeros(chart.grid.len());
        let (w, report) = solve_symgrad(&chart, &b).unwrap();
        assert!(w.norm_inf() < 1e-13);
        assert!(report.residual_inf < 1e-13);
    }

    #[test]
    fn pullback_first_fundamental_form() {
        let chart = cylinder_chart(16, 16);
        let m: Vec<Matrix3<f64>> = (0..chart.grid.len()).map(|_| Matrix3::identity()).collect();
        let b = pullback_matrix_form(&chart, &m);
        for k in 0..chart.grid.len() {
            assert!((b.b11[k] - 1.0).abs() < 1e-12);
            assert!(b.b12[k].abs() < 1e-12);
            assert!((b.b22[k] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn second_form_source_vanishes() {
        // B = Pi pulls back to -a_ij, and curl^T curl [a_ij] = 0.
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
        let grid = Grid2D::new(spec.t_max, 96, 48).unwrap();
        let frame = integrate_darboux(&spec, 96).unwrap();
        let chart = build_chart(&spec, &frame, grid).unwrap();
        let b = chart.second_form_pullback();
        let theta = calculus::curl_t_curl(&chart, &b);
        let max = theta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max < 5e-3, "theta residual {max}");
    }

    #[test]
    fn identity_pair_source_consistency() {
        // phi = psi = u: B_ij = delta_ij and the cancellation formula agrees
        // with curl^T curl of the pulled-back form to discretization order.
        let chart = cylinder_chart(64, 32);
        let jet = AmbientJet::identity(&chart);
        let (b, theta) = gradient_pair_source(&chart, &jet, &jet);
        for k in 0..chart.grid.len() {
            assert!((b.b11[k] - 1.0).abs() < 1e-12);
            assert!((b.b22[k] - 1.0).abs() < 1e-12);
            assert!(b.b12[k].abs() < 1e-12);
        }
        let theta_d = calculus::curl_t_curl(&chart, &b);
        for k in 0..chart.grid.len() {
            assert!((theta[k] - theta_d[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn solver_is_linear() {
        let chart = cylinder_chart(32, 24);
        let n = chart.grid.len();
        let b1 = SymFormField::from_fn(n, |k| {
            let x = chart.phi[k];
            (x.x.sin() * 0.1, 0.05 * x.y, 0.1 * x.y * x.y)
        });
        let b2 = SymFormField::from_fn(n, |k| {
            let x = chart.phi[k];
            (0.2 * x.y, 0.03 * x.x, 0.1 * (x.x * 0.5).cos())
        });
        let (alpha, beta) = (0.7, -1.3);
        let mut combo = SymFormField::zeros(n);
        combo.axpy(alpha, &b1);
        combo.axpy(beta, &b2);
        let (w1, _) = solve_symgrad(&chart, &b1).unwrap();
        let (w2, _) = solve_symgrad(&chart, &b2).unwrap();
        let (wc, _) = solve_symgrad(&chart, &combo).unwrap();
        let mut expect = Displacement::zeros(n);
        expect.axpy(alpha, &w1);
        expect.axpy(beta, &w2);
        for k in 0..n {
            assert!((wc.w_prime[k] - expect.w_prime[k]).amax() < 1e-10);
            assert!((wc.w3[k] - expect.w3[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn incompatible_rhs_detected() {
        let chart = cylinder_chart(128, 64);
        let n = chart.grid.len();
        // E with curl^T curl E = 2 (from B = diag(0, x1^2)) is genuinely
        // incompatible as a sym-gradient right-hand side.
        let e = SymFormField::from_fn(n, |k| {
            let x = chart.phi[k];
            (0.0, 0.0, x.x * x.x)
        });
        let err = recover_tangential(&chart, &e, &RecoverOptions::default());
        assert!(matches!(err, Err(Error::IncompatibleRhs { .. })));
    }

    #[test]
    fn curl_t_curl_quadratic_example() {
        // B = diag(0, x1^2) has theta = d11 B22 = 2 exactly.
        let chart = cylinder_chart(24, 16);
        let n = chart.grid.len();
        let b = SymFormField::from_fn(n, |k| {
            let x = chart.phi[k];
            (0.0, 0.0, x.x * x.x)
        });
        let theta = calculus::curl_t_curl(&chart, &b);
        for k in 0..n {
            assert!((theta[k] - 2.0).abs() < 1e-9, "{}", theta[k]);
        }
    }

    #[test]
    fn gauge_invariants_hold() {
        let chart = cylinder_chart(32, 24);
        let n = chart.grid.len();
        let b = SymFormField::from_fn(n, |k| {
            let x = chart.phi[k];
            (0.1 * x.x.sin(), 0.0, 0.05 * x.y)
        });
        let (w, _) = solve_symgrad(&chart, &b).unwrap();
        let grads = w.grad_w_prime.as_ref().unwrap();
        let mut skew_mean = 0.0;
        let mut mean = Vector2::zeros();
        for it in 0..chart.grid.nt {
            for is in 0..chart.grid.ns {
                let k = chart.grid.idx(it, is);
                let wx = chart.weight_x(it, is);
                skew_mean += wx * 0.5 * (grads[k][(1, 0)] - grads[k][(0, 1)]);
                mean += wx * w.w_prime[k];
            }
        }
        assert!((skew_mean / chart.area_x).abs() < 1e-12);
        assert!((mean / chart.area_x).amax() < 1e-12);
    }
}
