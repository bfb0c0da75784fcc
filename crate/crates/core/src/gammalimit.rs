//! The limiting bending functional and its certification by a recovery
//! construction.
//!
//! A stored-energy density `W` vanishing on rotations, frame indifferent and
//! with quadratic growth induces the forms `Q3(F) = D^2 W(Id)(F, F)` and
//! `Q2(p, F_tan) = min { Q3(F~) : (F~ - F)_tan = 0 }`. The limit functional
//! on first-order isometries is `I(V) = 1/24 int_S Q2(p, K_tan)` with
//! `K_tan = sym(grad(A n) - A Pi)_tan`. The recovery deformation
//! `u^h(p + t n) = u_eps(p) + t n_eps(p) + (t^2/2) eps d^h(p)` with
//! `eps = sqrt(e^h)/h` and a warp `d^h = 2 zeta` drives the rescaled shell
//! energies `(1/e^h) E^h` to `I(V)` along a thickness sweep.

use crate::calculus::{self, SymFormField};
use crate::error::{Error, Result};
use crate::geometry::SurfaceChart;
use crate::matching::MatchedFamily;
use nalgebra::{Matrix2, Matrix3, Matrix3x2, Vector3};
use rayon::prelude::*;
use serde::Serialize;

/// Isotropic stored-energy density
/// `W(F) = mu/4 |F^T F - Id|^2 + lambda/8 tr(F^T F - Id)^2`,
/// which vanishes on rotations, is frame indifferent, grows quadratically off
/// `SO(3)`, and has `Q3(F) = 2 mu |sym F|^2 + lambda (tr F)^2`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MaterialModel {
    pub mu: f64,
    pub lambda: f64,
}

impl Default for MaterialModel {
    fn default() -> Self {
        MaterialModel {
            mu: 1.0,
            lambda: 1.0,
        }
    }
}

impl MaterialModel {
    pub fn new(mu: f64, lambda: f64) -> Self {
        MaterialModel { mu, lambda }
    }

    pub fn energy_density(&self, f: &Matrix3<f64>) -> f64 {
        let k = f.transpose() * f - Matrix3::identity();
        self.mu / 4.0 * k.norm_squared() + self.lambda / 8.0 * k.trace() * k.trace()
    }

    pub fn q3(&self, f: &Matrix3<f64>) -> f64 {
        let s = 0.5 * (f + f.transpose());
        2.0 * self.mu * s.norm_squared() + self.lambda * f.trace() * f.trace()
    }

    fn q3_bilinear(&self, x: &Matrix3<f64>, y: &Matrix3<f64>) -> f64 {
        let sx = 0.5 * (x + x.transpose());
        let sy = 0.5 * (y + y.transpose());
        2.0 * self.mu * sx.dot(&sy) + self.lambda * x.trace() * y.trace()
    }

    /// Relax `Q3` over the components normal to `n`: returns
    /// `Q2 = min_c Q3(F + c (x) n + n (x) c)` and the minimizer `c`,
    /// from an exactly solved 3x3 positive-definite system.
    pub fn q2_and_minimizer(
        &self,
        normal: &Vector3<f64>,
        f_tan: &Matrix3<f64>,
    ) -> Result<(f64, Vector3<f64>)> {
        let lift = |c: Vector3<f64>| c * normal.transpose() + normal * c.transpose();
        let basis = [Vector3::x(), Vector3::y(), Vector3::z()];
        let mut sys = Matrix3::zeros();
        let mut rhs = Vector3::zeros();
        for i in 0..3 {
            let si = lift(basis[i]);
            rhs[i] = -self.q3_bilinear(f_tan, &si);
            for j in 0..3 {
                sys[(i, j)] = self.q3_bilinear(&si, &lift(basis[j]));
            }
        }
        let inv = sys.try_inverse().ok_or_else(|| {
            Error::DegenerateModel(format!(
                "normal relaxation system singular (mu = {}, lambda = {})",
                self.mu, self.lambda
            ))
        })?;
        let c = inv * rhs;
        let q2 = self.q3(&(f_tan + lift(c)));
        Ok((q2, c))
    }

    /// Closed form of the relaxed tangential form for this density:
    /// `2 mu |sym F_tan|^2 + (2 mu lambda / (2 mu + lambda)) (tr F_tan)^2`.
    pub fn q2_closed_form(&self, f_tan: &Matrix2<f64>) -> f64 {
        let s = 0.5 * (f_tan + f_tan.transpose());
        2.0 * self.mu * s.norm_squared()
            + 2.0 * self.mu * self.lambda / (2.0 * self.mu + self.lambda)
                * f_tan.trace()
                * f_tan.trace()
    }
}

/// Per-node skew matrices `A` with `d_tau V = A tau`, plus the largest
/// symmetric defect observed.
pub struct RotationField {
    pub a: Vec<Matrix3<f64>>,
    pub skew_defect: f64,
}

/// Assemble the infinitesimal rotation field of a displacement from its
/// ambient gradient columns; the normal column is fixed by skewness.
pub fn a_field(chart: &SurfaceChart, grad: &[Matrix3x2<f64>]) -> Result<RotationField> {
    let n = chart.grid.len();
    let mut a = Vec::with_capacity(n);
    let mut defect = 0.0f64;
    for k in 0..n {
        let gu = chart.grad_u[k];
        let nv = chart.normal[k];
        let d1 = grad[k].column(0);
        let d2 = grad[k].column(1);
        let s11 = d1.dot(&gu.column(0));
        let s22 = d2.dot(&gu.column(1));
        let s12 = 0.5 * (d1.dot(&gu.column(1)) + d2.dot(&gu.column(0)));
        defect = defect.max(s11.abs()).max(s22.abs()).max(s12.abs());
        let w1 = d2.dot(&nv);
        let w2 = -d1.dot(&nv);
        let w3 = 0.5 * (d1.dot(&gu.column(1)) - d2.dot(&gu.column(0)));
        let omega = w1 * gu.column(0) + w2 * gu.column(1) + w3 * nv;
        a.push(Matrix3::new(
            0.0, -omega.z, omega.y, //
            omega.z, 0.0, -omega.x, //
            -omega.y, omega.x, 0.0,
        ));
    }
    let tolerance = 10.0 * crate::isometry::membership_tolerance(chart);
    if defect > tolerance {
        return Err(Error::NotAnIsometry {
            residual: defect,
            tolerance,
        });
    }
    Ok(RotationField {
        a,
        skew_defect: defect,
    })
}

/// The limit functional together with the fields the recovery construction
/// reuses.
pub struct LimitEnergy {
    pub value: f64,
    /// Bending form `sym(grad(A n) - A Pi)_tan` in chart coordinates.
    pub k_tan: SymFormField,
    /// Warp direction `zeta = c(p, K_tan)` per node.
    pub zeta: Vec<Vector3<f64>>,
    pub rotation: RotationField,
}

/// Evaluate `I(V) = 1/24 int_S Q2(p, K_tan)`.
///
/// Both `grad(A n)` and `A Pi = A grad n` are differenced with the same
/// stencils, so adding a constant skew to `A` (a rigid shift of `V`) cancels
/// exactly and `I` is invariant to rounding.
pub fn limit_energy(
    chart: &SurfaceChart,
    grad_v: &[Matrix3x2<f64>],
    model: &MaterialModel,
) -> Result<LimitEnergy> {
    let n = chart.grid.len();
    let rotation = a_field(chart, grad_v)?;

    let an: Vec<Vector3<f64>> = (0..n).map(|k| rotation.a[k] * chart.normal[k]).collect();
    let grad_an = grad_vec3(chart, &an);
    let normals: Vec<Vector3<f64>> = chart.normal.clone();
    let grad_n = grad_vec3(chart, &normals);

    let mut k_tan = SymFormField::zeros(n);
    for k in 0..n {
        let gu = chart.grad_u[k];
        let col = |j: usize| grad_an[k].column(j) - rotation.a[k] * grad_n[k].column(j);
        let e11 = gu.column(0).dot(&col(0));
        let e22 = gu.column(1).dot(&col(1));
        let e12 = 0.5 * (gu.column(0).dot(&col(1)) + gu.column(1).dot(&col(0)));
        k_tan.b11[k] = e11;
        k_tan.b12[k] = e12;
        k_tan.b22[k] = e22;
    }

    let mut zeta = Vec::with_capacity(n);
    let mut value = 0.0;
    for it in 0..chart.grid.nt {
        for is in 0..chart.grid.ns {
            let k = chart.grid.idx(it, is);
            let lift = tangential_lift(chart, k, &k_tan);
            let (q2, c) = model.q2_and_minimizer(&chart.normal[k], &lift)?;
            zeta.push(c);
            value += chart.weight_x(it, is) * q2;
        }
    }
    value /= 24.0;

    Ok(LimitEnergy {
        value,
        k_tan,
        zeta,
        rotation,
    })
}

fn tangential_lift(chart: &SurfaceChart, k: usize, form: &SymFormField) -> Matrix3<f64> {
    let gu = chart.grad_u[k];
    let t1 = gu.column(0);
    let t2 = gu.column(1);
    form.b11[k] * t1 * t1.transpose()
        + form.b12[k] * (t1 * t2.transpose() + t2 * t1.transpose())
        + form.b22[k] * t2 * t2.transpose()
}

fn grad_vec3(chart: &SurfaceChart, f: &[Vector3<f64>]) -> Vec<Matrix3x2<f64>> {
    let n = f.len();
    let mut comps = Vec::with_capacity(3);
    for c in 0..3 {
        let field: Vec<f64> = (0..n).map(|k| f[k][c]).collect();
        comps.push(calculus::grad_x(chart, &field));
    }
    (0..n)
        .map(|k| {
            Matrix3x2::new(
                comps[0][k].x,
                comps[0][k].y,
                comps[1][k].x,
                comps[1][k].y,
                comps[2][k].x,
                comps[2][k].y,
            )
        })
        .collect()
}

/// Thickness sweep parameters with the energy-scaling rule `e^h = h^beta`.
#[derive(Debug, Clone, Serialize)]
pub struct ShellSweep {
    pub h_list: Vec<f64>,
    /// Reference thickness of the common domain.
    pub h0: f64,
    pub beta: f64,
}

impl ShellSweep {
    pub fn new(h_list: Vec<f64>, h0: f64, beta: f64) -> Result<Self> {
        if !(beta > 2.0 && beta < 4.0) {
            return Err(Error::Config(format!("beta must lie in (2, 4), got {beta}")));
        }
        if h_list.is_empty() || h_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("h list must be strictly decreasing".into()));
        }
        if !(h0 > 0.0) || h_list.iter().any(|&h| h > h0) {
            return Err(Error::Config("need 0 < h <= h0 for every h".into()));
        }
        Ok(ShellSweep { h_list, h0, beta })
    }

    pub fn e_h(&self, h: f64) -> f64 {
        h.powf(self.beta)
    }

    /// The matching order must satisfy `beta > beta_N = 2 + 2/N` so that
    /// `e^h = o(h^{beta_N})`.
    pub fn check_order(&self, order: usize) -> Result<()> {
        let beta_n = 2.0 + 2.0 / order as f64;
        if self.beta <= beta_n {
            return Err(Error::ScalingViolation {
                beta: self.beta,
                beta_n,
                order,
            });
        }
        Ok(())
    }
}

/// Precomputed recovery deformation for one thickness, evaluable at
/// `(node, t)` with `t` in the reference interval `(-h0/2, h0/2)`.
pub struct Recovery<'a> {
    chart: &'a SurfaceChart,
    pub h: f64,
    pub eps: f64,
    pub e_h: f64,
    pub h0: f64,
    u_eps: Vec<Vector3<f64>>,
    grad_u_eps: Vec<Matrix3x2<f64>>,
    n_eps: Vec<Vector3<f64>>,
    grad_n_eps: Vec<Matrix3x2<f64>>,
    d_h: &'a [Vector3<f64>],
    grad_d_h: &'a [Matrix3x2<f64>],
    /// `Pi` as a 2x2 matrix in chart coordinates, `-[a_ij]`.
    pi_mat: Vec<Matrix2<f64>>,
}

/// The warp field `d^h = 2 zeta` with its differenced gradient; independent
/// of `h`, so shared across a sweep.
pub struct WarpField {
    pub d: Vec<Vector3<f64>>,
    pub grad_d: Vec<Matrix3x2<f64>>,
}

impl WarpField {
    pub fn from_zeta(chart: &SurfaceChart, zeta: &[Vector3<f64>]) -> Self {
        let d: Vec<Vector3<f64>> = zeta.iter().map(|z| 2.0 * z).collect();
        let grad_d = grad_vec3(chart, &d);
        WarpField { d, grad_d }
    }
}

/// Build the recovery deformation for one thickness in the sweep.
pub fn recovery_deformation<'a>(
    chart: &'a SurfaceChart,
    family: &MatchedFamily,
    warp: &'a WarpField,
    sweep: &ShellSweep,
    h: f64,
) -> Result<Recovery<'a>> {
    sweep.check_order(family.order)?;
    let e_h = sweep.e_h(h);
    let eps = e_h.sqrt() / h;
    let n = chart.grid.len();

    let u_eps = family.values(chart, eps);
    let grad_u_eps = family.gradient_field(chart, eps);

    // Second derivatives of the composed deformation, for the exact normal
    // differentiation below.
    let mut hess11: Vec<Vector3<f64>> = (0..n).map(|k| chart.a.b11[k] * chart.normal[k]).collect();
    let mut hess12: Vec<Vector3<f64>> = (0..n).map(|k| chart.a.b12[k] * chart.normal[k]).collect();
    let mut hess22: Vec<Vector3<f64>> = (0..n).map(|k| chart.a.b22[k] * chart.normal[k]).collect();
    let mut scale = 1.0;
    for c in &family.corrections {
        scale *= eps;
        for k in 0..n {
            hess11[k] += scale * c.jet.hess11[k];
            hess12[k] += scale * c.jet.hess12[k];
            hess22[k] += scale * c.jet.hess22[k];
        }
    }

    // Unit normal of the deformed surface: exact normalized cross product of
    // the gradient columns, differentiated through the quotient rule.
    let mut n_eps = Vec::with_capacity(n);
    let mut grad_n_eps = Vec::with_capacity(n);
    for k in 0..n {
        let g1 = grad_u_eps[k].column(0).into_owned();
        let g2 = grad_u_eps[k].column(1).into_owned();
        let c = g1.cross(&g2);
        let rho = c.norm();
        let nv = c / rho;
        let dc1 = hess11[k].cross(&g2) + g1.cross(&hess12[k]);
        let dc2 = hess12[k].cross(&g2) + g1.cross(&hess22[k]);
        let proj = Matrix3::identity() - nv * nv.transpose();
        let dn1 = proj * dc1 / rho;
        let dn2 = proj * dc2 / rho;
        n_eps.push(nv);
        grad_n_eps.push(Matrix3x2::from_columns(&[dn1, dn2]));
    }

    let pi_mat: Vec<Matrix2<f64>> = (0..n).map(|k| -chart.a.at(k)).collect();

    let recovery = Recovery {
        chart,
        h,
        eps,
        e_h,
        h0: sweep.h0,
        u_eps,
        grad_u_eps,
        n_eps,
        grad_n_eps,
        d_h: &warp.d,
        grad_d_h: &warp.grad_d,
        pi_mat,
    };
    // The change of variables degenerates if Id + t Pi loses rank inside the
    // reference thickness.
    for k in 0..n {
        for t in [-0.5 * sweep.h0, 0.5 * sweep.h0] {
            let tt = t * h / sweep.h0;
            if (Matrix2::identity() + tt * recovery.pi_mat[k]).determinant() <= 0.0 {
                return Err(Error::ThicknessTooLarge { h, h0: sweep.h0 });
            }
        }
    }
    Ok(recovery)
}

impl<'a> Recovery<'a> {
    /// Rescaled deformation gradient `grad_h y^h(p + t n)` in the frame basis
    /// `(d_1 u, d_2 u, n)`, as a 3x3 matrix `[T | nu]`.
    pub fn gradient(&self, k: usize, t: f64) -> Matrix3<f64> {
        let tt = t * self.h / self.h0;
        let inv = (Matrix2::identity() + tt * self.pi_mat[k])
            .try_inverse()
            .expect("validated at construction");
        let m = self.grad_u_eps[k]
            + tt * self.grad_n_eps[k]
            + (0.5 * tt * tt * self.eps) * self.grad_d_h[k];
        let tang = m * inv;
        let nu = self.n_eps[k] + tt * self.eps * self.d_h[k];
        Matrix3::from_columns(&[tang.column(0).into(), tang.column(1).into(), nu])
    }

    /// `det(Id + (t h / h0) Pi)`, the through-thickness volume factor.
    pub fn volume_factor(&self, k: usize, t: f64) -> f64 {
        let tt = t * self.h / self.h0;
        (Matrix2::identity() + tt * self.pi_mat[k]).determinant()
    }

    /// Rescaled deformation value `y^h(p + t n)`.
    pub fn y_h(&self, k: usize, t: f64) -> Vector3<f64> {
        let tt = t * self.h / self.h0;
        self.u_eps[k] + tt * self.n_eps[k] + 0.5 * tt * tt * self.eps * self.d_h[k]
    }

    /// Scaled average displacement
    /// `V^h(p) = h/sqrt(e^h) avg_t (y^h(p + t n) - p)`.
    pub fn averaged_displacement(&self, k: usize) -> Vector3<f64> {
        let mut acc = Vector3::zeros();
        for (node, weight) in gauss_legendre_5(self.h0) {
            acc += weight * (self.y_h(k, node) - self.chart.u[k]);
        }
        acc *= 1.0 / self.h0;
        acc * self.h / self.e_h.sqrt()
    }
}

/// 5-point Gauss-Legendre rule on `(-h0/2, h0/2)`.
fn gauss_legendre_5(h0: f64) -> [(f64, f64); 5] {
    const X: [f64; 5] = [
        -0.906179845938664,
        -0.538469310105683,
        0.0,
        0.538469310105683,
        0.906179845938664,
    ];
    const W: [f64; 5] = [
        0.236926885056189,
        0.478628670499366,
        0.568888888888889,
        0.478628670499366,
        0.236926885056189,
    ];
    let mut out = [(0.0, 0.0); 5];
    for i in 0..5 {
        out[i] = (0.5 * h0 * X[i], 0.5 * h0 * W[i]);
    }
    out
}

/// Shell energy `E^h(u^h) = (1/h) int_{S^h} W(grad u^h)`, evaluated in the
/// rescaled variables with 5-point through-thickness quadrature. An optional
/// rotation pre-multiplies the deformation gradient (frame-indifference
/// checks).
pub fn shell_energy(
    recovery: &Recovery,
    model: &MaterialModel,
    pre_rotation: Option<&Matrix3<f64>>,
) -> f64 {
    let chart = recovery.chart;
    let quad = gauss_legendre_5(recovery.h0);
    let mut total = 0.0;
    for it in 0..chart.grid.nt {
        for is in 0..chart.grid.ns {
            let k = chart.grid.idx(it, is);
            let mut through = 0.0;
            for &(t, w) in &quad {
                let mut f = recovery.gradient(k, t);
                if let Some(r) = pre_rotation {
                    f = r * f;
                }
                through += w * model.energy_density(&f) * recovery.volume_factor(k, t);
            }
            total += chart.weight_x(it, is) * through / recovery.h0;
        }
    }
    total
}

/// One row of the Gamma-limit certification table.
#[derive(Debug, Clone, Serialize)]
pub struct GammaRow {
    pub h: f64,
    pub e_h: f64,
    pub eps: f64,
    pub energy: f64,
    /// `(1/e^h) E^h(u^h)`.
    pub ratio: f64,
    pub limit: f64,
    /// Relative gap, absolute when the limit sits below 1e-12.
    pub gap: f64,
    /// `||V^h - V||_inf / ||V||_inf` (absolute when `V = 0`).
    pub vh_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaSweepResult {
    pub limit: f64,
    pub rows: Vec<GammaRow>,
}

/// Run the thickness sweep: for each `h` build the recovery deformation,
/// evaluate the rescaled energy and the averaged displacement, and report
/// gaps against `I(V)`.
pub fn gamma_gap(
    chart: &SurfaceChart,
    family: &MatchedFamily,
    sweep: &ShellSweep,
    model: &MaterialModel,
) -> Result<GammaSweepResult> {
    sweep.check_order(family.order)?;
    let v_jet = &family.corrections[0].jet;
    let limit = limit_energy(chart, &v_jet.grad, model)?;
    let warp = WarpField::from_zeta(chart, &limit.zeta);
    let v_norm = v_jet
        .values
        .iter()
        .map(|v| v.amax())
        .fold(0.0f64, f64::max);

    let rows: Result<Vec<GammaRow>> = sweep
        .h_list
        .par_iter()
        .map(|&h| {
            let recovery = recovery_deformation(chart, family, &warp, sweep, h)?;
            let energy = shell_energy(&recovery, model, None);
            let ratio = energy / recovery.e_h;
            let gap = if limit.value > 1e-12 {
                (ratio - limit.value).abs() / limit.value
            } else {
                (ratio - limit.value).abs()
            };
            let mut vh_err = 0.0f64;
            for k in 0..chart.grid.len() {
                let diff = recovery.averaged_displacement(k) - v_jet.values[k];
                vh_err = vh_err.max(diff.amax());
            }
            if v_norm > 0.0 {
                vh_err /= v_norm;
            }
            Ok(GammaRow {
                h,
                e_h: recovery.e_h,
                eps: recovery.eps,
                energy,
                ratio,
                limit: limit.value,
                gap,
                vh_err,
            })
        })
        .collect();
    Ok(GammaSweepResult {
        limit: limit.value,
        rows: rows?,
    })
}

/// Max-norm distance of the rescaled strain `(1/(2 sqrt(e^h))) K^h` to its
/// limit `(t/h0)(K_tan + zeta (x) n + n (x) zeta)` over nodes and
/// through-thickness quadrature points.
pub fn strain_limit_distance(
    recovery: &Recovery,
    k_tan: &SymFormField,
    zeta: &[Vector3<f64>],
) -> f64 {
    let chart = recovery.chart;
    let quad = gauss_legendre_5(recovery.h0);
    let mut dist = 0.0f64;
    for k in 0..chart.grid.len() {
        let gu = chart.grad_u[k];
        let nv = chart.normal[k];
        let zt1 = zeta[k].dot(&gu.column(0));
        let zt2 = zeta[k].dot(&gu.column(1));
        let zn = zeta[k].dot(&nv);
        for &(t, _) in &quad {
            let f = recovery.gradient(k, t);
            let kh = f.transpose() * f - Matrix3::identity();
            let scale = t / recovery.h0;
            let mut limit = Matrix3::zeros();
            limit[(0, 0)] = k_tan.b11[k];
            limit[(0, 1)] = k_tan.b12[k];
            limit[(1, 0)] = k_tan.b12[k];
            limit[(1, 1)] = k_tan.b22[k];
            limit[(0, 2)] = zt1;
            limit[(2, 0)] = zt1;
            limit[(1, 2)] = zt2;
            limit[(2, 1)] = zt2;
            limit[(2, 2)] = 2.0 * zn;
            let diff = kh / (2.0 * recovery.e_h.sqrt()) - scale * limit;
            dist = dist.max(diff.abs().max());
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::Grid2D;
    use crate::geometry::{build_chart, integrate_darboux, CurveSpec};
    use crate::isometry::{build_v_from_ab, IsometryAB};
    use crate::matching::{match_to_order, Correction, MatchedFamily};
    use crate::profile::Profile;
    use crate::symgrad::Displacement;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

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

    fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
        let axis = Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        )
        .normalize();
        let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let w = Matrix3::new(
            0.0, -axis.z, axis.y, //
            axis.z, 0.0, -axis.x, //
            -axis.y, axis.x, 0.0,
        );
        Matrix3::identity() + angle.sin() * w + (1.0 - angle.cos()) * (w * w)
    }

    #[test]
    fn q3_value_at_identity() {
        let model = MaterialModel::new(1.0, 1.0);
        // 2 mu |Id|^2 + lambda tr^2 = 6 + 9.
        assert_relative_eq!(model.q3(&Matrix3::identity()), 15.0);
    }

    mod properties {
        use super::super::MaterialModel;
        use nalgebra::{Matrix2, Matrix3, Vector3};
        use proptest::prelude::*;

        proptest! {
            // The exactly solved normal relaxation agrees with the closed
            // form for any positive moduli and tangential form.
            #[test]
            fn relaxation_matches_closed_form(
                mu in 0.1f64..5.0,
                lambda in 0.0f64..5.0,
                entries in proptest::array::uniform4(-2.0f64..2.0),
            ) {
                let model = MaterialModel::new(mu, lambda);
                let ft = Matrix2::new(entries[0], entries[1], entries[2], entries[3]);
                let mut lift = Matrix3::zeros();
                lift.fixed_view_mut::<2, 2>(0, 0).copy_from(&ft);
                let (q2, _) = model.q2_and_minimizer(&Vector3::z(), &lift).unwrap();
                let closed = model.q2_closed_form(&ft);
                prop_assert!((q2 - closed).abs() <= 1e-10 * closed.max(1.0));
            }
        }
    }

    #[test]
    fn density_vanishes_on_rotations_and_is_frame_indifferent() {
        let model = MaterialModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let r = random_rotation(&mut rng);
            assert!(model.energy_density(&r) < 1e-12);
            let mut f = Matrix3::identity();
            for i in 0..3 {
                for j in 0..3 {
                    f[(i, j)] += rng.gen_range(-0.05..0.05);
                }
            }
            let diff = (model.energy_density(&(r * f)) - model.energy_density(&f)).abs();
            assert!(diff < 1e-14 + 1e-12 * model.energy_density(&f));
        }
    }

    #[test]
    fn density_dominates_squared_distance_near_rotations() {
        let model = MaterialModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut min_ratio = f64::INFINITY;
        for _ in 0..50 {
            let r = random_rotation(&mut rng);
            let mut p = Matrix3::zeros();
            for i in 0..3 {
                for j in 0..3 {
                    p[(i, j)] = rng.gen_range(-0.02..0.02);
                }
            }
            let f = r + p;
            // dist(F, SO(3)) <= |F - R|.
            let dist2 = p.norm_squared();
            if dist2 > 1e-12 {
                min_ratio = min_ratio.min(model.energy_density(&f) / dist2);
            }
        }
        assert!(min_ratio.is_finite());
        assert!(min_ratio > 0.0, "growth constant must be positive");
    }

    #[test]
    fn q2_kernel_of_skew_forms() {
        let model = MaterialModel::default();
        let normal = Vector3::z();
        let skew = Matrix3::new(0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let (q2, c) = model.q2_and_minimizer(&normal, &skew).unwrap();
        assert!(q2.abs() < 1e-14);
        assert!(c.norm() < 1e-14);
    }

    #[test]
    fn q2_matches_closed_form() {
        let model = MaterialModel::new(1.3, 0.7);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let normal = Vector3::z();
        for _ in 0..100 {
            let ft = Matrix2::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let mut lift = Matrix3::zeros();
            lift.fixed_view_mut::<2, 2>(0, 0).copy_from(&ft);
            let (q2, _) = model.q2_and_minimizer(&normal, &lift).unwrap();
            assert_relative_eq!(q2, model.q2_closed_form(&ft), epsilon = 1e-12);
        }
    }

    #[test]
    fn degenerate_model_is_reported() {
        let model = MaterialModel::new(0.0, 0.0);
        let err = model.q2_and_minimizer(&Vector3::z(), &Matrix3::identity());
        assert!(matches!(err, Err(Error::DegenerateModel(_))));
    }

    #[test]
    fn a_field_of_rigid_motion_is_constant() {
        let chart = cylinder_chart(32, 16);
        let q = Matrix3::new(0.0, -0.3, 0.2, 0.3, 0.0, -0.1, -0.2, 0.1, 0.0);
        let values: Vec<Vector3<f64>> = chart.u.iter().map(|u| q * u).collect();
        let jacobians: Vec<Matrix3x2<f64>> = chart.grad_u.iter().map(|g| q * g).collect();
        let disp = Displacement::from_ambient_with_jacobian(&chart, &values, &jacobians);
        let jet = disp.ambient_jet(&chart);
        let rot = a_field(&chart, &jet.grad).unwrap();
        assert!(rot.skew_defect < 1e-12);
        for a in &rot.a {
            assert!((a - q).abs().max() < 1e-12);
        }
    }

    #[test]
    fn a_field_of_zero_is_zero() {
        let chart = cylinder_chart(16, 16);
        let zero = Displacement::zeros(chart.grid.len());
        let jet = zero.ambient_jet(&chart);
        let rot = a_field(&chart, &jet.grad).unwrap();
        assert!(rot.a.iter().all(|a| a.abs().max() < 1e-15));
    }

    #[test]
    fn axis_rotation_recovers_generator() {
        // The normal profile a(t) = -R sin(t/R) belongs to the rotation
        // V(p) = e2 x p. Sampled with its closed-form Jacobian, the
        // reconstruction returns the constant generator [e2]_x.
        let chart = cylinder_chart(128, 32);
        let e2 = Vector3::new(0.0, 1.0, 0.0);
        let values: Vec<Vector3<f64>> = chart.u.iter().map(|u| e2.cross(u)).collect();
        let q = Matrix3::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0);
        let jacobians: Vec<Matrix3x2<f64>> = chart.grad_u.iter().map(|g| q * g).collect();
        let rot_field = Displacement::from_ambient_with_jacobian(&chart, &values, &jacobians);
        let jet = rot_field.ambient_jet(&chart);
        let rot = a_field(&chart, &jet.grad).unwrap();
        for a in &rot.a {
            assert!((a - q).abs().max() < 1e-6, "{a}");
        }

        // The gauge-normalized representative built from the same profiles
        // is the parallel translation e1 = e2 x u + gamma'-field, whose
        // generator is the constant zero matrix.
        let ab = IsometryAB::from_profiles(
            &chart,
            Profile::Sin {
                amp: -1.0,
                omega: 1.0,
                phase: 0.0,
            },
            Profile::Const(0.0),
        );
        let v = build_v_from_ab(&chart, &ab).unwrap().displacement;
        let jet = v.ambient_jet(&chart);
        let rot = a_field(&chart, &jet.grad).unwrap();
        for a in &rot.a {
            assert!(a.abs().max() < 5e-3, "{a}");
        }
    }

    #[test]
    fn limit_energy_zero_and_rigid() {
        let chart = cylinder_chart(48, 24);
        let model = MaterialModel::default();
        let zero = Displacement::zeros(chart.grid.len());
        let jet = zero.ambient_jet(&chart);
        let limit = limit_energy(&chart, &jet.grad, &model).unwrap();
        assert!(limit.value.abs() < 1e-20);

        let q = Matrix3::new(0.0, 0.0, 0.1, 0.0, 0.0, 0.0, -0.1, 0.0, 0.0);
        let values: Vec<Vector3<f64>> = chart.u.iter().map(|u| q * u).collect();
        let jacobians: Vec<Matrix3x2<f64>> = chart.grad_u.iter().map(|g| q * g).collect();
        let rigid = Displacement::from_ambient_with_jacobian(&chart, &values, &jacobians);
        let jet = rigid.ambient_jet(&chart);
        let limit = limit_energy(&chart, &jet.grad, &model).unwrap();
        assert!(limit.value.abs() < 1e-18, "I = {}", limit.value);
    }

    #[test]
    fn limit_energy_rigid_shift_invariance() {
        let chart = cylinder_chart(48, 24);
        let model = MaterialModel::default();
        let ab = IsometryAB::from_profiles(
            &chart,
            Profile::Cos {
                amp: 0.4,
                omega: 1.0,
                phase: 0.0,
            },
            Profile::Const(0.0),
        );
        let v = build_v_from_ab(&chart, &ab).unwrap().displacement;
        let base_jet = v.ambient_jet(&chart);
        let base = limit_energy(&chart, &base_jet.grad, &model).unwrap();

        let q = Matrix3::new(0.0, -0.5, 0.2, 0.5, 0.0, -0.3, -0.2, 0.3, 0.0);
        let shifted_grad: Vec<Matrix3x2<f64>> = (0..chart.grid.len())
            .map(|k| base_jet.grad[k] + q * chart.grad_u[k])
            .collect();
        let shifted = limit_energy(&chart, &shifted_grad, &model).unwrap();
        assert!(
            (shifted.value - base.value).abs() <= 1e-10 * base.value.max(1.0),
            "I shifted by {}",
            (shifted.value - base.value).abs()
        );
    }

    #[test]
    fn identity_family_has_zero_energy() {
        let chart = cylinder_chart(32, 16);
        let model = MaterialModel::default();
        let zero = Displacement::zeros(chart.grid.len());
        let family = MatchedFamily {
            order: 2,
            corrections: vec![Correction {
                jet: zero.ambient_jet(&chart),
                displacement: zero,
            }],
        };
        let sweep = ShellSweep::new(vec![0.0625, 0.03125], 0.25, 3.5).unwrap();
        let result = gamma_gap(&chart, &family, &sweep, &model).unwrap();
        for row in &result.rows {
            assert!(row.gap < 1e-12, "gap {}", row.gap);
            assert!(row.vh_err < 1e-12);
        }
    }

    #[test]
    fn scaling_violation_detected() {
        let chart = cylinder_chart(32, 16);
        let model = MaterialModel::default();
        let ab = IsometryAB::from_profiles(
            &chart,
            Profile::Cos {
                amp: 0.4,
                omega: 1.0,
                phase: 0.0,
            },
            Profile::Const(0.0),
        );
        let v = build_v_from_ab(&chart, &ab).unwrap().displacement;
        let family = match_to_order(&chart, v, 2).unwrap();
        // beta_2 = 3: beta = 2.5 violates the scaling hypothesis.
        let sweep = ShellSweep::new(vec![0.0625], 0.25, 2.5).unwrap();
        assert!(matches!(
            gamma_gap(&chart, &family, &sweep, &model),
            Err(Error::ScalingViolation { .. })
        ));
    }

    #[test]
    fn excessive_thickness_is_rejected() {
        // h0 comparable to the curvature radius degenerates Id + t Pi inside
        // the reference thickness.
        let chart = cylinder_chart(24, 16);
        let model = MaterialModel::default();
        let zero = Displacement::zeros(chart.grid.len());
        let family = match_to_order(&chart, zero, 2).unwrap();
        let sweep = ShellSweep::new(vec![4.4], 4.5, 3.5).unwrap();
        assert!(matches!(
            gamma_gap(&chart, &family, &sweep, &model),
            Err(Error::ThicknessTooLarge { .. })
        ));
        let _ = model;
    }

    #[test]
    fn normal_expansion_is_first_order_in_eps() {
        // || n_eps - (n + eps A n) || = O(eps^2).
        let chart = cylinder_chart(64, 24);
        let ab = IsometryAB::from_profiles(
            &chart,
            Profile::Cos {
                amp: 1.0,
                omega: 1.0,
                phase: 0.0,
            },
            Profile::Const(0.0),
        );
        let v = build_v_from_ab(&chart, &ab).unwrap().displacement;
        let family = match_to_order(&chart, v, 2).unwrap();
        let model = MaterialModel::default();
        let jet = &family.corrections[0].jet;
        let limit = limit_energy(&chart, &jet.grad, &model).unwrap();
        let warp = WarpField::from_zeta(&chart, &limit.zeta);

        let sweep = ShellSweep::new(vec![0.25, 0.125, 0.0625, 0.03125], 0.25, 3.5).unwrap();
        let mut errs = Vec::new();
        for &h in &sweep.h_list {
            let r = recovery_deformation(&chart, &family, &warp, &sweep, h).unwrap();
            let mut e = 0.0f64;
            for k in 0..chart.grid.len() {
                let approx_n = chart.normal[k] + r.eps * limit.rotation.a[k] * chart.normal[k];
                e = e.max((r.n_eps[k] - approx_n).amax());
            }
            errs.push((r.eps, e));
        }
        let est = crate::matching::estimate_order(&errs).unwrap();
        assert!(est.slope >= 1.8, "normal expansion slope {}", est.slope);
    }
}
