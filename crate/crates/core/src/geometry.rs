//! Developable surface charts built from one-dimensional curvature data.
//!
//! A chart is generated by an arclength curve with geodesic curvature `kappa`
//! and normal curvature `kappa_n`, ruled by straight segments of half-widths
//! `s^-(t)`, `s^+(t)`. The moving frame `r = (gamma', v, n)` satisfies a
//! linear ODE with skew generator; the immersion, its gradient and its second
//! fundamental form then come from closed formulas, so no differencing of `u`
//! is ever needed to build a chart.

use crate::calculus::{self, Grid2D, SymFormField};
use crate::error::{Error, Result};
use crate::profile::Profile;
use nalgebra::{Matrix2, Matrix3, Matrix3x2, Vector2, Vector3};
use serde::Serialize;

/// Generating data for a developable chart.
#[derive(Debug, Clone, Serialize)]
pub struct CurveSpec {
    /// Arclength of the generating curve.
    pub t_max: f64,
    /// Geodesic curvature `kappa(t)`.
    pub kappa: Profile,
    /// Normal curvature `kappa_n(t)`.
    pub kappa_n: Profile,
    /// Ruling half-width on the `s < 0` side.
    pub s_minus: Profile,
    /// Ruling half-width on the `s > 0` side.
    pub s_plus: Profile,
    /// Margin of the admissible curvature band.
    pub delta: f64,
}

impl CurveSpec {
    /// Build a spec, filling in the default margin
    /// `delta = 0.05 * min(1/s^+, 1/s^-)` when none is given.
    pub fn new(
        t_max: f64,
        kappa: Profile,
        kappa_n: Profile,
        s_minus: Profile,
        s_plus: Profile,
        delta: Option<f64>,
    ) -> Result<Self> {
        if !(t_max > 0.0) {
            return Err(Error::NonAdmissibleCurve("T must be positive".into()));
        }
        let mut inv_s_min = f64::INFINITY;
        for k in 0..PROBE {
            let t = t_max * k as f64 / (PROBE - 1) as f64;
            let (sm, sp) = (s_minus.eval(t), s_plus.eval(t));
            if !(sm > 0.0) || !(sp > 0.0) {
                return Err(Error::NonAdmissibleCurve(format!(
                    "ruling widths must be positive; s-(t)={sm}, s+(t)={sp} at t={t}"
                )));
            }
            inv_s_min = inv_s_min.min(1.0 / sm).min(1.0 / sp);
        }
        let delta = delta.unwrap_or(0.05 * inv_s_min);
        if !(delta > 0.0) {
            return Err(Error::NonAdmissibleCurve("delta must be positive".into()));
        }
        let spec = CurveSpec {
            t_max,
            kappa,
            kappa_n,
            s_minus,
            s_plus,
            delta,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Enforce the uniform band `kappa in [delta - 1/s^-, 1/s^+ - delta]`.
    /// Surfaces violating it are rejected rather than clamped.
    pub fn validate(&self) -> Result<()> {
        for k in 0..PROBE {
            let t = self.t_max * k as f64 / (PROBE - 1) as f64;
            let kap = self.kappa.eval(t);
            let lo = self.delta - 1.0 / self.s_minus.eval(t);
            let hi = 1.0 / self.s_plus.eval(t) - self.delta;
            if kap < lo - 1e-12 || kap > hi + 1e-12 {
                return Err(Error::NonAdmissibleCurve(format!(
                    "kappa(t)={kap:.6} outside [{lo:.6}, {hi:.6}] at t={t:.6}"
                )));
            }
        }
        Ok(())
    }

    /// Largest margin for which the band condition still holds.
    pub fn largest_delta(&self) -> f64 {
        let mut best = f64::INFINITY;
        for k in 0..PROBE {
            let t = self.t_max * k as f64 / (PROBE - 1) as f64;
            let kap = self.kappa.eval(t);
            best = best
                .min(kap + 1.0 / self.s_minus.eval(t))
                .min(1.0 / self.s_plus.eval(t) - kap);
        }
        best
    }
}

const PROBE: usize = 2048;

/// Moving frame along the generating curve, sampled on the t-grid.
#[derive(Debug, Clone)]
pub struct DarbouxFrame {
    pub t_samples: Vec<f64>,
    /// Rotation with rows `(gamma', v, n)`; `r(0) = Id`.
    pub r: Vec<Matrix3<f64>>,
    /// Space curve `gamma(t) = int_0^t gamma'`.
    pub gamma: Vec<Vector3<f64>>,
    /// Planar curve `Gamma(t)` with curvature `kappa`.
    pub gamma_planar: Vec<Vector2<f64>>,
    /// Planar tangent `Gamma'`.
    pub tangent_planar: Vec<Vector2<f64>>,
    /// Planar normal `N = (Gamma')^perp`.
    pub normal_planar: Vec<Vector2<f64>>,
    /// Largest `||r^T r - Id||` observed before in-step reprojection.
    pub max_ortho_drift: f64,
}

#[inline]
fn perp(v: Vector2<f64>) -> Vector2<f64> {
    Vector2::new(-v.y, v.x)
}

#[inline]
fn skew_generator(kappa: f64, kappa_n: f64) -> Matrix3<f64> {
    Matrix3::new(
        0.0, kappa, kappa_n, //
        -kappa, 0.0, 0.0, //
        -kappa_n, 0.0, 0.0,
    )
}

/// Rodrigues exponential of `h * W` where `W` is the skew matrix of `omega`.
fn exp_skew(omega: Vector3<f64>, h: f64) -> Matrix3<f64> {
    let w = Matrix3::new(
        0.0, -omega.z, omega.y, //
        omega.z, 0.0, -omega.x, //
        -omega.y, omega.x, 0.0,
    );
    let theta = h * omega.norm();
    let (c1, c2) = if theta < 1e-5 {
        // sin(x)/x and (1-cos x)/x^2
        (
            1.0 - theta * theta / 6.0,
            0.5 - theta * theta / 24.0,
        )
    } else {
        ((theta.sin()) / theta, (1.0 - theta.cos()) / (theta * theta))
    };
    Matrix3::identity() + (c1 * h) * w + (c2 * h * h) * (w * w)
}

/// `int_0^h exp(tau W) dtau` for the same generator; exact for frozen
/// coefficients so the curve quadrature inherits the integrator order.
fn int_exp_skew(omega: Vector3<f64>, h: f64) -> Matrix3<f64> {
    let w = Matrix3::new(
        0.0, -omega.z, omega.y, //
        omega.z, 0.0, -omega.x, //
        -omega.y, omega.x, 0.0,
    );
    let theta = h * omega.norm();
    let (c1, c2) = if theta < 1e-4 {
        (
            0.5 - theta * theta / 24.0,
            1.0 / 6.0 - theta * theta / 120.0,
        )
    } else {
        (
            (1.0 - theta.cos()) / (theta * theta),
            (theta - theta.sin()) / (theta * theta * theta),
        )
    };
    h * Matrix3::identity() + (c1 * h * h) * w + (c2 * h * h * h) * (w * w)
}

fn reorthonormalize(r: &mut Matrix3<f64>) {
    // Modified Gram-Schmidt on rows.
    let mut e0 = r.row(0).transpose();
    e0 /= e0.norm();
    let mut e1 = r.row(1).transpose();
    e1 -= e0 * e0.dot(&e1);
    e1 /= e1.norm();
    let e2 = e0.cross(&e1);
    r.set_row(0, &e0.transpose());
    r.set_row(1, &e1.transpose());
    r.set_row(2, &e2.transpose());
}

/// Integrate the frame ODE `r' = Omega(kappa, kappa_n) r`, `r(0) = Id`, on a
/// grid of `n_nodes` samples of `[0, T]`.
///
/// Each substep applies the exponential of the generator frozen at the substep
/// midpoint, so every sample is a product of rotations. The substep count
/// follows `max(n_nodes - 1, 16 T max(|kappa| + |kappa_n|))`.
pub fn integrate_darboux(spec: &CurveSpec, n_nodes: usize) -> Result<DarbouxFrame> {
    spec.validate()?;
    if n_nodes < 2 {
        return Err(Error::NonAdmissibleCurve(
            "frame integration needs at least 2 samples".into(),
        ));
    }
    let t_max = spec.t_max;
    let mut gen_max = 0.0f64;
    for k in 0..PROBE {
        let t = t_max * k as f64 / (PROBE - 1) as f64;
        gen_max = gen_max.max(spec.kappa.eval(t).abs() + spec.kappa_n.eval(t).abs());
    }
    let required = ((16.0 * t_max * gen_max).ceil() as usize).max(n_nodes - 1);
    let substeps = required.div_ceil(n_nodes - 1);

    let mut frame = DarbouxFrame {
        t_samples: (0..n_nodes)
            .map(|i| t_max * i as f64 / (n_nodes - 1) as f64)
            .collect(),
        r: Vec::with_capacity(n_nodes),
        gamma: Vec::with_capacity(n_nodes),
        gamma_planar: Vec::with_capacity(n_nodes),
        tangent_planar: Vec::with_capacity(n_nodes),
        normal_planar: Vec::with_capacity(n_nodes),
        max_ortho_drift: 0.0,
    };

    let mut r = Matrix3::<f64>::identity();
    let mut gamma = Vector3::zeros();
    let mut gpl = Vector2::zeros();
    let mut phi = 0.0f64; // turning angle of Gamma
    let h = t_max / ((n_nodes - 1) * substeps) as f64;

    let mut push = |r: &Matrix3<f64>, gamma: &Vector3<f64>, gpl: &Vector2<f64>, phi: f64| {
        frame.r.push(*r);
        frame.gamma.push(*gamma);
        frame.gamma_planar.push(*gpl);
        let tangent = Vector2::new(phi.cos(), phi.sin());
        frame.tangent_planar.push(tangent);
        frame.normal_planar.push(perp(tangent));
    };
    push(&r, &gamma, &gpl, phi);

    let mut drift = 0.0f64;
    for node in 0..n_nodes - 1 {
        for sub in 0..substeps {
            let t0 = frame.t_samples[node] + sub as f64 * h;
            let tm = t0 + 0.5 * h;
            let (kap, kan) = (spec.kappa.eval(tm), spec.kappa_n.eval(tm));
            // Generator as a rotation vector: Omega = [omega]_x with
            // omega = (0, kappa_n, -kappa).
            let omega = Vector3::new(0.0, kan, -kap);
            gamma += (int_exp_skew(omega, h) * r).row(0).transpose();
            r = exp_skew(omega, h) * r;
            let d = (r.transpose() * r - Matrix3::identity()).abs().max();
            drift = drift.max(d);
            reorthonormalize(&mut r);

            // Planar curve: exact circular arc for the frozen curvature.
            let half = 0.5 * h * kap;
            let sinc = if half.abs() < 1e-8 {
                1.0 - half * half / 6.0
            } else {
                half.sin() / half
            };
            let mid_angle = phi + half;
            gpl += h * sinc * Vector2::new(mid_angle.cos(), mid_angle.sin());
            phi += h * kap;
        }
        push(&r, &gamma, &gpl, phi);
    }
    frame.max_ortho_drift = drift;
    if drift > 1e-10 {
        return Err(Error::StepTooCoarse { drift });
    }
    debug_assert!(sanity_generator_matches(&skew_generator(0.0, 0.0)));
    Ok(frame)
}

fn sanity_generator_matches(m: &Matrix3<f64>) -> bool {
    m.abs().max() == 0.0
}

/// Sampled immersion with its closed-form gradient and second form, plus the
/// differenced chart metric used by the discrete operators.
pub struct SurfaceChart {
    pub grid: Grid2D,
    pub spec: CurveSpec,
    pub frame: DarbouxFrame,

    // Per-t samples.
    pub kappa_t: Vec<f64>,
    pub dkappa_t: Vec<f64>,
    pub kappa_n_t: Vec<f64>,
    pub s_minus_t: Vec<f64>,
    pub s_plus_t: Vec<f64>,
    /// `s^+ + s^-`, the sigma-normalization Jacobian.
    pub width_t: Vec<f64>,

    // Per-node fields, indexed by `grid.idx(it, is)`.
    pub s: Vec<f64>,
    /// Chart coordinates `x = Phi(s, t) = Gamma + s N`.
    pub phi: Vec<Vector2<f64>>,
    /// `det grad Phi = -(1 - s kappa)` with respect to `(s, t)`.
    pub jac_phi_det: Vec<f64>,
    /// `grad Phi` with respect to `(s, t)`, columns `(N, (1 - s kappa) Gamma')`.
    pub grad_phi: Vec<Matrix2<f64>>,
    pub one_minus_skappa: Vec<f64>,
    pub u: Vec<Vector3<f64>>,
    /// Closed-form `grad u`, columns `gamma' Gamma_i' + v N_i`.
    pub grad_u: Vec<Matrix3x2<f64>>,
    pub normal: Vec<Vector3<f64>>,
    /// Second-form coefficients `a_ij = kappa_n/(1 - s kappa) Gamma_i' Gamma_j'`.
    pub a: SymFormField,

    // Differenced chart metric (consistent with the stencils in `calculus`).
    pub jac_num: Vec<Matrix2<f64>>,
    pub jac_inv_t: Vec<Matrix2<f64>>,
    pub hess_x1: Vec<Matrix2<f64>>,
    pub hess_x2: Vec<Matrix2<f64>>,

    /// Area of the chart image in x-coordinates.
    pub area_x: f64,
    /// Degeneracy floor `delta * min(s^-, s^+)`.
    pub floor: f64,
}

impl SurfaceChart {
    #[inline]
    pub fn idx(&self, it: usize, is: usize) -> usize {
        self.grid.idx(it, is)
    }

    /// Quadrature weight of the x-area element at a node.
    #[inline]
    pub fn weight_x(&self, it: usize, is: usize) -> f64 {
        let k = self.grid.idx(it, is);
        self.grid.wt[it] * self.grid.wsigma[is] * self.width_t[it] * self.one_minus_skappa[k]
    }

    /// Pullback of the second fundamental form, `Pi(d_i u, d_j u) = -a_ij`.
    pub fn second_form_pullback(&self) -> SymFormField {
        SymFormField {
            b11: self.a.b11.iter().map(|v| -v).collect(),
            b12: self.a.b12.iter().map(|v| -v).collect(),
            b22: self.a.b22.iter().map(|v| -v).collect(),
        }
    }

    /// Mean grid spacing used by order-scaled tolerances.
    pub fn mean_spacing(&self) -> f64 {
        let hs = self.width_t.iter().cloned().fold(0.0f64, f64::max) * self.grid.hsigma();
        0.5 * (self.grid.ht() + hs)
    }
}

/// Populate a chart on the given grid from the integrated frame.
pub fn build_chart(spec: &CurveSpec, frame: &DarbouxFrame, grid: Grid2D) -> Result<SurfaceChart> {
    if frame.t_samples.len() != grid.nt {
        return Err(Error::Config(format!(
            "frame sampled at {} nodes but grid has nt = {}",
            frame.t_samples.len(),
            grid.nt
        )));
    }
    let n = grid.len();
    let nt = grid.nt;
    let ns = grid.ns;

    let kappa_t: Vec<f64> = grid.t_nodes.iter().map(|&t| spec.kappa.eval(t)).collect();
    let dkappa_t: Vec<f64> = grid.t_nodes.iter().map(|&t| spec.kappa.d1(t)).collect();
    let kappa_n_t: Vec<f64> = grid.t_nodes.iter().map(|&t| spec.kappa_n.eval(t)).collect();
    let s_minus_t: Vec<f64> = grid.t_nodes.iter().map(|&t| spec.s_minus.eval(t)).collect();
    let s_plus_t: Vec<f64> = grid.t_nodes.iter().map(|&t| spec.s_plus.eval(t)).collect();
    let width_t: Vec<f64> = (0..nt).map(|it| s_minus_t[it] + s_plus_t[it]).collect();

    let min_halfwidth = s_minus_t
        .iter()
        .chain(s_plus_t.iter())
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let floor = spec.delta * min_halfwidth;

    let mut s = vec![0.0; n];
    let mut phi = vec![Vector2::zeros(); n];
    let mut jac_phi_det = vec![0.0; n];
    let mut grad_phi = vec![Matrix2::zeros(); n];
    let mut one_minus_skappa = vec![0.0; n];
    let mut u = vec![Vector3::zeros(); n];
    let mut grad_u = vec![Matrix3x2::zeros(); n];
    let mut normal = vec![Vector3::zeros(); n];
    let mut a = SymFormField::zeros(n);

    for it in 0..nt {
        let gp = frame.tangent_planar[it];
        let np = frame.normal_planar[it];
        let gamma_prime = frame.r[it].row(0).transpose();
        let v = frame.r[it].row(1).transpose();
        let nvec = frame.r[it].row(2).transpose();
        for is in 0..ns {
            let k = grid.idx(it, is);
            let sv = -s_minus_t[it] + grid.sigma_nodes[is] * width_t[it];
            s[k] = sv;
            phi[k] = frame.gamma_planar[it] + sv * np;
            let oms = 1.0 - sv * kappa_t[it];
            one_minus_skappa[k] = oms;
            if oms < floor * (1.0 - 1e-12) || oms <= 0.0 {
                return Err(Error::ChartDegenerate {
                    value: oms,
                    floor,
                    it,
                    is,
                });
            }
            jac_phi_det[k] = -oms;
            grad_phi[k] = Matrix2::new(np.x, oms * gp.x, np.y, oms * gp.y);
            u[k] = frame.gamma[it] + sv * v;
            grad_u[k] = Matrix3x2::from_columns(&[
                gamma_prime * gp.x + v * np.x,
                gamma_prime * gp.y + v * np.y,
            ]);
            normal[k] = nvec;
            let c = kappa_n_t[it] / oms;
            a.b11[k] = c * gp.x * gp.x;
            a.b12[k] = c * gp.x * gp.y;
            a.b22[k] = c * gp.y * gp.y;
        }
    }

    // Differenced chart metric: apply the crate stencils to the coordinate
    // fields so the chain rule annihilates affine functions of x exactly.
    let x1: Vec<f64> = phi.iter().map(|p| p.x).collect();
    let x2: Vec<f64> = phi.iter().map(|p| p.y).collect();
    let d1s = calculus::d_sigma(&grid, &x1);
    let d1t = calculus::d_t(&grid, &x1);
    let d2s = calculus::d_sigma(&grid, &x2);
    let d2t = calculus::d_t(&grid, &x2);
    let h1ss = calculus::d2_sigma(&grid, &x1);
    let h1tt = calculus::d2_t(&grid, &x1);
    let h1st = calculus::d_t(&grid, &d1s);
    let h2ss = calculus::d2_sigma(&grid, &x2);
    let h2tt = calculus::d2_t(&grid, &x2);
    let h2st = calculus::d_t(&grid, &d2s);

    let mut jac_num = vec![Matrix2::zeros(); n];
    let mut jac_inv_t = vec![Matrix2::zeros(); n];
    let mut hess_x1 = vec![Matrix2::zeros(); n];
    let mut hess_x2 = vec![Matrix2::zeros(); n];
    for k in 0..n {
        let j = Matrix2::new(d1s[k], d1t[k], d2s[k], d2t[k]);
        jac_num[k] = j;
        jac_inv_t[k] = j
            .try_inverse()
            .ok_or(Error::ChartDegenerate {
                value: j.determinant(),
                floor,
                it: k / ns,
                is: k % ns,
            })?
            .transpose();
        hess_x1[k] = Matrix2::new(h1ss[k], h1st[k], h1st[k], h1tt[k]);
        hess_x2[k] = Matrix2::new(h2ss[k], h2st[k], h2st[k], h2tt[k]);
    }

    let mut area_x = 0.0;
    for it in 0..nt {
        for is in 0..ns {
            let k = grid.idx(it, is);
            area_x += grid.wt[it] * grid.wsigma[is] * width_t[it] * one_minus_skappa[k];
        }
    }

    Ok(SurfaceChart {
        grid,
        spec: spec.clone(),
        frame: frame.clone(),
        kappa_t,
        dkappa_t,
        kappa_n_t,
        s_minus_t,
        s_plus_t,
        width_t,
        s,
        phi,
        jac_phi_det,
        grad_phi,
        one_minus_skappa,
        u,
        grad_u,
        normal,
        a,
        jac_num,
        jac_inv_t,
        hess_x1,
        hess_x2,
        area_x,
        floor,
    })
}

/// Outcome of the three admissibility checks. Failures are reported, not
/// raised, so a single run can describe everything that is wrong.
#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    pub rulings_disjoint: bool,
    /// Sample indices of the first crossing pair, when any.
    pub first_crossing: Option<(usize, usize)>,
    pub band_ok: bool,
    pub largest_delta: f64,
    pub delta_used: f64,
    pub mean_curvature_ok: bool,
    pub min_abs_kappa_n: f64,
}

impl AdmissibilityReport {
    pub fn all_pass(&self) -> bool {
        self.rulings_disjoint && self.band_ok && self.mean_curvature_ok
    }
}

/// Check ruling disjointness (exhaustive pairwise segment intersection on the
/// sample set), the curvature band, and the mean-curvature bound.
pub fn check_admissibility(spec: &CurveSpec, frame: &DarbouxFrame) -> AdmissibilityReport {
    let nt = frame.t_samples.len();
    let mut endpoints = Vec::with_capacity(nt);
    for it in 0..nt {
        let t = frame.t_samples[it];
        let g = frame.gamma_planar[it];
        let np = frame.normal_planar[it];
        let (sm, sp) = (spec.s_minus.eval(t), spec.s_plus.eval(t));
        endpoints.push((g - sm * np, g + sp * np));
    }
    let mut rulings_disjoint = true;
    let mut first_crossing = None;
    // Adjacent rulings share no interior point under the band condition, so
    // the exclusion window is one grid step.
    'outer: for i in 0..nt {
        for j in i + 2..nt {
            let (p1, q1) = endpoints[i];
            let (p2, q2) = endpoints[j];
            if segments_intersect(p1, q1, p2, q2) {
                rulings_disjoint = false;
                first_crossing = Some((i, j));
                break 'outer;
            }
        }
    }

    let largest_delta = spec.largest_delta();
    let band_ok = largest_delta >= spec.delta - 1e-12;

    let mut min_abs_kappa_n = f64::INFINITY;
    for k in 0..PROBE {
        let t = spec.t_max * k as f64 / (PROBE - 1) as f64;
        min_abs_kappa_n = min_abs_kappa_n.min(spec.kappa_n.eval(t).abs());
    }
    let mean_curvature_ok = min_abs_kappa_n > 1e-12;

    AdmissibilityReport {
        rulings_disjoint,
        first_crossing,
        band_ok,
        largest_delta,
        delta_used: spec.delta,
        mean_curvature_ok,
        min_abs_kappa_n,
    }
}

fn orient(a: Vector2<f64>, b: Vector2<f64>, c: Vector2<f64>) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn on_segment(a: Vector2<f64>, b: Vector2<f64>, p: Vector2<f64>) -> bool {
    p.x >= a.x.min(b.x) - 1e-14
        && p.x <= a.x.max(b.x) + 1e-14
        && p.y >= a.y.min(b.y) - 1e-14
        && p.y <= a.y.max(b.y) + 1e-14
}

fn segments_intersect(
    p1: Vector2<f64>,
    q1: Vector2<f64>,
    p2: Vector2<f64>,
    q2: Vector2<f64>,
) -> bool {
    let d1 = orient(p2, q2, p1);
    let d2 = orient(p2, q2, q1);
    let d3 = orient(p1, q1, p2);
    let d4 = orient(p1, q1, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(p2, q2, p1))
        || (d2 == 0.0 && on_segment(p2, q2, q1))
        || (d3 == 0.0 && on_segment(p1, q1, p2))
        || (d4 == 0.0 && on_segment(p1, q1, q2))
}

/// The two evaluations of the bending integral.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BendingEnergy {
    /// Quadrature of `kappa_n^2 / (1 - s kappa)` over the strip.
    pub closed_form: f64,
    /// Quadrature of the differenced Hessian `|hess u|^2` over the x-domain.
    pub hessian_quadrature: f64,
}

/// Evaluate the bending integral both ways; the closed form uses no
/// differencing at all and the Hessian route uses nothing else.
pub fn bending_energy(chart: &SurfaceChart) -> BendingEnergy {
    let n = chart.grid.len();
    let kn2: Vec<f64> = (0..n)
        .map(|k| {
            let it = k / chart.grid.ns;
            chart.kappa_n_t[it] * chart.kappa_n_t[it]
        })
        .collect();
    let closed_form = calculus::integrate_m(chart, &kn2, calculus::MWeight::InvJacobian);

    let mut dens = vec![0.0; n];
    for c in 0..3 {
        let comp: Vec<f64> = chart.u.iter().map(|v| v[c]).collect();
        let hess = calculus::hess_x(chart, &comp);
        for k in 0..n {
            let h = hess[k];
            dens[k] += h[(0, 0)] * h[(0, 0)] + 2.0 * h[(0, 1)] * h[(0, 1)] + h[(1, 1)] * h[(1, 1)];
        }
    }
    let hessian_quadrature = calculus::integrate_m(chart, &dens, calculus::MWeight::Jacobian);

    BendingEnergy {
        closed_form,
        hessian_quadrature,
    }
}

// ---------------------------------------------------------------------------
