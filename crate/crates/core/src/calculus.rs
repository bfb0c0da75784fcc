//! Discrete calculus on the curvilinear chart.
//!
//! Fields live on a tensor grid in `(sigma, t)`, where `sigma` normalizes the
//! ruling coordinate `s in (-s^-(t), s^+(t))` to `[0, 1]`. All stencils are
//! second-order centered differences with second-order one-sided closures at
//! the boundary. Derivatives with respect to the Euclidean chart coordinates
//! `x = Phi(s, t)` are obtained through the chain rule using the Jacobian and
//! Hessian of the coordinate map *differenced with the same stencils*; this
//! makes the operators exact on fields that are affine in `x` everywhere, not
//! just in the interior.

use crate::error::{Error, Result};
use crate::geometry::SurfaceChart;
use nalgebra::{Matrix2, Vector2};
use serde::Serialize;

/// Tensor-product grid over the normalized chart rectangle `[0,1] x [0,T]`.
#[derive(Debug, Clone, Serialize)]
pub struct Grid2D {
    pub nt: usize,
    pub ns: usize,
    pub t_nodes: Vec<f64>,
    pub sigma_nodes: Vec<f64>,
    /// Trapezoid weights along t, summing to T.
    pub wt: Vec<f64>,
    /// Trapezoid weights along sigma, summing to 1.
    pub wsigma: Vec<f64>,
}

impl Grid2D {
    pub fn new(t_max: f64, nt: usize, ns: usize) -> Result<Self> {
        if nt < 8 || ns < 8 {
            return Err(Error::Config(format!(
                "grid must be at least 8x8, got {nt}x{ns}"
            )));
        }
        if !(t_max > 0.0) {
            return Err(Error::Config("grid length T must be positive".into()));
        }
        let t_nodes: Vec<f64> = (0..nt)
            .map(|i| t_max * i as f64 / (nt - 1) as f64)
            .collect();
        let sigma_nodes: Vec<f64> = (0..ns).map(|i| i as f64 / (ns - 1) as f64).collect();
        Ok(Grid2D {
            nt,
            ns,
            t_nodes,
            sigma_nodes,
            wt: trapezoid_weights(t_max, nt),
            wsigma: trapezoid_weights(1.0, ns),
        })
    }

    #[inline]
    pub fn idx(&self, it: usize, is: usize) -> usize {
        it * self.ns + is
    }

    pub fn len(&self) -> usize {
        self.nt * self.ns
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn ht(&self) -> f64 {
        self.t_nodes[1] - self.t_nodes[0]
    }

    pub fn hsigma(&self) -> f64 {
        self.sigma_nodes[1] - self.sigma_nodes[0]
    }
}

fn trapezoid_weights(length: f64, n: usize) -> Vec<f64> {
    let h = length / (n - 1) as f64;
    let mut w = vec![h; n];
    w[0] = 0.5 * h;
    w[n - 1] = 0.5 * h;
    w
}

/// Symmetric 2x2 bilinear-form field in chart coordinates.
#[derive(Debug, Clone, Serialize)]
pub struct SymFormField {
    pub b11: Vec<f64>,
    pub b12: Vec<f64>,
    pub b22: Vec<f64>,
}

impl SymFormField {
    pub fn zeros(n: usize) -> Self {
        SymFormField {
            b11: vec![0.0; n],
            b12: vec![0.0; n],
            b22: vec![0.0; n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize) -> (f64, f64, f64)) -> Self {
        let mut field = SymFormField::zeros(n);
        for k in 0..n {
            let (a, b, c) = f(k);
            field.b11[k] = a;
            field.b12[k] = b;
            field.b22[k] = c;
        }
        field
    }

    pub fn len(&self) -> usize {
        self.b11.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b11.is_empty()
    }

    #[inline]
    pub fn at(&self, k: usize) -> Matrix2<f64> {
        Matrix2::new(self.b11[k], self.b12[k], self.b12[k], self.b22[k])
    }

    pub fn axpy(&mut self, alpha: f64, other: &SymFormField) {
        for k in 0..self.len() {
            self.b11[k] += alpha * other.b11[k];
            self.b12[k] += alpha * other.b12[k];
            self.b22[k] += alpha * other.b22[k];
        }
    }

    pub fn norm_inf(&self) -> f64 {
        let mut m = 0.0f64;
        for k in 0..self.len() {
            m = m
                .max(self.b11[k].abs())
                .max(self.b12[k].abs())
                .max(self.b22[k].abs());
        }
        m
    }
}

// ---------------------------------------------------------------------------
// Raw stencil passes in (sigma, t)
//
// The one-sided boundary closures are second order and *bias matched*: their
// leading truncation term equals the centered one (+h^2 f'''/6 for first
// derivatives, +h^2 f''''/12 for second), so the truncation-error field stays
// smooth across the boundary. Fields reconstructed by line integration can
// then be re-differenced without losing an order in the boundary rows.

/// Bias-matched one-sided first derivative at offset 0 of a 4-point line.
#[inline]
fn d1_edge(f0: f64, f1: f64, f2: f64, f3: f64, h: f64) -> f64 {
    (-2.0 * f0 + 3.5 * f1 - 2.0 * f2 + 0.5 * f3) / h
}

/// Bias-matched one-sided second derivative at offset 0 of a 5-point line.
#[inline]
fn d2_edge(f0: f64, f1: f64, f2: f64, f3: f64, f4: f64, h2: f64) -> f64 {
    (3.0 * f0 - 9.0 * f1 + 10.0 * f2 - 5.0 * f3 + f4) / h2
}

/// First derivative along sigma (stride 1 within each t-line).
pub(crate) fn d_sigma(grid: &Grid2D, f: &[f64]) -> Vec<f64> {
    let (nt, ns, h) = (grid.nt, grid.ns, grid.hsigma());
    let mut out = vec![0.0; f.len()];
    for it in 0..nt {
        let r = it * ns;
        out[r] = d1_edge(f[r], f[r + 1], f[r + 2], f[r + 3], h);
        for is in 1..ns - 1 {
            out[r + is] = (f[r + is + 1] - f[r + is - 1]) / (2.0 * h);
        }
        let e = r + ns - 1;
        out[e] = -d1_edge(f[e], f[e - 1], f[e - 2], f[e - 3], h);
    }
    out
}

/// First derivative along t (stride ns).
pub(crate) fn d_t(grid: &Grid2D, f: &[f64]) -> Vec<f64> {
    let (nt, ns, h) = (grid.nt, grid.ns, grid.ht());
    let mut out = vec![0.0; f.len()];
    for is in 0..ns {
        out[is] = d1_edge(f[is], f[ns + is], f[2 * ns + is], f[3 * ns + is], h);
        for it in 1..nt - 1 {
            out[it * ns + is] = (f[(it + 1) * ns + is] - f[(it - 1) * ns + is]) / (2.0 * h);
        }
        let e = (nt - 1) * ns + is;
        out[e] = -d1_edge(f[e], f[e - ns], f[e - 2 * ns], f[e - 3 * ns], h);
    }
    out
}

/// Second derivative along sigma.
pub(crate) fn d2_sigma(grid: &Grid2D, f: &[f64]) -> Vec<f64> {
    let (nt, ns) = (grid.nt, grid.ns);
    let h2 = grid.hsigma() * grid.hsigma();
    let mut out = vec![0.0; f.len()];
    for it in 0..nt {
        let r = it * ns;
        out[r] = d2_edge(f[r], f[r + 1], f[r + 2], f[r + 3], f[r + 4], h2);
        for is in 1..ns - 1 {
            out[r + is] = (f[r + is + 1] - 2.0 * f[r + is] + f[r + is - 1]) / h2;
        }
        let e = r + ns - 1;
        out[e] = d2_edge(f[e], f[e - 1], f[e - 2], f[e - 3], f[e - 4], h2);
    }
    out
}

/// Second derivative along t.
pub(crate) fn d2_t(grid: &Grid2D, f: &[f64]) -> Vec<f64> {
    let (nt, ns) = (grid.nt, grid.ns);
    let h2 = grid.ht() * grid.ht();
    let mut out = vec![0.0; f.len()];
    for is in 0..ns {
        out[is] = d2_edge(
            f[is],
            f[ns + is],
            f[2 * ns + is],
            f[3 * ns + is],
            f[4 * ns + is],
            h2,
        );
        for it in 1..nt - 1 {
            out[it * ns + is] =
                (f[(it + 1) * ns + is] - 2.0 * f[it * ns + is] + f[(it - 1) * ns + is]) / h2;
        }
        let e = (nt - 1) * ns + is;
        out[e] = d2_edge(f[e], f[e - ns], f[e - 2 * ns], f[e - 3 * ns], f[e - 4 * ns], h2);
    }
    out
}

// ---------------------------------------------------------------------------
// Chain rule to x-coordinates

/// Gradient of a sampled scalar field with respect to the Euclidean chart
/// coordinates, `J^{-T} (d_sigma f, d_t f)` nodewise.
pub fn grad_x(chart: &SurfaceChart, f: &[f64]) -> Vec<Vector2<f64>> {
    let gs = d_sigma(&chart.grid, f);
    let gt = d_t(&chart.grid, f);
    (0..f.len())
        .map(|k| chart.jac_inv_t[k] * Vector2::new(gs[k], gt[k]))
        .collect()
}

/// Hessian with respect to x-coordinates, with the curvilinear correction
/// from the differenced coordinate map.
pub fn hess_x(chart: &SurfaceChart, f: &[f64]) -> Vec<Matrix2<f64>> {
    let gs = d_sigma(&chart.grid, f);
    let gt = d_t(&chart.grid, f);
    let hss = d2_sigma(&chart.grid, f);
    let htt = d2_t(&chart.grid, f);
    let hst = d_t(&chart.grid, &gs);
    (0..f.len())
        .map(|k| {
            let jin = chart.jac_inv_t[k];
            let g = jin * Vector2::new(gs[k], gt[k]);
            let hc = Matrix2::new(hss[k], hst[k], hst[k], htt[k]);
            let m = hc - g.x * chart.hess_x1[k] - g.y * chart.hess_x2[k];
            let h = jin * m * jin.transpose();
            // Symmetrize: the mixed stencil and the map Hessians commute only
            // to rounding.
            0.5 * (h + h.transpose())
        })
        .collect()
}

/// `theta = d11 B22 + d22 B11 - 2 d12 B12` in x-coordinates.
pub fn curl_t_curl(chart: &SurfaceChart, b: &SymFormField) -> Vec<f64> {
    let h11 = hess_x(chart, &b.b11);
    let h12 = hess_x(chart, &b.b12);
    let h22 = hess_x(chart, &b.b22);
    (0..b.len())
        .map(|k| h22[k][(0, 0)] + h11[k][(1, 1)] - 2.0 * h12[k][(0, 1)])
        .collect()
}

/// Weight selector for [`integrate_m`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MWeight {
    /// ds dt
    One,
    /// (1 - s kappa) ds dt — the x-area element
    Jacobian,
    /// ds dt / (1 - s kappa)
    InvJacobian,
    /// ds dt / (1 - s kappa)^3
    InvJacobianCubed,
}

/// Quadrature of `f * weight` over the chart strip, i.e. the `(s, t)` integral
/// with the sigma-normalization Jacobian `s^+ + s^-` included.
pub fn integrate_m(chart: &SurfaceChart, f: &[f64], weight: MWeight) -> f64 {
    let grid = &chart.grid;
    let mut acc = 0.0;
    for it in 0..grid.nt {
        let mut line = 0.0;
        for is in 0..grid.ns {
            let k = grid.idx(it, is);
            let w = match weight {
                MWeight::One => 1.0,
                MWeight::Jacobian => chart.one_minus_skappa[k],
                MWeight::InvJacobian => 1.0 / chart.one_minus_skappa[k],
                MWeight::InvJacobianCubed => 1.0 / chart.one_minus_skappa[k].powi(3),
            };
            line += grid.wsigma[is] * f[k] * w;
        }
        acc += grid.wt[it] * line * chart.width_t[it];
    }
    acc
}

/// Area-weighted mean over the chart image (the x-domain).
pub fn mean_x(chart: &SurfaceChart, f: &[f64]) -> f64 {
    integrate_m(chart, f, MWeight::Jacobian) / chart.area_x
}

// ---------------------------------------------------------------------------
// Cumulative line integration

/// Cumulative integral of uniformly spaced samples by the corrected trapezoid
/// rule: the endpoint-slope correction `-h^2/12 (f'_{k+1} - f'_k)` uses the
/// same second-order differences as the rest of the crate, which makes the
/// antiderivative exact for integrands that are polynomials of degree <= 2.
pub(crate) fn cumint(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let slope = d1_1d(f, h);
    let mut out = vec![0.0; n];
    for k in 0..n - 1 {
        out[k + 1] = out[k] + 0.5 * h * (f[k] + f[k + 1]) - h * h / 12.0 * (slope[k + 1] - slope[k]);
    }
    out
}

/// First derivative of a 1D sample line, same stencils as the grid passes.
pub(crate) fn d1_1d(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    out[0] = d1_edge(f[0], f[1], f[2], f[3], h);
    for k in 1..n - 1 {
        out[k] = (f[k + 1] - f[k - 1]) / (2.0 * h);
    }
    out[n - 1] = -d1_edge(f[n - 1], f[n - 2], f[n - 3], f[n - 4], h);
    out
}

/// Second derivative of a 1D sample line.
pub(crate) fn d2_1d(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let h2 = h * h;
    let mut out = vec![0.0; n];
    out[0] = d2_edge(f[0], f[1], f[2], f[3], f[4], h2);
    for k in 1..n - 1 {
        out[k] = (f[k + 1] - 2.0 * f[k] + f[k - 1]) / h2;
    }
    out[n - 1] = d2_edge(f[n - 1], f[n - 2], f[n - 3], f[n - 4], f[n - 5], h2);
    out
}

/// Four-point Lagrange interpolation of uniform samples at offset `x` from
/// the first node.
pub(crate) fn interp4(f: &[f64], h: f64, x: f64) -> f64 {
    let n = f.len();
    let cell = ((x / h).floor() as isize).clamp(0, n as isize - 2) as usize;
    let k0 = cell.saturating_sub(1).min(n - 4);
    let u = x / h - k0 as f64;
    let mut acc = 0.0;
    for j in 0..4 {
        let mut lj = 1.0;
        for m in 0..4 {
            if m != j {
                lj *= (u - m as f64) / (j as f64 - m as f64);
            }
        }
        acc += lj * f[k0 + j];
    }
    acc
}

// ---------------------------------------------------------------------------
// Mollification

/// Convolve 1D samples with the compactly supported bump
/// `exp(-1/(1-x^2))` scaled to the given width, renormalized discretely to
/// unit mass. The input is extended by even reflection at both endpoints.
pub fn mollify(g: &[f64], t_max: f64, width: f64) -> Result<Vec<f64>> {
    if g.len() < 8 {
        return Err(Error::Config(format!(
            "mollify needs at least 8 samples, got {}",
            g.len()
        )));
    }
    if width > t_max / 4.0 {
        return Err(Error::WidthTooLarge {
            width,
            limit: t_max / 4.0,
        });
    }
    let n = g.len();
    let h = t_max / (n - 1) as f64;
    let m = (width / h).floor() as usize;
    if m == 0 {
        return Ok(g.to_vec());
    }
    let mut kernel = Vec::with_capacity(2 * m + 1);
    for j in -(m as isize)..=(m as isize) {
        let x = j as f64 * h / width;
        kernel.push(if x.abs() < 1.0 {
            (-1.0 / (1.0 - x * x)).exp()
        } else {
            0.0
        });
    }
    let mass: f64 = kernel.iter().sum();
    for k in kernel.iter_mut() {
        *k /= mass;
    }
    let reflect = |i: isize| -> usize {
        let mut i = i;
        let last = (n - 1) as isize;
        while i < 0 || i > last {
            if i < 0 {
                i = -i;
            }
            if i > last {
                i = 2 * last - i;
            }
        }
        i as usize
    };
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for (jk, w) in kernel.iter().enumerate() {
            let j = i as isize + jk as isize - m as isize;
            acc += w * g[reflect(j)];
        }
        out[i] = acc;
    }
    Ok(out)
}
