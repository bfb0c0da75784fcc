//! Grid-refinement studies: every discrete operator must show its stated
//! consistency order on smooth data, measured by log-log regression over
//! doubled grids.

use devsurf::calculus::{self, Grid2D, MWeight, SymFormField};
use devsurf::geometry::{build_chart, integrate_darboux, CurveSpec, SurfaceChart};
use devsurf::isometry::{self, IsometryAB};
use devsurf::matching::estimate_order;
use devsurf::profile::Profile;
use devsurf::symgrad::{self, PathOrder, RecoverOptions};
use nalgebra::{Matrix3, Vector2};

fn cylinder_spec() -> CurveSpec {
    CurveSpec::new(
        2.0 * std::f64::consts::PI,
        Profile::Const(0.0),
        Profile::Const(1.0),
        Profile::Const(0.5),
        Profile::Const(0.5),
        Some(0.05),
    )
    .unwrap()
}

fn varcurv_spec() -> CurveSpec {
    CurveSpec::new(
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
    .unwrap()
}

fn chart_for(spec: &CurveSpec, nt: usize, ns: usize) -> SurfaceChart {
    let grid = Grid2D::new(spec.t_max, nt, ns).unwrap();
    let frame = integrate_darboux(spec, nt).unwrap();
    build_chart(spec, &frame, grid).unwrap()
}

/// Slope of log(err) against log(h) for (h, err) pairs.
fn slope(pairs: &[(f64, f64)]) -> f64 {
    estimate_order(pairs).unwrap().slope
}

#[test]
fn frame_ode_consistency() {
    // Centered differences of the integrated frame must match the generator
    // action to second order under step halving.
    let spec = varcurv_spec();
    let mut pairs = Vec::new();
    for &n in &[65usize, 129, 257] {
        let frame = integrate_darboux(&spec, n).unwrap();
        let h = spec.t_max / (n - 1) as f64;
        let mut err = 0.0f64;
        for i in 1..n - 1 {
            let t = frame.t_samples[i];
            let dr = (frame.r[i + 1] - frame.r[i - 1]) / (2.0 * h);
            let omega = Matrix3::new(
                0.0,
                spec.kappa.eval(t),
                spec.kappa_n.eval(t),
                -spec.kappa.eval(t),
                0.0,
                0.0,
                -spec.kappa_n.eval(t),
                0.0,
                0.0,
            );
            err = err.max((dr - omega * frame.r[i]).abs().max());
        }
        pairs.push((h, err));
    }
    let s = slope(&pairs);
    assert!(s >= 1.8, "frame ODE consistency slope {s}: {pairs:?}");
}

#[test]
fn coordinate_functions_differentiate_exactly() {
    let chart = chart_for(&varcurv_spec(), 48, 24);
    let f1: Vec<f64> = chart.phi.iter().map(|p| p.x).collect();
    let g = calculus::grad_x(&chart, &f1);
    for v in &g {
        assert!((v - Vector2::new(1.0, 0.0)).amax() < 1e-10);
    }
}

#[test]
fn quadratics_have_exact_hessians_on_flat_charts() {
    // A flat chart has affine coordinates, so second-order stencils resolve
    // quadratic polynomials of x without error.
    let spec = CurveSpec::new(
        1.0,
        Profile::Const(0.0),
        Profile::Const(0.0),
        Profile::Const(0.5),
        Profile::Const(0.5),
        Some(0.1),
    )
    .unwrap();
    let chart = chart_for(&spec, 16, 16);
    let f: Vec<f64> = chart
        .phi
        .iter()
        .map(|p| 2.0 * p.x * p.x - 3.0 * p.x * p.y + 0.5 * p.y * p.y + p.x - 2.0)
        .collect();
    let h = calculus::hess_x(&chart, &f);
    for m in &h {
        assert!((m[(0, 0)] - 4.0).abs() < 1e-8);
        assert!((m[(0, 1)] + 3.0).abs() < 1e-8);
        assert!((m[(1, 1)] - 1.0).abs() < 1e-8);
    }
}

#[test]
fn x_derivatives_second_order_on_curved_charts() {
    let spec = varcurv_spec();
    let mut grad_pairs = Vec::new();
    let mut hess_pairs = Vec::new();
    for &n in &[96usize, 192, 384] {
        let chart = chart_for(&spec, n, n / 2);
        let f: Vec<f64> = chart.phi.iter().map(|p| (p.x).sin() * (p.y).cos()).collect();
        let g = calculus::grad_x(&chart, &f);
        let h = calculus::hess_x(&chart, &f);
        let mut eg = 0.0f64;
        let mut eh = 0.0f64;
        for k in 0..chart.grid.len() {
            let p = chart.phi[k];
            let exact_g = Vector2::new(p.x.cos() * p.y.cos(), -p.x.sin() * p.y.sin());
            eg = eg.max((g[k] - exact_g).amax());
            let exact = [
                -p.x.sin() * p.y.cos(),
                -p.x.cos() * p.y.sin(),
                -p.x.sin() * p.y.cos(),
            ];
            eh = eh
                .max((h[k][(0, 0)] - exact[0]).abs())
                .max((h[k][(0, 1)] - exact[1]).abs())
                .max((h[k][(1, 1)] - exact[2]).abs());
        }
        let hbar = chart.mean_spacing();
        grad_pairs.push((hbar, eg));
        hess_pairs.push((hbar, eh));
    }
    let sg = slope(&grad_pairs);
    let sh = slope(&hess_pairs);
    assert!(sg >= 1.8, "gradient slope {sg}: {grad_pairs:?}");
    assert!(sh >= 1.8, "hessian slope {sh}: {hess_pairs:?}");
}

#[test]
fn strip_quadrature_second_order() {
    // exp(s + 0.3 t) over the cylinder strip has a closed-form integral.
    let spec = cylinder_spec();
    let t_max = spec.t_max;
    let exact = ((0.5f64).exp() - (-0.5f64).exp()) * ((0.3 * t_max).exp() - 1.0) / 0.3;
    let mut pairs = Vec::new();
    for &n in &[32usize, 64, 128] {
        let chart = chart_for(&spec, n, n);
        let f: Vec<f64> = (0..chart.grid.len())
            .map(|k| {
                let it = k / chart.grid.ns;
                (chart.s[k] + 0.3 * chart.grid.t_nodes[it]).exp()
            })
            .collect();
        let v = calculus::integrate_m(&chart, &f, MWeight::One);
        pairs.push((chart.mean_spacing(), (v - exact).abs()));
    }
    let s = slope(&pairs);
    assert!(s >= 1.8, "quadrature slope {s}: {pairs:?}");
}

#[test]
fn change_of_variables_identity() {
    // Integrating with the Jacobian weight equals the x-domain integral; for
    // f = 1 that is the chart area, computed independently from the
    // divergence-free shoelace sum over the boundary polygon.
    let chart = chart_for(&varcurv_spec(), 96, 48);
    let ones = vec![1.0; chart.grid.len()];
    let weighted = calculus::integrate_m(&chart, &ones, MWeight::Jacobian);
    // Shoelace over the boundary of the chart image.
    let mut boundary = Vec::new();
    let (nt, ns) = (chart.grid.nt, chart.grid.ns);
    for it in 0..nt {
        boundary.push(chart.phi[chart.idx(it, 0)]);
    }
    for is in 1..ns {
        boundary.push(chart.phi[chart.idx(nt - 1, is)]);
    }
    for it in (0..nt - 1).rev() {
        boundary.push(chart.phi[chart.idx(it, ns - 1)]);
    }
    for is in (1..ns - 1).rev() {
        boundary.push(chart.phi[chart.idx(0, is)]);
    }
    let mut shoelace = 0.0;
    for i in 0..boundary.len() {
        let p = boundary[i];
        let q = boundary[(i + 1) % boundary.len()];
        shoelace += p.x * q.y - q.x * p.y;
    }
    let area = 0.5 * shoelace.abs();
    assert!(
        (weighted - area).abs() < 2e-3 * area,
        "quadrature {weighted} vs shoelace {area}"
    );
}

#[test]
fn second_form_is_discretely_compatible() {
    // curl^T curl [a_ij] -> 0 at second order.
    let spec = varcurv_spec();
    let mut pairs = Vec::new();
    for &n in &[48usize, 96, 192] {
        let chart = chart_for(&spec, n, n / 2);
        let theta = calculus::curl_t_curl(&chart, &chart.a);
        let err = theta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        pairs.push((chart.mean_spacing(), err));
    }
    let s = slope(&pairs);
    assert!(s >= 1.8, "second-form compatibility slope {s}: {pairs:?}");
}

#[test]
fn ruling_ode_residual_second_order() {
    // Second s-difference of the integrated w3 against the right-hand side.
    let spec = cylinder_spec();
    let mut pairs = Vec::new();
    for &n in &[48usize, 96, 192] {
        let chart = chart_for(&spec, n, n / 2);
        let case = symgrad::manufactured_case(&chart);
        let theta = calculus::curl_t_curl(&chart, &case.b);
        let w3 = symgrad::solve_w3(&chart, &theta).unwrap();
        let mut err = 0.0f64;
        let ns = chart.grid.ns;
        let hs = chart.width_t[0] * chart.grid.hsigma();
        for it in 0..chart.grid.nt {
            for is in 1..ns - 1 {
                let k = chart.idx(it, is);
                let dss = (w3[k + 1] - 2.0 * w3[k] + w3[k - 1]) / (hs * hs);
                let rhs = -chart.one_minus_skappa[k] / chart.kappa_n_t[it] * theta[k];
                err = err.max((dss - rhs).abs());
            }
        }
        pairs.push((chart.mean_spacing(), err));
    }
    let s = slope(&pairs);
    assert!(s >= 1.8, "ruling ODE residual slope {s}: {pairs:?}");
}

#[test]
fn path_order_independence() {
    // Swapping the spine direction changes the recovered field at the
    // discretization order only.
    let spec = varcurv_spec();
    let mut pairs = Vec::new();
    for &n in &[48usize, 96] {
        let chart = chart_for(&spec, n, n / 2);
        let nlen = chart.grid.len();
        let v3: Vec<f64> = (0..nlen)
            .map(|k| {
                let it = k / chart.grid.ns;
                (chart.grid.t_nodes[it]).cos() + 0.5 * chart.s[k]
            })
            .collect();
        let e = SymFormField::from_fn(nlen, |k| {
            (
                v3[k] * chart.a.b11[k],
                v3[k] * chart.a.b12[k],
                v3[k] * chart.a.b22[k],
            )
        });
        let (w_t, _, _) = symgrad::recover_tangential(&chart, &e, &RecoverOptions::default()).unwrap();
        let (w_s, _, _) = symgrad::recover_tangential(
            &chart,
            &e,
            &RecoverOptions {
                path_order: PathOrder::SigmaSpine,
                ..Default::default()
            },
        )
        .unwrap();
        let err = (0..nlen)
            .map(|k| (w_t[k] - w_s[k]).amax())
            .fold(0.0f64, f64::max);
        pairs.push((chart.mean_spacing(), err));
    }
    // One halving: expect roughly a factor 4 decrease.
    let ratio = pairs[0].1 / pairs[1].1;
    assert!(
        ratio > 3.0,
        "path independence ratio {ratio} from {pairs:?}"
    );
}

#[test]
fn mollifier_quadratic_in_width() {
    // The even reflection at the ends is C^1 exactly when g' vanishes there;
    // with compatible ends the sup error is quadratic in the width.
    let t_max = 1.0;
    let n = 512;
    let g: Vec<f64> = (0..n)
        .map(|i| {
            let t = t_max * i as f64 / (n - 1) as f64;
            (2.0 * std::f64::consts::PI * t).cos()
                + 0.3 * (4.0 * std::f64::consts::PI * t).cos()
        })
        .collect();
    let mut pairs = Vec::new();
    for &w in &[0.08f64, 0.04, 0.02] {
        let out = calculus::mollify(&g, t_max, w).unwrap();
        let err = g
            .iter()
            .zip(&out)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        pairs.push((w, err));
    }
    let s = slope(&pairs);
    assert!(s >= 1.8, "mollifier width slope {s}: {pairs:?}");
}

#[test]
fn mollifier_smooths_a_corner() {
    let t_max = 1.0;
    let n = 256;
    let h = t_max / (n - 1) as f64;
    let g: Vec<f64> = (0..n)
        .map(|i| (i as f64 * h - 0.5f64).abs())
        .collect();
    let d2_jump = |f: &[f64]| -> f64 {
        let mut m = 0.0f64;
        let mut prev = None;
        for k in 1..f.len() - 1 {
            let d2 = (f[k + 1] - 2.0 * f[k] + f[k - 1]) / (h * h);
            if let Some(p) = prev {
                m = m.max((d2 - p) as f64);
            }
            prev = Some(d2);
        }
        m
    };
    let raw = d2_jump(&g);
    let smooth = d2_jump(&calculus::mollify(&g, t_max, 0.1).unwrap());
    assert!(
        smooth < 0.05 * raw,
        "second-difference jump {smooth} vs raw {raw}"
    );
}

#[test]
fn smooth_profiles_converge_in_sobolev_seminorms() {
    // J_i(a - a_n, b - b_n) decreases as the mollifier width shrinks.
    let chart = chart_for(&cylinder_spec(), 256, 16);
    let kinked: Vec<f64> = chart
        .grid
        .t_nodes
        .iter()
        .map(|&t| (t - 3.0f64).abs().min(1.5))
        .collect();
    let b: Vec<f64> = chart.grid.t_nodes.iter().map(|&t| 0.3 * t.sin()).collect();
    let ab = IsometryAB::from_samples(kinked, b);
    let mut last = f64::INFINITY;
    for &w in &[0.5f64, 0.25, 0.125, 0.0625] {
        let sm = isometry::smooth_ab(&chart, &ab, w).unwrap();
        let diff = IsometryAB::from_samples(
            ab.a.iter().zip(&sm.a).map(|(x, y)| x - y).collect(),
            ab.b.iter().zip(&sm.b).map(|(x, y)| x - y).collect(),
        );
        let j = isometry::sobolev_j(&chart, &diff);
        let total = j.j1 + j.j2;
        assert!(
            total < last,
            "J(a - a_n) must decrease: width {w} gives {total}, previous {last}"
        );
        last = total;
    }
}

#[test]
fn smoothed_kink_w22_distance_decreases() {
    let chart = chart_for(&cylinder_spec(), 256, 16);
    let t_nodes = &chart.grid.t_nodes;
    let ht = chart.grid.ht();
    let kinked: Vec<f64> = t_nodes.iter().map(|&t| (t - 3.0f64).abs().min(1.5)).collect();
    let ab = IsometryAB::from_samples(kinked.clone(), vec![0.0; t_nodes.len()]);
    let w22 = |f: &[f64]| -> f64 {
        let d1 = devsurf_d1(f, ht);
        let d2 = devsurf_d2(f, ht);
        let mut acc = 0.0;
        for k in 0..f.len() {
            acc += (f[k] * f[k] + d1[k] * d1[k] + d2[k] * d2[k]) * ht;
        }
        acc.sqrt()
    };
    let mut last = f64::INFINITY;
    for &w in &[0.4f64, 0.2, 0.1, 0.05] {
        let sm = isometry::smooth_ab(&chart, &ab, w).unwrap();
        let diff: Vec<f64> = kinked.iter().zip(&sm.a).map(|(x, y)| x - y).collect();
        let d = w22(&diff);
        assert!(d < last, "W^{{2,2}} distance must decrease: {d} at width {w}");
        last = d;
    }
}

fn devsurf_d1(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    for k in 1..n - 1 {
        out[k] = (f[k + 1] - f[k - 1]) / (2.0 * h);
    }
    out
}

fn devsurf_d2(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    for k in 1..n - 1 {
        out[k] = (f[k + 1] - 2.0 * f[k] + f[k - 1]) / (h * h);
    }
    out
}

#[test]
fn variable_width_strip_full_pipeline() {
    // t-dependent ruling widths exercise the sigma-normalization: the chart
    // stays isometric and developable, and the manufactured solve keeps its
    // order because the differenced chart metric absorbs the width variation.
    let spec = CurveSpec::new(
        TAU_TEST,
        Profile::Sin {
            amp: 0.2,
            omega: 1.0,
            phase: 0.0,
        },
        Profile::Const(1.0),
        Profile::Sum(vec![
            Profile::Const(0.4),
            Profile::Cos {
                amp: 0.1,
                omega: 1.0,
                phase: 0.0,
            },
        ]),
        Profile::Sum(vec![
            Profile::Const(0.5),
            Profile::Sin {
                amp: 0.1,
                omega: 1.0,
                phase: 0.5,
            },
        ]),
        None,
    )
    .unwrap();
    let mut pairs = Vec::new();
    for &n in &[64usize, 128, 256] {
        let chart = chart_for(&spec, n, n / 2);
        for k in 0..chart.grid.len() {
            let g = chart.grad_u[k];
            assert!((g.transpose() * g - nalgebra::Matrix2::identity()).abs().max() < 1e-10);
            assert!(chart.a.at(k).determinant().abs() < 1e-10);
        }
        let case = symgrad::manufactured_case(&chart);
        let (disp, report) = symgrad::solve_symgrad(&chart, &case.b).unwrap();
        let w3_err = (0..chart.grid.len())
            .map(|k| (disp.w3[k] - case.w3_expected[k]).abs())
            .fold(0.0f64, f64::max);
        assert!(w3_err < 1e-3, "w3 error {w3_err} at n = {n}");
        pairs.push((chart.mean_spacing(), report.residual_inf));
    }
    let s = slope(&pairs);
    assert!(s >= 1.8, "variable-width solve slope {s}: {pairs:?}");
}

const TAU_TEST: f64 = 2.0 * std::f64::consts::PI;

#[test]
fn built_isometry_residual_second_order() {
    // ||sym grad V||_inf of the (a, b) lift decays at the stencil order.
    let spec = varcurv_spec();
    let mut pairs = Vec::new();
    for &n in &[64usize, 128, 256] {
        let chart = chart_for(&spec, n, n / 2);
        let ab = IsometryAB::from_profiles(
            &chart,
            Profile::Cos {
                amp: 1.0,
                omega: 2.0,
                phase: 0.3,
            },
            Profile::Sin {
                amp: 0.4,
                omega: 1.0,
                phase: 0.0,
            },
        );
        let built = isometry::build_v_from_ab(&chart, &ab).unwrap();
        pairs.push((chart.mean_spacing(), built.residual));
    }
    let s = slope(&pairs);
    assert!(s >= 1.8, "isometry residual slope {s}: {pairs:?}");
}

#[test]
fn bending_energy_routes_converge_together() {
    let spec = varcurv_spec();
    let mut pairs = Vec::new();
    for &n in &[96usize, 192, 384] {
        let chart = chart_for(&spec, n, n);
        let e = devsurf::geometry::bending_energy(&chart);
        pairs.push((
            chart.mean_spacing(),
            (e.hessian_quadrature - e.closed_form).abs(),
        ));
    }
    let s = slope(&pairs);
    assert!(s >= 1.8, "energy identity slope {s}: {pairs:?}");
}
