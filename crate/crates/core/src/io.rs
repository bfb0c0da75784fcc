//! File emission and ingestion: JSON documents with the resolved config
//! embedded, CSV tables (one row per node or sweep point), and OBJ meshes.
//!
//! Floats are written with the shortest round-trip formatting, so repeated
//! runs produce byte-identical files.

use crate::calculus::SymFormField;
use crate::error::{Error, Result};
use crate::gammalimit::GammaSweepResult;
use crate::geometry::{AdmissibilityReport, BendingEnergy, SurfaceChart};
use crate::isometry::{IsometryAB, SobolevIntegrals};
use crate::matching::OrderEstimate;
use crate::symgrad::{Displacement, SolveReport};
use nalgebra::Vector3;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::io::Write;

type ConfigEcho = BTreeMap<String, String>;

fn write_json<W: Write>(mut w: W, value: &Value) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Config(e.to_string()))?;
    writeln!(w)?;
    Ok(())
}

pub fn chart_json(chart: &SurfaceChart, config: &ConfigEcho) -> Value {
    let n = chart.grid.len();
    let u: Vec<[f64; 3]> = chart.u.iter().map(|v| [v.x, v.y, v.z]).collect();
    let grad_u: Vec<[f64; 6]> = chart
        .grad_u
        .iter()
        .map(|g| {
            [
                g[(0, 0)],
                g[(1, 0)],
                g[(2, 0)],
                g[(0, 1)],
                g[(1, 1)],
                g[(2, 1)],
            ]
        })
        .collect();
    let a: Vec<[f64; 3]> = (0..n)
        .map(|k| [chart.a.b11[k], chart.a.b12[k], chart.a.b22[k]])
        .collect();
    let phi: Vec<[f64; 2]> = chart.phi.iter().map(|p| [p.x, p.y]).collect();
    json!({
        "config": config,
        "grid": {
            "nt": chart.grid.nt,
            "ns": chart.grid.ns,
            "t_nodes": chart.grid.t_nodes,
            "sigma_nodes": chart.grid.sigma_nodes,
        },
        "nodes": {
            "u": u,
            "grad_u": grad_u,
            "a": a,
            "phi": phi,
            "jac": chart.jac_phi_det,
        },
    })
}

pub fn write_chart_json<W: Write>(w: W, chart: &SurfaceChart, config: &ConfigEcho) -> Result<()> {
    write_json(w, &chart_json(chart, config))
}

pub fn write_admissibility_json<W: Write>(
    w: W,
    report: &AdmissibilityReport,
    energy: &BendingEnergy,
    config: &ConfigEcho,
) -> Result<()> {
    write_json(
        w,
        &json!({
            "config": config,
            "report": report,
            "all_pass": report.all_pass(),
            "bending_energy": energy,
        }),
    )
}

pub fn write_displacement_json<W: Write>(
    w: W,
    chart: &SurfaceChart,
    disp: &Displacement,
    report: Option<&SolveReport>,
    config: &ConfigEcho,
) -> Result<()> {
    let n = chart.grid.len();
    let w_prime: Vec<[f64; 2]> = disp.w_prime.iter().map(|v| [v.x, v.y]).collect();
    write_json(
        w,
        &json!({
            "config": config,
            "grid": { "nt": chart.grid.nt, "ns": chart.grid.ns },
            "w_prime": w_prime,
            "w3": disp.w3,
            "nodes": n,
            "report": report,
        }),
    )
}

pub fn write_displacement_csv<W: Write>(
    mut w: W,
    chart: &SurfaceChart,
    disp: &Displacement,
) -> Result<()> {
    writeln!(w, "t,sigma,s,w1,w2,w3")?;
    for it in 0..chart.grid.nt {
        for is in 0..chart.grid.ns {
            let k = chart.grid.idx(it, is);
            writeln!(
                w,
                "{},{},{},{},{},{}",
                chart.grid.t_nodes[it],
                chart.grid.sigma_nodes[is],
                chart.s[k],
                disp.w_prime[k].x,
                disp.w_prime[k].y,
                disp.w3[k]
            )?;
        }
    }
    Ok(())
}

/// Sym-form field as CSV, one node per row.
pub fn write_form_csv<W: Write>(mut w: W, chart: &SurfaceChart, b: &SymFormField) -> Result<()> {
    writeln!(w, "t,sigma,s,b11,b12,b22")?;
    for it in 0..chart.grid.nt {
        for is in 0..chart.grid.ns {
            let k = chart.grid.idx(it, is);
            writeln!(
                w,
                "{},{},{},{},{},{}",
                chart.grid.t_nodes[it],
                chart.grid.sigma_nodes[is],
                chart.s[k],
                b.b11[k],
                b.b12[k],
                b.b22[k]
            )?;
        }
    }
    Ok(())
}

/// Read a sym-form field from CSV rows in node order; the three form
/// components are the last three columns of each row.
pub fn read_form_csv(text: &str, expected: usize) -> Result<SymFormField> {
    let mut b = SymFormField::zeros(expected);
    let mut k = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with("t,")) {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 3 {
            return Err(Error::Config(format!(
                "form csv line {}: expected at least 3 columns",
                lineno + 1
            )));
        }
        if k >= expected {
            return Err(Error::Config("form csv has too many rows".into()));
        }
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("form csv line {}: bad number", lineno + 1)))
        };
        let base = cols.len() - 3;
        b.b11[k] = num(cols[base])?;
        b.b12[k] = num(cols[base + 1])?;
        b.b22[k] = num(cols[base + 2])?;
        k += 1;
    }
    if k != expected {
        return Err(Error::Config(format!(
            "form csv has {k} rows, grid needs {expected}"
        )));
    }
    Ok(b)
}

/// Scalar field from `t,sigma,value` rows in node order.
pub fn read_scalar_csv(text: &str, expected: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(expected);
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with("t,")) {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        let value = cols
            .last()
            .unwrap()
            .trim()
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("scalar csv line {}: bad number", lineno + 1)))?;
        out.push(value);
    }
    if out.len() != expected {
        return Err(Error::Config(format!(
            "scalar csv has {} rows, grid needs {expected}",
            out.len()
        )));
    }
    Ok(out)
}

/// Two-column `t,value` profile file; readable back through the
/// `table:<path>` profile vocabulary.
pub fn write_profile_csv<W: Write>(mut w: W, t_nodes: &[f64], values: &[f64]) -> Result<()> {
    writeln!(w, "t,value")?;
    for it in 0..t_nodes.len() {
        writeln!(w, "{},{}", t_nodes[it], values[it])?;
    }
    Ok(())
}

pub fn write_ab_csv<W: Write>(mut w: W, t_nodes: &[f64], ab: &IsometryAB) -> Result<()> {
    writeln!(w, "t,a,b")?;
    for it in 0..t_nodes.len() {
        writeln!(w, "{},{},{}", t_nodes[it], ab.a[it], ab.b[it])?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn write_classify_json<W: Write>(
    w: W,
    j: &SobolevIntegrals,
    fit_residual: f64,
    sym_residual: f64,
    tolerance: f64,
    member: bool,
    config: &ConfigEcho,
) -> Result<()> {
    write_json(
        w,
        &json!({
            "config": config,
            "j1": j.j1,
            "j2": j.j2,
            "fit_residual": fit_residual,
            "sym_residual": sym_residual,
            "membership_tolerance": tolerance,
            "member": member,
        }),
    )
}

pub fn write_defects_csv<W: Write>(mut w: W, order: usize, points: &[(f64, f64)]) -> Result<()> {
    writeln!(w, "eps,defect,order")?;
    for (eps, defect) in points {
        writeln!(w, "{eps},{defect},{order}")?;
    }
    Ok(())
}

pub fn write_order_json<W: Write>(
    w: W,
    estimate: &OrderEstimate,
    points: &[(f64, f64)],
    config: &ConfigEcho,
) -> Result<()> {
    let pts: Vec<[f64; 2]> = points.iter().map(|&(e, d)| [e, d]).collect();
    write_json(
        w,
        &json!({
            "config": config,
            "estimate": estimate,
            "points": pts,
        }),
    )
}

pub fn write_gamma_csv<W: Write>(mut w: W, result: &GammaSweepResult) -> Result<()> {
    writeln!(w, "h,e_h,energy,ratio,limit,gap,vh_err")?;
    for r in &result.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.h, r.e_h, r.energy, r.ratio, r.limit, r.gap, r.vh_err
        )?;
    }
    Ok(())
}

pub fn write_gamma_json<W: Write>(
    w: W,
    result: &GammaSweepResult,
    config: &ConfigEcho,
) -> Result<()> {
    write_json(
        w,
        &json!({
            "config": config,
            "limit": result.limit,
            "rows": result.rows,
        }),
    )
}

/// Triangulated OBJ mesh of a vector field sampled on the grid (vertex and
/// face lines only).
pub fn write_obj<W: Write>(mut w: W, chart: &SurfaceChart, points: &[Vector3<f64>]) -> Result<()> {
    for p in points {
        writeln!(w, "v {} {} {}", p.x, p.y, p.z)?;
    }
    let ns = chart.grid.ns;
    for it in 0..chart.grid.nt - 1 {
        for is in 0..ns - 1 {
            let p00 = it * ns + is + 1;
            let p10 = (it + 1) * ns + is + 1;
            let p11 = (it + 1) * ns + is + 2;
            let p01 = it * ns + is + 2;
            writeln!(w, "f {p00} {p10} {p11}")?;
            writeln!(w, "f {p00} {p11} {p01}")?;
        }
    }
    Ok(())
}
