use crate::Command;
use devsurf::error::{Error, Result};
use devsurf::gammalimit::{self, MaterialModel, ShellSweep};
use devsurf::geometry::{bending_energy, check_admissibility};
use devsurf::isometry::{self, IsometryAB};
use devsurf::matching;
use devsurf::profile::Profile;
use devsurf::symgrad;
use devsurf::{io as dio, SurfaceChart, SurfaceConfig};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Io(_) => 2,
        Error::NonAdmissibleCurve(_)
        | Error::ChartDegenerate { .. }
        | Error::MeanCurvatureVanishes { .. } => 3,
        Error::ScalingViolation { .. } => 5,
        _ => 4,
    }
}

/// Outputs are collected in memory and flushed together, so a failing run
/// leaves no partial files behind.
struct OutputSet {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    fn new(dir: &Path) -> Self {
        OutputSet {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    fn flush(self) -> Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        for (name, bytes) in self.files {
            let path = self.dir.join(&name);
            std::fs::write(&path, bytes)?;
            println!("wrote {}", path.display());
        }
        Ok(())
    }
}

fn parse_grid(spec: &Option<String>) -> Result<Option<(usize, usize)>> {
    match spec {
        None => Ok(None),
        Some(s) => {
            let (nt, ns) = s
                .split_once(['x', 'X'])
                .ok_or_else(|| Error::Config(format!("grid {s:?}: expected NTxNS")))?;
            let parse = |v: &str| {
                v.parse::<usize>()
                    .map_err(|_| Error::Config(format!("grid {s:?}: bad count")))
            };
            Ok(Some((parse(nt)?, parse(ns)?)))
        }
    }
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("{what} list: bad number {v:?}")))
        })
        .collect()
}

fn load(
    config: &Path,
    grid: &Option<String>,
) -> Result<(SurfaceConfig, SurfaceChart, BTreeMap<String, String>)> {
    let cfg = SurfaceConfig::from_file(config)?;
    let grid_override = parse_grid(grid)?;
    let chart = cfg.build(grid_override)?;
    let echo = cfg.echo(grid_override);
    Ok((cfg, chart, echo))
}

fn profile_pair(
    cfg: &SurfaceConfig,
    a: &Option<String>,
    b: &Option<String>,
) -> Result<(Profile, Profile)> {
    let a = match a {
        Some(text) => Profile::parse(text, cfg.t_max)?,
        None => return Err(Error::Config("missing --a profile".into())),
    };
    let b = match b {
        Some(text) => Profile::parse(text, cfg.t_max)?,
        None => Profile::Const(0.0),
    };
    Ok((a, b))
}

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Build { config, grid, out } => build(&config, &grid, &out),
        Command::Solve {
            config,
            grid,
            b,
            out,
        } => solve(&config, &grid, &b, &out),
        Command::Classify {
            config,
            grid,
            a,
            b,
            v3,
            out,
        } => classify(&config, &grid, &a, &b, &v3, &out),
        Command::Match {
            config,
            grid,
            order,
            a,
            b,
            eps,
            out,
        } => run_match(&config, &grid, order, &a, &b, &eps, &out),
        Command::Gamma {
            config,
            grid,
            order,
            beta,
            h,
            h0,
            mu,
            lambda,
            a,
            b,
            out,
        } => gamma(&config, &grid, order, beta, &h, h0, mu, lambda, &a, &b, &out),
        Command::Export {
            config,
            grid,
            a,
            b,
            order,
            eps,
            out,
        } => export(&config, &grid, &a, &b, order, eps, &out),
    }
}

fn build(config: &Path, grid: &Option<String>, out: &Path) -> Result<()> {
    let (_cfg, chart, echo) = load(config, grid)?;
    let report = check_admissibility(&chart.spec, &chart.frame);
    let energy = bending_energy(&chart);

    let mut outputs = OutputSet::new(out);
    let mut buf = Vec::new();
    dio::write_chart_json(&mut buf, &chart, &echo)?;
    outputs.add("chart.json", buf);
    let mut buf = Vec::new();
    dio::write_admissibility_json(&mut buf, &report, &energy, &echo)?;
    outputs.add("admissibility.json", buf);
    outputs.flush()?;

    if !report.all_pass() {
        return Err(Error::NonAdmissibleCurve(
            "one or more admissibility checks failed (see admissibility.json)".into(),
        ));
    }
    println!(
        "admissibility: rulings_disjoint={} band_ok={} mean_curvature_ok={}",
        report.rulings_disjoint, report.band_ok, report.mean_curvature_ok
    );
    Ok(())
}

fn solve(config: &Path, grid: &Option<String>, b_spec: &str, out: &Path) -> Result<()> {
    let (_cfg, chart, echo) = load(config, grid)?;
    let n = chart.grid.len();
    let (b, expected) = if b_spec == "manufactured" {
        let case = symgrad::manufactured_case(&chart);
        (case.b.clone(), Some(case))
    } else if let Some(path) = b_spec.strip_prefix("csv:") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {path}: {e}")))?;
        (dio::read_form_csv(&text, n)?, None)
    } else {
        return Err(Error::Config(format!(
            "--b must be `manufactured` or `csv:<path>`, got {b_spec:?}"
        )));
    };

    let (disp, report) = symgrad::solve_symgrad(&chart, &b)?;

    let mut outputs = OutputSet::new(out);
    let mut buf = Vec::new();
    dio::write_displacement_json(&mut buf, &chart, &disp, Some(&report), &echo)?;
    outputs.add("displacement.json", buf);
    let mut buf = Vec::new();
    dio::write_displacement_csv(&mut buf, &chart, &disp)?;
    outputs.add("displacement.csv", buf);

    if let Some(case) = expected {
        let w3_err = (0..n)
            .map(|k| (disp.w3[k] - case.w3_expected[k]).abs())
            .fold(0.0f64, f64::max);
        let wp_err = (0..n)
            .map(|k| (disp.w_prime[k] - case.w_prime_expected[k]).amax())
            .fold(0.0f64, f64::max);
        let value = serde_json_bytes(&serde_json::json!({
            "config": echo,
            "residual": report,
            "w3_error_inf": w3_err,
            "w_prime_error_inf": wp_err,
        }))?;
        outputs.add("residual.json", value);
        println!("manufactured: w3 error {w3_err:.3e}, w' error {wp_err:.3e}");
    } else {
        let value = serde_json_bytes(&serde_json::json!({
            "config": echo,
            "residual": report,
        }))?;
        outputs.add("residual.json", value);
    }
    println!("residual |sym grad w - B| = {:.3e}", report.residual_inf);
    outputs.flush()
}

fn serde_json_bytes(value: &serde_json::Value) -> Result<Vec<u8>> {
    let mut buf =
        serde_json::to_vec_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    buf.push(b'\n');
    Ok(buf)
}

fn classify(
    config: &Path,
    grid: &Option<String>,
    a: &Option<String>,
    b: &Option<String>,
    v3: &Option<String>,
    out: &Path,
) -> Result<()> {
    let (cfg, chart, echo) = load(config, grid)?;
    let (ab, fit_residual) = match (v3, a) {
        (Some(spec), _) => {
            let path = spec.strip_prefix("csv:").ok_or_else(|| {
                Error::Config(format!("--v3 must be csv:<path>, got {spec:?}"))
            })?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {path}: {e}")))?;
            let field = dio::read_scalar_csv(&text, chart.grid.len())?;
            isometry::extract_ab(&chart, &field)
        }
        (None, Some(_)) => {
            let (pa, pb) = profile_pair(&cfg, a, b)?;
            let ab = IsometryAB::from_profiles(&chart, pa, pb);
            let built = isometry::build_v_from_ab(&chart, &ab)?;
            let (_, fit) = isometry::extract_ab(&chart, &built.displacement.w3);
            (ab, fit)
        }
        (None, None) => {
            return Err(Error::Config(
                "classify needs either --a (with optional --b) or --v3".into(),
            ))
        }
    };

    let built = isometry::build_v_from_ab(&chart, &ab)?;
    let j = isometry::sobolev_j(&chart, &ab);
    let tolerance = isometry::membership_tolerance(&chart);
    let member = fit_residual <= tolerance && built.residual <= tolerance;

    let mut outputs = OutputSet::new(out);
    let mut buf = Vec::new();
    dio::write_ab_csv(&mut buf, &chart.grid.t_nodes, &ab)?;
    outputs.add("ab.csv", buf);
    // Also as two-column profile files, readable back via `table:<path>`.
    let mut buf = Vec::new();
    dio::write_profile_csv(&mut buf, &chart.grid.t_nodes, &ab.a)?;
    outputs.add("a.csv", buf);
    let mut buf = Vec::new();
    dio::write_profile_csv(&mut buf, &chart.grid.t_nodes, &ab.b)?;
    outputs.add("b.csv", buf);
    let mut buf = Vec::new();
    dio::write_classify_json(
        &mut buf,
        &j,
        fit_residual,
        built.residual,
        tolerance,
        member,
        &echo,
    )?;
    outputs.add("classify.json", buf);
    println!(
        "J1 = {:.6e}, J2 = {:.6e}, member = {member} (fit {fit_residual:.3e}, sym {:.3e})",
        j.j1, j.j2, built.residual
    );
    outputs.flush()
}

#[allow(clippy::too_many_arguments)]
fn run_match(
    config: &Path,
    grid: &Option<String>,
    order: usize,
    a: &str,
    b: &Option<String>,
    eps: &str,
    out: &Path,
) -> Result<()> {
    let (cfg, chart, echo) = load(config, grid)?;
    let (pa, pb) = profile_pair(&cfg, &Some(a.to_string()), b)?;
    let ab = IsometryAB::from_profiles(&chart, pa, pb);
    let v = isometry::build_v_from_ab(&chart, &ab)?.displacement;
    let family = matching::match_to_order(&chart, v, order)?;
    let eps_list = parse_list(eps, "eps")?;
    let points = matching::defect_sweep(&chart, &family, &eps_list);
    let estimate = matching::estimate_order(&points)?;

    let mut outputs = OutputSet::new(out);
    let mut buf = Vec::new();
    dio::write_defects_csv(&mut buf, order, &points)?;
    outputs.add("defects.csv", buf);
    let mut buf = Vec::new();
    dio::write_order_json(&mut buf, &estimate, &points, &echo)?;
    outputs.add("order.json", buf);
    println!(
        "order {order}: measured slope {:.4} over {} points",
        estimate.slope, estimate.points_used
    );
    outputs.flush()
}

#[allow(clippy::too_many_arguments)]
fn gamma(
    config: &Path,
    grid: &Option<String>,
    order: usize,
    beta: f64,
    h: &str,
    h0: f64,
    mu: f64,
    lambda: f64,
    a: &str,
    b: &Option<String>,
    out: &Path,
) -> Result<()> {
    let (cfg, chart, echo) = load(config, grid)?;
    let (pa, pb) = profile_pair(&cfg, &Some(a.to_string()), b)?;
    let ab = IsometryAB::from_profiles(&chart, pa, pb);
    let v = isometry::build_v_from_ab(&chart, &ab)?.displacement;
    let family = matching::match_to_order(&chart, v, order)?;
    let sweep = ShellSweep::new(parse_list(h, "h")?, h0, beta)?;
    let model = MaterialModel::new(mu, lambda);
    let result = gammalimit::gamma_gap(&chart, &family, &sweep, &model)?;

    let mut outputs = OutputSet::new(out);
    let mut buf = Vec::new();
    dio::write_gamma_csv(&mut buf, &result)?;
    outputs.add("gamma.csv", buf);
    let mut buf = Vec::new();
    dio::write_gamma_json(&mut buf, &result, &echo)?;
    outputs.add("gamma.json", buf);
    println!("I(V) = {:.6e}", result.limit);
    for row in &result.rows {
        println!(
            "h = {:<12} ratio = {:.6e} gap = {:.3e} vh_err = {:.3e}",
            row.h, row.ratio, row.gap, row.vh_err
        );
    }
    outputs.flush()
}

fn export(
    config: &Path,
    grid: &Option<String>,
    a: &Option<String>,
    b: &Option<String>,
    order: Option<usize>,
    eps: Option<f64>,
    out: &Path,
) -> Result<()> {
    let (cfg, chart, _echo) = load(config, grid)?;
    let mut outputs = OutputSet::new(out);
    let mut buf = Vec::new();
    dio::write_obj(&mut buf, &chart, &chart.u)?;
    outputs.add("surface.obj", buf);

    if let Some(a) = a {
        let eps = eps.ok_or_else(|| Error::Config("deformed export needs --eps".into()))?;
        let order = order.unwrap_or(1);
        let (pa, pb) = profile_pair(&cfg, &Some(a.clone()), b)?;
        let ab = IsometryAB::from_profiles(&chart, pa, pb);
        let v = isometry::build_v_from_ab(&chart, &ab)?.displacement;
        let family = matching::match_to_order(&chart, v, order)?;
        let deformed = family.values(&chart, eps);
        let mut buf = Vec::new();
        dio::write_obj(&mut buf, &chart, &deformed)?;
        outputs.add("deformed.obj", buf);
    }
    outputs.flush()
}
