//! Plain-text key-value surface configuration.
//!
//! ```text
//! # stock cylinder
//! T = 6.283185307179586
//! R = 1.0                  # shorthand for kappa = const:0, kappa_n = const:1/R
//! s_minus = const:0.5
//! s_plus = const:0.5
//! delta = 0.05
//! grid.nt = 256
//! grid.ns = 256
//! ```
//!
//! `kappa` and `kappa_n` accept the profile vocabulary of
//! [`Profile::parse`]; `R` is sugar for a straight generator with constant
//! normal curvature `1/R`.

use crate::calculus::Grid2D;
use crate::error::{Error, Result};
use crate::geometry::{build_chart, integrate_darboux, CurveSpec, SurfaceChart};
use crate::profile::Profile;
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct SurfaceConfig {
    pub t_max: f64,
    pub kappa: Profile,
    pub kappa_n: Profile,
    pub s_minus: Profile,
    pub s_plus: Profile,
    pub delta: Option<f64>,
    pub nt: usize,
    pub ns: usize,
    /// Resolved key-value view, echoed into every emitted JSON document.
    pub resolved: BTreeMap<String, String>,
}

impl SurfaceConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Self::from_map(map)
    }

    fn from_map(map: BTreeMap<String, String>) -> Result<Self> {
        let num = |key: &str| -> Result<f64> {
            map.get(key)
                .ok_or_else(|| Error::Config(format!("missing key {key}")))?
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("key {key}: not a number")))
        };
        let count = |key: &str, default: usize| -> Result<usize> {
            match map.get(key) {
                None => Ok(default),
                Some(v) => v
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("key {key}: not a count"))),
            }
        };
        let t_max = num("T")?;
        let (kappa, kappa_n) = if let Some(r) = map.get("R") {
            if map.contains_key("kappa") || map.contains_key("kappa_n") {
                return Err(Error::Config(
                    "give either R or kappa/kappa_n, not both".into(),
                ));
            }
            let r: f64 = r
                .parse()
                .map_err(|_| Error::Config("key R: not a number".into()))?;
            if !(r > 0.0) {
                return Err(Error::Config("R must be positive".into()));
            }
            (Profile::Const(0.0), Profile::Const(1.0 / r))
        } else {
            (
                Profile::parse(
                    map.get("kappa")
                        .ok_or_else(|| Error::Config("missing key kappa (or R)".into()))?,
                    t_max,
                )?,
                Profile::parse(
                    map.get("kappa_n")
                        .ok_or_else(|| Error::Config("missing key kappa_n (or R)".into()))?,
                    t_max,
                )?,
            )
        };
        let s_minus = Profile::parse(
            map.get("s_minus")
                .ok_or_else(|| Error::Config("missing key s_minus".into()))?,
            t_max,
        )?;
        let s_plus = Profile::parse(
            map.get("s_plus")
                .ok_or_else(|| Error::Config("missing key s_plus".into()))?,
            t_max,
        )?;
        let delta = match map.get("delta") {
            Some(v) => Some(
                v.parse::<f64>()
                    .map_err(|_| Error::Config("key delta: not a number".into()))?,
            ),
            None => None,
        };
        Ok(SurfaceConfig {
            t_max,
            kappa,
            kappa_n,
            s_minus,
            s_plus,
            delta,
            nt: count("grid.nt", 128)?,
            ns: count("grid.ns", 128)?,
            resolved: map,
        })
    }

    pub fn curve_spec(&self) -> Result<CurveSpec> {
        CurveSpec::new(
            self.t_max,
            self.kappa.clone(),
            self.kappa_n.clone(),
            self.s_minus.clone(),
            self.s_plus.clone(),
            self.delta,
        )
    }

    /// Build the chart, optionally overriding the grid from the command line.
    pub fn build(&self, grid_override: Option<(usize, usize)>) -> Result<SurfaceChart> {
        let (nt, ns) = grid_override.unwrap_or((self.nt, self.ns));
        let spec = self.curve_spec()?;
        let grid = Grid2D::new(spec.t_max, nt, ns)?;
        let frame = integrate_darboux(&spec, nt)?;
        build_chart(&spec, &frame, grid)
    }

    /// Resolved view including any grid override, for embedding in outputs.
    pub fn echo(&self, grid_override: Option<(usize, usize)>) -> BTreeMap<String, String> {
        let mut map = self.resolved.clone();
        if let Some((nt, ns)) = grid_override {
            map.insert("grid.nt".into(), nt.to_string());
            map.insert("grid.ns".into(), ns.to_string());
        }
        map.entry("grid.nt".into()).or_insert(self.nt.to_string());
        map.entry("grid.ns".into()).or_insert(self.ns.to_string());
        map
    }
}
