//! One-dimensional data profiles on `[0, T]`.
//!
//! Curvatures and ruling widths are accepted either as closed-form terms
//! (constants, trigonometric terms, polynomials) or as uniformly sampled
//! tables with cubic interpolation. Profiles carry analytic first and second
//! derivatives so downstream quadratures never have to difference them.

use crate::error::{Error, Result};
use serde::Serialize;

/// A scalar function of `t` with analytic first and second derivatives.
#[derive(Debug, Clone, Serialize)]
pub enum Profile {
    Const(f64),
    /// `amp * sin(omega * t + phase)`
    Sin { amp: f64, omega: f64, phase: f64 },
    /// `amp * cos(omega * t + phase)`
    Cos { amp: f64, omega: f64, phase: f64 },
    /// `c0 + c1 t + c2 t^2 + ...`
    Poly(Vec<f64>),
    /// Natural cubic spline through uniform samples.
    Table(CubicSpline),
    /// Pointwise sum of terms.
    Sum(Vec<Profile>),
}

impl Profile {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Profile::Const(c) => *c,
            Profile::Sin { amp, omega, phase } => amp * (omega * t + phase).sin(),
            Profile::Cos { amp, omega, phase } => amp * (omega * t + phase).cos(),
            Profile::Poly(c) => horner(c, t).0,
            Profile::Table(s) => s.eval(t),
            Profile::Sum(terms) => terms.iter().map(|p| p.eval(t)).sum(),
        }
    }

    pub fn d1(&self, t: f64) -> f64 {
        match self {
            Profile::Const(_) => 0.0,
            Profile::Sin { amp, omega, phase } => amp * omega * (omega * t + phase).cos(),
            Profile::Cos { amp, omega, phase } => -amp * omega * (omega * t + phase).sin(),
            Profile::Poly(c) => horner(c, t).1,
            Profile::Table(s) => s.d1(t),
            Profile::Sum(terms) => terms.iter().map(|p| p.d1(t)).sum(),
        }
    }

    pub fn d2(&self, t: f64) -> f64 {
        match self {
            Profile::Const(_) => 0.0,
            Profile::Sin { amp, omega, phase } => -amp * omega * omega * (omega * t + phase).sin(),
            Profile::Cos { amp, omega, phase } => -amp * omega * omega * (omega * t + phase).cos(),
            Profile::Poly(c) => horner(c, t).2,
            Profile::Table(s) => s.d2(t),
            Profile::Sum(terms) => terms.iter().map(|p| p.d2(t)).sum(),
        }
    }

    /// Parse the profile vocabulary used in config files and on the CLI.
    ///
    /// A profile is a whitespace-separated sum of terms:
    /// `const:<c>`, `sin:<amp>:<omega>[:<phase>]`, `cos:<amp>:<omega>[:<phase>]`,
    /// `poly:<c0>,<c1>,...`, `table:<path>`. The bare words `sin` and `cos`
    /// abbreviate amplitude 1 with one full period over `[0, T]`.
    pub fn parse(text: &str, period: f64) -> Result<Profile> {
        let mut terms = Vec::new();
        for raw in text.split_whitespace() {
            terms.push(parse_term(raw, period)?);
        }
        match terms.len() {
            0 => Err(Error::Config(format!("empty profile: {text:?}"))),
            1 => Ok(terms.pop().unwrap()),
            _ => Ok(Profile::Sum(terms)),
        }
    }
}

fn parse_term(raw: &str, period: f64) -> Result<Profile> {
    let bad = |msg: &str| Error::Config(format!("profile term {raw:?}: {msg}"));
    let mut parts = raw.split(':');
    let head = parts.next().unwrap_or("");
    let rest: Vec<&str> = parts.collect();
    let num = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::Config(format!("profile term {raw:?}: bad number {s:?}")))
    };
    let default_omega = 2.0 * std::f64::consts::PI / period;
    match head {
        "const" => match rest.as_slice() {
            [c] => Ok(Profile::Const(num(c)?)),
            _ => Err(bad("expected const:<c>")),
        },
        "sin" | "cos" => {
            let (amp, omega, phase) = match rest.as_slice() {
                [] => (1.0, default_omega, 0.0),
                [a] => (num(a)?, default_omega, 0.0),
                [a, w] => (num(a)?, num(w)?, 0.0),
                [a, w, p] => (num(a)?, num(w)?, num(p)?),
                _ => return Err(bad("expected at most amp:omega:phase")),
            };
            Ok(if head == "sin" {
                Profile::Sin { amp, omega, phase }
            } else {
                Profile::Cos { amp, omega, phase }
            })
        }
        "poly" => match rest.as_slice() {
            [coeffs] => {
                let c: Result<Vec<f64>> = coeffs.split(',').map(num).collect();
                let c = c?;
                if c.is_empty() {
                    return Err(bad("empty coefficient list"));
                }
                Ok(Profile::Poly(c))
            }
            _ => Err(bad("expected poly:<c0>,<c1>,...")),
        },
        "table" => match rest.as_slice() {
            [path] => {
                let text = std::fs::read_to_string(path)?;
                let samples = parse_table_csv(&text)?;
                Ok(Profile::Table(CubicSpline::uniform(period, samples)?))
            }
            _ => Err(bad("expected table:<path>")),
        },
        _ => Err(bad("unknown term kind")),
    }
}

/// Two-column CSV `t,value`; the t column must be uniform from 0 to T.
fn parse_table_csv(text: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 2 {
            return Err(Error::Config(format!(
                "table line {}: expected two columns, got {}",
                lineno + 1,
                cols.len()
            )));
        }
        // Skip a header row.
        if lineno == 0 && cols[1].parse::<f64>().is_err() {
            continue;
        }
        let v = cols[1]
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("table line {}: bad value", lineno + 1)))?;
        values.push(v);
    }
    Ok(values)
}

fn horner(coeffs: &[f64], t: f64) -> (f64, f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    let mut d2p = 0.0;
    for &c in coeffs.iter().rev() {
        d2p = d2p * t + 2.0 * dp;
        dp = dp * t + p;
        p = p * t + c;
    }
    (p, dp, d2p)
}

/// Natural cubic spline through samples uniformly spaced on `[0, T]`.
#[derive(Debug, Clone, Serialize)]
pub struct CubicSpline {
    period: f64,
    values: Vec<f64>,
    /// Second derivatives at the knots (natural boundary conditions).
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn uniform(period: f64, values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 4 {
            return Err(Error::Config(format!(
                "sampled profiles need at least 4 samples, got {n}"
            )));
        }
        if !(period > 0.0) {
            return Err(Error::Config("table period must be positive".into()));
        }
        let h = period / (n - 1) as f64;
        // Interior knot second derivatives solve m_{i-1} + 4 m_i + m_{i+1} =
        // 6 (y_{i+1} - 2 y_i + y_{i-1}) / h^2 with natural ends m_0 = m_{n-1} = 0.
        let unknowns = n - 2;
        let mut rhs = vec![0.0; unknowns];
        for i in 1..n - 1 {
            rhs[i - 1] = 6.0 * (values[i + 1] - 2.0 * values[i] + values[i - 1]) / (h * h);
        }
        let mut c_prime = vec![0.0; unknowns];
        let mut d_prime = vec![0.0; unknowns];
        c_prime[0] = 0.25;
        d_prime[0] = rhs[0] / 4.0;
        for i in 1..unknowns {
            let denom = 4.0 - c_prime[i - 1];
            c_prime[i] = 1.0 / denom;
            d_prime[i] = (rhs[i] - d_prime[i - 1]) / denom;
        }
        let mut m = vec![0.0; n];
        m[unknowns] = d_prime[unknowns - 1];
        for i in (0..unknowns - 1).rev() {
            m[i + 1] = d_prime[i] - c_prime[i] * m[i + 2];
        }
        Ok(CubicSpline { period, values, m })
    }

    fn locate(&self, t: f64) -> (usize, f64, f64) {
        let n = self.values.len();
        let h = self.period / (n - 1) as f64;
        let pos = (t / h).floor();
        let k = (pos.max(0.0) as usize).min(n - 2);
        (k, t - k as f64 * h, h)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let (k, x, h) = self.locate(t);
        let (a, b) = (self.values[k], self.values[k + 1]);
        let (ma, mb) = (self.m[k], self.m[k + 1]);
        let u = x / h;
        a * (1.0 - u) + b * u
            + ((1.0 - u) * ((1.0 - u) * (1.0 - u) - 1.0) * ma + u * (u * u - 1.0) * mb) * h * h
                / 6.0
    }

    pub fn d1(&self, t: f64) -> f64 {
        let (k, x, h) = self.locate(t);
        let (a, b) = (self.values[k], self.values[k + 1]);
        let (ma, mb) = (self.m[k], self.m[k + 1]);
        let u = x / h;
        (b - a) / h + h * ((3.0 * u * u - 1.0) * mb - (3.0 * (1.0 - u) * (1.0 - u) - 1.0) * ma) / 6.0
    }

    pub fn d2(&self, t: f64) -> f64 {
        let (k, x, h) = self.locate(t);
        let u = x / h;
        self.m[k] * (1.0 - u) + self.m[k + 1] * u
    }
}
