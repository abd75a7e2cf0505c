//! Flat `key = value` experiment configuration with `#` comments.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::minimize::DescentOptions;
use super::potential::{Potential, Shape};
use crate::elliptic::SolverConfig;
use crate::error::{Error, Result};
use crate::grid::{DomainMask, GridSpec};
use crate::smallmat::{packed_len, SmallMat};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainShape {
    Box,
    Ball,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MSetting {
    Auto,
    Value(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShapeId {
    None,
    Gaussian,
    Fourier,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WarmStart {
    Quadratic,
    Bump,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Option<String>,
    pub n: usize,
    pub points_per_axis: usize,
    /// Overrides `points_per_axis` when set.
    pub h: Option<f64>,
    pub half_width: f64,
    pub domain: DomainShape,
    /// Ball radius; defaults to `half_width`.
    pub radius: Option<f64>,
    pub radii: Vec<f64>,
    pub m: MSetting,
    pub delta: Option<f64>,
    /// Packed upper triangle of the quadratic's Hessian; identity by default.
    pub quad: Option<Vec<f64>>,
    pub linear: Option<Vec<f64>>,
    pub eta: f64,
    pub shape: ShapeId,
    pub shape_width: f64,
    pub shape_center: Option<Vec<f64>>,
    pub wavevector: Option<Vec<f64>>,
    pub shape_phase: f64,
    pub warm_start: WarmStart,
    pub bump_amplitude: f64,
    pub bump_width: f64,
    pub solver_tol: f64,
    pub solver_max_iter: Option<usize>,
    pub grad_tol: Option<f64>,
    pub max_steps: usize,
    pub armijo: f64,
    pub min_step: f64,
    pub seed: Option<u64>,
    pub trials: usize,
    pub functional: String,
    pub y_points: usize,
    pub inner_radius: f64,
    pub min_ellipticity: f64,
    pub decay_threshold: f64,
    pub deviation_tol: f64,
    pub residual_tol: f64,
    pub trend_factor: f64,
    pub dump: bool,
    pub out: Option<PathBuf>,
    pub verbose: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            n: 2,
            points_per_axis: 33,
            h: None,
            half_width: 1.0,
            domain: DomainShape::Box,
            radius: None,
            radii: Vec::new(),
            m: MSetting::Auto,
            delta: None,
            quad: None,
            linear: None,
            eta: 0.0,
            shape: ShapeId::Gaussian,
            shape_width: 1.0,
            shape_center: None,
            wavevector: None,
            shape_phase: 0.0,
            warm_start: WarmStart::Quadratic,
            bump_amplitude: 0.1,
            bump_width: 0.5,
            solver_tol: 1e-10,
            solver_max_iter: None,
            grad_tol: None,
            max_steps: 5000,
            armijo: 1e-4,
            min_step: 1e-14,
            seed: None,
            trials: 50,
            functional: "all".into(),
            y_points: 129,
            inner_radius: 1.0,
            min_ellipticity: 0.2,
            decay_threshold: 0.9,
            deviation_tol: 1e-6,
            residual_tol: 1e-10,
            trend_factor: 1.1,
            dump: false,
            out: None,
            verbose: false,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    let v = v.trim().trim_start_matches('[').trim_end_matches(']');
    v.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).map(|s| parse_num(key, s)).collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got '{v}'"))),
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(", ")
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", no + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "experiment" => self.experiment = Some(v.to_string()),
            "n" => self.n = parse_num(key, v)?,
            "points_per_axis" => self.points_per_axis = parse_num(key, v)?,
            "h" => self.h = Some(parse_num(key, v)?),
            "half_width" => self.half_width = parse_num(key, v)?,
            "domain" => {
                self.domain = match v {
                    "box" => DomainShape::Box,
                    "ball" => DomainShape::Ball,
                    _ => return Err(Error::Config(format!("domain: expected box or ball, got '{v}'"))),
                }
            }
            "radius" => self.radius = Some(parse_num(key, v)?),
            "radii" => self.radii = parse_list(key, v)?,
            "m" | "M" => self.m = if v == "auto" { MSetting::Auto } else { MSetting::Value(parse_num(key, v)?) },
            "delta" => self.delta = Some(parse_num(key, v)?),
            "quad" => self.quad = Some(parse_list(key, v)?),
            "linear" => self.linear = Some(parse_list(key, v)?),
            "eta" => self.eta = parse_num(key, v)?,
            "shape" => {
                self.shape = match v {
                    "none" => ShapeId::None,
                    "gaussian" => ShapeId::Gaussian,
                    "fourier" => ShapeId::Fourier,
                    _ => return Err(Error::Config(format!("shape: expected none, gaussian or fourier, got '{v}'"))),
                }
            }
            "shape_width" => self.shape_width = parse_num(key, v)?,
            "shape_center" => self.shape_center = Some(parse_list(key, v)?),
            "wavevector" => self.wavevector = Some(parse_list(key, v)?),
            "shape_phase" => self.shape_phase = parse_num(key, v)?,
            "warm_start" => {
                self.warm_start = match v {
                    "quadratic" => WarmStart::Quadratic,
                    "bump" => WarmStart::Bump,
                    _ => return Err(Error::Config(format!("warm_start: expected quadratic or bump, got '{v}'"))),
                }
            }
            "bump_amplitude" => self.bump_amplitude = parse_num(key, v)?,
            "bump_width" => self.bump_width = parse_num(key, v)?,
            "solver_tol" => self.solver_tol = parse_num(key, v)?,
            "solver_max_iter" => self.solver_max_iter = Some(parse_num(key, v)?),
            "grad_tol" => self.grad_tol = Some(parse_num(key, v)?),
            "max_steps" => self.max_steps = parse_num(key, v)?,
            "armijo" => self.armijo = parse_num(key, v)?,
            "min_step" => self.min_step = parse_num(key, v)?,
            "seed" => self.seed = Some(parse_num(key, v)?),
            "trials" => self.trials = parse_num(key, v)?,
            "functional" => self.functional = v.to_string(),
            "y_points" => self.y_points = parse_num(key, v)?,
            "inner_radius" => self.inner_radius = parse_num(key, v)?,
            "min_ellipticity" => self.min_ellipticity = parse_num(key, v)?,
            "decay_threshold" => self.decay_threshold = parse_num(key, v)?,
            "deviation_tol" => self.deviation_tol = parse_num(key, v)?,
            "residual_tol" => self.residual_tol = parse_num(key, v)?,
            "trend_factor" => self.trend_factor = parse_num(key, v)?,
            "dump" => self.dump = parse_bool(key, v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "verbose" => self.verbose = parse_bool(key, v)?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(1..=4).contains(&self.n) {
            return bad(format!("n must lie in 1..=4, got {}", self.n));
        }
        if self.points_per_axis < 5 {
            return bad("points_per_axis must be at least 5".into());
        }
        let positive = [
            ("h", self.h),
            ("half_width", Some(self.half_width)),
            ("radius", self.radius),
            ("delta", self.delta),
            ("shape_width", Some(self.shape_width)),
            ("bump_width", Some(self.bump_width)),
            ("grad_tol", self.grad_tol),
            ("min_step", Some(self.min_step)),
            ("inner_radius", Some(self.inner_radius)),
            ("decay_threshold", Some(self.decay_threshold)),
            ("deviation_tol", Some(self.deviation_tol)),
            ("residual_tol", Some(self.residual_tol)),
            ("trend_factor", Some(self.trend_factor)),
        ];
        for (k, v) in positive {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return bad(format!("{k} must be positive and finite, got {v}"));
                }
            }
        }
        let finite = [("eta", self.eta), ("bump_amplitude", self.bump_amplitude), ("shape_phase", self.shape_phase)];
        for (k, v) in finite {
            if !v.is_finite() {
                return bad(format!("{k} must be finite"));
            }
        }
        if let MSetting::Value(m) = self.m {
            if !(m >= 0.0 && m.is_finite()) {
                return bad(format!("M must be non-negative and finite, got {m}"));
            }
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return bad(format!("armijo must lie in (0, 1), got {}", self.armijo));
        }
        if !(self.min_ellipticity > 0.0 && self.min_ellipticity <= 1.0) {
            return bad("min_ellipticity must lie in (0, 1]".into());
        }
        if self.radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) || self.radii.windows(2).any(|w| w[0] >= w[1]) {
            return bad("radii must be positive and strictly increasing".into());
        }
        if let Some(q) = &self.quad {
            if q.len() != packed_len(self.n) {
                return bad(format!("quad needs {} packed entries for n = {}", packed_len(self.n), self.n));
            }
        }
        for (k, v) in [("linear", &self.linear), ("shape_center", &self.shape_center), ("wavevector", &self.wavevector)]
        {
            if let Some(v) = v {
                if v.len() != self.n || v.iter().any(|x| !x.is_finite()) {
                    return bad(format!("{k} needs {} finite entries", self.n));
                }
            }
        }
        if self.y_points < 5 || self.y_points.is_multiple_of(2) {
            return bad("y_points must be odd and at least 5".into());
        }
        self.solver().validate()
    }

    /// Fails unless a seed is configured.
    pub fn require_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::Config("this experiment is randomized and needs a seed".into()))
    }

    pub fn grid(&self, half_width: f64) -> Result<GridSpec<f64>> {
        match self.h {
            Some(h) => GridSpec::centered_with_spacing(self.n, h, half_width),
            None => GridSpec::centered(self.n, self.points_per_axis, half_width),
        }
    }

    pub fn mask(&self, spec: &GridSpec<f64>) -> DomainMask<f64> {
        match self.domain {
            DomainShape::Box => DomainMask::full_box(spec),
            DomainShape::Ball => DomainMask::ball(spec, &vec![0.0; self.n], self.radius.unwrap_or(self.half_width)),
        }
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig { tolerance: self.solver_tol, max_iterations: self.solver_max_iter, verbose: self.verbose }
    }

    pub fn descent(&self) -> DescentOptions {
        DescentOptions {
            grad_tol: self.grad_tol,
            max_steps: self.max_steps,
            armijo: self.armijo,
            min_step: self.min_step,
            verbose: self.verbose,
        }
    }

    pub fn quadratic_matrix(&self) -> SmallMat<f64> {
        match &self.quad {
            Some(q) => SmallMat::from_packed(self.n, q),
            None => SmallMat::identity(self.n),
        }
    }

    pub fn quadratic(&self) -> Result<Potential> {
        let p = Potential::quadratic(self.quadratic_matrix())?;
        match &self.linear {
            Some(b) => p.with_linear(b.clone()),
            None => Ok(p),
        }
    }

    pub fn perturbation_shape(&self) -> Option<Shape> {
        match self.shape {
            ShapeId::None => None,
            ShapeId::Gaussian => Some(Shape::Gaussian {
                center: self.shape_center.clone().unwrap_or_else(|| vec![0.0; self.n]),
                width: self.shape_width,
            }),
            ShapeId::Fourier => Some(Shape::Fourier {
                wavevector: self.wavevector.clone().unwrap_or_else(|| {
                    let mut k = vec![0.0; self.n];
                    k[0] = 1.0;
                    k
                }),
                phase: self.shape_phase,
            }),
        }
    }

    /// Quadratic plus `eta` times the configured shape.
    pub fn potential(&self) -> Result<Potential> {
        let p = self.quadratic()?;
        match self.perturbation_shape() {
            Some(s) if self.eta != 0.0 => p.with_term(self.eta, s),
            _ => Ok(p),
        }
    }

    /// `config.key = value` lines in a fixed order.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "config.{k} = {v}");
        };
        put("experiment", self.experiment.clone().unwrap_or_else(|| "-".into()));
        put("n", self.n.to_string());
        put("points_per_axis", self.points_per_axis.to_string());
        put("h", self.h.map_or("-".into(), |v| v.to_string()));
        put("half_width", self.half_width.to_string());
        put("domain", format!("{:?}", self.domain).to_lowercase());
        put("radius", self.radius.map_or("-".into(), |v| v.to_string()));
        put("radii", fmt_list(&self.radii));
        put(
            "m",
            match self.m {
                MSetting::Auto => "auto".into(),
                MSetting::Value(v) => v.to_string(),
            },
        );
        put("delta", self.delta.map_or("-".into(), |v| v.to_string()));
        put("quad", self.quad.as_deref().map_or("identity".into(), fmt_list));
        put("linear", self.linear.as_deref().map_or("-".into(), fmt_list));
        put("eta", self.eta.to_string());
        put("shape", format!("{:?}", self.shape).to_lowercase());
        put("shape_width", self.shape_width.to_string());
        put("shape_center", self.shape_center.as_deref().map_or("-".into(), fmt_list));
        put("wavevector", self.wavevector.as_deref().map_or("-".into(), fmt_list));
        put("shape_phase", self.shape_phase.to_string());
        put("warm_start", format!("{:?}", self.warm_start).to_lowercase());
        put("bump_amplitude", self.bump_amplitude.to_string());
        put("bump_width", self.bump_width.to_string());
        put("solver_tol", self.solver_tol.to_string());
        put("solver_max_iter", self.solver_max_iter.map_or("-".into(), |v| v.to_string()));
        put("grad_tol", self.grad_tol.map_or("-".into(), |v| v.to_string()));
        put("max_steps", self.max_steps.to_string());
        put("armijo", self.armijo.to_string());
        put("min_step", self.min_step.to_string());
        put("seed", self.seed.map_or("-".into(), |v| v.to_string()));
        put("trials", self.trials.to_string());
        put("functional", self.functional.clone());
        put("y_points", self.y_points.to_string());
        put("inner_radius", self.inner_radius.to_string());
        put("min_ellipticity", self.min_ellipticity.to_string());
        put("decay_threshold", self.decay_threshold.to_string());
        put("deviation_tol", self.deviation_tol.to_string());
        put("residual_tol", self.residual_tol.to_string());
        put("trend_factor", self.trend_factor.to_string());
        s
    }
}
