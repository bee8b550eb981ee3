use std::path::PathBuf;

use h4bp::connections::{ChannelLabel, ConnectionConfig};
use h4bp::dynamics::{parse_key_values, DEFAULT_MU};
use h4bp::io::fmt17;
use h4bp::orbits::grid;
use h4bp::scattering::MelnikovConfig;
use h4bp::{IntegratorConfig, ModelParams};
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MechanismChoice {
    Single,
    TwoMap,
}

impl std::str::FromStr for MechanismChoice {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "single" => Ok(Self::Single),
            "two-map" => Ok(Self::TwoMap),
            _ => Err(CliError::Config(format!("mechanism must be single or two-map, got '{s}'"))),
        }
    }
}

/// Everything a run needs; filled from defaults, then the config file, then flags.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub mu: f64,
    pub eps: f64,
    /// Anchor abscissae a:b:step.
    pub range: (f64, f64, f64),
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub seed_count: usize,
    pub displacement: f64,
    pub approach_tol: f64,
    pub tail_cut: f64,
    pub quad_tol: f64,
    pub max_horizon: f64,
    /// Chart rows (x*) × columns (θ).
    pub grid: (usize, usize),
    pub channel: ChannelLabel,
    pub mechanism: MechanismChoice,
    pub start_x: f64,
    pub start_theta: f64,
    pub steps: usize,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mu: DEFAULT_MU,
            eps: 1e-3,
            range: (0.615, 0.63, 0.005),
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            seed_count: 2000,
            displacement: 1e-6,
            approach_tol: 3e-4,
            tail_cut: 1e-12,
            quad_tol: 1e-9,
            max_horizon: 40.0,
            grid: (4, 161),
            channel: ChannelLabel::HetZ1,
            mechanism: MechanismChoice::TwoMap,
            start_x: 0.628,
            start_theta: 0.0,
            steps: 200,
            out: PathBuf::from("out"),
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim().parse().map_err(|_| CliError::Config(format!("bad value for {key}: '{v}'")))
}

pub fn parse_range(v: &str) -> Result<(f64, f64, f64), CliError> {
    let parts: Vec<&str> = v.split(':').collect();
    match parts.as_slice() {
        [a, b, s] => Ok((num("range", a)?, num("range", b)?, num("range", s)?)),
        [a, b] => Ok((num("range", a)?, num("range", b)?, 0.005)),
        _ => Err(CliError::Config(format!("range must be A:B:STEP, got '{v}'"))),
    }
}

pub fn parse_grid(v: &str) -> Result<(usize, usize), CliError> {
    let (n, m) = v
        .split_once(['x', 'X'])
        .ok_or_else(|| CliError::Config(format!("grid must be NxM, got '{v}'")))?;
    Ok((num("grid", n)?, num("grid", m)?))
}

impl RunConfig {
    /// Applies `key = value` settings.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (k, v) in parse_key_values(text)? {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<(), CliError> {
        match key {
            "mu" => self.mu = num(key, v)?,
            "eps" => self.eps = num(key, v)?,
            "range" => self.range = parse_range(v)?,
            "tol" => {
                self.abs_tol = num(key, v)?;
                self.rel_tol = self.abs_tol;
            }
            "abs_tol" => self.abs_tol = num(key, v)?,
            "rel_tol" => self.rel_tol = num(key, v)?,
            "seed_count" => self.seed_count = num(key, v)?,
            "displacement" => self.displacement = num(key, v)?,
            "approach_tol" => self.approach_tol = num(key, v)?,
            "tail_cut" => self.tail_cut = num(key, v)?,
            "quad_tol" => self.quad_tol = num(key, v)?,
            "max_horizon" => self.max_horizon = num(key, v)?,
            "grid" => self.grid = parse_grid(v)?,
            "channel" => self.channel = v.parse()?,
            "mechanism" => self.mechanism = v.parse()?,
            "start_x" => self.start_x = num(key, v)?,
            "start_theta" => self.start_theta = num(key, v)?,
            "steps" => self.steps = num(key, v)?,
            "out" => self.out = PathBuf::from(v),
            _ => return Err(CliError::Config(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.params()?;
        self.integrator().validate()?;
        self.melnikov().validate()?;
        self.x_values()?;
        if self.seed_count < 10 {
            return Err(CliError::Config("seed_count must be at least 10".into()));
        }
        if !(self.displacement > 0.0 && self.displacement < 1e-2) {
            return Err(CliError::Config(format!("displacement {} not in (0, 1e-2)", self.displacement)));
        }
        if self.grid.0 == 0 || self.grid.1 == 0 {
            return Err(CliError::Config("grid dimensions must be positive".into()));
        }
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        Ok(ModelParams::new(self.mu, self.eps)?)
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig { abs_tol: self.abs_tol, rel_tol: self.rel_tol, ..IntegratorConfig::default() }
    }

    pub fn connection(&self) -> ConnectionConfig {
        ConnectionConfig {
            n_seeds: self.seed_count,
            displacement: self.displacement,
            approach_tol: self.approach_tol,
            ..ConnectionConfig::default()
        }
    }

    pub fn melnikov(&self) -> MelnikovConfig {
        MelnikovConfig { tail_cut: self.tail_cut, quad_tol: self.quad_tol, max_horizon: self.max_horizon }
    }

    pub fn x_values(&self) -> Result<Vec<f64>, CliError> {
        Ok(grid(self.range.0, self.range.1, self.range.2)?)
    }

    /// Canonical text of the settings that determine unperturbed connections.
    pub fn cache_key_text(&self) -> String {
        format!(
            "mu={}\nabs_tol={}\nrel_tol={}\nseed_count={}\ndisplacement={}\n",
            fmt17(self.mu),
            fmt17(self.abs_tol),
            fmt17(self.rel_tol),
            self.seed_count,
            fmt17(self.displacement)
        )
    }
}
