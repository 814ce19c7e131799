//! Run settings and the plain-text configuration file.
//!
//! A configuration file holds one `key = value` pair per line; blank lines
//! and lines starting with `#` are ignored. Settings are resolved as
//! built-in defaults, then the file, then command-line flags.

use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::dual::Dual;
use crate::error::{Error, Result};
use crate::estimators::{EstimatorOptions, Method};
use crate::experiments::{OptimizeSettings, ScanSettings};
use crate::simulator::{DetectorParams, Mode, SimConfig};

/// The subcommands a [`Settings`] value can drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Scan,
    Gradstats,
    Optimize,
    Display,
}

impl Command {
    pub const ALL: [Command; 4] = [Command::Scan, Command::Gradstats, Command::Optimize, Command::Display];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::Scan => "scan",
            Command::Gradstats => "gradstats",
            Command::Optimize => "optimize",
            Command::Display => "display",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown command `{s}`")))
    }
}

/// Every tunable of a run, fully materialised.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub seed: u64,
    pub threads: usize,
    /// `None` runs both modes (gradient tables only).
    pub mode: Option<Mode>,
    pub methods: Vec<Method>,
    pub n: usize,
    pub theta: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub points: usize,
    pub poly_degree: usize,
    pub fd_eps: f64,
    pub central_diff: bool,
    pub common_seed: bool,
    pub coupling: bool,
    pub replicas: usize,
    pub steps: usize,
    pub batch: usize,
    pub lr: f64,
    pub theta_init: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub grid: usize,
    pub extent: f64,
    pub event: u64,
    pub sharpness: f64,
    pub seg_freq: f64,
    pub r_max: f64,
    pub step_size: f64,
    pub e_init: f64,
    pub e_threshold: f64,
    pub eloss: f64,
    pub opening_angle: f64,
    pub target_radius: f64,
    pub max_steps: usize,
    pub world_radius: f64,
    pub start_x: f64,
    pub start_y: f64,
    pub direction: Option<f64>,
}

impl Settings {
    /// Built-in defaults for `command`.
    pub fn defaults(command: Command) -> Self {
        let sim = SimConfig::default();
        let params = DetectorParams::default();
        let opts = EstimatorOptions::default();
        let opt = OptimizeSettings::default();
        let (mode, n) = match command {
            Command::Scan => (Some(Mode::EnergyLoss), 1000),
            Command::Gradstats => (None, 5000),
            Command::Optimize => (Some(Mode::Shower), 2),
            Command::Display => (Some(Mode::Shower), 1),
        };
        Self {
            seed: 0,
            threads: 0,
            mode,
            methods: Method::ALL.to_vec(),
            n,
            theta: 2.5,
            theta_min: 0.5,
            theta_max: 4.0,
            points: 15,
            poly_degree: 6,
            fd_eps: opts.fd_eps,
            central_diff: opts.central,
            common_seed: opts.common_seed,
            coupling: opts.coupling,
            replicas: opt.replicas,
            steps: opt.steps,
            batch: opt.batch,
            lr: opt.lr,
            theta_init: opt.theta_init,
            theta_lo: opt.theta_bounds.0,
            theta_hi: opt.theta_bounds.1,
            grid: 200,
            extent: 6.0,
            event: 0,
            sharpness: params.sharpness,
            seg_freq: params.seg_freq,
            r_max: params.r_max,
            step_size: sim.step_size,
            e_init: sim.e_init,
            e_threshold: sim.e_threshold,
            eloss: sim.eloss,
            opening_angle: sim.opening_angle,
            target_radius: sim.target_radius,
            max_steps: sim.max_steps,
            world_radius: sim.world_radius,
            start_x: sim.start[0],
            start_y: sim.start[1],
            direction: sim.direction,
        }
    }

    /// Sets one value from its textual form.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "seed" => self.seed = parse(key, value)?,
            "threads" => self.threads = parse(key, value)?,
            "mode" => {
                self.mode = match value {
                    "both" => None,
                    v => Some(v.parse()?),
                }
            }
            "methods" => {
                self.methods = value
                    .split(',')
                    .map(|m| m.trim().parse())
                    .collect::<Result<Vec<Method>>>()?;
            }
            "n" => self.n = parse(key, value)?,
            "theta" => self.theta = parse(key, value)?,
            "theta_min" => self.theta_min = parse(key, value)?,
            "theta_max" => self.theta_max = parse(key, value)?,
            "points" => self.points = parse(key, value)?,
            "poly_degree" => self.poly_degree = parse(key, value)?,
            "fd_eps" => self.fd_eps = parse(key, value)?,
            "central_diff" => self.central_diff = parse_bool(key, value)?,
            "common_seed" => self.common_seed = parse_bool(key, value)?,
            "coupling" => self.coupling = parse_bool(key, value)?,
            "replicas" => self.replicas = parse(key, value)?,
            "steps" => self.steps = parse(key, value)?,
            "batch" => self.batch = parse(key, value)?,
            "lr" => self.lr = parse(key, value)?,
            "theta_init" => self.theta_init = parse(key, value)?,
            "theta_lo" => self.theta_lo = parse(key, value)?,
            "theta_hi" => self.theta_hi = parse(key, value)?,
            "grid" => self.grid = parse(key, value)?,
            "extent" => self.extent = parse(key, value)?,
            "event" => self.event = parse(key, value)?,
            "sharpness" => self.sharpness = parse(key, value)?,
            "seg_freq" => self.seg_freq = parse(key, value)?,
            "r_max" => self.r_max = parse(key, value)?,
            "step_size" => self.step_size = parse(key, value)?,
            "e_init" => self.e_init = parse(key, value)?,
            "e_threshold" => self.e_threshold = parse(key, value)?,
            "eloss" => self.eloss = parse(key, value)?,
            "opening_angle" => self.opening_angle = parse(key, value)?,
            "target_radius" => self.target_radius = parse(key, value)?,
            "max_steps" => self.max_steps = parse(key, value)?,
            "world_radius" => self.world_radius = parse(key, value)?,
            "start_x" => self.start_x = parse(key, value)?,
            "start_y" => self.start_y = parse(key, value)?,
            "direction" => {
                self.direction = match value {
                    "random" => None,
                    v => Some(parse(key, v)?),
                }
            }
            other => return Err(Error::Config(format!("unknown setting `{other}`"))),
        }
        Ok(())
    }

    /// Every setting as `(key, value)`; feeding these back through
    /// [`Settings::apply`] reproduces `self` exactly.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let methods: Vec<&str> = self.methods.iter().map(|m| m.as_str()).collect();
        let pairs: Vec<(&str, String)> = vec![
            ("seed", self.seed.to_string()),
            ("threads", self.threads.to_string()),
            ("mode", self.mode.map_or("both", Mode::as_str).to_string()),
            ("methods", methods.join(",")),
            ("n", self.n.to_string()),
            ("theta", self.theta.to_string()),
            ("theta_min", self.theta_min.to_string()),
            ("theta_max", self.theta_max.to_string()),
            ("points", self.points.to_string()),
            ("poly_degree", self.poly_degree.to_string()),
            ("fd_eps", self.fd_eps.to_string()),
            ("central_diff", self.central_diff.to_string()),
            ("common_seed", self.common_seed.to_string()),
            ("coupling", self.coupling.to_string()),
            ("replicas", self.replicas.to_string()),
            ("steps", self.steps.to_string()),
            ("batch", self.batch.to_string()),
            ("lr", self.lr.to_string()),
            ("theta_init", self.theta_init.to_string()),
            ("theta_lo", self.theta_lo.to_string()),
            ("theta_hi", self.theta_hi.to_string()),
            ("grid", self.grid.to_string()),
            ("extent", self.extent.to_string()),
            ("event", self.event.to_string()),
            ("sharpness", self.sharpness.to_string()),
            ("seg_freq", self.seg_freq.to_string()),
            ("r_max", self.r_max.to_string()),
            ("step_size", self.step_size.to_string()),
            ("e_init", self.e_init.to_string()),
            ("e_threshold", self.e_threshold.to_string()),
            ("eloss", self.eloss.to_string()),
            ("opening_angle", self.opening_angle.to_string()),
            ("target_radius", self.target_radius.to_string()),
            ("max_steps", self.max_steps.to_string()),
            ("world_radius", self.world_radius.to_string()),
            ("start_x", self.start_x.to_string()),
            ("start_y", self.start_y.to_string()),
            ("direction", self.direction.map_or("random".to_string(), |d| d.to_string())),
        ];
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// Applies every `key = value` line of a configuration file's text.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            self.apply(key.trim(), value)
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        self.apply_text(&std::fs::read_to_string(path)?)
    }

    /// Renders the settings in configuration-file syntax.
    pub fn to_text(&self) -> String {
        self.to_pairs().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(what.to_string()))
            }
        };
        check(self.n >= 1, "n must be at least 1")?;
        check(self.points >= 1, "points must be at least 1")?;
        check(self.theta_min <= self.theta_max, "theta_min must not exceed theta_max")?;
        check(self.fd_eps > 0.0, "fd_eps must be positive")?;
        check(self.replicas >= 1, "replicas must be at least 1")?;
        check(self.steps >= 1, "steps must be at least 1")?;
        check(self.batch >= 1, "batch must be at least 1")?;
        check(self.lr > 0.0 && self.lr.is_finite(), "lr must be positive")?;
        check(self.theta_lo < self.theta_hi, "theta_lo must be below theta_hi")?;
        check(self.grid >= 1, "grid must be at least 1")?;
        check(self.extent > 0.0, "extent must be positive")?;
        check(!self.methods.is_empty(), "methods must not be empty")?;
        self.sim_config(Mode::Shower).validate()?;
        self.params(self.theta).validate()
    }

    pub fn sim_config(&self, mode: Mode) -> SimConfig {
        SimConfig {
            mode,
            step_size: self.step_size,
            e_init: self.e_init,
            e_threshold: self.e_threshold,
            eloss: self.eloss,
            opening_angle: self.opening_angle,
            target_radius: self.target_radius,
            max_steps: self.max_steps,
            world_radius: self.world_radius,
            start: [self.start_x, self.start_y],
            direction: self.direction,
        }
    }

    /// Detector parameters with `theta_r` seeded for differentiation.
    pub fn params(&self, theta: f64) -> DetectorParams {
        DetectorParams {
            theta_r: Dual::seed(theta),
            sharpness: self.sharpness,
            seg_freq: self.seg_freq,
            r_max: self.r_max,
        }
    }

    pub fn estimator_options(&self) -> EstimatorOptions {
        EstimatorOptions {
            fd_eps: self.fd_eps,
            central: self.central_diff,
            common_seed: self.common_seed,
            coupling: self.coupling,
        }
    }

    pub fn scan_settings(&self) -> ScanSettings {
        ScanSettings {
            grid: ScanSettings::linspace(self.theta_min, self.theta_max, self.points),
            n_per_point: self.n,
            methods: self.methods.clone(),
            poly_degree: self.poly_degree,
            seed: self.seed,
        }
    }

    pub fn optimize_settings(&self) -> OptimizeSettings {
        OptimizeSettings {
            replicas: self.replicas,
            steps: self.steps,
            batch: self.batch,
            lr: self.lr,
            theta_init: self.theta_init,
            theta_bounds: (self.theta_lo, self.theta_hi),
            seed: self.seed,
        }
    }

    /// Modes a command runs over.
    pub fn modes(&self) -> Vec<Mode> {
        match self.mode {
            Some(m) => vec![m],
            None => vec![Mode::EnergyLoss, Mode::Shower],
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: Display,
{
    value.parse().map_err(|e| Error::Config(format!("{key}: cannot parse `{value}`: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got `{value}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_round_trip() {
        for command in Command::ALL {
            let mut s = Settings::defaults(command);
            s.theta = 0.1 + 0.2;
            s.direction = Some(1.0 / 3.0);
            let mut back = Settings::defaults(Command::Scan);
            for (k, v) in s.to_pairs() {
                back.apply(&k, &v).unwrap();
            }
            assert_eq!(back, s);
        }
    }

    #[test]
    fn text_round_trip_and_comments() {
        let mut s = Settings::defaults(Command::Gradstats);
        s.apply_text("# comment\n\nseed = 42\nmethods = stochad, score\nmode=shower\n").unwrap();
        assert_eq!(s.seed, 42);
        assert_eq!(s.methods, vec![Method::StochAd, Method::Score]);
        assert_eq!(s.mode, Some(Mode::Shower));
        let mut t = Settings::defaults(Command::Display);
        t.apply_text(&s.to_text()).unwrap();
        assert_eq!(t, s);
    }

    #[test]
    fn bad_input_is_reported() {
        let mut s = Settings::defaults(Command::Scan);
        assert!(s.apply("nope", "1").is_err());
        assert!(s.apply("n", "-3").is_err());
        assert!(s.apply("coupling", "maybe").is_err());
        assert!(s.apply_text("seed 4").is_err());
        s.apply("steps", "0").unwrap();
        assert!(s.validate().is_err());
    }

    #[test]
    fn defaults_validate() {
        for command in Command::ALL {
            Settings::defaults(command).validate().unwrap();
        }
        assert_eq!(Settings::defaults(Command::Gradstats).modes().len(), 2);
    }
}
