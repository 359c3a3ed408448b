//! Key-value run configuration with strict parsing.
//!
//! The config file is plain `key = value` lines with `#` comments. Unknown
//! keys are fatal (a typo must never silently fall back to a default), and
//! every constraint violation names the key. Command-line flags override
//! file values; file values override built-in defaults; the `LSL_OUT_DIR`
//! environment variable supplies the output directory when neither flag
//! nor file sets one.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lsl_core::design::ParamDomain;
use lsl_core::error::{Error, Result};
use lsl_core::harness::{DesignKind, NoiseRegime, SimSpec};
use lsl_core::io::fmt_f64;
use lsl_core::loss::{LinkFn, LossFamily};
use lsl_core::re::ReMode;

pub const ALLOWED_KEYS: &[&str] = &[
    "seed",
    "threads",
    "out_dir",
    "timestamps",
    "trials",
    "n",
    "p",
    "s0",
    "design",
    "design_file",
    "response_file",
    "response_column",
    "csv_header",
    "family",
    "link",
    "sigma0",
    "noise_var",
    "box_lo",
    "box_hi",
    "theta_star",
    "interval_lo",
    "interval_hi",
    "m",
    "q",
    "qprime",
    "q1",
    "q2",
    "k_cone",
    "s",
    "re_mode",
    "budget_random",
    "budget_hillclimb",
    "max_iter",
    "kkt_tol",
    "restarts",
    "lambda",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignChoice {
    Rademacher,
    Uniform,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyChoice {
    Logistic,
    Gaussian,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReModeChoice {
    Auto,
    Exact,
    Heuristic,
}

/// Fully validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub threads: Option<usize>,
    pub out_dir: PathBuf,
    pub timestamps: bool,
    pub trials: usize,
    pub n: usize,
    pub p: usize,
    pub s0: usize,
    pub design: DesignChoice,
    pub design_file: Option<PathBuf>,
    pub response_file: Option<PathBuf>,
    pub response_column: Option<String>,
    pub csv_header: bool,
    pub family: FamilyChoice,
    pub link: LinkFn,
    pub sigma0: f64,
    pub noise_var: Option<f64>,
    pub box_lo: f64,
    pub box_hi: f64,
    pub theta_star: Option<Vec<f64>>,
    pub interval: Option<(f64, f64)>,
    pub m: usize,
    pub q: f64,
    pub qprime: f64,
    pub q1: f64,
    pub q2: f64,
    pub k_cone: f64,
    pub s: usize,
    pub re_mode: ReModeChoice,
    pub budget_random: usize,
    pub budget_hillclimb: usize,
    pub max_iter: usize,
    pub kkt_tol: f64,
    pub restarts: usize,
    pub lambda: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            threads: None,
            out_dir: PathBuf::from("."),
            timestamps: false,
            trials: 200,
            n: 100,
            p: 8,
            s0: 2,
            design: DesignChoice::Rademacher,
            design_file: None,
            response_file: None,
            response_column: None,
            csv_header: false,
            family: FamilyChoice::Logistic,
            link: LinkFn::Identity,
            sigma0: 1.0,
            noise_var: None,
            box_lo: -0.5,
            box_hi: 0.5,
            theta_star: None,
            interval: None,
            m: 1,
            q: 0.05,
            qprime: 0.05,
            q1: 0.05,
            q2: 0.05,
            k_cone: 3.0,
            s: 1,
            re_mode: ReModeChoice::Auto,
            budget_random: 4096,
            budget_hillclimb: 200,
            max_iter: 10_000,
            kkt_tol: 1e-8,
            restarts: 16,
            lambda: None,
        }
    }
}

/// Flag-level overrides; `None` means the flag was not given.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub timestamps: bool,
    pub trials: Option<usize>,
    pub design_file: Option<PathBuf>,
    pub response_file: Option<PathBuf>,
    pub q: Option<f64>,
    pub qprime: Option<f64>,
    pub q1: Option<f64>,
    pub q2: Option<f64>,
    pub k_cone: Option<f64>,
    pub s: Option<usize>,
    pub m: Option<usize>,
    pub p: Option<usize>,
    pub n: Option<usize>,
    pub re_mode: Option<String>,
    pub lambda: Option<f64>,
}

struct RawConfig {
    path: String,
    map: BTreeMap<String, (String, usize)>,
}

impl RawConfig {
    fn parse_text(path_label: &str, text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    path: path_label.to_string(),
                    line: idx + 1,
                    msg: format!("expected `key = value`, got `{line}`"),
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !ALLOWED_KEYS.contains(&key.as_str()) {
                return Err(Error::Parse {
                    path: path_label.to_string(),
                    line: idx + 1,
                    msg: format!("unknown key `{key}`"),
                });
            }
            if map.insert(key.clone(), (value, idx + 1)).is_some() {
                return Err(Error::Parse {
                    path: path_label.to_string(),
                    line: idx + 1,
                    msg: format!("duplicate key `{key}`"),
                });
            }
        }
        Ok(Self {
            path: path_label.to_string(),
            map,
        })
    }

    fn parse_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_text(&path.display().to_string(), &text)
    }

    fn err(&self, key: &str, msg: String) -> Error {
        let line = self.map.get(key).map(|(_, l)| *l).unwrap_or(0);
        Error::Parse {
            path: self.path.clone(),
            line,
            msg: format!("key `{key}`: {msg}"),
        }
    }

    fn get<T: std::str::FromStr>(&self, key: &str, kind: &str) -> Result<Option<T>> {
        match self.map.get(key) {
            None => Ok(None),
            Some((v, _)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| self.err(key, format!("`{v}` is not a valid {kind}"))),
        }
    }

    fn get_bool(&self, key: &str) -> Result<Option<bool>> {
        match self.map.get(key) {
            None => Ok(None),
            Some((v, _)) => match v.as_str() {
                "true" | "yes" | "1" => Ok(Some(true)),
                "false" | "no" | "0" => Ok(Some(false)),
                other => Err(self.err(key, format!("`{other}` is not a boolean"))),
            },
        }
    }

    fn get_str(&self, key: &str) -> Option<String> {
        self.map.get(key).map(|(v, _)| v.clone())
    }
}

impl RunConfig {
    /// Merge defaults, the optional config file, and flag overrides, then
    /// validate every constraint.
    pub fn load(path: Option<&Path>, ov: &Overrides) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Ok(dir) = std::env::var("LSL_OUT_DIR") {
            if !dir.is_empty() {
                cfg.out_dir = PathBuf::from(dir);
            }
        }
        if let Some(p) = path {
            cfg.apply_file(&RawConfig::parse_file(p)?)?;
        }
        cfg.apply_overrides(ov)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse from in-memory text (used by the round-trip tests).
    #[cfg(test)]
    pub fn load_text(label: &str, text: &str, ov: &Overrides) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_file(&RawConfig::parse_text(label, text)?)?;
        cfg.apply_overrides(ov)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_file(&mut self, raw: &RawConfig) -> Result<()> {
        if let Some(v) = raw.get::<u64>("seed", "unsigned integer")? {
            self.seed = v;
        }
        if let Some(v) = raw.get::<usize>("threads", "thread count")? {
            self.threads = Some(v);
        }
        if let Some(v) = raw.get_str("out_dir") {
            self.out_dir = PathBuf::from(v);
        }
        if let Some(v) = raw.get_bool("timestamps")? {
            self.timestamps = v;
        }
        if let Some(v) = raw.get::<usize>("trials", "count")? {
            self.trials = v;
        }
        if let Some(v) = raw.get::<usize>("n", "count")? {
            self.n = v;
        }
        if let Some(v) = raw.get::<usize>("p", "count")? {
            self.p = v;
        }
        if let Some(v) = raw.get::<usize>("s0", "count")? {
            self.s0 = v;
        }
        if let Some(v) = raw.get_str("design") {
            self.design = match v.as_str() {
                "rademacher" => DesignChoice::Rademacher,
                "uniform" => DesignChoice::Uniform,
                "file" => DesignChoice::File,
                other => {
                    return Err(raw.err(
                        "design",
                        format!("`{other}` is not one of rademacher|uniform|file"),
                    ))
                }
            };
        }
        if let Some(v) = raw.get_str("design_file") {
            self.design_file = Some(PathBuf::from(v));
        }
        if let Some(v) = raw.get_str("response_file") {
            self.response_file = Some(PathBuf::from(v));
        }
        if let Some(v) = raw.get_str("response_column") {
            self.response_column = Some(v);
        }
        if let Some(v) = raw.get_bool("csv_header")? {
            self.csv_header = v;
        }
        if let Some(v) = raw.get_str("family") {
            self.family = match v.as_str() {
                "logistic" => FamilyChoice::Logistic,
                "gaussian" => FamilyChoice::Gaussian,
                "poisson" => FamilyChoice::Poisson,
                other => {
                    return Err(raw.err(
                        "family",
                        format!("`{other}` is not one of logistic|gaussian|poisson"),
                    ))
                }
            };
        }
        if let Some(v) = raw.get_str("link") {
            self.link = match v.as_str() {
                "identity" => LinkFn::Identity,
                "sigmoid" => LinkFn::Sigmoid,
                "tanh" => LinkFn::Tanh,
                other => {
                    return Err(raw.err(
                        "link",
                        format!("`{other}` is not one of identity|sigmoid|tanh"),
                    ))
                }
            };
        }
        if let Some(v) = raw.get::<f64>("sigma0", "real")? {
            self.sigma0 = v;
        }
        if let Some(v) = raw.get::<f64>("noise_var", "real")? {
            self.noise_var = Some(v);
        }
        if let Some(v) = raw.get::<f64>("box_lo", "real")? {
            self.box_lo = v;
        }
        if let Some(v) = raw.get::<f64>("box_hi", "real")? {
            self.box_hi = v;
        }
        if let Some(v) = raw.get_str("theta_star") {
            if v == "auto" {
                self.theta_star = None;
            } else {
                let parsed: std::result::Result<Vec<f64>, _> =
                    v.split(',').map(|s| s.trim().parse::<f64>()).collect();
                match parsed {
                    Ok(list) => self.theta_star = Some(list),
                    Err(_) => {
                        return Err(raw.err(
                            "theta_star",
                            format!("`{v}` is not `auto` or a comma-separated list of reals"),
                        ))
                    }
                }
            }
        }
        let ilo = raw.get::<f64>("interval_lo", "real")?;
        let ihi = raw.get::<f64>("interval_hi", "real")?;
        match (ilo, ihi) {
            (Some(a), Some(b)) => self.interval = Some((a, b)),
            (None, None) => {}
            _ => {
                return Err(raw.err(
                    "interval_lo",
                    "interval_lo and interval_hi must be given together".into(),
                ))
            }
        }
        if let Some(v) = raw.get::<usize>("m", "order")? {
            self.m = v;
        }
        if let Some(v) = raw.get::<f64>("q", "real")? {
            self.q = v;
        }
        if let Some(v) = raw.get::<f64>("qprime", "real")? {
            self.qprime = v;
        }
        if let Some(v) = raw.get::<f64>("q1", "real")? {
            self.q1 = v;
        }
        if let Some(v) = raw.get::<f64>("q2", "real")? {
            self.q2 = v;
        }
        if let Some(v) = raw.get::<f64>("k_cone", "real")? {
            self.k_cone = v;
        }
        if let Some(v) = raw.get::<f64>("kkt_tol", "real")? {
            self.kkt_tol = v;
        }
        if let Some(v) = raw.get::<usize>("s", "count")? {
            self.s = v;
        }
        if let Some(v) = raw.get_str("re_mode") {
            self.re_mode = match v.as_str() {
                "auto" => ReModeChoice::Auto,
                "exact" => ReModeChoice::Exact,
                "heuristic" => ReModeChoice::Heuristic,
                other => {
                    return Err(raw.err(
                        "re_mode",
                        format!("`{other}` is not one of auto|exact|heuristic"),
                    ))
                }
            };
        }
        if let Some(v) = raw.get::<usize>("budget_random", "count")? {
            self.budget_random = v;
        }
        if let Some(v) = raw.get::<usize>("budget_hillclimb", "count")? {
            self.budget_hillclimb = v;
        }
        if let Some(v) = raw.get::<usize>("max_iter", "count")? {
            self.max_iter = v;
        }
        if let Some(v) = raw.get::<usize>("restarts", "count")? {
            self.restarts = v;
        }
        if let Some(v) = raw.get::<f64>("lambda", "real")? {
            self.lambda = Some(v);
        }
        Ok(())
    }

    fn apply_overrides(&mut self, ov: &Overrides) -> Result<()> {
        if let Some(v) = ov.seed {
            self.seed = v;
        }
        if let Some(v) = ov.threads {
            self.threads = Some(v);
        }
        if let Some(v) = &ov.out_dir {
            self.out_dir = v.clone();
        }
        if ov.timestamps {
            self.timestamps = true;
        }
        if let Some(v) = ov.trials {
            self.trials = v;
        }
        if let Some(v) = &ov.design_file {
            self.design_file = Some(v.clone());
            self.design = DesignChoice::File;
        }
        if let Some(v) = &ov.response_file {
            self.response_file = Some(v.clone());
        }
        if let Some(v) = ov.q {
            self.q = v;
        }
        if let Some(v) = ov.qprime {
            self.qprime = v;
        }
        if let Some(v) = ov.q1 {
            self.q1 = v;
        }
        if let Some(v) = ov.q2 {
            self.q2 = v;
        }
        if let Some(v) = ov.k_cone {
            self.k_cone = v;
        }
        if let Some(v) = ov.s {
            self.s = v;
        }
        if let Some(v) = ov.m {
            self.m = v;
        }
        if let Some(v) = ov.p {
            self.p = v;
        }
        if let Some(v) = ov.n {
            self.n = v;
        }
        if let Some(v) = &ov.re_mode {
            self.re_mode = match v.as_str() {
                "auto" => ReModeChoice::Auto,
                "exact" => ReModeChoice::Exact,
                "heuristic" => ReModeChoice::Heuristic,
                other => {
                    return Err(Error::Parse {
                        path: "--re-mode".into(),
                        line: 0,
                        msg: format!("`{other}` is not one of auto|exact|heuristic"),
                    })
                }
            };
        }
        if let Some(v) = ov.lambda {
            self.lambda = Some(v);
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("q", self.q),
            ("qprime", self.qprime),
            ("q1", self.q1),
            ("q2", self.q2),
        ] {
            if !(v.is_finite() && v > 0.0 && v < 1.0) {
                return Err(Error::InvalidProbability {
                    name: match name {
                        "q" => "q",
                        "qprime" => "qprime",
                        "q1" => "q1",
                        _ => "q2",
                    },
                    value: v,
                });
            }
        }
        if self.q + self.qprime >= 1.0 {
            return Err(Error::JointProbabilityTooLarge(self.q + self.qprime));
        }
        if self.q1 + self.q2 >= 1.0 {
            return Err(Error::JointProbabilityTooLarge(self.q1 + self.q2));
        }
        if self.n == 0 || self.p == 0 {
            return Err(Error::InvalidSimSpec("need n >= 1 and p >= 1".into()));
        }
        if self.s0 > self.p {
            return Err(Error::InvalidSimSpec(format!(
                "s0 = {} exceeds p = {}",
                self.s0, self.p
            )));
        }
        if !(self.box_lo < self.box_hi) {
            return Err(Error::InvalidDomain(format!(
                "box_lo = {} must be below box_hi = {}",
                self.box_lo, self.box_hi
            )));
        }
        if self.m > 2 {
            return Err(Error::UnsupportedExpansionOrder(self.m));
        }
        if !(self.sigma0.is_finite() && self.sigma0 > 0.0) {
            return Err(Error::InvalidSigma0(self.sigma0));
        }
        if let Some(v) = self.noise_var {
            if !(v.is_finite() && v >= 0.0 && v <= self.sigma0 * self.sigma0 * (1.0 + 1e-12)) {
                return Err(Error::VarianceExceedsCap {
                    index: 0,
                    value: v,
                    cap: self.sigma0 * self.sigma0,
                });
            }
        }
        if self.design == DesignChoice::File {
            let Some(path) = &self.design_file else {
                return Err(Error::InvalidSimSpec(
                    "design = file requires design_file".into(),
                ));
            };
            if !path.exists() {
                return Err(Error::InvalidSimSpec(format!(
                    "design_file `{}` does not exist",
                    path.display()
                )));
            }
        }
        Ok(())
    }

    /// Canonical `key = value` rendering, written next to each report as
    /// `config.lock`; parsing it back reproduces the config exactly.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        kv("seed", self.seed.to_string());
        if let Some(t) = self.threads {
            kv("threads", t.to_string());
        }
        kv("out_dir", self.out_dir.display().to_string());
        kv("timestamps", self.timestamps.to_string());
        kv("trials", self.trials.to_string());
        kv("n", self.n.to_string());
        kv("p", self.p.to_string());
        kv("s0", self.s0.to_string());
        kv(
            "design",
            match self.design {
                DesignChoice::Rademacher => "rademacher",
                DesignChoice::Uniform => "uniform",
                DesignChoice::File => "file",
            }
            .to_string(),
        );
        if let Some(f) = &self.design_file {
            kv("design_file", f.display().to_string());
        }
        if let Some(f) = &self.response_file {
            kv("response_file", f.display().to_string());
        }
        if let Some(c) = &self.response_column {
            kv("response_column", c.clone());
        }
        kv("csv_header", self.csv_header.to_string());
        kv(
            "family",
            match self.family {
                FamilyChoice::Logistic => "logistic",
                FamilyChoice::Gaussian => "gaussian",
                FamilyChoice::Poisson => "poisson",
            }
            .to_string(),
        );
        kv("link", self.link.name().to_string());
        kv("sigma0", fmt_f64(self.sigma0));
        if let Some(v) = self.noise_var {
            kv("noise_var", fmt_f64(v));
        }
        kv("box_lo", fmt_f64(self.box_lo));
        kv("box_hi", fmt_f64(self.box_hi));
        match &self.theta_star {
            None => kv("theta_star", "auto".to_string()),
            Some(list) => kv(
                "theta_star",
                list.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(","),
            ),
        }
        if let Some((a, b)) = self.interval {
            kv("interval_lo", fmt_f64(a));
            kv("interval_hi", fmt_f64(b));
        }
        kv("m", self.m.to_string());
        kv("q", fmt_f64(self.q));
        kv("qprime", fmt_f64(self.qprime));
        kv("q1", fmt_f64(self.q1));
        kv("q2", fmt_f64(self.q2));
        kv("k_cone", fmt_f64(self.k_cone));
        kv("s", self.s.to_string());
        kv(
            "re_mode",
            match self.re_mode {
                ReModeChoice::Auto => "auto",
                ReModeChoice::Exact => "exact",
                ReModeChoice::Heuristic => "heuristic",
            }
            .to_string(),
        );
        kv("budget_random", self.budget_random.to_string());
        kv("budget_hillclimb", self.budget_hillclimb.to_string());
        kv("max_iter", self.max_iter.to_string());
        kv("kkt_tol", fmt_f64(self.kkt_tol));
        kv("restarts", self.restarts.to_string());
        if let Some(v) = self.lambda {
            kv("lambda", fmt_f64(v));
        }
        out
    }

    pub fn loss_family(&self, interval: (f64, f64)) -> Result<LossFamily> {
        match self.family {
            FamilyChoice::Logistic => LossFamily::logistic(interval.0, interval.1),
            FamilyChoice::Poisson => LossFamily::poisson_log(interval.0, interval.1),
            FamilyChoice::Gaussian => {
                LossFamily::gaussian_square(self.link, self.sigma0, interval.0, interval.1)
            }
        }
    }

    fn theta_star_effective(&self, domain: &ParamDomain) -> Result<Vec<f64>> {
        let theta = match &self.theta_star {
            Some(t) => {
                if t.len() != self.p {
                    return Err(Error::InvalidSimSpec(format!(
                        "theta_star has {} entries for p = {}",
                        t.len(),
                        self.p
                    )));
                }
                t.clone()
            }
            None => {
                let mut t = vec![0.0; self.p];
                for (j, tj) in t.iter_mut().enumerate().take(self.s0) {
                    *tj = if j % 2 == 0 {
                        0.8 * self.box_hi
                    } else {
                        0.8 * self.box_lo
                    };
                }
                t
            }
        };
        if !domain.contains(&theta, 0.0) {
            return Err(Error::InvalidSimSpec(
                "theta_star falls outside the box; set theta_star explicitly".into(),
            ));
        }
        Ok(theta)
    }

    fn design_kind(&self) -> Result<DesignKind> {
        Ok(match self.design {
            DesignChoice::Rademacher => DesignKind::Rademacher,
            DesignChoice::Uniform => DesignKind::UniformBox,
            DesignChoice::File => {
                let path = self.design_file.as_ref().expect("validated");
                DesignKind::FromFile(lsl_core::io::read_design_csv(path, self.csv_header)?)
            }
        })
    }

    /// Assemble the simulation spec. When the working interval is not
    /// pinned in the config it is derived from the attained range of the
    /// drawn design over the box, padded by 1%.
    pub fn sim_spec(&self) -> Result<SimSpec> {
        let design = self.design_kind()?;
        let (n, p) = match &design {
            DesignKind::FromFile(x) => (x.n_rows(), x.n_cols()),
            _ => (self.n, self.p),
        };
        if self.s0 > p {
            return Err(Error::InvalidSimSpec(format!("s0 = {} exceeds p = {p}", self.s0)));
        }
        let domain = ParamDomain::uniform_box(p, self.box_lo, self.box_hi)?;
        let mut cfg_p = self.clone();
        cfg_p.p = p;
        let theta_star = cfg_p.theta_star_effective(&domain)?;
        let s0 = theta_star.iter().filter(|v| **v != 0.0).count();

        let interval = match self.interval {
            Some(iv) => iv,
            None => {
                // provisional wide interval to draw the design, then pad the
                // attained range
                let provisional = self.make_spec(
                    design.clone(),
                    n,
                    p,
                    s0,
                    theta_star.clone(),
                    domain.clone(),
                    (-1e12, 1e12),
                )?;
                let ctx = lsl_core::harness::build_context(&provisional)?;
                let chk = lsl_core::design::check_feasibility(&ctx.x, &domain, (-1e12, 1e12));
                let (lo, hi) = chk.row_range;
                let pad = 0.01 * (hi - lo).max(1e-6) + 1e-6;
                (lo - pad, hi + pad)
            }
        };
        self.make_spec(design, n, p, s0, theta_star, domain, interval)
    }

    #[allow(clippy::too_many_arguments)]
    fn make_spec(
        &self,
        design: DesignKind,
        n: usize,
        p: usize,
        s0: usize,
        theta_star: Vec<f64>,
        domain: ParamDomain,
        interval: (f64, f64),
    ) -> Result<SimSpec> {
        let family = self.loss_family(interval)?;
        let regime = match self.family {
            FamilyChoice::Gaussian => NoiseRegime::Gaussian {
                sigma0: self.sigma0,
                variances: vec![
                    self.noise_var.unwrap_or(self.sigma0 * self.sigma0);
                    n
                ],
            },
            _ => NoiseRegime::Bounded,
        };
        Ok(SimSpec {
            n,
            p,
            s0,
            design,
            theta_star,
            family,
            regime,
            domain,
            seed: self.seed,
            trials: self.trials,
        })
    }

    pub fn re_mode_for(&self, p: usize, s: usize) -> ReMode {
        match self.re_mode {
            ReModeChoice::Exact => ReMode::ExactEnumeration,
            ReModeChoice::Heuristic => ReMode::HeuristicLowerSearch,
            ReModeChoice::Auto => {
                if p <= 16 && s <= 3 {
                    ReMode::ExactEnumeration
                } else {
                    ReMode::HeuristicLowerSearch
                }
            }
        }
    }
}
