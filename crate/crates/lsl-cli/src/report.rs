//! Report serialization: JSON with a fixed key order and floats rendered
//! at 17 significant digits, plus the per-trial CSV. Re-running with the
//! same inputs produces byte-identical files; wall-clock metadata only
//! appears behind the `timestamps` flag.

use std::path::{Path, PathBuf};

use lsl_core::bounds::{LslConstants, RegimeConstants};
use lsl_core::error::{Error, Result};
use lsl_core::harness::{L2Report, MassartReport, McReport, TrialRow};
use lsl_core::io::fmt_f64;
use lsl_core::re::{ReMode, ReResult};
use lsl_core::solver::LassoFit;

/// Minimal ordered JSON object builder.
#[derive(Debug, Default)]
pub struct JsonObject {
    parts: Vec<String>,
}

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

impl JsonObject {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num(mut self, key: &str, v: f64) -> Self {
        self.parts.push(format!("\"{}\":\"{}\"", esc(key), fmt_f64(v)));
        self
    }

    pub fn int(mut self, key: &str, v: usize) -> Self {
        self.parts.push(format!("\"{}\":{v}", esc(key)));
        self
    }

    pub fn boolean(mut self, key: &str, v: bool) -> Self {
        self.parts.push(format!("\"{}\":{v}", esc(key)));
        self
    }

    pub fn str(mut self, key: &str, v: &str) -> Self {
        self.parts.push(format!("\"{}\":\"{}\"", esc(key), esc(v)));
        self
    }

    pub fn raw(mut self, key: &str, v: String) -> Self {
        self.parts.push(format!("\"{}\":{v}", esc(key)));
        self
    }

    pub fn num_array(mut self, key: &str, vals: &[f64]) -> Self {
        let inner: Vec<String> = vals.iter().map(|v| format!("\"{}\"", fmt_f64(*v))).collect();
        self.parts
            .push(format!("\"{}\":[{}]", esc(key), inner.join(",")));
        self
    }

    pub fn int_array(mut self, key: &str, vals: &[usize]) -> Self {
        let inner: Vec<String> = vals.iter().map(usize::to_string).collect();
        self.parts
            .push(format!("\"{}\":[{}]", esc(key), inner.join(",")));
        self
    }

    pub fn str_array(mut self, key: &str, vals: &[String]) -> Self {
        let inner: Vec<String> = vals.iter().map(|v| format!("\"{}\"", esc(v))).collect();
        self.parts
            .push(format!("\"{}\":[{}]", esc(key), inner.join(",")));
        self
    }

    pub fn finish(self) -> String {
        format!("{{{}}}\n", self.parts.join(","))
    }

    pub fn finish_inline(self) -> String {
        format!("{{{}}}", self.parts.join(","))
    }
}

/// Floats in JSON are emitted as strings holding the 17-digit scientific
/// rendering, so byte identity and exact parse-back both hold regardless
/// of consumer float formatting.
pub fn mc_report_json(rep: &McReport, timestamps: bool) -> String {
    let mut obj = JsonObject::new()
        .str("check", &rep.check)
        .int("trials", rep.trials)
        .int("violations", rep.violations)
        .num("violation_rate", rep.violation_rate)
        .num("nominal_q", rep.nominal_q)
        .num("binomial_slack", rep.binomial_slack)
        .num("threshold", rep.threshold)
        .boolean("pass", rep.pass)
        .str_array("notes", &rep.notes)
        .str(
            "per_trial_csv",
            rep.per_trial_path.as_deref().unwrap_or(""),
        );
    if timestamps {
        obj = obj.int("generated_unix_ms", now_ms());
    }
    obj.finish()
}

pub fn massart_json(rep: &MassartReport, timestamps: bool) -> String {
    let mut obj = JsonObject::new()
        .str("check", "massart-mean")
        .int("n", rep.n)
        .int("p", rep.p)
        .int("trials", rep.trials)
        .num("mc_mean", rep.mc_mean)
        .num("mc_se", rep.mc_se)
        .num("bound", rep.bound)
        .boolean("pass", rep.pass)
        .str(
            "per_trial_csv",
            rep.per_trial_path.as_deref().unwrap_or(""),
        );
    if timestamps {
        obj = obj.int("generated_unix_ms", now_ms());
    }
    obj.finish()
}

pub fn l2_json(rep: &L2Report, timestamps: bool) -> String {
    let coverage = JsonObject::new()
        .str("check", &rep.coverage.check)
        .int("trials", rep.coverage.trials)
        .int("violations", rep.coverage.violations)
        .num("violation_rate", rep.coverage.violation_rate)
        .num("nominal_q", rep.coverage.nominal_q)
        .num("binomial_slack", rep.coverage.binomial_slack)
        .boolean("pass", rep.coverage.pass)
        .finish_inline();
    let mut obj = JsonObject::new()
        .str("check", "l2-error-bound")
        .raw("coverage", coverage)
        .num("kappa", rep.kappa)
        .num("c_gamma", rep.c_gamma)
        .num("m1", rep.m1)
        .num("m2", rep.m2)
        .num("m_q", rep.m_q)
        .num("lambda", rep.lambda)
        .num("bound_rhs", rep.bound_rhs)
        .num("median_error", rep.median_error)
        .num("d", rep.d)
        .num("delta", rep.delta)
        .str(
            "per_trial_csv",
            rep.coverage.per_trial_path.as_deref().unwrap_or(""),
        );
    if timestamps {
        obj = obj.int("generated_unix_ms", now_ms());
    }
    obj.finish()
}

pub fn constants_json(
    c: &LslConstants,
    p: usize,
    threshold_q: Option<f64>,
    coefficient_bound: Option<f64>,
    timestamps: bool,
) -> String {
    let mut obj = JsonObject::new()
        .int("m", c.m)
        .num("phi", c.phi)
        .num("psi", c.psi)
        .num("a", c.a)
        .num("b", c.b);
    match &c.regime {
        RegimeConstants::Bounded { c: cc } => {
            obj = obj.str("regime", "bounded").num("c", *cc);
        }
        RegimeConstants::Gaussian {
            sigma0,
            w,
            lambda_weights,
        } => {
            obj = obj
                .str("regime", "gaussian")
                .num("sigma0", *sigma0)
                .num_array("w", w)
                .num_array("lambda_weights", lambda_weights);
        }
    }
    obj = obj.int("p", p);
    if let Some(t) = threshold_q {
        obj = obj.num("tail_threshold", t);
    }
    if let Some(m) = coefficient_bound {
        obj = obj.num("coefficient_bound", m);
    }
    if timestamps {
        obj = obj.int("generated_unix_ms", now_ms());
    }
    obj.finish()
}

/// Flat single-row CSV of the constants.
pub fn constants_csv(c: &LslConstants, p: usize) -> String {
    let (regime, cc, sigma0) = match &c.regime {
        RegimeConstants::Bounded { c: cc } => ("bounded", *cc, 0.0),
        RegimeConstants::Gaussian { sigma0, .. } => ("gaussian", 0.0, *sigma0),
    };
    format!(
        "m,phi,psi,a,b,c,regime,sigma0,p\n{},{},{},{},{},{},{},{},{}\n",
        c.m,
        fmt_f64(c.phi),
        fmt_f64(c.psi),
        fmt_f64(c.a),
        fmt_f64(c.b),
        fmt_f64(cc),
        regime,
        fmt_f64(sigma0),
        p
    )
}

pub fn fit_json(fit: &LassoFit, lambda: f64, timestamps: bool) -> String {
    let mut obj = JsonObject::new()
        .num("lambda", lambda)
        .num("objective", fit.objective)
        .num("kkt_residual", fit.kkt_residual)
        .int("restarts_used", fit.restarts_used)
        .boolean("converged", fit.converged)
        .num_array("theta_hat", &fit.theta_hat);
    if timestamps {
        obj = obj.int("generated_unix_ms", now_ms());
    }
    obj.finish()
}

pub fn re_json(r: &ReResult, s: usize, k: f64, timestamps: bool) -> String {
    let mut obj = JsonObject::new()
        .num("kappa", r.kappa)
        .int("s", s)
        .num("k", k)
        .str(
            "method",
            match r.method {
                ReMode::ExactEnumeration => "exact-enumeration",
                ReMode::HeuristicLowerSearch => "heuristic-lower-search",
            },
        )
        .int_array("argmin_support", &r.argmin_support)
        .num_array("argmin_vector", &r.argmin_vector)
        .boolean("positive", r.kappa > 1e-6);
    if timestamps {
        obj = obj.int("generated_unix_ms", now_ms());
    }
    obj.finish()
}

fn now_ms() -> usize {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as usize)
        .unwrap_or(0)
}

/// Fixed per-trial CSV schema.
pub const TRIALS_CSV_HEADER: &str = "trial,statistic,threshold,violated";

pub fn trials_csv(rows: &[TrialRow]) -> String {
    let mut out = String::with_capacity(rows.len() * 48 + 40);
    out.push_str(TRIALS_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.trial,
            fmt_f64(r.statistic),
            fmt_f64(r.threshold),
            u8::from(r.violated)
        ));
    }
    out
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path)
}
