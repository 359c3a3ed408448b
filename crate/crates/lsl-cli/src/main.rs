//! `lsl` — weighted-l1 GLM estimation with concentration-derived penalty
//! levels and a Monte-Carlo harness that verifies the tail bounds.

mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{FamilyChoice, Overrides, RunConfig};
use lsl_core::bounds;
use lsl_core::design::{check_feasibility, weighted_l1_diameter, ParamDomain};
use lsl_core::error::{Error, Result};
use lsl_core::harness::{
    build_context, simulate_trial, verify_l2_bound, verify_massart, verify_tail_bounded,
    verify_tail_gaussian, verify_xi1, SearchBudget,
};
use lsl_core::io::{fmt_f64, read_design_csv, read_response_csv, write_vector_csv};
use lsl_core::matrix::DesignMatrix;
use lsl_core::re::{restricted_eigenvalue, ReOptions};
use lsl_core::solver::{fit, LassoProblem, Penalty, SolverOptions};

#[derive(Parser)]
#[command(
    name = "lsl",
    version,
    about = "Weighted-l1 GLM estimation and numerical verification of its tail bounds"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Config file of `key = value` lines (unknown keys are errors)
    #[arg(long)]
    config: Option<PathBuf>,
    /// RNG seed; overrides the config file
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    threads: Option<usize>,
    /// Monte-Carlo trials; overrides the config file
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory (flag > config > $LSL_OUT_DIR > ".")
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Include wall-clock metadata in reports
    #[arg(long)]
    timestamps: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute the tail-bound constants (phi, psi, A, B, C / w_j) for a design
    Bounds {
        #[command(flatten)]
        common: Common,
        /// Design CSV; defaults to the config's simulated design
        #[arg(long)]
        design: Option<PathBuf>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        qprime: Option<f64>,
        /// Expansion order (0..=2)
        #[arg(long)]
        m: Option<usize>,
    },
    /// Fit the box-constrained weighted-l1 estimator
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        response: PathBuf,
        /// Penalty level (per-coordinate weight); overrides the config key
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Restricted eigenvalue kappa(s, K) of a design
    Re {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        design: Option<PathBuf>,
        #[arg(long)]
        s: Option<usize>,
        #[arg(long)]
        k: Option<f64>,
        /// auto | exact | heuristic
        #[arg(long)]
        mode: Option<String>,
    },
    /// Write a simulated design and per-trial responses
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Coverage of the Lipschitz-coefficient bound M(q, q')
    VerifyTail {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        qprime: Option<f64>,
    },
    /// Coverage of the linear-coefficient bounds
    VerifyXi1 {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        q: Option<f64>,
    },
    /// Monte-Carlo check of the Gaussian maximum inequality
    VerifyMassart {
        #[command(flatten)]
        common: Common,
        /// Columns CSV; defaults to the p x p identity
        #[arg(long)]
        design: Option<PathBuf>,
        #[arg(long)]
        p: Option<usize>,
    },
    /// Coverage of the l2 error bound with the theoretical penalty
    VerifyError {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        q1: Option<f64>,
        #[arg(long)]
        q2: Option<f64>,
        #[arg(long)]
        k: Option<f64>,
    },
}

fn overrides_from(common: &Common) -> Overrides {
    Overrides {
        seed: common.seed,
        threads: common.threads,
        out_dir: common.out_dir.clone(),
        timestamps: common.timestamps,
        trials: common.trials,
        ..Default::default()
    }
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    #[cfg(feature = "parallel")]
    {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(t) = threads {
            builder = builder.num_threads(t);
        }
        match builder.build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

/// Working interval: configured, or the attained row range over the box
/// padded by 1%.
fn interval_for_design(cfg: &RunConfig, x: &DesignMatrix, domain: &ParamDomain) -> (f64, f64) {
    if let Some(iv) = cfg.interval {
        return iv;
    }
    let chk = check_feasibility(x, domain, (-1e12, 1e12));
    let (lo, hi) = chk.row_range;
    let pad = 0.01 * (hi - lo).max(1e-6) + 1e-6;
    (lo - pad, hi + pad)
}

fn cmd_bounds(common: &Common, design: Option<PathBuf>, ov_rest: Overrides) -> Result<bool> {
    let mut ov = overrides_from(common);
    ov.q = ov_rest.q;
    ov.qprime = ov_rest.qprime;
    ov.m = ov_rest.m;
    ov.design_file = design;
    let cfg = RunConfig::load(common.config.as_deref(), &ov)?;
    let spec = cfg.sim_spec()?;
    let ctx = build_context(&spec)?;
    let db = spec.family.derivative_bounds(cfg.m)?;
    let diam = weighted_l1_diameter(&spec.domain, &ctx.scales);
    let (consts, threshold, coefficient) = match &spec.regime {
        lsl_core::harness::NoiseRegime::Bounded => {
            let c = bounds::bounded_constants(
                &ctx.x,
                &ctx.scales,
                db.f_m,
                db.f_m_plus_1,
                diam.weighted,
                cfg.m,
            )?;
            let t = bounds::bounded_threshold(&c, spec.p, cfg.q)?;
            let m = if cfg.m == 1 {
                Some(bounds::coefficient_bound_m1(
                    &c, db.f_m, spec.n, spec.p, cfg.q, cfg.qprime,
                )?)
            } else {
                None
            };
            (c, t, m)
        }
        lsl_core::harness::NoiseRegime::Gaussian { sigma0, variances } => {
            let c = bounds::gaussian_constants(
                &ctx.x,
                &ctx.scales,
                *sigma0,
                variances,
                db.f_m,
                db.f_m_plus_1,
                diam.weighted,
                cfg.m,
            )?;
            let t = bounds::gaussian_threshold(&c, spec.p, cfg.q)?;
            let m = if cfg.m == 1 {
                Some(bounds::coefficient_bound_m1_gaussian(
                    &c, db.f_m, spec.p, cfg.q, cfg.qprime,
                )?)
            } else {
                None
            };
            (c, t, m)
        }
    };
    let json = report::constants_json(&consts, spec.p, Some(threshold), coefficient, cfg.timestamps);
    let json_path = report::write_file(&cfg.out_dir, "bounds.json", &json)?;
    report::write_file(&cfg.out_dir, "bounds.csv", &report::constants_csv(&consts, spec.p))?;
    println!(
        "bounds: m={} phi={} a={} b={} tail_threshold={} [{}]",
        consts.m,
        fmt_f64(consts.phi),
        fmt_f64(consts.a),
        fmt_f64(consts.b),
        fmt_f64(threshold),
        json_path.display()
    );
    Ok(true)
}

fn cmd_fit(
    common: &Common,
    design: &std::path::Path,
    response: &std::path::Path,
    lambda: Option<f64>,
) -> Result<bool> {
    let mut ov = overrides_from(common);
    ov.lambda = lambda;
    let cfg = RunConfig::load(common.config.as_deref(), &ov)?;
    let x = read_design_csv(design, cfg.csv_header)?;
    let y = read_response_csv(response, cfg.csv_header, cfg.response_column.as_deref())?;
    let domain = ParamDomain::uniform_box(x.n_cols(), cfg.box_lo, cfg.box_hi)?;
    let interval = interval_for_design(&cfg, &x, &domain);
    let family = cfg.loss_family(interval)?;
    let Some(lambda) = cfg.lambda else {
        return Err(Error::InvalidPenalty(f64::NAN));
    };
    let problem = LassoProblem::new(x, y, family, domain, Penalty::Uniform(lambda))?;
    let opts = SolverOptions {
        max_iter: cfg.max_iter,
        kkt_tol: cfg.kkt_tol,
        restarts: cfg.restarts,
        seed: cfg.seed,
    };
    let result = fit(&problem, &opts)?;
    std::fs::create_dir_all(&cfg.out_dir).map_err(|source| Error::Io {
        path: cfg.out_dir.display().to_string(),
        source,
    })?;
    write_vector_csv(&cfg.out_dir.join("theta.csv"), &result.theta_hat)?;
    let json = report::fit_json(&result, lambda, cfg.timestamps);
    let json_path = report::write_file(&cfg.out_dir, "fit.json", &json)?;
    println!(
        "fit: objective={} kkt={} converged={} [{}]",
        fmt_f64(result.objective),
        fmt_f64(result.kkt_residual),
        result.converged,
        json_path.display()
    );
    Ok(result.converged)
}

fn cmd_re(
    common: &Common,
    design: Option<PathBuf>,
    s: Option<usize>,
    k: Option<f64>,
    mode: Option<String>,
) -> Result<bool> {
    let mut ov = overrides_from(common);
    ov.s = s;
    ov.k_cone = k;
    ov.re_mode = mode;
    ov.design_file = design;
    let cfg = RunConfig::load(common.config.as_deref(), &ov)?;
    let x = match &cfg.design_file {
        Some(path) => read_design_csv(path, cfg.csv_header)?,
        None => build_context(&cfg.sim_spec()?)?.x,
    };
    let mode = cfg.re_mode_for(x.n_cols(), cfg.s);
    let opts = ReOptions {
        seed: cfg.seed,
        ..Default::default()
    };
    let result = restricted_eigenvalue(&x, cfg.s, cfg.k_cone, mode, &opts)?;
    let json = report::re_json(&result, cfg.s, cfg.k_cone, cfg.timestamps);
    let json_path = report::write_file(&cfg.out_dir, "re.json", &json)?;
    println!(
        "re: kappa={} s={} K={} method={:?} [{}]",
        fmt_f64(result.kappa),
        cfg.s,
        fmt_f64(cfg.k_cone),
        result.method,
        json_path.display()
    );
    Ok(true)
}

fn cmd_simulate(common: &Common) -> Result<bool> {
    let cfg = RunConfig::load(common.config.as_deref(), &overrides_from(common))?;
    let spec = cfg.sim_spec()?;
    let ctx = build_context(&spec)?;
    std::fs::create_dir_all(&cfg.out_dir).map_err(|source| Error::Io {
        path: cfg.out_dir.display().to_string(),
        source,
    })?;
    lsl_core::io::write_design_csv(&cfg.out_dir.join("design.csv"), &ctx.x)?;
    let mut responses = String::from("trial,row,y,t0\n");
    for t in 0..spec.trials {
        let data = simulate_trial(&ctx, t);
        for i in 0..spec.n {
            responses.push_str(&format!(
                "{t},{i},{},{}\n",
                fmt_f64(data.y[i]),
                fmt_f64(data.t0[i])
            ));
        }
    }
    report::write_file(&cfg.out_dir, "responses.csv", &responses)?;
    let meta = report::JsonObject::new()
        .int("n", spec.n)
        .int("p", spec.p)
        .int("s0", spec.s0)
        .int("trials", spec.trials)
        .str("family", spec.family.name())
        .num_array("theta_star", &spec.theta_star)
        .finish();
    let meta_path = report::write_file(&cfg.out_dir, "simulate.json", &meta)?;
    println!(
        "simulate: {} trials of n={} p={} written [{}]",
        spec.trials,
        spec.n,
        spec.p,
        meta_path.display()
    );
    Ok(true)
}

fn write_verify_outputs(
    cfg: &RunConfig,
    mut rep: lsl_core::harness::McReport,
    rows: &[lsl_core::harness::TrialRow],
) -> Result<bool> {
    report::write_file(&cfg.out_dir, "config.lock", &cfg.canonical_text())?;
    report::write_file(&cfg.out_dir, "trials.csv", &report::trials_csv(rows))?;
    rep.per_trial_path = Some("trials.csv".to_string());
    let json = report::mc_report_json(&rep, cfg.timestamps);
    let json_path = report::write_file(&cfg.out_dir, "report.json", &json)?;
    println!(
        "{}: {}/{} violations (rate {} vs {} + {}) -> {} [{}]",
        rep.check,
        rep.violations,
        rep.trials,
        fmt_f64(rep.violation_rate),
        fmt_f64(rep.nominal_q),
        fmt_f64(rep.binomial_slack),
        if rep.pass { "PASS" } else { "FAIL" },
        json_path.display()
    );
    Ok(rep.pass)
}

fn cmd_verify_tail(common: &Common, q: Option<f64>, qprime: Option<f64>) -> Result<bool> {
    let mut ov = overrides_from(common);
    ov.q = q;
    ov.qprime = qprime;
    let cfg = RunConfig::load(common.config.as_deref(), &ov)?;
    let spec = cfg.sim_spec()?;
    let budget = SearchBudget {
        random_points: cfg.budget_random,
        hillclimb_steps: cfg.budget_hillclimb,
    };
    let (rep, rows) = match cfg.family {
        FamilyChoice::Gaussian => verify_tail_gaussian(&spec, cfg.q, cfg.qprime, &budget)?,
        _ => verify_tail_bounded(&spec, cfg.q, cfg.qprime, &budget)?,
    };
    write_verify_outputs(&cfg, rep, &rows)
}

fn cmd_verify_xi1(common: &Common, q: Option<f64>) -> Result<bool> {
    let mut ov = overrides_from(common);
    ov.q = q;
    let cfg = RunConfig::load(common.config.as_deref(), &ov)?;
    let spec = cfg.sim_spec()?;
    let (rep, rows) = verify_xi1(&spec, cfg.q)?;
    write_verify_outputs(&cfg, rep, &rows)
}

fn cmd_verify_massart(common: &Common, design: Option<PathBuf>, p: Option<usize>) -> Result<bool> {
    let mut ov = overrides_from(common);
    ov.p = p;
    ov.design_file = design.clone();
    let cfg = RunConfig::load(common.config.as_deref(), &ov)?;
    let columns = match &design {
        Some(path) => read_design_csv(path, cfg.csv_header)?,
        None => {
            let p = cfg.p;
            let rows: Vec<Vec<f64>> = (0..p)
                .map(|i| (0..p).map(|j| f64::from(u8::from(i == j))).collect())
                .collect();
            DesignMatrix::from_rows(&rows)?
        }
    };
    let (mut rep, rows) = verify_massart(&columns, cfg.trials, cfg.seed)?;
    report::write_file(&cfg.out_dir, "trials.csv", &report::trials_csv(&rows))?;
    rep.per_trial_path = Some("trials.csv".to_string());
    let json = report::massart_json(&rep, cfg.timestamps);
    let json_path = report::write_file(&cfg.out_dir, "report.json", &json)?;
    println!(
        "massart-mean: mc_mean={} (se {}) vs bound {} -> {} [{}]",
        fmt_f64(rep.mc_mean),
        fmt_f64(rep.mc_se),
        fmt_f64(rep.bound),
        if rep.pass { "PASS" } else { "FAIL" },
        json_path.display()
    );
    Ok(rep.pass)
}

fn cmd_verify_error(
    common: &Common,
    q1: Option<f64>,
    q2: Option<f64>,
    k: Option<f64>,
) -> Result<bool> {
    let mut ov = overrides_from(common);
    ov.q1 = q1;
    ov.q2 = q2;
    ov.k_cone = k;
    let cfg = RunConfig::load(common.config.as_deref(), &ov)?;
    let spec = cfg.sim_spec()?;
    let solver_opts = SolverOptions {
        max_iter: cfg.max_iter,
        kkt_tol: cfg.kkt_tol,
        restarts: cfg.restarts,
        seed: cfg.seed,
    };
    let re_opts = ReOptions {
        seed: cfg.seed,
        ..Default::default()
    };
    let (mut rep, rows) = verify_l2_bound(&spec, cfg.q1, cfg.q2, cfg.k_cone, &solver_opts, &re_opts)?;
    report::write_file(&cfg.out_dir, "trials.csv", &report::trials_csv(&rows))?;
    rep.coverage.per_trial_path = Some("trials.csv".to_string());
    let json = report::l2_json(&rep, cfg.timestamps);
    let json_path = report::write_file(&cfg.out_dir, "report.json", &json)?;
    println!(
        "l2-error-bound: {}/{} violations, median error {} vs bound {} -> {} [{}]",
        rep.coverage.violations,
        rep.coverage.trials,
        fmt_f64(rep.median_error),
        fmt_f64(rep.bound_rhs),
        if rep.coverage.pass { "PASS" } else { "FAIL" },
        json_path.display()
    );
    Ok(rep.coverage.pass)
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Bounds {
            common,
            design,
            q,
            qprime,
            m,
        } => {
            let threads = common.threads;
            with_pool(threads, move || {
                cmd_bounds(
                    &common,
                    design,
                    Overrides {
                        q,
                        qprime,
                        m,
                        ..Default::default()
                    },
                )
            })
        }
        Cmd::Fit {
            common,
            design,
            response,
            lambda,
        } => {
            let threads = common.threads;
            with_pool(threads, move || cmd_fit(&common, &design, &response, lambda))
        }
        Cmd::Re {
            common,
            design,
            s,
            k,
            mode,
        } => {
            let threads = common.threads;
            with_pool(threads, move || cmd_re(&common, design, s, k, mode))
        }
        Cmd::Simulate { common } => {
            let threads = common.threads;
            with_pool(threads, move || cmd_simulate(&common))
        }
        Cmd::VerifyTail { common, q, qprime } => {
            let threads = common.threads;
            with_pool(threads, move || cmd_verify_tail(&common, q, qprime))
        }
        Cmd::VerifyXi1 { common, q } => {
            let threads = common.threads;
            with_pool(threads, move || cmd_verify_xi1(&common, q))
        }
        Cmd::VerifyMassart { common, design, p } => {
            let threads = common.threads;
            with_pool(threads, move || cmd_verify_massart(&common, design, p))
        }
        Cmd::VerifyError { common, q1, q2, k } => {
            let threads = common.threads;
            with_pool(threads, move || cmd_verify_error(&common, q1, q2, k))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
