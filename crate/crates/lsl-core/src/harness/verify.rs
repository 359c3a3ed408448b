//! Monte-Carlo verification of the probabilistic statements.

use crate::bounds::{
    self, coefficient_bound_m1, coefficient_bound_m1_gaussian, gaussian_constants,
    xi1_threshold_bounded, xi1_threshold_gaussian, RegimeConstants,
};
use crate::design::weighted_l1_diameter;
use crate::error::{Error, Result};
use crate::matrix::DesignMatrix;
use crate::parallel;
use crate::re::{re_condition_holds, ReOptions};
use crate::rng::{stream, CounterRng};
use crate::solver::{self, LassoProblem, Penalty, SolverOptions};

use super::search::{empirical_lsl_ratio, ProcessSpec, SearchBudget, Xi1Norm};
use super::sim::{build_context, simulate_trial, NoiseRegime, SimContext, SimSpec};

/// One line of the per-trial CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub trial: usize,
    pub statistic: f64,
    pub threshold: f64,
    pub violated: bool,
}

/// Coverage summary of one verification run.
#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub check: String,
    pub trials: usize,
    pub violations: usize,
    pub violation_rate: f64,
    pub nominal_q: f64,
    /// `3 sqrt(q (1 - q) / trials)`.
    pub binomial_slack: f64,
    pub pass: bool,
    /// The (constant) threshold the trials were compared against.
    pub threshold: f64,
    pub notes: Vec<String>,
    /// Filled by the report writer once the CSV lands on disk.
    pub per_trial_path: Option<String>,
}

pub fn binomial_slack(q: f64, trials: usize) -> f64 {
    3.0 * (q * (1.0 - q) / trials as f64).sqrt()
}

fn make_report(check: &str, rows: &[TrialRow], nominal_q: f64, threshold: f64) -> McReport {
    let violations = rows.iter().filter(|r| r.violated).count();
    let rate = violations as f64 / rows.len().max(1) as f64;
    let slack = binomial_slack(nominal_q, rows.len().max(1));
    McReport {
        check: check.to_string(),
        trials: rows.len(),
        violations,
        violation_rate: rate,
        nominal_q,
        binomial_slack: slack,
        pass: rate <= nominal_q + slack,
        threshold,
        notes: Vec::new(),
        per_trial_path: None,
    }
}

fn collect_rows(
    ctx: &SimContext,
    threshold: f64,
    stat: impl Fn(usize) -> Result<f64> + Sync + Send,
) -> Result<Vec<TrialRow>> {
    let results = parallel::map_indexed(ctx.spec.trials, |t| {
        stat(t).map(|statistic| TrialRow {
            trial: t,
            statistic,
            threshold,
            violated: statistic > threshold,
        })
    });
    results.into_iter().collect()
}

/// Coverage of the combined Lipschitz-coefficient bound `M(q, q')` in the
/// bounded regime (order m = 1), with the column scales as ratio weights.
pub fn verify_tail_bounded(
    spec: &SimSpec,
    q: f64,
    qprime: f64,
    budget: &SearchBudget,
) -> Result<(McReport, Vec<TrialRow>)> {
    if !matches!(spec.regime, NoiseRegime::Bounded) {
        return Err(Error::InvalidSimSpec(
            "verify-tail bounded needs the bounded regime".into(),
        ));
    }
    let ctx = build_context(spec)?;
    let db = spec.family.derivative_bounds(1)?;
    let diam = weighted_l1_diameter(&spec.domain, &ctx.scales);
    let consts = bounds::bounded_constants(
        &ctx.x,
        &ctx.scales,
        db.f_m,
        db.f_m_plus_1,
        diam.weighted,
        1,
    )?;
    let threshold = coefficient_bound_m1(&consts, db.f_m, spec.n, spec.p, q, qprime)?;
    let rows = collect_rows(&ctx, threshold, |t| {
        let data = simulate_trial(&ctx, t);
        let ps = ProcessSpec {
            x: &ctx.x,
            family: &spec.family,
            domain: &spec.domain,
            theta: &spec.theta_star,
            ratio_weights: &ctx.scales,
            scales: &ctx.scales,
            xi1_norm: None,
        };
        Ok(empirical_lsl_ratio(&ps, &data, budget, spec.seed, t as u64)?.sup_ratio)
    })?;
    let report = make_report("tail-bounded", &rows, q + qprime, threshold);
    Ok((report, rows))
}

/// Coverage of the Gaussian-regime bound with weights
/// `lambda_j = max(w_j, d_j)`; the process is the pure-noise one.
pub fn verify_tail_gaussian(
    spec: &SimSpec,
    q: f64,
    qprime: f64,
    budget: &SearchBudget,
) -> Result<(McReport, Vec<TrialRow>)> {
    let NoiseRegime::Gaussian { sigma0, variances } = &spec.regime else {
        return Err(Error::InvalidSimSpec(
            "verify-tail gaussian needs the Gaussian regime".into(),
        ));
    };
    let ctx = build_context(spec)?;
    let db = spec.family.derivative_bounds(1)?;
    let diam = weighted_l1_diameter(&spec.domain, &ctx.scales);
    let consts = gaussian_constants(
        &ctx.x,
        &ctx.scales,
        *sigma0,
        variances,
        db.f_m,
        db.f_m_plus_1,
        diam.weighted,
        1,
    )?;
    let RegimeConstants::Gaussian {
        w, lambda_weights, ..
    } = &consts.regime
    else {
        unreachable!()
    };
    let threshold = coefficient_bound_m1_gaussian(&consts, db.f_m, spec.p, q, qprime)?;
    let xi1_norm = Xi1Norm {
        sigma0: *sigma0,
        f1: db.f_m,
        w: w.clone(),
    };
    let rows = collect_rows(&ctx, threshold, |t| {
        let data = simulate_trial(&ctx, t);
        let ps = ProcessSpec {
            x: &ctx.x,
            family: &spec.family,
            domain: &spec.domain,
            theta: &spec.theta_star,
            ratio_weights: lambda_weights,
            scales: &ctx.scales,
            xi1_norm: Some(xi1_norm.clone()),
        };
        Ok(empirical_lsl_ratio(&ps, &data, budget, spec.seed, t as u64)?.sup_ratio)
    })?;
    let report = make_report("tail-gaussian", &rows, q + qprime, threshold);
    Ok((report, rows))
}

/// Coverage of the linear-coefficient bounds: the normalized column sums of
/// centered first derivatives (bounded) or the Gaussian `max_j |W_j|`.
pub fn verify_xi1(spec: &SimSpec, q: f64) -> Result<(McReport, Vec<TrialRow>)> {
    let ctx = build_context(spec)?;
    let db = spec.family.derivative_bounds(1)?;
    let (threshold, xi1_norm, check, mut notes) = match &spec.regime {
        NoiseRegime::Bounded => (
            xi1_threshold_bounded(db.f_m, spec.n, spec.p, q)?,
            None,
            "xi1-bounded",
            Vec::new(),
        ),
        NoiseRegime::Gaussian { sigma0, variances } => {
            let w = bounds::noise_weights(&ctx.x, *sigma0, variances)?;
            let excluded = w.iter().filter(|wj| **wj <= 1e-300).count();
            let mut notes = Vec::new();
            if excluded > 0 {
                notes.push(format!(
                    "excluded {excluded} zero-weight columns from the Gaussian max"
                ));
            }
            (
                xi1_threshold_gaussian(spec.p, q)?,
                Some(Xi1Norm {
                    sigma0: *sigma0,
                    f1: db.f_m,
                    w,
                }),
                "xi1-gaussian",
                notes,
            )
        }
    };
    let budget = SearchBudget {
        random_points: 0,
        hillclimb_steps: 0,
    };
    let rows = collect_rows(&ctx, threshold, |t| {
        let data = simulate_trial(&ctx, t);
        let ps = ProcessSpec {
            x: &ctx.x,
            family: &spec.family,
            domain: &spec.domain,
            theta: &spec.theta_star,
            ratio_weights: &ctx.scales,
            scales: &ctx.scales,
            xi1_norm: xi1_norm.clone(),
        };
        Ok(empirical_lsl_ratio(&ps, &data, &budget, spec.seed, t as u64)?.xi1_value)
    })?;
    let mut report = make_report(check, &rows, q, threshold);
    report.notes.append(&mut notes);
    Ok((report, rows))
}

/// Monte-Carlo check of the Gaussian maximum inequality
/// `E max_j |w' V_j| <= 2 sqrt(ln 2p) max_j ||V_j||_2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MassartReport {
    pub n: usize,
    pub p: usize,
    pub trials: usize,
    pub mc_mean: f64,
    pub mc_se: f64,
    pub bound: f64,
    pub pass: bool,
    pub per_trial_path: Option<String>,
}

pub fn verify_massart(
    columns: &DesignMatrix,
    trials: usize,
    seed: u64,
) -> Result<(MassartReport, Vec<TrialRow>)> {
    if trials == 0 {
        return Err(Error::InvalidSimSpec("need at least one trial".into()));
    }
    let p = columns.n_cols();
    let n = columns.n_rows();
    let bound = 2.0 * (2.0 * p as f64).ln().sqrt() * columns.max_column_norm();
    let rows: Vec<TrialRow> = parallel::map_indexed(trials, |t| {
        let mut rng = CounterRng::new(seed, t as u64, stream::MASSART);
        let omega: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let statistic = (0..p)
            .map(|j| {
                columns
                    .column(j)
                    .zip(&omega)
                    .map(|(v, w)| v * w)
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max);
        TrialRow {
            trial: t,
            statistic,
            threshold: bound,
            violated: statistic > bound,
        }
    });
    // aggregate sequentially over the ordered rows so the report is
    // schedule-independent
    let mean = rows.iter().map(|r| r.statistic).sum::<f64>() / trials as f64;
    let var = rows
        .iter()
        .map(|r| (r.statistic - mean) * (r.statistic - mean))
        .sum::<f64>()
        / trials as f64;
    let se = (var / trials as f64).sqrt();
    let report = MassartReport {
        n,
        p,
        trials,
        mc_mean: mean,
        mc_se: se,
        bound,
        pass: mean <= bound + 3.0 * se,
        per_trial_path: None,
    };
    Ok((report, rows))
}

/// Everything the l2 error-bound run derived, plus its coverage summary.
#[derive(Debug, Clone, PartialEq)]
pub struct L2Report {
    pub coverage: McReport,
    pub kappa: f64,
    pub c_gamma: f64,
    pub m1: f64,
    pub m2: f64,
    pub m_q: f64,
    pub lambda: f64,
    pub bound_rhs: f64,
    pub median_error: f64,
    /// Common column scale `d` used by the equal-scale constants.
    pub d: f64,
    pub delta: f64,
}

/// Per-trial check of the l2 error bound with the theoretical penalty:
/// simulate, fit with `lambda` from the coefficient bound, record
/// `||theta_hat - theta_star||_2` against the closed-form right-hand side.
pub fn verify_l2_bound(
    spec: &SimSpec,
    q1: f64,
    q2: f64,
    k_cone: f64,
    solver_opts: &SolverOptions,
    re_opts: &ReOptions,
) -> Result<(L2Report, Vec<TrialRow>)> {
    if !spec.family.is_convex() {
        return Err(Error::InvalidSimSpec(
            "the l2 bound harness requires a convex family".into(),
        ));
    }
    let ctx = build_context(spec)?;
    let db = spec.family.derivative_bounds(1)?;
    let diam = weighted_l1_diameter(&spec.domain, &ctx.scales);
    // common scale: the largest column scale bounds every |X_ij|
    let d = ctx.scales.iter().fold(0.0_f64, |a, b| a.max(*b));
    let (m1, m2) = bounds::mle_bound_parts(&ctx.x, &diam, d, db.f_m, db.f_m_plus_1, q1, q2)?;
    let m_q = m1 + m2;
    let lambda = solver::lambda_from_theory(k_cone, m_q, d)?;
    let c_gamma = solver::c_gamma_from_family(&spec.family)?;
    let (holds, kappa) = re_condition_holds(&ctx.x, spec.s0, k_cone, re_opts)?;
    if !holds {
        return Err(Error::RestrictedEigenvalueZero(kappa));
    }
    let rhs = solver::error_bound_rhs(m_q, spec.s0, spec.n, k_cone, d, c_gamma, kappa)?;

    let rows = collect_rows(&ctx, rhs, |t| {
        let data = simulate_trial(&ctx, t);
        let problem = LassoProblem::new(
            ctx.x.clone(),
            data.y,
            spec.family,
            spec.domain.clone(),
            Penalty::Uniform(lambda),
        )?;
        let fit = solver::fit(&problem, solver_opts)?;
        let err = fit
            .theta_hat
            .iter()
            .zip(&spec.theta_star)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        Ok(err)
    })?;
    let mut stats: Vec<f64> = rows.iter().map(|r| r.statistic).collect();
    stats.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median_error = if stats.is_empty() {
        0.0
    } else if stats.len() % 2 == 1 {
        stats[stats.len() / 2]
    } else {
        0.5 * (stats[stats.len() / 2 - 1] + stats[stats.len() / 2])
    };
    let coverage = make_report("l2-error-bound", &rows, q1 + q2, rhs);
    let report = L2Report {
        coverage,
        kappa,
        c_gamma,
        m1,
        m2,
        m_q,
        lambda,
        bound_rhs: rhs,
        median_error,
        d,
        delta: diam.unweighted,
    };
    Ok((report, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::ParamDomain;
    use crate::harness::sim::DesignKind;
    use crate::loss::{LinkFn, LossFamily};

    fn small_logistic_spec(trials: usize, seed: u64) -> SimSpec {
        SimSpec {
            n: 40,
            p: 4,
            s0: 2,
            design: DesignKind::Rademacher,
            theta_star: vec![0.4, -0.4, 0.0, 0.0],
            family: LossFamily::logistic(-2.2, 2.2).unwrap(),
            regime: NoiseRegime::Bounded,
            domain: ParamDomain::uniform_box(4, -0.5, 0.5).unwrap(),
            seed,
            trials,
        }
    }

    #[test]
    fn bounded_tail_small_run_passes_and_recounts() {
        let spec = small_logistic_spec(60, 21);
        let budget = SearchBudget {
            random_points: 256,
            hillclimb_steps: 40,
        };
        let (report, rows) = verify_tail_bounded(&spec, 0.05, 0.05, &budget).unwrap();
        assert_eq!(report.trials, 60);
        // recount: violations equal the number of flagged rows
        let recount = rows
            .iter()
            .filter(|r| r.statistic > r.threshold)
            .count();
        assert_eq!(report.violations, recount);
        assert!(report.pass, "rate {}", report.violation_rate);

        // detector sanity: a 50x smaller threshold must trip on these seeds
        let scaled: Vec<bool> = rows
            .iter()
            .map(|r| r.statistic > r.threshold / 50.0)
            .collect();
        assert!(scaled.iter().any(|v| *v));
    }

    #[test]
    fn reports_identical_across_thread_counts() {
        let spec = small_logistic_spec(24, 8);
        let budget = SearchBudget {
            random_points: 256,
            hillclimb_steps: 20,
        };
        let run = || verify_tail_bounded(&spec, 0.05, 0.05, &budget).unwrap();
        #[cfg(feature = "parallel")]
        {
            let pool1 = rayon::ThreadPoolBuilder::new()
                .num_threads(1)
                .build()
                .unwrap();
            let pool4 = rayon::ThreadPoolBuilder::new()
                .num_threads(4)
                .build()
                .unwrap();
            let (r1, rows1) = pool1.install(run);
            let (r4, rows4) = pool4.install(run);
            assert_eq!(rows1, rows4);
            assert_eq!(r1, r4);
        }
        #[cfg(not(feature = "parallel"))]
        {
            let (r1, rows1) = run();
            let (r2, rows2) = run();
            assert_eq!(rows1, rows2);
            assert_eq!(r1, r2);
        }
    }

    #[test]
    fn xi1_bounded_small_run() {
        let spec = small_logistic_spec(200, 3);
        let (report, rows) = verify_xi1(&spec, 0.05).unwrap();
        assert_eq!(rows.len(), 200);
        assert!(report.pass, "rate {}", report.violation_rate);
        assert!(report.threshold > 0.0);
    }

    #[test]
    fn massart_single_column_matches_half_normal_mean() {
        let x = DesignMatrix::from_row_major(1, 1, vec![1.0]).unwrap();
        let (report, _) = verify_massart(&x, 50_000, 13).unwrap();
        let half_normal = (2.0 / std::f64::consts::PI).sqrt();
        assert!(
            (report.mc_mean - half_normal).abs() < 0.01,
            "mean {}",
            report.mc_mean
        );
        assert!(report.pass);
        assert!((report.bound - 2.0 * 2.0_f64.ln().sqrt()).abs() < 1e-12);
    }

    #[test]
    fn gaussian_tail_identity_link_reduces_to_linear_term() {
        // F2 = 0 wipes A and B out; only the xi1 part of M(q, q') binds
        let spec = SimSpec {
            n: 50,
            p: 4,
            s0: 1,
            design: DesignKind::Rademacher,
            theta_star: vec![0.3, 0.0, 0.0, 0.0],
            family: LossFamily::gaussian_square(LinkFn::Identity, 1.0, -2.5, 2.5).unwrap(),
            regime: NoiseRegime::Gaussian {
                sigma0: 1.0,
                variances: vec![1.0; 50],
            },
            domain: ParamDomain::uniform_box(4, -0.5, 0.5).unwrap(),
            seed: 31,
            trials: 400,
        };
        let budget = SearchBudget {
            random_points: 256,
            hillclimb_steps: 10,
        };
        let (report, _) = verify_tail_gaussian(&spec, 0.05, 0.05, &budget).unwrap();
        // threshold collapses to sigma0 F1 sqrt(2 ln(p/q'))
        let want = (2.0 * (4.0_f64 / 0.05).ln()).sqrt();
        assert!((report.threshold - want).abs() < 1e-12, "{}", report.threshold);
        let slack = binomial_slack(0.05, 400);
        assert!(
            report.violation_rate <= 0.05 + slack,
            "rate {}",
            report.violation_rate
        );
    }

    #[test]
    fn gaussian_tail_zero_noise_never_violates() {
        let spec = SimSpec {
            n: 15,
            p: 3,
            s0: 1,
            design: DesignKind::Rademacher,
            theta_star: vec![0.3, 0.0, 0.0],
            family: LossFamily::gaussian_square(LinkFn::Sigmoid, 1e-3, -2.0, 2.0).unwrap(),
            regime: NoiseRegime::Gaussian {
                sigma0: 1e-3,
                variances: vec![0.0; 15],
            },
            domain: ParamDomain::uniform_box(3, -0.5, 0.5).unwrap(),
            seed: 17,
            trials: 16,
        };
        let budget = SearchBudget {
            random_points: 256,
            hillclimb_steps: 10,
        };
        let (report, _) = verify_tail_gaussian(&spec, 0.05, 0.05, &budget).unwrap();
        assert_eq!(report.violations, 0);
    }

    #[test]
    fn l2_bound_zero_noise_identity_never_violates() {
        let spec = SimSpec {
            n: 16,
            p: 4,
            s0: 1,
            design: DesignKind::Rademacher,
            theta_star: vec![0.2, 0.0, 0.0, 0.0],
            family: LossFamily::gaussian_square(LinkFn::Identity, 1.0, -3.0, 3.0).unwrap(),
            regime: NoiseRegime::Gaussian {
                sigma0: 1.0,
                variances: vec![0.0; 16],
            },
            domain: ParamDomain::uniform_box(4, -0.5, 0.5).unwrap(),
            seed: 23,
            trials: 8,
        };
        let (report, rows) = verify_l2_bound(
            &spec,
            0.05,
            0.05,
            3.0,
            &SolverOptions::default(),
            &ReOptions::default(),
        )
        .unwrap();
        assert!(report.kappa > 0.0);
        assert_eq!(report.coverage.violations, 0);
        assert_eq!(rows.len(), 8);
        assert!(report.median_error <= report.bound_rhs);
    }
}
