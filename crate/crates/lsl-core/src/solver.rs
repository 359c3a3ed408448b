//! Penalized estimation over the compact box.
//!
//! The objective is `sum_i gamma(x_i' v, y_i) + sum_j pen_j |v_j|` minimized
//! over an axis-aligned box. Projected proximal gradient with backtracking
//! handles the smooth part; the proximal step is soft-thresholding followed
//! by the box clamp, which is exact for a separable box + l1 penalty.
//! Convex families run a single start; nonconvex links take the best of a
//! deterministic set of scrambled low-discrepancy starts.

use crate::design::{check_feasibility, ParamDomain};
use crate::error::{Error, Result};
use crate::loss::{LinkFn, LossFamily, LossKind};
use crate::matrix::DesignMatrix;
use crate::rng::{stream, CounterRng};

/// Penalty weights: one common value (the `lambda * d` of the equal-scale
/// setting) or per-coordinate weights.
#[derive(Debug, Clone, PartialEq)]
pub enum Penalty {
    Uniform(f64),
    Weighted(Vec<f64>),
}

impl Penalty {
    fn validate(&self, p: usize) -> Result<()> {
        match self {
            Penalty::Uniform(w) => {
                if !(w.is_finite() && *w > 0.0) {
                    return Err(Error::InvalidPenalty(*w));
                }
            }
            Penalty::Weighted(ws) => {
                if ws.len() != p {
                    return Err(Error::InvalidPenalty(f64::NAN));
                }
                if let Some(w) = ws.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
                    return Err(Error::InvalidPenalty(*w));
                }
            }
        }
        Ok(())
    }

    #[inline]
    fn weight(&self, j: usize) -> f64 {
        match self {
            Penalty::Uniform(w) => *w,
            Penalty::Weighted(ws) => ws[j],
        }
    }
}

/// A feasible penalized problem instance.
#[derive(Debug, Clone)]
pub struct LassoProblem {
    pub x: DesignMatrix,
    pub y: Vec<f64>,
    pub family: LossFamily,
    pub domain: ParamDomain,
    pub penalty: Penalty,
}

impl LassoProblem {
    pub fn new(
        x: DesignMatrix,
        y: Vec<f64>,
        family: LossFamily,
        domain: ParamDomain,
        penalty: Penalty,
    ) -> Result<Self> {
        if y.len() != x.n_rows() {
            return Err(Error::InvalidDesign(format!(
                "{} responses for {} rows",
                y.len(),
                x.n_rows()
            )));
        }
        if domain.dim() != x.n_cols() {
            return Err(Error::InvalidDomain(format!(
                "domain dimension {} vs {} columns",
                domain.dim(),
                x.n_cols()
            )));
        }
        for &yi in &y {
            family.validate_response(yi)?;
        }
        penalty.validate(x.n_cols())?;
        let chk = check_feasibility(&x, &domain, family.interval());
        if !chk.feasible {
            let row = chk.violating_row.unwrap_or(0);
            return Err(Error::Infeasible {
                row,
                lo: chk.row_range.0,
                hi: chk.row_range.1,
            });
        }
        Ok(Self {
            x,
            y,
            family,
            domain,
            penalty,
        })
    }

    fn smooth_at(&self, v: &[f64]) -> f64 {
        (0..self.x.n_rows())
            .map(|i| {
                self.family
                    .loss_value_unchecked(self.x.row_dot(i, v), self.y[i])
            })
            .sum()
    }

    fn smooth_grad(&self, v: &[f64]) -> (f64, Vec<f64>) {
        let mut value = 0.0;
        let mut resid = vec![0.0; self.x.n_rows()];
        for i in 0..self.x.n_rows() {
            let t = self.x.row_dot(i, v);
            value += self.family.loss_value_unchecked(t, self.y[i]);
            resid[i] = self.family.loss_deriv_unchecked(t, self.y[i], 1);
        }
        (value, self.x.transpose_matvec(&resid))
    }

    fn penalty_at(&self, v: &[f64]) -> f64 {
        v.iter()
            .enumerate()
            .map(|(j, vj)| self.penalty.weight(j) * vj.abs())
            .sum()
    }

    /// Full objective at `v`.
    pub fn objective(&self, v: &[f64]) -> Result<f64> {
        let obj = self.smooth_at(v) + self.penalty_at(v);
        if obj.is_finite() {
            Ok(obj)
        } else {
            Err(Error::NonFiniteObjective)
        }
    }

    /// Upper bound on the second derivative of the smooth per-row loss over
    /// the working interval and the observed responses; scales the step.
    fn curvature_bound(&self) -> f64 {
        let (a, b) = self.family.interval();
        match self.family.kind() {
            LossKind::Logistic => 0.25,
            LossKind::PoissonLog => b.exp(),
            LossKind::GaussianSquare { link, .. } => {
                if link == LinkFn::Identity {
                    return 1.0;
                }
                let (ymin, ymax) = self
                    .y
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| {
                        (lo.min(y), hi.max(y))
                    });
                let mut sup: f64 = 0.0;
                for i in 0..=400 {
                    let t = a + (b - a) * i as f64 / 400.0;
                    let d1 = link.deriv(t, 1);
                    let d2 = link.deriv(t, 2).abs();
                    let f = link.value(t);
                    let spread = (f - ymin).abs().max((f - ymax).abs());
                    sup = sup.max(d1 * d1 + spread * d2);
                }
                sup.max(1e-12)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_iter: usize,
    pub kkt_tol: f64,
    /// Multi-starts used for nonconvex links.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            kkt_tol: 1e-8,
            restarts: 16,
            seed: 0,
        }
    }
}

/// Fit result with its optimality certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub theta_hat: Vec<f64>,
    pub objective: f64,
    /// `||v - prox(v - s grad f(v))||_2` at the base step `s = 1/L`.
    pub kkt_residual: f64,
    pub restarts_used: usize,
    pub converged: bool,
}

struct RunOutcome {
    theta: Vec<f64>,
    objective: f64,
    kkt: f64,
    converged: bool,
}

fn prox_step(
    problem: &LassoProblem,
    v: &[f64],
    grad: &[f64],
    step: f64,
    out: &mut Vec<f64>,
) {
    out.clear();
    for (j, (vj, gj)) in v.iter().zip(grad).enumerate() {
        let z = vj - step * gj;
        let thr = step * problem.penalty.weight(j);
        let soft = z.signum() * (z.abs() - thr).max(0.0);
        out.push(soft.clamp(problem.domain.lower()[j], problem.domain.upper()[j]));
    }
}

fn l2_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn run_from(problem: &LassoProblem, start: &[f64], opts: &SolverOptions, base_step: f64) -> Result<RunOutcome> {
    let mut v = start.to_vec();
    problem.domain.clamp(&mut v);
    let (mut sval, mut grad) = problem.smooth_grad(&v);
    if !sval.is_finite() {
        return Err(Error::NonFiniteObjective);
    }
    let mut step = base_step;
    let mut cand = Vec::with_capacity(v.len());
    let mut kkt = f64::INFINITY;
    let mut converged = false;
    for _ in 0..opts.max_iter {
        prox_step(problem, &v, &grad, base_step, &mut cand);
        kkt = l2_dist(&v, &cand);
        if kkt <= opts.kkt_tol {
            converged = true;
            break;
        }
        // backtracking on the majorization at the current trial step
        loop {
            prox_step(problem, &v, &grad, step, &mut cand);
            let ip: f64 = cand
                .iter()
                .zip(&v)
                .zip(&grad)
                .map(|((c, vi), g)| (c - vi) * g)
                .sum();
            let dist2 = cand
                .iter()
                .zip(&v)
                .map(|(c, vi)| (c - vi) * (c - vi))
                .sum::<f64>();
            let s_cand = problem.smooth_at(&cand);
            if !s_cand.is_finite() {
                return Err(Error::NonFiniteObjective);
            }
            if s_cand <= sval + ip + dist2 / (2.0 * step) + 1e-12 * sval.abs().max(1.0) || step < 1e-18 {
                break;
            }
            step *= 0.5;
        }
        std::mem::swap(&mut v, &mut cand);
        let (new_val, new_grad) = problem.smooth_grad(&v);
        sval = new_val;
        grad = new_grad;
        step = (step * 2.0).min(base_step);
    }
    let objective = sval + problem.penalty_at(&v);
    if !objective.is_finite() {
        return Err(Error::NonFiniteObjective);
    }
    Ok(RunOutcome {
        theta: v,
        objective,
        kkt,
        converged,
    })
}

fn van_der_corput(mut index: usize, base: usize) -> f64 {
    let mut value = 0.0;
    let mut denom = 1.0;
    while index > 0 {
        denom *= base as f64;
        value += (index % base) as f64 / denom;
        index /= base;
    }
    value
}

fn primes(count: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(count);
    let mut candidate = 2usize;
    while out.len() < count {
        if !out.iter().any(|p| candidate % p == 0) {
            out.push(candidate);
        }
        candidate += 1;
    }
    out
}

/// Solve the penalized problem.
///
/// Convex families (logistic, Poisson, identity-link square loss) use one
/// start and the returned point is a global minimum up to `kkt_tol`. For
/// the nonconvex links the best of `opts.restarts` scrambled Halton starts
/// wins; ties within 1e-12 go to the smaller l1 norm, then lexicographic
/// order.
pub fn fit(problem: &LassoProblem, opts: &SolverOptions) -> Result<LassoFit> {
    let lip = problem.x.spectral_norm_sq(100) * problem.curvature_bound();
    let base_step = if lip > 0.0 { 1.0 / lip } else { 1.0 };

    let starts: Vec<Vec<f64>> = if problem.family.is_convex() {
        vec![vec![0.0; problem.x.n_cols()]]
    } else {
        let p = problem.x.n_cols();
        let bases = primes(p);
        let mut rng = CounterRng::new(opts.seed, 0, stream::SOLVER);
        let shifts: Vec<f64> = (0..p).map(|_| rng.next_f64()).collect();
        (0..opts.restarts.max(1))
            .map(|k| {
                (0..p)
                    .map(|j| {
                        let u = (van_der_corput(k + 1, bases[j]) + shifts[j]).fract();
                        problem.domain.lower()[j]
                            + u * (problem.domain.upper()[j] - problem.domain.lower()[j])
                    })
                    .collect()
            })
            .collect()
    };

    let mut best: Option<RunOutcome> = None;
    let restarts_used = starts.len();
    for start in &starts {
        let run = run_from(problem, start, opts, base_step)?;
        best = Some(match best {
            None => run,
            Some(cur) => {
                if better(&run, &cur) {
                    run
                } else {
                    cur
                }
            }
        });
    }
    let best = best.expect("at least one start");
    Ok(LassoFit {
        theta_hat: best.theta,
        objective: best.objective,
        kkt_residual: best.kkt,
        restarts_used,
        converged: best.converged,
    })
}

fn better(a: &RunOutcome, b: &RunOutcome) -> bool {
    if (a.objective - b.objective).abs() > 1e-12 {
        return a.objective < b.objective;
    }
    let l1a: f64 = a.theta.iter().map(|v| v.abs()).sum();
    let l1b: f64 = b.theta.iter().map(|v| v.abs()).sum();
    if (l1a - l1b).abs() > 1e-12 {
        return l1a < l1b;
    }
    a.theta
        .iter()
        .zip(&b.theta)
        .find(|(x, y)| x != y)
        .map(|(x, y)| x < y)
        .unwrap_or(false)
}

/// Theoretical penalty level `lambda = (K + 1) M_q d / (K - 1)`.
pub fn lambda_from_theory(k: f64, m_q: f64, d: f64) -> Result<f64> {
    if !(k.is_finite() && k > 1.0) {
        return Err(Error::ConeConstantTooSmall(k));
    }
    if !(m_q >= 0.0 && d > 0.0) {
        return Err(Error::InvalidPenalty(m_q.min(d)));
    }
    Ok((k + 1.0) * m_q * d / (k - 1.0))
}

/// Right-hand side of the l2 error bound:
/// `(M_q sqrt(s0) / N) * 2 sqrt(2 + K^2) K d / (C_gamma kappa^2 (K - 1))`.
pub fn error_bound_rhs(
    m_q: f64,
    s0: usize,
    n: usize,
    k: f64,
    d: f64,
    c_gamma: f64,
    kappa: f64,
) -> Result<f64> {
    if !(k.is_finite() && k > 1.0) {
        return Err(Error::ConeConstantTooSmall(k));
    }
    if kappa <= 0.0 {
        return Err(Error::RestrictedEigenvalueZero(kappa));
    }
    if c_gamma <= 0.0 {
        return Err(Error::DegenerateCurvature(c_gamma));
    }
    Ok(m_q * (s0 as f64).sqrt() / n as f64 * (2.0 * (2.0 + k * k).sqrt() * k * d)
        / (c_gamma * kappa * kappa * (k - 1.0)))
}

/// Curvature constant used as `C_gamma` in the error bound.
pub fn c_gamma_from_family(family: &LossFamily) -> Result<f64> {
    family.curvature_constant()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, CounterRng};

    fn identity_problem(y: Vec<f64>, lam: f64, half_width: f64) -> LassoProblem {
        let p = y.len();
        let rows: Vec<Vec<f64>> = (0..p)
            .map(|i| (0..p).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let reach = half_width + 1.0;
        LassoProblem::new(
            DesignMatrix::from_rows(&rows).unwrap(),
            y,
            LossFamily::gaussian_square(LinkFn::Identity, 1.0, -reach, reach).unwrap(),
            ParamDomain::uniform_box(p, -half_width, half_width).unwrap(),
            Penalty::Uniform(lam),
        )
        .unwrap()
    }

    #[test]
    fn penalty_dominates_at_zero_residual() {
        let problem = identity_problem(vec![0.0, 0.0], 1.0, 1.0);
        let fit = fit(&problem, &SolverOptions::default()).unwrap();
        assert_eq!(fit.theta_hat, vec![0.0, 0.0]);
        assert!(fit.converged);
    }

    #[test]
    fn soft_threshold_closed_form() {
        let problem = identity_problem(vec![2.0], 0.5, 10.0);
        let fit = fit(&problem, &SolverOptions::default()).unwrap();
        assert!((fit.theta_hat[0] - 1.5).abs() < 1e-10, "{:?}", fit.theta_hat);
        assert!(fit.kkt_residual <= 1e-8);
    }

    #[test]
    fn logistic_matches_grid_bruteforce() {
        let mut rng = CounterRng::new(42, 0, stream::DESIGN);
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..2).map(|_| rng.uniform_in(-1.0, 1.0)).collect())
            .collect();
        let x = DesignMatrix::from_rows(&rows).unwrap();
        let theta_true = [1.0, -0.5];
        let mut noise = CounterRng::new(42, 1, stream::NOISE);
        let y: Vec<f64> = (0..20)
            .map(|i| {
                let p = crate::loss::sigmoid(x.row_dot(i, &theta_true));
                if noise.bernoulli(p) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let problem = LassoProblem::new(
            x,
            y,
            LossFamily::logistic(-5.0, 5.0).unwrap(),
            ParamDomain::uniform_box(2, -2.0, 2.0).unwrap(),
            Penalty::Uniform(0.3),
        )
        .unwrap();
        let fit = fit(&problem, &SolverOptions::default()).unwrap();

        let mut grid_min = f64::INFINITY;
        for i in 0..=400 {
            for j in 0..=400 {
                let v = [-2.0 + i as f64 / 100.0, -2.0 + j as f64 / 100.0];
                grid_min = grid_min.min(problem.objective(&v).unwrap());
            }
        }
        assert!(fit.objective <= grid_min + 1e-9);
        assert!(grid_min - fit.objective <= 1e-3, "gap {}", grid_min - fit.objective);
        assert!(fit.kkt_residual <= 1e-8);
    }

    #[test]
    fn fits_are_deterministic() {
        let problem = identity_problem(vec![1.0, -2.0, 0.3], 0.4, 3.0);
        let opts = SolverOptions {
            seed: 9,
            ..Default::default()
        };
        let f1 = fit(&problem, &opts).unwrap();
        let f2 = fit(&problem, &opts).unwrap();
        assert_eq!(f1.theta_hat, f2.theta_hat);
        assert_eq!(f1.objective, f2.objective);
    }

    #[test]
    fn lambda_and_rhs_scalar_examples() {
        assert_eq!(lambda_from_theory(3.0, 1.0, 1.0).unwrap(), 2.0);
        assert_eq!(lambda_from_theory(3.0, 0.0, 1.0).unwrap(), 0.0);
        let lim = lambda_from_theory(1e6, 2.5, 1.0).unwrap();
        assert!((lim - 2.5).abs() / 2.5 < 1e-5);
        assert!(lambda_from_theory(1.0, 1.0, 1.0).is_err());

        let rhs = error_bound_rhs(1.0, 1, 100, 3.0, 1.0, 1.0, 1.0).unwrap();
        assert!((rhs - 3.0 * 11.0_f64.sqrt() / 100.0).abs() < 1e-12);
        assert_eq!(error_bound_rhs(1.0, 0, 100, 3.0, 1.0, 1.0, 1.0).unwrap(), 0.0);
        // 1/N homogeneity
        let r4 = error_bound_rhs(1.0, 1, 400, 3.0, 1.0, 1.0, 1.0).unwrap();
        assert!((rhs - 4.0 * r4).abs() < 1e-12);
        assert!(error_bound_rhs(1.0, 1, 100, 3.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn nonconvex_link_multistart_box_respect() {
        let rows: Vec<Vec<f64>> = vec![vec![1.0, 0.4], vec![-0.6, 1.0], vec![0.2, -0.8]];
        let x = DesignMatrix::from_rows(&rows).unwrap();
        let problem = LassoProblem::new(
            x,
            vec![0.9, 0.1, 0.4],
            LossFamily::gaussian_square(LinkFn::Sigmoid, 1.0, -4.0, 4.0).unwrap(),
            ParamDomain::uniform_box(2, -1.5, 1.5).unwrap(),
            Penalty::Uniform(0.05),
        )
        .unwrap();
        let fit = fit(&problem, &SolverOptions::default()).unwrap();
        assert_eq!(fit.restarts_used, 16);
        assert!(problem.domain.contains(&fit.theta_hat, 0.0));
    }
}
