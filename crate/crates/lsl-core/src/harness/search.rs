//! Empirical suprema of the centered loss process over the parameter box.
//!
//! The statistic of interest is the weighted-l1 Lipschitz ratio of the
//! centered process, together with the remainder ratio (linear term
//! subtracted) and the linear coefficient itself. The search set is every
//! box vertex (up to 12 coordinates), per-coordinate probes through theta,
//! a budgeted batch of uniform points, and coordinate-wise hill climbing
//! seeded from the best of a fixed prefix of that batch, so that enlarging
//! the budget can only grow the evaluated set.

use crate::design::ParamDomain;
use crate::error::{Error, Result};
use crate::loss::{LossFamily, LossKind};
use crate::matrix::DesignMatrix;
use crate::rng::{stream, CounterRng};

use super::sim::TrialData;

/// Points evaluated beyond the always-on vertex and probe sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBudget {
    pub random_points: usize,
    pub hillclimb_steps: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            random_points: 4096,
            hillclimb_steps: 200,
        }
    }
}

/// Hill climbing starts from the best point of this fixed-size prefix of
/// the random batch, keeping nested budgets nested.
const CLIMB_SEED_PREFIX: usize = 256;
/// Vertex enumeration cap.
const VERTEX_COORDS: usize = 12;
/// Ratios are skipped when the weighted distance falls below this.
const DENOM_FLOOR: f64 = 1e-15;

/// Normalization of the Gaussian linear coefficient `W_j`.
#[derive(Debug, Clone)]
pub struct Xi1Norm {
    pub sigma0: f64,
    pub f1: f64,
    /// Noise weights `w_j`; zero-weight columns are excluded from the max.
    pub w: Vec<f64>,
}

/// Inputs of the ratio search that stay fixed across trials.
#[derive(Debug, Clone)]
pub struct ProcessSpec<'a> {
    pub x: &'a DesignMatrix,
    pub family: &'a LossFamily,
    pub domain: &'a ParamDomain,
    pub theta: &'a [f64],
    /// Weights of the Lipschitz-ratio denominator (`d_j`, or
    /// `lambda_j = max(w_j, d_j)` in the Gaussian regime).
    pub ratio_weights: &'a [f64],
    /// Column scales `d_j` for the remainder ratio denominator.
    pub scales: &'a [f64],
    /// Present in the Gaussian regime.
    pub xi1_norm: Option<Xi1Norm>,
}

/// Suprema recorded by one trial's search.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalProcessSample {
    /// max over the search set of |D(v)| / sum_j w_j |v_j - theta_j|.
    pub sup_ratio: f64,
    /// max of |D(v) - linear(v)| / sum_j d_j |v_j - theta_j|.
    pub sup_xi: f64,
    /// Bounded: max_j |g_j| / d_j; Gaussian: max_j |W_j|.
    pub xi1_value: f64,
    pub argmax_v: Vec<f64>,
}

/// Centered-process evaluator for one trial.
struct Evaluator<'a> {
    spec: &'a ProcessSpec<'a>,
    data: &'a TrialData,
    t_theta: Vec<f64>,
    /// Centered total loss at theta (bounded regime only).
    base_theta: f64,
    /// Coefficients of the linear term, `g_j`.
    lin: Vec<f64>,
}

impl<'a> Evaluator<'a> {
    fn new(spec: &'a ProcessSpec<'a>, data: &'a TrialData) -> Result<Self> {
        let x = spec.x;
        let n = x.n_rows();
        let t_theta = x.matvec(spec.theta);
        let gaussian = matches!(spec.family.kind(), LossKind::GaussianSquare { .. });
        if gaussian && data.noise.is_none() {
            return Err(Error::CenteringUnavailable(
                "square-loss process needs the realized noise vector".into(),
            ));
        }
        let mut base_theta = 0.0;
        let mut per_row = vec![0.0; n];
        if gaussian {
            let noise = data.noise.as_ref().unwrap();
            for i in 0..n {
                per_row[i] = noise[i] * spec.family.taylor_base(t_theta[i], 0.0, 1);
            }
        } else {
            for i in 0..n {
                let t = t_theta[i];
                base_theta += spec.family.loss_value_unchecked(t, data.y[i])
                    - spec.family.expected_loss(t, data.t0[i], 0.0)?;
                per_row[i] = spec.family.centered_dloss(t, data.t0[i], data.y[i]);
            }
        }
        let lin = x.transpose_matvec(&per_row);
        Ok(Self {
            spec,
            data,
            t_theta,
            base_theta,
            lin,
        })
    }

    /// Centered process difference `D(v)` between `v` and theta.
    fn process_diff(&self, v: &[f64]) -> f64 {
        let x = self.spec.x;
        let family = self.spec.family;
        match family.kind() {
            LossKind::GaussianSquare { link, .. } => {
                let noise = self.data.noise.as_ref().unwrap();
                (0..x.n_rows())
                    .map(|i| {
                        noise[i] * (link.value(x.row_dot(i, v)) - link.value(self.t_theta[i]))
                    })
                    .sum()
            }
            _ => {
                let mut acc = 0.0;
                for i in 0..x.n_rows() {
                    let t = x.row_dot(i, v);
                    acc += family.loss_value_unchecked(t, self.data.y[i])
                        - family
                            .expected_loss(t, self.data.t0[i], 0.0)
                            .expect("bounded families have closed-form centering");
                }
                acc - self.base_theta
            }
        }
    }

    fn xi1_value(&self) -> f64 {
        match &self.spec.xi1_norm {
            None => self
                .lin
                .iter()
                .zip(self.spec.scales)
                .map(|(g, d)| (g / d).abs())
                .fold(0.0, f64::max),
            Some(norm) => self
                .lin
                .iter()
                .zip(&norm.w)
                .filter(|(_, w)| **w > 1e-300)
                .map(|(g, w)| (g / (norm.sigma0 * norm.f1 * w)).abs())
                .fold(0.0, f64::max),
        }
    }
}

struct SearchState {
    sup_ratio: f64,
    sup_xi: f64,
    argmax_v: Vec<f64>,
}

impl SearchState {
    /// Returns the ratio at `v` (0 when under the denominator floor).
    fn visit(&mut self, ev: &Evaluator, v: &[f64]) -> f64 {
        let theta = ev.spec.theta;
        let mut denom_ratio = 0.0;
        let mut denom_xi = 0.0;
        let mut lin_term = 0.0;
        for (j, (vj, tj)) in v.iter().zip(theta).enumerate() {
            let diff = vj - tj;
            denom_ratio += ev.spec.ratio_weights[j] * diff.abs();
            denom_xi += ev.spec.scales[j] * diff.abs();
            lin_term += ev.lin[j] * diff;
        }
        if denom_ratio < DENOM_FLOOR {
            return 0.0;
        }
        let d = ev.process_diff(v);
        let ratio = d.abs() / denom_ratio;
        if ratio > self.sup_ratio {
            self.sup_ratio = ratio;
            self.argmax_v.clear();
            self.argmax_v.extend_from_slice(v);
        }
        if denom_xi >= DENOM_FLOOR {
            let xi = (d - lin_term).abs() / denom_xi;
            if xi > self.sup_xi {
                self.sup_xi = xi;
            }
        }
        ratio
    }
}

/// Maximize the empirical Lipschitz ratio of the centered process over the
/// box. Returns certified lower bounds of the suprema.
pub fn empirical_lsl_ratio(
    spec: &ProcessSpec,
    data: &TrialData,
    budget: &SearchBudget,
    seed: u64,
    trial: u64,
) -> Result<EmpiricalProcessSample> {
    let p = spec.domain.dim();
    if !spec.domain.contains(spec.theta, 1e-12) {
        return Err(Error::InvalidSimSpec("theta outside the domain".into()));
    }
    let ev = Evaluator::new(spec, data)?;
    let mut state = SearchState {
        sup_ratio: 0.0,
        sup_xi: 0.0,
        argmax_v: spec.theta.to_vec(),
    };

    let mut best_seed_point: Option<(f64, Vec<f64>)> = None;
    let consider_seed = |ratio: f64, v: &[f64], best: &mut Option<(f64, Vec<f64>)>| {
        if best.as_ref().is_none_or(|(r, _)| ratio > *r) {
            *best = Some((ratio, v.to_vec()));
        }
    };

    // box vertices (the first VERTEX_COORDS coordinates; the rest stay at
    // theta, which keeps the points in the box for any p)
    let free = p.min(VERTEX_COORDS);
    for mask in 0..(1u64 << free) {
        let mut v = spec.theta.to_vec();
        for (j, vj) in v.iter_mut().enumerate().take(free) {
            *vj = if mask >> j & 1 == 1 {
                spec.domain.upper()[j]
            } else {
                spec.domain.lower()[j]
            };
        }
        let r = state.visit(&ev, &v);
        consider_seed(r, &v, &mut best_seed_point);
    }

    // per-coordinate probes through theta: exact maximizers when the
    // centered process is linear in v
    for j in 0..p {
        for edge in [spec.domain.lower()[j], spec.domain.upper()[j]] {
            let mut v = spec.theta.to_vec();
            v[j] = edge;
            let r = state.visit(&ev, &v);
            consider_seed(r, &v, &mut best_seed_point);
        }
    }

    // budgeted uniform batch; only the fixed prefix may seed the climb
    let mut rng = CounterRng::new(seed, trial, stream::SEARCH);
    for k in 0..budget.random_points {
        let v = spec.domain.sample_uniform(&mut rng);
        let r = state.visit(&ev, &v);
        if k < CLIMB_SEED_PREFIX {
            consider_seed(r, &v, &mut best_seed_point);
        }
    }

    // coordinate-wise hill climbing with a halving step pattern
    if let Some((mut cur_ratio, mut cur)) = best_seed_point {
        let mut deltas: Vec<f64> = (0..p)
            .map(|j| 0.25 * (spec.domain.upper()[j] - spec.domain.lower()[j]))
            .collect();
        let mut improved_in_cycle = false;
        for step in 0..budget.hillclimb_steps {
            let j = step % p;
            for dir in [1.0, -1.0] {
                let cand_j = (cur[j] + dir * deltas[j])
                    .clamp(spec.domain.lower()[j], spec.domain.upper()[j]);
                if cand_j == cur[j] {
                    continue;
                }
                let old = cur[j];
                cur[j] = cand_j;
                let r = state.visit(&ev, &cur);
                if r > cur_ratio {
                    cur_ratio = r;
                    improved_in_cycle = true;
                    break;
                }
                cur[j] = old;
            }
            if j == p - 1 {
                if !improved_in_cycle {
                    for d in &mut deltas {
                        *d *= 0.5;
                    }
                }
                improved_in_cycle = false;
            }
        }
    }

    Ok(EmpiricalProcessSample {
        sup_ratio: state.sup_ratio,
        sup_xi: state.sup_xi,
        xi1_value: ev.xi1_value(),
        argmax_v: state.argmax_v,
    })
}
