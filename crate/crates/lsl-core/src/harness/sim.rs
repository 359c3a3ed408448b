//! Synthetic dataset generation under the well-specified model.

use crate::design::{check_feasibility, column_scales, ParamDomain};
use crate::error::{Error, Result};
use crate::loss::{LossFamily, LossKind};
use crate::matrix::DesignMatrix;
use crate::rng::{stream, CounterRng};

/// How the fixed design is obtained.
#[derive(Debug, Clone)]
pub enum DesignKind {
    /// Entries drawn once from {-1, +1}.
    Rademacher,
    /// Entries drawn once uniformly from [-1, 1].
    UniformBox,
    FromFile(DesignMatrix),
}

/// Noise model for the responses.
#[derive(Debug, Clone)]
pub enum NoiseRegime {
    /// Responses drawn from the family likelihood at the true index.
    Bounded,
    /// Additive centered Gaussian noise on the link values, one variance
    /// per row, each at most `sigma0^2`.
    Gaussian { sigma0: f64, variances: Vec<f64> },
}

/// Full description of a simulation experiment.
#[derive(Debug, Clone)]
pub struct SimSpec {
    pub n: usize,
    pub p: usize,
    pub s0: usize,
    pub design: DesignKind,
    pub theta_star: Vec<f64>,
    pub family: LossFamily,
    pub regime: NoiseRegime,
    pub domain: ParamDomain,
    pub seed: u64,
    pub trials: usize,
}

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.n == 0 {
            return Err(Error::InvalidSimSpec("need n >= 1 and p >= 1".into()));
        }
        if self.theta_star.len() != self.p {
            return Err(Error::InvalidSimSpec(format!(
                "theta_star has {} entries for p = {}",
                self.theta_star.len(),
                self.p
            )));
        }
        let s0 = self.theta_star.iter().filter(|v| **v != 0.0).count();
        if s0 != self.s0 {
            return Err(Error::InvalidSimSpec(format!(
                "theta_star has {s0} nonzeros but s0 = {}",
                self.s0
            )));
        }
        if self.domain.dim() != self.p {
            return Err(Error::InvalidSimSpec("domain dimension mismatch".into()));
        }
        if !self.domain.contains(&self.theta_star, 0.0) {
            return Err(Error::InvalidSimSpec("theta_star outside the domain".into()));
        }
        match (&self.regime, self.family.kind()) {
            (NoiseRegime::Bounded, LossKind::GaussianSquare { .. }) => {
                return Err(Error::InvalidSimSpec(
                    "square loss requires the Gaussian regime".into(),
                ))
            }
            (NoiseRegime::Gaussian { .. }, LossKind::Logistic | LossKind::PoissonLog) => {
                return Err(Error::InvalidSimSpec(
                    "discrete likelihoods use the bounded regime".into(),
                ))
            }
            (NoiseRegime::Gaussian { sigma0, variances }, _) => {
                if !(sigma0.is_finite() && *sigma0 > 0.0) {
                    return Err(Error::InvalidSigma0(*sigma0));
                }
                if variances.len() != self.n {
                    return Err(Error::InvalidSimSpec(format!(
                        "{} variances for n = {}",
                        variances.len(),
                        self.n
                    )));
                }
                let cap = sigma0 * sigma0;
                for (i, &v) in variances.iter().enumerate() {
                    if !(v.is_finite() && v >= 0.0) || v > cap * (1.0 + 1e-12) {
                        return Err(Error::VarianceExceedsCap {
                            index: i,
                            value: v,
                            cap,
                        });
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// The design drawn once from the spec's seed, plus its column scales.
#[derive(Debug, Clone)]
pub struct SimContext {
    pub spec: SimSpec,
    pub x: DesignMatrix,
    pub scales: Vec<f64>,
}

/// Draw the design (stream 0 of the seed; trials never redraw it) and check
/// the range-feasibility assumption against the family interval.
pub fn build_context(spec: &SimSpec) -> Result<SimContext> {
    spec.validate()?;
    let mut rng = CounterRng::new(spec.seed, 0, stream::DESIGN);
    let x = match &spec.design {
        DesignKind::Rademacher => {
            let data: Vec<f64> = (0..spec.n * spec.p).map(|_| rng.rademacher()).collect();
            DesignMatrix::from_row_major(spec.n, spec.p, data)?
        }
        DesignKind::UniformBox => {
            let data: Vec<f64> = (0..spec.n * spec.p)
                .map(|_| rng.uniform_in(-1.0, 1.0))
                .collect();
            DesignMatrix::from_row_major(spec.n, spec.p, data)?
        }
        DesignKind::FromFile(x) => {
            if x.n_rows() != spec.n || x.n_cols() != spec.p {
                return Err(Error::InvalidSimSpec(format!(
                    "file design is {} x {}, spec wants {} x {}",
                    x.n_rows(),
                    x.n_cols(),
                    spec.n,
                    spec.p
                )));
            }
            x.clone()
        }
    };
    let chk = check_feasibility(&x, &spec.domain, spec.family.interval());
    if !chk.feasible {
        return Err(Error::Infeasible {
            row: chk.violating_row.unwrap_or(0),
            lo: chk.row_range.0,
            hi: chk.row_range.1,
        });
    }
    let scales = column_scales(&x)?;
    Ok(SimContext {
        spec: spec.clone(),
        x,
        scales,
    })
}

/// One simulated trial: responses, true indices, and (in the Gaussian
/// regime) the realized noise.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialData {
    pub y: Vec<f64>,
    /// `x_i' theta_star` per row.
    pub t0: Vec<f64>,
    pub noise: Option<Vec<f64>>,
}

/// Deterministic function of `(spec.seed, trial)`.
pub fn simulate_trial(ctx: &SimContext, trial: usize) -> TrialData {
    let spec = &ctx.spec;
    let t0 = ctx.x.matvec(&spec.theta_star);
    let mut rng = CounterRng::new(spec.seed, trial as u64, stream::NOISE);
    match (&spec.regime, spec.family.kind()) {
        (NoiseRegime::Gaussian { variances, .. }, LossKind::GaussianSquare { link, .. }) => {
            let noise: Vec<f64> = variances.iter().map(|v| rng.normal() * v.sqrt()).collect();
            let y: Vec<f64> = t0
                .iter()
                .zip(&noise)
                .map(|(t, e)| link.value(*t) + e)
                .collect();
            TrialData {
                y,
                t0,
                noise: Some(noise),
            }
        }
        (_, LossKind::Logistic) => {
            let y: Vec<f64> = t0
                .iter()
                .map(|t| {
                    if rng.bernoulli(crate::loss::sigmoid(*t)) {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            TrialData { y, t0, noise: None }
        }
        (_, LossKind::PoissonLog) => {
            let y: Vec<f64> = t0.iter().map(|t| rng.poisson(t.exp()) as f64).collect();
            TrialData { y, t0, noise: None }
        }
        (NoiseRegime::Bounded, LossKind::GaussianSquare { .. }) => {
            unreachable!("rejected by validate")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::LinkFn;

    fn logistic_spec(seed: u64) -> SimSpec {
        SimSpec {
            n: 20,
            p: 3,
            s0: 1,
            design: DesignKind::Rademacher,
            theta_star: vec![0.3, 0.0, 0.0],
            family: LossFamily::logistic(-2.0, 2.0).unwrap(),
            regime: NoiseRegime::Bounded,
            domain: ParamDomain::uniform_box(3, -0.5, 0.5).unwrap(),
            seed,
            trials: 4,
        }
    }

    #[test]
    fn validation_catches_mismatches() {
        let mut bad = logistic_spec(1);
        bad.s0 = 2;
        assert!(bad.validate().is_err());

        let mut outside = logistic_spec(1);
        outside.theta_star = vec![2.0, 0.0, 0.0];
        outside.s0 = 1;
        assert!(outside.validate().is_err());

        let mut wrong_regime = logistic_spec(1);
        wrong_regime.regime = NoiseRegime::Gaussian {
            sigma0: 1.0,
            variances: vec![1.0; 20],
        };
        assert!(wrong_regime.validate().is_err());
    }

    #[test]
    fn same_seed_and_trial_bit_identical() {
        let ctx = build_context(&logistic_spec(7)).unwrap();
        assert_eq!(simulate_trial(&ctx, 3), simulate_trial(&ctx, 3));
        assert_ne!(simulate_trial(&ctx, 3), simulate_trial(&ctx, 4));
        // the design is drawn once per seed
        let ctx2 = build_context(&logistic_spec(7)).unwrap();
        assert_eq!(ctx.x, ctx2.x);
    }

    #[test]
    fn zero_variances_mean_exact_responses() {
        let spec = SimSpec {
            n: 10,
            p: 2,
            s0: 1,
            design: DesignKind::Rademacher,
            theta_star: vec![0.3, 0.0],
            family: LossFamily::gaussian_square(LinkFn::Sigmoid, 1.0, -2.0, 2.0).unwrap(),
            regime: NoiseRegime::Gaussian {
                sigma0: 1.0,
                variances: vec![0.0; 10],
            },
            domain: ParamDomain::uniform_box(2, -0.5, 0.5).unwrap(),
            seed: 2,
            trials: 1,
        };
        let ctx = build_context(&spec).unwrap();
        let data = simulate_trial(&ctx, 0);
        for (yi, t) in data.y.iter().zip(&data.t0) {
            assert_eq!(*yi, crate::loss::sigmoid(*t));
        }
    }

    #[test]
    fn logistic_mean_at_zero_index_is_half() {
        // binomial CI check: 1e5 Bernoulli(1/2) draws across trials
        let mut spec = logistic_spec(11);
        spec.n = 100;
        spec.theta_star = vec![0.0, 0.0, 0.0];
        spec.s0 = 0;
        let ctx = build_context(&spec).unwrap();
        let mut sum = 0.0;
        let mut count = 0usize;
        for t in 0..1000 {
            let data = simulate_trial(&ctx, t);
            sum += data.y.iter().sum::<f64>();
            count += data.y.len();
        }
        let mean = sum / count as f64;
        assert!((mean - 0.5).abs() < 0.005, "mean {mean}");
    }
}
