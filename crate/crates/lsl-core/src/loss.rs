//! GLM loss families with exact derivative oracles.
//!
//! Each family is a scalar loss `gamma(t, y)` on a compact working interval
//! for the index `t`, together with closed-form derivatives, the derivative
//! bound constants used by the tail thresholds, a Kullback-Leibler distance
//! for the likelihood families, and the conditional-mean helpers the
//! simulation harness needs for exact centering.

use crate::error::{Error, Result};

/// Stable `ln(1 + e^t)`.
#[inline]
pub fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Stable logistic sigmoid.
#[inline]
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Mean-function (link) choices for the square-loss family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkFn {
    Identity,
    Sigmoid,
    Tanh,
}

impl LinkFn {
    pub fn value(self, t: f64) -> f64 {
        match self {
            LinkFn::Identity => t,
            LinkFn::Sigmoid => sigmoid(t),
            LinkFn::Tanh => t.tanh(),
        }
    }

    /// k-th derivative of the link, k in 0..=3.
    pub fn deriv(self, t: f64, order: usize) -> f64 {
        match self {
            LinkFn::Identity => match order {
                0 => t,
                1 => 1.0,
                _ => 0.0,
            },
            LinkFn::Sigmoid => {
                let s = sigmoid(t);
                let d1 = s * (1.0 - s);
                match order {
                    0 => s,
                    1 => d1,
                    2 => d1 * (1.0 - 2.0 * s),
                    3 => d1 * (1.0 - 6.0 * s + 6.0 * s * s),
                    _ => unreachable!("link order {order}"),
                }
            }
            LinkFn::Tanh => {
                let f = t.tanh();
                let d1 = 1.0 - f * f;
                match order {
                    0 => f,
                    1 => d1,
                    2 => -2.0 * f * d1,
                    3 => -2.0 * d1 * (1.0 - 3.0 * f * f),
                    _ => unreachable!("link order {order}"),
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LinkFn::Identity => "identity",
            LinkFn::Sigmoid => "sigmoid",
            LinkFn::Tanh => "tanh",
        }
    }

    /// Interior critical points of |f^(order)| used for closed-form suprema.
    fn critical_points(self, order: usize) -> Vec<f64> {
        match self {
            LinkFn::Identity => vec![],
            LinkFn::Sigmoid => match order {
                0 => vec![],
                1 => vec![0.0],
                // |sigma''| peaks at +-ln(2 + sqrt 3)
                2 => {
                    let t = (2.0 + 3.0_f64.sqrt()).ln();
                    vec![-t, 0.0, t]
                }
                // sigma''' stationary where 12 s^2 - 12 s + 1 = 0
                3 => {
                    let s = 0.5 + 96.0_f64.sqrt() / 24.0;
                    let t = (s / (1.0 - s)).ln();
                    vec![-t, 0.0, t]
                }
                _ => unreachable!(),
            },
            LinkFn::Tanh => match order {
                0 => vec![],
                1 => vec![0.0],
                2 => {
                    let t = (1.0 / 3.0_f64.sqrt()).atanh();
                    vec![-t, 0.0, t]
                }
                3 => {
                    let t = (2.0_f64 / 3.0).sqrt().atanh();
                    vec![-t, 0.0, t]
                }
                _ => unreachable!(),
            },
        }
    }
}

/// Loss family selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    /// `gamma(t, y) = ln(1 + e^t) - y t`, y in {0, 1}.
    Logistic,
    /// `gamma(t, y) = (y - f(t))^2 / 2` with noise scale cap `sigma0`.
    GaussianSquare { link: LinkFn, sigma0: f64 },
    /// `gamma(t, y) = e^t - y t`, y in {0, 1, 2, ...}.
    PoissonLog,
}

/// A loss family restricted to a finite working interval for the index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossFamily {
    kind: LossKind,
    interval: (f64, f64),
}

/// Bound constants of Assumption-style regularity: `f_m` dominates the m-th
/// derivative and `f_m_plus_1` its Lipschitz constant on the interval.
///
/// For the square-loss family the constants are taken on the link function,
/// which is the object the Gaussian-regime expansion differentiates; for the
/// other families they are taken on the loss itself over all admissible
/// responses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivBounds {
    pub m: usize,
    pub f_m: f64,
    pub f_m_plus_1: f64,
}

/// Grid resolution and safety factor for the fallback bound extraction.
const BOUND_GRID_POINTS: usize = 2001;
const SUP_SAFETY: f64 = 1.05;
const INF_SAFETY: f64 = 0.95;
const CURVATURE_FLOOR: f64 = 1e-12;

impl LossFamily {
    pub fn new(kind: LossKind, interval: (f64, f64)) -> Result<Self> {
        let (a, b) = interval;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidInterval { lo: a, hi: b });
        }
        if let LossKind::GaussianSquare { sigma0, .. } = kind {
            if !(sigma0.is_finite() && sigma0 > 0.0) {
                return Err(Error::InvalidSigma0(sigma0));
            }
        }
        Ok(Self { kind, interval })
    }

    pub fn logistic(a: f64, b: f64) -> Result<Self> {
        Self::new(LossKind::Logistic, (a, b))
    }

    pub fn gaussian_square(link: LinkFn, sigma0: f64, a: f64, b: f64) -> Result<Self> {
        Self::new(LossKind::GaussianSquare { link, sigma0 }, (a, b))
    }

    pub fn poisson_log(a: f64, b: f64) -> Result<Self> {
        Self::new(LossKind::PoissonLog, (a, b))
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            LossKind::Logistic => "logistic",
            LossKind::GaussianSquare { .. } => "gaussian-square",
            LossKind::PoissonLog => "poisson-log",
        }
    }

    /// True when the smooth part of the penalized objective is convex in the
    /// parameter (used by the solver to decide on multi-starts).
    pub fn is_convex(&self) -> bool {
        matches!(
            self.kind,
            LossKind::Logistic
                | LossKind::PoissonLog
                | LossKind::GaussianSquare {
                    link: LinkFn::Identity,
                    ..
                }
        )
    }

    pub fn validate_response(&self, y: f64) -> Result<()> {
        let ok = match self.kind {
            LossKind::Logistic => y == 0.0 || y == 1.0,
            LossKind::GaussianSquare { .. } => y.is_finite(),
            LossKind::PoissonLog => y.is_finite() && y >= 0.0 && (y - y.round()).abs() <= 1e-9,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidResponse {
                family: self.name(),
                y,
            })
        }
    }

    pub fn loss_value(&self, t: f64, y: f64) -> Result<f64> {
        self.validate_response(y)?;
        Ok(self.loss_value_unchecked(t, y))
    }

    #[inline]
    pub(crate) fn loss_value_unchecked(&self, t: f64, y: f64) -> f64 {
        match self.kind {
            LossKind::Logistic => softplus(t) - y * t,
            LossKind::GaussianSquare { link, .. } => {
                let r = y - link.value(t);
                0.5 * r * r
            }
            LossKind::PoissonLog => t.exp() - y * t,
        }
    }

    /// k-th partial derivative of the loss in `t`; order 0 is the value.
    pub fn loss_deriv(&self, t: f64, y: f64, order: usize) -> Result<f64> {
        if order > 3 {
            return Err(Error::UnsupportedOrder(order));
        }
        self.validate_response(y)?;
        Ok(self.loss_deriv_unchecked(t, y, order))
    }

    #[inline]
    pub(crate) fn loss_deriv_unchecked(&self, t: f64, y: f64, order: usize) -> f64 {
        match self.kind {
            LossKind::Logistic => match order {
                0 => softplus(t) - y * t,
                1 => sigmoid(t) - y,
                k => LinkFn::Sigmoid.deriv(t, k - 1),
            },
            LossKind::GaussianSquare { link, .. } => {
                let f = link.value(t);
                let d1 = link.deriv(t, 1);
                match order {
                    0 => 0.5 * (y - f) * (y - f),
                    1 => (f - y) * d1,
                    2 => d1 * d1 + (f - y) * link.deriv(t, 2),
                    3 => 3.0 * d1 * link.deriv(t, 2) + (f - y) * link.deriv(t, 3),
                    _ => unreachable!(),
                }
            }
            LossKind::PoissonLog => match order {
                0 => t.exp() - y * t,
                1 => t.exp() - y,
                _ => t.exp(),
            },
        }
    }

    /// Representative admissible responses for bound extraction and tests.
    pub fn test_responses(&self) -> Vec<f64> {
        match self.kind {
            LossKind::Logistic => vec![0.0, 1.0],
            LossKind::PoissonLog => vec![0.0, 1.0, 2.0, 5.0, 10.0],
            LossKind::GaussianSquare { link, sigma0 } => {
                let (a, b) = self.interval;
                let mut ys = Vec::new();
                for base in [link.value(a), link.value(b)] {
                    for off in [0.0, 1.0, -1.0, 3.0, -3.0] {
                        let y = base + off * sigma0;
                        if !ys.iter().any(|&v: &f64| (v - y).abs() <= 1e-12) {
                            ys.push(y);
                        }
                    }
                }
                ys
            }
        }
    }

    /// Derivative-bound constants `(F_m, F_{m+1})` for expansion order `m`.
    ///
    /// Logistic and square-loss families use closed-form suprema over the
    /// interval endpoints and interior critical points; the Poisson family
    /// falls back to a 2001-point grid inflated by 5%.
    pub fn derivative_bounds(&self, m: usize) -> Result<DerivBounds> {
        if m > 2 {
            return Err(Error::UnsupportedExpansionOrder(m));
        }
        Ok(DerivBounds {
            m,
            f_m: self.deriv_sup(m),
            f_m_plus_1: self.deriv_sup(m + 1),
        })
    }

    fn deriv_sup(&self, order: usize) -> f64 {
        let (a, b) = self.interval;
        match self.kind {
            LossKind::Logistic => match order {
                // gamma(t,0) = softplus(t) grows, gamma(t,1) = softplus(-t) falls.
                0 => softplus(b).max(softplus(-a)),
                1 => sigmoid(b).max(sigmoid(-a)),
                // higher orders no longer depend on y and equal sigma^(order-1)
                k => candidate_sup(|t| LinkFn::Sigmoid.deriv(t, k - 1).abs(), a, b, {
                    LinkFn::Sigmoid.critical_points(k - 1)
                }),
            },
            // Square loss: constants of the link per the Gaussian-regime
            // expansion, not of the loss itself.
            LossKind::GaussianSquare { link, .. } => candidate_sup(
                |t| link.deriv(t, order).abs(),
                a,
                b,
                link.critical_points(order),
            ),
            LossKind::PoissonLog => {
                let ys = self.test_responses();
                let worst = ys
                    .iter()
                    .map(|&y| grid_sup(|t| self.loss_deriv_unchecked(t, y, order).abs(), a, b))
                    .fold(0.0, f64::max);
                worst * SUP_SAFETY
            }
        }
    }

    fn require_likelihood(&self) -> Result<()> {
        match self.kind {
            LossKind::Logistic | LossKind::PoissonLog => Ok(()),
            LossKind::GaussianSquare {
                link: LinkFn::Identity,
                ..
            } => Ok(()),
            _ => Err(Error::NoLikelihood(self.name())),
        }
    }

    /// Kullback-Leibler distance `D(t, s)` from the model at index `s` to
    /// the model at index `t`, in closed form.
    pub fn kl_distance(&self, t: f64, s: f64) -> Result<f64> {
        self.require_likelihood()?;
        let d = match self.kind {
            LossKind::Logistic => {
                let pt = sigmoid(t);
                // ratios of fresh sigmoids stay accurate for t near s
                pt * (sigmoid(t) / sigmoid(s)).ln()
                    + (1.0 - pt) * (sigmoid(-t) / sigmoid(-s)).ln()
            }
            LossKind::GaussianSquare { sigma0, .. } => {
                let d = t - s;
                d * d / (2.0 * sigma0 * sigma0)
            }
            LossKind::PoissonLog => t.exp() * ((s - t).exp_m1() - (s - t)),
        };
        Ok(d.max(0.0))
    }

    /// Quadratic-curvature constant: a positive `C` with
    /// `D(t, s) >= C (t - s)^2` on the working interval.
    ///
    /// The identity-link square loss has the constant ratio `1/(2 sigma0^2)`
    /// exactly; other likelihood families take a 2001x2001 grid minimum of
    /// the ratio shrunk by 5%. Pairs closer than two grid cells (and an
    /// absolute 3e-7 floor protecting the ratio from rounding noise in `D`)
    /// are excluded; their ratios are covered by the Fisher-information
    /// limit along the diagonal.
    pub fn curvature_constant(&self) -> Result<f64> {
        self.require_likelihood()?;
        let c = match self.kind {
            LossKind::GaussianSquare { sigma0, .. } => 0.5 / (sigma0 * sigma0),
            _ => {
                let (a, b) = self.interval;
                let n = BOUND_GRID_POINTS;
                let h = (b - a) / (n - 1) as f64;
                let ts: Vec<f64> = (0..n).map(|i| a + h * i as f64).collect();
                let min_sep = (2.0 * h).max(3e-7);
                let mut best = f64::INFINITY;
                match self.kind {
                    LossKind::Logistic => {
                        let sp: Vec<f64> = ts.iter().map(|&t| sigmoid(t)).collect();
                        let sn: Vec<f64> = ts.iter().map(|&t| sigmoid(-t)).collect();
                        let lp: Vec<f64> = sp.iter().map(|&v| v.ln()).collect();
                        let ln_: Vec<f64> = sn.iter().map(|&v| v.ln()).collect();
                        for i in 0..n {
                            for j in 0..n {
                                let sep = ts[i] - ts[j];
                                if sep.abs() < min_sep {
                                    continue;
                                }
                                let d = sp[i] * (lp[i] - lp[j]) + sn[i] * (ln_[i] - ln_[j]);
                                best = best.min(d / (sep * sep));
                            }
                        }
                    }
                    LossKind::PoissonLog => {
                        let et: Vec<f64> = ts.iter().map(|&t| t.exp()).collect();
                        for i in 0..n {
                            for j in 0..n {
                                let sep = ts[j] - ts[i];
                                if sep.abs() < min_sep {
                                    continue;
                                }
                                let d = et[i] * (sep.exp_m1() - sep);
                                best = best.min(d / (sep * sep));
                            }
                        }
                    }
                    LossKind::GaussianSquare { .. } => unreachable!(),
                }
                if !best.is_finite() {
                    // Interval narrower than the separation floor: fall back
                    // to the endpoints pair.
                    let d = self.kl_distance(a, b)?;
                    best = d / ((b - a) * (b - a));
                }
                best * INF_SAFETY
            }
        };
        if c <= CURVATURE_FLOOR {
            return Err(Error::DegenerateCurvature(c));
        }
        Ok(c)
    }

    /// Fisher information `I(t)` of the likelihood family.
    pub fn fisher_information(&self, t: f64) -> Result<f64> {
        self.require_likelihood()?;
        Ok(match self.kind {
            LossKind::Logistic => LinkFn::Sigmoid.deriv(t, 1),
            LossKind::GaussianSquare { sigma0, .. } => 1.0 / (sigma0 * sigma0),
            LossKind::PoissonLog => t.exp(),
        })
    }

    /// The scalar function expanded by the Taylor-remainder machinery: the
    /// loss itself for the bounded-regime families, the link for the square
    /// loss (whose deviations are driven by the noise times the link).
    pub(crate) fn taylor_base(&self, t: f64, y: f64, order: usize) -> f64 {
        match self.kind {
            LossKind::GaussianSquare { link, .. } => link.deriv(t, order),
            _ => self.loss_deriv_unchecked(t, y, order),
        }
    }

    /// `E[Y | index t0]` under the generating model.
    pub fn mean_response(&self, t0: f64) -> f64 {
        match self.kind {
            LossKind::Logistic => sigmoid(t0),
            LossKind::GaussianSquare { link, .. } => link.value(t0),
            LossKind::PoissonLog => t0.exp(),
        }
    }

    /// `E[gamma(t, Y) | index t0]` in closed form. The square-loss family
    /// needs the noise variance of the row; the discrete families ignore it.
    pub fn expected_loss(&self, t: f64, t0: f64, noise_var: f64) -> Result<f64> {
        Ok(match self.kind {
            LossKind::Logistic => softplus(t) - sigmoid(t0) * t,
            LossKind::PoissonLog => t.exp() - t0.exp() * t,
            LossKind::GaussianSquare { link, .. } => {
                let r = link.value(t0) - link.value(t);
                0.5 * (r * r + noise_var)
            }
        })
    }

    /// Centered first derivative `gamma'(t, y) - E[gamma'(t, Y) | t0]`.
    pub fn centered_dloss(&self, t: f64, t0: f64, y: f64) -> f64 {
        match self.kind {
            LossKind::Logistic => sigmoid(t0) - y,
            LossKind::PoissonLog => t0.exp() - y,
            LossKind::GaussianSquare { link, .. } => (link.value(t0) - y) * link.deriv(t, 1),
        }
    }
}

/// Supremum over `[a, b]` taking endpoints plus the interior candidates.
fn candidate_sup(f: impl Fn(f64) -> f64, a: f64, b: f64, interior: Vec<f64>) -> f64 {
    let mut best = f(a).max(f(b));
    for t in interior {
        if t > a && t < b {
            best = best.max(f(t));
        }
    }
    best
}

fn grid_sup(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let n = BOUND_GRID_POINTS;
    let h = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| f(a + h * i as f64))
        .fold(f64::NEG_INFINITY, f64::max)
}
