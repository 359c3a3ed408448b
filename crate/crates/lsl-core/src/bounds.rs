//! Tail-bound constants and thresholds for the local stochastic Lipschitz
//! condition.
//!
//! The remainder process of the order-m Taylor expansion of the centered
//! empirical loss admits exponential upper tails. This module computes the
//! constants of those tails from the design, the domain diameter and the
//! derivative bounds: Bernstein-type in the bounded regime (constants A, B,
//! C), Hoeffding-type in the Gaussian regime (A, B and the noise weights
//! w_j), together with the linear-coefficient thresholds and the combined
//! high-probability bound `M(q, q')` on the Lipschitz coefficient itself.

use crate::design::Diameters;
use crate::error::{Error, Result};
use crate::loss::LossFamily;
use crate::matrix::DesignMatrix;

/// Regime-specific parts of the constant set.
#[derive(Debug, Clone, PartialEq)]
pub enum RegimeConstants {
    /// General bounded losses; carries the Bernstein tail constant `C = 8 phi`.
    Bounded { c: f64 },
    /// Square loss with independent Gaussian noise; no `C ln(p^m/q)` term.
    Gaussian {
        sigma0: f64,
        /// `w_j^2 = sigma0^-2 sum_i var_i X_ij^2` (unnormalized columns).
        w: Vec<f64>,
        /// `lambda_j = max(w_j, d_j)`.
        lambda_weights: Vec<f64>,
    },
}

/// The constants entering the remainder tail thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct LslConstants {
    pub m: usize,
    pub phi: f64,
    pub psi: f64,
    pub a: f64,
    pub b: f64,
    pub regime: RegimeConstants,
}

impl LslConstants {
    pub fn is_gaussian(&self) -> bool {
        matches!(self.regime, RegimeConstants::Gaussian { .. })
    }
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|k| k as f64).product()
}

fn check_prob(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidProbability { name, value: v })
    }
}

/// Uniform bound `phi` and Lipschitz constant `psi` of the normalized
/// Taylor remainder of order `m`:
/// `phi = min(2 F_m / m!, F_{m+1} R / (m+1)!)`, and `psi` equals `F_{m+1}`
/// for m = 0, `F_{m+1}/2` for m = 1, `F_{m+1}/m!` for m >= 2.
pub fn phi_psi(f_m: f64, f_m_plus_1: f64, r: f64, m: usize) -> (f64, f64) {
    let phi = (2.0 * f_m / factorial(m)).min(f_m_plus_1 * r / factorial(m + 1));
    let psi = match m {
        0 => f_m_plus_1,
        1 => f_m_plus_1 / 2.0,
        _ => f_m_plus_1 / factorial(m),
    };
    (phi, psi)
}

/// Largest column sum of the normalized entries raised to `power`:
/// `max_j sum_i (X_ij / d_j)^power`.
fn max_normalized_column_sum(x: &DesignMatrix, d: &[f64], power: u32) -> f64 {
    (0..x.n_cols())
        .map(|j| x.column(j).map(|v| (v / d[j]).powi(power as i32)).sum())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Constants of the bounded-regime tail for a fixed design (expectations
/// degenerate to the observed matrix):
/// `A = 8 psi R sqrt(max_j sum_i U_ij^2)`, `B = phi sqrt(max_j sum_i U_ij^{2m})`
/// with the convention `x^0 = 1` for m = 0, and `C = 8 phi`.
pub fn bounded_constants(
    x: &DesignMatrix,
    d: &[f64],
    f_m: f64,
    f_m_plus_1: f64,
    r: f64,
    m: usize,
) -> Result<LslConstants> {
    if let Some(j) = d.iter().position(|&v| v <= 0.0) {
        return Err(Error::ZeroColumn(j));
    }
    let (phi, psi) = phi_psi(f_m, f_m_plus_1, r, m);
    let a = 8.0 * psi * r * max_normalized_column_sum(x, d, 2).sqrt();
    let b = if m == 0 {
        phi * (x.n_rows() as f64).sqrt()
    } else {
        phi * max_normalized_column_sum(x, d, 2 * m as u32).sqrt()
    };
    Ok(LslConstants {
        m,
        phi,
        psi,
        a,
        b,
        regime: RegimeConstants::Bounded { c: 8.0 * phi },
    })
}

/// `A sqrt(2 ln 2p) + B sqrt(2 ln(p^m/q)) + C ln(p^m/q)`: the level-q tail
/// threshold of `sup_v |xi(v)|` in the bounded regime.
pub fn bounded_threshold(c: &LslConstants, p: usize, q: f64) -> Result<f64> {
    check_prob("q", q)?;
    let RegimeConstants::Bounded { c: c_const } = c.regime else {
        return Err(Error::InvalidSimSpec(
            "bounded threshold requested for Gaussian constants".into(),
        ));
    };
    let log_pm_q = c.m as f64 * (p as f64).ln() - q.ln();
    Ok(c.a * (2.0 * (2.0 * p as f64).ln()).sqrt()
        + c.b * (2.0 * log_pm_q).sqrt()
        + c_const * log_pm_q)
}

/// `F_1 sqrt(2 N ln(2p/q))`: level-q bound for the linear coefficient in
/// the bounded m = 1 expansion.
pub fn xi1_threshold_bounded(f1: f64, n: usize, p: usize, q: f64) -> Result<f64> {
    check_prob("q", q)?;
    Ok(f1 * (2.0 * n as f64 * (2.0 * p as f64 / q).ln()).sqrt())
}

/// Combined bound `M(q, q')` on the local Lipschitz coefficient for the
/// bounded m = 1 case; exceeded with probability at most `q + q'`.
pub fn coefficient_bound_m1(
    c: &LslConstants,
    f1: f64,
    n: usize,
    p: usize,
    q: f64,
    qprime: f64,
) -> Result<f64> {
    check_prob("q", q)?;
    check_prob("q'", qprime)?;
    if q + qprime >= 1.0 {
        return Err(Error::JointProbabilityTooLarge(q + qprime));
    }
    if c.m != 1 {
        return Err(Error::UnsupportedExpansionOrder(c.m));
    }
    Ok(bounded_threshold(c, p, q)? + xi1_threshold_bounded(f1, n, p, qprime)?)
}

/// Constants of the Gaussian-regime tail plus the noise weights `w_j` and
/// the combined penalty weights `lambda_j = max(w_j, d_j)`.
pub fn gaussian_constants(
    x: &DesignMatrix,
    d: &[f64],
    sigma0: f64,
    variances: &[f64],
    f_m: f64,
    f_m_plus_1: f64,
    r: f64,
    m: usize,
) -> Result<LslConstants> {
    if !(sigma0.is_finite() && sigma0 > 0.0) {
        return Err(Error::InvalidSigma0(sigma0));
    }
    if variances.len() != x.n_rows() {
        return Err(Error::InvalidSimSpec(format!(
            "{} variances for {} rows",
            variances.len(),
            x.n_rows()
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
    if let Some(j) = d.iter().position(|&v| v <= 0.0) {
        return Err(Error::ZeroColumn(j));
    }
    let (phi, psi) = phi_psi(f_m, f_m_plus_1, r, m);
    let a = 8.0 * psi * r * max_normalized_column_sum(x, d, 2).sqrt();
    let b = if m == 0 {
        phi * (x.n_rows() as f64).sqrt()
    } else {
        phi * max_normalized_column_sum(x, d, 2 * m as u32).sqrt()
    };
    let w = noise_weights(x, sigma0, variances)?;
    let lambda_weights = w.iter().zip(d).map(|(wj, dj)| wj.max(*dj)).collect();
    Ok(LslConstants {
        m,
        phi,
        psi,
        a,
        b,
        regime: RegimeConstants::Gaussian {
            sigma0,
            w,
            lambda_weights,
        },
    })
}

/// Just the noise weights `w_j = sqrt(sigma0^-2 sum_i var_i X_ij^2)`.
pub fn noise_weights(x: &DesignMatrix, sigma0: f64, variances: &[f64]) -> Result<Vec<f64>> {
    if !(sigma0.is_finite() && sigma0 > 0.0) {
        return Err(Error::InvalidSigma0(sigma0));
    }
    if variances.len() != x.n_rows() {
        return Err(Error::InvalidSimSpec(format!(
            "{} variances for {} rows",
            variances.len(),
            x.n_rows()
        )));
    }
    let cap = sigma0 * sigma0;
    Ok((0..x.n_cols())
        .map(|j| {
            let s: f64 = x
                .column(j)
                .zip(variances.iter())
                .map(|(xij, var)| var * xij * xij)
                .sum();
            (s / cap).sqrt()
        })
        .collect())
}

/// `sigma0 (A sqrt(ln 2p) + B sqrt(2 ln(p^m/q)))`: the Gaussian-regime tail
/// threshold (no Bernstein `C` term).
pub fn gaussian_threshold(c: &LslConstants, p: usize, q: f64) -> Result<f64> {
    check_prob("q", q)?;
    let RegimeConstants::Gaussian { sigma0, .. } = &c.regime else {
        return Err(Error::InvalidSimSpec(
            "gaussian threshold requested for bounded constants".into(),
        ));
    };
    let log_pm_q = c.m as f64 * (p as f64).ln() - q.ln();
    Ok(sigma0 * (c.a * (2.0 * p as f64).ln().sqrt() + c.b * (2.0 * log_pm_q).sqrt()))
}

/// `sqrt(2 ln(p/q))`: level-q bound for the normalized Gaussian linear
/// coefficient `max_j |W_j|`.
pub fn xi1_threshold_gaussian(p: usize, q: f64) -> Result<f64> {
    check_prob("q", q)?;
    Ok((2.0 * ((p as f64).ln() - q.ln())).sqrt())
}

/// Combined bound `M(q, q')` for the Gaussian m = 1 case, to be compared
/// against the Lipschitz coefficient taken in the weights
/// `lambda_j = max(w_j, d_j)`.
pub fn coefficient_bound_m1_gaussian(
    c: &LslConstants,
    f1: f64,
    p: usize,
    q: f64,
    qprime: f64,
) -> Result<f64> {
    check_prob("q", q)?;
    check_prob("q'", qprime)?;
    if q + qprime >= 1.0 {
        return Err(Error::JointProbabilityTooLarge(q + qprime));
    }
    if c.m != 1 {
        return Err(Error::UnsupportedExpansionOrder(c.m));
    }
    let RegimeConstants::Gaussian { sigma0, .. } = &c.regime else {
        return Err(Error::InvalidSimSpec(
            "gaussian coefficient bound requested for bounded constants".into(),
        ));
    };
    let main = gaussian_threshold(c, p, q)?;
    Ok(main + sigma0 * f1 * (2.0 * ((p as f64).ln() - qprime.ln())).sqrt())
}

/// Normalized Taylor remainder
/// `phi_i(t) = t^-m [f(c + t) - sum_{k<=m} f^(k)(c) t^k / k!]`, with the
/// definitional value 0 at t = 0. The expanded function is the loss in `t`
/// for the bounded-regime families and the link for the square loss.
pub fn taylor_remainder(family: &LossFamily, c: f64, t: f64, y: f64, m: usize) -> Result<f64> {
    if m > 2 {
        return Err(Error::UnsupportedExpansionOrder(m));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let mut acc = family.taylor_base(c + t, y, 0);
    let mut tk = 1.0;
    for k in 0..=m {
        acc -= family.taylor_base(c, y, k) * tk / factorial(k);
        tk *= t;
    }
    Ok(acc / t.powi(m as i32))
}

/// The two parts of the likelihood-example coefficient bound under equal
/// column scales `d`:
/// `M_1 = A sqrt(2 ln 2p) + B sqrt(2 ln(p/q1)) + 8 phi ln(p/q1)` with
/// `A = 4 F_2 Delta max_j ||V_j||_2`, `B = (F_2/2) Delta max_j ||V_j||_2`,
/// `phi = min(2 F_1, F_2 d Delta / 2)`, and
/// `M_2 = F_1 sqrt(2 N ln(2p/q2))`.
pub fn mle_bound_parts(
    x: &DesignMatrix,
    diam: &Diameters,
    d: f64,
    f1: f64,
    f2: f64,
    q1: f64,
    q2: f64,
) -> Result<(f64, f64)> {
    check_prob("q1", q1)?;
    check_prob("q2", q2)?;
    if q1 + q2 >= 1.0 {
        return Err(Error::JointProbabilityTooLarge(q1 + q2));
    }
    let n = x.n_rows() as f64;
    let p = x.n_cols() as f64;
    let delta = diam.unweighted;
    let maxcol = x.max_column_norm();
    let a = 4.0 * f2 * delta * maxcol;
    let b = 0.5 * f2 * delta * maxcol;
    let phi = (2.0 * f1).min(0.5 * f2 * d * delta);
    let log_p_q1 = p.ln() - q1.ln();
    let m1 = a * (2.0 * (2.0 * p).ln()).sqrt() + b * (2.0 * log_p_q1).sqrt() + 8.0 * phi * log_p_q1;
    let m2 = f1 * (2.0 * n * (2.0 * p / q2).ln()).sqrt();
    Ok((m1, m2))
}
