//! Parameter domain, column scales and the feasibility check tying the two
//! to the loss family's working interval.

use crate::error::{Error, Result};
use crate::matrix::DesignMatrix;
use crate::rng::CounterRng;

/// Margin by which the row ranges must sit inside the open interval.
const FEASIBILITY_MARGIN: f64 = 1e-9;

/// Axis-aligned box of candidate parameters. Boxes keep diameters,
/// projections and vertex enumeration exact.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ParamDomain {
    pub fn new_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidDomain(format!(
                "bound vectors of lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (j, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidDomain(format!(
                    "coordinate {j}: need finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The cube `[lo, hi]^p`.
    pub fn uniform_box(p: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new_box(vec![lo; p], vec![hi; p])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        v.len() == self.dim()
            && v.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| *x >= lo - tol && *x <= hi + tol)
    }

    pub fn clamp(&self, v: &mut [f64]) {
        for (x, (lo, hi)) in v.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *x = x.clamp(*lo, *hi);
        }
    }

    /// Vertex selected by one bit per coordinate (coordinates beyond 64 use
    /// the lower bound).
    pub fn vertex(&self, mask: u64) -> Vec<f64> {
        (0..self.dim())
            .map(|j| {
                if j < 64 && mask >> j & 1 == 1 {
                    self.upper[j]
                } else {
                    self.lower[j]
                }
            })
            .collect()
    }

    pub fn sample_uniform(&self, rng: &mut CounterRng) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| rng.uniform_in(*lo, *hi))
            .collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }
}

/// Per-column scales `d_j = max_i |X_ij|`. A column of zeros has no scale
/// and is rejected.
pub fn column_scales(x: &DesignMatrix) -> Result<Vec<f64>> {
    (0..x.n_cols())
        .map(|j| {
            let d = x.column(j).map(f64::abs).fold(0.0, f64::max);
            if d > 0.0 {
                Ok(d)
            } else {
                Err(Error::ZeroColumn(j))
            }
        })
        .collect()
}

/// Outcome of the range-feasibility check, with the offending row when the
/// check fails.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityCheck {
    pub feasible: bool,
    pub violating_row: Option<usize>,
    /// Attained `[min, max]` of `x_i' v` over the box for the reported row
    /// (the violating row, or the widest row when feasible).
    pub row_range: (f64, f64),
}

/// True iff every row's linear functional maps the whole box strictly
/// inside `(a, b)`. Extremes over a box split by sign per coordinate.
pub fn check_feasibility(
    x: &DesignMatrix,
    dom: &ParamDomain,
    interval: (f64, f64),
) -> FeasibilityCheck {
    let (a, b) = interval;
    let mut widest = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..x.n_rows() {
        let row = x.row(i);
        let mut lo = 0.0;
        let mut hi = 0.0;
        for (xij, (l, u)) in row.iter().zip(dom.lower().iter().zip(dom.upper())) {
            let (c1, c2) = (xij * l, xij * u);
            lo += c1.min(c2);
            hi += c1.max(c2);
        }
        if lo <= a + FEASIBILITY_MARGIN || hi >= b - FEASIBILITY_MARGIN {
            return FeasibilityCheck {
                feasible: false,
                violating_row: Some(i),
                row_range: (lo, hi),
            };
        }
        if lo < widest.0 {
            widest.0 = lo;
        }
        if hi > widest.1 {
            widest.1 = hi;
        }
    }
    FeasibilityCheck {
        feasible: true,
        violating_row: None,
        row_range: widest,
    }
}

/// Weighted and unweighted l1 diameters of the box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diameters {
    /// `R = sum_j d_j (upper_j - lower_j)`.
    pub weighted: f64,
    /// `Delta = sum_j (upper_j - lower_j)`.
    pub unweighted: f64,
}

pub fn weighted_l1_diameter(dom: &ParamDomain, d: &[f64]) -> Diameters {
    let mut weighted = 0.0;
    let mut unweighted = 0.0;
    for (j, (lo, hi)) in dom.lower().iter().zip(dom.upper()).enumerate() {
        let side = hi - lo;
        weighted += d[j] * side;
        unweighted += side;
    }
    Diameters {
        weighted,
        unweighted,
    }
}
