//! Weight functions `ω` for the spaces `X_ω = L¹((0,∞), ω(x)dx)`.
//!
//! All arithmetic is done on `log ω`; `eval` only exponentiates at the end
//! and reports overflow instead of returning `inf`.

use std::fmt;

use crate::admissibility::log_ratio;
use crate::error::WeightError;
use crate::kernels::{FragmentKernel, RateFunction};
use crate::quadrature::QuadratureSpec;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightFamily {
    /// `x^p`
    Power,
    /// `1 + x^p`
    PowerShifted,
    /// `c^x`, `c > 1`
    Exponential,
    /// `x·e^{x²}`
    SuperExponential,
    /// Piecewise exponential through `(x, log ω)` knots.
    Tabulated,
}

impl fmt::Display for WeightFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightFamily::Power => "power",
            WeightFamily::PowerShifted => "power_shifted",
            WeightFamily::Exponential => "exponential",
            WeightFamily::SuperExponential => "super_exponential",
            WeightFamily::Tabulated => "tabulated",
        })
    }
}

/// `log ω` tabulated at strictly increasing knots and interpolated linearly,
/// extrapolated with the slope of the end segments.
#[derive(Debug, Clone, PartialEq)]
pub struct LogTable<T> {
    xs: Vec<T>,
    logs: Vec<T>,
}

impl<T: Scalar> LogTable<T> {
    pub fn new(xs: Vec<T>, logs: Vec<T>) -> Result<Self, WeightError> {
        if xs.is_empty() || xs.len() != logs.len() {
            return Err(WeightError::Invalid("weight table needs matching, non-empty x and log_omega columns".into()));
        }
        if xs.iter().any(|x| !(x.is_finite() && *x >= T::zero())) || logs.iter().any(|l| !l.is_finite()) {
            return Err(WeightError::Invalid("weight table entries must be finite with x >= 0".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(WeightError::Invalid("weight table abscissae must be strictly increasing".into()));
        }
        Ok(Self { xs, logs })
    }

    pub fn xs(&self) -> &[T] {
        &self.xs
    }

    pub fn logs(&self) -> &[T] {
        &self.logs
    }

    fn segment(&self, x: T) -> usize {
        // index i of the segment [x_i, x_{i+1}] used for x
        let n = self.xs.len();
        let i = self.xs.partition_point(|k| *k <= x);
        i.saturating_sub(1).min(n.saturating_sub(2))
    }

    fn slope(&self, i: usize) -> T {
        (self.logs[i + 1] - self.logs[i]) / (self.xs[i + 1] - self.xs[i])
    }

    pub fn eval(&self, x: T) -> T {
        if self.xs.len() == 1 {
            return self.logs[0];
        }
        let i = self.segment(x);
        self.logs[i] + self.slope(i) * (x - self.xs[i])
    }

    /// Central difference of `log ω` with the local knot spacing as step;
    /// the flag is set when a table end forces a one-sided difference.
    pub fn derivative(&self, x: T) -> (T, bool) {
        let n = self.xs.len();
        if n < 2 {
            return (T::zero(), true);
        }
        let i = self.segment(x);
        let h = (self.xs[i + 1] - self.xs[i]) * T::half();
        let (lo, hi) = (x - h, x + h);
        if lo < self.xs[0] {
            ((self.eval(x + h) - self.eval(x)) / h, true)
        } else if hi > self.xs[n - 1] {
            ((self.eval(x) - self.eval(x - h)) / h, true)
        } else {
            ((self.eval(hi) - self.eval(lo)) / (T::two() * h), false)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum WeightRepr<T> {
    Power { p: T },
    PowerShifted { p: T },
    Exponential { log_base: T },
    SuperExponential,
    Tabulated(LogTable<T>),
    /// `head` on `[0, cut)`, `tail` table on `[cut, ∞)`.
    Spliced { head: Box<Weight<T>>, cut: T, tail: LogTable<T> },
}

/// A weight `ω: [0,∞) → [0,∞)`, optionally multiplied by a positive constant.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight<T> {
    repr: WeightRepr<T>,
    log_scale: T,
}

impl<T: Scalar> Weight<T> {
    fn from_repr(repr: WeightRepr<T>) -> Self {
        Self { repr, log_scale: T::zero() }
    }

    pub fn power(p: T) -> Result<Self, WeightError> {
        if !(p >= T::zero() && p.is_finite()) {
            return Err(WeightError::Invalid(format!("power weight exponent must be finite and >= 0, got {p}")));
        }
        Ok(Self::from_repr(WeightRepr::Power { p }))
    }

    pub fn power_shifted(p: T) -> Result<Self, WeightError> {
        if !(p >= T::zero() && p.is_finite()) {
            return Err(WeightError::Invalid(format!("power weight exponent must be finite and >= 0, got {p}")));
        }
        Ok(Self::from_repr(WeightRepr::PowerShifted { p }))
    }

    pub fn exponential(base: T) -> Result<Self, WeightError> {
        if !(base > T::one() && base.is_finite()) {
            return Err(WeightError::Invalid(format!("exponential weight base must exceed 1, got {base}")));
        }
        Ok(Self::from_repr(WeightRepr::Exponential { log_base: base.ln() }))
    }

    /// `c^x` given `log c` directly, for bases beyond float range.
    pub fn exponential_log_base(log_base: T) -> Result<Self, WeightError> {
        if !(log_base > T::zero() && log_base.is_finite()) {
            return Err(WeightError::Invalid(format!("exponential weight needs log base > 0, got {log_base}")));
        }
        Ok(Self::from_repr(WeightRepr::Exponential { log_base }))
    }

    pub fn super_exponential() -> Self {
        Self::from_repr(WeightRepr::SuperExponential)
    }

    pub fn tabulated(table: LogTable<T>) -> Self {
        Self::from_repr(WeightRepr::Tabulated(table))
    }

    /// `head` below `cut`, the table from `cut` on.
    pub fn spliced(head: Weight<T>, cut: T, tail: LogTable<T>) -> Self {
        Self::from_repr(WeightRepr::Spliced { head: Box::new(head), cut, tail })
    }

    /// `λω` for `λ > 0`.
    pub fn scaled(&self, lambda: T) -> Result<Self, WeightError> {
        if !(lambda > T::zero() && lambda.is_finite()) {
            return Err(WeightError::Invalid(format!("scale factor must be positive, got {lambda}")));
        }
        Ok(Self { repr: self.repr.clone(), log_scale: self.log_scale + lambda.ln() })
    }

    pub fn family(&self) -> WeightFamily {
        match self.repr {
            WeightRepr::Power { .. } => WeightFamily::Power,
            WeightRepr::PowerShifted { .. } => WeightFamily::PowerShifted,
            WeightRepr::Exponential { .. } => WeightFamily::Exponential,
            WeightRepr::SuperExponential => WeightFamily::SuperExponential,
            WeightRepr::Tabulated(_) | WeightRepr::Spliced { .. } => WeightFamily::Tabulated,
        }
    }

    /// Weights that can overflow a float on moderate `x`.
    pub fn is_exponential_class(&self) -> bool {
        matches!(
            self.repr,
            WeightRepr::Exponential { .. } | WeightRepr::SuperExponential | WeightRepr::Tabulated(_) | WeightRepr::Spliced { .. }
        )
    }

    /// Whether `ω` is non-decreasing on `(0,∞)` (table-based weights: on
    /// their knots).
    pub fn is_monotone(&self) -> bool {
        match &self.repr {
            WeightRepr::Power { .. } | WeightRepr::PowerShifted { .. } => true,
            WeightRepr::Exponential { .. } | WeightRepr::SuperExponential => true,
            WeightRepr::Tabulated(t) => t.logs.windows(2).all(|w| w[1] >= w[0]),
            WeightRepr::Spliced { head, tail, .. } => head.is_monotone() && tail.logs.windows(2).all(|w| w[1] >= w[0]),
        }
    }

    pub fn table(&self) -> Option<&LogTable<T>> {
        match &self.repr {
            WeightRepr::Tabulated(t) => Some(t),
            WeightRepr::Spliced { tail, .. } => Some(tail),
            _ => None,
        }
    }

    pub fn log_scale(&self) -> T {
        self.log_scale
    }

    /// `log ω(x)` without the constant factor of [`Weight::scaled`];
    /// `-inf` where `ω` vanishes.
    pub(crate) fn log_shape(&self, x: T) -> T {
        match &self.repr {
            WeightRepr::Power { p } => {
                if *p == T::zero() {
                    T::zero()
                } else {
                    *p * x.ln()
                }
            }
            WeightRepr::PowerShifted { p } => x.powf(*p).ln_1p(),
            WeightRepr::Exponential { log_base } => x * *log_base,
            WeightRepr::SuperExponential => x.ln() + x * x,
            WeightRepr::Tabulated(t) => t.eval(x),
            WeightRepr::Spliced { head, cut, tail } => {
                if x < *cut {
                    head.log_shape(x) + head.log_scale
                } else {
                    tail.eval(x)
                }
            }
        }
    }

    /// `log ω(x)`; a domain error where `ω(x) = 0`.
    pub fn log_eval(&self, x: T) -> Result<T, WeightError> {
        if !(x >= T::zero()) {
            return Err(WeightError::Domain { x: x.to_f64().unwrap_or(f64::NAN) });
        }
        let l = self.log_shape(x);
        if l == T::neg_infinity() || l.is_nan() {
            return Err(WeightError::Domain { x: x.to_f64().unwrap_or(f64::NAN) });
        }
        Ok(l + self.log_scale)
    }

    /// `ω(x)`, or [`WeightError::Overflow`] when it exceeds the float range.
    pub fn eval(&self, x: T) -> Result<T, WeightError> {
        if !(x >= T::zero()) {
            return Err(WeightError::Domain { x: x.to_f64().unwrap_or(f64::NAN) });
        }
        let l = self.log_shape(x) + self.log_scale;
        if l.is_nan() {
            return Err(WeightError::Domain { x: x.to_f64().unwrap_or(f64::NAN) });
        }
        let v = match self.repr {
            WeightRepr::Power { p } => x.powf(p) * self.log_scale.exp(),
            WeightRepr::PowerShifted { p } => (T::one() + x.powf(p)) * self.log_scale.exp(),
            _ => l.exp(),
        };
        if v.is_infinite() {
            return Err(WeightError::Overflow {
                x: x.to_f64().unwrap_or(f64::NAN),
                log_value: l.to_f64().unwrap_or(f64::INFINITY),
            });
        }
        Ok(v)
    }

    /// `ω'(x)/ω(x) = (log ω)'(x)` for `x > 0`; the flag marks a one-sided
    /// finite difference at a table end.
    pub fn log_derivative(&self, x: T) -> (T, bool) {
        match &self.repr {
            WeightRepr::Power { p } => (*p / x, false),
            WeightRepr::PowerShifted { p } => {
                let xp = x.powf(*p);
                (*p * xp / (x * (T::one() + xp)), false)
            }
            WeightRepr::Exponential { log_base } => (*log_base, false),
            WeightRepr::SuperExponential => (x.recip() + T::two() * x, false),
            WeightRepr::Tabulated(t) => t.derivative(x),
            WeightRepr::Spliced { head, cut, tail } => {
                if x < *cut {
                    head.log_derivative(x)
                } else {
                    tail.derivative(x)
                }
            }
        }
    }

    fn table_knots(&self) -> Option<usize> {
        self.table().map(|t| t.xs.len())
    }
}

/// Derived weight `ω̃ = (1+c)ω` tabulated at `knots`, `c` the rate envelope.
pub fn derived_weight<T: Scalar>(
    weight: &Weight<T>,
    rate: &RateFunction<T>,
    knots: &[T],
) -> Result<Weight<T>, WeightError> {
    let logs = knots
        .iter()
        .map(|&x| Ok(rate.envelope(x).ln_1p() + weight.log_eval(x)?))
        .collect::<Result<Vec<T>, WeightError>>()?;
    Ok(Weight::tabulated(LogTable::new(knots.to_vec(), logs)?))
}

fn check_grid<T: Scalar>(grid: &[T], what: &str) -> Result<(), WeightError> {
    if grid.is_empty() {
        return Err(WeightError::Invalid(format!("{what} is empty")));
    }
    if grid.iter().any(|x| !(*x > T::zero() && x.is_finite())) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(WeightError::Invalid(format!("{what} must be positive and strictly increasing")));
    }
    Ok(())
}

/// True iff `γ(x) = ω(x)/x` is non-decreasing along `grid` (relative slack
/// `1e-12`). Together with sub-conservation of `b` this gives
/// `n_ω(y) ≤ ω(y)`.
pub fn gamma_monotone_check<T: Scalar>(weight: &Weight<T>, grid: &[T]) -> Result<bool, WeightError> {
    check_grid(grid, "grid")?;
    let slack = T::lit(1e-12).max(T::epsilon() * T::lit(16.0)).ln_1p();
    let log_gamma = grid
        .iter()
        .map(|&x| Ok(weight.log_eval(x)? - x.ln()))
        .collect::<Result<Vec<T>, WeightError>>()?;
    Ok(log_gamma.windows(2).all(|w| w[0] <= w[1] + slack))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioPair<T> {
    pub y: T,
    pub ratio_first: T,
    pub ratio_second: T,
}

/// Outcome of comparing two weights through their log-derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonVerdict<T> {
    /// `ω₁'/ω₁ ≤ ω₂'/ω₂` at every point of `x_grid`.
    pub hypothesis_holds: bool,
    /// `n_{ω₁}(y)/ω₁(y) ≥ n_{ω₂}(y)/ω₂(y)` at every sampled `y`.
    pub pointwise_inequality_holds: bool,
    pub x_grid: Vec<T>,
    pub first_hypothesis_failure: Option<T>,
    pub pairs: Vec<RatioPair<T>>,
    /// A table end forced a one-sided derivative somewhere on the grid.
    pub one_sided_derivative: bool,
}

/// Compares two weights: checks the log-derivative ordering on `x_grid` and
/// the resulting ordering of `n_ω(y)/ω(y)` at `y_samples`.
pub fn compare_weights<T: Scalar>(
    first: &Weight<T>,
    second: &Weight<T>,
    kernel: &FragmentKernel<T>,
    x_grid: &[T],
    y_samples: &[T],
    spec: &QuadratureSpec<T>,
) -> Result<ComparisonVerdict<T>, WeightError> {
    check_grid(x_grid, "x grid")?;
    check_grid(y_samples, "y samples")?;
    for w in [first, second] {
        if let Some(n) = w.table_knots() {
            if n < 3 {
                return Err(WeightError::Invalid("tabulated weights need at least 3 knots for a derivative".into()));
            }
        }
    }
    let rel = T::lit(1e-12);
    let mut one_sided = false;
    let mut first_failure = None;
    for &x in x_grid {
        let (d1, s1) = first.log_derivative(x);
        let (d2, s2) = second.log_derivative(x);
        one_sided |= s1 || s2;
        let slack = rel * d1.abs().max(d2.abs()).max(T::one());
        if d1 > d2 + slack && first_failure.is_none() {
            first_failure = Some(x);
        }
    }
    let slack = T::lit(10.0) * spec.rel_tol;
    let mut pairs = Vec::with_capacity(y_samples.len());
    let mut pointwise = true;
    for &y in y_samples {
        let r1 = log_ratio(kernel, first, y, spec)?.exp();
        let r2 = log_ratio(kernel, second, y, spec)?.exp();
        if r1 < r2 * (T::one() - slack) {
            pointwise = false;
        }
        pairs.push(RatioPair { y, ratio_first: r1, ratio_second: r2 });
    }
    Ok(ComparisonVerdict {
        hypothesis_holds: first_failure.is_none(),
        pointwise_inequality_holds: pointwise,
        x_grid: x_grid.to_vec(),
        first_hypothesis_failure: first_failure,
        pairs,
        one_sided_derivative: one_sided,
    })
}
