//! Sampled admissibility of a weight for a fragmentation kernel.
//!
//! Everything is driven by the ratio
//!
//! ```text
//! r(y) = n_ω(y) / ω(y),    n_ω(y) = ∫₀^y b(x,y) ω(x) dx,
//! ```
//!
//! evaluated as `exp(log n_ω − log ω)` so exponential-class weights never
//! overflow. The report gives
//!
//! - `κ̂ = sup r` (the `n_ω ≤ κω` condition with `κ ≤ 1`),
//! - `κ̂₁ = sup r` on `(0, η₀]` and `κ̂₂ = sup r` on `[η₀, y_max]`
//!   (the split condition with `κ₂ < 1`),
//! - a finite-horizon stand-in for `limsup_{y→∞} r(y) < 1`: the sup over
//!   `[y_max/2, y_max]` plus the fitted slope of `r` over the last decade.
//!   A rising trend never yields a pass.
//!
//! All verdicts are numerical statements about the sampled grid.

use std::fmt;

use rayon::prelude::*;

use crate::error::WeightError;
use crate::kernels::{FragmentKernel, RateFunction};
use crate::quadrature::{integrate_log, LogIntegral, QuadratureSpec};
use crate::weights::Weight;
use crate::Scalar;

fn shape_integral<T: Scalar>(
    kernel: &FragmentKernel<T>,
    weight: &Weight<T>,
    y: T,
    spec: &QuadratureSpec<T>,
) -> Result<LogIntegral<T>, WeightError> {
    if !(y > T::zero() && y.is_finite()) {
        return Err(WeightError::Invalid(format!("n_omega needs y > 0, got {y}")));
    }
    let mut cuts = kernel.breakpoints(y);
    if let Some(t) = weight.table() {
        cuts.push(t.xs()[0]);
    }
    Ok(integrate_log(|x| kernel.log_eval(x, y) + weight.log_shape(x), T::zero(), y, &cuts, spec)?)
}

/// `n_ω(y)` in log form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NOmega<T> {
    pub log_value: T,
    pub relative_error: T,
}

impl<T: Scalar> NOmega<T> {
    /// Linear value; `inf` when it exceeds the float range.
    pub fn value(&self) -> T {
        self.log_value.exp()
    }
}

/// `n_ω(y) = ∫₀^y b(x,y) ω(x) dx`, honouring kernel breakpoints.
pub fn n_omega<T: Scalar>(
    kernel: &FragmentKernel<T>,
    weight: &Weight<T>,
    y: T,
    spec: &QuadratureSpec<T>,
) -> Result<NOmega<T>, WeightError> {
    let r = shape_integral(kernel, weight, y, spec)?;
    Ok(NOmega { log_value: r.log_value + weight.log_scale(), relative_error: r.relative_error() })
}

/// `log(n_ω(y)/ω(y))`. A constant factor on `ω` cancels exactly.
pub fn log_ratio<T: Scalar>(
    kernel: &FragmentKernel<T>,
    weight: &Weight<T>,
    y: T,
    spec: &QuadratureSpec<T>,
) -> Result<T, WeightError> {
    let log_w = weight.log_shape(y);
    if !log_w.is_finite() {
        return Err(WeightError::Domain { x: y.to_f64().unwrap_or(f64::NAN) });
    }
    Ok(shape_integral(kernel, weight, y, spec)?.log_value - log_w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioSample<T> {
    pub y: T,
    pub log_n_omega: T,
    pub log_omega: T,
    pub ratio: T,
    /// Set when the sample failed; the numeric fields are then NaN.
    pub failure: Option<String>,
}

impl<T: Scalar> RatioSample<T> {
    pub fn is_ok(&self) -> bool {
        self.failure.is_none()
    }
}

fn ratio_sample<T: Scalar>(kernel: &FragmentKernel<T>, weight: &Weight<T>, y: T, spec: &QuadratureSpec<T>) -> RatioSample<T> {
    let computed = shape_integral(kernel, weight, y, spec).and_then(|n| {
        let log_w = weight.log_shape(y);
        if log_w.is_finite() {
            Ok((n.log_value, log_w))
        } else {
            Err(WeightError::Domain { x: y.to_f64().unwrap_or(f64::NAN) })
        }
    });
    match computed {
        Ok((log_n, log_w)) => RatioSample {
            y,
            log_n_omega: log_n + weight.log_scale(),
            log_omega: log_w + weight.log_scale(),
            ratio: (log_n - log_w).exp(),
            failure: None,
        },
        Err(e) => RatioSample { y, log_n_omega: T::nan(), log_omega: T::nan(), ratio: T::nan(), failure: Some(e.to_string()) },
    }
}

/// `r(y)` on each grid point. Samples are independent and computed in
/// parallel; output order follows `y_grid`.
pub fn ratio_curve<T: Scalar>(
    kernel: &FragmentKernel<T>,
    weight: &Weight<T>,
    y_grid: &[T],
    spec: &QuadratureSpec<T>,
) -> Vec<RatioSample<T>> {
    y_grid.par_iter().map(|&y| ratio_sample(kernel, weight, y, spec)).collect()
}

/// `per_decade` points per factor of ten from `lo` to `hi`, both included.
pub fn geometric_grid<T: Scalar>(lo: T, hi: T, per_decade: usize) -> Vec<T> {
    if !(hi > lo) {
        return vec![lo];
    }
    let decades = (hi / lo).log10();
    let n = (decades * T::from_usize_lossy(per_decade.max(1))).ceil().to_usize().unwrap_or(1).max(1);
    let log_lo = lo.ln();
    let step = (hi.ln() - log_lo) / T::from_usize_lossy(n);
    let mut g: Vec<T> = (0..=n).map(|k| (log_lo + step * T::from_usize_lossy(k)).exp()).collect();
    g[0] = lo;
    g[n] = hi;
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Decreasing,
    Flat,
    Increasing,
}

impl fmt::Display for Trend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Trend::Decreasing => "decreasing",
            Trend::Flat => "flat",
            Trend::Increasing => "increasing",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOptions<T> {
    pub eta0: T,
    pub y_max: T,
    /// Grid density on both sides of `η₀`.
    pub per_decade: usize,
    /// How many decades below `η₀` the κ₁ grid reaches.
    pub kappa1_decades: T,
    /// `verdict_limsup` passes only when `tail < 1 − margin`.
    pub margin: T,
    /// Allowed excess of `κ̂` over 1 attributed to quadrature error.
    pub kappa_slack: T,
    /// Slopes (per decade of `y`) within `±trend_tol` count as flat.
    pub trend_tol: T,
    /// `κ̂₁` counts as still growing when `r` rises by more than this
    /// fraction over the lowest sampled decade.
    pub kappa1_growth_tol: T,
    pub spec: QuadratureSpec<T>,
}

impl<T: Scalar> CheckOptions<T> {
    /// Defaults: `y_max = 10³η₀`, 64 points per decade, κ₁ grid down to
    /// `η₀·10⁻⁶`, margin `10⁻³`.
    pub fn new(eta0: T) -> Self {
        Self {
            eta0,
            y_max: eta0 * T::lit(1000.0),
            per_decade: 64,
            kappa1_decades: T::lit(6.0),
            margin: T::lit(1e-3),
            kappa_slack: T::lit(1e-9),
            trend_tol: T::lit(1e-8),
            kappa1_growth_tol: T::lit(1e-3),
            spec: QuadratureSpec::default(),
        }
    }

    pub fn with_y_max(mut self, y_max: T) -> Self {
        self.y_max = y_max;
        self
    }

    pub fn with_per_decade(mut self, per_decade: usize) -> Self {
        self.per_decade = per_decade;
        self
    }

    pub fn validate(&self) -> Result<(), WeightError> {
        if !(self.eta0 > T::zero() && self.y_max > self.eta0 && self.y_max.is_finite()) {
            return Err(WeightError::Invalid(format!("need 0 < eta0 < y_max, got eta0 = {}, y_max = {}", self.eta0, self.y_max)));
        }
        if self.per_decade == 0 || !(self.kappa1_decades >= T::zero()) {
            return Err(WeightError::Invalid("per_decade must be positive and kappa1_decades >= 0".into()));
        }
        if !(self.margin >= T::zero() && self.margin < T::one()) {
            return Err(WeightError::Invalid(format!("margin must lie in [0,1), got {}", self.margin)));
        }
        self.spec.validate().map_err(WeightError::Invalid)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport<T> {
    /// Geometric grid on `[η₀, y_max]`.
    pub y_grid: Vec<T>,
    /// Every sample, the κ₁ grid below `η₀` first, in increasing `y`.
    pub samples: Vec<RatioSample<T>>,
    pub eta0: T,
    pub y_max: T,
    pub kappa_hat: T,
    pub kappa1_hat: T,
    pub kappa2_hat: T,
    pub tail_estimate: T,
    /// Least-squares slope of `r` against `log10 y` over the last decade.
    pub trend_slope: T,
    pub trend: Trend,
    /// The sup on `(0, η₀]` sits at the smallest sample with `r` still rising
    /// toward zero; boundedness there is not established.
    pub kappa1_growing: bool,
    pub failed_samples: usize,
    pub margin: T,
    pub verdict_a32: Verdict,
    pub verdict_a41: Verdict,
    pub verdict_limsup: Verdict,
}

fn slope_fit<T: Scalar>(points: &[(T, T)]) -> T {
    if points.len() < 2 {
        return T::zero();
    }
    let n = T::from_usize_lossy(points.len());
    let mx = points.iter().fold(T::zero(), |a, p| a + p.0) / n;
    let my = points.iter().fold(T::zero(), |a, p| a + p.1) / n;
    let (sxy, sxx) = points.iter().fold((T::zero(), T::zero()), |(sxy, sxx), p| {
        let dx = p.0 - mx;
        (sxy + dx * (p.1 - my), sxx + dx * dx)
    });
    if sxx == T::zero() {
        T::zero()
    } else {
        sxy / sxx
    }
}

/// Samples `r(y)` below and above `η₀` and derives the κ estimates and
/// verdicts.
pub fn check<T: Scalar>(
    kernel: &FragmentKernel<T>,
    weight: &Weight<T>,
    opts: &CheckOptions<T>,
) -> Result<AdmissibilityReport<T>, WeightError> {
    opts.validate()?;
    let eta0 = opts.eta0;
    let lowest = eta0 * T::lit(10.0).powf(-opts.kappa1_decades);
    let lower = geometric_grid(lowest, eta0, opts.per_decade);
    let upper = geometric_grid(eta0, opts.y_max, opts.per_decade);
    let mut all: Vec<T> = lower[..lower.len() - 1].to_vec();
    all.extend_from_slice(&upper);
    let samples = ratio_curve(kernel, weight, &all, &opts.spec);

    let ok: Vec<&RatioSample<T>> = samples.iter().filter(|s| s.is_ok()).collect();
    let failed_samples = samples.len() - ok.len();
    let sup = |pred: &dyn Fn(T) -> bool| {
        ok.iter().filter(|s| pred(s.y)).map(|s| s.ratio).fold(T::neg_infinity(), T::max)
    };
    let kappa1_hat = sup(&|y| y <= eta0);
    let kappa2_hat = sup(&|y| y >= eta0);
    let kappa_hat = kappa1_hat.max(kappa2_hat);
    let half = opts.y_max * T::half();
    let tail_estimate = sup(&|y| y >= half);

    let decade = opts.y_max / T::lit(10.0);
    let pts: Vec<(T, T)> = ok.iter().filter(|s| s.y >= decade).map(|s| (s.y.log10(), s.ratio)).collect();
    let trend_slope = slope_fit(&pts);
    let trend = if trend_slope > opts.trend_tol {
        Trend::Increasing
    } else if trend_slope < -opts.trend_tol {
        Trend::Decreasing
    } else {
        Trend::Flat
    };

    let lower_ok: Vec<&&RatioSample<T>> = ok.iter().filter(|s| s.y <= eta0).collect();
    let decade_up = opts.per_decade.min(lower_ok.len().saturating_sub(1));
    let kappa1_growing = decade_up >= 1
        && lower_ok[0].ratio >= kappa1_hat
        && lower_ok[0].ratio > lower_ok[decade_up].ratio * (T::one() + opts.kappa1_growth_tol);

    let one = T::one();
    let verdict_a32 = if kappa_hat <= one + opts.kappa_slack && !kappa1_growing {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let verdict_limsup = if !(tail_estimate < one) {
        Verdict::Fail
    } else if trend == Trend::Increasing {
        Verdict::Inconclusive
    } else if tail_estimate < one - opts.margin {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let verdict_a41 = if !(kappa2_hat < one && kappa1_hat.is_finite()) {
        Verdict::Fail
    } else if verdict_limsup == Verdict::Inconclusive || kappa1_growing {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };

    Ok(AdmissibilityReport {
        y_grid: upper,
        samples,
        eta0,
        y_max: opts.y_max,
        kappa_hat,
        kappa1_hat,
        kappa2_hat,
        tail_estimate,
        trend_slope,
        trend,
        kappa1_growing,
        failed_samples,
        margin: opts.margin,
        verdict_a32,
        verdict_a41,
        verdict_limsup,
    })
}

impl<T: Scalar> fmt::Display for AdmissibilityReport<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "eta0 = {:.16e}", self.eta0)?;
        writeln!(f, "y_max = {:.16e}", self.y_max)?;
        writeln!(f, "kappa_hat = {:.16e}", self.kappa_hat)?;
        writeln!(f, "kappa1_hat = {:.16e}", self.kappa1_hat)?;
        writeln!(f, "kappa2_hat = {:.16e}", self.kappa2_hat)?;
        writeln!(f, "tail_estimate = {:.16e}", self.tail_estimate)?;
        writeln!(f, "trend_slope = {:.16e}", self.trend_slope)?;
        writeln!(f, "trend = {}", self.trend)?;
        writeln!(f, "kappa1_growing = {}", self.kappa1_growing)?;
        writeln!(f, "failed_samples = {}", self.failed_samples)?;
        writeln!(f, "verdict_A32 = {}", self.verdict_a32)?;
        writeln!(f, "verdict_A41 = {}", self.verdict_a41)?;
        writeln!(f, "verdict_limsup = {}", self.verdict_limsup)
    }
}

/// Estimated relative bound `‖Bf‖ ≤ β̂‖f‖ + α̂‖Af‖` on the sampled horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeBoundEstimate<T> {
    /// `κ̂₂`; below 1 means the analyticity hypothesis holds on the horizon.
    pub alpha_hat: T,
    /// `κ̂₁ · c(η₀)`, `c` the rate envelope.
    pub beta_hat: T,
    pub eta0: T,
}

pub fn relative_bound<T: Scalar>(
    kernel: &FragmentKernel<T>,
    rate: &RateFunction<T>,
    weight: &Weight<T>,
    opts: &CheckOptions<T>,
) -> Result<RelativeBoundEstimate<T>, WeightError> {
    let report = check(kernel, weight, opts)?;
    let alpha_hat = report.kappa2_hat.max(T::zero());
    let beta_hat = (report.kappa1_hat * rate.envelope(opts.eta0)).max(T::zero());
    Ok(RelativeBoundEstimate { alpha_hat, beta_hat, eta0: opts.eta0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn spec() -> QuadratureSpec<f64> {
        QuadratureSpec::default()
    }

    #[test]
    fn n_omega_examples() {
        let bb = FragmentKernel::boundary_binary();
        let n = n_omega(&bb, &Weight::exponential(E).unwrap(), 10.0, &spec()).unwrap();
        let exact = (E - 1.0) + 10f64.exp() - 9f64.exp();
        assert!((n.value() - exact).abs() < 1e-9 * exact);
        let h = FragmentKernel::homogeneous_power(-1.0).unwrap();
        let n = n_omega(&h, &Weight::power(2.0).unwrap(), 3.0, &spec()).unwrap();
        assert!((n.value() - 4.5).abs() < 1e-9);
        let n = n_omega(&FragmentKernel::zero(), &Weight::power(2.0).unwrap(), 3.0, &spec()).unwrap();
        assert_eq!(n.value(), 0.0);
    }

    #[test]
    fn ratio_examples() {
        let bb = FragmentKernel::boundary_binary();
        let r = log_ratio(&bb, &Weight::exponential(E).unwrap(), 30.0, &spec()).unwrap().exp();
        let exact = 1.0 - (-1.0f64).exp() + (E - 1.0) * (-30.0f64).exp();
        assert!((r - exact).abs() < 1e-9);
        let c = FragmentKernel::concentrated();
        let r = log_ratio(&c, &Weight::super_exponential(), 8.0, &spec()).unwrap().exp();
        let exact = 0.5 * (1.0 - (-2.0 + 1.0 / 64.0f64).exp()) + 0.5 * ((1.0 / 64.0f64).exp() - 1.0) * (-64.0f64).exp();
        assert!((r - exact).abs() < 1e-9, "{r} vs {exact}");
        let h = FragmentKernel::homogeneous_power(-1.0).unwrap();
        for p in [1.0, 1.5, 3.0] {
            let curve = ratio_curve(&h, &Weight::power(p).unwrap(), &[0.3, 1.0, 7.0, 40.0], &spec());
            for s in curve {
                assert!((s.ratio - 1.0 / p).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn grid_has_exact_endpoints() {
        let g = geometric_grid(1.0f64, 1000.0, 64);
        assert_eq!(g.len(), 193);
        assert_eq!(g[0], 1.0);
        assert_eq!(*g.last().unwrap(), 1000.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn homogeneous_check_passes() {
        let h = FragmentKernel::homogeneous_power(-1.0).unwrap();
        let opts = CheckOptions::new(1.0f64).with_y_max(100.0).with_per_decade(16);
        let r = check(&h, &Weight::power(2.0).unwrap(), &opts).unwrap();
        for k in [r.kappa_hat, r.kappa1_hat, r.kappa2_hat] {
            assert!((k - 0.5).abs() < 1e-9);
        }
        assert_eq!(r.verdict_a32, Verdict::Pass);
        assert_eq!(r.verdict_a41, Verdict::Pass);
        assert_eq!(r.verdict_limsup, Verdict::Pass);
    }

    #[test]
    fn boundary_binary_square_weight_is_not_a_pass() {
        let opts = CheckOptions::new(1.0).with_y_max(200.0).with_per_decade(16);
        let r = check(&FragmentKernel::boundary_binary(), &Weight::power(2.0).unwrap(), &opts).unwrap();
        assert_ne!(r.verdict_limsup, Verdict::Pass);
        assert!(r.tail_estimate > 0.99 && r.tail_estimate < 1.0);
        assert_eq!(r.trend, Trend::Increasing);
        assert_eq!(r.verdict_limsup, Verdict::Inconclusive);
    }

    #[test]
    fn concentrated_exponential_tail_approaches_one() {
        let opts = CheckOptions::new(2.0).with_y_max(50.0).with_per_decade(16);
        let r = check(&FragmentKernel::concentrated(), &Weight::exponential(E).unwrap(), &opts).unwrap();
        // y(1 − e^{−1/y}) + y(e^{1/y} − 1)e^{−y} at y = 50
        let exact = 50.0 * (1.0 - (-0.02f64).exp()) + 50.0 * (0.02f64.exp() - 1.0) * (-50.0f64).exp();
        assert!((r.tail_estimate - exact).abs() < 1e-9);
        assert_ne!(r.verdict_limsup, Verdict::Pass);
    }

    #[test]
    fn relative_bound_examples() {
        let h = FragmentKernel::homogeneous_power(-1.0).unwrap();
        let opts = CheckOptions::new(1.0f64).with_y_max(100.0).with_per_decade(8);
        let rb = relative_bound(&h, &RateFunction::power(1.0).unwrap(), &Weight::power(2.0).unwrap(), &opts).unwrap();
        assert!((rb.alpha_hat - 0.5).abs() < 1e-9);
        assert!((rb.beta_hat - 0.5).abs() < 1e-9);
        let rb = relative_bound(&FragmentKernel::zero(), &RateFunction::power(1.0).unwrap(), &Weight::power(2.0).unwrap(), &opts)
            .unwrap();
        assert_eq!((rb.alpha_hat, rb.beta_hat), (0.0, 0.0));
        let opts = CheckOptions::new(2.0).with_y_max(40.0).with_per_decade(16);
        let w = Weight::exponential(E).unwrap();
        let rb = relative_bound(&FragmentKernel::boundary_binary(), &RateFunction::constant(1.0).unwrap(), &w, &opts).unwrap();
        let report = check(&FragmentKernel::boundary_binary(), &w, &opts).unwrap();
        // sup of r on [2, 40] sits at y = 2 where b = 2/y: r(2) = 1 − e^{−2}.
        assert!((rb.alpha_hat - (1.0 - (-2.0f64).exp())).abs() < 1e-9);
        assert_eq!(rb.beta_hat, report.kappa1_hat);
    }

    #[test]
    fn invalid_horizon_is_rejected() {
        let opts = CheckOptions::new(2.0).with_y_max(1.0);
        assert!(check(&FragmentKernel::boundary_binary(), &Weight::power(1.0).unwrap(), &opts).is_err());
    }
}
