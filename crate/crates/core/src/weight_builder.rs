//! Constructive weights.
//!
//! Given a kernel `b`, a weight `ω₀` bounded on `[0, η₀]` and `κ > 0`, the
//! pipeline builds a weight `ω` with `∫₀^y b(x,y) ω(x) dx ≤ κ ω(y)`:
//!
//! 1. a piecewise-linear majorant `h ≥ g`, `g(y) = ∫₀^{η₀} b(x,y) ω₀(x) dx`;
//! 2. a majorant `b̃ ≥ b` on `[η₀,∞)²` that is piecewise linear in
//!    `s = x + y − 2η₀` and constant along anti-diagonals;
//! 3. the Volterra equation `κω(y) = h(y) + ∫_{η₀}^y b̃(x,y) ω(x) dx`,
//!    marched forward with the trapezoid rule;
//! 4. a sampled certificate of the target inequality for the true kernel.
//!
//! Band suprema are sampled, not proven; every majorant is re-checked on an
//! independent seeded sample.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use crate::error::BuildError;
use crate::kernels::FragmentKernel;
use crate::quadrature::{integrate_log, QuadratureSpec};
use crate::weights::{LogTable, Weight};
use crate::Scalar;

fn f64_of<T: Scalar>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Tuning knobs of the construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions<T> {
    /// Samples of `g` per unit length when estimating band suprema.
    pub h_samples_per_unit: usize,
    /// Samples per side of the `(s, t)` grid on each anti-diagonal band.
    pub b_samples_per_side: usize,
    /// Positivity floor added to `h`.
    pub epsilon: T,
    /// Volterra step `Δ`.
    pub step: T,
    /// Largest accepted Volterra residual.
    pub residual_tol: T,
    pub certificate_points: usize,
    pub certificate_tol: T,
    /// Independent random points used to re-check each majorant.
    pub validation_samples: usize,
    pub seed: u64,
    pub spec: QuadratureSpec<T>,
}

impl<T: Scalar> Default for BuildOptions<T> {
    fn default() -> Self {
        Self {
            h_samples_per_unit: 256,
            b_samples_per_side: 100,
            epsilon: T::lit(1e-8),
            step: T::lit(1e-2),
            residual_tol: T::lit(1e-3),
            certificate_points: 200,
            certificate_tol: T::lit(1e-6),
            validation_samples: 2000,
            seed: 0,
            spec: QuadratureSpec::default(),
        }
    }
}

impl<T: Scalar> BuildOptions<T> {
    pub fn validate(&self) -> Result<(), BuildError> {
        let bad = |m: &str| Err(BuildError::InvalidInput(m.to_string()));
        if self.h_samples_per_unit == 0 || self.b_samples_per_side < 2 {
            return bad("sampling densities must be positive (b grid needs at least 2 per side)");
        }
        if !(self.epsilon > T::zero() && self.epsilon.is_finite()) {
            return bad("epsilon must be finite and > 0");
        }
        if !(self.step > T::zero() && self.step.is_finite()) {
            return bad("step must be finite and > 0");
        }
        if !(self.residual_tol > T::zero()) || !(self.certificate_tol >= T::zero()) {
            return bad("tolerances must be positive");
        }
        if self.certificate_points < 2 {
            return bad("certificate needs at least 2 points");
        }
        self.spec.validate().map_err(|e| BuildError::InvalidInput(e.to_string()))
    }
}

/// Piecewise-linear majorant of `g` on `[η₀, η₀ + N]`:
/// `h(y) = h_n + (h_{n+1} − h_n)(y − η₀ − n) + ε` on band `n`, where
/// `h_n` is the sampled sup of `g` on `[η₀, η₀ + n + 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MajorantH<T> {
    pub eta0: T,
    pub knots: Vec<T>,
    pub epsilon: T,
}

fn interpolate_knots<T: Scalar>(knots: &[T], u: T) -> T {
    match knots.len() {
        0 => T::zero(),
        1 => knots[0],
        len => {
            let u = u.max(T::zero());
            let n = u.floor().to_usize().unwrap_or(usize::MAX);
            if n + 1 >= len {
                return knots[len - 1];
            }
            let frac = u - T::from_usize_lossy(n);
            knots[n] + (knots[n + 1] - knots[n]) * frac
        }
    }
}

impl<T: Scalar> MajorantH<T> {
    pub fn eval(&self, y: T) -> T {
        interpolate_knots(&self.knots, y - self.eta0) + self.epsilon
    }

    /// Right end of the range where domination was established.
    pub fn y_end(&self) -> T {
        self.eta0 + T::from_usize_lossy(self.knots.len().saturating_sub(1))
    }
}

/// Majorant of `b` on `[η₀,∞)²`, linear in `s = x + y − 2η₀` between the
/// knots `b_n` (sampled sup of `b` over `s ≤ n + 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct MajorantB<T> {
    pub eta0: T,
    pub knots: Vec<T>,
}

impl<T: Scalar> MajorantB<T> {
    /// `b̃ ≡ β`.
    pub fn constant(eta0: T, beta: T) -> Self {
        Self { eta0, knots: vec![beta] }
    }

    pub fn eval(&self, x: T, y: T) -> T {
        interpolate_knots(&self.knots, x + y - T::two() * self.eta0)
    }
}

/// `g(y) = ∫₀^{min(η₀,y)} b(x,y) ω₀(x) dx`.
fn g_value<T: Scalar>(
    kernel: &FragmentKernel<T>,
    omega0: &Weight<T>,
    eta0: T,
    y: T,
    spec: &QuadratureSpec<T>,
) -> Result<T, BuildError> {
    let top = eta0.min(y);
    let scale = omega0.log_scale();
    let r = integrate_log(|x| kernel.log_eval(x, y) + omega0.log_shape(x) + scale, T::zero(), top, &kernel.breakpoints(y), spec)
        .map_err(|_| BuildError::Unbounded { y: f64_of(y) })?;
    let v = r.value();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(BuildError::Unbounded { y: f64_of(y) })
    }
}

fn bands_for<T: Scalar>(eta0: T, y_max: T) -> Result<usize, BuildError> {
    if !(eta0 >= T::zero() && eta0.is_finite() && y_max > eta0 && y_max.is_finite()) {
        return Err(BuildError::InvalidInput(format!("need 0 <= eta0 < y_max < inf, got eta0 = {eta0}, y_max = {y_max}")));
    }
    (y_max - eta0)
        .ceil()
        .to_usize()
        .filter(|&n| n < 1 << 24)
        .ok_or_else(|| BuildError::InvalidInput(format!("range y_max - eta0 = {} too large", y_max - eta0)))
}

fn running_max<T: Scalar>(values: &[T]) -> Vec<T> {
    let mut acc = T::zero();
    values
        .iter()
        .map(|&v| {
            acc = acc.max(v);
            acc
        })
        .collect()
}

/// Builds `h` on `[η₀, y_max]`; `η₀ = 0` gives `h ≡ ε`.
pub fn build_h<T: Scalar>(
    kernel: &FragmentKernel<T>,
    omega0: &Weight<T>,
    eta0: T,
    y_max: T,
    opts: &BuildOptions<T>,
) -> Result<MajorantH<T>, BuildError> {
    opts.validate()?;
    let bands = bands_for(eta0, y_max)?;
    if eta0 == T::zero() {
        return Ok(MajorantH { eta0, knots: Vec::new(), epsilon: opts.epsilon });
    }
    let m = opts.h_samples_per_unit;
    let inv_m = T::one() / T::from_usize_lossy(m);
    let band_sup: Vec<T> = (0..=bands)
        .into_par_iter()
        .map(|n| {
            let base = eta0 + T::from_usize_lossy(n);
            (0..=m).try_fold(T::zero(), |acc, i| {
                let y = base + T::from_usize_lossy(i) * inv_m;
                Ok(acc.max(g_value(kernel, omega0, eta0, y, &opts.spec)?))
            })
        })
        .collect::<Result<_, BuildError>>()?;
    let h = MajorantH { eta0, knots: running_max(&band_sup), epsilon: opts.epsilon };

    let slack = T::one() + T::lit(10.0) * opts.spec.rel_tol;
    let mut rng = StdRng::seed_from_u64(opts.seed);
    let span = T::from_usize_lossy(bands);
    let ys: Vec<T> = (0..opts.validation_samples).map(|_| eta0 + span * T::lit(rng.gen::<f64>())).collect();
    let violation = ys
        .par_iter()
        .map(|&y| g_value(kernel, omega0, eta0, y, &opts.spec).map(|g| (y, g)))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .find(|&(y, g)| g > h.eval(y) * slack);
    if let Some((y, g)) = violation {
        return Err(BuildError::MajorantViolation { at: format!("h at y = {y}"), majorant: f64_of(h.eval(y)), value: f64_of(g) });
    }
    Ok(h)
}

/// Builds `b̃` covering `x, y ∈ [η₀, y_max]`.
pub fn build_btilde<T: Scalar>(
    kernel: &FragmentKernel<T>,
    eta0: T,
    y_max: T,
    opts: &BuildOptions<T>,
) -> Result<MajorantB<T>, BuildError> {
    opts.validate()?;
    let bands = 2 * bands_for(eta0, y_max)?;
    let m = opts.b_samples_per_side;
    let denom = T::from_usize_lossy(m - 1);
    let mut ts: Vec<T> = (0..m).map(|j| T::from_usize_lossy(j) / denom).collect();
    ts.push(T::half());
    let band_sup: Vec<T> = (0..=bands)
        .into_par_iter()
        .map(|n| {
            let mut sup = T::zero();
            for i in 0..m {
                let s = T::from_usize_lossy(n) + T::from_usize_lossy(i) / denom;
                for &t in &ts {
                    let (x, y) = (eta0 + t * s, eta0 + (T::one() - t) * s);
                    let v = kernel.eval(x, y);
                    if !v.is_finite() {
                        return Err(BuildError::Unbounded { y: f64_of(y) });
                    }
                    sup = sup.max(v);
                }
            }
            Ok(sup)
        })
        .collect::<Result<_, BuildError>>()?;
    let b = MajorantB { eta0, knots: running_max(&band_sup) };

    let mut rng = StdRng::seed_from_u64(opts.seed ^ 0x9e37_79b9_7f4a_7c15);
    let span = y_max - eta0;
    for _ in 0..opts.validation_samples {
        let x = eta0 + span * T::lit(rng.gen::<f64>());
        let y = eta0 + span * T::lit(rng.gen::<f64>());
        let v = kernel.eval(x, y);
        if !v.is_finite() {
            return Err(BuildError::Unbounded { y: f64_of(y) });
        }
        if v > b.eval(x, y) {
            return Err(BuildError::MajorantViolation {
                at: format!("b~ at (x, y) = ({x}, {y})"),
                majorant: f64_of(b.eval(x, y)),
                value: f64_of(v),
            });
        }
    }
    Ok(b)
}

/// Node values of the trapezoid solution of
/// `κω(y) = f(y) + ∫_{η₀}^y b̃(x,y) ω(x) dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct VolterraSolution<T> {
    pub eta0: T,
    pub y_max: T,
    pub step: T,
    pub nodes: Vec<T>,
    pub values: Vec<T>,
    pub kappa: T,
    /// Max over nodes of `|κω − f − ∫b̃ω| / (κω)` with the integral
    /// recomputed by composite Simpson (3/8 on an odd tail).
    pub residual_max: T,
}

impl<T: Scalar> VolterraSolution<T> {
    /// Piecewise-linear interpolant of the node values.
    pub fn eval(&self, y: T) -> T {
        interpolate_knots(&self.values, (y - self.eta0) / self.step)
    }
}

fn higher_order_integral<T: Scalar>(phi: &[T], step: T) -> T {
    let k = phi.len() - 1;
    let simpson = |p: &[T]| {
        let mut acc = p[0] + p[p.len() - 1];
        for (i, &v) in p.iter().enumerate().take(p.len() - 1).skip(1) {
            acc += if i % 2 == 1 { T::lit(4.0) * v } else { T::two() * v };
        }
        acc * step / T::lit(3.0)
    };
    match k {
        0 => T::zero(),
        1 => T::half() * step * (phi[0] + phi[1]),
        _ if k.is_multiple_of(2) => simpson(phi),
        _ => {
            let tail = &phi[k - 3..];
            let three_eighths = T::lit(0.375) * step * (tail[0] + T::lit(3.0) * (tail[1] + tail[2]) + tail[3]);
            let head = if k > 3 { simpson(&phi[..=k - 3]) } else { T::zero() };
            head + three_eighths
        }
    }
}

/// Marches the Volterra equation on `[η₀, y_max]`. The step is shrunk so
/// that an integer number of steps ends exactly at `y_max`.
pub fn solve_volterra<T: Scalar, K: Fn(T, T) -> T, F: Fn(T) -> T>(
    btilde: K,
    f: F,
    kappa: T,
    eta0: T,
    y_max: T,
    step: T,
    residual_tol: T,
) -> Result<VolterraSolution<T>, BuildError> {
    if !(kappa > T::zero() && kappa.is_finite()) {
        return Err(BuildError::InvalidInput(format!("kappa must be finite and > 0, got {kappa}")));
    }
    if !(step > T::zero() && step.is_finite()) {
        return Err(BuildError::InvalidInput(format!("step must be finite and > 0, got {step}")));
    }
    if !(eta0.is_finite() && y_max > eta0 && y_max.is_finite()) {
        return Err(BuildError::InvalidInput(format!("need eta0 < y_max, got {eta0}, {y_max}")));
    }
    let count = ((y_max - eta0) / step)
        .ceil()
        .to_usize()
        .filter(|&n| n < 1 << 22)
        .ok_or_else(|| BuildError::InvalidInput("too many Volterra steps".into()))?
        .max(1);
    let dy = (y_max - eta0) / T::from_usize_lossy(count);
    let nodes: Vec<T> = (0..=count)
        .map(|k| if k == count { y_max } else { eta0 + T::from_usize_lossy(k) * dy })
        .collect();
    let fs: Vec<T> = nodes.iter().map(|&y| f(y)).collect();
    if let Some(i) = fs.iter().position(|v| !(*v >= T::zero() && v.is_finite())) {
        return Err(BuildError::InvalidInput(format!("f must be finite and >= 0, f({}) = {}", nodes[i], fs[i])));
    }

    let mut values = Vec::with_capacity(count + 1);
    values.push(fs[0] / kappa);
    let mut row = Vec::with_capacity(count + 1);
    for k in 1..=count {
        let y = nodes[k];
        row.clear();
        row.extend(nodes[..=k].iter().map(|&x| btilde(x, y)));
        let diag = kappa - T::half() * dy * row[k];
        if !(diag > T::zero()) {
            return Err(BuildError::StepTooLarge { step: f64_of(dy), y: f64_of(y), margin: f64_of(diag) });
        }
        let mut acc = T::half() * row[0] * values[0];
        for j in 1..k {
            acc += row[j] * values[j];
        }
        let v = (fs[k] + dy * acc) / diag;
        if !v.is_finite() {
            return Err(BuildError::Overflow { y: f64_of(y) });
        }
        values.push(v);
    }

    let mut residual_max = T::zero();
    let mut phi = Vec::with_capacity(count + 1);
    for k in 0..=count {
        let y = nodes[k];
        phi.clear();
        phi.extend((0..=k).map(|j| btilde(nodes[j], y) * values[j]));
        let lhs = kappa * values[k];
        let res = (lhs - fs[k] - higher_order_integral(&phi, dy)).abs();
        if lhs > T::zero() {
            residual_max = residual_max.max(res / lhs);
        } else if res > T::zero() {
            residual_max = T::infinity();
        }
    }
    if residual_max > residual_tol {
        return Err(BuildError::ResidualTooLarge { residual: f64_of(residual_max), tolerance: f64_of(residual_tol) });
    }
    Ok(VolterraSolution { eta0, y_max, step: dy, nodes, values, kappa, residual_max })
}

/// One certificate sample: `lhs = ∫₀^y bω`, `rhs = κω(y)`,
/// `margin = (rhs − lhs)/rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateRow<T> {
    pub y: T,
    pub lhs: T,
    pub rhs: T,
    pub margin: T,
}

#[derive(Debug, Clone)]
pub struct ConstructedWeight<T> {
    /// `ω₀` below `η₀`, the tabulated Volterra solution above.
    pub weight: Weight<T>,
    pub h: MajorantH<T>,
    pub btilde: MajorantB<T>,
    pub volterra: VolterraSolution<T>,
    pub certificate: Vec<CertificateRow<T>>,
    pub kappa: T,
}

impl<T: Scalar> ConstructedWeight<T> {
    pub fn worst_margin(&self) -> T {
        self.certificate.iter().map(|r| r.margin).fold(T::infinity(), T::min)
    }
}

/// Evaluates `∫₀^y bω ≤ κω(y)(1 + tol)` at `points` uniform `y` in
/// `[y_lo, y_hi]`.
pub fn certify<T: Scalar>(
    kernel: &FragmentKernel<T>,
    weight: &Weight<T>,
    kappa: T,
    y_lo: T,
    y_hi: T,
    points: usize,
    spec: &QuadratureSpec<T>,
) -> Result<Vec<CertificateRow<T>>, BuildError> {
    let knots: Vec<T> = weight.table().map(|t| t.xs().to_vec()).unwrap_or_default();
    let scale = weight.log_scale();
    let last = T::from_usize_lossy(points.max(2) - 1);
    (0..points.max(2))
        .into_par_iter()
        .map(|i| {
            let y = y_lo + (y_hi - y_lo) * T::from_usize_lossy(i) / last;
            let mut cuts = kernel.breakpoints(y);
            cuts.extend(knots.iter().copied().take_while(|&x| x < y));
            let lhs = integrate_log(|x| kernel.log_eval(x, y) + weight.log_shape(x) + scale, T::zero(), y, &cuts, spec)?.value();
            let rhs = kappa * weight.eval(y)?;
            Ok(CertificateRow { y, lhs, rhs, margin: (rhs - lhs) / rhs })
        })
        .collect()
}

/// Full pipeline: majorants, Volterra solve, splice, certificate.
pub fn construct_weight<T: Scalar>(
    kernel: &FragmentKernel<T>,
    omega0: &Weight<T>,
    eta0: T,
    kappa: T,
    y_max: T,
    opts: &BuildOptions<T>,
) -> Result<ConstructedWeight<T>, BuildError> {
    opts.validate()?;
    if !(kappa > T::zero() && kappa.is_finite()) {
        return Err(BuildError::InvalidInput(format!("kappa must be finite and > 0, got {kappa}")));
    }
    let h = build_h(kernel, omega0, eta0, y_max, opts)?;
    let btilde = build_btilde(kernel, eta0, y_max, opts)?;
    let volterra = solve_volterra(|x, y| btilde.eval(x, y), |y| h.eval(y), kappa, eta0, y_max, opts.step, opts.residual_tol)?;
    let logs = volterra.values.iter().map(|v| v.ln()).collect();
    let table = LogTable::new(volterra.nodes.clone(), logs)?;
    let weight = if eta0 > T::zero() { Weight::spliced(omega0.clone(), eta0, table) } else { Weight::tabulated(table) };

    let certificate = certify(kernel, &weight, kappa, eta0.max(volterra.nodes[0]), y_max, opts.certificate_points, &opts.spec)?;
    let bound = T::one() + opts.certificate_tol;
    if let Some(worst) = certificate
        .iter()
        .filter(|r| !(r.lhs <= r.rhs * bound))
        .min_by(|a, b| a.margin.partial_cmp(&b.margin).unwrap_or(std::cmp::Ordering::Equal))
    {
        return Err(BuildError::CertificateViolation { worst_y: f64_of(worst.y), lhs: f64_of(worst.lhs), rhs: f64_of(worst.rhs) });
    }
    Ok(ConstructedWeight { weight, h, btilde, volterra, certificate, kappa })
}

/// The inequalities an exponential weight `c^x` must satisfy, as computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpWeightChecks {
    pub delta_within_bound: bool,
    pub delta_bm_below_half: bool,
    pub c_above_d: bool,
    pub log_c_above_inverse_delta1: bool,
    pub c_pow_below_half: bool,
    pub sum_below_one: bool,
}

impl ExpWeightChecks {
    pub fn all(&self) -> bool {
        self.delta_within_bound
            && self.delta_bm_below_half
            && self.c_above_d
            && self.log_c_above_inverse_delta1
            && self.c_pow_below_half
            && self.sum_below_one
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpWeightParams<T> {
    pub c: T,
    pub delta: T,
    /// `c^{−δ} + δ b_m`.
    pub bound: T,
    pub checks: ExpWeightChecks,
}

/// Deterministic choice `δ = min(δ₂, 1/(4b_m))`,
/// `c = max(2d, e^{2/δ₁}, 2^{2/δ})`.
pub fn exp_weight_search<T: Scalar>(delta1: T, delta2: T, d: T, b_m: T) -> Result<ExpWeightParams<T>, BuildError> {
    let positive = |v: T| v > T::zero() && v.is_finite();
    if !(positive(delta1) && positive(delta2) && positive(b_m) && d > T::one() && d.is_finite()) {
        return Err(BuildError::InvalidInput(format!(
            "need delta1, delta2, b_m > 0 and d > 1, got ({delta1}, {delta2}, {d}, {b_m})"
        )));
    }
    let delta = delta2.min(T::one() / (T::lit(4.0) * b_m));
    let candidates = [T::two() * d, (T::two() / delta1).exp(), T::two().powf(T::two() / delta)];
    let c = candidates.iter().copied().fold(T::zero(), T::max);
    if !c.is_finite() {
        return Err(BuildError::SearchOverflow(format!(
            "c = max(2d, e^(2/delta1), 2^(2/delta)) overflows with delta1 = {delta1}, delta = {delta}"
        )));
    }
    let c_pow = c.powf(-delta);
    let bound = c_pow + delta * b_m;
    let checks = ExpWeightChecks {
        delta_within_bound: delta <= delta2,
        delta_bm_below_half: delta * b_m < T::half(),
        c_above_d: c > d,
        log_c_above_inverse_delta1: c.ln() > T::one() / delta1,
        c_pow_below_half: c_pow < T::half(),
        sum_below_one: bound < T::one(),
    };
    if !checks.all() {
        return Err(BuildError::SearchOverflow(format!("rounding broke an inequality: {checks:?}")));
    }
    Ok(ExpWeightParams { c, delta, bound, checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> BuildOptions<f64> {
        BuildOptions { validation_samples: 300, ..BuildOptions::default() }
    }

    #[test]
    fn h_is_epsilon_when_eta0_is_zero() {
        let k = FragmentKernel::<f64>::boundary_binary();
        let h = build_h(&k, &Weight::power(1.0).unwrap(), 0.0, 5.0, &opts()).unwrap();
        assert_eq!(h.eval(3.0), 1e-8);
    }

    #[test]
    fn h_for_boundary_binary_first_band() {
        let k = FragmentKernel::<f64>::boundary_binary();
        let h = build_h(&k, &Weight::power(1.0).unwrap(), 1.0, 6.0, &opts()).unwrap();
        assert!((h.knots[0] - 1.0).abs() < 1e-9);
        for y in [1.0, 1.5, 3.3, 5.9] {
            assert!(h.eval(y) <= y + 1e-8 + 1e-9);
        }
    }

    #[test]
    fn btilde_examples() {
        let bb = FragmentKernel::<f64>::boundary_binary();
        let b = build_btilde(&bb, 3.0, 10.0, &opts()).unwrap();
        assert_eq!(b.knots[0], 1.0);
        let inv = FragmentKernel::<f64>::homogeneous_power(-1.0).unwrap();
        let b = build_btilde(&inv, 1.0, 8.0, &opts()).unwrap();
        assert!(b.knots.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        let flat = FragmentKernel::<f64>::custom("flat", |x, y| if x <= y { 0.7 } else { 0.0 });
        let b = build_btilde(&flat, 1.0, 4.0, &opts()).unwrap();
        assert!(b.knots.iter().all(|&v| v == 0.7));
    }

    #[test]
    fn volterra_zero_kernel_and_closed_form() {
        let s = solve_volterra(|_, _| 0.0, |y: f64| 1.0 + y, 2.0, 0.5, 3.0, 0.1, 1e-9).unwrap();
        for (y, v) in s.nodes.iter().zip(&s.values) {
            assert!((v - (1.0 + y) / 2.0).abs() < 1e-15);
        }
        let s = solve_volterra(|_, _| 1.0, |_| 1.0, 1.0, 0.0, 1.0, 1e-3, 1e-3).unwrap();
        let last = *s.values.last().unwrap();
        assert!(((last - 1f64.exp()) / 1f64.exp()).abs() < 1e-6);
    }

    #[test]
    fn volterra_step_too_large() {
        let e = solve_volterra(|_, _| 10.0, |_| 1.0, 1.0, 0.0, 1.0, 0.5, 1.0).unwrap_err();
        assert!(matches!(e, BuildError::StepTooLarge { .. }));
    }

    #[test]
    fn construction_with_zero_kernel_is_flat() {
        let k = FragmentKernel::<f64>::zero();
        let opts = BuildOptions { step: 0.05, ..opts() };
        let c = construct_weight(&k, &Weight::power(1.0).unwrap(), 1.0, 2.0, 5.0, &opts).unwrap();
        for v in &c.volterra.values {
            assert!((v - 0.5e-8).abs() < 1e-20);
        }
    }

    #[test]
    fn exp_weight_search_examples() {
        let p = exp_weight_search(1.0f64, 1.0, 1.5, 1.0).unwrap();
        assert_eq!((p.c, p.delta), (256.0, 0.25));
        assert_eq!(p.bound, 0.5);
        let p = exp_weight_search(1.0f64, 1.0, 1.5, 1e-9).unwrap();
        assert_eq!(p.delta, 1.0);
        assert!(p.checks.all());
        assert!(matches!(exp_weight_search(1.0f64, 1.0, 1.5, 1e6), Err(BuildError::SearchOverflow(_))));
        assert!(exp_weight_search(1.0f64, 1.0, 0.5, 1.0).is_err());
    }
}
