//! Fragmentation coefficients: the rate `a(x)` and the daughter distribution
//! `b(x,y)` (number density of size-`x` fragments from a size-`y` parent).

use std::fmt;
use std::sync::Arc;

use crate::error::KernelError;
use crate::quadrature::{integrate_log, QuadratureSpec};
use crate::Scalar;

type RateFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;
type KernelFn<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;
type BreakpointFn<T> = Arc<dyn Fn(T) -> Vec<T> + Send + Sync>;

/// Default sampling density of the rate envelope, points per unit length.
pub const ENVELOPE_SAMPLES_PER_UNIT: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateFamily {
    Power,
    Constant,
    Tabulated,
    Custom,
}

#[derive(Clone)]
enum RateRepr<T> {
    Power { alpha: T },
    Constant { value: T },
    Tabulated { knots: Vec<(T, T)> },
    Custom { name: String, eval: RateFn<T> },
}

/// The fragmentation rate `a(x) ≥ 0`.
#[derive(Clone)]
pub struct RateFunction<T> {
    repr: RateRepr<T>,
    /// Optional known bound of `a` on bounded intervals; informational.
    pub local_bound_hint: Option<T>,
    envelope_samples_per_unit: usize,
}

impl<T: Scalar> fmt::Debug for RateFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            RateRepr::Power { alpha } => write!(f, "RateFunction::Power(alpha = {alpha})"),
            RateRepr::Constant { value } => write!(f, "RateFunction::Constant({value})"),
            RateRepr::Tabulated { knots } => write!(f, "RateFunction::Tabulated({} knots)", knots.len()),
            RateRepr::Custom { name, .. } => write!(f, "RateFunction::Custom({name})"),
        }
    }
}

impl<T: Scalar> RateFunction<T> {
    fn from_repr(repr: RateRepr<T>) -> Self {
        Self { repr, local_bound_hint: None, envelope_samples_per_unit: ENVELOPE_SAMPLES_PER_UNIT }
    }

    /// `a(x) = x^α`, `α ≥ 0`.
    pub fn power(alpha: T) -> Result<Self, KernelError> {
        if !(alpha >= T::zero() && alpha.is_finite()) {
            return Err(KernelError::InvalidRate(format!("power exponent must be finite and >= 0, got {alpha}")));
        }
        Ok(Self::from_repr(RateRepr::Power { alpha }))
    }

    pub fn constant(value: T) -> Result<Self, KernelError> {
        if !(value >= T::zero() && value.is_finite()) {
            return Err(KernelError::InvalidRate(format!("constant rate must be finite and >= 0, got {value}")));
        }
        Ok(Self::from_repr(RateRepr::Constant { value }))
    }

    /// Piecewise-linear interpolant of `(x, a(x))` knots, held constant
    /// outside the table.
    pub fn tabulated(knots: Vec<(T, T)>) -> Result<Self, KernelError> {
        if knots.is_empty() {
            return Err(KernelError::InvalidRate("rate table is empty".into()));
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(KernelError::InvalidRate("rate table abscissae must be strictly increasing".into()));
            }
        }
        if let Some(&(x, v)) = knots.iter().find(|(x, v)| !(x.is_finite() && v.is_finite()) || *v < T::zero()) {
            return Err(KernelError::InvalidKernel(format!("negative or non-finite rate table entry a({x}) = {v}")));
        }
        Ok(Self::from_repr(RateRepr::Tabulated { knots }))
    }

    /// Black-box rate; its envelope is computed by dense sampling.
    pub fn custom(name: impl Into<String>, eval: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        Self::from_repr(RateRepr::Custom { name: name.into(), eval: Arc::new(eval) })
    }

    pub fn with_local_bound_hint(mut self, bound: T) -> Self {
        self.local_bound_hint = Some(bound);
        self
    }

    pub fn with_envelope_samples(mut self, per_unit: usize) -> Self {
        self.envelope_samples_per_unit = per_unit.max(1);
        self
    }

    pub fn family(&self) -> RateFamily {
        match self.repr {
            RateRepr::Power { .. } => RateFamily::Power,
            RateRepr::Constant { .. } => RateFamily::Constant,
            RateRepr::Tabulated { .. } => RateFamily::Tabulated,
            RateRepr::Custom { .. } => RateFamily::Custom,
        }
    }

    pub fn eval(&self, x: T) -> T {
        match &self.repr {
            RateRepr::Power { alpha } => x.powf(*alpha),
            RateRepr::Constant { value } => *value,
            RateRepr::Tabulated { knots } => interpolate(knots, x),
            RateRepr::Custom { eval, .. } => eval(x),
        }
    }

    /// Non-decreasing envelope `c(x) = sup_{0 ≤ y ≤ x} a(y)`.
    ///
    /// Exact for the power, constant and tabulated families; custom rates use
    /// a maximum over a grid of `envelope_samples_per_unit` points per unit
    /// length plus `x` itself.
    pub fn envelope(&self, x: T) -> T {
        let x = x.max(T::zero());
        match &self.repr {
            RateRepr::Power { .. } | RateRepr::Constant { .. } => self.eval(x),
            RateRepr::Tabulated { knots } => knots
                .iter()
                .take_while(|(k, _)| *k <= x)
                .map(|&(_, v)| v)
                .fold(interpolate(knots, x).max(knots[0].1), T::max),
            RateRepr::Custom { eval, .. } => {
                let per = T::from_usize_lossy(self.envelope_samples_per_unit);
                let n = (x * per).floor().to_usize().unwrap_or(0);
                (0..=n)
                    .map(|k| eval(T::from_usize_lossy(k) / per))
                    .fold(eval(x), T::max)
            }
        }
    }
}

fn interpolate<T: Scalar>(knots: &[(T, T)], x: T) -> T {
    let first = knots[0];
    let last = knots[knots.len() - 1];
    if x <= first.0 {
        return first.1;
    }
    if x >= last.0 {
        return last.1;
    }
    let i = knots.partition_point(|(k, _)| *k <= x);
    let (x0, y0) = knots[i - 1];
    let (x1, y1) = knots[i];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    /// `b(x,y) = (1/y)(ν+2)(x/y)^ν`.
    HomogeneousPower,
    /// `b(x,y) = (1/y)h(x/y)` with `h` piecewise linear on `[0,1]`.
    HomogeneousTabulated,
    /// Binary fragmentation into pieces of size at most 1 and at least `y−1`.
    BoundaryBinary,
    /// Fragments concentrated on `[0,1/y] ∪ [y−1/y, y]` with density `y`.
    Concentrated,
    Zero,
    Custom,
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelFamily::HomogeneousPower => "homogeneous_power",
            KernelFamily::HomogeneousTabulated => "homogeneous_tabulated",
            KernelFamily::BoundaryBinary => "boundary_binary",
            KernelFamily::Concentrated => "concentrated",
            KernelFamily::Zero => "zero",
            KernelFamily::Custom => "custom",
        })
    }
}

#[derive(Clone)]
enum KernelRepr<T> {
    HomogeneousPower { nu: T },
    HomogeneousTabulated { profile: Vec<(T, T)> },
    BoundaryBinary,
    Concentrated,
    Zero,
    Custom { name: String, eval: KernelFn<T>, breakpoints: Option<BreakpointFn<T>> },
}

/// Daughter distribution `b(x,y) ≥ 0` with `b(x,y) = 0` for `x > y`.
#[derive(Clone)]
pub struct FragmentKernel<T> {
    repr: KernelRepr<T>,
}

impl<T: Scalar> fmt::Debug for FragmentKernel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            KernelRepr::HomogeneousPower { nu } => write!(f, "FragmentKernel::HomogeneousPower(nu = {nu})"),
            KernelRepr::HomogeneousTabulated { profile } => {
                write!(f, "FragmentKernel::HomogeneousTabulated({} knots)", profile.len())
            }
            KernelRepr::BoundaryBinary => write!(f, "FragmentKernel::BoundaryBinary"),
            KernelRepr::Concentrated => write!(f, "FragmentKernel::Concentrated"),
            KernelRepr::Zero => write!(f, "FragmentKernel::Zero"),
            KernelRepr::Custom { name, .. } => write!(f, "FragmentKernel::Custom({name})"),
        }
    }
}

impl<T: Scalar> FragmentKernel<T> {
    /// Homogeneous kernel with profile `h(z) = (ν+2)z^ν`; requires `ν > −2`.
    pub fn homogeneous_power(nu: T) -> Result<Self, KernelError> {
        if !(nu > -T::two() && nu.is_finite()) {
            return Err(KernelError::InvalidKernel(format!("homogeneous exponent must satisfy nu > -2, got {nu}")));
        }
        Ok(Self { repr: KernelRepr::HomogeneousPower { nu } })
    }

    /// Homogeneous kernel whose profile `h` is the piecewise-linear
    /// interpolant of `(z, h(z))` knots in `[0,1]` (zero outside the knots).
    pub fn homogeneous_tabulated(profile: Vec<(T, T)>) -> Result<Self, KernelError> {
        if profile.len() < 2 {
            return Err(KernelError::InvalidKernel("kernel profile table needs at least two (z, h) pairs".into()));
        }
        for w in profile.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(KernelError::InvalidKernel("kernel profile abscissae must be strictly increasing".into()));
            }
        }
        for &(z, h) in &profile {
            if !(z >= T::zero() && z <= T::one()) {
                return Err(KernelError::InvalidKernel(format!("kernel profile abscissa {z} outside [0,1]")));
            }
            if !(h >= T::zero() && h.is_finite()) {
                return Err(KernelError::InvalidKernel(format!("negative or non-finite profile value h({z}) = {h}")));
            }
        }
        Ok(Self { repr: KernelRepr::HomogeneousTabulated { profile } })
    }

    pub fn boundary_binary() -> Self {
        Self { repr: KernelRepr::BoundaryBinary }
    }

    pub fn concentrated() -> Self {
        Self { repr: KernelRepr::Concentrated }
    }

    pub fn zero() -> Self {
        Self { repr: KernelRepr::Zero }
    }

    /// Black-box kernel. The support rule `b = 0` for `x > y` is enforced by
    /// [`FragmentKernel::eval`] regardless of what `eval` returns there.
    pub fn custom(name: impl Into<String>, eval: impl Fn(T, T) -> T + Send + Sync + 'static) -> Self {
        Self { repr: KernelRepr::Custom { name: name.into(), eval: Arc::new(eval), breakpoints: None } }
    }

    /// Registers the discontinuities of a custom kernel in `x` for parent `y`.
    pub fn with_breakpoints(mut self, f: impl Fn(T) -> Vec<T> + Send + Sync + 'static) -> Self {
        if let KernelRepr::Custom { breakpoints, .. } = &mut self.repr {
            *breakpoints = Some(Arc::new(f));
        }
        self
    }

    pub fn family(&self) -> KernelFamily {
        match self.repr {
            KernelRepr::HomogeneousPower { .. } => KernelFamily::HomogeneousPower,
            KernelRepr::HomogeneousTabulated { .. } => KernelFamily::HomogeneousTabulated,
            KernelRepr::BoundaryBinary => KernelFamily::BoundaryBinary,
            KernelRepr::Concentrated => KernelFamily::Concentrated,
            KernelRepr::Zero => KernelFamily::Zero,
            KernelRepr::Custom { .. } => KernelFamily::Custom,
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        matches!(self.family(), KernelFamily::HomogeneousPower | KernelFamily::HomogeneousTabulated | KernelFamily::Zero)
    }

    /// Homogeneous exponent `ν`, when the kernel is of power form.
    pub fn nu(&self) -> Option<T> {
        match self.repr {
            KernelRepr::HomogeneousPower { nu } => Some(nu),
            _ => None,
        }
    }

    /// `b(x,y)` for `x, y > 0`. Intervals listed closed in the family
    /// definitions are evaluated closed; `x = y` belongs to the support.
    pub fn eval(&self, x: T, y: T) -> T {
        if x > y {
            return T::zero();
        }
        match &self.repr {
            KernelRepr::HomogeneousPower { nu } => (*nu + T::two()) * (x / y).powf(*nu) / y,
            KernelRepr::HomogeneousTabulated { profile } => {
                let z = x / y;
                if z < profile[0].0 || z > profile[profile.len() - 1].0 {
                    T::zero()
                } else {
                    interpolate(profile, z) / y
                }
            }
            KernelRepr::BoundaryBinary => {
                if y <= T::two() {
                    T::two() / y
                } else if x <= T::one() || x >= y - T::one() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            KernelRepr::Concentrated => {
                if y <= T::SQRT_2() {
                    T::two() / y
                } else if x <= y.recip() || x >= y - y.recip() {
                    y
                } else {
                    T::zero()
                }
            }
            KernelRepr::Zero => T::zero(),
            KernelRepr::Custom { eval, .. } => eval(x, y),
        }
    }

    /// `log b(x,y)`, `-inf` where the kernel vanishes.
    pub fn log_eval(&self, x: T, y: T) -> T {
        if x > y {
            return T::neg_infinity();
        }
        match &self.repr {
            KernelRepr::HomogeneousPower { nu } => (*nu + T::two()).ln() + *nu * (x / y).ln() - y.ln(),
            _ => {
                let v = self.eval(x, y);
                if v > T::zero() {
                    v.ln()
                } else if v == T::zero() {
                    T::neg_infinity()
                } else {
                    T::nan()
                }
            }
        }
    }

    /// Discontinuities of `x ↦ b(x,y)` inside `(0, y)`.
    pub fn breakpoints(&self, y: T) -> Vec<T> {
        match &self.repr {
            KernelRepr::BoundaryBinary if y > T::two() => vec![T::one(), y - T::one()],
            KernelRepr::Concentrated if y > T::SQRT_2() => vec![y.recip(), y - y.recip()],
            KernelRepr::HomogeneousTabulated { profile } => profile.iter().map(|&(z, _)| z * y).collect(),
            KernelRepr::Custom { breakpoints: Some(f), .. } => f(y),
            _ => Vec::new(),
        }
    }

    /// `∫₀¹ h(z) z dz` for homogeneous kernels (so `m(y) = y·moment`).
    fn homogeneous_mass_moment(&self) -> Option<T> {
        match &self.repr {
            KernelRepr::HomogeneousPower { .. } => Some(T::one()),
            KernelRepr::HomogeneousTabulated { profile } => Some(
                profile
                    .windows(2)
                    .map(|w| {
                        let (z0, h0) = w[0];
                        let (z1, h1) = w[1];
                        // ∫ (h0 + s(z − z0)) z dz over [z0, z1], s the slope.
                        let s = (h1 - h0) / (z1 - z0);
                        let c = h0 - s * z0;
                        let three = T::lit(3.0);
                        c * (z1 * z1 - z0 * z0) / T::two() + s * (z1 * z1 * z1 - z0 * z0 * z0) / three
                    })
                    .fold(T::zero(), |a, b| a + b),
            ),
            KernelRepr::Zero => Some(T::zero()),
            _ => None,
        }
    }
}

/// `m(y) = ∫₀^y b(x,y) x dx` together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassValue<T> {
    pub value: T,
    /// True when a hard-coded closed form was used.
    pub exact: bool,
    pub relative_error: T,
}

/// Mass of the fragments of a size-`y` parent.
pub fn mass_integral<T: Scalar>(
    kernel: &FragmentKernel<T>,
    y: T,
    spec: &QuadratureSpec<T>,
) -> Result<MassValue<T>, KernelError> {
    if !(y > T::zero() && y.is_finite()) {
        return Err(KernelError::InvalidArgument(format!("mass integral needs y > 0, got {y}")));
    }
    if spec.use_closed_forms {
        let closed = match kernel.family() {
            KernelFamily::BoundaryBinary | KernelFamily::Concentrated => Some(y),
            _ => kernel.homogeneous_mass_moment().map(|m| m * y),
        };
        if let Some(value) = closed {
            return Ok(MassValue { value, exact: true, relative_error: T::zero() });
        }
    }
    partial_mass(kernel, y, y, spec).map(|r| MassValue { value: r.0, exact: false, relative_error: r.1 })
}

/// `∫₀^{min(upper,y)} b(x,y) x dx` by quadrature; returns value and
/// relative error estimate.
pub fn partial_mass<T: Scalar>(
    kernel: &FragmentKernel<T>,
    upper: T,
    y: T,
    spec: &QuadratureSpec<T>,
) -> Result<(T, T), KernelError> {
    let top = upper.min(y);
    let r = integrate_log(|x| kernel.log_eval(x, y) + x.ln(), T::zero(), top, &kernel.breakpoints(y), spec)?;
    Ok((r.value(), r.relative_error()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MassClass {
    Conserving,
    SubConserving,
    Violating,
}

impl fmt::Display for MassClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MassClass::Conserving => "conserving",
            MassClass::SubConserving => "sub_conserving",
            MassClass::Violating => "violating",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassSample<T> {
    pub y: T,
    /// `m(y)`, or `None` when the quadrature failed at this sample.
    pub mass: Option<T>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassReport<T> {
    pub samples: Vec<MassSample<T>>,
    pub classification: MassClass,
    /// `max m(y)/y − 1` over successful samples.
    pub max_excess: T,
    pub tol: T,
}

impl<T: Scalar> MassReport<T> {
    pub fn failed_samples(&self) -> usize {
        self.samples.iter().filter(|s| s.mass.is_none()).count()
    }
}

/// Classifies `b` as mass conserving, sub-conserving or violating on the
/// sampled parent sizes. Failed samples are recorded and excluded.
pub fn classify_mass<T: Scalar>(
    kernel: &FragmentKernel<T>,
    y_samples: &[T],
    tol: T,
    spec: &QuadratureSpec<T>,
) -> Result<MassReport<T>, KernelError> {
    if y_samples.is_empty() {
        return Err(KernelError::InvalidArgument("mass classification needs at least one sample".into()));
    }
    if let Some(y) = y_samples.iter().find(|y| !(**y > T::zero() && y.is_finite())) {
        return Err(KernelError::InvalidArgument(format!("sample sizes must be positive, got {y}")));
    }
    let samples: Vec<MassSample<T>> = y_samples
        .iter()
        .map(|&y| match mass_integral(kernel, y, spec) {
            Ok(m) => MassSample { y, mass: Some(m.value), failure: None },
            Err(e) => MassSample { y, mass: None, failure: Some(e.to_string()) },
        })
        .collect();
    let ratios: Vec<T> = samples.iter().filter_map(|s| s.mass.map(|m| m / s.y)).collect();
    let max_excess = ratios.iter().map(|&r| r - T::one()).fold(T::neg_infinity(), T::max);
    let classification = if ratios.iter().any(|&r| r > T::one() + tol) {
        MassClass::Violating
    } else if ratios.iter().all(|&r| (r - T::one()).abs() <= tol) {
        MassClass::Conserving
    } else {
        MassClass::SubConserving
    };
    Ok(MassReport { samples, classification, max_excess, tol })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> QuadratureSpec<f64> {
        QuadratureSpec::default()
    }

    #[test]
    fn rate_examples() {
        assert_eq!(RateFunction::power(1.0).unwrap().eval(3.0), 3.0);
        assert_eq!(RateFunction::power(0.0).unwrap().eval(7.0), 1.0);
        let t = RateFunction::tabulated(vec![(0.0, 0.0), (2.0, 4.0)]).unwrap();
        assert_eq!(t.eval(1.0), 2.0);
    }

    #[test]
    fn negative_rate_table_is_rejected() {
        let e = RateFunction::tabulated(vec![(0.0, 1.0), (1.0, -2.0)]).unwrap_err();
        assert!(matches!(e, KernelError::InvalidKernel(_)));
        assert!(RateFunction::<f64>::tabulated(vec![]).is_err());
    }

    #[test]
    fn envelope_examples() {
        assert_eq!(RateFunction::power(2.0).unwrap().envelope(3.0), 9.0);
        let t = RateFunction::tabulated(vec![(0.0, 5.0), (1.0, 1.0), (2.0, 3.0)]).unwrap();
        assert_eq!(t.envelope(1.5), 5.0);
        assert_eq!(RateFunction::constant(4.0).unwrap().envelope(123.0), 4.0);
    }

    #[test]
    fn custom_envelope_uses_dense_samples() {
        let r = RateFunction::custom("bump", |x: f64| (-(x - 1.0) * (x - 1.0) * 50.0).exp());
        assert!((r.envelope(3.0) - 1.0).abs() < 1e-12);
        assert!(r.envelope(0.5) < 1e-5);
    }

    #[test]
    fn kernel_examples() {
        let bb = FragmentKernel::<f64>::boundary_binary();
        assert_eq!(bb.eval(0.5, 5.0), 1.0);
        assert_eq!(bb.eval(2.5, 5.0), 0.0);
        assert_eq!(bb.eval(1.0, 1.5), 2.0 / 1.5);
        let c = FragmentKernel::<f64>::concentrated();
        assert_eq!(c.eval(3.9, 4.0), 4.0);
        assert_eq!(c.eval(2.0, 4.0), 0.0);
        assert_eq!(c.eval(0.2, 4.0), 4.0);
        assert_eq!(c.eval(1.0, 1.2), 2.0 / 1.2);
        let h = FragmentKernel::homogeneous_power(0.0).unwrap();
        assert_eq!(h.eval(1.0, 4.0), 0.5);
        assert_eq!(h.eval(5.0, 4.0), 0.0);
    }

    #[test]
    fn breakpoint_values_follow_closed_intervals() {
        let bb = FragmentKernel::<f64>::boundary_binary();
        assert_eq!(bb.eval(1.0, 5.0), 1.0);
        assert_eq!(bb.eval(4.0, 5.0), 1.0);
        assert_eq!(bb.breakpoints(5.0), vec![1.0, 4.0]);
        assert!(bb.breakpoints(1.5).is_empty());
    }

    #[test]
    fn invalid_kernels() {
        assert!(FragmentKernel::homogeneous_power(-2.0).is_err());
        assert!(FragmentKernel::<f64>::homogeneous_tabulated(vec![]).is_err());
        assert!(FragmentKernel::homogeneous_tabulated(vec![(0.0, 1.0), (1.0, -1.0)]).is_err());
    }

    #[test]
    fn mass_integral_examples() {
        let bb = FragmentKernel::boundary_binary();
        let m = mass_integral(&bb, 5.0, &spec()).unwrap();
        assert_eq!(m.value, 5.0);
        assert!(m.exact);
        let m = mass_integral(&bb, 5.0, &spec().numerical_only()).unwrap();
        assert!((m.value - 5.0).abs() < 1e-9);
        let h = FragmentKernel::homogeneous_power(-1.0).unwrap();
        let m = mass_integral(&h, 2.0, &spec().numerical_only()).unwrap();
        assert!((m.value - 2.0).abs() < 1e-9);
        let z = FragmentKernel::<f64>::zero();
        assert_eq!(mass_integral(&z, 3.0, &spec().numerical_only()).unwrap().value, 0.0);
        assert_eq!(mass_integral(&z, 3.0, &spec()).unwrap().value, 0.0);
    }

    #[test]
    fn concentrated_mass_numerically() {
        let c = FragmentKernel::concentrated();
        for y in [1.2, 2.0, 7.5] {
            let m = mass_integral(&c, y, &spec().numerical_only()).unwrap();
            assert!((m.value / y - 1.0).abs() < 1e-9, "y={y}");
        }
    }

    #[test]
    fn tabulated_profile_closed_form_matches_quadrature() {
        let k = FragmentKernel::homogeneous_tabulated(vec![(0.0, 0.0), (0.5, 3.0), (1.0, 1.0)]).unwrap();
        let closed = mass_integral(&k, 3.0, &spec()).unwrap().value;
        let quad = mass_integral(&k, 3.0, &spec().numerical_only()).unwrap().value;
        assert!((closed - quad).abs() < 1e-9 * closed);
    }

    #[test]
    fn classify_examples() {
        let r = classify_mass(&FragmentKernel::boundary_binary(), &[3.0, 5.0, 10.0], 1e-8, &spec()).unwrap();
        assert_eq!(r.classification, MassClass::Conserving);
        let h = FragmentKernel::homogeneous_power(-0.5).unwrap();
        let r = classify_mass(&h, &[1.0, 10.0], 1e-8, &spec().numerical_only()).unwrap();
        assert_eq!(r.classification, MassClass::Conserving);
        // b = x/y² has m(y) = y/3.
        let k = FragmentKernel::custom("x/y^2", |x: f64, y: f64| x / (y * y));
        let r = classify_mass(&k, &[1.0, 2.0], 1e-8, &spec()).unwrap();
        assert_eq!(r.classification, MassClass::SubConserving);
        assert!((r.max_excess + 2.0 / 3.0).abs() < 1e-9);
        let k = FragmentKernel::custom("3/y", |_x: f64, y: f64| 3.0 / y);
        let r = classify_mass(&k, &[1.0, 2.0], 1e-8, &spec()).unwrap();
        assert_eq!(r.classification, MassClass::Violating);
    }

    #[test]
    fn classify_rejects_bad_samples() {
        let k = FragmentKernel::<f64>::boundary_binary();
        assert!(classify_mass(&k, &[], 1e-8, &spec()).is_err());
        assert!(classify_mass(&k, &[1.0, -1.0], 1e-8, &spec()).is_err());
    }

    #[test]
    fn quadrature_failures_are_recorded_per_sample() {
        // x^{-2}/y is not integrable against x near zero.
        let k = FragmentKernel::custom("singular", |x: f64, y: f64| 1.0 / (x * x * x * y));
        let r = classify_mass(&k, &[1.0], 1e-8, &spec()).unwrap();
        assert_eq!(r.failed_samples(), 1);
    }
}
