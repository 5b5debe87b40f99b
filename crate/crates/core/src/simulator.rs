//! Truncated-domain discretization and time stepping of the fragmentation
//! equation.
//!
//! Densities live on a geometric size grid with trapezoid weights `w_i`.
//! The generator acts on node densities as
//!
//! ```text
//! du_i/dt = −a_i u_i + Σ_{j>i} G_ij u_j,    G_ij = a_j b(x_i, x_j) w_j
//! ```
//!
//! The trapezoid end term of the gain integral at `x_j = x_i` is excluded
//! so the system stays strictly triangular; its mass is moved onto the
//! neighbouring node below, which keeps the discrete mass identity
//! `Σ_i x_i w_i G_ij + w_j d_j = a_j x_j w_j` exact for kernels that are
//! linear on the grid. Mass carried below `x_min` is booked as dust via
//! `d_j = a_j ∫₀^{x_min} b(x, x_j) x dx`.

use rayon::prelude::*;

use crate::error::SimError;
use crate::kernels::{partial_mass, FragmentKernel, RateFunction};
use crate::quadrature::QuadratureSpec;
use crate::weights::Weight;
use crate::Scalar;

/// Largest system the dense matrix-exponential oracle accepts.
pub const ORACLE_MAX_N: usize = 512;

const MAX_HALVINGS: usize = 30;

fn f64_of<T: Scalar>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    pub nodes: Vec<T>,
    /// Trapezoid weights; they sum to `x_max − x_min`.
    pub weights: Vec<T>,
    pub dust_cutoff: T,
}

impl<T: Scalar> Grid<T> {
    /// `n` nodes from `x_min` to `x_max` with constant ratio.
    pub fn geometric(x_min: T, x_max: T, n: usize) -> Result<Self, SimError> {
        if !(x_min > T::zero() && x_max > x_min && x_max.is_finite()) {
            return Err(SimError::InvalidGrid(format!("need 0 < x_min < x_max < inf, got [{x_min}, {x_max}]")));
        }
        if n < 2 {
            return Err(SimError::InvalidGrid(format!("need at least 2 nodes, got {n}")));
        }
        let log_q = (x_max / x_min).ln() / T::from_usize_lossy(n - 1);
        let nodes = (0..n)
            .map(|i| match i {
                0 => x_min,
                _ if i == n - 1 => x_max,
                _ => x_min * (log_q * T::from_usize_lossy(i)).exp(),
            })
            .collect();
        Self::from_nodes(nodes)
    }

    /// Arbitrary strictly increasing positive nodes.
    pub fn from_nodes(nodes: Vec<T>) -> Result<Self, SimError> {
        let n = nodes.len();
        if n < 2 {
            return Err(SimError::InvalidGrid(format!("need at least 2 nodes, got {n}")));
        }
        if !(nodes[0] > T::zero()) || nodes.windows(2).any(|w| !(w[1] > w[0])) || !nodes[n - 1].is_finite() {
            return Err(SimError::InvalidGrid("nodes must be positive, finite and strictly increasing".into()));
        }
        let weights = (0..n)
            .map(|i| {
                let lo = if i == 0 { nodes[0] } else { nodes[i - 1] };
                let hi = if i == n - 1 { nodes[n - 1] } else { nodes[i + 1] };
                T::half() * (hi - lo)
            })
            .collect();
        Ok(Self { dust_cutoff: nodes[0], nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn x_min(&self) -> T {
        self.nodes[0]
    }

    pub fn x_max(&self) -> T {
        self.nodes[self.nodes.len() - 1]
    }
}

/// Discrete generator on a grid: loss diagonal, strictly upper-triangular
/// gain (row = daughter, column = parent) and dust row.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteGenerator<T> {
    pub grid: Grid<T>,
    pub loss: Vec<T>,
    /// Row-major `N × N`; entries with `i ≥ j` are zero.
    pub gain: Vec<T>,
    pub dust: Vec<T>,
}

impl<T: Scalar> DiscreteGenerator<T> {
    /// Assembles a generator from raw parts, checking shape, sign and
    /// strict triangularity.
    pub fn from_parts(grid: Grid<T>, loss: Vec<T>, gain: Vec<T>, dust: Vec<T>) -> Result<Self, SimError> {
        let n = grid.len();
        if loss.len() != n || dust.len() != n || gain.len() != n * n {
            return Err(SimError::InvalidInput("generator parts do not match the grid size".into()));
        }
        let nonneg = |v: &T| *v >= T::zero() && v.is_finite();
        if !loss.iter().all(nonneg) || !dust.iter().all(nonneg) || !gain.iter().all(nonneg) {
            return Err(SimError::InvalidInput("generator entries must be finite and >= 0".into()));
        }
        for i in 0..n {
            for j in 0..=i {
                if gain[i * n + j] != T::zero() {
                    return Err(SimError::InvalidInput(format!("gain entry ({i}, {j}) must be zero")));
                }
            }
        }
        Ok(Self { grid, loss, gain, dust })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    #[inline]
    pub fn gain_at(&self, i: usize, j: usize) -> T {
        self.gain[i * self.len() + j]
    }

    /// `|Σ_i x_i w_i G_ij + w_j d_j − a_j x_j w_j| / (a_j x_j w_j)` per
    /// column; `None` where `a_j = 0`.
    pub fn column_mass_defect(&self) -> Vec<Option<T>> {
        let n = self.len();
        let (x, w) = (&self.grid.nodes, &self.grid.weights);
        (0..n)
            .map(|j| {
                let out = self.loss[j] * x[j] * w[j];
                if out <= T::zero() {
                    return None;
                }
                let back = (0..j).fold(w[j] * self.dust[j], |acc, i| acc + x[i] * w[i] * self.gain_at(i, j));
                Some((back - out).abs() / out)
            })
            .collect()
    }

    /// `Σ_i w_i ω_i G_ij / (a_j w_j ω_j)` per column: the discrete
    /// counterpart of `n_ω/ω`. `None` where `a_j = 0`.
    pub fn column_weighted_ratio(&self, weight: &Weight<T>) -> Result<Vec<Option<T>>, SimError> {
        let n = self.len();
        let w = &self.grid.weights;
        let om = weight_values(weight, &self.grid)?;
        Ok((0..n)
            .map(|j| {
                let out = self.loss[j] * w[j] * om[j];
                if out <= T::zero() {
                    return None;
                }
                Some((0..j).fold(T::zero(), |acc, i| acc + w[i] * om[i] * self.gain_at(i, j)) / out)
            })
            .collect())
    }

    /// `(G u)_i` including the loss term.
    fn apply(&self, u: &[T], out: &mut [T]) {
        let n = self.len();
        for i in 0..n {
            let row = &self.gain[i * n..(i + 1) * n];
            let mut acc = -self.loss[i] * u[i];
            for j in i + 1..n {
                acc += row[j] * u[j];
            }
            out[i] = acc;
        }
    }

    fn dust_rate(&self, u: &[T]) -> T {
        let w = &self.grid.weights;
        (0..self.len()).fold(T::zero(), |acc, j| acc + w[j] * self.dust[j] * u[j])
    }
}

fn weight_values<T: Scalar>(weight: &Weight<T>, grid: &Grid<T>) -> Result<Vec<T>, SimError> {
    grid.nodes.iter().map(|&x| weight.eval(x).map_err(SimError::from)).collect()
}

/// Builds the generator for `(b, a)` on `grid`; columns are assembled in
/// parallel.
pub fn discretize<T: Scalar>(
    kernel: &FragmentKernel<T>,
    rate: &RateFunction<T>,
    grid: &Grid<T>,
    spec: &QuadratureSpec<T>,
) -> Result<DiscreteGenerator<T>, SimError> {
    let n = grid.len();
    let (x, w) = (&grid.nodes, &grid.weights);
    let loss: Vec<T> = x.iter().map(|&xi| rate.eval(xi)).collect();
    if let Some(i) = loss.iter().position(|a| !(*a >= T::zero() && a.is_finite())) {
        return Err(SimError::InvalidInput(format!("rate a({}) = {} is not finite and >= 0", x[i], loss[i])));
    }
    let columns: Vec<(Vec<T>, T)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut col = vec![T::zero(); j];
            let a = loss[j];
            if a == T::zero() || kernel.family() == crate::kernels::KernelFamily::Zero {
                return Ok((col, T::zero()));
            }
            for (i, c) in col.iter_mut().enumerate() {
                *c = a * kernel.eval(x[i], x[j]) * w[j];
            }
            if j > 0 {
                let end = T::half() * (x[j] - x[j - 1]) * kernel.eval(x[j], x[j]) * x[j];
                col[j - 1] += a * w[j] * end / (w[j - 1] * x[j - 1]);
            }
            let (below, _) = partial_mass(kernel, grid.dust_cutoff, x[j], spec)?;
            if col.iter().any(|v| !v.is_finite()) || !below.is_finite() {
                return Err(SimError::InvalidInput(format!("kernel is not finite on the grid column x = {}", x[j])));
            }
            Ok((col, a * below))
        })
        .collect::<Result<_, SimError>>()?;
    let mut gain = vec![T::zero(); n * n];
    let mut dust = vec![T::zero(); n];
    for (j, (col, d)) in columns.into_iter().enumerate() {
        for (i, v) in col.into_iter().enumerate() {
            gain[i * n + j] = v;
        }
        dust[j] = d;
    }
    DiscreteGenerator::from_parts(grid.clone(), loss, gain, dust)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityState<T> {
    pub u: Vec<T>,
    pub t: T,
    pub dust_mass: T,
}

impl<T: Scalar> DensityState<T> {
    pub fn new(u: Vec<T>) -> Self {
        Self { u, t: T::zero(), dust_mass: T::zero() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    ImplicitEuler,
    Rk4,
}

impl std::str::FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "implicit_euler" => Ok(Scheme::ImplicitEuler),
            "rk4" => Ok(Scheme::Rk4),
            other => Err(format!("unknown scheme `{other}` (expected implicit_euler or rk4)")),
        }
    }
}

fn check_state<T: Scalar>(gen: &DiscreteGenerator<T>, state: &DensityState<T>) -> Result<(), SimError> {
    if state.u.len() != gen.len() {
        return Err(SimError::InvalidInput(format!("state has {} values, grid has {}", state.u.len(), gen.len())));
    }
    if state.u.iter().any(|v| !(v.is_finite())) {
        return Err(SimError::InvalidInput("state contains non-finite values".into()));
    }
    Ok(())
}

fn implicit_euler<T: Scalar>(gen: &DiscreteGenerator<T>, state: &DensityState<T>, dt: T) -> DensityState<T> {
    let n = gen.len();
    let mut u = state.u.clone();
    for i in (0..n).rev() {
        let row = &gen.gain[i * n..(i + 1) * n];
        let mut acc = T::zero();
        for j in i + 1..n {
            acc += row[j] * u[j];
        }
        u[i] = (u[i] + dt * acc) / (T::one() + dt * gen.loss[i]);
    }
    let dust_mass = state.dust_mass + dt * gen.dust_rate(&u);
    DensityState { u, t: state.t + dt, dust_mass }
}

fn rk4_raw<T: Scalar>(gen: &DiscreteGenerator<T>, state: &DensityState<T>, dt: T) -> DensityState<T> {
    let n = gen.len();
    let u0 = &state.u;
    let mut k = [vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]];
    let mut r = [T::zero(); 4];
    let mut tmp = vec![T::zero(); n];
    let coef = [T::zero(), T::half(), T::half(), T::one()];
    for s in 0..4 {
        if s == 0 {
            tmp.copy_from_slice(u0);
        } else {
            for i in 0..n {
                tmp[i] = u0[i] + coef[s] * dt * k[s - 1][i];
            }
        }
        r[s] = gen.dust_rate(&tmp);
        gen.apply(&tmp, &mut k[s]);
    }
    let sixth = T::one() / T::lit(6.0);
    let u = (0..n)
        .map(|i| u0[i] + dt * sixth * (k[0][i] + T::two() * (k[1][i] + k[2][i]) + k[3][i]))
        .collect();
    let dust_mass = state.dust_mass + dt * sixth * (r[0] + T::two() * (r[1] + r[2]) + r[3]);
    DensityState { u, t: state.t + dt, dust_mass }
}

fn acceptably_positive<T: Scalar>(u: &[T]) -> bool {
    let max = u.iter().copied().fold(T::zero(), T::max);
    let floor = -T::lit(1e-14) * max;
    u.iter().all(|&v| v >= floor)
}

fn rk4_checked<T: Scalar>(gen: &DiscreteGenerator<T>, state: &DensityState<T>, dt: T) -> Result<DensityState<T>, SimError> {
    let mut pieces = 1usize;
    for halvings in 0..=MAX_HALVINGS {
        let h = dt / T::from_usize_lossy(pieces);
        let mut s = state.clone();
        let mut ok = true;
        for _ in 0..pieces {
            s = rk4_raw(gen, &s, h);
            if !acceptably_positive(&s.u) {
                ok = false;
                break;
            }
        }
        if ok {
            s.t = state.t + dt;
            return Ok(s);
        }
        if halvings == MAX_HALVINGS {
            break;
        }
        pieces *= 2;
    }
    Err(SimError::Stiff { halvings: MAX_HALVINGS, t: f64_of(state.t) })
}

/// Advances `state` by `dt`. Implicit Euler solves `(I − dt·G) u⁺ = u` by
/// back substitution from the largest size; rk4 rejects negative results
/// and retries with halved sub-steps.
pub fn step<T: Scalar>(
    state: &DensityState<T>,
    gen: &DiscreteGenerator<T>,
    dt: T,
    scheme: Scheme,
) -> Result<DensityState<T>, SimError> {
    check_state(gen, state)?;
    if !(dt >= T::zero() && dt.is_finite()) {
        return Err(SimError::InvalidInput(format!("dt must be finite and >= 0, got {dt}")));
    }
    if dt == T::zero() {
        return Ok(state.clone());
    }
    match scheme {
        Scheme::ImplicitEuler => Ok(implicit_euler(gen, state, dt)),
        Scheme::Rk4 => rk4_checked(gen, state, dt),
    }
}

/// Observables at one sample time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample<T> {
    pub t: T,
    pub m0: T,
    pub m1: T,
    pub norm_omega: T,
    pub dust_mass: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub samples: Vec<TrajectorySample<T>>,
    pub final_state: DensityState<T>,
    pub steps: usize,
    pub dt: T,
    /// Min over accepted steps of `min_i u_i / max_i u_i`.
    pub min_density_ratio: T,
    /// Max over steps of `(‖u_{k+1}‖_ω − ‖u_k‖_ω) / ‖u_k‖_ω`.
    pub max_norm_increase: T,
    /// `false` if any step decreased the dust mass.
    pub dust_monotone: bool,
}

impl<T: Scalar> Trajectory<T> {
    /// Max over samples of `|M₁ + dust − M₁(0)| / M₁(0)`.
    pub fn max_mass_defect(&self) -> T {
        let m = self.samples[0].m1 + self.samples[0].dust_mass;
        self.samples
            .iter()
            .map(|s| ((s.m1 + s.dust_mass - m) / m).abs())
            .fold(T::zero(), T::max)
    }
}

/// Observables `M₀, M₁, ‖u‖_ω` of a state.
pub fn observables<T: Scalar>(grid: &Grid<T>, omega: &[T], state: &DensityState<T>) -> TrajectorySample<T> {
    let (mut m0, mut m1, mut nw) = (T::zero(), T::zero(), T::zero());
    for i in 0..grid.len() {
        let wu = grid.weights[i] * state.u[i];
        m0 += wu;
        m1 += wu * grid.nodes[i];
        nw += wu * omega[i];
    }
    TrajectorySample { t: state.t, m0, m1, norm_omega: nw, dust_mass: state.dust_mass }
}

fn weighted_abs_norm<T: Scalar>(grid: &Grid<T>, omega: &[T], u: &[T]) -> T {
    (0..grid.len()).fold(T::zero(), |acc, i| acc + grid.weights[i] * omega[i] * u[i].abs())
}

/// Runs `ceil(t_end/dt)` equal steps ending exactly at `t_end`, sampling
/// every `sample_every` steps and at the end.
pub fn simulate<T: Scalar>(
    u0: &[T],
    gen: &DiscreteGenerator<T>,
    t_end: T,
    dt: T,
    scheme: Scheme,
    weight: &Weight<T>,
    sample_every: usize,
) -> Result<Trajectory<T>, SimError> {
    if u0.iter().any(|v| !(*v >= T::zero())) {
        return Err(SimError::InvalidInput("initial density must be >= 0 on the grid".into()));
    }
    if !(t_end >= T::zero() && t_end.is_finite() && dt > T::zero() && dt.is_finite()) {
        return Err(SimError::InvalidInput(format!("need t_end >= 0 and dt > 0, got {t_end}, {dt}")));
    }
    let state = DensityState::new(u0.to_vec());
    check_state(gen, &state)?;
    let omega = weight_values(weight, &gen.grid)?;
    let steps = (t_end / dt)
        .ceil()
        .to_usize()
        .filter(|&s| s < 1 << 32)
        .ok_or_else(|| SimError::InvalidInput("too many time steps".into()))?;
    let h = if steps == 0 { T::zero() } else { t_end / T::from_usize_lossy(steps) };
    let every = sample_every.max(1);

    let mut samples = vec![observables(&gen.grid, &omega, &state)];
    let mut cur = state;
    let mut min_ratio = T::infinity();
    let mut max_increase = T::neg_infinity();
    let mut dust_monotone = true;
    let mut norm = samples[0].norm_omega;
    let mut prev_dust = T::zero();
    for k in 1..=steps {
        cur = step(&cur, gen, h, scheme)?;
        cur.t = if k == steps { t_end } else { h * T::from_usize_lossy(k) };
        let max = cur.u.iter().copied().fold(T::zero(), T::max);
        let min = cur.u.iter().copied().fold(T::infinity(), T::min);
        if max > T::zero() {
            min_ratio = min_ratio.min(min / max);
        }
        let new_norm = weighted_abs_norm(&gen.grid, &omega, &cur.u);
        if norm > T::zero() {
            max_increase = max_increase.max((new_norm - norm) / norm);
        }
        dust_monotone &= cur.dust_mass >= prev_dust;
        prev_dust = cur.dust_mass;
        norm = new_norm;
        if k % every == 0 || k == steps {
            samples.push(observables(&gen.grid, &omega, &cur));
        }
    }
    if min_ratio == T::infinity() {
        min_ratio = T::zero();
    }
    if max_increase == T::neg_infinity() {
        max_increase = T::zero();
    }
    Ok(Trajectory { samples, final_state: cur, steps, dt: h, min_density_ratio: min_ratio, max_norm_increase: max_increase, dust_monotone })
}

/// Built-in initial densities.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition<T> {
    /// `1` on `[lo, hi]`, `0` elsewhere.
    Bump { lo: T, hi: T },
    /// `exp(−x/scale)`.
    ExpDecay { scale: T },
    /// Linear interpolation of `(x, u)` pairs, `0` outside the table.
    Table(Vec<(T, T)>),
}

impl<T: Scalar> InitialCondition<T> {
    pub fn sample(&self, grid: &Grid<T>) -> Result<Vec<T>, SimError> {
        match self {
            InitialCondition::Bump { lo, hi } => {
                if !(lo < hi) {
                    return Err(SimError::InvalidInput(format!("bump needs lo < hi, got [{lo}, {hi}]")));
                }
                Ok(grid.nodes.iter().map(|&x| if x >= *lo && x <= *hi { T::one() } else { T::zero() }).collect())
            }
            InitialCondition::ExpDecay { scale } => {
                if !(*scale > T::zero()) {
                    return Err(SimError::InvalidInput(format!("exp_decay scale must be > 0, got {scale}")));
                }
                Ok(grid.nodes.iter().map(|&x| (-x / *scale).exp()).collect())
            }
            InitialCondition::Table(points) => {
                if points.len() < 2 || points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(SimError::InvalidInput("initial table needs >= 2 strictly increasing x values".into()));
                }
                if points.iter().any(|p| !(p.1 >= T::zero())) {
                    return Err(SimError::InvalidInput("initial table values must be >= 0".into()));
                }
                Ok(grid
                    .nodes
                    .iter()
                    .map(|&x| {
                        let k = points.partition_point(|p| p.0 <= x);
                        if k == 0 || (k == points.len() && x > points[k - 1].0) {
                            return T::zero();
                        }
                        if k == points.len() {
                            return points[k - 1].1;
                        }
                        let (a, b) = (points[k - 1], points[k]);
                        a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
                    })
                    .collect())
            }
        }
    }
}

fn matmul<T: Scalar>(a: &[T], b: &[T], n: usize) -> Vec<T> {
    let mut c = vec![T::zero(); n * n];
    c.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == T::zero() {
                continue;
            }
            let bk = &b[k * n..(k + 1) * n];
            for (r, &v) in row.iter_mut().zip(bk) {
                *r += aik * v;
            }
        }
    });
    c
}

/// `exp(t·A)` of the generator augmented with the dust row, applied to
/// `(u₀, 0)`, by Taylor expansion with scaling and squaring.
pub fn expm_oracle<T: Scalar>(gen: &DiscreteGenerator<T>, t: T, u0: &[T]) -> Result<DensityState<T>, SimError> {
    let n = gen.len();
    if n > ORACLE_MAX_N {
        return Err(SimError::TooLarge { n, limit: ORACLE_MAX_N });
    }
    if u0.len() != n {
        return Err(SimError::InvalidInput(format!("state has {} values, grid has {n}", u0.len())));
    }
    if !(t >= T::zero() && t.is_finite()) {
        return Err(SimError::InvalidInput(format!("t must be finite and >= 0, got {t}")));
    }
    let m = n + 1;
    let mut a = vec![T::zero(); m * m];
    for i in 0..n {
        a[i * m + i] = -gen.loss[i] * t;
        for j in i + 1..n {
            a[i * m + j] = gen.gain_at(i, j) * t;
        }
        a[n * m + i] = gen.grid.weights[i] * gen.dust[i] * t;
    }
    let norm = (0..m)
        .map(|j| (0..m).fold(T::zero(), |acc, i| acc + a[i * m + j].abs()))
        .fold(T::zero(), T::max);
    let mut squarings = 0usize;
    let mut scale = T::one();
    while norm * scale > T::half() {
        scale *= T::half();
        squarings += 1;
    }
    for v in a.iter_mut() {
        *v *= scale;
    }
    let mut e = vec![T::zero(); m * m];
    for i in 0..m {
        e[i * m + i] = T::one();
    }
    let mut term = e.clone();
    for k in 1..=40 {
        term = matmul(&term, &a, m);
        let inv_k = T::one() / T::from_usize_lossy(k);
        let mut term_norm = T::zero();
        for (ev, tv) in e.iter_mut().zip(term.iter_mut()) {
            *tv *= inv_k;
            *ev += *tv;
            term_norm = term_norm.max(tv.abs());
        }
        if term_norm <= T::epsilon() * T::lit(1e-2) {
            break;
        }
    }
    for _ in 0..squarings {
        e = matmul(&e, &e, m);
    }
    let mut u = vec![T::zero(); n];
    let mut dust = T::zero();
    for i in 0..m {
        let acc = (0..n).fold(T::zero(), |acc, j| acc + e[i * m + j] * u0[j]);
        if i < n {
            u[i] = acc;
        } else {
            dust = acc;
        }
    }
    Ok(DensityState { u, t, dust_mass: dust })
}

/// How `semigroup_check` propagates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Propagator<T> {
    Scheme { scheme: Scheme, dt: T },
    Oracle,
}

fn propagate<T: Scalar>(gen: &DiscreteGenerator<T>, u: &DensityState<T>, t: T, how: Propagator<T>) -> Result<DensityState<T>, SimError> {
    match how {
        Propagator::Oracle => {
            let mut s = expm_oracle(gen, t, &u.u)?;
            s.t = u.t + t;
            s.dust_mass += u.dust_mass;
            Ok(s)
        }
        Propagator::Scheme { scheme, dt } => {
            let count = (t / dt).ceil().to_usize().unwrap_or(0);
            if count == 0 {
                return Ok(u.clone());
            }
            let h = t / T::from_usize_lossy(count);
            let mut s = u.clone();
            for _ in 0..count {
                s = step(&s, gen, h, scheme)?;
            }
            Ok(s)
        }
    }
}

/// `‖S(t+s)u₀ − S(t)S(s)u₀‖_ω / ‖S(t+s)u₀‖_ω`.
pub fn semigroup_check<T: Scalar>(
    gen: &DiscreteGenerator<T>,
    u0: &[T],
    t: T,
    s: T,
    how: Propagator<T>,
    weight: &Weight<T>,
) -> Result<T, SimError> {
    if !(t >= T::zero() && s >= T::zero()) {
        return Err(SimError::InvalidInput("t and s must be >= 0".into()));
    }
    let start = DensityState::new(u0.to_vec());
    check_state(gen, &start)?;
    let omega = weight_values(weight, &gen.grid)?;
    let whole = propagate(gen, &start, t + s, how)?;
    let split = propagate(gen, &propagate(gen, &start, s, how)?, t, how)?;
    let diff: Vec<T> = whole.u.iter().zip(&split.u).map(|(a, b)| *a - *b).collect();
    let denom = weighted_abs_norm(&gen.grid, &omega, &whole.u);
    let num = weighted_abs_norm(&gen.grid, &omega, &diff);
    Ok(if denom > T::zero() { num / denom } else { num })
}

/// Relative `ω`-norm distance between two states on the same grid.
pub fn relative_distance<T: Scalar>(grid: &Grid<T>, weight: &Weight<T>, a: &[T], reference: &[T]) -> Result<T, SimError> {
    let omega = weight_values(weight, grid)?;
    let diff: Vec<T> = a.iter().zip(reference).map(|(x, y)| *x - *y).collect();
    Ok(weighted_abs_norm(grid, &omega, &diff) / weighted_abs_norm(grid, &omega, reference))
}
