//! Integration over the polytorus `T^N` with normalized Haar measure.
//!
//! Product grids of `M`-th roots of unity integrate every trigonometric
//! polynomial whose exponents satisfy `|k_j| < M` exactly. Integrands such
//! as `‖P(z)‖_X` are not trigonometric polynomials; for those the grid is
//! refined `M → 2M` until the relative change drops below a tolerance, with
//! seeded Monte Carlo as the fallback once the grid outgrows its cap.
//!
//! All reductions run over fixed-size chunks whose partial sums are
//! combined in chunk order, so results are bit-identical for any number of
//! worker threads.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::sum::{Compensated, CompensatedVec};
use crate::{rng, Error, Result, C64};

/// Default cap on the number of grid points.
pub const DEFAULT_GRID_CAP: u128 = 100_000_000;

/// Relative band attributed to floating point rounding in exact quadrature.
pub const ROUNDING_TOL: f64 = 1e-12;

const GRID_CHUNK: usize = 2048;
const MC_CHUNK: usize = 1024;

/// Product grid of `points_per_axis`-th roots of unity on `T^vars`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub vars: usize,
    pub points_per_axis: usize,
}

impl GridSpec {
    pub fn new(vars: usize, points_per_axis: usize) -> Result<Self> {
        if points_per_axis == 0 {
            return Err(Error::InvalidInput("grid needs at least one point per axis".into()));
        }
        Ok(Self { vars, points_per_axis })
    }

    /// `M^N`, or an error when above `cap`.
    pub fn total_points(&self, cap: u128) -> Result<usize> {
        let mut total: u128 = 1;
        for _ in 0..self.vars {
            total = total.saturating_mul(self.points_per_axis as u128);
            if total > cap {
                return Err(Error::SizeExceeded { size: total, cap });
            }
        }
        Ok(total as usize)
    }
}

/// Seeded i.i.d. uniform sampling on `T^vars`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub vars: usize,
    pub samples: usize,
    pub seed: u64,
}

/// Grid refinement policy for integrands that are not band-limited.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveGrid {
    /// Points per axis of the first level.
    pub start: usize,
    /// Stop once `|I_{2M} - I_M| ≤ rel_tol · |I_{2M}|`.
    pub rel_tol: f64,
    /// Largest grid attempted before falling back to Monte Carlo.
    pub max_points: u128,
    pub fallback_samples: usize,
    pub seed: u64,
}

impl Default for AdaptiveGrid {
    fn default() -> Self {
        Self { start: 8, rel_tol: 1e-3, max_points: 1 << 22, fallback_samples: 1 << 16, seed: 0 }
    }
}

/// How to integrate over `T^N` when the number of variables is implied by
/// the integrand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Quadrature {
    Grid { points_per_axis: usize },
    Adaptive(AdaptiveGrid),
    MonteCarlo { samples: usize, seed: u64 },
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature::Adaptive(AdaptiveGrid::default())
    }
}

/// Result of a quadrature together with its error indicators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub value: f64,
    /// Standard error for Monte Carlo, zero for grids.
    pub stderr: f64,
    /// Relative band for grid results: rounding for a fixed grid, the
    /// refinement tolerance for an adaptive grid.
    pub rel_tol: f64,
    pub points: usize,
}

impl Integral {
    fn exact(value: f64, points: usize) -> Self {
        Self { value, stderr: 0.0, rel_tol: ROUNDING_TOL, points }
    }

    /// Largest value compatible with the estimate: `value·(1+rel_tol) + 3·stderr`.
    pub fn upper(&self) -> f64 {
        self.value * (1.0 + self.rel_tol) + 3.0 * self.stderr
    }

    /// Smallest value compatible with the estimate.
    pub fn lower(&self) -> f64 {
        self.value * (1.0 - self.rel_tol) - 3.0 * self.stderr
    }
}

/// `M` roots of unity, `ω^k` for `k = 0..M`.
fn roots_of_unity(m: usize) -> Vec<C64> {
    (0..m)
        .map(|k| {
            let theta = std::f64::consts::TAU * k as f64 / m as f64;
            C64::new(theta.cos(), theta.sin())
        })
        .collect()
}

/// Calls `visit(point, digits)` for grid indices `start..end`, where
/// `point = prefix ++ (ω^{digits_1}, …)`.
fn walk_grid(
    prefix: &[C64],
    vars: usize,
    roots: &[C64],
    start: usize,
    end: usize,
    mut visit: impl FnMut(&[C64], &[usize]),
) {
    let m = roots.len();
    let mut digits = vec![0usize; vars];
    let mut rest = start;
    for d in digits.iter_mut() {
        *d = rest % m;
        rest /= m;
    }
    let mut point: Vec<C64> = prefix.to_vec();
    point.extend(digits.iter().map(|&d| roots[d]));
    let off = prefix.len();
    for _ in start..end {
        visit(&point, &digits);
        for (axis, d) in digits.iter_mut().enumerate() {
            *d += 1;
            if *d == m {
                *d = 0;
                point[off + axis] = roots[0];
            } else {
                point[off + axis] = roots[*d];
                break;
            }
        }
    }
}

fn chunk_ranges(total: usize, chunk: usize) -> Vec<(usize, usize)> {
    (0..total.div_ceil(chunk)).map(|c| (c * chunk, ((c + 1) * chunk).min(total))).collect()
}

fn grid_mean_with_prefix<F>(prefix: &[C64], spec: GridSpec, cap: u128, integrand: &F) -> Result<f64>
where
    F: Fn(&[C64]) -> f64 + Sync,
{
    let total = spec.total_points(cap)?;
    let roots = roots_of_unity(spec.points_per_axis);
    let partials: Vec<Compensated> = chunk_ranges(total, GRID_CHUNK)
        .into_par_iter()
        .map(|(a, b)| {
            let mut acc = Compensated::default();
            walk_grid(prefix, spec.vars, &roots, a, b, |z, _| acc.add(integrand(z)));
            acc
        })
        .collect();
    let mut acc = Compensated::default();
    for p in &partials {
        acc.merge(p);
    }
    Ok(acc.value() / total as f64)
}

/// Average of `integrand` over the `M^N` product grid of roots of unity.
///
/// Exact for trigonometric polynomials of degree `< M` in each variable.
pub fn grid_quadrature<F>(integrand: F, spec: GridSpec) -> Result<f64>
where
    F: Fn(&[C64]) -> f64 + Sync,
{
    grid_mean_with_prefix(&[], spec, DEFAULT_GRID_CAP, &integrand)
}

#[derive(Debug, Clone, Copy)]
struct Welford {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn new() -> Self {
        Self { n: 0.0, mean: 0.0, m2: 0.0 }
    }

    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, o: &Welford) {
        if o.n == 0.0 {
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n / n;
        self.m2 += o.m2 + d * d * self.n * o.n / n;
        self.n = n;
    }
}

fn mc_with_prefix<F>(prefix: &[C64], spec: SampleSpec, integrand: &F) -> Result<(f64, f64)>
where
    F: Fn(&[C64]) -> f64 + Sync,
{
    if spec.samples == 0 {
        return Err(Error::InvalidInput("Monte Carlo needs at least one sample".into()));
    }
    let partials: Vec<Welford> = chunk_ranges(spec.samples, MC_CHUNK)
        .into_par_iter()
        .enumerate()
        .map(|(c, (a, b))| {
            let mut r = rng::stream(spec.seed, c as u64);
            let mut point: Vec<C64> = prefix.to_vec();
            point.resize(prefix.len() + spec.vars, C64::new(1.0, 0.0));
            let mut acc = Welford::new();
            for _ in a..b {
                for z in point[prefix.len()..].iter_mut() {
                    *z = rng::unimodular(&mut r);
                }
                acc.push(integrand(&point));
            }
            acc
        })
        .collect();
    let mut acc = Welford::new();
    for p in &partials {
        acc.merge(p);
    }
    let stderr = if spec.samples < 2 { f64::INFINITY } else { (acc.m2.max(0.0) / (acc.n - 1.0) / acc.n).sqrt() };
    Ok((acc.mean, stderr))
}

/// Seeded Monte Carlo mean and standard error over `T^N`.
pub fn mc_quadrature<F>(integrand: F, spec: SampleSpec) -> Result<(f64, f64)>
where
    F: Fn(&[C64]) -> f64 + Sync,
{
    mc_with_prefix(&[], spec, &integrand)
}

/// Refines a grid until two consecutive levels agree.
pub fn adaptive_quadrature<F>(integrand: F, vars: usize, policy: &AdaptiveGrid) -> Result<Integral>
where
    F: Fn(&[C64]) -> f64 + Sync,
{
    adaptive_with_prefix(&[], vars, policy, &integrand)
}

fn adaptive_with_prefix<F>(prefix: &[C64], vars: usize, policy: &AdaptiveGrid, integrand: &F) -> Result<Integral>
where
    F: Fn(&[C64]) -> f64 + Sync,
{
    if vars == 0 {
        return Ok(Integral::exact(integrand(prefix), 1));
    }
    let mut m = policy.start.max(1);
    let mut prev: Option<(f64, usize)> = None;
    loop {
        let spec = GridSpec::new(vars, m)?;
        let Ok(points) = spec.total_points(policy.max_points) else {
            break;
        };
        let value = grid_mean_with_prefix(prefix, spec, policy.max_points, integrand)?;
        if let Some((before, _)) = prev {
            let scale = value.abs().max(before.abs());
            if (value - before).abs() <= policy.rel_tol * scale || scale < 1e-300 {
                return Ok(Integral { value, stderr: 0.0, rel_tol: policy.rel_tol, points });
            }
        }
        prev = Some((value, points));
        m *= 2;
    }
    let spec = SampleSpec { vars, samples: policy.fallback_samples, seed: policy.seed };
    let (value, stderr) = mc_with_prefix(prefix, spec, integrand)?;
    Ok(Integral { value, stderr, rel_tol: 0.0, points: spec.samples })
}

impl Quadrature {
    /// `∫_{T^vars} integrand`.
    pub fn integrate<F>(&self, vars: usize, integrand: F) -> Result<Integral>
    where
        F: Fn(&[C64]) -> f64 + Sync,
    {
        self.integrate_with_prefix(&[], vars, &integrand)
    }

    /// Same as [`Self::integrate`] for integrands invariant under the
    /// diagonal rotation `z ↦ λz`, `|λ| = 1`: the first coordinate is pinned
    /// to 1 and only `vars - 1` axes are integrated.
    pub fn integrate_rotation_invariant<F>(&self, vars: usize, integrand: F) -> Result<Integral>
    where
        F: Fn(&[C64]) -> f64 + Sync,
    {
        if vars == 0 {
            return self.integrate(0, integrand);
        }
        self.integrate_with_prefix(&[C64::new(1.0, 0.0)], vars - 1, &integrand)
    }

    fn integrate_with_prefix<F>(&self, prefix: &[C64], vars: usize, integrand: &F) -> Result<Integral>
    where
        F: Fn(&[C64]) -> f64 + Sync,
    {
        match *self {
            Quadrature::Grid { points_per_axis } => {
                let spec = GridSpec::new(vars, points_per_axis)?;
                let points = spec.total_points(DEFAULT_GRID_CAP)?;
                let value = grid_mean_with_prefix(prefix, spec, DEFAULT_GRID_CAP, integrand)?;
                Ok(Integral::exact(value, points))
            }
            Quadrature::Adaptive(ref policy) => adaptive_with_prefix(prefix, vars, policy, integrand),
            Quadrature::MonteCarlo { samples, seed } => {
                let (value, stderr) = mc_with_prefix(prefix, SampleSpec { vars, samples, seed }, integrand)?;
                Ok(Integral { value, stderr, rel_tol: 0.0, points: samples })
            }
        }
    }

    /// Whether results are exact up to rounding for band-limited integrands.
    pub fn is_fixed_grid(&self) -> bool {
        matches!(self, Quadrature::Grid { .. })
    }
}

/// `f̂(α) = ∫ f(w) w^{-α} dw` on the grid, componentwise.
///
/// `alpha` is a dense signed exponent vector of length `spec.vars`. Exact
/// when `f` is a polynomial whose per-axis degree `d_j` satisfies
/// `M > d_j + |α_j|`; otherwise the result is aliased.
pub fn fourier_coefficient<F>(f: F, dim: usize, alpha: &[i64], spec: GridSpec) -> Result<Vec<C64>>
where
    F: Fn(&[C64]) -> Vec<C64> + Sync,
{
    if alpha.len() != spec.vars {
        return Err(Error::ArityMismatch { expected: spec.vars, got: alpha.len() });
    }
    let total = spec.total_points(DEFAULT_GRID_CAP)?;
    let m = spec.points_per_axis;
    let roots = roots_of_unity(m);
    // w^{-α} on the grid is ω^{-Σ α_j k_j}; reduce the exponent mod M so the
    // weight is read from the table instead of accumulated by products.
    let shifts: Vec<usize> = alpha.iter().map(|&a| (-a).rem_euclid(m as i64) as usize).collect();
    let partials: Vec<CompensatedVec> = chunk_ranges(total, GRID_CHUNK)
        .into_par_iter()
        .map(|(a, b)| {
            let mut acc = CompensatedVec::zeros(dim);
            walk_grid(&[], spec.vars, &roots, a, b, |z, digits| {
                let k = digits.iter().zip(&shifts).map(|(d, s)| d * s).sum::<usize>() % m;
                let value = f(z);
                acc.add_scaled(&value, roots[k]);
            });
            acc
        })
        .collect();
    let mut acc = CompensatedVec::zeros(dim);
    for p in &partials {
        acc.merge(p);
    }
    let scale = 1.0 / total as f64;
    Ok(acc.values().into_iter().map(|c| c * scale).collect())
}

/// Uniform random point on `T^vars`.
pub fn random_point<R: Rng + ?Sized>(rng: &mut R, vars: usize) -> Vec<C64> {
    (0..vars).map(|_| rng::unimodular(rng)).collect()
}
