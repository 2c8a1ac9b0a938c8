//! Dirichlet polynomials `Σ a_n n^{-s}` with coefficients in `X`, the Bohr
//! lift to polynomials on `T^N` and its inverse, `H_p` norms, vertical
//! line averages, and Bohr–Cahen abscissa estimators.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::multiindex::{factorize, index_of, PrimeTable};
use crate::polys::{monomial, VectorPoly};
use crate::spaces::{SpaceDescriptor, Vector};
use crate::sum::Compensated;
use crate::torus::{GridSpec, Quadrature, DEFAULT_GRID_CAP};
use crate::{Error, Result, C64};

/// Finite Dirichlet series `Σ a_n n^{-s}`; zero coefficients are not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletPoly {
    space: SpaceDescriptor,
    coeffs: BTreeMap<u64, Vector>,
}

impl DirichletPoly {
    pub fn zero(space: SpaceDescriptor) -> Self {
        Self { space, coeffs: BTreeMap::new() }
    }

    pub fn from_terms(space: SpaceDescriptor, terms: impl IntoIterator<Item = (u64, Vector)>) -> Result<Self> {
        let mut d = Self::zero(space);
        for (n, a) in terms {
            d.add_term(n, &a)?;
        }
        Ok(d)
    }

    /// Scalar series from `(n, a_n)` pairs.
    pub fn scalar(terms: &[(u64, C64)]) -> Result<Self> {
        Self::from_terms(SpaceDescriptor::scalar(), terms.iter().map(|&(n, a)| (n, Vector::scalar(a))))
    }

    /// `self += a n^{-s}`.
    pub fn add_term(&mut self, n: u64, a: &Vector) -> Result<()> {
        if n == 0 {
            return Err(Error::InvalidInput("Dirichlet series are indexed from n = 1".into()));
        }
        self.space.check(a)?;
        let entry = self.coeffs.entry(n).or_insert_with(|| Vector::zeros(a.len()));
        *entry += a;
        if entry.is_zero() {
            self.coeffs.remove(&n);
        }
        Ok(())
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn coeffs(&self) -> &BTreeMap<u64, Vector> {
        &self.coeffs
    }

    pub fn coeff(&self, n: u64) -> Vector {
        self.coeffs.get(&n).cloned().unwrap_or_else(|| Vector::zeros(self.space.dim))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `D(s) = Σ a_n n^{-s}`.
    pub fn evaluate_at(&self, s: C64) -> Vector {
        let mut out = Vector::zeros(self.space.dim);
        for (&n, a) in &self.coeffs {
            out.axpy((-s * (n as f64).ln()).exp(), a);
        }
        out
    }

    /// Random series supported on `support` with coefficients uniform in
    /// the unit disc.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, space: SpaceDescriptor, support: &[u64]) -> Result<Self> {
        Self::from_terms(space, support.iter().map(|&n| (n, Vector::random_disc(rng, space.dim))))
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    n: u64,
    value: Vector,
}

#[derive(Serialize, Deserialize)]
struct SeriesJson {
    space: SpaceDescriptor,
    coeffs: Vec<TermJson>,
}

impl Serialize for DirichletPoly {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        SeriesJson {
            space: self.space,
            coeffs: self.coeffs.iter().map(|(&n, a)| TermJson { n, value: a.clone() }).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DirichletPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = SeriesJson::deserialize(d)?;
        DirichletPoly::from_terms(raw.space, raw.coeffs.into_iter().map(|t| (t.n, t.value)))
            .map_err(serde::de::Error::custom)
    }
}

/// Polynomial with `c_α = a_{p^α}`. The number of variables is the index
/// of the largest prime dividing some `n` in the support.
pub fn bohr_lift(d: &DirichletPoly, table: &PrimeTable) -> Result<VectorPoly> {
    let mut terms = Vec::with_capacity(d.len());
    let mut vars = 0;
    for (&n, a) in d.coeffs() {
        let alpha = factorize(n, table)?;
        vars = vars.max(alpha.max_position());
        terms.push((alpha, a.clone()));
    }
    VectorPoly::from_terms(*d.space(), vars, terms)
}

/// Dirichlet polynomial with `a_{p^α} = c_α`.
pub fn bohr_push(p: &VectorPoly, table: &PrimeTable) -> Result<DirichletPoly> {
    let mut out = DirichletPoly::zero(*p.space());
    for (alpha, c) in p.coeffs() {
        out.add_term(index_of(alpha, table)?, c)?;
    }
    Ok(out)
}

/// `‖D‖_{H_p(X)}`: the `L_p(T^N, X)` norm of the Bohr lift.
pub fn hp_norm(d: &DirichletPoly, p: f64, quad: &Quadrature, table: &PrimeTable) -> Result<f64> {
    bohr_lift(d, table)?.lp_norm(p, quad)
}

/// Quadrature that integrates `‖P‖²` exactly for the lift of `d` when `X`
/// is a Hilbert space, and adapts otherwise.
pub fn default_hp_quadrature(d: &DirichletPoly, p: f64, table: &PrimeTable) -> Result<Quadrature> {
    Ok(bohr_lift(d, table)?.default_quadrature(p))
}

/// `((1/2T) ∫_{-T}^{T} ‖D(it)‖^p dt)^{1/p}` by the composite midpoint rule
/// with `samples` nodes.
pub fn vertical_average_norm(d: &DirichletPoly, p: f64, half_width: f64, samples: usize) -> Result<f64> {
    if !(half_width > 0.0) {
        return Err(Error::InvalidInput(format!("half width must be positive, got {half_width}")));
    }
    if samples == 0 {
        return Err(Error::InvalidInput("need at least one node".into()));
    }
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidInput(format!("p must be at least 1, got {p}")));
    }
    let logs: Vec<(f64, &Vector)> = d.coeffs().iter().map(|(&n, a)| ((n as f64).ln(), a)).collect();
    let dim = d.space().dim;
    let h = 2.0 * half_width / samples as f64;
    const CHUNK: usize = 4096;
    let chunks = samples.div_ceil(CHUNK);
    let partials: Vec<Compensated> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Compensated::default();
            let mut buf = vec![C64::new(0.0, 0.0); dim];
            for k in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                let t = -half_width + (k as f64 + 0.5) * h;
                buf.iter_mut().for_each(|b| *b = C64::new(0.0, 0.0));
                for &(ln_n, a) in &logs {
                    let w = C64::from_polar(1.0, -t * ln_n);
                    for (b, x) in buf.iter_mut().zip(&a.0) {
                        *b += x * w;
                    }
                }
                acc.add(d.space().norm(&buf).powf(p));
            }
            acc
        })
        .collect();
    let mut acc = Compensated::default();
    for part in &partials {
        acc.merge(part);
    }
    Ok((acc.value() / samples as f64).max(0.0).powf(1.0 / p))
}

/// Largest `‖P(w)‖_X` over a roots-of-unity grid for the lift `P` of `d`.
///
/// A lower bound for the sup norm on `T^N`; a diagnostic only.
pub fn sup_norm_lower_bound(d: &DirichletPoly, points_per_axis: usize, table: &PrimeTable) -> Result<f64> {
    let lift = bohr_lift(d, table)?;
    let spec = GridSpec::new(lift.vars(), points_per_axis)?;
    let total = spec.total_points(DEFAULT_GRID_CAP)?;
    let roots: Vec<C64> = (0..points_per_axis)
        .map(|k| C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / points_per_axis as f64))
        .collect();
    let best = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let z: Vec<C64> = (0..lift.vars())
                .map(|_| {
                    let r = roots[idx % points_per_axis];
                    idx /= points_per_axis;
                    r
                })
                .collect();
            lift.norm_at(&z)
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

/// Generator for coefficient sequences fed to the abscissa estimators.
///
/// JSON: `{"kind": "power_decay", "theta": 1.0}`, `{"kind": "alternating",
/// "theta": 0.5}`, `{"kind": "constant", "value": 1.0}`,
/// `{"kind": "custom", "values": [..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientRule {
    /// `a_n = n^{-θ}`
    PowerDecay { theta: f64 },
    /// `a_n = (-1)^{n+1} n^{-θ}`
    Alternating { theta: f64 },
    /// `a_n = value`
    Constant {
        #[serde(default = "one")]
        value: f64,
    },
    /// `a_n = values[n-1]`, zero past the end.
    Custom { values: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

impl CoefficientRule {
    pub fn coefficient(&self, n: u64) -> f64 {
        match self {
            CoefficientRule::PowerDecay { theta } => (n as f64).powf(-theta),
            CoefficientRule::Alternating { theta } => {
                let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
                sign * (n as f64).powf(-theta)
            }
            CoefficientRule::Constant { value } => *value,
            CoefficientRule::Custom { values } => values.get(n as usize - 1).copied().unwrap_or(0.0),
        }
    }

    pub fn description(&self) -> String {
        match self {
            CoefficientRule::PowerDecay { theta } => format!("a_n = n^-{theta}"),
            CoefficientRule::Alternating { theta } => format!("a_n = (-1)^(n+1) n^-{theta}"),
            CoefficientRule::Constant { value } => format!("a_n = {value}"),
            CoefficientRule::Custom { values } => format!("custom table of {} values", values.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbscissaKind {
    /// absolute convergence, from `Σ ‖a_n‖`
    SigmaA,
    /// conditional convergence, from `‖Σ a_n‖`
    SigmaC,
}

/// Which Bohr–Cahen formula was applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbscissaBranch {
    /// growth of partial sums (abscissa at least 0)
    PartialSums,
    /// decay of tails (abscissa at most 0)
    Tails,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbscissaStatus {
    Stable,
    /// Terms vanish past the window: the abscissa is `-∞`.
    NegativeInfinity,
    /// The dyadic slopes disagree or are not finite.
    Divergent,
}

/// Output of [`bohr_cahen_abscissa`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbscissaEstimate {
    #[serde(with = "crate::serde_ext::real")]
    pub value: f64,
    pub kind: AbscissaKind,
    pub n_max: u64,
    pub branch: AbscissaBranch,
    pub status: AbscissaStatus,
    /// `log E(N) / log N` at `N = n_max/4, n_max/2, n_max`, where `E` is
    /// the partial sum envelope or the tail envelope.
    pub raw: Vec<AbscissaSample>,
    /// Local slopes of `log E` against `log N` on the two dyadic windows.
    #[serde(with = "crate::serde_ext::reals")]
    pub slopes: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbscissaSample {
    pub n: u64,
    #[serde(with = "crate::serde_ext::real")]
    pub quotient: f64,
}

/// Ratio of successive window oscillations below which the series is
/// treated as convergent.
const CONVERGENT_RATIO: f64 = 0.9;

/// Bohr–Cahen estimate of `σ_a` or `σ_c` from the first `n_max`
/// coefficients.
///
/// `E(N)` is the running maximum of `‖Σ_{n≤N} a_n‖` (or `Σ ‖a_n‖`) when
/// the series appears divergent and the tail envelope otherwise. The local
/// slopes `s_1, s_2` of `log E` against `log N` on the windows
/// `(n_max/4, n_max/2]` and `(n_max/2, n_max]` are extrapolated as
/// `s(L) = σ + c/L` to `L = log N → ∞`; this removes the logarithmic bias
/// of the raw quotients `log E(N)/log N`.
pub fn bohr_cahen_abscissa(rule: &CoefficientRule, kind: AbscissaKind, n_max: u64) -> Result<AbscissaEstimate> {
    if n_max < 16 {
        return Err(Error::InvalidInput(format!("n_max must be at least 16, got {n_max}")));
    }
    let marks = [n_max / 4, n_max / 2, n_max];
    // running sum, its envelope, and per-window oscillation
    let mut sum = Compensated::default();
    let mut envelope = 0.0f64;
    let mut env_at = [0.0f64; 3];
    let mut sum_at = [0.0f64; 3];
    let mut osc = [0.0f64; 2];
    let mut window = 0usize;
    for n in 1..=n_max {
        let a = rule.coefficient(n);
        sum.add(match kind {
            AbscissaKind::SigmaA => a.abs(),
            AbscissaKind::SigmaC => a,
        });
        let s = sum.value();
        envelope = envelope.max(s.abs());
        if n > marks[0] {
            osc[window] = osc[window].max((s - sum_at[window]).abs());
        }
        if let Some(k) = marks.iter().position(|&m| m == n) {
            env_at[k] = envelope;
            sum_at[k] = s;
            if k == 1 {
                window = 1;
            }
        }
    }
    let raw_of = |e: &[f64; 3]| -> Vec<AbscissaSample> {
        marks.iter().zip(e).map(|(&n, &v)| AbscissaSample { n, quotient: v.ln() / (n as f64).ln() }).collect()
    };
    if osc[1] == 0.0 {
        return Ok(AbscissaEstimate {
            value: f64::NEG_INFINITY,
            kind,
            n_max,
            branch: AbscissaBranch::Tails,
            status: AbscissaStatus::NegativeInfinity,
            raw: raw_of(&env_at),
            slopes: vec![f64::NEG_INFINITY; 2],
        });
    }
    let ratio = if osc[0] == 0.0 { f64::INFINITY } else { osc[1] / osc[0] };
    let (branch, e) = if ratio >= CONVERGENT_RATIO {
        (AbscissaBranch::PartialSums, env_at)
    } else {
        // geometric continuation of the window oscillations past n_max
        let beyond = osc[1] * ratio / (1.0 - ratio);
        let at_half = osc[1] + beyond;
        (AbscissaBranch::Tails, [osc[0] + at_half, at_half, beyond])
    };
    let ln2 = std::f64::consts::LN_2;
    let slopes = [(e[1].ln() - e[0].ln()) / ln2, (e[2].ln() - e[1].ln()) / ln2];
    let l_max = (n_max as f64).ln();
    let (l1, l2) = (l_max - 1.5 * ln2, l_max - 0.5 * ln2);
    let c = (slopes[0] - slopes[1]) / (1.0 / l1 - 1.0 / l2);
    let value = slopes[1] - c / l2;
    let status = if !value.is_finite() || (slopes[0] - slopes[1]).abs() > 0.25 {
        AbscissaStatus::Divergent
    } else {
        AbscissaStatus::Stable
    };
    Ok(AbscissaEstimate { value, kind, n_max, branch, status, raw: raw_of(&e), slopes: slopes.to_vec() })
}

/// `Σ_{|α| ≤ m_max} ‖c_α‖ |z^α|` for a point `z` of the open unit ball of
/// `c_0` given by its leading entries; later entries are zero.
pub fn monomial_abs_sum(f: &VectorPoly, z: &[C64], m_max: u32) -> Result<f64> {
    if let Some(bad) = z.iter().find(|c| c.norm() >= 1.0) {
        return Err(Error::PreconditionViolated(format!("|z_j| < 1 required, got {bad}")));
    }
    let moduli: Vec<C64> = z.iter().map(|c| C64::new(c.norm(), 0.0)).collect();
    let terms: Vec<f64> = f
        .coeffs()
        .iter()
        .filter(|(a, _)| a.degree() <= m_max)
        .map(|(a, c)| f.space().norm(&c.0) * monomial(a, &moduli).re)
        .collect();
    Ok(crate::sum::compensated_sum(terms))
}

/// Comparison of a decreasing sequence `z_n` with `w_n = p_n^{-1/r}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PntReport {
    pub q: f64,
    pub r: f64,
    pub weights: Vec<f64>,
    /// `z_n / w_n`
    pub ratios: Vec<f64>,
    /// Smallest 1-based `n_0` with `z_n < w_n` for every sampled `n ≥ n_0`.
    pub crossover: Option<usize>,
    /// The sampled tail satisfies `z_n ≤ w_n` only with equality somewhere.
    pub boundary: bool,
    /// `max_n z_n n^{1/q}` over the sample.
    pub scaled_sup: f64,
}

/// Tests `z_n ≤ p_n^{-1/r}` along the sample and reports where it starts
/// to hold strictly.
pub fn pnt_weight_compare(z: &[f64], q: f64, r: f64, table: &PrimeTable) -> Result<PntReport> {
    if !(r > q) || q <= 0.0 {
        return Err(Error::InvalidInput(format!("need 0 < q < r, got q = {q}, r = {r}")));
    }
    if z.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::InvalidInput("sequence must be nonnegative".into()));
    }
    if z.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidInput("sequence must be nonincreasing".into()));
    }
    if z.len() > table.len() {
        return Err(Error::CapacityExceeded { value: z.len() as u64, largest: table.largest() });
    }
    let weights: Vec<f64> = table.as_slice()[..z.len()].iter().map(|&p| (p as f64).powf(-1.0 / r)).collect();
    let ratios: Vec<f64> = z.iter().zip(&weights).map(|(a, w)| a / w).collect();
    const TIE: f64 = 1e-12;
    let mut crossover = None;
    let mut non_strict = None;
    for (k, &ratio) in ratios.iter().enumerate().rev() {
        if ratio < 1.0 - TIE {
            crossover = Some(k + 1);
        } else {
            break;
        }
    }
    for (k, &ratio) in ratios.iter().enumerate().rev() {
        if ratio <= 1.0 + TIE {
            non_strict = Some(k + 1);
        } else {
            break;
        }
    }
    let boundary = match (crossover, non_strict) {
        (None, Some(_)) => true,
        (Some(a), Some(b)) => b < a,
        _ => false,
    };
    let scaled_sup = z.iter().enumerate().map(|(k, &x)| x * ((k + 1) as f64).powf(1.0 / q)).fold(0.0, f64::max);
    Ok(PntReport { q, r, weights, ratios, crossover, boundary, scaled_sup })
}
