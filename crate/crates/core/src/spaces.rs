//! Finite dimensional stand-ins `ℓ_q^d` for the coefficient space `X`,
//! Steinhaus averages `(∫_{T^N} ‖Σ x_k z_k‖^p dz)^{1/p}`, and empirical
//! lower bounds for the cotype constant `C_q(X)` and the Kahane constant `K`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul};

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::torus::{Integral, Quadrature};
use crate::{rng, Error, Result, C64};

/// The exponent `q ∈ [1, ∞]` of `ℓ_q^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Exponent {
    pub fn finite(&self) -> Option<f64> {
        match *self {
            Exponent::Finite(q) => Some(q),
            Exponent::Infinite => None,
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(q) => write!(f, "{q}"),
            Exponent::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match *self {
            Exponent::Finite(q) => s.serialize_f64(q),
            Exponent::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(q) => Ok(Exponent::Finite(q)),
            Raw::Str(s) if s == "inf" => Ok(Exponent::Infinite),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {s:?}"))),
        }
    }
}

/// `X = ℓ_q^d` over the complex field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpaceDescriptor {
    pub dim: usize,
    #[serde(rename = "q")]
    pub exponent: Exponent,
}

impl<'de> Deserialize<'de> for SpaceDescriptor {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            dim: usize,
            q: Exponent,
        }
        let raw = Raw::deserialize(d)?;
        SpaceDescriptor::new(raw.dim, raw.q).map_err(serde::de::Error::custom)
    }
}

impl SpaceDescriptor {
    pub fn new(dim: usize, exponent: Exponent) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("space dimension must be at least 1".into()));
        }
        if let Exponent::Finite(q) = exponent {
            if q.is_nan() || q < 1.0 || q.is_infinite() {
                return Err(Error::InvalidInput(format!("space exponent must lie in [1, ∞), got {q}")));
            }
        }
        Ok(Self { dim, exponent })
    }

    /// `ℓ_q^d` with finite `q`.
    pub fn lq(q: f64, dim: usize) -> Result<Self> {
        Self::new(dim, Exponent::Finite(q))
    }

    /// `ℓ_∞^d`.
    pub fn linf(dim: usize) -> Result<Self> {
        Self::new(dim, Exponent::Infinite)
    }

    /// The scalar field `ℂ`.
    pub fn scalar() -> Self {
        Self { dim: 1, exponent: Exponent::Finite(2.0) }
    }

    /// Whether `‖x‖²` is a Hermitian form, which makes `‖P(z)‖²` a
    /// trigonometric polynomial. True for `ℓ_2^d` and every one
    /// dimensional space.
    pub fn is_hilbert(&self) -> bool {
        self.dim == 1 || self.exponent == Exponent::Finite(2.0)
    }

    /// Optimal cotype of `ℓ_q`: `max(q, 2)` for finite `q`, infinite for `ℓ_∞`.
    pub fn optimal_cotype(&self) -> Exponent {
        match self.exponent {
            Exponent::Finite(q) => Exponent::Finite(q.max(2.0)),
            Exponent::Infinite => Exponent::Infinite,
        }
    }

    pub fn norm(&self, x: &[C64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match self.exponent {
            Exponent::Infinite => x.iter().map(|c| c.norm()).fold(0.0, f64::max),
            Exponent::Finite(q) if q == 2.0 => x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt(),
            Exponent::Finite(q) if q == 1.0 => x.iter().map(|c| c.norm()).sum(),
            Exponent::Finite(q) => {
                let big = x.iter().map(|c| c.norm()).fold(0.0, f64::max);
                if big == 0.0 {
                    return 0.0;
                }
                big * x.iter().map(|c| (c.norm() / big).powf(q)).sum::<f64>().powf(1.0 / q)
            }
        }
    }

    pub fn check(&self, x: &Vector) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }
}

/// A vector of `X`, i.e. `dim` complex entries. The owning container
/// carries the [`SpaceDescriptor`].
///
/// JSON form: `[[re, im], ...]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vector(pub Vec<C64>);

impl Vector {
    pub fn zeros(dim: usize) -> Self {
        Vector(vec![C64::new(0.0, 0.0); dim])
    }

    pub fn from_real(entries: &[f64]) -> Self {
        Vector(entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// One dimensional vector.
    pub fn scalar(c: C64) -> Self {
        Vector(vec![c])
    }

    /// The `k`-th unit vector (0-based) of `C^dim`.
    pub fn unit(dim: usize, k: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[k] = C64::new(1.0, 0.0);
        v
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn entries(&self) -> &[C64] {
        &self.0
    }

    pub fn scaled(&self, s: C64) -> Vector {
        Vector(self.0.iter().map(|c| c * s).collect())
    }

    /// `self += s·x`
    pub fn axpy(&mut self, s: C64, x: &Vector) {
        for (a, b) in self.0.iter_mut().zip(&x.0) {
            *a += s * b;
        }
    }

    /// Largest componentwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Vector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Random vector with entries uniform in the unit disc.
    pub fn random_disc<R: rand::Rng + ?Sized>(rng: &mut R, dim: usize) -> Vector {
        Vector((0..dim).map(|_| rng::unit_disc(rng)).collect())
    }
}

impl AddAssign<&Vector> for Vector {
    fn add_assign(&mut self, rhs: &Vector) {
        for (a, b) in self.0.iter_mut().zip(&rhs.0) {
            *a += b;
        }
    }
}

impl Add<&Vector> for &Vector {
    type Output = Vector;

    fn add(self, rhs: &Vector) -> Vector {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Mul<C64> for &Vector {
    type Output = Vector;

    fn mul(self, rhs: C64) -> Vector {
        self.scaled(rhs)
    }
}

impl Serialize for Vector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.0.iter().map(|c| [c.re, c.im]).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(Vector(pairs.into_iter().map(|[re, im]| C64::new(re, im)).collect()))
    }
}

/// Which constant an estimate bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantKind {
    Cotype,
    Kahane,
}

/// Empirical lower bound for `C_q(X)` or `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate {
    pub value: f64,
    pub kind: ConstantKind,
    pub trials: usize,
    pub seed: u64,
    pub is_lower_bound: bool,
    /// Number of vectors per sampled family.
    pub vectors: usize,
    pub space: SpaceDescriptor,
    /// Cotype exponent, for cotype estimates.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub q: Option<f64>,
}

/// Quadrature used for Steinhaus averages when the caller has no
/// preference: the exact two-point grid for squared Hilbert norms, an
/// adaptive grid otherwise.
pub fn default_steinhaus_quadrature(space: &SpaceDescriptor, power: f64) -> Quadrature {
    if power == 2.0 && space.is_hilbert() {
        // ‖Σ x_k z_k‖² has exponents in {-1, 0, 1} per axis
        Quadrature::Grid { points_per_axis: 2 }
    } else {
        Quadrature::default()
    }
}

/// `∫_{T^N} ‖Σ x_k z_k‖^p dz` (no root taken).
pub fn steinhaus_integral(
    space: &SpaceDescriptor,
    vectors: &[Vector],
    power: f64,
    quad: &Quadrature,
) -> Result<Integral> {
    if vectors.is_empty() {
        return Err(Error::InvalidInput("Steinhaus average of an empty family".into()));
    }
    if power.is_nan() || power < 1.0 {
        return Err(Error::InvalidInput(format!("power must be at least 1, got {power}")));
    }
    for v in vectors {
        space.check(v)?;
    }
    let dim = space.dim;
    let integrand = |z: &[C64]| {
        let mut acc = [C64::new(0.0, 0.0); 8];
        let mut heap;
        let buf: &mut [C64] = if dim <= 8 {
            &mut acc[..dim]
        } else {
            heap = vec![C64::new(0.0, 0.0); dim];
            &mut heap
        };
        for (x, zk) in vectors.iter().zip(z) {
            for (b, c) in buf.iter_mut().zip(&x.0) {
                *b += c * zk;
            }
        }
        let n = space.norm(buf);
        if power == 2.0 {
            n * n
        } else if power == 1.0 {
            n
        } else {
            n.powf(power)
        }
    };
    // ‖Σ x_k (λ z_k)‖ = ‖Σ x_k z_k‖ for |λ| = 1
    quad.integrate_rotation_invariant(vectors.len(), integrand)
}

/// `(∫_{T^N} ‖Σ x_k z_k‖^p dz)^{1/p}`.
pub fn steinhaus_average(space: &SpaceDescriptor, vectors: &[Vector], power: f64, quad: &Quadrature) -> Result<f64> {
    Ok(steinhaus_integral(space, vectors, power, quad)?.value.powf(1.0 / power))
}

/// `(Σ ‖x_k‖^q)^{1/q}`.
pub fn lq_sum(space: &SpaceDescriptor, vectors: &[Vector], q: f64) -> f64 {
    let norms: Vec<f64> = vectors.iter().map(|v| space.norm(&v.0)).collect();
    power_sum_root(&norms, q)
}

/// `(Σ t_k^q)^{1/q}` for nonnegative `t`, scaled to avoid overflow.
pub(crate) fn power_sum_root(terms: &[f64], q: f64) -> f64 {
    let big = terms.iter().copied().fold(0.0, f64::max);
    if big == 0.0 {
        return 0.0;
    }
    big * terms.iter().map(|t| (t / big).powf(q)).sum::<f64>().powf(1.0 / q)
}

/// Family of `count` random vectors for trial `trial` of `seed`.
pub fn random_family(space: &SpaceDescriptor, count: usize, seed: u64, trial: u64) -> Vec<Vector> {
    let mut r = rng::stream(seed, trial);
    (0..count).map(|_| Vector::random_disc(&mut r, space.dim)).collect()
}

/// `(Σ‖x_k‖^q)^{1/q} / (∫‖Σ x_k z_k‖²)^{1/2}` for one family.
pub fn cotype_ratio(space: &SpaceDescriptor, vectors: &[Vector], q: f64, quad: &Quadrature) -> Result<f64> {
    let rhs = steinhaus_average(space, vectors, 2.0, quad)?;
    let lhs = lq_sum(space, vectors, q);
    if rhs == 0.0 {
        return Ok(if lhs == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(lhs / rhs)
}

/// `(∫‖Σ x_k z_k‖²)^{1/2} / ∫‖Σ x_k z_k‖` for one family.
pub fn kahane_ratio(space: &SpaceDescriptor, vectors: &[Vector], l2: &Quadrature, l1: &Quadrature) -> Result<f64> {
    let num = steinhaus_average(space, vectors, 2.0, l2)?;
    let den = steinhaus_average(space, vectors, 1.0, l1)?;
    if den == 0.0 {
        return Ok(if num == 0.0 { 1.0 } else { f64::INFINITY });
    }
    Ok(num / den)
}

fn check_trials(trials: usize, vectors: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidInput("at least one trial is required".into()));
    }
    if vectors == 0 {
        return Err(Error::InvalidInput("families need at least one vector".into()));
    }
    Ok(())
}

/// Lower bound for `C_q(X)`: the largest cotype ratio over `trials`
/// random families of `vectors` vectors. Trial `t` always draws the same
/// family, so the estimate is nondecreasing in `trials`.
pub fn estimate_cotype_constant(
    space: &SpaceDescriptor,
    q: f64,
    vectors: usize,
    trials: usize,
    seed: u64,
) -> Result<ConstantEstimate> {
    if q.is_nan() || q < 2.0 {
        return Err(Error::InvalidInput(format!("cotype exponent must be at least 2, got {q}")));
    }
    check_trials(trials, vectors)?;
    let quad = default_steinhaus_quadrature(space, 2.0);
    let ratios: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| cotype_ratio(space, &random_family(space, vectors, seed, t as u64), q, &quad))
        .collect::<Result<_>>()?;
    Ok(ConstantEstimate {
        value: ratios.into_iter().fold(0.0, f64::max),
        kind: ConstantKind::Cotype,
        trials,
        seed,
        is_lower_bound: true,
        vectors,
        space: *space,
        q: Some(q),
    })
}

/// Lower bound for the Kahane constant `K` comparing `L_2` and `L_1`
/// Steinhaus averages. Always at least 1.
pub fn estimate_kahane_constant(
    space: &SpaceDescriptor,
    vectors: usize,
    trials: usize,
    seed: u64,
) -> Result<ConstantEstimate> {
    check_trials(trials, vectors)?;
    let l2 = default_steinhaus_quadrature(space, 2.0);
    let l1 = default_steinhaus_quadrature(space, 1.0);
    let ratios: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| kahane_ratio(space, &random_family(space, vectors, seed, t as u64), &l2, &l1))
        .collect::<Result<_>>()?;
    Ok(ConstantEstimate {
        // the single vector family has ratio exactly 1
        value: ratios.into_iter().fold(1.0, f64::max),
        kind: ConstantKind::Kahane,
        trials,
        seed,
        is_lower_bound: true,
        vectors,
        space: *space,
        q: None,
    })
}
