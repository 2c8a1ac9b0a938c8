//! Polynomials `Σ c_α z^α` on `ℂ^N` with coefficients in `X = ℓ_q^d`.
//!
//! Homogeneous parts, polarization to the symmetric `m`-linear form,
//! and `L_p(T^N, X)` norms.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::multiindex::{enumerate_homogeneous, factorial, MultiIndex};
use crate::spaces::{power_sum_root, SpaceDescriptor, Vector};
use crate::torus::{Integral, Quadrature};
use crate::{Error, Result, C64};

/// Polynomial in `vars` variables with coefficients in `space`.
///
/// Invariants: every coefficient has `space.dim` entries, every support
/// position is at most `vars`, and no zero coefficient is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorPoly {
    space: SpaceDescriptor,
    vars: usize,
    coeffs: BTreeMap<MultiIndex, Vector>,
}

impl VectorPoly {
    pub fn zero(space: SpaceDescriptor, vars: usize) -> Self {
        Self { space, vars, coeffs: BTreeMap::new() }
    }

    pub fn from_terms(
        space: SpaceDescriptor,
        vars: usize,
        terms: impl IntoIterator<Item = (MultiIndex, Vector)>,
    ) -> Result<Self> {
        let mut p = Self::zero(space, vars);
        for (alpha, c) in terms {
            p.add_term(alpha, &c)?;
        }
        Ok(p)
    }

    /// Scalar polynomial from `(dense exponents, coefficient)` pairs.
    pub fn scalar(vars: usize, terms: &[(&[u32], C64)]) -> Result<Self> {
        Self::from_terms(
            SpaceDescriptor::scalar(),
            vars,
            terms.iter().map(|(a, c)| (MultiIndex::from_dense(a), Vector::scalar(*c))),
        )
    }

    /// `self += c z^α`.
    pub fn add_term(&mut self, alpha: MultiIndex, c: &Vector) -> Result<()> {
        self.space.check(c)?;
        if alpha.max_position() > self.vars {
            return Err(Error::InvalidInput(format!("multi-index {alpha} uses a variable beyond N = {}", self.vars)));
        }
        match self.coeffs.entry(alpha) {
            Entry::Vacant(slot) => {
                if !c.is_zero() {
                    slot.insert(c.clone());
                }
            }
            Entry::Occupied(mut slot) => {
                *slot.get_mut() += c;
                if slot.get().is_zero() {
                    slot.remove();
                }
            }
        }
        Ok(())
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn coeffs(&self) -> &BTreeMap<MultiIndex, Vector> {
        &self.coeffs
    }

    /// `f̂(α)`, zero outside the support.
    pub fn coeff(&self, alpha: &MultiIndex) -> Vector {
        self.coeffs.get(alpha).cloned().unwrap_or_else(|| Vector::zeros(self.space.dim))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Total degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.coeffs.keys().map(MultiIndex::degree).max()
    }

    /// Largest exponent of any single variable.
    pub fn max_axis_degree(&self) -> u32 {
        self.coeffs.keys().flat_map(|a| a.pairs().iter().map(|&(_, e)| e)).max().unwrap_or(0)
    }

    /// The common degree of all terms; `Some(0)` for the zero polynomial.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let mut degrees = self.coeffs.keys().map(MultiIndex::degree);
        match degrees.next() {
            None => Some(0),
            Some(m) => degrees.all(|d| d == m).then_some(m),
        }
    }

    /// Same polynomial regarded in `vars` variables.
    pub fn with_vars(&self, vars: usize) -> Result<Self> {
        if self.coeffs.keys().any(|a| a.max_position() > vars) {
            return Err(Error::InvalidInput(format!("support does not fit in {vars} variables")));
        }
        Ok(Self { vars, ..self.clone() })
    }

    /// `P(z) = Σ c_α z^α`, summed in multi-index order.
    pub fn evaluate(&self, z: &[C64]) -> Result<Vector> {
        if z.len() != self.vars {
            return Err(Error::ArityMismatch { expected: self.vars, got: z.len() });
        }
        let mut out = Vector::zeros(self.space.dim);
        self.evaluate_into(z, &mut out.0);
        Ok(out)
    }

    /// Unchecked evaluation into a caller-provided buffer (overwritten).
    /// `z` may be longer than `vars`.
    pub(crate) fn evaluate_into(&self, z: &[C64], out: &mut [C64]) {
        for o in out.iter_mut() {
            *o = C64::new(0.0, 0.0);
        }
        for (alpha, c) in &self.coeffs {
            let w = monomial(alpha, z);
            for (o, x) in out.iter_mut().zip(&c.0) {
                *o += x * w;
            }
        }
    }

    /// `‖P(z)‖_X`.
    pub fn norm_at(&self, z: &[C64]) -> f64 {
        let dim = self.space.dim;
        let mut stack = [C64::new(0.0, 0.0); 8];
        if dim <= 8 {
            self.evaluate_into(z, &mut stack[..dim]);
            self.space.norm(&stack[..dim])
        } else {
            let mut buf = vec![C64::new(0.0, 0.0); dim];
            self.evaluate_into(z, &mut buf);
            self.space.norm(&buf)
        }
    }

    /// `Φ_m f`: the terms with `|α| = m`.
    pub fn homogeneous_projection(&self, m: u32) -> VectorPoly {
        Self {
            space: self.space,
            vars: self.vars,
            coeffs: self.coeffs.iter().filter(|(a, _)| a.degree() == m).map(|(a, c)| (a.clone(), c.clone())).collect(),
        }
    }

    /// All nonzero homogeneous parts keyed by degree.
    pub fn homogeneous_parts(&self) -> BTreeMap<u32, VectorPoly> {
        let mut parts: BTreeMap<u32, VectorPoly> = BTreeMap::new();
        for (a, c) in &self.coeffs {
            parts
                .entry(a.degree())
                .or_insert_with(|| VectorPoly::zero(self.space, self.vars))
                .coeffs
                .insert(a.clone(), c.clone());
        }
        parts
    }

    /// `z ↦ f(w_1 z_1, …, w_N z_N)`.
    pub fn rotate(&self, w: &[C64]) -> Result<VectorPoly> {
        if w.len() != self.vars {
            return Err(Error::ArityMismatch { expected: self.vars, got: w.len() });
        }
        let coeffs = self
            .coeffs
            .iter()
            .map(|(a, c)| (a.clone(), c.scaled(monomial(a, w))))
            .filter(|(_, c)| !c.is_zero())
            .collect();
        Ok(Self { coeffs, ..self.clone() })
    }

    /// `z ↦ f(r z)` for a scalar `r`.
    pub fn dilate(&self, r: C64) -> VectorPoly {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(a, c)| (a.clone(), c.scaled(r.powu(a.degree()))))
            .filter(|(_, c)| !c.is_zero())
            .collect();
        Self { coeffs, ..self.clone() }
    }

    /// Relabels variables: variable `j` becomes `perm[j-1]`.
    pub fn permute_vars(&self, perm: &[usize]) -> Result<VectorPoly> {
        if perm.len() != self.vars {
            return Err(Error::ArityMismatch { expected: self.vars, got: perm.len() });
        }
        let mut out = Self::zero(self.space, self.vars);
        for (a, c) in &self.coeffs {
            out.add_term(a.relabel(|j| perm[j - 1])?, c)?;
        }
        Ok(out)
    }

    /// `(∫_{T^N} ‖f(z)‖_X^p dz)^{1/p}`.
    pub fn lp_norm(&self, p: f64, quad: &Quadrature) -> Result<f64> {
        Ok(self.lp_integral(p, quad)?.value.max(0.0).powf(1.0 / p))
    }

    /// `∫_{T^N} ‖f(z)‖_X^p dz` with the quadrature's error indicators.
    /// Variables that do not occur are dropped first; homogeneous
    /// polynomials are integrated over `T^{N-1}`, their norm being
    /// invariant under `z ↦ λz`.
    pub fn lp_integral(&self, p: f64, quad: &Quadrature) -> Result<Integral> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidInput(format!("L_p norm needs p ≥ 1, got {p}")));
        }
        let integrand = |z: &[C64]| {
            let n = self.norm_at(z);
            if p == 1.0 {
                n
            } else if p == 2.0 {
                n * n
            } else {
                n.powf(p)
            }
        };
        if let Some(compact) = self.without_unused_vars() {
            return compact.lp_integral(p, quad);
        }
        if self.homogeneous_degree().is_some() {
            quad.integrate_rotation_invariant(self.vars, integrand)
        } else {
            quad.integrate(self.vars, integrand)
        }
    }

    /// The same polynomial over only the variables that occur, renumbered
    /// in order; `None` when every variable occurs.
    fn without_unused_vars(&self) -> Option<VectorPoly> {
        let mut used = vec![false; self.vars];
        for a in self.coeffs.keys() {
            for &(pos, _) in a.pairs() {
                used[pos - 1] = true;
            }
        }
        if used.iter().all(|&u| u) {
            return None;
        }
        let mut rank = vec![0; self.vars];
        let mut next = 0;
        for (r, &u) in rank.iter_mut().zip(&used) {
            if u {
                next += 1;
                *r = next;
            }
        }
        let coeffs = self
            .coeffs
            .iter()
            .map(|(a, c)| (a.relabel(|j| rank[j - 1]).expect("ranks are positive"), c.clone()))
            .collect();
        Some(Self { space: self.space, vars: next, coeffs })
    }

    /// Points per axis that make a fixed grid exact for `‖f‖²` when `X`
    /// is a Hilbert space.
    pub fn exact_grid_size(&self) -> usize {
        self.max_axis_degree() as usize + 1
    }

    /// The exact grid for `‖f‖_2` in a Hilbert space, an adaptive grid
    /// otherwise.
    pub fn default_quadrature(&self, p: f64) -> Quadrature {
        if p == 2.0 && self.space.is_hilbert() {
            Quadrature::Grid { points_per_axis: self.exact_grid_size() }
        } else {
            Quadrature::default()
        }
    }

    /// `Σ_α ‖c_α‖_X · Π_j w_j^{α_j r}`, with `weights[j-1]` the weight of
    /// variable `j`.
    pub fn coefficient_norm_sum(&self, weights: &[f64], r: f64) -> Result<f64> {
        let mut terms = Vec::with_capacity(self.coeffs.len());
        for (alpha, c) in &self.coeffs {
            let mut w = 1.0;
            for &(pos, e) in alpha.pairs() {
                let wj = *weights
                    .get(pos - 1)
                    .ok_or_else(|| Error::PreconditionViolated(format!("no weight for variable {pos}")))?;
                w *= wj.powf(e as f64 * r);
            }
            terms.push(self.space.norm(&c.0) * w);
        }
        Ok(crate::sum::compensated_sum(terms))
    }

    /// Random polynomial: each listed multi-index gets a coefficient with
    /// entries uniform in the unit disc.
    pub fn random_on<R: Rng + ?Sized>(
        rng: &mut R,
        space: SpaceDescriptor,
        vars: usize,
        support: &[MultiIndex],
    ) -> Result<Self> {
        Self::from_terms(space, vars, support.iter().map(|a| (a.clone(), Vector::random_disc(rng, space.dim))))
    }

    /// Random `m`-homogeneous polynomial with full support.
    pub fn random_homogeneous<R: Rng + ?Sized>(
        rng: &mut R,
        space: SpaceDescriptor,
        vars: usize,
        m: u32,
    ) -> Result<Self> {
        Self::random_on(rng, space, vars, &enumerate_homogeneous(vars, m)?)
    }
}

/// `z^α`; positions beyond `z.len()` count as zero.
pub(crate) fn monomial(alpha: &MultiIndex, z: &[C64]) -> C64 {
    let mut w = C64::new(1.0, 0.0);
    for &(pos, e) in alpha.pairs() {
        match z.get(pos - 1) {
            Some(zj) => w *= zj.powu(e),
            None => return C64::new(0.0, 0.0),
        }
    }
    w
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    alpha: MultiIndex,
    value: Vector,
}

#[derive(Serialize, Deserialize)]
struct PolyJson {
    space: SpaceDescriptor,
    #[serde(rename = "N")]
    vars: usize,
    coeffs: Vec<TermJson>,
}

impl Serialize for VectorPoly {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PolyJson {
            space: self.space,
            vars: self.vars,
            coeffs: self.coeffs.iter().map(|(a, c)| TermJson { alpha: a.clone(), value: c.clone() }).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for VectorPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = PolyJson::deserialize(d)?;
        VectorPoly::from_terms(raw.space, raw.vars, raw.coeffs.into_iter().map(|t| (t.alpha, t.value)))
            .map_err(serde::de::Error::custom)
    }
}

/// How [`polarize`] computes the symmetric form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolarizationMethod {
    /// `a_{i_1…i_m} = c_α α!/m!` read off the coefficients.
    Coefficient,
    /// `T(e_{i_1},…,e_{i_m}) = 1/(2^m m!) Σ_ε ε_1⋯ε_m P(Σ_k ε_k e_{i_k})`.
    SignSum,
}

/// Symmetric `m`-linear form on `(ℂ^N)^m` with values in `X`.
///
/// Only sorted index tuples `i_1 ≤ ⋯ ≤ i_m` are stored; the full array
/// repeats each entry over the distinct orderings of its tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMultilinearForm {
    space: SpaceDescriptor,
    vars: usize,
    degree: u32,
    entries: BTreeMap<Vec<usize>, Vector>,
}

impl SymMultilinearForm {
    pub fn new(space: SpaceDescriptor, vars: usize, degree: u32) -> Self {
        Self { space, vars, degree, entries: BTreeMap::new() }
    }

    /// Sets the entry for `tuple` (any order) to `value`.
    pub fn set(&mut self, tuple: &[usize], value: Vector) -> Result<()> {
        if tuple.len() != self.degree as usize {
            return Err(Error::ArityMismatch { expected: self.degree as usize, got: tuple.len() });
        }
        if tuple.iter().any(|&i| i == 0 || i > self.vars) {
            return Err(Error::InvalidInput(format!("index tuple {tuple:?} out of range 1..={}", self.vars)));
        }
        self.space.check(&value)?;
        let mut key = tuple.to_vec();
        key.sort_unstable();
        if value.is_zero() {
            self.entries.remove(&key);
        } else {
            self.entries.insert(key, value);
        }
        Ok(())
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// `a_{i_1…i_m}` for any ordering of the indices.
    pub fn entry(&self, tuple: &[usize]) -> Vector {
        let mut key = tuple.to_vec();
        key.sort_unstable();
        self.entries.get(&key).cloned().unwrap_or_else(|| Vector::zeros(self.space.dim))
    }

    /// Stored entries with their multiplicity `m!/(k_1!⋯)` in the full array.
    pub fn entries_with_multiplicity(&self) -> impl Iterator<Item = (&[usize], &Vector, f64)> {
        self.entries.iter().map(|(k, v)| (k.as_slice(), v, tuple_multiplicity(k)))
    }

    /// `(Σ_{i_1,…,i_m} ‖a_{i_1…i_m}‖^q)^{1/q}` over the full array.
    pub fn lq_array_norm(&self, q: f64) -> f64 {
        let terms: Vec<f64> =
            self.entries_with_multiplicity().map(|(_, v, mult)| self.space.norm(&v.0) * mult.powf(1.0 / q)).collect();
        power_sum_root(&terms, q)
    }

    /// `T(z^{(1)}, …, z^{(m)}) = Σ a_{i_1…i_m} z^{(1)}_{i_1} ⋯ z^{(m)}_{i_m}`.
    pub fn evaluate(&self, points: &[Vec<C64>]) -> Result<Vector> {
        let slices: Vec<&[C64]> = points.iter().map(Vec::as_slice).collect();
        self.evaluate_slices(&slices)
    }

    pub fn evaluate_slices(&self, points: &[&[C64]]) -> Result<Vector> {
        if points.len() != self.degree as usize {
            return Err(Error::ArityMismatch { expected: self.degree as usize, got: points.len() });
        }
        if let Some(bad) = points.iter().find(|z| z.len() != self.vars) {
            return Err(Error::ArityMismatch { expected: self.vars, got: bad.len() });
        }
        let mut out = Vector::zeros(self.space.dim);
        self.evaluate_into(points, &mut out.0);
        Ok(out)
    }

    pub(crate) fn evaluate_into(&self, points: &[&[C64]], out: &mut [C64]) {
        for o in out.iter_mut() {
            *o = C64::new(0.0, 0.0);
        }
        let mut perm = Vec::with_capacity(self.degree as usize);
        for (key, value) in &self.entries {
            // sum over the distinct orderings of the multiset `key`
            perm.clear();
            perm.extend_from_slice(key);
            let mut weight = C64::new(0.0, 0.0);
            loop {
                let mut w = C64::new(1.0, 0.0);
                for (z, &i) in points.iter().zip(&perm) {
                    w *= z[i - 1];
                }
                weight += w;
                if !next_permutation(&mut perm) {
                    break;
                }
            }
            for (o, x) in out.iter_mut().zip(&value.0) {
                *o += x * weight;
            }
        }
    }

    /// Random symmetric form with entries uniform in the unit disc.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, space: SpaceDescriptor, vars: usize, degree: u32) -> Result<Self> {
        let mut form = Self::new(space, vars, degree);
        for alpha in enumerate_homogeneous(vars, degree)? {
            form.set(&alpha.to_tuple(), Vector::random_disc(rng, space.dim))?;
        }
        Ok(form)
    }
}

/// Number of distinct orderings of a sorted tuple.
fn tuple_multiplicity(sorted: &[usize]) -> f64 {
    let mut denom = 1.0;
    let mut run = 0u32;
    for (k, i) in sorted.iter().enumerate() {
        if k > 0 && sorted[k - 1] == *i {
            run += 1;
        } else {
            denom *= factorial(run);
            run = 1;
        }
    }
    denom *= factorial(run);
    factorial(sorted.len() as u32) / denom
}

/// Lexicographic successor; false when `v` is the last permutation.
fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// The unique symmetric `m`-linear form `T` with `T(z, …, z) = P(z)`.
pub fn polarize(p: &VectorPoly, method: PolarizationMethod) -> Result<SymMultilinearForm> {
    let m = p.homogeneous_degree().ok_or(Error::NotHomogeneous)?;
    let mut form = SymMultilinearForm::new(*p.space(), p.vars(), m);
    match method {
        PolarizationMethod::Coefficient => {
            let m_fact = factorial(m);
            for (alpha, c) in p.coeffs() {
                form.set(&alpha.to_tuple(), c.scaled(C64::new(alpha.factorial() / m_fact, 0.0)))?;
            }
        }
        PolarizationMethod::SignSum => {
            if p.is_zero() {
                return Ok(form);
            }
            let scale = 1.0 / (2f64.powi(m as i32) * factorial(m));
            let mut point = vec![C64::new(0.0, 0.0); p.vars()];
            for alpha in enumerate_homogeneous(p.vars(), m)? {
                let tuple = alpha.to_tuple();
                let mut acc = Vector::zeros(p.space().dim);
                for signs in 0u32..(1 << m) {
                    point.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
                    let mut sign = 1.0;
                    for (k, &i) in tuple.iter().enumerate() {
                        let eps = if signs >> k & 1 == 1 { -1.0 } else { 1.0 };
                        sign *= eps;
                        point[i - 1] += eps;
                    }
                    acc.axpy(C64::new(sign, 0.0), &p.evaluate(&point)?);
                }
                form.set(&tuple, acc.scaled(C64::new(scale, 0.0)))?;
            }
        }
    }
    Ok(form)
}
