//! Randomized verification of the cotype, polarization and weighted
//! coefficient inequalities at finite truncation.
//!
//! Every check compares a left-hand side with a right-hand side built from
//! explicitly supplied constants. A comparison is recorded as [`Sides`];
//! its guarded ratio
//!
//! ```text
//! lhs·(1 - lhs_rel_tol) / (rhs·(1 + rhs_rel_tol) + 3·stderr)
//! ```
//!
//! is at most 1 exactly when the inequality holds within the quadrature's
//! error indicators. A report passes when its worst guarded ratio is at
//! most 1.
//!
//! ```
//! use bohrlab::inequalities::{check_cotype, Constants, TrialConfig};
//! use bohrlab::spaces::SpaceDescriptor;
//!
//! let cfg = TrialConfig::new(SpaceDescriptor::scalar(), 2.0, 1, 3).with_trials(20);
//! let report = check_cotype(&cfg, &Constants::supplied(1.0, 1.0)).unwrap();
//! assert!(report.pass);
//! assert!((report.raw_worst_ratio - 1.0).abs() < 1e-12);
//! ```

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::multiindex::{factorial, MultiIndex, PrimeTable};
use crate::polys::{polarize, PolarizationMethod, SymMultilinearForm, VectorPoly};
use crate::rng::{self, derive_seed};
use crate::spaces::{
    default_steinhaus_quadrature, estimate_cotype_constant, estimate_kahane_constant, lq_sum, random_family,
    steinhaus_integral, ConstantEstimate, SpaceDescriptor, Vector,
};
use crate::torus::{Integral, Quadrature, ROUNDING_TOL};
use crate::{Error, Result, C64};

pub const DEFAULT_SAFETY_FACTOR: f64 = 1.05;

/// Largest number of circle variables integrated jointly.
pub const MAX_JOINT_DIMS: usize = 24;

/// Samples for joint integrals over `(T^N)^m` beyond three free axes.
pub const JOINT_SAMPLES: usize = 1 << 14;

/// One comparison `lhs ≤ rhs` with error indicators on both sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sides {
    pub lhs: f64,
    pub rhs: f64,
    /// Combined Monte Carlo standard error of both sides.
    pub stderr: f64,
    pub lhs_rel_tol: f64,
    pub rhs_rel_tol: f64,
}

impl Sides {
    /// Both sides known up to rounding.
    pub fn exact(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, stderr: 0.0, lhs_rel_tol: ROUNDING_TOL, rhs_rel_tol: ROUNDING_TOL }
    }

    /// `lhs` known up to rounding, `rhs = scale · I^{1/power}`.
    pub fn against_integral(lhs: f64, scale: f64, rhs: &Integral, power: f64) -> Self {
        let (v, se, rel) = root(rhs, power);
        Self { lhs, rhs: scale * v, stderr: scale * se, lhs_rel_tol: ROUNDING_TOL, rhs_rel_tol: rel }
    }

    /// `lhs_scale · L^{1/power}` against `rhs_scale · R^{1/power}`.
    pub fn between_integrals(lhs_scale: f64, lhs: &Integral, rhs_scale: f64, rhs: &Integral, power: f64) -> Self {
        let (lv, lse, lrel) = root(lhs, power);
        let (rv, rse, rrel) = root(rhs, power);
        Self {
            lhs: lhs_scale * lv,
            rhs: rhs_scale * rv,
            stderr: (lhs_scale * lse).hypot(rhs_scale * rse),
            lhs_rel_tol: lrel,
            rhs_rel_tol: rrel,
        }
    }

    pub fn guarded_ratio(&self) -> f64 {
        let num = (self.lhs * (1.0 - self.lhs_rel_tol)).max(0.0);
        let den = self.rhs * (1.0 + self.rhs_rel_tol) + 3.0 * self.stderr;
        quotient(num, den)
    }

    pub fn raw_ratio(&self) -> f64 {
        quotient(self.lhs, self.rhs)
    }
}

fn quotient(num: f64, den: f64) -> f64 {
    let r = if num == 0.0 {
        0.0
    } else if den <= 0.0 {
        f64::INFINITY
    } else {
        num / den
    };
    if r.is_nan() {
        f64::INFINITY
    } else {
        r
    }
}

/// `(I^{1/p}, stderr, rel_tol)` by the delta method.
fn root(i: &Integral, p: f64) -> (f64, f64, f64) {
    let v = i.value.max(0.0);
    let root = v.powf(1.0 / p);
    let se = if v > 0.0 { root / (p * v) * i.stderr } else { i.stderr.powf(1.0 / p) };
    (root, se, (1.0 + i.rel_tol).powf(1.0 / p) - 1.0)
}

/// One comparison inside a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// Trial index; the instance is regenerated from `(seed, index)`.
    pub index: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(with = "crate::serde_ext::real")]
    pub lhs: f64,
    #[serde(with = "crate::serde_ext::real")]
    pub rhs: f64,
    #[serde(with = "crate::serde_ext::real")]
    pub stderr: f64,
    #[serde(with = "crate::serde_ext::real")]
    pub ratio: f64,
    #[serde(with = "crate::serde_ext::real")]
    pub raw_ratio: f64,
}

impl TrialRecord {
    pub fn new(index: u64, label: Option<String>, sides: Sides) -> Self {
        Self {
            index,
            label,
            lhs: sides.lhs,
            rhs: sides.rhs,
            stderr: sides.stderr,
            ratio: sides.guarded_ratio(),
            raw_ratio: sides.raw_ratio(),
        }
    }
}

/// A constant entering a right-hand side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantUsed {
    /// `"C"` for the cotype constant, `"K"` for the Kahane constant.
    pub name: String,
    pub value: f64,
    /// The empirical estimate `value` was derived from, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<ConstantEstimate>,
}

/// Cotype and Kahane constants fed to the checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Constants {
    pub cotype: f64,
    pub kahane: f64,
    pub safety_factor: f64,
    pub estimates: Option<(ConstantEstimate, ConstantEstimate)>,
}

impl Constants {
    pub fn supplied(cotype: f64, kahane: f64) -> Self {
        Self { cotype, kahane, safety_factor: 1.0, estimates: None }
    }

    /// Empirical lower bounds for `C_q(X)` and `K` over families of
    /// `vectors` vectors, each multiplied by `safety_factor`.
    pub fn estimate(
        space: &SpaceDescriptor,
        q: f64,
        vectors: usize,
        trials: usize,
        seed: u64,
        safety_factor: f64,
    ) -> Result<Self> {
        if !(safety_factor >= 1.0) {
            return Err(Error::InvalidInput(format!("safety factor must be at least 1, got {safety_factor}")));
        }
        let c = estimate_cotype_constant(space, q, vectors, trials, derive_seed(seed, TAG_ESTIMATE_C))?;
        let k = estimate_kahane_constant(space, vectors, trials, derive_seed(seed, TAG_ESTIMATE_K))?;
        Ok(Self {
            cotype: c.value * safety_factor,
            kahane: k.value * safety_factor,
            safety_factor,
            estimates: Some((c, k)),
        })
    }

    fn used(&self, cotype: bool, kahane: bool) -> Vec<ConstantUsed> {
        let (ce, ke) = match &self.estimates {
            Some((c, k)) => (Some(c.clone()), Some(k.clone())),
            None => (None, None),
        };
        let mut out = Vec::new();
        if cotype {
            out.push(ConstantUsed { name: "C".into(), value: self.cotype, estimate: ce });
        }
        if kahane {
            out.push(ConstantUsed { name: "K".into(), value: self.kahane, estimate: ke });
        }
        out
    }
}

/// Structured result of a verification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub version: String,
    pub trials: usize,
    pub seed: u64,
    /// Largest guarded ratio.
    #[serde(with = "crate::serde_ext::real")]
    pub worst_ratio: f64,
    /// Largest plain `lhs / rhs`.
    #[serde(with = "crate::serde_ext::real")]
    pub raw_worst_ratio: f64,
    pub constants: Vec<ConstantUsed>,
    pub safety_factor: f64,
    pub pass: bool,
    pub worst_trial: Option<TrialRecord>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub diagnostics: BTreeMap<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<TrialRecord>,
}

impl InequalityReport {
    /// Report over `records`; the worst record is the first one attaining
    /// the largest guarded ratio.
    pub fn from_records(
        name: &str,
        seed: u64,
        trials: usize,
        constants: Vec<ConstantUsed>,
        safety_factor: f64,
        records: Vec<TrialRecord>,
        keep_records: bool,
    ) -> Self {
        let mut worst: Option<&TrialRecord> = None;
        let mut raw_worst = 0.0f64;
        for r in &records {
            if worst.is_none_or(|w| r.ratio > w.ratio) {
                worst = Some(r);
            }
            raw_worst = raw_worst.max(r.raw_ratio);
        }
        let worst_ratio = worst.map_or(0.0, |w| w.ratio);
        Self {
            name: name.to_string(),
            version: version(),
            trials,
            seed,
            worst_ratio,
            raw_worst_ratio: raw_worst,
            constants,
            safety_factor,
            pass: worst_ratio <= 1.0,
            worst_trial: worst.cloned(),
            diagnostics: BTreeMap::new(),
            records: if keep_records { records } else { Vec::new() },
        }
    }

    /// Combines two runs of the same check: trial counts add, the worst
    /// record is kept (ties favour `self`).
    pub fn merge(mut self, other: InequalityReport) -> Self {
        self.trials += other.trials;
        if other.worst_ratio > self.worst_ratio {
            self.worst_ratio = other.worst_ratio;
            self.worst_trial = other.worst_trial;
        }
        self.raw_worst_ratio = self.raw_worst_ratio.max(other.raw_worst_ratio);
        for c in other.constants {
            if !self.constants.contains(&c) {
                self.constants.push(c);
            }
        }
        for (k, v) in other.diagnostics {
            self.diagnostics.entry(k).or_insert(v);
        }
        self.records.extend(other.records);
        self.pass = self.worst_ratio <= 1.0;
        self
    }

    fn with_diagnostic(mut self, key: &str, value: impl Serialize) -> Self {
        if let Ok(v) = serde_json::to_value(value) {
            self.diagnostics.insert(key.to_string(), v);
        }
        self
    }
}

fn version() -> String {
    format!("bohrlab {}", env!("CARGO_PKG_VERSION"))
}

/// Parameters shared by the randomized suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub space: SpaceDescriptor,
    /// Cotype exponent.
    pub q: f64,
    /// Degree.
    pub m: u32,
    /// Number of variables (or vectors).
    #[serde(rename = "N")]
    pub vars: usize,
    pub trials: usize,
    pub seed: u64,
    /// Overrides the per-check default quadrature.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<Quadrature>,
    pub safety_factor: f64,
    #[serde(default)]
    pub keep_records: bool,
}

impl TrialConfig {
    pub fn new(space: SpaceDescriptor, q: f64, m: u32, vars: usize) -> Self {
        Self {
            space,
            q,
            m,
            vars,
            trials: 1000,
            seed: 0,
            quadrature: None,
            safety_factor: DEFAULT_SAFETY_FACTOR,
            keep_records: false,
        }
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_quadrature(mut self, quad: Quadrature) -> Self {
        self.quadrature = Some(quad);
        self
    }

    pub fn with_records(mut self) -> Self {
        self.keep_records = true;
        self
    }

    pub fn validate(&self, cotype: bool) -> Result<()> {
        if cotype && !(self.q >= 2.0 && self.q.is_finite()) {
            return Err(Error::InvalidInput(format!("cotype exponent must be finite and at least 2, got {}", self.q)));
        }
        if self.m == 0 {
            return Err(Error::InvalidInput("degree m must be at least 1".into()));
        }
        if self.vars == 0 {
            return Err(Error::InvalidInput("N must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidInput("need at least one trial".into()));
        }
        if !(self.safety_factor >= 1.0) {
            return Err(Error::InvalidInput(format!("safety factor must be at least 1, got {}", self.safety_factor)));
        }
        Ok(())
    }

    /// Generator for trial `index` of the check identified by `tag`.
    pub fn trial_rng(&self, tag: u64, index: u64) -> ChaCha8Rng {
        rng::stream(derive_seed(self.seed, tag), index)
    }

    fn quad_or(&self, default: Quadrature) -> Quadrature {
        self.quadrature.unwrap_or(default)
    }

    fn report(&self, name: &str, constants: Vec<ConstantUsed>, records: Vec<TrialRecord>) -> InequalityReport {
        InequalityReport::from_records(
            name,
            self.seed,
            self.trials,
            constants,
            self.safety_factor,
            records,
            self.keep_records,
        )
    }
}

const TAG_COTYPE: u64 = 1;
const TAG_MULTILINEAR: u64 = 2;
const TAG_ROTATION: u64 = 3;
const TAG_SUM_SHIFT: u64 = 4;
const TAG_MAIN: u64 = 5;
const TAG_PROJECTION: u64 = 6;
const TAG_HOLDER: u64 = 7;
const TAG_WEIGHTED: u64 = 8;
const TAG_ESTIMATE_C: u64 = 101;
const TAG_ESTIMATE_K: u64 = 102;

fn run_trials<F>(cfg: &TrialConfig, tag: u64, trial: F) -> Result<Vec<TrialRecord>>
where
    F: Fn(u64, &mut ChaCha8Rng) -> Result<Vec<TrialRecord>> + Sync,
{
    let per: Vec<Vec<TrialRecord>> =
        (0..cfg.trials as u64).into_par_iter().map(|t| trial(t, &mut cfg.trial_rng(tag, t))).collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

/// Quadrature for joint integrals over `dims` free axes.
pub fn joint_quadrature(dims: usize, seed: u64) -> Quadrature {
    if dims <= 3 {
        Quadrature::default()
    } else {
        Quadrature::MonteCarlo { samples: JOINT_SAMPLES, seed }
    }
}

fn check_joint_dims(dims: usize) -> Result<()> {
    if dims > MAX_JOINT_DIMS {
        return Err(Error::SizeExceeded { size: dims as u128, cap: MAX_JOINT_DIMS as u128 });
    }
    Ok(())
}

// ---------------------------------------------------------------- cotype

/// `(Σ‖x_k‖^q)^{1/q}` against `C (∫‖Σ x_k z_k‖²)^{1/2}`.
pub fn cotype_sides(space: &SpaceDescriptor, vectors: &[Vector], q: f64, c: f64, quad: &Quadrature) -> Result<Sides> {
    let lhs = lq_sum(space, vectors, q);
    let integral = steinhaus_integral(space, vectors, 2.0, quad)?;
    Ok(Sides::against_integral(lhs, c, &integral, 2.0))
}

/// Cotype inequality on random families of `cfg.vars` vectors.
pub fn check_cotype(cfg: &TrialConfig, constants: &Constants) -> Result<InequalityReport> {
    cfg.validate(true)?;
    let quad = cfg.quad_or(default_steinhaus_quadrature(&cfg.space, 2.0));
    let family_seed = derive_seed(cfg.seed, TAG_COTYPE);
    let records = run_trials(cfg, TAG_COTYPE, |t, _| {
        let vectors = random_family(&cfg.space, cfg.vars, family_seed, t);
        Ok(vec![TrialRecord::new(t, None, cotype_sides(&cfg.space, &vectors, cfg.q, constants.cotype, &quad)?)])
    })?;
    Ok(cfg.report("cotype", constants.used(true, false), records))
}

// ---------------------------------------------------- multilinear cotype

/// `∫…∫ ‖T(z^{(1)}, …, z^{(m)})‖ dz^{(1)}…dz^{(m)}` over `(T^N)^m`.
///
/// The norm is invariant under rotating each block separately, so the
/// first coordinate of every block is pinned to 1.
pub fn multilinear_integral(form: &SymMultilinearForm, quad: &Quadrature) -> Result<Integral> {
    let (n, m) = (form.vars(), form.degree() as usize);
    let free = n.saturating_sub(1);
    check_joint_dims(m * free)?;
    let space = *form.space();
    quad.integrate(m * free, |w| {
        let points: Vec<Vec<C64>> = (0..m)
            .map(|b| {
                let mut z = Vec::with_capacity(n);
                if n > 0 {
                    z.push(C64::new(1.0, 0.0));
                }
                z.extend_from_slice(&w[b * free..(b + 1) * free]);
                z
            })
            .collect();
        let slices: Vec<&[C64]> = points.iter().map(Vec::as_slice).collect();
        let mut out = vec![C64::new(0.0, 0.0); space.dim];
        form.evaluate_into(&slices, &mut out);
        space.norm(&out)
    })
}

/// `(Σ‖a_{i_1…i_m}‖^q)^{1/q}` against `(CK)^m ∫…∫‖T‖`.
pub fn multilinear_sides(form: &SymMultilinearForm, q: f64, c: f64, k: f64, quad: &Quadrature) -> Result<Sides> {
    let lhs = form.lq_array_norm(q);
    let integral = multilinear_integral(form, quad)?;
    Ok(Sides::against_integral(lhs, (c * k).powi(form.degree() as i32), &integral, 1.0))
}

/// Cotype inequality for random symmetric `m`-linear forms.
pub fn check_multilinear_cotype(cfg: &TrialConfig, constants: &Constants) -> Result<InequalityReport> {
    cfg.validate(true)?;
    let dims = cfg.m as usize * (cfg.vars - 1);
    check_joint_dims(dims)?;
    let quad = cfg.quad_or(joint_quadrature(dims, derive_seed(cfg.seed, TAG_MULTILINEAR)));
    let records = run_trials(cfg, TAG_MULTILINEAR, |t, r| {
        let form = SymMultilinearForm::random(r, cfg.space, cfg.vars, cfg.m)?;
        Ok(vec![TrialRecord::new(t, None, multilinear_sides(&form, cfg.q, constants.cotype, constants.kahane, &quad)?)])
    })?;
    Ok(cfg.report("multilinear-cotype", constants.used(true, true), records))
}

// ------------------------------------------------------------- rotation

fn as_univariate(f: &VectorPoly) -> Result<VectorPoly> {
    match f.vars() {
        0 => f.with_vars(1),
        1 => Ok(f.clone()),
        n => Err(Error::ArityMismatch { expected: 1, got: n }),
    }
}

/// `∫∫‖f(R_1 z_1 + R_2 z_2)‖` against `∫‖f(Rz)‖` for univariate `f`.
pub fn rotation_sides(f: &VectorPoly, r1: f64, r2: f64, r: f64, quad: &Quadrature) -> Result<Sides> {
    if [r1, r2, r].iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidInput(format!("radii must be finite and nonnegative, got {r1}, {r2}, {r}")));
    }
    // radii split as R·a + R·(1 - a) may overshoot R by rounding
    if r1 + r2 > r * (1.0 + 4.0 * f64::EPSILON) {
        return Err(Error::PreconditionViolated(format!("R1 + R2 = {} exceeds R = {r}", r1 + r2)));
    }
    let f = as_univariate(f)?;
    let lhs_integrand = |z: &[C64]| f.norm_at(&[z[0] * r1 + z[1] * r2]);
    let rhs_integrand = |z: &[C64]| f.norm_at(&[z[0] * r]);
    let (lhs, rhs) = if f.homogeneous_degree().is_some() {
        (quad.integrate_rotation_invariant(2, lhs_integrand)?, quad.integrate_rotation_invariant(1, rhs_integrand)?)
    } else {
        (quad.integrate(2, lhs_integrand)?, quad.integrate(1, rhs_integrand)?)
    };
    Ok(Sides::between_integrals(1.0, &lhs, 1.0, &rhs, 1.0))
}

/// Single instance of the rotation lemma.
pub fn check_rotation_lemma(f: &VectorPoly, r1: f64, r2: f64, r: f64, quad: &Quadrature) -> Result<InequalityReport> {
    let sides = rotation_sides(f, r1, r2, r, quad)?;
    Ok(InequalityReport::from_records(
        "rotation-lemma",
        0,
        1,
        Vec::new(),
        1.0,
        vec![TrialRecord::new(0, None, sides)],
        true,
    )
    .with_diagnostic("radii", [r1, r2, r]))
}

/// Rotation lemma for random univariate `f` of degree at most 4 and
/// random radii, half of them with `R_1 + R_2 = R`.
pub fn check_rotation_suite(cfg: &TrialConfig) -> Result<InequalityReport> {
    let quad = cfg.quad_or(Quadrature::default());
    let records = run_trials(cfg, TAG_ROTATION, |t, r| {
        let degree = r.gen_range(0..=4u32);
        let f = random_poly(r, cfg.space, 1, degree)?;
        let radius = r.gen_range(0.1..2.0);
        let (mut a, mut b): (f64, f64) = (r.gen(), r.gen());
        if a + b > 1.0 {
            (a, b) = (1.0 - a, 1.0 - b);
        }
        if t % 2 == 0 {
            b = 1.0 - a;
        }
        let sides = rotation_sides(&f, radius * a, radius * b, radius, &quad)?;
        Ok(vec![TrialRecord::new(t, None, sides)])
    })?;
    Ok(cfg.report("rotation-lemma", Vec::new(), records))
}

// ------------------------------------------------------------ sum shift

/// `∫…∫‖f(z^{(1)} + … + z^{(m)})‖` over `(T^N)^m`.
pub fn sum_shift_integral(f: &VectorPoly, m: usize, quad: &Quadrature) -> Result<Integral> {
    let n = f.vars();
    check_joint_dims(m * n)?;
    let integrand = |w: &[C64]| {
        let mut z = vec![C64::new(0.0, 0.0); n];
        for block in w.chunks(n.max(1)) {
            for (zj, wj) in z.iter_mut().zip(block) {
                *zj += wj;
            }
        }
        f.norm_at(&z)
    };
    if f.homogeneous_degree().is_some() {
        quad.integrate_rotation_invariant(m * n, integrand)
    } else {
        quad.integrate(m * n, integrand)
    }
}

/// `∫…∫‖f(z^{(1)} + … + z^{(m)})‖` against `∫‖f(mz)‖`. For `m = 1` both
/// sides are the same integral.
pub fn sum_shift_sides(f: &VectorPoly, m: usize, lhs_quad: &Quadrature, rhs_quad: &Quadrature) -> Result<Sides> {
    if m == 0 {
        return Err(Error::InvalidInput("m must be at least 1".into()));
    }
    let rhs = f.dilate(C64::new(m as f64, 0.0)).lp_integral(1.0, rhs_quad)?;
    let lhs = if m == 1 { rhs } else { sum_shift_integral(f, m, lhs_quad)? };
    Ok(Sides::between_integrals(1.0, &lhs, 1.0, &rhs, 1.0))
}

/// Single instance of the iterated shift lemma; `quad` is used for both
/// sides.
pub fn check_sum_shift_lemma(f: &VectorPoly, m: usize, quad: &Quadrature) -> Result<InequalityReport> {
    let sides = sum_shift_sides(f, m, quad, quad)?;
    Ok(InequalityReport::from_records(
        "sum-shift-lemma",
        0,
        1,
        Vec::new(),
        1.0,
        vec![TrialRecord::new(0, None, sides)],
        true,
    )
    .with_diagnostic("m", m))
}

/// Shift lemma for random `f` in `min(N, 2)` variables of degree at most
/// 2 and shift counts `1..=m` (at most 3); the left side is sampled.
pub fn check_sum_shift_suite(cfg: &TrialConfig) -> Result<InequalityReport> {
    let vars = cfg.vars.clamp(1, 2);
    let max_m = cfg.m.clamp(1, 3) as usize;
    let lhs_seed = derive_seed(cfg.seed, TAG_SUM_SHIFT);
    let rhs_quad = cfg.quad_or(Quadrature::default());
    let records = run_trials(cfg, TAG_SUM_SHIFT, |t, r| {
        let degree = r.gen_range(0..=2u32);
        let f = random_poly(r, cfg.space, vars, degree)?;
        let m = r.gen_range(1..=max_m);
        let lhs_quad = joint_quadrature(m * vars, derive_seed(lhs_seed, t));
        let lhs_quad = if m * vars <= 3 { rhs_quad } else { lhs_quad };
        Ok(vec![TrialRecord::new(t, None, sum_shift_sides(&f, m, &lhs_quad, &rhs_quad)?)])
    })?;
    Ok(cfg.report("sum-shift-lemma", Vec::new(), records))
}

// ------------------------------------------------------ main proposition

/// `(Σ‖a_{i_1…i_m}‖^q)^{1/q}` for the symmetrization of `P` against
/// `(CK)^m m^m/m! ∫‖P‖`.
pub fn main_proposition_sides(p: &VectorPoly, q: f64, c: f64, k: f64, quad: &Quadrature) -> Result<Sides> {
    let form = polarize(p, PolarizationMethod::Coefficient)?;
    let m = form.degree();
    let lhs = form.lq_array_norm(q);
    let integral = p.lp_integral(1.0, quad)?;
    let scale = (c * k).powi(m as i32) * (m as f64).powi(m as i32) / factorial(m);
    Ok(Sides::against_integral(lhs, scale, &integral, 1.0))
}

/// Polarization bound for random `m`-homogeneous polynomials in `N`
/// variables with full support.
pub fn check_main_proposition(cfg: &TrialConfig, constants: &Constants) -> Result<InequalityReport> {
    cfg.validate(true)?;
    let quad = cfg.quad_or(Quadrature::default());
    let records = run_trials(cfg, TAG_MAIN, |t, r| {
        let p = VectorPoly::random_homogeneous(r, cfg.space, cfg.vars, cfg.m)?;
        Ok(vec![TrialRecord::new(
            t,
            None,
            main_proposition_sides(&p, cfg.q, constants.cotype, constants.kahane, &quad)?,
        )])
    })?;
    Ok(cfg.report("main-proposition", constants.used(true, true), records))
}

// ------------------------------------------------------------ projection

/// `‖Φ_m f‖_p` against `‖f‖_p`, plus whether `Φ_m f` has exactly the
/// degree-`m` coefficients of `f`.
pub fn projection_sides(f: &VectorPoly, m: u32, p: f64, quad: &Quadrature) -> Result<(Sides, bool)> {
    if f.is_zero() {
        return Err(Error::ZeroDenominator);
    }
    let proj = f.homogeneous_projection(m);
    let preserved = proj.coeffs().iter().all(|(a, c)| a.degree() == m && f.coeffs().get(a) == Some(c))
        && f.coeffs().iter().filter(|(a, _)| a.degree() == m).all(|(a, c)| proj.coeffs().get(a) == Some(c));
    let num = proj.lp_integral(p, quad)?;
    let den = f.lp_integral(p, quad)?;
    Ok((Sides::between_integrals(1.0, &num, 1.0, &den, p), preserved))
}

fn projection_records(index: u64, sides: Sides, preserved: bool) -> Vec<TrialRecord> {
    let coefficient = if preserved { Sides::exact(0.0, 1.0) } else { Sides::exact(1.0, 0.0) };
    vec![
        TrialRecord::new(index, Some("norm".into()), sides),
        TrialRecord::new(index, Some("coefficients".into()), coefficient),
    ]
}

/// Single instance of the contractive projection. `quad` defaults to
/// [`VectorPoly::default_quadrature`].
pub fn check_projection_contraction(
    f: &VectorPoly,
    m: u32,
    p: f64,
    quad: Option<&Quadrature>,
) -> Result<InequalityReport> {
    let quad = quad.copied().unwrap_or_else(|| f.default_quadrature(p));
    let (sides, preserved) = projection_sides(f, m, p, &quad)?;
    Ok(InequalityReport::from_records(
        "projection-contraction",
        0,
        1,
        Vec::new(),
        1.0,
        projection_records(0, sides, preserved),
        true,
    )
    .with_diagnostic("coefficients_preserved", preserved))
}

/// Contraction of `Φ_m` in `L_p` for random `f` of degree at most `m + 1`
/// and a random `m' ≤ m + 1`.
pub fn check_projection_suite(cfg: &TrialConfig, p: f64) -> Result<InequalityReport> {
    let records = run_trials(cfg, TAG_PROJECTION, |t, r| {
        let degree = cfg.m + 1;
        let mut f = random_poly(r, cfg.space, cfg.vars, degree)?;
        while f.is_zero() {
            f = random_poly(r, cfg.space, cfg.vars, degree)?;
        }
        let m = r.gen_range(0..=degree);
        let quad = cfg.quad_or(f.default_quadrature(p));
        let (sides, preserved) = projection_sides(&f, m, p, &quad)?;
        Ok(projection_records(t, sides, preserved))
    })?;
    Ok(cfg.report("projection-contraction", Vec::new(), records).with_diagnostic("p", p))
}

// --------------------------------------------------------------- Hölder

fn conjugate(q: f64) -> f64 {
    q / (q - 1.0)
}

/// `Σ_{|α|=m} ‖P̂(α) u^α‖` against
/// `(eCK)^m ∫‖P‖ (Σ|u_j|^{q'})^{m/q'}`; weights past `u` are zero.
pub fn holder_sides(p: &VectorPoly, q: f64, c: f64, k: f64, u: &[f64], quad: &Quadrature) -> Result<Sides> {
    let m = p.homogeneous_degree().ok_or(Error::NotHomogeneous)?;
    let weights: Vec<f64> = (0..p.vars()).map(|j| u.get(j).map_or(0.0, |x| x.abs())).collect();
    let lhs = p.coefficient_norm_sum(&weights, 1.0)?;
    let qc = conjugate(q);
    let u_norm: f64 = u.iter().map(|x| x.abs().powf(qc)).sum::<f64>().powf(1.0 / qc);
    let scale = (std::f64::consts::E * c * k * u_norm).powi(m as i32);
    let integral = p.lp_integral(1.0, quad)?;
    Ok(Sides::against_integral(lhs, scale, &integral, 1.0))
}

/// Weighted coefficient bound for random `m`-homogeneous polynomials with
/// `u_j = 2^{-j}`.
pub fn check_homogeneous_holder_bound(cfg: &TrialConfig, constants: &Constants, u: &[f64]) -> Result<InequalityReport> {
    cfg.validate(true)?;
    let quad = cfg.quad_or(Quadrature::default());
    let records = run_trials(cfg, TAG_HOLDER, |t, r| {
        let p = VectorPoly::random_homogeneous(r, cfg.space, cfg.vars, cfg.m)?;
        Ok(vec![TrialRecord::new(t, None, holder_sides(&p, cfg.q, constants.cotype, constants.kahane, u, &quad)?)])
    })?;
    Ok(cfg.report("homogeneous-holder", constants.used(true, true), records).with_diagnostic("u", u))
}

/// `u_j = 2^{-j}` for `j = 1..=n`.
pub fn dyadic_weights(n: usize) -> Vec<f64> {
    (1..=n).map(|j| 0.5f64.powi(j as i32)).collect()
}

// ------------------------------------------------------------------ k₀

/// Outcome of [`select_k0`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct K0Selection {
    pub k0: usize,
    /// `p_{k₀}`.
    pub prime: u64,
    /// `e·C·K·series_upper`.
    pub threshold: f64,
    /// Upper bound for `Σ_j p_j^{-(1+ε)}`.
    pub series_upper: f64,
    pub truncated_sum: f64,
    /// `p_J^{-ε}/ε`, which bounds `Σ_{n > p_J} n^{-(1+ε)}`.
    pub tail_bound: f64,
    pub truncation: usize,
}

/// Smallest `k₀` with `p_{k₀}^{ε/q'} > e·C·K·Σ_j p_j^{-(1+ε)}`, the series
/// bounded above by its first `truncation` terms plus `p_J^{-ε}/ε`.
pub fn select_k0(q: f64, eps: f64, c: f64, k: f64, table: &PrimeTable, truncation: usize) -> Result<K0Selection> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    if !(q > 1.0) || !q.is_finite() {
        return Err(Error::InvalidInput(format!("q must be finite and exceed 1, got {q}")));
    }
    if !(c > 0.0 && k > 0.0) {
        return Err(Error::InvalidInput(format!("constants must be positive, got C = {c}, K = {k}")));
    }
    if truncation == 0 || truncation > table.len() {
        return Err(Error::CapacityExceeded { value: truncation as u64, largest: table.len() as u64 });
    }
    let primes = table.as_slice();
    let truncated_sum =
        crate::sum::compensated_sum(primes[..truncation].iter().map(|&p| (p as f64).powf(-(1.0 + eps))));
    let tail_bound = (primes[truncation - 1] as f64).powf(-eps) / eps;
    let series_upper = truncated_sum + tail_bound;
    let threshold = std::f64::consts::E * c * k * series_upper;
    let exponent = eps / conjugate(q);
    match primes.iter().position(|&p| (p as f64).powf(exponent) > threshold) {
        Some(i) => Ok(K0Selection {
            k0: i + 1,
            prime: primes[i],
            threshold,
            series_upper,
            truncated_sum,
            tail_bound,
            truncation,
        }),
        None => Err(Error::CapacityExceeded {
            value: threshold.powf(1.0 / exponent).min(u64::MAX as f64) as u64,
            largest: table.largest(),
        }),
    }
}

// ------------------------------------------------------ weighted bound

/// Per-degree quantities of the weighted bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeTerm {
    pub m: u32,
    /// `Σ_{|α|=m} ‖f̂(α)‖ p̃^{-sα}`.
    pub term: f64,
    /// `‖Φ_m f‖_1`.
    pub part_norm: f64,
    /// `(eCK)^m ‖Φ_m f‖_1 (Σ_{j≤N} p̃_j^{-(1+2ε)})^{m/q'}`.
    #[serde(with = "crate::serde_ext::real")]
    pub holder_bound: f64,
    /// `ρ^m ‖f‖_1`.
    pub geometric_bound: f64,
}

/// Full decomposition behind [`check_weighted_monomial_bound`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedAnalysis {
    pub selection: K0Selection,
    /// `s = (1 - 1/q)(1 + 2ε)`.
    pub s: f64,
    /// `p̃_j^{-s}` for `j = 1..=N`.
    pub weights: Vec<f64>,
    /// `e·C·K·Σ_j p_j^{-(1+ε)} / p_{k₀}^{ε/q'}`; below 1 by the choice of `k₀`.
    pub rho: f64,
    /// `e·C·K·(Σ_{j≤N} p̃_j^{-(1+2ε)})^{1/q'}`, the ratio the Hölder step
    /// yields at this truncation.
    pub rho_holder: f64,
    pub rho_exceeds_one: bool,
    /// `Σ_{m≥0} ρ^m`.
    #[serde(with = "crate::serde_ext::real")]
    pub constant: f64,
    /// `‖f‖_1`.
    pub norm: f64,
    /// `Σ_α ‖f̂(α)‖ p̃^{-sα}`.
    pub lhs: f64,
    pub degrees: Vec<DegreeTerm>,
    #[serde(skip)]
    records: Vec<(String, Sides)>,
}

/// Decomposes `f` into homogeneous parts and evaluates every link of the
/// weighted coefficient bound.
pub fn weighted_analysis(
    f: &VectorPoly,
    q: f64,
    constants: &Constants,
    eps: f64,
    table: &PrimeTable,
    quad: &Quadrature,
) -> Result<WeightedAnalysis> {
    let (c, k) = (constants.cotype, constants.kahane);
    let selection = select_k0(q, eps, c, k, table, table.len())?;
    let qc = conjugate(q);
    let s = (1.0 - 1.0 / q) * (1.0 + 2.0 * eps);
    let n = f.vars();
    if n > table.len() {
        return Err(Error::CapacityExceeded { value: n as u64, largest: table.largest() });
    }
    let primes = table.as_slice();
    let tilde: Vec<f64> = (1..=n).map(|j| primes[j.max(selection.k0) - 1] as f64).collect();
    let weights: Vec<f64> = tilde.iter().map(|p| p.powf(-s)).collect();
    let eck = std::f64::consts::E * c * k;
    let rho = selection.threshold / (selection.prime as f64).powf(eps / qc);
    let holder_sum: f64 = tilde.iter().map(|p| p.powf(-(1.0 + 2.0 * eps))).sum();
    let rho_holder = eck * holder_sum.powf(1.0 / qc);
    let constant = if rho < 1.0 { 1.0 / (1.0 - rho) } else { f64::INFINITY };

    let norm_integral = f.lp_integral(1.0, quad)?;
    let norm = norm_integral.value;
    let lhs = f.coefficient_norm_sum(&weights, 1.0)?;
    let mut records = vec![
        ("total".to_string(), Sides::against_integral(lhs, constant, &norm_integral, 1.0)),
        ("rho".to_string(), Sides::exact(rho, 1.0)),
    ];
    let mut degrees = Vec::new();
    for (m, part) in f.homogeneous_parts() {
        let term = part.coefficient_norm_sum(&weights, 1.0)?;
        let part_integral = part.lp_integral(1.0, quad)?;
        let holder_scale = (eck * holder_sum.powf(1.0 / qc)).powi(m as i32);
        let geometric_scale = rho.powi(m as i32);
        records.push((format!("holder m={m}"), Sides::against_integral(term, holder_scale, &part_integral, 1.0)));
        records.push((
            format!("contraction m={m}"),
            Sides::between_integrals(1.0, &part_integral, 1.0, &norm_integral, 1.0),
        ));
        records.push((format!("geometric m={m}"), Sides::against_integral(term, geometric_scale, &norm_integral, 1.0)));
        degrees.push(DegreeTerm {
            m,
            term,
            part_norm: part_integral.value,
            holder_bound: holder_scale * part_integral.value,
            geometric_bound: geometric_scale * norm,
        });
    }
    Ok(WeightedAnalysis {
        selection,
        s,
        weights,
        rho,
        rho_holder,
        rho_exceeds_one: rho > 1.0,
        constant,
        norm,
        lhs,
        degrees,
        records,
    })
}

impl WeightedAnalysis {
    fn trial_records(&self, index: u64) -> Vec<TrialRecord> {
        self.records.iter().map(|(label, sides)| TrialRecord::new(index, Some(label.clone()), *sides)).collect()
    }
}

/// Single instance of the weighted coefficient bound
/// `Σ_α ‖f̂(α)‖ p̃^{-sα} ≤ C(q, X, ε) ‖f‖_1`, with every per-degree link
/// recorded.
pub fn check_weighted_monomial_bound(
    f: &VectorPoly,
    q: f64,
    constants: &Constants,
    eps: f64,
    table: &PrimeTable,
    quad: &Quadrature,
) -> Result<InequalityReport> {
    let analysis = weighted_analysis(f, q, constants, eps, table, quad)?;
    Ok(InequalityReport::from_records(
        "weighted-monomial-bound",
        0,
        1,
        constants.used(true, true),
        constants.safety_factor,
        analysis.trial_records(0),
        true,
    )
    .with_diagnostic("analysis", &analysis))
}

/// Weighted bound for random `f` in `N` variables with degree at most
/// `m`.
pub fn check_weighted_suite(
    cfg: &TrialConfig,
    constants: &Constants,
    eps: f64,
    table: &PrimeTable,
) -> Result<InequalityReport> {
    cfg.validate(true)?;
    let quad = cfg.quad_or(Quadrature::default());
    let selection = select_k0(cfg.q, eps, constants.cotype, constants.kahane, table, table.len())?;
    let records = run_trials(cfg, TAG_WEIGHTED, |t, r| {
        let f = random_poly(r, cfg.space, cfg.vars, cfg.m)?;
        Ok(weighted_analysis(&f, cfg.q, constants, eps, table, &quad)?.trial_records(t))
    })?;
    Ok(cfg
        .report("weighted-monomial-bound", constants.used(true, true), records)
        .with_diagnostic("k0", &selection)
        .with_diagnostic("eps", eps))
}

// ------------------------------------------------------------ instances

/// Random polynomial whose support is a random nonempty subset of
/// `{α : |α| ≤ degree}` in `vars` variables, coefficients in the unit disc.
pub fn random_poly<R: Rng + ?Sized>(
    rng: &mut R,
    space: SpaceDescriptor,
    vars: usize,
    degree: u32,
) -> Result<VectorPoly> {
    let mut all = Vec::new();
    for d in 0..=degree {
        all.extend(crate::multiindex::enumerate_homogeneous(vars, d)?);
    }
    let mut support: Vec<MultiIndex> = all.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
    if support.is_empty() {
        support.push(all[rng.gen_range(0..all.len())].clone());
    }
    VectorPoly::random_on(rng, space, vars, &support)
}

// ------------------------------------------------------------ full suite

/// Names accepted by [`run_check`], in the order [`verify_all`] runs them.
pub const CHECK_NAMES: [&str; 8] = [
    "cotype",
    "multilinear-cotype",
    "rotation-lemma",
    "sum-shift-lemma",
    "main-proposition",
    "projection-contraction",
    "homogeneous-holder",
    "weighted-monomial-bound",
];

/// Inputs of [`run_check`] beyond the trial configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOptions {
    /// Constants to use; estimated from `cfg.space` when absent.
    pub constants: Option<Constants>,
    /// Trials for constant estimation.
    pub estimation_trials: usize,
    /// `ε` of the weighted bound.
    pub eps: f64,
    /// `p` of the projection check.
    pub p: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self { constants: None, estimation_trials: 2000, eps: 1.0, p: 1.0 }
    }
}

/// Runs the named suite.
pub fn run_check(name: &str, cfg: &TrialConfig, opts: &CheckOptions, table: &PrimeTable) -> Result<InequalityReport> {
    let constants = || -> Result<Constants> {
        match &opts.constants {
            Some(c) => Ok(c.clone()),
            None => {
                Constants::estimate(&cfg.space, cfg.q, cfg.vars, opts.estimation_trials, cfg.seed, cfg.safety_factor)
            }
        }
    };
    match name {
        "cotype" => check_cotype(cfg, &constants()?),
        "multilinear-cotype" => check_multilinear_cotype(cfg, &constants()?),
        "rotation-lemma" => check_rotation_suite(cfg),
        "sum-shift-lemma" => check_sum_shift_suite(cfg),
        "main-proposition" => check_main_proposition(cfg, &constants()?),
        "projection-contraction" => check_projection_suite(cfg, opts.p),
        "homogeneous-holder" => check_homogeneous_holder_bound(cfg, &constants()?, &dyadic_weights(cfg.vars)),
        "weighted-monomial-bound" => check_weighted_suite(cfg, &constants()?, opts.eps, table),
        other => {
            Err(Error::InvalidInput(format!("unknown check {other:?}; expected one of {}", CHECK_NAMES.join(", "))))
        }
    }
}

/// Configuration used by [`verify_all`] for each check: `X = ℓ_q^2` with
/// `q = 2`, and small `(m, N)`.
pub fn default_config(name: &str, seed: u64, trials: usize) -> TrialConfig {
    let (m, vars, trials) = match name {
        "multilinear-cotype" => (2, 3, trials.min(200)),
        "sum-shift-lemma" => (3, 2, trials),
        "main-proposition" | "homogeneous-holder" => (2, 3, trials),
        "projection-contraction" => (2, 3, trials),
        "weighted-monomial-bound" => (3, 3, trials.min(100)),
        _ => (1, 4, trials),
    };
    let space = SpaceDescriptor::lq(2.0, 2).expect("ℓ_2^2 is valid");
    TrialConfig::new(space, 2.0, m, vars).with_trials(trials).with_seed(seed)
}

/// Runs every check with [`default_config`], calling `sink` after each so
/// that reports can be streamed.
pub fn verify_all(
    seed: u64,
    trials: usize,
    table: &PrimeTable,
    mut sink: impl FnMut(&InequalityReport) -> Result<()>,
) -> Result<Vec<InequalityReport>> {
    let mut out = Vec::with_capacity(CHECK_NAMES.len());
    for name in CHECK_NAMES {
        let cfg = default_config(name, seed, trials);
        let report = run_check(name, &cfg, &CheckOptions { estimation_trials: 500, ..Default::default() }, table)?;
        sink(&report)?;
        out.push(report);
    }
    Ok(out)
}
