//! Discrete matrix-valued measures and Herglotz (Nevanlinna) functions.
//!
//! A [`MatrixMeasure`] is a purely atomic operator-valued measure: a finite
//! list of materialized atoms `(t_k, F_k)` with Hermitian PSD weights, plus
//! an optional [`TailBound`] certifying everything the list leaves out. A
//! [`HerglotzFunction`] is the triple `(C0, C1, measure)` realizing
//!
//! ```text
//! Phi(z) = C0 + z C1 + sum_k ( 1/(t_k - z) - t_k/(1 + t_k^2) ) F_k
//! ```
//!
//! Every operation returns a certified error bound: the exact contribution
//! of materialized-but-dropped atoms plus an analytic remainder derived
//! from the tail descriptor.

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{
    basis_vector, hermitian_defect, hermitian_part, anti_hermitian_norm, min_eigenvalue,
    operator_norm, quadratic_form, CMatrix, CVector,
};

/// Tolerance for Hermiticity and positive semidefiniteness of weights.
pub const PSD_TOL: f64 = 1e-12;
/// Default threshold above which partial sums certify divergence.
pub const DEFAULT_DIVERGENCE_THRESHOLD: f64 = 1e12;
/// Relative stabilization tolerance for boundary-limit ladders.
pub const STABILIZATION_RTOL: f64 = 1e-8;

/// Default decreasing sequence of imaginary offsets, `1e-1 .. 1e-8`.
pub fn default_y_ladder() -> Vec<f64> {
    (1..=8).map(|k| 10f64.powi(-k)).collect()
}

#[derive(Debug, Error)]
pub enum HerglotzError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("weight at t = {t} is not Hermitian PSD within tolerance (defect {defect:.3e})")]
    NotPsd { t: f64, defect: f64 },
    #[error("weight at t = {t} vanishes")]
    ZeroWeight { t: f64 },
    #[error("c0 is not Hermitian within tolerance")]
    C0NotHermitian,
    #[error("c1 is not PSD within tolerance")]
    C1NotPsd,
    #[error("evaluation point {t} coincides with an atom abscissa")]
    AtomHit { t: f64 },
    #[error("no certified tail bound available for this query (lambda = {lambda})")]
    NoTailBound { lambda: f64 },
    #[error("h must be a unit vector (|h| = {norm})")]
    NotUnitVector { norm: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("boundary-limit ladder neither stabilized nor crossed the divergence threshold")]
    Inconclusive { table: Vec<(f64, f64)> },
    #[error("boundary-limit criterion fails in basis direction {direction}")]
    CriterionFails { direction: usize },
    #[error("direct sum of an empty list of measures")]
    EmptyDirectSum,
}

/// One atom of a discrete measure.
#[derive(Debug, Clone)]
pub struct Atom {
    /// Abscissa `t_k`.
    pub t: f64,
    /// Hermitian PSD weight `F_k`.
    pub weight: CMatrix,
    /// Cached operator norm of the weight.
    pub norm: f64,
}

/// Where the non-materialized atoms of a measure live, with enough mass
/// information to certify sums of `|g(t)| * |F|` for the kernels used here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailComponent {
    /// Satellites accumulating at `point`, all contained in the closed hull
    /// `[lo, hi]` (which includes `point`). `mass` bounds the plain mass
    /// `sum |F|`; `second_moment_at_point` bounds
    /// `sum |F| / (t - point)^2` over the component.
    Cluster {
        point: f64,
        lo: f64,
        hi: f64,
        mass: f64,
        second_moment_at_point: f64,
    },
    /// Atoms inside `[lo, hi]` with total plain mass at most `mass`.
    Band { lo: f64, hi: f64, mass: f64 },
    /// Atoms with `|t| >= min_abs`; `weighted_mass` bounds
    /// `sum |F| / (1 + t^2)` over the component.
    Far { min_abs: f64, weighted_mass: f64 },
}

/// Certified description of all atoms beyond the materialized list.
#[derive(Debug, Clone, Default)]
pub struct TailBound {
    /// Upper bound on `sum |F_k| / (1 + t_k^2)` over the tail.
    pub weighted_mass: f64,
    /// True when the tail carries infinite plain mass (used by the
    /// total-mass divergence certificate).
    pub infinite_total_mass: bool,
    /// Disjoint components covering the tail. When empty, only queries
    /// with `Im z != 0` can be certified.
    pub components: Vec<TailComponent>,
}

fn interval_distance(x: f64, lo: f64, hi: f64) -> f64 {
    if x < lo {
        lo - x
    } else if x > hi {
        x - hi
    } else {
        0.0
    }
}

/// sup over `|t| >= a` of `(1 + t^2) / (t - lambda)^2`, or infinity when
/// `lambda` may lie inside the region.
fn far_weight_ratio_sup(a: f64, lambda: f64) -> f64 {
    if lambda.abs() >= a {
        return f64::INFINITY;
    }
    // Critical point of (1+t^2)/(t-l)^2 sits at t = -1/l where the ratio is
    // 1/(1+l^2) < 1; the boundary t = +/- a and the limit t -> inf (ratio 1)
    // dominate otherwise.
    let at_edge = (1.0 + a * a) / ((a - lambda.abs()) * (a - lambda.abs()));
    at_edge.max(1.0)
}

impl TailBound {
    /// Bound on `sum |F| / (t - lambda)^2` over all tail atoms; infinite
    /// when the descriptor cannot separate `lambda` from the tail support.
    pub fn second_moment_remainder(&self, lambda: f64) -> f64 {
        if self.components.is_empty() {
            return if self.weighted_mass == 0.0 { 0.0 } else { f64::INFINITY };
        }
        let mut rem = 0.0f64;
        for c in &self.components {
            rem += match *c {
                TailComponent::Cluster {
                    point,
                    lo,
                    hi,
                    mass,
                    second_moment_at_point,
                } => {
                    if lambda == point {
                        second_moment_at_point
                    } else {
                        let d = interval_distance(lambda, lo, hi);
                        if d > 0.0 {
                            mass / (d * d)
                        } else {
                            f64::INFINITY
                        }
                    }
                }
                TailComponent::Band { lo, hi, mass } => {
                    let d = interval_distance(lambda, lo, hi);
                    if d > 0.0 {
                        mass / (d * d)
                    } else {
                        f64::INFINITY
                    }
                }
                TailComponent::Far {
                    min_abs,
                    weighted_mass,
                } => weighted_mass * far_weight_ratio_sup(min_abs, lambda),
            };
        }
        rem
    }

    /// Bound on `sum |g(t_k, z)| |F_k|` over all tail atoms, where
    /// `g(t, z) = 1/(t - z) - t/(1 + t^2)`.
    ///
    /// Uses `g = z/(1+t^2) + (1+z^2)/((t-z)(1+t^2))`, so each component only
    /// needs a lower bound on `|t - z|` over its support.
    pub fn evaluate_remainder(&self, z: Complex64) -> f64 {
        let zn = z.norm();
        let wn = (Complex64::new(1.0, 0.0) + z * z).norm();
        let y = z.im.abs();
        if self.components.is_empty() {
            if self.weighted_mass == 0.0 {
                return 0.0;
            }
            if y == 0.0 {
                return f64::INFINITY;
            }
            return (zn + wn / y) * self.weighted_mass;
        }
        let mut rem = 0.0f64;
        for c in &self.components {
            rem += match *c {
                TailComponent::Cluster { lo, hi, mass, .. }
                | TailComponent::Band { lo, hi, mass } => {
                    let dx = interval_distance(z.re, lo, hi);
                    let dist = (dx * dx + y * y).sqrt();
                    let tmin_sq = if lo <= 0.0 && hi >= 0.0 {
                        0.0
                    } else {
                        lo.abs().min(hi.abs()).powi(2)
                    };
                    if dist == 0.0 {
                        f64::INFINITY
                    } else {
                        (zn + wn / dist) / (1.0 + tmin_sq) * mass
                    }
                }
                TailComponent::Far {
                    min_abs,
                    weighted_mass,
                } => {
                    let dx = (min_abs - z.re.abs()).max(0.0);
                    let dist = (dx * dx + y * y).sqrt();
                    if dist == 0.0 {
                        f64::INFINITY
                    } else {
                        (zn + wn / dist) * weighted_mass
                    }
                }
            };
        }
        rem
    }
}

/// Purely atomic operator-valued measure.
///
/// Atoms are kept in construction order (constructors emit them sorted by
/// abscissa); equal abscissas are merged at construction time, so the
/// stored abscissas are pairwise distinct under exact comparison.
#[derive(Debug, Clone)]
pub struct MatrixMeasure {
    dim: usize,
    atoms: Vec<Atom>,
    tail: Option<TailBound>,
    /// `suffix_weighted[i] = sum_{k >= i} |F_k| / (1 + t_k^2)` (len + 1 entries).
    suffix_weighted: Vec<f64>,
}

impl MatrixMeasure {
    /// Builds a measure from `(t, F)` pairs, validating the weights and
    /// merging duplicate abscissas. `tail = None` declares the atom list
    /// exhaustive.
    pub fn new(
        dim: usize,
        raw: Vec<(f64, CMatrix)>,
        tail: Option<TailBound>,
    ) -> Result<Self, HerglotzError> {
        if dim == 0 {
            return Err(HerglotzError::InvalidParameter("dim must be positive".into()));
        }
        let mut merged: Vec<(f64, CMatrix)> = Vec::with_capacity(raw.len());
        for (t, w) in raw {
            if !t.is_finite() {
                return Err(HerglotzError::InvalidParameter(format!(
                    "atom abscissa {t} is not finite"
                )));
            }
            if w.nrows() != dim || w.ncols() != dim {
                return Err(HerglotzError::DimensionMismatch {
                    expected: dim,
                    got: w.nrows(),
                });
            }
            match merged.iter_mut().find(|(u, _)| *u == t) {
                Some((_, acc)) => *acc += w,
                None => merged.push((t, w)),
            }
        }
        let mut atoms = Vec::with_capacity(merged.len());
        for (t, w) in merged {
            let defect = hermitian_defect(&w);
            let min_ev = min_eigenvalue(&w);
            if defect > PSD_TOL || min_ev < -PSD_TOL {
                return Err(HerglotzError::NotPsd {
                    t,
                    defect: defect.max(-min_ev),
                });
            }
            let norm = operator_norm(&w);
            if norm == 0.0 {
                return Err(HerglotzError::ZeroWeight { t });
            }
            atoms.push(Atom { t, weight: w, norm });
        }
        let mut suffix_weighted = vec![0.0; atoms.len() + 1];
        for i in (0..atoms.len()).rev() {
            let a = &atoms[i];
            suffix_weighted[i] = suffix_weighted[i + 1] + a.norm / (1.0 + a.t * a.t);
        }
        Ok(Self {
            dim,
            atoms,
            tail,
            suffix_weighted,
        })
    }

    /// Convenience constructor for scalar (1x1) measures.
    pub fn scalar(atoms: Vec<(f64, f64)>, tail: Option<TailBound>) -> Result<Self, HerglotzError> {
        Self::new(
            1,
            atoms
                .into_iter()
                .map(|(t, m)| (t, CMatrix::from_element(1, 1, Complex64::new(m, 0.0))))
                .collect(),
            tail,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn tail(&self) -> Option<&TailBound> {
        self.tail.as_ref()
    }

    /// Certified bound on `sum_{k >= n} |F_k| / (1 + t_k^2)` including all
    /// non-materialized atoms: exact suffix sum plus the analytic remainder.
    pub fn tail_bound(&self, n: usize) -> f64 {
        let n = n.min(self.atoms.len());
        self.suffix_weighted[n] + self.tail.as_ref().map_or(0.0, |t| t.weighted_mass)
    }

    /// Eq.-(2)-style certified value: `sum_k |F_k| / (1 + t_k^2)` with the
    /// tail remainder as the error bound.
    pub fn weighted_mass(&self) -> (f64, f64) {
        (
            self.suffix_weighted[0],
            self.tail.as_ref().map_or(0.0, |t| t.weighted_mass),
        )
    }

    /// Index of the atom whose abscissa equals `t` exactly.
    pub fn atom_index_at(&self, t: f64) -> Option<usize> {
        self.atoms.iter().position(|a| a.t == t)
    }

    /// Prefix of the first `n` materialized atoms as a finite measure.
    pub fn truncate(&self, n: usize) -> MatrixMeasure {
        let n = n.min(self.atoms.len());
        let atoms: Vec<Atom> = self.atoms[..n].to_vec();
        let mut suffix_weighted = vec![0.0; atoms.len() + 1];
        for i in (0..atoms.len()).rev() {
            let a = &atoms[i];
            suffix_weighted[i] = suffix_weighted[i + 1] + a.norm / (1.0 + a.t * a.t);
        }
        MatrixMeasure {
            dim: self.dim,
            atoms,
            tail: None,
            suffix_weighted,
        }
    }

    /// Copy with atoms sorted by ascending abscissa.
    pub fn sorted_ascending(&self) -> MatrixMeasure {
        let mut m = self.clone();
        m.atoms.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
        let mut suffix_weighted = vec![0.0; m.atoms.len() + 1];
        for i in (0..m.atoms.len()).rev() {
            let a = &m.atoms[i];
            suffix_weighted[i] = suffix_weighted[i + 1] + a.norm / (1.0 + a.t * a.t);
        }
        m.suffix_weighted = suffix_weighted;
        m
    }

    /// Total-mass divergence certificate: either the materialized partial
    /// sums of `trace F_k` already exceed `threshold`, or the tail is
    /// declared to carry infinite mass.
    pub fn total_mass_divergence(&self, threshold: f64) -> Option<MassDivergence> {
        let mut sum = 0.0;
        for (i, a) in self.atoms.iter().enumerate() {
            sum += crate::linalg::trace_re(&a.weight);
            if sum > threshold {
                return Some(MassDivergence::PartialSumsExceed {
                    threshold,
                    at_index: i,
                    partial: sum,
                });
            }
        }
        if self.tail.as_ref().is_some_and(|t| t.infinite_total_mass) {
            return Some(MassDivergence::InfiniteTail {
                materialized: sum,
            });
        }
        None
    }

    /// `d`-fold block-diagonal direct power of this measure.
    pub fn direct_power(&self, d: usize) -> Result<MatrixMeasure, HerglotzError> {
        let copies: Vec<&MatrixMeasure> = (0..d).map(|_| self).collect();
        direct_sum(&copies)
    }
}

/// Certificate that the plain total mass is unbounded.
#[derive(Debug, Clone, PartialEq)]
pub enum MassDivergence {
    PartialSumsExceed {
        threshold: f64,
        at_index: usize,
        partial: f64,
    },
    /// The materialized atoms sum to `materialized`, and the tail
    /// descriptor declares infinitely many further atoms of non-vanishing
    /// mass.
    InfiniteTail { materialized: f64 },
}

/// Block-diagonal direct sum; atoms sharing an abscissa merge into one atom
/// with block-diagonal weight. Output atoms are sorted ascending.
pub fn direct_sum(mus: &[&MatrixMeasure]) -> Result<MatrixMeasure, HerglotzError> {
    if mus.is_empty() {
        return Err(HerglotzError::EmptyDirectSum);
    }
    let dim: usize = mus.iter().map(|m| m.dim).sum();
    let offsets: Vec<usize> = mus
        .iter()
        .scan(0usize, |acc, m| {
            let o = *acc;
            *acc += m.dim;
            Some(o)
        })
        .collect();
    let mut abscissas: Vec<f64> = mus
        .iter()
        .flat_map(|m| m.atoms.iter().map(|a| a.t))
        .collect();
    abscissas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    abscissas.dedup();
    let mut atoms: Vec<(f64, CMatrix)> = Vec::with_capacity(abscissas.len());
    for &t in &abscissas {
        let mut w = CMatrix::zeros(dim, dim);
        for (m, &off) in mus.iter().zip(&offsets) {
            if let Some(i) = m.atom_index_at(t) {
                let block = &m.atoms[i].weight;
                for r in 0..m.dim {
                    for c in 0..m.dim {
                        w[(off + r, off + c)] = block[(r, c)];
                    }
                }
            }
        }
        atoms.push((t, w));
    }
    let tail = if mus.iter().all(|m| m.tail.is_none()) {
        None
    } else {
        let mut combined = TailBound::default();
        for m in mus {
            if let Some(t) = &m.tail {
                combined.weighted_mass += t.weighted_mass;
                combined.infinite_total_mass |= t.infinite_total_mass;
                combined.components.extend(t.components.iter().copied());
            }
        }
        Some(combined)
    };
    MatrixMeasure::new(dim, atoms, tail)
}

/// The triple `(C0, C1, F)` of the Nevanlinna integral representation.
#[derive(Debug, Clone)]
pub struct HerglotzFunction {
    pub c0: CMatrix,
    pub c1: CMatrix,
    pub measure: MatrixMeasure,
}

impl HerglotzFunction {
    pub fn new(c0: CMatrix, c1: CMatrix, measure: MatrixMeasure) -> Result<Self, HerglotzError> {
        let d = measure.dim();
        if c0.nrows() != d || c0.ncols() != d {
            return Err(HerglotzError::DimensionMismatch {
                expected: d,
                got: c0.nrows(),
            });
        }
        if c1.nrows() != d || c1.ncols() != d {
            return Err(HerglotzError::DimensionMismatch {
                expected: d,
                got: c1.nrows(),
            });
        }
        if hermitian_defect(&c0) > PSD_TOL {
            return Err(HerglotzError::C0NotHermitian);
        }
        if hermitian_defect(&c1) > PSD_TOL || min_eigenvalue(&c1) < -PSD_TOL {
            return Err(HerglotzError::C1NotPsd);
        }
        Ok(Self { c0, c1, measure })
    }

    /// Herglotz function with `C0 = C1 = 0` over the given measure.
    pub fn pure(measure: MatrixMeasure) -> Self {
        let d = measure.dim();
        Self {
            c0: CMatrix::zeros(d, d),
            c1: CMatrix::zeros(d, d),
            measure,
        }
    }

    pub fn dim(&self) -> usize {
        self.measure.dim()
    }
}

/// A matrix value together with a certified error bound.
#[derive(Debug, Clone)]
pub struct CertifiedMatrix {
    pub value: CMatrix,
    pub error_bound: f64,
}

/// Integrand of the representation: `1/(t - z) - t/(1 + t^2)`.
fn kernel(t: f64, z: Complex64) -> Complex64 {
    Complex64::new(1.0, 0.0) / (Complex64::new(t, 0.0) - z) - Complex64::new(t / (1.0 + t * t), 0.0)
}

/// Evaluates `Phi(z)` over the first `truncation` materialized atoms.
///
/// The error bound is the exact kernel-weighted mass of the dropped
/// materialized atoms plus the analytic tail remainder; it may be infinite
/// when `z` is real and the tail descriptor cannot exclude atoms near `z`.
pub fn evaluate(
    phi: &HerglotzFunction,
    z: Complex64,
    truncation: usize,
) -> Result<CertifiedMatrix, HerglotzError> {
    let mu = &phi.measure;
    if z.im == 0.0 && mu.atom_index_at(z.re).is_some() {
        return Err(HerglotzError::AtomHit { t: z.re });
    }
    let n = truncation.min(mu.len());
    let mut value = phi.c0.clone() + phi.c1.clone() * z;
    for a in &mu.atoms[..n] {
        let g = kernel(a.t, z);
        value += a.weight.clone() * g;
    }
    let mut err = 0.0f64;
    for a in &mu.atoms[n..] {
        err += kernel(a.t, z).norm() * a.norm;
    }
    err += mu.tail.as_ref().map_or(0.0, |t| t.evaluate_remainder(z));
    Ok(CertifiedMatrix {
        value,
        error_bound: err,
    })
}

/// Witness justifying a divergence verdict.
#[derive(Debug, Clone, PartialEq)]
pub enum DivergenceWitness {
    /// `lambda` is an atom with positive mass in direction `h`.
    AtomAtPoint { t: f64, directional_mass: f64 },
    /// Partial sums exceeded the divergence threshold.
    ThresholdExceeded { threshold: f64, at_index: usize },
}

/// Outcome of a certified second-moment summation.
#[derive(Debug, Clone, PartialEq)]
pub enum SecondMomentResult {
    Finite { value: f64, error_bound: f64 },
    Divergent { witness: DivergenceWitness, partial: f64 },
}

impl SecondMomentResult {
    pub fn is_finite(&self) -> bool {
        matches!(self, SecondMomentResult::Finite { .. })
    }

    pub fn finite_value(&self) -> Option<(f64, f64)> {
        match self {
            SecondMomentResult::Finite { value, error_bound } => Some((*value, *error_bound)),
            _ => None,
        }
    }
}

fn check_unit(h: &CVector) -> Result<(), HerglotzError> {
    let n = h.norm();
    if (n - 1.0).abs() > 1e-9 {
        return Err(HerglotzError::NotUnitVector { norm: n });
    }
    Ok(())
}

/// Certified value of `sum_k (F_k h, h) / (t_k - lambda)^2`.
///
/// Atoms with `(F_k h, h) = 0` at `t_k = lambda` are skipped (they carry no
/// mass in direction `h`); an atom with positive directional mass at
/// `lambda` yields an immediate divergence certificate.
pub fn second_moment_at(
    mu: &MatrixMeasure,
    lambda: f64,
    h: &CVector,
    truncation: usize,
    divergence_threshold: f64,
) -> Result<SecondMomentResult, HerglotzError> {
    check_unit(h)?;
    if divergence_threshold <= 0.0 {
        return Err(HerglotzError::InvalidParameter(
            "divergence_threshold must be positive".into(),
        ));
    }
    if h.len() != mu.dim() {
        return Err(HerglotzError::DimensionMismatch {
            expected: mu.dim(),
            got: h.len(),
        });
    }
    if let Some(i) = mu.atom_index_at(lambda) {
        let m = quadratic_form(&mu.atoms[i].weight, h);
        if m > 0.0 {
            return Ok(SecondMomentResult::Divergent {
                witness: DivergenceWitness::AtomAtPoint {
                    t: lambda,
                    directional_mass: m,
                },
                partial: f64::INFINITY,
            });
        }
    }
    let n = truncation.min(mu.len());
    let mut partial = 0.0f64;
    for (i, a) in mu.atoms[..n].iter().enumerate() {
        if a.t == lambda {
            continue; // zero directional mass, checked above
        }
        let d = a.t - lambda;
        partial += quadratic_form(&a.weight, h) / (d * d);
        if partial > divergence_threshold {
            return Ok(SecondMomentResult::Divergent {
                witness: DivergenceWitness::ThresholdExceeded {
                    threshold: divergence_threshold,
                    at_index: i,
                },
                partial,
            });
        }
    }
    let mut err = 0.0f64;
    for a in &mu.atoms[n..] {
        if a.t == lambda {
            continue;
        }
        let d = a.t - lambda;
        err += quadratic_form(&a.weight, h) / (d * d);
    }
    if let Some(t) = &mu.tail {
        let rem = t.second_moment_remainder(lambda);
        if !rem.is_finite() {
            return Err(HerglotzError::NoTailBound { lambda });
        }
        err += rem;
    }
    Ok(SecondMomentResult::Finite {
        value: partial,
        error_bound: err,
    })
}

/// Second moment restricted to atoms with abscissa in `[window.0, window.1)`.
///
/// The error bound covers tail components whose support meets the window.
pub fn second_moment_window(
    mu: &MatrixMeasure,
    lambda: f64,
    h: &CVector,
    window: (f64, f64),
) -> Result<SecondMomentResult, HerglotzError> {
    check_unit(h)?;
    let (alpha, beta) = window;
    if let Some(i) = mu.atom_index_at(lambda) {
        if lambda >= alpha && lambda < beta {
            let m = quadratic_form(&mu.atoms[i].weight, h);
            if m > 0.0 {
                return Ok(SecondMomentResult::Divergent {
                    witness: DivergenceWitness::AtomAtPoint {
                        t: lambda,
                        directional_mass: m,
                    },
                    partial: f64::INFINITY,
                });
            }
        }
    }
    let mut value = 0.0f64;
    for a in &mu.atoms {
        if a.t < alpha || a.t >= beta || a.t == lambda {
            continue;
        }
        let d = a.t - lambda;
        value += quadratic_form(&a.weight, h) / (d * d);
    }
    let mut err = 0.0f64;
    if let Some(tail) = &mu.tail {
        for c in &tail.components {
            let overlaps = match *c {
                TailComponent::Cluster { lo, hi, .. } | TailComponent::Band { lo, hi, .. } => {
                    lo < beta && hi >= alpha
                }
                TailComponent::Far { min_abs, .. } => beta > min_abs || alpha < -min_abs,
            };
            if !overlaps {
                continue;
            }
            let single = TailBound {
                weighted_mass: 0.0,
                infinite_total_mass: false,
                components: vec![*c],
            };
            let rem = single.second_moment_remainder(lambda);
            if !rem.is_finite() {
                return Err(HerglotzError::NoTailBound { lambda });
            }
            err += rem;
        }
    }
    Ok(SecondMomentResult::Finite {
        value,
        error_bound: err,
    })
}

/// Classification returned by [`imag_quotient_limit`].
#[derive(Debug, Clone, PartialEq)]
pub enum QuotientClassification {
    Finite {
        limit: f64,
        error_bound: f64,
        table: Vec<(f64, f64)>,
    },
    Infinite {
        crossed_at: f64,
        value: f64,
        table: Vec<(f64, f64)>,
    },
}

impl QuotientClassification {
    pub fn is_finite(&self) -> bool {
        matches!(self, QuotientClassification::Finite { .. })
    }
}

/// Monotone boundary-limit classification of
/// `(1/y) Im (Phi(lambda + iy) h, h)` as `y` decreases to 0.
///
/// For atomic measures the quotient equals
/// `(C1 h, h) + sum_k (F_k h, h) / ((t_k - lambda)^2 + y^2)`, which is
/// computed directly; each summand is nondecreasing as `y` shrinks, also in
/// floating point, so the ladder is monotone exactly as computed.
pub fn imag_quotient_limit(
    phi: &HerglotzFunction,
    lambda: f64,
    h: &CVector,
    y_sequence: &[f64],
    divergence_threshold: f64,
    stabilization_rtol: f64,
) -> Result<QuotientClassification, HerglotzError> {
    check_unit(h)?;
    if y_sequence.len() < 3 {
        return Err(HerglotzError::InvalidParameter(
            "y_sequence needs at least 3 entries".into(),
        ));
    }
    if y_sequence.windows(2).any(|w| w[1] >= w[0]) || y_sequence.iter().any(|&y| y <= 0.0) {
        return Err(HerglotzError::InvalidParameter(
            "y_sequence must be strictly decreasing and positive".into(),
        ));
    }
    let c1_term = quadratic_form(&phi.c1, h);
    let masses: Vec<(f64, f64)> = phi
        .measure
        .atoms()
        .iter()
        .map(|a| (a.t, quadratic_form(&a.weight, h)))
        .collect();
    let mut table = Vec::with_capacity(y_sequence.len());
    for &y in y_sequence {
        let mut q = c1_term;
        for &(t, m) in &masses {
            let d = t - lambda;
            q += m / (d * d + y * y);
        }
        table.push((y, q));
        if q >= divergence_threshold {
            return Ok(QuotientClassification::Infinite {
                crossed_at: y,
                value: q,
                table,
            });
        }
    }
    let (_, q_last) = table[table.len() - 1];
    let (_, q_prev) = table[table.len() - 2];
    let stabilized = (q_last - q_prev).abs() < stabilization_rtol * q_last.abs().max(1.0);
    if !stabilized {
        return Err(HerglotzError::Inconclusive { table });
    }
    // The quotient is dominated by the second moment, so the tail remainder
    // of the second moment also bounds the unseen tail contribution here.
    let rem = match phi.measure.tail() {
        Some(t) => {
            let r = t.second_moment_remainder(lambda);
            if !r.is_finite() {
                return Err(HerglotzError::Inconclusive { table });
            }
            r
        }
        None => 0.0,
    };
    Ok(QuotientClassification::Finite {
        limit: q_last,
        error_bound: (q_last - q_prev).abs() + rem,
        table,
    })
}

/// Hermitian boundary value `M(lambda + i0)` with a certified bound.
#[derive(Debug, Clone)]
pub struct BoundaryValue {
    /// Hermitian part of the extrapolated limit.
    pub value: CMatrix,
    /// Bound covering extrapolation error, truncation tails and the
    /// norm of the discarded anti-Hermitian part.
    pub error_bound: f64,
    pub anti_hermitian_norm: f64,
}

/// Extrapolates `Phi(lambda + iy)` to `y = 0` after checking the
/// boundary-limit criterion on every basis direction.
pub fn boundary_value(
    phi: &HerglotzFunction,
    lambda: f64,
    y_sequence: &[f64],
    divergence_threshold: f64,
) -> Result<BoundaryValue, HerglotzError> {
    let d = phi.dim();
    for i in 0..d {
        let h = basis_vector(d, i);
        match imag_quotient_limit(
            phi,
            lambda,
            &h,
            y_sequence,
            divergence_threshold,
            STABILIZATION_RTOL,
        ) {
            Ok(QuotientClassification::Finite { .. }) => {}
            Ok(QuotientClassification::Infinite { .. }) => {
                return Err(HerglotzError::CriterionFails { direction: i })
            }
            Err(e) => return Err(e),
        }
    }
    let n = y_sequence.len();
    let (y1, y2) = (y_sequence[n - 2], y_sequence[n - 1]);
    let v1 = evaluate(phi, Complex64::new(lambda, y1), phi.measure.len())?;
    let v2 = evaluate(phi, Complex64::new(lambda, y2), phi.measure.len())?;
    // Linear-in-y extrapolation: Phi(l+iy) ~ M + c y near a point where the
    // boundary limit exists.
    let scale = y2 / (y1 - y2);
    let extrap = &v2.value + (&v2.value - &v1.value) * Complex64::new(scale, 0.0);
    let anti = anti_hermitian_norm(&extrap);
    let step = crate::linalg::frobenius_distance(&v2.value, &v1.value);
    Ok(BoundaryValue {
        value: hermitian_part(&extrap),
        error_bound: step + v2.error_bound + anti,
        anti_hermitian_norm: anti,
    })
}

/// Result of a seeded random sweep of the Nevanlinna axioms.
#[derive(Debug, Clone, serde::Serialize)]
pub struct NevanlinnaSweep {
    pub samples: usize,
    /// Most negative eigenvalue of `(Phi - Phi^H)/(2i)` beyond the sample's
    /// certified error bound (0 when none).
    pub max_psd_violation: f64,
    /// Largest symmetry defect `|Phi(conj z) - Phi(z)^H|` beyond bounds.
    pub max_symmetry_violation: f64,
    pub pass: bool,
}

/// Checks `Im z * Im Phi(z) >= 0` and `Phi^*(z) = Phi(conj z)` on `samples`
/// seeded random points with `Im z` in `(0, 10]`.
pub fn nevanlinna_sweep(phi: &HerglotzFunction, samples: usize, seed: u64) -> NevanlinnaSweep {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut max_psd = 0.0f64;
    let mut max_sym = 0.0f64;
    for _ in 0..samples {
        let z = Complex64::new(rng.gen_range(-10.0..10.0), rng.gen_range(1e-3..=10.0));
        let up = evaluate(phi, z, phi.measure.len()).expect("nonreal z");
        let dn = evaluate(phi, z.conj(), phi.measure.len()).expect("nonreal z");
        let d = phi.dim();
        let imag = CMatrix::from_fn(d, d, |i, j| {
            (up.value[(i, j)] - up.value[(j, i)].conj()) * Complex64::new(0.0, -0.5)
        });
        let viol = (-min_eigenvalue(&imag) - up.error_bound).max(0.0);
        max_psd = max_psd.max(viol);
        let adj = CMatrix::from_fn(d, d, |i, j| up.value[(j, i)].conj());
        let sym = (crate::linalg::frobenius_distance(&dn.value, &adj)
            - (up.error_bound + dn.error_bound))
            .max(0.0);
        max_sym = max_sym.max(sym);
    }
    NevanlinnaSweep {
        samples,
        max_psd_violation: max_psd,
        max_symmetry_violation: max_sym,
        pass: max_psd <= 1e-10 && max_sym <= 1e-10,
    }
}
