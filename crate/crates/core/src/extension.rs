//! Finite-truncation multiplication-operator models and spectra of their
//! rank-one parametrized self-adjoint extensions.
//!
//! For a scalar truncated measure with atoms `t_1 < .. < t_N` and masses
//! `f_k`, the real-axis Weyl function
//!
//! ```text
//! m(l) = c0 + l c1 + sum_k f_k ( 1/(t_k - l) - t_k/(1 + t_k^2) )
//! ```
//!
//! is strictly increasing between consecutive poles, so the eigenvalues of
//! the extension with parameter `tau` are the roots of `m(l) = tau`, one
//! per inter-atom bracket, found by bisection. `tau = inf` selects the
//! distinguished extension whose spectrum is the atom set itself.

use serde::Serialize;
use thiserror::Error;

use crate::herglotz::{
    imag_quotient_limit, HerglotzError, HerglotzFunction, MatrixMeasure, QuotientClassification,
    SecondMomentResult, TailComponent,
};
use crate::linalg::{scalar_matrix, trace_re, CMatrix};
use crate::util::par_map;

/// Absolute bisection tolerance for eigenvalue brackets.
pub const BISECTION_ATOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ExtensionError {
    #[error("model must be scalar (d = 1), got d = {dim}")]
    NonScalar { dim: usize },
    #[error("a truncated model needs at least 2 atoms, got {len}")]
    TooFewAtoms { len: usize },
    #[error("window bound {bound} coincides with an atom abscissa")]
    WindowOnAtom { bound: f64 },
    #[error("window is empty: ({0}, {1})")]
    EmptyWindow(f64, f64),
    #[error(transparent)]
    Herglotz(#[from] HerglotzError),
}

/// Extension parameter: a real number or the point at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tau {
    Finite(f64),
    Infinity,
}

impl std::fmt::Display for Tau {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tau::Finite(v) => write!(f, "{v}"),
            Tau::Infinity => write!(f, "inf"),
        }
    }
}

/// A finite truncation of the multiplication-operator model: the first `N`
/// atoms of a measure, sorted ascending, together with the Weyl function
/// they generate.
#[derive(Debug, Clone)]
pub struct TruncatedModel {
    pub measure: MatrixMeasure,
    pub weyl: HerglotzFunction,
    /// Accumulation points of the untruncated generator, when the model
    /// was cut from one; truncations themselves have no essential
    /// spectrum, so these are only meaningful as limits under refinement.
    pub generator_accumulation: Option<Vec<f64>>,
}

impl TruncatedModel {
    /// Cuts the first `n` atoms from `measure` (its enumeration order),
    /// sorts them ascending and attaches a Weyl function with the given
    /// `c0`, `c1` (pass zeros for the plain model).
    pub fn new(
        measure: &MatrixMeasure,
        n: usize,
        c0: CMatrix,
        c1: CMatrix,
    ) -> Result<Self, ExtensionError> {
        let truncated = measure.truncate(n).sorted_ascending();
        if truncated.len() < 2 {
            return Err(ExtensionError::TooFewAtoms {
                len: truncated.len(),
            });
        }
        let weyl = HerglotzFunction::new(c0, c1, truncated.clone())?;
        Ok(Self {
            measure: truncated,
            weyl,
            generator_accumulation: None,
        })
    }

    /// Plain scalar model (`c0 = c1 = 0`).
    pub fn plain(measure: &MatrixMeasure, n: usize) -> Result<Self, ExtensionError> {
        let d = measure.dim();
        Self::new(measure, n, CMatrix::zeros(d, d), CMatrix::zeros(d, d))
    }

    pub fn with_generator_accumulation(mut self, points: Vec<f64>) -> Self {
        self.generator_accumulation = Some(points);
        self
    }

    fn require_scalar(&self) -> Result<(), ExtensionError> {
        if self.measure.dim() != 1 {
            return Err(ExtensionError::NonScalar {
                dim: self.measure.dim(),
            });
        }
        Ok(())
    }

    /// Real-axis value of the truncated Weyl function (finite rational
    /// function with poles exactly at the atoms).
    pub fn m_real(&self, lambda: f64) -> f64 {
        let c0 = self.weyl.c0[(0, 0)].re;
        let c1 = self.weyl.c1[(0, 0)].re;
        let mut m = c0 + lambda * c1;
        for a in self.measure.atoms() {
            let f = a.weight[(0, 0)].re;
            m += f * (1.0 / (a.t - lambda) - a.t / (1.0 + a.t * a.t));
        }
        m
    }

    /// Limit of `m` at `+/- infinity` when `c1 = 0`.
    pub fn m_at_infinity(&self) -> f64 {
        let c0 = self.weyl.c0[(0, 0)].re;
        let mut m = c0;
        for a in self.measure.atoms() {
            let f = a.weight[(0, 0)].re;
            m -= f * a.t / (1.0 + a.t * a.t);
        }
        m
    }

    fn abscissas(&self) -> Vec<f64> {
        self.measure.atoms().iter().map(|a| a.t).collect()
    }
}

/// Sorted eigenvalue list of a self-adjoint extension.
#[derive(Debug, Clone)]
pub struct ExtensionSpectrum {
    pub tau: Tau,
    pub eigenvalues: Vec<f64>,
    /// Adjacent atom abscissas (or +/- infinity) bracketing each eigenvalue.
    pub brackets: Vec<(f64, f64)>,
    /// `|m(lambda) - tau|` at each root (0 for `tau = inf`).
    pub residuals: Vec<f64>,
}

impl ExtensionSpectrum {
    /// Strict interlacing against the atom list: at most one eigenvalue
    /// below the least atom and above the greatest, exactly one in each
    /// open inter-atom interval (for full-line windows).
    pub fn check_interlacing(&self, atoms: &[f64]) -> bool {
        let count_in = |lo: f64, hi: f64| {
            self.eigenvalues
                .iter()
                .filter(|&&e| e > lo && e < hi)
                .count()
        };
        if atoms.is_empty() {
            return true;
        }
        if count_in(f64::NEG_INFINITY, atoms[0]) > 1 {
            return false;
        }
        if count_in(atoms[atoms.len() - 1], f64::INFINITY) > 1 {
            return false;
        }
        for w in atoms.windows(2) {
            if count_in(w[0], w[1]) != 1 {
                return false;
            }
        }
        self.eigenvalues.iter().all(|e| !atoms.contains(e))
    }
}

/// Bisection for the unique root of the increasing function `m - tau` in
/// the open bracket `(lo, hi)`; endpoint values are never evaluated (the
/// bracket ends may be poles).
fn bisect_increasing(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        if hi - lo <= BISECTION_ATOL {
            break;
        }
        let v = f(mid);
        if v < 0.0 {
            lo = mid;
        } else if v > 0.0 {
            hi = mid;
        } else {
            break;
        }
    }
    (mid, f(mid).abs())
}

/// Eigenvalues of the `tau`-extension inside `window`.
///
/// The window bounds must not be atom abscissas. Per-bracket searches run
/// in parallel (capped by `WEYL_SPECTRA_THREADS`) and merge by sorting.
pub fn extension_eigenvalues(
    model: &TruncatedModel,
    tau: Tau,
    window: (f64, f64),
) -> Result<ExtensionSpectrum, ExtensionError> {
    model.require_scalar()?;
    let (wlo, whi) = window;
    if wlo.is_nan() || whi.is_nan() || wlo >= whi {
        return Err(ExtensionError::EmptyWindow(wlo, whi));
    }
    let atoms = model.abscissas();
    if atoms.iter().any(|&t| t == wlo || t == whi) {
        let bound = if atoms.contains(&wlo) { wlo } else { whi };
        return Err(ExtensionError::WindowOnAtom { bound });
    }
    let tau_v = match tau {
        Tau::Infinity => {
            // The distinguished extension is multiplication by t itself:
            // its point spectrum is the atom set.
            let eigenvalues: Vec<f64> = atoms
                .iter()
                .copied()
                .filter(|&t| t > wlo && t < whi)
                .collect();
            let brackets = eigenvalues.iter().map(|&t| (t, t)).collect();
            let residuals = vec![0.0; eigenvalues.len()];
            return Ok(ExtensionSpectrum {
                tau,
                eigenvalues,
                brackets,
                residuals,
            });
        }
        Tau::Finite(v) => v,
    };

    let c1 = model.weyl.c1[(0, 0)].re;
    let m_inf = model.m_at_infinity();

    // Interior brackets plus, depending on tau, one root below the first
    // atom or above the last one.
    let mut brackets: Vec<(f64, f64)> = Vec::new();
    for w in atoms.windows(2) {
        brackets.push((w[0], w[1]));
    }
    let span = (atoms[atoms.len() - 1] - atoms[0]).max(1.0);
    if c1 > 0.0 || tau_v > m_inf {
        // m increases from m(-inf) (or -inf when c1 > 0) to +inf on the
        // leftmost interval. Expand left until the sign goes negative.
        let mut lo = atoms[0] - span;
        let mut steps = 0;
        while model.m_real(lo) - tau_v >= 0.0 && steps < 200 {
            lo = atoms[0] - (atoms[0] - lo) * 2.0;
            steps += 1;
        }
        if model.m_real(lo) - tau_v < 0.0 {
            brackets.push((lo, atoms[0]));
        }
    }
    if c1 > 0.0 || tau_v < m_inf {
        let mut hi = atoms[atoms.len() - 1] + span;
        let mut steps = 0;
        while model.m_real(hi) - tau_v <= 0.0 && steps < 200 {
            hi = atoms[atoms.len() - 1] + (hi - atoms[atoms.len() - 1]) * 2.0;
            steps += 1;
        }
        if model.m_real(hi) - tau_v > 0.0 {
            brackets.push((atoms[atoms.len() - 1], hi));
        }
    }
    // Clip to the window; m is increasing on each bracket, so a root
    // survives the clip iff the sign still changes across it.
    let mut tasks: Vec<(f64, f64, f64, f64)> = Vec::new(); // (lo, hi, bleft, bright)
    for &(blo, bhi) in &brackets {
        let lo = blo.max(wlo);
        let hi = bhi.min(whi);
        if lo >= hi {
            continue;
        }
        // Sign at the clipped endpoints; pole endpoints keep their
        // conceptual signs (-inf on the left of a pole from the right,
        // +inf approaching a pole from the left).
        let sign_lo = if lo == blo && atoms.contains(&blo) {
            -1.0
        } else {
            (model.m_real(lo) - tau_v).signum()
        };
        let sign_hi = if hi == bhi && atoms.contains(&bhi) {
            1.0
        } else {
            (model.m_real(hi) - tau_v).signum()
        };
        if sign_lo < 0.0 && sign_hi > 0.0 {
            let bleft = if blo.is_finite() && atoms.contains(&blo) {
                blo
            } else if blo < atoms[0] {
                f64::NEG_INFINITY
            } else {
                blo
            };
            let bright = if bhi.is_finite() && atoms.contains(&bhi) {
                bhi
            } else if bhi > atoms[atoms.len() - 1] {
                f64::INFINITY
            } else {
                bhi
            };
            tasks.push((lo, hi, bleft, bright));
        }
    }
    let results = par_map(&tasks, |&(lo, hi, bl, br)| {
        let (root, residual) = bisect_increasing(|x| model.m_real(x) - tau_v, lo, hi);
        (root, residual, bl, br)
    });
    let mut rows = results;
    rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(ExtensionSpectrum {
        tau,
        eigenvalues: rows.iter().map(|r| r.0).collect(),
        residuals: rows.iter().map(|r| r.1).collect(),
        brackets: rows.iter().map(|r| (r.2, r.3)).collect(),
    })
}

/// Certified check of `sum_k c_k / (l_k - lambda)^2` with `c_k = trace F_k`.
#[derive(Debug, Clone, Serialize)]
pub struct Condition18Report {
    pub lambda: f64,
    /// "trace of the atom weight in the supplied orthonormal basis".
    pub c_definition: String,
    pub c_values: Vec<f64>,
    pub result: Condition18Result,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Condition18Result {
    Finite { value: f64, error_bound: f64 },
    Divergent { witness: String },
}

/// Evaluates the summability condition over the atoms of `points` (their
/// weights give `c_k` through the trace, which is basis independent for
/// any orthonormal basis).
pub fn condition18_check(
    points: &MatrixMeasure,
    lambda: f64,
    truncation: usize,
    divergence_threshold: f64,
) -> Result<Condition18Report, ExtensionError> {
    let c_values: Vec<f64> = points
        .atoms()
        .iter()
        .map(|a| trace_re(&a.weight))
        .collect();
    // c_k > 0 for every retained atom: PSD and nonzero weights force it.
    debug_assert!(c_values.iter().all(|&c| c > 0.0));
    let trace_measure = MatrixMeasure::scalar(
        points
            .atoms()
            .iter()
            .zip(&c_values)
            .map(|(a, &c)| (a.t, c))
            .collect(),
        points.tail().cloned().map(|mut t| {
            // Trace picks up at most a factor dim over the operator norm.
            let d = points.dim() as f64;
            t.weighted_mass *= d;
            t.components = t
                .components
                .into_iter()
                .map(|c| match c {
                    TailComponent::Cluster {
                        point,
                        lo,
                        hi,
                        mass,
                        second_moment_at_point,
                    } => TailComponent::Cluster {
                        point,
                        lo,
                        hi,
                        mass: mass * d,
                        second_moment_at_point: second_moment_at_point * d,
                    },
                    TailComponent::Band { lo, hi, mass } => TailComponent::Band {
                        lo,
                        hi,
                        mass: mass * d,
                    },
                    TailComponent::Far {
                        min_abs,
                        weighted_mass,
                    } => TailComponent::Far {
                        min_abs,
                        weighted_mass: weighted_mass * d,
                    },
                })
                .collect();
            t
        }),
    )?;
    let h = crate::linalg::basis_vector(1, 0);
    let result = match crate::herglotz::second_moment_at(
        &trace_measure,
        lambda,
        &h,
        truncation,
        divergence_threshold,
    )? {
        SecondMomentResult::Finite { value, error_bound } => Condition18Result::Finite {
            value,
            error_bound,
        },
        SecondMomentResult::Divergent { witness, .. } => Condition18Result::Divergent {
            witness: format!("{witness:?}"),
        },
    };
    Ok(Condition18Report {
        lambda,
        c_definition: "c_k = trace of the k-th atom weight".into(),
        c_values,
        result,
    })
}

/// Per-window gap witness.
#[derive(Debug, Clone, Serialize)]
pub struct GapWitness {
    pub window: (f64, f64),
    /// Largest open subinterval of the window disjoint from the point set.
    pub witness: (f64, f64),
    pub gap_length: f64,
    pub points_in_window: usize,
}

/// Witness report that a point set misses an interval inside every window.
#[derive(Debug, Clone, Serialize)]
pub struct NowhereDenseReport {
    pub interval: (f64, f64),
    pub resolution: f64,
    pub windows: Vec<GapWitness>,
    /// True when every window produced a positive-length gap.
    pub all_windows_have_gaps: bool,
}

/// Partitions `interval` into windows of length at most `resolution` and
/// returns, for each, the largest gap avoiding `points` (always positive
/// for finite point sets).
pub fn nowhere_dense_witness(
    points: &[f64],
    interval: (f64, f64),
    resolution: f64,
) -> NowhereDenseReport {
    assert!(resolution > 0.0 && interval.0 < interval.1);
    let (a, b) = interval;
    let n_windows = ((b - a) / resolution).ceil().max(1.0) as usize;
    let width = (b - a) / n_windows as f64;
    let mut sorted: Vec<f64> = points.to_vec();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut windows = Vec::with_capacity(n_windows);
    let mut all_have = true;
    for i in 0..n_windows {
        let lo = a + i as f64 * width;
        let hi = if i + 1 == n_windows { b } else { lo + width };
        let inside: Vec<f64> = sorted
            .iter()
            .copied()
            .filter(|&p| p > lo && p < hi)
            .collect();
        let mut best = (lo, inside.first().copied().unwrap_or(hi));
        let mut best_len = best.1 - best.0;
        for w in inside.windows(2) {
            if w[1] - w[0] > best_len {
                best = (w[0], w[1]);
                best_len = w[1] - w[0];
            }
        }
        if let Some(&last) = inside.last() {
            if hi - last > best_len {
                best = (last, hi);
                best_len = hi - last;
            }
        }
        if best_len <= 0.0 {
            all_have = false;
        }
        windows.push(GapWitness {
            window: (lo, hi),
            witness: best,
            gap_length: best_len,
            points_in_window: inside.len(),
        });
    }
    NowhereDenseReport {
        interval,
        resolution,
        windows,
        all_windows_have_gaps: all_have,
    }
}

/// Point spectrum of a truncation plus essential-spectrum candidates from
/// the generator it was cut from.
#[derive(Debug, Clone)]
pub struct SpectrumPartition {
    pub point_spectrum: Vec<f64>,
    /// Accumulation points of the untruncated generator inside the window;
    /// truncations have no essential spectrum, so these are limits under
    /// refinement rather than spectra of the model itself.
    pub essential_candidates: Vec<f64>,
}

pub fn spectrum_partition(
    model: &TruncatedModel,
    tau: Tau,
    interval: (f64, f64),
) -> Result<SpectrumPartition, ExtensionError> {
    let spectrum = extension_eigenvalues(model, tau, interval)?;
    let essential_candidates = model
        .generator_accumulation
        .as_ref()
        .map(|pts| {
            pts.iter()
                .copied()
                .filter(|&p| p > interval.0 && p < interval.1)
                .collect()
        })
        .unwrap_or_default();
    Ok(SpectrumPartition {
        point_spectrum: spectrum.eigenvalues,
        essential_candidates,
    })
}

/// Classification agreement between the boundary-limit criterion on the
/// model's Weyl function and the measure-side second moment.
pub fn criterion_consistency(
    model: &TruncatedModel,
    lambda: f64,
    y_sequence: &[f64],
    threshold: f64,
) -> Result<bool, ExtensionError> {
    model.require_scalar()?;
    let h = crate::linalg::basis_vector(1, 0);
    let quotient = imag_quotient_limit(
        &model.weyl,
        lambda,
        &h,
        y_sequence,
        threshold,
        crate::herglotz::STABILIZATION_RTOL,
    )?;
    let moment = crate::herglotz::second_moment_at(
        &model.measure,
        lambda,
        &h,
        model.measure.len(),
        threshold,
    )?;
    Ok(matches!(quotient, QuotientClassification::Finite { .. }) == moment.is_finite())
}

/// Builds the model measure for a list of `(t, mass)` pairs (test helper
/// and CLI entry point for ad-hoc scalar models).
pub fn scalar_model(atoms: Vec<(f64, f64)>) -> Result<TruncatedModel, ExtensionError> {
    let n = atoms.len();
    let measure = MatrixMeasure::scalar(atoms, None)?;
    TruncatedModel::new(&measure, n, scalar_matrix(0.0), scalar_matrix(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    const WIDE: (f64, f64) = (-1e6, 1e6);

    #[test]
    fn tau_infinity_returns_atoms() {
        let model = scalar_model(vec![(0.0, 1.0), (1.0, 1.0), (2.0, 1.0)]).unwrap();
        let s = extension_eigenvalues(&model, Tau::Infinity, (-10.0, 10.0)).unwrap();
        assert_eq!(s.eigenvalues, vec![0.0, 1.0, 2.0]);
    }

    /// Dense oracle: eigenvalues of D + alpha v v^T realize the same
    /// secular equation with alpha = -1/(tau - m_inf_shift).
    fn rank_one_oracle(atoms: &[(f64, f64)], tau: f64) -> Vec<f64> {
        let n = atoms.len();
        let shift: f64 = atoms.iter().map(|&(t, f)| f * t / (1.0 + t * t)).sum();
        let alpha = -1.0 / (tau + shift);
        let mut m = DMatrix::<f64>::zeros(n, n);
        for (i, &(t, _)) in atoms.iter().enumerate() {
            m[(i, i)] = t;
        }
        for (i, &(_, fi)) in atoms.iter().enumerate() {
            for (j, &(_, fj)) in atoms.iter().enumerate() {
                m[(i, j)] += alpha * (fi.sqrt() * fj.sqrt());
            }
        }
        let mut ev: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    #[test]
    fn secular_roots_match_dense_oracle() {
        let atoms = vec![(0.0, 1.0), (1.0, 1.0), (2.0, 1.0)];
        let model = scalar_model(atoms.clone()).unwrap();
        let tau = 0.0;
        let s = extension_eigenvalues(&model, Tau::Finite(tau), WIDE).unwrap();
        let oracle = rank_one_oracle(&atoms, tau);
        assert_eq!(s.eigenvalues.len(), oracle.len());
        for (e, o) in s.eigenvalues.iter().zip(&oracle) {
            assert!((e - o).abs() < 1e-8, "secular {e} vs oracle {o}");
        }
        assert!(s.check_interlacing(&[0.0, 1.0, 2.0]));
    }

    #[test]
    fn linear_term_adds_roots_on_both_sides() {
        // With c1 > 0 the function climbs from -inf to +inf across the
        // whole line, so every tau picks up N + 1 eigenvalues.
        let measure = MatrixMeasure::scalar(vec![(0.0, 1.0), (1.0, 1.0), (2.0, 1.0)], None).unwrap();
        let model =
            TruncatedModel::new(&measure, 3, scalar_matrix(0.0), scalar_matrix(1.0)).unwrap();
        let s = extension_eigenvalues(&model, Tau::Finite(0.3), WIDE).unwrap();
        assert_eq!(s.eigenvalues.len(), 4);
        assert!(s.check_interlacing(&[0.0, 1.0, 2.0]));
        assert!(s.residuals.iter().all(|r| *r < 1e-6));
        // Verify each root against the defining equation directly.
        for &e in &s.eigenvalues {
            assert!((model.m_real(e) - 0.3).abs() < 1e-6, "root {e}");
        }
    }

    #[test]
    fn two_taus_interlace_each_other() {
        let model =
            scalar_model(vec![(0.0, 0.5), (0.7, 1.2), (1.5, 0.3), (3.0, 2.0)]).unwrap();
        let s1 = extension_eigenvalues(&model, Tau::Finite(-0.4), WIDE).unwrap();
        let s2 = extension_eigenvalues(&model, Tau::Finite(0.9), WIDE).unwrap();
        // Between consecutive eigenvalues of one extension lies exactly one
        // of the other (they share no eigenvalues for distinct taus).
        let mut merged: Vec<(f64, u8)> = s1
            .eigenvalues
            .iter()
            .map(|&e| (e, 1u8))
            .chain(s2.eigenvalues.iter().map(|&e| (e, 2u8)))
            .collect();
        merged.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for w in merged.windows(2) {
            assert_ne!(w[0].1, w[1].1, "same-tau eigenvalues adjacent: {merged:?}");
        }
    }

    #[test]
    fn tau_monotonicity_of_branches() {
        let model = scalar_model(vec![(0.0, 1.0), (1.0, 0.5), (2.5, 1.5)]).unwrap();
        let taus = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let mut per_bracket: Vec<Vec<f64>> = vec![Vec::new(); 2];
        for &t in &taus {
            let s = extension_eigenvalues(&model, Tau::Finite(t), WIDE).unwrap();
            for (i, br) in [(0.0, 1.0), (1.0, 2.5)].iter().enumerate() {
                let inside: Vec<f64> = s
                    .eigenvalues
                    .iter()
                    .copied()
                    .filter(|&e| e > br.0 && e < br.1)
                    .collect();
                assert_eq!(inside.len(), 1);
                per_bracket[i].push(inside[0]);
            }
        }
        for branch in &per_bracket {
            for w in branch.windows(2) {
                assert!(w[1] > w[0], "branch not increasing: {branch:?}");
            }
        }
    }

    #[test]
    fn window_on_atom_is_rejected() {
        let model = scalar_model(vec![(0.0, 1.0), (1.0, 1.0)]).unwrap();
        assert!(matches!(
            extension_eigenvalues(&model, Tau::Finite(0.0), (0.0, 2.0)),
            Err(ExtensionError::WindowOnAtom { .. })
        ));
    }

    #[test]
    fn nonscalar_is_rejected() {
        let m = MatrixMeasure::scalar(vec![(0.0, 1.0), (1.0, 1.0)], None)
            .unwrap()
            .direct_power(2)
            .unwrap();
        let model = TruncatedModel::plain(&m, 2).unwrap();
        assert!(matches!(
            extension_eigenvalues(&model, Tau::Finite(0.0), WIDE),
            Err(ExtensionError::NonScalar { dim: 2 })
        ));
    }

    #[test]
    fn condition18_single_atom() {
        let pts = MatrixMeasure::scalar(vec![(0.0, 1.0)], None).unwrap();
        let rep = condition18_check(&pts, 1.0, 1, 1e12).unwrap();
        match rep.result {
            Condition18Result::Finite { value, .. } => assert_relative_eq!(value, 1.0),
            other => panic!("expected finite, got {other:?}"),
        }
        let rep = condition18_check(&pts, 0.0, 1, 1e12).unwrap();
        assert!(matches!(rep.result, Condition18Result::Divergent { .. }));
    }

    #[test]
    fn nowhere_dense_empty_and_finite_sets() {
        let rep = nowhere_dense_witness(&[], (0.0, 1.0), 0.25);
        assert!(rep.all_windows_have_gaps);
        for w in &rep.windows {
            assert_relative_eq!(w.gap_length, w.window.1 - w.window.0);
        }
        let rep = nowhere_dense_witness(&[0.1, 0.5, 0.55, 0.9], (0.0, 1.0), 0.25);
        assert!(rep.all_windows_have_gaps);
        assert!(rep.windows.iter().all(|w| w.gap_length > 0.0));
    }

    #[test]
    fn spectrum_partition_carries_generator_candidates() {
        let model = scalar_model(vec![(0.0, 1.0), (1.0, 1.0), (2.0, 1.0)])
            .unwrap()
            .with_generator_accumulation(vec![0.5, 1.5, 9.0]);
        let p = spectrum_partition(&model, Tau::Infinity, (-1.0, 3.0)).unwrap();
        assert_eq!(p.point_spectrum, vec![0.0, 1.0, 2.0]);
        assert_eq!(p.essential_candidates, vec![0.5, 1.5]);
        let empty = spectrum_partition(&model, Tau::Infinity, (5.0, 6.0)).unwrap();
        assert!(empty.point_spectrum.is_empty());
        assert!(empty.essential_candidates.is_empty());
    }

    #[test]
    fn criterion_consistency_on_shared_points() {
        let model = scalar_model(vec![(0.0, 1.0), (1.0, 0.3), (2.0, 0.9)]).unwrap();
        let ys = crate::herglotz::default_y_ladder();
        for lambda in [0.5, 1.7, -3.0, 0.0, 1.0] {
            assert!(criterion_consistency(&model, lambda, &ys, 1e12).unwrap());
        }
    }
}
