//! Explicit measure families whose accumulation points all pass the
//! finite-second-moment boundary criterion while the atoms pile up inside
//! a prescribed interval.
//!
//! Two constructions are provided, selected by whether the target interval
//! `I = (mu1, mu2)` is bounded above:
//!
//! - bounded: anchors `l_k = mu2 - (mu2 - mu1) 2^{-(k+1)}` increase to
//!   `mu2`; cluster `k` (k = 1..K) holds satellites
//!   `l_{jk} = l_k - min(1 - eps, l_k - l_{k-1}) / (j+1)` with weights
//!   `F_{jk} = u_{jk} (l_k - l_{jk})^2`, `u_{jk} = s_k 2^{-j}`,
//!   `s_k = 2^{-k}`; unit atoms at the integers outside `[mu1, mu2]`
//!   make the total mass infinite while keeping the weighted mass finite.
//! - unbounded: `l_k = k`, satellites `l_{jk} = k + 1/(j+1)` with masses
//!   `F_j = 2^{-j} (j+1)^{-2}` identical across `k`; every unit window
//!   carries the same mass, so no outside part is needed.
//!
//! All tail sums have geometric closed forms, so every certificate the
//! verifier emits is backed by an analytic bound.

use serde::Serialize;
use thiserror::Error;

use crate::herglotz::{
    second_moment_window, HerglotzError, MassDivergence, MatrixMeasure, SecondMomentResult,
    TailBound, TailComponent, DEFAULT_DIVERGENCE_THRESHOLD,
};
use crate::linalg::basis_vector;

/// Satellite offsets are capped strictly below 1 by this margin.
const GAP_MARGIN: f64 = 1e-9;
/// Extra integers materialized on each side of the interval.
const LATTICE_PAD: i64 = 50;
/// Minimum run length for accumulation detection.
pub const DEFAULT_MIN_RUN: usize = 5;

#[derive(Debug, Error)]
pub enum CounterexampleError {
    #[error("invalid interval: mu1 = {mu1}, mu2 = {mu2}")]
    InvalidInterval { mu1: f64, mu2: f64 },
    #[error("unbounded construction requires mu1 <= 1 (got {mu1})")]
    Mu1Normalization { mu1: f64 },
    #[error("K, J and defect must all be at least 1")]
    EmptySpec,
    #[error(transparent)]
    Measure(#[from] HerglotzError),
}

/// Which construction applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalCase {
    Bounded,
    Unbounded,
}

/// Parameters of a counterexample build.
#[derive(Debug, Clone, Copy)]
pub struct CounterexampleSpec {
    pub mu1: f64,
    /// `f64::INFINITY` selects the unbounded construction.
    pub mu2: f64,
    /// Number of retained accumulation points `l_1 .. l_K`.
    pub k_points: usize,
    /// Satellites per accumulation point.
    pub j_satellites: usize,
    /// Number of direct-sum copies (deficiency index of the model).
    pub defect: usize,
}

impl CounterexampleSpec {
    pub fn case(&self) -> IntervalCase {
        if self.mu2.is_infinite() {
            IntervalCase::Unbounded
        } else {
            IntervalCase::Bounded
        }
    }

    pub fn validate(&self) -> Result<(), CounterexampleError> {
        if !self.mu1.is_finite() || self.mu2.is_nan() || self.mu1 >= self.mu2 {
            return Err(CounterexampleError::InvalidInterval {
                mu1: self.mu1,
                mu2: self.mu2,
            });
        }
        if self.k_points == 0 || self.j_satellites == 0 || self.defect == 0 {
            return Err(CounterexampleError::EmptySpec);
        }
        if self.case() == IntervalCase::Unbounded && self.mu1 > 1.0 {
            return Err(CounterexampleError::Mu1Normalization { mu1: self.mu1 });
        }
        Ok(())
    }
}

/// The construction-time sequences behind a built measure.
#[derive(Debug, Clone)]
pub enum WeightsMeta {
    Bounded {
        /// Anchors `l_0 .. l_K` (index 0 is the left edge of cluster 1).
        anchors: Vec<f64>,
        /// Cluster masses `s_k = 2^{-k}`, k = 1..K.
        s: Vec<f64>,
        /// `u[k-1][j-1] = s_k 2^{-j}`.
        u: Vec<Vec<f64>>,
        /// `f[k-1][j-1] = u_{jk} (l_k - l_{jk})^2`.
        f: Vec<Vec<f64>>,
    },
    Unbounded {
        /// `f[j-1] = 2^{-j} (j+1)^{-2}`.
        f: Vec<f64>,
        /// Certified value of the full series `sum_j F_j` (one unit window).
        window_mass: f64,
    },
}

/// A built counterexample measure plus its provenance data.
#[derive(Debug, Clone)]
pub struct CounterexampleMeasure {
    /// The `defect`-fold block measure.
    pub measure: MatrixMeasure,
    /// Retained accumulation points `l_1 .. l_K`.
    pub accumulation_points: Vec<f64>,
    /// `satellites[k-1][j-1] = l_{jk}`.
    pub satellites: Vec<Vec<f64>>,
    pub weights: WeightsMeta,
    pub spec: CounterexampleSpec,
}

/// Dispatches on the interval case.
pub fn build(spec: &CounterexampleSpec) -> Result<CounterexampleMeasure, CounterexampleError> {
    spec.validate()?;
    match spec.case() {
        IntervalCase::Bounded => build_bounded(spec),
        IntervalCase::Unbounded => build_unbounded(spec),
    }
}

fn pow2(n: i32) -> f64 {
    0.5f64.powi(n)
}

/// Bounded-interval construction (`mu2` finite).
pub fn build_bounded(spec: &CounterexampleSpec) -> Result<CounterexampleMeasure, CounterexampleError> {
    spec.validate()?;
    if spec.case() != IntervalCase::Bounded {
        return Err(CounterexampleError::InvalidInterval {
            mu1: spec.mu1,
            mu2: spec.mu2,
        });
    }
    let (mu1, mu2) = (spec.mu1, spec.mu2);
    let (kk, jj) = (spec.k_points, spec.j_satellites);
    let span = mu2 - mu1;
    let anchor = |k: usize| mu2 - span * pow2(k as i32 + 1);
    let anchors: Vec<f64> = (0..=kk).map(anchor).collect();

    let mut atoms: Vec<(f64, f64)> = Vec::with_capacity(kk * jj + 2 * LATTICE_PAD as usize);
    let mut satellites = Vec::with_capacity(kk);
    let mut s = Vec::with_capacity(kk);
    let mut u = Vec::with_capacity(kk);
    let mut f = Vec::with_capacity(kk);
    let mut components = Vec::new();
    for k in 1..=kk {
        let lam = anchors[k];
        let gap = (lam - anchors[k - 1]).min(1.0 - GAP_MARGIN);
        let s_k = pow2(k as i32);
        let mut sat_k = Vec::with_capacity(jj);
        let mut u_k = Vec::with_capacity(jj);
        let mut f_k = Vec::with_capacity(jj);
        for j in 1..=jj {
            let t = lam - gap / (j as f64 + 1.0);
            // Recompute the offset from the stored abscissa so that weight
            // and abscissa stay consistent to the last bit.
            let off = lam - t;
            let u_jk = s_k * pow2(j as i32);
            let f_jk = u_jk * off * off;
            atoms.push((t, f_jk));
            sat_k.push(t);
            u_k.push(u_jk);
            f_k.push(f_jk);
        }
        // Beyond-J satellites of this cluster: positions in (l_{J,k}, l_k),
        // plain mass <= (gap/(J+2))^2 s_k 2^{-J}, and second moment at l_k
        // exactly sum_{j>J} u_{jk} = s_k 2^{-J}.
        components.push(TailComponent::Cluster {
            point: lam,
            lo: *sat_k.last().unwrap(),
            hi: lam,
            mass: (gap / (jj as f64 + 2.0)).powi(2) * s_k * pow2(jj as i32),
            second_moment_at_point: s_k * pow2(jj as i32),
        });
        satellites.push(sat_k);
        s.push(s_k);
        u.push(u_k);
        f.push(f_k);
    }
    // Beyond-K clusters live in [l_{1,K+1}, mu2); their total mass is at
    // most sum_{k>K} s_k = 2^{-K}.
    let lam_k1 = anchor(kk + 1);
    let gap_k1 = (lam_k1 - anchors[kk]).min(1.0 - GAP_MARGIN);
    let band_lo = lam_k1 - gap_k1 / 2.0;
    components.push(TailComponent::Band {
        lo: band_lo,
        hi: mu2,
        mass: pow2(kk as i32),
    });
    // Unit atoms at the integers outside [mu1, mu2].
    let m_out = mu1.abs().max(mu2.abs()).ceil() as i64 + LATTICE_PAD;
    for m in -m_out..=m_out {
        let t = m as f64;
        if t < mu1 || t > mu2 {
            atoms.push((t, 1.0));
        }
    }
    let far_weighted = 2.0 * (std::f64::consts::FRAC_PI_2 - (m_out as f64).atan());
    components.push(TailComponent::Far {
        min_abs: (m_out + 1) as f64,
        weighted_mass: far_weighted,
    });
    let weighted_mass = pow2(jj as i32) + pow2(kk as i32) + far_weighted;
    let tail = TailBound {
        weighted_mass,
        infinite_total_mass: true,
        components,
    };
    atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let scalar = MatrixMeasure::scalar(atoms, Some(tail))?;
    let measure = scalar.direct_power(spec.defect)?;
    Ok(CounterexampleMeasure {
        measure,
        accumulation_points: anchors[1..].to_vec(),
        satellites,
        weights: WeightsMeta::Bounded { anchors, s, u, f },
        spec: *spec,
    })
}

/// Unbounded-interval construction (`mu2 = inf`, `mu1 <= 1`).
pub fn build_unbounded(
    spec: &CounterexampleSpec,
) -> Result<CounterexampleMeasure, CounterexampleError> {
    spec.validate()?;
    if spec.case() != IntervalCase::Unbounded {
        return Err(CounterexampleError::InvalidInterval {
            mu1: spec.mu1,
            mu2: spec.mu2,
        });
    }
    let (kk, jj) = (spec.k_points, spec.j_satellites);
    let f_mass = |j: usize| pow2(j as i32) / ((j as f64 + 1.0) * (j as f64 + 1.0));
    let f: Vec<f64> = (1..=jj).map(f_mass).collect();
    // One unit window carries s = sum_{j>=1} F_j; summing to j = 400 leaves
    // a tail below 2^-400.
    let window_mass: f64 = (1..=400).rev().map(f_mass).sum();

    let mut atoms: Vec<(f64, f64)> = Vec::with_capacity(kk * jj);
    let mut satellites = Vec::with_capacity(kk);
    let mut components = Vec::new();
    for k in 1..=kk {
        let lam = k as f64;
        let mut sat_k = Vec::with_capacity(jj);
        for j in 1..=jj {
            let t = lam + 1.0 / (j as f64 + 1.0);
            atoms.push((t, f[j - 1]));
            sat_k.push(t);
        }
        components.push(TailComponent::Cluster {
            point: lam,
            lo: lam,
            hi: lam + 1.0 / (jj as f64 + 2.0),
            mass: pow2(jj as i32) / ((jj as f64 + 2.0) * (jj as f64 + 2.0)),
            second_moment_at_point: pow2(jj as i32),
        });
        satellites.push(sat_k);
    }
    // Windows beyond K: atoms at t >= K + 1, weighted mass bounded by
    // s * integral_K^inf dt/(1+t^2).
    let far_weighted = window_mass * (std::f64::consts::FRAC_PI_2 - (kk as f64).atan());
    components.push(TailComponent::Far {
        min_abs: kk as f64 + 1.0,
        weighted_mass: far_weighted,
    });
    let cluster_mass_total: f64 = kk as f64 * pow2(jj as i32);
    let tail = TailBound {
        weighted_mass: cluster_mass_total + far_weighted,
        infinite_total_mass: true,
        components,
    };
    atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let scalar = MatrixMeasure::scalar(atoms, Some(tail))?;
    let measure = scalar.direct_power(spec.defect)?;
    Ok(CounterexampleMeasure {
        measure,
        accumulation_points: (1..=kk).map(|k| k as f64).collect(),
        satellites,
        weights: WeightsMeta::Unbounded { f, window_mass },
        spec: *spec,
    })
}

impl CounterexampleMeasure {
    /// Window `[alpha_k, beta_k)` isolating cluster `k` (1-based).
    pub fn cluster_window(&self, k: usize) -> (f64, f64) {
        assert!(k >= 1 && k <= self.spec.k_points);
        match &self.weights {
            WeightsMeta::Bounded { anchors, .. } => {
                let lam = anchors[k];
                let first_sat = self.satellites[k - 1][0];
                let alpha = 0.5 * (anchors[k - 1] + first_sat);
                let beta = if k < self.spec.k_points {
                    0.5 * (lam + self.satellites[k][0])
                } else {
                    0.5 * (lam + self.spec.mu2)
                };
                (alpha, beta)
            }
            WeightsMeta::Unbounded { .. } => {
                let lam = k as f64;
                (lam - 0.25, lam + 0.75)
            }
        }
    }

    /// Expected mathematical window value of the second moment at `l_k`:
    /// `s_k` for the bounded family, the full geometric series value 1 for
    /// the unbounded one.
    pub fn expected_window_value(&self, k: usize) -> f64 {
        match &self.weights {
            WeightsMeta::Bounded { s, .. } => s[k - 1],
            WeightsMeta::Unbounded { .. } => 1.0,
        }
    }

    /// Scalar measure of the accumulation points themselves, each carrying
    /// its cluster mass, with an integral-bound tail over the unretained
    /// points. Useful for sums over `c_k / (l_k - l)^2`.
    pub fn accumulation_measure(&self) -> Result<MatrixMeasure, CounterexampleError> {
        let atoms: Vec<(f64, f64)> = match &self.weights {
            WeightsMeta::Bounded { s, .. } => self
                .accumulation_points
                .iter()
                .zip(s)
                .map(|(&l, &sk)| (l, sk))
                .collect(),
            WeightsMeta::Unbounded { window_mass, .. } => self
                .accumulation_points
                .iter()
                .map(|&l| (l, *window_mass))
                .collect(),
        };
        let tail = match &self.weights {
            WeightsMeta::Bounded { anchors, .. } => TailBound {
                weighted_mass: pow2(self.spec.k_points as i32),
                infinite_total_mass: false,
                components: vec![TailComponent::Band {
                    lo: anchors[self.spec.k_points],
                    hi: self.spec.mu2,
                    mass: pow2(self.spec.k_points as i32),
                }],
            },
            WeightsMeta::Unbounded { window_mass, .. } => {
                let kk = self.spec.k_points as f64;
                TailBound {
                    weighted_mass: window_mass * (std::f64::consts::FRAC_PI_2 - kk.atan()),
                    infinite_total_mass: true,
                    components: vec![TailComponent::Far {
                        min_abs: kk + 1.0,
                        weighted_mass: window_mass
                            * (std::f64::consts::FRAC_PI_2 - kk.atan()),
                    }],
                }
            }
        };
        Ok(MatrixMeasure::scalar(atoms, Some(tail))?)
    }
}

/// One per-accumulation-point block of a verification report.
#[derive(Debug, Clone, Serialize)]
pub struct PointCheck {
    pub lambda: f64,
    pub window: (f64, f64),
    pub window_value: f64,
    pub window_error: f64,
    pub expected_window_value: f64,
    pub window_deviation: f64,
    pub complement_value: f64,
    pub complement_error: f64,
    pub pass: bool,
}

/// Total-mass divergence certificate as reported.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MassCertificate {
    PartialSumsExceed { threshold: f64, partial: f64 },
    InfiniteTail { materialized: f64 },
    None,
}

/// Verification report for a constructed measure.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub case: IntervalCase,
    /// Certified value of `sum |F_k| / (1 + t_k^2)`.
    pub summability_value: f64,
    pub summability_tail_bound: f64,
    pub points: Vec<PointCheck>,
    pub total_mass: MassCertificate,
    pub pass: bool,
}

/// Checks the defining certificates of a constructed measure: weighted
/// summability, per-point window sums against their closed forms, finite
/// complements, and the total-mass divergence certificate.
///
/// Failures are reported in the returned struct, never thrown.
pub fn verify_counterexample(cm: &CounterexampleMeasure) -> VerifyReport {
    let measure = &cm.measure;
    let (w_value, w_tail) = measure.weighted_mass();
    let dim = measure.dim();
    let mut points = Vec::with_capacity(cm.accumulation_points.len());
    let mut all_pass = w_value.is_finite() && w_tail.is_finite();
    for (idx, &lam) in cm.accumulation_points.iter().enumerate() {
        let k = idx + 1;
        let window = cm.cluster_window(k);
        let expected = cm.expected_window_value(k);
        // Every basis direction must reproduce the scalar numbers; check
        // them all and report the first direction's values.
        let mut window_value = f64::NAN;
        let mut window_error = f64::NAN;
        let mut complement_value = f64::NAN;
        let mut complement_error = f64::NAN;
        let mut directions_agree = true;
        for dir in 0..dim {
            let h = basis_vector(dim, dir);
            let win = second_moment_window(measure, lam, &h, window);
            let (wv, we) = match win {
                Ok(SecondMomentResult::Finite { value, error_bound }) => (value, error_bound),
                _ => (f64::INFINITY, f64::INFINITY),
            };
            let comp = complement_second_moment(measure, lam, &h, window);
            let (cv, ce) = match comp {
                Ok((v, e)) => (v, e),
                Err(_) => (f64::INFINITY, f64::INFINITY),
            };
            if dir == 0 {
                window_value = wv;
                window_error = we;
                complement_value = cv;
                complement_error = ce;
            } else if (wv - window_value).abs() > 1e-12 * window_value.abs().max(1.0) {
                directions_agree = false;
            }
        }
        let deviation = (window_value - expected).abs();
        let pass = directions_agree
            && window_value.is_finite()
            && complement_value.is_finite()
            && complement_error.is_finite()
            && deviation <= 1e-14 + window_error;
        all_pass &= pass;
        points.push(PointCheck {
            lambda: lam,
            window,
            window_value,
            window_error,
            expected_window_value: expected,
            window_deviation: deviation,
            complement_value,
            complement_error,
            pass,
        });
    }
    let total_mass = match measure.total_mass_divergence(DEFAULT_DIVERGENCE_THRESHOLD) {
        Some(MassDivergence::PartialSumsExceed {
            threshold, partial, ..
        }) => MassCertificate::PartialSumsExceed { threshold, partial },
        Some(MassDivergence::InfiniteTail { materialized }) => {
            MassCertificate::InfiniteTail { materialized }
        }
        None => {
            all_pass = false;
            MassCertificate::None
        }
    };
    VerifyReport {
        case: cm.spec.case(),
        summability_value: w_value,
        summability_tail_bound: w_tail,
        points,
        total_mass,
        pass: all_pass,
    }
}

/// Second moment over atoms outside `[window.0, window.1)`, with a
/// conservative error bound from the full tail remainder.
fn complement_second_moment(
    measure: &MatrixMeasure,
    lambda: f64,
    h: &crate::linalg::CVector,
    window: (f64, f64),
) -> Result<(f64, f64), HerglotzError> {
    let mut value = 0.0;
    for a in measure.atoms() {
        if a.t >= window.0 && a.t < window.1 {
            continue;
        }
        let d = a.t - lambda;
        if d == 0.0 {
            continue;
        }
        value += crate::linalg::quadratic_form(&a.weight, h) / (d * d);
    }
    let err = match measure.tail() {
        Some(t) => {
            let r = t.second_moment_remainder(lambda);
            if !r.is_finite() {
                return Err(HerglotzError::NoTailBound { lambda });
            }
            r
        }
        None => 0.0,
    };
    Ok((value, err))
}

/// Detects points where the abscissa list accumulates.
///
/// Sorted abscissas are scanned for maximal runs of at least `min_run`
/// points whose consecutive gaps shrink monotonically toward one end. The
/// limit of each run is recovered by fitting the three innermost points to
/// the harmonic model `t_j = L -+ c/(j + b)` (exact for the constructors
/// here); a run is accepted only when the fit from the two innermost point
/// triples agrees within `resolution`. Detected limits closer than
/// `resolution` merge.
pub fn detect_accumulation_points(
    abscissas: &[f64],
    resolution: f64,
    min_run: usize,
) -> Vec<f64> {
    assert!(resolution > 0.0);
    let mut ts: Vec<f64> = abscissas.iter().copied().filter(|t| t.is_finite()).collect();
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ts.dedup();
    if ts.len() < min_run.max(4) {
        return Vec::new();
    }
    let gaps: Vec<f64> = ts.windows(2).map(|w| w[1] - w[0]).collect();
    let mut candidates: Vec<f64> = Vec::new();

    // Harmonic three-point extrapolation. `p1, p2, p3` are ordered from the
    // coarse side toward the accumulation side; returns the predicted limit
    // beyond `p3`.
    let extrapolate = |p1: f64, p2: f64, p3: f64| -> Option<f64> {
        let g1 = (p2 - p1).abs();
        let g2 = (p3 - p2).abs();
        if g2 <= 0.0 || g1 <= g2 {
            return None;
        }
        let rho = g1 / g2;
        let x = 2.0 * rho / (rho - 1.0);
        let jump = g2 * (x - 1.0);
        if !jump.is_finite() || jump < 0.0 {
            return None;
        }
        Some(if p3 > p1 { p3 + jump } else { p3 - jump })
    };

    // Rightward runs: gaps strictly decreasing left to right.
    let mut i = 0;
    while i < gaps.len() {
        let mut j = i;
        while j + 1 < gaps.len() && gaps[j + 1] < gaps[j] {
            j += 1;
        }
        let run_points = j - i + 2;
        if run_points >= min_run {
            let b = j + 1; // index of the innermost point
            if let (Some(l1), Some(l2)) = (
                extrapolate(ts[b - 2], ts[b - 1], ts[b]),
                extrapolate(ts[b - 3], ts[b - 2], ts[b - 1]),
            ) {
                if (l1 - l2).abs() <= resolution {
                    candidates.push(l1);
                }
            }
        }
        i = j + 1;
    }
    // Leftward runs: gaps strictly increasing left to right.
    let mut i = 0;
    while i < gaps.len() {
        let mut j = i;
        while j + 1 < gaps.len() && gaps[j + 1] > gaps[j] {
            j += 1;
        }
        let run_points = j - i + 2;
        if run_points >= min_run {
            let a = i; // index of the innermost point
            if let (Some(l1), Some(l2)) = (
                extrapolate(ts[a + 2], ts[a + 1], ts[a]),
                extrapolate(ts[a + 3], ts[a + 2], ts[a + 1]),
            ) {
                if (l1 - l2).abs() <= resolution {
                    candidates.push(l1);
                }
            }
        }
        i = j + 1;
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut merged: Vec<f64> = Vec::new();
    for c in candidates {
        match merged.last() {
            Some(&last) if (c - last).abs() <= resolution => {}
            _ => merged.push(c),
        }
    }
    merged
}

/// Accumulation points of the built measure detected inside `I`, from the
/// atom abscissas alone.
pub fn essential_spectrum_accumulation(cm: &CounterexampleMeasure, resolution: f64) -> Vec<f64> {
    let ts: Vec<f64> = cm.measure.atoms().iter().map(|a| a.t).collect();
    detect_accumulation_points(&ts, resolution, DEFAULT_MIN_RUN)
        .into_iter()
        .filter(|&t| t > cm.spec.mu1 && t < cm.spec.mu2)
        .collect()
}

/// Weight matrices are real scalars replicated blockwise; this extracts the
/// scalar mass of atom `i` (valid for constructor-built measures).
pub fn scalar_mass(measure: &MatrixMeasure, i: usize) -> f64 {
    measure.atoms()[i].weight[(0, 0)].re
}
