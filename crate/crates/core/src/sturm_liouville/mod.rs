//! Forward Weyl-Titchmarsh analysis of `-y'' + p(t) y = l y` on `(0, inf)`
//! with the boundary condition `y'(0) = theta * y(0)`.
//!
//! The singular endpoint is probed through truncation ladders: nested Weyl
//! disks for nonreal spectral parameters, renormalized direction integrals
//! for real ones. The square root branch is principal with `Im sqrt(z) >= 0`,
//! so `exp(i sqrt(z) t)` is the decaying solution in the upper half plane.

pub mod expr;
pub mod ode;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::util::{linear_fit, par_map};
use expr::{Expr, ExprError};
use ode::{integrate_checkpoints, IntegStats, OdeError};

/// Default truncation-time ladder.
pub fn default_t_ladder() -> Vec<f64> {
    vec![10.0, 20.0, 40.0, 80.0]
}

/// Default imaginary-offset ladder for Stieltjes inversion.
pub fn default_eta_ladder() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3, 1e-4]
}

/// Default matching time for the far-field closure of the m-function.
pub const DEFAULT_T_MATCH: f64 = 40.0;

/// Maximum segment length between renormalizations / disk checks.
const MAX_SEGMENT: f64 = 5.0;

#[derive(Debug, Error)]
pub enum SlError {
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("growth discrimination failed at the largest truncation")]
    Inconclusive { table: Vec<LadderRow> },
    #[error("Weyl disk radius failed to shrink (limit circle): final disk radius {radius:.3e}")]
    DiskNotShrinking { disks: Vec<WeylDisk>, radius: f64 },
    #[error("spectral mass endpoint {endpoint} looks like an atom: eta * Im m does not vanish")]
    AtomNearEndpoint { endpoint: f64, trace: Vec<(f64, f64)> },
}

/// Potential data: an expression tree or samples with linear interpolation.
#[derive(Debug, Clone)]
pub enum Potential {
    Expr(Expr),
    /// Strictly increasing sample times; values interpolate linearly and
    /// clamp to the nearest endpoint outside the sampled range.
    Sampled { ts: Vec<f64>, ps: Vec<f64> },
}

impl Potential {
    pub fn zero() -> Self {
        Potential::Expr(Expr::Num(0.0))
    }

    pub fn parse(text: &str) -> Result<Self, ExprError> {
        Ok(Potential::Expr(expr::parse(text)?))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Potential::Expr(e) => e.eval(t),
            Potential::Sampled { ts, ps } => {
                if ts.is_empty() {
                    return 0.0;
                }
                if t <= ts[0] {
                    return ps[0];
                }
                if t >= ts[ts.len() - 1] {
                    return ps[ps.len() - 1];
                }
                let i = ts.partition_point(|&x| x <= t) - 1;
                let (t0, t1) = (ts[i], ts[i + 1]);
                let w = (t - t0) / (t1 - t0);
                ps[i] * (1.0 - w) + ps[i + 1] * w
            }
        }
    }
}

/// Half-line problem: potential plus the boundary parameter of
/// `y'(0) - theta y(0) = 0`.
#[derive(Debug, Clone)]
pub struct SLProblem {
    pub potential: Potential,
    pub theta: f64,
}

impl SLProblem {
    pub fn new(potential: Potential, theta: f64) -> Self {
        Self { potential, theta }
    }

    pub fn free(theta: f64) -> Self {
        Self::new(Potential::zero(), theta)
    }

    /// Trapezoid spot check of `int_0^c |p|`; the declared local
    /// integrability near 0 is probed, not proven.
    pub fn local_integrability_check(&self, c: f64, n: usize) -> f64 {
        let n = n.max(2);
        let h = c / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let a = self.potential.eval(h * i as f64 + h * 1e-9).abs();
            let b = self.potential.eval(h * (i + 1) as f64).abs();
            acc += 0.5 * h * (a + b);
        }
        acc
    }
}

/// Samples of one IVP solution along a grid.
#[derive(Debug, Clone)]
pub struct IVPSolution {
    pub lambda: Complex64,
    pub grid: Vec<f64>,
    pub y: Vec<Complex64>,
    pub dy: Vec<Complex64>,
    /// Accumulated local-error estimate of the integrator.
    pub error_estimate: f64,
    /// Scale-relative Wronskian residual of the tracked fundamental pair:
    /// `max_t |W(t) - W(0)| / max(1, |y||y2'| + |y'||y2|)`.
    pub wronskian_drift: f64,
}

fn rhs_pair(
    p: &Potential,
    z: Complex64,
) -> impl Fn(f64, &[Complex64; 4]) -> [Complex64; 4] + '_ {
    move |t: f64, s: &[Complex64; 4]| {
        let q = Complex64::new(p.eval(t), 0.0) - z;
        [s[1], q * s[0], s[3], q * s[2]]
    }
}

/// Integrates `-y'' + p y = l y` from `y(0), y'(0) = init` to `t_end`,
/// sampling on a uniform grid. A companion solution rides along so the
/// Wronskian residual can be reported.
pub fn solve_ivp(
    problem: &SLProblem,
    lambda: Complex64,
    init: (Complex64, Complex64),
    t_end: f64,
    tol: f64,
) -> Result<IVPSolution, SlError> {
    if t_end <= 0.0 || tol <= 0.0 {
        return Err(SlError::InvalidParameter(
            "t_end and tol must be positive".into(),
        ));
    }
    let n_grid = 200usize;
    let grid: Vec<f64> = (1..=n_grid)
        .map(|i| t_end * i as f64 / n_grid as f64)
        .collect();
    let (y0, dy0) = init;
    // Companion with W(y, y2) = |y0|^2 + |dy0|^2 != 0.
    let y2 = [-dy0.conj(), y0.conj()];
    let state0 = [y0, dy0, y2[0], y2[1]];
    let w0 = state0[0] * state0[3] - state0[1] * state0[2];
    let f = rhs_pair(&problem.potential, lambda);
    let mut out_grid = vec![0.0];
    let mut out_y = vec![y0];
    let mut out_dy = vec![dy0];
    let mut drift = 0.0f64;
    let stats = integrate_checkpoints(&f, 0.0, state0, &grid, tol, tol, |t, s| {
        out_grid.push(t);
        out_y.push(s[0]);
        out_dy.push(s[1]);
        let w = s[0] * s[3] - s[1] * s[2];
        let scale = (s[0].norm() * s[3].norm() + s[1].norm() * s[2].norm()).max(1.0);
        drift = drift.max((w - w0).norm() / scale);
    })?;
    Ok(IVPSolution {
        lambda,
        grid: out_grid,
        y: out_y,
        dy: out_dy,
        error_estimate: stats.error_estimate,
        wronskian_drift: drift,
    })
}

/// The canonical pair: `phi` with `(1, theta)` initial data, `chi` with
/// `(0, 1)`, so `W(phi, chi) = 1`.
struct PairSample {
    t: f64,
    phi: Complex64,
    dphi: Complex64,
    chi: Complex64,
    dchi: Complex64,
    /// Running `int_0^t |chi|^2`.
    chi_l2: f64,
}

fn integrate_canonical_pair(
    problem: &SLProblem,
    z: Complex64,
    checkpoints: &[f64],
    tol: f64,
    overflow_guard: f64,
) -> Result<(Vec<PairSample>, IntegStats, f64), SlError> {
    let p = &problem.potential;
    let f = move |t: f64, s: &[Complex64; 5]| {
        let q = Complex64::new(p.eval(t), 0.0) - z;
        [
            s[1],
            q * s[0],
            s[3],
            q * s[2],
            Complex64::new(s[2].norm_sqr(), 0.0),
        ]
    };
    let state0 = [
        Complex64::new(1.0, 0.0),
        Complex64::new(problem.theta, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
    ];
    let mut samples = Vec::with_capacity(checkpoints.len());
    let mut drift = 0.0f64;
    let mut overflowed = false;
    let stats = integrate_checkpoints(&f, 0.0, state0, checkpoints, tol, tol, |t, s| {
        if overflowed {
            return;
        }
        samples.push(PairSample {
            t,
            phi: s[0],
            dphi: s[1],
            chi: s[2],
            dchi: s[3],
            chi_l2: s[4].re,
        });
        let w = s[0] * s[3] - s[1] * s[2];
        let scale = (s[0].norm() * s[3].norm() + s[1].norm() * s[2].norm()).max(1.0);
        drift = drift.max((w - Complex64::new(1.0, 0.0)).norm() / scale);
        if s.iter().any(|c| c.norm() > overflow_guard) {
            overflowed = true;
        }
    });
    match stats {
        Ok(st) => Ok((samples, st, drift)),
        Err(e) => {
            // Keep whatever was observed if the guard tripped first.
            if overflowed && !samples.is_empty() {
                Ok((samples, IntegStats::default(), drift))
            } else {
                Err(e.into())
            }
        }
    }
}

/// One Weyl disk: the set of m-candidates at truncation `t`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WeylDisk {
    pub z: (f64, f64),
    pub t: f64,
    pub center: (f64, f64),
    pub radius: f64,
}

/// m-function value with its final disk radius and the full disk ladder.
#[derive(Debug, Clone)]
pub struct WeylM {
    pub value: Complex64,
    pub disk_radius: f64,
    pub disks: Vec<WeylDisk>,
    pub wronskian_drift: f64,
}

fn disk_from_sample(z: Complex64, s: &PairSample) -> WeylDisk {
    // center = -W(phi, conj(chi)) / W(chi, conj(chi)),
    // radius = 1 / (2 |Im z| int |chi|^2).
    let w_phi = s.phi * s.dchi.conj() - s.dphi * s.chi.conj();
    let w_chi = s.chi * s.dchi.conj() - s.dchi * s.chi.conj();
    let center = -w_phi / w_chi;
    let radius = 1.0 / (2.0 * z.im.abs() * s.chi_l2);
    WeylDisk {
        z: (z.re, z.im),
        t: s.t,
        center: (center.re, center.im),
        radius,
    }
}

fn ladder_checkpoints(t_ladder: &[f64]) -> Vec<f64> {
    let mut cps = Vec::new();
    let mut prev = 0.0;
    for &t in t_ladder {
        let n = ((t - prev) / MAX_SEGMENT).ceil().max(1.0) as usize;
        for i in 1..=n {
            cps.push(prev + (t - prev) * i as f64 / n as f64);
        }
        prev = t;
    }
    cps
}

/// Titchmarsh-Weyl m-function at nonreal `z` through nested disks.
///
/// Returns the deepest disk center and radius; errs with
/// [`SlError::DiskNotShrinking`] when the radii stall (limit circle), in
/// which case the value is only determined up to the reported disk.
pub fn weyl_m(
    problem: &SLProblem,
    z: Complex64,
    t_ladder: &[f64],
    tol: f64,
) -> Result<WeylM, SlError> {
    if z.im == 0.0 {
        return Err(SlError::InvalidParameter("Im z must be nonzero".into()));
    }
    if t_ladder.is_empty() || t_ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SlError::InvalidParameter(
            "t_ladder must be strictly increasing and nonempty".into(),
        ));
    }
    let (samples, _, drift) = integrate_canonical_pair(problem, z, t_ladder, tol, 1e140)?;
    let disks: Vec<WeylDisk> = samples.iter().map(|s| disk_from_sample(z, s)).collect();
    let last = disks.last().expect("nonempty ladder");
    let first = disks.first().expect("nonempty ladder");
    if disks.len() >= 2 && last.radius > 0.5 * first.radius {
        return Err(SlError::DiskNotShrinking {
            radius: last.radius,
            disks,
        });
    }
    Ok(WeylM {
        value: Complex64::new(last.center.0, last.center.1),
        disk_radius: last.radius,
        disks,
        wronskian_drift: drift,
    })
}

/// Far-field closure estimate of the m-function: beyond `t_match` the
/// potential is treated as zero, so the square-integrable solution is
/// `exp(i sqrt(z) t)` and `m = -(phi' - i sqrt(z) phi)/(chi' - i sqrt(z) chi)`
/// at `t_match`. Exact for potentials vanishing past `t_match`.
pub fn weyl_m_closed(
    problem: &SLProblem,
    z: Complex64,
    t_match: f64,
    tol: f64,
) -> Result<(Complex64, f64), SlError> {
    let (samples, _, drift) = integrate_canonical_pair(problem, z, &[t_match], tol, 1e140)?;
    let s = samples.last().expect("one checkpoint");
    let k = z.sqrt();
    let ik = Complex64::new(0.0, 1.0) * k;
    let m = -(s.dphi - ik * s.phi) / (s.dchi - ik * s.chi);
    Ok((m, drift))
}

/// One rung of a truncation-ladder diagnostic table.
#[derive(Debug, Clone, Serialize)]
pub struct LadderRow {
    pub t: f64,
    pub radius: Option<f64>,
    pub q_min: Option<f64>,
    pub q_max: Option<f64>,
}

/// How a solution count was determined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CountMethod {
    /// Weyl-disk radius collapse/stall (nonreal lambda).
    Disk,
    /// Renormalized direction-integral growth analysis (real lambda).
    RealSubspace,
}

/// Number of linearly independent square-integrable solutions.
#[derive(Debug, Clone)]
pub struct L2Count {
    pub count: u8,
    pub method: CountMethod,
    pub table: Vec<LadderRow>,
    pub wronskian_drift: f64,
}

/// Classification of a nondecreasing ladder sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GrowthClass {
    Converging,
    Growing,
    Undecided,
}

/// `qs` are values at the ladder times `ts` (both same length, >= 3).
fn classify_growth(ts: &[f64], qs: &[f64], tol: f64) -> GrowthClass {
    let n = qs.len();
    for i in 0..n - 1 {
        let (a, b) = (qs[i], qs[i + 1]);
        if a.is_finite() && b.is_finite() && (b - a).abs() < tol * (1.0 + b.abs()) {
            return GrowthClass::Converging;
        }
    }
    let mut incr_t = Vec::new();
    let mut incr_log = Vec::new();
    for i in 0..n - 1 {
        let d = qs[i + 1] - qs[i];
        if d > 0.0 && d.is_finite() {
            incr_t.push(ts[i + 1]);
            incr_log.push(d.ln());
        }
    }
    if incr_log.len() >= 3 {
        let (slope_t, r2_t) = linear_fit(&incr_t, &incr_log);
        let logs: Vec<f64> = incr_t.iter().map(|t| t.ln()).collect();
        let (slope_lt, r2_lt) = linear_fit(&logs, &incr_log);
        if (slope_t > 0.05 && r2_t > 0.99) || (slope_lt > 0.05 && r2_lt > 0.99) {
            return GrowthClass::Growing;
        }
    }
    // Robust fallback: the integral at least (nearly) doubled over the last
    // doubling of T.
    if n >= 2 {
        let t_half = ts[n - 1] / 2.0;
        let j = (0..n)
            .min_by(|&a, &b| {
                (ts[a] - t_half)
                    .abs()
                    .partial_cmp(&(ts[b] - t_half).abs())
                    .unwrap()
            })
            .unwrap();
        if j < n - 1 && qs[j] > 0.0 && qs[n - 1] / qs[j] >= 1.8 {
            return GrowthClass::Growing;
        }
    }
    GrowthClass::Undecided
}

/// Segment data of the renormalized real-lambda propagation.
struct RealSegment {
    t_end: f64,
    /// Upper-triangular transfer factor in the running orthonormal frame.
    r: [[f64; 2]; 2],
    /// Local Gram of the segment in the frame at its start.
    g: [[f64; 2]; 2],
}

fn real_segments(
    problem: &SLProblem,
    lambda: f64,
    checkpoints: &[f64],
    tol: f64,
) -> Result<(Vec<RealSegment>, f64), SlError> {
    let p = &problem.potential;
    let z = Complex64::new(lambda, 0.0);
    let mut q_frame = [[1.0f64, 0.0], [0.0, 1.0]]; // columns: (y, y') inits
    let mut segs = Vec::with_capacity(checkpoints.len());
    let mut drift = 0.0f64;
    let mut prev = 0.0;
    for &t_end in checkpoints {
        let f = move |t: f64, s: &[Complex64; 7]| {
            let q = Complex64::new(p.eval(t), 0.0) - z;
            [
                s[1],
                q * s[0],
                s[3],
                q * s[2],
                Complex64::new(s[0].norm_sqr(), 0.0),
                s[0].conj() * s[2],
                Complex64::new(s[2].norm_sqr(), 0.0),
            ]
        };
        let state0 = [
            Complex64::new(q_frame[0][0], 0.0),
            Complex64::new(q_frame[1][0], 0.0),
            Complex64::new(q_frame[0][1], 0.0),
            Complex64::new(q_frame[1][1], 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ];
        let w0 = state0[0] * state0[3] - state0[1] * state0[2];
        let mut end = state0;
        integrate_checkpoints(&f, prev, state0, &[t_end], tol, tol, |_, s| {
            end = *s;
        })?;
        let w = end[0] * end[3] - end[1] * end[2];
        let scale = (end[0].norm() * end[3].norm() + end[1].norm() * end[2].norm()).max(1.0);
        drift = drift.max((w - w0).norm() / scale);
        // QR of the end frame [[u, v], [u', v']].
        let (u, du, v, dv) = (end[0].re, end[1].re, end[2].re, end[3].re);
        let n1 = (u * u + du * du).sqrt();
        let q1 = [u / n1, du / n1];
        let r12 = q1[0] * v + q1[1] * dv;
        let w2 = [v - r12 * q1[0], dv - r12 * q1[1]];
        let n2 = (w2[0] * w2[0] + w2[1] * w2[1]).sqrt();
        let q2 = [w2[0] / n2, w2[1] / n2];
        segs.push(RealSegment {
            t_end,
            r: [[n1, r12], [0.0, n2]],
            g: [[end[4].re, end[5].re], [end[5].re, end[6].re]],
        });
        q_frame = [[q1[0], q2[0]], [q1[1], q2[1]]];
        prev = t_end;
    }
    Ok((segs, drift))
}

/// `log int_0^{T_r} |w-solution|^2` for the initial direction
/// `w = (cos th, sin th)`, accumulated in log space (overflow safe).
fn log_direction_integral(segs: &[RealSegment], upto: usize, theta: f64) -> f64 {
    let mut w = [theta.cos(), theta.sin()];
    let mut log_scale = 0.0f64;
    let mut log_terms: Vec<f64> = Vec::with_capacity(upto);
    for seg in &segs[..upto] {
        let g = &seg.g;
        let quad = (g[0][0] * w[0] * w[0] + 2.0 * g[0][1] * w[0] * w[1] + g[1][1] * w[1] * w[1])
            .max(1e-300);
        log_terms.push(2.0 * log_scale + quad.ln());
        let c = [
            seg.r[0][0] * w[0] + seg.r[0][1] * w[1],
            seg.r[1][1] * w[1],
        ];
        let n = (c[0] * c[0] + c[1] * c[1]).sqrt();
        log_scale += n.ln();
        w = [c[0] / n, c[1] / n];
    }
    // logsumexp
    let m = log_terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return f64::NEG_INFINITY;
    }
    m + log_terms.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
}

fn exp_clamped(l: f64) -> f64 {
    if l > 700.0 {
        f64::INFINITY
    } else {
        l.exp()
    }
}

/// Min/max of the direction integral over the unit circle by coarse scan
/// plus golden-section refinement.
fn extremal_direction_integral(segs: &[RealSegment], upto: usize, maximize: bool) -> f64 {
    let eval = |th: f64| {
        let v = log_direction_integral(segs, upto, th);
        if maximize {
            -v
        } else {
            v
        }
    };
    let n_scan = 32;
    let mut best_th = 0.0;
    let mut best = f64::INFINITY;
    for i in 0..n_scan {
        let th = std::f64::consts::PI * i as f64 / n_scan as f64;
        let v = eval(th);
        if v < best {
            best = v;
            best_th = th;
        }
    }
    let mut a = best_th - std::f64::consts::PI / n_scan as f64;
    let mut b = best_th + std::f64::consts::PI / n_scan as f64;
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (eval(c), eval(d));
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = eval(d);
        }
    }
    let l = eval(0.5 * (a + b)).min(best);
    let l = if maximize { -l } else { l };
    exp_clamped(l)
}

/// Counts square-integrable solutions of `-y'' + p y = lambda y`.
///
/// Nonreal `lambda`: Weyl-disk dichotomy (radius collapse means limit
/// point, one solution; stalled radius means limit circle, two solutions).
/// Real `lambda`: growth classification of the extremal direction
/// integrals on the truncation ladder.
pub fn count_l2_solutions(
    problem: &SLProblem,
    lambda: Complex64,
    t_ladder: &[f64],
    tol: f64,
) -> Result<L2Count, SlError> {
    if t_ladder.len() < 3 {
        return Err(SlError::InvalidParameter(
            "t_ladder needs at least 3 rungs".into(),
        ));
    }
    if lambda.im != 0.0 {
        return count_l2_disk(problem, lambda, t_ladder, tol);
    }
    let checkpoints = ladder_checkpoints(t_ladder);
    let (segs, drift) = real_segments(problem, lambda.re, &checkpoints, tol)?;
    let rung_idx: Vec<usize> = t_ladder
        .iter()
        .map(|&t| {
            segs.iter()
                .position(|s| (s.t_end - t).abs() < 1e-9)
                .expect("ladder rung is a checkpoint")
                + 1
        })
        .collect();
    let mut q_min = Vec::new();
    let mut q_max = Vec::new();
    let mut table = Vec::new();
    for (&t, &upto) in t_ladder.iter().zip(&rung_idx) {
        let qmin = extremal_direction_integral(&segs, upto, false);
        let qmax = extremal_direction_integral(&segs, upto, true);
        q_min.push(qmin);
        q_max.push(qmax);
        table.push(LadderRow {
            t,
            radius: None,
            q_min: Some(qmin),
            q_max: Some(qmax),
        });
    }
    // The minimal direction is resolvable only down to the square of the
    // direction-angle resolution times the dominant integral; rungs where
    // the computed minimum sinks into that floor are dropped.
    let mut trusted = q_min.len();
    for i in 0..q_min.len() {
        if q_min[i] <= MIN_DIRECTION_FLOOR * q_max[i] {
            trusted = i;
            break;
        }
    }
    if trusted < 2 {
        return Err(SlError::Inconclusive { table });
    }
    // Classification band: 100 * tol, matching the integrator's achievable
    // global accuracy (same convention as the Wronskian contract).
    let band = 100.0 * tol;
    let min_class = classify_growth(&t_ladder[..trusted], &q_min[..trusted], band);
    let max_class = classify_growth(t_ladder, &q_max, band);
    let count = match (min_class, max_class) {
        (GrowthClass::Growing, _) => 0,
        (GrowthClass::Converging, GrowthClass::Converging) => 2,
        (GrowthClass::Converging, GrowthClass::Growing) => 1,
        _ => {
            return Err(SlError::Inconclusive { table });
        }
    };
    Ok(L2Count {
        count,
        method: CountMethod::RealSubspace,
        table,
        wronskian_drift: drift,
    })
}

const RADIUS_FLOOR: f64 = 1e-12;
/// Relative floor below which a computed minimal-direction integral is
/// dominated by cancellation against the growing direction.
const MIN_DIRECTION_FLOOR: f64 = 1e-28;

fn count_l2_disk(
    problem: &SLProblem,
    z: Complex64,
    t_ladder: &[f64],
    tol: f64,
) -> Result<L2Count, SlError> {
    let checkpoints = ladder_checkpoints(t_ladder);
    let (samples, _, drift) = integrate_canonical_pair(problem, z, &checkpoints, tol, 1e120)?;
    let disks: Vec<WeylDisk> = samples.iter().map(|s| disk_from_sample(z, s)).collect();
    let table: Vec<LadderRow> = disks
        .iter()
        .map(|d| LadderRow {
            t: d.t,
            radius: Some(d.radius),
            q_min: None,
            q_max: None,
        })
        .collect();
    let last = disks.last().expect("nonempty");
    let c_last = (last.center.0.powi(2) + last.center.1.powi(2)).sqrt();
    if last.radius < RADIUS_FLOOR * (1.0 + c_last) {
        return Ok(L2Count {
            count: 1,
            method: CountMethod::Disk,
            table,
            wronskian_drift: drift,
        });
    }
    // Compare the radius against the one at roughly half the deepest time.
    let t_half = last.t / 2.0;
    let half = disks
        .iter()
        .min_by(|a, b| (a.t - t_half).abs().partial_cmp(&(b.t - t_half).abs()).unwrap())
        .unwrap();
    let ratio = last.radius / half.radius;
    let count = if ratio <= 0.6 {
        1
    } else if ratio >= 0.9 {
        2
    } else {
        return Err(SlError::Inconclusive { table });
    };
    Ok(L2Count {
        count,
        method: CountMethod::Disk,
        table,
        wronskian_drift: drift,
    })
}

/// Deficiency indices from the counts at `lambda = +/- i`.
#[derive(Debug, Clone)]
pub struct DeficiencyIndices {
    pub n_plus: u8,
    pub n_minus: u8,
    /// Real potentials must give `n_plus == n_minus`.
    pub symmetric: bool,
    pub plus: L2Count,
    pub minus: L2Count,
}

pub fn deficiency_indices(
    problem: &SLProblem,
    t_ladder: &[f64],
    tol: f64,
) -> Result<DeficiencyIndices, SlError> {
    let plus = count_l2_solutions(problem, Complex64::new(0.0, 1.0), t_ladder, tol)?;
    let minus = count_l2_solutions(problem, Complex64::new(0.0, -1.0), t_ladder, tol)?;
    Ok(DeficiencyIndices {
        n_plus: plus.count,
        n_minus: minus.count,
        symmetric: plus.count == minus.count,
        plus,
        minus,
    })
}

/// Stieltjes mass estimate over an interval.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralMass {
    pub interval: (f64, f64),
    pub value: f64,
    pub error: f64,
    /// `(eta, (1/pi) int Im m(l + i eta) dl)` per ladder rung.
    pub ladder: Vec<(f64, f64)>,
}

/// `(1/pi) int_a^b Im m(l + i eta) dl` extrapolated across the eta ladder.
///
/// The m-values use the far-field closure at `t_match`; the reported error
/// combines the extrapolation correction, a quadrature-refinement
/// difference and the closure sensitivity under halving `t_match`.
pub fn spectral_measure_estimate(
    problem: &SLProblem,
    interval: (f64, f64),
    eta_ladder: &[f64],
    grid: usize,
    t_match: f64,
    tol: f64,
) -> Result<SpectralMass, SlError> {
    let (a, b) = interval;
    if a > b {
        return Err(SlError::InvalidParameter("need a <= b".into()));
    }
    if b == a {
        return Ok(SpectralMass {
            interval,
            value: 0.0,
            error: 0.0,
            ladder: eta_ladder.iter().map(|&e| (e, 0.0)).collect(),
        });
    }
    if eta_ladder.len() < 2 || eta_ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(SlError::InvalidParameter(
            "eta_ladder must be strictly decreasing with >= 2 rungs".into(),
        ));
    }
    let n = (grid.max(8) + 1) & !1usize; // even number of subintervals
    let nodes: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    let simpson = |vals: &[f64]| -> f64 {
        let h = (b - a) / n as f64;
        let mut acc = vals[0] + vals[n];
        for (i, v) in vals.iter().enumerate().take(n).skip(1) {
            acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
        }
        acc * h / 3.0
    };
    let im_m_row = |eta: f64, tm: f64| -> Result<Vec<f64>, SlError> {
        let results = par_map(&nodes, |&l| {
            weyl_m_closed(problem, Complex64::new(l, eta), tm, tol).map(|(m, _)| m.im)
        });
        results.into_iter().collect()
    };
    let mut ladder = Vec::with_capacity(eta_ladder.len());
    let mut last_vals: Vec<f64> = Vec::new();
    for &eta in eta_ladder {
        let vals = im_m_row(eta, t_match)?;
        ladder.push((eta, simpson(&vals) / std::f64::consts::PI));
        last_vals = vals;
    }
    // Endpoint atom check: eta * Im m should vanish along the ladder.
    for &endpoint in &[a, b] {
        let mut trace = Vec::new();
        for &eta in eta_ladder {
            let (m, _) = weyl_m_closed(problem, Complex64::new(endpoint, eta), t_match, tol)?;
            trace.push((eta, eta * m.im));
        }
        let q_first = trace.first().unwrap().1.abs();
        let q_last = trace.last().unwrap().1.abs();
        if q_last > 1e-6 && q_last > 0.5 * q_first {
            return Err(SlError::AtomNearEndpoint { endpoint, trace });
        }
    }
    let k = ladder.len();
    let (eta_prev, v_prev) = ladder[k - 2];
    let (eta_last, v_last) = ladder[k - 1];
    let correction = (v_last - v_prev) * eta_last / (eta_prev - eta_last);
    let value = v_last + correction;
    // Quadrature refinement difference on the last rung (coarse grid uses
    // every other node).
    let coarse: Vec<f64> = last_vals.iter().step_by(2).copied().collect();
    let nc = coarse.len() - 1;
    let hq = (b - a) / nc as f64;
    let mut acc = coarse[0] + coarse[nc];
    for (i, v) in coarse.iter().enumerate().take(nc).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    let v_coarse = acc * hq / 3.0 / std::f64::consts::PI;
    let quad_diff = (ladder[k - 1].1 - v_coarse).abs();
    // Closure sensitivity: halve the matching time on the last rung.
    let vals_half = im_m_row(eta_last, t_match / 2.0)?;
    let closure_diff = (simpson(&vals_half) / std::f64::consts::PI - ladder[k - 1].1).abs();
    Ok(SpectralMass {
        interval,
        value,
        error: 2.0 * correction.abs() + quad_diff + closure_diff + 1e-12,
        ladder,
    })
}

/// A compactly supported sampled function, linear between samples, zero
/// outside the sampled range.
#[derive(Debug, Clone)]
pub struct SampledFunction {
    pub ts: Vec<f64>,
    pub vals: Vec<f64>,
}

impl SampledFunction {
    pub fn new(ts: Vec<f64>, vals: Vec<f64>) -> Result<Self, SlError> {
        if ts.len() != vals.len() || ts.len() < 2 {
            return Err(SlError::InvalidParameter(
                "sampled function needs matching ts/vals with >= 2 samples".into(),
            ));
        }
        if ts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SlError::InvalidParameter(
                "sample times must be strictly increasing".into(),
            ));
        }
        Ok(Self { ts, vals })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.ts[0], self.ts[self.ts.len() - 1])
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t < self.ts[0] || t > self.ts[self.ts.len() - 1] {
            return 0.0;
        }
        let i = self.ts.partition_point(|&x| x <= t).min(self.ts.len() - 1);
        if i == 0 {
            return self.vals[0];
        }
        let (t0, t1) = (self.ts[i - 1], self.ts[i]);
        let w = (t - t0) / (t1 - t0);
        self.vals[i - 1] * (1.0 - w) + self.vals[i] * w
    }

    /// Exact `int f^2` of the piecewise-linear interpolant.
    pub fn norm_sq(&self) -> f64 {
        let mut acc = 0.0;
        for i in 1..self.ts.len() {
            let h = self.ts[i] - self.ts[i - 1];
            let (f0, f1) = (self.vals[i - 1], self.vals[i]);
            acc += h * (f0 * f0 + f0 * f1 + f1 * f1) / 3.0;
        }
        acc
    }
}

/// One output point of the generalized Fourier transform.
#[derive(Debug, Clone, Copy)]
pub struct TransformPoint {
    pub lambda: f64,
    pub value: Complex64,
    pub error: f64,
    pub wronskian_drift: f64,
}

/// `(Vf)(lambda) = int_0^inf phi(t, lambda) f(t) dt` by Simpson quadrature
/// over the support of `f`, refined until the Richardson difference drops
/// below `tol`.
pub fn fourier_transform(
    problem: &SLProblem,
    f: &SampledFunction,
    lambda_grid: &[f64],
    tol: f64,
) -> Result<Vec<TransformPoint>, SlError> {
    let (lo, hi) = f.support();
    if lo < 0.0 {
        return Err(SlError::InvalidParameter(
            "f must be supported in (0, inf)".into(),
        ));
    }
    let results = par_map(lambda_grid, |&lambda| -> Result<TransformPoint, String> {
        let z = Complex64::new(lambda, 0.0);
        let mut prev: Option<Complex64> = None;
        let mut n = 64usize;
        loop {
            let nodes: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
            // Track phi and its companion chi over the support.
            let p = &problem.potential;
            let rhs = move |t: f64, s: &[Complex64; 4]| {
                let q = Complex64::new(p.eval(t), 0.0) - z;
                [s[1], q * s[0], s[3], q * s[2]]
            };
            let state0 = [
                Complex64::new(1.0, 0.0),
                Complex64::new(problem.theta, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
            ];
            let mut phis = vec![Complex64::new(0.0, 0.0); n + 1];
            let mut drift = 0.0f64;
            let start_positive = nodes.iter().position(|&t| t > 0.0).unwrap_or(n + 1);
            if start_positive > 0 {
                // Node at t = 0 is the initial condition itself.
                phis[0] = state0[0];
            }
            let cps: Vec<f64> = nodes[start_positive..].to_vec();
            let mut idx = start_positive;
            if !cps.is_empty() {
                integrate_checkpoints(&rhs, 0.0, state0, &cps, tol * 1e-2, tol * 1e-2, |_, s| {
                    phis[idx] = s[0];
                    idx += 1;
                    let w = s[0] * s[3] - s[1] * s[2];
                    let scale =
                        (s[0].norm() * s[3].norm() + s[1].norm() * s[2].norm()).max(1.0);
                    drift = drift.max((w - Complex64::new(1.0, 0.0)).norm() / scale);
                })
                .map_err(|e| e.to_string())?;
            }
            let h = (hi - lo) / n as f64;
            let mut acc = phis[0] * f.eval(nodes[0]) + phis[n] * f.eval(nodes[n]);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += phis[i] * f.eval(nodes[i]) * w;
            }
            let integral = acc * (h / 3.0);
            if let Some(p) = prev {
                let diff = (integral - p).norm();
                if diff <= tol || n >= 1 << 13 {
                    return Ok(TransformPoint {
                        lambda,
                        value: integral,
                        error: diff / 15.0 + tol * 1e-2,
                        wronskian_drift: drift,
                    });
                }
            }
            prev = Some(integral);
            n *= 2;
        }
    });
    results
        .into_iter()
        .collect::<Result<Vec<_>, String>>()
        .map_err(SlError::InvalidParameter)
}
