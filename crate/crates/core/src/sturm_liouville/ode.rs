//! Adaptive Dormand-Prince 5(4) integration over small complex states.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("adaptive step collapsed at t = {t} (h = {h:.3e}); the problem looks stiff or singular there")]
    StepUnderflow { t: f64, h: f64 },
}

/// Integration statistics for one run.
#[derive(Debug, Clone, Copy, Default)]
pub struct IntegStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Sum of accepted local error estimates (scaled by the tolerance).
    pub error_estimate: f64,
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b_hat, the embedded error weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn axpy<const N: usize>(y: &[Complex64; N], pairs: &[(f64, &[Complex64; N])], h: f64) -> [Complex64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, k) in pairs {
            acc += k[i] * *c;
        }
        out[i] += acc * h;
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0`, stopping exactly at each checkpoint
/// (strictly increasing, all `> t0`) and handing the state to `observe`.
///
/// Error control is per-step mixed absolute/relative with weights
/// `atol + rtol * max(|y_i|, |y_new_i|)`.
pub fn integrate_checkpoints<const N: usize, F>(
    f: &F,
    t0: f64,
    y0: [Complex64; N],
    checkpoints: &[f64],
    rtol: f64,
    atol: f64,
    mut observe: impl FnMut(f64, &[Complex64; N]),
) -> Result<IntegStats, OdeError>
where
    F: Fn(f64, &[Complex64; N]) -> [Complex64; N],
{
    let mut stats = IntegStats::default();
    let mut t = t0;
    let mut y = y0;
    let t_final = *checkpoints.last().expect("at least one checkpoint");
    let mut h = ((t_final - t0) / 100.0).clamp(1e-6, 0.1);
    for &cp in checkpoints {
        while t < cp {
            if h > cp - t {
                h = cp - t;
            }
            let k1 = f(t, &y);
            let k2 = f(t + 0.2 * h, &axpy(&y, &[(A21, &k1)], h));
            let k3 = f(t + 0.3 * h, &axpy(&y, &[(A31, &k1), (A32, &k2)], h));
            let k4 = f(t + 0.8 * h, &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h));
            let k5 = f(
                t + 8.0 / 9.0 * h,
                &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h),
            );
            let k6 = f(
                t + h,
                &axpy(
                    &y,
                    &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                    h,
                ),
            );
            let y_new = axpy(
                &y,
                &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
                h,
            );
            let k7 = f(t + h, &y_new);
            // Scaled max-norm of the embedded error.
            let mut err = 0.0f64;
            for i in 0..N {
                let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6
                    + k7[i] * E7)
                    .norm()
                    * h.abs();
                let scale = atol + rtol * y[i].norm().max(y_new[i].norm());
                err = err.max(e / scale);
            }
            if err <= 1.0 {
                t += h;
                y = y_new;
                stats.accepted += 1;
                stats.error_estimate += err * atol.max(rtol);
            } else {
                stats.rejected += 1;
            }
            let factor = if err > 0.0 {
                0.9 * err.powf(-0.2)
            } else {
                5.0
            };
            h *= factor.clamp(0.2, 5.0);
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(OdeError::StepUnderflow { t, h });
            }
        }
        // Floating-point landing: clamp to the checkpoint.
        t = cp;
        observe(t, &y);
    }
    Ok(stats)
}
