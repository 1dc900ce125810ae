//! Adaptive implicit integration of the reactor system.
//!
//! One-step TR-BDF2 scheme with gamma = 2 - sqrt(2): a trapezoid substage to
//! `t + gamma h` followed by a BDF2 substage to `t + h`. Both substages share
//! the iteration matrix `M = I - d h J` with `d = 1 - 1/sqrt(2)`, the scheme
//! is L-stable, and the embedded third-order difference provides the error
//! estimate. Local error is filtered through `M^{-1}` so stiff components do
//! not force the step size down.

use super::system::TapSystem;
use super::SimError;

const GAMMA: f64 = 2.0 - std::f64::consts::SQRT_2;
const MAX_NEWTON: usize = 10;
const NEWTON_TOL: f64 = 0.03;
const MIN_SCALE_FACTOR: f64 = 0.2;
const MAX_SCALE_FACTOR: f64 = 5.0;

pub(crate) struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

/// Observer invoked after every accepted step with the cubic Hermite data
/// needed for dense output: `(t0, y0, f0, t1, y1, f1)`.
pub(crate) trait StepSink {
    fn accepted(&mut self, t0: f64, y0: &[f64], f0: &[f64], t1: f64, y1: &[f64], f1: &[f64]);
}

pub(crate) struct IntegrationStats {
    pub steps: usize,
    pub rejected: usize,
    pub newton_iters: usize,
}

fn wrms(v: &[f64], y: &[f64], tol: &Tolerances) -> f64 {
    let mut acc = 0.0;
    for (vi, yi) in v.iter().zip(y) {
        let w = vi / (tol.atol + tol.rtol * yi.abs());
        acc += w * w;
    }
    (acc / v.len() as f64).sqrt()
}

/// Integrates `sys` from `t0` to `t_stop`, mutating `y` in place.
pub(crate) fn integrate(
    sys: &mut TapSystem<'_>,
    y: &mut Vec<f64>,
    t0: f64,
    t_stop: f64,
    tol: &Tolerances,
    sink: &mut dyn StepSink,
) -> Result<IntegrationStats, SimError> {
    let n = y.len();
    let d = 1.0 - 1.0 / std::f64::consts::SQRT_2;
    // BDF2 substage weights
    let c1 = 1.0 / (GAMMA * (2.0 - GAMMA));
    let c2 = (1.0 - GAMMA) * (1.0 - GAMMA) / (GAMMA * (2.0 - GAMMA));
    // error-estimate coefficient: leading term of the composite local error
    let kerr = 2.0 * (-3.0 * GAMMA * GAMMA + 4.0 * GAMMA - 2.0) / (12.0 * (2.0 - GAMMA));

    let mut stats = IntegrationStats {
        steps: 0,
        rejected: 0,
        newton_iters: 0,
    };

    let mut t = t0;
    let mut f = vec![0.0; n];
    sys.rhs(y, &mut f);

    let f_scale = wrms(&f, y, tol);
    let mut h = if f_scale > 0.0 {
        (0.01 / f_scale).min((t_stop - t0) * 0.1)
    } else {
        (t_stop - t0) * 1e-3
    };
    h = h.max(1e-14 * (t_stop - t0).max(1.0));

    let mut y_stage = vec![0.0; n];
    let mut y_next = vec![0.0; n];
    let mut f_stage = vec![0.0; n];
    let mut f_next = vec![0.0; n];
    let mut resid = vec![0.0; n];

    let t_eps = 4.0 * f64::EPSILON * t_stop.max(1.0);
    while t_stop - t > t_eps {
        if t + h > t_stop {
            h = t_stop - t;
        }
        if h <= f64::EPSILON * t_stop.max(1.0) {
            return Err(SimError::Integration {
                t,
                h,
                detail: "step size underflow".into(),
            });
        }

        let factor = sys.factor(y, d * h);

        // trapezoid substage to t + gamma h
        let hd = d * h;
        for i in 0..n {
            y_stage[i] = y[i] + GAMMA * h * f[i]; // explicit predictor
        }
        let stage1 = newton(
            sys,
            &factor,
            &mut y_stage,
            &mut f_stage,
            &mut resid,
            |i, yi, fi, _y0| yi - hd * fi - (y[i] + hd * f[i]),
            y,
            tol,
            &mut stats.newton_iters,
        );
        if !stage1 {
            h *= 0.25;
            stats.rejected += 1;
            continue;
        }

        // BDF2 substage to t + h
        for i in 0..n {
            y_next[i] = c1 * y_stage[i] - c2 * y[i] + hd * f_stage[i]; // predictor
        }
        let rhs_const: Vec<f64> = (0..n).map(|i| c1 * y_stage[i] - c2 * y[i]).collect();
        let stage2 = newton(
            sys,
            &factor,
            &mut y_next,
            &mut f_next,
            &mut resid,
            |i, yi, fi, _y0| yi - hd * fi - rhs_const[i],
            y,
            tol,
            &mut stats.newton_iters,
        );
        if !stage2 {
            h *= 0.25;
            stats.rejected += 1;
            continue;
        }

        // embedded error estimate, filtered through M^{-1}
        for i in 0..n {
            resid[i] =
                kerr * h * ((f_next[i] - f_stage[i]) / (1.0 - GAMMA) - (f_stage[i] - f[i]) / GAMMA);
        }
        factor.solve(&mut resid);
        let err = wrms(&resid, y, tol);

        if err <= 1.0 {
            sink.accepted(t, y, &f, t + h, &y_next, &f_next);
            t += h;
            std::mem::swap(y, &mut y_next);
            std::mem::swap(&mut f, &mut f_next);
            stats.steps += 1;
            let grow = if err > 0.0 {
                0.9 * err.powf(-1.0 / 3.0)
            } else {
                MAX_SCALE_FACTOR
            };
            h *= grow.clamp(MIN_SCALE_FACTOR, MAX_SCALE_FACTOR);
        } else {
            stats.rejected += 1;
            if stats.rejected > 10_000 {
                return Err(SimError::Integration {
                    t,
                    h,
                    detail: format!("too many rejected steps (err norm {err:.3e})"),
                });
            }
            h *= (0.9 * err.powf(-1.0 / 3.0)).clamp(MIN_SCALE_FACTOR, 0.9);
        }
    }
    Ok(stats)
}

/// Modified Newton iteration with the shared factorization. Returns false on
/// divergence so the caller can cut the step.
#[allow(clippy::too_many_arguments)]
fn newton<R>(
    sys: &mut TapSystem<'_>,
    factor: &super::system::BorderedFactor,
    u: &mut [f64],
    fu: &mut [f64],
    resid: &mut [f64],
    residual: R,
    y_scale: &[f64],
    tol: &Tolerances,
    iter_count: &mut usize,
) -> bool
where
    R: Fn(usize, f64, f64, &[f64]) -> f64,
{
    let mut last_norm = f64::INFINITY;
    for _ in 0..MAX_NEWTON {
        sys.rhs(u, fu);
        for i in 0..u.len() {
            resid[i] = -residual(i, u[i], fu[i], y_scale);
        }
        factor.solve(resid);
        for i in 0..u.len() {
            u[i] += resid[i];
        }
        *iter_count += 1;
        let norm = wrms(resid, y_scale, tol);
        if norm <= NEWTON_TOL {
            sys.rhs(u, fu);
            return true;
        }
        if norm > 2.0 * last_norm {
            return false;
        }
        last_norm = norm;
    }
    false
}
