//! Embedded Dormand-Prince 5(4) stepper over flat complex state vectors.
//!
//! The same loop integrates pure states (length d) and vectorized density
//! matrices (length d^2). Steps are clamped to land exactly on every output
//! grid point; no dense-output interpolation. A fixed-step mode with the
//! error controller disabled supports step-halving convergence checks.

use num_complex::Complex64 as C64;

use crate::{Error, Result};

/// Stage nodes.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

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

/// Fifth-order weights (b2 = 0); the seventh stage is the FSAL evaluation.
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

/// Difference between the 5th- and embedded 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const SHRINK_MIN: f64 = 0.2;
const GROW_MAX: f64 = 5.0;

#[derive(Clone, Copy, Debug)]
pub struct StepperOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Cap on the step size (adaptive mode).
    pub max_step: Option<f64>,
    /// Disable error control and march with (at most) this step instead.
    pub fixed_step: Option<f64>,
}

impl Default for StepperOptions {
    fn default() -> Self {
        StepperOptions {
            rtol: 1e-9,
            atol: 1e-12,
            max_step: None,
            fixed_step: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

struct Workspace {
    k: [Vec<C64>; 7],
    y_stage: Vec<C64>,
    y_new: Vec<C64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Workspace {
            k: std::array::from_fn(|_| vec![C64::ZERO; n]),
            y_stage: vec![C64::ZERO; n],
            y_new: vec![C64::ZERO; n],
        }
    }
}

fn combine(dst: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for (i, d) in dst.iter_mut().enumerate() {
        let mut acc = C64::ZERO;
        for (w, k) in terms {
            acc += *w * k[i];
        }
        *d = y[i] + h * acc;
    }
}

/// March `y` across `grid`, invoking `on_output(index, t, y)` at every grid
/// point (including the first). `rhs` must fill `dydt` completely.
/// `post_accept` runs once per accepted step (used for density-matrix
/// re-symmetrization); it must not change the state at order below the
/// integrator's local error.
pub fn integrate<F, P, G>(
    mut rhs: F,
    mut post_accept: P,
    y: &mut [C64],
    grid: &[f64],
    opts: &StepperOptions,
    mut on_output: G,
) -> Result<StepStats>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    P: FnMut(&mut [C64]),
    G: FnMut(usize, f64, &[C64]) -> Result<()>,
{
    if grid.len() < 2 {
        return Err(Error::InvalidParameter(
            "integration grid needs at least two points".into(),
        ));
    }
    if !grid.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::InvalidParameter(
            "integration grid must be strictly increasing".into(),
        ));
    }

    let n = y.len();
    let span = grid[grid.len() - 1] - grid[0];
    let h_floor = span * 1e-14;
    let mut ws = Workspace::new(n);
    let mut stats = StepStats::default();
    let mut t = grid[0];

    on_output(0, t, y)?;

    let mut h = match opts.fixed_step {
        Some(h_fix) => {
            if !(h_fix.is_finite() && h_fix > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "fixed step must be positive, got {h_fix}"
                )));
            }
            h_fix
        }
        None => {
            let guess = span * 1e-4;
            let cap = opts.max_step.unwrap_or(f64::INFINITY);
            guess.min(cap).min(grid[1] - grid[0])
        }
    };

    let mut k1_fresh = false;
    for (idx, &t_target) in grid.iter().enumerate().skip(1) {
        while t < t_target {
            let remaining = t_target - t;
            let h_try = match opts.fixed_step {
                // equal substeps so halving the nominal step halves them all
                Some(h_fix) => remaining / (remaining / h_fix).ceil().max(1.0),
                None => h.min(remaining).min(opts.max_step.unwrap_or(f64::INFINITY)),
            };
            if h_try < h_floor {
                return Err(Error::StepUnderflow { t, step: h_try });
            }

            if !k1_fresh {
                rhs(t, y, &mut ws.k[0]);
                stats.rhs_evals += 1;
            }
            let (k1, rest) = ws.k.split_at_mut(1);
            let k1 = &k1[0];

            combine(&mut ws.y_stage, y, h_try, &[(A21, k1)]);
            rhs(t + C2 * h_try, &ws.y_stage, &mut rest[0]);
            combine(&mut ws.y_stage, y, h_try, &[(A31, k1), (A32, &rest[0])]);
            rhs(t + C3 * h_try, &ws.y_stage, &mut rest[1]);
            combine(
                &mut ws.y_stage,
                y,
                h_try,
                &[(A41, k1), (A42, &rest[0]), (A43, &rest[1])],
            );
            rhs(t + C4 * h_try, &ws.y_stage, &mut rest[2]);
            combine(
                &mut ws.y_stage,
                y,
                h_try,
                &[(A51, k1), (A52, &rest[0]), (A53, &rest[1]), (A54, &rest[2])],
            );
            rhs(t + C5 * h_try, &ws.y_stage, &mut rest[3]);
            combine(
                &mut ws.y_stage,
                y,
                h_try,
                &[
                    (A61, k1),
                    (A62, &rest[0]),
                    (A63, &rest[1]),
                    (A64, &rest[2]),
                    (A65, &rest[3]),
                ],
            );
            rhs(t + h_try, &ws.y_stage, &mut rest[4]);
            combine(
                &mut ws.y_new,
                y,
                h_try,
                &[
                    (B1, k1),
                    (B3, &rest[1]),
                    (B4, &rest[2]),
                    (B5, &rest[3]),
                    (B6, &rest[4]),
                ],
            );
            rhs(t + h_try, &ws.y_new, &mut rest[5]);
            stats.rhs_evals += 6;

            if opts.fixed_step.is_none() {
                let mut err_sq = 0.0;
                for i in 0..n {
                    let e = E1 * k1[i]
                        + E3 * rest[1][i]
                        + E4 * rest[2][i]
                        + E5 * rest[3][i]
                        + E6 * rest[4][i]
                        + E7 * rest[5][i];
                    let scale = opts.atol + opts.rtol * ws.y_new[i].norm().max(y[i].norm());
                    let r = h_try * e.norm() / scale;
                    err_sq += r * r;
                }
                let err = (err_sq / n as f64).sqrt();
                if err <= 1.0 {
                    let grow = if err == 0.0 {
                        GROW_MAX
                    } else {
                        (SAFETY * err.powf(-0.2)).min(GROW_MAX)
                    };
                    h = h_try * grow.max(SHRINK_MIN);
                } else {
                    // reject: shrink and retry (NaN error also lands here)
                    let shrink = if err.is_finite() {
                        (SAFETY * err.powf(-0.2)).clamp(SHRINK_MIN, 1.0)
                    } else {
                        SHRINK_MIN
                    };
                    h = h_try * shrink;
                    stats.rejected += 1;
                    k1_fresh = true; // k1 was evaluated at (t, y), still valid
                    continue;
                }
            }

            y.copy_from_slice(&ws.y_new);
            post_accept(y);
            t += h_try;
            if remaining <= h_try {
                t = t_target;
            }
            stats.accepted += 1;
            // first-same-as-last: stage 7 is the next step's k1
            let (head, tail) = ws.k.split_at_mut(6);
            std::mem::swap(&mut head[0], &mut tail[0]);
            k1_fresh = true;
        }
        on_output(idx, t, y)?;
    }
    Ok(stats)
}
