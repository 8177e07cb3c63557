//! Adaptive explicit Runge-Kutta integration (Dormand-Prince 5(4)) for the
//! per-epsilon trajectory problems. The solver reports samples at caller
//! supplied output times and supports a state-dependent step cap, which the
//! delta-forced scenarios use to resolve epsilon-wide force supports.

use crate::error::{ColvarError, Result};

/// Right-hand side of y' = f(t, y); writes the derivative into `dy`.
pub type Rhs<'a> = &'a (dyn Fn(f64, &[f64], &mut [f64]) + Sync);

pub struct OdeOptions<'a> {
    pub rtol: f64,
    pub atol: f64,
    /// Hard cap on the step size as a function of the current state; used
    /// to force small steps inside localized force supports.
    pub max_step: Option<&'a (dyn Fn(f64, &[f64]) -> f64 + Sync)>,
    pub max_steps: usize,
    /// The epsilon this run belongs to, echoed in error reports.
    pub eps: f64,
}

impl Default for OdeOptions<'_> {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-10, max_step: None, max_steps: 50_000_000, eps: f64::NAN }
    }
}

// Dormand-Prince 5(4) tableau; the last stage is FSAL.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates y' = f(t, y) from `t0` through the strictly increasing output
/// times, returning the state at each of them (t0 itself is not included).
pub fn integrate(f: Rhs, t0: f64, y0: &[f64], t_out: &[f64], opts: &OdeOptions) -> Result<Vec<Vec<f64>>> {
    let dim = y0.len();
    if t_out.is_empty() || t_out[0] <= t0 || t_out.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ColvarError::Precondition("output times must be increasing and after t0".into()));
    }
    let t_end = *t_out.last().unwrap();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; dim]; 7];
    f(t, &y, &mut k[0]);

    // initial step from the scale of y and y'
    let mut h = {
        let d0: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let d1: f64 = k[0].iter().map(|v| v * v).sum::<f64>().sqrt();
        let guess = if d1 > 1e-10 { 0.01 * (1.0 + d0) / d1 } else { 1e-3 };
        guess.min(t_end - t0)
    };

    let mut out = Vec::with_capacity(t_out.len());
    let mut next_out = 0;
    let mut y_stage = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];
    for step in 0.. {
        if step >= opts.max_steps {
            return Err(ColvarError::BlowUp { eps: opts.eps, t });
        }
        if let Some(cap) = &opts.max_step {
            h = h.min(cap(t, &y).max(1e-14));
        }
        // land exactly on the next output time
        let mut hit_output = false;
        if t + h >= t_out[next_out] - 1e-14 {
            h = t_out[next_out] - t;
            hit_output = true;
        }
        if h <= f64::EPSILON * (1.0 + t.abs()) {
            // degenerate step right at an output time
            out.push(y.clone());
            next_out += 1;
            if next_out == t_out.len() {
                break;
            }
            h = 1e-6 * (t_end - t0);
            continue;
        }

        for s in 1..7 {
            for i in 0..dim {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                y_stage[i] = y[i] + h * acc;
            }
            let ts = t + C[s] * h;
            if s == 6 {
                y_new.copy_from_slice(&y_stage);
            }
            f(ts, &y_stage, &mut k[s]);
        }

        // weighted error norm of the embedded 4th-order difference
        let mut err: f64 = 0.0;
        for i in 0..dim {
            let mut e = 0.0;
            for s in 0..7 {
                e += (B5[s] - B4[s]) * k[s][i];
            }
            e *= h;
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            return Err(ColvarError::BlowUp { eps: opts.eps, t });
        }

        if err <= 1.0 {
            t += h;
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6); // FSAL
            if hit_output {
                out.push(y.clone());
                next_out += 1;
                if next_out == t_out.len() {
                    break;
                }
            }
        }
        let factor = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 5.0 };
        h *= factor.clamp(0.2, 5.0);
        h = h.min(t_end - t).max(1e-14);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exponential_decay() {
        let f = |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = -y[0];
        let t_out: Vec<f64> = (1..=10).map(|i| i as f64 * 0.3).collect();
        let ys = integrate(&f, 0.0, &[1.0], &t_out, &OdeOptions::default()).unwrap();
        for (t, y) in t_out.iter().zip(&ys) {
            assert_abs_diff_eq!(y[0], (-t).exp(), epsilon = 1e-10);
        }
    }

    #[test]
    fn harmonic_oscillator_long_run() {
        let f = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let t_out = vec![20.0 * std::f64::consts::PI];
        let ys = integrate(&f, 0.0, &[1.0, 0.0], &t_out, &OdeOptions::default()).unwrap();
        assert_abs_diff_eq!(ys[0][0], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(ys[0][1], 0.0, epsilon = 1e-8);
    }

    #[test]
    fn step_cap_is_respected() {
        // a stiff-looking narrow kick around t = 1 is only resolved when the
        // cap forces small steps there
        let f = |t: f64, _y: &[f64], dy: &mut [f64]| {
            let s = (t - 1.0) / 1e-3;
            dy[0] = if s.abs() < 1.0 { (1.0 / 1e-3) * (1.0 - s * s) } else { 0.0 };
        };
        // the outer cap must be smaller than the cap window, otherwise the
        // solver can step across the window without ever sampling it
        let cap = |t: f64, _y: &[f64]| if (t - 1.0).abs() < 0.1 { 1e-4 } else { 0.02 };
        let opts = OdeOptions { max_step: Some(&cap), ..Default::default() };
        let ys = integrate(&f, 0.0, &[0.0], &[2.0], &opts).unwrap();
        // integral of the kick: (1/w) int (1 - s^2) w ds over s in (-1,1) = 4/3
        assert_abs_diff_eq!(ys[0][0], 4.0 / 3.0, epsilon = 1e-6);
    }

    #[test]
    fn rejects_bad_output_times() {
        let f = |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = y[0];
        assert!(integrate(&f, 0.0, &[1.0], &[], &OdeOptions::default()).is_err());
        assert!(integrate(&f, 0.0, &[1.0], &[-1.0], &OdeOptions::default()).is_err());
        assert!(integrate(&f, 0.0, &[1.0], &[1.0, 0.5], &OdeOptions::default()).is_err());
    }

    #[test]
    fn blow_up_detected() {
        let f = |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = y[0] * y[0];
        let r = integrate(&f, 0.0, &[1.0], &[2.0], &OdeOptions::default());
        assert!(matches!(r, Err(ColvarError::BlowUp { .. })), "{r:?}");
    }
}
