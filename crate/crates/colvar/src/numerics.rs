//! Shared numerical kernels: quadrature, interpolation, least squares and
//! sequence extrapolation. Everything here is plain f64 math with no
//! knowledge of epsilon nets.

/// Composite Simpson on equally spaced samples. For an even number of
/// panels this is classic Simpson; an odd panel count is handled by a
/// 3/8 rule on the last three panels. Exact for cubics either way.
pub fn simpson_samples(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    assert!(n >= 2, "simpson_samples needs at least 2 samples");
    if n == 2 {
        return 0.5 * h * (values[0] + values[1]);
    }
    let panels = n - 1;
    let (simpson_end, mut total) = if panels % 2 == 0 {
        (n - 1, 0.0)
    } else {
        // 3/8 rule on the final three panels.
        let m = n - 4;
        let tail = 3.0 * h / 8.0
            * (values[m] + 3.0 * values[m + 1] + 3.0 * values[m + 2] + values[m + 3]);
        (m, tail)
    };
    if simpson_end >= 2 {
        let mut acc = values[0] + values[simpson_end];
        let mut i = 1;
        while i < simpson_end {
            acc += 4.0 * values[i];
            if i + 1 < simpson_end {
                acc += 2.0 * values[i + 1];
            }
            i += 2;
        }
        total += acc * h / 3.0;
    } else if simpson_end == 1 {
        total += 0.5 * h * (values[0] + values[1]);
    }
    total
}

/// Adaptive Simpson with absolute tolerance. Recursion depth is capped;
/// the cap is generous enough for every integrand in this crate.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Integrates `f` over [a, b], splitting at the listed interior breakpoints
/// so each adaptive pass sees a smooth piece.
pub fn adaptive_simpson_split<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
) -> f64 {
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    cuts.dedup();
    let mut lo = a;
    let mut acc = 0.0;
    for c in cuts {
        acc += adaptive_simpson(f, lo, c, tol);
        lo = c;
    }
    acc + adaptive_simpson(f, lo, b, tol)
}

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton
/// iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (p, dp) = legendre_and_deriv(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_deriv(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Fixed-order Gauss-Legendre over [a, b].
pub fn gl_integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, nodes: &[f64], weights: &[f64]) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (&x, &w) in nodes.iter().zip(weights) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Least-squares line fit. Returns (slope, intercept, r_squared).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    assert!(xs.len() == ys.len() && xs.len() >= 2);
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return (0.0, my, 1.0);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

/// Cumulative integral over uniform samples: out[i] approximates the
/// integral from the first node to the i-th. Simpson pairs advance the
/// even steps; odd steps close with a 3-point Newton-Cotes rule, so the
/// result is exact for quadratics and 3rd/4th order accurate overall.
pub fn cumulative_integral(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 2, "cumulative_integral needs at least 2 samples");
    let mut out = vec![0.0; n];
    if n == 2 {
        out[1] = 0.5 * h * (values[0] + values[1]);
        return out;
    }
    out[1] = h / 12.0 * (5.0 * values[0] + 8.0 * values[1] - values[2]);
    for i in 2..n {
        if i % 2 == 0 {
            out[i] = out[i - 2] + h / 3.0 * (values[i - 2] + 4.0 * values[i - 1] + values[i]);
        } else {
            out[i] =
                out[i - 1] + h / 12.0 * (-values[i - 2] + 8.0 * values[i - 1] + 5.0 * values[i]);
        }
    }
    out
}

/// Aitken delta-squared extrapolation of the last three terms. Returns the
/// accelerated limit estimate, or the final term when differences vanish.
pub fn aitken(seq: &[f64]) -> f64 {
    let n = seq.len();
    assert!(n >= 3);
    let (a, b, c) = (seq[n - 3], seq[n - 2], seq[n - 1]);
    let denom = (c - b) - (b - a);
    if denom.abs() < 1e-14 * (1.0 + c.abs()) {
        c
    } else {
        c - (c - b) * (c - b) / denom
    }
}

/// Cubic Lagrange interpolation on a uniform grid. Exact node hits return
/// the node value.
pub fn cubic_interp(a: f64, h: f64, values: &[f64], x: f64) -> f64 {
    let n = values.len();
    assert!(n >= 4, "cubic interpolation needs at least 4 nodes");
    let t = (x - a) / h;
    let nearest = t.round();
    if (t - nearest).abs() < 1e-9 {
        let idx = nearest as isize;
        if idx >= 0 && (idx as usize) < n {
            return values[idx as usize];
        }
    }
    // 4-point stencil centred on x, clamped at the ends.
    let mut i0 = t.floor() as isize - 1;
    i0 = i0.clamp(0, n as isize - 4);
    let i0 = i0 as usize;
    let s = t - i0 as f64;
    let mut acc = 0.0;
    for j in 0..4 {
        let mut lj = 1.0;
        for k in 0..4 {
            if k != j {
                lj *= (s - k as f64) / (j as f64 - k as f64);
            }
        }
        acc += lj * values[i0 + j];
    }
    acc
}
