//! Derivatives, integrals, mollification and delta families on grid nets.
//! Differentiation is fourth-order accurate (exact on cubics), integration
//! is composite Simpson per epsilon, and convolutions are computed by
//! direct quadrature at node points rather than grid convolution so the
//! node spacing and the mollifier width cannot alias.

use std::sync::Arc;

use crate::error::{ColvarError, Result};
use crate::net_core::{EpsGrid, GenNumber, GridNet, GridSlice, SpatialGrid};
use crate::numerics::{adaptive_simpson, cubic_interp, gauss_legendre, gl_integrate, simpson_samples};
use crate::par;

/// First derivative of one slice: fourth-order central stencil in the
/// interior, one-sided fourth-order stencils on the two nodes at each end.
fn d1_slice(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    debug_assert!(n >= 5);
    let mut out = vec![0.0; n];
    let c = 1.0 / (12.0 * h);
    out[0] = c * (-25.0 * values[0] + 48.0 * values[1] - 36.0 * values[2] + 16.0 * values[3]
        - 3.0 * values[4]);
    out[1] = c * (-3.0 * values[0] - 10.0 * values[1] + 18.0 * values[2] - 6.0 * values[3]
        + values[4]);
    for i in 2..n - 2 {
        out[i] = c * (values[i - 2] - 8.0 * values[i - 1] + 8.0 * values[i + 1] - values[i + 2]);
    }
    out[n - 2] = c * (3.0 * values[n - 1] + 10.0 * values[n - 2] - 18.0 * values[n - 3]
        + 6.0 * values[n - 4]
        - values[n - 5]);
    out[n - 1] = c * (25.0 * values[n - 1] - 48.0 * values[n - 2] + 36.0 * values[n - 3]
        - 16.0 * values[n - 4]
        + 3.0 * values[n - 5]);
    out
}

/// Spatial derivative of the given order (1 to 4), per epsilon.
pub fn differentiate(u: &GridNet, order: usize) -> Result<GridNet> {
    if !(1..=4).contains(&order) {
        return Err(ColvarError::UnsupportedOrder(order));
    }
    let eps_values = u.grid().values().to_vec();
    let slices = par::try_map_indexed(u.grid().len(), |i| {
        let s = u.slice(i);
        if s.spatial.n < 5 {
            return Err(ColvarError::TooCoarse(format!(
                "need at least 5 nodes to differentiate, have {} at epsilon = {}",
                s.spatial.n,
                eps_values[i]
            )));
        }
        let h = s.spatial.h();
        let mut values = s.values.clone();
        for _ in 0..order {
            values = d1_slice(&values, h);
        }
        Ok(GridSlice { spatial: s.spatial.clone(), values })
    })?;
    GridNet::from_slices(u.grid().clone(), slices)
}

/// Integral over the domain or a closed subinterval, per epsilon. The
/// native node resolution is used over full panels; a subinterval that does
/// not land on nodes is resampled by cubic interpolation first.
pub fn integrate(u: &GridNet, sub: Option<(f64, f64)>) -> Result<GenNumber> {
    let eps_values = u.grid().values().to_vec();
    let samples = par::try_map_indexed(u.grid().len(), |i| {
        let s = u.slice(i);
        let (a, b) = (s.spatial.a, s.spatial.b);
        let (s0, s1) = sub.unwrap_or((a, b));
        if s0 < a - 1e-12 || s1 > b + 1e-12 || s1 <= s0 {
            return Err(ColvarError::OutsideDomain { x: s0, a, b, eps: eps_values[i] });
        }
        let h = s.spatial.h();
        let t0 = (s0 - a) / h;
        let t1 = (s1 - a) / h;
        let on_nodes = (t0 - t0.round()).abs() < 1e-9 && (t1 - t1.round()).abs() < 1e-9;
        if on_nodes {
            let i0 = t0.round() as usize;
            let i1 = (t1.round() as usize).min(s.spatial.n - 1);
            Ok(simpson_samples(&s.values[i0..=i1], h))
        } else {
            // resample at comparable resolution; cubic interpolation keeps
            // the overall error at O(h^4)
            let m = (((s1 - s0) / h).ceil() as usize + 1).max(33);
            let hh = (s1 - s0) / (m - 1) as f64;
            let vals: Vec<f64> =
                (0..m).map(|j| cubic_interp(a, h, &s.values, s0 + j as f64 * hh)).collect();
            Ok(simpson_samples(&vals, hh))
        }
    })?;
    GenNumber::from_samples(u.grid().clone(), samples)
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A piecewise-smooth callable with declared discontinuity positions.
#[derive(Clone)]
pub struct PiecewiseFn {
    pub f: ScalarFn,
    pub breaks: Vec<f64>,
}

impl PiecewiseFn {
    pub fn smooth<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        PiecewiseFn { f: Arc::new(f), breaks: Vec::new() }
    }

    pub fn with_breaks<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F, breaks: Vec<f64>) -> Self {
        PiecewiseFn { f: Arc::new(f), breaks }
    }

    /// The step taking value `c` for x < 0 and `d` for x > 0.
    pub fn step(c: f64, d: f64) -> Self {
        Self::with_breaks(move |x| if x < 0.0 { c } else { d }, vec![0.0])
    }
}

/// Smooth even bump with support radius 1 and unit integral.
#[derive(Clone)]
pub struct Mollifier {
    shape: ScalarFn,
    norm: f64,
}

/// The unnormalized standard bump exp(-1/(1-x^2)) on (-1, 1).
pub fn bump_raw(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (-1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

impl Mollifier {
    /// Normalizes `shape` (supported in (-1, 1)) to unit integral.
    pub fn from_shape<F: Fn(f64) -> f64 + Send + Sync + 'static>(shape: F) -> Result<Self> {
        let shape: ScalarFn = Arc::new(shape);
        let total = adaptive_simpson(&|x| shape(x), -1.0, 1.0, 1e-14);
        if total.abs() < 1e-12 {
            return Err(ColvarError::Precondition("mollifier shape has zero integral".into()));
        }
        Ok(Mollifier { shape, norm: total })
    }

    /// The normalized standard bump.
    pub fn standard() -> Self {
        Self::from_shape(bump_raw).unwrap()
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x.abs() >= 1.0 {
            0.0
        } else {
            (self.shape)(x) / self.norm
        }
    }

    /// The scaled kernel (1/eps) rho(x/eps).
    pub fn scaled(&self, eps: f64, x: f64) -> f64 {
        self.eval(x / eps) / eps
    }
}

/// Convolution u_eps = f * m_eps evaluated by Gauss-Legendre quadrature at
/// every node, splitting the kernel window at the preimages of the declared
/// discontinuities. The spatial grid refines with epsilon so the width-eps
/// transition layer stays resolved.
pub fn mollify_embed(
    f: &PiecewiseFn,
    m: &Mollifier,
    grid: Arc<EpsGrid>,
    a: f64,
    b: f64,
    base_n: usize,
) -> Result<GridNet> {
    let (gl_x, gl_w) = gauss_legendre(16);
    let eps_values = grid.values().to_vec();
    let fun = f.f.clone();
    let breaks = f.breaks.clone();
    // composite GL over subpanels: the bump is smooth but not analytic at
    // its support endpoints, so a single high-order rule stalls near 1e-6
    // accuracy while short panels reach machine precision
    let composite = |g: &dyn Fn(f64) -> f64, lo: f64, hi: f64| -> f64 {
        let panels = (((hi - lo) / 0.25).ceil() as usize).max(1);
        let w = (hi - lo) / panels as f64;
        (0..panels)
            .map(|k| {
                let p0 = lo + k as f64 * w;
                gl_integrate(&g, p0, p0 + w, &gl_x, &gl_w)
            })
            .sum()
    };
    let slices = par::try_map_indexed(grid.len(), |i| {
        let eps = eps_values[i];
        let spatial = SpatialGrid::refined_for(a, b, base_n, eps)?;
        let values: Vec<f64> = spatial
            .nodes()
            .map(|x| {
                // integration variable y in (-1, 1): u(x) = int m(y) f(x - eps y) dy
                let mut cuts: Vec<f64> = breaks
                    .iter()
                    .map(|&d| (x - d) / eps)
                    .filter(|&y| y > -1.0 && y < 1.0)
                    .collect();
                cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
                let mut lo = -1.0;
                let mut acc = 0.0;
                for &c in cuts.iter().chain(std::iter::once(&1.0)) {
                    if c > lo {
                        acc += composite(&|y| m.eval(y) * fun(x - eps * y), lo, c);
                        lo = c;
                    }
                }
                acc
            })
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ColvarError::NonFiniteSample { eps, context: "mollify_embed".into() });
        }
        Ok(GridSlice { spatial, values })
    })?;
    GridNet::from_slices(grid, slices)
}

type EpsScalarFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Delta-family construction: either the model net (1/eps) phi(x/eps) for a
/// fixed unit-integral bump phi, or a caller-supplied strict family with
/// per-epsilon support radii.
#[derive(Clone)]
pub enum DeltaKind {
    Model { shape: Mollifier },
    Strict { rho: EpsScalarFn, support_radius: ScalarFn },
}

/// Per-epsilon numerical checks of the defining delta-family properties:
/// shrinking supports, integrals tending to 1, absolute integrals bounded.
#[derive(Debug, Clone)]
pub struct DeltaChecks {
    pub support_radii: Vec<f64>,
    pub integrals: Vec<f64>,
    pub abs_integrals: Vec<f64>,
}

pub struct DeltaFamily {
    pub kind: DeltaKind,
    pub net: GridNet,
    pub checks: DeltaChecks,
    /// Evaluates the family directly, off-grid.
    pub eval: EpsScalarFn,
}

const ABS_INTEGRAL_BOUND: f64 = 100.0;

/// Builds the grid realization of a delta family centred at `center` on
/// [a, b] and runs the invariant checks.
pub fn make_delta(
    kind: DeltaKind,
    grid: Arc<EpsGrid>,
    center: f64,
    a: f64,
    b: f64,
    base_n: usize,
) -> Result<DeltaFamily> {
    let eval: EpsScalarFn = match &kind {
        DeltaKind::Model { shape } => {
            let shape = shape.clone();
            Arc::new(move |eps, x| shape.scaled(eps, x - center))
        }
        DeltaKind::Strict { rho, .. } => {
            let rho = rho.clone();
            Arc::new(move |eps, x| rho(eps, x - center))
        }
    };
    let radius_of: Box<dyn Fn(f64) -> f64> = match &kind {
        DeltaKind::Model { .. } => Box::new(|eps| eps),
        DeltaKind::Strict { support_radius, .. } => {
            let r = support_radius.clone();
            Box::new(move |eps| r(eps))
        }
    };

    let eps_max = grid.values()[0];
    if center - radius_of(eps_max) < a || center + radius_of(eps_max) > b {
        return Err(ColvarError::DeltaInvariant(format!(
            "support radius {} at epsilon = {eps_max} does not fit in [{a}, {b}] around {center}",
            radius_of(eps_max)
        )));
    }

    let mut support_radii = Vec::with_capacity(grid.len());
    let mut integrals = Vec::with_capacity(grid.len());
    let mut abs_integrals = Vec::with_capacity(grid.len());
    for &eps in grid.values() {
        let r = radius_of(eps);
        if !(r > 0.0) {
            return Err(ColvarError::DeltaInvariant(format!(
                "support radius {r} not positive at epsilon = {eps}"
            )));
        }
        let integral = adaptive_simpson(&|x| eval(eps, x), center - r, center + r, 1e-12);
        let abs_integral = adaptive_simpson(&|x| eval(eps, x).abs(), center - r, center + r, 1e-12);
        support_radii.push(r);
        integrals.push(integral);
        abs_integrals.push(abs_integral);
    }
    // (i) supports shrink to the point
    let r_first = support_radii[0];
    let r_last = *support_radii.last().unwrap();
    if !(r_last < r_first) {
        return Err(ColvarError::DeltaInvariant("support radii do not shrink".into()));
    }
    // (ii) integrals tend to 1: the smallest-epsilon integral must be close
    if (integrals.last().unwrap() - 1.0).abs() > 1e-6 {
        return Err(ColvarError::DeltaInvariant(format!(
            "integral {} at smallest epsilon is not 1",
            integrals.last().unwrap()
        )));
    }
    // (iii) absolute integrals uniformly bounded
    let worst_abs = abs_integrals.iter().cloned().fold(0.0, f64::max);
    if worst_abs > ABS_INTEGRAL_BOUND {
        return Err(ColvarError::DeltaInvariant(format!(
            "absolute integral {worst_abs} exceeds the uniform bound {ABS_INTEGRAL_BOUND}"
        )));
    }

    // the realization grid is much finer than the generic h_eps rule so
    // composite Simpson over the support reaches ~1e-9 on the bump
    let eval_for_net = eval.clone();
    let eps_values = grid.values().to_vec();
    let slices = par::try_map_indexed(grid.len(), |i| {
        let eps = eps_values[i];
        let spatial = SpatialGrid::refined_with(a, b, base_n, eps, 160.0)?;
        let values: Vec<f64> = spatial.nodes().map(|x| eval_for_net(eps, x)).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ColvarError::NonFiniteSample { eps, context: "delta realization".into() });
        }
        Ok(GridSlice { spatial, values })
    })?;
    let net = GridNet::from_slices(grid, slices)?;
    Ok(DeltaFamily {
        kind,
        net,
        checks: DeltaChecks { support_radii, integrals, abs_integrals },
        eval,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net_core::make_eps_grid;
    use approx::assert_abs_diff_eq;

    fn grid() -> Arc<EpsGrid> {
        Arc::new(make_eps_grid(1e-3, 1e-1, 5).unwrap())
    }

    #[test]
    fn derivative_exact_on_cubics() {
        let g = grid();
        let spatial = SpatialGrid::new(-1.0, 1.0, 41).unwrap();
        let u = GridNet::from_fn(g, spatial, |_, x| x.powi(3)).unwrap();
        let du = differentiate(&u, 1).unwrap();
        for (x, &v) in du.slice(0).spatial.nodes().zip(&du.slice(0).values) {
            assert_abs_diff_eq!(v, 3.0 * x * x, epsilon = 1e-10);
        }
    }

    #[test]
    fn second_derivative_fourth_order() {
        let g = grid();
        let errs: Vec<f64> = [101usize, 201]
            .iter()
            .map(|&n| {
                let spatial = SpatialGrid::new(0.0, 3.0, n).unwrap();
                let u = GridNet::from_fn(g.clone(), spatial, |_, x| x.sin()).unwrap();
                let d2 = differentiate(&u, 2).unwrap();
                d2.slice(0)
                    .spatial
                    .nodes()
                    .zip(&d2.slice(0).values)
                    .map(|(x, &v)| (v + x.sin()).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        // halving h must shrink the error by roughly 2^4; boundary stencils
        // applied twice lose a little, so accept a factor 8
        assert!(errs[1] < errs[0] / 7.0, "errors {errs:?}");
        assert!(errs[0] < 1e-4);
    }

    #[test]
    fn integrate_polynomials() {
        let g = grid();
        let spatial = SpatialGrid::new(0.0, 1.0, 101).unwrap();
        let one = GridNet::from_fn(g.clone(), spatial.clone(), |_, _| 1.0).unwrap();
        let v = integrate(&one, None).unwrap();
        assert!(v.samples().iter().all(|&s| (s - 1.0).abs() < 1e-14));

        let sq = GridNet::from_fn(g.clone(), spatial, |_, x| x * x).unwrap();
        let v = integrate(&sq, None).unwrap();
        assert!(v.samples().iter().all(|&s| (s - 1.0 / 3.0).abs() < 1e-10));

        // off-node subinterval
        let v = integrate(&sq, Some((0.1234, 0.9876))).unwrap();
        let want = (0.9876f64.powi(3) - 0.1234f64.powi(3)) / 3.0;
        assert!(v.samples().iter().all(|&s| (s - want).abs() < 1e-8));
    }

    #[test]
    fn mollifier_normalized() {
        let m = Mollifier::standard();
        let total = adaptive_simpson(&|x| m.eval(x), -1.0, 1.0, 1e-14);
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-11);
        assert_eq!(m.eval(1.0), 0.0);
        assert_eq!(m.eval(-1.5), 0.0);
        // even
        assert_abs_diff_eq!(m.eval(0.3), m.eval(-0.3), epsilon = 1e-15);
    }

    #[test]
    fn mollify_smooth_second_order() {
        // even mollifier: ||f*m_eps - f||_inf = O(eps^2) for smooth f
        let g = grid();
        let m = Mollifier::standard();
        let f = PiecewiseFn::smooth(|x: f64| x.cos());
        let u = mollify_embed(&f, &m, g.clone(), -1.0, 1.0, 201).unwrap();
        let mut errs = Vec::new();
        for (i, &eps) in g.values().iter().enumerate() {
            let s = u.slice(i);
            let e = s
                .spatial
                .nodes()
                .zip(&s.values)
                .map(|(x, &v)| (v - x.cos()).abs())
                .fold(0.0, f64::max);
            errs.push(e / (eps * eps));
        }
        // the ratio err/eps^2 stays bounded and roughly constant
        let hi = errs.iter().cloned().fold(0.0, f64::max);
        let lo = errs.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(hi < 1.0 && hi / lo < 5.0, "errs/eps^2 = {errs:?}");
    }

    #[test]
    fn mollified_step_transition() {
        let g = grid();
        let m = Mollifier::standard();
        let f = PiecewiseFn::step(-1.0, 2.0);
        let u = mollify_embed(&f, &m, g.clone(), -1.0, 1.0, 101).unwrap();
        for (i, &eps) in g.values().iter().enumerate() {
            let s = u.slice(i);
            for (x, &v) in s.spatial.nodes().zip(&s.values) {
                if x < -eps {
                    assert_abs_diff_eq!(v, -1.0, epsilon = 1e-9);
                } else if x > eps {
                    assert_abs_diff_eq!(v, 2.0, epsilon = 1e-9);
                } else {
                    assert!((-1.0 - 1e-9..=2.0 + 1e-9).contains(&v));
                }
            }
        }
    }

    #[test]
    fn model_delta_checks() {
        let g = grid();
        let d = make_delta(
            DeltaKind::Model { shape: Mollifier::standard() },
            g.clone(),
            0.0,
            -1.0,
            1.0,
            101,
        )
        .unwrap();
        for &i in &d.checks.integrals {
            assert_abs_diff_eq!(i, 1.0, epsilon = 1e-9);
        }
        // realization integrates to 1 once the support is resolved
        let ints = integrate(&d.net, None).unwrap();
        for &v in ints.samples() {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-8);
        }
        // odd moment vanishes for the even bump
        let moment = d.net.map(|_, x, v| x * v).unwrap();
        let ms = integrate(&moment, None).unwrap();
        for &v in ms.samples() {
            assert!(v.abs() < 1e-10);
        }
    }

    #[test]
    fn strict_delta_signed_variant() {
        let g = grid();
        let m = Mollifier::standard();
        // signed kernel: (bump - 0.3 shifted bump)/0.7 scaled to width eps
        let m2 = m.clone();
        let rho: EpsScalarFn = Arc::new(move |eps, x| {
            (m2.scaled(eps, x) - 0.3 * m2.scaled(eps, x - eps / 2.0)) / 0.7
        });
        let kind = DeltaKind::Strict {
            rho,
            support_radius: Arc::new(|eps| 1.6 * eps),
        };
        let d = make_delta(kind, g, 0.0, -1.0, 1.0, 101).unwrap();
        for &i in &d.checks.integrals {
            assert_abs_diff_eq!(i, 1.0, epsilon = 1e-8);
        }
        let worst = d.checks.abs_integrals.iter().cloned().fold(0.0, f64::max);
        assert!(worst > 1.0 + 1e-3 && worst < 2.0, "signed mass {worst}");
    }

    #[test]
    fn bad_delta_rejected() {
        let g = grid();
        let rho: EpsScalarFn = Arc::new(|eps, x| {
            // integral is 2, not 1
            2.0 * Mollifier::standard().scaled(eps, x)
        });
        let kind = DeltaKind::Strict { rho, support_radius: Arc::new(|eps| eps) };
        assert!(matches!(
            make_delta(kind, g, 0.0, -1.0, 1.0, 101),
            Err(ColvarError::DeltaInvariant(_))
        ));
    }
}
