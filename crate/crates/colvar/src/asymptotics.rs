//! Asymptotic classification of nets by epsilon-power estimates:
//! negligible and moderate growth, invertibility, strict positivity, the
//! zero-detection lemma, scalar and weak association, and matrix
//! definiteness. All verdicts are relative to the tail of the finite
//! epsilon grid (its smallest ceil(len/2) entries).

use nalgebra::DMatrix;
use serde::Serialize;

use crate::calculus::{self, PiecewiseFn};
use crate::error::{ColvarError, Result};
use crate::net_core::{GenMatrix, GenNumber, GridNet};
use crate::numerics::{adaptive_simpson_split, aitken, linear_fit, simpson_samples};

/// Largest exponent m used when testing negligibility bounds eps^m.
pub const M_MAX: u32 = 8;
/// Largest moderateness exponent N tested for bounds eps^{-N}.
pub const N_MAX: u32 = 12;
/// Samples below this magnitude count as numerical zero (double-precision
/// underflow must not produce NonModerate verdicts).
pub const FLOOR: f64 = 1e-300;
/// Tolerance for scalar association limits.
pub const TOL_ASSOC: f64 = 1e-6;
/// Tolerance for weak (distributional) association.
pub const TOL_WEAK: f64 = 1e-3;
/// Derivative orders included when classifying a GridNet.
pub const ALPHA_MAX: usize = 2;
/// Slack factor on anchored tail bounds, absorbing grid-ratio wobble.
const ANCHOR_SLACK: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NetClass {
    Negligible,
    Moderate(u32),
    NonModerate,
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticReport {
    pub class: NetClass,
    /// Fitted exponent of |v_eps| against eps on the log-log tail.
    pub slope: f64,
    pub r2: f64,
    /// The tail epsilon at which the classifying bound is tightest.
    pub witness_eps: f64,
    pub per_epsilon: Vec<(f64, f64)>,
}

impl AsymptoticReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

fn tail_of(x: &GenNumber) -> (Vec<f64>, Vec<f64>) {
    let start = x.grid().tail_start();
    (
        x.grid().values()[start..].to_vec(),
        x.samples()[start..].to_vec(),
    )
}

/// True when |v| <= slack * C * eps^exponent on the whole tail, with C
/// anchored so the bound is exact at the largest tail epsilon.
fn anchored_bound_holds(eps: &[f64], vals: &[f64], exponent: f64) -> bool {
    let v0 = vals[0].abs().max(FLOOR);
    let e0 = eps[0];
    eps.iter().zip(vals).all(|(&e, &v)| {
        v.abs().max(FLOOR) <= ANCHOR_SLACK * v0 * (e / e0).powf(exponent)
    })
}

/// Classifies a scalar net as negligible, moderate of minimal order N, or
/// non-moderate, with the fitted log-log slope over the tail.
pub fn classify(x: &GenNumber) -> AsymptoticReport {
    let (eps, vals) = tail_of(x);
    let per_epsilon: Vec<(f64, f64)> =
        x.grid().values().iter().copied().zip(x.samples().iter().copied()).collect();

    let all_below_floor = vals.iter().all(|v| v.abs() < FLOOR);
    let logs_e: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let logs_v: Vec<f64> = vals.iter().map(|v| v.abs().max(FLOOR).ln()).collect();
    let (slope, _, r2) = linear_fit(&logs_e, &logs_v);

    let negligible = all_below_floor
        || (slope >= M_MAX as f64 - 0.1
            && (1..=M_MAX).all(|m| anchored_bound_holds(&eps, &vals, m as f64)));

    let class = if negligible {
        NetClass::Negligible
    } else {
        let n = (0..=N_MAX).find(|&n| {
            slope >= -(n as f64) - 0.1 && anchored_bound_holds(&eps, &vals, -(n as f64))
        });
        match n {
            Some(n) => NetClass::Moderate(n),
            None => NetClass::NonModerate,
        }
    };

    // the tail epsilon with the largest magnitude relative to the bound
    let n_eff = match class {
        NetClass::Moderate(n) => n as f64,
        _ => 0.0,
    };
    let witness_eps = eps
        .iter()
        .zip(&vals)
        .max_by(|(ea, va), (eb, vb)| {
            let sa = va.abs().max(FLOOR) * ea.powf(n_eff);
            let sb = vb.abs().max(FLOOR) * eb.powf(n_eff);
            sa.partial_cmp(&sb).unwrap()
        })
        .map(|(&e, _)| e)
        .unwrap();

    AsymptoticReport { class, slope, r2, witness_eps, per_epsilon }
}

/// Classifies a grid net by the sup over `sub` (or the whole domain) of
/// |d^a u| for derivative orders a = 0..=ALPHA_MAX, per epsilon.
pub fn classify_net(u: &GridNet, sub: Option<(f64, f64)>) -> Result<AsymptoticReport> {
    let mut worst = u.sup_abs(sub);
    let mut current = u.clone();
    for _ in 0..ALPHA_MAX {
        current = calculus::differentiate(&current, 1)?;
        let s = current.sup_abs(sub);
        let combined: Vec<f64> = worst
            .samples()
            .iter()
            .zip(s.samples())
            .map(|(&a, &b)| a.max(b))
            .collect();
        worst = GenNumber::from_samples(u.grid().clone(), combined)?;
    }
    Ok(classify(&worst))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Relation {
    NonNegative,
    StrictlyPositive,
    Invertible,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderVerdict {
    pub relation: Relation,
    pub exponent_a: Option<f64>,
}

/// Invertibility test: |x_eps| >= eps^a on the tail for the fitted a.
/// The verification exponent carries a +2 margin so small leading
/// constants (down to 1e-3 at the default grids) do not spoil a genuine
/// power law, and the fitted exponent is capped at M_MAX: nets decaying
/// faster than every tested power are Indeterminate.
pub fn is_invertible(x: &GenNumber) -> OrderVerdict {
    let (eps, vals) = tail_of(x);
    if vals.iter().any(|v| v.abs() < FLOOR) {
        return OrderVerdict { relation: Relation::Indeterminate, exponent_a: None };
    }
    let logs_e: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let logs_v: Vec<f64> = vals.iter().map(|v| v.abs().ln()).collect();
    let (slope, _, _) = linear_fit(&logs_e, &logs_v);
    if slope > M_MAX as f64 {
        return OrderVerdict { relation: Relation::Indeterminate, exponent_a: Some(slope) };
    }
    let a_check = slope.max(0.0) + 2.0;
    let ok = eps.iter().zip(&vals).all(|(&e, &v)| v.abs() >= e.powf(a_check));
    if ok {
        OrderVerdict { relation: Relation::Invertible, exponent_a: Some(slope) }
    } else {
        OrderVerdict { relation: Relation::Indeterminate, exponent_a: Some(slope) }
    }
}

/// Strict positivity: positive on the tail and invertible. Falls back to
/// NonNegative when tail samples stay above -eps^M_MAX.
pub fn is_strictly_positive(x: &GenNumber) -> OrderVerdict {
    let (eps, vals) = tail_of(x);
    let all_positive = vals.iter().all(|&v| v > 0.0);
    if all_positive {
        let inv = is_invertible(x);
        if inv.relation == Relation::Invertible {
            return OrderVerdict { relation: Relation::StrictlyPositive, exponent_a: inv.exponent_a };
        }
    }
    let nonneg = eps.iter().zip(&vals).all(|(&e, &v)| v >= -e.powi(M_MAX as i32));
    if nonneg {
        OrderVerdict { relation: Relation::NonNegative, exponent_a: None }
    } else {
        OrderVerdict { relation: Relation::Indeterminate, exponent_a: None }
    }
}

/// Executable form of the zero-detection lemma: if |x_eps| <= eps^m |y_eps|
/// on the tail for every m up to M_MAX, then x must be negligible. Returns
/// the combined verdict (bound holds and x classifies Negligible).
pub fn lemma_x0_check(x: &GenNumber, y: &GenNumber) -> bool {
    let (eps, xv) = tail_of(x);
    let (_, yv) = tail_of(y);
    let bound = (1..=M_MAX).all(|m| {
        eps.iter()
            .zip(xv.iter().zip(&yv))
            .all(|(&e, (&xi, &yi))| xi.abs() <= e.powi(m as i32) * yi.abs() * (1.0 + 1e-12))
    });
    bound && classify(x).class == NetClass::Negligible
}

/// Tail limit of a scalar net at tolerance `tol`: the samples must either
/// already agree within `tol` along the tail, or have shrinking increments
/// and stable successive Aitken extrapolations.
pub fn tail_limit(x: &GenNumber, tol: f64) -> Option<f64> {
    let (_, vals) = tail_of(x);
    let n = vals.len();
    if n < 2 {
        return None;
    }
    let diffs: Vec<f64> = vals.windows(2).map(|w| w[1] - w[0]).collect();
    let scale = 1.0 + vals[n - 1].abs();
    if diffs.iter().all(|d| d.abs() < tol * scale) {
        return Some(vals[n - 1]);
    }
    if n < 4 {
        return None;
    }
    // increments must shrink toward the tail end
    for w in diffs.windows(2) {
        if w[1].abs() > 1.05 * w[0].abs() + FLOOR {
            return None;
        }
    }
    let l1 = aitken(&vals[..n - 1]);
    let l2 = aitken(&vals);
    if (l2 - l1).abs() <= tol * (1.0 + l2.abs()) {
        Some(l2)
    } else {
        None
    }
}

/// Scalar association: the tail limit at tolerance TOL_ASSOC.
pub fn scalar_association(x: &GenNumber) -> Option<f64> {
    tail_limit(x, TOL_ASSOC)
}

/// Distributional target for weak association: a piecewise-smooth density
/// plus finitely many point masses.
#[derive(Clone)]
pub struct WeakTarget {
    pub density: Option<PiecewiseFn>,
    pub masses: Vec<(f64, f64)>,
}

impl WeakTarget {
    pub fn zero() -> Self {
        WeakTarget { density: None, masses: Vec::new() }
    }

    pub fn function(f: PiecewiseFn) -> Self {
        WeakTarget { density: Some(f), masses: Vec::new() }
    }

    pub fn point_mass(at: f64, weight: f64) -> Self {
        WeakTarget { density: None, masses: vec![(at, weight)] }
    }

    /// The exact pairing with a test function supported in (a, b).
    pub fn pair<F: Fn(f64) -> f64>(&self, phi: &F, a: f64, b: f64) -> f64 {
        let mut acc = 0.0;
        if let Some(d) = &self.density {
            let f = d.f.clone();
            acc += adaptive_simpson_split(&|x| f(x) * phi(x), a, b, &d.breaks, 1e-12);
        }
        for &(x, w) in &self.masses {
            if x > a && x < b {
                acc += w * phi(x);
            }
        }
        acc
    }
}

/// A smooth test function with compact support inside the domain.
#[derive(Clone)]
pub struct TestFunction {
    pub f: std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub support: (f64, f64),
}

impl TestFunction {
    /// A scaled bump supported in (center - radius, center + radius).
    pub fn bump(center: f64, radius: f64) -> Self {
        TestFunction {
            f: std::sync::Arc::new(move |x| calculus::bump_raw((x - center) / radius)),
            support: (center - radius, center + radius),
        }
    }

    /// A bump modulated by a polynomial, probing higher moments.
    pub fn moment_bump(center: f64, radius: f64, degree: i32) -> Self {
        TestFunction {
            f: std::sync::Arc::new(move |x| {
                let t = (x - center) / radius;
                t.powi(degree) * calculus::bump_raw(t)
            }),
            support: (center - radius, center + radius),
        }
    }

    /// A default family of five tests spread over (a, b).
    pub fn default_family(a: f64, b: f64) -> Vec<TestFunction> {
        let mid = 0.5 * (a + b);
        let span = b - a;
        vec![
            TestFunction::bump(mid, 0.45 * span),
            TestFunction::bump(mid - 0.15 * span, 0.25 * span),
            TestFunction::bump(mid + 0.15 * span, 0.25 * span),
            TestFunction::moment_bump(mid, 0.45 * span, 1),
            TestFunction::moment_bump(mid, 0.45 * span, 2),
        ]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WeakReport {
    pub pass: bool,
    pub max_discrepancy: f64,
    /// (target pairing, tail-limit pairing) per test function.
    pub per_test: Vec<(f64, f64)>,
}

/// Weak association of a grid net against a distributional target: for
/// each test function the per-epsilon pairing must tend to the target
/// pairing within TOL_WEAK over the tail.
pub fn weak_association(
    u: &GridNet,
    target: &WeakTarget,
    tests: &[TestFunction],
) -> Result<WeakReport> {
    let (a, b) = u.domain();
    let tail_start = u.grid().tail_start();
    let mut max_disc: f64 = 0.0;
    let mut per_test = Vec::with_capacity(tests.len());
    for t in tests {
        if t.support.0 < a - 1e-12 || t.support.1 > b + 1e-12 {
            return Err(ColvarError::Precondition(format!(
                "test function support ({}, {}) outside domain [{a}, {b}]",
                t.support.0, t.support.1
            )));
        }
        let mut pairings = Vec::with_capacity(u.grid().len());
        for s in u.slices() {
            let h = s.spatial.h();
            let vals: Vec<f64> =
                s.spatial.nodes().zip(&s.values).map(|(x, &v)| v * (t.f)(x)).collect();
            pairings.push(simpson_samples(&vals, h));
        }
        let tail = &pairings[tail_start..];
        let limit = if tail.len() >= 3 { aitken(tail) } else { tail[tail.len() - 1] };
        let want = target.pair(&|x| (t.f)(x), a, b);
        let disc = (limit - want).abs();
        max_disc = max_disc.max(disc);
        per_test.push((want, limit));
    }
    Ok(WeakReport { pass: max_disc < TOL_WEAK, max_discrepancy: max_disc, per_test })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Definiteness {
    PositiveDefinite,
    PositiveSemidefinite,
    Indefinite,
    Indeterminate,
}

/// Definiteness of a symmetric matrix net: eigenvalues per epsilon form
/// sorted families, each classified as a scalar net.
pub fn classify_definiteness(a: &GenMatrix) -> Result<Definiteness> {
    let p = a.dim();
    let grid = a.grid().clone();
    let mut families: Vec<Vec<f64>> = vec![Vec::with_capacity(grid.len()); p];
    for i in 0..grid.len() {
        let m = DMatrix::from_row_slice(p, p, a.slice(i));
        let sym = nalgebra::SymmetricEigen::new(m);
        let mut evs: Vec<f64> = sym.eigenvalues.iter().copied().collect();
        if evs.iter().any(|v| !v.is_finite()) {
            return Err(ColvarError::Precondition(format!(
                "eigensolver returned non-finite eigenvalues at epsilon = {}",
                grid.values()[i]
            )));
        }
        evs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (k, v) in evs.into_iter().enumerate() {
            families[k].push(v);
        }
    }
    let verdicts: Vec<OrderVerdict> = families
        .into_iter()
        .map(|f| GenNumber::from_samples(grid.clone(), f).map(|g| is_strictly_positive(&g)))
        .collect::<Result<Vec<_>>>()?;
    if verdicts.iter().all(|v| v.relation == Relation::StrictlyPositive) {
        Ok(Definiteness::PositiveDefinite)
    } else if verdicts
        .iter()
        .all(|v| matches!(v.relation, Relation::StrictlyPositive | Relation::NonNegative))
    {
        Ok(Definiteness::PositiveSemidefinite)
    } else {
        Ok(Definiteness::Indefinite)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{make_delta, mollify_embed, DeltaKind, Mollifier};
    use crate::net_core::{make_eps_grid, make_zero_divisor_pair, EpsGrid, SpatialGrid};
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn grid() -> Arc<EpsGrid> {
        Arc::new(make_eps_grid(1e-6, 1e-1, 11).unwrap())
    }

    #[test]
    fn classify_power_laws() {
        let g = grid();
        let r = classify(&GenNumber::from_rule(g.clone(), |e| e * e).unwrap());
        assert_eq!(r.class, NetClass::Moderate(0));
        assert_abs_diff_eq!(r.slope, 2.0, epsilon = 0.05);

        let r = classify(&GenNumber::from_rule(g.clone(), |e| 3.0 * e.powf(-1.5)).unwrap());
        assert_eq!(r.class, NetClass::Moderate(2));
        assert_abs_diff_eq!(r.slope, -1.5, epsilon = 0.05);

        let r = classify(&GenNumber::from_rule(g.clone(), |e| (-1.0 / e).exp()).unwrap());
        assert_eq!(r.class, NetClass::Negligible);

        // decays faster than eps^{-N_MAX} allows to grow: slope -13
        let r = classify(&GenNumber::from_rule(g, |e| e.powf(-13.0)).unwrap());
        assert_eq!(r.class, NetClass::NonModerate);
    }

    #[test]
    fn classify_zero_divisor_not_negligible() {
        let g = grid();
        let (alpha, omega) = make_zero_divisor_pair(&g);
        assert_ne!(classify(&alpha).class, NetClass::Negligible);
        assert_ne!(classify(&omega).class, NetClass::Negligible);
    }

    #[test]
    fn slope_of_products_adds() {
        let g = grid();
        let a = GenNumber::from_rule(g.clone(), |e| 2.0 * e.powf(1.3)).unwrap();
        let b = GenNumber::from_rule(g, |e| 0.5 * e.powf(-0.7)).unwrap();
        let prod = &a * &b;
        let sa = classify(&a).slope;
        let sb = classify(&b).slope;
        let sp = classify(&prod).slope;
        assert!((sp - (sa + sb)).abs() < 0.2);
    }

    #[test]
    fn invertibility_examples() {
        let g = grid();
        let v = is_invertible(&GenNumber::from_rule(g.clone(), |e| e).unwrap());
        assert_eq!(v.relation, Relation::Invertible);
        assert_abs_diff_eq!(v.exponent_a.unwrap(), 1.0, epsilon = 0.05);

        let v = is_invertible(&GenNumber::constant(g.clone(), 1.0).unwrap());
        assert_eq!(v.relation, Relation::Invertible);
        assert_abs_diff_eq!(v.exponent_a.unwrap(), 0.0, epsilon = 0.05);

        let v = is_invertible(&GenNumber::from_rule(g.clone(), |e| (-1.0 / e).exp()).unwrap());
        assert_eq!(v.relation, Relation::Indeterminate);

        // small constant power law still certifies
        let v = is_invertible(&GenNumber::from_rule(g, |e| 1e-3 * e.powf(0.5)).unwrap());
        assert_eq!(v.relation, Relation::Invertible);
    }

    #[test]
    fn strict_positivity_examples() {
        let g = grid();
        let v = is_strictly_positive(&GenNumber::from_rule(g.clone(), |e| e).unwrap());
        assert_eq!(v.relation, Relation::StrictlyPositive);

        // negative but associated to zero: not even NonNegative
        let v = is_strictly_positive(&GenNumber::from_rule(g.clone(), |e| -e).unwrap());
        assert_eq!(v.relation, Relation::Indeterminate);

        let v = is_strictly_positive(&GenNumber::constant(g.clone(), 0.0).unwrap());
        assert_eq!(v.relation, Relation::NonNegative);

        // strictly positive implies invertible and nonnegative
        let x = GenNumber::from_rule(g, |e| 2.0 + e).unwrap();
        assert_eq!(is_strictly_positive(&x).relation, Relation::StrictlyPositive);
        assert_eq!(is_invertible(&x).relation, Relation::Invertible);
    }

    #[test]
    fn lemma_check_examples() {
        let g = grid();
        let one = GenNumber::constant(g.clone(), 1.0).unwrap();
        let x = GenNumber::from_rule(g.clone(), |e| (-1.0 / e).exp()).unwrap();
        assert!(lemma_x0_check(&x, &one));

        let x = GenNumber::from_rule(g.clone(), |e| e.powi(3)).unwrap();
        assert!(!lemma_x0_check(&x, &one));

        let zero = GenNumber::constant(g.clone(), 0.0).unwrap();
        let y = GenNumber::from_rule(g, |e| 7.0 * e).unwrap();
        assert!(lemma_x0_check(&zero, &y));
    }

    #[test]
    fn scalar_association_examples() {
        let g = grid();
        let x = GenNumber::from_rule(g.clone(), |e| 1.0 + e).unwrap();
        let l = scalar_association(&x).unwrap();
        assert_abs_diff_eq!(l, 1.0, epsilon = 1e-6);

        let x = GenNumber::from_rule(g.clone(), |e| 1.0 / e).unwrap();
        assert!(scalar_association(&x).is_none());

        let x = GenNumber::from_rule(g, |e| -e).unwrap();
        let l = scalar_association(&x).unwrap();
        assert_abs_diff_eq!(l, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn weak_association_delta_and_step() {
        let g = Arc::new(make_eps_grid(1e-3, 1e-1, 9).unwrap());
        let d = make_delta(
            DeltaKind::Model { shape: Mollifier::standard() },
            g.clone(),
            0.0,
            -1.0,
            1.0,
            201,
        )
        .unwrap();
        let tests = TestFunction::default_family(-1.0, 1.0);
        let rep = weak_association(&d.net, &WeakTarget::point_mass(0.0, 1.0), &tests).unwrap();
        assert!(rep.pass, "delta report: {rep:?}");

        let step = PiecewiseFn::step(-1.0, 2.0);
        let u = mollify_embed(&step, &Mollifier::standard(), g.clone(), -1.0, 1.0, 201).unwrap();
        let rep = weak_association(&u, &WeakTarget::function(step), &tests).unwrap();
        assert!(rep.pass, "step report: {rep:?}");

        // oscillatory weak null
        let spatial = SpatialGrid::new(-1.0, 1.0, 4001).unwrap();
        let osc = GridNet::from_fn_refined(g, -1.0, 1.0, spatial.n, |e, x| (x / e).sin()).unwrap();
        let rep = weak_association(&osc, &WeakTarget::zero(), &tests).unwrap();
        assert!(rep.pass, "oscillatory report: {rep:?}");
    }

    #[test]
    fn definiteness_examples() {
        let g = grid();
        let entries: Vec<Vec<f64>> =
            g.values().iter().map(|&e| vec![e, 0.0, 0.0, 1.0]).collect();
        let a = GenMatrix::from_entries(g.clone(), 2, entries).unwrap();
        assert_eq!(classify_definiteness(&a).unwrap(), Definiteness::PositiveDefinite);

        let (alpha, _) = make_zero_divisor_pair(&g);
        let entries: Vec<Vec<f64>> =
            alpha.samples().iter().map(|&s| vec![s, 0.0, 0.0, 1.0]).collect();
        let a = GenMatrix::from_entries(g.clone(), 2, entries).unwrap();
        assert_eq!(classify_definiteness(&a).unwrap(), Definiteness::PositiveSemidefinite);

        let entries: Vec<Vec<f64>> = g.values().iter().map(|_| vec![0.0; 4]).collect();
        let a = GenMatrix::from_entries(g.clone(), 2, entries).unwrap();
        assert_eq!(classify_definiteness(&a).unwrap(), Definiteness::PositiveSemidefinite);

        let entries: Vec<Vec<f64>> = g.values().iter().map(|_| vec![1.0, 0.0, 0.0, -1.0]).collect();
        let a = GenMatrix::from_entries(g, 2, entries).unwrap();
        assert_eq!(classify_definiteness(&a).unwrap(), Definiteness::Indefinite);
    }

    #[test]
    fn classify_net_includes_derivatives() {
        let g = Arc::new(make_eps_grid(1e-3, 1e-1, 9).unwrap());
        let spatial = SpatialGrid::new(-1.0, 1.0, 801).unwrap();
        // bounded function whose derivative grows like 1/eps
        let u = GridNet::from_fn_refined(g, -1.0, 1.0, spatial.n, |e, x| (x / e).sin()).unwrap();
        let r = classify_net(&u, None).unwrap();
        assert_eq!(r.class, NetClass::Moderate(2));
        assert!(r.slope < -1.5 && r.slope > -2.5, "slope {}", r.slope);
    }

    #[test]
    fn report_serializes() {
        let g = grid();
        let r = classify(&GenNumber::from_rule(g, |e| e).unwrap());
        let j = r.to_json();
        assert!(j.contains("Moderate"));
        assert!(j.contains("slope"));
    }
}
