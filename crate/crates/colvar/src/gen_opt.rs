//! Finite-dimensional extremum testing for per-epsilon function families:
//! critical-point detection, Hessian classification, and a probe-based
//! neighborhood minimum test. Strictly positive curvature at a point does
//! not imply a minimum here; the probe set is built to catch exactly the
//! epsilon-scale and subsequence-scale failure modes.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::asymptotics::{self, Definiteness, NetClass, M_MAX};
use crate::error::{ColvarError, Result};
use crate::net_core::{EpsGrid, GenMatrix, GenNumber};
use crate::par;

type EpsVecFn<T> = Arc<dyn Fn(f64, &[f64]) -> T + Send + Sync>;

/// A per-epsilon smooth function on a box in R^p with gradient and Hessian
/// callables, analytic or by nested central differences with step tied to
/// the epsilon feature width.
#[derive(Clone)]
pub struct EpsFunctionFamily {
    pub grid: Arc<EpsGrid>,
    pub dim: usize,
    pub domain: Vec<(f64, f64)>,
    f: EpsVecFn<f64>,
    grad: Option<EpsVecFn<Vec<f64>>>,
    hess: Option<EpsVecFn<Vec<f64>>>,
}

/// Finite-difference step per epsilon: resolves eps-width features without
/// amplifying roundoff.
pub fn fd_step(eps: f64) -> f64 {
    (eps / 64.0).max(1e-5)
}

impl EpsFunctionFamily {
    pub fn new<F>(grid: Arc<EpsGrid>, domain: Vec<(f64, f64)>, f: F) -> Self
    where
        F: Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    {
        let dim = domain.len();
        EpsFunctionFamily { grid, dim, domain, f: Arc::new(f), grad: None, hess: None }
    }

    pub fn with_gradient<G>(mut self, grad: G) -> Self
    where
        G: Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.grad = Some(Arc::new(grad));
        self
    }

    pub fn with_hessian<H>(mut self, hess: H) -> Self
    where
        H: Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.hess = Some(Arc::new(hess));
        self
    }

    pub fn value(&self, eps: f64, x: &[f64]) -> f64 {
        (self.f)(eps, x)
    }

    pub fn gradient(&self, eps: f64, x: &[f64]) -> Vec<f64> {
        if let Some(g) = &self.grad {
            return g(eps, x);
        }
        let h = fd_step(eps);
        (0..self.dim)
            .map(|k| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                let hk = h * (1.0 + x[k].abs());
                xp[k] += hk;
                xm[k] -= hk;
                ((self.f)(eps, &xp) - (self.f)(eps, &xm)) / (2.0 * hk)
            })
            .collect()
    }

    /// Row-major symmetric Hessian, each entry computed once per pair.
    pub fn hessian(&self, eps: f64, x: &[f64]) -> Vec<f64> {
        if let Some(hs) = &self.hess {
            return hs(eps, x);
        }
        let p = self.dim;
        let h = fd_step(eps);
        let mut out = vec![0.0; p * p];
        let f0 = (self.f)(eps, x);
        for i in 0..p {
            let hi = h * (1.0 + x[i].abs());
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += hi;
            xm[i] -= hi;
            out[i * p + i] = ((self.f)(eps, &xp) - 2.0 * f0 + (self.f)(eps, &xm)) / (hi * hi);
            for j in (i + 1)..p {
                let hj = h * (1.0 + x[j].abs());
                let mut xpp = x.to_vec();
                let mut xpm = x.to_vec();
                let mut xmp = x.to_vec();
                let mut xmm = x.to_vec();
                xpp[i] += hi;
                xpp[j] += hj;
                xpm[i] += hi;
                xpm[j] -= hj;
                xmp[i] -= hi;
                xmp[j] += hj;
                xmm[i] -= hi;
                xmm[j] -= hj;
                let v = ((self.f)(eps, &xpp) - (self.f)(eps, &xpm) - (self.f)(eps, &xmp)
                    + (self.f)(eps, &xmm))
                    / (4.0 * hi * hj);
                out[i * p + j] = v;
                out[j * p + i] = v;
            }
        }
        out
    }

    fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.domain).all(|(&xi, &(a, b))| xi >= a && xi <= b)
    }

    fn strictly_inside(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.domain).all(|(&xi, &(a, b))| xi > a && xi < b)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalReport {
    pub grad_report: asymptotics::AsymptoticReport,
    pub hessian: Definiteness,
}

/// Classifies the gradient net (sup over components) and the Hessian
/// family at a classical interior point.
pub fn check_critical(f: &EpsFunctionFamily, x0: &[f64]) -> Result<CriticalReport> {
    if x0.len() != f.dim {
        return Err(ColvarError::Precondition("point dimension mismatch".into()));
    }
    if !f.strictly_inside(x0) {
        return Err(ColvarError::Precondition(format!(
            "point {x0:?} not interior to the domain {:?}",
            f.domain
        )));
    }
    let eps_values = f.grid.values().to_vec();
    let per_eps: Vec<(f64, Vec<f64>)> = par::map_indexed(eps_values.len(), |i| {
        let eps = eps_values[i];
        let g = f.gradient(eps, x0);
        let sup = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
        (sup, f.hessian(eps, x0))
    });
    let grad_sup = GenNumber::from_samples(
        f.grid.clone(),
        per_eps.iter().map(|(s, _)| *s).collect(),
    )?;
    let hess = GenMatrix::from_entries(
        f.grid.clone(),
        f.dim,
        per_eps.into_iter().map(|(_, h)| h).collect(),
    )?;
    Ok(CriticalReport {
        grad_report: asymptotics::classify(&grad_sup),
        hessian: asymptotics::classify_definiteness(&hess)?,
    })
}

/// One probe of the neighborhood: a per-epsilon coordinate sequence.
#[derive(Debug, Clone, Serialize)]
pub struct ProbePoint {
    pub label: String,
    /// coords[i] is the R^p point sampled at grid epsilon i.
    pub coords: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub enum MinProbeVerdict {
    IsMinimumOnProbes,
    FailsAt { point: ProbePoint, values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SufficiencyVerdict {
    UniqueMinimum,
    Minimum,
    Inconclusive,
}

const N_DIRECTIONS: usize = 8;
const N_RADII: usize = 5;
const EPS_EXPONENTS: [f64; 3] = [0.5, 1.0, 2.0];
const PROBE_SEED: u64 = 0x50524F42;

fn probe_directions(dim: usize) -> Vec<Vec<f64>> {
    if dim == 1 {
        return (0..N_DIRECTIONS).map(|i| vec![if i % 2 == 0 { 1.0 } else { -1.0 }]).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    (0..N_DIRECTIONS)
        .map(|_| loop {
            let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-3 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        })
        .collect()
}

/// The probe set: classical offsets, near-standard epsilon-power offsets
/// in 8 directions x 3 exponents x 5 geometric radii, and interleaved
/// subsequence variants that move only on every other grid index.
fn probe_set(f: &EpsFunctionFamily, x0: &[f64], radius: f64) -> Vec<ProbePoint> {
    let dirs = probe_directions(f.dim);
    let radii: Vec<f64> = (0..N_RADII).map(|j| radius * 1e-3f64.powf(j as f64 / 4.0)).collect();
    let eps_values = f.grid.values();
    let mut probes = Vec::new();
    for (di, d) in dirs.iter().enumerate() {
        for (ri, &r) in radii.iter().enumerate() {
            let classical: Vec<f64> = x0.iter().zip(d).map(|(&x, &dk)| x + r * dk).collect();
            if f.contains(&classical) {
                probes.push(ProbePoint {
                    label: format!("classical d{di} r{ri}"),
                    coords: vec![classical; eps_values.len()],
                });
            }
            for &k in &EPS_EXPONENTS {
                let coords: Vec<Vec<f64>> = eps_values
                    .iter()
                    .map(|&e| {
                        let s = r * e.powf(k);
                        x0.iter().zip(d).map(|(&x, &dk)| x + s * dk).collect()
                    })
                    .collect();
                if coords.iter().all(|c| f.contains(c)) {
                    let interleaved: Vec<Vec<f64>> = coords
                        .iter()
                        .enumerate()
                        .map(|(i, c)| if i % 2 == 0 { c.clone() } else { x0.to_vec() })
                        .collect();
                    probes.push(ProbePoint {
                        label: format!("near-standard d{di} r{ri} k{k}"),
                        coords,
                    });
                    probes.push(ProbePoint {
                        label: format!("interleaved d{di} r{ri} k{k}"),
                        coords: interleaved,
                    });
                }
            }
        }
    }
    probes
}

/// True when the difference net f(probe) - f(x0) witnesses a failed
/// minimum: bounded above by a negligible margin on the tail, somewhere
/// strictly negative, and not itself negligible.
fn is_negative_witness(grid: &Arc<EpsGrid>, diffs: &[f64]) -> bool {
    let start = grid.tail_start();
    let eps = &grid.values()[start..];
    let tail = &diffs[start..];
    let bounded_above = eps
        .iter()
        .zip(tail)
        .all(|(&e, &d)| d <= e.powi(M_MAX as i32));
    if !bounded_above || !tail.iter().any(|&d| d < 0.0) {
        return false;
    }
    match GenNumber::from_samples(grid.clone(), diffs.to_vec()) {
        Ok(net) => asymptotics::classify(&net).class != NetClass::Negligible,
        Err(_) => false,
    }
}

/// Probes f on a ball around x0: classical points, near-standard points
/// x0 + c eps^k, and interleaved subsequences. Returns the first probe at
/// which f(probe) - f(x0) has a strictly negative non-negligible tail.
pub fn neighborhood_min_test(
    f: &EpsFunctionFamily,
    x0: &[f64],
    radius: f64,
) -> Result<MinProbeVerdict> {
    if !f.strictly_inside(x0) {
        return Err(ColvarError::Precondition("x0 not interior".into()));
    }
    let probes = probe_set(f, x0, radius);
    let eps_values = f.grid.values().to_vec();
    let diffs_per_probe: Vec<Vec<f64>> = par::map_indexed(probes.len(), |pi| {
        let p = &probes[pi];
        eps_values
            .iter()
            .zip(&p.coords)
            .map(|(&e, c)| f.value(e, c) - f.value(e, x0))
            .collect()
    });
    for (p, diffs) in probes.iter().zip(&diffs_per_probe) {
        if is_negative_witness(&f.grid, diffs) {
            return Ok(MinProbeVerdict::FailsAt { point: p.clone(), values: diffs.clone() });
        }
    }
    Ok(MinProbeVerdict::IsMinimumOnProbes)
}

/// Sufficient-condition check: the Hessian family must be positive
/// semidefinite at every probe for Minimum, positive definite for
/// UniqueMinimum. A failed neighborhood test always downgrades to
/// Inconclusive, so this check is never less sound than direct probing.
pub fn sufficient_min_check(
    f: &EpsFunctionFamily,
    x0: &[f64],
    radius: f64,
) -> Result<SufficiencyVerdict> {
    let critical = check_critical(f, x0)?;
    if critical.grad_report.class != NetClass::Negligible {
        return Err(ColvarError::Precondition(format!(
            "gradient at x0 is not negligible (class {:?})",
            critical.grad_report.class
        )));
    }
    let probes = probe_set(f, x0, radius);
    let eps_values = f.grid.values().to_vec();
    let verdicts: Vec<Result<Definiteness>> = par::map_indexed(probes.len(), |pi| {
        let p = &probes[pi];
        let entries: Vec<Vec<f64>> = eps_values
            .iter()
            .zip(&p.coords)
            .map(|(&e, c)| f.hessian(e, c))
            .collect();
        let m = GenMatrix::from_entries(f.grid.clone(), f.dim, entries)?;
        asymptotics::classify_definiteness(&m)
    });
    let mut all_pd = true;
    let mut all_psd = true;
    for v in verdicts {
        match v? {
            Definiteness::PositiveDefinite => {}
            Definiteness::PositiveSemidefinite => all_pd = false,
            _ => {
                all_pd = false;
                all_psd = false;
            }
        }
    }
    if !all_psd {
        return Ok(SufficiencyVerdict::Inconclusive);
    }
    // soundness cross-check against direct probing
    if let MinProbeVerdict::FailsAt { .. } = neighborhood_min_test(f, x0, radius)? {
        return Ok(SufficiencyVerdict::Inconclusive);
    }
    Ok(if all_pd { SufficiencyVerdict::UniqueMinimum } else { SufficiencyVerdict::Minimum })
}

/// C-infinity step: 0 for t <= 0, 1 for t >= 1.
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let g = (-1.0 / t).exp();
        let h = (-1.0 / (1.0 - t)).exp();
        g / (g + h)
    }
}

/// Smooth bump equal to x^2 on [-1/2, 1/2], exactly -1 at x = +-1, and 0
/// outside [-1.24, 1.24]: strictly positive curvature at the origin with
/// pits of depth 1 on both sides, so the origin is not a minimum at
/// epsilon scale.
pub fn side_pit_bump(x: f64) -> f64 {
    let a = x * x * smoothstep((0.76 - x.abs()) / 0.26);
    let t = (x.abs() - 1.0) / 0.24;
    let b = if t.abs() < 1.0 {
        -(-1.0 / (1.0 - t * t)).exp() * (1.0f64).exp()
    } else {
        0.0
    };
    a + b
}

/// Smooth plateau equal to -1 on [-1/2, 1/2] with support (-1, 1).
pub fn dip_plateau(x: f64) -> f64 {
    -smoothstep((1.0 - x.abs()) / 0.5)
}

/// The scaled-bump family f_eps(x) = phi(x/eps) on [-2, 2]: gradient
/// negligible at 0 and second derivative 2/eps^2 strictly positive, yet
/// the value at the moving point x = eps is exactly -1.
pub fn side_pit_family(grid: Arc<EpsGrid>) -> EpsFunctionFamily {
    EpsFunctionFamily::new(grid, vec![(-2.0, 2.0)], |eps, x| side_pit_bump(x[0] / eps))
}

/// The staircase family F_eps(x) = sum_n eps^n phi2((x - 1/n)/eps): every
/// classical point 1/n carries a dip of depth eps^n, so classical probes
/// detect a strictly negative non-negligible value.
pub fn staircase_dip_family(grid: Arc<EpsGrid>) -> EpsFunctionFamily {
    EpsFunctionFamily::new(grid, vec![(-2.0, 2.0)], |eps, x| {
        let x = x[0];
        let mut acc = 0.0;
        // only n with |x - 1/n| < eps contribute; eps^n underflows fast
        let n_cap = (700.0 / -eps.ln()).ceil().max(3.0) as usize;
        for n in 1..=n_cap.min(100_000) {
            let c = 1.0 / n as f64;
            if (x - c).abs() < eps {
                acc += eps.powi(n as i32) * dip_plateau((x - c) / eps);
            }
            if c < x - eps {
                break;
            }
        }
        acc
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net_core::{make_eps_grid, make_zero_divisor_pair};
    use approx::assert_abs_diff_eq;

    fn grid() -> Arc<EpsGrid> {
        Arc::new(make_eps_grid(1e-4, 1e-1, 10).unwrap())
    }

    #[test]
    fn smoothstep_shape() {
        assert_eq!(smoothstep(-1.0), 0.0);
        assert_eq!(smoothstep(2.0), 1.0);
        assert_abs_diff_eq!(smoothstep(0.5), 0.5, epsilon = 1e-12);
        assert!(smoothstep(0.3) < smoothstep(0.7));
    }

    #[test]
    fn side_pit_bump_shape() {
        // equals x^2 on the core
        for &x in &[0.0, 0.2, -0.45, 0.5] {
            assert_abs_diff_eq!(side_pit_bump(x), x * x, epsilon = 1e-15);
        }
        // exact pits at +-1
        assert_abs_diff_eq!(side_pit_bump(1.0), -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(side_pit_bump(-1.0), -1.0, epsilon = 1e-15);
        // compact support
        assert_eq!(side_pit_bump(1.5), 0.0);
        assert_eq!(side_pit_bump(-2.0), 0.0);
    }

    #[test]
    fn dip_plateau_shape() {
        assert_eq!(dip_plateau(0.0), -1.0);
        assert_eq!(dip_plateau(0.5), -1.0);
        assert_eq!(dip_plateau(1.0), 0.0);
        assert!(dip_plateau(0.8) > -1.0 && dip_plateau(0.8) < 0.0);
    }

    #[test]
    fn classical_square_is_minimum() {
        let f = EpsFunctionFamily::new(grid(), vec![(-2.0, 2.0)], |_, x| x[0] * x[0]);
        let rep = check_critical(&f, &[0.0]).unwrap();
        assert_eq!(rep.grad_report.class, NetClass::Negligible);
        assert_eq!(rep.hessian, Definiteness::PositiveDefinite);
        assert!(matches!(
            neighborhood_min_test(&f, &[0.0], 1.0).unwrap(),
            MinProbeVerdict::IsMinimumOnProbes
        ));
        assert_eq!(sufficient_min_check(&f, &[0.0], 1.0).unwrap(), SufficiencyVerdict::UniqueMinimum);
    }

    #[test]
    fn side_pit_counterexample_flagged() {
        let g = grid();
        let f = side_pit_family(g.clone());
        let rep = check_critical(&f, &[0.0]).unwrap();
        assert_eq!(rep.grad_report.class, NetClass::Negligible);
        // second derivative 2/eps^2 at the origin
        for &e in g.values() {
            let h = f.hessian(e, &[0.0])[0];
            assert_abs_diff_eq!(h * e * e, 2.0, epsilon = 1e-3);
        }
        let curvature = GenNumber::from_rule(g.clone(), |e| f.hessian(e, &[0.0])[0]).unwrap();
        assert_eq!(
            asymptotics::is_strictly_positive(&curvature).relation,
            asymptotics::Relation::StrictlyPositive
        );
        // and yet the moving point x = eps sits in the pit at exactly -1
        match neighborhood_min_test(&f, &[0.0], 1.0).unwrap() {
            MinProbeVerdict::FailsAt { point, values } => {
                assert!(point.label.contains("near-standard"));
                let worst = values.iter().cloned().fold(f64::INFINITY, f64::min);
                assert_abs_diff_eq!(worst, -1.0, epsilon = 1e-9);
            }
            v => panic!("expected failure, got {v:?}"),
        }
        assert_eq!(sufficient_min_check(&f, &[0.0], 1.0).unwrap(), SufficiencyVerdict::Inconclusive);
    }

    #[test]
    fn staircase_counterexample_flagged() {
        let g = grid();
        let f = staircase_dip_family(g.clone());
        // the dip at x = 1/2 has value -eps^2
        for &e in g.values() {
            assert_abs_diff_eq!(f.value(e, &[0.5]), -e * e, epsilon = 1e-300);
        }
        let rep = check_critical(&f, &[0.0]).unwrap();
        assert_eq!(rep.grad_report.class, NetClass::Negligible);
        match neighborhood_min_test(&f, &[0.0], 0.5).unwrap() {
            MinProbeVerdict::FailsAt { point, .. } => {
                assert!(point.label.contains("classical"), "label {}", point.label);
            }
            v => panic!("expected failure, got {v:?}"),
        }
    }

    #[test]
    fn zero_divisor_semidefinite_minimum() {
        let g = grid();
        let (alpha, _) = make_zero_divisor_pair(&g);
        let samples: Vec<f64> = alpha.samples().to_vec();
        let eps_values: Vec<f64> = g.values().to_vec();
        let f = EpsFunctionFamily::new(g.clone(), vec![(-2.0, 2.0)], move |eps, x| {
            let i = eps_values.iter().position(|&e| e == eps).unwrap();
            samples[i] * x[0] * x[0]
        });
        let rep = check_critical(&f, &[0.0]).unwrap();
        assert_eq!(rep.grad_report.class, NetClass::Negligible);
        assert_eq!(rep.hessian, Definiteness::PositiveSemidefinite);
        assert_eq!(sufficient_min_check(&f, &[0.0], 1.0).unwrap(), SufficiencyVerdict::Minimum);
    }

    #[test]
    fn multivariate_minimum() {
        let f = EpsFunctionFamily::new(grid(), vec![(-2.0, 2.0), (-2.0, 2.0)], |_, x| {
            x[0] * x[0] + 0.5 * x[1] * x[1] + 0.1 * x[0] * x[1]
        });
        let rep = check_critical(&f, &[0.0, 0.0]).unwrap();
        assert_eq!(rep.grad_report.class, NetClass::Negligible);
        assert_eq!(rep.hessian, Definiteness::PositiveDefinite);
        assert_eq!(
            sufficient_min_check(&f, &[0.0, 0.0], 1.0).unwrap(),
            SufficiencyVerdict::UniqueMinimum
        );
    }

    #[test]
    fn boundary_point_rejected() {
        let f = EpsFunctionFamily::new(grid(), vec![(-1.0, 1.0)], |_, x| x[0] * x[0]);
        assert!(check_critical(&f, &[1.0]).is_err());
    }
}
