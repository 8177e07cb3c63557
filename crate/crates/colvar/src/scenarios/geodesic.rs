//! Geodesics of a 2-D metric as stationary curves of the energy
//! functional int g_ij(u) u'^i u'^j / 2: Christoffel symbols are formed
//! numerically from metric derivatives, checked against closed forms, and
//! the integrated curves conserve their speed.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{eps_grid_from, Check, ScenarioResult};
use crate::asymptotics::{classify_definiteness, Definiteness};
use crate::calculus::bump_raw;
use crate::error::{ColvarError, Result};
use crate::net_core::{GenMatrix, SpatialGrid};
use crate::ode::{integrate, OdeOptions};
use crate::scenarios::particle::traj_net;
use crate::variational::{negligible_within, Boundary, Functional, JetPoint, Lagrangian};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Euclidean,
    /// diag(1, r^2) in (r, phi) coordinates.
    Polar,
    /// exp(2 lambda) I with a bump-shaped lambda; the amplitude carries a
    /// (1 + eps) factor so the family is a genuine net.
    ConformalBump { amplitude: f64, width: f64, center: (f64, f64) },
}

fn metric(kind: &MetricKind, eps: f64, p: &[f64]) -> [f64; 4] {
    match *kind {
        MetricKind::Euclidean => [1.0, 0.0, 0.0, 1.0],
        MetricKind::Polar => [1.0, 0.0, 0.0, p[0] * p[0]],
        MetricKind::ConformalBump { amplitude, width, center } => {
            let dx = (p[0] - center.0) / width;
            let dy = (p[1] - center.1) / width;
            let lam = amplitude * (1.0 + eps) * bump_raw(dx) * bump_raw(dy) / bump_raw(0.0).powi(2);
            let c = (2.0 * lam).exp();
            [c, 0.0, 0.0, c]
        }
    }
}

/// 4th-order central difference of the metric in coordinate direction k.
fn metric_partial(kind: &MetricKind, eps: f64, p: &[f64], k: usize) -> [f64; 4] {
    let h = 1e-3 * (1.0 + p[k].abs());
    let shifted = |s: f64| {
        let mut q = [p[0], p[1]];
        q[k] += s * h;
        metric(kind, eps, &q)
    };
    let (m2, m1, p1, p2) = (shifted(-2.0), shifted(-1.0), shifted(1.0), shifted(2.0));
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * h);
    }
    out
}

/// Christoffel symbols Gamma^k_ij from numeric metric derivatives;
/// errors with the offending point when the metric degenerates.
fn christoffel(kind: &MetricKind, eps: f64, p: &[f64]) -> Result<[[[f64; 2]; 2]; 2]> {
    let g = metric(kind, eps, p);
    let det = g[0] * g[3] - g[1] * g[2];
    if det <= 1e-12 || g[0] <= 0.0 {
        return Err(ColvarError::MetricSingular(p.to_vec()));
    }
    let ginv = [[g[3] / det, -g[1] / det], [-g[2] / det, g[0] / det]];
    let dg = [metric_partial(kind, eps, p, 0), metric_partial(kind, eps, p, 1)];
    let d = |k: usize, i: usize, j: usize| dg[k][2 * i + j];
    let mut gamma = [[[0.0; 2]; 2]; 2];
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = 0.0;
                for l in 0..2 {
                    acc += ginv[k][l] * (d(i, j, l) + d(j, i, l) - d(l, i, j));
                }
                gamma[k][i][j] = 0.5 * acc;
            }
        }
    }
    Ok(gamma)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeodesicConfig {
    pub metric: MetricKind,
    pub start: (f64, f64),
    pub velocity: (f64, f64),
    pub t_end: f64,
    pub eps_min: f64,
    pub eps_max: f64,
    pub eps_count: usize,
    pub rtol: f64,
    pub n_out: usize,
}

impl Default for GeodesicConfig {
    fn default() -> Self {
        GeodesicConfig {
            metric: MetricKind::ConformalBump { amplitude: 0.3, width: 0.8, center: (0.6, 0.2) },
            start: (-1.0, -0.3),
            velocity: (1.0, 0.5),
            t_end: 2.0,
            eps_min: 1e-3,
            eps_max: 1e-1,
            eps_count: 5,
            rtol: 1e-10,
            n_out: 201,
        }
    }
}

/// Integrates the geodesic equations of the configured metric, checks the
/// numeric Christoffel symbols against the flat and polar closed forms,
/// conservation of the Riemannian speed, and the pointwise stationarity
/// of the energy density along the curve.
pub fn geodesic_energy(cfg: &GeodesicConfig) -> Result<ScenarioResult> {
    let grid = eps_grid_from(cfg.eps_min, cfg.eps_max, cfg.eps_count)?;
    let kind = cfg.metric;

    // the metric must be positive definite at the start, uniformly in eps
    let p0 = [cfg.start.0, cfg.start.1];
    let entries: Vec<Vec<f64>> =
        grid.values().iter().map(|&e| metric(&kind, e, &p0).to_vec()).collect();
    let gm = GenMatrix::from_entries(grid.clone(), 2, entries)?;
    if classify_definiteness(&gm)? != Definiteness::PositiveDefinite {
        return Err(ColvarError::MetricSingular(p0.to_vec()));
    }

    // flat-metric oracle: all symbols vanish
    let mut flat_worst: f64 = 0.0;
    for &(x, y) in &[(0.0, 0.0), (0.7, -0.4), (-1.2, 2.0)] {
        let gamma = christoffel(&MetricKind::Euclidean, 1.0, &[x, y])?;
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    flat_worst = flat_worst.max(gamma[k][i][j].abs());
                }
            }
        }
    }

    // polar oracle: Gamma^r_pp = -r, Gamma^p_rp = 1/r
    let mut polar_worst: f64 = 0.0;
    for &r in &[0.5, 1.0, 1.7] {
        let gamma = christoffel(&MetricKind::Polar, 1.0, &[r, 0.3])?;
        polar_worst = polar_worst.max((gamma[0][1][1] + r).abs());
        polar_worst = polar_worst.max((gamma[1][0][1] - 1.0 / r).abs());
        polar_worst = polar_worst.max((gamma[1][1][0] - 1.0 / r).abs());
    }

    // per-epsilon geodesic runs
    let tgrid = SpatialGrid::new(0.0, cfg.t_end, cfg.n_out)?;
    let t_out: Vec<f64> = tgrid.nodes().skip(1).collect();
    let y0 = [cfg.start.0, cfg.start.1, cfg.velocity.0, cfg.velocity.1];
    let mut rows: Vec<Vec<Vec<f64>>> = Vec::with_capacity(grid.len());
    let mut speed_drift = Vec::with_capacity(grid.len());
    for &eps in grid.values() {
        let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
            let gamma = christoffel(&kind, eps, &y[0..2]).unwrap_or([[[f64::NAN; 2]; 2]; 2]);
            dy[0] = y[2];
            dy[1] = y[3];
            for k in 0..2 {
                let mut acc = 0.0;
                for i in 0..2 {
                    for j in 0..2 {
                        acc += gamma[k][i][j] * y[2 + i] * y[2 + j];
                    }
                }
                dy[2 + k] = -acc;
            }
        };
        let opts = OdeOptions { rtol: cfg.rtol, atol: cfg.rtol, eps, ..Default::default() };
        let states = integrate(&rhs, 0.0, &y0, &t_out, &opts)?;
        let mut comp = vec![vec![y0[0]], vec![y0[1]], vec![y0[2]], vec![y0[3]]];
        let sq_speed = |y: &[f64]| {
            let g = metric(&kind, eps, &y[0..2]);
            g[0] * y[2] * y[2] + 2.0 * g[1] * y[2] * y[3] + g[3] * y[3] * y[3]
        };
        let s0 = sq_speed(&y0);
        let mut worst: f64 = 0.0;
        for s in &states {
            for c in 0..4 {
                comp[c].push(s[c]);
            }
            worst = worst.max((sq_speed(s) - s0).abs() / (1.0 + s0.abs()));
        }
        speed_drift.push(worst);
        rows.push(comp);
    }
    let net_of = |c: usize| {
        let r: Vec<Vec<f64>> = rows.iter().map(|comp| comp[c].clone()).collect();
        traj_net(&grid, &tgrid, &r)
    };
    let x1 = net_of(0)?;
    let x2 = net_of(1)?;
    let speed_ok = speed_drift.iter().all(|&d| d <= 1e-8);

    // pointwise Euler-Lagrange residual of the energy density along the
    // trajectory; the budget absorbs the 4th-order differentiation of the
    // sampled curve
    let lagr = Lagrangian::new("geodesic-energy", 1, 2, move |eps, j: &JetPoint| {
        let g = metric(&kind, eps, &j.u);
        0.5 * (g[0] * j.du[0] * j.du[0] + 2.0 * g[1] * j.du[0] * j.du[1] + g[3] * j.du[1] * j.du[1])
    })?;
    let functional = Functional::new(lagr, (0.0, cfg.t_end), Boundary::Natural)?;
    let residuals = crate::variational::euler_residual(&functional, &[x1.clone(), x2.clone()])?;
    let res_ok = residuals.iter().all(|r| negligible_within(r, |_, h| 10.0 * h * h));

    // flat metric propagates straight lines exactly
    let straight_err = if kind == MetricKind::Euclidean {
        let mut worst: f64 = 0.0;
        for (i, s) in x1.slices().iter().enumerate() {
            for (j, t) in s.spatial.nodes().enumerate() {
                worst = worst.max((s.values[j] - (cfg.start.0 + cfg.velocity.0 * t)).abs());
                worst = worst
                    .max((x2.slice(i).values[j] - (cfg.start.1 + cfg.velocity.1 * t)).abs());
            }
        }
        Some(worst)
    } else {
        None
    };

    let mut checks = vec![
        Check::new(
            "flat_symbols_vanish",
            flat_worst <= 1e-10,
            json!({ "worst": flat_worst }),
        ),
        Check::new(
            "polar_symbols_closed_form",
            polar_worst <= 1e-8,
            json!({ "worst": polar_worst, "tol": 1e-8 }),
        ),
        Check::new(
            "speed_conserved",
            speed_ok,
            json!({ "per_eps": speed_drift, "tol": 1e-8, "eps": grid.values() }),
        ),
        Check::new(
            "energy_stationarity_along_curve",
            res_ok,
            json!({ "sup": residuals.iter().map(|r| r.sup_abs(None).samples().to_vec())
                        .collect::<Vec<_>>(),
                    "eps": grid.values() }),
        ),
    ];
    if let Some(w) = straight_err {
        checks.push(Check::new(
            "flat_geodesics_are_straight",
            w <= 1e-8,
            json!({ "worst": w, "tol": 1e-8 }),
        ));
    }
    Ok(ScenarioResult {
        name: "geodesic_energy".into(),
        params: serde_json::to_value(cfg).unwrap(),
        checks,
        csv: vec![super::net_csv("geodesic_x1", &x1), super::net_csv("geodesic_x2", &x2)],
    })
}
