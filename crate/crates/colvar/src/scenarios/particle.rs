//! Point-particle scenarios: reflection from a delta-concentrated
//! potential, and planar motion in a central field with conserved angular
//! momentum.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{eps_grid_from, net_csv, Check, ScenarioResult};
use crate::asymptotics::classify;
use crate::calculus::{bump_raw, Mollifier};
use crate::error::{ColvarError, Result};
use crate::net_core::{EpsGrid, GridNet, GridSlice, SpatialGrid};
use crate::numerics::adaptive_simpson;
use crate::ode::{integrate, OdeOptions};
use crate::par;
use crate::symmetry::{
    conservation_drift, noether_current, noether_identity_check, sample_jets, VectorField,
    JET_SEED, TOL_IDENTITY,
};
use crate::variational::{JetPoint, Lagrangian};

/// Builds a trajectory net: one value row per epsilon over a shared time
/// grid.
pub(crate) fn traj_net(
    grid: &Arc<EpsGrid>,
    tgrid: &SpatialGrid,
    rows: &[Vec<f64>],
) -> Result<GridNet> {
    let slices = rows
        .iter()
        .map(|v| GridSlice { spatial: tgrid.clone(), values: v.clone() })
        .collect();
    GridNet::from_slices(grid.clone(), slices)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeltaParticleConfig {
    pub x0: f64,
    pub y0: f64,
    pub t_end: f64,
    pub eps_min: f64,
    pub eps_max: f64,
    pub eps_count: usize,
    pub rtol: f64,
    /// Half-width of the excluded impact window around the crossing time.
    pub impact_window: f64,
    /// Allowed sup-distance to the reflected ray at the smallest epsilon.
    pub shadow_tol: f64,
    pub drift_tol: f64,
    pub n_out: usize,
}

impl Default for DeltaParticleConfig {
    fn default() -> Self {
        DeltaParticleConfig {
            x0: 1.0,
            y0: -2.0,
            t_end: 2.0,
            eps_min: 2f64.powi(-10),
            eps_max: 2f64.powi(-4),
            eps_count: 7,
            rtol: 1e-10,
            impact_window: 0.1,
            shadow_tol: 0.02,
            drift_tol: 1e-8,
            n_out: 201,
        }
    }
}

/// Derivative of the unnormalized standard bump.
fn bump_raw_d(x: f64) -> f64 {
    if x.abs() < 1.0 {
        let w = 1.0 - x * x;
        bump_raw(x) * (-2.0 * x / (w * w))
    } else {
        0.0
    }
}

/// A particle reflected by the barrier (1/eps) phi(x/eps): integrates
/// x'' = -D_eps'(x) per epsilon, compares against the reflected ray
/// sign(x0) |x0 + t y0| away from the impact time, and verifies energy
/// conservation through the Noether current of time translation.
pub fn delta_particle(cfg: &DeltaParticleConfig) -> Result<ScenarioResult> {
    let grid = eps_grid_from(cfg.eps_min, cfg.eps_max, cfg.eps_count)?;
    let moll = Mollifier::standard();
    let norm = adaptive_simpson(&bump_raw, -1.0, 1.0, 1e-14);
    let t_end = cfg.t_end;
    let tgrid = SpatialGrid::new(0.0, t_end, cfg.n_out)?;
    let t_out: Vec<f64> = tgrid.nodes().skip(1).collect();
    let box_r = 2.0 * (cfg.x0.abs() + cfg.y0.abs() * t_end) + 1.0;

    let eps_values = grid.values().to_vec();
    let runs = par::try_map_indexed(grid.len(), |i| {
        let eps = eps_values[i];
        // force of the scaled barrier; the shape derivative is analytic so
        // force and energy stay exactly compatible
        let rhs = move |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -bump_raw_d(y[0] / eps) / (norm * eps * eps);
        };
        // inside |x| <= 2 eps the step is capped at eps/8; outside, at half
        // the time needed to reach the support edge, so the solver cannot
        // step across the barrier unresolved
        let cap = move |_t: f64, y: &[f64]| {
            if y[0].abs() <= 2.0 * eps {
                eps / 8.0
            } else {
                let speed = y[1].abs().max(0.1);
                ((y[0].abs() - eps) / (2.0 * speed)).min(t_end / 50.0)
            }
        };
        let opts = OdeOptions { rtol: cfg.rtol, atol: cfg.rtol, max_step: Some(&cap), eps, ..Default::default() };
        let states = integrate(&rhs, 0.0, &[cfg.x0, cfg.y0], &t_out, &opts)?;
        let mut xs = vec![cfg.x0];
        let mut vs = vec![cfg.y0];
        for (s, &t) in states.iter().zip(&t_out) {
            if s[0].abs() > box_r {
                return Err(ColvarError::TrajectoryEscaped { eps, t });
            }
            xs.push(s[0]);
            vs.push(s[1]);
        }
        Ok((xs, vs))
    })?;
    let x_rows: Vec<Vec<f64>> = runs.iter().map(|(x, _)| x.clone()).collect();
    let v_rows: Vec<Vec<f64>> = runs.iter().map(|(_, v)| v.clone()).collect();
    let x_net = traj_net(&grid, &tgrid, &x_rows)?;
    let v_net = traj_net(&grid, &tgrid, &v_rows)?;

    // reflected ray and its crossing time
    let (x0, y0) = (cfg.x0, cfg.y0);
    let t_impact = if x0 * y0 < 0.0 { -x0 / y0 } else { f64::INFINITY };
    let shadow = move |t: f64| x0.signum() * (x0 + t * y0).abs();
    let mut dist = Vec::with_capacity(grid.len());
    for xs in &x_rows {
        let mut worst: f64 = 0.0;
        for (t, &x) in tgrid.nodes().zip(xs) {
            if (t - t_impact).abs() >= cfg.impact_window {
                worst = worst.max((x - shadow(t)).abs());
            }
        }
        dist.push(worst);
    }
    let last = *dist.last().unwrap();
    let tail4 = &dist[dist.len().saturating_sub(4)..];
    let monotone = tail4.windows(2).all(|w| w[1] <= w[0] + 1e-12);

    // energy via the time-translation current of L = v^2/2 - D_eps(x)
    let moll2 = moll.clone();
    let lagr = Lagrangian::new("delta-barrier-particle", 1, 1, move |eps, j: &JetPoint| {
        0.5 * j.du[0] * j.du[0] - moll2.scaled(eps, j.u[0])
    })?;
    let current = noether_current(&lagr, &VectorField::time_translation(1))?;
    let drift = conservation_drift(&current, &[x_net.clone()], &[v_net])?;
    let drift_ok = drift.per_eps.iter().all(|&d| d <= cfg.drift_tol);

    let class = classify(&x_net.sup_abs(None));

    let checks = vec![
        Check::new(
            "position_moderate_order_zero",
            matches!(class.class, crate::asymptotics::NetClass::Moderate(0)),
            json!({ "class": class, "eps": grid.values() }),
        ),
        Check::new(
            "shadow_distance_at_smallest_eps",
            last <= cfg.shadow_tol,
            json!({ "distance": last, "tol": cfg.shadow_tol, "eps": grid.smallest() }),
        ),
        Check::new(
            "shadow_distance_monotone_tail",
            monotone,
            json!({ "per_eps": dist, "eps": grid.values() }),
        ),
        Check::new(
            "energy_drift",
            drift_ok,
            json!({ "per_eps": drift.per_eps, "tol": cfg.drift_tol, "eps": grid.values() }),
        ),
    ];
    Ok(ScenarioResult {
        name: "delta_particle".into(),
        params: serde_json::to_value(cfg).unwrap(),
        checks,
        csv: vec![net_csv("delta_particle_position", &x_net)],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentralPotential {
    /// V = 0: straight lines in polar coordinates.
    Free,
    /// V = -k / sqrt(r^2 + eps^2), the regularized attractive 1/r field.
    Softened,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CentralFieldConfig {
    pub mass: f64,
    pub potential: CentralPotential,
    pub strength: f64,
    pub r0: f64,
    pub phi0: f64,
    pub vr0: f64,
    /// Initial angular velocity; ignored when `circular` is set.
    pub om0: f64,
    /// Start on the per-epsilon circular orbit of radius r0.
    pub circular: bool,
    pub t_end: f64,
    pub eps_min: f64,
    pub eps_max: f64,
    pub eps_count: usize,
    pub rtol: f64,
    pub drift_tol: f64,
    pub n_out: usize,
    pub n_jets: usize,
}

impl Default for CentralFieldConfig {
    fn default() -> Self {
        CentralFieldConfig {
            mass: 1.0,
            potential: CentralPotential::Softened,
            strength: 1.0,
            r0: 1.0,
            phi0: 0.0,
            vr0: 0.0,
            om0: 1.0,
            circular: true,
            t_end: 6.0,
            eps_min: 1e-3,
            eps_max: 1e-1,
            eps_count: 7,
            rtol: 1e-10,
            drift_tol: 1e-8,
            n_out: 201,
            n_jets: 200,
        }
    }
}

/// Planar motion r'' = r phi'^2 - V'(r)/m, (r^2 phi')' = 0: checks the
/// angular momentum and energy currents along the solver trajectory and
/// the divergence identity for the rotation field on random jets.
pub fn central_field(cfg: &CentralFieldConfig) -> Result<ScenarioResult> {
    let grid = eps_grid_from(cfg.eps_min, cfg.eps_max, cfg.eps_count)?;
    let m = cfg.mass;
    let k = cfg.strength;
    let pot = cfg.potential;
    let v_of = move |eps: f64, r: f64| match pot {
        CentralPotential::Free => 0.0,
        CentralPotential::Softened => -k / (r * r + eps * eps).sqrt(),
    };
    let dv_of = move |eps: f64, r: f64| match pot {
        CentralPotential::Free => 0.0,
        CentralPotential::Softened => k * r / (r * r + eps * eps).powf(1.5),
    };

    let tgrid = SpatialGrid::new(0.0, cfg.t_end, cfg.n_out)?;
    let t_out: Vec<f64> = tgrid.nodes().skip(1).collect();
    let eps_values = grid.values().to_vec();
    let runs = par::try_map_indexed(grid.len(), |i| {
        let eps = eps_values[i];
        let om0 = if cfg.circular {
            // m om^2 r0 = V'(r0), the per-epsilon circular balance
            (dv_of(eps, cfg.r0) / (m * cfg.r0)).sqrt()
        } else {
            cfg.om0
        };
        let rhs = move |_t: f64, y: &[f64], dy: &mut [f64]| {
            let (r, vr, om) = (y[0], y[2], y[3]);
            dy[0] = vr;
            dy[1] = om;
            dy[2] = r * om * om - dv_of(eps, r) / m;
            dy[3] = -2.0 * vr * om / r;
        };
        let opts = OdeOptions { rtol: cfg.rtol, atol: cfg.rtol, eps, ..Default::default() };
        let states = integrate(&rhs, 0.0, &[cfg.r0, cfg.phi0, cfg.vr0, om0], &t_out, &opts)?;
        let mut rows = vec![vec![cfg.r0], vec![cfg.phi0], vec![cfg.vr0], vec![om0]];
        for (s, &t) in states.iter().zip(&t_out) {
            if s[0] <= 0.0 {
                return Err(ColvarError::TrajectoryEscaped { eps, t });
            }
            for c in 0..4 {
                rows[c].push(s[c]);
            }
        }
        Ok(rows)
    })?;
    let net_of = |c: usize| -> Result<GridNet> {
        let rows: Vec<Vec<f64>> = runs.iter().map(|r| r[c].clone()).collect();
        traj_net(&grid, &tgrid, &rows)
    };
    let r_net = net_of(0)?;
    let phi_net = net_of(1)?;
    let vr_net = net_of(2)?;
    let om_net = net_of(3)?;

    // L = m/2 (r'^2 + r^2 phi'^2) - V(r) with u = (r, phi)
    let lagr = Lagrangian::new("central-field", 1, 2, move |eps, j: &JetPoint| {
        0.5 * m * (j.du[0] * j.du[0] + j.u[0] * j.u[0] * j.du[1] * j.du[1]) - v_of(eps, j.u[0])
    })?;
    let rotation = VectorField::component_translation(2, 1);
    let ang = noether_current(&lagr, &rotation)?;
    let energy = noether_current(&lagr, &VectorField::time_translation(2))?;
    let pos = [r_net.clone(), phi_net];
    let vel = [vr_net, om_net];
    let ang_drift = conservation_drift(&ang, &pos, &vel)?;
    let energy_drift = conservation_drift(&energy, &pos, &vel)?;
    let ang_ok = ang_drift.per_eps.iter().all(|&d| d <= cfg.drift_tol);
    let energy_ok = energy_drift.per_eps.iter().all(|&d| d <= cfg.drift_tol);

    // divergence identity for the rotation field on random jets
    let jets = sample_jets(2, cfg.n_jets, JET_SEED);
    let identity = noether_identity_check(&lagr, &rotation, &jets, &grid)?;

    let mut checks = vec![
        Check::new(
            "angular_momentum_drift",
            ang_ok,
            json!({ "per_eps": ang_drift.per_eps, "tol": cfg.drift_tol, "eps": grid.values() }),
        ),
        Check::new(
            "energy_drift",
            energy_ok,
            json!({ "per_eps": energy_drift.per_eps, "tol": cfg.drift_tol, "eps": grid.values() }),
        ),
        Check::new(
            "noether_identity_on_jets",
            identity.pass,
            json!({ "worst": identity.worst, "tol": TOL_IDENTITY, "n_jets": cfg.n_jets,
                    "eps": grid.values() }),
        ),
    ];
    match cfg.potential {
        CentralPotential::Free => {
            // straight line in the plane, rendered in polar coordinates
            let (cx, sx) = (cfg.phi0.cos(), cfg.phi0.sin());
            let (px, py) = (cfg.r0 * cx, cfg.r0 * sx);
            let (wx, wy) = (
                cfg.vr0 * cx - cfg.r0 * cfg.om0 * sx,
                cfg.vr0 * sx + cfg.r0 * cfg.om0 * cx,
            );
            let mut worst: f64 = 0.0;
            for s in r_net.slices() {
                for (t, &r) in s.spatial.nodes().zip(&s.values) {
                    let want = ((px + wx * t).powi(2) + (py + wy * t).powi(2)).sqrt();
                    worst = worst.max((r - want).abs());
                }
            }
            checks.push(Check::new(
                "free_motion_closed_form",
                worst <= 1e-8,
                json!({ "worst": worst, "tol": 1e-8, "eps": grid.values() }),
            ));
        }
        CentralPotential::Softened => {
            if cfg.circular {
                let mut worst: f64 = 0.0;
                for s in r_net.slices() {
                    for &r in &s.values {
                        worst = worst.max((r - cfg.r0).abs());
                    }
                }
                checks.push(Check::new(
                    "circular_orbit_radius_constant",
                    worst <= 1e-6,
                    json!({ "worst": worst, "tol": 1e-6, "eps": grid.values() }),
                ));
            }
        }
    }
    Ok(ScenarioResult {
        name: "central_field".into(),
        params: serde_json::to_value(cfg).unwrap(),
        checks,
        csv: vec![net_csv("central_field_radius", &r_net)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_particle_default_reflects() {
        let r = delta_particle(&DeltaParticleConfig::default()).unwrap();
        for c in &r.checks {
            assert!(c.pass, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn delta_particle_no_impact_keeps_ray() {
        // moving away from the barrier: the shadow is the free ray and the
        // distance to it stays at solver tolerance
        let cfg = DeltaParticleConfig { x0: 0.5, y0: 1.0, ..Default::default() };
        let r = delta_particle(&cfg).unwrap();
        for c in &r.checks {
            assert!(c.pass, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn central_field_circular_orbit() {
        let r = central_field(&CentralFieldConfig::default()).unwrap();
        for c in &r.checks {
            assert!(c.pass, "{}: {}", c.name, c.detail);
        }
        assert!(r.pass());
    }

    #[test]
    fn central_field_free_motion() {
        let cfg = CentralFieldConfig {
            potential: CentralPotential::Free,
            circular: false,
            t_end: 2.0,
            ..Default::default()
        };
        let r = central_field(&cfg).unwrap();
        for c in &r.checks {
            assert!(c.pass, "{}: {}", c.name, c.detail);
        }
    }
}
