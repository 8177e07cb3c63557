//! The full verification suite as a library: every criterion returns a
//! named verdict with its numeric evidence, so the CLI `suite` subcommand
//! and the integration tests share one implementation. All randomness is
//! seeded, and per-epsilon work collects in grid order, so two runs with
//! the same seed serialize to byte-identical JSON.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::asymptotics::{self, lemma_x0_check, NetClass, Relation, M_MAX};
use crate::error::Result;
use crate::gen_opt::{
    check_critical, neighborhood_min_test, side_pit_family, staircase_dip_family,
    EpsFunctionFamily, MinProbeVerdict,
};
use crate::net_core::{make_zero_divisor_pair, ArithOp, EpsGrid, GenNumber, GridNet, SpatialGrid};
use crate::scenarios::{
    beam_with_joint, central_field, delta_particle, hard_rod, wave_delta_spring, weierstrass,
    BeamConfig, CentralFieldConfig, DeltaParticleConfig, HardRodConfig, ScenarioResult,
    WaveConfig, WeierstrassConfig,
};
use crate::variational::{
    boundary_cutoff, euler_residual, first_variation, fundamental_witness, lagrangian_library,
    negligible_within, Boundary, Functional, JetPoint, Lagrangian,
};
use crate::ColvarError;

pub const DEFAULT_SEED: u64 = 0xC01D;

#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Echo of the negligibility exponent bound; lowering it below the
    /// crate constant weakens the lemma criterion and is flagged.
    pub m_max: u32,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { seed: DEFAULT_SEED, m_max: M_MAX }
    }
}

#[derive(Debug, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub pass: bool,
    pub detail: Value,
    /// Wall time stays out of the JSON so reruns compare byte-identical.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub m_max: u32,
    pub warnings: Vec<String>,
    pub criteria: Vec<CriterionResult>,
    pub pass: bool,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("suite report is serializable")
    }
}

fn timed<F: FnOnce() -> Result<(bool, Value)>>(
    id: u32,
    name: &str,
    budget_s: f64,
    f: F,
) -> CriterionResult {
    let start = Instant::now();
    let outcome = f();
    let seconds = start.elapsed().as_secs_f64();
    let (mut pass, detail) = match outcome {
        Ok((p, d)) => (p, d),
        Err(e) => (false, json!({ "error": e.to_string() })),
    };
    if seconds > budget_s {
        pass = false;
    }
    CriterionResult { id, name: name.to_string(), pass, detail, seconds }
}

fn scenario_criterion(id: u32, budget_s: f64, run: impl FnOnce() -> Result<ScenarioResult>) -> CriterionResult {
    let start = Instant::now();
    let outcome = run();
    let seconds = start.elapsed().as_secs_f64();
    match outcome {
        Ok(r) => {
            let mut pass = r.pass();
            if seconds > budget_s {
                pass = false;
            }
            let detail = json!({
                "checks": r.checks.iter().map(|c| json!({
                    "name": c.name, "pass": c.pass, "detail": c.detail
                })).collect::<Vec<_>>()
            });
            CriterionResult { id, name: r.name, pass, detail, seconds }
        }
        Err(e) => CriterionResult {
            id,
            name: format!("scenario_{id}"),
            pass: false,
            detail: json!({ "error": e.to_string() }),
            seconds,
        },
    }
}

// criterion 1: slope recovery on random power laws, plus the canonical
// negligible net
fn classifier_power_laws(seed: u64) -> Result<(bool, Value)> {
    let grid = Arc::new(EpsGrid::geometric(1e-6, 1e-1, 12)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x01);
    let mut worst_slope_err: f64 = 0.0;
    let mut class_fails = Vec::new();
    for i in 0..50 {
        let s: f64 = rng.gen_range(-4.0..4.0);
        let c = 10f64.powf(rng.gen_range(-3.0..3.0));
        let net = GenNumber::from_rule(grid.clone(), |e| c * e.powf(s))?;
        let rep = asymptotics::classify(&net);
        worst_slope_err = worst_slope_err.max((rep.slope - s).abs());
        // minimal N with the classifier's own slope margin
        let expected = (-s - 0.1).ceil().max(0.0) as u32;
        if rep.class != NetClass::Moderate(expected) || (rep.slope - s).abs() > 0.1 {
            class_fails.push(json!({ "i": i, "s": s, "c": c, "got": rep.class }));
        }
    }
    let negligible = GenNumber::from_rule(grid, |e| (-1.0 / e).exp())?;
    let neg_ok = asymptotics::classify(&negligible).class == NetClass::Negligible;
    let pass = class_fails.is_empty() && neg_ok;
    Ok((pass, json!({
        "worst_slope_err": worst_slope_err,
        "failures": class_fails,
        "exp_neg_inv_negligible": neg_ok,
    })))
}

// criterion 2: the zero-detection lemma as an executable implication
fn lemma_implication(seed: u64, m_max: u32) -> Result<(bool, Value)> {
    let grid = Arc::new(EpsGrid::geometric(1e-3, 1e-1, 9)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x02);
    let mut implied = 0usize;
    let mut false_positives = 0usize;
    for _ in 0..100 {
        let s: f64 = rng.gen_range(-2.0..2.0);
        let cy = 10f64.powf(rng.gen_range(-2.0..2.0));
        let m0: f64 = rng.gen_range(11.0..14.0);
        let c2 = 10f64.powf(rng.gen_range(-3.0..0.0));
        let y = GenNumber::from_rule(grid.clone(), |e| cy * e.powf(s))?;
        // x is dominated by eps^m0 * y, so the bound holds for every m
        let x = GenNumber::from_rule(grid.clone(), |e| c2 * e.powf(m0) * cy * e.powf(s))?;
        if lemma_x0_check(&x, &y) {
            implied += 1;
        }
    }
    for _ in 0..100 {
        let s: f64 = rng.gen_range(-2.0..2.0);
        let c = 10f64.powf(rng.gen_range(-2.0..2.0));
        let sy: f64 = rng.gen_range(-2.0..2.0);
        let x = GenNumber::from_rule(grid.clone(), |e| c * e.powf(s))?;
        let y = GenNumber::from_rule(grid.clone(), |e| e.powf(sy))?;
        if lemma_x0_check(&x, &y) {
            false_positives += 1;
        }
    }
    Ok((implied == 100 && false_positives == 0, json!({
        "implied": implied,
        "false_positives": false_positives,
        "m_max": m_max,
    })))
}

// criterion 3: critical point with strictly positive curvature that is
// not a minimum, and the series family failing at a classical point
fn counterexamples() -> Result<(bool, Value)> {
    let grid = Arc::new(EpsGrid::geometric(1e-4, 1e-1, 9)?);

    let pit = side_pit_family(grid.clone());
    let rep = check_critical(&pit, &[0.0])?;
    let grad_negligible = rep.grad_report.class == NetClass::Negligible;
    let curvature = GenNumber::from_rule(grid.clone(), |e| pit.hessian(e, &[0.0])[0])?;
    let curvature_positive =
        asymptotics::is_strictly_positive(&curvature).relation == Relation::StrictlyPositive;
    let (pit_fails, pit_value) = match neighborhood_min_test(&pit, &[0.0], 1.0)? {
        MinProbeVerdict::FailsAt { values, .. } => {
            let worst = values.iter().cloned().fold(f64::INFINITY, f64::min);
            ((worst + 1.0).abs() <= 1e-9, worst)
        }
        MinProbeVerdict::IsMinimumOnProbes => (false, f64::NAN),
    };

    let stair = staircase_dip_family(grid);
    let stair_grad = check_critical(&stair, &[0.0])?.grad_report.class == NetClass::Negligible;
    let (stair_fails, stair_label, stair_value) =
        match neighborhood_min_test(&stair, &[0.0], 0.5)? {
            MinProbeVerdict::FailsAt { point, values } => {
                let worst = values.iter().cloned().fold(f64::INFINITY, f64::min);
                (point.label.contains("classical") && worst < 0.0, point.label, worst)
            }
            MinProbeVerdict::IsMinimumOnProbes => (false, "none".into(), f64::NAN),
        };

    let pass = grad_negligible && curvature_positive && pit_fails && stair_grad && stair_fails;
    Ok((pass, json!({
        "bump": { "grad_negligible": grad_negligible,
                  "curvature_strictly_positive": curvature_positive,
                  "witness_value": pit_value },
        "series": { "grad_negligible": stair_grad, "probe": stair_label,
                    "value": stair_value },
    })))
}

fn random_profile(rng: &mut ChaCha8Rng) -> impl Fn(f64) -> f64 + Send + Sync + Clone {
    let a: f64 = rng.gen_range(-1.0..1.0);
    let b: f64 = rng.gen_range(-1.0..1.0);
    let c: f64 = rng.gen_range(-1.0..1.0);
    let k = rng.gen_range(1..=3) as f64;
    move |x: f64| a + b * x + c * (k * std::f64::consts::PI * x).sin()
}

// criterion 4: the difference-quotient first variation agrees with the
// integral form on the whole Lagrangian library (the cross-check is
// built into first_variation at 1e-4 relative and errors on mismatch)
fn variation_cross_check(seed: u64) -> Result<(bool, Value)> {
    let grid = Arc::new(EpsGrid::geometric(1e-3, 1e-1, 6)?);
    let spatial = SpatialGrid::new(0.0, 1.0, 201)?;
    let cutoff = boundary_cutoff(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x04);
    let mut runs = 0usize;
    let mut failures = Vec::new();
    for l in lagrangian_library() {
        let q = l.q;
        let name = l.name.clone();
        let f = Functional::new(l, (0.0, 1.0), Boundary::Dirichlet)?;
        for _ in 0..20 {
            let mut u = Vec::with_capacity(q);
            let mut v = Vec::with_capacity(q);
            for _ in 0..q {
                let pu = random_profile(&mut rng);
                let pv = random_profile(&mut rng);
                let cut = cutoff.clone();
                u.push(GridNet::from_fn(grid.clone(), spatial.clone(), move |_, x| pu(x))?);
                v.push(GridNet::from_fn(grid.clone(), spatial.clone(), move |_, x| {
                    cut(x) * pv(x)
                })?);
            }
            runs += 1;
            if let Err(e) = first_variation(&f, &u, &v) {
                failures.push(json!({ "lagrangian": name, "error": e.to_string() }));
            }
        }
    }
    Ok((failures.is_empty(), json!({ "runs": runs, "tol_rel": 1e-4, "failures": failures })))
}

// criterion 5: the constructive witness pairs non-negligibly with every
// non-negligible net, with the expected decay exponent, and refuses
// negligible nets
fn witness_families(seed: u64) -> Result<(bool, Value)> {
    let grid = Arc::new(EpsGrid::geometric(1e-4, 1e-1, 9)?);
    let spatial = SpatialGrid::new(-1.0, 1.0, 201)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x05);
    let mut slope_fails = Vec::new();
    for i in 0..20 {
        let l: f64 = rng.gen_range(0.0..2.0);
        let a: f64 = rng.gen_range(-0.4..0.4);
        let b: f64 = rng.gen_range(-0.4..0.4);
        let u = GridNet::from_fn(grid.clone(), spatial.clone(), move |e, x| {
            e.powf(l) * (1.0 + a * (std::f64::consts::PI * x).sin() + b * x * x)
        })?;
        let w = fundamental_witness(&u)?;
        if w.report.class == NetClass::Negligible || (w.report.slope - l).abs() > 0.3 {
            slope_fails.push(json!({ "i": i, "l": l, "pairing_slope": w.report.slope }));
        }
    }
    let mut rejected = 0usize;
    for _ in 0..20 {
        let a: f64 = rng.gen_range(-1.0..1.0);
        let u = GridNet::from_fn(grid.clone(), spatial.clone(), move |e, x| {
            (-1.0 / e).exp() * (a + x)
        })?;
        if matches!(fundamental_witness(&u), Err(ColvarError::NegligibleNet)) {
            rejected += 1;
        }
    }
    Ok((slope_fails.is_empty() && rejected == 20, json!({
        "slope_tol": 0.3, "failures": slope_fails, "negligible_rejected": rejected,
    })))
}

// criterion 11: non-uniqueness over zero divisors; both stationary nets
// annihilate the residual against the coefficient, yet differ
// non-negligibly
fn zero_divisor_nonuniqueness() -> Result<(bool, Value)> {
    let grid = Arc::new(EpsGrid::geometric(1e-4, 1e-1, 9)?);
    let (alpha_net, omega_net) = make_zero_divisor_pair(&grid);
    let a_samples = alpha_net.samples().to_vec();
    let eps_list: Vec<f64> = grid.values().to_vec();
    let a_for = move |e: f64| {
        let i = eps_list.iter().position(|&v| v == e).unwrap();
        a_samples[i]
    };
    let spatial = SpatialGrid::new(-1.0, 1.0, 201)?;
    let template = GridNet::from_fn(grid.clone(), spatial, |_, _| 0.0)?;
    let alpha = {
        let a_for = a_for.clone();
        template.map(|e, _, _| a_for(e))?
    };
    let l = {
        let a_for = a_for.clone();
        Lagrangian::new("degenerate-coefficient", 1, 1, move |e, j: &JetPoint| {
            a_for(e) * (0.5 * j.du[0] * j.du[0] + j.u[0])
        })?
    };
    let f = Functional::new(l, (-1.0, 1.0), Boundary::Dirichlet)?;
    let u = template.map(|_, x, _| 0.5 * x * x - 0.5)?;
    let ubar = {
        let a_for = a_for.clone();
        template.map(move |e, x, _| a_for(e) * (0.5 * x * x - 0.5))?
    };
    let mut residual_ok = true;
    for w in [&u, &ubar] {
        let r = euler_residual(&f, &[w.clone()])?.remove(0);
        let scaled = alpha.binop(&r, ArithOp::Mul)?;
        residual_ok &= negligible_within(&scaled, |_, h| h * h);
    }
    let diff = u.binop(&ubar, ArithOp::Sub)?;
    let diff_class = asymptotics::classify(&diff.sup_abs(None)).class;
    let distinct = diff_class != NetClass::Negligible
        && omega_net.samples().iter().any(|&v| v == 1.0);
    Ok((residual_ok && distinct, json!({
        "both_residuals_negligible": residual_ok,
        "difference_class": diff_class,
    })))
}

// criterion 13 (in-process form): the two randomized criteria rerun with
// the same seed must serialize identically; the cross-process form runs
// the binary twice on the full suite
fn determinism_probe(seed: u64, m_max: u32) -> Result<(bool, Value)> {
    let once = serde_json::to_string(&(
        classifier_power_laws(seed)?,
        lemma_implication(seed, m_max)?,
    ))?;
    let twice = serde_json::to_string(&(
        classifier_power_laws(seed)?,
        lemma_implication(seed, m_max)?,
    ))?;
    Ok((once == twice, json!({ "bytes": once.len(), "identical": once == twice })))
}

// keeps the gen_opt family import exercised under --no-default-features
#[allow(dead_code)]
fn _family_type_holder(_: &EpsFunctionFamily) {}

pub fn run_suite(opts: &SuiteOptions) -> SuiteReport {
    let mut warnings = Vec::new();
    if opts.m_max != M_MAX {
        warnings.push(format!(
            "config drift: negligibility exponent bound m_max = {} differs from the \
             built-in {}; negligibility verdicts are weaker than the defaults",
            opts.m_max, M_MAX
        ));
    }
    let seed = opts.seed;
    let criteria = vec![
        timed(1, "classifier_power_laws", 5.0, || classifier_power_laws(seed)),
        timed(2, "lemma_zero_detection", 30.0, || lemma_implication(seed, opts.m_max)),
        timed(3, "counterexamples", 10.0, counterexamples),
        timed(4, "variation_cross_check", 30.0, || variation_cross_check(seed)),
        timed(5, "fundamental_witness", 30.0, || witness_families(seed)),
        scenario_criterion(6, 60.0, || delta_particle(&DeltaParticleConfig::default())),
        scenario_criterion(7, 60.0, || central_field(&CentralFieldConfig::default())),
        scenario_criterion(8, 60.0, || beam_with_joint(&BeamConfig::default())),
        scenario_criterion(9, 60.0, || weierstrass(&WeierstrassConfig::default())),
        scenario_criterion(10, 60.0, || hard_rod(&HardRodConfig::default())),
        timed(11, "zero_divisor_nonuniqueness", 30.0, zero_divisor_nonuniqueness),
        scenario_criterion(12, 120.0, || wave_delta_spring(&WaveConfig::default())),
        timed(13, "determinism_probe", 60.0, || determinism_probe(seed, opts.m_max)),
    ];
    let pass = criteria.iter().all(|c| c.pass);
    SuiteReport { seed: opts.seed, m_max: opts.m_max, warnings, criteria, pass }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn randomized_criteria_pass() {
        for c in [
            timed(1, "classifier_power_laws", 5.0, || classifier_power_laws(DEFAULT_SEED)),
            timed(2, "lemma_zero_detection", 30.0, || lemma_implication(DEFAULT_SEED, M_MAX)),
            timed(3, "counterexamples", 10.0, counterexamples),
            timed(4, "variation_cross_check", 30.0, || variation_cross_check(DEFAULT_SEED)),
            timed(5, "fundamental_witness", 30.0, || witness_families(DEFAULT_SEED)),
            timed(11, "zero_divisor_nonuniqueness", 30.0, zero_divisor_nonuniqueness),
        ] {
            assert!(c.pass, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn determinism_probe_is_stable() {
        let (pass, detail) = determinism_probe(DEFAULT_SEED, M_MAX).unwrap();
        assert!(pass, "{detail}");
    }
}
