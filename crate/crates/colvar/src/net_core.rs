//! Epsilon-indexed nets: the finite sampling of the regularization index
//! set (0, 1], generalized numbers/vectors/matrices, grid functions and
//! generalized points. All asymptotic statements elsewhere in the crate
//! are relative to the chosen [`EpsGrid`]: a finite grid can always miss
//! subsequence behavior concentrated off-grid.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{ColvarError, Result};
use crate::numerics::cubic_interp;
use crate::par;

/// Global cap on spatial nodes per epsilon slice.
pub const NODE_CAP: usize = 2_000_000;

/// Formats a float with 17 significant digits, enough to round-trip f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Spacing {
    Geometric,
    Explicit,
}

/// The finite, strictly decreasing set of regularization parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsGrid {
    values: Vec<f64>,
    spacing: Spacing,
}

impl EpsGrid {
    /// Geometric grid from `e_max` down to `e_min` with `count` entries.
    pub fn geometric(e_min: f64, e_max: f64, count: usize) -> Result<Self> {
        if !(e_min > 0.0 && e_max > e_min && e_max <= 1.0) {
            return Err(ColvarError::InvalidEpsGrid(format!(
                "need 0 < e_min < e_max <= 1, got e_min = {e_min}, e_max = {e_max}"
            )));
        }
        if count < 4 {
            return Err(ColvarError::InvalidEpsGrid(format!(
                "need at least 4 entries, got {count}"
            )));
        }
        let ratio = (e_min / e_max).powf(1.0 / (count - 1) as f64);
        let values: Vec<f64> = (0..count).map(|k| e_max * ratio.powi(k as i32)).collect();
        Ok(EpsGrid { values, spacing: Spacing::Geometric })
    }

    /// Explicit grid; values must lie in (0, 1], strictly decreasing,
    /// with at least 4 entries spanning at least two decades.
    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        if values.len() < 4 {
            return Err(ColvarError::InvalidEpsGrid("need at least 4 entries".into()));
        }
        for w in values.windows(2) {
            if !(w[1] < w[0]) {
                return Err(ColvarError::InvalidEpsGrid("not strictly decreasing".into()));
            }
        }
        let first = values[0];
        let last = *values.last().unwrap();
        if !(last > 0.0 && first <= 1.0) {
            return Err(ColvarError::InvalidEpsGrid("values must lie in (0, 1]".into()));
        }
        if first / last < 100.0 {
            return Err(ColvarError::InvalidEpsGrid(
                "grid must span at least two decades".into(),
            ));
        }
        Ok(EpsGrid { values, spacing: Spacing::Explicit })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    /// The smallest ceil(len/2) epsilon values, i.e. the asymptotic tail.
    pub fn tail_start(&self) -> usize {
        self.values.len() - self.values.len().div_ceil(2)
    }

    pub fn smallest(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

/// Spec-facing constructor for the epsilon grid.
pub fn make_eps_grid(e_min: f64, e_max: f64, count: usize) -> Result<EpsGrid> {
    EpsGrid::geometric(e_min, e_max, count)
}

/// A sampled representative of a generalized number.
#[derive(Debug, Clone, PartialEq)]
pub struct GenNumber {
    grid: Arc<EpsGrid>,
    samples: Vec<f64>,
}

impl GenNumber {
    pub fn from_samples(grid: Arc<EpsGrid>, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(ColvarError::GridMismatch);
        }
        for (&e, &s) in grid.values().iter().zip(&samples) {
            if !s.is_finite() {
                return Err(ColvarError::NonFiniteSample { eps: e, context: "GenNumber sample".into() });
            }
        }
        Ok(GenNumber { grid, samples })
    }

    /// Samples `rule` at every grid epsilon.
    pub fn from_rule<F: Fn(f64) -> f64>(grid: Arc<EpsGrid>, rule: F) -> Result<Self> {
        let samples: Vec<f64> = grid.values().iter().map(|&e| rule(e)).collect();
        Self::from_samples(grid, samples)
    }

    /// Embedding of a classical real as a constant net.
    pub fn constant(grid: Arc<EpsGrid>, value: f64) -> Result<Self> {
        Self::from_rule(grid, |_| value)
    }

    pub fn grid(&self) -> &Arc<EpsGrid> {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn binop(&self, other: &GenNumber, op: ArithOp) -> Result<GenNumber> {
        if self.grid != other.grid {
            return Err(ColvarError::GridMismatch);
        }
        let mut samples = Vec::with_capacity(self.samples.len());
        for (i, (&a, &b)) in self.samples.iter().zip(&other.samples).enumerate() {
            let eps = self.grid.values()[i];
            let v = match op {
                ArithOp::Add => a + b,
                ArithOp::Sub => a - b,
                ArithOp::Mul => a * b,
                ArithOp::Div => {
                    if b == 0.0 {
                        return Err(ColvarError::DivisionByZero(eps));
                    }
                    a / b
                }
            };
            if !v.is_finite() {
                return Err(ColvarError::NonFiniteSample { eps, context: "arith result".into() });
            }
            samples.push(v);
        }
        GenNumber::from_samples(self.grid.clone(), samples)
    }

    pub fn neg(&self) -> GenNumber {
        GenNumber {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|v| -v).collect(),
        }
    }

    pub fn abs(&self) -> GenNumber {
        GenNumber {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|v| v.abs()).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> GenNumber {
        GenNumber {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|v| c * v).collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,value\n");
        for (&e, &v) in self.grid.values().iter().zip(&self.samples) {
            let _ = writeln!(out, "{},{}", fmt_f64(e), fmt_f64(v));
        }
        out
    }

    pub fn summary(&self, provenance: &str) -> NetSummary {
        NetSummary {
            grid: self.grid.values().to_vec(),
            dims: vec![1],
            provenance: provenance.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

macro_rules! impl_panicking_op {
    ($trait:ident, $method:ident, $op:expr) => {
        impl std::ops::$trait for &GenNumber {
            type Output = GenNumber;
            fn $method(self, rhs: &GenNumber) -> GenNumber {
                self.binop(rhs, $op).expect("GenNumber grids must match")
            }
        }
    };
}
impl_panicking_op!(Add, add, ArithOp::Add);
impl_panicking_op!(Sub, sub, ArithOp::Sub);
impl_panicking_op!(Mul, mul, ArithOp::Mul);

/// Interleaved zero-divisor pair: alpha is 1 on even grid indices and 0 on
/// odd ones, omega the complement, so alpha * omega = 0 exactly while
/// neither classifies negligible.
pub fn make_zero_divisor_pair(grid: &Arc<EpsGrid>) -> (GenNumber, GenNumber) {
    let alpha: Vec<f64> = (0..grid.len()).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect();
    let omega: Vec<f64> = alpha.iter().map(|a| 1.0 - a).collect();
    (
        GenNumber::from_samples(grid.clone(), alpha).unwrap(),
        GenNumber::from_samples(grid.clone(), omega).unwrap(),
    )
}

/// Per-epsilon real vector family.
#[derive(Debug, Clone)]
pub struct GenVector {
    grid: Arc<EpsGrid>,
    entries: Vec<Vec<f64>>,
}

impl GenVector {
    pub fn from_entries(grid: Arc<EpsGrid>, entries: Vec<Vec<f64>>) -> Result<Self> {
        if entries.len() != grid.len() {
            return Err(ColvarError::GridMismatch);
        }
        let dim = entries[0].len();
        for (i, v) in entries.iter().enumerate() {
            if v.len() != dim {
                return Err(ColvarError::InvalidEpsGrid("vector dimension varies across epsilon".into()));
            }
            for &x in v {
                if !x.is_finite() {
                    return Err(ColvarError::NonFiniteSample {
                        eps: grid.values()[i],
                        context: "GenVector entry".into(),
                    });
                }
            }
        }
        Ok(GenVector { grid, entries })
    }

    pub fn dim(&self) -> usize {
        self.entries[0].len()
    }

    pub fn grid(&self) -> &Arc<EpsGrid> {
        &self.grid
    }

    pub fn entries(&self) -> &[Vec<f64>] {
        &self.entries
    }

    /// The family of the `k`-th component as a GenNumber.
    pub fn component(&self, k: usize) -> GenNumber {
        GenNumber::from_samples(self.grid.clone(), self.entries.iter().map(|v| v[k]).collect())
            .unwrap()
    }
}

/// Per-epsilon symmetric matrix family (row-major p x p).
#[derive(Debug, Clone)]
pub struct GenMatrix {
    grid: Arc<EpsGrid>,
    dim: usize,
    entries: Vec<Vec<f64>>,
}

impl GenMatrix {
    pub fn from_entries(grid: Arc<EpsGrid>, dim: usize, entries: Vec<Vec<f64>>) -> Result<Self> {
        if entries.len() != grid.len() {
            return Err(ColvarError::GridMismatch);
        }
        for (i, m) in entries.iter().enumerate() {
            let eps = grid.values()[i];
            if m.len() != dim * dim {
                return Err(ColvarError::InvalidEpsGrid("matrix dimension varies across epsilon".into()));
            }
            let scale: f64 = m.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-30);
            for r in 0..dim {
                for c in (r + 1)..dim {
                    if (m[r * dim + c] - m[c * dim + r]).abs() > 1e-12 * scale {
                        return Err(ColvarError::InvalidEpsGrid(format!(
                            "matrix not symmetric at epsilon = {eps}"
                        )));
                    }
                }
            }
            for &x in m {
                if !x.is_finite() {
                    return Err(ColvarError::NonFiniteSample { eps, context: "GenMatrix entry".into() });
                }
            }
        }
        Ok(GenMatrix { grid, dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> &Arc<EpsGrid> {
        &self.grid
    }

    pub fn slice(&self, i: usize) -> &[f64] {
        &self.entries[i]
    }
}

/// Uniform spatial discretization of a closed interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpatialGrid {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl SpatialGrid {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(b > a) || n < 2 {
            return Err(ColvarError::TooCoarse(format!("degenerate grid [{a}, {b}] with {n} nodes")));
        }
        Ok(SpatialGrid { a, b, n })
    }

    pub fn h(&self) -> f64 {
        (self.b - self.a) / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n - 1 {
            self.b
        } else {
            self.a + i as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.node(i))
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.a - 1e-12 && x <= self.b + 1e-12
    }

    /// Grid whose step resolves features of width `eps`: h <= eps / 16,
    /// never coarser than `base_n` nodes, capped at [`NODE_CAP`].
    pub fn refined_for(a: f64, b: f64, base_n: usize, eps: f64) -> Result<Self> {
        Self::refined_with(a, b, base_n, eps, 16.0)
    }

    /// Like [`Self::refined_for`] with a custom resolution divisor
    /// (h <= eps / divisor).
    pub fn refined_with(a: f64, b: f64, base_n: usize, eps: f64, divisor: f64) -> Result<Self> {
        let span = b - a;
        let needed = ((span / (eps / divisor)).ceil() as usize + 1).max(base_n);
        if needed > NODE_CAP {
            return Err(ColvarError::NodeCapExceeded { needed, cap: NODE_CAP, eps });
        }
        SpatialGrid::new(a, b, needed)
    }
}

/// A sampled representative of a generalized function on an interval:
/// one grid function per epsilon, the spatial resolution may refine as
/// epsilon shrinks.
#[derive(Debug, Clone)]
pub struct GridNet {
    grid: Arc<EpsGrid>,
    slices: Vec<GridSlice>,
}

#[derive(Debug, Clone)]
pub struct GridSlice {
    pub spatial: SpatialGrid,
    pub values: Vec<f64>,
}

impl GridNet {
    pub fn from_slices(grid: Arc<EpsGrid>, slices: Vec<GridSlice>) -> Result<Self> {
        if slices.len() != grid.len() {
            return Err(ColvarError::GridMismatch);
        }
        for (i, s) in slices.iter().enumerate() {
            let eps = grid.values()[i];
            if s.values.len() != s.spatial.n {
                return Err(ColvarError::SpatialMismatch(eps));
            }
            if s.values.iter().any(|v| !v.is_finite()) {
                return Err(ColvarError::NonFiniteSample { eps, context: "GridNet value".into() });
            }
        }
        Ok(GridNet { grid, slices })
    }

    /// Samples `f(eps, x)` on a fixed spatial grid shared by all epsilon.
    pub fn from_fn<F>(grid: Arc<EpsGrid>, spatial: SpatialGrid, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Sync + Send,
    {
        let eps_values = grid.values().to_vec();
        let slices = par::try_map_indexed(grid.len(), |i| {
            let eps = eps_values[i];
            let values: Vec<f64> = spatial.nodes().map(|x| f(eps, x)).collect();
            if let Some(j) = values.iter().position(|v| !v.is_finite()) {
                return Err(ColvarError::NonFiniteSample {
                    eps,
                    context: format!("GridNet value at x = {}", spatial.node(j)),
                });
            }
            Ok(GridSlice { spatial: spatial.clone(), values })
        })?;
        Ok(GridNet { grid, slices })
    }

    /// Samples `f(eps, x)` on per-epsilon grids refined to resolve
    /// eps-width features (h <= eps/16).
    pub fn from_fn_refined<F>(grid: Arc<EpsGrid>, a: f64, b: f64, base_n: usize, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Sync + Send,
    {
        let eps_values = grid.values().to_vec();
        let slices = par::try_map_indexed(grid.len(), |i| {
            let eps = eps_values[i];
            let spatial = SpatialGrid::refined_for(a, b, base_n, eps)?;
            let values: Vec<f64> = spatial.nodes().map(|x| f(eps, x)).collect();
            if values.iter().any(|v| !v.is_finite()) {
                return Err(ColvarError::NonFiniteSample { eps, context: "GridNet value".into() });
            }
            Ok(GridSlice { spatial, values })
        })?;
        Ok(GridNet { grid, slices })
    }

    pub fn grid(&self) -> &Arc<EpsGrid> {
        &self.grid
    }

    pub fn slices(&self) -> &[GridSlice] {
        &self.slices
    }

    pub fn slice(&self, i: usize) -> &GridSlice {
        &self.slices[i]
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.slices[0].spatial.a, self.slices[0].spatial.b)
    }

    /// Componentwise arithmetic; grids and per-epsilon spatial grids must
    /// agree.
    pub fn binop(&self, other: &GridNet, op: ArithOp) -> Result<GridNet> {
        if self.grid != other.grid {
            return Err(ColvarError::GridMismatch);
        }
        let mut slices = Vec::with_capacity(self.slices.len());
        for (i, (s, o)) in self.slices.iter().zip(&other.slices).enumerate() {
            let eps = self.grid.values()[i];
            if s.spatial != o.spatial {
                return Err(ColvarError::SpatialMismatch(eps));
            }
            let mut values = Vec::with_capacity(s.values.len());
            for (&a, &b) in s.values.iter().zip(&o.values) {
                let v = match op {
                    ArithOp::Add => a + b,
                    ArithOp::Sub => a - b,
                    ArithOp::Mul => a * b,
                    ArithOp::Div => {
                        if b == 0.0 {
                            return Err(ColvarError::DivisionByZero(eps));
                        }
                        a / b
                    }
                };
                if !v.is_finite() {
                    return Err(ColvarError::NonFiniteSample { eps, context: "arith result".into() });
                }
                values.push(v);
            }
            slices.push(GridSlice { spatial: s.spatial.clone(), values });
        }
        GridNet::from_slices(self.grid.clone(), slices)
    }

    /// Applies `f(eps, x, value)` per sample.
    pub fn map<F: Fn(f64, f64, f64) -> f64>(&self, f: F) -> Result<GridNet> {
        let mut slices = Vec::with_capacity(self.slices.len());
        for (i, s) in self.slices.iter().enumerate() {
            let eps = self.grid.values()[i];
            let values: Vec<f64> =
                s.spatial.nodes().zip(&s.values).map(|(x, &v)| f(eps, x, v)).collect();
            if values.iter().any(|v| !v.is_finite()) {
                return Err(ColvarError::NonFiniteSample { eps, context: "map result".into() });
            }
            slices.push(GridSlice { spatial: s.spatial.clone(), values });
        }
        GridNet::from_slices(self.grid.clone(), slices)
    }

    /// Sup of |u| over a closed subinterval, per epsilon.
    pub fn sup_abs(&self, sub: Option<(f64, f64)>) -> GenNumber {
        let samples: Vec<f64> = self
            .slices
            .iter()
            .map(|s| {
                s.spatial
                    .nodes()
                    .zip(&s.values)
                    .filter(|(x, _)| sub.map_or(true, |(a, b)| *x >= a - 1e-12 && *x <= b + 1e-12))
                    .map(|(_, &v)| v.abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        GenNumber::from_samples(self.grid.clone(), samples).unwrap()
    }

    /// Point evaluation at a generalized point by cubic interpolation.
    pub fn eval_at(&self, point: &GenPoint) -> Result<GenNumber> {
        if self.grid != point.grid {
            return Err(ColvarError::GridMismatch);
        }
        let mut samples = Vec::with_capacity(self.slices.len());
        for (i, s) in self.slices.iter().enumerate() {
            let eps = self.grid.values()[i];
            let x = point.coords[i];
            if !s.spatial.contains(x) {
                return Err(ColvarError::OutsideDomain { x, a: s.spatial.a, b: s.spatial.b, eps });
            }
            samples.push(cubic_interp(s.spatial.a, s.spatial.h(), &s.values, x));
        }
        GenNumber::from_samples(self.grid.clone(), samples)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,node_index,x,value\n");
        for (i, s) in self.slices.iter().enumerate() {
            let eps = self.grid.values()[i];
            for (j, (x, &v)) in s.spatial.nodes().zip(&s.values).enumerate() {
                let _ = writeln!(out, "{},{},{},{}", fmt_f64(eps), j, fmt_f64(x), fmt_f64(v));
            }
        }
        out
    }

    pub fn summary(&self, provenance: &str) -> NetSummary {
        NetSummary {
            grid: self.grid.values().to_vec(),
            dims: self.slices.iter().map(|s| s.spatial.n).collect(),
            provenance: provenance.to_string(),
        }
    }
}

/// JSON-facing description of a serialized net.
#[derive(Debug, Clone, Serialize)]
pub struct NetSummary {
    pub grid: Vec<f64>,
    pub dims: Vec<usize>,
    pub provenance: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PointKind {
    Classical,
    NearStandard { limit: f64 },
    General,
}

/// A generalized point of the 1-D domain: one coordinate per epsilon.
#[derive(Debug, Clone, Serialize)]
pub struct GenPoint {
    #[serde(skip)]
    grid: Arc<EpsGrid>,
    pub coords: Vec<f64>,
    pub kind: PointKind,
}

impl GenPoint {
    pub fn new(grid: Arc<EpsGrid>, coords: Vec<f64>, kind: PointKind) -> Result<Self> {
        if coords.len() != grid.len() {
            return Err(ColvarError::GridMismatch);
        }
        if let PointKind::NearStandard { limit } = kind {
            // Convergence is checked on the last two grid points: the
            // deviation from the declared limit must not grow by more
            // than 10% going to the smallest epsilon.
            let n = coords.len();
            let d_last = (coords[n - 1] - limit).abs();
            let d_prev = (coords[n - 2] - limit).abs();
            if d_last > 1.1 * d_prev + 1e-14 {
                return Err(ColvarError::Precondition(format!(
                    "near-standard point does not approach its limit {limit}: \
                     deviations {d_prev:.3e} -> {d_last:.3e}"
                )));
            }
        }
        Ok(GenPoint { grid, coords, kind })
    }

    pub fn classical(grid: Arc<EpsGrid>, x: f64) -> Self {
        let coords = vec![x; grid.len()];
        GenPoint { grid, coords, kind: PointKind::Classical }
    }

    /// Point with per-epsilon coordinates `rule(eps)`.
    pub fn from_rule<F: Fn(f64) -> f64>(grid: Arc<EpsGrid>, rule: F, kind: PointKind) -> Result<Self> {
        let coords: Vec<f64> = grid.values().iter().map(|&e| rule(e)).collect();
        GenPoint::new(grid, coords, kind)
    }

    pub fn grid(&self) -> &Arc<EpsGrid> {
        &self.grid
    }
}
