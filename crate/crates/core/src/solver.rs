//! Energy minimization by gradient descent with Barzilai–Borwein steps and
//! Armijo backtracking, plus continuation in `p`, `delta_reg` and `eps`.
//!
//! Relaxed fields are minimized in their two components under the
//! Ginzburg–Landau energy; constrained fields are minimized in their phases
//! under the wrapped-difference p-energy, so they stay on the circle.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::energy::{phase_energy, relaxed_energy, EnergyParams, Scratch, Stencil};
use crate::error::{Error, Result};
use crate::lattice::{snapshot, FieldKind, Grid2D, NodeRole, S1Field, MIN_MODULUS};
use crate::spectral::Preconditioner;

/// Dirichlet data on the boundary nodes of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTrace {
    pub nodes: Vec<usize>,
    pub values: Vec<[f64; 2]>,
}

impl BoundaryTrace {
    pub fn from_fn(grid: &Grid2D, g: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        let nodes = grid.boundary_nodes();
        let values = nodes.iter().map(|&n| g(grid.node_pos_of(n))).collect();
        Self { nodes, values }
    }

    /// `g = e^{i k theta}` around the origin.
    pub fn winding(grid: &Grid2D, k: i32) -> Self {
        Self::from_fn(grid, |x| {
            let t = k as f64 * x[1].atan2(x[0]);
            [t.cos(), t.sin()]
        })
    }

    pub fn from_field(grid: &Grid2D, u: &S1Field) -> Self {
        let nodes = grid.boundary_nodes();
        let values = nodes.iter().map(|&n| u.values()[n]).collect();
        Self { nodes, values }
    }

    pub fn apply(&self, u: &mut S1Field) {
        let vals = u.values_mut();
        for (&n, &v) in self.nodes.iter().zip(&self.values) {
            vals[n] = v;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryCondition {
    Dirichlet(BoundaryTrace),
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Stopping {
    pub max_iterations: usize,
    /// Stop once the gradient norm falls below `rel_tol` times its initial value.
    pub rel_tol: f64,
}

impl Default for Stopping {
    fn default() -> Self {
        Self { max_iterations: 20_000, rel_tol: 1e-4 }
    }
}

/// One continuation stage: fixed `p` and penalty scale, with an inner
/// schedule of decreasing degeneracy regularizers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stage {
    pub p: f64,
    pub eps: Option<f64>,
    pub delta_schedule: Vec<f64>,
}

impl Stage {
    /// `delta_reg` schedule `{1e-1, 1e-2, 1e-3}`.
    pub fn standard(p: f64, eps: Option<f64>) -> Self {
        Self { p, eps, delta_schedule: vec![1e-1, 1e-2, 1e-3] }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpointing {
    pub path: PathBuf,
    pub every: usize,
    pub config_hash: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveConfig {
    pub boundary: BoundaryCondition,
    pub stopping: Stopping,
    pub schedule: Vec<Stage>,
    /// Seed for the initial perturbation.
    pub seed: u64,
    /// Half-width of the uniform random phase kick applied to free nodes of
    /// the initial field; zero leaves it untouched.
    pub init_noise: f64,
    pub checkpoint: Option<Checkpointing>,
}

impl SolveConfig {
    pub fn new(boundary: BoundaryCondition) -> Self {
        Self { boundary, stopping: Stopping::default(), schedule: Vec::new(), seed: 0, init_noise: 0.0, checkpoint: None }
    }

    pub fn validate(&self, grid: &Grid2D) -> Result<()> {
        if self.stopping.max_iterations == 0 || !(self.stopping.rel_tol > 0.0) {
            return Err(Error::InvalidParams("stopping tolerances must be positive".into()));
        }
        if !(self.init_noise >= 0.0 && self.init_noise.is_finite()) {
            return Err(Error::InvalidParams(format!("init_noise = {}", self.init_noise)));
        }
        match &self.boundary {
            BoundaryCondition::Periodic if !grid.is_torus() => {
                return Err(Error::InvalidParams("periodic boundary needs a torus grid".into()))
            }
            BoundaryCondition::Dirichlet(_) if grid.is_torus() => {
                return Err(Error::InvalidParams("a torus has no boundary for Dirichlet data".into()))
            }
            BoundaryCondition::Dirichlet(tr) => {
                if tr.nodes.len() != tr.values.len() || tr.nodes.iter().any(|&n| grid.role(n) != NodeRole::Boundary) {
                    return Err(Error::InvalidParams("Dirichlet trace must cover boundary nodes only".into()));
                }
            }
            _ => {}
        }
        for w in self.schedule.windows(2) {
            if w[1].p < w[0].p {
                return Err(Error::InvalidParams("p schedule must be nondecreasing".into()));
            }
        }
        for s in &self.schedule {
            EnergyParams { p: s.p, eps_penalty: s.eps, delta_reg: 0.0, delta_n: EnergyParams::DEFAULT_DELTA_N }
                .validate()?;
            if s.delta_schedule.is_empty() {
                return Err(Error::InvalidParams("empty delta_reg schedule".into()));
            }
            if s.delta_schedule.windows(2).any(|w| w[1] > w[0]) || s.delta_schedule.iter().any(|d| *d < 0.0) {
                return Err(Error::InvalidParams("delta_reg schedule must be nonnegative and decreasing".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    /// Backtracking could not find a decrease; the energy is flat to rounding.
    Stalled,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageRecord {
    pub p: f64,
    pub delta_reg: f64,
    pub eps: Option<f64>,
    pub iterations: usize,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub grad_norm: f64,
    pub initial_grad_norm: f64,
    pub status: SolveStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub initial_energy: f64,
    pub final_energy: f64,
    pub initial_grad_norm: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub backtracks: usize,
    pub status: SolveStatus,
    /// Energy after every accepted step (first entry is the initial energy).
    #[serde(skip)]
    pub energy_history: Vec<f64>,
    pub stages: Vec<StageRecord>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.status != SolveStatus::MaxIterations
    }
}

struct Problem<'a> {
    stencil: &'a Stencil,
    params: EnergyParams,
    kind: FieldKind,
    free: Vec<bool>,
    scratch: Scratch,
}

impl Problem<'_> {
    fn eval(&mut self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let e = match self.kind {
            FieldKind::Relaxed => {
                let u = as_pairs(x);
                let g = as_pairs_mut(grad);
                relaxed_energy(self.stencil, u, &self.params, Some(g), &mut self.scratch)?
            }
            FieldKind::Constrained => phase_energy(self.stencil, x, &self.params, Some(grad), &mut self.scratch)?,
        };
        let width = self.width();
        for (n, f) in self.free.iter().enumerate() {
            if !f {
                for k in 0..width {
                    grad[n * width + k] = 0.0;
                }
            }
        }
        Ok(e)
    }

    fn width(&self) -> usize {
        match self.kind {
            FieldKind::Relaxed => 2,
            FieldKind::Constrained => 1,
        }
    }
}

fn as_pairs(x: &[f64]) -> &[[f64; 2]] {
    let (pairs, rest) = x.as_chunks::<2>();
    debug_assert!(rest.is_empty());
    pairs
}

fn as_pairs_mut(x: &mut [f64]) -> &mut [[f64; 2]] {
    let (pairs, rest) = x.as_chunks_mut::<2>();
    debug_assert!(rest.is_empty());
    pairs
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
/// Predicted decreases below this fraction of the energy are lost to rounding.
const ROUNDING_FLOOR: f64 = 1e-17;

/// Minimizes the energy selected by the field kind, starting from `u0`.
///
/// Dirichlet nodes are overwritten with the trace and never move. Running
/// out of iterations is not an error: the partial result is returned with a
/// `MaxIterations` status.
pub fn minimize(u0: &S1Field, grid: &Grid2D, params: &EnergyParams, config: &SolveConfig) -> Result<(S1Field, SolveReport)> {
    let stencil = Stencil::new(grid);
    let u0 = perturb(u0, grid, config);
    minimize_with(&stencil, &u0, grid, params, config, None, None).map(|(u, r, _)| (u, r))
}

/// Rotates every free node by a seeded uniform angle in `[-a, a]`, where `a`
/// is `config.init_noise`. Dirichlet nodes are left alone.
pub fn perturb(u: &S1Field, grid: &Grid2D, config: &SolveConfig) -> S1Field {
    if config.init_noise == 0.0 {
        return u.clone();
    }
    let a = config.init_noise;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let fixed = |n: usize| matches!(config.boundary, BoundaryCondition::Dirichlet(_)) && grid.role(n) == NodeRole::Boundary;
    let values = u
        .values()
        .iter()
        .enumerate()
        .map(|(n, v)| {
            // draw for every node so the stream does not depend on the mask
            let t: f64 = rng.gen_range(-a..=a);
            if !grid.node_active(n) || fixed(n) {
                *v
            } else {
                let (c, s) = (t.cos(), t.sin());
                [c * v[0] - s * v[1], s * v[0] + c * v[1]]
            }
        })
        .collect();
    S1Field::from_parts(values, u.kind())
}

fn minimize_with(
    stencil: &Stencil,
    u0: &S1Field,
    grid: &Grid2D,
    params: &EnergyParams,
    config: &SolveConfig,
    stage_index: Option<usize>,
    reference_grad: Option<f64>,
) -> Result<(S1Field, SolveReport, f64)> {
    let start = Instant::now();
    params.validate()?;
    config.validate(grid)?;
    u0.check_grid(grid)?;
    let mut u = u0.clone();
    let mut free: Vec<bool> = (0..grid.num_nodes()).map(|n| grid.node_active(n)).collect();
    if let BoundaryCondition::Dirichlet(trace) = &config.boundary {
        trace.apply(&mut u);
        for &n in &trace.nodes {
            free[n] = false;
        }
    }
    let kind = u.kind();
    let mut x: Vec<f64> = match kind {
        FieldKind::Relaxed => u.values().iter().flat_map(|v| [v[0], v[1]]).collect(),
        FieldKind::Constrained => u.values().iter().map(|v| v[1].atan2(v[0])).collect(),
    };
    let mut prob = Problem { stencil, params: *params, kind, free, scratch: Scratch::default() };

    let width = prob.width();
    let mut precond = Preconditioner::new(grid.nx(), grid.ny(), grid.h());
    let mut grad = vec![0.0; x.len()];
    let mut energy = prob.eval(&x, &mut grad)?;
    if energy.is_nan() {
        return Err(Error::Divergence { iteration: 0 });
    }
    let initial_energy = energy;
    let g0 = dot(&grad, &grad).sqrt();
    let mut gnorm = g0;
    let target = config.stopping.rel_tol * reference_grad.unwrap_or(g0);
    let mut history = vec![energy];
    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;
    let mut backtracks = 0;

    // descent direction -P g, with P the preconditioner restricted to free nodes
    let mut pg = vec![0.0; x.len()];
    let mut apply_p = |g: &[f64], out: &mut [f64], free: &[bool]| {
        precond.apply(g, width, out);
        for (n, f) in free.iter().enumerate() {
            if !f {
                out[n * width..(n + 1) * width].iter_mut().for_each(|v| *v = 0.0);
            }
        }
    };
    apply_p(&grad, &mut pg, &prob.free);
    let pmax = pg.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let mut alpha = if pmax > 0.0 { 1e-2 / pmax } else { 1.0 };
    let mut x_new = vec![0.0; x.len()];
    let mut g_new = vec![0.0; x.len()];
    let mut pg_new = vec![0.0; x.len()];

    if g0 == 0.0 {
        status = SolveStatus::Converged;
    }
    while status == SolveStatus::MaxIterations && iterations < config.stopping.max_iterations {
        if gnorm <= target {
            status = SolveStatus::Converged;
            break;
        }
        let gpg = dot(&grad, &pg);
        let mut accepted = false;
        let mut e_new = energy;
        for _ in 0..MAX_BACKTRACKS {
            for ((xn, xo), d) in x_new.iter_mut().zip(&x).zip(&pg) {
                *xn = xo - alpha * d;
            }
            e_new = prob.eval(&x_new, &mut g_new)?;
            if e_new.is_nan() {
                return Err(Error::Divergence { iteration: iterations });
            }
            if e_new <= energy - ARMIJO_C * alpha * gpg {
                accepted = true;
                break;
            }
            if alpha * gpg < ROUNDING_FLOOR * energy.abs() {
                break;
            }
            // minimizer of the quadratic through E(0), E'(0) = -g.Pg and E(alpha)
            let curv = e_new - energy + alpha * gpg;
            let interp = if curv > 0.0 && curv.is_finite() { 0.5 * alpha * alpha * gpg / curv } else { 0.1 * alpha };
            alpha = interp.clamp(0.1 * alpha, 0.5 * alpha);
            backtracks += 1;
        }
        if !accepted {
            status = SolveStatus::Stalled;
            break;
        }
        debug_assert!(e_new <= energy);
        apply_p(&g_new, &mut pg_new, &prob.free);
        // BB steps in the preconditioned metric: s = -alpha Pg, y = g_new - g
        let mut sy = 0.0;
        let mut ypy = 0.0;
        for k in 0..x.len() {
            let y = g_new[k] - grad[k];
            sy -= alpha * pg[k] * y;
            ypy += y * (pg_new[k] - pg[k]);
        }
        let sps = alpha * alpha * gpg;
        iterations += 1;
        alpha = if sy > 0.0 && ypy > 0.0 {
            if iterations % 2 == 1 {
                sps / sy
            } else {
                sy / ypy
            }
        } else {
            alpha * 4.0
        };
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut grad, &mut g_new);
        std::mem::swap(&mut pg, &mut pg_new);
        energy = e_new;
        gnorm = dot(&grad, &grad).sqrt();
        history.push(energy);

        if let Some(ck) = &config.checkpoint {
            if ck.every > 0 && iterations % ck.every == 0 {
                let snap = field_from(&x, kind, &u);
                Checkpoint::save(&ck.path, &ck.config_hash, stage_index.unwrap_or(0), iterations, grid, &snap)?;
            }
        }
    }
    if status == SolveStatus::MaxIterations && gnorm <= target {
        status = SolveStatus::Converged;
    }

    let out = field_from(&x, kind, &u);
    let record = StageRecord {
        p: params.p,
        delta_reg: params.delta_reg,
        eps: params.eps_penalty,
        iterations,
        initial_energy,
        final_energy: energy,
        grad_norm: gnorm,
        initial_grad_norm: g0,
        status,
    };
    let report = SolveReport {
        initial_energy,
        final_energy: energy,
        initial_grad_norm: g0,
        grad_norm: gnorm,
        iterations,
        backtracks,
        status,
        energy_history: history,
        stages: vec![record],
        wall_time: start.elapsed(),
    };
    Ok((out, report, reference_grad.unwrap_or(g0)))
}

fn field_from(x: &[f64], kind: FieldKind, template: &S1Field) -> S1Field {
    let mut values = template.values().to_vec();
    match kind {
        FieldKind::Relaxed => {
            for (v, p) in values.iter_mut().zip(as_pairs(x)) {
                *v = *p;
            }
        }
        FieldKind::Constrained => {
            for (n, (v, t)) in values.iter_mut().zip(x).enumerate() {
                // keep bit-exact boundary values; phases round-trip through atan2 otherwise
                if template.values()[n][1].atan2(template.values()[n][0]) != *t {
                    *v = [t.cos(), t.sin()];
                }
            }
        }
    }
    S1Field::from_parts(values, kind)
}

#[derive(Clone, Debug)]
pub struct StageResult {
    pub p: f64,
    pub field: S1Field,
    pub report: SolveReport,
}

/// Runs the stages of `config.schedule` in order, warm-starting each from the
/// previous output. Each stage walks its `delta_reg` schedule; the stage
/// report lists every sub-stage. Gradient tolerances are relative to the
/// gradient norm at the start of the sweep, so warm-started sub-stages are
/// not asked to reduce an already small gradient further.
pub fn continuation_sweep(u0: &S1Field, grid: &Grid2D, config: &SolveConfig) -> Result<Vec<StageResult>> {
    continuation_sweep_from(u0, grid, config, 0)
}

/// Like [`continuation_sweep`], but starts at stage `first` (for resuming).
pub fn continuation_sweep_from(u0: &S1Field, grid: &Grid2D, config: &SolveConfig, first: usize) -> Result<Vec<StageResult>> {
    if config.schedule.is_empty() {
        return Err(Error::InvalidParams("empty continuation schedule".into()));
    }
    config.validate(grid)?;
    let stencil = Stencil::new(grid);
    let mut current = if first == 0 { perturb(u0, grid, config) } else { u0.clone() };
    let mut out = Vec::new();
    let mut reference = None;
    for (idx, stage) in config.schedule.iter().enumerate().skip(first) {
        let start = Instant::now();
        let mut records = Vec::new();
        let mut last: Option<SolveReport> = None;
        let mut history = Vec::new();
        let mut total_iter = 0;
        let mut total_bt = 0;
        for &delta in &stage.delta_schedule {
            let params = EnergyParams {
                p: stage.p,
                eps_penalty: stage.eps,
                delta_reg: delta,
                delta_n: EnergyParams::DEFAULT_DELTA_N,
            };
            let (next, rep, g_ref) = minimize_with(&stencil, &current, grid, &params, config, Some(idx), reference)
                .map_err(|e| Error::Stage { stage: idx, source: Box::new(e) })?;
            reference = Some(g_ref);
            log::info!(
                "stage {idx} p={} delta={delta:e}: {} iterations, E={:.6}, |g|/|g0|={:.2e}, {:?}",
                stage.p,
                rep.iterations,
                rep.final_energy,
                rep.grad_norm / rep.initial_grad_norm.max(f64::MIN_POSITIVE),
                rep.status
            );
            current = next;
            records.extend(rep.stages.iter().cloned());
            history.extend_from_slice(&rep.energy_history);
            total_iter += rep.iterations;
            total_bt += rep.backtracks;
            last = Some(rep);
        }
        let last = last.expect("nonempty delta schedule");
        let first_rec = &records[0];
        let status = if records.iter().all(|r| r.status != SolveStatus::MaxIterations) {
            last.status
        } else {
            SolveStatus::MaxIterations
        };
        let report = SolveReport {
            initial_energy: first_rec.initial_energy,
            final_energy: last.final_energy,
            initial_grad_norm: last.initial_grad_norm,
            grad_norm: last.grad_norm,
            iterations: total_iter,
            backtracks: total_bt,
            status,
            energy_history: history,
            stages: records,
            wall_time: start.elapsed(),
        };
        out.push(StageResult { p: stage.p, field: current.clone(), report });
    }
    Ok(out)
}

/// Bilinear interpolation of `u` from grid `from` onto the nodes of `to`.
///
/// Points outside the node box of `from` are extrapolated from its edge
/// cells. Constrained fields are renormalized to the circle.
pub fn prolong(u: &S1Field, from: &Grid2D, to: &Grid2D) -> Result<S1Field> {
    u.check_grid(from)?;
    if from.topology() != to.topology() {
        return Err(Error::InvalidParams("prolongation needs matching topologies".into()));
    }
    if from.is_torus() && from.periods().iter().zip(to.periods()).any(|(a, b)| (a - b).abs() > 1e-12 * a) {
        return Err(Error::InvalidParams("prolongation needs matching torus periods".into()));
    }
    let v = u.values();
    let (nx, ny) = (from.nx(), from.ny());
    let o = from.origin();
    let index = |t: f64, n: usize| -> (usize, usize, f64) {
        if from.is_torus() {
            let f = t.floor();
            let i = (f as isize).rem_euclid(n as isize) as usize;
            (i, (i + 1) % n, t - f)
        } else {
            let i = (t.floor().max(0.0) as usize).min(n - 2);
            (i, i + 1, t - i as f64)
        }
    };
    let values = (0..to.num_nodes())
        .map(|n| {
            let x = to.node_pos_of(n);
            let (i0, i1, a) = index((x[0] - o[0]) / from.h(), nx);
            let (j0, j1, b) = index((x[1] - o[1]) / from.h(), ny);
            let w = [(i0, j0, (1.0 - a) * (1.0 - b)), (i1, j0, a * (1.0 - b)), (i0, j1, (1.0 - a) * b), (i1, j1, a * b)];
            let mut z = [0.0, 0.0];
            for (i, j, c) in w {
                let val = v[from.node(i, j)];
                z[0] += c * val[0];
                z[1] += c * val[1];
            }
            if u.kind() == FieldKind::Constrained {
                let m = z[0].hypot(z[1]);
                if m > MIN_MODULUS {
                    z = [z[0] / m, z[1] / m];
                } else {
                    // nearest coarse node
                    let (i, j) = (if a < 0.5 { i0 } else { i1 }, if b < 0.5 { j0 } else { j1 });
                    z = v[from.node(i, j)];
                }
            }
            z
        })
        .collect();
    S1Field::new(to, values, u.kind())
}

/// Relative threshold below which nodes count as vortex core.
pub const CORE_THRESHOLD: f64 = 0.1;
/// Largest tolerated fraction of core nodes.
pub const MAX_CORE_FRACTION: f64 = 0.05;

#[derive(Clone, Debug)]
pub struct Projection {
    pub field: S1Field,
    /// Active nodes with `|u| < 0.1`, excluded from pointwise diagnostics.
    pub core_nodes: Vec<usize>,
}

/// Nodewise `u / |u|`.
pub fn project_unit(u: &S1Field, grid: &Grid2D) -> Result<Projection> {
    u.check_grid(grid)?;
    let mut core = Vec::new();
    let mut active = 0usize;
    let values = u
        .values()
        .iter()
        .enumerate()
        .map(|(n, v)| {
            let m = v[0].hypot(v[1]);
            if grid.node_active(n) {
                active += 1;
                if m < CORE_THRESHOLD {
                    core.push(n);
                }
            }
            if m > 0.0 {
                let w = [v[0] / m, v[1] / m];
                // exact unit values pass through untouched
                if (m - 1.0).abs() <= f64::EPSILON {
                    *v
                } else {
                    w
                }
            } else {
                [1.0, 0.0]
            }
        })
        .collect();
    let fraction = core.len() as f64 / active.max(1) as f64;
    if fraction > MAX_CORE_FRACTION {
        return Err(Error::ProjectionUnreliable { fraction });
    }
    Ok(Projection { field: S1Field::from_parts(values, FieldKind::Constrained), core_nodes: core })
}

/// Initial field for a degree-`k` disk: `|k|` unit vortices equally spaced
/// on the circle of radius 1/2 (a single vortex sits at the center), each
/// multiplied by the harmonic phase correction `(1 - conj(a) z)/|1 - conj(a) z|`
/// so that the product equals `e^{i k theta}` on the unit circle.
pub fn disk_initial_field(grid: &Grid2D, k: i32) -> S1Field {
    disk_initial_field_scaled(grid, k, 1.0)
}

/// [`disk_initial_field`] for the disk of radius `radius`.
pub fn disk_initial_field_scaled(grid: &Grid2D, k: i32, radius: f64) -> S1Field {
    let centers = disk_vortex_positions(k);
    let sign = k.signum() as f64;
    let f = |z: [f64; 2]| -> [f64; 2] {
        let mut acc = [1.0, 0.0];
        for a in &centers {
            let d = [z[0] - a[0], z[1] - a[1]];
            // 1 - conj(a) z
            let c = [1.0 - (a[0] * z[0] + a[1] * z[1]), -(a[0] * z[1] - a[1] * z[0])];
            let fac = crate::lattice::cmul(d, c);
            let m = fac[0].hypot(fac[1]);
            let unit = if m > 0.0 { [fac[0] / m, sign * fac[1] / m] } else { [1.0, 0.0] };
            acc = crate::lattice::cmul(acc, unit);
        }
        acc
    };
    let values = (0..grid.num_nodes())
        .map(|n| {
            let x = grid.node_pos_of(n);
            f([x[0] / radius, x[1] / radius])
        })
        .collect();
    S1Field::from_parts(values, FieldKind::Relaxed)
}

pub fn disk_vortex_positions(k: i32) -> Vec<[f64; 2]> {
    let m = k.unsigned_abs() as usize;
    match m {
        0 => vec![],
        1 => vec![[0.0, 0.0]],
        _ => (0..m)
            .map(|l| {
                let t = 2.0 * std::f64::consts::PI * l as f64 / m as f64;
                [0.5 * t.cos(), 0.5 * t.sin()]
            })
            .collect(),
    }
}

/// Solver state on disk: a field snapshot tagged with the config hash.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub config_hash: String,
    pub stage: usize,
    pub iteration: usize,
    pub grid: Grid2D,
    pub field: S1Field,
}

const CKPT_MAGIC: &[u8; 8] = b"S1CKPT01";

impl Checkpoint {
    pub fn save(path: &Path, config_hash: &str, stage: usize, iteration: usize, grid: &Grid2D, field: &S1Field) -> Result<()> {
        let mut buf = Vec::new();
        buf.extend_from_slice(CKPT_MAGIC);
        buf.extend_from_slice(&(config_hash.len() as u32).to_le_bytes());
        buf.extend_from_slice(config_hash.as_bytes());
        buf.extend_from_slice(&(stage as u64).to_le_bytes());
        buf.extend_from_slice(&(iteration as u64).to_le_bytes());
        snapshot::write_snapshot(&mut buf, grid, field)?;
        let tmp = path.with_extension("tmp");
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&buf)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut f = fs::File::open(path)?;
        let mut magic = [0u8; 8];
        f.read_exact(&mut magic)?;
        if &magic != CKPT_MAGIC {
            return Err(Error::Format("not a checkpoint file".into()));
        }
        let mut b4 = [0u8; 4];
        f.read_exact(&mut b4)?;
        let mut hash = vec![0u8; u32::from_le_bytes(b4) as usize];
        f.read_exact(&mut hash)?;
        let config_hash = String::from_utf8(hash).map_err(|_| Error::Format("hash not utf-8".into()))?;
        let mut b8 = [0u8; 8];
        f.read_exact(&mut b8)?;
        let stage = u64::from_le_bytes(b8) as usize;
        f.read_exact(&mut b8)?;
        let iteration = u64::from_le_bytes(b8) as usize;
        let (grid, field) = snapshot::read_snapshot(f)?;
        Ok(Self { config_hash, stage, iteration, grid, field })
    }

    /// Resumes a sweep from this checkpoint after checking the config hash.
    pub fn resume(&self, config: &SolveConfig, expected_hash: &str) -> Result<Vec<StageResult>> {
        if self.config_hash != expected_hash {
            return Err(Error::CheckpointMismatch { found: self.config_hash.clone(), expected: expected_hash.into() });
        }
        continuation_sweep_from(&self.field, &self.grid, config, self.stage)
    }
}
