//! Discrete p-energy, its degeneracy-regularized form, the generalized
//! Ginzburg–Landau energy and their exact gradients.
//!
//! The cell density is `(delta_reg^2 + |du|^2_cell)^{p/2}` where `|du|^2_cell`
//! averages the squared differences over the two edges of each direction.
//! Constrained fields use wrapped phase differences, relaxed fields raw
//! vector differences. The penalty `eps^{-p} lambda((|u| - 1)^2)` is summed
//! over active nodes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{phase_diff, wrap_angle, FieldKind, Grid2D, S1Field, ScalarField};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    pub p: f64,
    /// Penalty scale; `None` switches the penalty off.
    pub eps_penalty: Option<f64>,
    pub delta_reg: f64,
    pub delta_n: f64,
}

impl EnergyParams {
    pub const DEFAULT_DELTA_N: f64 = 0.25;

    pub fn new(p: f64) -> Self {
        Self { p, eps_penalty: None, delta_reg: 0.0, delta_n: Self::DEFAULT_DELTA_N }
    }

    pub fn with_penalty(mut self, eps: f64) -> Self {
        self.eps_penalty = Some(eps);
        self
    }

    pub fn with_delta_reg(mut self, delta: f64) -> Self {
        self.delta_reg = delta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p <= 2.0) {
            return Err(Error::InvalidParams(format!("p = {} outside (1, 2]", self.p)));
        }
        if let Some(eps) = self.eps_penalty {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::InvalidParams(format!("penalty scale must be positive, got {eps}")));
            }
        }
        if !(self.delta_reg >= 0.0 && self.delta_reg.is_finite()) {
            return Err(Error::InvalidParams(format!("delta_reg must be >= 0, got {}", self.delta_reg)));
        }
        if !(self.delta_n > 0.0 && self.delta_n <= 0.25) {
            return Err(Error::InvalidParams(format!("delta_N = {} outside (0, 1/4]", self.delta_n)));
        }
        Ok(())
    }

    pub fn profile(&self) -> PenaltyProfile {
        PenaltyProfile { delta_n: self.delta_n }
    }
}

/// `lambda(t) = t` below `delta_N^2`, `4 delta_N^2` above `4 delta_N^2`, and a
/// cubic Hermite blend in between that is C^1 and nondecreasing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PenaltyProfile {
    pub delta_n: f64,
}

impl PenaltyProfile {
    pub fn value(&self, t: f64) -> f64 {
        let a = self.delta_n * self.delta_n;
        let len = 3.0 * a;
        if t <= a {
            t
        } else if t >= 4.0 * a {
            4.0 * a
        } else {
            let s = (t - a) / len;
            a + len * (s + s * s - s * s * s)
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let a = self.delta_n * self.delta_n;
        if t <= a {
            1.0
        } else if t >= 4.0 * a {
            0.0
        } else {
            let s = (t - a) / (3.0 * a);
            1.0 + 2.0 * s - 3.0 * s * s
        }
    }
}

/// Active cells and the edges they touch, in a flat layout for the hot loops.
#[derive(Clone, Debug)]
pub(crate) struct Stencil {
    /// (cell index, [bottom, top, left, right] into `edges`)
    pub cells: Vec<(u32, [u32; 4])>,
    /// Edge endpoints (tail, head).
    pub edges: Vec<[u32; 2]>,
    pub active_nodes: Vec<u32>,
    pub h: f64,
}

impl Stencil {
    pub fn new(grid: &Grid2D) -> Self {
        let (nh, _) = grid.edge_counts();
        let (cx, cy) = grid.cell_dims();
        let total_edges = {
            let (a, b) = grid.edge_counts();
            a + b
        };
        let mut remap = vec![u32::MAX; total_edges];
        let mut edges = Vec::new();
        let mut cells = Vec::new();
        let mut slot = |e: usize, edges: &mut Vec<[u32; 2]>| -> u32 {
            if remap[e] == u32::MAX {
                remap[e] = edges.len() as u32;
                let (a, b) = if e < nh { grid.hedge_nodes(e) } else { grid.vedge_nodes(e - nh) };
                edges.push([a as u32, b as u32]);
            }
            remap[e]
        };
        for cj in 0..cy {
            for ci in 0..cx {
                let c = grid.cell(ci, cj);
                if !grid.cell_active(c) {
                    continue;
                }
                let ([b, t], [l, r]) = grid.cell_edges(ci, cj);
                let ids = [slot(b, &mut edges), slot(t, &mut edges), slot(nh + l, &mut edges), slot(nh + r, &mut edges)];
                cells.push((c as u32, ids));
            }
        }
        let active_nodes = (0..grid.num_nodes()).filter(|&n| grid.node_active(n)).map(|n| n as u32).collect();
        Self { cells, edges, active_nodes, h: grid.h() }
    }
}

/// Neumaier compensated sum. The solver compares energies whose difference
/// is far below the rounding error of a plain sum over a large grid.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Sum {
    sum: f64,
    comp: f64,
}

impl Sum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(self) -> f64 {
        self.sum + self.comp
    }
}

/// Scratch buffers reused across evaluations.
#[derive(Clone, Debug, Default)]
pub(crate) struct Scratch {
    diff: Vec<[f64; 2]>,
    weight: Vec<f64>,
}

/// Relaxed GL energy, optionally accumulating the gradient into `grad`.
pub(crate) fn relaxed_energy(
    st: &Stencil,
    u: &[[f64; 2]],
    params: &EnergyParams,
    grad: Option<&mut [[f64; 2]]>,
    scratch: &mut Scratch,
) -> Result<f64> {
    let h = st.h;
    let inv_h = 1.0 / h;
    let h2 = h * h;
    let d2 = params.delta_reg * params.delta_reg;
    let half_p = 0.5 * params.p;
    let want_grad = grad.is_some();

    scratch.diff.resize(st.edges.len(), [0.0; 2]);
    for (d, &[a, b]) in scratch.diff.iter_mut().zip(&st.edges) {
        let (ua, ub) = (u[a as usize], u[b as usize]);
        *d = [(ub[0] - ua[0]) * inv_h, (ub[1] - ua[1]) * inv_h];
    }
    if want_grad {
        scratch.weight.clear();
        scratch.weight.resize(st.edges.len(), 0.0);
    }
    let mut energy = Sum::default();
    for (c, ids) in &st.cells {
        let mut s = 0.0;
        for &e in ids {
            let d = scratch.diff[e as usize];
            s += d[0] * d[0] + d[1] * d[1];
        }
        let t = d2 + 0.5 * s;
        if want_grad {
            if t == 0.0 {
                if half_p < 1.0 {
                    return Err(Error::DegenerateCoefficient { cell: *c as usize });
                }
                // p = 2: weight is constant
                let w = h2;
                for &e in ids {
                    scratch.weight[e as usize] += w;
                }
                continue;
            }
            let pw = t.powf(half_p - 1.0);
            energy.add(t * pw);
            let w = h2 * half_p * pw;
            for &e in ids {
                scratch.weight[e as usize] += w;
            }
        } else if t > 0.0 {
            energy.add(t.powf(half_p));
        }
    }
    let mut energy = energy.value() * h2;

    let mut grad = grad;
    if let Some(g) = grad.as_deref_mut() {
        for ((d, w), &[a, b]) in scratch.diff.iter().zip(&scratch.weight).zip(&st.edges) {
            let f = w * inv_h;
            let (fx, fy) = (f * d[0], f * d[1]);
            let gb = &mut g[b as usize];
            gb[0] += fx;
            gb[1] += fy;
            let ga = &mut g[a as usize];
            ga[0] -= fx;
            ga[1] -= fy;
        }
    }

    if let Some(eps) = params.eps_penalty {
        let scale = h2 * eps.powf(-params.p);
        let prof = params.profile();
        let mut pen = Sum::default();
        for &n in &st.active_nodes {
            let v = u[n as usize];
            let m = v[0].hypot(v[1]);
            let t = (m - 1.0) * (m - 1.0);
            pen.add(prof.value(t));
            if let Some(g) = grad.as_deref_mut() {
                let lp = prof.derivative(t);
                if lp != 0.0 && m > 0.0 {
                    let f = scale * lp * 2.0 * (m - 1.0) / m;
                    g[n as usize][0] += f * v[0];
                    g[n as usize][1] += f * v[1];
                }
            }
        }
        energy += scale * pen.value();
    }
    Ok(energy)
}

/// p-energy of the constrained field `e^{i theta}` written in phases, with
/// the gradient with respect to the phases.
pub(crate) fn phase_energy(
    st: &Stencil,
    theta: &[f64],
    params: &EnergyParams,
    grad: Option<&mut [f64]>,
    scratch: &mut Scratch,
) -> Result<f64> {
    let h = st.h;
    let inv_h = 1.0 / h;
    let h2 = h * h;
    let d2 = params.delta_reg * params.delta_reg;
    let half_p = 0.5 * params.p;
    let want_grad = grad.is_some();

    scratch.diff.resize(st.edges.len(), [0.0; 2]);
    for (d, &[a, b]) in scratch.diff.iter_mut().zip(&st.edges) {
        d[0] = wrap_angle(theta[b as usize] - theta[a as usize]) * inv_h;
    }
    if want_grad {
        scratch.weight.clear();
        scratch.weight.resize(st.edges.len(), 0.0);
    }
    let mut energy = Sum::default();
    for (c, ids) in &st.cells {
        let mut s = 0.0;
        for &e in ids {
            let j = scratch.diff[e as usize][0];
            s += j * j;
        }
        let t = d2 + 0.5 * s;
        if t == 0.0 {
            if want_grad && half_p < 1.0 {
                return Err(Error::DegenerateCoefficient { cell: *c as usize });
            }
            if want_grad {
                for &e in ids {
                    scratch.weight[e as usize] += h2;
                }
            }
            continue;
        }
        let pw = t.powf(half_p - 1.0);
        energy.add(t * pw);
        if want_grad {
            let w = h2 * half_p * pw;
            for &e in ids {
                scratch.weight[e as usize] += w;
            }
        }
    }
    if let Some(g) = grad {
        for ((d, w), &[a, b]) in scratch.diff.iter().zip(&scratch.weight).zip(&st.edges) {
            let f = w * inv_h * d[0];
            g[b as usize] += f;
            g[a as usize] -= f;
        }
    }
    Ok(h2 * energy.value())
}

/// `|du|^2` per cell (zero on inactive cells).
pub fn cell_grad_sq(u: &S1Field, grid: &Grid2D) -> Result<Vec<f64>> {
    u.check_grid(grid)?;
    let st = Stencil::new(grid);
    let v = u.values();
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let edge_sq: Vec<f64> = st
        .edges
        .iter()
        .map(|&[a, b]| {
            let (ua, ub) = (v[a as usize], v[b as usize]);
            match u.kind() {
                FieldKind::Constrained => {
                    let j = phase_diff(ua, ub);
                    j * j * inv_h2
                }
                FieldKind::Relaxed => ((ub[0] - ua[0]).powi(2) + (ub[1] - ua[1]).powi(2)) * inv_h2,
            }
        })
        .collect();
    let mut out = vec![0.0; grid.num_cells()];
    for (c, ids) in &st.cells {
        out[*c as usize] = 0.5 * ids.iter().map(|&e| edge_sq[e as usize]).sum::<f64>();
    }
    Ok(out)
}

/// Cell density `(delta_reg^2 + |du|^2)^{p/2}`.
pub fn energy_density(u: &S1Field, grid: &Grid2D, params: &EnergyParams) -> Result<ScalarField> {
    params.validate()?;
    let d2 = params.delta_reg * params.delta_reg;
    let sq = cell_grad_sq(u, grid)?;
    Ok(ScalarField::cells(
        sq.iter()
            .enumerate()
            .map(|(c, s)| if grid.cell_active(c) { (d2 + s).powf(0.5 * params.p) } else { 0.0 })
            .collect(),
    ))
}

/// `h^2 sum_cells (delta_reg^2 + |du|^2)^{p/2}`.
pub fn p_energy(u: &S1Field, grid: &Grid2D, params: &EnergyParams) -> Result<f64> {
    let dens = energy_density(u, grid, params)?;
    Ok(grid.h() * grid.h() * dens.values.iter().sum::<f64>())
}

/// `eps^{-p} h^2 sum_nodes lambda((|u| - 1)^2)`; zero when the penalty is off.
pub fn penalty_energy(u: &S1Field, grid: &Grid2D, params: &EnergyParams) -> Result<f64> {
    params.validate()?;
    u.check_grid(grid)?;
    let Some(eps) = params.eps_penalty else { return Ok(0.0) };
    let prof = params.profile();
    let s: f64 = u
        .values()
        .iter()
        .enumerate()
        .filter(|(n, _)| grid.node_active(*n))
        .map(|(_, v)| {
            let m = v[0].hypot(v[1]);
            prof.value((m - 1.0) * (m - 1.0))
        })
        .sum();
    Ok(eps.powf(-params.p) * grid.h() * grid.h() * s)
}

/// Generalized Ginzburg–Landau energy: p-energy plus the penalty.
pub fn gl_energy(u: &S1Field, grid: &Grid2D, params: &EnergyParams) -> Result<f64> {
    Ok(p_energy(u, grid, params)? + penalty_energy(u, grid, params)?)
}

/// Exact gradient of [`gl_energy`] with respect to the node values.
///
/// For constrained fields this is the derivative along the circle (the
/// phase derivative times `i u`); the penalty vanishes identically there.
pub fn gl_gradient(u: &S1Field, grid: &Grid2D, params: &EnergyParams) -> Result<Vec<[f64; 2]>> {
    params.validate()?;
    u.check_grid(grid)?;
    let st = Stencil::new(grid);
    let mut scratch = Scratch::default();
    match u.kind() {
        FieldKind::Relaxed => {
            let mut g = vec![[0.0; 2]; grid.num_nodes()];
            relaxed_energy(&st, u.values(), params, Some(&mut g), &mut scratch)?;
            Ok(g)
        }
        FieldKind::Constrained => {
            let theta: Vec<f64> = u.values().iter().map(|v| v[1].atan2(v[0])).collect();
            let mut gt = vec![0.0; grid.num_nodes()];
            phase_energy(&st, &theta, params, Some(&mut gt), &mut scratch)?;
            Ok(u.values().iter().zip(&gt).map(|(v, d)| [-v[1] * d, v[0] * d]).collect())
        }
    }
}

/// Energy-measure density `(2 - p)|du|^p` of a constrained field.
pub fn mu_density(u: &S1Field, grid: &Grid2D, p: f64) -> Result<ScalarField> {
    if u.kind() != FieldKind::Constrained {
        return Err(Error::InvalidField("mu_density needs a constrained field".into()));
    }
    let params = EnergyParams::new(p);
    let mut d = energy_density(u, grid, &params)?;
    d.values.iter_mut().for_each(|v| *v *= 2.0 - p);
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_relaxed(g: &Grid2D, seed: u64) -> S1Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals = (0..g.num_nodes()).map(|_| [rng.gen_range(-1.2..1.2), rng.gen_range(-1.2..1.2)]).collect();
        S1Field::new(g, vals, FieldKind::Relaxed).unwrap()
    }

    #[test]
    fn constant_map_has_zero_energy() {
        let g = Grid2D::unit_torus(16).unwrap();
        let u = S1Field::constant(&g, [0.6, 0.8], FieldKind::Constrained).unwrap();
        assert_eq!(p_energy(&u, &g, &EnergyParams::new(1.5)).unwrap(), 0.0);
    }

    #[test]
    fn plane_wave_energy_is_closed_form() {
        let g = Grid2D::unit_torus(32).unwrap();
        for m in 1..=3 {
            let u = S1Field::from_phase(&g, |x| 2.0 * PI * m as f64 * x[0]);
            for p in [1.5, 1.9, 2.0] {
                let e = p_energy(&u, &g, &EnergyParams::new(p)).unwrap();
                let exact = (2.0 * PI * m as f64).powf(p);
                assert!((e - exact).abs() < 1e-11 * exact, "m={m} p={p}: {e} vs {exact}");
            }
        }
    }

    #[test]
    fn penalty_profile_shape() {
        let prof = PenaltyProfile { delta_n: 0.25 };
        let a = 0.0625;
        let mut prev = prof.value(0.0);
        assert_eq!(prev, 0.0);
        for k in 1..=10_000 {
            let t = k as f64 * 1e-4 * 0.5;
            let v = prof.value(t);
            assert!(v >= prev - 1e-15);
            assert!(prof.derivative(t) >= 0.0);
            assert!(v <= 4.0 * a + 1e-15);
            if t <= a {
                assert_eq!(v, t);
            }
            if t >= 4.0 * a {
                assert_eq!(v, 4.0 * a);
            }
            // continuity of lambda and lambda'
            let dt = 1e-7;
            assert!((prof.value(t + dt) - v).abs() < 2e-7);
            assert!((prof.derivative(t + dt) - prof.derivative(t)).abs() < 1e-5);
            prev = v;
        }
    }

    #[test]
    fn gl_energy_special_values() {
        let g = Grid2D::unit_torus(16).unwrap();
        let eps = 0.1;
        let p = 1.7;
        let params = EnergyParams::new(p).with_penalty(eps);
        let zero = S1Field::constant(&g, [0.0, 0.0], FieldKind::Relaxed).unwrap();
        let e0 = gl_energy(&zero, &g, &params).unwrap();
        assert!((e0 - eps.powf(-p) * 0.25).abs() < 1e-12 * e0);
        let out = S1Field::constant(&g, [1.25, 0.0], FieldKind::Relaxed).unwrap();
        let e1 = gl_energy(&out, &g, &params).unwrap();
        assert!((e1 - eps.powf(-p) * 0.0625).abs() < 1e-12 * e1);
        let wave = S1Field::from_phase(&g, |x| 2.0 * PI * x[0]);
        assert_eq!(gl_energy(&wave, &g, &params).unwrap(), p_energy(&wave, &g, &params).unwrap());
    }

    fn fd_check(p: f64, delta: f64, seed: u64) -> f64 {
        let g = Grid2D::unit_torus(16).unwrap();
        let u = random_relaxed(&g, seed);
        let params = EnergyParams::new(p).with_penalty(0.2).with_delta_reg(delta);
        let grad = gl_gradient(&u, &g, &params).unwrap();
        let step = 1e-6;
        let mut num = Vec::with_capacity(2 * g.num_nodes());
        let mut ana = Vec::with_capacity(2 * g.num_nodes());
        for n in 0..g.num_nodes() {
            for k in 0..2 {
                let mut plus = u.values().to_vec();
                let mut minus = u.values().to_vec();
                plus[n][k] += step;
                minus[n][k] -= step;
                let ep = gl_energy(&S1Field::new(&g, plus, FieldKind::Relaxed).unwrap(), &g, &params).unwrap();
                let em = gl_energy(&S1Field::new(&g, minus, FieldKind::Relaxed).unwrap(), &g, &params).unwrap();
                num.push((ep - em) / (2.0 * step));
                ana.push(grad[n][k]);
            }
        }
        let diff: f64 = num.iter().zip(&ana).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let norm: f64 = num.iter().map(|a| a * a).sum::<f64>().sqrt();
        diff / norm
    }

    #[test]
    fn gradient_matches_central_differences() {
        for (i, p) in [1.5, 1.7, 1.9].into_iter().enumerate() {
            for delta in [1e-2, 1e-4] {
                let rel = fd_check(p, delta, 11 + i as u64);
                assert!(rel <= 1e-5, "p={p} delta={delta}: rel err {rel}");
            }
        }
    }

    #[test]
    fn constrained_gradient_matches_phase_differences() {
        let g = Grid2D::unit_torus(12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let theta: Vec<f64> = (0..g.num_nodes()).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let mk = |t: &[f64]| S1Field::from_parts(t.iter().map(|a| [a.cos(), a.sin()]).collect(), FieldKind::Constrained);
        let params = EnergyParams::new(1.6).with_delta_reg(1e-2);
        let grad = gl_gradient(&mk(&theta), &g, &params).unwrap();
        let u = mk(&theta);
        for n in [0usize, 17, 80] {
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[n] += 1e-6;
            tm[n] -= 1e-6;
            let d = (p_energy(&mk(&tp), &g, &params).unwrap() - p_energy(&mk(&tm), &g, &params).unwrap()) / 2e-6;
            let v = u.values()[n];
            let tang = -v[1] * grad[n][0] + v[0] * grad[n][1];
            assert!((d - tang).abs() < 1e-6 * d.abs().max(1.0), "{d} vs {tang}");
        }
    }

    #[test]
    fn degenerate_coefficient_is_reported() {
        let g = Grid2D::unit_torus(8).unwrap();
        let u = S1Field::constant(&g, [1.0, 0.0], FieldKind::Relaxed).unwrap();
        let params = EnergyParams::new(1.5);
        assert!(matches!(gl_gradient(&u, &g, &params), Err(Error::DegenerateCoefficient { .. })));
        assert!(gl_gradient(&u, &g, &params.with_delta_reg(1e-3)).is_ok());
    }

    #[test]
    fn penalty_gradient_vanishes_on_the_circle() {
        let g = Grid2D::disk(0.5, 1.0 / 32.0).unwrap();
        let u = S1Field::from_phase(&g, |x| x[1].atan2(x[0])).into_relaxed();
        let params = EnergyParams::new(1.8).with_penalty(0.05);
        let st = Stencil::new(&g);
        let mut only_pen = vec![[0.0; 2]; g.num_nodes()];
        let mut s = Scratch::default();
        let with = relaxed_energy(&st, u.values(), &params, Some(&mut only_pen), &mut s).unwrap();
        let mut no_pen = vec![[0.0; 2]; g.num_nodes()];
        let mut p2 = params;
        p2.eps_penalty = None;
        let without = relaxed_energy(&st, u.values(), &p2, Some(&mut no_pen), &mut s).unwrap();
        assert!((with - without).abs() < 1e-12 * with);
        for (a, b) in only_pen.iter().zip(&no_pen) {
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn regularization_is_monotone() {
        let g = Grid2D::unit_torus(16).unwrap();
        let u = random_relaxed(&g, 99);
        let mut prev = p_energy(&u, &g, &EnergyParams::new(1.6)).unwrap();
        let base = prev;
        for d in [1e-6, 1e-3, 1e-2, 1e-1, 1.0] {
            let e = p_energy(&u, &g, &EnergyParams::new(1.6).with_delta_reg(d)).unwrap();
            assert!(e >= prev);
            prev = e;
        }
        let tiny = p_energy(&u, &g, &EnergyParams::new(1.6).with_delta_reg(1e-9)).unwrap();
        assert!((tiny - base).abs() < 1e-10 * base);
    }

    #[test]
    fn rotation_equivariance() {
        let g = Grid2D::unit_torus(16).unwrap();
        let u = random_relaxed(&g, 3);
        let params = EnergyParams::new(1.7).with_penalty(0.3).with_delta_reg(1e-3);
        let e = gl_energy(&u, &g, &params).unwrap();
        for alpha in [0.3, 1.0, 2.5] {
            let er = gl_energy(&u.rotate(alpha), &g, &params).unwrap();
            assert!((e - er).abs() < 1e-12 * e);
        }
    }

    #[test]
    fn mu_density_of_plane_wave() {
        let g = Grid2D::unit_torus(32).unwrap();
        let p = 1.8;
        let u = S1Field::from_phase(&g, |x| 2.0 * PI * 2.0 * x[0]);
        let mu = mu_density(&u, &g, p).unwrap();
        let mass: f64 = mu.values.iter().sum::<f64>() * g.h() * g.h();
        let exact = (2.0 - p) * (4.0 * PI).powf(p);
        assert!((mass - exact).abs() < 1e-11 * exact);
        assert!(mu_density(&u, &g, 2.0).unwrap().values.iter().all(|&v| v == 0.0));
    }
}
