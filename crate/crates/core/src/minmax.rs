//! The two-parameter family `h_y = v_y o f` over the closed unit disk of
//! parameters, its energy surface, and the mean-zero witness.

use std::f64::consts::PI;

use log::warn;
use serde::Serialize;

use crate::energy::{gl_energy, EnergyParams};
use crate::error::{Error, Result};
use crate::lattice::{FieldKind, Grid2D, S1Field};

/// Below this distance from 1, `|y|` counts as the boundary circle.
const BOUNDARY_TOL: f64 = 1e-12;

/// `v_y(z) = (z + y/(1-|y|)) / |z + y/(1-|y|)|`, and `v_y = y` on `|y| = 1`.
pub fn v_y(y: [f64; 2], z: [f64; 2]) -> Result<[f64; 2]> {
    let r = y[0].hypot(y[1]);
    if !(r <= 1.0 + BOUNDARY_TOL) {
        return Err(Error::InvalidParams(format!("|y| = {r} exceeds 1")));
    }
    if 1.0 - r <= BOUNDARY_TOL {
        return Ok([y[0] / r, y[1] / r]);
    }
    let s = 1.0 / (1.0 - r);
    let w = [z[0] + s * y[0], z[1] + s * y[1]];
    let m = w[0].hypot(w[1]);
    if m <= 1e-14 * (1.0 + s * r) {
        return Err(Error::SingularPoint);
    }
    Ok([w[0] / m, w[1] / m])
}

/// Singular point of `v_y`, `-y/(1-|y|)`; `None` on the boundary circle.
pub fn vortex_point(y: [f64; 2]) -> Option<[f64; 2]> {
    let r = y[0].hypot(y[1]);
    if 1.0 - r <= BOUNDARY_TOL {
        return None;
    }
    let s = -1.0 / (1.0 - r);
    Some([s * y[0], s * y[1]])
}

/// Map from the lattice domain into the plane, piecewise linear on cells.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum DomainMap {
    #[default]
    Identity,
    /// Values at the nodes.
    Sampled(Vec<[f64; 2]>),
}

impl DomainMap {
    fn node_values(&self, grid: &Grid2D) -> Result<Vec<[f64; 2]>> {
        match self {
            Self::Identity => Ok((0..grid.num_nodes()).map(|n| grid.node_pos_of(n)).collect()),
            Self::Sampled(v) if v.len() == grid.num_nodes() => Ok(v.clone()),
            Self::Sampled(v) => Err(Error::ShapeMismatch { expected: grid.num_nodes(), got: v.len() }),
        }
    }
}

/// Polar sampling of the closed unit disk: radii `i/rings` for
/// `i = 0..=rings` and `angles` equally spaced directions, offset by
/// `angle_offset`. The center is a single sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PolarGrid {
    pub rings: usize,
    pub angles: usize,
    pub angle_offset: f64,
}

impl Default for PolarGrid {
    fn default() -> Self {
        Self { rings: 32, angles: 32, angle_offset: 0.0 }
    }
}

impl PolarGrid {
    pub fn validate(&self) -> Result<()> {
        if self.rings < 1 || self.angles < 3 {
            return Err(Error::InvalidParams(format!("polar grid {} x {} too coarse", self.rings, self.angles)));
        }
        Ok(())
    }

    /// `(ring, angle index, y)`, center first, then ring by ring.
    pub fn samples(&self) -> Vec<(usize, usize, [f64; 2])> {
        let mut out = vec![(0, 0, [0.0, 0.0])];
        for i in 1..=self.rings {
            let r = i as f64 / self.rings as f64;
            for k in 0..self.angles {
                let t = 2.0 * PI * k as f64 / self.angles as f64 + self.angle_offset;
                let y = if i == self.rings { [t.cos(), t.sin()] } else { [r * t.cos(), r * t.sin()] };
                out.push((i, k, y));
            }
        }
        out
    }

    fn index(&self, ring: usize, k: usize) -> usize {
        if ring == 0 {
            0
        } else {
            1 + (ring - 1) * self.angles + k % self.angles
        }
    }

    /// Pairs of neighboring samples along rays and rings.
    pub fn neighbors(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 1..=self.rings {
            for k in 0..self.angles {
                out.push((self.index(i - 1, k), self.index(i, k)));
                out.push((self.index(i, k), self.index(i, k + 1)));
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurfaceSample {
    pub y: [f64; 2],
    pub ring: usize,
    pub angle: usize,
    pub energy: f64,
    /// `Vol^{-1} int h_y`.
    pub mean: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilySurface {
    pub p: f64,
    pub eps: Option<f64>,
    pub polar: PolarGrid,
    /// The angular offset was moved by half a step to keep vortices off nodes.
    pub shifted: bool,
    pub samples: Vec<SurfaceSample>,
    pub argmax: usize,
}

impl FamilySurface {
    pub fn max_energy(&self) -> f64 {
        self.samples[self.argmax].energy
    }

    pub fn range(&self) -> f64 {
        let lo = self.samples.iter().map(|s| s.energy).fold(f64::INFINITY, f64::min);
        self.max_energy() - lo
    }

    /// Largest energy difference between neighboring samples, over the range.
    pub fn continuity_ratio(&self) -> f64 {
        let jump = self
            .polar
            .neighbors()
            .into_iter()
            .map(|(a, b)| (self.samples[a].energy - self.samples[b].energy).abs())
            .fold(0.0, f64::max);
        let range = self.range();
        if range > 0.0 {
            jump / range
        } else {
            0.0
        }
    }
}

/// Bilinear-interpolant average of a node field over the active cells.
fn cell_mean(values: &[[f64; 2]], grid: &Grid2D) -> [f64; 2] {
    let (cx, cy) = grid.cell_dims();
    let mut s = [0.0; 2];
    let mut cells = 0usize;
    for cj in 0..cy {
        for ci in 0..cx {
            if !grid.cell_active(grid.cell(ci, cj)) {
                continue;
            }
            cells += 1;
            for n in grid.cell_corners(ci, cj) {
                s[0] += values[n][0];
                s[1] += values[n][1];
            }
        }
    }
    let w = 0.25 / cells.max(1) as f64;
    [s[0] * w, s[1] * w]
}

fn lands_on_node(fv: &[[f64; 2]], grid: &Grid2D, samples: &[(usize, usize, [f64; 2])]) -> Option<[f64; 2]> {
    let tol = 1e-9 * grid.h();
    samples.iter().find_map(|&(_, _, y)| {
        let z = vortex_point(y)?;
        fv.iter().enumerate().any(|(n, f)| grid.node_active(n) && (f[0] - z[0]).hypot(f[1] - z[1]) <= tol).then_some(y)
    })
}

/// Energies `E_{p,eps}(h_y)` and mean values over a polar `y` grid.
///
/// If the vortex of some `h_y` falls on a node, the angular offset moves by
/// half a step with a warning. A hit that survives the shift is an error.
pub fn family_energy_surface(
    grid: &Grid2D,
    map: &DomainMap,
    polar: PolarGrid,
    params: &EnergyParams,
    threads: usize,
) -> Result<FamilySurface> {
    polar.validate()?;
    params.validate()?;
    let fv = map.node_values(grid)?;
    let mut polar = polar;
    let mut samples = polar.samples();
    let mut shifted = false;
    if let Some(y) = lands_on_node(&fv, grid, &samples) {
        warn!("vortex of h_y at y = ({:.6}, {:.6}) lands on a node; shifting the y grid by half an angular step", y[0], y[1]);
        polar.angle_offset += PI / polar.angles as f64;
        samples = polar.samples();
        shifted = true;
        if lands_on_node(&fv, grid, &samples).is_some() {
            return Err(Error::SingularPoint);
        }
    }

    let eval = |&(ring, angle, y): &(usize, usize, [f64; 2])| -> Result<SurfaceSample> {
        let values = fv.iter().map(|&z| v_y(y, z)).collect::<Result<Vec<_>>>()?;
        let mean = cell_mean(&values, grid);
        let u = S1Field::new(grid, values, FieldKind::Constrained)?;
        let energy = gl_energy(&u, grid, params)?;
        Ok(SurfaceSample { y, ring, angle, energy, mean })
    };
    let threads = threads.clamp(1, samples.len());
    let chunk = samples.len().div_ceil(threads);
    let results: Vec<Result<Vec<SurfaceSample>>> = std::thread::scope(|s| {
        let handles: Vec<_> =
            samples.chunks(chunk).map(|c| s.spawn(move || c.iter().map(eval).collect::<Result<Vec<_>>>())).collect();
        handles.into_iter().map(|h| h.join().expect("surface worker panicked")).collect()
    });
    let mut out = Vec::with_capacity(samples.len());
    for r in results {
        out.extend(r?);
    }
    let argmax = out
        .iter()
        .enumerate()
        .fold(0, |best, (k, s)| if s.energy > out[best].energy { k } else { best });
    Ok(FamilySurface { p: params.p, eps: params.eps_penalty, polar, shifted, samples: out, argmax })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub y: [f64; 2],
    pub mean_norm: f64,
    pub energy: f64,
    /// The measured lower bound: the witness energy itself.
    pub delta: f64,
    pub positive: bool,
}

/// The sample whose mean map is closest to zero.
pub fn mean_zero_witness(surface: &FamilySurface) -> Witness {
    let norm = |s: &SurfaceSample| s.mean[0].hypot(s.mean[1]);
    let best = surface
        .samples
        .iter()
        .min_by(|a, b| norm(a).total_cmp(&norm(b)))
        .expect("surface has samples");
    Witness { y: best.y, mean_norm: norm(best), energy: best.energy, delta: best.energy, positive: best.energy > 0.0 }
}
