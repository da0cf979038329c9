//! The named experiments. Each returns a typed result that serializes into
//! the JSON summary, plus the table and image artifacts derived from it.

use std::f64::consts::PI;

use log::info;
use pharmonic::diagnostics::{
    self, c_np, exact_vortex_field, linear_radii, measure_density, monotonicity_profile, oracle_vortex_energy,
    pohozaev_residual, quantization_report, reference_radius, stationarity_residual, DensityProfile, PohozaevReport,
    QuantizationReport, TestFamily,
};
use pharmonic::energy::{energy_density, gl_energy, gl_gradient, p_energy, EnergyParams};
use pharmonic::hodge::{
    diffuse_measure_experiment, exact_part_scaling, hodge_decompose, symmetric_pair_positions, torus_vortex_pair,
    DiffuseRow, ScalingTable,
};
use pharmonic::lattice::{
    boundary_degree, detect_vortices, Contour, FieldKind, Grid2D, OneForm2D, S1Field, ScalarField, Vortex,
};
use pharmonic::minmax::{family_energy_surface, mean_zero_witness, DomainMap, FamilySurface, PolarGrid, Witness};
use pharmonic::solver::{
    continuation_sweep, disk_initial_field_scaled, project_unit, prolong, BoundaryCondition, BoundaryTrace, SolveConfig, SolveReport,
    Stage, Stopping,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig};
use crate::output::{heatmap_svg, polar_svg};

/// A failure tagged with the experiment step that produced it.
#[derive(Debug, thiserror::Error)]
#[error("{stage}: {source}")]
pub struct RunError {
    pub stage: String,
    #[source]
    pub source: pharmonic::Error,
}

trait Tag<T> {
    fn tag(self, stage: impl Into<String>) -> Result<T, RunError>;
}

impl<T> Tag<T> for pharmonic::Result<T> {
    fn tag(self, stage: impl Into<String>) -> Result<T, RunError> {
        self.map_err(|source| RunError { stage: stage.into(), source })
    }
}

/// A diagnostic value, or the reason it could not be computed.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Diag<T> {
    Value(T),
    Failed { error: String },
}

impl<T> Diag<T> {
    fn from(r: pharmonic::Result<T>) -> Self {
        match r {
            Ok(v) => Self::Value(v),
            Err(e) => Self::Failed { error: e.to_string() },
        }
    }

    pub fn value(&self) -> Option<&T> {
        match self {
            Self::Value(v) => Some(v),
            Self::Failed { .. } => None,
        }
    }
}

/// Everything an experiment produced.
pub struct Outcome {
    pub results: serde_json::Value,
    pub profiles_csv: String,
    pub surface_csv: Option<String>,
    /// `(file name, svg text)`.
    pub images: Vec<(String, String)>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let json = |v: &dyn erased::Ser| v.to_json();
    match cfg.experiment {
        Experiment::DiskSweep => {
            let r = disk_sweep(cfg)?;
            Ok(Outcome {
                results: json(&r),
                profiles_csv: r.profiles_csv(),
                surface_csv: None,
                images: vec![("mu_density.svg".into(), r.density_svg.clone())],
            })
        }
        Experiment::TorusHodge => {
            let r = torus_hodge(cfg)?;
            Ok(Outcome {
                results: json(&r),
                profiles_csv: csv_rows(&r.table.rows),
                surface_csv: None,
                images: vec![("mu_density.svg".into(), r.density_svg.clone())],
            })
        }
        Experiment::TorusDiffuse => {
            let r = torus_diffuse(cfg)?;
            Ok(Outcome {
                results: json(&r),
                profiles_csv: csv_rows(&r.rows),
                surface_csv: None,
                images: vec![("mu_density.svg".into(), r.density_svg.clone())],
            })
        }
        Experiment::MinmaxSurface => {
            let r = minmax_surface(cfg)?;
            Ok(Outcome {
                results: json(&r),
                profiles_csv: csv_rows(&r.rows),
                surface_csv: Some(r.surface_csv()),
                images: vec![("surface.svg".into(), r.surface_svg.clone())],
            })
        }
        Experiment::OracleSuite => {
            let r = oracle_suite(cfg)?;
            Ok(Outcome { results: json(&r), profiles_csv: csv_rows(&r.checks), surface_csv: None, images: vec![] })
        }
    }
}

mod erased {
    pub trait Ser {
        fn to_json(&self) -> serde_json::Value;
    }
    impl<T: serde::Serialize> Ser for T {
        fn to_json(&self) -> serde_json::Value {
            serde_json::to_value(self).expect("results serialize")
        }
    }
}

fn csv_rows<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}

fn density_svg(u: &S1Field, grid: &Grid2D, p: f64, title: &str) -> Result<String, RunError> {
    let d = measure_density(u, grid, p).tag("mu density")?;
    let (cx, cy) = grid.cell_dims();
    Ok(heatmap_svg(&active_cells(&d, grid), cx, cy, 128, title))
}

#[derive(Clone, Debug, Serialize)]
pub struct VortexInfo {
    pub position: [f64; 2],
    pub winding: i32,
    pub plaquettes: usize,
}

impl From<&Vortex> for VortexInfo {
    fn from(v: &Vortex) -> Self {
        Self { position: v.position, winding: v.winding, plaquettes: v.plaquettes }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DiskStage {
    pub p: f64,
    pub solve: SolveReport,
    pub core_nodes: usize,
    pub vortices: Vec<VortexInfo>,
    pub total_winding: i32,
    pub boundary_degree: i32,
    /// Lattice `int |du|^p` of the projected field.
    pub energy: f64,
    pub quantization: Diag<QuantizationReport>,
    /// One per vortex, over `r` in `[5h, min(0.4, dist to boundary)]`.
    pub profiles: Vec<Diag<DensityProfile>>,
    /// One per vortex, annulus `(0.15, 0.35)`.
    pub pohozaev: Vec<Diag<Pohozaev>>,
    pub stationarity: Diag<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Pohozaev {
    #[serde(flatten)]
    pub report: PohozaevReport,
    /// Residual over the right side.
    pub relative: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiskSweep {
    pub h: f64,
    pub radius: f64,
    pub k: i32,
    pub stages: Vec<DiskStage>,
    #[serde(skip)]
    pub density_svg: String,
}

impl DiskSweep {
    pub fn profiles_csv(&self) -> String {
        #[derive(Serialize)]
        struct Row {
            p: f64,
            vortex: usize,
            x: f64,
            y: f64,
            r: f64,
            theta: f64,
        }
        let mut rows = Vec::new();
        for s in &self.stages {
            for (v, prof) in s.profiles.iter().enumerate() {
                if let Some(pr) = prof.value() {
                    for (r, t) in pr.radii.iter().zip(&pr.values) {
                        rows.push(Row { p: s.p, vortex: v, x: pr.center[0], y: pr.center[1], r: *r, theta: *t });
                    }
                }
            }
        }
        csv_rows(&rows)
    }
}

/// Dirichlet data `e^{ik theta}` on the disk, swept in `p` with continuation.
pub fn disk_sweep(cfg: &ExperimentConfig) -> Result<DiskSweep, RunError> {
    let h = 1.0 / cfg.n as f64;
    let levels = (0..=cfg.coarse_levels).rev().find(|&l| cfg.n >> l >= 32).unwrap_or(0);
    let mut u0: Option<(Grid2D, S1Field)> = None;
    for l in (1..=levels).rev() {
        let g = Grid2D::disk(cfg.radius, 1.0 / (cfg.n >> l) as f64).tag("grid")?;
        let start = disk_start(cfg, &g, u0.as_ref())?;
        let mut sc = disk_config(cfg, &g, u0.is_none());
        sc.schedule.truncate(1);
        info!("coarse start: first stage on n = {}", cfg.n >> l);
        let r = continuation_sweep(&start, &g, &sc).tag(format!("coarse solve n = {}", cfg.n >> l))?;
        let field = r.into_iter().next().expect("one stage").field;
        u0 = Some((g, field));
    }
    let grid = Grid2D::disk(cfg.radius, h).tag("grid")?;
    let start = disk_start(cfg, &grid, u0.as_ref())?;
    let results = continuation_sweep(&start, &grid, &disk_config(cfg, &grid, u0.is_none())).tag("solve")?;

    let mut stages = Vec::new();
    let mut last_field = None;
    for (idx, r) in results.into_iter().enumerate() {
        let tag = |what: &str| format!("stage {idx} (p = {}) {what}", r.p);
        let proj = project_unit(&r.field, &grid).tag(tag("projection"))?;
        let u = proj.field;
        let vs = detect_vortices(&u, &grid, 4.0 * h);
        let r_ref = reference_radius(&vs, &grid, 0.25);
        let quantization = Diag::from(quantization_report(&u, &grid, r.p, &vs, r_ref));
        let mut profiles = Vec::new();
        let mut pohozaev = Vec::new();
        for v in &vs.vortices {
            let room = cfg.radius - v.position[0].hypot(v.position[1]) - 2.0 * h;
            let r_max = room.min(0.4);
            profiles.push(if r_max > 5.0 * h {
                Diag::from(monotonicity_profile(&u, &grid, v.position, &linear_radii(5.0 * h, r_max, cfg.radii), r.p))
            } else {
                Diag::Failed { error: "vortex too close to the boundary for a profile".into() }
            });
            pohozaev.push(Diag::from(
                pohozaev_residual(&u, &grid, v.position, 0.15, 0.35, r.p)
                    .map(|report| Pohozaev { relative: report.relative(), report }),
            ));
        }
        let stationarity = Diag::from(stationarity_residual(&u, &grid, r.p, &TestFamily::standard(&grid)));
        let energy = p_energy(&u, &grid, &EnergyParams::new(r.p)).tag(tag("energy"))?;
        info!("p = {}: {} vortices, energy {energy:.6}, status {:?}", r.p, vs.len(), r.report.status);
        stages.push(DiskStage {
            p: r.p,
            solve: r.report,
            core_nodes: proj.core_nodes.len(),
            vortices: vs.vortices.iter().map(VortexInfo::from).collect(),
            total_winding: vs.total_winding(),
            boundary_degree: boundary_degree(&u, &Contour::domain_boundary(&grid)),
            energy,
            quantization,
            profiles,
            pohozaev,
            stationarity,
        });
        last_field = Some((r.p, u));
    }
    let (p, u) = last_field.expect("schedule is nonempty");
    let density_svg = density_svg(&u, &grid, p, &format!("mu_p density, disk k = {}, p = {p}", cfg.k))?;
    Ok(DiskSweep { h, radius: cfg.radius, k: cfg.k, stages, density_svg })
}

/// The configured initial field on `grid`, or the interpolated coarser solution.
fn disk_start(
    cfg: &ExperimentConfig,
    grid: &Grid2D,
    coarse: Option<&(Grid2D, S1Field)>,
) -> Result<S1Field, RunError> {
    let u = match coarse {
        Some((g, u)) => prolong(u, g, grid).tag("prolongation")?,
        None => disk_initial_field_scaled(grid, cfg.k, cfg.radius),
    };
    if cfg.eps.resolve(grid.h()).is_none() {
        constrained(&u, grid)
    } else {
        Ok(u.into_relaxed())
    }
}

/// Dirichlet data `e^{ik theta}`; the random kick applies only to a fresh start.
fn disk_config(cfg: &ExperimentConfig, grid: &Grid2D, fresh: bool) -> SolveConfig {
    let trace = BoundaryTrace::from_fn(grid, |x| {
        let t = cfg.k as f64 * x[1].atan2(x[0]);
        [t.cos(), t.sin()]
    });
    let mut sc = SolveConfig::new(BoundaryCondition::Dirichlet(trace));
    sc.stopping = Stopping { max_iterations: cfg.max_iterations, rel_tol: cfg.rel_tol };
    sc.schedule = schedule(cfg, cfg.eps.resolve(grid.h()));
    sc.seed = cfg.seed;
    sc.init_noise = if fresh { cfg.init_noise } else { 0.0 };
    sc
}

fn schedule(cfg: &ExperimentConfig, eps: Option<f64>) -> Vec<Stage> {
    cfg.p.iter().map(|&p| Stage { p, eps, delta_schedule: cfg.delta_reg.clone() }).collect()
}

fn constrained(u: &S1Field, grid: &Grid2D) -> Result<S1Field, RunError> {
    let unit = project_unit(u, grid).tag("projection")?.field;
    S1Field::new(grid, unit.values().to_vec(), FieldKind::Constrained).tag("projection")
}

#[derive(Clone, Debug, Serialize)]
pub struct TorusHodge {
    pub n: usize,
    pub positions: [[f64; 2]; 2],
    pub stages: Vec<TorusStage>,
    pub table: ScalingTable,
    #[serde(skip)]
    pub density_svg: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct TorusStage {
    pub p: f64,
    pub solve: SolveReport,
    pub vortices: Vec<VortexInfo>,
    pub hodge_residual: f64,
}

/// A `+1/-1` vortex pair on the unit torus, swept in `p`, with the exact
/// part of the current tabulated against the predicted rate.
pub fn torus_hodge(cfg: &ExperimentConfig) -> Result<TorusHodge, RunError> {
    let grid = Grid2D::unit_torus(cfg.n).tag("grid")?;
    let (a, b) = symmetric_pair_positions(&grid);
    let mut u0 = torus_vortex_pair(&grid, a, b).tag("init")?;
    let eps = cfg.eps.resolve(grid.h());
    if eps.is_some() {
        u0 = u0.into_relaxed();
    }
    let mut sc = SolveConfig::new(BoundaryCondition::Periodic);
    sc.stopping = Stopping { max_iterations: cfg.max_iterations, rel_tol: cfg.rel_tol };
    sc.schedule = schedule(cfg, eps);
    sc.seed = cfg.seed;
    sc.init_noise = cfg.init_noise;
    let results = continuation_sweep(&u0, &grid, &sc).tag("solve")?;
    let mut stages = Vec::new();
    let mut sols = Vec::new();
    for r in results {
        let u = project_unit(&r.field, &grid).tag(format!("p = {} projection", r.p))?.field;
        let vs = detect_vortices(&u, &grid, 4.0 * grid.h());
        let j = pharmonic::lattice::current(&u, &grid).tag("current")?;
        let parts = hodge_decompose(&j, &grid).tag("hodge")?;
        stages.push(TorusStage {
            p: r.p,
            solve: r.report,
            vortices: vs.vortices.iter().map(VortexInfo::from).collect(),
            hodge_residual: parts.residual,
        });
        sols.push((r.p, u));
    }
    let table = exact_part_scaling(&sols, &grid, cfg.q).tag("scaling table")?;
    let (p, u) = sols.last().expect("schedule is nonempty");
    let density_svg = density_svg(u, &grid, *p, &format!("mu_p density, torus pair, p = {p}"))?;
    Ok(TorusHodge { n: cfg.n, positions: [a, b], stages, table, density_svg })
}

#[derive(Clone, Debug, Serialize)]
pub struct TorusDiffuse {
    pub n: usize,
    pub rows: Vec<DiffuseRow>,
    #[serde(skip)]
    pub density_svg: String,
}

pub fn torus_diffuse(cfg: &ExperimentConfig) -> Result<TorusDiffuse, RunError> {
    let grid = Grid2D::unit_torus(cfg.n).tag("grid")?;
    let rows = diffuse_measure_experiment(&grid, &cfg.p, cfg.m.as_deref()).tag("diffuse")?;
    let last = rows.last().expect("schedule is nonempty");
    let u = S1Field::from_phase(&grid, |x| 2.0 * PI * last.m as f64 * x[0]);
    let density_svg = density_svg(&u, &grid, last.p, &format!("mu_p density, plane wave m = {}", last.m))?;
    Ok(TorusDiffuse { n: cfg.n, rows, density_svg })
}

#[derive(Clone, Debug, Serialize)]
pub struct MinmaxRow {
    pub p: f64,
    pub max_energy: f64,
    /// `(2-p) max_y E(h_y)`.
    pub scaled_max: f64,
    pub argmax_y1: f64,
    pub argmax_y2: f64,
    pub witness_y1: f64,
    pub witness_y2: f64,
    pub witness_mean: f64,
    pub witness_energy: f64,
    pub continuity_ratio: f64,
    pub shifted: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MinmaxSurface {
    pub n: usize,
    pub rows: Vec<MinmaxRow>,
    pub witnesses: Vec<Witness>,
    /// Largest over smallest `scaled_max`.
    pub bound_spread: f64,
    #[serde(skip)]
    pub surfaces: Vec<FamilySurface>,
    #[serde(skip)]
    pub surface_svg: String,
}

impl MinmaxSurface {
    pub fn surface_csv(&self) -> String {
        #[derive(Serialize)]
        struct Row {
            p: f64,
            y1: f64,
            y2: f64,
            energy: f64,
            mean1: f64,
            mean2: f64,
        }
        let rows: Vec<Row> = self
            .surfaces
            .iter()
            .flat_map(|s| {
                s.samples.iter().map(|x| Row {
                    p: s.p,
                    y1: x.y[0],
                    y2: x.y[1],
                    energy: x.energy,
                    mean1: x.mean[0],
                    mean2: x.mean[1],
                })
            })
            .collect();
        csv_rows(&rows)
    }
}

/// Energy surfaces of the family `h_y` on the centered unit square.
pub fn minmax_surface(cfg: &ExperimentConfig) -> Result<MinmaxSurface, RunError> {
    let grid = Grid2D::centered_unit_square(cfg.n).tag("grid")?;
    let polar = PolarGrid { rings: cfg.rings, angles: cfg.angles, angle_offset: 0.0 };
    let mut rows = Vec::new();
    let mut witnesses = Vec::new();
    let mut surfaces = Vec::new();
    for &p in &cfg.p {
        let mut params = EnergyParams::new(p);
        params.eps_penalty = cfg.eps.resolve(grid.h());
        let s = family_energy_surface(&grid, &DomainMap::Identity, polar, &params, cfg.threads)
            .tag(format!("p = {p} surface"))?;
        let w = mean_zero_witness(&s);
        let top = &s.samples[s.argmax];
        rows.push(MinmaxRow {
            p,
            max_energy: s.max_energy(),
            scaled_max: (2.0 - p) * s.max_energy(),
            argmax_y1: top.y[0],
            argmax_y2: top.y[1],
            witness_y1: w.y[0],
            witness_y2: w.y[1],
            witness_mean: w.mean_norm,
            witness_energy: w.energy,
            continuity_ratio: s.continuity_ratio(),
            shifted: s.shifted,
        });
        witnesses.push(w);
        surfaces.push(s);
    }
    let lo = rows.iter().map(|r| r.scaled_max).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|r| r.scaled_max).fold(0.0, f64::max);
    let last = surfaces.last().expect("schedule is nonempty");
    let samples: Vec<(usize, usize, f64)> = last.samples.iter().map(|s| (s.ring, s.angle, s.energy)).collect();
    let surface_svg = polar_svg(
        &samples,
        last.polar.rings,
        last.polar.angles,
        last.polar.angle_offset,
        &format!("E(h_y) over y, p = {}", last.p),
    );
    Ok(MinmaxSurface { n: cfg.n, rows, witnesses, bound_spread: hi / lo, surfaces, surface_svg })
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleCheck {
    pub name: String,
    pub value: f64,
    pub reference: f64,
    pub error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl OracleCheck {
    fn relative(name: String, value: f64, reference: f64, tolerance: f64) -> Self {
        let error = (value - reference).abs() / reference.abs().max(f64::MIN_POSITIVE);
        Self { name, value, reference, error, tolerance, pass: error <= tolerance }
    }

    fn absolute(name: String, value: f64, reference: f64, tolerance: f64) -> Self {
        let error = (value - reference).abs();
        Self { name, value, reference, error, tolerance, pass: error <= tolerance }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleSuite {
    pub checks: Vec<OracleCheck>,
    pub all_pass: bool,
}

/// Closed-form checks; no solver is run.
pub fn oracle_suite(cfg: &ExperimentConfig) -> Result<OracleSuite, RunError> {
    let mut checks = Vec::new();
    let h = 1.0 / cfg.n as f64;
    // the mask of a slightly larger disk covers every cell meeting B_1
    let grid = Grid2D::disk(1.1, h).tag("grid")?;
    for kappa in [1, 2] {
        let u = exact_vortex_field(kappa, [0.0, 0.0], &grid);
        for &p in &cfg.p {
            let dens = energy_density(&u, &grid, &EnergyParams::new(p)).tag("vortex energy")?;
            let e = diagnostics::annulus_integral(&dens, &grid, [0.0, 0.0], 0.1, 1.0).tag("vortex energy")?;
            checks.push(OracleCheck::relative(
                format!("vortex energy kappa={kappa} p={p}"),
                e,
                oracle_vortex_energy(kappa, p, 0.1, 1.0),
                1e-2,
            ));
        }
    }
    for p in [1.5, 1.7, 1.9, 2.0] {
        checks.push(OracleCheck::absolute(format!("c(2,{p})"), c_np(2, p).tag("c(n,p)")?, 1.0, 0.0));
    }
    checks.push(OracleCheck::absolute("c(3,2)".into(), c_np(3, 2.0).tag("c(n,p)")?, 2.0, 1e-8));
    checks.push(OracleCheck::absolute("c(4,2)".into(), c_np(4, 2.0).tag("c(n,p)")?, PI, 1e-8));
    checks.push(OracleCheck::absolute("c(3,1.5)".into(), c_np(3, 1.5).tag("c(n,p)")?, midpoint_c3(1.5, 1_000_000), 1e-6));
    for p in [1.5, 1.7, 1.9] {
        checks.push(OracleCheck::absolute(
            format!("gradient p={p}"),
            gradient_check(p, cfg.seed).tag("gradient check")?,
            0.0,
            1e-5,
        ));
    }
    let torus = Grid2D::unit_torus(cfg.n.min(128)).tag("grid")?;
    for row in diffuse_measure_experiment(&torus, &[1.5, 1.7, 1.9], None).tag("diffuse")? {
        checks.push(OracleCheck::relative(format!("diffuse mass p={}", row.p), row.mass, row.closed_form, 1e-12));
    }
    let worst = hodge_random_check(&Grid2D::unit_torus(32).tag("grid")?, 10, cfg.seed).tag("hodge")?;
    checks.push(OracleCheck::absolute("hodge reconstruction".into(), worst, 0.0, 1e-8));
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(OracleSuite { checks, all_pass })
}

/// `int_{-1}^{1} (1 - t^2)^{(2-p)/2} dt` by the midpoint rule.
pub fn midpoint_c3(p: f64, n: usize) -> f64 {
    let w = 2.0 / n as f64;
    (0..n).map(|i| (1.0 - (-1.0 + (i as f64 + 0.5) * w).powi(2)).powf(0.5 * (2.0 - p))).sum::<f64>() * w
}

/// Relative error of `gl_gradient` against central differences on a
/// random relaxed field over a 16 x 16 torus.
pub fn gradient_check(p: f64, seed: u64) -> pharmonic::Result<f64> {
    let grid = Grid2D::torus(16, 16, 1.0 / 16.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ p.to_bits());
    let values: Vec<[f64; 2]> = (0..grid.num_nodes()).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
    let u = S1Field::new(&grid, values.clone(), FieldKind::Relaxed)?;
    let params = EnergyParams::new(p).with_penalty(0.3).with_delta_reg(1e-2);
    let g = gl_gradient(&u, &grid, &params)?;
    let step = 1e-6;
    let (mut num, mut den) = (0.0, 0.0);
    for n in 0..grid.num_nodes() {
        for c in 0..2 {
            let mut plus = values.clone();
            let mut minus = values.clone();
            plus[n][c] += step;
            minus[n][c] -= step;
            let ep = gl_energy(&S1Field::new(&grid, plus, FieldKind::Relaxed)?, &grid, &params)?;
            let em = gl_energy(&S1Field::new(&grid, minus, FieldKind::Relaxed)?, &grid, &params)?;
            let fd = (ep - em) / (2.0 * step);
            num += (fd - g[n][c]).powi(2);
            den += g[n][c].powi(2);
        }
    }
    Ok((num / den).sqrt())
}

/// Worst reconstruction or orthogonality defect over random one-forms.
pub fn hodge_random_check(grid: &Grid2D, count: usize, seed: u64) -> pharmonic::Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let mut j = OneForm2D::zeros(grid);
        j.ax.iter_mut().chain(j.ay.iter_mut()).for_each(|v| *v = rng.gen_range(-1.0..1.0));
        let parts = hodge_decompose(&j, grid)?;
        let (e, c, hm) = (parts.exact(grid), parts.coexact(grid), parts.harmonic(grid));
        let n2 = j.l2_norm(grid).powi(2);
        worst = worst
            .max(parts.residual)
            .max(e.dot(&c, grid).abs() / n2)
            .max(e.dot(&hm, grid).abs() / n2)
            .max(c.dot(&hm, grid).abs() / n2);
    }
    Ok(worst)
}

/// Cell values of a density restricted to active cells, for plotting.
fn active_cells(d: &ScalarField, grid: &Grid2D) -> Vec<Option<f64>> {
    (0..grid.num_cells()).map(|c| grid.cell_active(c).then(|| d.values[c])).collect()
}
