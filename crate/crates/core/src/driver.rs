//! The LATIN iteration: initialization, alternating local and global stages,
//! convergence indicators and the iteration history.

use std::time::Instant;

use log::{debug, info, warn};

use crate::assembly::{ConstrainedSystem, Discretization};
use crate::config::{BoundaryCondition, CaseConfig, SolverPath};
use crate::constitutive::{build_search_directions, voigt_viscosity, Material, SearchDirections};
use crate::error::{Error, Result};
use crate::global_stage::{
    full_order_correction, initialize_origin, pgd_global_stage, target_rhs, FieldKind, ModeGeneration, PgdField,
};
use crate::local_stage::{local_stage_step, GaussHistory, GlobalPoint, LocalSolver, Recursion};
use crate::mesh::Mesh;

/// Discretized problem: operators, boundary data and loads on the time grid.
#[derive(Debug, Clone)]
pub struct Problem {
    pub disc: Discretization,
    pub material: Material,
    pub sd: SearchDirections,
    pub n_steps: usize,
    pub dt: f64,
    /// Density Dirichlet DoFs and their values per step (steps `1..=N`).
    pub rho_fixed: Vec<usize>,
    pub rho_values: Vec<Vec<f64>>,
    /// Velocity Dirichlet DoFs and their values per step.
    pub v_fixed: Vec<usize>,
    pub v_values: Vec<Vec<f64>>,
    /// Body force plus pressure tractions per step.
    pub loads: Vec<Vec<f64>>,
    pub rho_system: ConstrainedSystem,
    pub v_system: ConstrainedSystem,
}

impl Problem {
    pub fn new(config: &CaseConfig, mesh: Mesh) -> Result<Self> {
        config.validate()?;
        let material = config.material;
        let (lo, hi) = mesh.bounding_box();
        let l_c = config
            .solver
            .l_c
            .unwrap_or_else(|| (hi[0] - lo[0]).max(hi[1] - lo[1]));
        let t_v = config.solver.t_v.unwrap_or(config.t_end);
        let t_rho = config.solver.t_rho.unwrap_or(config.t_end / 10.0);
        let sd = build_search_directions(&material, l_c, config.t_end, t_v, t_rho)?;
        let disc = Discretization::new(mesh)?;
        let mesh = disc.mesh();
        let n_steps = config.n_steps;
        let dt = config.dt();
        let times: Vec<f64> = (1..=n_steps).map(|k| k as f64 * dt).collect();

        // velocity Dirichlet sets take precedence at shared nodes
        let mut v_bc: Vec<Option<[f64; 2]>> = vec![None; mesh.n_q2_nodes()];
        let mut rho_bc: Vec<Option<&crate::config::Trajectory>> = vec![None; mesh.n_q1_nodes()];
        for (name, bc) in &config.boundary {
            match bc {
                BoundaryCondition::NoSlip => {
                    for n in mesh.boundary_q2_nodes(name)? {
                        v_bc[n] = Some([0.0, 0.0]);
                    }
                }
                BoundaryCondition::Velocity(v) => {
                    for n in mesh.boundary_q2_nodes(name)? {
                        v_bc[n] = Some(*v);
                    }
                }
                BoundaryCondition::Pressure(p) => {
                    for n in mesh.boundary_q1_nodes(name)? {
                        rho_bc[n].get_or_insert(p);
                    }
                }
            }
        }
        let rho_fixed: Vec<usize> = (0..rho_bc.len()).filter(|&i| rho_bc[i].is_some()).collect();
        let v_fixed: Vec<usize> = (0..v_bc.len())
            .filter(|&n| v_bc[n].is_some())
            .flat_map(|n| [2 * n, 2 * n + 1])
            .collect();
        let rho_values: Vec<Vec<f64>> = times
            .iter()
            .map(|&t| {
                rho_fixed
                    .iter()
                    .map(|&i| material.density(rho_bc[i].expect("fixed").value(t)))
                    .collect()
            })
            .collect();
        let v_step_values: Vec<f64> = v_fixed.iter().map(|&d| v_bc[d / 2].expect("fixed")[d % 2]).collect();
        let v_values = vec![v_step_values; n_steps];

        let body = disc.body_force_load(config.body_force);
        let mut loads = Vec::with_capacity(n_steps);
        for &t in &times {
            let mut f = body.clone();
            for (name, bc) in &config.boundary {
                if let BoundaryCondition::Pressure(p) = bc {
                    disc.add_pressure_traction(name, p.value(t), &mut f)?;
                }
            }
            loads.push(f);
        }

        let (h_rr, h_vv) = disc.global_operators(&material, &sd);
        let rho_system = ConstrainedSystem::new(&h_rr, &rho_fixed)?;
        let v_system = ConstrainedSystem::new(&h_vv, &v_fixed)?;
        Ok(Self {
            disc,
            material,
            sd,
            n_steps,
            dt,
            rho_fixed,
            rho_values,
            v_fixed,
            v_values,
            loads,
            rho_system,
            v_system,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        self.disc.mesh()
    }

    /// `t_k = k dt` for `k = 0..=N`.
    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|k| k as f64 * self.dt).collect()
    }

    /// Time weights of steps `1..=N`.
    pub fn time_weights(&self) -> Vec<f64> {
        vec![self.dt; self.n_steps]
    }

    /// Initialization: zero local combinations, so density solves
    /// `H_rr rho = 0` and velocity `H_vv v = loads`, both with their Dirichlet data.
    pub fn initialize_fields(&self) -> Result<(PgdField, PgdField)> {
        let zero = vec![vec![0.0; self.disc.n_density_dofs()]; self.n_steps];
        let rho = initialize_origin(&self.rho_system, &zero, &self.rho_values)?;
        let v = initialize_origin(&self.v_system, &self.loads, &self.v_values)?;
        Ok((PgdField::new(FieldKind::Density, rho), PgdField::new(FieldKind::Velocity, v)))
    }

    /// Global fields at every Gauss point for one step.
    pub fn eval_global(&self, rho: &[f64], v: &[f64], out: &mut Vec<GlobalPoint>) {
        let n = self.disc.n_gauss();
        let mut rv = vec![0.0; n];
        let mut rg = vec![[0.0; 2]; n];
        let mut vv = vec![[0.0; 2]; n];
        let mut ve = vec![[0.0; 3]; n];
        self.disc.eval_scalar(rho, &mut rv, &mut rg);
        self.disc.eval_vector(v, &mut vv, &mut ve);
        out.clear();
        out.extend((0..n).map(|g| GlobalPoint {
            rho: rv[g],
            grad_rho: rg[g],
            v: vv[g],
            eps: ve[g],
        }));
    }
}

/// Squared-norm accumulators of the two indicators.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IndicatorSums {
    rho_gap: f64,
    rho_size: f64,
    v_gap: f64,
    v_size: f64,
}

fn energy(v: &nalgebra::Matrix3<f64>, e: [f64; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += e[i] * v[(i, j)] * e[j];
        }
    }
    s
}

impl IndicatorSums {
    /// Adds one point with quadrature weight `w` (time weight included).
    pub fn add(&mut self, w: f64, h_rho_q: f64, viscosity: &nalgebra::Matrix3<f64>, bar: (f64, [f64; 3]), hat: (f64, [f64; 3])) {
        let (rb, eb) = bar;
        let (rh, eh) = hat;
        self.rho_gap += w * h_rho_q * (rb - rh).powi(2);
        self.rho_size += 0.5 * w * h_rho_q * (rb * rb + rh * rh);
        let d = [eb[0] - eh[0], eb[1] - eh[1], eb[2] - eh[2]];
        self.v_gap += w * energy(viscosity, d);
        self.v_size += 0.5 * w * (energy(viscosity, eb) + energy(viscosity, eh));
    }

    /// `(eta_v, eta_rho)`, with 0/0 read as 0.
    pub fn finish(&self) -> Result<(f64, f64)> {
        let ratio = |gap: f64, size: f64| -> Result<f64> {
            if gap < 0.0 || size < 0.0 {
                return Err(Error::Internal("negative indicator norm".into()));
            }
            if gap == 0.0 {
                return Ok(0.0);
            }
            Ok((gap / size).sqrt())
        };
        Ok((ratio(self.v_gap, self.v_size)?, ratio(self.rho_gap, self.rho_size)?))
    }
}

/// Indicators of a complete space-time pair. `time_weights[t]` weighs step
/// `t`, `gauss_weights[g]` is the quadrature weight times det J; the slices
/// are time-major like [`GaussHistory`].
pub fn indicators(
    time_weights: &[f64],
    gauss_weights: &[f64],
    material: &Material,
    sd: &SearchDirections,
    bar: (&[f64], &[[f64; 3]]),
    hat: (&[f64], &[[f64; 3]]),
) -> Result<(f64, f64)> {
    let n_g = gauss_weights.len();
    let v = voigt_viscosity(material);
    let mut sums = IndicatorSums::default();
    for (t, wt) in time_weights.iter().enumerate() {
        for (g, wg) in gauss_weights.iter().enumerate() {
            let i = t * n_g + g;
            sums.add(wt * wg, sd.h_rho_q, &v, (bar.0[i], bar.1[i]), (hat.0[i], hat.1[i]));
        }
    }
    sums.finish()
}

/// One row of the convergence history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub eta_v: f64,
    pub eta_rho: f64,
    pub n_modes_v: usize,
    pub n_modes_rho: usize,
    pub wall_seconds: f64,
}

/// Nodal trajectories at `t_0..t_N` plus the iteration history.
#[derive(Debug, Clone)]
pub struct Solution {
    pub material: Material,
    pub times: Vec<f64>,
    /// Q1 density per step.
    pub density: Vec<Vec<f64>>,
    /// Interleaved Q2 velocity per step.
    pub velocity: Vec<Vec<f64>>,
    pub history: Vec<IterationRecord>,
    pub converged: bool,
    pub density_field: Option<PgdField>,
    pub velocity_field: Option<PgdField>,
    /// Local-stage state of the last iteration (LATIN runs only).
    pub local: Option<GaussHistory>,
}

impl Solution {
    /// Pressure from the state law at Q1 nodes.
    pub fn pressure(&self, step: usize) -> Vec<f64> {
        self.density[step].iter().map(|&r| self.material.pressure(r)).collect()
    }

    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }
}

/// Settings of one LATIN run, taken from the case.
#[derive(Debug, Clone, Copy)]
pub struct LatinSettings {
    pub eta_c: f64,
    pub max_iterations: usize,
    pub kappa: f64,
    pub relaxation: f64,
    pub mode_generation: ModeGeneration,
    pub path: SolverPath,
    pub rho_floor: f64,
}

impl LatinSettings {
    pub fn from_config(config: &CaseConfig) -> Self {
        let s = &config.solver;
        Self {
            eta_c: s.effective_eta_c(),
            max_iterations: s.max_iterations,
            kappa: s.kappa,
            relaxation: s.relaxation,
            mode_generation: ModeGeneration {
                max_iterations: s.pgd_fixed_point_max,
                tolerance: 1e-2,
            },
            path: s.path,
            rho_floor: s.rho_floor,
        }
    }
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Fused pass over the time grid: evaluates the global fields, measures them
/// against the stored local solution (when `measure`), then runs the next
/// local stage in place.
fn local_pass(
    problem: &Problem,
    solver: &LocalSolver,
    rho: &PgdField,
    v: &PgdField,
    history: &mut GaussHistory,
    measure: bool,
    iteration: usize,
) -> Result<Option<(f64, f64)>> {
    let viscosity = voigt_viscosity(&problem.material);
    let mut recursion = Recursion::initial(problem.disc.n_gauss(), solver.rho0);
    let mut sums = IndicatorSums::default();
    let mut global = Vec::with_capacity(problem.disc.n_gauss());
    let mut clamped = 0;
    for t in 0..problem.n_steps {
        let rt = rho.reconstruct(t);
        let vt = v.reconstruct(t);
        if !all_finite(&rt) || !all_finite(&vt) {
            return Err(Error::Divergence {
                iteration,
                stage: "global".into(),
            });
        }
        problem.eval_global(&rt, &vt, &mut global);
        if measure {
            let r = history.step_range(t);
            for (g, i) in r.enumerate() {
                sums.add(
                    problem.dt * problem.disc.weight(g),
                    problem.sd.h_rho_q,
                    &viscosity,
                    (global[g].rho, global[g].eps),
                    (history.rho_hat[i], history.eps_hat[i]),
                );
            }
        }
        clamped += local_stage_step(solver, t, &global, history, &mut recursion)?;
    }
    if clamped > 0 {
        warn!("iteration {iteration}: local density non-positive at {clamped} point-steps, floored in the velocity update");
    }
    if !all_finite(&history.rho_hat) || !history.v_hat.iter().all(|v| v[0].is_finite() && v[1].is_finite()) {
        return Err(Error::Divergence {
            iteration,
            stage: "local".into(),
        });
    }
    if measure {
        Ok(Some(sums.finish()?))
    } else {
        Ok(None)
    }
}

fn blend_coefficients(field: &mut PgdField, previous: &[Vec<f64>], relaxation: f64) {
    if relaxation == 1.0 {
        return;
    }
    for (i, coef) in field.coefficients.iter_mut().enumerate() {
        for (t, c) in coef.iter_mut().enumerate() {
            let old = previous.get(i).map_or(0.0, |p| p[t]);
            *c = relaxation * *c + (1.0 - relaxation) * old;
        }
    }
}

fn blend_full(field: &mut PgdField, previous: Option<Vec<Vec<f64>>>, relaxation: f64) {
    if relaxation == 1.0 {
        return;
    }
    if let (Some(new), Some(old)) = (field.full.as_mut(), previous) {
        for (n, o) in new.iter_mut().zip(old) {
            for (a, b) in n.iter_mut().zip(o) {
                *a = relaxation * *a + (1.0 - relaxation) * b;
            }
        }
    }
}

/// Global stage of one field.
#[allow(clippy::too_many_arguments)]
fn global_field_stage(
    field: &mut PgdField,
    targets: &[Vec<f64>],
    system: &ConstrainedSystem,
    weights: &[f64],
    settings: &LatinSettings,
    converged: bool,
) -> Result<bool> {
    match settings.path {
        SolverPath::Full => {
            let previous = field.full.take();
            field.full = Some(full_order_correction(system, targets)?);
            blend_full(field, previous, settings.relaxation);
            Ok(false)
        }
        SolverPath::Pgd => {
            let previous = field.coefficients.clone();
            let report = pgd_global_stage(
                field,
                targets,
                system,
                weights,
                settings.kappa,
                settings.mode_generation,
                !converged,
            )?;
            blend_coefficients(field, &previous, settings.relaxation);
            debug!(
                "{} stage: residual {:e} -> {:e}, modes {}",
                field.kind.name(),
                report.residual_before,
                report.residual_after,
                field.n_modes()
            );
            Ok(report.mode_added)
        }
    }
}

/// Runs LATIN until `max(eta_v, eta_rho) < eta_c` or the iteration cap.
/// `on_iteration` sees every history row as soon as it exists.
pub fn run_latin(
    problem: &Problem,
    settings: &LatinSettings,
    mut on_iteration: impl FnMut(&IterationRecord),
) -> Result<Solution> {
    let start = Instant::now();
    let solver = LocalSolver::new(problem.material, problem.sd, problem.dt, settings.rho_floor)?;
    let (mut rho, mut v) = problem.initialize_fields()?;
    let mut history = GaussHistory::new(problem.disc.n_gauss(), problem.n_steps);
    let weights = problem.time_weights();
    local_pass(problem, &solver, &rho, &v, &mut history, false, 0)?;

    let mut records = Vec::new();
    let mut converged = false;
    let (mut rho_done, mut v_done) = (false, false);
    for iteration in 1..=settings.max_iterations {
        let rho_targets: Vec<Vec<f64>> = (0..problem.n_steps)
            .map(|t| {
                let r = history.step_range(t);
                let f = problem
                    .disc
                    .rhs_scalar_from_gauss(&history.delta_hat[r.clone()], &history.gamma_hat[r]);
                target_rhs(&problem.rho_system, &f, &rho.origin[t])
            })
            .collect();
        global_field_stage(&mut rho, &rho_targets, &problem.rho_system, &weights, settings, rho_done)?;
        drop(rho_targets);
        let v_targets: Vec<Vec<f64>> = (0..problem.n_steps)
            .map(|t| {
                let r = history.step_range(t);
                let f = problem.disc.rhs_vector_from_gauss(
                    &history.a_hat[r.clone()],
                    &history.beta_hat[r],
                    &problem.loads[t],
                );
                target_rhs(&problem.v_system, &f, &v.origin[t])
            })
            .collect();
        global_field_stage(&mut v, &v_targets, &problem.v_system, &weights, settings, v_done)?;
        drop(v_targets);

        let (eta_v, eta_rho) = local_pass(problem, &solver, &rho, &v, &mut history, true, iteration)?
            .ok_or_else(|| Error::Internal("indicator pass produced no value".into()))?;
        if !eta_v.is_finite() || !eta_rho.is_finite() {
            return Err(Error::Divergence {
                iteration,
                stage: "indicator".into(),
            });
        }
        let record = IterationRecord {
            iteration,
            eta_v,
            eta_rho,
            n_modes_v: v.n_modes(),
            n_modes_rho: rho.n_modes(),
            wall_seconds: start.elapsed().as_secs_f64(),
        };
        info!(
            "iteration {iteration}: eta_v {eta_v:.3e} eta_rho {eta_rho:.3e} modes v {} rho {}",
            record.n_modes_v, record.n_modes_rho
        );
        on_iteration(&record);
        records.push(record);
        rho_done |= eta_rho < settings.eta_c;
        v_done |= eta_v < settings.eta_c;
        if eta_v.max(eta_rho) < settings.eta_c {
            converged = true;
            break;
        }
    }
    if !converged {
        warn!("LATIN stopped after {} iterations without convergence", settings.max_iterations);
    }

    let mut density = vec![vec![problem.material.rho0(); problem.disc.n_density_dofs()]];
    let mut velocity = vec![vec![0.0; problem.disc.n_velocity_dofs()]];
    for t in 0..problem.n_steps {
        density.push(rho.reconstruct(t));
        velocity.push(v.reconstruct(t));
    }
    Ok(Solution {
        material: problem.material,
        times: problem.times(),
        density,
        velocity,
        history: records,
        converged,
        density_field: Some(rho),
        velocity_field: Some(v),
        local: Some(history),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_config, CHANNEL_COARSE_CASE};

    #[test]
    fn indicator_identities() {
        let m = Material::channel_default();
        let sd = build_search_directions(&m, 2.5, 5e-3, 5e-3, 5e-4).unwrap();
        let tw = [0.5, 0.5];
        let gw = [0.1, 0.2, 0.3];
        let rho: Vec<f64> = (0..6).map(|i| 1e-5 * (1.0 + i as f64)).collect();
        let eps: Vec<[f64; 3]> = (0..6).map(|i| [1e-3 * i as f64, -2e-3, 5e-4]).collect();
        let (ev, er) = indicators(&tw, &gw, &m, &sd, (&rho, &eps), (&rho, &eps)).unwrap();
        assert_eq!((ev, er), (0.0, 0.0));
        let rho2: Vec<f64> = rho.iter().map(|r| 2.0 * r).collect();
        let eps2: Vec<[f64; 3]> = eps.iter().map(|e| [2.0 * e[0], 2.0 * e[1], 2.0 * e[2]]).collect();
        let (ev, er) = indicators(&tw, &gw, &m, &sd, (&rho2, &eps2), (&rho, &eps)).unwrap();
        assert!((er - (1.0f64 / 2.5).sqrt()).abs() < 1e-12);
        assert!((er - 0.63246).abs() < 1e-5);
        assert!((ev - 0.63246).abs() < 1e-5);
        let swapped = indicators(&tw, &gw, &m, &sd, (&rho, &eps), (&rho2, &eps2)).unwrap();
        assert_eq!(swapped, (ev, er));
        let zero = vec![0.0; 6];
        let zero_e = vec![[0.0; 3]; 6];
        assert_eq!(indicators(&tw, &gw, &m, &sd, (&zero, &zero_e), (&zero, &zero_e)).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn quiescent_case_converges_immediately() {
        let text = CHANNEL_COARSE_CASE
            .replace("mesh.nx = 32", "mesh.nx = 4")
            .replace("mesh.ny = 8", "mesh.ny = 2")
            .replace("bc.inflow = pressure 2", "bc.inflow = pressure 0")
            .replace("bc.outflow = pressure 1", "bc.outflow = pressure 0")
            .replace("material.p0 = 1.0", "material.p0 = 0.0")
            .replace("time.n_steps = 100", "time.n_steps = 5");
        let config = parse_config(&text).unwrap();
        let problem = Problem::new(&config, config.build_mesh().unwrap()).unwrap();
        let sol = run_latin(&problem, &LatinSettings::from_config(&config), |_| {}).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.history.len(), 1);
        assert!(sol.density.iter().flatten().all(|&r| r == 0.0));
        assert!(sol.velocity.iter().flatten().all(|&v| v == 0.0));
    }
}
