//! The local stage: pointwise constitutive solves along the ascent search
//! direction, followed by the dual recovery.
//!
//! Every quantity lives at the shared Gauss points. Storage is time-major:
//! entry `t * n_gauss + g` holds Gauss point `g` at time step `t + 1`
//! (the state at `t = 0` is the prescribed initial condition).
//!
//! Between stages only the "combinations" are kept: `A = sigma - H eps`,
//! `beta = Gamma - h_v v`, `delta = W - h_zw Z`, `gamma = q - h_rho rho`.
//! They are invariant along the descent direction, so the global stage reads
//! them directly and the next local stage rebuilds its inputs from them.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use crate::constitutive::{invert_local_operator, voigt_identity, Material, SearchDirections};
use crate::error::{Error, Result};

/// Inputs of the local stage at one point and time step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LocalInputs {
    pub a_bar: [f64; 3],
    pub beta_bar: [f64; 2],
    pub delta_bar: [f64; 2],
    pub gamma_bar: f64,
}

/// Global-stage fields evaluated at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GlobalPoint {
    pub rho: f64,
    pub grad_rho: [f64; 2],
    pub v: [f64; 2],
    pub eps: [f64; 3],
}

/// Dual quantities at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Duals {
    pub sigma: [f64; 3],
    pub gamma_inertia: [f64; 2],
    pub w: [f64; 2],
    pub q: f64,
}

/// Hatted primals at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LocalPrimals {
    pub rho: f64,
    pub v: [f64; 2],
    pub eps: [f64; 3],
    pub z: [f64; 2],
}

fn mat_vec(m: &Matrix3<f64>, x: [f64; 3]) -> [f64; 3] {
    let y = m * Vector3::from(x);
    [y[0], y[1], y[2]]
}

/// Bars from global fields and their duals.
pub fn compute_local_inputs(global: &GlobalPoint, duals: &Duals, sd: &SearchDirections) -> LocalInputs {
    let he = mat_vec(&sd.h_eps_sigma, global.eps);
    LocalInputs {
        a_bar: [duals.sigma[0] + he[0], duals.sigma[1] + he[1], duals.sigma[2] + he[2]],
        beta_bar: [
            duals.gamma_inertia[0] + sd.h_v_gamma * global.v[0],
            duals.gamma_inertia[1] + sd.h_v_gamma * global.v[1],
        ],
        delta_bar: [
            duals.w[0] + sd.h_zw * global.grad_rho[0],
            duals.w[1] + sd.h_zw * global.grad_rho[1],
        ],
        gamma_bar: duals.q + sd.h_rho_q * global.rho,
    }
}

/// One backward Euler step of `d rho/dt + h rho = gamma`.
#[inline]
pub fn rho_step(gamma_bar: f64, rho_prev: f64, dt: f64, h_rho_q: f64) -> f64 {
    (gamma_bar + rho_prev / dt) / (1.0 / dt + h_rho_q)
}

/// Density series over steps `1..=N` from `rho0`.
pub fn solve_rho_hat(gamma_bar: &[f64], rho0: f64, dt: f64, h_rho_q: f64) -> Vec<f64> {
    let mut prev = rho0;
    gamma_bar
        .iter()
        .map(|&g| {
            prev = rho_step(g, prev, dt, h_rho_q);
            prev
        })
        .collect()
}

/// `(V + H)^{-1} (A + f(rho) I)`; `inverse` from [`invert_local_operator`].
#[inline]
pub fn solve_eps_hat(a_bar: [f64; 3], rho_hat: f64, material: &Material, inverse: &Matrix3<f64>) -> [f64; 3] {
    let f = material.pressure(rho_hat);
    let i = voigt_identity();
    mat_vec(inverse, [a_bar[0] + f * i[0], a_bar[1] + f * i[1], a_bar[2] + f * i[2]])
}

/// One backward Euler step of `rho dv/dt + h v = beta`. Returns the new
/// velocity and whether the density had to be floored.
#[inline]
pub fn v_step(beta_bar: [f64; 2], rho_hat: f64, v_prev: [f64; 2], dt: f64, h_v: f64, floor: f64) -> Result<([f64; 2], bool)> {
    let clamped = rho_hat <= 0.0;
    let rho_den = if clamped { floor } else { rho_hat };
    let den = rho_den / dt + h_v;
    if !(den > 0.0) {
        return Err(Error::Solver(format!("local velocity equation is singular (denominator {den:e})")));
    }
    // the floor only guards the denominator; the inertia term keeps rho_hat
    let v = [
        (beta_bar[0] + rho_hat * v_prev[0] / dt) / den,
        (beta_bar[1] + rho_hat * v_prev[1] / dt) / den,
    ];
    Ok((v, clamped))
}

/// Velocity series over steps `1..=N` from rest.
pub fn solve_v_hat(beta_bar: &[[f64; 2]], rho_hat: &[f64], dt: f64, h_v: f64, floor: f64) -> Result<Vec<[f64; 2]>> {
    let mut prev = [0.0; 2];
    beta_bar
        .iter()
        .zip(rho_hat)
        .map(|(&b, &r)| {
            prev = v_step(b, r, prev, dt, h_v, floor)?.0;
            Ok(prev)
        })
        .collect()
}

#[inline]
pub fn solve_z_hat(delta_bar: [f64; 2], rho_hat: f64, v_hat: [f64; 2], h_zw: f64) -> [f64; 2] {
    [
        (delta_bar[0] - rho_hat * v_hat[0]) / h_zw,
        (delta_bar[1] - rho_hat * v_hat[1]) / h_zw,
    ]
}

/// Duals recovered along the ascent direction.
pub fn dual_update(inputs: &LocalInputs, hat: &LocalPrimals, sd: &SearchDirections) -> Duals {
    let he = mat_vec(&sd.h_eps_sigma, hat.eps);
    Duals {
        sigma: [inputs.a_bar[0] - he[0], inputs.a_bar[1] - he[1], inputs.a_bar[2] - he[2]],
        gamma_inertia: [
            inputs.beta_bar[0] - sd.h_v_gamma * hat.v[0],
            inputs.beta_bar[1] - sd.h_v_gamma * hat.v[1],
        ],
        // equals delta_bar - h_zw z by construction of z, without the cancellation
        w: [hat.rho * hat.v[0], hat.rho * hat.v[1]],
        q: inputs.gamma_bar - sd.h_rho_q * hat.rho,
    }
}

/// Precomputed constants of the pointwise solves.
#[derive(Debug, Clone)]
pub struct LocalSolver {
    pub material: Material,
    pub sd: SearchDirections,
    pub dt: f64,
    pub rho0: f64,
    pub rho_floor: f64,
    inverse: Matrix3<f64>,
}

impl LocalSolver {
    pub fn new(material: Material, sd: SearchDirections, dt: f64, rho_floor: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        let inverse = invert_local_operator(&material, &sd)?;
        Ok(Self {
            rho0: material.rho0(),
            material,
            sd,
            dt,
            rho_floor,
            inverse,
        })
    }

    /// Solves one point at one step given the previous hatted state.
    pub fn solve_point(&self, inputs: &LocalInputs, rho_prev: f64, v_prev: [f64; 2]) -> Result<(LocalPrimals, bool)> {
        let rho = rho_step(inputs.gamma_bar, rho_prev, self.dt, self.sd.h_rho_q);
        let eps = solve_eps_hat(inputs.a_bar, rho, &self.material, &self.inverse);
        let (v, clamped) = v_step(inputs.beta_bar, rho, v_prev, self.dt, self.sd.h_v_gamma, self.rho_floor)?;
        let z = solve_z_hat(inputs.delta_bar, rho, v, self.sd.h_zw);
        Ok((LocalPrimals { rho, v, eps, z }, clamped))
    }
}

/// Local-stage storage over all Gauss points and time steps.
#[derive(Debug, Clone)]
pub struct GaussHistory {
    n_gauss: usize,
    n_steps: usize,
    pub rho_hat: Vec<f64>,
    pub v_hat: Vec<[f64; 2]>,
    pub eps_hat: Vec<[f64; 3]>,
    pub a_hat: Vec<[f64; 3]>,
    pub beta_hat: Vec<[f64; 2]>,
    pub delta_hat: Vec<[f64; 2]>,
    pub gamma_hat: Vec<f64>,
}

impl GaussHistory {
    /// Zero combinations, as required by the initialization.
    pub fn new(n_gauss: usize, n_steps: usize) -> Self {
        let n = n_gauss * n_steps;
        Self {
            n_gauss,
            n_steps,
            rho_hat: vec![0.0; n],
            v_hat: vec![[0.0; 2]; n],
            eps_hat: vec![[0.0; 3]; n],
            a_hat: vec![[0.0; 3]; n],
            beta_hat: vec![[0.0; 2]; n],
            delta_hat: vec![[0.0; 2]; n],
            gamma_hat: vec![0.0; n],
        }
    }

    pub fn n_gauss(&self) -> usize {
        self.n_gauss
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    #[inline]
    pub fn index(&self, step: usize, g: usize) -> usize {
        step * self.n_gauss + g
    }

    pub fn step_range(&self, step: usize) -> std::ops::Range<usize> {
        step * self.n_gauss..(step + 1) * self.n_gauss
    }

    /// Hatted primals at one entry.
    pub fn primals(&self, i: usize, sd: &SearchDirections) -> LocalPrimals {
        let duals_w = [self.rho_hat[i] * self.v_hat[i][0], self.rho_hat[i] * self.v_hat[i][1]];
        LocalPrimals {
            rho: self.rho_hat[i],
            v: self.v_hat[i],
            eps: self.eps_hat[i],
            z: [
                (duals_w[0] - self.delta_hat[i][0]) / sd.h_zw,
                (duals_w[1] - self.delta_hat[i][1]) / sd.h_zw,
            ],
        }
    }

    /// Hatted duals at one entry, rebuilt from the stored combinations.
    pub fn duals(&self, i: usize, sd: &SearchDirections) -> Duals {
        let he = mat_vec(&sd.h_eps_sigma, self.eps_hat[i]);
        Duals {
            sigma: [self.a_hat[i][0] + he[0], self.a_hat[i][1] + he[1], self.a_hat[i][2] + he[2]],
            gamma_inertia: [
                self.beta_hat[i][0] + sd.h_v_gamma * self.v_hat[i][0],
                self.beta_hat[i][1] + sd.h_v_gamma * self.v_hat[i][1],
            ],
            // W = rho v holds by construction of z; avoid the cancellation of delta + h_zw z
            w: [self.rho_hat[i] * self.v_hat[i][0], self.rho_hat[i] * self.v_hat[i][1]],
            q: self.gamma_hat[i] + sd.h_rho_q * self.rho_hat[i],
        }
    }
}

/// Running state of the time recursion at every Gauss point.
#[derive(Debug, Clone)]
pub struct Recursion {
    pub rho: Vec<f64>,
    pub v: Vec<[f64; 2]>,
}

impl Recursion {
    /// Initial condition: `rho = rho0`, `v = 0`.
    pub fn initial(n_gauss: usize, rho0: f64) -> Self {
        Self {
            rho: vec![rho0; n_gauss],
            v: vec![[0.0; 2]; n_gauss],
        }
    }
}

/// Runs the local stage for one time step. The bars are rebuilt from the
/// stored combinations and the global fields (`A_bar = A_hat + 2 H eps_bar`,
/// and likewise for the other pairs), then the combinations are overwritten.
/// Returns the number of points whose density was floored.
pub fn local_stage_step(
    solver: &LocalSolver,
    step: usize,
    global: &[GlobalPoint],
    history: &mut GaussHistory,
    recursion: &mut Recursion,
) -> Result<usize> {
    let sd = solver.sd;
    let r = history.step_range(step);
    if global.len() != history.n_gauss {
        return Err(Error::Internal(format!(
            "global field has {} points, history has {}",
            global.len(),
            history.n_gauss
        )));
    }
    let GaussHistory {
        rho_hat,
        v_hat,
        eps_hat,
        a_hat,
        beta_hat,
        delta_hat,
        gamma_hat,
        ..
    } = history;
    let slices = (
        &mut rho_hat[r.clone()],
        &mut v_hat[r.clone()],
        &mut eps_hat[r.clone()],
        &mut a_hat[r.clone()],
        &mut beta_hat[r.clone()],
        &mut delta_hat[r.clone()],
        &mut gamma_hat[r],
    );
    let results: Vec<Result<bool>> = slices
        .0
        .par_iter_mut()
        .zip(slices.1.par_iter_mut())
        .zip(slices.2.par_iter_mut())
        .zip(slices.3.par_iter_mut())
        .zip(slices.4.par_iter_mut())
        .zip(slices.5.par_iter_mut())
        .zip(slices.6.par_iter_mut())
        .zip(recursion.rho.par_iter_mut())
        .zip(recursion.v.par_iter_mut())
        .zip(global.par_iter())
        .map(|(((((((((rho, v), eps), a), beta), delta), gamma), r_prev), v_prev), gl)| {
            let he = mat_vec(&sd.h_eps_sigma, gl.eps);
            let inputs = LocalInputs {
                a_bar: [a[0] + 2.0 * he[0], a[1] + 2.0 * he[1], a[2] + 2.0 * he[2]],
                beta_bar: [
                    beta[0] + 2.0 * sd.h_v_gamma * gl.v[0],
                    beta[1] + 2.0 * sd.h_v_gamma * gl.v[1],
                ],
                delta_bar: [
                    delta[0] + 2.0 * sd.h_zw * gl.grad_rho[0],
                    delta[1] + 2.0 * sd.h_zw * gl.grad_rho[1],
                ],
                gamma_bar: *gamma + 2.0 * sd.h_rho_q * gl.rho,
            };
            let (hat, clamped) = solver.solve_point(&inputs, *r_prev, *v_prev)?;
            let hat_e = mat_vec(&sd.h_eps_sigma, hat.eps);
            *a = [
                inputs.a_bar[0] - 2.0 * hat_e[0],
                inputs.a_bar[1] - 2.0 * hat_e[1],
                inputs.a_bar[2] - 2.0 * hat_e[2],
            ];
            *beta = [
                inputs.beta_bar[0] - 2.0 * sd.h_v_gamma * hat.v[0],
                inputs.beta_bar[1] - 2.0 * sd.h_v_gamma * hat.v[1],
            ];
            *delta = [
                inputs.delta_bar[0] - 2.0 * sd.h_zw * hat.z[0],
                inputs.delta_bar[1] - 2.0 * sd.h_zw * hat.z[1],
            ];
            *gamma = inputs.gamma_bar - 2.0 * sd.h_rho_q * hat.rho;
            *rho = hat.rho;
            *v = hat.v;
            *eps = hat.eps;
            *r_prev = hat.rho;
            *v_prev = hat.v;
            Ok(clamped)
        })
        .collect();
    let mut clamped = 0;
    for r in results {
        if r? {
            clamped += 1;
        }
    }
    Ok(clamped)
}
