//! The global stage: initialization solves, full-order corrections and the
//! PGD path (update of the time functions, rank-one mode generation).
//!
//! Each field is written `x(t) = x0(t) + sum_i lambda_i(t) Lambda_i`. The
//! correction `x - x0` vanishes on Dirichlet DoFs and must satisfy
//! `H_ff (x - x0)(t) = b(t)` with `b(t) = F_loc(t) - H x0(t)` on free rows.

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::assembly::ConstrainedSystem;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Density,
    Velocity,
}

impl FieldKind {
    pub fn name(self) -> &'static str {
        match self {
            FieldKind::Density => "density",
            FieldKind::Velocity => "velocity",
        }
    }
}

/// Space-time field as origin trajectory plus a correction, either in
/// separated form or as a full trajectory (full-order path).
#[derive(Debug, Clone)]
pub struct PgdField {
    pub kind: FieldKind,
    /// Origin per time step (steps `1..=N`).
    pub origin: Vec<Vec<f64>>,
    /// Unit-norm, mutually orthogonal spatial modes.
    pub modes: Vec<Vec<f64>>,
    /// `coefficients[i][t]` multiplies mode `i` at step `t + 1`.
    pub coefficients: Vec<Vec<f64>>,
    /// `H_ff` applied to each mode.
    h_modes: Vec<Vec<f64>>,
    /// Full-order correction per step, used instead of the modes when set.
    pub full: Option<Vec<Vec<f64>>>,
}

impl PgdField {
    pub fn new(kind: FieldKind, origin: Vec<Vec<f64>>) -> Self {
        Self {
            kind,
            origin,
            modes: Vec::new(),
            coefficients: Vec::new(),
            h_modes: Vec::new(),
            full: None,
        }
    }

    pub fn n_steps(&self) -> usize {
        self.origin.len()
    }

    pub fn n_dofs(&self) -> usize {
        self.origin.first().map_or(0, Vec::len)
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// Correction `x(t) - x0(t)` at step index `t`.
    pub fn correction(&self, t: usize) -> Vec<f64> {
        if let Some(full) = &self.full {
            return full[t].clone();
        }
        let mut c = vec![0.0; self.n_dofs()];
        for (mode, coef) in self.modes.iter().zip(&self.coefficients) {
            let a = coef[t];
            if a != 0.0 {
                for (ci, mi) in c.iter_mut().zip(mode) {
                    *ci += a * mi;
                }
            }
        }
        c
    }

    pub fn reconstruct(&self, t: usize) -> Vec<f64> {
        let mut x = self.correction(t);
        for (xi, oi) in x.iter_mut().zip(&self.origin[t]) {
            *xi += oi;
        }
        x
    }

    /// `H_ff` times the correction at step `t` (fixed rows zero).
    fn h_correction(&self, t: usize, system: &ConstrainedSystem) -> Vec<f64> {
        if let Some(full) = &self.full {
            return system.apply_homogeneous(&full[t]);
        }
        let mut y = vec![0.0; self.n_dofs()];
        for (hm, coef) in self.h_modes.iter().zip(&self.coefficients) {
            let a = coef[t];
            for (yi, hi) in y.iter_mut().zip(hm) {
                *yi += a * hi;
            }
        }
        y
    }

    /// Appends a mode; it must already be orthonormalized against the basis.
    pub fn push_mode(&mut self, mode: Vec<f64>, coefficients: Vec<f64>, system: &ConstrainedSystem) {
        self.h_modes.push(system.apply_homogeneous(&mode));
        self.modes.push(mode);
        self.coefficients.push(coefficients);
    }

    fn remove_mode(&mut self, i: usize) {
        self.modes.remove(i);
        self.coefficients.remove(i);
        self.h_modes.remove(i);
    }

    /// Largest |<Lambda_i, Lambda_j> - delta_ij|.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.modes.len() {
            for j in 0..=i {
                let d = dot(&self.modes[i], &self.modes[j]) - if i == j { 1.0 } else { 0.0 };
                worst = worst.max(d.abs());
            }
        }
        worst
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `b(t) = F_loc(t) - H x0(t)` restricted to free rows.
pub fn target_rhs(system: &ConstrainedSystem, f_loc: &[f64], origin: &[f64]) -> Vec<f64> {
    let h0 = system.matrix().mul_vec(origin);
    let mut b: Vec<f64> = f_loc.iter().zip(&h0).map(|(f, h)| f - h).collect();
    system.zero_fixed(&mut b);
    b
}

/// Free-row residuals of the current correction against the targets.
#[derive(Debug, Clone)]
pub struct ResidualSeries {
    pub residuals: Vec<Vec<f64>>,
    pub norms: Vec<f64>,
    /// Time-weighted norm of the targets, the scale for "numerically zero".
    pub reference: f64,
    pub weights: Vec<f64>,
}

impl ResidualSeries {
    pub fn compute(field: &PgdField, targets: &[Vec<f64>], system: &ConstrainedSystem, weights: &[f64]) -> Self {
        let residuals: Vec<Vec<f64>> = targets
            .iter()
            .enumerate()
            .map(|(t, b)| {
                let hc = field.h_correction(t, system);
                b.iter().zip(&hc).map(|(b, h)| b - h).collect()
            })
            .collect();
        let norms = residuals.iter().map(|r| norm(r)).collect();
        let reference = weighted_norm(&targets.iter().map(|b| norm(b)).collect::<Vec<_>>(), weights);
        Self {
            residuals,
            norms,
            reference,
            weights: weights.to_vec(),
        }
    }

    /// `(sum_t w_t |r_t|^2)^(1/2)`.
    pub fn total(&self) -> f64 {
        weighted_norm(&self.norms, &self.weights)
    }
}

fn weighted_norm(norms: &[f64], weights: &[f64]) -> f64 {
    norms.iter().zip(weights).map(|(n, w)| w * n * n).sum::<f64>().sqrt()
}

/// Per-step solves with time-constant operators. Consecutive identical
/// inputs reuse the previous solution.
pub fn initialize_origin(system: &ConstrainedSystem, rhs: &[Vec<f64>], fixed_values: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(rhs.len());
    for t in 0..rhs.len() {
        if t > 0 && rhs[t] == rhs[t - 1] && fixed_values[t] == fixed_values[t - 1] {
            let prev = out[t - 1].clone();
            out.push(prev);
        } else {
            out.push(system.solve(&rhs[t], &fixed_values[t])?);
        }
    }
    Ok(out)
}

/// Exact per-step correction `H_ff^{-1} b(t)`.
pub fn full_order_correction(system: &ConstrainedSystem, targets: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    targets.iter().map(|b| system.solve_homogeneous(b)).collect()
}

/// Reduced operator `R = Phi^T H Phi`.
fn reduced_operator(field: &PgdField) -> DMatrix<f64> {
    let m = field.n_modes();
    DMatrix::from_fn(m, m, |i, j| dot(&field.modes[i], &field.h_modes[j]))
}

/// Replaces all time functions by the Galerkin solution `R a(t) = Phi^T b(t)`.
pub fn pgd_update(field: &mut PgdField, targets: &[Vec<f64>]) -> Result<()> {
    loop {
        let m = field.n_modes();
        if m == 0 {
            return Ok(());
        }
        let r = reduced_operator(field);
        let eig = r.clone().symmetric_eigen();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
        let mut lo_index = 0;
        for (k, &l) in eig.eigenvalues.iter().enumerate() {
            if l < lo {
                lo = l;
                lo_index = k;
            }
            hi = hi.max(l);
        }
        if !(lo > 0.0) || hi / lo > 1e12 {
            // drop the mode carrying most of the weakest eigenvector
            let v = eig.eigenvectors.column(lo_index);
            let worst = (0..m).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap_or(m - 1);
            warn!(
                "{} reduced operator ill-conditioned ({:e}), dropping mode {worst}",
                field.kind.name(),
                hi / lo
            );
            field.remove_mode(worst);
            continue;
        }
        let chol = r
            .cholesky()
            .ok_or_else(|| Error::Internal("reduced operator is not positive definite".into()))?;
        for (t, b) in targets.iter().enumerate() {
            let rhs = DVector::from_iterator(m, field.modes.iter().map(|mode| dot(mode, b)));
            let a = chol.solve(&rhs);
            for i in 0..m {
                field.coefficients[i][t] = a[i];
            }
        }
        return Ok(());
    }
}

/// Fixed-point settings of the mode generation.
#[derive(Debug, Clone, Copy)]
pub struct ModeGeneration {
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for ModeGeneration {
    fn default() -> Self {
        Self {
            max_iterations: 3,
            tolerance: 1e-2,
        }
    }
}

/// Rank-one fit of the residual series, orthonormalized against `basis`.
pub fn pgd_generate_mode(
    residual: &ResidualSeries,
    system: &ConstrainedSystem,
    basis: &[Vec<f64>],
    settings: ModeGeneration,
) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
    let total = residual.total();
    if total == 0.0 || total <= 1e-14 * residual.reference {
        return Ok(None);
    }
    let w = &residual.weights;
    let rs = &residual.residuals;
    let n = rs[0].len();
    let mut lambda: Vec<f64> = residual.norms.clone();
    let mut mode = vec![0.0; n];
    for _ in 0..settings.max_iterations.max(1) {
        let denom: f64 = lambda.iter().zip(w).map(|(l, w)| w * l * l).sum();
        if denom == 0.0 {
            return Ok(None);
        }
        let mut s = vec![0.0; n];
        for ((r, l), wt) in rs.iter().zip(&lambda).zip(w) {
            let c = wt * l / denom;
            if c != 0.0 {
                for (si, ri) in s.iter_mut().zip(r) {
                    *si += c * ri;
                }
            }
        }
        mode = system.solve_homogeneous(&s)?;
        let mn = norm(&mode);
        if mn == 0.0 {
            return Ok(None);
        }
        mode.iter_mut().for_each(|x| *x /= mn);
        let hm = system.apply_homogeneous(&mode);
        let energy = dot(&mode, &hm);
        let new_lambda: Vec<f64> = rs.iter().map(|r| dot(&mode, r) / energy).collect();
        let diff: f64 = new_lambda.iter().zip(&lambda).zip(w).map(|((a, b), w)| w * (a - b).powi(2)).sum();
        let size: f64 = new_lambda.iter().zip(w).map(|(a, w)| w * a * a).sum();
        lambda = new_lambda;
        if diff.sqrt() < settings.tolerance * size.sqrt() {
            break;
        }
    }
    let before = norm(&mode);
    for b in basis {
        let c = dot(&mode, b);
        for (m, bi) in mode.iter_mut().zip(b) {
            *m -= c * bi;
        }
    }
    let after = norm(&mode);
    if after < 1e-8 * before {
        return Ok(None);
    }
    mode.iter_mut().for_each(|x| *x /= after);
    let (imax, _) = mode
        .iter()
        .enumerate()
        .fold((0, 0.0_f64), |acc, (i, x)| if x.abs() > acc.1 { (i, x.abs()) } else { acc });
    if mode[imax] < 0.0 {
        mode.iter_mut().for_each(|x| *x = -*x);
    }
    let hm = system.apply_homogeneous(&mode);
    let energy = dot(&mode, &hm);
    let lambda = rs.iter().map(|r| dot(&mode, r) / energy).collect();
    Ok(Some((mode, lambda)))
}

/// Whether the update left too much residual behind.
pub fn needs_new_mode(before: f64, after: f64, kappa: f64, basis_empty: bool) -> bool {
    if basis_empty {
        return after > 0.0;
    }
    after > kappa * before
}

/// Outcome of one PGD global stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageReport {
    pub residual_before: f64,
    pub residual_after: f64,
    pub mode_added: bool,
}

/// Update, test, generate, update.
pub fn pgd_global_stage(
    field: &mut PgdField,
    targets: &[Vec<f64>],
    system: &ConstrainedSystem,
    weights: &[f64],
    kappa: f64,
    settings: ModeGeneration,
    allow_growth: bool,
) -> Result<StageReport> {
    let before = ResidualSeries::compute(field, targets, system, weights).total();
    pgd_update(field, targets)?;
    let after_series = ResidualSeries::compute(field, targets, system, weights);
    let after = after_series.total();
    let mut mode_added = false;
    if allow_growth && needs_new_mode(before, after, kappa, field.n_modes() == 0) {
        if let Some((mode, lambda)) = pgd_generate_mode(&after_series, system, &field.modes, settings)? {
            field.push_mode(mode, lambda, system);
            pgd_update(field, targets)?;
            mode_added = true;
        }
    }
    let defect = field.orthonormality_defect();
    if defect > 1e-10 {
        return Err(Error::Internal(format!(
            "{} modes lost orthonormality ({defect:e})",
            field.kind.name()
        )));
    }
    Ok(StageReport {
        residual_before: before,
        residual_after: if mode_added {
            ResidualSeries::compute(field, targets, system, weights).total()
        } else {
            after
        },
        mode_added,
    })
}
