//! Finite-element operators, Gauss-point right-hand sides, Dirichlet
//! reduction and the symmetric positive definite solves.
//!
//! Degree-of-freedom numbering: density DoF `i` is Q1 node `i`; velocity DoF
//! `2 n + c` is component `c` of Q2 node `n`.

pub mod cholesky;
pub mod sparse;

use nalgebra::Matrix3;
use rayon::prelude::*;

pub use cholesky::EnvelopeCholesky;
pub use sparse::CsrMatrix;

use crate::constitutive::{voigt_viscosity, Material, SearchDirections};
use crate::elements::{self, MappedPoint, EDGE_NODES};
use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Quadrature points per element (shared 3x3 rule).
pub const POINTS_PER_ELEMENT: usize = 9;

/// Mesh plus the mapped quadrature data shared by every volume integral.
/// Gauss point `g` is point `g % 9` of element `g / 9`.
#[derive(Debug, Clone)]
pub struct Discretization {
    mesh: Mesh,
    points: Vec<MappedPoint>,
    /// Quadrature weight times det J.
    weights: Vec<f64>,
}

impl Discretization {
    pub fn new(mesh: Mesh) -> Result<Self> {
        let rule = elements::gauss_3x3();
        let mut points = Vec::with_capacity(mesh.n_elements() * POINTS_PER_ELEMENT);
        let mut weights = Vec::with_capacity(points.capacity());
        for e in 0..mesh.n_elements() {
            let coords = mesh.element_coords(e);
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                let mp = elements::map_point(&coords, p[0], p[1]).map_err(|err| match err {
                    Error::DegenerateElement { det, .. } => Error::DegenerateElement { element: Some(e), det },
                    other => other,
                })?;
                weights.push(w * mp.det_jacobian);
                points.push(mp);
            }
        }
        Ok(Self { mesh, points, weights })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn n_gauss(&self) -> usize {
        self.points.len()
    }

    pub fn point(&self, g: usize) -> &MappedPoint {
        &self.points[g]
    }

    pub fn points(&self) -> &[MappedPoint] {
        &self.points
    }

    pub fn weight(&self, g: usize) -> f64 {
        self.weights[g]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_density_dofs(&self) -> usize {
        self.mesh.n_q1_nodes()
    }

    pub fn n_velocity_dofs(&self) -> usize {
        2 * self.mesh.n_q2_nodes()
    }

    fn assemble<F>(&self, n: usize, local: F) -> CsrMatrix
    where
        F: Fn(usize) -> Vec<(usize, usize, f64)> + Sync + Send,
    {
        let per_element: Vec<Vec<(usize, usize, f64)>> =
            (0..self.mesh.n_elements()).into_par_iter().map(local).collect();
        CsrMatrix::from_triplets(n, per_element.into_iter().flatten().collect())
    }

    fn element_points(&self, e: usize) -> impl Iterator<Item = (&MappedPoint, f64)> {
        let r = e * POINTS_PER_ELEMENT..(e + 1) * POINTS_PER_ELEMENT;
        self.points[r.clone()].iter().zip(self.weights[r].iter().copied())
    }

    /// Q1 mass matrix `C_rr[i, j] = int N_i N_j`.
    pub fn mass_scalar(&self) -> CsrMatrix {
        self.assemble(self.n_density_dofs(), |e| {
            let c = self.mesh.elements()[e].corners;
            let mut t = Vec::with_capacity(16);
            let mut m = [[0.0; 4]; 4];
            for (p, w) in self.element_points(e) {
                for a in 0..4 {
                    for b in 0..4 {
                        m[a][b] += w * p.q1_values[a] * p.q1_values[b];
                    }
                }
            }
            for a in 0..4 {
                for b in 0..4 {
                    t.push((c[a], c[b], m[a][b]));
                }
            }
            t
        })
    }

    /// Q1 stiffness matrix `K_rr[i, j] = int grad N_i . grad N_j`.
    pub fn stiffness_scalar(&self) -> CsrMatrix {
        self.assemble(self.n_density_dofs(), |e| {
            let c = self.mesh.elements()[e].corners;
            let mut m = [[0.0; 4]; 4];
            for (p, w) in self.element_points(e) {
                for a in 0..4 {
                    for b in 0..4 {
                        let (ga, gb) = (p.q1_grads[a], p.q1_grads[b]);
                        m[a][b] += w * (ga[0] * gb[0] + ga[1] * gb[1]);
                    }
                }
            }
            let mut t = Vec::with_capacity(16);
            for a in 0..4 {
                for b in 0..4 {
                    t.push((c[a], c[b], m[a][b]));
                }
            }
            t
        })
    }

    /// Q2 vector mass matrix, block diagonal in the components.
    pub fn mass_vector(&self) -> CsrMatrix {
        self.weighted_mass_vector(|_| 1.0)
    }

    /// `int w(x) N_i N_j` per velocity component, `w` given per Gauss point.
    pub fn weighted_mass_vector<W: Fn(usize) -> f64 + Sync + Send>(&self, weight: W) -> CsrMatrix {
        self.assemble(self.n_velocity_dofs(), |e| {
            let nodes = self.mesh.elements()[e].nodes;
            let mut m = [[0.0; 9]; 9];
            for (q, (p, w)) in self.element_points(e).enumerate() {
                let w = w * weight(e * POINTS_PER_ELEMENT + q);
                for a in 0..9 {
                    for b in 0..9 {
                        m[a][b] += w * p.q2_values[a] * p.q2_values[b];
                    }
                }
            }
            let mut t = Vec::with_capacity(162);
            for a in 0..9 {
                for b in 0..9 {
                    for c in 0..2 {
                        t.push((2 * nodes[a] + c, 2 * nodes[b] + c, m[a][b]));
                    }
                }
            }
            t
        })
    }

    /// Advection matrix `B[i, j] = int N_j (v . grad N_i)` on the Q1 basis,
    /// with `v` given per Gauss point.
    pub fn advection_matrix(&self, v: &[[f64; 2]]) -> CsrMatrix {
        assert_eq!(v.len(), self.n_gauss());
        self.assemble(self.n_density_dofs(), |e| {
            let c = self.mesh.elements()[e].corners;
            let mut m = [[0.0; 4]; 4];
            for (q, (p, w)) in self.element_points(e).enumerate() {
                let vg = v[e * POINTS_PER_ELEMENT + q];
                for a in 0..4 {
                    let adv = vg[0] * p.q1_grads[a][0] + vg[1] * p.q1_grads[a][1];
                    for b in 0..4 {
                        m[a][b] += w * adv * p.q1_values[b];
                    }
                }
            }
            let mut t = Vec::with_capacity(16);
            for a in 0..4 {
                for b in 0..4 {
                    t.push((c[a], c[b], m[a][b]));
                }
            }
            t
        })
    }

    /// Viscous stiffness `K_vv[i, j] = int eps(N_i) : V : eps(N_j)`.
    pub fn viscous_stiffness(&self, material: &Material) -> CsrMatrix {
        let v = voigt_viscosity(material);
        self.assemble(self.n_velocity_dofs(), |e| {
            let nodes = self.mesh.elements()[e].nodes;
            let mut k = [[0.0; 18]; 18];
            for (p, w) in self.element_points(e) {
                let b = strain_matrix(p);
                // D * B, then B^T (D B)
                let mut db = [[0.0; 18]; 3];
                for r in 0..3 {
                    for col in 0..18 {
                        db[r][col] = (0..3).map(|s| v[(r, s)] * b[s][col]).sum();
                    }
                }
                for i in 0..18 {
                    for j in 0..18 {
                        k[i][j] += w * (b[0][i] * db[0][j] + b[1][i] * db[1][j] + b[2][i] * db[2][j]);
                    }
                }
            }
            let dof = |i: usize| 2 * nodes[i / 2] + i % 2;
            let mut t = Vec::with_capacity(324);
            for i in 0..18 {
                for j in 0..18 {
                    t.push((dof(i), dof(j), k[i][j]));
                }
            }
            t
        })
    }

    /// `H_rr = -H_zw K_rr + H_rq C_rr` and `H_vv = K_vv + H_vg C_vv`.
    pub fn global_operators(&self, material: &Material, sd: &SearchDirections) -> (CsrMatrix, CsrMatrix) {
        let h_rr = self
            .stiffness_scalar()
            .linear_combination(-sd.h_zw, &self.mass_scalar(), sd.h_rho_q);
        let h_vv = self
            .viscous_stiffness(material)
            .linear_combination(1.0, &self.mass_vector(), sd.h_v_gamma);
        (h_rr, h_vv)
    }

    /// `F[j] = sum_gp w detJ (delta . grad N_j - gamma N_j)`.
    pub fn rhs_scalar_from_gauss(&self, delta_hat: &[[f64; 2]], gamma_hat: &[f64]) -> Vec<f64> {
        assert_eq!(delta_hat.len(), self.n_gauss());
        assert_eq!(gamma_hat.len(), self.n_gauss());
        let mut f = vec![0.0; self.n_density_dofs()];
        for (e, el) in self.mesh.elements().iter().enumerate() {
            for q in 0..POINTS_PER_ELEMENT {
                let g = e * POINTS_PER_ELEMENT + q;
                let (p, w) = (&self.points[g], self.weights[g]);
                let d = delta_hat[g];
                for a in 0..4 {
                    let gr = p.q1_grads[a];
                    f[el.corners[a]] += w * (d[0] * gr[0] + d[1] * gr[1] - gamma_hat[g] * p.q1_values[a]);
                }
            }
        }
        f
    }

    /// `F = -int A : eps(v*) - int beta . v* + loads`.
    pub fn rhs_vector_from_gauss(&self, a_hat: &[[f64; 3]], beta_hat: &[[f64; 2]], loads: &[f64]) -> Vec<f64> {
        assert_eq!(a_hat.len(), self.n_gauss());
        assert_eq!(beta_hat.len(), self.n_gauss());
        assert_eq!(loads.len(), self.n_velocity_dofs());
        let mut f = loads.to_vec();
        for (e, el) in self.mesh.elements().iter().enumerate() {
            for q in 0..POINTS_PER_ELEMENT {
                let g = e * POINTS_PER_ELEMENT + q;
                let (p, w) = (&self.points[g], self.weights[g]);
                let (s, b) = (a_hat[g], beta_hat[g]);
                for a in 0..9 {
                    let [nx, ny] = p.q2_grads[a];
                    let n = p.q2_values[a];
                    f[2 * el.nodes[a]] -= w * (s[0] * nx + s[2] * ny + b[0] * n);
                    f[2 * el.nodes[a] + 1] -= w * (s[1] * ny + s[2] * nx + b[1] * n);
                }
            }
        }
        f
    }

    /// `int tr eps(v*)`, one entry per velocity DoF.
    pub fn divergence_vector(&self) -> Vec<f64> {
        let mut f = vec![0.0; self.n_velocity_dofs()];
        for (e, el) in self.mesh.elements().iter().enumerate() {
            for (p, w) in self.element_points(e) {
                for a in 0..9 {
                    f[2 * el.nodes[a]] += w * p.q2_grads[a][0];
                    f[2 * el.nodes[a] + 1] += w * p.q2_grads[a][1];
                }
            }
        }
        f
    }

    /// Uniform body force `int b . v*`.
    pub fn body_force_load(&self, b: [f64; 2]) -> Vec<f64> {
        let mut f = vec![0.0; self.n_velocity_dofs()];
        if b == [0.0, 0.0] {
            return f;
        }
        for (e, el) in self.mesh.elements().iter().enumerate() {
            for (p, w) in self.element_points(e) {
                for a in 0..9 {
                    f[2 * el.nodes[a]] += w * b[0] * p.q2_values[a];
                    f[2 * el.nodes[a] + 1] += w * b[1] * p.q2_values[a];
                }
            }
        }
        f
    }

    /// Adds `int_set F_d . v* dS` with the pressure traction `F_d = -p n`.
    pub fn add_pressure_traction(&self, set: &str, p: f64, f: &mut [f64]) -> Result<()> {
        for edge in self.mesh.boundary_edges(set)? {
            let el = &self.mesh.elements()[edge.element];
            let pts = elements::edge_quadrature(&self.mesh.element_coords(edge.element), edge.local_edge)?;
            for pt in &pts {
                for a in EDGE_NODES[edge.local_edge] {
                    let n = pt.q2_values[a];
                    f[2 * el.nodes[a]] -= pt.weight * p * pt.normal[0] * n;
                    f[2 * el.nodes[a] + 1] -= pt.weight * p * pt.normal[1] * n;
                }
            }
        }
        Ok(())
    }

    /// Density and its gradient at every Gauss point.
    pub fn eval_scalar(&self, nodal: &[f64], values: &mut [f64], grads: &mut [[f64; 2]]) {
        for (e, el) in self.mesh.elements().iter().enumerate() {
            let r = el.corners.map(|c| nodal[c]);
            for q in 0..POINTS_PER_ELEMENT {
                let g = e * POINTS_PER_ELEMENT + q;
                let p = &self.points[g];
                let mut v = 0.0;
                let mut d = [0.0; 2];
                for a in 0..4 {
                    v += p.q1_values[a] * r[a];
                    d[0] += p.q1_grads[a][0] * r[a];
                    d[1] += p.q1_grads[a][1] * r[a];
                }
                values[g] = v;
                grads[g] = d;
            }
        }
    }

    /// Velocity and Voigt strain `(e_xx, e_yy, 2 e_xy)` at every Gauss point.
    pub fn eval_vector(&self, nodal: &[f64], values: &mut [[f64; 2]], strains: &mut [[f64; 3]]) {
        for (e, el) in self.mesh.elements().iter().enumerate() {
            for q in 0..POINTS_PER_ELEMENT {
                let g = e * POINTS_PER_ELEMENT + q;
                let p = &self.points[g];
                let mut v = [0.0; 2];
                let mut s = [0.0; 3];
                for a in 0..9 {
                    let (ux, uy) = (nodal[2 * el.nodes[a]], nodal[2 * el.nodes[a] + 1]);
                    let [nx, ny] = p.q2_grads[a];
                    v[0] += p.q2_values[a] * ux;
                    v[1] += p.q2_values[a] * uy;
                    s[0] += nx * ux;
                    s[1] += ny * uy;
                    s[2] += ny * ux + nx * uy;
                }
                values[g] = v;
                strains[g] = s;
            }
        }
    }
}

/// Rows of the Voigt strain-displacement matrix for one point.
fn strain_matrix(p: &MappedPoint) -> [[f64; 18]; 3] {
    let mut b = [[0.0; 18]; 3];
    for a in 0..9 {
        let [nx, ny] = p.q2_grads[a];
        b[0][2 * a] = nx;
        b[1][2 * a + 1] = ny;
        b[2][2 * a] = ny;
        b[2][2 * a + 1] = nx;
    }
    b
}

/// Voigt matrix-vector product on plain arrays.
#[inline]
pub fn voigt_apply(m: &Matrix3<f64>, x: [f64; 3]) -> [f64; 3] {
    [
        m[(0, 0)] * x[0] + m[(0, 1)] * x[1] + m[(0, 2)] * x[2],
        m[(1, 0)] * x[0] + m[(1, 1)] * x[1] + m[(1, 2)] * x[2],
        m[(2, 0)] * x[0] + m[(2, 1)] * x[1] + m[(2, 2)] * x[2],
    ]
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Relative residual every solve must reach.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

/// An SPD operator reduced to its free DoFs, factorized once.
#[derive(Debug, Clone)]
pub struct ConstrainedSystem {
    full: CsrMatrix,
    reduced: CsrMatrix,
    factor: Option<EnvelopeCholesky>,
    fixed: Vec<usize>,
    free: Vec<usize>,
    is_fixed: Vec<bool>,
}

impl ConstrainedSystem {
    /// Symmetric elimination of `fixed` DoFs followed by Cholesky.
    pub fn new(h: &CsrMatrix, fixed: &[usize]) -> Result<Self> {
        let n = h.n();
        let mut is_fixed = vec![false; n];
        for &d in fixed {
            if d >= n {
                return Err(Error::Internal(format!("fixed DoF {d} outside 0..{n}")));
            }
            is_fixed[d] = true;
        }
        let fixed: Vec<usize> = (0..n).filter(|&i| is_fixed[i]).collect();
        let free: Vec<usize> = (0..n).filter(|&i| !is_fixed[i]).collect();
        let reduced = h.principal_submatrix(&free);
        let factor = if free.is_empty() {
            None
        } else {
            Some(EnvelopeCholesky::factor(&reduced)?)
        };
        Ok(Self {
            full: h.clone(),
            reduced,
            factor,
            fixed,
            free,
            is_fixed,
        })
    }

    pub fn n(&self) -> usize {
        self.full.n()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.full
    }

    pub fn fixed(&self) -> &[usize] {
        &self.fixed
    }

    pub fn free(&self) -> &[usize] {
        &self.free
    }

    pub fn is_fixed(&self, dof: usize) -> bool {
        self.is_fixed[dof]
    }

    /// Zeroes the entries of fixed DoFs.
    pub fn zero_fixed(&self, v: &mut [f64]) {
        for &d in &self.fixed {
            v[d] = 0.0;
        }
    }

    /// `H_ff x_f` on free rows, zero on fixed rows (fixed entries of `x` ignored).
    pub fn apply_homogeneous(&self, x: &[f64]) -> Vec<f64> {
        let xf: Vec<f64> = self.free.iter().map(|&i| x[i]).collect();
        let yf = self.reduced.mul_vec(&xf);
        let mut y = vec![0.0; self.n()];
        for (k, &i) in self.free.iter().enumerate() {
            y[i] = yf[k];
        }
        y
    }

    /// Solves `H_ff x_f = b_f` with `x = 0` on fixed DoFs.
    pub fn solve_homogeneous(&self, b: &[f64]) -> Result<Vec<f64>> {
        let bf: Vec<f64> = self.free.iter().map(|&i| b[i]).collect();
        let xf = self.solve_reduced(&bf)?;
        let mut x = vec![0.0; self.n()];
        for (k, &i) in self.free.iter().enumerate() {
            x[i] = xf[k];
        }
        Ok(x)
    }

    /// Solves with prescribed values on the fixed DoFs (`fixed_values` in the
    /// order of [`ConstrainedSystem::fixed`]); free rows of `rhs` are used.
    pub fn solve(&self, rhs: &[f64], fixed_values: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(rhs.len(), self.n());
        assert_eq!(fixed_values.len(), self.fixed.len());
        let mut lift = vec![0.0; self.n()];
        for (&d, &v) in self.fixed.iter().zip(fixed_values) {
            lift[d] = v;
        }
        let coupling = self.full.mul_vec(&lift);
        let bf: Vec<f64> = self.free.iter().map(|&i| rhs[i] - coupling[i]).collect();
        let xf = self.solve_reduced(&bf)?;
        for (k, &i) in self.free.iter().enumerate() {
            lift[i] = xf[k];
        }
        Ok(lift)
    }

    fn solve_reduced(&self, b: &[f64]) -> Result<Vec<f64>> {
        let Some(factor) = &self.factor else {
            return Ok(Vec::new());
        };
        let bn = norm(b);
        if bn == 0.0 {
            return Ok(vec![0.0; b.len()]);
        }
        let mut x = factor.solve(b);
        let mut rel = f64::INFINITY;
        for _ in 0..3 {
            let ax = self.reduced.mul_vec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            rel = norm(&r) / bn;
            if rel < SOLVE_TOLERANCE {
                return Ok(x);
            }
            let dx = factor.solve(&r);
            for (x, d) in x.iter_mut().zip(dx) {
                *x += d;
            }
        }
        Err(Error::Solver(format!(
            "relative residual {rel:e} above {SOLVE_TOLERANCE:e} after refinement"
        )))
    }
}
