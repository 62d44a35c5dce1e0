//! Reference quadrilaterals: Q1/Q2 Lagrange bases, Gauss-Legendre rules and
//! the isoparametric map.
//!
//! Local node ordering for the 9-node element: corners counter-clockwise
//! starting at (-1,-1), then the mid-edge nodes of edges 0..3 (edge `e` joins
//! corners `e` and `e+1 mod 4`), then the center. The 4-node element uses the
//! corner subsequence.

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Reference coordinates of the 9 Q2 nodes.
pub const Q2_REFERENCE_NODES: [Point; 9] = [
    [-1.0, -1.0],
    [1.0, -1.0],
    [1.0, 1.0],
    [-1.0, 1.0],
    [0.0, -1.0],
    [1.0, 0.0],
    [0.0, 1.0],
    [-1.0, 0.0],
    [0.0, 0.0],
];

/// Position of each Q2 node in the 3x3 tensor grid (0 -> -1, 1 -> 0, 2 -> +1).
const Q2_GRID_INDEX: [(usize, usize); 9] = [
    (0, 0),
    (2, 0),
    (2, 2),
    (0, 2),
    (1, 0),
    (2, 1),
    (1, 2),
    (0, 1),
    (1, 1),
];

const GAUSS3_POINTS: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GAUSS3_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

/// Corner (start, end) and mid-edge node of each local edge.
pub const EDGE_NODES: [[usize; 3]; 4] = [[0, 1, 4], [1, 2, 5], [2, 3, 6], [3, 0, 7]];

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Basis values and gradients of the bilinear element at (xi, eta).
pub fn shape_q1(xi: f64, eta: f64) -> ([f64; 4], [[f64; 2]; 4]) {
    let mut values = [0.0; 4];
    let mut grads = [[0.0; 2]; 4];
    for a in 0..4 {
        let [xa, ea] = Q2_REFERENCE_NODES[a];
        values[a] = 0.25 * (1.0 + xa * xi) * (1.0 + ea * eta);
        grads[a] = [
            0.25 * xa * (1.0 + ea * eta),
            0.25 * ea * (1.0 + xa * xi),
        ];
    }
    (values, grads)
}

fn lagrange3(s: f64) -> ([f64; 3], [f64; 3]) {
    (
        [0.5 * s * (s - 1.0), 1.0 - s * s, 0.5 * s * (s + 1.0)],
        [s - 0.5, -2.0 * s, s + 0.5],
    )
}

/// Basis values and gradients of the biquadratic element at (xi, eta).
pub fn shape_q2(xi: f64, eta: f64) -> ([f64; 9], [[f64; 2]; 9]) {
    let (lx, dlx) = lagrange3(xi);
    let (ly, dly) = lagrange3(eta);
    let mut values = [0.0; 9];
    let mut grads = [[0.0; 2]; 9];
    for (a, &(i, j)) in Q2_GRID_INDEX.iter().enumerate() {
        values[a] = lx[i] * ly[j];
        grads[a] = [dlx[i] * ly[j], lx[i] * dly[j]];
    }
    (values, grads)
}

/// 3-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_1d_3() -> ([f64; 3], [f64; 3]) {
    (GAUSS3_POINTS, GAUSS3_WEIGHTS)
}

/// Tensor-product 3x3 Gauss rule on the reference square.
pub fn gauss_3x3() -> QuadratureRule {
    let mut points = Vec::with_capacity(9);
    let mut weights = Vec::with_capacity(9);
    for j in 0..3 {
        for i in 0..3 {
            points.push([GAUSS3_POINTS[i], GAUSS3_POINTS[j]]);
            weights.push(GAUSS3_WEIGHTS[i] * GAUSS3_WEIGHTS[j]);
        }
    }
    QuadratureRule { points, weights }
}

/// Everything the assembly needs at one quadrature point of a mapped element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappedPoint {
    pub x: Point,
    pub det_jacobian: f64,
    pub q1_values: [f64; 4],
    pub q1_grads: [[f64; 2]; 4],
    pub q2_values: [f64; 9],
    pub q2_grads: [[f64; 2]; 9],
}

fn jacobian(coords: &[Point; 9], ref_grads: &[[f64; 2]; 9]) -> [[f64; 2]; 2] {
    let mut j = [[0.0; 2]; 2];
    for (x, g) in coords.iter().zip(ref_grads) {
        j[0][0] += x[0] * g[0];
        j[0][1] += x[0] * g[1];
        j[1][0] += x[1] * g[0];
        j[1][1] += x[1] * g[1];
    }
    j
}

/// Maps reference point (xi, eta) through the Q2 geometry of an element.
pub fn map_point(coords: &[Point; 9], xi: f64, eta: f64) -> Result<MappedPoint> {
    let (q2_values, q2_ref) = shape_q2(xi, eta);
    let (q1_values, q1_ref) = shape_q1(xi, eta);
    let j = jacobian(coords, &q2_ref);
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let scale = coords
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0_f64, |m, v| m.max(v.abs()))
        .max(1.0);
    if !(det > 1e-14 * scale * scale) {
        return Err(Error::DegenerateElement { element: None, det });
    }
    // J^{-T} applied to reference gradients.
    let inv_t = [
        [j[1][1] / det, -j[1][0] / det],
        [-j[0][1] / det, j[0][0] / det],
    ];
    let to_physical = |g: [f64; 2]| {
        [
            inv_t[0][0] * g[0] + inv_t[0][1] * g[1],
            inv_t[1][0] * g[0] + inv_t[1][1] * g[1],
        ]
    };
    let mut x = [0.0; 2];
    for (p, n) in coords.iter().zip(q2_values) {
        x[0] += n * p[0];
        x[1] += n * p[1];
    }
    Ok(MappedPoint {
        x,
        det_jacobian: det,
        q1_values,
        q1_grads: q1_ref.map(to_physical),
        q2_values,
        q2_grads: q2_ref.map(to_physical),
    })
}

/// Reference coordinates of the point at parameter `s` in [-1, 1] along a
/// local edge, traversed counter-clockwise.
pub fn edge_reference_point(local_edge: usize, s: f64) -> Point {
    match local_edge {
        0 => [s, -1.0],
        1 => [1.0, s],
        2 => [-s, 1.0],
        3 => [-1.0, -s],
        _ => panic!("local edge index {local_edge} out of range"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgePoint {
    pub x: Point,
    /// Gauss weight times the arc-length metric.
    pub weight: f64,
    pub normal: Point,
    pub q1_values: [f64; 4],
    pub q2_values: [f64; 9],
}

/// 3-point rule along one local edge of a mapped element, with outward
/// normals (the element interior lies to the left of a CCW edge).
pub fn edge_quadrature(coords: &[Point; 9], local_edge: usize) -> Result<[EdgePoint; 3]> {
    if local_edge > 3 {
        return Err(Error::InvalidGeometry(format!(
            "local edge index {local_edge} out of range 0..3"
        )));
    }
    let (pts, wts) = gauss_1d_3();
    let mut out = [EdgePoint {
        x: [0.0; 2],
        weight: 0.0,
        normal: [0.0; 2],
        q1_values: [0.0; 4],
        q2_values: [0.0; 9],
    }; 3];
    for (k, (&s, &w)) in pts.iter().zip(&wts).enumerate() {
        let [xi, eta] = edge_reference_point(local_edge, s);
        let (q2_values, q2_ref) = shape_q2(xi, eta);
        let (q1_values, _) = shape_q1(xi, eta);
        let j = jacobian(coords, &q2_ref);
        // d(xi, eta)/ds along the CCW edge parametrisation
        let dref = match local_edge {
            0 => [1.0, 0.0],
            1 => [0.0, 1.0],
            2 => [-1.0, 0.0],
            _ => [0.0, -1.0],
        };
        let tangent = [
            j[0][0] * dref[0] + j[0][1] * dref[1],
            j[1][0] * dref[0] + j[1][1] * dref[1],
        ];
        let len = tangent[0].hypot(tangent[1]);
        if len <= 0.0 {
            return Err(Error::DegenerateElement {
                element: None,
                det: 0.0,
            });
        }
        let mut x = [0.0; 2];
        for (p, n) in coords.iter().zip(q2_values) {
            x[0] += n * p[0];
            x[1] += n * p[1];
        }
        out[k] = EdgePoint {
            x,
            weight: w * len,
            normal: [tangent[1] / len, -tangent[0] / len],
            q1_values,
            q2_values,
        };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_square() -> [Point; 9] {
        Q2_REFERENCE_NODES.map(|[x, y]| [0.5 * (x + 1.0), 0.5 * (y + 1.0)])
    }

    #[test]
    fn q1_center_and_kronecker() {
        let (v, _) = shape_q1(0.0, 0.0);
        assert!(v.iter().all(|&x| (x - 0.25).abs() < 1e-15));
        let (v, _) = shape_q1(-1.0, -1.0);
        assert_eq!(v, [1.0, 0.0, 0.0, 0.0]);
        let (v, g) = shape_q1(0.3, -0.7);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let gs = g.iter().fold([0.0, 0.0], |a, g| [a[0] + g[0], a[1] + g[1]]);
        assert!(gs[0].abs() < 1e-15 && gs[1].abs() < 1e-15);
    }

    #[test]
    fn q2_kronecker_at_nodes() {
        for (a, p) in Q2_REFERENCE_NODES.iter().enumerate() {
            let (v, _) = shape_q2(p[0], p[1]);
            for (b, &vb) in v.iter().enumerate() {
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((vb - expected).abs() < 1e-15, "N{b}({a}) = {vb}");
            }
        }
        let (v, _) = shape_q2(0.0, 0.0);
        assert_eq!(v[8], 1.0);
        let (v, _) = shape_q2(0.3, -0.7);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_rule_weights_and_monomials() {
        let rule = gauss_3x3();
        assert!((rule.weights.iter().sum::<f64>() - 4.0).abs() < 1e-14);
        let integrate = |p: i32, q: i32| -> f64 {
            rule.points
                .iter()
                .zip(&rule.weights)
                .map(|(x, w)| w * x[0].powi(p) * x[1].powi(q))
                .sum()
        };
        assert!((integrate(4, 2) - 4.0 / 15.0).abs() < 1e-14);
        let exact_1d = |p: i32| if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
        for p in 0..=5 {
            for q in 0..=5 {
                let exact = exact_1d(p) * exact_1d(q);
                let got = integrate(p, q);
                assert!(
                    (got - exact).abs() <= 1e-13 * exact.abs().max(1.0),
                    "x^{p} y^{q}: {got} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn affine_rectangle_jacobian() {
        let (a, b) = (3.0, 0.5);
        let coords = Q2_REFERENCE_NODES.map(|[x, y]| [1.0 + 0.5 * a * (x + 1.0), -2.0 + 0.5 * b * (y + 1.0)]);
        for &(xi, eta) in &[(0.0, 0.0), (0.3, -0.9), (-1.0, 1.0)] {
            let mp = map_point(&coords, xi, eta).unwrap();
            assert!((mp.det_jacobian - a * b / 4.0).abs() < 1e-14);
        }
    }

    #[test]
    fn unit_square_gradients_are_scaled_reference_gradients() {
        let coords = unit_square();
        let mp = map_point(&coords, 0.2, 0.6).unwrap();
        let (_, r2) = shape_q2(0.2, 0.6);
        let (_, r1) = shape_q1(0.2, 0.6);
        for a in 0..9 {
            for d in 0..2 {
                assert!((mp.q2_grads[a][d] - 2.0 * r2[a][d]).abs() < 1e-14);
            }
        }
        for a in 0..4 {
            for d in 0..2 {
                assert!((mp.q1_grads[a][d] - 2.0 * r1[a][d]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_area_element_is_degenerate() {
        let coords = Q2_REFERENCE_NODES.map(|[x, _]| [x, 0.0]);
        assert!(matches!(
            map_point(&coords, 0.0, 0.0),
            Err(Error::DegenerateElement { .. })
        ));
    }

    #[test]
    fn edge_rules() {
        let (len_x, len_y) = (2.0, 0.5);
        let coords = Q2_REFERENCE_NODES.map(|[x, y]| [0.5 * len_x * (x + 1.0), 0.5 * len_y * (y + 1.0)]);
        let expected_normals = [[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]];
        let expected_len = [len_x, len_y, len_x, len_y];
        for e in 0..4 {
            let pts = edge_quadrature(&coords, e).unwrap();
            let total: f64 = pts.iter().map(|p| p.weight).sum();
            assert!((total - expected_len[e]).abs() < 1e-14);
            for p in &pts {
                assert!((p.normal[0] - expected_normals[e][0]).abs() < 1e-15);
                assert!((p.normal[1] - expected_normals[e][1]).abs() < 1e-15);
            }
        }
        // left edge x = 0, y in [0, 0.5]: int y^2 dy = 0.5^3 / 3
        let pts = edge_quadrature(&coords, 3).unwrap();
        let got: f64 = pts.iter().map(|p| p.weight * p.x[1] * p.x[1]).sum();
        assert!((got - 0.125 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn q1_reproduces_linear_and_q2_reproduces_quadratic() {
        let coords = Q2_REFERENCE_NODES.map(|[x, y]| [x + 0.1 * y, 0.7 * y - 0.05 * x]);
        let lin = |p: Point| 1.5 - 2.0 * p[0] + 0.25 * p[1];
        let quad = |p: Point| 0.3 + p[0] * p[0] - 3.0 * p[0] * p[1] + 0.5 * p[1] * p[1] - p[1];
        for &(xi, eta) in &[(0.13, -0.42), (0.9, 0.9), (-0.5, 0.25)] {
            let mp = map_point(&coords, xi, eta).unwrap();
            let l: f64 = (0..4).map(|a| mp.q1_values[a] * lin(coords[a])).sum();
            let q: f64 = (0..9).map(|a| mp.q2_values[a] * quad(coords[a])).sum();
            assert!((l - lin(mp.x)).abs() < 1e-13);
            assert!((q - quad(mp.x)).abs() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn partition_of_unity(xi in -1.0f64..1.0, eta in -1.0f64..1.0) {
            let (v1, g1) = shape_q1(xi, eta);
            let (v2, g2) = shape_q2(xi, eta);
            prop_assert!((v1.iter().sum::<f64>() - 1.0).abs() < 1e-13);
            prop_assert!((v2.iter().sum::<f64>() - 1.0).abs() < 1e-13);
            for d in 0..2 {
                prop_assert!(g1.iter().map(|g| g[d]).sum::<f64>().abs() < 1e-13);
                prop_assert!(g2.iter().map(|g| g[d]).sum::<f64>().abs() < 1e-13);
            }
        }

        #[test]
        fn mapped_gradients_sum_to_zero(xi in -1.0f64..1.0, eta in -1.0f64..1.0, skew in -0.3f64..0.3) {
            let coords = Q2_REFERENCE_NODES.map(|[x, y]| [2.0 * x + skew * y, y + skew * x * y]);
            let mp = map_point(&coords, xi, eta).unwrap();
            prop_assert!(mp.det_jacobian > 0.0);
            for d in 0..2 {
                prop_assert!(mp.q1_grads.iter().map(|g| g[d]).sum::<f64>().abs() < 1e-12);
                prop_assert!(mp.q2_grads.iter().map(|g| g[d]).sum::<f64>().abs() < 1e-12);
            }
        }
    }
}
