//! Taylor-Hood quadrilateral meshes: 9-node velocity elements whose corner
//! nodes carry the bilinear density field.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::elements::{self, Point, EDGE_NODES};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    /// Q2 node indices in the fixed local ordering.
    pub nodes: [usize; 9],
    /// Q1 (density) node indices of the four corners.
    pub corners: [usize; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BoundaryEdge {
    pub element: usize,
    pub local_edge: usize,
}

/// A boundary edge resolved to geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFacet {
    pub edge: BoundaryEdge,
    pub length: f64,
    /// Unit outward normal at the edge midpoint.
    pub normal: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<Point>,
    q1_to_q2: Vec<usize>,
    q2_to_q1: Vec<Option<usize>>,
    elements: Vec<Element>,
    boundaries: BTreeMap<String, Vec<BoundaryEdge>>,
}

/// Names given to the four sides of a generated rectangle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RectangleSets {
    pub inflow: String,
    pub outflow: String,
    pub walls: String,
}

impl Default for RectangleSets {
    fn default() -> Self {
        Self {
            inflow: "inflow".into(),
            outflow: "outflow".into(),
            walls: "walls".into(),
        }
    }
}

impl Mesh {
    /// Builds and validates a mesh from Q2 nodes and 9-node connectivity.
    pub fn new(
        nodes: Vec<Point>,
        connectivity: Vec<[usize; 9]>,
        boundaries: BTreeMap<String, Vec<BoundaryEdge>>,
    ) -> Result<Self> {
        for (e, conn) in connectivity.iter().enumerate() {
            if let Some(&bad) = conn.iter().find(|&&n| n >= nodes.len()) {
                return Err(Error::InvalidGeometry(format!(
                    "element {e} references node {bad} but only {} nodes exist",
                    nodes.len()
                )));
            }
        }
        let mut q2_to_q1 = vec![None; nodes.len()];
        let mut is_corner = vec![false; nodes.len()];
        for conn in &connectivity {
            for &n in &conn[..4] {
                is_corner[n] = true;
            }
        }
        let mut q1_to_q2 = Vec::new();
        for (n, &c) in is_corner.iter().enumerate() {
            if c {
                q2_to_q1[n] = Some(q1_to_q2.len());
                q1_to_q2.push(n);
            }
        }
        let elements = connectivity
            .into_iter()
            .map(|nodes| Element {
                nodes,
                corners: [0, 1, 2, 3].map(|a| q2_to_q1[nodes[a]].expect("corner numbered")),
            })
            .collect();
        let mesh = Mesh {
            nodes,
            q1_to_q2,
            q2_to_q1,
            elements,
            boundaries,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    fn validate(&self) -> Result<()> {
        let rule = elements::gauss_3x3();
        for e in 0..self.elements.len() {
            let coords = self.element_coords(e);
            for p in &rule.points {
                elements::map_point(&coords, p[0], p[1]).map_err(|err| match err {
                    Error::DegenerateElement { det, .. } => Error::DegenerateElement {
                        element: Some(e),
                        det,
                    },
                    other => other,
                })?;
            }
        }
        // Corner-pair multiplicity identifies exterior edges.
        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for el in &self.elements {
            for [a, b, _] in EDGE_NODES {
                let key = ordered(el.nodes[a], el.nodes[b]);
                *edge_count.entry(key).or_default() += 1;
            }
        }
        let mut seen: HashMap<BoundaryEdge, &str> = HashMap::new();
        for (name, edges) in &self.boundaries {
            for edge in edges {
                if edge.element >= self.elements.len() || edge.local_edge > 3 {
                    return Err(Error::InvalidGeometry(format!(
                        "boundary `{name}` references element {} edge {} which does not exist",
                        edge.element, edge.local_edge
                    )));
                }
                let el = &self.elements[edge.element];
                let [a, b, _] = EDGE_NODES[edge.local_edge];
                if edge_count[&ordered(el.nodes[a], el.nodes[b])] != 1 {
                    return Err(Error::InvalidGeometry(format!(
                        "boundary `{name}`: edge {} of element {} is interior",
                        edge.local_edge, edge.element
                    )));
                }
                if let Some(other) = seen.insert(*edge, name) {
                    return Err(Error::InvalidGeometry(format!(
                        "edge {} of element {} belongs to both `{other}` and `{name}`",
                        edge.local_edge, edge.element
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        2
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn n_q2_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_q1_nodes(&self) -> usize {
        self.q1_to_q2.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    /// Q2 index of a Q1 node.
    pub fn q1_node(&self, q1: usize) -> usize {
        self.q1_to_q2[q1]
    }

    pub fn q1_index_of(&self, q2: usize) -> Option<usize> {
        self.q2_to_q1[q2]
    }

    pub fn q1_coords(&self, q1: usize) -> Point {
        self.nodes[self.q1_to_q2[q1]]
    }

    pub fn element_coords(&self, e: usize) -> [Point; 9] {
        self.elements[e].nodes.map(|n| self.nodes[n])
    }

    pub fn boundary_names(&self) -> Vec<String> {
        self.boundaries.keys().cloned().collect()
    }

    pub fn boundary_edges(&self, name: &str) -> Result<&[BoundaryEdge]> {
        self.boundaries
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownBoundarySet {
                name: name.to_string(),
                available: self.boundary_names(),
            })
    }

    /// Edges of a named set with their lengths and unit outward normals.
    pub fn boundary_set(&self, name: &str) -> Result<Vec<BoundaryFacet>> {
        self.boundary_edges(name)?
            .iter()
            .map(|&edge| {
                let coords = self.element_coords(edge.element);
                let pts = elements::edge_quadrature(&coords, edge.local_edge)?;
                let length = pts.iter().map(|p| p.weight).sum();
                Ok(BoundaryFacet {
                    edge,
                    length,
                    normal: pts[1].normal,
                })
            })
            .collect()
    }

    pub fn boundary_q2_nodes(&self, name: &str) -> Result<Vec<usize>> {
        let mut set = BTreeSet::new();
        for edge in self.boundary_edges(name)? {
            let el = &self.elements[edge.element];
            for a in EDGE_NODES[edge.local_edge] {
                set.insert(el.nodes[a]);
            }
        }
        Ok(set.into_iter().collect())
    }

    pub fn boundary_q1_nodes(&self, name: &str) -> Result<Vec<usize>> {
        let mut set = BTreeSet::new();
        for edge in self.boundary_edges(name)? {
            let el = &self.elements[edge.element];
            let [a, b, _] = EDGE_NODES[edge.local_edge];
            set.insert(el.corners[a]);
            set.insert(el.corners[b]);
        }
        Ok(set.into_iter().collect())
    }

    /// Axis-aligned bounding box as (min, max).
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.nodes {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (lo, hi)
    }

    /// Finds the element containing `p` and the reference coordinates of `p`
    /// in it. Linear scan with a bounding-box filter and Newton inversion.
    pub fn locate(&self, p: Point) -> Option<(usize, Point)> {
        let tol = 1e-10;
        for e in 0..self.elements.len() {
            let coords = self.element_coords(e);
            let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for c in &coords {
                for d in 0..2 {
                    lo[d] = lo[d].min(c[d]);
                    hi[d] = hi[d].max(c[d]);
                }
            }
            let pad = 1e-9 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
            if p[0] < lo[0] - pad || p[0] > hi[0] + pad || p[1] < lo[1] - pad || p[1] > hi[1] + pad {
                continue;
            }
            if let Some(r) = invert_map(&coords, p) {
                if r[0].abs() <= 1.0 + tol && r[1].abs() <= 1.0 + tol {
                    return Some((e, [r[0].clamp(-1.0, 1.0), r[1].clamp(-1.0, 1.0)]));
                }
            }
        }
        None
    }

    /// Generates the structured `nx` x `ny` channel mesh on
    /// [0, length] x [-height/2, height/2].
    pub fn generate_rectangle(
        length: f64,
        height: f64,
        nx: usize,
        ny: usize,
        sets: &RectangleSets,
    ) -> Result<Mesh> {
        if !(length > 0.0 && height > 0.0) || !length.is_finite() || !height.is_finite() {
            return Err(Error::InvalidGeometry(format!(
                "rectangle dimensions must be positive, got {length} x {height}"
            )));
        }
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidGeometry(format!(
                "rectangle subdivisions must be at least 1, got {nx} x {ny}"
            )));
        }
        let (cols, rows) = (2 * nx + 1, 2 * ny + 1);
        let mut nodes = Vec::with_capacity(cols * rows);
        for j in 0..rows {
            let y = -0.5 * height + height * j as f64 / (rows - 1) as f64;
            for i in 0..cols {
                nodes.push([length * i as f64 / (cols - 1) as f64, y]);
            }
        }
        let id = |i: usize, j: usize| j * cols + i;
        let mut connectivity = Vec::with_capacity(nx * ny);
        for ey in 0..ny {
            for ex in 0..nx {
                let (i, j) = (2 * ex, 2 * ey);
                connectivity.push([
                    id(i, j),
                    id(i + 2, j),
                    id(i + 2, j + 2),
                    id(i, j + 2),
                    id(i + 1, j),
                    id(i + 2, j + 1),
                    id(i + 1, j + 2),
                    id(i, j + 1),
                    id(i + 1, j + 1),
                ]);
            }
        }
        let el = |ex: usize, ey: usize| ey * nx + ex;
        let mut boundaries = BTreeMap::new();
        boundaries.insert(
            sets.inflow.clone(),
            (0..ny).map(|ey| BoundaryEdge { element: el(0, ey), local_edge: 3 }).collect(),
        );
        boundaries.insert(
            sets.outflow.clone(),
            (0..ny)
                .map(|ey| BoundaryEdge { element: el(nx - 1, ey), local_edge: 1 })
                .collect(),
        );
        let mut walls: Vec<BoundaryEdge> =
            (0..nx).map(|ex| BoundaryEdge { element: el(ex, 0), local_edge: 0 }).collect();
        walls.extend((0..nx).map(|ex| BoundaryEdge { element: el(ex, ny - 1), local_edge: 2 }));
        boundaries.insert(sets.walls.clone(), walls);
        if boundaries.len() != 3 {
            return Err(Error::InvalidGeometry("rectangle boundary set names must be distinct".into()));
        }
        Mesh::new(nodes, connectivity, boundaries)
    }

    /// Serializes the mesh in the line-oriented `latinflow-mesh v1` format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("latinflow-mesh v1 dim 2\n");
        let _ = writeln!(out, "nodes {}", self.nodes.len());
        for p in &self.nodes {
            let _ = writeln!(out, "{:e} {:e}", p[0], p[1]);
        }
        let _ = writeln!(out, "elements {}", self.elements.len());
        for el in &self.elements {
            let line: Vec<String> = el.nodes.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        for (name, edges) in &self.boundaries {
            let _ = writeln!(out, "boundary {name} {}", edges.len());
            for e in edges {
                let _ = writeln!(out, "{} {}", e.element, e.local_edge);
            }
        }
        out
    }
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn invert_map(coords: &[Point; 9], p: Point) -> Option<Point> {
    let mut r = [0.0, 0.0];
    for _ in 0..30 {
        let (n, g) = elements::shape_q2(r[0], r[1]);
        let mut x = [0.0; 2];
        let mut j = [[0.0; 2]; 2];
        for a in 0..9 {
            for d in 0..2 {
                x[d] += n[a] * coords[a][d];
                j[d][0] += coords[a][d] * g[a][0];
                j[d][1] += coords[a][d] * g[a][1];
            }
        }
        let res = [p[0] - x[0], p[1] - x[1]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-300 {
            return None;
        }
        let dr = [
            (j[1][1] * res[0] - j[0][1] * res[1]) / det,
            (-j[1][0] * res[0] + j[0][0] * res[1]) / det,
        ];
        r[0] += dr[0];
        r[1] += dr[1];
        if r[0].abs() > 3.0 || r[1].abs() > 3.0 {
            return None;
        }
        if dr[0].abs() + dr[1].abs() < 1e-14 {
            return Some(r);
        }
    }
    Some(r)
}

/// Parses the `latinflow-mesh v1` text format.
pub fn import_mesh(text: &str) -> Result<Mesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let fmt_err = |line: usize, message: String| Error::Format { line, message };

    let (line, header) = lines
        .next()
        .ok_or_else(|| fmt_err(1, "empty mesh file".into()))?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head != ["latinflow-mesh", "v1", "dim", "2"] {
        return Err(fmt_err(line, format!("expected header `latinflow-mesh v1 dim 2`, got `{header}`")));
    }

    let mut nodes: Vec<Point> = Vec::new();
    let mut connectivity: Vec<[usize; 9]> = Vec::new();
    let mut boundaries: BTreeMap<String, Vec<BoundaryEdge>> = BTreeMap::new();
    let mut element_lines = Vec::new();
    let mut have_nodes = false;
    let mut have_elements = false;

    while let Some((line, block)) = lines.next() {
        let words: Vec<&str> = block.split_whitespace().collect();
        let count = |w: Option<&&str>| -> Result<usize> {
            w.ok_or_else(|| fmt_err(line, "missing block count".into()))?
                .parse::<usize>()
                .map_err(|_| fmt_err(line, format!("invalid block count in `{block}`")))
        };
        match words.first().copied() {
            Some("nodes") if words.len() == 2 => {
                if have_nodes {
                    return Err(fmt_err(line, "duplicate `nodes` block".into()));
                }
                have_nodes = true;
                let n = count(words.get(1))?;
                nodes.reserve(n);
                for _ in 0..n {
                    let (l, text) = lines
                        .next()
                        .ok_or_else(|| fmt_err(line, format!("expected {n} node lines")))?;
                    let v: Vec<f64> = text
                        .split_whitespace()
                        .map(str::parse)
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| fmt_err(l, format!("invalid node coordinates `{text}`")))?;
                    if v.len() != 2 {
                        return Err(fmt_err(l, format!("expected 2 coordinates, got {}", v.len())));
                    }
                    nodes.push([v[0], v[1]]);
                }
            }
            Some("elements") if words.len() == 2 => {
                if have_elements {
                    return Err(fmt_err(line, "duplicate `elements` block".into()));
                }
                have_elements = true;
                let n = count(words.get(1))?;
                for _ in 0..n {
                    let (l, text) = lines
                        .next()
                        .ok_or_else(|| fmt_err(line, format!("expected {n} element lines")))?;
                    let v: Vec<usize> = text
                        .split_whitespace()
                        .map(str::parse)
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| fmt_err(l, format!("invalid element indices `{text}`")))?;
                    let conn: [usize; 9] = v
                        .try_into()
                        .map_err(|v: Vec<usize>| fmt_err(l, format!("expected 9 node indices, got {}", v.len())))?;
                    connectivity.push(conn);
                    element_lines.push(l);
                }
            }
            Some("boundary") if words.len() == 3 => {
                let name = words[1].to_string();
                let n = count(words.get(2))?;
                if boundaries.contains_key(&name) {
                    return Err(fmt_err(line, format!("duplicate boundary set `{name}`")));
                }
                let mut edges = Vec::with_capacity(n);
                for _ in 0..n {
                    let (l, text) = lines
                        .next()
                        .ok_or_else(|| fmt_err(line, format!("expected {n} boundary lines")))?;
                    let v: Vec<usize> = text
                        .split_whitespace()
                        .map(str::parse)
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| fmt_err(l, format!("invalid boundary entry `{text}`")))?;
                    if v.len() != 2 || v[1] > 3 {
                        return Err(fmt_err(l, format!("expected `element local_edge` with edge in 0..3, got `{text}`")));
                    }
                    edges.push(BoundaryEdge { element: v[0], local_edge: v[1] });
                }
                boundaries.insert(name, edges);
            }
            _ => return Err(fmt_err(line, format!("unexpected line `{block}`"))),
        }
    }

    if !have_nodes || !have_elements {
        return Err(fmt_err(text.lines().count().max(1), "missing `nodes` or `elements` block".into()));
    }
    for (conn, &l) in connectivity.iter().zip(&element_lines) {
        if let Some(bad) = conn.iter().find(|&&n| n >= nodes.len()) {
            return Err(fmt_err(l, format!("node index {bad} out of range ({} nodes)", nodes.len())));
        }
    }
    for (name, edges) in &boundaries {
        if let Some(e) = edges.iter().find(|e| e.element >= connectivity.len()) {
            return Err(Error::Format {
                line: 0,
                message: format!("boundary `{name}` references undefined element {}", e.element),
            });
        }
    }
    Mesh::new(nodes, connectivity, boundaries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn channel(nx: usize, ny: usize) -> Mesh {
        Mesh::generate_rectangle(2.5, 0.4, nx, ny, &RectangleSets::default()).unwrap()
    }

    #[test]
    fn benchmark_channel_counts() {
        let m = channel(128, 16);
        assert_eq!(m.n_elements(), 2048);
        assert_eq!(m.n_q2_nodes(), 8481);
        assert_eq!(2 * m.n_q2_nodes(), 16_962);
        assert_eq!(m.n_q1_nodes(), 2193);
    }

    #[test]
    fn single_element() {
        let m = Mesh::generate_rectangle(1.0, 1.0, 1, 1, &RectangleSets::default()).unwrap();
        assert_eq!((m.n_elements(), m.n_q2_nodes(), m.n_q1_nodes()), (1, 9, 4));
        assert_eq!(m.boundary_edges("inflow").unwrap().len(), 1);
        assert_eq!(m.boundary_edges("outflow").unwrap().len(), 1);
        assert_eq!(m.boundary_edges("walls").unwrap().len(), 2);
    }

    #[test]
    fn set_sizes_and_normals() {
        let m = channel(2, 2);
        assert_eq!(m.boundary_edges("walls").unwrap().len(), 4);
        assert_eq!(m.boundary_edges("inflow").unwrap().len(), 2);
        assert_eq!(m.boundary_edges("outflow").unwrap().len(), 2);

        let m = channel(8, 4);
        let inflow = m.boundary_set("inflow").unwrap();
        assert_eq!(inflow.len(), 4);
        for f in &inflow {
            assert_eq!(f.normal, [-1.0, 0.0]);
        }
        assert_eq!(m.boundary_set("walls").unwrap().len(), 16);
        let err = m.boundary_set("typo").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("typo") && msg.contains("inflow") && msg.contains("walls"), "{msg}");
    }

    #[test]
    fn q1_connectivity_is_corner_subsequence() {
        let m = channel(5, 3);
        for el in m.elements() {
            for a in 0..4 {
                assert_eq!(m.q1_node(el.corners[a]), el.nodes[a]);
            }
        }
    }

    #[test]
    fn closed_boundary_normals_sum_to_zero_and_area() {
        let m = channel(7, 3);
        let mut sum = [0.0; 2];
        let mut perimeter = 0.0;
        for name in m.boundary_names() {
            for f in m.boundary_set(&name).unwrap() {
                sum[0] += f.length * f.normal[0];
                sum[1] += f.length * f.normal[1];
                perimeter += f.length;
            }
        }
        assert!(sum[0].abs() <= 1e-12 * perimeter && sum[1].abs() <= 1e-12 * perimeter);
        let rule = elements::gauss_3x3();
        let area: f64 = (0..m.n_elements())
            .map(|e| {
                let c = m.element_coords(e);
                rule.points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(p, w)| w * elements::map_point(&c, p[0], p[1]).unwrap().det_jacobian)
                    .sum::<f64>()
            })
            .sum();
        assert!((area - 2.5 * 0.4).abs() <= 1e-12 * 1.0);
    }

    #[test]
    fn rejects_bad_dimensions() {
        let s = RectangleSets::default();
        assert!(matches!(Mesh::generate_rectangle(0.0, 1.0, 1, 1, &s), Err(Error::InvalidGeometry(_))));
        assert!(matches!(Mesh::generate_rectangle(1.0, -1.0, 1, 1, &s), Err(Error::InvalidGeometry(_))));
        assert!(matches!(Mesh::generate_rectangle(1.0, 1.0, 0, 1, &s), Err(Error::InvalidGeometry(_))));
    }

    #[test]
    fn text_round_trip() {
        let m = Mesh::generate_rectangle(1.0, 1.0, 2, 2, &RectangleSets::default()).unwrap();
        let back = import_mesh(&m.to_text()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn out_of_range_node_is_format_error() {
        let text = "latinflow-mesh v1 dim 2\nnodes 1\n0 0\nelements 1\n0 0 0 0 0 0 0 0 9\n";
        match import_mesh(text) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 5),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn syntax_error_reports_line() {
        let text = "latinflow-mesh v1 dim 2\n# comment\nnodes 2\n0 0\n1 oops\n";
        match import_mesh(text) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 5),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn clockwise_element_is_rejected() {
        // Two unit squares side by side; the second lists its corners clockwise,
        // which flips the sign of det J = (dx/dxi)(dy/deta) - ... = -1/4.
        let mut text = String::from("latinflow-mesh v1 dim 2\nnodes 15\n");
        for j in 0..3 {
            for i in 0..5 {
                text.push_str(&format!("{} {}\n", 0.5 * i as f64, 0.5 * j as f64));
            }
        }
        text.push_str("elements 2\n");
        text.push_str("0 2 12 10 1 7 11 5 6\n");
        text.push_str("2 12 14 4 7 13 9 3 8\n");
        match import_mesh(&text) {
            Err(Error::DegenerateElement { element, det }) => {
                assert_eq!(element, Some(1));
                assert!(det < 0.0);
            }
            other => panic!("expected geometry error, got {other:?}"),
        }
    }

    #[test]
    fn locate_points() {
        let m = channel(4, 2);
        let (e, r) = m.locate([1.25, 0.0]).unwrap();
        let c = m.element_coords(e);
        let mp = elements::map_point(&c, r[0], r[1]).unwrap();
        assert!((mp.x[0] - 1.25).abs() < 1e-12 && mp.x[1].abs() < 1e-12);
        assert!(m.locate([3.0, 0.0]).is_none());
    }
}
