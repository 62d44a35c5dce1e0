//! Field, history, probe and mode files, plus the reader used by `compare`.
//!
//! Fields go to legacy ASCII VTK unstructured grids with 9-node biquadratic
//! cells. Density and pressure live on the corner nodes and are interpolated
//! to the midside and center nodes so that every point carries all arrays.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::driver::{IterationRecord, Solution};
use crate::elements::{map_point, Point};
use crate::error::{Error, Result};
use crate::global_stage::{FieldKind, PgdField};
use crate::mesh::Mesh;

const VTK_BIQUADRATIC_QUAD: u32 = 28;

/// Field names written to and read from VTK files.
pub const FIELD_NAMES: [&str; 3] = ["velocity", "pressure", "density"];

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_all(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Extends corner-node values to all Q2 nodes by bilinear interpolation.
pub fn q1_to_q2(mesh: &Mesh, q1: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; mesh.n_q2_nodes()];
    for el in mesh.elements() {
        let c: Vec<f64> = el.corners.iter().map(|&k| q1[k]).collect();
        for a in 0..4 {
            out[el.nodes[a]] = c[a];
            out[el.nodes[4 + a]] = 0.5 * (c[a] + c[(a + 1) % 4]);
        }
        out[el.nodes[8]] = 0.25 * c.iter().sum::<f64>();
    }
    out
}

/// Nodal arrays of one output step, all indexed by Q2 node.
#[derive(Debug, Clone, PartialEq)]
pub struct VtkFields {
    pub title: String,
    pub points: Vec<Point>,
    pub velocity: Vec<[f64; 2]>,
    pub pressure: Vec<f64>,
    pub density: Vec<f64>,
}

impl VtkFields {
    pub fn from_solution(mesh: &Mesh, solution: &Solution, step: usize) -> Self {
        let v = &solution.velocity[step];
        Self {
            title: format!("step {step} time {:e}", solution.times[step]),
            points: mesh.nodes().to_vec(),
            velocity: v.chunks_exact(2).map(|c| [c[0], c[1]]).collect(),
            pressure: q1_to_q2(mesh, &solution.pressure(step)),
            density: q1_to_q2(mesh, &solution.density[step]),
        }
    }

    fn field(&self, name: &str) -> Vec<f64> {
        match name {
            "velocity" => self.velocity.iter().flat_map(|v| *v).collect(),
            "pressure" => self.pressure.clone(),
            _ => self.density.clone(),
        }
    }
}

pub fn vtk_text(mesh: &Mesh, fields: &VtkFields) -> String {
    let n = fields.points.len();
    let mut s = String::with_capacity(120 * n);
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "{}", fields.title);
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {n} double");
    for p in &fields.points {
        let _ = writeln!(s, "{:e} {:e} 0", p[0], p[1]);
    }
    let n_el = mesh.n_elements();
    let _ = writeln!(s, "CELLS {n_el} {}", n_el * 10);
    for el in mesh.elements() {
        s.push('9');
        for k in el.nodes {
            let _ = write!(s, " {k}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "CELL_TYPES {n_el}");
    for _ in 0..n_el {
        let _ = writeln!(s, "{VTK_BIQUADRATIC_QUAD}");
    }
    let _ = writeln!(s, "POINT_DATA {n}");
    let _ = writeln!(s, "VECTORS velocity double");
    for v in &fields.velocity {
        let _ = writeln!(s, "{:e} {:e} 0", v[0], v[1]);
    }
    for (name, data) in [("pressure", &fields.pressure), ("density", &fields.density)] {
        let _ = writeln!(s, "SCALARS {name} double 1");
        let _ = writeln!(s, "LOOKUP_TABLE default");
        for x in data.iter() {
            let _ = writeln!(s, "{x:e}");
        }
    }
    s
}

pub fn write_vtk(path: &Path, mesh: &Mesh, fields: &VtkFields) -> Result<()> {
    write_all(path, &vtk_text(mesh, fields))
}

pub fn vtk_file_name(step: usize) -> String {
    format!("fields_{step:05}.vtk")
}

/// Writes steps `0, stride, 2 stride, ...` and always the last step.
pub fn write_solution_vtk(dir: &Path, mesh: &Mesh, solution: &Solution, stride: usize) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if stride == 0 {
        return Ok(written);
    }
    ensure_dir(dir)?;
    let last = solution.n_steps();
    for step in (0..=last).filter(|s| s % stride == 0 || *s == last) {
        let path = dir.join(vtk_file_name(step));
        write_vtk(&path, mesh, &VtkFields::from_solution(mesh, solution, step))?;
        written.push(path);
    }
    Ok(written)
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        line,
        message: format!("{}: {}", path.display(), message.into()),
    }
}

/// Reads a file written by [`write_vtk`].
pub fn read_vtk(path: &Path) -> Result<VtkFields> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() < 5 || !lines[0].starts_with("# vtk DataFile") {
        return Err(parse_err(path, 1, "not a legacy VTK file"));
    }
    let title = lines[1].to_string();
    let mut points = Vec::new();
    let mut velocity = Vec::new();
    let mut scalars: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let num = |i: usize, tok: &str| -> Result<f64> {
        tok.parse::<f64>().map_err(|_| parse_err(path, i + 1, format!("bad number `{tok}`")))
    };
    let mut i = 2;
    while i < lines.len() {
        let head: Vec<&str> = lines[i].split_whitespace().collect();
        match head.first().copied() {
            Some("POINTS") => {
                let n: usize = head.get(1).and_then(|t| t.parse().ok()).ok_or_else(|| parse_err(path, i + 1, "bad POINTS"))?;
                for k in 0..n {
                    let j = i + 1 + k;
                    let t: Vec<&str> = lines.get(j).ok_or_else(|| parse_err(path, j + 1, "truncated"))?.split_whitespace().collect();
                    if t.len() < 2 {
                        return Err(parse_err(path, j + 1, "expected coordinates"));
                    }
                    points.push([num(j, t[0])?, num(j, t[1])?]);
                }
                i += n + 1;
            }
            Some("VECTORS") => {
                for k in 0..points.len() {
                    let j = i + 1 + k;
                    let t: Vec<&str> = lines.get(j).ok_or_else(|| parse_err(path, j + 1, "truncated"))?.split_whitespace().collect();
                    if t.len() < 2 {
                        return Err(parse_err(path, j + 1, "expected vector"));
                    }
                    velocity.push([num(j, t[0])?, num(j, t[1])?]);
                }
                i += points.len() + 1;
            }
            Some("SCALARS") => {
                let name = head.get(1).ok_or_else(|| parse_err(path, i + 1, "unnamed SCALARS"))?.to_string();
                let mut data = Vec::with_capacity(points.len());
                for k in 0..points.len() {
                    let j = i + 2 + k;
                    let t = lines.get(j).ok_or_else(|| parse_err(path, j + 1, "truncated"))?.trim();
                    data.push(num(j, t)?);
                }
                scalars.insert(name, data);
                i += points.len() + 2;
            }
            _ => i += 1,
        }
    }
    let mut take = |name: &str| scalars.remove(name).ok_or_else(|| parse_err(path, lines.len(), format!("missing `{name}` array")));
    let pressure = take("pressure")?;
    let density = take("density")?;
    if velocity.len() != points.len() {
        return Err(parse_err(path, lines.len(), "missing `velocity` array"));
    }
    Ok(VtkFields {
        title,
        points,
        velocity,
        pressure,
        density,
    })
}

/// Relative space-time L2 difference per field between two output
/// directories, `||a - b|| / ||b||` over all nodes of all common files.
pub fn compare_dirs(a: &Path, b: &Path) -> Result<Vec<(String, f64)>> {
    let list = |dir: &Path| -> Result<Vec<String>> {
        let mut names: Vec<String> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|n| n.ends_with(".vtk"))
            .collect();
        names.sort();
        Ok(names)
    };
    let (na, nb) = (list(a)?, list(b)?);
    if na.is_empty() {
        return Err(Error::Domain(format!("no VTK files in {}", a.display())));
    }
    if na != nb {
        return Err(Error::Domain(format!(
            "{} and {} hold different VTK file sets",
            a.display(),
            b.display()
        )));
    }
    let mut diff = [0.0; 3];
    let mut norm = [0.0; 3];
    for name in &na {
        let fa = read_vtk(&a.join(name))?;
        let fb = read_vtk(&b.join(name))?;
        if fa.points.len() != fb.points.len() {
            return Err(Error::Domain(format!("{name}: node counts differ")));
        }
        for (k, field) in FIELD_NAMES.iter().enumerate() {
            for (x, y) in fa.field(field).iter().zip(fb.field(field)) {
                diff[k] += (x - y) * (x - y);
                norm[k] += y * y;
            }
        }
    }
    Ok(FIELD_NAMES
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let rel = if norm[k] > 0.0 {
                (diff[k] / norm[k]).sqrt()
            } else if diff[k] == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            (name.to_string(), rel)
        })
        .collect())
}

pub const HISTORY_HEADER: &str = "iteration,eta_v,eta_rho,n_modes_v,n_modes_rho,wall_seconds";

fn history_row(r: &IterationRecord) -> String {
    format!(
        "{},{:e},{:e},{},{},{:.6}",
        r.iteration, r.eta_v, r.eta_rho, r.n_modes_v, r.n_modes_rho, r.wall_seconds
    )
}

/// Convergence history written one flushed row per iteration.
pub struct HistoryWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl HistoryWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut out = create(path)?;
        writeln!(out, "{HISTORY_HEADER}").map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            out,
        })
    }

    pub fn push(&mut self, record: &IterationRecord) -> Result<()> {
        writeln!(self.out, "{}", history_row(record))
            .and_then(|_| self.out.flush())
            .map_err(|e| Error::io(&self.path, e))
    }
}

pub fn write_history(path: &Path, history: &[IterationRecord]) -> Result<()> {
    let mut w = HistoryWriter::create(path)?;
    for r in history {
        w.push(r)?;
    }
    Ok(())
}

/// `(v_x, v_y, p)` of a solution at a point, per time step.
pub fn probe(mesh: &Mesh, solution: &Solution, point: Point) -> Result<Vec<[f64; 3]>> {
    let (e, r) = mesh
        .locate(point)
        .ok_or_else(|| Error::Domain(format!("probe ({}, {}) lies outside the mesh", point[0], point[1])))?;
    let mp = map_point(&mesh.element_coords(e), r[0], r[1])?;
    let el = &mesh.elements()[e];
    Ok((0..=solution.n_steps())
        .map(|s| {
            let v = &solution.velocity[s];
            let mut out = [0.0; 3];
            for (a, &n) in el.nodes.iter().enumerate() {
                out[0] += mp.q2_values[a] * v[2 * n];
                out[1] += mp.q2_values[a] * v[2 * n + 1];
            }
            for (a, &c) in el.corners.iter().enumerate() {
                out[2] += mp.q1_values[a] * solution.material.pressure(solution.density[s][c]);
            }
            out
        })
        .collect())
}

pub fn write_probes(path: &Path, mesh: &Mesh, solution: &Solution, probes: &[Point]) -> Result<()> {
    let series = probes
        .iter()
        .map(|&p| probe(mesh, solution, p))
        .collect::<Result<Vec<_>>>()?;
    let mut s = String::from("time");
    for k in 0..probes.len() {
        let _ = write!(s, ",vx_{k},vy_{k},p_{k}");
    }
    s.push('\n');
    for (step, t) in solution.times.iter().enumerate() {
        let _ = write!(s, "{t:e}");
        for ser in &series {
            let [vx, vy, p] = ser[step];
            let _ = write!(s, ",{vx:e},{vy:e},{p:e}");
        }
        s.push('\n');
    }
    write_all(path, &s)
}

/// One CSV per spatial mode (node coordinates plus nodal values) and one CSV
/// of all time functions. `times` holds `t_1..t_N`.
pub fn export_modes(dir: &Path, mesh: &Mesh, field: &PgdField, times: &[f64]) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let name = field.kind.name();
    let mut written = Vec::new();
    for (i, mode) in field.modes.iter().enumerate() {
        let path = dir.join(format!("mode_{name}_{i:03}.csv"));
        let mut s = String::new();
        match field.kind {
            FieldKind::Velocity => {
                s.push_str("x,y,vx,vy\n");
                for (p, v) in mesh.nodes().iter().zip(mode.chunks_exact(2)) {
                    let _ = writeln!(s, "{:e},{:e},{:e},{:e}", p[0], p[1], v[0], v[1]);
                }
            }
            FieldKind::Density => {
                s.push_str("x,y,rho\n");
                for (k, v) in mode.iter().enumerate() {
                    let p = mesh.q1_coords(k);
                    let _ = writeln!(s, "{:e},{:e},{:e}", p[0], p[1], v);
                }
            }
        }
        write_all(&path, &s)?;
        written.push(path);
    }
    let path = dir.join(format!("time_functions_{name}.csv"));
    let mut s = String::from("time");
    for i in 0..field.n_modes() {
        let _ = write!(s, ",mode_{i}");
    }
    s.push('\n');
    for (t, time) in times.iter().enumerate() {
        let _ = write!(s, "{time:e}");
        for c in &field.coefficients {
            let _ = write!(s, ",{:e}", c[t]);
        }
        s.push('\n');
    }
    write_all(&path, &s)?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::RectangleSets;

    fn mesh() -> Mesh {
        Mesh::generate_rectangle(2.0, 1.0, 2, 2, &RectangleSets::default()).unwrap()
    }

    #[test]
    fn q1_extension_is_exact_for_bilinear_fields() {
        let m = mesh();
        let q1: Vec<f64> = (0..m.n_q1_nodes()).map(|k| {
            let p = m.q1_coords(k);
            1.0 + 2.0 * p[0] - p[1] + 0.5 * p[0] * p[1]
        }).collect();
        let q2 = q1_to_q2(&m, &q1);
        for (p, v) in m.nodes().iter().zip(q2) {
            assert!((v - (1.0 + 2.0 * p[0] - p[1] + 0.5 * p[0] * p[1])).abs() < 1e-14);
        }
    }

    #[test]
    fn vtk_round_trip() {
        let m = mesh();
        let n = m.n_q2_nodes();
        let fields = VtkFields {
            title: "step 3 time 1.5e-4".into(),
            points: m.nodes().to_vec(),
            velocity: (0..n).map(|k| [k as f64 * 0.1, -1.0 / (k as f64 + 3.0)]).collect(),
            pressure: (0..n).map(|k| 1.0 + k as f64 / 7.0).collect(),
            density: vec![0.0; n],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.vtk");
        write_vtk(&path, &m, &fields).unwrap();
        assert_eq!(read_vtk(&path).unwrap(), fields);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("CELL_TYPES 4\n28\n"));
    }

    #[test]
    fn truncated_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.vtk");
        fs::write(&path, "# vtk DataFile Version 3.0\nx\nASCII\nDATASET UNSTRUCTURED_GRID\nPOINTS 3 double\n0 0 0\n").unwrap();
        assert!(matches!(read_vtk(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn unwritable_directory_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain");
        fs::write(&file, "").unwrap();
        assert!(matches!(ensure_dir(&file.join("sub")), Err(Error::Io { .. })));
    }
}
