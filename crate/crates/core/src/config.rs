//! Case configuration: flat `section.key = value` lines, `#` comments.
//!
//! ```text
//! case = channel
//! mesh.kind = rectangle          # or: file
//! mesh.length = 2.5
//! mesh.height = 0.4
//! mesh.nx = 128
//! mesh.ny = 16
//! bc.inflow = pressure 2
//! bc.outflow = pressure 1
//! bc.walls = no_slip
//! time.t_end = 5e-3
//! time.n_steps = 100
//! ```
//!
//! Boundary values are `pressure <p>`, `pressure table <t> <p>, <t> <p>, ...`
//! (piecewise linear, constant beyond the ends), `no_slip` or
//! `velocity <vx> <vy>`. All quantities are SI; units are not checked.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::constitutive::Material;
use crate::elements::Point;
use crate::error::{Error, Result};
use crate::mesh::{import_mesh, Mesh, RectangleSets};

pub const CHANNEL_CASE: &str = include_str!("../cases/channel.case");
pub const CHANNEL_COARSE_CASE: &str = include_str!("../cases/channel_coarse.case");
pub const CYLINDER_CASE: &str = include_str!("../cases/cylinder.case");
pub const CYLINDER_MESH: &str = include_str!("../cases/cylinder.mesh");

/// Bundled case text by name.
pub fn bundled_case(name: &str) -> Option<&'static str> {
    match name {
        "channel" => Some(CHANNEL_CASE),
        "channel_coarse" => Some(CHANNEL_COARSE_CASE),
        "cylinder" => Some(CYLINDER_CASE),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSpec {
    Rectangle {
        length: f64,
        height: f64,
        nx: usize,
        ny: usize,
    },
    File {
        path: String,
    },
}

/// A scalar prescribed over time.
#[derive(Debug, Clone, PartialEq)]
pub enum Trajectory {
    Constant(f64),
    Table(Vec<(f64, f64)>),
}

impl Trajectory {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Trajectory::Constant(v) => *v,
            Trajectory::Table(rows) => {
                let (first, last) = (rows[0], rows[rows.len() - 1]);
                if t <= first.0 {
                    return first.1;
                }
                if t >= last.0 {
                    return last.1;
                }
                let k = rows.partition_point(|r| r.0 <= t);
                let (a, b) = (rows[k - 1], rows[k]);
                a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Trajectory::Constant(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryCondition {
    /// Density Dirichlet value `p / (r T0)` plus the traction `-p n`.
    Pressure(Trajectory),
    NoSlip,
    Velocity([f64; 2]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverPath {
    Pgd,
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub eta_c: f64,
    pub max_iterations: usize,
    /// Defaults to `t_end`.
    pub t_v: Option<f64>,
    /// Defaults to `t_end / 10`.
    pub t_rho: Option<f64>,
    /// Defaults to the largest bounding-box edge.
    pub l_c: Option<f64>,
    pub kappa: f64,
    pub relaxation: f64,
    pub pgd_fixed_point_max: usize,
    /// Forces `eta_c = 1e-8`.
    pub reference_mode: bool,
    pub path: SolverPath,
    pub rho_floor: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            eta_c: 1e-4,
            max_iterations: 100,
            t_v: None,
            t_rho: None,
            l_c: None,
            kappa: 0.1,
            relaxation: 1.0,
            pgd_fixed_point_max: 3,
            reference_mode: false,
            path: SolverPath::Pgd,
            rho_floor: 1e-30,
        }
    }
}

impl SolverSettings {
    pub fn effective_eta_c(&self) -> f64 {
        if self.reference_mode {
            1e-8
        } else {
            self.eta_c
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSettings {
    pub directory: String,
    /// Write every `vtk_stride`-th step; 0 disables field output.
    pub vtk_stride: usize,
    pub probes: Vec<Point>,
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self {
            directory: "output".into(),
            vtk_stride: 1,
            probes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseConfig {
    pub case: String,
    pub mesh: MeshSpec,
    pub material: Material,
    pub boundary: BTreeMap<String, BoundaryCondition>,
    pub body_force: [f64; 2],
    pub t_end: f64,
    pub n_steps: usize,
    pub solver: SolverSettings,
    pub output: OutputSettings,
    /// Directory used to resolve relative mesh paths.
    pub base_dir: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "case",
    "mesh.kind",
    "mesh.path",
    "mesh.length",
    "mesh.height",
    "mesh.nx",
    "mesh.ny",
    "material.mu",
    "material.lambda",
    "material.gas_constant",
    "material.molar_mass",
    "material.temperature",
    "material.p0",
    "loads.body_force",
    "time.t_end",
    "time.n_steps",
    "solver.eta_c",
    "solver.max_iterations",
    "solver.t_v",
    "solver.t_rho",
    "solver.l_c",
    "solver.kappa",
    "solver.relaxation",
    "solver.pgd_fixed_point_max",
    "solver.reference_mode",
    "solver.path",
    "solver.rho_floor",
    "output.directory",
    "output.vtk_stride",
    "output.probes",
];

fn edit_distance(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.chars().enumerate() {
        let mut prev = row[0];
        row[0] = i + 1;
        for j in 0..b.len() {
            let cur = row[j + 1];
            row[j + 1] = (prev + usize::from(ca != b[j])).min(row[j] + 1).min(row[j + 1] + 1);
            prev = cur;
        }
    }
    row[b.len()]
}

fn nearest_key(key: &str) -> &'static str {
    KEYS.iter().min_by_key(|k| edit_distance(key, k)).copied().unwrap_or("case")
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("`{key}` expects a number, got `{v}`")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse::<usize>()
        .map_err(|_| Error::Config(format!("`{key}` expects a non-negative integer, got `{v}`")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("`{key}` expects true or false, got `{v}`"))),
    }
}

fn parse_pair(key: &str, v: &str) -> Result<[f64; 2]> {
    let parts: Vec<&str> = v.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(Error::Config(format!("`{key}` expects two numbers, got `{v}`")));
    }
    Ok([parse_f64(key, parts[0])?, parse_f64(key, parts[1])?])
}

fn parse_bc(key: &str, v: &str) -> Result<BoundaryCondition> {
    let mut words = v.split_whitespace();
    match words.next() {
        Some("no_slip") if words.next().is_none() => Ok(BoundaryCondition::NoSlip),
        Some("velocity") => Ok(BoundaryCondition::Velocity(parse_pair(key, &words.collect::<Vec<_>>().join(" "))?)),
        Some("pressure") => {
            let rest: Vec<&str> = words.collect();
            if rest.first() == Some(&"table") {
                let body = rest[1..].join(" ");
                let mut rows = Vec::new();
                for entry in body.split(',') {
                    rows.push(parse_pair(key, entry)?);
                }
                if rows.is_empty() || rows.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err(Error::Config(format!("`{key}` table needs strictly increasing times")));
                }
                Ok(BoundaryCondition::Pressure(Trajectory::Table(
                    rows.into_iter().map(|r| (r[0], r[1])).collect(),
                )))
            } else if rest.len() == 1 {
                Ok(BoundaryCondition::Pressure(Trajectory::Constant(parse_f64(key, rest[0])?)))
            } else {
                Err(Error::Config(format!("`{key}` expects `pressure <value>` or `pressure table ...`")))
            }
        }
        _ => Err(Error::Config(format!(
            "`{key}` must be `pressure ...`, `no_slip` or `velocity <vx> <vy>`, got `{v}`"
        ))),
    }
}

fn parse_probes(key: &str, v: &str) -> Result<Vec<Point>> {
    v.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_pair(key, s))
        .collect()
}

/// Parses and validates a case.
pub fn parse_config(text: &str) -> Result<CaseConfig> {
    let mut values: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
        let k = k.trim().to_string();
        if !k.starts_with("bc.") && !KEYS.contains(&k.as_str()) {
            return Err(Error::Config(format!(
                "line {}: unknown key `{k}` (did you mean `{}`?)",
                n + 1,
                nearest_key(&k)
            )));
        }
        if values.insert(k.clone(), (n + 1, v.trim().to_string())).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key `{k}`", n + 1)));
        }
    }
    let get = |k: &str| values.get(k).map(|(_, v)| v.as_str());
    let require = |k: &str| get(k).ok_or_else(|| Error::Config(format!("missing required key `{k}`")));

    let case = require("case")?.to_string();
    let mesh = match require("mesh.kind")? {
        "rectangle" => MeshSpec::Rectangle {
            length: parse_f64("mesh.length", require("mesh.length")?)?,
            height: parse_f64("mesh.height", require("mesh.height")?)?,
            nx: parse_usize("mesh.nx", require("mesh.nx")?)?,
            ny: parse_usize("mesh.ny", require("mesh.ny")?)?,
        },
        "file" => MeshSpec::File {
            path: require("mesh.path")?.to_string(),
        },
        other => return Err(Error::Config(format!("`mesh.kind` must be rectangle or file, got `{other}`"))),
    };

    let mut material = Material::channel_default();
    for (key, slot) in [
        ("material.mu", &mut material.mu),
        ("material.lambda", &mut material.lambda),
        ("material.gas_constant", &mut material.gas_constant),
        ("material.molar_mass", &mut material.molar_mass),
        ("material.temperature", &mut material.temperature),
        ("material.p0", &mut material.p0),
    ] {
        if let Some(v) = get(key) {
            *slot = parse_f64(key, v)?;
        }
    }

    let mut boundary = BTreeMap::new();
    for (k, (_, v)) in &values {
        if let Some(name) = k.strip_prefix("bc.") {
            if name.is_empty() {
                return Err(Error::Config("empty boundary set name in `bc.`".into()));
            }
            boundary.insert(name.to_string(), parse_bc(k, v)?);
        }
    }

    let mut solver = SolverSettings::default();
    if let Some(v) = get("solver.eta_c") {
        solver.eta_c = parse_f64("solver.eta_c", v)?;
    }
    if let Some(v) = get("solver.max_iterations") {
        solver.max_iterations = parse_usize("solver.max_iterations", v)?;
    }
    if let Some(v) = get("solver.t_v") {
        solver.t_v = Some(parse_f64("solver.t_v", v)?);
    }
    if let Some(v) = get("solver.t_rho") {
        solver.t_rho = Some(parse_f64("solver.t_rho", v)?);
    }
    if let Some(v) = get("solver.l_c") {
        solver.l_c = Some(parse_f64("solver.l_c", v)?);
    }
    if let Some(v) = get("solver.kappa") {
        solver.kappa = parse_f64("solver.kappa", v)?;
    }
    if let Some(v) = get("solver.relaxation") {
        solver.relaxation = parse_f64("solver.relaxation", v)?;
    }
    if let Some(v) = get("solver.pgd_fixed_point_max") {
        solver.pgd_fixed_point_max = parse_usize("solver.pgd_fixed_point_max", v)?;
    }
    if let Some(v) = get("solver.reference_mode") {
        solver.reference_mode = parse_bool("solver.reference_mode", v)?;
    }
    if let Some(v) = get("solver.path") {
        solver.path = match v {
            "pgd" => SolverPath::Pgd,
            "full" => SolverPath::Full,
            _ => return Err(Error::Config(format!("`solver.path` must be pgd or full, got `{v}`"))),
        };
    }
    if let Some(v) = get("solver.rho_floor") {
        solver.rho_floor = parse_f64("solver.rho_floor", v)?;
    }

    let mut output = OutputSettings::default();
    if let Some(v) = get("output.directory") {
        output.directory = v.to_string();
    }
    if let Some(v) = get("output.vtk_stride") {
        output.vtk_stride = parse_usize("output.vtk_stride", v)?;
    }
    if let Some(v) = get("output.probes") {
        output.probes = parse_probes("output.probes", v)?;
    }

    let config = CaseConfig {
        case,
        mesh,
        material,
        boundary,
        body_force: match get("loads.body_force") {
            Some(v) => parse_pair("loads.body_force", v)?,
            None => [0.0, 0.0],
        },
        t_end: parse_f64("time.t_end", require("time.t_end")?)?,
        n_steps: parse_usize("time.n_steps", require("time.n_steps")?)?,
        solver,
        output,
        base_dir: None,
    };
    config.validate()?;
    Ok(config)
}

/// Reads a case from a file, or a bundled case by name.
pub fn load_config(source: &str) -> Result<CaseConfig> {
    let path = Path::new(source);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = parse_config(&text)?;
        config.base_dir = path.parent().map(Path::to_path_buf);
        return Ok(config);
    }
    match bundled_case(source) {
        Some(text) => parse_config(text),
        None => Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such case file or bundled case"),
        )),
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

impl CaseConfig {
    pub fn validate(&self) -> Result<()> {
        self.material.validate()?;
        if self.n_steps == 0 {
            return Err(Error::Config("time.n_steps must be at least 1".into()));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("time.t_end must be positive, got {}", self.t_end)));
        }
        if let MeshSpec::Rectangle { length, height, nx, ny } = self.mesh {
            if !(length > 0.0 && height > 0.0) || nx == 0 || ny == 0 {
                return Err(Error::Config("rectangle mesh needs positive sizes and subdivisions".into()));
            }
        }
        let s = &self.solver;
        if !(s.eta_c > 0.0) {
            return Err(Error::Config(format!("solver.eta_c must be positive, got {}", s.eta_c)));
        }
        if s.max_iterations == 0 {
            return Err(Error::Config("solver.max_iterations must be at least 1".into()));
        }
        if !(s.kappa > 0.0 && s.kappa <= 1.0) {
            return Err(Error::Config(format!("solver.kappa must lie in (0, 1], got {}", s.kappa)));
        }
        if !(s.relaxation > 0.0 && s.relaxation < 2.0) {
            return Err(Error::Config(format!("solver.relaxation must lie in (0, 2), got {}", s.relaxation)));
        }
        if s.pgd_fixed_point_max == 0 {
            return Err(Error::Config("solver.pgd_fixed_point_max must be at least 1".into()));
        }
        for (name, v) in [("solver.t_v", s.t_v), ("solver.t_rho", s.t_rho), ("solver.l_c", s.l_c)] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(Error::Config(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if !(s.rho_floor > 0.0) {
            return Err(Error::Config(format!("solver.rho_floor must be positive, got {}", s.rho_floor)));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    /// Builds or loads the mesh and checks that every boundary set exists.
    pub fn build_mesh(&self) -> Result<Mesh> {
        let mesh = match &self.mesh {
            MeshSpec::Rectangle { length, height, nx, ny } => {
                Mesh::generate_rectangle(*length, *height, *nx, *ny, &RectangleSets::default())?
            }
            MeshSpec::File { path } => {
                let candidate = match &self.base_dir {
                    Some(dir) => dir.join(path),
                    None => PathBuf::from(path),
                };
                if candidate.is_file() {
                    let text = std::fs::read_to_string(&candidate).map_err(|e| Error::io(&candidate, e))?;
                    import_mesh(&text)?
                } else if path == "cylinder.mesh" {
                    import_mesh(CYLINDER_MESH)?
                } else {
                    return Err(Error::io(
                        candidate,
                        std::io::Error::new(std::io::ErrorKind::NotFound, "mesh file not found"),
                    ));
                }
            }
        };
        for name in self.boundary.keys() {
            mesh.boundary_edges(name)?;
        }
        Ok(mesh)
    }

    /// Inverse of [`parse_config`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "case = {}", self.case);
        match &self.mesh {
            MeshSpec::Rectangle { length, height, nx, ny } => {
                let _ = writeln!(s, "mesh.kind = rectangle");
                let _ = writeln!(s, "mesh.length = {}", fmt_f64(*length));
                let _ = writeln!(s, "mesh.height = {}", fmt_f64(*height));
                let _ = writeln!(s, "mesh.nx = {nx}");
                let _ = writeln!(s, "mesh.ny = {ny}");
            }
            MeshSpec::File { path } => {
                let _ = writeln!(s, "mesh.kind = file");
                let _ = writeln!(s, "mesh.path = {path}");
            }
        }
        let m = &self.material;
        for (k, v) in [
            ("mu", m.mu),
            ("lambda", m.lambda),
            ("gas_constant", m.gas_constant),
            ("molar_mass", m.molar_mass),
            ("temperature", m.temperature),
            ("p0", m.p0),
        ] {
            let _ = writeln!(s, "material.{k} = {}", fmt_f64(v));
        }
        for (name, bc) in &self.boundary {
            let value = match bc {
                BoundaryCondition::NoSlip => "no_slip".to_string(),
                BoundaryCondition::Velocity(v) => format!("velocity {} {}", fmt_f64(v[0]), fmt_f64(v[1])),
                BoundaryCondition::Pressure(Trajectory::Constant(p)) => format!("pressure {}", fmt_f64(*p)),
                BoundaryCondition::Pressure(Trajectory::Table(rows)) => format!(
                    "pressure table {}",
                    rows.iter()
                        .map(|(t, p)| format!("{} {}", fmt_f64(*t), fmt_f64(*p)))
                        .collect::<Vec<_>>()
                        .join(", ")
                ),
            };
            let _ = writeln!(s, "bc.{name} = {value}");
        }
        let _ = writeln!(
            s,
            "loads.body_force = {} {}",
            fmt_f64(self.body_force[0]),
            fmt_f64(self.body_force[1])
        );
        let _ = writeln!(s, "time.t_end = {}", fmt_f64(self.t_end));
        let _ = writeln!(s, "time.n_steps = {}", self.n_steps);
        let sv = &self.solver;
        let _ = writeln!(s, "solver.eta_c = {}", fmt_f64(sv.eta_c));
        let _ = writeln!(s, "solver.max_iterations = {}", sv.max_iterations);
        for (k, v) in [("t_v", sv.t_v), ("t_rho", sv.t_rho), ("l_c", sv.l_c)] {
            if let Some(v) = v {
                let _ = writeln!(s, "solver.{k} = {}", fmt_f64(v));
            }
        }
        let _ = writeln!(s, "solver.kappa = {}", fmt_f64(sv.kappa));
        let _ = writeln!(s, "solver.relaxation = {}", fmt_f64(sv.relaxation));
        let _ = writeln!(s, "solver.pgd_fixed_point_max = {}", sv.pgd_fixed_point_max);
        let _ = writeln!(s, "solver.reference_mode = {}", sv.reference_mode);
        let path = match sv.path {
            SolverPath::Pgd => "pgd",
            SolverPath::Full => "full",
        };
        let _ = writeln!(s, "solver.path = {path}");
        let _ = writeln!(s, "solver.rho_floor = {}", fmt_f64(sv.rho_floor));
        let _ = writeln!(s, "output.directory = {}", self.output.directory);
        let _ = writeln!(s, "output.vtk_stride = {}", self.output.vtk_stride);
        if !self.output.probes.is_empty() {
            let probes: Vec<String> = self
                .output
                .probes
                .iter()
                .map(|p| format!("{} {}", fmt_f64(p[0]), fmt_f64(p[1])))
                .collect();
            let _ = writeln!(s, "output.probes = {}", probes.join("; "));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bundled_channel() {
        let c = parse_config(CHANNEL_CASE).unwrap();
        assert_eq!(c.n_steps, 100);
        assert_eq!(c.t_end, 5e-3);
        assert!((c.dt() - 5e-5).abs() < 1e-18);
        assert_eq!(c.solver.eta_c, 1e-4);
        assert_eq!(
            c.mesh,
            MeshSpec::Rectangle {
                length: 2.5,
                height: 0.4,
                nx: 128,
                ny: 16
            }
        );
        assert_eq!(c.boundary["inflow"], BoundaryCondition::Pressure(Trajectory::Constant(2.0)));
        let m = c.build_mesh().unwrap();
        assert_eq!(m.n_elements(), 2048);
    }

    #[test]
    fn all_bundled_cases_parse() {
        for name in ["channel", "channel_coarse", "cylinder"] {
            let c = load_config(name).unwrap();
            assert_eq!(parse_config(&c.to_text()).unwrap(), c);
        }
    }

    #[test]
    fn errors() {
        let e = parse_config("").unwrap_err();
        assert!(e.to_string().contains("`case`"), "{e}");
        let bad = CHANNEL_CASE.replace("time.n_steps = 100", "time.n_steps = 0");
        assert!(matches!(parse_config(&bad), Err(Error::Config(_))));
        let typo = format!("{CHANNEL_CASE}\nsolver.kapa = 0.2\n");
        let e = parse_config(&typo).unwrap_err().to_string();
        assert!(e.contains("solver.kappa"), "{e}");
        let c = parse_config(&CHANNEL_CASE.replace("bc.walls", "bc.wals")).unwrap();
        assert!(matches!(c.build_mesh(), Err(Error::UnknownBoundarySet { .. })));
        assert!(load_config("/nonexistent/file.case").is_err());
    }

    #[test]
    fn tabulated_pressure() {
        let t = Trajectory::Table(vec![(0.0, 1.0), (1.0, 3.0), (2.0, 3.0)]);
        assert_eq!(t.value(-1.0), 1.0);
        assert_eq!(t.value(0.5), 2.0);
        assert_eq!(t.value(1.5), 3.0);
        assert_eq!(t.value(9.0), 3.0);
        let text = CHANNEL_CASE.replace("bc.inflow = pressure 2", "bc.inflow = pressure table 0 1, 1e-3 2");
        let c = parse_config(&text).unwrap();
        assert_eq!(
            c.boundary["inflow"],
            BoundaryCondition::Pressure(Trajectory::Table(vec![(0.0, 1.0), (1e-3, 2.0)]))
        );
    }

    proptest! {
        #[test]
        fn round_trip(eta in 1e-10f64..1.0, kappa in 0.01f64..1.0, mu in 0.1f64..10.0, n in 1usize..500,
                      px in 0.0f64..2.5, py in -0.2f64..0.2, p in 0.0f64..10.0, full in any::<bool>()) {
            let mut c = parse_config(CHANNEL_CASE).unwrap();
            c.solver.eta_c = eta;
            c.solver.kappa = kappa;
            c.solver.t_rho = Some(kappa * 1e-3);
            c.solver.path = if full { SolverPath::Full } else { SolverPath::Pgd };
            c.material.mu = mu;
            c.n_steps = n;
            c.output.probes = vec![[px, py], [1.25, 0.0]];
            c.boundary.insert("inflow".into(), BoundaryCondition::Pressure(Trajectory::Table(vec![(0.0, p), (1.0, 2.0 * p)])));
            c.boundary.insert("walls".into(), BoundaryCondition::Velocity([p, -p]));
            prop_assert_eq!(parse_config(&c.to_text()).unwrap(), c);
        }
    }
}
