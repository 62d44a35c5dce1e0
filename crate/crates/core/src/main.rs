use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use latinflow::config::{load_config, CaseConfig};
use latinflow::driver::{run_latin, LatinSettings, Problem, Solution};
use latinflow::mesh::Mesh;
use latinflow::oracles::{monolithic_solve, poiseuille, ChannelSpec};
use latinflow::output::{self, HistoryWriter, VtkFields};
use latinflow::{Error, Result};

/// Space-time LATIN-PGD solver for 2D compressible laminar flow.
#[derive(Parser)]
#[command(name = "latinflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a case with the LATIN method.
    Run {
        /// Case file, or the name of a bundled case (channel, channel_coarse, cylinder).
        config: String,
        /// Output directory [default: <output.directory>/latin].
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Override solver.max_iterations.
        #[arg(long)]
        max_iterations: Option<usize>,
    },
    /// Solve a case with the monolithic backward Euler reference solver.
    Oracle {
        config: String,
        /// Output directory [default: <output.directory>/oracle].
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write the steady Poiseuille solution of a channel case.
    Analytic {
        config: String,
        /// Output directory [default: <output.directory>/analytic].
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Relative space-time L2 differences per field between two output directories.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Exit with status 2 when a difference exceeds this value.
        #[arg(long, default_value_t = 0.01)]
        tolerance: f64,
    },
    /// Write the mesh of a case.
    Meshgen {
        config: String,
        /// Mesh file [default: <output.directory>/<case>.mesh].
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

enum Outcome {
    Success,
    NotConverged,
}

fn out_dir(config: &CaseConfig, given: Option<PathBuf>, sub: &str) -> PathBuf {
    given.unwrap_or_else(|| Path::new(&config.output.directory).join(sub))
}

fn write_fields(dir: &Path, config: &CaseConfig, mesh: &Mesh, solution: &Solution) -> Result<()> {
    output::ensure_dir(dir)?;
    let files = output::write_solution_vtk(dir, mesh, solution, config.output.vtk_stride)?;
    info!("wrote {} VTK files to {}", files.len(), dir.display());
    if !config.output.probes.is_empty() {
        output::write_probes(&dir.join("probes.csv"), mesh, solution, &config.output.probes)?;
    }
    Ok(())
}

fn run(config: &str, out: Option<PathBuf>, max_iterations: Option<usize>) -> Result<Outcome> {
    let mut config = load_config(config)?;
    if let Some(n) = max_iterations {
        config.solver.max_iterations = n;
        config.validate()?;
    }
    let dir = out_dir(&config, out, "latin");
    output::ensure_dir(&dir)?;
    let problem = Problem::new(&config, config.build_mesh()?)?;
    let mut history = HistoryWriter::create(&dir.join("history.csv"))?;
    let mut write_error = None;
    let solution = run_latin(&problem, &LatinSettings::from_config(&config), |r| {
        info!(
            "iteration {}: eta_v {:.3e} eta_rho {:.3e} modes {}/{}",
            r.iteration, r.eta_v, r.eta_rho, r.n_modes_v, r.n_modes_rho
        );
        if let Err(e) = history.push(r) {
            write_error.get_or_insert(e);
        }
    })?;
    if let Some(e) = write_error {
        return Err(e);
    }
    write_fields(&dir, &config, problem.mesh(), &solution)?;
    let times = &problem.times()[1..];
    for field in [&solution.density_field, &solution.velocity_field].into_iter().flatten() {
        if field.full.is_none() {
            output::export_modes(&dir.join("modes"), problem.mesh(), field, times)?;
        }
    }
    let last = solution.history.last();
    println!(
        "{}: {} after {} iterations (eta_v {:.3e}, eta_rho {:.3e}, modes v/rho {}/{})",
        config.case,
        if solution.converged { "converged" } else { "not converged" },
        solution.history.len(),
        last.map_or(f64::NAN, |r| r.eta_v),
        last.map_or(f64::NAN, |r| r.eta_rho),
        last.map_or(0, |r| r.n_modes_v),
        last.map_or(0, |r| r.n_modes_rho),
    );
    Ok(if solution.converged {
        Outcome::Success
    } else {
        Outcome::NotConverged
    })
}

fn oracle(config: &str, out: Option<PathBuf>) -> Result<Outcome> {
    let config = load_config(config)?;
    let dir = out_dir(&config, out, "oracle");
    let problem = Problem::new(&config, config.build_mesh()?)?;
    let solution = monolithic_solve(&problem)?;
    write_fields(&dir, &config, problem.mesh(), &solution)?;
    println!("{}: monolithic solution written to {}", config.case, dir.display());
    Ok(Outcome::Success)
}

fn analytic(config: &str, out: Option<PathBuf>) -> Result<Outcome> {
    let config = load_config(config)?;
    let spec = ChannelSpec::from_config(&config)?;
    let mesh = config.build_mesh()?;
    let dir = out_dir(&config, out, "analytic");
    output::ensure_dir(&dir)?;
    let mut fields = VtkFields {
        title: String::new(),
        points: mesh.nodes().to_vec(),
        velocity: Vec::with_capacity(mesh.n_q2_nodes()),
        pressure: Vec::with_capacity(mesh.n_q2_nodes()),
        density: Vec::with_capacity(mesh.n_q2_nodes()),
    };
    for p in mesh.nodes() {
        let (vx, pr) = poiseuille(&spec, p[0], p[1])?;
        fields.velocity.push([vx, 0.0]);
        fields.pressure.push(pr);
        fields.density.push(spec.material.density(pr));
    }
    let stride = config.output.vtk_stride.max(1);
    let dt = config.dt();
    for step in (0..=config.n_steps).filter(|s| s % stride == 0 || *s == config.n_steps) {
        fields.title = format!("step {step} time {:e} steady", step as f64 * dt);
        output::write_vtk(&dir.join(output::vtk_file_name(step)), &mesh, &fields)?;
    }
    println!("{}: steady channel solution written to {}", config.case, dir.display());
    Ok(Outcome::Success)
}

fn compare(a: &Path, b: &Path, tolerance: f64) -> Result<Outcome> {
    let diffs = output::compare_dirs(a, b)?;
    let mut ok = true;
    for (name, rel) in &diffs {
        println!("{name}: {rel:.6e}");
        ok &= *rel <= tolerance;
    }
    Ok(if ok { Outcome::Success } else { Outcome::NotConverged })
}

fn meshgen(config: &str, out: Option<PathBuf>) -> Result<Outcome> {
    let config = load_config(config)?;
    let mesh = config.build_mesh()?;
    let path = out.unwrap_or_else(|| Path::new(&config.output.directory).join(format!("{}.mesh", config.case)));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        output::ensure_dir(parent)?;
    }
    std::fs::write(&path, mesh.to_text()).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    println!(
        "{}: {} elements, {} nodes written to {}",
        config.case,
        mesh.n_elements(),
        mesh.n_q2_nodes(),
        path.display()
    );
    Ok(Outcome::Success)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            output,
            max_iterations,
        } => run(&config, output, max_iterations),
        Command::Oracle { config, output } => oracle(&config, output),
        Command::Analytic { config, output } => analytic(&config, output),
        Command::Compare { a, b, tolerance } => compare(&a, &b, tolerance),
        Command::Meshgen { config, output } => meshgen(&config, output),
    };
    match result {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
