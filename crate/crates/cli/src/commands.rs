//! The CLI verbs. Each writes its artifacts into `config.out` plus a
//! `manifest.json`.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use hardy_core::hardy_dict::experiment::{benchmark_target, convergence_level_cap, envelope, ConvergenceRow};
use hardy_core::hardy_dict::{
    build_dictionary, minnorm_assemble, BepSolver, FitProblem, FitTarget, MinNormOptions, TestField,
};
use hardy_core::harmonics::{RingGrid, SpectralScalarField, SpectralVectorField};
use hardy_core::potentials::{hardy_hodge_decompose, vector_energy};
use hardy_core::sphere_geom::{write_points_csv, HierarchicalPointSets, UnitVector, Vec3};
use serde::Serialize;
use serde_json::json;

use crate::config::ExperimentConfig;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or input file; exit code 2.
    Config(String),
    /// Failure while computing or writing results; exit code 3.
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Run(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Run(m) => write!(f, "{m}"),
        }
    }
}

impl From<hardy_core::Error> for CliError {
    fn from(e: hardy_core::Error) -> Self {
        match e {
            hardy_core::Error::InvalidArgument(_) => CliError::Config(e.to_string()),
            _ => CliError::Run(e.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Run(format!("{}: {e}", path.display()))
}

#[derive(Serialize)]
struct LevelTiming {
    sigma: String,
    n: usize,
    seconds: f64,
}

/// Run record written next to the outputs.
struct Manifest<'a> {
    command: &'static str,
    config: &'a ExperimentConfig,
    start: Instant,
    levels: Vec<LevelTiming>,
    outputs: Vec<String>,
}

impl<'a> Manifest<'a> {
    fn new(command: &'static str, config: &'a ExperimentConfig) -> Self {
        Manifest {
            command,
            config,
            start: Instant::now(),
            levels: Vec::new(),
            outputs: Vec::new(),
        }
    }

    fn time<T>(&mut self, sigma: &str, n: usize, f: impl FnOnce() -> T) -> T {
        let t0 = Instant::now();
        let out = f();
        self.levels.push(LevelTiming {
            sigma: sigma.to_string(),
            n,
            seconds: t0.elapsed().as_secs_f64(),
        });
        out
    }

    fn output(&mut self, path: &Path) {
        self.outputs
            .push(path.file_name().unwrap_or_default().to_string_lossy().into_owned());
    }

    fn write(&self, status: &Result<(), CliError>) -> Result<(), CliError> {
        let path = self.config.out.join("manifest.json");
        let value = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.config,
            "config_text": self.config.to_string(),
            "levels": self.levels,
            "total_seconds": self.start.elapsed().as_secs_f64(),
            "outputs": self.outputs,
            "status": match status {
                Ok(()) => "ok".to_string(),
                Err(e) => e.to_string(),
            },
        });
        write_json(&path, &value)
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Run(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

/// Runs `body` and records the outcome in the manifest either way.
fn with_manifest(
    command: &'static str,
    config: &ExperimentConfig,
    body: impl FnOnce(&mut Manifest) -> Result<(), CliError>,
) -> Result<(), CliError> {
    fs::create_dir_all(&config.out).map_err(io_err(&config.out))?;
    let mut manifest = Manifest::new(command, config);
    let result = body(&mut manifest);
    manifest.write(&result)?;
    result
}

fn hierarchy(config: &ExperimentConfig) -> Result<HierarchicalPointSets, CliError> {
    Ok(config.settings().hierarchy(config.nmax)?)
}

fn target(config: &ExperimentConfig) -> Result<FitTarget, CliError> {
    Ok(benchmark_target(config.degree, config.sobolev)?)
}

pub fn gen_points(config: &ExperimentConfig, grid: bool) -> Result<(), CliError> {
    with_manifest("gen-points", config, |m| {
        let h = m.time("-", config.nmax, || hierarchy(config))?;
        let summary = config.out.join("levels.csv");
        let mut s = create(&summary)?;
        writeln!(s, "n,count,mesh_width,separation").map_err(io_err(&summary))?;
        for (i, level) in h.levels().iter().enumerate() {
            let path = config.out.join(format!("points_level{}.csv", i + 1));
            let mut w = create(&path)?;
            write_points_csv(&mut w, level.points()).map_err(io_err(&path))?;
            w.flush().map_err(io_err(&path))?;
            m.output(&path);
            writeln!(
                s,
                "{},{},{:.6e},{:.6e}",
                i + 1,
                level.len(),
                level.mesh_width(),
                level.separation()
            )
            .map_err(io_err(&summary))?;
        }
        s.flush().map_err(io_err(&summary))?;
        m.output(&summary);
        if grid {
            let path = config.out.join(format!("grid_degree{}.csv", config.degree));
            let mut w = create(&path)?;
            write_points_csv(&mut w, &field_grid(config.degree).points()).map_err(io_err(&path))?;
            w.flush().map_err(io_err(&path))?;
            m.output(&path);
        }
        Ok(())
    })
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    #[serde(flatten)]
    row: &'a ConvergenceRow,
    envelope: f64,
}

pub fn convergence(config: &ExperimentConfig) -> Result<(), CliError> {
    let regions = config.regions().map_err(CliError::Config)?;
    with_manifest("convergence", config, |m| {
        let settings = config.settings();
        let h = hierarchy(config)?;
        let target = target(config)?;
        let path = config.out.join("convergence.csv");
        let mut csv = create(&path)?;
        writeln!(csv, "{}", ConvergenceRow::CSV_HEADER).map_err(io_err(&path))?;
        m.output(&path);
        let mut rows = Vec::new();
        for (label, cap) in &regions {
            for n in 1..=config.nmax {
                let (row, _, _) = m.time(label, n, || {
                    convergence_level_cap(&h, &target, *cap, label, n, &settings)
                })?;
                writeln!(csv, "{}", row.csv_line()).map_err(io_err(&path))?;
                csv.flush().map_err(io_err(&path))?;
                rows.push(row);
            }
        }
        let summary: Vec<SummaryRow> = rows
            .iter()
            .map(|row| SummaryRow {
                row,
                envelope: envelope(row.n, row.h_n, config.sobolev),
            })
            .collect();
        let path = config.out.join("convergence_summary.json");
        write_json(
            &path,
            &json!({
                "baseline_rel_error": target.plus.l2_norm() / target.denominator(),
                "envelope": "0.01 * (0.15^n + h_n^s)",
                "rows": summary,
            }),
        )?;
        m.output(&path);
        Ok(())
    })
}

/// Gauss grid on which `decompose --field` expects its samples. Tangential
/// components of degree `n` potentials are polynomials of degree `n + 1`.
pub fn field_grid(degree: usize) -> RingGrid {
    RingGrid::for_degree(degree + 1)
}

/// Reads `x,y,z,vx,vy,vz` rows given on [`field_grid`] in grid order.
fn read_field(path: &Path, grid: &RingGrid) -> Result<Vec<Vec3>, CliError> {
    let file = File::open(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let points = grid.points();
    let mut values = Vec::with_capacity(points.len());
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('x') {
            continue;
        }
        let bad = |msg: String| CliError::Config(format!("{} line {}: {msg}", path.display(), i + 1));
        let v: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| bad(e.to_string()))?;
        if v.len() != 6 {
            return Err(bad("expected x,y,z,vx,vy,vz".into()));
        }
        let Some(p) = points.get(values.len()) else {
            return Err(bad(format!("more than the {} grid points", points.len())));
        };
        if (p.vec() - Vec3::new(v[0], v[1], v[2])).norm() > 1e-9 {
            return Err(bad("point does not match the Gauss grid of this degree".into()));
        }
        values.push(Vec3::new(v[3], v[4], v[5]));
    }
    if values.len() != points.len() {
        return Err(CliError::Config(format!(
            "{}: {} rows, the grid has {} points",
            path.display(),
            values.len(),
            points.len()
        )));
    }
    Ok(values)
}

fn degree_table(f: &SpectralScalarField) -> Vec<Vec<f64>> {
    (0..=f.max_degree()).map(|n| f.degree(n).to_vec()).collect()
}

pub fn decompose(config: &ExperimentConfig, field: Option<&PathBuf>) -> Result<(), CliError> {
    with_manifest("decompose", config, |m| {
        let nmax = config.degree;
        let builtin = TestField::default();
        let (spectral, input_sq): (SpectralVectorField, f64) = m.time("-", nmax, || -> Result<_, CliError> {
            match field {
                Some(path) => {
                    let grid = field_grid(nmax);
                    let values = read_field(path, &grid)?;
                    let sq: Vec<f64> = values.iter().map(|v| v.dot(*v)).collect();
                    Ok((hardy_hodge_decompose(&grid, &values, nmax)?, grid.integrate(&sq)))
                }
                None => {
                    let grid = RingGrid::band(builtin.a, 1.0, 200, 800);
                    let sq: Vec<f64> = builtin.eval_many(&grid.points()).iter().map(|v| v.dot(*v)).collect();
                    Ok((builtin.spectral(nmax)?, grid.integrate(&sq)))
                }
            }
        })?;
        let (ep, em, ed) = vector_energy(&spectral);
        let path = config.out.join("decompose.json");
        write_json(
            &path,
            &json!({
                "source": field.map(|p| p.display().to_string()).unwrap_or_else(|| "builtin".into()),
                "degree": nmax,
                "energy": {
                    "plus": ep,
                    "minus": em,
                    "df": ed,
                    "total": ep + em + ed,
                    "input_l2_squared": input_sq,
                },
                "coefficients": {
                    "plus": degree_table(&spectral.plus),
                    "minus": degree_table(&spectral.minus),
                    "df": degree_table(&spectral.toroidal),
                },
            }),
        )?;
        m.output(&path);

        // |f| on a 1-degree grid; the exact column only for the builtin field
        let path = config.out.join("magnitude.csv");
        let mut w = create(&path)?;
        writeln!(w, "theta,phi,truncated,exact").map_err(io_err(&path))?;
        let pts: Vec<(f64, f64, UnitVector)> = (0..=180)
            .flat_map(|i| {
                (0..360).map(move |j| {
                    let (t, p) = ((i as f64).to_radians(), (j as f64).to_radians());
                    (t, p, UnitVector::from_spherical(t, p))
                })
            })
            .collect();
        let ys: Vec<UnitVector> = pts.iter().map(|p| p.2).collect();
        let approx = spectral.evaluate_many(&ys);
        for ((t, p, y), a) in pts.iter().zip(&approx) {
            let exact = if field.is_none() {
                format!("{:.6e}", builtin.eval(*y).norm())
            } else {
                String::new()
            };
            writeln!(w, "{t:.6},{p:.6},{:.6e},{exact}", a.norm()).map_err(io_err(&path))?;
        }
        w.flush().map_err(io_err(&path))?;
        m.output(&path);
        Ok(())
    })
}

pub fn minnorm(config: &ExperimentConfig) -> Result<(), CliError> {
    let regions = config.regions().map_err(CliError::Config)?;
    with_manifest("minnorm", config, |m| {
        let h = hierarchy(config)?;
        let target = target(config)?;
        let n = config.nmax;
        let opts = MinNormOptions {
            max_degree: config.degree,
            ..MinNormOptions::default()
        };
        for (label, cap) in &regions {
            let record = m.time(label, n, || -> Result<_, CliError> {
                let dict = build_dictionary(*cap, n, &h, &config.settings().dictionary_params())?;
                let fit = FitProblem::new(&dict, &target).fit_best(&config.lambdas())?;
                let (_, diag) = minnorm_assemble(&fit.coefficients, &dict, &opts)?;
                Ok(json!({
                    "sigma": label,
                    "level": n,
                    "num_atoms": dict.len(),
                    "lambda": fit.lambda,
                    "rel_error": fit.relative_error,
                    "sup_off_cap_relative": if diag.l2_norm > 0.0 { diag.sup_off_cap_spectral / diag.l2_norm } else { 0.0 },
                    "diagnostics": diag,
                }))
            })?;
            let path = config.out.join(format!("minnorm_{label}.json"));
            write_json(&path, &record)?;
            m.output(&path);
        }
        Ok(())
    })
}

pub fn bep(config: &ExperimentConfig) -> Result<(), CliError> {
    let regions = config.regions().map_err(CliError::Config)?;
    with_manifest("bep", config, |m| {
        let h = hierarchy(config)?;
        let target = target(config)?;
        let n = config.nmax;
        for (label, cap) in &regions {
            let dict = build_dictionary(*cap, n, &h, &config.settings().dictionary_params())?;
            if dict.is_empty() {
                eprintln!("hardy: no atoms for {label} at level {n}, skipping the sweep");
                continue;
            }
            let path = config.out.join(format!("bep_{label}.csv"));
            let mut w = create(&path)?;
            writeln!(w, "c_bound,mu,active,minus_norm,l2_error,rel_error").map_err(io_err(&path))?;
            m.time(label, n, || -> Result<(), CliError> {
                let solver = BepSolver::new(&dict, &target);
                let free = solver.solve(f64::INFINITY)?.minus_norm;
                let p = config.bep_points;
                for j in 0..p {
                    // geometric sweep from bep_min * free up to free
                    let c = free * config.bep_min.powf(1.0 - j as f64 / (p - 1) as f64);
                    let r = solver.solve(c)?;
                    writeln!(
                        w,
                        "{:.6e},{:.6e},{},{:.6e},{:.6e},{:.6e}",
                        c, r.mu, r.active, r.minus_norm, r.fit.l2_error, r.fit.relative_error
                    )
                    .map_err(io_err(&path))?;
                }
                w.flush().map_err(io_err(&path))
            })?;
            m.output(&path);
        }
        Ok(())
    })
}
