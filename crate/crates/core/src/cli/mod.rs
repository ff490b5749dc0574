//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 numerical
//! failure or unwritable output.

pub mod config;
pub mod emit;
pub mod figures;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::lattice::{build_hamiltonian, Boundary};
use crate::polarization::PolarizationMode;
use crate::spectra::{diagonalize, EnsembleKind, Spectrum};
use crate::sweep::{run_sweep, Param, ResultRecord, SweepAxis, SweepSpec};

use config::{resolve, Command, OneOrMany, Resolved, RunConfig, WORKERS_ENV};
use emit::{format_number, render, Format};
use figures::{figure_spec, FigureId, Panel, FIGURE_RESOLUTION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "topo-thermo", version, about = "Thermal extended SSH chain: Resta polarization and optimized QFI")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Energies (and optionally eigenvectors) of one Hamiltonian.
    Spectrum {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        output: OutputArgs,
        #[arg(long)]
        eigenvectors: bool,
    },
    /// Thermal polarization at one parameter point, for every requested mode.
    Polarization {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        thermal: ThermalArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// QFI matrix, interferometric power and optimal direction at one point.
    Qfi {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        thermal: ThermalArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Cartesian sweep from a config file plus flag overrides.
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        thermal: ThermalArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Sweep axis, `name=start:stop:count` or `name=a,b,c` (repeatable).
        #[arg(long = "axis")]
        axes: Vec<String>,
        /// polarization | qfi | qfi_matrix | i_p | diagnostics (repeatable).
        #[arg(long = "quantity", value_delimiter = ',')]
        quantities: Vec<String>,
        #[arg(long)]
        label: Option<String>,
    },
    /// Grid data for one figure panel.
    Figure {
        /// 1a | 1b | 2a | 2b | 3a | 3b | 3c | 3d
        id: FigureId,
        /// Points per axis.
        #[arg(long, default_value_t = FIGURE_RESOLUTION)]
        resolution: usize,
        #[arg(long, value_delimiter = ',')]
        mode: Vec<PolarizationMode>,
        #[arg(long)]
        ensemble: Option<EnsembleKind>,
        #[arg(long)]
        tau_mag: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Flat JSON run configuration; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_cells: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    v: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    w: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    z: Option<f64>,
    #[arg(long)]
    boundary: Option<Boundary>,
}

#[derive(Debug, Args)]
struct ThermalArgs {
    /// One or more temperatures (comma-separated or repeated).
    #[arg(long, value_delimiter = ',')]
    temperature: Vec<f64>,
    /// literal | weighted | determinant | pure (comma-separated or repeated).
    #[arg(long, value_delimiter = ',')]
    mode: Vec<PolarizationMode>,
    /// fermi | gibbs
    #[arg(long)]
    ensemble: Option<EnsembleKind>,
    #[arg(long)]
    tau_mag: Option<f64>,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv | json
    #[arg(long)]
    format: Option<Format>,
    /// Significant digits.
    #[arg(long)]
    precision: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    verbosity: Option<u8>,
}

fn non_empty<T>(v: Vec<T>) -> Option<OneOrMany<T>> {
    (!v.is_empty()).then_some(OneOrMany::Many(v))
}

impl ModelArgs {
    fn apply(&self, c: &mut RunConfig) {
        c.n_cells = self.n_cells;
        c.v = self.v;
        c.w = self.w;
        c.z = self.z;
        c.boundary = self.boundary;
    }
}

impl ThermalArgs {
    fn apply(self, c: &mut RunConfig) {
        c.temperature = non_empty(self.temperature);
        c.mode = non_empty(self.mode);
        c.ensemble = self.ensemble;
        c.tau_mag = self.tau_mag;
    }
}

impl OutputArgs {
    fn apply(self, c: &mut RunConfig) {
        c.out = self.out;
        c.format = self.format;
        c.precision = self.precision;
        c.workers = self.workers;
        c.verbosity = self.verbosity;
    }
}

enum Failure {
    Config(String),
    Numerical(String),
}

type Outcome = Result<(), Failure>;

struct Io<'a> {
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

impl Io<'_> {
    fn note(&mut self, verbosity: u8, level: u8, msg: &str) {
        if verbosity >= level {
            let _ = writeln!(self.stderr, "{msg}");
        }
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn cli_main<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    if !text.contains("Usage:") {
                        let _ = writeln!(stderr, "\n{}", usage_for(argv.get(1)));
                    }
                    EXIT_CONFIG
                }
            };
        }
    };
    let env = std::env::var(WORKERS_ENV).ok();
    let mut io = Io { stdout, stderr };
    match run(cli.command, env.as_deref(), &mut io) {
        Ok(()) => EXIT_OK,
        Err(Failure::Config(msg)) => {
            let _ = writeln!(io.stderr, "error: {msg}");
            EXIT_CONFIG
        }
        Err(Failure::Numerical(msg)) => {
            let _ = writeln!(io.stderr, "error: {msg}");
            EXIT_NUMERICAL
        }
    }
}

fn usage_for(subcommand: Option<&OsString>) -> String {
    use clap::CommandFactory;
    let mut cli = Cli::command();
    let name = subcommand.and_then(|s| s.to_str()).unwrap_or_default().to_string();
    match cli.find_subcommand_mut(&name) {
        Some(sub) => sub.clone().bin_name(format!("topo-thermo {name}")).render_usage().to_string(),
        None => cli.render_usage().to_string(),
    }
}

fn load_file(path: Option<&Path>) -> Result<RunConfig, Failure> {
    match path {
        Some(p) => RunConfig::from_file(p).map_err(Failure::Config),
        None => Ok(RunConfig::default()),
    }
}

fn run(command: Sub, env: Option<&str>, io: &mut Io<'_>) -> Outcome {
    match command {
        Sub::Spectrum { model, output, eigenvectors } => {
            let mut flags = RunConfig::default();
            model.apply(&mut flags);
            output.apply(&mut flags);
            flags.eigenvectors = eigenvectors.then_some(true);
            let file = load_file(model.config.as_deref())?;
            let r = resolve(Command::Spectrum, flags, file, env).map_err(Failure::Config)?;
            run_spectrum(&r, io)
        }
        Sub::Polarization { model, thermal, output } => {
            single_point(Command::Polarization, model, thermal, output, env, io)
        }
        Sub::Qfi { model, thermal, output } => single_point(Command::Qfi, model, thermal, output, env, io),
        Sub::Sweep { model, thermal, output, axes, quantities, label } => {
            let mut flags = RunConfig::default();
            model.apply(&mut flags);
            thermal.apply(&mut flags);
            output.apply(&mut flags);
            flags.axes = (!axes.is_empty()).then_some(axes);
            flags.quantities = (!quantities.is_empty()).then_some(quantities);
            flags.label = label;
            let file = load_file(model.config.as_deref())?;
            let r = resolve(Command::Sweep, flags, file, env).map_err(Failure::Config)?;
            let spec = grid_spec(&r);
            run_and_emit("sweep", &spec, &r, io)
        }
        Sub::Figure { id, resolution, mode, ensemble, tau_mag, output } => {
            let mut flags = RunConfig::default();
            output.apply(&mut flags);
            flags.mode = non_empty(mode);
            flags.ensemble = ensemble;
            flags.tau_mag = tau_mag;
            let modes_given = flags.mode.is_some();
            let r = resolve(Command::Figure, flags, RunConfig::default(), env).map_err(Failure::Config)?;
            if resolution == 0 {
                return Err(Failure::Config("resolution must be at least 1".into()));
            }
            let mut spec = figure_spec(id, resolution);
            if modes_given {
                if figures::figure_def(id).panel != Panel::Polarization {
                    return Err(Failure::Config(format!("figure {id} has no polarization panel; --mode does not apply")));
                }
                spec.quantities.polarization = r.modes.clone();
            }
            spec.ensemble = r.ensemble;
            spec.tau_mag = r.tau_mag;
            run_and_emit("figure", &spec, &r, io)
        }
    }
}

fn single_point(
    command: Command,
    model: ModelArgs,
    thermal: ThermalArgs,
    output: OutputArgs,
    env: Option<&str>,
    io: &mut Io<'_>,
) -> Outcome {
    let mut flags = RunConfig::default();
    model.apply(&mut flags);
    thermal.apply(&mut flags);
    output.apply(&mut flags);
    let file = load_file(model.config.as_deref())?;
    let r = resolve(command, flags, file, env).map_err(Failure::Config)?;
    let spec = grid_spec(&r);
    let name = if command == Command::Qfi { "qfi" } else { "polarization" };
    run_and_emit(name, &spec, &r, io)
}

/// Axes from the configuration, plus a temperature axis when several
/// temperatures are given and `T` is not already swept.
fn grid_spec(r: &Resolved) -> SweepSpec {
    let mut axes = r.axes.clone();
    let swept = |p: Param, axes: &[SweepAxis]| axes.iter().any(|a| a.param == p);
    if r.temperatures.len() > 1 && !swept(Param::T, &axes) {
        axes.push(SweepAxis::new(Param::T, r.temperatures.clone()));
    }
    let values = [
        (Param::T, r.temperatures[0]),
        (Param::V, r.model.v),
        (Param::W, r.model.w),
        (Param::Z, r.model.z),
        (Param::N, r.model.n_cells as f64),
    ];
    let fixed = values.into_iter().filter(|(p, _)| !swept(*p, &axes)).collect();
    let mut spec = SweepSpec::new(axes, fixed, r.quantities.clone());
    spec.boundary = r.model.boundary;
    spec.ensemble = r.ensemble;
    spec.tau_mag = r.tau_mag;
    spec.label = r.label.clone();
    spec
}

fn run_and_emit(command: &str, spec: &SweepSpec, r: &Resolved, io: &mut Io<'_>) -> Outcome {
    spec.validate().map_err(|e| Failure::Config(e.to_string()))?;
    let uses_ensemble = spec.quantities.qfi_matrix
        || spec.quantities.interferometric_power
        || spec.quantities.diagnostics
        || spec
            .quantities
            .polarization
            .iter()
            .any(|m| matches!(m, PolarizationMode::Literal | PolarizationMode::Weighted));
    if spec.quantities.polarization.contains(&PolarizationMode::Determinant) {
        io.note(
            r.verbosity,
            1,
            "note: polarization mode=determinant; the literal single-expectation form is available with --mode literal",
        );
    }
    if uses_ensemble {
        io.note(r.verbosity, 1, &format!("note: ensemble={}", spec.ensemble));
    }

    let start = Instant::now();
    let records = run_sweep(spec, r.workers).map_err(|e| Failure::Config(e.to_string()))?;
    let failed = records.iter().filter(|rec| rec.error.is_some()).count();
    io.note(
        r.verbosity,
        2,
        &format!(
            "{} points in {:.3} s, worker count {}",
            records.len(),
            start.elapsed().as_secs_f64(),
            r.workers
        ),
    );

    let text = render(&records, r.format, r.precision);
    write_output(r.out.as_deref(), &text, io)?;
    if let Some(out) = &r.out {
        let meta = metadata(command, spec, r, &records);
        write_output(Some(&meta_path(out)), &meta, io)?;
    }
    if failed > 0 {
        return Err(Failure::Numerical(format!(
            "{failed} of {} points failed; see the error column",
            records.len()
        )));
    }
    Ok(())
}

pub fn meta_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

fn metadata(command: &str, spec: &SweepSpec, r: &Resolved, records: &[ResultRecord]) -> String {
    let axes: Vec<serde_json::Value> = spec
        .axes
        .iter()
        .map(|a| serde_json::json!({ "param": a.param.name(), "count": a.values.len() }))
        .collect();
    let fixed: serde_json::Map<String, serde_json::Value> = spec
        .fixed
        .iter()
        .map(|(p, x)| (p.name().to_string(), serde_json::json!(x)))
        .collect();
    let modes: Vec<&str> = spec.quantities.polarization.iter().map(|m| m.as_str()).collect();
    let value = serde_json::json!({
        "command": command,
        "label": spec.label,
        "boundary": spec.boundary.to_string(),
        "ensemble": spec.ensemble.to_string(),
        "mode": modes,
        "tau_mag": spec.tau_mag,
        "precision": r.precision,
        "format": match r.format { Format::Csv => "csv", Format::Json => "json" },
        "axes": axes,
        "fixed": fixed,
        "points": records.len(),
        "failed_points": records.iter().filter(|rec| rec.error.is_some()).count(),
    });
    let mut text = serde_json::to_string_pretty(&value).expect("metadata serializes");
    text.push('\n');
    text
}

fn write_output(path: Option<&Path>, text: &str, io: &mut Io<'_>) -> Outcome {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Failure::Numerical(format!("cannot write {}: {e}", p.display()))),
        None => io
            .stdout
            .write_all(text.as_bytes())
            .and_then(|_| io.stdout.flush())
            .map_err(|e| Failure::Numerical(format!("cannot write output: {e}"))),
    }
}

fn run_spectrum(r: &Resolved, io: &mut Io<'_>) -> Outcome {
    let spectrum = build_hamiltonian(&r.model)
        .and_then(|h| diagonalize(&h))
        .map_err(|e| Failure::Numerical(e.to_string()))?;
    let text = render_spectrum(&spectrum, r.eigenvectors, r.format, r.precision);
    write_output(r.out.as_deref(), &text, io)
}

/// CSV `index,energy[,c0,c1,..]` (one row per eigenstate) or a JSON object
/// with `energies` and, optionally, `eigenvectors` (one array per state).
pub fn render_spectrum(spectrum: &Spectrum, eigenvectors: bool, format: Format, precision: usize) -> String {
    let dim = spectrum.dim();
    let num = |x: f64| format_number(x, precision);
    match format {
        Format::Csv => {
            let mut header = vec!["index".to_string(), "energy".to_string()];
            if eigenvectors {
                header.extend((0..dim).map(|i| format!("c{i}")));
            }
            let mut out = header.join(",");
            out.push('\n');
            for n in 0..dim {
                let mut row = vec![n.to_string(), num(spectrum.energies[n])];
                if eigenvectors {
                    row.extend(spectrum.eigenvectors.column(n).iter().map(|&c| num(c)));
                }
                out.push_str(&row.join(","));
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let list = |xs: &mut dyn Iterator<Item = f64>| {
                format!("[{}]", xs.map(num).collect::<Vec<_>>().join(", "))
            };
            let mut out = format!("{{\"energies\": {}", list(&mut spectrum.energies.iter().copied()));
            if eigenvectors {
                let states: Vec<String> = (0..dim)
                    .map(|n| list(&mut spectrum.eigenvectors.column(n).iter().copied()))
                    .collect();
                out.push_str(&format!(", \"eigenvectors\": [{}]", states.join(", ")));
            }
            out.push_str("}\n");
            out
        }
    }
}
