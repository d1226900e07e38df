use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use latmem_core::bloch::BandPoint;
use latmem_core::kernel;
use latmem_core::pde::{self, PdeOptions};
use latmem_core::pulse::ControlPulse;
use latmem_core::scenario::Scenario;
use latmem_core::sweep::{self, Side, SweepConfig};
use latmem_core::{Error, SPEED_OF_LIGHT};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "latmem", version, about = "Quantum-memory efficiency near photonic band edges of optical lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Approach the first band gap and tabulate observables and efficiencies.
    Sweep(SweepArgs),
    /// Dispersion tables for the scenario and the empty lattice.
    Bands(BandsArgs),
    /// Observables and optimal storage at one lattice constant.
    Point(PointArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Built-in scenario: raman or eit.
    #[arg(long)]
    preset: Option<String>,
    /// JSON scenario file.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Source {
    fn load(&self) -> Result<(String, Scenario), Error> {
        match (&self.preset, &self.config) {
            (Some(name), _) => Ok((name.clone(), Scenario::preset(name)?)),
            (None, Some(path)) => {
                let label = path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or("scenario")
                    .to_string();
                Ok((label, Scenario::load(path)?))
            }
            (None, None) => Err(Error::Config("either --preset or --config is required".into())),
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    source: Source,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Print the summary as JSON on stdout.
    #[arg(long)]
    json: bool,
    #[arg(long, default_value_t = 40)]
    points: usize,
    /// Decades of relative detuning from the gap edge.
    #[arg(long, default_value_t = 3.0)]
    decades: f64,
    /// Closest relative detuning allowed.
    #[arg(long, default_value_t = 1e-5)]
    min_detuning: f64,
    /// Gap edge to approach: above (from larger a) or below.
    #[arg(long, default_value = "above")]
    side: String,
    /// Run the PDE on every n-th point; 0 disables it.
    #[arg(long, default_value_t = 5)]
    pde_every: usize,
}

#[derive(Args)]
struct BandsArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 401)]
    points: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct PointArgs {
    /// Lattice constant in nm; w/a is kept from the scenario.
    #[arg(long, allow_negative_numbers = true)]
    a_nm: f64,
    #[arg(long, default_value = "raman", conflicts_with = "config")]
    preset: String,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    json: bool,
    /// Also propagate the optimal input through the PDE.
    #[arg(long)]
    pde: bool,
    /// Write the optimal modes (and PDE intensity maps with --pde) here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Error> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Error> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Exit code 1 for configuration problems, 2 when some points failed.
enum Outcome {
    Clean,
    PointFailures(usize),
}

fn sweep_cmd(args: &SweepArgs) -> Result<Outcome, Error> {
    let (label, base) = args.source.load()?;
    let cfg = SweepConfig {
        n_points: args.points,
        decades: args.decades,
        min_detuning: args.min_detuning,
        side: args.side.parse::<Side>()?,
        pde_every: args.pde_every,
        ..SweepConfig::new(label.clone(), base)
    };
    if !(cfg.decades > 0.0 && cfg.min_detuning > 0.0) {
        return Err(Error::Config("decades and min-detuning must be positive".into()));
    }
    let table = sweep::run_sweep(&cfg)?;
    std::fs::create_dir_all(&args.out)?;
    sweep::write_sweep_csv(create(&args.out, &format!("{label}_sweep.csv"))?, &table.rows)?;
    serde_json::to_writer_pretty(
        create(&args.out, &format!("{label}_summary.json"))?,
        &table.summary,
    )?;
    if args.json {
        print_json(&table.summary)?;
    } else {
        eprintln!(
            "{label}: {} points, edge at a = {:.4} nm, {} failed",
            table.summary.points, table.summary.edge_nm, table.summary.failed_points
        );
    }
    for r in table.rows.iter().filter(|r| r.failed()) {
        log::warn!("a = {:.6} nm: {}", r.a_nm, r.errors);
    }
    Ok(match table.summary.failed_points {
        0 => Outcome::Clean,
        n => Outcome::PointFailures(n),
    })
}

#[derive(Serialize)]
struct BandsSummary {
    label: String,
    a_nm: f64,
    wide_points: usize,
    edge_points: usize,
    edge_points_in_gap: usize,
}

fn bands_cmd(args: &BandsArgs) -> Result<Outcome, Error> {
    let (label, s) = args.source.load()?;
    s.validate()?;
    let t = sweep::band_tables(&s, args.points)?;
    std::fs::create_dir_all(&args.out)?;
    let tables: [(&str, &[BandPoint]); 3] = [
        ("bands_wide", &t.wide),
        ("bands_edge", &t.edge),
        ("bands_empty", &t.empty),
    ];
    for (name, points) in tables {
        latmem_core::bloch::write_band_csv(create(&args.out, &format!("{label}_{name}.csv"))?, points)?;
    }
    let summary = BandsSummary {
        label,
        a_nm: t.a * 1e9,
        wide_points: t.wide.len(),
        edge_points: t.edge.len(),
        edge_points_in_gap: t.edge.iter().filter(|p| p.in_gap).count(),
    };
    if args.json {
        print_json(&summary)?;
    }
    Ok(Outcome::Clean)
}

#[derive(Serialize)]
struct PointReport {
    a_nm: f64,
    band_index: u32,
    in_gap: bool,
    re_k_per_m: f64,
    im_k_per_m: f64,
    re_vg_over_c: f64,
    im_vg_over_c: f64,
    re_alpha: f64,
    im_alpha: f64,
    mu: f64,
    #[serde(rename = "R")]
    r: f64,
    #[serde(rename = "beta_L_over_T")]
    beta_l_over_t: f64,
    eta_opt: Option<f64>,
    eta_net: Option<f64>,
    eta_pde: Option<f64>,
    errors: Vec<String>,
}

fn point_cmd(args: &PointArgs) -> Result<Outcome, Error> {
    let base = match &args.config {
        Some(path) => Scenario::load(path)?,
        None => Scenario::preset(&args.preset)?,
    };
    let s = base.with_lattice_constant(args.a_nm * 1e-9);
    s.validate()?;
    let (pr, errs) = match sweep::evaluate_point(&s, args.pde) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("a = {} nm: {e}", args.a_nm);
            return Ok(Outcome::PointFailures(1));
        }
    };
    let obs = &pr.analysis.obs;
    let v = obs.v_g / SPEED_OF_LIGHT;
    let eta_opt = pr.efficiency.as_ref().map(|e| e.eta_opt);
    let report = PointReport {
        a_nm: args.a_nm,
        band_index: pr.analysis.mode.band_index,
        in_gap: pr.analysis.mode.in_gap,
        re_k_per_m: obs.k.re,
        im_k_per_m: obs.im_k,
        re_vg_over_c: v.re,
        im_vg_over_c: v.im,
        re_alpha: obs.alpha.re,
        im_alpha: obs.alpha.im,
        mu: obs.mu,
        r: obs.reflectivity,
        beta_l_over_t: obs.walk_off(s.length, s.pulse_duration),
        eta_opt,
        eta_net: eta_opt.map(|e| (1.0 - obs.reflectivity) * e),
        eta_pde: pr.pde.as_ref().map(|p| p.eta),
        errors: errs.iter().map(|e| e.to_string()).collect(),
    };

    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        if let (Some(k), Some(eff)) = (&pr.kernel, &pr.efficiency) {
            kernel::export(
                k,
                eff,
                create(dir, "optimal_input.csv")?,
                create(dir, "spin_wave.csv")?,
                create(dir, "efficiency.json")?,
            )?;
            if args.pde {
                let pulse = ControlPulse::from_scenario(&s);
                let a_in: Vec<_> = pde::tau_nodes(&pulse, s.tau_points)
                    .iter()
                    .map(|&t| k.optimal_input_at(eff, t))
                    .collect();
                let opts = PdeOptions {
                    keep_fields: true,
                    ..PdeOptions::default()
                };
                let run = pde::propagate(&pr.analysis.params, obs, &pulse, &a_in, s.z_points, opts)?;
                if let Some(f) = &run.fields {
                    pde::write_intensity_csv(create(dir, "signal_intensity.csv")?, f, false)?;
                    pde::write_intensity_csv(create(dir, "spin_wave_intensity.csv")?, f, true)?;
                }
            }
        }
    }

    if args.json {
        print_json(&report)?;
    } else {
        println!("a = {:.6} nm (band {}{})", report.a_nm, report.band_index, if report.in_gap { ", in gap" } else { "" });
        println!("k        = {:.9e} + {:.6e}i 1/m", report.re_k_per_m, report.im_k_per_m);
        println!("v_g/c    = {:.6} + {:.3e}i", report.re_vg_over_c, report.im_vg_over_c);
        println!("alpha    = {:.6} + {:.3e}i", report.re_alpha, report.im_alpha);
        println!("mu       = {:.6e}", report.mu);
        println!("R        = {:.6e}", report.r);
        println!("beta L/T = {:.3e}", report.beta_l_over_t);
        if let (Some(e), Some(n)) = (report.eta_opt, report.eta_net) {
            println!("eta_opt  = {e:.6}");
            println!("eta_net  = {n:.6}");
        }
        if let Some(p) = report.eta_pde {
            println!("eta_pde  = {p:.6}");
        }
        for e in &report.errors {
            println!("error: {e}");
        }
    }
    Ok(if report.errors.is_empty() {
        Outcome::Clean
    } else {
        Outcome::PointFailures(report.errors.len())
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // usage errors are configuration errors; exit code 2 means failed points
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Sweep(a) => sweep_cmd(a),
        Command::Bands(a) => bands_cmd(a),
        Command::Point(a) => point_cmd(a),
    };
    match result {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::PointFailures(n)) => {
            eprintln!("latmem: {n} point failure(s)");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("latmem: {e}");
            ExitCode::from(1)
        }
    }
}
