//! Band-edge approach sweeps over the lattice constant.
//!
//! A pre-scan of the lossless comparison trace locates the first Bragg gap
//! in a. The sweep then steps a towards the chosen gap edge on a
//! logarithmic grid of relative detunings r = |a_edge/a − 1|, stopping
//! where the control walk-off |β|L/T reaches the kernel's validity limit.
//! Every point runs bloch → observables → kernel, and optionally the PDE.

use std::io::Write;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;

use crate::bloch::{self, DEFAULT_TOL};
use crate::kernel::{self, Grids, MAX_WALK_OFF};
use crate::observables::{self, ModeObservables};
use crate::pde::{self, PdeOptions};
use crate::pulse::ControlPulse;
use crate::scenario::Scenario;
use crate::{Error, Result, C64, SPEED_OF_LIGHT};

/// Which side of the gap the sweep approaches from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// a decreasing towards the upper gap edge (second band).
    Above,
    /// a increasing towards the lower gap edge (first band).
    Below,
}

impl std::str::FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "above" => Ok(Side::Above),
            "below" => Ok(Side::Below),
            _ => Err(Error::Config(format!("side must be above or below, got '{s}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub label: String,
    pub base: Scenario,
    pub n_points: usize,
    /// Decades of relative detuning covered.
    pub decades: f64,
    /// Smallest relative detuning allowed regardless of walk-off.
    pub min_detuning: f64,
    pub side: Side,
    /// Run the PDE on every `pde_every`-th point (0 disables it).
    pub pde_every: usize,
}

impl SweepConfig {
    pub fn new(label: impl Into<String>, base: Scenario) -> Self {
        SweepConfig {
            label: label.into(),
            base,
            n_points: 40,
            decades: 3.0,
            min_detuning: 1e-5,
            side: Side::Above,
            pde_every: 5,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        Ok(Self::new(name, Scenario::preset(name)?))
    }
}

/// Location of the first gap in lattice constant.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GapEdges {
    /// Lower and upper lattice constants bounding the lossless gap (m).
    /// They coincide when the comparison potential opens no gap.
    pub lower: f64,
    pub upper: f64,
    /// Minimum of the lossless trace near the Bragg condition.
    pub trace_min: f64,
}

impl GapEdges {
    pub fn edge(&self, side: Side) -> f64 {
        match side {
            Side::Above => self.upper,
            Side::Below => self.lower,
        }
    }
}

/// Finds the first Bragg gap of the lossless comparison potential.
pub fn locate_gap(s: &Scenario) -> Result<GapEdges> {
    let p = s.derive()?;
    let (_, _, v) = s.cell()?;
    // samples depend on z/a only, so the same V serves every a
    let trace = |a: f64| bloch::lossless_trace(&v, p.k_s, a, DEFAULT_TOL);
    let mean = v.iter().sum::<C64>() / v.len() as f64;
    let a0 = s.lambda_s / (2.0 * mean.re.sqrt());
    let (lo, hi) = (a0 * (1.0 - 1e-2), a0 * (1.0 + 1e-2));

    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut x0, mut x1) = (lo, hi);
    let mut c = x1 - invphi * (x1 - x0);
    let mut d = x0 + invphi * (x1 - x0);
    let (mut fc, mut fd) = (trace(c)?, trace(d)?);
    while (x1 - x0) > 1e-13 * a0 {
        if fc < fd {
            x1 = d;
            d = c;
            fd = fc;
            c = x1 - invphi * (x1 - x0);
            fc = trace(c)?;
        } else {
            x0 = c;
            c = d;
            fc = fd;
            d = x0 + invphi * (x1 - x0);
            fd = trace(d)?;
        }
    }
    let a_min = 0.5 * (x0 + x1);
    let trace_min = trace(a_min)?;
    if !bloch::is_gap_trace(trace_min) {
        return Ok(GapEdges {
            lower: a_min,
            upper: a_min,
            trace_min,
        });
    }
    let root = |mut inside: f64, mut outside: f64| -> Result<f64> {
        for _ in 0..200 {
            if (inside - outside).abs() <= 1e-15 * a0 {
                break;
            }
            let mid = 0.5 * (inside + outside);
            if trace(mid)? < -2.0 {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        Ok(0.5 * (inside + outside))
    };
    Ok(GapEdges {
        lower: root(a_min, lo)?,
        upper: root(a_min, hi)?,
        trace_min,
    })
}

/// Lattice constant at relative detuning r from `edge` on the given side.
pub fn lattice_constant_at(edge: f64, r: f64, side: Side) -> f64 {
    match side {
        Side::Above => edge / (1.0 - r),
        Side::Below => edge / (1.0 + r),
    }
}

/// (ω_edge − ω_s)/2π for a lattice constant a, with the edge frequency
/// scaling as 1/a at fixed signal wavelength.
pub fn edge_detuning_hz(lambda_s: f64, edge: f64, a: f64) -> f64 {
    SPEED_OF_LIGHT / lambda_s * (edge / a - 1.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub a_nm: f64,
    pub edge_detuning_hz: f64,
    pub re_k: f64,
    pub im_k: f64,
    pub re_vg_over_c: f64,
    pub re_alpha: f64,
    pub abs_alpha: f64,
    pub mu: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub eta_opt: f64,
    pub eta_net: f64,
    pub eta_pde: Option<f64>,
    #[serde(rename = "beta_L_over_T")]
    pub beta_l_over_t: f64,
    pub in_gap: bool,
    pub errors: String,
}

impl SweepRow {
    pub fn failed(&self) -> bool {
        !self.errors.is_empty()
    }

    /// Inside the model's validity region: not in the gap, walk-off small.
    pub fn valid(&self) -> bool {
        !self.failed() && !self.in_gap && self.beta_l_over_t <= MAX_WALK_OFF
    }
}

/// Everything computed at one lattice constant.
#[derive(Clone, Debug)]
pub struct PointResult {
    pub scenario: Scenario,
    pub analysis: observables::PointAnalysis,
    pub kernel: Option<kernel::KernelMatrix>,
    pub efficiency: Option<kernel::EfficiencyResult>,
    pub pde: Option<pde::PdeResult>,
}

/// Runs the full chain for one scenario. Kernel failures (such as
/// excessive walk-off) leave `efficiency` empty instead of failing.
pub fn evaluate_point(s: &Scenario, run_pde: bool) -> Result<(PointResult, Vec<Error>)> {
    let analysis = observables::analyze(s)?;
    let pulse = ControlPulse::from_scenario(s);
    let mut errors = Vec::new();
    let (kernel, efficiency) =
        match kernel::build_kernel(&analysis.params, &analysis.obs, pulse, Grids::from_scenario(s)) {
            Ok(k) => match kernel::optimal_efficiency(&k) {
                Ok(e) => (Some(k), Some(e)),
                Err(e) => {
                    errors.push(e);
                    (Some(k), None)
                }
            },
            Err(e) => {
                errors.push(e);
                (None, None)
            }
        };
    let pde = match (run_pde, &kernel, &efficiency) {
        (true, Some(k), Some(eff)) if eff.eta_opt > 0.0 => {
            let a_in: Vec<C64> = pde::tau_nodes(&pulse, s.tau_points)
                .iter()
                .map(|&t| k.optimal_input_at(eff, t))
                .collect();
            match pde::propagate(
                &analysis.params,
                &analysis.obs,
                &pulse,
                &a_in,
                s.z_points,
                PdeOptions::default(),
            ) {
                Ok(r) => Some(r),
                Err(e) => {
                    errors.push(e);
                    None
                }
            }
        }
        _ => None,
    };
    Ok((
        PointResult {
            scenario: s.clone(),
            analysis,
            kernel,
            efficiency,
            pde,
        },
        errors,
    ))
}

fn row_from(s: &Scenario, edge: f64, run_pde: bool) -> SweepRow {
    let a = s.lattice_constant;
    let mut row = SweepRow {
        a_nm: a * 1e9,
        edge_detuning_hz: edge_detuning_hz(s.lambda_s, edge, a),
        re_k: f64::NAN,
        im_k: f64::NAN,
        re_vg_over_c: f64::NAN,
        re_alpha: f64::NAN,
        abs_alpha: f64::NAN,
        mu: f64::NAN,
        r: f64::NAN,
        eta_opt: f64::NAN,
        eta_net: f64::NAN,
        eta_pde: None,
        beta_l_over_t: f64::NAN,
        in_gap: false,
        errors: String::new(),
    };
    match evaluate_point(s, run_pde) {
        Ok((pr, errs)) => {
            let obs: &ModeObservables = &pr.analysis.obs;
            row.re_k = obs.k.re;
            row.im_k = obs.im_k;
            row.re_vg_over_c = obs.v_g.re / SPEED_OF_LIGHT;
            row.re_alpha = obs.alpha.re;
            row.abs_alpha = obs.alpha.norm();
            row.mu = obs.mu;
            row.r = obs.reflectivity;
            row.beta_l_over_t = obs.walk_off(s.length, s.pulse_duration);
            row.in_gap = pr.analysis.mode.in_gap;
            if let Some(eff) = &pr.efficiency {
                row.eta_opt = eff.eta_opt;
                row.eta_net = (1.0 - obs.reflectivity) * eff.eta_opt;
            }
            row.eta_pde = pr.pde.as_ref().map(|r| r.eta);
            row.errors = errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; ");
        }
        Err(e) => row.errors = e.to_string(),
    }
    row
}

/// Smallest relative detuning whose walk-off stays within the kernel
/// limit, floored at `cfg.min_detuning`.
pub fn near_detuning(cfg: &SweepConfig, edge: f64) -> Result<f64> {
    let walk_off = |r: f64| -> Result<f64> {
        let s = cfg.base.with_lattice_constant(lattice_constant_at(edge, r, cfg.side));
        let pa = observables::analyze(&s)?;
        Ok(pa.obs.walk_off(s.length, s.pulse_duration))
    };
    let floor = cfg.min_detuning;
    if walk_off(floor).map(|w| w <= MAX_WALK_OFF).unwrap_or(false) {
        return Ok(floor);
    }
    let (mut bad, mut good) = (floor.ln(), 1e-1f64.ln());
    if walk_off(good.exp())? > MAX_WALK_OFF {
        return Err(Error::Config(
            "walk-off exceeds the kernel limit even 10% away from the gap".into(),
        ));
    }
    for _ in 0..40 {
        let mid = 0.5 * (bad + good);
        match walk_off(mid.exp()) {
            Ok(w) if w <= MAX_WALK_OFF => good = mid,
            _ => bad = mid,
        }
    }
    Ok(good.exp())
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepSummary {
    pub label: String,
    pub side: Side,
    pub lambda_s_nm: f64,
    pub gap_lower_nm: f64,
    pub gap_upper_nm: f64,
    pub edge_nm: f64,
    pub lossless_trace_min: f64,
    pub detuning_far: f64,
    pub detuning_near: f64,
    pub points: usize,
    pub failed_points: usize,
    pub uniform_eta_opt: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepTable {
    pub summary: SweepSummary,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn has_failures(&self) -> bool {
        self.rows.iter().any(SweepRow::failed)
    }
}

/// Runs the sweep. Rows go from the far end towards the edge, so a is
/// monotone along the table. Per-point failures are recorded in the
/// `errors` column; only a failed pre-scan aborts.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepTable> {
    if cfg.n_points < 2 {
        return Err(Error::Config("a sweep needs at least 2 points".into()));
    }
    cfg.base.validate()?;
    let gap = locate_gap(&cfg.base)?;
    let edge = gap.edge(cfg.side);
    let near = near_detuning(cfg, edge)?;
    let far = near * 10f64.powf(cfg.decades);
    let n = cfg.n_points;
    let detunings: Vec<f64> = (0..n)
        .map(|i| far * (near / far).powf(i as f64 / (n - 1) as f64))
        .collect();
    let job = |(i, r): (usize, &f64)| {
        let s = cfg
            .base
            .with_lattice_constant(lattice_constant_at(edge, *r, cfg.side));
        let run_pde = cfg.pde_every > 0 && i % cfg.pde_every == 0;
        row_from(&s, edge, run_pde)
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<SweepRow> = detunings.par_iter().enumerate().map(job).collect();
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<SweepRow> = detunings.iter().enumerate().map(job).collect();

    let uniform_eta_opt = uniform_efficiency(&cfg.base).ok();
    Ok(SweepTable {
        summary: SweepSummary {
            label: cfg.label.clone(),
            side: cfg.side,
            lambda_s_nm: cfg.base.lambda_s * 1e9,
            gap_lower_nm: gap.lower * 1e9,
            gap_upper_nm: gap.upper * 1e9,
            edge_nm: edge * 1e9,
            lossless_trace_min: gap.trace_min,
            detuning_far: far,
            detuning_near: near,
            points: rows.len(),
            failed_points: rows.iter().filter(|r| r.failed()).count(),
            uniform_eta_opt,
        },
        rows,
    })
}

/// Optimal efficiency of the same ensemble without a lattice.
pub fn uniform_efficiency(s: &Scenario) -> Result<f64> {
    let pa = observables::analyze_uniform(s)?;
    let k = kernel::build_kernel(
        &pa.params,
        &pa.obs,
        ControlPulse::from_scenario(s),
        Grids::from_scenario(s),
    )?;
    Ok(kernel::optimal_efficiency(&k)?.eta_opt)
}

pub const SWEEP_HEADER: [&str; 15] = [
    "a_nm",
    "edge_detuning_hz",
    "re_k",
    "im_k",
    "re_vg_over_c",
    "re_alpha",
    "abs_alpha",
    "mu",
    "R",
    "eta_opt",
    "eta_net",
    "eta_pde",
    "beta_L_over_T",
    "in_gap",
    "errors",
];

fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:.12e}")
    }
}

pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            num(r.a_nm),
            num(r.edge_detuning_hz),
            num(r.re_k),
            num(r.im_k),
            num(r.re_vg_over_c),
            num(r.re_alpha),
            num(r.abs_alpha),
            num(r.mu),
            num(r.r),
            num(r.eta_opt),
            num(r.eta_net),
            r.eta_pde.map(num).unwrap_or_default(),
            num(r.beta_l_over_t),
            r.in_gap.to_string(),
            r.errors.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Band tables behind the dispersion diagrams: a wide scan over the first
/// two bands, a zoom on the zone edge, and the empty lattice.
pub struct BandTables {
    pub wide: Vec<bloch::BandPoint>,
    pub edge: Vec<bloch::BandPoint>,
    pub empty: Vec<bloch::BandPoint>,
    /// Lattice constant the scans were run at (m).
    pub a: f64,
}

/// Scans the signal wavenumber for a lattice sitting at the gap centre.
pub fn band_tables(s: &Scenario, n_points: usize) -> Result<BandTables> {
    let gap = locate_gap(s)?;
    let a = 0.5 * (gap.lower + gap.upper);
    let s = s.with_lattice_constant(a);
    let (_, _, v) = s.cell()?;
    let zone = std::f64::consts::PI / a;
    let k_s = s.derive()?.k_s;
    let wide = bloch::band_scan(&v, a, (0.05 * zone, 1.95 * zone), n_points, DEFAULT_TOL)?;
    let edge = bloch::band_scan(&v, a, (k_s * (1.0 - 2e-3), k_s * (1.0 + 2e-3)), n_points, DEFAULT_TOL)?;
    let vacuum = vec![C64::new(1.0, 0.0); v.len()];
    let empty = bloch::band_scan(&vacuum, a, (0.05 * zone, 1.95 * zone), n_points, DEFAULT_TOL)?;
    Ok(BandTables { wide, edge, empty, a })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detuning_maps_back() {
        let edge = 400e-9;
        for side in [Side::Above, Side::Below] {
            let a = lattice_constant_at(edge, 1e-3, side);
            let rel = (edge / a - 1.0).abs();
            assert!((rel - 1e-3).abs() < 1e-15);
        }
        assert!(lattice_constant_at(edge, 1e-3, Side::Above) > edge);
        let hz = edge_detuning_hz(800e-9, edge, edge * 1.01);
        assert!(hz < 0.0);
    }

    #[test]
    fn eit_gap_sits_at_bragg_condition() {
        let gap = locate_gap(&Scenario::eit()).unwrap();
        assert_eq!(gap.lower, gap.upper);
        assert!((gap.lower / 400e-9 - 1.0).abs() < 1e-7, "{}", gap.lower);
    }

    #[test]
    fn raman_gap_is_open() {
        let gap = locate_gap(&Scenario::raman()).unwrap();
        assert!(gap.trace_min < -2.0);
        assert!(gap.lower < gap.upper);
        // lossless trace just outside either edge is back in a band
        let s = Scenario::raman();
        let p = s.derive().unwrap();
        let (_, _, v) = s.cell().unwrap();
        for (a, inside) in [
            (gap.lower * (1.0 - 1e-9), false),
            (0.5 * (gap.lower + gap.upper), true),
            (gap.upper * (1.0 + 1e-9), false),
        ] {
            let t = bloch::lossless_trace(&v, p.k_s, a, DEFAULT_TOL).unwrap();
            assert_eq!(t.abs() > 2.0, inside, "a = {a}, trace = {t}");
        }
    }

    #[test]
    fn csv_header_and_blank_optionals() {
        let row = SweepRow {
            a_nm: 400.0,
            edge_detuning_hz: -1e9,
            re_k: 1.0,
            im_k: 2.0,
            re_vg_over_c: 0.9,
            re_alpha: 1.1,
            abs_alpha: 1.1,
            mu: 0.1,
            r: 1e-4,
            eta_opt: 0.9,
            eta_net: 0.9 * (1.0 - 1e-4),
            eta_pde: None,
            beta_l_over_t: 0.01,
            in_gap: false,
            errors: String::new(),
        };
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), SWEEP_HEADER.join(","));
        let cells: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(cells.len(), 15);
        assert_eq!(cells[11], "");
        assert_eq!(cells[13], "false");
    }
}
