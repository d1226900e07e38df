//! Browser bindings for the band diagram, carrier profile and single-point
//! observables. Each operation returns a JSON string for the page script.

use latmem_core::kernel::{self, Grids};
use latmem_core::observables;
use latmem_core::pulse::ControlPulse;
use latmem_core::scenario::Scenario;
use latmem_core::sweep::{self, Side};
use latmem_core::{Result, SPEED_OF_LIGHT};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn scenario(preset: &str, d: f64) -> Result<Scenario> {
    let mut s = Scenario::preset(preset)?;
    s.optical_depth = d;
    s.validate()?;
    Ok(s)
}

#[derive(Debug, Serialize)]
pub struct GapInfo {
    pub lower_nm: f64,
    pub upper_nm: f64,
    /// Edge approached from larger a.
    pub edge_nm: f64,
    pub open: bool,
}

pub fn gap(preset: &str, d: f64) -> Result<GapInfo> {
    let g = sweep::locate_gap(&scenario(preset, d)?)?;
    Ok(GapInfo {
        lower_nm: g.lower * 1e9,
        upper_nm: g.upper * 1e9,
        edge_nm: g.edge(Side::Above) * 1e9,
        open: g.upper > g.lower,
    })
}

#[derive(Debug, Serialize)]
pub struct BandDiagram {
    pub a_nm: f64,
    /// π/a in 1/m.
    pub zone_edge: f64,
    pub k_s: Vec<f64>,
    pub re_k: Vec<f64>,
    pub im_k: Vec<f64>,
    pub in_gap: Vec<bool>,
    /// Empty-lattice |Re k| on the same k_s grid (wide view only).
    pub empty_re_k: Vec<f64>,
}

/// Dispersion at the gap centre, either over the first two bands or
/// zoomed on the zone edge.
pub fn band_diagram(preset: &str, d: f64, points: usize, zoom: bool) -> Result<BandDiagram> {
    let t = sweep::band_tables(&scenario(preset, d)?, points)?;
    let pts = if zoom { &t.edge } else { &t.wide };
    Ok(BandDiagram {
        a_nm: t.a * 1e9,
        zone_edge: std::f64::consts::PI / t.a,
        k_s: pts.iter().map(|p| p.k_s).collect(),
        re_k: pts.iter().map(|p| p.re_k).collect(),
        im_k: pts.iter().map(|p| p.im_k).collect(),
        in_gap: pts.iter().map(|p| p.in_gap).collect(),
        empty_re_k: if zoom {
            Vec::new()
        } else {
            t.empty.iter().map(|p| p.re_k).collect()
        },
    })
}

#[derive(Debug, Serialize)]
pub struct CarrierProfile {
    pub a_nm: f64,
    pub band_index: u32,
    pub in_gap: bool,
    pub z_nm: Vec<f64>,
    /// |u|², the carrier intensity with the damping removed.
    pub intensity: Vec<f64>,
    /// a·Re{ψφ}, whose cell average is one.
    pub overlap_density: Vec<f64>,
    /// m(z) scaled to a peak of one.
    pub modulation: Vec<f64>,
}

/// Carrier wave over `cells` lattice periods.
pub fn carrier_profile(preset: &str, d: f64, a_nm: f64, cells: usize) -> Result<CarrierProfile> {
    let s = scenario(preset, d)?.with_lattice_constant(a_nm * 1e-9);
    s.validate()?;
    let pa = observables::analyze(&s)?;
    let mode = &pa.mode;
    let a = s.lattice_constant;
    let n = mode.grid.n;
    let m_max = pa.modulation.samples.iter().cloned().fold(0.0, f64::max);
    let mut out = CarrierProfile {
        a_nm,
        band_index: mode.band_index,
        in_gap: mode.in_gap,
        z_nm: Vec::with_capacity(cells * n + 1),
        intensity: Vec::new(),
        overlap_density: Vec::new(),
        modulation: Vec::new(),
    };
    for i in 0..=cells * n {
        let j = i % n;
        out.z_nm.push(i as f64 * mode.grid.spacing() * 1e9);
        out.intensity.push(mode.u[j].norm_sqr());
        out.overlap_density.push((mode.psi[j] * mode.phi[j]).re * a);
        out.modulation.push(pa.modulation.samples[j] / m_max);
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct PointSummary {
    pub a_nm: f64,
    pub in_gap: bool,
    pub re_vg_over_c: f64,
    pub re_alpha: f64,
    pub abs_alpha: f64,
    pub mu: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "beta_L_over_T")]
    pub beta_l_over_t: f64,
    pub eta_opt: Option<f64>,
    pub eta_net: Option<f64>,
    pub error: Option<String>,
}

/// Observables and optimal efficiency at one lattice constant. The kernel
/// uses half the scenario's z and τ grids to stay interactive.
pub fn point(preset: &str, d: f64, a_nm: f64) -> Result<PointSummary> {
    let s = scenario(preset, d)?.with_lattice_constant(a_nm * 1e-9);
    s.validate()?;
    let pa = observables::analyze(&s)?;
    let obs = &pa.obs;
    let grids = Grids {
        z_points: (s.z_points / 2).max(2),
        tau_points: (s.tau_points / 2).max(2),
    };
    let eta = kernel::build_kernel(&pa.params, obs, ControlPulse::from_scenario(&s), grids)
        .and_then(|k| kernel::optimal_efficiency(&k))
        .map(|e| e.eta_opt);
    let (eta_opt, error) = match eta {
        Ok(e) => (Some(e), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(PointSummary {
        a_nm,
        in_gap: pa.mode.in_gap,
        re_vg_over_c: obs.v_g.re / SPEED_OF_LIGHT,
        re_alpha: obs.alpha.re,
        abs_alpha: obs.alpha.norm(),
        mu: obs.mu,
        r: obs.reflectivity,
        beta_l_over_t: obs.walk_off(s.length, s.pulse_duration),
        eta_opt,
        eta_net: eta_opt.map(|e| (1.0 - obs.reflectivity) * e),
        error,
    })
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
        .and_then(|v| serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string())))
}

#[wasm_bindgen(js_name = gapEdges)]
pub fn gap_js(preset: &str, d: f64) -> std::result::Result<String, JsError> {
    to_js(gap(preset, d))
}

#[wasm_bindgen(js_name = bandDiagram)]
pub fn band_diagram_js(preset: &str, d: f64, points: usize, zoom: bool) -> std::result::Result<String, JsError> {
    to_js(band_diagram(preset, d, points, zoom))
}

#[wasm_bindgen(js_name = carrierProfile)]
pub fn carrier_profile_js(preset: &str, d: f64, a_nm: f64) -> std::result::Result<String, JsError> {
    to_js(carrier_profile(preset, d, a_nm, 3))
}

#[wasm_bindgen(js_name = pointObservables)]
pub fn point_js(preset: &str, d: f64, a_nm: f64) -> std::result::Result<String, JsError> {
    to_js(point(preset, d, a_nm))
}
