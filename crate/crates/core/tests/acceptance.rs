//! Acceptance checks. One PASS/FAIL line per criterion; exits non-zero if
//! any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use latmem_core::bloch::{self, DEFAULT_TOL};
use latmem_core::kernel::{self, Grids};
use latmem_core::observables;
use latmem_core::pulse::ControlPulse;
use latmem_core::scenario::{PulseShape, Scenario};
use latmem_core::sweep::{self, SweepConfig, SweepRow, SweepTable};
use latmem_core::{C64, SPEED_OF_LIGHT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }

    fn error(e: latmem_core::Error) -> Self {
        Outcome::new(false, format!("error: {e}"))
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn uniform_damping() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, s) in [("raman", Scenario::raman()), ("eit", Scenario::eit())] {
        let pa = match observables::analyze_uniform(&s) {
            Ok(pa) => pa,
            Err(e) => return Outcome::error(e),
        };
        let want = pa.params.uniform_damping();
        let err = rel(pa.obs.im_k, want);
        // exact root of the uniform dispersion relation, for context
        let v = C64::new(1.0, 0.0)
            + C64::new(0.0, 2.0 * pa.params.kappa_sq()) / (pa.params.gamma_c * pa.params.k_s);
        let exact = pa.params.k_s * v.sqrt().im;
        pass &= err <= 1e-8;
        parts.push(format!(
            "{name}: Im k rel err {err:.2e} vs Re(dγ/ΓL), {:.1e} vs k_s Im√V",
            rel(pa.obs.im_k, exact)
        ));
    }
    Outcome::new(pass, parts.join("; "))
}

fn far_from_edge() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, base) in [("raman", Scenario::raman()), ("eit", Scenario::eit())] {
        let s = base.with_lattice_constant(0.40 * base.lambda_s);
        let obs = match observables::analyze(&s) {
            Ok(pa) => pa.obs,
            Err(e) => return Outcome::error(e),
        };
        let da = (obs.alpha - 1.0).norm();
        let dv = (obs.v_g / SPEED_OF_LIGHT - 1.0).norm();
        let bc = obs.beta.norm() * SPEED_OF_LIGHT;
        pass &= da <= 1e-3 && dv <= 1e-3 && obs.mu.abs() <= 1e-3 && bc <= 1e-3;
        parts.push(format!(
            "{name}: |α−1| {da:.2e}, |v_g/c−1| {dv:.2e}, |μ| {:.2e}, |β|c {bc:.2e}",
            obs.mu.abs()
        ));
    }
    Outcome::new(pass, parts.join("; "))
}

fn random_scenario(rng: &mut ChaCha8Rng) -> Scenario {
    let mut s = Scenario::raman();
    s.optical_depth = rng.gen_range(1.0..=1000.0);
    s.delta = rng.gen_range(0.0..=30.0) / s.pulse_duration;
    let a = rng.gen_range(0.3..=0.7) * s.lambda_s;
    s.lattice_constant = a;
    s.width = rng.gen_range(0.05..=0.3) * a;
    s
}

fn wronskian() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let (mut worst_det, mut worst_prod) = (0.0f64, 0.0f64);
    for i in 0..100 {
        let s = random_scenario(&mut rng);
        let run = || -> latmem_core::Result<(f64, f64)> {
            s.validate()?;
            let p = s.derive()?;
            let (_, _, v) = s.cell()?;
            let m = bloch::monodromy(&v, p.k_s, s.lattice_constant, DEFAULT_TOL)?;
            let (l1, l2) = m.eigenvalues();
            Ok(((m.det() - 1.0).norm(), (l1 * l2 - 1.0).norm()))
        };
        match run() {
            Ok((d, q)) => {
                worst_det = worst_det.max(d);
                worst_prod = worst_prod.max(q);
            }
            Err(e) => return Outcome::new(false, format!("scenario {i}: {e}")),
        }
    }
    Outcome::new(
        worst_det <= 1e-10 && worst_prod <= 1e-10,
        format!("100 scenarios: max |det−1| {worst_det:.2e}, max |λ₊λ₋−1| {worst_prod:.2e}"),
    )
}

fn spread(rows: &[SweepRow], pick: impl Fn(&SweepRow) -> bool, n: usize) -> Vec<&SweepRow> {
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| pick(r)).collect();
    if ok.len() <= n {
        return ok;
    }
    (0..n).map(|i| ok[i * (ok.len() - 1) / (n - 1)]).collect()
}

fn at_row(base: &Scenario, row: &SweepRow) -> Scenario {
    base.with_lattice_constant(row.a_nm * 1e-9)
}

fn kernel_vs_pde(base: &Scenario, table: &SweepTable) -> Outcome {
    let rows = spread(
        &table.rows,
        |r| !r.failed() && r.beta_l_over_t <= 0.02,
        5,
    );
    if rows.len() < 5 {
        return Outcome::new(false, format!("only {} usable sweep points", rows.len()));
    }
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for row in rows {
        let s = at_row(base, row);
        let (pr, errs) = match sweep::evaluate_point(&s, true) {
            Ok(x) => x,
            Err(e) => return Outcome::error(e),
        };
        let (Some(eff), Some(pde)) = (pr.efficiency, pr.pde) else {
            return Outcome::new(false, format!("a = {} nm: {errs:?}", row.a_nm));
        };
        let err = rel(pde.eta, eff.eta_opt);
        worst = worst.max(err);
        parts.push(format!("{:.4}/{:.4}", pde.eta, eff.eta_opt));
    }
    Outcome::new(
        worst <= 1e-2,
        format!("η_pde/σ² at 5 points: {}; max rel {worst:.2e}", parts.join(" ")),
    )
}

fn eta_for(s: &Scenario) -> latmem_core::Result<f64> {
    let pa = observables::analyze(s)?;
    let k = kernel::build_kernel(
        &pa.params,
        &pa.obs,
        ControlPulse::from_scenario(s),
        Grids::from_scenario(s),
    )?;
    Ok(kernel::optimal_efficiency(&k)?.eta_opt)
}

fn pulse_shape(base: &Scenario, table: &SweepTable) -> Outcome {
    let rows = spread(&table.rows, |r| !r.failed(), 3);
    let mut worst = 0.0f64;
    for row in &rows {
        let mut g = at_row(base, row);
        g.pulse_shape = PulseShape::Gaussian;
        let mut sq = g.clone();
        sq.pulse_shape = PulseShape::Square;
        match (eta_for(&g), eta_for(&sq)) {
            (Ok(a), Ok(b)) => worst = worst.max(rel(b, a)),
            (Err(e), _) | (_, Err(e)) => return Outcome::error(e),
        }
    }
    Outcome::new(
        rows.len() == 3 && worst <= 1e-4,
        format!("{} points, max rel difference {worst:.2e}", rows.len()),
    )
}

/// Indices i where `bad(prev, next)` holds for consecutive entries.
fn violations(xs: &[f64], bad: impl Fn(f64, f64) -> bool) -> Vec<usize> {
    xs.windows(2)
        .enumerate()
        .filter(|(_, w)| bad(w[0], w[1]))
        .map(|(i, _)| i + 1)
        .collect()
}

fn raman_trends(table: &SweepTable) -> Outcome {
    let rows: Vec<&SweepRow> = table.rows.iter().filter(|r| r.valid()).collect();
    let col = |f: fn(&SweepRow) -> f64| rows.iter().map(|r| f(r)).collect::<Vec<f64>>();
    let checks = [
        ("Re v_g non-increasing", violations(&col(|r| r.re_vg_over_c), |a, b| b > a)),
        ("|α| non-decreasing", violations(&col(|r| r.abs_alpha), |a, b| b < a)),
        ("μ non-decreasing", violations(&col(|r| r.mu), |a, b| b < a)),
        ("eta_opt non-increasing", violations(&col(|r| r.eta_opt), |a, b| b > a)),
        ("R non-decreasing", violations(&col(|r| r.r), |a, b| b < a)),
    ];
    let mu_min = col(|r| r.mu).into_iter().fold(f64::INFINITY, f64::min);
    let mut pass = rows.len() >= 2 && mu_min >= -1e-3;
    let mut parts = vec![format!("{} valid rows, min μ {mu_min:.2e}", rows.len())];
    for (name, v) in checks {
        if !v.is_empty() {
            pass = false;
            let first = v[0];
            parts.push(format!(
                "{name} broken at {} rows from r = {:.2e}",
                v.len(),
                relative_detuning(table, rows[first])
            ));
        }
    }
    Outcome::new(pass, parts.join("; "))
}

fn relative_detuning(table: &SweepTable, row: &SweepRow) -> f64 {
    (row.edge_detuning_hz * table.summary.lambda_s_nm * 1e-9 / SPEED_OF_LIGHT).abs()
}

fn eit_signatures(table: &SweepTable) -> Outcome {
    let rows: Vec<&SweepRow> = table.rows.iter().filter(|r| !r.failed()).collect();
    if rows.len() < 3 {
        return Outcome::new(false, "too few rows");
    }
    let fast: Vec<usize> = (0..rows.len())
        .filter(|&i| rows[i].re_vg_over_c > 1.0)
        .collect();
    let superluminal =
        !fast.is_empty() && fast.last().unwrap() - fast.first().unwrap() + 1 == fast.len();

    let last_decade = 10.0 * table.summary.detuning_near * (1.0 + 1e-9);
    let near: Vec<&&SweepRow> = rows
        .iter()
        .filter(|r| relative_detuning(table, r) <= last_decade)
        .collect();
    let negative_mu = !near.is_empty() && near.iter().all(|r| r.mu < 0.0);

    let eta: Vec<f64> = rows.iter().map(|r| r.eta_opt).collect();
    let imin = (0..eta.len())
        .min_by(|&a, &b| eta[a].total_cmp(&eta[b]))
        .unwrap();
    let dip = imin > 0 && imin + 1 < eta.len() && eta[eta.len() - 1] > eta[imin];

    let (net_far, net_final) = (rows[0].eta_net, rows[rows.len() - 1].eta_net);
    let no_net_gain = net_final <= net_far;

    Outcome::new(
        superluminal && negative_mu && dip && no_net_gain,
        format!(
            "superluminal run {} ({} rows); μ<0 over last decade {} ({} rows); \
             eta_opt min {:.4} at row {imin} then {:.4} ({}); eta_net far {net_far:.4} final {net_final:.4} ({})",
            superluminal,
            fast.len(),
            negative_mu,
            near.len(),
            eta[imin],
            eta[eta.len() - 1],
            dip,
            no_net_gain
        ),
    )
}

fn operator_bounds(raman: &Scenario, table: &SweepTable) -> Outcome {
    let mid = &table.rows[table.rows.len() / 2];
    let s = at_row(raman, mid);
    let pa = match observables::analyze(&s) {
        Ok(pa) => pa,
        Err(e) => return Outcome::error(e),
    };
    let pulse = ControlPulse::from_scenario(&s);
    let grids = Grids::from_scenario(&s);
    let run = || -> latmem_core::Result<(f64, f64, f64)> {
        let k = kernel::build_kernel(&pa.params, &pa.obs, pulse, grids)?;
        let eff = kernel::optimal_efficiency(&k)?;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0008);
        let t = s.pulse_duration;
        let mut worst = 0.0f64;
        for i in 0..100 {
            let a_in: Vec<C64> = if i % 2 == 0 {
                k.tau
                    .iter()
                    .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect()
            } else {
                // smooth input: a few random Gaussian bumps inside the window
                let bumps: Vec<(f64, f64, C64)> = (0..3)
                    .map(|_| {
                        (
                            rng.gen_range(-3.0..3.0) * t,
                            rng.gen_range(0.2..2.0) * t,
                            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                        )
                    })
                    .collect();
                k.tau
                    .iter()
                    .map(|&tau| {
                        bumps
                            .iter()
                            .map(|&(c, w, amp)| amp * (-((tau - c) / w).powi(2)).exp())
                            .sum()
                    })
                    .collect()
            };
            let (_, eta) = kernel::storage_efficiency(&k, &a_in)?;
            worst = worst.max(eta / eff.eta_opt);
            if eta > 1.0 {
                return Ok((worst, f64::INFINITY, eff.eta_opt));
            }
        }
        let fine = kernel::build_kernel(&pa.params, &pa.obs, pulse, grids.doubled())?;
        let fine_eta = kernel::optimal_efficiency(&fine)?.eta_opt;
        Ok((worst, rel(fine_eta, eff.eta_opt), eff.eta_opt))
    };
    match run() {
        Ok((ratio, doubling, eta)) => Outcome::new(
            ratio <= 1.0 + 1e-12 && eta <= 1.0 && doubling <= 1e-3,
            format!(
                "max η/σ² over 100 inputs {ratio:.6}, σ² {eta:.5}, grid doubling rel change {doubling:.2e}"
            ),
        ),
        Err(e) => Outcome::error(e),
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut report = |name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        println!(
            "{} {name}: {} [{:.1} s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
        results.push((name, o));
    };

    report("uniform-medium damping", &mut uniform_damping);
    report("far-from-edge limits", &mut far_from_edge);
    report("wronskian and branch product", &mut wronskian);

    let raman = Scenario::raman();
    let raman_sweep = SweepConfig::preset("raman").and_then(|c| sweep::run_sweep(&c));
    let eit_sweep = SweepConfig::preset("eit").and_then(|c| sweep::run_sweep(&c));
    match &raman_sweep {
        Ok(t) => {
            report("kernel-pde equivalence", &mut || kernel_vs_pde(&raman, t));
            report("pulse-shape invariance", &mut || pulse_shape(&raman, t));
            report("raman edge-approach trends", &mut || raman_trends(t));
        }
        Err(e) => {
            let msg = format!("raman sweep failed: {e}");
            for name in ["kernel-pde equivalence", "pulse-shape invariance", "raman edge-approach trends"] {
                report(name, &mut || Outcome::new(false, msg.clone()));
            }
        }
    }
    match &eit_sweep {
        Ok(t) => report("eit edge-approach signatures", &mut || eit_signatures(t)),
        Err(e) => report("eit edge-approach signatures", &mut || {
            Outcome::new(false, format!("eit sweep failed: {e}"))
        }),
    }
    match &raman_sweep {
        Ok(t) => report("operator bounds", &mut || operator_bounds(&raman, t)),
        Err(e) => report("operator bounds", &mut || {
            Outcome::new(false, format!("raman sweep failed: {e}"))
        }),
    }

    let failed = results.iter().filter(|(_, o)| !o.pass).count();
    println!(
        "{} of {} criteria passed in {:.1} s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
