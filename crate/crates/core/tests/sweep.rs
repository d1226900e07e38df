use latmem_core::sweep::{self, SweepConfig, SweepTable, SWEEP_HEADER};

fn short_sweep(preset: &str) -> SweepConfig {
    let mut cfg = SweepConfig::preset(preset).unwrap();
    cfg.n_points = 6;
    cfg.pde_every = 3;
    cfg
}

fn csv_bytes(t: &SweepTable) -> Vec<u8> {
    let mut out = Vec::new();
    sweep::write_sweep_csv(&mut out, &t.rows).unwrap();
    out
}

fn run_with_threads(cfg: &SweepConfig, n: usize) -> SweepTable {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .unwrap()
        .install(|| sweep::run_sweep(cfg).unwrap())
}

#[test]
fn csv_is_identical_for_any_worker_count() {
    let cfg = short_sweep("raman");
    let one = csv_bytes(&run_with_threads(&cfg, 1));
    let four = csv_bytes(&run_with_threads(&cfg, 4));
    assert_eq!(one, four);
    let text = String::from_utf8(one).unwrap();
    assert_eq!(text.lines().next().unwrap(), SWEEP_HEADER.join(","));
    assert_eq!(text.lines().count(), 1 + cfg.n_points);
}

#[test]
fn rows_are_consistent() {
    for preset in ["raman", "eit"] {
        let t = sweep::run_sweep(&short_sweep(preset)).unwrap();
        assert!(!t.has_failures(), "{preset}: {:?}", t.rows);
        // far to near from above: a decreases towards the edge
        assert!(t.rows.windows(2).all(|w| w[1].a_nm < w[0].a_nm));
        assert!(t.rows.last().unwrap().a_nm > t.summary.edge_nm);
        for (i, r) in t.rows.iter().enumerate() {
            assert_eq!(r.eta_net, (1.0 - r.r) * r.eta_opt);
            assert_eq!(r.eta_pde.is_some(), i % 3 == 0, "{preset} row {i}");
            assert!((0.0..=1.0).contains(&r.r));
            assert!(!r.in_gap);
        }
        let ratio = t.summary.detuning_far / t.summary.detuning_near;
        assert!((ratio.log10() - 3.0).abs() < 1e-9);
    }
}

#[test]
fn pde_tracks_kernel_along_the_sweep() {
    let t = sweep::run_sweep(&short_sweep("raman")).unwrap();
    for r in t.rows.iter().filter(|r| r.eta_pde.is_some()) {
        let pde = r.eta_pde.unwrap();
        assert!((pde - r.eta_opt).abs() < 1e-2 * r.eta_opt, "{r:?}");
    }
}
