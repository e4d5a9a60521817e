use vlcsim::scenario::{
    compare, export, run_baseline, run_proposed, Mode, Scenario, ScenarioConfig,
};

/// Default layout with coarser meshes so each run takes a fraction of a second.
fn quick(positions: Vec<[f64; 3]>) -> ScenarioConfig {
    ScenarioConfig {
        mesh_first_order: 0.2,
        mesh_second_order: 0.5,
        receiver_positions: positions,
        ..ScenarioConfig::default()
    }
}

#[test]
fn steered_run_localises_receiver() {
    let r = run_proposed(&quick(vec![[2.0, 4.0, 1.0], [1.0, 6.5, 1.0]])).unwrap();
    assert_eq!(r.mode, Mode::Steered);
    for p in &r.positions {
        let o = p.outcome.as_ref().unwrap();
        let st = o.steering.as_ref().unwrap();
        assert!(
            st.cell.contains_xy(p.position.x, p.position.y),
            "{:?}",
            st.cell
        );
        assert!(st.cell.max_half_width() <= 0.05 + 1e-12);
        assert_eq!(st.trace.len(), st.iterations());
        assert_eq!(o.snr_by_rate.len(), r.rate_grid.len());
        assert!(o.metrics.delay_spread > 0.0);
    }
    assert!(r.worst_case_max_rate.is_some());
    assert!((r.illuminance.min_lux - 313.7).abs() <= 1e-6 * 313.7);
}

#[test]
fn steering_shrinks_delay_spread() {
    let cfg = quick(vec![[2.0, 4.0, 1.0]]);
    let s = run_proposed(&cfg).unwrap();
    let b = run_baseline(&cfg).unwrap();
    let rows = compare(&s, &b).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].delay_spread_ratio() > 10.0, "{:?}", rows[0]);
    assert!(rows[0].steered_snr_db > rows[0].baseline_snr_db);
}

#[test]
fn disabling_steering_skips_search() {
    let cfg = ScenarioConfig {
        steering_enabled: false,
        ..quick(vec![[2.0, 4.0, 1.0]])
    };
    let r = run_proposed(&cfg).unwrap();
    let o = r.positions[0].outcome.as_ref().unwrap();
    assert!(o.steering.is_none());
    assert!(o.metrics.delay_spread > 0.0);
}

#[test]
fn failures_stay_with_their_position() {
    let sc = Scenario::new(&quick(vec![[2.0, 4.0, 1.0]])).unwrap();
    assert!(sc
        .steer_position(vlcsim::geometry::Vec3::new(9.0, 4.0, 1.0))
        .is_err());
}

#[test]
fn results_round_trip_to_disk() {
    let cfg = quick(vec![[3.0, 2.0, 1.0]]);
    let r = run_proposed(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = export::export_results(&r, dir.path()).unwrap();
    assert_eq!(files.len(), 7);

    let metrics = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let lines: Vec<&str> = metrics.lines().collect();
    assert_eq!(
        lines[0],
        "x_m,y_m,z_m,delay_spread_s,snr_db,best_adr_branch"
    );
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1].split(',').count(), 6);

    let echo = std::fs::read_to_string(dir.path().join("config.toml")).unwrap();
    assert_eq!(ScenarioConfig::parse(&echo).unwrap(), r.config);

    let lux = std::fs::read_to_string(dir.path().join("illuminance.csv")).unwrap();
    assert_eq!(lux.lines().count(), 1 + 41 * 81);
}

#[test]
fn lighting_is_mirror_symmetric() {
    let sc = Scenario::new(&quick(vec![[2.0, 4.0, 1.0]])).unwrap();
    for mode in [Mode::Steered, Mode::Baseline] {
        let (g, _) = sc.illuminance(mode).unwrap();
        let nx = g.xs.len();
        for iy in 0..g.ys.len() {
            for ix in 0..nx {
                let a = g.values[iy * nx + ix];
                let b = g.values[iy * nx + (nx - 1 - ix)];
                assert!((a - b).abs() <= 1e-9 * a.abs().max(b.abs()));
            }
        }
    }
}
