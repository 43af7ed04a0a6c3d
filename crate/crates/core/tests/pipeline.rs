use majorana_core::decoherence::{decoherence_report, dissipation_report};
use majorana_core::lindblad::{build_truncated_model, evolve, step_halving_check, steady_state};
use majorana_core::sweep::{preset, AxisSpec, AxisValues, FixedParams, SweepAxis};
use majorana_core::table::ColumnKind;
use majorana_core::{
    run_sweep, solve_chain, BathSpec, ChainParams, DensityMatrix, EvolveOptions, NoiseKind, RateOptions, ResultTable,
    SpectrumOptions, Statistics, SweepGrid, SweepTask, TableFormat,
};

fn spectrum(n: usize, delta: f64, mu: f64, u: f64) -> majorana_core::ChainSpectrum {
    let p = ChainParams::dimensionless(n, delta, mu, u).unwrap();
    solve_chain(&p, &SpectrumOptions::for_params(&p)).unwrap()
}

#[test]
fn thermal_dissipation_relaxes_to_gibbs() {
    let s = spectrum(4, 1.5, 0.6, 0.8);
    let t = 0.7;
    let bath = BathSpec::new(Statistics::Fermionic, 0.4, t, 1.0).unwrap();
    let report = dissipation_report(&s, &bath, 3, &RateOptions::default()).unwrap();
    let model = build_truncated_model(&[&report], &s, 4).unwrap();
    let rho = steady_state(&model).unwrap();
    let e = model.energies();
    let z: f64 = e.iter().map(|x| (-(x - e[0]) / t).exp()).sum();
    for (p, x) in rho.populations().iter().zip(&e) {
        assert!((p - (-(x - e[0]) / t).exp() / z).abs() < 1e-10, "{p} at E = {x}");
    }

    // The ground pair equilibrates only through the excited levels, so the
    // slowest mode needs a long run.
    let start = DensityMatrix::pure(4, 3).unwrap();
    let opts = EvolveOptions {
        record_every: 1000,
        ..Default::default()
    };
    let traj = evolve(&model, &start, 3000.0, 0.05, &opts).unwrap();
    let (_, last) = traj.last().unwrap();
    let d = last.max_abs_diff(&rho);
    assert!(d < 1e-6, "{d}");
}

#[test]
fn rk4_step_halving_error_is_small() {
    let s = spectrum(6, 2.0, 1.0, 1.0);
    let bath = BathSpec::new(Statistics::Bosonic, 0.3, 0.5, 1.0).unwrap();
    let deph = decoherence_report(&s, NoiseKind::Dephasing, &bath, 3, &RateOptions::default()).unwrap();
    let diss = decoherence_report(
        &s,
        NoiseKind::Dissipation,
        &BathSpec::new(Statistics::Fermionic, 0.3, 0.5, 1.0).unwrap(),
        3,
        &RateOptions::default(),
    )
    .unwrap();
    let model = build_truncated_model(&[&diss, &deph], &s, 6).unwrap();
    let err = step_halving_check(&model, &DensityMatrix::pure(6, 5).unwrap(), 5.0, 0.02).unwrap();
    assert!(err < 1e-8, "{err}");
}

#[test]
fn zero_temperature_ground_pair_is_dark() {
    let s = spectrum(6, 1.0, 0.0, 0.0);
    let bath = BathSpec::new(Statistics::Fermionic, 0.5, 0.0, 1.0).unwrap();
    let report = dissipation_report(&s, &bath, 4, &RateOptions::default()).unwrap();
    let model = build_truncated_model(&[&report], &s, 4).unwrap();
    let top = model.dim() - 1;
    let traj = evolve(&model, &DensityMatrix::pure(4, top).unwrap(), 40.0, 0.01, &EvolveOptions::default()).unwrap();
    let (_, last) = traj.last().unwrap();
    let ground: f64 = ["e1", "o1"]
        .iter()
        .map(|l| last.populations()[traj.labels.iter().position(|x| x == l).unwrap()])
        .sum();
    assert!((ground - 1.0).abs() < 1e-8);
    assert!(steady_state(&model).is_err());
}

fn small_grid() -> SweepGrid {
    SweepGrid::new(
        SweepTask::PhaseDiagram,
        vec![
            AxisSpec {
                name: SweepAxis::Mu,
                values: AxisValues::List(vec![0.0, 2.0, 6.0]),
            },
            AxisSpec {
                name: SweepAxis::U,
                values: AxisValues::Range {
                    start: -8.0,
                    stop: 8.0,
                    step: 4.0,
                },
            },
        ],
        FixedParams {
            n_sites: 6,
            ..FixedParams::default()
        },
    )
}

#[test]
fn sweep_rows_are_row_major_and_parallel_safe() {
    let grid = small_grid();
    let a = run_sweep(&grid, 1).unwrap();
    let b = run_sweep(&grid, 6).unwrap();
    assert_eq!(a.rows, b.rows);
    assert_eq!(a.len(), 15);
    let mu = a.reals("mu").unwrap();
    let u = a.reals("u").unwrap();
    assert_eq!(mu[0], Some(0.0));
    assert_eq!(u[..5], [Some(-8.0), Some(-4.0), Some(0.0), Some(4.0), Some(8.0)]);
    assert_eq!(mu[5], Some(2.0));
    for r in &a.rows {
        assert_eq!(r[a.column_index("status").unwrap()].as_text(), Some("ok"));
    }
}

#[test]
fn tables_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let table = run_sweep(&small_grid(), 2).unwrap();
    let csv = dir.path().join("t.csv");
    let json = dir.path().join("t.json");
    table.write_to_path(TableFormat::Csv, &csv).unwrap();
    table.write_to_path(TableFormat::Json, &json).unwrap();
    let from_csv = ResultTable::read_from_path(TableFormat::Csv, &csv, Some(&table.columns)).unwrap();
    assert_eq!(from_csv.rows, table.rows);
    let from_json = ResultTable::read_from_path(TableFormat::Json, &json, None).unwrap();
    assert_eq!(from_json, table);

    let inferred = ResultTable::read_from_path(TableFormat::Csv, &csv, None).unwrap();
    assert_eq!(inferred.column("phase").unwrap().len(), 15);
    assert_eq!(inferred.columns[inferred.column_index("magnetization").unwrap()].kind, ColumnKind::Real);
}

#[test]
fn manifest_echoes_inputs_and_tolerances() {
    let table = run_sweep(&small_grid(), 1).unwrap();
    let m = table.manifest.unwrap();
    assert_eq!(m["task"], "phase_diagram");
    assert_eq!(m["grid"]["fixed"]["n_sites"], 6);
    for key in ["delta", "mu", "u", "temperature", "coupling", "dos", "eps_gap", "eps_m", "saturation"] {
        assert!(m["grid"]["fixed"].get(key).is_some(), "{key}");
    }
    for key in ["residual_tol", "degeneracy_tol", "freq_floor", "eps_gap"] {
        assert!(m["tolerances"].get(key).is_some(), "{key}");
    }
    assert!(m.get("version").is_some());
}

#[test]
fn identical_runs_differ_only_in_timestamp() {
    let mut a = run_sweep(&small_grid(), 3).unwrap();
    let mut b = run_sweep(&small_grid(), 1).unwrap();
    for t in [&mut a, &mut b] {
        t.manifest.as_mut().unwrap()["generated_at_unix"] = serde_json::Value::Null;
    }
    let mut ja = Vec::new();
    let mut jb = Vec::new();
    a.write_json(&mut ja).unwrap();
    b.write_json(&mut jb).unwrap();
    assert_eq!(ja, jb);
}

#[test]
fn zero_gap_window_on_a_small_chain() {
    let mut grid = preset("fig1a").unwrap();
    grid.fixed.n_sites = 8;
    grid.set_axis(SweepAxis::Delta, AxisValues::List(vec![5.0]));
    let t = run_sweep(&grid, 4).unwrap();
    let gaps = t.reals("delta_e").unwrap();
    let us = t.reals("u").unwrap();
    let at8 = us.iter().position(|u| *u == Some(8.0)).unwrap();
    assert!(gaps[at8].unwrap() < 1e-2);
    assert!(gaps[0].unwrap() > 1e-2);
}

#[test]
fn every_preset_validates() {
    for name in majorana_core::sweep::PRESET_NAMES {
        let g = preset(name).unwrap();
        g.validate().unwrap();
        assert!(!g.columns().unwrap().is_empty());
    }
}

#[test]
fn config_json_parses_with_defaults() {
    let g = SweepGrid::from_json_str(
        r#"{"task": "rates", "axes": [{"name": "temperature", "values": [0.0, 0.5]}], "fixed": {"noise": "dephasing"}}"#,
    )
    .unwrap();
    assert_eq!(g.fixed.noise, NoiseKind::Dephasing);
    assert_eq!(g.fixed.n_sites, FixedParams::default().n_sites);
    assert!(SweepGrid::from_json_str(r#"{"task": "gap", "extra": 1}"#).is_err());
}
