//! Sweeps, point records and simulation output through the library API.

use idsgame_cli::config::{Family, Preset, StateChoice};
use idsgame_cli::run::{run_cascade, run_mc, run_point, McRecord, Value};
use idsgame_cli::{run_sweep, Config, Output, SweepSpec};

fn table_one_grid(outputs: &str, beta: &str) -> Config {
    Config::from_toml(&format!(
        "[sweep]\nfamily = \"power_law\"\nvalues = [0.0, 1.0, 2.0, 3.0]\nk = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]\nbeta = {beta}\noutputs = {outputs}\n"
    ))
    .unwrap()
}

fn csv_rows(bytes: &[u8]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut reader = csv::Reader::from_reader(bytes);
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn figure_one_grid_shape_and_trend() {
    let config = table_one_grid("[\"d_ne\", \"protected_mass\", \"cascade_prob\"]", "[0.85]");
    let spec = SweepSpec::from_config(&config).unwrap();
    let mut buf = Vec::new();
    assert_eq!(run_sweep(&spec, &mut buf).unwrap(), 40);
    let (header, rows) = csv_rows(&buf);
    assert_eq!(
        header,
        ["family_param", "k", "beta_ia", "d_avg", "d_ne", "protected_mass", "cascade_prob", "error"]
    );
    assert_eq!(rows.len(), 40);
    let (fp, k, d_ne, err) = (column(&header, "family_param"), column(&header, "k"), column(&header, "d_ne"), column(&header, "error"));
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[fp].parse::<f64>().unwrap(), (i / 10) as f64);
        assert_eq!(row[k].parse::<u32>().unwrap(), (i % 10) as u32 + 1);
        assert!(row[err].is_empty());
    }
    for chunk in rows.chunks(10) {
        let thresholds: Vec<u32> = chunk.iter().map(|r| r[d_ne].parse().unwrap()).collect();
        assert!(thresholds.windows(2).all(|w| w[1] <= w[0]), "{thresholds:?}");
    }
}

#[test]
fn protection_grows_with_attack_probability() {
    let config = table_one_grid("[\"protected_mass\"]", "[0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0]");
    let spec = SweepSpec::from_config(&config).unwrap();
    let records = spec.records();
    assert_eq!(records.len(), 4 * 10 * 20);
    for run in records.chunks(20) {
        let masses: Vec<f64> = run.iter().map(|r| r.get(Output::ProtectedMass).unwrap().as_f64()).collect();
        assert!(masses.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{masses:?}");
        assert!(run.windows(2).all(|w| w[1].beta_ia > w[0].beta_ia));
    }
}

#[test]
fn sweep_is_deterministic() {
    let config = Config::from_toml(
        "[sweep]\nfamily = \"poisson\"\nvalues = [1.1, 4.0, 10.6]\nk = [1, 3]\nbeta = [0.3, 0.85]\noutputs = [\"d_ne\", \"poa\", \"poa_bound\", \"d_dagger\", \"mean_offspring\"]\n",
    )
    .unwrap();
    let spec = SweepSpec::from_config(&config).unwrap();
    let mut a = Vec::new();
    let mut b = Vec::new();
    run_sweep(&spec, &mut a).unwrap();
    run_sweep(&spec, &mut b).unwrap();
    assert_eq!(a, b);
    let serial: Vec<_> = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| spec.records());
    assert_eq!(serial, spec.records());
}

#[test]
fn csv_round_trip_keeps_twelve_digits() {
    let config = table_one_grid("[\"protected_mass\", \"exposure\", \"sc_ne\", \"cascade_prob\", \"s_star\"]", "[0.85]");
    let spec = SweepSpec::from_config(&config).unwrap();
    let records = spec.records();
    let mut buf = Vec::new();
    run_sweep(&spec, &mut buf).unwrap();
    let (header, rows) = csv_rows(&buf);
    for (record, row) in records.iter().zip(&rows) {
        let d_avg: f64 = row[column(&header, "d_avg")].parse().unwrap();
        assert!((d_avg - record.d_avg).abs() <= 5e-12 * record.d_avg.abs());
        for &o in &spec.outputs {
            let written: f64 = row[column(&header, o.name())].parse().unwrap();
            let exact = record.get(o).unwrap().as_f64();
            assert!((written - exact).abs() <= 5e-12 * exact.abs(), "{}: {written} vs {exact}", o.name());
        }
    }
}

#[test]
fn explicit_family_uses_vector_index() {
    let config = Config::from_toml(
        "[sweep]\nfamily = \"explicit\"\nmasses = [[0.0, 0.0, 1.0], [1.0, 1.0, 1.0, 1.0]]\nk = [1]\nbeta = [0.5]\noutputs = [\"d_ne\"]\n",
    )
    .unwrap();
    let spec = SweepSpec::from_config(&config).unwrap();
    assert_eq!(spec.family, Family::Explicit);
    let records = spec.records();
    assert_eq!(records.iter().map(|r| r.family_param).collect::<Vec<_>>(), [0.0, 1.0]);
    assert_eq!(records[0].d_avg, 3.0);
    assert_eq!(records[1].d_avg, 2.5);
}

#[test]
fn invalid_grid_points_are_rejected_up_front() {
    let config = Config::from_toml("[sweep]\nbeta = [0.5, 1.5]\n").unwrap();
    let err = SweepSpec::from_config(&config).unwrap_err();
    assert!(format!("{err:#}").contains("beta_ia = 1.5"), "{err:#}");
    let empty = Config::from_toml("[sweep]\nk = []\n").unwrap();
    assert!(SweepSpec::from_config(&empty).is_err());
}

#[test]
fn point_record_contract() {
    let config = Config::from_toml("[distribution]\nalpha = 0.0\n[params]\nhops = 1\n").unwrap();
    let record = run_point(&config).unwrap();
    assert_eq!(record.outputs, Output::ALL);
    let Value::Int(d_ne) = record.get(Output::DNe).unwrap() else { panic!("d_ne is an integer") };
    assert!((1..=21).contains(&d_ne));
    let c = record.get(Output::CascadeProb).unwrap().as_f64();
    assert!((0.0..=1.0).contains(&c));
    assert_eq!(run_point(&config).unwrap().fields(), record.fields());
}

#[test]
fn table_two_bound_is_applicable() {
    for alpha in [0.0, 1.0, 2.5] {
        let config =
            Config::from_toml(&format!("[params]\npreset = \"table_two\"\n[distribution]\nalpha = {alpha}\n")).unwrap();
        assert_eq!(config.params.preset, Preset::TableTwo);
        let record = run_point(&config).unwrap();
        assert_eq!(record.get(Output::BoundApplicable), Some(Value::Bool(true)));
        assert!(record.get(Output::Poa).unwrap().as_f64() <= record.get(Output::PoaBound).unwrap().as_f64());
    }
    let strict = Config::from_toml("[params]\npreset = \"table_two\"\ncheck_assumptions = true\n").unwrap();
    let err = run_point(&strict).unwrap_err();
    assert!(format!("{err:#}").contains("check_assumptions"), "{err:#}");
}

fn degree_three(beta: f64, seed: u64) -> Config {
    Config::from_toml(&format!(
        "[params]\nbeta_ia = {beta}\n[distribution]\nfamily = \"explicit\"\nmasses = [0.0, 0.0, 1.0]\n[mc]\nstate = \"unprotected\"\nseed = {seed}\n"
    ))
    .unwrap()
}

#[test]
fn mc_record_columns() {
    let record = run_mc(&degree_three(0.75, 1)).unwrap();
    let fields = record.fields();
    let analytic = &fields[McRecord::HEADER.iter().position(|&h| h == "cascade_prob").unwrap()];
    assert_eq!(format!("{:.6}", analytic.parse::<f64>().unwrap()), "0.962963");
    assert!((record.empirical - 26.0 / 27.0).abs() <= 3.0 * record.std_error);
    assert_eq!(record.sim.n, 50_000);
    assert_eq!(record.sim.trials, 200);
    assert_eq!(run_mc(&degree_three(0.75, 1)).unwrap(), record);
}

#[test]
fn mc_subcritical_point() {
    let record = run_mc(&degree_three(0.25, 2)).unwrap();
    assert_eq!(record.cascade_prob, 0.0);
    assert!(record.empirical < 0.02, "{}", record.empirical);
}

#[test]
fn cascade_record_states() {
    let mut config = degree_three(0.75, 0);
    let unprotected = run_cascade(&config).unwrap();
    assert_eq!(unprotected.state, StateChoice::Unprotected);
    assert!((unprotected.report.s_star - 1.0 / 9.0).abs() < 1e-12);
    config.mc.state = StateChoice::Ne;
    let ne = run_cascade(&config).unwrap();
    assert!(ne.report.cascade_prob <= unprotected.report.cascade_prob);
}
