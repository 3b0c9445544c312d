use std::fs;
use std::path::{Path, PathBuf};

use pumped_cli::commands::{ensemble_verify, fixtures, run, spectrum, sweep};
use pumped_cli::{parse_config, CliError, RunConfig};

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn case(id: u32) -> RunConfig {
    pumped_cli::load_config(&config_path(&format!("case{id}.conf"))).unwrap()
}

fn case_text(id: u32) -> String {
    fs::read_to_string(config_path(&format!("case{id}.conf"))).unwrap()
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn read(path: &Path) -> Table {
        let text = fs::read_to_string(path).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap().split(',').map(String::from).collect();
        let rows = lines
            .map(|l| l.split(',').map(|x| x.parse::<f64>().unwrap()).collect())
            .collect();
        Table { header, rows }
    }

    fn column(&self, name: &str) -> Vec<f64> {
        let k = self.header.iter().position(|h| h == name).unwrap();
        self.rows.iter().map(|r| r[k]).collect()
    }
}

#[test]
fn case1_population_rises_to_steady_trace() {
    let dir = tempfile::tempdir().unwrap();
    run(&case(1), dir.path()).unwrap();
    let traj = Table::read(&dir.path().join("trajectory.csv"));
    let total = traj.column("total_population");
    assert!(total[0].abs() <= 1e-12);
    assert!(total.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    assert!((total.last().unwrap() - 2.0625).abs() <= 1e-4);

    let (r11, r22, c) = (
        traj.column("rho_1_1_re"),
        traj.column("rho_2_2_re"),
        traj.column("abs_coherence_1_2"),
    );
    for k in 0..c.len() {
        assert!(c[k] <= (r11[k] * r22[k]).max(0.0).sqrt() + 1e-6, "row {k}");
    }
}

#[test]
fn normalized_lyapunov_decays_monotonically_in_all_cases() {
    for id in 1..=4 {
        let dir = tempfile::tempdir().unwrap();
        run(&case(id), dir.path()).unwrap();
        let lyap = Table::read(&dir.path().join("lyapunov.csv"));
        let m = lyap.column("m_omega_normalized");
        assert_eq!(m[0], 1.0);
        assert!(m.windows(2).all(|w| w[1] <= w[0] + 1e-10), "case {id}");
        assert!(*m.last().unwrap() <= 1e-6, "case {id}: {}", m.last().unwrap());
        let s = lyap.column("s_omega");
        assert!(s.windows(2).all(|w| w[1] >= w[0] - 1e-8), "case {id}");
    }
}

#[test]
fn methods_agree() {
    for id in 1..=4 {
        let dir = tempfile::tempdir().unwrap();
        run(&case(id), dir.path()).unwrap();
        let delta = Table::read(&dir.path().join("method_delta.csv"));
        assert!(delta.column("max_abs_delta").iter().all(|&d| d <= 1e-8), "case {id}");
    }
}

#[test]
fn starting_at_steady_state_stays_there() {
    let text = case_text(1).replace("init_rho = zero", "init_rho = custom")
        + "matrix.init.re = [\n 1 0\n 0 1.0625\n]\nmatrix.init.im = [\n 0 0.25\n -0.25 0\n]\n";
    let dir = tempfile::tempdir().unwrap();
    run(&parse_config(&text).unwrap(), dir.path()).unwrap();
    let traj = Table::read(&dir.path().join("trajectory.csv"));
    for name in ["rho_1_1_re", "rho_2_2_re", "rho_1_2_im", "total_population"] {
        let col = traj.column(name);
        assert!(col.iter().all(|x| (x - col[0]).abs() <= 1e-12), "{name}");
    }
    let lyap = Table::read(&dir.path().join("lyapunov.csv"));
    assert!(lyap.column("m_omega_normalized").iter().all(|&m| m == 0.0));
    assert!(lyap.column("s_omega").iter().all(|s| s.is_nan()));
}

#[test]
fn case3_relaxes_to_equal_populations() {
    let dir = tempfile::tempdir().unwrap();
    run(&case(3), dir.path()).unwrap();
    let traj = Table::read(&dir.path().join("trajectory.csv"));
    let first = &traj.rows[0];
    let last = traj.rows.last().unwrap();
    // t, rho11, rho12, rho21, rho22 as re/im pairs
    assert_eq!(first[7], 1.0);
    assert_eq!(first[1], 0.0);
    let expected = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0];
    for (got, want) in last[1..9].iter().zip(expected) {
        assert!((got - want).abs() <= 1e-6);
    }
}

#[test]
fn outputs_are_byte_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        run(&case(2), dir).unwrap();
        sweep(&case(2), "coupling_v", 0.5, 20.0, 16, dir).unwrap();
    }
    for name in ["trajectory.csv", "lyapunov.csv", "method_delta.csv", "sweep.csv"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
        assert!(!x.contains(&b'\r'));
    }
}

fn eigenvalue_lines(report: &str) -> Vec<(f64, f64)> {
    report
        .lines()
        .skip_while(|l| *l != "eigenvalues")
        .skip(1)
        .take_while(|l| l.starts_with("  "))
        .map(|l| {
            let mut parts = l.split_whitespace().skip(1);
            let re = parts.next().unwrap().parse().unwrap();
            let im = parts.next().unwrap().trim_end_matches('i').parse().unwrap();
            (re, im)
        })
        .collect()
}

#[test]
fn spectrum_reports_reference_eigenvalues() {
    let r2 = spectrum(&case(2)).unwrap();
    let got = eigenvalue_lines(&r2);
    let want = [(-0.3779, 0.0), (-0.5, -4.0945), (-0.5, 4.0945), (-0.6221, 0.0)];
    assert_eq!(got.len(), 4);
    for (g, w) in got.iter().zip(want) {
        assert!((g.0 - w.0).abs() <= 1e-4 && (g.1 - w.1).abs() <= 1e-4, "{g:?} vs {w:?}");
    }
    assert!(r2.contains("steady state (rho_22, rho_21, rho_12, rho_11)"));
    assert!(r2.contains("coherence-decay-constraint   pass"));

    let got = eigenvalue_lines(&spectrum(&case(4)).unwrap());
    let want = [(-1.0, -11.1803), (-1.0, 0.0), (-1.0, 0.0), (-1.0, 11.1803)];
    let mut got_sorted = got.clone();
    got_sorted.sort_by(|a, b| a.1.total_cmp(&b.1));
    for (g, w) in got_sorted.iter().zip(want) {
        assert!((g.0 - w.0).abs() <= 1e-9 && (g.1 - w.1).abs() <= 1e-4, "{g:?} vs {w:?}");
    }
}

#[test]
fn spectrum_rejects_closed_pumped_level() {
    let cfg = case(1).with_parameter("coupling_v", 0.0).unwrap();
    let err = spectrum(&cfg).unwrap_err();
    assert!(matches!(err, CliError::Core(pumped_core::Error::NonDecayingMode { .. })));
    assert_eq!(err.exit_code(), 4);
}

fn sweep_column(cfg: &RunConfig, param: &str, from: f64, to: f64, steps: usize) -> Vec<f64> {
    let dir = tempfile::tempdir().unwrap();
    sweep(cfg, param, from, to, steps, dir.path()).unwrap();
    Table::read(&dir.path().join("sweep.csv")).column("population_difference")
}

#[test]
fn sweep_trends() {
    assert!(sweep_column(&case(3), "coupling_v", 0.0, 50.0, 11).iter().all(|&d| d == 0.0));

    let mut unbalanced = case(3).with_parameter("pump_2", 3.0).unwrap();
    let d = sweep_column(&unbalanced, "coupling_v", 0.01, 50.0, 26);
    assert!(d.windows(2).all(|w| w[1] < w[0]));
    assert!((d[0] - 2.0).abs() < 1e-3);
    assert!(*d.last().unwrap() < 1e-2);

    unbalanced = unbalanced.with_parameter("coupling_v", 2.0).unwrap();
    let d = sweep_column(&unbalanced, "coherence_decay", 1.0, 1e5, 21);
    assert!(d.windows(2).all(|w| w[1] > w[0]));
    assert!((d.last().unwrap() - 2.0).abs() < 1e-3);
}

#[test]
fn sweep_matches_closed_form_and_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = case(3).with_parameter("pump_2", 2.5).unwrap();
    sweep(&cfg, "detuning", -10.0, 10.0, 21, dir.path()).unwrap();
    let t = Table::read(&dir.path().join("sweep.csv"));
    assert!(t.column("abs_deviation").iter().all(|&d| d <= 1e-12));

    assert!(matches!(sweep(&cfg, "colour", 0.0, 1.0, 3, dir.path()), Err(CliError::Usage(_))));
    assert!(matches!(sweep(&cfg, "detuning", 0.0, 1.0, 1, dir.path()), Err(CliError::Usage(_))));
    let err = sweep(&cfg, "coherence_decay", 0.0, 2.0, 5, dir.path()).unwrap_err();
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn ensemble_verification() {
    let report = ensemble_verify(&case(1), 1e-3).unwrap();
    assert!(report.contains("PASS"));

    let wide = case(1).with_parameter("coherence_decay", 0.9).unwrap();
    let err = ensemble_verify(&wide, 1e-3).unwrap_err();
    assert!(matches!(err, CliError::Core(pumped_core::Error::UnsupportedRelaxation(_))));
    assert_eq!(err.exit_code(), 3);

    let dark = case(3)
        .with_parameter("pump_1", 0.0)
        .unwrap()
        .with_parameter("pump_2", 0.0)
        .unwrap();
    let report = ensemble_verify(&dark, 1e-3).unwrap();
    let residual: f64 = report.lines().next().unwrap().split_whitespace().last().unwrap().parse().unwrap();
    assert!(residual <= 1e-6);

    let err = ensemble_verify(&case(1), 0.5).unwrap_err();
    assert!(matches!(err, CliError::Threshold { .. }));
    assert_eq!(err.exit_code(), 5);
}

#[test]
fn fixtures_within_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let report = fixtures(Some(dir.path())).unwrap();
    assert_eq!(report.matches(" ok").count(), 4);
    let csv = fs::read_to_string(dir.path().join("fixtures.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn explicit_three_level_config_runs() {
    let cfg = pumped_cli::load_config(&config_path("three_level.conf")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    run(&cfg, dir.path()).unwrap();
    let traj = Table::read(&dir.path().join("trajectory.csv"));
    assert_eq!(traj.header.len(), 1 + 18 + 1 + 3);
    let delta = Table::read(&dir.path().join("method_delta.csv"));
    assert!(delta.column("max_abs_delta").iter().all(|&d| d <= 1e-8));
    assert!(ensemble_verify(&cfg, 1e-3).is_ok());
    assert!(matches!(
        sweep(&cfg, "coupling_v", 0.0, 1.0, 3, dir.path()),
        Err(CliError::Usage(_))
    ));
}
