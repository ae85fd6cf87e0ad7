use std::path::PathBuf;
use std::process::{Command, Output};

fn afem_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_afem-lab"))
        .args(args)
        .env("AFEM_LAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Distinct values of the `ell` column.
fn levels(csv: &str) -> usize {
    let mut ells: Vec<&str> = csv.lines().skip(1).filter_map(|l| l.split(',').next()).collect();
    ells.dedup();
    ells.len()
}

#[test]
fn missing_problem_is_a_usage_error() {
    let o = afem_lab(&["run"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--problem"));
    assert_eq!(afem_lab(&["run", "--problem", "square"]).status.code(), Some(2));
    assert_eq!(afem_lab(&["run", "--problem", "kellogg", "--theta", "abc"]).status.code(), Some(2));
    assert_eq!(afem_lab(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn invalid_run_parameters_exit_with_one() {
    let o = afem_lab(&["run", "--problem", "kellogg", "--theta", "1.5", "--max-dofs", "100"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn run_writes_the_history_csv() {
    let o = afem_lab(&["run", "--problem", "kellogg", "--max-dofs", "200"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "ell,k,j,n_elem,n_dof,eta,increment,stop_outer,stop_inner,t_solve,t_estimate,t_mark,t_refine,cum_cost"
    );
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 14);
    assert_eq!(first[0], "0");
    assert!(String::from_utf8_lossy(&o.stderr).contains("algorithm: single"));

    let out = scratch("run.csv");
    let o = afem_lab(&["run", "--problem", "lshape-convection", "--max-dofs", "150", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("ell,k,j"));
    assert!(stdout(&o).contains("algorithm: nested"));
}

#[test]
fn flags_take_precedence_over_the_config_file() {
    let cfg = scratch("precedence.conf");
    std::fs::write(&cfg, "# levels from the file\nproblem = kellogg\nmax-levels = 4\nmax-dofs = 100000\n").unwrap();
    let from_file = afem_lab(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(from_file.status.success());
    assert_eq!(levels(&stdout(&from_file)), 4);
    let flagged = afem_lab(&["run", "--config", cfg.to_str().unwrap(), "--max-levels", "2"]);
    assert!(flagged.status.success());
    assert_eq!(levels(&stdout(&flagged)), 2);

    std::fs::write(&cfg, "problem = kellogg\ncolour = red\n").unwrap();
    assert_eq!(afem_lab(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn sweep_writes_a_cost_table() {
    let o = afem_lab(&["sweep", "--problem", "kellogg", "--max-dofs", "400", "--eta-factor", "0.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = stdout(&o);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("theta,lambda,status"));
    assert!(lines[1].contains(",complete,"));
    assert!(lines[1].ends_with(",1,1,1,1"));

    let o = afem_lab(&[
        "sweep", "--problem", "kellogg", "--max-dofs", "50", "--eta-factor", "1e-6", "--thetas", "0.3,0.5",
    ]);
    assert!(o.status.success());
    let csv = stdout(&o);
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",incomplete,,,,0,0,0,0")));
    assert!(String::from_utf8_lossy(&o.stderr).contains("threshold not reached"));

    let o = afem_lab(&["sweep", "--problem", "kellogg", "--algo", "uniform"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_is_reproducible() {
    let args = ["verify", "--seed", "3", "--max-dofs", "300", "--instances", "5"];
    let a = afem_lab(&args);
    let b = afem_lab(&args);
    assert!(a.status.success(), "{}", stdout(&a));
    assert_eq!(stdout(&a), stdout(&b));
    assert!(stdout(&a).contains("A2 reduction: PASS"));
}
