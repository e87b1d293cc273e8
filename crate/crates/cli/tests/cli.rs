use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_admm4dvar")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// First number after `label` in the output.
fn reported(text: &str, label: &str) -> f64 {
    let rest = &text[text.find(label).unwrap() + label.len()..];
    rest.split_whitespace().next().unwrap().parse().unwrap()
}

#[test]
fn lorenz_observations_start_at_the_true_state() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("obs");
    let out = run(&["generate-obs", "--model", "lorenz", "--output_dir", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{out:?}");
    let obs = rows(&out_dir.join("observations.csv"));
    let first: Vec<f64> = obs.iter().filter(|r| r[0] == "0").map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(first, vec![-0.5, 0.5, 20.5]);
    assert_eq!(obs.len(), 11 * 3);
    let meta = fs::read_to_string(out_dir.join("meta.txt")).unwrap();
    assert!(meta.contains("seed = 1") && meta.contains("model = lorenz"));
}

#[test]
fn generation_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let out = run(&["generate-obs", "--model", "lorenz", "--noise_std", "1", "--output_dir", d.to_str().unwrap()]);
        assert_eq!(code(&out), 0);
    }
    for f in ["observations.csv", "truth_trajectory.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
}

#[test]
fn burgers_fd_defaults_give_eleven_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["generate-obs", "--model", "burgers-fd", "--output_dir", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let obs = rows(&dir.path().join("observations.csv"));
    assert_eq!(obs.len(), 11 * 99);
    assert_eq!(obs.last().unwrap()[0], "10");
    assert_eq!(obs.last().unwrap()[1], "98");
}

#[test]
fn zero_budget_records_the_initial_state_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["solve", "--model", "lorenz", "--max_iters", "0", "--output_dir", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let history = rows(&dir.path().join("history.csv"));
    assert_eq!(history.len(), 1);
    assert_eq!(history[0][0], "0");
}

#[test]
fn lorenz_admm_defaults_reduce_the_constraint_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["solve", "--model", "lorenz", "--output_dir", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{out:?}");
    let text = fs::read_to_string(dir.path().join("history.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "iter,total_error,constraint_error,objective");
    let history = rows(&dir.path().join("history.csv"));
    assert_eq!(history.len(), 601);
    for (i, r) in history.iter().enumerate() {
        assert_eq!(r[0], i.to_string());
    }
    let ce = |i: usize| history[i][2].parse::<f64>().unwrap();
    assert!(ce(600) < ce(10));
    assert!(dir.path().join("recovered_trajectory.csv").exists());
}

#[test]
fn cg_pr_records_its_final_state() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["solve", "--model", "lorenz", "--solver", "cg-pr", "--output_dir", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{out:?}");
    let meta = fs::read_to_string(dir.path().join("meta.txt")).unwrap();
    let line = meta.lines().find(|l| l.starts_with("final_u0 = ")).unwrap();
    let u0: Vec<f64> = line["final_u0 = ".len()..].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(u0.len(), 3);
    let text = fs::read_to_string(dir.path().join("history.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "iter,objective,grad_norm,step_size");
}

#[test]
fn check_adjoint_passes_and_catches_corruption() {
    let out = run(&["check-adjoint", "--model", "lorenz"]);
    assert_eq!(code(&out), 0);
    assert!(reported(&stdout(&out), "dot-product max relative error") <= 1e-12);

    let out = run(&["check-adjoint", "--model", "vorticity2d", "--m", "10"]);
    assert_eq!(code(&out), 0, "{out:?}");
    assert!(reported(&stdout(&out), "dot-product max relative error") <= 1e-8);

    let out = run(&["check-adjoint", "--model", "burgers-fem", "--corrupt_adjoint", "true"]);
    assert_eq!(code(&out), 5);
    assert!(String::from_utf8_lossy(&out.stderr).contains("dot-product test"));
}

#[test]
fn landscape_counts_and_minimum() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = run(&["landscape", "--model", "lorenz", "--resolution", "2", "--output_dir", d]);
    assert_eq!(code(&out), 0);
    assert_eq!(rows(&dir.path().join("landscape.csv")).len(), 8);

    let out = run(&["landscape", "--model", "lorenz", "--resolution", "3", "--box", "-1.5,0.5,-0.5,1.5,19.5,21.5", "--output_dir", d]);
    assert_eq!(code(&out), 0);
    let scan = rows(&dir.path().join("landscape.csv"));
    let best = scan
        .iter()
        .min_by(|a, b| a[3].parse::<f64>().unwrap().total_cmp(&b[3].parse::<f64>().unwrap()))
        .unwrap();
    let p: Vec<f64> = best[..3].iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(p, vec![-0.5, 0.5, 20.5]);

    let out = run(&["landscape", "--model", "burgers-fd", "--output_dir", d]);
    assert_eq!(code(&out), 2);
}

#[test]
fn config_file_and_rejections() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# lorenz twin\nmodel = lorenz\nmax_iters = 3\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&["solve", "--config", cfg.to_str().unwrap(), "--output_dir", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(rows(&out_dir.join("history.csv")).len(), 4);

    let out = run(&["solve", "--model", "lorenz", "--mu_typo", "1"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("mu_typo"));

    let out = run(&["solve", "--mu", "1"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("model"));

    let out = run(&["solve", "--model", "lorenz", "--T_obs", "0.305"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let target = blocker.join("sub");
    let out = run(&["generate-obs", "--model", "lorenz", "--output_dir", target.to_str().unwrap()]);
    assert_eq!(code(&out), 4);
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (d, t) in [(&a, "1"), (&b, "3")] {
        let out = run(&["solve", "--threads", t, "--model", "burgers-fd", "--max_iters", "5", "--output_dir", d.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{out:?}");
    }
    assert_eq!(fs::read(a.join("history.csv")).unwrap(), fs::read(b.join("history.csv")).unwrap());
}

#[test]
fn solve_from_written_observations() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("gen");
    assert_eq!(code(&run(&["generate-obs", "--model", "lorenz", "--output_dir", gen.to_str().unwrap()])), 0);
    let obs = gen.join("observations.csv");
    let init = format!("file:{}", gen.join("truth_trajectory.csv").display());
    let sol = dir.path().join("sol");
    let out = run(&[
        "solve", "--model", "lorenz", "--observations", obs.to_str().unwrap(), "--init", &init,
        "--max_iters", "2", "--output_dir", sol.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{out:?}");
    // started feasible and optimal: nothing moves
    let history = rows(&sol.join("history.csv"));
    assert!(history.iter().all(|r| r[2].parse::<f64>().unwrap() < 1e-20));
}
