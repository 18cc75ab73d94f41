use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn multifi(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multifi"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

#[test]
fn generate_counts_and_refuses_to_overwrite() {
    let t = tempfile::tempdir().unwrap();
    let o = multifi(t.path(), &["generate", "--preset", "full"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("78 scenarios\n"));
    assert_eq!(files(&t.path().join("scenarios")).len(), 78);

    let again = multifi(t.path(), &["generate", "--preset", "full"]);
    assert_eq!(again.status.code(), Some(3));
    assert!(stderr(&again).contains("--force"));

    let forced = multifi(t.path(), &["--force", "generate", "--radius", "10", "--angle", "90"]);
    assert_eq!(forced.status.code(), Some(0));
    assert!(stdout(&forced).starts_with("1 scenarios\n"));
    let f = files(&t.path().join("scenarios"));
    assert_eq!(f.len(), 1);
    assert!(f[0].ends_with("r10_g+90.json"));
}

#[test]
fn run_compare_and_gaps() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path();
    assert!(multifi(out, &["generate"]).status.success());
    let one = out.join("scenarios").join("r20_g+60.json");
    let o = multifi(out, &["run", "--scenarios", one.to_str().unwrap(), "--backend", "both"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("2 runs: 2 ok"));
    for b in ["low", "high"] {
        let names: Vec<_> = files(&out.join("runs").join(b));
        assert_eq!(names.len(), 2);
        assert!(names[0].ends_with(format!("r20_g+60__{b}.csv")));
        assert!(names[1].ends_with(format!("r20_g+60__{b}.json")));
    }

    // Rerunning only the low backend leaves one unpaired run on each side.
    let two = out.join("scenarios").join("r10_g+90.json");
    let o = multifi(
        out,
        &[
            "--force",
            "run",
            "--scenarios",
            two.to_str().unwrap(),
            "--backend",
            "low",
        ],
    );
    assert!(o.status.success());
    let o = multifi(out, &["compare"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(
        text.contains("gaps (2):")
            && text.contains("r10_g+90: missing high-fidelity run")
            && text.contains("r20_g+60: missing low-fidelity run"),
        "{text}"
    );
    let grid = out.join("reports/grid");
    assert!(grid.join("heatmap.csv").is_file() && grid.join("heatmap.svg").is_file());
    assert!(fs::read_to_string(grid.join("heatmap.csv")).unwrap().contains("NA"));

    let o = multifi(out, &["compare", "--metric", "mean"]);
    assert_eq!(o.status.code(), Some(3));
    let o = multifi(
        out,
        &["--force", "compare", "--metric", "mean", "--reference", "planned"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let heat = fs::read_to_string(grid.join("heatmap.csv")).unwrap();
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(grid.join("summary.json")).unwrap()).unwrap();
    let mean = summary["metrics"][0]["aggregates"]["mean_abs_d"].as_f64().unwrap();
    assert!(heat.contains(&mean.to_string()), "{heat}");
    let cfg: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("effective_config.json")).unwrap()).unwrap();
    assert_eq!(cfg["evaluation"]["metric"], "mean");
    assert_eq!(cfg["evaluation"]["reference"], "planned");
}

#[test]
fn flags_override_the_config_file() {
    let t = tempfile::tempdir().unwrap();
    let cfg = t.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"workers": 3, "run": {"substeps": 20}, "evaluation": {"metric": "mean"}}"#,
    )
    .unwrap();
    let out = t.path().join("o");
    let o = multifi(
        &out,
        &[
            "--config",
            cfg.to_str().unwrap(),
            "generate",
            "--radius",
            "30",
            "--angle",
            "-60",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = multifi(
        &out,
        &[
            "--config",
            cfg.to_str().unwrap(),
            "run",
            "--backend",
            "high",
            "--substeps",
            "5",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let eff = fs::read_to_string(out.join("effective_config.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&eff).unwrap();
    assert_eq!(v["workers"], 3);
    assert_eq!(v["run"]["substeps"], 5);
    assert_eq!(v["evaluation"]["metric"], "mean");
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["subcommand"], "run");
    assert_eq!(m["parameters"]["substeps"], "5");
    use sha2::Digest;
    assert_eq!(m["config_sha256"], hex::encode(sha2::Sha256::digest(eff.as_bytes())));

    fs::write(&cfg, r#"{"wokers": 3}"#).unwrap();
    let o = multifi(&out, &["--config", cfg.to_str().unwrap(), "catalog"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("wokers"));
}

#[test]
fn study_rejects_unknown_models_with_the_catalog() {
    let t = tempfile::tempdir().unwrap();
    let o = multifi(t.path(), &["study-vehicles", "--models", "touring,bus"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("`bus`") && e.contains("touring, offroad, citycar"), "{e}");
}

#[test]
fn study_ranks_models_and_writes_series() {
    let t = tempfile::tempdir().unwrap();
    let o = multifi(t.path(), &["study-vehicles", "--workers", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let ranked: Vec<&str> = text
        .lines()
        .filter_map(|l| l.split_whitespace().nth(1))
        .filter(|m| ["touring", "offroad", "citycar"].contains(m))
        .collect();
    assert_eq!(ranked.len(), 3);
    let dir = t.path().join("reports/vehicle_study");
    let disp = fs::read_to_string(dir.join("displacement.csv")).unwrap();
    assert!(disp.starts_with("model,s_m,d_m\n"));
    for m in ["touring", "offroad", "citycar"] {
        assert!(disp.contains(&format!("\n{m},")));
        assert!(dir.join(format!("s_curve_study_{m}__high.displacement.csv")).is_file());
    }
    assert!(fs::read_to_string(dir.join("velocity.csv"))
        .unwrap()
        .starts_with("model,t_s,v_ref_mps,v_cmp_mps\n"));
    assert!(dir.join("displacement.svg").is_file() && dir.join("velocity.svg").is_file());
}

#[test]
fn io_errors_exit_with_4() {
    let t = tempfile::tempdir().unwrap();
    let blocker = t.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = multifi(&blocker.join("out"), &["generate"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let o = multifi(t.path(), &["--config", "/nonexistent/cfg.json", "generate"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn usage_errors_exit_with_2_and_help_documents_flags() {
    let t = tempfile::tempdir().unwrap();
    assert_eq!(
        multifi(t.path(), &["run", "--backend", "medium"]).status.code(),
        Some(2)
    );
    assert_eq!(
        multifi(t.path(), &["compare", "--metric", "median"]).status.code(),
        Some(2)
    );
    let cases: [(&str, &[&str]); 6] = [
        (
            "generate",
            &[
                "--preset",
                "--radius",
                "--angle",
                "--force",
                "--config",
                "--out",
                "--vehicles",
            ],
        ),
        (
            "run",
            &[
                "--scenarios",
                "--backend",
                "--workers",
                "--dt-plan",
                "--substeps",
                "--max-steps",
                "--seed",
            ],
        ),
        ("compare", &["--metric", "--reference", "--fold-negative"]),
        ("study-vehicles", &["--scenario", "--models", "--workers"]),
        ("demo", &["--workers"]),
        ("catalog", &["--vehicles"]),
    ];
    for (cmd, flags) in cases {
        let o = multifi(t.path(), &[cmd, "--help"]);
        assert!(o.status.success());
        let h = stdout(&o);
        for f in flags {
            assert!(h.contains(f), "{cmd} --help lacks {f}");
        }
    }
}

#[test]
fn catalog_dump_applies_overrides() {
    let t = tempfile::tempdir().unwrap();
    let o = multifi(t.path(), &["catalog"]);
    assert!(o.status.success());
    let mut v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["format_version"], 1);
    assert_eq!(v["vehicles"].as_array().unwrap().len(), 3);
    v["vehicles"][0]["v_max"] = 30.0.into();
    let f = t.path().join("v.json");
    fs::write(&f, v.to_string()).unwrap();
    let o = multifi(t.path(), &["--vehicles", f.to_str().unwrap(), "catalog"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["vehicles"][0]["v_max"], 30.0);
}

#[test]
fn forced_reruns_are_byte_identical_except_wall_clock() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path();
    let steps: [&[&str]; 3] = [
        &["generate", "--radius", "15", "--angle", "120"],
        &["run", "--workers", "2"],
        &["compare"],
    ];
    let snapshot = |out: &Path| {
        let mut all = Vec::new();
        let mut stack = vec![out.to_path_buf()];
        while let Some(d) = stack.pop() {
            for p in files(&d) {
                if p.is_dir() {
                    stack.push(p);
                } else {
                    all.push((p.clone(), fs::read_to_string(&p).unwrap()));
                }
            }
        }
        all.sort();
        all
    };
    for s in steps {
        assert!(multifi(out, s).status.success());
    }
    let first = snapshot(out);
    for s in steps {
        let mut args = vec!["--force"];
        args.extend_from_slice(s);
        assert!(multifi(out, &args).status.success());
    }
    let second = snapshot(out);
    assert_eq!(first.len(), second.len());
    for ((p, a), (_, b)) in first.iter().zip(&second) {
        let name = p.file_name().unwrap().to_str().unwrap();
        if matches!(name, "manifest.json" | "runtime.txt" | "batch_report.json") {
            continue;
        }
        if name.ends_with("__low.json") || name.ends_with("__high.json") {
            let strip = |s: &str| {
                let mut v: serde_json::Value = serde_json::from_str(s).unwrap();
                v["wall_clock_seconds"] = 0.0.into();
                v
            };
            assert_eq!(strip(a), strip(b), "{name}");
            continue;
        }
        assert_eq!(a, b, "{name}");
    }
}
