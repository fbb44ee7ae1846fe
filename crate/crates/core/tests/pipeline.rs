use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use zeta_strips::pipeline::{execute, run, validate, PipelineError, RunConfig, Target, TraceManifest};

fn config(dir: &Path, m_max: u32) -> RunConfig {
    RunConfig {
        m_max,
        output_dir: dir.to_path_buf(),
        ..RunConfig::default()
    }
}

/// Every file under `dir` except stage caches, with its bytes.
fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            let name = path.file_name().unwrap().to_string_lossy().to_string();
            if name.starts_with('.') {
                continue;
            }
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

#[test]
fn single_strip_run() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run(&config(dir.path(), 1)).unwrap();
    assert_eq!(summary.strips, 1);
    assert_eq!(summary.traces, 3);
    assert_eq!(summary.mean_primary_score, Some(0.5));
    assert_eq!(summary.primaries_agree, Some(true));
    assert!(summary.bottoms_fit.is_none());

    let strips = fs::read_to_string(dir.path().join("strips.csv")).unwrap();
    let mut lines = strips.lines();
    assert_eq!(
        lines.next(),
        Some("m,bottom_t,top_t,width,bottom_rounded,top_rounded,width_rounded,n_zeros,primary_index,primary_score")
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "1");
    assert_eq!(row[1], "9.66690805613");
    assert_eq!(&row[4..], ["10", "18", "8", "1", "1", "0.5"]);
    assert!(lines.next().is_none());

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(report["fits"]["bottoms"].is_null());
    assert_eq!(report["census"]["zeros_in_strips"], 1);
    assert_eq!(report["series"][2]["x_scale"], "log");
    for f in ["fig1.csv", "fig2.csv", "fig3.csv", "fig4.csv", "fig5.csv", "zeros.csv", "traces.json"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(&config(a.path(), 6)).unwrap();
    run(&RunConfig {
        worker_count: 3,
        ..config(b.path(), 6)
    })
    .unwrap();
    let first = snapshot(a.path());
    assert!(first.len() > 10);
    assert_eq!(first, snapshot(b.path()));

    // a second run into the same directory resumes from the stage cache
    run(&config(a.path(), 6)).unwrap();
    assert_eq!(first, snapshot(a.path()));
}

#[test]
fn report_resumes_from_cached_stages() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), 4);
    assert!(matches!(
        execute(&cfg, Target::ReportFromCache),
        Err(PipelineError::MissingStage("zeros"))
    ));
    execute(&cfg, Target::Strips).unwrap();
    assert!(dir.path().join("strips.csv").is_file());
    assert!(!dir.path().join("report.json").exists());

    // an interrupted earlier attempt leaves a staging directory behind
    let stale = dir.path().join(format!(".staging-{}", cfg.run_hash()));
    fs::create_dir_all(&stale).unwrap();
    fs::write(stale.join("strips.csv"), "partial").unwrap();

    let summary = execute(&cfg, Target::ReportFromCache).unwrap();
    assert_eq!(summary.strips, 4);
    assert!(dir.path().join("report.json").is_file());
    assert!(!stale.exists());

    let fresh = tempfile::tempdir().unwrap();
    run(&config(fresh.path(), 4)).unwrap();
    assert_eq!(snapshot(dir.path()), snapshot(fresh.path()));
}

#[test]
fn changed_settings_do_not_reuse_stale_stages() {
    let dir = tempfile::tempdir().unwrap();
    execute(&config(dir.path(), 2), Target::Strips).unwrap();
    let other = RunConfig {
        sigma_left: -2.0,
        ..config(dir.path(), 2)
    };
    assert!(matches!(
        execute(&other, Target::ReportFromCache),
        Err(PipelineError::MissingStage("traces"))
    ));
}

#[test]
fn failures_are_quarantined() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        sigma_right: 2.0,
        ..config(dir.path(), 1)
    };
    let err = run(&cfg).unwrap_err();
    assert!(matches!(err, PipelineError::Seed(_)), "{err}");
    let quarantine = dir.path().join("quarantine").join(cfg.run_hash());
    assert!(quarantine.join("zeros.csv").is_file());
    assert!(fs::read_to_string(quarantine.join("error.txt")).unwrap().contains("sigma_right"));
    assert!(!dir.path().join("zeros.csv").exists());
    assert!(!dir.path().join("strips.csv").exists());
}

#[test]
fn invalid_config_is_rejected_before_any_work() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = RunConfig {
        sigma_left: 1.0,
        ..config(&out, 1)
    };
    assert!(matches!(run(&cfg), Err(PipelineError::Config(_))));
    assert!(!out.exists());
}

#[test]
fn trace_target_writes_the_requested_contours() {
    let dir = tempfile::tempdir().unwrap();
    let summary = execute(&config(dir.path(), 200), Target::Traces { m_lo: 2, m_hi: 3 }).unwrap();
    assert_eq!(summary.traces, 5);
    let manifest: TraceManifest =
        serde_json::from_str(&fs::read_to_string(dir.path().join("traces.json")).unwrap()).unwrap();
    let ks: Vec<u32> = manifest.traces.iter().map(|t| t.k).collect();
    assert_eq!(ks, vec![4, 5, 6, 7, 8]);
    for entry in &manifest.traces {
        let text = fs::read_to_string(dir.path().join(&entry.file)).unwrap();
        assert_eq!(text.lines().count(), entry.points + 1);
    }
}

#[test]
fn strips_reference_listed_zeros_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    run(&config(dir.path(), 5)).unwrap();
    let zeros = fs::read_to_string(dir.path().join("zeros.csv")).unwrap();
    let ordinals: Vec<u64> = zeros.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    let manifest: TraceManifest =
        serde_json::from_str(&fs::read_to_string(dir.path().join("traces.json")).unwrap()).unwrap();
    let strips = fs::read_to_string(dir.path().join("strips.csv")).unwrap();
    let mut first_zero = 1u64;
    for line in strips.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let m: u32 = cols[0].parse().unwrap();
        let n: u64 = cols[7].parse().unwrap();
        for o in first_zero..first_zero + n {
            assert!(ordinals.contains(&o), "strip {m} zero {o}");
        }
        first_zero += n;
        for k in [2 * m, 2 * m + 2] {
            assert!(manifest.traces.iter().any(|t| t.k == k), "strip {m} trace {k}");
        }
    }
}

#[test]
fn validate_passes_for_a_small_default_run() {
    let dir = tempfile::tempdir().unwrap();
    let checks = validate(&config(dir.path(), 5));
    assert!(checks.len() >= 10);
    for c in &checks {
        assert!(c.pass, "{}: {}", c.name, c.detail);
    }
}
