use hardy_core::explorer::*;
use hardy_core::quad::GridSpec;
use hardy_core::solver::Classification;

fn small() -> GridSpec {
    GridSpec { levels: 6, outer: 4, time_nodes: 8, ..GridSpec::default() }
}

fn config(extra: &str) -> SweepConfig {
    let text = format!(
        "[problem]\ndim = 1\np = 4.0\nz = 1.0\n\n[grid]\nlevels = 6\nouter = 4\ntime_nodes = 8\n{extra}"
    );
    SweepConfig::from_toml_str(&text).unwrap()
}

#[test]
fn defaults_and_unknown_keys() {
    let cfg = SweepConfig::from_toml_str("").unwrap();
    assert_eq!(cfg, SweepConfig::default());
    assert!(SweepConfig::from_toml_str("[problem]\nbogus = 1\n").is_err());
    assert!(SweepConfig::from_toml_str("[axes]\np = [3.0]\ngamma = [0.5]\ntheta = [2.0]\nc = [1.0]\n").is_err());
    assert!(SweepConfig::from_toml_str("[axes]\nc = []\n").is_err());
    let inf = SweepConfig::from_toml_str("[problem]\nhorizon = \"inf\"\n").unwrap();
    assert!(inf.problem.horizon.is_infinite());
}

#[test]
fn config_round_trips_through_toml() {
    let cfg = config("[axes]\nc = [0.01, 0.02]\n");
    let back = SweepConfig::from_toml_str(&cfg.to_toml().unwrap()).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.hash(), cfg.hash());
    assert_eq!(cfg.hash().len(), 64);
}

#[test]
fn rows_nest_with_c_fastest() {
    let cfg = config("[axes]\nc = [1.0, 2.0, 3.0]\np = [3.0, 4.0, 5.0]\n");
    let rows = cfg.rows();
    assert_eq!(rows.len(), 9);
    assert_eq!(cfg.axes.names(), ["p", "c"]);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r.p, [3.0, 4.0, 5.0][i / 3]);
        assert_eq!(r.c, [1.0, 2.0, 3.0][i % 3]);
        // Optimal exponent 2/(p − 1) off the origin.
        assert!((r.a.unwrap() - 2.0 / (r.p - 1.0)).abs() < 1e-15);
    }
}

#[test]
fn zero_data_give_one_row_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config("[axes]\nc = [0.0]\n");
    cfg.problem.data = DataKind::Zero;
    let table = sweep(&cfg).unwrap();
    assert_eq!(table.rows.len(), 1);
    assert_eq!(table.rows[0].classification, Classification::Converged);
    let paths = emit_report(&table, dir.path(), "zero", &[ReportFormat::Csv]).unwrap();
    let text = std::fs::read_to_string(&paths[0]).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], CSV_COLUMNS.join(","));
    assert!(lines[1].starts_with("0,4.0,0.5,2.0,,,1.0,0.0,converged,converged,"));
    assert!(text.ends_with('\n') && !text.contains('\r'));
}

#[test]
fn sweep_classifies_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("[axes]\na = [0.6666666666666666, 0.8]\nc = [0.01]\n");
    let t1 = sweep(&cfg).unwrap();
    let t2 = sweep(&cfg).unwrap();
    assert_eq!(t1.rows[0].classification, Classification::Converged);
    assert_eq!(t1.rows[1].classification, Classification::Diverging);
    assert!(t1.rows[1].divergence.is_some());
    assert!(t1.monotonicity_violations.is_empty());
    let f = [ReportFormat::Csv, ReportFormat::Json, ReportFormat::Plot];
    let p1 = emit_report(&t1, &dir.path().join("a"), "s", &f).unwrap();
    let p2 = emit_report(&t2, &dir.path().join("b"), "s", &f).unwrap();
    assert_eq!(p1.len(), 3);
    for (a, b) in p1.iter().zip(&p2) {
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap(), "{}", a.display());
    }
    let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(&p1[1]).unwrap()).unwrap();
    assert_eq!(meta["provenance"]["config_hash"], cfg.hash());
    assert_eq!(meta["provenance"]["seed"], 0);
}

#[test]
fn certified_rows_carry_the_template_id() {
    let cfg = config("[axes]\nc = [0.01]\n\n[certificate]\nenabled = true\nlevels = 1\n");
    let t = sweep(&cfg).unwrap();
    assert_eq!(t.rows[0].status, "certified", "{:?}", t.rows[0]);
    assert_eq!(t.rows[0].certificate.as_deref(), Some("ubar:c=0.01:c0=0"));
}

#[test]
fn invalid_rows_become_inconclusive() {
    let cfg = config("[axes]\np = [0.5]\n");
    let t = sweep(&cfg).unwrap();
    assert_eq!(t.rows[0].classification, Classification::Inconclusive);
    assert!(t.rows[0].note.starts_with("skipped"), "{}", t.rows[0].note);
}

#[test]
fn monotonicity_violations_are_flagged() {
    let cfg = config("[axes]\nc = [0.01, 0.02]\n");
    let mut t = sweep(&cfg).unwrap();
    t.rows[0].classification = Classification::Diverging;
    let v = monotonicity_violations(&t.rows);
    assert_eq!(v.len(), 1, "{v:?}");
}

#[test]
fn degenerate_brackets_are_rejected() {
    let cfg = config("");
    let fam = AmplitudeFamily::from_config(&cfg).unwrap();
    assert!(bracket_threshold(&fam, 1.0, 1.0, 3).is_err());
    assert!(bracket_threshold(&fam, 0.0, 1.0, 3).is_err());
    // Both ends converge: no bracket.
    assert!(bracket_threshold(&fam, 0.001, 0.002, 3).is_err());
}

#[test]
fn bracket_shrinks_geometrically() {
    let mut cfg = config("");
    cfg.grid = GridSpec { levels: 5, outer: 3, time_nodes: 6, ..small() };
    let fam = AmplitudeFamily::from_config(&cfg).unwrap();
    let b = bracket_threshold(&fam, 0.01, 100.0, 4).unwrap();
    assert_eq!(b.steps.len(), 6);
    assert!(b.c_exists < b.c_fails);
    assert!((b.ratio() - 10f64.powf(4.0 / 16.0)).abs() < 1e-9, "{b:?}");
}
