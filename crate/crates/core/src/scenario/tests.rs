use super::*;

#[test]
fn flags_override_the_config_file() {
    let file = ScenarioConfig::from_json(r#"{"n": 128, "theta": 0.5, "formats": ["csv"]}"#).unwrap();
    let flags = ScenarioConfig { n: Some(64), ..ScenarioConfig::default() };
    let merged = file.merged(flags);
    assert_eq!(merged.n, Some(64));
    assert_eq!(merged.theta, Some(0.5));
    assert_eq!(merged.formats(), vec![Format::Csv]);
}

#[test]
fn unknown_config_fields_are_rejected() {
    assert!(ScenarioConfig::from_json(r#"{"resolution": 12}"#).is_err());
    assert!(ScenarioConfig::from_json(r#"{"model": {"kind": "hyperbolic"}}"#).is_err());
}

#[test]
fn formats_parse() {
    assert_eq!("svg".parse::<Format>().unwrap(), Format::Svg);
    assert!("png".parse::<Format>().is_err());
    assert_eq!(ScenarioConfig::default().formats(), vec![Format::Json]);
}

#[test]
fn explicit_out_dir_wins() {
    let config = ScenarioConfig { out: Some("here".into()), ..ScenarioConfig::default() };
    assert_eq!(config.out_dir(), PathBuf::from("here"));
}

#[test]
fn catalog_lists_every_runner() {
    let names = scenario_names();
    assert_eq!(names.len(), 10);
    assert!(names.contains(&"football-descent"));
    assert!(matches!(run_scenario("nope", &ScenarioConfig::default()), Err(Error::NotApplicable(_))));
}

#[test]
fn floats_round_to_twelve_digits() {
    let mut v = serde_json::json!({"a": [0.1 + 0.2, 1.0 / 3.0], "b": 7});
    round_floats(&mut v);
    assert_eq!(v["a"][0].as_f64().unwrap(), 0.3);
    assert_eq!(v["a"][1].as_f64().unwrap(), 0.333333333333);
    assert_eq!(v["b"], 7);
}

#[test]
fn observed_order_of_a_power_law() {
    let ns = [16, 32, 64, 128];
    let rs: Vec<f64> = ns.iter().map(|&n| 3.0 / (n as f64).powi(2)).collect();
    assert!((observed_order(&ns, &rs) - 2.0).abs() < 1e-12);
}

#[test]
fn checks_report_their_bounds() {
    assert!(Check::below("x", 1e-4, 1e-3).passed);
    assert!(!Check::within("y", 2.5, 1.7, 2.3).passed);
    assert!(Check::equal("z", &vec![1, 1], &vec![1, 1]).passed);
}

#[test]
fn charts_are_standalone_svg() {
    let chart = svg::Chart::new("a < b", "N", "r")
        .log_log()
        .with(svg::Series::new("s", vec![(16.0, 1e-2), (32.0, 2.5e-3), (64.0, 0.0)]))
        .render();
    assert!(chart.starts_with("<svg"));
    assert!(chart.trim_end().ends_with("</svg>"));
    assert!(chart.contains("a &lt; b"));
    // the zero residual has no logarithm and is dropped
    assert_eq!(chart.matches("<circle").count(), 2);
}

#[test]
fn elliptic_line_report_is_deterministic() {
    let config = ScenarioConfig { n: Some(32), ..ScenarioConfig::default() };
    let a = run_scenario("elliptic-line", &config).unwrap();
    let b = run_scenario("elliptic-line", &config).unwrap();
    assert!(a.passed, "{:?}", a.failures());
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
}

#[test]
fn convergence_rejects_unknown_targets() {
    let config = ScenarioConfig { target: Some("football-descent".into()), ..ScenarioConfig::default() };
    assert!(run_scenario("convergence", &config).is_err());
}

#[test]
fn run_and_write_emits_requested_formats() {
    let dir = tempfile::tempdir().unwrap();
    let config = ScenarioConfig {
        out: Some(dir.path().to_path_buf()),
        formats: Some(vec![Format::Json, Format::Csv, Format::Svg]),
        ladder: Some(vec![32, 64]),
        ..ScenarioConfig::default()
    };
    let (report, paths) = run_and_write("convergence", &config).unwrap();
    assert!(report.passed);
    let names: Vec<String> = paths.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert_eq!(names, ["convergence.json", "convergence-residual-ladder.csv", "convergence-residual-ladder.svg"]);
    let csv = std::fs::read_to_string(dir.path().join("convergence-residual-ladder.csv")).unwrap();
    assert!(csv.starts_with("n,connection\n32,"));
}
