use noma_fbc::config::{format_power, parse_dbm, parse_power, ConfigError, RawConfig};
use proptest::prelude::*;

#[test]
fn power_units() {
    assert!((parse_power("40dBm").unwrap() - 10.0).abs() < 1e-12);
    assert!((parse_power(" 35 DBM ").unwrap() - 3.1622776601683795).abs() < 1e-12);
    assert_eq!(parse_power("250mW").unwrap(), 0.25);
    assert_eq!(parse_power("10 W").unwrap(), 10.0);
    assert_eq!(parse_power("-inf dBm").unwrap(), 0.0);
    assert_eq!(parse_dbm("32.5dBm").unwrap(), 32.5);
    assert!((parse_dbm("1W").unwrap() - 30.0).abs() < 1e-12);
}

#[test]
fn malformed_powers() {
    for s in ["40", "", "dBm", "NaN W", "-1W", "ten W", "10 kW", "10Wm"] {
        assert!(matches!(parse_power(s), Err(ConfigError::Power { .. })), "{s:?}");
    }
}

#[test]
fn resolved_config_survives_a_round_trip() {
    let raw = RawConfig::from_toml_str(
        "[scenario]\nn1 = 300\nh1 = 2.5\nh2 = 7.0\np_max = \"33dBm\"\n\
         [experiment]\naxis = \"p-max-dbm\"\nvalues = [\"30dBm\", \"32.5dBm\"]\nschemes = [\"hybrid\"]\n\
         [channel]\nnoise_power = \"1e-12W\"\nfading = \"none\"\n",
    )
    .unwrap();
    let run = raw.resolve().unwrap();
    let back = run.to_raw();
    assert_eq!(back.resolve().unwrap(), run);
    let text = serde_json::to_string(&back).unwrap();
    assert_eq!(RawConfig::from_json_str(&text).unwrap().resolve().unwrap(), run);
    assert_eq!(run.experiment.axis.values, vec![30.0, 32.5]);
}

#[test]
fn json_result_envelope_accepted() {
    let doc = r#"{"command": "solve-noma", "config": {"scenario": {"h1": 1.0, "h2": 3.0}}, "status": "feasible"}"#;
    let raw = RawConfig::from_str_auto(doc).unwrap();
    assert_eq!(raw.scenario.h2, Some(3.0));
    assert!(RawConfig::from_str_auto("[scenario]\nh1 = 1.0\n").is_ok());
    assert!(matches!(RawConfig::from_json_str("{\"scenario\": {\"x\": 1}}"), Err(ConfigError::Syntax(_))));
}

#[test]
fn overlay_replaces_only_set_fields() {
    let mut base = RawConfig::from_toml_str("[scenario]\nh1 = 1.0\nh2 = 2.0\n").unwrap();
    let top = RawConfig::from_toml_str("[scenario]\nh2 = 5.0\n").unwrap();
    base.overlay(&top);
    assert_eq!((base.scenario.h1, base.scenario.h2), (Some(1.0), Some(5.0)));
}

#[test]
fn invalid_values_rejected_on_resolve() {
    for text in [
        "[scenario]\neps1 = 0.7\n",
        "[scenario]\nd1 = 50\n",
        "[hybrid]\ngss_tol = 0.0\n",
        "[experiment]\nrealizations = 0\n",
        "[experiment]\naxis = \"p-max-dbm\"\nvalues = [30]\n",
        "[approx]\nerror_probs = [0.0]\n",
    ] {
        let raw = RawConfig::from_toml_str(text).unwrap();
        assert!(raw.resolve().is_err(), "{text}");
    }
}

proptest! {
    #[test]
    fn watts_round_trip(w in 0.0f64..1e6) {
        prop_assert_eq!(parse_power(&format_power(w)).unwrap(), w);
    }

    #[test]
    fn dbm_text_round_trip(d in -100.0f64..80.0) {
        prop_assert_eq!(parse_dbm(&format!("{d}dBm")).unwrap(), d);
    }

    #[test]
    fn parser_total_on_arbitrary_text(s in ".{0,40}") {
        let _ = parse_power(&s);
        let _ = parse_dbm(&s);
        let _ = RawConfig::from_str_auto(&s);
    }
}

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.display().to_string(), std::fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty());
    out
}

#[test]
fn fuzz_seeds_are_valid_inputs() {
    for (name, text) in seeds("parse_power") {
        assert!(parse_power(&text).is_ok(), "{name}");
    }
    for (name, text) in seeds("config_toml") {
        RawConfig::from_toml_str(&text).unwrap().resolve().unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    for (name, text) in seeds("config_json") {
        RawConfig::from_json_str(&text).unwrap().resolve().unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}
