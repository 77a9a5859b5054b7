use honeycomb_dirac_cli::config::NlsScheme;
use honeycomb_dirac_cli::{parse_config, parse_config_str, CliError, SimConfig};
use proptest::prelude::*;

#[test]
fn empty_file_gives_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("empty.json");
    std::fs::write(&p, "").unwrap();
    assert_eq!(parse_config(&p).unwrap(), SimConfig::default());
    assert_eq!(parse_config_str("{}").unwrap(), SimConfig::default());
}

#[test]
fn defaults_match_the_documented_study() {
    let c = SimConfig::default();
    assert_eq!(c.epsilons, vec![1.0 / 6.0, 1.0 / 12.0, 1.0 / 24.0]);
    assert_eq!(c.kappas, vec![1.0, -1.0]);
    assert_eq!((c.t_final, c.norm_s, c.snapshots, c.cutoff), (0.5, 2, 10, 12));
    assert_eq!(c.c_s, 1.0);
    assert_eq!(c.nls.scheme, NlsScheme::TwoScale);
    assert_eq!(c.acceptance.order0_slope, [0.7, 1.3]);
    assert_eq!(c.acceptance.order1_min_slope, 1.6);
}

#[test]
fn round_trip_is_identity() {
    let mut c = SimConfig::default();
    c.seed = Some(7);
    c.kappa = -1.0;
    c.nls.scheme = NlsScheme::FineGrid;
    c.potential = honeycomb_dirac::potential::PotentialSpec::Explicit {
        coefficients: vec![(1, 0, 0.5), (-1, 0, 0.5)],
    };
    let text = serde_json::to_string(&c).unwrap();
    assert_eq!(parse_config_str(&text).unwrap(), c);
    assert_eq!(parse_config_str(&text).unwrap().hash(), c.hash());
}

fn field_of(e: CliError) -> &'static str {
    match e {
        CliError::Config { field, .. } => field,
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn bad_ladders_name_the_field() {
    let e = parse_config_str(r#"{"epsilons": [0.1, 0.2]}"#).unwrap_err();
    assert_eq!(field_of(e), "epsilons");
    let e = parse_config_str(r#"{"epsilons": []}"#).unwrap_err();
    assert_eq!(field_of(e), "epsilons");
    let e = parse_config_str(r#"{"hartree": {"epsilons": [0.5, 0.5]}}"#).unwrap_err();
    assert_eq!(field_of(e), "hartree.epsilons");
    let e = parse_config_str(r#"{"order": 2}"#).unwrap_err();
    assert_eq!(field_of(e), "order");
    let e = parse_config_str(r#"{"nls": {"cells": [63, 100]}}"#).unwrap_err();
    assert_eq!(field_of(e), "nls.cells");
}

#[test]
fn unknown_keys_are_rejected() {
    assert!(matches!(parse_config_str(r#"{"epsilon_ladder": [0.1]}"#), Err(CliError::Parse(_))));
    assert!(matches!(parse_config_str(r#"{"nls": {"cels": [3, 3]}}"#), Err(CliError::Parse(_))));
}

#[test]
fn hash_depends_on_content() {
    let a = SimConfig::default();
    let mut b = a.clone();
    b.t_final = 0.25;
    assert_ne!(a.hash(), b.hash());
    assert_eq!(a.hash().len(), 64);
}

proptest! {
    #[test]
    fn random_valid_configs_round_trip(
        t in 0.0f64..2.0,
        s in 0u32..4,
        snaps in 1usize..20,
        e0 in 0.05f64..1.0,
        r in 0.1f64..0.9,
        seed in proptest::option::of(any::<u64>()),
    ) {
        let mut c = SimConfig::default();
        c.t_final = t;
        c.norm_s = s;
        c.snapshots = snaps;
        c.epsilons = vec![e0, e0 * r, e0 * r * r];
        c.seed = seed;
        let text = serde_json::to_string_pretty(&c).unwrap();
        prop_assert_eq!(parse_config_str(&text).unwrap(), c);
    }
}
