//! Ingestion of the FRED-style fixtures and the shipped synthetic panel.

use std::path::Path;

use diffuse_core::ingest::{aggregate_to_quarterly, match_md_qd_subset, parse_fred_csv, serialize_fred_csv, Frequency, MappingTable};
use diffuse_core::simulation::{synthetic_macro_panel, SyntheticMacroConfig};

fn read(rel: &str) -> Vec<u8> {
    std::fs::read(Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)).unwrap()
}

#[test]
fn monthly_fixture_parses_and_round_trips() {
    let md = parse_fred_csv(&read("tests/fixtures/fred_md_fixture.csv"), Frequency::Monthly).unwrap();
    assert_eq!(md.series().len(), 106);
    assert_eq!(md.dates().len(), 36);
    assert_eq!((md.dates()[0].to_string(), md.dates()[35].to_string()), ("1/1/1959".to_string(), "12/1/1961".to_string()));
    assert_eq!(md.get("HOUST").unwrap().tcode, 4);
    let again = parse_fred_csv(&serialize_fred_csv(&md).unwrap(), Frequency::Monthly).unwrap();
    assert_eq!(again, md);
}

#[test]
fn quarterly_fixture_parses_with_its_factor_row() {
    let qd = parse_fred_csv(&read("tests/fixtures/fred_qd_fixture.csv"), Frequency::Quarterly).unwrap();
    assert_eq!(qd.series().len(), 105);
    assert_eq!(qd.dates().len(), 12);
    assert!(qd.dates().iter().all(|d| d.month_index() % 3 == 2));
    assert_eq!(qd.get("HOUST").unwrap().tcode, 5);
}

#[test]
fn aggregated_monthly_fixture_matches_the_quarterly_subset() {
    let md = parse_fred_csv(&read("tests/fixtures/fred_md_fixture.csv"), Frequency::Monthly).unwrap();
    let qd = parse_fred_csv(&read("tests/fixtures/fred_qd_fixture.csv"), Frequency::Quarterly).unwrap();
    let quarterly = aggregate_to_quarterly(&md).unwrap();
    assert_eq!(quarterly.dates(), qd.dates());
    let rpi = md.get("RPI").unwrap();
    let mean = (0..3).map(|m| rpi.values[m].unwrap()).sum::<f64>() / 3.0;
    assert!((quarterly.get("RPI").unwrap().values[0].unwrap() - mean).abs() < 1e-12);

    let subset = match_md_qd_subset(&quarterly, &qd, &MappingTable::shipped()).unwrap();
    assert_eq!(subset.pairs.len(), 102);
    assert!(subset.missing_in_md.is_empty() && subset.missing_in_qd.is_empty());
    let applied = subset.apply(&quarterly).unwrap();
    assert_eq!(applied.series().len(), 102);
    assert!(applied.series().iter().zip(&subset.pairs).all(|(s, p)| s.tcode == p.tcode && s.group == Some(p.group)));
    let panel = applied.transform().unwrap();
    assert_eq!(panel.nonpositive_logs, 0);
}

#[test]
fn shipped_synthetic_panel_is_reproducible() {
    let shipped = read("data/synthetic_md.csv");
    let cfg = SyntheticMacroConfig::default();
    assert_eq!(serialize_fred_csv(&synthetic_macro_panel(&cfg).unwrap()).unwrap(), shipped);
    let ds = parse_fred_csv(&shipped, Frequency::Monthly).unwrap();
    assert_eq!((ds.series().len(), ds.dates().len()), (cfg.n_series, cfg.months));
    let panel = ds.transform().unwrap();
    assert!(panel.values.iter().all(|s| s.iter().skip(1).all(Option::is_some)));
}
