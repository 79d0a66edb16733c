//! Loader contract tests over real files: schema checks, quarantine
//! behavior, gap detection, and the write/load round trip.

mod common;

use std::path::PathBuf;

use proptest::prelude::*;
use tempfile::tempdir;

use factorlab::panel::{
    load_factors, load_fundamentals, load_returns, write_returns, CalendarMonth, Exchange,
    FirmYearRecord, LoadOptions, MonthWindow, MonthlyReturnRecord, PanelError,
};

fn write_file(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, body).expect("write fixture");
    path
}

const FUND_HEADER: &str = "firm_id,fiscal_year,sic,revenue,cogs,sga_expense,rd_expense,interest_expense,net_income,total_assets,total_assets_prior,book_equity,market_equity,market_equity_june,ltg,exchange";

fn fund_row(firm: &str, rd: &str, total_assets: &str) -> String {
    format!("{firm},2000,2834,100,40,30,{rd},1,5,{total_assets},90,50,80,85,0.1,NYSE")
}

#[test]
fn blank_rd_becomes_exactly_zero() {
    let dir = tempdir().unwrap();
    let path = write_file(
        &dir,
        "f.csv",
        &format!("{FUND_HEADER}\n{}\n", fund_row("A", "", "100")),
    );
    let loaded = load_fundamentals(&path, LoadOptions::default()).unwrap();
    assert_eq!(loaded.records.len(), 1);
    assert_eq!(loaded.records[0].rd_expense, 0.0);
    assert!(loaded.quarantined.is_empty());
}

#[test]
fn zero_data_rows_is_empty_input() {
    let dir = tempdir().unwrap();
    let path = write_file(&dir, "f.csv", &format!("{FUND_HEADER}\n"));
    assert!(matches!(
        load_fundamentals(&path, LoadOptions::default()),
        Err(PanelError::EmptyInput)
    ));
}

#[test]
fn negative_assets_row_is_quarantined_with_named_invariant() {
    let dir = tempdir().unwrap();
    let path = write_file(
        &dir,
        "f.csv",
        &format!(
            "{FUND_HEADER}\n{}\n{}\n",
            fund_row("A", "2", "-5"),
            fund_row("B", "2", "100")
        ),
    );
    let loaded = load_fundamentals(&path, LoadOptions::default()).unwrap();
    assert_eq!(loaded.records.len(), 1);
    assert_eq!(loaded.records[0].firm_id, "B");
    assert_eq!(loaded.quarantined.len(), 1);
    assert_eq!(loaded.quarantined[0].row, 1);
    assert!(
        loaded.quarantined[0].reason.contains("total_assets"),
        "diagnostic must name the violated invariant: {}",
        loaded.quarantined[0].reason
    );

    // Every accepted record re-satisfies the invariants.
    for rec in &loaded.records {
        rec.check_invariants().unwrap();
    }

    // Strict mode turns the quarantine into a hard error.
    let err = load_fundamentals(&path, LoadOptions { strict: true }).unwrap_err();
    assert!(matches!(err, PanelError::RowRejected { row: 1, .. }));
}

#[test]
fn missing_required_field_drops_row_with_diagnostic() {
    let dir = tempdir().unwrap();
    // Blank book_equity (required for MTB/ROE).
    let path = write_file(
        &dir,
        "f.csv",
        &format!("{FUND_HEADER}\nA,2000,2834,100,40,30,2,1,5,100,90,,80,85,0.1,NYSE\n"),
    );
    let loaded = load_fundamentals(&path, LoadOptions::default()).unwrap();
    assert!(loaded.records.is_empty());
    assert_eq!(loaded.quarantined.len(), 1);
    assert!(loaded.quarantined[0].reason.contains("book_equity"));
}

#[test]
fn non_finite_numbers_are_quarantined() {
    let dir = tempdir().unwrap();
    let path = write_file(
        &dir,
        "f.csv",
        &format!(
            "{FUND_HEADER}\nA,2000,2834,100,40,30,2,1,5,100,90,50,nan,85,0.1,NYSE\nB,2000,2834,100,40,30,2,1,inf,100,90,50,80,85,0.1,NYSE\n"
        ),
    );
    let loaded = load_fundamentals(&path, LoadOptions::default()).unwrap();
    assert!(loaded.records.is_empty());
    assert_eq!(loaded.quarantined.len(), 2);
    assert!(loaded.quarantined[0].reason.contains("non-finite"));
}

#[test]
fn missing_column_names_the_column() {
    let dir = tempdir().unwrap();
    let header_without_sic = FUND_HEADER.replace("sic,", "");
    let path = write_file(&dir, "f.csv", &format!("{header_without_sic}\n"));
    match load_fundamentals(&path, LoadOptions::default()) {
        Err(PanelError::SchemaMismatch { column }) => assert_eq!(column, "sic"),
        other => panic!("expected SchemaMismatch, got {other:?}"),
    }
}

#[test]
fn duplicate_firm_month_is_duplicate_key() {
    let dir = tempdir().unwrap();
    let path = write_file(
        &dir,
        "r.csv",
        "firm_id,year,month,total_return\nA,1995,3,0.01\nA,1995,3,0.02\n",
    );
    match load_returns(&path, LoadOptions::default()) {
        Err(PanelError::DuplicateKey { key }) => {
            assert!(key.contains('A') && key.contains("1995-03"), "key: {key}")
        }
        other => panic!("expected DuplicateKey, got {other:?}"),
    }
}

#[test]
fn return_below_minus_one_is_rejected() {
    let dir = tempdir().unwrap();
    let path = write_file(
        &dir,
        "r.csv",
        "firm_id,year,month,total_return\nA,1995,3,-1.5\nB,1995,3,0.04\n",
    );
    let loaded = load_returns(&path, LoadOptions::default()).unwrap();
    assert_eq!(loaded.records.len(), 1);
    assert_eq!(loaded.quarantined.len(), 1);
    assert!(loaded.quarantined[0].reason.contains("total_return"));
}

#[test]
fn three_row_file_round_trips_exactly() {
    let dir = tempdir().unwrap();
    let records = vec![
        MonthlyReturnRecord {
            firm_id: "A".into(),
            month: "1995-01".parse().unwrap(),
            total_return: 0.015,
        },
        MonthlyReturnRecord {
            firm_id: "A".into(),
            month: "1995-02".parse().unwrap(),
            total_return: -0.25,
        },
        MonthlyReturnRecord {
            firm_id: "B".into(),
            month: "1995-01".parse().unwrap(),
            total_return: 0.0,
        },
    ];
    let mut buffer = Vec::new();
    write_returns(&mut buffer, &records).unwrap();
    let path = write_file(&dir, "r.csv", std::str::from_utf8(&buffer).unwrap());
    let loaded = load_returns(&path, LoadOptions::default()).unwrap();
    assert_eq!(loaded.records, records);
}

fn factors_file_body(window: MonthWindow, skip: Option<CalendarMonth>) -> String {
    let mut body = String::from("year,month,mktrf,smb,hml,rmw,cma,umd,rf\n");
    for month in window.iter() {
        if Some(month) == skip {
            continue;
        }
        body.push_str(&format!(
            "{},{},0.01,0.002,0.003,0.001,0.0,0.004,0.0003\n",
            month.year(),
            month.month()
        ));
    }
    body
}

#[test]
fn paper_windows_yield_354_and_360_observations() {
    let dir = tempdir().unwrap();
    let full: MonthWindow = "1963-07..2022-12".parse().unwrap();
    let path = write_file(&dir, "x.csv", &factors_file_body(full, None));

    let late = load_factors(&path, "1993-01..2022-12".parse().unwrap()).unwrap();
    assert_eq!(late.len(), 360);
    let early = load_factors(&path, "1963-07..1992-12".parse().unwrap()).unwrap();
    assert_eq!(early.len(), 354);
    assert!(early.windows(2).all(|w| w[0].month < w[1].month));
}

#[test]
fn missing_month_is_gap_in_series() {
    let dir = tempdir().unwrap();
    let window: MonthWindow = "2001-01..2001-12".parse().unwrap();
    let gap: CalendarMonth = "2001-09".parse().unwrap();
    let path = write_file(&dir, "x.csv", &factors_file_body(window, Some(gap)));
    match load_factors(&path, window) {
        Err(PanelError::GapInSeries { month }) => assert_eq!(month, gap),
        other => panic!("expected GapInSeries, got {other:?}"),
    }
}

#[test]
fn window_before_1963_07_is_unsupported() {
    let dir = tempdir().unwrap();
    let window: MonthWindow = "1962-01..1963-12".parse().unwrap();
    let path = write_file(&dir, "x.csv", &factors_file_body(window, None));
    assert!(matches!(
        load_factors(&path, window),
        Err(PanelError::UnsupportedWindow { .. })
    ));
}

#[test]
fn unreadable_file_is_file_unreadable() {
    let missing = PathBuf::from("/nonexistent/fundamentals.csv");
    assert!(matches!(
        load_fundamentals(&missing, LoadOptions::default()),
        Err(PanelError::FileUnreadable { .. })
    ));
}

// --- round-trip property -----------------------------------------------------

fn arb_fundamental() -> impl Strategy<Value = FirmYearRecord> {
    (
        "[A-Z]{1,6}",
        1963i32..2023,
        prop::sample::select(vec!["28", "283", "3571", "48", "2911", "5045"]),
        proptest::collection::vec(-1.0e6f64..1.0e6, 9),
        0.0f64..1.0e6,
        (1.0e-3f64..1.0e6, 1.0e-3f64..1.0e6),
        prop::option::of(-0.5f64..2.0),
        prop::sample::select(vec![Exchange::Nyse, Exchange::Amex, Exchange::Nasdaq]),
    )
        .prop_map(
            |(firm_id, fiscal_year, sic, vals, rd, (ta, tap), ltg, exchange)| FirmYearRecord {
                firm_id,
                fiscal_year,
                sic: sic.to_string(),
                revenue: vals[0],
                cogs: vals[1],
                sga_expense: vals[2],
                rd_expense: rd,
                interest_expense: vals[3],
                net_income: vals[4],
                total_assets: ta,
                total_assets_prior: tap,
                book_equity: vals[5],
                market_equity: vals[6],
                market_equity_june: vals[7],
                ltg,
                exchange,
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // serialize(load(x)) == canonical(x): writing accepted records and
    // re-loading them is the identity, and a second write is byte-stable.
    #[test]
    fn fundamentals_round_trip(records in proptest::collection::vec(arb_fundamental(), 1..20)) {
        // Deduplicate (firm, year) keys the way the loader would.
        let mut seen = std::collections::BTreeSet::new();
        let records: Vec<FirmYearRecord> = records
            .into_iter()
            .filter(|r| seen.insert((r.firm_id.clone(), r.fiscal_year)))
            .collect();

        let mut first = Vec::new();
        factorlab::panel::write_fundamentals(&mut first, &records).unwrap();
        let dir = tempdir().unwrap();
        let path = dir.path().join("f.csv");
        std::fs::write(&path, &first).unwrap();
        let loaded = load_fundamentals(&path, LoadOptions::default()).unwrap();
        prop_assert!(loaded.quarantined.is_empty());
        prop_assert_eq!(&loaded.records, &records);

        let mut second = Vec::new();
        factorlab::panel::write_fundamentals(&mut second, &loaded.records).unwrap();
        prop_assert_eq!(first, second);
    }
}
