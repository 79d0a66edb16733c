//! The nine study-table pipelines, each a pure function of a window context
//! producing a [`TableArtifact`].

use std::collections::BTreeMap;

use crate::factors::{
    independent_double_sort, portfolio_returns, quantile_sort, FactorSeries, PortfolioSeries,
    SortVariable, Weighting,
};
use crate::fundamentals::{descriptive_table, Grouping};
use crate::ortho::decompose_rmw;
use crate::panel::CalendarMonth;
use crate::stats::{normal_two_sided, one_sample_t, pearson, two_sample_test, StatsError};

use super::artifact::{Cell, PortfolioDump, RegressionDump, TableArtifact, TablePanel, TableRow};
use super::config::{StudyConfig, TableId};
use super::context::WindowContext;
use super::StudyError;

/// True when a table needs the early study window at all; T7-T9 run over
/// the late window only.
pub fn needs_early_window(id: TableId) -> bool {
    id <= TableId::T6
}

/// Runs one table over the prepared contexts. `early` may be omitted only
/// for tables that never touch the early window.
pub fn run_table(
    id: TableId,
    config: &StudyConfig,
    early: Option<&WindowContext>,
    late: &WindowContext,
) -> Result<TableArtifact, StudyError> {
    let early = || {
        early.ok_or_else(|| {
            StudyError::Config(format!("table {id} needs the early window context"))
        })
    };
    match id {
        TableId::T1 => table_1(early()?, late),
        TableId::T2 => table_2(early()?, late),
        TableId::T3 => table_3(config, early()?, late),
        TableId::T4 => table_4(config, early()?, late, false),
        TableId::T5 => table_4(config, early()?, late, true),
        TableId::T6 => table_6(config, early()?, late),
        TableId::T7 => table_7(config, late),
        TableId::T8 => table_8(config, late),
        TableId::T9 => table_9(config, late),
    }
}

fn quintile_labels(variable: SortVariable) -> [String; 5] {
    let name = variable.name();
    [
        format!("Low {name}"),
        "2".into(),
        "3".into(),
        "4".into(),
        format!("High {name}"),
    ]
}

/// Builds the five quantile portfolio series of `variable` over the context
/// window, rebalanced each calendar year.
fn quintile_series(
    ctx: &WindowContext,
    variable: SortVariable,
    weighting: Weighting,
) -> Result<Vec<PortfolioSeries>, StudyError> {
    const BINS: usize = 5;
    let mut per_bin: Vec<BTreeMap<i32, Vec<String>>> = vec![BTreeMap::new(); BINS];
    for year in ctx.window.years() {
        let sort = quantile_sort(&ctx.derived.records, variable, BINS, year)?;
        for (i, members) in sort.bins.into_iter().enumerate() {
            per_bin[i].insert(year, members);
        }
    }
    let labels = quintile_labels(variable);
    per_bin
        .into_iter()
        .zip(labels)
        .map(|(memberships, label)| {
            portfolio_returns(label, &memberships, &ctx.panel, weighting).map_err(StudyError::from)
        })
        .collect()
}

fn membership_rows(series: &PortfolioSeries) -> Vec<(i32, String, String)> {
    series
        .memberships
        .iter()
        .flat_map(|(year, firms)| {
            firms
                .iter()
                .map(move |f| (*year, series.label.clone(), f.clone()))
        })
        .collect()
}

fn portfolio_dump(panel: &str, series: &PortfolioSeries) -> PortfolioDump {
    PortfolioDump {
        panel: panel.to_string(),
        row: series.label.clone(),
        months: series.months.clone(),
        returns: series.returns.clone(),
        excess_returns: series.excess_returns.clone(),
    }
}

/// Regresses a portfolio's excess returns on the given factor series over
/// the months passing `keep`.
fn regress(
    series: &PortfolioSeries,
    regressors: &[&FactorSeries],
    keep: impl Fn(&CalendarMonth) -> bool,
) -> Result<(crate::stats::RegressionResult, Vec<CalendarMonth>), StatsError> {
    let mut months = Vec::new();
    let mut y = Vec::new();
    for (i, m) in series.months.iter().enumerate() {
        if keep(m) {
            months.push(*m);
            y.push(series.excess_returns[i]);
        }
    }
    let columns: Vec<Vec<f64>> = regressors.iter().map(|f| f.subset(&months)).collect();
    let refs: Vec<&[f64]> = columns.iter().map(Vec::as_slice).collect();
    let fit = crate::stats::ols(&y, &refs, true)?;
    Ok((fit, months))
}

fn regression_terms(regressors: &[&FactorSeries]) -> Vec<String> {
    let mut terms = vec!["intercept".to_string()];
    terms.extend(regressors.iter().map(|f| f.name.clone()));
    terms
}

/// One artifact row per regression: intercept, slopes, R^2.
fn regression_row(label: &str, fit: &crate::stats::RegressionResult) -> TableRow {
    let mut cells: Vec<Cell> = (0..fit.coefficients.len())
        .map(|j| Cell::WithT {
            value: fit.coefficients[j],
            t: fit.t_stats[j],
            p: fit.p_values[j],
        })
        .collect();
    cells.push(Cell::Value(fit.r_squared));
    TableRow {
        label: label.to_string(),
        cells,
    }
}

fn regression_columns(regressors: &[&FactorSeries]) -> Vec<String> {
    let mut cols = vec!["intercept".to_string()];
    cols.extend(regressors.iter().map(|f| f.name.clone()));
    cols.push("R2".into());
    cols
}

/// A regression-grid panel over quintile portfolios, with dumps attached.
fn quintile_regression_panel(
    artifact: &mut TableArtifact,
    panel_label: &str,
    ctx: &WindowContext,
    variable: SortVariable,
    weighting: Weighting,
    intangible: &FactorSeries,
) -> Result<(), StudyError> {
    let regressors = ctx.model_regressors(intangible);
    let series = quintile_series(ctx, variable, weighting)?;
    let mut rows = Vec::new();
    for s in &series {
        let (fit, months) = regress(s, &regressors, |_| true)?;
        rows.push(regression_row(&s.label, &fit));
        artifact.regressions.push(RegressionDump {
            panel: panel_label.to_string(),
            row: s.label.clone(),
            terms: regression_terms(&regressors),
            months,
            result: fit,
        });
        artifact.portfolios.push(portfolio_dump(panel_label, s));
        artifact.memberships.extend(membership_rows(s));
    }
    artifact.panels.push(TablePanel {
        label: panel_label.to_string(),
        columns: regression_columns(&regressors),
        rows,
    });
    Ok(())
}

// --- T1: descriptive statistics -------------------------------------------

fn table_1(early: &WindowContext, late: &WindowContext) -> Result<TableArtifact, StudyError> {
    let mut artifact = TableArtifact::new(
        "T1",
        "Descriptive statistics of MTB, ROE, RD, SGA, INTAN by period and tech group",
    );
    let early_years = early.window.years();
    let late_years = late.window.years();
    for grouping in [Grouping::All, Grouping::Tech, Grouping::NonTech] {
        let rows = descriptive_table(
            &late.derived.records,
            grouping,
            early_years.clone(),
            late_years.clone(),
        )?;
        let table_rows = rows
            .iter()
            .map(|r| TableRow {
                label: r.variable.clone(),
                cells: vec![
                    Cell::Value(r.early.mean),
                    Cell::Value(r.early.median),
                    Cell::Count(r.early.n),
                    Cell::Value(r.late.mean),
                    Cell::Value(r.late.median),
                    Cell::Count(r.late.n),
                    Cell::Starred {
                        value: r.t_value,
                        p: normal_two_sided(r.t_value),
                    },
                    Cell::Starred {
                        value: r.z_value,
                        p: normal_two_sided(r.z_value),
                    },
                ],
            })
            .collect();
        artifact.panels.push(TablePanel {
            label: format!("{grouping} firms"),
            columns: vec![
                "mean_early".into(),
                "median_early".into(),
                "n_early".into(),
                "mean_late".into(),
                "median_late".into(),
                "n_late".into(),
                "t_value".into(),
                "z_value".into(),
            ],
            rows: table_rows,
        });
    }
    Ok(artifact)
}

// --- T2: factor correlations ----------------------------------------------

const CORRELATION_ORDER: [&str; 6] = ["mktrf", "smb", "hml", "rmw", "cma", "umd"];

fn table_2(early: &WindowContext, late: &WindowContext) -> Result<TableArtifact, StudyError> {
    let mut artifact = TableArtifact::new(
        "T2",
        "Pearson correlations among benchmark factors and INTANFT",
    );
    for ctx in [early, late] {
        let mut names: Vec<String> = CORRELATION_ORDER
            .iter()
            .map(|n| n.to_ascii_uppercase())
            .collect();
        names.push("INTANFT".into());
        let mut columns: Vec<&[f64]> = CORRELATION_ORDER
            .iter()
            .map(|n| ctx.factor(n).values.as_slice())
            .collect();
        columns.push(ctx.intanft.series.values.as_slice());

        let mut rows = Vec::new();
        for i in 0..names.len() {
            let mut cells = Vec::new();
            for j in 0..names.len() {
                cells.push(if j > i {
                    Cell::Empty
                } else if j == i {
                    Cell::Value(1.0)
                } else {
                    let (r, p) = pearson(columns[i], columns[j])?;
                    Cell::Starred { value: r, p }
                });
            }
            rows.push(TableRow {
                label: names[i].clone(),
                cells,
            });
        }
        artifact.panels.push(TablePanel {
            label: format!("Pearson correlations {}", ctx.window),
            columns: names,
            rows,
        });
    }
    Ok(artifact)
}

// --- T3: univariate quintile excess returns --------------------------------

fn table_3(
    config: &StudyConfig,
    early: &WindowContext,
    late: &WindowContext,
) -> Result<TableArtifact, StudyError> {
    let mut artifact = TableArtifact::new(
        "T3",
        "Monthly excess returns of quintile portfolios formed on MTB and INTAN",
    );
    for variable in [SortVariable::Mtb, SortVariable::Intan] {
        for ctx in [early, late] {
            let panel_label = format!("{} quintiles {}", variable.name(), ctx.window);
            let series = quintile_series(ctx, variable, config.weighting)?;
            let mut rows = Vec::new();
            for s in &series {
                let (t, p) = one_sample_t(&s.excess_returns)?;
                rows.push(TableRow {
                    label: s.label.clone(),
                    cells: vec![
                        Cell::WithT {
                            value: crate::stats::mean(&s.excess_returns),
                            t,
                            p,
                        },
                        Cell::Value(crate::stats::median(&s.excess_returns)),
                    ],
                });
                artifact.portfolios.push(portfolio_dump(&panel_label, s));
                artifact.memberships.extend(membership_rows(s));
            }
            let test = two_sample_test(&series[0].excess_returns, &series[4].excess_returns)?;
            rows.push(TableRow {
                label: "Low vs High".into(),
                cells: vec![
                    Cell::Starred {
                        value: test.t_value,
                        p: normal_two_sided(test.t_value),
                    },
                    Cell::Starred {
                        value: test.z_value,
                        p: normal_two_sided(test.z_value),
                    },
                ],
            });
            artifact.panels.push(TablePanel {
                label: panel_label,
                columns: vec!["mean".into(), "median".into()],
                rows,
            });
        }
    }
    Ok(artifact)
}

// --- T4 / T5: MTB quintile regressions -------------------------------------

fn table_4(
    config: &StudyConfig,
    early: &WindowContext,
    late: &WindowContext,
    orthogonalized: bool,
) -> Result<TableArtifact, StudyError> {
    let (id, title) = if orthogonalized {
        (
            "T5",
            "MTB quintile regressions on the orthogonalized intangible factor",
        )
    } else {
        ("T4", "MTB quintile regressions on the raw intangible factor")
    };
    let mut artifact = TableArtifact::new(id, title);
    for (tag, ctx) in [("Panel A", early), ("Panel B", late)] {
        let intangible = if orthogonalized {
            &ctx.intanft_org
        } else {
            &ctx.intanft.series
        };
        quintile_regression_panel(
            &mut artifact,
            &format!("{tag}: {}", ctx.window),
            ctx,
            SortVariable::Mtb,
            config.weighting,
            intangible,
        )?;
    }
    Ok(artifact)
}

// --- T6: INTAN- and OP-sorted quintile regressions --------------------------

fn table_6(
    config: &StudyConfig,
    early: &WindowContext,
    late: &WindowContext,
) -> Result<TableArtifact, StudyError> {
    let mut artifact = TableArtifact::new(
        "T6",
        "INTAN- and OP-sorted quintile regressions on the orthogonalized intangible factor",
    );
    for (tag, variable, ctx) in [
        ("A1", SortVariable::Intan, early),
        ("A2", SortVariable::Intan, late),
        ("B1", SortVariable::Op, early),
        ("B2", SortVariable::Op, late),
    ] {
        quintile_regression_panel(
            &mut artifact,
            &format!("{tag}: {} quintiles {}", variable.name(), ctx.window),
            ctx,
            variable,
            config.weighting,
            &ctx.intanft_org,
        )?;
    }
    Ok(artifact)
}

// --- T7: 20-cell double sorts ------------------------------------------------

fn table_7(config: &StudyConfig, late: &WindowContext) -> Result<TableArtifact, StudyError> {
    let mut artifact = TableArtifact::new(
        "T7",
        "Double-sorted 5x4 portfolio regressions on the orthogonalized intangible factor",
    );
    let regressors = late.model_regressors(&late.intanft_org);
    let terms = regression_terms(&regressors);

    for (tag, var_a) in [("Panel A", SortVariable::Mtb), ("Panel B", SortVariable::Op)] {
        // Collect per-cell memberships across formation years.
        let mut cell_memberships: Vec<Vec<BTreeMap<i32, Vec<String>>>> =
            vec![vec![BTreeMap::new(); 4]; 5];
        for year in late.window.years() {
            let ds = independent_double_sort(
                &late.derived.records,
                var_a,
                5,
                SortVariable::Intan,
                4,
                year,
            )?;
            for (row, cells) in ds.cells.iter().enumerate() {
                for (col, members) in cells.iter().enumerate() {
                    if !members.is_empty() {
                        cell_memberships[row][col].insert(year, members.clone());
                    }
                }
            }
        }

        // One regression per non-empty cell; track which statistic goes
        // where in the 5x4 grids.
        let stat_names = ["alpha", "b3 (HML)", "b4 (RMW)", "b7 (intangible)"];
        let stat_index = |name: &str| match name {
            "alpha" => 0usize,
            "b3 (HML)" => 3,
            "b4 (RMW)" => 4,
            _ => 7,
        };
        let mut grids: Vec<Vec<Vec<Cell>>> = vec![vec![vec![Cell::Empty; 4]; 5]; stat_names.len()];
        for i in 0..5 {
            for j in 0..4 {
                let label = format!("{}{}/INTAN{}", var_a.name(), i + 1, j + 1);
                if cell_memberships[i][j].is_empty() {
                    for grid in grids.iter_mut() {
                        grid[i][j] = Cell::Text("empty".into());
                    }
                    continue;
                }
                let series = portfolio_returns(
                    label.clone(),
                    &cell_memberships[i][j],
                    &late.panel,
                    config.weighting,
                )?;
                let panel_label = format!("{tag}: {}x INTAN cells", var_a.name());
                match regress(&series, &regressors, |_| true) {
                    Ok((fit, months)) => {
                        for (s, name) in stat_names.iter().enumerate() {
                            let k = stat_index(name);
                            grids[s][i][j] = Cell::WithT {
                                value: fit.coefficients[k],
                                t: fit.t_stats[k],
                                p: fit.p_values[k],
                            };
                        }
                        artifact.regressions.push(RegressionDump {
                            panel: panel_label.clone(),
                            row: label.clone(),
                            terms: terms.clone(),
                            months,
                            result: fit,
                        });
                    }
                    Err(StatsError::TooFewObservations { n, .. }) => {
                        for grid in grids.iter_mut() {
                            grid[i][j] = Cell::Text(format!("thin (n={n})"));
                        }
                    }
                    Err(e) => return Err(e.into()),
                }
                artifact.portfolios.push(portfolio_dump(&panel_label, &series));
                artifact.memberships.extend(membership_rows(&series));
            }
        }

        let columns: Vec<String> = (1..=4).map(|j| format!("INTAN{j}")).collect();
        for (s, name) in stat_names.iter().enumerate() {
            artifact.panels.push(TablePanel {
                label: format!("{tag}: {name}"),
                columns: columns.clone(),
                rows: (0..5)
                    .map(|i| TableRow {
                        label: format!("{}{}", var_a.name(), i + 1),
                        cells: grids[s][i].clone(),
                    })
                    .collect(),
            });
        }
    }
    Ok(artifact)
}

// --- T8: RMW decomposition ----------------------------------------------------

fn table_8(config: &StudyConfig, late: &WindowContext) -> Result<TableArtifact, StudyError> {
    let mut artifact = TableArtifact::new(
        "T8",
        "OP quintile regressions on the RMW decomposition",
    );
    let (rmw_org, rmw_intan, _) =
        decompose_rmw(late.factor("rmw"), &late.intanft.series, late.window)?;
    let regressors: Vec<&FactorSeries> = vec![
        late.factor("mktrf"),
        late.factor("smb"),
        late.factor("hml"),
        &rmw_org,
        &rmw_intan,
        late.factor("cma"),
        late.factor("umd"),
    ];
    let panel_label = format!("OP quintiles {}", late.window);
    let series = quintile_series(late, SortVariable::Op, config.weighting)?;
    let mut rows = Vec::new();
    for s in &series {
        let (fit, months) = regress(s, &regressors, |_| true)?;
        rows.push(regression_row(&s.label, &fit));
        artifact.regressions.push(RegressionDump {
            panel: panel_label.clone(),
            row: s.label.clone(),
            terms: regression_terms(&regressors),
            months,
            result: fit,
        });
        artifact.portfolios.push(portfolio_dump(&panel_label, s));
        artifact.memberships.extend(membership_rows(s));
    }
    artifact.panels.push(TablePanel {
        label: panel_label,
        columns: regression_columns(&regressors),
        rows,
    });
    Ok(artifact)
}

// --- T9: LTG sorts with sub-periods -------------------------------------------

fn table_9(config: &StudyConfig, late: &WindowContext) -> Result<TableArtifact, StudyError> {
    let mut artifact = TableArtifact::new(
        "T9",
        "LTG quintile regressions over the full, bubble, and non-bubble periods",
    );
    let regressors = late.model_regressors(&late.intanft_org);
    let terms = regression_terms(&regressors);
    let series = quintile_series(late, SortVariable::Ltg, config.weighting)?;
    let bubble = config.bubble;

    type Keep = Box<dyn Fn(&CalendarMonth) -> bool>;
    let panels: [(String, Keep); 3] = [
        (format!("Panel A: full {}", late.window), Box::new(|_| true)),
        (
            format!("Panel B: bubble {bubble}"),
            Box::new(move |m| bubble.contains(m)),
        ),
        (
            format!("Panel C: non-bubble {} excluding {bubble}", late.window),
            Box::new(move |m| !bubble.contains(m)),
        ),
    ];
    for (panel_label, keep) in panels {
        let mut rows = Vec::new();
        for s in &series {
            let (fit, months) = regress(s, &regressors, &keep)?;
            rows.push(regression_row(&s.label, &fit));
            artifact.regressions.push(RegressionDump {
                panel: panel_label.clone(),
                row: s.label.clone(),
                terms: terms.clone(),
                months,
                result: fit,
            });
        }
        artifact.panels.push(TablePanel {
            label: panel_label,
            columns: regression_columns(&regressors),
            rows,
        });
    }
    for s in &series {
        artifact.portfolios.push(portfolio_dump("LTG quintiles", s));
        artifact.memberships.extend(membership_rows(s));
    }
    Ok(artifact)
}
