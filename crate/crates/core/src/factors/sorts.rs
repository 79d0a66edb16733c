//! Quantile portfolio sorts on derived firm-year variables, formed on
//! end-of-prior-calendar-year values and held for the following calendar
//! year.

use crate::fundamentals::DerivedFirmYear;

use super::FactorError;

/// Sortable firm-year variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortVariable {
    Mtb,
    Intan,
    Op,
    Ltg,
}

impl SortVariable {
    pub fn name(&self) -> &'static str {
        match self {
            SortVariable::Mtb => "MTB",
            SortVariable::Intan => "INTAN",
            SortVariable::Op => "OP",
            SortVariable::Ltg => "LTG",
        }
    }

    pub fn value_of(&self, d: &DerivedFirmYear) -> Option<f64> {
        match self {
            SortVariable::Mtb => d.mtb,
            SortVariable::Intan => Some(d.intan),
            SortVariable::Op => d.op,
            SortVariable::Ltg => d.ltg,
        }
    }
}

/// One year's quantile assignment: `bins[i]` holds the firm ids of bin `i`,
/// lowest values first.
#[derive(Debug, Clone)]
pub struct QuantileSort {
    pub variable: SortVariable,
    pub formation_year: i32,
    pub bins: Vec<Vec<String>>,
}

/// Sorts firms into `n_bins` near-equal bins on `variable` from fiscal-year
/// `formation_year - 1` records, ties broken by firm id.
///
/// When the count does not divide evenly, the extra members go to the lowest
/// bins, so 11 firms over 5 bins split {3, 2, 2, 2, 2}.
pub fn quantile_sort(
    derived: &[DerivedFirmYear],
    variable: SortVariable,
    n_bins: usize,
    formation_year: i32,
) -> Result<QuantileSort, FactorError> {
    assert!(n_bins >= 2, "need at least two bins");
    let fiscal_year = formation_year - 1;
    let mut ranked: Vec<(&str, f64)> = derived
        .iter()
        .filter(|d| d.fiscal_year == fiscal_year)
        .filter_map(|d| variable.value_of(d).map(|v| (d.firm_id.as_str(), v)))
        .collect();
    if ranked.is_empty() {
        return Err(FactorError::MissingVariable {
            variable: variable.name(),
            formation_year,
        });
    }
    if ranked.len() < n_bins {
        return Err(FactorError::InsufficientUniverse {
            formation_year,
            detail: format!(
                "{} firms with {} available, need {}",
                ranked.len(),
                variable.name(),
                n_bins
            ),
        });
    }
    ranked.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .expect("finite sort values")
            .then_with(|| a.0.cmp(b.0))
    });

    let n = ranked.len();
    let base = n / n_bins;
    let rem = n % n_bins;
    let mut bins = Vec::with_capacity(n_bins);
    let mut cursor = 0usize;
    for i in 0..n_bins {
        let size = base + usize::from(i < rem);
        bins.push(
            ranked[cursor..cursor + size]
                .iter()
                .map(|(id, _)| (*id).to_string())
                .collect(),
        );
        cursor += size;
    }
    Ok(QuantileSort {
        variable,
        formation_year,
        bins,
    })
}

/// One year's independent double sort: `cells[i][j]` is the intersection of
/// bin `i` of variable A (5 bins) and bin `j` of variable B (4 bins). Empty
/// cells stay empty; their series are undefined downstream.
#[derive(Debug, Clone)]
pub struct DoubleSort {
    pub var_a: SortVariable,
    pub var_b: SortVariable,
    pub formation_year: i32,
    pub cells: Vec<Vec<Vec<String>>>,
}

/// Independently sorts on `var_a` into `bins_a` and `var_b` into `bins_b`
/// and intersects the assignments.
pub fn independent_double_sort(
    derived: &[DerivedFirmYear],
    var_a: SortVariable,
    bins_a: usize,
    var_b: SortVariable,
    bins_b: usize,
    formation_year: i32,
) -> Result<DoubleSort, FactorError> {
    let sort_a = quantile_sort(derived, var_a, bins_a, formation_year)?;
    let sort_b = quantile_sort(derived, var_b, bins_b, formation_year)?;

    let mut bin_of_b: std::collections::BTreeMap<&str, usize> = std::collections::BTreeMap::new();
    for (j, member_ids) in sort_b.bins.iter().enumerate() {
        for id in member_ids {
            bin_of_b.insert(id, j);
        }
    }
    let mut cells = vec![vec![Vec::new(); bins_b]; bins_a];
    for (i, member_ids) in sort_a.bins.iter().enumerate() {
        for id in member_ids {
            if let Some(&j) = bin_of_b.get(id.as_str()) {
                cells[i][j].push(id.clone());
            }
        }
    }
    Ok(DoubleSort {
        var_a,
        var_b,
        formation_year,
        cells,
    })
}
