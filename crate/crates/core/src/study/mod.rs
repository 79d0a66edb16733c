//! Study orchestration: reproduces each table as a named pipeline over a
//! configured panel, writing deterministic machine-readable artifacts plus a
//! digest manifest.

pub mod artifact;
pub mod config;
pub mod context;
pub mod tables;

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::factors::{formation_year_of, FactorError};
use crate::fundamentals::FundamentalsError;
use crate::ortho::OrthoError;
use crate::panel::{
    load_fundamentals, load_returns, FirmYearRecord, LoadOptions, PanelError, QuarantinedRow,
};
use crate::stats::StatsError;
use crate::synth::SynthError;

pub use artifact::{sha256_hex, RunManifest, TableArtifact};
pub use config::{StudyConfig, TableId};
pub use context::{build_window_context, WindowContext, MODEL_FACTORS, SPANNING_FACTORS};
pub use tables::{needs_early_window, run_table};

/// Top-level study error, carrying the process exit code class.
#[derive(Debug, Error)]
pub enum StudyError {
    /// Configuration, schema, or window problems (exit code 2).
    #[error("validation error: {0}")]
    Config(String),
    /// Data-content problems (exit code 3).
    #[error("data error: {0}")]
    Data(String),
    /// Numeric failures (exit code 4).
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Filesystem failures (exit code 3).
    #[error("io error: {0}")]
    Io(String),
}

impl StudyError {
    pub fn exit_code(&self) -> i32 {
        match self {
            StudyError::Config(_) => 2,
            StudyError::Data(_) | StudyError::Io(_) => 3,
            StudyError::Numeric(_) => 4,
        }
    }
}

impl From<PanelError> for StudyError {
    fn from(e: PanelError) -> Self {
        match &e {
            PanelError::FileUnreadable { .. }
            | PanelError::SchemaMismatch { .. }
            | PanelError::UnsupportedWindow { .. } => StudyError::Config(e.to_string()),
            _ => StudyError::Data(e.to_string()),
        }
    }
}

impl From<StatsError> for StudyError {
    fn from(e: StatsError) -> Self {
        StudyError::Numeric(e.to_string())
    }
}

impl From<FundamentalsError> for StudyError {
    fn from(e: FundamentalsError) -> Self {
        match &e {
            FundamentalsError::Stats(inner) => StudyError::Numeric(inner.to_string()),
            _ => StudyError::Data(e.to_string()),
        }
    }
}

impl From<FactorError> for StudyError {
    fn from(e: FactorError) -> Self {
        StudyError::Data(e.to_string())
    }
}

impl From<OrthoError> for StudyError {
    fn from(e: OrthoError) -> Self {
        match &e {
            OrthoError::WindowMismatch { .. } => StudyError::Data(e.to_string()),
            OrthoError::Stats(inner) => StudyError::Numeric(inner.to_string()),
        }
    }
}

impl From<SynthError> for StudyError {
    fn from(e: SynthError) -> Self {
        match &e {
            SynthError::InvalidSpec(_) => StudyError::Config(e.to_string()),
            _ => StudyError::Io(e.to_string()),
        }
    }
}

impl From<std::io::Error> for StudyError {
    fn from(e: std::io::Error) -> Self {
        StudyError::Io(e.to_string())
    }
}

/// Summary printed by `validate`.
#[derive(Debug, Clone)]
pub struct ValidationSummary {
    pub fundamentals_rows: usize,
    pub fundamentals_quarantined: usize,
    pub returns_rows: usize,
    pub returns_quarantined: usize,
    pub early_months: usize,
    pub late_months: usize,
    pub firms: usize,
}

impl std::fmt::Display for ValidationSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "fundamentals: {} accepted, {} quarantined",
            self.fundamentals_rows, self.fundamentals_quarantined
        )?;
        writeln!(
            f,
            "returns: {} accepted, {} quarantined",
            self.returns_rows, self.returns_quarantined
        )?;
        writeln!(f, "firms: {}", self.firms)?;
        write!(
            f,
            "factor coverage: {} early months, {} late months",
            self.early_months, self.late_months
        )
    }
}

struct LoadedInputs {
    fundamentals: Vec<FirmYearRecord>,
    returns: Vec<crate::panel::MonthlyReturnRecord>,
    fundamentals_quarantined: Vec<QuarantinedRow>,
    returns_quarantined: Vec<QuarantinedRow>,
}

fn load_inputs(config: &StudyConfig) -> Result<LoadedInputs, StudyError> {
    let options = LoadOptions {
        strict: config.strict,
    };
    let fundamentals = load_fundamentals(&config.fundamentals_path, options)?;
    let returns = load_returns(&config.returns_path, options)?;

    // Fiscal years outside the study horizon are ignored entirely.
    let fy_min = formation_year_of(&config.window_early.start) - 1;
    let fy_max = config.window_late.end.year();
    let kept: Vec<FirmYearRecord> = fundamentals
        .records
        .into_iter()
        .filter(|r| (fy_min..=fy_max).contains(&r.fiscal_year))
        .collect();

    Ok(LoadedInputs {
        fundamentals: kept,
        returns: returns.records,
        fundamentals_quarantined: fundamentals.quarantined,
        returns_quarantined: returns.quarantined,
    })
}

/// Dry-run checks: config shape, paths, full input validation, and window
/// coverage. Writes nothing.
pub fn validate_study(config: &StudyConfig) -> Result<ValidationSummary, StudyError> {
    config.validate_shape()?;
    config.validate_paths()?;
    let inputs = load_inputs(config)?;
    let needs_early = config.tables.iter().copied().any(needs_early_window);
    let early = if needs_early {
        crate::panel::load_factors(&config.factors_path, config.window_early)?
    } else {
        Vec::new()
    };
    let late = crate::panel::load_factors(&config.factors_path, config.window_late)?;
    let firms: std::collections::BTreeSet<&str> = inputs
        .fundamentals
        .iter()
        .map(|r| r.firm_id.as_str())
        .collect();
    Ok(ValidationSummary {
        fundamentals_rows: inputs.fundamentals.len(),
        fundamentals_quarantined: inputs.fundamentals_quarantined.len(),
        returns_rows: inputs.returns.len(),
        returns_quarantined: inputs.returns_quarantined.len(),
        early_months: early.len(),
        late_months: late.len(),
        firms: firms.len(),
    })
}

fn quarantine_csv(rows: &[QuarantinedRow]) -> String {
    let mut out = String::from("row,reason\n");
    for r in rows {
        let _ = writeln!(out, "{},\"{}\"", r.row, r.reason.replace('"', "\"\""));
    }
    out
}

fn derived_csv(derived: &crate::fundamentals::Derived) -> String {
    let opt = |v: Option<f64>| v.map(crate::panel::fmt_number).unwrap_or_default();
    let mut out = String::from(
        "firm_id,fiscal_year,mtb,roe,rd_intensity,sga_intensity,op,intan,is_tech,sga_investment_component,ltg\n",
    );
    for d in &derived.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            d.firm_id,
            d.fiscal_year,
            opt(d.mtb),
            opt(d.roe),
            opt(d.rd_intensity),
            opt(d.sga_intensity),
            opt(d.op),
            crate::panel::fmt_number(d.intan),
            d.is_tech,
            crate::panel::fmt_number(d.sga_investment_component),
            opt(d.ltg),
        );
    }
    out
}

fn sga_fits_csv(derived: &crate::fundamentals::Derived) -> String {
    let mut out = String::from(
        "industry,year,fallback_level,n_obs,alpha,beta,gamma,lambda\n",
    );
    for fit in &derived.sga_fits.fits {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fit.industry,
            fit.year,
            fit.fallback_level,
            fit.n_obs,
            crate::panel::fmt_number(fit.alpha),
            crate::panel::fmt_number(fit.beta),
            crate::panel::fmt_number(fit.gamma),
            crate::panel::fmt_number(fit.lambda),
        );
    }
    out
}

fn diagnostics_csv(derived: &crate::fundamentals::Derived) -> String {
    let mut out = String::from("firm_id,fiscal_year,exclusion_reason\n");
    for d in &derived.diagnostics {
        let _ = writeln!(
            out,
            "{},{},\"{}\"",
            d.firm_id,
            d.fiscal_year,
            d.exclusion_reason.replace('"', "\"\"")
        );
    }
    out
}

fn intanft_csv(ctx: &WindowContext) -> String {
    let mut out = String::from("year,month,intanft,intanft_org\n");
    for (i, month) in ctx.intanft.series.months.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            month.year(),
            month.month(),
            crate::panel::fmt_number(ctx.intanft.series.values[i]),
            crate::panel::fmt_number(ctx.intanft_org.values[i]),
        );
    }
    out
}

fn intanft_membership_csv(ctx: &WindowContext) -> String {
    let mut out = String::from("formation_year,portfolio_label,firm_id\n");
    for m in &ctx.intanft.memberships {
        let _ = writeln!(out, "{},{},{}", m.formation_year, m.cell, m.firm_id);
    }
    out
}

/// The spanning-fit report, in the same layout as the inline regression
/// presentation: coefficients with t-values, then the R^2.
fn spanning_report(ctx: &WindowContext) -> String {
    let fit = &ctx.spanning.fit;
    let mut out = format!(
        "{} = {:.3}",
        ctx.spanning.dependent,
        fit.coefficients[0]
    );
    for (j, name) in ctx.spanning.regressors.iter().enumerate() {
        let c = fit.slope(j);
        let _ = write!(out, " {} {:.3}*{}", if c < 0.0 { "-" } else { "+" }, c.abs(), name);
    }
    let _ = writeln!(out, " + e");
    let mut t_line = format!("t: ({:.2})", fit.t_stats[0]);
    for j in 0..ctx.spanning.regressors.len() {
        let _ = write!(t_line, " ({:.2})", fit.slope_t(j));
    }
    let _ = writeln!(out, "{t_line}");
    let _ = writeln!(out, "R^2 = {:.3}", fit.r_squared);
    out
}

fn spanning_csv(ctx: &WindowContext) -> String {
    let fit = &ctx.spanning.fit;
    let mut out = String::from("term,coefficient,std_error,t_stat,p_value,r_squared\n");
    let mut terms = vec!["intercept".to_string()];
    terms.extend(ctx.spanning.regressors.iter().cloned());
    for (j, term) in terms.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            term,
            crate::panel::fmt_number(fit.coefficients[j]),
            crate::panel::fmt_number(fit.std_errors[j]),
            crate::panel::fmt_number(fit.t_stats[j]),
            crate::panel::fmt_number(fit.p_values[j]),
            crate::panel::fmt_number(fit.r_squared),
        );
    }
    out
}

/// Runs the configured tables and writes all artifacts, side files, and the
/// run manifest under `config.out_dir`. Returns the manifest.
pub fn run_study(config: &StudyConfig) -> Result<RunManifest, StudyError> {
    config.validate_shape()?;
    config.validate_paths()?;
    std::fs::create_dir_all(&config.out_dir)?;

    let mut manifest = RunManifest {
        config_digest: sha256_hex(config.canonical_string().as_bytes()),
        ..RunManifest::default()
    };
    for (name, path) in [
        ("fundamentals", &config.fundamentals_path),
        ("returns", &config.returns_path),
        ("factors", &config.factors_path),
    ] {
        let bytes = std::fs::read(path)?;
        manifest.inputs.insert(name.into(), sha256_hex(&bytes));
    }

    let inputs = load_inputs(config)?;
    let needs_early = config.tables.iter().copied().any(needs_early_window);
    let early = if needs_early {
        Some(build_window_context(
            config,
            config.window_early,
            &inputs.fundamentals,
            &inputs.returns,
        )?)
    } else {
        None
    };
    let late = build_window_context(
        config,
        config.window_late,
        &inputs.fundamentals,
        &inputs.returns,
    )?;

    let mut write_side = |name: String, body: String| -> Result<(), StudyError> {
        let path = config.out_dir.join(&name);
        std::fs::write(&path, body.as_bytes())
            .map_err(|e| StudyError::Io(format!("writing {}: {e}", path.display())))?;
        manifest.artifacts.insert(name, sha256_hex(body.as_bytes()));
        Ok(())
    };

    write_side(
        "quarantine_fundamentals.csv".into(),
        quarantine_csv(&inputs.fundamentals_quarantined),
    )?;
    write_side(
        "quarantine_returns.csv".into(),
        quarantine_csv(&inputs.returns_quarantined),
    )?;
    write_side("derived_firm_years.csv".into(), derived_csv(&late.derived))?;
    write_side("sga_fits.csv".into(), sga_fits_csv(&late.derived))?;
    write_side(
        "derive_diagnostics.csv".into(),
        diagnostics_csv(&late.derived),
    )?;
    for ctx in early.iter().chain(std::iter::once(&late)) {
        write_side(format!("intanft_{}.csv", ctx.label), intanft_csv(ctx))?;
        write_side(
            format!("intanft_membership_{}.csv", ctx.label),
            intanft_membership_csv(ctx),
        )?;
        write_side(format!("spanning_{}.txt", ctx.label), spanning_report(ctx))?;
        write_side(format!("spanning_{}.csv", ctx.label), spanning_csv(ctx))?;
    }

    let mut selected = config.tables.clone();
    selected.sort();
    for id in selected {
        let artifact = run_table(id, config, early.as_ref(), &late)?;
        for (path, digest) in artifact.write(&config.out_dir)? {
            let name = path
                .file_name()
                .expect("artifact file name")
                .to_string_lossy()
                .into_owned();
            manifest.artifacts.insert(name, digest);
        }
    }

    let manifest_body = manifest.to_csv();
    std::fs::write(config.out_dir.join("run_manifest.csv"), manifest_body.as_bytes())?;
    Ok(manifest)
}

/// Generates a synthetic panel from a spec file and writes the three CSVs
/// plus the oracle sidecar into `out_dir`.
pub fn run_synth(spec_path: &Path, out_dir: &Path) -> Result<(), StudyError> {
    let text = std::fs::read_to_string(spec_path)
        .map_err(|e| StudyError::Config(format!("cannot read spec {}: {e}", spec_path.display())))?;
    let kv = crate::kv::KvFile::parse(&text).map_err(|e| StudyError::Config(e.to_string()))?;
    let spec = crate::synth::SynthSpec::from_kv(&kv)?;
    let generated = crate::synth::generate(&spec)?;
    generated.write_files(out_dir)?;
    Ok(())
}
