//! Study configuration: a flat key-value file naming the three input CSVs
//! and the run options.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::factors::intanft::BreakpointConfig;
use crate::factors::Weighting;
use crate::kv::KvFile;
use crate::panel::{earliest_supported_month, MonthWindow};

use super::StudyError;

/// The nine study tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TableId {
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
    T7,
    T8,
    T9,
}

impl TableId {
    pub const ALL: [TableId; 9] = [
        TableId::T1,
        TableId::T2,
        TableId::T3,
        TableId::T4,
        TableId::T5,
        TableId::T6,
        TableId::T7,
        TableId::T8,
        TableId::T9,
    ];
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}", *self as usize + 1)
    }
}

impl FromStr for TableId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "T1" => Ok(TableId::T1),
            "T2" => Ok(TableId::T2),
            "T3" => Ok(TableId::T3),
            "T4" => Ok(TableId::T4),
            "T5" => Ok(TableId::T5),
            "T6" => Ok(TableId::T6),
            "T7" => Ok(TableId::T7),
            "T8" => Ok(TableId::T8),
            "T9" => Ok(TableId::T9),
            other => Err(format!("unknown table id {other:?} (T1..T9)")),
        }
    }
}

/// Full run configuration.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub fundamentals_path: PathBuf,
    pub returns_path: PathBuf,
    pub factors_path: PathBuf,
    pub out_dir: PathBuf,
    /// The two study windows; early must end before late starts.
    pub window_early: MonthWindow,
    pub window_late: MonthWindow,
    /// The bubble sub-period of the late window; its complement within the
    /// late window is the non-bubble period.
    pub bubble: MonthWindow,
    pub tables: Vec<TableId>,
    /// Weighting of the test portfolios (quintiles and double sorts).
    pub weighting: Weighting,
    /// Weighting inside the six INTANFT formation cells.
    pub intanft_weighting: Weighting,
    pub breakpoints: BreakpointConfig,
    pub sga_min_group: usize,
    /// Abort on the first quarantined input row.
    pub strict: bool,
    /// Tolerate return records whose firm is missing from fundamentals.
    pub allow_orphan_returns: bool,
    /// Optional symmetric winsorization percentile for derived ratios.
    pub winsor_pct: Option<f64>,
}

impl StudyConfig {
    /// Parses a config file. Paths are resolved relative to the config
    /// file's own directory.
    pub fn from_file(path: &Path) -> Result<Self, StudyError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            StudyError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_kv_text(&text, base)
    }

    pub fn from_kv_text(text: &str, base: &Path) -> Result<Self, StudyError> {
        const KNOWN_KEYS: [&str; 17] = [
            "fundamentals",
            "returns",
            "factors",
            "out_dir",
            "window_early",
            "window_late",
            "bubble",
            "tables",
            "weighting",
            "intanft_weighting",
            "breakpoint_low_pct",
            "breakpoint_high_pct",
            "breakpoint_nyse_only",
            "sga_min_group",
            "strict",
            "allow_orphan_returns",
            "winsor_pct",
        ];
        let kv = KvFile::parse(text).map_err(|e| StudyError::Config(e.to_string()))?;
        for key in kv.keys() {
            if !KNOWN_KEYS.contains(&key) {
                return Err(StudyError::Config(format!("unknown config key {key:?}")));
            }
        }
        let cfg = |e: crate::kv::KvError| StudyError::Config(e.to_string());

        let resolve = |raw: &str| -> PathBuf {
            let p = PathBuf::from(raw);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        let fundamentals_path = resolve(kv.require("fundamentals").map_err(cfg)?);
        let returns_path = resolve(kv.require("returns").map_err(cfg)?);
        let factors_path = resolve(kv.require("factors").map_err(cfg)?);
        let out_dir = resolve(kv.get("out_dir").unwrap_or("out"));

        let window_early: MonthWindow = kv
            .get_or("window_early", "1963-07..1992-12".parse().expect("static"))
            .map_err(cfg)?;
        let window_late: MonthWindow = kv
            .get_or("window_late", "1993-01..2022-12".parse().expect("static"))
            .map_err(cfg)?;
        let bubble: MonthWindow = kv
            .get_or("bubble", "1995-01..2000-12".parse().expect("static"))
            .map_err(cfg)?;

        let tables = match kv.get("tables") {
            None => TableId::ALL.to_vec(),
            Some(raw) => parse_tables(raw)?,
        };

        let config = StudyConfig {
            fundamentals_path,
            returns_path,
            factors_path,
            out_dir,
            window_early,
            window_late,
            bubble,
            tables,
            weighting: kv.get_or("weighting", Weighting::Equal).map_err(cfg)?,
            intanft_weighting: kv
                .get_or("intanft_weighting", Weighting::Value)
                .map_err(cfg)?,
            breakpoints: BreakpointConfig {
                low_pct: kv.get_or("breakpoint_low_pct", 30.0).map_err(cfg)?,
                high_pct: kv.get_or("breakpoint_high_pct", 70.0).map_err(cfg)?,
                nyse_only: kv.get_or("breakpoint_nyse_only", true).map_err(cfg)?,
            },
            sga_min_group: kv.get_or("sga_min_group", 15).map_err(cfg)?,
            strict: kv.get_or("strict", false).map_err(cfg)?,
            allow_orphan_returns: kv.get_or("allow_orphan_returns", false).map_err(cfg)?,
            winsor_pct: kv.get_opt("winsor_pct").map_err(cfg)?,
        };
        config.validate_shape()?;
        Ok(config)
    }

    /// Structural checks that need no file access.
    pub fn validate_shape(&self) -> Result<(), StudyError> {
        if self.window_early.end >= self.window_late.start {
            return Err(StudyError::Config(format!(
                "windows must not overlap: early ends {}, late starts {}",
                self.window_early.end, self.window_late.start
            )));
        }
        if self.window_early.start < earliest_supported_month() {
            return Err(StudyError::Config(format!(
                "window_early starts {}, before the earliest supported factor month 1963-07",
                self.window_early.start
            )));
        }
        if self.bubble.start < self.window_late.start || self.bubble.end > self.window_late.end {
            return Err(StudyError::Config(format!(
                "bubble window {} must lie within the late window {}",
                self.bubble, self.window_late
            )));
        }
        let bp = &self.breakpoints;
        if !(0.0 < bp.low_pct && bp.low_pct <= bp.high_pct && bp.high_pct < 100.0) {
            return Err(StudyError::Config(format!(
                "breakpoint percentiles ({}, {}) must satisfy 0 < low <= high < 100",
                bp.low_pct, bp.high_pct
            )));
        }
        if self.sga_min_group < 6 {
            return Err(StudyError::Config(
                "sga_min_group must be at least 6 (four parameters need n >= k + 2)".into(),
            ));
        }
        if self.tables.is_empty() {
            return Err(StudyError::Config("no tables selected".into()));
        }
        if let Some(p) = self.winsor_pct {
            if !(0.0..50.0).contains(&p) {
                return Err(StudyError::Config(format!(
                    "winsor_pct {p} must be in [0, 50)"
                )));
            }
        }
        Ok(())
    }

    /// Checks the referenced input files exist.
    pub fn validate_paths(&self) -> Result<(), StudyError> {
        for (name, path) in [
            ("fundamentals", &self.fundamentals_path),
            ("returns", &self.returns_path),
            ("factors", &self.factors_path),
        ] {
            if !path.is_file() {
                return Err(StudyError::Config(format!(
                    "{name} file not found: {}",
                    path.display()
                )));
            }
        }
        Ok(())
    }

    /// Canonical one-line-per-key rendering, hashed into the run manifest.
    pub fn canonical_string(&self) -> String {
        let bp = &self.breakpoints;
        let tables: Vec<String> = self.tables.iter().map(|t| t.to_string()).collect();
        format!(
            "fundamentals={}\nreturns={}\nfactors={}\nwindow_early={}\nwindow_late={}\nbubble={}\ntables={}\nweighting={}\nintanft_weighting={}\nbreakpoint_low_pct={}\nbreakpoint_high_pct={}\nbreakpoint_nyse_only={}\nsga_min_group={}\nstrict={}\nallow_orphan_returns={}\nwinsor_pct={}\n",
            self.fundamentals_path.display(),
            self.returns_path.display(),
            self.factors_path.display(),
            self.window_early,
            self.window_late,
            self.bubble,
            tables.join(","),
            self.weighting,
            self.intanft_weighting,
            bp.low_pct,
            bp.high_pct,
            bp.nyse_only,
            self.sga_min_group,
            self.strict,
            self.allow_orphan_returns,
            self.winsor_pct.map(|p| p.to_string()).unwrap_or_default(),
        )
    }
}

pub fn parse_tables(raw: &str) -> Result<Vec<TableId>, StudyError> {
    let mut tables = Vec::new();
    for token in raw.split(',') {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        tables.push(token.parse::<TableId>().map_err(StudyError::Config)?);
    }
    tables.sort();
    tables.dedup();
    if tables.is_empty() {
        return Err(StudyError::Config("no tables selected".into()));
    }
    Ok(tables)
}
