//! Technology-industry classification by SIC code prefix.

use super::FundamentalsError;

/// SIC prefixes marking technology firms (Chan, Karceski, and Lakonishok
/// convention): 283, 357, 366, 38, 48, 737.
pub const TECH_SIC_PREFIXES: [&str; 6] = ["283", "357", "366", "38", "48", "737"];

/// True iff `sic` begins with any listed technology prefix. The 2-digit
/// codes 38 and 48 match any SIC starting "38"/"48".
pub fn classify_tech(sic: &str) -> Result<bool, FundamentalsError> {
    if !(2..=4).contains(&sic.len()) || !sic.bytes().all(|b| b.is_ascii_digit()) {
        return Err(FundamentalsError::MalformedSic {
            sic: sic.to_string(),
        });
    }
    Ok(TECH_SIC_PREFIXES.iter().any(|p| sic.starts_with(p)))
}
