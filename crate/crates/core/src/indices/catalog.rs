use std::fmt;

use serde::{Deserialize, Serialize};

use super::base;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Category {
    Vegetation,
    Precipitation,
    Influencer,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Vegetation, Category::Precipitation, Category::Influencer];
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Vegetation => "VEGETATION",
            Category::Precipitation => "PRECIPITATION",
            Category::Influencer => "INFLUENCER",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SourceTag {
    Tamsat,
    Chirps,
    None,
}

impl fmt::Display for SourceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceTag::Tamsat => "TAMSAT",
            SourceTag::Chirps => "CHIRPS",
            SourceTag::None => "NONE",
        })
    }
}

impl std::str::FromStr for SourceTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "TAMSAT" => Ok(SourceTag::Tamsat),
            "CHIRPS" => Ok(SourceTag::Chirps),
            "NONE" => Ok(SourceTag::None),
            _ => Err(Error::Config(format!("unknown source tag {s}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StdDistribution {
    /// SPI: mixed zero mass plus gamma on positives.
    Gamma,
    /// SPEI: three-parameter log-logistic on P - PET.
    LogLogistic,
}

/// How a modelling variable is derived from base columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Derivation {
    Base(String),
    Difference(String, String),
    RollingMean(Box<Derivation>, usize),
    RelativeRange(Box<Derivation>),
    Standardized(Box<Derivation>, StdDistribution),
}

impl Derivation {
    fn base(name: &str) -> Self {
        Derivation::Base(name.to_string())
    }

    fn rolling(self, w: usize) -> Self {
        Derivation::RollingMean(Box::new(self), w)
    }

    fn rr(self) -> Self {
        Derivation::RelativeRange(Box::new(self))
    }

    fn std(self, d: StdDistribution) -> Self {
        Derivation::Standardized(Box::new(self), d)
    }

    /// Base columns this derivation reads.
    pub fn inputs(&self) -> Vec<&str> {
        match self {
            Derivation::Base(b) => vec![b.as_str()],
            Derivation::Difference(a, b) => vec![a.as_str(), b.as_str()],
            Derivation::RollingMean(d, _) | Derivation::RelativeRange(d) | Derivation::Standardized(d, _) => {
                d.inputs()
            }
        }
    }
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Derivation::Base(b) => write!(f, "{b}"),
            Derivation::Difference(a, b) => write!(f, "({a} - {b})"),
            Derivation::RollingMean(d, w) => write!(f, "rolling_mean({d}, {w})"),
            Derivation::RelativeRange(d) => write!(f, "relative_range({d})"),
            Derivation::Standardized(d, StdDistribution::Gamma) => write!(f, "spi_gamma({d})"),
            Derivation::Standardized(d, StdDistribution::LogLogistic) => {
                write!(f, "spei_loglogistic({d})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableEntry {
    pub name: String,
    pub category: Category,
    pub source: SourceTag,
    pub derivation: Derivation,
    /// Free-text lineage notes (e.g. aliasing).
    pub notes: Vec<String>,
}

impl VariableEntry {
    pub fn lineage(&self) -> String {
        let mut s = self.derivation.to_string();
        for n in &self.notes {
            s.push_str(" [");
            s.push_str(n);
            s.push(']');
        }
        s
    }
}

/// Precipitation roles, in catalog order.
pub const PRECIP_ROLES: [&str; 6] = ["RFE1M", "RFE3M", "RCI1M", "RCI3M", "SPI1M", "SPI3M"];

/// Target variable name.
pub const TARGET: &str = "VCI3M";

/// Ordered registry of modelling variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableCatalog {
    entries: Vec<VariableEntry>,
}

pub fn precip_name(source: SourceTag, role: &str) -> String {
    format!("{source}_{role}")
}

/// The six precipitation variables for one rainfall column.
pub fn precipitation_entries(source: SourceTag, rain_column: &str) -> Vec<VariableEntry> {
    let rain = || Derivation::base(rain_column);
    let derivs = [
        rain(),
        rain().rolling(3),
        rain().rr(),
        rain().rolling(3).rr(),
        rain().std(StdDistribution::Gamma),
        rain().rolling(3).std(StdDistribution::Gamma),
    ];
    PRECIP_ROLES
        .iter()
        .zip(derivs)
        .map(|(role, derivation)| VariableEntry {
            name: precip_name(source, role),
            category: Category::Precipitation,
            source,
            derivation,
            notes: Vec::new(),
        })
        .collect()
}

impl VariableCatalog {
    pub fn new(entries: Vec<VariableEntry>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for e in &entries {
            if !seen.insert(e.name.as_str()) {
                return Err(Error::Config(format!("duplicate catalog entry {}", e.name)));
            }
        }
        Ok(Self { entries })
    }

    /// The 16 modelling variables: 4 vegetation, 6 precipitation from
    /// `source` (read from `rain_column`), 6 influencer.
    ///
    /// Without dekadal NDVI input, NDVIDekad and VCIdekad alias the monthly
    /// series and say so in their lineage notes.
    pub fn study(source: SourceTag, rain_column: &str, dekadal_input: bool) -> Self {
        let (dekad_col, dekad_note) = if dekadal_input {
            (base::NDVI_DEKAD, None)
        } else {
            (base::NDVI, Some(format!("alias of monthly {} (no dekadal input)", base::NDVI)))
        };
        let ndvi = || Derivation::base(base::NDVI);
        let veg = |name: &str, derivation: Derivation, note: Option<String>| VariableEntry {
            name: name.into(),
            category: Category::Vegetation,
            source: SourceTag::None,
            derivation,
            notes: note.into_iter().collect(),
        };
        let mut entries = vec![
            veg(TARGET, ndvi().rolling(3).rr(), None),
            veg("NDVIDekad", Derivation::base(dekad_col), dekad_note.clone()),
            veg("VCI1M", ndvi().rr(), None),
            veg("VCIdekad", Derivation::base(dekad_col).rr(), dekad_note),
        ];
        entries.extend(precipitation_entries(source, rain_column));

        let water_balance = || Derivation::Difference(rain_column.to_string(), base::PET.to_string());
        let infl = |name: &str, derivation: Derivation| VariableEntry {
            name: name.into(),
            category: Category::Influencer,
            source: SourceTag::None,
            derivation,
            notes: Vec::new(),
        };
        entries.extend([
            infl("LST1M", Derivation::base(base::LST)),
            infl("EVT1M", Derivation::base(base::EVT)),
            infl("PET1M", Derivation::base(base::PET)),
            infl("TCI1M", Derivation::base(base::LST).rr()),
            infl("SPEI1M", water_balance().std(StdDistribution::LogLogistic)),
            infl("SPEI3M", water_balance().rolling(3).std(StdDistribution::LogLogistic)),
        ]);
        Self { entries }
    }

    pub fn entries(&self) -> &[VariableEntry] {
        &self.entries
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name.as_str()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&VariableEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name == name)
    }

    pub fn by_category(&self, category: Category) -> Vec<&VariableEntry> {
        self.entries.iter().filter(|e| e.category == category).collect()
    }

    /// Counts per category in `Category::ALL` order.
    pub fn partition(&self) -> [usize; 3] {
        Category::ALL.map(|c| self.by_category(c).len())
    }

    /// Adds entries (e.g. a second precipitation source for comparison).
    pub fn extended(&self, extra: Vec<VariableEntry>) -> Result<Self> {
        let mut entries = self.entries.clone();
        entries.extend(extra);
        Self::new(entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn study_catalog_partitions_4_6_6() {
        let c = VariableCatalog::study(SourceTag::Tamsat, base::RFE, true);
        assert_eq!(c.entries().len(), 16);
        assert_eq!(c.partition(), [4, 6, 6]);
        let veg: Vec<&str> = c.by_category(Category::Vegetation).iter().map(|e| e.name.as_str()).collect();
        assert_eq!(veg, vec!["VCI3M", "NDVIDekad", "VCI1M", "VCIdekad"]);
        assert!(c.get("TAMSAT_SPI3M").is_some());
        assert_eq!(
            c.get("TCI1M").unwrap().derivation,
            Derivation::RelativeRange(Box::new(Derivation::Base(base::LST.into())))
        );
    }

    #[test]
    fn monthly_only_input_flags_dekadal_alias() {
        let c = VariableCatalog::study(SourceTag::Tamsat, base::RFE, false);
        assert!(c.get("VCIdekad").unwrap().lineage().contains("alias"));
        assert!(!c.get("VCI1M").unwrap().lineage().contains("alias"));
    }
}
