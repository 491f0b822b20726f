//! Candidate formulas under the one-variable-per-category constraint.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::indices::{Category, VariableCatalog, TARGET};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Predictor {
    pub name: String,
    pub category: Category,
    pub lag: usize,
}

/// Target at `t + lead` explained by predictors at lag 1, held in canonical
/// (category, catalog) order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelFormula {
    pub target: String,
    pub lead: usize,
    pub predictors: Vec<Predictor>,
}

impl ModelFormula {
    /// Builds a formula from predictor names, putting them in canonical order.
    pub fn new(catalog: &VariableCatalog, target: &str, lead: usize, names: &[&str]) -> Result<Self> {
        let mut preds = names
            .iter()
            .map(|n| {
                let e = catalog
                    .get(n)
                    .ok_or_else(|| Error::Config(format!("unknown predictor {n}")))?;
                Ok((e.category, catalog.position(n).unwrap_or(usize::MAX), e))
            })
            .collect::<Result<Vec<_>>>()?;
        preds.sort_by_key(|(c, pos, _)| (*c, *pos));
        let predictors: Vec<Predictor> = preds
            .into_iter()
            .map(|(category, _, e)| Predictor {
                name: e.name.clone(),
                category,
                lag: 1,
            })
            .collect();
        let f = Self {
            target: target.to_string(),
            lead,
            predictors,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if self.predictors.is_empty() {
            return Err(Error::Config("formula has no predictors".into()));
        }
        let sig = self.signature();
        if sig.iter().any(|&c| c > 1) {
            return Err(Error::Config(format!("formula {self} uses two predictors of one category")));
        }
        Ok(())
    }

    pub fn names(&self) -> Vec<&str> {
        self.predictors.iter().map(|p| p.name.as_str()).collect()
    }

    /// Predictor counts per category in `Category::ALL` order.
    pub fn signature(&self) -> [usize; 3] {
        Category::ALL.map(|c| self.predictors.iter().filter(|p| p.category == c).count())
    }

    pub fn len(&self) -> usize {
        self.predictors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictors.is_empty()
    }

    pub fn id(&self) -> String {
        formula_id(self)
    }

    /// Parses the one-line form written by `Display`.
    pub fn parse_line(catalog: &VariableCatalog, line: &str) -> Result<Self> {
        let bad = || Error::Config(format!("malformed formula line: {line}"));
        let (lhs, rhs) = line.split_once('~').ok_or_else(bad)?;
        let (target, lead) = lhs.trim().rsplit_once("_lead").ok_or_else(bad)?;
        let lead: usize = lead.parse().map_err(|_| bad())?;
        let names = rhs
            .split('+')
            .map(|t| {
                let t = t.trim();
                match t.rsplit_once("_lag") {
                    Some((n, "1")) => Ok(n),
                    _ => Err(bad()),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(catalog, target, lead, &names)
    }
}

impl fmt::Display for ModelFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_lead{} ~ ", self.target, self.lead)?;
        for (i, p) in self.predictors.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{}_lag{}", p.name, p.lag)?;
        }
        Ok(())
    }
}

/// 16 hex digits from a SHA-256 over the target, lead and sorted
/// predictor names.
pub fn formula_id(formula: &ModelFormula) -> String {
    let mut names: Vec<String> = formula.predictors.iter().map(|p| format!("{}@{}", p.name, p.lag)).collect();
    names.sort();
    let mut h = Sha256::new();
    h.update(format!("{}@{}", formula.target, formula.lead).as_bytes());
    for n in &names {
        h.update([0u8]);
        h.update(n.as_bytes());
    }
    h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * u128::from(n - i) / u128::from(i + 1))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetCounts {
    pub total: u128,
    /// `per_length[k - 1]` = C(n, k).
    pub per_length: Vec<u128>,
}

pub fn count_unconstrained(n_vars: usize) -> Result<SubsetCounts> {
    if n_vars == 0 || n_vars > 127 {
        return Err(Error::Config(format!("n_vars must be in 1..=127, got {n_vars}")));
    }
    let per_length: Vec<u128> = (1..=n_vars as u64).map(|k| binomial(n_vars as u64, k)).collect();
    Ok(SubsetCounts {
        total: (1u128 << n_vars) - 1,
        per_length,
    })
}

/// Every non-empty choice of at most one variable per category, vegetation
/// outermost, each category in catalog order with "none" first.
pub fn enumerate_constrained(catalog: &VariableCatalog, lead: usize) -> Result<Vec<ModelFormula>> {
    let groups: Vec<Vec<&str>> = Category::ALL
        .iter()
        .map(|c| catalog.by_category(*c).iter().map(|e| e.name.as_str()).collect())
        .collect();
    if groups.iter().any(|g| g.is_empty()) {
        return Err(Error::Config(format!(
            "catalog is not partitioned into the three categories (counts {:?})",
            catalog.partition()
        )));
    }
    let with_none = |g: &Vec<&str>| -> Vec<Option<String>> {
        std::iter::once(None).chain(g.iter().map(|s| Some(s.to_string()))).collect()
    };
    let (veg, pre, inf) = (with_none(&groups[0]), with_none(&groups[1]), with_none(&groups[2]));
    let mut out = Vec::with_capacity(veg.len() * pre.len() * inf.len() - 1);
    for v in &veg {
        for p in &pre {
            for i in &inf {
                let names: Vec<&str> = [v, p, i].into_iter().flatten().map(String::as_str).collect();
                if names.is_empty() {
                    continue;
                }
                out.push(ModelFormula::new(catalog, TARGET, lead, &names)?);
            }
        }
    }
    Ok(out)
}

/// One formula per line.
pub fn write_formula_list(formulas: &[ModelFormula]) -> String {
    let mut s = String::new();
    for f in formulas {
        s.push_str(&f.to_string());
        s.push('\n');
    }
    s
}

pub fn read_formula_list(catalog: &VariableCatalog, text: &str) -> Result<Vec<ModelFormula>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| ModelFormula::parse_line(catalog, l))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indices::{base, SourceTag};

    fn catalog() -> VariableCatalog {
        VariableCatalog::study(SourceTag::Tamsat, base::RFE, true)
    }

    #[test]
    fn line_format() {
        let c = catalog();
        let f = ModelFormula::new(&c, TARGET, 1, &["TCI1M", "TAMSAT_SPI3M", "VCIdekad"]).unwrap();
        assert_eq!(f.to_string(), "VCI3M_lead1 ~ VCIdekad_lag1 + TAMSAT_SPI3M_lag1 + TCI1M_lag1");
        assert_eq!(ModelFormula::parse_line(&c, &f.to_string()).unwrap(), f);
    }

    #[test]
    fn two_of_a_category_is_rejected() {
        assert!(ModelFormula::new(&catalog(), TARGET, 1, &["VCI1M", "VCIdekad"]).is_err());
    }

    #[test]
    fn binomials() {
        let c = count_unconstrained(16).unwrap();
        assert_eq!(c.total, 65_535);
        assert_eq!(c.per_length[7], 12_870);
        assert_eq!(count_unconstrained(1).unwrap().total, 1);
    }
}
