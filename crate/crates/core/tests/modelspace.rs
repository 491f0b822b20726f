use std::collections::HashSet;

use vcistack::indices::{base, Category, Derivation, SourceTag, VariableCatalog, VariableEntry, TARGET};
use vcistack::modelspace::*;

fn catalog() -> VariableCatalog {
    VariableCatalog::study(SourceTag::Tamsat, base::RFE, true)
}

#[test]
fn constrained_count_is_244_with_length_profile() {
    let f = enumerate_constrained(&catalog(), 1).unwrap();
    assert_eq!(f.len(), 244);
    assert_eq!(f.len(), 5 * 7 * 7 - 1);
    let by_len = |k| f.iter().filter(|m| m.len() == k).count();
    assert_eq!((by_len(1), by_len(2), by_len(3)), (16, 4 * 6 + 4 * 6 + 6 * 6, 4 * 6 * 6));
    assert_eq!(by_len(2), 84);
}

#[test]
fn brute_force_filter_agrees_with_enumeration() {
    let c = catalog();
    let entries = c.entries();
    let counts = count_unconstrained(entries.len()).unwrap();
    let mut seen = 0u128;
    let mut per_len = vec![0u128; entries.len()];
    let mut admissible: HashSet<Vec<String>> = HashSet::new();
    for mask in 1u32..(1 << entries.len()) {
        seen += 1;
        let chosen: Vec<&VariableEntry> = (0..entries.len()).filter(|j| mask >> j & 1 == 1).map(|j| &entries[j]).collect();
        per_len[chosen.len() - 1] += 1;
        let ok = Category::ALL
            .iter()
            .all(|cat| chosen.iter().filter(|e| e.category == *cat).count() <= 1);
        if ok {
            let mut names: Vec<String> = chosen.iter().map(|e| e.name.clone()).collect();
            names.sort();
            admissible.insert(names);
        }
    }
    assert_eq!(seen, counts.total);
    assert_eq!(per_len, counts.per_length);
    let enumerated: HashSet<Vec<String>> = enumerate_constrained(&c, 1)
        .unwrap()
        .iter()
        .map(|f| {
            let mut n: Vec<String> = f.names().iter().map(|s| s.to_string()).collect();
            n.sort();
            n
        })
        .collect();
    assert_eq!(admissible.len(), 244);
    assert_eq!(enumerated, admissible);
}

#[test]
fn tiny_catalog_gives_seven() {
    let entry = |name: &str, category| VariableEntry {
        name: name.into(),
        category,
        source: SourceTag::None,
        derivation: Derivation::Base(name.into()),
        notes: vec![],
    };
    let c = VariableCatalog::new(vec![
        entry("V", Category::Vegetation),
        entry("P", Category::Precipitation),
        entry("I", Category::Influencer),
    ])
    .unwrap();
    assert_eq!(enumerate_constrained(&c, 1).unwrap().len(), 7);
    let missing = VariableCatalog::new(vec![entry("V", Category::Vegetation), entry("P", Category::Precipitation)]).unwrap();
    assert!(enumerate_constrained(&missing, 1).is_err());
}

#[test]
fn ids_are_stable_distinct_and_order_free() {
    let c = catalog();
    let f = enumerate_constrained(&c, 1).unwrap();
    let ids: HashSet<String> = f.iter().map(|m| m.id()).collect();
    assert_eq!(ids.len(), 244);
    let a = ModelFormula::new(&c, TARGET, 1, &["TCI1M", "VCI1M"]).unwrap();
    let b = ModelFormula::new(&c, TARGET, 1, &["VCI1M", "TCI1M"]).unwrap();
    assert_eq!(a.id(), b.id());
    assert_eq!(a.id().len(), 16);
    let text = write_formula_list(&f);
    let back = read_formula_list(&c, &text).unwrap();
    assert_eq!(back, f);
    assert_eq!(back.iter().map(|m| m.id()).collect::<Vec<_>>(), f.iter().map(|m| m.id()).collect::<Vec<_>>());
}

#[test]
fn order_is_vegetation_then_precipitation_then_influencer() {
    let f = enumerate_constrained(&catalog(), 1).unwrap();
    assert_eq!(f[0].names(), vec!["LST1M"]);
    assert_eq!(f[6].names(), vec!["TAMSAT_RFE1M"]);
    assert_eq!(f.last().unwrap().names(), vec!["VCIdekad", "TAMSAT_SPI3M", "SPEI3M"]);
}
