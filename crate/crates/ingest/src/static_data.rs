//! Language editions, cuisines, ownership and land-border adjacency of the
//! 27-edition European cuisine study.

use ccrm_core::corpus::StaticTables;

const LANGUAGES: &str = include_str!("../data/languages.tsv");
const CUISINES: &str = include_str!("../data/cuisines.tsv");
const OWNERSHIP: &str = include_str!("../data/ownership.tsv");
const ADJACENCY: &str = include_str!("../data/adjacency.tsv");

pub fn builtin_static_tables() -> StaticTables {
    StaticTables::parse(LANGUAGES, CUISINES, OWNERSHIP, ADJACENCY)
        .expect("built-in tables are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_tables_have_expected_shape() {
        let t = builtin_static_tables();
        assert_eq!(t.languages.len(), 27);
        assert_eq!(t.cuisines.len(), 31);
        let en = t.ownership.own_cuisines("en").unwrap();
        assert_eq!(
            en.iter().map(String::as_str).collect::<Vec<_>>(),
            ["british", "english", "irish"]
        );
        let de = t.languages.iter().find(|l| l.code == "de").unwrap();
        assert_eq!(de.size_articles, 1_692_696);
        assert!(t.adjacency.are_neighbors("PT", "ES"));
        assert!(!t.adjacency.are_neighbors("GB", "FR"));
        for c in &t.cuisines {
            for cc in &c.country_codes {
                assert!(
                    t.adjacency.countries().any(|k| k == cc),
                    "{cc} has no land neighbour listed"
                );
            }
        }
    }
}
