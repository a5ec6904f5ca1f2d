//! Scenarios shipped with the binary.

use crate::scenario::Scenario;

const BUNDLED: &[(&str, &str)] = &[
    ("affine-connection", include_str!("../scenarios/affine-connection.json")),
    ("genconn-invariance", include_str!("../scenarios/genconn-invariance.json")),
    ("heisenberg-genconn", include_str!("../scenarios/heisenberg-genconn.json")),
    ("lgfb-invariance", include_str!("../scenarios/lgfb-invariance.json")),
    ("negative-bent-change", include_str!("../scenarios/negative-bent-change.json")),
    ("negative-mismatched-eta", include_str!("../scenarios/negative-mismatched-eta.json")),
    ("negative-nonadditive", include_str!("../scenarios/negative-nonadditive.json")),
    ("standard-reduction", include_str!("../scenarios/standard-reduction.json")),
    ("transport-homomorphism", include_str!("../scenarios/transport-homomorphism.json")),
    ("vector-bundle-linear", include_str!("../scenarios/vector-bundle-linear.json")),
];

/// Bundled scenarios expected to fail validation.
pub const NEGATIVE_CONTROLS: &[&str] = &[
    "negative-bent-change",
    "negative-mismatched-eta",
    "negative-nonadditive",
];

pub fn names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

pub fn source(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// `(name, description)` in a fixed order.
pub fn list() -> Vec<(&'static str, String)> {
    BUNDLED
        .iter()
        .map(|(n, text)| {
            let description = Scenario::parse(text)
                .map(|s| s.description)
                .unwrap_or_else(|e| format!("<unparseable: {e}>"));
            (*n, description)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_names_match_files_and_are_sorted() {
        let mut sorted: Vec<_> = names().collect();
        sorted.sort();
        assert_eq!(sorted, names().collect::<Vec<_>>());
        for (name, text) in BUNDLED {
            let s = Scenario::parse(text).unwrap();
            assert_eq!(&s.name, name);
            assert!(!s.description.is_empty());
        }
    }
}
