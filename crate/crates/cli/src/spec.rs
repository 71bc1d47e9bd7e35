//! Spec-file ingestion: a JSON document declaring the isogeny decomposition.
//!
//! Validation reports every problem at once, not just the first.

use serde::Deserialize;
use torsion_core::invariants::{ClassKind, ClassSpec, VarietySpec};
use torsion_core::modular::Modulus;

/// On-disk schema:
/// `{"ell": 3, "factors": [{"label": "E1", "cm": false, "multiplicity": 1}]}`
/// with `ell` optional.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDocument {
    #[serde(default)]
    pub ell: Option<u64>,
    pub factors: Vec<FactorEntry>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorEntry {
    pub label: String,
    pub cm: bool,
    pub multiplicity: u32,
}

/// Parse and validate; the error side carries every violation found.
pub fn parse_spec(text: &str) -> Result<SpecDocument, Vec<String>> {
    let doc: SpecDocument =
        serde_json::from_str(text).map_err(|e| vec![format!("malformed JSON: {e}")])?;
    let mut errors = Vec::new();
    if doc.factors.is_empty() {
        errors.push("factor list is empty".to_string());
    }
    for (i, f) in doc.factors.iter().enumerate() {
        if f.multiplicity < 1 {
            errors.push(format!(
                "factor {} (`{}`): multiplicity must be at least 1",
                i, f.label
            ));
        }
        for (j, g) in doc.factors.iter().enumerate().skip(i + 1) {
            if f.label == g.label {
                errors.push(format!(
                    "duplicate label `{}` at positions {} and {}",
                    f.label, i, j
                ));
            }
        }
    }
    if let Some(ell) = doc.ell {
        if let Err(e) = Modulus::new(ell, 1) {
            errors.push(format!("ell: {e}"));
        }
    }
    if errors.is_empty() {
        Ok(doc)
    } else {
        Err(errors)
    }
}

impl SpecDocument {
    pub fn to_variety(&self) -> VarietySpec {
        VarietySpec::new(
            self.factors
                .iter()
                .map(|f| ClassSpec {
                    label: f.label.clone(),
                    kind: if f.cm {
                        ClassKind::Cm
                    } else {
                        ClassKind::NonCm
                    },
                    multiplicity: f.multiplicity,
                })
                .collect(),
        )
        .expect("validated document")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_minimal_document() {
        let doc =
            parse_spec(r#"{"factors":[{"label":"E1","cm":false,"multiplicity":1}]}"#).unwrap();
        assert_eq!(doc.factors.len(), 1);
        assert!(doc.ell.is_none());
    }

    #[test]
    fn reports_all_violations_with_positions() {
        let errs = parse_spec(
            r#"{"ell":6,"factors":[
                {"label":"E1","cm":false,"multiplicity":0},
                {"label":"E1","cm":true,"multiplicity":1}
            ]}"#,
        )
        .unwrap_err();
        assert_eq!(errs.len(), 3);
        assert!(errs.iter().any(|e| e.contains("positions 0 and 1")));
        assert!(errs.iter().any(|e| e.contains("multiplicity")));
        assert!(errs.iter().any(|e| e.contains("not prime")));
    }

    #[test]
    fn rejects_malformed_json() {
        assert!(parse_spec("{").is_err());
    }
}
