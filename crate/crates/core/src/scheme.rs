//! Manual coding schemes and per-capture code assignments.

use serde::{Deserialize, Serialize};

use crate::ids::{CaptureId, SchemeId};

pub const MATERIALS: [&str; 9] = [
    "foam",
    "cardboard",
    "MDF",
    "wood",
    "hard plastics",
    "soft plastics",
    "metal",
    "electronics",
    "other",
];

pub const TOOLS: [&str; 6] = [
    "hand tools",
    "3D-printer",
    "laser cutter",
    "machining",
    "vacuum former",
    "computer",
];

pub const DISCIPLINES: [&str; 3] = ["mechanics", "software", "electronics"];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchemeError {
    #[error("coding scheme {0} has no categories")]
    Empty(SchemeId),
    #[error("coding scheme {scheme} lists category {category:?} twice")]
    DuplicateCategory { scheme: SchemeId, category: String },
    #[error("unknown category {category:?} in scheme {scheme}")]
    UnknownCategory { scheme: SchemeId, category: String },
    #[error("assignment for scheme {found} used with scheme {expected}")]
    WrongScheme { expected: SchemeId, found: SchemeId },
}

/// Named, ordered list of categories applied by a human coder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodingScheme {
    pub scheme_id: SchemeId,
    pub name: String,
    pub categories: Vec<String>,
}

impl CodingScheme {
    pub fn new<S: Into<String>>(
        scheme_id: impl Into<SchemeId>,
        name: impl Into<String>,
        categories: impl IntoIterator<Item = S>,
    ) -> Result<Self, SchemeError> {
        let scheme = Self {
            scheme_id: scheme_id.into(),
            name: name.into(),
            categories: categories.into_iter().map(Into::into).collect(),
        };
        scheme.check()?;
        Ok(scheme)
    }

    /// Re-check invariants, e.g. after deserialisation.
    pub fn check(&self) -> Result<(), SchemeError> {
        if self.categories.is_empty() {
            return Err(SchemeError::Empty(self.scheme_id.clone()));
        }
        for (i, c) in self.categories.iter().enumerate() {
            if self.categories[..i].contains(c) {
                return Err(SchemeError::DuplicateCategory {
                    scheme: self.scheme_id.clone(),
                    category: c.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn index_of(&self, category: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == category)
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }
}

/// The materials, tools and disciplines schemes, in that order.
pub fn builtin_schemes() -> Vec<CodingScheme> {
    vec![
        CodingScheme::new("materials", "Materials", MATERIALS).expect("static scheme"),
        CodingScheme::new("tools", "Tools", TOOLS).expect("static scheme"),
        CodingScheme::new("disciplines", "Disciplines", DISCIPLINES).expect("static scheme"),
    ]
}

/// Categories a coder observed on one capture. Empty means nothing observed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeAssignment {
    pub capture_id: CaptureId,
    pub scheme_id: SchemeId,
    /// Kept in scheme order without duplicates.
    pub categories: Vec<String>,
}

impl CodeAssignment {
    /// Every category exists in `scheme` and the scheme ids match.
    pub fn check(&self, scheme: &CodingScheme) -> Result<(), SchemeError> {
        if self.scheme_id != scheme.scheme_id {
            return Err(SchemeError::WrongScheme {
                expected: scheme.scheme_id.clone(),
                found: self.scheme_id.clone(),
            });
        }
        for c in &self.categories {
            if scheme.index_of(c).is_none() {
                return Err(SchemeError::UnknownCategory {
                    scheme: scheme.scheme_id.clone(),
                    category: c.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Build an assignment, rejecting labels the scheme does not define.
pub fn assign_codes<S: AsRef<str>>(
    capture_id: CaptureId,
    scheme: &CodingScheme,
    categories: &[S],
) -> Result<CodeAssignment, SchemeError> {
    let mut indices = Vec::with_capacity(categories.len());
    for c in categories {
        let c = c.as_ref();
        let idx = scheme
            .index_of(c)
            .ok_or_else(|| SchemeError::UnknownCategory {
                scheme: scheme.scheme_id.clone(),
                category: c.to_owned(),
            })?;
        indices.push(idx);
    }
    indices.sort_unstable();
    indices.dedup();
    Ok(CodeAssignment {
        capture_id,
        scheme_id: scheme.scheme_id.clone(),
        categories: indices
            .into_iter()
            .map(|i| scheme.categories[i].clone())
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn materials() -> CodingScheme {
        builtin_schemes().remove(0)
    }

    #[test]
    fn builtin_lists_are_exact() {
        let s = builtin_schemes();
        let names: Vec<_> = s.iter().map(|s| s.scheme_id.as_str()).collect();
        assert_eq!(names, ["materials", "tools", "disciplines"]);
        assert_eq!(s[0].categories.len(), 9);
        assert_eq!(s[1].categories.len(), 6);
        assert_eq!(s[2].categories.len(), 3);
        assert_eq!(s[2].categories, ["mechanics", "software", "electronics"]);
    }

    #[test]
    fn assignment_of_three_materials() {
        let a = assign_codes(
            "p37".into(),
            &materials(),
            &["hard plastics", "electronics", "metal"],
        )
        .unwrap();
        assert_eq!(a.categories, ["hard plastics", "metal", "electronics"]);
    }

    #[test]
    fn empty_assignment_is_valid() {
        let a = assign_codes::<&str>("p1".into(), &materials(), &[]).unwrap();
        assert!(a.categories.is_empty());
        assert!(a.check(&materials()).is_ok());
    }

    #[test]
    fn unknown_category_is_named() {
        let err = assign_codes("p1".into(), &materials(), &["titanium"]).unwrap_err();
        assert_eq!(
            err,
            SchemeError::UnknownCategory {
                scheme: "materials".into(),
                category: "titanium".into()
            }
        );
        assert!(err.to_string().contains("titanium"));
    }

    #[test]
    fn duplicates_collapse() {
        let a = assign_codes("p1".into(), &materials(), &["foam", "foam"]).unwrap();
        assert_eq!(a.categories, ["foam"]);
    }

    #[test]
    fn scheme_invariants() {
        assert!(matches!(
            CodingScheme::new("s", "S", Vec::<String>::new()),
            Err(SchemeError::Empty(_))
        ));
        assert!(matches!(
            CodingScheme::new("s", "S", ["a", "b", "a"]),
            Err(SchemeError::DuplicateCategory { .. })
        ));
    }

    #[test]
    fn wrong_scheme_is_rejected() {
        let tools = builtin_schemes().remove(1);
        let a = assign_codes("p1".into(), &materials(), &["foam"]).unwrap();
        assert!(matches!(a.check(&tools), Err(SchemeError::WrongScheme { .. })));
    }
}
