use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Classification {
    Test,
    Application,
    Other,
}

/// Top-level directory names that mark application and test code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathRules {
    pub application_dirs: Vec<String>,
    pub test_dirs: Vec<String>,
}

impl Default for PathRules {
    fn default() -> Self {
        PathRules {
            application_dirs: vec!["app".into()],
            test_dirs: vec!["test".into(), "spec".into()],
        }
    }
}

impl PathRules {
    pub fn classify(&self, path: &str) -> Result<Classification> {
        if path.is_empty() {
            return Err(Error::Validation("empty repository path".into()));
        }
        let first = path
            .trim_start_matches("./")
            .split('/')
            .find(|s| !s.is_empty())
            .unwrap_or("");
        if self.application_dirs.iter().any(|d| d == first) {
            Ok(Classification::Application)
        } else if self.test_dirs.iter().any(|d| d == first) {
            Ok(Classification::Test)
        } else {
            Ok(Classification::Other)
        }
    }
}

/// Classify a repository-relative path with the default Rails-style layout.
pub fn classify_path(path: &str) -> Result<Classification> {
    PathRules::default().classify(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rails_layout() {
        assert_eq!(
            classify_path("app/models/user.rb").unwrap(),
            Classification::Application
        );
        assert_eq!(
            classify_path("spec/models/user_spec.rb").unwrap(),
            Classification::Test
        );
        assert_eq!(
            classify_path("test/unit/x_test.rb").unwrap(),
            Classification::Test
        );
        assert_eq!(classify_path("config/routes.rb").unwrap(), Classification::Other);
    }

    #[test]
    fn only_first_segment_counts() {
        assert_eq!(
            classify_path("lib/app/thing.rb").unwrap(),
            Classification::Other
        );
        assert_eq!(classify_path("application.rb").unwrap(), Classification::Other);
        assert_eq!(classify_path("app").unwrap(), Classification::Application);
    }

    #[test]
    fn empty_path_rejected() {
        assert!(matches!(classify_path(""), Err(Error::Validation(_))));
    }

    #[test]
    fn custom_rules() {
        let rules = PathRules {
            application_dirs: vec!["src".into()],
            test_dirs: vec!["tests".into()],
        };
        assert_eq!(rules.classify("src/lib.rs").unwrap(), Classification::Application);
        assert_eq!(rules.classify("tests/it.rs").unwrap(), Classification::Test);
        assert_eq!(rules.classify("app/x.rb").unwrap(), Classification::Other);
    }

    proptest! {
        #[test]
        fn total_and_deterministic(path in "[a-z/._]{1,30}") {
            let a = classify_path(&path).unwrap();
            let b = classify_path(&path).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
