//! Model families, hyperparameter maps and the tuned defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Lr,
    Knn,
    Svm,
    Mlp,
    Gnb,
    Rf,
    Gbt,
}

impl Family {
    /// Report order.
    pub const ALL: [Family; 7] = [
        Family::Lr,
        Family::Knn,
        Family::Svm,
        Family::Mlp,
        Family::Gnb,
        Family::Rf,
        Family::Gbt,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Family::Lr => "lr",
            Family::Knn => "knn",
            Family::Svm => "svm",
            Family::Mlp => "mlp",
            Family::Gnb => "gnb",
            Family::Rf => "rf",
            Family::Gbt => "gbt",
        }
    }

    /// Name used in result tables.
    pub fn label(self) -> &'static str {
        match self {
            Family::Lr => "LR",
            Family::Knn => "KNN",
            Family::Svm => "SVM",
            Family::Mlp => "ANN",
            Family::Gnb => "NB",
            Family::Rf => "RF",
            Family::Gbt => "XGBoost",
        }
    }

    /// Whether the family is trained on standardized features.
    pub fn needs_scaling(self) -> bool {
        matches!(self, Family::Knn | Family::Svm | Family::Mlp | Family::Gnb)
    }

    /// Hyperparameter names the family accepts.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Family::Lr => &["C"],
            Family::Knn => &["n_neighbors"],
            Family::Svm => &["C", "gamma"],
            Family::Mlp => &[
                "learning_rate_init",
                "activation",
                "solver",
                "alpha",
                "hidden_layer_size",
            ],
            Family::Gnb => &["var_smoothing"],
            Family::Rf => &["max_features", "min_samples_leaf", "min_samples_split", "n_estimators"],
            Family::Gbt => &[
                "gamma",
                "subsample",
                "colsample_bytree",
                "max_depth",
                "n_estimators",
                "learning_rate",
                "reg_lambda",
            ],
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Family {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.to_ascii_lowercase();
        let alias = match t.as_str() {
            "ann" => "mlp",
            "nb" => "gnb",
            "xgboost" => "gbt",
            other => other,
        };
        Family::ALL
            .into_iter()
            .find(|f| f.token() == alias)
            .ok_or_else(|| ModelError::Config(format!("unknown model family `{s}`")))
    }
}

/// A hyperparameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Int(i64),
    Real(f64),
    Text(String),
}

impl Param {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Param::Int(v) => Some(*v as f64),
            Param::Real(v) => Some(*v),
            Param::Text(_) => None,
        }
    }

    pub fn as_usize(&self) -> Option<usize> {
        match self {
            Param::Int(v) if *v >= 0 => Some(*v as usize),
            Param::Real(v) if *v >= 0.0 && v.fract() == 0.0 => Some(*v as usize),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Param::Text(s) => Some(s),
            _ => None,
        }
    }

    /// Integer if it parses as one, then real, else text.
    pub fn parse(s: &str) -> Param {
        let s = s.trim();
        if let Ok(v) = s.parse::<i64>() {
            Param::Int(v)
        } else if let Ok(v) = s.parse::<f64>() {
            Param::Real(v)
        } else {
            Param::Text(s.to_string())
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Param::Int(v) => write!(f, "{v}"),
            Param::Real(v) => write!(f, "{v}"),
            Param::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Param {
    fn from(v: f64) -> Self {
        Param::Real(v)
    }
}

impl From<i64> for Param {
    fn from(v: i64) -> Self {
        Param::Int(v)
    }
}

impl From<&str> for Param {
    fn from(v: &str) -> Self {
        Param::Text(v.to_string())
    }
}

pub type Hyperparams = BTreeMap<String, Param>;

/// A family plus a complete hyperparameter map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub params: Hyperparams,
}

impl ModelSpec {
    /// The tuned hyperparameters, with library defaults for the rest.
    pub fn tuned(family: Family) -> Self {
        let p: Vec<(&str, Param)> = match family {
            Family::Lr => vec![("C", 100.0.into())],
            Family::Knn => vec![("n_neighbors", 12.into())],
            Family::Svm => vec![("C", 10.0.into()), ("gamma", 0.1.into())],
            Family::Mlp => vec![
                ("learning_rate_init", 0.001.into()),
                ("activation", "relu".into()),
                ("solver", "adam".into()),
                ("alpha", 0.001.into()),
                ("hidden_layer_size", 100.into()),
            ],
            Family::Gnb => vec![("var_smoothing", 0.002.into())],
            Family::Rf => vec![
                ("max_features", 5.into()),
                ("min_samples_leaf", 8.into()),
                ("min_samples_split", 4.into()),
                ("n_estimators", 100.into()),
            ],
            Family::Gbt => vec![
                ("gamma", 1.5.into()),
                ("subsample", 0.8.into()),
                ("colsample_bytree", 0.8.into()),
                ("max_depth", 5.into()),
                ("n_estimators", 100.into()),
                ("learning_rate", 0.1.into()),
                ("reg_lambda", 1.0.into()),
            ],
        };
        Self {
            family,
            params: p.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    /// Overrides one hyperparameter.
    pub fn with(mut self, name: &str, value: impl Into<Param>) -> Self {
        self.params.insert(name.to_string(), value.into());
        self
    }

    /// Merges `overrides` over the defaults, rejecting unknown names.
    pub fn with_overrides(mut self, overrides: &Hyperparams) -> Result<Self, ModelError> {
        for (k, v) in overrides {
            if !self.family.param_names().contains(&k.as_str()) {
                return Err(ModelError::Config(format!(
                    "{} has no hyperparameter `{k}`",
                    self.family
                )));
            }
            self.params.insert(k.clone(), v.clone());
        }
        Ok(self)
    }

    fn get(&self, name: &str) -> Result<&Param, ModelError> {
        self.params
            .get(name)
            .ok_or_else(|| ModelError::Config(format!("{} is missing `{name}`", self.family)))
    }

    pub fn real(&self, name: &str) -> Result<f64, ModelError> {
        self.get(name)?
            .as_f64()
            .ok_or_else(|| ModelError::Config(format!("`{name}` must be a number")))
    }

    pub fn count(&self, name: &str) -> Result<usize, ModelError> {
        self.get(name)?
            .as_usize()
            .ok_or_else(|| ModelError::Config(format!("`{name}` must be a non-negative integer")))
    }

    pub fn text(&self, name: &str) -> Result<&str, ModelError> {
        self.get(name)?
            .as_str()
            .ok_or_else(|| ModelError::Config(format!("`{name}` must be text")))
    }

    /// `name=value` pairs joined by `;`, in key order.
    pub fn describe(&self) -> String {
        self.params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}
