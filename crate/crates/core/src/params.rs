//! Key/value parameter maps shared by the solvers and the CLI config layer.
//!
//! Keys use the CLI flag spelling without leading dashes (`v-start`,
//! `x-sat`, ...). Values are kept as text until a solver parses them.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::SolverError;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParamMap(BTreeMap<String, String>);

impl ParamMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.0.insert(key.into(), value.to_string());
        self
    }

    pub fn with(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.set(key, value);
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.0.remove(key)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.0.contains_key(key)
    }

    /// Entries of `other` replace entries of `self`.
    pub fn merge(&mut self, other: &ParamMap) {
        for (k, v) in &other.0 {
            self.0.insert(k.clone(), v.clone());
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    /// Parses `key` if present.
    pub fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>, SolverError> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .trim()
                .parse()
                .map(Some)
                .map_err(|_| SolverError::InvalidParams(format!("cannot parse `{key}` from `{raw}`"))),
        }
    }

    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, SolverError> {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    /// Fails on any key not listed in `allowed`.
    pub fn check_keys(&self, solver: &str, allowed: &[&str]) -> Result<(), SolverError> {
        for key in self.keys() {
            if !allowed.contains(&key) {
                return Err(SolverError::InvalidParams(format!("`{key}` is not a {solver} parameter")));
            }
        }
        Ok(())
    }
}

impl FromIterator<(String, String)> for ParamMap {
    fn from_iter<I: IntoIterator<Item = (String, String)>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// Reads an optional auto-scale coefficient: a number, or `off`/`false`.
pub(crate) fn parse_auto(map: &ParamMap, key: &str) -> Result<Option<Option<f64>>, SolverError> {
    match map.get(key).map(str::trim) {
        None => Ok(None),
        Some("off" | "false" | "no" | "none") => Ok(Some(None)),
        Some("on" | "true" | "yes") => Ok(Some(Some(1.0))),
        Some(raw) => raw
            .parse::<f64>()
            .map(|c| Some(Some(c)))
            .map_err(|_| SolverError::InvalidParams(format!("cannot parse `{key}` from `{raw}`"))),
    }
}
