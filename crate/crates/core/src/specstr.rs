//! Parser for the `name:key=value:key=value` spec strings used on the CLI.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// A parsed spec string: a head name plus key=value parameters.
#[derive(Debug, Clone)]
pub struct SpecStr {
    pub name: String,
    params: BTreeMap<String, String>,
}

impl SpecStr {
    pub fn parse(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let name = parts
            .next()
            .filter(|n| !n.is_empty())
            .ok_or_else(|| Error::InvalidParameter(format!("empty spec string {s:?}")))?
            .to_string();
        let mut params = BTreeMap::new();
        for part in parts {
            let (k, v) = part.split_once('=').ok_or_else(|| {
                Error::InvalidParameter(format!("expected key=value, got {part:?} in {s:?}"))
            })?;
            params.insert(k.to_string(), v.to_string());
        }
        Ok(SpecStr { name, params })
    }

    pub fn f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("key {key}: not a number: {v:?}"))),
        }
    }

    pub fn i64(&self, key: &str, default: i64) -> Result<i64> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<i64>()
                .map_err(|_| Error::InvalidParameter(format!("key {key}: not an integer: {v:?}"))),
        }
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<usize>()
                .map_err(|_| Error::InvalidParameter(format!("key {key}: not a count: {v:?}"))),
        }
    }

    /// Rejects unknown parameter keys, naming the offender.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for k in self.params.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::InvalidParameter(format!(
                    "unknown key {k:?} for {:?} (allowed: {allowed:?})",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_name_and_params() {
        let s = SpecStr::parse("disk:r=1.5:res=64").unwrap();
        assert_eq!(s.name, "disk");
        assert_eq!(s.f64("r", 0.0).unwrap(), 1.5);
        assert_eq!(s.usize("res", 0).unwrap(), 64);
        assert_eq!(s.f64("cx", 0.25).unwrap(), 0.25);
    }

    #[test]
    fn rejects_malformed_and_unknown() {
        assert!(SpecStr::parse("").is_err());
        assert!(SpecStr::parse("disk:r").is_err());
        let s = SpecStr::parse("disk:radius=1").unwrap();
        assert!(s.check_keys(&["r", "res"]).is_err());
        assert!(s.f64("radius", 0.0).is_ok());
        let bad = SpecStr::parse("disk:r=abc").unwrap();
        assert!(bad.f64("r", 0.0).is_err());
    }
}
