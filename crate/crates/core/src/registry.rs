//! Name-keyed registries of interchangeable strategies.
//!
//! Curve families, transverse potential families and periodic spectrum
//! methods all live behind trait objects. A [`Registry`] maps a stable name
//! (the one used in JSON configs and on the command line) to a factory that
//! builds the trait object from a JSON parameter block.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde_json::Value;

use crate::error::{Error, Result};

pub type Factory<T> = Box<dyn Fn(&Value) -> Result<T> + Send + Sync>;

pub struct Registry<T> {
    kind: &'static str,
    entries: BTreeMap<&'static str, Factory<T>>,
}

impl<T> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
        }
    }

    /// Registers `factory` under `name`, replacing any previous entry.
    pub fn register<F>(&mut self, name: &'static str, factory: F) -> &mut Self
    where
        F: Fn(&Value) -> Result<T> + Send + Sync + 'static,
    {
        self.entries.insert(name, Box::new(factory));
        self
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn build(&self, name: &str, params: &Value) -> Result<T> {
        match self.entries.get(name) {
            Some(factory) => factory(params),
            None => Err(Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                known: self.names().collect::<Vec<_>>().join(", "),
            }),
        }
    }
}

/// Deserializes a strategy's parameter block, reporting failures with the
/// strategy name as the field path.
pub fn parse_params<P: DeserializeOwned>(name: &str, params: &Value) -> Result<P> {
    let value = if params.is_null() {
        Value::Object(Default::default())
    } else {
        params.clone()
    };
    serde_json::from_value(value).map_err(|e| Error::config(name, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Scale {
        factor: f64,
    }

    fn registry() -> Registry<Box<dyn Fn(f64) -> f64>> {
        let mut r: Registry<Box<dyn Fn(f64) -> f64>> = Registry::new("transform");
        r.register("scale", |p| {
            let s: Scale = parse_params("scale", p)?;
            Ok(Box::new(move |x| x * s.factor))
        });
        r.register("negate", |_| Ok(Box::new(|x: f64| -x)));
        r
    }

    #[test]
    fn builds_registered_strategy() {
        let r = registry();
        let f = r
            .build("scale", &serde_json::json!({"factor": 3.0}))
            .unwrap();
        assert_eq!(f(2.0), 6.0);
        assert_eq!(r.names().collect::<Vec<_>>(), vec!["negate", "scale"]);
    }

    #[test]
    fn unknown_name_lists_known() {
        let err = registry().build("rotate", &Value::Null).err().unwrap();
        let msg = err.to_string();
        assert!(
            msg.contains("rotate") && msg.contains("negate, scale"),
            "{msg}"
        );
    }

    #[test]
    fn unknown_param_rejected() {
        let err = registry()
            .build("scale", &serde_json::json!({"factor": 1.0, "bogus": 2}))
            .err()
            .unwrap();
        assert!(matches!(err, Error::Config { .. }));
    }
}
