//! Name-keyed registries of interchangeable strategies.
//!
//! Flow laws, banded solvers and redistribution modes are all selected the
//! same way: a config names a strategy, optionally with parameters, and a
//! [`Registry`] turns that [`StrategySpec`] into a boxed trait object.

use std::collections::BTreeMap;
use std::fmt;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegistryError {
    #[error("unknown {kind} '{name}' (known: {})", known.join(", "))]
    Unknown {
        kind: &'static str,
        name: String,
        known: Vec<String>,
    },
    #[error("bad parameters for {kind} '{name}': {reason}")]
    BadParams {
        kind: &'static str,
        name: String,
        reason: String,
    },
}

/// A strategy selection: a bare name (`"willmore"`) or a single-key object
/// carrying parameters (`{"odd_polynomial": [1, 0, -0.5]}`).
#[derive(Debug, Clone, PartialEq)]
pub struct StrategySpec {
    pub name: String,
    pub params: Value,
}

impl StrategySpec {
    pub fn named(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            params: Value::Null,
        }
    }

    pub fn with_params(name: impl Into<String>, params: Value) -> Self {
        Self {
            name: name.into(),
            params,
        }
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.params.is_null() {
            f.write_str(&self.name)
        } else {
            write!(f, "{}({})", self.name, self.params)
        }
    }
}

impl Serialize for StrategySpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.params.is_null() {
            serializer.serialize_str(&self.name)
        } else {
            let mut map = BTreeMap::new();
            map.insert(&self.name, &self.params);
            map.serialize(serializer)
        }
    }
}

impl<'de> Deserialize<'de> for StrategySpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Name(String),
            Map(BTreeMap<String, Value>),
        }

        match Repr::deserialize(deserializer)? {
            Repr::Name(name) => Ok(StrategySpec::named(name)),
            Repr::Map(map) => {
                if map.len() != 1 {
                    return Err(de::Error::custom(format!(
                        "strategy object must have exactly one key, found {}",
                        map.len()
                    )));
                }
                let (name, params) = map.into_iter().next().expect("one entry");
                Ok(StrategySpec { name, params })
            }
        }
    }
}

pub type Factory<T> = Box<dyn Fn(&Value) -> Result<Box<T>, String> + Send + Sync>;

/// Maps strategy names to constructors producing `Box<T>`.
pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<String, Factory<T>>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
        }
    }

    /// Registers a constructor under `name`, replacing any previous entry.
    pub fn register<F>(&mut self, name: impl Into<String>, factory: F) -> &mut Self
    where
        F: Fn(&Value) -> Result<Box<T>, String> + Send + Sync + 'static,
    {
        self.entries.insert(name.into(), Box::new(factory));
        self
    }

    pub fn kind(&self) -> &'static str {
        self.kind
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn create(&self, spec: &StrategySpec) -> Result<Box<T>, RegistryError> {
        let factory = self.entries.get(&spec.name).ok_or_else(|| RegistryError::Unknown {
            kind: self.kind,
            name: spec.name.clone(),
            known: self.entries.keys().cloned().collect(),
        })?;
        factory(&spec.params).map_err(|reason| RegistryError::BadParams {
            kind: self.kind,
            name: spec.name.clone(),
            reason,
        })
    }
}

impl<T: ?Sized> fmt::Debug for Registry<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("kind", &self.kind)
            .field("names", &self.entries.keys().collect::<Vec<_>>())
            .finish()
    }
}

/// Rejects any parameters for strategies that take none.
pub fn no_params(params: &Value) -> Result<(), String> {
    if params.is_null() {
        Ok(())
    } else {
        Err(format!("takes no parameters, got {params}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    trait Greeter {
        fn greet(&self) -> String;
    }

    struct Hello(String);

    impl Greeter for Hello {
        fn greet(&self) -> String {
            format!("hello {}", self.0)
        }
    }

    fn greeters() -> Registry<dyn Greeter> {
        let mut reg: Registry<dyn Greeter> = Registry::new("greeter");
        reg.register("hello", |p: &Value| {
            let who = p.as_str().unwrap_or("world").to_string();
            Ok(Box::new(Hello(who)) as Box<dyn Greeter>)
        });
        reg.register("strict", |p: &Value| {
            no_params(p)?;
            Ok(Box::new(Hello("strict".into())) as Box<dyn Greeter>)
        });
        reg
    }

    #[test]
    fn bare_name_and_object_forms_parse() {
        let a: StrategySpec = serde_json::from_value(json!("willmore")).unwrap();
        assert_eq!(a, StrategySpec::named("willmore"));
        let b: StrategySpec = serde_json::from_value(json!({"odd_polynomial": [1.0, 0.0, -0.5]})).unwrap();
        assert_eq!(b.name, "odd_polynomial");
        assert_eq!(b.params, json!([1.0, 0.0, -0.5]));
        assert_eq!(serde_json::to_value(&a).unwrap(), json!("willmore"));
        assert_eq!(
            serde_json::to_value(&b).unwrap(),
            json!({"odd_polynomial": [1.0, 0.0, -0.5]})
        );
    }

    #[test]
    fn multi_key_object_is_rejected() {
        let err = serde_json::from_value::<StrategySpec>(json!({"a": 1, "b": 2}));
        assert!(err.is_err());
    }

    #[test]
    fn create_dispatches_by_name() {
        let reg = greeters();
        let g = reg.create(&StrategySpec::with_params("hello", json!("curve"))).unwrap();
        assert_eq!(g.greet(), "hello curve");
        assert!(reg.contains("strict"));
        assert_eq!(reg.names().collect::<Vec<_>>(), vec!["hello", "strict"]);
    }

    #[test]
    fn unknown_and_bad_params_are_reported() {
        let reg = greeters();
        match reg.create(&StrategySpec::named("nope")) {
            Err(RegistryError::Unknown { name, known, .. }) => {
                assert_eq!(name, "nope");
                assert_eq!(known, vec!["hello", "strict"]);
            }
            other => panic!("unexpected {:?}", other.map(|_| ())),
        }
        let err = reg
            .create(&StrategySpec::with_params("strict", json!(3)))
            .err()
            .unwrap();
        assert!(matches!(err, RegistryError::BadParams { .. }));
    }
}
