//! Name-keyed factories for interchangeable strategies.
//!
//! A strategy is selected by a spec string `name` or `name:argument`, as it
//! appears in config files and on the command line.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub type Factory<T> = fn(Option<&str>) -> Result<Box<T>>;

pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<&'static str, Factory<T>>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Registry {
            kind,
            entries: BTreeMap::new(),
        }
    }

    /// Registers `factory` under `name`, replacing any previous entry.
    pub fn register(&mut self, name: &'static str, factory: Factory<T>) -> &mut Self {
        self.entries.insert(name, factory);
        self
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn create(&self, spec: &str) -> Result<Box<T>> {
        let spec = spec.trim();
        let (name, arg) = match spec.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (spec, None),
        };
        let factory = self.entries.get(name).ok_or_else(|| {
            Error::Config(format!(
                "unknown {} {name:?}; available: {}",
                self.kind,
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })?;
        factory(arg)
    }
}

pub(crate) fn no_argument(kind: &str, arg: Option<&str>) -> Result<()> {
    match arg {
        None => Ok(()),
        Some(a) => Err(Error::Config(format!(
            "{kind} takes no argument, got {a:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Greeter {
        fn greet(&self) -> String;
    }
    struct Plain;
    impl Greeter for Plain {
        fn greet(&self) -> String {
            "hi".into()
        }
    }
    struct Named(String);
    impl Greeter for Named {
        fn greet(&self) -> String {
            format!("hi {}", self.0)
        }
    }

    fn registry() -> Registry<dyn Greeter> {
        let mut r: Registry<dyn Greeter> = Registry::new("greeter");
        r.register("plain", |arg| {
            no_argument("plain", arg)?;
            Ok(Box::new(Plain))
        });
        r.register("named", |arg| {
            let name = arg.ok_or_else(|| Error::Config("named needs an argument".into()))?;
            Ok(Box::new(Named(name.to_string())))
        });
        r
    }

    #[test]
    fn selects_by_name_and_argument() {
        let r = registry();
        assert_eq!(r.create("plain").unwrap().greet(), "hi");
        assert_eq!(r.create("named:bob").unwrap().greet(), "hi bob");
        assert!(r.create("plain:x").is_err());
        let err = r.create("loud").err().unwrap().to_string();
        assert!(err.contains("named, plain"), "{err}");
        assert_eq!(r.names().collect::<Vec<_>>(), ["named", "plain"]);
    }
}
