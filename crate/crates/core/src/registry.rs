//! Strategies by name. Files register under their `name` field, or their
//! base name when they have none.

use std::collections::BTreeMap;
use std::path::Path;

use crate::strategy_file::{load_str, Loaded, LoadError};

/// Strategy files shipped with the library, in dependency order.
pub const BUNDLED: &[(&str, &str)] = &[
    ("intro-v1", include_str!("../strategies/intro-v1.json")),
    ("intro-v2", include_str!("../strategies/intro-v2.json")),
    ("intro-v3", include_str!("../strategies/intro-v3.json")),
    ("induct", include_str!("../strategies/induct.json")),
];

#[derive(Clone, Debug, Default)]
pub struct StrategyRegistry {
    entries: BTreeMap<String, Loaded>,
}

impl StrategyRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// A registry holding the bundled strategies.
    pub fn bundled() -> Self {
        let mut r = Self::new();
        for (origin, text) in BUNDLED {
            r.load_str(text, origin).unwrap_or_else(|e| panic!("bundled strategy {origin} is invalid: {e}"));
        }
        r
    }

    pub fn register(&mut self, l: Loaded) -> Result<&Loaded, LoadError> {
        let name = l.strategy.name.clone();
        if self.entries.contains_key(&name) {
            return Err(LoadError::Duplicate(name));
        }
        Ok(self.entries.entry(name).or_insert(l))
    }

    pub fn load_str(&mut self, text: &str, origin: &str) -> Result<&Loaded, LoadError> {
        let l = load_str(text, origin, self)?;
        self.register(l)
    }

    pub fn load_file(&mut self, path: &Path) -> Result<&Loaded, LoadError> {
        let (text, stem) = read(path)?;
        self.load_str(&text, &stem)
    }

    /// Loads every `*.json` file of `dir`. Files referring to strategies
    /// of later files are retried until nothing more loads.
    pub fn load_dir(&mut self, dir: &Path) -> Result<Vec<String>, LoadError> {
        let io = |e: std::io::Error| LoadError::Io { path: dir.display().to_string(), msg: e.to_string() };
        let mut pending = Vec::new();
        for entry in std::fs::read_dir(dir).map_err(io)? {
            let p = entry.map_err(io)?.path();
            if p.extension().is_some_and(|x| x == "json") {
                pending.push(read(&p)?);
            }
        }
        pending.sort();
        let mut loaded = Vec::new();
        loop {
            let mut failed = Vec::new();
            let before = pending.len();
            for (text, stem) in pending {
                match self.load_str(&text, &stem) {
                    Ok(l) => loaded.push(l.strategy.name.clone()),
                    Err(e) => failed.push((text, stem, e)),
                }
            }
            if failed.is_empty() {
                return Ok(loaded);
            }
            if failed.len() == before {
                return Err(failed.remove(0).2);
            }
            pending = failed.into_iter().map(|(t, s, _)| (t, s)).collect();
        }
    }

    pub fn get(&self, name: &str) -> Result<&Loaded, LoadError> {
        self.entries.get(name).ok_or_else(|| LoadError::UnknownStrategy(name.to_owned()))
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }
}

fn read(path: &Path) -> Result<(String, String), LoadError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| LoadError::Io { path: path.display().to_string(), msg: e.to_string() })?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok((text, stem))
}
