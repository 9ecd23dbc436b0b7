//! Numeric identifiers for commits, files and developers.
//!
//! Every miner output is keyed by dense integer ids so results can be laid
//! out as matrices. Ids are handed out in first-registration order starting
//! at 0, and the id maps are persisted next to the miner outputs as
//! `idToCommit.json`, `idToFile.json` and `idToUser.json`.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type EntityId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntityKind {
    Commit,
    File,
    User,
}

impl EntityKind {
    pub fn file_name(self) -> &'static str {
        match self {
            EntityKind::Commit => "idToCommit.json",
            EntityKind::File => "idToFile.json",
            EntityKind::User => "idToUser.json",
        }
    }
}

/// Bidirectional entity <-> id map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdRegistry {
    kind: EntityKind,
    forward: HashMap<String, EntityId>,
    reverse: Vec<String>,
}

impl IdRegistry {
    pub fn new(kind: EntityKind) -> Self {
        IdRegistry {
            kind,
            forward: HashMap::new(),
            reverse: Vec::new(),
        }
    }

    pub fn kind(&self) -> EntityKind {
        self.kind
    }

    /// Returns the id of `entity`, assigning the next free one if it is new.
    pub fn register(&mut self, entity: &str) -> Result<EntityId> {
        if entity.is_empty() {
            return Err(Error::EmptyEntity);
        }
        if let Some(&id) = self.forward.get(entity) {
            return Ok(id);
        }
        let id = EntityId::try_from(self.reverse.len()).expect("id space exhausted");
        self.forward.insert(entity.to_owned(), id);
        self.reverse.push(entity.to_owned());
        Ok(id)
    }

    pub fn id(&self, entity: &str) -> Option<EntityId> {
        self.forward.get(entity).copied()
    }

    pub fn entity(&self, id: EntityId) -> Option<&str> {
        self.reverse.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.reverse.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reverse.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (EntityId, &str)> {
        self.reverse
            .iter()
            .enumerate()
            .map(|(i, e)| (i as EntityId, e.as_str()))
    }

    pub fn to_json(&self) -> String {
        let map: BTreeMap<EntityId, &str> = self.iter().collect();
        serde_json::to_string(&map).expect("string map serializes")
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(self.kind.file_name());
        fs::write(&path, self.to_json())
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    /// Reads back a map written by [`IdRegistry::save`]. Ids must be dense.
    pub fn load(kind: EntityKind, path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let map: BTreeMap<EntityId, String> =
            serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?;
        let mut registry = IdRegistry::new(kind);
        for (expected, (id, entity)) in map.into_iter().enumerate() {
            if id as usize != expected {
                return Err(Error::InvalidConfig(format!(
                    "{}: ids are not dense (missing {expected})",
                    path.display()
                )));
            }
            if registry.register(&entity)? != id {
                return Err(Error::InvalidConfig(format!(
                    "{}: entity {entity:?} listed twice",
                    path.display()
                )));
            }
        }
        Ok(registry)
    }
}

/// Manual identity merging: maps alias identities onto a canonical one.
///
/// Keys and values are compared lowercased. Chains (`a -> b`, `b -> c`) are
/// resolved on construction so canonicalization is idempotent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliasTable {
    canonical: HashMap<String, String>,
}

impl AliasTable {
    pub fn new<I, K, V>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let raw: HashMap<String, String> = pairs
            .into_iter()
            .map(|(k, v)| (k.as_ref().to_lowercase(), v.as_ref().to_lowercase()))
            .collect();
        let mut canonical = HashMap::with_capacity(raw.len());
        for start in raw.keys() {
            let mut current = start;
            let mut steps = 0;
            while let Some(next) = raw.get(current) {
                if next == current {
                    break;
                }
                current = next;
                steps += 1;
                if steps > raw.len() {
                    return Err(Error::InvalidConfig(format!(
                        "alias cycle involving {start:?}"
                    )));
                }
            }
            if current != start {
                canonical.insert(start.clone(), current.clone());
            }
        }
        Ok(AliasTable { canonical })
    }

    /// Loads a JSON object `{ "alias": "canonical", ... }`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let raw: BTreeMap<String, String> =
            serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?;
        AliasTable::new(raw)
    }

    pub fn canonicalize(&self, identity: &str) -> String {
        let lower = identity.to_lowercase();
        match self.canonical.get(&lower) {
            Some(c) => c.clone(),
            None => lower,
        }
    }

    pub fn len(&self) -> usize {
        self.canonical.len()
    }

    pub fn is_empty(&self) -> bool {
        self.canonical.is_empty()
    }
}

/// Developer identity key: lowercased email, or the name when the email is
/// empty, passed through the alias table.
pub fn identity_key(name: &str, email: &str, aliases: &AliasTable) -> String {
    let raw = if email.trim().is_empty() { name } else { email };
    aliases.canonicalize(raw.trim())
}

/// The three registries of a mining run.
#[derive(Debug, Clone)]
pub struct Registries {
    pub commits: IdRegistry,
    pub files: IdRegistry,
    pub users: IdRegistry,
    pub aliases: AliasTable,
}

impl Registries {
    pub fn new(aliases: AliasTable) -> Self {
        Registries {
            commits: IdRegistry::new(EntityKind::Commit),
            files: IdRegistry::new(EntityKind::File),
            users: IdRegistry::new(EntityKind::User),
            aliases,
        }
    }

    pub fn register_user(&mut self, name: &str, email: &str) -> Result<EntityId> {
        let key = identity_key(name, email, &self.aliases);
        self.users.register(&key)
    }

    /// Looks up an already registered developer.
    pub fn user_id(&self, name: &str, email: &str) -> Option<EntityId> {
        self.users.id(&identity_key(name, email, &self.aliases))
    }

    pub fn save_all(&self, dir: &Path) -> Result<()> {
        self.commits.save(dir)?;
        self.files.save(dir)?;
        self.users.save(dir)
    }
}
