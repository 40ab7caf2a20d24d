//! Schema descriptors and CSV ingestion into a multi-relational database.
//!
//! A descriptor declares entity types, binary relationship types (each read
//! from two columns of a CSV file) and optional attribute tables. Every column
//! of an attribute table becomes an entity type of its own, linked to the
//! table's key entity by a one-to-many relationship type, so attributes and
//! entities are handled uniformly downstream.

use std::collections::{HashMap, HashSet};
use std::io::Read;
use std::path::{Path, PathBuf};

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationshipType {
    pub name: String,
    pub left: String,
    pub right: String,
    pub file: String,
    pub left_column: String,
    pub right_column: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeTable {
    pub file: String,
    pub key_column: String,
    pub key_entity: String,
    pub attribute_columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct EntityTypeDecl {
    name: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDescriptor {
    entity_types: Vec<EntityTypeDecl>,
    #[serde(default)]
    relationship_types: Vec<RelationshipType>,
    #[serde(default)]
    attribute_tables: Vec<AttributeTable>,
}

#[derive(Serialize)]
struct RawDescriptorOut<'a> {
    entity_types: Vec<EntityTypeDecl>,
    relationship_types: &'a [RelationshipType],
}

/// A validated schema. Attribute tables have already been expanded into
/// `entity_types` and `relationship_types`; the original table declarations
/// are kept in `attribute_tables` for reference only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaDescriptor {
    pub entity_types: Vec<String>,
    pub relationship_types: Vec<RelationshipType>,
    pub attribute_tables: Vec<AttributeTable>,
}

fn table_name(file: &str) -> String {
    Path::new(file)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| file.to_string())
}

/// Parses and validates a JSON schema descriptor.
pub fn parse_schema(text: &str) -> Result<SchemaDescriptor> {
    let raw: RawDescriptor = serde_json::from_str(text)?;
    SchemaDescriptor::from_parts(
        raw.entity_types.into_iter().map(|e| e.name).collect(),
        raw.relationship_types,
        raw.attribute_tables,
    )
}

impl SchemaDescriptor {
    pub fn from_parts(
        entity_types: Vec<String>,
        relationship_types: Vec<RelationshipType>,
        attribute_tables: Vec<AttributeTable>,
    ) -> Result<Self> {
        let mut names: IndexSet<String> = IndexSet::new();
        for name in entity_types {
            if name.is_empty() {
                return Err(Error::InvalidSchema("empty entity type name".into()));
            }
            if !names.insert(name.clone()) {
                return Err(Error::InvalidSchema(format!(
                    "duplicate entity type `{name}`"
                )));
            }
        }
        let declared = names.clone();

        let mut relationships = relationship_types;
        for table in &attribute_tables {
            if !declared.contains(&table.key_entity) {
                return Err(Error::InvalidSchema(format!(
                    "attribute table {}: key entity `{}` is not declared",
                    table.file, table.key_entity
                )));
            }
            for column in &table.attribute_columns {
                if column == &table.key_column {
                    return Err(Error::InvalidSchema(format!(
                        "attribute table {}: key column `{column}` listed as an attribute",
                        table.file
                    )));
                }
                let mut entity = column.clone();
                if names.contains(&entity) {
                    entity = format!("{}.{}", table_name(&table.file), column);
                    if names.contains(&entity) {
                        return Err(Error::InvalidSchema(format!(
                            "attribute column `{column}` collides with entity type `{entity}`"
                        )));
                    }
                }
                names.insert(entity.clone());
                relationships.push(RelationshipType {
                    name: format!("{}.{}", table.key_entity, entity),
                    left: table.key_entity.clone(),
                    right: entity,
                    file: table.file.clone(),
                    left_column: table.key_column.clone(),
                    right_column: column.clone(),
                });
            }
        }

        let mut rel_names = HashSet::new();
        let mut pairs = HashSet::new();
        for rel in &relationships {
            if !rel_names.insert(rel.name.as_str()) {
                return Err(Error::InvalidSchema(format!(
                    "duplicate relationship type `{}`",
                    rel.name
                )));
            }
            let left = names.get_index_of(&rel.left).ok_or_else(|| {
                Error::InvalidSchema(format!(
                    "relationship `{}` references undeclared entity type `{}`",
                    rel.name, rel.left
                ))
            })?;
            let right = names.get_index_of(&rel.right).ok_or_else(|| {
                Error::InvalidSchema(format!(
                    "relationship `{}` references undeclared entity type `{}`",
                    rel.name, rel.right
                ))
            })?;
            if left == right {
                return Err(Error::InvalidSchema(format!(
                    "relationship `{}` joins entity type `{}` to itself",
                    rel.name, rel.left
                )));
            }
            if !pairs.insert((left.min(right), left.max(right))) {
                return Err(Error::InvalidSchema(format!(
                    "more than one relationship type between `{}` and `{}`",
                    rel.left, rel.right
                )));
            }
        }

        Ok(SchemaDescriptor {
            entity_types: names.into_iter().collect(),
            relationship_types: relationships,
            attribute_tables,
        })
    }

    pub fn entity_index(&self, name: &str) -> Option<usize> {
        self.entity_types.iter().position(|n| n == name)
    }

    /// Serialises the expanded schema (attribute tables already turned into
    /// plain relationship types).
    pub fn to_json(&self) -> String {
        let out = RawDescriptorOut {
            entity_types: self
                .entity_types
                .iter()
                .map(|name| EntityTypeDecl { name: name.clone() })
                .collect(),
            relationship_types: &self.relationship_types,
        };
        serde_json::to_string_pretty(&out).expect("schema serialises")
    }
}

/// Where ingestion reads its tables from.
pub trait TableSource {
    fn open(&self, file: &str) -> Result<Box<dyn Read + '_>>;

    /// Display path used in error messages.
    fn describe(&self, file: &str) -> PathBuf {
        PathBuf::from(file)
    }
}

/// Tables resolved relative to a directory (typically the schema's).
#[derive(Debug, Clone)]
pub struct DirSource {
    root: PathBuf,
}

impl DirSource {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DirSource { root: root.into() }
    }
}

impl TableSource for DirSource {
    fn open(&self, file: &str) -> Result<Box<dyn Read + '_>> {
        let path = self.describe(file);
        let f = std::fs::File::open(&path).map_err(|e| Error::io(path, e))?;
        Ok(Box::new(std::io::BufReader::new(f)))
    }

    fn describe(&self, file: &str) -> PathBuf {
        self.root.join(file)
    }
}

/// In-memory tables keyed by file name.
#[derive(Debug, Clone, Default)]
pub struct MemorySource {
    files: HashMap<String, String>,
}

impl MemorySource {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, file: &str, contents: &str) -> Self {
        self.files.insert(file.to_string(), contents.to_string());
        self
    }
}

impl TableSource for MemorySource {
    fn open(&self, file: &str) -> Result<Box<dyn Read + '_>> {
        match self.files.get(file) {
            Some(text) => Ok(Box::new(text.as_bytes())),
            None => Err(Error::io(
                file,
                std::io::Error::new(std::io::ErrorKind::NotFound, "no such table"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityDomain {
    pub name: String,
    /// Distinct labels in first-appearance order.
    pub labels: IndexSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationshipSet {
    pub name: String,
    pub left: usize,
    pub right: usize,
    /// Distinct (left label index, right label index) pairs, first-appearance order.
    pub instances: IndexSet<(u32, u32)>,
}

/// Entity domains plus binary relationship sets between distinct entity types.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MultiRelationalDatabase {
    entity_types: Vec<EntityDomain>,
    relationships: Vec<RelationshipSet>,
}

impl MultiRelationalDatabase {
    pub fn new<S: Into<String>>(entity_types: impl IntoIterator<Item = S>) -> Result<Self> {
        let mut db = MultiRelationalDatabase::default();
        for name in entity_types {
            let name = name.into();
            if db.entity_types.iter().any(|e| e.name == name) {
                return Err(Error::InvalidDatabase(format!(
                    "duplicate entity type `{name}`"
                )));
            }
            db.entity_types.push(EntityDomain {
                name,
                labels: IndexSet::new(),
            });
        }
        Ok(db)
    }

    pub fn add_relationship_type(
        &mut self,
        name: impl Into<String>,
        left: usize,
        right: usize,
    ) -> Result<usize> {
        let name = name.into();
        let k = self.entity_types.len();
        if left >= k || right >= k {
            return Err(Error::InvalidDatabase(format!(
                "relationship `{name}` references an unknown entity type"
            )));
        }
        if left == right {
            return Err(Error::InvalidDatabase(format!(
                "relationship `{name}` joins an entity type to itself"
            )));
        }
        let clash = self.relationships.iter().any(|r| {
            r.name == name || (r.left.min(r.right), r.left.max(r.right)) == (left.min(right), left.max(right))
        });
        if clash {
            return Err(Error::InvalidDatabase(format!(
                "relationship `{name}` duplicates an existing name or entity type pair"
            )));
        }
        self.relationships.push(RelationshipSet {
            name,
            left,
            right,
            instances: IndexSet::new(),
        });
        Ok(self.relationships.len() - 1)
    }

    /// Adds `label` to the domain of `entity_type` and returns its index.
    pub fn add_entity(&mut self, entity_type: usize, label: &str) -> u32 {
        let labels = &mut self.entity_types[entity_type].labels;
        match labels.get_index_of(label) {
            Some(i) => i as u32,
            None => {
                labels.insert(label.to_string());
                (labels.len() - 1) as u32
            }
        }
    }

    /// Records a relationship instance, adding both labels to their domains.
    /// Returns `false` when the instance was already present.
    pub fn add_instance(&mut self, relationship: usize, left: &str, right: &str) -> bool {
        let (lt, rt) = {
            let r = &self.relationships[relationship];
            (r.left, r.right)
        };
        let l = self.add_entity(lt, left);
        let r = self.add_entity(rt, right);
        self.relationships[relationship].instances.insert((l, r))
    }

    pub fn entity_types(&self) -> &[EntityDomain] {
        &self.entity_types
    }

    pub fn relationships(&self) -> &[RelationshipSet] {
        &self.relationships
    }

    pub fn instance_count(&self) -> usize {
        self.relationships.iter().map(|r| r.instances.len()).sum()
    }

    /// Checks referential integrity of every relationship instance.
    pub fn validate(&self) -> Result<()> {
        for rel in &self.relationships {
            let nl = self.entity_types[rel.left].labels.len() as u32;
            let nr = self.entity_types[rel.right].labels.len() as u32;
            if let Some(&(l, r)) = rel.instances.iter().find(|&&(l, r)| l >= nl || r >= nr) {
                return Err(Error::InvalidDatabase(format!(
                    "relationship `{}` instance ({l}, {r}) references a missing entity",
                    rel.name
                )));
            }
        }
        Ok(())
    }
}

struct Table {
    headers: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

fn read_table(source: &dyn TableSource, file: &str) -> Result<Table> {
    let path = source.describe(file);
    let reader = source.open(file)?;
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers = csv
        .headers()
        .map_err(|e| Error::Csv {
            path: path.clone(),
            source: e,
        })?
        .iter()
        .map(str::to_string)
        .collect();
    let rows = csv
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::Csv { path, source: e })?;
    Ok(Table { headers, rows })
}

fn column(table: &Table, source: &dyn TableSource, file: &str, name: &str) -> Result<usize> {
    table
        .headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::MissingColumn {
            path: source.describe(file),
            column: name.to_string(),
        })
}

/// Reads every relationship type's table and builds the database.
///
/// Labels are compared byte-wise; empty cells are skipped, so a row with one
/// empty side still registers the other side's entity but no instance.
pub fn ingest(schema: &SchemaDescriptor, source: &dyn TableSource) -> Result<MultiRelationalDatabase> {
    let mut db = MultiRelationalDatabase::new(schema.entity_types.iter().cloned())?;
    let mut tables: HashMap<&str, Table> = HashMap::new();
    for rel in &schema.relationship_types {
        let left = schema
            .entity_index(&rel.left)
            .ok_or_else(|| Error::InvalidSchema(format!("unknown entity type `{}`", rel.left)))?;
        let right = schema
            .entity_index(&rel.right)
            .ok_or_else(|| Error::InvalidSchema(format!("unknown entity type `{}`", rel.right)))?;
        let id = db.add_relationship_type(rel.name.clone(), left, right)?;

        if !tables.contains_key(rel.file.as_str()) {
            let table = read_table(source, &rel.file)?;
            if table.rows.is_empty() {
                log::warn!("{}: table has no rows", source.describe(&rel.file).display());
            }
            tables.insert(rel.file.as_str(), table);
        }
        let table = &tables[rel.file.as_str()];
        let lc = column(table, source, &rel.file, &rel.left_column)?;
        let rc = column(table, source, &rel.file, &rel.right_column)?;
        for row in &table.rows {
            let l = row.get(lc).unwrap_or("");
            let r = row.get(rc).unwrap_or("");
            match (l.is_empty(), r.is_empty()) {
                (false, false) => {
                    db.add_instance(id, l, r);
                }
                (false, true) => {
                    db.add_entity(left, l);
                }
                (true, false) => {
                    db.add_entity(right, r);
                }
                (true, true) => {}
            }
        }
    }
    Ok(db)
}

/// Parses `schema_path` and ingests its tables relative to the schema's directory.
pub fn load(schema_path: &Path) -> Result<(SchemaDescriptor, MultiRelationalDatabase)> {
    let text = std::fs::read_to_string(schema_path).map_err(|e| Error::io(schema_path, e))?;
    let schema = parse_schema(&text)?;
    let dir = schema_path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| Path::new("."));
    let db = ingest(&schema, &DirSource::new(dir))?;
    Ok((schema, db))
}
