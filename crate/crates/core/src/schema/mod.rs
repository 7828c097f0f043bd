//! Abstract Schema, API mappings, and the derived relational view.
//!
//! The abstract schema describes every data source as an entity with typed
//! attributes, whether it is realized as a database table or as an HTTP API.
//! [`derive_relational_view`] turns it into a uniform set of `CREATE TABLE`
//! statements in which API entities become virtual tables.

pub mod ddl;

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::value::Dtype;

pub use ddl::{parse_ddl, ColumnDdl, ForeignKey, TableDdl};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemaError {
    #[error("parse error in {element}: {message}")]
    Parse { element: String, message: String },
    #[error("invalid {element}: {message}")]
    Validation { element: String, message: String },
    #[error("no API mapping for entity `{0}`")]
    MissingMapping(String),
}

fn invalid(element: impl Into<String>, message: impl Into<String>) -> SchemaError {
    SchemaError::Validation {
        element: element.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Table,
    Api,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Input,
    Output,
    Stored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeDef {
    pub name: String,
    #[serde(with = "dtype_lenient")]
    pub dtype: Dtype,
    pub direction: Direction,
    #[serde(default)]
    pub is_key: bool,
    /// Original SQL type spelling, kept so regenerated DDL reads like its source.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sql_type: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityDef {
    pub name: String,
    pub kind: EntityKind,
    pub attributes: Vec<AttributeDef>,
}

impl EntityDef {
    pub fn attribute(&self, name: &str) -> Option<&AttributeDef> {
        self.attributes.iter().find(|a| a.name.eq_ignore_ascii_case(name))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationshipDef {
    pub left: (String, String),
    pub right: (String, String),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AbstractSchema {
    pub entities: Vec<EntityDef>,
    #[serde(default)]
    pub relationships: Vec<RelationshipDef>,
}

impl AbstractSchema {
    pub fn entity(&self, name: &str) -> Option<&EntityDef> {
        self.entities.iter().find(|e| e.name.eq_ignore_ascii_case(name))
    }

    pub fn entity_mut(&mut self, name: &str) -> Option<&mut EntityDef> {
        self.entities.iter_mut().find(|e| e.name.eq_ignore_ascii_case(name))
    }

    /// Checks every structural invariant; returns the schema on success.
    pub fn validate(self) -> Result<Self, SchemaError> {
        if self.entities.is_empty() {
            return Err(invalid("schema", "no entities"));
        }
        let mut seen = HashSet::new();
        for e in &self.entities {
            if e.name.trim().is_empty() {
                return Err(invalid("entity", "empty entity name"));
            }
            if !seen.insert(e.name.to_ascii_lowercase()) {
                return Err(invalid(format!("entity `{}`", e.name), "duplicate entity name"));
            }
            if e.attributes.is_empty() {
                return Err(invalid(format!("entity `{}`", e.name), "no attributes"));
            }
            let mut attrs = HashSet::new();
            for a in &e.attributes {
                let element = format!("attribute `{}.{}`", e.name, a.name);
                if a.name.trim().is_empty() {
                    return Err(invalid(format!("entity `{}`", e.name), "empty attribute name"));
                }
                if !attrs.insert(a.name.to_ascii_lowercase()) {
                    return Err(invalid(element, "duplicate attribute name"));
                }
                let stored = a.direction == Direction::Stored;
                if stored != (e.kind == EntityKind::Table) {
                    return Err(invalid(
                        element,
                        "stored direction is required for table attributes and forbidden for API attributes",
                    ));
                }
            }
        }
        for r in &self.relationships {
            let mut dtypes = Vec::with_capacity(2);
            for (ent, attr) in [&r.left, &r.right] {
                let e = self.entity(ent).ok_or_else(|| {
                    invalid(
                        format!("relationship {}.{} = {}.{}", r.left.0, r.left.1, r.right.0, r.right.1),
                        format!("unknown entity `{ent}`"),
                    )
                })?;
                let a = e.attribute(attr).ok_or_else(|| {
                    invalid(
                        format!("relationship {}.{} = {}.{}", r.left.0, r.left.1, r.right.0, r.right.1),
                        format!("unknown attribute `{ent}.{attr}`"),
                    )
                })?;
                dtypes.push(a.dtype);
            }
            if dtypes[0] != dtypes[1] {
                return Err(invalid(
                    format!("relationship {}.{} = {}.{}", r.left.0, r.left.1, r.right.0, r.right.1),
                    format!("endpoint dtypes differ ({} vs {})", dtypes[0], dtypes[1]),
                ));
            }
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamLocation {
    Query,
    Body,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiParamDef {
    pub name: String,
    pub required: bool,
    #[serde(with = "dtype_lenient")]
    pub dtype: Dtype,
    #[serde(default = "default_location")]
    pub location: ParamLocation,
}

fn default_location() -> ParamLocation {
    ParamLocation::Query
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum HttpMethod {
    Get,
    Post,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiMapping {
    pub entity: String,
    pub url: String,
    pub method: HttpMethod,
    pub parameters: Vec<ApiParamDef>,
    pub output_keys: Vec<String>,
}

impl ApiMapping {
    pub fn parameter(&self, name: &str) -> Option<&ApiParamDef> {
        self.parameters.iter().find(|p| p.name.eq_ignore_ascii_case(name))
    }

    pub fn required_parameters(&self) -> impl Iterator<Item = &ApiParamDef> {
        self.parameters.iter().filter(|p| p.required)
    }

    /// Builds the API entity this mapping describes. Parameters that are also
    /// output keys become inputs; output-only keys become outputs.
    pub fn to_entity(&self, output_dtypes: &BTreeMap<String, Dtype>) -> EntityDef {
        let mut attributes: Vec<AttributeDef> = Vec::new();
        for key in &self.output_keys {
            let dtype = self
                .parameter(key)
                .map(|p| p.dtype)
                .or_else(|| output_dtypes.get(key).copied())
                .unwrap_or(Dtype::Text);
            attributes.push(AttributeDef {
                name: key.clone(),
                dtype,
                direction: if self.parameter(key).is_some() {
                    Direction::Input
                } else {
                    Direction::Output
                },
                is_key: false,
                sql_type: None,
            });
        }
        for p in &self.parameters {
            if !attributes.iter().any(|a| a.name.eq_ignore_ascii_case(&p.name)) {
                attributes.push(AttributeDef {
                    name: p.name.clone(),
                    dtype: p.dtype,
                    direction: Direction::Input,
                    is_key: false,
                    sql_type: None,
                });
            }
        }
        EntityDef {
            name: self.entity.clone(),
            kind: EntityKind::Api,
            attributes,
        }
    }
}

/// A table in the relational view, base or virtual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewTable {
    pub name: String,
    pub columns: Vec<(String, Dtype)>,
    pub is_virtual: bool,
}

impl ViewTable {
    pub fn column(&self, name: &str) -> Option<&(String, Dtype)> {
        self.columns.iter().find(|(n, _)| n.eq_ignore_ascii_case(name))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualTableDef {
    pub name: String,
    pub columns: Vec<(String, Dtype)>,
    pub input_columns: Vec<String>,
    pub mapping: ApiMapping,
}

impl VirtualTableDef {
    pub fn is_input(&self, column: &str) -> bool {
        self.input_columns.iter().any(|c| c.eq_ignore_ascii_case(column))
    }

    pub fn column_dtype(&self, column: &str) -> Option<Dtype> {
        self.columns
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(column))
            .map(|(_, d)| *d)
    }

    /// Input columns whose API parameter is required.
    pub fn required_inputs(&self) -> Vec<String> {
        self.columns
            .iter()
            .filter(|(n, _)| self.is_input(n))
            .filter(|(n, _)| self.mapping.parameter(n).is_some_and(|p| p.required))
            .map(|(n, _)| n.clone())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationalView {
    pub ddl_text: String,
    pub tables: Vec<ViewTable>,
    pub virtual_tables: BTreeMap<String, VirtualTableDef>,
}

impl RelationalView {
    pub fn table(&self, name: &str) -> Option<&ViewTable> {
        self.tables.iter().find(|t| t.name.eq_ignore_ascii_case(name))
    }

    pub fn virtual_table(&self, name: &str) -> Option<&VirtualTableDef> {
        self.virtual_tables
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v)
    }

    pub fn is_virtual(&self, name: &str) -> bool {
        self.virtual_table(name).is_some()
    }
}

pub fn load_abstract_schema(document: &str) -> Result<AbstractSchema, SchemaError> {
    let schema: AbstractSchema = serde_json::from_str(document).map_err(|e| SchemaError::Parse {
        element: "abstract schema".into(),
        message: e.to_string(),
    })?;
    schema.validate()
}

pub fn load_api_mappings(document: &str, schema: &AbstractSchema) -> Result<Vec<ApiMapping>, SchemaError> {
    let mappings: Vec<ApiMapping> = serde_json::from_str(document).map_err(|e| SchemaError::Parse {
        element: "API mappings".into(),
        message: e.to_string(),
    })?;
    for m in &mappings {
        validate_mapping(m, schema)?;
    }
    Ok(mappings)
}

pub fn validate_mapping(m: &ApiMapping, schema: &AbstractSchema) -> Result<(), SchemaError> {
    let element = format!("mapping `{}`", m.entity);
    let entity = schema
        .entity(&m.entity)
        .ok_or_else(|| invalid(&element, format!("unknown entity `{}`", m.entity)))?;
    if entity.kind != EntityKind::Api {
        return Err(invalid(&element, "entity is a table, not an API"));
    }
    if !(m.url.starts_with("http://") || m.url.starts_with("https://")) {
        return Err(invalid(
            &element,
            format!("url `{}` is not an absolute HTTP URL", m.url),
        ));
    }
    let mut names = HashSet::new();
    for p in &m.parameters {
        if !names.insert(p.name.to_ascii_lowercase()) {
            return Err(invalid(&element, format!("duplicate parameter `{}`", p.name)));
        }
    }
    for a in entity.attributes.iter().filter(|a| a.direction == Direction::Input) {
        if m.parameter(&a.name).is_none() {
            return Err(invalid(
                &element,
                format!("input attribute `{}` has no parameter", a.name),
            ));
        }
    }
    for k in &m.output_keys {
        if entity.attribute(k).is_none() {
            return Err(invalid(
                &element,
                format!("output key `{k}` is not an attribute of `{}`", entity.name),
            ));
        }
    }
    Ok(())
}

fn render_create_table(out: &mut String, entity: &EntityDef, fks: &[&RelationshipDef]) {
    let keys: Vec<&AttributeDef> = entity.attributes.iter().filter(|a| a.is_key).collect();
    let _ = write!(out, "CREATE TABLE {} (", entity.name);
    for (i, a) in entity.attributes.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let ty = match (&a.sql_type, entity.kind) {
            (Some(t), EntityKind::Table) if !t.is_empty() => t.clone(),
            _ => a.dtype.sql_name().to_string(),
        };
        let _ = write!(out, "{} {}", a.name, ty);
        if a.is_key && keys.len() == 1 {
            out.push_str(" PRIMARY KEY");
        }
    }
    if keys.len() > 1 {
        let names: Vec<&str> = keys.iter().map(|a| a.name.as_str()).collect();
        let _ = write!(out, ", PRIMARY KEY ({})", names.join(", "));
    }
    for r in fks {
        let _ = write!(
            out,
            ", FOREIGN KEY ({}) REFERENCES {}({})",
            r.left.1, r.right.0, r.right.1
        );
    }
    out.push_str(");\n");
}

/// Derives the DB Table View. Pure and deterministic in its inputs.
pub fn derive_relational_view(schema: &AbstractSchema, mappings: &[ApiMapping]) -> Result<RelationalView, SchemaError> {
    let mut ddl_text = String::new();
    let mut tables = Vec::with_capacity(schema.entities.len());
    let mut virtual_tables = BTreeMap::new();
    for entity in &schema.entities {
        let fks: Vec<&RelationshipDef> = schema
            .relationships
            .iter()
            .filter(|r| {
                entity.kind == EntityKind::Table
                    && r.left.0.eq_ignore_ascii_case(&entity.name)
                    && schema.entity(&r.right.0).is_some_and(|e| e.kind == EntityKind::Table)
            })
            .collect();
        render_create_table(&mut ddl_text, entity, &fks);
        let columns: Vec<(String, Dtype)> = entity.attributes.iter().map(|a| (a.name.clone(), a.dtype)).collect();
        if entity.kind == EntityKind::Api {
            let mut found = mappings.iter().filter(|m| m.entity.eq_ignore_ascii_case(&entity.name));
            let mapping = found
                .next()
                .ok_or_else(|| SchemaError::MissingMapping(entity.name.clone()))?;
            if found.next().is_some() {
                return Err(invalid(
                    format!("entity `{}`", entity.name),
                    "more than one API mapping",
                ));
            }
            virtual_tables.insert(
                entity.name.clone(),
                VirtualTableDef {
                    name: entity.name.clone(),
                    columns: columns.clone(),
                    input_columns: entity
                        .attributes
                        .iter()
                        .filter(|a| a.direction == Direction::Input)
                        .map(|a| a.name.clone())
                        .collect(),
                    mapping: mapping.clone(),
                },
            );
        }
        tables.push(ViewTable {
            name: entity.name.clone(),
            columns,
            is_virtual: entity.kind == EntityKind::Api,
        });
    }
    Ok(RelationalView {
        ddl_text,
        tables,
        virtual_tables,
    })
}

/// One table entity per CREATE TABLE; foreign keys become relationships.
pub fn extract_abstract_from_ddl(ddl_text: &str) -> Result<AbstractSchema, SchemaError> {
    let tables = parse_ddl(ddl_text)?;
    abstract_from_tables(&tables)
}

pub fn abstract_from_tables(tables: &[TableDdl]) -> Result<AbstractSchema, SchemaError> {
    let mut schema = AbstractSchema::default();
    for t in tables {
        schema.entities.push(EntityDef {
            name: t.name.clone(),
            kind: EntityKind::Table,
            attributes: t
                .columns
                .iter()
                .map(|c| AttributeDef {
                    name: c.name.clone(),
                    dtype: c.dtype,
                    direction: Direction::Stored,
                    is_key: t.primary_key.iter().any(|k| k.eq_ignore_ascii_case(&c.name)),
                    sql_type: Some(c.sql_type.clone()).filter(|s| !s.is_empty()),
                })
                .collect(),
        });
    }
    for t in tables {
        for fk in &t.foreign_keys {
            let referred = if fk.referred_columns.is_empty() {
                tables
                    .iter()
                    .find(|o| o.name.eq_ignore_ascii_case(&fk.foreign_table))
                    .map(|o| o.primary_key.clone())
                    .unwrap_or_default()
            } else {
                fk.referred_columns.clone()
            };
            if referred.len() != fk.columns.len() {
                return Err(invalid(
                    format!("foreign key on `{}`", t.name),
                    "column count does not match referenced key",
                ));
            }
            for (c, rc) in fk.columns.iter().zip(referred) {
                schema.relationships.push(RelationshipDef {
                    left: (t.name.clone(), c.clone()),
                    right: (fk.foreign_table.clone(), rc),
                });
            }
        }
    }
    schema.validate()
}

mod dtype_lenient {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::value::Dtype;

    pub fn serialize<S: Serializer>(d: &Dtype, s: S) -> Result<S::Ok, S::Error> {
        d.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Dtype, D::Error> {
        let s = String::deserialize(d)?;
        match s.to_ascii_lowercase().as_str() {
            "string" => Ok(Dtype::Text),
            "number" => Ok(Dtype::Real),
            other => Dtype::from_sql_type(other).ok_or_else(|| D::Error::custom(format!("unknown dtype `{s}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const POKER_SCHEMA: &str = r#"{
      "entities": [
        {"name": "people", "kind": "table", "attributes": [
          {"name": "People_ID", "dtype": "integer", "direction": "stored", "is_key": true},
          {"name": "Nationality", "dtype": "text", "direction": "stored", "is_key": false},
          {"name": "Name", "dtype": "text", "direction": "stored", "is_key": false}
        ]},
        {"name": "count_syllables", "kind": "api", "attributes": [
          {"name": "string", "dtype": "text", "direction": "input", "is_key": false},
          {"name": "count", "dtype": "integer", "direction": "output", "is_key": false}
        ]},
        {"name": "is_fibonacci", "kind": "api", "attributes": [
          {"name": "number", "dtype": "integer", "direction": "input", "is_key": false},
          {"name": "truth", "dtype": "boolean", "direction": "output", "is_key": false}
        ]}
      ],
      "relationships": [
        {"left": ["people", "Name"], "right": ["count_syllables", "string"]},
        {"left": ["count_syllables", "count"], "right": ["is_fibonacci", "number"]}
      ]
    }"#;

    const POKER_MAPPINGS: &str = r#"[
      {"entity": "count_syllables", "url": "http://localhost:5001/count_syllables", "method": "POST",
       "parameters": [{"name": "string", "required": true, "dtype": "text", "location": "query"}],
       "output_keys": ["string", "count"]},
      {"entity": "is_fibonacci", "url": "http://localhost:5001/is_fibonacci", "method": "POST",
       "parameters": [{"name": "number", "required": false, "dtype": "float", "location": "query"},
                      {"name": "truth", "required": false, "dtype": "boolean", "location": "query"}],
       "output_keys": ["number", "truth"]}
    ]"#;

    #[test]
    fn loads_poker_schema() {
        let s = load_abstract_schema(POKER_SCHEMA).unwrap();
        assert_eq!(s.entities.len(), 3);
        assert_eq!(s.relationships.len(), 2);
    }

    #[test]
    fn empty_schema_rejected() {
        assert!(matches!(
            load_abstract_schema(r#"{"entities": [], "relationships": []}"#),
            Err(SchemaError::Validation { .. })
        ));
    }

    #[test]
    fn dangling_relationship_names_entity() {
        let doc = POKER_SCHEMA.replace(r#"["is_fibonacci", "number"]"#, r#"["ghost", "number"]"#);
        let err = load_abstract_schema(&doc).unwrap_err();
        assert!(err.to_string().contains("ghost"), "{err}");
    }

    #[test]
    fn dtype_mismatch_rejected() {
        let doc = POKER_SCHEMA.replace(
            r#"{"left": ["people", "Name"], "right": ["count_syllables", "string"]}"#,
            r#"{"left": ["people", "People_ID"], "right": ["count_syllables", "string"]}"#,
        );
        assert!(load_abstract_schema(&doc).is_err());
    }

    #[test]
    fn mappings_load_with_float_alias() {
        let s = load_abstract_schema(POKER_SCHEMA).unwrap();
        let m = load_api_mappings(POKER_MAPPINGS, &s).unwrap();
        assert_eq!(m[1].parameters[0].dtype, Dtype::Real);
        assert_eq!(m[1].method, HttpMethod::Post);
        assert_eq!(m[1].output_keys, vec!["number", "truth"]);
    }

    #[test]
    fn mapping_errors() {
        let s = load_abstract_schema(POKER_SCHEMA).unwrap();
        let bad_entity = POKER_MAPPINGS.replace("\"entity\": \"is_fibonacci\"", "\"entity\": \"nonexistent\"");
        assert!(load_api_mappings(&bad_entity, &s)
            .unwrap_err()
            .to_string()
            .contains("nonexistent"));
        let bad_key = POKER_MAPPINGS.replace("[\"number\", \"truth\"]", "[\"number\", \"verdict\"]");
        assert!(matches!(
            load_api_mappings(&bad_key, &s),
            Err(SchemaError::Validation { .. })
        ));
        let no_param = POKER_MAPPINGS.replace(
            r#"[{"name": "string", "required": true, "dtype": "text", "location": "query"}]"#,
            "[]",
        );
        assert!(load_api_mappings(&no_param, &s).is_err());
    }

    #[test]
    fn view_for_poker_schema() {
        let s = load_abstract_schema(POKER_SCHEMA).unwrap();
        let m = load_api_mappings(POKER_MAPPINGS, &s).unwrap();
        let v = derive_relational_view(&s, &m).unwrap();
        assert!(v
            .ddl_text
            .contains("CREATE TABLE is_fibonacci (number INTEGER, truth BOOLEAN)"));
        let vt = v.virtual_table("IS_FIBONACCI").unwrap();
        assert_eq!(vt.input_columns, vec!["number"]);
        assert!(!v.is_virtual("people"));
        assert_eq!(v.virtual_tables.len(), 2);
        let again = derive_relational_view(&s, &m).unwrap();
        assert_eq!(again.ddl_text, v.ddl_text);
    }

    #[test]
    fn missing_mapping() {
        let s = load_abstract_schema(POKER_SCHEMA).unwrap();
        let m = load_api_mappings(POKER_MAPPINGS, &s).unwrap();
        assert_eq!(
            derive_relational_view(&s, &m[..1]),
            Err(SchemaError::MissingMapping("is_fibonacci".into()))
        );
    }

    #[test]
    fn museum_ddl_rendering() {
        let s = extract_abstract_from_ddl(ddl::tests::MUSEUM_VISIT).unwrap();
        assert_eq!(s.entities.len(), 3);
        assert_eq!(s.relationships.len(), 2);
        let v = derive_relational_view(&s, &[]).unwrap();
        assert!(
            v.ddl_text.contains(
                "CREATE TABLE museum (Museum_ID int PRIMARY KEY, Name text, Num_of_Staff int, Open_Year text)"
            ),
            "{}",
            v.ddl_text
        );
        assert!(v.virtual_tables.is_empty());
    }

    #[test]
    fn single_table_no_fks() {
        let s = extract_abstract_from_ddl("CREATE TABLE t (a int, b text)").unwrap();
        assert_eq!((s.entities.len(), s.relationships.len()), (1, 0));
    }

    #[test]
    fn direction_inference_from_mapping() {
        let s = load_abstract_schema(POKER_SCHEMA).unwrap();
        let m = load_api_mappings(POKER_MAPPINGS, &s).unwrap();
        let e = m[1].to_entity(&BTreeMap::new());
        assert_eq!(e.attribute("number").unwrap().direction, Direction::Input);
        assert_eq!(e.attribute("truth").unwrap().direction, Direction::Input);
        let e = m[0].to_entity(&BTreeMap::from([("count".to_string(), Dtype::Integer)]));
        assert_eq!(e.attribute("count").unwrap().direction, Direction::Output);
        assert_eq!(e.attribute("count").unwrap().dtype, Dtype::Integer);
    }
}
