use std::fmt::Write as _;

use serde_yaml::Value as Yaml;

use super::TableApiEndpoint;
use crate::schema::{ApiMapping, ApiParamDef, HttpMethod, ParamLocation, SchemaError};
use crate::value::Dtype;

fn yaml_scalar(s: &str) -> String {
    let plain = !s.is_empty()
        && !s.contains(": ")
        && !s.contains(" #")
        && !s.ends_with(':')
        && !s.starts_with(|c: char| "-?:,[]{}#&*!|>'\"%@`".contains(c) || c.is_whitespace())
        && !s.ends_with(char::is_whitespace)
        && !s.contains('\n')
        && s.parse::<f64>().is_err()
        && !matches!(
            s.to_ascii_lowercase().as_str(),
            "true" | "false" | "null" | "yes" | "no" | "on" | "off" | "~"
        );
    if plain {
        s.to_string()
    } else {
        serde_json::Value::String(s.to_string()).to_string()
    }
}

/// OpenAPI 3 document for one endpoint. Output depends only on the inputs.
pub fn emit_openapi(endpoint: &TableApiEndpoint, db_id: &str) -> String {
    let names: Vec<String> = endpoint.columns.iter().map(|(c, _)| c.to_ascii_lowercase()).collect();
    let description = format!(
        "The API '{}' handles requests regarding '{}', in the context of {}",
        endpoint.table,
        names.join(", "),
        db_id
    );
    let mut out = String::new();
    out.push_str("openapi: 3.0.0\n");
    out.push_str("info:\n");
    let _ = writeln!(out, "  title: {}", yaml_scalar(&format!("{db_id}.{}", endpoint.table)));
    out.push_str("  version: 1.0.0\n");
    out.push_str("paths:\n");
    let _ = writeln!(out, "  {}:", yaml_scalar(&endpoint.route));
    out.push_str("    post:\n");
    let _ = writeln!(out, "      description: {}", yaml_scalar(&description));
    out.push_str("      requestBody:\n");
    out.push_str("        required: false\n");
    out.push_str("        content:\n");
    out.push_str("          application/json:\n");
    out.push_str("            schema:\n");
    out.push_str("              type: object\n");
    out.push_str("              properties:\n");
    for (name, (_, dtype)) in names.iter().zip(&endpoint.columns) {
        let _ = writeln!(out, "                {}:", yaml_scalar(name));
        let _ = writeln!(out, "                  type: {}", dtype.json_type());
    }
    out.push_str("      responses:\n");
    out.push_str("        '200':\n");
    out.push_str("          description: Data returned.\n");
    out
}

fn parse_err(message: impl Into<String>) -> SchemaError {
    SchemaError::Parse {
        element: "OpenAPI document".into(),
        message: message.into(),
    }
}

fn dtype_of_json_type(t: &str) -> Option<Dtype> {
    match t {
        "integer" => Some(Dtype::Integer),
        "number" => Some(Dtype::Real),
        "string" => Some(Dtype::Text),
        "boolean" => Some(Dtype::Boolean),
        _ => None,
    }
}

/// Reads a single-path OpenAPI document into a POST mapping rooted at `base_url`.
pub fn mapping_from_openapi(document: &str, base_url: &str) -> Result<ApiMapping, SchemaError> {
    let doc: Yaml = serde_yaml::from_str(document).map_err(|e| parse_err(e.to_string()))?;
    let paths = doc
        .get("paths")
        .and_then(Yaml::as_mapping)
        .ok_or_else(|| parse_err("missing `paths`"))?;
    if paths.len() != 1 {
        return Err(parse_err(format!("expected one path, found {}", paths.len())));
    }
    let (route, item) = paths.iter().next().expect("one path");
    let route = route.as_str().ok_or_else(|| parse_err("path is not a string"))?;
    let op = item
        .get("post")
        .ok_or_else(|| parse_err("path has no `post` operation"))?;
    let schema = op
        .get("requestBody")
        .and_then(|b| b.get("content"))
        .and_then(|c| c.get("application/json"))
        .and_then(|j| j.get("schema"));
    let required: Vec<&str> = schema
        .and_then(|s| s.get("required"))
        .and_then(Yaml::as_sequence)
        .map(|s| s.iter().filter_map(Yaml::as_str).collect())
        .unwrap_or_default();
    let mut parameters = Vec::new();
    if let Some(props) = schema.and_then(|s| s.get("properties")).and_then(Yaml::as_mapping) {
        for (k, v) in props {
            let name = k.as_str().ok_or_else(|| parse_err("property name is not a string"))?;
            let t = v
                .get("type")
                .and_then(Yaml::as_str)
                .ok_or_else(|| parse_err(format!("property `{name}` has no type")))?;
            let dtype = dtype_of_json_type(t)
                .ok_or_else(|| parse_err(format!("property `{name}` has unsupported type `{t}`")))?;
            parameters.push(ApiParamDef {
                name: name.to_string(),
                required: required.contains(&name),
                dtype,
                location: ParamLocation::Body,
            });
        }
    }
    Ok(ApiMapping {
        entity: route.trim_start_matches('/').to_string(),
        url: format!("{}{}", base_url.trim_end_matches('/'), route),
        method: HttpMethod::Post,
        output_keys: parameters.iter().map(|p| p.name.clone()).collect(),
        parameters,
    })
}
