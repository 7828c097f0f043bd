//! Scalar APIs: lexical, numeric, and geospatial functions
//! usable in-process, as SQLite functions, or over HTTP.

pub mod geo;
pub mod lexical;
pub mod numeric;
pub mod server;

use std::fmt;

use thiserror::Error;

use crate::schema::{
    AbstractSchema, ApiMapping, ApiParamDef, AttributeDef, Direction, EntityDef, EntityKind, HttpMethod, ParamLocation,
};
use crate::value::{parse_numeric, Dtype, Value};

pub use geo::{Gazetteer, GeoField, GeoProvider, Place, RemoteGeo};
pub use server::{serve_scalars, ScalarHandler};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalarError {
    #[error("unknown scalar API `{0}`")]
    UnknownFunction(String),
    #[error("`{name}` expects {expected} argument(s), got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("bad argument for `{function}`: {message}")]
    BadArgument { function: String, message: String },
    #[error("place not found: {0}")]
    PlaceNotFound(String),
    #[error("geospatial provider failed: {0}")]
    Provider(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Lexical,
    Numeric,
    Geospatial,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Lexical => "lexical",
            Category::Numeric => "numeric",
            Category::Geospatial => "geospatial",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarParam {
    pub name: String,
    pub dtype: Dtype,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSignature {
    pub name: String,
    pub params: Vec<ScalarParam>,
    pub output: (String, Dtype),
    pub category: Category,
    pub description: &'static str,
}

/// (name, params, output, category, description)
type Row = (
    &'static str,
    &'static [(&'static str, Dtype)],
    (&'static str, Dtype),
    Category,
    &'static str,
);

const ROSTER: &[Row] = &[
    (
        "count_syllables",
        &[("string", Dtype::Text)],
        ("count", Dtype::Integer),
        Category::Lexical,
        "Counts the syllables in a string as the number of vowel groups per word.",
    ),
    (
        "string_length",
        &[("string", Dtype::Text)],
        ("length", Dtype::Integer),
        Category::Lexical,
        "Returns the number of characters in a string.",
    ),
    (
        "count_words",
        &[("string", Dtype::Text)],
        ("count", Dtype::Integer),
        Category::Lexical,
        "Counts the whitespace-separated words in a string.",
    ),
    (
        "starts_with_vowel",
        &[("string", Dtype::Text)],
        ("truth", Dtype::Boolean),
        Category::Lexical,
        "Determines whether the first letter of a string is a vowel.",
    ),
    (
        "reverse_string",
        &[("string", Dtype::Text)],
        ("reversed", Dtype::Text),
        Category::Lexical,
        "Returns the characters of a string in reverse order.",
    ),
    (
        "is_palindrome",
        &[("string", Dtype::Text)],
        ("truth", Dtype::Boolean),
        Category::Lexical,
        "Determines whether a string reads the same backwards, ignoring case and non-alphanumerics.",
    ),
    (
        "is_prime",
        &[("number", Dtype::Real)],
        ("truth", Dtype::Boolean),
        Category::Numeric,
        "Determines whether an input number is prime. Non-integers are truncated first.",
    ),
    (
        "is_square",
        &[("number", Dtype::Real)],
        ("truth", Dtype::Boolean),
        Category::Numeric,
        "Determines whether an input number is a perfect square. Non-integers are truncated first.",
    ),
    (
        "is_fibonacci",
        &[("number", Dtype::Real)],
        ("truth", Dtype::Boolean),
        Category::Numeric,
        "Determines whether an input number is a Fibonacci number. Non-integers are truncated first.",
    ),
    (
        "is_even",
        &[("number", Dtype::Real)],
        ("truth", Dtype::Boolean),
        Category::Numeric,
        "Determines whether an input number is even. Non-integers are truncated first.",
    ),
    (
        "digit_sum",
        &[("number", Dtype::Real)],
        ("sum", Dtype::Integer),
        Category::Numeric,
        "Sums the decimal digits of the absolute value of a number. Non-integers are truncated first.",
    ),
    (
        "is_divisible_by",
        &[("number", Dtype::Real), ("divisor", Dtype::Real)],
        ("truth", Dtype::Boolean),
        Category::Numeric,
        "Determines whether a number is divisible by a divisor. Both are truncated first; divisor 0 gives false.",
    ),
    (
        "get_latitude",
        &[("place", Dtype::Text)],
        ("latitude", Dtype::Real),
        Category::Geospatial,
        "Returns the latitude of a place in degrees.",
    ),
    (
        "get_longitude",
        &[("place", Dtype::Text)],
        ("longitude", Dtype::Real),
        Category::Geospatial,
        "Returns the longitude of a place in degrees.",
    ),
    (
        "get_country_of_place",
        &[("place", Dtype::Text)],
        ("country", Dtype::Text),
        Category::Geospatial,
        "Returns the country a place belongs to.",
    ),
    (
        "get_province_of_place",
        &[("place", Dtype::Text)],
        ("province", Dtype::Text),
        Category::Geospatial,
        "Returns the province or region a place belongs to.",
    ),
    (
        "distance_between",
        &[("place_a", Dtype::Text), ("place_b", Dtype::Text)],
        ("distance_km", Dtype::Real),
        Category::Geospatial,
        "Returns the great-circle distance between two places in kilometers.",
    ),
];

/// Signatures of every bundled scalar API, in roster order.
pub fn signatures() -> Vec<ScalarSignature> {
    ROSTER
        .iter()
        .map(|(name, params, output, category, description)| ScalarSignature {
            name: name.to_string(),
            params: params
                .iter()
                .map(|(n, d)| ScalarParam {
                    name: n.to_string(),
                    dtype: *d,
                })
                .collect(),
            output: (output.0.to_string(), output.1),
            category: *category,
            description,
        })
        .collect()
}

pub fn signature(name: &str) -> Option<ScalarSignature> {
    signatures().into_iter().find(|s| s.name.eq_ignore_ascii_case(name))
}

impl ScalarSignature {
    /// The API as an abstract-schema entity: inputs then output.
    pub fn entity(&self) -> EntityDef {
        let mut attributes: Vec<AttributeDef> = self
            .params
            .iter()
            .map(|p| AttributeDef {
                name: p.name.clone(),
                dtype: p.dtype,
                direction: Direction::Input,
                is_key: false,
                sql_type: None,
            })
            .collect();
        attributes.push(AttributeDef {
            name: self.output.0.clone(),
            dtype: self.output.1,
            direction: Direction::Output,
            is_key: false,
            sql_type: None,
        });
        EntityDef {
            name: self.name.clone(),
            kind: EntityKind::Api,
            attributes,
        }
    }

    /// HTTP mapping against a scalar server rooted at `base_url`.
    pub fn mapping(&self, base_url: &str) -> ApiMapping {
        let mut output_keys: Vec<String> = self.params.iter().map(|p| p.name.clone()).collect();
        output_keys.push(self.output.0.clone());
        ApiMapping {
            entity: self.name.clone(),
            url: format!("{}/{}", base_url.trim_end_matches('/'), self.name),
            method: HttpMethod::Post,
            parameters: self
                .params
                .iter()
                .map(|p| ApiParamDef {
                    name: p.name.clone(),
                    required: true,
                    dtype: p.dtype,
                    location: ParamLocation::Body,
                })
                .collect(),
            output_keys,
        }
    }

    /// Prompt-style description with the virtual-table DDL.
    pub fn describe(&self) -> String {
        let mut cols: Vec<String> = self
            .params
            .iter()
            .map(|p| format!("    {} {}", p.name, p.dtype.sql_name()))
            .collect();
        cols.push(format!("    {} {}", self.output.0, self.output.1.sql_name()));
        format!(
            "## {}\nDescription: {}\n```sql\nCREATE TABLE {} (\n{}\n);\n```\n",
            self.name,
            self.description,
            self.name,
            cols.join(",\n")
        )
    }
}

/// Adds every scalar API as an API entity and returns their mappings.
pub fn attach_scalar_apis(schema: &mut AbstractSchema, base_url: &str) -> Vec<ApiMapping> {
    signatures()
        .iter()
        .map(|s| {
            schema.entities.push(s.entity());
            s.mapping(base_url)
        })
        .collect()
}

/// Truncates toward zero; non-numeric text is an error.
pub(crate) fn to_integer(function: &str, v: &Value) -> Result<i64, ScalarError> {
    let bad = |m: String| ScalarError::BadArgument {
        function: function.to_string(),
        message: m,
    };
    match v {
        Value::Integer(i) => Ok(*i),
        Value::Boolean(b) => Ok(*b as i64),
        Value::Real(r) if r.is_nan() => Err(bad("NaN is not a number".into())),
        Value::Real(r) => Ok(r.trunc() as i64),
        Value::Text(s) => match parse_numeric(s.trim()) {
            Some(n) => to_integer(function, &n),
            None => Err(bad(format!("`{s}` is not a number"))),
        },
        Value::Null => Err(bad("null".into())),
    }
}

fn to_text(v: &Value) -> String {
    v.to_text().unwrap_or_default()
}

/// Evaluates a scalar API. Any null argument yields null.
pub fn call(name: &str, args: &[Value], geo: &dyn GeoProvider) -> Result<Value, ScalarError> {
    let sig = signature(name).ok_or_else(|| ScalarError::UnknownFunction(name.to_string()))?;
    if args.len() != sig.params.len() {
        return Err(ScalarError::Arity {
            name: sig.name,
            expected: sig.params.len(),
            got: args.len(),
        });
    }
    if args.iter().any(Value::is_null) {
        return Ok(Value::Null);
    }
    let name = sig.name.as_str();
    let int = |i: usize| to_integer(name, &args[i]);
    let text = |i: usize| to_text(&args[i]);
    Ok(match name {
        "count_syllables" => Value::Integer(lexical::count_syllables(&text(0)) as i64),
        "string_length" => Value::Integer(text(0).chars().count() as i64),
        "count_words" => Value::Integer(lexical::count_words(&text(0)) as i64),
        "starts_with_vowel" => Value::Boolean(lexical::starts_with_vowel(&text(0))),
        "reverse_string" => Value::Text(text(0).chars().rev().collect()),
        "is_palindrome" => Value::Boolean(lexical::is_palindrome(&text(0))),
        "is_prime" => Value::Boolean(numeric::is_prime(int(0)?)),
        "is_square" => Value::Boolean(numeric::is_square(int(0)?)),
        "is_fibonacci" => Value::Boolean(numeric::is_fibonacci(int(0)?)),
        "is_even" => Value::Boolean(int(0)? % 2 == 0),
        "digit_sum" => Value::Integer(numeric::digit_sum(int(0)?)),
        "is_divisible_by" => Value::Boolean(numeric::is_divisible_by(int(0)?, int(1)?)),
        "get_latitude" => geo.field(&text(0), GeoField::Latitude)?,
        "get_longitude" => geo.field(&text(0), GeoField::Longitude)?,
        "get_country_of_place" => geo.field(&text(0), GeoField::Country)?,
        "get_province_of_place" => geo.field(&text(0), GeoField::Province)?,
        "distance_between" => Value::Real(geo::distance_between(geo, &text(0), &text(1))?),
        _ => unreachable!("roster entry without implementation: {name}"),
    })
}

/// Like [`call`], but a missing place yields null, as in SQL contexts.
pub fn call_sql(name: &str, args: &[Value], geo: &dyn GeoProvider) -> Result<Value, ScalarError> {
    match call(name, args, geo) {
        Err(ScalarError::PlaceNotFound(_)) => Ok(Value::Null),
        other => other,
    }
}

/// The provider selected by `HQ_GEO_PROVIDER`, or the bundled gazetteer.
pub fn default_provider() -> Box<dyn GeoProvider> {
    match std::env::var("HQ_GEO_PROVIDER") {
        Ok(url) if !url.trim().is_empty() => Box::new(RemoteGeo::new(url.trim())),
        _ => Box::new(Gazetteer::bundled().clone()),
    }
}
