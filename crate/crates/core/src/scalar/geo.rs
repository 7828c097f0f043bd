//! Place lookups for the geospatial APIs.
//!
//! The bundled gazetteer is a tab-separated file with one record per line
//! (`name, latitude, longitude, country, province`) and two-field alias lines
//! (`alias, canonical name`). Names match after trimming, whitespace
//! collapsing, and ASCII case folding.

use std::collections::HashMap;
use std::sync::OnceLock;
use std::time::Duration;

use serde_json::json;

use super::ScalarError;
use crate::value::Value;

const BUNDLED: &str = include_str!("../../data/gazetteer.tsv");
const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Place {
    pub name: String,
    pub latitude: f64,
    pub longitude: f64,
    pub country: String,
    pub province: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeoField {
    Latitude,
    Longitude,
    Country,
    Province,
}

impl GeoField {
    pub fn api_name(self) -> &'static str {
        match self {
            GeoField::Latitude => "get_latitude",
            GeoField::Longitude => "get_longitude",
            GeoField::Country => "get_country_of_place",
            GeoField::Province => "get_province_of_place",
        }
    }

    pub fn output_key(self) -> &'static str {
        match self {
            GeoField::Latitude => "latitude",
            GeoField::Longitude => "longitude",
            GeoField::Country => "country",
            GeoField::Province => "province",
        }
    }
}

pub trait GeoProvider: Send + Sync {
    /// One attribute of a place. Unknown places are `PlaceNotFound`.
    fn field(&self, place: &str, field: GeoField) -> Result<Value, ScalarError>;
}

pub fn normalize(name: &str) -> String {
    name.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_ascii_lowercase()
}

#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    records: Vec<Place>,
    index: HashMap<String, usize>,
}

impl Gazetteer {
    pub fn parse(text: &str) -> Result<Gazetteer, String> {
        let mut g = Gazetteer::default();
        let mut aliases = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let lineno = lineno + 1;
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            match fields.len() {
                2 => aliases.push((lineno, fields[0], fields[1])),
                5 => {
                    let num =
                        |s: &str, what: &str| s.parse::<f64>().map_err(|_| format!("line {lineno}: bad {what} `{s}`"));
                    let latitude = num(fields[1], "latitude")?;
                    let longitude = num(fields[2], "longitude")?;
                    if !(-90.0..=90.0).contains(&latitude) {
                        return Err(format!("line {lineno}: latitude {latitude} out of range"));
                    }
                    if !(longitude > -180.0 && longitude <= 180.0) {
                        return Err(format!("line {lineno}: longitude {longitude} out of range"));
                    }
                    let key = normalize(fields[0]);
                    if g.index.contains_key(&key) {
                        return Err(format!("line {lineno}: duplicate place `{}`", fields[0]));
                    }
                    g.index.insert(key, g.records.len());
                    g.records.push(Place {
                        name: fields[0].to_string(),
                        latitude,
                        longitude,
                        country: fields[3].to_string(),
                        province: Some(fields[4].to_string()).filter(|p| !p.is_empty()),
                    });
                }
                n => return Err(format!("line {lineno}: expected 2 or 5 fields, found {n}")),
            }
        }
        for (lineno, alias, canonical) in aliases {
            let target = *g
                .index
                .get(&normalize(canonical))
                .ok_or_else(|| format!("line {lineno}: alias target `{canonical}` is unknown"))?;
            let key = normalize(alias);
            if g.index.contains_key(&key) {
                return Err(format!("line {lineno}: duplicate place `{alias}`"));
            }
            g.index.insert(key, target);
        }
        Ok(g)
    }

    pub fn bundled() -> &'static Gazetteer {
        static G: OnceLock<Gazetteer> = OnceLock::new();
        G.get_or_init(|| Gazetteer::parse(BUNDLED).expect("bundled gazetteer is well-formed"))
    }

    pub fn lookup(&self, name: &str) -> Option<&Place> {
        self.index.get(&normalize(name)).map(|&i| &self.records[i])
    }

    pub fn records(&self) -> &[Place] {
        &self.records
    }
}

impl GeoProvider for Gazetteer {
    fn field(&self, place: &str, field: GeoField) -> Result<Value, ScalarError> {
        let p = self
            .lookup(place)
            .ok_or_else(|| ScalarError::PlaceNotFound(place.to_string()))?;
        Ok(match field {
            GeoField::Latitude => Value::Real(p.latitude),
            GeoField::Longitude => Value::Real(p.longitude),
            GeoField::Country => Value::Text(p.country.clone()),
            GeoField::Province => p.province.clone().map(Value::Text).unwrap_or(Value::Null),
        })
    }
}

/// Great-circle distance in kilometers.
pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = (lat2 - lat1).to_radians();
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().min(1.0).asin()
}

pub fn distance_between(geo: &dyn GeoProvider, a: &str, b: &str) -> Result<f64, ScalarError> {
    let coord = |p: &str| -> Result<(f64, f64), ScalarError> {
        let lat = geo.field(p, GeoField::Latitude)?.as_f64();
        let lon = geo.field(p, GeoField::Longitude)?.as_f64();
        match (lat, lon) {
            (Some(lat), Some(lon)) => Ok((lat, lon)),
            _ => Err(ScalarError::Provider(format!("no coordinates for `{p}`"))),
        }
    };
    let (la, oa) = coord(a)?;
    let (lb, ob) = coord(b)?;
    Ok(haversine_km(la, oa, lb, ob))
}

/// Provider backed by an HTTP service exposing the same `POST /<api>`
/// endpoints as the scalar server.
#[derive(Debug, Clone)]
pub struct RemoteGeo {
    base_url: String,
    timeout: Duration,
}

impl RemoteGeo {
    pub fn new(base_url: &str) -> Self {
        RemoteGeo {
            base_url: base_url.trim_end_matches('/').to_string(),
            timeout: Duration::from_secs(10),
        }
    }
}

impl GeoProvider for RemoteGeo {
    fn field(&self, place: &str, field: GeoField) -> Result<Value, ScalarError> {
        let url = format!("{}/{}", self.base_url, field.api_name());
        let resp = ureq::post(&url)
            .timeout(self.timeout)
            .send_json(json!({ "place": place }));
        let body: serde_json::Value = match resp {
            Ok(r) => r
                .into_json()
                .map_err(|e| ScalarError::Provider(format!("{url}: {e}")))?,
            Err(ureq::Error::Status(404, _)) => return Err(ScalarError::PlaceNotFound(place.to_string())),
            Err(e) => return Err(ScalarError::Provider(format!("{url}: {e}"))),
        };
        let obj = match &body {
            serde_json::Value::Array(items) => items.first().cloned().unwrap_or_default(),
            other => other.clone(),
        };
        obj.get(field.output_key())
            .map(Value::from_json)
            .ok_or_else(|| ScalarError::Provider(format!("{url}: no `{}` in response", field.output_key())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_loads_with_aliases() {
        let g = Gazetteer::bundled();
        assert_eq!(g.lookup("  usa ").unwrap().name, "United States");
        assert_eq!(g.lookup("MOSCOW").unwrap().country, "Russia");
        assert!(g.lookup("__nonexistent__").is_none());
        assert_eq!(g.field("France", GeoField::Province).unwrap(), Value::Null);
    }

    #[test]
    fn malformed_files_rejected() {
        assert!(Gazetteer::parse("X\t91\t0\tC\t").is_err());
        assert!(Gazetteer::parse("X\t0\t-180\tC\t").is_err());
        assert!(Gazetteer::parse("X\t0\t0\tC\t\nx\t1\t1\tC\t").is_err());
        assert!(Gazetteer::parse("Y\tX").is_err());
        assert!(Gazetteer::parse("X\t0\t0").is_err());
    }

    #[test]
    fn haversine_quarter_meridian() {
        let d = haversine_km(0.0, 0.0, 90.0, 0.0);
        assert!((d - EARTH_RADIUS_KM * std::f64::consts::FRAC_PI_2).abs() < 1e-9);
        assert_eq!(haversine_km(10.0, 20.0, 10.0, 20.0), 0.0);
    }
}
