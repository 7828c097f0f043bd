use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TablegenError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplacementManifest {
    pub database: String,
    pub fraction: f64,
    pub seed: u64,
    pub replaced_tables: Vec<String>,
}

impl ReplacementManifest {
    pub fn is_replaced(&self, table: &str) -> bool {
        self.replaced_tables.iter().any(|t| t.eq_ignore_ascii_case(table))
    }
}

/// FNV-1a, so per-database streams do not depend on the std hasher.
fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Picks `round(fraction * tables.len())` tables uniformly at random. The
/// generator is seeded from `seed` and the database id; the result keeps the
/// input table order.
pub fn select_replacements(
    database: &str,
    tables: &[String],
    fraction: f64,
    seed: u64,
) -> Result<ReplacementManifest, TablegenError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(TablegenError::InvalidFraction(fraction));
    }
    let k = (fraction * tables.len() as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(database));
    let mut picked: Vec<usize> = sample(&mut rng, tables.len(), k.min(tables.len())).into_vec();
    picked.sort_unstable();
    Ok(ReplacementManifest {
        database: database.to_string(),
        fraction,
        seed,
        replaced_tables: picked.into_iter().map(|i| tables[i].clone()).collect(),
    })
}
