//! Disk cache of grid-oracle results keyed by channel, noise and resolution.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use unfolded_pgd_core::grid::{grid_capacity, GridResult};
use unfolded_pgd_core::rates::min_rate;
use unfolded_pgd_core::{ChannelRealization, NoiseProfile};

use crate::error::Result;
use crate::formats::{read_json, write_json, PowerMatrixJson};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CachedGrid {
    key: String,
    resolution: f64,
    best_min_rate: f64,
    best_matrix: PowerMatrixJson,
    evaluations: u64,
}

/// Hex SHA-256 over the exact bits of every input to the grid search.
pub fn oracle_key(h: &ChannelRealization, noise: &NoiseProfile, resolution: f64) -> String {
    let mut d = Sha256::new();
    d.update(h.topology().fingerprint().as_bytes());
    for c in h.links() {
        d.update(c.re.to_bits().to_le_bytes());
        d.update(c.im.to_bits().to_le_bytes());
    }
    for v in noise.hop_noise_vars() {
        d.update(v.to_bits().to_le_bytes());
    }
    d.update(noise.channel_var().to_bits().to_le_bytes());
    d.update(resolution.to_bits().to_le_bytes());
    hex::encode(d.finalize())
}

/// Grid result for `h`, read from `cache_dir` when present there. Entries
/// whose stored rate no longer matches the stored matrix are recomputed.
pub fn cached_grid_capacity(
    h: &ChannelRealization,
    noise: &NoiseProfile,
    resolution: f64,
    cache_dir: Option<&Path>,
) -> Result<GridResult> {
    let key = oracle_key(h, noise, resolution);
    let path = cache_dir.map(|d| d.join(format!("{key}.json")));
    if let Some(p) = path.as_deref().filter(|p| p.is_file()) {
        if let Some(hit) = load(p, h, noise, &key) {
            return Ok(hit);
        }
    }
    let r = grid_capacity(h, noise, resolution)?;
    if let Some(p) = path {
        let doc = CachedGrid {
            key,
            resolution,
            best_min_rate: r.best_min_rate,
            best_matrix: PowerMatrixJson::new(&h.topology(), &r.best_matrix),
            evaluations: r.evaluations,
        };
        write_json(&p, &doc)?;
    }
    Ok(r)
}

fn load(path: &Path, h: &ChannelRealization, noise: &NoiseProfile, key: &str) -> Option<GridResult> {
    let doc = read_json::<CachedGrid>(path).ok().filter(|d| d.key == key)?;
    let best_matrix = doc.best_matrix.to_power_matrix(&h.topology()).ok()?;
    if min_rate(h, &best_matrix, noise).0 != doc.best_min_rate {
        return None;
    }
    Some(GridResult {
        best_min_rate: doc.best_min_rate,
        best_matrix,
        resolution: doc.resolution,
        evaluations: doc.evaluations,
    })
}
