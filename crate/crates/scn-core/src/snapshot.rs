//! Weight snapshots: one portable text file per snapshot, named
//! `weights_{iteration:04}.snap`. First line holds `n_features rf_rows
//! rf_cols n_orientations`; each following line is one feature's weights in
//! row-major (row, col, orientation) order as decimal text. Rust's shortest
//! round-trip float formatting makes save -> load bit-exact.

use std::path::{Path, PathBuf};

use ndarray::Array3;

use crate::error::{Error, Result};
use crate::types::SynapseBank;

pub fn snapshot_filename(iteration: usize) -> String {
    format!("weights_{iteration:04}.snap")
}

pub fn snapshot_path(dir: &Path, iteration: usize) -> PathBuf {
    dir.join(snapshot_filename(iteration))
}

pub fn bank_to_string(bank: &SynapseBank) -> String {
    let (rf_rows, rf_cols, n_orient) = bank.dims();
    let mut out = format!("{} {} {} {}\n", bank.n_features(), rf_rows, rf_cols, n_orient);
    for f in 0..bank.n_features() {
        let mut first = true;
        for w in bank.feature(f).iter() {
            if !first {
                out.push(' ');
            }
            out.push_str(&format!("{w}"));
            first = false;
        }
        out.push('\n');
    }
    out
}

pub fn bank_from_str(text: &str) -> Result<SynapseBank> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty snapshot".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| Error::Parse(format!("bad snapshot header '{header}'"))))
        .collect::<Result<_>>()?;
    let [n_features, rf_rows, rf_cols, n_orient] = dims[..] else {
        return Err(Error::Parse(format!("snapshot header needs 4 fields, got {}", dims.len())));
    };
    let mut weights = Vec::with_capacity(n_features);
    for f in 0..n_features {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("snapshot truncated at feature {f}")))?;
        let values: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| Error::Parse(format!("bad weight '{t}'"))))
            .collect::<Result<_>>()?;
        if values.len() != rf_rows * rf_cols * n_orient {
            return Err(Error::Parse(format!(
                "feature {f}: expected {} weights, got {}",
                rf_rows * rf_cols * n_orient,
                values.len()
            )));
        }
        let arr = Array3::from_shape_vec((rf_rows, rf_cols, n_orient), values)
            .map_err(|e| Error::Parse(format!("snapshot shape: {e}")))?;
        weights.push(arr);
    }
    Ok(SynapseBank::new(weights))
}

pub fn save_bank(path: &Path, bank: &SynapseBank) -> Result<()> {
    std::fs::write(path, bank_to_string(bank))?;
    Ok(())
}

pub fn load_bank(path: &Path) -> Result<SynapseBank> {
    let text = std::fs::read_to_string(path)?;
    bank_from_str(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Snapshot files in a directory, sorted by iteration.
pub fn list_snapshots(dir: &Path) -> Result<Vec<(usize, PathBuf)>> {
    let mut found = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if let Some(stem) = name.strip_prefix("weights_").and_then(|s| s.strip_suffix(".snap")) {
            if let Ok(iter) = stem.parse::<usize>() {
                found.push((iter, path));
            }
        }
    }
    found.sort_by_key(|(iter, _)| *iter);
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_create;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = rng_create(17);
        let bank = SynapseBank::init_uniform(3, 4, 4, 0.0, 1.0, &mut rng);
        let text = bank_to_string(&bank);
        let back = bank_from_str(&text).unwrap();
        assert_eq!(bank, back);
        assert_eq!(bank_to_string(&back), text);
    }

    #[test]
    fn filenames_are_zero_padded() {
        assert_eq!(snapshot_filename(100), "weights_0100.snap");
        assert_eq!(snapshot_filename(25), "weights_0025.snap");
        assert_eq!(snapshot_filename(12000), "weights_12000.snap");
    }

    #[test]
    fn listing_sorts_by_iteration() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = rng_create(0);
        let bank = SynapseBank::init_uniform(1, 2, 4, 0.0, 1.0, &mut rng);
        for iter in [300, 100, 200] {
            save_bank(&snapshot_path(dir.path(), iter), &bank).unwrap();
        }
        let listed = list_snapshots(dir.path()).unwrap();
        let iters: Vec<usize> = listed.iter().map(|(i, _)| *i).collect();
        assert_eq!(iters, vec![100, 200, 300]);
    }

    #[test]
    fn malformed_snapshots_are_rejected() {
        assert!(bank_from_str("").is_err());
        assert!(bank_from_str("1 2 2 4\n0.5 0.5\n").is_err());
        assert!(bank_from_str("1 1 1 1\nnot_a_number\n").is_err());
    }
}
