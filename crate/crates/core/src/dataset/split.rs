use std::collections::HashSet;

use rand::seq::SliceRandom;

use super::manifest::{Manifest, Split};
use crate::error::{Error, Result};
use crate::seeded_rng;

/// Labels `verify_count` entries as verify data, sampled without
/// replacement.
///
/// One randomly chosen entry of every finger is held back as training data,
/// so no finger ends up only in the verify split; the rest are eligible.
pub fn split_train_verify(manifest: &Manifest, verify_count: usize, seed: u64) -> Result<Manifest> {
    let total = manifest.len();
    if verify_count >= total {
        return Err(Error::VerifyCountTooLarge {
            requested: verify_count,
            available: total,
        });
    }
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut seeded_rng(seed));

    let mut held_back = HashSet::new();
    let mut eligible = Vec::with_capacity(total);
    for i in order {
        if !held_back.insert(manifest.entries[i].finger_id) {
            eligible.push(i);
        }
    }
    if verify_count > eligible.len() {
        return Err(Error::VerifyCountTooLarge {
            requested: verify_count,
            available: eligible.len(),
        });
    }

    let mut out = manifest.clone();
    for e in &mut out.entries {
        e.split = Split::Train;
    }
    for &i in &eligible[..verify_count] {
        out.entries[i].split = Split::Verify;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;
    use std::path::PathBuf;

    use super::*;
    use crate::dataset::manifest::{output_name, ManifestEntry};
    use crate::image_core::Region;

    fn synthetic_manifest(fingers: u32, per_finger: u64) -> Manifest {
        let entries = (1..=fingers)
            .flat_map(|f| {
                (0..per_finger).map(move |s| ManifestEntry {
                    output_file: output_name(f, s),
                    finger_id: f,
                    impression_id: 1,
                    source_file: PathBuf::from("x.bmp"),
                    region: Region::new(0, 0, 128, 128),
                    align_angle: 0.0,
                    align_score: None,
                    chain: Vec::new(),
                    item_seed: s,
                    split: Split::Train,
                })
            })
            .collect();
        Manifest::new(entries)
    }

    #[test]
    fn desk_counts() {
        let m = synthetic_manifest(4, 15);
        let s = split_train_verify(&m, 10, 1).unwrap();
        assert_eq!((s.count(Split::Train), s.count(Split::Verify)), (50, 10));
    }

    #[test]
    fn verify_count_must_leave_training_data() {
        let m = synthetic_manifest(4, 15);
        assert!(matches!(
            split_train_verify(&m, 60, 1),
            Err(Error::VerifyCountTooLarge { .. })
        ));
        // one entry per finger is always held back
        assert!(split_train_verify(&m, 57, 1).is_err());
        assert!(split_train_verify(&m, 56, 1).is_ok());
    }

    #[test]
    fn every_finger_keeps_training_data() {
        let m = synthetic_manifest(30, 3);
        for seed in 0..20 {
            let s = split_train_verify(&m, 55, seed).unwrap();
            let mut train: BTreeMap<u32, usize> = BTreeMap::new();
            for e in &s.entries {
                if e.split == Split::Train {
                    *train.entry(e.finger_id).or_default() += 1;
                }
            }
            assert_eq!(train.len(), 30);
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let m = synthetic_manifest(5, 20);
        assert_eq!(split_train_verify(&m, 30, 4).unwrap(), split_train_verify(&m, 30, 4).unwrap());
        assert_ne!(split_train_verify(&m, 30, 4).unwrap(), split_train_verify(&m, 30, 5).unwrap());
    }

    #[test]
    fn table_scale_split() {
        // 2720 sources x 50 augments over 415 fingers
        let entries: Vec<ManifestEntry> = (0..136_000u64)
            .map(|i| {
                let f = (i % 415) as u32 + 1;
                ManifestEntry {
                    output_file: output_name(f, i),
                    finger_id: f,
                    impression_id: 1,
                    source_file: PathBuf::from("x.bmp"),
                    region: Region::new(0, 0, 128, 128),
                    align_angle: 0.0,
                    align_score: None,
                    chain: Vec::new(),
                    item_seed: i,
                    split: Split::Train,
                }
            })
            .collect();
        let s = split_train_verify(&Manifest::new(entries), 1000, 0).unwrap();
        assert_eq!((s.count(Split::Train), s.count(Split::Verify)), (135_000, 1000));
    }
}
