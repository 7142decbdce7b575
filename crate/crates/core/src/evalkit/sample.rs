use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extractor::PartialTable;

/// How to subsample training tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SamplerSpec {
    /// `floor(fraction · rows)` rows from every relationship.
    ChangingRows { fraction: f64, seed: u64 },
    /// `count` relationships with `rows_per_relation` rows each.
    ChangingRelationships {
        count: usize,
        rows_per_relation: usize,
        seed: u64,
    },
}

fn sorted_sample(rng: &mut ChaCha8Rng, len: usize, amount: usize) -> Vec<usize> {
    let mut idx = sample(rng, len, amount.min(len)).into_vec();
    idx.sort_unstable();
    idx
}

fn subset(table: &PartialTable, rows: &[usize]) -> PartialTable {
    PartialTable {
        rows: rows.iter().map(|&i| table.rows[i].clone()).collect(),
        ..table.clone()
    }
}

/// Deterministic subsample; row and table order are preserved.
pub fn sample_training(tables: &[PartialTable], spec: &SamplerSpec) -> Result<Vec<PartialTable>> {
    let out: Vec<PartialTable> = match *spec {
        SamplerSpec::ChangingRows { fraction, seed } => {
            if !(fraction > 0.0 && fraction <= 1.0) {
                return Err(Error::Config(format!("fraction must be in (0, 1], got {fraction}")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            tables
                .iter()
                .map(|t| {
                    let n = (fraction * t.rows.len() as f64).floor() as usize;
                    subset(t, &sorted_sample(&mut rng, t.rows.len(), n))
                })
                .collect()
        }
        SamplerSpec::ChangingRelationships {
            count,
            rows_per_relation,
            seed,
        } => {
            if count == 0 || count > tables.len() {
                return Err(Error::Config(format!(
                    "relationship count must be in 1..={}, got {count}",
                    tables.len()
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            sorted_sample(&mut rng, tables.len(), count)
                .into_iter()
                .map(|ti| {
                    let t = &tables[ti];
                    subset(t, &sorted_sample(&mut rng, t.rows.len(), rows_per_relation))
                })
                .collect()
        }
    };
    if out.iter().all(|t| t.rows.is_empty()) {
        return Err(Error::Config("sampling selected no rows".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extractor::TableRow;

    fn table(id: &str, n: usize) -> PartialTable {
        PartialTable {
            relationship_id: id.into(),
            key_attribute: "name".into(),
            question_template: "Where is <subject>?".into(),
            rows: (0..n)
                .map(|i| TableRow {
                    subject: format!("s{i}"),
                    object: Some(format!("o{i}")),
                })
                .collect(),
        }
    }

    #[test]
    fn full_fraction_is_identity() {
        let tables = vec![table("r1", 4), table("r2", 3)];
        let spec = SamplerSpec::ChangingRows { fraction: 1.0, seed: 5 };
        assert_eq!(sample_training(&tables, &spec).unwrap(), tables);
    }

    #[test]
    fn half_is_reproducible_and_ordered() {
        let tables = vec![table("r1", 10)];
        let spec = SamplerSpec::ChangingRows { fraction: 0.5, seed: 5 };
        let a = sample_training(&tables, &spec).unwrap();
        assert_eq!(a[0].rows.len(), 5);
        assert_eq!(a, sample_training(&tables, &spec).unwrap());
        let idx: Vec<usize> = a[0].rows.iter().map(|r| r.subject[1..].parse().unwrap()).collect();
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn one_relationship() {
        let tables = vec![table("r1", 4), table("r2", 4), table("r3", 4)];
        let spec = SamplerSpec::ChangingRelationships {
            count: 1,
            rows_per_relation: 2,
            seed: 1,
        };
        let out = sample_training(&tables, &spec).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].rows.len(), 2);
    }

    #[test]
    fn empty_sample_is_an_error() {
        let tables = vec![table("r1", 1)];
        let spec = SamplerSpec::ChangingRows { fraction: 0.5, seed: 0 };
        assert!(sample_training(&tables, &spec).is_err());
    }
}
