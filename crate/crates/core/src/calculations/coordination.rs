use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mappers::EntityId;
use crate::miners::{AssignmentMatrix, FileDependencyMatrix, MinerResult};

/// Relative coordination need between developers, symmetric with a zero
/// diagonal. Only non-zero entries are stored.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct CoordinationNeedsMatrix {
    #[serde(skip)]
    users: usize,
    entries: BTreeMap<EntityId, BTreeMap<EntityId, f64>>,
}

impl CoordinationNeedsMatrix {
    pub fn users(&self) -> usize {
        self.users
    }

    pub fn get(&self, a: EntityId, b: EntityId) -> f64 {
        self.entries
            .get(&a)
            .and_then(|row| row.get(&b))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (EntityId, EntityId, f64)> + '_ {
        self.entries
            .iter()
            .flat_map(|(a, row)| row.iter().map(move |(b, v)| (*a, *b, *v)))
    }

    pub fn max(&self) -> f64 {
        self.iter().map(|(_, _, v)| v).fold(0.0, f64::max)
    }

    pub fn from_entries(users: usize, entries: BTreeMap<EntityId, BTreeMap<EntityId, f64>>) -> Self {
        CoordinationNeedsMatrix { users, entries }
    }
}

impl MinerResult for CoordinationNeedsMatrix {
    const FILE_NAME: &'static str = "CoordinationNeeds.json";
}

/// Divides every entry by the largest one.
///
/// The raw products are integers, so scaling the inputs by a constant scales
/// numerator and denominator alike and leaves the quotient unchanged.
fn normalize_by_max(raw: BTreeMap<EntityId, BTreeMap<EntityId, u128>>) -> BTreeMap<EntityId, BTreeMap<EntityId, f64>> {
    let max = raw.values().flat_map(|row| row.values()).copied().max().unwrap_or(0);
    if max == 0 {
        return BTreeMap::new();
    }
    raw.into_iter()
        .map(|(a, row)| {
            (
                a,
                row.into_iter()
                    .map(|(b, v)| (b, v as f64 / max as f64))
                    .collect(),
            )
        })
        .collect()
}

/// `C = A * D * A^T` with the diagonal removed, normalized by its maximum.
pub fn compute_coordination_needs(
    assignment: &AssignmentMatrix,
    dependency: &FileDependencyMatrix,
) -> Result<CoordinationNeedsMatrix> {
    let a = assignment.matrix();
    if a.cols() != dependency.files() {
        return Err(Error::DimensionMismatch(format!(
            "assignment matrix has {} files, dependency matrix has {}",
            a.cols(),
            dependency.files()
        )));
    }
    let a_by_file = a.transpose();
    let d = dependency.matrix();

    let rows: Vec<(EntityId, BTreeMap<EntityId, u128>)> = a
        .row_iter()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(user, files)| {
            // (A * D) row of `user`.
            let mut ad: BTreeMap<EntityId, u128> = BTreeMap::new();
            for (&f, &count) in files {
                for (&g, &dep) in d.row(f).into_iter().flatten() {
                    *ad.entry(g).or_insert(0) += u128::from(count) * u128::from(dep);
                }
            }
            // times A^T, skipping the diagonal.
            let mut out: BTreeMap<EntityId, u128> = BTreeMap::new();
            for (g, w) in ad {
                for (&other, &count) in a_by_file.row(g).into_iter().flatten() {
                    if other != user {
                        *out.entry(other).or_insert(0) += w * u128::from(count);
                    }
                }
            }
            (user, out)
        })
        .filter(|(_, row)| !row.is_empty())
        .collect();

    Ok(CoordinationNeedsMatrix {
        users: a.rows(),
        entries: normalize_by_max(rows.into_iter().collect()),
    })
}
