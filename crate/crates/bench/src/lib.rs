// SPDX-License-Identifier: Apache-2.0

//! Fixtures shared by the criterion benches.

use shade_core::synthetic::{generate_pool, SyntheticSpec};
use shade_core::{Query, QueryRecord};

/// Synthetic pool of `queries` records with `responses` each.
pub fn pool(queries: usize, responses: usize, seed: u64) -> Vec<Query> {
    let spec = SyntheticSpec {
        responses,
        seed,
        ..Default::default()
    };
    generate_pool(&spec, queries)
        .expect("default synthetic spec is valid")
        .into_iter()
        .map(to_query)
        .collect()
}

fn to_query(rec: QueryRecord) -> Query {
    Query::from_record(rec).expect("generated records validate").0
}
