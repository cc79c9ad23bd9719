//! Name-key heuristics used as performance floors: FINI (full surname plus
//! first forename initial) and AINI (full surname plus all initials), and
//! FINI blocking.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Clustering, Corpus, InstanceId};
use crate::normalize::{aini_key, fini_key, parse_name, BlockKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fini,
    Aini,
}

/// Cluster id given to an instance whose name cannot be parsed.
pub fn unparseable_cluster_id(instance: &InstanceId) -> String {
    format!("!unparseable:{instance}")
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BaselineOutcome {
    pub clustering: Clustering,
    /// Instances placed in singleton clusters because their name is unparseable.
    pub unparseable: usize,
}

/// Every byline instance of the corpus with its raw name.
pub fn corpus_instances(corpus: &Corpus) -> Vec<(InstanceId, &str)> {
    corpus.instances().collect()
}

fn keyed(instances: &[(InstanceId, &str)], method: Method) -> Vec<(InstanceId, Option<String>)> {
    instances
        .par_iter()
        .map(|(id, raw)| {
            let key = parse_name(raw).ok().map(|n| match method {
                Method::Fini => fini_key(&n).to_string(),
                Method::Aini => aini_key(&n).to_string(),
            });
            (*id, key)
        })
        .collect()
}

/// Groups instances by name key; the cluster id is the serialized key.
pub fn cluster_by(instances: &[(InstanceId, &str)], method: Method) -> BaselineOutcome {
    let mut b = Clustering::builder();
    let mut unparseable = 0;
    for (id, key) in keyed(instances, method) {
        let cluster = match key {
            Some(k) => k,
            None => {
                unparseable += 1;
                unparseable_cluster_id(&id)
            }
        };
        b.insert(&cluster, id).expect("distinct instances");
    }
    BaselineOutcome {
        clustering: b.build(),
        unparseable,
    }
}

pub fn cluster_fini(instances: &[(InstanceId, &str)]) -> BaselineOutcome {
    cluster_by(instances, Method::Fini)
}

pub fn cluster_aini(instances: &[(InstanceId, &str)]) -> BaselineOutcome {
    cluster_by(instances, Method::Aini)
}

/// FINI blocks with their keys. Unparseable names are singleton blocks kept
/// apart from the keyed map.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Blocks {
    pub blocks: BTreeMap<BlockKey, Vec<InstanceId>>,
    pub unparseable: Vec<InstanceId>,
}

impl Blocks {
    pub fn n_blocks(&self) -> usize {
        self.blocks.len() + self.unparseable.len()
    }

    pub fn n_instances(&self) -> usize {
        self.blocks.values().map(Vec::len).sum::<usize>() + self.unparseable.len()
    }

    pub fn sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.blocks
            .values()
            .map(Vec::len)
            .chain(std::iter::repeat_n(1, self.unparseable.len()))
    }

    /// Number of blocks per block size.
    pub fn size_histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for s in self.sizes() {
            *h.entry(s).or_default() += 1;
        }
        h
    }

    pub fn max_size(&self) -> usize {
        self.sizes().max().unwrap_or(0)
    }

    pub fn to_clustering(&self) -> Clustering {
        let mut b = Clustering::builder();
        for (key, members) in &self.blocks {
            let id = key.to_string();
            for m in members {
                b.insert(&id, *m).expect("blocks are disjoint");
            }
        }
        for m in &self.unparseable {
            b.insert(&unparseable_cluster_id(m), *m)
                .expect("blocks are disjoint");
        }
        b.build()
    }
}

pub fn build_blocks(instances: &[(InstanceId, &str)]) -> Blocks {
    let keys: Vec<(InstanceId, Option<BlockKey>)> = instances
        .par_iter()
        .map(|(id, raw)| (*id, parse_name(raw).ok().map(|n| fini_key(&n))))
        .collect();
    let mut out = Blocks::default();
    for (id, key) in keys {
        match key {
            Some(k) => out.blocks.entry(k).or_default().push(id),
            None => out.unparseable.push(id),
        }
    }
    for members in out.blocks.values_mut() {
        members.sort_unstable();
    }
    out.unparseable.sort_unstable();
    out
}
