use std::collections::hash_map::Entry;
use std::collections::HashMap;

use crate::corpus::InstanceId;
use crate::error::{Error, Result};

/// A partition of instance ids into named clusters.
///
/// Clusters are kept sorted by id and members sorted within each cluster,
/// so two clusterings over the same assignments compare equal regardless of
/// the order they were built in.
#[derive(Debug, Clone, Default)]
pub struct Clustering {
    ids: Vec<String>,
    members: Vec<Vec<InstanceId>>,
    assignment: HashMap<InstanceId, u32>,
}

impl PartialEq for Clustering {
    fn eq(&self, other: &Self) -> bool {
        self.ids == other.ids && self.members == other.members
    }
}

impl Eq for Clustering {}

impl Clustering {
    pub fn builder() -> ClusteringBuilder {
        ClusteringBuilder::default()
    }

    /// Builds from `(cluster_id, instance)` assignments. An instance named
    /// under two different cluster ids is a partition violation.
    pub fn from_assignments<I, S>(assignments: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, InstanceId)>,
        S: AsRef<str>,
    {
        let mut b = Self::builder();
        for (cluster, instance) in assignments {
            b.insert(cluster.as_ref(), instance)?;
        }
        Ok(b.build())
    }

    /// Number of clusters.
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn n_instances(&self) -> usize {
        self.assignment.len()
    }

    pub fn contains(&self, instance: &InstanceId) -> bool {
        self.assignment.contains_key(instance)
    }

    pub fn cluster_index(&self, instance: &InstanceId) -> Option<usize> {
        self.assignment.get(instance).map(|&i| i as usize)
    }

    pub fn cluster_of(&self, instance: &InstanceId) -> Option<&str> {
        self.cluster_index(instance).map(|i| self.ids[i].as_str())
    }

    pub fn cluster_id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn members(&self, index: usize) -> &[InstanceId] {
        &self.members[index]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[InstanceId])> + '_ {
        self.ids
            .iter()
            .map(String::as_str)
            .zip(self.members.iter().map(Vec::as_slice))
    }

    pub fn instances(&self) -> impl Iterator<Item = &InstanceId> + '_ {
        self.members.iter().flatten()
    }

    pub fn sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().map(Vec::len)
    }

    /// Keeps only instances accepted by `keep`; clusters left empty vanish.
    pub fn restrict(&self, mut keep: impl FnMut(&InstanceId) -> bool) -> Clustering {
        let mut b = Self::builder();
        for (id, members) in self.iter() {
            for m in members.iter().filter(|m| keep(m)) {
                b.insert(id, *m)
                    .expect("restriction preserves the partition");
            }
        }
        b.build()
    }
}

#[derive(Debug, Default)]
pub struct ClusteringBuilder {
    index: HashMap<String, u32>,
    ids: Vec<String>,
    members: Vec<Vec<InstanceId>>,
    assignment: HashMap<InstanceId, u32>,
}

impl ClusteringBuilder {
    /// Adds one assignment. Repeating an identical assignment is a no-op.
    pub fn insert(&mut self, cluster: &str, instance: InstanceId) -> Result<()> {
        let idx = match self.index.get(cluster) {
            Some(&i) => i,
            None => {
                let i = self.ids.len() as u32;
                self.index.insert(cluster.to_string(), i);
                self.ids.push(cluster.to_string());
                self.members.push(Vec::new());
                i
            }
        };
        match self.assignment.entry(instance) {
            Entry::Occupied(e) => {
                if *e.get() != idx {
                    return Err(Error::Partition {
                        instance,
                        first: self.ids[*e.get() as usize].clone(),
                        second: cluster.to_string(),
                    });
                }
            }
            Entry::Vacant(e) => {
                e.insert(idx);
                self.members[idx as usize].push(instance);
            }
        }
        Ok(())
    }

    pub fn build(self) -> Clustering {
        let mut order: Vec<usize> = (0..self.ids.len()).collect();
        order.sort_unstable_by(|&a, &b| self.ids[a].cmp(&self.ids[b]));
        let mut remap = vec![0u32; order.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new as u32;
        }
        let mut ids = self.ids;
        let mut members = self.members;
        let mut sorted_ids = Vec::with_capacity(ids.len());
        let mut sorted_members = Vec::with_capacity(members.len());
        for &old in &order {
            sorted_ids.push(std::mem::take(&mut ids[old]));
            let mut m = std::mem::take(&mut members[old]);
            m.sort_unstable();
            sorted_members.push(m);
        }
        let mut assignment = self.assignment;
        for v in assignment.values_mut() {
            *v = remap[*v as usize];
        }
        Clustering {
            ids: sorted_ids,
            members: sorted_members,
            assignment,
        }
    }
}
