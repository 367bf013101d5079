//! Group classification: connected components of the breach graph.
//!
//! People transitively linked by active sub-threshold pairs form one group,
//! regardless of the order pairs were reported in.

use super::MonitorError;

/// A maximal set of people transitively linked by active breaches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    /// Sorted ascending; always at least two members.
    pub member_ids: Vec<u32>,
}

impl Group {
    pub fn size(&self) -> usize {
        self.member_ids.len()
    }

    pub fn contains(&self, id: u32) -> bool {
        self.member_ids.binary_search(&id).is_ok()
    }
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, i: usize) -> usize {
        if self.parent[i] != i {
            self.parent[i] = self.find(self.parent[i]);
        }
        self.parent[i]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Connected components of the pair graph, sorted by size descending with
/// ties broken by smallest member ID. Output is invariant under any
/// permutation of the input pairs.
pub fn classify_groups(pairs: &[(u32, u32)]) -> Result<Vec<Group>, MonitorError> {
    let mut ids: Vec<u32> = Vec::with_capacity(pairs.len() * 2);
    for &(a, b) in pairs {
        if a == b {
            return Err(MonitorError::SelfPair(a));
        }
        ids.push(a);
        ids.push(b);
    }
    ids.sort_unstable();
    ids.dedup();
    let index_of = |id: u32| ids.binary_search(&id).unwrap();

    let mut uf = UnionFind::new(ids.len());
    for &(a, b) in pairs {
        uf.union(index_of(a), index_of(b));
    }

    let mut components: std::collections::BTreeMap<usize, Vec<u32>> = Default::default();
    for (i, id) in ids.iter().enumerate() {
        components.entry(uf.find(i)).or_default().push(*id);
    }
    let mut groups: Vec<Group> = components
        .into_values()
        .map(|mut member_ids| {
            member_ids.sort_unstable();
            Group { member_ids }
        })
        .collect();
    groups.sort_by(|a, b| {
        b.size()
            .cmp(&a.size())
            .then(a.member_ids[0].cmp(&b.member_ids[0]))
    });
    Ok(groups)
}

/// The literal one-pass merge: each pair joins only the *first* group it
/// intersects, so late links between existing groups are missed. Kept (test
/// only) to document why components are computed transitively instead.
#[cfg(test)]
pub(crate) fn classify_groups_single_pass(pairs: &[(u32, u32)]) -> Vec<Vec<u32>> {
    let mut grp_list: Vec<Vec<u32>> = Vec::new();
    for &(a, b) in pairs {
        let mut placed = false;
        for g in grp_list.iter_mut() {
            if g.contains(&a) || g.contains(&b) {
                if !g.contains(&a) {
                    g.push(a);
                }
                if !g.contains(&b) {
                    g.push(b);
                }
                placed = true;
                break;
            }
        }
        if !placed {
            grp_list.push(vec![a, b]);
        }
    }
    for g in grp_list.iter_mut() {
        g.sort_unstable();
    }
    grp_list
}
