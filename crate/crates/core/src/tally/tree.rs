use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::JurisdictionId;

/// Cantonal vote weight counted in half votes (a full canton is 2, a
/// half-canton 1), so the majority threshold compares integers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfVotes(pub u32);

impl HalfVotes {
    pub const FULL: HalfVotes = HalfVotes(2);
    pub const HALF: HalfVotes = HalfVotes(1);

    /// Accepts only the two weights a canton can carry.
    pub fn from_weight(weight: f64) -> Option<HalfVotes> {
        if weight == 1.0 {
            Some(HalfVotes::FULL)
        } else if weight == 0.5 {
            Some(HalfVotes::HALF)
        } else {
            None
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0) / 2.0
    }
}

impl std::ops::Add for HalfVotes {
    type Output = HalfVotes;
    fn add(self, rhs: HalfVotes) -> HalfVotes {
        HalfVotes(self.0 + rhs.0)
    }
}

impl std::iter::Sum for HalfVotes {
    fn sum<I: Iterator<Item = HalfVotes>>(iter: I) -> HalfVotes {
        iter.fold(HalfVotes(0), |a, b| a + b)
    }
}

impl fmt::Display for HalfVotes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_multiple_of(2) {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}.5", self.0 / 2)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("{0} is not below the root {1}")]
    NotUnderRoot(JurisdictionId, JurisdictionId),
    #[error("parent of {0} is not declared")]
    Orphan(JurisdictionId),
    #[error("{0} declared twice")]
    Duplicate(JurisdictionId),
    #[error("{0} is not a node of the tree")]
    UnknownNode(JurisdictionId),
    #[error("eligible voters of {parent} ({eligible}) below the sum over its children ({children})")]
    EligibleExceeded { parent: JurisdictionId, eligible: u64, children: u64 },
}

/// The aggregation hierarchy. Because nodes are named by full paths, the
/// structure is acyclic with a single parent per node by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JurisdictionTree {
    root: JurisdictionId,
    children: BTreeMap<JurisdictionId, Vec<JurisdictionId>>,
    weights: BTreeMap<JurisdictionId, HalfVotes>,
    eligible: BTreeMap<JurisdictionId, u64>,
    names: BTreeMap<JurisdictionId, String>,
}

impl JurisdictionTree {
    pub fn builder(root: JurisdictionId) -> TreeBuilder {
        TreeBuilder {
            tree: JurisdictionTree {
                children: BTreeMap::from([(root.clone(), Vec::new())]),
                root,
                weights: BTreeMap::new(),
                eligible: BTreeMap::new(),
                names: BTreeMap::new(),
            },
            error: None,
        }
    }

    pub fn root(&self) -> &JurisdictionId {
        &self.root
    }

    pub fn contains(&self, id: &JurisdictionId) -> bool {
        self.children.contains_key(id)
    }

    pub fn children(&self, id: &JurisdictionId) -> &[JurisdictionId] {
        self.children.get(id).map(Vec::as_slice).unwrap_or_default()
    }

    pub fn is_leaf(&self, id: &JurisdictionId) -> bool {
        self.contains(id) && self.children(id).is_empty()
    }

    /// All nodes, parents before children, siblings in declaration order.
    pub fn nodes(&self) -> Vec<&JurisdictionId> {
        let mut out = vec![&self.root];
        let mut i = 0;
        while i < out.len() {
            out.extend(self.children(out[i]).iter());
            i += 1;
        }
        out
    }

    pub fn leaves(&self) -> Vec<&JurisdictionId> {
        self.nodes().into_iter().filter(|n| self.is_leaf(n)).collect()
    }

    /// Every non-root node with its parent.
    pub fn edges(&self) -> Vec<(&JurisdictionId, &JurisdictionId)> {
        self.nodes()
            .into_iter()
            .flat_map(|p| self.children(p).iter().map(move |c| (c, p)))
            .collect()
    }

    pub fn weight(&self, id: &JurisdictionId) -> Option<HalfVotes> {
        self.weights.get(id).copied()
    }

    /// Weighted nodes (cantons) in tree order.
    pub fn cantons(&self) -> Vec<&JurisdictionId> {
        self.nodes()
            .into_iter()
            .filter(|n| self.weights.contains_key(*n))
            .collect()
    }

    pub fn total_weight(&self) -> HalfVotes {
        self.weights.values().copied().sum()
    }

    pub fn eligible(&self, id: &JurisdictionId) -> Option<u64> {
        self.eligible.get(id).copied()
    }

    pub fn name(&self, id: &JurisdictionId) -> Option<&str> {
        self.names.get(id).map(String::as_str)
    }

    /// Display name, falling back to the last path segment.
    pub fn label(&self, id: &JurisdictionId) -> String {
        self.name(id).unwrap_or(id.last()).to_string()
    }

    /// Resolves a full path, a display name, or a last segment (canton code).
    pub fn find(&self, key: &str) -> Option<&JurisdictionId> {
        if let Ok(id) = key.parse::<JurisdictionId>() {
            if let Some((k, _)) = self.children.get_key_value(&id) {
                return Some(k);
            }
        }
        let nodes = self.nodes();
        nodes
            .iter()
            .find(|n| self.names.get(**n).is_some_and(|s| s == key))
            .or_else(|| nodes.iter().find(|n| n.last() == key))
            .copied()
    }
}

pub struct TreeBuilder {
    tree: JurisdictionTree,
    error: Option<TreeError>,
}

impl TreeBuilder {
    /// Declares a node; its parent must already be declared.
    pub fn node(mut self, id: JurisdictionId) -> Self {
        if self.error.is_some() {
            return self;
        }
        if !self.tree.root.is_ancestor_of(&id) {
            self.error = Some(TreeError::NotUnderRoot(id, self.tree.root.clone()));
            return self;
        }
        if self.tree.children.contains_key(&id) {
            self.error = Some(TreeError::Duplicate(id));
            return self;
        }
        let parent = id.parent().expect("non-root node has a parent");
        match self.tree.children.get_mut(&parent) {
            Some(kids) => kids.push(id.clone()),
            None => {
                self.error = Some(TreeError::Orphan(id));
                return self;
            }
        }
        self.tree.children.insert(id, Vec::new());
        self
    }

    pub fn weight(mut self, id: &JurisdictionId, weight: HalfVotes) -> Self {
        self.tree.weights.insert(id.clone(), weight);
        self
    }

    pub fn eligible(mut self, id: &JurisdictionId, voters: u64) -> Self {
        self.tree.eligible.insert(id.clone(), voters);
        self
    }

    pub fn name(mut self, id: &JurisdictionId, name: impl Into<String>) -> Self {
        self.tree.names.insert(id.clone(), name.into());
        self
    }

    pub fn build(self) -> Result<JurisdictionTree, TreeError> {
        if let Some(e) = self.error {
            return Err(e);
        }
        let tree = self.tree;
        for id in tree
            .weights
            .keys()
            .chain(tree.eligible.keys())
            .chain(tree.names.keys())
        {
            if !tree.contains(id) {
                return Err(TreeError::UnknownNode(id.clone()));
            }
        }
        for (parent, kids) in &tree.children {
            let Some(&eligible) = tree.eligible.get(parent) else { continue };
            let known: Vec<u64> = kids.iter().filter_map(|k| tree.eligible(k)).collect();
            if known.is_empty() {
                continue;
            }
            let sum = known.iter().fold(0u64, |a, b| a.saturating_add(*b));
            if sum > eligible {
                return Err(TreeError::EligibleExceeded {
                    parent: parent.clone(),
                    eligible,
                    children: sum,
                });
            }
        }
        Ok(tree)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tally::jid;

    #[test]
    fn builds_in_declaration_order() {
        let t = JurisdictionTree::builder(jid("CH"))
            .node(jid("CH/ZH"))
            .node(jid("CH/BE"))
            .node(jid("CH/ZH/Uster"))
            .weight(&jid("CH/ZH"), HalfVotes::FULL)
            .weight(&jid("CH/BE"), HalfVotes::FULL)
            .name(&jid("CH/ZH"), "Zürich")
            .build()
            .unwrap();
        assert_eq!(t.children(&jid("CH")), &[jid("CH/ZH"), jid("CH/BE")]);
        assert_eq!(t.leaves(), vec![&jid("CH/BE"), &jid("CH/ZH/Uster")]);
        assert_eq!(t.edges().len(), 3);
        assert_eq!(t.total_weight(), HalfVotes(4));
        assert_eq!(t.find("Zürich"), Some(&jid("CH/ZH")));
        assert_eq!(t.find("BE"), Some(&jid("CH/BE")));
        assert_eq!(t.find("CH/ZH/Uster"), Some(&jid("CH/ZH/Uster")));
        assert_eq!(t.find("Bern"), None);
    }

    #[test]
    fn rejects_orphans_and_duplicates() {
        let e = JurisdictionTree::builder(jid("CH")).node(jid("CH/ZH/Uster")).build();
        assert_eq!(e, Err(TreeError::Orphan(jid("CH/ZH/Uster"))));
        let e = JurisdictionTree::builder(jid("CH"))
            .node(jid("CH/ZH"))
            .node(jid("CH/ZH"))
            .build();
        assert_eq!(e, Err(TreeError::Duplicate(jid("CH/ZH"))));
        let e = JurisdictionTree::builder(jid("CH")).node(jid("DE/BY")).build();
        assert!(matches!(e, Err(TreeError::NotUnderRoot(..))));
    }

    #[test]
    fn eligible_must_cover_children() {
        let e = JurisdictionTree::builder(jid("CH"))
            .node(jid("CH/A"))
            .node(jid("CH/B"))
            .eligible(&jid("CH"), 100)
            .eligible(&jid("CH/A"), 60)
            .eligible(&jid("CH/B"), 50)
            .build();
        assert!(matches!(e, Err(TreeError::EligibleExceeded { children: 110, .. })));
    }

    #[test]
    fn half_votes_display() {
        assert_eq!(HalfVotes(23).to_string(), "11.5");
        assert_eq!(HalfVotes(46).to_string(), "23");
        assert_eq!(HalfVotes::from_weight(0.5), Some(HalfVotes::HALF));
        assert_eq!(HalfVotes::from_weight(0.75), None);
    }
}
