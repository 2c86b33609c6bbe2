//! Follower communication graph and leader observation graph.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Undirected 0/1 communication graph among followers.
#[derive(Debug, Clone, PartialEq)]
pub struct FollowerGraph {
    adjacency: Vec<Vec<u8>>,
    neighbors: Vec<Vec<usize>>,
}

impl FollowerGraph {
    /// Builds the graph from a square adjacency matrix. The matrix must be
    /// symmetric, 0/1 valued and have an empty diagonal. Connectivity is not
    /// required here; see [`is_connected`].
    pub fn new(adjacency: Vec<Vec<u8>>) -> Result<Self> {
        let n = adjacency.len();
        if n == 0 {
            return Err(Error::invalid("followers.count", "graph has no nodes"));
        }
        if let Some((i, row)) = adjacency.iter().enumerate().find(|(_, row)| row.len() != n) {
            return Err(Error::invalid(
                "adjacency.shape",
                format!("row {i} has {} entries, expected {n}", row.len()),
            ));
        }
        for (i, row) in adjacency.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                if w > 1 {
                    return Err(Error::invalid(
                        "adjacency.entries",
                        format!("a[{i}][{j}] = {w}; weights must be 0 or 1"),
                    ));
                }
                if i == j && w != 0 {
                    return Err(Error::invalid("adjacency.diagonal", format!("self loop at node {i}")));
                }
                if adjacency[j][i] != w {
                    return Err(Error::invalid(
                        "adjacency.symmetric",
                        format!("a[{i}][{j}] != a[{j}][{i}]"),
                    ));
                }
            }
        }
        let neighbors = adjacency
            .iter()
            .map(|row| row.iter().enumerate().filter(|(_, &w)| w == 1).map(|(j, _)| j).collect())
            .collect();
        Ok(Self { adjacency, neighbors })
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        f64::from(self.adjacency[i][j])
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn adjacency(&self) -> &[Vec<u8>] {
        &self.adjacency
    }
}

/// Breadth-first reachability from node 0.
pub fn is_connected(g: &FollowerGraph) -> bool {
    let n = g.node_count();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut reached = 1;
    while let Some(i) = queue.pop_front() {
        for &j in g.neighbors(i) {
            if !seen[j] {
                seen[j] = true;
                reached += 1;
                queue.push_back(j);
            }
        }
    }
    reached == n
}

/// Bipartite graph recording which followers observe which leaders.
/// Rows are leaders, columns are followers.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationGraph {
    edges: Vec<Vec<u8>>,
    follower_count: usize,
}

impl ObservationGraph {
    /// Every leader must be observed by at least one follower.
    pub fn new(edges: Vec<Vec<u8>>, follower_count: usize) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::invalid("leaders.count", "no leaders in observation matrix"));
        }
        for (j, row) in edges.iter().enumerate() {
            if row.len() != follower_count {
                return Err(Error::invalid(
                    "observation.shape",
                    format!("leader row {j} has {} entries, expected {follower_count}", row.len()),
                ));
            }
            if let Some(&w) = row.iter().find(|&&w| w > 1) {
                return Err(Error::invalid(
                    "observation.entries",
                    format!("leader row {j} contains {w}; entries must be 0 or 1"),
                ));
            }
            if row.iter().all(|&w| w == 0) {
                return Err(Error::invalid(
                    "observation.coverage",
                    format!("leader {j} is not observed by any follower"),
                ));
            }
        }
        Ok(Self { edges, follower_count })
    }

    pub fn leader_count(&self) -> usize {
        self.edges.len()
    }

    pub fn follower_count(&self) -> usize {
        self.follower_count
    }

    pub fn observes(&self, follower: usize, leader: usize) -> bool {
        self.edges[leader][follower] == 1
    }

    /// Leaders visible to `follower`.
    pub fn observed_leaders(&self, follower: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.leader_count()).filter(move |&j| self.observes(follower, j))
    }

    pub fn edges(&self) -> &[Vec<u8>] {
        &self.edges
    }
}

/// Number of followers observing `leader`.
pub fn observer_count(g: &ObservationGraph, leader: usize) -> usize {
    g.edges[leader].iter().filter(|&&w| w == 1).count()
}
