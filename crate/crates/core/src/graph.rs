//! Bipartite user-item graphs, their largest connected component and the
//! same-partition co-occurrence projections.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Upper bound on the number of edges a projection may materialize.
pub const DEFAULT_PROJECTION_CAP: usize = 50_000_000;

/// One implicit-feedback interaction as read from the input log.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InteractionRecord {
    pub user_id: String,
    pub item_id: String,
}

/// Which side of the bipartite graph a node lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Partition {
    User,
    Item,
}

impl Partition {
    pub fn opposite(self) -> Self {
        match self {
            Partition::User => Partition::Item,
            Partition::Item => Partition::User,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Partition::User => "user",
            Partition::Item => "item",
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Compressed adjacency: the neighbors of `v` are `targets[offsets[v]..offsets[v + 1]]`.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Csr {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl Csr {
    /// `pairs` must be sorted by `(source, target)` and free of duplicates.
    fn from_sorted_pairs(n: usize, pairs: impl Iterator<Item = (u32, u32)>) -> Self {
        let mut offsets = vec![0usize; n + 1];
        let mut targets = Vec::new();
        for (s, t) in pairs {
            offsets[s as usize + 1] += 1;
            targets.push(t);
        }
        for v in 0..n {
            offsets[v + 1] += offsets[v];
        }
        Csr { offsets, targets }
    }

    #[inline]
    fn neighbors(&self, v: usize) -> &[u32] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    fn len(&self) -> usize {
        self.offsets.len() - 1
    }
}

/// Immutable undirected bipartite graph with dual sorted adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteGraph {
    users: Csr,
    items: Csr,
    user_ids: Vec<Arc<str>>,
    item_ids: Vec<Arc<str>>,
}

impl BipartiteGraph {
    /// Builds a graph from explicit node tokens and an edge list. Duplicate
    /// edges are collapsed.
    pub fn with_ids(
        user_ids: Vec<Arc<str>>,
        item_ids: Vec<Arc<str>>,
        mut edges: Vec<(u32, u32)>,
    ) -> Result<Self> {
        let (nu, ni) = (user_ids.len(), item_ids.len());
        if let Some(&(u, i)) = edges
            .iter()
            .find(|&&(u, i)| u as usize >= nu || i as usize >= ni)
        {
            return Err(Error::InvalidArgument(format!(
                "edge ({u}, {i}) out of range for {nu} users and {ni} items"
            )));
        }
        edges.sort_unstable();
        edges.dedup();
        let users = Csr::from_sorted_pairs(nu, edges.iter().copied());
        let mut flipped: Vec<(u32, u32)> = edges.iter().map(|&(u, i)| (i, u)).collect();
        flipped.sort_unstable();
        let items = Csr::from_sorted_pairs(ni, flipped.into_iter());
        Ok(BipartiteGraph {
            users,
            items,
            user_ids,
            item_ids,
        })
    }

    /// Builds a graph over index-named nodes (`u0, u1, ...`, `i0, i1, ...`).
    pub fn from_edges(num_users: usize, num_items: usize, edges: Vec<(u32, u32)>) -> Result<Self> {
        let user_ids = (0..num_users).map(|u| Arc::from(format!("u{u}"))).collect();
        let item_ids = (0..num_items).map(|i| Arc::from(format!("i{i}"))).collect();
        Self::with_ids(user_ids, item_ids, edges)
    }

    /// Assigns contiguous indices by first appearance of each token.
    pub fn from_records(records: &[InteractionRecord]) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::NoInteractions);
        }
        let mut user_index: HashMap<&str, u32> = HashMap::new();
        let mut item_index: HashMap<&str, u32> = HashMap::new();
        let mut user_ids = Vec::new();
        let mut item_ids = Vec::new();
        let mut edges = Vec::with_capacity(records.len());
        for r in records {
            let u = *user_index.entry(&r.user_id).or_insert_with(|| {
                user_ids.push(Arc::from(r.user_id.as_str()));
                (user_ids.len() - 1) as u32
            });
            let i = *item_index.entry(&r.item_id).or_insert_with(|| {
                item_ids.push(Arc::from(r.item_id.as_str()));
                (item_ids.len() - 1) as u32
            });
            edges.push((u, i));
        }
        Self::with_ids(user_ids, item_ids, edges)
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn num_edges(&self) -> usize {
        self.users.targets.len()
    }

    pub fn count(&self, partition: Partition) -> usize {
        match partition {
            Partition::User => self.num_users(),
            Partition::Item => self.num_items(),
        }
    }

    /// Sorted items of user `u`.
    pub fn user_neighbors(&self, u: usize) -> &[u32] {
        self.users.neighbors(u)
    }

    /// Sorted users of item `i`.
    pub fn item_neighbors(&self, i: usize) -> &[u32] {
        self.items.neighbors(i)
    }

    pub fn neighbors(&self, partition: Partition, v: usize) -> &[u32] {
        match partition {
            Partition::User => self.users.neighbors(v),
            Partition::Item => self.items.neighbors(v),
        }
    }

    pub fn user_degree(&self, u: usize) -> usize {
        self.users.neighbors(u).len()
    }

    pub fn item_degree(&self, i: usize) -> usize {
        self.items.neighbors(i).len()
    }

    pub fn degrees(&self, partition: Partition) -> Vec<usize> {
        (0..self.count(partition))
            .map(|v| self.neighbors(partition, v).len())
            .collect()
    }

    pub fn max_degree(&self) -> usize {
        let du = (0..self.num_users()).map(|u| self.user_degree(u)).max();
        let di = (0..self.num_items()).map(|i| self.item_degree(i)).max();
        du.into_iter().chain(di).max().unwrap_or(0)
    }

    /// Edges as `(user, item)`, sorted by user then item.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.num_users())
            .flat_map(move |u| self.user_neighbors(u).iter().map(move |&i| (u as u32, i)))
    }

    pub fn user_id(&self, u: usize) -> &str {
        &self.user_ids[u]
    }

    pub fn item_id(&self, i: usize) -> &str {
        &self.item_ids[i]
    }

    pub fn node_id(&self, partition: Partition, v: usize) -> &str {
        match partition {
            Partition::User => self.user_id(v),
            Partition::Item => self.item_id(v),
        }
    }

    pub fn has_edge(&self, u: usize, i: u32) -> bool {
        self.user_neighbors(u).binary_search(&i).is_ok()
    }

    /// Subgraph spanned by `edges` (indices into `self`). Nodes without a
    /// retained edge are dropped and the rest re-indexed in their original
    /// relative order.
    pub fn edge_subgraph(&self, edges: &[(u32, u32)]) -> BipartiteGraph {
        let mut user_map = vec![u32::MAX; self.num_users()];
        let mut item_map = vec![u32::MAX; self.num_items()];
        for &(u, i) in edges {
            user_map[u as usize] = 0;
            item_map[i as usize] = 0;
        }
        let user_ids = compact(&mut user_map, &self.user_ids);
        let item_ids = compact(&mut item_map, &self.item_ids);
        let remapped = edges
            .iter()
            .map(|&(u, i)| (user_map[u as usize], item_map[i as usize]))
            .collect();
        BipartiteGraph::with_ids(user_ids, item_ids, remapped)
            .expect("remapped edges are in range")
    }

    /// `user_id<TAB>item_id` lines, one per edge.
    pub fn to_tsv(&self) -> String {
        let mut out = String::with_capacity(self.num_edges() * 16);
        for (u, i) in self.edges() {
            out.push_str(self.user_id(u as usize));
            out.push('\t');
            out.push_str(self.item_id(i as usize));
            out.push('\n');
        }
        out
    }

    /// Compacted index edge list with a `u,i` header.
    pub fn to_edge_csv(&self) -> String {
        let mut out = String::from("u,i\n");
        for (u, i) in self.edges() {
            out.push_str(&format!("{u},{i}\n"));
        }
        out
    }
}

fn compact(map: &mut [u32], ids: &[Arc<str>]) -> Vec<Arc<str>> {
    let mut kept = Vec::new();
    for (old, slot) in map.iter_mut().enumerate() {
        if *slot != u32::MAX {
            *slot = kept.len() as u32;
            kept.push(ids[old].clone());
        }
    }
    kept
}

/// Parses `user<TAB>item` lines. Extra columns are ignored, as are blank
/// lines and lines starting with `#`.
pub fn parse_interactions(text: &str) -> Result<Vec<InteractionRecord>> {
    let mut records = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        match (fields.next(), fields.next()) {
            (Some(u), Some(i)) => records.push(InteractionRecord {
                user_id: u.to_string(),
                item_id: i.to_string(),
            }),
            _ => {
                return Err(Error::MalformedLine {
                    line: n + 1,
                    reason: "expected at least two fields".into(),
                })
            }
        }
    }
    if records.is_empty() {
        return Err(Error::NoInteractions);
    }
    Ok(records)
}

/// Parses an interaction log and builds the deduplicated graph.
pub fn ingest(text: &str) -> Result<BipartiteGraph> {
    BipartiteGraph::from_records(&parse_interactions(text)?)
}

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
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

/// Keeps the component with the most nodes; ties go to the one with more
/// edges, then to the one containing the lowest node index (users first,
/// then items).
pub fn largest_connected_component(g: &BipartiteGraph) -> BipartiteGraph {
    let nu = g.num_users();
    let n = nu + g.num_items();
    let mut dsu = DisjointSet::new(n);
    for (u, i) in g.edges() {
        dsu.union(u as usize, nu + i as usize);
    }
    // (nodes, edges, min index) per root
    let mut stats: HashMap<usize, (usize, usize, usize)> = HashMap::new();
    for v in 0..n {
        let root = dsu.find(v);
        let s = stats.entry(root).or_insert((0, 0, v));
        s.0 += 1;
        s.2 = s.2.min(v);
    }
    for (u, _) in g.edges() {
        let root = dsu.find(u as usize);
        stats.get_mut(&root).expect("root has stats").1 += 1;
    }
    let best = stats
        .iter()
        .max_by(|a, b| {
            let (na, ea, ma) = *a.1;
            let (nb, eb, mb) = *b.1;
            na.cmp(&nb).then(ea.cmp(&eb)).then(mb.cmp(&ma))
        })
        .map(|(&root, _)| root);
    let Some(best) = best else {
        return g.clone();
    };
    let kept: Vec<(u32, u32)> = g
        .edges()
        .filter(|&(u, _)| dsu.find(u as usize) == best)
        .collect();
    g.edge_subgraph(&kept)
}

/// Same-partition co-occurrence graph, binarized and free of self-loops for
/// topology, with co-occurrence counts kept as weights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjectedGraph {
    pub partition: Partition,
    pub n: usize,
    /// `(v, w, weight)` with `v < w` and `weight = |N(v) ∩ N(w)| >= 1`.
    pub edges: Vec<(u32, u32, u32)>,
    /// Number of distinct co-neighbors of each node.
    pub degrees: Vec<u32>,
}

impl ProjectedGraph {
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Weighted neighbor lists `(w, weight)` for every node, sorted by `w`.
    pub fn adjacency(&self) -> Vec<Vec<(u32, u32)>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(v, w, c) in &self.edges {
            adj[v as usize].push((w, c));
            adj[w as usize].push((v, c));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }
}

/// Computes the projection onto `partition` by wedge enumeration, failing
/// once more than `cap` edges would be stored.
pub fn project(g: &BipartiteGraph, partition: Partition, cap: usize) -> Result<ProjectedGraph> {
    let other = partition.opposite();
    let n = g.count(partition);
    let hub_error = |hub: usize| Error::ProjectionCap {
        cap,
        hub: g.node_id(other, hub).to_string(),
        hub_degree: g.neighbors(other, hub).len(),
    };
    // A single hub alone can already overflow the cap.
    for x in 0..g.count(other) {
        let d = g.neighbors(other, x).len();
        if d * d.saturating_sub(1) / 2 > cap {
            return Err(hub_error(x));
        }
    }

    let mut counts = vec![0u32; n];
    let mut touched: Vec<u32> = Vec::new();
    let mut edges = Vec::new();
    let mut degrees = vec![0u32; n];
    for v in 0..n {
        for &x in g.neighbors(partition, v) {
            for &w in g.neighbors(other, x as usize) {
                if (w as usize) <= v {
                    continue;
                }
                if counts[w as usize] == 0 {
                    touched.push(w);
                }
                counts[w as usize] += 1;
            }
        }
        touched.sort_unstable();
        for &w in &touched {
            edges.push((v as u32, w, counts[w as usize]));
            degrees[v] += 1;
            degrees[w as usize] += 1;
            counts[w as usize] = 0;
        }
        touched.clear();
        if edges.len() > cap {
            let hub = g
                .neighbors(partition, v)
                .iter()
                .max_by_key(|&&x| (g.neighbors(other, x as usize).len(), std::cmp::Reverse(x)))
                .map(|&x| x as usize)
                .unwrap_or(0);
            return Err(hub_error(hub));
        }
    }
    Ok(ProjectedGraph {
        partition,
        n,
        edges,
        degrees,
    })
}
