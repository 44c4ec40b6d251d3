//! Directed conflict graph over (requested packet, requesting user) pairs.
//!
//! An edge `v2 -> v1` means the packet of `v1` interferes at the user of
//! `v2`: it is a different packet and that user does not cache it. Edges are
//! a pure function of the vertex set and the cache configuration, so the
//! graph keeps a reference to the cache and evaluates adjacency on demand
//! instead of storing `O(|V|^2)` lists.

use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::model::{DemandMatrix, SystemParams};
use crate::placement::CacheConfiguration;

/// A packet identity `(file, index)`, both 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PacketId {
    pub file: usize,
    pub index: usize,
}

impl PacketId {
    pub fn new(file: usize, index: usize) -> Self {
        Self { file, index }
    }
}

/// A requested packet together with the user requesting it. The derived
/// ordering (user, file, packet index) is the canonical vertex order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex {
    pub user: usize,
    pub packet: PacketId,
}

impl Vertex {
    pub fn new(user: usize, file: usize, index: usize) -> Self {
        Self {
            user,
            packet: PacketId::new(file, index),
        }
    }
}

/// Renders as the 1-based `u:f:b` triple used by the edge-list dump.
impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}",
            self.user + 1,
            self.packet.file + 1,
            self.packet.index + 1
        )
    }
}

#[derive(Clone, Debug)]
pub struct ConflictGraph<'a> {
    cache: &'a CacheConfiguration,
    vertices: Vec<Vertex>,
    /// Distinct packets, sorted.
    packets: Vec<PacketId>,
    /// Index into `packets` for every vertex.
    packet_of: Vec<usize>,
    /// Vertices grouped by packet, in canonical order.
    holders: Vec<Vec<usize>>,
}

/// Builds the conflict graph: one vertex per requested packet missing from
/// the requester's cache. A user asking for the same file twice contributes
/// each missing packet once.
pub fn build_conflict_graph<'a>(
    cache: &'a CacheConfiguration,
    demands: &DemandMatrix,
    params: &SystemParams,
) -> Result<ConflictGraph<'a>> {
    params.validate()?;
    let dims = |what: &str, got: usize, want: usize| {
        if got == want {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "{what} is {got}, params say {want}"
            )))
        }
    };
    dims("cache user count", cache.users(), params.users)?;
    dims("cache library size", cache.files(), params.files)?;
    dims("cache packets per file", cache.packets(), params.packets)?;
    dims("demand user count", demands.users(), params.users)?;
    dims("demand library size", demands.files(), params.files)?;
    dims("requests per user", demands.requests(), params.requests)?;

    let mut vertices = Vec::new();
    for user in 0..params.users {
        for file in demands.distinct_files(user) {
            let cached = cache.cached(user, file);
            let mut next = cached.iter().peekable();
            for index in 0..params.packets {
                if next.peek().is_some_and(|&&b| b as usize == index) {
                    next.next();
                    continue;
                }
                vertices.push(Vertex::new(user, file, index));
            }
        }
    }
    Ok(ConflictGraph::from_vertices(cache, vertices))
}

impl<'a> ConflictGraph<'a> {
    fn from_vertices(cache: &'a CacheConfiguration, mut vertices: Vec<Vertex>) -> Self {
        vertices.sort_unstable();
        let mut packets: Vec<PacketId> = vertices.iter().map(|v| v.packet).collect();
        packets.sort_unstable();
        packets.dedup();
        let packet_of: Vec<usize> = vertices
            .iter()
            .map(|v| packets.binary_search(&v.packet).expect("packet listed"))
            .collect();
        let mut holders = vec![Vec::new(); packets.len()];
        for (i, &p) in packet_of.iter().enumerate() {
            holders[p].push(i);
        }
        Self {
            cache,
            vertices,
            packets,
            packet_of,
            holders,
        }
    }

    pub fn cache(&self) -> &'a CacheConfiguration {
        self.cache
    }

    /// Vertices in canonical order; vertex ids are positions in this slice.
    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, id: usize) -> Vertex {
        self.vertices[id]
    }

    pub fn index_of(&self, v: &Vertex) -> Option<usize> {
        self.vertices.binary_search(v).ok()
    }

    /// Distinct packets carried by the vertices, sorted.
    pub fn packets(&self) -> &[PacketId] {
        &self.packets
    }

    /// Position of vertex `id`'s packet in [`Self::packets`].
    pub fn packet_slot(&self, id: usize) -> usize {
        self.packet_of[id]
    }

    /// Vertex ids carrying packet slot `slot`.
    pub fn holders(&self, slot: usize) -> &[usize] {
        &self.holders[slot]
    }

    /// Users that have at least one vertex, ascending.
    pub fn requesting_users(&self) -> Vec<usize> {
        let mut users: Vec<usize> = self.vertices.iter().map(|v| v.user).collect();
        users.dedup();
        users
    }

    /// Whether `packet` is in the cache of `user`.
    pub fn cached_at(&self, user: usize, packet: PacketId) -> bool {
        self.cache.contains(user, packet.file, packet.index)
    }

    /// Directed edge `from -> to`: the packet of `to` interferes at the user
    /// of `from`.
    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        let (a, b) = (self.vertices[from], self.vertices[to]);
        b.packet != a.packet && !self.cached_at(a.user, b.packet)
    }

    /// Edge in either direction.
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }

    pub fn out_neighbors(&self, id: usize) -> Vec<usize> {
        (0..self.len()).filter(|&w| self.has_edge(id, w)).collect()
    }

    /// `{v}` together with every out-neighbor of `v`, as vertex ids.
    pub fn closed_out_neighborhood_ids(&self, id: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&w| w == id || self.has_edge(id, w))
            .collect()
    }

    pub fn closed_out_neighborhood(&self, v: &Vertex) -> Result<Vec<Vertex>> {
        let id = self
            .index_of(v)
            .ok_or_else(|| Error::UnknownVertex(v.to_string()))?;
        Ok(self
            .closed_out_neighborhood_ids(id)
            .into_iter()
            .map(|w| self.vertices[w])
            .collect())
    }

    /// Number of directed edges, counted per user without enumerating pairs.
    pub fn edge_count(&self) -> usize {
        let mut total = 0;
        for user in self.requesting_users() {
            // Vertices whose packet is missing at `user`.
            let missing: usize = self
                .holders
                .iter()
                .enumerate()
                .filter(|(slot, _)| !self.cached_at(user, self.packets[*slot]))
                .map(|(_, h)| h.len())
                .sum();
            for (id, v) in self.vertices.iter().enumerate() {
                if v.user == user {
                    total += missing - self.holders[self.packet_of[id]].len();
                }
            }
        }
        total
    }

    /// Materialized out-adjacency lists. Quadratic; meant for small graphs.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        (0..self.len()).map(|v| self.out_neighbors(v)).collect()
    }

    /// Plain-text dump: one `v u:f:b` line per vertex, then one
    /// `e u:f:b u:f:b` line per directed edge (from, to). All ids 1-based.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            let _ = writeln!(out, "v {v}");
        }
        for from in 0..self.len() {
            for to in self.out_neighbors(from) {
                let _ = writeln!(out, "e {} {}", self.vertices[from], self.vertices[to]);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RequestMode;
    use crate::placement::PlacementKind;
    use num_rational::Ratio;

    /// Two users, two files, B = 1: user 1 caches file 1 and wants file 2,
    /// user 2 caches file 2 and wants file 1.
    fn xor_instance() -> (CacheConfiguration, DemandMatrix, SystemParams) {
        let cache = CacheConfiguration::from_sets(
            1,
            PlacementKind::Scalar,
            vec![vec![vec![0], vec![]], vec![vec![], vec![0]]],
        )
        .unwrap();
        let demands =
            DemandMatrix::from_columns(vec![vec![1], vec![0]], 2, RequestMode::Iid).unwrap();
        let params = SystemParams::new(2, 2, Ratio::from_integer(1), 1, 1).unwrap();
        (cache, demands, params)
    }

    #[test]
    fn xor_instance_has_no_edges() {
        let (cache, demands, params) = xor_instance();
        let g = build_conflict_graph(&cache, &demands, &params).unwrap();
        assert_eq!(g.vertices(), &[Vertex::new(0, 1, 0), Vertex::new(1, 0, 0)]);
        assert_eq!(g.edge_count(), 0);
        for v in g.vertices() {
            assert_eq!(g.closed_out_neighborhood(v).unwrap(), vec![*v]);
        }
    }

    #[test]
    fn full_cache_gives_empty_graph() {
        let cache = CacheConfiguration::from_sets(
            2,
            PlacementKind::Packetized,
            vec![vec![vec![0, 1], vec![0, 1]]; 3],
        )
        .unwrap();
        let demands =
            DemandMatrix::from_columns(vec![vec![0, 1]; 3], 2, RequestMode::Distinct).unwrap();
        let params = SystemParams::new(3, 2, Ratio::from_integer(2), 2, 2).unwrap();
        let g = build_conflict_graph(&cache, &demands, &params).unwrap();
        assert!(g.is_empty());
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn empty_cache_interferes_everywhere() {
        let n = 3;
        let b = 2;
        let cache =
            CacheConfiguration::from_sets(b, PlacementKind::Packetized, vec![vec![vec![]; 4]; n])
                .unwrap();
        // Users 1 and 2 share file 1; user 3 wants file 3.
        let demands =
            DemandMatrix::from_columns(vec![vec![0], vec![0], vec![2]], 4, RequestMode::Iid)
                .unwrap();
        let params = SystemParams::new(n, 4, Ratio::from_integer(0), 1, b).unwrap();
        let g = build_conflict_graph(&cache, &demands, &params).unwrap();
        assert_eq!(g.len(), n * b);
        for a in 0..g.len() {
            for c in 0..g.len() {
                let same = g.vertex(a).packet == g.vertex(c).packet;
                assert_eq!(g.has_edge(a, c), !same);
            }
            let twins = g.holders(g.packet_slot(a)).len() - 1;
            assert_eq!(g.closed_out_neighborhood_ids(a).len(), g.len() - twins);
        }
        // 6 vertices, each missing its one same-packet partner (users 1, 2)
        // or alone (user 3): 4*4 + 2*5 ordered pairs.
        assert_eq!(g.edge_count(), 26);
    }

    #[test]
    fn duplicate_requests_are_merged() {
        let cache = CacheConfiguration::from_sets(
            3,
            PlacementKind::Packetized,
            vec![vec![vec![1], vec![]]],
        )
        .unwrap();
        let demands = DemandMatrix::from_columns(vec![vec![0, 0]], 2, RequestMode::Iid).unwrap();
        let params = SystemParams::new(1, 2, Ratio::new(1, 3), 2, 3).unwrap();
        let g = build_conflict_graph(&cache, &demands, &params).unwrap();
        assert_eq!(g.vertices(), &[Vertex::new(0, 0, 0), Vertex::new(0, 0, 2)]);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let (cache, demands, _) = xor_instance();
        let params = SystemParams::new(3, 2, Ratio::from_integer(1), 1, 1).unwrap();
        assert!(build_conflict_graph(&cache, &demands, &params).is_err());
    }

    #[test]
    fn unknown_vertex_is_rejected() {
        let (cache, demands, params) = xor_instance();
        let g = build_conflict_graph(&cache, &demands, &params).unwrap();
        assert!(g.closed_out_neighborhood(&Vertex::new(0, 0, 0)).is_err());
    }

    #[test]
    fn edge_list_format() {
        let cache =
            CacheConfiguration::from_sets(1, PlacementKind::Scalar, vec![vec![vec![], vec![]]; 2])
                .unwrap();
        let demands =
            DemandMatrix::from_columns(vec![vec![1], vec![0]], 2, RequestMode::Iid).unwrap();
        let params = SystemParams::new(2, 2, Ratio::from_integer(0), 1, 1).unwrap();
        let g = build_conflict_graph(&cache, &demands, &params).unwrap();
        assert_eq!(
            g.to_edge_list(),
            "v 1:2:1\nv 2:1:1\ne 1:2:1 2:1:1\ne 2:1:1 1:2:1\n"
        );
    }
}
