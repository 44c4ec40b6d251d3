//! Greedy constrained local coloring (GCLC) of the conflict graph and the
//! local-coloring transmission count.
//!
//! Two vertices may share a color iff they are non-adjacent in the
//! undirected conflict graph: they carry the same packet, or each user
//! caches the other's packet.
//!
//! [`gclc_color`] runs three deterministic greedy passes and keeps the one
//! needing the fewest transmissions:
//!
//! * **canonical**: vertices in canonical order; each new class absorbs every
//!   later uncolored vertex compatible with all current members.
//! * **label-grouped**: a vertex's label is its requester together with every
//!   user caching its packet. Classes are built inside a label group, which
//!   yields the coded multicast groups behind the `psi` term of the rate
//!   bound.
//! * **packet-grouped**: one class per distinct packet (naive multicast),
//!   which tracks the `m_bar - M_bar` term.

use std::borrow::Cow;
use std::collections::HashMap;
use std::fmt::Write as _;

use crate::conflict::ConflictGraph;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    Canonical,
    LabelGrouped,
    PacketGrouped,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [
        Strategy::Canonical,
        Strategy::LabelGrouped,
        Strategy::PacketGrouped,
    ];
}

/// A proper coloring with its local-coloring statistics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coloring {
    /// 0-based color of every vertex, by vertex id.
    colors: Vec<usize>,
    num_colors: usize,
    local_value: usize,
    transmissions: usize,
}

impl Coloring {
    /// Validates properness and computes the statistics. Colors must be the
    /// consecutive ids `0..k`.
    pub fn new(g: &ConflictGraph<'_>, colors: Vec<usize>) -> Result<Self> {
        if colors.len() != g.len() {
            return Err(Error::Dimension(format!(
                "{} colors for {} vertices",
                colors.len(),
                g.len()
            )));
        }
        let num_colors = colors.iter().max().map_or(0, |&c| c + 1);
        let classes = classes_of(&colors, num_colors);
        if let Some(empty) = classes.iter().position(Vec::is_empty) {
            return Err(Error::InvalidArgument(format!(
                "color ids are not consecutive: color {} is unused",
                empty + 1
            )));
        }
        check_proper(g, &classes)?;
        let (local_value, transmissions) = local_statistics(g, &colors, num_colors);
        Ok(Self {
            colors,
            num_colors,
            local_value,
            transmissions,
        })
    }

    pub fn colors(&self) -> &[usize] {
        &self.colors
    }

    pub fn color(&self, vertex: usize) -> usize {
        self.colors[vertex]
    }

    pub fn num_colors(&self) -> usize {
        self.num_colors
    }

    /// `max_v |c(N+[v])|` over the closed out-neighborhoods.
    pub fn local_value(&self) -> usize {
        self.local_value
    }

    /// Length of the index code built on this coloring: the largest number of
    /// classes containing a packet some requesting user lacks. Equals
    /// [`Self::local_value`] whenever every packet sits in a single class; a
    /// packet split over several classes forces its requesters to treat the
    /// extra classes as unknowns as well.
    pub fn transmissions(&self) -> usize {
        self.transmissions
    }

    /// Vertex ids of every class, by color.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        classes_of(&self.colors, self.num_colors)
    }

    /// `user,file,packet,color` rows, all 1-based, in vertex order.
    pub fn to_csv(&self, g: &ConflictGraph<'_>) -> String {
        let mut out = String::from("user,file,packet,color\n");
        for (id, v) in g.vertices().iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                v.user + 1,
                v.packet.file + 1,
                v.packet.index + 1,
                self.colors[id] + 1
            );
        }
        out
    }
}

fn classes_of(colors: &[usize], num_colors: usize) -> Vec<Vec<usize>> {
    let mut classes = vec![Vec::new(); num_colors];
    for (v, &c) in colors.iter().enumerate() {
        classes[c].push(v);
    }
    classes
}

fn check_proper(g: &ConflictGraph<'_>, classes: &[Vec<usize>]) -> Result<()> {
    for (color, class) in classes.iter().enumerate() {
        for (i, &a) in class.iter().enumerate() {
            for &b in &class[i + 1..] {
                if g.adjacent(a, b) {
                    return Err(Error::ImproperColoring(a, b, color + 1));
                }
            }
        }
    }
    Ok(())
}

/// Computes `(local_value, transmissions)` in `O(|V| * n + |V| * k)` where
/// `k` is the number of classes sharing a packet.
fn local_statistics(g: &ConflictGraph<'_>, colors: &[usize], num_colors: usize) -> (usize, usize) {
    if g.is_empty() {
        return (0, 0);
    }
    // Per packet slot: (color, how many holders of the packet carry it).
    let slot_colors: Vec<Vec<(usize, usize)>> = (0..g.packets().len())
        .map(|slot| {
            let mut counts: Vec<(usize, usize)> = Vec::new();
            for &v in g.holders(slot) {
                match counts.iter_mut().find(|(c, _)| *c == colors[v]) {
                    Some(entry) => entry.1 += 1,
                    None => counts.push((colors[v], 1)),
                }
            }
            counts
        })
        .collect();

    let mut local = 0;
    let mut transmissions = 0;
    let mut missing = vec![0usize; num_colors];
    for user in g.requesting_users() {
        missing.fill(0);
        for (slot, &packet) in g.packets().iter().enumerate() {
            if !g.cached_at(user, packet) {
                for &(c, k) in &slot_colors[slot] {
                    missing[c] += k;
                }
            }
        }
        let distinct = missing.iter().filter(|&&k| k > 0).count();
        transmissions = transmissions.max(distinct);
        for (id, v) in g.vertices().iter().enumerate() {
            if v.user != user {
                continue;
            }
            // Colors seen only on same-packet holders leave N+[v], except
            // v's own color.
            let lost = slot_colors[g.packet_slot(id)]
                .iter()
                .filter(|&&(c, k)| c != colors[id] && missing[c] == k)
                .count();
            local = local.max(distinct - lost);
        }
    }
    (local, transmissions)
}

/// Recomputes `max_v |c(N+[v])|` directly from the definition.
pub fn local_value(g: &ConflictGraph<'_>, c: &Coloring) -> Result<usize> {
    if c.colors.len() != g.len() {
        return Err(Error::Dimension("coloring does not match graph".into()));
    }
    check_proper(g, &c.classes())?;
    let mut best = 0;
    let mut seen = vec![false; c.num_colors];
    for v in 0..g.len() {
        seen.fill(false);
        let mut count = 0;
        for w in g.closed_out_neighborhood_ids(v) {
            if !seen[c.colors[w]] {
                seen[c.colors[w]] = true;
                count += 1;
            }
        }
        best = best.max(count);
    }
    Ok(best)
}

/// Whether `w` may join a class holding `x`.
#[inline]
fn compatible(g: &ConflictGraph<'_>, w: usize, x: usize) -> bool {
    !g.adjacent(w, x)
}

/// Greedy class building over `order`: each uncolored vertex opens a class,
/// then candidates from `pool(v)` join in order when compatible with every
/// member.
fn greedy<'g, P>(g: &ConflictGraph<'_>, order: &[usize], mut pool: P) -> Vec<usize>
where
    P: FnMut(usize) -> Cow<'g, [usize]>,
{
    const UNSET: usize = usize::MAX;
    let mut colors = vec![UNSET; g.len()];
    let mut next = 0;
    for &v in order {
        if colors[v] != UNSET {
            continue;
        }
        colors[v] = next;
        let mut members = vec![v];
        for &w in pool(v).iter() {
            if colors[w] == UNSET && members.iter().all(|&x| compatible(g, w, x)) {
                colors[w] = next;
                members.push(w);
            }
        }
        next += 1;
    }
    colors
}

/// Colors `g` with one strategy.
pub fn color_with(g: &ConflictGraph<'_>, strategy: Strategy) -> Coloring {
    let order: Vec<usize> = (0..g.len()).collect();
    let colors = match strategy {
        Strategy::Canonical => {
            // Candidates after v only; earlier ones are already colored.
            let partners = Partners::new(g);
            greedy(g, &order, |v| Cow::Owned(partners.after(g, v)))
        }
        Strategy::LabelGrouped => {
            let labels: Vec<Vec<u64>> = (0..g.len()).map(|v| label(g, v)).collect();
            let mut groups: HashMap<&[u64], Vec<usize>> = HashMap::new();
            for (v, l) in labels.iter().enumerate() {
                groups.entry(l.as_slice()).or_default().push(v);
            }
            greedy(g, &order, |v| {
                Cow::Borrowed(groups[labels[v].as_slice()].as_slice())
            })
        }
        Strategy::PacketGrouped => {
            let mut colors = vec![0; g.len()];
            for slot in 0..g.packets().len() {
                for &v in g.holders(slot) {
                    colors[v] = slot;
                }
            }
            colors
        }
    };
    Coloring::new(g, colors).expect("greedy strategies produce proper colorings")
}

/// Vertices not adjacent to a given one, found without a full scan.
struct Partners {
    /// `by_pair[a * n + b]`: vertices of user `b` whose packet user `a` caches.
    by_pair: Vec<Vec<usize>>,
    users: usize,
}

impl Partners {
    fn new(g: &ConflictGraph<'_>) -> Self {
        let users = g.cache().users();
        let mut by_pair = vec![Vec::new(); users * users];
        for (w, vertex) in g.vertices().iter().enumerate() {
            for a in 0..users {
                if a != vertex.user && g.cached_at(a, vertex.packet) {
                    by_pair[a * users + vertex.user].push(w);
                }
            }
        }
        Self { by_pair, users }
    }

    /// Ascending ids `w > v` with no edge between `v` and `w`.
    fn after(&self, g: &ConflictGraph<'_>, v: usize) -> Vec<usize> {
        let vertex = g.vertex(v);
        let mut out: Vec<usize> = g
            .holders(g.packet_slot(v))
            .iter()
            .copied()
            .filter(|&w| w > v)
            .collect();
        for b in 0..self.users {
            if b != vertex.user && g.cached_at(b, vertex.packet) {
                let list = &self.by_pair[vertex.user * self.users + b];
                let start = list.partition_point(|&w| w <= v);
                out.extend_from_slice(&list[start..]);
            }
        }
        out.sort_unstable();
        out
    }
}

/// Requester plus cachers of the vertex's packet, as a user bitset.
fn label(g: &ConflictGraph<'_>, v: usize) -> Vec<u64> {
    let users = g.cache().users();
    let mut bits = vec![0u64; users.div_ceil(64)];
    let vertex = g.vertex(v);
    for u in 0..users {
        if u == vertex.user || g.cached_at(u, vertex.packet) {
            bits[u / 64] |= 1 << (u % 64);
        }
    }
    bits
}

/// GCLC: the best of the three greedy strategies by transmissions, then by
/// local value, then in [`Strategy::ALL`] order.
pub fn gclc_color(g: &ConflictGraph<'_>) -> Coloring {
    best_of(g, &Strategy::ALL).1
}

/// Runs `strategies` and returns the winner with its coloring.
pub fn best_of(g: &ConflictGraph<'_>, strategies: &[Strategy]) -> (Strategy, Coloring) {
    strategies
        .iter()
        .map(|&s| (s, color_with(g, s)))
        .min_by_key(|(_, c)| (c.transmissions(), c.local_value()))
        .expect("at least one strategy")
}

/// Largest graph [`exact_local_chromatic`] accepts.
pub const EXACT_LIMIT: usize = 12;

/// True directed local chromatic number by exhaustive search over set
/// partitions (restricted-growth strings) with branch-and-bound.
pub fn exact_local_chromatic(g: &ConflictGraph<'_>) -> Result<usize> {
    let n = g.len();
    if n > EXACT_LIMIT {
        return Err(Error::GraphTooLarge {
            vertices: n,
            limit: EXACT_LIMIT,
        });
    }
    if n == 0 {
        return Ok(0);
    }
    let adj = g.adjacency();
    let undirected: Vec<Vec<bool>> = (0..n)
        .map(|a| (0..n).map(|b| g.adjacent(a, b)).collect())
        .collect();
    let mut search = ExactSearch {
        adj,
        undirected,
        colors: vec![0; n],
        best: n,
    };
    search.run(0, 0);
    Ok(search.best)
}

struct ExactSearch {
    adj: Vec<Vec<usize>>,
    undirected: Vec<Vec<bool>>,
    colors: Vec<usize>,
    best: usize,
}

impl ExactSearch {
    /// Largest color count over closed out-neighborhoods restricted to the
    /// first `assigned` vertices. Only grows as more vertices are colored.
    fn partial_value(&self, assigned: usize) -> usize {
        (0..self.adj.len())
            .map(|v| {
                let mut mask = 0u32;
                if v < assigned {
                    mask |= 1 << self.colors[v];
                }
                for &w in &self.adj[v] {
                    if w < assigned {
                        mask |= 1 << self.colors[w];
                    }
                }
                mask.count_ones() as usize
            })
            .max()
            .unwrap_or(0)
    }

    fn run(&mut self, v: usize, used: usize) {
        if self.partial_value(v) >= self.best {
            return;
        }
        if v == self.colors.len() {
            self.best = self.partial_value(v);
            return;
        }
        for c in 0..=used {
            if (0..v).any(|w| self.colors[w] == c && self.undirected[v][w]) {
                continue;
            }
            self.colors[v] = c;
            self.run(v + 1, used.max(c + 1));
        }
    }
}
