//! MDS-coded multicast delivery over a colored conflict graph.
//!
//! Class `j` of the coloring is assigned column `j` of a `nu x |C|`
//! Vandermonde generator on the points `alpha^0, ..., alpha^(|C|-1)`, so any
//! `nu` columns are linearly independent. The transmitted codeword is
//! `X = sum_j a_j s_j`, where `s_j` sums the distinct packets in class `j`.
//!
//! A user sees every class whose packets it caches as known side
//! information; the remaining classes (at most `nu` of them by construction
//! of [`Coloring::transmissions`]) form a transposed Vandermonde system that
//! is solved in `O(k^2)` with Lagrange interpolation.

use std::collections::HashMap;

use crate::coloring::Coloring;
use crate::conflict::{ConflictGraph, PacketId};
use crate::error::{Error, Result};
use crate::gf::{FieldMatrix, GaloisField, Symbol};

/// Source of packet payload symbols.
pub trait Payloads {
    fn symbol(&self, packet: PacketId) -> Option<Symbol>;
}

impl Payloads for HashMap<PacketId, Symbol> {
    fn symbol(&self, packet: PacketId) -> Option<Symbol> {
        self.get(&packet).copied()
    }
}

/// One symbol per packet for a whole library.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Library {
    packets: usize,
    symbols: Vec<Symbol>,
}

impl Library {
    pub fn new(files: usize, packets: usize, symbols: Vec<Symbol>) -> Result<Self> {
        if symbols.len() != files * packets {
            return Err(Error::Dimension(format!(
                "{} symbols for {files} files of {packets} packets",
                symbols.len()
            )));
        }
        Ok(Self { packets, symbols })
    }

    /// Uniformly random symbols.
    pub fn random<R: rand::Rng + ?Sized>(
        files: usize,
        packets: usize,
        field: &GaloisField,
        rng: &mut R,
    ) -> Self {
        let symbols = (0..files * packets)
            .map(|_| field.element(rng.random::<u32>()))
            .collect();
        Self { packets, symbols }
    }
}

impl Payloads for Library {
    fn symbol(&self, packet: PacketId) -> Option<Symbol> {
        if packet.index >= self.packets {
            return None;
        }
        self.symbols
            .get(packet.file * self.packets + packet.index)
            .copied()
    }
}

/// `nu x num_colors` Vandermonde generator, entry `(i, j) = alpha^(i*j)`.
pub fn mds_generator(num_colors: usize, nu: usize, field: &GaloisField) -> Result<FieldMatrix> {
    check_field(num_colors, field)?;
    if nu > num_colors {
        return Err(Error::InvalidArgument(format!(
            "code dimension {nu} exceeds length {num_colors}"
        )));
    }
    let mut g = FieldMatrix::zeros(nu, num_colors);
    for i in 0..nu {
        for j in 0..num_colors {
            g.set(i, j, field.alpha_pow(i * j));
        }
    }
    Ok(g)
}

fn check_field(num_colors: usize, field: &GaloisField) -> Result<()> {
    if num_colors > field.nonzero() {
        return Err(Error::FieldTooSmall {
            bits: field.bits(),
            needed: num_colors,
            available: field.nonzero(),
        });
    }
    Ok(())
}

/// Whether `[A; E]` has full rank. Every row of `E` must be a unit vector.
pub fn verify_full_rank(a: &FieldMatrix, e: &FieldMatrix, field: &GaloisField) -> Result<bool> {
    if e.rows() > 0 && a.cols() != e.cols() {
        return Err(Error::Dimension(format!(
            "generator has {} columns, side-information rows have {}",
            a.cols(),
            e.cols()
        )));
    }
    for r in 0..e.rows() {
        let row = e.row(r);
        let ones = row.iter().filter(|&&x| x == 1).count();
        if ones != 1 || row.iter().any(|&x| x > 1) {
            return Err(Error::InvalidArgument(format!(
                "row {} of E is not a unit vector",
                r + 1
            )));
        }
    }
    let stacked = if e.rows() == 0 {
        a.clone()
    } else {
        a.stack(e)?
    };
    Ok(stacked.rank(field) == stacked.rows().min(stacked.cols()))
}

/// The multicast codeword and the public coding scheme needed to decode it.
#[derive(Clone, Debug)]
pub struct Codeword {
    nu: usize,
    /// Distinct packets of each class, by color.
    classes: Vec<Vec<PacketId>>,
    /// Class of every vertex.
    colors: Vec<usize>,
    payload: Vec<Symbol>,
}

impl Codeword {
    /// Number of transmitted symbols.
    pub fn len(&self) -> usize {
        self.nu
    }

    pub fn is_empty(&self) -> bool {
        self.nu == 0
    }

    pub fn num_colors(&self) -> usize {
        self.classes.len()
    }

    pub fn payload(&self) -> &[Symbol] {
        &self.payload
    }

    /// Coding vector of vertex `v`: the generator column of its color.
    pub fn coding_vector(&self, v: usize, field: &GaloisField) -> Vec<Symbol> {
        let c = self.colors[v];
        (0..self.nu).map(|i| field.alpha_pow(i * c)).collect()
    }

    pub fn generator(&self, field: &GaloisField) -> FieldMatrix {
        mds_generator(self.classes.len(), self.nu, field).expect("checked at encode time")
    }
}

/// Encodes `X = G * s` with one generator column per color class.
pub fn encode(
    g: &ConflictGraph<'_>,
    c: &Coloring,
    payloads: &dyn Payloads,
    field: &GaloisField,
) -> Result<Codeword> {
    if c.colors().len() != g.len() {
        return Err(Error::Dimension("coloring does not match graph".into()));
    }
    let num_colors = c.num_colors();
    check_field(num_colors, field)?;
    let nu = c.transmissions();

    let mut classes: Vec<Vec<PacketId>> = vec![Vec::new(); num_colors];
    for (v, vertex) in g.vertices().iter().enumerate() {
        classes[c.color(v)].push(vertex.packet);
    }
    let mut sums = Vec::with_capacity(num_colors);
    for class in &mut classes {
        class.sort_unstable();
        class.dedup();
        let mut s = 0;
        for &p in class.iter() {
            s ^= payloads.symbol(p).ok_or(Error::MissingPayload {
                file: p.file + 1,
                packet: p.index + 1,
            })?;
        }
        sums.push(s);
    }

    let mut payload = vec![0; nu];
    accumulate(field, &mut payload, sums.iter().copied().enumerate());
    Ok(Codeword {
        nu,
        classes,
        colors: c.colors().to_vec(),
        payload,
    })
}

/// `out[i] ^= s * alpha^(color * i)` for every `(color, s)` term.
fn accumulate(
    field: &GaloisField,
    out: &mut [Symbol],
    terms: impl Iterator<Item = (usize, Symbol)>,
) {
    let group = field.nonzero();
    for (color, s) in terms {
        let Some(log_s) = field.log(s) else { continue };
        let step = color % group;
        let mut e = log_s;
        for x in out.iter_mut() {
            *x ^= field.alpha_pow(e);
            e += step;
            if e >= group {
                e -= group;
            }
        }
    }
}

/// Recovers every packet requested by `user`.
///
/// `side_info` is consulted only for packets cached at `user`; asking for
/// anything else would be cheating, so those lookups never happen.
pub fn decode(
    user: usize,
    cw: &Codeword,
    g: &ConflictGraph<'_>,
    side_info: &dyn Payloads,
    field: &GaloisField,
) -> Result<HashMap<PacketId, Symbol>> {
    let wanted: Vec<usize> = (0..g.len()).filter(|&v| g.vertex(v).user == user).collect();
    if wanted.is_empty() {
        return Ok(HashMap::new());
    }
    if cw.colors.len() != g.len() {
        return Err(Error::Dimension("codeword does not match graph".into()));
    }

    // Split each class into the packets this user caches and the rest.
    let mut unknown_classes = Vec::new();
    let mut known = vec![0 as Symbol; cw.classes.len()];
    for (color, class) in cw.classes.iter().enumerate() {
        let mut has_unknown = false;
        for &p in class {
            if g.cached_at(user, p) {
                known[color] ^= side_info.symbol(p).ok_or(Error::MissingPayload {
                    file: p.file + 1,
                    packet: p.index + 1,
                })?;
            } else {
                has_unknown = true;
            }
        }
        if has_unknown {
            unknown_classes.push(color);
        }
    }
    let k = unknown_classes.len();
    if k > cw.nu {
        return Err(Error::NotDecodable {
            user,
            unknowns: k,
            rows: cw.nu,
        });
    }

    // y = first k rows of X minus every known contribution.
    let mut y = cw.payload[..k].to_vec();
    accumulate(field, &mut y, known.iter().copied().enumerate());

    let points: Vec<Symbol> = unknown_classes
        .iter()
        .map(|&c| field.alpha_pow(c))
        .collect();
    let solver = TransposedVandermonde::new(field, points, &y);
    let position: HashMap<usize, usize> = unknown_classes
        .iter()
        .enumerate()
        .map(|(i, &c)| (c, i))
        .collect();

    let mut needed: Vec<usize> = wanted
        .iter()
        .map(|&v| {
            *position
                .get(&cw.colors[v])
                .expect("a requested packet is never cached at its requester")
        })
        .collect();
    needed.sort_unstable();
    needed.dedup();
    let values = solver.components(&needed);
    Ok(wanted
        .into_iter()
        .map(|v| {
            let idx = position[&cw.colors[v]];
            let at = needed.binary_search(&idx).expect("solved");
            (g.vertex(v).packet, values[at])
        })
        .collect())
}

/// Solver for `sum_j t_j x_j^i = y_i`, `i < k`, with distinct nonzero `x_j`.
///
/// With `P(z) = prod_j (z + x_j)`, component `t_j` equals `R(x_j) / P'(x_j)`
/// where `r_d = sum_i y_i p_(i+d+1)`; setup is `O(k^2)`, each component `O(k)`.
struct TransposedVandermonde<'f> {
    field: &'f GaloisField,
    points: Vec<Symbol>,
    numer: Vec<Symbol>,
    deriv: Vec<Symbol>,
}

impl<'f> TransposedVandermonde<'f> {
    fn new(field: &'f GaloisField, points: Vec<Symbol>, y: &[Symbol]) -> Self {
        let k = points.len();
        let master = master_polynomial(field, &points);
        let logs =
            |v: &[Symbol]| -> Vec<Option<usize>> { v.iter().map(|&a| field.log(a)).collect() };
        let (log_y, log_p) = (logs(y), logs(&master));
        let numer = (0..k)
            .map(|d| {
                let mut acc = 0;
                for (ly, lp) in log_y[..k - d].iter().zip(&log_p[d + 1..]) {
                    if let (Some(a), Some(b)) = (ly, lp) {
                        acc ^= field.alpha_pow_reduced(a + b);
                    }
                }
                acc
            })
            .collect();
        // Characteristic 2: only odd powers survive differentiation.
        let deriv = (1..=k)
            .map(|i| if i % 2 == 1 { master[i] } else { 0 })
            .collect();
        Self {
            field,
            points,
            numer,
            deriv,
        }
    }

    /// Components `t_idx` for every `idx` in `which`.
    fn components(&self, which: &[usize]) -> Vec<Symbol> {
        let xs: Vec<Symbol> = which.iter().map(|&i| self.points[i]).collect();
        let num = self.field.eval_poly_many(&self.numer, &xs);
        let den = self.field.eval_poly_many(&self.deriv, &xs);
        num.into_iter()
            .zip(den)
            .map(|(n, d)| self.field.div(n, d).expect("distinct evaluation points"))
            .collect()
    }
}

/// Coefficients (ascending) of `prod_j (z + x_j)`.
fn master_polynomial(field: &GaloisField, points: &[Symbol]) -> Vec<Symbol> {
    let mut poly = Vec::with_capacity(points.len() + 1);
    poly.push(1 as Symbol);
    for &x in points {
        let lx = field.log(x).expect("nonzero evaluation point");
        poly.push(0);
        for i in (1..poly.len()).rev() {
            poly[i] = poly[i - 1] ^ field.mul_by_log(poly[i], lx);
        }
        poly[0] = field.mul_by_log(poly[0], lx);
    }
    poly
}
