//! Brauer diagrams: perfect matchings of `2t` points.
//!
//! Points are numbered `0..2t` internally. Points `0..t` form the bottom
//! (input) row and `t..2t` the top (output) row. A pair joining the two rows
//! is a propagating strand; a pair inside one row is a cap (top) or cup
//! (bottom). The text form `t; (a,b)(c,d)…` uses 1-based points.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest `t` accepted by [`enumerate_pairings`]; `(2t−1)!!` grows fast.
pub const MAX_ENUMERATION_T: usize = 8;
/// Largest `t` for the exhaustive composition-table check.
pub const MAX_TABLE_T: usize = 5;

/// A perfect matching of the `2t` points of a two-row diagram.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Pairing {
    t: usize,
    partner: Vec<usize>,
}

/// A diagram together with the power of the loop parameter `δ` collected
/// while composing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedDiagram {
    pub diagram: Pairing,
    pub loop_power: u32,
}

impl Pairing {
    /// Builds a pairing from 0-based pairs; they must cover `0..2t` exactly once.
    pub fn new(t: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        if t == 0 {
            return Err(Error::Domain("diagram size t must be positive".into()));
        }
        if pairs.len() != t {
            return Err(Error::Dimension(format!(
                "expected {t} pairs, got {}",
                pairs.len()
            )));
        }
        let mut partner = vec![usize::MAX; 2 * t];
        for &(a, b) in pairs {
            if a >= 2 * t || b >= 2 * t || a == b {
                return Err(Error::Domain(format!("invalid pair ({a},{b}) for t={t}")));
            }
            if partner[a] != usize::MAX || partner[b] != usize::MAX {
                return Err(Error::Domain(format!("point reused in pair ({a},{b})")));
            }
            partner[a] = b;
            partner[b] = a;
        }
        Ok(Self { t, partner })
    }

    fn from_partner(partner: Vec<usize>) -> Self {
        debug_assert!(partner.len().is_multiple_of(2));
        Self {
            t: partner.len() / 2,
            partner,
        }
    }

    pub fn identity(t: usize) -> Self {
        let partner = (0..2 * t).map(|p| if p < t { p + t } else { p - t }).collect();
        Self { t, partner }
    }

    /// The diagram of a permutation in 0-based one-line notation: input
    /// strand `a` ends at output position `perm[a]`.
    pub fn from_permutation(perm: &[usize]) -> Result<Self> {
        let t = perm.len();
        let mut seen = vec![false; t];
        for &p in perm {
            if p >= t || seen[p] {
                return Err(Error::Domain(format!("{perm:?} is not a permutation")));
            }
            seen[p] = true;
        }
        let pairs: Vec<_> = perm.iter().enumerate().map(|(a, &p)| (a, t + p)).collect();
        Self::new(t, &pairs)
    }

    /// Inverse of [`Pairing::from_permutation`]; `None` for non-permutations.
    pub fn to_permutation(&self) -> Option<Vec<usize>> {
        (0..self.t)
            .map(|a| {
                let b = self.partner[a];
                (b >= self.t).then(|| b - self.t)
            })
            .collect()
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn partner(&self, point: usize) -> usize {
        self.partner[point]
    }

    pub fn is_bottom(&self, point: usize) -> bool {
        point < self.t
    }

    /// Canonical pair list: `a < b` within each pair, sorted by `a`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..2 * self.t)
            .filter(|&a| a < self.partner[a])
            .map(|a| (a, self.partner[a]))
            .collect()
    }

    /// Number of strands joining the two rows.
    pub fn propagating_number(&self) -> usize {
        (0..self.t).filter(|&a| self.partner[a] >= self.t).count()
    }

    pub fn is_permutation(&self) -> bool {
        self.propagating_number() == self.t
    }

    /// Flips the diagram upside down.
    pub fn transpose(&self) -> Self {
        let t = self.t;
        let flip = |p: usize| if p < t { p + t } else { p - t };
        let mut partner = vec![0; 2 * t];
        for p in 0..2 * t {
            partner[flip(p)] = flip(self.partner[p]);
        }
        Self { t, partner }
    }

    /// Parity of the number of crossing chords when the diagram is drawn in
    /// the standard two-row layout, as `±1`. On permutations this is the
    /// sign of the permutation.
    pub fn crossing_sign(&self) -> i32 {
        let t = self.t;
        // walk the boundary: bottom row left to right, top row right to left
        let pos = |p: usize| if p < t { p } else { 3 * t - 1 - p };
        let chords: Vec<(usize, usize)> = self
            .pairs()
            .into_iter()
            .map(|(a, b)| {
                let (x, y) = (pos(a), pos(b));
                (x.min(y), x.max(y))
            })
            .collect();
        let mut crossings = 0usize;
        for (i, &(x1, y1)) in chords.iter().enumerate() {
            for &(x2, y2) in &chords[i + 1..] {
                if (x1 < x2 && x2 < y1 && y1 < y2) || (x2 < x1 && x1 < y2 && y2 < y1) {
                    crossings += 1;
                }
            }
        }
        if crossings.is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    /// Sort key for the enumeration order: permutations first by one-line
    /// notation, then everything else by canonical pair list.
    fn order_key(&self) -> (u8, Vec<usize>) {
        match self.to_permutation() {
            Some(p) => (0, p),
            None => (1, self.pairs().into_iter().flat_map(|(a, b)| [a, b]).collect()),
        }
    }
}

impl fmt::Display for Pairing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};", self.t)?;
        let mut first = true;
        for (a, b) in self.pairs() {
            if first {
                f.write_str(" ")?;
                first = false;
            }
            write!(f, "({},{})", a + 1, b + 1)?;
        }
        Ok(())
    }
}

impl FromStr for Pairing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, body) = s
            .split_once(';')
            .ok_or_else(|| Error::Parse(format!("missing ';' in {s:?}")))?;
        let t: usize = head
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad diagram size {head:?}")))?;
        let mut pairs = Vec::with_capacity(t);
        let mut rest = body.trim();
        while !rest.is_empty() {
            let inner = rest
                .strip_prefix('(')
                .and_then(|r| r.split_once(')'))
                .ok_or_else(|| Error::Parse(format!("expected '(a,b)' at {rest:?}")))?;
            let (pair, tail) = inner;
            let (a, b) = pair
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("expected ',' in ({pair})")))?;
            let parse_point = |x: &str| -> Result<usize> {
                let v: usize = x
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad point {x:?}")))?;
                v.checked_sub(1)
                    .ok_or_else(|| Error::Parse("points are 1-based".into()))
            };
            pairs.push((parse_point(a)?, parse_point(b)?));
            rest = tail.trim_start();
        }
        Pairing::new(t, &pairs).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// All `(2t−1)!!` pairings of `2t` points: permutations first in
/// lexicographic one-line order, then the rest by canonical pair list.
pub fn enumerate_pairings(t: usize) -> Result<Vec<Pairing>> {
    if t == 0 || t > MAX_ENUMERATION_T {
        return Err(Error::SizeLimit(format!(
            "pairing enumeration supports 1 <= t <= {MAX_ENUMERATION_T}, got {t}"
        )));
    }
    let mut all: Vec<Pairing> = matchings(2 * t).into_iter().map(Pairing::from_partner).collect();
    all.sort_by_cached_key(Pairing::order_key);
    Ok(all)
}

/// Partner vectors of all perfect matchings of `0..m`, built by inserting
/// the last two points into matchings of `0..m−2`.
fn matchings(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![Vec::new()];
    }
    let (p, q) = (m - 2, m - 1);
    let mut out = Vec::new();
    for base in matchings(m - 2) {
        let mut grown = base.clone();
        grown.extend([q, p]);
        out.push(grown);
        for a in 0..p {
            let b = base[a];
            if a > b {
                continue;
            }
            for (x, y) in [(p, q), (q, p)] {
                let mut g = base.clone();
                g.extend([0, 0]);
                g[a] = x;
                g[x] = a;
                g[b] = y;
                g[y] = b;
                out.push(g);
            }
        }
    }
    out
}

/// Concatenates `b` (below) with `a` (above), i.e. the diagram of the
/// operator product `a·b`, and counts the closed loops that are removed.
pub fn compose(a: &Pairing, b: &Pairing) -> Result<WeightedDiagram> {
    if a.t != b.t {
        return Err(Error::Dimension(format!(
            "cannot compose diagrams of size {} and {}",
            a.t, b.t
        )));
    }
    let t = a.t;
    // Nodes: 0..t bottom of b, t..2t the glued middle row, 2t..3t top of a.
    let mut uf = UnionFind::new(3 * t);
    for (x, y) in b.pairs() {
        uf.union(x, y);
    }
    for (x, y) in a.pairs() {
        uf.union(x + t, y + t);
    }
    let mut first_end = vec![usize::MAX; 3 * t];
    let mut partner = vec![0; 2 * t];
    let label = |n: usize| if n < t { n } else { n - t };
    for n in (0..t).chain(2 * t..3 * t) {
        let r = uf.find(n);
        if first_end[r] == usize::MAX {
            first_end[r] = n;
        } else {
            let (x, y) = (label(first_end[r]), label(n));
            partner[x] = y;
            partner[y] = x;
        }
    }
    let mut loops = 0u32;
    let mut counted = vec![false; 3 * t];
    for n in t..2 * t {
        let r = uf.find(n);
        if first_end[r] == usize::MAX && !counted[r] {
            counted[r] = true;
            loops += 1;
        }
    }
    Ok(WeightedDiagram {
        diagram: Pairing { t, partner },
        loop_power: loops,
    })
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, x: usize, y: usize) {
        let (rx, ry) = (self.find(x), self.find(y));
        if rx != ry {
            self.parent[rx] = ry;
        }
    }
}

/// Outcome of [`composition_table_check`].
#[derive(Clone, Debug)]
pub struct CompositionTable {
    pub t: usize,
    pub compositions_checked: usize,
    pub holds: bool,
    /// First violating `(a, b, a∘b)`, if any.
    pub counterexample: Option<(Pairing, Pairing, WeightedDiagram)>,
}

/// Exhaustively checks that permutations compose to permutations, that any
/// composition involving a non-permutation stays outside `S_t`, and that the
/// character `r₁` (1 on `S_t`, 0 elsewhere) is multiplicative.
pub fn composition_table_check(t: usize) -> Result<CompositionTable> {
    if t == 0 || t > MAX_TABLE_T {
        return Err(Error::SizeLimit(format!(
            "composition table supports 1 <= t <= {MAX_TABLE_T}, got {t}"
        )));
    }
    let diagrams = enumerate_pairings(t)?;
    let r1 = |p: &Pairing| u32::from(p.is_permutation());
    let mut checked = 0;
    for a in &diagrams {
        for b in &diagrams {
            let c = compose(a, b)?;
            checked += 1;
            let both_perm = a.is_permutation() && b.is_permutation();
            let class_ok = both_perm == c.diagram.is_permutation();
            let loops_ok = !both_perm || c.loop_power == 0;
            let r1_ok = r1(a) * r1(b) == r1(&c.diagram);
            if !(class_ok && loops_ok && r1_ok) {
                return Ok(CompositionTable {
                    t,
                    compositions_checked: checked,
                    holds: false,
                    counterexample: Some((a.clone(), b.clone(), c)),
                });
            }
        }
    }
    Ok(CompositionTable {
        t,
        compositions_checked: checked,
        holds: true,
        counterexample: None,
    })
}

/// All permutations of `0..t` in lexicographic one-line order.
pub fn permutations(t: usize) -> Vec<Vec<usize>> {
    let mut current: Vec<usize> = (0..t).collect();
    let mut out = vec![current.clone()];
    // next lexicographic permutation, in place
    loop {
        let Some(i) = (1..t).rev().find(|&i| current[i - 1] < current[i]) else {
            return out;
        };
        let j = (i..t).rev().find(|&j| current[j] > current[i - 1]).unwrap();
        current.swap(i - 1, j);
        current[i..].reverse();
        out.push(current.clone());
    }
}

/// `(2t−1)!!`, the number of pairings of `2t` points.
pub fn double_factorial_odd(t: usize) -> u128 {
    (1..=t as u128).map(|k| 2 * k - 1).product()
}
