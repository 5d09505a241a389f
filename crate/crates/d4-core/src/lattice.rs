//! Kagome torus geometry.
//!
//! Stars (hexagons of the kagome lattice) sit on a triangular lattice with
//! basis `a1 = (1, 0)`, `a2 = (1/2, sqrt(3)/2)`; star `(i, j)` has index
//! `j * lx + i`. Every kagome vertex is the midpoint of a bond between two
//! neighbouring hexagons, and each star owns the three bonds pointing along
//! `a1`, `a2` and `a2 - a1` (vertex kinds 0, 1, 2), so vertex `(i, j, k)` has
//! index `3 * star + k`.
//!
//! Star colours are `(i - j) mod 3`. A vertex takes the one colour not used
//! by its two hexagons, which makes every inner hexagon alternate the two
//! colours different from its star, and every star's six tips carry the
//! star's colour. Hence both periods must be multiples of three.
//!
//! Hexagon order is counter-clockwise starting from the vertex toward the
//! `+a1` neighbour; tip `k` sits between hexagon neighbours `k` and `k + 1`.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::LatticeError;

/// Vertex / star colour.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Color {
    R,
    G,
    B,
}

impl Color {
    pub const ALL: [Color; 3] = [Color::R, Color::G, Color::B];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Color {
        Color::ALL[i % 3]
    }

    /// The colour one step forward in the cycle R -> G -> B -> R.
    pub fn next(self) -> Color {
        Color::from_index(self.index() + 1)
    }

    pub fn prev(self) -> Color {
        Color::from_index(self.index() + 2)
    }

    /// The colour different from both arguments (which must differ).
    pub fn third(a: Color, b: Color) -> Color {
        debug_assert_ne!(a, b);
        Color::from_index(3 - a.index() - b.index())
    }

    pub fn letter(self) -> char {
        match self {
            Color::R => 'R',
            Color::G => 'G',
            Color::B => 'B',
        }
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Torus direction: `H` wraps along `a1`, `V` along `a2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Dir {
    H,
    V,
}

impl Dir {
    pub const ALL: [Dir; 2] = [Dir::H, Dir::V];

    pub fn other(self) -> Dir {
        match self {
            Dir::H => Dir::V,
            Dir::V => Dir::H,
        }
    }
}

/// Orientation of an inscribed triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    /// Points toward 180 degrees (vertices at 60, 180, 300).
    Left,
    /// Points toward 0 degrees (vertices at 0, 120, 240).
    Right,
}

/// Neighbour offsets in `(di, dj)` at 0, 60, ..., 300 degrees.
pub const NEIGHBOR_OFFSETS: [(i64, i64); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    pub index: usize,
    pub color: Color,
    /// Star owning the bond this vertex sits on.
    pub owner: usize,
    pub kind: u8,
    /// The two hexagons (stars) whose shared bond carries this vertex.
    pub hexagons: [usize; 2],
    /// The two same-colour stars that have this vertex as a tip.
    pub tip_of: [usize; 2],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Star {
    pub index: usize,
    pub i: usize,
    pub j: usize,
    pub color: Color,
    /// Neighbouring stars, counter-clockwise from the `+a1` direction.
    pub neighbors: [usize; 6],
    /// Inner hexagon vertices, `hexagon[k]` on the bond to `neighbors[k]`.
    pub hexagon: [usize; 6],
    /// Tip `k` lies between `neighbors[k]` and `neighbors[k + 1]`.
    pub tips: [usize; 6],
    /// `[left, right]` inscribed triangle indices.
    pub triangles: [usize; 2],
}

/// An inscribed, single-coloured triangle carrying a `B_t` term.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triangle {
    pub index: usize,
    pub star: usize,
    pub color: Color,
    pub orientation: Orientation,
    pub vertices: [usize; 3],
}

/// An elementary kagome triangle; equivalently a triangle of the ancilla
/// superlattice spanned by three mutually adjacent stars.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AncillaTriangle {
    pub index: usize,
    /// Stars (ancilla sites) at the corners, one of each colour.
    pub stars: [usize; 3],
    /// The kagome vertices on the three star-star bonds.
    pub vertices: [usize; 3],
    pub up: bool,
    /// Sign of the three-qubit phase: `+1` up-pointing, `-1` down-pointing.
    pub sign: i8,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KagomeTorus {
    pub lx: usize,
    pub ly: usize,
    pub vertices: Vec<Vertex>,
    pub stars: Vec<Star>,
    pub triangles: Vec<Triangle>,
    pub ancilla_triangles: Vec<AncillaTriangle>,
}

impl KagomeTorus {
    /// Builds an `lx x ly` torus of stars.
    pub fn new(lx: usize, ly: usize) -> Result<Self, LatticeError> {
        if lx < 2 || ly < 2 {
            return Err(LatticeError::SizeTooSmall { lx, ly });
        }
        if lx % 3 != 0 || ly % 3 != 0 {
            return Err(LatticeError::NotColorable { lx, ly });
        }
        let mut t = KagomeTorus {
            lx,
            ly,
            vertices: Vec::with_capacity(3 * lx * ly),
            stars: Vec::with_capacity(lx * ly),
            triangles: Vec::with_capacity(2 * lx * ly),
            ancilla_triangles: Vec::with_capacity(2 * lx * ly),
        };
        for s in 0..lx * ly {
            let (i, j) = (s % lx, s / lx);
            let color = t.color_at(i as i64, j as i64);
            for k in 0..3u8 {
                let other = t.offset(s, k as usize);
                let hexagons = [s, other];
                let (a, b) = (
                    t.offset(s, (k as usize + 5) % 6),
                    t.offset(s, (k as usize + 1) % 6),
                );
                let vcolor = Color::third(color, t.color_of_star(other));
                t.vertices.push(Vertex {
                    index: 3 * s + k as usize,
                    color: vcolor,
                    owner: s,
                    kind: k,
                    hexagons,
                    tip_of: [a.min(b), a.max(b)],
                });
            }
        }
        for s in 0..lx * ly {
            let (i, j) = (s % lx, s / lx);
            let color = t.color_at(i as i64, j as i64);
            let mut neighbors = [0; 6];
            let mut hexagon = [0; 6];
            let mut tips = [0; 6];
            for k in 0..6 {
                neighbors[k] = t.offset(s, k);
                hexagon[k] = t.bond_vertex(s, k);
            }
            for k in 0..6 {
                tips[k] = t.bond_vertex(neighbors[k], (k + 2) % 6);
            }
            let left = 2 * s;
            let right = 2 * s + 1;
            t.triangles.push(Triangle {
                index: left,
                star: s,
                color: color.next(),
                orientation: Orientation::Left,
                vertices: [hexagon[1], hexagon[3], hexagon[5]],
            });
            t.triangles.push(Triangle {
                index: right,
                star: s,
                color: color.prev(),
                orientation: Orientation::Right,
                vertices: [hexagon[0], hexagon[2], hexagon[4]],
            });
            t.stars.push(Star { index: s, i, j, color, neighbors, hexagon, tips, triangles: [left, right] });
        }
        for s in 0..lx * ly {
            let e = t.offset(s, 0);
            let n = t.offset(s, 1);
            let ne = t.offset(e, 1);
            let up_vertices = [t.bond_vertex(s, 0), t.bond_vertex(s, 1), t.bond_vertex(e, 2)];
            let down_vertices = [t.bond_vertex(e, 1), t.bond_vertex(n, 0), t.bond_vertex(e, 2)];
            t.ancilla_triangles.push(AncillaTriangle {
                index: 2 * s,
                stars: [s, e, n],
                vertices: up_vertices,
                up: true,
                sign: 1,
            });
            t.ancilla_triangles.push(AncillaTriangle {
                index: 2 * s + 1,
                stars: [e, n, ne],
                vertices: down_vertices,
                up: false,
                sign: -1,
            });
        }
        Ok(t)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_stars(&self) -> usize {
        self.stars.len()
    }

    pub fn star_index(&self, i: i64, j: i64) -> usize {
        let i = i.rem_euclid(self.lx as i64) as usize;
        let j = j.rem_euclid(self.ly as i64) as usize;
        j * self.lx + i
    }

    fn color_at(&self, i: i64, j: i64) -> Color {
        Color::from_index((i - j).rem_euclid(3) as usize)
    }

    pub fn color_of_star(&self, s: usize) -> Color {
        self.color_at((s % self.lx) as i64, (s / self.lx) as i64)
    }

    /// Neighbour of star `s` in hexagon direction `k` (0..6).
    pub fn offset(&self, s: usize, k: usize) -> usize {
        let (di, dj) = NEIGHBOR_OFFSETS[k % 6];
        self.star_index((s % self.lx) as i64 + di, (s / self.lx) as i64 + dj)
    }

    /// Vertex on the bond from star `s` in direction `k`.
    pub fn bond_vertex(&self, s: usize, k: usize) -> usize {
        let (i, j) = ((s % self.lx) as i64, (s / self.lx) as i64);
        let (owner, kind) = match k % 6 {
            0 => (self.star_index(i, j), 0),
            1 => (self.star_index(i, j), 1),
            2 => (self.star_index(i, j), 2),
            3 => (self.star_index(i - 1, j), 0),
            4 => (self.star_index(i, j - 1), 1),
            _ => (self.star_index(i + 1, j - 1), 2),
        };
        3 * owner + kind
    }

    /// Direction `k` such that `offset(a, k) == b`, if the stars are adjacent.
    pub fn direction_between(&self, a: usize, b: usize) -> Option<usize> {
        (0..6).find(|&k| self.offset(a, k) == b)
    }

    pub fn stars_of_color(&self, c: Color) -> impl Iterator<Item = usize> + '_ {
        self.stars.iter().filter(move |s| s.color == c).map(|s| s.index)
    }

    pub fn vertices_of_color(&self, c: Color) -> impl Iterator<Item = usize> + '_ {
        self.vertices.iter().filter(move |v| v.color == c).map(|v| v.index)
    }

    pub fn triangles_of_color(&self, c: Color) -> impl Iterator<Item = usize> + '_ {
        self.triangles.iter().filter(move |t| t.color == c).map(|t| t.index)
    }

    /// The `c`-coloured inscribed triangle of a star of a different colour.
    pub fn triangle_in(&self, star: usize, c: Color) -> Option<usize> {
        self.stars[star].triangles.iter().copied().find(|&t| self.triangles[t].color == c)
    }

    /// Vertices of one straight kagome line. `H` lines run between star
    /// rows `offset` and `offset + 1`; `V` lines run parallel to `a2`
    /// between star columns `offset` and `offset + 1`.
    pub fn line(&self, dir: Dir, offset: usize) -> Vec<usize> {
        let mut out = Vec::new();
        match dir {
            Dir::H => {
                let j = (offset % self.ly) as i64;
                for i in 0..self.lx as i64 {
                    let s = self.star_index(i, j);
                    out.push(3 * s + 2);
                    out.push(3 * s + 1);
                }
            }
            Dir::V => {
                let i = (offset % self.lx) as i64;
                for j in 0..self.ly as i64 {
                    out.push(3 * self.star_index(i, j));
                    out.push(3 * self.star_index(i + 1, j) + 2);
                }
            }
        }
        out
    }

    /// Support of the `Z`-type logical of colour `c` on line `offset`.
    pub fn z_logical_support(&self, c: Color, dir: Dir, offset: usize) -> Vec<usize> {
        self.line(dir, offset).into_iter().filter(|&v| self.vertices[v].color == c).collect()
    }

    /// Number of distinct translates of a logical line in direction `dir`.
    pub fn line_translates(&self, dir: Dir) -> usize {
        match dir {
            Dir::H => self.ly,
            Dir::V => self.lx,
        }
    }

    /// Hexagon-lattice path between two stars avoiding colour `c`, found by
    /// breadth-first search with neighbours visited in direction order.
    pub fn hex_path_avoiding(&self, c: Color, from: usize, to: usize) -> Option<Vec<usize>> {
        if self.stars[from].color == c || self.stars[to].color == c {
            return None;
        }
        let n = self.num_stars();
        let mut prev = alloc::vec![usize::MAX; n];
        let mut queue = alloc::collections::VecDeque::new();
        prev[from] = from;
        queue.push_back(from);
        while let Some(s) = queue.pop_front() {
            if s == to {
                break;
            }
            for k in 0..6 {
                let nb = self.stars[s].neighbors[k];
                if self.stars[nb].color != c && prev[nb] == usize::MAX {
                    prev[nb] = s;
                    queue.push_back(nb);
                }
            }
        }
        if prev[to] == usize::MAX {
            return None;
        }
        let mut path = alloc::vec![to];
        let mut cur = to;
        while cur != from {
            cur = prev[cur];
            path.push(cur);
        }
        path.reverse();
        Some(path)
    }

    /// Shortest non-contractible loop of stars avoiding colour `c`, winding
    /// once in `dir` and starting at `base`. Searches the universal cover.
    pub fn hex_loop_avoiding(&self, c: Color, dir: Dir, base: usize) -> Option<Vec<usize>> {
        if self.stars[base].color == c {
            return None;
        }
        let (bi, bj) = ((base % self.lx) as i64, (base / self.lx) as i64);
        let (ti, tj) = match dir {
            Dir::H => (bi + self.lx as i64, bj),
            Dir::V => (bi, bj + self.ly as i64),
        };
        // Search window in the cover: one period around the straight segment.
        let w = (self.lx.max(self.ly) as i64) + 2;
        let (imin, imax) = (bi.min(ti) - w, bi.max(ti) + w);
        let (jmin, jmax) = (bj.min(tj) - w, bj.max(tj) + w);
        let width = (imax - imin + 1) as usize;
        let height = (jmax - jmin + 1) as usize;
        let idx = |i: i64, j: i64| ((j - jmin) as usize) * width + (i - imin) as usize;
        let mut prev = alloc::vec![usize::MAX; width * height];
        let mut queue = alloc::collections::VecDeque::new();
        prev[idx(bi, bj)] = idx(bi, bj);
        queue.push_back((bi, bj));
        while let Some((i, j)) = queue.pop_front() {
            if (i, j) == (ti, tj) {
                break;
            }
            for (di, dj) in NEIGHBOR_OFFSETS {
                let (ni, nj) = (i + di, j + dj);
                if ni < imin || ni > imax || nj < jmin || nj > jmax {
                    continue;
                }
                if self.color_at(ni, nj) == c || prev[idx(ni, nj)] != usize::MAX {
                    continue;
                }
                prev[idx(ni, nj)] = idx(i, j);
                queue.push_back((ni, nj));
            }
        }
        if prev[idx(ti, tj)] == usize::MAX {
            return None;
        }
        let mut cover = alloc::vec![(ti, tj)];
        let mut cur = idx(ti, tj);
        while cur != idx(bi, bj) {
            cur = prev[cur];
            let (ci, cj) = ((cur % width) as i64 + imin, (cur / width) as i64 + jmin);
            cover.push((ci, cj));
        }
        cover.reverse();
        // Drop the repeated base at the end; the loop closes implicitly.
        cover.pop();
        Some(cover.into_iter().map(|(i, j)| self.star_index(i, j)).collect())
    }
}

/// Endpoint of a string path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Endpoint {
    Triangle(usize),
    /// Close the path around the torus in the given direction.
    Wrap,
}

/// A string of colour `color` running through stars of the other two
/// colours. Crossing the bond between consecutive stars puts an `X` on the
/// `color` vertex of that bond; inside every interior star the string
/// passes the vertex on the short side between its entry and exit bonds,
/// which carries the decoration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Path {
    pub color: Color,
    pub stars: Vec<usize>,
    pub closed: bool,
    /// Same-colour vertices receiving `X`, in path order.
    pub x_support: Vec<usize>,
    /// Short-side vertices in path order (alternating the other colours).
    pub decoration: Vec<usize>,
    pub start: Option<usize>,
    pub end: Option<usize>,
    /// Winding parity `[H, V]`.
    pub wrap: [u8; 2],
}

impl Path {
    pub fn is_empty(&self) -> bool {
        self.x_support.is_empty()
    }

    /// Vertices visited in order: x-support interleaved with decorations.
    pub fn vertex_sequence(&self) -> Vec<(usize, bool)> {
        let mut out = Vec::new();
        if self.closed {
            for (k, &x) in self.x_support.iter().enumerate() {
                out.push((self.decoration[k], false));
                out.push((x, true));
            }
        } else {
            for (k, &x) in self.x_support.iter().enumerate() {
                if k > 0 {
                    out.push((self.decoration[k - 1], false));
                }
                out.push((x, true));
            }
        }
        out
    }
}

fn short_side(t: &KagomeTorus, prev: usize, here: usize, next: usize) -> Option<usize> {
    let din = t.direction_between(here, prev)?;
    let dout = t.direction_between(here, next)?;
    let mid = if (din + 2) % 6 == dout {
        (din + 1) % 6
    } else if (dout + 2) % 6 == din {
        (dout + 1) % 6
    } else {
        return None;
    };
    Some(t.stars[here].hexagon[mid])
}

fn build_path(t: &KagomeTorus, color: Color, stars: Vec<usize>, closed: bool) -> Result<Path, LatticeError> {
    let n = stars.len();
    let mut x_support = Vec::new();
    let mut decoration = Vec::new();
    let bonds = if closed { n } else { n.saturating_sub(1) };
    for k in 0..bonds {
        let (a, b) = (stars[k], stars[(k + 1) % n]);
        let d = t.direction_between(a, b).ok_or(LatticeError::NoPath)?;
        let v = t.bond_vertex(a, d);
        debug_assert_eq!(t.vertices[v].color, color);
        x_support.push(v);
    }
    if closed {
        for k in 0..n {
            let v = short_side(t, stars[(k + n - 1) % n], stars[k], stars[(k + 1) % n]).ok_or(LatticeError::NoPath)?;
            decoration.push(v);
        }
    } else {
        for k in 1..n.saturating_sub(1) {
            let v = short_side(t, stars[k - 1], stars[k], stars[k + 1]).ok_or(LatticeError::NoPath)?;
            decoration.push(v);
        }
    }
    let mut seen = alloc::collections::BTreeSet::new();
    if !x_support.iter().all(|v| seen.insert(*v)) {
        return Err(LatticeError::SelfOverlap);
    }
    Ok(Path { color, stars, closed, x_support, decoration, start: None, end: None, wrap: [0, 0] })
}

/// Builds the string path of colour `color` between two endpoints.
///
/// Open strings join two `color` triangles through stars of the other two
/// colours. With `Endpoint::Wrap` on both ends the result is a
/// non-contractible loop in direction `hint` based at the lowest-index
/// eligible star of row/column 0.
pub fn string_path(
    t: &KagomeTorus,
    color: Color,
    from: Endpoint,
    to: Endpoint,
    hint: Dir,
) -> Result<Path, LatticeError> {
    match (from, to) {
        (Endpoint::Triangle(a), Endpoint::Triangle(b)) => {
            let (ta, tb) = (t.triangles.get(a).ok_or(LatticeError::NoPath)?, t.triangles.get(b).ok_or(LatticeError::NoPath)?);
            if ta.color != color || tb.color != color {
                return Err(LatticeError::NoPath);
            }
            if a == b {
                return Ok(Path {
                    color,
                    stars: alloc::vec![ta.star],
                    closed: false,
                    x_support: Vec::new(),
                    decoration: Vec::new(),
                    start: Some(a),
                    end: Some(b),
                    wrap: [0, 0],
                });
            }
            let stars = t.hex_path_avoiding(color, ta.star, tb.star).ok_or(LatticeError::NoPath)?;
            let mut p = build_path(t, color, stars, false)?;
            p.start = Some(a);
            p.end = Some(b);
            Ok(p)
        }
        (Endpoint::Wrap, Endpoint::Wrap) => {
            let base = match hint {
                Dir::H => (0..t.lx).map(|i| t.star_index(i as i64, 0)).find(|&s| t.stars[s].color != color),
                Dir::V => (0..t.ly).map(|j| t.star_index(0, j as i64)).find(|&s| t.stars[s].color != color),
            }
            .ok_or(LatticeError::NoPath)?;
            string_loop(t, color, hint, base)
        }
        _ => Err(LatticeError::NoPath),
    }
}

/// Non-contractible loop of colour `color` in direction `dir` through `base`.
pub fn string_loop(t: &KagomeTorus, color: Color, dir: Dir, base: usize) -> Result<Path, LatticeError> {
    let stars = t.hex_loop_avoiding(color, dir, base).ok_or(LatticeError::NoPath)?;
    let mut p = build_path(t, color, stars, true)?;
    p.wrap = match dir {
        Dir::H => [1, 0],
        Dir::V => [0, 1],
    };
    Ok(p)
}

/// Contractible loop around the hexagon of `center`, starting at neighbour
/// `k0`. The ring alternates the two colours other than the centre's, so
/// the string has the centre's colour.
pub fn ring_path(t: &KagomeTorus, center: usize, k0: usize) -> Result<Path, LatticeError> {
    let color = t.stars[center].color;
    let stars: Vec<usize> = (0..6).map(|k| t.stars[center].neighbors[(k0 + k) % 6]).collect();
    build_path(t, color, stars, true)
}

/// Closed path of colour `color` through an explicit cyclic star sequence.
pub fn explicit_loop(t: &KagomeTorus, color: Color, stars: Vec<usize>, wrap: [u8; 2]) -> Result<Path, LatticeError> {
    if stars.iter().any(|&s| t.stars[s].color == color) {
        return Err(LatticeError::NoPath);
    }
    let mut p = build_path(t, color, stars, true)?;
    p.wrap = wrap;
    Ok(p)
}

/// Open path of colour `color` through an explicit star sequence.
pub fn explicit_path(t: &KagomeTorus, color: Color, stars: Vec<usize>) -> Result<Path, LatticeError> {
    if stars.is_empty() || stars.iter().any(|&s| t.stars[s].color == color) {
        return Err(LatticeError::NoPath);
    }
    let first = stars[0];
    let last = *stars.last().unwrap();
    let mut p = build_path(t, color, stars, false)?;
    p.start = t.triangle_in(first, color);
    p.end = t.triangle_in(last, color);
    Ok(p)
}
