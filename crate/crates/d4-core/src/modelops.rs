//! Model operators on a kagome torus: star and triangle terms, logical
//! strings, decorated anyon strings, braids and the Borromean braid.
//!
//! Qubit ids are vertex indices.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{
    apply_program, controlled, sample, Factor, GateProgram, Instruction, MeasBasis, MeasurementSetting, OperatorExpr, QubitId, Real,
    StateVector,
};
use crate::error::ModelError;
use crate::lattice::{explicit_loop, explicit_path, ring_path, string_loop, string_path, Color, Dir, Endpoint, KagomeTorus, Path};

pub fn qid(v: usize) -> QubitId {
    v as QubitId
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabKind {
    Star,
    Triangle,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilizerExpr {
    pub kind: StabKind,
    pub index: usize,
    pub color: Color,
    pub support: Vec<usize>,
    pub op: OperatorExpr,
}

/// `A_s`: CZ ring on the inner hexagon times X on the six tips.
pub fn star_op(t: &KagomeTorus, s: usize) -> Result<StabilizerExpr, ModelError> {
    let st = t.stars.get(s).ok_or(ModelError::IndexOutOfRange(s))?;
    let mut factors = Vec::with_capacity(12);
    for i in 0..6 {
        factors.push(Factor::CZ(qid(st.hexagon[i]), qid(st.hexagon[(i + 1) % 6])));
    }
    for &v in &st.tips {
        factors.push(Factor::X(qid(v)));
    }
    let mut support: Vec<usize> = st.hexagon.iter().chain(st.tips.iter()).copied().collect();
    support.sort_unstable();
    Ok(StabilizerExpr { kind: StabKind::Star, index: s, color: st.color, support, op: OperatorExpr::new(factors) })
}

/// `B_t = Z Z Z`.
pub fn triangle_op(t: &KagomeTorus, tr: usize) -> Result<StabilizerExpr, ModelError> {
    let tri = t.triangles.get(tr).ok_or(ModelError::IndexOutOfRange(tr))?;
    let mut support = tri.vertices.to_vec();
    support.sort_unstable();
    Ok(StabilizerExpr {
        kind: StabKind::Triangle,
        index: tr,
        color: tri.color,
        support,
        op: OperatorExpr::new(tri.vertices.iter().map(|&v| Factor::Z(qid(v))).collect()),
    })
}

/// Colour order of a decorated string: `string` carries the X's; every
/// decoration vertex of colour `second` is joined by CZ to all preceding
/// decoration vertices of colour `first`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorOrder {
    pub string: Color,
    pub first: Color,
}

impl ColorOrder {
    /// Anticyclic order after the string colour (G then R for blue).
    pub fn default_for(c: Color) -> Self {
        ColorOrder { string: c, first: c.prev() }
    }

    pub fn second(self) -> Color {
        Color::third(self.string, self.first)
    }

    pub fn reversed(self) -> Self {
        ColorOrder { string: self.string, first: self.second() }
    }

    fn valid(self) -> bool {
        self.string != self.first
    }
}

/// A decorated string: X on same-colour vertices and CZ between the two
/// other colours.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnyonString {
    pub color: Color,
    pub order: ColorOrder,
    pub path: Path,
    pub x: Vec<usize>,
    pub cz: Vec<(usize, usize)>,
}

impl AnyonString {
    pub fn operator(&self) -> OperatorExpr {
        let mut f: Vec<Factor> = self.cz.iter().map(|&(a, b)| Factor::CZ(qid(a), qid(b))).collect();
        f.extend(self.x.iter().map(|&v| Factor::X(qid(v))));
        OperatorExpr::new(f)
    }

    /// X layer then the CZ circuit (the two commute).
    pub fn program(&self) -> GateProgram {
        let mut p = GateProgram::new();
        for &v in &self.x {
            p.push(Instruction::X { q: qid(v) });
        }
        for &(a, b) in &self.cz {
            p.push(Instruction::CZ { a: qid(a), b: qid(b) });
        }
        p
    }

    /// Triangles toggled by an open string.
    pub fn endpoints(&self) -> Vec<usize> {
        match (self.path.closed, self.path.start, self.path.end) {
            (false, Some(a), Some(b)) if a != b => vec![a, b],
            _ => Vec::new(),
        }
    }
}

fn orient(t: &KagomeTorus, path: Path, order: ColorOrder) -> Result<Path, ModelError> {
    let first_ok = path.decoration.first().map_or(true, |&d| t.vertices[d].color == order.first);
    if first_ok {
        return Ok(path);
    }
    if path.closed {
        let mut stars = path.stars.clone();
        stars.rotate_left(1);
        Ok(explicit_loop(t, path.color, stars, path.wrap)?)
    } else {
        let mut stars = path.stars.clone();
        stars.reverse();
        let mut p = explicit_path(t, path.color, stars)?;
        p.start = path.end;
        p.end = path.start;
        p.wrap = path.wrap;
        Ok(p)
    }
}

/// Attaches the CZ decoration to a path. Open paths are traversed, and
/// closed paths are based, so that the first decoration has colour
/// `order.first`.
pub fn decorate(t: &KagomeTorus, path: Path, order: ColorOrder) -> Result<AnyonString, ModelError> {
    if !order.valid() || order.string != path.color {
        return Err(ModelError::BadEndpoints);
    }
    let path = orient(t, path, order)?;
    let d = &path.decoration;
    let mut cz = Vec::new();
    for k in 0..d.len() {
        if t.vertices[d[k]].color != order.second() {
            continue;
        }
        for &dj in &d[..k] {
            if t.vertices[dj].color == order.first {
                cz.push((dj, d[k]));
            }
        }
    }
    Ok(AnyonString { color: path.color, order, x: path.x_support.clone(), cz, path })
}

fn check_endpoints(t: &KagomeTorus, color: Color, ti: usize, tf: usize) -> Result<(), ModelError> {
    let a = t.triangles.get(ti).ok_or(ModelError::IndexOutOfRange(ti))?;
    let b = t.triangles.get(tf).ok_or(ModelError::IndexOutOfRange(tf))?;
    if a.color != color || b.color != color || a.orientation == b.orientation {
        return Err(ModelError::BadEndpoints);
    }
    Ok(())
}

/// Open string creating (or moving, or annihilating) a pair of `color`
/// fluxes on triangles `ti` and `tf`. `via` optionally fixes the star path.
pub fn anyon_string(
    t: &KagomeTorus,
    color: Color,
    ti: usize,
    tf: usize,
    order: ColorOrder,
    via: Option<&[usize]>,
) -> Result<AnyonString, ModelError> {
    check_endpoints(t, color, ti, tf)?;
    let path = match via {
        Some(stars) => {
            if stars.first() != Some(&t.triangles[ti].star) || stars.last() != Some(&t.triangles[tf].star) {
                return Err(ModelError::BadEndpoints);
            }
            explicit_path(t, color, stars.to_vec())?
        }
        None => string_path(t, color, Endpoint::Triangle(ti), Endpoint::Triangle(tf), Dir::H)?,
    };
    decorate(t, path, order)
}

pub fn anyon_string_program(t: &KagomeTorus, color: Color, ti: usize, tf: usize, order: ColorOrder) -> Result<GateProgram, ModelError> {
    Ok(anyon_string(t, color, ti, tf, order, None)?.program())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogicalKind {
    Z,
    X,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalExpr {
    pub color: Color,
    pub dir: Dir,
    pub kind: LogicalKind,
    /// Line offset (Z-type) or row/column of the base star (X-type).
    pub offset: usize,
    pub op: OperatorExpr,
    pub string: Option<AnyonString>,
}

impl LogicalExpr {
    pub fn program(&self) -> GateProgram {
        match &self.string {
            Some(s) => s.program(),
            None => self.op.to_program(),
        }
    }
}

pub fn logical(t: &KagomeTorus, color: Color, dir: Dir, kind: LogicalKind) -> Result<LogicalExpr, ModelError> {
    logical_at(t, color, dir, kind, 0, ColorOrder::default_for(color))
}

/// Logical string at a given translate. The Z-type acts on the `color`
/// vertices of one straight line; the X-type is a decorated loop winding
/// once in `dir`, based at the first eligible star of row (H) or column (V)
/// `offset`.
pub fn logical_at(t: &KagomeTorus, color: Color, dir: Dir, kind: LogicalKind, offset: usize, order: ColorOrder) -> Result<LogicalExpr, ModelError> {
    match kind {
        LogicalKind::Z => {
            let support = t.z_logical_support(color, dir, offset);
            Ok(LogicalExpr {
                color,
                dir,
                kind,
                offset,
                op: OperatorExpr::new(support.iter().map(|&v| Factor::Z(qid(v))).collect()),
                string: None,
            })
        }
        LogicalKind::X => {
            let base = match dir {
                Dir::H => (0..t.lx).map(|i| t.star_index(i as i64, offset as i64)).find(|&s| t.stars[s].color != color),
                Dir::V => (0..t.ly).map(|j| t.star_index(offset as i64, j as i64)).find(|&s| t.stars[s].color != color),
            }
            .ok_or(ModelError::IndexOutOfRange(offset))?;
            let path = string_loop(t, color, dir, base)?;
            let s = decorate(t, path, order)?;
            Ok(LogicalExpr { color, dir, kind, offset, op: s.operator(), string: Some(s) })
        }
    }
}

/// Vertices of a Z string joining two `color` stars through their tips
/// (shortest path on the `color` superlattice).
pub fn z_string(t: &KagomeTorus, color: Color, from: usize, to: usize) -> Result<Vec<usize>, ModelError> {
    if t.stars[from].color != color || t.stars[to].color != color {
        return Err(ModelError::BadEndpoints);
    }
    let n = t.num_stars();
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    seen[from] = true;
    queue.push_back(from);
    while let Some(s) = queue.pop_front() {
        if s == to {
            break;
        }
        for &v in &t.stars[s].tips {
            let tip = t.vertices[v].tip_of;
            let other = if tip[0] == s { tip[1] } else { tip[0] };
            if !seen[other] {
                seen[other] = true;
                prev[other] = Some((s, v));
                queue.push_back(other);
            }
        }
    }
    let mut out = Vec::new();
    let mut cur = to;
    while cur != from {
        let (p, v) = prev[cur].ok_or(ModelError::BadEndpoints)?;
        out.push(v);
        cur = p;
    }
    out.reverse();
    Ok(out)
}

/// Expectation values of every stabiliser and every logical translate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilizerSnapshot {
    pub label: String,
    pub stars: Vec<f64>,
    pub triangles: Vec<f64>,
    pub logicals: Vec<LogicalValue>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogicalValue {
    pub color: Color,
    pub dir: Dir,
    pub translates: Vec<f64>,
    pub mean: f64,
}

/// The six logical labels in the order RH, GH, BH, RV, GV, BV.
pub const LOGICAL_ORDER: [(Color, Dir); 6] =
    [(Color::R, Dir::H), (Color::G, Dir::H), (Color::B, Dir::H), (Color::R, Dir::V), (Color::G, Dir::V), (Color::B, Dir::V)];

impl StabilizerSnapshot {
    /// Energy per Hamiltonian term.
    pub fn energy_density(&self) -> f64 {
        let n = (self.stars.len() + self.triangles.len()) as f64;
        -(self.stars.iter().sum::<f64>() + self.triangles.iter().sum::<f64>()) / n
    }

    /// Mean logical values in [`LOGICAL_ORDER`].
    pub fn logical_means(&self) -> [f64; 6] {
        let mut out = [0.0; 6];
        for (k, (c, d)) in LOGICAL_ORDER.iter().enumerate() {
            out[k] = self.logicals.iter().find(|l| l.color == *c && l.dir == *d).map_or(0.0, |l| l.mean);
        }
        out
    }

    /// Pinning function against target signs.
    pub fn pinning(&self, target: &[i8; 6]) -> f64 {
        self.logical_means().iter().zip(target).map(|(z, &s)| z * s as f64).sum::<f64>() / 6.0
    }

    /// Stars whose expectation is below `-1 + tol`.
    pub fn negative_stars(&self, tol: f64) -> Vec<usize> {
        (0..self.stars.len()).filter(|&s| self.stars[s] < -1.0 + tol).collect()
    }

    pub fn negative_triangles(&self, tol: f64) -> Vec<usize> {
        (0..self.triangles.len()).filter(|&s| self.triangles[s] < -1.0 + tol).collect()
    }
}

pub fn snapshot<T: Real>(t: &KagomeTorus, state: &StateVector<T>, label: &str) -> Result<StabilizerSnapshot, ModelError> {
    let mut stars = Vec::with_capacity(t.num_stars());
    for s in 0..t.num_stars() {
        stars.push(star_op(t, s)?.op.expval(state)?.re);
    }
    let mut triangles = Vec::with_capacity(t.triangles.len());
    for tr in 0..t.triangles.len() {
        triangles.push(triangle_op(t, tr)?.op.expval(state)?.re);
    }
    let mut logicals = Vec::new();
    for (c, d) in LOGICAL_ORDER {
        let mut translates = Vec::new();
        for off in 0..t.line_translates(d) {
            let l = logical_at(t, c, d, LogicalKind::Z, off, ColorOrder::default_for(c))?;
            translates.push(l.op.expval(state)?.re);
        }
        let mean = translates.iter().sum::<f64>() / translates.len() as f64;
        logicals.push(LogicalValue { color: c, dir: d, translates, mean });
    }
    Ok(StabilizerSnapshot { label: String::from(label), stars, triangles, logicals })
}

/// One step of a braid. Triangles are given by index; `via` lists the
/// stars a string passes, endpoints included.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum BraidStep {
    /// New pair on two unexcited triangles of opposite orientation.
    Create {
        color: Color,
        from: usize,
        to: usize,
        #[serde(default)]
        via: Option<Vec<usize>>,
        #[serde(default)]
        order: Option<ColorOrder>,
    },
    /// Carries the excitation on `from` to the same-orientation triangle
    /// `to`, extending the pair's string.
    Move {
        color: Color,
        from: usize,
        to: usize,
        #[serde(default)]
        via: Option<Vec<usize>>,
    },
    /// Fuses a pair. Without `via` the string is retracted; a `via` route
    /// from `from` to `to` that does not retrace it closes a loop.
    Annihilate {
        color: Color,
        from: usize,
        to: usize,
        #[serde(default)]
        via: Option<Vec<usize>>,
    },
    /// A pair created, carried once around the hexagon of `center` and
    /// fused: a closed string of the centre's colour.
    Ring {
        center: usize,
        #[serde(default)]
        k0: usize,
        #[serde(default)]
        order: Option<ColorOrder>,
    },
    /// Closed string through an explicit cyclic star sequence.
    Loop {
        color: Color,
        stars: Vec<usize>,
        #[serde(default)]
        order: Option<ColorOrder>,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BraidSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub steps: Vec<BraidStep>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BraidSegment {
    pub label: String,
    pub program: GateProgram,
    /// Excited triangles after this segment.
    pub excited: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BraidProgram {
    pub segments: Vec<BraidSegment>,
}

impl BraidProgram {
    /// All segments with a labelled barrier after each.
    pub fn program(&self) -> GateProgram {
        let mut p = GateProgram::new();
        for s in &self.segments {
            p.extend(&s.program);
            p.push(Instruction::Barrier { label: Some(s.label.clone()) });
        }
        p
    }
}

/// A live pair: `stars` runs from the star of `ends[0]` to that of `ends[1]`.
struct Pair {
    color: Color,
    order: ColorOrder,
    stars: Vec<usize>,
    ends: [usize; 2],
}

/// Appends `via[1..]` to `stars`, cancelling immediate backtracks.
fn extend_route(stars: &mut Vec<usize>, via: &[usize]) {
    for &s in via.iter().skip(1) {
        if stars.len() >= 2 && stars[stars.len() - 2] == s {
            stars.pop();
        } else {
            stars.push(s);
        }
    }
}

fn route(t: &KagomeTorus, color: Color, from: usize, to: usize, via: &Option<Vec<usize>>) -> Result<Vec<usize>, ModelError> {
    let (a, b) = (t.triangles[from].star, t.triangles[to].star);
    match via {
        Some(v) => {
            if v.first() != Some(&a) || v.last() != Some(&b) {
                return Err(ModelError::BadEndpoints);
            }
            Ok(v.clone())
        }
        None => Ok(t.hex_path_avoiding(color, a, b).ok_or(crate::error::LatticeError::NoPath)?),
    }
}

fn open_string(t: &KagomeTorus, color: Color, stars: &[usize], order: ColorOrder) -> Result<GateProgram, ModelError> {
    if stars.len() < 2 {
        return Ok(GateProgram::new());
    }
    Ok(decorate(t, explicit_path(t, color, stars.to_vec())?, order)?.program())
}

fn check_triangle(t: &KagomeTorus, tr: usize, color: Color) -> Result<(), ModelError> {
    match t.triangles.get(tr) {
        None => Err(ModelError::IndexOutOfRange(tr)),
        Some(x) if x.color != color => Err(ModelError::BadEndpoints),
        _ => Ok(()),
    }
}

/// Builds a braid from create/move/annihilate/loop steps. Each live pair
/// keeps the star route of its string; a step replaces the pair string
/// `S(old)` by `S(new)` through the product `S(new) S(old)`.
pub fn braid_sequence(t: &KagomeTorus, spec: &BraidSpec) -> Result<BraidProgram, ModelError> {
    let mut pairs: Vec<Pair> = Vec::new();
    let mut out = BraidProgram::default();
    let excited = |pairs: &Vec<Pair>| -> Vec<usize> {
        let mut e: Vec<usize> = pairs.iter().flat_map(|p| p.ends).collect();
        e.sort_unstable();
        e
    };
    let find = |pairs: &Vec<Pair>, tr: usize| pairs.iter().position(|p| p.ends.contains(&tr));
    for (k, step) in spec.steps.iter().enumerate() {
        let (label, program) = match step {
            BraidStep::Create { color, from, to, via, order } => {
                check_triangle(t, *from, *color)?;
                check_triangle(t, *to, *color)?;
                if find(&pairs, *from).is_some() || find(&pairs, *to).is_some() {
                    return Err(ModelError::DanglingAnyon(excited(&pairs)));
                }
                if t.triangles[*from].orientation == t.triangles[*to].orientation {
                    return Err(ModelError::BadEndpoints);
                }
                let order = order.unwrap_or(ColorOrder::default_for(*color));
                let stars = route(t, *color, *from, *to, via)?;
                let p = open_string(t, *color, &stars, order)?;
                pairs.push(Pair { color: *color, order, stars, ends: [*from, *to] });
                (format!("{k}:create-{}", color.letter()), p)
            }
            BraidStep::Move { color, from, to, via } => {
                check_triangle(t, *to, *color)?;
                let i = find(&pairs, *from).ok_or_else(|| ModelError::DanglingAnyon(excited(&pairs)))?;
                if find(&pairs, *to).is_some() || pairs[i].color != *color {
                    return Err(ModelError::DanglingAnyon(excited(&pairs)));
                }
                if t.triangles[*from].orientation != t.triangles[*to].orientation {
                    return Err(ModelError::BadEndpoints);
                }
                let pair = &mut pairs[i];
                if pair.ends[0] == *from {
                    pair.ends.swap(0, 1);
                    pair.stars.reverse();
                }
                let mut p = open_string(t, *color, &pair.stars, pair.order)?;
                extend_route(&mut pair.stars, &route(t, *color, *from, *to, via)?);
                p.extend(&open_string(t, *color, &pair.stars, pair.order)?);
                pair.ends[1] = *to;
                (format!("{k}:move-{}", color.letter()), p)
            }
            BraidStep::Annihilate { color, from, to, via } => {
                let i = find(&pairs, *from).ok_or_else(|| ModelError::DanglingAnyon(excited(&pairs)))?;
                if !pairs[i].ends.contains(to) || pairs[i].color != *color || from == to {
                    return Err(ModelError::DanglingAnyon(excited(&pairs)));
                }
                let mut pair = pairs.remove(i);
                if pair.ends[0] == *from {
                    pair.stars.reverse();
                }
                let mut p = open_string(t, *color, &pair.stars, pair.order)?;
                if let Some(v) = via {
                    let mut closed = pair.stars.clone();
                    extend_route(&mut closed, &route(t, *color, *from, *to, &Some(v.clone()))?);
                    if closed.len() > 1 {
                        // Route returned to the partner's star: a closed loop.
                        closed.pop();
                        p.extend(&decorate(t, explicit_loop(t, *color, closed, [0, 0])?, pair.order)?.program());
                    }
                }
                (format!("{k}:annihilate-{}", color.letter()), p)
            }
            BraidStep::Ring { center, k0, order } => {
                if *center >= t.num_stars() {
                    return Err(ModelError::IndexOutOfRange(*center));
                }
                let c = t.stars[*center].color;
                let p = ring_path(t, *center, *k0 % 6)?;
                (format!("{k}:ring-{}", c.letter()), decorate(t, p, order.unwrap_or(ColorOrder::default_for(c)))?.program())
            }
            BraidStep::Loop { color, stars, order } => {
                let p = explicit_loop(t, *color, stars.clone(), [0, 0])?;
                (format!("{k}:loop-{}", color.letter()), decorate(t, p, order.unwrap_or(ColorOrder::default_for(*color)))?.program())
            }
        };
        out.segments.push(BraidSegment { label, program, excited: excited(&pairs) });
    }
    Ok(out)
}

/// Like [`braid_sequence`] but fails unless every pair has been fused.
pub fn closed_braid(t: &KagomeTorus, spec: &BraidSpec) -> Result<BraidProgram, ModelError> {
    let b = braid_sequence(t, spec)?;
    match b.segments.last() {
        Some(s) if !s.excited.is_empty() => Err(ModelError::DanglingAnyon(s.excited.clone())),
        _ => Ok(b),
    }
}

/// Applies a braid to a state, recording a snapshot after every segment.
pub fn run_braid<T: Real>(t: &KagomeTorus, state: &mut StateVector<T>, braid: &BraidProgram) -> Result<Vec<StabilizerSnapshot>, ModelError> {
    let mut snaps = Vec::with_capacity(braid.segments.len());
    for seg in &braid.segments {
        apply_program(state, &seg.program)?;
        snaps.push(snapshot(t, state, &seg.label)?);
    }
    Ok(snaps)
}

/// Report of [`commutator_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutatorReport {
    /// Largest commutator norm over adjacent star pairs on a generic state.
    pub full_space_max: f64,
    /// Largest commutator norm over all star pairs on a random state of the
    /// `B_t = +1` subspace.
    pub subspace_max: f64,
    /// Largest commutator norm over star pairs with disjoint supports.
    pub disjoint_max: f64,
    pub disjoint_pairs: usize,
    pub pairs_checked: usize,
}

/// Basis states (vertex-bit keys) of the `B_t = +1` subspace.
pub fn b_plus_basis(t: &KagomeTorus) -> Vec<u64> {
    assert!(t.num_vertices() <= 64, "basis keys limited to 64 vertices");
    // Solve colour by colour: each colour's triangles only touch vertices of
    // that colour.
    let mut per_color: Vec<Vec<u64>> = Vec::new();
    for c in Color::ALL {
        let verts: Vec<usize> = t.vertices_of_color(c).collect();
        assert!(verts.len() <= 20, "exhaustive subspace enumeration limited to 20 vertices per colour");
        let tris: Vec<[usize; 3]> = t.triangles_of_color(c).map(|tr| t.triangles[tr].vertices).collect();
        let mut ok = Vec::new();
        for bits in 0u64..(1 << verts.len()) {
            let mut key = 0u64;
            for (i, &v) in verts.iter().enumerate() {
                if bits >> i & 1 == 1 {
                    key |= 1 << v;
                }
            }
            if tris.iter().all(|tv| tv.iter().filter(|&&v| key >> v & 1 == 1).count() % 2 == 0) {
                ok.push(key);
            }
        }
        per_color.push(ok);
    }
    let mut out = Vec::with_capacity(per_color.iter().map(|v| v.len()).product());
    for &a in &per_color[0] {
        for &b in &per_color[1] {
            for &c in &per_color[2] {
                out.push(a | b | c);
            }
        }
    }
    out.sort_unstable();
    out
}

/// State over all vertices from vertex-bit keys.
pub fn state_from_vertex_keys<T: Real>(t: &KagomeTorus, entries: Vec<(u64, Complex<T>)>) -> StateVector<T> {
    let qubits: Vec<QubitId> = (0..t.num_vertices()).map(qid).collect();
    let mut s = StateVector::from_entries(qubits, entries);
    s.set_cap(64);
    s
}

fn random_amp(rng: &mut ChaCha8Rng) -> Complex<f64> {
    Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
}

fn commutator_norm(a: &OperatorExpr, b: &OperatorExpr, psi: &StateVector<f64>) -> Result<f64, ModelError> {
    let mut ab = psi.clone();
    b.apply(&mut ab)?;
    a.apply(&mut ab)?;
    let mut ba = psi.clone();
    a.apply(&mut ba)?;
    b.apply(&mut ba)?;
    let n = psi.norm_sqr();
    let ov = ab.inner(&ba)?;
    let d = ab.norm_sqr() + ba.norm_sqr() - 2.0 * ov.re;
    Ok(libm::sqrt(d.max(0.0) / n))
}

/// Checks that adjacent star operators fail to commute on generic states
/// but commute on the `B_t = +1` subspace.
pub fn commutator_check(t: &KagomeTorus, seed: u64) -> Result<CommutatorReport, ModelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = t.num_vertices();
    let stars: Vec<StabilizerExpr> = (0..t.num_stars()).map(|s| star_op(t, s)).collect::<Result<_, _>>()?;

    // Generic state: random superposition of random basis states.
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let generic: Vec<(u64, Complex<f64>)> = (0..256).map(|_| (rng.random::<u64>() & mask, random_amp(&mut rng))).collect();
    let mut generic = state_from_vertex_keys(t, generic);
    generic.renormalize()?;
    let mut full_space_max: f64 = 0.0;
    let mut pairs = 0;
    for s in 0..t.num_stars() {
        for &nb in &t.stars[s].neighbors {
            full_space_max = full_space_max.max(commutator_norm(&stars[s].op, &stars[nb].op, &generic)?);
            pairs += 1;
        }
    }

    let basis = b_plus_basis(t);
    let sub: Vec<(u64, Complex<f64>)> = basis.iter().map(|&k| (k, random_amp(&mut rng))).collect();
    let mut sub = state_from_vertex_keys(t, sub);
    sub.renormalize()?;
    let mut subspace_max: f64 = 0.0;
    let mut disjoint_max: f64 = 0.0;
    let mut disjoint_pairs = 0;
    for a in 0..t.num_stars() {
        for b in a + 1..t.num_stars() {
            let norm = commutator_norm(&stars[a].op, &stars[b].op, &sub)?;
            subspace_max = subspace_max.max(norm);
            pairs += 1;
            if stars[a].support.iter().all(|v| !stars[b].support.contains(v)) {
                disjoint_pairs += 1;
                disjoint_max = disjoint_max.max(commutator_norm(&stars[a].op, &stars[b].op, &generic)?);
            }
        }
    }
    Ok(CommutatorReport { full_space_max, subspace_max, disjoint_max, disjoint_pairs, pairs_checked: pairs })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BorromeanVariant {
    #[serde(rename = "RGB")]
    Rgb,
    #[serde(rename = "RB")]
    RbOnly,
    #[serde(rename = "GB")]
    GbOnly,
}

/// Strings of the Borromean braid: a blue pair string, a green pair string
/// and a closed red loop.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BorromeanGeometry {
    pub blue: AnyonString,
    pub green: AnyonString,
    pub red: AnyonString,
}

impl BorromeanGeometry {
    /// Braid operators in application order, each tagged "is blue":
    /// B(b to b'), G(g to g'), R, G(g' to g), B(b' to b), G(g to g'), R, G(g' to g).
    pub fn sequence(&self, variant: BorromeanVariant) -> Vec<(&'static str, GateProgram, bool)> {
        let b = self.blue.program();
        let g = self.green.program();
        let r = self.red.program();
        let with_g = variant != BorromeanVariant::RbOnly;
        let with_r = variant != BorromeanVariant::GbOnly;
        let mut out = vec![("blue-create", b.clone(), true)];
        for half in 0..2 {
            if with_g {
                out.push(("green-create", g.clone(), false));
            }
            if with_r {
                out.push(("red-loop", r.clone(), false));
            }
            if with_g {
                out.push(("green-annihilate", g.clone(), false));
            }
            if half == 0 {
                out.push(("blue-annihilate", b.clone(), true));
            }
        }
        out
    }
}

/// Canonical Borromean geometry on a torus: the red loop encircles the red
/// star `r0`, whose hexagon holds one green and one blue triangle; the green
/// and blue strings start on those two triangles and leave through the
/// loop.
pub fn borromean_geometry(t: &KagomeTorus) -> Result<BorromeanGeometry, ModelError> {
    borromean_geometry_with(t, &BorromeanChoice::default())
}

/// Free parameters of the Borromean geometry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BorromeanChoice {
    pub red_center: usize,
    pub red_k0: usize,
    pub blue_stars: Vec<usize>,
    pub green_stars: Vec<usize>,
    pub blue_order: Option<ColorOrder>,
    pub green_order: Option<ColorOrder>,
    pub red_order: Option<ColorOrder>,
}

impl Default for BorromeanChoice {
    fn default() -> Self {
        BorromeanChoice {
            red_center: 0,
            red_k0: 0,
            blue_stars: vec![0, 1],
            green_stars: vec![0, 3],
            blue_order: None,
            green_order: None,
            red_order: None,
        }
    }
}

pub fn borromean_geometry_with(t: &KagomeTorus, ch: &BorromeanChoice) -> Result<BorromeanGeometry, ModelError> {
    let bp = explicit_path(t, Color::B, ch.blue_stars.clone())?;
    let gp = explicit_path(t, Color::G, ch.green_stars.clone())?;
    let rp = ring_path(t, ch.red_center, ch.red_k0)?;
    if t.stars[ch.red_center].color != Color::R {
        return Err(ModelError::BadEndpoints);
    }
    Ok(BorromeanGeometry {
        blue: decorate(t, bp, ch.blue_order.unwrap_or(ColorOrder::default_for(Color::B)))?,
        green: decorate(t, gp, ch.green_order.unwrap_or(ColorOrder::default_for(Color::G)))?,
        red: decorate(t, rp, ch.red_order.unwrap_or(ColorOrder::default_for(Color::R)))?,
    })
}

/// Exact `<psi|braid|psi>` with global phase tracking.
pub fn borromean_overlap<T: Real>(geom: &BorromeanGeometry, psi: &StateVector<T>, variant: BorromeanVariant) -> Result<Complex<f64>, ModelError> {
    let mut s = psi.clone();
    for (_, p, _) in geom.sequence(variant) {
        apply_program(&mut s, &p)?;
    }
    let z = psi.inner(&s)?;
    Ok(Complex::new(z.re.to64(), z.im.to64()))
}

/// How X- and Y-basis shots are assigned in the Hadamard test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Schedule {
    /// Alternate X, Y, X, Y, ...
    Interleaved,
    /// First half X, second half Y.
    Block,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseEstimate {
    pub re: f64,
    pub im: f64,
    pub re_err: f64,
    pub im_err: f64,
    pub r: f64,
    /// Phase in units of pi, in (-1, 1].
    pub phase_over_pi: f64,
    pub phase_err_over_pi: f64,
    pub shots_x: usize,
    pub shots_y: usize,
}

impl PhaseEstimate {
    pub fn from_value(z: Complex<f64>) -> Self {
        PhaseEstimate {
            re: z.re,
            im: z.im,
            re_err: 0.0,
            im_err: 0.0,
            r: z.norm(),
            phase_over_pi: z.arg() / core::f64::consts::PI,
            phase_err_over_pi: 0.0,
            shots_x: 0,
            shots_y: 0,
        }
    }
}

/// Ancilla id used by the Hadamard test.
pub fn hadamard_ancilla(t: &KagomeTorus) -> QubitId {
    qid(t.num_vertices() + t.num_stars() + 1)
}

/// Hadamard-test program (after state preparation): the ancilla starts in
/// `|+>` and controls every blue gate.
pub fn hadamard_test_program(t: &KagomeTorus, geom: &BorromeanGeometry, variant: BorromeanVariant) -> Result<GateProgram, ModelError> {
    let anc = hadamard_ancilla(t);
    let mut p = GateProgram::new();
    p.push(Instruction::Alloc { q: anc, basis: crate::engine::InitBasis::Plus });
    for (label, seg, blue) in geom.sequence(variant) {
        if blue {
            p.extend(&controlled(&seg, anc)?);
        } else {
            p.extend(&seg);
        }
        p.push(Instruction::Barrier { label: Some(String::from(label)) });
    }
    Ok(p)
}

/// Interferometric estimate of the braid phase from `shots` ancilla
/// readouts, split between X and Y bases per `schedule`.
pub fn borromean_phase_interferometric<T: Real>(
    t: &KagomeTorus,
    geom: &BorromeanGeometry,
    psi: &StateVector<T>,
    variant: BorromeanVariant,
    shots: usize,
    seed: u64,
    schedule: Schedule,
) -> Result<PhaseEstimate, ModelError> {
    let mut s = psi.clone();
    s.set_cap(s.num_qubits() + 1);
    apply_program(&mut s, &hadamard_test_program(t, geom, variant)?)?;
    let anc = hadamard_ancilla(t);
    let settings: Vec<MeasBasis> = (0..shots)
        .map(|n| match schedule {
            Schedule::Interleaved => {
                if n % 2 == 0 {
                    MeasBasis::X
                } else {
                    MeasBasis::Y
                }
            }
            Schedule::Block => {
                if n < shots.div_ceil(2) {
                    MeasBasis::X
                } else {
                    MeasBasis::Y
                }
            }
        })
        .collect();
    let nx = settings.iter().filter(|&&b| b == MeasBasis::X).count();
    let ny = shots - nx;
    let mut sx = MeasurementSetting { name: String::from("ancilla-X"), ..Default::default() };
    sx.bases.insert(anc, MeasBasis::X);
    let mut sy = MeasurementSetting { name: String::from("ancilla-Y"), ..Default::default() };
    sy.bases.insert(anc, MeasBasis::Y);
    // Shot n uses stream n of the seed regardless of its basis.
    let xs = sample(&s, &sx, shots, seed, None)?;
    let ys = sample(&s, &sy, shots, seed, None)?;
    let (mut sum_x, mut sum_y) = (0.0, 0.0);
    for (n, b) in settings.iter().enumerate() {
        match b {
            MeasBasis::X => sum_x += xs.parity(n, &[anc]) as f64,
            _ => sum_y += ys.parity(n, &[anc]) as f64,
        }
    }
    let mx = if nx > 0 { sum_x / nx as f64 } else { 0.0 };
    let my = if ny > 0 { sum_y / ny as f64 } else { 0.0 };
    let ex = if nx > 1 { libm::sqrt((1.0 - mx * mx).max(0.0) / nx as f64) } else { 1.0 };
    let ey = if ny > 1 { libm::sqrt((1.0 - my * my).max(0.0) / ny as f64) } else { 1.0 };
    let r2 = mx * mx + my * my;
    let phase = libm::atan2(my, mx);
    let perr = if r2 > 0.0 { libm::sqrt((mx * ey) * (mx * ey) + (my * ex) * (my * ex)) / r2 } else { core::f64::consts::PI };
    // Shot-noise floor: with a deterministic X outcome the propagated error
    // collapses; one binomial count keeps the bar honest.
    let floor = 1.0 / (shots.max(1) as f64);
    Ok(PhaseEstimate {
        re: mx,
        im: my,
        re_err: ex,
        im_err: ey,
        r: libm::sqrt(r2),
        phase_over_pi: phase / core::f64::consts::PI,
        phase_err_over_pi: perr.max(floor) / core::f64::consts::PI,
        shots_x: nx,
        shots_y: ny,
    })
}

#[cfg(test)]
mod tests;
