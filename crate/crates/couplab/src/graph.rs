//! The 3-regular tree as reduced words over three involutive generators,
//! finite balls around the origin, ends, and the tree-times-cycle product.
//!
//! A vertex is a reduced word over {a, b, c}: no two consecutive letters are
//! equal. Two words are adjacent when they differ by one letter appended or
//! removed on the right, so word length is graph distance from the origin and
//! the lexicographic order (with a < b < c, prefixes first) is a total
//! deterministic enumeration order. Every edge inside a ball joins a word to
//! its longest proper prefix, so edges are indexed by their longer endpoint.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Balls beyond this radius would not fit in memory (vertex count is
/// 1 + 3 * (2^R - 1)).
pub const MAX_RADIUS: u32 = 20;

/// Cap on window categories after coarsening; shared with the invariance
/// checker.
pub const MAX_CATEGORIES: usize = 64;

/// One of the three generators. Each is its own inverse.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Gen {
    A,
    B,
    C,
}

impl Gen {
    pub const ALL: [Gen; 3] = [Gen::A, Gen::B, Gen::C];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Cyclic successor a -> b -> c -> a, used to spell out ray words.
    pub fn successor(self) -> Gen {
        match self {
            Gen::A => Gen::B,
            Gen::B => Gen::C,
            Gen::C => Gen::A,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Gen::A => 'a',
            Gen::B => 'b',
            Gen::C => 'c',
        }
    }

    pub fn from_char(c: char) -> Option<Gen> {
        match c {
            'a' => Some(Gen::A),
            'b' => Some(Gen::B),
            'c' => Some(Gen::C),
            _ => None,
        }
    }
}

/// A reduced word. The empty word is the origin.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Word(Vec<Gen>);

impl Word {
    pub fn origin() -> Word {
        Word(Vec::new())
    }

    /// Builds a word from letters, rejecting non-reduced input.
    pub fn new(letters: Vec<Gen>) -> Option<Word> {
        if letters.windows(2).any(|w| w[0] == w[1]) {
            return None;
        }
        Some(Word(letters))
    }

    pub fn letters(&self) -> &[Gen] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<Gen> {
        self.0.last().copied()
    }

    /// Right multiplication by a generator: append, or cancel a trailing copy.
    /// Moves to an adjacent vertex.
    pub fn mul_right(&self, g: Gen) -> Word {
        let mut v = self.0.clone();
        if v.last() == Some(&g) {
            v.pop();
        } else {
            v.push(g);
        }
        Word(v)
    }

    /// Left multiplication by a generator: prepend, or cancel a leading copy.
    /// This is a graph automorphism (it commutes with right multiplication).
    pub fn mul_left(&self, g: Gen) -> Word {
        let mut v = self.0.clone();
        if v.first() == Some(&g) {
            v.remove(0);
        } else {
            v.insert(0, g);
        }
        Word(v)
    }

    /// The word with the last letter removed; None at the origin.
    pub fn parent(&self) -> Option<Word> {
        if self.0.is_empty() {
            return None;
        }
        Word::new(self.0[..self.0.len() - 1].to_vec())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for g in &self.0 {
            write!(f, "{}", g.to_char())?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Word, String> {
        let mut letters = Vec::with_capacity(s.len());
        for c in s.chars() {
            letters.push(Gen::from_char(c).ok_or_else(|| format!("bad letter {c:?}"))?);
        }
        Word::new(letters).ok_or_else(|| format!("word {s:?} is not reduced"))
    }
}

/// A direction to infinity, encoded by its base letter d. The canonical ray
/// from the origin spells d, d', d, d', ... where d' is the cyclic successor
/// of d, which is an eventually alternating (hence reduced) infinite word.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct End {
    base: Gen,
}

impl End {
    pub fn new(base: Gen) -> End {
        End { base }
    }

    pub fn base(self) -> Gen {
        self.base
    }

    /// The i-th letter of the canonical ray word.
    pub fn ray_letter(self, i: usize) -> Gen {
        if i % 2 == 0 {
            self.base
        } else {
            self.base.successor()
        }
    }

    /// The generator whose edge leads from `w` one step closer to this end.
    ///
    /// If `w` is a prefix of the ray word the next step extends it; otherwise
    /// the unique path to the end first retreats to the longest common prefix
    /// of `w` and the ray, so the step removes the last letter. Either way the
    /// step is right multiplication by the returned generator.
    pub fn toward_gen(self, w: &Word) -> Gen {
        let on_ray = w
            .letters()
            .iter()
            .enumerate()
            .all(|(i, &g)| g == self.ray_letter(i));
        if on_ray {
            self.ray_letter(w.len())
        } else {
            w.last().expect("off-ray word is nonempty")
        }
    }

    /// The neighbor of `w` on the unique path from `w` to this end.
    pub fn step(self, w: &Word) -> Word {
        w.mul_right(self.toward_gen(w))
    }
}

/// A graph shift: left multiplication by a generator on the tree factor, or a
/// rotation of the cycle factor. Both are automorphisms of the respective
/// graph, and each generator shift is an involution.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Shift {
    Letter(Gen),
    Rotate(i64),
}

impl Shift {
    pub fn apply_word(self, w: &Word) -> Result<Word> {
        match self {
            Shift::Letter(g) => Ok(w.mul_left(g)),
            Shift::Rotate(_) => Err(Error::ShiftMismatch {
                what: "rotation".into(),
            }),
        }
    }

    /// Applies the shift to a product vertex (tree word, cycle position).
    pub fn apply_product(self, w: &Word, cycle: u32, n: u32) -> (Word, u32) {
        match self {
            Shift::Letter(g) => (w.mul_left(g), cycle),
            Shift::Rotate(k) => {
                let c = (cycle as i64 + k).rem_euclid(n as i64) as u32;
                (w.clone(), c)
            }
        }
    }
}

impl fmt::Display for Shift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shift::Letter(g) => write!(f, "left-{}", g.to_char()),
            Shift::Rotate(k) => write!(f, "rotate-{k}"),
        }
    }
}

/// The ball of a given radius around the origin of the tree.
///
/// Vertices are stored sorted lexicographically, so index 0 is the origin and
/// all enumeration orders derived from indices are deterministic. Edge k joins
/// vertex k + 1 to its parent (every non-origin word has exactly one parent
/// edge, and both endpoints lie in the ball exactly when the child does).
pub struct TreeBall {
    radius: u32,
    words: Vec<Word>,
    edges: Vec<(u32, u32)>,
    /// incident[v][g] is the edge index of (v, v*g), or -1 outside the ball.
    incident: Vec<[i32; 3]>,
    interior1: Vec<u32>,
    interior1_rank: Vec<i32>,
}

impl TreeBall {
    pub fn build(radius: u32) -> Result<TreeBall> {
        if radius > MAX_RADIUS {
            return Err(Error::BallTooLarge {
                radius,
                cap: MAX_RADIUS,
            });
        }
        let mut words = vec![Word::origin()];
        let mut level = vec![Word::origin()];
        for _ in 0..radius {
            let mut next = Vec::with_capacity(level.len() * 2);
            for w in &level {
                for g in Gen::ALL {
                    if w.last() != Some(g) {
                        next.push(w.mul_right(g));
                    }
                }
            }
            words.extend(next.iter().cloned());
            level = next;
        }
        words.sort();

        let index_of = |w: &Word| words.binary_search(w).ok();
        let mut edges = Vec::with_capacity(words.len().saturating_sub(1));
        for (i, w) in words.iter().enumerate().skip(1) {
            let p = w.parent().expect("non-origin word has a parent");
            let pi = index_of(&p).expect("parent is in the ball") as u32;
            edges.push((pi, i as u32));
        }

        let mut incident = vec![[-1i32; 3]; words.len()];
        for (k, &(p, c)) in edges.iter().enumerate() {
            let g = words[c as usize].last().expect("child is non-origin");
            incident[p as usize][g.index()] = k as i32;
            incident[c as usize][g.index()] = k as i32;
        }

        let mut interior1 = Vec::new();
        let mut interior1_rank = vec![-1i32; words.len()];
        for (i, w) in words.iter().enumerate() {
            if radius >= 1 && w.len() as u32 <= radius - 1 {
                interior1_rank[i] = interior1.len() as i32;
                interior1.push(i as u32);
            }
        }

        Ok(TreeBall {
            radius,
            words,
            edges,
            incident,
            interior1,
            interior1_rank,
        })
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn vertex_count(&self) -> usize {
        self.words.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn word(&self, v: usize) -> &Word {
        &self.words[v]
    }

    pub fn index_of(&self, w: &Word) -> Option<usize> {
        self.words.binary_search(w).ok()
    }

    /// The origin's index; the empty word sorts first.
    pub fn origin(&self) -> usize {
        0
    }

    pub fn edge(&self, k: usize) -> (u32, u32) {
        self.edges[k]
    }

    /// The generator an edge corresponds to: the last letter of its child.
    pub fn edge_gen(&self, k: usize) -> Gen {
        self.words[self.edges[k].1 as usize]
            .last()
            .expect("edge child is non-origin")
    }

    pub fn incident_edge(&self, v: usize, g: Gen) -> Option<usize> {
        let e = self.incident[v][g.index()];
        (e >= 0).then_some(e as usize)
    }

    pub fn neighbor(&self, v: usize, g: Gen) -> Option<usize> {
        self.incident_edge(v, g).map(|e| {
            let (p, c) = self.edges[e];
            if p as usize == v {
                c as usize
            } else {
                p as usize
            }
        })
    }

    pub fn degree(&self, v: usize) -> usize {
        self.incident[v].iter().filter(|&&e| e >= 0).count()
    }

    /// True when the whole radius-r ball around v lies inside this ball.
    pub fn is_interior(&self, v: usize, r: u32) -> bool {
        self.words[v].len() as u32 + r <= self.radius
    }

    /// The three edges meeting v, in generator order. Defined exactly on
    /// interior-1 vertices.
    pub fn incident_edges(&self, v: usize) -> Result<[usize; 3]> {
        if !self.is_interior(v, 1) {
            return Err(Error::NotInterior {
                vertex: self.words[v].to_string(),
                radius: 1,
            });
        }
        let e = self.incident[v];
        Ok([e[0] as usize, e[1] as usize, e[2] as usize])
    }

    /// The two incident edges of v that do not lead toward the end. For
    /// distinct interior vertices these pairs are pairwise disjoint: each edge
    /// points toward the end from exactly one of its endpoints, so it is kept
    /// by at most the other one.
    pub fn away_edges(&self, v: usize, end: End) -> Result<[usize; 2]> {
        let all = self.incident_edges(v)?;
        let toward = end.toward_gen(&self.words[v]);
        let mut out = [0usize; 2];
        let mut m = 0;
        for g in Gen::ALL {
            if g != toward {
                out[m] = all[g.index()];
                m += 1;
            }
        }
        Ok(out)
    }

    /// The incident edge leading one step toward the end.
    pub fn toward_edge(&self, v: usize, end: End) -> Result<usize> {
        let all = self.incident_edges(v)?;
        let toward = end.toward_gen(&self.words[v]);
        Ok(all[toward.index()])
    }

    /// Interior-1 vertex indices in lexicographic order.
    pub fn interior1(&self) -> &[u32] {
        &self.interior1
    }

    /// Rank of v within the interior-1 enumeration, if v is interior-1.
    pub fn interior1_rank(&self, v: usize) -> Option<usize> {
        let r = self.interior1_rank[v];
        (r >= 0).then_some(r as usize)
    }

    /// All vertices interior at radius r, in lexicographic order.
    pub fn interior_vertices(&self, r: u32) -> Vec<u32> {
        (0..self.words.len())
            .filter(|&v| self.is_interior(v, r))
            .map(|v| v as u32)
            .collect()
    }
}

/// The Cartesian product of a tree ball with the n-cycle: (u, i) ~ (u', i)
/// for tree edges and (u, i) ~ (u, i +- 1 mod n). Needs n >= 3 so the cycle
/// is a simple graph.
pub struct ProductBall {
    tree: TreeBall,
    n: u32,
}

impl ProductBall {
    pub fn build(tree_radius: u32, n: u32) -> Result<ProductBall> {
        if n < 3 {
            return Err(Error::CycleTooShort { n });
        }
        Ok(ProductBall {
            tree: TreeBall::build(tree_radius)?,
            n,
        })
    }

    pub fn tree(&self) -> &TreeBall {
        &self.tree
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn vertex_count(&self) -> usize {
        self.tree.vertex_count() * self.n as usize
    }

    /// Counted by summing in-ball degrees rather than by formula, so tests
    /// can compare against the product formula independently.
    pub fn edge_count(&self) -> usize {
        let mut twice = 0usize;
        for v in 0..self.tree.vertex_count() {
            for _ in 0..self.n {
                twice += self.tree.degree(v) + 2;
            }
        }
        twice / 2
    }

    pub fn neighbors(&self, v: usize, cycle: u32) -> Vec<(usize, u32)> {
        let mut out = Vec::with_capacity(5);
        for g in Gen::ALL {
            if let Some(u) = self.tree.neighbor(v, g) {
                out.push((u, cycle));
            }
        }
        out.push((v, (cycle + 1) % self.n));
        out.push((v, (cycle + self.n - 1) % self.n));
        out
    }
}
