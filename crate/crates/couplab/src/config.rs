//! Vertex configurations: 0/1 labels and small label sets over the interior
//! of a ball, plus the dump text format.
//!
//! A configuration is stored as a flat vector aligned with the ball's
//! interior-1 vertex enumeration (lexicographic). Product configurations are
//! rank-major, cycle-minor, which matches the sorted (word, cycle) dump order.

use std::fmt;

use crate::error::{Error, Result};
use crate::graph::{ProductBall, TreeBall, Word};

/// A set of 1 to 3 labels from {0, .., n-1}, stored sorted.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub struct LabelSet {
    len: u8,
    items: [u32; 3],
}

impl LabelSet {
    pub fn new() -> LabelSet {
        LabelSet::default()
    }

    pub fn from_labels(labels: &[u32]) -> LabelSet {
        let mut s = LabelSet::new();
        for &l in labels {
            s.insert(l);
        }
        s
    }

    /// Inserts a label, keeping the set sorted; duplicates are absorbed.
    pub fn insert(&mut self, label: u32) {
        let n = self.len as usize;
        let mut pos = n;
        for i in 0..n {
            if self.items[i] == label {
                return;
            }
            if self.items[i] > label {
                pos = i;
                break;
            }
        }
        assert!(n < 3, "label sets hold at most 3 elements");
        let mut i = n;
        while i > pos {
            self.items[i] = self.items[i - 1];
            i -= 1;
        }
        self.items[pos] = label;
        self.len += 1;
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn labels(&self) -> &[u32] {
        &self.items[..self.len as usize]
    }

    pub fn contains(&self, label: u32) -> bool {
        self.labels().contains(&label)
    }

    pub fn intersection_size(&self, other: &LabelSet) -> usize {
        self.labels().iter().filter(|l| other.contains(**l)).count()
    }

    pub fn intersects(&self, other: &LabelSet) -> bool {
        self.intersection_size(other) > 0
    }

    pub fn is_subset_of(&self, other: &LabelSet) -> bool {
        self.labels().iter().all(|&l| other.contains(l))
    }

    pub fn max_label(&self) -> Option<u32> {
        self.labels().last().copied()
    }
}

impl fmt::Display for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.labels().iter().enumerate() {
            if i > 0 {
                write!(f, ";")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// 0/1 labels on the interior-1 vertices of a tree ball.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BitConfig {
    pub bits: Vec<u8>,
}

impl BitConfig {
    pub fn get(&self, ball: &TreeBall, v: usize) -> Option<u8> {
        ball.interior1_rank(v).map(|r| self.bits[r])
    }
}

/// Label sets on the interior-1 vertices of a tree ball.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SetConfig {
    pub sets: Vec<LabelSet>,
}

impl SetConfig {
    pub fn get(&self, ball: &TreeBall, v: usize) -> Option<&LabelSet> {
        ball.interior1_rank(v).map(|r| &self.sets[r])
    }
}

/// 0/1 labels on (interior-1 tree vertex) x (cycle position) of a product
/// ball, rank-major.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ProductBitConfig {
    pub n: u32,
    pub bits: Vec<u8>,
}

impl ProductBitConfig {
    pub fn get(&self, rank: usize, cycle: u32) -> u8 {
        self.bits[rank * self.n as usize + cycle as usize]
    }
}

/// One dump line: `<word>,<cycle>,<label>`. The cycle column is empty for
/// configurations on the tree alone; the origin prints as the empty word.
pub fn dump_line(word: &Word, cycle: Option<u32>, label: &str) -> String {
    match cycle {
        Some(c) => format!("{word},{c},{label}"),
        None => format!("{word},,{label}"),
    }
}

impl BitConfig {
    pub fn dump_lines(&self, ball: &TreeBall) -> Vec<String> {
        ball.interior1()
            .iter()
            .zip(&self.bits)
            .map(|(&v, &b)| dump_line(ball.word(v as usize), None, &b.to_string()))
            .collect()
    }
}

impl SetConfig {
    pub fn dump_lines(&self, ball: &TreeBall) -> Vec<String> {
        ball.interior1()
            .iter()
            .zip(&self.sets)
            .map(|(&v, s)| dump_line(ball.word(v as usize), None, &s.to_string()))
            .collect()
    }
}

impl ProductBitConfig {
    pub fn dump_lines(&self, ball: &ProductBall) -> Vec<String> {
        let tree = ball.tree();
        let mut out = Vec::with_capacity(self.bits.len());
        for (rank, &v) in tree.interior1().iter().enumerate() {
            for c in 0..self.n {
                let b = self.get(rank, c);
                out.push(dump_line(tree.word(v as usize), Some(c), &b.to_string()));
            }
        }
        out
    }
}

/// Parses a dump line back into its parts; used by round-trip tests and the
/// dump consumers.
pub fn parse_dump_line(line: &str) -> Result<(Word, Option<u32>, String)> {
    let mut parts = line.splitn(3, ',');
    let (Some(w), Some(c), Some(label)) = (parts.next(), parts.next(), parts.next()) else {
        return Err(Error::BadSetSize { size: 0 });
    };
    let word: Word = w.parse().map_err(|_| Error::NotInBall {
        vertex: w.to_string(),
    })?;
    let cycle = if c.is_empty() {
        None
    } else {
        Some(c.parse::<u32>().map_err(|_| Error::NotInBall {
            vertex: c.to_string(),
        })?)
    };
    Ok((word, cycle, label.to_string()))
}
