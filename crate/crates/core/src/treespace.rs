//! Phylogenetic trees as weighted split sets, Newick I/O and the
//! Billera-Holmes-Vogtmann geodesic distance.
//!
//! Trees are unrooted. A tree on `L` leaves is a set of pairwise compatible
//! leaf bipartitions ("splits") with positive lengths plus one pendant length
//! per leaf. Splits are bitmasks over the ordered leaf universe, always stored
//! with the side that does *not* contain leaf 0.
//!
//! The geodesic is computed with the successive-extension scheme of Owen and
//! Provan: start from the cone path through the origin and keep splitting
//! support pairs while a weighted vertex cover of the incompatibility graph
//! lighter than one exists.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

/// Interior splits shorter than this are dropped when a tree is built.
pub const ZERO_LENGTH_TOL: f64 = 1e-12;

/// Largest leaf set the bitmask representation supports.
pub const MAX_LEAVES: usize = 64;

/// Largest leaf count accepted by [`bhv_distance_exhaustive`].
pub const EXHAUSTIVE_MAX_LEAVES: usize = 7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("leaf universes differ ({left} vs {right} leaves or different labels)")]
    UniverseMismatch { left: usize, right: usize },
    #[error("too many leaves: {0} (at most {max})", max = MAX_LEAVES)]
    TooManyLeaves(usize),
    #[error("exhaustive geodesic search refuses {0} leaves (at most {max})", max = EXHAUSTIVE_MAX_LEAVES)]
    TooLargeForExhaustive(usize),
    #[error("invalid tree: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnbalancedParentheses,
    DuplicateLabel(String),
    MissingBranchLength,
    NegativeBranchLength,
    InvalidNumber(String),
    UnknownLabel(String),
    MissingLeaves(Vec<String>),
    UnexpectedChar(char),
    MissingSemicolon,
    TrailingInput,
    Empty,
    TooManyLeaves(usize),
    InvalidTree(String),
}

/// A Newick syntax or content error at a byte offset of the input.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("newick error at byte {offset}: {kind:?}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

/// A leaf bipartition over a universe of `leaves` labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Split {
    mask: u64,
    leaves: u8,
}

impl Split {
    /// Builds a split from one of its sides. Returns `None` when a side is
    /// empty.
    pub fn new(side: u64, leaves: usize) -> Option<Split> {
        if leaves == 0 || leaves > MAX_LEAVES {
            return None;
        }
        let full = full_mask(leaves);
        let side = side & full;
        let canonical = if side & 1 == 1 { full & !side } else { side };
        if canonical == 0 || canonical == full {
            return None;
        }
        Some(Split {
            mask: canonical,
            leaves: leaves as u8,
        })
    }

    /// The side not containing leaf 0.
    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn leaves(&self) -> usize {
        self.leaves as usize
    }

    /// Size of the smaller side.
    pub fn min_side(&self) -> usize {
        let k = self.mask.count_ones() as usize;
        k.min(self.leaves() - k)
    }

    pub fn is_pendant(&self) -> bool {
        self.min_side() == 1
    }

    pub fn is_interior(&self) -> bool {
        self.min_side() >= 2
    }
}

fn full_mask(leaves: usize) -> u64 {
    if leaves == 64 {
        u64::MAX
    } else {
        (1u64 << leaves) - 1
    }
}

/// Two splits are compatible iff one of the four side intersections is empty.
pub fn compatible(s1: Split, s2: Split) -> Result<bool, TreeError> {
    if s1.leaves != s2.leaves {
        return Err(TreeError::UniverseMismatch {
            left: s1.leaves(),
            right: s2.leaves(),
        });
    }
    Ok(compatible_masks(s1.mask, s2.mask))
}

// Both canonical sides miss leaf 0, so the complement/complement
// intersection is never empty.
#[inline]
fn compatible_masks(a: u64, b: u64) -> bool {
    a & b == 0 || a & !b == 0 || b & !a == 0
}

/// An unrooted phylogenetic tree with edge lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    labels: Vec<String>,
    /// Interior splits sorted by mask.
    splits: Vec<(Split, f64)>,
    pendants: Vec<f64>,
}

impl Tree {
    /// Builds a tree from interior splits and pendant lengths, validating
    /// compatibility and dropping zero-length splits.
    pub fn new(
        labels: Vec<String>,
        splits: impl IntoIterator<Item = (Split, f64)>,
        mut pendants: Vec<f64>,
    ) -> Result<Tree, TreeError> {
        let n = labels.len();
        if n > MAX_LEAVES {
            return Err(TreeError::TooManyLeaves(n));
        }
        if pendants.len() != n {
            return Err(TreeError::Invalid(format!(
                "{} pendant lengths for {n} leaves",
                pendants.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l) {
                return Err(TreeError::Invalid(format!("duplicate leaf label {l}")));
            }
        }
        if let Some(p) = pendants.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(TreeError::Invalid(format!("pendant length {p} is not >= 0")));
        }
        if n == 2 {
            // both pendants are the same edge; keep it on the second leaf
            pendants = vec![0.0, pendants[0] + pendants[1]];
        }
        let mut merged: BTreeMap<Split, f64> = BTreeMap::new();
        for (s, len) in splits {
            if s.leaves() != n {
                return Err(TreeError::UniverseMismatch {
                    left: n,
                    right: s.leaves(),
                });
            }
            if !s.is_interior() {
                return Err(TreeError::Invalid(format!("split {:#b} is not interior", s.mask)));
            }
            if !(len.is_finite() && len >= 0.0) {
                return Err(TreeError::Invalid(format!("split length {len} is not >= 0")));
            }
            *merged.entry(s).or_insert(0.0) += len;
        }
        let splits: Vec<(Split, f64)> = merged.into_iter().filter(|(_, l)| *l > ZERO_LENGTH_TOL).collect();
        for (i, (a, _)) in splits.iter().enumerate() {
            for (b, _) in &splits[i + 1..] {
                if !compatible_masks(a.mask, b.mask) {
                    return Err(TreeError::Invalid(format!(
                        "incompatible splits {:#b} and {:#b}",
                        a.mask, b.mask
                    )));
                }
            }
        }
        if n >= 3 && splits.len() > n - 3 {
            return Err(TreeError::Invalid(format!(
                "{} interior splits exceed {} for {n} leaves",
                splits.len(),
                n - 3
            )));
        }
        Ok(Tree {
            labels,
            splits,
            pendants,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn leaf_count(&self) -> usize {
        self.labels.len()
    }

    pub fn splits(&self) -> &[(Split, f64)] {
        &self.splits
    }

    pub fn pendants(&self) -> &[f64] {
        &self.pendants
    }

    pub fn is_binary(&self) -> bool {
        self.leaf_count() >= 3 && self.splits.len() == self.leaf_count() - 3
    }

    pub fn split_length(&self, s: Split) -> Option<f64> {
        self.splits
            .binary_search_by(|(t, _)| t.cmp(&s))
            .ok()
            .map(|i| self.splits[i].1)
    }

    /// Same tree expressed over a reordered universe containing exactly the
    /// same labels.
    pub fn relabel_to(&self, universe: &[String]) -> Result<Tree, TreeError> {
        let mismatch = || TreeError::UniverseMismatch {
            left: self.leaf_count(),
            right: universe.len(),
        };
        if universe.len() != self.leaf_count() {
            return Err(mismatch());
        }
        let pos: HashMap<&str, usize> = universe.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let mut perm = Vec::with_capacity(self.leaf_count());
        for l in &self.labels {
            perm.push(*pos.get(l.as_str()).ok_or_else(mismatch)?);
        }
        self.permuted(&perm, universe.to_vec())
    }

    /// The same shape with leaf `i` renamed to the `perm[i]`-th label.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Tree, TreeError> {
        let n = self.leaf_count();
        let mut seen = vec![false; n];
        if perm.len() != n || !perm.iter().all(|&p| p < n && !std::mem::replace(&mut seen[p], true)) {
            return Err(TreeError::Invalid(format!("not a permutation of {n} leaves")));
        }
        self.permuted(perm, self.labels.clone())
    }

    /// Moves leaf `i` to position `perm[i]`, keeping labels attached to leaves.
    pub(crate) fn permuted(&self, perm: &[usize], labels: Vec<String>) -> Result<Tree, TreeError> {
        let n = self.leaf_count();
        let map_mask = |m: u64| {
            (0..n)
                .filter(|i| m >> i & 1 == 1)
                .fold(0u64, |acc, i| acc | 1 << perm[i])
        };
        let splits = self
            .splits
            .iter()
            .map(|(s, l)| (Split::new(map_mask(s.mask), n).expect("nonempty split"), *l));
        let mut pendants = vec![0.0; n];
        for (i, p) in self.pendants.iter().enumerate() {
            pendants[perm[i]] = *p;
        }
        Tree::new(labels, splits, pendants)
    }

    /// Total order key used to make distances bitwise symmetric.
    pub(crate) fn order_key(&self) -> Vec<f64> {
        let mut key: Vec<f64> = self.pendants.clone();
        for (s, l) in &self.splits {
            key.push(s.mask as f64);
            key.push(*l);
        }
        key
    }

    /// Newick serialization rooted at the node adjacent to leaf 0.
    pub fn to_newick(&self) -> String {
        let n = self.leaf_count();
        let mut out = String::new();
        match n {
            0 => out.push(';'),
            1 => {
                write_leaf(&mut out, &self.labels[0], self.pendants[0]);
                out.push(';');
            }
            _ => {
                let mut clades: Vec<(u64, f64)> = self.splits.iter().map(|(s, l)| (s.mask, *l)).collect();
                for i in 1..n {
                    clades.push((1 << i, self.pendants[i]));
                }
                out.push('(');
                if n == 2 {
                    write_leaf(&mut out, &self.labels[1], self.pendants[1]);
                } else {
                    self.write_children(&mut out, full_mask(n) & !1, &clades);
                }
                out.push(',');
                write_leaf(&mut out, &self.labels[0], self.pendants[0]);
                out.push_str(");");
            }
        }
        out
    }

    fn write_children(&self, out: &mut String, parent: u64, clades: &[(u64, f64)]) {
        // maximal clades strictly inside `parent`
        let mut children: Vec<(u64, f64)> = clades
            .iter()
            .copied()
            .filter(|(m, _)| *m != parent && m & !parent == 0)
            .filter(|(m, _)| {
                !clades
                    .iter()
                    .any(|(o, _)| *o != parent && o != m && o & !parent == 0 && m & !o == 0)
            })
            .collect();
        children.sort_by_key(|(m, _)| m.trailing_zeros());
        for (k, (m, len)) in children.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            if m.count_ones() == 1 {
                write_leaf(out, &self.labels[m.trailing_zeros() as usize], *len);
            } else {
                out.push('(');
                self.write_children(out, *m, clades);
                let _ = write!(out, "):{len}");
            }
        }
    }
}

fn write_leaf(out: &mut String, label: &str, len: f64) {
    let plain = !label.is_empty()
        && label
            .chars()
            .all(|c| !c.is_whitespace() && !"()[],:;'".contains(c));
    if plain {
        out.push_str(label);
    } else {
        out.push('\'');
        out.push_str(&label.replace('\'', "''"));
        out.push('\'');
    }
    let _ = write!(out, ":{len}");
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
    labels: Vec<(String, usize)>,
}

#[derive(Debug)]
struct Node {
    mask: u64,
    length: Option<f64>,
}

impl<'a> Parser<'a> {
    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            kind,
            offset: self.pos,
        }
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn label(&mut self) -> Result<Option<String>, ParseError> {
        self.skip_ws();
        if self.peek() == Some('\'') {
            self.pos += 1;
            let mut s = String::new();
            loop {
                match self.peek() {
                    None => return Err(self.err(ParseErrorKind::UnbalancedParentheses)),
                    Some('\'') => {
                        self.pos += 1;
                        if self.peek() == Some('\'') {
                            s.push('\'');
                            self.pos += 1;
                        } else {
                            return Ok(Some(s));
                        }
                    }
                    Some(c) => {
                        s.push(c);
                        self.pos += c.len_utf8();
                    }
                }
            }
        }
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_whitespace() || "()[],:;'".contains(c) {
                break;
            }
            self.pos += c.len_utf8();
        }
        Ok((self.pos > start).then(|| self.text[start..self.pos].to_string()))
    }

    fn length(&mut self) -> Result<Option<f64>, ParseError> {
        self.skip_ws();
        if self.peek() != Some(':') {
            return Ok(None);
        }
        self.pos += 1;
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || "+-.eE".contains(c) {
                self.pos += 1;
            } else {
                break;
            }
        }
        let raw = &self.text[start..self.pos];
        if raw.is_empty() {
            return Err(ParseError {
                kind: ParseErrorKind::MissingBranchLength,
                offset: start,
            });
        }
        let v: f64 = raw.parse().map_err(|_| ParseError {
            kind: ParseErrorKind::InvalidNumber(raw.to_string()),
            offset: start,
        })?;
        if !v.is_finite() {
            return Err(ParseError {
                kind: ParseErrorKind::InvalidNumber(raw.to_string()),
                offset: start,
            });
        }
        if v < 0.0 {
            return Err(ParseError {
                kind: ParseErrorKind::NegativeBranchLength,
                offset: start,
            });
        }
        Ok(Some(v))
    }

    /// Parses one subtree, pushing the edges below it into `edges`.
    fn subtree(&mut self, edges: &mut Vec<Node>, depth: usize) -> Result<Node, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some('(') => {
                let open = self.pos;
                self.pos += 1;
                let mut mask = 0u64;
                loop {
                    let child = self.subtree(edges, depth + 1)?;
                    mask |= child.mask;
                    edges.push(child);
                    self.skip_ws();
                    match self.peek() {
                        Some(',') => self.pos += 1,
                        Some(')') => {
                            self.pos += 1;
                            break;
                        }
                        None | Some(';') => {
                            return Err(ParseError {
                                kind: ParseErrorKind::UnbalancedParentheses,
                                offset: if self.peek().is_none() { self.pos } else { open },
                            })
                        }
                        Some(c) => return Err(self.err(ParseErrorKind::UnexpectedChar(c))),
                    }
                }
                let _internal_label = self.label()?;
                let length = self.length()?;
                Ok(Node {
                    mask,
                    length,
                })
            }
            Some(')') => Err(self.err(ParseErrorKind::UnbalancedParentheses)),
            None => Err(self.err(if depth > 0 {
                ParseErrorKind::UnbalancedParentheses
            } else {
                ParseErrorKind::Empty
            })),
            _ => {
                let at = self.pos;
                let label = match self.label()? {
                    Some(l) => l,
                    None => {
                        let c = self.peek().unwrap_or(';');
                        return Err(self.err(ParseErrorKind::UnexpectedChar(c)));
                    }
                };
                if self.labels.iter().any(|(l, _)| *l == label) {
                    return Err(ParseError {
                        kind: ParseErrorKind::DuplicateLabel(label),
                        offset: at,
                    });
                }
                let idx = self.labels.len();
                if idx >= MAX_LEAVES {
                    return Err(ParseError {
                        kind: ParseErrorKind::TooManyLeaves(idx + 1),
                        offset: at,
                    });
                }
                self.labels.push((label, at));
                let length = self.length()?;
                Ok(Node {
                    mask: 1 << idx,
                    length,
                })
            }
        }
    }
}

/// Parses a single Newick tree terminated by `;`.
///
/// Every edge except the root's must carry a length. A degree-two root is
/// suppressed by merging its two edges. With a `universe`, leaves are indexed
/// by their position in it and the tree must cover it exactly; otherwise the
/// universe is the sorted list of leaf labels.
pub fn parse_newick(text: &str, universe: Option<&[String]>) -> Result<Tree, ParseError> {
    let mut p = Parser {
        text,
        pos: 0,
        labels: Vec::new(),
    };
    let mut edges = Vec::new();
    let root = p.subtree(&mut edges, 0)?;
    p.skip_ws();
    match p.peek() {
        Some(';') => p.pos += 1,
        Some(')') => return Err(p.err(ParseErrorKind::UnbalancedParentheses)),
        Some(c) => return Err(p.err(ParseErrorKind::UnexpectedChar(c))),
        None => return Err(p.err(ParseErrorKind::MissingSemicolon)),
    }
    p.skip_ws();
    if p.pos < text.len() {
        return Err(p.err(ParseErrorKind::TrailingInput));
    }
    let end = p.pos;
    let n = p.labels.len();

    // position of each parsed leaf in the final universe
    let (labels, perm): (Vec<String>, Vec<usize>) = match universe {
        Some(u) => {
            let pos: HashMap<&str, usize> = u.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
            let mut perm = Vec::with_capacity(n);
            for (l, at) in &p.labels {
                match pos.get(l.as_str()) {
                    Some(&i) => perm.push(i),
                    None => {
                        return Err(ParseError {
                            kind: ParseErrorKind::UnknownLabel(l.clone()),
                            offset: *at,
                        })
                    }
                }
            }
            if n != u.len() {
                let present: std::collections::HashSet<&str> = p.labels.iter().map(|(l, _)| l.as_str()).collect();
                let missing = u.iter().filter(|l| !present.contains(l.as_str())).cloned().collect();
                return Err(ParseError {
                    kind: ParseErrorKind::MissingLeaves(missing),
                    offset: end,
                });
            }
            (u.to_vec(), perm)
        }
        None => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| p.labels[a].0.cmp(&p.labels[b].0));
            let mut perm = vec![0; n];
            for (new, &old) in order.iter().enumerate() {
                perm[old] = new;
            }
            (order.iter().map(|&i| p.labels[i].0.clone()).collect(), perm)
        }
    };
    let remap = |m: u64| {
        (0..n)
            .filter(|i| m >> i & 1 == 1)
            .fold(0u64, |acc, i| acc | 1 << perm[i])
    };

    let mut pendants = vec![0.0; n];
    let mut interior: BTreeMap<Split, f64> = BTreeMap::new();
    for e in &edges {
        let len = e.length.ok_or(ParseError {
            kind: ParseErrorKind::MissingBranchLength,
            offset: end,
        })?;
        if n <= 1 {
            continue;
        }
        let Some(split) = Split::new(remap(e.mask), n) else {
            continue;
        };
        if split.is_pendant() {
            let side = if split.mask.count_ones() == 1 {
                split.mask
            } else {
                full_mask(n) & !split.mask
            };
            pendants[side.trailing_zeros() as usize] += len;
        } else {
            *interior.entry(split).or_insert(0.0) += len;
        }
    }
    if n == 1 {
        pendants[0] = root.length.unwrap_or(0.0);
    }
    Tree::new(labels, interior, pendants).map_err(|e| ParseError {
        kind: match e {
            TreeError::TooManyLeaves(k) => ParseErrorKind::TooManyLeaves(k),
            other => ParseErrorKind::InvalidTree(other.to_string()),
        },
        offset: end,
    })
}

/// One step of a geodesic support: the splits in `a` shrink to zero while the
/// splits in `b` grow from zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportPair {
    pub a: Vec<Split>,
    pub b: Vec<Split>,
    pub a_norm: f64,
    pub b_norm: f64,
}

impl SupportPair {
    pub fn ratio(&self) -> f64 {
        self.a_norm / self.b_norm
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicResult {
    pub distance: f64,
    /// Euclidean part: pendant edges, shared splits, and splits compatible
    /// with the whole other tree.
    pub common_distance: f64,
    /// Support pairs ordered by nondecreasing `a_norm / b_norm`.
    pub support: Vec<SupportPair>,
}

struct Decomposition {
    common_sq: f64,
    /// Incompatible splits of each tree with their lengths.
    a: Vec<(Split, f64)>,
    b: Vec<(Split, f64)>,
}

fn aligned(t1: &Tree, t2: &Tree) -> Result<Tree, TreeError> {
    if t1.labels == t2.labels {
        return Ok(t2.clone());
    }
    t2.relabel_to(&t1.labels).map_err(|_| TreeError::UniverseMismatch {
        left: t1.leaf_count(),
        right: t2.leaf_count(),
    })
}

fn decompose(t1: &Tree, t2: &Tree) -> Decomposition {
    let mut common_sq: f64 = t1
        .pendants
        .iter()
        .zip(&t2.pendants)
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    let compatible_with_all = |s: Split, other: &Tree| other.splits.iter().all(|(o, _)| compatible_masks(s.mask, o.mask));
    let mut a = Vec::new();
    let mut b = Vec::new();
    for &(s, l) in &t1.splits {
        match t2.split_length(s) {
            Some(l2) => common_sq += (l - l2) * (l - l2),
            None if compatible_with_all(s, t2) => common_sq += l * l,
            None => a.push((s, l)),
        }
    }
    for &(s, l) in &t2.splits {
        if t1.split_length(s).is_some() {
            continue;
        }
        if compatible_with_all(s, t1) {
            common_sq += l * l;
        } else {
            b.push((s, l));
        }
    }
    Decomposition { common_sq, a, b }
}

fn norm_of(items: &[(Split, f64)], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| items[i].1 * items[i].1).sum::<f64>().sqrt()
}

/// BHV geodesic between two trees on the same leaf set.
pub fn bhv_distance(t1: &Tree, t2: &Tree) -> Result<GeodesicResult, TreeError> {
    let t2 = aligned(t1, t2)?;
    let dec = decompose(t1, &t2);
    let (a, b) = (&dec.a, &dec.b);

    let mut support: Vec<SupportPair> = Vec::new();
    for (ca, cb) in components(a, b) {
        for (ia, ib) in gtp_component(a, b, ca, cb) {
            support.push(SupportPair {
                a_norm: norm_of(a, &ia),
                b_norm: norm_of(b, &ib),
                a: ia.iter().map(|&i| a[i].0).collect(),
                b: ib.iter().map(|&i| b[i].0).collect(),
            });
        }
    }
    support.sort_by(|x, y| x.ratio().total_cmp(&y.ratio()));
    let path_sq: f64 = support.iter().map(|p| (p.a_norm + p.b_norm).powi(2)).sum();
    Ok(GeodesicResult {
        distance: (dec.common_sq + path_sq).sqrt(),
        common_distance: dec.common_sq.sqrt(),
        support,
    })
}

/// Connected components of the bipartite incompatibility graph.
fn components(a: &[(Split, f64)], b: &[(Split, f64)]) -> Vec<(Vec<usize>, Vec<usize>)> {
    let na = a.len();
    let mut parent: Vec<usize> = (0..na + b.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut c = x;
        while p[c] != r {
            let next = p[c];
            p[c] = r;
            c = next;
        }
        r
    }
    for (i, (sa, _)) in a.iter().enumerate() {
        for (j, (sb, _)) in b.iter().enumerate() {
            if !compatible_masks(sa.mask, sb.mask) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, na + j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for i in 0..na {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().0.push(i);
    }
    for j in 0..b.len() {
        let r = find(&mut parent, na + j);
        groups.entry(r).or_default().1.push(j);
    }
    groups.into_values().collect()
}

/// Successive extension of the cone path for one component.
fn gtp_component(
    a: &[(Split, f64)],
    b: &[(Split, f64)],
    ca: Vec<usize>,
    cb: Vec<usize>,
) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut seq = vec![(ca, cb)];
    let mut i = 0;
    while i < seq.len() {
        match extension(a, b, &seq[i].0, &seq[i].1) {
            Some((first, second)) => {
                seq[i] = second;
                seq.insert(i, first);
            }
            None => i += 1,
        }
    }
    seq
}

/// Looks for a vertex cover of weight below one in the incompatibility graph
/// of a support pair, with vertex weights l^2 / |A|^2 and l^2 / |B|^2. If one
/// exists, returns the two pairs replacing the original one.
#[allow(clippy::type_complexity)]
fn extension(
    a: &[(Split, f64)],
    b: &[(Split, f64)],
    ia: &[usize],
    ib: &[usize],
) -> Option<((Vec<usize>, Vec<usize>), (Vec<usize>, Vec<usize>))> {
    if ia.len() < 2 && ib.len() < 2 {
        return None;
    }
    let na2: f64 = ia.iter().map(|&i| a[i].1 * a[i].1).sum();
    let nb2: f64 = ib.iter().map(|&j| b[j].1 * b[j].1).sum();
    let wa: Vec<f64> = ia.iter().map(|&i| a[i].1 * a[i].1 / na2).collect();
    let wb: Vec<f64> = ib.iter().map(|&j| b[j].1 * b[j].1 / nb2).collect();
    let edges: Vec<Vec<bool>> = ia
        .iter()
        .map(|&i| ib.iter().map(|&j| !compatible_masks(a[i].0.mask, b[j].0.mask)).collect())
        .collect();

    let (mut in_a, mut in_b) = min_weight_cover(&wa, &wb, &edges);
    // drop redundant vertices so no block ends up with an isolated split
    for x in 0..ia.len() {
        if in_a[x] && (0..ib.len()).all(|y| !edges[x][y] || in_b[y]) {
            in_a[x] = false;
        }
    }
    for y in 0..ib.len() {
        if in_b[y] && (0..ia.len()).all(|x| !edges[x][y] || in_a[x]) {
            in_b[y] = false;
        }
    }
    let weight: f64 = (0..ia.len()).filter(|&x| in_a[x]).map(|x| wa[x]).sum::<f64>()
        + (0..ib.len()).filter(|&y| in_b[y]).map(|y| wb[y]).sum::<f64>();
    if weight >= 1.0 - 1e-12 {
        return None;
    }
    let c1: Vec<usize> = (0..ia.len()).filter(|&x| in_a[x]).map(|x| ia[x]).collect();
    let c2: Vec<usize> = (0..ia.len()).filter(|&x| !in_a[x]).map(|x| ia[x]).collect();
    let d1: Vec<usize> = (0..ib.len()).filter(|&y| !in_b[y]).map(|y| ib[y]).collect();
    let d2: Vec<usize> = (0..ib.len()).filter(|&y| in_b[y]).map(|y| ib[y]).collect();
    if c1.is_empty() || c2.is_empty() || d1.is_empty() || d2.is_empty() {
        return None;
    }
    Some(((c1, d1), (c2, d2)))
}

/// Minimum weight vertex cover of a bipartite graph via max-flow / min-cut
/// (Edmonds-Karp on source -> A -> B -> sink).
fn min_weight_cover(wa: &[f64], wb: &[f64], edges: &[Vec<bool>]) -> (Vec<bool>, Vec<bool>) {
    let (na, nb) = (wa.len(), wb.len());
    let n = na + nb + 2;
    let (src, sink) = (na + nb, na + nb + 1);
    let mut cap = vec![vec![0.0f64; n]; n];
    for x in 0..na {
        cap[src][x] = wa[x];
        for y in 0..nb {
            if edges[x][y] {
                cap[x][na + y] = f64::INFINITY;
            }
        }
    }
    for y in 0..nb {
        cap[na + y][sink] = wb[y];
    }
    const EPS: f64 = 1e-15;
    loop {
        let mut prev = vec![usize::MAX; n];
        prev[src] = src;
        let mut queue = std::collections::VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if prev[v] == usize::MAX && cap[u][v] > EPS {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if prev[sink] == usize::MAX {
            let reach: Vec<bool> = prev.iter().map(|&p| p != usize::MAX).collect();
            let in_a = (0..na).map(|x| !reach[x]).collect();
            let in_b = (0..nb).map(|y| reach[na + y]).collect();
            return (in_a, in_b);
        }
        let mut bottleneck = f64::INFINITY;
        let mut v = sink;
        while v != src {
            let u = prev[v];
            bottleneck = bottleneck.min(cap[u][v]);
            v = u;
        }
        let mut v = sink;
        while v != src {
            let u = prev[v];
            cap[u][v] -= bottleneck;
            cap[v][u] += bottleneck;
            v = u;
        }
    }
}

/// Exact geodesic length by enumerating every support sequence that is
/// feasible (each intermediate split set compatible) and ratio-ordered.
/// Only for small trees; used to check [`bhv_distance`].
pub fn bhv_distance_exhaustive(t1: &Tree, t2: &Tree) -> Result<f64, TreeError> {
    if t1.leaf_count() > EXHAUSTIVE_MAX_LEAVES {
        return Err(TreeError::TooLargeForExhaustive(t1.leaf_count()));
    }
    let t2 = aligned(t1, &t2.clone())?;
    let dec = decompose(t1, &t2);
    let (a, b) = (&dec.a, &dec.b);
    if a.is_empty() {
        return Ok(dec.common_sq.sqrt());
    }
    let parts_a = ordered_partitions(a.len());
    let parts_b = ordered_partitions(b.len());
    let mut best = f64::INFINITY;
    for pa in &parts_a {
        for pb in parts_b.iter().filter(|pb| pb.len() == pa.len()) {
            let k = pa.len();
            // after step i the splits present are b-blocks 0..=i and a-blocks i+1..k
            let feasible = (0..k).all(|i| {
                pb[..=i].iter().flatten().all(|&y| {
                    pa[i + 1..]
                        .iter()
                        .flatten()
                        .all(|&x| compatible_masks(a[x].0.mask, b[y].0.mask))
                })
            });
            if !feasible {
                continue;
            }
            let norms: Vec<(f64, f64)> = (0..k).map(|i| (norm_of(a, &pa[i]), norm_of(b, &pb[i]))).collect();
            if norms.windows(2).any(|w| w[0].0 / w[0].1 > w[1].0 / w[1].1 * (1.0 + 1e-12)) {
                continue;
            }
            let len: f64 = norms.iter().map(|(x, y)| (x + y) * (x + y)).sum();
            best = best.min(len);
        }
    }
    Ok((dec.common_sq + best).sqrt())
}

/// All ordered set partitions of `0..n` into nonempty blocks.
fn ordered_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    // assign each element a block label, keep surjective labelings
    let mut out = Vec::new();
    for k in 1..=n {
        let mut labels = vec![0usize; n];
        loop {
            let mut blocks = vec![Vec::new(); k];
            for (e, &l) in labels.iter().enumerate() {
                blocks[l].push(e);
            }
            if blocks.iter().all(|b| !b.is_empty()) {
                out.push(blocks);
            }
            let mut pos = 0;
            loop {
                if pos == n {
                    break;
                }
                labels[pos] += 1;
                if labels[pos] < k {
                    break;
                }
                labels[pos] = 0;
                pos += 1;
            }
            if pos == n {
                break;
            }
        }
    }
    out
}

/// Random binary tree built by joining random clades below leaf 0, with
/// lengths drawn uniformly from [0.05, 1).
pub fn random_binary_tree<R: Rng + ?Sized>(labels: &[String], rng: &mut R) -> Tree {
    let n = labels.len();
    assert!((1..=MAX_LEAVES).contains(&n), "leaf count out of range");
    let mut clades: Vec<u64> = (1..n).map(|i| 1u64 << i).collect();
    let mut splits = Vec::new();
    while clades.len() > 1 {
        clades.shuffle(rng);
        let x = clades.pop().expect("two clades");
        let y = clades.pop().expect("two clades");
        let joined = x | y;
        if clades.is_empty() {
            break;
        }
        splits.push((
            Split::new(joined, n).expect("proper clade"),
            rng.random_range(0.05..1.0),
        ));
        clades.push(joined);
    }
    let pendants = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    Tree::new(labels.to_vec(), splits, pendants).expect("coalescent clades are compatible")
}
