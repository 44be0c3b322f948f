//! Planar p-ary trees: the index set of the perturbative series.
//!
//! A tree is either the bare root `o` or a new root grafted onto an ordered
//! list of exactly `p` subtrees. The arity is not stored in the leaf, so it
//! is supplied by whoever builds or parses trees.
//!
//! Trees serialize to a balanced-parenthesis key: `o` for the leaf and
//! `(` child keys `)` for an internal vertex, e.g. `((oo)o)`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("arity must be at least 2, got {0}")]
    InvalidArity(usize),
    #[error("grafting needs exactly {expected} children, got {found}")]
    Arity { expected: usize, found: usize },
    #[error("the leaf tree has no decomposition")]
    LeafDecomposition,
    #[error("malformed tree key at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("tree count for p={p}, N={n} overflows u128")]
    Overflow { p: usize, n: usize },
}

/// Internal vertex data; reached through [`PTree::decompose`].
#[derive(Debug)]
pub struct Node {
    children: Box<[PTree]>,
    internal: usize,
    leaves: usize,
    key: String,
}

/// Immutable planar p-tree with structural equality.
#[derive(Clone, Debug)]
pub enum PTree {
    Leaf,
    Node(Arc<Node>),
}

impl PTree {
    pub fn leaf() -> Self {
        PTree::Leaf
    }

    /// The grafting operator `B+`: joins `children` under a new root.
    pub fn graft(arity: usize, children: Vec<PTree>) -> Result<Self, TreeError> {
        if arity < 2 {
            return Err(TreeError::InvalidArity(arity));
        }
        if children.len() != arity {
            return Err(TreeError::Arity {
                expected: arity,
                found: children.len(),
            });
        }
        if let Some(found) = children
            .iter()
            .find_map(|c| c.arity().filter(|&a| a != arity))
        {
            return Err(TreeError::Arity {
                expected: arity,
                found,
            });
        }
        let internal = 1 + children.iter().map(PTree::internal_count).sum::<usize>();
        let leaves = children.iter().map(PTree::leaf_count).sum();
        let mut key =
            String::with_capacity(2 + children.iter().map(|c| c.key().len()).sum::<usize>());
        key.push('(');
        for c in &children {
            key.push_str(c.key());
        }
        key.push(')');
        Ok(PTree::Node(Arc::new(Node {
            children: children.into_boxed_slice(),
            internal,
            leaves,
            key,
        })))
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, PTree::Leaf)
    }

    /// Number of internal vertices, `|b|`.
    pub fn internal_count(&self) -> usize {
        match self {
            PTree::Leaf => 0,
            PTree::Node(n) => n.internal,
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            PTree::Leaf => 1,
            PTree::Node(n) => n.leaves,
        }
    }

    /// Arity of the root vertex; `None` for the leaf.
    pub fn arity(&self) -> Option<usize> {
        match self {
            PTree::Leaf => None,
            PTree::Node(n) => Some(n.children.len()),
        }
    }

    /// The unique ordered children with `graft(children) == self`.
    pub fn decompose(&self) -> Result<&[PTree], TreeError> {
        match self {
            PTree::Leaf => Err(TreeError::LeafDecomposition),
            PTree::Node(n) => Ok(&n.children),
        }
    }

    pub fn key(&self) -> &str {
        match self {
            PTree::Leaf => "o",
            PTree::Node(n) => &n.key,
        }
    }

    pub fn canonical_key(&self) -> String {
        self.key().to_owned()
    }

    /// Parses a key produced by [`PTree::canonical_key`], checking that every
    /// internal vertex has `arity` children.
    pub fn parse(key: &str, arity: usize) -> Result<Self, TreeError> {
        if arity < 2 {
            return Err(TreeError::InvalidArity(arity));
        }
        let bytes = key.as_bytes();
        let mut pos = 0;
        let tree = parse_at(bytes, &mut pos, arity)?;
        if pos != bytes.len() {
            return Err(TreeError::Parse {
                pos,
                msg: "trailing input".into(),
            });
        }
        Ok(tree)
    }

    /// Representative of the commutativity class: children sorted by key at
    /// every vertex.
    pub fn normalized(&self) -> PTree {
        match self {
            PTree::Leaf => PTree::Leaf,
            PTree::Node(n) => {
                let mut children: Vec<PTree> = n.children.iter().map(PTree::normalized).collect();
                children.sort();
                PTree::graft(children.len(), children).expect("arity preserved")
            }
        }
    }

    /// Number of distinct planar trees sharing this tree's commutativity
    /// class: the product over vertices of `p! / prod(mult!)` where the
    /// multiplicities count equal child classes.
    pub fn planar_multiplicity(&self) -> u128 {
        match self {
            PTree::Leaf => 1,
            PTree::Node(n) => {
                let classes: Vec<PTree> = n.children.iter().map(PTree::normalized).collect();
                let mut groups: BTreeMap<&str, u128> = BTreeMap::new();
                for c in &classes {
                    *groups.entry(c.key()).or_default() += 1;
                }
                let mut count = factorial(classes.len() as u128);
                for &g in groups.values() {
                    count /= factorial(g);
                }
                n.children
                    .iter()
                    .map(PTree::planar_multiplicity)
                    .fold(count, |acc, m| acc * m)
            }
        }
    }

    /// All planar trees reachable from this one by permuting children at any
    /// vertex, including itself, sorted by key.
    pub fn planar_variants(&self) -> Vec<PTree> {
        match self {
            PTree::Leaf => vec![PTree::Leaf],
            PTree::Node(n) => {
                let p = n.children.len();
                let mut out = Vec::new();
                for perm in permutations(p) {
                    let mut partial: Vec<Vec<PTree>> = vec![Vec::new()];
                    for &i in &perm {
                        let variants = n.children[i].planar_variants();
                        partial = partial
                            .into_iter()
                            .flat_map(|prefix| {
                                variants.iter().map(move |v| {
                                    let mut next = prefix.clone();
                                    next.push(v.clone());
                                    next
                                })
                            })
                            .collect();
                    }
                    out.extend(partial.into_iter().map(|c| PTree::graft(p, c).unwrap()));
                }
                out.sort();
                out.dedup();
                out
            }
        }
    }
}

fn factorial(n: u128) -> u128 {
    (1..=n).product()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for slot in 0..=rest.len() {
            let mut perm = rest.clone();
            perm.insert(slot, n - 1);
            out.push(perm);
        }
    }
    out
}

fn parse_at(bytes: &[u8], pos: &mut usize, arity: usize) -> Result<PTree, TreeError> {
    match bytes.get(*pos) {
        Some(b'o') => {
            *pos += 1;
            Ok(PTree::Leaf)
        }
        Some(b'(') => {
            let open = *pos;
            *pos += 1;
            let mut children = Vec::with_capacity(arity);
            while bytes.get(*pos) != Some(&b')') {
                if *pos >= bytes.len() {
                    return Err(TreeError::Parse {
                        pos: *pos,
                        msg: "unclosed '('".into(),
                    });
                }
                children.push(parse_at(bytes, pos, arity)?);
            }
            *pos += 1;
            if children.len() != arity {
                return Err(TreeError::Parse {
                    pos: open,
                    msg: format!("vertex has {} children, expected {arity}", children.len()),
                });
            }
            PTree::graft(arity, children)
        }
        Some(&c) => Err(TreeError::Parse {
            pos: *pos,
            msg: format!("unexpected character {:?}", c as char),
        }),
        None => Err(TreeError::Parse {
            pos: *pos,
            msg: "unexpected end of input".into(),
        }),
    }
}

impl PartialEq for PTree {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for PTree {}

impl Hash for PTree {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

/// Lexicographic order of canonical keys.
impl Ord for PTree {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(other.key())
    }
}

impl PartialOrd for PTree {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

fn check_arity(p: usize) -> Result<(), TreeError> {
    if p < 2 {
        Err(TreeError::InvalidArity(p))
    } else {
        Ok(())
    }
}

/// Calls `f` with every composition of `total` into `parts` non-negative
/// integers, in lexicographic order.
pub(crate) fn for_each_composition(total: usize, parts: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(rest: usize, slots: usize, acc: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if slots == 1 {
            acc.push(rest);
            f(acc);
            acc.pop();
            return;
        }
        for q in 0..=rest {
            acc.push(q);
            rec(rest - q, slots - 1, acc, f);
            acc.pop();
        }
    }
    if parts == 0 {
        return;
    }
    rec(total, parts, &mut Vec::with_capacity(parts), f);
}

/// Every p-tree with `order` internal vertices, each exactly once, sorted by
/// canonical key.
pub fn enumerate(p: usize, order: usize) -> Result<Vec<PTree>, TreeError> {
    Ok(enumerate_up_to(p, order)?.pop().unwrap())
}

/// `enumerate(p, n)` for every `n` in `0..=max_order`.
pub fn enumerate_up_to(p: usize, max_order: usize) -> Result<Vec<Vec<PTree>>, TreeError> {
    check_arity(p)?;
    let mut levels: Vec<Vec<PTree>> = vec![vec![PTree::Leaf]];
    for n in 1..=max_order {
        let mut level = Vec::new();
        for_each_composition(n - 1, p, &mut |orders| {
            let mut partial: Vec<Vec<PTree>> = vec![Vec::with_capacity(p)];
            for &q in orders {
                partial = partial
                    .into_iter()
                    .flat_map(|prefix| {
                        levels[q].iter().map(move |t| {
                            let mut next = prefix.clone();
                            next.push(t.clone());
                            next
                        })
                    })
                    .collect();
            }
            level.extend(partial.into_iter().map(|c| PTree::graft(p, c).unwrap()));
        });
        level.sort();
        levels.push(level);
    }
    Ok(levels)
}

/// Number of p-trees with `order` internal vertices.
///
/// Computed from the grafting decomposition,
/// `count(N+1) = sum over q1+..+qp = N of prod count(qi)`, in checked
/// integer arithmetic.
pub fn count(p: usize, order: usize) -> Result<u128, TreeError> {
    check_arity(p)?;
    let overflow = || TreeError::Overflow { p, n: order };
    let mut counts: Vec<u128> = vec![1];
    for n in 0..order {
        // coefficient of x^n in C(x)^p, with C truncated at degree n
        let mut power = vec![0u128; n + 1];
        power[0] = 1;
        for _ in 0..p {
            let mut next = vec![0u128; n + 1];
            for (i, &a) in power.iter().enumerate() {
                if a == 0 {
                    continue;
                }
                for (j, &c) in counts.iter().enumerate().take(n + 1 - i) {
                    let term = a.checked_mul(c).ok_or_else(overflow)?;
                    next[i + j] = next[i + j].checked_add(term).ok_or_else(overflow)?;
                }
            }
            power = next;
        }
        counts.push(power[n]);
    }
    Ok(counts[order])
}

/// Exponential growth bound `(p^p / (p-1)^(p-1))^N` on the number of p-trees.
pub fn count_bound(p: usize, order: usize) -> f64 {
    let p = p as f64;
    let base = p.powf(p) / (p - 1.0).powf(p - 1.0);
    base.powi(order as i32)
}

/// A commutativity class of planar trees: the sorted representative and how
/// many planar trees it stands for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeClass {
    pub representative: PTree,
    pub multiplicity: u128,
}

/// Commutativity classes at each order `0..=max_order`, sorted by the key of
/// the representative.
pub fn classes_up_to(p: usize, max_order: usize) -> Result<Vec<Vec<TreeClass>>, TreeError> {
    check_arity(p)?;
    let mut levels: Vec<Vec<TreeClass>> = vec![vec![TreeClass {
        representative: PTree::Leaf,
        multiplicity: 1,
    }]];
    for n in 1..=max_order {
        // sorted multisets of p lower classes whose orders sum to n - 1
        let lower: Vec<&TreeClass> = levels.iter().flatten().collect();
        let mut level = Vec::new();
        let mut tuples = Vec::new();
        non_decreasing_tuples(&lower, 0, p, n - 1, &mut Vec::with_capacity(p), &mut tuples);
        for idx in tuples {
            let children: Vec<PTree> = idx
                .iter()
                .map(|&i| lower[i].representative.clone())
                .collect();
            let representative = PTree::graft(p, children)?.normalized();
            let multiplicity = representative.planar_multiplicity();
            level.push(TreeClass {
                representative,
                multiplicity,
            });
        }
        level.sort_by(|a, b| a.representative.cmp(&b.representative));
        levels.push(level);
    }
    Ok(levels)
}

fn non_decreasing_tuples(
    lower: &[&TreeClass],
    start: usize,
    slots: usize,
    order: usize,
    acc: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if slots == 0 {
        if order == 0 {
            out.push(acc.clone());
        }
        return;
    }
    for i in start..lower.len() {
        let q = lower[i].representative.internal_count();
        if q <= order {
            acc.push(i);
            non_decreasing_tuples(lower, i, slots - 1, order - q, acc, out);
            acc.pop();
        }
    }
}
