//! The enumeration machinery shared by both election algorithms: bit
//! sequences, local views and their order, mailboxes, maximal elements,
//! coherence and the digraph a coherent mailbox describes.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::graph::{Port, SymDigraph, VertexLabel};

/// A finite sequence of random bits, ordered alphabetically (a proper
/// prefix comes first).
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bits(pub Vec<bool>);

impl Bits {
    pub fn push(&mut self, bit: bool) {
        self.0.push(bit);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_prefix_of(&self, other: &Bits) -> bool {
        other.0.starts_with(&self.0)
    }

    /// One of the two is a prefix of the other.
    pub fn comparable(&self, other: &Bits) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Bits {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(format!("not a bit: {c:?}")),
            })
            .collect::<Result<_, _>>()
            .map(Bits)
    }
}

impl Serialize for Bits {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Bits {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// What a node knows about the neighbor behind one port: its number, label
/// (`None` before anything was heard), a prefix of its bits, and the label
/// `(p, q)` of the arc from the neighbor to the node.
///
/// The derived order is lexicographic on the fields in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ViewEntry {
    pub number: u32,
    pub label: Option<VertexLabel>,
    pub bits: Bits,
    pub p: Port,
    pub q: Port,
}

pub type LocalView = BTreeSet<ViewEntry>;

/// The initial view of a node of the given degree: nothing known on any port.
pub fn initial_view(degree: usize) -> LocalView {
    (1..=degree as Port).map(|q| ViewEntry { number: 0, label: None, bits: Bits::default(), p: 0, q }).collect()
}

/// `Less` iff `a ≺ b`: the largest element of the symmetric difference lies
/// in `b`. Walking both sets from the top, the first difference decides.
pub fn compare_views(a: &LocalView, b: &LocalView) -> Ordering {
    a.iter().rev().cmp(b.iter().rev())
}

/// Compares `(label, bits, view)` keys: label first, then bits, then views.
pub fn compare_keys(a: (&VertexLabel, &Bits, &LocalView), b: (&VertexLabel, &Bits, &LocalView)) -> Ordering {
    a.0.cmp(b.0).then_with(|| a.1.cmp(b.1)).then_with(|| compare_views(a.2, b.2))
}

/// A record `(number, label, bits, view)` of some node's state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct MailboxEntry {
    pub number: u32,
    pub label: VertexLabel,
    pub bits: Bits,
    pub view: LocalView,
    /// Hash of the entry with every bit sequence removed.
    #[serde(skip)]
    shape_hash: u64,
}

impl MailboxEntry {
    pub fn new(number: u32, label: VertexLabel, bits: Bits, view: LocalView) -> Self {
        let mut h = DefaultHasher::new();
        number.hash(&mut h);
        label.hash(&mut h);
        for e in &view {
            (e.number, &e.label, e.p, e.q).hash(&mut h);
        }
        let shape_hash = h.finish();
        Self { number, label, bits, view, shape_hash }
    }

    pub fn key_cmp(&self, other: &MailboxEntry) -> Ordering {
        compare_keys((&self.label, &self.bits, &self.view), (&other.label, &other.bits, &other.view))
    }

    /// The view entry on in-port `q`.
    pub fn at_port(&self, q: Port) -> Option<&ViewEntry> {
        self.view.iter().find(|e| e.q == q)
    }

    /// Equal once every bit sequence, including those in the view, is
    /// removed.
    pub fn same_shape(&self, other: &MailboxEntry) -> bool {
        self.shape_hash == other.shape_hash
            && self.number == other.number
            && self.label == other.label
            && self.view.len() == other.view.len()
            && self.view.iter().all(|e| {
                other.at_port(e.q).is_some_and(|f| f.number == e.number && f.label == e.label && f.p == e.p)
            })
    }

    /// Same shape, and every pair of corresponding bit sequences is
    /// prefix-related: the two records may describe one node at two times.
    fn extends_or_extended_by(&self, other: &MailboxEntry) -> bool {
        self.same_shape(other)
            && self.bits.comparable(&other.bits)
            && self.view.iter().all(|e| other.at_port(e.q).is_some_and(|f| e.bits.comparable(&f.bits)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum InsertOutcome {
    /// Already known, or a later record of the same node is known.
    Unchanged,
    /// Replaced earlier records of the same shape.
    Refreshed,
    /// A shape that was not present before.
    NewShape,
}

/// A set of records, kept finite by identifying records of the same shape
/// whose bit sequences are prefix-related: only the strongest is kept.
///
/// Equality is exact (bits included); [`Mailbox::same_shape`] compares with
/// bits removed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Mailbox {
    buckets: BTreeMap<(u32, u64), Vec<Arc<MailboxEntry>>>,
    len: usize,
}

impl Mailbox {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &MailboxEntry> {
        self.buckets.values().flatten().map(|e| e.as_ref())
    }

    /// Records with the given number.
    pub fn numbered(&self, n: u32) -> impl Iterator<Item = &MailboxEntry> {
        self.buckets.range((n, 0)..=(n, u64::MAX)).flat_map(|(_, v)| v.iter().map(|e| e.as_ref()))
    }

    pub fn contains_number(&self, n: u32) -> bool {
        self.numbered(n).next().is_some()
    }

    pub fn max_number(&self) -> u32 {
        self.buckets.keys().next_back().map_or(0, |k| k.0)
    }

    /// Whether inserting `entry` would change nothing.
    pub fn dominates(&self, entry: &MailboxEntry) -> bool {
        self.buckets.get(&(entry.number, entry.shape_hash)).is_some_and(|bucket| {
            bucket.iter().any(|e| e.extends_or_extended_by(entry) && e.key_cmp(entry) != Ordering::Less)
        })
    }

    /// Whether merging `other` would change nothing.
    pub fn covers(&self, other: &Mailbox) -> bool {
        other.iter().all(|e| self.dominates(e))
    }

    pub fn insert(&mut self, entry: MailboxEntry) -> InsertOutcome {
        self.insert_shared(Arc::new(entry))
    }

    fn insert_shared(&mut self, entry: Arc<MailboxEntry>) -> InsertOutcome {
        let bucket = self.buckets.entry((entry.number, entry.shape_hash)).or_default();
        let had_shape = bucket.iter().any(|e| e.same_shape(&entry));
        let related: Vec<usize> = (0..bucket.len()).filter(|&i| bucket[i].extends_or_extended_by(&entry)).collect();
        if related.iter().any(|&i| bucket[i].key_cmp(&entry) != Ordering::Less) {
            return InsertOutcome::Unchanged;
        }
        for &i in related.iter().rev() {
            bucket.remove(i);
        }
        let at = bucket.partition_point(|e| e.key_cmp(&entry) == Ordering::Less);
        bucket.insert(at, entry);
        self.len = self.len + 1 - related.len();
        if had_shape {
            InsertOutcome::Refreshed
        } else {
            InsertOutcome::NewShape
        }
    }

    /// Adds every record of `other`; returns the strongest change.
    pub fn merge(&mut self, other: &Mailbox) -> InsertOutcome {
        let mut outcome = InsertOutcome::Unchanged;
        for e in other.buckets.values().flatten() {
            outcome = outcome.max(self.insert_shared(Arc::clone(e)));
        }
        outcome
    }

    /// Equality with bit sequences removed.
    pub fn same_shape(&self, other: &Mailbox) -> bool {
        if !self.buckets.keys().eq(other.buckets.keys()) {
            return false;
        }
        self.buckets.values().zip(other.buckets.values()).all(|(a, b)| {
            a.iter().all(|x| b.iter().any(|y| x.same_shape(y))) && b.iter().all(|y| a.iter().any(|x| x.same_shape(y)))
        })
    }

    /// Whether every shape of `self` occurs in `other`.
    pub fn shapes_subset_of(&self, other: &Mailbox) -> bool {
        self.buckets.iter().all(|(k, a)| other.buckets.get(k).is_some_and(|b| a.iter().all(|x| b.iter().any(|y| x.same_shape(y)))))
    }

    /// Number of distinct shapes.
    pub fn shape_count(&self) -> usize {
        self.buckets
            .values()
            .map(|b| (0..b.len()).filter(|&i| !b[..i].iter().any(|e| e.same_shape(&b[i]))).count())
            .sum()
    }

    /// The strongest record of each number.
    pub fn maximal(&self) -> BTreeMap<u32, &MailboxEntry> {
        let mut best: BTreeMap<u32, &MailboxEntry> = BTreeMap::new();
        for e in self.iter() {
            match best.get(&e.number) {
                Some(b) if b.key_cmp(e) != Ordering::Less => {}
                _ => {
                    best.insert(e.number, e);
                }
            }
        }
        best
    }

    /// The maximal records and whether they are coherent.
    pub fn maximal_coherent(&self) -> (BTreeMap<u32, &MailboxEntry>, bool) {
        let s = self.maximal();
        let coherent = is_coherent(&s);
        (s, coherent)
    }
}

impl Serialize for Mailbox {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

/// Whether the maximal records cross-reference each other consistently:
/// every view entry names a known number with the right label and a bit
/// sequence extending that record's, and the named record lists the first
/// one back on the reversed port pair.
pub fn is_coherent(s: &BTreeMap<u32, &MailboxEntry>) -> bool {
    if s.is_empty() {
        return false;
    }
    s.values().all(|e1| {
        e1.view.iter().all(|x| {
            if x.p == 0 || x.number == 0 {
                return false;
            }
            let Some(label) = &x.label else { return false };
            let Some(e2) = s.get(&x.number) else { return false };
            e2.label == *label
                && e2.bits.is_prefix_of(&x.bits)
                && e2.at_port(x.p).is_some_and(|y| {
                    y.number == e1.number && y.label.as_ref() == Some(&e1.label) && y.p == x.q && e1.bits.is_prefix_of(&y.bits)
                })
        })
    })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("maximal records are not coherent")]
pub struct Incoherent;

/// The digraph described by coherent maximal records: one vertex per number,
/// and for each record `n` and view entry `(n', ℓ', b', p, q)` an arc
/// `n' -> n` labeled `(p, q)`, paired with the arc `n -> n'` labeled
/// `(q, p)`. Vertex `i` of the result carries the `i`-th smallest number.
pub fn build_dm(s: &BTreeMap<u32, &MailboxEntry>) -> Result<SymDigraph, Incoherent> {
    if !is_coherent(s) {
        return Err(Incoherent);
    }
    let index: BTreeMap<u32, usize> = s.keys().copied().zip(0..).collect();
    let ids = s.keys().map(|n| n.to_string()).collect();
    let labels = s.values().map(|e| e.label.clone()).collect();
    let mut d = SymDigraph::new(ids, labels);
    let mut arc_at: BTreeMap<(u32, Port), usize> = BTreeMap::new();
    for (&n, e) in s {
        for x in &e.view {
            let a = d.add_arc(format!("{}:{}->{}", x.number, x.p, n), index[&x.number], index[&n], (x.p, x.q));
            arc_at.insert((n, x.q), a);
        }
    }
    for (&n, e) in s {
        for x in &e.view {
            let a = arc_at[&(n, x.q)];
            d.set_sym(a, arc_at.get(&(x.number, x.p)).copied());
        }
    }
    if !d.is_valid() {
        return Err(Incoherent);
    }
    Ok(d)
}

/// The part of a node's state both election algorithms share.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Enumeration {
    pub label: VertexLabel,
    pub bits: Bits,
    pub number: u32,
    pub view: LocalView,
    pub mailbox: Arc<Mailbox>,
}

/// What a node broadcasts: its number, label, bits and mailbox.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Announcement {
    pub number: u32,
    pub label: VertexLabel,
    pub bits: Bits,
    pub mailbox: Arc<Mailbox>,
}

/// How a received announcement changed the mailbox.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Absorbed {
    /// Any record was added or refreshed.
    pub changed: bool,
    /// A new shape appeared.
    pub new_shape: bool,
}

impl Enumeration {
    pub fn new(label: VertexLabel, degree: usize) -> Self {
        Self { label, bits: Bits::default(), number: 0, view: initial_view(degree), mailbox: Arc::new(Mailbox::default()) }
    }

    pub fn announcement(&self) -> Announcement {
        Announcement { number: self.number, label: self.label.clone(), bits: self.bits.clone(), mailbox: Arc::clone(&self.mailbox) }
    }

    pub fn self_entry(&self) -> MailboxEntry {
        MailboxEntry::new(self.number, self.label.clone(), self.bits.clone(), self.view.clone())
    }

    /// Takes number 1 and records itself with an empty view.
    pub fn wake(&mut self, bit: bool) {
        self.number = 1;
        self.bits.push(bit);
        let mut m = Mailbox::default();
        m.insert(MailboxEntry::new(1, self.label.clone(), self.bits.clone(), LocalView::new()));
        self.mailbox = Arc::new(m);
    }

    /// Whether some record carries this node's number with a stronger key.
    pub fn outranked(&self) -> bool {
        let own = (&self.label, &self.bits, &self.view);
        self.mailbox.numbered(self.number).any(|e| compare_keys(own, (&e.label, &e.bits, &e.view)) == Ordering::Less)
    }

    /// Merges the sender's mailbox, renumbers if needed, records the sender
    /// on port `q1`, and re-records itself.
    pub fn absorb(&mut self, msg: &Announcement, p1: Port, q1: Port) -> Absorbed {
        let mut outcome = InsertOutcome::Unchanged;
        if !Arc::ptr_eq(&self.mailbox, &msg.mailbox) && !self.mailbox.covers(&msg.mailbox) {
            outcome = Arc::make_mut(&mut self.mailbox).merge(&msg.mailbox);
        }
        if self.number == 0 || self.outranked() {
            self.number = 1 + self.mailbox.max_number();
        }
        self.view.retain(|e| e.q != q1);
        self.view.insert(ViewEntry { number: msg.number, label: Some(msg.label.clone()), bits: msg.bits.clone(), p: p1, q: q1 });
        let entry = self.self_entry();
        if !self.mailbox.dominates(&entry) {
            outcome = outcome.max(Arc::make_mut(&mut self.mailbox).insert(entry));
        }
        Absorbed { changed: outcome != InsertOutcome::Unchanged, new_shape: outcome == InsertOutcome::NewShape }
    }
}
