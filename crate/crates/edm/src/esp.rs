//! Edit-sensitive parsing: deterministic bottom-up decomposition of a text
//! into a tree of 2- and 3-symbol blocks.
//!
//! Each level partitions the current label sequence into blocks of two or
//! three. Block boundaries are decided locally — a symbol's block depends
//! only on a bounded neighborhood — so a single edit anywhere in the text
//! disturbs only O(1) blocks per level. That locality is what makes the L1
//! distance between node-label histograms track the move-aware edit
//! distance.
//!
//! Boundary placement:
//! * maximal runs of one label (length >= 2) are blocked greedily:
//!   2 -> [2], 3 -> [3], 4 -> [2,2], length >= 5 takes 3s with a final
//!   3+1 -> 2+2 fix-up;
//! * varying regions are reduced to the alphabet {0,1,2} by iterated
//!   bit-difference relabeling, landmark positions are chosen (local maxima,
//!   then local minima not adjacent to a chosen landmark), and a block
//!   boundary is cut immediately before each landmark. A length-4 tail is
//!   split 2+2 and a length-1 head is absorbed into the following block;
//! * a length-1 region between runs is absorbed into the preceding block
//!   (at the start of the sequence, into the following block).

use crate::hash::{combine, hash, HashConfig, HashError, HashValue};
use crate::text::Text;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EspError {
    #[error("cannot parse an empty text")]
    EmptyText,
    #[error("partition requires at least two labels, got {0}")]
    TooShort(usize),
    #[error("adjacent labels at positions {0} and {1} are equal; reduction requires a varying sequence")]
    AdjacentLabelsEqual(usize, usize),
    #[error(transparent)]
    Hash(#[from] HashError),
}

/// One parse-tree node. Leaves sit at level 0 and cover one symbol; an
/// internal node covers the concatenation of its 2–3 children.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EspNode {
    pub level: u32,
    /// Indices into the tree's node arena; empty for leaves, else 2–3 long.
    pub children: Vec<usize>,
    /// Offset of the node's yield in the text.
    pub start: u64,
    pub yield_length: u64,
    /// Rolling hash of the node's yield.
    pub tentative_label: HashValue,
}

/// Parse tree over a node arena. The root is always the last node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EspTree {
    nodes: Vec<EspNode>,
    root: usize,
    cfg: HashConfig,
    text_len: u64,
}

impl EspTree {
    /// Parse a text bottom-up until a single root remains.
    pub fn build(text: &Text, cfg: HashConfig) -> Result<EspTree, EspError> {
        if text.is_empty() {
            return Err(EspError::EmptyText);
        }
        let mut nodes: Vec<EspNode> = Vec::with_capacity(2 * text.len());
        let mut current: Vec<usize> = Vec::with_capacity(text.len());
        for (i, &s) in text.symbols().iter().enumerate() {
            nodes.push(EspNode {
                level: 0,
                children: Vec::new(),
                start: i as u64,
                yield_length: 1,
                tentative_label: hash(&[s], cfg)?,
            });
            current.push(i);
        }
        let mut level = 0u32;
        while current.len() > 1 {
            level += 1;
            let labels: Vec<u64> =
                current.iter().map(|&i| nodes[i].tentative_label.value).collect();
            let sizes = partition_level(&labels)?;
            let mut next = Vec::with_capacity(sizes.len());
            let mut at = 0usize;
            for sz in sizes {
                debug_assert!((2..=3).contains(&sz));
                let children: Vec<usize> = current[at..at + sz].to_vec();
                let mut label = nodes[children[0]].tentative_label;
                for &c in &children[1..] {
                    label = combine(label, nodes[c].tentative_label, cfg)?;
                }
                let start = nodes[children[0]].start;
                let yield_length: u64 =
                    children.iter().map(|&c| nodes[c].yield_length).sum();
                nodes.push(EspNode { level, children, start, yield_length, tentative_label: label });
                next.push(nodes.len() - 1);
                at += sz;
            }
            current = next;
        }
        let root = current[0];
        let tree = EspTree { nodes, root, cfg, text_len: text.len() as u64 };
        debug_assert!(tree.height() <= tree.height_bound());
        Ok(tree)
    }

    pub fn cfg(&self) -> HashConfig {
        self.cfg
    }

    pub fn root(&self) -> &EspNode {
        &self.nodes[self.root]
    }

    pub fn nodes(&self) -> &[EspNode] {
        &self.nodes
    }

    pub fn text_len(&self) -> u64 {
        self.text_len
    }

    /// Root level; leaves are at height 0.
    pub fn height(&self) -> u32 {
        self.nodes[self.root].level
    }

    /// ceil(log2 N) + 1 — every level shrinks the sequence by at least half.
    pub fn height_bound(&self) -> u32 {
        if self.text_len <= 1 {
            1
        } else {
            (64 - (self.text_len - 1).leading_zeros()) + 1
        }
    }

    /// Distinct tentative labels in the tree, leaves included.
    pub fn tentative_label_set(&self) -> Vec<u64> {
        let mut labels: Vec<u64> =
            self.nodes.iter().map(|n| n.tentative_label.value).collect();
        labels.sort_unstable();
        labels.dedup();
        labels
    }

    /// Histogram of tentative labels over all nodes, leaves included.
    pub fn characteristic_vector(&self) -> CharacteristicVector {
        let mut counts = BTreeMap::new();
        for n in &self.nodes {
            *counts.entry(n.tentative_label.value).or_insert(0) += 1;
        }
        CharacteristicVector { counts }
    }

    /// Histogram keyed by the actual yield substrings instead of their
    /// hashes; the conflict-free reference the oracles compare against.
    pub fn yield_vector(&self, text: &Text) -> BTreeMap<Vec<u64>, u64> {
        let mut counts = BTreeMap::new();
        for n in &self.nodes {
            let s = n.start as usize;
            let y = text.symbols()[s..s + n.yield_length as usize].to_vec();
            *counts.entry(y).or_insert(0) += 1;
        }
        counts
    }

    /// Preorder dump, one node per line: `level yield_length tentative_label`,
    /// indented two spaces per depth. Stable across runs; golden-testable.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let mut stack = vec![(self.root, 0usize)];
        while let Some((i, depth)) = stack.pop() {
            let n = &self.nodes[i];
            let _ = writeln!(
                out,
                "{:indent$}{} {} {}",
                "",
                n.level,
                n.yield_length,
                n.tentative_label.value,
                indent = 2 * depth
            );
            for &c in n.children.iter().rev() {
                stack.push((c, depth + 1));
            }
        }
        out
    }
}

/// Histogram of labels; the protocol compares these with L1 distance.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CharacteristicVector {
    pub counts: BTreeMap<u64, u64>,
}

impl CharacteristicVector {
    pub fn from_counts(counts: BTreeMap<u64, u64>) -> Self {
        CharacteristicVector { counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }
}

/// Sum over the key union of absolute count differences.
pub fn l1_distance(u: &CharacteristicVector, v: &CharacteristicVector) -> u64 {
    let mut d = 0u64;
    for (k, &cu) in &u.counts {
        let cv = v.counts.get(k).copied().unwrap_or(0);
        d += cu.abs_diff(cv);
    }
    for (k, &cv) in &v.counts {
        if !u.counts.contains_key(k) {
            d += cv;
        }
    }
    d
}

/// Reduce a varying label sequence (no two adjacent equal) to the alphabet
/// {0,1,2}, preserving length and the no-adjacent-equal property. The result
/// at each position depends only on a bounded neighborhood.
pub fn alphabet_reduction(labels: &[u64]) -> Result<Vec<u8>, EspError> {
    for i in 1..labels.len() {
        if labels[i] == labels[i - 1] {
            return Err(EspError::AdjacentLabelsEqual(i - 1, i));
        }
    }
    let mut cur: Vec<u64> = labels.to_vec();
    while cur.iter().copied().max().unwrap_or(0) > 5 {
        let mut next = Vec::with_capacity(cur.len());
        for i in 0..cur.len() {
            // The first position has no left neighbor; pair it with a
            // sentinel differing from it so the rule stays purely local.
            let left = if i == 0 { cur[0].wrapping_add(1) } else { cur[i - 1] };
            let diff = cur[i] ^ left;
            let bit = diff.trailing_zeros() as u64;
            next.push(2 * bit + ((cur[i] >> bit) & 1));
        }
        cur = next;
    }
    // Eliminate 5, 4, 3 in turn: replace each occurrence with the least
    // value in {0,1,2} unequal to its current neighbors.
    let mut out: Vec<u8> = cur.iter().map(|&v| v as u8).collect();
    for v in [5u8, 4, 3] {
        for i in 0..out.len() {
            if out[i] == v {
                let l = if i > 0 { Some(out[i - 1]) } else { None };
                let r = if i + 1 < out.len() { Some(out[i + 1]) } else { None };
                out[i] = (0..3u8)
                    .find(|c| Some(*c) != l && Some(*c) != r)
                    .expect("two neighbors cannot cover three values");
            }
        }
    }
    Ok(out)
}

/// Partition a label sequence into blocks of 2–3, returning block sizes in
/// order. Deterministic and local: identical subsequences in identical
/// neighborhoods get identical boundaries. The locality radius is bounded by
/// the reduction depth — roughly 32 positions for 64-bit labels.
pub fn partition_level(labels: &[u64]) -> Result<Vec<usize>, EspError> {
    if labels.len() < 2 {
        return Err(EspError::TooShort(labels.len()));
    }
    // Carve into maximal run regions (>= 2 equal labels) and the varying
    // regions between them.
    enum Region {
        Run(usize),
        Varying(usize, usize), // start, length
    }
    let n = labels.len();
    let mut regions = Vec::new();
    let mut i = 0usize;
    while i < n {
        let mut j = i;
        while j + 1 < n && labels[j + 1] == labels[i] {
            j += 1;
        }
        let run = j - i + 1;
        if run >= 2 {
            regions.push(Region::Run(run));
            i = j + 1;
        } else {
            let mut k = i;
            while k + 1 < n && labels[k + 1] != labels[k] {
                // Stop before a position that begins a run.
                if k + 2 < n && labels[k + 2] == labels[k + 1] {
                    break;
                }
                k += 1;
            }
            regions.push(Region::Varying(i, k - i + 1));
            i = k + 1;
        }
    }
    // Block each region, absorbing length-1 leftovers into a neighbor block.
    let mut sizes: Vec<usize> = Vec::new();
    let mut pending_head = 0usize;
    for region in &regions {
        let block_sizes = match region {
            Region::Run(len) | Region::Varying(_, len) if *len == 1 => {
                if let Some(last) = sizes.last_mut() {
                    *last += 1;
                    if *last == 4 {
                        *last = 2;
                        sizes.push(2);
                    }
                } else {
                    pending_head += 1;
                }
                continue;
            }
            Region::Run(len) => block_run(*len),
            Region::Varying(start, len) => block_varying(&labels[*start..*start + *len])?,
        };
        let mut block_sizes = block_sizes;
        if pending_head > 0 {
            block_sizes[0] += pending_head;
            pending_head = 0;
            if block_sizes[0] == 4 {
                block_sizes[0] = 2;
                block_sizes.insert(1, 2);
            }
        }
        sizes.extend(block_sizes);
    }
    debug_assert_eq!(pending_head, 0, "a lone region cannot occur for len >= 2");
    debug_assert_eq!(sizes.iter().sum::<usize>(), n);
    debug_assert!(sizes.iter().all(|s| (2..=3).contains(s)));
    Ok(sizes)
}

fn block_run(len: usize) -> Vec<usize> {
    match len {
        2 => vec![2],
        3 => vec![3],
        4 => vec![2, 2],
        _ => {
            let mut sizes = vec![3; len / 3];
            match len % 3 {
                0 => {}
                2 => sizes.push(2),
                _ => {
                    // 3+1 remainder becomes 2+2.
                    sizes.pop();
                    sizes.push(2);
                    sizes.push(2);
                }
            }
            sizes
        }
    }
}

fn block_varying(labels: &[u64]) -> Result<Vec<usize>, EspError> {
    let l = labels.len();
    if l <= 3 {
        return Ok(vec![l]);
    }
    let red = alphabet_reduction(labels)?;
    // Landmarks: interior local maxima, then interior local minima not
    // adjacent to an already chosen landmark.
    let mut landmark = vec![false; l];
    for i in 1..l - 1 {
        if red[i - 1] < red[i] && red[i] > red[i + 1] {
            landmark[i] = true;
        }
    }
    for i in 1..l - 1 {
        if red[i - 1] > red[i] && red[i] < red[i + 1] && !landmark[i - 1] && !landmark[i + 1] {
            landmark[i] = true;
        }
    }
    let marks: Vec<usize> = (0..l).filter(|&i| landmark[i]).collect();
    if marks.is_empty() {
        // Only monotone sequences lack landmarks, and over {0,1,2} those
        // have length <= 3, handled above.
        unreachable!("varying region of length {l} without landmarks");
    }
    // Cut immediately before each landmark.
    let mut sizes = Vec::with_capacity(marks.len() + 1);
    let mut prev = 0usize;
    for &m in &marks {
        if m > prev {
            sizes.push(m - prev);
            prev = m;
        }
    }
    sizes.push(l - prev);
    // Consecutive landmarks are 2–3 apart; only the edges need fixing up:
    // a tail of 4 splits, then a head of 1 joins the following block.
    if *sizes.last().expect("nonempty") == 4 {
        sizes.pop();
        sizes.push(2);
        sizes.push(2);
    }
    if sizes[0] == 1 {
        sizes.remove(0);
        sizes[0] += 1;
        if sizes[0] == 4 {
            sizes[0] = 2;
            sizes.insert(1, 2);
        }
    }
    Ok(sizes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn cfg() -> HashConfig {
        HashConfig::default()
    }

    fn tree(s: &str) -> EspTree {
        EspTree::build(&Text::from(s), cfg()).unwrap()
    }

    #[test]
    fn rejects_empty_text() {
        assert_eq!(EspTree::build(&Text::new(vec![]), cfg()).unwrap_err(), EspError::EmptyText);
    }

    #[test]
    fn single_symbol_is_its_own_root() {
        let t = tree("a");
        assert_eq!(t.nodes().len(), 1);
        assert_eq!(t.height(), 0);
        assert_eq!(t.root().yield_length, 1);
        assert_eq!(t.dump(), "0 1 97\n");
    }

    #[test]
    fn run_blocking_examples() {
        // aaaa -> [2,2]; aaaaa -> [3,2]
        let t = tree("aaaa");
        let root = t.root();
        assert_eq!(root.children.len(), 2);
        let lens: Vec<u64> =
            root.children.iter().map(|&c| t.nodes()[c].yield_length).collect();
        assert_eq!(lens, vec![2, 2]);
        let t = tree("aaaaa");
        let lens: Vec<u64> =
            t.root().children.iter().map(|&c| t.nodes()[c].yield_length).collect();
        assert_eq!(lens, vec![3, 2]);
    }

    #[test]
    fn partition_examples() {
        assert_eq!(partition_level(&[5, 8]).unwrap(), vec![2]);
        assert_eq!(partition_level(&[7; 4]).unwrap(), vec![2, 2]);
        assert_eq!(partition_level(&[7; 5]).unwrap(), vec![3, 2]);
        assert_eq!(partition_level(&[7; 7]).unwrap(), vec![3, 2, 2]);
        assert_eq!(partition_level(&[]).unwrap_err(), EspError::TooShort(0));
        assert_eq!(partition_level(&[1]).unwrap_err(), EspError::TooShort(1));
    }

    #[test]
    fn reduction_golden() {
        assert_eq!(alphabet_reduction(&[7, 3, 7, 2, 9]).unwrap(), vec![1, 0, 1, 0, 1]);
        assert_eq!(alphabet_reduction(&[0, 1]).unwrap().len(), 2);
        assert!(matches!(
            alphabet_reduction(&[4, 4]),
            Err(EspError::AdjacentLabelsEqual(0, 1))
        ));
    }

    #[test]
    fn reduction_postconditions() {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        for _ in 0..500 {
            let len = rng.gen_range(1..60);
            let mut labels = Vec::with_capacity(len);
            let mut last = None;
            for _ in 0..len {
                let mut v = rng.gen_range(0..1_000_000u64);
                while Some(v) == last {
                    v = rng.gen_range(0..1_000_000u64);
                }
                labels.push(v);
                last = Some(v);
            }
            let red = alphabet_reduction(&labels).unwrap();
            assert_eq!(red.len(), labels.len());
            assert!(red.iter().all(|&v| v <= 2));
            for i in 1..red.len() {
                assert_ne!(red[i], red[i - 1], "{labels:?} -> {red:?}");
            }
        }
    }

    #[test]
    fn exhaustive_small_texts_are_legal() {
        // Every text up to length 12 over a binary alphabet parses into
        // blocks of 2-3 at every level.
        for len in 1usize..=12 {
            for bits in 0u32..(1 << len) {
                let symbols: Vec<u64> =
                    (0..len).map(|i| ((bits >> i) & 1) as u64 + 97).collect();
                let t = EspTree::build(&Text::new(symbols.clone()), cfg()).unwrap();
                for n in t.nodes() {
                    assert!(
                        n.children.is_empty() || (2..=3).contains(&n.children.len()),
                        "illegal block in {symbols:?}"
                    );
                }
                assert_eq!(t.root().yield_length as usize, len);
                assert!(t.height() <= t.height_bound());
            }
        }
    }

    #[test]
    fn deterministic_across_builds() {
        let mut rng = ChaCha20Rng::seed_from_u64(22);
        for _ in 0..30 {
            let len = rng.gen_range(1..400);
            let symbols: Vec<u64> = (0..len).map(|_| rng.gen_range(0..4) + 97).collect();
            let text = Text::new(symbols);
            let a = EspTree::build(&text, cfg()).unwrap();
            let b = EspTree::build(&text, cfg()).unwrap();
            assert_eq!(a.dump(), b.dump());
        }
    }

    #[test]
    fn height_bound_random_texts() {
        let mut rng = ChaCha20Rng::seed_from_u64(23);
        for _ in 0..60 {
            let len = rng.gen_range(1..3000);
            let alpha = [2u64, 3, 26, 256][rng.gen_range(0..4)];
            let symbols: Vec<u64> = (0..len).map(|_| rng.gen_range(0..alpha)).collect();
            let t = EspTree::build(&Text::new(symbols), cfg()).unwrap();
            assert!(t.height() <= t.height_bound(), "len {len}: {} > {}", t.height(), t.height_bound());
        }
    }

    #[test]
    fn dump_golden_abracadabra() {
        let expected = "\
3 11 605
  2 4 596
    1 2 186
      0 1 97
      0 1 98
    1 2 413
      0 1 114
      0 1 97
  2 7 703
    1 2 697
      0 1 99
      0 1 97
    1 3 750
      0 1 100
      0 1 97
      0 1 98
    1 2 413
      0 1 114
      0 1 97
";
        assert_eq!(tree("abracadabra").dump(), expected);
    }

    #[test]
    fn dump_golden_aaaa() {
        let expected = "\
2 4 816
  1 2 185
    0 1 97
    0 1 97
  1 2 185
    0 1 97
    0 1 97
";
        assert_eq!(tree("aaaa").dump(), expected);
    }

    #[test]
    fn characteristic_vector_counts_every_node() {
        // 'ab': leaf a, leaf b, root.
        let t = tree("ab");
        let v = t.characteristic_vector();
        assert_eq!(v.counts.len(), 3);
        assert_eq!(v.counts[&97], 1);
        assert_eq!(v.counts[&98], 1);
        assert_eq!(v.counts[&186], 1);
        // 'aaaa': the two [aa] blocks share a label.
        let v = tree("aaaa").characteristic_vector();
        assert_eq!(v.counts[&185], 2);
        // Totals always equal node counts.
        let t = tree("abracadabra");
        assert_eq!(t.characteristic_vector().total() as usize, t.nodes().len());
        let expected: BTreeMap<u64, u64> = [
            (97, 5),
            (98, 2),
            (99, 1),
            (100, 1),
            (114, 2),
            (186, 1),
            (413, 2),
            (596, 1),
            (605, 1),
            (697, 1),
            (703, 1),
            (750, 1),
        ]
        .into_iter()
        .collect();
        assert_eq!(t.characteristic_vector().counts, expected);
    }

    #[test]
    fn l1_distance_examples() {
        let u = CharacteristicVector::from_counts([(1, 1), (3, 2)].into_iter().collect());
        let v = CharacteristicVector::from_counts([(2, 1), (3, 2)].into_iter().collect());
        assert_eq!(l1_distance(&u, &v), 2);
        assert_eq!(l1_distance(&u, &u), 0);
        let empty = CharacteristicVector::default();
        assert_eq!(l1_distance(&u, &empty), 3);
        assert_eq!(l1_distance(&empty, &v), 3);
    }

    #[test]
    fn l1_distance_is_symmetric() {
        let mut rng = ChaCha20Rng::seed_from_u64(24);
        for _ in 0..100 {
            let mk = |rng: &mut ChaCha20Rng| {
                let mut m = BTreeMap::new();
                for _ in 0..rng.gen_range(0..12) {
                    m.insert(rng.gen_range(0..20u64), rng.gen_range(1..9u64));
                }
                CharacteristicVector::from_counts(m)
            };
            let u = mk(&mut rng);
            let v = mk(&mut rng);
            assert_eq!(l1_distance(&u, &v), l1_distance(&v, &u));
        }
    }

    #[test]
    fn edit_locality_is_reported() {
        // Flip one symbol in the middle of a length-1000 text and count how
        // many per-level label slots change. Reported as a soft check: the
        // count should stay a small multiple of the tree height.
        let mut rng = ChaCha20Rng::seed_from_u64(25);
        let len = 1000usize;
        let symbols: Vec<u64> = (0..len).map(|_| rng.gen_range(0..26) + 97).collect();
        let mut flipped = symbols.clone();
        flipped[len / 2] = (flipped[len / 2] - 97 + 1) % 26 + 97;
        let a = EspTree::build(&Text::new(symbols), cfg()).unwrap();
        let b = EspTree::build(&Text::new(flipped), cfg()).unwrap();
        let mut per_level_a: BTreeMap<u32, BTreeMap<u64, i64>> = BTreeMap::new();
        for n in a.nodes() {
            *per_level_a.entry(n.level).or_default().entry(n.tentative_label.value).or_insert(0) += 1;
        }
        for n in b.nodes() {
            *per_level_a.entry(n.level).or_default().entry(n.tentative_label.value).or_insert(0) -= 1;
        }
        let changed: i64 = per_level_a
            .values()
            .map(|lv| lv.values().map(|d| d.abs()).sum::<i64>())
            .sum();
        let log2n = (len as f64).log2().ceil();
        println!(
            "one edit changed {changed} label slots over {} levels (C = {:.2} per log2 N)",
            a.height().max(b.height()) + 1,
            changed as f64 / log2n,
        );
        assert!(changed <= (20.0 * log2n) as i64, "locality regressed: {changed}");
    }
}
