//! Brute-force references. Everything here favors obviousness over speed;
//! the test suite holds the fast paths to these answers.

use crate::esp::{l1_distance, CharacteristicVector, EspError, EspTree};
use crate::hash::HashConfig;
use crate::text::Text;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

/// Classic unit-cost edit distance (insert, delete, substitute) by dynamic
/// programming.
pub fn levenshtein(x: &Text, y: &Text) -> u64 {
    let (xs, ys) = (x.symbols(), y.symbols());
    let mut prev: Vec<u64> = (0..=ys.len() as u64).collect();
    let mut cur = vec![0u64; ys.len() + 1];
    for (i, &cx) in xs.iter().enumerate() {
        cur[0] = i as u64 + 1;
        for (j, &cy) in ys.iter().enumerate() {
            let sub = prev[j] + u64::from(cx != cy);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[ys.len()]
}

/// Exact edit distance with moves by breadth-first search over edit scripts:
/// unit-cost insert, delete, rename, and substring move. `None` when the
/// distance exceeds `cap`. Feasible only at desk scale (lengths up to ~8,
/// cap up to ~4); the state space explodes beyond that.
pub fn exact_edm(x: &Text, y: &Text, cap: u64) -> Option<u64> {
    let mut search = EdmSearch::new(&[x.symbols(), y.symbols()], y.len(), cap);
    let distances = search.bfs_from(x.symbols());
    let target = search.intern(y.symbols());
    distances.get(&target).copied()
}

/// Distance matrix over a fixed set of strings: `result[i][j]` is
/// `exact_edm(strings[i], strings[j], cap)`. Shares one move-graph expansion
/// cache across all sources, which is what makes exhaustive sweeps viable.
pub fn pairwise_edm(strings: &[Vec<u64>], cap: u64) -> Vec<Vec<Option<u64>>> {
    let refs: Vec<&[u64]> = strings.iter().map(|s| s.as_slice()).collect();
    let max_target = strings.iter().map(|s| s.len()).max().unwrap_or(0);
    let mut search = EdmSearch::new(&refs, max_target, cap);
    let ids: Vec<u32> = strings.iter().map(|s| search.intern(s)).collect();
    let n = strings.len();
    let mut out = vec![vec![None; n]; n];
    for i in 0..n {
        let distances = search.bfs_from(strings[i].as_slice());
        for j in 0..n {
            out[i][j] = distances.get(&ids[j]).copied();
        }
    }
    out
}

/// BFS over the move-edit graph with interned strings and memoized neighbor
/// lists. The alphabet is every symbol of the given strings plus one fresh
/// symbol: a renaming argument shows additional symbols never shorten a
/// script, so this alphabet is sufficient for exact distances.
struct EdmSearch {
    alphabet: Vec<u64>,
    cap: u64,
    max_target_len: usize,
    strings: Vec<Vec<u64>>,
    ids: HashMap<Vec<u64>, u32>,
    neighbors: Vec<Option<Box<[u32]>>>,
}

impl EdmSearch {
    fn new(strings: &[&[u64]], max_target_len: usize, cap: u64) -> Self {
        let mut alphabet: BTreeSet<u64> = BTreeSet::new();
        for s in strings {
            alphabet.extend(s.iter().copied());
        }
        let fresh = alphabet.iter().next_back().map_or(0, |&m| m + 1);
        alphabet.insert(fresh);
        EdmSearch {
            alphabet: alphabet.into_iter().collect(),
            cap,
            max_target_len,
            strings: Vec::new(),
            ids: HashMap::new(),
            neighbors: Vec::new(),
        }
    }

    fn intern(&mut self, s: &[u64]) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.strings.len() as u32;
        self.strings.push(s.to_vec());
        self.ids.insert(s.to_vec(), id);
        self.neighbors.push(None);
        id
    }

    fn bfs_from(&mut self, start: &[u64]) -> HashMap<u32, u64> {
        let start = self.intern(start);
        let mut dist: HashMap<u32, u64> = HashMap::new();
        dist.insert(start, 0);
        let mut frontier = vec![start];
        for depth in 1..=self.cap {
            let mut next = Vec::new();
            for &s in &frontier {
                // A state can still reach a target only if the remaining
                // budget covers the length excess it must delete.
                let len = self.strings[s as usize].len();
                if len.saturating_sub(self.max_target_len) as u64 > self.cap - depth + 1 {
                    continue;
                }
                if self.neighbors[s as usize].is_none() {
                    let list = self.expand(s);
                    self.neighbors[s as usize] = Some(list);
                }
                let list = self.neighbors[s as usize].take().expect("just set");
                for &t in list.iter() {
                    dist.entry(t).or_insert_with(|| {
                        next.push(t);
                        depth
                    });
                }
                self.neighbors[s as usize] = Some(list);
            }
            frontier = next;
            if frontier.is_empty() {
                break;
            }
        }
        dist
    }

    fn expand(&mut self, id: u32) -> Box<[u32]> {
        let s = self.strings[id as usize].clone();
        let mut out: HashSet<Vec<u64>> = HashSet::new();
        // Inserts.
        for pos in 0..=s.len() {
            for &a in &self.alphabet {
                let mut t = s.clone();
                t.insert(pos, a);
                out.insert(t);
            }
        }
        // Deletes.
        for pos in 0..s.len() {
            let mut t = s.clone();
            t.remove(pos);
            out.insert(t);
        }
        // Renames.
        for pos in 0..s.len() {
            for &a in &self.alphabet {
                if a != s[pos] {
                    let mut t = s.clone();
                    t[pos] = a;
                    out.insert(t);
                }
            }
        }
        // Moves: cut [i, j), reinsert the span elsewhere.
        for i in 0..s.len() {
            for j in i + 1..=s.len() {
                if j - i == s.len() {
                    continue;
                }
                let mut rest = s.clone();
                let span: Vec<u64> = rest.drain(i..j).collect();
                for k in 0..=rest.len() {
                    if k == i {
                        continue;
                    }
                    let mut t = rest.clone();
                    t.splice(k..k, span.iter().copied());
                    out.insert(t);
                }
            }
        }
        out.remove(&s);
        let mut ids: Vec<u32> = out.into_iter().map(|t| self.intern(&t)).collect();
        ids.sort_unstable();
        ids.into_boxed_slice()
    }
}

/// Order the union of two label sets ascending and assign 1-based ranks:
/// the final labels the two-party protocol must agree with exactly.
pub fn reference_labeling(a: &[u64], b: &[u64]) -> BTreeMap<u64, u64> {
    let union: BTreeSet<u64> = a.iter().chain(b.iter()).copied().collect();
    union.into_iter().zip(1u64..).collect()
}

/// How the L1 approximation relates to the exact distances for one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproximationReport {
    /// L1 distance of characteristic vectors under conflict-free labels
    /// (nodes labeled by their exact yields, sidestepping hash conflicts).
    pub l1: u64,
    /// Exact move-aware distance, when within `cap`.
    pub edm: Option<u64>,
    pub cap: u64,
    pub levenshtein: u64,
    /// l1 / edm, when edm is known and nonzero.
    pub ratio: Option<f64>,
}

/// Result alias used by the re-exports.
pub type EdmResult = ApproximationReport;

/// Parse both texts, label nodes conflict-free by ranking their exact yield
/// substrings, and compare the L1 approximation against the brute-force
/// distances.
pub fn approximation_report(
    x: &Text,
    y: &Text,
    cfg: HashConfig,
    cap: u64,
) -> Result<ApproximationReport, EspError> {
    let tx = EspTree::build(x, cfg)?;
    let ty = EspTree::build(y, cfg)?;
    let vx = tx.yield_vector(x);
    let vy = ty.yield_vector(y);
    // Rank the union of yields; identical substrings and only identical
    // substrings share a rank.
    let union: BTreeSet<&Vec<u64>> = vx.keys().chain(vy.keys()).collect();
    let rank: BTreeMap<&Vec<u64>, u64> =
        union.into_iter().zip(1u64..).collect();
    let to_vector = |v: &BTreeMap<Vec<u64>, u64>| {
        CharacteristicVector::from_counts(
            v.iter().map(|(k, &c)| (rank[k], c)).collect(),
        )
    };
    let l1 = l1_distance(&to_vector(&vx), &to_vector(&vy));
    let edm = exact_edm(x, y, cap);
    let lev = levenshtein(x, y);
    let ratio = match edm {
        Some(d) if d > 0 => Some(l1 as f64 / d as f64),
        _ => None,
    };
    Ok(ApproximationReport { l1, edm, cap, levenshtein: lev, ratio })
}
