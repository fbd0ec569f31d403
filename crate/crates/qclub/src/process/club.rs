//! Order-statistic multiset over admitted opinions: O(log n) insert, rank
//! selection, and threshold counting. A treap with deterministic pseudo-random
//! priorities derived from the insertion counter, so identical insertion
//! sequences produce identical trees on every platform.

const NIL: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Node {
    value: f64,
    prio: u64,
    left: u32,
    right: u32,
    /// Multiplicity of `value` (duplicates share a node).
    count: u32,
    /// Total multiplicity in this subtree.
    subtree: u64,
}

#[derive(Debug, Clone, Default)]
pub struct ClubTree {
    nodes: Vec<Node>,
    root: u32,
    inserts: u64,
}

impl ClubTree {
    pub fn new() -> ClubTree {
        ClubTree { nodes: Vec::new(), root: NIL, inserts: 0 }
    }

    pub fn with_capacity(n: usize) -> ClubTree {
        ClubTree { nodes: Vec::with_capacity(n), root: NIL, inserts: 0 }
    }

    pub fn len(&self) -> u64 {
        if self.root == NIL {
            0
        } else {
            self.nodes[self.root as usize].subtree
        }
    }

    pub fn is_empty(&self) -> bool {
        self.root == NIL
    }

    pub fn insert(&mut self, value: f64) {
        debug_assert!(!value.is_nan());
        let prio = splitmix64(self.inserts);
        self.inserts += 1;
        self.root = self.insert_at(self.root, value, prio);
    }

    fn insert_at(&mut self, node: u32, value: f64, prio: u64) -> u32 {
        if node == NIL {
            self.nodes.push(Node { value, prio, left: NIL, right: NIL, count: 1, subtree: 1 });
            return (self.nodes.len() - 1) as u32;
        }
        let i = node as usize;
        if value == self.nodes[i].value {
            self.nodes[i].count += 1;
            self.nodes[i].subtree += 1;
            return node;
        }
        if value < self.nodes[i].value {
            let child = self.insert_at(self.nodes[i].left, value, prio);
            self.nodes[i].left = child;
            if self.nodes[child as usize].prio > self.nodes[i].prio {
                let new_root = self.rotate_right(node);
                self.pull(new_root);
                return new_root;
            }
        } else {
            let child = self.insert_at(self.nodes[i].right, value, prio);
            self.nodes[i].right = child;
            if self.nodes[child as usize].prio > self.nodes[i].prio {
                let new_root = self.rotate_left(node);
                self.pull(new_root);
                return new_root;
            }
        }
        self.pull(node);
        node
    }

    fn size(&self, node: u32) -> u64 {
        if node == NIL {
            0
        } else {
            self.nodes[node as usize].subtree
        }
    }

    fn pull(&mut self, node: u32) {
        let i = node as usize;
        let s = self.size(self.nodes[i].left)
            + self.size(self.nodes[i].right)
            + self.nodes[i].count as u64;
        self.nodes[i].subtree = s;
    }

    fn rotate_right(&mut self, node: u32) -> u32 {
        let l = self.nodes[node as usize].left;
        self.nodes[node as usize].left = self.nodes[l as usize].right;
        self.nodes[l as usize].right = node;
        self.pull(node);
        l
    }

    fn rotate_left(&mut self, node: u32) -> u32 {
        let r = self.nodes[node as usize].right;
        self.nodes[node as usize].right = self.nodes[r as usize].left;
        self.nodes[r as usize].left = node;
        self.pull(node);
        r
    }

    /// Number of members ≤ x.
    pub fn count_le(&self, x: f64) -> u64 {
        let mut acc = 0u64;
        let mut node = self.root;
        while node != NIL {
            let n = &self.nodes[node as usize];
            if n.value <= x {
                acc += self.size(n.left) + n.count as u64;
                node = n.right;
            } else {
                node = n.left;
            }
        }
        acc
    }

    /// Number of members strictly below x.
    pub fn count_lt(&self, x: f64) -> u64 {
        let mut acc = 0u64;
        let mut node = self.root;
        while node != NIL {
            let n = &self.nodes[node as usize];
            if n.value < x {
                acc += self.size(n.left) + n.count as u64;
                node = n.right;
            } else {
                node = n.left;
            }
        }
        acc
    }

    /// Value of the member with the given 1-based rank.
    pub fn select(&self, rank: u64) -> Option<f64> {
        if rank == 0 || rank > self.len() {
            return None;
        }
        let mut node = self.root;
        let mut rank = rank;
        while node != NIL {
            let n = &self.nodes[node as usize];
            let ls = self.size(n.left);
            if rank <= ls {
                node = n.left;
            } else if rank <= ls + n.count as u64 {
                return Some(n.value);
            } else {
                rank -= ls + n.count as u64;
                node = n.right;
            }
        }
        None
    }

    /// Empirical lower r-quantile: the member of rank ⌈r·n⌉.
    pub fn quantile(&self, r: f64) -> Option<f64> {
        self.select(quantile_rank(r, self.len()))
    }
}

/// Rank of the lower r-quantile in a multiset of size k: ⌈r·k⌉ as computed
/// in f64 (no adjustment when r·k lands on an integer), clamped into [1, k].
pub fn quantile_rank(r: f64, k: u64) -> u64 {
    if k == 0 {
        return 0;
    }
    let raw = (r * k as f64).ceil();
    (raw as u64).clamp(1, k)
}

/// Reference implementation by sort-and-index; the tree must agree with this
/// on every prefix.
pub fn quantile_reference(values: &[f64], r: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = quantile_rank(r, sorted.len() as u64);
    Some(sorted[(rank - 1) as usize])
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
