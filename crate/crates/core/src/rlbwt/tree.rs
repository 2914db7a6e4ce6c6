//! Arena treap over a sequence of weighted items with parent links.
//!
//! Positions are implicit: a node's place in the sequence is its in-order
//! rank, and subtree weight sums give prefix sums in O(depth). Nodes are never
//! removed.

pub(crate) type NodeId = u32;

pub(crate) const NIL: NodeId = u32::MAX;

#[derive(Clone, Debug)]
struct Node<P> {
    left: NodeId,
    right: NodeId,
    parent: NodeId,
    priority: u32,
    weight: u64,
    sum: u64,
    payload: P,
}

#[derive(Clone, Debug)]
pub(crate) struct WeightedSeq<P> {
    nodes: Vec<Node<P>>,
    root: NodeId,
    rng: u64,
}

impl<P: Copy> WeightedSeq<P> {
    pub(crate) fn new(seed: u64) -> Self {
        Self {
            nodes: Vec::new(),
            root: NIL,
            rng: seed | 1,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.nodes.len()
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[cfg(test)]
    pub(crate) fn total(&self) -> u64 {
        self.sum_of(self.root)
    }

    #[inline]
    fn sum_of(&self, x: NodeId) -> u64 {
        if x == NIL {
            0
        } else {
            self.nodes[x as usize].sum
        }
    }

    #[inline]
    fn node(&self, x: NodeId) -> &Node<P> {
        &self.nodes[x as usize]
    }

    #[inline]
    fn node_mut(&mut self, x: NodeId) -> &mut Node<P> {
        &mut self.nodes[x as usize]
    }

    pub(crate) fn weight(&self, x: NodeId) -> u64 {
        self.node(x).weight
    }

    pub(crate) fn payload(&self, x: NodeId) -> P {
        self.node(x).payload
    }

    pub(crate) fn set_payload(&mut self, x: NodeId, payload: P) {
        self.node_mut(x).payload = payload;
    }

    fn next_priority(&mut self) -> u32 {
        // xorshift64*
        self.rng ^= self.rng >> 12;
        self.rng ^= self.rng << 25;
        self.rng ^= self.rng >> 27;
        (self.rng.wrapping_mul(0x2545_F491_4F6C_DD1D) >> 32) as u32
    }

    /// Node covering 0-based position `pos`, with the offset inside it.
    pub(crate) fn locate(&self, mut pos: u64) -> Option<(NodeId, u64)> {
        let mut x = self.root;
        while x != NIL {
            let n = self.node(x);
            let left = self.sum_of(n.left);
            if pos < left {
                x = n.left;
            } else if pos < left + n.weight {
                return Some((x, pos - left));
            } else {
                pos -= left + n.weight;
                x = n.right;
            }
        }
        None
    }

    /// Total weight of the nodes before `x`.
    pub(crate) fn prefix(&self, mut x: NodeId) -> u64 {
        let mut acc = self.sum_of(self.node(x).left);
        loop {
            let p = self.node(x).parent;
            if p == NIL {
                return acc;
            }
            let pn = self.node(p);
            if pn.right == x {
                acc += self.sum_of(pn.left) + pn.weight;
            }
            x = p;
        }
    }

    /// Last node for which `pred` holds, given `pred` is true on a prefix of
    /// the sequence and false afterwards.
    pub(crate) fn find_last(&self, mut pred: impl FnMut(NodeId) -> bool) -> Option<NodeId> {
        let mut x = self.root;
        let mut best = None;
        while x != NIL {
            if pred(x) {
                best = Some(x);
                x = self.node(x).right;
            } else {
                x = self.node(x).left;
            }
        }
        best
    }

    pub(crate) fn add_weight(&mut self, x: NodeId, delta: i64) {
        let apply = |v: u64| v.checked_add_signed(delta).expect("weight underflow");
        let n = self.node_mut(x);
        n.weight = apply(n.weight);
        let mut y = x;
        while y != NIL {
            let n = self.node_mut(y);
            n.sum = apply(n.sum);
            y = n.parent;
        }
    }

    /// Inserts a node right after `anchor`, or at the front for `None`.
    pub(crate) fn insert_after(&mut self, anchor: Option<NodeId>, weight: u64, payload: P) -> NodeId {
        let id = self.nodes.len() as NodeId;
        assert!(id != NIL, "treap arena exhausted");
        let priority = self.next_priority();
        self.nodes.push(Node {
            left: NIL,
            right: NIL,
            parent: NIL,
            priority,
            weight,
            sum: weight,
            payload,
        });
        if self.root == NIL {
            self.root = id;
            return id;
        }
        let (parent, as_left) = match anchor {
            None => (self.leftmost(self.root), true),
            Some(a) => {
                let r = self.node(a).right;
                if r == NIL {
                    (a, false)
                } else {
                    (self.leftmost(r), true)
                }
            }
        };
        if as_left {
            self.node_mut(parent).left = id;
        } else {
            self.node_mut(parent).right = id;
        }
        self.node_mut(id).parent = parent;
        let mut y = parent;
        while y != NIL {
            let n = self.node_mut(y);
            n.sum += weight;
            y = n.parent;
        }
        while self.node(id).parent != NIL
            && self.node(self.node(id).parent).priority < priority
        {
            self.rotate_up(id);
        }
        id
    }

    fn leftmost(&self, mut x: NodeId) -> NodeId {
        while self.node(x).left != NIL {
            x = self.node(x).left;
        }
        x
    }

    fn rotate_up(&mut self, x: NodeId) {
        let p = self.node(x).parent;
        let g = self.node(p).parent;
        if self.node(p).left == x {
            let b = self.node(x).right;
            self.node_mut(p).left = b;
            if b != NIL {
                self.node_mut(b).parent = p;
            }
            self.node_mut(x).right = p;
        } else {
            let b = self.node(x).left;
            self.node_mut(p).right = b;
            if b != NIL {
                self.node_mut(b).parent = p;
            }
            self.node_mut(x).left = p;
        }
        self.node_mut(p).parent = x;
        self.node_mut(x).parent = g;
        if g == NIL {
            self.root = x;
        } else if self.node(g).left == p {
            self.node_mut(g).left = x;
        } else {
            self.node_mut(g).right = x;
        }
        self.refresh(p);
        self.refresh(x);
    }

    fn refresh(&mut self, x: NodeId) {
        let n = self.node(x);
        let sum = n.weight + self.sum_of(n.left) + self.sum_of(n.right);
        self.node_mut(x).sum = sum;
    }

    /// Node ids in sequence order.
    pub(crate) fn in_order(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = Vec::new();
        let mut x = self.root;
        while x != NIL || !stack.is_empty() {
            while x != NIL {
                stack.push(x);
                x = self.node(x).left;
            }
            let y = stack.pop().unwrap();
            out.push(y);
            x = self.node(y).right;
        }
        out
    }

    pub(crate) fn node_bytes() -> usize {
        std::mem::size_of::<Node<P>>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_vec_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut seq = WeightedSeq::<u32>::new(9);
        let mut model: Vec<(NodeId, u64)> = Vec::new();
        for step in 0..2000u32 {
            if !model.is_empty() && rng.gen_bool(0.3) {
                let i = rng.gen_range(0..model.len());
                let delta = rng.gen_range(1..5);
                seq.add_weight(model[i].0, delta as i64);
                model[i].1 += delta;
            } else {
                let at = rng.gen_range(0..=model.len());
                let w = rng.gen_range(1..10);
                let anchor = if at == 0 { None } else { Some(model[at - 1].0) };
                let id = seq.insert_after(anchor, w, step);
                model.insert(at, (id, w));
            }
        }
        let order: Vec<NodeId> = model.iter().map(|&(id, _)| id).collect();
        assert_eq!(seq.in_order(), order);
        let mut acc = 0;
        for &(id, w) in &model {
            assert_eq!(seq.prefix(id), acc);
            assert_eq!(seq.weight(id), w);
            for off in [0, w - 1] {
                assert_eq!(seq.locate(acc + off), Some((id, off)));
            }
            acc += w;
        }
        assert_eq!(seq.total(), acc);
        assert_eq!(seq.locate(acc), None);
        let cut = acc / 2;
        let last = seq.find_last(|x| seq.prefix(x) <= cut).unwrap();
        let (expect, _) = seq.locate(cut).unwrap();
        assert_eq!(last, expect);
    }
}
