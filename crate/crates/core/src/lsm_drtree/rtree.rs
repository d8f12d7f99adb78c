//! In-memory R-tree over possibly overlapping effective areas: least
//! enlargement descent, quadratic split.

use crate::effective_area::EffectiveArea;
use crate::types::{Key, SeqNo};

fn area(r: &EffectiveArea) -> f64 {
    (r.key_hi - r.key_lo) as f64 * (r.seq_hi - r.seq_lo) as f64
}

fn union(a: &EffectiveArea, b: &EffectiveArea) -> EffectiveArea {
    EffectiveArea {
        key_lo: a.key_lo.min(b.key_lo),
        key_hi: a.key_hi.max(b.key_hi),
        seq_lo: a.seq_lo.min(b.seq_lo),
        seq_hi: a.seq_hi.max(b.seq_hi),
    }
}

fn enlargement(mbr: &EffectiveArea, add: &EffectiveArea) -> f64 {
    area(&union(mbr, add)) - area(mbr)
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(Vec<EffectiveArea>),
    Internal(Vec<(EffectiveArea, Node)>),
}

impl Node {
    fn mbr(&self) -> EffectiveArea {
        match self {
            Node::Leaf(items) => items.iter().skip(1).fold(items[0], |m, a| union(&m, a)),
            Node::Internal(items) => items
                .iter()
                .skip(1)
                .fold(items[0].0, |m, a| union(&m, &a.0)),
        }
    }
}

/// Partition `items` into two groups of at least `min_fill` each.
fn quadratic_split<T>(
    mut items: Vec<T>,
    min_fill: usize,
    rect: impl Fn(&T) -> EffectiveArea,
) -> (Vec<T>, Vec<T>) {
    // Seeds: the pair wasting the most area if grouped together.
    let (mut s1, mut s2, mut worst) = (0, 1, f64::NEG_INFINITY);
    for i in 0..items.len() {
        for j in i + 1..items.len() {
            let (a, b) = (rect(&items[i]), rect(&items[j]));
            let d = area(&union(&a, &b)) - area(&a) - area(&b);
            if d > worst {
                (s1, s2, worst) = (i, j, d);
            }
        }
    }
    let second = items.swap_remove(s2);
    let first = items.swap_remove(s1);
    let (mut m1, mut m2) = (rect(&first), rect(&second));
    let (mut g1, mut g2) = (vec![first], vec![second]);

    while !items.is_empty() {
        if g1.len() + items.len() == min_fill {
            g1.append(&mut items);
            break;
        }
        if g2.len() + items.len() == min_fill {
            g2.append(&mut items);
            break;
        }
        // Entry with the strongest preference for one group.
        let (idx, _) = items
            .iter()
            .enumerate()
            .map(|(i, it)| {
                let r = rect(it);
                (i, (enlargement(&m1, &r) - enlargement(&m2, &r)).abs())
            })
            .fold(
                (0, f64::NEG_INFINITY),
                |best, c| if c.1 > best.1 { c } else { best },
            );
        let it = items.swap_remove(idx);
        let r = rect(&it);
        let (d1, d2) = (enlargement(&m1, &r), enlargement(&m2, &r));
        let to_first = if d1 != d2 {
            d1 < d2
        } else if area(&m1) != area(&m2) {
            area(&m1) < area(&m2)
        } else {
            g1.len() <= g2.len()
        };
        if to_first {
            m1 = union(&m1, &r);
            g1.push(it);
        } else {
            m2 = union(&m2, &r);
            g2.push(it);
        }
    }
    (g1, g2)
}

#[derive(Debug, Clone)]
pub struct RTree {
    root: Option<Node>,
    capacity: usize,
    len: usize,
}

impl RTree {
    pub fn new(node_capacity: usize) -> Self {
        RTree {
            root: None,
            capacity: node_capacity.max(2),
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn min_fill(&self) -> usize {
        (self.capacity.div_ceil(2)).saturating_sub(1).max(1)
    }

    pub fn insert(&mut self, a: EffectiveArea) {
        self.len += 1;
        let (cap, fill) = (self.capacity, self.min_fill());
        let Some(root) = self.root.as_mut() else {
            self.root = Some(Node::Leaf(vec![a]));
            return;
        };
        if let Some(sibling) = insert_rec(root, a, cap, fill) {
            let old = self.root.take().unwrap();
            self.root = Some(Node::Internal(vec![
                (old.mbr(), old),
                (sibling.mbr(), sibling),
            ]));
        }
    }

    /// True if any stored area covers `(key, seq)`.
    pub fn covers(&self, key: Key, seq: SeqNo) -> bool {
        fn go(n: &Node, key: Key, seq: SeqNo) -> bool {
            match n {
                Node::Leaf(items) => items.iter().any(|a| a.covers(key, seq)),
                Node::Internal(items) => items
                    .iter()
                    .any(|(m, c)| m.covers(key, seq) && go(c, key, seq)),
            }
        }
        self.root.as_ref().is_some_and(|r| go(r, key, seq))
    }

    /// Areas whose key range intersects `[lo, hi)`.
    pub fn search_keys(&self, lo: Key, hi: Key) -> Vec<EffectiveArea> {
        fn go(n: &Node, lo: Key, hi: Key, out: &mut Vec<EffectiveArea>) {
            match n {
                Node::Leaf(items) => {
                    out.extend(items.iter().filter(|a| a.key_lo < hi && lo < a.key_hi))
                }
                Node::Internal(items) => {
                    for (m, c) in items {
                        if m.key_lo < hi && lo < m.key_hi {
                            go(c, lo, hi, out);
                        }
                    }
                }
            }
        }
        let mut out = Vec::new();
        if let Some(r) = &self.root {
            go(r, lo, hi, &mut out);
        }
        out
    }

    pub fn areas(&self) -> Vec<EffectiveArea> {
        self.search_keys(0, Key::MAX)
    }

    /// Remove and return every stored area.
    pub fn drain(&mut self) -> Vec<EffectiveArea> {
        let out = self.areas();
        self.root = None;
        self.len = 0;
        out
    }

    pub fn height(&self) -> usize {
        let mut h = 0;
        let mut n = self.root.as_ref();
        while let Some(node) = n {
            h += 1;
            n = match node {
                Node::Leaf(_) => None,
                Node::Internal(items) => Some(&items[0].1),
            };
        }
        h
    }

    /// Check structural invariants: fill bounds, enclosing MBRs, uniform depth.
    pub fn check_invariants(&self) -> Result<(), String> {
        fn go(
            n: &Node,
            cap: usize,
            fill: usize,
            is_root: bool,
            depth: usize,
            leaf_depth: &mut Option<usize>,
        ) -> Result<(), String> {
            let size = match n {
                Node::Leaf(i) => i.len(),
                Node::Internal(i) => i.len(),
            };
            if size > cap || (!is_root && size < fill) {
                return Err(format!("node of size {size} outside [{fill}, {cap}]"));
            }
            match n {
                Node::Leaf(_) => match leaf_depth {
                    Some(d) if *d != depth => Err("leaves at different depths".into()),
                    _ => {
                        *leaf_depth = Some(depth);
                        Ok(())
                    }
                },
                Node::Internal(items) => {
                    for (m, c) in items {
                        if *m != c.mbr() {
                            return Err("stale MBR".into());
                        }
                        go(c, cap, fill, false, depth + 1, leaf_depth)?;
                    }
                    Ok(())
                }
            }
        }
        match &self.root {
            None => Ok(()),
            Some(r) => go(r, self.capacity, self.min_fill(), true, 0, &mut None),
        }
    }
}

fn insert_rec(node: &mut Node, a: EffectiveArea, cap: usize, fill: usize) -> Option<Node> {
    match node {
        Node::Leaf(items) => {
            items.push(a);
            if items.len() <= cap {
                return None;
            }
            let (g1, g2) = quadratic_split(std::mem::take(items), fill, |x| *x);
            *items = g1;
            Some(Node::Leaf(g2))
        }
        Node::Internal(items) => {
            let best = items
                .iter()
                .enumerate()
                .min_by(|(_, x), (_, y)| {
                    let ex = enlargement(&x.0, &a);
                    let ey = enlargement(&y.0, &a);
                    ex.total_cmp(&ey).then(area(&x.0).total_cmp(&area(&y.0)))
                })
                .map(|(i, _)| i)
                .unwrap();
            let split = insert_rec(&mut items[best].1, a, cap, fill);
            items[best].0 = items[best].1.mbr();
            if let Some(sib) = split {
                items.push((sib.mbr(), sib));
            }
            if items.len() <= cap {
                return None;
            }
            let (g1, g2) = quadratic_split(std::mem::take(items), fill, |x| x.0);
            *items = g1;
            Some(Node::Internal(g2))
        }
    }
}
