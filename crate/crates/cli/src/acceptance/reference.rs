//! Independent oracles: a naive pointer-tree simulator sharing only the
//! laws' samplers and draw order with the engine, and a dense-grid Legendre
//! transform for jumps uniform on `[−1, 1]`.

use std::rc::Rc;

use brwlab::{GenealogyArena, IncrementLaw, OffspringLaw, RandomStream};

struct Node {
    parent: Option<Rc<Node>>,
    id: usize,
    position: Vec<f64>,
}

/// Every node of a naive run by id, ids in birth order.
pub struct NaiveTree {
    nodes: Vec<Rc<Node>>,
    generations: Vec<Vec<Rc<Node>>>,
}

impl NaiveTree {
    fn root(d: usize) -> Self {
        let root = Rc::new(Node {
            parent: None,
            id: 0,
            position: vec![0.0; d],
        });
        Self {
            nodes: vec![root.clone()],
            generations: vec![vec![root]],
        }
    }

    fn step(&mut self, inc: &IncrementLaw, off: &OffspringLaw, rng: &mut RandomStream) {
        let d = inc.dimension();
        let mut next = Vec::new();
        let last = self.generations.last().expect("root generation").clone();
        for parent in &last {
            for _ in 0..off.sample(rng) {
                let mut jump = vec![0.0; d];
                inc.sample_into(rng, &mut jump);
                let node = Rc::new(Node {
                    parent: Some(parent.clone()),
                    id: self.nodes.len(),
                    position: parent.position.iter().zip(&jump).map(|(a, b)| a + b).collect(),
                });
                self.nodes.push(node.clone());
                next.push(node);
            }
        }
        self.generations.push(next);
    }

    /// `n` generations, stopping early on extinction.
    pub fn run(n: u32, inc: &IncrementLaw, off: &OffspringLaw, rng: &mut RandomStream) -> Self {
        let mut tree = Self::root(inc.dimension());
        for _ in 0..n {
            if tree.generations.last().is_some_and(Vec::is_empty) {
                break;
            }
            tree.step(inc, off, rng);
        }
        tree
    }

    /// First difference from `arena`, if any.
    pub fn mismatch(&self, arena: &GenealogyArena) -> Option<String> {
        if self.nodes.len() != arena.len() {
            return Some(format!("{} nodes vs {}", self.nodes.len(), arena.len()));
        }
        for v in &self.nodes {
            let id = v.id as u32;
            let parent = v.parent.as_ref().map(|p| p.id as u32);
            if arena.parent(id).ok() != Some(parent) {
                return Some(format!("parent of node {id} differs"));
            }
            if arena.position(id).ok() != Some(v.position.as_slice()) {
                return Some(format!("position of node {id} differs"));
            }
        }
        let sizes: Vec<usize> = self.generations.iter().map(Vec::len).collect();
        if arena.generation_sizes() != sizes {
            return Some("generation sizes differ".into());
        }
        None
    }
}

/// `log E e^{λU}` for `U` uniform on `[−1, 1]`.
fn uniform_log_mgf(l: f64) -> f64 {
    if l.abs() < 1e-8 {
        l * l / 6.0
    } else {
        (l.sinh() / l).ln()
    }
}

/// `(I(x), argmax λ)` by a dense grid on `[0, 40]` with step 1e-5 and a
/// golden-section polish around the best grid point.
pub fn uniform_grid_conjugate(x: f64) -> (f64, f64) {
    let f = |l: f64| l * x - uniform_log_mgf(l);
    let step = 1e-5;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for k in 0..=4_000_000u64 {
        let l = k as f64 * step;
        let v = f(l);
        if v > best.0 {
            best = (v, l);
        }
    }
    let (mut a, mut b) = ((best.1 - step).max(0.0), best.1 + step);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let l = (a + b) / 2.0;
    (f(l), l)
}

/// `(c1, c2)` for uniform `[−1, 1]` jumps and mean offspring `rho`, by
/// bisection on the grid conjugate.
pub fn uniform_grid_constants(rho: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (1e-3, 0.999_999);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if uniform_grid_conjugate(mid).0 < rho.ln() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c1 = 0.5 * (lo + hi);
    (c1, uniform_grid_conjugate(c1).1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use brwlab::engine::{Brw, PrunePolicy};

    #[test]
    fn naive_tree_matches_the_engine() {
        let inc = IncrementLaw::isotropic_gaussian(2, 1.0).unwrap();
        let off = OffspringLaw::from_pairs(&[(0, 0.3), (2, 0.7)]).unwrap();
        let brw = Brw::new(&inc, &off, PrunePolicy::off(), vec![1.0, 0.0]).unwrap();
        for rep in 0..20u64 {
            let out = brw.run_generations(6, &mut RandomStream::derive(3, &[rep])).unwrap();
            let tree = NaiveTree::run(6, &inc, &off, &mut RandomStream::derive(3, &[rep]));
            assert_eq!(tree.mismatch(&out.arena), None);
        }
    }

    #[test]
    fn grid_conjugate_at_zero_is_zero() {
        let (v, l) = uniform_grid_conjugate(0.0);
        assert!(v.abs() < 1e-12 && l.abs() < 1e-4);
    }
}
