//! Generation-by-generation BRW simulation with full genealogy.
//!
//! Particles live in a flat, append-only arena in topological order: every
//! generation occupies one contiguous index range and children always come
//! after their parent. Frontier pruning keeps only particles near the
//! running maximum of the pivot coordinate, which is what makes runs of a
//! hundred generations feasible.

use std::io::{self, Write};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laws::{IncrementLaw, OffspringLaw};
use crate::rng::RandomStream;

pub type NodeId = u32;

/// Parent reference of the root.
pub const ROOT_PARENT: NodeId = NodeId::MAX;

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneRecord {
    pub generation: u32,
    pub born: usize,
    pub dropped_window: usize,
    pub dropped_capacity: usize,
}

impl PruneRecord {
    pub fn dropped(&self) -> usize {
        self.dropped_window + self.dropped_capacity
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenealogyArena {
    dimension: usize,
    parent: Vec<NodeId>,
    birth_gen: Vec<u32>,
    displacement: Vec<f64>,
    position: Vec<f64>,
    /// `offsets[g]..offsets[g + 1]` is generation `g`.
    offsets: Vec<usize>,
    prune_log: Vec<PruneRecord>,
    pins: Vec<Vec<NodeId>>,
    compactions: usize,
}

impl GenealogyArena {
    /// Arena holding only the root at the origin.
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            parent: vec![ROOT_PARENT],
            birth_gen: vec![0],
            displacement: vec![0.0; dimension],
            position: vec![0.0; dimension],
            offsets: vec![0, 1],
            prune_log: Vec::new(),
            pins: Vec::new(),
            compactions: 0,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Index of the newest generation.
    pub fn current_generation(&self) -> u32 {
        (self.offsets.len() - 2) as u32
    }

    pub fn generation(&self, g: u32) -> Range<usize> {
        let g = g as usize;
        self.offsets[g]..self.offsets[g + 1]
    }

    pub fn alive(&self) -> Range<usize> {
        self.generation(self.current_generation())
    }

    pub fn alive_count(&self) -> usize {
        self.alive().len()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        (v as usize) < self.len()
    }

    fn check(&self, v: NodeId) -> Result<usize> {
        if self.contains(v) {
            Ok(v as usize)
        } else {
            Err(Error::InvalidNode(v as usize))
        }
    }

    /// `None` for the root.
    pub fn parent(&self, v: NodeId) -> Result<Option<NodeId>> {
        let p = self.parent[self.check(v)?];
        Ok((p != ROOT_PARENT).then_some(p))
    }

    pub(crate) fn parent_raw(&self, v: usize) -> NodeId {
        self.parent[v]
    }

    pub fn birth_gen(&self, v: NodeId) -> Result<u32> {
        Ok(self.birth_gen[self.check(v)?])
    }

    pub fn position(&self, v: NodeId) -> Result<&[f64]> {
        let i = self.check(v)?;
        Ok(&self.position[i * self.dimension..(i + 1) * self.dimension])
    }

    pub(crate) fn position_raw(&self, v: usize) -> &[f64] {
        &self.position[v * self.dimension..(v + 1) * self.dimension]
    }

    pub fn displacement(&self, v: NodeId) -> Result<&[f64]> {
        let i = self.check(v)?;
        Ok(&self.displacement[i * self.dimension..(i + 1) * self.dimension])
    }

    pub fn pivot_coordinate(&self, v: NodeId, pivot: &[f64]) -> Result<f64> {
        Ok(dot(self.position(v)?, pivot))
    }

    /// Ancestor of `v` born in generation `g <= birth_gen(v)`.
    pub fn ancestor_at(&self, v: NodeId, g: u32) -> Result<NodeId> {
        let mut cur = self.check(v)?;
        if g > self.birth_gen[cur] {
            return Err(Error::InvalidArgument(format!(
                "node {v} is born in generation {}, after {g}",
                self.birth_gen[cur]
            )));
        }
        while self.birth_gen[cur] > g {
            cur = self.parent[cur] as usize;
        }
        Ok(cur as NodeId)
    }

    /// Root-to-`v` lineage, root first.
    pub fn lineage(&self, v: NodeId) -> Result<Vec<NodeId>> {
        let mut cur = self.check(v)?;
        let mut path = vec![cur as NodeId];
        while self.parent[cur] != ROOT_PARENT {
            cur = self.parent[cur] as usize;
            path.push(cur as NodeId);
        }
        path.reverse();
        Ok(path)
    }

    pub fn prune_log(&self) -> &[PruneRecord] {
        &self.prune_log
    }

    /// True when no particle was ever discarded, by pruning or compaction.
    pub fn is_exhaustive(&self) -> bool {
        self.compactions == 0 && self.prune_log.iter().all(|r| r.dropped() == 0)
    }

    pub fn compactions(&self) -> usize {
        self.compactions
    }

    /// Per-generation population after pruning.
    pub fn generation_sizes(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Registers a set of nodes that compaction must keep; returns its handle.
    pub fn pin(&mut self, nodes: Vec<NodeId>) -> usize {
        self.pins.push(nodes);
        self.pins.len() - 1
    }

    pub fn pinned(&self, handle: usize) -> &[NodeId] {
        &self.pins[handle]
    }

    /// Appends a new generation. `parents` must be nodes of the current
    /// generation in non-decreasing order; `displacements` is flat, `d` per child.
    pub fn append_generation(&mut self, parents: &[NodeId], displacements: &[f64]) {
        let d = self.dimension;
        assert_eq!(parents.len() * d, displacements.len());
        let g = self.current_generation() + 1;
        let alive = self.alive();
        self.parent.reserve(parents.len());
        self.position.reserve(displacements.len());
        for (k, &p) in parents.iter().enumerate() {
            let pi = p as usize;
            assert!(alive.contains(&pi), "parent {p} is not alive");
            self.parent.push(p);
            self.birth_gen.push(g);
            let disp = &displacements[k * d..(k + 1) * d];
            self.displacement.extend_from_slice(disp);
            for j in 0..d {
                let x = self.position[pi * d + j] + disp[j];
                self.position.push(x);
            }
        }
        self.offsets.push(self.parent.len());
    }

    /// Drops every node that is neither alive, pinned, nor an ancestor of
    /// one of those. Node ids are remapped; order is preserved.
    pub fn compact(&mut self) {
        let n = self.len();
        let mut keep = vec![false; n];
        for i in self.alive() {
            keep[i] = true;
        }
        for pin in &self.pins {
            for &v in pin {
                keep[v as usize] = true;
            }
        }
        for i in (0..n).rev() {
            if keep[i] && self.parent[i] != ROOT_PARENT {
                keep[self.parent[i] as usize] = true;
            }
        }
        let d = self.dimension;
        let mut remap = vec![ROOT_PARENT; n];
        let mut next = 0usize;
        for i in 0..n {
            if keep[i] {
                remap[i] = next as NodeId;
                if next != i {
                    self.parent[next] = match self.parent[i] {
                        ROOT_PARENT => ROOT_PARENT,
                        p => remap[p as usize],
                    };
                    self.birth_gen[next] = self.birth_gen[i];
                    self.displacement.copy_within(i * d..(i + 1) * d, next * d);
                    self.position.copy_within(i * d..(i + 1) * d, next * d);
                } else if self.parent[i] != ROOT_PARENT {
                    self.parent[next] = remap[self.parent[i] as usize];
                }
                next += 1;
            }
        }
        self.parent.truncate(next);
        self.birth_gen.truncate(next);
        self.displacement.truncate(next * d);
        self.position.truncate(next * d);
        let generations = self.offsets.len() - 1;
        let mut offsets = vec![0usize; generations + 1];
        for &g in &self.birth_gen {
            offsets[g as usize + 1] += 1;
        }
        for g in 0..generations {
            offsets[g + 1] += offsets[g];
        }
        self.offsets = offsets;
        for pin in self.pins.iter_mut() {
            for v in pin.iter_mut() {
                *v = remap[*v as usize];
            }
        }
        self.compactions += 1;
    }

    /// Columns `node_id,parent_id,birth_gen,pos_0..pos_{d-1}`; the root has
    /// parent `-1`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "node_id,parent_id,birth_gen")?;
        for j in 0..self.dimension {
            write!(w, ",pos_{j}")?;
        }
        writeln!(w)?;
        for i in 0..self.len() {
            let p = self.parent[i];
            if p == ROOT_PARENT {
                write!(w, "{i},-1,{}", self.birth_gen[i])?;
            } else {
                write!(w, "{i},{p},{}", self.birth_gen[i])?;
            }
            for x in self.position_raw(i) {
                write!(w, ",{x}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneMode {
    Off,
    Capacity,
    Window,
    Both,
}

impl PruneMode {
    fn window(self) -> bool {
        matches!(self, PruneMode::Window | PruneMode::Both)
    }

    fn capacity(self) -> bool {
        matches!(self, PruneMode::Capacity | PruneMode::Both)
    }
}

pub const DEFAULT_CAPACITY: usize = 200_000;
pub const DEFAULT_HARD_BOUND: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrunePolicy {
    pub mode: PruneMode,
    /// Particles kept per generation.
    pub capacity: usize,
    /// Constant part of the window below the generation maximum.
    pub window_w0: f64,
    /// Tilt setting the logarithmic growth of the window.
    pub tilt: f64,
    /// Compact the arena once it holds more nodes than this. Ignored in mode `Off`.
    pub compact_above: Option<usize>,
    /// Largest generation ever staged before failing.
    pub hard_bound: usize,
}

impl PrunePolicy {
    pub fn off() -> Self {
        Self {
            mode: PruneMode::Off,
            capacity: usize::MAX,
            window_w0: f64::INFINITY,
            tilt: 1.0,
            compact_above: None,
            hard_bound: DEFAULT_HARD_BOUND,
        }
    }

    /// Capacity plus window, with `w0 = 15 / tilt`.
    pub fn frontier(tilt: f64, capacity: usize) -> Self {
        Self {
            mode: PruneMode::Both,
            capacity,
            window_w0: 15.0 / tilt,
            tilt,
            compact_above: Some(capacity.saturating_mul(8).max(1 << 20)),
            hard_bound: DEFAULT_HARD_BOUND,
        }
    }

    /// `w0 + (3 / tilt) log(n + 2)`.
    pub fn window(&self, n: u32) -> f64 {
        self.window_w0 + 3.0 / self.tilt * (n as f64 + 2.0).ln()
    }
}

/// Closed ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Target {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidArgument(format!("target radius {radius} must be positive")));
        }
        Ok(Self { center, radius })
    }

    /// Unit ball around `x e1`.
    pub fn on_axis(dimension: usize, x: f64) -> Self {
        let mut center = vec![0.0; dimension];
        center[0] = x;
        Self { center, radius: 1.0 }
    }

    #[inline]
    pub fn contains(&self, p: &[f64]) -> bool {
        let r2: f64 = p.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        r2 <= self.radius * self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Survived,
    Extinct,
    HorizonReached,
    TargetHit,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub tau: Option<u32>,
    pub arena: GenealogyArena,
    /// Newborns of generation `tau` inside the target.
    pub hitters: Vec<NodeId>,
    /// Extinct attempts discarded before this one.
    pub restarts: usize,
}

impl RunOutcome {
    pub fn prune_log(&self) -> &[PruneRecord] {
        self.arena.prune_log()
    }
}

/// First passage into several targets within one run.
#[derive(Debug, Clone)]
pub struct MultiOutcome {
    pub status: RunStatus,
    /// Per target; `None` when not reached.
    pub taus: Vec<Option<u32>>,
    pub arena: GenealogyArena,
    /// Pin handles of the hitter sets, per target.
    pub hitter_pins: Vec<Option<usize>>,
    pub restarts: usize,
}

impl MultiOutcome {
    pub fn hitters(&self, target: usize) -> &[NodeId] {
        self.hitter_pins[target].map_or(&[], |h| self.arena.pinned(h))
    }
}

pub trait Outcome {
    fn is_extinct(&self) -> bool;
    fn set_restarts(&mut self, restarts: usize);
}

impl Outcome for RunOutcome {
    fn is_extinct(&self) -> bool {
        self.status == RunStatus::Extinct
    }

    fn set_restarts(&mut self, restarts: usize) {
        self.restarts = restarts;
    }
}

impl Outcome for MultiOutcome {
    fn is_extinct(&self) -> bool {
        self.status == RunStatus::Extinct
    }

    fn set_restarts(&mut self, restarts: usize) {
        self.restarts = restarts;
    }
}

/// Children staged before pruning.
#[derive(Default)]
struct Staging {
    parents: Vec<NodeId>,
    displacements: Vec<f64>,
    positions: Vec<f64>,
}

/// Result of one generation step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub born: usize,
    pub kept: usize,
    /// Per target, kept newborns inside it (empty for targets already reached).
    pub hits: Vec<Vec<NodeId>>,
}

/// A BRW model: laws, pruning policy and the pivot direction.
#[derive(Debug, Clone)]
pub struct Brw<'a> {
    pub increment: &'a IncrementLaw,
    pub offspring: &'a OffspringLaw,
    pub policy: PrunePolicy,
    pub pivot: Vec<f64>,
}

impl<'a> Brw<'a> {
    pub fn new(
        increment: &'a IncrementLaw,
        offspring: &'a OffspringLaw,
        policy: PrunePolicy,
        pivot: Vec<f64>,
    ) -> Result<Self> {
        if pivot.len() != increment.dimension() {
            return Err(Error::InvalidArgument("pivot dimension does not match the law".into()));
        }
        let n = dot(&pivot, &pivot).sqrt();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("pivot has norm {n}, expected 1")));
        }
        Ok(Self {
            increment,
            offspring,
            policy,
            pivot,
        })
    }

    pub fn dimension(&self) -> usize {
        self.increment.dimension()
    }

    /// Advances one generation without targets.
    pub fn step(&self, arena: &mut GenealogyArena, rng: &mut RandomStream) -> Result<StepReport> {
        self.step_with_targets(arena, rng, &[], &[])
    }

    /// Advances one generation. Newborns inside any target flagged `active`
    /// are reported and are exempt from pruning.
    pub fn step_with_targets(
        &self,
        arena: &mut GenealogyArena,
        rng: &mut RandomStream,
        targets: &[Target],
        active: &[bool],
    ) -> Result<StepReport> {
        let d = self.dimension();
        let generation = arena.current_generation() + 1;
        let alive = arena.alive();
        if alive.is_empty() {
            return Err(Error::EmptyGeneration(arena.current_generation()));
        }
        let mut st = Staging::default();
        let mut jump = vec![0.0; d];
        for p in alive {
            let k = self.offspring.sample(rng);
            if st.parents.len() + k > self.policy.hard_bound {
                return Err(Error::CapacityExceeded {
                    requested: st.parents.len() + k,
                    bound: self.policy.hard_bound,
                });
            }
            let base = arena.position_raw(p);
            for _ in 0..k {
                self.increment.sample_into(rng, &mut jump);
                st.parents.push(p as NodeId);
                st.displacements.extend_from_slice(&jump);
                st.positions.extend(base.iter().zip(&jump).map(|(a, b)| a + b));
            }
        }
        let born = st.parents.len();

        let mut protected = vec![false; born];
        let mut hit_local: Vec<Vec<usize>> = vec![Vec::new(); targets.len()];
        for (t, target) in targets.iter().enumerate() {
            if !active.get(t).copied().unwrap_or(false) {
                continue;
            }
            for i in 0..born {
                if target.contains(&st.positions[i * d..(i + 1) * d]) {
                    hit_local[t].push(i);
                    protected[i] = true;
                }
            }
        }

        let keep = self.select(generation, &st, &protected);
        let (mut dropped_window, mut dropped_capacity) = (0, 0);
        if let Some((ref mask, w, c)) = keep {
            dropped_window = w;
            dropped_capacity = c;
            let mut j = 0;
            for i in 0..born {
                if mask[i] {
                    st.parents[j] = st.parents[i];
                    st.displacements.copy_within(i * d..(i + 1) * d, j * d);
                    j += 1;
                }
            }
            st.parents.truncate(j);
            st.displacements.truncate(j * d);
        }
        let first = arena.len();
        arena.append_generation(&st.parents, &st.displacements);
        arena.prune_log.push(PruneRecord {
            generation,
            born,
            dropped_window,
            dropped_capacity,
        });

        // staged index -> node id
        let rank: Option<Vec<usize>> = keep.as_ref().map(|(mask, _, _)| {
            let mut r = Vec::with_capacity(born);
            let mut c = 0;
            for &m in mask {
                r.push(c);
                c += m as usize;
            }
            r
        });
        let hits: Vec<Vec<NodeId>> = hit_local
            .iter()
            .map(|h| {
                h.iter()
                    .map(|&i| (first + rank.as_ref().map_or(i, |r| r[i])) as NodeId)
                    .collect()
            })
            .collect();

        if self.policy.mode != PruneMode::Off {
            if let Some(limit) = self.policy.compact_above {
                if arena.len() > limit {
                    // pin the fresh hits so the caller gets remapped ids
                    let handles: Vec<usize> = hits.iter().map(|h| arena.pin(h.clone())).collect();
                    arena.compact();
                    let hits = handles.iter().map(|&h| arena.pinned(h).to_vec()).collect();
                    for _ in &handles {
                        arena.pins.pop();
                    }
                    return Ok(StepReport {
                        born,
                        kept: arena.alive_count(),
                        hits,
                    });
                }
            }
        }
        Ok(StepReport {
            born,
            kept: arena.alive_count(),
            hits,
        })
    }

    /// Keep-mask and drop counts (window, capacity), or `None` if nothing is dropped.
    fn select(&self, generation: u32, st: &Staging, protected: &[bool]) -> Option<(Vec<bool>, usize, usize)> {
        let mode = self.policy.mode;
        let born = st.parents.len();
        if mode == PruneMode::Off || born == 0 {
            return None;
        }
        let d = self.dimension();
        let pivot: Vec<f64> = (0..born).map(|i| dot(&st.positions[i * d..(i + 1) * d], &self.pivot)).collect();
        let mut top = 0;
        for i in 1..born {
            if pivot[i] > pivot[top] {
                top = i;
            }
        }
        let mut keep = vec![true; born];
        let mut dropped_window = 0;
        if mode.window() {
            let floor = pivot[top] - self.policy.window(generation);
            for i in 0..born {
                if pivot[i] < floor && !protected[i] {
                    keep[i] = false;
                    dropped_window += 1;
                }
            }
        }
        let mut dropped_capacity = 0;
        let kept = born - dropped_window;
        if mode.capacity() && kept > self.policy.capacity {
            let mut forced = 0;
            let mut pool = Vec::with_capacity(kept);
            for i in 0..born {
                if !keep[i] {
                    continue;
                }
                if protected[i] || i == top {
                    forced += 1;
                } else {
                    pool.push(i);
                }
            }
            let room = self.policy.capacity.saturating_sub(forced);
            if room < pool.len() {
                let order = |a: &usize, b: &usize| pivot[*b].total_cmp(&pivot[*a]).then(a.cmp(b));
                if room > 0 {
                    pool.select_nth_unstable_by(room - 1, order);
                }
                for &i in &pool[room..] {
                    keep[i] = false;
                }
                dropped_capacity = pool.len() - room;
            }
        }
        if dropped_window + dropped_capacity == 0 {
            None
        } else {
            Some((keep, dropped_window, dropped_capacity))
        }
    }

    /// Runs exactly `n` generations (or until extinction).
    pub fn run_generations(&self, n: u32, rng: &mut RandomStream) -> Result<RunOutcome> {
        let mut arena = GenealogyArena::new(self.dimension());
        for _ in 0..n {
            self.step(&mut arena, rng)?;
            if arena.alive_count() == 0 {
                return Ok(RunOutcome {
                    status: RunStatus::Extinct,
                    tau: None,
                    arena,
                    hitters: Vec::new(),
                    restarts: 0,
                });
            }
        }
        Ok(RunOutcome {
            status: RunStatus::Survived,
            tau: None,
            arena,
            hitters: Vec::new(),
            restarts: 0,
        })
    }

    /// Steps until a newborn enters `target`, extinction, or `horizon`.
    pub fn run_first_passage(&self, target: &Target, horizon: u32, rng: &mut RandomStream) -> Result<RunOutcome> {
        let m = self.run_first_passage_multi(std::slice::from_ref(target), horizon, rng)?;
        let hitters = m.hitters(0).to_vec();
        Ok(RunOutcome {
            status: m.status,
            tau: m.taus[0],
            arena: m.arena,
            hitters,
            restarts: m.restarts,
        })
    }

    /// Records the first passage into every target; stops once all are
    /// reached, at extinction, or at `horizon`.
    pub fn run_first_passage_multi(
        &self,
        targets: &[Target],
        horizon: u32,
        rng: &mut RandomStream,
    ) -> Result<MultiOutcome> {
        let mut arena = GenealogyArena::new(self.dimension());
        let mut taus = vec![None; targets.len()];
        let mut pins = vec![None; targets.len()];
        for (t, target) in targets.iter().enumerate() {
            if target.contains(arena.position_raw(0)) {
                taus[t] = Some(0);
                pins[t] = Some(arena.pin(vec![0]));
            }
        }
        let done = |taus: &[Option<u32>]| taus.iter().all(Option::is_some);
        let mut status = RunStatus::HorizonReached;
        if done(&taus) {
            status = RunStatus::TargetHit;
        }
        while status == RunStatus::HorizonReached && arena.current_generation() < horizon {
            let active: Vec<bool> = taus.iter().map(Option::is_none).collect();
            let report = self.step_with_targets(&mut arena, rng, targets, &active)?;
            let g = arena.current_generation();
            for (t, hits) in report.hits.into_iter().enumerate() {
                if !hits.is_empty() {
                    taus[t] = Some(g);
                    pins[t] = Some(arena.pin(hits));
                }
            }
            if done(&taus) {
                status = RunStatus::TargetHit;
            } else if arena.alive_count() == 0 {
                status = RunStatus::Extinct;
            }
        }
        Ok(MultiOutcome {
            status,
            taus,
            arena,
            hitter_pins: pins,
            restarts: 0,
        })
    }
}

/// Rejection sampling of survival: runs `run` on substreams
/// `(seed, path.., attempt)` until an attempt does not go extinct.
pub fn run_conditioned_on_survival<T, F>(seed: u64, path: &[u64], max_restarts: usize, mut run: F) -> Result<T>
where
    T: Outcome,
    F: FnMut(&mut RandomStream) -> Result<T>,
{
    let mut labels = path.to_vec();
    labels.push(0);
    for attempt in 0..=max_restarts {
        *labels.last_mut().unwrap() = attempt as u64;
        let mut rng = RandomStream::derive(seed, &labels);
        let mut out = run(&mut rng)?;
        if !out.is_extinct() {
            out.set_restarts(attempt);
            return Ok(out);
        }
    }
    Err(Error::RestartBudgetExhausted {
        attempts: max_restarts + 1,
    })
}

/// Largest pivot coordinate among alive particles; ties go to the lowest index.
pub fn max_position(arena: &GenealogyArena, pivot: &[f64]) -> Result<(f64, NodeId)> {
    let alive = arena.alive();
    if alive.is_empty() {
        return Err(Error::EmptyGeneration(arena.current_generation()));
    }
    let mut best = (f64::NEG_INFINITY, alive.start);
    for i in alive {
        let v = dot(arena.position_raw(i), pivot);
        if v > best.0 {
            best = (v, i);
        }
    }
    Ok((best.0, best.1 as NodeId))
}

/// Alive particles with pivot coordinate at least `level`, by index.
pub fn frontier_set(arena: &GenealogyArena, pivot: &[f64], level: f64) -> Vec<NodeId> {
    arena
        .alive()
        .filter(|&i| dot(arena.position_raw(i), pivot) >= level)
        .map(|i| i as NodeId)
        .collect()
}
