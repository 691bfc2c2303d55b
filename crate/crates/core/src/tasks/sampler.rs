use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::catalog::{CountRange, TaskId};
use super::goal::{GoalCondition, GoalTerm, PlaceTarget};
use super::selector::{AbsoluteArea, ObjectSelector, Relation};
use crate::world::{
    BlockSize, Color, ObjectId, ObjectInstance, ObjectKind, Pose, Rect, SceneState, BIG_BLOCK_EDGE, BOWL_DIAMETER,
    ZONE_EDGE,
};

/// Whole-scene resampling attempts before giving up.
pub const SCENE_ATTEMPTS: u32 = 200;
const PLACE_ATTEMPTS: u32 = 400;
/// Minimum clearance between sampled footprints.
const GAP: f64 = 0.02;
/// Center spacing of pyramid base blocks.
const PYRAMID_PITCH: f64 = 0.046;

/// A sampled episode start: scene, instruction and goal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub task: TaskId,
    pub scene: SceneState,
    pub goal_text: String,
    pub goal: GoalCondition,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("sampling {task} failed after {attempts} attempts: {reason}")]
pub struct SamplerError {
    pub task: TaskId,
    pub attempts: u32,
    pub reason: String,
}

struct Crowded(String);

struct Builder<'r, R: Rng + ?Sized> {
    bounds: Rect,
    objects: Vec<ObjectInstance>,
    avoid: Vec<Rect>,
    reserved: Vec<Rect>,
    rng: &'r mut R,
}

impl<'r, R: Rng + ?Sized> Builder<'r, R> {
    fn count(&mut self, r: CountRange) -> usize {
        self.rng.random_range(r.min..=r.max) as usize
    }

    fn colors(&mut self, n: usize) -> Vec<Color> {
        let mut all = Color::ALL.to_vec();
        all.shuffle(self.rng);
        all.truncate(n);
        all
    }

    fn any_color(&mut self) -> Color {
        Color::ALL[self.rng.random_range(0..Color::ALL.len())]
    }

    fn size(&mut self) -> BlockSize {
        if self.rng.random_bool(0.5) {
            BlockSize::Big
        } else {
            BlockSize::Small
        }
    }

    fn yaw(&mut self) -> f64 {
        self.rng.random_range(-PI..PI)
    }

    fn area(&mut self) -> AbsoluteArea {
        AbsoluteArea::ALL[self.rng.random_range(0..4)]
    }

    fn next_id(&self) -> ObjectId {
        ObjectId(self.objects.len() as u32)
    }

    fn free_spot(&mut self, w: f64, h: f64, within: Rect) -> Result<(f64, f64), Crowded> {
        let (lx, hx) = (within.x0 + w / 2.0, within.x1 - w / 2.0);
        let (ly, hy) = (within.y0 + h / 2.0, within.y1 - h / 2.0);
        if lx > hx || ly > hy {
            return Err(Crowded(format!("region {within:?} too small")));
        }
        for _ in 0..PLACE_ATTEMPTS {
            let x = if lx < hx { self.rng.random_range(lx..hx) } else { lx };
            let y = if ly < hy { self.rng.random_range(ly..hy) } else { ly };
            let r = Rect::centered(x, y, w + GAP, h + GAP);
            let clash = self.objects.iter().any(|o| o.footprint().intersection_area(&r) > 0.0)
                || self.avoid.iter().any(|a| a.intersection_area(&r) > 0.0);
            if !clash {
                return Ok((x, y));
            }
        }
        Err(Crowded(format!("no free spot for {w}x{h} in {within:?}")))
    }

    fn block_in(&mut self, color: Color, size: BlockSize, within: Rect) -> Result<ObjectId, Crowded> {
        let (x, y) = self.free_spot(size.edge(), size.edge(), within)?;
        let yaw = self.yaw();
        let id = self.next_id();
        self.objects.push(ObjectInstance::block(id, color, size, Pose::new(x, y, yaw)));
        Ok(id)
    }

    fn block(&mut self, color: Color, size: BlockSize) -> Result<ObjectId, Crowded> {
        let b = self.bounds;
        self.block_in(color, size, b)
    }

    fn block_at(&mut self, color: Color, pose: Pose, support: Option<ObjectId>) -> ObjectId {
        let id = self.next_id();
        let mut o = ObjectInstance::block(id, color, BlockSize::Big, pose);
        o.supported_by = support;
        self.objects.push(o);
        id
    }

    fn stack_on(&mut self, color: Color, size: BlockSize, base: ObjectId) -> ObjectId {
        let pose = self.objects[base.0 as usize].pose;
        let id = self.next_id();
        let mut o = ObjectInstance::block(id, color, size, pose);
        o.supported_by = Some(base);
        self.objects.push(o);
        id
    }

    fn container(&mut self, kind: ObjectKind, color: Color, within: Rect) -> Result<ObjectId, Crowded> {
        let e = if kind == ObjectKind::Bowl { BOWL_DIAMETER } else { ZONE_EDGE };
        let (x, y) = self.free_spot(e, e, within)?;
        let id = self.next_id();
        self.objects.push(match kind {
            ObjectKind::Bowl => ObjectInstance::bowl(id, color, x, y),
            _ => ObjectInstance::zone(id, color, x, y),
        });
        Ok(id)
    }

    fn bowl(&mut self, color: Color) -> Result<ObjectId, Crowded> {
        let b = self.bounds;
        self.container(ObjectKind::Bowl, color, b)
    }

    fn zone(&mut self, color: Color) -> Result<ObjectId, Crowded> {
        let b = self.bounds;
        self.container(ObjectKind::Zone, color, b)
    }

    fn reserve(&mut self, r: Rect) {
        self.avoid.push(r);
        self.reserved.push(r);
    }

    fn snapshot(&self) -> SceneState {
        SceneState::new(self.objects.clone())
    }

    fn phrase(&self, id: ObjectId, with_size: bool) -> String {
        ObjectSelector::describe(&self.snapshot(), id, with_size).phrase()
    }

    fn color_of(&self, id: ObjectId) -> Color {
        self.objects[id.0 as usize].color
    }
}

fn place(object: ObjectId, target: PlaceTarget) -> GoalTerm {
    GoalTerm::Place { object, target }
}

fn chain(ids: &[ObjectId]) -> Vec<GoalTerm> {
    ids.windows(2)
        .map(|w| place(w[1], PlaceTarget::OnTopOf { base: w[0] }))
        .collect()
}

/// Uniform derangement of `0..n` (n ≥ 2) by rejection.
pub fn derangement<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    assert!(n >= 2, "derangement needs at least two elements");
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        p.shuffle(rng);
        if p.iter().enumerate().all(|(i, &j)| i != j) {
            return p;
        }
    }
}

/// Samples a solvable scene, its instruction and goal for `task`.
pub fn sample_task<R: Rng + ?Sized>(task: TaskId, bounds: &Rect, rng: &mut R) -> Result<TaskInstance, SamplerError> {
    let mut reason = String::new();
    for _ in 0..SCENE_ATTEMPTS {
        let mut b = Builder {
            bounds: *bounds,
            objects: Vec::new(),
            avoid: Vec::new(),
            reserved: Vec::new(),
            rng,
        };
        let (terms, goal_text) = match build(task, &mut b) {
            Ok(v) => v,
            Err(Crowded(msg)) => {
                reason = msg;
                continue;
            }
        };
        let scene = SceneState::new(b.objects);
        let mut goal = GoalCondition::new(terms, *bounds);
        goal.reserved = b.reserved;
        if let Err(e) = scene.validate(bounds).and_then(|_| goal.validate(&scene)) {
            reason = e.to_string();
            continue;
        }
        if goal.satisfied_count(&scene) > 0 {
            reason = "goal partially satisfied at start".to_string();
            continue;
        }
        return Ok(TaskInstance {
            task,
            scene,
            goal_text,
            goal,
        });
    }
    Err(SamplerError {
        task,
        attempts: SCENE_ATTEMPTS,
        reason,
    })
}

fn build<R: Rng + ?Sized>(task: TaskId, b: &mut Builder<'_, R>) -> Result<(Vec<GoalTerm>, String), Crowded> {
    use TaskId::*;
    let params = task.sampler_params();
    let template = task.instruction_template();
    match task {
        PickAndPlacePrimitive => {
            let nb = b.count(params.blocks);
            let nbowl = b.count(params.bowls);
            let nzone = b.count(params.zones);
            let colors = b.colors(nb + nbowl + nzone);
            let mut cols = colors.into_iter();
            let mut containers = Vec::new();
            for _ in 0..nbowl {
                containers.push(b.bowl(cols.next().unwrap())?);
            }
            for _ in 0..nzone {
                containers.push(b.zone(cols.next().unwrap())?);
            }
            let mut blocks = Vec::new();
            for _ in 0..nb {
                let s = b.size();
                blocks.push(b.block(cols.next().unwrap(), s)?);
            }
            let src = blocks[b.rng.random_range(0..blocks.len())];
            let others: Vec<ObjectId> = blocks.iter().chain(&containers).copied().filter(|&i| i != src).collect();
            let tgt = others[b.rng.random_range(0..others.len())];
            let target = if b.objects[tgt.0 as usize].is_block() {
                PlaceTarget::OnTopOf { base: tgt }
            } else {
                PlaceTarget::InRegion { region: tgt }
            };
            let text = format!("Put the {} on the {}.", b.phrase(src, false), b.phrase(tgt, false));
            Ok((vec![place(src, target)], text))
        }
        PickAndPlacePrimitiveWithSize => {
            let nb = b.count(params.blocks);
            let colors = b.colors(3);
            let mut blocks = Vec::new();
            for &c in &colors[..2] {
                for s in BlockSize::ALL {
                    blocks.push(b.block(c, s)?);
                }
            }
            for _ in 4..nb {
                let s = b.size();
                blocks.push(b.block(colors[2], s)?);
            }
            for _ in 0..b.count(params.bowls) {
                let c = b.any_color();
                b.bowl(c)?;
            }
            for _ in 0..b.count(params.zones) {
                let c = b.any_color();
                b.zone(c)?;
            }
            blocks.shuffle(b.rng);
            let (src, tgt) = (blocks[0], blocks[1]);
            let text = format!("Put the {} on the {}.", b.phrase(src, true), b.phrase(tgt, true));
            Ok((vec![place(src, PlaceTarget::OnTopOf { base: tgt })], text))
        }
        PickAndPlacePrimitiveWithAbsolutePosition => {
            let area = b.area();
            b.reserve(area.rect(&b.bounds));
            let nb = b.count(params.blocks);
            let cols = b.colors(nb + 2);
            let mut blocks = Vec::new();
            for &c in &cols[..nb] {
                let s = b.size();
                blocks.push(b.block(c, s)?);
            }
            if b.count(params.bowls) > 0 {
                b.bowl(cols[nb])?;
            }
            if b.count(params.zones) > 0 {
                b.zone(cols[nb + 1])?;
            }
            let src = blocks[b.rng.random_range(0..blocks.len())];
            let text = format!("Put the {} on the {} area.", b.phrase(src, false), area);
            Ok((vec![place(src, PlaceTarget::InArea { area })], text))
        }
        PutBlockIntoMatchingBowl => {
            let nbowl = b.count(params.bowls);
            let nb = b.rng.random_range(params.blocks.min.max(nbowl as u32)..=params.blocks.max) as usize;
            let cols = b.colors(nb);
            let mut terms = Vec::new();
            for &c in &cols[..nbowl] {
                let bowl = b.bowl(c)?;
                let s = b.size();
                let blk = b.block(c, s)?;
                terms.push(place(blk, PlaceTarget::InRegion { region: bowl }));
            }
            for &c in &cols[nbowl..] {
                let s = b.size();
                b.block(c, s)?;
            }
            terms.shuffle(b.rng);
            Ok((terms, template.to_string()))
        }
        PutBlockIntoMismatchingBowl | PutBlockIntoMismatchingZone => {
            let kind = if task == PutBlockIntoMismatchingBowl { ObjectKind::Bowl } else { ObjectKind::Zone };
            let range = if kind == ObjectKind::Bowl { params.bowls } else { params.zones };
            let n = b.count(range);
            let cols = b.colors(n);
            let mut regions = Vec::new();
            let mut blocks = Vec::new();
            for &c in &cols {
                let bb = b.bounds;
                regions.push(b.container(kind, c, bb)?);
            }
            for &c in &cols {
                let s = b.size();
                blocks.push(b.block(c, s)?);
            }
            let sigma = derangement(n, b.rng);
            let terms = blocks
                .iter()
                .zip(&sigma)
                .map(|(&blk, &j)| place(blk, PlaceTarget::InRegion { region: regions[j] }))
                .collect();
            Ok((terms, template.to_string()))
        }
        StackSmallerOverBiggerWithSameColor => {
            let pairs = b.count(params.blocks) / 2;
            let cols = b.colors(pairs);
            let mut terms = Vec::new();
            for c in cols {
                let big = b.block(c, BlockSize::Big)?;
                let small = b.block(c, BlockSize::Small)?;
                terms.push(place(small, PlaceTarget::OnTopOf { base: big }));
            }
            Ok((terms, template.to_string()))
        }
        StackSmallerOverBiggerWithSameColorInSameColorZone | StackBiggerOverSmallerWithSameColorInSameColorZone => {
            let pairs = b.count(params.blocks) / 2;
            let cols = b.colors(pairs);
            let mut terms = Vec::new();
            let big_first = task == StackSmallerOverBiggerWithSameColorInSameColorZone;
            for c in cols {
                let zone = b.zone(c)?;
                let big = b.block(c, BlockSize::Big)?;
                let small = b.block(c, BlockSize::Small)?;
                let (lower, upper) = if big_first { (big, small) } else { (small, big) };
                terms.push(place(lower, PlaceTarget::InRegion { region: zone }));
                terms.push(place(upper, PlaceTarget::OnTopOf { base: lower }));
            }
            Ok((terms, template.to_string()))
        }
        StackBlockInAbsoluteArea => {
            let area = b.area();
            b.reserve(area.rect(&b.bounds));
            let n = b.count(params.blocks);
            let mut ids = Vec::new();
            for _ in 0..n {
                let (c, s) = (b.any_color(), b.size());
                ids.push(b.block(c, s)?);
            }
            ids.shuffle(b.rng);
            let mut terms = vec![place(ids[0], PlaceTarget::InArea { area })];
            terms.extend(chain(&ids));
            Ok((terms, template.replace("[ABS_POS]", area.as_str())))
        }
        PutEvenBlocksInSameColorZone => {
            let nz = b.count(params.zones);
            let cols = b.colors(nz);
            let counts = loop {
                let c: Vec<usize> = (0..nz).map(|_| b.rng.random_range(1..=4)).collect();
                let total: usize = c.iter().sum();
                if (params.blocks.min as usize..=params.blocks.max as usize).contains(&total)
                    && c.iter().any(|&k| k % 2 == 0)
                {
                    break c;
                }
            };
            let zones: Vec<ObjectId> = cols.iter().map(|&c| b.zone(c)).collect::<Result<_, _>>()?;
            let mut terms = Vec::new();
            for ((&c, &k), &z) in cols.iter().zip(&counts).zip(&zones) {
                for _ in 0..k {
                    let s = b.size();
                    let blk = b.block(c, s)?;
                    if k % 2 == 0 {
                        terms.push(place(blk, PlaceTarget::InRegion { region: z }));
                    }
                }
            }
            terms.shuffle(b.rng);
            Ok((terms, template.to_string()))
        }
        StackBlocksOfSameSize => {
            let n = b.count(params.blocks);
            let nbig = b.rng.random_range(2..=n - 2);
            let cols = b.colors(n);
            let mut big = Vec::new();
            let mut small = Vec::new();
            for (i, &c) in cols.iter().enumerate() {
                if i < nbig {
                    big.push(b.block(c, BlockSize::Big)?);
                } else {
                    small.push(b.block(c, BlockSize::Small)?);
                }
            }
            big.shuffle(b.rng);
            small.shuffle(b.rng);
            let mut terms = chain(&big);
            terms.extend(chain(&small));
            Ok((terms, template.to_string()))
        }
        StackBlocksWithAlternateColor => {
            let n = b.count(params.blocks);
            let cols = b.colors(2);
            let mut groups = [Vec::new(), Vec::new()];
            for i in 0..n {
                let s = b.size();
                groups[i % 2].push(b.block(cols[i % 2], s)?);
            }
            for g in groups.iter_mut() {
                g.shuffle(b.rng);
            }
            let order: Vec<ObjectId> = (0..n).map(|i| groups[i % 2][i / 2]).collect();
            Ok((chain(&order), template.to_string()))
        }
        StackBlocksOfSameColor => {
            let ncol = b.rng.random_range(2..=3usize);
            let counts = loop {
                let c: Vec<usize> = (0..ncol).map(|_| b.rng.random_range(2..=3)).collect();
                let t: usize = c.iter().sum();
                if (params.blocks.min as usize..=params.blocks.max as usize).contains(&t) {
                    break c;
                }
            };
            let cols = b.colors(ncol);
            let mut terms = Vec::new();
            for (&c, &k) in cols.iter().zip(&counts) {
                let mut ids = Vec::new();
                for _ in 0..k {
                    let s = b.size();
                    ids.push(b.block(c, s)?);
                }
                ids.shuffle(b.rng);
                terms.extend(chain(&ids));
            }
            Ok((terms, template.to_string()))
        }
        MoveBlocksBetweenAbsolutePositions
        | MoveBlocksBetweenAbsolutePositionsBySize
        | MoveBlocksBetweenAbsolutePositionsByColor => {
            let mut areas = AbsoluteArea::ALL.to_vec();
            areas.shuffle(b.rng);
            let (from, to) = (areas[0], areas[1]);
            let (from_rect, to_rect) = (from.rect(&b.bounds), to.rect(&b.bounds));
            b.reserve(to_rect);
            let n = b.count(params.blocks);
            let key_size = b.size();
            let key_color = b.any_color();
            let movers = b.rng.random_range(1..=3.min(n - 1));
            let in_from = (movers + b.rng.random_range(0..=1)).min(n - 1);
            let mut terms = Vec::new();
            for i in 0..in_from {
                let mover = i < movers;
                let (c, s) = match task {
                    MoveBlocksBetweenAbsolutePositionsBySize => {
                        let s = if mover { key_size } else { other_size(key_size) };
                        (b.any_color(), s)
                    }
                    MoveBlocksBetweenAbsolutePositionsByColor => {
                        let c = if mover { key_color } else { other_color(key_color, b) };
                        (c, b.size())
                    }
                    _ => (b.any_color(), b.size()),
                };
                let id = b.block_in(c, s, from_rect)?;
                let goal_object = match task {
                    MoveBlocksBetweenAbsolutePositions => true,
                    _ => mover,
                };
                if goal_object {
                    terms.push(place(id, PlaceTarget::InArea { area: to }));
                }
            }
            b.avoid.push(from_rect);
            for _ in in_from..n {
                let (c, s) = (b.any_color(), b.size());
                b.block(c, s)?;
            }
            terms.shuffle(b.rng);
            let text = template
                .replacen("[SIZE]", key_size.as_str(), 1)
                .replacen("[COLOR]", key_color.as_str(), 1)
                .replacen("[ABS_POS]", from.as_str(), 1)
                .replacen("[ABS_POS]", to.as_str(), 1);
            Ok((terms, text))
        }
        PutHiddenBlocksInTwoLayerTowersIntoMatchingBowls | PutHiddenBlocksInTwoLayerTowersIntoMismatchingBowls => {
            let towers = b.count(params.bowls);
            let cols = b.colors(towers);
            let mut bottoms = Vec::new();
            let mut tops = Vec::new();
            for &c in &cols {
                let bottom = b.block(c, BlockSize::Big)?;
                let (tc, ts) = (b.any_color(), b.size());
                tops.push(b.stack_on(tc, ts, bottom));
                bottoms.push(bottom);
            }
            let bowls: Vec<ObjectId> = cols.iter().map(|&c| b.bowl(c)).collect::<Result<_, _>>()?;
            let assign: Vec<usize> = if task == PutHiddenBlocksInTwoLayerTowersIntoMatchingBowls {
                (0..towers).collect()
            } else {
                derangement(towers, b.rng)
            };
            let mut terms: Vec<GoalTerm> = bottoms
                .iter()
                .zip(&assign)
                .map(|(&blk, &j)| place(blk, PlaceTarget::InRegion { region: bowls[j] }))
                .collect();
            terms.extend(tops.iter().zip(&bottoms).map(|(&t, &h)| GoalTerm::Clear {
                occluder: t,
                hidden: vec![h],
            }));
            Ok((terms, template.to_string()))
        }
        PutHiddenBlocksInThreeLayerTowersIntoMatchingBowls => {
            let cols = b.colors(4);
            let mut terms = Vec::new();
            let mut clears = Vec::new();
            for pair in cols.chunks(2) {
                let bottom = b.block(pair[0], BlockSize::Big)?;
                let middle = b.stack_on(pair[1], BlockSize::Big, bottom);
                let (tc, ts) = (b.any_color(), b.size());
                let top = b.stack_on(tc, ts, middle);
                for &h in &[bottom, middle] {
                    let c = b.color_of(h);
                    let bowl = b.bowl(c)?;
                    terms.push(place(h, PlaceTarget::InRegion { region: bowl }));
                }
                clears.push(GoalTerm::Clear {
                    occluder: top,
                    hidden: vec![middle, bottom],
                });
            }
            terms.extend(clears);
            Ok((terms, template.to_string()))
        }
        PutHiddenBlocksInPyramidIntoMatchingBowls => {
            let e = BIG_BLOCK_EDGE;
            let bb = b.bounds;
            let (x, y) = b.free_spot(2.0 * PYRAMID_PITCH + e, e, bb)?;
            let x0 = x - PYRAMID_PITCH;
            let cols = b.colors(3);
            let base: Vec<ObjectId> = cols
                .iter()
                .enumerate()
                .map(|(i, &c)| b.block_at(c, Pose::new(x0 + i as f64 * PYRAMID_PITCH, y, 0.0), None))
                .collect();
            let c = b.any_color();
            let m0 = b.block_at(c, Pose::new(x0 + 0.5 * PYRAMID_PITCH, y, 0.0), Some(base[0]));
            let c = b.any_color();
            let m1 = b.block_at(c, Pose::new(x0 + 1.5 * PYRAMID_PITCH, y, 0.0), Some(base[2]));
            let c = b.any_color();
            let top = b.block_at(c, Pose::new(x0 + PYRAMID_PITCH, y, 0.0), Some(m0));
            let mut terms = Vec::new();
            for &h in &base {
                let c = b.color_of(h);
                let bowl = b.bowl(c)?;
                terms.push(place(h, PlaceTarget::InRegion { region: bowl }));
            }
            for occ in [top, m0, m1] {
                terms.push(GoalTerm::Clear {
                    occluder: occ,
                    hidden: base.clone(),
                });
            }
            Ok((terms, template.to_string()))
        }
        StackAllBlocksOnAZone => {
            let nz = b.count(params.zones);
            let cols = b.colors(nz);
            let zones: Vec<ObjectId> = cols.iter().map(|&c| b.zone(c)).collect::<Result<_, _>>()?;
            let target = b.rng.random_range(0..nz);
            let n = b.count(params.blocks);
            let mut ids = Vec::new();
            for _ in 0..n {
                let (c, s) = (b.any_color(), b.size());
                ids.push(b.block(c, s)?);
            }
            ids.shuffle(b.rng);
            let mut terms = vec![place(ids[0], PlaceTarget::InRegion { region: zones[target] })];
            terms.extend(chain(&ids));
            Ok((terms, template.replace("[COLOR]", cols[target].as_str())))
        }
        StackBlocksByRelativePosition => {
            let cols = b.colors(2);
            let inner = b.bounds.inflate(-(crate::tasks::RELATIVE_OFFSET - ZONE_EDGE / 2.0 + BIG_BLOCK_EDGE));
            let zone = b.container(ObjectKind::Zone, cols[0], inner)?;
            let zp = b.objects[zone.0 as usize].pose;
            let reference = b.next_id();
            let yaw = b.yaw();
            let rs = b.size();
            b.objects
                .push(ObjectInstance::block(reference, cols[1], rs, Pose::new(zp.x, zp.y, yaw)));
            let relation = Relation::ALL[b.rng.random_range(0..4)];
            let spot = relation.spot(&Pose::new(zp.x, zp.y, yaw));
            b.reserve(Rect::centered(spot.x, spot.y, 2.0 * BIG_BLOCK_EDGE, 2.0 * BIG_BLOCK_EDGE));
            let n = b.count(params.blocks) - 1;
            let mut ids = Vec::new();
            for _ in 0..n {
                let (c, s) = (b.any_color(), b.size());
                ids.push(b.block(c, s)?);
            }
            ids.shuffle(b.rng);
            let mut terms = vec![place(ids[0], PlaceTarget::Beside { reference, relation })];
            terms.extend(chain(&ids));
            let text = template
                .replacen("[REL_POS]", relation.position_word(), 1)
                .replacen("[COLOR]", cols[1].as_str(), 1)
                .replacen("[COLOR]", cols[0].as_str(), 1);
            Ok((terms, text))
        }
    }
}

fn other_size(s: BlockSize) -> BlockSize {
    match s {
        BlockSize::Big => BlockSize::Small,
        BlockSize::Small => BlockSize::Big,
    }
}

fn other_color<R: Rng + ?Sized>(c: Color, b: &mut Builder<'_, R>) -> Color {
    loop {
        let o = b.any_color();
        if o != c {
            return o;
        }
    }
}
