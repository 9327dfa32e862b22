#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use stagstrike::arena::{line_of_sight, GridMap, Position};
use stagstrike::dqn::{QNetwork, Transition, OBS_DIM};
use stagstrike::lidar::{detect_scene, DetectionConfig, Scene, Vec2};

/// Random scene on `map`: two sensors and two enemies on distinct free cell
/// centres.
pub fn random_scene<R: Rng>(map: &GridMap, rng: &mut R, n_beams: usize, max_range: f64) -> (Scene, [Position; 4]) {
    let free = map.empty_cells();
    let picked: Vec<Position> = free.choose_multiple(rng, 4).copied().collect();
    let cells = [picked[0], picked[1], picked[2], picked[3]];
    let c = |p: Position| Vec2::cell_center(p);
    (
        Scene { sensors: vec![c(cells[0]), c(cells[1])], enemies: vec![c(cells[2]), c(cells[3])], n_beams, max_range },
        cells,
    )
}

fn segment_point_distance(a: Vec2, b: Vec2, p: Vec2) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(ab) / ab.dot(ab)).clamp(0.0, 1.0);
    (a + ab.scale(t)).dist(p)
}

/// An enemy is visible when some sensor has a clear grid line of sight to its
/// cell within range and the centre ray passes no other robot's disc.
pub fn visible_enemies(map: &GridMap, scene: &Scene, cells: &[Position; 4], radius: f64) -> Vec<usize> {
    let all: Vec<Vec2> = scene.sensors.iter().chain(&scene.enemies).copied().collect();
    (0..scene.enemies.len())
        .filter(|&e| {
            let target = scene.enemies[e];
            (0..scene.sensors.len()).any(|s| {
                let from = scene.sensors[s];
                from.dist(target) + radius <= scene.max_range
                    && line_of_sight(map, cells[s], cells[2 + e])
                    && all
                        .iter()
                        .enumerate()
                        .filter(|&(k, _)| k != s && k != 2 + e)
                        .all(|(_, &o)| segment_point_distance(from, target, o) > radius)
            })
        })
        .collect()
}

#[derive(Debug, Default, Clone, Copy)]
pub struct LidarStats {
    pub visible: usize,
    pub recovered: usize,
    /// Fused positions farther than one cell from every robot.
    pub false_positives: usize,
    /// Surviving circles whose centre lies in a wall.
    pub wall_circles: usize,
}

pub fn lidar_stats(map: &GridMap, scenes: usize, seed: u64, cfg: &DetectionConfig) -> LidarStats {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut st = LidarStats::default();
    for _ in 0..scenes {
        let (scene, cells) = random_scene(map, &mut rng, 1440, 40.0);
        let det = detect_scene(map, &scene, cfg, &mut rng).unwrap();
        let found: Vec<Vec2> = det.enemies.iter().map(|&p| Vec2::cell_center(p)).collect();
        for e in visible_enemies(map, &scene, &cells, cfg.robot_radius) {
            st.visible += 1;
            if found.iter().any(|f| f.dist(scene.enemies[e]) <= 0.5) {
                st.recovered += 1;
            }
        }
        st.false_positives += found.iter().filter(|f| scene.enemies.iter().all(|e| e.dist(**f) > 1.0)).count();
        st.wall_circles += det.circles.iter().filter(|c| stagstrike::lidar::inside_wall(map, c.center)).count();
    }
    st
}

/// Independent forward pass returning every layer's pre-activation.
pub fn preactivations(net: &QNetwork, obs: &[f64]) -> Vec<Vec<f64>> {
    let mut x = obs.to_vec();
    let mut out = Vec::new();
    let n = net.layers().len();
    for (k, l) in net.layers().iter().enumerate() {
        let z: Vec<f64> = (0..l.outputs)
            .map(|r| (0..l.inputs).map(|c| l.weights[r * l.inputs + c] * x[c]).sum::<f64>() + l.bias[r])
            .collect();
        x = if k + 1 < n { z.iter().map(|v| v.max(0.0)).collect() } else { z.clone() };
        out.push(z);
    }
    out
}

/// Importance-weighted batch-mean Huber loss computed from scratch.
pub fn reference_loss(net: &QNetwork, batch: &[Transition], weights: &[f64], targets: &[f64]) -> f64 {
    let huber = |e: f64| if e.abs() <= 1.0 { 0.5 * e * e } else { e.abs() - 0.5 };
    batch
        .iter()
        .zip(weights)
        .zip(targets)
        .map(|((t, w), y)| w * huber(preactivations(net, &t.obs).last().unwrap()[t.action] - y))
        .sum::<f64>()
        / batch.len() as f64
}

/// Largest relative error between backprop and central differences over
/// `n_nets` random small networks and batches. Draws too close to a ReLU or
/// Huber kink (where the derivative is undefined) are redrawn.
pub fn gradient_check(n_nets: usize, seed: u64) -> f64 {
    use rand::SeedableRng;
    const H: f64 = 1e-5;
    const KINK: f64 = 1e-3;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < n_nets {
        let mut dims = vec![OBS_DIM];
        for _ in 0..rng.gen_range(1..=3) {
            dims.push(rng.gen_range(2..=8));
        }
        dims.push(rng.gen_range(2..=5));
        let mut net = QNetwork::new(&dims, &mut rng);
        for i in 0..net.parameter_count() {
            // Non-zero biases so hidden units are not all symmetric around 0.
            *net.parameter_mut(i) += rng.gen_range(-0.1..0.1);
        }
        let n = rng.gen_range(1..=8);
        let out = *dims.last().unwrap();
        let batch: Vec<Transition> = (0..n)
            .map(|_| {
                let mut obs = [0.0; OBS_DIM];
                obs.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
                Transition { obs, action: rng.gen_range(0..out), reward: 0.0, next_obs: obs, done: true }
            })
            .collect();
        let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
        let targets: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();

        let near_kink = batch.iter().zip(&targets).any(|(t, y)| {
            let pre = preactivations(&net, &t.obs);
            let hidden_kink = pre[..pre.len() - 1].iter().flatten().any(|z| z.abs() < KINK);
            let q = pre.last().unwrap()[t.action];
            hidden_kink || ((q - y).abs() - 1.0).abs() < KINK
        });
        if near_kink {
            continue;
        }

        let (loss, _, grad) = net.loss_and_gradient(&batch, &weights, &targets);
        assert!((loss - reference_loss(&net, &batch, &weights, &targets)).abs() <= 1e-12 * loss.abs().max(1.0));
        let analytic = grad.parameters();
        for (i, &g) in analytic.iter().enumerate() {
            let orig = *net.parameter_mut(i);
            *net.parameter_mut(i) = orig + H;
            let up = reference_loss(&net, &batch, &weights, &targets);
            *net.parameter_mut(i) = orig - H;
            let down = reference_loss(&net, &batch, &weights, &targets);
            *net.parameter_mut(i) = orig;
            let fd = (up - down) / (2.0 * H);
            let rel = (g - fd).abs() / (g.abs() + fd.abs()).max(1e-6);
            worst = worst.max(rel);
        }
        done += 1;
    }
    worst
}

/// Upper-tail p-value of Pearson's chi-square statistic.
pub fn chi_square_p(observed: &[usize], probs: &[f64]) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let n: usize = observed.iter().sum();
    let stat: f64 = observed
        .iter()
        .zip(probs)
        .map(|(&o, &p)| {
            let e = p * n as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    ChiSquared::new((observed.len() - 1) as f64).unwrap().sf(stat)
}

/// Draw counts per slot from a buffer holding one item per priority.
pub fn replay_counts(priorities: &[f64], alpha: f64, draws: usize, seed: u64) -> Vec<usize> {
    use rand::SeedableRng;
    use stagstrike::dqn::PrioritizedReplayBuffer;
    let mut buf = PrioritizedReplayBuffer::new(priorities.len(), alpha);
    for (i, &p) in priorities.iter().enumerate() {
        buf.push(Transition { obs: [i as f64; OBS_DIM], action: 0, reward: 0.0, next_obs: [0.0; OBS_DIM], done: true });
        buf.set_priority(i, p);
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0; priorities.len()];
    for _ in 0..draws {
        counts[buf.sample(1, 0.4, &mut rng).unwrap().indices[0]] += 1;
    }
    counts
}

use stagstrike::arena::CellKind;
use stagstrike::planner::PlanRequest;

/// Random map up to `max_side` square with a random wall density.
pub fn random_map<R: Rng>(rng: &mut R, max_side: usize) -> GridMap {
    let (w, h) = (rng.gen_range(3..=max_side), rng.gen_range(3..=max_side));
    let density = rng.gen_range(0.0..0.35);
    let cells = (0..w * h).map(|_| if rng.gen_bool(density) { CellKind::Wall } else { CellKind::Empty }).collect();
    GridMap::from_cells(w, h, cells).unwrap()
}

/// Random request on `map` with start, stag and hare on distinct free cells.
pub fn random_request<R: Rng>(map: &GridMap, rng: &mut R) -> Option<PlanRequest> {
    let free = map.empty_cells();
    if free.len() < 3 {
        return None;
    }
    let p: Vec<Position> = free.choose_multiple(rng, 3).copied().collect();
    Some(PlanRequest {
        start: p[0],
        stag: p[1],
        hare: p[2],
        attack_range: rng.gen_range(1.0..5.0),
        safe_distance: rng.gen_range(0.0..3.0),
    })
}

/// Breadth-first search over safe free cells to the nearest standoff cell:
/// free, safe, within range of the stag with line of sight.
pub fn bfs_len(map: &GridMap, req: &PlanRequest) -> Option<usize> {
    let dist = |a: Position, b: Position| (((a.x - b.x).pow(2) + (a.y - b.y).pow(2)) as f64).sqrt();
    let ok = |c: Position| map.is_free(c) && dist(c, req.hare) >= req.safe_distance;
    let goal = |c: Position| ok(c) && dist(c, req.stag) <= req.attack_range && line_of_sight(map, c, req.stag);
    if !ok(req.start) {
        return None;
    }
    let mut seen = std::collections::HashSet::from([req.start]);
    let mut queue = std::collections::VecDeque::from([(req.start, 0usize)]);
    while let Some((c, d)) = queue.pop_front() {
        if goal(c) {
            return Some(d);
        }
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let n = Position::new(c.x + dx, c.y + dy);
            if ok(n) && seen.insert(n) {
                queue.push_back((n, d + 1));
            }
        }
    }
    None
}

#[derive(Debug, Default, Clone, Copy)]
pub struct OptimalityStats {
    pub cases: usize,
    pub solvable: usize,
    pub matched: usize,
    pub unreachable_agreed: usize,
    pub mismatches: usize,
}

/// Compares A* against BFS on `maps` random maps, each with a request
/// whose start is outside the exclusion zone.
pub fn planner_optimality(maps: usize, seed: u64) -> OptimalityStats {
    use rand::SeedableRng;
    use stagstrike::planner::{plan, PlanError};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut st = OptimalityStats::default();
    while st.cases < maps {
        let map = random_map(&mut rng, 12);
        let Some(req) = random_request(&map, &mut rng) else { continue };
        let start_to_hare = (((req.start.x - req.hare.x).pow(2) + (req.start.y - req.hare.y).pow(2)) as f64).sqrt();
        if start_to_hare < req.safe_distance {
            assert_eq!(plan(&map, &req), Err(PlanError::InvalidStart));
            continue;
        }
        st.cases += 1;
        match (plan(&map, &req), bfs_len(&map, &req)) {
            (Ok(p), Some(d)) => {
                st.solvable += 1;
                if p.cost() == d {
                    st.matched += 1;
                } else {
                    st.mismatches += 1;
                }
            }
            (Err(PlanError::NoSafePath), None) => st.unreachable_agreed += 1,
            _ => st.mismatches += 1,
        }
    }
    st
}

/// Checks `n` planned paths on the default map: every cell safe, consecutive
/// cells adjacent and free, goal a standoff cell. Returns violations.
pub fn planner_safety(n: usize, seed: u64) -> (usize, usize) {
    use rand::SeedableRng;
    use stagstrike::planner::plan;
    let map = GridMap::default_arena();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (mut planned, mut violations) = (0, 0);
    while planned < n {
        let mut req = random_request(&map, &mut rng).unwrap();
        req.attack_range = rng.gen_range(2.0..6.0);
        req.safe_distance = rng.gen_range(1.0..4.0);
        let Ok(path) = plan(&map, &req) else { continue };
        planned += 1;
        let safe = path.cells.iter().all(|&c| req.is_safe(c) && map.is_free(c));
        let connected = path.cells.windows(2).all(|w| (w[0].x - w[1].x).abs() + (w[0].y - w[1].y).abs() == 1);
        let standoff = path.goal().is_some_and(|g| req.is_goal(&map, g));
        if !(safe && connected && standoff && path.cells[0] == req.start) {
            violations += 1;
        }
    }
    (planned, violations)
}
