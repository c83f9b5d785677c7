//! Spatial realizations of the network.
//!
//! A realization is built the same way for both schemes:
//!
//! 1. BSs form a PPP of density `λ_b` in a square window around the typical
//!    UE, which starts at the origin.
//! 2. Voronoi neighbours come from the Delaunay triangulation.
//! 3. DUDA only: BSs are visited in random order and each unpaired BS pairs
//!    with its nearest unpaired Delaunay neighbour. If the typical UE's
//!    nearest BS ends up alone the realization is redrawn.
//! 4. Every other pair carries one active link, downlink with probability
//!    `δ`. Its UE is uniform in the union of the two cells; the nearer BS
//!    is the UL-BS and the farther the DL-BS. Leftover BSs (all BSs under
//!    DUCA) get their own direction draw and a UE uniform in their cell.
//!
//! In [`TypicalMode::UplinkTypical`] coordinates are then shifted so the
//! typical UL-BS sits at the origin.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::report::fmt_sig;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist2(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.dist2(other).sqrt()
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    fn shifted(&self, by: Point) -> Point {
        Point::new(self.x + by.x, self.y + by.y)
    }
}

/// Seed and stream of a ChaCha8 generator. Equal pairs give identical
/// realizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Axis-aligned square observation window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub center: Point,
    pub half_width: f64,
}

impl Window {
    pub fn centered(half_width: f64) -> Self {
        Self {
            center: Point::ORIGIN,
            half_width,
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        (p.x - self.center.x).abs() <= self.half_width
            && (p.y - self.center.y).abs() <= self.half_width
    }

    fn corners(&self) -> Vec<Point> {
        let (c, h) = (self.center, self.half_width);
        vec![
            Point::new(c.x - h, c.y - h),
            Point::new(c.x + h, c.y - h),
            Point::new(c.x + h, c.y + h),
            Point::new(c.x - h, c.y + h),
        ]
    }
}

/// Homogeneous PPP of density `lambda` on the square `[−h, h]²`.
pub fn sample_ppp<R: Rng + ?Sized>(lambda: f64, half_width: f64, rng: &mut R) -> Vec<Point> {
    let mean = lambda * (2.0 * half_width).powi(2);
    if !(mean > 0.0) {
        return Vec::new();
    }
    let n = Poisson::new(mean)
        .expect("positive Poisson mean")
        .sample(rng) as usize;
    (0..n)
        .map(|_| {
            Point::new(
                rng.random_range(-half_width..half_width),
                rng.random_range(-half_width..half_width),
            )
        })
        .collect()
}

/// Voronoi neighbour lists.
#[derive(Debug, Clone, PartialEq)]
pub struct Adjacency {
    pub neighbors: Vec<Vec<usize>>,
    /// Set when the input admitted no triangulation (fewer than three points
    /// or all collinear) and every point was made a neighbour of every other.
    pub degenerate: bool,
}

impl Adjacency {
    pub fn are_neighbors(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    fn complete(n: usize) -> Self {
        Self {
            neighbors: (0..n)
                .map(|i| (0..n).filter(|&j| j != i).collect())
                .collect(),
            degenerate: true,
        }
    }
}

/// Delaunay edges, i.e. pairs of points whose Voronoi cells share an edge.
pub fn delaunay_adjacency(points: &[Point]) -> Adjacency {
    let n = points.len();
    if n < 3 {
        return Adjacency::complete(n);
    }
    let pts: Vec<delaunator::Point> = points
        .iter()
        .map(|p| delaunator::Point { x: p.x, y: p.y })
        .collect();
    let tri = delaunator::triangulate(&pts);
    if tri.triangles.is_empty() {
        return Adjacency::complete(n);
    }
    let mut neighbors = vec![Vec::new(); n];
    for t in tri.triangles.chunks_exact(3) {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
    }
    for list in &mut neighbors {
        list.sort_unstable();
        list.dedup();
    }
    Adjacency {
        neighbors,
        degenerate: false,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pairing {
    pub pairs: Vec<(usize, usize)>,
    pub unpaired: Vec<usize>,
    pub partner: Vec<Option<usize>>,
}

impl Pairing {
    /// Every BS on its own.
    pub fn none(n: usize) -> Self {
        Self {
            pairs: Vec::new(),
            unpaired: (0..n).collect(),
            partner: vec![None; n],
        }
    }
}

/// Greedy randomized matching on the Delaunay graph. BSs are visited in a
/// uniformly random order; an unpaired BS takes its nearest unpaired
/// neighbour, ties going to the lower index.
pub fn pair_bs<R: Rng + ?Sized>(points: &[Point], adjacency: &Adjacency, rng: &mut R) -> Pairing {
    pair_bs_seeded(points, adjacency, &[], rng)
}

/// As [`pair_bs`], with some pairs fixed before the greedy pass.
pub fn pair_bs_seeded<R: Rng + ?Sized>(
    points: &[Point],
    adjacency: &Adjacency,
    fixed: &[(usize, usize)],
    rng: &mut R,
) -> Pairing {
    let n = points.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut partner = vec![None; n];
    let mut pairs = Vec::new();
    for &(i, j) in fixed {
        partner[i] = Some(j);
        partner[j] = Some(i);
        pairs.push((i, j));
    }
    for &i in &order {
        if partner[i].is_some() {
            continue;
        }
        let best = adjacency.neighbors[i]
            .iter()
            .copied()
            .filter(|&j| partner[j].is_none())
            .min_by(|&a, &b| {
                let da = points[i].dist2(&points[a]);
                let db = points[i].dist2(&points[b]);
                da.total_cmp(&db).then(a.cmp(&b))
            });
        if let Some(j) = best {
            partner[i] = Some(j);
            partner[j] = Some(i);
            pairs.push((i, j));
        }
    }
    let unpaired = (0..n).filter(|&i| partner[i].is_none()).collect();
    Pairing {
        pairs,
        unpaired,
        partner,
    }
}

/// Convex polygon, counter-clockwise.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polygon(pub Vec<Point>);

impl Polygon {
    pub fn area(&self) -> f64 {
        let v = &self.0;
        let n = v.len();
        if n < 3 {
            return 0.0;
        }
        let twice: f64 = (0..n)
            .map(|i| {
                let (a, b) = (v[i], v[(i + 1) % n]);
                a.x * b.y - b.x * a.y
            })
            .sum();
        0.5 * twice.abs()
    }

    /// Keeps the part where `(p − m)·n ≤ 0`.
    fn clip(&self, m: Point, nx: f64, ny: f64) -> Polygon {
        let side = |p: &Point| (p.x - m.x) * nx + (p.y - m.y) * ny;
        let v = &self.0;
        let mut out = Vec::with_capacity(v.len() + 1);
        for i in 0..v.len() {
            let (a, b) = (v[i], v[(i + 1) % v.len()]);
            let (sa, sb) = (side(&a), side(&b));
            if sa <= 0.0 {
                out.push(a);
            }
            if (sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0) {
                let t = sa / (sa - sb);
                out.push(Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
            }
        }
        Polygon(out)
    }

    /// Uniform point inside the polygon via a fan triangulation.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let v = &self.0;
        let tri_area = |i: usize| {
            let (a, b, c) = (v[0], v[i], v[i + 1]);
            0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)).abs()
        };
        let total: f64 = (1..v.len() - 1).map(tri_area).sum();
        let mut pick = rng.random::<f64>() * total;
        let mut k = 1;
        while k < v.len() - 2 {
            let ak = tri_area(k);
            if pick < ak {
                break;
            }
            pick -= ak;
            k += 1;
        }
        let (a, b, c) = (v[0], v[k], v[k + 1]);
        let mut u: f64 = rng.random();
        let mut w: f64 = rng.random();
        if u + w > 1.0 {
            u = 1.0 - u;
            w = 1.0 - w;
        }
        Point::new(
            a.x + u * (b.x - a.x) + w * (c.x - a.x),
            a.y + u * (b.y - a.y) + w * (c.y - a.y),
        )
    }

    fn shifted(&self, by: Point) -> Polygon {
        Polygon(self.0.iter().map(|p| p.shifted(by)).collect())
    }
}

/// Voronoi cell of point `i`, clipped to the window.
pub fn voronoi_cell(points: &[Point], adjacency: &Adjacency, i: usize, window: &Window) -> Polygon {
    let mut cell = Polygon(window.corners());
    let p = points[i];
    for &j in &adjacency.neighbors[i] {
        let q = points[j];
        let m = Point::new(0.5 * (p.x + q.x), 0.5 * (p.y + q.y));
        cell = cell.clip(m, q.x - p.x, q.y - p.y);
        if cell.0.is_empty() {
            break;
        }
    }
    cell
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Duda,
    Duca,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Duda => "DUDA",
            Scheme::Duca => "DUCA",
        }
    }
}

/// Which end of the typical link sits at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TypicalMode {
    /// The typical UL-BS.
    #[default]
    UplinkTypical,
    /// The typical UE.
    DownlinkTypical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Downlink,
    Uplink,
}

/// A pair (or a lone BS) with its single active link.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Index into `Deployment::pairs`, `None` for a lone BS.
    pub pair_id: Option<usize>,
    pub ue: Point,
    /// BS nearer to the UE.
    pub ul_bs: usize,
    /// BS farther from the UE; equal to `ul_bs` for a lone BS.
    pub dl_bs: usize,
    pub direction: Direction,
}

impl Cluster {
    fn members(&self) -> Vec<usize> {
        if self.ul_bs == self.dl_bs {
            vec![self.ul_bs]
        } else {
            vec![self.ul_bs, self.dl_bs]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypicalLink {
    pub ue: Point,
    pub ul_bs: usize,
    pub dl_bs: usize,
    pub pair_id: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub scheme: Scheme,
    pub typical_mode: TypicalMode,
    pub window: Window,
    pub bs_positions: Vec<Point>,
    pub adjacency: Adjacency,
    pub pairs: Vec<(usize, usize)>,
    pub unpaired: Vec<usize>,
    /// Interfering clusters; the typical one is not listed.
    pub clusters: Vec<Cluster>,
    pub typical: TypicalLink,
    cells: Vec<Polygon>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeploymentConfig {
    pub typical_pairing: TypicalPairing,
    pub lambda_b: f64,
    pub delta: f64,
    pub window_half_width: f64,
    pub scheme: Scheme,
    pub typical_mode: TypicalMode,
}

/// How the typical UE's pair is formed under DUDA. The rest of the network
/// is always paired by the randomized greedy pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TypicalPairing {
    /// Same greedy pass as every other BS; redraw if the serving BS is left
    /// alone. The DL-BS is then often farther than the UE's second-nearest
    /// BS, and a nearer BS may be an active downlink interferer.
    Random,
    /// The serving BS is visited first and takes its nearest neighbour.
    UlBsFirst,
    /// The UE's two nearest BSs, which are always Delaunay neighbours.
    #[default]
    UeNearestTwo,
}

/// Draws without a usable typical pair before giving up on one realization.
const MAX_REDRAWS: u64 = 10_000;

impl Deployment {
    /// Draws one realization. Also returns how many draws were discarded
    /// because the typical BS could not be paired (or the window was empty).
    pub fn generate<R: Rng + ?Sized>(cfg: &DeploymentConfig, rng: &mut R) -> Result<(Self, u64)> {
        check_delta(cfg.delta)?;
        if !(cfg.lambda_b > 0.0 && cfg.window_half_width > 0.0) {
            return Err(Error::InvalidArgument(
                "deployment needs positive density and window".into(),
            ));
        }
        let window = Window::centered(cfg.window_half_width);
        let needed = match cfg.scheme {
            Scheme::Duda => 2,
            Scheme::Duca => 1,
        };
        for redraws in 0..MAX_REDRAWS {
            let points = sample_ppp(cfg.lambda_b, cfg.window_half_width, rng);
            if points.len() < needed {
                continue;
            }
            let adjacency = delaunay_adjacency(&points);
            let serving = nearest_index(&points, &Point::ORIGIN);
            let pairing = match (cfg.scheme, cfg.typical_pairing) {
                (Scheme::Duca, _) => Pairing::none(points.len()),
                (Scheme::Duda, TypicalPairing::Random) => pair_bs(&points, &adjacency, rng),
                (Scheme::Duda, TypicalPairing::UlBsFirst) => {
                    let s = points[serving];
                    let mate = adjacency.neighbors[serving]
                        .iter()
                        .copied()
                        .min_by(|&a, &b| {
                            s.dist2(&points[a])
                                .total_cmp(&s.dist2(&points[b]))
                                .then(a.cmp(&b))
                        })
                        .expect("at least two BSs");
                    pair_bs_seeded(&points, &adjacency, &[(serving, mate)], rng)
                }
                (Scheme::Duda, TypicalPairing::UeNearestTwo) => {
                    let mate = (0..points.len())
                        .filter(|&k| k != serving)
                        .min_by(|&a, &b| {
                            points[a]
                                .norm()
                                .total_cmp(&points[b].norm())
                                .then(a.cmp(&b))
                        })
                        .expect("at least two BSs");
                    pair_bs_seeded(&points, &adjacency, &[(serving, mate)], rng)
                }
            };
            let typical = match (cfg.scheme, pairing.partner[serving]) {
                (Scheme::Duca, _) => TypicalLink {
                    ue: Point::ORIGIN,
                    ul_bs: serving,
                    dl_bs: serving,
                    pair_id: None,
                },
                (Scheme::Duda, Some(partner)) => TypicalLink {
                    ue: Point::ORIGIN,
                    ul_bs: serving,
                    dl_bs: partner,
                    pair_id: pairing
                        .pairs
                        .iter()
                        .position(|&(a, b)| a == serving || b == serving),
                },
                (Scheme::Duda, None) => continue,
            };
            let cells: Vec<Polygon> = (0..points.len())
                .map(|i| voronoi_cell(&points, &adjacency, i, &window))
                .collect();
            let mut dep = Deployment {
                scheme: cfg.scheme,
                typical_mode: cfg.typical_mode,
                window,
                bs_positions: points,
                adjacency,
                pairs: pairing.pairs,
                unpaired: pairing.unpaired,
                clusters: Vec::new(),
                typical,
                cells,
            };
            dep.assign_directions_and_ues(cfg.delta, rng)?;
            if cfg.typical_mode == TypicalMode::UplinkTypical {
                let bs = dep.bs_positions[dep.typical.ul_bs];
                dep.translate(Point::new(-bs.x, -bs.y));
            }
            return Ok((dep, redraws));
        }
        Err(Error::ExcessiveResampling {
            resamples: MAX_REDRAWS,
            iterations: 1,
        })
    }

    /// (Re)draws the direction and UE of every interfering cluster.
    pub fn assign_directions_and_ues<R: Rng + ?Sized>(
        &mut self,
        delta: f64,
        rng: &mut R,
    ) -> Result<()> {
        check_delta(delta)?;
        let typical_members = [self.typical.ul_bs, self.typical.dl_bs];
        let mut clusters = Vec::with_capacity(self.pairs.len() + self.unpaired.len());
        for (id, &(a, b)) in self.pairs.iter().enumerate() {
            if typical_members.contains(&a) {
                continue;
            }
            let ue = self.sample_in_cells(&[a, b], rng);
            let (ul_bs, dl_bs) =
                if ue.dist2(&self.bs_positions[a]) <= ue.dist2(&self.bs_positions[b]) {
                    (a, b)
                } else {
                    (b, a)
                };
            clusters.push(Cluster {
                pair_id: Some(id),
                ue,
                ul_bs,
                dl_bs,
                direction: draw_direction(delta, rng),
            });
        }
        for &i in &self.unpaired {
            if typical_members.contains(&i) {
                continue;
            }
            let ue = self.sample_in_cells(&[i], rng);
            clusters.push(Cluster {
                pair_id: None,
                ue,
                ul_bs: i,
                dl_bs: i,
                direction: draw_direction(delta, rng),
            });
        }
        self.clusters = clusters;
        Ok(())
    }

    /// Uniform point in the union of the given Voronoi cells.
    fn sample_in_cells<R: Rng + ?Sized>(&self, members: &[usize], rng: &mut R) -> Point {
        let areas: Vec<f64> = members.iter().map(|&m| self.cells[m].area()).collect();
        let total: f64 = areas.iter().sum();
        let mut pick = rng.random::<f64>() * total;
        let mut chosen = members[members.len() - 1];
        for (&m, &a) in members.iter().zip(&areas) {
            if pick < a {
                chosen = m;
                break;
            }
            pick -= a;
        }
        self.cells[chosen].sample(rng)
    }

    pub fn cell(&self, i: usize) -> &Polygon {
        &self.cells[i]
    }

    fn translate(&mut self, by: Point) {
        for p in &mut self.bs_positions {
            *p = p.shifted(by);
        }
        for c in &mut self.clusters {
            c.ue = c.ue.shifted(by);
        }
        for cell in &mut self.cells {
            *cell = cell.shifted(by);
        }
        self.typical.ue = self.typical.ue.shifted(by);
        self.window.center = self.window.center.shifted(by);
    }

    /// Distance of the typical uplink (UE to UL-BS).
    pub fn uplink_distance(&self) -> f64 {
        self.typical.ue.dist(&self.bs_positions[self.typical.ul_bs])
    }

    /// Distance of the typical downlink (DL-BS to UE).
    pub fn downlink_distance(&self) -> f64 {
        self.typical.ue.dist(&self.bs_positions[self.typical.dl_bs])
    }

    /// One row per node: `x,y,role,pair_id`. Lone BSs carry pair id −1.
    pub fn snapshot_csv(&self) -> String {
        let mut out = String::from("x,y,role,pair_id\n");
        let mut row = |p: &Point, role: &str, pair: Option<usize>| {
            let id = pair.map_or(-1, |v| v as i64);
            let _ = writeln!(out, "{},{},{},{}", fmt_sig(p.x), fmt_sig(p.y), role, id);
        };
        let t = &self.typical;
        row(&t.ue, "typical_ue", t.pair_id);
        if t.ul_bs == t.dl_bs {
            row(&self.bs_positions[t.ul_bs], "typical_bs", None);
        } else {
            row(&self.bs_positions[t.ul_bs], "typical_ul_bs", t.pair_id);
            row(&self.bs_positions[t.dl_bs], "typical_dl_bs", t.pair_id);
        }
        for c in &self.clusters {
            let dl_active = c.direction == Direction::Downlink;
            if c.pair_id.is_some() {
                row(&self.bs_positions[c.ul_bs], "ul_bs", c.pair_id);
                let role = if dl_active { "dl_bs_active" } else { "dl_bs" };
                row(&self.bs_positions[c.dl_bs], role, c.pair_id);
            } else {
                let role = if dl_active { "bs_active" } else { "bs" };
                row(&self.bs_positions[c.ul_bs], role, None);
            }
            let role = if dl_active { "ue" } else { "ue_active" };
            row(&c.ue, role, c.pair_id);
        }
        out
    }

    /// Checks the structural invariants: pairs are disjoint Delaunay edges,
    /// pairs and lone BSs partition the BS set, one cluster per group besides
    /// the typical one, and the typical node at the origin.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let n = self.bs_positions.len();
        let mut seen = vec![0u8; n];
        for &(a, b) in &self.pairs {
            if !self.adjacency.are_neighbors(a, b) {
                return Err(format!("pair ({a}, {b}) is not a Delaunay edge"));
            }
            seen[a] += 1;
            seen[b] += 1;
        }
        for &i in &self.unpaired {
            seen[i] += 1;
        }
        if let Some(i) = seen.iter().position(|&c| c != 1) {
            return Err(format!("BS {i} covered {} times", seen[i]));
        }
        let groups = self.pairs.len() + self.unpaired.len();
        if self.clusters.len() + 1 != groups {
            return Err(format!(
                "{} clusters for {groups} groups",
                self.clusters.len()
            ));
        }
        let mut covered = vec![0u8; n];
        for c in &self.clusters {
            for m in c.members() {
                covered[m] += 1;
            }
        }
        covered[self.typical.ul_bs] += 1;
        if self.typical.dl_bs != self.typical.ul_bs {
            covered[self.typical.dl_bs] += 1;
        }
        if covered.iter().any(|&c| c != 1) {
            return Err("clusters do not cover every BS exactly once".into());
        }
        let origin_node = match self.typical_mode {
            TypicalMode::UplinkTypical => self.bs_positions[self.typical.ul_bs],
            TypicalMode::DownlinkTypical => self.typical.ue,
        };
        if origin_node.norm() > 1e-9 {
            return Err(format!("typical node at {origin_node:?}, not the origin"));
        }
        Ok(())
    }
}

fn draw_direction<R: Rng + ?Sized>(delta: f64, rng: &mut R) -> Direction {
    if rng.random_bool(delta) {
        Direction::Downlink
    } else {
        Direction::Uplink
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "delta must lie strictly between 0 and 1, got {delta}"
        )))
    }
}

/// Index of the point nearest to `p`, ties to the lower index.
pub fn nearest_index(points: &[Point], p: &Point) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, q) in points.iter().enumerate() {
        let d = q.dist2(p);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force Delaunay edges: (i, j) is an edge iff some circle through
    /// both is empty, checked via the empty-circumcircle test over all
    /// triangles that use the edge.
    pub(crate) fn brute_force_delaunay(points: &[Point]) -> Vec<(usize, usize)> {
        let n = points.len();
        let mut edges = Vec::new();
        let in_circle = |a: Point, b: Point, c: Point, d: Point| {
            let (adx, ady) = (a.x - d.x, a.y - d.y);
            let (bdx, bdy) = (b.x - d.x, b.y - d.y);
            let (cdx, cdy) = (c.x - d.x, c.y - d.y);
            let det = (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy)
                - (bdx * bdx + bdy * bdy) * (adx * cdy - cdx * ady)
                + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady);
            let orient = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
            det * orient.signum()
        };
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let (a, b, c) = (points[i], points[j], points[k]);
                    let orient = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
                    if orient.abs() < 1e-12 {
                        continue;
                    }
                    let empty = (0..n)
                        .filter(|&m| m != i && m != j && m != k)
                        .all(|m| in_circle(a, b, c, points[m]) < 0.0);
                    if empty {
                        edges.push((i, j));
                        edges.push((j, k));
                        edges.push((i, k));
                    }
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    fn edges_of(adj: &Adjacency) -> Vec<(usize, usize)> {
        let mut e: Vec<_> = adj
            .neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, l)| l.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
            .collect();
        e.sort_unstable();
        e
    }

    #[test]
    fn rng_stream_reproducible() {
        let a: Vec<u64> = (0..4)
            .map(|_| 0)
            .scan(RngStream::new(5, 9).rng(), |r, _| Some(r.random()))
            .collect();
        let b: Vec<u64> = (0..4)
            .map(|_| 0)
            .scan(RngStream::new(5, 9).rng(), |r, _| Some(r.random()))
            .collect();
        let c: Vec<u64> = (0..4)
            .map(|_| 0)
            .scan(RngStream::new(5, 10).rng(), |r, _| Some(r.random()))
            .collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn ppp_mean_count() {
        let mut rng = RngStream::new(1, 0).rng();
        let n = 2000;
        let total: usize = (0..n)
            .map(|_| sample_ppp(0.005, 75.0, &mut rng).len())
            .sum();
        let mean = total as f64 / n as f64;
        // Poisson(112.5): standard error of the mean is sqrt(112.5 / 2000).
        assert!((mean - 112.5).abs() < 4.0 * (112.5f64 / n as f64).sqrt());
        let pts = sample_ppp(0.005, 75.0, &mut rng);
        assert!(pts.iter().all(|p| p.x.abs() <= 75.0 && p.y.abs() <= 75.0));
    }

    #[test]
    fn ppp_vanishing_density_is_empty() {
        let mut rng = RngStream::new(1, 1).rng();
        assert!((0..100).all(|_| sample_ppp(1e-12, 75.0, &mut rng).is_empty()));
    }

    #[test]
    fn triangle_is_fully_adjacent() {
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.3, 0.8),
        ];
        let adj = delaunay_adjacency(&pts);
        assert!(!adj.degenerate);
        assert_eq!(edges_of(&adj), vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn square_has_one_diagonal() {
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let e = edges_of(&delaunay_adjacency(&pts));
        assert_eq!(e.len(), 5);
        for side in [(0, 1), (1, 2), (2, 3), (0, 3)] {
            assert!(e.contains(&side));
        }
        assert!(e.contains(&(0, 2)) ^ e.contains(&(1, 3)));
    }

    #[test]
    fn degenerate_inputs_fall_back_to_complete_graph() {
        let two = [Point::new(0.0, 0.0), Point::new(1.0, 0.0)];
        let adj = delaunay_adjacency(&two);
        assert!(adj.degenerate);
        assert_eq!(adj.neighbors, vec![vec![1], vec![0]]);
        let line: Vec<Point> = (0..5)
            .map(|i| Point::new(i as f64, 2.0 * i as f64))
            .collect();
        let adj = delaunay_adjacency(&line);
        assert!(adj.degenerate);
        assert_eq!(adj.neighbors[2], vec![0, 1, 3, 4]);
    }

    #[test]
    fn matches_brute_force_on_random_sets() {
        let mut rng = RngStream::new(3, 0).rng();
        for _ in 0..30 {
            let pts = sample_ppp(0.005, 40.0, &mut rng);
            if pts.len() < 3 {
                continue;
            }
            assert_eq!(
                edges_of(&delaunay_adjacency(&pts)),
                brute_force_delaunay(&pts)
            );
        }
    }

    #[test]
    fn jittered_grid_interior_degree_near_six() {
        let mut rng = RngStream::new(4, 0).rng();
        let mut pts = Vec::new();
        for i in 0..30 {
            for j in 0..30 {
                pts.push(Point::new(
                    i as f64 + rng.random_range(-0.3..0.3),
                    j as f64 + rng.random_range(-0.3..0.3),
                ));
            }
        }
        let adj = delaunay_adjacency(&pts);
        let interior: Vec<usize> = (0..pts.len())
            .filter(|&k| {
                let (i, j) = (k / 30, k % 30);
                (5..25).contains(&i) && (5..25).contains(&j)
            })
            .collect();
        let mean = interior
            .iter()
            .map(|&k| adj.neighbors[k].len())
            .sum::<usize>() as f64
            / interior.len() as f64;
        assert!((mean - 6.0).abs() < 0.1, "mean degree {mean}");
    }

    #[test]
    fn pairing_small_cases() {
        let two = [Point::new(0.0, 0.0), Point::new(3.0, 0.0)];
        let mut rng = RngStream::new(1, 0).rng();
        let p = pair_bs(&two, &delaunay_adjacency(&two), &mut rng);
        assert_eq!(p.pairs.len(), 1);
        assert!(p.unpaired.is_empty());

        let tri = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.3, 0.8),
        ];
        let adj = delaunay_adjacency(&tri);
        for s in 0..50 {
            let p = pair_bs(&tri, &adj, &mut RngStream::new(s, 0).rng());
            assert_eq!(p.pairs.len(), 1);
            assert_eq!(p.unpaired.len(), 1);
        }
    }

    #[test]
    fn pairing_prefers_nearest_then_lower_index() {
        // 0 is equidistant from 1 and 2; 1 and 2 are far apart, so
        // whichever is visited first, 0 pairs with 1.
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(-1.0, 0.0),
            Point::new(0.0, 5.0),
        ];
        let adj = Adjacency {
            neighbors: vec![vec![1, 2], vec![0], vec![0], vec![]],
            degenerate: false,
        };
        for s in 0..50 {
            let p = pair_bs(&pts, &adj, &mut RngStream::new(s, 0).rng());
            if p.partner[0] == Some(2) {
                // Only possible when 2 was visited before 0 and 1.
                assert_eq!(p.partner[1], None);
            } else {
                assert_eq!(p.partner[0], Some(1));
            }
        }
        // Visiting 0 first always picks index 1 at equal distance.
        let first = pair_bs(&pts, &adj, &mut RngStream::new(0, 0).rng());
        assert!(first.partner[0].is_some());
    }

    #[test]
    fn pairing_structure_on_random_realizations() {
        let mut rng = RngStream::new(8, 0).rng();
        let mut fractions = Vec::new();
        for _ in 0..1000 {
            let pts = sample_ppp(0.005, 75.0, &mut rng);
            let adj = delaunay_adjacency(&pts);
            let p = pair_bs(&pts, &adj, &mut rng);
            for &(a, b) in &p.pairs {
                assert!(adj.are_neighbors(a, b));
            }
            assert_eq!(2 * p.pairs.len() + p.unpaired.len(), pts.len());
            fractions.push(2.0 * p.pairs.len() as f64 / pts.len() as f64);
        }
        assert!(fractions.iter().all(|&f| f > 0.6 && f < 1.0 + 1e-12));
        let mean = fractions.iter().sum::<f64>() / fractions.len() as f64;
        assert!(mean > 0.6 && mean < 1.0);
        // Structural check against the brute-force triangulation.
        let pts = sample_ppp(0.005, 40.0, &mut rng);
        let adj = delaunay_adjacency(&pts);
        let p = pair_bs(&pts, &adj, &mut rng);
        let bf = brute_force_delaunay(&pts);
        for &(a, b) in &p.pairs {
            assert!(bf.contains(&(a.min(b), a.max(b))));
        }
    }

    #[test]
    fn voronoi_cells_tile_the_window() {
        let mut rng = RngStream::new(6, 0).rng();
        let pts = sample_ppp(0.005, 75.0, &mut rng);
        let adj = delaunay_adjacency(&pts);
        let w = Window::centered(75.0);
        let total: f64 = (0..pts.len())
            .map(|i| voronoi_cell(&pts, &adj, i, &w).area())
            .sum();
        assert!((total - 150.0 * 150.0).abs() < 1e-6);
        // Samples from a cell are nearest to its site.
        for i in 0..pts.len().min(20) {
            let cell = voronoi_cell(&pts, &adj, i, &w);
            for _ in 0..50 {
                let q = cell.sample(&mut rng);
                assert_eq!(nearest_index(&pts, &q), i);
                assert!(w.contains(&q));
            }
        }
    }

    fn config(scheme: Scheme, mode: TypicalMode) -> DeploymentConfig {
        DeploymentConfig {
            typical_pairing: TypicalPairing::default(),
            lambda_b: 0.005,
            delta: 0.5,
            window_half_width: 75.0,
            scheme,
            typical_mode: mode,
        }
    }

    #[test]
    fn deployments_are_reproducible_and_consistent() {
        let pairings = [
            TypicalPairing::Random,
            TypicalPairing::UlBsFirst,
            TypicalPairing::UeNearestTwo,
        ];
        for scheme in [Scheme::Duda, Scheme::Duca] {
            for (mode, pairing) in [TypicalMode::UplinkTypical, TypicalMode::DownlinkTypical]
                .into_iter()
                .flat_map(|m| pairings.map(|p| (m, p)))
            {
                for k in 0..100 {
                    let cfg = DeploymentConfig {
                        typical_pairing: pairing,
                        ..config(scheme, mode)
                    };
                    let (a, _) =
                        Deployment::generate(&cfg, &mut RngStream::new(12, k).rng()).unwrap();
                    let (b, _) =
                        Deployment::generate(&cfg, &mut RngStream::new(12, k).rng()).unwrap();
                    assert_eq!(a, b);
                    a.check_invariants().unwrap();
                    if scheme == Scheme::Duda {
                        assert_ne!(a.typical.ul_bs, a.typical.dl_bs);
                        assert!(a.uplink_distance() <= a.downlink_distance());
                        assert!(a
                            .pairs
                            .iter()
                            .all(|&(x, y)| a.adjacency.are_neighbors(x, y)));
                    }
                    for c in &a.clusters {
                        let ul = a.bs_positions[c.ul_bs];
                        let dl = a.bs_positions[c.dl_bs];
                        assert!(c.ue.dist2(&ul) <= c.ue.dist2(&dl));
                    }
                }
            }
        }
    }

    #[test]
    fn typical_pair_rules() {
        for k in 0..200 {
            let cfg = config(Scheme::Duda, TypicalMode::DownlinkTypical);
            let (d, resamples) =
                Deployment::generate(&cfg, &mut RngStream::new(5, k).rng()).unwrap();
            assert_eq!(resamples, 0);
            let mut dist: Vec<f64> = d
                .bs_positions
                .iter()
                .map(|p| p.dist(&Point::ORIGIN))
                .collect();
            dist.sort_by(f64::total_cmp);
            assert_eq!(d.uplink_distance(), dist[0]);
            assert_eq!(d.downlink_distance(), dist[1]);

            let cfg = DeploymentConfig {
                typical_pairing: TypicalPairing::UlBsFirst,
                ..cfg
            };
            let (d, _) = Deployment::generate(&cfg, &mut RngStream::new(5, k).rng()).unwrap();
            let ul = d.bs_positions[d.typical.ul_bs];
            let nearest = d
                .bs_positions
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != d.typical.ul_bs)
                .map(|(_, p)| p.dist(&ul))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(d.bs_positions[d.typical.dl_bs].dist(&ul), nearest);
        }
    }

    #[test]
    fn direction_fraction_follows_delta() {
        let cfg = config(Scheme::Duda, TypicalMode::UplinkTypical);
        let n = 2000;
        let mut dl = 0usize;
        let mut total = 0usize;
        for k in 0..n {
            let (d, _) = Deployment::generate(&cfg, &mut RngStream::new(2, k).rng()).unwrap();
            let pairs = d.clusters.iter().filter(|c| c.pair_id.is_some());
            for c in pairs {
                total += 1;
                dl += (c.direction == Direction::Downlink) as usize;
            }
        }
        let frac = dl as f64 / total as f64;
        let sigma = (0.25 / total as f64).sqrt();
        assert!((frac - 0.5).abs() < 3.0 * sigma, "{frac}");

        let all_dl = DeploymentConfig {
            delta: 1.0 - 1e-15,
            ..cfg
        };
        let (d, _) = Deployment::generate(&all_dl, &mut RngStream::new(2, 0).rng()).unwrap();
        assert!(d
            .clusters
            .iter()
            .all(|c| c.direction == Direction::Downlink));
        let bad = DeploymentConfig { delta: 1.0, ..cfg };
        assert!(Deployment::generate(&bad, &mut RngStream::new(2, 0).rng()).is_err());
    }

    #[test]
    fn snapshot_lists_every_node() {
        let cfg = config(Scheme::Duda, TypicalMode::UplinkTypical);
        let (d, _) = Deployment::generate(&cfg, &mut RngStream::new(1, 0).rng()).unwrap();
        let csv = d.snapshot_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x,y,role,pair_id");
        // Every BS once, plus one UE per cluster and the typical UE.
        assert_eq!(lines.len() - 1, d.bs_positions.len() + d.clusters.len() + 1);
        assert!(lines.iter().any(|l| l.contains("typical_dl_bs")));
        assert!(lines[2].starts_with("0,0,typical_ul_bs"));
    }
}
