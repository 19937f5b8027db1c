//! The three set families: random Cantor disks, the per-level rotation
//! variant, and the deterministic 1/4-corner square set.
//!
//! A generation is built by walking the angle tree depth-first: the node at
//! `(depth d, index j)` carries the angle that splits disk `j` of generation
//! `d-1` into its four children, placed at offsets
//! `(3/4) * 4^-(d-1) * e^{(alpha*pi/2 - omega) i}` from the parent center.
//! Walks stream disks without materializing intermediate generations, so a
//! `4^10`-disk sample is cheap to produce repeatedly inside Monte Carlo loops.

use std::ops::{Add, Mul, Sub};

use serde::Serialize;

use crate::rng::{NodePath, SeedKey, MAX_DEPTH};
use crate::Error;

/// A point of the plane (complex-plane coordinates).
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Multiplication by `e^{i alpha pi/2}`, exact for each quarter turn.
    pub fn rot_quarter(self, alpha: u8) -> Point {
        match alpha % 4 {
            0 => self,
            1 => Point::new(-self.y, self.x),
            2 => Point::new(-self.x, -self.y),
            _ => Point::new(self.y, -self.x),
        }
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

/// Radius (or side) of a generation-`k` element: `4^-k`, exact.
pub fn scale_at(depth: u32) -> f64 {
    debug_assert!(depth <= 31);
    1.0 / (1u64 << (2 * depth)) as f64
}

/// The contraction sending the unit disk onto child disk `alpha`:
/// `z -> z/4 + (3/4) e^{(alpha*pi/2 - omega) i}`.
///
/// With `omega = 0` the four images of the origin are `(3/4, 0)`, `(0, 3/4)`,
/// `(-3/4, 0)`, `(0, -3/4)`; a positive `omega` rotates them clockwise.
pub fn transform(z: Point, alpha: u8, omega: f64) -> Point {
    z * 0.25 + child_direction(alpha, omega) * 0.75
}

/// Unit vector `e^{(alpha*pi/2 - omega) i}`, with the quarter turns applied
/// exactly so that `omega = 0` lands on the coordinate axes.
pub(crate) fn child_direction(alpha: u8, omega: f64) -> Point {
    let (sin, cos) = omega.sin_cos();
    Point::new(cos, -sin).rot_quarter(alpha)
}

/// Angle assignment mode for a tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AngleMode {
    /// Every node carries its own independent uniform angle.
    Independent,
    /// All nodes of equal depth share one angle per level.
    PerLevel,
}

impl std::fmt::Display for AngleMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AngleMode::Independent => write!(f, "independent"),
            AngleMode::PerLevel => write!(f, "per-level"),
        }
    }
}

impl std::str::FromStr for AngleMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "independent" => Ok(AngleMode::Independent),
            "per-level" => Ok(AngleMode::PerLevel),
            other => Err(format!(
                "unknown mode '{other}' (expected 'independent' or 'per-level')"
            )),
        }
    }
}

enum TreeSource {
    /// Angles derived on demand from a seed key; nothing is stored, so trees
    /// of any admissible depth are O(1) to hold.
    Sampled(SeedKey),
    /// Explicit per-node angles in breadth-first order (tests, couplings).
    Explicit(Vec<f64>),
}

/// A rooted 4-ary tree of rotation angles in `[0, pi/2]` of height `depth`.
pub struct AngleTree {
    depth: u32,
    mode: AngleMode,
    source: TreeSource,
}

impl AngleTree {
    /// Draw a tree of height `depth` from `key`. In per-level mode every node
    /// of depth `d` carries the angle of node `(d, 1)`.
    pub fn sample(depth: u32, key: &SeedKey, mode: AngleMode) -> Result<Self, Error> {
        if depth == 0 {
            return Err(Error::EmptyTree);
        }
        if depth > MAX_DEPTH {
            return Err(Error::DepthCap {
                depth,
                cap: MAX_DEPTH,
            });
        }
        Ok(Self {
            depth,
            mode,
            source: TreeSource::Sampled(key.clone()),
        })
    }

    /// Build a tree from explicit angles in breadth-first order
    /// (`1 + 4 + ... + 4^(depth-1)` values, each in `[0, pi/2]`).
    pub fn from_angles(depth: u32, angles: Vec<f64>, mode: AngleMode) -> Result<Self, Error> {
        if depth == 0 {
            return Err(Error::EmptyTree);
        }
        if depth > MAX_DEPTH {
            return Err(Error::DepthCap {
                depth,
                cap: MAX_DEPTH,
            });
        }
        let expected = Self::node_count(depth);
        if angles.len() != expected {
            return Err(Error::WrongAngleCount {
                expected,
                got: angles.len(),
                depth,
            });
        }
        if let Some(&bad) = angles
            .iter()
            .find(|a| !a.is_finite() || **a < 0.0 || **a > std::f64::consts::FRAC_PI_2)
        {
            return Err(Error::AngleOutOfRange { angle: bad });
        }
        Ok(Self {
            depth,
            mode,
            source: TreeSource::Explicit(angles),
        })
    }

    /// Tree with the same angle at every node (handy for axis-aligned cases).
    pub fn constant(depth: u32, omega: f64) -> Result<Self, Error> {
        let count = Self::node_count(depth);
        Self::from_angles(depth, vec![omega; count], AngleMode::Independent)
    }

    /// `1 + 4 + ... + 4^(depth-1)`.
    pub fn node_count(depth: u32) -> usize {
        (((1u64 << (2 * depth)) - 1) / 3) as usize
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn mode(&self) -> AngleMode {
        self.mode
    }

    pub fn angle_count(&self) -> usize {
        Self::node_count(self.depth)
    }

    /// The angle at `path`. Panics if the path lies below the tree.
    pub fn angle(&self, path: NodePath) -> f64 {
        assert!(
            path.depth() <= self.depth,
            "path depth {} below tree of height {}",
            path.depth(),
            self.depth
        );
        let effective = match self.mode {
            AngleMode::Independent => path,
            AngleMode::PerLevel => NodePath::new(path.depth(), 1).unwrap(),
        };
        match &self.source {
            TreeSource::Sampled(key) => key.derive_angle(effective),
            TreeSource::Explicit(angles) => angles[effective.ordinal() as usize],
        }
    }
}

/// One disk of a generation: center, dyadic radius `4^-depth`, and its number
/// in the depth-k enumeration (child `alpha` of parent `j` is `4j-3+alpha`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Disk {
    pub center_x: f64,
    pub center_y: f64,
    depth: u32,
    pub number: u64,
}

impl Disk {
    pub fn new(center: Point, depth: u32, number: u64) -> Self {
        Self {
            center_x: center.x,
            center_y: center.y,
            depth,
            number,
        }
    }

    pub fn center(&self) -> Point {
        Point::new(self.center_x, self.center_y)
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn radius(&self) -> f64 {
        scale_at(self.depth)
    }
}

/// A full generation: `4^depth` disks in enumeration order.
pub struct DiskSet {
    depth: u32,
    disks: Vec<Disk>,
}

impl DiskSet {
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn disks(&self) -> &[Disk] {
        &self.disks
    }

    pub fn len(&self) -> usize {
        self.disks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.disks.is_empty()
    }
}

/// The four generation-`k` disks spawned by parent disk `j` of generation
/// `k-1`, centred on `attach`: radius `4^-k`, numbers `4j-3..=4j`, centers
/// `attach + (3/4) 4^-(k-1) e^{(alpha*pi/2 - omega) i}`.
pub fn omega_set(k: u32, j: u64, omega: f64, attach: Point) -> Result<Vec<Disk>, Error> {
    if k == 0 || k > MAX_DEPTH {
        return Err(Error::DepthCap {
            depth: k,
            cap: MAX_DEPTH,
        });
    }
    let max = NodePath::nodes_at(k);
    if j == 0 || j > max {
        return Err(Error::GroupOutOfRange {
            index: j,
            max,
            depth: k,
        });
    }
    let step = 0.75 * scale_at(k - 1);
    Ok((0..4u8)
        .map(|alpha| {
            Disk::new(
                attach + child_direction(alpha, omega) * step,
                k,
                4 * j - 3 + alpha as u64,
            )
        })
        .collect())
}

fn descend(
    tree: &AngleTree,
    k: u32,
    depth: u32,
    index: u64,
    center: Point,
    f: &mut impl FnMut(Disk),
) {
    let omega = tree.angle(NodePath::new(depth, index).expect("walk stays inside the tree"));
    let step = 0.75 * scale_at(depth - 1);
    for alpha in 0..4u8 {
        let child_center = center + child_direction(alpha, omega) * step;
        let child_index = 4 * index - 3 + alpha as u64;
        if depth == k {
            f(Disk::new(child_center, k, child_index));
        } else {
            descend(tree, k, depth + 1, child_index, child_center, f);
        }
    }
}

/// Stream generation `k` of the tree in enumeration order. `k = 0` yields the
/// unit disk.
pub fn walk_generation(
    tree: &AngleTree,
    k: u32,
    f: &mut impl FnMut(Disk),
) -> Result<(), Error> {
    if k > tree.depth() {
        return Err(Error::GenerationOutOfRange {
            generation: k,
            depth: tree.depth(),
        });
    }
    if k == 0 {
        f(Disk::new(Point::ORIGIN, 0, 1));
        return Ok(());
    }
    descend(tree, k, 1, 1, Point::ORIGIN, f);
    Ok(())
}

/// Materialize generation `k` as a [`DiskSet`].
pub fn build_generation(tree: &AngleTree, k: u32) -> Result<DiskSet, Error> {
    let mut disks = Vec::with_capacity(1usize << (2 * k.min(13)));
    walk_generation(tree, k, &mut |d| disks.push(d))?;
    Ok(DiskSet { depth: k, disks })
}

/// Centers of every generation `0..=k_max` in one pass over the tree.
/// `result[k]` holds the `4^k` centers of generation `k` in enumeration order.
pub fn generation_centers(tree: &AngleTree, k_max: u32) -> Result<Vec<Vec<Point>>, Error> {
    if k_max > tree.depth() {
        return Err(Error::GenerationOutOfRange {
            generation: k_max,
            depth: tree.depth(),
        });
    }
    let mut centers: Vec<Vec<Point>> = (0..=k_max)
        .map(|k| Vec::with_capacity(1usize << (2 * k.min(13))))
        .collect();
    centers[0].push(Point::ORIGIN);

    fn collect(
        tree: &AngleTree,
        k_max: u32,
        depth: u32,
        index: u64,
        center: Point,
        centers: &mut [Vec<Point>],
    ) {
        let omega = tree.angle(NodePath::new(depth, index).expect("walk stays inside the tree"));
        let step = 0.75 * scale_at(depth - 1);
        for alpha in 0..4u8 {
            let child_center = center + child_direction(alpha, omega) * step;
            let child_index = 4 * index - 3 + alpha as u64;
            centers[depth as usize].push(child_center);
            if depth < k_max {
                collect(tree, k_max, depth + 1, child_index, child_center, centers);
            }
        }
    }

    if k_max >= 1 {
        collect(tree, k_max, 1, 1, Point::ORIGIN, &mut centers);
    }
    Ok(centers)
}

/// One compass group of a depth-`k` collection: the `4^(k-1)` disks of radius
/// `4^-k` living inside child disk `alpha` of a root rotated by `psi`. This is
/// a quarter-scale copy of generation `k-1` of `subtree` translated to
/// `(3/4) e^{(alpha*pi/2 - psi) i}`; numbers are relative to the group.
pub fn tau_group(alpha: u8, psi: f64, subtree: &AngleTree, k: u32) -> Result<Vec<Disk>, Error> {
    if k == 0 || k > MAX_DEPTH {
        return Err(Error::DepthCap {
            depth: k,
            cap: MAX_DEPTH,
        });
    }
    if k >= 2 && subtree.depth() < k - 1 {
        return Err(Error::GenerationOutOfRange {
            generation: k - 1,
            depth: subtree.depth(),
        });
    }
    let attach = child_direction(alpha, psi) * 0.75;
    let mut disks = Vec::with_capacity(1usize << (2 * (k - 1).min(13)));
    walk_generation(subtree, k - 1, &mut |d| {
        disks.push(Disk::new(attach + d.center() * 0.25, k, d.number));
    })?;
    Ok(disks)
}

/// An axis-aligned square: lower-left corner plus dyadic side `4^-depth`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Square {
    pub corner_x: f64,
    pub corner_y: f64,
    depth: u32,
    pub number: u64,
}

impl Square {
    pub fn corner(&self) -> Point {
        Point::new(self.corner_x, self.corner_y)
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn side(&self) -> f64 {
        scale_at(self.depth)
    }
}

/// Generation `k` of the 1/4-corner set: `4^k` squares of side `4^-k`.
pub struct SquareSet {
    depth: u32,
    squares: Vec<Square>,
}

impl SquareSet {
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn squares(&self) -> &[Square] {
        &self.squares
    }

    pub fn len(&self) -> usize {
        self.squares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.squares.is_empty()
    }
}

/// Build generation `k` of the 1/4-corner Cantor set inside `[0,1]^2`:
/// each parent square keeps four corner subsquares of a quarter the side.
pub fn quarter_corner(k: u32) -> Result<SquareSet, Error> {
    if k == 0 || k > MAX_DEPTH {
        return Err(Error::DepthCap {
            depth: k,
            cap: MAX_DEPTH,
        });
    }
    let mut squares = vec![Square {
        corner_x: 0.0,
        corner_y: 0.0,
        depth: 0,
        number: 1,
    }];
    for depth in 1..=k {
        let side = scale_at(depth);
        let offset = 3.0 * side;
        let corners = [(0.0, 0.0), (offset, 0.0), (0.0, offset), (offset, offset)];
        let mut next = Vec::with_capacity(squares.len() * 4);
        for parent in &squares {
            for (alpha, (dx, dy)) in corners.iter().enumerate() {
                next.push(Square {
                    corner_x: parent.corner_x + dx,
                    corner_y: parent.corner_y + dy,
                    depth,
                    number: 4 * parent.number - 3 + alpha as u64,
                });
            }
        }
        squares = next;
    }
    Ok(SquareSet { depth: k, squares })
}
