//! Euclidean metric measure spaces: points, closed balls, point sets, lattices
//! and the measures used as frame index spaces.
//!
//! Balls are closed everywhere: an atom at distance exactly `r` from the center
//! belongs to `B(a, r)`. Membership is decided by comparing the squared distance,
//! accumulated coordinate by coordinate in index order, against `r * r` with no
//! tolerance. The lattice enumerators use the same predicate, so they agree with
//! a brute-force scan bit for bit.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of `R^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidInput("point must have at least one coordinate".into()));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite coordinate {bad}")));
        }
        Ok(Self(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Self(vec![0.0; dim.max(1)])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        dist_sq(&self.0, &other.0).sqrt()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

/// Squared Euclidean distance, summed in coordinate order.
#[inline]
pub fn dist_sq(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (a, b) in x.iter().zip(y) {
        let d = a - b;
        acc += d * d;
    }
    acc
}

/// Closed ball `B(center, radius)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    center: Point,
    radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn centered(coords: &[f64], radius: f64) -> Result<Self> {
        Self::new(Point::new(coords.to_vec())?, radius)
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    #[inline]
    pub fn contains(&self, x: &[f64]) -> bool {
        dist_sq(x, self.center.coords()) <= self.radius * self.radius
    }
}

/// Region `{x : inner < |x - center| <= outer}`; with `inner = None` it is the
/// closed ball of radius `outer`.
#[derive(Clone, Copy, Debug)]
pub struct Shell<'a> {
    pub center: &'a [f64],
    pub inner: Option<f64>,
    pub outer: f64,
}

impl Shell<'_> {
    #[inline]
    pub fn contains(&self, x: &[f64]) -> bool {
        let d2 = dist_sq(x, self.center);
        if d2 > self.outer * self.outer {
            return false;
        }
        match self.inner {
            Some(r) => d2 > r * r,
            None => true,
        }
    }
}

/// Flat list of weighted nodes in `R^d`, either exact atoms of a discrete
/// measure or quadrature nodes of a continuous one.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightedNodes {
    pub dim: usize,
    pub coords: Vec<f64>,
    pub weights: Vec<f64>,
}

impl WeightedNodes {
    pub fn new(dim: usize) -> Self {
        Self { dim, coords: Vec::new(), weights: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn push(&mut self, x: &[f64], w: f64) {
        debug_assert_eq!(x.len(), self.dim);
        self.coords.extend_from_slice(x);
        self.weights.push(w);
    }

    #[inline]
    pub fn node(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.coords.chunks_exact(self.dim.max(1)).zip(self.weights.iter().copied())
    }

    pub fn total_weight(&self) -> f64 {
        let mut acc = crate::quad::CompensatedSum::default();
        for &w in &self.weights {
            acc.add(w);
        }
        acc.value()
    }
}

/// A finite set of distinct points, optionally with a declared separation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    points: Vec<Point>,
    declared_separation: Option<f64>,
}

impl PointSet {
    pub fn new(points: Vec<Point>, declared_separation: Option<f64>) -> Result<Self> {
        if let Some(first) = points.first() {
            let d = first.dim();
            if let Some(p) = points.iter().find(|p| p.dim() != d) {
                return Err(Error::DimensionMismatch { expected: d, got: p.dim() });
            }
        }
        if let Some(delta) = declared_separation {
            if !(delta > 0.0) {
                return Err(Error::InvalidInput(format!("declared separation must be positive, got {delta}")));
            }
        }
        let set = Self { points, declared_separation };
        if set.points.len() >= 2 {
            let (i, j, dist) = set.closest_pair();
            let bound = declared_separation.unwrap_or(0.0);
            if dist <= bound {
                if dist == 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "duplicate point {:?}",
                        set.points[i].coords()
                    )));
                }
                return Err(Error::NotSeparated {
                    first: set.points[i].coords().to_vec(),
                    second: set.points[j].coords().to_vec(),
                    distance: dist,
                });
            }
        }
        Ok(set)
    }

    pub fn empty() -> Self {
        Self { points: Vec::new(), declared_separation: None }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(Point::dim)
    }

    pub fn declared_separation(&self) -> Option<f64> {
        self.declared_separation
    }

    /// Indices and distance of a closest pair: sort by the first coordinate and
    /// sweep, pruning once the first-coordinate gap exceeds the best distance.
    fn closest_pair(&self) -> (usize, usize, f64) {
        let mut order: Vec<usize> = (0..self.points.len()).collect();
        order.sort_by(|&a, &b| {
            self.points[a].coords()[0]
                .total_cmp(&self.points[b].coords()[0])
                .then(a.cmp(&b))
        });
        let mut best = (order[0], order[1], f64::INFINITY);
        for (oi, &i) in order.iter().enumerate() {
            let xi = self.points[i].coords();
            for &j in &order[oi + 1..] {
                let xj = self.points[j].coords();
                if xj[0] - xi[0] >= best.2 {
                    break;
                }
                let d = dist_sq(xi, xj).sqrt();
                if d < best.2 {
                    best = (i.min(j), i.max(j), d);
                }
            }
        }
        best
    }

    /// Minimum pairwise Euclidean distance.
    pub fn separation(&self) -> Result<f64> {
        if self.points.len() < 2 {
            return Err(Error::SeparationUndefined(self.points.len()));
        }
        Ok(self.closest_pair().2)
    }

    pub fn count_in_ball(&self, ball: &Ball) -> usize {
        self.points.iter().filter(|p| ball.contains(p.coords())).count()
    }

    /// Loads points from CSV with header `x1,...,xd`, one point per row.
    pub fn from_csv_path(path: impl AsRef<Path>, declared_separation: Option<f64>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::from_csv_reader(file, declared_separation)
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R, declared_separation: Option<f64>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        for (i, h) in headers.iter().enumerate() {
            if h != format!("x{}", i + 1) {
                return Err(Error::InvalidInput(format!(
                    "point CSV header must be x1,...,xd; column {} is `{h}`",
                    i + 1
                )));
            }
        }
        let mut points = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let coords = record
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| Error::InvalidInput(format!("bad coordinate `{s}`: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            points.push(Point::new(coords)?);
        }
        Self::new(points, declared_separation)
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        if let Some(d) = self.dim() {
            wtr.write_record((1..=d).map(|i| format!("x{i}")))?;
        }
        for p in &self.points {
            wtr.write_record(p.coords().iter().map(|c| c.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Removal rule applied to a lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Thinning {
    /// Drop every site whose integer indices are all even, i.e. the sublattice
    /// `2 * scale * Z^d`. Leaves density `(1 - 2^-d) / scale^d`.
    EvenSublattice,
}

/// The lattice `scale * Z^d + shift`, optionally thinned.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub scale: f64,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thin: Option<Thinning>,
}

impl Lattice {
    pub fn new(scale: f64, dim: usize) -> Result<Self> {
        let lat = Self { scale, dim, shift: None, thin: None };
        lat.validate()?;
        Ok(lat)
    }

    pub fn with_shift(mut self, shift: Vec<f64>) -> Result<Self> {
        self.shift = Some(shift);
        self.validate()?;
        Ok(self)
    }

    pub fn thinned(mut self, rule: Thinning) -> Self {
        self.thin = Some(rule);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidInput(format!("lattice scale must be positive, got {}", self.scale)));
        }
        if self.dim == 0 {
            return Err(Error::InvalidInput("lattice dimension must be >= 1".into()));
        }
        if let Some(s) = &self.shift {
            if s.len() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, got: s.len() });
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("lattice shift must be finite".into()));
            }
        }
        Ok(())
    }

    #[inline]
    fn shift_at(&self, i: usize) -> f64 {
        self.shift.as_ref().map_or(0.0, |s| s[i])
    }

    pub fn shift_vec(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.shift_at(i)).collect()
    }

    /// Sites per unit volume.
    pub fn density(&self) -> f64 {
        let base = self.scale.powi(-(self.dim as i32));
        match self.thin {
            None => base,
            Some(Thinning::EvenSublattice) => base * (1.0 - 0.5f64.powi(self.dim as i32)),
        }
    }

    /// Side length of the periodicity cell.
    pub fn period(&self) -> f64 {
        match self.thin {
            None => self.scale,
            Some(Thinning::EvenSublattice) => 2.0 * self.scale,
        }
    }

    /// Lower corner and side length of a fundamental (periodicity) cell.
    pub fn fundamental_cell(&self) -> (Vec<f64>, f64) {
        (self.shift_vec(), self.period())
    }

    pub fn separation(&self) -> f64 {
        self.scale
    }

    #[inline]
    pub fn coord(&self, i: usize, k: i64) -> f64 {
        self.scale * k as f64 + self.shift_at(i)
    }

    fn sublattice(&self) -> Lattice {
        Lattice { scale: 2.0 * self.scale, dim: self.dim, shift: self.shift.clone(), thin: None }
    }

    fn keeps(&self, k: &[i64]) -> bool {
        match self.thin {
            None => true,
            Some(Thinning::EvenSublattice) => k.iter().any(|&ki| ki.rem_euclid(2) != 0),
        }
    }

    /// Index range `lo..=hi` along axis `axis` of sites with
    /// `partial + (x - c)^2 <= r2`, decided with the exact closed-ball predicate.
    fn axis_range(&self, axis: usize, c: f64, partial: f64, r2: f64) -> Option<(i64, i64)> {
        let rem = r2 - partial;
        if rem < 0.0 {
            return None;
        }
        let pred = |k: i64| {
            let d = self.coord(axis, k) - c;
            partial + d * d <= r2
        };
        let w = rem.sqrt();
        let t = self.shift_at(axis);
        let mut lo = ((c - w - t) / self.scale).ceil() as i64;
        let mut hi = ((c + w - t) / self.scale).floor() as i64;
        while pred(lo - 1) {
            lo -= 1;
        }
        while lo <= hi && !pred(lo) {
            lo += 1;
        }
        while pred(hi + 1) {
            hi += 1;
        }
        while hi >= lo && !pred(hi) {
            hi -= 1;
        }
        (lo <= hi).then_some((lo, hi))
    }

    fn count_unthinned(&self, center: &[f64], r2: f64) -> u64 {
        fn rec(lat: &Lattice, center: &[f64], axis: usize, partial: f64, r2: f64) -> u64 {
            let Some((lo, hi)) = lat.axis_range(axis, center[axis], partial, r2) else {
                return 0;
            };
            if axis + 1 == lat.dim {
                return (hi - lo + 1) as u64;
            }
            let mut total = 0;
            for k in lo..=hi {
                let d = lat.coord(axis, k) - center[axis];
                total += rec(lat, center, axis + 1, partial + d * d, r2);
            }
            total
        }
        rec(self, center, 0, 0.0, r2)
    }

    /// Number of sites in the closed ball, in `O((r/scale)^(d-1))` work.
    pub fn count_in_ball(&self, ball: &Ball) -> u64 {
        let r2 = ball.radius() * ball.radius();
        let c = ball.center().coords();
        match self.thin {
            None => self.count_unthinned(c, r2),
            Some(Thinning::EvenSublattice) => {
                self.count_unthinned(c, r2) - self.sublattice().count_unthinned(c, r2)
            }
        }
    }

    /// Visits every site of the closed ball in lexicographic index order.
    pub fn for_each_in_ball(&self, center: &[f64], radius: f64, mut f: impl FnMut(&[i64], &[f64])) {
        fn rec(
            lat: &Lattice,
            center: &[f64],
            axis: usize,
            partial: f64,
            r2: f64,
            idx: &mut Vec<i64>,
            x: &mut Vec<f64>,
            f: &mut dyn FnMut(&[i64], &[f64]),
        ) {
            let Some((lo, hi)) = lat.axis_range(axis, center[axis], partial, r2) else {
                return;
            };
            for k in lo..=hi {
                let xi = lat.coord(axis, k);
                let d = xi - center[axis];
                idx.push(k);
                x.push(xi);
                if axis + 1 == lat.dim {
                    if lat.keeps(idx) {
                        f(idx, x);
                    }
                } else {
                    rec(lat, center, axis + 1, partial + d * d, r2, idx, x, f);
                }
                idx.pop();
                x.pop();
            }
        }
        let mut idx = Vec::with_capacity(self.dim);
        let mut x = Vec::with_capacity(self.dim);
        rec(self, center, 0, 0.0, radius * radius, &mut idx, &mut x, &mut f);
    }
}

/// Support of a counting measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Atoms {
    Set(PointSet),
    Lattice(Lattice),
}

impl Atoms {
    pub fn dim(&self) -> Option<usize> {
        match self {
            Atoms::Set(s) => s.dim(),
            Atoms::Lattice(l) => Some(l.dim),
        }
    }

    pub fn count_in_ball(&self, ball: &Ball) -> u64 {
        match self {
            Atoms::Set(s) => s.count_in_ball(ball) as u64,
            Atoms::Lattice(l) => l.count_in_ball(ball),
        }
    }

    /// Atoms in the shell, in a fixed order (input order for sets,
    /// lexicographic index order for lattices), each with unit weight.
    pub fn in_shell(&self, shell: Shell<'_>) -> WeightedNodes {
        let dim = shell.center.len();
        let mut out = WeightedNodes::new(dim);
        match self {
            Atoms::Set(s) => {
                for p in s.points() {
                    if shell.contains(p.coords()) {
                        out.push(p.coords(), 1.0);
                    }
                }
            }
            Atoms::Lattice(l) => l.for_each_in_ball(shell.center, shell.outer, |_, x| {
                if shell.contains(x) {
                    out.push(x, 1.0);
                }
            }),
        }
        out
    }

    pub fn separation(&self) -> Result<f64> {
        match self {
            Atoms::Set(s) => s.separation(),
            Atoms::Lattice(l) => Ok(l.separation()),
        }
    }
}

type WeightFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Density of a weighted Lebesgue measure.
#[derive(Clone, Default)]
pub enum Weight {
    #[default]
    Unit,
    Constant(f64),
    /// Arbitrary nonnegative field; `sup` bounds it and is used for tail bounds.
    Field { f: WeightFn, sup: f64 },
}

impl Weight {
    pub fn field(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static, sup: f64) -> Self {
        Weight::Field { f: Arc::new(f), sup }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Weight::Unit => 1.0,
            Weight::Constant(c) => *c,
            Weight::Field { f, .. } => f(x),
        }
    }

    pub fn sup(&self) -> f64 {
        match self {
            Weight::Unit => 1.0,
            Weight::Constant(c) => *c,
            Weight::Field { sup, .. } => *sup,
        }
    }

    /// The constant value, when the weight is constant.
    pub fn constant(&self) -> Option<f64> {
        match self {
            Weight::Unit => Some(1.0),
            Weight::Constant(c) => Some(*c),
            Weight::Field { .. } => None,
        }
    }
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Unit => write!(f, "Unit"),
            Weight::Constant(c) => write!(f, "Constant({c})"),
            Weight::Field { sup, .. } => write!(f, "Field {{ sup: {sup} }}"),
        }
    }
}

/// A Borel measure on `R^d` used to index a frame.
#[derive(Clone, Debug)]
pub enum MeasureSpec {
    Lebesgue { dim: usize, weight: Weight },
    Counting(Atoms),
    Atomic { points: Vec<Point>, weights: Vec<f64> },
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    // V_d = 2 pi / d * V_{d-2}
    let mut v = if dim % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if dim % 2 == 0 { 2 } else { 3 };
    while k <= dim {
        v *= 2.0 * std::f64::consts::PI / k as f64;
        k += 2;
    }
    v
}

/// Surface area of the unit sphere in `R^d`.
pub fn unit_sphere_area(dim: usize) -> f64 {
    dim as f64 * unit_ball_volume(dim)
}

impl MeasureSpec {
    pub fn lebesgue(dim: usize) -> Self {
        MeasureSpec::Lebesgue { dim, weight: Weight::Unit }
    }

    pub fn counting_lattice(lattice: Lattice) -> Self {
        MeasureSpec::Counting(Atoms::Lattice(lattice))
    }

    pub fn counting_set(set: PointSet) -> Self {
        MeasureSpec::Counting(Atoms::Set(set))
    }

    pub fn atomic(points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::InvalidInput(format!(
                "atomic measure: {} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidInput(format!("atom weights must be positive, got {w}")));
        }
        if let Some(first) = points.first() {
            if let Some(p) = points.iter().find(|p| p.dim() != first.dim()) {
                return Err(Error::DimensionMismatch { expected: first.dim(), got: p.dim() });
            }
        }
        Ok(MeasureSpec::Atomic { points, weights })
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            MeasureSpec::Lebesgue { dim, .. } => Some(*dim),
            MeasureSpec::Counting(a) => a.dim(),
            MeasureSpec::Atomic { points, .. } => points.first().map(Point::dim),
        }
    }

    pub fn is_discrete(&self) -> bool {
        !matches!(self, MeasureSpec::Lebesgue { .. })
    }

    /// Lattice underlying a periodic counting measure.
    pub fn lattice(&self) -> Option<&Lattice> {
        match self {
            MeasureSpec::Counting(Atoms::Lattice(l)) => Some(l),
            _ => None,
        }
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        match self.dim() {
            Some(md) if md != d => Err(Error::DimensionMismatch { expected: md, got: d }),
            _ => Ok(()),
        }
    }

    /// `m(B)`. Discrete variants are exact; constant-weight Lebesgue uses the
    /// ball-volume formula; a weight field is integrated by quadrature.
    pub fn ball_mass(&self, ball: &Ball) -> Result<f64> {
        self.check_dim(ball.dim())?;
        match self {
            MeasureSpec::Lebesgue { dim, weight } => match weight.constant() {
                Some(c) => Ok(c * unit_ball_volume(*dim) * ball.radius().powi(*dim as i32)),
                None => {
                    let cfg = crate::quad::QuadConfig::default().with_truncation(ball.radius());
                    Ok(crate::quad::integrate_ball(&|_| 1.0, ball, self, &cfg)?.value)
                }
            },
            MeasureSpec::Counting(atoms) => Ok(atoms.count_in_ball(ball) as f64),
            MeasureSpec::Atomic { points, weights } => {
                let mut acc = crate::quad::CompensatedSum::default();
                for (p, w) in points.iter().zip(weights) {
                    if ball.contains(p.coords()) {
                        acc.add(*w);
                    }
                }
                Ok(acc.value())
            }
        }
    }

    /// Mass of the shell `{inner < |x - c| <= outer}`.
    pub fn shell_mass(&self, center: &Point, inner: f64, outer: f64) -> Result<f64> {
        let big = self.ball_mass(&Ball::new(center.clone(), outer)?)?;
        let small = self.ball_mass(&Ball::new(center.clone(), inner)?)?;
        Ok(big - small)
    }
}

/// Minimum pairwise distance of a point set.
pub fn separation(ps: &PointSet) -> Result<f64> {
    ps.separation()
}

/// `m(B(a, r + rho) \ B(a, r)) / m(B(a, r))`.
pub fn annular_ratio(m: &MeasureSpec, a: &Point, r: f64, rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::InvalidInput(format!("annulus width must be positive, got {rho}")));
    }
    let inner = m.ball_mass(&Ball::new(a.clone(), r)?)?;
    if inner == 0.0 {
        return Err(Error::EmptyBall { center: a.coords().to_vec(), radius: r });
    }
    let outer = m.ball_mass(&Ball::new(a.clone(), r + rho)?)?;
    Ok((outer - inner).max(0.0) / inner)
}
