//! Mass sectors, the structural maps between two-agent and four-pocket
//! states, and the conditional-expectation inverse of the addition map.
//!
//! Every dynamics here conserves total mass, so state spaces are built one
//! sector (fixed total `N`) at a time and functions on a sector are dense
//! vectors in the sector's lexicographic order.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::operator::SectorOperator;
use crate::scalar::Scalar;

/// Wealths of the two agents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairState {
    pub n1: u32,
    pub n2: u32,
}

impl PairState {
    pub fn new(n1: u32, n2: u32) -> Self {
        Self { n1, n2 }
    }

    pub fn total(&self) -> u32 {
        self.n1 + self.n2
    }

    pub fn as_slots(&self) -> [u32; 2] {
        [self.n1, self.n2]
    }

    pub fn from_slots(s: &[u32]) -> Self {
        Self::new(s[0], s[1])
    }
}

impl fmt::Display for PairState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.n1, self.n2)
    }
}

/// Pocket contents: agent 1 top/bottom, agent 2 top/bottom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PocketState {
    pub n11: u32,
    pub n12: u32,
    pub n21: u32,
    pub n22: u32,
}

impl PocketState {
    pub fn new(n11: u32, n12: u32, n21: u32, n22: u32) -> Self {
        Self { n11, n12, n21, n22 }
    }

    pub fn as_slots(&self) -> [u32; 4] {
        [self.n11, self.n12, self.n21, self.n22]
    }

    pub fn from_slots(s: &[u32]) -> Self {
        Self::new(s[0], s[1], s[2], s[3])
    }
}

impl fmt::Display for PocketState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{};{},{})", self.n11, self.n12, self.n21, self.n22)
    }
}

/// Pocket capacities of the restricted model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PocketCapacities {
    pub gamma1: u32,
    pub delta1: u32,
    pub gamma2: u32,
    pub delta2: u32,
}

impl PocketCapacities {
    pub fn as_slots(&self) -> [u32; 4] {
        [self.gamma1, self.delta1, self.gamma2, self.delta2]
    }

    pub fn admits(&self, s: &PocketState) -> bool {
        s.as_slots().iter().zip(self.as_slots()).all(|(n, c)| *n <= c)
    }
}

/// Swaps the two top pockets.
pub fn exchange_map(s: PocketState) -> PocketState {
    PocketState::new(s.n21, s.n12, s.n11, s.n22)
}

/// Exchange under pocket capacities; fails when a top pocket overflows.
pub fn exchange_map_within(s: PocketState, caps: &PocketCapacities) -> Result<PocketState> {
    let e = exchange_map(s);
    if caps.admits(&e) {
        Ok(e)
    } else {
        Err(Error::Capacity(format!(
            "exchange sends {s} to {e}, outside capacities {:?}",
            caps.as_slots()
        )))
    }
}

/// Adds each agent's pockets back together.
pub fn addition_map(s: PocketState) -> PairState {
    PairState::new(s.n11 + s.n12, s.n21 + s.n22)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    /// One variable.
    Site,
    /// Two agents.
    Pair,
    /// Four pockets.
    Pocket,
}

impl SpaceKind {
    pub fn slots(&self) -> usize {
        match self {
            SpaceKind::Site => 1,
            SpaceKind::Pair => 2,
            SpaceKind::Pocket => 4,
        }
    }
}

/// Number of slots and optional per-slot capacities.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Layout {
    kind: SpaceKind,
    capacities: Option<Vec<u32>>,
}

impl Layout {
    pub fn new(kind: SpaceKind, capacities: Option<Vec<u32>>) -> Result<Self> {
        if let Some(c) = &capacities {
            if c.len() != kind.slots() {
                return Err(Error::Shape(format!(
                    "{:?} layout needs {} capacities, got {}",
                    kind,
                    kind.slots(),
                    c.len()
                )));
            }
        }
        Ok(Self { kind, capacities })
    }

    pub fn site() -> Self {
        Self { kind: SpaceKind::Site, capacities: None }
    }

    pub fn site_with_capacity(c: u32) -> Self {
        Self { kind: SpaceKind::Site, capacities: Some(vec![c]) }
    }

    pub fn pair() -> Self {
        Self { kind: SpaceKind::Pair, capacities: None }
    }

    pub fn pocket() -> Self {
        Self { kind: SpaceKind::Pocket, capacities: None }
    }

    pub fn pocket_with_capacities(c: PocketCapacities) -> Self {
        Self {
            kind: SpaceKind::Pocket,
            capacities: Some(c.as_slots().to_vec()),
        }
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn slots(&self) -> usize {
        self.kind.slots()
    }

    pub fn capacities(&self) -> Option<&[u32]> {
        self.capacities.as_deref()
    }

    pub fn capacity(&self, slot: usize) -> Option<u32> {
        self.capacities.as_ref().map(|c| c[slot])
    }

    pub fn admits(&self, state: &[u32]) -> bool {
        state.len() == self.slots()
            && self
                .capacities
                .as_ref()
                .map_or(true, |c| state.iter().zip(c).all(|(n, c)| n <= c))
    }

    /// The two-agent layout seen through the addition map.
    pub fn lumped(&self) -> Result<Self> {
        if self.kind != SpaceKind::Pocket {
            return Err(Error::Shape("only pocket layouts lump onto pairs".into()));
        }
        Ok(Self {
            kind: SpaceKind::Pair,
            capacities: self.capacities.as_ref().map(|c| vec![c[0] + c[1], c[2] + c[3]]),
        })
    }
}

/// All states of fixed total mass, in lexicographic order.
#[derive(Clone, Debug)]
pub struct Sector {
    total: u32,
    states: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

impl Sector {
    pub fn new(layout: &Layout, total: u32) -> Self {
        let mut states = Vec::new();
        let mut current = vec![0u32; layout.slots()];
        enumerate(layout, 0, total, &mut current, &mut states);
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Self { total, states, index }
    }

    pub fn total(&self) -> u32 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[Vec<u32>] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &[u32] {
        &self.states[i]
    }

    pub fn position(&self, state: &[u32]) -> Option<usize> {
        self.index.get(state).copied()
    }
}

fn enumerate(layout: &Layout, slot: usize, remaining: u32, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    let last = slot + 1 == layout.slots();
    let cap = layout.capacity(slot).unwrap_or(u32::MAX);
    if last {
        if remaining <= cap {
            current[slot] = remaining;
            out.push(current.clone());
        }
        return;
    }
    for n in 0..=remaining.min(cap) {
        current[slot] = n;
        enumerate(layout, slot + 1, remaining - n, current, out);
    }
}

/// Sectors `0..=nmax` of one layout.
#[derive(Clone, Debug)]
pub struct SectorSpace {
    layout: Layout,
    sectors: Vec<Sector>,
}

impl SectorSpace {
    pub fn new(layout: Layout, nmax: u32) -> Arc<Self> {
        let sectors = (0..=nmax).map(|n| Sector::new(&layout, n)).collect();
        Arc::new(Self { layout, sectors })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn nmax(&self) -> u32 {
        self.sectors.len() as u32 - 1
    }

    pub fn sector(&self, total: u32) -> Option<&Sector> {
        self.sectors.get(total as usize)
    }

    /// Sector at a possibly negative or out-of-range total.
    pub fn sector_at(&self, total: i64) -> Option<&Sector> {
        usize::try_from(total).ok().and_then(|t| self.sectors.get(t))
    }

    pub fn sectors(&self) -> impl Iterator<Item = &Sector> {
        self.sectors.iter()
    }

    pub fn dim(&self) -> usize {
        self.sectors.iter().map(Sector::len).sum()
    }
}

/// A probability measure on one sector.
#[derive(Clone, Debug, PartialEq)]
pub struct Measure<T> {
    total: u32,
    weights: Vec<T>,
}

impl<T: Scalar> Measure<T> {
    /// Normalizes `weight(state)` over the sector. An empty sector yields an
    /// empty measure; a non-empty sector of zero total weight is an error.
    pub fn from_fn(sector: &Sector, weight: impl Fn(&[u32]) -> T) -> Result<Self> {
        let raw: Vec<T> = sector.states().iter().map(|s| weight(s)).collect();
        if let Some((i, w)) = raw.iter().enumerate().find(|(_, w)| **w < T::zero()) {
            return Err(Error::Parameter(format!(
                "negative weight {} at {:?}",
                w.render(),
                sector.state(i)
            )));
        }
        let total = raw.iter().fold(T::zero(), |a, w| a + w.clone());
        if total.is_zero() && !raw.is_empty() {
            return Err(Error::Conditioning(format!(
                "sector {} carries no mass",
                sector.total()
            )));
        }
        let weights = raw.into_iter().map(|w| w / total.clone()).collect();
        Ok(Self {
            total: sector.total(),
            weights,
        })
    }

    pub fn total(&self) -> u32 {
        self.total
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> &T {
        &self.weights[i]
    }

    pub fn integrate(&self, f: &[T]) -> T {
        self.weights
            .iter()
            .zip(f)
            .fold(T::zero(), |a, (w, v)| a + w.clone() * v.clone())
    }
}

/// One [`Measure`] per sector of a space.
#[derive(Clone, Debug)]
pub struct SectorMeasures<T> {
    space: Arc<SectorSpace>,
    measures: Vec<Measure<T>>,
}

impl<T: Scalar> SectorMeasures<T> {
    pub fn from_fn(space: &Arc<SectorSpace>, weight: impl Fn(&[u32]) -> T) -> Result<Self> {
        let measures = space
            .sectors()
            .map(|s| Measure::from_fn(s, &weight))
            .collect::<Result<_>>()?;
        Ok(Self {
            space: space.clone(),
            measures,
        })
    }

    pub fn space(&self) -> &Arc<SectorSpace> {
        &self.space
    }

    pub fn sector(&self, total: u32) -> Option<&Measure<T>> {
        self.measures.get(total as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Measure<T>> {
        self.measures.iter()
    }
}

/// `(T_φ f)(s) = f(φ(s))` for a function on a pair sector.
pub fn lift_function<T: Scalar>(f: &[T], pair: &Sector, pocket: &Sector) -> Vec<T> {
    pocket
        .states()
        .iter()
        .map(|s| {
            let p = addition_map(PocketState::from_slots(s));
            let i = pair
                .position(&p.as_slots())
                .expect("pair sector lacks the image of a pocket state");
            f[i].clone()
        })
        .collect()
}

/// Conditional expectation of `g` under `mu` given the fibers of the
/// addition map: `(T_φ⁻¹ g)(n) = Σ_{φ(s)=n} g(s) μ(s) / μ̃(n)`.
pub fn mu_canonical_inverse<T: Scalar>(
    mu: &Measure<T>,
    pocket: &Sector,
    g: &[T],
    pair: &Sector,
) -> Result<Vec<T>> {
    let mut num = vec![T::zero(); pair.len()];
    let mut mass = vec![T::zero(); pair.len()];
    for (i, s) in pocket.states().iter().enumerate() {
        let p = addition_map(PocketState::from_slots(s));
        let j = pair
            .position(&p.as_slots())
            .ok_or_else(|| Error::Shape(format!("{p} is not in the pair sector")))?;
        num[j] = num[j].clone() + g[i].clone() * mu.weight(i).clone();
        mass[j] = mass[j].clone() + mu.weight(i).clone();
    }
    num.into_iter()
        .zip(mass)
        .enumerate()
        .map(|(j, (a, m))| {
            if m.is_zero() {
                Err(Error::Conditioning(format!(
                    "fiber over {} has zero mass",
                    PairState::from_slots(pair.state(j))
                )))
            } else {
                Ok(a / m)
            }
        })
        .collect()
}

fn check_pocket_pair(pocket: &SectorSpace, pair: &SectorSpace) -> Result<()> {
    if pocket.layout().lumped()? != *pair.layout() {
        return Err(Error::Shape(format!(
            "pair layout {:?} is not the image of pocket layout {:?}",
            pair.layout(),
            pocket.layout()
        )));
    }
    Ok(())
}

/// `T_φ` as an operator from pair functions to pocket functions.
pub fn lift_operator<T: Scalar>(pocket: &Arc<SectorSpace>, pair: &Arc<SectorSpace>) -> Result<SectorOperator<T>> {
    check_pocket_pair(pocket, pair)?;
    SectorOperator::from_row_fn(pocket, pair, 0, |s| {
        let p = addition_map(PocketState::from_slots(s));
        Ok(vec![(p.as_slots().to_vec(), T::one())])
    })
}

/// The μ-canonical `T_φ⁻¹` as an operator from pocket to pair functions.
pub fn canonical_inverse_operator<T: Scalar>(
    mu: &SectorMeasures<T>,
    pair: &Arc<SectorSpace>,
) -> Result<SectorOperator<T>> {
    let pocket = mu.space();
    check_pocket_pair(pocket, pair)?;
    let mut blocks = Vec::new();
    for sector in pocket.sectors() {
        let Some(target) = pair.sector(sector.total()) else { continue };
        let measure = mu.sector(sector.total()).expect("measure per sector");
        let mut fiber_mass = vec![T::zero(); target.len()];
        let mut entries = Vec::new();
        for (i, s) in sector.states().iter().enumerate() {
            let p = addition_map(PocketState::from_slots(s));
            let j = target.position(&p.as_slots()).expect("image inside pair sector");
            fiber_mass[j] = fiber_mass[j].clone() + measure.weight(i).clone();
            entries.push((j, i, measure.weight(i).clone()));
        }
        if let Some(j) = fiber_mass.iter().position(|m| m.is_zero()) {
            return Err(Error::Conditioning(format!(
                "fiber over {} has zero mass",
                PairState::from_slots(target.state(j))
            )));
        }
        let m = SparseMatrix::from_triplets(
            target.len(),
            sector.len(),
            entries
                .into_iter()
                .map(|(j, i, w)| (j, i, w / fiber_mass[j].clone())),
        );
        blocks.push((sector.total(), m));
    }
    SectorOperator::from_blocks(pair.clone(), pocket.clone(), 0, blocks)
}

/// Operator of a slot permutation: `(Q f)(s) = f(s∘perm)`, i.e. slot `i` of
/// the read state is slot `perm[i]` of `s`.
pub fn permutation_operator<T: Scalar>(space: &Arc<SectorSpace>, perm: &[usize]) -> Result<SectorOperator<T>> {
    let slots = space.layout().slots();
    let mut seen = vec![false; slots];
    if perm.len() != slots || perm.iter().any(|&p| p >= slots || std::mem::replace(&mut seen[p], true)) {
        return Err(Error::Shape(format!("{perm:?} is not a permutation of {slots} slots")));
    }
    SectorOperator::from_row_fn(space, space, 0, |s| {
        let image: Vec<u32> = perm.iter().map(|&p| s[p]).collect();
        if !space.layout().admits(&image) {
            return Err(Error::Capacity(format!(
                "permuting {s:?} gives {image:?}, outside capacities {:?}",
                space.layout().capacities()
            )));
        }
        Ok(vec![(image, T::one())])
    })
}

/// The exchange operator `(E f)(s) = f(E(s))` on pocket functions.
pub fn exchange_operator<T: Scalar>(pocket: &Arc<SectorSpace>) -> Result<SectorOperator<T>> {
    if pocket.layout().kind() != SpaceKind::Pocket {
        return Err(Error::Shape("exchange acts on pocket spaces".into()));
    }
    permutation_operator(pocket, &[2, 1, 0, 3])
}

/// Evidence that an operator maps lifted functions to lifted functions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LumpabilityCertificate {
    pub sectors: Vec<u32>,
    pub fibers_checked: usize,
}

/// Pushes a lumpable pocket operator down to pair functions:
/// returns `T_φ⁻¹ B T_φ` together with the certificate that `B T_φ f` is
/// constant on every fiber of the addition map.
pub fn lump_operator<T: Scalar>(
    b: &SectorOperator<T>,
    mu: &SectorMeasures<T>,
    pair: &Arc<SectorSpace>,
) -> Result<(SectorOperator<T>, LumpabilityCertificate)> {
    let pocket = b.rows().clone();
    let col_lift = lift_operator::<T>(b.cols(), pair)?;
    let b_lift = b.compose(&col_lift)?;
    let mut fibers_checked = 0;
    for (&n, block) in b_lift.blocks() {
        let sector = pocket.sector(n).expect("row sector");
        let mut first_in_fiber: HashMap<PairState, usize> = HashMap::new();
        for (i, s) in sector.states().iter().enumerate() {
            let p = addition_map(PocketState::from_slots(s));
            match first_in_fiber.get(&p) {
                None => {
                    first_in_fiber.insert(p, i);
                }
                Some(&i0) => {
                    if block.row(i0) != block.row(i) {
                        let col_sector = b_lift.col_sector(n).expect("column sector");
                        let (j, left, right) = first_difference(block.row(i0), block.row(i));
                        return Err(Error::NotLumpable(format!(
                            "lifting the indicator of {} gives {} at {} but {} at {}, both in the fiber over {}",
                            PairState::from_slots(col_sector.state(j)),
                            left.render(),
                            PocketState::from_slots(sector.state(i0)),
                            right.render(),
                            PocketState::from_slots(s),
                            p
                        )));
                    }
                }
            }
        }
        fibers_checked += first_in_fiber.len();
    }
    let inverse = canonical_inverse_operator(mu, pair)?;
    let lumped = inverse.compose(&b_lift)?;
    let certificate = LumpabilityCertificate {
        sectors: b_lift.blocks().keys().copied().collect(),
        fibers_checked,
    };
    Ok((lumped, certificate))
}

fn first_difference<T: Scalar>(a: &[(usize, T)], b: &[(usize, T)]) -> (usize, T, T) {
    let value = |row: &[(usize, T)], j: usize| {
        row.iter().find(|(c, _)| *c == j).map_or(T::zero(), |(_, v)| v.clone())
    };
    let mut cols: Vec<usize> = a.iter().chain(b).map(|(c, _)| *c).collect();
    cols.sort_unstable();
    cols.into_iter()
        .map(|j| (j, value(a, j), value(b, j)))
        .find(|(_, x, y)| x != y)
        .expect("rows differ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio};
    use num_rational::BigRational;
    use proptest::prelude::*;

    type Q = BigRational;

    #[test]
    fn exchange_examples() {
        let s = PocketState::new(1, 2, 3, 4);
        assert_eq!(exchange_map(s), PocketState::new(3, 2, 1, 4));
        assert_eq!(exchange_map(exchange_map(s)), s);
        let z = PocketState::new(0, 0, 0, 0);
        assert_eq!(exchange_map(z), z);
    }

    #[test]
    fn exchange_under_unequal_top_capacities() {
        let caps = PocketCapacities { gamma1: 2, delta1: 1, gamma2: 3, delta2: 1 };
        assert!(exchange_map_within(PocketState::new(0, 0, 2, 0), &caps).is_ok());
        assert!(matches!(
            exchange_map_within(PocketState::new(0, 0, 3, 0), &caps),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn addition_examples() {
        assert_eq!(addition_map(PocketState::new(1, 2, 3, 4)), PairState::new(3, 7));
        assert_eq!(addition_map(PocketState::new(0, 0, 0, 0)), PairState::new(0, 0));
    }

    #[test]
    fn fibers_have_product_size() {
        let space = SectorSpace::new(Layout::pocket(), 9);
        for sector in space.sectors() {
            let mut sizes: HashMap<PairState, u32> = HashMap::new();
            for s in sector.states() {
                *sizes.entry(addition_map(PocketState::from_slots(s))).or_default() += 1;
            }
            for (p, count) in sizes {
                assert_eq!(count, (p.n1 + 1) * (p.n2 + 1));
            }
        }
    }

    #[test]
    fn sector_sizes() {
        let pair = SectorSpace::new(Layout::pair(), 30);
        let pocket = SectorSpace::new(Layout::pocket(), 30);
        for n in 0..=30u32 {
            assert_eq!(pair.sector(n).unwrap().len() as u32, n + 1);
            assert_eq!(
                pocket.sector(n).unwrap().len() as u32,
                (n + 1) * (n + 2) * (n + 3) / 6
            );
        }
    }

    #[test]
    fn sector_order_is_lexicographic() {
        let pair = Sector::new(&Layout::pair(), 3);
        assert_eq!(pair.state(0), &[0, 3]);
        assert_eq!(pair.state(3), &[3, 0]);
        let pocket = Sector::new(&Layout::pocket(), 2);
        let mut sorted = pocket.states().to_vec();
        sorted.sort();
        assert_eq!(sorted, pocket.states());
    }

    #[test]
    fn capacities_exclude_states() {
        let caps = PocketCapacities { gamma1: 1, delta1: 1, gamma2: 1, delta2: 1 };
        let space = SectorSpace::new(Layout::pocket_with_capacities(caps), 5);
        assert_eq!(space.sector(4).unwrap().len(), 1);
        assert!(space.sector(5).unwrap().is_empty());
        assert_eq!(space.layout().lumped().unwrap().capacities(), Some(&[2, 2][..]));
    }

    fn pseudo_random(seed: u64, len: usize) -> Vec<Q> {
        let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (0..len)
            .map(|_| {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ratio(((x >> 33) % 19) as i64 - 9, ((x >> 17) % 7) as i64 + 1)
            })
            .collect()
    }

    fn product_measure(sector: &Sector) -> Measure<Q> {
        // discrete Γ product with shapes (1,2,1,3) at λ = 1
        let shapes = [int(1), int(2), int(1), int(3)];
        Measure::from_fn(sector, |s| {
            s.iter()
                .zip(&shapes)
                .map(|(&n, b)| crate::scalar::rising(b, n) / crate::scalar::factorial::<Q>(n))
                .fold(int(1), |a, w| a * w)
        })
        .unwrap()
    }

    #[test]
    fn canonical_inverse_properties() {
        for n in 0..=8 {
            let pair = Sector::new(&Layout::pair(), n);
            let pocket = Sector::new(&Layout::pocket(), n);
            let mu = product_measure(&pocket);
            for seed in 0..4 {
                let f = pseudo_random(seed, pair.len());
                let g = pseudo_random(seed + 100, pocket.len());
                // (a) T⁻¹ T f = f
                let lifted = lift_function(&f, &pair, &pocket);
                assert_eq!(mu_canonical_inverse(&mu, &pocket, &lifted, &pair).unwrap(), f);
                // (c) ∫ T⁻¹ g dμ̃ = ∫ g dμ
                let tg = mu_canonical_inverse(&mu, &pocket, &g, &pair).unwrap();
                let image: Vec<Q> = {
                    let mut m = vec![int(0); pair.len()];
                    for (i, s) in pocket.states().iter().enumerate() {
                        let j = pair.position(&addition_map(PocketState::from_slots(s)).as_slots()).unwrap();
                        m[j] += mu.weight(i);
                    }
                    m
                };
                let lhs = tg.iter().zip(&image).fold(int(0), |a, (x, w)| a + x * w);
                assert_eq!(lhs, mu.integrate(&g));
                // (d) T⁻¹(T f · g) = f · T⁻¹ g
                let prod: Vec<Q> = lifted.iter().zip(&g).map(|(a, b)| a * b).collect();
                let left = mu_canonical_inverse(&mu, &pocket, &prod, &pair).unwrap();
                let right: Vec<Q> = f.iter().zip(&tg).map(|(a, b)| a * b).collect();
                assert_eq!(left, right);
            }
        }
    }

    #[test]
    fn lift_examples() {
        let pair = Sector::new(&Layout::pair(), 4);
        let pocket = Sector::new(&Layout::pocket(), 4);
        let ones = vec![int(1); pair.len()];
        assert!(lift_function(&ones, &pair, &pocket).iter().all(|v| *v == int(1)));
        let first: Vec<Q> = pair.states().iter().map(|s| int(s[0] as i64)).collect();
        let lifted = lift_function(&first, &pair, &pocket);
        for (s, v) in pocket.states().iter().zip(lifted) {
            assert_eq!(v, int((s[0] + s[1]) as i64));
        }
    }

    #[test]
    fn zero_mass_fiber_is_a_conditioning_error() {
        let pair = Sector::new(&Layout::pair(), 1);
        let pocket = Sector::new(&Layout::pocket(), 1);
        // no mass on agent 2 holding the unit
        let mu = Measure::from_fn(&pocket, |s| if s[2] + s[3] > 0 { int(0) } else { int(1) }).unwrap();
        let g = vec![int(1); pocket.len()];
        assert!(matches!(
            mu_canonical_inverse(&mu, &pocket, &g, &pair),
            Err(Error::Conditioning(_))
        ));
    }

    #[test]
    fn identity_lumps_to_identity() {
        let pocket = SectorSpace::new(Layout::pocket(), 6);
        let pair = SectorSpace::new(Layout::pair(), 6);
        let mu = SectorMeasures::from_fn(&pocket, |_| int(1)).unwrap();
        let id = SectorOperator::<Q>::identity(&pocket);
        let (lumped, cert) = lump_operator(&id, &mu, &pair).unwrap();
        assert_eq!(lumped.first_mismatch(&SectorOperator::identity(&pair), 0.0), None);
        assert_eq!(cert.sectors, (0..=6).collect::<Vec<_>>());
    }

    #[test]
    fn exchange_alone_is_not_lumpable() {
        let caps = PocketCapacities { gamma1: 2, delta1: 1, gamma2: 2, delta2: 3 };
        let pocket = SectorSpace::new(Layout::pocket_with_capacities(caps), 4);
        let pair = SectorSpace::new(pocket.layout().lumped().unwrap(), 4);
        let mu = SectorMeasures::from_fn(&pocket, |_| int(1)).unwrap();
        let e = exchange_operator::<Q>(&pocket).unwrap();
        let err = lump_operator(&e, &mu, &pair).unwrap_err();
        assert!(matches!(err, Error::NotLumpable(_)));
    }

    #[test]
    fn exchange_with_unequal_tops_fails_or_is_not_lumpable() {
        let caps = PocketCapacities { gamma1: 2, delta1: 1, gamma2: 3, delta2: 1 };
        let wide = SectorSpace::new(Layout::pocket_with_capacities(caps), 4);
        assert!(matches!(exchange_operator::<Q>(&wide), Err(Error::Capacity(_))));
        // below the first reachable overflow the map is total but still not lumpable
        let narrow = SectorSpace::new(Layout::pocket_with_capacities(caps), 2);
        let pair = SectorSpace::new(narrow.layout().lumped().unwrap(), 2);
        let mu = SectorMeasures::from_fn(&narrow, |_| int(1)).unwrap();
        let e = exchange_operator::<Q>(&narrow).unwrap();
        assert!(matches!(lump_operator(&e, &mu, &pair), Err(Error::NotLumpable(_))));
    }

    proptest! {
        #[test]
        fn lift_then_inverse_is_identity(n in 0u32..=10, seed in any::<u64>()) {
            let pair = Sector::new(&Layout::pair(), n);
            let pocket = Sector::new(&Layout::pocket(), n);
            let mu = product_measure(&pocket);
            let f = pseudo_random(seed, pair.len());
            let lifted = lift_function(&f, &pair, &pocket);
            prop_assert_eq!(mu_canonical_inverse(&mu, &pocket, &lifted, &pair).unwrap(), f);
        }
    }
}
