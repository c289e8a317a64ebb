//! Ladder-operator representations and their multi-site sums.
//!
//! Three single-site families act on functions of an occupation `n`:
//!
//! | family | raise | lower | diagonal |
//! |---|---|---|---|
//! | SU(1,1), `κ` | `(κ+n) f(n+1)` | `n f(n-1)` | `(κ/2+n) f(n)` |
//! | SU(2), `γ` | `(γ-n) f(n+1)` | `n f(n-1)` | `(γ/2-n) f(n)` |
//! | Heisenberg | `f(n+1)` | `n f(n-1)` | `n f(n)` |
//!
//! [`Su2Variant::Printed`] keeps the alternative raising action
//! `(γ-n) f(n-1)` for comparison; it does not satisfy the SU(2) relations.

use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::SectorOperator;
use crate::scalar::Scalar;
use crate::statespace::{Layout, SectorSpace, SpaceKind};
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ladder {
    Raise,
    Lower,
    Diagonal,
}

impl fmt::Display for Ladder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ladder::Raise => "+",
            Ladder::Lower => "-",
            Ladder::Diagonal => "0",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Su2Variant {
    Forward,
    Printed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algebra {
    Su11,
    Su2(Su2Variant),
    Heisenberg,
}

/// One weighted single-site operator `weight · X^{ladder, param}_slot`.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteTerm {
    pub slot: usize,
    pub param: Rational,
    pub weight: Rational,
}

impl SiteTerm {
    pub fn new(slot: usize, param: Rational) -> Self {
        Self { slot, param, weight: Rational::one() }
    }

    pub fn weighted(slot: usize, param: Rational, weight: Rational) -> Self {
        Self { slot, param, weight }
    }
}

/// A sum of same-type single-site operators over the slots of a space.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryDescriptor {
    pub algebra: Algebra,
    pub ladder: Ladder,
    pub terms: Vec<SiteTerm>,
}

/// `(coefficient, read offset)` of a single-site action at occupation `n`.
fn site_action(algebra: Algebra, ladder: Ladder, param: &Rational, n: u32) -> (Rational, i64) {
    let n_q = Rational::from_integer(n.into());
    let two = Rational::from_integer(2.into());
    match (algebra, ladder) {
        (_, Ladder::Lower) => (n_q, -1),
        (Algebra::Su11, Ladder::Raise) => (param + n_q, 1),
        (Algebra::Su11, Ladder::Diagonal) => (param / two + n_q, 0),
        (Algebra::Su2(Su2Variant::Forward), Ladder::Raise) => (param - n_q, 1),
        (Algebra::Su2(Su2Variant::Printed), Ladder::Raise) => (param - n_q, -1),
        (Algebra::Su2(_), Ladder::Diagonal) => (param / two - n_q, 0),
        (Algebra::Heisenberg, Ladder::Raise) => (Rational::one(), 1),
        (Algebra::Heisenberg, Ladder::Diagonal) => (n_q, 0),
    }
}

fn shift_of(algebra: Algebra, ladder: Ladder) -> i32 {
    -(site_action(algebra, ladder, &Rational::one(), 1).1 as i32)
}

impl SymmetryDescriptor {
    pub fn new(algebra: Algebra, ladder: Ladder, terms: Vec<SiteTerm>) -> Self {
        Self { algebra, ladder, terms }
    }

    /// Every slot with unit weight and the given parameters.
    pub fn uniform(algebra: Algebra, ladder: Ladder, params: &[Rational]) -> Self {
        let terms = params
            .iter()
            .enumerate()
            .map(|(slot, p)| SiteTerm::new(slot, p.clone()))
            .collect();
        Self::new(algebra, ladder, terms)
    }

    pub fn shift(&self) -> i32 {
        shift_of(self.algebra, self.ladder)
    }

    fn validate(&self, layout: &Layout) -> Result<()> {
        if self.terms.is_empty() {
            return Err(Error::Descriptor("no site terms".into()));
        }
        for term in &self.terms {
            if term.slot >= layout.slots() {
                return Err(Error::Descriptor(format!(
                    "slot {} outside a {}-slot space",
                    term.slot,
                    layout.slots()
                )));
            }
            match self.algebra {
                Algebra::Su11 if !term.param.is_positive() => {
                    return Err(Error::Parameter(format!("κ = {} must be positive", term.param.render())));
                }
                Algebra::Su2(_) => {
                    if !term.param.is_integer() || !term.param.is_positive() {
                        return Err(Error::Parameter(format!(
                            "γ = {} must be a positive integer",
                            term.param.render()
                        )));
                    }
                    let gamma = Rational::from_integer(layout.capacity(term.slot).unwrap_or(u32::MAX).into());
                    if layout.capacity(term.slot).is_none() || gamma > term.param {
                        return Err(Error::Capacity(format!(
                            "slot {} needs capacity at most {}, has {:?}",
                            term.slot,
                            term.param.render(),
                            layout.capacity(term.slot)
                        )));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// The operator on every sector of `space` whose image is constructed.
    pub fn operator<T: Scalar>(&self, space: &Arc<SectorSpace>) -> Result<SectorOperator<T>> {
        let layout = space.layout();
        self.validate(layout)?;
        let shift = self.shift();
        SectorOperator::from_row_fn(space, space, shift, |x| {
            let mut out: Vec<(Vec<u32>, T)> = Vec::with_capacity(self.terms.len());
            for term in &self.terms {
                let n = x[term.slot];
                let (coef, offset) = site_action(self.algebra, self.ladder, &term.param, n);
                let coef = coef * &term.weight;
                if coef.is_zero() {
                    continue;
                }
                let target = n as i64 + offset;
                if target < 0 {
                    continue;
                }
                if layout.capacity(term.slot).is_some_and(|c| target > c as i64) {
                    return Err(Error::Capacity(format!(
                        "{x:?} reads slot {} at {target}, above capacity {}",
                        term.slot,
                        layout.capacity(term.slot).unwrap()
                    )));
                }
                let mut y = x.to_vec();
                y[term.slot] = target as u32;
                out.push((y, T::from_rational(&coef)));
            }
            Ok(out)
        })
    }

    /// Sums the terms inside each group of slots into one term on a new slot
    /// (group `i` becomes slot `i`), if the sum maps lifted functions to
    /// lifted functions.
    pub fn lump(&self, groups: &[Vec<usize>]) -> Result<SymmetryDescriptor> {
        let mut seen = Vec::new();
        let mut terms = Vec::new();
        for (new_slot, group) in groups.iter().enumerate() {
            let members: Vec<&SiteTerm> = self.terms.iter().filter(|t| group.contains(&t.slot)).collect();
            if group.iter().any(|s| seen.contains(s)) {
                return Err(Error::Descriptor(format!("slot groups overlap at {group:?}")));
            }
            seen.extend(group.iter().copied());
            if members.is_empty() {
                continue;
            }
            if members.len() != group.len() {
                return Err(Error::NotLumpable(format!(
                    "group {group:?} has {} terms; every slot of a group needs one",
                    members.len()
                )));
            }
            let param = members.iter().fold(Rational::zero(), |a, t| a + &t.param);
            let weights_equal = members.iter().all(|t| t.weight == members[0].weight);
            let weight = match (self.algebra, self.ladder) {
                (Algebra::Heisenberg, Ladder::Raise) => members.iter().fold(Rational::zero(), |a, t| a + &t.weight),
                _ if weights_equal => members[0].weight.clone(),
                _ => {
                    return Err(Error::NotLumpable(format!(
                        "{:?}{} terms on {group:?} carry unequal weights {}",
                        self.algebra,
                        self.ladder,
                        members.iter().map(|t| t.weight.render()).collect::<Vec<_>>().join(", ")
                    )))
                }
            };
            terms.push(SiteTerm::weighted(new_slot, param, weight));
        }
        if let Some(t) = self.terms.iter().find(|t| !seen.contains(&t.slot)) {
            return Err(Error::Descriptor(format!("slot {} is in no group", t.slot)));
        }
        Ok(SymmetryDescriptor::new(self.algebra, self.ladder, terms))
    }
}

impl fmt::Display for SymmetryDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letter = match self.algebra {
            Algebra::Su11 => "K",
            Algebra::Su2(_) => "J",
            Algebra::Heisenberg => "a",
        };
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|t| {
                let w = if t.weight.is_one() { String::new() } else { format!("{}·", t.weight.render()) };
                match self.algebra {
                    Algebra::Heisenberg => format!("{w}{letter}{}_{}", self.ladder, t.slot + 1),
                    _ => format!("{w}{letter}{}[{}]_{}", self.ladder, t.param.render(), t.slot + 1),
                }
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

fn single_site_space(algebra: Algebra, param: &Rational, nmax: u32) -> Result<Arc<SectorSpace>> {
    let layout = match algebra {
        Algebra::Su2(_) => {
            if !param.is_integer() || !param.is_positive() {
                return Err(Error::Parameter(format!("γ = {} must be a positive integer", param.render())));
            }
            let gamma: u32 = param
                .to_integer()
                .try_into()
                .map_err(|_| Error::Parameter("γ too large".into()))?;
            Layout::site_with_capacity(gamma)
        }
        _ => Layout::site(),
    };
    Ok(SectorSpace::new(layout, nmax))
}

/// `K^{α,κ}` on a single site, sectors `0..=nmax`.
pub fn k_operator<T: Scalar>(ladder: Ladder, kappa: &Rational, nmax: u32) -> Result<SectorOperator<T>> {
    let space = single_site_space(Algebra::Su11, kappa, nmax)?;
    SymmetryDescriptor::uniform(Algebra::Su11, ladder, std::slice::from_ref(kappa)).operator(&space)
}

/// `J^{α,γ}` on a single site of capacity `γ`, sectors `0..=nmax`.
pub fn j_operator<T: Scalar>(ladder: Ladder, gamma: &Rational, variant: Su2Variant, nmax: u32) -> Result<SectorOperator<T>> {
    let algebra = Algebra::Su2(variant);
    let space = single_site_space(algebra, gamma, nmax)?;
    SymmetryDescriptor::uniform(algebra, ladder, std::slice::from_ref(gamma)).operator(&space)
}

/// `a†` (raise), `a` (lower) or the number operator on a single site.
pub fn ladder_operator<T: Scalar>(ladder: Ladder, nmax: u32) -> Result<SectorOperator<T>> {
    let space = SectorSpace::new(Layout::site(), nmax);
    SymmetryDescriptor::uniform(Algebra::Heisenberg, ladder, &[Rational::zero()]).operator(&space)
}

/// Sum of operators on one space with one shift.
pub fn site_sum<T: Scalar>(ops: &[SectorOperator<T>]) -> Result<SectorOperator<T>> {
    let (first, rest) = ops
        .split_first()
        .ok_or_else(|| Error::Shape("empty site sum".into()))?;
    rest.iter().try_fold(first.clone(), |acc, op| acc.add(op))
}

/// `AB - BA` on the sectors where both products are constructed.
#[derive(Clone, Debug)]
pub struct Commutator<T> {
    pub op: SectorOperator<T>,
    pub excluded: Vec<u32>,
}

pub fn commutator<T: Scalar>(a: &SectorOperator<T>, b: &SectorOperator<T>) -> Result<Commutator<T>> {
    let ab = a.compose(b)?;
    let ba = b.compose(a)?;
    let op = ab.sub(&ba)?;
    if op.blocks().is_empty() {
        return Err(Error::Shape("the two products share no sector".into()));
    }
    let excluded = op.excluded_sectors();
    Ok(Commutator { op, excluded })
}

/// The pair-level descriptor obtained by lumping a four-pocket sum through
/// the addition map.
pub fn lumped_symmetry(pocket: &SymmetryDescriptor) -> Result<SymmetryDescriptor> {
    if pocket.terms.iter().any(|t| t.slot > 3) {
        return Err(Error::Descriptor("pocket descriptors use slots 0..=3".into()));
    }
    pocket.lump(&[vec![0, 1], vec![2, 3]])
}

/// Lumps a descriptor on any space with the given layout kind; used for
/// checking the lumping identity on pocket spaces.
pub fn pair_space_for(pocket: &SectorSpace) -> Result<Arc<SectorSpace>> {
    if pocket.layout().kind() != SpaceKind::Pocket {
        return Err(Error::Shape("expected a pocket space".into()));
    }
    Ok(SectorSpace::new(pocket.layout().lumped()?, pocket.nmax()))
}
