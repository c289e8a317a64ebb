//! The four model families, their redistribution and transition operators,
//! and the two-site generators whose stationary laws are the splitting laws.

use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::algebra::{lumped_symmetry, Algebra, Ladder, SiteTerm, Su2Variant, SymmetryDescriptor};
use crate::dist::{beta_binomial_pmf, binomial_pmf, hypergeometric_pmf, Pmf};
use crate::error::{Error, Result};
use crate::linalg::nullspace;
use crate::operator::SectorOperator;
use crate::scalar::{binomial, factorial, parse_rational, rising, Scalar};
use crate::statespace::{
    exchange_operator, lump_operator, Layout, LumpabilityCertificate, PocketCapacities, SectorMeasures, SectorSpace,
};
use crate::verify::{DualityFunction, OneSiteDuality};
use crate::Rational;

/// One of the four model families with its parameters.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ModelSpec {
    /// Beta-Binomial splitting with pocket parameters `(s1,t1;s2,t2)`.
    Iem { s1: Rational, t1: Rational, s2: Rational, t2: Rational },
    /// Hypergeometric splitting with pocket capacities `(γ1,δ1;γ2,δ2)`.
    Riem { gamma1: u32, delta1: u32, gamma2: u32, delta2: u32 },
    /// `Bin(n, 1/2)` splitting.
    Rw,
    /// `Bin(n, 1/(1+q_i))` splitting.
    Piem { q1: Rational, q2: Rational },
}

/// Law of the top part of one agent's wealth.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SplitLaw {
    BetaBinomial { s: Rational, t: Rational },
    Hypergeometric { gamma: u32, delta: u32 },
    /// Top part `Bin(n, 1/(1+q))`.
    Binomial { q: Rational },
}

impl SplitLaw {
    pub fn pmf<T: Scalar>(&self, n: u32) -> Result<Pmf<T>> {
        match self {
            SplitLaw::BetaBinomial { s, t } => beta_binomial_pmf(n, s, t),
            SplitLaw::Hypergeometric { gamma, delta } => hypergeometric_pmf(n, *gamma, *delta),
            SplitLaw::Binomial { q } => binomial_pmf(n, &(Rational::one() / (Rational::one() + q))),
        }
    }

    /// Largest wealth the agent can hold.
    pub fn capacity(&self) -> Option<u32> {
        match self {
            SplitLaw::Hypergeometric { gamma, delta } => Some(gamma + delta),
            _ => None,
        }
    }

    /// Capacity of the top pocket.
    pub fn top_capacity(&self) -> Option<u32> {
        match self {
            SplitLaw::Hypergeometric { gamma, .. } => Some(*gamma),
            _ => None,
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Iem { s1, t1, s2, t2 } => {
                write!(f, "IEM({},{};{},{})", s1.render(), t1.render(), s2.render(), t2.render())
            }
            ModelSpec::Riem { gamma1, delta1, gamma2, delta2 } => {
                write!(f, "RIEM({gamma1},{delta1};{gamma2},{delta2})")
            }
            ModelSpec::Rw => f.write_str("RW"),
            ModelSpec::Piem { q1, q2 } => write!(f, "PIEM({},{})", q1.render(), q2.render()),
        }
    }
}

/// `IEM(s,t)`, `IEM(s1,t1;s2,t2)`, `RIEM(g,d)`, `RIEM(g1,d1;g2,d2)`, `RW`,
/// `PIEM(q)` or `PIEM(q1,q2)`. Parameters are exact fractions or decimals.
impl std::str::FromStr for ModelSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let bad = |why: &str| Error::Model(format!("'{text}': {why}"));
        let (name, args) = match text.split_once('(') {
            Some((name, rest)) => {
                let inner = rest.trim_end().strip_suffix(')').ok_or_else(|| bad("missing ')'"))?;
                (name.trim(), Some(inner))
            }
            None => (text, None),
        };
        let groups: Vec<Vec<&str>> = match args {
            Some(a) if !a.trim().is_empty() => a.split(';').map(|g| g.split(',').map(str::trim).collect()).collect(),
            _ => Vec::new(),
        };
        let rationals = |g: &[&str]| -> Result<Vec<Rational>> {
            g.iter()
                .map(|s| parse_rational(s).ok_or_else(|| bad(&format!("'{s}' is not an exact number"))))
                .collect()
        };
        // two agents given as (a,b;c,d), or one agent (a,b) used twice
        let two_pairs = |groups: &[Vec<&str>]| -> Result<[Rational; 4]> {
            let flat = match groups {
                [g] if g.len() == 2 => [rationals(g)?, rationals(g)?].concat(),
                [g, h] if g.len() == 2 && h.len() == 2 => [rationals(g)?, rationals(h)?].concat(),
                _ => return Err(bad("expected (a,b) or (a,b;c,d)")),
            };
            Ok(std::array::from_fn(|i| flat[i].clone()))
        };
        match name.to_ascii_uppercase().as_str() {
            "IEM" => {
                let [s1, t1, s2, t2] = two_pairs(&groups)?;
                ModelSpec::iem(s1, t1, s2, t2)
            }
            "RIEM" => {
                let v = two_pairs(&groups)?;
                let as_u32 = |r: &Rational| {
                    r.is_integer()
                        .then(|| r.to_integer().try_into().ok())
                        .flatten()
                        .ok_or_else(|| bad("capacities must be non-negative integers"))
                };
                ModelSpec::riem(as_u32(&v[0])?, as_u32(&v[1])?, as_u32(&v[2])?, as_u32(&v[3])?)
            }
            "RW" if groups.is_empty() => Ok(ModelSpec::Rw),
            "RW" => Err(bad("RW takes no parameters")),
            "PIEM" => {
                let flat: Vec<&str> = groups.concat();
                let q = rationals(&flat)?;
                match q.as_slice() {
                    [q] => ModelSpec::piem(q.clone(), q.clone()),
                    [q1, q2] => ModelSpec::piem(q1.clone(), q2.clone()),
                    _ => Err(bad("expected PIEM(q) or PIEM(q1,q2)")),
                }
            }
            _ => Err(bad("unknown family; expected IEM, RIEM, RW or PIEM")),
        }
    }
}

impl Serialize for ModelSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

/// Pair-level generator of a thermalizing two-site dynamics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SipVariant {
    /// `(n,m) → (n+1,m-1)` at rate `m(s+n)`.
    Conserving,
    /// The same jump listed as `(n-1,m-1)`, which loses mass.
    Printed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RwFactorization {
    /// `-(q a1 - a2)(a1† - a2†)`.
    Conservative,
    /// `-(a1 - a2)(a1† - q a2†)`.
    Printed,
}

fn require_positive(name: &str, x: &Rational) -> Result<()> {
    if x.is_positive() {
        Ok(())
    } else {
        Err(Error::Model(format!("{name} must be positive, got {}", x.render())))
    }
}

fn q_of(n: u32) -> Rational {
    Rational::from_integer(n.into())
}

impl ModelSpec {
    pub fn iem(s1: Rational, t1: Rational, s2: Rational, t2: Rational) -> Result<Self> {
        let spec = ModelSpec::Iem { s1, t1, s2, t2 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn riem(gamma1: u32, delta1: u32, gamma2: u32, delta2: u32) -> Result<Self> {
        let spec = ModelSpec::Riem { gamma1, delta1, gamma2, delta2 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn piem(q1: Rational, q2: Rational) -> Result<Self> {
        let spec = ModelSpec::Piem { q1, q2 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Iem { s1, t1, s2, t2 } => {
                require_positive("s1", s1)?;
                require_positive("t1", t1)?;
                require_positive("s2", s2)?;
                require_positive("t2", t2)
            }
            ModelSpec::Riem { gamma1, delta1, gamma2, delta2 } => {
                if [gamma1, delta1, gamma2, delta2].iter().any(|c| **c == 0) {
                    return Err(Error::Model("pocket capacities must be at least 1".into()));
                }
                Ok(())
            }
            ModelSpec::Rw => Ok(()),
            ModelSpec::Piem { q1, q2 } => {
                require_positive("q1", q1)?;
                require_positive("q2", q2)
            }
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            ModelSpec::Iem { .. } => "IEM",
            ModelSpec::Riem { .. } => "RIEM",
            ModelSpec::Rw => "RW",
            ModelSpec::Piem { .. } => "PIEM",
        }
    }

    /// Splitting law of agent `agent` (0 or 1).
    pub fn split_law(&self, agent: usize) -> SplitLaw {
        assert!(agent < 2, "two agents");
        match self {
            ModelSpec::Iem { s1, t1, s2, t2 } => {
                let (s, t) = if agent == 0 { (s1, t1) } else { (s2, t2) };
                SplitLaw::BetaBinomial { s: s.clone(), t: t.clone() }
            }
            ModelSpec::Riem { gamma1, delta1, gamma2, delta2 } => {
                let (gamma, delta) = if agent == 0 { (*gamma1, *delta1) } else { (*gamma2, *delta2) };
                SplitLaw::Hypergeometric { gamma, delta }
            }
            ModelSpec::Rw => SplitLaw::Binomial { q: Rational::one() },
            ModelSpec::Piem { q1, q2 } => SplitLaw::Binomial {
                q: if agent == 0 { q1.clone() } else { q2.clone() },
            },
        }
    }

    /// Rebuilds a spec from two per-agent splitting laws of one family.
    pub fn from_laws(a: &SplitLaw, b: &SplitLaw) -> Result<Self> {
        match (a, b) {
            (SplitLaw::BetaBinomial { s: s1, t: t1 }, SplitLaw::BetaBinomial { s: s2, t: t2 }) => {
                Self::iem(s1.clone(), t1.clone(), s2.clone(), t2.clone())
            }
            (SplitLaw::Hypergeometric { gamma: g1, delta: d1 }, SplitLaw::Hypergeometric { gamma: g2, delta: d2 }) => {
                Self::riem(*g1, *d1, *g2, *d2)
            }
            (SplitLaw::Binomial { q: q1 }, SplitLaw::Binomial { q: q2 }) => {
                if q1.is_one() && q2.is_one() {
                    Ok(ModelSpec::Rw)
                } else {
                    Self::piem(q1.clone(), q2.clone())
                }
            }
            _ => Err(Error::Model("the two agents use different families".into())),
        }
    }

    pub fn capacities(&self) -> Option<PocketCapacities> {
        match self {
            ModelSpec::Riem { gamma1, delta1, gamma2, delta2 } => Some(PocketCapacities {
                gamma1: *gamma1,
                delta1: *delta1,
                gamma2: *gamma2,
                delta2: *delta2,
            }),
            _ => None,
        }
    }

    pub fn pocket_layout(&self) -> Layout {
        match self.capacities() {
            Some(c) => Layout::pocket_with_capacities(c),
            None => Layout::pocket(),
        }
    }

    pub fn pair_layout(&self) -> Layout {
        self.pocket_layout().lumped().expect("pocket layouts lump")
    }

    pub fn pocket_space(&self, nmax: u32) -> Arc<SectorSpace> {
        SectorSpace::new(self.pocket_layout(), nmax)
    }

    pub fn pair_space(&self, nmax: u32) -> Arc<SectorSpace> {
        SectorSpace::new(self.pair_layout(), nmax)
    }

    /// Per-pocket stationary weight (intensity one) of `n` in `slot`.
    pub fn pocket_weight<T: Scalar>(&self, slot: usize, n: u32) -> T {
        match self {
            ModelSpec::Iem { s1, t1, s2, t2 } => {
                let beta = [s1, t1, s2, t2][slot];
                rising(&T::from_rational(beta), n) / factorial::<T>(n)
            }
            ModelSpec::Riem { .. } => {
                let cap = self.capacities().unwrap().as_slots()[slot];
                binomial(cap, n)
            }
            ModelSpec::Rw => T::one() / factorial::<T>(n),
            ModelSpec::Piem { q1, q2 } => {
                let c = match slot {
                    1 => T::from_rational(q1),
                    3 => T::from_rational(q2),
                    _ => T::one(),
                };
                c.powi(n as i32) / factorial::<T>(n)
            }
        }
    }

    /// Per-agent weight of the image measure under the addition map.
    pub fn pair_weight<T: Scalar>(&self, agent: usize, n: u32) -> T {
        match self {
            ModelSpec::Iem { s1, t1, s2, t2 } => {
                let r = if agent == 0 { s1 + t1 } else { s2 + t2 };
                rising(&T::from_rational(&r), n) / factorial::<T>(n)
            }
            ModelSpec::Riem { gamma1, delta1, gamma2, delta2 } => {
                let r = if agent == 0 { gamma1 + delta1 } else { gamma2 + delta2 };
                binomial(r, n)
            }
            ModelSpec::Rw => T::one() / factorial::<T>(n),
            ModelSpec::Piem { q1, q2 } => {
                let q = if agent == 0 { q1 } else { q2 };
                T::from_rational(&(Rational::one() + q)).powi(n as i32) / factorial::<T>(n)
            }
        }
    }

    /// Product stationary measure on pocket sectors, conditioned per sector.
    pub fn pocket_stationary<T: Scalar>(&self, space: &Arc<SectorSpace>) -> Result<SectorMeasures<T>> {
        SectorMeasures::from_fn(space, |s| {
            s.iter()
                .enumerate()
                .fold(T::one(), |acc, (slot, &n)| acc * self.pocket_weight::<T>(slot, n))
        })
    }

    /// Image measure on pair sectors, conditioned per sector.
    pub fn pair_stationary<T: Scalar>(&self, space: &Arc<SectorSpace>) -> Result<SectorMeasures<T>> {
        SectorMeasures::from_fn(space, |s| self.pair_weight::<T>(0, s[0]) * self.pair_weight::<T>(1, s[1]))
    }

    /// Closed form of the sector-`n` stationary law of agent 1's wealth.
    pub fn pair_stationary_pmf<T: Scalar>(&self, n: u32) -> Result<Pmf<T>> {
        match self {
            ModelSpec::Iem { s1, t1, s2, t2 } => beta_binomial_pmf(n, &(s1 + t1), &(s2 + t2)),
            ModelSpec::Riem { gamma1, delta1, gamma2, delta2 } => {
                let pmf: Pmf<T> = hypergeometric_pmf(n, gamma1 + delta1, gamma2 + delta2)?;
                // drop states where agent 2 would overflow
                let lo = n.saturating_sub(gamma2 + delta2);
                let keep: Vec<usize> = (0..pmf.len()).filter(|&i| pmf.support()[i] >= lo).collect();
                Pmf::new(
                    keep.iter().map(|&i| pmf.support()[i]).collect(),
                    keep.iter().map(|&i| pmf.masses()[i].clone()).collect(),
                )
            }
            ModelSpec::Rw => binomial_pmf(n, &Rational::new(1.into(), 2.into())),
            ModelSpec::Piem { q1, q2 } => {
                let one = Rational::one();
                let two = &one + &one;
                binomial_pmf(n, &((&one + q1) / (two + q1 + q2)))
            }
        }
    }

    /// Four-pocket symmetry sum for this family.
    pub fn pocket_symmetry(&self, ladder: Ladder) -> SymmetryDescriptor {
        match self {
            ModelSpec::Iem { s1, t1, s2, t2 } => {
                SymmetryDescriptor::uniform(Algebra::Su11, ladder, &[s1.clone(), t1.clone(), s2.clone(), t2.clone()])
            }
            ModelSpec::Riem { gamma1, delta1, gamma2, delta2 } => SymmetryDescriptor::uniform(
                Algebra::Su2(Su2Variant::Forward),
                ladder,
                &[q_of(*gamma1), q_of(*delta1), q_of(*gamma2), q_of(*delta2)],
            ),
            ModelSpec::Rw => SymmetryDescriptor::uniform(Algebra::Heisenberg, ladder, &vec![Rational::zero(); 4]),
            ModelSpec::Piem { q1, q2 } => {
                let weights = match ladder {
                    Ladder::Raise => [Rational::one(), q1.clone(), Rational::one(), q2.clone()],
                    _ => std::array::from_fn(|_| Rational::one()),
                };
                SymmetryDescriptor::new(
                    Algebra::Heisenberg,
                    ladder,
                    weights
                        .into_iter()
                        .enumerate()
                        .map(|(slot, w)| SiteTerm::weighted(slot, Rational::zero(), w))
                        .collect(),
                )
            }
        }
    }

    /// The pocket symmetry pushed through the addition map.
    pub fn pair_symmetry(&self, ladder: Ladder) -> Result<SymmetryDescriptor> {
        lumped_symmetry(&self.pocket_symmetry(ladder))
    }

    /// The closed-form factorized self-duality kernel for this family.
    /// Specs with `s1 != s2` or `gamma1 != gamma2` get a warning attached.
    pub fn duality_function(&self) -> DualityFunction {
        let (sites, warning) = match self {
            ModelSpec::Iem { s1, t1, s2, t2 } => (
                [OneSiteDuality::Gamma { r: s1 + t1 }, OneSiteDuality::Gamma { r: s2 + t2 }],
                (s1 != s2).then(|| format!("s1 = {} differs from s2 = {}", s1.render(), s2.render())),
            ),
            ModelSpec::Riem { gamma1, delta1, gamma2, delta2 } => (
                [
                    OneSiteDuality::Binomial { r: gamma1 + delta1 },
                    OneSiteDuality::Binomial { r: gamma2 + delta2 },
                ],
                (gamma1 != gamma2).then(|| format!("gamma1 = {gamma1} differs from gamma2 = {gamma2}")),
            ),
            ModelSpec::Rw => ([OneSiteDuality::Falling, OneSiteDuality::Falling], None),
            ModelSpec::Piem { q1, q2 } => (
                [OneSiteDuality::Poisson { q: q1.clone() }, OneSiteDuality::Poisson { q: q2.clone() }],
                None,
            ),
        };
        DualityFunction {
            family: self.family().to_string(),
            sites,
            hypothesis_warning: warning,
        }
    }
}

/// `P f(s) = E f(split of φ(s))`: fresh independent splits of each agent's
/// wealth.
pub fn redistribution_operator<T: Scalar>(spec: &ModelSpec, nmax: u32) -> Result<SectorOperator<T>> {
    spec.validate()?;
    let space = spec.pocket_space(nmax);
    let laws = [spec.split_law(0), spec.split_law(1)];
    SectorOperator::from_row_fn(&space, &space, 0, |s| {
        let (n1, n2) = (s[0] + s[1], s[2] + s[3]);
        let p1: Pmf<T> = laws[0].pmf(n1)?;
        let p2: Pmf<T> = laws[1].pmf(n2)?;
        let mut row = Vec::with_capacity(p1.len() * p2.len());
        for (k1, a) in p1.iter() {
            for (k2, b) in p2.iter() {
                if a.is_zero() || b.is_zero() {
                    continue;
                }
                row.push((vec![k1, n1 - k1, k2, n2 - k2], a.clone() * b.clone()));
            }
        }
        Ok(row)
    })
}

/// `Π = T_φ⁻¹ P ℰ T_φ` by composition and lumping, with the certificate
/// that `P ℰ` is lumpable.
pub fn transition_operator_with_certificate<T: Scalar>(
    spec: &ModelSpec,
    nmax: u32,
) -> Result<(SectorOperator<T>, LumpabilityCertificate)> {
    let p = redistribution_operator::<T>(spec, nmax)?;
    let e = exchange_operator::<T>(p.rows())?;
    let pe = p.compose(&e)?;
    let mu = spec.pocket_stationary::<T>(p.rows())?;
    lump_operator(&pe, &mu, &spec.pair_space(nmax))
}

pub fn transition_operator<T: Scalar>(spec: &ModelSpec, nmax: u32) -> Result<SectorOperator<T>> {
    transition_operator_with_certificate(spec, nmax).map(|(op, _)| op)
}

/// `Π` by enumerating split, exchange and addition. Fails only when a split
/// of positive probability is exchanged into an overflowing pocket.
pub fn transition_operator_direct<T: Scalar>(spec: &ModelSpec, nmax: u32) -> Result<SectorOperator<T>> {
    spec.validate()?;
    let space = spec.pair_space(nmax);
    let laws = [spec.split_law(0), spec.split_law(1)];
    let tops = [laws[0].top_capacity(), laws[1].top_capacity()];
    SectorOperator::from_row_fn(&space, &space, 0, |x| {
        let p1: Pmf<T> = laws[0].pmf(x[0])?;
        let p2: Pmf<T> = laws[1].pmf(x[1])?;
        let mut row = Vec::new();
        for (k1, a) in p1.iter() {
            for (k2, b) in p2.iter() {
                if a.is_zero() || b.is_zero() {
                    continue;
                }
                if tops[0].is_some_and(|g| k2 > g) || tops[1].is_some_and(|g| k1 > g) {
                    return Err(Error::Capacity(format!(
                        "from ({},{}) the split ({k1},{};{k2},{}) swaps into an overflowing top pocket",
                        x[0],
                        x[1],
                        x[0] - k1,
                        x[1] - k2
                    )));
                }
                row.push((vec![k2 + x[0] - k1, k1 + x[1] - k2], a.clone() * b.clone()));
            }
        }
        Ok(row)
    })
}

/// `L = Π - 1`.
pub fn generator<T: Scalar>(spec: &ModelSpec, nmax: u32) -> Result<SectorOperator<T>> {
    let pi = transition_operator::<T>(spec, nmax)?;
    pi.sub(&SectorOperator::identity(pi.rows()))
}

/// Generator from jump rates: `L f(x) = Σ_y r(x,y) (f(y) - f(x))`.
fn rate_generator<T: Scalar>(space: &Arc<SectorSpace>, rates: impl Fn(u32, u32) -> [T; 2]) -> Result<SectorOperator<T>> {
    SectorOperator::from_row_fn(space, space, 0, |x| {
        let (n, m) = (x[0], x[1]);
        let [left, right] = rates(n, m);
        let mut row = Vec::new();
        let mut out = T::zero();
        if n > 0 && !left.is_zero() {
            row.push((vec![n - 1, m + 1], left.clone()));
            out = out + left;
        }
        if m > 0 && !right.is_zero() {
            row.push((vec![n + 1, m - 1], right.clone()));
            out = out + right;
        }
        row.push((vec![n, m], -out));
        Ok(row)
    })
}

/// SIP(s,t): `(n,m) → (n-1,m+1)` at `n(t+m)`, `(n+1,m-1)` at `m(s+n)`.
pub fn sip_generator<T: Scalar>(s: &Rational, t: &Rational, nmax: u32) -> Result<SectorOperator<T>> {
    require_positive("s", s)?;
    require_positive("t", t)?;
    let (s, t) = (T::from_rational(s), T::from_rational(t));
    let space = SectorSpace::new(Layout::pair(), nmax);
    rate_generator(&space, |n, m| {
        let (n, m) = (T::from_u64(n as u64), T::from_u64(m as u64));
        [n.clone() * (t.clone() + m.clone()), m * (s.clone() + n)]
    })
}

/// Jumps out of `(n,m)` with their rates, as `(target, rate)`.
pub fn sip_jumps(variant: SipVariant, s: &Rational, t: &Rational, n: u32, m: u32) -> Vec<((i64, i64), Rational)> {
    let (nq, mq) = (q_of(n), q_of(m));
    let (n, m) = (n as i64, m as i64);
    let right = match variant {
        SipVariant::Conserving => (n + 1, m - 1),
        SipVariant::Printed => (n - 1, m - 1),
    };
    vec![((n - 1, m + 1), &nq * (t + &mq)), (right, &mq * (s + &nq))]
}

/// SIP(s,t) as `K1⁺K2⁻ + K1⁻K2⁺ - 2 K1⁰K2⁰ + st/2` on pair sectors.
pub fn sip_generator_abstract<T: Scalar>(s: &Rational, t: &Rational, nmax: u32) -> Result<SectorOperator<T>> {
    require_positive("s", s)?;
    require_positive("t", t)?;
    let wide = SectorSpace::new(Layout::pair(), nmax + 1);
    let k = |ladder, slot: usize, param: &Rational| {
        SymmetryDescriptor::new(Algebra::Su11, ladder, vec![SiteTerm::new(slot, param.clone())]).operator::<T>(&wide)
    };
    let a = k(Ladder::Raise, 0, s)?.compose(&k(Ladder::Lower, 1, t)?)?;
    let b = k(Ladder::Lower, 0, s)?.compose(&k(Ladder::Raise, 1, t)?)?;
    let c = k(Ladder::Diagonal, 0, s)?.compose(&k(Ladder::Diagonal, 1, t)?)?;
    let st2 = T::from_rational(&(s * t / Rational::from_integer(2.into())));
    let id = SectorOperator::identity(&wide).scale(&st2);
    let l = a.add(&b)?.sub(&c.scale(&T::from_u64(2)))?.add(&id)?;
    let space = SectorSpace::new(Layout::pair(), nmax);
    l.restrict(&space, &space)
}

/// Exclusion dynamics on sites of capacities `γ` and `δ`:
/// `(n,m) → (n-1,m+1)` at `n(δ-m)`, `(n+1,m-1)` at `m(γ-n)`.
pub fn sep_generator<T: Scalar>(gamma: u32, delta: u32, nmax: u32) -> Result<SectorOperator<T>> {
    if gamma == 0 || delta == 0 {
        return Err(Error::Parameter("site capacities must be at least 1".into()));
    }
    let space = SectorSpace::new(Layout::new(crate::statespace::SpaceKind::Pair, Some(vec![gamma, delta]))?, nmax);
    rate_generator(&space, |n, m| {
        [
            T::from_u64((n * (delta - m)) as u64),
            T::from_u64((m * (gamma - n)) as u64),
        ]
    })
}

/// Walkers hopping `1 → 2` at rate `q` and `2 → 1` at rate 1 each.
pub fn rw_generator<T: Scalar>(q: &Rational, nmax: u32) -> Result<SectorOperator<T>> {
    require_positive("q", q)?;
    let q = T::from_rational(q);
    let space = SectorSpace::new(Layout::pair(), nmax);
    rate_generator(&space, |n, m| [q.clone() * T::from_u64(n as u64), T::from_u64(m as u64)])
}

/// The walker generator assembled from ladder operators.
pub fn rw_generator_factorized<T: Scalar>(q: &Rational, form: RwFactorization, nmax: u32) -> Result<SectorOperator<T>> {
    require_positive("q", q)?;
    let wide = SectorSpace::new(Layout::pair(), nmax + 1);
    let pair = |ladder, w1: Rational, w2: Rational| {
        SymmetryDescriptor::new(
            Algebra::Heisenberg,
            ladder,
            vec![SiteTerm::weighted(0, Rational::zero(), w1), SiteTerm::weighted(1, Rational::zero(), w2)],
        )
        .operator::<T>(&wide)
    };
    let one = Rational::one();
    let (lower, raise) = match form {
        RwFactorization::Conservative => (pair(Ladder::Lower, q.clone(), -&one)?, pair(Ladder::Raise, one.clone(), -&one)?),
        RwFactorization::Printed => (pair(Ladder::Lower, one.clone(), -&one)?, pair(Ladder::Raise, one.clone(), -q)?),
    };
    let l = lower.compose(&raise)?.scale(&-T::one());
    let space = SectorSpace::new(Layout::pair(), nmax);
    l.restrict(&space, &space)
}

/// Unique stationary law of a two-site generator on sector `n`, as the law
/// of the first site's occupation.
pub fn thermalize<T: Scalar>(generator: &SectorOperator<T>, n: u32, tol: f64) -> Result<Pmf<T>> {
    let block = generator
        .block(n)
        .ok_or_else(|| Error::Shape(format!("generator has no block for sector {n}")))?;
    if generator.shift() != 0 {
        return Err(Error::Shape("thermalization needs a mass-conserving generator".into()));
    }
    let sector = generator.rows().sector(n).expect("row sector");
    let lt = block.transpose().to_dense();
    let kernel = nullspace(&lt, tol);
    if kernel.len() != 1 {
        return Err(Error::Multiplicity { sector: n, dim: kernel.len() });
    }
    let v = &kernel[0];
    let support = sector.states().iter().map(|s| s[0]).collect();
    Pmf::from_weights(support, v.clone())
}
