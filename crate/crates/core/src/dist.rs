//! Probability mass functions used for splitting wealth and for stationary
//! measures: Beta-Binomial, hypergeometric, binomial, discrete Gamma and
//! Poisson weights, all evaluated in the caller's scalar.
//!
//! Gamma-function ratios never appear; `Γ(r+k)/Γ(r)` is the rising factorial
//! `(r)↑k`, which keeps rational parameters exact.

use num_rational::BigRational;
use num_traits::{One, Signed};
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{binomial, Scalar};

/// Tolerance used to validate float pmfs sum to one.
const FLOAT_MASS_TOL: f64 = 1e-9;

/// A pmf on a finite set of non-negative integers.
#[derive(Clone, Debug, PartialEq)]
pub struct Pmf<T> {
    support: Vec<u32>,
    mass: Vec<T>,
}

impl<T: Scalar> Pmf<T> {
    /// Validates non-negativity and total mass one.
    pub fn new(support: Vec<u32>, mass: Vec<T>) -> Result<Self> {
        if support.len() != mass.len() {
            return Err(Error::Shape(format!(
                "pmf support has {} points but {} masses",
                support.len(),
                mass.len()
            )));
        }
        if let Some(m) = mass.iter().find(|m| **m < T::zero()) {
            return Err(Error::Parameter(format!("negative mass {}", m.render())));
        }
        let total = mass.iter().fold(T::zero(), |a, m| a + m.clone());
        if !total.close(&T::one(), FLOAT_MASS_TOL) {
            return Err(Error::Parameter(format!(
                "masses sum to {}, not 1",
                total.render()
            )));
        }
        Ok(Self { support, mass })
    }

    /// Normalizes non-negative weights.
    pub fn from_weights(support: Vec<u32>, weights: Vec<T>) -> Result<Self> {
        let total = weights.iter().fold(T::zero(), |a, m| a + m.clone());
        if total.is_zero() {
            return Err(Error::Conditioning("all weights are zero".into()));
        }
        let mass = weights.into_iter().map(|w| w / total.clone()).collect();
        Self::new(support, mass)
    }

    pub fn point(n: u32) -> Self {
        Self {
            support: vec![n],
            mass: vec![T::one()],
        }
    }

    /// Uniform on `{0..=n}`.
    pub fn uniform(n: u32) -> Self {
        let p = T::one() / T::from_u64(n as u64 + 1);
        Self {
            support: (0..=n).collect(),
            mass: vec![p; n as usize + 1],
        }
    }

    pub fn support(&self) -> &[u32] {
        &self.support
    }

    pub fn masses(&self) -> &[T] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &T)> {
        self.support.iter().copied().zip(self.mass.iter())
    }

    /// Probability of `k`; zero off the support.
    pub fn prob(&self, k: u32) -> T {
        self.support
            .iter()
            .position(|&s| s == k)
            .map_or_else(T::zero, |i| self.mass[i].clone())
    }

    pub fn mean(&self) -> T {
        self.iter().fold(T::zero(), |a, (k, m)| {
            a + T::from_u64(k as u64) * m.clone()
        })
    }

    pub fn to_f64(&self) -> Pmf<f64> {
        Pmf {
            support: self.support.clone(),
            mass: self.mass.iter().map(Scalar::to_f64).collect(),
        }
    }

    /// Total-variation distance, computed in `f64`.
    pub fn total_variation<U: Scalar>(&self, other: &Pmf<U>) -> f64 {
        let mut points: Vec<u32> = self.support.iter().chain(&other.support).copied().collect();
        points.sort_unstable();
        points.dedup();
        0.5 * points
            .into_iter()
            .map(|k| (self.prob(k).to_f64() - other.prob(k).to_f64()).abs())
            .sum::<f64>()
    }

    /// Exact (or tolerance-based, for floats) equality of two pmfs,
    /// treating points outside a support as zero mass.
    pub fn equals(&self, other: &Pmf<T>, tol: f64) -> bool {
        self.support
            .iter()
            .chain(&other.support)
            .all(|&k| self.prob(k).close(&other.prob(k), tol))
    }

    pub fn sampler(&self) -> Sampler {
        Sampler::new(self)
    }
}

/// A pmf truncated to `{0..=nmax}`; masses sum to `1 - tail`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedPmf<T> {
    pub support: Vec<u32>,
    pub mass: Vec<T>,
    /// Mass beyond the truncation point, `1 - Σ mass`. Exact for rationals.
    pub tail: T,
}

impl<T: Scalar> TruncatedPmf<T> {
    pub fn prob(&self, k: u32) -> T {
        self.mass.get(k as usize).cloned().unwrap_or_else(T::zero)
    }

    pub fn retained_mass(&self) -> T {
        self.mass.iter().fold(T::zero(), |a, m| a + m.clone())
    }
}

fn positive(name: &str, x: &BigRational) -> Result<()> {
    if x.is_positive() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be positive, got {x}")))
    }
}

/// Beta-Binomial pmf `C(n,k) (s)↑k (t)↑(n−k) / (s+t)↑n` on `{0..=n}`.
pub fn beta_binomial_pmf<T: Scalar>(n: u32, s: &BigRational, t: &BigRational) -> Result<Pmf<T>> {
    positive("s", s)?;
    positive("t", t)?;
    let (s, t) = (T::from_rational(s), T::from_rational(t));
    let st = s.clone() + t.clone();
    // pmf(0) = (t)↑n / (s+t)↑n, then the ratio pmf(k+1)/pmf(k)
    let mut p = (0..n).fold(T::one(), |acc, i| {
        let i = T::from_u64(i as u64);
        acc * (t.clone() + i.clone()) / (st.clone() + i)
    });
    let mut mass = Vec::with_capacity(n as usize + 1);
    for k in 0..=n {
        mass.push(p.clone());
        if k < n {
            let (kk, nk) = (T::from_u64(k as u64), T::from_u64((n - k) as u64));
            p = p * nk.clone() * (s.clone() + kk.clone())
                / (T::from_u64(k as u64 + 1) * (t.clone() + nk - T::one()));
        }
    }
    Pmf::new((0..=n).collect(), mass)
}

/// Hypergeometric pmf `C(γ,m) C(δ,n−m) / C(γ+δ,n)` on `{0..=min(n,γ)}`.
pub fn hypergeometric_pmf<T: Scalar>(n: u32, gamma: u32, delta: u32) -> Result<Pmf<T>> {
    if n > gamma + delta {
        return Err(Error::Capacity(format!(
            "{n} coins do not fit in pockets of capacity {gamma} and {delta}"
        )));
    }
    let norm: T = binomial(gamma + delta, n);
    let top = n.min(gamma);
    let mass = (0..=top)
        .map(|m| binomial::<T>(gamma, m) * binomial::<T>(delta, n - m) / norm.clone())
        .collect();
    Pmf::new((0..=top).collect(), mass)
}

/// Binomial pmf `C(n,k) p^k (1−p)^(n−k)` on `{0..=n}`.
pub fn binomial_pmf<T: Scalar>(n: u32, p: &BigRational) -> Result<Pmf<T>> {
    if p.is_negative() || *p > BigRational::one() {
        return Err(Error::Parameter(format!("success probability {p} outside [0,1]")));
    }
    let p = T::from_rational(p);
    let q = T::one() - p.clone();
    let mass = (0..=n)
        .map(|k| binomial::<T>(n, k) * p.powi(k as i32) * q.powi((n - k) as i32))
        .collect();
    Pmf::new((0..=n).collect(), mass)
}

/// Unnormalized discrete-Gamma weights `λ^n (β)↑n / n!` for `n ≤ nmax`.
pub fn discrete_gamma_weights<T: Scalar>(beta: &BigRational, lambda: &BigRational, nmax: u32) -> Vec<T> {
    let (b, l) = (T::from_rational(beta), T::from_rational(lambda));
    let mut w = T::one();
    let mut out = Vec::with_capacity(nmax as usize + 1);
    for n in 0..=nmax {
        out.push(w.clone());
        let nn = T::from_u64(n as u64);
        w = w * l.clone() * (b.clone() + nn.clone()) / (nn + T::one());
    }
    out
}

/// Discrete Γ(β,λ): `(1−λ)^β λ^n (β)↑n / n!`, truncated at `nmax`.
///
/// Exact scalars need an integer β for the normalization to stay rational;
/// a non-integer β is rejected there and handled by the float instances.
pub fn discrete_gamma_pmf<T: Scalar>(
    beta: &BigRational,
    lambda: &BigRational,
    nmax: u32,
) -> Result<TruncatedPmf<T>> {
    positive("beta", beta)?;
    if !lambda.is_positive() || *lambda >= BigRational::one() {
        return Err(Error::Parameter(format!("lambda {lambda} outside (0,1)")));
    }
    let one_minus = T::one() - T::from_rational(lambda);
    let norm = one_minus.powr(beta).ok_or_else(|| {
        Error::Parameter(format!(
            "exact normalization (1-λ)^β needs an integer shape, got β = {beta}"
        ))
    })?;
    let mass: Vec<T> = discrete_gamma_weights::<T>(beta, lambda, nmax)
        .into_iter()
        .map(|w| w * norm.clone())
        .collect();
    let tail = T::one() - mass.iter().fold(T::zero(), |a, m| a + m.clone());
    Ok(TruncatedPmf {
        support: (0..=nmax).collect(),
        mass,
        tail,
    })
}

/// Unnormalized Poisson weights `λ^n / n!`; the factor `e^{−λ}` is omitted
/// and only cancels under conditioning.
pub fn poisson_weights<T: Scalar>(lambda: &BigRational, nmax: u32) -> Vec<T> {
    let l = T::from_rational(lambda);
    let mut w = T::one();
    let mut out = Vec::with_capacity(nmax as usize + 1);
    for n in 0..=nmax {
        out.push(w.clone());
        w = w * l.clone() / T::from_u64(n as u64 + 1);
    }
    out
}

/// Law of `X` given `X + Y = n` for independent `X`, `Y` with (possibly
/// unnormalized) weights `wx`, `wy`.
pub fn condition_on_sum<T: Scalar>(wx: &[T], wy: &[T], n: u32) -> Result<Pmf<T>> {
    let n = n as usize;
    if wx.len() <= n || wy.len() <= n {
        return Err(Error::Shape(format!("weights do not reach total {n}")));
    }
    let weights = (0..=n).map(|k| wx[k].clone() * wy[n - k].clone()).collect();
    Pmf::from_weights((0..=n as u32).collect(), weights)
}

/// Inverse-CDF sampler over a pmf's support, in `f64`.
#[derive(Clone, Debug)]
pub struct Sampler {
    support: Vec<u32>,
    cumulative: Vec<f64>,
}

impl Sampler {
    pub fn new<T: Scalar>(pmf: &Pmf<T>) -> Self {
        let mut acc = 0.0;
        let mut cumulative = Vec::with_capacity(pmf.len());
        for m in pmf.masses() {
            acc += m.to_f64();
            cumulative.push(acc);
        }
        Self {
            support: pmf.support().to_vec(),
            cumulative,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let total = *self.cumulative.last().expect("empty pmf");
        let u = rng.random::<f64>() * total;
        let i = self.cumulative.partition_point(|&c| c <= u);
        // zero-mass trailing points must never be returned
        let i = i.min(self.support.len() - 1);
        self.support[i]
    }
}

/// Draws one state from `pmf`.
pub fn sample<T: Scalar, R: Rng + ?Sized>(pmf: &Pmf<T>, rng: &mut R) -> u32 {
    pmf.sampler().sample(rng)
}
