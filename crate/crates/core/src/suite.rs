//! Batteries of checks composed from the `verify` primitives, shared by the
//! command line tool and the acceptance tests.

use crate::algebra::{commutator, j_operator, k_operator, ladder_operator, Ladder, Su2Variant};
use crate::dist::{beta_binomial_pmf, binomial_pmf, Pmf};
use crate::error::Result;
use crate::models::{
    generator, redistribution_operator, rw_generator, sip_generator, thermalize, transition_operator,
    transition_operator_direct, ModelSpec,
};
use crate::operator::SectorOperator;
use crate::scalar::{int, ratio, Scalar};
use crate::statespace::SectorMeasures;
use crate::verify::{
    check_cheap_duality, check_constructive_duality, check_detailed_balance, check_exchange_commutation,
    check_operator_identity, check_projection_identity, check_self_duality, check_stochastic, check_symmetry,
    Arithmetic, CheckReport, SectorRange, Witness,
};

const LADDERS: [Ladder; 3] = [Ladder::Raise, Ladder::Lower, Ladder::Diagonal];

fn relation<T: Scalar>(
    check: &str,
    model: &str,
    a: &SectorOperator<T>,
    b: &SectorOperator<T>,
    expected: &SectorOperator<T>,
    tol: f64,
) -> Result<CheckReport> {
    let c = commutator(a, b)?;
    check_operator_identity(check, model, &c.op, expected, tol)
}

/// Commutation relations of the single-site algebras on sectors up to
/// `nmax`. Operators are built one sector higher so every row up to `nmax`
/// is interior; the extra sector shows up as excluded.
pub fn algebra<T: Scalar>(nmax: u32, tol: f64) -> Result<Vec<CheckReport>> {
    let top = nmax + 1;
    let mut out = Vec::new();
    for kappa in [int(1), int(2), ratio(3, 2)] {
        let model = format!("SU(1,1) kappa={kappa}");
        let kp = k_operator::<T>(Ladder::Raise, &kappa, top)?;
        let km = k_operator::<T>(Ladder::Lower, &kappa, top)?;
        let k0 = k_operator::<T>(Ladder::Diagonal, &kappa, top)?;
        let two = T::from_u64(2);
        out.push(relation("[K+,K-]=2K0", &model, &kp, &km, &k0.scale(&two), tol)?);
        out.push(relation("[K+,K0]=K+", &model, &kp, &k0, &kp, tol)?);
        out.push(relation("[K-,K0]=-K-", &model, &km, &k0, &km.scale(&T::from_i64(-1)), tol)?);
    }
    for g in 1..=4 {
        let gamma = int(g);
        let model = format!("SU(2) gamma={g}");
        let v = Su2Variant::Forward;
        let jp = j_operator::<T>(Ladder::Raise, &gamma, v, top)?;
        let jm = j_operator::<T>(Ladder::Lower, &gamma, v, top)?;
        let j0 = j_operator::<T>(Ladder::Diagonal, &gamma, v, top)?;
        out.push(relation("[J+,J-]=2J0", &model, &jp, &jm, &j0.scale(&T::from_u64(2)), tol)?);
        out.push(relation("[J+,J0]=-J+", &model, &jp, &j0, &jp.scale(&T::from_i64(-1)), tol)?);
        out.push(relation("[J-,J0]=J-", &model, &jm, &j0, &jm, tol)?);
    }
    let up = ladder_operator::<T>(Ladder::Raise, top)?;
    let down = ladder_operator::<T>(Ladder::Lower, top)?;
    out.push(relation("[a+,a]=1", "Heisenberg", &up, &down, &SectorOperator::identity(up.rows()), tol)?);
    Ok(out)
}

/// First `k` where two laws on `0..=n` disagree.
fn pmf_mismatch<T: Scalar>(n: u32, got: &Pmf<T>, expect: &Pmf<T>, tol: f64) -> Option<Witness> {
    (0..=n).find_map(|k| {
        let (a, b) = (got.prob(k), expect.prob(k));
        (!a.close(&b, tol)).then(|| Witness {
            location: format!("N={n} k={k}"),
            lhs: a.render(),
            rhs: b.render(),
        })
    })
}

fn thermalization_report<T: Scalar>(
    check: &str,
    model: &str,
    generator: &SectorOperator<T>,
    expected: impl Fn(u32) -> Result<Pmf<T>>,
    nmax: u32,
    tol: f64,
) -> Result<CheckReport> {
    let mut witness = None;
    for n in 0..=nmax {
        let got = thermalize(generator, n, tol)?;
        witness = pmf_mismatch(n, &got, &expected(n)?, tol);
        if witness.is_some() {
            break;
        }
    }
    Ok(CheckReport::new(check, model, SectorRange { from: 0, to: nmax }, Arithmetic::of::<T>(tol))
        .with_outcome(witness, Vec::new()))
}

/// Stationary laws of the two-site inclusion process and the asymmetric
/// random walk against their closed forms.
pub fn thermalization<T: Scalar>(nmax: u32, tol: f64) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    for (s, t) in [(int(1), int(1)), (int(2), int(2)), (int(1), int(3)), (ratio(3, 2), ratio(1, 2))] {
        let l = sip_generator::<T>(&s, &t, nmax)?;
        let model = format!("SIP({s},{t})");
        out.push(thermalization_report("thermalization", &model, &l, |n| beta_binomial_pmf(n, &s, &t), nmax, tol)?);
    }
    for q in [int(1), int(2), ratio(1, 3)] {
        let l = rw_generator::<T>(&q, nmax)?;
        let p = int(1) / (int(1) + &q);
        let model = format!("RW(q={q})");
        out.push(thermalization_report("thermalization", &model, &l, |n| binomial_pmf(n, &p), nmax, tol)?);
    }
    Ok(out)
}

/// Stationary laws of `Π - 1` per sector, with the report comparing them to
/// the family's closed form.
pub fn model_thermalization<T: Scalar>(spec: &ModelSpec, nmax: u32, tol: f64) -> Result<(CheckReport, Vec<Pmf<T>>)> {
    let l = generator::<T>(spec, nmax)?;
    let laws = (0..=nmax).map(|n| thermalize(&l, n, tol)).collect::<Result<Vec<_>>>()?;
    let report = thermalization_report(
        "thermalization",
        &spec.to_string(),
        &l,
        |n| spec.pair_stationary_pmf(n),
        nmax,
        tol,
    )?;
    Ok((report, laws))
}

/// Stochasticity, agreement of the lumped and enumerated `Π`, the
/// projection identity for `P`, and detailed balance against the closed
/// form stationary law.
pub fn reversibility<T: Scalar>(spec: &ModelSpec, nmax: u32, tol: f64) -> Result<Vec<CheckReport>> {
    let model = spec.to_string();
    let pi = transition_operator::<T>(spec, nmax)?;
    let direct = transition_operator_direct::<T>(spec, nmax)?;
    let p = redistribution_operator::<T>(spec, nmax)?;
    let mu = spec.pocket_stationary::<T>(p.rows())?;
    let pair = spec.pair_space(nmax);
    // sectors above the total capacity hold no states
    let laws = (0..=nmax)
        .map(|n| match pair.sector(n) {
            Some(sector) if !sector.is_empty() => spec.pair_stationary_pmf::<T>(n).map(Some),
            _ => Ok(None),
        })
        .collect::<Result<Vec<_>>>()?;
    let closed = SectorMeasures::from_fn(&pair, |s| match &laws[(s[0] + s[1]) as usize] {
        Some(law) => law.prob(s[0]),
        None => T::zero(),
    })?;
    Ok(vec![
        check_stochastic(&model, &pi, tol),
        check_operator_identity("lumped-equals-enumerated", &model, &pi, &direct, tol)?,
        check_projection_identity(&model, &p, &mu, &pair, tol)?,
        check_detailed_balance(&model, &pi, &closed, tol)?,
    ])
}

/// Self-duality with the closed-form kernel, the cheap diagonal duality,
/// and the constructive step from one to the other.
pub fn duality<T: Scalar>(spec: &ModelSpec, nmax: u32, tol: f64) -> Result<Vec<CheckReport>> {
    let model = spec.to_string();
    let pi = transition_operator::<T>(spec, nmax)?;
    let weight = |s: &[u32]| spec.pair_weight::<T>(0, s[0]) * spec.pair_weight::<T>(1, s[1]);
    Ok(vec![
        check_self_duality(&model, &pi, &spec.duality_function(), nmax, tol)?,
        check_cheap_duality(&model, &pi, &weight, nmax, tol)?,
        check_constructive_duality::<T>(spec, nmax, tol)?,
    ])
}

/// Self-duality alone; the cheapest check that exposes a parameter
/// mismatch.
pub fn self_duality<T: Scalar>(spec: &ModelSpec, nmax: u32, tol: f64) -> Result<CheckReport> {
    let pi = transition_operator::<T>(spec, nmax)?;
    check_self_duality(&spec.to_string(), &pi, &spec.duality_function(), nmax, tol)
}

/// For each ladder: the pair symmetry commutes with `Π`, the pocket
/// symmetry commutes with `P` and with the exchange. Operators are built
/// one sector above `nmax`.
pub fn symmetry<T: Scalar>(spec: &ModelSpec, nmax: u32, tol: f64) -> Result<Vec<CheckReport>> {
    let model = spec.to_string();
    let top = nmax + 1;
    let pi = transition_operator::<T>(spec, top)?;
    let p = redistribution_operator::<T>(spec, top)?;
    let mut out = Vec::new();
    for ladder in LADDERS {
        let s = spec.pair_symmetry(ladder)?.operator::<T>(pi.rows())?;
        let sp = spec.pocket_symmetry(ladder).operator::<T>(p.rows())?;
        out.push(check_symmetry(&format!("pair-symmetry{ladder}"), &model, &pi, &s, tol)?);
        out.push(check_symmetry(&format!("redistribution-symmetry{ladder}"), &model, &p, &sp, tol)?);
        let mut exchange = check_exchange_commutation(&model, &sp, tol)?;
        exchange.check = format!("exchange-commutation{ladder}");
        out.push(exchange);
    }
    Ok(out)
}

/// Every model-level battery.
pub fn all<T: Scalar>(spec: &ModelSpec, nmax: u32, tol: f64) -> Result<Vec<CheckReport>> {
    let mut out = reversibility::<T>(spec, nmax, tol)?;
    out.extend(duality::<T>(spec, nmax, tol)?);
    out.extend(symmetry::<T>(spec, nmax, tol)?);
    Ok(out)
}

/// The largest sector verified by `report`, or `None` if it failed.
pub fn verified_through(report: &CheckReport) -> Option<u32> {
    if !report.passed() {
        return None;
    }
    let mut n = report.sectors.from;
    while n <= report.sectors.to && !report.excluded_sectors.contains(&n) {
        n += 1;
    }
    n.checked_sub(1)
}

/// Renders witnesses of failing reports, one per line.
pub fn failure_summary(reports: &[CheckReport]) -> String {
    reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| format!("{r}\n"))
        .collect()
}
