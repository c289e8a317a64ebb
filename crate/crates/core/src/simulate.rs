//! Continuous-time Monte Carlo of the many-agent model on a graph.
//!
//! Every edge carries a rate-one clock; the superposition is simulated as a
//! single clock of rate `|E|` with a uniformly chosen edge. On a ring the
//! two endpoint agents split, swap top parts and recombine.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::Serialize;

use crate::dist::{Pmf, Sampler};
use crate::error::{Error, Result};
use crate::models::{transition_operator, ModelSpec, SplitLaw};
use crate::scalar::Scalar;
use crate::Rational;

/// Simple undirected graph on vertices `0..vertices`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Graph {
    vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for &(u, v) in &edges {
            if u >= vertices || v >= vertices {
                return Err(Error::Shape(format!("edge ({u},{v}) outside {vertices} vertices")));
            }
            if u == v {
                return Err(Error::Shape(format!("self-loop at {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::Shape(format!("duplicate edge ({u},{v})")));
            }
        }
        Ok(Self { vertices, edges })
    }

    /// One `u v` pair per line, 0-indexed; `#` starts a comment. The vertex
    /// count is one more than the largest index unless `vertices` is given.
    pub fn parse_edge_list(text: &str, vertices: Option<usize>) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::Shape(format!("line {}: '{s}' is not a vertex index", lineno + 1)))
            };
            if fields.len() != 2 {
                return Err(Error::Shape(format!("line {}: expected 'u v', got '{line}'", lineno + 1)));
            }
            edges.push((parse(fields[0])?, parse(fields[1])?));
        }
        let implied = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
        Self::new(vertices.unwrap_or(implied).max(implied), edges)
    }

    pub fn path(vertices: usize) -> Self {
        Self::new(vertices, (1..vertices).map(|i| (i - 1, i)).collect()).expect("a path is simple")
    }

    pub fn complete(vertices: usize) -> Self {
        let edges = (0..vertices)
            .flat_map(|u| (u + 1..vertices).map(move |v| (u, v)))
            .collect();
        Self::new(vertices, edges).expect("a complete graph is simple")
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Connected components, each sorted, in order of smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.vertices).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let next = p[y];
                p[y] = r;
                y = next;
            }
            r
        }
        for &(u, v) in &self.edges {
            let (a, b) = (find(&mut parent, u), find(&mut parent, v));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for v in 0..self.vertices {
            let r = find(&mut parent, v);
            groups.entry(r).or_default().push(v);
        }
        groups.into_values().collect()
    }
}

/// Wealth per vertex.
pub type Configuration = Vec<u32>;

/// Per-vertex splitting laws on a graph with precomputed samplers.
#[derive(Clone, Debug)]
pub struct GraphModel {
    spec: ModelSpec,
    graph: Graph,
    vertex_law: Vec<usize>,
    laws: Vec<SplitLaw>,
    total_mass: u32,
    /// `samplers[law][n]` draws the top part of wealth `n`.
    samplers: Vec<Vec<Sampler>>,
}

impl GraphModel {
    /// A spec whose two agents share one law applies to every vertex; a
    /// heterogeneous spec needs exactly two vertices.
    pub fn new(spec: &ModelSpec, graph: &Graph, total_mass: u32) -> Result<Self> {
        spec.validate()?;
        let (a, b) = (spec.split_law(0), spec.split_law(1));
        let (laws, vertex_law) = if a == b {
            (vec![a], vec![0; graph.vertices()])
        } else if graph.vertices() == 2 {
            (vec![a, b], vec![0, 1])
        } else {
            return Err(Error::Model(format!(
                "{spec} has different agents and cannot be placed on {} vertices",
                graph.vertices()
            )));
        };
        for &(u, v) in graph.edges() {
            let (lu, lv) = (&laws[vertex_law[u]], &laws[vertex_law[v]]);
            if lu.top_capacity() != lv.top_capacity() {
                return Err(Error::Capacity(format!(
                    "edge ({u},{v}) joins top pockets of capacities {:?} and {:?}",
                    lu.top_capacity(),
                    lv.top_capacity()
                )));
            }
        }
        let samplers = laws
            .iter()
            .map(|law| {
                let top = law.capacity().map_or(total_mass, |c| c.min(total_mass));
                (0..=top)
                    .map(|n| law.pmf::<f64>(n).map(|p: Pmf<f64>| p.sampler()))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            spec: spec.clone(),
            graph: graph.clone(),
            vertex_law,
            laws,
            total_mass,
            samplers,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn law(&self, vertex: usize) -> &SplitLaw {
        &self.laws[self.vertex_law[vertex]]
    }

    fn check_config(&self, config: &[u32]) -> Result<()> {
        if config.len() != self.graph.vertices() {
            return Err(Error::Shape(format!(
                "configuration has {} entries for {} vertices",
                config.len(),
                self.graph.vertices()
            )));
        }
        let total: u32 = config.iter().sum();
        if total > self.total_mass {
            return Err(Error::Shape(format!(
                "configuration carries mass {total}, more than the prepared {}",
                self.total_mass
            )));
        }
        for (v, &n) in config.iter().enumerate() {
            let law = self.vertex_law[v];
            if n as usize >= self.samplers[law].len() {
                return Err(Error::Capacity(format!(
                    "vertex {v} holds {n}, beyond capacity {:?} or the prepared total {}",
                    self.laws[law].capacity(),
                    self.samplers[law].len() - 1
                )));
            }
        }
        Ok(())
    }

    /// One split-exchange-add update on `edge`.
    pub fn step<R: Rng + ?Sized>(&self, config: &mut [u32], edge: usize, rng: &mut R) {
        let (u, v) = self.graph.edges[edge];
        let (nu, nv) = (config[u], config[v]);
        let ku = self.samplers[self.vertex_law[u]][nu as usize].sample(rng);
        let kv = self.samplers[self.vertex_law[v]][nv as usize].sample(rng);
        config[u] = kv + nu - ku;
        config[v] = ku + nv - kv;
    }
}

/// Deterministic generator for replica `stream` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One ring of the global clock.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Event {
    pub time: f64,
    pub edge: usize,
    /// Endpoint wealths after the update.
    pub wealth: (u32, u32),
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub seed: u64,
    pub model: String,
    pub graph: Graph,
    pub initial: Configuration,
    pub events: Vec<Event>,
    pub tmax: f64,
}

impl Trajectory {
    pub fn final_configuration(&self) -> Configuration {
        let mut c = self.initial.clone();
        for e in &self.events {
            let (u, v) = self.graph.edges()[e.edge];
            c[u] = e.wealth.0;
            c[v] = e.wealth.1;
        }
        c
    }

    /// `time,vertex,wealth` rows: the initial configuration at time 0, then
    /// both endpoints after each event.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,vertex,wealth\n");
        for (v, n) in self.initial.iter().enumerate() {
            let _ = writeln!(out, "0,{v},{n}");
        }
        for e in &self.events {
            let (u, v) = self.graph.edges()[e.edge];
            let _ = writeln!(out, "{},{u},{}", e.time, e.wealth.0);
            let _ = writeln!(out, "{},{v},{}", e.time, e.wealth.1);
        }
        out
    }
}

/// Advances a configuration event by event.
struct Clock<'a> {
    model: &'a GraphModel,
    rng: ChaCha8Rng,
    exp: Option<Exp<f64>>,
    time: f64,
}

impl<'a> Clock<'a> {
    fn new(model: &'a GraphModel, rng: ChaCha8Rng) -> Self {
        let rate = model.graph.edges().len() as f64;
        let exp = (rate > 0.0).then(|| Exp::new(rate).expect("positive rate"));
        Self { model, rng, exp, time: 0.0 }
    }

    /// Time of the next ring, without applying it.
    fn next_time(&mut self) -> f64 {
        match &self.exp {
            Some(exp) => self.time + exp.sample(&mut self.rng),
            None => f64::INFINITY,
        }
    }

    fn fire(&mut self, at: f64, config: &mut [u32]) -> usize {
        self.time = at;
        let edge = self.rng.random_range(0..self.model.graph.edges().len());
        self.model.step(config, edge, &mut self.rng);
        edge
    }
}

pub fn run(model: &GraphModel, init: &[u32], tmax: f64, seed: u64) -> Result<Trajectory> {
    run_stream(model, init, tmax, seed, 0)
}

fn run_stream(model: &GraphModel, init: &[u32], tmax: f64, seed: u64, stream: u64) -> Result<Trajectory> {
    if tmax.is_nan() || tmax <= 0.0 {
        return Err(Error::Parameter(format!("tmax must be positive, got {tmax}")));
    }
    model.check_config(init)?;
    let mut config = init.to_vec();
    let mut clock = Clock::new(model, stream_rng(seed, stream));
    let mut events = Vec::new();
    loop {
        let t = clock.next_time();
        if t > tmax {
            break;
        }
        let edge = clock.fire(t, &mut config);
        let (u, v) = model.graph.edges()[edge];
        events.push(Event { time: t, edge, wealth: (config[u], config[v]) });
    }
    Ok(Trajectory {
        seed,
        model: model.spec.to_string(),
        graph: model.graph.clone(),
        initial: init.to_vec(),
        events,
        tmax,
    })
}

/// Configuration at time `t` without storing the path.
pub fn state_at(model: &GraphModel, init: &[u32], t: f64, seed: u64, stream: u64) -> Result<Configuration> {
    model.check_config(init)?;
    let mut config = init.to_vec();
    let mut clock = Clock::new(model, stream_rng(seed, stream));
    loop {
        let next = clock.next_time();
        if next > t {
            return Ok(config);
        }
        clock.fire(next, &mut config);
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Histogram {
    pub samples: u64,
    /// `per_vertex[v][n]` counts samples with wealth `n` at `v`.
    pub per_vertex: Vec<BTreeMap<u32, u64>>,
    /// Counts of whole configurations, kept for graphs of at most four
    /// vertices.
    pub joint: Option<BTreeMap<Vec<u32>, u64>>,
    pub warnings: Vec<String>,
}

impl Histogram {
    /// Empirical law of the wealth at `vertex`.
    pub fn vertex_pmf(&self, vertex: usize) -> Result<Pmf<f64>> {
        let counts = &self.per_vertex[vertex];
        Pmf::from_weights(
            counts.keys().copied().collect(),
            counts.values().map(|&c| c as f64).collect(),
        )
    }

    /// `vertex,state,count` rows.
    pub fn vertex_csv(&self) -> String {
        let mut out = String::from("vertex,state,count\n");
        for (v, counts) in self.per_vertex.iter().enumerate() {
            for (n, c) in counts {
                let _ = writeln!(out, "{v},{n},{c}");
            }
        }
        out
    }

    /// `state,count` rows of the joint histogram; states are wealths joined
    /// by spaces.
    pub fn joint_csv(&self) -> Option<String> {
        self.joint.as_ref().map(|joint| {
            let mut out = String::from("state,count\n");
            for (s, c) in joint {
                let state: Vec<String> = s.iter().map(u32::to_string).collect();
                let _ = writeln!(out, "{},{c}", state.join(" "));
            }
            out
        })
    }
}

/// Samples the configuration every `thin` time units after `burn_in`
/// events.
pub fn stationary_histogram(
    model: &GraphModel,
    init: &[u32],
    burn_in: u64,
    samples: u64,
    thin: f64,
    seed: u64,
) -> Result<Histogram> {
    if thin.is_nan() || thin <= 0.0 {
        return Err(Error::Parameter(format!("thin must be positive, got {thin}")));
    }
    model.check_config(init)?;
    let mut warnings = Vec::new();
    let components = model.graph.components();
    if components.len() > 1 {
        warnings.push(format!(
            "graph has {} components; mass is conserved on each separately",
            components.len()
        ));
    }
    let vertices = model.graph.vertices();
    let mut config = init.to_vec();
    let mut clock = Clock::new(model, stream_rng(seed, 0));
    let mut next = clock.next_time();
    for _ in 0..burn_in {
        if next.is_infinite() {
            break;
        }
        clock.fire(next, &mut config);
        next = clock.next_time();
    }
    let start = clock.time;
    let mut hist = Histogram {
        samples,
        per_vertex: vec![BTreeMap::new(); vertices],
        joint: (vertices <= 4).then(BTreeMap::new),
        warnings,
    };
    for j in 1..=samples {
        let at = start + thin * j as f64;
        while next <= at {
            clock.fire(next, &mut config);
            next = clock.next_time();
        }
        for (v, &n) in config.iter().enumerate() {
            *hist.per_vertex[v].entry(n).or_default() += 1;
        }
        if let Some(joint) = hist.joint.as_mut() {
            *joint.entry(config.clone()).or_default() += 1;
        }
    }
    Ok(hist)
}

/// Empirical one-step kernel of the jump chain on a two-vertex graph.
#[derive(Clone, Debug, Default, Serialize)]
pub struct EmpiricalKernel {
    pub counts: BTreeMap<(Vec<u32>, Vec<u32>), u64>,
}

impl EmpiricalKernel {
    /// Visited source states.
    pub fn sources(&self) -> Vec<Vec<u32>> {
        let mut s: Vec<Vec<u32>> = self.counts.keys().map(|(a, _)| a.clone()).collect();
        s.dedup();
        s
    }

    /// Normalized row at `from`, as `(target, probability)`.
    pub fn row(&self, from: &[u32]) -> Vec<(Vec<u32>, f64)> {
        let entries: Vec<(&Vec<u32>, u64)> = self
            .counts
            .iter()
            .filter(|((a, _), _)| a.as_slice() == from)
            .map(|((_, b), c)| (b, *c))
            .collect();
        let total: u64 = entries.iter().map(|(_, c)| c).sum();
        entries
            .into_iter()
            .map(|(b, c)| (b.clone(), c as f64 / total as f64))
            .collect()
    }

    pub fn row_count(&self, from: &[u32]) -> u64 {
        self.counts
            .iter()
            .filter(|((a, _), _)| a.as_slice() == from)
            .map(|(_, c)| c)
            .sum()
    }
}

/// Records `events` consecutive jumps of the embedded chain.
pub fn embedded_kernel(model: &GraphModel, init: &[u32], events: u64, seed: u64) -> Result<EmpiricalKernel> {
    model.check_config(init)?;
    if model.graph.edges().is_empty() {
        return Ok(EmpiricalKernel::default());
    }
    let mut rng = stream_rng(seed, 0);
    let mut config = init.to_vec();
    let mut kernel = EmpiricalKernel::default();
    for _ in 0..events {
        let before = config.clone();
        let edge = rng.random_range(0..model.graph.edges().len());
        model.step(&mut config, edge, &mut rng);
        *kernel.counts.entry((before, config.clone())).or_default() += 1;
    }
    Ok(kernel)
}

/// `d(1,n) / n` for the family's one-site duality factor at `vertex`.
fn first_moment_factor(law: &SplitLaw) -> f64 {
    match law {
        SplitLaw::BetaBinomial { s, t } => 1.0 / Scalar::to_f64(&(s + t)),
        SplitLaw::Hypergeometric { gamma, delta } => 1.0 / (gamma + delta) as f64,
        SplitLaw::Binomial { q } => {
            if *q == Rational::from_integer(1.into()) {
                1.0
            } else {
                1.0 / (1.0 + Scalar::to_f64(q))
            }
        }
    }
}

/// Rate matrix of a single dual particle: on each edge it moves with the
/// model's own mass-one transition probabilities.
pub fn dual_rate_matrix(model: &GraphModel) -> Result<Vec<Vec<f64>>> {
    let n = model.graph.vertices();
    let mut q = vec![vec![0.0; n]; n];
    for &(u, v) in model.graph.edges() {
        let spec = ModelSpec::from_laws(model.law(u), model.law(v))?;
        let pi = transition_operator::<Rational>(&spec, 1)?;
        let right = Scalar::to_f64(&pi.entry(&[1, 0], &[0, 1]));
        let left = Scalar::to_f64(&pi.entry(&[0, 1], &[1, 0]));
        q[u][v] += right;
        q[u][u] -= right;
        q[v][u] += left;
        q[v][v] -= left;
    }
    Ok(q)
}

/// `exp(t Q) g` by uniformization, stepping time so each step's Poisson
/// mean stays moderate.
pub fn expm_apply(q: &[Vec<f64>], g: &[f64], t: f64) -> Vec<f64> {
    let n = g.len();
    let lambda = (0..n).map(|i| -q[i][i]).fold(0.0f64, f64::max);
    if lambda == 0.0 || t == 0.0 {
        return g.to_vec();
    }
    let steps = (lambda * t / 8.0).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let mu = lambda * dt;
    let apply_p = |v: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| v[i] + (0..n).map(|j| q[i][j] * v[j]).sum::<f64>() / lambda)
            .collect()
    };
    let mut current = g.to_vec();
    for _ in 0..steps {
        let mut term = current.clone();
        let mut weight = (-mu).exp();
        let mut acc: Vec<f64> = term.iter().map(|x| x * weight).collect();
        let mut cumulative = weight;
        let mut k = 0u32;
        while 1.0 - cumulative > 1e-16 && k < 200 {
            k += 1;
            term = apply_p(&term);
            weight *= mu / k as f64;
            cumulative += weight;
            for (a, x) in acc.iter_mut().zip(&term) {
                *a += weight * x;
            }
        }
        current = acc;
    }
    current
}

/// Predicted `E[n_vertex(t)]` from the single dual particle.
pub fn dual_moment_estimate(model: &GraphModel, init: &[u32], vertex: usize, t: f64) -> Result<f64> {
    Ok(dual_moment_all(model, init, t)?[vertex])
}

/// Predicted `E[n_i(t)]` for every vertex.
pub fn dual_moment_all(model: &GraphModel, init: &[u32], t: f64) -> Result<Vec<f64>> {
    model.check_config(init)?;
    if model.graph.vertices() > 100 {
        return Err(Error::Shape("the dual semigroup is built for at most 100 vertices".into()));
    }
    let c: Vec<f64> = (0..init.len()).map(|v| first_moment_factor(model.law(v))).collect();
    let g: Vec<f64> = init.iter().zip(&c).map(|(&n, c)| c * n as f64).collect();
    let q = dual_rate_matrix(model)?;
    let out = expm_apply(&q, &g, t);
    Ok(out.into_iter().zip(&c).map(|(x, c)| x / c).collect())
}

/// Mean wealth per vertex at time `t` over independent replicas; replica
/// `r` uses stream `r`, and sums are taken in replica order.
pub fn monte_carlo_mean(model: &GraphModel, init: &[u32], t: f64, replicas: u64, seed: u64) -> Result<Vec<f64>> {
    model.check_config(init)?;
    let finals: Vec<Configuration> = (0..replicas)
        .into_par_iter()
        .map(|r| state_at(model, init, t, seed, r))
        .collect::<Result<_>>()?;
    let mut sums = vec![0u64; init.len()];
    for c in &finals {
        for (s, &n) in sums.iter_mut().zip(c) {
            *s += n as u64;
        }
    }
    Ok(sums.into_iter().map(|s| s as f64 / replicas as f64).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationSummary {
    pub model: String,
    pub vertices: usize,
    pub edges: usize,
    pub seed: u64,
    pub tmax: f64,
    pub events: usize,
    pub total_mass: u32,
    pub final_configuration: Configuration,
    pub histogram_samples: u64,
    pub vertex_means: Vec<f64>,
    pub warnings: Vec<String>,
}

impl SimulationSummary {
    pub fn new(traj: &Trajectory, hist: &Histogram) -> Self {
        let vertex_means = hist
            .per_vertex
            .iter()
            .map(|counts| {
                let total: u64 = counts.values().sum();
                if total == 0 {
                    0.0
                } else {
                    counts.iter().map(|(n, c)| *n as f64 * *c as f64).sum::<f64>() / total as f64
                }
            })
            .collect();
        Self {
            model: traj.model.clone(),
            vertices: traj.graph.vertices(),
            edges: traj.graph.edges().len(),
            seed: traj.seed,
            tmax: traj.tmax,
            events: traj.events.len(),
            total_mass: traj.initial.iter().sum(),
            final_configuration: traj.final_configuration(),
            histogram_samples: hist.samples,
            vertex_means,
            warnings: hist.warnings.clone(),
        }
    }
}
