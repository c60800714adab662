//! Noncontextual hidden-variable model for the dilated measurements.
//!
//! A hidden variable is a discrete ancilla value `λ ∈ {0..N-1}` plus a
//! direction `m` uniform on the sphere. `λ` picks which `±` pair of the
//! context is measured; Bell's rule `(m + n)·v > 0` then decides the qubit
//! outcome for state `n` and projector direction `v`.
//!
//! Runs are split into fixed-size shards. Shard `s` draws from a ChaCha8
//! stream seeded with the master seed and stream id `s`, so results depend
//! only on the seed and never on the worker count.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::bloch::{state_from_bloch, BlochVector};
use crate::error::{Error, Result};
use crate::povm::{born_probability, PovmFamily};

/// Samples per shard.
pub const SHARD_SIZE: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HiddenVariable {
    pub lambda: usize,
    pub m: BlochVector,
}

/// Draws `λ` uniformly from `0..n` and `m` uniformly on the sphere
/// (normalized 3-D Gaussian).
pub fn sample_hidden_variable<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<HiddenVariable> {
    if n != 2 && n != 4 {
        return Err(Error::Range(format!("ancilla dimension {n} is not 2 or 4")));
    }
    let lambda = rng.random_range(0..n);
    let m = loop {
        let (x, y, z): (f64, f64, f64) = (
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        if let Ok(m) = BlochVector::normalized(x, y, z) {
            break m;
        }
    };
    Ok(HiddenVariable { lambda, m })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BellOutcome {
    One,
    Zero,
    /// `(m + n)·v = 0` exactly; reported as 0.
    Boundary,
}

impl BellOutcome {
    pub fn value(self) -> u8 {
        match self {
            BellOutcome::One => 1,
            BellOutcome::Zero | BellOutcome::Boundary => 0,
        }
    }
}

/// Outcome of projector `v` on state `n` for hidden direction `m`.
pub fn bell_outcome(m: &BlochVector, n: &BlochVector, v: &BlochVector) -> BellOutcome {
    let s = m.dot(v) + n.dot(v);
    if s > 0.0 {
        BellOutcome::One
    } else if s < 0.0 {
        BellOutcome::Zero
    } else {
        BellOutcome::Boundary
    }
}

/// Sample count, master seed and worker threads for a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarlo {
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
}

impl MonteCarlo {
    pub fn new(samples: u64, seed: u64) -> Self {
        Self {
            samples,
            seed,
            workers: 1,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    /// Runs `shard(rng, count)` for each shard and returns results in shard
    /// order.
    fn run<T, F>(&self, shard: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&mut ChaCha8Rng, u64) -> T + Sync,
    {
        if self.samples == 0 {
            return Err(Error::Range("sample count must be at least 1".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers.max(1))
            .build()
            .map_err(|e| Error::Range(e.to_string()))?;
        let shards = self.samples.div_ceil(SHARD_SIZE);
        let (seed, total) = (self.seed, self.samples);
        Ok(pool.install(|| {
            (0..shards)
                .into_par_iter()
                .map(|s| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(s);
                    let count = SHARD_SIZE.min(total - s * SHARD_SIZE);
                    shard(&mut rng, count)
                })
                .collect()
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalEstimate {
    pub state: BlochVector,
    pub direction: BlochVector,
    pub samples: u64,
    pub seed: u64,
    pub ones: u64,
    pub boundary_events: u64,
    pub estimate: f64,
    /// `(1 + n·v)/2`.
    pub born: f64,
    pub zscore: Option<f64>,
}

/// Monte Carlo estimate of `P(outcome = 1)` under the Bell model.
pub fn bell_marginal_estimate(
    n: &BlochVector,
    v: &BlochVector,
    mc: &MonteCarlo,
) -> Result<MarginalEstimate> {
    let parts = mc.run(|rng, count| {
        let (mut ones, mut boundary) = (0u64, 0u64);
        for _ in 0..count {
            let hv = sample_hidden_variable(2, rng).expect("valid dimension");
            match bell_outcome(&hv.m, n, v) {
                BellOutcome::One => ones += 1,
                BellOutcome::Zero => {}
                BellOutcome::Boundary => boundary += 1,
            }
        }
        (ones, boundary)
    })?;
    let (ones, boundary_events) = parts
        .into_iter()
        .fold((0, 0), |(a, b), (c, d)| (a + c, b + d));
    let estimate = ones as f64 / mc.samples as f64;
    let born = (1.0 + n.dot(v)) / 2.0;
    Ok(MarginalEstimate {
        state: *n,
        direction: *v,
        samples: mc.samples,
        seed: mc.seed,
        ones,
        boundary_events,
        estimate,
        born,
        zscore: zscore(estimate, born, mc.samples),
    })
}

/// `(freq − p)·√(M / (p(1−p)))`, undefined when `p ∈ {0, 1}`.
pub fn zscore(freq: f64, p: f64, samples: u64) -> Option<f64> {
    let var = p * (1.0 - p);
    (var > 0.0).then(|| (freq - p) * (samples as f64 / var).sqrt())
}

/// `|freq − p| ≤ k·√(p(1−p)/M)`; for `p ∈ {0, 1}` this demands `freq = p`.
pub fn within_sigma(freq: f64, p: f64, samples: u64, k: f64) -> bool {
    let sigma = (p * (1.0 - p) / samples as f64).max(0.0).sqrt();
    (freq - p).abs() <= k * sigma
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElementStats {
    pub label: String,
    pub count: u64,
    pub frequency: f64,
    pub born: f64,
    pub zscore: Option<f64>,
    pub within_5_sigma: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub family: String,
    /// 1-based context number.
    pub context: usize,
    pub state: BlochVector,
    pub samples: u64,
    pub seed: u64,
    pub boundary_events: u64,
    pub elements: Vec<ElementStats>,
    pub passed: bool,
}

impl SimulationReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,count,frequency,born,zscore\n");
        for e in &self.elements {
            let z = e.zscore.map(|z| z.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.label, e.count, e.frequency, e.born, z
            ));
        }
        out
    }
}

/// Simulates one context with the two-stage (ancilla, then qubit) model and
/// compares element frequencies with Born probabilities.
pub fn simulate_povm(
    f: &PovmFamily,
    context: usize,
    n: &BlochVector,
    mc: &MonteCarlo,
) -> Result<SimulationReport> {
    let pairs = f.context_pairs(context)?;
    let ctx = f.context(context)?;
    let slots = pairs.len();
    if slots != 2 && slots != 4 {
        return Err(Error::InvalidContext(format!(
            "context {} has {slots} pairs, expected 2 or 4",
            context + 1
        )));
    }
    let position = |label: &str| {
        ctx.labels()
            .iter()
            .position(|l| l == label)
            .expect("listed")
    };
    let idx: Vec<(usize, usize)> = pairs
        .iter()
        .map(|p| (position(&p.plus), position(&p.minus)))
        .collect();
    let dirs: Vec<BlochVector> = pairs.iter().map(|p| p.direction).collect();

    let parts = mc.run(|rng, count| {
        let mut counts = vec![0u64; ctx.len()];
        let mut boundary = 0u64;
        for _ in 0..count {
            let hv = sample_hidden_variable(slots, rng).expect("valid dimension");
            let (plus, minus) = idx[hv.lambda];
            match bell_outcome(&hv.m, n, &dirs[hv.lambda]) {
                BellOutcome::One => counts[plus] += 1,
                BellOutcome::Zero => counts[minus] += 1,
                BellOutcome::Boundary => {
                    boundary += 1;
                    counts[minus] += 1;
                }
            }
        }
        (counts, boundary)
    })?;
    let mut counts = vec![0u64; ctx.len()];
    let mut boundary_events = 0;
    for (c, b) in parts {
        for (acc, x) in counts.iter_mut().zip(c) {
            *acc += x;
        }
        boundary_events += b;
    }

    let rho = state_from_bloch(n)?;
    let m = mc.samples;
    let elements = ctx
        .labels()
        .iter()
        .zip(&counts)
        .map(|(label, &count)| {
            let born = born_probability(&rho, f.element(label)?)?;
            let frequency = count as f64 / m as f64;
            Ok(ElementStats {
                label: label.clone(),
                count,
                frequency,
                born,
                zscore: zscore(frequency, born, m),
                within_5_sigma: within_sigma(frequency, born, m, 5.0),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimulationReport {
        family: f.name().to_string(),
        context: context + 1,
        state: *n,
        samples: m,
        seed: mc.seed,
        boundary_events,
        passed: elements.iter().all(|e| e.within_5_sigma),
        elements,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContextValues {
    /// 1-based context number.
    pub context: usize,
    /// Value of each extended outcome `|slot⟩⟨slot| ⊗ V±`, by element label.
    pub values: Vec<(String, u8)>,
}

impl ContextValues {
    pub fn ones(&self) -> usize {
        self.values.iter().filter(|(_, v)| *v == 1).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueMap {
    pub contexts: Vec<ContextValues>,
    pub boundary_events: u64,
}

impl ValueMap {
    /// Contexts that do not hold exactly one value 1.
    pub fn violations(&self) -> usize {
        self.contexts.iter().filter(|c| c.ones() != 1).count()
    }
}

/// Values of every extended outcome in every context from a single hidden
/// variable: the ancilla outcome `λ` (value 1 on slot `λ` only) times the Bell
/// value of `V+` or `V-` on that slot's pair.
///
/// Both `V+` and `V-` are evaluated with Bell's rule independently, so a
/// boundary draw shows up as a context with no 1.
pub fn noncontextual_value_map(
    hv: &HiddenVariable,
    f: &PovmFamily,
    n: &BlochVector,
) -> Result<ValueMap> {
    let mut contexts = Vec::with_capacity(f.contexts().len());
    let mut boundary_events = 0;
    for c in 0..f.contexts().len() {
        let pairs = f.context_pairs(c)?;
        if hv.lambda >= pairs.len() {
            return Err(Error::Range(format!(
                "lambda {} out of range for {} slots",
                hv.lambda,
                pairs.len()
            )));
        }
        let mut values = Vec::with_capacity(2 * pairs.len());
        for (slot, pair) in pairs.iter().enumerate() {
            let (vp, vm) = if slot == hv.lambda {
                let plus = bell_outcome(&hv.m, n, &pair.direction);
                let minus = bell_outcome(&hv.m, n, &pair.direction.antipode());
                if plus == BellOutcome::Boundary || minus == BellOutcome::Boundary {
                    boundary_events += 1;
                }
                (plus.value(), minus.value())
            } else {
                (0, 0)
            };
            values.push((pair.plus.clone(), vp));
            values.push((pair.minus.clone(), vm));
        }
        contexts.push(ContextValues {
            context: c + 1,
            values,
        });
    }
    Ok(ValueMap {
        contexts,
        boundary_events,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueMapSurvey {
    pub family: String,
    pub state: BlochVector,
    pub samples: u64,
    pub seed: u64,
    pub contexts_checked: u64,
    pub violations: u64,
    pub boundary_events: u64,
}

/// Draws `samples` hidden variables and counts contexts that fail to get
/// exactly one value 1.
pub fn value_map_survey(
    f: &PovmFamily,
    n: &BlochVector,
    mc: &MonteCarlo,
) -> Result<ValueMapSurvey> {
    let slots = f.context_pairs(0)?.len();
    for c in 1..f.contexts().len() {
        if f.context_pairs(c)?.len() != slots {
            return Err(Error::InvalidContext(
                "contexts differ in pair count".into(),
            ));
        }
    }
    let parts = mc.run(|rng, count| -> Result<(u64, u64, u64)> {
        let (mut checked, mut bad, mut boundary) = (0, 0, 0);
        for _ in 0..count {
            let hv = sample_hidden_variable(slots, rng)?;
            let map = noncontextual_value_map(&hv, f, n)?;
            checked += map.contexts.len() as u64;
            bad += map.violations() as u64;
            boundary += map.boundary_events;
        }
        Ok((checked, bad, boundary))
    })?;
    let mut total = (0, 0, 0);
    for p in parts {
        let (a, b, c) = p?;
        total = (total.0 + a, total.1 + b, total.2 + c);
    }
    Ok(ValueMapSurvey {
        family: f.name().to_string(),
        state: *n,
        samples: mc.samples,
        seed: mc.seed,
        contexts_checked: total.0,
        violations: total.1,
        boundary_events: total.2,
    })
}
