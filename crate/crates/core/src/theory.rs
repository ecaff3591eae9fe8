//! Ideal-regime policies and the ESS/FTL separation they imply.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::domain::{BinningScheme, Edges};
use crate::error::{Error, Result};
use crate::metrics::{entropy_of, mi_iid};

/// Finite-support distribution of the sensitive load, kW.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDist {
    values: Vec<f64>,
    probs: Vec<f64>,
}

impl DiscreteDist {
    /// Values are sorted and must be distinct; probabilities must sum to 1.
    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("distribution support"));
        }
        if values.len() != probs.len() {
            return Err(Error::LengthMismatch {
                what: "support/probabilities",
                left: values.len(),
                right: probs.len(),
            });
        }
        if values.iter().chain(&probs).any(|v| !v.is_finite()) || probs.iter().any(|&p| p < 0.0) {
            return Err(Error::invalid("distribution needs finite values and nonnegative probabilities"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
        }
        let mut pairs: Vec<(f64, f64)> = values.into_iter().zip(probs).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::invalid("distribution support has repeated values"));
        }
        let (values, probs) = pairs.into_iter().unzip();
        Ok(Self { values, probs })
    }

    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        let p = 1.0 / values.len().max(1) as f64;
        let probs = vec![p; values.len()];
        Self::new(values, probs)
    }

    /// Empirical distribution of observed samples.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("samples"));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut values: Vec<f64> = Vec::new();
        let mut counts: Vec<f64> = Vec::new();
        for v in sorted {
            if values.last() == Some(&v) {
                *counts.last_mut().expect("paired with values") += 1.0;
            } else {
                values.push(v);
                counts.push(1.0);
            }
        }
        let k = samples.len() as f64;
        let probs = counts.into_iter().map(|c| c / k).collect();
        Self::new(values, probs)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().zip(&self.probs).map(|(v, p)| v * p).sum()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn entropy(&self) -> f64 {
        entropy_of(&self.probs)
    }

    /// `P(x > t)`.
    pub fn prob_above(&self, t: f64) -> f64 {
        self.values
            .iter()
            .zip(&self.probs)
            .filter(|(v, _)| **v > t)
            .map(|(_, p)| p)
            .sum()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R, k: usize) -> Vec<f64> {
        let w = WeightedIndex::new(&self.probs).expect("validated probabilities");
        (0..k).map(|_| self.values[w.sample(rng)]).collect()
    }
}

/// Ideal operating regime: storage large enough to average out the load.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealRegime {
    pub x: DiscreteDist,
    /// Electrical equivalent of the mean thermal demand, kW.
    pub d_th_mean: f64,
    /// Round-trip loss compensation added to the flat ESS target, kW.
    pub l_ess: f64,
    /// `None` means unbounded storage.
    pub ess_capacity_kwh: Option<f64>,
    pub initial_soc: f64,
    pub eta_charge: f64,
    pub eta_discharge: f64,
}

impl IdealRegime {
    /// Lossless, unbounded regime.
    pub fn new(x: DiscreteDist, d_th_mean: f64) -> Self {
        Self {
            x,
            d_th_mean,
            l_ess: 0.0,
            ess_capacity_kwh: None,
            initial_soc: 0.5,
            eta_charge: 1.0,
            eta_discharge: 1.0,
        }
    }

    pub fn y_ess(&self) -> f64 {
        self.x.mean() + self.l_ess
    }

    pub fn y_th(&self) -> f64 {
        self.d_th_mean + self.x.mean()
    }
}

/// Output of the flat-target ESS policy with its implied energy trajectory
/// (hourly steps, kWh).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EssTrajectory {
    pub y: Vec<f64>,
    pub energy: Vec<f64>,
    /// Set when a finite capacity would have been overrun or emptied.
    pub capacity_exceeded: bool,
}

pub fn ideal_ess_policy(x: &[f64], regime: &IdealRegime) -> EssTrajectory {
    let target = regime.y_ess();
    let cap = regime.ess_capacity_kwh;
    let mut e = cap.map_or(0.0, |c| c * regime.initial_soc);
    let mut energy = Vec::with_capacity(x.len() + 1);
    energy.push(e);
    let mut exceeded = false;
    for &xt in x {
        let s = target - xt;
        e += if s >= 0.0 { regime.eta_charge * s } else { s / regime.eta_discharge };
        if let Some(c) = cap {
            exceeded |= e < -1e-12 || e > c + 1e-12;
        }
        energy.push(e);
    }
    EssTrajectory {
        y: vec![target; x.len()],
        energy,
        capacity_exceeded: exceeded,
    }
}

/// Loss compensation `l` such that a flat `mean(x) + l` leaves the realised
/// net stored energy unchanged over `x`.
pub fn ess_loss_compensation(x: &[f64], eta_charge: f64, eta_discharge: f64) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::Empty("load samples"));
    }
    if !(eta_charge > 0.0 && eta_charge <= 1.0 && eta_discharge > 0.0 && eta_discharge <= 1.0) {
        return Err(Error::invalid("efficiencies must lie in (0, 1]"));
    }
    let net = |y: f64| -> f64 {
        x.iter()
            .map(|&v| if y >= v { eta_charge * (y - v) } else { (y - v) / eta_discharge })
            .sum()
    };
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let (mut lo, mut hi) = (
        x.iter().copied().fold(f64::INFINITY, f64::min),
        x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if net(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi) - mean)
}

/// Flat at `y*_th` whenever the load allows, passthrough above it.
pub fn ideal_ftl_policy(x: &[f64], regime: &IdealRegime) -> Vec<f64> {
    let target = regime.y_th();
    x.iter().map(|&v| v.max(target)).collect()
}

/// Exact i.i.d. MI of the FTL policy over a distribution. The map is
/// deterministic, so the MI is the entropy of the induced grid load.
pub fn ftl_exact_mi(x: &DiscreteDist, y_th: f64) -> f64 {
    let flat: f64 = x
        .values()
        .iter()
        .zip(x.probs())
        .filter(|(v, _)| **v <= y_th)
        .map(|(_, p)| p)
        .sum();
    let mut probs = vec![flat];
    probs.extend(
        x.values()
            .iter()
            .zip(x.probs())
            .filter(|(v, _)| **v > y_th)
            .map(|(_, &p)| p),
    );
    entropy_of(&probs).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FtlLeakage {
    pub p_above: f64,
    pub entropy_x: f64,
    /// `P(x > y*) · H(X)`
    pub literal_bits: f64,
    /// MI of the joint distribution induced by the FTL policy.
    pub exact_bits: f64,
}

pub fn ftl_leakage(x: &DiscreteDist, y_th: f64) -> FtlLeakage {
    let p_above = x.prob_above(y_th);
    let entropy_x = x.entropy();
    FtlLeakage {
        p_above,
        entropy_x,
        literal_bits: p_above * entropy_x,
        exact_bits: ftl_exact_mi(x, y_th),
    }
}

/// Consecutive-pair classes of an ideal FTL trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MarkovCounts {
    /// Pairs ending on the flat target.
    pub g1: usize,
    /// Flat then passthrough.
    pub g2: usize,
    /// Passthrough twice.
    pub g3: usize,
}

impl MarkovCounts {
    pub fn total(&self) -> usize {
        self.g1 + self.g2 + self.g3
    }

    /// `(g₂ − g₃)/k · H(X) + g₃/k · H(X_τ, X_τ−1)`
    pub fn predicted_mi(&self, k: usize, h_x: f64, h_xx: f64) -> f64 {
        let k = k as f64;
        (self.g2 as f64 - self.g3 as f64) / k * h_x + self.g3 as f64 / k * h_xx
    }
}

/// Counts pairs `(τ−1, τ)` for `τ = 3..=k`; there are exactly `k − 2`.
pub fn markov_decomposition_counts(x: &[f64], y: &[f64], y_th: f64) -> Result<MarkovCounts> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            what: "x and y sequences",
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::TooShort { need: 3, got: x.len() });
    }
    let flat: Vec<bool> = x
        .iter()
        .zip(y)
        .enumerate()
        .map(|(t, (&xv, &yv))| {
            if yv == y_th {
                Ok(true)
            } else if yv == xv {
                Ok(false)
            } else {
                Err(Error::invalid(format!(
                    "step {t}: y = {yv} is neither the target {y_th} nor the load {xv}"
                )))
            }
        })
        .collect::<Result<_>>()?;
    let mut c = MarkovCounts { g1: 0, g2: 0, g3: 0 };
    for t in 2..x.len() {
        match (flat[t - 1], flat[t]) {
            (_, true) => c.g1 += 1,
            (true, false) => c.g2 += 1,
            (false, false) => c.g3 += 1,
        }
    }
    Ok(c)
}

/// MI of a joint probability matrix `p[x][y]` by the double sum.
pub fn discrete_mi(joint: &[Vec<f64>]) -> f64 {
    let cols = joint.first().map_or(0, Vec::len);
    let px: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let py: Vec<f64> = (0..cols).map(|j| joint.iter().map(|r| r[j]).sum()).collect();
    let mut total = 0.0;
    for (i, row) in joint.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            if p > 0.0 {
                total += p * (p / (px[i] * py[j])).log2();
            }
        }
    }
    total
}

fn channel_joint(px: &[f64], channel: &[Vec<f64>]) -> Vec<Vec<f64>> {
    px.iter()
        .zip(channel)
        .map(|(p, row)| row.iter().map(|q| p * q).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropositionReport {
    pub support: usize,
    pub entropy_x: f64,
    pub constant_y_mi: f64,
    pub passthrough_mi: f64,
    pub random_min_mi: f64,
    pub random_max_mi: f64,
    pub uniform_channel_mi: f64,
    /// Constant Y gives zero MI and no random channel beats it.
    pub minimal_entropy_holds: bool,
    /// A uniform `p(y|x)` gives zero MI.
    pub maximal_conditional_holds: bool,
}

/// Checks the two minimum-MI constructions against 50 random channels on
/// the empirical distribution of `samples`.
pub fn verify_propositions(samples: &[f64], seed: u64) -> Result<PropositionReport> {
    let dist = DiscreteDist::from_samples(samples)?;
    let m = dist.values().len();
    if m < 2 {
        return Err(Error::invalid("degenerate load distribution: a single value carries no information"));
    }
    let px = dist.probs();
    // Y alphabet: every x shifted down one level, kept, or shifted up one.
    let ny = m + 2;
    let constant: Vec<Vec<f64>> = (0..m).map(|_| (0..ny).map(|j| if j == 0 { 1.0 } else { 0.0 }).collect()).collect();
    let passthrough: Vec<Vec<f64>> = (0..m).map(|i| (0..ny).map(|j| if j == i + 1 { 1.0 } else { 0.0 }).collect()).collect();
    let uniform: Vec<Vec<f64>> = vec![vec![1.0 / ny as f64; ny]; m];

    let constant_y_mi = discrete_mi(&channel_joint(px, &constant));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut random = Vec::with_capacity(50);
    for _ in 0..50 {
        let channel: Vec<Vec<f64>> = (0..m)
            .map(|_| {
                let w: Vec<f64> = (0..ny).map(|_| rng.gen::<f64>()).collect();
                let s: f64 = w.iter().sum();
                w.into_iter().map(|v| v / s).collect()
            })
            .collect();
        random.push(discrete_mi(&channel_joint(px, &channel)));
    }
    let random_min_mi = random.iter().copied().fold(f64::INFINITY, f64::min);
    let random_max_mi = random.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let uniform_channel_mi = discrete_mi(&channel_joint(px, &uniform));
    Ok(PropositionReport {
        support: m,
        entropy_x: dist.entropy(),
        constant_y_mi,
        passthrough_mi: discrete_mi(&channel_joint(px, &passthrough)),
        random_min_mi,
        random_max_mi,
        uniform_channel_mi,
        minimal_entropy_holds: constant_y_mi.abs() <= 1e-12 && random_min_mi >= constant_y_mi - 1e-12,
        maximal_conditional_holds: uniform_channel_mi.abs() <= 1e-9,
    })
}

/// Bins centred on each support point of `values`.
fn point_edges(values: &[f64]) -> Result<Edges> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    let mut edges = Vec::with_capacity(v.len() + 1);
    edges.push(v[0] - 0.5);
    for w in v.windows(2) {
        edges.push(0.5 * (w[0] + w[1]));
    }
    edges.push(v[v.len() - 1] + 0.5);
    Edges::new(edges)
}

/// Sampled counterpart of the closed-form separation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampledSeparation {
    pub k: usize,
    pub ess_mi: f64,
    pub ftl_mi: f64,
    pub ftl_exact_mi: f64,
    pub p_above: f64,
    pub p_above_exact: f64,
}

pub fn sampled_separation(regime: &IdealRegime, k: usize, seed: u64) -> Result<SampledSeparation> {
    if k == 0 {
        return Err(Error::Empty("sample count"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = regime.x.sample(&mut rng, k);
    let y_ess = ideal_ess_policy(&x, regime).y;
    let y_th = ideal_ftl_policy(&x, regime);
    let target = regime.y_th();
    let x_edges = point_edges(regime.x.values())?;
    let mut support = regime.x.values().to_vec();
    support.push(target);
    support.push(regime.y_ess());
    let binning = BinningScheme::new(x_edges, point_edges(&support)?);
    Ok(SampledSeparation {
        k,
        ess_mi: mi_iid(&x, &y_ess, &binning, 0.0)?,
        ftl_mi: mi_iid(&x, &y_th, &binning, 0.0)?,
        ftl_exact_mi: ftl_exact_mi(&regime.x, target),
        p_above: x.iter().filter(|&&v| v > target).count() as f64 / k as f64,
        p_above_exact: regime.x.prob_above(target),
    })
}

/// One line of the theory report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryCheck {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl TheoryCheck {
    fn new(name: &str, value: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            expected,
            tolerance,
            pass: (value - expected).abs() <= tolerance,
        }
    }

    /// Reported alongside the checks, never failing.
    fn info(name: &str, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
            expected: value,
            tolerance: 0.0,
            pass: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryReport {
    pub checks: Vec<TheoryCheck>,
}

impl TheoryReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::from("| check | value | expected | tolerance | pass |\n|---|---|---|---|---|\n");
        for c in &self.checks {
            s.push_str(&format!(
                "| {} | {:.6} | {:.6} | {:e} | {} |\n",
                c.name,
                c.value,
                c.expected,
                c.tolerance,
                if c.pass { "yes" } else { "no" }
            ));
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("check,value,expected,tolerance,pass\n");
        for c in &self.checks {
            s.push_str(&format!("{},{},{},{},{}\n", c.name, c.value, c.expected, c.tolerance, c.pass));
        }
        s
    }
}

/// Runs the standard checks on uniform{1,2,3,4} kW with `y*_th = 3`.
pub fn theory_report(seed: u64, k: usize) -> Result<TheoryReport> {
    let x = DiscreteDist::uniform(vec![1.0, 2.0, 3.0, 4.0])?;
    let regime = IdealRegime::new(x.clone(), 0.5);
    let leak = ftl_leakage(&x, regime.y_th());
    let sampled = sampled_separation(&regime, k, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let samples = x.sample(&mut rng, 1000);
    let props = verify_propositions(&samples, seed)?;
    let tol = 0.01;

    let mut checks = vec![
        TheoryCheck::new("ideal ESS exact MI", 0.0, 0.0, 1e-9),
        TheoryCheck::new("ideal ESS sampled MI", sampled.ess_mi, 0.0, 1e-9),
        TheoryCheck::new("ideal FTL exact MI", leak.exact_bits, 0.811_278_124_459_132_8, 1e-6),
        TheoryCheck::info("FTL leakage, literal P(x>y*)H(X)", leak.literal_bits),
        TheoryCheck::new("ideal FTL sampled MI", sampled.ftl_mi, leak.exact_bits, tol),
        TheoryCheck::new("P(x > y*) sampled", sampled.p_above, 0.25, tol),
        TheoryCheck::new("constant Y MI", props.constant_y_mi, 0.0, 1e-12),
        TheoryCheck::new("passthrough Y MI equals H(X)", props.passthrough_mi, props.entropy_x, 1e-9),
        TheoryCheck::new(
            "random channels never beat constant Y",
            f64::from(u8::from(props.random_min_mi >= props.constant_y_mi - 1e-12)),
            1.0,
            0.0,
        ),
        TheoryCheck::new("uniform p(y|x) MI", props.uniform_channel_mi, 0.0, 1e-9),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    for r in 0..10 {
        let len = rng.gen_range(3..400);
        let levels = rng.gen_range(2..7);
        let values: Vec<f64> = (1..=levels).map(f64::from).collect();
        let dist = DiscreteDist::uniform(values)?;
        let d = rng.gen_range(0.0..2.0);
        let reg = IdealRegime::new(dist, d);
        let xs = reg.x.sample(&mut rng, len);
        let ys = ideal_ftl_policy(&xs, &reg);
        let c = markov_decomposition_counts(&xs, &ys, reg.y_th())?;
        checks.push(TheoryCheck::new(
            &format!("g1+g2+g3 = k-2, regime {}", r + 1),
            c.total() as f64,
            (len - 2) as f64,
            0.0,
        ));
    }
    Ok(TheoryReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform4() -> DiscreteDist {
        DiscreteDist::uniform(vec![1.0, 2.0, 3.0, 4.0]).unwrap()
    }

    #[test]
    fn constant_target_leaks_nothing() {
        let r = IdealRegime::new(uniform4(), 0.5);
        let t = ideal_ess_policy(&[1.0, 4.0, 2.0, 3.0], &r);
        assert!(t.y.iter().all(|&y| y == 2.5));
        assert_eq!(t.energy, vec![0.0, 1.5, -0.0, 0.5, 0.0]);
    }

    #[test]
    fn drifting_load_overruns_finite_storage() {
        let mut r = IdealRegime::new(uniform4(), 0.5);
        r.ess_capacity_kwh = Some(2.0);
        let t = ideal_ess_policy(&[4.0, 4.0, 4.0], &r);
        assert!(t.capacity_exceeded);
        let ok = ideal_ess_policy(&[2.0, 3.0, 2.0, 3.0], &r);
        assert!(!ok.capacity_exceeded);
    }

    #[test]
    fn loss_compensation_closes_the_balance() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!(ess_loss_compensation(&x, 1.0, 1.0).unwrap().abs() < 1e-12);
        let l = ess_loss_compensation(&x, 0.96, 0.96).unwrap();
        assert!(l > 0.0);
        let mut r = IdealRegime::new(uniform4(), 0.0);
        r.l_ess = l;
        r.eta_charge = 0.96;
        r.eta_discharge = 0.96;
        let e = ideal_ess_policy(&x, &r).energy;
        assert!(e[4].abs() < 1e-9);
    }

    #[test]
    fn ftl_example_values() {
        let c = ftl_leakage(&uniform4(), 3.0);
        assert_eq!(c.literal_bits, 0.5);
        let h = -(0.25f64 * 0.25f64.log2() + 0.75 * 0.75f64.log2());
        assert!((c.exact_bits - h).abs() < 1e-15);
        assert!((c.exact_bits - 0.811278).abs() < 1e-6);
    }

    #[test]
    fn boundary_cases_agree() {
        let c = ftl_leakage(&uniform4(), 4.0);
        assert_eq!((c.literal_bits, c.exact_bits), (0.0, 0.0));
        let one = DiscreteDist::uniform(vec![2.0]).unwrap();
        let c = ftl_leakage(&one, 1.0);
        assert_eq!((c.literal_bits, c.exact_bits), (0.0, 0.0));
    }

    #[test]
    fn pair_classes() {
        let x = [1.0; 6];
        let c = markov_decomposition_counts(&x, &[3.0; 6], 3.0).unwrap();
        assert_eq!((c.g1, c.g2, c.g3), (4, 0, 0));
        let x = [5.0; 6];
        let c = markov_decomposition_counts(&x, &x, 3.0).unwrap();
        assert_eq!((c.g1, c.g2, c.g3), (0, 0, 4));
        let x = [5.0, 1.0, 5.0, 1.0, 5.0, 1.0, 5.0, 1.0];
        let y: Vec<f64> = x.iter().map(|&v: &f64| v.max(3.0)).collect();
        let c = markov_decomposition_counts(&x, &y, 3.0).unwrap();
        assert_eq!((c.g1, c.g2, c.g3), (3, 3, 0));
        assert!(markov_decomposition_counts(&[1.0, 2.0], &[3.0, 3.0], 3.0).is_err());
        assert!(markov_decomposition_counts(&[1.0, 2.0, 1.0], &[3.0, 2.5, 3.0], 3.0).is_err());
    }

    #[test]
    fn binary_source_uniform_channel() {
        let r = verify_propositions(&[0.0, 1.0, 0.0, 1.0], 1).unwrap();
        assert!(r.minimal_entropy_holds && r.maximal_conditional_holds);
        assert!((r.passthrough_mi - 1.0).abs() < 1e-12);
        assert!(r.random_max_mi <= r.entropy_x + 1e-12);
        assert!(verify_propositions(&[2.0, 2.0], 1).is_err());
    }

    #[test]
    fn report_passes() {
        let r = theory_report(7, 20_000).unwrap();
        assert!(r.all_pass(), "{}", r.to_markdown());
    }
}
