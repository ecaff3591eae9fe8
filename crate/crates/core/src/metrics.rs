//! Offline privacy scoring from histogram estimates.
//!
//! All entropies and mutual informations are in bits. Smoothing adds `eps`
//! pseudo-counts to every cell of the highest-dimensional histogram; marginals
//! are always taken from that smoothed joint so the entropy identities hold
//! exactly for any `eps`.

use serde::{Deserialize, Serialize};

use crate::domain::{BinningScheme, Edges};
use crate::error::{Error, Result};

/// Values below this magnitude are treated as floating-point noise.
pub const NEGATIVE_CLIP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalPdf {
    shape: Vec<usize>,
    probabilities: Vec<f64>,
    samples: usize,
    epsilon: f64,
}

impl EmpiricalPdf {
    fn from_counts(shape: Vec<usize>, counts: &[f64], samples: usize, epsilon: f64) -> Self {
        let cells = counts.len() as f64;
        let total = samples as f64 + epsilon * cells;
        let probabilities = counts.iter().map(|c| (c + epsilon) / total).collect();
        Self {
            shape,
            probabilities,
            samples,
            epsilon,
        }
    }

    pub fn dims(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Row-major cell probabilities (X index outermost for joints).
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Effective sample count including smoothing.
    pub fn effective_samples(&self) -> f64 {
        self.samples as f64 + self.epsilon * self.probabilities.len() as f64
    }

    /// Probability of 0-based cell `(i, j)` of a joint pdf.
    pub fn joint(&self, i: usize, j: usize) -> f64 {
        debug_assert_eq!(self.dims(), 2);
        self.probabilities[i * self.shape[1] + j]
    }

    /// Marginal over the first (X) axis of a joint pdf.
    pub fn marginal_x(&self) -> Vec<f64> {
        match self.shape.as_slice() {
            [_] => self.probabilities.clone(),
            [_, n] => self
                .probabilities
                .chunks(*n)
                .map(|row| row.iter().sum())
                .collect(),
            _ => unreachable!("pdfs are one- or two-dimensional"),
        }
    }

    /// Marginal over the second (Y) axis of a joint pdf.
    pub fn marginal_y(&self) -> Vec<f64> {
        match self.shape.as_slice() {
            [_] => self.probabilities.clone(),
            [_, n] => {
                let mut out = vec![0.0; *n];
                for row in self.probabilities.chunks(*n) {
                    for (o, p) in out.iter_mut().zip(row) {
                        *o += p;
                    }
                }
                out
            }
            _ => unreachable!("pdfs are one- or two-dimensional"),
        }
    }
}

/// Histogram estimate of a single sequence over `edges`.
pub fn estimate_pdf(values: &[f64], edges: &Edges, epsilon: f64) -> Result<EmpiricalPdf> {
    check_epsilon(epsilon)?;
    if values.is_empty() {
        return Err(Error::Empty("pdf samples"));
    }
    let bins = edges.bin_all(values)?;
    let mut counts = vec![0.0; edges.bins()];
    for b in bins {
        counts[b - 1] += 1.0;
    }
    Ok(EmpiricalPdf::from_counts(
        vec![edges.bins()],
        &counts,
        values.len(),
        epsilon,
    ))
}

/// Joint histogram estimate of aligned `(x, y)` samples.
pub fn estimate_joint_pdf(
    x: &[f64],
    y: &[f64],
    binning: &BinningScheme,
    epsilon: f64,
) -> Result<EmpiricalPdf> {
    check_epsilon(epsilon)?;
    check_aligned(x, y)?;
    if x.is_empty() {
        return Err(Error::Empty("pdf samples"));
    }
    let (m, n) = (binning.m(), binning.n());
    let xb = binning.x_edges.bin_all(x)?;
    let yb = binning.y_edges.bin_all(y)?;
    let mut counts = vec![0.0; m * n];
    for (i, j) in xb.into_iter().zip(yb) {
        counts[(i - 1) * n + (j - 1)] += 1.0;
    }
    Ok(EmpiricalPdf::from_counts(vec![m, n], &counts, x.len(), epsilon))
}

/// Shannon entropy in bits with `0 log 0 = 0`.
pub fn entropy(pdf: &EmpiricalPdf) -> f64 {
    entropy_of(pdf.probabilities())
}

pub fn entropy_of(probabilities: &[f64]) -> f64 {
    -probabilities
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

fn clip(v: f64) -> f64 {
    if v < 0.0 && v > -NEGATIVE_CLIP {
        0.0
    } else {
        v
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!(
            "smoothing constant must be finite and >= 0, got {epsilon}"
        )));
    }
    Ok(())
}

fn check_aligned(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            what: "x and y sequences",
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(())
}

/// MI of a joint pdf as the double sum Σ p(x,y) log p(x,y) / (p(x) p(y)).
pub fn mutual_information(joint: &EmpiricalPdf) -> f64 {
    let px = joint.marginal_x();
    let py = joint.marginal_y();
    let n = py.len();
    let mut total = 0.0;
    for (i, &pi) in px.iter().enumerate() {
        for (j, &pj) in py.iter().enumerate() {
            let pij = joint.probabilities()[i * n + j];
            if pij > 0.0 {
                total += pij * (pij / (pi * pj)).log2();
            }
        }
    }
    clip(total)
}

/// I.i.d. mutual information of aligned sequences, pooling every step into
/// one joint histogram.
pub fn mi_iid(x: &[f64], y: &[f64], binning: &BinningScheme, epsilon: f64) -> Result<f64> {
    check_aligned(x, y)?;
    if x.len() < 2 {
        return Err(Error::TooShort {
            need: 2,
            got: x.len(),
        });
    }
    let joint = estimate_joint_pdf(x, y, binning, epsilon)?;
    Ok(mutual_information(&joint))
}

/// Sparse histogram over fixed-width integer tuples, built by sorting so the
/// iteration order (and hence float summation) is deterministic.
struct SparseHistogram {
    counts: Vec<u64>,
}

impl SparseHistogram {
    fn from_keys(mut keys: Vec<u64>) -> Self {
        keys.sort_unstable();
        let mut counts = Vec::new();
        let mut iter = keys.iter().peekable();
        while let Some(&k) = iter.next() {
            let mut c = 1;
            while iter.peek() == Some(&&k) {
                iter.next();
                c += 1;
            }
            counts.push(c);
        }
        Self { counts }
    }

    /// Entropy when every one of `cells` cells receives `eps_per_cell`
    /// pseudo-counts; `total_mass` is the smoothed sample total.
    fn entropy(&self, cells: f64, eps_per_cell: f64, total_mass: f64) -> f64 {
        let occupied: f64 = self
            .counts
            .iter()
            .map(|&c| {
                let p = (c as f64 + eps_per_cell) / total_mass;
                -p * p.log2()
            })
            .sum();
        let empty_cells = cells - self.counts.len() as f64;
        if eps_per_cell > 0.0 && empty_cells > 0.0 {
            let q = eps_per_cell / total_mass;
            occupied - empty_cells * q * q.log2()
        } else {
            occupied
        }
    }
}

fn key(parts: &[(usize, usize)]) -> u64 {
    // (value, radix) pairs, 0-based values
    parts.iter().fold(0u64, |acc, &(v, r)| acc * r as u64 + v as u64)
}

/// First-order Markov mutual information under stationarity:
/// `[(k-1) I(X_t,X_{t-1}; Y_t,Y_{t-1}) - (k-2) I(X;Y)] / k`, with the pair
/// term pooled over all consecutive tuples and the single term over all samples.
pub fn mi_markov(x: &[f64], y: &[f64], binning: &BinningScheme, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    check_aligned(x, y)?;
    let k = x.len();
    if k < 3 {
        return Err(Error::TooShort { need: 3, got: k });
    }
    let (m, n) = (binning.m(), binning.n());
    let xb = binning.x_edges.bin_all(x)?;
    let yb = binning.y_edges.bin_all(y)?;

    let tuples = k - 1;
    let (mf, nf) = (m as f64, n as f64);
    let cells4 = mf * mf * nf * nf;
    let mass4 = tuples as f64 + epsilon * cells4;

    let mut k4 = Vec::with_capacity(tuples);
    let mut kx = Vec::with_capacity(tuples);
    let mut ky = Vec::with_capacity(tuples);
    for t in 1..k {
        let (a, b, c, d) = (xb[t] - 1, xb[t - 1] - 1, yb[t] - 1, yb[t - 1] - 1);
        k4.push(key(&[(a, m), (b, m), (c, n), (d, n)]));
        kx.push(key(&[(a, m), (b, m)]));
        ky.push(key(&[(c, n), (d, n)]));
    }
    let h4 = SparseHistogram::from_keys(k4).entropy(cells4, epsilon, mass4);
    // marginal cells of the smoothed 4-D histogram absorb eps from each collapsed cell
    let hx2 = SparseHistogram::from_keys(kx).entropy(mf * mf, epsilon * nf * nf, mass4);
    let hy2 = SparseHistogram::from_keys(ky).entropy(nf * nf, epsilon * mf * mf, mass4);
    let pair_mi = hx2 + hy2 - h4;

    let single_mi = mi_iid(x, y, binning, epsilon)?;
    let value = ((k - 1) as f64 * pair_mi - (k - 2) as f64 * single_mi) / k as f64;
    Ok(clip(value))
}

/// One row of the `score` output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiReport {
    pub iid_mi_bits: f64,
    pub markov_mi_bits: f64,
    pub entropy_x_bits: f64,
    pub k: usize,
}

pub fn score(x: &[f64], y: &[f64], binning: &BinningScheme, epsilon: f64) -> Result<MiReport> {
    let iid = mi_iid(x, y, binning, epsilon)?;
    let markov = mi_markov(x, y, binning, epsilon)?;
    let hx = entropy(&estimate_pdf(x, &binning.x_edges, epsilon)?);
    Ok(MiReport {
        iid_mi_bits: iid.max(0.0),
        markov_mi_bits: markov.max(0.0),
        entropy_x_bits: hx.max(0.0),
        k: x.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Edges;

    fn two_bins() -> Edges {
        Edges::uniform(0.0, 12.0, 2).unwrap()
    }

    fn unit_binning(bins: usize) -> BinningScheme {
        // bins centred on the integers 0..bins
        let e = Edges::uniform(-0.5, bins as f64 - 0.5, bins).unwrap();
        BinningScheme::new(e.clone(), e)
    }

    #[test]
    fn estimate_pdf_counts_and_smoothing() {
        let s = [0.1, 0.1, 11.9];
        let p = estimate_pdf(&s, &two_bins(), 0.0).unwrap();
        assert!((p.probabilities()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p.probabilities()[1] - 1.0 / 3.0).abs() < 1e-15);
        let p = estimate_pdf(&s, &two_bins(), 1.0).unwrap();
        assert!((p.probabilities()[0] - 0.6).abs() < 1e-15);
        assert!((p.probabilities()[1] - 0.4).abs() < 1e-15);
        assert_eq!(p.effective_samples(), 5.0);
    }

    #[test]
    fn joint_of_identical_sequences_is_diagonal() {
        let b = unit_binning(3);
        let x = [0.0, 1.0, 2.0, 1.0, 0.0];
        let p = estimate_joint_pdf(&x, &x, &b, 0.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(p.joint(i, j), 0.0);
                }
            }
        }
        let total: f64 = p.probabilities().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn estimate_pdf_errors() {
        assert!(matches!(
            estimate_pdf(&[], &two_bins(), 0.0),
            Err(Error::Empty(_))
        ));
        assert!(matches!(
            estimate_pdf(&[13.0], &two_bins(), 0.0),
            Err(Error::OutOfRange { .. })
        ));
        let b = unit_binning(2);
        assert!(estimate_joint_pdf(&[0.0, 1.0], &[0.0], &b, 0.0).is_err());
    }

    #[test]
    fn entropy_examples() {
        assert!((entropy_of(&[0.25; 4]) - 2.0).abs() < 1e-15);
        assert_eq!(entropy_of(&[1.0, 0.0, 0.0]), 0.0);
        assert!((entropy_of(&[0.75, 0.25]) - 0.811_278_124_459_132_9).abs() < 1e-12);
    }

    #[test]
    fn mi_iid_examples() {
        let b = unit_binning(4);
        let x = [0.0, 1.0, 2.0, 3.0, 0.0, 3.0, 1.0, 2.0];
        assert!(mi_iid(&x, &[1.0; 8], &b, 0.0).unwrap().abs() < 1e-15);
        assert!((mi_iid(&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.0, 2.0, 3.0], &b, 0.0).unwrap() - 2.0).abs() < 1e-12);
        let b2 = unit_binning(2);
        let xs = [0.0, 0.0, 1.0, 1.0];
        let ys = [0.0, 1.0, 0.0, 1.0];
        assert!(mi_iid(&xs, &ys, &b2, 0.0).unwrap().abs() < 1e-15);
        assert!(mi_iid(&xs, &ys[..3], &b2, 0.0).is_err());
    }

    #[test]
    fn mi_markov_degenerate_cases() {
        let b = unit_binning(2);
        let x: Vec<f64> = (0..50).map(|t| (t % 2) as f64).collect();
        assert!(mi_markov(&x, &vec![1.0; 50], &b, 0.0).unwrap().abs() < 1e-12);
        assert!(matches!(
            mi_markov(&[0.0, 1.0], &[0.0, 1.0], &b, 0.0),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn mi_markov_on_independent_pairs_is_zero() {
        // x-pairs repeat with period 4 and y-pairs with period 3, so over a
        // multiple of 12 tuples every (x-pair, y-pair) combination occurs once.
        let b = unit_binning(2);
        let k = 12 * 20 + 1;
        let x: Vec<f64> = (0..k).map(|t| [0.0, 0.0, 1.0, 1.0][t % 4]).collect();
        let y: Vec<f64> = (0..k).map(|t| [0.0, 0.0, 1.0][t % 3]).collect();
        let v = mi_markov(&x, &y, &b, 0.0).unwrap();
        assert!(v <= 1e-9, "markov mi {v}");
    }

    #[test]
    fn score_row() {
        let b = unit_binning(4);
        let x = [0.0, 1.0, 2.0, 3.0, 2.0, 1.0];
        let r = score(&x, &x, &b, 0.0).unwrap();
        assert_eq!(r.k, 6);
        assert!(r.iid_mi_bits <= r.entropy_x_bits + 1e-12);
        assert!(r.markov_mi_bits >= 0.0);
    }
}
