//! Majorization order on coherence spectra and the transport-response
//! intervals it constrains.
//!
//! A coherence spectrum is a descending probability vector `lambda`.
//! Against a Hermitian transport operator `A` with eigenvalues `a`, the
//! set of responses reachable by unitary input control,
//! `{ tr(U diag(lambda) U^dag A) : U unitary }`, is exactly the closed
//! interval between the two sorted dot products
//!
//! ```text
//! lo = sum_i lambda_desc[i] * a_asc[i]
//! hi = sum_i lambda_desc[i] * a_desc[i]
//! ```
//!
//! When `lambda` is majorized by `mu` (lambda less coherent), every
//! prefix-sum inequality transfers through Abel summation to the sorted
//! dot products, so the lambda interval nests inside the mu interval
//! for every operator. Incomparable spectra admit operators whose
//! intervals only partially overlap. Operators are built from measured
//! transmission matrices through nonnegative readout masks,
//! `A = T~^dag diag(mask) T~`, rescaled to unit spectral radius.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{haar_unitary, CMatrix, CVector};
use crate::rng::SeededRng;
use crate::tm::ObservedTM;

/// Comparison tolerance for prefix sums and interval endpoints.
const TOL: f64 = 1e-12;

/// Descending probability vector over coherence eigenvalues.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherenceSpectrum {
    values: Vec<f64>,
}

impl CoherenceSpectrum {
    /// Strict constructor: entries in [0,1], sorted descending, unit sum.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("spectrum must be non-empty"));
        }
        for pair in values.windows(2) {
            if pair[0] < pair[1] {
                return Err(Error::invalid("spectrum must be sorted descending"));
            }
        }
        if values.iter().any(|&v| !(0.0..=1.0 + TOL).contains(&v)) {
            return Err(Error::invalid("spectrum entries must lie in [0,1]"));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "spectrum must sum to 1 (got {sum})"
            )));
        }
        Ok(CoherenceSpectrum { values })
    }

    /// Sort descending and rescale to unit sum.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("spectrum must be non-empty"));
        }
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::invalid("spectrum weights must be nonnegative finite"));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::invalid("spectrum weights must have positive sum"));
        }
        let mut values: Vec<f64> = weights.iter().map(|w| w / sum).collect();
        values.sort_by(|a, b| b.partial_cmp(a).unwrap());
        CoherenceSpectrum::new(values)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        CoherenceSpectrum::from_weights(&vec![1.0; n.max(1)])
    }

    /// Fully coherent spectrum (1, 0, ..., 0).
    pub fn pure(n: usize) -> Result<Self> {
        let mut w = vec![0.0; n.max(1)];
        w[0] = 1.0;
        CoherenceSpectrum::new(w)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Zero-pad to dimension `n` (preserves the majorization relations).
    pub fn padded(&self, n: usize) -> Result<Self> {
        if n < self.len() {
            return Err(Error::invalid("cannot pad a spectrum to fewer entries"));
        }
        let mut values = self.values.clone();
        values.resize(n, 0.0);
        CoherenceSpectrum::new(values)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MajorizationRelation {
    /// First spectrum is majorized by the second (first less coherent).
    Majorized,
    /// First spectrum majorizes the second.
    Majorizes,
    Equal,
    Incomparable,
}

/// Prefix-sum comparison of two descending spectra.
pub fn majorization_compare(
    a: &CoherenceSpectrum,
    b: &CoherenceSpectrum,
) -> Result<MajorizationRelation> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            context: "majorization_compare",
            expected: a.len(),
            actual: b.len(),
        });
    }
    let mut a_leq_b = true; // every prefix of a <= prefix of b
    let mut b_leq_a = true;
    let (mut pa, mut pb) = (0.0f64, 0.0f64);
    for k in 0..a.len() {
        pa += a.values[k];
        pb += b.values[k];
        if pa > pb + TOL {
            a_leq_b = false;
        }
        if pb > pa + TOL {
            b_leq_a = false;
        }
    }
    Ok(match (a_leq_b, b_leq_a) {
        (true, true) => MajorizationRelation::Equal,
        (true, false) => MajorizationRelation::Majorized,
        (false, true) => MajorizationRelation::Majorizes,
        (false, false) => MajorizationRelation::Incomparable,
    })
}

/// Hermitian transport operator with cached eigensystem (ascending).
#[derive(Clone, Debug)]
pub struct TransportOperator {
    matrix: CMatrix,
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
    /// Spectral radius divided out at construction (1 when unnormalized).
    pub scale: f64,
    pub provenance: String,
    pub readout_mask: Option<Vec<f64>>,
}

impl TransportOperator {
    /// Wrap a Hermitian matrix (deviation from A = A^dag above 1e-10
    /// relative is rejected). No rescaling.
    pub fn from_hermitian(matrix: CMatrix, provenance: impl Into<String>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::invalid("transport operator must be square"));
        }
        let n = matrix.nrows();
        let mut magnitude = 0.0f64;
        let mut asym = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                magnitude = magnitude.max(matrix[(i, j)].norm());
                asym = asym.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
            }
        }
        if asym > 1e-10 * magnitude.max(1.0) {
            return Err(Error::invalid(format!(
                "matrix is not Hermitian (asymmetry {asym})"
            )));
        }
        // Exact Hermitization removes floating-point asymmetry before
        // the eigensolver.
        let herm = (matrix.clone() + matrix.adjoint()).map(|z| z * 0.5);
        let eig = SymmetricEigen::new(herm.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut eigenvectors = CMatrix::zeros(n, n);
        for (col, &src) in order.iter().enumerate() {
            eigenvectors.set_column(col, &eig.eigenvectors.column(src));
        }
        Ok(TransportOperator {
            matrix: herm,
            eigenvalues,
            eigenvectors,
            scale: 1.0,
            provenance: provenance.into(),
            readout_mask: None,
        })
    }

    /// Effective operator from a measured (reference-compensated)
    /// transmission matrix and a nonnegative readout mask:
    /// `A = T~^dag diag(mask) T~`, rescaled so the top eigenvalue is 1.
    pub fn from_readout(
        t_tilde: &CMatrix,
        mask: &[f64],
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if mask.len() != t_tilde.nrows() {
            return Err(Error::DimensionMismatch {
                context: "readout mask",
                expected: t_tilde.nrows(),
                actual: mask.len(),
            });
        }
        if mask.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::invalid("readout mask must be nonnegative finite"));
        }
        if mask.iter().all(|&w| w == 0.0) {
            return Err(Error::invalid("readout mask must not be all-zero"));
        }
        let mut weighted = t_tilde.clone();
        for (m, &w) in mask.iter().enumerate() {
            let root = w.sqrt();
            for j in 0..weighted.ncols() {
                weighted[(m, j)] *= root;
            }
        }
        let gram = weighted.adjoint() * &weighted;
        let mut op = TransportOperator::from_hermitian(gram, provenance)?;
        let top = *op.eigenvalues.last().expect("non-empty spectrum");
        if top <= 0.0 {
            return Err(Error::invalid("readout operator has no positive response"));
        }
        op.matrix /= Complex64::new(top, 0.0);
        for v in &mut op.eigenvalues {
            *v /= top;
        }
        op.scale = top;
        op.readout_mask = Some(mask.to_vec());
        Ok(op)
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Eigenvalues ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Unitary whose column `i` is the eigenvector of the i-th
    /// ascending eigenvalue.
    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }
}

/// Achievable transport response range (closed interval).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseInterval {
    pub lo: f64,
    pub hi: f64,
}

impl ResponseInterval {
    fn from_sorted_sums(a: f64, b: f64) -> Self {
        // The similarly sorted product dominates mathematically; min/max
        // absorbs roundoff on degenerate spectra.
        ResponseInterval {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64, slack: f64) -> bool {
        x >= self.lo - slack && x <= self.hi + slack
    }
}

/// Closed-form achievable interval: oppositely and similarly sorted
/// eigenvalue dot products.
pub fn response_interval(
    spectrum: &CoherenceSpectrum,
    operator: &TransportOperator,
) -> Result<ResponseInterval> {
    let n = operator.dimension();
    if spectrum.len() != n {
        return Err(Error::DimensionMismatch {
            context: "response_interval",
            expected: n,
            actual: spectrum.len(),
        });
    }
    let a = operator.eigenvalues();
    let lam = spectrum.values();
    let lo: f64 = lam.iter().zip(a.iter()).map(|(l, v)| l * v).sum();
    let hi: f64 = lam.iter().zip(a.iter().rev()).map(|(l, v)| l * v).sum();
    Ok(ResponseInterval::from_sorted_sums(lo, hi))
}

/// Response of the unitary orbit point `U diag(lambda) U^dag` against
/// the operator: `sum_i lambda_i * u_i^dag A u_i`.
pub fn orbit_response(
    spectrum: &CoherenceSpectrum,
    operator: &TransportOperator,
    u: &CMatrix,
) -> f64 {
    let au = operator.matrix() * u;
    let n = operator.dimension();
    let mut acc = 0.0;
    for i in 0..n {
        let mut quad = Complex64::new(0.0, 0.0);
        for k in 0..n {
            quad += u[(k, i)].conj() * au[(k, i)];
        }
        acc += spectrum.values()[i] * quad.re;
    }
    acc
}

/// Brute-force oracle: Haar-random unitary orbit samples. Every sample
/// lies inside the closed-form interval.
pub fn sample_responses(
    spectrum: &CoherenceSpectrum,
    operator: &TransportOperator,
    count: usize,
    rng: &mut SeededRng,
) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::invalid("sample count must be >= 1"));
    }
    let n = operator.dimension();
    if spectrum.len() != n {
        return Err(Error::DimensionMismatch {
            context: "sample_responses",
            expected: n,
            actual: spectrum.len(),
        });
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let u = haar_unitary(n, rng)?;
        out.push(orbit_response(spectrum, operator, &u));
    }
    Ok(out)
}

/// Responses of the two sorted-alignment unitaries, which attain the
/// interval endpoints: columns of the eigenvector matrix in ascending
/// (lo) and descending (hi) eigenvalue order.
pub fn attained_endpoints(
    spectrum: &CoherenceSpectrum,
    operator: &TransportOperator,
) -> Result<(f64, f64)> {
    let n = operator.dimension();
    if spectrum.len() != n {
        return Err(Error::DimensionMismatch {
            context: "attained_endpoints",
            expected: n,
            actual: spectrum.len(),
        });
    }
    let asc = operator.eigenvectors().clone();
    let mut desc = CMatrix::zeros(n, n);
    for i in 0..n {
        desc.set_column(i, &asc.column(n - 1 - i));
    }
    Ok((
        orbit_response(spectrum, operator, &asc),
        orbit_response(spectrum, operator, &desc),
    ))
}

/// Estimate |s_m| from the reference blank and divide it out of each
/// observed-TM row, recovering the bare medium response.
pub fn reference_compensate(tm: &ObservedTM) -> Result<CMatrix> {
    let m = tm.channels();
    if tm.blank.len() != m {
        return Err(Error::DimensionMismatch {
            context: "reference_compensate",
            expected: m,
            actual: tm.blank.len(),
        });
    }
    let mean_blank: f64 = tm.blank.0.iter().sum::<f64>() / m as f64;
    if mean_blank <= 0.0 {
        return Err(Error::invalid("blank frame carries no reference light"));
    }
    // Channels with a (noise-)dark reference are floored rather than
    // divided by zero; they carry no usable interferometric signal.
    let floor = 1e-12 * mean_blank;
    let mut out = tm.matrix.clone();
    for row in 0..m {
        let amp = tm.blank.0[row].max(floor).sqrt();
        for col in 0..out.ncols() {
            out[(row, col)] /= Complex64::new(amp, 0.0);
        }
    }
    Ok(out)
}

/// Deterministic weighted reconstruction of a mixed-spectrum response:
/// feed each (orthonormal) basis field through the measured matrix,
/// read out the masked intensity and weight by the spectrum. Equals the
/// trace-form response of the readout operator built from the same
/// matrix and mask.
pub fn weighted_reconstruction_response(
    spectrum: &CoherenceSpectrum,
    basis: &CMatrix,
    t_tilde: &CMatrix,
    operator: &TransportOperator,
) -> Result<f64> {
    let n = t_tilde.ncols();
    if spectrum.len() != n || basis.nrows() != n || basis.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "weighted_reconstruction_response",
            expected: n,
            actual: spectrum.len().min(basis.nrows()),
        });
    }
    let mask = operator
        .readout_mask
        .as_ref()
        .ok_or_else(|| Error::invalid("operator carries no readout mask"))?;
    if mask.len() != t_tilde.nrows() {
        return Err(Error::DimensionMismatch {
            context: "weighted_reconstruction_response mask",
            expected: t_tilde.nrows(),
            actual: mask.len(),
        });
    }
    let gram_dev = crate::linalg::unitarity_error(basis);
    if gram_dev > 1e-8 {
        return Err(Error::invalid(format!(
            "input basis is not orthonormal (Gram deviation {gram_dev})"
        )));
    }
    let mut total = 0.0;
    for i in 0..n {
        let field: CVector = basis.column(i).into_owned();
        let scattered = t_tilde * &field;
        let readout: f64 = scattered
            .iter()
            .zip(mask.iter())
            .map(|(z, &w)| w * z.norm_sqr())
            .sum();
        total += spectrum.values()[i] * readout / operator.scale;
    }
    Ok(total)
}

/// Contiguous readout bins over the camera channels, as indicator masks.
pub fn binned_masks(channels: usize, bins: usize) -> Result<Vec<Vec<f64>>> {
    if bins == 0 || bins > channels {
        return Err(Error::invalid(format!(
            "need 1..={channels} readout bins, got {bins}"
        )));
    }
    let mut masks = Vec::with_capacity(bins);
    for b in 0..bins {
        let start = b * channels / bins;
        let end = (b + 1) * channels / bins;
        let mut mask = vec![0.0; channels];
        for w in mask.iter_mut().take(end).skip(start) {
            *w = 1.0;
        }
        masks.push(mask);
    }
    Ok(masks)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntervalClass {
    Equal,
    FirstInsideSecond,
    SecondInsideFirst,
    PartialOverlap,
    Disjoint,
}

/// Classify two closed intervals with endpoint tolerance `TOL`.
pub fn classify_intervals(a: ResponseInterval, b: ResponseInterval) -> IntervalClass {
    let eq = (a.lo - b.lo).abs() <= TOL && (a.hi - b.hi).abs() <= TOL;
    if eq {
        return IntervalClass::Equal;
    }
    if a.lo >= b.lo - TOL && a.hi <= b.hi + TOL {
        return IntervalClass::FirstInsideSecond;
    }
    if b.lo >= a.lo - TOL && b.hi <= a.hi + TOL {
        return IntervalClass::SecondInsideFirst;
    }
    if a.hi < b.lo - TOL || b.hi < a.lo - TOL {
        return IntervalClass::Disjoint;
    }
    IntervalClass::PartialOverlap
}

#[derive(Clone, Debug, Serialize)]
pub struct IntervalComparison {
    pub operator_label: String,
    pub first: ResponseInterval,
    pub second: ResponseInterval,
    pub class: IntervalClass,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairVerdict {
    pub relation: MajorizationRelation,
    pub comparisons: Vec<IntervalComparison>,
    /// Less-coherent interval nests inside the more-coherent one for
    /// every operator (always false for incomparable pairs).
    pub nested_for_all: bool,
    /// At least one operator shows strict partial overlap.
    pub overlap_witnessed: bool,
    pub verdict: String,
}

/// Interval table and verdicts for each (spectrum pair, operator).
pub fn nesting_experiment(
    pairs: &[(CoherenceSpectrum, CoherenceSpectrum)],
    operators: &[TransportOperator],
) -> Result<Vec<PairVerdict>> {
    if operators.is_empty() {
        return Err(Error::invalid("nesting experiment needs operators"));
    }
    let mut verdicts = Vec::with_capacity(pairs.len());
    for (first, second) in pairs {
        let relation = majorization_compare(first, second)?;
        let mut comparisons = Vec::with_capacity(operators.len());
        let mut nested_for_all = relation != MajorizationRelation::Incomparable;
        let mut overlap_witnessed = false;
        for op in operators {
            let ia = response_interval(first, op)?;
            let ib = response_interval(second, op)?;
            let class = classify_intervals(ia, ib);
            let nested_ok = match relation {
                MajorizationRelation::Majorized => matches!(
                    class,
                    IntervalClass::FirstInsideSecond | IntervalClass::Equal
                ),
                MajorizationRelation::Majorizes => matches!(
                    class,
                    IntervalClass::SecondInsideFirst | IntervalClass::Equal
                ),
                MajorizationRelation::Equal => class == IntervalClass::Equal,
                MajorizationRelation::Incomparable => false,
            };
            nested_for_all &= nested_ok;
            overlap_witnessed |= class == IntervalClass::PartialOverlap;
            comparisons.push(IntervalComparison {
                operator_label: op.provenance.clone(),
                first: ia,
                second: ib,
                class,
            });
        }
        let verdict = if nested_for_all {
            "nested-for-all-operators".to_owned()
        } else if overlap_witnessed {
            "partial-overlap-witnessed".to_owned()
        } else {
            "inconclusive".to_owned()
        };
        verdicts.push(PairVerdict {
            relation,
            comparisons,
            nested_for_all,
            overlap_witnessed,
            verdict,
        });
    }
    Ok(verdicts)
}

/// Uniformly random spectrum (normalized exponentials), descending.
pub fn random_spectrum(n: usize, rng: &mut SeededRng) -> Result<CoherenceSpectrum> {
    let weights: Vec<f64> = (0..n.max(1))
        .map(|_| -(1.0 - rng.gen::<f64>()).ln())
        .collect();
    CoherenceSpectrum::from_weights(&weights)
}

/// One pinching step (T-transform): move weight `t` of the gap from a
/// larger entry onto a smaller one. The result is majorized by the input.
pub fn t_transform(
    spectrum: &CoherenceSpectrum,
    i: usize,
    j: usize,
    t: f64,
) -> Result<CoherenceSpectrum> {
    let n = spectrum.len();
    if i >= n || j >= n || i == j {
        return Err(Error::invalid("t_transform needs two distinct indices"));
    }
    if !(0.0..=0.5).contains(&t) {
        return Err(Error::invalid("t_transform mixing weight must be in [0, 1/2]"));
    }
    let mut v = spectrum.values().to_vec();
    let (hi, lo) = if v[i] >= v[j] { (i, j) } else { (j, i) };
    let gap = v[hi] - v[lo];
    v[hi] -= t * gap;
    v[lo] += t * gap;
    CoherenceSpectrum::from_weights(&v)
}

/// Comparable pair generator: a chain of random T-transforms from a
/// random seed spectrum yields `(less, more)` with `less` majorized by
/// `more` by construction.
pub fn comparable_pair(
    n: usize,
    steps: usize,
    rng: &mut SeededRng,
) -> Result<(CoherenceSpectrum, CoherenceSpectrum)> {
    if n < 2 {
        return Err(Error::invalid("comparable pairs need dimension >= 2"));
    }
    let more = random_spectrum(n, rng)?;
    let mut less = more.clone();
    for _ in 0..steps.max(1) {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n);
        while j == i {
            j = rng.gen_range(0..n);
        }
        let t = 0.5 * rng.gen::<f64>();
        less = t_transform(&less, i, j, t)?;
    }
    Ok((less, more))
}

/// The declared incomparable benchmark pairs (zero-padded to `n`).
/// Prefix sums cross for each pair, so no majorization order holds.
pub fn benchmark_incomparable_pairs(
    n: usize,
) -> Result<Vec<(CoherenceSpectrum, CoherenceSpectrum)>> {
    let raw: [(Vec<f64>, Vec<f64>); 3] = [
        (vec![0.6, 0.2, 0.2], vec![0.5, 0.4, 0.1]),
        (vec![0.45, 0.30, 0.15, 0.10], vec![0.50, 0.20, 0.20, 0.10]),
        (vec![0.55, 0.25, 0.20], vec![0.47, 0.41, 0.12]),
    ];
    let mut pairs = Vec::new();
    for (a, b) in raw {
        let sa = CoherenceSpectrum::new(a)?.padded(n)?;
        let sb = CoherenceSpectrum::new(b)?.padded(n)?;
        debug_assert_eq!(
            majorization_compare(&sa, &sb)?,
            MajorizationRelation::Incomparable
        );
        pairs.push((sa, sb));
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spectrum(v: &[f64]) -> CoherenceSpectrum {
        CoherenceSpectrum::new(v.to_vec()).unwrap()
    }

    fn diag_operator(values: &[f64]) -> TransportOperator {
        let n = values.len();
        let m = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(values[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        TransportOperator::from_hermitian(m, "diag").unwrap()
    }

    fn random_hermitian_operator(n: usize, rng: &mut SeededRng) -> TransportOperator {
        let u = haar_unitary(n, rng).unwrap();
        let d: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(d[i], 0.0);
        }
        let a = &u * m * u.adjoint();
        TransportOperator::from_hermitian(a, "random").unwrap()
    }

    #[test]
    fn spectrum_constructor_enforces_invariants() {
        assert!(CoherenceSpectrum::new(vec![0.2, 0.8]).is_err()); // ascending
        assert!(CoherenceSpectrum::new(vec![0.7, 0.2]).is_err()); // sum != 1
        assert!(CoherenceSpectrum::new(vec![1.2, -0.2]).is_err()); // range
        assert!(CoherenceSpectrum::new(vec![0.6, 0.4]).is_ok());
        let s = CoherenceSpectrum::from_weights(&[1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.values(), &[0.5, 1.0 / 3.0, 1.0 / 6.0]);
    }

    #[test]
    fn majorization_textbook_cases() {
        let uniform = spectrum(&[0.5, 0.5]);
        let pure = spectrum(&[1.0, 0.0]);
        assert_eq!(
            majorization_compare(&uniform, &pure).unwrap(),
            MajorizationRelation::Majorized
        );
        assert_eq!(
            majorization_compare(&pure, &uniform).unwrap(),
            MajorizationRelation::Majorizes
        );

        let a = spectrum(&[0.4, 0.35, 0.25]);
        let b = spectrum(&[0.5, 0.25, 0.25]);
        assert_eq!(
            majorization_compare(&a, &b).unwrap(),
            MajorizationRelation::Majorized
        );

        let c = spectrum(&[0.6, 0.2, 0.2]);
        let d = spectrum(&[0.5, 0.4, 0.1]);
        assert_eq!(
            majorization_compare(&c, &d).unwrap(),
            MajorizationRelation::Incomparable
        );
    }

    #[test]
    fn majorization_is_reflexive_and_transitive() {
        let mut rng = SeededRng::new(3, "partial-order");
        for _ in 0..50 {
            let c = random_spectrum(6, &mut rng).unwrap();
            assert_eq!(
                majorization_compare(&c, &c).unwrap(),
                MajorizationRelation::Equal
            );
            let (b, c) = {
                let (less, more) = (t_transform(&c, 0, 5, 0.3).unwrap(), c);
                (less, more)
            };
            let a = t_transform(&b, 1, 4, 0.25).unwrap();
            assert_eq!(
                majorization_compare(&a, &b).unwrap(),
                MajorizationRelation::Majorized
            );
            assert_eq!(
                majorization_compare(&b, &c).unwrap(),
                MajorizationRelation::Majorized
            );
            // transitivity
            assert_eq!(
                majorization_compare(&a, &c).unwrap(),
                MajorizationRelation::Majorized
            );
            // antisymmetry up to permutation: both directions only when equal
            assert_ne!(
                majorization_compare(&c, &a).unwrap(),
                MajorizationRelation::Majorized
            );
        }
    }

    #[test]
    fn any_two_distinct_spectra_are_comparable_at_n2() {
        let mut grid = Vec::new();
        for k in 0..=50 {
            let x = 0.5 + k as f64 * 0.01;
            grid.push(CoherenceSpectrum::from_weights(&[x, 1.0 - x]).unwrap());
        }
        for a in &grid {
            for b in &grid {
                assert_ne!(
                    majorization_compare(a, b).unwrap(),
                    MajorizationRelation::Incomparable
                );
            }
        }
    }

    #[test]
    fn interval_examples() {
        let op = diag_operator(&[0.1, 0.9]);
        let pure = spectrum(&[1.0, 0.0]);
        let iv = response_interval(&pure, &op).unwrap();
        assert!((iv.lo - 0.1).abs() < 1e-12 && (iv.hi - 0.9).abs() < 1e-12);

        let mixed = spectrum(&[0.75, 0.25]);
        let iv = response_interval(&mixed, &op).unwrap();
        assert!((iv.lo - 0.3).abs() < 1e-12 && (iv.hi - 0.7).abs() < 1e-12);

        let mut rng = SeededRng::new(8, "uniform-interval");
        let op = random_hermitian_operator(5, &mut rng);
        let uniform = CoherenceSpectrum::uniform(5).unwrap();
        let iv = response_interval(&uniform, &op).unwrap();
        let trace_over_n: f64 = op.eigenvalues().iter().sum::<f64>() / 5.0;
        assert!(iv.width() < 1e-12);
        assert!((iv.lo - trace_over_n).abs() < 1e-12);
    }

    #[test]
    fn uniform_spectrum_samples_are_constant() {
        let mut rng = SeededRng::new(9, "uniform-samples");
        let op = random_hermitian_operator(4, &mut rng);
        let uniform = CoherenceSpectrum::uniform(4).unwrap();
        let trace_over_n: f64 = op.eigenvalues().iter().sum::<f64>() / 4.0;
        for r in sample_responses(&uniform, &op, 64, &mut rng).unwrap() {
            assert!((r - trace_over_n).abs() < 1e-12);
        }
    }

    #[test]
    fn samples_stay_inside_interval_and_endpoints_attained() {
        let mut rng = SeededRng::new(10, "inside");
        for n in [2usize, 3, 5, 8] {
            let op = random_hermitian_operator(n, &mut rng);
            let lam = random_spectrum(n, &mut rng).unwrap();
            let iv = response_interval(&lam, &op).unwrap();
            for r in sample_responses(&lam, &op, 500, &mut rng).unwrap() {
                assert!(iv.contains(r, 1e-9), "sample {r} outside {iv:?}");
            }
            let (lo_hat, hi_hat) = attained_endpoints(&lam, &op).unwrap();
            assert!((lo_hat - iv.lo).abs() <= 1e-12);
            assert!((hi_hat - iv.hi).abs() <= 1e-12);
        }
    }

    // Monte Carlo convergence to the endpoints is only testable in low
    // dimension: at n = 2 the orbit response is uniform on the interval,
    // so 1e4 samples approach both ends far inside 5% of the width.
    #[test]
    fn extremes_approach_endpoints_at_n2() {
        let mut rng = SeededRng::new(11, "extremes");
        let op = random_hermitian_operator(2, &mut rng);
        let lam = spectrum(&[0.8, 0.2]);
        let iv = response_interval(&lam, &op).unwrap();
        let samples = sample_responses(&lam, &op, 10_000, &mut rng).unwrap();
        let min = samples.iter().cloned().fold(f64::MAX, f64::min);
        let max = samples.iter().cloned().fold(f64::MIN, f64::max);
        let w = iv.width();
        assert!(min - iv.lo < 0.05 * w, "min {min} far from lo {}", iv.lo);
        assert!(iv.hi - max < 0.05 * w, "max {max} far from hi {}", iv.hi);
    }

    #[test]
    fn readout_operator_from_unitary_matrix_is_isotropic() {
        let mut rng = SeededRng::new(12, "isotropic");
        let u = haar_unitary(6, &mut rng).unwrap();
        let op = TransportOperator::from_readout(&u, &[1.0; 6], "all-ones").unwrap();
        // A = c I: every interval degenerates.
        for _ in 0..5 {
            let lam = random_spectrum(6, &mut rng).unwrap();
            let iv = response_interval(&lam, &op).unwrap();
            assert!(iv.width() < 1e-9, "width {}", iv.width());
        }
    }

    #[test]
    fn single_channel_mask_gives_rank_one_operator() {
        let mut rng = SeededRng::new(13, "rank1");
        let t = crate::linalg::gaussian_medium(10, 4, &mut rng).unwrap();
        let mut mask = vec![0.0; 10];
        mask[3] = 1.0;
        let op = TransportOperator::from_readout(&t, &mask, "single").unwrap();
        let eigs = op.eigenvalues();
        for &e in &eigs[..3] {
            assert!(e.abs() < 1e-10, "rank-1 operator has extra eigenvalue {e}");
        }
        assert!((eigs[3] - 1.0).abs() < 1e-12);
        let pure = CoherenceSpectrum::pure(4).unwrap();
        let iv = response_interval(&pure, &op).unwrap();
        assert!(iv.lo.abs() < 1e-10 && (iv.hi - 1.0).abs() < 1e-10);
    }

    #[test]
    fn readout_rejects_bad_masks() {
        let mut rng = SeededRng::new(14, "badmask");
        let t = crate::linalg::gaussian_medium(6, 3, &mut rng).unwrap();
        assert!(TransportOperator::from_readout(&t, &[0.0; 6], "zero").is_err());
        assert!(TransportOperator::from_readout(&t, &[-1.0; 6], "neg").is_err());
        assert!(TransportOperator::from_readout(&t, &[1.0; 5], "short").is_err());
    }

    #[test]
    fn weighted_reconstruction_matches_trace_route() {
        let mut rng = SeededRng::new(15, "recon");
        let t = crate::linalg::gaussian_medium(12, 5, &mut rng).unwrap();
        let mask: Vec<f64> = (0..12).map(|_| rng.gen::<f64>()).collect();
        let op = TransportOperator::from_readout(&t, &mask, "weighted").unwrap();
        let lam = random_spectrum(5, &mut rng).unwrap();
        let v = haar_unitary(5, &mut rng).unwrap();
        let direct = weighted_reconstruction_response(&lam, &v, &t, &op).unwrap();
        let trace = orbit_response(&lam, &op, &v);
        assert!(
            (direct - trace).abs() <= 1e-10 * trace.abs().max(1.0),
            "direct {direct} vs trace {trace}"
        );

        // Pure spectrum reduces to the first basis field's readout.
        let pure = CoherenceSpectrum::pure(5).unwrap();
        let r = weighted_reconstruction_response(&pure, &v, &t, &op).unwrap();
        let field: CVector = v.column(0).into_owned();
        let scattered = &t * &field;
        let single: f64 = scattered
            .iter()
            .zip(mask.iter())
            .map(|(z, &w)| w * z.norm_sqr())
            .sum::<f64>()
            / op.scale;
        assert!((r - single).abs() < 1e-12 * single.max(1.0));

        // Uniform spectrum is basis-independent.
        let uniform = CoherenceSpectrum::uniform(5).unwrap();
        let v2 = haar_unitary(5, &mut rng).unwrap();
        let r1 = weighted_reconstruction_response(&uniform, &v, &t, &op).unwrap();
        let r2 = weighted_reconstruction_response(&uniform, &v2, &t, &op).unwrap();
        assert!((r1 - r2).abs() < 1e-10 * r1.abs().max(1.0));

        // Non-orthonormal basis rejected.
        let mut bad = v.clone();
        bad[(0, 0)] += Complex64::new(0.1, 0.0);
        assert!(weighted_reconstruction_response(&lam, &bad, &t, &op).is_err());
    }

    #[test]
    fn comparable_pairs_nest_for_random_operators() {
        let mut rng = SeededRng::new(16, "nest");
        for n in [3usize, 6] {
            for _ in 0..25 {
                let (less, more) = comparable_pair(n, 4, &mut rng).unwrap();
                let op = random_hermitian_operator(n, &mut rng);
                let il = response_interval(&less, &op).unwrap();
                let im = response_interval(&more, &op).unwrap();
                assert!(
                    matches!(
                        classify_intervals(il, im),
                        IntervalClass::FirstInsideSecond | IntervalClass::Equal
                    ),
                    "less {il:?} not inside more {im:?}"
                );
            }
        }
    }

    // Brute-force confirmation of nesting at small n: the Haar extremes
    // of the less coherent spectrum stay inside the closed-form interval
    // of the more coherent one.
    #[test]
    fn nesting_confirmed_by_brute_force_at_small_n() {
        let mut rng = SeededRng::new(17, "nest-brute");
        for _ in 0..10 {
            let (less, more) = comparable_pair(4, 3, &mut rng).unwrap();
            let op = random_hermitian_operator(4, &mut rng);
            let im = response_interval(&more, &op).unwrap();
            for r in sample_responses(&less, &op, 400, &mut rng).unwrap() {
                assert!(im.contains(r, 1e-9));
            }
        }
    }

    #[test]
    fn benchmark_pair_shows_strict_partial_overlap() {
        // Non-degenerate operator spectrum: a2 off the (a1+a3)/2
        // midpoint, so the endpoint shifts share a sign and the
        // intervals cross instead of coinciding.
        let op = diag_operator(&[0.1, 0.6, 0.9]);
        let a = spectrum(&[0.6, 0.2, 0.2]);
        let b = spectrum(&[0.5, 0.4, 0.1]);
        let ia = response_interval(&a, &op).unwrap();
        let ib = response_interval(&b, &op).unwrap();
        assert!((ia.lo - 0.36).abs() < 1e-12 && (ia.hi - 0.68).abs() < 1e-12);
        assert!((ib.lo - 0.38).abs() < 1e-12 && (ib.hi - 0.70).abs() < 1e-12);
        assert_eq!(classify_intervals(ia, ib), IntervalClass::PartialOverlap);
    }

    #[test]
    fn identical_spectra_give_identical_intervals() {
        let mut rng = SeededRng::new(18, "identical");
        let op = random_hermitian_operator(5, &mut rng);
        let lam = random_spectrum(5, &mut rng).unwrap();
        let verdicts =
            nesting_experiment(&[(lam.clone(), lam.clone())], std::slice::from_ref(&op)).unwrap();
        assert_eq!(verdicts[0].relation, MajorizationRelation::Equal);
        assert_eq!(verdicts[0].comparisons[0].class, IntervalClass::Equal);
        assert!(verdicts[0].nested_for_all);
    }

    #[test]
    fn declared_benchmark_pairs_are_incomparable() {
        for (a, b) in benchmark_incomparable_pairs(16).unwrap() {
            assert_eq!(
                majorization_compare(&a, &b).unwrap(),
                MajorizationRelation::Incomparable
            );
        }
    }

    #[test]
    fn binned_masks_partition_channels() {
        let masks = binned_masks(10, 4).unwrap();
        assert_eq!(masks.len(), 4);
        let mut total = [0.0; 10];
        for mask in &masks {
            for (t, w) in total.iter_mut().zip(mask) {
                *t += w;
            }
        }
        assert!(total.iter().all(|&t| (t - 1.0).abs() < 1e-15));
        assert!(binned_masks(4, 5).is_err());
    }
}
