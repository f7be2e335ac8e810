//! Optical bilinear pair features (Complex-B) and their baselines.
//!
//! Two token fields are coherently superposed with a stepped relative
//! phase, scattered and square-law detected. Four-phase demodulation of
//! `|u + e^{i phi} v + s|^2` isolates `v (.) conj(u + s)`; repeating
//! with the first arm dark gives the blank `v (.) conj(s)`, and the
//! difference is the channel-wise complex bilinear term
//!
//! ```text
//! B_m = conj(u_m) * v_m,    u = T E_a,  v = T E_b
//! ```
//!
//! which depends on the joint structure of the ordered pair: swapping
//! the inputs conjugates it, self-pairs are real and nonnegative.
//! Two baselines bound what it buys: concatenating the two single-token
//! demodulated responses (any linear score of which is additively
//! separable across the pair), and the intensity-only digital product
//! `|u|^2 (.) |v|^2`, which is symmetric under pair swap and noiselessly
//! equals `|B|^2`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::bench::{IntensityFrame, ScatteringBench, TAU};
use crate::error::{Error, Result};
use crate::linalg::{haar_unitary, CVector};
use crate::probe;
use crate::rng::SeededRng;
use crate::tm::demodulate_quad;

/// Token ids with unit-power field encodings plus the task attributes
/// the benchmarks label pairs with.
#[derive(Clone, Debug)]
pub struct TokenCodebook {
    fields: Vec<CVector>,
    /// XOR-task bit per token.
    pub bits: Option<Vec<u8>>,
    /// Semantic-task category per token.
    pub categories: Option<Vec<usize>>,
}

impl TokenCodebook {
    /// Haar-random unit-power encodings: the leading columns of one
    /// Haar unitary, fixed by seed (mutually orthogonal, hence
    /// pairwise well separated).
    fn haar_fields(tokens: usize, modes: usize, seed: u64) -> Result<Vec<CVector>> {
        if modes < tokens {
            return Err(Error::invalid(format!(
                "need at least {tokens} modes to encode {tokens} tokens, got {modes}"
            )));
        }
        let mut rng = SeededRng::new(seed, "codebook");
        let u = haar_unitary(modes, &mut rng)?;
        let fields: Vec<CVector> = (0..tokens).map(|k| u.column(k).into_owned()).collect();
        for (i, a) in fields.iter().enumerate() {
            for b in fields.iter().skip(i + 1) {
                if (a - b).norm() <= 1e-6 {
                    return Err(Error::invalid("token encodings are not distinct"));
                }
            }
        }
        Ok(fields)
    }

    /// Four tokens, two per bit value, for the XOR experiment.
    pub fn xor(modes: usize, seed: u64) -> Result<Self> {
        Ok(TokenCodebook {
            fields: Self::haar_fields(4, modes, seed)?,
            bits: Some(vec![0, 0, 1, 1]),
            categories: None,
        })
    }

    /// Eight tokens in two categories of four, for the semantic
    /// benchmark.
    pub fn semantic(modes: usize, seed: u64) -> Result<Self> {
        Ok(TokenCodebook {
            fields: Self::haar_fields(8, modes, seed)?,
            bits: None,
            categories: Some(vec![0, 0, 0, 0, 1, 1, 1, 1]),
        })
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn encode(&self, token: usize) -> Result<&CVector> {
        self.fields.get(token).ok_or(Error::UnknownToken(token))
    }

    /// All ordered pairs in row-major order.
    pub fn ordered_pairs(&self) -> Vec<(usize, usize)> {
        let k = self.len();
        (0..k)
            .flat_map(|a| (0..k).map(move |b| (a, b)))
            .collect()
    }
}

/// Per-channel complex bilinear term of one ordered pair.
#[derive(Clone, Debug)]
pub struct ComplexBFeature {
    pub values: CVector,
    pub pair: (usize, usize),
    pub shot: usize,
}

/// Frames consumed per ordered pair, per representation.
pub const FRAMES_PER_PAIR_COMPLEX_B: usize = 8;
pub const FRAMES_PER_PAIR_CONCATENATION: usize = 8;
pub const FRAMES_PER_PAIR_INTENSITY: usize = 5;

/// Measure the Complex-B feature of the ordered pair `(a, b)`: four
/// phase-stepped frames of `E_a + e^{i phi} E_b`, four blank frames
/// with the first arm dark, demodulate both and subtract.
pub fn measure_complex_b(
    bench: &mut ScatteringBench,
    codebook: &TokenCodebook,
    a: usize,
    b: usize,
) -> Result<ComplexBFeature> {
    let field_a = codebook.encode(a)?.clone();
    let field_b = codebook.encode(b)?.clone();
    let mut main_frames: Vec<IntensityFrame> = Vec::with_capacity(4);
    let mut blank_frames: Vec<IntensityFrame> = Vec::with_capacity(4);
    for k in 0..4 {
        let rot = Complex64::from_polar(1.0, k as f64 * TAU / 4.0);
        let superposed = &field_a + &field_b * rot;
        main_frames.push(bench.capture(&superposed, 0.0)?);
    }
    for k in 0..4 {
        let rot = Complex64::from_polar(1.0, k as f64 * TAU / 4.0);
        let alone = &field_b * rot;
        blank_frames.push(bench.capture(&alone, 0.0)?);
    }
    let main = demodulate_quad(&[
        main_frames[0].clone(),
        main_frames[1].clone(),
        main_frames[2].clone(),
        main_frames[3].clone(),
    ])?;
    let blank = demodulate_quad(&[
        blank_frames[0].clone(),
        blank_frames[1].clone(),
        blank_frames[2].clone(),
        blank_frames[3].clone(),
    ])?;
    Ok(ComplexBFeature {
        values: main - blank,
        pair: (a, b),
        shot: 0,
    })
}

/// Predicted feature of the swapped pair: conjugate channel-wise and
/// reverse the pair label. In the noiseless bench this equals
/// `measure_complex_b(bench, codebook, b, a)` since
/// `conj(v) (.) u = conj(conj(u) (.) v)`.
pub fn swap_feature(feature: &ComplexBFeature) -> ComplexBFeature {
    ComplexBFeature {
        values: feature.values.map(|z| z.conj()),
        pair: (feature.pair.1, feature.pair.0),
        shot: feature.shot,
    }
}

/// Concatenation baseline: each token's raw demodulated single-field
/// response (4 frames each, reference tag kept), concatenated as
/// `[Re z_a, Im z_a, Re z_b, Im z_b]`.
pub fn baseline_concatenation(
    bench: &mut ScatteringBench,
    codebook: &TokenCodebook,
    a: usize,
    b: usize,
) -> Result<Vec<f64>> {
    let za = demodulate_quad(&bench.capture_quad(codebook.encode(a)?)?)?;
    let zb = demodulate_quad(&bench.capture_quad(codebook.encode(b)?)?)?;
    let m = za.len();
    let mut out = Vec::with_capacity(4 * m);
    out.extend(za.iter().map(|z| z.re));
    out.extend(za.iter().map(|z| z.im));
    out.extend(zb.iter().map(|z| z.re));
    out.extend(zb.iter().map(|z| z.im));
    Ok(out)
}

/// Blank-subtracted single-token intensity: two opposite-phase frames
/// cancel the reference cross term, the blank removes `|s|^2`.
fn token_intensity(
    bench: &mut ScatteringBench,
    codebook: &TokenCodebook,
    token: usize,
    blank: &IntensityFrame,
) -> Result<Vec<f64>> {
    let field = codebook.encode(token)?.clone();
    let i0 = bench.capture(&field, 0.0)?;
    let i_pi = bench.capture(&field, TAU / 2.0)?;
    Ok((0..i0.len())
        .map(|m| (0.5 * (i0.0[m] + i_pi.0[m]) - blank.0[m]).max(0.0))
        .collect())
}

/// Intensity-only digital bilinear baseline: channel-wise product of
/// the two blank-subtracted token intensities (`|u|^2 (.) |v|^2`, the
/// modulus-square of Complex-B in the noiseless bench). Symmetric under
/// pair swap by construction.
pub fn baseline_intensity_bilinear(
    bench: &mut ScatteringBench,
    codebook: &TokenCodebook,
    a: usize,
    b: usize,
) -> Result<Vec<f64>> {
    let blank = bench.capture_blank()?;
    let ia = token_intensity(bench, codebook, a, &blank)?;
    let ib = token_intensity(bench, codebook, b, &blank)?;
    Ok(ia.iter().zip(ib.iter()).map(|(x, y)| x * y).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    ComplexB,
    Concatenation,
    IntensityBilinear,
}

impl Representation {
    pub const ALL: [Representation; 3] = [
        Representation::ComplexB,
        Representation::Concatenation,
        Representation::IntensityBilinear,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Representation::ComplexB => "complex-b",
            Representation::Concatenation => "concatenation",
            Representation::IntensityBilinear => "intensity-bilinear",
        }
    }

    pub fn frames_per_pair(&self) -> usize {
        match self {
            Representation::ComplexB => FRAMES_PER_PAIR_COMPLEX_B,
            Representation::Concatenation => FRAMES_PER_PAIR_CONCATENATION,
            Representation::IntensityBilinear => FRAMES_PER_PAIR_INTENSITY,
        }
    }
}

/// Classification tasks over ordered token pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairTask {
    PairIdentity,
    XorParity,
    SameCategory,
    CategoryPair,
    /// Which of (a,b) / (b,a) an off-diagonal pair is; self pairs are
    /// excluded from this task.
    OrderBit,
}

impl PairTask {
    pub fn label(&self) -> &'static str {
        match self {
            PairTask::PairIdentity => "pair-identity",
            PairTask::XorParity => "xor-parity",
            PairTask::SameCategory => "same-category",
            PairTask::CategoryPair => "category-pair",
            PairTask::OrderBit => "order-bit",
        }
    }

    pub fn n_classes(&self, codebook: &TokenCodebook) -> usize {
        match self {
            PairTask::PairIdentity => codebook.len() * codebook.len(),
            PairTask::XorParity | PairTask::SameCategory | PairTask::OrderBit => 2,
            PairTask::CategoryPair => 4,
        }
    }

    /// Label of one ordered pair; `None` excludes the pair from the task.
    pub fn label_of(&self, codebook: &TokenCodebook, pair: (usize, usize)) -> Result<Option<usize>> {
        let (a, b) = pair;
        Ok(match self {
            PairTask::PairIdentity => Some(a * codebook.len() + b),
            PairTask::XorParity => {
                let bits = codebook
                    .bits
                    .as_ref()
                    .ok_or_else(|| Error::invalid("codebook has no bit attributes"))?;
                Some(usize::from(bits[a] ^ bits[b]))
            }
            PairTask::SameCategory => {
                let cats = codebook
                    .categories
                    .as_ref()
                    .ok_or_else(|| Error::invalid("codebook has no categories"))?;
                Some(usize::from(cats[a] == cats[b]))
            }
            PairTask::CategoryPair => {
                let cats = codebook
                    .categories
                    .as_ref()
                    .ok_or_else(|| Error::invalid("codebook has no categories"))?;
                Some(cats[a] * 2 + cats[b])
            }
            PairTask::OrderBit => {
                if a == b {
                    None
                } else {
                    Some(usize::from(a > b))
                }
            }
        })
    }
}

/// All three representations measured for every ordered pair and shot,
/// with aligned row bookkeeping (row = pair-major, shot-minor).
#[derive(Clone, Debug)]
pub struct PairDataset {
    pub pairs: Vec<(usize, usize)>,
    pub shots: usize,
    pub row_pairs: Vec<(usize, usize)>,
    pub row_shots: Vec<usize>,
    pub complex_b: DMatrix<f64>,
    pub concatenation: DMatrix<f64>,
    pub intensity: DMatrix<f64>,
    /// Raw complex features per row, kept for artifact emission.
    pub complex_b_raw: Vec<CVector>,
}

impl PairDataset {
    pub fn features(&self, repr: Representation) -> &DMatrix<f64> {
        match repr {
            Representation::ComplexB => &self.complex_b,
            Representation::Concatenation => &self.concatenation,
            Representation::IntensityBilinear => &self.intensity,
        }
    }
}

/// Acquire the full ordered-pair dataset: `shots` balanced repeats per
/// pair, one representation at a time in a fixed order.
pub fn acquire_pair_dataset(
    bench: &mut ScatteringBench,
    codebook: &TokenCodebook,
    shots: usize,
) -> Result<PairDataset> {
    if shots == 0 {
        return Err(Error::invalid("need at least one shot per pair"));
    }
    let pairs = codebook.ordered_pairs();
    let m = bench.channels();
    let rows = pairs.len() * shots;

    let mut row_pairs = Vec::with_capacity(rows);
    let mut row_shots = Vec::with_capacity(rows);
    for &pair in &pairs {
        for shot in 0..shots {
            row_pairs.push(pair);
            row_shots.push(shot);
        }
    }

    let mut complex_rows = Vec::with_capacity(rows * 2 * m);
    let mut complex_raw = Vec::with_capacity(rows);
    for &(a, b) in &pairs {
        for shot in 0..shots {
            let mut feature = measure_complex_b(bench, codebook, a, b)?;
            feature.shot = shot;
            complex_rows.extend(feature.values.iter().map(|z| z.re));
            complex_rows.extend(feature.values.iter().map(|z| z.im));
            complex_raw.push(feature.values);
        }
    }

    let mut concat_rows = Vec::with_capacity(rows * 4 * m);
    for &(a, b) in &pairs {
        for _ in 0..shots {
            concat_rows.extend(baseline_concatenation(bench, codebook, a, b)?);
        }
    }

    let mut intensity_rows = Vec::with_capacity(rows * m);
    for &(a, b) in &pairs {
        for _ in 0..shots {
            intensity_rows.extend(baseline_intensity_bilinear(bench, codebook, a, b)?);
        }
    }

    Ok(PairDataset {
        pairs,
        shots,
        row_pairs,
        row_shots,
        complex_b: DMatrix::from_row_slice(rows, 2 * m, &complex_rows),
        concatenation: DMatrix::from_row_slice(rows, 4 * m, &concat_rows),
        intensity: DMatrix::from_row_slice(rows, m, &intensity_rows),
        complex_b_raw: complex_raw,
    })
}

/// Matched-probe accuracy of one representation on one task.
pub fn probe_accuracy(
    dataset: &PairDataset,
    codebook: &TokenCodebook,
    repr: Representation,
    task: PairTask,
    ridge: f64,
) -> Result<f64> {
    let features = dataset.features(repr);
    let mut keep_rows = Vec::new();
    let mut labels = Vec::new();
    for (r, &pair) in dataset.row_pairs.iter().enumerate() {
        if let Some(label) = task.label_of(codebook, pair)? {
            keep_rows.push(r);
            labels.push(label);
        }
    }
    let mut x = DMatrix::zeros(keep_rows.len(), features.ncols());
    let mut shots = Vec::with_capacity(keep_rows.len());
    for (i, &r) in keep_rows.iter().enumerate() {
        for c in 0..features.ncols() {
            x[(i, c)] = features[(r, c)];
        }
        shots.push(dataset.row_shots[r]);
    }
    probe::train_test_accuracy(&x, &labels, &shots, task.n_classes(codebook), ridge)
}

/// Exact additive-score ceiling for a binary pair table whose labels
/// depend only on token classes.
///
/// Any additive classifier `sign(g(a) + h(b) - theta)` marks, for some
/// ordering of the columns by `h`, a per-row prefix as class 1 (the
/// prefixes are nested automatically, so every prefix-length choice per
/// row is realizable). Enumerating the distinct column class sequences
/// and maximizing each row's prefix agreement is therefore exhaustive.
pub fn additive_ceiling(
    row_class_counts: &[usize],
    col_class_counts: &[usize],
    label: impl Fn(usize, usize) -> bool,
) -> f64 {
    let total_cols: usize = col_class_counts.iter().sum();
    let total_rows: usize = row_class_counts.iter().sum();
    let mut best = 0usize;
    let mut sequence = Vec::with_capacity(total_cols);
    enumerate_sequences(
        &mut col_class_counts.to_vec(),
        &mut sequence,
        total_cols,
        &mut |seq| {
            let mut agreement = 0usize;
            for (row_class, &count) in row_class_counts.iter().enumerate() {
                let mut best_row = 0usize;
                for prefix in 0..=total_cols {
                    let mut score = 0usize;
                    for (j, &col_class) in seq.iter().enumerate() {
                        let predicted_one = j < prefix;
                        if predicted_one == label(row_class, col_class) {
                            score += 1;
                        }
                    }
                    best_row = best_row.max(score);
                }
                agreement += best_row * count;
            }
            best = best.max(agreement);
        },
    );
    best as f64 / (total_rows * total_cols) as f64
}

fn enumerate_sequences(
    remaining: &mut Vec<usize>,
    sequence: &mut Vec<usize>,
    total: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    if sequence.len() == total {
        visit(sequence);
        return;
    }
    for class in 0..remaining.len() {
        if remaining[class] > 0 {
            remaining[class] -= 1;
            sequence.push(class);
            enumerate_sequences(remaining, sequence, total, visit);
            sequence.pop();
            remaining[class] += 1;
        }
    }
}

/// Upper bound on any classifier that sees swap-symmetric features:
/// both orders of an off-diagonal pair receive one prediction, so at
/// most one of two differing labels can be right.
pub fn symmetric_feature_ceiling(
    codebook: &TokenCodebook,
    task: PairTask,
) -> Result<f64> {
    let k = codebook.len();
    let mut attainable = 0usize;
    let mut total = 0usize;
    for a in 0..k {
        for b in a..k {
            let la = task.label_of(codebook, (a, b))?;
            let lb = task.label_of(codebook, (b, a))?;
            match (la, lb) {
                (Some(x), Some(y)) if a != b => {
                    total += 2;
                    attainable += if x == y { 2 } else { 1 };
                }
                (Some(_), _) if a == b => {
                    total += 1;
                    attainable += 1;
                }
                _ => {}
            }
        }
    }
    Ok(attainable as f64 / total as f64)
}

#[derive(Clone, Debug, Serialize)]
pub struct TaskAccuracy {
    pub task: &'static str,
    pub representation: &'static str,
    pub accuracy: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct XorReport {
    pub complex_b_xor: f64,
    pub concatenation_xor: f64,
    pub complex_b_pair_identity: f64,
    pub concatenation_pair_identity: f64,
    pub additive_ceiling_xor: f64,
    pub shots: usize,
}

/// Four-token XOR experiment: Complex-B versus concatenation on XOR
/// parity and on pair identity, under the matched probe.
pub fn xor_experiment(
    bench: &mut ScatteringBench,
    codebook: &TokenCodebook,
    shots: usize,
    ridge: f64,
) -> Result<(XorReport, PairDataset)> {
    if codebook.len() != 4 || codebook.bits.is_none() {
        return Err(Error::invalid("XOR experiment needs 4 tokens with bits"));
    }
    let dataset = acquire_pair_dataset(bench, codebook, shots)?;
    let acc = |repr, task| probe_accuracy(&dataset, codebook, repr, task, ridge);
    let report = XorReport {
        complex_b_xor: acc(Representation::ComplexB, PairTask::XorParity)?,
        concatenation_xor: acc(Representation::Concatenation, PairTask::XorParity)?,
        complex_b_pair_identity: acc(Representation::ComplexB, PairTask::PairIdentity)?,
        concatenation_pair_identity: acc(Representation::Concatenation, PairTask::PairIdentity)?,
        additive_ceiling_xor: additive_ceiling(&[2, 2], &[2, 2], |ra, cb| (ra ^ cb) == 1),
        shots,
    };
    Ok((report, dataset))
}

#[derive(Clone, Debug, Serialize)]
pub struct SemanticReport {
    /// Accuracy per (task, representation) for the three headline
    /// probes: pair identity, same category, category pair.
    pub matrix: Vec<TaskAccuracy>,
    /// Order-discrimination bit of pair identity, per representation.
    pub order_bit: Vec<TaskAccuracy>,
    pub additive_ceiling_same_category: f64,
    pub symmetric_ceiling_category_pair: f64,
    pub symmetric_ceiling_order_bit: f64,
    pub shots: usize,
}

impl SemanticReport {
    pub fn accuracy(&self, task: PairTask, repr: Representation) -> Option<f64> {
        self.matrix
            .iter()
            .chain(self.order_bit.iter())
            .find(|t| t.task == task.label() && t.representation == repr.label())
            .map(|t| t.accuracy)
    }
}

/// Eight-token semantic benchmark: 3 probes x 3 representations, plus
/// the order-discrimination diagnostic and the structural ceilings.
pub fn semantic_benchmark(
    bench: &mut ScatteringBench,
    codebook: &TokenCodebook,
    shots: usize,
    ridge: f64,
) -> Result<(SemanticReport, PairDataset)> {
    if codebook.len() != 8 || codebook.categories.is_none() {
        return Err(Error::invalid(
            "semantic benchmark needs 8 tokens with categories",
        ));
    }
    let dataset = acquire_pair_dataset(bench, codebook, shots)?;
    let mut matrix = Vec::new();
    for task in [
        PairTask::PairIdentity,
        PairTask::SameCategory,
        PairTask::CategoryPair,
    ] {
        for repr in Representation::ALL {
            matrix.push(TaskAccuracy {
                task: task.label(),
                representation: repr.label(),
                accuracy: probe_accuracy(&dataset, codebook, repr, task, ridge)?,
            });
        }
    }
    let mut order_bit = Vec::new();
    for repr in Representation::ALL {
        order_bit.push(TaskAccuracy {
            task: PairTask::OrderBit.label(),
            representation: repr.label(),
            accuracy: probe_accuracy(&dataset, codebook, repr, PairTask::OrderBit, ridge)?,
        });
    }
    let report = SemanticReport {
        matrix,
        order_bit,
        additive_ceiling_same_category: additive_ceiling(&[4, 4], &[4, 4], |ra, cb| ra == cb),
        symmetric_ceiling_category_pair: symmetric_feature_ceiling(
            codebook,
            PairTask::CategoryPair,
        )?,
        symmetric_ceiling_order_bit: symmetric_feature_ceiling(codebook, PairTask::OrderBit)?,
        shots,
    };
    Ok((report, dataset))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::CameraModel;
    use crate::bench::{ReferenceGeometry, SlmConfig};

    fn test_bench(modes: usize, channels: usize, seed: u64) -> ScatteringBench {
        ScatteringBench::noiseless(modes, channels, seed).unwrap()
    }

    #[test]
    fn complex_b_matches_field_product() {
        let mut bench = test_bench(16, 32, 50);
        let codebook = TokenCodebook::xor(16, 50).unwrap();
        for (a, b) in [(0, 1), (2, 3), (1, 2)] {
            let feature = measure_complex_b(&mut bench, &codebook, a, b).unwrap();
            let u = bench.propagate(codebook.encode(a).unwrap()).unwrap();
            let v = bench.propagate(codebook.encode(b).unwrap()).unwrap();
            for m in 0..32 {
                let expect = u[m].conj() * v[m];
                assert!(
                    (feature.values[m] - expect).norm() <= 1e-12 * expect.norm().max(1e-3),
                    "channel {m}: {} vs {}",
                    feature.values[m],
                    expect
                );
            }
        }
    }

    #[test]
    fn self_pair_is_real_nonnegative() {
        let mut bench = test_bench(16, 32, 51);
        let codebook = TokenCodebook::xor(16, 51).unwrap();
        let feature = measure_complex_b(&mut bench, &codebook, 2, 2).unwrap();
        for z in feature.values.iter() {
            assert!(z.im.abs() < 1e-14);
            assert!(z.re >= -1e-14);
        }
    }

    #[test]
    fn swap_conjugates_the_feature() {
        let mut bench = test_bench(16, 32, 52);
        let codebook = TokenCodebook::xor(16, 52).unwrap();
        let ab = measure_complex_b(&mut bench, &codebook, 0, 3).unwrap();
        let ba = measure_complex_b(&mut bench, &codebook, 3, 0).unwrap();
        let predicted = swap_feature(&ab);
        assert_eq!(predicted.pair, (3, 0));
        for m in 0..32 {
            let expect = predicted.values[m];
            assert!((ba.values[m] - expect).norm() <= 1e-12 * expect.norm().max(1e-3));
            assert!((ba.values[m].norm() - ab.values[m].norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn swap_conjugation_within_shot_noise() {
        let mut bench = ScatteringBench::new(
            SlmConfig::ideal(16),
            ReferenceGeometry::uniform(0.5).unwrap(),
            CameraModel::poisson(1e6).unwrap(),
            32,
            4,
            53,
        )
        .unwrap();
        let codebook = TokenCodebook::xor(16, 53).unwrap();
        // Monte Carlo spread of repeated measurements sets the scale
        // the conjugation identity must hold at.
        let trials = 60;
        let mut diffs = Vec::with_capacity(trials);
        for _ in 0..trials {
            let ab = measure_complex_b(&mut bench, &codebook, 0, 1).unwrap();
            let ba = measure_complex_b(&mut bench, &codebook, 1, 0).unwrap();
            let diff: f64 = (0..32)
                .map(|m| (ba.values[m] - ab.values[m].conj()).norm_sqr())
                .sum::<f64>()
                .sqrt();
            diffs.push(diff);
        }
        let mean = diffs.iter().sum::<f64>() / trials as f64;
        let var =
            diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (trials - 1) as f64;
        let sigma = var.sqrt();
        for d in &diffs {
            assert!(
                (*d - mean).abs() <= 3.5 * sigma + 1e-12,
                "swap residual {d} leaves the noise band (mean {mean}, sigma {sigma})"
            );
        }
        // The residual is pure shot noise: it shrinks with the budget.
        let mut quiet_bench = ScatteringBench::new(
            SlmConfig::ideal(16),
            ReferenceGeometry::uniform(0.5).unwrap(),
            CameraModel::poisson(1e10).unwrap(),
            32,
            4,
            53,
        )
        .unwrap();
        let ab = measure_complex_b(&mut quiet_bench, &codebook, 0, 1).unwrap();
        let ba = measure_complex_b(&mut quiet_bench, &codebook, 1, 0).unwrap();
        let quiet_diff: f64 = (0..32)
            .map(|m| (ba.values[m] - ab.values[m].conj()).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(quiet_diff < mean);
    }

    #[test]
    fn zero_encoding_gives_zero_feature() {
        let mut bench = test_bench(16, 32, 54);
        let mut codebook = TokenCodebook::xor(16, 54).unwrap();
        codebook.fields[0] = CVector::zeros(16);
        let feature = measure_complex_b(&mut bench, &codebook, 0, 1).unwrap();
        for z in feature.values.iter() {
            assert!(z.norm() < 1e-14);
        }
    }

    #[test]
    fn unknown_token_is_rejected() {
        let mut bench = test_bench(16, 32, 55);
        let codebook = TokenCodebook::xor(16, 55).unwrap();
        assert!(matches!(
            measure_complex_b(&mut bench, &codebook, 0, 9),
            Err(Error::UnknownToken(9))
        ));
    }

    #[test]
    fn concatenation_identifies_pairs_and_duplicates_self_halves() {
        let mut bench = test_bench(16, 32, 56);
        let codebook = TokenCodebook::xor(16, 56).unwrap();
        let mut features = Vec::new();
        for (a, b) in codebook.ordered_pairs() {
            features.push((
                (a, b),
                baseline_concatenation(&mut bench, &codebook, a, b).unwrap(),
            ));
        }
        // Injectivity over the codebook.
        for (i, (pa, fa)) in features.iter().enumerate() {
            for (pb, fb) in features.iter().skip(i + 1) {
                let dist: f64 = fa
                    .iter()
                    .zip(fb.iter())
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                assert!(dist > 1e-8, "pairs {pa:?} and {pb:?} collide");
            }
        }
        // Self pair = duplicated halves.
        let own = baseline_concatenation(&mut bench, &codebook, 1, 1).unwrap();
        let half = own.len() / 2;
        assert_eq!(&own[..half], &own[half..]);
    }

    #[test]
    fn intensity_baseline_is_symmetric_and_squares_complex_b() {
        let mut bench = test_bench(16, 32, 57);
        let codebook = TokenCodebook::xor(16, 57).unwrap();
        let ab = baseline_intensity_bilinear(&mut bench, &codebook, 0, 2).unwrap();
        let ba = baseline_intensity_bilinear(&mut bench, &codebook, 2, 0).unwrap();
        assert_eq!(ab, ba);
        let b = measure_complex_b(&mut bench, &codebook, 0, 2).unwrap();
        for m in 0..32 {
            let expect = b.values[m].norm_sqr();
            assert!(
                (ab[m] - expect).abs() <= 1e-10 * expect.max(1e-6),
                "channel {m}: {} vs {}",
                ab[m],
                expect
            );
        }
        // Self pair is the fourth power of the field magnitude.
        let aa = baseline_intensity_bilinear(&mut bench, &codebook, 1, 1).unwrap();
        let u = bench.propagate(codebook.encode(1).unwrap()).unwrap();
        for m in 0..32 {
            let expect = u[m].norm_sqr() * u[m].norm_sqr();
            assert!((aa[m] - expect).abs() <= 1e-10 * expect.max(1e-6));
        }
    }

    #[test]
    fn additive_ceiling_known_tables() {
        // XOR on 2+2 tokens: 12/16.
        let xor = additive_ceiling(&[2, 2], &[2, 2], |a, b| (a ^ b) == 1);
        assert!((xor - 0.75).abs() < 1e-12);
        // Same-category XNOR on 4+4 tokens: 48/64.
        let xnor = additive_ceiling(&[4, 4], &[4, 4], |a, b| a == b);
        assert!((xnor - 0.75).abs() < 1e-12);
        // A genuinely additive table is fully attainable.
        let additive = additive_ceiling(&[2, 2], &[2, 2], |a, _| a == 1);
        assert!((additive - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_ceilings_match_structure() {
        let codebook = TokenCodebook::semantic(8, 58).unwrap();
        let cat_pair = symmetric_feature_ceiling(&codebook, PairTask::CategoryPair).unwrap();
        assert!((cat_pair - 0.75).abs() < 1e-12);
        let order = symmetric_feature_ceiling(&codebook, PairTask::OrderBit).unwrap();
        assert!((order - 0.5).abs() < 1e-12);
    }

    #[test]
    fn concatenation_probe_scores_are_additively_separable() {
        let mut bench = test_bench(16, 32, 59);
        let codebook = TokenCodebook::xor(16, 59).unwrap();
        let dataset = acquire_pair_dataset(&mut bench, &codebook, 2).unwrap();
        let features = dataset.features(Representation::Concatenation);
        let mut labels = Vec::new();
        for &pair in &dataset.row_pairs {
            labels.push(
                PairTask::XorParity
                    .label_of(&codebook, pair)
                    .unwrap()
                    .unwrap(),
            );
        }
        let probe = probe::train_probe(features, &labels, 2, probe::DEFAULT_RIDGE).unwrap();
        // score(a,b) + score(a',b') = score(a,b') + score(a',b) for the
        // class-0 decision value: the rectangle identity of additive scores.
        let row_of = |a: usize, b: usize| -> Vec<f64> {
            let idx = dataset
                .row_pairs
                .iter()
                .position(|&p| p == (a, b))
                .unwrap();
            features.row(idx).iter().cloned().collect()
        };
        for (a, a2, b, b2) in [(0usize, 1usize, 2usize, 3usize), (1, 3, 0, 2)] {
            let s = |x: usize, y: usize| probe.decision_values(&row_of(x, y))[0];
            let rect = s(a, b) + s(a2, b2) - s(a, b2) - s(a2, b);
            assert!(rect.abs() < 1e-9, "rectangle identity violated: {rect}");
        }
    }

    #[test]
    fn xor_experiment_noiseless_pattern() {
        let mut bench = test_bench(32, 64, 60);
        let codebook = TokenCodebook::xor(32, 60).unwrap();
        let (report, _) = xor_experiment(&mut bench, &codebook, 4, probe::DEFAULT_RIDGE).unwrap();
        assert_eq!(report.complex_b_xor, 1.0);
        assert!(report.concatenation_xor <= report.additive_ceiling_xor + 1e-12);
        assert_eq!(report.complex_b_pair_identity, 1.0);
        assert_eq!(report.concatenation_pair_identity, 1.0);
        assert!((report.additive_ceiling_xor - 0.75).abs() < 1e-12);
    }
}
