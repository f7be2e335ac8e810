//! Complex linear-algebra and sampling primitives shared by every
//! protocol: Haar-random unitaries, Sylvester-Hadamard bases, Gaussian
//! scattering media and a plain-text matrix fixture format.
//!
//! Complex amplitudes are `Complex<f64>` throughout; the tolerances
//! quoted on the protocol layers assume double precision.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::SeededRng;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Conjugate transpose.
pub fn adjoint(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

/// Largest entry-wise deviation of `U†U` from the identity.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    let n = u.ncols();
    let gram = u.adjoint() * u;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            worst = worst.max((gram[(i, j)] - target).norm());
        }
    }
    worst
}

/// Sample a Haar-distributed unitary via QR of a Ginibre matrix.
///
/// The R diagonal is phase-corrected (U = Q · diag(rᵢᵢ/|rᵢᵢ|)), which
/// removes the phase ambiguity of the factorization and is what makes
/// the output Haar rather than merely unitary.
pub fn haar_unitary(n: usize, rng: &mut SeededRng) -> Result<CMatrix> {
    if n == 0 {
        return Err(Error::invalid("haar_unitary needs n >= 1"));
    }
    let g = ginibre(n, n, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    Ok(q)
}

/// Standard complex Gaussian matrix: entries with unit total variance
/// (1/2 per quadrature).
fn ginibre(rows: usize, cols: usize, rng: &mut SeededRng) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    })
}

/// Sylvester-Hadamard matrix of order `n` (a power of two).
///
/// Entries are exactly ±1, rows mutually orthogonal in integer
/// arithmetic, HᵀH = n·I.
pub fn hadamard_matrix(n: usize) -> Result<CMatrix> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::invalid(format!(
            "hadamard basis requires a power-of-two dimension, got {n}"
        )));
    }
    let mut h = vec![vec![1i64]];
    let mut size = 1;
    while size < n {
        let mut next = vec![vec![0i64; 2 * size]; 2 * size];
        for i in 0..size {
            for j in 0..size {
                next[i][j] = h[i][j];
                next[i][j + size] = h[i][j];
                next[i + size][j] = h[i][j];
                next[i + size][j + size] = -h[i][j];
            }
        }
        h = next;
        size *= 2;
    }
    Ok(CMatrix::from_fn(n, n, |i, j| {
        Complex64::new(h[i][j] as f64, 0.0)
    }))
}

/// Integer-exact Gram matrix of a ±1 matrix, for orthogonality checks.
pub fn hadamard_gram(h: &CMatrix) -> Vec<Vec<i64>> {
    let n = h.ncols();
    let as_int = |z: Complex64| -> i64 { if z.re > 0.0 { 1 } else { -1 } };
    let mut gram = vec![vec![0i64; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0i64;
            for k in 0..h.nrows() {
                acc += as_int(h[(k, i)]) * as_int(h[(k, j)]);
            }
            gram[i][j] = acc;
        }
    }
    gram
}

/// Random scattering medium: i.i.d. circular complex Gaussian entries
/// with variance 1/n, n the number of input modes. Full-aperture inputs
/// (power ~ n) then produce camera intensities of order one regardless
/// of the mode count.
pub fn gaussian_medium(channels: usize, modes: usize, rng: &mut SeededRng) -> Result<CMatrix> {
    if channels == 0 || modes == 0 {
        return Err(Error::invalid("gaussian_medium needs channels, modes >= 1"));
    }
    let sigma = (1.0 / modes as f64).sqrt();
    Ok(ginibre(channels, modes, rng).map(|z| z * sigma))
}

/// Write a matrix in the documented fixture form: a `# rows= cols=`
/// header line, then one CSV line per matrix row with real and
/// imaginary parts interleaved (re,im,re,im,...). Values use Rust's
/// shortest round-trip decimal form.
pub fn write_matrix_csv<W: Write>(mut w: W, m: &CMatrix) -> Result<()> {
    writeln!(w, "# rows={} cols={} layout=row-major re,im", m.nrows(), m.ncols())?;
    for i in 0..m.nrows() {
        let mut line = String::new();
        for j in 0..m.ncols() {
            if j > 0 {
                line.push(',');
            }
            let z = m[(i, j)];
            line.push_str(&format!("{},{}", z.re, z.im));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn save_matrix_csv(path: &Path, m: &CMatrix) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_matrix_csv(std::io::BufWriter::new(file), m)
}

pub fn read_matrix_csv<R: std::io::Read>(r: R, origin: &str) -> Result<CMatrix> {
    let malformed = |reason: &str| Error::MalformedFixture {
        path: origin.to_owned(),
        reason: reason.to_owned(),
    };
    let reader = BufReader::new(r);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| malformed("empty file"))?
        .map_err(Error::Io)?;
    let (rows, cols) = parse_matrix_header(&header).ok_or_else(|| malformed("bad header"))?;
    let mut entries = Vec::with_capacity(rows * cols);
    for line in lines {
        let line = line.map_err(Error::Io)?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 * cols {
            return Err(malformed("wrong field count"));
        }
        for pair in fields.chunks_exact(2) {
            let re: f64 = pair[0].trim().parse().map_err(|_| malformed("bad float"))?;
            let im: f64 = pair[1].trim().parse().map_err(|_| malformed("bad float"))?;
            entries.push(Complex64::new(re, im));
        }
    }
    if entries.len() != rows * cols {
        return Err(malformed("row count does not match header"));
    }
    Ok(CMatrix::from_row_slice(rows, cols, &entries))
}

pub fn load_matrix_csv(path: &Path) -> Result<CMatrix> {
    let file = std::fs::File::open(path)?;
    read_matrix_csv(file, &path.display().to_string())
}

fn parse_matrix_header(header: &str) -> Option<(usize, usize)> {
    let mut rows = None;
    let mut cols = None;
    for token in header.trim_start_matches('#').split_whitespace() {
        if let Some(v) = token.strip_prefix("rows=") {
            rows = v.parse().ok();
        } else if let Some(v) = token.strip_prefix("cols=") {
            cols = v.parse().ok();
        }
    }
    Some((rows?, cols?))
}

/// All entries finite (guards fixtures and user-supplied fields).
pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}
