//! Problem instances, benchmark generators and the `ROTB` binary format.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Tolerance on `|sum(a) - 1|` and `|sum(b) - 1|`.
pub const MARGINAL_SUM_TOL: f64 = 1e-12;

/// An entropic-regularized transport problem: cost `M`, marginals `a`, `b`
/// and regularization strength `eta`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    cost: Matrix,
    a: Vec<f64>,
    b: Vec<f64>,
    eta: f64,
}

impl ProblemInstance {
    /// Validates and builds an instance.
    ///
    /// Requires matching shapes, finite costs, strictly positive marginals
    /// that each sum to one within [`MARGINAL_SUM_TOL`], and `eta > 0`.
    pub fn new(cost: Matrix, a: Vec<f64>, b: Vec<f64>, eta: f64) -> Result<Self> {
        if cost.rows() != a.len() || cost.cols() != b.len() {
            return Err(Error::Validation(format!(
                "cost is {}x{} but marginals have lengths {} and {}",
                cost.rows(),
                cost.cols(),
                a.len(),
                b.len()
            )));
        }
        if a.is_empty() || b.is_empty() {
            return Err(Error::Validation("empty marginal".into()));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::Validation(format!(
                "eta must be positive, got {eta}"
            )));
        }
        check_marginal("a", &a)?;
        check_marginal("b", &b)?;
        if cost.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(
                "cost matrix has non-finite entries".into(),
            ));
        }
        Ok(Self { cost, a, b, eta })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.a.len()
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.b.len()
    }

    /// Length of the free dual vector, `n + m - 1`.
    #[inline]
    pub fn dim(&self) -> usize {
        self.n() + self.m() - 1
    }

    #[inline]
    pub fn cost(&self) -> &Matrix {
        &self.cost
    }

    #[inline]
    pub fn a(&self) -> &[f64] {
        &self.a
    }

    #[inline]
    pub fn b(&self) -> &[f64] {
        &self.b
    }

    #[inline]
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Same transport problem under a different regularization strength.
    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::Validation(format!(
                "eta must be positive, got {eta}"
            )));
        }
        self.eta = eta;
        Ok(self)
    }
}

fn check_marginal(name: &str, v: &[f64]) -> Result<()> {
    if let Some(i) = v.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::Validation(format!(
            "{name}[{i}] = {} is not strictly positive",
            v[i]
        )));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > MARGINAL_SUM_TOL {
        return Err(Error::Validation(format!("{name} sums to {s}, not 1")));
    }
    Ok(())
}

/// Divides a cost matrix by its largest entry so the result peaks at exactly 1.
pub fn normalize_cost(cost: &Matrix) -> Result<Matrix> {
    let max = cost.max();
    if !(max > 0.0) || !max.is_finite() {
        return Err(Error::DegenerateCost);
    }
    let mut out = cost.clone();
    out.as_mut_slice().iter_mut().for_each(|v| *v /= max);
    Ok(out)
}

fn uniform(len: usize) -> Vec<f64> {
    vec![1.0 / len as f64; len]
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Which target distribution Synthetic I draws from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Synth1Variant {
    /// Source and target coordinates both `N(0, 1)`.
    Iid,
    /// Source `N(0, 1)`, target `N(1, 0.25)` (variance 0.25).
    Diff,
}

/// Gaussian point clouds with squared Euclidean cost and uniform weights.
///
/// Points are drawn with a ChaCha8 generator seeded from `seed`, source
/// points first, so the output is bit-identical across platforms.
pub fn gen_synthetic1(
    n: usize,
    m: usize,
    variant: Synth1Variant,
    d: usize,
    seed: u64,
    eta: f64,
) -> Result<ProblemInstance> {
    check_sizes(n, m)?;
    if d == 0 {
        return Err(Error::Config("point dimension d must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |count: usize, shift: f64, sd: f64| -> Vec<f64> {
        (0..count * d)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                shift + sd * z
            })
            .collect()
    };
    let src = draw(n, 0.0, 1.0);
    let tgt = match variant {
        Synth1Variant::Iid => draw(m, 0.0, 1.0),
        Synth1Variant::Diff => draw(m, 1.0, 0.5),
    };
    let cost = Matrix::from_fn(n, m, |i, j| {
        let p = &src[i * d..(i + 1) * d];
        let q = &tgt[j * d..(j + 1) * d];
        p.iter().zip(q).map(|(x, y)| (x - y) * (x - y)).sum()
    });
    ProblemInstance::new(normalize_cost(&cost)?, uniform(n), uniform(m), eta)
}

fn gaussian_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let z = x - mean;
    (-(z * z) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

fn grid(len: usize, hi: f64) -> Vec<f64> {
    (0..len).map(|i| hi * i as f64 / (len - 1) as f64).collect()
}

/// Exponential source to a two-component Gaussian mixture target on `[0, 5]`.
pub fn gen_synthetic2(n: usize, m: usize, eta: f64) -> Result<ProblemInstance> {
    check_sizes(n, m)?;
    let xs = grid(n, 5.0);
    let ys = grid(m, 5.0);
    let a = normalized(xs.iter().map(|x| (-x).exp()).collect());
    let b = normalized(
        ys.iter()
            .map(|&y| 0.2 * gaussian_pdf(y, 1.0, 0.04) + 0.8 * gaussian_pdf(y, 3.0, 0.25))
            .collect(),
    );
    let cost = Matrix::from_fn(n, m, |i, j| (xs[i] - ys[j]) * (xs[i] - ys[j]));
    ProblemInstance::new(normalize_cost(&cost)?, a, b, eta)
}

fn check_sizes(n: usize, m: usize) -> Result<()> {
    if n < 2 || m < 2 {
        return Err(Error::Config(format!(
            "problem sizes must be at least 2, got n={n}, m={m}"
        )));
    }
    Ok(())
}

/// Problem family selector used by the CLI and the benchmark keyfile.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeneratorKind {
    Synth1Iid,
    Synth1Diff,
    Synth2,
    File,
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "synth1-iid" => Ok(Self::Synth1Iid),
            "synth1-diff" => Ok(Self::Synth1Diff),
            "synth2" => Ok(Self::Synth2),
            "file" => Ok(Self::File),
            other => Err(Error::Parse(format!("unknown problem kind {other:?}"))),
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Synth1Iid => "synth1-iid",
            Self::Synth1Diff => "synth1-diff",
            Self::Synth2 => "synth2",
            Self::File => "file",
        })
    }
}

/// Everything needed to reproduce a problem instance.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub n: usize,
    pub m: usize,
    /// Point dimension for Synthetic I.
    pub d: usize,
    pub seed: u64,
    /// Source file when `kind` is [`GeneratorKind::File`].
    pub path: Option<PathBuf>,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            kind: GeneratorKind::Synth2,
            n: 64,
            m: 64,
            d: 2,
            seed: 0,
            path: None,
        }
    }
}

impl GeneratorSpec {
    /// Builds the instance. For file-backed specs the stored `eta` is
    /// replaced by `eta` when one is given.
    pub fn generate(&self, eta: Option<f64>) -> Result<ProblemInstance> {
        let eta_or_default = eta.unwrap_or(0.01);
        match self.kind {
            GeneratorKind::Synth1Iid => gen_synthetic1(
                self.n,
                self.m,
                Synth1Variant::Iid,
                self.d,
                self.seed,
                eta_or_default,
            ),
            GeneratorKind::Synth1Diff => gen_synthetic1(
                self.n,
                self.m,
                Synth1Variant::Diff,
                self.d,
                self.seed,
                eta_or_default,
            ),
            GeneratorKind::Synth2 => gen_synthetic2(self.n, self.m, eta_or_default),
            GeneratorKind::File => {
                let path = self
                    .path
                    .as_ref()
                    .ok_or_else(|| Error::Config("file problem needs a path".into()))?;
                let p = load_problem(path)?;
                match eta {
                    Some(e) => p.with_eta(e),
                    None => Ok(p),
                }
            }
        }
    }

    /// Short human-readable descriptor, e.g. `synth2-64x64`.
    pub fn describe(&self) -> String {
        match self.kind {
            GeneratorKind::File => format!(
                "file:{}",
                self.path.as_deref().unwrap_or(Path::new("?")).display()
            ),
            GeneratorKind::Synth2 => format!("{}-{}x{}", self.kind, self.n, self.m),
            _ => format!(
                "{}-{}x{}-d{}-s{}",
                self.kind, self.n, self.m, self.d, self.seed
            ),
        }
    }
}

const MAGIC: &[u8; 4] = b"ROTB";
const VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 8 + 8 + 8;

/// Serializes an instance into the `ROTB` v1 layout.
pub fn encode_problem(p: &ProblemInstance) -> Vec<u8> {
    let (n, m) = (p.n(), p.m());
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * (n + m + n * m));
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(m as u64).to_le_bytes());
    out.extend_from_slice(&p.eta.to_le_bytes());
    for v in p.a.iter().chain(&p.b).chain(p.cost.as_slice()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Parses the `ROTB` v1 layout and validates the instance.
pub fn decode_problem(bytes: &[u8]) -> Result<ProblemInstance> {
    if bytes.len() < 5 {
        return Err(Error::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format(format!("bad magic {:?}", &bytes[..4])));
    }
    if bytes[4] != VERSION {
        return Err(Error::Format(format!("unsupported version {}", bytes[4])));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let u64_at = |off: usize| u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
    let n = usize::try_from(u64_at(5)).map_err(|_| Error::Format("n overflows".into()))?;
    let m = usize::try_from(u64_at(13)).map_err(|_| Error::Format("m overflows".into()))?;
    let eta = f64::from_bits(u64_at(21));
    let count = n
        .checked_mul(m)
        .and_then(|nm| nm.checked_add(n))
        .and_then(|c| c.checked_add(m))
        .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
    let expected = count
        .checked_mul(8)
        .and_then(|c| c.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::Format(format!(
            "{} trailing bytes after payload",
            bytes.len() - expected
        )));
    }
    let mut values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let a: Vec<f64> = values.by_ref().take(n).collect();
    let b: Vec<f64> = values.by_ref().take(m).collect();
    let cost: Vec<f64> = values.collect();
    ProblemInstance::new(Matrix::from_vec(n, m, cost), a, b, eta)
}

pub fn save_problem(p: &ProblemInstance, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_problem(p)).map_err(|e| Error::io(path, e))
}

pub fn load_problem(path: impl AsRef<Path>) -> Result<ProblemInstance> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_problem(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_generator_invariants(p: &ProblemInstance) {
        assert!(p.a().iter().all(|&v| v > 0.0));
        assert!(p.b().iter().all(|&v| v > 0.0));
        assert!((p.a().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        assert!((p.b().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        assert!(p.cost().as_slice().iter().all(|&v| v >= 0.0));
        assert_eq!(p.cost().max(), 1.0);
    }

    #[test]
    fn normalize_examples() {
        let m = Matrix::from_rows(&[[2.0, 4.0], [1.0, 3.0]]);
        let n = normalize_cost(&m).unwrap();
        assert_eq!(n.as_slice(), &[0.5, 1.0, 0.25, 0.75]);

        let c = Matrix::filled(2, 2, 0.37);
        assert!(normalize_cost(&c)
            .unwrap()
            .as_slice()
            .iter()
            .all(|&v| v == 1.0));

        let z = Matrix::zeros(2, 2);
        assert!(matches!(normalize_cost(&z), Err(Error::DegenerateCost)));
        let neg = Matrix::filled(2, 2, -1.0);
        assert!(matches!(normalize_cost(&neg), Err(Error::DegenerateCost)));
    }

    #[test]
    fn synthetic1_small() {
        let p = gen_synthetic1(4, 3, Synth1Variant::Iid, 2, 7, 0.1).unwrap();
        assert_eq!(p.a(), &[0.25; 4]);
        assert_eq!(p.b(), &[1.0 / 3.0; 3]);
        assert_generator_invariants(&p);
        let q = gen_synthetic1(4, 3, Synth1Variant::Iid, 2, 7, 0.1).unwrap();
        assert_eq!(encode_problem(&p), encode_problem(&q));
        let r = gen_synthetic1(4, 3, Synth1Variant::Iid, 2, 8, 0.1).unwrap();
        assert_ne!(p.cost(), r.cost());
    }

    #[test]
    fn synthetic1_diff_shifts_target() {
        // Large d makes the mean shift dominate: average cost against the
        // shifted cloud exceeds the iid one before normalization.
        let iid = gen_synthetic1(30, 30, Synth1Variant::Iid, 3, 1, 0.1).unwrap();
        let diff = gen_synthetic1(30, 30, Synth1Variant::Diff, 3, 1, 0.1).unwrap();
        assert_generator_invariants(&iid);
        assert_generator_invariants(&diff);
        assert_ne!(iid.cost(), diff.cost());
    }

    #[test]
    fn synthetic1_large_instance() {
        let p = gen_synthetic1(1600, 1200, Synth1Variant::Iid, 2, 0, 0.001).unwrap();
        assert_eq!((p.n(), p.m()), (1600, 1200));
        assert_generator_invariants(&p);
    }

    #[test]
    fn synthetic2_shape() {
        let p = gen_synthetic2(41, 51, 0.01).unwrap();
        assert_generator_invariants(&p);
        assert!(p.a().windows(2).all(|w| w[1] < w[0]));
        // grid spacing 0.1: y = 1.0 at j = 10, y = 3.0 at j = 30
        let b = p.b();
        let is_local_max = |j: usize| b[j] > b[j - 1] && b[j] > b[j + 1];
        assert!(is_local_max(10));
        assert!(is_local_max(30));
        let maxima: Vec<usize> = (1..b.len() - 1).filter(|&j| is_local_max(j)).collect();
        assert_eq!(maxima, vec![10, 30]);
        // both grids start at 0
        assert_eq!(p.cost()[(0, 0)], 0.0);
        assert_eq!(p.cost()[(40, 50)], 0.0);
    }

    #[test]
    fn rejects_small_sizes() {
        assert!(gen_synthetic2(1, 5, 0.1).is_err());
        assert!(gen_synthetic1(5, 1, Synth1Variant::Iid, 2, 0, 0.1).is_err());
        assert!(gen_synthetic1(5, 5, Synth1Variant::Iid, 0, 0, 0.1).is_err());
    }

    #[test]
    fn rotb_round_trip_and_layout() {
        let p = gen_synthetic2(3, 2, 0.25).unwrap();
        let bytes = encode_problem(&p);
        assert_eq!(&bytes[..5], b"ROTB\x01");
        assert_eq!(&bytes[5..13], &3u64.to_le_bytes());
        assert_eq!(&bytes[13..21], &2u64.to_le_bytes());
        assert_eq!(&bytes[21..29], &0.25f64.to_le_bytes());
        assert_eq!(bytes.len(), 29 + 8 * (3 + 2 + 6));
        // cost is row-major after a and b
        let off = 29 + 8 * 5 + 8 * 3; // M[1][1]
        assert_eq!(&bytes[off..off + 8], &p.cost()[(1, 1)].to_le_bytes());
        assert_eq!(decode_problem(&bytes).unwrap(), p);
    }

    #[test]
    fn rotb_errors() {
        let p = gen_synthetic2(3, 2, 0.25).unwrap();
        let mut bytes = encode_problem(&p);

        let mut bad = bytes.clone();
        bad[..4].copy_from_slice(b"XXXX");
        assert!(matches!(decode_problem(&bad), Err(Error::Format(_))));

        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(decode_problem(&bad), Err(Error::Format(_))));

        assert!(matches!(
            decode_problem(&bytes[..bytes.len() - 3]),
            Err(Error::Truncated { .. })
        ));
        assert!(matches!(
            decode_problem(&bytes[..10]),
            Err(Error::Truncated { .. })
        ));

        // a[0] = 0
        bytes[29..37].copy_from_slice(&0.0f64.to_le_bytes());
        assert!(matches!(decode_problem(&bytes), Err(Error::Validation(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.rotb");
        let p = gen_synthetic1(5, 4, Synth1Variant::Diff, 2, 3, 0.05).unwrap();
        save_problem(&p, &path).unwrap();
        let spec = GeneratorSpec {
            kind: GeneratorKind::File,
            path: Some(path.clone()),
            ..Default::default()
        };
        assert_eq!(spec.generate(None).unwrap(), p);
        assert_eq!(spec.generate(Some(0.5)).unwrap().eta(), 0.5);
        assert!(matches!(
            load_problem(dir.path().join("missing")),
            Err(Error::Io { .. })
        ));
    }
}
