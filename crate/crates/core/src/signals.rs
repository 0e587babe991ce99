//! Random k-sparse test signals and support statistics.

use rand::seq::index;
use rand::Rng;

use crate::error::{invalid, Result};
use crate::sampling::{standard_normal, RandomStream};

/// Squared-error level at or below which a recovery counts as exact.
pub const SUCCESS_THRESHOLD: f64 = 1e-6;

/// Distribution of the nonzero entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AmplitudeModel {
    /// `±d` with equal probability.
    ConstantModulus(f64),
    /// `N(0, sigma²)`.
    Gaussian(f64),
}

impl AmplitudeModel {
    pub fn rademacher() -> Self {
        Self::ConstantModulus(1.0)
    }

    pub fn standard_gaussian() -> Self {
        Self::Gaussian(1.0)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::ConstantModulus(d) if d == 0.0 || !d.is_finite() => {
                invalid(format!("constant-modulus amplitude must be nonzero, got {d}"))
            }
            Self::Gaussian(s) if !(s > 0.0 && s.is_finite()) => {
                invalid(format!("gaussian sigma must be positive, got {s}"))
            }
            _ => Ok(()),
        }
    }

    /// Draws one nonzero value.
    pub fn draw(&self, stream: &mut RandomStream) -> f64 {
        match *self {
            Self::ConstantModulus(d) => {
                if stream.gen::<bool>() {
                    d
                } else {
                    -d
                }
            }
            Self::Gaussian(sigma) => loop {
                let v = sigma * standard_normal(stream);
                if v != 0.0 {
                    break v;
                }
            },
        }
    }

    /// Short label used in CSV output and on the command line.
    pub fn label(&self) -> String {
        match *self {
            Self::ConstantModulus(1.0) => "rademacher".into(),
            Self::ConstantModulus(d) => format!("cm({d})"),
            Self::Gaussian(1.0) => "gauss".into(),
            Self::Gaussian(s) => format!("gauss({s})"),
        }
    }

    /// Inverse of [`AmplitudeModel::label`].
    pub fn parse(label: &str) -> Result<Self> {
        let param = |rest: &str| -> Result<f64> {
            rest.strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .and_then(|r| r.parse().ok())
                .ok_or_else(|| crate::Error::InvalidArgument(format!("bad distribution '{label}'")))
        };
        let model = match label {
            "rademacher" | "cm" => Self::ConstantModulus(1.0),
            "gauss" | "gaussian" => Self::Gaussian(1.0),
            _ if label.starts_with("cm(") => Self::ConstantModulus(param(&label[2..])?),
            _ if label.starts_with("gauss(") => Self::Gaussian(param(&label[5..])?),
            _ => return invalid(format!("unknown distribution '{label}'")),
        };
        model.validate()?;
        Ok(model)
    }
}

/// k-sparse vector: sorted support plus the values on it.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignal {
    pub n: usize,
    pub support: Vec<usize>,
    pub values: Vec<f64>,
    pub model: AmplitudeModel,
}

impl SparseSignal {
    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn densify(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (&i, &v) in self.support.iter().zip(&self.values) {
            x[i] = v;
        }
        x
    }
}

/// Uniformly random support of size `k`, values i.i.d. from `model`.
pub fn gen_sparse_signal(
    n: usize,
    k: usize,
    model: AmplitudeModel,
    stream: &mut RandomStream,
) -> Result<SparseSignal> {
    if n == 0 {
        return invalid("signal length must be at least 1");
    }
    if k > n {
        return invalid(format!("sparsity {k} exceeds length {n}"));
    }
    model.validate()?;
    let mut support = index::sample(stream, n, k).into_vec();
    support.sort_unstable();
    let values = (0..k).map(|_| model.draw(stream)).collect();
    Ok(SparseSignal { n, support, values, model })
}

/// Indices of the `k` largest entries of `x` in magnitude, ascending.
/// Equal magnitudes are ranked by lower index first.
pub fn supp_k(x: &[f64], k: usize) -> Result<Vec<usize>> {
    if k > x.len() {
        return invalid(format!("supp_k: k = {k} exceeds length {}", x.len()));
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| x[j].abs().total_cmp(&x[i].abs()).then(i.cmp(&j)));
    order.truncate(k);
    order.sort_unstable();
    Ok(order)
}

/// `|K ∩ L| / |K|`
pub fn support_overlap(truth: &[usize], estimate: &[usize]) -> Result<f64> {
    if truth.is_empty() {
        return invalid("support_overlap: reference support is empty");
    }
    let hits = truth.iter().filter(|i| estimate.contains(i)).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// `Σ (xᵢ − yᵢ)²`
pub fn squared_error(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return invalid(format!("squared_error: lengths {} and {} differ", x.len(), y.len()));
    }
    Ok(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum())
}

pub fn is_success(squared_error: f64) -> bool {
    squared_error <= SUCCESS_THRESHOLD
}
