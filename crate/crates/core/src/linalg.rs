//! Ridge regression for mapping matrices and SVD-based rank manipulation.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::types::LinearMap;

/// Fits `M = (SᵀS + λI)⁻¹ SᵀT`, the minimizer of `‖S M − T‖² + λ‖M‖²`.
///
/// Rows of `s` and `t` are corresponding embeddings. The `d_s x d_s` normal
/// equations are factored once and reused for every column of `t`.
pub fn ridge_fit(s: &DMatrix<f64>, t: &DMatrix<f64>, lambda: f64) -> Result<LinearMap> {
    if s.nrows() != t.nrows() {
        return Err(Error::protocol(format!(
            "source has {} rows but target has {}",
            s.nrows(),
            t.nrows()
        )));
    }
    if s.nrows() == 0 {
        return Err(Error::protocol("cannot fit a map from zero pairs"));
    }
    if s.ncols() == 0 || t.ncols() == 0 {
        return Err(Error::protocol("embedding dimensions must be positive"));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::protocol(format!(
            "lambda must be finite and nonnegative, got {lambda}"
        )));
    }
    if s.iter().chain(t.iter()).any(|v| !v.is_finite()) {
        return Err(Error::numerical("non-finite entry in fit inputs"));
    }

    let mut gram = s.tr_mul(s);
    for i in 0..gram.nrows() {
        gram[(i, i)] += lambda;
    }
    let rhs = s.tr_mul(t);
    let factor = Cholesky::factor(&gram).ok_or_else(|| {
        Error::numerical(format!(
            "normal equations are singular (lambda = {lambda}, {} pairs, source dim {}); \
             use lambda > 0",
            s.nrows(),
            s.ncols()
        ))
    })?;
    let matrix = factor.solve(&rhs);
    LinearMap::new(matrix, lambda, s.nrows(), "", "")
}

/// Ridge objective `‖S M − T‖_F² + λ‖M‖_F²`.
pub fn ridge_objective(s: &DMatrix<f64>, t: &DMatrix<f64>, m: &DMatrix<f64>, lambda: f64) -> f64 {
    let residual = s * m - t;
    residual.norm_squared() + lambda * m.norm_squared()
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
struct Cholesky {
    l: DMatrix<f64>,
}

impl Cholesky {
    fn factor(a: &DMatrix<f64>) -> Option<Self> {
        let n = a.nrows();
        let scale = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
        // relative pivot floor; rank-deficient Gram matrices fall below it
        let floor = scale * n as f64 * f64::EPSILON * 16.0;
        let mut l = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d.is_nan() || d <= floor {
                return None;
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut v = a[(i, j)];
                for k in 0..j {
                    v -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = v / d;
            }
        }
        Some(Self { l })
    }

    fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.l.nrows();
        let mut x = b.clone();
        for c in 0..x.ncols() {
            // L y = b
            for i in 0..n {
                let mut v = x[(i, c)];
                for k in 0..i {
                    v -= self.l[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = v / self.l[(i, i)];
            }
            // Lᵀ x = y
            for i in (0..n).rev() {
                let mut v = x[(i, c)];
                for k in i + 1..n {
                    v -= self.l[(k, i)] * x[(k, c)];
                }
                x[(i, c)] = v / self.l[(i, i)];
            }
        }
        x
    }
}

/// Thin SVD `M = U diag(σ) Vᵀ` with σ sorted nonincreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdDecomposition {
    /// m x r
    pub u: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    /// n x r
    pub v: DMatrix<f64>,
}

impl SvdDecomposition {
    pub fn rank_bound(&self) -> usize {
        self.singular_values.len()
    }

    /// `U_k diag(σ_1..σ_k) V_kᵀ`.
    pub fn reconstruct(&self, k: usize) -> DMatrix<f64> {
        let k = k.min(self.rank_bound());
        let mut us = self.u.columns(0, k).into_owned();
        for (j, sigma) in self.singular_values.iter().take(k).enumerate() {
            us.column_mut(j).scale_mut(*sigma);
        }
        us * self.v.columns(0, k).transpose()
    }
}

pub fn svd(m: &DMatrix<f64>) -> Result<SvdDecomposition> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("svd input has non-finite entries"));
    }
    if m.is_empty() {
        return Err(Error::protocol("svd of an empty matrix"));
    }
    let dec = nalgebra::linalg::SVD::new(m.clone(), true, true);
    let (u, v_t) = match (dec.u, dec.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::numerical("svd did not produce singular vectors")),
    };
    let sigma = dec.singular_values;
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));

    let r = order.len();
    let mut su = DMatrix::zeros(m.nrows(), r);
    let mut sv = DMatrix::zeros(m.ncols(), r);
    let mut values = Vec::with_capacity(r);
    for (dst, &src) in order.iter().enumerate() {
        su.set_column(dst, &u.column(src));
        sv.set_column(dst, &v_t.row(src).transpose());
        values.push(sigma[src].max(0.0));
    }
    Ok(SvdDecomposition {
        u: su,
        singular_values: values,
        v: sv,
    })
}

/// Best rank-`k` approximation of a map (Eckart–Young).
pub fn truncate_rank(map: &LinearMap, k: usize) -> Result<LinearMap> {
    let full = map.source_dim().min(map.target_dim());
    if k == 0 || k > full {
        return Err(Error::protocol(format!(
            "truncation rank {k} outside [1, {full}]"
        )));
    }
    if k == full {
        return Ok(map.clone());
    }
    let dec = svd(map.matrix())?;
    LinearMap::new(
        dec.reconstruct(k),
        map.lambda,
        map.n_pairs_used,
        map.source_tag.clone(),
        map.target_tag.clone(),
    )
}

/// Share of `Σσ²` carried by the top `k` singular values.
pub fn variance_explained(svd: &SvdDecomposition, k: usize) -> Result<f64> {
    let r = svd.rank_bound();
    if k == 0 || k > r {
        return Err(Error::protocol(format!("rank {k} outside [1, {r}]")));
    }
    let total: f64 = svd.singular_values.iter().map(|s| s * s).sum();
    if total <= 0.0 {
        return Err(Error::protocol(
            "variance explained is undefined for an all-zero spectrum",
        ));
    }
    if k == r {
        return Ok(1.0);
    }
    let head: f64 = svd.singular_values[..k].iter().map(|s| s * s).sum();
    Ok((head / total).clamp(0.0, 1.0))
}
