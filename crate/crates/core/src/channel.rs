//! Transmit-correlated Rayleigh channels and their real-domain expansion.
//!
//! The complex model is `H_hat = H_w * R_tx^{1/2}` with `H_w` i.i.d.
//! circularly-symmetric complex Gaussian and `[R_tx]_{k,l} = delta^{|k-l|}`.
//! Every complex quantity also has a real expansion: a complex matrix `M`
//! maps to `[Re(M) -Im(M); Im(M) Re(M)]` and a complex vector `v` to
//! `[Re(v); Im(v)]`, which preserves Euclidean norms.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Largest magnitude a negative eigenvalue may have before a matrix is
/// rejected as not positive semidefinite.
pub const PSD_EIG_TOL: f64 = 1e-10;

/// Real-expand a complex matrix into its `[Re -Im; Im Re]` block form.
pub fn real_expand_matrix(m: &DMatrix<Complex64>) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    let mut out = DMatrix::zeros(2 * rows, 2 * cols);
    for i in 0..rows {
        for j in 0..cols {
            let z = m[(i, j)];
            out[(i, j)] = z.re;
            out[(i, j + cols)] = -z.im;
            out[(i + rows, j)] = z.im;
            out[(i + rows, j + cols)] = z.re;
        }
    }
    out
}

/// Real-expand a complex vector into `[Re(v); Im(v)]`.
pub fn real_expand_vector(v: &DVector<Complex64>) -> DVector<f64> {
    let n = v.len();
    let mut out = DVector::zeros(2 * n);
    for i in 0..n {
        out[i] = v[i].re;
        out[i + n] = v[i].im;
    }
    out
}

/// Reassemble a complex vector from its `[Re; Im]` expansion.
pub fn complex_from_real_vector(v: &DVector<f64>) -> DVector<Complex64> {
    assert!(
        v.len().is_multiple_of(2),
        "real expansion must have even length"
    );
    let n = v.len() / 2;
    DVector::from_fn(n, |i, _| Complex64::new(v[i], v[i + n]))
}

/// Complex channel matrix `H_hat`, `N_r x N_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexChannel {
    entries: DMatrix<Complex64>,
}

impl ComplexChannel {
    pub fn new(entries: DMatrix<Complex64>) -> Self {
        ComplexChannel { entries }
    }

    pub fn n_r(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_t(&self) -> usize {
        self.entries.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// The `2N_r x 2N_t` real expansion of this channel.
    pub fn real_expand(&self) -> RealChannel {
        RealChannel {
            entries: real_expand_matrix(&self.entries),
        }
    }

    /// Serialize as CSV, one matrix row per line, each complex entry as an
    /// adjacent `re,im` column pair (column order `re_1,im_1,...,re_Nt,im_Nt`).
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for i in 0..self.n_r() {
            let row: Vec<String> = (0..self.n_t())
                .flat_map(|j| {
                    let z = self.entries[(i, j)];
                    [format!("{}", z.re), format!("{}", z.im)]
                })
                .collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    /// Parse the format written by [`ComplexChannel::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<Complex64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if !fields.len().is_multiple_of(2) {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: "expected an even number of columns (re,im pairs)".into(),
                });
            }
            let mut row = Vec::with_capacity(fields.len() / 2);
            for pair in fields.chunks_exact(2) {
                let re: f64 = pair[0].trim().parse().map_err(|e| Error::Parse {
                    line: lineno + 1,
                    msg: format!("bad real part `{}`: {e}", pair[0]),
                })?;
                let im: f64 = pair[1].trim().parse().map_err(|e| Error::Parse {
                    line: lineno + 1,
                    msg: format!("bad imaginary part `{}`: {e}", pair[1]),
                })?;
                row.push(Complex64::new(re, im));
            }
            if let Some(first) = rows.first() {
                if row.len() != first.len() {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        msg: "ragged rows".into(),
                    });
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Parse {
                line: 0,
                msg: "empty channel file".into(),
            });
        }
        let n_r = rows.len();
        let n_t = rows[0].len();
        Ok(ComplexChannel::new(DMatrix::from_fn(n_r, n_t, |i, j| {
            rows[i][j]
        })))
    }
}

/// Real-expanded channel, `2N_r x 2N_t`, block structure `[Re -Im; Im Re]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealChannel {
    entries: DMatrix<f64>,
}

impl RealChannel {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }
}

/// Transmit correlation description: the coefficient `delta`, the matrix
/// `R_tx`, its principal square root, and the real-expanded weight `R`.
#[derive(Debug, Clone)]
pub struct CorrelationModel {
    delta: f64,
    r_tx: DMatrix<Complex64>,
    sqrt_r_tx: DMatrix<Complex64>,
    weight: DMatrix<f64>,
}

impl CorrelationModel {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn n_t(&self) -> usize {
        self.r_tx.nrows()
    }

    pub fn r_tx(&self) -> &DMatrix<Complex64> {
        &self.r_tx
    }

    pub fn sqrt_r_tx(&self) -> &DMatrix<Complex64> {
        &self.sqrt_r_tx
    }

    /// The `2N_t x 2N_t` correlation weight used by statistical-CSIT designs
    /// and by the SER upper bound: the real expansion of `R_tx^{1/2}`.
    pub fn weight(&self) -> &DMatrix<f64> {
        &self.weight
    }
}

/// Build the exponential correlation model `[R_tx]_{k,l} = delta^{|k-l|}`.
///
/// `delta` must lie in `[0, 1)`. Only real coefficients are supported; the
/// conjugation in the general model is then the identity.
pub fn make_correlation(delta: f64, n_t: usize) -> Result<CorrelationModel> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::invalid_config(format!(
            "correlation coefficient must lie in [0, 1), got {delta}"
        )));
    }
    if n_t == 0 {
        return Err(Error::invalid_config("N_t must be positive"));
    }
    let r_tx = DMatrix::from_fn(n_t, n_t, |k, l| {
        Complex64::new(delta.powi((k as i32 - l as i32).abs()), 0.0)
    });
    let sqrt_r_tx = matrix_sqrt(&r_tx)?;
    let weight = real_expand_matrix(&sqrt_r_tx);
    Ok(CorrelationModel {
        delta,
        r_tx,
        sqrt_r_tx,
        weight,
    })
}

/// Principal square root of a Hermitian PSD matrix via eigendecomposition.
///
/// Eigenvalues in `(-1e-10, 0)` are clamped to zero; anything more negative
/// is rejected as not PSD.
pub fn matrix_sqrt(psd: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    if !psd.is_square() {
        return Err(Error::dims("matrix square root requires a square matrix"));
    }
    let herm_err = (psd - psd.adjoint()).map(|z| z.norm()).max();
    if herm_err > 1e-9 {
        return Err(Error::dims(format!(
            "matrix is not Hermitian (max |M - M^H| entry {herm_err:.3e})"
        )));
    }
    let eig = psd.clone().symmetric_eigen();
    let min_eig = eig.eigenvalues.min();
    if min_eig < -PSD_EIG_TOL {
        return Err(Error::NotPsd { min_eig });
    }
    let n = psd.nrows();
    let sqrt_vals = DVector::from_fn(n, |i, _| {
        Complex64::new(eig.eigenvalues[i].max(0.0).sqrt(), 0.0)
    });
    let v = &eig.eigenvectors;
    let sqrt = v * DMatrix::from_diagonal(&sqrt_vals) * v.adjoint();
    Ok(sqrt)
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, std_per_component: f64) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * std_per_component, im * std_per_component)
}

/// Draw one channel realization `H_hat = H_w * R_tx^{1/2}` and its real
/// expansion. `H_w` entries are CN(0,1): each component N(0, 1/2).
pub fn sample_channel<R: Rng + ?Sized>(
    rng: &mut R,
    corr: &CorrelationModel,
    n_r: usize,
) -> (ComplexChannel, RealChannel) {
    let n_t = corr.n_t();
    let std = (0.5f64).sqrt();
    let h_w = DMatrix::from_fn(n_r, n_t, |_, _| complex_gaussian(rng, std));
    let h_hat = ComplexChannel::new(&h_w * corr.sqrt_r_tx());
    let real = h_hat.real_expand();
    (h_hat, real)
}

/// Add an estimation-error perturbation: `H_im = H_hat + H_e` with `H_e`
/// entries i.i.d. CN(0, eta/rho). `eta = 0` returns the input unchanged.
pub fn perturb_channel<R: Rng + ?Sized>(
    ch: &ComplexChannel,
    eta: f64,
    rho: f64,
    rng: &mut R,
) -> Result<ComplexChannel> {
    if rho <= 0.0 {
        return Err(Error::invalid_config("rho must be positive"));
    }
    if eta < 0.0 {
        return Err(Error::invalid_config("eta must be nonnegative"));
    }
    if eta == 0.0 {
        return Ok(ch.clone());
    }
    let var = eta / rho;
    let std = (var / 2.0).sqrt();
    let noise = DMatrix::from_fn(ch.n_r(), ch.n_t(), |_, _| complex_gaussian(rng, std));
    Ok(ComplexChannel::new(ch.matrix() + noise))
}
