//! Stochastic least squares: `min_x E‖A x − (x* + ξ)‖²` with `ξ ~ N(0, σ² I)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{dot_slices, gaussian_vector, DenseMatrix, DenseVector, RandomStream};

pub const DEFAULT_DIM: usize = 500;
pub const DEFAULT_NOISE_VARIANCE: f64 = 0.1;
/// Variance of the entries of `x*`.
pub const TARGET_VARIANCE: f64 = 0.1;

/// `Aᵀ(A x − x*)` and the noiseless loss at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub at_r: DenseVector,
    pub loss: f64,
}

impl Evaluation {
    pub fn gradient(&self) -> DenseVector {
        LeastSquares::gradient_from_parts(&self.at_r, None)
    }

    /// `‖∇F‖² = ‖2 Aᵀ r‖²`.
    pub fn grad_norm_sq(&self) -> f64 {
        self.gradient().norm2_sq()
    }
}

pub trait GradientOracle {
    fn dim(&self) -> usize;
    /// An unbiased gradient estimate at `x`.
    fn sample_gradient(&self, x: &DenseVector, stream: &mut RandomStream) -> Result<DenseVector>;
    fn true_gradient(&self, x: &DenseVector) -> Result<DenseVector>;
    fn loss(&self, x: &DenseVector) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub a: DenseMatrix,
    pub x_star: DenseVector,
    pub noise_variance: f64,
}

impl LeastSquares {
    pub fn new(a: DenseMatrix, x_star: DenseVector, noise_variance: f64) -> Result<Self> {
        if a.rows() != a.cols() {
            return Err(Error::invalid("A must be square"));
        }
        x_star.ensure_dim(a.rows())?;
        x_star.ensure_finite()?;
        if !(noise_variance >= 0.0) || !noise_variance.is_finite() {
            return Err(Error::invalid(
                "noise variance must be finite and nonnegative",
            ));
        }
        Ok(LeastSquares {
            a,
            x_star,
            noise_variance,
        })
    }

    /// The default case for `seed`: `d = 500`, noise variance `0.1`.
    pub fn make_case(seed: u64) -> Self {
        Self::make_case_with(seed, DEFAULT_DIM, DEFAULT_NOISE_VARIANCE)
    }

    /// `A` is drawn row-major from `N(0, 1)` and then `x*` from `N(0, 0.1)`,
    /// all from `RandomStream::new(seed)`.
    pub fn make_case_with(seed: u64, dim: usize, noise_variance: f64) -> Self {
        assert!(dim > 0, "dimension must be positive");
        let mut s = RandomStream::new(seed);
        let data: Vec<f64> = (0..dim * dim).map(|_| s.standard_normal()).collect();
        let x_star = gaussian_vector(&mut s, dim, 0.0, TARGET_VARIANCE).expect("dim > 0");
        let a = DenseMatrix::new(dim, dim, data).expect("finite Gaussian draws");
        LeastSquares::new(a, x_star, noise_variance).expect("valid by construction")
    }

    /// `A x − x*`.
    pub fn residual(&self, x: &DenseVector) -> Result<DenseVector> {
        let mut r = self.a.matvec(x)?;
        for (ri, si) in r.as_mut_slice().iter_mut().zip(self.x_star.iter()) {
            *ri -= si;
        }
        Ok(r)
    }

    /// `Aᵀ(A x − x*)` and `‖A x − x*‖²` for each `x`, sharing one pass over
    /// `A`. Results are bit-identical to [`LeastSquares::residual`] followed
    /// by `matvec_transposed`.
    pub fn evaluate_batch(&self, xs: &[&[f64]]) -> Result<Vec<Evaluation>> {
        let d = self.dim();
        for x in xs {
            if x.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: x.len(),
                });
            }
        }
        let mut at_r: Vec<Vec<f64>> = xs.iter().map(|_| vec![0.0; d]).collect();
        let mut r: Vec<Vec<f64>> = xs.iter().map(|_| vec![0.0; d]).collect();
        for i in 0..d {
            let row = self.a.row(i);
            for ((x, out), res) in xs.iter().zip(at_r.iter_mut()).zip(r.iter_mut()) {
                let ri = dot_slices(row, x) - self.x_star[i];
                res[i] = ri;
                for (o, a) in out.iter_mut().zip(row) {
                    *o += ri * a;
                }
            }
        }
        Ok(at_r
            .into_iter()
            .zip(r)
            .map(|(g, res)| Evaluation {
                loss: dot_slices(&res, &res),
                at_r: DenseVector::from_vec_unchecked(g),
            })
            .collect())
    }

    /// Single-point form of [`LeastSquares::evaluate_batch`].
    pub fn evaluate(&self, x: &DenseVector) -> Result<Evaluation> {
        Ok(self.evaluate_batch(&[x.as_slice()])?.remove(0))
    }

    /// One noise draw `ξ ~ N(0, σ² I)`.
    pub fn draw_noise(&self, stream: &mut RandomStream) -> DenseVector {
        gaussian_vector(stream, self.dim(), 0.0, self.noise_variance).expect("dim > 0")
    }

    /// `Aᵀ ξ` for each noise draw, in one pass over `A`.
    pub fn noise_projections(&self, noise: &[DenseVector]) -> Result<Vec<DenseVector>> {
        let refs: Vec<&[f64]> = noise.iter().map(|n| n.as_slice()).collect();
        self.a.matvec_transposed_batch(&refs)
    }

    /// `2 (Aᵀ r − Aᵀ ξ)` from its precomputed parts. Every gradient this
    /// type returns goes through here, so traces agree however the parts
    /// were batched.
    pub fn gradient_from_parts(at_r: &DenseVector, at_xi: Option<&DenseVector>) -> DenseVector {
        match at_xi {
            None => at_r.scale(2.0),
            Some(p) => DenseVector::from_vec_unchecked(
                at_r.iter()
                    .zip(p.iter())
                    .map(|(a, b)| 2.0 * (a - b))
                    .collect(),
            ),
        }
    }

    /// `‖∇F(x)‖²`.
    pub fn true_grad_norm_sq(&self, x: &DenseVector) -> Result<f64> {
        Ok(self.true_gradient(x)?.norm2_sq())
    }

    /// `2 λ_max(AᵀA)` by power iteration, stopping when the Rayleigh quotient
    /// changes by less than `1e-6` relative (or after 100 000 iterations).
    pub fn lipschitz(&self) -> f64 {
        let d = self.dim();
        let mut s = RandomStream::derive(0x4c69_7073, d as u64);
        let mut v = gaussian_vector(&mut s, d, 0.0, 1.0).expect("dim > 0");
        let n = v.norm2();
        v = v.scale(1.0 / n);
        let mut lambda = 0.0;
        for _ in 0..100_000 {
            let w = self
                .a
                .matvec_transposed(&self.a.matvec(&v).expect("square"))
                .expect("square");
            let next = dot_slices(&v, &w);
            let norm = w.norm2();
            if norm == 0.0 {
                return 0.0;
            }
            v = w.scale(1.0 / norm);
            let done = (next - lambda).abs() <= 1e-6 * next.abs();
            lambda = next;
            if done {
                break;
            }
        }
        2.0 * lambda
    }

    /// `‖A x − x*‖²` plus the noise contribution `σ² ‖A‖_F²`; the latter is
    /// what [`GradientOracle::loss`] leaves out.
    pub fn expected_loss(&self, x: &DenseVector) -> Result<f64> {
        let frob = dot_slices(self.a.as_slice(), self.a.as_slice());
        Ok(self.loss(x)? + self.noise_variance * frob)
    }
}

impl GradientOracle for LeastSquares {
    fn dim(&self) -> usize {
        self.a.cols()
    }

    /// `2 Aᵀ(A x − x* − ξ)`.
    fn sample_gradient(&self, x: &DenseVector, stream: &mut RandomStream) -> Result<DenseVector> {
        let at_r = self.a.matvec_transposed(&self.residual(x)?)?;
        let xi = self.draw_noise(stream);
        let at_xi = self.a.matvec_transposed(&xi)?;
        Ok(Self::gradient_from_parts(&at_r, Some(&at_xi)))
    }

    /// `2 Aᵀ(A x − x*)`.
    fn true_gradient(&self, x: &DenseVector) -> Result<DenseVector> {
        let at_r = self.a.matvec_transposed(&self.residual(x)?)?;
        Ok(Self::gradient_from_parts(&at_r, None))
    }

    /// `‖A x − x*‖²`, the noiseless part of the objective.
    fn loss(&self, x: &DenseVector) -> Result<f64> {
        Ok(self.residual(x)?.norm2_sq())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn scalar_problem(noise: f64) -> LeastSquares {
        LeastSquares::new(
            DenseMatrix::new(1, 1, vec![2.0]).unwrap(),
            DenseVector::new(vec![1.0]).unwrap(),
            noise,
        )
        .unwrap()
    }

    #[test]
    fn scalar_gradient_by_hand() {
        let p = scalar_problem(0.0);
        let x = DenseVector::new(vec![1.0]).unwrap();
        let mut s = RandomStream::new(1);
        assert_eq!(p.sample_gradient(&x, &mut s).unwrap()[0], 4.0);
        assert_eq!(p.true_gradient(&x).unwrap()[0], 4.0);
        assert_eq!(p.true_grad_norm_sq(&x).unwrap(), 16.0);
        let at_min = DenseVector::new(vec![0.5]).unwrap();
        assert_eq!(p.sample_gradient(&at_min, &mut s).unwrap()[0], 0.0);
        assert_eq!(p.loss(&at_min).unwrap(), 0.0);
        assert!((p.lipschitz() - 8.0).abs() < 1e-9);
    }

    #[test]
    fn identity_minimizer_has_zero_gradient() {
        let x_star = DenseVector::new(vec![0.3, -1.0, 2.0]).unwrap();
        let p = LeastSquares::new(DenseMatrix::identity(3), x_star.clone(), 0.1).unwrap();
        assert_eq!(p.true_gradient(&x_star).unwrap(), DenseVector::zeros(3));
    }

    #[test]
    fn case_moments() {
        let p = LeastSquares::make_case(7);
        assert_eq!(p, LeastSquares::make_case(7));
        let a = p.a.as_slice();
        let n = a.len() as f64;
        let mean = a.iter().sum::<f64>() / n;
        let var = a.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!((var - 1.0).abs() < 0.05, "A variance {var}");
        let xs = p.x_star.as_slice();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let xv = xs.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / xs.len() as f64;
        assert!((xv - 0.1).abs() < 0.03, "x* variance {xv}");
    }

    #[test]
    fn finite_differences_match_gradient() {
        let p = LeastSquares::make_case_with(3, 12, 0.1);
        let mut s = RandomStream::new(99);
        for _ in 0..10 {
            let x = gaussian_vector(&mut s, 12, 0.0, 1.0).unwrap();
            let g = p.true_gradient(&x).unwrap();
            for j in 0..12 {
                let h = 1e-6;
                let mut xp = x.clone();
                xp.as_mut_slice()[j] += h;
                let mut xm = x.clone();
                xm.as_mut_slice()[j] -= h;
                let fd = (p.loss(&xp).unwrap() - p.loss(&xm).unwrap()) / (2.0 * h);
                assert!(
                    (fd - g[j]).abs() <= 1e-5 * g.norm_inf().max(1.0),
                    "{fd} vs {}",
                    g[j]
                );
            }
        }
    }

    #[test]
    fn sample_gradient_is_unbiased() {
        let p = LeastSquares::make_case_with(4, 6, 0.1);
        let x = DenseVector::filled(6, 0.2);
        let truth = p.true_gradient(&x).unwrap();
        let mut s = RandomStream::new(5);
        let n = 10_000;
        let mut sum = [0.0; 6];
        let mut sq = [0.0; 6];
        for _ in 0..n {
            let g = p.sample_gradient(&x, &mut s).unwrap();
            for j in 0..6 {
                sum[j] += g[j];
                sq[j] += g[j] * g[j];
            }
        }
        for j in 0..6 {
            let mean = sum[j] / n as f64;
            let var = sq[j] / n as f64 - mean * mean;
            let se = libm::sqrt(var / n as f64);
            assert!((mean - truth[j]).abs() <= 3.0 * se + 1e-12, "coord {j}");
        }
    }

    #[test]
    fn convexity_witness() {
        let p = LeastSquares::make_case_with(8, 10, 0.1);
        let mut s = RandomStream::new(6);
        for _ in 0..50 {
            let x = gaussian_vector(&mut s, 10, 0.0, 1.0).unwrap();
            let y = gaussian_vector(&mut s, 10, 0.0, 1.0).unwrap();
            let gx = p.true_gradient(&x).unwrap();
            let lin = p.expected_loss(&x).unwrap() + gx.dot(&y.sub(&x).unwrap()).unwrap();
            assert!(p.expected_loss(&y).unwrap() >= lin - 1e-8);
        }
    }

    #[test]
    fn fused_evaluation_matches_separate_passes() {
        let p = LeastSquares::make_case_with(10, 9, 0.1);
        let mut s = RandomStream::new(2);
        let xs: Vec<_> = (0..4)
            .map(|_| gaussian_vector(&mut s, 9, 0.0, 1.0).unwrap())
            .collect();
        let refs: Vec<&[f64]> = xs.iter().map(|x| x.as_slice()).collect();
        for (x, ev) in xs.iter().zip(p.evaluate_batch(&refs).unwrap()) {
            let r = p.residual(x).unwrap();
            assert_eq!(ev.at_r, p.a.matvec_transposed(&r).unwrap());
            assert_eq!(ev.loss, p.loss(x).unwrap());
            assert_eq!(ev.gradient(), p.true_gradient(x).unwrap());
        }
    }

    #[test]
    fn batched_projections_match_single() {
        let p = LeastSquares::make_case_with(9, 7, 0.1);
        let mut s = RandomStream::new(1);
        let noise: Vec<_> = (0..3).map(|_| p.draw_noise(&mut s)).collect();
        let batch = p.noise_projections(&noise).unwrap();
        for (n, b) in noise.iter().zip(&batch) {
            assert_eq!(&p.a.matvec_transposed(n).unwrap(), b);
        }
    }
}
