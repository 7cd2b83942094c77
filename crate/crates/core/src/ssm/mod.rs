//! Kernel state-space model: the dictionary of tensor-product feature centers and the
//! coefficient matrix that together represent the RKHS weights.
//!
//! A state `s = [x; y]` is propagated as `s_i = Aᵀ k(s_{i-1}, u_i)` where `k` is the
//! vector of tensor-kernel evaluations against the stored centers. The output is the
//! trailing `n_y` block of the state.

pub(crate) mod format;

pub use format::{read_model, write_model, MODEL_HEADER};

use crate::error::{check_dim, check_finite, FbfError, Result};
use crate::kernel::{sq_dist, KernelParams};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Standard deviation of the random initial center and coefficient row.
pub const INIT_STD: f64 = 0.1;

/// Dictionary of `(state, input)` centers with an `N × n_s` coefficient matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RkhsModel {
    kp: KernelParams,
    n_s: usize,
    n_u: usize,
    n_y: usize,
    // row-major storage, one row per center
    centers_s: Vec<f64>,
    centers_u: Vec<f64>,
    coeffs: Vec<f64>,
}

impl RkhsModel {
    /// Builds a single-center model.
    pub fn new(kp: KernelParams, n_y: usize, center_s: &[f64], center_u: &[f64], coeff_row: &[f64]) -> Result<Self> {
        let n_s = center_s.len();
        if n_s == 0 {
            return Err(FbfError::Empty("state dimension"));
        }
        if n_y == 0 || n_y > n_s {
            return Err(FbfError::InvalidParameter {
                name: "n_y",
                reason: format!("must satisfy 1 <= n_y <= n_s = {n_s}, got {n_y}"),
            });
        }
        check_dim("coefficient row", n_s, coeff_row.len())?;
        let mut model = Self {
            kp,
            n_s,
            n_u: center_u.len(),
            n_y,
            centers_s: Vec::new(),
            centers_u: Vec::new(),
            coeffs: Vec::new(),
        };
        model.add_center(center_s, center_u, coeff_row)?;
        Ok(model)
    }

    /// Random initialization: center and coefficients drawn i.i.d. from `N(0, INIT_STD²)`.
    pub fn random<R: Rng + ?Sized>(kp: KernelParams, n_s: usize, n_u: usize, n_y: usize, rng: &mut R) -> Result<Self> {
        let normal = Normal::new(0.0, INIT_STD).expect("valid normal");
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| normal.sample(rng)).collect() };
        let s = draw(n_s);
        let u = draw(n_u);
        let a = draw(n_s);
        Self::new(kp, n_y, &s, &u, &a)
    }

    pub fn kernel_params(&self) -> &KernelParams {
        &self.kp
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn n_u(&self) -> usize {
        self.n_u
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn n_x(&self) -> usize {
        self.n_s - self.n_y
    }

    /// Dictionary size `N`.
    pub fn len(&self) -> usize {
        self.coeffs.len() / self.n_s
    }

    pub fn memory_bytes(&self) -> usize {
        (self.centers_s.len() + self.centers_u.len() + self.coeffs.len()) * std::mem::size_of::<f64>()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn center_s(&self, j: usize) -> &[f64] {
        &self.centers_s[j * self.n_s..(j + 1) * self.n_s]
    }

    pub fn center_u(&self, j: usize) -> &[f64] {
        &self.centers_u[j * self.n_u..(j + 1) * self.n_u]
    }

    /// Row `j` of the coefficient matrix (one coefficient per state component).
    pub fn coeff_row(&self, j: usize) -> &[f64] {
        &self.coeffs[j * self.n_s..(j + 1) * self.n_s]
    }

    /// Copy of the `N × n_s` coefficient matrix.
    pub fn coefficients(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.len(), self.n_s, &self.coeffs)
    }

    pub(crate) fn coeff_mut(&mut self, j: usize, k: usize) -> &mut f64 {
        &mut self.coeffs[j * self.n_s + k]
    }

    fn check_query(&self, s_prev: &[f64], u: &[f64]) -> Result<()> {
        check_dim("state", self.n_s, s_prev.len())?;
        check_dim("input", self.n_u, u.len())
    }

    /// Kernel evaluations of `(s_prev, u)` against every center.
    pub fn kernel_vector(&self, s_prev: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        self.check_query(s_prev, u)?;
        Ok(self.kernel_vector_unchecked(s_prev, u))
    }

    pub(crate) fn kernel_vector_unchecked(&self, s_prev: &[f64], u: &[f64]) -> Vec<f64> {
        let (a_s, a_u) = (self.kp.a_s(), self.kp.a_u());
        (0..self.len())
            .map(|j| (-a_s * sq_dist(self.center_s(j), s_prev) - a_u * sq_dist(self.center_u(j), u)).exp())
            .collect()
    }

    /// `Aᵀ k` for a precomputed kernel vector.
    pub(crate) fn combine(&self, k: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.n_s);
        for (j, &kj) in k.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.coeff_row(j)) {
                *o += a * kj;
            }
        }
        out
    }

    /// Next state `Aᵀ k(s_prev, u)`.
    pub fn propagate_state(&self, s_prev: &[f64], u: &[f64]) -> Result<DVector<f64>> {
        self.check_query(s_prev, u)?;
        Ok(self.combine(&self.kernel_vector_unchecked(s_prev, u)))
    }

    /// Jacobian `∂s_i/∂s_{i-1} = 2 a_s Aᵀ diag(k) Dᵀ` with `D` the center-minus-state differences.
    pub fn state_transition_gradient(&self, s_prev: &[f64], u: &[f64]) -> Result<DMatrix<f64>> {
        self.check_query(s_prev, u)?;
        let k = self.kernel_vector_unchecked(s_prev, u);
        Ok(self.gradient_with_kernel(s_prev, &k))
    }

    pub(crate) fn gradient_with_kernel(&self, s_prev: &[f64], k: &[f64]) -> DMatrix<f64> {
        let n_s = self.n_s;
        let mut lambda = DMatrix::zeros(n_s, n_s);
        let mut diff = vec![0.0; n_s];
        for (j, &kj) in k.iter().enumerate() {
            for (d, (c, s)) in diff.iter_mut().zip(self.center_s(j).iter().zip(s_prev)) {
                *d = (c - s) * kj;
            }
            let row = self.coeff_row(j);
            for l in 0..n_s {
                let al = row[l];
                if al == 0.0 {
                    continue;
                }
                for m in 0..n_s {
                    lambda[(l, m)] += al * diff[m];
                }
            }
        }
        lambda * (2.0 * self.kp.a_s())
    }

    /// Appends the center `(s_prev, u)` with the given coefficient row.
    pub fn add_center(&mut self, s_prev: &[f64], u: &[f64], coeff_row: &[f64]) -> Result<()> {
        self.check_query(s_prev, u)?;
        check_dim("coefficient row", self.n_s, coeff_row.len())?;
        check_finite("center state", s_prev)?;
        check_finite("center input", u)?;
        check_finite("coefficient row", coeff_row)?;
        self.centers_s.extend_from_slice(s_prev);
        self.centers_u.extend_from_slice(u);
        self.coeffs.extend_from_slice(coeff_row);
        Ok(())
    }

    /// Tensor kernel between two stored centers.
    pub fn center_kernel(&self, i: usize, j: usize) -> f64 {
        (-self.kp.a_s() * sq_dist(self.center_s(i), self.center_s(j))
            - self.kp.a_u() * sq_dist(self.center_u(i), self.center_u(j)))
        .exp()
    }

    /// Kernel evaluations of stored center `j` against all centers (column `j` of the Gram matrix).
    pub fn gram_column(&self, j: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.center_kernel(i, j)).collect()
    }
}

/// The fixed `n_y × n_s` selector `[0 I]` projecting a state onto its output block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectorMatrix {
    pub n_y: usize,
    pub n_s: usize,
}

impl SelectorMatrix {
    pub fn new(n_y: usize, n_s: usize) -> Result<Self> {
        if n_y > n_s {
            return Err(FbfError::InvalidParameter {
                name: "n_y",
                reason: format!("{n_y} exceeds state dimension {n_s}"),
            });
        }
        Ok(Self { n_y, n_s })
    }

    /// Index of the first output coordinate within the state.
    pub fn offset(&self) -> usize {
        self.n_s - self.n_y
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let off = self.offset();
        DMatrix::from_fn(self.n_y, self.n_s, |r, c| if c == off + r { 1.0 } else { 0.0 })
    }
}

/// Last `n_y` components of `s`.
pub fn measurement_select(s: &[f64], n_y: usize) -> Result<&[f64]> {
    if n_y > s.len() {
        return Err(FbfError::InvalidParameter {
            name: "n_y",
            reason: format!("{n_y} exceeds state dimension {}", s.len()),
        });
    }
    Ok(&s[s.len() - n_y..])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_model(rng: &mut ChaCha8Rng, n: usize, n_s: usize, n_u: usize) -> RkhsModel {
        let kp = KernelParams::new(rng.random_range(0.2..1.5), rng.random_range(0.2..1.5)).unwrap();
        let mut draw = |d: usize| -> Vec<f64> { (0..d).map(|_| rng.random_range(-1.0..1.0)).collect() };
        let (s, u, a) = (draw(n_s), draw(n_u), draw(n_s));
        let mut m = RkhsModel::new(kp, 1, &s, &u, &a).unwrap();
        for _ in 1..n {
            let (s, u, a) = (draw(n_s), draw(n_u), draw(n_s));
            m.add_center(&s, &u, &a).unwrap();
        }
        m
    }

    #[test]
    fn zero_coefficients_give_zero_map() {
        let kp = KernelParams::new(0.5, 0.5).unwrap();
        let mut m = RkhsModel::new(kp, 1, &[0.1, 0.2], &[0.3], &[0.0, 0.0]).unwrap();
        m.add_center(&[0.5, -0.2], &[1.0], &[0.0, 0.0]).unwrap();
        let s = m.propagate_state(&[0.3, 0.3], &[0.2]).unwrap();
        assert_eq!(s.as_slice(), &[0.0, 0.0]);
        assert_eq!(m.state_transition_gradient(&[0.3, 0.3], &[0.2]).unwrap().amax(), 0.0);
    }

    #[test]
    fn coinciding_center_returns_its_row() {
        let kp = KernelParams::new(0.5, 0.5).unwrap();
        let m = RkhsModel::new(kp, 1, &[0.1, 0.2], &[0.3], &[2.0, -3.0]).unwrap();
        let s = m.propagate_state(&[0.1, 0.2], &[0.3]).unwrap();
        assert_eq!(s.as_slice(), &[2.0, -3.0]);
        assert_eq!(m.state_transition_gradient(&[0.1, 0.2], &[0.3]).unwrap().amax(), 0.0);
    }

    #[test]
    fn propagation_matches_explicit_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_model(&mut rng, 3, 2, 1);
        let s = [0.2, -0.4];
        let u = [0.7];
        let out = m.propagate_state(&s, &u).unwrap();
        for l in 0..2 {
            let mut expected = 0.0;
            for j in 0..3 {
                let k = crate::kernel::tensor_kernel(m.center_s(j), m.center_u(j), &s, &u, m.kernel_params()).unwrap();
                expected += m.coeff_row(j)[l] * k;
            }
            assert!((out[l] - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_model(&mut rng, 5, 3, 2);
        let s = [0.1, -0.3, 0.25];
        let u = [0.4, -0.1];
        let g = m.state_transition_gradient(&s, &u).unwrap();
        let h = 1e-5;
        for mcol in 0..3 {
            let mut sp = s;
            let mut sm = s;
            sp[mcol] += h;
            sm[mcol] -= h;
            let fd = (m.propagate_state(&sp, &u).unwrap() - m.propagate_state(&sm, &u).unwrap()) / (2.0 * h);
            for l in 0..3 {
                let scale = g[(l, mcol)].abs().max(1e-3);
                assert!((fd[l] - g[(l, mcol)]).abs() / scale < 1e-5);
            }
        }
    }

    #[test]
    fn selector_behaviour() {
        assert_eq!(measurement_select(&[1.0, 2.0, 3.0, 4.0], 2).unwrap(), &[3.0, 4.0]);
        assert_eq!(measurement_select(&[1.0, 2.0], 2).unwrap(), &[1.0, 2.0]);
        assert!(measurement_select(&[1.0], 2).is_err());
        let sel = SelectorMatrix::new(2, 4).unwrap();
        let v = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!((sel.to_matrix() * v).as_slice(), &[3.0, 4.0]);
    }

    #[test]
    fn selected_output_matches_matrix_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = random_model(&mut rng, 4, 3, 1);
        let s = [0.1, 0.0, -0.2];
        let out = m.propagate_state(&s, &[0.3]).unwrap();
        let k = DVector::from_vec(m.kernel_vector(&s, &[0.3]).unwrap());
        let brute = SelectorMatrix::new(2, 3).unwrap().to_matrix() * m.coefficients().transpose() * k;
        let sel = measurement_select(out.as_slice(), 2).unwrap();
        assert!((sel[0] - brute[0]).abs() < 1e-14 && (sel[1] - brute[1]).abs() < 1e-14);
    }

    #[test]
    fn add_center_grows_and_zero_rows_are_neutral() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut m = random_model(&mut rng, 1, 2, 1);
        let before = m.propagate_state(&[0.3, 0.1], &[0.2]).unwrap();
        m.add_center(&[0.3, 0.1], &[0.2], &[0.0, 0.0]).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.propagate_state(&[0.3, 0.1], &[0.2]).unwrap(), before);
        assert!(m.add_center(&[f64::NAN, 0.0], &[0.0], &[0.0, 0.0]).is_err());
        assert!(m.add_center(&[0.0], &[0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn duplicate_centers_cancel() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let base = random_model(&mut rng, 3, 2, 1);
        let mut m = base.clone();
        m.add_center(&[0.5, 0.5], &[0.1], &[1.5, -0.7]).unwrap();
        m.add_center(&[0.5, 0.5], &[0.1], &[-1.5, 0.7]).unwrap();
        for q in [[0.0, 0.0], [0.5, 0.4], [-1.0, 2.0]] {
            let a = base.propagate_state(&q, &[0.2]).unwrap();
            let b = m.propagate_state(&q, &[0.2]).unwrap();
            assert!((a - b).amax() < 1e-15);
        }
    }

    #[test]
    fn random_init_is_seeded() {
        let kp = KernelParams::new(1.0, 1.0).unwrap();
        let a = RkhsModel::random(kp, 3, 2, 1, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = RkhsModel::random(kp, 3, 2, 1, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 1);
        assert!(a.coeff_row(0).iter().all(|v| v.abs() < 1.0));
    }

    proptest! {
        #[test]
        fn output_change_bounded_by_gradient(seed in 0u64..200, eps in 1e-7f64..1e-4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_model(&mut rng, 6, 2, 1);
            let s = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let dir: [f64; 2] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let norm = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt().max(1e-9);
            let sp = [s[0] + eps * dir[0] / norm, s[1] + eps * dir[1] / norm];
            let lip = m.state_transition_gradient(&s, &[0.0]).unwrap().norm();
            let delta = (m.propagate_state(&sp, &[0.0]).unwrap() - m.propagate_state(&s, &[0.0]).unwrap()).norm();
            // first-order bound plus a curvature allowance
            prop_assert!(delta <= lip * eps * 1.01 + 50.0 * eps * eps);
        }

        #[test]
        fn select_of_concatenation_is_output(
            x in proptest::collection::vec(-5.0f64..5.0, 0..4),
            y in proptest::collection::vec(-5.0f64..5.0, 1..4),
        ) {
            let s: Vec<f64> = x.iter().chain(&y).copied().collect();
            prop_assert_eq!(measurement_select(&s, y.len()).unwrap(), y.as_slice());
        }
    }
}
