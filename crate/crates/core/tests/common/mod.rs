#![allow(dead_code)]

use fbf_core::filter::{FbfFilter, FbfHyperParams, RHO_MIN};
use fbf_core::kernel::{tensor_kernel, KernelParams};
use fbf_core::ssm::RkhsModel;
use nalgebra::{DMatrix, DVector};

pub fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = b.norm().max(a.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

pub fn rel_err_v(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    rel_err(
        &DMatrix::from_column_slice(a.len(), 1, a.as_slice()),
        &DMatrix::from_column_slice(b.len(), 1, b.as_slice()),
    )
}

/// Super-augmented filter over explicit feature-space coordinates.
///
/// The dictionary features are expressed in the orthonormal basis given by the incremental
/// Cholesky factor `L` of their Gram matrix, so each `ωₖ` is a finite coordinate vector and the
/// whole covariance `P` over `[s; ω₀; …; ω_{n_s−1}]` can be stored densely. After each update the
/// weight block is reset to `blockdiag((ρ⁻ₖ − ς²ₖ) I)`.
pub struct DenseOracle {
    kp: KernelParams,
    n_s: usize,
    n_y: usize,
    hp: FbfHyperParams,
    centers_s: Vec<Vec<f64>>,
    centers_u: Vec<Vec<f64>>,
    pub l: DMatrix<f64>,
    pub s: DVector<f64>,
    pub w: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub rho: DVector<f64>,
    pub k1: DMatrix<f64>,
}

impl DenseOracle {
    /// Built from the single initial center of `model`.
    pub fn new(model: &RkhsModel, hp: FbfHyperParams, s0: DVector<f64>) -> Self {
        assert_eq!(model.len(), 1);
        let n_s = model.n_s();
        let mut p = DMatrix::zeros(2 * n_s, 2 * n_s);
        for i in 0..n_s {
            p[(i, i)] = hp.sigma2_s;
            p[(n_s + i, n_s + i)] = hp.sigma2_omega;
        }
        Self {
            kp: *model.kernel_params(),
            n_s,
            n_y: model.n_y(),
            hp,
            centers_s: vec![model.center_s(0).to_vec()],
            centers_u: vec![model.center_u(0).to_vec()],
            l: DMatrix::identity(1, 1),
            s: s0,
            w: DMatrix::from_row_slice(1, n_s, model.coeff_row(0)),
            p,
            rho: DVector::from_element(n_s, hp.sigma2_omega),
            k1: DMatrix::zeros(n_s, model.n_y()),
        }
    }

    fn dim(&self) -> usize {
        self.l.nrows()
    }

    fn idx(&self, d: usize, k: usize, j: usize) -> usize {
        self.n_s + k * d + j
    }

    /// Cross-covariance between `s` and `ωₖ` in basis coordinates.
    pub fn p2(&self, k: usize) -> DMatrix<f64> {
        let d = self.dim();
        self.p.view((0, self.idx(d, k, 0)), (self.n_s, d)).into_owned()
    }

    pub fn p1(&self) -> DMatrix<f64> {
        self.p.view((0, 0), (self.n_s, self.n_s)).into_owned()
    }

    pub fn step(&mut self, u: &[f64], d: Option<&[f64]>) {
        let (n_s, n_y) = (self.n_s, self.n_y);
        let off = n_s - n_y;
        let dim = self.dim();
        let q = self.s.as_slice().to_vec();

        let k = DVector::from_fn(dim, |j, _| {
            tensor_kernel(&q, u, &self.centers_s[j], &self.centers_u[j], &self.kp).unwrap()
        });
        let dk = DMatrix::from_fn(dim, n_s, |j, m| {
            -2.0 * self.kp.a_s() * (q[m] - self.centers_s[j][m]) * k[j]
        });
        let lk = self.l.solve_lower_triangular(&k).unwrap();
        let ldk = self.l.solve_lower_triangular(&dk).unwrap();
        let tail = (1.0 - lk.norm_squared()).max(0.0).sqrt();
        let mut cq = lk.clone().insert_row(dim, 0.0);
        cq[dim] = tail;

        // extend the basis by the query direction
        let nd = dim + 1;
        let mut l = DMatrix::zeros(nd, nd);
        l.view_mut((0, 0), (dim, dim)).copy_from(&self.l);
        for j in 0..dim {
            l[(dim, j)] = lk[j];
        }
        l[(dim, dim)] = tail;
        let w = self.w.clone().insert_row(dim, 0.0);
        let n = n_s + n_s * nd;
        let mut p = DMatrix::zeros(n, n);
        let map = |i: usize| -> usize {
            if i < n_s {
                i
            } else {
                let (k, j) = ((i - n_s) / dim, (i - n_s) % dim);
                n_s + k * nd + j
            }
        };
        for a in 0..self.p.nrows() {
            for b in 0..self.p.ncols() {
                p[(map(a), map(b))] = self.p[(a, b)];
            }
        }
        for c in 0..n_s {
            let i = self.idx(nd, c, dim);
            p[(i, i)] = self.rho[c];
        }

        let s_prior = w.transpose() * &cq;
        let mut f = DMatrix::identity(n, n);
        let f1 = self.w.transpose() * ldk;
        f.view_mut((0, 0), (n_s, n_s)).copy_from(&f1);
        for c in 0..n_s {
            for j in 0..nd {
                f[(c, self.idx(nd, c, j))] = cq[j];
            }
        }
        let mut p_prior = &f * p * f.transpose();
        for i in 0..n {
            p_prior[(i, i)] += if i < n_s {
                self.hp.sigma2_s
            } else {
                self.hp.sigma2_omega
            };
        }
        let rho_prior = self.rho.add_scalar(self.hp.sigma2_omega);

        self.l = l;
        self.centers_s.push(q);
        self.centers_u.push(u.to_vec());
        match d {
            None => {
                self.s = s_prior;
                self.w = w;
                self.p = p_prior;
                self.rho = rho_prior;
                self.k1 = DMatrix::zeros(n_s, n_y);
            }
            Some(d) => {
                let mut smat = p_prior.view((off, off), (n_y, n_y)).into_owned();
                for i in 0..n_y {
                    smat[(i, i)] += self.hp.sigma2_y;
                }
                let nm = smat.try_inverse().unwrap();
                let hp_rows = p_prior.rows(off, n_y).into_owned();
                let kraw = hp_rows.transpose() * &nm;
                let e = DVector::from_column_slice(d) - s_prior.rows(off, n_y);
                let k1 = kraw.rows(0, n_s) * self.hp.eta_k1;
                self.s = &s_prior + &k1 * &e;
                let mut w = w;
                for c in 0..n_s {
                    let kc = kraw.rows(self.idx(nd, c, 0), nd);
                    let dw = kc * &e * self.hp.eta_k2;
                    for j in 0..nd {
                        w[(j, c)] += dw[j];
                    }
                }
                self.w = w;
                let mut post = DMatrix::zeros(n, n);
                let top = p_prior.rows(0, n_s) - &k1 * hp_rows;
                post.rows_mut(0, n_s).copy_from(&top);
                let left = top.columns(n_s, n - n_s).transpose();
                post.view_mut((n_s, 0), (n - n_s, n_s)).copy_from(&left);
                let p1 = post.view((0, 0), (n_s, n_s)).into_owned();
                let p1s = (&p1 + p1.transpose()) * 0.5;
                post.view_mut((0, 0), (n_s, n_s)).copy_from(&p1s);
                let mut rho = rho_prior.clone();
                for c in 0..n_s {
                    let l2 = p_prior.view((self.idx(nd, c, 0), off), (nd, n_y)).into_owned();
                    let varsigma = (&l2 * &nm * l2.transpose()).trace();
                    rho[c] = (rho_prior[c] - varsigma).max(RHO_MIN);
                    for j in 0..nd {
                        let i = self.idx(nd, c, j);
                        post[(i, i)] = rho[c];
                    }
                }
                self.p = post;
                self.rho = rho;
                self.k1 = k1;
            }
        }
    }

    /// Compares every block against `filter`; returns the worst relative error per block as
    /// `[P1, 𝕀P2, ρ, K1, s⁺, W]`.
    pub fn compare(&self, filter: &FbfFilter) -> [f64; 6] {
        let cov = filter.covariance();
        let off = self.n_s - self.n_y;
        let mut p2 = 0.0f64;
        for c in 0..self.n_s {
            let fac = cov.p2_posterior_factor(c) * &self.l;
            let mine = self.p2(c);
            p2 = p2.max(rel_err(
                &fac.rows(off, self.n_y).into_owned(),
                &mine.rows(off, self.n_y).into_owned(),
            ));
            p2 = p2.max(rel_err(&fac, &mine));
        }
        let w_model = self.l.transpose() * filter.model().coefficients();
        [
            rel_err(cov.p1(), &self.p1()),
            p2,
            rel_err_v(cov.rho(), &self.rho),
            rel_err(cov.k1_last(), &self.k1),
            rel_err_v(filter.state(), &self.s),
            rel_err(&w_model, &self.w),
        ]
    }
}
