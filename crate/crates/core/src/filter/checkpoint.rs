//! Filter checkpoints: the model block followed by the covariance state.
//!
//! ```text
//! FBF-CKPT v1
//! <FBF-MODEL block>
//! COV
//! HP <σ²_s> <σ²_Ω> <σ²_y> <η_K1> <η_K2>
//! OPTIONS <full|gd> <max_size, 0 = unlimited> <coherence>
//! STEP <count>
//! STATE
//! <s>
//! P1
//! <n_s rows>
//! RHO
//! <ρ>
//! K1
//! <n_s rows of n_y>
//! V <k>                  # for each component, n_s rows of N
//! ```
//!
//! `Z` is rebuilt from `V` and the dictionary Gram matrix on load.

use super::{CovarianceState, DictionaryPolicy, FbfFilter, FbfHyperParams, FbfOptions, Recursion};
use crate::error::Result;
use crate::ssm::format::{read_model_from, write_reals, Line, LineReader};
use crate::ssm::write_model;
use nalgebra::{DMatrix, DVector};
use std::io::{self, BufRead, Write};

pub const CHECKPOINT_HEADER: &str = "FBF-CKPT";

fn write_matrix<W: Write>(w: &mut W, m: &DMatrix<f64>) -> io::Result<()> {
    for r in 0..m.nrows() {
        let row: Vec<f64> = m.row(r).iter().copied().collect();
        write_reals(w, &row)?;
    }
    Ok(())
}

pub fn write_checkpoint<W: Write>(filter: &FbfFilter, w: &mut W) -> io::Result<()> {
    writeln!(w, "{CHECKPOINT_HEADER} v1")?;
    write_model(filter.model(), w)?;
    writeln!(w, "COV")?;
    let hp = filter.hyper_params();
    write!(w, "HP ")?;
    write_reals(w, &[hp.sigma2_s, hp.sigma2_omega, hp.sigma2_y, hp.eta_k1, hp.eta_k2])?;
    let opts = filter.options();
    let mode = match opts.recursion {
        Recursion::Full => "full",
        Recursion::GradientDescent => "gd",
    };
    writeln!(
        w,
        "OPTIONS {mode} {} {:.16e}",
        opts.dictionary.max_size.unwrap_or(0),
        opts.dictionary.coherence
    )?;
    writeln!(w, "STEP {}", filter.step_count())?;
    let cov = filter.covariance();
    writeln!(w, "STATE")?;
    write_reals(w, filter.state().as_slice())?;
    writeln!(w, "P1")?;
    write_matrix(w, &cov.p1)?;
    writeln!(w, "RHO")?;
    write_reals(w, cov.rho.as_slice())?;
    writeln!(w, "K1")?;
    write_matrix(w, &cov.k1_last)?;
    for (k, v) in cov.v.iter().enumerate() {
        writeln!(w, "V {k}")?;
        write_matrix(w, v)?;
    }
    Ok(())
}

fn keyword_line<R: BufRead>(lines: &mut LineReader<R>, keyword: &str) -> Result<Line> {
    let line = lines.expect_line(keyword)?;
    let mut f = line.fields();
    line.expect_keyword(&mut f, keyword)?;
    Ok(line)
}

fn read_matrix<R: BufRead>(lines: &mut LineReader<R>, rows: usize, cols: usize, what: &str) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(rows, cols);
    for r in 0..rows {
        let line = lines.expect_line(what)?;
        let vals = line.reals(cols)?;
        for (c, v) in vals.into_iter().enumerate() {
            m[(r, c)] = v;
        }
    }
    Ok(m)
}

pub fn read_checkpoint<R: BufRead>(reader: R) -> Result<FbfFilter> {
    let mut lines = LineReader::new(reader);
    let header = lines.expect_line("checkpoint header")?;
    let mut f = header.fields();
    header.expect_keyword(&mut f, CHECKPOINT_HEADER)?;
    header.expect_keyword(&mut f, "v1")?;
    header.expect_end(&mut f)?;

    let model = read_model_from(&mut lines)?;
    let (n_s, n_y, n) = (model.n_s(), model.n_y(), model.len());
    let cov_line = lines.expect_line("COV")?;
    let mut f = cov_line.fields();
    cov_line.expect_keyword(&mut f, "COV")?;
    cov_line.expect_end(&mut f)?;

    let hp_line = lines.expect_line("HP")?;
    let mut f = hp_line.fields();
    hp_line.expect_keyword(&mut f, "HP")?;
    let mut hp_vals = [0.0; 5];
    for (slot, name) in hp_vals
        .iter_mut()
        .zip(["sigma2_s", "sigma2_omega", "sigma2_y", "eta_k1", "eta_k2"])
    {
        *slot = hp_line.parse_next(&mut f, name)?;
    }
    hp_line.expect_end(&mut f)?;
    let hp = FbfHyperParams {
        sigma2_s: hp_vals[0],
        sigma2_omega: hp_vals[1],
        sigma2_y: hp_vals[2],
        eta_k1: hp_vals[3],
        eta_k2: hp_vals[4],
    };
    hp.validate().map_err(|e| hp_line.error(1, &e.to_string()))?;

    let opt_line = lines.expect_line("OPTIONS")?;
    let mut f = opt_line.fields();
    opt_line.expect_keyword(&mut f, "OPTIONS")?;
    let recursion = match f.next() {
        Some((_, "full")) => Recursion::Full,
        Some((_, "gd")) => Recursion::GradientDescent,
        Some((col, other)) => return Err(opt_line.error(col, &format!("unknown recursion `{other}`"))),
        None => return Err(opt_line.error(opt_line.text.len() + 1, "missing recursion")),
    };
    let max_size: usize = opt_line.parse_next(&mut f, "max_size")?;
    let coherence: f64 = opt_line.parse_next(&mut f, "coherence")?;
    opt_line.expect_end(&mut f)?;
    let options = FbfOptions {
        recursion,
        dictionary: DictionaryPolicy {
            max_size: (max_size > 0).then_some(max_size),
            coherence,
        },
    };

    let step_line = lines.expect_line("STEP")?;
    let mut f = step_line.fields();
    step_line.expect_keyword(&mut f, "STEP")?;
    let step: usize = step_line.parse_next(&mut f, "step count")?;
    step_line.expect_end(&mut f)?;

    keyword_line(&mut lines, "STATE")?;
    let s = DVector::from_vec(lines.expect_line("state")?.reals(n_s)?);
    keyword_line(&mut lines, "P1")?;
    let p1 = read_matrix(&mut lines, n_s, n_s, "P1 row")?;
    keyword_line(&mut lines, "RHO")?;
    let rho = DVector::from_vec(lines.expect_line("rho")?.reals(n_s)?);
    keyword_line(&mut lines, "K1")?;
    let k1_last = read_matrix(&mut lines, n_s, n_y, "K1 row")?;

    let gram = DMatrix::from_fn(n, n, |i, j| model.center_kernel(i, j));
    let mut v = Vec::with_capacity(n_s);
    let mut z = Vec::with_capacity(n_s);
    for k in 0..n_s {
        let line = lines.expect_line("V")?;
        let mut f = line.fields();
        line.expect_keyword(&mut f, "V")?;
        let idx: usize = line.parse_next(&mut f, "component")?;
        if idx != k {
            return Err(line.error(3, &format!("expected component {k}, found {idx}")));
        }
        let vk = read_matrix(&mut lines, n_s, n, "V row")?;
        z.push(&vk * &gram * vk.transpose());
        v.push(vk);
    }
    if let Some(extra) = lines.next_line()? {
        return Err(extra.error(1, "unexpected content after checkpoint"));
    }
    let cov = CovarianceState { p1, v, z, rho, k1_last };
    Ok(FbfFilter::from_parts(model, cov, s, hp, options, step))
}
