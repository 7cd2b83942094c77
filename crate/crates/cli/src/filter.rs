use crate::output::{create, provenance, real, sha256_hex, Csv};
use crate::{io_err, CliError};
use fbf_core::filter::{read_checkpoint, write_checkpoint, FbfFilter, Recursion, StateFilter};
use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::Path;

fn load(path: &Path) -> Result<(FbfFilter, String), CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let filter = read_checkpoint(bytes.as_slice()).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok((filter, sha256_hex(&bytes)))
}

/// One parsed input row: the input and, when present, the measurement.
struct Row {
    u: Vec<f64>,
    d: Option<Vec<f64>>,
}

fn parse_row(rec: &csv::StringRecord, n_u: usize, n_y: usize) -> Result<Row, CliError> {
    let line = rec.position().map_or(0, |p| p.line());
    let bad = |msg: String| CliError::Usage(format!("input line {line}: {msg}"));
    if rec.len() != n_u && rec.len() != n_u + n_y {
        return Err(bad(format!(
            "expected {n_u} or {} fields, found {}",
            n_u + n_y,
            rec.len()
        )));
    }
    let num = |i: usize| -> Result<f64, CliError> {
        rec[i]
            .parse::<f64>()
            .map_err(|_| bad(format!("field {}: invalid number `{}`", i + 1, &rec[i])))
    };
    let u = (0..n_u).map(num).collect::<Result<Vec<_>, _>>()?;
    let d = if rec.len() == n_u || (n_u..rec.len()).all(|i| rec[i].is_empty()) {
        None
    } else {
        Some((n_u..rec.len()).map(num).collect::<Result<Vec<_>, _>>()?)
    };
    Ok(Row { u, d })
}

pub fn cmd_filter(
    model: &Path,
    input: &Path,
    out: Option<&Path>,
    adapt: bool,
    save: Option<&Path>,
) -> Result<(), CliError> {
    let (mut filter, hash) = load(model)?;
    let source: Box<dyn Read> = if input == Path::new("-") {
        Box::new(io::stdin().lock())
    } else {
        Box::new(BufReader::new(
            File::open(input).map_err(|e| CliError::Usage(format!("{}: {e}", input.display())))?,
        ))
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let head = provenance(None, &hash);
    let (sink, sink_name): (Box<dyn Write>, &Path) = match out {
        Some(p) => (Box::new(create(p, &head)?), p),
        None => {
            let mut w = io::BufWriter::new(io::stdout().lock());
            writeln!(w, "{head}").map_err(|e| io_err(Path::new("stdout"), e))?;
            (Box::new(w), Path::new("stdout"))
        }
    };
    let mut csv = Csv::new(sink, sink_name);

    let n_s = filter.n_s();
    let n_y = filter.n_y();
    let n_u = filter.model().n_u();
    let mut header = vec!["step".to_string()];
    header.extend((1..=n_y).map(|j| format!("y{j}")));
    header.extend((1..=n_y).map(|j| format!("var{j}")));
    csv.row(&header)?;

    let emit = |csv: &mut Csv<Box<dyn Write>>, step: usize, s: &[f64], var: &[f64]| {
        let mut row = vec![step.to_string()];
        row.extend(s[n_s - n_y..].iter().map(|v| real(*v)));
        row.extend(var.iter().map(|v| real(*v)));
        csv.row(row)
    };
    let output_var =
        |p1: &fbf_core::filter::CovarianceState| -> Vec<f64> { (n_s - n_y..n_s).map(|j| p1.p1()[(j, j)]).collect() };

    let mut step = 0;
    if adapt {
        for rec in reader.records() {
            let rec = rec.map_err(|e| CliError::Usage(format!("{}: {e}", input.display())))?;
            let row = parse_row(&rec, n_u, n_y)?;
            let r = filter.step(&row.u, row.d.as_deref())?;
            let var = output_var(filter.covariance());
            emit(&mut csv, step, r.s_post.as_slice(), &var)?;
            step += 1;
        }
        csv.finish()?;
        if let Some(path) = save {
            let mut w = create(path, &head)?;
            write_checkpoint(&filter, &mut w).map_err(|e| io_err(path, e))?;
            w.flush().map_err(|e| io_err(path, e))?;
        }
        return Ok(());
    }

    let hp = *filter.hyper_params();
    let s0 = filter.state().clone();
    let p0 = filter.covariance().p1().clone();
    let mut sf = StateFilter::new(filter.model(), hp, s0, p0)?;
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::Usage(format!("{}: {e}", input.display())))?;
        let row = parse_row(&rec, n_u, n_y)?;
        let st = sf.step(&row.u, row.d.as_deref())?;
        let var: Vec<f64> = (n_s - n_y..n_s).map(|j| st.p1_post[(j, j)]).collect();
        emit(&mut csv, step, st.s_post.as_slice(), &var)?;
        step += 1;
    }
    csv.finish()
}

pub fn cmd_inspect(path: &Path) -> Result<(), CliError> {
    let (f, hash) = load(path)?;
    let m = f.model();
    let kp = m.kernel_params();
    let hp = f.hyper_params();
    let opt = f.options();
    println!("format       {}", fbf_core::filter::CHECKPOINT_HEADER);
    println!("sha256       {hash}");
    println!("n_s n_u n_y  {} {} {}", m.n_s(), m.n_u(), m.n_y());
    println!("a_s a_u      {} {}", kp.a_s(), kp.a_u());
    println!("centers      {}", m.len());
    println!("steps        {}", f.step_count());
    println!(
        "hyper        sigma2_s={} sigma2_omega={} sigma2_y={} eta_k1={} eta_k2={}",
        hp.sigma2_s, hp.sigma2_omega, hp.sigma2_y, hp.eta_k1, hp.eta_k2
    );
    let rec = match opt.recursion {
        Recursion::Full => "full",
        Recursion::GradientDescent => "gd",
    };
    let max = opt
        .dictionary
        .max_size
        .map_or("unlimited".to_string(), |n| n.to_string());
    println!("recursion    {rec}");
    println!("dictionary   max={max} coherence={}", opt.dictionary.coherence);
    Ok(())
}
