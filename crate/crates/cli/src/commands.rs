use std::io::Write;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use kmrcd::kernel::{gram_matrix, median_heuristic_bandwidth};
use kmrcd::robust::robust_standardize;
use kmrcd::simulation::{run_replication, Contamination, Generator, SimResult, SimScenario};
use kmrcd::{fit as fit_kmrcd, FitInput, FitOptions, KernelChoice, KernelSpec, KmrcdFit, SubsetSize};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::io::{self, json_num, json_nums, num};
use crate::{ContaminationName, FitArgs, Format, GeneratorName, GramArgs, KernelName, SimulateArgs, SubsetArgs};

fn subset_size(args: &SubsetArgs) -> SubsetSize {
    match (args.h_fraction, args.h) {
        (Some(f), _) => SubsetSize::Fraction(f),
        (None, Some(h)) => SubsetSize::Count(h),
        (None, None) => SubsetSize::Default,
    }
}

fn kernel_choice(name: KernelName, sigma: Option<f64>) -> Result<KernelChoice> {
    if sigma.is_some() && name != KernelName::Rbf {
        bail!("--sigma only applies to the rbf kernel");
    }
    Ok(match name {
        KernelName::Linear => KernelSpec::Linear.into(),
        KernelName::Rbf => match sigma {
            Some(s) => KernelSpec::rbf(s)?.into(),
            None => KernelChoice::RbfMedianHeuristic,
        },
        KernelName::Poly2 => KernelSpec::polynomial(2, 1.0)?.into(),
        KernelName::Precomputed => bail!("the precomputed kernel needs a Gram matrix as input"),
    })
}

fn kernel_json(spec: &KernelSpec) -> Value {
    match *spec {
        KernelSpec::Linear => json!({ "name": "linear" }),
        KernelSpec::Rbf { sigma } => json!({ "name": "rbf", "sigma": json_num(sigma) }),
        KernelSpec::Polynomial { degree, offset } => {
            json!({ "name": "polynomial", "degree": degree, "offset": json_num(offset) })
        }
        KernelSpec::Precomputed => json!({ "name": "precomputed" }),
    }
}

fn log_bandwidth(spec: &KernelSpec) {
    if let KernelSpec::Rbf { sigma } = spec {
        eprintln!("rbf bandwidth sigma = {}", num(*sigma));
    }
}

fn report(fit: &KmrcdFit) -> Value {
    let standardization = match &fit.standardization {
        Some(s) => json!({
            "location": json_nums(s.locations()),
            "scale": json_nums(s.scales()),
        }),
        None => Value::Null,
    };
    json!({
        "n": fit.n(),
        "h": fit.h,
        "kernel": kernel_json(&fit.kernel),
        "rho": json_num(fit.rho),
        "objective": json_num(fit.objective),
        "cutoff": json_num(fit.cutoff),
        "condition_number": json_num(fit.condition_number()),
        "subset_indices": fit.subset.indices(),
        "outlier_indices": fit.outlier_indices(),
        "standardization": standardization,
    })
}

fn joined<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn write_report_csv(dir: &Path, fit: &KmrcdFit) -> Result<()> {
    let mut w = io::create(dir, "report.csv")?;
    writeln!(w, "key,value")?;
    writeln!(w, "n,{}", fit.n())?;
    writeln!(w, "h,{}", fit.h)?;
    writeln!(w, "kernel,{}", kernel_json(&fit.kernel)["name"].as_str().unwrap_or_default())?;
    for (key, v) in [
        ("rho", fit.rho),
        ("objective", fit.objective),
        ("cutoff", fit.cutoff),
        ("condition_number", fit.condition_number()),
    ] {
        writeln!(w, "{key},{}", num(v))?;
    }
    if let KernelSpec::Rbf { sigma } = fit.kernel {
        writeln!(w, "sigma,{}", num(sigma))?;
    }
    writeln!(w, "subset_indices,{}", joined(fit.subset.indices()))?;
    writeln!(w, "outlier_indices,{}", joined(fit.outlier_indices()))?;
    if let Some(s) = &fit.standardization {
        writeln!(w, "location,{}", joined(s.locations().into_iter().map(num)))?;
        writeln!(w, "scale,{}", joined(s.scales().into_iter().map(num)))?;
    }
    w.flush()?;
    Ok(())
}

fn write_distances(dir: &Path, fit: &KmrcdFit) -> Result<()> {
    let mut w = io::create(dir, "distances.csv")?;
    writeln!(w, "index,distance,flag")?;
    for (i, (d, f)) in fit.distances.iter().zip(&fit.flags).enumerate() {
        writeln!(w, "{i},{},{}", num(*d), u8::from(*f))?;
    }
    w.flush()?;
    Ok(())
}

fn write_linear(dir: &Path, fit: &KmrcdFit) -> Result<()> {
    let Some(est) = fit.linear_estimates_original() else {
        return Ok(());
    };
    io::write_matrix(dir, "center.csv", est.center.iter().map(std::slice::from_ref))?;
    let p = est.covariance.nrows();
    let rows: Vec<Vec<f64>> = (0..p).map(|i| est.covariance.row(i).iter().copied().collect()).collect();
    io::write_matrix(dir, "covariance.csv", rows.iter().map(Vec::as_slice))
}

fn write_contour(dir: &Path, fit: &KmrcdFit, data: &kmrcd::DataMatrix, grid: usize) -> Result<()> {
    if data.p() != 2 {
        bail!("--contour-grid needs two-column data, got {} columns", data.p());
    }
    if grid < 2 {
        bail!("--contour-grid needs at least 2 points per axis");
    }
    let axis = |j: usize| -> Vec<f64> {
        let col: Vec<f64> = data.matrix().column(j).iter().copied().collect();
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let pad = 0.1 * (hi - lo);
        let (lo, hi) = (lo - pad, hi + pad);
        (0..grid).map(|k| lo + (hi - lo) * k as f64 / (grid - 1) as f64).collect()
    };
    let (xs, ys) = (axis(0), axis(1));
    let mut w = io::create(dir, "contour.csv")?;
    writeln!(w, "x,y,distance")?;
    for &y in &ys {
        for &x in &xs {
            writeln!(w, "{},{},{}", num(x), num(y), num(fit.distance_to(&[x, y])?))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `fit` and `detect`; `detect` additionally writes distances, flags and the optional grid.
pub fn fit(args: &FitArgs, detect: bool) -> Result<()> {
    let options = FitOptions {
        h: subset_size(&args.subset),
        seed: args.seed,
        ..FitOptions::default()
    };
    let (fitted, data) = if args.kernel == KernelName::Precomputed {
        if args.sigma.is_some() {
            bail!("--sigma cannot be combined with a precomputed kernel");
        }
        if args.contour_grid.is_some() {
            bail!("--contour-grid needs coordinate input");
        }
        let gram = io::read_gram(&args.input)?;
        (fit_kmrcd(FitInput::Gram(&gram), &options)?, None)
    } else {
        let data = io::read_data(&args.input)?;
        let kernel = kernel_choice(args.kernel, args.sigma)?;
        let fitted = fit_kmrcd(FitInput::Coordinates { data: &data, kernel }, &options)?;
        (fitted, Some(data))
    };
    log_bandwidth(&fitted.kernel);
    let dir = &args.output_dir;
    match args.format {
        Format::Json => io::write_json(dir, "report.json", &report(&fitted))?,
        Format::Csv => write_report_csv(dir, &fitted)?,
    }
    write_linear(dir, &fitted)?;
    if detect {
        write_distances(dir, &fitted)?;
        if let (Some(g), Some(data)) = (args.contour_grid, &data) {
            write_contour(dir, &fitted, data, g)?;
        }
    } else if args.contour_grid.is_some() {
        bail!("--contour-grid is only available for detect");
    }
    Ok(())
}

pub fn gram(args: &GramArgs) -> Result<()> {
    let data = io::read_data(&args.input)?;
    let z = if args.no_standardize {
        data
    } else {
        robust_standardize(&data)
            .with_context(|| format!("cannot standardize {}", args.input.display()))?
            .0
    };
    let spec = match kernel_choice(args.kernel, args.sigma)? {
        KernelChoice::Fixed(spec) => spec,
        KernelChoice::RbfMedianHeuristic if args.no_standardize => {
            bail!("--no-standardize with the rbf kernel needs an explicit --sigma")
        }
        KernelChoice::RbfMedianHeuristic => KernelSpec::rbf(median_heuristic_bandwidth(&z)?)?,
    };
    log_bandwidth(&spec);
    let k = gram_matrix(&spec, &z)?;
    let n = k.n();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| k.entries().row(i).iter().copied().collect()).collect();
    io::write_matrix(&args.output_dir, "gram.csv", rows.iter().map(Vec::as_slice))
}

fn threads() -> Result<usize> {
    match std::env::var("KMRCD_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .with_context(|| format!("KMRCD_THREADS must be a nonnegative integer, got {v:?}")),
        Err(_) => Ok(0),
    }
}

enum Cell {
    Int(usize),
    Float(f64),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => num(*v),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) => json_num(*v),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

fn mean(values: impl IntoIterator<Item = f64>) -> Cell {
    let v: Vec<f64> = values.into_iter().collect();
    if v.is_empty() {
        Cell::Empty
    } else {
        Cell::Float(v.iter().sum::<f64>() / v.len() as f64)
    }
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let generator = match args.generator {
        GeneratorName::Alyz => Generator::AlyzGaussian,
        GeneratorName::Tcopula => Generator::parse("tcopula")?,
        GeneratorName::Clayton => Generator::parse("clayton")?,
        GeneratorName::Circle => Generator::Circle,
    };
    let contamination = match args.contamination {
        Some(ContaminationName::None) => Contamination::None,
        Some(ContaminationName::Point) => Contamination::Point,
        Some(ContaminationName::Shift) => Contamination::Shift,
        Some(ContaminationName::Cluster) => Contamination::Cluster,
        None if generator == Generator::AlyzGaussian && args.eps > 0.0 => Contamination::Shift,
        None => Contamination::None,
    };
    let kernel_name = args.kernel.unwrap_or(match generator {
        Generator::AlyzGaussian => KernelName::Linear,
        Generator::Circle => KernelName::Poly2,
        _ => KernelName::Rbf,
    });
    let kernel = kernel_choice(kernel_name, args.sigma)?;
    let h = subset_size(&args.subset);
    let scenario = SimScenario {
        n: args.n,
        p: args.p,
        epsilon: args.eps,
        contamination,
        generator,
        seed: args.seed,
    };
    scenario.validate()?;

    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads()?).build()?;
    let runs: Vec<(SimResult, f64)> = pool.install(|| {
        (0..args.reps)
            .into_par_iter()
            .map(|rep| {
                let start = Instant::now();
                let result = run_replication(&scenario, rep, kernel, h)
                    .with_context(|| format!("replication {rep} failed"))?;
                Ok((result, start.elapsed().as_secs_f64()))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let fixed = |rep: Cell| -> Vec<(&'static str, Cell)> {
        vec![
            ("rep", rep),
            ("generator", Cell::Text(generator.name().into())),
            ("contamination", Cell::Text(contamination.name().into())),
            ("kernel", Cell::Text(format!("{kernel_name:?}").to_lowercase())),
            ("n", Cell::Int(args.n)),
            ("p", Cell::Int(args.p)),
            ("epsilon", Cell::Float(args.eps)),
            ("seed", Cell::Text(args.seed.to_string())),
        ]
    };
    let mut rows: Vec<Vec<(&'static str, Cell)>> = Vec::with_capacity(runs.len() + 1);
    for (rep, (r, secs)) in runs.iter().enumerate() {
        let mut row = fixed(Cell::Int(rep));
        row.extend([
            ("h", Cell::Int(r.fit.h)),
            ("rho", Cell::Float(r.fit.rho)),
            ("objective", Cell::Float(r.fit.objective)),
            ("kl", r.kl.map_or(Cell::Empty, Cell::Float)),
            ("mse", r.mse.map_or(Cell::Empty, Cell::Float)),
            ("outliers_in_h", Cell::Int(r.outliers_in_h)),
            ("outliers_in_top", Cell::Int(r.outliers_in_top)),
            ("n_outliers", Cell::Int(r.n_outliers)),
            ("n_flagged", Cell::Int(r.fit.outlier_indices().len())),
        ]);
        if args.timings {
            row.push(("runtime_s", Cell::Float(*secs)));
        }
        rows.push(row);
    }
    if !runs.is_empty() {
        let m = |f: &dyn Fn(&SimResult) -> Option<f64>| mean(runs.iter().filter_map(|(r, _)| f(r)));
        let mut row = fixed(Cell::Text("mean".into()));
        row.extend([
            ("h", m(&|r| Some(r.fit.h as f64))),
            ("rho", m(&|r| Some(r.fit.rho))),
            ("objective", m(&|r| Some(r.fit.objective))),
            ("kl", m(&|r| r.kl)),
            ("mse", m(&|r| r.mse)),
            ("outliers_in_h", m(&|r| Some(r.outliers_in_h as f64))),
            ("outliers_in_top", m(&|r| Some(r.outliers_in_top as f64))),
            ("n_outliers", m(&|r| Some(r.n_outliers as f64))),
            ("n_flagged", m(&|r| Some(r.fit.outlier_indices().len() as f64))),
        ]);
        if args.timings {
            row.push(("runtime_s", mean(runs.iter().map(|(_, s)| *s))));
        }
        rows.push(row);
    }

    let mut header: Vec<&str> = fixed(Cell::Empty).iter().map(|(k, _)| *k).collect();
    header.extend([
        "h",
        "rho",
        "objective",
        "kl",
        "mse",
        "outliers_in_h",
        "outliers_in_top",
        "n_outliers",
        "n_flagged",
    ]);
    if args.timings {
        header.push("runtime_s");
    }
    match args.format {
        Format::Csv => {
            let mut w = io::create(&args.output_dir, "simulation.csv")?;
            writeln!(w, "{}", header.join(","))?;
            for row in &rows {
                let cells: Vec<String> = row.iter().map(|(_, c)| c.csv()).collect();
                writeln!(w, "{}", cells.join(","))?;
            }
            w.flush()?;
        }
        Format::Json => {
            let items: Vec<Value> = rows
                .iter()
                .map(|row| Value::Object(row.iter().map(|(k, c)| (k.to_string(), c.json())).collect::<Map<_, _>>()))
                .collect();
            io::write_json(&args.output_dir, "simulation.json", &Value::Array(items))?;
        }
    }
    Ok(())
}
