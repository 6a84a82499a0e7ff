//! One runner per study: each returns a JSON report, CSV tables and an overall verdict.

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use radfock::casestudies::{
    admissible_slopes, build_counterexample_moments, convexity_screen, debranges_ratio, gaussian_log_moments,
    obstruction_functional, square_lattice, t2_sections, verify_t2_chain,
};
use radfock::genfun::GenFun;
use radfock::io::{fmt_f64, write_rows};
use radfock::kernels::{kernel_norm_diagnostics, DiagnosticMode, DiagnosticOptions, Point, PointSet};
use radfock::moments::{build_table, default_spec, laplace_check, MomentTable};
use radfock::rieszlab::{assemble_kernel_gram, block_norm_scan, circulant_analysis, circulant_coefficients, nested_riesz, Trend};
use radfock::weightlab::{Family, LacunarySequence, Regime, Weight};
use radfock::{Complex, QuadratureSpec};
use serde_json::{json, Value};

use crate::config::{quadratic, ExperimentConfig, Study};

pub struct Table {
    pub name: String,
    pub bytes: Vec<u8>,
}

pub struct StudyOutput {
    pub report: Value,
    pub tables: Vec<Table>,
    pub pass: bool,
}

fn table(name: &str, header: &[&str], rows: Vec<Vec<String>>) -> anyhow::Result<Table> {
    let mut bytes = Vec::new();
    write_rows(&mut bytes, header, rows)?;
    Ok(Table { name: format!("{name}.csv"), bytes })
}

fn f(x: f64) -> String {
    fmt_f64(x)
}

fn spec(cfg: &ExperimentConfig) -> QuadratureSpec {
    let mut s = default_spec();
    s.rel_tol = cfg.tolerances.quadrature;
    s
}

pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<StudyOutput> {
    match cfg.study {
        Study::T1Obstruction => t1_obstruction(cfg),
        Study::T2Chain => t2_chain(cfg),
        Study::T3Suite => t3_suite(cfg),
        Study::Circulant => circulant(cfg),
        Study::Moments => moments(cfg),
        Study::Gram => gram(cfg),
        Study::Convexity => convexity(cfg),
    }
}

fn t1_obstruction(cfg: &ExperimentConfig) -> anyhow::Result<StudyOutput> {
    let p = &cfg.params;
    let r = p.r.unwrap_or(200.0);
    let a = p.a.unwrap_or(2.0);
    let spacing = p.spacing.unwrap_or(1.0);
    let ns = p.n_list.clone().unwrap_or_else(|| vec![4, 8, 16, 32]);
    let rho = match p.rho {
        Some(rho) => rho,
        None => {
            let w = cfg.weight_or(|| Weight::power(2.0).unwrap())?;
            w.rho(r)?.ok_or_else(|| anyhow::anyhow!("Laplacian of h is not positive at R = {r}"))?
        }
    };
    // the seed places the lattice inside one cell
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let jitter = Complex::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) * (0.5 * spacing * rho);
    let n_max = ns.iter().copied().max().unwrap_or(0) as f64;
    let ps = square_lattice(Complex::new(r, 0.0) + jitter, spacing * rho, (n_max + 2.0) * rho)?;
    let rep = obstruction_functional(&ps, r, a, rho, &ns)?;
    let rows = rep
        .rows
        .iter()
        .map(|w| vec![w.n.to_string(), f(w.inf), f(w.reference), w.points_used.to_string(), w.grid_points.to_string()])
        .collect();
    Ok(StudyOutput {
        pass: rep.pass,
        tables: vec![table("obstruction", &["n", "inf", "reference", "points_used", "grid_points"], rows)?],
        report: json!({ "study": "t1-obstruction", "spacing": spacing, "jitter": [jitter.re, jitter.im], "obstruction": rep }),
    })
}

fn t2_chain(cfg: &ExperimentConfig) -> anyhow::Result<StudyOutput> {
    let p = &cfg.params;
    let w = cfg.weight_or(quadratic)?;
    let n = p.n.unwrap_or(25);
    let chain = verify_t2_chain(&w, n, p.delta.unwrap_or(0.1))?;
    let sizes = p.sizes.clone().unwrap_or_else(|| vec![5, 10, 15, 20, 25]);
    let sections = t2_sections(&w, &sizes, p.table_len.unwrap_or(80))?;
    let rows = chain
        .rows
        .iter()
        .map(|r| {
            let mut v = vec![r.n.to_string()];
            v.extend([r.y, r.b, r.c, r.d, r.e, r.es2, r.et1, r.et2, r.et3, r.log_mass].map(f));
            v
        })
        .collect();
    let srows = sections.sections.iter().map(|s| vec![s.size.to_string(), f(s.lambda_min), f(s.lambda_max), f(s.condition)]).collect();
    Ok(StudyOutput {
        pass: chain.pass && sections.trend == Some(Trend::Plateau),
        tables: vec![
            table("chain", &["n", "y", "b", "c", "d", "e", "es2", "et1", "et2", "et3", "log_mass"], rows)?,
            table("sections", &["size", "lambda_min", "lambda_max", "condition"], srows)?,
        ],
        report: json!({ "study": "t2-chain", "weight": w.family_name(), "chain": chain, "sections": sections }),
    })
}

fn t3_suite(cfg: &ExperimentConfig) -> anyhow::Result<StudyOutput> {
    let w = cfg.weight_or(|| Weight::theorem3(LacunarySequence::squaring(5)))?;
    let Family::Lacunary(seq) = w.family() else {
        anyhow::bail!("t3-suite needs the theorem3 weight family, got {}", w.family_name());
    };
    let depth = seq.depth();
    let g = GenFun::t3_product(seq, depth)?;
    let tab = build_table(&w, cfg.params.table_len.unwrap_or(4 * g.degree().max(10)), &spec(cfg))?;
    let [lo, hi] = cfg.params.n_range.unwrap_or([3, depth]);
    let blocks = block_norm_scan(&g, &tab, 1..=depth)?;
    let exy = kernel_norm_diagnostics(&tab, &w, DiagnosticMode::Exy { n_lo: 1, n_hi: depth }, DiagnosticOptions::default())?;
    let deb = debranges_ratio(&g, &tab, lo..=hi)?;
    let brows = blocks.rows.iter().map(|b| vec![b.n.to_string(), f(b.log_r), f(b.log_norm), f(b.scaled), b.cancelled.to_string()]).collect();
    let erows = exy.abscissae.iter().zip(&exy.ratios).map(|(n, r)| vec![f(*n), f(*r)]).collect();
    let drows = deb.rows.iter().map(|r| vec![r.n.to_string(), f(r.log_r), f(r.q), f(r.real_axis_dev)]).collect();
    Ok(StudyOutput {
        pass: blocks.pass && exy.pass && deb.pass,
        tables: vec![
            table("block_norms", &["n", "log_r", "log_norm", "scaled", "cancelled"], brows)?,
            table("exy", &["n", "ratio"], erows)?,
            table("debranges", &["n", "log_r", "q", "real_axis_dev"], drows)?,
        ],
        report: json!({ "study": "t3-suite", "depth": depth, "block_norms": blocks, "exy": exy, "debranges": deb }),
    })
}

fn circulant(cfg: &ExperimentConfig) -> anyhow::Result<StudyOutput> {
    let n_max = cfg.params.n_max.unwrap_or(64);
    let mut rows = Vec::with_capacity(n_max);
    let mut worst = 0.0f64;
    let mut exact = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let rep = circulant_analysis::<f64>(n)?;
        let a: Vec<Ratio<i64>> = circulant_coefficients(n);
        let top = a.iter().copied().max().unwrap();
        let opnorm = top * Ratio::from_integer(n as i64);
        worst = worst.max(rep.max_mismatch);
        rows.push(vec![n.to_string(), f(rep.opnorm), opnorm.to_string(), f(rep.max_mismatch)]);
        exact.push(json!({ "n": n, "opnorm": opnorm.to_string(), "float_opnorm": rep.opnorm, "max_mismatch": rep.max_mismatch }));
    }
    Ok(StudyOutput {
        pass: worst <= cfg.tolerances.compare,
        tables: vec![table("circulant", &["n", "opnorm", "opnorm_exact", "max_mismatch"], rows)?],
        report: json!({ "study": "circulant", "n_max": n_max, "max_mismatch": worst, "rows": exact }),
    })
}

fn moments(cfg: &ExperimentConfig) -> anyhow::Result<StudyOutput> {
    let w = cfg.weight_or(|| Weight::power(2.0).unwrap())?;
    let n_max = cfg.params.n_max.unwrap_or(40);
    let tab = build_table(&w, n_max, &spec(cfg))?;
    let mut checks = serde_json::Map::new();
    let mut pass = (0..tab.len()).all(|n| tab.log_m(n).is_finite());
    if let Family::PowerExponent { beta } = w.family() {
        if *beta == 2.0 {
            // m_n = π n!
            let exact = gaussian_log_moments(n_max);
            let err = (0..=n_max).map(|n| ((tab.log_m(n) - exact[n]) / exact[n].abs().max(1.0)).abs()).fold(0.0, f64::max);
            pass &= err <= cfg.tolerances.compare;
            checks.insert("closed_form_max_rel_err".into(), json!(err));
        }
    }
    if radfock::weightlab::classify(&w, radfock::weightlab::ProbeWindow::new(tab.y[0], tab.y[n_max].max(tab.y[0] + 1.0), 64))?.regime
        == Regime::T2Like
    {
        let lap = laplace_check(&tab)?;
        pass &= lap.pass;
        checks.insert("laplace".into(), serde_json::to_value(&lap)?);
    }
    Ok(StudyOutput {
        pass,
        tables: vec![moment_table(&tab)?],
        report: json!({ "study": "moments", "weight": w.family_name(), "n_max": n_max, "rel_err": tab.rel_err, "checks": checks }),
    })
}

fn moment_table(tab: &MomentTable) -> anyhow::Result<Table> {
    let mut bytes = Vec::new();
    tab.write_csv(&mut bytes)?;
    Ok(Table { name: "moments.csv".into(), bytes })
}

fn gram(cfg: &ExperimentConfig) -> anyhow::Result<StudyOutput> {
    let w = cfg.weight_or(quadratic)?;
    let sizes = cfg.params.sizes.clone().unwrap_or_else(|| vec![5, 10, 15, 20, 25]);
    let n = *sizes.last().ok_or_else(|| anyhow::anyhow!("field params.sizes: empty"))?;
    let tab = build_table(&w, cfg.params.table_len.unwrap_or(80).max(n), &spec(cfg))?;
    let pts = tab.y[..n].iter().map(|&y| Point::new(y, 0.0)).collect();
    let g = assemble_kernel_gram(&tab, &PointSet::new(pts, "laplace")?)?;
    let rep = nested_riesz(&g, &sizes)?;
    let mut bytes = Vec::new();
    g.write_csv(&mut bytes)?;
    let srows = rep.sections.iter().map(|s| vec![s.size.to_string(), f(s.lambda_min), f(s.lambda_max), f(s.condition)]).collect();
    Ok(StudyOutput {
        pass: rep.trend == Some(Trend::Plateau),
        tables: vec![Table { name: "gram.csv".into(), bytes }, table("sections", &["size", "lambda_min", "lambda_max", "condition"], srows)?],
        report: json!({ "study": "gram", "weight": w.family_name(), "max_truncation": g.max_truncation, "riesz": rep }),
    })
}

fn convexity(cfg: &ExperimentConfig) -> anyhow::Result<StudyOutput> {
    let p = &cfg.params;
    let windows = p.windows.clone().unwrap_or_else(|| vec![50, 100, 200]);
    let n_max = windows.iter().copied().max().unwrap_or(0) + 1;
    let source = p.source.as_deref().unwrap_or("gaussian");
    let mut tables = Vec::new();
    let mut extra = json!(null);
    let seq = match source {
        "gaussian" => gaussian_log_moments(n_max),
        "weight" => {
            let tab = build_table(&cfg.weight()?, n_max, &spec(cfg))?;
            tables.push(moment_table(&tab)?);
            (0..tab.len()).map(|n| tab.log_m(n)).collect()
        }
        "counterexample" => {
            let t = p.t.clone().unwrap_or_else(|| vec![2, 8, 60]);
            let s = p.s.clone().unwrap_or_else(|| admissible_slopes(&t));
            let c = build_counterexample_moments(&t, &s, n_max)?;
            let rows = (0..c.p.len()).map(|n| vec![n.to_string(), f(c.p[n]), f(c.prediction[n])]).collect();
            tables.push(table("counterexample", &["n", "p", "prediction"], rows)?);
            extra = json!({ "t": c.t, "s": c.s, "max_deviation": c.max_deviation });
            c.p
        }
        other => anyhow::bail!("field params.source: unknown source {other:?} (expected gaussian, weight or counterexample)"),
    };
    let expect = p.expect_monotone.unwrap_or(source != "counterexample");
    let rep = convexity_screen(&seq, expect, &windows)?;
    let rows = rep.windows.iter().map(|(n, d)| vec![n.to_string(), f(*d)]).collect();
    tables.insert(0, table("convexity", &["window", "defect"], rows)?);
    Ok(StudyOutput {
        pass: rep.consistent,
        tables,
        report: json!({ "study": "convexity", "source": source, "screen": rep, "counterexample": extra }),
    })
}

/// `(name, required parameters, runtime class)` in catalog order.
pub fn catalog() -> Vec<(Study, &'static str, &'static str)> {
    Study::ALL
        .iter()
        .map(|&s| {
            let (params, class) = match s {
                Study::T1Obstruction => ("A, beta (params.spacing), N-list (params.n_list), R, rho", "seconds"),
                Study::T2Chain => ("weight (T2), N, delta, section sizes, table_len", "seconds"),
                Study::T3Suite => ("weight theorem3 (radii or depth), n_range, table_len", "seconds"),
                Study::Circulant => ("n_max", "sub-second"),
                Study::Moments => ("weight, n_max", "sub-second"),
                Study::Gram => ("weight, section sizes, table_len", "seconds"),
                Study::Convexity => ("source (gaussian, weight, counterexample), t, s, windows, expect_monotone", "sub-second"),
            };
            (s, params, class)
        })
        .collect()
}
