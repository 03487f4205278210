//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs without the libtest harness so the lines always
//! reach the terminal.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use coordlab::code::{
    binning_lemma_verify, build_binning, experiment, rb_encoders, rb_joint, rc_joint, tv_rb_rc, BinRounding,
    ExperimentReport, Granularity, LemmaKind, Metric, RunSpec, SourceSpec, TvMode,
};
use coordlab::fm::{RateSystem, Rel, SymbolTable, VarTable};
use coordlab::prob::{Alphabet, Channel, Joint, DEFAULT_STATE_CAP};
use coordlab::region::{
    capacity, induced_joint, optimize_auxiliary, rate_bounds, unit_seed, AuxiliaryWitness, Objective, RegionKind,
    SearchConfig,
};
use coordlab::verify::random_code_config;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = anyhow::Result<(bool, String)>;
type Criterion<'a> = (u8, &'a str, Box<dyn Fn() -> Check + 'a>);

fn bundled(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("bundled").join(name)
}

fn load_spec(name: &str) -> anyhow::Result<RunSpec> {
    Ok(serde_json::from_str(&std::fs::read_to_string(bundled(name))?)?)
}

fn h2(p: f64) -> f64 {
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

fn simplex(k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let v: Vec<f64> = (0..k).map(|_| -(rng.gen::<f64>().max(1e-300)).ln()).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

fn fmt_seq(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" -> ")
}

fn means(rep: &ExperimentReport, metric: Metric, ns: &[usize]) -> anyhow::Result<Vec<f64>> {
    ns.iter().map(|&n| rep.mean(n, metric).ok_or_else(|| anyhow::anyhow!("no {} at n={n}", metric.name()))).collect()
}

fn nonincreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}

/// `(W, X, Y, Z)` joint of a run spec's single-letter law.
fn letter_joint(spec: &RunSpec) -> anyhow::Result<Joint<f64>> {
    let ch = spec.channel.to_channel::<f64>()?;
    let (nw, nx, no) = (spec.p_w.len(), ch.input().size, ch.output_size());
    let mut mass = Vec::with_capacity(nw * nx * no);
    for w in 0..nw {
        for x in 0..nx {
            let p = spec.p_w[w] * spec.p_x_given_w[w][x];
            mass.extend(ch.row(x).iter().map(|q| p * q));
        }
    }
    let mut vars = vec![Alphabet::new("W", nw), Alphabet::new("X", nx)];
    vars.extend(ch.outputs().iter().cloned());
    Ok(Joint::new(vars, mass)?)
}

fn c1() -> Check {
    let mut worst: f64 = 0.0;
    for p in [0.05, 0.1, 0.2] {
        let c = capacity(&Channel::bsc(p, "X", "Y")?, 64).value;
        worst = worst.max((c - (1.0 - h2(p))).abs());
    }
    Ok((worst < 1e-3, format!("largest deviation from 1 - h2(p) is {worst:.2e} (tolerance 1e-3)")))
}

fn c2() -> Check {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for i in 0..50 {
        for n in [2, 3] {
            let cfg = random_code_config(unit_seed(0xC2, i), n)?;
            let s = build_binning(&cfg)?;
            let rb = rb_joint(&cfg, &s)?;
            let rc = rc_joint(&cfg, &s, &rb_encoders(&cfg, &s)?)?;
            let full = tv_rb_rc(&rb, &rc, TvMode::Full, DEFAULT_STATE_CAP)?;
            let mcf = tv_rb_rc(&rb, &rc, TvMode::McfShortcut, DEFAULT_STATE_CAP)?;
            worst = worst.max((full - mcf).abs());
            count += 1;
        }
    }
    Ok((worst <= 1e-12, format!("{count} configurations, largest |full - (M,C,F)| = {worst:.2e} (tolerance 1e-12)")))
}

fn c3() -> Check {
    let spec = |rate: f64| -> anyhow::Result<SourceSpec<f64>> {
        Ok(SourceSpec {
            joint: Joint::single("A", vec![0.5, 0.5])?,
            sources: vec!["A".into()],
            side: vec![],
            rates: vec![rate],
            known: vec![],
            rounding: BinRounding::Ceil,
            cap: DEFAULT_STATE_CAP,
        })
    };
    let ns = [2, 4, 6, 8];
    let seeds: Vec<u64> = (1..=100).collect();
    let good = binning_lemma_verify(LemmaKind::Theorem2, &spec(0.6)?, &ns, &seeds)?;
    let m: Vec<f64> = good.rows.iter().map(|r| r.mean).collect();
    let decreasing = m.windows(2).all(|w| w[1] < w[0]);
    let halved = m[3] <= 0.5 * m[0];
    let bad = binning_lemma_verify(LemmaKind::Theorem2, &spec(1.4)?, &ns, &seeds)?;
    let floors: Vec<(f64, f64)> = bad.rows.iter().map(|r| (r.mean, 1.0 - (-0.4 * r.n as f64).exp2())).collect();
    let above = floors.iter().all(|(v, f)| v >= f);
    Ok((
        decreasing && halved && above,
        format!(
            "R=0.6 means {} (n=8 vs half of n=2: {:.4} <= {:.4}); R=1.4 means {} vs floors {}",
            fmt_seq(&m),
            m[3],
            0.5 * m[0],
            floors.iter().map(|(v, _)| format!("{v:.4}")).collect::<Vec<_>>().join(", "),
            floors.iter().map(|(_, f)| format!("{f:.4}")).collect::<Vec<_>>().join(", "),
        ),
    ))
}

fn c4(inside: &ExperimentReport) -> Check {
    let spec = load_spec("inside_region.json")?;
    let j = letter_joint(&spec)?;
    let slack_c = spec.rates.r_c - j.conditional_entropy(&["X"], &["W", "Y"])?;
    let slack_cf = spec.rates.r_c + spec.rates.r_f - j.conditional_entropy(&["W", "X"], &["Y"])?;
    let ns = [2, 4, 6, 8];
    let m = means(inside, Metric::PErr, &ns)?;
    let violated_spec = load_spec("reliability_violated.json")?;
    let gap = letter_joint(&violated_spec)?.conditional_entropy(&["W", "X"], &["Y"])?
        - violated_spec.rates.r_c
        - violated_spec.rates.r_f;
    let violated = experiment(&violated_spec)?;
    let v8 = violated.mean(8, Metric::PErr).ok_or_else(|| anyhow::anyhow!("no p_err at n=8"))?;
    let slack_ok = (slack_c - 0.2).abs() < 1e-5 && (slack_cf - 0.2).abs() < 1e-5 && (gap - 0.2).abs() < 1e-5;
    let ok = slack_ok && nonincreasing(&m) && m[3] < m[0] && m[3] < 0.3 && v8 > m[3];
    Ok((
        ok,
        format!(
            "slacks {slack_c:.4}/{slack_cf:.4}; mean error {} (n=8 < 0.3); below-threshold run at n=8: {v8:.4} > {:.4}",
            fmt_seq(&m),
            m[3]
        ),
    ))
}

fn c5(inside: &ExperimentReport) -> Check {
    let spec = load_spec("inside_region.json")?;
    let per_message = spec.granularity == Granularity::PerMessageMax;
    let m = means(inside, Metric::TvCoord, &[2, 4, 6])?;
    let (held, checked): (usize, usize) =
        inside.summary.per_n.iter().fold((0, 0), |(h, c), s| (h + s.bound_holds, c + s.bound_checked));
    let ok = per_message && m[2] < m[0] && held == checked && checked > 0 && inside.summary.failures.is_empty();
    Ok((ok, format!("per-message-max TV means {}; f* bound held in {held}/{checked} runs", fmt_seq(&m))))
}

fn c6(inside: &ExperimentReport) -> Check {
    let indep = experiment(&load_spec("secrecy_independent.json")?)?;
    let worst = indep.rows.iter().filter_map(|r| r.leakage).fold(0.0f64, f64::max);
    let max_n = indep.rows.iter().map(|r| r.n).max().unwrap_or(0);
    let spec = load_spec("inside_region.json")?;
    let margin = letter_joint(&spec)?.conditional_entropy(&["X"], &["Z"])? - spec.rates.r_m;
    let ns = [2, 4, 6];
    let m = means(inside, Metric::Leakage, &ns)?;
    let ok = worst < 1e-12 && max_n >= 6 && margin >= 0.2 && m[2] < m[0];
    Ok((
        ok,
        format!(
            "independent Z: max I(M;Z) = {worst:.1e} for n <= {max_n}; informative Z (margin {margin:.3} >= 0.2): mean leakage n=2,4,6 {}",
            m.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ")
        ),
    ))
}

fn grid_feasible(rows: &[([i64; 3], f64)], a: f64, b: f64, h: f64, shift: f64) -> bool {
    let (mut lo, mut hi) = (-16.0f64 - h / 2.0, 16.0f64 + h / 2.0);
    for (c, bound) in rows {
        let norm = (c[0].abs() + c[1].abs() + c[2].abs()) as f64;
        let rhs = bound + shift * h * norm - c[0] as f64 * a - c[1] as f64 * b;
        match c[2] {
            0 if rhs <= 0.0 => return false,
            0 => {}
            k if k > 0 => hi = hi.min(rhs / k as f64),
            k => lo = lo.max(rhs / k as f64),
        }
    }
    ((lo / h).floor() + 1.0) * h < hi
}

fn c7() -> Check {
    let out = Command::new(env!("CARGO_BIN_EXE_coordlab")).args(["fm", "--paper"]).output()?;
    let text = String::from_utf8(out.stdout)?;
    let window: Vec<&str> = text.lines().skip_while(|l| !l.starts_with("# rate window")).skip(1).collect();
    let m4 = "R_M < min{H(WX|Z), I(X;Y)}";
    let c3 = "R_C > max{0, I(W;Z)-I(W;Y)}";
    let canonical = out.status.success() && window.contains(&m4) && window.contains(&c3);

    let h = 1.0 / 256.0;
    let names = ["R_M", "R_C", "R_F"];
    let mut rng = ChaCha8Rng::seed_from_u64(0xC7);
    let empty = SymbolTable(BTreeMap::new());
    let mut disagreements = 0usize;
    for _ in 0..50 {
        let mut sys = RateSystem::new(names, VarTable::new(Vec::<String>::new()));
        let mut rows = Vec::new();
        for i in 0..rng.gen_range(4..=7) {
            let mut c = [rng.gen_range(-2..=2), rng.gen_range(-2..=2), rng.gen_range(-2..=2)];
            if i < 2 {
                c[2] = if i == 0 { 1 } else { -1 };
            }
            if c == [0, 0, 0] {
                c[0] = 1;
            }
            let b = rng.gen_range(-16..=32) as f64 / 16.0;
            let gt = rng.gen_bool(0.5);
            let coeffs: Vec<(&str, i64)> = names.iter().copied().zip(c).collect();
            sys.push(&coeffs, if gt { Rel::Gt } else { Rel::Lt }, &format!("{b}"))?;
            rows.push(if gt { ([-c[0], -c[1], -c[2]], -b) } else { (c, b) });
        }
        let proj = sys.eliminate("R_F")?;
        let pos = |name: &str| proj.variables.iter().position(|v| v == name);
        let (im, ic) = (pos("R_M"), pos("R_C"));
        let prows = proj
            .rows
            .iter()
            .map(|r| Ok((r.coeffs.clone(), r.bound.evaluate(&proj.table, &empty)?)))
            .collect::<coordlab::Result<Vec<_>>>()?;
        for i in 0..=256 {
            for j in 0..=256 {
                let (a, b) = (i as f64 * h, j as f64 * h);
                let inside = prows.iter().all(|(c, bound)| {
                    im.map_or(0.0, |k| c[k] as f64 * a) + ic.map_or(0.0, |k| c[k] as f64 * b) < *bound
                });
                let bad =
                    if inside { !grid_feasible(&rows, a, b, h, 1.0) } else { grid_feasible(&rows, a, b, h, -1.0) };
                disagreements += bad as usize;
            }
        }
    }
    Ok((
        canonical && disagreements == 0,
        format!(
            "window lines {}; 50 random systems, {disagreements} grid disagreements beyond one step",
            if canonical { "match" } else { "DIFFER" }
        ),
    ))
}

fn c8() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC8);
    let mut violations = Vec::new();
    let mut worst_markov: f64 = 0.0;
    for i in 0..100 {
        let nx = rng.gen_range(2..=3);
        let (ny, nz) = (rng.gen_range(2..=3), rng.gen_range(2..=3));
        let nw = rng.gen_range(1..=6);
        let rows = (0..nx).map(|_| simplex(ny * nz, &mut rng)).collect();
        let ch = Channel::new(Alphabet::new("X", nx), vec![Alphabet::new("Y", ny), Alphabet::new("Z", nz)], rows)?;
        let w = AuxiliaryWitness::new(simplex(nx, &mut rng), (0..nx).map(|_| simplex(nw, &mut rng)).collect())?;
        let b = |k| rate_bounds(&w, &ch, k);
        let (s, g, m) = (b(RegionKind::Secrecy)?, b(RegionKind::General)?, b(RegionKind::Marginal)?);
        let markov = induced_joint(&w, &ch)?.mutual_information(&["W"], &["Y", "Z"], &["X"])?;
        worst_markov = worst_markov.max(markov);
        if !(s.r_m_sup <= g.r_m_sup && g.r_m_sup <= m.r_m_sup && g.r_c_inf >= 0.0 && markov < 1e-9) {
            violations.push(i);
        }
    }
    Ok((
        violations.is_empty(),
        format!("100 witnesses, {} ordering violations; max I(W;YZ|X) = {worst_markov:.1e}", violations.len()),
    ))
}

fn c9() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC9);
    let mut worst = f64::NEG_INFINITY;
    let mut clamped = 0.0f64;
    for i in 0..20 {
        let rows = (0..2).map(|_| simplex(4, &mut rng)).collect();
        let ch = Channel::new(Alphabet::new("X", 2), vec![Alphabet::new("Y", 2), Alphabet::new("Z", 2)], rows)?;
        let p_x = simplex(2, &mut rng);
        let run = |w_size: usize| {
            let cfg = SearchConfig { w_size: Some(w_size), seed: unit_seed(0xC9, i), ..SearchConfig::default() };
            optimize_auxiliary(&p_x, &ch, RegionKind::General, Objective::MinRcGap, &cfg)
        };
        let (a, b) = (run(9)?, run(16)?);
        worst = worst.max(a.value - b.value);
        clamped = clamped.max(a.bounds.r_c_inf - b.bounds.r_c_inf);
    }
    Ok((
        worst < 1e-3 && clamped < 1e-3,
        format!("20 channels: largest gain of |W|=16 over |W|=9 is {worst:.2e} on I(W;Z)-I(W;Y), {clamped:.2e} on R_C_inf (tolerance 1e-3)"),
    ))
}

fn c10() -> Check {
    let exe = env!("CARGO_BIN_EXE_coordlab");
    let dir = tempfile::tempdir()?;
    let mut differing = Vec::new();
    let specs = ["inside_region.json", "reliability_violated.json", "secrecy_independent.json", "counting_bound.json"];
    let mut run = |args: Vec<String>, name: &str| -> anyhow::Result<()> {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let out = dir.path().join(format!("{name}.{rep}.csv"));
            let status = Command::new(exe)
                .args(&args)
                .arg("--out")
                .arg(&out)
                .stderr(std::process::Stdio::null())
                .status()?;
            anyhow::ensure!(status.success(), "{name} exited with {status}");
            outputs.push(std::fs::read(&out)?);
        }
        if outputs[0] != outputs[1] || outputs[0].is_empty() {
            differing.push(name.to_string());
        }
        Ok(())
    };
    for s in specs {
        let input = bundled(s).display().to_string();
        run(vec!["code".into(), "run".into(), "--input".into(), input], s)?;
    }
    let sweep = bundled("region_sweep_bsc.json").display().to_string();
    run(vec!["region".into(), "sweep".into(), "--input".into(), sweep], "region_sweep_bsc.json")?;
    Ok((differing.is_empty(), format!("{} bundled runs repeated, differing: {:?}", specs.len() + 1, differing)))
}

fn main() {
    let started = Instant::now();
    let inside = load_spec("inside_region.json").and_then(|s| Ok(experiment(&s)?));
    let shared = |f: fn(&ExperimentReport) -> Check| -> Check {
        match &inside {
            Ok(r) => f(r),
            Err(e) => Err(anyhow::anyhow!("inside-region run failed: {e}")),
        }
    };
    let checks: Vec<Criterion> = vec![
        (1, "capacity sanity", Box::new(c1)),
        (2, "RB/RC TV equality", Box::new(c2)),
        (3, "binning convergence", Box::new(c3)),
        (4, "reliability trend", Box::new(move || shared(c4))),
        (5, "coordination trend", Box::new(move || shared(c5))),
        (6, "secrecy", Box::new(move || shared(c6))),
        (7, "Fourier-Motzkin regression", Box::new(c7)),
        (8, "region structure", Box::new(c8)),
        (9, "cardinality check", Box::new(c9)),
        (10, "determinism", Box::new(c10)),
    ];
    let mut failed = 0;
    for (id, title, check) in &checks {
        let t = Instant::now();
        let (ok, detail) = match check() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += !ok as usize;
        println!(
            "{} criterion {id} ({title}): {detail} [{:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {}/{} criteria passed in {:.1}s", checks.len() - failed, checks.len(), started.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
