//! Library results checked against independent brute-force computations.

use std::collections::BTreeMap;

use coordlab::code::{
    bin_count, build_binning, coordination_tv, error_probability, rb_encoders, rb_joint, rc_joint,
    secrecy_leakage, select_f_instance, tv_rb_rc, unrank, BinRounding, CodeConfig, Rates, Decoder, ErrorMode,
    Granularity, Reference, TvMode,
};
use coordlab::fm::{RateSystem, Rel, SymbolTable, VarTable};
use coordlab::prob::{Alphabet, Channel, Joint};
use coordlab::region::capacity;
use coordlab::verify::random_code_config;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn h2(p: f64) -> f64 {
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

fn simplex(k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let v: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

fn mutual_info_rows(p_x: &[f64], rows: &[Vec<f64>]) -> f64 {
    let ny = rows[0].len();
    let q: Vec<f64> = (0..ny).map(|y| p_x.iter().zip(rows).map(|(p, r)| p * r[y]).sum()).collect();
    let mut i = 0.0;
    for (p, r) in p_x.iter().zip(rows) {
        for y in 0..ny {
            if *p > 0.0 && r[y] > 0.0 {
                i += p * r[y] * (r[y] / q[y]).log2();
            }
        }
    }
    i
}

/// Classic alternating-maximization capacity, run to convergence.
fn blahut_arimoto(rows: &[Vec<f64>]) -> f64 {
    let nx = rows.len();
    let mut p = vec![1.0 / nx as f64; nx];
    for _ in 0..20_000 {
        let ny = rows[0].len();
        let q: Vec<f64> = (0..ny).map(|y| p.iter().zip(rows).map(|(a, r)| a * r[y]).sum()).collect();
        let d: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().zip(&q).filter(|(v, _)| **v > 0.0).map(|(v, qy)| v * (v / qy).ln()).sum::<f64>())
            .collect();
        let w: Vec<f64> = p.iter().zip(&d).map(|(a, di)| a * di.exp()).collect();
        let s: f64 = w.iter().sum();
        p = w.into_iter().map(|v| v / s).collect();
    }
    mutual_info_rows(&p, rows)
}

#[test]
fn bsc_capacity_matches_closed_form() {
    for p in [0.05, 0.1, 0.2] {
        let ch = Channel::bsc(p, "X", "Y").unwrap();
        let c = capacity(&ch, 64).value;
        assert!((c - (1.0 - h2(p))).abs() < 1e-3, "p={p}: {c}");
        assert!((c - blahut_arimoto(&ch.rows())).abs() < 1e-6);
    }
}

#[test]
fn capacity_matches_blahut_arimoto_on_random_channels() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let nx = rng.gen_range(2..=4);
        let ny = rng.gen_range(2..=4);
        let rows: Vec<Vec<f64>> = (0..nx).map(|_| simplex(ny, &mut rng)).collect();
        let ch = Channel::new(Alphabet::new("X", nx), vec![Alphabet::new("Y", ny)], rows.clone()).unwrap();
        let c = capacity(&ch, 32).value;
        let ba = blahut_arimoto(&rows);
        assert!((c - ba).abs() < 1e-6, "{c} vs {ba}");
    }
}

#[test]
fn entropies_match_direct_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (a, b, c) = (2, 3, 2);
    let mass = simplex(a * b * c, &mut rng);
    let vars = vec![Alphabet::new("A", a), Alphabet::new("B", b), Alphabet::new("C", c)];
    let j = Joint::new(vars, mass.clone()).unwrap();
    let at = |i: usize, k: usize, l: usize| mass[(i * b + k) * c + l];
    let h = |v: &[f64]| -> f64 { v.iter().filter(|p| **p > 0.0).map(|p| -p * p.log2()).sum() };
    let pa: Vec<f64> = (0..a).map(|i| (0..b).flat_map(|k| (0..c).map(move |l| (k, l))).map(|(k, l)| at(i, k, l)).sum()).collect();
    let pac: Vec<f64> = (0..a).flat_map(|i| (0..c).map(move |l| (i, l))).map(|(i, l)| (0..b).map(|k| at(i, k, l)).sum()).collect();
    let pbc: Vec<f64> = (0..b).flat_map(|k| (0..c).map(move |l| (k, l))).map(|(k, l)| (0..a).map(|i| at(i, k, l)).sum()).collect();
    let pc: Vec<f64> = (0..c).map(|l| (0..a).flat_map(|i| (0..b).map(move |k| (i, k))).map(|(i, k)| at(i, k, l)).sum()).collect();
    let habc = h(&mass);
    assert!((j.entropy(&["A"]).unwrap() - h(&pa)).abs() < 1e-12);
    assert!((j.entropy(&["A", "B", "C"]).unwrap() - habc).abs() < 1e-12);
    let cmi = h(&pac) + h(&pbc) - habc - h(&pc);
    assert!((j.mutual_information(&["A"], &["B"], &["C"]).unwrap() - cmi).abs() < 1e-12);
    assert!((j.conditional_entropy(&["A"], &["C"]).unwrap() - (h(&pac) - h(&pc))).abs() < 1e-12);
}

#[test]
fn bin_counts_never_undershoot_nominal_rate() {
    for n in 1..=10 {
        for k in 0..=30 {
            let r = k as f64 * 0.05;
            let b = bin_count(n, r, BinRounding::Ceil).unwrap();
            assert!(b as f64 >= (n as f64 * r).exp2() - 1e-9);
            assert!(b == 1 || ((b - 1) as f64) < (n as f64 * r).exp2());
        }
    }
    assert_eq!(bin_count(4, 0.5, BinRounding::Ceil).unwrap(), 4);
    assert_eq!(bin_count(3, 0.6, BinRounding::Round).unwrap(), 3);
}

/// The scheme enumerated from first principles: i.i.d. source laws,
/// bin maps, the RB posterior encoder and the MAP decoder.
struct BruteScheme {
    /// `(m, c, f, w, x, mass)` under RC.
    rc: Vec<(usize, usize, usize, usize, usize, f64)>,
    rb_mcf: Vec<f64>,
    p_y: Vec<Vec<f64>>,
    p_z: Vec<Vec<f64>>,
    nm: usize,
    nf: usize,
    n: usize,
    phi: (Vec<usize>, Vec<usize>, Vec<usize>),
    pbar: Vec<Vec<f64>>,
}

impl BruteScheme {
    fn new(cfg: &CodeConfig<f64>) -> Option<Self> {
        let s = build_binning(cfg).unwrap();
        let n = cfg.n;
        let rows = cfg.channel.rows();
        let p_y: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[0] + r[1], r[2] + r[3]]).collect();
        let p_z: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[0] + r[2], r[1] + r[3]]).collect();
        let seqs = 1usize << n;
        let mut pbar = vec![vec![0.0; seqs]; seqs];
        for (w, row) in pbar.iter_mut().enumerate() {
            let ws = unrank(w, 2, n);
            for (x, v) in row.iter_mut().enumerate() {
                let xs = unrank(x, 2, n);
                *v = ws.iter().zip(&xs).map(|(a, b)| cfg.p_w[*a] * cfg.p_x_given_w[*a][*b]).product();
            }
        }
        let (nm, nc, nf) = (s.n_m, s.n_c, s.n_f);
        let mut rb_mcf = vec![0.0; nm * nc * nf];
        for w in 0..seqs {
            for x in 0..seqs {
                rb_mcf[(s.phi_m[x] * nc + s.phi_c[x]) * nf + s.phi_f[w]] += pbar[w][x];
            }
        }
        if rb_mcf.contains(&0.0) {
            return None;
        }
        let q = 1.0 / (nm * nc * nf) as f64;
        let mut rc = Vec::new();
        for w in 0..seqs {
            for x in 0..seqs {
                let (m, c, f) = (s.phi_m[x], s.phi_c[x], s.phi_f[w]);
                rc.push((m, c, f, w, x, q * pbar[w][x] / rb_mcf[(m * nc + c) * nf + f]));
            }
        }
        Some(Self { rc, rb_mcf, p_y, p_z, nm, nf, n, phi: (s.phi_m, s.phi_c, s.phi_f), pbar })
    }

    fn seq_prob(&self, k: &[Vec<f64>], x: usize, y: usize) -> f64 {
        unrank(x, 2, self.n).iter().zip(unrank(y, 2, self.n)).map(|(a, b)| k[*a][b]).product()
    }

    fn tv_mcf(&self) -> f64 {
        let q = 1.0 / self.rb_mcf.len() as f64;
        0.5 * self.rb_mcf.iter().map(|p| (p - q).abs()).sum::<f64>()
    }

    fn p_err(&self) -> f64 {
        let seqs = 1usize << self.n;
        let (phi_m, phi_c, phi_f) = &self.phi;
        let decode = |c: usize, f: usize, y: usize| -> Option<usize> {
            let mut best: Option<(usize, f64)> = None;
            for x in 0..seqs {
                if phi_c[x] != c {
                    continue;
                }
                let s: f64 = (0..seqs).filter(|w| phi_f[*w] == f).map(|w| self.pbar[w][x]).sum();
                let score = s * self.seq_prob(&self.p_y, x, y);
                if score > 0.0 && best.is_none_or(|(_, b)| score > b) {
                    best = Some((x, score));
                }
            }
            best.map(|(x, _)| x)
        };
        let mut err = 0.0;
        for &(m, c, f, _, x, p) in &self.rc {
            for y in 0..seqs {
                if decode(c, f, y).is_none_or(|xh| phi_m[xh] != m) {
                    err += p * self.seq_prob(&self.p_y, x, y);
                }
            }
        }
        err
    }

    /// `P(f, m, zⁿ)` under RC, and the same law under RB.
    fn fmz(&self) -> (Vec<f64>, Vec<f64>) {
        let seqs = 1usize << self.n;
        let (phi_m, _, phi_f) = &self.phi;
        let idx = |f: usize, m: usize, z: usize| (f * self.nm + m) * seqs + z;
        let mut rc = vec![0.0; self.nf * self.nm * seqs];
        let mut rb = rc.clone();
        for &(m, _, f, _, x, p) in &self.rc {
            for z in 0..seqs {
                rc[idx(f, m, z)] += p * self.seq_prob(&self.p_z, x, z);
            }
        }
        for w in 0..seqs {
            for x in 0..seqs {
                for z in 0..seqs {
                    rb[idx(phi_f[w], phi_m[x], z)] += self.pbar[w][x] * self.seq_prob(&self.p_z, x, z);
                }
            }
        }
        (rc, rb)
    }

    fn leakage(&self) -> f64 {
        let seqs = 1usize << self.n;
        let (rc, _) = self.fmz();
        let mut mz = vec![0.0; self.nm * seqs];
        for f in 0..self.nf {
            for (i, v) in mz.iter_mut().enumerate() {
                *v += rc[f * self.nm * seqs + i];
            }
        }
        let pm: Vec<f64> = (0..self.nm).map(|m| mz[m * seqs..(m + 1) * seqs].iter().sum()).collect();
        let pz: Vec<f64> = (0..seqs).map(|z| (0..self.nm).map(|m| mz[m * seqs + z]).sum()).collect();
        let mut i = 0.0;
        for m in 0..self.nm {
            for z in 0..seqs {
                let v = mz[m * seqs + z];
                if v > 0.0 {
                    i += v * (v / (pm[m] * pz[z])).log2();
                }
            }
        }
        i
    }

    /// Coordination TV of the conditional `(M, Z)` laws for every bin `f`.
    fn per_f(&self) -> Vec<f64> {
        let block = self.nm * (1usize << self.n);
        let (rc, rb) = self.fmz();
        (0..self.nf)
            .map(|f| {
                let (a, b) = (&rc[f * block..(f + 1) * block], &rb[f * block..(f + 1) * block]);
                let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
                0.5 * a.iter().zip(b).map(|(p, q)| (p / sa - q / sb).abs()).sum::<f64>()
            })
            .collect()
    }
}

#[test]
fn scheme_metrics_match_enumeration() {
    let mut checked = 0;
    for seed in 0..40u64 {
        // keep the bin grid small enough that every (m, c, f) cell is hit
        let base = random_code_config(seed, 2).unwrap();
        let pick = |k: u64| [0.0, 0.5, 0.8][((seed >> k) % 3) as usize];
        let rates = Rates { r_m: pick(0), r_c: pick(2), r_f: pick(4) };
        let cfg = CodeConfig::new(2, rates, base.p_w, base.p_x_given_w, base.channel, base.seed).unwrap();
        let Some(brute) = BruteScheme::new(&cfg) else { continue };
        let s = build_binning(&cfg).unwrap();
        let rb = rb_joint(&cfg, &s).unwrap();
        let rc = rc_joint(&cfg, &s, &rb_encoders(&cfg, &s).unwrap()).unwrap();
        assert_eq!(rc.fallbacks, 0);
        let tv = tv_rb_rc(&rb, &rc, TvMode::McfShortcut, cfg.cap).unwrap();
        assert!((tv - brute.tv_mcf()).abs() < 1e-12, "seed {seed}: tv {tv} vs {}", brute.tv_mcf());
        let full = tv_rb_rc(&rb, &rc, TvMode::Full, cfg.cap).unwrap();
        assert!((full - brute.tv_mcf()).abs() < 1e-12);
        let e = error_probability(&cfg, &s, ErrorMode::Exact, Decoder::Map).unwrap().p_err;
        assert!((e - brute.p_err()).abs() < 1e-12, "seed {seed}: error {e} vs {}", brute.p_err());
        let l = secrecy_leakage(&cfg, &rc, None).unwrap();
        assert!((l - brute.leakage()).abs() < 1e-12, "seed {seed}: leakage {l} vs {}", brute.leakage());
        let sel = select_f_instance(&cfg, &rb, &rc).unwrap();
        let per_f = brute.per_f();
        let v = per_f.iter().copied().fold(f64::INFINITY, f64::min);
        assert!((sel.value - v).abs() < 1e-12);
        // near-ties may resolve to either bin, but the chosen one must attain the minimum
        assert!((per_f[sel.f_star] - v).abs() < 1e-12, "seed {seed}: f* {} in {per_f:?}", sel.f_star);
        for (f, want) in per_f.iter().enumerate() {
            let at_f = coordination_tv(&cfg, &rb, &rc, Some(f), Granularity::JointMz, &Reference::Rb).unwrap();
            assert!((at_f.value - want).abs() < 1e-12);
        }
        checked += 1;
    }
    assert!(checked >= 10, "only {checked} configurations without empty bins");
}

/// Random three-rate systems with numeric bounds, written as `c·R < b`.
fn random_system(rng: &mut ChaCha8Rng) -> (RateSystem, Vec<([i64; 3], f64)>) {
    let names = ["R_M", "R_C", "R_F"];
    let mut sys = RateSystem::new(names, VarTable::new(Vec::<String>::new()));
    let mut rows = Vec::new();
    let count = rng.gen_range(4..=7);
    for i in 0..count {
        let mut c = [rng.gen_range(-2..=2), rng.gen_range(-2..=2), rng.gen_range(-2..=2)];
        // guarantee both an upper and a lower bound on R_F
        if i == 0 {
            c[2] = 1;
        } else if i == 1 {
            c[2] = -1;
        }
        if c == [0, 0, 0] {
            c[0] = 1;
        }
        let b = rng.gen_range(-16..=32) as f64 / 16.0;
        let gt = rng.gen_bool(0.5);
        let coeffs: Vec<(&str, i64)> = names.iter().copied().zip(c).collect();
        let text = format!("{b}");
        sys.push(&coeffs, if gt { Rel::Gt } else { Rel::Lt }, &text).unwrap();
        rows.push(if gt { ([-c[0], -c[1], -c[2]], -b) } else { (c, b) });
    }
    (sys, rows)
}

/// Is there `r` on the grid `h·ℤ ∩ [-16, 16]` with every row satisfied up
/// to `shift·h·‖c‖₁` (positive shift relaxes, negative tightens)?
fn grid_feasible(rows: &[([i64; 3], f64)], a: f64, b: f64, h: f64, shift: f64) -> bool {
    let (mut lo, mut hi) = (-16.0f64 - h / 2.0, 16.0f64 + h / 2.0);
    for (c, bound) in rows {
        let norm = (c[0].abs() + c[1].abs() + c[2].abs()) as f64;
        let rhs = bound + shift * h * norm - c[0] as f64 * a - c[1] as f64 * b;
        match c[2] {
            0 => {
                if rhs <= 0.0 {
                    return false;
                }
            }
            k if k > 0 => hi = hi.min(rhs / k as f64),
            k => lo = lo.max(rhs / k as f64),
        }
    }
    let first = (lo / h).floor() + 1.0;
    first * h < hi
}

#[test]
fn projection_agrees_with_grid_oracle() {
    let h = 1.0 / 256.0;
    let mut rng = ChaCha8Rng::seed_from_u64(0xF0);
    let empty = SymbolTable(BTreeMap::new());
    let mut disagreements = 0;
    let (mut feasible, mut infeasible) = (0usize, 0usize);
    for _ in 0..50 {
        let (sys, rows) = random_system(&mut rng);
        let proj = sys.eliminate("R_F").unwrap();
        assert!(!proj.variables.iter().any(|v| v == "R_F"));
        let pos = |name: &str| proj.variables.iter().position(|v| v == name);
        let (im, ic) = (pos("R_M"), pos("R_C"));
        let prows: Vec<(Vec<i64>, f64)> =
            proj.rows.iter().map(|r| (r.coeffs.clone(), r.bound.evaluate(&proj.table, &empty).unwrap())).collect();
        for i in 0..=256 {
            for j in 0..=256 {
                let (a, b) = (i as f64 * h, j as f64 * h);
                let inside = prows.iter().all(|(c, bound)| {
                    let lhs = im.map_or(0.0, |k| c[k] as f64 * a) + ic.map_or(0.0, |k| c[k] as f64 * b);
                    lhs < *bound
                });
                let bad = if inside {
                    !grid_feasible(&rows, a, b, h, 1.0)
                } else {
                    grid_feasible(&rows, a, b, h, -1.0)
                };
                disagreements += bad as usize;
                if inside {
                    feasible += 1;
                } else {
                    infeasible += 1;
                }
            }
        }
    }
    assert_eq!(disagreements, 0);
    assert!(feasible > 10_000 && infeasible > 10_000, "{feasible} feasible, {infeasible} infeasible points");
}
