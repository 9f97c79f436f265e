//! Acceptance suite: prints one PASS/FAIL line per criterion, then fails if any criterion failed.
//!
//! Run: cargo test --release --test acceptance -- --nocapture

use std::time::{Duration, Instant};

use polar_skg::capacity::{example1_capacity, hb, model2_rate_point, star};
use polar_skg::metrics::*;
use polar_skg::polar_core::{polar_transform, scatter, extract, BitBlock, Bits, IndexSet};
use polar_skg::polarization::*;
use polar_skg::protocols::*;
use polar_skg::sources::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const X: Var = Var::Terminal(1);
const Y: Var = Var::Terminal(2);

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn dbms(p_x: f64, p: f64, q: f64, z: bool) -> JointSourceSpec {
    JointSourceSpec::DbmsChain { p_x, p, q, z_present: z }
}

fn path3(p12: f64, p23: f64) -> JointSourceSpec {
    JointSourceSpec::MarkovTree { m: 3, edges: vec![TreeEdge { a: 1, b: 2, p: p12 }, TreeEdge { a: 2, b: 3, p: p23 }] }
}

fn star_spec(p_x1: f64, crossovers: &[f64]) -> JointSourceSpec {
    JointSourceSpec::BroadcastStar { p_x1, crossovers: crossovers.to_vec() }
}

fn opts(delta: Option<f64>) -> BuildOptions {
    BuildOptions { thresholds: delta.map(Thresholds::with_delta).unwrap_or_default(), model4_root: None }
}

fn exact_sets(model: ModelTag, spec: &JointSourceSpec, ch: Option<&TestChannel>, n: usize, delta: Option<f64>) -> IndexSetBundle {
    construct(model, spec, ch, n, Construction::Exact, &opts(delta), &mut rng(0)).unwrap()
}

fn mc_sets(model: ModelTag, spec: &JointSourceSpec, ch: Option<&TestChannel>, n: usize, samples: usize, seed: u64) -> IndexSetBundle {
    construct(model, spec, ch, n, Construction::MonteCarlo { samples }, &opts(None), &mut rng(seed)).unwrap()
}

fn delta(b: &IndexSetBundle) -> f64 {
    b.delta_h.max(b.delta_v)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Collects failures instead of panicking so each criterion reports a line.
#[derive(Default)]
struct Check {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Check {
    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn finish(self, limit: Option<Duration>, t0: Instant) -> Outcome {
        let took = t0.elapsed();
        let mut detail = self.notes.join("; ");
        let mut pass = self.failures.is_empty();
        if let Some(l) = limit {
            if took > l {
                pass = false;
                detail.push_str(&format!("; took {took:.1?} > {l:?}"));
            }
        }
        if !self.failures.is_empty() {
            detail.push_str(&format!("; {} failure(s), first: {}", self.failures.len(), self.failures[0]));
        }
        outcome(pass, format!("{detail} [{took:.2?}]"))
    }
}

fn int_block(v: u64, n: usize) -> BitBlock {
    BitBlock::new(Bits::from_u64(v, n)).unwrap()
}

fn matrix_transform(x: &[u8]) -> Vec<u8> {
    let n = x.len();
    (0..n).map(|j| (0..n).filter(|&i| i & j == j).fold(0, |acc, i| acc ^ x[i])).collect()
}

fn random_subset(n: usize, r: &mut ChaCha8Rng) -> IndexSet {
    let mask: Vec<bool> = (0..n).map(|_| r.gen()).collect();
    IndexSet::from_mask(&mask)
}

fn c1_polar_algebra() -> Outcome {
    let t0 = Instant::now();
    let mut c = Check::default();
    let mut count = 0usize;
    for e in 0..=4 {
        let n = 1usize << e;
        let size = 1u64 << n;
        for v in 0..size {
            let x = int_block(v, n);
            let u = polar_transform(&x);
            c.require(u.bits().to_u8s() == matrix_transform(&x.bits().to_u8s()), || format!("matrix N={n} x={v:#x}"));
            c.require(polar_transform(&u) == x, || format!("involution N={n} x={v:#x}"));
            // Linearity against a derived partner; the bits of v double as the index-set mask.
            let y = int_block(v.wrapping_mul(0x9e37) % size, n);
            c.require(
                polar_transform(&x.xor(&y).unwrap()) == u.xor(&polar_transform(&y)).unwrap(),
                || format!("linearity N={n}"),
            );
            let s = IndexSet::from_mask(&(0..n).map(|i| (v >> i) & 1 == 1).collect::<Vec<_>>());
            let vals = extract(y.bits(), &s).unwrap();
            let w = scatter(&x, &s, &vals).unwrap();
            c.require(extract(w.bits(), &s).unwrap() == vals, || format!("scatter N={n}"));
            c.require(scatter(&x, &s, &extract(x.bits(), &s).unwrap()).unwrap() == x, || format!("extract N={n}"));
            count += 1;
        }
    }
    let mut r = rng(1);
    for t in 0..1000 {
        let n = 1usize << r.gen_range(0..=14);
        let (x, y) = (BitBlock::random(n, &mut r), BitBlock::random(n, &mut r));
        let u = polar_transform(&x);
        c.require(polar_transform(&u) == x, || format!("random involution #{t} N={n}"));
        c.require(polar_transform(&x.xor(&y).unwrap()) == u.xor(&polar_transform(&y)).unwrap(), || format!("random linearity N={n}"));
        let s = random_subset(n, &mut r);
        let vals = extract(y.bits(), &s).unwrap();
        let w = scatter(&x, &s, &vals).unwrap();
        c.require(extract(w.bits(), &s).unwrap() == vals, || format!("random scatter N={n}"));
        c.require(extract(w.bits(), &s.complement()).unwrap() == extract(x.bits(), &s.complement()).unwrap(), || format!("random scatter rest N={n}"));
    }
    c.note(format!("{count} exhaustive blocks, 1000 random up to 2^14"));
    c.finish(Some(Duration::from_secs(5)), t0)
}

fn c2_chain_rule() -> Outcome {
    let t0 = Instant::now();
    let mut c = Check::default();
    let star = joint_pmf(&star_spec(0.4, &[0.05, 0.2])).unwrap();
    let tree = joint_pmf(&path3(0.1, 0.2)).unwrap();
    let chain = joint_pmf(&dbms(0.3, 0.11, 0.2, true)).unwrap();
    let cases: Vec<(&JointPmf, Var, Vec<Var>)> = vec![
        (&chain, X, vec![Y]),
        (&chain, X, vec![Var::Eve]),
        (&chain, X, vec![]),
        (&star, X, vec![Y]),
        (&star, X, vec![Var::Terminal(3)]),
        (&tree, Y, vec![X]),
        (&tree, Var::Terminal(3), vec![Y]),
    ];
    let mut worst = 0.0f64;
    for (pmf, target, side) in &cases {
        let want = pmf.conditional_entropy(&[*target], side).unwrap();
        for n in [2, 4, 8] {
            let s = exact_index_stats(pmf, n, &ConditioningContext::new(*target, side)).unwrap();
            let err = (s.h_cond.iter().sum::<f64>() - n as f64 * want).abs();
            worst = worst.max(err);
            c.require(err <= 1e-9, || format!("{target}|{side:?} N={n}: error {err:e}"));
        }
    }
    c.note(format!("{} contexts × N∈{{2,4,8}}, max error {worst:.2e}", cases.len()));
    c.finish(Some(Duration::from_secs(30)), t0)
}

fn c3_bhattacharyya() -> Outcome {
    let t0 = Instant::now();
    let r = check_combine_bound(1000, 8, &mut rng(3));
    let mut c = Check::default();
    c.require(r.min_margin >= -1e-12, || format!("{r:?}"));
    c.note(format!("1000 joints, min margin {:.3e}", r.min_margin));
    c.finish(None, t0)
}

fn c4_mc_vs_exact() -> Outcome {
    let t0 = Instant::now();
    let mut c = Check::default();
    let chain = joint_pmf(&dbms(0.5, 0.11, 0.2, true)).unwrap();
    let tree = joint_pmf(&path3(0.1, 0.2)).unwrap();
    let mut worst = 0.0f64;
    for (i, (pmf, target, side)) in [(&chain, X, vec![Y]), (&chain, X, vec![Var::Eve]), (&tree, Y, vec![Var::Terminal(3)])]
        .into_iter()
        .enumerate()
    {
        let ctx = ConditioningContext::new(target, &side);
        let ex = exact_index_stats(pmf, 8, &ctx).unwrap();
        let mc = mc_index_stats(pmf, 8, &ctx, 100_000, &mut rng(40 + i as u64)).unwrap();
        let d = ex.z.iter().zip(&mc.z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(d);
        c.require(d <= 0.02, || format!("{}: max |Δz| = {d}", ctx.name()));
    }
    c.note(format!("3 contexts, max |Δz| = {worst:.4}"));
    c.finish(None, t0)
}

fn random_star(r: &mut ChaCha8Rng) -> JointSourceSpec {
    let m = r.gen_range(3..=4);
    star_spec(r.gen_range(0.2..0.8), &(1..m).map(|_| r.gen_range(0.01..0.45)).collect::<Vec<_>>())
}

fn random_tree(r: &mut ChaCha8Rng) -> JointSourceSpec {
    let m = r.gen_range(3..=5);
    let edges = (2..=m).map(|b| TreeEdge { a: r.gen_range(1..b), b, p: r.gen_range(0.01..0.45) }).collect();
    JointSourceSpec::MarkovTree { m, edges }
}

fn c5_inclusions() -> Outcome {
    let t0 = Instant::now();
    let mut c = Check::default();
    let mut r = rng(5);
    let mut checked = 0;
    let params = 12;
    for _ in 0..params {
        for (model, spec) in [(ModelTag::Model3Star, random_star(&mut r)), (ModelTag::Model4, random_tree(&mut r))] {
            for n in [4, 8] {
                let b = exact_sets(model, &spec, None, n, None);
                for ch in b.check_invariants(&spec).unwrap().into_iter().filter(|ch| ch.name.contains('⊆')) {
                    checked += 1;
                    c.require(ch.pass, || format!("{spec:?} N={n}: {} {}", ch.name, ch.detail));
                }
            }
        }
    }
    c.require(checked >= 4 * params, || format!("only {checked} inclusion checks ran"));
    c.note(format!("{params} star + {params} tree parameterizations, {checked} inclusions"));
    c.finish(None, t0)
}

fn c6_perfect_secrecy() -> Outcome {
    let t0 = Instant::now();
    let mut c = Check::default();
    let cases = [
        ("(a) uniform X, no Z", ModelTag::Model1, dbms(0.5, 0.1, 0.0, false), true),
        ("(b) path (0.1, 0.2)", ModelTag::Model4, path3(0.1, 0.2), true),
        ("(c) star, uniform X1", ModelTag::Model3Star, star_spec(0.5, &[0.05, 0.2]), false),
    ];
    for (name, model, spec, uniform) in cases {
        let b = exact_sets(model, &spec, None, 8, None);
        let r = exact_secrecy(&spec, None, &b, 1).unwrap();
        c.require(r.leakage_bits <= 1e-10, || format!("{name}: I(K;F) = {:e}", r.leakage_bits));
        if uniform {
            c.require(r.uniformity_bits.abs() <= 1e-10, || format!("{name}: |K| − H(K) = {:e}", r.uniformity_bits));
        }
        c.note(format!("{name}: I={:.1e} gap={:.1e}", r.leakage_bits, r.uniformity_bits));
    }
    c.finish(Some(Duration::from_secs(120)), t0)
}

fn c7_block_bounds() -> Outcome {
    let t0 = Instant::now();
    let mut c = Check::default();
    let mut runs = 0;
    for (p, q) in [(0.05, 0.2), (0.11, 0.3), (0.02, 0.1)] {
        let spec = dbms(0.5, p, q, true);
        for n in [2, 4, 8] {
            let b = exact_sets(ModelTag::Model1, &spec, None, n, None);
            let d = exact_model1(&spec, &b, 1).unwrap();
            let nonuniform = d.width(&["K", "Kt"]) as f64 - d.entropy(&["K", "Kt"]);
            let leak = d.mi(&["K", "Kt"], &["M", "Z"]);
            let nd = n as f64 * delta(&b);
            c.require(nonuniform <= nd, || format!("p={p} q={q} N={n}: nonuniformity {nonuniform} > {nd}"));
            c.require(leak <= 2.0 * nd, || format!("p={p} q={q} N={n}: leakage {leak} > {}", 2.0 * nd));
            runs += 1;
        }
    }
    c.note(format!("{runs} (p, q, N) instances"));
    c.finish(None, t0)
}

fn c8_encoder_closeness() -> Outcome {
    let t0 = Instant::now();
    let mut c = Check::default();
    let n = 8;
    let spec = dbms(0.5, 0.05, 0.2, true);
    let ch = TestChannel::Bsc { beta: 0.1 };
    let sets = exact_sets(ModelTag::Model2, &spec, Some(&ch), n, None);
    let plan = QuantizedPlan::new(&spec, &ch, &sets).unwrap();
    let t = QuantizerTables::new(&spec, &ch, &plan).unwrap();
    let (p, q) = t.joint_pair();
    let dl = delta(&sets);
    let d = kl_divergence(&p, &q).unwrap();
    let v = variational_distance(&p, &q).unwrap();
    c.require(d <= encoder_divergence_bound(n, dl), || format!("D = {d}"));
    c.require(v <= encoder_distance_bound(n, dl), || format!("V = {v}"));
    c.note(format!("D = {d:.3e} ≤ {:.3}, V = {v:.3e} ≤ {:.3}", encoder_divergence_bound(n, dl), encoder_distance_bound(n, dl)));
    c.finish(None, t0)
}

fn realizations(spec: &JointSourceSpec, n: usize) -> Vec<SampleBlock> {
    let pmf = joint_pmf(spec).unwrap();
    block_realizations(&pmf, pmf.vars(), n).unwrap().into_iter().map(|(b, _)| b).collect()
}

fn secrets_for(sets: &IndexSetBundle, k: usize, r: &mut ChaCha8Rng) -> Vec<Bits> {
    secret_sizes(sets, k).unwrap().into_iter().map(|l| provision_seed(l, r)).collect()
}

fn tri_spec() -> JointSourceSpec {
    path3(0.05, 0.02)
}

fn c9_agreement() -> Outcome {
    let t0 = Instant::now();
    let mut c = Check::default();
    let tally = |c: &mut Check, name: &str, rep: ProtocolReport, counts: &mut (usize, usize)| {
        counts.0 += 1;
        if rep.all_decodes_ok() {
            counts.1 += 1;
            c.require(rep.agreement, || format!("{name}: decodes succeeded but keys differ"));
        }
    };
    let n = 4;
    let mut r = rng(9);
    let mut summary = Vec::new();

    let spec = dbms(0.5, 0.1, 0.0, false);
    let sets = exact_sets(ModelTag::Model1, &spec, None, n, Some(0.1));
    let plan = Model1Plan::new(&spec, &sets).unwrap();
    let blocks = realizations(&spec, n);
    let mut t = (0, 0);
    for seed in 0..1u64 << plan.seed_len() {
        let s0 = Bits::from_u64(seed, plan.seed_len());
        for a in &blocks {
            for b in &blocks {
                tally(&mut c, "model1", plan.run_on(&[a.clone(), b.clone()], &s0).unwrap(), &mut t);
            }
        }
    }
    summary.push(format!("model1 {}/{}", t.1, t.0));

    let ch = TestChannel::Bsc { beta: 0.05 };
    for model in [ModelTag::Model2, ModelTag::BioGen, ModelTag::BioZero] {
        let sets = exact_sets(model, &spec, Some(&ch), n, Some(0.1));
        let plan = QuantizedPlan::new(&spec, &ch, &sets).unwrap();
        let mut t = (0, 0);
        for a in &blocks {
            for b in &blocks {
                let r1 = Bits::random(plan.r1_len(), &mut r);
                let secrets = secrets_for(&sets, 2, &mut r);
                tally(&mut c, model.as_str(), plan.run_on(&[a.clone(), b.clone()], &r1, &secrets, &mut r).unwrap(), &mut t);
            }
        }
        summary.push(format!("{model} {}/{}", t.1, t.0));
    }

    let spec = star_spec(0.5, &[0.05, 0.2]);
    let sets = exact_sets(ModelTag::Model3Star, &spec, None, n, Some(0.1));
    let plan = StarPlan::new(&spec, &sets).unwrap();
    let mut t = (0, 0);
    for b in realizations(&spec, n) {
        for seed in 0..1u64 << plan.seed_len() {
            tally(&mut c, "model3-star", plan.run_on(&b, &Bits::from_u64(seed, plan.seed_len())).unwrap(), &mut t);
        }
    }
    summary.push(format!("model3-star {}/{}", t.1, t.0));

    let spec = tri_spec();
    let sets = exact_sets(ModelTag::Model3Tri, &spec, None, n, Some(0.1));
    let plan = TriPlan::new(&spec, &sets).unwrap();
    let all = realizations(&spec, n);
    let k = 3;
    let mut t = (0, 0);
    for pos in 0..k {
        for b in &all {
            let mut blocks: Vec<SampleBlock> = (0..k).map(|_| sample_block(&spec, n, &mut r).unwrap()).collect();
            blocks[pos] = b.clone();
            let seeds = secrets_for(&sets, k, &mut r);
            tally(&mut c, "model3-tri", plan.run_on(&blocks, &seeds).unwrap(), &mut t);
        }
    }
    summary.push(format!("model3-tri {}/{} (per-position)", t.1, t.0));

    let spec = path3(0.03, 0.05);
    let sets = exact_sets(ModelTag::Model4, &spec, None, n, Some(0.1));
    let plan = TreePlan::new(&spec, &sets).unwrap();
    let mut t = (0, 0);
    for b in realizations(&spec, n) {
        tally(&mut c, "model4", plan.run_on(&b).unwrap(), &mut t);
    }
    summary.push(format!("model4 {}/{}", t.1, t.0));
    c.note(format!("N=4 clean/total: {}", summary.join(", ")));

    // Randomized trials at N=256.
    let n = 256;
    let trials = 200;
    let ch = TestChannel::Bsc { beta: 0.02 };
    let cases: Vec<(ModelTag, JointSourceSpec, Option<&TestChannel>, usize)> = vec![
        (ModelTag::Model1, dbms(0.5, 0.02, 0.2, true), None, 2),
        (ModelTag::Model2, dbms(0.5, 0.02, 0.2, true), Some(&ch), 2),
        (ModelTag::BioGen, dbms(0.5, 0.02, 0.0, false), Some(&ch), 2),
        (ModelTag::BioZero, dbms(0.5, 0.02, 0.0, false), Some(&ch), 2),
        (ModelTag::Model3Star, star_spec(0.5, &[0.02, 0.03]), None, 1),
        (ModelTag::Model3Tri, tri_spec(), None, 2),
        (ModelTag::Model4, path3(0.02, 0.03), None, 1),
    ];
    let mut rates = Vec::new();
    for (model, spec, ch, k) in cases {
        let sets = mc_sets(model, &spec, ch, n, 2000, 0);
        let mut unsound = 0usize;
        let rate = empirical_error_rate(trials, |t| {
            let mut r = rng(1000 + t as u64);
            let secrets = secrets_for(&sets, k, &mut r);
            let rep = run_model(&spec, ch, &sets, k, &secrets, &mut r).unwrap();
            rep.failed()
        });
        for t in 0..trials as u64 {
            let mut r = rng(1000 + t);
            let secrets = secrets_for(&sets, k, &mut r);
            let rep = run_model(&spec, ch, &sets, k, &secrets, &mut r).unwrap();
            if rep.all_decodes_ok() && !rep.agreement {
                unsound += 1;
            }
        }
        c.require(unsound == 0, || format!("{model} N=256: {unsound} clean trials disagree"));
        c.require(rate.ci_low <= rate.rate && rate.rate <= rate.ci_high, || format!("{model}: CI {rate:?}"));
        rates.push(format!("{model} {:.3} [{:.3}, {:.3}]", rate.rate, rate.ci_low, rate.ci_high));
    }
    c.note(format!("N=256 P_e: {}", rates.join(", ")));

    // One flipped seed bit moves exactly one of Bob's frozen values.
    let spec = dbms(0.5, 0.05, 0.11, true);
    let sets = mc_sets(ModelTag::Model1, &spec, None, n, 2000, 0);
    let plan = Model1Plan::new(&spec, &sets).unwrap();
    c.require(plan.seed_len() > 0, || "no padded positions at N=256".into());
    let mut r = rng(90);
    for _ in 0..20 {
        if plan.seed_len() == 0 {
            break;
        }
        let blocks: Vec<SampleBlock> = (0..2).map(|_| sample_block(&spec, n, &mut r).unwrap()).collect();
        let rep = plan.run_on(&blocks, &provision_seed(plan.seed_len(), &mut r)).unwrap();
        let f = rep.transcript.segment(2, Label::F, 0, plan.f_set.len()).unwrap();
        let fp = rep.transcript.segment(2, Label::FPad, 0, plan.fp_set.len()).unwrap();
        let seed = &rep.material.seeds_next[0];
        let mut bad = seed.clone();
        let flip = r.gen_range(0..bad.len());
        bad.set(flip, !bad.get(flip));
        let good = plan.bob_frozen(&f, &fp, seed).unwrap().dense();
        let wrong = plan.bob_frozen(&f, &fp, &bad).unwrap().dense();
        let diff: Vec<usize> = (0..n).filter(|&i| good[i] != wrong[i]).map(|i| i + 1).collect();
        c.require(diff == vec![plan.fp_set.indices()[flip]], || format!("corrupt seed moved {diff:?}"));
    }
    c.note(format!("corrupt-seed structure on {} padded positions", plan.seed_len()));
    c.finish(None, t0)
}

fn c10_rate_identities() -> Outcome {
    let t0 = Instant::now();
    let mut c = Check::default();
    let spec = dbms(0.5, 0.05, 0.2, true);
    let ch = TestChannel::Bsc { beta: 0.1 };
    for n in [8, 256] {
        let sets = if n == 8 { exact_sets(ModelTag::Model1, &spec, None, n, None) } else { mc_sets(ModelTag::Model1, &spec, None, n, 2000, 0) };
        let (v, h) = (sets.set("V_X|Z").unwrap().len() as i64, sets.set("H_X|Y").unwrap().len() as i64);
        for k in [1, 2, 4] {
            let mut r = rng(10);
            let rep = run_model(&spec, None, &sets, k, &secrets_for(&sets, k, &mut r), &mut r).unwrap();
            c.require(rep.rates.key_bits as i64 == k as i64 * (v - h), || format!("model1 N={n} k={k}: {} key bits", rep.rates.key_bits));
        }
    }
    for model in [ModelTag::Model2, ModelTag::BioGen] {
        let s = if model == ModelTag::Model2 { spec.clone() } else { dbms(0.5, 0.05, 0.0, false) };
        let sets = exact_sets(model, &s, Some(&ch), 8, None);
        let (vx, hu) = (sets.set("V_U|X").unwrap(), sets.set("H_U|Y").unwrap());
        for k in [1, 2, 3] {
            let mut r = rng(11);
            let rep = run_model(&s, Some(&ch), &sets, k, &secrets_for(&sets, k, &mut r), &mut r).unwrap();
            let want = vx.len() + k * hu.difference(vx).len();
            c.require(rep.rates.public_bits == want, || format!("{model} k={k}: {} public bits, want {want}", rep.rates.public_bits));
        }
    }
    let tri = tri_spec();
    for n in [8, 256] {
        let sets = if n == 8 { exact_sets(ModelTag::Model3Tri, &tri, None, n, None) } else { mc_sets(ModelTag::Model3Tri, &tri, None, n, 2000, 0) };
        let (kset, fxm) = (sets.set("K").unwrap().len(), sets.set("F_XM").unwrap().len());
        for k in [2, 3, 5] {
            let mut r = rng(12);
            let rep = run_model(&tri, None, &sets, k, &secrets_for(&sets, k, &mut r), &mut r).unwrap();
            let want = kset + (k - 1) * (kset + fxm);
            c.require(rep.rates.key_bits == want, || format!("tri N={n} k={k}: {} key bits, want {want}", rep.rates.key_bits));
        }
    }
    for (model, s, chan) in [
        (ModelTag::Model1, spec.clone(), None),
        (ModelTag::Model2, spec.clone(), Some(&ch)),
        (ModelTag::BioGen, dbms(0.5, 0.05, 0.0, false), Some(&ch)),
    ] {
        let sets = mc_sets(model, &s, chan, 64, 2000, 0);
        let rate = |k: usize| {
            let mut r = rng(13);
            run_model(&s, chan, &sets, k, &secrets_for(&sets, k, &mut r), &mut r).unwrap().rates
        };
        for k in [1, 2, 4] {
            let (a, b) = (rate(k), rate(2 * k));
            // seed_bits/(kN) with integer cross-multiplication.
            c.require(a.seed_bits * (2 * k) == 2 * b.seed_bits * k, || format!("{model} k={k}: seed bits {} vs {}", a.seed_bits, b.seed_bits));
        }
    }
    c.note("model1 key length, model2/bio-gen public bits, tri key algebra, seed-rate halving");
    c.finish(None, t0)
}

fn c11_trends() -> Outcome {
    let t0 = Instant::now();
    let mut c = Check::default();
    let (p, q) = (0.05, 0.2);
    let spec = dbms(0.5, p, q, true);
    let gap = hb(star(p, q).unwrap()).unwrap() - hb(p).unwrap();
    let trials = 500;
    let mut rows: Vec<(usize, ErrorRate, f64)> = Vec::new();
    for (i, n) in [256usize, 512, 1024].into_iter().enumerate() {
        let sets = mc_sets(ModelTag::Model1, &spec, None, n, 10_000, 100 + i as u64);
        let frac = sets.set("V_X|Z").unwrap().difference(sets.set("H_X|Y").unwrap()).len() as f64 / n as f64;
        let rate = empirical_error_rate(trials, |t| {
            let mut r = rng(5000 + t as u64);
            let seed = provision_seed(sets.set("F'").unwrap().len(), &mut r);
            model1_run(&spec, &sets, 1, &seed, &mut r).unwrap().failed()
        });
        rows.push((n, rate, frac));
    }
    for w in rows.windows(2) {
        let ((n0, a, f0), (n1, b, f1)) = (&w[0], &w[1]);
        let slack = 2.0 * (a.sigma.powi(2) + b.sigma.powi(2)).sqrt();
        c.require(b.rate <= a.rate + slack, || format!("P_e rose from {:.3} (N={n0}) to {:.3} (N={n1}) beyond 2σ = {slack:.3}", a.rate, b.rate));
        c.require(f1 >= f0, || format!("|V\\H|/N fell from {f0:.4} (N={n0}) to {f1:.4} (N={n1})"));
    }
    for (n, _, f) in &rows {
        c.require(*f <= gap + 1e-12, || format!("N={n}: |V\\H|/N = {f} above I(X;Y) − I(X;Z) = {gap}"));
    }
    c.note(format!(
        "{}; limit {gap:.4}",
        rows.iter().map(|(n, r, f)| format!("N={n} P_e={:.3}±{:.3} |V\\H|/N={f:.4}", r.rate, r.sigma)).collect::<Vec<_>>().join(", ")
    ));
    c.finish(Some(Duration::from_secs(600)), t0)
}

fn c12_capacity() -> Outcome {
    let t0 = Instant::now();
    let mut c = Check::default();
    let mut worst_cont = 0.0f64;
    let mut worst_cross = 0.0f64;
    for (p, q) in [(0.1, 0.1), (0.05, 0.2), (0.2, 0.3)] {
        let hp = hb(p).unwrap();
        let at = example1_capacity(p, q, hp).unwrap().value;
        let below = example1_capacity(p, q, hp - 1e-9).unwrap().value;
        worst_cont = worst_cont.max((at - below).abs());
        c.require((at - below).abs() <= 1e-6, || format!("p={p} q={q}: jump {}", (at - below).abs()));
        let spec = dbms(0.5, p, q, true);
        for r_p in [0.05, 0.2, 0.6 * hp] {
            let cap = example1_capacity(p, q, r_p).unwrap();
            let beta0 = cap.aux["beta0"];
            let pt = model2_rate_point(&spec, &TestChannel::Bsc { beta: beta0 }).unwrap();
            let d = (pt.key_rate - cap.value).abs().max((pt.public_rate - r_p).abs());
            worst_cross = worst_cross.max(d);
            c.require(d <= 1e-6, || format!("p={p} q={q} r_p={r_p}: rate point off by {d}"));
        }
    }
    let mut r = rng(12);
    for _ in 0..1000 {
        let (a, b) = (r.gen_range(0.0..1.0), r.gen_range(0.0..1.0));
        c.require(star(a, b).unwrap() == star(b, a).unwrap(), || format!("⋆ not symmetric at {a}, {b}"));
        c.require(star(a, 0.0).unwrap() == a && star(a, 0.5).unwrap() == 0.5, || format!("⋆ identity at {a}"));
        c.require(hb(a).unwrap() == hb(1.0 - a).unwrap(), || format!("H_b symmetry at {a}"));
    }
    c.require(hb(0.0).unwrap() == 0.0 && hb(0.5).unwrap() == 1.0 && hb(1.0).unwrap() == 0.0, || "H_b endpoints".into());
    c.note(format!("continuity gap {worst_cont:.1e}, rate-point error {worst_cross:.1e}"));
    c.finish(None, t0)
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("polar algebra", c1_polar_algebra),
        ("chain-rule conservation", c2_chain_rule),
        ("Bhattacharyya combine bound", c3_bhattacharyya),
        ("construction consistency", c4_mc_vs_exact),
        ("universality inclusions", c5_inclusions),
        ("perfect-secrecy instances", c6_perfect_secrecy),
        ("per-block bounds", c7_block_bounds),
        ("encoder closeness", c8_encoder_closeness),
        ("agreement soundness", c9_agreement),
        ("rate identities", c10_rate_identities),
        ("finite-N trends", c11_trends),
        ("capacity calculators", c12_capacity),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        println!("{} criterion {}: {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        if !o.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
