use polar_skg::metrics::{
    encoder_distance_bound, encoder_divergence_bound, kl_divergence, variational_distance, QuantizerTables,
};
use polar_skg::polar_core::{polar_transform, BitBlock, Bits, IndexSet};
use polar_skg::polarization::*;
use polar_skg::protocols::QuantizedPlan;
use polar_skg::sc_codec::*;
use polar_skg::sources::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const X: Var = Var::Terminal(1);
const Y: Var = Var::Terminal(2);

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn dbms(p: f64, q: f64, z: bool) -> JointSourceSpec {
    JointSourceSpec::DbmsChain { p_x: 0.5, p, q, z_present: z }
}

fn int_block(v: usize, n: usize) -> BitBlock {
    BitBlock::new(Bits::from_u64(v as u64, n)).unwrap()
}

fn xy_model(p: f64) -> SymbolModel {
    joint_pmf(&dbms(p, 0.0, false)).unwrap().pair_model(X, &[Y]).unwrap()
}

#[test]
fn freezing_everything_returns_truth() {
    let model = xy_model(0.2);
    let mut r = rng(1);
    for _ in 0..20 {
        let y = BitBlock::random(16, &mut r);
        let u = BitBlock::random(16, &mut r);
        let frozen = FrozenMap::new(IndexSet::full(16), u.bits().clone()).unwrap();
        assert_eq!(sc_decode(&side_symbols(&[&y], 16), &frozen, &model).unwrap(), u);
    }
}

#[test]
fn noiseless_side_recovers_without_frozen_bits() {
    let model = xy_model(0.0);
    let mut r = rng(2);
    for n in [1, 8, 64, 512] {
        let x = BitBlock::random(n, &mut r);
        let u = sc_decode(&side_symbols(&[&x], n), &FrozenMap::none(n), &model).unwrap();
        assert_eq!(u, polar_transform(&x));
    }
}

/// Sequential MAP by brute force: each free bit maximizes
/// `P(u_i | û^{<i}, y)` summed over every `x` whose transform matches the prefix.
fn brute_sequential_map(y: usize, frozen: &[Option<bool>], model: &SymbolModel, n: usize) -> usize {
    let probs = model.probs();
    let joint: Vec<f64> = (0..1usize << n)
        .map(|x| (0..n).map(|t| probs[(y >> t) & 1][(x >> t) & 1]).product())
        .collect();
    let mut u_hat = 0usize;
    for i in 0..n {
        let bit = match frozen[i] {
            Some(b) => b,
            None => {
                let mut mass = [0.0f64; 2];
                for (x, w) in joint.iter().enumerate() {
                    let u = polar_transform(&int_block(x, n)).bits().to_u64() as usize;
                    let prefix = (1usize << i) - 1;
                    if u & prefix == u_hat & prefix {
                        mass[(u >> i) & 1] += w;
                    }
                }
                // Exact ties decode to 0; summation order may perturb them by an ulp.
                mass[1] - mass[0] > 1e-12 * (mass[0] + mass[1])
            }
        };
        u_hat |= (bit as usize) << i;
    }
    u_hat
}

#[test]
fn decoder_matches_sequential_map_oracle() {
    let n = 4;
    let spec = dbms(0.11, 0.0, false);
    let pmf = joint_pmf(&spec).unwrap();
    let stats = exact_index_stats(&pmf, n, &ConditioningContext::new(X, &[Y])).unwrap();
    let h = IndexSet::from_mask(&stats.h_cond.iter().map(|&h| h >= 0.1).collect::<Vec<_>>());
    assert!(!h.is_empty() && h.len() < n);
    let model = pmf.pair_model(X, &[Y]).unwrap();
    for x in 0..16 {
        let u = polar_transform(&int_block(x, n));
        let frozen = FrozenMap::new(h.clone(), polar_skg::polar_core::extract(u.bits(), &h).unwrap()).unwrap();
        for y in 0..16 {
            let yb = int_block(y, n);
            let got = sc_decode(&side_symbols(&[&yb], n), &frozen, &model).unwrap();
            let want = brute_sequential_map(y, &frozen.dense(), &model, n);
            assert_eq!(got.bits().to_u64() as usize, want, "x={x} y={y}");
        }
    }
}

#[test]
fn decoding_is_deterministic() {
    let model = xy_model(0.1);
    let mut r = rng(3);
    let y = BitBlock::random(128, &mut r);
    let frozen = FrozenMap::new(IndexSet::new(128, 1..=40).unwrap(), Bits::random(40, &mut r)).unwrap();
    let side = side_symbols(&[&y], 128);
    assert_eq!(sc_decode(&side, &frozen, &model).unwrap(), sc_decode(&side, &frozen, &model).unwrap());
}

#[test]
fn posterior_trace_properties() {
    let det = xy_model(0.0);
    let noisy = xy_model(0.2);
    let mut r = rng(4);
    for _ in 0..10 {
        let s = sample_block(&dbms(0.0, 0.0, false), 32, &mut r).unwrap();
        let u = polar_transform(s.terminal(1));
        let side = side_symbols(&[s.terminal(2)], 32);
        for p in posterior_trace(&side, &u, &det) {
            assert!(p == 0.0 || p == 1.0);
        }
        let s = sample_block(&dbms(0.2, 0.0, false), 32, &mut r).unwrap();
        let u = polar_transform(s.terminal(1));
        let side = side_symbols(&[s.terminal(2)], 32);
        for p in posterior_trace(&side, &u, &noisy) {
            assert!((0.0..=1.0).contains(&p));
        }
    }
}

#[test]
fn averaged_posterior_bhattacharyya_matches_exact() {
    let n = 8;
    let spec = dbms(0.11, 0.0, false);
    let pmf = joint_pmf(&spec).unwrap();
    let model = pmf.pair_model(X, &[Y]).unwrap();
    let ex = exact_index_stats(&pmf, n, &ConditioningContext::new(X, &[Y])).unwrap();
    let mut acc = vec![0.0; n];
    let samples = 100_000;
    let mut r = rng(5);
    for _ in 0..samples {
        let s = sample_block(&spec, n, &mut r).unwrap();
        let u = polar_transform(s.terminal(1));
        let post = posterior_trace(&side_symbols(&[s.terminal(2)], n), &u, &model);
        for (a, p) in acc.iter_mut().zip(post) {
            *a += 2.0 * (p * (1.0 - p)).sqrt();
        }
    }
    for (i, a) in acc.iter().enumerate() {
        let z = a / samples as f64;
        assert!((z - ex.z[i]).abs() <= 0.02, "index {}: {z} vs {}", i + 1, ex.z[i]);
    }
}

#[test]
fn enlarging_frozen_set_never_hurts() {
    let n = 256;
    let spec = dbms(0.05, 0.0, false);
    let pmf = joint_pmf(&spec).unwrap();
    let model = pmf.pair_model(X, &[Y]).unwrap();
    let mc = mc_index_stats(&pmf, n, &ConditioningContext::new(X, &[Y]), 2000, &mut rng(6)).unwrap();
    let small = IndexSet::from_mask(&mc.h_cond.iter().map(|&h| h >= 0.05).collect::<Vec<_>>());
    let large = IndexSet::from_mask(&mc.h_cond.iter().map(|&h| h >= 0.005).collect::<Vec<_>>());
    assert!(small.is_subset(&large) && small.len() < large.len());
    let trials = 10_000;
    let mut r = rng(7);
    let (mut err_s, mut err_l) = (0usize, 0usize);
    for _ in 0..trials {
        let s = sample_block(&spec, n, &mut r).unwrap();
        let u = polar_transform(s.terminal(1));
        let side = side_symbols(&[s.terminal(2)], n);
        for (set, err) in [(&small, &mut err_s), (&large, &mut err_l)] {
            let frozen = FrozenMap::new(set.clone(), polar_skg::polar_core::extract(u.bits(), set).unwrap()).unwrap();
            if sc_decode(&side, &frozen, &model).unwrap() != u {
                *err += 1;
            }
        }
    }
    let (ps, pl) = (err_s as f64 / trials as f64, err_l as f64 / trials as f64);
    let sigma = ((ps * (1.0 - ps) + pl * (1.0 - pl)) / trials as f64).sqrt();
    assert!(pl <= ps + 2.0 * sigma, "large {pl} small {ps}");
}

#[test]
fn identity_test_channel_is_deterministic() {
    let pmf = joint_pmf(&dbms(0.1, 0.0, false)).unwrap().with_auxiliary(&TestChannel::Identity).unwrap();
    let model = pmf.pair_model(Var::Aux, &[X]).unwrap();
    let n = 16;
    let enc = StochasticEncoder::new(IndexSet::empty(n), IndexSet::full(n), model).unwrap();
    let mut r = rng(8);
    for seed in 0..5 {
        let x = BitBlock::random(n, &mut r);
        let v = enc.encode(&x, &Bits::zeros(0), &mut rng(seed)).unwrap();
        assert_eq!(v, polar_transform(&x));
    }
}

#[test]
fn prior_only_encoder_draws_from_the_prior() {
    let n = 4;
    let ch = TestChannel::Bsc { beta: 0.2 };
    let pmf = joint_pmf(&JointSourceSpec::DbmsChain { p_x: 0.3, p: 0.1, q: 0.0, z_present: false })
        .unwrap()
        .with_auxiliary(&ch)
        .unwrap();
    let model = pmf.pair_model(Var::Aux, &[X]).unwrap();
    let pu1 = pmf.marginal(&[Var::Aux]).unwrap().prob(1);
    let enc = StochasticEncoder::new(IndexSet::empty(n), IndexSet::empty(n), model).unwrap();
    for x in 0..16 {
        let xb = int_block(x, n);
        let mut total = 0.0;
        for v in 0..16 {
            let vb = int_block(v, n);
            let u = polar_transform(&vb);
            let prior: f64 = u.bits().iter().map(|b| if b { pu1 } else { 1.0 - pu1 }).product();
            let got = enc.prob(&xb, &vb, None);
            assert!((got - prior).abs() < 1e-12, "x={x} v={v}");
            total += got;
        }
        assert!((total - 1.0).abs() < 1e-12);
    }
}

#[test]
fn encoder_closeness_at_8() {
    let n = 8;
    let spec = dbms(0.05, 0.2, true);
    let ch = TestChannel::Bsc { beta: 0.1 };
    let sets = construct(ModelTag::Model2, &spec, Some(&ch), n, Construction::Exact, &BuildOptions::default(), &mut rng(0)).unwrap();
    let plan = QuantizedPlan::new(&spec, &ch, &sets).unwrap();
    let t = QuantizerTables::new(&spec, &ch, &plan).unwrap();
    let (p, q) = t.joint_pair();
    let delta = sets.delta_h.max(sets.delta_v);
    let d = kl_divergence(&p, &q).unwrap();
    assert!(d <= encoder_divergence_bound(n, delta), "D = {d}");
    let v = variational_distance(&p, &q).unwrap();
    assert!(v <= encoder_distance_bound(n, delta), "V = {v}");
    // Marginal on V only, by data processing.
    let size = 1 << n;
    let pv: Vec<f64> = (0..size).map(|v| (0..size).map(|x| p[x * size + v]).sum()).collect();
    let qv: Vec<f64> = (0..size).map(|v| (0..size).map(|x| q[x * size + v]).sum()).collect();
    let vv = variational_distance(&qv, &pv).unwrap();
    assert!(vv <= v + 1e-12 && vv <= encoder_distance_bound(n, delta));
}

#[test]
fn encoder_respects_shared_randomness() {
    let n = 8;
    let spec = dbms(0.05, 0.2, true);
    let ch = TestChannel::Bsc { beta: 0.1 };
    let sets = construct(ModelTag::Model2, &spec, Some(&ch), n, Construction::Exact, &BuildOptions::default(), &mut rng(0)).unwrap();
    let plan = QuantizedPlan::new(&spec, &ch, &sets).unwrap();
    let enc = &plan.encoder;
    let mut r = rng(9);
    for _ in 0..50 {
        let x = BitBlock::random(n, &mut r);
        let rb = Bits::random(enc.v_ux.len(), &mut r);
        let v = enc.encode(&x, &rb, &mut r).unwrap();
        assert_eq!(polar_skg::polar_core::extract(v.bits(), &enc.v_ux).unwrap(), rb);
        assert!(enc.prob(&x, &v, Some(&rb)) > 0.0);
    }
    assert!(enc.encode(&BitBlock::zeros(n), &Bits::zeros(enc.v_ux.len() + 1), &mut r).is_err());
}
