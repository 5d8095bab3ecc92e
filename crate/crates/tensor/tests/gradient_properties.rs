//! Every registered operation is checked against the central-difference
//! oracle on random inputs in [-2, 2].

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use teamgrad_tensor::{finite_diff_grad, max_rel_error, Tape, Tensor, Var};

fn random_tensor(rng: &mut ChaCha8Rng, shape: Vec<usize>) -> Tensor {
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    Tensor::new(shape, data).unwrap()
}

/// Runs `build` to produce a scalar loss from one differentiable input,
/// then compares tape gradients against finite differences.
fn check_op<F>(name: &str, input: &Tensor, build: F)
where
    F: Fn(&mut Tape, Var) -> Var,
{
    let mut tape = Tape::new();
    let x = tape.param(input);
    let loss = build(&mut tape, x);
    tape.backward(loss).unwrap();
    let analytic = tape.grad(x).unwrap().to_vec();

    let fd = finite_diff_grad(
        |t| {
            let mut tape = Tape::new();
            let x = tape.constant(t);
            let loss = build(&mut tape, x);
            tape.scalar_value(loss).unwrap()
        },
        input,
        1e-6,
    );
    let err = max_rel_error(&analytic, fd.data());
    assert!(err < 1e-4, "{name}: max relative error {err}");
}

#[test]
fn all_ops_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..5 {
        let a = random_tensor(&mut rng, vec![3, 4]);
        let b = random_tensor(&mut rng, vec![3, 4]);
        let m = random_tensor(&mut rng, vec![4, 2]);

        check_op("matmul", &a, |t, x| {
            let mv = t.constant(&m);
            let p = t.matmul(x, mv).unwrap();
            t.sum_all(p)
        });
        check_op("add", &a, |t, x| {
            let bv = t.constant(&b);
            let s = t.add(x, bv).unwrap();
            let sq = t.mul_elem(s, s).unwrap();
            t.sum_all(sq)
        });
        check_op("sub", &a, |t, x| {
            let bv = t.constant(&b);
            let s = t.sub(x, bv).unwrap();
            let sq = t.mul_elem(s, s).unwrap();
            t.sum_all(sq)
        });
        check_op("mul_elem", &a, |t, x| {
            let bv = t.constant(&b);
            let p = t.mul_elem(x, bv).unwrap();
            t.sum_all(p)
        });
        check_op("min_elem", &a, |t, x| {
            let bv = t.constant(&b);
            let p = t.min_elem(x, bv).unwrap();
            t.sum_all(p)
        });
        check_op("scale", &a, |t, x| {
            let s = t.scale(x, -1.7);
            let sq = t.mul_elem(s, s).unwrap();
            t.sum_all(sq)
        });
        check_op("add_scalar", &a, |t, x| {
            let s = t.add_scalar(x, 0.37);
            let sq = t.mul_elem(s, s).unwrap();
            t.sum_all(sq)
        });
        check_op("clamp", &a, |t, x| {
            // Bounds chosen away from sampled values to keep FD valid.
            let c = t.clamp(x, -1.499_999, 1.499_999).unwrap();
            let sq = t.mul_elem(c, c).unwrap();
            t.sum_all(sq)
        });
        check_op("tanh", &a, |t, x| {
            let y = t.tanh_elem(x);
            t.sum_all(y)
        });
        check_op("exp", &a, |t, x| {
            let y = t.exp_elem(x);
            t.sum_all(y)
        });
        check_op("softmax_rows", &a, |t, x| {
            let s = t.softmax_rows(x).unwrap();
            let w = t.constant(&Tensor::matrix(3, 4, (0..12).map(|i| i as f64 * 0.1).collect()).unwrap());
            let p = t.mul_elem(s, w).unwrap();
            t.sum_all(p)
        });
        check_op("transpose", &a, |t, x| {
            let tr = t.transpose(x).unwrap();
            let sq = t.mul_elem(tr, tr).unwrap();
            t.sum_all(sq)
        });
        check_op("reshape", &a, |t, x| {
            let r = t.reshape(x, vec![2, 6]).unwrap();
            let sq = t.mul_elem(r, r).unwrap();
            t.sum_all(sq)
        });
        check_op("concat_cols", &a, |t, x| {
            let bv = t.constant(&b);
            let cat = t.concat_cols(&[x, bv, x]).unwrap();
            let sq = t.mul_elem(cat, cat).unwrap();
            t.sum_all(sq)
        });
        check_op("slice_cols", &a, |t, x| {
            let s = t.slice_cols(x, 1, 3).unwrap();
            let sq = t.mul_elem(s, s).unwrap();
            t.sum_all(sq)
        });
        check_op("mean_all", &a, |t, x| {
            let m = t.mean_all(x);
            t.sum_all(m)
        });

        let _ = trial;
    }
}

#[test]
fn composite_attention_like_graph_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let w = random_tensor(&mut rng, vec![4, 3]);
    let x = random_tensor(&mut rng, vec![3, 5]);
    check_op("attention-like", &w, |t, wv| {
        let xv = t.constant(&x);
        let q = t.matmul(wv, xv).unwrap();
        let qt = t.transpose(q).unwrap();
        let scores = t.matmul(qt, q).unwrap();
        let scaled = t.scale(scores, 0.5);
        let p = t.softmax_rows(scaled).unwrap();
        let pt = t.transpose(p).unwrap();
        let y = t.matmul(q, pt).unwrap();
        let z = t.tanh_elem(y);
        t.sum_all(z)
    });
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Softmax rows sum to one and are invariant to adding a constant
    /// to a row.
    #[test]
    fn softmax_shift_invariance(
        row in proptest::collection::vec(-50.0f64..50.0, 2..6),
        shift in -100.0f64..100.0,
    ) {
        let n = row.len();
        let mut tape = Tape::new();
        let base = tape.constant(&Tensor::matrix(1, n, row.clone()).unwrap());
        let shifted = tape.add_scalar(base, shift);
        let s0 = tape.softmax_rows(base).unwrap();
        let s1 = tape.softmax_rows(shifted).unwrap();
        let v0 = tape.value(s0).data().to_vec();
        let v1 = tape.value(s1).data().to_vec();
        let sum: f64 = v0.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        for (a, b) in v0.iter().zip(&v1) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
