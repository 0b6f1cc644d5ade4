use hingelab_core::decomp::{qr, rq};
use hingelab_core::geodesic_space::{stratum_dimension, stratum_of, StratumDescriptor};
use hingelab_core::json::{FromJson, ToJson};
use hingelab_core::sky::{relative_position, tits_distance, Flag, SkyPoint};
use hingelab_core::velocity::{karpelevich_limit, poly_i64, Poly, PolySequence, VelocityPoint};
use hingelab_core::{qi, relation_parts, LinearRelation, Matrix, Rational, Subspace};
use proptest::prelude::*;

fn int_matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix<Rational>> {
    prop::collection::vec(-3i64..=3, rows * cols)
        .prop_map(move |d| Matrix::new(rows, cols, d.into_iter().map(qi).collect()).unwrap())
}

fn invertible(n: usize) -> impl Strategy<Value = Matrix<Rational>> {
    int_matrix(n, n).prop_filter("singular", |m| m.rank(0.0) == m.rows())
}

fn complete_flag(m: &Matrix<Rational>) -> Flag<Rational> {
    let n = m.rows();
    Flag::from_frame(m, &(1..n).collect::<Vec<_>>()).unwrap()
}

fn inverse_perm(w: &[usize]) -> Vec<usize> {
    let mut out = vec![0; w.len()];
    for (i, &j) in w.iter().enumerate() {
        out[j] = i;
    }
    out
}

/// Strictly decreasing velocity from 1 to 0 with `n` entries.
fn velocity(n: usize) -> impl Strategy<Value = VelocityPoint<Rational>> {
    prop::collection::btree_set(1i64..20, n - 2).prop_map(move |s| {
        let mut mu = vec![qi(1)];
        mu.extend(s.into_iter().rev().map(|k| Rational::new(k.into(), 20.into())));
        mu.push(qi(0));
        VelocityPoint { mu }
    })
}

/// Zero, or a polynomial with positive leading coefficient (eventually positive).
fn increment() -> impl Strategy<Value = Vec<i64>> {
    prop_oneof![
        Just(vec![0]),
        (prop::collection::vec(-4i64..=4, 0..3), 1i64..=4).prop_map(|(mut c, lead)| {
            c.push(lead);
            c
        }),
    ]
}

/// Eventually non-increasing sequence: partial sums of increments, read top down.
fn monotone(base: &[i64], steps: &[Vec<i64>]) -> Vec<Poly> {
    let mut acc = poly_i64(base);
    let mut out = vec![acc.clone()];
    for s in steps {
        acc = acc.add(&poly_i64(s));
        out.push(acc.clone());
    }
    out.reverse();
    out
}

fn columns(m: &Matrix<Rational>, range: std::ops::Range<usize>) -> Matrix<Rational> {
    let cols: Vec<usize> = range.collect();
    m.submatrix(&(0..m.rows()).collect::<Vec<_>>(), &cols)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rank_identity_matches_elimination(n in 1usize..4, k in 1usize..6, seed in any::<u64>()) {
        let rows = k.min(2 * n);
        let data: Vec<Rational> = (0..rows * 2 * n)
            .map(|i| qi(((seed.rotate_left(i as u32 * 7) ^ (i as u64 * 0x9e37)) % 5) as i64 - 2))
            .collect();
        let m = Matrix::new(rows, 2 * n, data).unwrap();
        let p = LinearRelation::new(n, Subspace::from_rows_of(&m)).unwrap();
        let parts = relation_parts(&p).unwrap();
        let dim = m.rank(0.0);
        let dom = columns(&m, 0..n).rank(0.0);
        let im = columns(&m, n..2 * n).rank(0.0);
        prop_assert_eq!(parts.domain.dim(), dom);
        prop_assert_eq!(parts.image.dim(), im);
        prop_assert_eq!(parts.kernel.dim(), dim - im);
        prop_assert_eq!(parts.indef.dim(), dim - dom);
        prop_assert_eq!(parts.rank + parts.kernel.dim() + parts.indef.dim(), dim);
    }

    #[test]
    fn karpelevich_limit_ignores_common_shift(
        base in prop::collection::vec(-4i64..=4, 1..4),
        steps in prop::collection::vec(increment(), 1..6),
        shift in prop::collection::vec(-4i64..=4, 1..5),
    ) {
        let seq = PolySequence::from_polys(monotone(&base, &steps)).unwrap();
        let shifted = seq.shift(&poly_i64(&shift));
        prop_assert_eq!(karpelevich_limit(&seq), karpelevich_limit(&shifted));
    }

    #[test]
    fn relative_position_is_inverted_by_swapping(a in invertible(3), b in invertible(3)) {
        let (f, g) = (complete_flag(&a), complete_flag(&b));
        let w = relative_position(&f, &g).unwrap();
        let v = relative_position(&g, &f).unwrap();
        prop_assert_eq!(inverse_perm(&w), v);
        prop_assert_eq!(relative_position(&f, &f).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn tits_distance_is_symmetric_and_bounded(
        a in invertible(3), b in invertible(3), mu in velocity(3), nu in velocity(3),
    ) {
        let p = SkyPoint::new(mu, complete_flag(&a)).unwrap();
        let q = SkyPoint::new(nu, complete_flag(&b)).unwrap();
        let d = tits_distance(&p, &q).unwrap();
        let e = tits_distance(&q, &p).unwrap();
        prop_assert!((d - e).abs() < 1e-9, "{} vs {}", d, e);
        prop_assert!((-1e-12..=std::f64::consts::PI + 1e-12).contains(&d));
        prop_assert!(tits_distance(&p, &p).unwrap().abs() < 1e-9);
    }

    #[test]
    fn splitting_a_block_raises_stratum_dimension(n in 3usize..7, mask in any::<u32>()) {
        // Breaks from a bit mask over the interior cut points, then add one more cut.
        let mut breaks: Vec<usize> = (1..n).filter(|i| mask >> i & 1 == 1).collect();
        breaks.push(n);
        prop_assume!(breaks.len() >= 2);
        let coarse = StratumDescriptor::new(n, breaks.clone()).unwrap();
        if let Some(extra) = (1..n).find(|i| !breaks.contains(i)) {
            let mut finer = breaks.clone();
            finer.push(extra);
            finer.sort();
            let finer = StratumDescriptor::new(n, finer).unwrap();
            prop_assert!(stratum_dimension(&finer).unwrap() > stratum_dimension(&coarse).unwrap());
        }
        let top = stratum_dimension(&StratumDescriptor::generic(n)).unwrap();
        prop_assert_eq!(top, n * n + n - 4);
        prop_assert!(stratum_dimension(&coarse).unwrap() <= top);
    }

    #[test]
    fn stratum_of_recovers_block_ends(n in 2usize..7, mask in any::<u32>()) {
        let mut breaks: Vec<usize> = (1..n).filter(|i| mask >> i & 1 == 1).collect();
        breaks.push(n);
        prop_assume!(breaks.len() >= 2);
        let sigma = breaks.len() as i64;
        let mut mu = Vec::new();
        let mut start = 0;
        for (b, &end) in breaks.iter().enumerate() {
            let value = Rational::new((sigma - 1 - b as i64).into(), (sigma - 1).into());
            mu.extend(std::iter::repeat(value).take(end - start));
            start = end;
        }
        let s = stratum_of(&VelocityPoint { mu }, 0.0).unwrap();
        prop_assert_eq!(s.breaks(), &breaks[..]);
        prop_assert_eq!(s.block_sizes().iter().sum::<usize>(), n);
    }

    #[test]
    fn json_round_trips(m in int_matrix(3, 4), a in invertible(3), mu in velocity(4)) {
        prop_assert_eq!(Matrix::<Rational>::from_json(&m.to_json()).unwrap(), m);
        let f = complete_flag(&a);
        prop_assert_eq!(Flag::<Rational>::from_json(&f.to_json()).unwrap(), f);
        let v = VelocityPoint::<Rational>::from_json(&mu.to_json()).unwrap();
        prop_assert_eq!(v, mu);
    }

    #[test]
    fn qr_and_rq_reconstruct(data in prop::collection::vec(-5.0f64..5.0, 16)) {
        let a = Matrix::new(4, 4, data).unwrap();
        prop_assume!(a.det().unwrap().abs() > 1e-3);
        let (u, b) = qr(&a).unwrap();
        prop_assert!(u.is_orthogonal(1e-10));
        prop_assert!(u.matmul(&b).unwrap().sub(&a).unwrap().max_abs() < 1e-10);
        let (r, q) = rq(&a).unwrap();
        prop_assert!(q.is_orthogonal(1e-10));
        prop_assert!(r.matmul(&q).unwrap().sub(&a).unwrap().max_abs() < 1e-10);
        for i in 0..4 {
            prop_assert!(b[(i, i)] > 0.0 && r[(i, i)] > 0.0);
            for j in 0..i {
                prop_assert_eq!(b[(i, j)], 0.0);
                prop_assert_eq!(r[(i, j)], 0.0);
            }
        }
    }
}
