use proptest::prelude::*;

use mtensor::compress::{compress, Method};
use mtensor::container::{decode, encode, Container};
use mtensor::io::RawTensor;
use mtensor::mprod::{conj_transpose, identity_tensor, mprod};
use mtensor::synthetic::{gen_synthetic, SyntheticKind, SyntheticParams};
use mtensor::tsvd::{tsvdm, tsvdm2};
use mtensor::{make_transform, Tensor3, Transform, TransformKind};

fn random(dims: [usize; 3], seed: u64) -> Tensor3<f64> {
    gen_synthetic(SyntheticKind::RandomDense, dims, seed, SyntheticParams::default()).unwrap()
}

fn real_kind() -> impl Strategy<Value = TransformKind> {
    prop_oneof![
        Just(TransformKind::Identity),
        Just(TransformKind::DctOrthogonal),
        Just(TransformKind::HaarOrthogonal),
        Just(TransformKind::RandomOrthogonal),
    ]
}

fn real_transform(kind: TransformKind, n: usize, seed: u64) -> Transform<f64> {
    match make_transform(kind, n, seed).unwrap() {
        mtensor::AnyTransform::Real(t) => t,
        mtensor::AnyTransform::Complex(_) => unreachable!(),
    }
}

fn dim() -> impl Strategy<Value = usize> {
    1usize..6
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn forward_inverse(m in dim(), p in dim(), n in dim(), kind in real_kind(), seed in any::<u64>()) {
        let a = random([m, p, n], seed);
        let t = real_transform(kind, n, seed);
        let back = t.inverse(&t.forward(&a).unwrap()).unwrap();
        prop_assert!(back.distance(&a).unwrap() <= 1e-12 * (1.0 + a.frobenius_norm()));
    }

    #[test]
    fn dft_round_trip(m in dim(), p in dim(), n in dim(), seed in any::<u64>()) {
        let a = random([m, p, n], seed).to_complex();
        let t = Transform::dft(n).unwrap();
        let back = t.inverse(&t.forward(&a).unwrap()).unwrap();
        prop_assert!(back.distance(&a).unwrap() <= 1e-12 * (1.0 + a.frobenius_norm()));
    }

    #[test]
    fn identity_and_associativity(
        m in dim(), p in dim(), r in dim(), s in dim(), n in dim(), kind in real_kind(), seed in any::<u64>()
    ) {
        let t = real_transform(kind, n, seed);
        let a = random([m, p, n], seed);
        let b = random([p, r, n], seed ^ 1);
        let c = random([r, s, n], seed ^ 2);
        let i = identity_tensor(p, &t).unwrap();
        prop_assert!(mprod(&a, &i, &t).unwrap().distance(&a).unwrap() < 1e-11);
        let left = mprod(&mprod(&a, &b, &t).unwrap(), &c, &t).unwrap();
        let right = mprod(&a, &mprod(&b, &c, &t).unwrap(), &t).unwrap();
        prop_assert!(left.distance(&right).unwrap() <= 1e-11 * (1.0 + left.frobenius_norm()));
    }

    #[test]
    fn conj_transpose_involution(m in dim(), p in dim(), n in dim(), kind in real_kind(), seed in any::<u64>()) {
        let t = real_transform(kind, n, seed);
        let a = random([m, p, n], seed);
        let h = conj_transpose(&a, &t).unwrap();
        prop_assert_eq!(h.dims(), [p, m, n]);
        prop_assert!(conj_transpose(&h, &t).unwrap().distance(&a).unwrap() < 1e-12);
    }

    #[test]
    fn exact_reconstruction_and_energy(
        m in dim(), p in dim(), n in dim(), kind in real_kind(), seed in any::<u64>()
    ) {
        let t = real_transform(kind, n, seed);
        let a = random([m, p, n], seed);
        let f = tsvdm(&a, &t).unwrap();
        let norm = a.frobenius_norm();
        prop_assert!(a.distance(&f.reconstruct()).unwrap() <= 1e-11 * (1.0 + norm));
        prop_assert!(f.trank() <= m.min(p));
        prop_assert!(f.multirank().rho().iter().all(|&r| r <= m.min(p)));
        // orthogonal transforms preserve energy: Σ σ² = ‖A‖²
        let energy: f64 = (0..n).flat_map(|i| f.face_singular_values(i)).map(|s| s * s).sum();
        prop_assert!((energy - norm * norm).abs() <= 1e-10 * (1.0 + norm * norm));
    }

    #[test]
    fn error_monotone_in_k(m in 2usize..6, p in 2usize..6, n in dim(), kind in real_kind(), seed in any::<u64>()) {
        let t = real_transform(kind, n, seed);
        let a = random([m, p, n], seed);
        let f = tsvdm(&a, &t).unwrap();
        let errs: Vec<f64> = (1..=m.min(p))
            .map(|k| a.distance(&f.truncate(k).unwrap().reconstruct()).unwrap())
            .collect();
        prop_assert!(errs.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn error_monotone_in_gamma(
        m in dim(), p in dim(), n in dim(), kind in real_kind(), seed in any::<u64>(),
        g1 in 0.05f64..1.0, g2 in 0.05f64..1.0
    ) {
        let t = real_transform(kind, n, seed);
        let a = random([m, p, n], seed);
        let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
        let r_lo = tsvdm2(&a, &t, lo).unwrap();
        let r_hi = tsvdm2(&a, &t, hi).unwrap();
        let e_lo = a.distance(&r_lo.reconstruct().unwrap()).unwrap();
        let e_hi = a.distance(&r_hi.reconstruct().unwrap()).unwrap();
        prop_assert!(e_hi <= e_lo + 1e-12);
        prop_assert!(r_hi.multirank().implicit_rank() >= r_lo.multirank().implicit_rank());
        prop_assert!((e_hi * e_hi - r_hi.predicted_error_sq()).abs() <= 1e-10 * (1.0 + a.frobenius_norm_sq()));
    }

    #[test]
    fn raw_round_trip(m in dim(), p in dim(), n in dim(), seed in any::<u64>()) {
        let raw = RawTensor::Three(random([m, p, n], seed));
        let bytes = raw.to_bytes();
        prop_assert_eq!(RawTensor::from_bytes(&bytes).unwrap().to_bytes(), bytes);
    }

    #[test]
    fn container_round_trip_and_storage(
        m in 2usize..6, p in 2usize..6, n in 2usize..5, seed in any::<u64>(), gamma in 0.3f64..1.0,
        which in 0usize..4, dft in any::<bool>(), conjsym in any::<bool>()
    ) {
        let a = RawTensor::Three(random([m, p, n], seed));
        let method = match which {
            0 => Method::Tsvdm { k: 1 },
            1 => Method::Tsvdm2 { gamma },
            2 => Method::Sequential { k: 1, q: 1 },
            _ => Method::Fourd { gamma },
        };
        let kind = if dft { TransformKind::DftUnnormalized } else { TransformKind::DctOrthogonal };
        let rep = compress(&a, &method, kind, seed).unwrap();
        let c = encode(&rep, conjsym).unwrap();
        let storage = rep.storage(conjsym);
        prop_assert_eq!(c.payload_floats(), storage.floats);
        let bytes = c.to_bytes();
        let parsed = Container::from_bytes(&bytes).unwrap();
        prop_assert_eq!(parsed.to_bytes(), bytes);
        let back = decode(&parsed).unwrap();
        prop_assert_eq!(back.storage(conjsym), storage);
        let d = rep.reconstruct().unwrap().distance(&back.reconstruct().unwrap()).unwrap();
        prop_assert!(d <= 1e-10 * (1.0 + a.frobenius_norm()), "{}", d);
    }
}
