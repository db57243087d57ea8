use std::path::PathBuf;

use photon_field::wavefunctional::{nphoton_polynomial, PhotonPolynomial};

fn golden(n: u32) -> PhotonPolynomial {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("tests/golden/q{n}.json"));
    let text = std::fs::read_to_string(&path).unwrap();
    PhotonPolynomial::from_json(&serde_json::from_str(&text).unwrap()).unwrap()
}

#[test]
fn generated_polynomials_match_golden_files() {
    for n in 0..=4 {
        assert_eq!(nphoton_polynomial(n), golden(n), "Q_{n}");
    }
}

#[test]
fn golden_round_trip_through_json() {
    for n in 0..=4 {
        let q = nphoton_polynomial(n);
        assert_eq!(
            PhotonPolynomial::from_json(&q.to_json()).unwrap(),
            golden(n)
        );
    }
}

#[test]
fn large_coefficients_survive_json() {
    // Q_40 has coefficients beyond i64.
    let q = nphoton_polynomial(40);
    assert!(q.to_json().to_string().contains('"'));
    assert_eq!(PhotonPolynomial::from_json(&q.to_json()).unwrap(), q);
}
