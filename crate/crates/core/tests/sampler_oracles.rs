use std::f64::consts::PI;

use photon_field::lattice::GridSpec;
use photon_field::optimizer::{most_likely_density, PhotonContent};
use photon_field::sampler::{expected_density, Sampler};
use photon_field::verify::ks_statistic;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn grid() -> GridSpec {
    GridSpec::new(128, 20.0 * PI).unwrap()
}

/// Accept-reject draws of `s` with density `∝ s^n e^{-λ s}` under an
/// `Exp(λ/2)` envelope.
fn accept_reject(n: u32, lambda: f64, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    let peak = 2.0 * n as f64 / lambda;
    let log_ratio = |s: f64| {
        let tail = -0.5 * lambda * (s - peak);
        if n == 0 {
            tail
        } else {
            n as f64 * (s / peak).ln() + tail
        }
    };
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let s = -(1.0 - rng.random::<f64>()).ln() * 2.0 / lambda;
        if rng.random::<f64>().ln() <= log_ratio(s) {
            out.push(s);
        }
    }
    out
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[test]
fn sampler_agrees_with_accept_reject() {
    let g = grid();
    let k = 10;
    let lambda = 2.0 * g.omega(k) * g.dp();
    for n in [1u32, 4] {
        let sampler = Sampler::new(g, &PhotonContent::single(k, n), 17).unwrap();
        let ours: Vec<f64> = sampler.stream(50_000).map(|f| f.at(k).norm_sqr()).collect();
        let theirs = accept_reject(n, lambda, 50_000, 1234 + n as u64);
        let (m1, s1) = mean_and_se(&ours);
        let (m2, s2) = mean_and_se(&theirs);
        assert!(
            (m1 - m2).abs() < 4.0 * (s1 * s1 + s2 * s2).sqrt(),
            "n={n}: {m1} vs {m2}"
        );

        // two-sample KS at the 1% level
        let mut sorted = theirs.clone();
        sorted.sort_by(f64::total_cmp);
        let ecdf = |x: f64| sorted.partition_point(|&v| v <= x) as f64 / sorted.len() as f64;
        let d = ks_statistic(ours, ecdf);
        assert!(d < 1.628 * (2.0 / 50_000.0f64).sqrt(), "n={n}: D={d}");
    }
}

/// `E|z|²` from trapezoid quadrature of the radial density `r^{2n+1} e^{-λ r²}`.
fn quadrature_moment(n: u32, lambda: f64) -> f64 {
    let r_max = (60.0 / lambda).sqrt() + 10.0;
    let steps = 200_000;
    let h = r_max / steps as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..=steps {
        let r = i as f64 * h;
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
        let f = r.powi(2 * n as i32 + 1) * (-lambda * r * r).exp();
        num += w * r * r * f;
        den += w * f;
    }
    num / den
}

#[test]
fn expected_density_matches_radial_quadrature() {
    let g = grid().with_mass(0.3).unwrap();
    for k in [1i64, 10, 37] {
        let lambda = 2.0 * g.omega(k) * g.dp();
        for n in [0u32, 1, 3, 6] {
            let content = if n == 0 {
                PhotonContent::vacuum()
            } else {
                PhotonContent::single(k, n)
            };
            let exact = expected_density(&g, &content, k).unwrap();
            let quad = quadrature_moment(n, lambda);
            assert!(
                (exact - quad).abs() < 1e-8 * exact,
                "k={k} n={n}: {exact} vs {quad}"
            );
        }
    }
}

#[test]
fn histogram_mode_sits_at_closed_form_maximizer() {
    let g = grid();
    let k = 10;
    let n = 4;
    let content = PhotonContent::single(k, n);
    let target = most_likely_density(&g, &content).unwrap().density.at(k);
    let sampler = Sampler::new(g, &content, 5).unwrap();
    let width = 4.0;
    let mut counts = [0u32; 40];
    for f in sampler.stream(100_000) {
        let bin = (f.at(k).norm_sqr() / width) as usize;
        if bin < counts.len() {
            counts[bin] += 1;
        }
    }
    let best = (0..counts.len()).max_by_key(|&i| counts[i]).unwrap();
    let mode = (best as f64 + 0.5) * width;
    assert!((mode - target).abs() <= width, "mode {mode} vs {target}");
}
