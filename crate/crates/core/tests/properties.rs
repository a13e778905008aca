use num_complex::Complex64;
use proptest::prelude::*;
use unfolded_pgd_core::gradient::{objective_gradient, tie_margin};
use unfolded_pgd_core::model::sample_channel;
use unfolded_pgd_core::pgd::{run_pgd, StepSchedule};
use unfolded_pgd_core::power::{is_feasible, project, random_init};
use unfolded_pgd_core::rates::{min_rate, rate_report, Constraint, RateReport};
use unfolded_pgd_core::{seed, ChannelRealization, HopChannel, Matrix, NoiseProfile, Topology};

fn topology() -> impl Strategy<Value = Topology> {
    prop::collection::vec(1usize..=3, 2..=3).prop_map(|s| Topology::new(s).unwrap())
}

/// A topology with a random channel, allocation and noise level.
fn instance() -> impl Strategy<Value = (ChannelRealization, Matrix, NoiseProfile)> {
    (topology(), any::<u64>(), -10.0f64..10.0).prop_map(|(t, s, db)| {
        let mut rng = seed::stream(s, &[]);
        let h = sample_channel(&t, 1.0, &mut rng).unwrap();
        let p = random_init(&t, &mut rng).into_inner();
        (h, p, NoiseProfile::uniform_db(t.num_hops(), db, 1.0).unwrap())
    })
}

/// Rows of `hop`'s transmitting block in the stacked matrix.
fn block_rows(t: &Topology, hop: usize) -> std::ops::Range<usize> {
    let start = t.block_offset(hop);
    start..start + t.transmitters(hop)
}

fn all_rates(r: &RateReport) -> Vec<f64> {
    let mut v = r.first_hop_rates.as_slice().to_vec();
    for m in &r.later_hop_rates {
        v.extend_from_slice(m.as_slice());
    }
    v.extend_from_slice(&r.message_rates);
    v
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Relabels messages: column `n` of `p` moves to `perm[n]`, and end user
/// `n` becomes end user `perm[n]`.
fn relabel(h: &ChannelRealization, p: &Matrix, perm: &[usize]) -> (ChannelRealization, Matrix) {
    let t = h.topology();
    let mut q = Matrix::zeros(p.rows(), p.cols());
    for r in 0..p.rows() {
        for (n, &to) in perm.iter().enumerate() {
            q.set(r, to, p.get(r, n));
        }
    }
    let permute_rx = |coeffs: &[Complex64], rx: usize| {
        let mut out = coeffs.to_vec();
        for (k, c) in coeffs.iter().enumerate() {
            out[(k / rx) * rx + perm[k % rx]] = *c;
        }
        out
    };
    let last = t.num_hops() - 1;
    let mut later = h.later_hops().to_vec();
    let hop = &later[last - 1];
    later[last - 1] =
        HopChannel::new(hop.transmitters(), hop.receivers(), permute_rx(hop.coeffs(), hop.receivers())).unwrap();
    let g = ChannelRealization::new(&t, h.first_hop().to_vec(), later, 0).unwrap();
    (g, q)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn link_count_formula(t in topology()) {
        let m = t.hop_sizes();
        let expected = m[0] + m.windows(2).map(|w| w[0] * w[1]).sum::<usize>();
        prop_assert_eq!(t.link_count(), expected);
        prop_assert_eq!(ChannelRealization::zeros(&t).links().count(), expected);
    }

    #[test]
    fn projection_is_feasible_and_idempotent(
        rows in 1usize..5, cols in 1usize..5, data in prop::collection::vec(-3.0f64..3.0, 25)
    ) {
        let m = Matrix::from_vec(rows, cols, data[..rows * cols].to_vec()).unwrap();
        let p = project(&m).unwrap();
        prop_assert!(is_feasible(&p));
        prop_assert_eq!(project(&p).unwrap(), p.clone());
    }

    #[test]
    fn degenerate_rows_become_uniform(cols in 1usize..6, data in prop::collection::vec(-3.0f64..=0.0, 6)) {
        let m = Matrix::from_vec(1, cols, data[..cols].to_vec()).unwrap();
        let p = project(&m).unwrap();
        let u = 1.0 / (cols as f64).sqrt();
        prop_assert!(p.row(0).iter().all(|&v| v == u));
    }

    #[test]
    fn relabeling_messages_permutes_rates((h, p, noise) in instance(), shift in 0usize..3) {
        let n = p.cols();
        let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        let (g, q) = relabel(&h, &p, &perm);
        let a = rate_report(&h, &p, &noise);
        let b = rate_report(&g, &q, &noise);
        for (i, &to) in perm.iter().enumerate() {
            prop_assert!(close(a.message_rates[i], b.message_rates[to]), "{:?} {:?}", a.message_rates, b.message_rates);
        }
        prop_assert!(close(a.min_rate, b.min_rate));
    }

    #[test]
    fn rates_are_nonnegative_and_fall_with_noise((h, p, noise) in instance(), factor in 1.0f64..10.0) {
        let a = rate_report(&h, &p, &noise);
        let b = rate_report(&h, &p, &noise.scaled(factor));
        let (va, vb) = (all_rates(&a), all_rates(&b));
        prop_assert!(va.iter().all(|&x| x >= 0.0));
        for (x, y) in va.iter().zip(&vb) {
            prop_assert!(y <= x, "{} > {}", y, x);
        }
    }

    #[test]
    fn stronger_channels_never_lower_a_rate((h, p, noise) in instance(), c in 1.0f64..5.0, phase in 0.0f64..6.3) {
        let g = h.scaled(Complex64::new(c * phase.cos(), c * phase.sin()));
        let (a, b) = (rate_report(&h, &p, &noise), rate_report(&g, &p, &noise));
        for (x, y) in all_rates(&a).iter().zip(all_rates(&b)) {
            prop_assert!(y >= x * (1.0 - 1e-12), "{} < {}", y, x);
        }
    }

    #[test]
    fn single_path_closed_form(s in any::<u64>(), db in -10.0f64..10.0) {
        let t = Topology::new(vec![1, 1]).unwrap();
        let h = sample_channel(&t, 1.0, &mut seed::stream(s, &[])).unwrap();
        let noise = NoiseProfile::uniform_db(2, db, 1.0).unwrap();
        let p = Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let hop = |g: Complex64| (1.0 + g.norm_sqr() / noise.hop_var(0)).log2();
        let expected = hop(h.first_hop()[0]).min(hop(h.hop(1).get(0, 0)));
        prop_assert!(close(min_rate(&h, &p, &noise).0, expected));
    }

    #[test]
    fn gradient_lives_on_the_binding_block((h, p, noise) in instance()) {
        let t = h.topology();
        let g = objective_gradient(&h, &p, &noise);
        let hop = match g.active_constraint {
            Constraint::Relay { hop, .. } => hop,
            Constraint::EndUser { .. } => t.num_hops() - 1,
        };
        let rows = block_rows(&t, hop);
        for r in 0..p.rows() {
            if !rows.contains(&r) {
                prop_assert!(g.values.row(r).iter().all(|&v| v == 0.0));
            }
        }
        // the derivative along the binding message's own powers is positive
        // whenever its signal and rate are positive and finite
        let n = g.active_message;
        let along: f64 = rows.clone().map(|r| p.get(r, n) * g.values.get(r, n)).sum();
        let rate = min_rate(&h, &p, &noise).0;
        if rate.is_finite() && rate > 1e-12 && tie_margin(&h, &p, &noise) >= 1e-9 {
            prop_assert!(along > 0.0, "{}", along);
        }
    }

    #[test]
    fn pgd_iterates_feasible_and_reproducible((h, _, noise) in instance(), s in any::<u64>(),
                                               steps in prop::collection::vec(0.0f64..2.0, 0..12)) {
        let t = h.topology();
        let p0 = random_init(&t, &mut seed::stream(s, &[1]));
        let mu = StepSchedule::new(steps).unwrap();
        let a = run_pgd(&h, &noise, &p0, &mu);
        prop_assert_eq!(a.iterates.len(), mu.iterations() + 1);
        prop_assert!(a.iterates.iter().all(|p| is_feasible(p)));
        prop_assert_eq!(&a, &run_pgd(&h, &noise, &p0, &mu));
        let best = a.best_so_far();
        prop_assert!(best.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn later_steps_do_not_affect_earlier_iterates((h, _, noise) in instance(), s in any::<u64>(),
                                                  steps in prop::collection::vec(0.01f64..1.0, 2..10),
                                                  k in 0usize..10, bump in 0.01f64..1.0) {
        let k = k % steps.len();
        let p0 = random_init(&h.topology(), &mut seed::stream(s, &[2]));
        let a = run_pgd(&h, &noise, &p0, &StepSchedule::new(steps.clone()).unwrap());
        let mut changed = steps.clone();
        changed[k] += bump;
        let b = run_pgd(&h, &noise, &p0, &StepSchedule::new(changed).unwrap());
        prop_assert_eq!(&a.iterates[..=k], &b.iterates[..=k]);
    }
}
