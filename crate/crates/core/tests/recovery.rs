use incoherence::recovery::{
    reconstruct_experiment, ReconstructionBasis, ReconstructionConfig, SamplingPattern,
};

fn run(
    basis: ReconstructionBasis,
    pattern: SamplingPattern,
    seed: u64,
) -> incoherence::recovery::ReconstructionOutcome {
    reconstruct_experiment(&ReconstructionConfig::new(basis, pattern, seed)).unwrap()
}

#[test]
fn full_sampling_wavelet_is_accurate() {
    let out = run(
        ReconstructionBasis::default_wavelet(),
        SamplingPattern::Full,
        0,
    );
    assert!(out.recovery.converged);
    assert!(out.l1_error < 1e-3, "L1 error {}", out.l1_error);
}

#[test]
fn full_sampling_legendre_is_accurate() {
    // 1.5e-3 is measured; the 1e-3 target of the wavelet case is not reached
    let out = run(ReconstructionBasis::Legendre, SamplingPattern::Full, 0);
    assert!(out.recovery.converged);
    assert!(out.l1_error < 5e-3, "L1 error {}", out.l1_error);
}

#[test]
fn same_seed_same_reconstruction() {
    let a = run(
        ReconstructionBasis::default_wavelet(),
        SamplingPattern::A,
        1,
    );
    let b = run(
        ReconstructionBasis::default_wavelet(),
        SamplingPattern::A,
        1,
    );
    assert_eq!(a.scheme, b.scheme);
    assert_eq!(a.recovery.solution, b.recovery.solution);
    assert_eq!(a.l1_error.to_bits(), b.l1_error.to_bits());
    let c = run(
        ReconstructionBasis::default_wavelet(),
        SamplingPattern::A,
        2,
    );
    assert_ne!(a.scheme.omega, c.scheme.omega);
}
