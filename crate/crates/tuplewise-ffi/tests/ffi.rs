//! Exercise the C ABI exactly as a foreign caller would: through the
//! exported symbols, opaque handles and status codes.

use std::ffi::CStr;
use std::ptr;

use tuplewise_ffi::*;

fn auc_components() -> TwComponents {
    let mut c = TwComponents {
        sigma0_sq: 0.0,
        sigma1_sq: 0.0,
        sigma2_sq: 0.0,
        sigma_sq: 0.0,
    };
    let status = unsafe { tw_components_auc(0.1, 0.9, &mut c) };
    assert_eq!(status, TwStatus::Ok);
    c
}

#[test]
fn components_match_reference_values() {
    let c = auc_components();
    assert!((c.sigma0_sq - 8.1e-3).abs() < 1e-15);
    assert!((c.sigma1_sq - 9.0e-4).abs() < 1e-15);
    assert!((c.sigma2_sq - 9.0e-4).abs() < 1e-15);
    assert!((c.sigma_sq - 9.9e-3).abs() < 1e-15);

    let mut e = c;
    let status = unsafe { tw_components_enumerated(TwKernel::AucIndicator, 0.1, 0.9, &mut e) };
    assert_eq!(status, TwStatus::Ok);
    assert!((e.sigma0_sq - c.sigma0_sq).abs() < 1e-14);

    let mut mean = 0.0;
    assert_eq!(unsafe { tw_auc_mean(0.1, 0.9, &mut mean) }, TwStatus::Ok);
    assert!((mean - 0.99).abs() < 1e-15);
}

#[test]
fn status_codes_and_names() {
    let mut c = auc_components();
    assert_eq!(
        unsafe { tw_components_auc(1.5, 0.5, &mut c) },
        TwStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { tw_components_auc(0.5, 0.5, ptr::null_mut()) },
        TwStatus::NullArgument
    );
    let name = unsafe { CStr::from_ptr(tw_status_name(TwStatus::Divisibility)) };
    assert_eq!(name.to_str().unwrap(), "divisibility violation");
}

#[test]
fn variance_agrees_with_core_library() {
    let c = auc_components();
    let mut v = 0.0;
    let status = unsafe {
        tw_variance(
            TwStrategy::LocalComplete,
            TwScheme::PropSwor,
            &c,
            100,
            50,
            10,
            0,
            0,
            &mut v,
        )
    };
    assert_eq!(status, TwStatus::Ok);
    assert!((v - 4.32e-5).abs() / 4.32e-5 < 1e-12);

    // Divisibility violations surface as their own code.
    let status = unsafe {
        tw_variance(
            TwStrategy::LocalComplete,
            TwScheme::PropSwor,
            &c,
            100,
            51,
            10,
            0,
            0,
            &mut v,
        )
    };
    assert_eq!(status, TwStatus::Divisibility);

    // No closed form for SWOR.
    let status = unsafe {
        tw_variance(
            TwStrategy::LocalComplete,
            TwScheme::Swor,
            &c,
            100,
            50,
            10,
            0,
            0,
            &mut v,
        )
    };
    assert_eq!(status, TwStatus::InvalidArgument);
}

#[test]
fn budget_and_gap() {
    let mut budget = 0u64;
    let status = unsafe {
        tw_pair_budget(TwStrategy::RepartComplete, 100, 50, 10, 0, 3, &mut budget)
    };
    assert_eq!(status, TwStatus::Ok);
    assert_eq!(budget, 1500);

    let c = auc_components();
    let mut gap = 0.0;
    // N B T = nm T0 / N with N=10, B=25, T=2, T0=1.
    let status = unsafe { tw_dominance_gap(&c, 100, 50, 10, 2, 1, 25, &mut gap) };
    assert_eq!(status, TwStatus::Ok);
    assert!(gap > 0.0);

    let status = unsafe { tw_dominance_gap(&c, 100, 50, 10, 2, 1, 26, &mut gap) };
    assert_eq!(status, TwStatus::BudgetExceeded);
}

#[test]
fn dataset_round_trip_and_estimation() {
    let xs = [2.0f64, 0.0];
    let zs = [1.0f64];
    let mut handle: *mut TwDataset = ptr::null_mut();
    let status = unsafe { tw_dataset_new(xs.as_ptr(), 2, zs.as_ptr(), 1, 1, &mut handle) };
    assert_eq!(status, TwStatus::Ok);

    let (mut n, mut m, mut dim) = (0usize, 0usize, 0usize);
    assert_eq!(
        unsafe { tw_dataset_shape(handle, &mut n, &mut m, &mut dim) },
        TwStatus::Ok
    );
    assert_eq!((n, m, dim), (2, 1, 1));

    let mut value = 0.0;
    assert_eq!(
        unsafe { tw_complete_two_sample(handle, TwKernel::AucIndicator, &mut value) },
        TwStatus::Ok
    );
    assert_eq!(value, 0.5);

    unsafe { tw_dataset_free(handle) };
    unsafe { tw_dataset_free(ptr::null_mut()) }; // tolerated
}

#[test]
fn estimation_is_deterministic_and_counts_pairs() {
    let mut handle: *mut TwDataset = ptr::null_mut();
    assert_eq!(
        unsafe { tw_dataset_sample_auc(0.1, 0.9, 40, 16, 77, &mut handle) },
        TwStatus::Ok
    );
    let run = |seed: u64| {
        let mut value = 0.0;
        let mut pairs = 0u64;
        let status = unsafe {
            tw_estimate(
                handle,
                TwKernel::AucIndicator,
                TwScheme::PropSwor,
                4,
                3,
                5,
                seed,
                &mut value,
                &mut pairs,
            )
        };
        assert_eq!(status, TwStatus::Ok);
        (value, pairs)
    };
    let (v1, p1) = run(9);
    let (v2, _) = run(9);
    let (v3, _) = run(10);
    assert_eq!(v1, v2);
    assert_ne!(v1, v3);
    assert_eq!(p1, 4 * 5 * 3);
    unsafe { tw_dataset_free(handle) };
}

#[test]
fn monte_carlo_tracks_theory_through_the_abi() {
    let c = auc_components();
    let mut closed = 0.0;
    assert_eq!(
        unsafe {
            tw_variance(
                TwStrategy::LocalComplete,
                TwScheme::PropSwor,
                &c,
                400,
                40,
                8,
                0,
                0,
                &mut closed,
            )
        },
        TwStatus::Ok
    );
    let (mut mean, mut variance) = (0.0, 0.0);
    let status = unsafe {
        tw_monte_carlo_auc(
            0.1,
            0.9,
            400,
            40,
            TwScheme::PropSwor,
            8,
            1,
            0,
            4000,
            123,
            &mut mean,
            &mut variance,
        )
    };
    assert_eq!(status, TwStatus::Ok);
    assert!((mean - 0.99).abs() < 0.01);
    assert!((variance - closed).abs() / closed < 0.15, "{variance} vs {closed}");
}

#[test]
fn generated_header_declares_the_api() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("include")
        .join("tuplewise.h");
    let text = std::fs::read_to_string(&header).expect("header generated at build time");
    for symbol in [
        "tw_status_name",
        "tw_components_auc",
        "tw_components_product",
        "tw_components_enumerated",
        "tw_auc_mean",
        "tw_variance",
        "tw_pair_budget",
        "tw_dominance_gap",
        "tw_dataset_new",
        "tw_dataset_sample_auc",
        "tw_dataset_free",
        "tw_dataset_shape",
        "tw_complete_two_sample",
        "tw_estimate",
        "tw_monte_carlo_auc",
        "typedef struct TwDataset TwDataset;",
        "} TwComponents;",
        "TW_STATUS_OK",
        "TW_KERNEL_AUC_INDICATOR",
    ] {
        assert!(text.contains(symbol), "header missing {symbol}");
    }
}
