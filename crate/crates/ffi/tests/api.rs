use std::ffi::CStr;
use std::ptr;

use doa_omp_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(doa_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn dictionary(n: usize) -> *mut DoaDictionary {
    let mut d = ptr::null_mut();
    let s = unsafe { doa_dictionary_new(n, 0.5, -90.0, 90.0, 1.0, &mut d) };
    assert_eq!(s, DoaStatus::Ok);
    assert!(!d.is_null());
    d
}

#[test]
fn dictionary_shape_and_angles() {
    let d = dictionary(15);
    unsafe {
        assert_eq!(doa_dictionary_sensors(d), 15);
        assert_eq!(doa_dictionary_atoms(d), 181);
        let mut angles = vec![0.0; 181];
        assert_eq!(
            doa_dictionary_angles(d, angles.as_mut_ptr(), 181),
            DoaStatus::Ok
        );
        assert_eq!(angles[0], -90.0);
        assert_eq!(angles[90], 0.0);
        assert_eq!(angles[180], 90.0);
        assert_eq!(
            doa_dictionary_angles(d, angles.as_mut_ptr(), 10),
            DoaStatus::BufferTooSmall
        );
        assert!(last_error().contains("181"));
        doa_dictionary_free(d);
    }
}

#[test]
fn bad_arguments_are_reported() {
    let mut d = ptr::null_mut();
    unsafe {
        assert_eq!(
            doa_dictionary_new(1, 0.5, -90.0, 90.0, 1.0, &mut d),
            DoaStatus::Domain
        );
        assert!(d.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(
            doa_dictionary_new(4, 0.5, -90.0, 90.0, 1.0, ptr::null_mut()),
            DoaStatus::NullPointer
        );
        assert!(last_error().contains("out"));
        let mut m = 0;
        assert_eq!(
            doa_max_identifiable_sources(15, 16, &mut m),
            DoaStatus::Domain
        );
        doa_dictionary_free(ptr::null_mut());
        doa_omp_result_free(ptr::null_mut());
        assert_eq!(doa_dictionary_atoms(ptr::null()), 0);
    }
}

#[test]
fn steering_vector_broadside_is_ones() {
    let mut re = [0.0; 4];
    let mut im = [9.0; 4];
    unsafe {
        assert_eq!(
            doa_steering_vector(4, 0.5, 0.0, re.as_mut_ptr(), im.as_mut_ptr(), 4),
            DoaStatus::Ok
        );
    }
    assert_eq!(re, [1.0; 4]);
    assert!(im.iter().all(|&v| v == 0.0));
    unsafe {
        assert_eq!(
            doa_steering_vector(4, 0.5, 91.0, re.as_mut_ptr(), im.as_mut_ptr(), 4),
            DoaStatus::Domain
        );
    }
}

#[test]
fn identifiability_bound() {
    let mut m = 0;
    for (r, want) in [(1, 7), (3, 8), (15, 14)] {
        assert_eq!(
            unsafe { doa_max_identifiable_sources(15, r, &mut m) },
            DoaStatus::Ok
        );
        assert_eq!(m, want);
    }
    assert!(last_error().is_empty());
}

#[test]
fn omp_recovers_two_sources() {
    let d = dictionary(15);
    let mut a = [0.0; 15];
    let mut b = [0.0; 15];
    let mut c = [0.0; 15];
    let mut e = [0.0; 15];
    unsafe {
        doa_steering_vector(15, 0.5, -50.0, a.as_mut_ptr(), b.as_mut_ptr(), 15);
        doa_steering_vector(15, 0.5, 60.0, c.as_mut_ptr(), e.as_mut_ptr(), 15);
    }
    let y_re: Vec<f64> = a.iter().zip(&c).map(|(x, y)| x + y).collect();
    let y_im: Vec<f64> = b.iter().zip(&e).map(|(x, y)| x + y).collect();

    let mut res = ptr::null_mut();
    unsafe {
        assert_eq!(
            doa_omp_recover(d, y_re.as_ptr(), y_im.as_ptr(), 15, 2, 0.0, &mut res),
            DoaStatus::Ok
        );
        assert_eq!(doa_omp_result_support_len(res), 2);
        assert_eq!(doa_omp_result_iterations(res), 2);

        let mut support = [0usize; 2];
        assert_eq!(
            doa_omp_result_support(res, support.as_mut_ptr(), 2),
            DoaStatus::Ok
        );
        support.sort_unstable();
        assert_eq!(support, [40, 150]);

        let mut cre = [0.0; 2];
        let mut cim = [0.0; 2];
        assert_eq!(
            doa_omp_result_coefficients(res, cre.as_mut_ptr(), cim.as_mut_ptr(), 2),
            DoaStatus::Ok
        );
        for (r, i) in cre.iter().zip(&cim) {
            assert!((r - 1.0).abs() < 1e-9 && i.abs() < 1e-9);
        }

        let mut norms = [0.0; 3];
        assert_eq!(
            doa_omp_result_residual_norms(res, norms.as_mut_ptr(), 3),
            DoaStatus::Ok
        );
        assert!(norms[0] > norms[1] && norms[1] >= norms[2]);
        assert!(norms[2] < 1e-9 * norms[0]);

        let mut angles = [0.0; 3];
        let mut count = 0;
        let mut short = 0;
        assert_eq!(
            doa_omp_result_estimate_doas(res, d, 3, angles.as_mut_ptr(), 3, &mut count, &mut short),
            DoaStatus::Ok
        );
        assert_eq!((count, short), (2, 1));
        assert_eq!(&angles[..2], &[-50.0, 60.0]);

        doa_omp_result_free(res);
        doa_dictionary_free(d);
    }
}

#[test]
fn omp_rejects_length_mismatch_and_excess_sparsity() {
    let d = dictionary(4);
    let y = [1.0; 4];
    let mut res = ptr::null_mut();
    unsafe {
        assert_eq!(
            doa_omp_recover(d, y.as_ptr(), y.as_ptr(), 3, 1, 0.0, &mut res),
            DoaStatus::Dimension
        );
        assert_eq!(
            doa_omp_recover(d, y.as_ptr(), y.as_ptr(), 4, 5, 0.0, &mut res),
            DoaStatus::Infeasible
        );
        assert!(res.is_null());
        doa_dictionary_free(d);
    }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(doa_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
