use std::ffi::CStr;
use std::ptr;

use pcfpair_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 512];
    let n = unsafe { pcf_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n < buf.len());
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn default_model_round_trip() {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { pcf_model_default(&mut m) }, PcfStatus::Ok);
    let mut zdw = 0.0;
    assert_eq!(unsafe { pcf_model_zdw(m, &mut zdw) }, PcfStatus::Ok);
    assert!((zdw - 760.0).abs() < 0.1);

    let config = pcf_fwm_config_default();
    let (mut ls, mut li, mut n) = ([0.0; 8], [0.0; 8], 0usize);
    let st = unsafe { pcf_branch_solutions(m, config, ls.as_mut_ptr(), li.as_mut_ptr(), 8, &mut n) };
    assert_eq!(st, PcfStatus::Ok);
    assert_eq!(n, 1);
    assert!((ls[0] - 660.0).abs() < 5.0);
    let mut conj = 0.0;
    assert_eq!(unsafe { pcf_conjugate_wavelength(760.4, ls[0], &mut conj) }, PcfStatus::Ok);
    assert!(((conj - li[0]) / li[0]).abs() < 1e-9);

    // too small a buffer reports the needed size
    let st = unsafe { pcf_branch_solutions(m, config, ls.as_mut_ptr(), li.as_mut_ptr(), 0, &mut n) };
    assert_eq!(st, PcfStatus::ErrBufferTooSmall);
    assert_eq!(n, 1);

    let mut dk = 1.0;
    assert_eq!(unsafe { pcf_delta_k(m, 760.4, 0.0, &mut dk) }, PcfStatus::Ok);
    assert_eq!(dk, 0.0);
    assert_eq!(unsafe { pcf_delta_k(m, 760.4, 1e17, &mut dk) }, PcfStatus::ErrRange);
    assert!(last_error().contains("outside model range"));
    unsafe { pcf_model_free(m) };
}

#[test]
fn table_and_file_errors() {
    let l = [700.0, 750.0, 800.0];
    let d = [-1.0, 0.0, 1.0];
    let mut m = ptr::null_mut();
    let st = unsafe { pcf_model_from_table(l.as_ptr(), d.as_ptr(), 3, &mut m) };
    assert_eq!(st, PcfStatus::ErrParse);
    assert!(m.is_null());
    let path = c"/nonexistent/gvd.csv";
    assert_eq!(unsafe { pcf_model_from_csv(path.as_ptr(), &mut m) }, PcfStatus::ErrIo);
    assert_eq!(unsafe { pcf_model_zdw(ptr::null(), ptr::null_mut()) }, PcfStatus::ErrNull);

    let l: Vec<f64> = (0..50).map(|i| 600.0 + 10.0 * i as f64).collect();
    let d: Vec<f64> = l.iter().map(|x| 0.5 * (x - 800.0)).collect();
    assert_eq!(unsafe { pcf_model_from_table(l.as_ptr(), d.as_ptr(), l.len(), &mut m) }, PcfStatus::Ok);
    let mut zdw = 0.0;
    assert_eq!(unsafe { pcf_model_zdw(m, &mut zdw) }, PcfStatus::Ok);
    assert!((zdw - 800.0).abs() < 1e-3);
    unsafe { pcf_model_free(m) };
}

#[test]
fn fringe_fit_and_closed_forms() {
    let k_p = 2.0 * std::f64::consts::PI / 760.4e-9;
    let x: Vec<f64> = (0..24).map(|i| i as f64 * 380.2 / 24.0).collect();
    let y: Vec<f64> = x.iter().map(|dx| pcf_coincidence_full(k_p, 0.6 + dx * 1e-9, 1.0)).collect();
    let mut fit = PcfFringeFit::default();
    assert_eq!(unsafe { pcf_fit_visibility(x.as_ptr(), y.as_ptr(), 24, 380.2, 0, &mut fit) }, PcfStatus::Ok);
    assert!((fit.visibility - 0.5).abs() < 1e-9);
    assert_eq!(pcf_coincidence_postselected(k_p, 0.0, 1.0), 2.0);
    assert_eq!(unsafe { pcf_fit_visibility(x.as_ptr(), y.as_ptr(), 4, 380.2, 0, &mut fit) }, PcfStatus::ErrInvalid);
}

#[test]
fn simulation_handle() {
    let tau = 0.6 / 299_792_458.0;
    let params = PcfSourceParams {
        pair_rate: 2e4,
        eta_s: 1.0,
        eta_i: 1.0,
        dark_s: 0.0,
        dark_i: 0.0,
        background_s: 0.0,
        background_i: 0.0,
        mu: 1.0,
        tau,
        jitter_sigma: 150e-12,
    };
    let gate = PcfGateConfig {
        t_gate: 6e-9,
        tac_bin: 50e-12,
        tac_range: 10e-9,
    };
    let dx: Vec<f64> = (0..8).map(|i| i as f64 * 47.525).collect();
    let mut scan = ptr::null_mut();
    let st = unsafe { pcf_simulate_scan(&params, &gate, 760.4, 0.6, dx.as_ptr(), dx.len(), 0.05, 3, &mut scan) };
    assert_eq!(st, PcfStatus::Ok);
    assert_eq!(unsafe { pcf_scan_len(scan) }, 8);
    let (mut wide, mut narrow) = ([0u64; 8], [0u64; 8]);
    assert_eq!(unsafe { pcf_scan_counts(scan, 6e-9, wide.as_mut_ptr(), 8) }, PcfStatus::Ok);
    assert_eq!(unsafe { pcf_scan_counts(scan, 1.5e-9, narrow.as_mut_ptr(), 8) }, PcfStatus::Ok);
    assert!(wide.iter().zip(&narrow).all(|(w, n)| w >= n));
    assert_eq!(unsafe { pcf_scan_counts(scan, 6e-9, wide.as_mut_ptr(), 2) }, PcfStatus::ErrBufferTooSmall);
    unsafe { pcf_scan_free(scan) };
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(pcf_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
