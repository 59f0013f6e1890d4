#![no_main]

use libfuzzer_sys::fuzz_target;
use piezo_omit::analysis::find_windows_in;
use piezo_omit::spectrum_csv::{omega_b_of, read_spectrum, write_spectrum};

fuzz_target!(|data: &[u8]| {
    let Ok(rows) = read_spectrum(data) else {
        return;
    };
    let mut out = Vec::new();
    write_spectrum(&mut out, &rows).unwrap();
    assert_eq!(read_spectrum(&out[..]).unwrap(), rows);

    let axis: Vec<f64> = rows.iter().map(|r| r.delta_over_omega_b).collect();
    let absorption: Vec<f64> = rows.iter().map(|r| r.re_eps_t).collect();
    if let Ok(wb) = omega_b_of(&rows) {
        let _ = find_windows_in(&axis, &absorption, wb);
    }
});
