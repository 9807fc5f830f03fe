use pstchain::*;

#[test]
fn probe_fits() {
    // Delta fit: deterministic, fast
    let scan = scan_chain_length(
        ScanFamily::Unentangled110, ScanPerturbation::NnnAveraged,
        &[0.01, 0.05, 0.1], (4, 15), 1, 0).unwrap();
    let pts: Vec<(usize, f64, f64)> = scan.rows.iter()
        .map(|r| (r.coords[0] as usize, r.coords[1], r.mean)).collect();
    for p in [0.05] {
        for r in pts.iter().filter(|r| r.1 == p) {
            println!("N={} delta={} F={:.4}", r.0, r.1, r.2);
        }
    }
    let fit = fit_decay(&pts, 0.05).unwrap();
    println!("Delta0 (unentangled) = {:.4}  (caption 0.21)", fit.p0);

    // epsilon fit with reduced realizations for a quick look
    let scan = scan_chain_length(
        ScanFamily::Unentangled110, ScanPerturbation::SiteEnergies,
        &[0.05, 0.1, 0.2], (4, 15), 60, 0).unwrap();
    let pts: Vec<(usize, f64, f64)> = scan.rows.iter()
        .map(|r| (r.coords[0] as usize, r.coords[1], r.mean)).collect();
    let fit = fit_decay(&pts, 0.05).unwrap();
    println!("eps0 (unentangled, 60 real) = {:.4}  (caption 1.12)", fit.p0);

    // type (i) and (ii) delta fits
    let scan = scan_chain_length(
        ScanFamily::BellType1, ScanPerturbation::NnnAveraged,
        &[0.01, 0.05, 0.1], (4, 15), 1, 0).unwrap();
    let pts: Vec<(usize, f64, f64)> = scan.rows.iter()
        .map(|r| (r.coords[0] as usize, r.coords[1], r.mean)).collect();
    println!("Delta0 (type i) = {:.4}  (caption 0.31)", fit_decay(&pts, 0.05).unwrap().p0);

    let scan = scan_chain_length(
        ScanFamily::GateType2, ScanPerturbation::NnnAveraged,
        &[0.01, 0.05, 0.1], (4, 15), 1, 0).unwrap();
    let pts: Vec<(usize, f64, f64)> = scan.rows.iter()
        .map(|r| (r.coords[0] as usize, r.coords[1], r.mean)).collect();
    println!("Delta0 (type ii) = {:.4}  (caption 0.63)", fit_decay(&pts, 0.05).unwrap().p0);
}
