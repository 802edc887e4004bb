use idla_core::shellgeom::window_coverage;
use idla_core::ShellTable;

fn first_wide_shell(t: &ShellTable, h: f64) -> usize {
    (1..t.len()).find(|&j| t.shell(j).h >= h).expect("table reaches a wide shell")
}

#[test]
fn wide_shell_is_covered_with_shared_cells() {
    let t = ShellTable::build(3, 10.0, 4500.0).unwrap();
    let j = first_wide_shell(&t, 8.0);
    let (cover, scan) = window_coverage::<3>(&t, j, 14.0).unwrap();
    assert!(scan.scanned > 5000, "{scan:?}");
    assert_eq!(scan.uncovered, 0, "{scan:?}");
    assert_eq!(scan.without_shared_cell, 0, "{scan:?}");
    assert!(cover.centers.len() > 10);
}

#[test]
fn thin_shells_leave_gaps() {
    // tile cones of aperture h/5 are narrower than the lattice spacing here
    let t = ShellTable::build(3, 10.0, 40.0).unwrap();
    let (_, scan) = window_coverage::<3>(&t, 1, 6.0).unwrap();
    assert!(scan.uncovered > 0);
}
