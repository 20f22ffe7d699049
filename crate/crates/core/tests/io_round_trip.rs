use std::fs::File;
use std::io::{BufReader, BufWriter, Write};

use semiclassical::classical::{integrate_flow, HamiltonianModel};
use semiclassical::io::{
    flow_map_channels, load_symbol, read_channels, read_operator, save_symbol, write_channels, write_operator,
};
use semiclassical::phase_space::AnalyticSymbol;
use semiclassical::quantum::{hamiltonian_operator, weyl_quantize, PositionGrid};

#[test]
fn symbol_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.sym");
    let qg = PositionGrid::new(5.0, 64, 0.3).unwrap();
    let b = AnalyticSymbol::gaussian([0.5, -0.2], [0.7, 0.8]).to_symbol(qg.phase_grid(), 0.3).unwrap();
    save_symbol(&path, &b).unwrap();
    let back = load_symbol(&path).unwrap();
    assert_eq!(back.values(), b.values());
    assert_eq!(back.hbar(), b.hbar());
    assert!(back.is_real_observable());
    // The reloaded symbol quantizes to the same operator.
    let a = weyl_quantize(&b, &qg).unwrap();
    let c = weyl_quantize(&back, &qg).unwrap();
    assert_eq!(a.matrix(), c.matrix());
}

#[test]
fn operator_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.op");
    let qg = PositionGrid::new(4.0, 32, 0.25).unwrap();
    let h = hamiltonian_operator(&HamiltonianModel::from_name("gaussian-well").unwrap(), &qg).unwrap();
    let mut w = BufWriter::new(File::create(&path).unwrap());
    write_operator(&mut w, &h).unwrap();
    w.flush().unwrap();
    drop(w);
    let back = read_operator(&mut BufReader::new(File::open(&path).unwrap())).unwrap();
    assert_eq!(back.matrix(), h.matrix());
    assert_eq!(back.grid(), h.grid());
    assert_eq!(back.is_hermitian(), h.is_hermitian());
}

#[test]
fn flow_map_channels_round_trip() {
    let qg = PositionGrid::new(3.0, 16, 0.4).unwrap();
    let grid = qg.phase_grid();
    let map = integrate_flow(&HamiltonianModel::harmonic(), &grid, 0.8, 1e-10).unwrap();
    let mut buf = Vec::new();
    write_channels(&mut buf, &flow_map_channels(&map, 0.4)).unwrap();
    let back = read_channels(&mut buf.as_slice()).unwrap();
    assert_eq!(back.channels.len(), 2);
    for (k, z) in map.images().iter().enumerate() {
        assert_eq!(back.channels[0][k].re, z[0]);
        assert_eq!(back.channels[1][k].re, z[1]);
    }
}
