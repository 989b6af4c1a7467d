import numpy as np

from floquet_lattice import SystemSpec, basis_state, effective_params, \
    effective_propagate
from floquet_lattice.csvio import fmt, write_trajectory


def test_fmt_round_trips_floats():
    values = [0.1, 1.0 / 3.0, 2.40482555769577, 1e-300, -1e16, 0.0,
              123456.789012345678, 5.52007811028631]
    for v in values:
        assert float(fmt(v)) == v
    assert fmt(3) == "3"
    assert fmt(np.float64(0.25)) == "0.25"


def test_trajectory_csv_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    times = np.linspace(0.0, 1.0, 7)
    amps = rng.normal(size=(7, 3)) + 1j * rng.normal(size=(7, 3))
    path = tmp_path / "traj.csv"
    write_trajectory(path, times, amps)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,re_a1,im_a1,re_a2,im_a2,re_a3,im_a3"
    for i, line in enumerate(lines[1:]):
        cells = line.split(",")
        assert float(cells[0]) == times[i]
        for j in range(3):
            assert float(cells[1 + 2 * j]) == amps[i, j].real
            assert float(cells[2 + 2 * j]) == amps[i, j].imag


def test_rotating_frame_marker(tmp_path):
    spec = SystemSpec(n_sites=3, omega0=1.0, nu0=0.0, a1=22.0, a2=0.0,
                      omega=10.0)
    params = effective_params(spec, basis_state(3, 1))
    traj = effective_propagate(params, basis_state(3, 1), t_final=5.0,
                               n_samples=11)
    path = tmp_path / "rotating.csv"
    write_trajectory(path, traj.times, traj.amplitudes, comment="frame=rotating")
    lines = path.read_text().splitlines()
    assert lines[0] == "# frame=rotating"
    assert lines[1].startswith("t,re_a1")
    assert len(lines) == 13
