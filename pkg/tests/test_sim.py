import json

import numpy as np
import pytest

from maip.geometry import build_circular_mask, embed, forward
from maip.sim import (ForwardModel, Inclusion, PhantomSpec, SensorModel, Simulator,
                      SingularSystemError, add_noise, assemble_jacobian, disc_mesh, normalize,
                      replicate_frames, solve_forward, two_inclusion_phantom)
from maip.geometry import MeasurementFrameSet


@pytest.fixture(scope="module")
def sensor():
    return SensorModel()


@pytest.fixture(scope="module")
def model(sensor):
    return ForwardModel(sensor)


@pytest.fixture(scope="module")
def sim():
    return Simulator(SensorModel(), build_circular_mask(32, 32))


def test_protocol_count():
    assert SensorModel().n_measurements == 208
    assert len(SensorModel().protocol()) == 208
    assert SensorModel(electrode_count=8).n_measurements == 40
    with pytest.raises(ValueError):
        SensorModel(electrode_count=3)


def test_protocol_skips_drive_electrodes():
    for d, m in SensorModel().protocol():
        assert not {m, (m + 1) % 16} & {d, (d + 1) % 16}


def test_mesh_valid():
    mesh = disc_mesh()
    assert np.all(mesh.signed_areas() > 0)
    assert mesh.signed_areas().sum() == pytest.approx(np.pi * 0.01, rel=0.01)
    flat = [n for g in mesh.electrodes for n in g]
    assert len(flat) == len(set(flat)) == 16
    assert np.allclose(np.hypot(*mesh.nodes[flat].T), 0.1)


def test_mesh_errors():
    with pytest.raises(ValueError):
        disc_mesh(electrode_count=2)
    with pytest.raises(ValueError):
        disc_mesh(electrode_nodes=2)


def test_homogeneous_measurement_count(sensor):
    sol = solve_forward(sensor, sensor.build_mesh())
    assert sol.measurements.shape == (208,)


def test_reciprocity(model, sensor):
    sol = model.solve(sensor.background_conductivity)
    E = 16
    table = {(d, m): v for (d, m), v in zip(sensor.protocol(), sol.measurements)}
    worst = max(abs(v - table[(m, d)]) / abs(v) for (d, m), v in table.items())
    assert worst <= 1e-10


def test_reciprocity_inhomogeneous(model, sensor):
    rng = np.random.default_rng(0)
    sigma = rng.uniform(1.0, 3.0, model.mesh.n_elements)
    sol = model.solve(sigma)
    table = {(d, m): v for (d, m), v in zip(sensor.protocol(), sol.measurements)}
    worst = max(abs(v - table[(m, d)]) / abs(v) for (d, m), v in table.items())
    assert worst <= 1e-10


def test_conductivity_scaling(model):
    rng = np.random.default_rng(1)
    sigma = rng.uniform(1.0, 3.0, model.mesh.n_elements)
    v1 = model.solve(sigma).measurements
    v3 = model.solve(3.0 * sigma).measurements
    assert np.max(np.abs(v3 * 3.0 - v1) / np.abs(v1)) <= 1e-10


def test_invalid_conductivity(model):
    with pytest.raises(ValueError):
        model.solve(np.zeros(model.mesh.n_elements))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_singular_system_reported():
    mesh = disc_mesh(rings=2)
    mesh.nodes[1:] *= 0.0
    sensor = SensorModel(rings=2)
    with pytest.raises((SingularSystemError, ValueError)):
        ForwardModel(sensor, mesh).solve(1.0)


def test_jacobian_matches_perturbation(sim):
    grid = sim.grid
    J = sim.raw_jacobian
    bg = sim.sensor.background_conductivity
    base = sim.voltages(np.full(sim.mesh.n_elements, bg))
    for k in (100, 380, grid.n_pixels // 2):
        weight = np.asarray(sim.overlap[:, k].todense()).ravel()
        sigma = bg * (1.0 + 0.01 * weight)
        dv = sim.voltages(sigma) - base
        pred = J[:, k] * 0.01 * bg
        top = np.argsort(np.abs(pred))[-20:]
        rel = np.abs(dv[top] - pred[top]) / np.abs(dv[top])
        assert rel.max() <= 0.05


def test_jacobian_rotation_symmetry(sim):
    # a quarter turn maps the pixel grid onto itself; it is 4 electrode pitches
    grid = sim.grid
    J = sim.raw_jacobian
    proto = [tuple(p) for p in sim.sensor.protocol()]
    index = {p: i for i, p in enumerate(proto)}
    frames = embed(J.T, grid_projection(grid))
    rotated = np.rot90(frames, 1, axes=(1, 2))
    worst = 0.0
    for i, (d, m) in enumerate(proto):
        j = index[((d + 4) % 16, (m + 4) % 16)]
        diff = np.abs(frames[j] - rotated[i]).max() / np.abs(frames[j]).max()
        worst = max(worst, diff)
    assert worst <= 0.02


def grid_projection(grid):
    from maip.geometry import build_projection
    return build_projection(grid)


def test_jacobian_zero_perturbation(sim):
    J = assemble_jacobian(sim.sensor, sim.mesh, sim.grid)
    assert not forward(J.J, np.zeros((sim.grid.n_pixels, 1))).any()
    assert J.J.shape == (208, sim.grid.n_pixels)


def test_normalize_examples():
    ref = np.array([1.0, -2.0, 0.5])
    V, J = normalize(ref.copy(), ref, np.ones((3, 2)), background=2.0)
    assert not V.any()
    V2, _ = normalize(2 * ref, ref, None)
    assert np.array_equal(V2, np.ones(3))
    assert np.allclose(J, 2.0 / ref[:, None])
    with pytest.raises(ValueError):
        normalize(ref, np.array([1.0, 0.0, 1.0]), None)


def test_linearization_error_small_contrast(sim):
    ph = PhantomSpec([1e3], [Inclusion("circle", [2.1], center=(0.02, 0.01), radius=0.025)])
    data = sim.synthesize(ph, "TD")
    pred = forward(data.sensitivity.J, data.truth.vectors)
    err = np.linalg.norm(pred - data.measurements.V) / np.linalg.norm(data.measurements.V)
    assert err <= 0.10


def test_td_background_phantom_is_zero(sim):
    ph = PhantomSpec([1e3, 1e4], [Inclusion("circle", [2.0, 2.0], radius=0.02)])
    data = sim.synthesize(ph, "TD")
    assert np.max(np.abs(data.measurements.V)) <= 1e-12
    assert not data.truth.vectors.any()


def test_fd_flat_contrast_is_zero(sim):
    ph = PhantomSpec([1e3, 1e4, 1e5], [Inclusion("circle", [3.0, 3.0, 3.0], radius=0.03)])
    data = sim.synthesize(ph, "FD", reference=1e3)
    assert data.measurements.n_frames == 2
    assert data.measurements.V.shape == (208, 2)
    assert not data.measurements.V.any()
    assert not data.truth.vectors.any()


def test_fd_zero_column_iff_same_field(sim):
    ph = PhantomSpec([1e3, 1e4, 1e5], [Inclusion("circle", [2.5, 2.5, 3.0], radius=0.03)])
    V = sim.synthesize(ph, "FD", reference=1e3).measurements.V
    assert not V[:, 0].any()
    assert np.abs(V[:, 1]).max() > 1e-4


def test_fd_reference_not_in_schedule(sim):
    with pytest.raises(ValueError):
        sim.synthesize(two_inclusion_phantom(), "FD", reference=123.0)


def test_td_truth_is_relative_change(sim):
    data = sim.synthesize(two_inclusion_phantom(), "TD")
    assert data.measurements.V.shape == (208, 4)
    # the largest value is the second inclusion at the top frequency: (3.2 - 2) / 2
    assert data.truth.vectors.max() == pytest.approx(0.6)
    assert data.truth.vectors.min() == 0.0


def test_replicate_frames():
    fs = MeasurementFrameSet(np.arange(5.0)[:, None], [1e3], "TD")
    rep = replicate_frames(fs, 4)
    assert rep.V.shape == (5, 4)
    assert all(np.array_equal(rep.V[:, 0], rep.V[:, i]) for i in range(4))


def test_add_noise_infinite_snr():
    V = np.random.default_rng(2).standard_normal((10, 2))
    assert np.array_equal(add_noise(V, np.inf, seed=0), V)


def test_add_noise_empirical_snr():
    V = np.random.default_rng(3).standard_normal((10000, 1))
    noisy = add_noise(V, 40.0, seed=5)
    snr = 10 * np.log10(np.mean(V ** 2) / np.mean((noisy - V) ** 2))
    assert abs(snr - 40.0) <= 0.5


def test_add_noise_seeded():
    V = np.random.default_rng(4).standard_normal((20, 3))
    a = add_noise(V, 30.0, seed=9)
    assert a.tobytes() == add_noise(V, 30.0, seed=9).tobytes()
    assert a.shape == V.shape
    assert a.tobytes() != add_noise(V, 30.0, seed=10).tobytes()


def test_add_noise_zero_column():
    V = np.zeros((5, 2))
    V[:, 0] = 1.0
    with pytest.raises(ValueError):
        add_noise(V, 20.0, seed=0)


def test_phantom_json_round_trip(tmp_path):
    ph = PhantomSpec([1e3, 1e4], [
        Inclusion("circle", [2.5, 2.6], center=(0.01, 0.0), radius=0.02),
        Inclusion("rectangle", [1.0, 1.5], center=(-0.03, 0.02), size=(0.02, 0.01), angle=0.3),
        Inclusion("triangle", [3.0, 3.5], vertices=((0, -0.05), (0.03, -0.02), (-0.02, -0.03))),
    ])
    path = tmp_path / "p.json"
    ph.to_json(path)
    again = PhantomSpec.from_json(path)
    assert again.to_dict() == ph.to_dict()
    assert json.loads(path.read_text())["frequencies"] == [1e3, 1e4]


def test_phantom_validation():
    with pytest.raises(ValueError):
        Inclusion("circle", [-1.0], radius=0.01)
    with pytest.raises(ValueError):
        Inclusion("hexagon", [1.0])
    with pytest.raises(ValueError):
        PhantomSpec([1e3, 1e4], [Inclusion("circle", [2.5], radius=0.01)])


def test_later_inclusion_wins():
    ph = PhantomSpec([1e3], [Inclusion("circle", [3.0], radius=0.05),
                             Inclusion("circle", [5.0], radius=0.01)])
    pts = np.array([[0.0, 0.0], [0.03, 0.0], [0.09, 0.0]])
    assert list(ph.conductivity_at(pts, 0)) == [5.0, 3.0, 2.0]
