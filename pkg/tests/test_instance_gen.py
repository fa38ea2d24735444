import math

import numpy as np
import pytest

from stieltjes_lab.app.errors import BadPoint, GridDegenerate, InputError
from stieltjes_lab.app.serialization import dumps_json
from stieltjes_lab.services.instance_gen import (
    arc_grid,
    generate_instances,
    make_rng,
    parse_grid,
    random_construction,
    random_hermitian_contraction,
    random_psd,
    validate_grid,
)


def test_generation_is_deterministic():
    first = generate_instances(7, 2, 3)
    second = generate_instances(7, 2, 3)
    assert set(first) == {"system", "construction"}
    for name in first:
        assert dumps_json(first[name]) == dumps_json(second[name])
    assert dumps_json(generate_instances(8, 2, 3)["system"]) != dumps_json(first["system"])


def test_generation_needs_positive_dimensions():
    with pytest.raises(InputError):
        generate_instances(1, 0, 3)


def test_random_building_blocks(rng):
    H = random_psd(rng, 4, rank=2)
    assert np.linalg.matrix_rank(H, tol=1e-10) == 2
    assert np.linalg.eigvalsh(H).min() >= -1e-12
    F = random_hermitian_contraction(rng, 3)
    np.testing.assert_allclose(F, F.conj().T, atol=1e-14)
    assert np.linalg.norm(F, 2) < 1.0


def test_random_construction_with_z():
    cons = random_construction(make_rng(3), 2, 3, random_z=True)
    assert cons.Z.shape == (2, 2)
    assert cons.bounded


def test_arc_grid_layout():
    points = arc_grid([1.0, 2.0], 5, 0.2)
    assert len(points) == 5
    assert sorted(round(abs(z), 12) for z in points) == [1.0, 1.0, 1.0, 2.0, 2.0]
    for z in points:
        angle = np.angle(z) % (2 * math.pi)
        assert 0.2 - 1e-12 <= angle <= 2 * math.pi - 0.2 + 1e-12
    assert arc_grid([3.0], 1, 0.2) == [pytest.approx(-3.0)]


def test_arc_grid_rejects_bad_layouts():
    with pytest.raises(GridDegenerate):
        arc_grid([], 4, 0.2)
    with pytest.raises(GridDegenerate):
        arc_grid([1.0], 4, 0.0)
    with pytest.raises(GridDegenerate):
        arc_grid([1e-4], 4, 0.2)


def test_parse_grid_variants():
    assert len(parse_grid("default")) == 24
    assert len(parse_grid(None)) == 24
    assert len(parse_grid("arcs:1,2:6")) == 6
    assert parse_grid("points:-1+1i, -2") == [complex(-1, 1), complex(-2, 0)]


@pytest.mark.parametrize(
    "text, error",
    [
        ("points:1+0j", BadPoint),
        ("points:0.5+0.0001j", BadPoint),
        ("points:", GridDegenerate),
        ("arcs:1", InputError),
        ("arcs:x:4", InputError),
        ("arcs:-1:4", GridDegenerate),
        ("spiral:3", InputError),
    ],
)
def test_parse_grid_errors(text, error):
    with pytest.raises(error):
        parse_grid(text)


def test_validate_grid_keeps_good_points():
    assert validate_grid([-1.0, 0.5j]) == [complex(-1.0), 0.5j]
