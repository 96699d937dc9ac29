import math

import pytest

from xyresponse.errors import InvalidParameters
from xyresponse.params import INF, ModelParams, Sector, format_size, parse_size


def test_defaults_and_derived_fields():
    p = ModelParams(0.4, 0.7)
    assert p.infinite
    assert p.sector is Sector.SYMMETRIC
    assert p.factorizing_field == pytest.approx(math.sqrt(0.84))
    assert p.critical_field == 1.0
    assert p.beta == math.inf
    assert ModelParams(0.4, 0.7, 0.5).beta == 2.0


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(gamma=-0.1, h=0.5),
        dict(gamma=1.2, h=0.5),
        dict(gamma=0.5, h=-1.0),
        dict(gamma=0.5, h=0.5, temperature=-0.1),
        dict(gamma=0.5, h=0.5, size=1),
        dict(gamma=0.5, h=0.5, size=2.5),
        dict(gamma=0.5, h=float("nan")),
    ],
)
def test_invalid_points(kwargs):
    with pytest.raises(InvalidParameters):
        ModelParams(**kwargs)


@pytest.mark.parametrize(
    "kwargs, word",
    [
        (dict(gamma=0.5, h=0.5, size=10), "infinite"),
        (dict(gamma=0.5, h=0.5, temperature=0.1), "temperature"),
        (dict(gamma=0.0, h=0.5), "gamma"),
        (dict(gamma=0.5, h=1.2), "h < 1"),
    ],
)
def test_broken_sector_constraints(kwargs, word):
    with pytest.raises(InvalidParameters, match=word):
        ModelParams(sector="broken", **kwargs)


def test_size_parsing():
    assert parse_size("inf") == INF
    assert parse_size(" Infinity ") == INF
    assert parse_size("12") == 12
    assert parse_size(8.0) == 8
    assert format_size(INF) == "inf"
    assert format_size(6) == "6"


def test_dict_round_trip():
    p = ModelParams(0.3, 0.9, 0.2, 16)
    assert ModelParams.from_dict(p.to_dict()) == p
    b = ModelParams(0.3, 0.9, sector="broken")
    assert ModelParams.from_dict(b.to_dict()) == b
    assert b.symmetric().sector is Sector.SYMMETRIC
