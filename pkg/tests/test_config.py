"""Tests for experiment configuration loading and validation."""

from pathlib import Path

import pytest

from app.config import OPTION_DEFAULTS, load_config, parse_config
from app.errors import ConfigError, ParseError, ValidationError
from app.graphical import safety_radius
from app.walker import walker_window

KERNEL = [[1, [1], 2.0], [0, [-1], 1.0]]


def _document(**extra):
    data = {"name": "unit", "seed": 7, "replicas": 10, "kernel": KERNEL, "environment": {"lambda": 2.0}}
    data.update(extra)
    return data


def test_minimal_config_defaults():
    config = parse_config({"environment": {"lambda": 1.5}})

    assert config.name == "experiment"
    assert config.seed == 0
    assert config.replicas == 100
    assert config.environment.lam == 1.5
    assert config.environment.boundary == "truncate"
    assert config.kernel is None
    assert config.options == OPTION_DEFAULTS


def test_kernel_is_built_from_triples():
    config = parse_config(_document())

    assert config.kernel.gamma == 2.0
    assert config.kernel_table == ((1, (1,), 2.0), (0, (-1,), 1.0))


def test_integer_displacement_shorthand():
    config = parse_config(_document(kernel=[[1, 1, 2.0], [0, -1, 1.0]]))

    assert config.kernel_table == ((1, (1,), 2.0), (0, (-1,), 1.0))


def test_auto_radius_uses_safety_rule():
    config = parse_config(_document(grids={"t": [10.0]}))
    window = walker_window(config.kernel, 10.0)

    assert config.environment.radius_auto
    assert config.environment.resolved_window == window
    assert config.environment.radius == safety_radius(window, 2.0, 10.0, 4.0)


def test_auto_radius_uses_largest_lambda():
    config = parse_config(_document(grids={"t": [5.0], "lambda": [1.0, 3.0]}, environment={"window": 2}))

    assert config.environment.lam == 3.0
    assert config.environment.radius == 2 + 60


def test_explicit_radius_kept():
    config = parse_config(_document(environment={"lambda": 2.0, "radius": 25}, grids={"t": [10.0]}))

    assert not config.environment.radius_auto
    assert config.environment.radius == 25
    assert config.environment.resolve_radius(10.0, 3) == 25


def test_lambda_from_grid():
    config = parse_config(_document(environment={}, grids={"lambda": [1.0, 2.5]}))

    assert config.environment.lam == 2.5


def test_missing_lambda():
    with pytest.raises(ValidationError) as exc:
        parse_config({"environment": {}})

    assert exc.value.field == "environment.lambda"


@pytest.mark.parametrize(
    "document, field",
    [
        ({"colour": "red"}, "colour"),
        ({"seed": -1}, "seed"),
        ({"seed": 2**64}, "seed"),
        ({"replicas": 0}, "replicas"),
        ({"name": "has space"}, "name"),
        ({"grids": {"lambda": [2.0, 1.0]}}, "grids.lambda"),
        ({"grids": {"K": [2.5]}}, "grids.K"),
        ({"grids": {"t": [-1.0]}}, "grids.t"),
        ({"grids": {"omega": [1.0]}}, "grids.omega"),
        ({"options": {"speed": 1}}, "options.speed"),
        ({"options": {"observer": "leftmost"}}, "options.observer"),
        ({"options": {"shared_rep": 1}}, "options.shared_rep"),
        ({"environment": {"lambda": 1.0, "initial": "half"}}, "environment.initial"),
        ({"environment": {"lambda": 1.0, "boundary": "reflecting"}}, "environment.boundary"),
        ({"environment": {"lambda": -1.0}}, "environment.lambda"),
        ({"kernel": [[2, [1], 1.0]]}, "kernel[0].state"),
        ({"kernel": [[1, [1], -1.0], [0, [1], 1.0]]}, "kernel[0].rate"),
        ({"kernel": [[1, [1], 1.0], [1, [1], 2.0]]}, "kernel[1]"),
        ({"kernel": [[1, [1, 0], 1.0]]}, "kernel[0].displacement"),
        ({"kernel": [[1, [1], 1.0], [0, [1], 0.0]]}, "kernel"),
    ],
)
def test_validation_errors_name_field(document, field):
    data = {"environment": {"lambda": 1.0}}
    data.update(document)

    with pytest.raises(ValidationError) as exc:
        parse_config(data)

    assert exc.value.field == field
    assert exc.value.exit_code == 2


def test_gamma_override_below_minimum():
    with pytest.raises(ValidationError) as exc:
        parse_config(_document(driver={"gamma": 1.0}))

    assert exc.value.field == "driver.gamma"


def test_gamma_override_accepted():
    config = parse_config(_document(driver={"gamma": 4.0}))

    assert config.kernel.gamma == 4.0


def test_load_config_from_file(tmp_path):
    path = tmp_path / "speed.toml"
    path.write_text(
        'name = "speed"\nseed = 3\nreplicas = 5\n'
        'kernel = [[1, [1], 2.0], [0, [-1], 1.0]]\n'
        '[environment]\nlambda = 2.0\n[grids]\nt = [10.0, 20.0]\n',
        encoding="utf-8",
    )

    config = load_config(path)

    assert config.name == "speed"
    assert config.grids.t == (10.0, 20.0)
    assert config.source == str(path)


def test_load_config_reports_location(tmp_path):
    path = tmp_path / "broken.toml"
    path.write_text('name = "x"\nseed = = 3\n', encoding="utf-8")

    with pytest.raises(ParseError) as exc:
        load_config(path)

    assert exc.value.location.startswith(f"{path}:2:")
    assert isinstance(exc.value, ConfigError)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ParseError):
        load_config(tmp_path / "absent.toml")


def test_shipped_configs_validate():
    """Every example experiment in configs/ loads."""
    paths = sorted(Path(__file__).resolve().parent.parent.joinpath("configs").glob("*.toml"))

    assert paths
    for path in paths:
        assert load_config(path).name == path.stem


def test_overrides():
    config = parse_config(_document()).with_overrides(seed=11, replicas=None, s=2.5, output_dir="out/x")

    assert config.seed == 11
    assert config.replicas == 10
    assert config.option("s") == 2.5
    assert config.output_path() == Path("out/x")


def test_override_validation():
    config = parse_config(_document())

    with pytest.raises(ValidationError):
        config.with_overrides(replicas=0)
    with pytest.raises(ValidationError):
        config.with_overrides(seed=-5)


def test_default_output_path():
    config = parse_config(_document())

    assert config.output_path("results") == Path("results") / "unit"


def test_to_dict_echoes_resolved_kernel():
    data = parse_config(_document(grids={"t": [10.0]})).to_dict()

    assert data["kernel"]["gamma"] == 2.0
    assert data["kernel_table"] == [[1, [1], 2.0], [0, [-1], 1.0]]
    assert data["environment"]["radius"] > 0
    assert data["output_dir"] is None
