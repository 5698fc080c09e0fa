import numpy as np
import pytest

from conftest import make_dataset
from thermident.dataset import concat, read_dataset, write_dataset
from thermident.exceptions import DatasetFormatError, IrregularSpacingError, MissingCellError
from thermident.plant import ThermostatConfig, WeatherConfig, gen_weather, generate_dataset, house_plant


@pytest.fixture
def small():
    w = gen_weather(WeatherConfig(n_days=1, noise_std=0.2, rng_seed=2))
    return generate_dataset(house_plant(), ThermostatConfig(setpoint=23, cool_capacity=5000), w,
                            meas_noise_std=0.05, rng_seed=3)


def test_round_trip_is_exact(tmp_path, small):
    path = tmp_path / "d.csv"
    write_dataset(small, path, {"config_hash": "abc"})
    back = read_dataset(path)
    assert back.equals(small)
    assert back.t_s == 600.0 and back.start == small.start
    assert back.metadata["config_hash"] == "abc"
    write_dataset(back, tmp_path / "e.csv", {"config_hash": "abc"})
    assert (tmp_path / "e.csv").read_text() == path.read_text()


def test_t_s_inferred_without_metadata(tmp_path, small):
    path = tmp_path / "d.csv"
    write_dataset(small, path)
    text = "\n".join(line for line in path.read_text().splitlines() if not line.startswith("#"))
    path.write_text(text + "\n")
    assert read_dataset(path).t_s == 600.0


def _lines(tmp_path, ds):
    path = tmp_path / "d.csv"
    write_dataset(ds, path)
    return path, path.read_text().splitlines()


def test_gap_reports_row(tmp_path, small):
    path, lines = _lines(tmp_path, small)
    first = next(i for i, line in enumerate(lines) if line.startswith("timestamp"))
    del lines[first + 11]  # drop the eleventh sample
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(IrregularSpacingError) as err:
        read_dataset(path)
    assert err.value.row == first + 12  # 1-based line of the first late sample


def test_malformed_header(tmp_path, small):
    path, lines = _lines(tmp_path, small)
    first = next(i for i, line in enumerate(lines) if line.startswith("timestamp"))
    lines[first] = lines[first].replace("t_am", "ambient")
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetFormatError, match="header"):
        read_dataset(path)


def test_missing_cell(tmp_path, small):
    path, lines = _lines(tmp_path, small)
    first = next(i for i, line in enumerate(lines) if line.startswith("timestamp"))
    cells = lines[first + 3].split(",")
    cells[5] = ""
    lines[first + 3] = ",".join(cells)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(MissingCellError) as err:
        read_dataset(path)
    assert err.value.row == first + 4 and err.value.column == "t_am"


def test_dataset_validation():
    with pytest.raises(DatasetFormatError):
        make_dataset([1.0, 2.0], t_am=[1.0])
    with pytest.raises(MissingCellError):
        make_dataset([1.0, np.nan])
    with pytest.raises(DatasetFormatError):
        make_dataset([1.0], t_s=0)


def test_slicing_and_concat(small):
    a, b = small[:100], small[100:]
    assert len(a) == 100 and b.start == small.timestamps()[100]
    assert concat(a, b).equals(small)
    assert len(small.last_days(0.5)) == 72
    with pytest.raises(ValueError):
        concat(b, a)
