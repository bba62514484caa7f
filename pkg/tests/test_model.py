import json
import math

import pytest

from wrsn.model import (RESULT_COLUMNS, ChargerConfig, RadioParams, ResultRow, SchemaError, SensorNode, energy_rx,
                        energy_tx, instance_from_dict, instance_to_dict, load_instance, read_results, save_instance,
                        write_results)
from wrsn.instances import GeneratorSpec, generate_instance


def test_receive_energy_is_linear_in_payload():
    assert energy_rx(0) == 0
    assert energy_rx(1) == pytest.approx(0.05)
    assert energy_rx(100) == pytest.approx(5.0)


def test_transmit_energy_free_space_branch():
    assert energy_tx(1, 0) == pytest.approx(0.05)
    assert energy_tx(1, 10) == pytest.approx(1.05)


def test_crossover_distance():
    assert RadioParams().d0 == pytest.approx(math.sqrt(0.01 / 1.3e-14))
    assert RadioParams().d0 == pytest.approx(8.7706e5, rel=1e-4)


def test_transmit_energy_switches_to_multipath_past_d0():
    params = RadioParams(eps_fc=0.01, eps_mp=1e-6)  # d0 = 100 m
    assert energy_tx(1, 200, params) == pytest.approx(0.05 + 1e-6 * 200**4)


def test_negative_inputs_rejected():
    with pytest.raises(ValueError):
        energy_rx(-1)
    with pytest.raises(ValueError):
        energy_tx(1, -1)


@pytest.mark.parametrize("kwargs", [dict(e_init=100.0), dict(p=0.0), dict(e_min=20000.0)])
def test_sensor_validation(kwargs):
    base = dict(id=1, x=0.0, y=0.0, e_init=5000.0, p=1.0)
    with pytest.raises(ValueError):
        SensorNode(**{**base, **kwargs})


def test_charger_rejects_non_positive_fields():
    with pytest.raises(ValueError):
        ChargerConfig(U=0)


def test_instance_roundtrip(tmp_path):
    inst = generate_instance(GeneratorSpec("normal", 12, 4))
    path = save_instance(inst, tmp_path / "x.json")
    assert load_instance(path) == inst


def test_missing_charger_block_is_named(tmp_path):
    doc = instance_to_dict(generate_instance(GeneratorSpec(n=3)))
    del doc["charger"]
    with pytest.raises(SchemaError, match="charger"):
        instance_from_dict(doc)


def test_bad_json_reports_position(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema_version": 1,')
    with pytest.raises(SchemaError, match="line 1"):
        load_instance(bad)


def test_sensor_outside_field_rejected():
    doc = instance_to_dict(generate_instance(GeneratorSpec(n=3)))
    doc["sensors"][0]["x"] = 10_000
    with pytest.raises(SchemaError):
        instance_from_dict(doc)


def test_results_csv_columns_and_roundtrip(tmp_path):
    row = ResultRow("r_25_1", "mtbcs", 3, 10, 20, 12.0, 0.25, 1.5)
    out = write_results([row], tmp_path / "res.csv")
    header = out.read_text().splitlines()[0]
    assert header == "instance,algorithm,seed,evals_path,evals_time,dead_ratio,objective,runtime_s"
    assert tuple(header.split(",")) == RESULT_COLUMNS
    assert read_results(out) == [row]


def test_results_append_writes_header_once(tmp_path):
    row = ResultRow("a", "greedy", 1, 1, 0, 0.0, 0.0, 0.0)
    out = tmp_path / "res.csv"
    write_results([row], out, append=True)
    write_results([row], out, append=True)
    assert out.read_text().count("instance,") == 1
    assert len(read_results(out)) == 2


def test_results_bad_header(tmp_path):
    out = tmp_path / "res.csv"
    out.write_text("a,b\n")
    with pytest.raises(SchemaError, match="line 1"):
        read_results(out)


def test_instance_json_is_plain(tmp_path):
    inst = generate_instance(GeneratorSpec(n=2))
    doc = json.loads(save_instance(inst, tmp_path / "i.json").read_text())
    assert set(doc) >= {"schema_version", "charger", "sensors", "T", "base"}
